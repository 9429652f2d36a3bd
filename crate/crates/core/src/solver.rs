//! Brute-force search over the missing seed bits.
//!
//! The index space `[0, 2^d)` is handed out in contiguous chunks from a shared
//! dispatcher. Workers pull chunks until one of them finds a seed whose
//! checksum matches, the caller cancels, or the space runs out. With a single
//! worker the candidates are visited in ascending order, so
//! `candidates_tried` is the rank of the answer plus one.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::kdf::{self, KdfSuite};
use crate::wrap::{Checksum, PartialSeed, Seed};

#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::Release);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::Acquire)
    }
}

/// Solver knobs shared by unwrap, seed recovery and the service.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverConfig {
    pub workers: usize,
    /// `None` picks the suite default.
    pub chunk: Option<u64>,
    /// Largest difficulty the caller is willing to search.
    pub max_difficulty: u32,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            workers: default_workers(),
            chunk: None,
            max_difficulty: crate::wrap::Difficulty::DEFAULT_MAX,
        }
    }
}

impl SolverConfig {
    pub fn single_threaded() -> Self {
        Self {
            workers: 1,
            ..Self::default()
        }
    }

    pub fn with_workers(workers: usize) -> Self {
        Self {
            workers,
            ..Self::default()
        }
    }
}

pub fn default_workers() -> usize {
    thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchSpec {
    pub suite: KdfSuite,
    pub checksum: Checksum,
    pub partial: PartialSeed,
    pub workers: usize,
    pub chunk: u64,
}

impl SearchSpec {
    pub fn new(
        suite: KdfSuite,
        checksum: Checksum,
        partial: PartialSeed,
        cfg: &SolverConfig,
    ) -> Self {
        Self {
            suite,
            checksum,
            partial,
            workers: cfg.workers.max(1),
            chunk: cfg.chunk.unwrap_or_else(|| suite.default_chunk()).max(1),
        }
    }

    pub fn difficulty(&self) -> u32 {
        self.partial.difficulty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveReport {
    pub seed: Seed,
    pub candidates_tried: u128,
    pub elapsed: Duration,
    pub workers_used: usize,
}

/// Hands out `[start, end]` index ranges (inclusive) in ascending order.
#[derive(Debug)]
pub struct Dispatcher {
    state: Mutex<DispatchState>,
    last: u128,
    chunk: u128,
}

#[derive(Debug)]
struct DispatchState {
    next: Option<u128>,
    log: Option<Vec<(u128, u128)>>,
}

impl Dispatcher {
    pub fn new(difficulty: u32, chunk: u64) -> Self {
        Self::build(difficulty, chunk, None)
    }

    /// Like [`Dispatcher::new`], but records every range it hands out.
    pub fn with_log(difficulty: u32, chunk: u64) -> Self {
        Self::build(difficulty, chunk, Some(Vec::new()))
    }

    fn build(difficulty: u32, chunk: u64, log: Option<Vec<(u128, u128)>>) -> Self {
        Self {
            state: Mutex::new(DispatchState { next: Some(0), log }),
            last: last_index(difficulty),
            chunk: u128::from(chunk.max(1)),
        }
    }

    pub fn next_range(&self) -> Option<(u128, u128)> {
        let mut st = self.state.lock().unwrap();
        let start = st.next?;
        let end = start.saturating_add(self.chunk - 1).min(self.last);
        st.next = if end == self.last {
            None
        } else {
            Some(end + 1)
        };
        if let Some(log) = st.log.as_mut() {
            log.push((start, end));
        }
        Some((start, end))
    }

    pub fn log(&self) -> Vec<(u128, u128)> {
        self.state.lock().unwrap().log.clone().unwrap_or_default()
    }
}

/// Largest candidate index at difficulty `d`, i.e. `2^d - 1`.
pub fn last_index(d: u32) -> u128 {
    match d {
        0 => 0,
        d if d >= 128 => u128::MAX,
        d => (1u128 << d) - 1,
    }
}

pub fn solve(spec: &SearchSpec, cancel: &CancelToken) -> Result<SolveReport> {
    solve_with_progress(spec, cancel, &|_| {})
}

/// `progress` is called after each completed chunk with the running total of
/// candidates tried.
pub fn solve_with_progress(
    spec: &SearchSpec,
    cancel: &CancelToken,
    progress: &(dyn Fn(u128) + Sync),
) -> Result<SolveReport> {
    let dispatcher = Dispatcher::new(spec.difficulty(), spec.chunk);
    solve_on(spec, cancel, progress, &dispatcher)
}

/// Runs the search over ranges handed out by an existing dispatcher.
pub fn solve_on(
    spec: &SearchSpec,
    cancel: &CancelToken,
    progress: &(dyn Fn(u128) + Sync),
    dispatcher: &Dispatcher,
) -> Result<SolveReport> {
    let start = Instant::now();
    let d = spec.difficulty();
    let chunks = last_index(d) / u128::from(spec.chunk) + 1;
    let workers = usize::try_from(chunks)
        .map_or(spec.workers, |c| spec.workers.min(c))
        .max(1);

    let shared = Shared {
        found: AtomicBool::new(false),
        best: Mutex::new(None),
        tried: Mutex::new(0),
    };
    let run = || worker(spec, cancel, progress, dispatcher, &shared);
    if workers == 1 {
        run();
    } else {
        thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(run);
            }
        });
    }

    let candidates_tried = *shared.tried.lock().unwrap();
    match shared.best.into_inner().unwrap() {
        Some((_, seed)) => Ok(SolveReport {
            seed,
            candidates_tried,
            elapsed: start.elapsed(),
            workers_used: workers,
        }),
        None if cancel.is_cancelled() => Err(Error::Cancelled { candidates_tried }),
        None => Err(Error::ExhaustedNoSolution { candidates_tried }),
    }
}

struct Shared {
    found: AtomicBool,
    best: Mutex<Option<(u128, Seed)>>,
    tried: Mutex<u128>,
}

fn worker(
    spec: &SearchSpec,
    cancel: &CancelToken,
    progress: &(dyn Fn(u128) + Sync),
    dispatcher: &Dispatcher,
    shared: &Shared,
) {
    let target = spec.checksum.as_bytes();
    while !shared.found.load(Ordering::Acquire) && !cancel.is_cancelled() {
        let Some((lo, hi)) = dispatcher.next_range() else {
            break;
        };
        let mut tried = 0u128;
        let mut completed = false;
        let mut i = lo;
        loop {
            if shared.found.load(Ordering::Relaxed) || cancel.is_cancelled() {
                break;
            }
            let candidate = spec.partial.candidate(i);
            tried += 1;
            if &kdf::h1(spec.suite, candidate.as_bytes()) == target {
                let mut best = shared.best.lock().unwrap();
                if best.is_none_or(|(j, _)| i < j) {
                    *best = Some((i, candidate));
                }
                shared.found.store(true, Ordering::Release);
                completed = true;
                break;
            }
            if i == hi {
                completed = true;
                break;
            }
            i += 1;
        }
        let total = {
            let mut t = shared.tried.lock().unwrap();
            *t += tried;
            *t
        };
        if completed {
            progress(total);
        }
    }
}

/// Expected solve time at difficulty `d`: `2^(d-1)` calls, or one call at `d = 0`.
/// Saturates at [`Duration::MAX`].
pub fn estimate_cost(d: u32, per_call: Duration) -> Duration {
    let calls = expected_calls(d);
    let nanos = per_call.as_nanos().saturating_mul(calls);
    let secs = nanos / 1_000_000_000;
    if secs > u128::from(u64::MAX) {
        return Duration::MAX;
    }
    Duration::new(secs as u64, (nanos % 1_000_000_000) as u32)
}

/// `2^(d-1)` for `d >= 1`, otherwise 1.
pub fn expected_calls(d: u32) -> u128 {
    match d {
        0 => 1,
        d => 1u128 << (d - 1).min(127),
    }
}
