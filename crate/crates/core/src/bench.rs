//! Wrap/solve timing series and the statistics reported over them.

use std::io::{self, Write};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::SeedableRng;

use crate::error::Result;
use crate::kdf::{self, KdfSuite};
use crate::solver::SolverConfig;
use crate::wrap::{self, Difficulty, SaltView};

pub const CSV_HEADER: &str = "difficulty,trial,candidates,wrap_ms,solve_ms";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub difficulty: u32,
    pub trial: usize,
    pub candidates: u128,
    pub wrap: Duration,
    pub solve: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub mean: f64,
    pub stddev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSummary {
    pub difficulty: u32,
    pub trials: usize,
    pub candidates: Stats,
    pub wrap_ms: Stats,
    pub solve_ms: Stats,
}

/// Ratios of means between two consecutive requested difficulties.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelRatio {
    pub from: u32,
    pub to: u32,
    pub candidates: f64,
    pub wrap_ms: f64,
    pub solve_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub rows: Vec<BenchRow>,
    pub levels: Vec<LevelSummary>,
    pub ratios: Vec<LevelRatio>,
}

#[derive(Debug, Clone)]
pub struct SeriesConfig {
    pub suite: KdfSuite,
    pub difficulties: Vec<u32>,
    pub trials: usize,
    /// Untimed iterations run before each level.
    pub warmup: usize,
    pub rng_seed: u64,
}

impl SeriesConfig {
    pub fn new(suite: KdfSuite, difficulties: Vec<u32>, trials: usize) -> Self {
        Self {
            suite,
            difficulties,
            trials: trials.max(1),
            warmup: 5,
            rng_seed: 0x5eed,
        }
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Mean and sample standard deviation (`n - 1` denominator).
pub fn mean_stddev(xs: &[f64]) -> Stats {
    let n = xs.len();
    if n == 0 {
        return Stats {
            mean: f64::NAN,
            stddev: f64::NAN,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let stddev = if n < 2 {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    Stats { mean, stddev }
}

/// Kendall's tau-b rank correlation.
pub fn kendall_tau(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (mut concordant, mut discordant, mut ties_x, mut ties_y) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            let dx = xs[i]
                .partial_cmp(&xs[j])
                .unwrap_or(std::cmp::Ordering::Equal);
            let dy = ys[i]
                .partial_cmp(&ys[j])
                .unwrap_or(std::cmp::Ordering::Equal);
            match (dx.is_eq(), dy.is_eq()) {
                (true, true) => {}
                (true, false) => ties_x += 1,
                (false, true) => ties_y += 1,
                (false, false) if dx == dy => concordant += 1,
                (false, false) => discordant += 1,
            }
        }
    }
    let denom =
        (((concordant + discordant + ties_x) * (concordant + discordant + ties_y)) as f64).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        (concordant - discordant) as f64 / denom
    }
}

/// Average wall time of one suite call over `n` calls.
pub fn measure_call_time(suite: KdfSuite, n: u32) -> Duration {
    let n = n.max(1);
    let start = Instant::now();
    for i in 0..n {
        std::hint::black_box(kdf::h1(suite, &u128::from(i).to_be_bytes()));
    }
    start.elapsed() / n
}

/// Wraps and single-threaded unwraps `trials` times at each difficulty.
pub fn run_series(cfg: &SeriesConfig) -> Result<Series> {
    let mut rng = StdRng::seed_from_u64(cfg.rng_seed);
    let solver = SolverConfig::single_threaded();
    let mut rows = Vec::with_capacity(cfg.difficulties.len() * cfg.trials);
    let mut levels = Vec::with_capacity(cfg.difficulties.len());

    for &d in &cfg.difficulties {
        let difficulty = Difficulty::new(d)?;
        let mut level_rows = Vec::with_capacity(cfg.trials);
        for i in 0..cfg.warmup + cfg.trials {
            let t0 = Instant::now();
            let (key, w) = wrap::wrap(cfg.suite, difficulty, false, &mut rng);
            let wrap_time = t0.elapsed();
            let t1 = Instant::now();
            let u = wrap::unwrap(&w, SaltView::Holder, &solver)?;
            let solve_time = t1.elapsed();
            debug_assert_eq!(u.key, key);
            if i >= cfg.warmup {
                level_rows.push(BenchRow {
                    difficulty: d,
                    trial: i - cfg.warmup,
                    candidates: u.report.candidates_tried,
                    wrap: wrap_time,
                    solve: solve_time,
                });
            }
        }
        levels.push(summarize(d, &level_rows));
        rows.extend(level_rows);
    }

    let ratios = levels
        .windows(2)
        .map(|w| LevelRatio {
            from: w[0].difficulty,
            to: w[1].difficulty,
            candidates: w[1].candidates.mean / w[0].candidates.mean,
            wrap_ms: w[1].wrap_ms.mean / w[0].wrap_ms.mean,
            solve_ms: w[1].solve_ms.mean / w[0].solve_ms.mean,
        })
        .collect();

    Ok(Series {
        rows,
        levels,
        ratios,
    })
}

pub fn summarize(difficulty: u32, rows: &[BenchRow]) -> LevelSummary {
    let col = |f: &dyn Fn(&BenchRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    LevelSummary {
        difficulty,
        trials: rows.len(),
        candidates: mean_stddev(&col(&|r| r.candidates as f64)),
        wrap_ms: mean_stddev(&col(&|r| ms(r.wrap))),
        solve_ms: mean_stddev(&col(&|r| ms(r.solve))),
    }
}

/// Per-trial rows, then `mean` and `stddev` rows per level, then one `ratio`
/// row per adjacent pair of levels (labelled with the higher difficulty).
pub fn write_csv<W: Write>(series: &Series, out: &mut W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in &series.rows {
        writeln!(
            out,
            "{},{},{},{:.6},{:.6}",
            r.difficulty,
            r.trial,
            r.candidates,
            ms(r.wrap),
            ms(r.solve)
        )?;
    }
    for l in &series.levels {
        writeln!(
            out,
            "{},mean,{:.3},{:.6},{:.6}",
            l.difficulty, l.candidates.mean, l.wrap_ms.mean, l.solve_ms.mean
        )?;
        writeln!(
            out,
            "{},stddev,{:.3},{:.6},{:.6}",
            l.difficulty, l.candidates.stddev, l.wrap_ms.stddev, l.solve_ms.stddev
        )?;
    }
    for r in &series.ratios {
        writeln!(
            out,
            "{},ratio,{:.4},{:.4},{:.4}",
            r.to, r.candidates, r.wrap_ms, r.solve_ms
        )?;
    }
    Ok(())
}
