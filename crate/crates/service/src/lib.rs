//! Outsourced seed recovery over HTTP.
//!
//! The server receives only the public view of a wrap (suite, checksum,
//! partial seed) and returns the full seed. For a salted wrap that seed is not
//! enough to derive the key; [`client::solve_remote`] combines it with the
//! locally held salt.

pub mod api;
pub mod client;
pub mod server;
pub mod tap;

pub use client::{solve_remote, ClientError, RemoteOptions, RemoteSolve};
pub use server::{serve, spawn, ServerHandle, ServiceConfig, Stats, CAP_ENV};
