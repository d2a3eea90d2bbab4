//! Augmentation of vacuum pump-down curves and robustness testing of
//! minimum-pressure regression models.
//!
//! The pipeline: load or synthesize ground-truth curves ([`io`]), fit the
//! initial-pressure and pump-down-time distributions and a pumping-speed
//! dictionary ([`decomposition`]), draw physically consistent synthetic
//! curves ([`augmentation`]), train regressors ([`models`]) and judge them
//! with the feasibility, accuracy and enclosed-volume scenarios
//! ([`robustness`]).

pub mod augmentation;
pub mod decomposition;
pub mod error;
pub mod io;
pub mod models;
pub mod physics;
pub mod rng;
pub mod robustness;
mod spline;

pub use error::{Error, Result};
pub use physics::{ChamberSpec, PumpDownCurve};

/// Runs `f` on a dedicated rayon pool with `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool")
        .install(f)
}
