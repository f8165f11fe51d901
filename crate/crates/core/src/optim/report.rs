use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StopReason {
    MaxIter,
    SmallDecrease,
    LossBelowEps1,
    GradBelowEps2,
    LineSearchFail,
    /// The loss or a derivative became NaN or infinite.
    NonFinite,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::MaxIter => "MAX_ITER",
            StopReason::SmallDecrease => "SMALL_DECREASE",
            StopReason::LossBelowEps1 => "LOSS_BELOW_EPS1",
            StopReason::GradBelowEps2 => "GRAD_BELOW_EPS2",
            StopReason::LineSearchFail => "LINE_SEARCH_FAIL",
            StopReason::NonFinite => "NON_FINITE",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one optimizer run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    /// Loss at the start and after every outer iteration.
    pub loss_history: Vec<f64>,
    pub final_loss: f64,
    pub iterations: usize,
    pub wall_time_seconds: f64,
    pub stop_reason: StopReason,
    /// Mean empirical convergence order; `None` when no window was usable.
    pub convergence_rate_q: Option<f64>,
}

/// Monotonic time source in seconds.
pub trait Clock {
    fn now(&self) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub struct MonotonicClock {
    origin: Instant,
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self {
            origin: Instant::now(),
        }
    }
}

impl Clock for MonotonicClock {
    fn now(&self) -> f64 {
        self.origin.elapsed().as_secs_f64()
    }
}

/// Deterministic clock that advances by a fixed tick on every reading.
#[derive(Debug)]
pub struct FakeClock {
    tick: f64,
    readings: AtomicU64,
}

impl FakeClock {
    pub fn new(tick: f64) -> Self {
        Self {
            tick,
            readings: AtomicU64::new(0),
        }
    }
}

impl Clock for FakeClock {
    fn now(&self) -> f64 {
        self.readings.fetch_add(1, Ordering::Relaxed) as f64 * self.tick
    }
}

impl<C: Clock + ?Sized> Clock for &C {
    fn now(&self) -> f64 {
        (**self).now()
    }
}
