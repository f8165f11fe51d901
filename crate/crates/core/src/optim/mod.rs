//! Optimizers for decomposition losses and the driver they share.
//!
//! Every family runs inside [`run_until_convergence`], which records the loss
//! after each outer iteration and stops on the first of:
//!
//! * loss at or below `eps1`;
//! * `max_iter` iterations;
//! * gradient norm at or below `eps2` (line-search families only);
//! * a step that lowers the loss by at most `decrease_tol` (a loss increase
//!   never triggers this rule);
//! * a failed line search or a non-finite loss.

mod config;
mod first_order;
mod newton;
mod quasi_newton;
mod report;

pub use config::{
    OptimizerConfig, OptimizerFamily, GRADIENT_FREE_MAX_ITER, GRADIENT_MAX_ITER, HESSIAN_MAX_ITER,
};
pub use first_order::{apply_gradient, baseline_step, BaselineState};
pub use newton::cg_inner;
pub use report::{Clock, FakeClock, MonotonicClock, RunReport, StopReason};

use crate::als;
use crate::error::{Error, Result};
use crate::harness::metrics::convergence_rate;
use crate::models::{ModelSpec, ParamVector, TensorObjective};
use crate::numdiff::Objective;
use crate::tensor::DenseTensor;

/// One family's iteration rule, as seen by the driver.
pub(crate) trait Method {
    /// Gradient norm at the current iterate, for families that stop on it.
    fn grad_norm(&mut self, _x: &[f64]) -> Result<Option<f64>> {
        Ok(None)
    }

    /// Advances `x` in place and returns the new loss.
    fn step(&mut self, x: &mut [f64], f: f64) -> Result<f64>;
}

/// Runs a gradient-based family on an arbitrary objective.
pub fn run_until_convergence<O, C>(
    f: &O,
    x0: &[f64],
    cfg: &OptimizerConfig,
    clock: &C,
) -> Result<(Vec<f64>, RunReport)>
where
    O: Objective + ?Sized,
    C: Clock + ?Sized,
{
    cfg.validate()?;
    if x0.len() != f.dim() {
        return Err(Error::shape(format!(
            "start point has {} entries, objective expects {}",
            x0.len(),
            f.dim()
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("start point"));
    }
    use OptimizerFamily::*;
    match cfg.family {
        VecHGrad => drive(f, x0, cfg, clock, newton::TruncatedNewton::new(f, cfg)),
        Ncg => drive(f, x0, cfg, clock, quasi_newton::Ncg::new(f, cfg)),
        Lbfgs => drive(f, x0, cfg, clock, quasi_newton::Lbfgs::new(f, cfg)),
        Sgd | Nag | Adam | RmsProp | Saga | AdaGrad => {
            drive(f, x0, cfg, clock, first_order::FirstOrder::new(f, cfg, x0.len()))
        }
        Als => Err(Error::Config(
            "ALS needs a decomposition model; use decompose()".into(),
        )),
    }
}

pub fn vechgrad_solve<O: Objective + ?Sized>(
    f: &O,
    x0: &[f64],
    cfg: &OptimizerConfig,
) -> Result<(Vec<f64>, RunReport)> {
    solve_as(OptimizerFamily::VecHGrad, f, x0, cfg)
}

pub fn ncg_solve<O: Objective + ?Sized>(
    f: &O,
    x0: &[f64],
    cfg: &OptimizerConfig,
) -> Result<(Vec<f64>, RunReport)> {
    solve_as(OptimizerFamily::Ncg, f, x0, cfg)
}

pub fn lbfgs_solve<O: Objective + ?Sized>(
    f: &O,
    x0: &[f64],
    cfg: &OptimizerConfig,
) -> Result<(Vec<f64>, RunReport)> {
    solve_as(OptimizerFamily::Lbfgs, f, x0, cfg)
}

fn solve_as<O: Objective + ?Sized>(
    family: OptimizerFamily,
    f: &O,
    x0: &[f64],
    cfg: &OptimizerConfig,
) -> Result<(Vec<f64>, RunReport)> {
    if cfg.family != family {
        return Err(Error::Config(format!(
            "{} solver given a {} configuration",
            family, cfg.family
        )));
    }
    run_until_convergence(f, x0, cfg, &MonotonicClock::default())
}

/// Fits a decomposition model to `target` with any family, ALS included.
pub fn decompose<C: Clock + ?Sized>(
    target: &DenseTensor,
    x0: &ParamVector,
    cfg: &OptimizerConfig,
    clock: &C,
) -> Result<(ParamVector, RunReport)> {
    let spec: ModelSpec = *x0.spec();
    let objective = TensorObjective::new(spec, target)?;
    let (x, report) = if cfg.family == OptimizerFamily::Als {
        cfg.validate()?;
        drive(&objective, x0.values(), cfg, clock, als::AlsMethod::new(spec, target))?
    } else {
        run_until_convergence(&objective, x0.values(), cfg, clock)?
    };
    Ok((ParamVector::new(spec, x)?, report))
}

fn drive<O, C, M>(
    f: &O,
    x0: &[f64],
    cfg: &OptimizerConfig,
    clock: &C,
    mut method: M,
) -> Result<(Vec<f64>, RunReport)>
where
    O: Objective + ?Sized,
    C: Clock + ?Sized,
    M: Method,
{
    let start = clock.now();
    let mut x = x0.to_vec();
    let mut loss = f.eval(&x);
    if !loss.is_finite() {
        return Err(Error::NonFinite("loss at the start point"));
    }
    let mut history = vec![loss];
    let mut backup = x.clone();
    let stop = loop {
        if loss <= cfg.eps1 {
            break StopReason::LossBelowEps1;
        }
        if history.len() > cfg.max_iter {
            break StopReason::MaxIter;
        }
        match method.grad_norm(&x) {
            Ok(Some(g)) if g <= cfg.eps2 => break StopReason::GradBelowEps2,
            Ok(_) => {}
            Err(e) => break stop_for(&e),
        }
        backup.copy_from_slice(&x);
        let next = match method.step(&mut x, loss) {
            Ok(v) if v.is_finite() => v,
            Ok(_) => {
                x.copy_from_slice(&backup);
                break StopReason::NonFinite;
            }
            Err(e) => {
                x.copy_from_slice(&backup);
                break stop_for(&e);
            }
        };
        history.push(next);
        let decrease = loss - next;
        loss = next;
        if (0.0..=cfg.decrease_tol).contains(&decrease) {
            break StopReason::SmallDecrease;
        }
    };
    let elapsed = clock.now() - start;
    let report = RunReport {
        final_loss: loss,
        iterations: history.len() - 1,
        wall_time_seconds: elapsed,
        stop_reason: stop,
        convergence_rate_q: convergence_rate(&history),
        loss_history: history,
    };
    Ok((x, report))
}

fn stop_for(e: &Error) -> StopReason {
    match e {
        Error::NonFinite(_) => StopReason::NonFinite,
        _ => StopReason::LineSearchFail,
    }
}
