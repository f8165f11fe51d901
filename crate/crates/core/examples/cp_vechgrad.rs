//! Fit a rank-4 CP model to a noisy synthetic tensor with the truncated Newton solver.

use tdopt::harness::synthesize_tensor;
use tdopt::models::{init_random, reconstruct, Family, ModelSpec};
use tdopt::optim::{decompose, MonotonicClock, OptimizerConfig, OptimizerFamily};

fn main() -> tdopt::Result<()> {
    let dims = [10, 9, 8];
    let (target, _truth) = synthesize_tensor(dims, Family::Cp, 4, 0.01, 42)?;
    let spec = ModelSpec::cp(dims, 4)?;
    let x0 = init_random(&spec, 7);

    let cfg = OptimizerConfig {
        eps1: 0.05,
        max_iter: 200,
        ..OptimizerConfig::new(OptimizerFamily::VecHGrad)
    };
    let (x, report) = decompose(&target, &x0, &cfg, &MonotonicClock::default())?;

    for (t, l) in report.loss_history.iter().enumerate() {
        println!("{t:>4}  {l:.6}");
    }
    let fit = reconstruct(&x);
    let rel = fit.data().iter().zip(target.data()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
        / target.data().iter().map(|v| v * v).sum::<f64>().sqrt();
    println!("stop: {}, relative error {rel:.2e}, {:.2}s", report.stop_reason, report.wall_time_seconds);
    Ok(())
}
