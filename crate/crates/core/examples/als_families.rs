//! ALS sweeps on each decomposition family, printing the loss every ten sweeps.

use tdopt::harness::synthesize_tensor;
use tdopt::models::{init_random, Family, ModelSpec};
use tdopt::optim::{decompose, FakeClock, OptimizerConfig, OptimizerFamily};

fn main() -> tdopt::Result<()> {
    let dims = [8, 8, 6];
    for family in Family::ALL {
        let (target, _) = synthesize_tensor(dims, family, 2, 0.0, 3)?;
        let spec = ModelSpec::new(family, dims, 2, 2)?;
        let cfg = OptimizerConfig {
            eps1: 1e-8,
            decrease_tol: 0.0,
            max_iter: 300,
            ..OptimizerConfig::new(OptimizerFamily::Als)
        };
        let (_, r) = decompose(&target, &init_random(&spec, 11), &cfg, &FakeClock::new(0.0))?;
        let trace: Vec<String> = r.loss_history.iter().step_by(10).map(|l| format!("{l:.3e}")).collect();
        println!("{family}: {} sweeps, {}", r.iterations, r.stop_reason);
        println!("  {}", trace.join(" "));
    }
    Ok(())
}
