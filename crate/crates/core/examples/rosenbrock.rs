//! The solvers work on any objective, not just tensor losses.

use tdopt::numdiff::FnObjective;
use tdopt::optim::{lbfgs_solve, ncg_solve, vechgrad_solve, OptimizerConfig, OptimizerFamily};

fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2).map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2)).sum()
}

fn main() -> tdopt::Result<()> {
    let f = FnObjective::new(4, rosenbrock);
    let x0 = [-1.2, 1.0, -1.2, 1.0];
    for family in [OptimizerFamily::VecHGrad, OptimizerFamily::Ncg, OptimizerFamily::Lbfgs] {
        let cfg = OptimizerConfig {
            eps1: 0.0,
            eps2: 1e-8,
            decrease_tol: -1.0,
            max_iter: 500,
            ..OptimizerConfig::new(family)
        };
        let (x, r) = match family {
            OptimizerFamily::VecHGrad => vechgrad_solve(&f, &x0, &cfg)?,
            OptimizerFamily::Ncg => ncg_solve(&f, &x0, &cfg)?,
            _ => lbfgs_solve(&f, &x0, &cfg)?,
        };
        println!("{:<9} {:>4} iterations  f = {:.3e}  x = {x:.6?}  ({})", family.name(), r.iterations, r.final_loss, r.stop_reason);
    }
    Ok(())
}
