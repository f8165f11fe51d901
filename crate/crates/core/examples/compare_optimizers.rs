//! Every optimizer on small exact-rank tensors, one table per decomposition.
//!
//! cargo run --release --example compare_optimizers [seeds]

use std::time::Instant;

use tdopt::harness::synthesize_tensor;
use tdopt::models::{init_random, Family, ModelSpec};
use tdopt::optim::{decompose, MonotonicClock, OptimizerConfig, OptimizerFamily};

fn main() -> tdopt::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let dims = [8, 8, 8];
    for family in Family::ALL {
        println!("{family} {dims:?} rank 3, {seeds} seeds");
        println!("{:<10} {:>12} {:>8} {:>8} {:>9}  stop reasons", "optimizer", "mean loss", "mean q", "iters", "secs");
        for opt in OptimizerFamily::ALL {
            let cfg = OptimizerConfig::new(opt);
            let (mut loss, mut q, mut nq, mut iters) = (0.0, 0.0, 0, 0);
            let mut stops = Vec::new();
            let started = Instant::now();
            for s in 0..seeds {
                let (target, _) = synthesize_tensor(dims, family, 3, 0.0, s)?;
                let spec = ModelSpec::new(family, dims, 3, 3)?;
                let x0 = init_random(&spec, 1000 + s);
                let (_, r) = decompose(&target, &x0, &cfg, &MonotonicClock::default())?;
                loss += r.final_loss;
                iters += r.iterations;
                if let Some(v) = r.convergence_rate_q {
                    q += v;
                    nq += 1;
                }
                stops.push(r.stop_reason.as_str());
            }
            let q = if nq > 0 { format!("{:.3}", q / nq as f64) } else { "NA".into() };
            println!(
                "{:<10} {:>12.4} {:>8} {:>8} {:>9.2}  {}",
                opt.name(),
                loss / seeds as f64,
                q,
                iters / seeds as usize,
                started.elapsed().as_secs_f64(),
                stops.join(",")
            );
        }
        println!();
    }
    Ok(())
}
