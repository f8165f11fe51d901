//! A small benchmark grid run in-process, reported as CSV with a fake clock.

use tdopt::harness::{render, run_benchmark, BenchmarkConfig, ClockMode, ReportFormat};

const CONFIG: &str = r#"{
    "datasets": [
        {"name": "synthetic", "source": "SYNTHETIC", "dims": [6, 6, 6], "family": "CP", "true_rank": 2, "seed": 1}
    ],
    "decompositions": [{"family": "CP", "rank": 2}, {"family": "PARATUCK2", "rank": 2}],
    "optimizers": ["VECHGRAD", "ALS", "LBFGS", {"family": "ADAM", "max_iter": 200}],
    "seeds": [1, 2]
}"#;

fn main() -> tdopt::Result<()> {
    let cfg = BenchmarkConfig::from_json(CONFIG)?;
    let out = run_benchmark(&cfg, 4, ClockMode::Fake { tick: 0.001 })?;
    print!("{}", render(&out, ReportFormat::Csv, false)?);
    eprintln!();
    for a in &out.aggregates {
        let loss = a.mean_final_loss.map_or("NA".into(), |l| format!("{l:.4}"));
        eprintln!("{:<10} {:<10} {:<9} runs {} mean loss {loss}", a.dataset, a.decomposition, a.optimizer.name(), a.runs);
    }
    Ok(())
}
