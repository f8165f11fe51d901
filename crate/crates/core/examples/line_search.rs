//! Strong Wolfe search along a steepest-descent direction, with both parameter sets.

use tdopt::linesearch::{strong_wolfe, WolfeParams};

fn main() -> tdopt::Result<()> {
    // f(x, y) = x^4 + 3y^2 - xy
    let f = |v: &[f64]| v[0].powi(4) + 3.0 * v[1] * v[1] - v[0] * v[1];
    let grad = |v: &[f64]| Ok(vec![4.0 * v[0].powi(3) - v[1], 6.0 * v[1] - v[0]]);
    let x = [1.5, -1.0];
    let g = grad(&x)?;
    let p: Vec<f64> = g.iter().map(|v| -v).collect();

    for (name, params) in [("newton", WolfeParams::newton()), ("ncg", WolfeParams::ncg())] {
        let out = strong_wolfe(f, grad, &x, &p, &params)?;
        println!(
            "{name:<6} c1={} c2={}: alpha {:.5}, f {:.5} -> {:.5}, {} evaluations{}",
            params.c1,
            params.c2,
            out.alpha,
            f(&x),
            out.f_new,
            out.evals,
            if out.weak { " (weak)" } else { "" }
        );
    }
    Ok(())
}
