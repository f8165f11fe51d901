/// Mean empirical convergence order of a loss history.
///
/// Every window of four consecutive losses gives
/// `q = ln|Δ_{t+1}/Δ_t| / ln|Δ_t/Δ_{t-1}|` with `Δ_t = f_t − f_{t−1}`.
/// Windows with a zero or non-finite difference, or a non-finite ratio of
/// logarithms, are skipped. `None` when no window survives.
pub fn convergence_rate(loss_history: &[f64]) -> Option<f64> {
    if loss_history.len() < 4 {
        return None;
    }
    let diffs: Vec<f64> = loss_history.windows(2).map(|w| w[1] - w[0]).collect();
    let usable = |d: f64| d != 0.0 && d.is_finite();
    let (sum, n) = diffs
        .windows(3)
        .filter(|w| w.iter().all(|&d| usable(d)))
        .map(|w| (w[2] / w[1]).abs().ln() / (w[1] / w[0]).abs().ln())
        .filter(|q| q.is_finite())
        .fold((0.0, 0usize), |(s, n), q| (s + q, n + 1));
    (n > 0).then(|| sum / n as f64)
}
