//! Post-processing of outage curves.

/// Points where `a - b` changes sign along `x`, located by linear
/// interpolation. Exact ties are skipped over rather than counted.
pub fn crossings(x: &[f64], a: &[f64], b: &[f64]) -> Vec<f64> {
    assert!(x.len() == a.len() && x.len() == b.len());
    let mut out = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for ((&xi, &ai), &bi) in x.iter().zip(a).zip(b) {
        let d = ai - bi;
        if d == 0.0 || d.is_nan() {
            continue;
        }
        if let Some((xp, dp)) = last {
            if dp.signum() != d.signum() {
                out.push(xp + (xi - xp) * dp / (dp - d));
            }
        }
        last = Some((xi, d));
    }
    out
}

/// Least-squares slope of `y` against `x`; `None` when `x` is constant.
pub fn ls_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
