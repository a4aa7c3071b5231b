//! Central finite differences for checking analytic gradients.

use crate::optim::Parameters;

/// Numerical gradient of `f` at `params`, flattened in block order.
pub fn numeric_gradient<P, F>(params: &P, step: f64, mut f: F) -> Vec<f64>
where
    P: Parameters + Clone,
    F: FnMut(&P) -> f64,
{
    let mut out = Vec::with_capacity(params.parameter_count());
    let mut probe = params.clone();
    let sizes: Vec<usize> = params.blocks().iter().map(|b| b.len()).collect();
    for (b, n) in sizes.into_iter().enumerate() {
        for j in 0..n {
            let x = probe.blocks()[b][j];
            probe.blocks_mut()[b][j] = x + step;
            let plus = f(&probe);
            probe.blocks_mut()[b][j] = x - step;
            let minus = f(&probe);
            probe.blocks_mut()[b][j] = x;
            out.push((plus - minus) / (2.0 * step));
        }
    }
    out
}

/// `|a - b| / max(|a|, |b|)` over whole vectors; 0 when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut a.iter().zip(b).map(|(x, y)| x - y));
    let scale = norm(&mut a.iter().copied()).max(norm(&mut b.iter().copied()));
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}
