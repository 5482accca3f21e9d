//! Central finite differences over every parameter of a model.

use super::Parameterized;

/// Numerical gradient of `loss` with respect to every parameter, in
/// [`Parameterized::params`] order.
pub fn central_difference<M, F>(model: &M, eps: f64, mut loss: F) -> Vec<f64>
where
    M: Parameterized + Clone,
    F: FnMut(&M) -> f64,
{
    let mut probe = model.clone();
    let lens: Vec<usize> = model.params().iter().map(|p| p.data.len()).collect();
    let mut out = Vec::with_capacity(lens.iter().sum());
    for (tensor, &len) in lens.iter().enumerate() {
        for i in 0..len {
            let original = probe.params_mut()[tensor][i];
            probe.params_mut()[tensor][i] = original + eps;
            let up = loss(&probe);
            probe.params_mut()[tensor][i] = original - eps;
            let down = loss(&probe);
            probe.params_mut()[tensor][i] = original;
            out.push((up - down) / (2.0 * eps));
        }
    }
    out
}

/// Largest `|a - n| / max(|a|, |n|, floor)` over paired entries. The floor
/// keeps gradients that are zero up to rounding from dominating.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    const FLOOR: f64 = 1e-6;
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(FLOOR))
        .fold(0.0, f64::max)
}
