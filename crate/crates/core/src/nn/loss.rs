/// Lower bound applied to the argument of each logarithm.
pub const PROB_CLAMP: f64 = 1e-12;

/// `w ln q` with `q` floored at [`PROB_CLAMP`]; a zero weight contributes nothing.
fn weighted_log(w: f64, q: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        w * q.max(PROB_CLAMP).ln()
    }
}

fn weighted_log_grad(w: f64, q: f64) -> f64 {
    if w == 0.0 || q < PROB_CLAMP {
        0.0
    } else {
        w / q
    }
}

/// Binary cross-entropy `-(y ln p + (1 - y) ln(1 - p))`. Finite for every
/// `p` in `[0, 1]`, and exactly zero for a confident correct prediction.
pub fn cross_entropy(p: f64, y: f64) -> f64 {
    -(weighted_log(y, p) + weighted_log(1.0 - y, 1.0 - p))
}

/// `d cross_entropy / d p`; zero where a floor is active.
pub fn cross_entropy_grad(p: f64, y: f64) -> f64 {
    -(weighted_log_grad(y, p) - weighted_log_grad(1.0 - y, 1.0 - p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_values() {
        assert_eq!(cross_entropy(1.0, 1.0), 0.0);
        assert_eq!(cross_entropy(0.0, 0.0), 0.0);
        assert!((cross_entropy(0.5, 1.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((cross_entropy(0.5, 0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((cross_entropy(0.9, 0.0) - 2.302585092994046).abs() < 1e-12);
        assert!(cross_entropy(0.0, 1.0).is_finite());
        assert!((cross_entropy(0.0, 1.0) + PROB_CLAMP.ln()).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_difference_quotient() {
        for &(p, y) in &[(0.3, 1.0), (0.7, 0.0), (0.55, 1.0)] {
            let h = 1e-6;
            let fd = (cross_entropy(p + h, y) - cross_entropy(p - h, y)) / (2.0 * h);
            assert!((fd - cross_entropy_grad(p, y)).abs() < 1e-6);
        }
    }
}
