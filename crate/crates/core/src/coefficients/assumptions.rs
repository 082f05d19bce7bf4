//! Grid-sampled diagnostics for the analytic model assumptions.
//!
//! These are sanity checks, not proofs: each one evaluates an inequality on a
//! finite set of points and reports the worst case found.

use crate::coefficients::model::ModelSpec;
use crate::coefficients::truncation::Truncated;

/// `n` logarithmically spaced points covering `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo, "log_grid needs 0 < lo <= hi");
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let step = (b - a) / (n - 1) as f64;
            (0..n).map(|i| (a + step * i as f64).exp()).collect()
        }
    }
}

/// Default diagnostic grid: 10⁴ log-spaced points on `[1e-4, 1e4]`.
pub fn default_grid() -> Vec<f64> {
    log_grid(1e-4, 1e4, 10_000)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DissipativityReport {
    /// `max_x 2f'(x) + q0 g'(x)²` over the grid.
    pub max_value: f64,
    pub argmax: f64,
    /// Bound the maximum was compared against, if one was known.
    pub bound: Option<f64>,
    pub bound_holds: Option<bool>,
}

/// Evaluate `2f'(x) + q0 |g'(x)|² ≤ K` on `grid`.
///
/// `bound` overrides the model's closed-form `K` (only the 3/2 model ships
/// one, `2 c1 c2`). With neither available only the maximum is reported.
pub fn check_dissipativity(model: &ModelSpec, q0: f64, grid: &[f64], bound: Option<f64>) -> DissipativityReport {
    let mut max_value = f64::NEG_INFINITY;
    let mut argmax = f64::NAN;
    for &x in grid {
        let gp = model.diffusion_derivative(x);
        let v = 2.0 * model.drift_derivative(x) + q0 * gp * gp;
        if v > max_value || v.is_nan() {
            max_value = v;
            argmax = x;
            if v.is_nan() {
                break;
            }
        }
    }
    let bound = bound.or_else(|| model.dissipativity_bound());
    DissipativityReport {
        max_value,
        argmax,
        bound,
        bound_holds: bound.map(|k| max_value <= k),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub checked: usize,
    pub violations: usize,
    /// Largest `lhs − 2K(x−y)²` seen, normalised by `(x−y)²`.
    pub worst_excess: f64,
}

/// Check the truncated monotonicity inequality
/// `2(x−y)(f_Δ(x)−f_Δ(y)) + q0 (g_Δ(x)−g_Δ(y))² ≤ 2K(x−y)²`
/// on the given pairs, allowing `rel_slack · (x−y)²`.
pub fn check_truncated_monotonicity(
    truncated: &Truncated<'_>,
    q0: f64,
    k: f64,
    pairs: impl IntoIterator<Item = (f64, f64)>,
    rel_slack: f64,
) -> MonotonicityReport {
    let mut checked = 0;
    let mut violations = 0;
    let mut worst_excess = f64::NEG_INFINITY;
    for (x, y) in pairs {
        checked += 1;
        let d = x - y;
        let d2 = d * d;
        if d2 == 0.0 {
            continue;
        }
        let (Ok(fx), Ok(fy), Ok(gx), Ok(gy)) = (
            truncated.drift(x),
            truncated.drift(y),
            truncated.diffusion(x),
            truncated.diffusion(y),
        ) else {
            violations += 1;
            continue;
        };
        let dg = gx - gy;
        let lhs = 2.0 * d * (fx - fy) + q0 * dg * dg;
        let excess = (lhs - 2.0 * k * d2) / d2;
        worst_excess = worst_excess.max(excess);
        if excess > rel_slack {
            violations += 1;
        }
    }
    MonotonicityReport {
        checked,
        violations,
        worst_excess,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::model::{CustomModel, ThreeHalvesParams};

    #[test]
    fn grid_endpoints() {
        let g = log_grid(1e-4, 1e4, 9);
        assert_eq!(g.len(), 9);
        assert!((g[0] - 1e-4).abs() < 1e-18);
        assert!((g[8] - 1e4).abs() < 1e-8);
        assert!((g[4] - 1.0).abs() < 1e-12);
        assert_eq!(default_grid().len(), 10_000);
    }

    #[test]
    fn three_halves_dissipativity() {
        let m = ModelSpec::three_halves(ThreeHalvesParams::new(4.0, 1.0, 1.0, 2.0).unwrap());
        let r = check_dissipativity(&m, 2.0, &[0.1, 1.0, 10.0], None);
        // 2(4 − 8x) + 2·(9/4)x = 8 − 11.5x, largest at x = 0.1
        assert!((r.max_value - 6.85).abs() < 1e-12);
        assert_eq!(r.argmax, 0.1);
        assert_eq!(r.bound, Some(8.0));
        assert_eq!(r.bound_holds, Some(true));
    }

    #[test]
    fn three_halves_dissipativity_fails_for_large_noise() {
        // σ² = c1 = 4 and q0 = 8: 8 − 16x + 72x grows without bound
        let m = ModelSpec::three_halves(ThreeHalvesParams::new(4.0, 1.0, 2.0, 2.0).unwrap());
        let r = check_dissipativity(&m, 8.0, &default_grid(), None);
        assert_eq!(r.bound_holds, Some(false));
        assert!(r.argmax > 1e3);
    }

    #[test]
    fn zero_coefficients_trivially_dissipative() {
        let m = ModelSpec::custom(CustomModel::additive(0.0, 0.0, 1.0).unwrap());
        let r = check_dissipativity(&m, 2.0, &default_grid(), Some(0.0));
        assert_eq!(r.max_value, 0.0);
        assert_eq!(r.bound_holds, Some(true));
        let r = check_dissipativity(&m, 2.0, &[1.0], None);
        assert_eq!(r.bound_holds, None);
    }

    #[test]
    fn monotonicity_on_a_few_pairs() {
        let m = ModelSpec::three_halves(ThreeHalvesParams::new(4.0, 1.0, 1.0, 2.0).unwrap());
        let t = Truncated::new(&m, 20.0).unwrap();
        let pairs = [(-3.0, 0.5), (0.1, 0.2), (5.0, 30.0), (1.0, 1.0), (19.0, -19.0)];
        let r = check_truncated_monotonicity(&t, 2.0, 8.0, pairs, 1e-9);
        assert_eq!(r.checked, 5);
        assert_eq!(r.violations, 0);
    }
}
