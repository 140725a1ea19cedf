//! Cross-module property tests: norm/metric consistency, order-parameter
//! monotonicity, and the variable transform round trip.

use hkfrac::space::{
    derive_gamma, s_of_t, weighted_distance, weighted_norm, FhkParams, SGrid, WeightedTrajectory,
};
use proptest::prelude::*;

proptest! {
    /// The metric is the norm of the pointwise difference.
    #[test]
    fn distance_is_norm_of_difference(
        values in prop::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 2..40)
    ) {
        let params = FhkParams::new(0.5, 0.5, 1.0).unwrap();
        let n = values.len() - 1;
        let grid = SGrid::uniform(1.0, 1.0, n).unwrap();
        let ya: Vec<f64> = values.iter().map(|(a, _)| *a).collect();
        let yb: Vec<f64> = values.iter().map(|(_, b)| *b).collect();
        let a = WeightedTrajectory::from_scalar(params, grid.clone(), ya.clone()).unwrap();
        let b = WeightedTrajectory::from_scalar(params, grid.clone(), yb.clone()).unwrap();
        let diff: Vec<f64> = ya.iter().zip(&yb).map(|(u, v)| u - v).collect();
        let d = WeightedTrajectory::from_scalar(params, grid, diff).unwrap();
        let lhs = weighted_distance(&a, &b).unwrap();
        let rhs = weighted_norm(&d).unwrap();
        prop_assert_eq!(lhs.to_bits(), rhs.to_bits());
    }

    /// gamma is nondecreasing in beta with the stated endpoints.
    #[test]
    fn gamma_is_monotone_in_beta(
        alpha in 0.01f64..0.99,
        b1 in 0.0f64..1.0,
        b2 in 0.0f64..1.0,
    ) {
        let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        let g_lo = derive_gamma(alpha, lo).unwrap();
        let g_hi = derive_gamma(alpha, hi).unwrap();
        prop_assert!(g_lo <= g_hi);
        prop_assert_eq!(derive_gamma(alpha, 0.0).unwrap(), alpha);
        prop_assert_eq!(derive_gamma(alpha, 1.0).unwrap(), 1.0);
        prop_assert!(alpha <= g_lo && g_hi <= 1.0);
    }

    /// The transform and its inverse agree on every node to near machine
    /// precision for scales across [1/4, 4].
    #[test]
    fn transform_roundtrip(
        rho in 0.25f64..4.0,
        t_end in 0.01f64..50.0,
        n in 4usize..128,
    ) {
        let grid = SGrid::uniform(rho, t_end, n).unwrap();
        for i in 0..grid.len() {
            let s = grid.s_at(i);
            let back = s_of_t(rho, grid.t_at(i));
            let rel = (back - s).abs() / (1.0 + s.abs());
            prop_assert!(rel <= 1e-14, "rho={} i={} rel={}", rho, i, rel);
        }
    }
}
