//! Property-based tests of the spectral-core identities and the cutoff
//! contracts under randomized inputs.

use std::sync::Arc;

use proptest::prelude::*;

use sgs_core::model::{CutoffSpec, CutoffTransition};
use sgs_core::spectral::{Eigenbasis, FracOrder, SpectralVector};

const DIM: usize = 24;

fn laplacian_basis() -> Arc<Eigenbasis<f64>> {
    Eigenbasis::power_law(DIM, 2.0).unwrap()
}

fn coeff_vec() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-10.0f64..10.0, DIM)
}

proptest! {
    /// Generalized Poincaré: |P_n U|_{α2} ≤ λ_n^{α2-α1} |P_n U|_{α1} and the
    /// tail bound |Q_n U|_{α1} ≤ λ_n^{-(α2-α1)} |Q_n U|_{α2}, as stated with
    /// λ_n (the sharper λ_{n+1} tail constant is also verified, as a
    /// diagnostic).
    #[test]
    fn poincare_and_inverse(
        coeffs in coeff_vec(),
        n in 1usize..DIM,
        a1 in -0.5f64..1.0,
        gap in 0.01f64..1.0,
    ) {
        let basis = laplacian_basis();
        let u = SpectralVector::new(coeffs, Arc::clone(&basis)).unwrap();
        let a2 = a1 + gap;
        let o1 = FracOrder::new(a1).unwrap();
        let o2 = FracOrder::new(a2).unwrap();

        let low = u.project_low(n).unwrap();
        let lhs_low = low.frac_norm(o2);
        let rhs_low = basis.poincare_low_constant(n, a1, a2) * low.frac_norm(o1);
        prop_assert!(lhs_low <= rhs_low * (1.0 + 1e-12),
            "low bound violated: {lhs_low} > {rhs_low} at n={n}, a1={a1}, a2={a2}");

        let high = u.project_high(n).unwrap();
        let lhs_high = high.frac_norm(o1);
        let rhs_high = basis.poincare_tail_constant(n, a1, a2) * high.frac_norm(o2);
        prop_assert!(lhs_high <= rhs_high * (1.0 + 1e-12),
            "tail bound violated: {lhs_high} > {rhs_high} at n={n}");

        if let Some(sharp) = basis.poincare_tail_constant_sharp(n, a1, a2) {
            let rhs_sharp = sharp * high.frac_norm(o2);
            prop_assert!(lhs_high <= rhs_sharp * (1.0 + 1e-12));
            prop_assert!(rhs_sharp <= rhs_high * (1.0 + 1e-12));
        }
    }

    /// Parseval: |U|₀² = Σ U_k² exactly (same compensated accumulation).
    #[test]
    fn parseval(coeffs in coeff_vec()) {
        let basis = laplacian_basis();
        let u = SpectralVector::new(coeffs.clone(), Arc::clone(&basis)).unwrap();
        let direct: f64 = u.inner(&u);
        prop_assert_eq!(u.frac_norm_sq(FracOrder::H), direct);
    }

    /// Semigroup property: e^{-sA} e^{-tA} U = e^{-(s+t)A} U to 1e-12.
    #[test]
    fn semigroup_composition(
        coeffs in coeff_vec(),
        s in 0.0f64..2.0,
        t in 0.0f64..2.0,
    ) {
        let basis = laplacian_basis();
        let u = SpectralVector::new(coeffs, Arc::clone(&basis)).unwrap();
        let two_step = u.heat_semigroup(s).unwrap().heat_semigroup(t).unwrap();
        let one_step = u.heat_semigroup(s + t).unwrap();
        for (a, b) in two_step.coeffs().iter().zip(one_step.coeffs()) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300),
                "semigroup violated: {a} vs {b}");
        }
    }

    /// The heat flow's V norm is nonincreasing along any sampled grid.
    #[test]
    fn heat_flow_v_norm_decays(
        coeffs in coeff_vec(),
        dt in 0.001f64..0.5,
    ) {
        let basis = laplacian_basis();
        let u = SpectralVector::new(coeffs, Arc::clone(&basis)).unwrap();
        let mut prev = u.frac_norm(FracOrder::V);
        for i in 1..=16 {
            let now = u.heat_semigroup(dt * i as f64).unwrap().frac_norm(FracOrder::V);
            prop_assert!(now <= prev * (1.0 + 1e-15));
            prev = now;
        }
    }

    /// P_n + Q_n = I exactly and the two blocks are H-orthogonal.
    #[test]
    fn projection_partition(coeffs in coeff_vec(), n in 1usize..DIM) {
        let basis = laplacian_basis();
        let u = SpectralVector::new(coeffs, Arc::clone(&basis)).unwrap();
        let p = u.project_low(n).unwrap();
        let q = u.project_high(n).unwrap();
        let total = p.add(&q);
        prop_assert_eq!(total.coeffs(), u.coeffs());
        prop_assert_eq!(p.inner(&q), 0.0);
    }

    /// θ is exactly 1 on [0, κ], exactly 0 beyond 2κ, takes values in [0, 1],
    /// and is nonincreasing in |x| for both transitions.
    #[test]
    fn cutoff_shape(
        kappa in 0.001f64..10.0,
        xs in proptest::collection::vec(0.0f64..3.0, 32),
    ) {
        for transition in [CutoffTransition::SmoothExp, CutoffTransition::CubicSmoothstep] {
            let spec = CutoffSpec::new(kappa, transition).unwrap();
            let mut pts: Vec<f64> = xs.iter().map(|r| r * kappa).collect();
            pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut prev = 1.0f64;
            for &x in &pts {
                let v = spec.eval(x);
                prop_assert!((0.0..=1.0).contains(&v));
                if x <= kappa {
                    prop_assert_eq!(v, 1.0);
                }
                if x >= 2.0 * kappa {
                    prop_assert_eq!(v, 0.0);
                }
                prop_assert!(v <= prev + 1e-15, "theta increased at {x}");
                prev = v;
            }
        }
    }
}
