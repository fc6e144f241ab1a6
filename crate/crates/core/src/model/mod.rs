//! Structural contracts on the model triple `(B, F, σ)` as executable
//! interfaces, plus the cutoff function `θ` and its admissibility rule.
//!
//! A model supplies a bilinear term `B`, a forcing `F` and a noise
//! coefficient `σ` over a fixed eigenbasis. The contracts it is expected to
//! satisfy — the cancellation `⟨B(U,U♯),U♯⟩ = 0`, the two `c₀`-bounds on
//! `⟨B(U,U♯),U♭⟩`, and sublinear-growth / Lipschitz classes for `F` and `σ` —
//! are checked statistically by the verifiers in [`verify`].
//!
//! The cutoff `θ` is a smooth `[0,1]`-valued function equal to 1 on
//! `|x| ≤ κ` and 0 on `|x| ≥ 2κ`; the admissible cutoff radius is tied to
//! the measured bilinear constant through `κ ≤ 1/(64 c₀)`.

pub mod verify;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::HsColumns;
use crate::scalar::Scalar;
use crate::spectral::{Eigenbasis, SpectralVector};

pub use verify::{
    estimate_c0, verify_bilinearity, verify_cancellation, verify_growth_forcing,
    verify_growth_noise, verify_lipschitz_forcing, verify_lipschitz_noise, verify_model,
    AssumptionReport, VerifierConfig,
};

/// The pluggable model triple `(B, F, σ)` over a shared eigenbasis.
///
/// Implementations must be pure with respect to observable state: verifiers
/// and ensemble harnesses evaluate them concurrently.
pub trait AbstractModel<T: Scalar>: Send + Sync {
    /// Eigenbasis of the principal operator this model is posed over.
    fn basis(&self) -> &Arc<Eigenbasis<T>>;

    /// Number of retained modes the model is declared on.
    fn dim(&self) -> usize;

    /// Human-readable label used in reports.
    fn label(&self) -> &str;

    /// Bilinear term `B(U, U♯)`.
    fn bilinear(&self, u: &SpectralVector<T>, usharp: &SpectralVector<T>)
        -> Result<SpectralVector<T>>;

    /// Forcing `F(t, U)`.
    fn forcing(&self, t: T, u: &SpectralVector<T>) -> Result<SpectralVector<T>>;

    /// Noise coefficient columns `σ_k(t, U)` for `k = 1..=k_modes`.
    fn noise(&self, t: T, u: &SpectralVector<T>, k_modes: usize) -> Result<HsColumns<T>>;
}

/// Upper bound on the admissible cutoff radius: `κ_max = 1/(64 c₀)`.
pub fn kappa_max(c0: f64) -> Result<f64> {
    if !(c0.is_finite() && c0 > 0.0) {
        return Err(Error::Domain(format!(
            "kappa_max requires a positive finite c0, got {c0}"
        )));
    }
    Ok(1.0 / (64.0 * c0))
}

/// Shape of the transition of `θ` on `κ < |x| < 2κ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffTransition {
    /// `θ(x) = ψ(2 - |x|/κ) / (ψ(2 - |x|/κ) + ψ(|x|/κ - 1))` with
    /// `ψ(s) = e^{-1/s}` for `s > 0` and `0` otherwise; `C^∞`.
    SmoothExp,
    /// Cubic smoothstep; `C¹` and cheaper to evaluate.
    CubicSmoothstep,
}

/// Cutoff function `θ`: exactly 1 on `|x| ≤ κ`, exactly 0 on `|x| ≥ 2κ`,
/// smooth and nonincreasing in `|x|` in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffSpec {
    pub kappa: f64,
    #[serde(default = "CutoffSpec::default_transition")]
    pub transition: CutoffTransition,
}

impl CutoffSpec {
    fn default_transition() -> CutoffTransition {
        CutoffTransition::SmoothExp
    }

    pub fn new(kappa: f64, transition: CutoffTransition) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::Domain(format!(
                "cutoff radius must be positive and finite, got {kappa}"
            )));
        }
        Ok(Self { kappa, transition })
    }

    pub fn smooth_exp(kappa: f64) -> Result<Self> {
        Self::new(kappa, CutoffTransition::SmoothExp)
    }

    /// Evaluates `θ(x)`; rejects non-finite arguments.
    pub fn eval_checked(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("cutoff argument must be finite, got {x}")));
        }
        Ok(self.eval(x))
    }

    /// Evaluates `θ(x)` assuming a finite argument.
    pub fn eval(&self, x: f64) -> f64 {
        let r = x.abs() / self.kappa;
        if r <= 1.0 {
            return 1.0;
        }
        if r >= 2.0 {
            return 0.0;
        }
        match self.transition {
            CutoffTransition::SmoothExp => {
                let a = bump(2.0 - r);
                let b = bump(r - 1.0);
                a / (a + b)
            }
            CutoffTransition::CubicSmoothstep => {
                let u = r - 1.0;
                1.0 - u * u * (3.0 - 2.0 * u)
            }
        }
    }

    /// Whether this cutoff obeys `κ ≤ 1/(64 c₀)` with respect to a measured
    /// bilinear constant. A vanishing estimate (e.g. `B ≡ 0`) admits any `κ`.
    pub fn admissible_for(&self, c0_est: f64) -> Result<bool> {
        if !(c0_est.is_finite() && c0_est >= 0.0) {
            return Err(Error::Domain(format!(
                "c0 estimate must be finite and nonnegative, got {c0_est}"
            )));
        }
        if c0_est == 0.0 {
            return Ok(true);
        }
        Ok(self.kappa <= kappa_max(c0_est)?)
    }
}

fn bump(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_plateau_and_support() {
        for transition in [CutoffTransition::SmoothExp, CutoffTransition::CubicSmoothstep] {
            let spec = CutoffSpec::new(0.01, transition).unwrap();
            assert_eq!(spec.eval(0.005), 1.0);
            assert_eq!(spec.eval(-0.005), 1.0);
            assert_eq!(spec.eval(0.01), 1.0);
            assert_eq!(spec.eval(0.02), 0.0);
            assert_eq!(spec.eval(0.5), 0.0);
            let mid = spec.eval(0.015);
            assert!(mid > 0.0 && mid < 1.0);
        }
    }

    #[test]
    fn theta_transition_values() {
        let spec = CutoffSpec::smooth_exp(0.01).unwrap();
        // Midpoint of the transition is 1/2 by the symmetry ψ(s)/(ψ(s)+ψ(s)).
        assert!((spec.eval(0.015) - 0.5).abs() < 1e-15);
        // Golden value computed from the transition formula directly.
        let r: f64 = 1.2;
        let expected = (-1.0 / (2.0 - r)).exp() / ((-1.0 / (2.0 - r)).exp() + (-1.0 / (r - 1.0)).exp());
        assert!((spec.eval(0.012) - expected).abs() < 1e-15);
    }

    #[test]
    fn theta_monotone_and_lipschitz() {
        for transition in [CutoffTransition::SmoothExp, CutoffTransition::CubicSmoothstep] {
            let kappa = 0.5;
            let spec = CutoffSpec::new(kappa, transition).unwrap();
            let n = 4000;
            let mut prev = spec.eval(0.0);
            let mut max_slope: f64 = 0.0;
            let dx = 2.5 * kappa / n as f64;
            for i in 1..=n {
                let x = i as f64 * dx;
                let v = spec.eval(x);
                assert!(v <= prev + 1e-15, "theta not nonincreasing at x={x}");
                max_slope = max_slope.max((prev - v) / dx);
                prev = v;
            }
            // Difference quotients stay bounded by C/kappa for a modest C.
            assert!(max_slope <= 4.0 / kappa, "slope {max_slope} too steep");
        }
    }

    #[test]
    fn theta_rejects_non_finite() {
        let spec = CutoffSpec::smooth_exp(1.0).unwrap();
        assert!(spec.eval_checked(f64::NAN).is_err());
        assert!(spec.eval_checked(f64::INFINITY).is_err());
        assert!(spec.eval_checked(1.5).is_ok());
    }

    #[test]
    fn kappa_max_values() {
        assert_eq!(kappa_max(1.0).unwrap(), 0.015625);
        assert_eq!(kappa_max(1.0 / 64.0).unwrap(), 1.0);
        assert_eq!(kappa_max(2.0).unwrap(), 0.0078125);
        assert!(kappa_max(0.0).is_err());
        assert!(kappa_max(-1.0).is_err());
    }

    #[test]
    fn admissibility_rule() {
        let spec = CutoffSpec::smooth_exp(0.015625).unwrap();
        assert!(spec.admissible_for(1.0).unwrap());
        assert!(!spec.admissible_for(1.1).unwrap());
        assert!(spec.admissible_for(0.0).unwrap());
        assert!(spec.admissible_for(f64::NAN).is_err());
    }

    #[test]
    fn cutoff_spec_validation() {
        assert!(CutoffSpec::smooth_exp(0.0).is_err());
        assert!(CutoffSpec::smooth_exp(-0.1).is_err());
        assert!(CutoffSpec::smooth_exp(f64::NAN).is_err());
    }
}
