//! Statistical verification harnesses.
//!
//! This module measures, on ensembles of Galerkin trajectories, the
//! quantities the analysis of the cutoff system controls:
//!
//! - fractional Sobolev-in-time norms `W^{α,p}([0,T]; X)` of recorded
//!   series ([`wap_norm`]) and the `W^{1,2}` norm of the drift part
//!   `U - ∫σ(U)dW` ([`w12_drift_norm`]);
//! - uniform-in-`n` moment estimates over dimension ladders
//!   ([`ensemble::moment_harness`]);
//! - the pairwise same-noise Cauchy diagnostic for convergence in
//!   probability ([`ensemble::gk_cauchy`]);
//! - same-noise uniqueness checks including a floating-point-perturbed twin
//!   ([`ensemble::uniqueness_check`]);
//! - convergence of stochastic integrals under integrand perturbations and
//!   noise mollification ([`ensemble::integral_convergence_check`]), with the
//!   causal exponential filter [`smoothing_series`] as a building block.
//!
//! All verdicts are statistical diagnostics over finite ladders and finite
//! trial counts; reports carry seeds and sample counts so they can be
//! replayed bit-exactly.

pub mod ensemble;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{KahanSum, Scalar};
use crate::solver::TrajectoryRecord;
use crate::spectral::{FracOrder, SpectralVector};

pub use ensemble::{
    gk_cauchy, integral_convergence_check, moment_harness, uniqueness_check, EnsembleConfig,
    EnsembleSummary, GkReport, InitSpec, IntegralLadderConfig, IntegralReport, MomentRow,
    SeedManifest, UniquenessReport,
};

/// Quadrature rule for the time integrals (only the trapezoid rule is
/// provided).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    #[default]
    Trapezoid,
}

/// Parameters of the fractional time norm.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FracNormSpec {
    /// Fractional order `α ∈ (0, 1]`.
    pub alpha: f64,
    /// Integrability `p > 1`.
    pub p: f64,
    #[serde(default)]
    pub quadrature: Quadrature,
    /// Minimum separation `|t' - t''|` retained in the double integral, in
    /// units of the grid spacing. The integrand is singular on the diagonal;
    /// the continuum norm integrates through it, a grid cannot.
    #[serde(default = "FracNormSpec::default_cut")]
    pub diagonal_cut: f64,
}

impl FracNormSpec {
    fn default_cut() -> f64 {
        1.0
    }

    pub fn new(alpha: f64, p: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Domain(format!("alpha {alpha} outside (0, 1]")));
        }
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::Domain(format!("p {p} must satisfy p > 1")));
        }
        Ok(Self {
            alpha,
            p,
            quadrature: Quadrature::Trapezoid,
            diagonal_cut: 1.0,
        })
    }

    /// Whether `αp > 1`, the regime in which the fractional space embeds
    /// into continuous functions. Recorded in reports.
    pub fn embedding_regime(&self) -> bool {
        self.alpha * self.p > 1.0
    }
}

/// Trapezoid weight of grid index `m` on `0..=last`.
#[inline]
fn trapezoid_weight<T: Scalar>(m: usize, last: usize) -> T {
    if m == 0 || m == last {
        T::from_f64_lossy(0.5)
    } else {
        T::one()
    }
}

/// `W^{α,p}([0,T]; X)` norm of a uniformly sampled series:
///
/// ```text
/// |U|^p = ∫₀ᵀ |U(t)|_X^p dt
///       + ∫₀ᵀ∫₀ᵀ |U(t') - U(t'')|_X^p / |t' - t''|^{1+αp} dt' dt'',
/// ```
///
/// both terms by trapezoid quadrature, the double integral excluding pairs
/// closer than `diagonal_cut` grid spacings. `X` is the fractional space of
/// the given order.
pub fn wap_norm<T: Scalar>(
    series: &[SpectralVector<T>],
    dt: T,
    spec: &FracNormSpec,
    order: FracOrder,
) -> Result<T> {
    if series.len() < 2 {
        return Err(Error::Domain(
            "fractional time norm needs at least two grid points".into(),
        ));
    }
    let last = series.len() - 1;
    let p = T::from_f64_lossy(spec.p);
    let sing = T::from_f64_lossy(1.0 + spec.alpha * spec.p);
    let min_sep = spec.diagonal_cut * dt.to_f64_lossy();

    let mut lp = KahanSum::new();
    for (m, u) in series.iter().enumerate() {
        let w: T = trapezoid_weight(m, last);
        lp.add(w * u.frac_norm(order).powf(p) * dt);
    }

    let mut double = KahanSum::new();
    for i in 0..series.len() {
        let wi: T = trapezoid_weight(i, last);
        for j in (i + 1)..series.len() {
            let sep = (j - i) as f64 * dt.to_f64_lossy();
            if sep < min_sep {
                continue;
            }
            let wj: T = trapezoid_weight(j, last);
            let diff = series[i].sub(&series[j]).frac_norm(order);
            let kernel = diff.powf(p) / T::from_f64_lossy(sep).powf(sing);
            // Off-diagonal pairs appear twice in the symmetric integral.
            double.add(T::from_f64_lossy(2.0) * wi * wj * kernel * dt * dt);
        }
    }

    Ok((lp.total() + double.total()).powf(T::one() / p))
}

/// `W^{1,2}([0,T]; H)` norm of a uniformly sampled series:
/// `(Σ_m |ΔY_m|²/dt + Σ_m |Y_m|² dt)^{1/2}` with the trapezoid rule on the
/// zeroth-order term.
pub fn w12_norm<T: Scalar>(series: &[SpectralVector<T>], dt: T) -> Result<T> {
    if series.len() < 2 {
        return Err(Error::Domain("W^{1,2} norm needs at least two grid points".into()));
    }
    let last = series.len() - 1;
    let mut deriv = KahanSum::new();
    for w in series.windows(2) {
        deriv.add(w[1].sub(&w[0]).frac_norm_sq(FracOrder::H) / dt);
    }
    let mut zeroth = KahanSum::new();
    for (m, u) in series.iter().enumerate() {
        let w: T = trapezoid_weight(m, last);
        zeroth.add(w * u.frac_norm_sq(FracOrder::H) * dt);
    }
    Ok((deriv.total() + zeroth.total()).sqrt())
}

/// Extracts the uniformly strided `(state, stochastic integral)` snapshots of
/// a record, with their effective spacing.
fn uniform_snapshots<T: Scalar>(
    record: &TrajectoryRecord<T>,
) -> Result<(Vec<&SpectralVector<T>>, Vec<&SpectralVector<T>>, T)> {
    if record.states.len() < 2 {
        return Err(Error::Domain("record holds fewer than two snapshots".into()));
    }
    if record.states.len() != record.stoch_integral.len() {
        return Err(Error::GridMismatch(
            "state and stochastic-integral snapshots are not aligned".into(),
        ));
    }
    let stride = record.states[1].0 - record.states[0].0;
    for w in record.states.windows(2) {
        if w[1].0 - w[0].0 != stride {
            return Err(Error::GridMismatch(
                "snapshots are not uniformly strided; choose a stride dividing the step count"
                    .into(),
            ));
        }
    }
    let dt_grid = record.times[1] - record.times[0];
    let dt_eff = dt_grid * T::from_f64_lossy(stride as f64);
    let states = record.states.iter().map(|(_, s)| s).collect();
    let itos = record.stoch_integral.iter().map(|(_, s)| s).collect();
    Ok((states, itos, dt_eff))
}

/// `W^{1,2}([0,T]; H)` norm of the drift part `U(t) - ∫₀ᵗ σ(U) dW`,
/// evaluated on the record's snapshot grid.
pub fn w12_drift_norm<T: Scalar>(record: &TrajectoryRecord<T>) -> Result<T> {
    let (states, itos, dt_eff) = uniform_snapshots(record)?;
    let series: Vec<SpectralVector<T>> = states
        .iter()
        .zip(itos.iter())
        .map(|(u, m)| u.sub(m))
        .collect();
    w12_norm(&series, dt_eff)
}

/// `W^{α,p}` norm (in `H`) of the running stochastic integral of a record.
pub fn wap_stoch_integral_norm<T: Scalar>(
    record: &TrajectoryRecord<T>,
    spec: &FracNormSpec,
) -> Result<T> {
    let (_, itos, dt_eff) = uniform_snapshots(record)?;
    let series: Vec<SpectralVector<T>> = itos.iter().map(|&s| s.clone()).collect();
    wap_norm(&series, dt_eff, spec, FracOrder::H)
}

/// Causal exponential filter `R_ρ(F)(t) = (1/ρ) ∫₀ᵗ e^{-(t-s)/ρ} F(s) ds`
/// on a scalar series, via the exact recurrence for the linear interpolant
/// of `F` on each step (`R(0) = 0`; exact for constant `F`).
pub fn smoothing_scalar<T: Scalar>(series: &[T], dt: T, rho: T) -> Result<Vec<T>> {
    let (decay, c_old, c_new) = smoothing_coefficients(dt, rho)?;
    let mut out = Vec::with_capacity(series.len());
    let mut r = T::zero();
    out.push(r);
    for w in series.windows(2) {
        r = decay * r + c_old * w[0] + c_new * w[1];
        out.push(r);
    }
    Ok(out)
}

/// The same filter applied to a series of states.
pub fn smoothing_series<T: Scalar>(
    series: &[SpectralVector<T>],
    dt: T,
    rho: T,
) -> Result<Vec<SpectralVector<T>>> {
    let (decay, c_old, c_new) = smoothing_coefficients(dt, rho)?;
    let mut out = Vec::with_capacity(series.len());
    let first = series
        .first()
        .ok_or_else(|| Error::Domain("empty series".into()))?;
    let mut r = first.scaled(T::zero());
    out.push(r.clone());
    for w in series.windows(2) {
        r = r.scaled(decay).axpy(c_old, &w[0]).axpy(c_new, &w[1]);
        out.push(r.clone());
    }
    Ok(out)
}

/// Update coefficients of the filter over one step:
/// `R_{m+1} = e^{-dt/ρ} R_m + c_old F_m + c_new F_{m+1}` with
/// `c_old = ρ(1-E)/dt - E`, `c_new = 1 - ρ(1-E)/dt`, `E = e^{-dt/ρ}`
/// (the exact integral of the linear interpolant against the kernel).
fn smoothing_coefficients<T: Scalar>(dt: T, rho: T) -> Result<(T, T, T)> {
    if !(rho > T::zero() && rho.is_finite()) {
        return Err(Error::Domain("smoothing scale rho must be positive".into()));
    }
    if !(dt > T::zero() && dt.is_finite()) {
        return Err(Error::Domain("grid spacing dt must be positive".into()));
    }
    let e = (-dt / rho).exp();
    let s = rho * (T::one() - e) / dt;
    Ok((e, s - e, T::one() - s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Eigenbasis;
    use std::sync::Arc;

    fn basis(n: usize) -> Arc<Eigenbasis<f64>> {
        Eigenbasis::power_law(n, 2.0).unwrap()
    }

    fn scalar_series(xs: &[f64]) -> Vec<SpectralVector<f64>> {
        let b = basis(1);
        xs.iter()
            .map(|&x| SpectralVector::new(vec![x], Arc::clone(&b)).unwrap())
            .collect()
    }

    #[test]
    fn wap_norm_of_constant_series() {
        // Constant series: no double term; the norm is (T |c|^p)^{1/p}.
        let spec = FracNormSpec::new(0.25, 2.0).unwrap();
        let dt = 0.01;
        let series = scalar_series(&vec![3.0; 101]);
        let norm = wap_norm(&series, dt, &spec, FracOrder::H).unwrap();
        let expected = (1.0f64 * 9.0).sqrt();
        assert!((norm - expected).abs() < 1e-10, "{norm} vs {expected}");

        let zero = scalar_series(&vec![0.0; 101]);
        assert_eq!(wap_norm(&zero, dt, &spec, FracOrder::H).unwrap(), 0.0);
    }

    #[test]
    fn wap_norm_of_linear_ramp_matches_closed_form() {
        // U(t) = t Φ_1 on [0,1], α = 1/4, p = 2: the seminorm part is
        // ∫∫ |t'-t''|^{1/2} dt'dt'' = 8/15 and the L² part is 1/3.
        let spec = FracNormSpec::new(0.25, 2.0).unwrap();
        let m = 200usize;
        let dt = 1.0 / m as f64;
        let xs: Vec<f64> = (0..=m).map(|i| i as f64 * dt).collect();
        let series = scalar_series(&xs);
        let norm = wap_norm(&series, dt, &spec, FracOrder::H).unwrap();
        let expected = (1.0f64 / 3.0 + 8.0 / 15.0).sqrt();
        assert!(
            (norm - expected).abs() / expected < 0.01,
            "{norm} vs {expected}"
        );

        // Independent fine-grid quadrature oracle for the same value.
        let fine = 400usize;
        let fdt = 1.0 / fine as f64;
        let mut oracle = 0.0;
        for i in 0..=fine {
            let wi = if i == 0 || i == fine { 0.5 } else { 1.0 };
            let ti = i as f64 * fdt;
            oracle += wi * ti * ti * fdt;
            for j in 0..=fine {
                if i == j {
                    continue;
                }
                let wj = if j == 0 || j == fine { 0.5 } else { 1.0 };
                let sep = (ti - j as f64 * fdt).abs();
                oracle += wi * wj * sep * sep / sep.powf(1.5) * fdt * fdt;
            }
        }
        assert!((norm - oracle.sqrt()).abs() / oracle.sqrt() < 0.01);
    }

    #[test]
    fn wap_norm_monotone_in_alpha_on_unit_interval() {
        // On T ≤ 1 separations are ≤ 1, so the kernel grows with α.
        let dt = 0.02;
        let xs: Vec<f64> = (0..=50).map(|i| (i as f64 * dt * 6.0).sin()).collect();
        let series = scalar_series(&xs);
        let mut prev = 0.0;
        for alpha in [0.1, 0.2, 0.3, 0.45] {
            let spec = FracNormSpec::new(alpha, 2.0).unwrap();
            let norm = wap_norm(&series, dt, &spec, FracOrder::H).unwrap();
            assert!(norm + 1e-12 >= prev, "norm decreased at alpha {alpha}");
            prev = norm;
        }
    }

    #[test]
    fn wap_norm_rejects_single_point() {
        let spec = FracNormSpec::new(0.25, 2.0).unwrap();
        let series = scalar_series(&[1.0]);
        assert!(wap_norm(&series, 0.1, &spec, FracOrder::H).is_err());
    }

    #[test]
    fn frac_norm_spec_validation() {
        assert!(FracNormSpec::new(0.0, 2.0).is_err());
        assert!(FracNormSpec::new(1.1, 2.0).is_err());
        assert!(FracNormSpec::new(0.5, 1.0).is_err());
        assert!(FracNormSpec::new(0.5, 2.1).unwrap().embedding_regime());
        assert!(!FracNormSpec::new(0.25, 2.0).unwrap().embedding_regime());
    }

    #[test]
    fn w12_norm_fixtures() {
        // Constant series: derivative part zero.
        let series = scalar_series(&[2.0, 2.0, 2.0, 2.0, 2.0]);
        let dt = 0.25;
        let norm = w12_norm(&series, dt).unwrap();
        assert!((norm - 2.0).abs() < 1e-12);

        // Zero series.
        let zeros = scalar_series(&[0.0; 5]);
        assert_eq!(w12_norm(&zeros, dt).unwrap(), 0.0);
    }

    #[test]
    fn smoothing_constant_input_closed_form() {
        // R_ρ(1)(t) = 1 - e^{-t/ρ}; the recurrence is exact for constants.
        let rho = 0.1;
        let dt = 0.01;
        let xs = vec![1.0f64; 11];
        let out = smoothing_scalar(&xs, dt, rho).unwrap();
        for (m, &r) in out.iter().enumerate() {
            let t = m as f64 * dt;
            let expected = 1.0 - (-t / rho).exp();
            assert!(
                (r - expected).abs() < 1e-12,
                "R({t}) = {r}, expected {expected}"
            );
        }
        // At t = 0.1, ρ = 0.1: 1 - e^{-1}.
        assert!((out[10] - (1.0 - (-1.0f64).exp())).abs() < 1e-12);

        let zeros = smoothing_scalar(&[0.0; 8], dt, rho).unwrap();
        assert!(zeros.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn smoothing_bias_decreases_with_rho() {
        // On a smooth fixture the filter bias |R_ρ(F) - F|(T) shrinks as ρ
        // does.
        let dt = 1e-3;
        let m = 1000usize;
        let xs: Vec<f64> = (0..=m).map(|i| (i as f64 * dt * 3.0).cos()).collect();
        let target = xs[m];
        let mut prev = f64::INFINITY;
        for rho in [0.2, 0.05, 0.01] {
            let out = smoothing_scalar(&xs, dt, rho).unwrap();
            let bias = (out[m] - target).abs();
            assert!(bias < prev, "bias {bias} did not decrease at rho {rho}");
            prev = bias;
        }
    }

    #[test]
    fn smoothing_series_matches_scalar_componentwise() {
        let b = basis(2);
        let series: Vec<SpectralVector<f64>> = (0..=10)
            .map(|i| {
                SpectralVector::new(vec![i as f64, 1.0], Arc::clone(&b)).unwrap()
            })
            .collect();
        let out = smoothing_series(&series, 0.1, 0.3).unwrap();
        let first: Vec<f64> = series.iter().map(|v| v.coeffs()[0]).collect();
        let scalar = smoothing_scalar(&first, 0.1, 0.3).unwrap();
        for (v, s) in out.iter().zip(scalar) {
            assert!((v.coeffs()[0] - s).abs() < 1e-14);
        }
        assert!(smoothing_scalar(&first, 0.1, 0.0).is_err());
    }
}
