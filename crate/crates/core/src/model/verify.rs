//! Statistical verifiers for the model contracts.
//!
//! True suprema over `D(A)` are unattainable numerically, so every constant
//! reported here is an empirical max over seeded Gaussian samples — a lower
//! bound on the true constant. Reports carry the sample count and seed so the
//! provenance is explicit. Samples are drawn per-index from the counter
//! generator, so verification parallelizes and reduces with an
//! order-independent max.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::prng::CounterRng;
use crate::scalar::Scalar;
use crate::spectral::{Eigenbasis, FracOrder, SpectralVector};

use super::AbstractModel;

/// Sampling parameters shared by all verifiers.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VerifierConfig {
    /// Number of random samples (states or state pairs).
    pub samples: usize,
    /// Master seed; sample `i` uses stream `i`.
    pub seed: u64,
    /// Coefficient decay of the sampling distribution: `U_k ~ N(0, λ_k^{-2β})`.
    /// The default `β = 1` keeps samples in `D(A)` without letting high modes
    /// dominate `|AU|`.
    pub beta: f64,
    /// Times are sampled uniformly in `[0, t_max]`.
    pub t_max: f64,
    /// Number of noise columns evaluated for the `σ` classes.
    pub noise_modes: usize,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        Self {
            samples: 1000,
            seed: 0,
            beta: 1.0,
            t_max: 1.0,
            noise_modes: 16,
        }
    }
}

/// Empirical constants certifying the model contracts, serialized with fixed
/// field names.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub c0_est: f64,
    #[serde(rename = "growth_F")]
    pub growth_f: f64,
    #[serde(rename = "growth_sigma_H")]
    pub growth_sigma_h: f64,
    #[serde(rename = "growth_sigma_V")]
    pub growth_sigma_v: f64,
    #[serde(rename = "growth_sigma_DA")]
    pub growth_sigma_da: f64,
    #[serde(rename = "lip_F")]
    pub lip_f: Option<f64>,
    #[serde(rename = "lip_sigma_H")]
    pub lip_sigma_h: Option<f64>,
    #[serde(rename = "lip_sigma_V")]
    pub lip_sigma_v: Option<f64>,
    #[serde(rename = "lip_sigma_DA")]
    pub lip_sigma_da: Option<f64>,
    pub cancellation_residual: f64,
    pub samples: u64,
    pub seed: u64,
}

impl AssumptionReport {
    pub fn has_lipschitz(&self) -> bool {
        self.lip_f.is_some()
            && self.lip_sigma_h.is_some()
            && self.lip_sigma_v.is_some()
            && self.lip_sigma_da.is_some()
    }
}

/// Gaussian sample with coefficient `k` of standard deviation `λ_k^{-β}`,
/// read off positions `base_pos..base_pos + n` of `rng`.
pub fn sample_state<T: Scalar>(
    basis: &Arc<Eigenbasis<T>>,
    n: usize,
    beta: f64,
    rng: &CounterRng,
    base_pos: u64,
) -> SpectralVector<T> {
    let neg_beta = T::from_f64_lossy(-beta);
    let coeffs = (0..n)
        .map(|k| {
            let sd = basis.lambda(k + 1).powf(neg_beta);
            sd * T::from_f64_lossy(rng.normal_at(base_pos + k as u64))
        })
        .collect();
    SpectralVector::new(coeffs, Arc::clone(basis)).expect("gaussian sample is finite")
}

fn sampled_time<T: Scalar>(cfg: &VerifierConfig, rng: &CounterRng, pos: u64) -> T {
    T::from_f64_lossy(rng.uniform_at(pos) * cfg.t_max)
}

/// Runs `f` over all sample indices in parallel and reduces with max,
/// skipping samples for which `f` returns `None`. Errors propagate.
fn par_max_over_samples<F>(samples: usize, f: F) -> Result<(f64, usize)>
where
    F: Fn(usize) -> Result<Option<f64>> + Sync,
{
    let evaluated: Result<Vec<Option<f64>>> = (0..samples).into_par_iter().map(&f).collect();
    let mut max = 0.0f64;
    let mut used = 0usize;
    for r in evaluated?.into_iter().flatten() {
        used += 1;
        if r > max {
            max = r;
        }
    }
    Ok((max, used))
}

/// Max over random `(U, U♯)` of the normalized cancellation residual
/// `|⟨B(U,U♯),U♯⟩| / (1 + ‖U‖·|AU♯|·‖U♯‖)`.
pub fn verify_cancellation<T: Scalar>(
    model: &dyn AbstractModel<T>,
    n: usize,
    samples: usize,
    seed: u64,
    beta: f64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InsufficientSamples("need samples >= 1".into()));
    }
    let basis = Arc::clone(model.basis());
    let (max, _) = par_max_over_samples(samples, |i| {
        let rng = CounterRng::new(seed, i as u64);
        let u = sample_state(&basis, n, beta, &rng, 0);
        let usharp = sample_state(&basis, n, beta, &rng, n as u64);
        let b = model.bilinear(&u, &usharp)?;
        let pairing = b.inner(&usharp).to_f64_lossy().abs();
        let scale = 1.0
            + (u.frac_norm(FracOrder::V)
                * usharp.frac_norm(FracOrder::DOMAIN_A)
                * usharp.frac_norm(FracOrder::V))
            .to_f64_lossy();
        Ok(Some(pairing / scale))
    })?;
    Ok(max)
}

/// Empirical lower bound for the bilinear constant `c₀`, taken as the max of
/// both ratio families
///
/// `|⟨B(U,U♯),U♭⟩| / (‖U‖ |AU♯| ‖U♭‖)` and
/// `|⟨B(U,U♯),U♭⟩| / (‖U‖^{1/2} |AU|^{1/2} ‖U♯‖^{1/2} |AU♯|^{1/2} |U♭|)`.
///
/// Degenerate draws (zero denominators) are skipped; an all-degenerate run is
/// an error.
pub fn estimate_c0<T: Scalar>(
    model: &dyn AbstractModel<T>,
    n: usize,
    samples: usize,
    seed: u64,
    beta: f64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InsufficientSamples("need samples >= 1".into()));
    }
    let basis = Arc::clone(model.basis());
    let (max, used) = par_max_over_samples(samples, |i| {
        let rng = CounterRng::new(seed, i as u64);
        let u = sample_state(&basis, n, beta, &rng, 0);
        let usharp = sample_state(&basis, n, beta, &rng, n as u64);
        let uflat = sample_state(&basis, n, beta, &rng, 2 * n as u64);
        let b = model.bilinear(&u, &usharp)?;
        let pairing = b.inner(&uflat).to_f64_lossy().abs();

        let d2 = (u.frac_norm(FracOrder::V)
            * usharp.frac_norm(FracOrder::DOMAIN_A)
            * uflat.frac_norm(FracOrder::V))
        .to_f64_lossy();
        let d3 = (u.frac_norm(FracOrder::V).sqrt()
            * u.frac_norm(FracOrder::DOMAIN_A).sqrt()
            * usharp.frac_norm(FracOrder::V).sqrt()
            * usharp.frac_norm(FracOrder::DOMAIN_A).sqrt()
            * uflat.frac_norm(FracOrder::H))
        .to_f64_lossy();

        let r2 = if d2 > 0.0 && d2.is_finite() {
            Some(pairing / d2)
        } else {
            None
        };
        let r3 = if d3 > 0.0 && d3.is_finite() {
            Some(pairing / d3)
        } else {
            None
        };
        Ok(match (r2, r3) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (Some(a), None) | (None, Some(a)) => Some(a),
            (None, None) => None,
        })
    })?;
    if used == 0 {
        return Err(Error::InsufficientSamples(
            "all c0 samples were degenerate".into(),
        ));
    }
    Ok(max)
}

/// Empirical sup of `|F(t,U)|_H / (1 + ‖U‖_V)`. The zero state is always
/// included as the first sample.
pub fn verify_growth_forcing<T: Scalar>(
    model: &dyn AbstractModel<T>,
    n: usize,
    cfg: &VerifierConfig,
) -> Result<f64> {
    let basis = Arc::clone(model.basis());
    let (max, _) = par_max_over_samples(cfg.samples + 1, |i| {
        let rng = CounterRng::new(cfg.seed, i as u64);
        let u = if i == 0 {
            SpectralVector::zeros(n, Arc::clone(&basis))?
        } else {
            sample_state(&basis, n, cfg.beta, &rng, 0)
        };
        let t = sampled_time::<T>(cfg, &rng, n as u64);
        let f = model.forcing(t, &u)?;
        let num = f.frac_norm(FracOrder::H).to_f64_lossy();
        let den = 1.0 + u.frac_norm(FracOrder::V).to_f64_lossy();
        Ok(Some(num / den))
    })?;
    Ok(max)
}

/// Empirical sups of `‖σ(t,U)‖_{HS} / (1 + |U|_α)` at the three space pairs
/// `α ∈ {0, 1/2, 1}` (i.e. `H`, `V`, `D(A)`). Zero state included.
pub fn verify_growth_noise<T: Scalar>(
    model: &dyn AbstractModel<T>,
    n: usize,
    cfg: &VerifierConfig,
) -> Result<[f64; 3]> {
    let basis = Arc::clone(model.basis());
    let orders = [FracOrder::H, FracOrder::V, FracOrder::DOMAIN_A];
    let mut out = [0.0f64; 3];
    for (slot, order) in orders.into_iter().enumerate() {
        let (max, _) = par_max_over_samples(cfg.samples + 1, |i| {
            let rng = CounterRng::new(cfg.seed, i as u64);
            let u = if i == 0 {
                SpectralVector::zeros(n, Arc::clone(&basis))?
            } else {
                sample_state(&basis, n, cfg.beta, &rng, 0)
            };
            let t = sampled_time::<T>(cfg, &rng, n as u64);
            let cols = model.noise(t, &u, cfg.noise_modes)?;
            let num = cols.hs_norm(order).to_f64_lossy();
            let den = 1.0 + u.frac_norm(order).to_f64_lossy();
            Ok(Some(num / den))
        })?;
        out[slot] = max;
    }
    Ok(out)
}

/// Empirical sup of `|F(t,U) - F(t,U')|_H / ‖U - U'‖_V` over sampled pairs.
pub fn verify_lipschitz_forcing<T: Scalar>(
    model: &dyn AbstractModel<T>,
    n: usize,
    cfg: &VerifierConfig,
) -> Result<f64> {
    if cfg.samples == 0 {
        return Err(Error::InsufficientSamples("need samples >= 1".into()));
    }
    let basis = Arc::clone(model.basis());
    let (max, used) = par_max_over_samples(cfg.samples, |i| {
        let rng = CounterRng::new(cfg.seed, i as u64);
        let u = sample_state(&basis, n, cfg.beta, &rng, 0);
        let v = sample_state(&basis, n, cfg.beta, &rng, n as u64);
        let t = sampled_time::<T>(cfg, &rng, 2 * n as u64);
        let den = u.sub(&v).frac_norm(FracOrder::V).to_f64_lossy();
        if den == 0.0 || !den.is_finite() {
            return Ok(None);
        }
        let fu = model.forcing(t, &u)?;
        let fv = model.forcing(t, &v)?;
        let num = fu.sub(&fv).frac_norm(FracOrder::H).to_f64_lossy();
        Ok(Some(num / den))
    })?;
    if used == 0 {
        return Err(Error::InsufficientSamples(
            "all Lipschitz samples were degenerate".into(),
        ));
    }
    Ok(max)
}

/// Empirical sups of `‖σ(t,U) - σ(t,U')‖_{HS} / |U - U'|_α` at the three
/// space pairs `α ∈ {0, 1/2, 1}`.
pub fn verify_lipschitz_noise<T: Scalar>(
    model: &dyn AbstractModel<T>,
    n: usize,
    cfg: &VerifierConfig,
) -> Result<[f64; 3]> {
    if cfg.samples == 0 {
        return Err(Error::InsufficientSamples("need samples >= 1".into()));
    }
    let basis = Arc::clone(model.basis());
    let orders = [FracOrder::H, FracOrder::V, FracOrder::DOMAIN_A];
    let mut out = [0.0f64; 3];
    for (slot, order) in orders.into_iter().enumerate() {
        let (max, used) = par_max_over_samples(cfg.samples, |i| {
            let rng = CounterRng::new(cfg.seed, i as u64);
            let u = sample_state(&basis, n, cfg.beta, &rng, 0);
            let v = sample_state(&basis, n, cfg.beta, &rng, n as u64);
            let t = sampled_time::<T>(cfg, &rng, 2 * n as u64);
            let den = u.sub(&v).frac_norm(order).to_f64_lossy();
            if den == 0.0 || !den.is_finite() {
                return Ok(None);
            }
            let su = model.noise(t, &u, cfg.noise_modes)?;
            let sv = model.noise(t, &v, cfg.noise_modes)?;
            let num = su.sub(&sv)?.hs_norm(order).to_f64_lossy();
            Ok(Some(num / den))
        })?;
        if used == 0 {
            return Err(Error::InsufficientSamples(
                "all Lipschitz samples were degenerate".into(),
            ));
        }
        out[slot] = max;
    }
    Ok(out)
}

/// Max relative residual of bilinearity probes in both slots:
/// `B(aU + U', V) - aB(U,V) - B(U',V)` and symmetrically in slot 2.
pub fn verify_bilinearity<T: Scalar>(
    model: &dyn AbstractModel<T>,
    n: usize,
    samples: usize,
    seed: u64,
    beta: f64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InsufficientSamples("need samples >= 1".into()));
    }
    let basis = Arc::clone(model.basis());
    let (max, _) = par_max_over_samples(samples, |i| {
        let rng = CounterRng::new(seed, i as u64);
        let u = sample_state(&basis, n, beta, &rng, 0);
        let uprime = sample_state(&basis, n, beta, &rng, n as u64);
        let v = sample_state(&basis, n, beta, &rng, 2 * n as u64);
        let a = T::from_f64_lossy(rng.normal_at(3 * n as u64));

        // Slot 1.
        let lhs1 = model.bilinear(&u.scaled(a).add(&uprime), &v)?;
        let b_uv = model.bilinear(&u, &v)?;
        let b_upv = model.bilinear(&uprime, &v)?;
        let rhs1 = b_uv.scaled(a).add(&b_upv);
        let scale1 = 1.0
            + rhs1.frac_norm(FracOrder::H).to_f64_lossy()
            + lhs1.frac_norm(FracOrder::H).to_f64_lossy();
        let r1 = lhs1.sub(&rhs1).frac_norm(FracOrder::H).to_f64_lossy() / scale1;

        // Slot 2.
        let lhs2 = model.bilinear(&v, &u.scaled(a).add(&uprime))?;
        let b_vu = model.bilinear(&v, &u)?;
        let b_vup = model.bilinear(&v, &uprime)?;
        let rhs2 = b_vu.scaled(a).add(&b_vup);
        let scale2 = 1.0
            + rhs2.frac_norm(FracOrder::H).to_f64_lossy()
            + lhs2.frac_norm(FracOrder::H).to_f64_lossy();
        let r2 = lhs2.sub(&rhs2).frac_norm(FracOrder::H).to_f64_lossy() / scale2;

        Ok(Some(r1.max(r2)))
    })?;
    Ok(max)
}

/// Runs all verifiers and assembles the report. Lipschitz constants are
/// estimated only when `with_lipschitz` is set (the growth classes are always
/// measured).
pub fn verify_model<T: Scalar>(
    model: &dyn AbstractModel<T>,
    n: usize,
    cfg: &VerifierConfig,
    with_lipschitz: bool,
) -> Result<AssumptionReport> {
    let cancellation_residual =
        verify_cancellation(model, n, cfg.samples, cfg.seed, cfg.beta)?;
    let c0_est = estimate_c0(model, n, cfg.samples, cfg.seed, cfg.beta)?;
    let growth_f = verify_growth_forcing(model, n, cfg)?;
    let [growth_sigma_h, growth_sigma_v, growth_sigma_da] = verify_growth_noise(model, n, cfg)?;
    let (lip_f, lip_h, lip_v, lip_da) = if with_lipschitz {
        let f = verify_lipschitz_forcing(model, n, cfg)?;
        let [h, v, da] = verify_lipschitz_noise(model, n, cfg)?;
        (Some(f), Some(h), Some(v), Some(da))
    } else {
        (None, None, None, None)
    };
    Ok(AssumptionReport {
        c0_est,
        growth_f,
        growth_sigma_h,
        growth_sigma_v,
        growth_sigma_da,
        lip_f,
        lip_sigma_h: lip_h,
        lip_sigma_v: lip_v,
        lip_sigma_da: lip_da,
        cancellation_residual,
        samples: cfg.samples as u64,
        seed: cfg.seed,
    })
}
