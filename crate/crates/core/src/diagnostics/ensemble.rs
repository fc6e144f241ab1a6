//! Ensemble harnesses: uniform-moment ladders, pairwise convergence
//! diagnostics, same-noise uniqueness checks, and the stochastic-integral
//! convergence ladder.
//!
//! Every harness derives per-trial seeds from one master seed, fans the
//! trials out over the worker pool, and reduces with commutative merges, so
//! reports are bit-identical regardless of thread count. Trajectories that
//! lose numerical finiteness are quarantined and counted, never silently
//! dropped.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::AbstractModel;
use crate::noise::{HsColumns, NoisePath};
use crate::prng::{derive_seed, CounterRng};
use crate::scalar::{KahanSum, Scalar};
use crate::solver::{RunError, Solver, SolverConfig};
use crate::spectral::{FracOrder, SpectralVector};

use super::{w12_drift_norm, wap_stoch_integral_norm, FracNormSpec};

/// Seed provenance embedded in every report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedManifest {
    pub master_seed: u64,
    /// Identifier of the per-trial derivation rule.
    pub derivation: String,
    pub trials: usize,
}

impl SeedManifest {
    fn new(master_seed: u64, trials: usize) -> Self {
        Self {
            master_seed,
            derivation: "splitmix-derive-v1".into(),
            trials,
        }
    }
}

/// Deterministic initial data `U₀` with coefficients `amplitude · k^{-decay}`
/// over the model's full dimension; dimension ladders project it.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    pub amplitude: f64,
    pub decay: f64,
    /// When set, each trial scales `U₀` by a uniform factor in `[0.5, 1.5]`
    /// (keeps all moments of `‖U₀‖` finite).
    #[serde(default)]
    pub random_scale: bool,
    /// Restricts the support of `U₀` to the first `support` modes.
    #[serde(default)]
    pub support: Option<usize>,
}

impl InitSpec {
    pub fn build<T: Scalar>(
        &self,
        model: &dyn AbstractModel<T>,
        trial_seed: u64,
    ) -> Result<SpectralVector<T>> {
        let dim = model.dim();
        let support = self.support.unwrap_or(dim).min(dim);
        let mut coeffs: Vec<T> = (1..=dim)
            .map(|k| {
                if k > support {
                    T::zero()
                } else {
                    T::from_f64_lossy(self.amplitude * (k as f64).powf(-self.decay))
                }
            })
            .collect();
        if self.random_scale {
            let rng = CounterRng::new(trial_seed, u64::MAX);
            let s = T::from_f64_lossy(0.5 + rng.uniform_at(0));
            for c in coeffs.iter_mut() {
                *c *= s;
            }
        }
        SpectralVector::new(coeffs, Arc::clone(model.basis()))
    }
}

/// Shared Monte Carlo parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub trials: usize,
    pub master_seed: u64,
    pub init: InitSpec,
    /// Spec of the fractional time norm measured on the stochastic integral.
    pub frac: FracNormSpec,
}

/// One row of the moment table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentRow {
    pub statistic: String,
    pub p: f64,
    pub n: usize,
    pub mean: f64,
    /// `None` when fewer than two trials survive.
    pub std_error: Option<f64>,
    pub trials_used: usize,
    pub failures: usize,
}

/// Moment-ladder report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub model: String,
    pub dims: Vec<usize>,
    pub p_list: Vec<f64>,
    pub moment_table: Vec<MomentRow>,
    /// No statistic's mean grows from the smallest to the largest dimension
    /// by more than three pooled standard errors.
    pub uniformity_pass: bool,
    pub embedding_regime: bool,
    pub seeds: SeedManifest,
}

fn mean_and_se(samples: &[f64]) -> (f64, Option<f64>) {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, Some((var / n as f64).sqrt()))
}

struct TrialStats {
    /// `(statistic index, p) -> value`; layout `[stat][p]` flattened.
    per_p: Vec<f64>,
    drift_w12: f64,
}

const STAT_SUP_V_PLUS_ENERGY: &str = "sup_v_plus_energy";
const STAT_ENERGY_POW: &str = "energy_pow";
const STAT_ITO_FRAC_TIME: &str = "ito_frac_time";
const STAT_DRIFT_W12: &str = "drift_w12";

/// Monte Carlo means and standard errors, over a dimension ladder, of the
/// four trajectory statistics the uniform estimates control:
///
/// 1. `sup_t ‖Uⁿ‖^p + ∫ |AUⁿ|² ‖Uⁿ‖^{p-2} dt`
/// 2. `(∫ |AUⁿ|² dt)^{p/2}`
/// 3. `|∫σⁿ(Uⁿ)dW|^p` in `W^{α,p}([0,T]; H)`
/// 4. `|Uⁿ - ∫σⁿ(Uⁿ)dW|²` in `W^{1,2}([0,T]; H)`
///
/// All dimensions share initial data and per-trial noise. The verdict passes
/// when no statistic's mean increases from the smallest to the largest
/// dimension by more than three pooled standard errors.
pub fn moment_harness<T: Scalar>(
    model: &dyn AbstractModel<T>,
    dims: &[usize],
    p_list: &[f64],
    base: &SolverConfig,
    ens: &EnsembleConfig,
    c0_est: f64,
) -> Result<EnsembleSummary> {
    if dims.is_empty() || p_list.is_empty() {
        return Err(Error::Domain("need at least one dimension and one p".into()));
    }
    let steps = base.steps();
    let mut table = Vec::new();

    for &n in dims {
        let mut cfg = base.clone();
        cfg.galerkin_dim = n;
        let solver = Solver::new(model, cfg, c0_est)?;

        let outcomes: Vec<Result<Option<TrialStats>>> = (0..ens.trials)
            .into_par_iter()
            .map(|trial| {
                let seed = derive_seed(ens.master_seed, trial as u64);
                let u0 = ens.init.build(model, seed)?;
                let noise = NoisePath::sample(
                    seed,
                    base.noise_modes,
                    steps,
                    T::from_f64_lossy(base.dt),
                )?;
                let record = match solver.run_truncated(&u0, &noise) {
                    Ok(r) => r,
                    Err(RunError::Numerical(_)) => return Ok(None),
                    Err(RunError::Model(e)) => return Err(e),
                };
                let dt = T::from_f64_lossy(base.dt);

                let sup_v = record
                    .v_norm
                    .iter()
                    .copied()
                    .fold(T::zero(), |a, b| if b > a { b } else { a });
                let energy = *record.energy_integral.last().unwrap();
                let frac = wap_stoch_integral_norm(&record, &ens.frac)?;
                let drift = w12_drift_norm(&record)?;

                let mut per_p = Vec::with_capacity(3 * p_list.len());
                for &p in p_list {
                    let pt = T::from_f64_lossy(p);
                    // Weighted energy ∫ |AU|²‖U‖^{p-2} dt from the per-step
                    // columns (left endpoints, matching the running
                    // integrals).
                    let mut weighted = KahanSum::new();
                    for m in 0..steps {
                        let da = record.da_norm[m];
                        let v = record.v_norm[m];
                        weighted.add(da * da * v.powf(pt - T::from_f64_lossy(2.0)) * dt);
                    }
                    per_p.push((sup_v.powf(pt) + weighted.total()).to_f64_lossy());
                    per_p.push(energy.powf(pt / T::from_f64_lossy(2.0)).to_f64_lossy());
                    per_p.push(frac.powf(pt).to_f64_lossy());
                }
                Ok(Some(TrialStats {
                    per_p,
                    drift_w12: (drift * drift).to_f64_lossy(),
                }))
            })
            .collect();

        let mut survivors: Vec<TrialStats> = Vec::with_capacity(ens.trials);
        let mut failures = 0usize;
        for o in outcomes {
            match o? {
                Some(s) => survivors.push(s),
                None => failures += 1,
            }
        }
        if survivors.is_empty() {
            return Err(Error::InsufficientSamples(format!(
                "all {} trials failed numerically at n = {n}",
                ens.trials
            )));
        }

        for (pi, &p) in p_list.iter().enumerate() {
            for (si, stat) in [
                STAT_SUP_V_PLUS_ENERGY,
                STAT_ENERGY_POW,
                STAT_ITO_FRAC_TIME,
            ]
            .iter()
            .enumerate()
            {
                let samples: Vec<f64> =
                    survivors.iter().map(|t| t.per_p[3 * pi + si]).collect();
                let (mean, std_error) = mean_and_se(&samples);
                table.push(MomentRow {
                    statistic: (*stat).into(),
                    p,
                    n,
                    mean,
                    std_error,
                    trials_used: survivors.len(),
                    failures,
                });
            }
        }
        let samples: Vec<f64> = survivors.iter().map(|t| t.drift_w12).collect();
        let (mean, std_error) = mean_and_se(&samples);
        table.push(MomentRow {
            statistic: STAT_DRIFT_W12.into(),
            p: 2.0,
            n,
            mean,
            std_error,
            trials_used: survivors.len(),
            failures,
        });
    }

    let uniformity_pass = uniformity_verdict(&table, dims);
    Ok(EnsembleSummary {
        model: model.label().to_string(),
        dims: dims.to_vec(),
        p_list: p_list.to_vec(),
        moment_table: table,
        uniformity_pass,
        embedding_regime: ens.frac.embedding_regime(),
        seeds: SeedManifest::new(ens.master_seed, ens.trials),
    })
}

/// Pass iff, for every `(statistic, p)`, the mean at the largest dimension
/// exceeds the mean at the smallest by no more than three pooled standard
/// errors.
fn uniformity_verdict(table: &[MomentRow], dims: &[usize]) -> bool {
    let (n_min, n_max) = (dims[0], *dims.last().unwrap());
    if n_min == n_max {
        return true;
    }
    for row in table.iter().filter(|r| r.n == n_min) {
        let Some(big) = table
            .iter()
            .find(|r| r.n == n_max && r.statistic == row.statistic && r.p == row.p)
        else {
            return false;
        };
        // Undefined standard errors (single-trial runs) make the comparison
        // vacuous: the report flags them by omission instead.
        let pooled = match (row.std_error, big.std_error) {
            (Some(a), Some(b)) => (a * a + b * b).sqrt(),
            _ => continue,
        };
        if big.mean > row.mean + 3.0 * pooled {
            return false;
        }
    }
    true
}

/// One pair's distance quantiles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GkPairRow {
    pub n: usize,
    pub m: usize,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
    pub failures: usize,
}

/// Pairwise same-noise Cauchy diagnostic report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GkReport {
    pub model: String,
    pub pairs: Vec<GkPairRow>,
    /// Medians strictly decrease along the declared chain.
    pub medians_decreasing: bool,
    pub seeds: SeedManifest,
}

/// Empirical quantile by linear interpolation on the sorted sample.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
    }
}

/// Phase-space distance between coupled Galerkin runs at two dimensions,
/// driven by one noise path:
///
/// ```text
/// d(Uⁿ, Uᵐ) = (∫₀ᵀ ‖Uⁿ - Uᵐ‖² dt)^{1/2} + sup_t |Uⁿ - Uᵐ|_{-1/2},
/// ```
///
/// reported as per-pair quantiles (25/50/75/95%) over the trials. Convergence
/// in probability of the sequence manifests as medians decreasing along a
/// refinement chain of pairs.
pub fn gk_cauchy<T: Scalar>(
    model: &dyn AbstractModel<T>,
    dim_pairs: &[(usize, usize)],
    base: &SolverConfig,
    ens: &EnsembleConfig,
    c0_est: f64,
) -> Result<GkReport> {
    if dim_pairs.is_empty() {
        return Err(Error::Domain("need at least one dimension pair".into()));
    }
    let steps = base.steps();
    let dt = T::from_f64_lossy(base.dt);
    let mut rows = Vec::with_capacity(dim_pairs.len());

    for &(n, m) in dim_pairs {
        let mut cfg_n = base.clone();
        cfg_n.galerkin_dim = n;
        let mut cfg_m = base.clone();
        cfg_m.galerkin_dim = m;
        let solver_n = Solver::new(model, cfg_n, c0_est)?;
        let solver_m = Solver::new(model, cfg_m, c0_est)?;

        let outcomes: Vec<Result<Option<f64>>> = (0..ens.trials)
            .into_par_iter()
            .map(|trial| {
                let seed = derive_seed(ens.master_seed, trial as u64);
                let u0 = ens.init.build(model, seed)?;
                let noise =
                    NoisePath::sample(seed, base.noise_modes, steps, dt)?;

                let u0n = u0.project_low(n)?.resized(n)?;
                let u0m = u0.project_low(m)?.resized(m)?;
                let mut state_n = u0n.clone();
                let mut state_m = u0m.clone();
                let mut l2_acc = KahanSum::<T>::new();
                let mut sup_dual = T::zero();

                for step in 0..=steps {
                    let t = T::from_f64_lossy(step as f64) * dt;
                    let diff = state_n.sub(&state_m);
                    let dual = diff.frac_norm(FracOrder::V_DUAL);
                    if dual > sup_dual {
                        sup_dual = dual;
                    }
                    if step == steps {
                        break;
                    }
                    l2_acc.add(diff.frac_norm_sq(FracOrder::V) * dt);
                    if !(state_n.is_finite() && state_m.is_finite()) {
                        return Ok(None);
                    }
                    let dw = noise.step_slice(step);
                    let ustar_n = u0n.heat_semigroup(t)?;
                    let ustar_m = u0m.heat_semigroup(t)?;
                    state_n = match solver_n.step(&state_n, &ustar_n, t, &dw) {
                        Ok(s) => s,
                        Err(Error::InvalidState(_)) => return Ok(None),
                        Err(e) => return Err(e),
                    };
                    state_m = match solver_m.step(&state_m, &ustar_m, t, &dw) {
                        Ok(s) => s,
                        Err(Error::InvalidState(_)) => return Ok(None),
                        Err(e) => return Err(e),
                    };
                }
                Ok(Some((l2_acc.total().sqrt() + sup_dual).to_f64_lossy()))
            })
            .collect();

        let mut distances = Vec::with_capacity(ens.trials);
        let mut failures = 0usize;
        for o in outcomes {
            match o? {
                Some(d) => distances.push(d),
                None => failures += 1,
            }
        }
        if distances.is_empty() {
            return Err(Error::InsufficientSamples(format!(
                "all trials failed for pair ({n}, {m})"
            )));
        }
        distances.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rows.push(GkPairRow {
            n,
            m,
            q25: quantile(&distances, 0.25),
            q50: quantile(&distances, 0.50),
            q75: quantile(&distances, 0.75),
            q95: quantile(&distances, 0.95),
            failures,
        });
    }

    let medians_decreasing = rows.windows(2).all(|w| w[1].q50 < w[0].q50);
    Ok(GkReport {
        model: model.label().to_string(),
        pairs: rows,
        medians_decreasing,
        seeds: SeedManifest::new(ens.master_seed, ens.trials),
    })
}

/// Same-noise uniqueness report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub model: String,
    pub trials: usize,
    pub agreement_trials: usize,
    /// Sup-in-time V distance over trials with coinciding initial data.
    pub max_agreement_distance: f64,
    /// Same, for the twin with re-associated drift summation.
    pub max_reassoc_distance: f64,
    /// Sup-in-time V distance over trials with distinct initial data
    /// (reported, unconstrained).
    pub max_disagreement_distance: f64,
    pub pass: bool,
    pub seeds: SeedManifest,
}

/// Runs same-noise twin trajectories. On the seeded fraction of trials whose
/// initial data coincide, the two runs must agree in sup-V distance to
/// `1e-10`, and the twin with re-associated floating-point drift summation to
/// `1e-8`; on the rest the distance is reported but unconstrained.
///
/// Requires Lipschitz verification to have produced constants first; refuses
/// otherwise.
pub fn uniqueness_check<T: Scalar>(
    model: &dyn AbstractModel<T>,
    lipschitz_verified: bool,
    u0_alt_amplitude: f64,
    agreement_fraction: f64,
    base: &SolverConfig,
    ens: &EnsembleConfig,
    c0_est: f64,
) -> Result<UniquenessReport> {
    if !lipschitz_verified {
        return Err(Error::Precondition(
            "uniqueness check requires Lipschitz constants; run the Lipschitz verifier first"
                .into(),
        ));
    }
    if !(0.0..=1.0).contains(&agreement_fraction) {
        return Err(Error::Domain("agreement fraction must be in [0, 1]".into()));
    }
    let steps = base.steps();
    let dt = T::from_f64_lossy(base.dt);
    let solver = Solver::new(model, base.clone(), c0_est)?;
    let mut split_cfg = base.clone();
    split_cfg.drift_association = crate::solver::DriftAssociation::Split;
    let solver_split = Solver::new(model, split_cfg, c0_est)?;

    struct TrialOut {
        agreement: bool,
        distance: f64,
        reassoc_distance: f64,
    }

    let outcomes: Vec<Result<Option<TrialOut>>> = (0..ens.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = derive_seed(ens.master_seed, trial as u64);
            let noise = NoisePath::sample(seed, base.noise_modes, steps, dt)?;
            let u0_a = ens.init.build(model, seed)?;
            let agreement =
                CounterRng::new(seed, u64::MAX - 1).uniform_at(0) < agreement_fraction;
            let u0_b = if agreement {
                u0_a.clone()
            } else {
                // Distinct data: scaled and shifted in the leading mode.
                let mut coeffs = u0_a.coeffs().to_vec();
                coeffs[0] += T::from_f64_lossy(u0_alt_amplitude);
                SpectralVector::new(coeffs, Arc::clone(u0_a.basis()))?
            };

            let run = |s: &Solver<T>, u0: &SpectralVector<T>| -> Result<Option<Vec<(usize, SpectralVector<T>)>>> {
                match s.run_truncated(u0, &noise) {
                    Ok(r) => Ok(Some(r.states)),
                    Err(RunError::Numerical(_)) => Ok(None),
                    Err(RunError::Model(e)) => Err(e),
                }
            };
            let (Some(sa), Some(sb), Some(sc)) = (
                run(&solver, &u0_a)?,
                run(&solver, &u0_b)?,
                run(&solver_split, &u0_a)?,
            ) else {
                return Ok(None);
            };

            let sup_v = |xs: &[(usize, SpectralVector<T>)], ys: &[(usize, SpectralVector<T>)]| {
                xs.iter()
                    .zip(ys.iter())
                    .map(|((_, x), (_, y))| x.sub(y).frac_norm(FracOrder::V).to_f64_lossy())
                    .fold(0.0f64, f64::max)
            };
            Ok(Some(TrialOut {
                agreement,
                distance: sup_v(&sa, &sb),
                reassoc_distance: sup_v(&sa, &sc),
            }))
        })
        .collect();

    let mut agreement_trials = 0usize;
    let mut max_agree = 0.0f64;
    let mut max_reassoc = 0.0f64;
    let mut max_disagree = 0.0f64;
    let mut used = 0usize;
    for o in outcomes {
        let Some(t) = o? else { continue };
        used += 1;
        max_reassoc = max_reassoc.max(t.reassoc_distance);
        if t.agreement {
            agreement_trials += 1;
            max_agree = max_agree.max(t.distance);
        } else {
            max_disagree = max_disagree.max(t.distance);
        }
    }
    if used == 0 {
        return Err(Error::InsufficientSamples(
            "all uniqueness trials failed numerically".into(),
        ));
    }
    let pass = max_agree <= 1e-10 && max_reassoc <= 1e-8;
    Ok(UniquenessReport {
        model: model.label().to_string(),
        trials: used,
        agreement_trials,
        max_agreement_distance: max_agree,
        max_reassoc_distance: max_reassoc,
        max_disagreement_distance: max_disagree,
        pass,
        seeds: SeedManifest::new(ens.master_seed, ens.trials),
    })
}

/// Ladder parameters of the stochastic-integral convergence check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegralLadderConfig {
    /// Integrand perturbation sizes, declared in decreasing order.
    pub deltas: Vec<f64>,
    /// Noise mollification levels, declared in increasing order.
    pub levels: Vec<u32>,
    pub trials: usize,
    pub steps: usize,
    pub dt: f64,
    /// Exceedance threshold ε on the `L²([0,T]; H)` distance.
    pub epsilon: f64,
    pub master_seed: u64,
}

/// Exceedance table of the ladder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegralReport {
    pub deltas: Vec<f64>,
    pub levels: Vec<u32>,
    /// `exceedance[i][j]` = empirical `P(distance > ε)` at `(deltas[i],
    /// levels[j])`.
    pub exceedance: Vec<Vec<f64>>,
    pub epsilon: f64,
    /// Nonincreasing along rows and columns, and below 5% at the finest
    /// corner.
    pub pass: bool,
    pub seeds: SeedManifest,
}

/// Empirical convergence of `∫ Gⁿ dWⁿ` to `∫ G dW` in `L²([0,T]; H)` under a
/// ladder of integrand perturbations `Gⁿ = G + δ · P` and noise mollification
/// levels `Wⁿ = mollify(W, level)`. Integrands are deterministic
/// (time-constant) columns, so the running integrals are
/// `Σ_k G_k W_k(t)`.
pub fn integral_convergence_check<T: Scalar>(
    g_target: &HsColumns<T>,
    perturbation: &HsColumns<T>,
    cfg: &IntegralLadderConfig,
) -> Result<IntegralReport> {
    if g_target.is_empty() {
        return Err(Error::Domain("target integrand has no columns".into()));
    }
    if g_target.len() != perturbation.len() {
        return Err(Error::DimensionMismatch(
            "target and perturbation must have equal column counts".into(),
        ));
    }
    if cfg.deltas.is_empty() || cfg.levels.is_empty() || cfg.trials == 0 {
        return Err(Error::Domain("empty ladder".into()));
    }
    let k_modes = g_target.len();
    let dt = T::from_f64_lossy(cfg.dt);

    // distance² = Σ_m |Σ_k (Gⁿ_k Wⁿ_k(t_m) - G_k W_k(t_m))|²_H dt
    // (left-endpoint quadrature on the running integrals).
    let cell = |delta: f64, level: u32, trial: usize| -> Result<f64> {
        let seed = derive_seed(cfg.master_seed, trial as u64);
        let w = NoisePath::<T>::sample(seed, k_modes, cfg.steps, dt)?;
        let wn = w.mollify(level);
        let d = T::from_f64_lossy(delta);

        let mut dist2 = KahanSum::<T>::new();
        // Running Wiener values per mode.
        let mut cw = vec![T::zero(); k_modes];
        let mut cwn = vec![T::zero(); k_modes];
        for m in 1..=cfg.steps {
            for k in 0..k_modes {
                cw[k] += w.increment(k, m - 1);
                cwn[k] += wn.increment(k, m - 1);
            }
            let mut diff: Option<SpectralVector<T>> = None;
            for k in 0..k_modes {
                let gk = &g_target.columns()[k];
                let pk = &perturbation.columns()[k];
                // Gⁿ_k Wⁿ_k - G_k W_k = G_k (Wⁿ_k - W_k) + δ P_k Wⁿ_k.
                let term = gk.scaled(cwn[k] - cw[k]).axpy(d * cwn[k], pk);
                diff = Some(match diff {
                    Some(acc) => acc.add(&term),
                    None => term,
                });
            }
            let diff = diff.expect("k_modes >= 1");
            dist2.add(diff.frac_norm_sq(FracOrder::H) * dt);
        }
        Ok(dist2.total().sqrt().to_f64_lossy())
    };

    let mut exceedance = vec![vec![0.0f64; cfg.levels.len()]; cfg.deltas.len()];
    for (i, &delta) in cfg.deltas.iter().enumerate() {
        for (j, &level) in cfg.levels.iter().enumerate() {
            let hits: Vec<Result<bool>> = (0..cfg.trials)
                .into_par_iter()
                .map(|trial| Ok(cell(delta, level, trial)? > cfg.epsilon))
                .collect();
            let mut count = 0usize;
            for h in hits {
                if h? {
                    count += 1;
                }
            }
            exceedance[i][j] = count as f64 / cfg.trials as f64;
        }
    }

    let mut pass = exceedance[cfg.deltas.len() - 1][cfg.levels.len() - 1] < 0.05;
    for row in &exceedance {
        for w in row.windows(2) {
            if w[1] > w[0] {
                pass = false;
            }
        }
    }
    for j in 0..cfg.levels.len() {
        for i in 1..cfg.deltas.len() {
            if exceedance[i][j] > exceedance[i - 1][j] {
                pass = false;
            }
        }
    }

    Ok(IntegralReport {
        deltas: cfg.deltas.clone(),
        levels: cfg.levels.clone(),
        exceedance,
        epsilon: cfg.epsilon,
        pass,
        seeds: SeedManifest::new(cfg.master_seed, cfg.trials),
    })
}
