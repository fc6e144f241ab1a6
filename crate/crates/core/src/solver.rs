//! Time integration of the cutoff Galerkin system
//!
//! ```text
//! dUⁿ + [AUⁿ + θ(‖Uⁿ - Uⁿ_*‖) Bⁿ(Uⁿ) + Fⁿ(Uⁿ)] dt = σⁿ(Uⁿ) dW,
//! Uⁿ(0) = P_n U₀,
//! ```
//!
//! paired with the auxiliary linear flow `dUⁿ_*/dt + AUⁿ_* = 0`,
//! `Uⁿ_*(0) = P_n U₀`, which is evaluated exactly through the semigroup
//! rather than co-stepped — the cutoff argument `‖Uⁿ - Uⁿ_*‖` then carries
//! no extra discretization error. The cutoff is evaluated at the left
//! endpoint of each step (predictable evaluation, matching the Itô
//! convention), so the modified dynamics coincide with the uncut dynamics
//! strictly before the stopping time
//!
//! ```text
//! τ = inf { t : ‖Uⁿ - Uⁿ_*‖ ≥ κ },
//! ```
//!
//! which [`detect_tau`] reads off the recorded distance column. Mathematical
//! blow-up is a recorded announcement — the first passage of
//! `sup_{[0,t]} ‖U‖² + ∫₀^t |AU|²` through a level — and is never conflated
//! with numerical non-finiteness, which aborts the run with a partial record.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AbstractModel, CutoffSpec};
use crate::noise::NoisePath;
use crate::scalar::{KahanSum, Scalar};
use crate::spectral::{FracOrder, SpectralVector};

/// Time-stepping scheme for the stiff linear term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Exponential Euler: the linear flow is applied exactly,
    /// `U_{m+1} = e^{-dt A} [U_m - dt (θ_m B + F) + σ ΔW_m]`.
    ExpEuler,
    /// Semi-implicit Euler: `(I + dt A)^{-1}` in place of the exponential.
    SemiImplicitEuler,
}

/// Order in which the drift terms are accumulated. `Split` re-associates the
/// floating-point summation; it is the perturbed twin used by the uniqueness
/// diagnostics and changes nothing mathematically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DriftAssociation {
    #[default]
    Fused,
    Split,
}

/// Integration parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Galerkin dimension `n`.
    pub galerkin_dim: usize,
    /// Step size; `dt ≤ T`.
    pub dt: f64,
    /// Final time `T`.
    pub t_final: f64,
    pub scheme: Scheme,
    pub cutoff: CutoffSpec,
    /// Retained noise modes `K`.
    pub noise_modes: usize,
    /// States and the running stochastic integral are recorded every
    /// `record_stride` steps (norm columns are always per-step).
    #[serde(default = "SolverConfig::default_stride")]
    pub record_stride: usize,
    /// Forces `θ ≡ 1` (the uncut twin used by coincidence checks).
    #[serde(default)]
    pub force_theta_one: bool,
    #[serde(default)]
    pub drift_association: DriftAssociation,
    /// Blow-up announcement levels.
    #[serde(default = "SolverConfig::default_levels")]
    pub announce_levels: Vec<f64>,
}

impl SolverConfig {
    fn default_stride() -> usize {
        1
    }

    fn default_levels() -> Vec<f64> {
        vec![1.0, 2.0, 4.0, 8.0]
    }

    /// Number of time steps `M = T/dt` (the grid has `M + 1` points).
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.galerkin_dim == 0 {
            return Err(Error::Domain("galerkin_dim must be positive".into()));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) || !(self.t_final.is_finite()) {
            return Err(Error::Domain("dt and t_final must be finite, dt > 0".into()));
        }
        if self.dt > self.t_final {
            return Err(Error::Domain("dt must not exceed t_final".into()));
        }
        let m = self.t_final / self.dt;
        if (m - m.round()).abs() > 1e-9 * m.max(1.0) {
            return Err(Error::Domain(format!(
                "t_final/dt = {m} is not an integer step count"
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::Domain("record_stride must be positive".into()));
        }
        Ok(())
    }
}

/// Everything a trajectory records: per-step norms and running integrals,
/// strided state snapshots, the stopping-time index, and announcement
/// indices.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord<T: Scalar> {
    pub times: Vec<T>,
    /// `‖U‖` per grid point.
    pub v_norm: Vec<T>,
    /// `|AU|` per grid point.
    pub da_norm: Vec<T>,
    /// `‖U - U_*‖` per grid point.
    pub dist_to_ustar: Vec<T>,
    /// `θ(‖U - U_*‖)` per grid point.
    pub theta_value: Vec<T>,
    /// Running `Σ |AU|² dt` (left endpoints; entry 0 is 0).
    pub energy_integral: Vec<T>,
    /// Running `Σ ‖U‖² |AU|² dt`.
    pub blowup_integral: Vec<T>,
    /// `(grid index, state)` at stride points and the final index.
    pub states: Vec<(usize, SpectralVector<T>)>,
    /// `(grid index, running ∫σ(U)dW)` at the same indices.
    pub stoch_integral: Vec<(usize, SpectralVector<T>)>,
    /// First grid index with `dist_to_ustar ≥ κ`, if any.
    pub tau_index: Option<usize>,
    /// `(level, first index where sup‖U‖² + ∫|AU|² ≥ level)`.
    pub announce_indices: Vec<(f64, Option<usize>)>,
}

impl<T: Scalar> TrajectoryRecord<T> {
    pub fn final_state(&self) -> &SpectralVector<T> {
        &self.states.last().expect("record holds at least one state").1
    }

    /// The recorded state at a given grid index, if that index was kept.
    pub fn state_at(&self, index: usize) -> Option<&SpectralVector<T>> {
        self.states
            .iter()
            .find(|(i, _)| *i == index)
            .map(|(_, s)| s)
    }
}

/// A run that lost finiteness: the partial record plus the last index at
/// which the state was still finite.
#[derive(Debug)]
pub struct NumericalBlowup<T: Scalar> {
    pub partial: Box<TrajectoryRecord<T>>,
    pub last_valid_index: usize,
}

/// Run outcome: either a complete record or a numerical failure carrying the
/// partial record. Model-evaluation errors propagate as plain [`Error`]s.
#[derive(Debug)]
pub enum RunError<T: Scalar> {
    Model(Error),
    Numerical(NumericalBlowup<T>),
}

impl<T: Scalar> From<Error> for RunError<T> {
    fn from(e: Error) -> Self {
        RunError::Model(e)
    }
}

/// First grid index at which `‖U - U_*‖ ≥ κ`. Strictly before this index the
/// cutoff is identically 1 and the modified and original dynamics coincide.
pub fn detect_tau<T: Scalar>(record: &TrajectoryRecord<T>, kappa: f64) -> Option<usize> {
    let kappa = T::from_f64_lossy(kappa);
    record.dist_to_ustar.iter().position(|&d| d >= kappa)
}

/// First-passage indices of `sup_{j≤m} ‖U_j‖² + Σ_{j<m} |AU_j|² dt` through
/// each level; `None` when the level is never reached on the grid. Indices
/// are nondecreasing in the level.
pub fn detect_announce<T: Scalar>(
    record: &TrajectoryRecord<T>,
    levels: &[f64],
) -> Vec<(f64, Option<usize>)> {
    let mut out: Vec<(f64, Option<usize>)> = levels.iter().map(|&l| (l, None)).collect();
    let mut sup_v2 = T::zero();
    for m in 0..record.times.len() {
        let v2 = record.v_norm[m] * record.v_norm[m];
        if v2 > sup_v2 {
            sup_v2 = v2;
        }
        let quantity = sup_v2 + record.energy_integral[m];
        for (level, idx) in out.iter_mut() {
            if idx.is_none() && quantity >= T::from_f64_lossy(*level) {
                *idx = Some(m);
            }
        }
    }
    out
}

/// Integrator for one model at one Galerkin order.
pub struct Solver<'m, T: Scalar> {
    model: &'m dyn AbstractModel<T>,
    config: SolverConfig,
    /// `e^{-λ_k dt}` (exp scheme) or `1/(1 + dt λ_k)` (semi-implicit).
    linear_factors: Vec<T>,
}

impl<'m, T: Scalar> Solver<'m, T> {
    /// Validates the configuration, including the cutoff admissibility
    /// `κ ≤ κ_max(c₀)` against a measured bilinear constant (`c₀ = 0`, e.g.
    /// a linear model, admits any radius).
    pub fn new(
        model: &'m dyn AbstractModel<T>,
        config: SolverConfig,
        c0_est: f64,
    ) -> Result<Self> {
        config.validate()?;
        if config.galerkin_dim > model.basis().dim_max() {
            return Err(Error::Domain(format!(
                "galerkin_dim {} exceeds the model's dim_max {}",
                config.galerkin_dim,
                model.basis().dim_max()
            )));
        }
        if !config.cutoff.admissible_for(c0_est)? {
            return Err(Error::Domain(format!(
                "cutoff radius {} exceeds the admissible 1/(64 c0) = {} for c0 = {c0_est}",
                config.cutoff.kappa,
                1.0 / (64.0 * c0_est)
            )));
        }
        let dt = T::from_f64_lossy(config.dt);
        let basis = model.basis();
        let linear_factors = (1..=config.galerkin_dim)
            .map(|k| match config.scheme {
                Scheme::ExpEuler => (-basis.lambda(k) * dt).exp(),
                Scheme::SemiImplicitEuler => T::one() / (T::one() + dt * basis.lambda(k)),
            })
            .collect();
        Ok(Self {
            model,
            config,
            linear_factors,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Exact trajectory of the auxiliary linear system on the full grid.
    /// Each grid value is `e^{-t_m A} P_n U₀` evaluated directly, not
    /// time-stepped.
    pub fn run_aux_linear(&self, u0: &SpectralVector<T>) -> Result<TrajectoryRecord<T>> {
        let n = self.config.galerkin_dim;
        let u0n = u0.project_low(n.min(u0.len().max(1)))?.resized(n)?;
        let steps = self.config.steps();
        let dt = T::from_f64_lossy(self.config.dt);

        let mut record = self.empty_record(steps);
        let mut energy = KahanSum::new();
        let mut blowup = KahanSum::new();
        for m in 0..=steps {
            let t = T::from_f64_lossy(m as f64) * dt;
            let state = u0n.heat_semigroup(t)?;
            let v = state.frac_norm(FracOrder::V);
            let da = state.frac_norm(FracOrder::DOMAIN_A);
            record.times.push(t);
            record.v_norm.push(v);
            record.da_norm.push(da);
            record.dist_to_ustar.push(T::zero());
            record.theta_value.push(T::one());
            record.energy_integral.push(energy.total());
            record.blowup_integral.push(blowup.total());
            if m % self.config.record_stride == 0 || m == steps {
                record.states.push((m, state.clone()));
                record
                    .stoch_integral
                    .push((m, SpectralVector::zeros(n, Arc::clone(u0.basis()))?));
            }
            energy.add(da * da * dt);
            blowup.add(v * v * da * da * dt);
        }
        record.announce_indices = detect_announce(&record, &self.config.announce_levels);
        Ok(record)
    }

    /// One step of the cutoff Galerkin scheme from `state` at time `t`,
    /// with the auxiliary value `ustar` and the noise increments `dw` of the
    /// step. All operator outputs are projected onto `H_n`.
    pub fn step(
        &self,
        state: &SpectralVector<T>,
        ustar: &SpectralVector<T>,
        t: T,
        dw: &[T],
    ) -> Result<SpectralVector<T>> {
        let n = self.config.galerkin_dim;
        let dt = T::from_f64_lossy(self.config.dt);

        let dist = state.sub(ustar).frac_norm(FracOrder::V);
        if !dist.is_finite() {
            return Err(Error::InvalidState("non-finite cutoff argument".into()));
        }
        let theta = if self.config.force_theta_one {
            1.0
        } else {
            self.config.cutoff.eval(dist.to_f64_lossy())
        };

        let forcing = self.model.forcing(t, state)?.resized(n)?;
        let noise_cols = self.model.noise(t, state, self.config.noise_modes)?;

        // Bracket: U_m - dt (θ B + F) + σ ΔW, with the configured summation
        // association: `Fused` groups the drift first and adds the noise
        // last; `Split` adds the noise first and subtracts the drift terms
        // one by one with separately rounded scale factors. Identical in
        // exact arithmetic. θ = 0 skips the bilinear evaluation entirely.
        let noise_incr = if noise_cols.is_empty() {
            None
        } else {
            Some(noise_cols.project_low(n)?.ito_increment(dw)?.resized(n)?)
        };
        let bracket = match self.config.drift_association {
            DriftAssociation::Fused => {
                let mut drift = forcing;
                if theta != 0.0 {
                    let b = self.model.bilinear(state, state)?.resized(n)?;
                    drift = b.scaled(T::from_f64_lossy(theta)).add(&drift);
                }
                let mut acc = state.axpy(-dt, &drift);
                if let Some(incr) = &noise_incr {
                    acc = acc.add(incr);
                }
                acc
            }
            DriftAssociation::Split => {
                let mut acc = state.clone();
                if let Some(incr) = &noise_incr {
                    acc = acc.add(incr);
                }
                if theta != 0.0 {
                    let b = self.model.bilinear(state, state)?.resized(n)?;
                    acc = acc.axpy(-dt * T::from_f64_lossy(theta), &b);
                }
                acc.axpy(-dt, &forcing)
            }
        };

        let coeffs: Vec<T> = bracket
            .coeffs()
            .iter()
            .zip(self.linear_factors.iter())
            .map(|(&c, &f)| c * f)
            .collect();
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidState("state lost finiteness".into()));
        }
        SpectralVector::new(coeffs, Arc::clone(state.basis()))
    }

    /// Integrates the modified (cutoff) system over the full grid. The
    /// modified dynamics are global: cutoff activation is recorded, never
    /// fatal. Only numerical non-finiteness aborts, with a partial record.
    pub fn run_truncated(
        &self,
        u0: &SpectralVector<T>,
        noise: &NoisePath<T>,
    ) -> std::result::Result<TrajectoryRecord<T>, RunError<T>> {
        let n = self.config.galerkin_dim;
        let steps = self.config.steps();
        if noise.steps() < steps {
            return Err(RunError::Model(Error::DimensionMismatch(format!(
                "noise path has {} steps, need {steps}",
                noise.steps()
            ))));
        }
        if noise.k_modes() < self.config.noise_modes {
            return Err(RunError::Model(Error::DimensionMismatch(format!(
                "noise path has {} modes, need {}",
                noise.k_modes(),
                self.config.noise_modes
            ))));
        }
        let path_dt = noise.dt().to_f64_lossy();
        if (path_dt - self.config.dt).abs() > 1e-12 * self.config.dt {
            return Err(RunError::Model(Error::GridMismatch(format!(
                "noise dt {path_dt} does not match solver dt {}",
                self.config.dt
            ))));
        }

        let u0n = u0
            .project_low(n.min(u0.len().max(1)))
            .map_err(RunError::Model)?
            .resized(n)
            .map_err(RunError::Model)?;
        let dt = T::from_f64_lossy(self.config.dt);
        let kappa = self.config.cutoff.kappa;

        let mut record = self.empty_record(steps);
        let mut energy = KahanSum::new();
        let mut blowup = KahanSum::new();
        let mut state = u0n.clone();
        let mut ito_acc = SpectralVector::zeros(n, Arc::clone(u0.basis()))
            .map_err(RunError::Model)?;

        for m in 0..=steps {
            let t = T::from_f64_lossy(m as f64) * dt;
            let ustar = u0n.heat_semigroup(t).map_err(RunError::Model)?;
            let dist = state.sub(&ustar).frac_norm(FracOrder::V);
            let theta = if self.config.force_theta_one {
                T::one()
            } else {
                T::from_f64_lossy(self.config.cutoff.eval(dist.to_f64_lossy()))
            };
            let v = state.frac_norm(FracOrder::V);
            let da = state.frac_norm(FracOrder::DOMAIN_A);

            record.times.push(t);
            record.v_norm.push(v);
            record.da_norm.push(da);
            record.dist_to_ustar.push(dist);
            record.theta_value.push(theta);
            record.energy_integral.push(energy.total());
            record.blowup_integral.push(blowup.total());
            if m % self.config.record_stride == 0 || m == steps {
                record.states.push((m, state.clone()));
                record.stoch_integral.push((m, ito_acc.clone()));
            }
            if record.tau_index.is_none() && dist >= T::from_f64_lossy(kappa) {
                record.tau_index = Some(m);
            }
            if m == steps {
                break;
            }

            energy.add(da * da * dt);
            blowup.add(v * v * da * da * dt);

            // Track the running Itô sum alongside the state.
            let dw = noise.step_slice(m);
            let cols = self
                .model
                .noise(t, &state, self.config.noise_modes)
                .map_err(RunError::Model)?;
            if !cols.is_empty() {
                let incr = cols
                    .project_low(n)
                    .and_then(|c| c.ito_increment(&dw))
                    .and_then(|v| v.resized(n))
                    .map_err(RunError::Model)?;
                ito_acc = ito_acc.add(&incr);
            }

            match self.step(&state, &ustar, t, &dw) {
                Ok(next) => state = next,
                Err(Error::InvalidState(_)) => {
                    record.announce_indices =
                        detect_announce(&record, &self.config.announce_levels);
                    return Err(RunError::Numerical(NumericalBlowup {
                        partial: Box::new(record),
                        last_valid_index: m,
                    }));
                }
                Err(e) => return Err(RunError::Model(e)),
            }
        }
        record.announce_indices = detect_announce(&record, &self.config.announce_levels);
        Ok(record)
    }

    fn empty_record(&self, steps: usize) -> TrajectoryRecord<T> {
        TrajectoryRecord {
            times: Vec::with_capacity(steps + 1),
            v_norm: Vec::with_capacity(steps + 1),
            da_norm: Vec::with_capacity(steps + 1),
            dist_to_ustar: Vec::with_capacity(steps + 1),
            theta_value: Vec::with_capacity(steps + 1),
            energy_integral: Vec::with_capacity(steps + 1),
            blowup_integral: Vec::with_capacity(steps + 1),
            states: Vec::new(),
            stoch_integral: Vec::new(),
            tau_index: None,
            announce_indices: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ForcingSpec, NoiseSpec, SyntheticModel, SyntheticSpec};

    fn synthetic(dim: usize, noise: NoiseSpec) -> SyntheticModel<f64> {
        SyntheticModel::generate(SyntheticSpec {
            dim,
            pairs_per_mode: 8,
            decay_exponent: 1.0,
            amplitude: 1.0,
            seed: 7,
            eigen_exponent: 2.0,
            noise,
            forcing: ForcingSpec::None,
        })
        .unwrap()
    }

    fn zero_model(dim: usize) -> SyntheticModel<f64> {
        SyntheticModel::from_constants(
            SyntheticSpec {
                dim,
                pairs_per_mode: 0,
                decay_exponent: 1.0,
                amplitude: 0.0,
                seed: 0,
                eigen_exponent: 2.0,
                noise: NoiseSpec::None,
                forcing: ForcingSpec::None,
            },
            &[],
        )
        .unwrap()
    }

    fn config(n: usize, dt: f64, t_final: f64) -> SolverConfig {
        SolverConfig {
            galerkin_dim: n,
            dt,
            t_final,
            scheme: Scheme::ExpEuler,
            cutoff: CutoffSpec::smooth_exp(0.015625).unwrap(),
            noise_modes: 4,
            record_stride: 1,
            force_theta_one: false,
            drift_association: DriftAssociation::Fused,
            announce_levels: vec![1.0, 2.0],
        }
    }

    #[test]
    fn aux_linear_is_analytic() {
        let model = zero_model(4);
        let solver = Solver::new(&model, config(4, 0.25, 1.0), 0.0).unwrap();
        let u0 = SpectralVector::unit(1, 4, Arc::clone(model.basis())).unwrap();
        let rec = solver.run_aux_linear(&u0).unwrap();
        // λ_1 = 1: value at t = 1 is e^{-1} Φ_1.
        let last = rec.final_state();
        assert!((last.coeffs()[0] - (-1.0f64).exp()).abs() < 1e-15);
        // V norm nonincreasing on the grid.
        for w in rec.v_norm.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-15));
        }
    }

    #[test]
    fn aux_linear_energy_matches_geometric_sum() {
        // Left-Riemann Σ |AU*|² dt with U* = e^{-λt}Φ_k has the closed form
        // λ² dt (1 - e^{-2λT}) / (1 - e^{-2λ dt}), and is bounded by
        // ‖U0‖²/2 + O(dt).
        let model = zero_model(4);
        let (dt, t_final) = (1e-3, 1.0);
        let solver = Solver::new(&model, config(4, dt, t_final), 0.0).unwrap();
        let u0 = SpectralVector::unit(2, 4, Arc::clone(model.basis())).unwrap();
        let lam: f64 = 4.0;
        let rec = solver.run_aux_linear(&u0).unwrap();
        let discrete = *rec.energy_integral.last().unwrap();
        let closed =
            lam * lam * dt * (1.0 - (-2.0 * lam * t_final).exp()) / (1.0 - (-2.0 * lam * dt).exp());
        assert!(
            (discrete - closed).abs() < 1e-10 * closed,
            "discrete {discrete} vs closed form {closed}"
        );
        let v0_sq = u0.frac_norm_sq(FracOrder::V);
        assert!(discrete <= 0.5 * v0_sq + 2.0 * lam * lam * dt);
    }

    #[test]
    fn step_reduces_to_heat_flow_without_terms() {
        let model = zero_model(4);
        let solver = Solver::new(&model, config(4, 0.125, 1.0), 0.0).unwrap();
        let u = SpectralVector::new(vec![1.0, -0.5, 0.25, 2.0], Arc::clone(model.basis()))
            .unwrap();
        let ustar = u.clone();
        let next = solver.step(&u, &ustar, 0.0, &[0.0; 4]).unwrap();
        let exact = u.heat_semigroup(0.125).unwrap();
        for (a, b) in next.coeffs().iter().zip(exact.coeffs()) {
            assert!((a - b).abs() < 1e-16);
        }
    }

    #[test]
    fn step_consistency_as_dt_vanishes() {
        let model = synthetic(8, NoiseSpec::None);
        let mut cfg = config(8, 1e-8, 1e-8);
        cfg.noise_modes = 1;
        let solver = Solver::new(&model, cfg, 1.0).unwrap();
        let u = SpectralVector::new(
            vec![0.3, -0.1, 0.05, 0.02, 0.0, 0.0, 0.0, 0.0],
            Arc::clone(model.basis()),
        )
        .unwrap();
        let next = solver.step(&u, &u, 0.0, &[0.0]).unwrap();
        let rel = next.sub(&u).frac_norm(FracOrder::H) / u.frac_norm(FracOrder::H);
        assert!(rel < 1e-6, "single tiny step moved the state by {rel}");
    }

    #[test]
    fn theta_clamp_excludes_bilinear_term() {
        // ‖U - U*‖ = 3κ puts θ on its zero plateau: the step must coincide
        // with the same step under the zero-bilinear model.
        let with_b = synthetic(8, NoiseSpec::None);
        let without_b = zero_model(8);
        let cfg = config(8, 1e-3, 1.0);
        let kappa = cfg.cutoff.kappa;
        let s1 = Solver::new(&with_b, cfg.clone(), 1.0).unwrap();
        let s2 = Solver::new(&without_b, cfg, 0.0).unwrap();

        let ustar = SpectralVector::zeros(8, Arc::clone(with_b.basis())).unwrap();
        // ‖Φ_1‖ = λ_1^{1/2} = 1, so 3κ Φ_1 has V-distance exactly 3κ from 0.
        let u = SpectralVector::unit(1, 8, Arc::clone(with_b.basis()))
            .unwrap()
            .scaled(3.0 * kappa);
        let a = s1.step(&u, &ustar, 0.0, &[0.0; 4]).unwrap();
        let b = s2.step(&u, &ustar, 0.0, &[0.0; 4]).unwrap();
        for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
            assert!((x - y).abs() <= 1e-14);
        }
    }

    #[test]
    fn zero_model_run_equals_aux_linear() {
        let model = zero_model(6);
        let solver = Solver::new(&model, config(6, 1e-2, 0.5), 0.0).unwrap();
        let u0 = SpectralVector::new(
            vec![1.0, 0.5, -0.25, 0.1, 0.0, 0.3],
            Arc::clone(model.basis()),
        )
        .unwrap();
        let noise = NoisePath::sample(3, 4, 50, 1e-2).unwrap();
        let run = solver.run_truncated(&u0, &noise).unwrap();
        let aux = solver.run_aux_linear(&u0).unwrap();
        for m in 0..run.times.len() {
            assert!((run.v_norm[m] - aux.v_norm[m]).abs() <= 1e-12 * aux.v_norm[m].max(1.0));
        }
        let (last_run, last_aux) = (run.final_state(), aux.final_state());
        for (a, b) in last_run.coeffs().iter().zip(last_aux.coeffs()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(run.tau_index, None);
    }

    #[test]
    fn runs_are_deterministic() {
        let model = synthetic(8, NoiseSpec::Additive { amplitude: 0.05, decay: 3.0 });
        let cfg = config(8, 1e-3, 0.25);
        let solver = Solver::new(&model, cfg.clone(), 1.0).unwrap();
        let u0 = SpectralVector::unit(1, 8, Arc::clone(model.basis()))
            .unwrap()
            .scaled(0.01);
        let noise = NoisePath::sample(42, 4, 250, 1e-3).unwrap();
        let a = solver.run_truncated(&u0, &noise).unwrap();
        let b = solver.run_truncated(&u0, &noise).unwrap();
        assert_eq!(a.final_state().coeffs(), b.final_state().coeffs());
        assert_eq!(a.v_norm, b.v_norm);
    }

    #[test]
    fn golden_final_state_hash() {
        // Frozen on first run; pins the full numerical path of the seeded
        // synthetic run (n = 16, dt = 1e-3, T = 1).
        let model = synthetic(16, NoiseSpec::Additive { amplitude: 0.02, decay: 3.0 });
        let mut cfg = config(16, 1e-3, 1.0);
        cfg.noise_modes = 4;
        let solver = Solver::new(&model, cfg, 1.0).unwrap();
        let u0 = SpectralVector::unit(1, 16, Arc::clone(model.basis()))
            .unwrap()
            .scaled(0.01);
        let noise = NoisePath::sample(2024, 4, 1000, 1e-3).unwrap();
        let run = solver.run_truncated(&u0, &noise).unwrap();
        let hash = crate::io::content_hash(&crate::io::encode_vector(run.final_state()));
        assert_eq!(hash, "999c67e28f4caf0f");
    }

    #[test]
    fn detect_tau_on_fixture_records() {
        let model = zero_model(2);
        let solver = Solver::new(&model, config(2, 0.5, 1.0), 0.0).unwrap();
        let u0 = SpectralVector::unit(1, 2, Arc::clone(model.basis())).unwrap();
        let mut rec = solver.run_aux_linear(&u0).unwrap();
        assert_eq!(detect_tau(&rec, 0.015625), None);
        // Fixture distances (0, κ/2, 2κ) cross at index 2.
        let kappa = 0.015625;
        rec.dist_to_ustar = vec![0.0, kappa / 2.0, 2.0 * kappa];
        rec.times.truncate(3);
        assert_eq!(detect_tau(&rec, kappa), Some(2));
    }

    #[test]
    fn announce_levels_on_linear_decay_fixture() {
        // U(t) = e^{-t} Φ_1 with λ_1 = 1: sup‖U‖² = 1 from t = 0, and
        // ∫|AU|² = (1 - e^{-2t})/2 stays below 1/2; level 1 announces at the
        // first grid point, level 2 never.
        let model = zero_model(2);
        let solver = Solver::new(&model, config(2, 1e-3, 1.0), 0.0).unwrap();
        let u0 = SpectralVector::unit(1, 2, Arc::clone(model.basis())).unwrap();
        let rec = solver.run_aux_linear(&u0).unwrap();
        let announced = detect_announce(&rec, &[1.0, 2.0]);
        assert_eq!(announced[0], (1.0, Some(0)));
        assert_eq!(announced[1], (2.0, None));

        // Zero trajectory: nothing announces at levels >= 1.
        let zrec = solver
            .run_aux_linear(&SpectralVector::zeros(2, Arc::clone(model.basis())).unwrap())
            .unwrap();
        for (_, idx) in detect_announce(&zrec, &[1.0, 2.0, 4.0]) {
            assert_eq!(idx, None);
        }
    }

    #[test]
    fn announce_indices_monotone_in_level() {
        let model = synthetic(8, NoiseSpec::Additive { amplitude: 0.3, decay: 2.0 });
        let mut cfg = config(8, 1e-3, 1.0);
        cfg.announce_levels = vec![0.01, 0.05, 0.1, 0.5, 1.0];
        let solver = Solver::new(&model, cfg, 1.0).unwrap();
        let u0 = SpectralVector::unit(1, 8, Arc::clone(model.basis()))
            .unwrap()
            .scaled(0.01);
        let noise = NoisePath::sample(5, 4, 1000, 1e-3).unwrap();
        let rec = solver.run_truncated(&u0, &noise).unwrap();
        let mut prev = Some(0usize);
        for (level, idx) in &rec.announce_indices {
            if let (Some(p), Some(i)) = (prev, *idx) {
                assert!(i >= p, "announce index decreased at level {level}");
            }
            prev = *idx;
        }
        // The blow-up integral is nondecreasing in time.
        for w in rec.blowup_integral.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn cutoff_admissibility_enforced_at_construction() {
        let model = synthetic(8, NoiseSpec::None);
        let mut cfg = config(8, 1e-3, 1.0);
        cfg.cutoff = CutoffSpec::smooth_exp(0.5).unwrap();
        // c0 = 1 → κ_max = 0.015625 < 0.5: must refuse.
        assert!(Solver::new(&model, cfg.clone(), 1.0).is_err());
        // A zero bilinear constant admits any κ.
        assert!(Solver::new(&model, cfg, 0.0).is_ok());
    }

    #[test]
    fn numerical_blowup_reports_partial_record() {
        // Forcing F(U) = 400 U with dt·scale >> 1 under semi-implicit would
        // still be stable; use exploding forcing with exp scheme and a huge
        // scale so the state overflows quickly.
        let model = SyntheticModel::<f64>::generate(SyntheticSpec {
            dim: 4,
            pairs_per_mode: 0,
            decay_exponent: 1.0,
            amplitude: 0.0,
            seed: 0,
            eigen_exponent: 2.0,
            noise: NoiseSpec::None,
            forcing: ForcingSpec::Linear { scale: -1e155 },
        })
        .unwrap();
        let solver = Solver::new(&model, config(4, 0.5, 4.0), 0.0).unwrap();
        let u0 = SpectralVector::unit(1, 4, Arc::clone(model.basis())).unwrap();
        let noise = NoisePath::sample(1, 4, 8, 0.5).unwrap();
        match solver.run_truncated(&u0, &noise) {
            Err(RunError::Numerical(nb)) => {
                assert!(nb.last_valid_index < 8);
                assert_eq!(nb.partial.times.len(), nb.last_valid_index + 1);
            }
            other => panic!("expected numerical blow-up, got {other:?}"),
        }
    }

    #[test]
    fn semi_implicit_scheme_steps_stably() {
        let model = synthetic(8, NoiseSpec::None);
        let mut cfg = config(8, 0.05, 1.0);
        cfg.scheme = Scheme::SemiImplicitEuler;
        let solver = Solver::new(&model, cfg, 1.0).unwrap();
        let u0 = SpectralVector::unit(1, 8, Arc::clone(model.basis()))
            .unwrap()
            .scaled(0.01);
        let noise = NoisePath::sample(9, 4, 20, 0.05).unwrap();
        let rec = solver.run_truncated(&u0, &noise).unwrap();
        assert!(rec.final_state().is_finite());
        // (I + dt A)^{-1} is a contraction too.
        assert!(rec.v_norm.last().unwrap() <= &(rec.v_norm[0] * 1.0 + 1e-15));
    }
}
