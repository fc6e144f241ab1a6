//! Subcommand implementations.
//!
//! Exit contract: 0 = pass, 1 = verdict fail (or a trajectory lost
//! finiteness), 2 = usage/config error. Every command writes its artifacts
//! plus a manifest under the output directory.

use std::path::Path;
use std::sync::Arc;

use sgs_core::diagnostics::{
    gk_cauchy, integral_convergence_check, moment_harness, uniqueness_check, IntegralLadderConfig,
};
use sgs_core::io::{encode_noise, encode_vector, fmt_f64, noise_sidecar, write_trajectory_csv};
use sgs_core::model::{
    estimate_c0, verify_model, AbstractModel, AssumptionReport, VerifierConfig,
};
use sgs_core::noise::{HsColumns, NoisePath};
use sgs_core::prng::derive_seed;
use sgs_core::solver::{RunError, Solver};
use sgs_core::spectral::{FracOrder, SpectralVector};

use crate::artifacts::{sha256_hex, ArtifactSet};
use crate::config::RunConfig;

/// Command outcome mapped to the exit contract.
pub enum Outcome {
    Pass,
    VerdictFail(String),
    Usage(String),
}

/// Command-level error (maps to exit code 2).
#[derive(Debug)]
pub struct CmdError(pub String);

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

impl From<sgs_core::Error> for CmdError {
    fn from(e: sgs_core::Error) -> Self {
        CmdError(e.to_string())
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError(format!("i/o error: {e}"))
    }
}

impl From<serde_json::Error> for CmdError {
    fn from(e: serde_json::Error) -> Self {
        CmdError(format!("serialization error: {e}"))
    }
}

pub type CmdResult = Result<Outcome, CmdError>;

fn usage<E: std::fmt::Display>(e: E) -> Outcome {
    Outcome::Usage(e.to_string())
}

fn verifier_config(cfg: &RunConfig) -> VerifierConfig {
    let check = &cfg.diagnostics.check;
    VerifierConfig {
        samples: check.samples,
        seed: cfg.master_seed,
        beta: check.beta,
        t_max: check.t_max,
        noise_modes: check.noise_modes,
    }
}

fn check_dimension(cfg: &RunConfig, model: &dyn AbstractModel<f64>) -> usize {
    cfg.diagnostics
        .check
        .dimension
        .unwrap_or_else(|| model.dim())
        .min(model.dim())
}

/// Hash identifying the (model, check) blocks; keys the cached report.
fn check_config_hash(cfg: &RunConfig) -> String {
    let key = serde_json::json!({
        "model": &cfg.model,
        "check": &cfg.diagnostics.check,
        "seed": cfg.master_seed,
    });
    sha256_hex(serde_json::to_string(&key).expect("key serializes").as_bytes())
}

/// The `c₀` estimate feeding the cutoff admissibility rule: reuses a cached
/// check report when its config hash matches, otherwise estimates afresh.
fn c0_for_solver(
    cfg: &RunConfig,
    model: &dyn AbstractModel<f64>,
    out_dir: &Path,
) -> Result<f64, CmdError> {
    let cached = out_dir.join("check_report.json");
    if let Ok(text) = std::fs::read_to_string(&cached) {
        if let Ok(value) = serde_json::from_str::<serde_json::Value>(&text) {
            if value.get("config_hash").and_then(|h| h.as_str())
                == Some(check_config_hash(cfg).as_str())
            {
                if let Some(c0) = value.get("c0_est").and_then(|v| v.as_f64()) {
                    return Ok(c0);
                }
            }
        }
    }
    let check = &cfg.diagnostics.check;
    if check.samples < 1000 {
        eprintln!(
            "warning: c0 estimated from {} samples (< 1000); the admissible cutoff \
             radius may be too loose",
            check.samples
        );
    }
    Ok(estimate_c0(
        model,
        check_dimension(cfg, model),
        check.samples,
        cfg.master_seed,
        check.beta,
    )?)
}

/// `check-model`: runs every contract verifier and writes the report.
/// Passes iff the cancellation residual is ≤ 1e-8 (all requested constant
/// classes are always reported).
pub fn cmd_check_model(cfg: &RunConfig, out_dir: &Path) -> CmdResult {
    let handle = match cfg.model.build() {
        Ok(h) => h,
        Err(e) => return Ok(usage(e)),
    };
    let model = handle.as_dyn();
    let vcfg = verifier_config(cfg);
    if vcfg.samples < 1000 {
        eprintln!(
            "warning: verifying with {} samples (< 1000); constants are loose lower bounds",
            vcfg.samples
        );
    }
    let n = check_dimension(cfg, model);
    let report = verify_model(model, n, &vcfg, cfg.diagnostics.check.lipschitz)?;

    let mut artifacts = ArtifactSet::new(out_dir)?;
    let mut doc = serde_json::to_value(&report).expect("report serializes");
    doc["label"] = serde_json::json!(model.label());
    doc["dimension"] = serde_json::json!(n);
    doc["config_hash"] = serde_json::json!(check_config_hash(cfg));
    artifacts.add_json("check_report.json", &doc)?;
    artifacts.finish("check-model", model.label(), cfg, serde_json::json!({}))?;

    print_report_summary(&report);
    if report.cancellation_residual <= 1e-8 {
        Ok(Outcome::Pass)
    } else {
        Ok(Outcome::VerdictFail(format!(
            "cancellation residual {} above 1e-8",
            report.cancellation_residual
        )))
    }
}

fn print_report_summary(report: &AssumptionReport) {
    println!(
        "check-model: cancellation_residual={} c0_est={} growth_F={}",
        fmt_f64(report.cancellation_residual),
        fmt_f64(report.c0_est),
        fmt_f64(report.growth_f),
    );
}

/// `simulate`: one seeded trajectory; writes the CSV table, binary state and
/// noise snapshots, and the manifest. Prints stopping-time and announcement
/// events.
pub fn cmd_simulate(cfg: &RunConfig, out_dir: &Path) -> CmdResult {
    let Some(sim) = cfg.diagnostics.simulate.clone() else {
        return Ok(usage("config has no diagnostics.simulate block"));
    };
    let handle = match cfg.model.build() {
        Ok(h) => h,
        Err(e) => return Ok(usage(e)),
    };
    let model = handle.as_dyn();
    let c0 = c0_for_solver(cfg, model, out_dir)?;
    let solver = match Solver::new(model, cfg.solver.clone(), c0) {
        Ok(s) => s,
        Err(e) => return Ok(usage(e)),
    };

    let seed = derive_seed(cfg.master_seed, 0);
    let u0 = sim.init.build(model, seed)?;
    let noise = NoisePath::sample(
        seed,
        cfg.solver.noise_modes,
        cfg.solver.steps(),
        cfg.solver.dt,
    )?;

    let (record, numerical_failure) = match solver.run_truncated(&u0, &noise) {
        Ok(r) => (r, None),
        Err(RunError::Numerical(nb)) => {
            let idx = nb.last_valid_index;
            (*nb.partial, Some(idx))
        }
        Err(RunError::Model(e)) => return Err(e.into()),
    };

    match record.tau_index {
        Some(idx) => println!(
            "simulate: tau reached at step {idx} (t = {})",
            fmt_f64(record.times[idx])
        ),
        None => println!("simulate: tau not reached on [0, T]"),
    }
    for (level, idx) in &record.announce_indices {
        match idx {
            Some(i) => println!(
                "simulate: level {level} announced at step {i} (t = {})",
                fmt_f64(record.times[*i])
            ),
            None => println!("simulate: level {level} never announced"),
        }
    }

    // Built-in linear self-test: against the exact heat flow.
    let mut self_test_pass = None;
    if sim.self_test_linear {
        let aux = solver.run_aux_linear(&u0)?;
        let mut max_gap = 0.0f64;
        for (&a, &b) in record.v_norm.iter().zip(aux.v_norm.iter()) {
            max_gap = max_gap.max((a - b).abs());
        }
        for ((_, x), (_, y)) in record.states.iter().zip(aux.states.iter()) {
            max_gap = max_gap.max(x.sub(y).frac_norm(FracOrder::V));
        }
        self_test_pass = Some(max_gap <= 1e-12);
        println!(
            "simulate: linear self-test gap {} ({})",
            fmt_f64(max_gap),
            if max_gap <= 1e-12 { "pass" } else { "fail" }
        );
    }

    // Noise truncation quality at the initial state, against a 4x longer
    // column expansion.
    let tail = noise_tail_fraction(model, &u0, cfg.solver.noise_modes)?;

    let mut artifacts = ArtifactSet::new(out_dir)?;
    let mut csv = Vec::new();
    write_trajectory_csv(&record, &mut csv).expect("csv into memory");
    artifacts.add_bytes("trajectory.csv", csv);
    artifacts.add_bytes("final_state.bin", encode_vector(record.final_state()));
    artifacts.add_bytes("noise.bin", encode_noise(&noise));
    artifacts.add_json("noise.json", &noise_sidecar(&noise))?;
    let extra = serde_json::json!({
        "tau_index": record.tau_index,
        "announce_indices": record.announce_indices,
        "numerical_failure_at": numerical_failure,
        "self_test_pass": self_test_pass,
        "hs_tail_fraction": tail,
        "c0_est": c0,
    });
    artifacts.finish("simulate", model.label(), cfg, extra)?;

    if let Some(idx) = numerical_failure {
        return Ok(Outcome::VerdictFail(format!(
            "trajectory lost finiteness after step {idx}; partial record written"
        )));
    }
    if self_test_pass == Some(false) {
        return Ok(Outcome::VerdictFail("linear self-test failed".into()));
    }
    Ok(Outcome::Pass)
}

fn noise_tail_fraction(
    model: &dyn AbstractModel<f64>,
    u0: &SpectralVector<f64>,
    k: usize,
) -> Result<f64, CmdError> {
    let head = model.noise(0.0, u0, k)?;
    let full = model.noise(0.0, u0, 4 * k)?;
    let h = head.hs_norm_sq(FracOrder::H);
    let f = full.hs_norm_sq(FracOrder::H);
    Ok(if f == 0.0 { 0.0 } else { ((f - h) / f).max(0.0) })
}

/// `ensemble`: the uniform-moment ladder. Passes on the uniformity verdict.
pub fn cmd_ensemble(cfg: &RunConfig, out_dir: &Path) -> CmdResult {
    let Some(block) = cfg.diagnostics.ensemble.clone() else {
        return Ok(usage("config has no diagnostics.ensemble block"));
    };
    let handle = match cfg.model.build() {
        Ok(h) => h,
        Err(e) => return Ok(usage(e)),
    };
    let model = handle.as_dyn();
    let c0 = c0_for_solver(cfg, model, out_dir)?;
    let ens = cfg.ensemble_config(block.init, block.frac, block.trials);
    let summary = moment_harness(model, &block.dims, &block.p_list, &cfg.solver, &ens, c0)?;

    let mut artifacts = ArtifactSet::new(out_dir)?;
    artifacts.add_json("ensemble_summary.json", &summary)?;
    let mut csv = String::from("statistic,p,n,mean,std_error,trials_used,failures\n");
    for row in &summary.moment_table {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.statistic,
            fmt_f64(row.p),
            row.n,
            fmt_f64(row.mean),
            row.std_error.map(fmt_f64).unwrap_or_else(|| "undefined".into()),
            row.trials_used,
            row.failures
        ));
    }
    artifacts.add_bytes("moment_table.csv", csv.into_bytes());
    artifacts.finish(
        "ensemble",
        model.label(),
        cfg,
        serde_json::json!({"uniformity_pass": summary.uniformity_pass, "c0_est": c0}),
    )?;

    println!(
        "ensemble: dims {:?}, trials {}, uniformity {}",
        summary.dims,
        block.trials,
        if summary.uniformity_pass { "pass" } else { "FAIL" }
    );
    if summary.uniformity_pass {
        Ok(Outcome::Pass)
    } else {
        Ok(Outcome::VerdictFail("moment growth beyond three pooled standard errors".into()))
    }
}

/// `convergence`: pairwise same-noise Cauchy diagnostic over a chain of at
/// least two dimension pairs. Passes when medians strictly decrease.
pub fn cmd_convergence(cfg: &RunConfig, out_dir: &Path) -> CmdResult {
    let Some(block) = cfg.diagnostics.convergence.clone() else {
        return Ok(usage("config has no diagnostics.convergence block"));
    };
    if block.pairs.len() < 2 {
        return Ok(usage("convergence chain needs at least two pairs"));
    }
    let handle = match cfg.model.build() {
        Ok(h) => h,
        Err(e) => return Ok(usage(e)),
    };
    let model = handle.as_dyn();
    let c0 = c0_for_solver(cfg, model, out_dir)?;
    let ens = cfg.ensemble_config(block.init, block.frac, block.trials);
    let report = gk_cauchy(model, &block.pairs, &cfg.solver, &ens, c0)?;

    let mut artifacts = ArtifactSet::new(out_dir)?;
    artifacts.add_json("gk_report.json", &report)?;
    let mut csv = String::from("n,m,q25,q50,q75,q95,failures\n");
    for p in &report.pairs {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            p.n,
            p.m,
            fmt_f64(p.q25),
            fmt_f64(p.q50),
            fmt_f64(p.q75),
            fmt_f64(p.q95),
            p.failures
        ));
    }
    artifacts.add_bytes("gk_quantiles.csv", csv.into_bytes());
    artifacts.finish(
        "convergence",
        model.label(),
        cfg,
        serde_json::json!({"medians_decreasing": report.medians_decreasing, "c0_est": c0}),
    )?;

    println!(
        "convergence: medians {:?} ({})",
        report.pairs.iter().map(|p| p.q50).collect::<Vec<_>>(),
        if report.medians_decreasing { "decreasing" } else { "NOT decreasing" }
    );
    if report.medians_decreasing {
        Ok(Outcome::Pass)
    } else {
        Ok(Outcome::VerdictFail("pairwise distance medians not decreasing".into()))
    }
}

/// `uniqueness`: same-noise twin runs. Requires the Lipschitz verifier to be
/// enabled; refuses otherwise.
pub fn cmd_uniqueness(cfg: &RunConfig, out_dir: &Path) -> CmdResult {
    let Some(block) = cfg.diagnostics.uniqueness.clone() else {
        return Ok(usage("config has no diagnostics.uniqueness block"));
    };
    if !cfg.diagnostics.check.lipschitz {
        return Ok(usage(
            "uniqueness requires Lipschitz constants: set diagnostics.check.lipschitz = true \
             and run check-model first",
        ));
    }
    let handle = match cfg.model.build() {
        Ok(h) => h,
        Err(e) => return Ok(usage(e)),
    };
    let model = handle.as_dyn();
    let vcfg = verifier_config(cfg);
    // Certify the Lipschitz classes before checking uniqueness.
    let lip_f =
        sgs_core::model::verify_lipschitz_forcing(model, check_dimension(cfg, model), &vcfg)?;
    let lip_sigma =
        sgs_core::model::verify_lipschitz_noise(model, check_dimension(cfg, model), &vcfg)?;
    let c0 = c0_for_solver(cfg, model, out_dir)?;
    let ens = cfg.ensemble_config(block.init, block.frac, block.trials);
    let report = uniqueness_check(
        model,
        true,
        block.alt_amplitude,
        block.agreement_fraction,
        &cfg.solver,
        &ens,
        c0,
    )?;

    let mut artifacts = ArtifactSet::new(out_dir)?;
    let mut doc = serde_json::to_value(&report).expect("report serializes");
    doc["lip_F"] = serde_json::json!(lip_f);
    doc["lip_sigma"] = serde_json::json!(lip_sigma);
    artifacts.add_json("uniqueness_report.json", &doc)?;
    artifacts.finish(
        "uniqueness",
        model.label(),
        cfg,
        serde_json::json!({"pass": report.pass, "c0_est": c0}),
    )?;

    println!(
        "uniqueness: agreement max {} / reassociated max {} ({})",
        fmt_f64(report.max_agreement_distance),
        fmt_f64(report.max_reassoc_distance),
        if report.pass { "pass" } else { "FAIL" }
    );
    if report.pass {
        Ok(Outcome::Pass)
    } else {
        Ok(Outcome::VerdictFail("same-noise twins diverged beyond tolerance".into()))
    }
}

/// `integral`: the stochastic-integral convergence ladder.
pub fn cmd_integral(cfg: &RunConfig, out_dir: &Path) -> CmdResult {
    let Some(block) = cfg.diagnostics.integral.clone() else {
        return Ok(usage("config has no diagnostics.integral block"));
    };
    let basis = sgs_core::spectral::Eigenbasis::<f64>::power_law(block.basis_dim, 2.0)?;
    let column = |amp: f64, decay: f64, shift: usize| -> sgs_core::Result<HsColumns<f64>> {
        let cols = (1..=block.k_modes)
            .map(|k| {
                let mode = (k + shift - 1) % block.basis_dim + 1;
                Ok(
                    SpectralVector::unit(mode, block.basis_dim, Arc::clone(&basis))?
                        .scaled(amp * (k as f64).powf(-decay)),
                )
            })
            .collect::<sgs_core::Result<Vec<_>>>()?;
        HsColumns::new(cols)
    };
    let target = column(block.target_amplitude, block.target_decay, 0)?;
    let perturb = column(block.perturb_amplitude, block.perturb_decay, 1)?;
    let ladder = IntegralLadderConfig {
        deltas: block.deltas.clone(),
        levels: block.levels.clone(),
        trials: block.trials,
        steps: block.steps,
        dt: block.dt,
        epsilon: block.epsilon,
        master_seed: cfg.master_seed,
    };
    let report = integral_convergence_check(&target, &perturb, &ladder)?;

    let mut artifacts = ArtifactSet::new(out_dir)?;
    artifacts.add_json("integral_report.json", &report)?;
    let mut csv = String::from("delta\\level");
    for l in &report.levels {
        csv.push_str(&format!(",{l}"));
    }
    csv.push('\n');
    for (i, d) in report.deltas.iter().enumerate() {
        csv.push_str(&fmt_f64(*d));
        for j in 0..report.levels.len() {
            csv.push_str(&format!(",{}", fmt_f64(report.exceedance[i][j])));
        }
        csv.push('\n');
    }
    artifacts.add_bytes("exceedance.csv", csv.into_bytes());
    artifacts.finish(
        "integral",
        "integral-ladder",
        cfg,
        serde_json::json!({"pass": report.pass}),
    )?;

    println!(
        "integral: exceedance table {:?} ({})",
        report.exceedance,
        if report.pass { "pass" } else { "FAIL" }
    );
    if report.pass {
        Ok(Outcome::Pass)
    } else {
        Ok(Outcome::VerdictFail("exceedance ladder not monotone or final rung above 5%".into()))
    }
}
