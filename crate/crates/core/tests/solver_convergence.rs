//! Convergence invariants of the cutoff Galerkin integrator on the synthetic
//! model: spectral (Galerkin) consistency across dimension doublings, and
//! strong time-step convergence under coupled noise refinement.

use std::sync::Arc;

use sgs_core::model::{AbstractModel, CutoffSpec};
use sgs_core::models::{ForcingSpec, NoiseSpec, SyntheticModel, SyntheticSpec};
use sgs_core::noise::NoisePath;
use sgs_core::prng::derive_seed;
use sgs_core::solver::{DriftAssociation, Scheme, Solver, SolverConfig};
use sgs_core::spectral::{FracOrder, SpectralVector};

fn model(dim: usize) -> SyntheticModel<f64> {
    SyntheticModel::generate(SyntheticSpec {
        dim,
        pairs_per_mode: 8,
        decay_exponent: 1.0,
        amplitude: 1.0,
        seed: 7,
        eigen_exponent: 2.0,
        noise: NoiseSpec::Additive {
            amplitude: 0.02,
            decay: 3.0,
        },
        forcing: ForcingSpec::None,
    })
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
        record_stride: 1_000_000,
        force_theta_one: false,
        drift_association: DriftAssociation::Fused,
        announce_levels: vec![],
    }
}

fn initial_data(model: &SyntheticModel<f64>) -> SpectralVector<f64> {
    let dim = model.dim();
    let coeffs: Vec<f64> = (1..=dim)
        .map(|k| 0.05 * (k as f64).powf(-2.0))
        .collect();
    SpectralVector::new(coeffs, Arc::clone(model.basis())).unwrap()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Coupled runs at n and 2n share one noise path; the V-norm gap at the
/// final time, after projecting the finer run onto H_n, shrinks as n grows.
#[test]
fn galerkin_consistency_gap_shrinks_with_dimension() {
    let m = model(64);
    let u0 = initial_data(&m);
    let (dt, t_final) = (1e-3f64, 0.25f64);
    let steps = (t_final / dt).round() as usize;
    let seeds = 32usize;

    let mut medians = Vec::new();
    for n in [8usize, 16, 32] {
        let solver_n = Solver::new(&m, config(n, dt, t_final), 1.0).unwrap();
        let solver_2n = Solver::new(&m, config(2 * n, dt, t_final), 1.0).unwrap();
        let mut gaps = Vec::with_capacity(seeds);
        for s in 0..seeds {
            let noise =
                NoisePath::sample(derive_seed(1234, s as u64), 4, steps, dt).unwrap();
            let run_n = solver_n.run_truncated(&u0, &noise).unwrap();
            let run_2n = solver_2n.run_truncated(&u0, &noise).unwrap();
            let fine_proj = run_2n.final_state().project_low(n).unwrap();
            let gap = fine_proj
                .sub(&run_n.final_state().resized(2 * n).unwrap())
                .frac_norm(FracOrder::V);
            gaps.push(gap);
        }
        medians.push(median(gaps));
    }
    assert!(
        medians[0] > medians[1] && medians[1] > medians[2],
        "Galerkin gap medians not decreasing: {medians:?}"
    );
}

/// Strong error between runs at dt and dt/2 (noise coupled by pairwise
/// increment summation) decays with slope ≥ 0.4 in a log-log fit over three
/// halvings — consistent with strong order 1/2 of the scheme. The order is a
/// property of the scheme, not an analytic claim.
#[test]
fn strong_time_step_convergence_order() {
    let m = model(16);
    let u0 = initial_data(&m);
    let t_final = 0.25f64;
    let dts = [2e-3f64, 1e-3, 5e-4];
    let fine_dt = 2.5e-4;
    let fine_steps = (t_final / fine_dt).round() as usize;
    let seeds = 32usize;

    // errors[i][seed] = ‖U_{dt_i}(T) - U_{dt_i/2}(T)‖.
    let mut med_errors = Vec::new();
    for &dt in &dts {
        let mut errs = Vec::with_capacity(seeds);
        let solver_c = Solver::new(&m, config(16, dt, t_final), 1.0).unwrap();
        let solver_f = Solver::new(&m, config(16, dt / 2.0, t_final), 1.0).unwrap();
        for s in 0..seeds {
            // One finest path per seed; coarsen down to dt/2 and dt.
            let mut path =
                NoisePath::sample(derive_seed(777, s as u64), 4, fine_steps, fine_dt).unwrap();
            while (path.dt() - dt / 2.0).abs() > 1e-12 {
                path = path.coarsen_pair_sum().unwrap();
            }
            let fine = path.clone();
            let coarse = path.coarsen_pair_sum().unwrap();
            let run_c = solver_c.run_truncated(&u0, &coarse).unwrap();
            let run_f = solver_f.run_truncated(&u0, &fine).unwrap();
            errs.push(
                run_c
                    .final_state()
                    .sub(run_f.final_state())
                    .frac_norm(FracOrder::V),
            );
        }
        med_errors.push(median(errs));
    }

    assert!(
        med_errors[0] > med_errors[1] && med_errors[1] > med_errors[2],
        "strong errors not decreasing: {med_errors:?}"
    );
    // Least-squares slope of ln(err) against ln(dt) over the three points.
    let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = med_errors.iter().map(|e| e.ln()).collect();
    let xm = xs.iter().sum::<f64>() / 3.0;
    let ym = ys.iter().sum::<f64>() / 3.0;
    let slope = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xm) * (y - ym))
        .sum::<f64>()
        / xs.iter().map(|x| (x - xm) * (x - xm)).sum::<f64>();
    assert!(
        slope >= 0.4,
        "strong convergence slope {slope} below 0.4; errors {med_errors:?}"
    );
}
