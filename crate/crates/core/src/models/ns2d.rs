//! 2-d incompressible Navier–Stokes on the periodic square `[0, 2π)²`.
//!
//! The state is expanded over the real divergence-free eigenbasis of the
//! Stokes operator `A = -ν Δ` (restricted to mean-free solenoidal fields):
//! for each wavevector `k ≠ 0` in a half-plane, the two orthonormal fields
//!
//! ```text
//! φ_k^cos = ψ_k cos(k·x) / (√2 π),   φ_k^sin = ψ_k sin(k·x) / (√2 π),
//! ψ_k = k^⊥ / |k|,
//! ```
//!
//! with eigenvalue `ν |k|²`. Retained wavevectors obey the 2/3 rule
//! `|k_i| ≤ ⌊N/3⌋` on an `N × N` grid, so quadratic products computed
//! pseudo-spectrally are alias-free on the retained modes. The advection
//! term is `B(U, V) = P_L (u · ∇) v` with `P_L` the Leray projection,
//! evaluated by FFT, dealiased, projected.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{FftDirection, FftNum, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::AbstractModel;
use crate::models::common::{ForcingSpec, NoiseSpec};
use crate::noise::HsColumns;
use crate::scalar::Scalar;
use crate::spectral::{Eigenbasis, SpectralVector};

/// Discretization parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ns2dSpec {
    /// Grid points per axis (even). Retained modes per axis are `≤ ⌊N/3⌋`,
    /// i.e. at most 2/3 of the representable modes.
    pub modes_per_axis: usize,
    /// Kinematic viscosity `ν > 0`.
    pub viscosity: f64,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub forcing: ForcingSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Parity {
    Cos,
    Sin,
}

#[derive(Debug, Clone, Copy)]
struct Mode {
    kx: i32,
    ky: i32,
    parity: Parity,
}

/// Pseudo-spectral Navier–Stokes model.
pub struct Ns2dModel<T: Scalar + FftNum> {
    spec: Ns2dSpec,
    basis: Arc<Eigenbasis<T>>,
    modes: Vec<Mode>,
    /// `(kx, ky) -> (cos index, sin index)` into `modes`.
    mode_index: HashMap<(i32, i32), (usize, usize)>,
    n_grid: usize,
    kmax: i32,
    label: String,
}

impl<T: Scalar + FftNum> Ns2dModel<T> {
    pub fn new(spec: Ns2dSpec) -> Result<Self> {
        let n = spec.modes_per_axis;
        if n < 6 || n % 2 != 0 {
            return Err(Error::Domain(
                "modes_per_axis must be even and at least 6".into(),
            ));
        }
        if !(spec.viscosity.is_finite() && spec.viscosity > 0.0) {
            return Err(Error::Domain("viscosity must be positive".into()));
        }
        // Alias-free quadratic products need 3 kmax ≤ N - 1 (the 2/3 rule).
        let kmax = ((n - 1) / 3) as i32;

        // Half-plane representatives, then sorted by eigenvalue.
        let mut reps = Vec::new();
        for ky in -kmax..=kmax {
            for kx in -kmax..=kmax {
                if (kx, ky) == (0, 0) {
                    continue;
                }
                if ky > 0 || (ky == 0 && kx > 0) {
                    reps.push((kx, ky));
                }
            }
        }
        reps.sort_by_key(|&(kx, ky)| (kx * kx + ky * ky, ky, kx));

        let mut modes = Vec::with_capacity(2 * reps.len());
        let mut mode_index = HashMap::new();
        for (kx, ky) in reps {
            let cos_idx = modes.len();
            modes.push(Mode {
                kx,
                ky,
                parity: Parity::Cos,
            });
            modes.push(Mode {
                kx,
                ky,
                parity: Parity::Sin,
            });
            mode_index.insert((kx, ky), (cos_idx, cos_idx + 1));
        }

        let eigenvalues = modes
            .iter()
            .map(|m| {
                T::from_f64_lossy(spec.viscosity * (m.kx * m.kx + m.ky * m.ky) as f64)
            })
            .collect::<Vec<_>>();
        let basis = Eigenbasis::from_eigenvalues(modes.len(), eigenvalues)?;

        Ok(Self {
            label: format!("ns2d-{n}x{n}-nu{}", spec.viscosity),
            spec,
            basis,
            modes,
            mode_index,
            n_grid: n,
            kmax,
        })
    }

    pub fn spec(&self) -> &Ns2dSpec {
        &self.spec
    }

    pub fn grid_size(&self) -> usize {
        self.n_grid
    }

    /// `(cos, sin)` coefficient indices of wavevector `(kx, ky)`, if retained.
    pub fn mode_pair(&self, kx: i32, ky: i32) -> Option<(usize, usize)> {
        self.mode_index.get(&(kx, ky)).copied()
    }

    #[inline]
    fn flat(&self, kx: i32, ky: i32) -> usize {
        let n = self.n_grid as i32;
        let ix = kx.rem_euclid(n) as usize;
        let iy = ky.rem_euclid(n) as usize;
        iy * self.n_grid + ix
    }

    /// Unit direction `ψ_k = k^⊥/|k|`.
    fn psi(kx: i32, ky: i32) -> (f64, f64) {
        let norm = ((kx * kx + ky * ky) as f64).sqrt();
        (-(ky as f64) / norm, kx as f64 / norm)
    }

    /// Expands coefficients into the two complex spectral velocity arrays
    /// (`N × N`, FFT layout).
    pub fn velocity_spectrum(&self, u: &SpectralVector<T>) -> [Vec<Complex<T>>; 2] {
        let size = self.n_grid * self.n_grid;
        let mut ux = vec![Complex::new(T::zero(), T::zero()); size];
        let mut uy = vec![Complex::new(T::zero(), T::zero()); size];
        let scale = 1.0 / (2.0 * std::f64::consts::SQRT_2 * std::f64::consts::PI);
        for (idx, mode) in self.modes.iter().enumerate() {
            if idx >= u.len() {
                break;
            }
            let c = u.coeffs()[idx];
            if c == T::zero() {
                continue;
            }
            let (px, py) = Self::psi(mode.kx, mode.ky);
            // û_k = ψ_k (a - i b) / (2 √2 π), û_{-k} = conj.
            let amp = match mode.parity {
                Parity::Cos => Complex::new(c * T::from_f64_lossy(scale), T::zero()),
                Parity::Sin => Complex::new(T::zero(), -c * T::from_f64_lossy(scale)),
            };
            let fwd = self.flat(mode.kx, mode.ky);
            let bwd = self.flat(-mode.kx, -mode.ky);
            let cx = amp * T::from_f64_lossy(px);
            let cy = amp * T::from_f64_lossy(py);
            ux[fwd] += cx;
            uy[fwd] += cy;
            ux[bwd] += cx.conj();
            uy[bwd] += cy.conj();
        }
        [ux, uy]
    }

    /// Reads retained-mode coefficients off a (solenoidal) spectral velocity
    /// field; the component parallel to `k` is discarded, which is exactly
    /// the Leray projection.
    pub fn coefficients(&self, field: &[Vec<Complex<T>>; 2]) -> Result<SpectralVector<T>> {
        let mut coeffs = vec![T::zero(); self.modes.len()];
        let scale = T::from_f64_lossy(2.0 * std::f64::consts::SQRT_2 * std::f64::consts::PI);
        for (&(kx, ky), &(cos_idx, sin_idx)) in &self.mode_index {
            let (px, py) = Self::psi(kx, ky);
            let at = self.flat(kx, ky);
            let c = field[0][at] * T::from_f64_lossy(px) + field[1][at] * T::from_f64_lossy(py);
            coeffs[cos_idx] = c.re * scale;
            coeffs[sin_idx] = -c.im * scale;
        }
        SpectralVector::new(coeffs, Arc::clone(&self.basis))
    }

    fn fft2(&self, data: &mut [Complex<T>], direction: FftDirection) {
        let n = self.n_grid;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft(n, direction);
        // Rows.
        for row in data.chunks_exact_mut(n) {
            fft.process(row);
        }
        // Columns via transpose.
        let mut col = vec![Complex::new(T::zero(), T::zero()); n];
        for x in 0..n {
            for y in 0..n {
                col[y] = data[y * n + x];
            }
            fft.process(&mut col);
            for y in 0..n {
                data[y * n + x] = col[y];
            }
        }
    }

    fn to_physical(&self, hat: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut data = hat.to_vec();
        self.fft2(&mut data, FftDirection::Inverse);
        data
    }

    fn to_spectral(&self, phys: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut data = phys.to_vec();
        self.fft2(&mut data, FftDirection::Forward);
        let norm = T::from_f64_lossy(1.0 / (self.n_grid * self.n_grid) as f64);
        for v in &mut data {
            *v = *v * norm;
        }
        data
    }

    fn derivative(&self, hat: &[Complex<T>], axis: usize) -> Vec<Complex<T>> {
        let n = self.n_grid as i32;
        let mut out = vec![Complex::new(T::zero(), T::zero()); hat.len()];
        for iy in 0..n {
            for ix in 0..n {
                let kx = if ix <= n / 2 { ix } else { ix - n };
                let ky = if iy <= n / 2 { iy } else { iy - n };
                let k = if axis == 0 { kx } else { ky };
                let at = (iy * n + ix) as usize;
                let v = hat[at];
                out[at] = Complex::new(-v.im, v.re) * T::from_f64_lossy(k as f64);
            }
        }
        out
    }

    /// Zeroes every mode outside the retained square `|k_i| ≤ kmax`.
    fn dealias(&self, hat: &mut [Complex<T>]) {
        let n = self.n_grid as i32;
        for iy in 0..n {
            for ix in 0..n {
                let kx = if ix <= n / 2 { ix } else { ix - n };
                let ky = if iy <= n / 2 { iy } else { iy - n };
                if kx.abs() > self.kmax || ky.abs() > self.kmax {
                    hat[(iy * n + ix) as usize] = Complex::new(T::zero(), T::zero());
                }
            }
        }
    }

    /// In-place Leray projection `ŵ_k ← ŵ_k - k (k·ŵ_k)/|k|²`; the mean mode
    /// is zeroed.
    fn leray(&self, wx: &mut [Complex<T>], wy: &mut [Complex<T>]) {
        let n = self.n_grid as i32;
        for iy in 0..n {
            for ix in 0..n {
                let kx = if ix <= n / 2 { ix } else { ix - n };
                let ky = if iy <= n / 2 { iy } else { iy - n };
                let at = (iy * n + ix) as usize;
                if kx == 0 && ky == 0 {
                    wx[at] = Complex::new(T::zero(), T::zero());
                    wy[at] = Complex::new(T::zero(), T::zero());
                    continue;
                }
                let k2 = T::from_f64_lossy((kx * kx + ky * ky) as f64);
                let dot = (wx[at] * T::from_f64_lossy(kx as f64)
                    + wy[at] * T::from_f64_lossy(ky as f64))
                    / k2;
                wx[at] -= dot * T::from_f64_lossy(kx as f64);
                wy[at] -= dot * T::from_f64_lossy(ky as f64);
            }
        }
    }

    /// Relative divergence of a spectral velocity field (diagnostic).
    pub fn divergence_residual(&self, field: &[Vec<Complex<T>>; 2]) -> f64 {
        let n = self.n_grid as i32;
        let mut div: f64 = 0.0;
        let mut mag: f64 = 0.0;
        for iy in 0..n {
            for ix in 0..n {
                let kx = if ix <= n / 2 { ix } else { ix - n } as f64;
                let ky = if iy <= n / 2 { iy } else { iy - n } as f64;
                let at = (iy * n + ix) as usize;
                let fx = field[0][at];
                let fy = field[1][at];
                let d = (fx * T::from_f64_lossy(kx) + fy * T::from_f64_lossy(ky)).norm_sqr();
                div += d.to_f64_lossy();
                mag += (fx.norm_sqr() + fy.norm_sqr()).to_f64_lossy()
                    * (kx * kx + ky * ky);
            }
        }
        if mag == 0.0 {
            0.0
        } else {
            (div / mag).sqrt()
        }
    }

    /// Advection `P_L (u·∇) v` on spectral fields. Returns the projected
    /// field and a flag set when the first argument failed the solenoidal
    /// check and the projection had to repair it.
    pub fn advect(
        &self,
        u_hat: &[Vec<Complex<T>>; 2],
        v_hat: &[Vec<Complex<T>>; 2],
    ) -> ([Vec<Complex<T>>; 2], bool) {
        let warned = self.divergence_residual(u_hat) > 1e-10;

        let u_phys = [self.to_physical(&u_hat[0]), self.to_physical(&u_hat[1])];
        let mut out: Vec<Vec<Complex<T>>> = Vec::with_capacity(2);
        for j in 0..2 {
            let dx = self.to_physical(&self.derivative(&v_hat[j], 0));
            let dy = self.to_physical(&self.derivative(&v_hat[j], 1));
            let mut w = vec![Complex::new(T::zero(), T::zero()); dx.len()];
            for (i, wv) in w.iter_mut().enumerate() {
                *wv = u_phys[0][i] * dx[i] + u_phys[1][i] * dy[i];
            }
            let mut w_hat = self.to_spectral(&w);
            self.dealias(&mut w_hat);
            out.push(w_hat);
        }
        let mut wx = out.swap_remove(0);
        let mut wy = out.swap_remove(0);
        self.leray(&mut wx, &mut wy);
        ([wx, wy], warned)
    }
}

impl<T: Scalar + FftNum> AbstractModel<T> for Ns2dModel<T> {
    fn basis(&self) -> &Arc<Eigenbasis<T>> {
        &self.basis
    }

    fn dim(&self) -> usize {
        self.modes.len()
    }

    fn label(&self) -> &str {
        &self.label
    }

    fn bilinear(
        &self,
        u: &SpectralVector<T>,
        usharp: &SpectralVector<T>,
    ) -> Result<SpectralVector<T>> {
        let u_hat = self.velocity_spectrum(u);
        let v_hat = self.velocity_spectrum(usharp);
        let (w_hat, _warned) = self.advect(&u_hat, &v_hat);
        self.coefficients(&w_hat)
    }

    fn forcing(&self, _t: T, u: &SpectralVector<T>) -> Result<SpectralVector<T>> {
        self.spec.forcing.eval(&self.basis, self.modes.len(), u)
    }

    fn noise(&self, _t: T, u: &SpectralVector<T>, k_modes: usize) -> Result<HsColumns<T>> {
        self.spec.noise.columns(&self.basis, self.modes.len(), u, k_modes)
    }
}
