//! Primitive equations of the ocean on a horizontally periodic box with a
//! rigid lid.
//!
//! This is an explicit-eigenbasis *variant* of the bounded-domain
//! formulation: the horizontal directions are `2π`-periodic, the vertical
//! uses a cosine basis on `z ∈ [-h, 0]` for the prognostic fields
//! `U = (v, T, S)` (zero-flux structure at top and bottom), and the
//! diagnostic vertical velocity `w(v) = ∫_z^0 ∇·v dz̄` then lives on the
//! complementary sine profiles, vanishing at `z = 0` identically and at
//! `z = -h` whenever the rigid-lid constraint `∇·∫_{-h}^0 v dz = 0` holds.
//!
//! The state space enforces the rigid lid by construction: barotropic
//! (depth-mean) velocity modes retain only the direction `k^⊥`, the salinity
//! mean is removed, and the inert constant modes (horizontal means of `v`,
//! `T` at `m = 0`) are excluded so every eigenvalue of
//!
//! ```text
//! A = (-μ_v Δ - ν_v ∂_zz,  -μ_T Δ - ν_T ∂_zz,  -μ_S Δ - ν_S ∂_zz)
//! ```
//!
//! is strictly positive.
//!
//! Nonlinear terms are evaluated by exact spectral convolution: horizontal
//! products convolve the retained wavevector rectangle (every quadratic
//! product is dealiased by construction), vertical products use the closed
//! cosine/sine product rules. The advection `B = B₁ + B₂` therefore
//! preserves the cancellation `⟨B(U,U♯),U♯⟩ = 0` to rounding on
//! constraint-satisfying states.
//!
//! The density never appears as a field: the linear equation of state enters
//! only through the expansion coefficients `β_T`, `β_S` inside the pressure
//! term `A_p U = P_H(-g ∫_z^0 (β_T ∇T + β_S ∇S) dz̄, 0, 0)`. The Coriolis
//! parameter `f = f₀ + βy` is represented on the box by the truncated
//! Fourier expansion of `y - π`; the term stays pointwise orthogonal to `v`,
//! so energy neutrality is exact regardless of the truncation.

use std::sync::Arc;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::AbstractModel;
use crate::models::common::{ForcingSpec, NoiseSpec};
use crate::noise::HsColumns;
use crate::scalar::{KahanSum, Scalar};
use crate::spectral::{Eigenbasis, SpectralVector};

/// Physical and discretization parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pe3dSpec {
    /// Nominal grid sizes; retained wavevectors obey `|k_x| ≤ ⌊nx/3⌋`,
    /// `|k_y| ≤ ⌊ny/3⌋`, and `nz` vertical cosine modes are kept.
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// Depth `h > 0` of the box `[0,2π)² × (-h, 0)`.
    pub depth: f64,
    /// Horizontal / vertical eddy viscosities.
    pub mu_v: f64,
    pub nu_v: f64,
    /// Horizontal / vertical heat diffusivities.
    #[serde(rename = "mu_T")]
    pub mu_t: f64,
    #[serde(rename = "nu_T")]
    pub nu_t: f64,
    /// Horizontal / vertical salt diffusivities.
    #[serde(rename = "mu_S")]
    pub mu_s: f64,
    #[serde(rename = "nu_S")]
    pub nu_s: f64,
    /// Coriolis parameters `f = f₀ + βy`.
    pub f0: f64,
    pub beta: f64,
    /// Gravity and reference density.
    pub gravity: f64,
    pub rho0: f64,
    /// Thermal / haline expansion coefficients of the linear equation of
    /// state; the reference values shift the density only by constants and
    /// do not enter the dynamics.
    #[serde(rename = "beta_T")]
    pub beta_t: f64,
    #[serde(rename = "beta_S")]
    pub beta_s: f64,
    #[serde(rename = "T_ref", default)]
    pub t_ref: f64,
    #[serde(rename = "S_ref", default)]
    pub s_ref: f64,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub forcing: ForcingSpec,
}

impl Pe3dSpec {
    fn validate(&self) -> Result<()> {
        if self.nx < 3 || self.ny < 3 || self.nz < 2 {
            return Err(Error::Domain("pe3d needs nx, ny >= 3 and nz >= 2".into()));
        }
        for (name, v) in [
            ("depth", self.depth),
            ("mu_v", self.mu_v),
            ("nu_v", self.nu_v),
            ("mu_T", self.mu_t),
            ("nu_T", self.nu_t),
            ("mu_S", self.mu_s),
            ("nu_S", self.nu_s),
            ("gravity", self.gravity),
            ("rho0", self.rho0),
            ("beta_T", self.beta_t),
            ("beta_S", self.beta_s),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Scalar field `Σ_{k,m} c_{k,m} e^{i k·x} cos(mπz/h)`, Hermitian in `k`.
#[derive(Debug, Clone)]
pub struct CosField<T: Scalar> {
    data: Vec<Complex<T>>,
}

/// Scalar field `Σ_{k,m} c_{k,m} e^{i k·x} sin(mπz/h)`, `m ≥ 1`.
#[derive(Debug, Clone)]
pub struct SinField<T: Scalar> {
    data: Vec<Complex<T>>,
}

/// Prognostic state on the structured representation.
#[derive(Debug, Clone)]
pub struct PeState<T: Scalar> {
    pub vx: CosField<T>,
    pub vy: CosField<T>,
    pub temp: CosField<T>,
    pub salt: CosField<T>,
}

/// Diagnostic vertical-profile field: a sine series plus a linear profile
/// `ℓ_k (-z)` carrying any rigid-lid defect.
#[derive(Debug, Clone)]
pub struct WField<T: Scalar> {
    pub sin: SinField<T>,
    pub linear: Vec<Complex<T>>,
}

/// Pre-projection pressure-gradient term of `A_p` (velocity components).
#[derive(Debug, Clone)]
pub struct ApRaw<T: Scalar> {
    pub x: WField<T>,
    pub y: WField<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Parity {
    Cos,
    Sin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FieldId {
    Vx,
    Vy,
    Temp,
    Salt,
}

#[derive(Debug, Clone, Copy)]
enum ModeKind {
    /// Depth-mean velocity along `ψ_k = k^⊥/|k|`; `k ≠ 0`.
    VBarotropic { kx: i32, ky: i32, parity: Parity },
    /// A single scalar component at vertical mode `m`; velocity components
    /// require `m ≥ 1`, tracers admit `m = 0` for `k ≠ 0`.
    Scalar {
        field: FieldId,
        kx: i32,
        ky: i32,
        m: usize,
        parity: Parity,
    },
}

/// Primitive-equations model instance.
pub struct Pe3dModel<T: Scalar> {
    spec: Pe3dSpec,
    basis: Arc<Eigenbasis<T>>,
    modes: Vec<ModeKind>,
    kxmax: i32,
    kymax: i32,
    mz: usize,
    label: String,
}

impl<T: Scalar> Pe3dModel<T> {
    pub fn new(spec: Pe3dSpec) -> Result<Self> {
        spec.validate()?;
        let kxmax = (spec.nx / 3).max(1) as i32;
        let kymax = (spec.ny / 3).max(1) as i32;
        let mz = spec.nz;
        let h = spec.depth;

        let mut modes: Vec<(f64, ModeKind)> = Vec::new();
        let vert = |m: usize| (m as f64 * std::f64::consts::PI / h).powi(2);

        for ky in -kymax..=kymax {
            for kx in -kxmax..=kxmax {
                let k2 = (kx * kx + ky * ky) as f64;
                let half_plane = ky > 0 || (ky == 0 && kx > 0);
                let is_origin = kx == 0 && ky == 0;
                let parities: &[Parity] = if is_origin {
                    &[Parity::Cos]
                } else if half_plane {
                    &[Parity::Cos, Parity::Sin]
                } else {
                    &[]
                };
                for &parity in parities {
                    if !is_origin {
                        modes.push((spec.mu_v * k2, ModeKind::VBarotropic { kx, ky, parity }));
                    }
                    for m in 1..mz {
                        for field in [FieldId::Vx, FieldId::Vy] {
                            modes.push((
                                spec.mu_v * k2 + spec.nu_v * vert(m),
                                ModeKind::Scalar {
                                    field,
                                    kx,
                                    ky,
                                    m,
                                    parity,
                                },
                            ));
                        }
                    }
                    for m in 0..mz {
                        if is_origin && m == 0 {
                            continue;
                        }
                        modes.push((
                            spec.mu_t * k2 + spec.nu_t * vert(m),
                            ModeKind::Scalar {
                                field: FieldId::Temp,
                                kx,
                                ky,
                                m,
                                parity,
                            },
                        ));
                        modes.push((
                            spec.mu_s * k2 + spec.nu_s * vert(m),
                            ModeKind::Scalar {
                                field: FieldId::Salt,
                                kx,
                                ky,
                                m,
                                parity,
                            },
                        ));
                    }
                }
            }
        }

        modes.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap()
                .then_with(|| mode_sort_key(&a.1).cmp(&mode_sort_key(&b.1)))
        });
        let eigenvalues: Vec<T> = modes.iter().map(|(l, _)| T::from_f64_lossy(*l)).collect();
        let kinds: Vec<ModeKind> = modes.into_iter().map(|(_, k)| k).collect();
        let basis = Eigenbasis::from_eigenvalues(kinds.len(), eigenvalues)?;

        Ok(Self {
            label: format!("pe3d-{}x{}x{}", spec.nx, spec.ny, spec.nz),
            spec,
            basis,
            modes: kinds,
            kxmax,
            kymax,
            mz,
        })
    }

    pub fn spec(&self) -> &Pe3dSpec {
        &self.spec
    }

    fn nk(&self) -> usize {
        ((2 * self.kxmax + 1) * (2 * self.kymax + 1)) as usize
    }

    #[inline]
    fn hidx(&self, kx: i32, ky: i32) -> usize {
        ((kx + self.kxmax) * (2 * self.kymax + 1) + (ky + self.kymax)) as usize
    }

    fn wavevectors(&self) -> Vec<(i32, i32)> {
        let mut out = Vec::with_capacity(self.nk());
        for kx in -self.kxmax..=self.kxmax {
            for ky in -self.kymax..=self.kymax {
                out.push((kx, ky));
            }
        }
        out
    }

    pub fn zero_cos(&self) -> CosField<T> {
        CosField {
            data: vec![Complex::new(T::zero(), T::zero()); self.nk() * self.mz],
        }
    }

    fn zero_sin(&self) -> SinField<T> {
        SinField {
            data: vec![Complex::new(T::zero(), T::zero()); self.nk() * (self.mz - 1)],
        }
    }

    pub fn zero_state(&self) -> PeState<T> {
        PeState {
            vx: self.zero_cos(),
            vy: self.zero_cos(),
            temp: self.zero_cos(),
            salt: self.zero_cos(),
        }
    }

    #[inline]
    pub fn cos_coeff(&self, f: &CosField<T>, kx: i32, ky: i32, m: usize) -> Complex<T> {
        f.data[self.hidx(kx, ky) * self.mz + m]
    }

    /// Adds `v` to the `(k, m)` entry of a cosine field (test construction).
    pub fn cos_add(&self, f: &mut CosField<T>, kx: i32, ky: i32, m: usize, v: Complex<T>) {
        f.data[self.hidx(kx, ky) * self.mz + m] += v;
    }

    #[inline]
    fn sget(&self, f: &SinField<T>, kx: i32, ky: i32, m: usize) -> Complex<T> {
        f.data[self.hidx(kx, ky) * (self.mz - 1) + (m - 1)]
    }

    #[inline]
    fn sadd(&self, f: &mut SinField<T>, kx: i32, ky: i32, m: usize, v: Complex<T>) {
        f.data[self.hidx(kx, ky) * (self.mz - 1) + (m - 1)] += v;
    }

    /// Horizontal derivative `∂_x` (`axis = 0`) or `∂_y` (`axis = 1`).
    fn ddh(&self, f: &CosField<T>, axis: usize) -> CosField<T> {
        let mut out = self.zero_cos();
        for (kx, ky) in self.wavevectors() {
            let k = T::from_f64_lossy(if axis == 0 { kx } else { ky } as f64);
            if k == T::zero() {
                continue;
            }
            for m in 0..self.mz {
                let v = self.cos_coeff(f, kx, ky, m);
                self.cos_add(&mut out, kx, ky, m, Complex::new(-v.im * k, v.re * k));
            }
        }
        out
    }

    /// `∂_z`: cosine profiles map to sine profiles with factor `-(mπ/h)`.
    fn ddz(&self, f: &CosField<T>) -> SinField<T> {
        let mut out = self.zero_sin();
        let h = self.spec.depth;
        for (kx, ky) in self.wavevectors() {
            for m in 1..self.mz {
                let fac = T::from_f64_lossy(-(m as f64) * std::f64::consts::PI / h);
                let v = self.cos_coeff(f, kx, ky, m);
                self.sadd(&mut out, kx, ky, m, v * fac);
            }
        }
        out
    }

    /// `∫_z^0 f dz̄`: `cos(mπz̄/h)` integrates to `-(h/mπ) sin(mπz/h)`; the
    /// `m = 0` part yields the linear profile `c_0 (-z)`.
    fn vert_int(&self, f: &CosField<T>) -> WField<T> {
        let mut sin = self.zero_sin();
        let mut linear = vec![Complex::new(T::zero(), T::zero()); self.nk()];
        let h = self.spec.depth;
        for (kx, ky) in self.wavevectors() {
            linear[self.hidx(kx, ky)] = self.cos_coeff(f, kx, ky, 0);
            for m in 1..self.mz {
                let fac = T::from_f64_lossy(-h / (m as f64 * std::f64::consts::PI));
                let v = self.cos_coeff(f, kx, ky, m);
                self.sadd(&mut sin, kx, ky, m, v * fac);
            }
        }
        WField { sin, linear }
    }

    /// Horizontal divergence of a velocity pair.
    fn div_h(&self, vx: &CosField<T>, vy: &CosField<T>) -> CosField<T> {
        let mut out = self.ddh(vx, 0);
        let dy = self.ddh(vy, 1);
        for (a, b) in out.data.iter_mut().zip(dy.data.iter()) {
            *a += *b;
        }
        out
    }

    /// Exact convolution of two cosine-profile fields; `cos·cos` splits into
    /// `½cos(|Δm|) + ½cos(m+m')` vertically, horizontal output truncated to
    /// the retained rectangle (alias-free by construction).
    fn conv_cc(&self, a: &CosField<T>, b: &CosField<T>) -> CosField<T> {
        let mut out = self.zero_cos();
        let half = T::from_f64_lossy(0.5);
        let ks = self.wavevectors();
        for &(kxa, kya) in &ks {
            let ha = self.hidx(kxa, kya) * self.mz;
            for &(kxb, kyb) in &ks {
                let (kxo, kyo) = (kxa + kxb, kya + kyb);
                if kxo.abs() > self.kxmax || kyo.abs() > self.kymax {
                    continue;
                }
                let hb = self.hidx(kxb, kyb) * self.mz;
                let ho = self.hidx(kxo, kyo) * self.mz;
                for ma in 0..self.mz {
                    let va = a.data[ha + ma];
                    if va.re == T::zero() && va.im == T::zero() {
                        continue;
                    }
                    for mb in 0..self.mz {
                        let p = va * b.data[hb + mb];
                        let lo = ma.abs_diff(mb);
                        let hi = ma + mb;
                        if hi == 0 {
                            out.data[ho] += p;
                        } else {
                            out.data[ho + lo] += p * half;
                            if hi < self.mz {
                                out.data[ho + hi] += p * half;
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Exact convolution of two sine-profile fields; `sin·sin` splits into
    /// `½cos(|Δm|) - ½cos(m+m')`.
    fn conv_ss(&self, a: &SinField<T>, b: &SinField<T>) -> CosField<T> {
        let mut out = self.zero_cos();
        let half = T::from_f64_lossy(0.5);
        let ks = self.wavevectors();
        let span = self.mz - 1;
        for &(kxa, kya) in &ks {
            let ha = self.hidx(kxa, kya) * span;
            for &(kxb, kyb) in &ks {
                let (kxo, kyo) = (kxa + kxb, kya + kyb);
                if kxo.abs() > self.kxmax || kyo.abs() > self.kymax {
                    continue;
                }
                let hb = self.hidx(kxb, kyb) * span;
                let ho = self.hidx(kxo, kyo) * self.mz;
                for ma in 1..self.mz {
                    let va = a.data[ha + ma - 1];
                    if va.re == T::zero() && va.im == T::zero() {
                        continue;
                    }
                    for mb in 1..self.mz {
                        let p = va * b.data[hb + mb - 1] * half;
                        out.data[ho + ma.abs_diff(mb)] += p;
                        let hi = ma + mb;
                        if hi < self.mz {
                            out.data[ho + hi] -= p;
                        }
                    }
                }
            }
        }
        out
    }

    /// Projection of a sine vertical profile onto the retained cosine modes:
    /// `sin(mπz/h) = Σ_j b_{jm} cos(jπz/h)` on `[-h, 0]`.
    fn sin_to_cos(&self, f: &SinField<T>) -> CosField<T> {
        let mut out = self.zero_cos();
        for (kx, ky) in self.wavevectors() {
            for m in 1..self.mz {
                let v = self.sget(f, kx, ky, m);
                if v.re == T::zero() && v.im == T::zero() {
                    continue;
                }
                for j in 0..self.mz {
                    let b = sin_cos_projection(m, j);
                    if b != 0.0 {
                        self.cos_add(&mut out, kx, ky, j, v * T::from_f64_lossy(b));
                    }
                }
            }
        }
        out
    }

    /// Projection of the linear profile `ℓ (-z)` onto cosines:
    /// `-z = h/2 - Σ_{j odd} (4h/(j²π²)) cos(jπz/h)`.
    fn linear_to_cos(&self, linear: &[Complex<T>]) -> CosField<T> {
        let mut out = self.zero_cos();
        let h = self.spec.depth;
        for (kx, ky) in self.wavevectors() {
            let l = linear[self.hidx(kx, ky)];
            if l.re == T::zero() && l.im == T::zero() {
                continue;
            }
            self.cos_add(&mut out, kx, ky, 0, l * T::from_f64_lossy(h / 2.0));
            for j in (1..self.mz).step_by(2) {
                let c = -4.0 * h / ((j * j) as f64 * std::f64::consts::PI.powi(2));
                self.cos_add(&mut out, kx, ky, j, l * T::from_f64_lossy(c));
            }
        }
        out
    }

    // ------------------------------------------------------------------
    // Physical-space evaluation (tests and diagnostics).
    // ------------------------------------------------------------------

    /// Evaluates a cosine-profile field at a point of the box.
    pub fn eval_cos(&self, f: &CosField<T>, x: f64, y: f64, z: f64) -> f64 {
        let h = self.spec.depth;
        let mut acc = 0.0;
        for (kx, ky) in self.wavevectors() {
            let phase = Complex::new(0.0, kx as f64 * x + ky as f64 * y).exp();
            for m in 0..self.mz {
                let c = self.cos_coeff(f, kx, ky, m);
                let c = Complex::new(c.re.to_f64_lossy(), c.im.to_f64_lossy());
                acc += (c * phase).re * (m as f64 * std::f64::consts::PI * z / h).cos();
            }
        }
        acc
    }

    /// Evaluates a `w`-type field (sine series plus linear part).
    pub fn eval_w(&self, f: &WField<T>, x: f64, y: f64, z: f64) -> f64 {
        let h = self.spec.depth;
        let mut acc = 0.0;
        for (kx, ky) in self.wavevectors() {
            let phase = Complex::new(0.0, kx as f64 * x + ky as f64 * y).exp();
            let l = f.linear[self.hidx(kx, ky)];
            let l = Complex::new(l.re.to_f64_lossy(), l.im.to_f64_lossy());
            acc += (l * phase).re * (-z);
            for m in 1..self.mz {
                let c = self.sget(&f.sin, kx, ky, m);
                let c = Complex::new(c.re.to_f64_lossy(), c.im.to_f64_lossy());
                acc += (c * phase).re * (m as f64 * std::f64::consts::PI * z / h).sin();
            }
        }
        acc
    }

    /// `L²(M)` inner product of two cosine-profile fields.
    pub fn cos_inner(&self, a: &CosField<T>, b: &CosField<T>) -> f64 {
        let vol_h = (2.0 * std::f64::consts::PI).powi(2);
        let h = self.spec.depth;
        let mut acc = KahanSum::<f64>::new();
        for (kx, ky) in self.wavevectors() {
            for m in 0..self.mz {
                let va = self.cos_coeff(a, kx, ky, m);
                let vb = self.cos_coeff(b, kx, ky, m);
                let dot = (va.re * vb.re + va.im * vb.im).to_f64_lossy();
                let depth_w = if m == 0 { h } else { h / 2.0 };
                acc.add(dot * vol_h * depth_w);
            }
        }
        acc.total()
    }

    /// `L²(M)⁴` inner product of two states.
    pub fn state_inner(&self, a: &PeState<T>, b: &PeState<T>) -> f64 {
        self.cos_inner(&a.vx, &b.vx)
            + self.cos_inner(&a.vy, &b.vy)
            + self.cos_inner(&a.temp, &b.temp)
            + self.cos_inner(&a.salt, &b.salt)
    }

    // ------------------------------------------------------------------
    // The operators.
    // ------------------------------------------------------------------

    /// Diagnostic vertical velocity `w(v) = ∫_z^0 ∇·v dz̄`. Vanishes at
    /// `z = 0` by construction; its linear component vanishes — making
    /// `w(-h) = 0` — exactly when the rigid lid holds.
    pub fn w_diagnostic(&self, state: &PeState<T>) -> WField<T> {
        self.vert_int(&self.div_h(&state.vx, &state.vy))
    }

    /// Max modulus of the rigid-lid defect `k·v̂(k, m=0)` and the salinity
    /// mean, relative to the largest field coefficient.
    pub fn constraint_residual(&self, state: &PeState<T>) -> f64 {
        let mut defect = 0.0f64;
        let mut scale = 0.0f64;
        for field in [&state.vx, &state.vy, &state.temp, &state.salt] {
            for c in &field.data {
                scale = scale.max(c.norm_sqr().to_f64_lossy().sqrt());
            }
        }
        for (kx, ky) in self.wavevectors() {
            let vx0 = self.cos_coeff(&state.vx, kx, ky, 0);
            let vy0 = self.cos_coeff(&state.vy, kx, ky, 0);
            let d = vx0 * T::from_f64_lossy(kx as f64) + vy0 * T::from_f64_lossy(ky as f64);
            defect = defect.max(d.norm_sqr().to_f64_lossy().sqrt());
        }
        let s_mean = self
            .cos_coeff(&state.salt, 0, 0, 0)
            .norm_sqr()
            .to_f64_lossy()
            .sqrt();
        (defect + s_mean) / (1.0 + scale)
    }

    /// Advection `B(U, U♯) = B₁ + B₂` on the structured representation,
    /// before projection: `B₁ = (v·∇)(v♯,T♯,S♯)`, `B₂ = w(v) ∂_z (v♯,T♯,S♯)`.
    /// Errors when the advecting state violates the rigid lid (the
    /// diagnostic `w` would pick up a spurious linear profile).
    pub fn advection_raw(&self, u: &PeState<T>, usharp: &PeState<T>) -> Result<PeState<T>> {
        let res = self.constraint_residual(u);
        if res > 1e-8 {
            return Err(Error::Precondition(format!(
                "advecting state violates the rigid-lid/mean constraints (residual {res:.3e})"
            )));
        }
        let w = self.w_diagnostic(u);
        let mut out = self.zero_state();
        for (dst, f) in [
            (&mut out.vx, &usharp.vx),
            (&mut out.vy, &usharp.vy),
            (&mut out.temp, &usharp.temp),
            (&mut out.salt, &usharp.salt),
        ] {
            let mut acc = self.conv_cc(&u.vx, &self.ddh(f, 0));
            let term_y = self.conv_cc(&u.vy, &self.ddh(f, 1));
            let term_z = self.conv_ss(&w.sin, &self.ddz(f));
            for ((a, b), c) in acc.data.iter_mut().zip(term_y.data).zip(term_z.data) {
                *a += b + c;
            }
            *dst = acc;
        }
        Ok(out)
    }

    /// Pressure term before projection:
    /// `-g ∫_z^0 (β_T ∇T + β_S ∇S) dz̄` in the velocity slots.
    pub fn pressure_raw(&self, state: &PeState<T>) -> ApRaw<T> {
        let bt = T::from_f64_lossy(self.spec.beta_t);
        let bs = T::from_f64_lossy(self.spec.beta_s);
        let neg_g = T::from_f64_lossy(-self.spec.gravity);
        let mut parts = Vec::with_capacity(2);
        for axis in 0..2 {
            let dt = self.ddh(&state.temp, axis);
            let ds = self.ddh(&state.salt, axis);
            let mut grad = self.zero_cos();
            for (g, (t, s)) in grad.data.iter_mut().zip(dt.data.iter().zip(ds.data)) {
                *g = *t * bt + s * bs;
            }
            let mut part = self.vert_int(&grad);
            for v in part.sin.data.iter_mut().chain(part.linear.iter_mut()) {
                *v = *v * neg_g;
            }
            parts.push(part);
        }
        let y = parts.pop().expect("two parts");
        let x = parts.pop().expect("two parts");
        ApRaw { x, y }
    }

    /// Pressure term `A_p U` as a state: vertical profiles projected onto the
    /// retained cosine modes; tracer slots zero.
    pub fn pressure_term(&self, state: &PeState<T>) -> PeState<T> {
        let raw = self.pressure_raw(state);
        let mut out = self.zero_state();
        for (dst, part) in [(&mut out.vx, &raw.x), (&mut out.vy, &raw.y)] {
            let mut acc = self.sin_to_cos(&part.sin);
            let lin = self.linear_to_cos(&part.linear);
            for (a, b) in acc.data.iter_mut().zip(lin.data) {
                *a += b;
            }
            *dst = acc;
        }
        out
    }

    /// Coriolis term before projection: `f k × v = (-f v_y, f v_x)` with
    /// `f = f₀ + βy` expanded on the box (truncated sawtooth for the `βy`
    /// part). Tracer slots zero.
    pub fn coriolis_raw(&self, state: &PeState<T>) -> PeState<T> {
        let mut f_field = self.zero_cos();
        self.cos_add(
            &mut f_field,
            0,
            0,
            0,
            Complex::new(
                T::from_f64_lossy(self.spec.f0 + self.spec.beta * std::f64::consts::PI),
                T::zero(),
            ),
        );
        if self.spec.beta != 0.0 {
            // y - π = Σ_{j≠0} (i/j) e^{ijy}.
            for j in 1..=self.kymax {
                let c = Complex::new(T::zero(), T::from_f64_lossy(self.spec.beta / j as f64));
                self.cos_add(&mut f_field, 0, j, 0, c);
                self.cos_add(&mut f_field, 0, -j, 0, c.conj());
            }
        }
        let mut out = self.zero_state();
        out.vx = self.conv_cc(&f_field, &state.vy);
        for v in out.vx.data.iter_mut() {
            *v = -*v;
        }
        out.vy = self.conv_cc(&f_field, &state.vx);
        out
    }

    /// Lower-order term `F(U) = A_p U + E U` on states (the configured
    /// deterministic forcing enters through the coefficient-vector path).
    pub fn lower_order_raw(&self, state: &PeState<T>) -> PeState<T> {
        let ap = self.pressure_term(state);
        let cor = self.coriolis_raw(state);
        let mut out = self.zero_state();
        for (dst, (a, b)) in [
            (&mut out.vx, (&ap.vx, &cor.vx)),
            (&mut out.vy, (&ap.vy, &cor.vy)),
        ] {
            for ((d, x), y) in dst.data.iter_mut().zip(a.data.iter()).zip(b.data.iter()) {
                *d = *x + *y;
            }
        }
        out
    }

    /// Projection onto the constrained space: Helmholtz projection of the
    /// depth-mean velocity (removing the `k`-parallel part), removal of the
    /// salinity mean, and removal of the inert constant modes dropped by the
    /// eigenbasis. Idempotent and self-adjoint in `H`.
    pub fn rigid_lid_project(&self, state: &PeState<T>) -> PeState<T> {
        let mut out = state.clone();
        for (kx, ky) in self.wavevectors() {
            if kx == 0 && ky == 0 {
                continue;
            }
            let k2 = T::from_f64_lossy((kx * kx + ky * ky) as f64);
            let at = self.hidx(kx, ky) * self.mz;
            let vx = out.vx.data[at];
            let vy = out.vy.data[at];
            let dot =
                (vx * T::from_f64_lossy(kx as f64) + vy * T::from_f64_lossy(ky as f64)) / k2;
            out.vx.data[at] = vx - dot * T::from_f64_lossy(kx as f64);
            out.vy.data[at] = vy - dot * T::from_f64_lossy(ky as f64);
        }
        let zero = Complex::new(T::zero(), T::zero());
        let origin = self.hidx(0, 0) * self.mz;
        out.vx.data[origin] = zero;
        out.vy.data[origin] = zero;
        out.temp.data[origin] = zero;
        out.salt.data[origin] = zero;
        out
    }

    // ------------------------------------------------------------------
    // Coefficient vector <-> structured state.
    // ------------------------------------------------------------------

    fn norm_const(&self, kx: i32, ky: i32, m: usize) -> f64 {
        let nh = if kx == 0 && ky == 0 {
            1.0 / (2.0 * std::f64::consts::PI)
        } else {
            1.0 / (std::f64::consts::SQRT_2 * std::f64::consts::PI)
        };
        let nv = if m == 0 {
            (1.0 / self.spec.depth).sqrt()
        } else {
            (2.0 / self.spec.depth).sqrt()
        };
        nh * nv
    }

    fn psi(kx: i32, ky: i32) -> (f64, f64) {
        let norm = ((kx * kx + ky * ky) as f64).sqrt();
        (-(ky as f64) / norm, kx as f64 / norm)
    }

    /// Expands a coefficient vector into the structured representation.
    pub fn to_state(&self, u: &SpectralVector<T>) -> PeState<T> {
        let mut out = self.zero_state();
        for (idx, kind) in self.modes.iter().enumerate() {
            if idx >= u.len() {
                break;
            }
            let a = u.coeffs()[idx];
            if a == T::zero() {
                continue;
            }
            match *kind {
                ModeKind::VBarotropic { kx, ky, parity } => {
                    let nc = self.norm_const(kx, ky, 0);
                    let amp = match parity {
                        Parity::Cos => Complex::new(a * T::from_f64_lossy(nc / 2.0), T::zero()),
                        Parity::Sin => {
                            Complex::new(T::zero(), -a * T::from_f64_lossy(nc / 2.0))
                        }
                    };
                    let (px, py) = Self::psi(kx, ky);
                    let cx = amp * T::from_f64_lossy(px);
                    let cy = amp * T::from_f64_lossy(py);
                    self.cos_add(&mut out.vx, kx, ky, 0, cx);
                    self.cos_add(&mut out.vy, kx, ky, 0, cy);
                    self.cos_add(&mut out.vx, -kx, -ky, 0, cx.conj());
                    self.cos_add(&mut out.vy, -kx, -ky, 0, cy.conj());
                }
                ModeKind::Scalar {
                    field,
                    kx,
                    ky,
                    m,
                    parity,
                } => {
                    let nc = self.norm_const(kx, ky, m);
                    let target = match field {
                        FieldId::Vx => &mut out.vx,
                        FieldId::Vy => &mut out.vy,
                        FieldId::Temp => &mut out.temp,
                        FieldId::Salt => &mut out.salt,
                    };
                    if kx == 0 && ky == 0 {
                        target.data[self.hidx(0, 0) * self.mz + m] +=
                            Complex::new(a * T::from_f64_lossy(nc), T::zero());
                    } else {
                        let amp = match parity {
                            Parity::Cos => {
                                Complex::new(a * T::from_f64_lossy(nc / 2.0), T::zero())
                            }
                            Parity::Sin => {
                                Complex::new(T::zero(), -a * T::from_f64_lossy(nc / 2.0))
                            }
                        };
                        target.data[self.hidx(kx, ky) * self.mz + m] += amp;
                        target.data[self.hidx(-kx, -ky) * self.mz + m] += amp.conj();
                    }
                }
            }
        }
        out
    }

    /// Reads retained-mode coefficients off a structured state. Components
    /// outside the constrained space (the `k`-parallel barotropic velocity,
    /// the field means) are discarded — this is the combined projection
    /// `P_n ∘ P_H`.
    pub fn to_vector(&self, state: &PeState<T>) -> Result<SpectralVector<T>> {
        let mut coeffs = vec![T::zero(); self.modes.len()];
        for (idx, kind) in self.modes.iter().enumerate() {
            match *kind {
                ModeKind::VBarotropic { kx, ky, parity } => {
                    let (px, py) = Self::psi(kx, ky);
                    let c = self.cos_coeff(&state.vx, kx, ky, 0) * T::from_f64_lossy(px)
                        + self.cos_coeff(&state.vy, kx, ky, 0) * T::from_f64_lossy(py);
                    let nc = T::from_f64_lossy(2.0 / self.norm_const(kx, ky, 0));
                    coeffs[idx] = match parity {
                        Parity::Cos => c.re * nc,
                        Parity::Sin => -c.im * nc,
                    };
                }
                ModeKind::Scalar {
                    field,
                    kx,
                    ky,
                    m,
                    parity,
                } => {
                    let f = match field {
                        FieldId::Vx => &state.vx,
                        FieldId::Vy => &state.vy,
                        FieldId::Temp => &state.temp,
                        FieldId::Salt => &state.salt,
                    };
                    let c = self.cos_coeff(f, kx, ky, m);
                    if kx == 0 && ky == 0 {
                        coeffs[idx] = c.re / T::from_f64_lossy(self.norm_const(0, 0, m));
                    } else {
                        let nc = T::from_f64_lossy(2.0 / self.norm_const(kx, ky, m));
                        coeffs[idx] = match parity {
                            Parity::Cos => c.re * nc,
                            Parity::Sin => -c.im * nc,
                        };
                    }
                }
            }
        }
        SpectralVector::new(coeffs, Arc::clone(&self.basis))
    }
}

fn mode_sort_key(kind: &ModeKind) -> (u8, i32, i32, usize, u8, u8) {
    match *kind {
        ModeKind::VBarotropic { kx, ky, parity } => (0, ky, kx, 0, 0, parity as u8),
        ModeKind::Scalar {
            field,
            kx,
            ky,
            m,
            parity,
        } => (1, ky, kx, m, field as u8, parity as u8),
    }
}

/// Coefficient `b_{jm}` of `cos(jπz/h)` in the expansion of `sin(mπz/h)` on
/// `[-h, 0]`: nonzero only for `m + j` odd, with
/// `b_{0m} = -2/(mπ)` and `b_{jm} = -(4m/π)/(m² - j²)` for `j ≥ 1`.
fn sin_cos_projection(m: usize, j: usize) -> f64 {
    if (m + j) % 2 == 0 {
        return 0.0;
    }
    let (mf, jf) = (m as f64, j as f64);
    if j == 0 {
        -2.0 / (mf * std::f64::consts::PI)
    } else {
        -(2.0 * mf / std::f64::consts::PI) * 2.0 / (mf * mf - jf * jf)
    }
}

impl<T: Scalar> AbstractModel<T> for Pe3dModel<T> {
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
        let su = self.to_state(u);
        let ss = self.to_state(usharp);
        let raw = self.advection_raw(&su, &ss)?;
        self.to_vector(&raw)
    }

    fn forcing(&self, _t: T, u: &SpectralVector<T>) -> Result<SpectralVector<T>> {
        let state = self.to_state(u);
        let raw = self.lower_order_raw(&state);
        let linear = self.to_vector(&raw)?;
        let extra = self.spec.forcing.eval(&self.basis, self.modes.len(), u)?;
        Ok(linear.add(&extra))
    }

    fn noise(&self, _t: T, u: &SpectralVector<T>, k_modes: usize) -> Result<HsColumns<T>> {
        self.spec
            .noise
            .columns(&self.basis, self.modes.len(), u, k_modes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{verify_bilinearity, verify_cancellation};
    use crate::prng::CounterRng;
    use crate::spectral::FracOrder;

    fn spec_8() -> Pe3dSpec {
        Pe3dSpec {
            nx: 8,
            ny: 8,
            nz: 8,
            depth: 1.0,
            mu_v: 1.0,
            nu_v: 1.0,
            mu_t: 0.7,
            nu_t: 0.7,
            mu_s: 0.5,
            nu_s: 0.5,
            f0: 1e-4,
            beta: 0.0,
            gravity: 9.81,
            rho0: 1025.0,
            beta_t: 2e-4,
            beta_s: 8e-4,
            t_ref: 10.0,
            s_ref: 35.0,
            noise: NoiseSpec::None,
            forcing: ForcingSpec::None,
        }
    }

    fn model() -> Pe3dModel<f64> {
        Pe3dModel::new(spec_8()).unwrap()
    }

    fn random_vector(m: &Pe3dModel<f64>, seed: u64, scale: f64) -> SpectralVector<f64> {
        let rng = CounterRng::new(seed, 0);
        let coeffs: Vec<f64> = (0..m.dim())
            .map(|i| scale * rng.normal_at(i as u64))
            .collect();
        SpectralVector::new(coeffs, Arc::clone(m.basis())).unwrap()
    }

    #[test]
    fn vector_state_round_trip() {
        let m = model();
        let u = random_vector(&m, 9, 1.0);
        let back = m.to_vector(&m.to_state(&u)).unwrap();
        for (i, (&a, &b)) in u.coeffs().iter().zip(back.coeffs()).enumerate() {
            assert!((a - b).abs() < 1e-12, "coeff {i}: {a} vs {b}");
        }
    }

    #[test]
    fn basis_is_orthonormal_in_l2() {
        // H norm of the coefficient vector equals the L²(M) norm of the
        // assembled fields.
        let m = model();
        let u = random_vector(&m, 10, 1.0);
        let s = m.to_state(&u);
        let l2 = m.state_inner(&s, &s);
        let h2 = u.frac_norm_sq(FracOrder::H);
        assert!((l2 - h2).abs() / h2 < 1e-12, "L² {l2} vs coefficient {h2}");
    }

    #[test]
    fn w_vanishes_for_divergence_free_shear() {
        // v = (sin y, 0) is horizontally divergence-free, so w ≡ 0.
        let m = model();
        let mut s = m.zero_state();
        m.cos_add(&mut s.vx, 0, 1, 0, Complex::new(0.0, -0.5));
        m.cos_add(&mut s.vx, 0, -1, 0, Complex::new(0.0, 0.5));
        let w = m.w_diagnostic(&s);
        for (x, y, z) in [(0.3, 1.1, -0.2), (2.0, 0.4, -0.9), (5.5, 3.0, -0.5)] {
            assert!(m.eval_w(&w, x, y, z).abs() < 1e-14);
        }
    }

    #[test]
    fn w_matches_analytic_vertical_integral() {
        // v = (a cos x cos(πz/h), 0) gives w = (a h/π) sin x sin(πz/h),
        // vanishing at z = 0 and z = -h.
        let m = model();
        let h = m.spec().depth;
        let a = 0.8;
        let mut s = m.zero_state();
        m.cos_add(&mut s.vx, 1, 0, 1, Complex::new(a / 2.0, 0.0));
        m.cos_add(&mut s.vx, -1, 0, 1, Complex::new(a / 2.0, 0.0));
        let w = m.w_diagnostic(&s);
        for (x, z) in [(0.7f64, -0.3f64), (1.9, -0.8), (4.2, -0.05)] {
            let expected =
                a * h / std::f64::consts::PI * x.sin() * (std::f64::consts::PI * z / h).sin();
            let got = m.eval_w(&w, x, 0.0, z);
            assert!(
                (got - expected).abs() < 1e-10,
                "w({x},{z}) = {got}, expected {expected}"
            );
        }
        assert!(m.eval_w(&w, 0.7, 0.0, 0.0).abs() < 1e-14);
        assert!(m.eval_w(&w, 0.7, 0.0, -h).abs() < 1e-12);
    }

    #[test]
    fn w_of_zero_is_zero() {
        let m = model();
        let w = m.w_diagnostic(&m.zero_state());
        assert_eq!(m.eval_w(&w, 1.0, 2.0, -0.5), 0.0);
    }

    #[test]
    fn pressure_raw_matches_analytic_integral() {
        // T = sin x (z-independent), S = 0: the pre-projection x-velocity of
        // A_p is g β_T z cos x (the vertical integral ∫_z^0 dz̄ = -z).
        let m = model();
        let g = m.spec().gravity;
        let bt = m.spec().beta_t;
        let mut s = m.zero_state();
        m.cos_add(&mut s.temp, 1, 0, 0, Complex::new(0.0, -0.5));
        m.cos_add(&mut s.temp, -1, 0, 0, Complex::new(0.0, 0.5));
        let raw = m.pressure_raw(&s);
        for (x, z) in [(0.4f64, -0.25f64), (2.2, -0.6), (5.0, -1.0)] {
            let expected = g * bt * z * x.cos();
            let got = m.eval_w(&raw.x, x, 0.0, z);
            assert!(
                (got - expected).abs() < 1e-12,
                "A_p x({x},{z}) = {got}, expected {expected}"
            );
            assert!(m.eval_w(&raw.y, x, 0.0, z).abs() < 1e-14);
        }
    }

    #[test]
    fn pressure_vanishes_for_horizontally_constant_tracers() {
        let m = model();
        let mut s = m.zero_state();
        m.cos_add(&mut s.temp, 0, 0, 2, Complex::new(1.3, 0.0));
        m.cos_add(&mut s.salt, 0, 0, 1, Complex::new(-0.4, 0.0));
        let out = m.pressure_term(&s);
        assert!(m.cos_inner(&out.vx, &out.vx) + m.cos_inner(&out.vy, &out.vy) < 1e-28);
    }

    #[test]
    fn pressure_is_homogeneous_of_degree_one() {
        let m = model();
        let u = random_vector(&m, 21, 0.1);
        let s1 = m.to_state(&u);
        let s2 = m.to_state(&u.scaled(2.5));
        let p1 = m.pressure_term(&s1);
        let p2 = m.pressure_term(&s2);
        for (a, b) in p1.vx.data.iter().zip(p2.vx.data.iter()) {
            assert!((*a * 2.5 - *b).norm_sqr() < 1e-24);
        }
        for (a, b) in p1.vy.data.iter().zip(p2.vy.data.iter()) {
            assert!((*a * 2.5 - *b).norm_sqr() < 1e-24);
        }
    }

    #[test]
    fn coriolis_pointwise_cross_product() {
        // v = (1, 0) constant, f ≡ f₀ = 1e-4: the raw term is (0, 1e-4).
        let m = model();
        let mut s = m.zero_state();
        m.cos_add(&mut s.vx, 0, 0, 0, Complex::new(1.0, 0.0));
        let cor = m.coriolis_raw(&s);
        for (x, y, z) in [(0.5, 1.0, -0.3), (3.0, 2.0, -0.7)] {
            assert!(m.eval_cos(&cor.vx, x, y, z).abs() < 1e-16);
            assert!((m.eval_cos(&cor.vy, x, y, z) - 1e-4).abs() < 1e-16);
        }
        // Zero velocity maps to zero.
        let zcor = m.coriolis_raw(&m.zero_state());
        assert_eq!(m.cos_inner(&zcor.vx, &zcor.vx), 0.0);
    }

    #[test]
    fn coriolis_energy_neutral() {
        // ⟨(f k×v, 0, 0), (v, 0, 0)⟩ = 0 pointwise, hence exactly under the
        // spectral quadrature — including with the β-plane sawtooth.
        let mut spec = spec_8();
        spec.beta = 0.3;
        let m = Pe3dModel::<f64>::new(spec).unwrap();
        let u = random_vector(&m, 33, 1.0);
        let s = m.to_state(&u);
        let cor = m.coriolis_raw(&s);
        let e = m.cos_inner(&cor.vx, &s.vx) + m.cos_inner(&cor.vy, &s.vy);
        let scale = m.cos_inner(&s.vx, &s.vx) + m.cos_inner(&s.vy, &s.vy);
        assert!(e.abs() / scale < 1e-12, "coriolis energy leak {e}");
    }

    #[test]
    fn rigid_lid_projection_properties() {
        let m = model();

        // States assembled from coefficient vectors already satisfy the
        // constraints and are fixed points.
        let u = random_vector(&m, 44, 1.0);
        let s = m.to_state(&u);
        let p = m.rigid_lid_project(&s);
        for (a, b) in s.vx.data.iter().zip(p.vx.data.iter()) {
            assert!((*a - *b).norm_sqr() < 1e-28);
        }

        // v = (cos x, 0) z-independent is a pure gradient of the depth mean:
        // the projection removes it entirely.
        let mut grad = m.zero_state();
        m.cos_add(&mut grad.vx, 1, 0, 0, Complex::new(0.5, 0.0));
        m.cos_add(&mut grad.vx, -1, 0, 0, Complex::new(0.5, 0.0));
        let pg = m.rigid_lid_project(&grad);
        assert!(m.cos_inner(&pg.vx, &pg.vx) + m.cos_inner(&pg.vy, &pg.vy) < 1e-28);

        // Constant salinity is removed.
        let mut salty = m.zero_state();
        m.cos_add(&mut salty.salt, 0, 0, 0, Complex::new(1.0, 0.0));
        let ps = m.rigid_lid_project(&salty);
        assert!(m.cos_inner(&ps.salt, &ps.salt) < 1e-30);

        // Idempotence and self-adjointness on unconstrained states.
        let mut wild = m.zero_state();
        m.cos_add(&mut wild.vx, 1, 1, 0, Complex::new(0.3, -0.2));
        m.cos_add(&mut wild.vx, -1, -1, 0, Complex::new(0.3, 0.2));
        m.cos_add(&mut wild.salt, 0, 0, 0, Complex::new(2.0, 0.0));
        m.cos_add(&mut wild.vy, 2, 0, 3, Complex::new(0.1, 0.4));
        m.cos_add(&mut wild.vy, -2, 0, 3, Complex::new(0.1, -0.4));
        let p1 = m.rigid_lid_project(&wild);
        let p2 = m.rigid_lid_project(&p1);
        for (a, b) in p1.vx.data.iter().zip(p2.vx.data.iter()) {
            assert!((*a - *b).norm_sqr() < 1e-28);
        }

        let mut other = m.to_state(&random_vector(&m, 45, 1.0));
        m.cos_add(&mut other.vx, 1, 0, 0, Complex::new(0.7, 0.0));
        m.cos_add(&mut other.vx, -1, 0, 0, Complex::new(0.7, 0.0));
        let lhs = m.state_inner(&m.rigid_lid_project(&wild), &other);
        let rhs = m.state_inner(&wild, &m.rigid_lid_project(&other));
        assert!(
            (lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()),
            "projection not self-adjoint: {lhs} vs {rhs}"
        );
    }

    #[test]
    fn advection_hand_checked_fourier_product() {
        // v = (cos(πz/h) cos x, 0) advecting T♯ = cos x:
        // (v·∇)T♯ = -cos(πz/h) cos x sin x = -(1/2) cos(πz/h) sin 2x,
        // and w(v) ∂_z T♯ = 0 since T♯ is z-independent.
        let m = model();
        let mut u = m.zero_state();
        m.cos_add(&mut u.vx, 1, 0, 1, Complex::new(0.5, 0.0));
        m.cos_add(&mut u.vx, -1, 0, 1, Complex::new(0.5, 0.0));
        let mut us = m.zero_state();
        m.cos_add(&mut us.temp, 1, 0, 0, Complex::new(0.5, 0.0));
        m.cos_add(&mut us.temp, -1, 0, 0, Complex::new(0.5, 0.0));
        let b = m.advection_raw(&u, &us).unwrap();
        let h = m.spec().depth;
        for (x, z) in [(0.3f64, -0.2f64), (1.1, -0.7), (2.8, -0.45)] {
            let expected = -0.5 * (std::f64::consts::PI * z / h).cos() * (2.0 * x).sin();
            let got = m.eval_cos(&b.temp, x, 0.0, z);
            assert!(
                (got - expected).abs() < 1e-12,
                "B_T({x},{z}) = {got}, expected {expected}"
            );
        }
    }

    #[test]
    fn advection_of_constant_state_vanishes() {
        let m = model();
        let u = m.to_state(&random_vector(&m, 3, 0.2));
        // U♯ spatially constant in all prognostic fields.
        let mut us = m.zero_state();
        m.cos_add(&mut us.vx, 0, 0, 0, Complex::new(0.9, 0.0));
        m.cos_add(&mut us.temp, 0, 0, 0, Complex::new(-1.4, 0.0));
        m.cos_add(&mut us.salt, 0, 0, 0, Complex::new(0.5, 0.0));
        let b = m.advection_raw(&u, &us).unwrap();
        assert!(m.state_inner(&b, &b) < 1e-26);
    }

    #[test]
    fn advection_rejects_constraint_violations() {
        let m = model();
        let mut bad = m.zero_state();
        // Pure-gradient barotropic velocity violates the rigid lid.
        m.cos_add(&mut bad.vx, 1, 0, 0, Complex::new(0.5, 0.0));
        m.cos_add(&mut bad.vx, -1, 0, 0, Complex::new(0.5, 0.0));
        assert!(m.advection_raw(&bad, &m.zero_state()).is_err());
    }

    #[test]
    fn cancellation_on_random_constrained_states() {
        let m = model();
        let r = verify_cancellation(&m, m.dim(), 40, 17, 1.0).unwrap();
        assert!(r <= 1e-8, "pe cancellation residual {r}");
    }

    #[test]
    fn bilinearity_probes_pass() {
        let m = model();
        let r = verify_bilinearity(&m, m.dim(), 10, 19, 1.0).unwrap();
        assert!(r <= 1e-10, "pe bilinearity residual {r}");
    }

    #[test]
    fn sin_cos_projection_reconstructs_profiles() {
        // Pointwise check of sin(mπz/h) = Σ_j b_{jm} cos(jπz/h) with many
        // retained modes.
        let m_mode = 2usize;
        for &z in &[-0.9, -0.6, -0.31, -0.05] {
            let target = (m_mode as f64 * std::f64::consts::PI * z).sin();
            let mut acc = 0.0;
            for j in 0..600 {
                acc += sin_cos_projection(m_mode, j) * (j as f64 * std::f64::consts::PI * z).cos();
            }
            assert!(
                (acc - target).abs() < 5e-3,
                "truncated expansion at z={z}: {acc} vs {target}"
            );
        }
    }
}
