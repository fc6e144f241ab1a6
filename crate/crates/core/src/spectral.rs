//! Finite-dimensional representation of the Gelfand triple `V ⊂ H ⊂ V'`
//! diagonalized by the eigenbasis of the principal operator `A`.
//!
//! A state is a coefficient vector over the eigenbasis `{Φ_k}` of `A`; the
//! eigenvalue sequence `{λ_k}` defines all fractional norms
//! `|U|_α = (Σ λ_k^{2α} |U_k|²)^{1/2}`, the projections `P_n`/`Q_n`, the
//! diagonal action of `A^α`, and the exact heat flow `e^{-tA}`.
//! In particular `|U|_0` is the `H` norm, `|U|_{1/2}` the `V` norm,
//! `|U|_1 = |AU|`, and `α = -1/2` plays the role of `V'`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{kahan_sum, KahanSum, Scalar};

/// Fractional order `α ≥ -1/2` indexing the scale `D(A^α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracOrder(f64);

impl FracOrder {
    /// `H` norm (`α = 0`).
    pub const H: FracOrder = FracOrder(0.0);
    /// `V` norm (`α = 1/2`).
    pub const V: FracOrder = FracOrder(0.5);
    /// `D(A)` norm (`α = 1`), i.e. `|AU|`.
    pub const DOMAIN_A: FracOrder = FracOrder(1.0);
    /// Dual norm (`α = -1/2`), the `V'` weighting of the same coefficients.
    pub const V_DUAL: FracOrder = FracOrder(-0.5);

    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::Domain("fractional order must be finite".into()));
        }
        if alpha < -0.5 {
            return Err(Error::Domain(format!(
                "fractional order {alpha} below -1/2 is outside the supported scale"
            )));
        }
        Ok(FracOrder(alpha))
    }

    pub fn alpha(self) -> f64 {
        self.0
    }
}

/// Increasing positive eigenvalue sequence `{λ_k}` of `A`, with a hard cap on
/// the number of retained modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenbasis<T: Scalar> {
    dim_max: usize,
    eigenvalues: Vec<T>,
}

impl<T: Scalar> Eigenbasis<T> {
    /// Builds a basis from an explicit eigenvalue sequence.
    ///
    /// The sequence must be strictly positive, nondecreasing, and at least
    /// `dim_max` long.
    pub fn from_eigenvalues(dim_max: usize, eigenvalues: Vec<T>) -> Result<Arc<Self>> {
        if dim_max == 0 {
            return Err(Error::Domain("dim_max must be positive".into()));
        }
        if eigenvalues.len() < dim_max {
            return Err(Error::Domain(format!(
                "need at least dim_max = {dim_max} eigenvalues, got {}",
                eigenvalues.len()
            )));
        }
        let mut prev = T::zero();
        for (k, &lam) in eigenvalues.iter().enumerate() {
            if !(lam.is_finite() && lam > T::zero()) {
                return Err(Error::Domain(format!(
                    "eigenvalue {} at index {k} is not strictly positive and finite",
                    lam
                )));
            }
            if lam < prev {
                return Err(Error::Domain(format!(
                    "eigenvalues must be nondecreasing; violated at index {k}"
                )));
            }
            prev = lam;
        }
        Ok(Arc::new(Self {
            dim_max,
            eigenvalues,
        }))
    }

    /// Synthetic Laplacian-like layout `λ_k = k^exponent` (1-based `k`).
    ///
    /// `exponent = 2` reproduces the growth of a 1-d Dirichlet Laplacian and
    /// keeps Poincaré constants hand-checkable.
    pub fn power_law(dim_max: usize, exponent: f64) -> Result<Arc<Self>> {
        let eigenvalues = (1..=dim_max)
            .map(|k| T::from_f64_lossy((k as f64).powf(exponent)))
            .collect();
        Self::from_eigenvalues(dim_max, eigenvalues)
    }

    pub fn dim_max(&self) -> usize {
        self.dim_max
    }

    /// Eigenvalue `λ_k` of the `k`-th mode, 1-based.
    pub fn lambda(&self, k: usize) -> T {
        self.eigenvalues[k - 1]
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues[..self.dim_max]
    }

    /// Constant of the generalized Poincaré bound for the low-mode block:
    /// `|P_n U|_{α2} ≤ λ_n^{α2-α1} |P_n U|_{α1}`.
    pub fn poincare_low_constant(&self, n: usize, alpha1: f64, alpha2: f64) -> T {
        self.lambda(n).powf(T::from_f64_lossy(alpha2 - alpha1))
    }

    /// Constant of the tail (inverse Poincaré) bound
    /// `|Q_n U|_{α1} ≤ λ_n^{-(α2-α1)} |Q_n U|_{α2}`, as usually stated.
    pub fn poincare_tail_constant(&self, n: usize, alpha1: f64, alpha2: f64) -> T {
        self.lambda(n).powf(T::from_f64_lossy(-(alpha2 - alpha1)))
    }

    /// Sharper tail constant `λ_{n+1}^{-(α2-α1)}`, valid because the tail
    /// starts at mode `n+1`. Exposed as a diagnostic only; tests assert the
    /// `λ_n` form above.
    pub fn poincare_tail_constant_sharp(&self, n: usize, alpha1: f64, alpha2: f64) -> Option<T> {
        if n + 1 <= self.dim_max {
            Some(
                self.lambda(n + 1)
                    .powf(T::from_f64_lossy(-(alpha2 - alpha1))),
            )
        } else {
            None
        }
    }
}

/// Coefficient sequence of a state over the eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVector<T: Scalar> {
    coeffs: Vec<T>,
    basis: Arc<Eigenbasis<T>>,
}

impl<T: Scalar> SpectralVector<T> {
    /// Wraps a coefficient vector; rejects non-finite entries and overlong
    /// vectors.
    pub fn new(coeffs: Vec<T>, basis: Arc<Eigenbasis<T>>) -> Result<Self> {
        if coeffs.len() > basis.dim_max() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients exceed dim_max = {}",
                coeffs.len(),
                basis.dim_max()
            )));
        }
        if let Some(k) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidState(format!(
                "non-finite coefficient at mode {}",
                k + 1
            )));
        }
        Ok(Self { coeffs, basis })
    }

    /// The zero element of `H_n`.
    pub fn zeros(n: usize, basis: Arc<Eigenbasis<T>>) -> Result<Self> {
        Self::new(vec![T::zero(); n], basis)
    }

    /// The `k`-th basis direction `Φ_k` (1-based) inside `H_n`.
    pub fn unit(k: usize, n: usize, basis: Arc<Eigenbasis<T>>) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::Domain(format!("mode {k} outside 1..={n}")));
        }
        let mut coeffs = vec![T::zero(); n];
        coeffs[k - 1] = T::one();
        Self::new(coeffs, basis)
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn basis(&self) -> &Arc<Eigenbasis<T>> {
        &self.basis
    }

    pub fn same_basis(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.basis, &other.basis) || self.basis == other.basis
    }

    fn check_finite(self) -> Result<Self> {
        if let Some(k) = self.coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidState(format!(
                "non-finite coefficient at mode {}",
                k + 1
            )));
        }
        Ok(self)
    }

    /// `|U|_α = (Σ_k λ_k^{2α} |U_k|²)^{1/2}`.
    pub fn frac_norm(&self, order: FracOrder) -> T {
        self.frac_norm_sq(order).sqrt()
    }

    /// Square of [`frac_norm`](Self::frac_norm); compensated summation.
    pub fn frac_norm_sq(&self, order: FracOrder) -> T {
        let two_alpha = T::from_f64_lossy(2.0 * order.alpha());
        let mut acc = KahanSum::new();
        for (k, &c) in self.coeffs.iter().enumerate() {
            let w = self.basis.lambda(k + 1).powf(two_alpha);
            acc.add(w * c * c);
        }
        acc.total()
    }

    /// `H` inner product `(U, W) = Σ_k U_k W_k`.
    pub fn inner(&self, other: &Self) -> T {
        kahan_sum(
            self.coeffs
                .iter()
                .zip(other.coeffs.iter())
                .map(|(&a, &b)| a * b),
        )
    }

    /// Weighted inner product `(A^α U, A^α W)`.
    pub fn inner_frac(&self, other: &Self, order: FracOrder) -> T {
        let two_alpha = T::from_f64_lossy(2.0 * order.alpha());
        kahan_sum(
            self.coeffs
                .iter()
                .zip(other.coeffs.iter())
                .enumerate()
                .map(|(k, (&a, &b))| self.basis.lambda(k + 1).powf(two_alpha) * a * b),
        )
    }

    /// Low-mode projection `P_n`: keeps modes `k ≤ n`, zeroes the rest.
    pub fn project_low(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.basis.dim_max() {
            return Err(Error::Domain(format!(
                "projection order {n} outside 1..={}",
                self.basis.dim_max()
            )));
        }
        let mut coeffs = self.coeffs.clone();
        for c in coeffs.iter_mut().skip(n) {
            *c = T::zero();
        }
        Ok(Self {
            coeffs,
            basis: Arc::clone(&self.basis),
        })
    }

    /// High-mode projection `Q_n = I - P_n`.
    pub fn project_high(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.basis.dim_max() {
            return Err(Error::Domain(format!(
                "projection order {n} outside 1..={}",
                self.basis.dim_max()
            )));
        }
        let mut coeffs = self.coeffs.clone();
        for c in coeffs.iter_mut().take(n) {
            *c = T::zero();
        }
        Ok(Self {
            coeffs,
            basis: Arc::clone(&self.basis),
        })
    }

    /// Truncates (or zero-pads) the coefficient vector to length `n`.
    pub fn resized(&self, n: usize) -> Result<Self> {
        if n > self.basis.dim_max() {
            return Err(Error::Domain(format!(
                "target length {n} exceeds dim_max = {}",
                self.basis.dim_max()
            )));
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(n, T::zero());
        Ok(Self {
            coeffs,
            basis: Arc::clone(&self.basis),
        })
    }

    /// Diagonal action `A^α U = Σ_k λ_k^α U_k Φ_k`.
    pub fn apply_a_frac(&self, order: FracOrder) -> Result<Self> {
        let alpha = T::from_f64_lossy(order.alpha());
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| self.basis.lambda(k + 1).powf(alpha) * c)
            .collect();
        Self {
            coeffs,
            basis: Arc::clone(&self.basis),
        }
        .check_finite()
    }

    /// Exact heat flow `e^{-tA} U`, the solution of `dU/dt + AU = 0`.
    pub fn heat_semigroup(&self, t: T) -> Result<Self> {
        if !(t.is_finite() && t >= T::zero()) {
            return Err(Error::Domain("heat flow requires t >= 0".into()));
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| (-self.basis.lambda(k + 1) * t).exp() * c)
            .collect();
        Ok(Self {
            coeffs,
            basis: Arc::clone(&self.basis),
        })
    }

    /// Resolvent step `(I + dt A)^{-1} U` (diagonal solve).
    pub fn resolvent(&self, dt: T) -> Result<Self> {
        if !(dt.is_finite() && dt >= T::zero()) {
            return Err(Error::Domain("resolvent requires dt >= 0".into()));
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| c / (T::one() + dt * self.basis.lambda(k + 1)))
            .collect();
        Ok(Self {
            coeffs,
            basis: Arc::clone(&self.basis),
        })
    }

    pub fn scaled(&self, a: T) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|&c| a * c).collect(),
            basis: Arc::clone(&self.basis),
        }
    }

    /// `self + a * other`, aligning lengths by zero-padding the shorter vector.
    pub fn axpy(&self, a: T, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![T::zero(); n];
        for (dst, &c) in coeffs.iter_mut().zip(self.coeffs.iter()) {
            *dst = c;
        }
        for (dst, &c) in coeffs.iter_mut().zip(other.coeffs.iter()) {
            *dst += a * c;
        }
        Self {
            coeffs,
            basis: Arc::clone(&self.basis),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpy(T::one(), other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-T::one(), other)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }
}
