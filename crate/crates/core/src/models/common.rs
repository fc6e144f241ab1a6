//! Noise and forcing parameterizations shared by the concrete models.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::noise::HsColumns;
use crate::scalar::Scalar;
use crate::spectral::{Eigenbasis, SpectralVector};

/// Structure of the noise coefficient `σ`.
///
/// `Additive` columns are constant multiples of eigenmode directions with a
/// power-law decay in the column index; `Diagonal` is linear multiplicative
/// `σ_k(U) = a_k U`. Both lie in the sublinear-growth classes at all three
/// space pairs provided the decay is strong enough (the additive class needs
/// the columns in `D(A)`, so its default decay outruns the eigenvalue
/// growth), and both are globally Lipschitz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    /// `σ ≡ 0`.
    #[default]
    None,
    /// `σ_k(U) = amplitude · k^{-decay} Φ_k`.
    Additive { amplitude: f64, decay: f64 },
    /// `σ_k(U) = amplitude · k^{-decay} U`.
    Diagonal { amplitude: f64, decay: f64 },
    /// Sum of an additive and a diagonal part.
    Mixed {
        add_amplitude: f64,
        add_decay: f64,
        mult_amplitude: f64,
        mult_decay: f64,
    },
}

impl NoiseSpec {
    /// Column weights `a_k = amplitude · k^{-decay}`, 1-based `k`.
    fn weight(amplitude: f64, decay: f64, k: usize) -> f64 {
        amplitude * (k as f64).powf(-decay)
    }

    /// Evaluates the columns `σ_k(U)` for `k = 1..=k_modes` over a basis.
    pub fn columns<T: Scalar>(
        &self,
        basis: &Arc<Eigenbasis<T>>,
        dim: usize,
        u: &SpectralVector<T>,
        k_modes: usize,
    ) -> Result<HsColumns<T>> {
        match *self {
            NoiseSpec::None => Ok(HsColumns::empty()),
            NoiseSpec::Additive { amplitude, decay } => {
                let cols = (1..=k_modes)
                    .map(|k| additive_column(basis, dim, amplitude, decay, k))
                    .collect::<Result<Vec<_>>>()?;
                HsColumns::new(cols)
            }
            NoiseSpec::Diagonal { amplitude, decay } => {
                let cols = (1..=k_modes)
                    .map(|k| u.scaled(T::from_f64_lossy(Self::weight(amplitude, decay, k))))
                    .collect::<Vec<_>>();
                HsColumns::new(cols)
            }
            NoiseSpec::Mixed {
                add_amplitude,
                add_decay,
                mult_amplitude,
                mult_decay,
            } => {
                let cols = (1..=k_modes)
                    .map(|k| {
                        let add = additive_column(basis, dim, add_amplitude, add_decay, k)?;
                        let w = T::from_f64_lossy(Self::weight(mult_amplitude, mult_decay, k));
                        Ok(add.axpy(w, u))
                    })
                    .collect::<Result<Vec<_>>>()?;
                HsColumns::new(cols)
            }
        }
    }

    /// Fraction of the Hilbert–Schmidt mass (in `H`, at the state `u`) that
    /// lies beyond the first `k_modes` columns, estimated against a longer
    /// truncation. Recorded in run metadata when choosing `K`.
    pub fn tail_fraction<T: Scalar>(
        &self,
        basis: &Arc<Eigenbasis<T>>,
        dim: usize,
        u: &SpectralVector<T>,
        k_modes: usize,
        k_reference: usize,
    ) -> Result<f64> {
        use crate::spectral::FracOrder;
        let full = self
            .columns(basis, dim, u, k_reference.max(k_modes))?
            .hs_norm_sq(FracOrder::H)
            .to_f64_lossy();
        if full == 0.0 {
            return Ok(0.0);
        }
        let head = self
            .columns(basis, dim, u, k_modes)?
            .hs_norm_sq(FracOrder::H)
            .to_f64_lossy();
        Ok(((full - head) / full).max(0.0))
    }
}

fn additive_column<T: Scalar>(
    basis: &Arc<Eigenbasis<T>>,
    dim: usize,
    amplitude: f64,
    decay: f64,
    k: usize,
) -> Result<SpectralVector<T>> {
    if k <= dim {
        Ok(SpectralVector::unit(k, dim, Arc::clone(basis))?
            .scaled(T::from_f64_lossy(NoiseSpec::weight(amplitude, decay, k))))
    } else {
        SpectralVector::zeros(dim, Arc::clone(basis))
    }
}

/// Deterministic forcing `F_U`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingSpec {
    /// `F ≡ 0`.
    #[default]
    None,
    /// `F(U) = scale · U` (identity map scaled; Lipschitz with constant
    /// `|scale| λ_1^{-1/2}` from `V` to `H` when `λ_1 ≥ 1`).
    Linear { scale: f64 },
    /// Constant forcing along one eigenmode.
    Constant { mode: usize, amplitude: f64 },
}

impl ForcingSpec {
    pub fn eval<T: Scalar>(
        &self,
        basis: &Arc<Eigenbasis<T>>,
        dim: usize,
        u: &SpectralVector<T>,
    ) -> Result<SpectralVector<T>> {
        match *self {
            ForcingSpec::None => SpectralVector::zeros(dim, Arc::clone(basis)),
            ForcingSpec::Linear { scale } => Ok(u.scaled(T::from_f64_lossy(scale))),
            ForcingSpec::Constant { mode, amplitude } => {
                Ok(SpectralVector::unit(mode, dim, Arc::clone(basis))?
                    .scaled(T::from_f64_lossy(amplitude)))
            }
        }
    }
}
