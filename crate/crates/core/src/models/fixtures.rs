//! Negative-control fixtures.

use std::sync::Arc;

use crate::error::Result;
use crate::model::AbstractModel;
use crate::noise::HsColumns;
use crate::scalar::Scalar;
use crate::spectral::{Eigenbasis, SpectralVector};

/// Deliberately broken model with `B(U, U♯) = U♯`: the cancellation pairing
/// `⟨B(U,U♯),U♯⟩ = |U♯|²` is as far from zero as it gets. Used to prove the
/// verifiers can fail.
pub struct BrokenModel<T: Scalar> {
    basis: Arc<Eigenbasis<T>>,
    dim: usize,
}

impl<T: Scalar> BrokenModel<T> {
    pub fn new(dim: usize) -> Result<Self> {
        Ok(Self {
            basis: Eigenbasis::power_law(dim, 2.0)?,
            dim,
        })
    }
}

impl<T: Scalar> AbstractModel<T> for BrokenModel<T> {
    fn basis(&self) -> &Arc<Eigenbasis<T>> {
        &self.basis
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn label(&self) -> &str {
        "broken-fixture"
    }

    fn bilinear(
        &self,
        _u: &SpectralVector<T>,
        usharp: &SpectralVector<T>,
    ) -> Result<SpectralVector<T>> {
        Ok(usharp.clone())
    }

    fn forcing(&self, _t: T, _u: &SpectralVector<T>) -> Result<SpectralVector<T>> {
        SpectralVector::zeros(self.dim, Arc::clone(&self.basis))
    }

    fn noise(&self, _t: T, _u: &SpectralVector<T>, _k_modes: usize) -> Result<HsColumns<T>> {
        Ok(HsColumns::empty())
    }
}
