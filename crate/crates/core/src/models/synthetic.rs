//! Synthetic model: a sparse bilinear term from antisymmetric structure
//! constants.
//!
//! `B_k(U, V) = Σ_{i,j} γ_{ijk} U_i V_j` with `γ_{ijk} = -γ_{ikj}` enforced
//! exactly, so the cancellation `⟨B(U, U♯), U♯⟩ = 0` holds to rounding for
//! every input — which makes this the reference model for everything the
//! solver and the ensemble harnesses need to certify.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::AbstractModel;
use crate::models::common::{ForcingSpec, NoiseSpec};
use crate::noise::HsColumns;
use crate::prng::CounterRng;
use crate::scalar::Scalar;
use crate::spectral::{Eigenbasis, SpectralVector};

/// Parameters of the generated structure-constant tensor.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    /// Number of retained modes (also the eigenbasis cap).
    pub dim: usize,
    /// Expected number of `(j, k)` interaction pairs per first index.
    #[serde(default = "SyntheticSpec::default_pairs")]
    pub pairs_per_mode: usize,
    /// Falloff of `|γ_{ijk}|` with the interacting mode indices.
    #[serde(default = "SyntheticSpec::default_decay")]
    pub decay_exponent: f64,
    /// Overall magnitude of the structure constants.
    #[serde(default = "SyntheticSpec::default_amplitude")]
    pub amplitude: f64,
    /// Seed of the tensor draw.
    pub seed: u64,
    /// Eigenvalue growth `λ_k = k^eigen_exponent`.
    #[serde(default = "SyntheticSpec::default_eigen")]
    pub eigen_exponent: f64,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub forcing: ForcingSpec,
}

impl SyntheticSpec {
    fn default_pairs() -> usize {
        8
    }
    fn default_decay() -> f64 {
        1.0
    }
    fn default_amplitude() -> f64 {
        1.0
    }
    fn default_eigen() -> f64 {
        2.0
    }
}

/// One stored entry `γ_{ijk}`; its antisymmetric partner is stored explicitly.
#[derive(Debug, Clone, Copy)]
struct Entry {
    i: u32,
    j: u32,
    k: u32,
    gamma: f64,
}

/// Synthetic model instance.
pub struct SyntheticModel<T: Scalar> {
    spec: SyntheticSpec,
    basis: Arc<Eigenbasis<T>>,
    entries: Vec<Entry>,
    label: String,
}

impl<T: Scalar> SyntheticModel<T> {
    /// Generates the tensor from the spec, drawing pairs deterministically
    /// from the counter generator.
    pub fn generate(spec: SyntheticSpec) -> Result<Self> {
        if spec.dim < 3 {
            return Err(Error::Domain("synthetic model needs dim >= 3".into()));
        }
        let mut triples = Vec::new();
        for i in 1..=spec.dim {
            let rng = CounterRng::new(spec.seed, i as u64);
            for draw in 0..spec.pairs_per_mode {
                let pos = 3 * draw as u64;
                let j = 1 + (rng.uniform_at(pos) * spec.dim as f64) as usize;
                let k = 1 + (rng.uniform_at(pos + 1) * spec.dim as f64) as usize;
                let (j, k) = (j.min(spec.dim), k.min(spec.dim));
                if j == k {
                    continue;
                }
                let z = rng.normal_at(pos + 2);
                let falloff = ((i + j + k) as f64).powf(-spec.decay_exponent);
                triples.push((i, j, k, spec.amplitude * z * falloff));
            }
        }
        Self::from_constants(spec, &triples)
    }

    /// Builds a model from explicit constants `γ_{ijk}`; the antisymmetric
    /// partner `γ_{ikj} = -γ_{ijk}` is inserted automatically.
    pub fn from_constants(spec: SyntheticSpec, triples: &[(usize, usize, usize, f64)]) -> Result<Self> {
        let dim = spec.dim;
        let mut entries = Vec::with_capacity(2 * triples.len());
        for &(i, j, k, gamma) in triples {
            if i == 0 || j == 0 || k == 0 || i > dim || j > dim || k > dim {
                return Err(Error::Domain(format!(
                    "structure constant index ({i},{j},{k}) outside 1..={dim}"
                )));
            }
            if j == k {
                return Err(Error::Domain(
                    "antisymmetry forbids structure constants with j == k".into(),
                ));
            }
            entries.push(Entry {
                i: i as u32,
                j: j as u32,
                k: k as u32,
                gamma,
            });
            entries.push(Entry {
                i: i as u32,
                j: k as u32,
                k: j as u32,
                gamma: -gamma,
            });
        }
        let basis = Eigenbasis::power_law(dim, spec.eigen_exponent)?;
        Ok(Self {
            label: format!("synthetic-d{}-s{}", dim, spec.seed),
            spec,
            basis,
            entries,
        })
    }

    pub fn spec(&self) -> &SyntheticSpec {
        &self.spec
    }

    /// Number of stored tensor entries (both orientations).
    pub fn entry_count(&self) -> usize {
        self.entries.len()
    }
}

impl<T: Scalar> AbstractModel<T> for SyntheticModel<T> {
    fn basis(&self) -> &Arc<Eigenbasis<T>> {
        &self.basis
    }

    fn dim(&self) -> usize {
        self.spec.dim
    }

    fn label(&self) -> &str {
        &self.label
    }

    fn bilinear(
        &self,
        u: &SpectralVector<T>,
        usharp: &SpectralVector<T>,
    ) -> Result<SpectralVector<T>> {
        if !u.same_basis(usharp) {
            return Err(Error::DimensionMismatch(
                "bilinear arguments live over different bases".into(),
            ));
        }
        let u_c = u.coeffs();
        let v_c = usharp.coeffs();
        let mut out = vec![T::zero(); self.spec.dim];
        for e in &self.entries {
            let (i, j, k) = (e.i as usize - 1, e.j as usize - 1, e.k as usize - 1);
            if i < u_c.len() && j < v_c.len() {
                out[k] += T::from_f64_lossy(e.gamma) * u_c[i] * v_c[j];
            }
        }
        SpectralVector::new(out, Arc::clone(&self.basis))
    }

    fn forcing(&self, _t: T, u: &SpectralVector<T>) -> Result<SpectralVector<T>> {
        self.spec.forcing.eval(&self.basis, self.spec.dim, u)
    }

    fn noise(&self, _t: T, u: &SpectralVector<T>, k_modes: usize) -> Result<HsColumns<T>> {
        self.spec.noise.columns(&self.basis, self.spec.dim, u, k_modes)
    }
}
