//! Serialization of states, trajectories, and noise paths.
//!
//! Grid and coefficient data use one flat binary layout: magic `SGB1`,
//! a little-endian `u32` dimension count, the dimensions as `u64`s, then the
//! payload as little-endian `f64`s in C order. Trajectory tables are CSV with
//! a fixed column set; all floating-point text is printed with 17 significant
//! digits so values round-trip exactly.

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::noise::NoisePath;
use crate::scalar::Scalar;
use crate::solver::TrajectoryRecord;
use crate::spectral::{Eigenbasis, SpectralVector};

const MAGIC: &[u8; 4] = b"SGB1";

/// Formats a float with 17 significant digits (exact `f64` round trip).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Encodes a flat array with its dimensions.
pub fn encode_array(dims: &[u64], data: impl Iterator<Item = f64>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for &d in dims {
        out.extend_from_slice(&d.to_le_bytes());
    }
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes a flat array; returns the dimensions and the payload.
pub fn decode_array(bytes: &[u8]) -> Result<(Vec<u64>, Vec<f64>)> {
    if bytes.len() < 8 || &bytes[0..4] != MAGIC {
        return Err(Error::Format("bad magic in binary array".into()));
    }
    let ndims = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let mut at = 8;
    let mut dims = Vec::with_capacity(ndims);
    for _ in 0..ndims {
        if at + 8 > bytes.len() {
            return Err(Error::Format("truncated dimension header".into()));
        }
        dims.push(u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap()));
        at += 8;
    }
    let expect: u64 = dims.iter().product();
    let payload = &bytes[at..];
    if payload.len() != (expect as usize) * 8 {
        return Err(Error::Format(format!(
            "payload length {} does not match dims {:?}",
            payload.len(),
            dims
        )));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((dims, data))
}

/// Binary encoding of a coefficient vector.
pub fn encode_vector<T: Scalar>(v: &SpectralVector<T>) -> Vec<u8> {
    encode_array(
        &[v.len() as u64],
        v.coeffs().iter().map(|c| c.to_f64_lossy()),
    )
}

/// Decodes a coefficient vector over a given basis.
pub fn decode_vector<T: Scalar>(
    bytes: &[u8],
    basis: &Arc<Eigenbasis<T>>,
) -> Result<SpectralVector<T>> {
    let (dims, data) = decode_array(bytes)?;
    if dims.len() != 1 {
        return Err(Error::Format(format!(
            "expected a rank-1 array for a coefficient vector, got rank {}",
            dims.len()
        )));
    }
    SpectralVector::new(
        data.into_iter().map(T::from_f64_lossy).collect(),
        Arc::clone(basis),
    )
}

/// Binary encoding of a noise path (increments only; the JSON sidecar carries
/// the regeneration metadata).
pub fn encode_noise<T: Scalar>(path: &NoisePath<T>) -> Vec<u8> {
    encode_array(
        &[path.k_modes() as u64, path.steps() as u64],
        path.increments().iter().map(|c| c.to_f64_lossy()),
    )
}

/// Sidecar metadata sufficient to regenerate a path bit-exactly.
pub fn noise_sidecar<T: Scalar>(path: &NoisePath<T>) -> serde_json::Value {
    serde_json::json!({
        "seed": path.seed(),
        "stream": path.stream(),
        "K": path.k_modes(),
        "M": path.steps(),
        "dt": path.dt().to_f64_lossy(),
        "generator_id": path.generator_id(),
    })
}

/// Writes the per-step trajectory table:
/// `t, v_norm, da_norm, dist_to_ustar, theta, energy_integral, blowup_integral`.
pub fn write_trajectory_csv<T: Scalar, W: Write>(
    record: &TrajectoryRecord<T>,
    mut w: W,
) -> std::io::Result<()> {
    writeln!(
        w,
        "t,v_norm,da_norm,dist_to_ustar,theta,energy_integral,blowup_integral"
    )?;
    for m in 0..record.times.len() {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            fmt_f64(record.times[m].to_f64_lossy()),
            fmt_f64(record.v_norm[m].to_f64_lossy()),
            fmt_f64(record.da_norm[m].to_f64_lossy()),
            fmt_f64(record.dist_to_ustar[m].to_f64_lossy()),
            fmt_f64(record.theta_value[m].to_f64_lossy()),
            fmt_f64(record.energy_integral[m].to_f64_lossy()),
            fmt_f64(record.blowup_integral[m].to_f64_lossy()),
        )?;
    }
    Ok(())
}

/// FNV-1a 64-bit content hash, printed as fixed-width hex. Used to freeze
/// golden outputs and to cross-check replayed artifacts.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}
