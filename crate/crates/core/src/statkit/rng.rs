//! Seeded random streams and the samplers the simulator draws from.
//!
//! A stream is a ChaCha20 generator whose 256-bit key is a pure function of
//! `(master_seed, path)`, so any replication can be regenerated in isolation.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution, Gamma, Poisson, StandardNormal};

use crate::error::{domain, Result};

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A deterministic random stream identified by a master seed and a path.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha20Rng,
    path: Vec<u64>,
}

impl RngStream {
    pub fn path(&self) -> &[u64] {
        &self.path
    }

    /// Uniform draw in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

/// Derive the stream for `path` under `master_seed`.
pub fn derive_stream(master_seed: u64, path: &[u64]) -> RngStream {
    let mut state = master_seed ^ 0x6D65_7461_706F_6F6C;
    // Length-prefixed so [1, 0] and [1] differ.
    state ^= (path.len() as u64).wrapping_mul(0xA24B_AED4_963E_E407);
    for &p in path {
        let mixed = splitmix64(&mut state);
        state ^= p.wrapping_add(mixed.rotate_left(17));
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    RngStream {
        rng: ChaCha20Rng::from_seed(seed),
        path: path.to_vec(),
    }
}

/// Gamma draw with the shape/rate convention (mean shape/rate).
pub fn sample_gamma(rng: &mut RngStream, shape: f64, rate: f64) -> Result<f64> {
    if !(shape > 0.0 && rate > 0.0) {
        return Err(domain(format!("gamma needs shape, rate > 0, got ({shape}, {rate})")));
    }
    let g = Gamma::new(shape, 1.0 / rate).map_err(|e| domain(e.to_string()))?;
    Ok(g.sample(&mut rng.rng))
}

pub fn sample_poisson(rng: &mut RngStream, mean: f64) -> Result<u64> {
    if !(mean >= 0.0) || !mean.is_finite() {
        return Err(domain(format!("poisson mean must be finite and >= 0, got {mean}")));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mean).map_err(|e| domain(e.to_string()))?;
    Ok(d.sample(&mut rng.rng) as u64)
}

pub fn sample_binomial(rng: &mut RngStream, n: u64, p: f64) -> Result<u64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(domain(format!("binomial p must lie in [0, 1], got {p}")));
    }
    let d = Binomial::new(n, p).map_err(|e| domain(e.to_string()))?;
    Ok(d.sample(&mut rng.rng))
}

/// Lower-triangular factor `L` with `L Lᵀ = cov`.
///
/// Eigenvalues down to `-1e-10 · trace` are accepted as rounding noise;
/// pivots at or below that tolerance get a zero column, so exactly
/// singular blocks (such as a zero variance) stay exactly zero.
pub fn psd_factor(cov: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let asym = (cov - cov.transpose()).abs().max();
    let scale = cov.abs().max().max(1.0);
    if asym > 1e-12 * scale {
        return Err(domain("covariance matrix is not symmetric"));
    }
    let tol = 1e-10 * cov.trace().abs();
    let eig = SymmetricEigen::new(*cov);
    if let Some(&lambda) = eig.eigenvalues.iter().find(|&&l| l < -tol) {
        return Err(domain(format!(
            "covariance matrix is not positive semi-definite (eigenvalue {lambda})"
        )));
    }
    let mut l = Matrix3::zeros();
    for j in 0..3 {
        let d = cov[(j, j)] - (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum::<f64>();
        if d <= tol {
            continue;
        }
        let root = d.sqrt();
        l[(j, j)] = root;
        for i in j + 1..3 {
            let off = cov[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
            l[(i, j)] = off / root;
        }
    }
    Ok(l)
}

/// Zero-mean trivariate normal draw with covariance `cov`.
pub fn sample_trivariate_normal(rng: &mut RngStream, cov: &Matrix3<f64>) -> Result<[f64; 3]> {
    let factor = psd_factor(cov)?;
    Ok(sample_with_factor(rng, &factor))
}

pub(crate) fn sample_with_factor(rng: &mut RngStream, factor: &Matrix3<f64>) -> [f64; 3] {
    let z = Vector3::new(rng.standard_normal(), rng.standard_normal(), rng.standard_normal());
    let x = factor * z;
    [x[0], x[1], x[2]]
}
