//! Seeded sampling.
//!
//! Every sampler draws from a [`Stream`]: a ChaCha20 generator keyed by a
//! 64-bit seed with an explicit stream index, so `(seed, stream)` fully
//! determines the output on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tensor::{CMatrix, C64};

/// A counter-based random stream.
#[derive(Debug, Clone)]
pub struct Stream(ChaCha20Rng);

impl Stream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self(rng)
    }

    /// Independent child stream for sub-task `index`.
    pub fn derive(seed: u64, index: u64) -> Self {
        Self::new(seed, index.wrapping_add(1) << 8)
    }

    pub fn normal(&mut self) -> f64 {
        self.0.sample(StandardNormal)
    }

    pub fn uniform(&mut self) -> f64 {
        self.0.random::<f64>()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.0.random_range(0..n)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.random()
    }

    /// Standard complex Gaussian with `E|z|² = 1`.
    pub fn complex_normal(&mut self) -> C64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        C64::new(self.normal() * s, self.normal() * s)
    }
}

pub fn ginibre(rng: &mut Stream, rows: usize, cols: usize) -> CMatrix {
    let mut m = CMatrix::zeros(rows, cols);
    // fill column by column so the draw order is fixed
    for c in 0..cols {
        for r in 0..rows {
            m[(r, c)] = rng.complex_normal();
        }
    }
    m
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases
/// of `R`'s diagonal moved into `Q`.
pub fn haar_unitary(rng: &mut Stream, d: usize) -> Result<CMatrix> {
    if d < 1 {
        return Err(Error::InvalidDimension(d));
    }
    let g = ginibre(rng, d, d);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..d {
        let rc = r[(c, c)];
        let phase = if rc.norm() > 0.0 { rc / rc.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..d {
            q[(row, c)] *= phase;
        }
    }
    Ok(q)
}

/// Random isometry `V: C^d_in → C^d_out` (`d_out ≥ d_in`), the first columns of a Haar unitary.
pub fn random_isometry(rng: &mut Stream, d_in: usize, d_out: usize) -> Result<CMatrix> {
    if d_out < d_in {
        return Err(Error::InvalidArgument(format!(
            "isometry needs d_out ≥ d_in, got {d_out} < {d_in}"
        )));
    }
    let u = haar_unitary(rng, d_out)?;
    Ok(u.columns(0, d_in).into_owned())
}

pub fn random_hermitian(rng: &mut Stream, d: usize) -> CMatrix {
    let g = ginibre(rng, d, d);
    (&g + g.adjoint()).scale(0.5)
}

/// Random density matrix of rank ≤ `rank` from the induced (Hilbert–Schmidt-type) measure.
pub fn random_density(rng: &mut Stream, d: usize, rank: usize) -> CMatrix {
    let g = ginibre(rng, d, rank.max(1));
    let m = &g * g.adjoint();
    let t = m.trace().re;
    m.scale(1.0 / t)
}

/// Haar-random unit vector.
pub fn random_pure(rng: &mut Stream, d: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..d).map(|_| rng.complex_normal()).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

/// Kraus operators of a random channel from a Haar isometry into output ⊗ environment.
pub fn random_kraus(rng: &mut Stream, d_in: usize, d_out: usize, n_kraus: usize) -> Result<Vec<CMatrix>> {
    let v = random_isometry(rng, d_in, d_out * n_kraus)?;
    // row index = out * n_kraus + env
    Ok((0..n_kraus)
        .map(|e| CMatrix::from_fn(d_out, d_in, |o, i| v[(o * n_kraus + e, i)]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_unitary_bitwise() {
        let a = haar_unitary(&mut Stream::new(42, 0), 3).unwrap();
        let b = haar_unitary(&mut Stream::new(42, 0), 3).unwrap();
        assert_eq!(a, b);
        let c = haar_unitary(&mut Stream::new(42, 1), 3).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn random_kraus_is_trace_preserving() {
        let ks = random_kraus(&mut Stream::new(1, 0), 2, 3, 2).unwrap();
        let s = ks.iter().fold(CMatrix::zeros(2, 2), |acc, k| acc + k.adjoint() * k);
        assert!((s - CMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn random_density_is_state() {
        let rho = random_density(&mut Stream::new(9, 0), 4, 4);
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        assert!((&rho - rho.adjoint()).norm() < 1e-14);
    }
}
