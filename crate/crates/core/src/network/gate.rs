//! A single two-party unitary `U: ab → cd` seen through its Choi state.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::choi::channels;
use crate::error::{Error, Result};
use crate::measures::coherent_information;
use crate::random::{haar_unitary, Stream};
use crate::tensor::{CMatrix, LabeledOperator, SystemId};

const LABELS: [&str; 4] = ["a", "b", "c", "d"];

/// How sample gates are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateMode {
    Haar,
    /// `H_{a→c} ⊗ G_{b→d}`.
    FactorizedAligned,
    /// `H_{a→d} ⊗ G_{b→c}`.
    FactorizedSwap,
}

/// Normalized Choi state of `u` over `(c, d, a, b)`.
pub fn gate_choi(u: &CMatrix, dims: [usize; 4]) -> Result<LabeledOperator> {
    let s = |i: usize| SystemId::new(LABELS[i], dims[i]);
    let m = channels::unitary_channel(u, vec![s(0)?, s(1)?], vec![s(2)?, s(3)?])?;
    Ok(m.choi().scale(1.0 / (dims[0] * dims[1]) as f64))
}

fn swap(d1: usize, d2: usize) -> CMatrix {
    // |i⟩|j⟩ ↦ |j⟩|i⟩ from (d1 ⊗ d2) to (d2 ⊗ d1)
    let n = d1 * d2;
    let mut m = CMatrix::zeros(n, n);
    for i in 0..d1 {
        for j in 0..d2 {
            m[(j * d1 + i, i * d2 + j)] = crate::tensor::C64::new(1.0, 0.0);
        }
    }
    m
}

fn sample_gate(mode: GateMode, dims: [usize; 4], rng: &mut Stream) -> Result<CMatrix> {
    let [a, b, c, d] = dims;
    match mode {
        GateMode::Haar => haar_unitary(rng, a * b),
        GateMode::FactorizedAligned => {
            if a != c || b != d {
                return Err(Error::InvalidArgument("aligned factorized gates need |a| = |c|, |b| = |d|".into()));
            }
            let h = haar_unitary(rng, a)?;
            let g = haar_unitary(rng, b)?;
            Ok(h.kronecker(&g))
        }
        GateMode::FactorizedSwap => {
            if a != d || b != c {
                return Err(Error::InvalidArgument("swapped factorized gates need |a| = |d|, |b| = |c|".into()));
            }
            let h = haar_unitary(rng, a)?;
            let g = haar_unitary(rng, b)?;
            Ok(g.kronecker(&h) * swap(a, b))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitaryExperiment {
    pub dims: [usize; 4],
    pub cut: Vec<String>,
    pub mode: GateMode,
    pub samples: usize,
    pub seed: u64,
    /// `log₂|cut| − 1`.
    pub threshold_bits: f64,
    /// Fraction of samples strictly above the threshold.
    pub pass_fraction: f64,
    pub min_bits: f64,
    pub mean_bits: f64,
    pub max_bits: f64,
    pub histogram: Vec<HistogramBin>,
}

/// Coherent information of sampled gate Choi states with target `cut`.
pub fn unitary_experiment(
    dims: [usize; 4],
    cut: &[String],
    mode: GateMode,
    samples: usize,
    seed: u64,
    bins: usize,
) -> Result<UnitaryExperiment> {
    if dims[0] * dims[1] != dims[2] * dims[3] || dims.iter().any(|&d| d < 1) {
        return Err(Error::InvalidArgument(format!("a unitary needs |ab| = |cd|, got {dims:?}")));
    }
    if samples == 0 || bins == 0 {
        return Err(Error::ParameterOutOfRange {
            name: "samples",
            value: samples.min(bins) as f64,
        });
    }
    let mut cut_dim = 1;
    for l in cut {
        let i = LABELS
            .iter()
            .position(|x| x == l)
            .ok_or_else(|| Error::UnknownLabel(l.clone()))?;
        cut_dim *= dims[i];
    }
    let values: Vec<Result<f64>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let u = sample_gate(mode, dims, &mut Stream::derive(seed, i as u64))?;
            coherent_information(&gate_choi(&u, dims)?, cut)
        })
        .collect();
    let values: Vec<f64> = values.into_iter().collect::<Result<_>>()?;
    let top = (cut_dim as f64).log2();
    let threshold = top - 1.0;
    let width = top.max(1e-12) / bins as f64;
    let mut histogram: Vec<HistogramBin> = (0..bins)
        .map(|k| HistogramBin {
            lo: k as f64 * width,
            hi: (k + 1) as f64 * width,
            count: 0,
        })
        .collect();
    for &v in &values {
        let k = ((v / width).floor().max(0.0) as usize).min(bins - 1);
        histogram[k].count += 1;
    }
    let n = samples as f64;
    Ok(UnitaryExperiment {
        dims,
        cut: cut.to_vec(),
        mode,
        samples,
        seed,
        threshold_bits: threshold,
        pass_fraction: values.iter().filter(|&&v| v > threshold).count() as f64 / n,
        min_bits: values.iter().copied().fold(f64::INFINITY, f64::min),
        mean_bits: values.iter().sum::<f64>() / n,
        max_bits: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        histogram,
    })
}
