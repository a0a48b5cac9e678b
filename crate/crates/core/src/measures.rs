//! Entropic quantities in bits.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{hermitian_eigh, LabeledOperator, C64};

/// Eigenvalues in `[-CLAMP_NEGATIVE, CLAMP_POSITIVE]` count as exact zeros.
pub const CLAMP_NEGATIVE: f64 = 1e-9;
pub const CLAMP_POSITIVE: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-9;
pub const PURITY_TOL: f64 = 1e-9;

/// `−Σ λ log₂ λ` over a spectrum, with the roundoff clamp applied.
pub fn entropy_of_spectrum(vals: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &l in vals {
        if l < -CLAMP_NEGATIVE {
            return Err(Error::NotPositive(l));
        }
        if l > CLAMP_POSITIVE {
            s -= l * l.log2();
        }
    }
    Ok(s.max(0.0))
}

pub fn von_neumann_entropy(rho: &LabeledOperator) -> Result<f64> {
    let t = rho.trace();
    if (t - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
        return Err(Error::TraceMismatch {
            expected: 1.0,
            found: t.re,
        });
    }
    let (vals, _) = hermitian_eigh(rho.matrix(), false)?;
    entropy_of_spectrum(&vals)
}

fn check_subset<S: AsRef<str>>(rho: &LabeledOperator, labels: &[S]) -> Result<()> {
    for l in labels {
        if !rho.contains(l.as_ref()) {
            return Err(Error::UnknownLabel(l.as_ref().to_string()));
        }
    }
    Ok(())
}

/// Entropy of the marginal on `labels`.
pub fn marginal_entropy<S: AsRef<str>>(rho: &LabeledOperator, labels: &[S]) -> Result<f64> {
    check_subset(rho, labels)?;
    von_neumann_entropy(&rho.reduce_to(labels)?)
}

/// `S(target) − S(all)`.
pub fn coherent_information<S: AsRef<str>>(rho: &LabeledOperator, target: &[S]) -> Result<f64> {
    if target.is_empty() {
        return Err(Error::InvalidArgument("empty target".into()));
    }
    Ok(marginal_entropy(rho, target)? - von_neumann_entropy(rho)?)
}

/// `S(all) − S(conditioning)`.
pub fn conditional_entropy<S: AsRef<str>>(rho: &LabeledOperator, conditioning: &[S]) -> Result<f64> {
    Ok(von_neumann_entropy(rho)? - marginal_entropy(rho, conditioning)?)
}

/// `S(x) + S(y) − S(xy)` for disjoint `x`, `y` covering `rho`.
pub fn mutual_information<S: AsRef<str>>(rho: &LabeledOperator, x: &[S], y: &[S]) -> Result<f64> {
    let xs: HashSet<&str> = x.iter().map(|s| s.as_ref()).collect();
    let ys: HashSet<&str> = y.iter().map(|s| s.as_ref()).collect();
    if let Some(l) = xs.intersection(&ys).next() {
        return Err(Error::InvalidArgument(format!("`{l}` is on both sides")));
    }
    check_subset(rho, x)?;
    check_subset(rho, y)?;
    for s in rho.systems() {
        if !xs.contains(s.label.as_str()) && !ys.contains(s.label.as_str()) {
            return Err(Error::InvalidArgument(format!("`{}` is on neither side", s.label)));
        }
    }
    Ok(marginal_entropy(rho, x)? + marginal_entropy(rho, y)? - von_neumann_entropy(rho)?)
}

/// Two-sided split of an operator's systems with a target set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bipartition {
    pub side_a: Vec<String>,
    pub side_b: Vec<String>,
    pub target: Vec<String>,
}

impl Bipartition {
    pub fn new(side_a: Vec<String>, side_b: Vec<String>, target: Vec<String>) -> Result<Self> {
        let a: HashSet<&String> = side_a.iter().collect();
        let b: HashSet<&String> = side_b.iter().collect();
        if let Some(l) = a.intersection(&b).next() {
            return Err(Error::InvalidArgument(format!("`{l}` is on both sides")));
        }
        if target.is_empty() {
            return Err(Error::InvalidArgument("empty target".into()));
        }
        let within = |side: &HashSet<&String>| target.iter().all(|t| side.contains(t));
        if !within(&a) && !within(&b) {
            return Err(Error::InvalidArgument("target must lie within one side".into()));
        }
        Ok(Self { side_a, side_b, target })
    }

    /// Side A as the target.
    pub fn targeting_a(side_a: Vec<String>, side_b: Vec<String>) -> Result<Self> {
        let t = side_a.clone();
        Self::new(side_a, side_b, t)
    }

    pub fn check_covers(&self, rho: &LabeledOperator) -> Result<()> {
        let all: HashSet<&str> = self.side_a.iter().chain(&self.side_b).map(|s| s.as_str()).collect();
        for s in rho.systems() {
            if !all.contains(s.label.as_str()) {
                return Err(Error::InvalidArgument(format!("`{}` is on neither side", s.label)));
            }
        }
        check_subset(rho, &self.side_a)?;
        check_subset(rho, &self.side_b)
    }

    pub fn coherent_information(&self, rho: &LabeledOperator) -> Result<f64> {
        self.check_covers(rho)?;
        coherent_information(rho, &self.target)
    }
}

/// Reduced entropies of both sides of a pure state.
pub fn pure_state_symmetry_check(rho: &LabeledOperator, cut: &Bipartition) -> Result<(f64, f64)> {
    cut.check_covers(rho)?;
    let purity = (rho.matrix() * rho.matrix()).trace().re;
    if purity < 1.0 - PURITY_TOL {
        return Err(Error::NotPure(purity));
    }
    Ok((marginal_entropy(rho, &cut.side_a)?, marginal_entropy(rho, &cut.side_b)?))
}
