//! Numerical maximization of coherent information.
//!
//! Every value reported here is the objective evaluated at a returned
//! argument, so it is a certified lower bound on the corresponding supremum.
//! Ascent runs over products of density matrices: a gradient step followed by
//! the Euclidean projection of each block onto the density-matrix set.

mod channel;
mod lo;

pub use channel::{channel_coherent_information, channel_objective, channel_objective_gradient};
pub use lo::{
    entanglement_generation_bound, evaluate_lo, lo_family_sweep, lo_optimized_ci, lo_optimized_ci_with,
    regularized_ci_estimate, GenerationBound, LoArgument, LoFamily, PartyChannel, PartyPreparation,
    RegularizedEstimate,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::coherent_information;
use crate::tensor::{hermitian_eigh, hermitian_function, CMatrix, LabeledOperator, C64};

/// Floor applied to eigenvalues inside logarithms of gradients.
pub(crate) const LOG_FLOOR: f64 = 1e-15;
/// Default cap on the dimension of any operator the optimizer builds.
pub const DIMENSION_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    Fixed,
    Backtracking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub step_rule: StepRule,
    pub seed: u64,
    /// Initial (and, for [`StepRule::Fixed`], constant) step length.
    pub step: f64,
    pub dimension_cap: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_iterations: 2000,
            gradient_tolerance: 1e-7,
            step_rule: StepRule::Backtracking,
            seed: 0,
            step: 1.0,
            dimension_cap: DIMENSION_CAP,
        }
    }
}

impl OptimizerConfig {
    pub fn check(&self) -> Result<()> {
        if self.restarts < 1 {
            return Err(Error::ParameterOutOfRange {
                name: "restarts",
                value: self.restarts as f64,
            });
        }
        for (name, v) in [("gradient_tolerance", self.gradient_tolerance), ("step", self.step)] {
            if !(v > 0.0) {
                return Err(Error::ParameterOutOfRange { name, value: v });
            }
        }
        Ok(())
    }
}

/// Where the optimum was found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Argument {
    /// Channel input density matrix.
    InputState { state: LabeledOperator },
    /// Local operations of the declared family.
    LocalOperations(LoArgument),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub value_bits: f64,
    pub argument: Argument,
    pub iterations_used: usize,
    pub converged: bool,
    pub restart_values: Vec<f64>,
    pub family: String,
}

/// A smooth objective on a product of density matrices.
pub(crate) trait Objective: Sync {
    fn value(&self, x: &[CMatrix]) -> Result<f64>;
    /// Value and the Hermitian gradient of each block.
    fn value_and_gradient(&self, x: &[CMatrix]) -> Result<(f64, Vec<CMatrix>)>;
}

#[derive(Debug, Clone)]
pub(crate) struct Ascent {
    pub value: f64,
    pub point: Vec<CMatrix>,
    pub iterations: usize,
    pub converged: bool,
}

/// Euclidean projection of a real vector onto the probability simplex.
pub(crate) fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Nearest density matrix in Frobenius norm to a Hermitian matrix.
pub fn project_to_density(m: &CMatrix) -> Result<CMatrix> {
    let h = (m + m.adjoint()).scale(0.5);
    let (vals, vecs) = hermitian_eigh(&h, true)?;
    let vecs = vecs.expect("requested eigenvectors");
    let p = project_simplex(&vals);
    let n = vals.len();
    let mut scaled = vecs.clone();
    for (c, &w) in p.iter().enumerate() {
        for r in 0..n {
            scaled[(r, c)] *= C64::new(w, 0.0);
        }
    }
    let out = &scaled * vecs.adjoint();
    Ok((&out + out.adjoint()).scale(0.5))
}

/// `log₂` of a density matrix with the eigenvalue floor.
pub(crate) fn log2m(m: &CMatrix) -> Result<CMatrix> {
    hermitian_function(m, |x| x.max(LOG_FLOOR).log2())
}

fn inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Projected gradient ascent from `start`.
pub(crate) fn ascend(obj: &dyn Objective, start: Vec<CMatrix>, cfg: &OptimizerConfig) -> Result<Ascent> {
    let mut x: Vec<CMatrix> = start.iter().map(project_to_density).collect::<Result<_>>()?;
    if x.is_empty() {
        return Ok(Ascent {
            value: obj.value(&x)?,
            point: x,
            iterations: 0,
            converged: true,
        });
    }
    let (mut f, mut g) = obj.value_and_gradient(&x)?;
    let mut t = cfg.step;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        // stationarity: size of the projected unit step
        let mut stat = 0.0;
        for (xi, gi) in x.iter().zip(&g) {
            stat += (project_to_density(&(xi + gi))? - xi).norm_squared();
        }
        if stat.sqrt() < cfg.gradient_tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let step_to = |t: f64| -> Result<Vec<CMatrix>> {
            x.iter()
                .zip(&g)
                .map(|(xi, gi)| project_to_density(&(xi + gi.scale(t))))
                .collect()
        };
        match cfg.step_rule {
            StepRule::Fixed => {
                x = step_to(t)?;
                (f, g) = obj.value_and_gradient(&x)?;
            }
            StepRule::Backtracking => {
                let mut accepted = false;
                while t > 1e-14 {
                    let y = step_to(t)?;
                    let fy = obj.value(&y)?;
                    let lin: f64 = y.iter().zip(&x).zip(&g).map(|((yi, xi), gi)| inner(gi, &(yi - xi))).sum();
                    if fy >= f + 1e-4 * lin && fy >= f {
                        let moved: f64 = y.iter().zip(&x).map(|(a, b)| (a - b).norm_squared()).sum();
                        x = y;
                        let gained = fy - f;
                        (f, g) = obj.value_and_gradient(&x)?;
                        accepted = true;
                        t = (t * 2.0).min(1e6);
                        if moved.sqrt() < 1e-14 || gained.abs() < 1e-15 {
                            // no further progress possible at this precision
                            converged = true;
                        }
                        break;
                    }
                    t *= 0.5;
                }
                if !accepted || converged {
                    break;
                }
            }
        }
    }
    Ok(Ascent {
        value: f,
        point: x,
        iterations,
        converged,
    })
}

/// Run `ascend` from each start in parallel; the best value wins, ties go to
/// the lowest index.
pub(crate) fn best_of(
    obj: &dyn Objective,
    starts: Vec<Vec<CMatrix>>,
    cfg: &OptimizerConfig,
) -> Result<(Ascent, Vec<f64>)> {
    let runs: Vec<Result<Ascent>> = starts.into_par_iter().map(|s| ascend(obj, s, cfg)).collect();
    let runs: Vec<Ascent> = runs.into_iter().collect::<Result<_>>()?;
    let values: Vec<f64> = runs.iter().map(|r| r.value).collect();
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    Ok((runs.into_iter().nth(best).expect("at least one restart"), values))
}

/// `max(0, I^target(ρ))`: a lower bound on distillable entanglement by hashing.
pub fn hashing_lower_bound<S: AsRef<str>>(rho: &LabeledOperator, target: &[S]) -> Result<f64> {
    Ok(coherent_information(rho, target)?.max(0.0))
}
