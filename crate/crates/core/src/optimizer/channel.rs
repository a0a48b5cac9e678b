use super::{best_of, log2m, Argument, Objective, OptimizationResult, OptimizerConfig};
use crate::choi::{KrausSet, QuantumMap, TP_TOL};
use crate::error::{Error, Result};
use crate::measures::entropy_of_spectrum;
use crate::random::{random_density, Stream};
use crate::tensor::{hermitian_eigh, CMatrix, LabeledOperator};

struct ChannelCi {
    kraus: KrausSet,
}

fn entropy(m: &CMatrix) -> Result<f64> {
    entropy_of_spectrum(&hermitian_eigh(m, false)?.0)
}

impl ChannelCi {
    fn adjoint(&self, y: &CMatrix) -> CMatrix {
        let d = self.kraus.input_dim();
        self.kraus
            .operators
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, k| acc + k.adjoint() * y * k)
    }

    /// `N_c†(Y) = Σ_{e,e'} Y[e',e] K_{e'}† K_e`.
    fn adjoint_complementary(&self, y: &CMatrix) -> CMatrix {
        let d = self.kraus.input_dim();
        let ks = &self.kraus.operators;
        let mut out = CMatrix::zeros(d, d);
        for (e, ke) in ks.iter().enumerate() {
            for (f, kf) in ks.iter().enumerate() {
                let c = y[(f, e)];
                if c.norm() > 0.0 {
                    out += (kf.adjoint() * ke) * c;
                }
            }
        }
        out
    }
}

impl Objective for ChannelCi {
    fn value(&self, x: &[CMatrix]) -> Result<f64> {
        Ok(entropy(&self.kraus.apply(&x[0]))? - entropy(&self.kraus.apply_complementary(&x[0]))?)
    }

    fn value_and_gradient(&self, x: &[CMatrix]) -> Result<(f64, Vec<CMatrix>)> {
        let out = self.kraus.apply(&x[0]);
        let env = self.kraus.apply_complementary(&x[0]);
        let value = entropy(&out)? - entropy(&env)?;
        // the identity terms of both entropy derivatives cancel for trace-preserving maps
        let g = self.adjoint_complementary(&log2m(&env)?) - self.adjoint(&log2m(&out)?);
        Ok((value, vec![(&g + g.adjoint()).scale(0.5)]))
    }
}

fn checked_kraus(m: &QuantumMap) -> Result<KrausSet> {
    let dev = m.tp_deviation()?;
    if dev > TP_TOL {
        return Err(Error::NotTracePreserving(dev));
    }
    m.to_standard().kraus()
}

/// `S(N(ρ)) − S(N_c(ρ))` for an input density matrix `rho`.
pub fn channel_objective(m: &QuantumMap, rho: &CMatrix) -> Result<f64> {
    ChannelCi { kraus: checked_kraus(m)? }.value(std::slice::from_ref(rho))
}

/// Value and Hermitian ascent direction of the channel objective at `rho`.
pub fn channel_objective_gradient(m: &QuantumMap, rho: &CMatrix) -> Result<(f64, CMatrix)> {
    let (v, mut g) = ChannelCi { kraus: checked_kraus(m)? }.value_and_gradient(std::slice::from_ref(rho))?;
    Ok((v, g.remove(0)))
}

/// Maximize the channel's coherent information over input states.
pub fn channel_coherent_information(m: &QuantumMap, cfg: &OptimizerConfig) -> Result<OptimizationResult> {
    cfg.check()?;
    let obj = ChannelCi { kraus: checked_kraus(m)? };
    let d = obj.kraus.input_dim();
    let env = obj.kraus.operators.len();
    if d * env > cfg.dimension_cap || obj.kraus.output_dim() > cfg.dimension_cap {
        return Err(Error::DimensionCap {
            found: (d * env).max(obj.kraus.output_dim()),
            cap: cfg.dimension_cap,
        });
    }
    let starts: Vec<Vec<CMatrix>> = (0..cfg.restarts)
        .map(|r| {
            if r == 0 {
                // near ω, not on it: ω is stationary for covariant channels (a minimum under full depolarization)
                let pure = random_density(&mut Stream::derive(cfg.seed, 0), d, 1);
                vec![CMatrix::identity(d, d).scale(0.9 / d as f64) + pure.scale(0.1)]
            } else {
                let rank = if r % 2 == 1 { d } else { 1 + r % d };
                vec![random_density(&mut Stream::derive(cfg.seed, r as u64), d, rank)]
            }
        })
        .collect();
    let (best, restart_values) = best_of(&obj, starts, cfg)?;
    let state = LabeledOperator::new(m.inputs().to_vec(), best.point[0].clone())?;
    Ok(OptimizationResult {
        value_bits: best.value,
        argument: Argument::InputState { state },
        iterations_used: best.iterations,
        converged: best.converged,
        restart_values,
        family: "input states".into(),
    })
}
