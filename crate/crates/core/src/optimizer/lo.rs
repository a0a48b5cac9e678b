//! Lower bounds on process coherent information under local operations.
//!
//! The declared family: every party with outputs prepares a state on its
//! outputs together with a private ancilla, and every non-target party may
//! apply a channel (given by `kraus_rank` Kraus operators) to what it
//! receives. The target keeps its received systems and its ancilla. States
//! are optimized by projected gradient ascent, channels by finite-difference
//! ascent on a polar-decomposed Stinespring isometry, alternating.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ascend, log2m, Argument, Objective, OptimizationResult, OptimizerConfig};
use crate::choi::{channels, QuantumMap};
use crate::error::{Error, Result};
use crate::measures::{coherent_information, entropy_of_spectrum};
use crate::process::{merge_parties, reduce_to_state, reduced_party_labels, tensor_power, ProcessOperator};
use crate::random::{random_isometry, random_pure, Stream};
use crate::tensor::{hermitian_eigh, hermitian_function, CMatrix, LabeledOperator, SystemId, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoFamily {
    /// Ancilla kept by each preparing party; `None` means the party's output dimension.
    pub ancilla_dim: Option<usize>,
    /// Kraus rank of the channels on non-target received systems; `None` means
    /// the received dimension, `Some(0)` disables them.
    pub kraus_rank: Option<usize>,
    pub alternations: usize,
    pub channel_steps: usize,
}

impl Default for LoFamily {
    fn default() -> Self {
        Self {
            ancilla_dim: None,
            kraus_rank: None,
            alternations: 3,
            channel_steps: 40,
        }
    }
}

impl LoFamily {
    /// Prepared states only, no channels on received systems.
    pub fn states_only() -> Self {
        Self {
            kraus_rank: Some(0),
            ..Self::default()
        }
    }

    pub fn describe(&self) -> String {
        let anc = self.ancilla_dim.map(|r| r.to_string()).unwrap_or_else(|| "d_out".into());
        let kr = match self.kraus_rank {
            Some(0) => "none".to_string(),
            Some(e) => e.to_string(),
            None => "d_in".into(),
        };
        format!("lo(ancilla={anc}, kraus_rank={kr})")
    }

    fn power(&self, k: u32) -> Self {
        Self {
            ancilla_dim: self.ancilla_dim.map(|r| r.pow(k)),
            kraus_rank: self.kraus_rank.map(|e| e.pow(k)),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartyPreparation {
    pub party: String,
    /// Over the party's outputs followed by its ancilla (if any).
    pub state: LabeledOperator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartyChannel {
    pub party: String,
    /// Acts on the party's received systems; outputs carry a `'` suffix.
    pub map: QuantumMap,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LoArgument {
    pub preparations: Vec<PartyPreparation>,
    pub channels: Vec<PartyChannel>,
}

fn ancilla_label(party: &str) -> String {
    format!("{party}.anc")
}

struct Block {
    party: String,
    systems: Vec<SystemId>,
    dim: usize,
}

struct Slot {
    party: String,
    labels: Vec<String>,
    systems: Vec<SystemId>,
    d: usize,
    rank: usize,
}

struct Setup {
    w: LabeledOperator,
    scale: f64,
    blocks: Vec<Block>,
    slots: Vec<Slot>,
    target: Vec<String>,
}

fn systems_of(w: &ProcessOperator, labels: &[String]) -> Vec<SystemId> {
    labels.iter().map(|l| w.op().system(l).unwrap().clone()).collect()
}

impl Setup {
    fn new(w: &ProcessOperator, target: &str, family: &LoFamily, cap: usize) -> Result<Self> {
        w.party(target)?;
        let op = w.op().without_trivial();
        if op.dim() > cap {
            return Err(Error::DimensionCap { found: op.dim(), cap });
        }
        let mut blocks = Vec::new();
        let mut slots = Vec::new();
        let mut target_labels = Vec::new();
        let mut scale = 1.0;
        let mut sigma_dim = 1;
        for p in w.parties() {
            let outs = w.nontrivial(&p.outputs());
            let ins = w.nontrivial(&p.inputs());
            sigma_dim *= w.dim_of(&ins);
            if p.name == target {
                target_labels.extend(ins.iter().cloned());
            }
            if !outs.is_empty() {
                let d_out = w.dim_of(&outs);
                scale *= d_out as f64;
                let r = family.ancilla_dim.unwrap_or(d_out);
                let mut systems = systems_of(w, &outs);
                if r > 1 {
                    systems.push(SystemId::new(ancilla_label(&p.name), r)?);
                    sigma_dim *= r;
                    if p.name == target {
                        target_labels.push(ancilla_label(&p.name));
                    }
                }
                let dim = systems.iter().map(|s| s.dim).product();
                if dim > cap {
                    return Err(Error::DimensionCap { found: dim, cap });
                }
                blocks.push(Block {
                    party: p.name.clone(),
                    systems,
                    dim,
                });
            }
            if p.name != target && !ins.is_empty() {
                let d = w.dim_of(&ins);
                let rank = family.kraus_rank.unwrap_or(d);
                if rank > 0 {
                    slots.push(Slot {
                        party: p.name.clone(),
                        systems: systems_of(w, &ins),
                        labels: ins,
                        d,
                        rank,
                    });
                }
            }
        }
        if sigma_dim > cap {
            return Err(Error::DimensionCap { found: sigma_dim, cap });
        }
        if target_labels.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "target party `{target}` keeps no systems"
            )));
        }
        Ok(Self {
            w: op,
            scale,
            blocks,
            slots,
            target: target_labels,
        })
    }

    fn block_op(&self, i: usize, m: &CMatrix) -> Result<LabeledOperator> {
        LabeledOperator::new(self.blocks[i].systems.clone(), m.clone())
    }

    /// `W` linked with every block state except `skip`.
    fn partial(&self, states: &[CMatrix], skip: Option<usize>) -> Result<LabeledOperator> {
        let mut z = self.w.clone();
        for (i, s) in states.iter().enumerate() {
            if Some(i) != skip {
                z = z.link(&self.block_op(i, s)?)?;
            }
        }
        Ok(z)
    }

    fn sigma(&self, states: &[CMatrix]) -> Result<LabeledOperator> {
        Ok(self.partial(states, None)?.scale(self.scale))
    }

    fn apply_channels(&self, sigma: &LabeledOperator, kraus: &[Vec<CMatrix>]) -> Result<LabeledOperator> {
        let mut out = sigma.clone();
        for (slot, ks) in self.slots.iter().zip(kraus) {
            out = apply_kraus_on(&out, &slot.labels, ks, false)?;
        }
        Ok(out)
    }

    fn ci(&self, sigma: &LabeledOperator) -> Result<f64> {
        let st = entropy_of_spectrum(&hermitian_eigh(sigma.reduce_to(&self.target)?.matrix(), false)?.0)?;
        let s = entropy_of_spectrum(&hermitian_eigh(sigma.matrix(), false)?.0)?;
        Ok(st - s)
    }
}

/// `(A ⊗ 1) M (B ⊗ 1)` where the first factor spans `labels`.
fn apply_kraus_on(op: &LabeledOperator, labels: &[String], ks: &[CMatrix], adjoint: bool) -> Result<LabeledOperator> {
    let original: Vec<String> = op.labels().iter().map(|s| s.to_string()).collect();
    let mut order = labels.to_vec();
    order.extend(original.iter().filter(|l| !labels.contains(l)).cloned());
    let p = op.permute_systems(&order)?;
    let d = op.dim_of(labels)?;
    let rest = p.dim() / d;
    let m = p.matrix();
    let mut acc = CMatrix::zeros(p.dim(), p.dim());
    for k in ks {
        let (a, b) = if adjoint { (k.adjoint(), k.clone()) } else { (k.clone(), k.adjoint()) };
        for i in 0..d {
            for kk in 0..d {
                let mut block = CMatrix::zeros(rest, rest);
                for j in 0..d {
                    let aij = a[(i, j)];
                    if aij.norm() == 0.0 {
                        continue;
                    }
                    for l in 0..d {
                        let c = aij * b[(l, kk)];
                        if c.norm() == 0.0 {
                            continue;
                        }
                        block += m.view((j * rest, l * rest), (rest, rest)) * c;
                    }
                }
                let mut target = acc.view_mut((i * rest, kk * rest), (rest, rest));
                target += block;
            }
        }
    }
    p.with_matrix(acc)?.permute_systems(&original)
}

/// Isometry `A (A†A)^{-1/2}` split into Kraus operators.
fn kraus_from_params(params: &CMatrix, d: usize, rank: usize) -> Result<Vec<CMatrix>> {
    let gram = params.adjoint() * params;
    let inv_sqrt = hermitian_function(&gram, |x| 1.0 / x.max(1e-12).sqrt())?;
    let v = params * inv_sqrt;
    Ok((0..rank).map(|e| v.rows(e * d, d).into_owned()).collect())
}

fn params_from_kraus(ks: &[CMatrix], d: usize) -> CMatrix {
    let rank = ks.len();
    CMatrix::from_fn(d * rank, d, |r, c| ks[r / d][(r % d, c)])
}

struct StateObjective<'a> {
    setup: &'a Setup,
    kraus: &'a [Vec<CMatrix>],
}

impl Objective for StateObjective<'_> {
    fn value(&self, x: &[CMatrix]) -> Result<f64> {
        let sigma = self.setup.apply_channels(&self.setup.sigma(x)?, self.kraus)?;
        self.setup.ci(&sigma)
    }

    fn value_and_gradient(&self, x: &[CMatrix]) -> Result<(f64, Vec<CMatrix>)> {
        let s = self.setup;
        let sigma = s.apply_channels(&s.sigma(x)?, self.kraus)?;
        let value = s.ci(&sigma)?;
        // d/dσ [S(σ_T) − S(σ)] = log σ − log σ_T ⊗ 1 (bits)
        let order: Vec<String> = sigma.labels().iter().map(|l| l.to_string()).collect();
        let st = sigma.reduce_to(&s.target)?;
        let rest: Vec<SystemId> = sigma
            .systems()
            .iter()
            .filter(|sys| !s.target.contains(&sys.label))
            .cloned()
            .collect();
        let log_t = st
            .with_matrix(log2m(st.matrix())?)?
            .tensor(&LabeledOperator::identity(rest)?)?
            .permute_systems(&order)?;
        let mut y = sigma.with_matrix(log2m(sigma.matrix())?)?.sub(&log_t)?;
        for (slot, ks) in s.slots.iter().zip(self.kraus).rev() {
            y = apply_kraus_on(&y, &slot.labels, ks, true)?;
        }
        let yt = y.with_matrix(y.matrix().transpose())?;
        let mut grads = Vec::with_capacity(x.len());
        for (i, b) in s.blocks.iter().enumerate() {
            let eff = s.partial(x, Some(i))?;
            let g = eff.link(&yt)?;
            let order: Vec<&str> = b.systems.iter().map(|sys| sys.label.as_str()).collect();
            let g = g.permute_systems(&order)?;
            let m = g.matrix().transpose().scale(s.scale);
            grads.push((&m + m.adjoint()).scale(0.5));
        }
        Ok((value, grads))
    }
}

struct Candidate {
    states: Vec<CMatrix>,
    kraus: Vec<Vec<CMatrix>>,
}

struct Run {
    value: f64,
    cand: Candidate,
    iterations: usize,
    converged: bool,
}

fn channel_phase(setup: &Setup, states: &[CMatrix], kraus: &mut [Vec<CMatrix>], steps: usize, tol: f64) -> Result<(f64, usize, bool)> {
    let pre = setup.sigma(states)?;
    let mut params: Vec<CMatrix> = setup
        .slots
        .iter()
        .zip(kraus.iter())
        .map(|(s, ks)| params_from_kraus(ks, s.d))
        .collect();
    let eval = |ps: &[CMatrix]| -> Result<f64> {
        let ks: Vec<Vec<CMatrix>> = setup
            .slots
            .iter()
            .zip(ps)
            .map(|(s, p)| kraus_from_params(p, s.d, s.rank))
            .collect::<Result<_>>()?;
        setup.ci(&setup.apply_channels(&pre, &ks)?)
    };
    let mut f = eval(&params)?;
    let h = 1e-6;
    let mut t = 0.1;
    let mut used = 0;
    let mut converged = false;
    for _ in 0..steps {
        used += 1;
        let mut grad: Vec<CMatrix> = params.iter().map(|p| CMatrix::zeros(p.nrows(), p.ncols())).collect();
        for si in 0..params.len() {
            for idx in 0..params[si].len() {
                for (part, unit) in [(0, C64::new(h, 0.0)), (1, C64::new(0.0, h))] {
                    let mut plus = params.clone();
                    plus[si][idx] += unit;
                    let mut minus = params.clone();
                    minus[si][idx] -= unit;
                    let df = (eval(&plus)? - eval(&minus)?) / (2.0 * h);
                    if part == 0 {
                        grad[si][idx].re = df;
                    } else {
                        grad[si][idx].im = df;
                    }
                }
            }
        }
        let norm: f64 = grad.iter().map(|g| g.norm_squared()).sum::<f64>().sqrt();
        if norm < tol {
            converged = true;
            break;
        }
        let mut moved = false;
        while t > 1e-10 {
            let trial: Vec<CMatrix> = params.iter().zip(&grad).map(|(p, g)| p + g.scale(t)).collect();
            let ft = eval(&trial)?;
            if ft > f {
                params = trial;
                f = ft;
                t *= 2.0;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            converged = true;
            break;
        }
    }
    for ((slot, p), ks) in setup.slots.iter().zip(&params).zip(kraus.iter_mut()) {
        *ks = kraus_from_params(p, slot.d, slot.rank)?;
    }
    Ok((f, used, converged))
}

fn run_from(setup: &Setup, family: &LoFamily, cfg: &OptimizerConfig, mut cand: Candidate) -> Result<Run> {
    let eval = |c: &Candidate| -> Result<f64> { setup.ci(&setup.apply_channels(&setup.sigma(&c.states)?, &c.kraus)?) };
    let mut value = eval(&cand)?;
    let mut iterations = 0;
    let mut converged = true;
    for _ in 0..family.alternations.max(1) {
        let before = value;
        if !setup.blocks.is_empty() {
            let obj = StateObjective {
                setup,
                kraus: &cand.kraus,
            };
            let a = ascend(&obj, cand.states.clone(), cfg)?;
            iterations += a.iterations;
            converged = a.converged;
            if a.value >= value {
                cand.states = a.point;
                value = a.value;
            }
        }
        if !setup.slots.is_empty() {
            let mut ks = cand.kraus.clone();
            let (f, used, ok) = channel_phase(
                setup,
                &cand.states,
                &mut ks,
                family.channel_steps,
                cfg.gradient_tolerance.max(1e-6),
            )?;
            iterations += used;
            if f >= value {
                cand.kraus = ks;
                value = f;
            }
            converged = converged && ok;
        }
        if value - before < 1e-10 {
            break;
        }
    }
    // report the objective re-evaluated at the returned point
    let value = eval(&cand)?;
    Ok(Run {
        value,
        cand,
        iterations,
        converged,
    })
}

fn entangled_start(b: &Block) -> CMatrix {
    let n_out: usize = b.systems.iter().filter(|s| !s.label.ends_with(".anc")).map(|s| s.dim).product();
    let r = b.dim / n_out;
    let m = n_out.min(r);
    if r == 1 {
        return CMatrix::identity(b.dim, b.dim).scale(1.0 / b.dim as f64);
    }
    let mut ket = vec![C64::new(0.0, 0.0); b.dim];
    for i in 0..m {
        ket[i * r + i] = C64::new(1.0 / (m as f64).sqrt(), 0.0);
    }
    outer(&ket)
}

fn outer(ket: &[C64]) -> CMatrix {
    let n = ket.len();
    CMatrix::from_fn(n, n, |i, j| ket[i] * ket[j].conj())
}

fn identity_kraus(d: usize, rank: usize) -> Vec<CMatrix> {
    let mut ks = vec![CMatrix::identity(d, d)];
    ks.extend((1..rank).map(|_| CMatrix::zeros(d, d)));
    ks
}

fn random_candidate(setup: &Setup, seed: u64, restart: usize) -> Result<Candidate> {
    let mut rng = Stream::derive(seed, restart as u64);
    let states = setup.blocks.iter().map(|b| outer(&random_pure(&mut rng, b.dim))).collect();
    let kraus = setup
        .slots
        .iter()
        .map(|s| {
            let v = random_isometry(&mut rng, s.d, s.d * s.rank)?;
            Ok((0..s.rank).map(|e| v.rows(e * s.d, s.d).into_owned()).collect())
        })
        .collect::<Result<_>>()?;
    Ok(Candidate { states, kraus })
}

/// Embed a (possibly smaller-family) argument into this setup.
fn warm_candidate(setup: &Setup, arg: &LoArgument) -> Result<Candidate> {
    let mut states = Vec::new();
    for b in &setup.blocks {
        let prep = arg
            .preparations
            .iter()
            .find(|p| p.party == b.party)
            .ok_or_else(|| Error::InvalidArgument(format!("warm start lacks a state for `{}`", b.party)))?;
        states.push(embed_state(&prep.state, b)?);
    }
    let mut kraus = Vec::new();
    for s in &setup.slots {
        match arg.channels.iter().find(|c| c.party == s.party) {
            Some(c) => {
                let mut ks = c.map.kraus()?.operators;
                if ks.len() > s.rank || ks[0].shape() != (s.d, s.d) {
                    return Err(Error::InvalidArgument(format!(
                        "warm-start channel for `{}` does not fit the family",
                        s.party
                    )));
                }
                ks.resize(s.rank, CMatrix::zeros(s.d, s.d));
                kraus.push(ks);
            }
            None => kraus.push(identity_kraus(s.d, s.rank)),
        }
    }
    Ok(Candidate { states, kraus })
}

fn embed_state(state: &LabeledOperator, b: &Block) -> Result<CMatrix> {
    let anc = ancilla_label(&b.party);
    let outs: Vec<&SystemId> = b.systems.iter().filter(|s| s.label != anc).collect();
    let r_new = b.systems.iter().find(|s| s.label == anc).map(|s| s.dim).unwrap_or(1);
    let r_old = state.system(&anc).map(|s| s.dim).unwrap_or(1);
    if r_old > r_new {
        return Err(Error::InvalidArgument("warm-start ancilla larger than the family's".into()));
    }
    let mut order: Vec<&str> = outs.iter().map(|s| s.label.as_str()).collect();
    if r_old > 1 {
        order.push(&anc);
    }
    let s = state.permute_systems(&order)?;
    let n_out: usize = outs.iter().map(|s| s.dim).product();
    if s.dim() != n_out * r_old {
        return Err(Error::InvalidArgument("warm-start state has the wrong shape".into()));
    }
    let m = s.matrix();
    Ok(CMatrix::from_fn(b.dim, b.dim, |i, j| {
        let (oi, ai) = (i / r_new, i % r_new);
        let (oj, aj) = (j / r_new, j % r_new);
        if ai < r_old && aj < r_old {
            m[(oi * r_old + ai, oj * r_old + aj)]
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

fn to_argument(setup: &Setup, cand: &Candidate) -> Result<LoArgument> {
    let preparations = setup
        .blocks
        .iter()
        .zip(&cand.states)
        .map(|(b, s)| {
            Ok(PartyPreparation {
                party: b.party.clone(),
                state: LabeledOperator::new(b.systems.clone(), s.clone())?,
            })
        })
        .collect::<Result<_>>()?;
    let channels = setup
        .slots
        .iter()
        .zip(&cand.kraus)
        .map(|(s, ks)| {
            let outs: Vec<SystemId> = s
                .systems
                .iter()
                .map(|sys| SystemId::new(format!("{}'", sys.label), sys.dim))
                .collect::<Result<_>>()?;
            Ok(PartyChannel {
                party: s.party.clone(),
                map: channels::from_kraus(ks.clone(), s.systems.clone(), outs)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(LoArgument { preparations, channels })
}

/// Coherent information of the target after applying `arg` to `w`.
pub fn evaluate_lo(w: &ProcessOperator, target: &str, arg: &LoArgument) -> Result<f64> {
    let op = w.op().without_trivial();
    let mut z = op.clone();
    let mut scale = 1.0;
    for p in &arg.preparations {
        let party = w.party(&p.party)?;
        scale *= w.dim_of(&w.nontrivial(&party.outputs())) as f64;
        z = z.link(&p.state)?;
    }
    let mut sigma = z.scale(scale);
    for c in &arg.channels {
        sigma = apply_kraus_on(&sigma, &c.map.input_labels(), &c.map.kraus()?.operators, false)?;
    }
    let tp = w.party(target)?;
    let mut t = w.nontrivial(&tp.inputs());
    let anc = ancilla_label(target);
    if sigma.contains(&anc) {
        t.push(anc);
    }
    coherent_information(&sigma, &t)
}

pub fn lo_optimized_ci(w: &ProcessOperator, target: &str, cfg: &OptimizerConfig) -> Result<OptimizationResult> {
    lo_optimized_ci_with(w, target, &LoFamily::default(), cfg, None)
}

/// Optimize over `family`, optionally warm-started from an argument of a
/// smaller family (the result is then never below the warm start's value).
pub fn lo_optimized_ci_with(
    w: &ProcessOperator,
    target: &str,
    family: &LoFamily,
    cfg: &OptimizerConfig,
    warm: Option<&LoArgument>,
) -> Result<OptimizationResult> {
    cfg.check()?;
    let setup = Setup::new(w, target, family, cfg.dimension_cap)?;
    let mut cands = Vec::new();
    if let Some(arg) = warm {
        cands.push(warm_candidate(&setup, arg)?);
    }
    for r in 0..cfg.restarts {
        if r == 0 {
            cands.push(Candidate {
                states: setup.blocks.iter().map(entangled_start).collect(),
                kraus: setup.slots.iter().map(|s| identity_kraus(s.d, s.rank)).collect(),
            });
        } else {
            cands.push(random_candidate(&setup, cfg.seed, r)?);
        }
    }
    let runs: Vec<Result<Run>> = cands.into_par_iter().map(|c| run_from(&setup, family, cfg, c)).collect();
    let runs: Vec<Run> = runs.into_iter().collect::<Result<_>>()?;
    let restart_values: Vec<f64> = runs.iter().map(|r| r.value).collect();
    let mut best = 0;
    for (i, v) in restart_values.iter().enumerate() {
        if *v > restart_values[best] {
            best = i;
        }
    }
    let run = &runs[best];
    Ok(OptimizationResult {
        value_bits: run.value,
        argument: Argument::LocalOperations(to_argument(&setup, &run.cand)?),
        iterations_used: run.iterations,
        converged: run.converged,
        restart_values,
        family: family.describe(),
    })
}

/// Optimize over increasing families, warm-starting each from the previous optimum.
pub fn lo_family_sweep(
    w: &ProcessOperator,
    target: &str,
    families: &[LoFamily],
    cfg: &OptimizerConfig,
) -> Result<Vec<OptimizationResult>> {
    let mut out: Vec<OptimizationResult> = Vec::new();
    for f in families {
        let warm = out.last().and_then(|r| match &r.argument {
            Argument::LocalOperations(a) => Some(a.clone()),
            _ => None,
        });
        out.push(lo_optimized_ci_with(w, target, f, cfg, warm.as_ref())?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizedEstimate {
    pub k: usize,
    pub per_copy_bits: f64,
    pub single_copy_bits: f64,
    pub result: OptimizationResult,
}

/// `k` copies with each party's copies merged in order (`A#1, …, A#k` → `A`).
fn merged_power(w: &ProcessOperator, k: usize) -> Result<ProcessOperator> {
    if k == 1 {
        return Ok(w.clone());
    }
    let wk = tensor_power(w, k)?;
    let members: Vec<(String, Vec<String>)> = w
        .parties()
        .iter()
        .map(|p| (p.name.clone(), (1..=k).map(|i| format!("{}#{i}", p.name)).collect()))
        .collect();
    let groups: Vec<(&str, &[String])> = members.iter().map(|(n, m)| (n.as_str(), m.as_slice())).collect();
    merge_parties(&wk, &groups)
}

/// The single-copy argument repeated on every copy of the merged object.
fn tensor_argument(arg: &LoArgument, k: usize) -> Result<LoArgument> {
    let mut preparations = Vec::new();
    for p in &arg.preparations {
        let anc = ancilla_label(&p.party);
        let mut acc = LabeledOperator::scalar(C64::new(1.0, 0.0));
        let mut outs = Vec::new();
        let mut ancs = Vec::new();
        for i in 1..=k {
            let map: HashMap<String, String> =
                p.state.labels().iter().map(|l| (l.to_string(), format!("{l}#{i}"))).collect();
            let copy = p.state.relabel(&map)?;
            for s in copy.systems() {
                if s.label == format!("{anc}#{i}") {
                    ancs.push(s.clone());
                } else {
                    outs.push(s.label.clone());
                }
            }
            acc = acc.tensor(&copy)?;
        }
        let mut order = outs.clone();
        order.extend(ancs.iter().map(|s| s.label.clone()));
        let acc = acc.permute_systems(&order)?;
        let mut systems: Vec<SystemId> = acc.systems()[..outs.len()].to_vec();
        if !ancs.is_empty() {
            systems.push(SystemId::new(anc.clone(), ancs.iter().map(|s| s.dim).product())?);
        }
        preparations.push(PartyPreparation {
            party: p.party.clone(),
            state: LabeledOperator::new(systems, acc.into_matrix())?,
        });
    }
    let mut chans = Vec::new();
    for c in &arg.channels {
        let ks = c.map.kraus()?.operators;
        let mut acc = vec![CMatrix::identity(1, 1)];
        for _ in 0..k {
            acc = acc.iter().flat_map(|a| ks.iter().map(move |k| a.kronecker(k))).collect();
        }
        let suffixed = |systems: &[SystemId]| -> Result<Vec<SystemId>> {
            let mut out = Vec::new();
            for i in 1..=k {
                for s in systems {
                    out.push(SystemId::new(format!("{}#{i}", s.label), s.dim)?);
                }
            }
            Ok(out)
        };
        chans.push(PartyChannel {
            party: c.party.clone(),
            map: channels::from_kraus(acc, suffixed(c.map.inputs())?, suffixed(c.map.outputs())?)?,
        });
    }
    Ok(LoArgument {
        preparations,
        channels: chans,
    })
}

/// `(1/k)` times the local-operation bound on `k` merged copies, warm-started
/// from the single-copy optimum repeated on every copy.
pub fn regularized_ci_estimate(
    w: &ProcessOperator,
    target: &str,
    k: usize,
    family: &LoFamily,
    cfg: &OptimizerConfig,
) -> Result<RegularizedEstimate> {
    if !(1..=3).contains(&k) {
        return Err(Error::ParameterOutOfRange {
            name: "k",
            value: k as f64,
        });
    }
    let single = lo_optimized_ci_with(w, target, family, cfg, None)?;
    if k == 1 {
        return Ok(RegularizedEstimate {
            k,
            per_copy_bits: single.value_bits,
            single_copy_bits: single.value_bits,
            result: single,
        });
    }
    let wk = merged_power(w, k)?;
    let warm = match &single.argument {
        Argument::LocalOperations(a) => tensor_argument(a, k)?,
        Argument::InputState { .. } => unreachable!("local-operation optimizer returns local operations"),
    };
    let result = lo_optimized_ci_with(&wk, target, &family.power(k as u32), cfg, Some(&warm))?;
    Ok(RegularizedEstimate {
        k,
        per_copy_bits: result.value_bits / k as f64,
        single_copy_bits: single.value_bits,
        result,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationBound {
    pub k: usize,
    pub rate_bits_per_copy: f64,
    pub lo_bits_per_copy: f64,
    pub reduced_state_bits_per_copy: f64,
}

/// Achievable entanglement-generation rate per copy: the hashing bound of the
/// best state reachable by the local-operation family (or by feeding halves of
/// maximally entangled states into all outputs) on `k` copies.
pub fn entanglement_generation_bound(
    w: &ProcessOperator,
    target: &str,
    k: usize,
    family: &LoFamily,
    cfg: &OptimizerConfig,
) -> Result<GenerationBound> {
    let est = regularized_ci_estimate(w, target, k, family, cfg)?;
    let wk = merged_power(w, k)?;
    let rho = reduce_to_state(&wk);
    let t = reduced_party_labels(&wk, target)?;
    let reduced = if t.is_empty() {
        0.0
    } else {
        super::hashing_lower_bound(&rho, &t)? / k as f64
    };
    let lo = est.per_copy_bits;
    Ok(GenerationBound {
        k,
        rate_bits_per_copy: lo.max(reduced).max(0.0),
        lo_bits_per_copy: lo,
        reduced_state_bits_per_copy: reduced,
    })
}

#[cfg(test)]
mod tests;
