//! LOCC operations on processes.
//!
//! A protocol is a DAG of local nodes, each a trace-preserving comb on one
//! side, connected by quantum wires within a side and by classical wires
//! (complete dephasing) across sides. Running a protocol link-multiplies every
//! node into the process; the systems left open become the slots of two new
//! parties, one per side.

use std::collections::{HashMap, HashSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::choi::{channels, QuantumMap, Tooth};
use crate::error::{Error, Result};
use crate::measures::coherent_information;
use crate::optimizer::{hashing_lower_bound, lo_optimized_ci_with, LoFamily, OptimizerConfig};
use crate::process::{
    merge_parties, reduce_to_state, reduced_party_labels, validate, Party, ProcessOperator,
};
use crate::random::{random_kraus, Stream};
use crate::tensor::{CMatrix, LabeledOperator, SystemId, C64};

pub const MAX_ROUNDS: usize = 4;
const NODE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    fn other(self) -> Self {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    None,
    /// A to B.
    Forward,
    /// B to A.
    Backward,
    TwoWay,
}

impl Direction {
    pub fn allows(self, from: Side, to: Side) -> bool {
        match (self, from, to) {
            (_, f, t) if f == t => true,
            (Direction::TwoWay, _, _) => true,
            (Direction::Forward, Side::A, Side::B) => true,
            (Direction::Backward, Side::B, Side::A) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoccSetting {
    pub direction: Direction,
    pub rounds: usize,
    pub classical_dim: usize,
}

impl LoccSetting {
    pub fn new(direction: Direction, rounds: usize, classical_dim: usize) -> Result<Self> {
        let s = Self {
            direction,
            rounds,
            classical_dim,
        };
        s.check()?;
        Ok(s)
    }

    /// Local operations only.
    pub fn local() -> Self {
        Self {
            direction: Direction::None,
            rounds: 0,
            classical_dim: 2,
        }
    }

    pub fn check(&self) -> Result<()> {
        if (self.rounds == 0) != (self.direction == Direction::None) {
            return Err(Error::Protocol(
                "zero rounds go with no communication, and only with it".into(),
            ));
        }
        if self.rounds > MAX_ROUNDS {
            return Err(Error::ParameterOutOfRange {
                name: "rounds",
                value: self.rounds as f64,
            });
        }
        if self.classical_dim < 2 {
            return Err(Error::ParameterOutOfRange {
                name: "classical_dim",
                value: self.classical_dim as f64,
            });
        }
        Ok(())
    }
}

/// Name of a side's party in the output and the input parties it absorbs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideSpec {
    pub name: String,
    pub parties: Vec<String>,
}

impl SideSpec {
    pub fn new<S: AsRef<str>>(name: &str, parties: &[S]) -> Self {
        Self {
            name: name.to_string(),
            parties: parties.iter().map(|p| p.as_ref().to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolNode {
    pub name: String,
    pub side: Side,
    pub map: QuantumMap,
}

/// Classical message: `label` is an output of `from` and an input of `to`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalWire {
    pub label: String,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoccProtocol {
    pub setting: LoccSetting,
    pub side_a: SideSpec,
    pub side_b: SideSpec,
    #[serde(default)]
    pub nodes: Vec<ProtocolNode>,
    #[serde(default)]
    pub wires: Vec<ClassicalWire>,
}

impl LoccProtocol {
    pub fn empty(side_a: SideSpec, side_b: SideSpec) -> Self {
        Self {
            setting: LoccSetting::local(),
            side_a,
            side_b,
            nodes: Vec::new(),
            wires: Vec::new(),
        }
    }

    fn spec(&self, side: Side) -> &SideSpec {
        match side {
            Side::A => &self.side_a,
            Side::B => &self.side_b,
        }
    }

    fn node(&self, name: &str) -> Result<(usize, &ProtocolNode)> {
        self.nodes
            .iter()
            .enumerate()
            .find(|(_, n)| n.name == name)
            .ok_or_else(|| Error::Protocol(format!("unknown node `{name}`")))
    }
}

/// Who produces and consumes each label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum End {
    Process,
    Node(usize),
}

struct Wiring {
    order: Vec<usize>,
    rounds: usize,
}

fn analyse(w: &ProcessOperator, p: &LoccProtocol, party_side: &HashMap<String, Side>) -> Result<Wiring> {
    let mut producer: HashMap<String, (End, usize, Side)> = HashMap::new();
    let mut consumer: HashMap<String, (End, usize, Side)> = HashMap::new();
    let put = |map: &mut HashMap<String, (End, usize, Side)>, l: &str, v: (End, usize, Side), what: &str| {
        if map.insert(l.to_string(), v).is_some() {
            return Err(Error::Protocol(format!("`{l}` has two {what}s")));
        }
        Ok(())
    };
    for party in w.parties() {
        let side = party_side[&party.name];
        for l in party.inputs() {
            let d = w.op().system(&l).map(|s| s.dim).unwrap_or(1);
            put(&mut producer, &l, (End::Process, d, side), "producer")?;
        }
        for l in party.outputs() {
            let d = w.op().system(&l).map(|s| s.dim).unwrap_or(1);
            put(&mut consumer, &l, (End::Process, d, side), "consumer")?;
        }
    }
    let mut names = HashSet::new();
    for (i, n) in p.nodes.iter().enumerate() {
        if !names.insert(n.name.clone()) {
            return Err(Error::Protocol(format!("duplicate node `{}`", n.name)));
        }
        let dev = n.map.comb_causality_deviation()?;
        if dev > NODE_TOL {
            return Err(Error::Protocol(format!(
                "node `{}` is not a trace-preserving comb (deviation {dev:.2e})",
                n.name
            )));
        }
        for s in n.map.outputs() {
            put(&mut producer, &s.label, (End::Node(i), s.dim, n.side), "producer")?;
        }
        for s in n.map.inputs() {
            put(&mut consumer, &s.label, (End::Node(i), s.dim, n.side), "consumer")?;
        }
    }
    let wired: HashMap<&str, &ClassicalWire> = p.wires.iter().map(|c| (c.label.as_str(), c)).collect();
    for c in &p.wires {
        let (fi, from) = p.node(&c.from)?;
        let (ti, to) = p.node(&c.to)?;
        if producer.get(&c.label).map(|v| v.0) != Some(End::Node(fi))
            || consumer.get(&c.label).map(|v| v.0) != Some(End::Node(ti))
        {
            return Err(Error::Protocol(format!(
                "wire `{}` does not run from `{}` to `{}`",
                c.label, c.from, c.to
            )));
        }
        if from.side == to.side {
            return Err(Error::Protocol(format!("wire `{}` stays on one side", c.label)));
        }
        if !p.setting.direction.allows(from.side, to.side) {
            return Err(Error::Protocol(format!(
                "wire `{}` goes {:?} → {:?}, not permitted by {:?}",
                c.label, from.side, to.side, p.setting.direction
            )));
        }
        let d = producer[&c.label].1;
        if d > p.setting.classical_dim {
            return Err(Error::Protocol(format!(
                "wire `{}` carries dimension {d} > {}",
                c.label, p.setting.classical_dim
            )));
        }
    }
    let n = p.nodes.len();
    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut indeg = vec![0; n];
    for (l, &(pe, pd, ps)) in &producer {
        let Some(&(ce, cd, cs)) = consumer.get(l) else { continue };
        if pd != cd {
            return Err(Error::DimensionMismatch {
                label: l.clone(),
                expected: pd,
                found: cd,
            });
        }
        let is_wire = wired.contains_key(l.as_str());
        if ps != cs && !is_wire {
            return Err(Error::Protocol(format!(
                "`{l}` crosses between sides without a classical wire"
            )));
        }
        if let (End::Node(a), End::Node(b)) = (pe, ce) {
            edges[a].push((b, usize::from(is_wire)));
            indeg[b] += 1;
        }
    }
    for e in &mut edges {
        e.sort();
    }
    // Kahn's algorithm, lowest index first for a stable order
    let mut ready: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    let mut depth = vec![0usize; n];
    while let Some(i) = ready.pop_front() {
        order.push(i);
        for &(j, hop) in &edges[i] {
            depth[j] = depth[j].max(depth[i] + hop);
            indeg[j] -= 1;
            if indeg[j] == 0 {
                ready.push_back(j);
            }
        }
    }
    if order.len() != n {
        return Err(Error::Protocol("cyclic wiring".into()));
    }
    let rounds = depth.into_iter().max().unwrap_or(0);
    if rounds > p.setting.rounds {
        return Err(Error::Protocol(format!(
            "protocol needs {rounds} communication rounds, setting allows {}",
            p.setting.rounds
        )));
    }
    Ok(Wiring { order, rounds })
}

fn chain_teeth(teeth: &[Tooth], open: &HashSet<String>) -> Vec<Tooth> {
    let keep = |ls: &[String]| -> Vec<String> { ls.iter().filter(|l| open.contains(*l)).cloned().collect() };
    let mut out = Vec::new();
    let mut carry = Vec::new();
    for t in teeth {
        out.push(Tooth {
            inputs: std::mem::take(&mut carry),
            outputs: keep(&t.inputs),
        });
        carry = keep(&t.outputs);
    }
    out.push(Tooth {
        inputs: carry,
        outputs: Vec::new(),
    });
    out
}

/// Communication rounds a protocol uses (longest chain of classical wires).
pub fn rounds_used(w: &ProcessOperator, p: &LoccProtocol) -> Result<usize> {
    let sides = party_sides(w, p)?;
    Ok(analyse(w, p, &sides)?.rounds)
}

fn party_sides(w: &ProcessOperator, p: &LoccProtocol) -> Result<HashMap<String, Side>> {
    let mut out = HashMap::new();
    for (side, spec) in [(Side::A, &p.side_a), (Side::B, &p.side_b)] {
        for name in &spec.parties {
            w.party(name)?;
            if out.insert(name.clone(), side).is_some() {
                return Err(Error::PartyTable(format!("party `{name}` is on both sides")));
            }
        }
    }
    for party in w.parties() {
        if !out.contains_key(&party.name) {
            return Err(Error::PartyTable(format!("party `{}` is on neither side", party.name)));
        }
    }
    Ok(out)
}

/// Apply an LOCC protocol to `w`.
pub fn run_protocol(w: &ProcessOperator, p: &LoccProtocol) -> Result<ProcessOperator> {
    p.setting.check()?;
    let sides = party_sides(w, p)?;
    let wiring = analyse(w, p, &sides)?;
    let wire_of: HashMap<&str, &ClassicalWire> = p.wires.iter().map(|c| (c.label.as_str(), c)).collect();
    let received_over_wire = |node: &ProtocolNode| -> Result<QuantumMap> {
        let map: HashMap<String, String> = node
            .map
            .input_labels()
            .into_iter()
            .filter(|l| wire_of.get(l.as_str()).map(|c| c.to == node.name).unwrap_or(false))
            .map(|l| (l.clone(), format!("{l}.cc")))
            .collect();
        if map.is_empty() {
            Ok(node.map.to_standard())
        } else {
            node.map.to_standard().relabel(&map)
        }
    };
    let mut z = w.op().without_trivial();
    let mut norm = 1.0;
    let produced: HashSet<String> = w
        .parties()
        .iter()
        .flat_map(|q| q.inputs())
        .chain(p.nodes.iter().flat_map(|n| n.map.output_labels()))
        .collect();
    for &i in &wiring.order {
        let node = &p.nodes[i];
        let map = received_over_wire(node)?;
        for s in node.map.inputs() {
            if !produced.contains(&s.label) {
                norm *= s.dim as f64;
            }
        }
        z = z.link(&map.choi().without_trivial())?;
        for s in node.map.outputs() {
            if let Some(c) = wire_of.get(s.label.as_str()) {
                let cc = channels::dephasing(1.0, s.dim, &c.label, &format!("{}.cc", c.label))?;
                z = z.link(&cc.choi().without_trivial())?;
            }
        }
    }
    let z = z.scale(1.0 / norm);
    let open: HashSet<String> = z.labels().iter().map(|l| l.to_string()).collect();
    let mut parties = Vec::new();
    for side in [Side::A, Side::B] {
        let spec = p.spec(side);
        let mut teeth = Vec::new();
        for name in &spec.parties {
            for t in &w.party(name)?.teeth {
                teeth.push(Tooth {
                    inputs: t.inputs.iter().filter(|l| open.contains(*l)).cloned().collect(),
                    outputs: t.outputs.iter().filter(|l| open.contains(*l)).cloned().collect(),
                });
            }
        }
        for &i in &wiring.order {
            let node = &p.nodes[i];
            if node.side == side {
                teeth.extend(chain_teeth(node.map.teeth(), &open));
            }
        }
        teeth.retain(|t| !t.is_empty());
        parties.push(Party::new(spec.name.clone(), teeth));
    }
    // trivial party labels of w were dropped above; they are not carried over
    ProcessOperator::new(z, parties)
}

/// `Σ_i p_i W^A_i ⊗ W^B_i`.
pub fn separable_process(ensemble: &[(f64, ProcessOperator, ProcessOperator)]) -> Result<ProcessOperator> {
    let (_, a0, b0) = ensemble
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty ensemble".into()))?;
    let total: f64 = ensemble.iter().map(|e| e.0).sum();
    if ensemble.iter().any(|e| !(e.0 >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "weights must be non-negative and sum to 1 (sum {total})"
        )));
    }
    let mut acc: Option<LabeledOperator> = None;
    for (wt, a, b) in ensemble {
        for f in [a, b] {
            let r = validate(f);
            if !r.valid {
                return Err(Error::InvalidArgument(format!(
                    "ensemble member is not a valid process (lv residual {:.2e}, min eigenvalue {:.2e})",
                    r.lv_residual, r.min_eigenvalue
                )));
            }
        }
        if a.parties() != a0.parties() || b.parties() != b0.parties() {
            return Err(Error::PartyTable("ensemble members disagree on parties".into()));
        }
        let term = a0.op().aligned(a.op())?.tensor(&b0.op().aligned(b.op())?)?.scale(*wt);
        acc = Some(match acc {
            None => term,
            Some(s) => s.add(&term)?,
        });
    }
    let mut parties = a0.parties().to_vec();
    parties.extend(b0.parties().iter().cloned());
    ProcessOperator::new(acc.unwrap(), parties)
}

/// A party split into consecutive copies in time, adjacent copies glued by
/// local memory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyTimeline {
    pub party: String,
    pub copies: Vec<String>,
}

impl PartyTimeline {
    pub fn copy_name(party: &str, k: usize) -> String {
        format!("{party}_{k}")
    }

    /// Memory carried from copy `k` to copy `k + 1` (1-based).
    pub fn memory_label(&self, k: usize) -> String {
        format!("{}.mem{k}", self.party)
    }
}

/// How adjacent copies pass their memory on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Glue {
    Identity,
    /// Computational-basis measurement: only classical memory survives.
    Measure,
}

/// Memory channel between copies `k` and `k + 1`; its output label has a `'`.
pub fn glue_channel(t: &PartyTimeline, k: usize, dim: usize, glue: Glue) -> Result<QuantumMap> {
    let from = t.memory_label(k);
    let to = format!("{from}'");
    match glue {
        Glue::Identity => channels::identity(dim, &from, &to),
        Glue::Measure => channels::dephasing(1.0, dim, &from, &to),
    }
}

/// Split `party` into `copies` consecutive parties `party_1 … party_n`.
///
/// The operator is unchanged; the party's receive/send events are spread over
/// the copies in order, so coarse-graining recovers the original.
pub fn fine_grain(w: &ProcessOperator, party: &str, copies: usize) -> Result<(ProcessOperator, PartyTimeline)> {
    if copies < 1 {
        return Err(Error::ParameterOutOfRange {
            name: "copies",
            value: copies as f64,
        });
    }
    let p = w.party(party)?;
    if copies > 2 * p.teeth.len() {
        return Err(Error::ParameterOutOfRange {
            name: "copies",
            value: copies as f64,
        });
    }
    let timeline = PartyTimeline {
        party: party.to_string(),
        copies: (1..=copies).map(|k| PartyTimeline::copy_name(party, k)).collect(),
    };
    if copies == 1 {
        let ps = w
            .parties()
            .iter()
            .map(|q| if q.name == party { Party::new(timeline.copies[0].clone(), q.teeth.clone()) } else { q.clone() })
            .collect();
        return Ok((ProcessOperator::new(w.op().clone(), ps)?, timeline));
    }
    // events: receive, send, receive, send, …
    let events: Vec<(bool, Vec<String>)> = p
        .teeth
        .iter()
        .flat_map(|t| [(true, t.inputs.clone()), (false, t.outputs.clone())])
        .collect();
    let n = events.len();
    let mut per_copy: Vec<Vec<Tooth>> = vec![Vec::new(); copies];
    for (e, (is_in, labels)) in events.into_iter().enumerate() {
        let k = e * copies / n;
        let teeth = &mut per_copy[k];
        if is_in || teeth.last().map(|t: &Tooth| !t.outputs.is_empty()).unwrap_or(true) {
            teeth.push(Tooth::default());
        }
        let t = teeth.last_mut().unwrap();
        if is_in {
            t.inputs = labels;
        } else {
            t.outputs = labels;
        }
    }
    let mut ps = Vec::new();
    for q in w.parties() {
        if q.name == party {
            for (name, teeth) in timeline.copies.iter().zip(&per_copy) {
                ps.push(Party::new(name.clone(), teeth.iter().filter(|t| !t.is_empty()).cloned().collect()));
            }
        } else {
            ps.push(q.clone());
        }
    }
    Ok((ProcessOperator::new(w.op().clone(), ps)?, timeline))
}

/// Merge a timeline's copies back into one party.
pub fn coarse_grain(w: &ProcessOperator, t: &PartyTimeline) -> Result<ProcessOperator> {
    let merged = merge_parties(w, &[(t.party.as_str(), t.copies.as_slice())])?;
    let ps = merged
        .parties()
        .iter()
        .map(|q| {
            if q.name != t.party {
                return q.clone();
            }
            // rejoin a receive-only tooth with a following send-only tooth
            let mut teeth: Vec<Tooth> = Vec::new();
            for tooth in &q.teeth {
                match teeth.last_mut() {
                    Some(prev) if prev.outputs.is_empty() && tooth.inputs.is_empty() => {
                        prev.outputs = tooth.outputs.clone();
                    }
                    _ => teeth.push(tooth.clone()),
                }
            }
            Party::new(q.name.clone(), teeth)
        })
        .collect();
    ProcessOperator::new(merged.op().clone(), ps)
}

/// Measures the probe can track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeMeasure {
    /// Coherent information of the target's systems, probed with channels on
    /// the target alone; monotone exactly.
    StateCoherentInformation { target: String },
    /// Hashing bound of the state obtained by feeding maximally entangled
    /// halves into all outputs.
    HashingAfterReduction { target: String },
    /// Local-operation lower bound with a fixed family.
    LoOptimized {
        target: String,
        family: LoFamily,
        config: OptimizerConfig,
    },
}

impl ProbeMeasure {
    fn target(&self) -> &str {
        match self {
            ProbeMeasure::StateCoherentInformation { target }
            | ProbeMeasure::HashingAfterReduction { target }
            | ProbeMeasure::LoOptimized { target, .. } => target,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, ProbeMeasure::StateCoherentInformation { .. })
    }

    /// Evaluate on `w` with `party` as the target.
    pub fn evaluate(&self, w: &ProcessOperator, party: &str) -> Result<f64> {
        match self {
            ProbeMeasure::StateCoherentInformation { .. } => {
                let rho = reduce_to_state(w);
                coherent_information(&rho, &reduced_party_labels(w, party)?)
            }
            ProbeMeasure::HashingAfterReduction { .. } => {
                let rho = reduce_to_state(w);
                hashing_lower_bound(&rho, &reduced_party_labels(w, party)?)
            }
            ProbeMeasure::LoOptimized { family, config, .. } => {
                Ok(lo_optimized_ci_with(w, party, family, config, None)?.value_bits)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSample {
    pub index: usize,
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub samples: usize,
    pub exact: bool,
    pub slack: f64,
    pub before: f64,
    pub max_increase: f64,
    /// Samples whose increase exceeds the slack (audit list for heuristic measures).
    pub flagged: Vec<ProbeSample>,
    /// For the exact measure: no increase beyond 1e-8. Always true otherwise.
    pub passed: bool,
}

fn random_map(rng: &mut Stream, inputs: Vec<SystemId>, outputs: Vec<SystemId>) -> Result<QuantumMap> {
    let d_in = inputs.iter().map(|s| s.dim).product();
    let d_out = outputs.iter().map(|s| s.dim).product();
    channels::from_kraus(random_kraus(rng, d_in, d_out, 2)?, inputs, outputs)
}

fn sys(w: &ProcessOperator, labels: &[String]) -> Vec<SystemId> {
    labels.iter().map(|l| w.op().system(l).unwrap().clone()).collect()
}

/// A random channel on the target's received systems; everything else untouched.
pub fn sample_target_channel(w: &ProcessOperator, target: &str, other: &str, seed: u64, index: u64) -> Result<LoccProtocol> {
    let mut rng = Stream::derive(seed, index);
    let t = w.party(target)?;
    let ins = w.nontrivial(&t.inputs());
    let outs: Vec<SystemId> = sys(w, &ins)
        .into_iter()
        .map(|s| SystemId::new(format!("{}'", s.label), s.dim))
        .collect::<Result<_>>()?;
    let mut p = LoccProtocol::empty(SideSpec::new(other, &[other]), SideSpec::new(target, &[target]));
    if !ins.is_empty() {
        p.nodes.push(ProtocolNode {
            name: format!("{target}.post"),
            side: Side::B,
            map: random_map(&mut rng, sys(w, &ins), outs)?,
        });
    }
    Ok(p)
}

/// A random protocol within `setting`: round-0 nodes act on the process and
/// keep a qubit of memory; later rounds exchange classical messages.
pub fn sample_protocol(
    w: &ProcessOperator,
    side_a: &SideSpec,
    side_b: &SideSpec,
    setting: &LoccSetting,
    seed: u64,
    index: u64,
) -> Result<LoccProtocol> {
    setting.check()?;
    let mut rng = Stream::derive(seed, index);
    let mut p = LoccProtocol {
        setting: *setting,
        side_a: side_a.clone(),
        side_b: side_b.clone(),
        nodes: Vec::new(),
        wires: Vec::new(),
    };
    let cd = setting.classical_dim;
    let sends = |from: Side, round: usize| round < setting.rounds && setting.direction.allows(from, from.other());
    // memory held by each side after the latest round
    let mut memory: HashMap<Side, Vec<SystemId>> = HashMap::new();
    let mut inbox: HashMap<Side, Vec<(String, String)>> = HashMap::new();
    for side in [Side::A, Side::B] {
        let spec = if side == Side::A { side_a } else { side_b };
        for name in &spec.parties {
            let party = w.party(name)?;
            if party.is_extended() {
                return Err(Error::Protocol(format!(
                    "random protocols need one-tooth parties; `{name}` has {}",
                    party.teeth.len()
                )));
            }
            let node = format!("{name}.0");
            let keep = SystemId::new(format!("{name}.m0"), 2)?;
            let mut outs = sys(w, &w.nontrivial(&party.outputs()));
            outs.push(keep.clone());
            if sends(side, 0) {
                let msg = format!("{name}.c0");
                outs.push(SystemId::new(msg.clone(), cd)?);
                inbox.entry(side.other()).or_default().push((msg, node.clone()));
            }
            let map = random_map(&mut rng, sys(w, &w.nontrivial(&party.inputs())), outs)?;
            p.nodes.push(ProtocolNode { name: node, side, map });
            memory.entry(side).or_default().push(keep);
        }
    }
    for round in 1..=setting.rounds {
        let mut next_inbox: HashMap<Side, Vec<(String, String)>> = HashMap::new();
        for side in [Side::A, Side::B] {
            let spec = if side == Side::A { side_a } else { side_b };
            let msgs = inbox.remove(&side).unwrap_or_default();
            if msgs.is_empty() && !sends(side, round) {
                continue;
            }
            let node = format!("{}.{round}", spec.name);
            let mut ins = memory.remove(&side).unwrap_or_default();
            for (label, from) in &msgs {
                ins.push(SystemId::new(label.clone(), cd)?);
                p.wires.push(ClassicalWire {
                    label: label.clone(),
                    from: from.clone(),
                    to: node.clone(),
                });
            }
            let keep = SystemId::new(format!("{}.m{round}", spec.name), 2)?;
            let mut outs = vec![keep.clone()];
            if sends(side, round) {
                let msg = format!("{}.c{round}", spec.name);
                outs.push(SystemId::new(msg.clone(), cd)?);
                next_inbox.entry(side.other()).or_default().push((msg, node.clone()));
            }
            p.nodes.push(ProtocolNode {
                name: node,
                side,
                map: random_map(&mut rng, ins, outs)?,
            });
            memory.insert(side, vec![keep]);
        }
        inbox = next_inbox;
    }
    // messages sent in the last round with nobody left to read them are not generated
    Ok(p)
}

/// Evaluate `measure` before and after random protocols.
///
/// The exact measure is probed with channels on the target side only; the
/// others with random protocols drawn from `setting`.
pub fn monotonicity_probe(
    measure: &ProbeMeasure,
    w: &ProcessOperator,
    setting: &LoccSetting,
    samples: usize,
    seed: u64,
    slack: f64,
) -> Result<ProbeReport> {
    let target = measure.target();
    w.party(target)?;
    let others: Vec<String> = w.parties().iter().filter(|p| p.name != target).map(|p| p.name.clone()).collect();
    if others.len() != 1 {
        return Err(Error::InvalidArgument("monotonicity probes are bipartite".into()));
    }
    let other = &others[0];
    let before = measure.evaluate(w, target)?;
    let runs: Vec<Result<ProbeSample>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let p = if measure.is_exact() {
                sample_target_channel(w, target, other, seed, i as u64)?
            } else {
                sample_protocol(
                    w,
                    &SideSpec::new(other, &[other]),
                    &SideSpec::new(target, &[target]),
                    setting,
                    seed,
                    i as u64,
                )?
            };
            let v = run_protocol(w, &p)?;
            Ok(ProbeSample {
                index: i,
                before,
                after: measure.evaluate(&v, target)?,
            })
        })
        .collect();
    let runs: Vec<ProbeSample> = runs.into_iter().collect::<Result<_>>()?;
    let max_increase = runs.iter().map(|s| s.after - s.before).fold(f64::NEG_INFINITY, f64::max);
    let max_increase = if runs.is_empty() { 0.0 } else { max_increase };
    let flagged: Vec<ProbeSample> = runs.into_iter().filter(|s| s.after - s.before > slack).collect();
    Ok(ProbeReport {
        samples,
        exact: measure.is_exact(),
        slack,
        before,
        max_increase,
        passed: !measure.is_exact() || max_increase <= 1e-8,
        flagged,
    })
}

fn pauli(x: usize, z: usize) -> CMatrix {
    let mut m = CMatrix::identity(2, 2);
    if z == 1 {
        m[(1, 1)] = C64::new(-1.0, 0.0);
    }
    if x == 1 {
        let xm = CMatrix::from_fn(2, 2, |r, c| if r != c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        m = xm * m;
    }
    m
}

/// Qubit teleportation over a shared `|φ₊⟩`.
///
/// Returns the resource process (A receives `ra`, B receives `rb`) and the
/// protocol: A Bell-measures `in` with `ra` and sends two bits; B corrects
/// `rb` and outputs `out`. The result is the identity channel `in → out`.
pub fn teleportation() -> Result<(ProcessOperator, LoccProtocol)> {
    let q = |l: &str| SystemId::new(l, 2);
    let phi = LabeledOperator::phi_plus(q("ra")?, q("rb")?)?;
    let w = ProcessOperator::new(phi, vec![Party::receiver("A", &["ra"]), Party::receiver("B", &["rb"])])?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // outcome m = 2x + z ↔ Bell vector (1 ⊗ XˣZᶻ)|φ₊⟩ on (in, ra)
    let mut bell = Vec::new();
    let mut fix = Vec::new();
    for m in 0..4 {
        let (x, z) = (m / 2, m % 2);
        let p = pauli(x, z);
        let mut k = CMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                // component ⟨i j|β⟩ = P[j,i]/√2
                k[(m, i * 2 + j)] = (p[(j, i)] * s).conj();
            }
        }
        bell.push(k);
        // B sees XˣZᶻ|ψ⟩ and undoes it
        let mut c = CMatrix::zeros(2, 8);
        let u = p.adjoint();
        for o in 0..2 {
            for r in 0..2 {
                c[(o, r * 4 + m)] = u[(o, r)];
            }
        }
        fix.push(c);
    }
    let measure = channels::from_kraus(bell, vec![q("in")?, q("ra")?], vec![SystemId::new("m", 4)?])?;
    let correct = channels::from_kraus(fix, vec![q("rb")?, SystemId::new("m", 4)?], vec![q("out")?])?;
    let p = LoccProtocol {
        setting: LoccSetting::new(Direction::Forward, 1, 4)?,
        side_a: SideSpec::new("A", &["A"]),
        side_b: SideSpec::new("B", &["B"]),
        nodes: vec![
            ProtocolNode {
                name: "A.bell".into(),
                side: Side::A,
                map: measure,
            },
            ProtocolNode {
                name: "B.fix".into(),
                side: Side::B,
                map: correct,
            },
        ],
        wires: vec![ClassicalWire {
            label: "m".into(),
            from: "A.bell".into(),
            to: "B.fix".into(),
        }],
    };
    Ok((w, p))
}

/// A measures its input, keeps one copy of the outcome and sends the other;
/// B discards its input and prepares the received value.
pub fn measure_and_send(d: usize, a_input: &str, b_input: &str) -> Result<LoccProtocol> {
    let copy = channels::classical_copy(d, a_input, "A.keep", "msg")?;
    let kraus: Vec<CMatrix> = (0..d * d)
        .map(|idx| {
            let (b, m) = (idx / d, idx % d);
            CMatrix::from_fn(d, d * d, |o, col| {
                if o == m && col == b * d + m {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            })
        })
        .collect();
    let prep = channels::from_kraus(
        kraus,
        vec![SystemId::new(b_input, d)?, SystemId::new("msg", d)?],
        vec![SystemId::new("B.value", d)?],
    )?;
    Ok(LoccProtocol {
        setting: LoccSetting::new(Direction::Forward, 1, d)?,
        side_a: SideSpec::new("A", &["A"]),
        side_b: SideSpec::new("B", &["B"]),
        nodes: vec![
            ProtocolNode {
                name: "A.measure".into(),
                side: Side::A,
                map: copy,
            },
            ProtocolNode {
                name: "B.prepare".into(),
                side: Side::B,
                map: prep,
            },
        ],
        wires: vec![ClassicalWire {
            label: "msg".into(),
            from: "A.measure".into(),
            to: "B.prepare".into(),
        }],
    })
}
