//! Process operators: party tables, validity, the probability rule and
//! local operations.

pub mod lv;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::choi::{Normalization, QuantumMap, Tooth};
use crate::error::{Error, Result};
use crate::random::{random_hermitian, Stream};
use crate::tensor::{hermitian_eigh, CMatrix, LabeledOperator, OperatorJson, SystemId, C64};

pub use lv::{lv_polynomial, Polynomial};

pub const PSD_TOL: f64 = 1e-9;
pub const TRACE_TOL: f64 = 1e-9;
pub const LV_TOL: f64 = 1e-8;
/// Probes below this count as "no signaling detected".
pub const SIGNALING_TOL: f64 = 1e-9;

/// A local party. Teeth are listed in the party's internal causal order; in
/// each tooth the party receives `inputs` and then sends `outputs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Party {
    pub name: String,
    pub teeth: Vec<Tooth>,
}

impl Party {
    pub fn new(name: impl Into<String>, teeth: Vec<Tooth>) -> Self {
        Self {
            name: name.into(),
            teeth,
        }
    }

    /// One-tooth party receiving `input` and sending `output`.
    pub fn simple(name: impl Into<String>, input: &str, output: &str) -> Self {
        Self::new(name, vec![Tooth::new(&[input], &[output])])
    }

    /// A party that only receives (trivial output).
    pub fn receiver<S: AsRef<str>>(name: impl Into<String>, inputs: &[S]) -> Self {
        Self::new(name, vec![Tooth::new(inputs, &[] as &[S])])
    }

    pub fn inputs(&self) -> Vec<String> {
        self.teeth.iter().flat_map(|t| t.inputs.clone()).collect()
    }

    pub fn outputs(&self) -> Vec<String> {
        self.teeth.iter().flat_map(|t| t.outputs.clone()).collect()
    }

    pub fn labels(&self) -> Vec<String> {
        self.teeth
            .iter()
            .flat_map(|t| t.inputs.iter().chain(&t.outputs).cloned())
            .collect()
    }

    pub fn is_extended(&self) -> bool {
        self.teeth.len() > 1
    }
}

/// A trace-one operator with a party table covering all of its systems.
///
/// Objects produced by local operations with ancillas carry multi-tooth
/// parties; [`ProcessOperator::is_extended`] reports that.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessOperator {
    op: LabeledOperator,
    parties: Vec<Party>,
}

impl ProcessOperator {
    /// Check the party table against the operator. Party labels missing from
    /// the operator are adjoined as dimension-1 systems.
    pub fn new(op: LabeledOperator, parties: Vec<Party>) -> Result<Self> {
        let mut names = HashSet::new();
        let mut seen = HashSet::new();
        for p in &parties {
            if !names.insert(p.name.clone()) {
                return Err(Error::PartyTable(format!("duplicate party `{}`", p.name)));
            }
            for l in p.labels() {
                if !seen.insert(l.clone()) {
                    return Err(Error::PartyTable(format!("system `{l}` belongs to two slots")));
                }
            }
        }
        for s in op.systems() {
            if !seen.contains(&s.label) {
                return Err(Error::PartyTable(format!("system `{}` has no party", s.label)));
            }
        }
        let missing: Vec<String> = seen.into_iter().filter(|l| !op.contains(l)).collect();
        let mut missing = missing;
        missing.sort();
        let op = op.with_trivial(&missing)?;
        Ok(Self { op, parties })
    }

    pub fn op(&self) -> &LabeledOperator {
        &self.op
    }

    pub fn parties(&self) -> &[Party] {
        &self.parties
    }

    pub fn party(&self, name: &str) -> Result<&Party> {
        self.parties
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::PartyTable(format!("unknown party `{name}`")))
    }

    pub fn is_extended(&self) -> bool {
        self.parties.iter().any(Party::is_extended)
    }

    /// Systems of a party with dimension > 1.
    pub fn nontrivial(&self, labels: &[String]) -> Vec<String> {
        labels
            .iter()
            .filter(|l| self.op.system(l).map(|s| s.dim > 1).unwrap_or(false))
            .cloned()
            .collect()
    }

    pub fn dim_of(&self, labels: &[String]) -> usize {
        self.op.dim_of(labels).unwrap_or(1)
    }

    /// Rename systems and parties.
    pub fn relabel(&self, systems: &HashMap<String, String>, parties: &HashMap<String, String>) -> Result<Self> {
        let rn = |l: &String| systems.get(l).cloned().unwrap_or_else(|| l.clone());
        let ps = self
            .parties
            .iter()
            .map(|p| Party {
                name: parties.get(&p.name).cloned().unwrap_or_else(|| p.name.clone()),
                teeth: p
                    .teeth
                    .iter()
                    .map(|t| Tooth {
                        inputs: t.inputs.iter().map(rn).collect(),
                        outputs: t.outputs.iter().map(rn).collect(),
                    })
                    .collect(),
            })
            .collect();
        Self::new(self.op.relabel(systems)?, ps)
    }

    /// Append `suffix` to every system label and party name.
    pub fn with_suffix(&self, suffix: &str) -> Result<Self> {
        let sys = self
            .op
            .systems()
            .iter()
            .map(|s| (s.label.clone(), format!("{}{suffix}", s.label)))
            .collect();
        let ps = self
            .parties
            .iter()
            .map(|p| (p.name.clone(), format!("{}{suffix}", p.name)))
            .collect();
        self.relabel(&sys, &ps)
    }
}

/// Diagnostic summary of the three validity constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub min_eigenvalue: f64,
    pub trace_deviation: f64,
    pub lv_residual: f64,
    pub hermiticity_deviation: f64,
    pub psd: bool,
    pub unit_trace: bool,
    pub lv_fixed_point: bool,
    pub valid: bool,
}

/// Project onto the subspace fixed by the validity projector.
pub fn lv_project(x: &LabeledOperator, parties: &[Party]) -> Result<LabeledOperator> {
    let mut covered = HashSet::new();
    for p in parties {
        covered.extend(p.labels());
    }
    for s in x.systems() {
        if !covered.contains(&s.label) {
            return Err(Error::PartyTable(format!("system `{}` has no party", s.label)));
        }
    }
    let missing: Vec<String> = covered.into_iter().filter(|l| !x.contains(l)).collect();
    let full = x.with_trivial(&missing)?;
    let poly = lv_polynomial(parties, &full)?;
    let projected = poly.apply(&full)?;
    let order = x.labels();
    let keep_trivial: Vec<&str> = missing.iter().map(|s| s.as_str()).collect();
    projected.partial_trace(&keep_trivial)?.permute_systems(&order)
}

pub fn validate(w: &ProcessOperator) -> ValidityReport {
    let op = w.op();
    let herm = op.hermiticity_deviation();
    let sym = (op.matrix() + op.matrix().adjoint()).scale(0.5);
    let min_eigenvalue = hermitian_eigh(&sym, false).map(|(v, _)| v[0]).unwrap_or(f64::NAN);
    let trace_deviation = (op.trace() - C64::new(1.0, 0.0)).norm();
    let lv_residual = lv_project(op, w.parties())
        .and_then(|p| op.distance(&p))
        .unwrap_or(f64::INFINITY);
    let psd = herm <= crate::tensor::HERMITICITY_TOL && min_eigenvalue >= -PSD_TOL;
    let unit_trace = trace_deviation <= TRACE_TOL;
    let lv_fixed_point = lv_residual <= LV_TOL;
    ValidityReport {
        min_eigenvalue,
        trace_deviation,
        lv_residual,
        hermiticity_deviation: herm,
        psd,
        unit_trace,
        lv_fixed_point,
        valid: psd && unit_trace && lv_fixed_point,
    }
}

/// Outcome probability, clamped to `[0, 1]`, with the unclamped value kept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probability {
    pub value: f64,
    pub raw: f64,
}

fn same_labels(a: &[String], b: &[String]) -> bool {
    let x: HashSet<&String> = a.iter().collect();
    let y: HashSet<&String> = b.iter().collect();
    x == y
}

/// `Tr[(E_A ⊗ E_B ⊗ ⋯)^T W]` for paper-normalized elements given in party order.
pub fn probability(w: &ProcessOperator, elements: &[QuantumMap]) -> Result<Probability> {
    if elements.len() != w.parties().len() {
        return Err(Error::InvalidArgument(format!(
            "{} elements for {} parties",
            elements.len(),
            w.parties().len()
        )));
    }
    let mut joint = LabeledOperator::scalar(C64::new(1.0, 0.0));
    for (party, e) in w.parties().iter().zip(elements) {
        if e.normalization() != Normalization::PaperNormalized {
            return Err(Error::Normalization(format!(
                "element for party `{}` must be paper-normalized",
                party.name
            )));
        }
        let e_op = e.choi().without_trivial();
        let e_in: Vec<String> = e.inputs().iter().filter(|s| s.dim > 1).map(|s| s.label.clone()).collect();
        let e_out: Vec<String> = e.outputs().iter().filter(|s| s.dim > 1).map(|s| s.label.clone()).collect();
        if !same_labels(&e_in, &w.nontrivial(&party.inputs()))
            || !same_labels(&e_out, &w.nontrivial(&party.outputs()))
        {
            return Err(Error::PartyTable(format!(
                "element systems do not match party `{}`",
                party.name
            )));
        }
        joint = joint.tensor(&e_op)?;
    }
    let raw = joint.link(&w.op().without_trivial())?.matrix()[(0, 0)].re;
    Ok(Probability {
        value: raw.clamp(0.0, 1.0),
        raw,
    })
}

/// A state shared among receiving parties, each given a list of its systems.
pub fn process_from_state<S: AsRef<str>>(rho: &LabeledOperator, parties: &[(&str, &[S])]) -> Result<ProcessOperator> {
    let ps = parties.iter().map(|(n, ls)| Party::receiver(*n, ls)).collect();
    ProcessOperator::new(rho.clone(), ps)
}

/// Optional extras when embedding a channel as a two-party process.
#[derive(Debug, Clone, Default)]
pub struct ChannelEmbedding {
    /// State delivered to the sender's input.
    pub sender_input: Option<LabeledOperator>,
    /// Receiver output system, filled with `ω`.
    pub receiver_output: Option<SystemId>,
}

pub fn process_from_channel(m: &QuantumMap, from_party: &str, to_party: &str) -> Result<ProcessOperator> {
    process_from_channel_with(m, from_party, to_party, &ChannelEmbedding::default())
}

/// Channel from `from_party`'s output to `to_party`'s input. The operator is
/// the paper-normalized Choi operator divided by its trace.
pub fn process_from_channel_with(
    m: &QuantumMap,
    from_party: &str,
    to_party: &str,
    emb: &ChannelEmbedding,
) -> Result<ProcessOperator> {
    let dev = m.tp_deviation()?;
    if dev > crate::choi::TP_TOL {
        return Err(Error::NotTracePreserving(dev));
    }
    let paper = m.to_paper_normalization();
    let t = paper.choi().trace().re;
    let mut op = paper.choi().scale(1.0 / t);
    let mut sender_in = Vec::new();
    if let Some(s) = &emb.sender_input {
        op = s.tensor(&op)?;
        sender_in = s.labels().iter().map(|l| l.to_string()).collect();
    }
    let mut receiver_out = Vec::new();
    if let Some(r) = &emb.receiver_output {
        op = op.tensor(&LabeledOperator::maximally_mixed(vec![r.clone()])?)?;
        receiver_out.push(r.label.clone());
    }
    let sender = Party::new(
        from_party,
        vec![Tooth {
            inputs: sender_in,
            outputs: m.input_labels(),
        }],
    );
    let receiver = Party::new(
        to_party,
        vec![Tooth {
            inputs: m.output_labels(),
            outputs: receiver_out,
        }],
    );
    ProcessOperator::new(op, vec![sender, receiver])
}

/// Operator tensor product with distinct parties per factor; clashing names
/// get `#1` / `#2` suffixes.
pub fn tensor_processes(w1: &ProcessOperator, w2: &ProcessOperator) -> Result<ProcessOperator> {
    let names1: HashSet<&str> = w1.parties().iter().map(|p| p.name.as_str()).collect();
    let clash_party = w2.parties().iter().any(|p| names1.contains(p.name.as_str()));
    let clash_sys = w2.op().systems().iter().any(|s| w1.op().contains(&s.label));
    let (a, b) = if clash_party || clash_sys {
        (w1.with_suffix("#1")?, w2.with_suffix("#2")?)
    } else {
        (w1.clone(), w2.clone())
    };
    let op = a.op().tensor(b.op())?;
    let mut parties = a.parties().to_vec();
    parties.extend(b.parties().iter().cloned());
    ProcessOperator::new(op, parties)
}

/// `k` copies with parties and systems suffixed `#1 … #k`.
pub fn tensor_power(w: &ProcessOperator, k: usize) -> Result<ProcessOperator> {
    if k < 1 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut acc = w.with_suffix("#1")?;
    for i in 2..=k {
        let next = w.with_suffix(&format!("#{i}"))?;
        let op = acc.op().tensor(next.op())?;
        let mut parties = acc.parties().to_vec();
        parties.extend(next.parties().iter().cloned());
        acc = ProcessOperator::new(op, parties)?;
    }
    Ok(acc)
}

/// Coarse-grain groups of parties into single parties whose teeth follow the
/// listed order.
///
/// Only processes whose merged parties have a definite causal order are
/// accepted: a group member signaling to an earlier member, or any member
/// that signals both ways with another party, is rejected, and the merged
/// object must pass [`validate`].
pub fn merge_parties<S: AsRef<str>>(w: &ProcessOperator, groups: &[(&str, &[S])]) -> Result<ProcessOperator> {
    let mut grouped: HashMap<String, usize> = HashMap::new();
    for (gi, (_, members)) in groups.iter().enumerate() {
        for m in members.iter() {
            w.party(m.as_ref())?;
            if grouped.insert(m.as_ref().to_string(), gi).is_some() {
                return Err(Error::PartyTable(format!("party `{}` listed twice", m.as_ref())));
            }
        }
    }
    let merged: Vec<&Party> = w
        .parties()
        .iter()
        .filter(|p| grouped.get(&p.name).map(|&g| groups[g].1.len() > 1).unwrap_or(false))
        .collect();
    for x in &merged {
        for y in w.parties() {
            if x.name == y.name {
                continue;
            }
            let xy = signaling_probe(w, &x.name, &y.name)?;
            let yx = signaling_probe(w, &y.name, &x.name)?;
            if xy > SIGNALING_TOL && yx > SIGNALING_TOL {
                return Err(Error::MergeRejected(format!(
                    "parties `{}` and `{}` signal both ways; merging is restricted to states, \
                     channels and combs (self-productibility is not decided in general)",
                    x.name, y.name
                )));
            }
        }
    }
    for (_, members) in groups {
        for (i, early) in members.iter().enumerate() {
            for late in members.iter().skip(i + 1) {
                let back = signaling_probe(w, late.as_ref(), early.as_ref())?;
                if back > SIGNALING_TOL {
                    return Err(Error::MergeRejected(format!(
                        "`{}` signals to earlier member `{}`",
                        late.as_ref(),
                        early.as_ref()
                    )));
                }
            }
        }
    }
    let mut parties = Vec::new();
    let mut emitted = HashSet::new();
    for p in w.parties() {
        match grouped.get(&p.name) {
            None => parties.push(p.clone()),
            Some(&g) => {
                if emitted.insert(g) {
                    let (name, members) = &groups[g];
                    let teeth = members
                        .iter()
                        .flat_map(|m| w.party(m.as_ref()).unwrap().teeth.clone())
                        .collect();
                    parties.push(Party::new(*name, teeth));
                }
            }
        }
    }
    let out = ProcessOperator::new(w.op().clone(), parties)?;
    let report = validate(&out);
    if !report.valid {
        return Err(Error::MergeRejected(format!(
            "merged object is not a valid process (lv residual {:.3e})",
            report.lv_residual
        )));
    }
    Ok(out)
}

/// Link a local operation (comb) into `party`'s slot.
///
/// The comb must consume the party's received systems and produce its sent
/// systems in an order compatible with the party's teeth. Its remaining
/// systems become the party's new slots: for comb teeth `c_1 … c_n` the party
/// sends `c_1.in`, receives `c_1.out` and sends `c_2.in`, and so on.
pub fn apply_local_operation(w: &ProcessOperator, party: &str, comb: &QuantumMap) -> Result<ProcessOperator> {
    let comb = comb.to_standard();
    let min = comb.min_choi_eigenvalue()?;
    let scale = comb.choi().trace().norm().max(1.0);
    if min < -PSD_TOL * scale {
        return Err(Error::NotPositive(min));
    }
    let p = w.party(party)?.clone();
    let tooth_of = |label: &str, want_input: bool| -> Option<usize> {
        comb.teeth().iter().position(|t| {
            if want_input {
                t.inputs.iter().any(|l| l == label)
            } else {
                t.outputs.iter().any(|l| l == label)
            }
        })
    };
    // received systems are comb inputs, sent systems are comb outputs
    let mut last: Option<(usize, bool)> = None;
    for tooth in &p.teeth {
        for (labels, is_input) in [(w.nontrivial(&tooth.inputs), true), (w.nontrivial(&tooth.outputs), false)] {
            for l in labels {
                let t = tooth_of(&l, is_input).ok_or_else(|| {
                    Error::Composition(format!("tooth mismatch: comb does not connect to `{l}`"))
                })?;
                if let Some((prev, prev_input)) = last {
                    let ok = if is_input && !prev_input { t > prev } else { t >= prev };
                    if !ok {
                        return Err(Error::Composition(format!(
                            "tooth mismatch: `{l}` is connected out of order"
                        )));
                    }
                }
                last = Some((t, is_input));
            }
        }
    }
    let party_labels: HashSet<String> = p.labels().into_iter().collect();
    let comb_op = comb.choi().without_trivial();
    let z = w.op().without_trivial().link(&comb_op)?;
    let remaining: Vec<Tooth> = comb
        .teeth()
        .iter()
        .map(|t| Tooth {
            inputs: t.inputs.iter().filter(|l| !party_labels.contains(*l)).cloned().collect(),
            outputs: t.outputs.iter().filter(|l| !party_labels.contains(*l)).cloned().collect(),
        })
        .collect();
    let mut teeth = Vec::new();
    let mut carry: Vec<String> = Vec::new();
    for t in &remaining {
        teeth.push(Tooth {
            inputs: std::mem::take(&mut carry),
            outputs: t.inputs.clone(),
        });
        carry = t.outputs.clone();
    }
    teeth.push(Tooth {
        inputs: carry,
        outputs: Vec::new(),
    });
    let teeth: Vec<Tooth> = teeth.into_iter().filter(|t| !t.is_empty()).collect();
    let parties = w
        .parties()
        .iter()
        .filter_map(|q| {
            if q.name == party {
                (!teeth.is_empty()).then(|| Party::new(party, teeth.clone()))
            } else {
                Some(q.clone())
            }
        })
        .collect();
    ProcessOperator::new(z, parties)
}

/// Label of the purifying reference paired with a party-output system.
pub fn reference_label(label: &str) -> String {
    format!("{label}.ref")
}

/// Feed half of a maximally entangled state into every party output; the
/// resulting density matrix is the same operator with each output relabeled
/// as its reference.
pub fn reduce_to_state(w: &ProcessOperator) -> LabeledOperator {
    let map: HashMap<String, String> = w
        .parties()
        .iter()
        .flat_map(|p| p.outputs())
        .map(|l| (l.clone(), reference_label(&l)))
        .collect();
    w.op()
        .relabel(&map)
        .expect("fresh reference labels are unique")
        .without_trivial()
}

/// Systems of `party` in [`reduce_to_state`]'s output.
pub fn reduced_party_labels(w: &ProcessOperator, party: &str) -> Result<Vec<String>> {
    let p = w.party(party)?;
    let mut out = w.nontrivial(&p.inputs());
    out.extend(w.nontrivial(&p.outputs()).iter().map(|l| reference_label(l)));
    Ok(out)
}

fn identity_on(w: &ProcessOperator, labels: &[String]) -> Result<LabeledOperator> {
    let systems: Vec<SystemId> = labels.iter().map(|l| w.op().system(l).unwrap().clone()).collect();
    LabeledOperator::identity(systems)
}

/// One-sided signaling test from `from_party` to `to_party`.
///
/// `from_party` either discards and reprepares `ω` or prepares a computational
/// basis state on all of its outputs; `to_party` measures its received systems
/// in the computational basis; everyone else discards and reprepares `ω`.
/// Returns the largest total-variation distance from the `ω` baseline.
pub fn signaling_probe(w: &ProcessOperator, from_party: &str, to_party: &str) -> Result<f64> {
    if from_party == to_party {
        return Err(Error::InvalidArgument("signaling probe needs two distinct parties".into()));
    }
    let x = w.party(from_party)?;
    let y = w.party(to_party)?;
    let x_in = w.nontrivial(&x.inputs());
    let x_out = w.nontrivial(&x.outputs());
    let y_in = w.nontrivial(&y.inputs());
    let y_out = w.nontrivial(&y.outputs());
    if x_out.is_empty() || y_in.is_empty() {
        return Ok(0.0);
    }
    let mut keep: Vec<String> = x_in.iter().chain(&x_out).chain(&y_in).chain(&y_out).cloned().collect();
    keep.sort();
    let wxy = w.op().without_trivial().reduce_to(&keep)?;
    let d_out = w.dim_of(&x_out);
    let distribution = |ex: &LabeledOperator| -> Result<Vec<f64>> {
        let rho_y = ex.link(&wxy)?;
        let rho_in = rho_y.partial_trace(&y_out)?.permute_systems(&y_in)?;
        Ok((0..rho_in.dim()).map(|j| rho_in.matrix()[(j, j)].re).collect())
    };
    let id_in = identity_on(w, &x_in)?;
    let id_all = identity_on(w, &x_out)?.tensor(&id_in)?;
    let baseline = distribution(&id_all)?;
    let out_sys: Vec<SystemId> = x_out.iter().map(|l| w.op().system(l).unwrap().clone()).collect();
    let mut worst = 0.0f64;
    for k in 0..d_out {
        let mut m = CMatrix::zeros(d_out, d_out);
        m[(k, k)] = C64::new(d_out as f64, 0.0);
        let prep = LabeledOperator::new(out_sys.clone(), m)?.tensor(&id_in)?;
        let dist = distribution(&prep)?;
        let tv = 0.5 * dist.iter().zip(&baseline).map(|(a, b)| (a - b).abs()).sum::<f64>();
        worst = worst.max(tv);
    }
    Ok(worst)
}

/// Random valid process for the given `(name, input dim, output dim)` parties,
/// drawn as `ω + ε X` with `X` a traceless element of the valid subspace.
/// Systems are named `<name>1` (input) and `<name>2` (output), lowercase.
pub fn random_valid_process(shapes: &[(&str, usize, usize)], seed: u64) -> Result<ProcessOperator> {
    let mut rng = Stream::new(seed, 0);
    let mut systems = Vec::new();
    let mut parties = Vec::new();
    for (name, din, dout) in shapes {
        let lo = name.to_lowercase();
        let (i, o) = (format!("{lo}1"), format!("{lo}2"));
        systems.push(SystemId::new(i.clone(), *din)?);
        systems.push(SystemId::new(o.clone(), *dout)?);
        parties.push(Party::simple(*name, &i, &o));
    }
    let d: usize = systems.iter().map(|s| s.dim).product();
    let h = LabeledOperator::new(systems.clone(), random_hermitian(&mut rng, d))?;
    let x = lv_project(&h, &parties)?;
    let omega = LabeledOperator::maximally_mixed(systems)?;
    let x0 = x.sub(&omega.scale_complex(x.trace()))?;
    let (vals, _) = hermitian_eigh(x0.matrix(), false)?;
    let spread = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let strength = 0.2 + 0.79 * rng.uniform();
    let eps = if spread > 0.0 { strength / (d as f64 * spread) } else { 0.0 };
    ProcessOperator::new(omega.add(&x0.scale(eps))?, parties)
}

/// Single party whose output is fed straight back to its input, `|φ₊⟩⟨φ₊|`
/// over `(a1, a2)`: a causal loop, not a valid process.
pub fn feedback_loop(d: usize) -> Result<ProcessOperator> {
    let phi = LabeledOperator::phi_plus(SystemId::new("a1", d)?, SystemId::new("a2", d)?)?;
    ProcessOperator::new(phi, vec![Party::simple("A", "a1", "a2")])
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Labels {
    One(String),
    Many(Vec<String>),
}

impl Labels {
    fn into_vec(self) -> Vec<String> {
        match self {
            Labels::One(s) => vec![s],
            Labels::Many(v) => v,
        }
    }

    fn from_vec(v: &[String]) -> Option<Self> {
        match v {
            [] => None,
            [one] => Some(Labels::One(one.clone())),
            many => Some(Labels::Many(many.to_vec())),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct PartyJson {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    input: Option<Labels>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output: Option<Labels>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    teeth: Option<Vec<Tooth>>,
}

impl From<&Party> for PartyJson {
    fn from(p: &Party) -> Self {
        if p.is_extended() {
            PartyJson {
                name: p.name.clone(),
                input: None,
                output: None,
                teeth: Some(p.teeth.clone()),
            }
        } else {
            PartyJson {
                name: p.name.clone(),
                input: Labels::from_vec(&p.inputs()),
                output: Labels::from_vec(&p.outputs()),
                teeth: None,
            }
        }
    }
}

impl From<PartyJson> for Party {
    fn from(j: PartyJson) -> Self {
        match j.teeth {
            Some(t) => Party::new(j.name, t),
            None => Party::new(
                j.name,
                vec![Tooth {
                    inputs: j.input.map(Labels::into_vec).unwrap_or_default(),
                    outputs: j.output.map(Labels::into_vec).unwrap_or_default(),
                }],
            ),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ProcessJson {
    #[serde(flatten)]
    op: OperatorJson,
    parties: Vec<PartyJson>,
}

impl Serialize for ProcessOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ProcessJson {
            op: OperatorJson::from(&self.op),
            parties: self.parties.iter().map(PartyJson::from).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProcessOperator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = ProcessJson::deserialize(d)?;
        let op = LabeledOperator::try_from(j.op).map_err(D::Error::custom)?;
        ProcessOperator::new(op, j.parties.into_iter().map(Party::from).collect()).map_err(D::Error::custom)
    }
}
