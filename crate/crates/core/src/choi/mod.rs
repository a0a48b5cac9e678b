//! Completely positive maps in Choi form.
//!
//! The standard Choi operator of `M: L(H_in) → L(H_out)` is
//! `C = Σ_ij M(|i⟩⟨j|) ⊗ |i⟩⟨j|` with the output factor first. The
//! paper-normalized operator used by the probability rule carries an extra
//! factor of the total output dimension.

pub mod channels;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::random::{haar_unitary, Stream};
use crate::tensor::{hermitian_eigh, CMatrix, LabeledOperator, OperatorJson, SystemId, C64};

/// Tolerance for the trace-preservation test `Tr_out C = 1_in`.
pub const TP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    StandardChoi,
    PaperNormalized,
}

/// Kraus operators, each of shape (output dim) × (input dim).
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    pub operators: Vec<CMatrix>,
}

impl KrausSet {
    pub fn new(operators: Vec<CMatrix>) -> Result<Self> {
        let first = operators
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty Kraus set".into()))?;
        let shape = first.shape();
        if operators.iter().any(|k| k.shape() != shape) {
            return Err(Error::InvalidArgument("Kraus operators differ in shape".into()));
        }
        Ok(Self { operators })
    }

    pub fn input_dim(&self) -> usize {
        self.operators[0].ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.operators[0].nrows()
    }

    /// `Σ K†K`.
    pub fn completeness(&self) -> CMatrix {
        let d = self.input_dim();
        self.operators
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, k| acc + k.adjoint() * k)
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let d = self.output_dim();
        self.operators
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, k| acc + k * rho * k.adjoint())
    }

    /// Complementary channel `ρ ↦ Σ_jk Tr(K_j ρ K_k†) |j⟩⟨k|`.
    pub fn apply_complementary(&self, rho: &CMatrix) -> CMatrix {
        let n = self.operators.len();
        let prods: Vec<CMatrix> = self.operators.iter().map(|k| k * rho).collect();
        CMatrix::from_fn(n, n, |j, k| {
            // Tr(K_j ρ K_k†) = Σ_ab (K_j ρ)_{ab} conj(K_k)_{ab}
            prods[j]
                .iter()
                .zip(self.operators[k].iter())
                .map(|(x, y)| x * y.conj())
                .sum()
        })
    }
}

/// One tooth of a comb: systems consumed and produced at the same step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Tooth {
    #[serde(default)]
    pub inputs: Vec<String>,
    #[serde(default)]
    pub outputs: Vec<String>,
}

impl Tooth {
    pub fn new<S: AsRef<str>>(inputs: &[S], outputs: &[S]) -> Self {
        Self {
            inputs: inputs.iter().map(|s| s.as_ref().to_string()).collect(),
            outputs: outputs.iter().map(|s| s.as_ref().to_string()).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty() && self.outputs.is_empty()
    }

    fn without(&self, labels: &HashSet<String>) -> Self {
        Self {
            inputs: self.inputs.iter().filter(|l| !labels.contains(*l)).cloned().collect(),
            outputs: self.outputs.iter().filter(|l| !labels.contains(*l)).cloned().collect(),
        }
    }
}

/// A CP map stored as its Choi operator over (outputs, inputs).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumMap {
    choi: LabeledOperator,
    inputs: Vec<SystemId>,
    outputs: Vec<SystemId>,
    normalization: Normalization,
    kraus: Option<KrausSet>,
    teeth: Vec<Tooth>,
}

fn labels_of(systems: &[SystemId]) -> Vec<String> {
    systems.iter().map(|s| s.label.clone()).collect()
}

impl QuantumMap {
    /// Wrap a Choi operator; its systems are reordered to outputs then inputs.
    pub fn from_choi<S: AsRef<str>>(
        choi: LabeledOperator,
        inputs: &[S],
        outputs: &[S],
        normalization: Normalization,
    ) -> Result<Self> {
        let mut order: Vec<&str> = outputs.iter().map(|s| s.as_ref()).collect();
        order.extend(inputs.iter().map(|s| s.as_ref()));
        let choi = choi.permute_systems(&order)?;
        let n_out = outputs.len();
        let outputs = choi.systems()[..n_out].to_vec();
        let inputs = choi.systems()[n_out..].to_vec();
        let teeth = vec![Tooth {
            inputs: labels_of(&inputs),
            outputs: labels_of(&outputs),
        }];
        Ok(Self {
            choi,
            inputs,
            outputs,
            normalization,
            kraus: None,
            teeth,
        })
    }

    pub fn choi_from_kraus(k: KrausSet, inputs: Vec<SystemId>, outputs: Vec<SystemId>) -> Result<Self> {
        let d_in: usize = inputs.iter().map(|s| s.dim).product();
        let d_out: usize = outputs.iter().map(|s| s.dim).product();
        if k.input_dim() != d_in || k.output_dim() != d_out {
            return Err(Error::ShapeMismatch {
                rows: k.output_dim(),
                cols: k.input_dim(),
                expected: d_out * d_in,
            });
        }
        let n = d_out * d_in;
        let mut c = CMatrix::zeros(n, n);
        for op in &k.operators {
            // |K⟩⟩ = Σ K[o,i] |o⟩|i⟩
            let v: Vec<C64> = (0..n).map(|r| op[(r / d_in, r % d_in)]).collect();
            for r in 0..n {
                if v[r] == C64::new(0.0, 0.0) {
                    continue;
                }
                for col in 0..n {
                    c[(r, col)] += v[r] * v[col].conj();
                }
            }
        }
        let mut systems = outputs.clone();
        systems.extend(inputs.iter().cloned());
        let choi = LabeledOperator::new(systems, c)?;
        let teeth = vec![Tooth {
            inputs: labels_of(&inputs),
            outputs: labels_of(&outputs),
        }];
        Ok(Self {
            choi,
            inputs,
            outputs,
            normalization: Normalization::StandardChoi,
            kraus: Some(k),
            teeth,
        })
    }

    pub fn choi(&self) -> &LabeledOperator {
        &self.choi
    }

    pub fn inputs(&self) -> &[SystemId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[SystemId] {
        &self.outputs
    }

    pub fn input_labels(&self) -> Vec<String> {
        labels_of(&self.inputs)
    }

    pub fn output_labels(&self) -> Vec<String> {
        labels_of(&self.outputs)
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.iter().map(|s| s.dim).product()
    }

    pub fn output_dim(&self) -> usize {
        self.outputs.iter().map(|s| s.dim).product()
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn teeth(&self) -> &[Tooth] {
        &self.teeth
    }

    /// Declare the tooth structure; every system must appear in exactly one tooth
    /// on the matching side.
    pub fn with_teeth(mut self, teeth: Vec<Tooth>) -> Result<Self> {
        let mut ins: Vec<String> = teeth.iter().flat_map(|t| t.inputs.clone()).collect();
        let mut outs: Vec<String> = teeth.iter().flat_map(|t| t.outputs.clone()).collect();
        let mut want_in = self.input_labels();
        let mut want_out = self.output_labels();
        ins.sort();
        outs.sort();
        want_in.sort();
        want_out.sort();
        if ins != want_in || outs != want_out {
            return Err(Error::Composition(
                "teeth do not partition the map's inputs and outputs".into(),
            ));
        }
        self.teeth = teeth.into_iter().filter(|t| !t.is_empty()).collect();
        Ok(self)
    }

    pub fn to_paper_normalization(&self) -> Self {
        match self.normalization {
            Normalization::PaperNormalized => self.clone(),
            Normalization::StandardChoi => Self {
                choi: self.choi.scale(self.output_dim() as f64),
                normalization: Normalization::PaperNormalized,
                ..self.clone()
            },
        }
    }

    pub fn to_standard(&self) -> Self {
        match self.normalization {
            Normalization::StandardChoi => self.clone(),
            Normalization::PaperNormalized => Self {
                choi: self.choi.scale(1.0 / self.output_dim() as f64),
                normalization: Normalization::StandardChoi,
                ..self.clone()
            },
        }
    }

    /// Frobenius deviation of `Tr_out C` from `1_in` (standard normalization).
    pub fn tp_deviation(&self) -> Result<f64> {
        let std = self.to_standard();
        let outs = self.output_labels();
        let marg = std.choi.partial_trace(&outs)?;
        Ok((marg.matrix() - CMatrix::identity(marg.dim(), marg.dim())).norm())
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.tp_deviation().map(|d| d <= TP_TOL).unwrap_or(false)
    }

    pub fn min_choi_eigenvalue(&self) -> Result<f64> {
        Ok(self.choi.eigvals_hermitian()?[0])
    }

    /// Kraus operators, recomputed from the Choi spectrum when none are stored.
    pub fn kraus(&self) -> Result<KrausSet> {
        if let Some(k) = &self.kraus {
            return Ok(k.clone());
        }
        let std = self.to_standard();
        let (vals, vecs) = hermitian_eigh(std.choi.matrix(), true)?;
        let vecs = vecs.unwrap();
        let (d_out, d_in) = (self.output_dim(), self.input_dim());
        let top = vals.iter().cloned().fold(0.0f64, f64::max);
        if vals[0] < -1e-9 * top.max(1.0) {
            return Err(Error::NotPositive(vals[0]));
        }
        let mut ops = Vec::new();
        for (k, &v) in vals.iter().enumerate().rev() {
            if v <= 1e-12 * top.max(1.0) {
                continue;
            }
            let s = v.sqrt();
            ops.push(CMatrix::from_fn(d_out, d_in, |o, i| vecs[(o * d_in + i, k)] * s));
        }
        if ops.is_empty() {
            ops.push(CMatrix::zeros(d_out, d_in));
        }
        KrausSet::new(ops)
    }

    /// Action on an operator whose systems include the map's inputs; bystanders
    /// are carried through ahead of the outputs.
    pub fn apply_map(&self, rho: &LabeledOperator) -> Result<LabeledOperator> {
        if self.normalization != Normalization::StandardChoi {
            return Err(Error::Normalization("apply_map expects a standard Choi operator".into()));
        }
        for s in &self.inputs {
            if !rho.contains(&s.label) {
                return Err(Error::UnknownLabel(s.label.clone()));
            }
        }
        for s in &self.outputs {
            if rho.contains(&s.label) && !self.inputs.iter().any(|i| i.label == s.label) {
                return Err(Error::DuplicateLabel(s.label.clone()));
            }
        }
        rho.link(&self.choi)
    }

    /// Relabel systems (Choi, declared systems, teeth and Kraus are kept consistent).
    pub fn relabel(&self, map: &std::collections::HashMap<String, String>) -> Result<Self> {
        let rename = |l: &String| map.get(l).cloned().unwrap_or_else(|| l.clone());
        let rs = |v: &[SystemId]| {
            v.iter()
                .map(|s| SystemId {
                    label: rename(&s.label),
                    dim: s.dim,
                })
                .collect::<Vec<_>>()
        };
        Ok(Self {
            choi: self.choi.relabel(map)?,
            inputs: rs(&self.inputs),
            outputs: rs(&self.outputs),
            normalization: self.normalization,
            kraus: self.kraus.clone(),
            teeth: self
                .teeth
                .iter()
                .map(|t| Tooth {
                    inputs: t.inputs.iter().map(rename).collect(),
                    outputs: t.outputs.iter().map(rename).collect(),
                })
                .collect(),
        })
    }

    /// Largest deviation from the comb conditions
    /// `Tr_{out_k} R_k = 1_{in_k} ⊗ R_{k-1}` taken tooth by tooth from the last.
    pub fn comb_causality_deviation(&self) -> Result<f64> {
        let mut r = self.to_standard().choi;
        let mut worst = 0.0f64;
        for tooth in self.teeth.iter().rev() {
            let traced = r.partial_trace(&tooth.outputs)?;
            let d_in = traced.dim_of(&tooth.inputs)?;
            let prev = traced.partial_trace(&tooth.inputs)?.scale(1.0 / d_in as f64);
            let ins: Vec<SystemId> = tooth
                .inputs
                .iter()
                .map(|l| traced.system(l).unwrap().clone())
                .collect();
            let rebuilt = LabeledOperator::identity(ins)?.tensor(&prev)?;
            worst = worst.max(traced.distance(&rebuilt)?);
            r = prev;
        }
        worst = worst.max((r.trace() - C64::new(1.0, 0.0)).norm());
        Ok(worst)
    }
}

/// Compose two maps over their shared systems (the link product, standard normalization).
///
/// Every shared label must be an output of one map and an input of the other,
/// and the flow must go one way only.
pub fn link_product(a: &QuantumMap, b: &QuantumMap) -> Result<QuantumMap> {
    if a.normalization != Normalization::StandardChoi || b.normalization != Normalization::StandardChoi {
        return Err(Error::Normalization("link_product expects standard Choi operators".into()));
    }
    let a_in: HashSet<String> = a.input_labels().into_iter().collect();
    let a_out: HashSet<String> = a.output_labels().into_iter().collect();
    let b_in: HashSet<String> = b.input_labels().into_iter().collect();
    let b_out: HashSet<String> = b.output_labels().into_iter().collect();
    let forward: HashSet<String> = a_out.intersection(&b_in).cloned().collect();
    let backward: HashSet<String> = b_out.intersection(&a_in).cloned().collect();
    if let Some(l) = a_in.intersection(&b_in).next() {
        return Err(Error::Composition(format!("`{l}` is an input of both maps")));
    }
    if let Some(l) = a_out.intersection(&b_out).next() {
        return Err(Error::Composition(format!("`{l}` is an output of both maps")));
    }
    if !forward.is_empty() && !backward.is_empty() {
        return Err(Error::Composition("cyclic composition request".into()));
    }
    let (first, second, shared) = if backward.is_empty() {
        (a, b, forward)
    } else {
        (b, a, backward)
    };
    let linked = first.choi.link(&second.choi)?;
    let inputs: Vec<SystemId> = first
        .inputs
        .iter()
        .chain(&second.inputs)
        .filter(|s| !shared.contains(&s.label))
        .cloned()
        .collect();
    let outputs: Vec<SystemId> = first
        .outputs
        .iter()
        .chain(&second.outputs)
        .filter(|s| !shared.contains(&s.label))
        .cloned()
        .collect();
    let mut m = QuantumMap::from_choi(
        linked,
        &labels_of(&inputs),
        &labels_of(&outputs),
        Normalization::StandardChoi,
    )?;
    m.teeth = first
        .teeth
        .iter()
        .chain(&second.teeth)
        .map(|t| t.without(&shared))
        .filter(|t| !t.is_empty())
        .collect();
    Ok(m)
}

/// Two-tooth comb `M` then `N`, linked over the memory system only.
pub fn memory_channel(m: &QuantumMap, n: &QuantumMap, memory_label: &str) -> Result<QuantumMap> {
    let mem_out = m
        .outputs
        .iter()
        .find(|s| s.label == memory_label)
        .ok_or_else(|| Error::UnknownLabel(memory_label.to_string()))?;
    let mem_in = n
        .inputs
        .iter()
        .find(|s| s.label == memory_label)
        .ok_or_else(|| Error::UnknownLabel(memory_label.to_string()))?;
    if mem_out.dim != mem_in.dim {
        return Err(Error::DimensionMismatch {
            label: memory_label.to_string(),
            expected: mem_out.dim,
            found: mem_in.dim,
        });
    }
    let m_labels: HashSet<String> = m.input_labels().into_iter().chain(m.output_labels()).collect();
    for l in n.input_labels().into_iter().chain(n.output_labels()) {
        if l != memory_label && m_labels.contains(&l) {
            return Err(Error::Composition(format!(
                "`{l}` is shared by both teeth; only the memory may be"
            )));
        }
    }
    let linked = link_product(m, n)?;
    let mem: HashSet<String> = [memory_label.to_string()].into_iter().collect();
    let t1 = Tooth {
        inputs: m.input_labels(),
        outputs: m.output_labels(),
    }
    .without(&mem);
    let t2 = Tooth {
        inputs: n.input_labels(),
        outputs: n.output_labels(),
    }
    .without(&mem);
    linked.with_teeth(vec![t1, t2])
}

/// Haar-random `d × d` unitary; the same seed reproduces the same matrix bit for bit.
pub fn haar_random_unitary(d: usize, seed: u64) -> Result<CMatrix> {
    haar_unitary(&mut Stream::new(seed, 0), d)
}

#[derive(Serialize, Deserialize)]
struct MapJson {
    #[serde(flatten)]
    choi: OperatorJson,
    inputs: Vec<String>,
    outputs: Vec<String>,
    normalization: Normalization,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kraus: Option<Vec<Vec<Vec<[f64; 2]>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    teeth: Option<Vec<Tooth>>,
}

impl Serialize for QuantumMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let kraus = self.kraus.as_ref().map(|k| {
            k.operators
                .iter()
                .map(|m| {
                    (0..m.nrows())
                        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
                        .collect()
                })
                .collect()
        });
        MapJson {
            choi: OperatorJson::from(&self.choi),
            inputs: self.input_labels(),
            outputs: self.output_labels(),
            normalization: self.normalization,
            kraus,
            teeth: (self.teeth.len() > 1).then(|| self.teeth.clone()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QuantumMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = MapJson::deserialize(d)?;
        let choi = LabeledOperator::try_from(j.choi).map_err(D::Error::custom)?;
        let mut m = QuantumMap::from_choi(choi, &j.inputs, &j.outputs, j.normalization)
            .map_err(D::Error::custom)?;
        if let Some(ks) = j.kraus {
            let ops: Vec<CMatrix> = ks
                .into_iter()
                .map(|rows| {
                    let r = rows.len();
                    let c = rows.first().map(|x| x.len()).unwrap_or(0);
                    CMatrix::from_fn(r, c, |i, k| C64::new(rows[i][k][0], rows[i][k][1]))
                })
                .collect();
            m.kraus = Some(KrausSet::new(ops).map_err(D::Error::custom)?);
        }
        if let Some(t) = j.teeth {
            m = m.with_teeth(t).map_err(D::Error::custom)?;
        }
        Ok(m)
    }
}
