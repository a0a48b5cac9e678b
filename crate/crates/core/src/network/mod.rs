//! Layered networks of unitary gates under a global time foliation.
//!
//! The whole network is a pure Choi state, simulated as a state vector. Every
//! site starts as half of a `|φ₊⟩` whose other half is the open past system
//! `in:s{site}`; gates act on the live halves in layer order and whatever is
//! left at the end is the open future `out:s{site}`. A region splits the gates
//! into two sides; each wire running between gates on different sides is cut
//! and its two ends become open systems `w:{wire}.src` (producer end) and
//! `w:{wire}.dst` (consumer end).

mod gate;

pub use gate::{gate_choi, unitary_experiment, GateMode, HistogramBin, UnitaryExperiment};

use std::collections::{BTreeSet, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::choi::haar_random_unitary;
use crate::error::{Error, Result};
use crate::measures::entropy_of_spectrum;
use crate::random::Stream;
use crate::tensor::{hermitian_eigh, CMatrix, LabeledOperator, SystemId, C64};

/// Largest state vector built.
pub const STATE_CAP: usize = 1 << 12;
/// Largest global density matrix materialized by [`global_choi`].
pub const DENSITY_CAP: usize = 1 << 10;
pub const OMEGA_TOL: f64 = 1e-10;
const UNITARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GateSource {
    Haar { haar_seed: u64 },
    Matrix(Vec<Vec<[f64; 2]>>),
}

impl GateSource {
    pub fn from_matrix(u: &CMatrix) -> Self {
        GateSource::Matrix(
            (0..u.nrows())
                .map(|r| (0..u.ncols()).map(|c| [u[(r, c)].re, u[(r, c)].im]).collect())
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatePlacement {
    /// 1-based layer of the foliation.
    pub layer: usize,
    pub sites: Vec<usize>,
    pub unitary: GateSource,
}

/// Gates (by index) on side A; everything else is side B.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub side_a_gates: Vec<usize>,
    /// Open systems on side A. Defaults to the systems attached to side-A gates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side_a_open: Option<Vec<String>>,
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub width: usize,
    pub layers: usize,
    #[serde(default = "two")]
    pub site_dim: usize,
    pub gates: Vec<GatePlacement>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Region>,
}

impl NetworkSpec {
    pub fn check(&self) -> Result<()> {
        if self.width == 0 || self.layers == 0 || self.site_dim < 2 {
            return Err(Error::Network("width, layers must be ≥ 1 and site_dim ≥ 2".into()));
        }
        let mut last_layer = 0;
        let mut busy: HashSet<(usize, usize)> = HashSet::new();
        for (g, gate) in self.gates.iter().enumerate() {
            if gate.layer < 1 || gate.layer > self.layers {
                return Err(Error::Network(format!("gate {g} sits in layer {} of {}", gate.layer, self.layers)));
            }
            if gate.layer < last_layer {
                return Err(Error::Network("gates must be listed in layer order".into()));
            }
            last_layer = gate.layer;
            if gate.sites.is_empty() {
                return Err(Error::Network(format!("gate {g} acts on no site")));
            }
            for &s in &gate.sites {
                if s >= self.width {
                    return Err(Error::Network(format!("gate {g} acts on site {s} of {}", self.width)));
                }
                if !busy.insert((gate.layer, s)) {
                    return Err(Error::Network(format!(
                        "site {s} is used twice in layer {}",
                        gate.layer
                    )));
                }
            }
        }
        if let Some(r) = &self.region {
            for &g in &r.side_a_gates {
                if g >= self.gates.len() {
                    return Err(Error::Network(format!("region names unknown gate {g}")));
                }
            }
        }
        self.unitaries().map(|_| ())
    }

    pub fn unitaries(&self) -> Result<Vec<CMatrix>> {
        self.gates
            .iter()
            .enumerate()
            .map(|(g, gate)| {
                let d = self.site_dim.pow(gate.sites.len() as u32);
                let u = match &gate.unitary {
                    GateSource::Haar { haar_seed } => haar_random_unitary(d, *haar_seed)?,
                    GateSource::Matrix(rows) => {
                        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                            return Err(Error::Network(format!("gate {g} must be {d}x{d}")));
                        }
                        CMatrix::from_fn(d, d, |r, c| C64::new(rows[r][c][0], rows[r][c][1]))
                    }
                };
                let dev = (u.adjoint() * &u - CMatrix::identity(d, d)).norm();
                if dev > UNITARY_TOL {
                    return Err(Error::Network(format!("gate {g} is not unitary (deviation {dev:.2e})")));
                }
                Ok(u)
            })
            .collect()
    }

    pub fn with_region(mut self, region: Region) -> Self {
        self.region = Some(region);
        self
    }

    /// Fresh Haar seeds for sample `sample`; fixed gates are kept.
    pub fn reseeded(&self, seed: u64, sample: u64) -> Self {
        let mut out = self.clone();
        let mut rng = Stream::derive(seed, sample);
        for gate in &mut out.gates {
            if let GateSource::Haar { haar_seed } = &mut gate.unitary {
                *haar_seed = rng.next_u64();
            }
        }
        out
    }
}

/// Where brickwork gates come from.
#[derive(Debug, Clone)]
pub enum GateSupply {
    /// Independent Haar gates, seeds derived per gate.
    Haar { seed: u64 },
    /// One unitary per gate, in placement order.
    Fixed(Vec<CMatrix>),
}

/// Two-site gates on pairs `(0,1), (2,3), …` in odd layers and `(1,2), …` in even layers.
pub fn build_brickwork(layers: usize, width: usize, supply: &GateSupply) -> Result<NetworkSpec> {
    if width % 2 != 0 || width == 0 {
        return Err(Error::ParameterOutOfRange {
            name: "width",
            value: width as f64,
        });
    }
    if layers == 0 {
        return Err(Error::ParameterOutOfRange {
            name: "layers",
            value: 0.0,
        });
    }
    let mut gates = Vec::new();
    for layer in 1..=layers {
        let first = if layer % 2 == 1 { 0 } else { 1 };
        let mut s = first;
        while s + 1 < width {
            gates.push((layer, vec![s, s + 1]));
            s += 2;
        }
    }
    let gates = match supply {
        GateSupply::Haar { seed } => {
            let mut rng = Stream::derive(*seed, 0);
            gates
                .into_iter()
                .map(|(layer, sites)| GatePlacement {
                    layer,
                    sites,
                    unitary: GateSource::Haar {
                        haar_seed: rng.next_u64(),
                    },
                })
                .collect()
        }
        GateSupply::Fixed(us) => {
            if us.len() != gates.len() {
                return Err(Error::Network(format!(
                    "brickwork needs {} gates, {} given",
                    gates.len(),
                    us.len()
                )));
            }
            gates
                .into_iter()
                .zip(us)
                .map(|((layer, sites), u)| GatePlacement {
                    layer,
                    sites,
                    unitary: GateSource::from_matrix(u),
                })
                .collect()
        }
    };
    let net = NetworkSpec {
        width,
        layers,
        site_dim: 2,
        gates,
        region: None,
    };
    net.check()?;
    Ok(net)
}

/// Four sites, two layers: gates 0 `(0,1)` and 1 `(2,3)`, then gate 2 `(1,2)`.
///
/// Side A holds the first-layer gates, so wires `s1.1` and `s2.1` are cut.
/// The target mixes whole-gate inputs (`in:s0`, `in:s1`) with input/output
/// pairs straddling gates 1 and 2.
pub fn fig6_small(seed: u64) -> Result<NetworkSpec> {
    let net = build_brickwork(2, 4, &GateSupply::Haar { seed })?;
    Ok(net.with_region(Region {
        side_a_gates: vec![0, 1],
        side_a_open: Some(
            ["in:s0", "in:s1", "in:s2", "w:s2.1.src", "w:s1.1.dst", "out:s2"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        ),
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LegKind {
    Past,
    Future,
    CutSource,
    CutSink,
}

impl LegKind {
    /// Enters the network (its causal influence runs forward from here).
    pub fn is_input(self) -> bool {
        matches!(self, LegKind::Past | LegKind::CutSink)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenLeg {
    pub label: String,
    pub kind: LegKind,
    /// Gate the leg attaches to; `None` for a site no gate touches.
    pub gate: Option<usize>,
    pub site: usize,
}

/// The network's global pure state.
#[derive(Debug, Clone)]
pub struct NetworkState {
    systems: Vec<SystemId>,
    amplitudes: Vec<C64>,
    legs: Vec<OpenLeg>,
    // node reachability: gates first, then one node per gateless site
    reach: Vec<HashSet<usize>>,
    n_gates: usize,
}

fn apply_on(systems: &[SystemId], amps: &mut [C64], targets: &[usize], u: &CMatrix) {
    let n = systems.len();
    let mut strides = vec![1usize; n];
    for k in (0..n.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * systems[k + 1].dim;
    }
    // offsets of the gate's basis states, first target most significant
    let mut offsets = vec![0usize];
    for &t in targets {
        let stride = strides[t];
        offsets = offsets
            .iter()
            .flat_map(|&o| (0..systems[t].dim).map(move |v| o + v * stride))
            .collect();
    }
    let mut buf = vec![C64::new(0.0, 0.0); offsets.len()];
    for base in 0..amps.len() {
        if targets.iter().any(|&t| (base / strides[t]) % systems[t].dim != 0) {
            continue;
        }
        for (r, b) in buf.iter_mut().enumerate() {
            *b = offsets.iter().enumerate().map(|(c, oc)| u[(r, c)] * amps[base + oc]).sum();
        }
        for (r, o) in offsets.iter().enumerate() {
            amps[base + o] = buf[r];
        }
    }
}

fn push_phi_plus(systems: &mut Vec<SystemId>, amps: &mut Vec<C64>, a: &str, b: &str, d: usize) -> Result<()> {
    let s = 1.0 / (d as f64).sqrt();
    let mut out = vec![C64::new(0.0, 0.0); amps.len() * d * d];
    for (k, z) in amps.iter().enumerate() {
        for i in 0..d {
            out[k * d * d + i * d + i] = z * s;
        }
    }
    *amps = out;
    systems.push(SystemId::new(a, d)?);
    systems.push(SystemId::new(b, d)?);
    Ok(())
}

fn live(site: usize) -> String {
    format!("live:s{site}")
}

pub fn past_label(site: usize) -> String {
    format!("in:s{site}")
}

pub fn future_label(site: usize) -> String {
    format!("out:s{site}")
}

/// Segment `k` of a site's wire: `k = 0` runs from the past to the first gate.
pub fn wire_id(site: usize, k: usize) -> String {
    format!("s{site}.{k}")
}

/// Build the global state; wires between gates on different sides of
/// `net.region` are cut.
pub fn network_state(net: &NetworkSpec) -> Result<NetworkState> {
    net.check()?;
    let us = net.unitaries()?;
    let d = net.site_dim;
    let side_a: HashSet<usize> = net
        .region
        .as_ref()
        .map(|r| r.side_a_gates.iter().copied().collect())
        .unwrap_or_default();
    let cut_between = |p: usize, g: usize| net.region.is_some() && side_a.contains(&p) != side_a.contains(&g);
    let mut n_cuts = 0;
    {
        let mut producer: Vec<Option<usize>> = vec![None; net.width];
        for (g, gate) in net.gates.iter().enumerate() {
            for &s in &gate.sites {
                if let Some(p) = producer[s] {
                    if cut_between(p, g) {
                        n_cuts += 1;
                    }
                }
                producer[s] = Some(g);
            }
        }
    }
    let dim = (d as u128).pow(2 * (net.width + n_cuts) as u32);
    if dim > STATE_CAP as u128 {
        return Err(Error::DimensionCap {
            found: dim.min(usize::MAX as u128) as usize,
            cap: STATE_CAP,
        });
    }
    let mut systems = Vec::new();
    let mut amps = vec![C64::new(1.0, 0.0)];
    let mut legs = Vec::new();
    for s in 0..net.width {
        push_phi_plus(&mut systems, &mut amps, &past_label(s), &live(s), d)?;
    }
    let first_gate: Vec<Option<usize>> = (0..net.width)
        .map(|s| net.gates.iter().position(|g| g.sites.contains(&s)))
        .collect();
    for s in 0..net.width {
        legs.push(OpenLeg {
            label: past_label(s),
            kind: LegKind::Past,
            gate: first_gate[s],
            site: s,
        });
    }
    let mut producer: Vec<Option<usize>> = vec![None; net.width];
    let mut segment = vec![0usize; net.width];
    let n_nodes = net.gates.len() + net.width;
    let mut edges: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n_nodes];
    for (g, gate) in net.gates.iter().enumerate() {
        for &s in &gate.sites {
            if let Some(p) = producer[s] {
                if cut_between(p, g) {
                    let wire = wire_id(s, segment[s]);
                    let src = format!("w:{wire}.src");
                    let dst = format!("w:{wire}.dst");
                    let pos = systems.iter().position(|x| x.label == live(s)).unwrap();
                    systems[pos] = SystemId::new(src.clone(), d)?;
                    push_phi_plus(&mut systems, &mut amps, &dst, &live(s), d)?;
                    legs.push(OpenLeg {
                        label: src,
                        kind: LegKind::CutSource,
                        gate: Some(p),
                        site: s,
                    });
                    legs.push(OpenLeg {
                        label: dst,
                        kind: LegKind::CutSink,
                        gate: Some(g),
                        site: s,
                    });
                } else {
                    edges[p].insert(g);
                }
            }
        }
        let targets: Vec<usize> = gate
            .sites
            .iter()
            .map(|&s| systems.iter().position(|x| x.label == live(s)).unwrap())
            .collect();
        apply_on(&systems, &mut amps, &targets, &us[g]);
        for &s in &gate.sites {
            producer[s] = Some(g);
            segment[s] += 1;
        }
    }
    for s in 0..net.width {
        let pos = systems.iter().position(|x| x.label == live(s)).unwrap();
        systems[pos] = SystemId::new(future_label(s), d)?;
        legs.push(OpenLeg {
            label: future_label(s),
            kind: LegKind::Future,
            gate: producer[s],
            site: s,
        });
    }
    // forward reachability over the uncut gate graph (gates are in foliation order)
    let mut reach: Vec<HashSet<usize>> = (0..n_nodes).map(|i| HashSet::from([i])).collect();
    for g in (0..net.gates.len()).rev() {
        let next: Vec<usize> = edges[g].iter().copied().collect();
        for h in next {
            let r = reach[h].clone();
            reach[g].extend(r);
        }
    }
    Ok(NetworkState {
        systems,
        amplitudes: amps,
        legs,
        reach,
        n_gates: net.gates.len(),
    })
}

impl NetworkState {
    pub fn systems(&self) -> &[SystemId] {
        &self.systems
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn legs(&self) -> &[OpenLeg] {
        &self.legs
    }

    pub fn labels(&self) -> Vec<String> {
        self.systems.iter().map(|s| s.label.clone()).collect()
    }

    pub fn leg(&self, label: &str) -> Result<&OpenLeg> {
        self.legs
            .iter()
            .find(|l| l.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// `Tr ρ²` of the global state (its squared norm for a vector).
    pub fn purity(&self) -> f64 {
        let n: f64 = self.amplitudes.iter().map(|z| z.norm_sqr()).sum();
        n * n
    }

    fn node(&self, leg: &OpenLeg) -> usize {
        leg.gate.unwrap_or(self.n_gates + leg.site)
    }

    /// Output legs in the causal future of an input leg.
    pub fn future_of(&self, label: &str) -> Result<Vec<String>> {
        let leg = self.leg(label)?;
        if !leg.kind.is_input() {
            return Err(Error::InvalidArgument(format!("`{label}` is not an input leg")));
        }
        let from = &self.reach[self.node(leg)];
        Ok(self
            .legs
            .iter()
            .filter(|l| !l.kind.is_input() && from.contains(&self.node(l)))
            .map(|l| l.label.clone())
            .collect())
    }

    /// Input legs in the causal past of an output leg.
    pub fn past_of(&self, label: &str) -> Result<Vec<String>> {
        let leg = self.leg(label)?;
        if leg.kind.is_input() {
            return Err(Error::InvalidArgument(format!("`{label}` is not an output leg")));
        }
        let to = self.node(leg);
        Ok(self
            .legs
            .iter()
            .filter(|l| l.kind.is_input() && self.reach[self.node(l)].contains(&to))
            .map(|l| l.label.clone())
            .collect())
    }

    /// Coefficient matrix with rows indexed by `keep` (in the given order).
    fn split(&self, keep: &[String]) -> Result<CMatrix> {
        let mut pos = Vec::with_capacity(keep.len());
        for l in keep {
            let p = self
                .systems
                .iter()
                .position(|s| &s.label == l)
                .ok_or_else(|| Error::UnknownLabel(l.clone()))?;
            if pos.contains(&p) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
            pos.push(p);
        }
        let rest: Vec<usize> = (0..self.systems.len()).filter(|p| !pos.contains(p)).collect();
        let dims: Vec<usize> = self.systems.iter().map(|s| s.dim).collect();
        let dk: usize = pos.iter().map(|&p| dims[p]).product();
        let dr: usize = rest.iter().map(|&p| dims[p]).product();
        let mut m = CMatrix::zeros(dk, dr);
        let mut digits = vec![0usize; dims.len()];
        for (idx, z) in self.amplitudes.iter().enumerate() {
            let mut x = idx;
            for k in (0..dims.len()).rev() {
                digits[k] = x % dims[k];
                x /= dims[k];
            }
            let r = pos.iter().fold(0, |acc, &p| acc * dims[p] + digits[p]);
            let c = rest.iter().fold(0, |acc, &p| acc * dims[p] + digits[p]);
            m[(r, c)] = *z;
        }
        Ok(m)
    }

    /// Reduced density operator on `keep`.
    pub fn reduce(&self, keep: &[String]) -> Result<LabeledOperator> {
        let m = self.split(keep)?;
        let systems = keep
            .iter()
            .map(|l| self.systems.iter().find(|s| &s.label == l).unwrap().clone())
            .collect();
        let rho = &m * m.adjoint();
        LabeledOperator::new(systems, (&rho + rho.adjoint()).scale(0.5))
    }

    /// Entropy of the reduction to `keep`, computed on the smaller side.
    pub fn entropy(&self, keep: &[String]) -> Result<f64> {
        let m = self.split(keep)?;
        let g = if m.nrows() <= m.ncols() {
            &m * m.adjoint()
        } else {
            m.adjoint() * &m
        };
        entropy_of_spectrum(&hermitian_eigh(&((&g + g.adjoint()).scale(0.5)), false)?.0)
    }

    /// Density matrix of the whole state.
    pub fn density(&self) -> Result<LabeledOperator> {
        let n = self.amplitudes.len();
        if n > DENSITY_CAP {
            return Err(Error::DimensionCap {
                found: n,
                cap: DENSITY_CAP,
            });
        }
        let v = CMatrix::from_column_slice(n, 1, &self.amplitudes);
        LabeledOperator::new(self.systems.clone(), &v * v.adjoint())
    }
}

/// Normalized global Choi operator (a pure state).
pub fn global_choi(net: &NetworkSpec) -> Result<LabeledOperator> {
    network_state(net)?.density()
}

pub fn reduced_operator<S: AsRef<str>>(net: &NetworkSpec, keep: &[S]) -> Result<LabeledOperator> {
    let keep: Vec<String> = keep.iter().map(|s| s.as_ref().to_string()).collect();
    network_state(net)?.reduce(&keep)
}

/// Side-A open systems of `net.region`, in state order.
pub fn region_target(state: &NetworkState, region: &Region) -> Result<Vec<String>> {
    let side_a: HashSet<usize> = region.side_a_gates.iter().copied().collect();
    match &region.side_a_open {
        Some(open) => {
            for l in open {
                state.leg(l)?;
            }
            let set: HashSet<&String> = open.iter().collect();
            if set.len() != open.len() {
                return Err(Error::Network("side_a_open lists a system twice".into()));
            }
            Ok(state.labels().into_iter().filter(|l| set.contains(l)).collect())
        }
        None => Ok(state
            .labels()
            .into_iter()
            .filter(|l| {
                state
                    .leg(l)
                    .map(|leg| leg.gate.map(|g| side_a.contains(&g)).unwrap_or(false))
                    .unwrap_or(false)
            })
            .collect()),
    }
}

/// Coherent information of the global state with side A as the target.
pub fn region_coherent_information(net: &NetworkSpec, region: &Region) -> Result<f64> {
    let net = net.clone().with_region(region.clone());
    let state = network_state(&net)?;
    let target = region_target(&state, region)?;
    // the global state is pure, so S(all) = 0
    state.entropy(&target)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaCheck {
    pub kept: String,
    /// Systems expected to be maximally mixed and uncorrelated with the rest.
    pub systems: Vec<String>,
    pub deviation: f64,
    pub passed: bool,
}

fn omega_check(state: &NetworkState, name: &str, keep: &[String], mixed: &[String]) -> Result<OmegaCheck> {
    let rho = state.reduce(keep)?;
    let deviation = rho.distance(&rho.replace_with_maximally_mixed(mixed)?)?;
    Ok(OmegaCheck {
        kept: name.to_string(),
        systems: mixed.to_vec(),
        deviation,
        passed: deviation <= OMEGA_TOL,
    })
}

/// Reductions that the foliation forces to be exactly maximally mixed.
///
/// For a kept set `K`, the inputs in `K` whose whole causal future is traced
/// out, and likewise the outputs whose whole causal past is traced out, must
/// be `ω` and uncorrelated with the rest of `K`. Checked for all past systems,
/// all future systems, and — with a region — both sides of the cut.
pub fn exact_omega_checks(net: &NetworkSpec) -> Result<Vec<OmegaCheck>> {
    let state = network_state(net)?;
    let mut sets: Vec<(String, Vec<String>)> = vec![
        ("past".into(), (0..net.width).map(past_label).collect()),
        ("future".into(), (0..net.width).map(future_label).collect()),
    ];
    if let Some(r) = &net.region {
        let a = region_target(&state, r)?;
        let b: Vec<String> = state.labels().into_iter().filter(|l| !a.contains(l)).collect();
        sets.push(("side_a".into(), a));
        sets.push(("side_b".into(), b));
    }
    let mut out = Vec::new();
    for (name, keep) in sets {
        let inside: HashSet<&String> = keep.iter().collect();
        let mut ins = Vec::new();
        let mut outs = Vec::new();
        for l in &keep {
            let leg = state.leg(l)?;
            let cone = if leg.kind.is_input() {
                state.future_of(l)?
            } else {
                state.past_of(l)?
            };
            if cone.iter().all(|c| !inside.contains(c)) {
                if leg.kind.is_input() {
                    ins.push(l.clone());
                } else {
                    outs.push(l.clone());
                }
            }
        }
        for mixed in [ins, outs] {
            if !mixed.is_empty() {
                out.push(omega_check(&state, &name, &keep, &mixed)?);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len().max(1) as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        Self {
            mean,
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaSummary {
    pub count: usize,
    pub passed: usize,
    pub max_deviation: f64,
    pub all_passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkExperiment {
    pub samples: usize,
    pub seed: u64,
    pub target: Vec<String>,
    /// `log₂` of the target dimension.
    pub max_bits: f64,
    pub region_ci_bits: Summary,
    /// Fraction of samples with CI ≥ max − 2 bits.
    pub within_two_bits: f64,
    pub values: Vec<f64>,
    pub exact_omega_checks: OmegaSummary,
}

/// Region CI and the exact-ω checks over `samples` reseedings of the Haar gates.
pub fn network_experiment(net: &NetworkSpec, samples: usize, seed: u64) -> Result<NetworkExperiment> {
    let region = net
        .region
        .clone()
        .ok_or_else(|| Error::Network("network experiments need a region".into()))?;
    if samples == 0 {
        return Err(Error::ParameterOutOfRange {
            name: "samples",
            value: 0.0,
        });
    }
    let state = network_state(net)?;
    let target = region_target(&state, &region)?;
    let max_bits: f64 = target
        .iter()
        .map(|l| (state.leg(l).map(|_| net.site_dim).unwrap_or(1) as f64).log2())
        .sum();
    let runs: Vec<Result<(f64, Vec<OmegaCheck>)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let n = net.reseeded(seed, i as u64);
            Ok((region_coherent_information(&n, &region)?, exact_omega_checks(&n)?))
        })
        .collect();
    let runs: Vec<(f64, Vec<OmegaCheck>)> = runs.into_iter().collect::<Result<_>>()?;
    let values: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let checks: Vec<&OmegaCheck> = runs.iter().flat_map(|r| &r.1).collect();
    let passed = checks.iter().filter(|c| c.passed).count();
    let within = values.iter().filter(|&&v| v >= max_bits - 2.0).count() as f64 / samples as f64;
    Ok(NetworkExperiment {
        samples,
        seed,
        target,
        max_bits,
        region_ci_bits: Summary::of(&values),
        within_two_bits: within,
        values,
        exact_omega_checks: OmegaSummary {
            count: checks.len(),
            passed,
            max_deviation: checks.iter().map(|c| c.deviation).fold(0.0, f64::max),
            all_passed: passed == checks.len(),
        },
    })
}
