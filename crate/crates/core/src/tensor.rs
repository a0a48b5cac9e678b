//! Dense complex operators over labeled tensor-product spaces.
//!
//! Row and column indices of a [`LabeledOperator`] enumerate the
//! computational basis of its systems in row-major lexicographic order: the
//! first system in the list is the most significant digit.

use std::collections::{BTreeSet, HashMap, HashSet};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Frobenius tolerance on `A - A†` before a spectral call symmetrizes.
pub const HERMITICITY_TOL: f64 = 1e-9;

/// A labeled quantum system of fixed dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemId {
    pub label: String,
    pub dim: usize,
}

impl SystemId {
    pub fn new(label: impl Into<String>, dim: usize) -> Result<Self> {
        if dim < 1 {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(Self {
            label: label.into(),
            dim,
        })
    }

    /// Shorthand for fixtures; panics on `dim == 0`.
    pub fn sys(label: &str, dim: usize) -> Self {
        Self::new(label, dim).expect("dimension must be positive")
    }
}

/// For each flat row-major index over `dims`, the sum of digit * stride.
pub(crate) fn offsets(dims: &[usize], strides: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize];
    for (&d, &s) in dims.iter().zip(strides) {
        let mut next = Vec::with_capacity(out.len() * d);
        for &o in &out {
            for k in 0..d {
                next.push(o + k * s);
            }
        }
        out = next;
    }
    out
}

pub(crate) fn strides_of(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    strides
}

/// A dense complex square matrix over an ordered list of labeled systems.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledOperator {
    systems: Vec<SystemId>,
    matrix: CMatrix,
}

impl LabeledOperator {
    pub fn new(systems: Vec<SystemId>, matrix: CMatrix) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &systems {
            if s.dim < 1 {
                return Err(Error::InvalidDimension(s.dim));
            }
            if !seen.insert(s.label.as_str()) {
                return Err(Error::DuplicateLabel(s.label.clone()));
            }
        }
        let side: usize = systems.iter().map(|s| s.dim).product();
        if matrix.nrows() != side || matrix.ncols() != side {
            return Err(Error::ShapeMismatch {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
                expected: side,
            });
        }
        Ok(Self { systems, matrix })
    }

    /// An operator on no systems: the 1x1 matrix holding `value`.
    pub fn scalar(value: C64) -> Self {
        Self {
            systems: Vec::new(),
            matrix: CMatrix::from_element(1, 1, value),
        }
    }

    pub fn identity(systems: Vec<SystemId>) -> Result<Self> {
        let d = systems.iter().map(|s| s.dim).product();
        Self::new(systems, CMatrix::identity(d, d))
    }

    /// The maximally mixed state `ω` on `systems`.
    pub fn maximally_mixed(systems: Vec<SystemId>) -> Result<Self> {
        let d: usize = systems.iter().map(|s| s.dim).product();
        Self::new(
            systems,
            CMatrix::identity(d, d).scale(1.0 / d as f64),
        )
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) ket.
    pub fn from_ket(systems: Vec<SystemId>, ket: &[C64]) -> Result<Self> {
        let d = ket.len();
        let m = CMatrix::from_fn(d, d, |r, c| ket[r] * ket[c].conj());
        Self::new(systems, m)
    }

    /// Projector onto a computational basis state given by per-system digits.
    pub fn basis_projector(systems: Vec<SystemId>, digits: &[usize]) -> Result<Self> {
        if digits.len() != systems.len() {
            return Err(Error::InvalidArgument(
                "one digit per system required".into(),
            ));
        }
        let dims: Vec<usize> = systems.iter().map(|s| s.dim).collect();
        let strides = strides_of(&dims);
        let mut idx = 0;
        for ((&k, &d), &s) in digits.iter().zip(&dims).zip(&strides) {
            if k >= d {
                return Err(Error::InvalidArgument(format!(
                    "digit {k} out of range for dimension {d}"
                )));
            }
            idx += k * s;
        }
        let side = dims.iter().product();
        let mut m = CMatrix::zeros(side, side);
        m[(idx, idx)] = C64::new(1.0, 0.0);
        Self::new(systems, m)
    }

    /// Normalized maximally entangled state `|φ₊⟩⟨φ₊|` on two systems of equal dimension.
    pub fn phi_plus(a: SystemId, b: SystemId) -> Result<Self> {
        if a.dim != b.dim {
            return Err(Error::DimensionMismatch {
                label: b.label,
                expected: a.dim,
                found: b.dim,
            });
        }
        let d = a.dim;
        let mut ket = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..d {
            ket[i * d + i] = C64::new(1.0 / (d as f64).sqrt(), 0.0);
        }
        Self::from_ket(vec![a, b], &ket)
    }

    pub fn systems(&self) -> &[SystemId] {
        &self.systems
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn labels(&self) -> Vec<&str> {
        self.systems.iter().map(|s| s.label.as_str()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.systems.iter().map(|s| s.dim).collect()
    }

    /// Matrix side, the product of all system dimensions.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.systems.iter().position(|s| s.label == label)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.position(label).is_some()
    }

    pub fn system(&self, label: &str) -> Option<&SystemId> {
        self.systems.iter().find(|s| s.label == label)
    }

    /// Product of the dimensions of the named systems.
    pub fn dim_of<S: AsRef<str>>(&self, labels: &[S]) -> Result<usize> {
        labels.iter().try_fold(1usize, |acc, l| {
            let s = self
                .system(l.as_ref())
                .ok_or_else(|| Error::UnknownLabel(l.as_ref().to_string()))?;
            Ok(acc * s.dim)
        })
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).norm()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            systems: self.systems.clone(),
            matrix: self.matrix.scale(factor),
        }
    }

    pub fn scale_complex(&self, factor: C64) -> Self {
        Self {
            systems: self.systems.clone(),
            matrix: &self.matrix * factor,
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            systems: self.systems.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    /// Same operator with the matrix replaced; the shape must agree.
    pub fn with_matrix(&self, matrix: CMatrix) -> Result<Self> {
        Self::new(self.systems.clone(), matrix)
    }

    fn check_subset<S: AsRef<str>>(&self, subset: &[S]) -> Result<BTreeSet<usize>> {
        let mut out = BTreeSet::new();
        for l in subset {
            let p = self
                .position(l.as_ref())
                .ok_or_else(|| Error::UnknownLabel(l.as_ref().to_string()))?;
            out.insert(p);
        }
        Ok(out)
    }

    /// Kronecker product; `other`'s systems follow `self`'s.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        for s in &other.systems {
            if self.contains(&s.label) {
                return Err(Error::DuplicateLabel(s.label.clone()));
            }
        }
        let mut systems = self.systems.clone();
        systems.extend(other.systems.iter().cloned());
        Ok(Self {
            systems,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }

    pub fn partial_trace<S: AsRef<str>>(&self, subset: &[S]) -> Result<Self> {
        let traced = self.check_subset(subset)?;
        if traced.is_empty() {
            return Ok(self.clone());
        }
        let dims = self.dims();
        let strides = strides_of(&dims);
        let (kept_idx, traced_idx): (Vec<usize>, Vec<usize>) =
            (0..dims.len()).partition(|k| !traced.contains(k));
        let pick = |idx: &[usize], v: &[usize]| idx.iter().map(|&k| v[k]).collect::<Vec<_>>();
        let ko = offsets(&pick(&kept_idx, &dims), &pick(&kept_idx, &strides));
        let to = offsets(&pick(&traced_idx, &dims), &pick(&traced_idx, &strides));
        let n = ko.len();
        let m = &self.matrix;
        let out = CMatrix::from_fn(n, n, |a, b| {
            to.iter()
                .map(|&t| m[(ko[a] + t, ko[b] + t)])
                .fold(C64::new(0.0, 0.0), |acc, x| acc + x)
        });
        let systems = kept_idx.iter().map(|&k| self.systems[k].clone()).collect();
        Ok(Self {
            systems,
            matrix: out,
        })
    }

    /// Reduced operator on `keep`, in the operator's own system order.
    pub fn reduce_to<S: AsRef<str>>(&self, keep: &[S]) -> Result<Self> {
        self.check_subset(keep)?;
        let keep: HashSet<&str> = keep.iter().map(|s| s.as_ref()).collect();
        let traced: Vec<String> = self
            .systems
            .iter()
            .filter(|s| !keep.contains(s.label.as_str()))
            .map(|s| s.label.clone())
            .collect();
        self.partial_trace(&traced)
    }

    pub fn permute_systems<S: AsRef<str>>(&self, new_order: &[S]) -> Result<Self> {
        if new_order.len() != self.systems.len() {
            return Err(Error::NotAPermutation);
        }
        let mut pos = Vec::with_capacity(new_order.len());
        let mut seen = HashSet::new();
        for l in new_order {
            let p = self.position(l.as_ref()).ok_or(Error::NotAPermutation)?;
            if !seen.insert(p) {
                return Err(Error::NotAPermutation);
            }
            pos.push(p);
        }
        if pos.iter().enumerate().all(|(i, &p)| i == p) {
            return Ok(self.clone());
        }
        let dims = self.dims();
        let strides = strides_of(&dims);
        let map = offsets(
            &pos.iter().map(|&p| dims[p]).collect::<Vec<_>>(),
            &pos.iter().map(|&p| strides[p]).collect::<Vec<_>>(),
        );
        let m = &self.matrix;
        let n = map.len();
        let out = CMatrix::from_fn(n, n, |r, c| m[(map[r], map[c])]);
        Ok(Self {
            systems: pos.iter().map(|&p| self.systems[p].clone()).collect(),
            matrix: out,
        })
    }

    /// Partial transpose on the given systems (full transpose when all are named).
    pub fn transpose<S: AsRef<str>>(&self, subset: &[S]) -> Result<Self> {
        let sub = self.check_subset(subset)?;
        if sub.is_empty() {
            return Ok(self.clone());
        }
        if sub.len() == self.systems.len() {
            return Ok(Self {
                systems: self.systems.clone(),
                matrix: self.matrix.transpose(),
            });
        }
        let dims = self.dims();
        let strides = strides_of(&dims);
        let n = self.dim();
        let (s_idx, r_idx): (Vec<usize>, Vec<usize>) =
            (0..dims.len()).partition(|k| sub.contains(k));
        let pick = |idx: &[usize], v: &[usize]| idx.iter().map(|&k| v[k]).collect::<Vec<_>>();
        let so = offsets(&pick(&s_idx, &dims), &pick(&s_idx, &strides));
        let ro = offsets(&pick(&r_idx, &dims), &pick(&r_idx, &strides));
        let mut s_part = vec![0usize; n];
        let mut r_part = vec![0usize; n];
        for &s in &so {
            for &r in &ro {
                s_part[s + r] = s;
                r_part[s + r] = r;
            }
        }
        let m = &self.matrix;
        let out = CMatrix::from_fn(n, n, |r, c| {
            m[(s_part[c] + r_part[r], s_part[r] + r_part[c])]
        });
        Ok(Self {
            systems: self.systems.clone(),
            matrix: out,
        })
    }

    /// Ascending real spectrum of a Hermitian operator.
    pub fn eigvals_hermitian(&self) -> Result<Vec<f64>> {
        Ok(hermitian_eigh(&self.matrix, false)?.0)
    }

    /// `ω^subset ⊗ Tr_subset(A)` with the subset systems reinstated in place.
    pub fn replace_with_maximally_mixed<S: AsRef<str>>(&self, subset: &[S]) -> Result<Self> {
        let sub = self.check_subset(subset)?;
        if sub.is_empty() {
            return Ok(self.clone());
        }
        let traced: Vec<SystemId> = sub.iter().map(|&k| self.systems[k].clone()).collect();
        let labels: Vec<&str> = traced.iter().map(|s| s.label.as_str()).collect();
        let reduced = self.partial_trace(&labels)?;
        let omega = Self::maximally_mixed(traced)?;
        let joined = omega.tensor(&reduced)?;
        let order: Vec<&str> = self.labels();
        joined.permute_systems(&order)
    }

    /// Rename systems; labels absent from `map` are kept.
    pub fn relabel(&self, map: &HashMap<String, String>) -> Result<Self> {
        let systems: Vec<SystemId> = self
            .systems
            .iter()
            .map(|s| SystemId {
                label: map.get(&s.label).cloned().unwrap_or_else(|| s.label.clone()),
                dim: s.dim,
            })
            .collect();
        Self::new(systems, self.matrix.clone())
    }

    /// Express `other` in `self`'s system order, failing unless both cover the same systems.
    pub fn aligned(&self, other: &Self) -> Result<Self> {
        let order = self.labels();
        let o = other.permute_systems(&order)?;
        for (a, b) in self.systems.iter().zip(&o.systems) {
            if a.dim != b.dim {
                return Err(Error::DimensionMismatch {
                    label: a.label.clone(),
                    expected: a.dim,
                    found: b.dim,
                });
            }
        }
        Ok(o)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let o = self.aligned(other)?;
        Ok(Self {
            systems: self.systems.clone(),
            matrix: &self.matrix + &o.matrix,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let o = self.aligned(other)?;
        Ok(Self {
            systems: self.systems.clone(),
            matrix: &self.matrix - &o.matrix,
        })
    }

    /// Frobenius distance after aligning system orders.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.matrix.norm())
    }

    /// Drop dimension-1 systems.
    pub fn without_trivial(&self) -> Self {
        Self {
            systems: self.systems.iter().filter(|s| s.dim > 1).cloned().collect(),
            matrix: self.matrix.clone(),
        }
    }

    /// Adjoin dimension-1 systems that are not present yet.
    pub fn with_trivial(&self, labels: &[String]) -> Result<Self> {
        let mut systems = self.systems.clone();
        for l in labels {
            if !self.contains(l) {
                systems.push(SystemId::new(l.clone(), 1)?);
            }
        }
        Self::new(systems, self.matrix.clone())
    }

    /// Link product over all shared labels: `Tr_S[(A^{T_S} ⊗ 1)(1 ⊗ B)]`.
    ///
    /// The result carries `self`'s unshared systems followed by `other`'s.
    pub fn link(&self, other: &Self) -> Result<Self> {
        let mut shared = Vec::new();
        for s in &self.systems {
            if let Some(t) = other.system(&s.label) {
                if t.dim != s.dim {
                    return Err(Error::DimensionMismatch {
                        label: s.label.clone(),
                        expected: s.dim,
                        found: t.dim,
                    });
                }
                shared.push(s.label.clone());
            }
        }
        let a_dims = self.dims();
        let a_str = strides_of(&a_dims);
        let b_dims = other.dims();
        let b_str = strides_of(&b_dims);
        let x_idx: Vec<usize> = (0..a_dims.len())
            .filter(|&k| !shared.contains(&self.systems[k].label))
            .collect();
        let y_idx: Vec<usize> = (0..b_dims.len())
            .filter(|&k| !shared.contains(&other.systems[k].label))
            .collect();
        let sa_idx: Vec<usize> = shared.iter().map(|l| self.position(l).unwrap()).collect();
        let sb_idx: Vec<usize> = shared.iter().map(|l| other.position(l).unwrap()).collect();
        let pick = |idx: &[usize], v: &[usize]| idx.iter().map(|&k| v[k]).collect::<Vec<_>>();
        let xo = offsets(&pick(&x_idx, &a_dims), &pick(&x_idx, &a_str));
        let yo = offsets(&pick(&y_idx, &b_dims), &pick(&y_idx, &b_str));
        let sao = offsets(&pick(&sa_idx, &a_dims), &pick(&sa_idx, &a_str));
        let sbo = offsets(&pick(&sb_idx, &b_dims), &pick(&sb_idx, &b_str));
        let (dx, dy, ds) = (xo.len(), yo.len(), sao.len());
        let a = &self.matrix;
        let b = &other.matrix;
        // Ã[(x x'), (s' s)] = A[(x, s'), (x', s)]
        let at = CMatrix::from_fn(dx * dx, ds * ds, |r, c| {
            let (x, xp) = (r / dx, r % dx);
            let (sp, s) = (c / ds, c % ds);
            a[(xo[x] + sao[sp], xo[xp] + sao[s])]
        });
        // B̃[(s' s), (y y')] = B[(s', y), (s, y')]
        let bt = CMatrix::from_fn(ds * ds, dy * dy, |r, c| {
            let (sp, s) = (r / ds, r % ds);
            let (y, yp) = (c / dy, c % dy);
            b[(sbo[sp] + yo[y], sbo[s] + yo[yp])]
        });
        let rt = at * bt;
        let n = dx * dy;
        let out = CMatrix::from_fn(n, n, |r, c| {
            let (x, y) = (r / dy, r % dy);
            let (xp, yp) = (c / dy, c % dy);
            rt[(x * dx + xp, y * dy + yp)]
        });
        let mut systems: Vec<SystemId> = x_idx.iter().map(|&k| self.systems[k].clone()).collect();
        systems.extend(y_idx.iter().map(|&k| other.systems[k].clone()));
        Self::new(systems, out)
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Rejects inputs whose Frobenius deviation from hermiticity exceeds
/// [`HERMITICITY_TOL`]; otherwise works on `(A + A†)/2`.
pub fn hermitian_eigh(m: &CMatrix, vectors: bool) -> Result<(Vec<f64>, Option<CMatrix>)> {
    let dev = (m - m.adjoint()).norm();
    if dev > HERMITICITY_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let n = sym.nrows();
    if n == 1 {
        return Ok((vec![sym[(0, 0)].re], vectors.then(|| CMatrix::identity(1, 1))));
    }
    if !vectors {
        let mut vals: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        return Ok((vals, None));
    }
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((vals, Some(vecs)))
}

/// Apply a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    let (vals, vecs) = hermitian_eigh(m, true)?;
    let v = vecs.unwrap();
    let n = vals.len();
    let mut scaled = v.clone();
    for c in 0..n {
        let fv = f(vals[c]);
        for r in 0..n {
            scaled[(r, c)] *= fv;
        }
    }
    Ok(scaled * v.adjoint())
}

#[derive(Serialize, Deserialize)]
pub(crate) struct OperatorJson {
    pub systems: Vec<SystemId>,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

impl From<&LabeledOperator> for OperatorJson {
    fn from(op: &LabeledOperator) -> Self {
        let n = op.dim();
        Self {
            systems: op.systems.clone(),
            matrix: (0..n)
                .map(|r| {
                    (0..n)
                        .map(|c| {
                            let z = op.matrix[(r, c)];
                            [z.re, z.im]
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

impl TryFrom<OperatorJson> for LabeledOperator {
    type Error = Error;

    fn try_from(j: OperatorJson) -> Result<Self> {
        let n = j.matrix.len();
        if j.matrix.iter().any(|row| row.len() != n) {
            return Err(Error::Serialization("matrix must be square".into()));
        }
        let m = CMatrix::from_fn(n, n, |r, c| {
            let [re, im] = j.matrix[r][c];
            C64::new(re, im)
        });
        LabeledOperator::new(j.systems, m)
    }
}

impl Serialize for LabeledOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        OperatorJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for LabeledOperator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = OperatorJson::deserialize(d)?;
        LabeledOperator::try_from(j).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density, random_hermitian, Stream};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn maximally_mixed_states_compose() {
        let a = LabeledOperator::maximally_mixed(vec![SystemId::sys("a", 2)]).unwrap();
        let b = LabeledOperator::maximally_mixed(vec![SystemId::sys("b", 3)]).unwrap();
        let ab = a.tensor(&b).unwrap();
        assert_eq!(ab.labels(), vec!["a", "b"]);
        assert!((ab.matrix() - CMatrix::identity(6, 6).scale(1.0 / 6.0)).norm() < 1e-15);
    }

    #[test]
    fn tensor_of_basis_projectors() {
        let a = LabeledOperator::basis_projector(vec![SystemId::sys("a", 2)], &[0]).unwrap();
        let b = LabeledOperator::basis_projector(vec![SystemId::sys("b", 2)], &[1]).unwrap();
        let ab = a.tensor(&b).unwrap();
        let want = LabeledOperator::basis_projector(
            vec![SystemId::sys("a", 2), SystemId::sys("b", 2)],
            &[0, 1],
        )
        .unwrap();
        assert_eq!(ab, want);
        assert_eq!(ab.matrix()[(1, 1)], c(1.0));
    }

    #[test]
    fn tensor_rejects_duplicate_label() {
        let a = LabeledOperator::identity(vec![SystemId::sys("a", 2)]).unwrap();
        assert_eq!(a.tensor(&a), Err(Error::DuplicateLabel("a".into())));
    }

    #[test]
    fn tensor_matches_index_formula() {
        let mut rng = Stream::new(11, 0);
        let a = random_hermitian(&mut rng, 2);
        let b = random_hermitian(&mut rng, 2);
        let oa = LabeledOperator::new(vec![SystemId::sys("a", 2)], a.clone()).unwrap();
        let ob = LabeledOperator::new(vec![SystemId::sys("b", 2)], b.clone()).unwrap();
        let ab = oa.tensor(&ob).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let want = a[(i, j)] * b[(k, l)];
                        assert!((ab.matrix()[(2 * i + k, 2 * j + l)] - want).norm() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn partial_trace_of_phi_plus() {
        let phi = LabeledOperator::phi_plus(SystemId::sys("a", 2), SystemId::sys("b", 2)).unwrap();
        let red = phi.partial_trace(&["b"]).unwrap();
        let omega = LabeledOperator::maximally_mixed(vec![SystemId::sys("a", 2)]).unwrap();
        assert!(red.distance(&omega).unwrap() < 1e-15);
        let none: [&str; 0] = [];
        assert_eq!(phi.partial_trace(&none).unwrap(), phi);
        assert_eq!(
            phi.partial_trace(&["z"]),
            Err(Error::UnknownLabel("z".into()))
        );
    }

    #[test]
    fn partial_trace_matches_index_sum() {
        let mut rng = Stream::new(3, 0);
        let rho = random_density(&mut rng, 6, 6);
        let op = LabeledOperator::new(vec![SystemId::sys("a", 2), SystemId::sys("b", 3)], rho.clone())
            .unwrap();
        let red = op.partial_trace(&["b"]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut want = c(0.0);
                for k in 0..3 {
                    want += rho[(3 * i + k, 3 * j + k)];
                }
                assert!((red.matrix()[(i, j)] - want).norm() < 1e-14);
            }
        }
        assert!((red.trace() - op.trace()).norm() < 1e-12);
    }

    #[test]
    fn permutation_swaps_kronecker_factors() {
        let mut rng = Stream::new(5, 0);
        let x = LabeledOperator::new(vec![SystemId::sys("x", 2)], random_hermitian(&mut rng, 2)).unwrap();
        let y = LabeledOperator::new(vec![SystemId::sys("y", 3)], random_hermitian(&mut rng, 3)).unwrap();
        let xy = x.tensor(&y).unwrap();
        let yx = y.tensor(&x).unwrap();
        let swapped = xy.permute_systems(&["y", "x"]).unwrap();
        assert!((swapped.matrix() - yx.matrix()).norm() < 1e-15);
        let back = swapped.permute_systems(&["x", "y"]).unwrap();
        assert_eq!(back, xy);
        let e1 = xy.eigvals_hermitian().unwrap();
        let e2 = swapped.eigvals_hermitian().unwrap();
        for (a, b) in e1.iter().zip(&e2) {
            assert!((a - b).abs() < 1e-10);
        }
        assert_eq!(xy.permute_systems(&["x", "x"]), Err(Error::NotAPermutation));
        assert_eq!(xy.permute_systems(&["x"]), Err(Error::NotAPermutation));
    }

    #[test]
    fn partial_transpose_of_phi_plus_is_half_swap() {
        let phi = LabeledOperator::phi_plus(SystemId::sys("a", 2), SystemId::sys("b", 2)).unwrap();
        let pt = phi.transpose(&["b"]).unwrap();
        let mut swap = CMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                swap[(2 * i + j, 2 * j + i)] = c(0.5);
            }
        }
        assert!((pt.matrix() - swap).norm() < 1e-15);
        let ev = pt.eigvals_hermitian().unwrap();
        let want = [-0.5, 0.5, 0.5, 0.5];
        for (a, b) in ev.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(pt.transpose(&["b"]).unwrap(), phi);
    }

    #[test]
    fn full_transpose_of_hermitian_is_conjugate() {
        let mut rng = Stream::new(8, 0);
        let h = random_hermitian(&mut rng, 4);
        let op = LabeledOperator::new(vec![SystemId::sys("a", 2), SystemId::sys("b", 2)], h.clone()).unwrap();
        let t = op.transpose(&["a", "b"]).unwrap();
        assert!((t.matrix() - h.map(|z| z.conj())).norm() < 1e-15);
    }

    #[test]
    fn simple_spectra() {
        let w = LabeledOperator::maximally_mixed(vec![SystemId::sys("a", 4)]).unwrap();
        for v in w.eigvals_hermitian().unwrap() {
            assert!((v - 0.25).abs() < 1e-15);
        }
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = c(0.7);
        m[(1, 1)] = c(0.3);
        let d = LabeledOperator::new(vec![SystemId::sys("a", 2)], m).unwrap();
        let ev = d.eigvals_hermitian().unwrap();
        assert!((ev[0] - 0.3).abs() < 1e-15 && (ev[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn non_hermitian_is_rejected_with_deviation() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = c(1.0);
        let op = LabeledOperator::new(vec![SystemId::sys("a", 2)], m).unwrap();
        match op.eigvals_hermitian() {
            Err(Error::NotHermitian(dev)) => assert!((dev - 2f64.sqrt()).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn replace_with_maximally_mixed_examples() {
        let phi = LabeledOperator::phi_plus(SystemId::sys("a", 2), SystemId::sys("b", 2)).unwrap();
        let r = phi.replace_with_maximally_mixed(&["a"]).unwrap();
        let omega = LabeledOperator::maximally_mixed(phi.systems().to_vec()).unwrap();
        assert!(r.distance(&omega).unwrap() < 1e-15);
        assert_eq!(r.labels(), vec!["a", "b"]);
        let rr = omega.replace_with_maximally_mixed(&["b"]).unwrap();
        assert!(rr.distance(&omega).unwrap() < 1e-15);
    }

    #[test]
    fn link_with_trivial_share_is_tensor() {
        let mut rng = Stream::new(1, 0);
        let a = LabeledOperator::new(vec![SystemId::sys("a", 2)], random_hermitian(&mut rng, 2)).unwrap();
        let b = LabeledOperator::new(vec![SystemId::sys("b", 3)], random_hermitian(&mut rng, 3)).unwrap();
        assert!(a.link(&b).unwrap().distance(&a.tensor(&b).unwrap()).unwrap() < 1e-14);
    }

    #[test]
    fn full_link_is_trace_of_transpose_product() {
        let mut rng = Stream::new(2, 0);
        let sys = vec![SystemId::sys("a", 2), SystemId::sys("b", 3)];
        let a = LabeledOperator::new(sys.clone(), random_hermitian(&mut rng, 6)).unwrap();
        let b = LabeledOperator::new(sys, random_hermitian(&mut rng, 6)).unwrap();
        let l = a.link(&b).unwrap();
        assert!(l.systems().is_empty());
        let want = (a.matrix().transpose() * b.matrix()).trace();
        assert!((l.matrix()[(0, 0)] - want).norm() < 1e-12);
    }

    #[test]
    fn serialization_round_trip() {
        let phi = LabeledOperator::phi_plus(SystemId::sys("a", 2), SystemId::sys("b", 2)).unwrap();
        let s = serde_json::to_string(&phi).unwrap();
        assert!(s.starts_with("{\"systems\":[{\"label\":\"a\",\"dim\":2}"));
        let back: LabeledOperator = serde_json::from_str(&s).unwrap();
        assert_eq!(back, phi);
        let bad = r#"{"systems":[{"label":"a","dim":2}],"matrix":[[[1,0]]]}"#;
        assert!(serde_json::from_str::<LabeledOperator>(bad).is_err());
    }
}
