//! Standard channel constructors. All return trace-preserving maps in
//! standard Choi form.

use super::{KrausSet, Normalization, QuantumMap};
use crate::error::{Error, Result};
use crate::tensor::{CMatrix, LabeledOperator, SystemId, C64};

fn check_prob(name: &'static str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::ParameterOutOfRange { name, value: p });
    }
    Ok(())
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

pub fn identity(d: usize, input: &str, output: &str) -> Result<QuantumMap> {
    let i = SystemId::new(input, d)?;
    let o = SystemId::new(output, d)?;
    QuantumMap::choi_from_kraus(KrausSet::new(vec![CMatrix::identity(d, d)])?, vec![i], vec![o])
}

pub fn unitary_channel(u: &CMatrix, inputs: Vec<SystemId>, outputs: Vec<SystemId>) -> Result<QuantumMap> {
    QuantumMap::choi_from_kraus(KrausSet::new(vec![u.clone()])?, inputs, outputs)
}

/// `ρ ↦ (1 − p) ρ + p Tr(ρ) 1/d`.
pub fn depolarizing(p: f64, d: usize, input: &str, output: &str) -> Result<QuantumMap> {
    check_prob("p", p)?;
    let i = SystemId::new(input, d)?;
    let o = SystemId::new(output, d)?;
    let n = d * d;
    let mut c = CMatrix::identity(n, n).scale(p / d as f64);
    for a in 0..d {
        for b in 0..d {
            c[(a * d + a, b * d + b)] += C64::new(1.0 - p, 0.0);
        }
    }
    QuantumMap::from_choi(
        LabeledOperator::new(vec![o, i], c)?,
        &[input],
        &[output],
        Normalization::StandardChoi,
    )
}

/// Erasure with probability `p`; the output space is the input space plus one flag level (index `d`).
pub fn erasure(p: f64, d: usize, input: &str, output: &str) -> Result<QuantumMap> {
    check_prob("p", p)?;
    let i = SystemId::new(input, d)?;
    let o = SystemId::new(output, d + 1)?;
    let mut ops = Vec::with_capacity(d + 1);
    let mut keep = CMatrix::zeros(d + 1, d);
    for k in 0..d {
        keep[(k, k)] = C64::new((1.0 - p).sqrt(), 0.0);
    }
    ops.push(keep);
    for k in 0..d {
        let mut e = CMatrix::zeros(d + 1, d);
        e[(d, k)] = C64::new(p.sqrt(), 0.0);
        ops.push(e);
    }
    QuantumMap::choi_from_kraus(KrausSet::new(ops)?, vec![i], vec![o])
}

/// `ρ ↦ (1 − p) ρ + p diag(ρ)` in the computational basis.
pub fn dephasing(p: f64, d: usize, input: &str, output: &str) -> Result<QuantumMap> {
    check_prob("p", p)?;
    let i = SystemId::new(input, d)?;
    let o = SystemId::new(output, d)?;
    let mut ops = vec![CMatrix::identity(d, d).scale((1.0 - p).sqrt())];
    for k in 0..d {
        let mut e = CMatrix::zeros(d, d);
        e[(k, k)] = C64::new(p.sqrt(), 0.0);
        ops.push(e);
    }
    QuantumMap::choi_from_kraus(KrausSet::new(ops)?, vec![i], vec![o])
}

/// Completely dephase in the computational basis and copy the classical value:
/// `|i⟩⟨j| ↦ δ_ij |i⟩⟨i| ⊗ |i⟩⟨i|`.
pub fn classical_copy(d: usize, input: &str, output: &str, copy: &str) -> Result<QuantumMap> {
    let i = SystemId::new(input, d)?;
    let o = SystemId::new(output, d)?;
    let c = SystemId::new(copy, d)?;
    let ops = (0..d)
        .map(|k| {
            let mut e = CMatrix::zeros(d * d, d);
            e[(k * d + k, k)] = one();
            e
        })
        .collect();
    QuantumMap::choi_from_kraus(KrausSet::new(ops)?, vec![i], vec![o, c])
}

/// Computational-basis measurement written to a classical register: `ρ ↦ Σ_k ⟨k|ρ|k⟩ |k⟩⟨k|`.
pub fn measure_to_register(d: usize, input: &str, output: &str) -> Result<QuantumMap> {
    dephasing(1.0, d, input, output)
}

/// Discard the inputs and prepare `sigma` (its systems become the outputs).
pub fn replacement(sigma: &LabeledOperator, inputs: Vec<SystemId>) -> Result<QuantumMap> {
    let id = LabeledOperator::identity(inputs.clone())?;
    let choi = sigma.tensor(&id)?;
    let outs: Vec<String> = sigma.systems().iter().map(|s| s.label.clone()).collect();
    let ins: Vec<String> = inputs.iter().map(|s| s.label.clone()).collect();
    QuantumMap::from_choi(choi, &ins, &outs, Normalization::StandardChoi)
}

/// Trace out the inputs.
pub fn discard(inputs: Vec<SystemId>) -> Result<QuantumMap> {
    replacement(&LabeledOperator::scalar(one()), inputs)
}

/// Prepare a state from nothing.
pub fn preparation(sigma: &LabeledOperator) -> Result<QuantumMap> {
    replacement(sigma, Vec::new())
}

/// A general Stinespring-form channel from Kraus operators.
pub fn from_kraus(ops: Vec<CMatrix>, inputs: Vec<SystemId>, outputs: Vec<SystemId>) -> Result<QuantumMap> {
    QuantumMap::choi_from_kraus(KrausSet::new(ops)?, inputs, outputs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density, random_kraus, Stream};

    fn sys(l: &str, d: usize) -> SystemId {
        SystemId::sys(l, d)
    }

    fn all_constructors() -> Vec<QuantumMap> {
        let u = crate::choi::haar_random_unitary(3, 1).unwrap();
        vec![
            identity(3, "a", "b").unwrap(),
            unitary_channel(&u, vec![sys("a", 3)], vec![sys("b", 3)]).unwrap(),
            depolarizing(0.4, 3, "a", "b").unwrap(),
            erasure(0.3, 3, "a", "b").unwrap(),
            dephasing(0.7, 3, "a", "b").unwrap(),
            classical_copy(3, "a", "b", "c").unwrap(),
            replacement(&LabeledOperator::maximally_mixed(vec![sys("b", 2)]).unwrap(), vec![sys("a", 3)])
                .unwrap(),
            discard(vec![sys("a", 3)]).unwrap(),
        ]
    }

    #[test]
    fn constructors_are_cptp() {
        for m in all_constructors() {
            assert!(m.min_choi_eigenvalue().unwrap() >= -1e-10);
            assert!(m.tp_deviation().unwrap() <= 1e-9, "{m:?}");
        }
    }

    #[test]
    fn dephasing_plus_state() {
        let plus = LabeledOperator::from_ket(
            vec![sys("a", 2)],
            &[C64::new(0.5f64.sqrt(), 0.0), C64::new(0.5f64.sqrt(), 0.0)],
        )
        .unwrap();
        let out = dephasing(1.0, 2, "a", "b").unwrap().apply_map(&plus).unwrap();
        let omega = LabeledOperator::maximally_mixed(vec![sys("b", 2)]).unwrap();
        assert!(out.distance(&omega).unwrap() < 1e-15);
    }

    #[test]
    fn erasure_extremes() {
        let mut rng = Stream::new(2, 0);
        let rho = LabeledOperator::new(vec![sys("a", 2)], random_density(&mut rng, 2, 2)).unwrap();
        let e0 = erasure(0.0, 2, "a", "b").unwrap().apply_map(&rho).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                let want = if r < 2 && c < 2 { rho.matrix()[(r, c)] } else { C64::new(0.0, 0.0) };
                assert!((e0.matrix()[(r, c)] - want).norm() < 1e-15);
            }
        }
        let e1 = erasure(1.0, 2, "a", "b").unwrap().apply_map(&rho).unwrap();
        let flag = LabeledOperator::basis_projector(vec![sys("b", 3)], &[2]).unwrap();
        assert!(e1.distance(&flag).unwrap() < 1e-14);
    }

    #[test]
    fn depolarizing_spectrum_matches_pauli_twirl() {
        for p in [0.0, 0.25, 0.6, 1.0] {
            let m = depolarizing(p, 2, "a", "b").unwrap();
            let mut ev = m.choi().eigvals_hermitian().unwrap();
            ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
            // oracle: Pauli Kraus set with weights (1 − 3p/4, p/4, p/4, p/4)
            let x = CMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0].map(|v| C64::new(v, 0.0)));
            let y = CMatrix::from_row_slice(
                2,
                2,
                &[C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
            );
            let z = CMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0].map(|v| C64::new(v, 0.0)));
            let ops = vec![
                CMatrix::identity(2, 2).scale((1.0 - 0.75 * p).sqrt()),
                x.scale((p / 4.0).sqrt()),
                y.scale((p / 4.0).sqrt()),
                z.scale((p / 4.0).sqrt()),
            ];
            let oracle = from_kraus(ops, vec![sys("a", 2)], vec![sys("b", 2)]).unwrap();
            let mut want = oracle.choi().eigvals_hermitian().unwrap();
            want.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (a, b) in ev.iter().zip(&want) {
                assert!((a - b).abs() < 1e-12);
            }
            assert!((ev[3] - (2.0 - 1.5 * p)).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_range_parameters() {
        assert!(matches!(depolarizing(1.5, 2, "a", "b"), Err(Error::ParameterOutOfRange { .. })));
        assert!(matches!(erasure(-0.1, 2, "a", "b"), Err(Error::ParameterOutOfRange { .. })));
        assert!(matches!(dephasing(f64::NAN, 2, "a", "b"), Err(Error::ParameterOutOfRange { .. })));
        assert!(matches!(identity(0, "a", "b"), Err(Error::InvalidDimension(0))));
    }

    #[test]
    fn copy_then_discard_is_dephasing() {
        let cc = classical_copy(3, "a", "b", "c").unwrap();
        let drop = discard(vec![sys("c", 3)]).unwrap();
        let composed = crate::choi::link_product(&cc, &drop).unwrap();
        let deph = dephasing(1.0, 3, "a", "b").unwrap();
        assert!(composed.choi().distance(deph.choi()).unwrap() < 1e-14);
    }

    #[test]
    fn classical_copy_commutes_with_dephasing() {
        let mut rng = Stream::new(6, 0);
        let rho = LabeledOperator::new(vec![sys("a", 3)], random_density(&mut rng, 3, 3)).unwrap();
        let cc = classical_copy(3, "a", "b", "c").unwrap();
        let direct = cc.apply_map(&rho).unwrap();
        let pre = dephasing(1.0, 3, "a", "x").unwrap().apply_map(&rho).unwrap();
        let via = classical_copy(3, "x", "b", "c").unwrap().apply_map(&pre).unwrap();
        assert_eq!(direct.matrix(), via.matrix());
    }

    #[test]
    fn kraus_recovered_from_choi() {
        let mut rng = Stream::new(12, 0);
        let ks = random_kraus(&mut rng, 2, 3, 2).unwrap();
        let m = from_kraus(ks, vec![sys("a", 2)], vec![sys("b", 3)]).unwrap();
        let stripped = QuantumMap::from_choi(m.choi().clone(), &["a"], &["b"], Normalization::StandardChoi).unwrap();
        let k2 = stripped.kraus().unwrap();
        let rebuilt = from_kraus(k2.operators, vec![sys("a", 2)], vec![sys("b", 3)]).unwrap();
        assert!(rebuilt.choi().distance(m.choi()).unwrap() < 1e-10);
    }
}
