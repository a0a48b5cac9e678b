//! The validity projector as a signed polynomial in commuting idempotents.
//!
//! Each monomial is a set of systems `x`, standing for the map
//! `W ↦ ω^x ⊗ Tr_x W`. Monomials multiply by set union because the maps are
//! idempotent and commute. For a party whose teeth are `(i_1, o_1), …, (i_n, o_n)`
//! in causal order, the span of its deterministic operations has projector
//! `P_n = (1 − o_n) + o_n i_n P_{n-1}` with `P_0 = 1`; a one-tooth party gives
//! `1 − o + i o`. The projector onto valid processes is
//! `1 − ∏_X P_X + ∏_X Π_X`, `Π_X` replacing all of `X`'s systems.

use std::collections::{BTreeMap, BTreeSet};

use super::Party;
use crate::error::{Error, Result};
use crate::tensor::LabeledOperator;

pub type Monomial = BTreeSet<String>;

/// Integer-coefficient polynomial over replacement idempotents.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, i64>,
}

impl Polynomial {
    pub fn one() -> Self {
        Self::monomial(Monomial::new(), 1)
    }

    pub fn monomial(m: Monomial, coeff: i64) -> Self {
        let mut p = Self::default();
        p.add_term(m, coeff);
        p
    }

    fn add_term(&mut self, m: Monomial, coeff: i64) {
        let c = self.terms.get(&m).copied().unwrap_or(0) + coeff;
        if c == 0 {
            self.terms.remove(&m);
        } else {
            self.terms.insert(m, c);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term(m.clone(), c);
        }
        out
    }

    pub fn negate(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|(m, &c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::default();
        for (a, &ca) in &self.terms {
            for (b, &cb) in &other.terms {
                let m: Monomial = a.union(b).cloned().collect();
                out.add_term(m, ca * cb);
            }
        }
        out
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, i64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Apply the signed sum of replacement maps to `x`.
    pub fn apply(&self, x: &LabeledOperator) -> Result<LabeledOperator> {
        let mut acc = x.scale(0.0);
        for (m, c) in self.terms() {
            let labels: Vec<&str> = m.iter().map(|s| s.as_str()).collect();
            let term = x.replace_with_maximally_mixed(&labels)?;
            acc = acc.add(&term.scale(c as f64))?;
        }
        Ok(acc)
    }
}

fn nontrivial(labels: &[String], x: &LabeledOperator) -> Result<Monomial> {
    let mut out = Monomial::new();
    for l in labels {
        match x.system(l) {
            Some(s) if s.dim > 1 => {
                out.insert(l.clone());
            }
            Some(_) => {}
            None => {
                return Err(Error::PartyTable(format!("system `{l}` is not part of the operator")));
            }
        }
    }
    Ok(out)
}

/// `P_X` for one party; dimension-1 systems drop out as identities.
pub fn party_span(party: &Party, x: &LabeledOperator) -> Result<Polynomial> {
    let mut p = Polynomial::one();
    for tooth in &party.teeth {
        let o = nontrivial(&tooth.outputs, x)?;
        let i = nontrivial(&tooth.inputs, x)?;
        let oi: Monomial = o.union(&i).cloned().collect();
        p = Polynomial::one()
            .add(&Polynomial::monomial(o, -1))
            .add(&Polynomial::monomial(oi, 1).mul(&p));
    }
    Ok(p)
}

/// Expanded projector polynomial for a party table.
pub fn lv_polynomial(parties: &[Party], x: &LabeledOperator) -> Result<Polynomial> {
    let mut prod_p = Polynomial::one();
    let mut all = Monomial::new();
    for party in parties {
        prod_p = prod_p.mul(&party_span(party, x)?);
        for l in party.labels() {
            all.extend(nontrivial(&[l], x)?);
        }
    }
    Ok(Polynomial::one()
        .add(&prod_p.negate())
        .add(&Polynomial::monomial(all, 1)))
}
