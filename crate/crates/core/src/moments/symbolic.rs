//! Closed-form closure polynomials with exact integer coefficients.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use super::algebra::{MomentSet, MAX_CLOSURE_TARGET_ORDER};
use super::MultiIndex;
use crate::error::{Error, Result};

/// A product of base-moment powers, sorted by index.
pub type Monomial = Vec<(MultiIndex, u32)>;

/// Integer-coefficient polynomial in moment variables `m_c`.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct MomentPolynomial {
    terms: BTreeMap<Monomial, i128>,
}

impl MomentPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: i128) -> Self {
        let mut p = Self::zero();
        p.add_term(Vec::new(), c);
        p
    }

    /// The single variable `m_index`; the zero index is the constant 1.
    pub fn variable(index: &MultiIndex) -> Self {
        if index.order() == 0 {
            return Self::constant(1);
        }
        let mut p = Self::zero();
        p.add_term(vec![(index.clone(), 1)], 1);
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, i128)>) -> Self {
        let mut p = Self::zero();
        for (mut m, c) in terms {
            m.sort();
            p.add_term(m, c);
        }
        p
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, i128> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, m: Monomial, c: i128) {
        if c == 0 {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == 0 {
                    o.remove();
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &MomentPolynomial, scale: i128) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c * scale);
        }
    }

    pub fn mul(&self, other: &MomentPolynomial) -> MomentPolynomial {
        let mut out = MomentPolynomial::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(merge(ma, mb), ca * cb);
            }
        }
        out
    }

    /// Evaluates on a moment set holding every referenced variable.
    pub fn eval(&self, moments: &MomentSet) -> Result<f64> {
        let mut total = 0.0;
        for (m, c) in &self.terms {
            let mut t = *c as f64;
            for (idx, e) in m {
                let v = moments.get(idx).ok_or_else(|| Error::IncompleteMoments {
                    missing: vec![idx.clone()],
                })?;
                t *= v.powi(*e as i32);
            }
            total += t;
        }
        Ok(total)
    }
}

fn merge(a: &Monomial, b: &Monomial) -> Monomial {
    let mut map: BTreeMap<MultiIndex, u32> = a.iter().cloned().collect();
    for (idx, e) in b {
        *map.entry(idx.clone()).or_insert(0) += e;
    }
    map.into_iter().collect()
}

/// Terms appear in monomial order, e.g. `3 m_1 m_2 - 2 m_1^3`.
impl fmt::Display for MomentPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let sign = if *c < 0 { "-" } else { "+" };
            if i == 0 {
                if *c < 0 {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let a = c.unsigned_abs();
            let vars: Vec<String> = m
                .iter()
                .map(|(idx, e)| {
                    if *e == 1 {
                        idx.key()
                    } else {
                        format!("{}^{e}", idx.key())
                    }
                })
                .collect();
            match (a, vars.is_empty()) {
                (_, true) => write!(f, "{a}")?,
                (1, false) => write!(f, "{}", vars.join(" "))?,
                _ => write!(f, "{a} {}", vars.join(" "))?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for MomentPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

struct Builder {
    width: usize,
    p: u32,
    kappa: HashMap<MultiIndex, MomentPolynomial>,
    moments: HashMap<MultiIndex, MomentPolynomial>,
}

impl Builder {
    fn cumulant(&mut self, n: &MultiIndex) -> MomentPolynomial {
        if let Some(k) = self.kappa.get(n) {
            return k.clone();
        }
        let j = n.first_nonzero().expect("cumulant of order >= 1");
        let unit = MultiIndex::unit(self.width, j);
        let base = n.minus(&unit).expect("n_j > 0");
        let mut acc = MomentPolynomial::variable(n);
        for k in base.sub_indices() {
            if k == base {
                continue;
            }
            let term = self
                .cumulant(&k.plus(&unit))
                .mul(&MomentPolynomial::variable(
                    &base.minus(&k).expect("k <= base"),
                ));
            acc.add_scaled(&term, -(base.binomial(&k) as i128));
        }
        self.kappa.insert(n.clone(), acc.clone());
        acc
    }

    fn moment(&mut self, n: &MultiIndex) -> MomentPolynomial {
        if n.order() <= self.p {
            return MomentPolynomial::variable(n);
        }
        if let Some(m) = self.moments.get(n) {
            return m.clone();
        }
        let j = n.first_nonzero().expect("order > p >= 1");
        let unit = MultiIndex::unit(self.width, j);
        let base = n.minus(&unit).expect("n_j > 0");
        let mut acc = MomentPolynomial::zero();
        for k in base.sub_indices() {
            if k.order() + 1 > self.p {
                continue;
            }
            let kap = self.cumulant(&k.plus(&unit));
            let rest = self.moment(&base.minus(&k).expect("k <= base"));
            acc.add_scaled(&kap.mul(&rest), base.binomial(&k) as i128);
        }
        self.moments.insert(n.clone(), acc.clone());
        acc
    }
}

/// The closure of `target` as an exact polynomial in the moments of order
/// `1..=closure_order`.
pub fn closure_polynomial(target: &MultiIndex, closure_order: u32) -> Result<MomentPolynomial> {
    let order = target.order();
    if order <= closure_order {
        return Err(Error::ClosureNotNeeded {
            order,
            closure_order,
        });
    }
    if order > MAX_CLOSURE_TARGET_ORDER {
        return Err(Error::OrderCap {
            order,
            cap: MAX_CLOSURE_TARGET_ORDER,
        });
    }
    if closure_order == 0 {
        return Err(Error::InvalidInput(
            "closure order must be at least 1".into(),
        ));
    }
    let mut b = Builder {
        width: target.width(),
        p: closure_order,
        kappa: HashMap::new(),
        moments: HashMap::new(),
    };
    Ok(b.moment(target))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(e: &[u8]) -> MultiIndex {
        MultiIndex::from(e)
    }

    #[test]
    fn univariate_third_and_fourth() {
        let m3 = closure_polynomial(&[3].into(), 2).unwrap();
        let expect = MomentPolynomial::from_terms([
            (vec![(var(&[1]), 1), (var(&[2]), 1)], 3),
            (vec![(var(&[1]), 3)], -2),
        ]);
        assert_eq!(m3, expect);
        let m4 = closure_polynomial(&[4].into(), 2).unwrap();
        let expect =
            MomentPolynomial::from_terms([(vec![(var(&[2]), 2)], 3), (vec![(var(&[1]), 4)], -2)]);
        assert_eq!(m4, expect);
    }

    #[test]
    fn bivariate_one_three() {
        let p = closure_polynomial(&[1, 3].into(), 2).unwrap();
        let expect = MomentPolynomial::from_terms([
            (vec![(var(&[1, 1]), 1), (var(&[0, 2]), 1)], 3),
            (vec![(var(&[0, 1]), 3), (var(&[1, 0]), 1)], -2),
        ]);
        assert_eq!(p, expect);
    }

    #[test]
    fn display_is_readable() {
        let p = closure_polynomial(&[3].into(), 2).unwrap();
        assert_eq!(p.to_string(), "3 m_1 m_2 - 2 m_1^3");
    }

    #[test]
    fn matches_numeric_closure() {
        let base = MomentSet::from_fn(3, 2, |i| {
            let e = i.exponents();
            0.3 + 0.2 * e[0] as f64 - 0.15 * e[1] as f64 + 0.1 * (e[2] as f64).powi(2)
        });
        for t in [[1u8, 1, 4], [0, 2, 3], [2, 2, 2], [1, 1, 8]] {
            let t = MultiIndex::from(t);
            let sym = closure_polynomial(&t, 2).unwrap().eval(&base).unwrap();
            let num = super::super::algebra::close_moment(&t, &base, 2).unwrap();
            assert!(
                (sym - num).abs() <= 1e-12 * num.abs().max(1.0),
                "{t}: {sym} vs {num}"
            );
        }
    }

    #[test]
    fn rejects_cap_and_low_order() {
        assert!(closure_polynomial(&[2].into(), 2).is_err());
        assert!(closure_polynomial(&[17].into(), 2).is_err());
    }
}
