//! Moment ↔ cumulant conversion and cumulant-neglect closure.
//!
//! Differentiating `M = exp(K)` with respect to `t_j` and comparing Taylor
//! coefficients gives, for any index `n` with `n_j > 0` and `b = n − e_j`,
//!
//! ```text
//! m_n = Σ_{k ≤ b} C(b, k) · κ_{k+e_j} · m_{b−k}
//! ```
//!
//! which is used in both directions. Cumulant neglect of order `p` sets
//! `κ = 0` above order `p`, so only the `|k| < p` terms survive.

use std::collections::{BTreeMap, HashMap};

use super::MultiIndex;
use crate::error::{Error, Result};

/// Highest moment order the closure routines accept.
pub const MAX_CLOSURE_TARGET_ORDER: u32 = 16;

/// Moments `E[X^c]` for every index of order `1..=max_order`. The zero index
/// is implicitly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    width: usize,
    max_order: u32,
    values: BTreeMap<MultiIndex, f64>,
}

/// Cumulants for every index of order `1..=max_order`.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantSet {
    width: usize,
    max_order: u32,
    values: BTreeMap<MultiIndex, f64>,
}

macro_rules! indexed_set {
    ($ty:ident) => {
        impl $ty {
            /// Builds a set and checks it holds every index up to `max_order`.
            pub fn new(
                width: usize,
                max_order: u32,
                values: BTreeMap<MultiIndex, f64>,
            ) -> Result<Self> {
                let set = $ty {
                    width,
                    max_order,
                    values,
                };
                set.check_complete()?;
                Ok(set)
            }

            pub fn from_fn(
                width: usize,
                max_order: u32,
                mut f: impl FnMut(&MultiIndex) -> f64,
            ) -> Self {
                let values = MultiIndex::all_up_to(width, max_order)
                    .into_iter()
                    .map(|i| {
                        let v = f(&i);
                        (i, v)
                    })
                    .collect();
                $ty {
                    width,
                    max_order,
                    values,
                }
            }

            pub fn width(&self) -> usize {
                self.width
            }

            pub fn max_order(&self) -> u32 {
                self.max_order
            }

            pub fn values(&self) -> &BTreeMap<MultiIndex, f64> {
                &self.values
            }

            pub fn missing(&self) -> Vec<MultiIndex> {
                MultiIndex::all_up_to(self.width, self.max_order)
                    .into_iter()
                    .filter(|i| !self.values.contains_key(i))
                    .collect()
            }

            pub fn check_complete(&self) -> Result<()> {
                let missing = self.missing();
                if missing.is_empty() {
                    Ok(())
                } else {
                    Err(Error::IncompleteMoments { missing })
                }
            }

            pub fn insert(&mut self, index: MultiIndex, value: f64) {
                self.values.insert(index, value);
            }
        }
    };
}

indexed_set!(MomentSet);
indexed_set!(CumulantSet);

impl MomentSet {
    /// The moment at `index`; 1 for the zero index.
    pub fn get(&self, index: &MultiIndex) -> Option<f64> {
        if index.order() == 0 {
            return Some(1.0);
        }
        self.values.get(index).copied()
    }
}

impl CumulantSet {
    /// The cumulant at `index`; zero above the maximum order.
    pub fn get(&self, index: &MultiIndex) -> Option<f64> {
        if index.order() > self.max_order {
            return Some(0.0);
        }
        self.values.get(index).copied()
    }
}

/// Exact conversion of a complete moment set to cumulants of the same orders.
pub fn moments_to_cumulants(m: &MomentSet) -> Result<CumulantSet> {
    m.check_complete()?;
    let mut kappa: BTreeMap<MultiIndex, f64> = BTreeMap::new();
    for n in MultiIndex::all_up_to(m.width, m.max_order) {
        let j = n.first_nonzero().expect("order >= 1");
        let unit = MultiIndex::unit(n.width(), j);
        let base = n.minus(&unit).expect("n_j > 0");
        let mut acc = m.get(&n).expect("complete");
        for k in base.sub_indices() {
            if k == base {
                continue;
            }
            let c = base.binomial(&k) as f64;
            let kap = kappa[&k.plus(&unit)];
            let rest = m
                .get(&base.minus(&k).expect("k <= base"))
                .expect("complete");
            acc -= c * kap * rest;
        }
        kappa.insert(n, acc);
    }
    Ok(CumulantSet {
        width: m.width,
        max_order: m.max_order,
        values: kappa,
    })
}

/// Moments up to the cumulant set's order.
pub fn cumulants_to_moments(kappa: &CumulantSet) -> Result<MomentSet> {
    cumulants_to_moments_up_to(kappa, kappa.max_order)
}

/// Moments up to `order`, with every cumulant above the set's order taken as zero.
pub fn cumulants_to_moments_up_to(kappa: &CumulantSet, order: u32) -> Result<MomentSet> {
    kappa.check_complete()?;
    let mut memo = HashMap::new();
    let values = MultiIndex::all_up_to(kappa.width, order)
        .into_iter()
        .map(|n| {
            let v = moment_from_cumulants(&n, kappa, &mut memo);
            (n, v)
        })
        .collect();
    Ok(MomentSet {
        width: kappa.width,
        max_order: order,
        values,
    })
}

fn moment_from_cumulants(
    n: &MultiIndex,
    kappa: &CumulantSet,
    memo: &mut HashMap<MultiIndex, f64>,
) -> f64 {
    let Some(j) = n.first_nonzero() else {
        return 1.0;
    };
    if let Some(v) = memo.get(n) {
        return *v;
    }
    let unit = MultiIndex::unit(n.width(), j);
    let base = n.minus(&unit).expect("n_j > 0");
    let mut acc = 0.0;
    for k in base.sub_indices() {
        if k.order() + 1 > kappa.max_order {
            continue;
        }
        let kap = kappa.get(&k.plus(&unit)).unwrap_or(0.0);
        if kap == 0.0 {
            continue;
        }
        let rest = moment_from_cumulants(&base.minus(&k).expect("k <= base"), kappa, memo);
        acc += base.binomial(&k) as f64 * kap * rest;
    }
    memo.insert(n.clone(), acc);
    acc
}

/// Closes `target` under cumulant neglect of order `closure_order`: cumulants
/// up to that order come from `base`, all higher ones are zero.
pub fn close_moment(target: &MultiIndex, base: &MomentSet, closure_order: u32) -> Result<f64> {
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
    if target.width() != base.width {
        return Err(Error::InvalidInput(format!(
            "target width {} does not match moment set width {}",
            target.width(),
            base.width
        )));
    }
    if base.max_order < closure_order {
        return Err(Error::InvalidInput(format!(
            "moment set of order {} cannot support closure order {closure_order}",
            base.max_order
        )));
    }
    let truncated = MomentSet {
        width: base.width,
        max_order: closure_order,
        values: base
            .values
            .iter()
            .filter(|(k, _)| k.order() <= closure_order)
            .map(|(k, v)| (k.clone(), *v))
            .collect(),
    };
    let kappa = moments_to_cumulants(&truncated)?;
    let mut memo = HashMap::new();
    Ok(moment_from_cumulants(target, &kappa, &mut memo))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uni(values: &[f64]) -> MomentSet {
        MomentSet::from_fn(1, values.len() as u32, |i| values[i.order() as usize - 1])
    }

    #[test]
    fn univariate_first_two_cumulants() {
        let (mu, var) = (0.7, 2.3);
        let k = moments_to_cumulants(&uni(&[mu, mu * mu + var])).unwrap();
        assert!((k.get(&[1].into()).unwrap() - mu).abs() < 1e-15);
        assert!((k.get(&[2].into()).unwrap() - var).abs() < 1e-14);
    }

    #[test]
    fn delta_distribution_has_no_higher_cumulants() {
        let a: f64 = 1.3;
        let m = uni(&(1..=8).map(|n| a.powi(n)).collect::<Vec<_>>());
        let k = moments_to_cumulants(&m).unwrap();
        assert!((k.get(&[1].into()).unwrap() - a).abs() < 1e-14);
        for n in 2..=8u8 {
            assert!(k.get(&[n].into()).unwrap().abs() < 1e-11, "κ{n}");
        }
    }

    #[test]
    fn bivariate_covariance() {
        let m = MomentSet::from_fn(2, 2, |i| match i.exponents() {
            [1, 0] => 0.5,
            [0, 1] => -0.25,
            [1, 1] => 0.375,
            [2, 0] => 1.0,
            [0, 2] => 2.0,
            _ => unreachable!(),
        });
        let k = moments_to_cumulants(&m).unwrap();
        assert!((k.get(&[1, 1].into()).unwrap() - (0.375 + 0.125)).abs() < 1e-15);
    }

    #[test]
    fn gaussian_moments_from_cumulants() {
        let s2 = 1.7;
        let k = CumulantSet::from_fn(1, 2, |i| if i.order() == 1 { 0.0 } else { s2 });
        let m = cumulants_to_moments_up_to(&k, 4).unwrap();
        assert!(m.get(&[3].into()).unwrap().abs() < 1e-15);
        assert!((m.get(&[4].into()).unwrap() - 3.0 * s2 * s2).abs() < 1e-13);

        let zero = CumulantSet::from_fn(2, 3, |_| 0.0);
        let m = cumulants_to_moments_up_to(&zero, 5).unwrap();
        assert!(m.values().values().all(|v| *v == 0.0));

        let delta = CumulantSet::from_fn(1, 2, |i| if i.order() == 1 { 1.0 } else { 0.0 });
        let m = cumulants_to_moments_up_to(&delta, 9).unwrap();
        assert!(m.values().values().all(|v| (*v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn closure_examples() {
        let (m1, m2) = (0.3, 0.5);
        let base = uni(&[m1, m2]);
        let m3 = close_moment(&[3].into(), &base, 2).unwrap();
        assert!((m3 - (3.0 * m1 * m2 - 2.0 * m1.powi(3))).abs() < 1e-15);

        let tri = MomentSet::from_fn(3, 2, |i| match i.exponents() {
            [0, 1, 1] => 1.0,
            [1, 0, 1] => 2.0,
            [0, 0, 2] => 3.0,
            [1, 1, 0] => 4.0,
            [2, 0, 0] | [0, 2, 0] => 5.0,
            _ => 0.0,
        });
        assert!((close_moment(&[1, 1, 2].into(), &tri, 2).unwrap() - 16.0).abs() < 1e-13);
    }

    #[test]
    fn closure_error_paths() {
        let base = uni(&[0.0, 1.0]);
        assert!(matches!(
            close_moment(&[2].into(), &base, 2),
            Err(Error::ClosureNotNeeded { .. })
        ));
        assert!(matches!(
            close_moment(&[17].into(), &base, 2),
            Err(Error::OrderCap { .. })
        ));
        let mut incomplete = MomentSet::from_fn(2, 2, |_| 0.0);
        incomplete.values.remove(&MultiIndex::from([1, 1]));
        assert!(matches!(
            moments_to_cumulants(&incomplete),
            Err(Error::IncompleteMoments { .. })
        ));
    }

    #[test]
    fn third_order_closure_is_exact_for_cubic_cumulants() {
        // cumulants vanish above order 3, so closing at p = 3 reproduces every moment
        let k = CumulantSet::from_fn(2, 3, |i| {
            let e = i.exponents();
            0.1 * (1 + e[0] as i32 * 3 - e[1] as i32) as f64 + 0.05 * i.order() as f64
        });
        let full = cumulants_to_moments_up_to(&k, 7).unwrap();
        let base = cumulants_to_moments(&k).unwrap();
        for (idx, v) in full.values() {
            if idx.order() > 3 {
                let c = close_moment(idx, &base, 3).unwrap();
                assert!(
                    (c - v).abs() <= 1e-11 * v.abs().max(1.0),
                    "{idx}: {c} vs {v}"
                );
            }
        }
    }
}
