//! Straight-line numeric evaluation of many closures that share cumulants
//! and intermediate moments.

use std::collections::HashMap;

use super::algebra::MAX_CLOSURE_TARGET_ORDER;
use super::MultiIndex;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
struct Op {
    dest: u32,
    init: Option<u32>,
    start: u32,
    end: u32,
}

#[derive(Debug, Clone, Copy)]
struct Term {
    coef: f64,
    a: u32,
    b: u32,
}

/// Compiled closure of every requested moment from the tracked base moments.
///
/// Slot 0 holds the constant 1, slots `1..=n` the tracked moments in the
/// order given at construction, followed by cumulants and closed moments.
#[derive(Debug, Clone)]
pub struct ClosureProgram {
    width: usize,
    closure_order: u32,
    inputs: usize,
    slots: usize,
    ops: Vec<Op>,
    terms: Vec<Term>,
    index_slot: HashMap<MultiIndex, u32>,
    kappa_slot: HashMap<MultiIndex, u32>,
}

impl ClosureProgram {
    /// Starts a program over `tracked`, which must hold every index of
    /// order `1..=closure_order` in `width` variables.
    pub fn new(width: usize, closure_order: u32, tracked: &[MultiIndex]) -> Result<Self> {
        if closure_order == 0 {
            return Err(Error::InvalidInput(
                "closure order must be at least 1".into(),
            ));
        }
        let mut index_slot = HashMap::new();
        index_slot.insert(MultiIndex::zero(width), 0);
        for (i, idx) in tracked.iter().enumerate() {
            if idx.width() != width || idx.order() == 0 || idx.order() > closure_order {
                return Err(Error::InvalidInput(format!(
                    "tracked index {idx} is not a base moment"
                )));
            }
            if index_slot.insert(idx.clone(), i as u32 + 1).is_some() {
                return Err(Error::InvalidInput(format!(
                    "tracked index {idx} is repeated"
                )));
            }
        }
        let missing: Vec<_> = MultiIndex::all_up_to(width, closure_order)
            .into_iter()
            .filter(|i| !index_slot.contains_key(i))
            .collect();
        if !missing.is_empty() {
            return Err(Error::IncompleteMoments { missing });
        }
        Ok(ClosureProgram {
            width,
            closure_order,
            inputs: tracked.len(),
            slots: tracked.len() + 1,
            ops: Vec::new(),
            terms: Vec::new(),
            index_slot,
            kappa_slot: HashMap::new(),
        })
    }

    pub fn closure_order(&self) -> u32 {
        self.closure_order
    }

    pub fn slot_count(&self) -> usize {
        self.slots
    }

    pub fn op_count(&self) -> usize {
        self.ops.len()
    }

    /// Slot holding `E[X^index]`, compiling its closure if needed.
    pub fn slot_for(&mut self, index: &MultiIndex) -> Result<u32> {
        if index.width() != self.width {
            return Err(Error::InvalidInput(format!(
                "index {index} has the wrong width"
            )));
        }
        if index.order() > MAX_CLOSURE_TARGET_ORDER {
            return Err(Error::OrderCap {
                order: index.order(),
                cap: MAX_CLOSURE_TARGET_ORDER,
            });
        }
        Ok(self.moment(index))
    }

    fn alloc(&mut self) -> u32 {
        self.slots += 1;
        (self.slots - 1) as u32
    }

    fn cumulant(&mut self, n: &MultiIndex) -> u32 {
        if let Some(&s) = self.kappa_slot.get(n) {
            return s;
        }
        let j = n.first_nonzero().expect("order >= 1");
        let unit = MultiIndex::unit(self.width, j);
        let base = n.minus(&unit).expect("n_j > 0");
        let mut terms = Vec::new();
        for k in base.sub_indices() {
            if k == base {
                continue;
            }
            let a = self.cumulant(&k.plus(&unit));
            let b = self.index_slot[&base.minus(&k).expect("k <= base")];
            terms.push(Term {
                coef: -(base.binomial(&k) as f64),
                a,
                b,
            });
        }
        let dest = self.alloc();
        self.push(dest, Some(self.index_slot[n]), terms);
        self.kappa_slot.insert(n.clone(), dest);
        dest
    }

    fn moment(&mut self, n: &MultiIndex) -> u32 {
        if let Some(&s) = self.index_slot.get(n) {
            return s;
        }
        let j = n.first_nonzero().expect("order > closure order");
        let unit = MultiIndex::unit(self.width, j);
        let base = n.minus(&unit).expect("n_j > 0");
        let mut terms = Vec::new();
        for k in base.sub_indices() {
            if k.order() + 1 > self.closure_order {
                continue;
            }
            let a = self.cumulant(&k.plus(&unit));
            let b = self.moment(&base.minus(&k).expect("k <= base"));
            terms.push(Term {
                coef: base.binomial(&k) as f64,
                a,
                b,
            });
        }
        let dest = self.alloc();
        self.push(dest, None, terms);
        self.index_slot.insert(n.clone(), dest);
        dest
    }

    fn push(&mut self, dest: u32, init: Option<u32>, terms: Vec<Term>) {
        let start = self.terms.len() as u32;
        self.terms.extend(terms);
        self.ops.push(Op {
            dest,
            init,
            start,
            end: self.terms.len() as u32,
        });
    }

    /// Fills `scratch` with every slot value given the tracked moments.
    pub fn eval_into(&self, inputs: &[f64], scratch: &mut Vec<f64>) {
        debug_assert_eq!(inputs.len(), self.inputs);
        scratch.clear();
        scratch.resize(self.slots, 0.0);
        scratch[0] = 1.0;
        scratch[1..=self.inputs].copy_from_slice(inputs);
        for op in &self.ops {
            let mut acc = match op.init {
                Some(s) => scratch[s as usize],
                None => 0.0,
            };
            for t in &self.terms[op.start as usize..op.end as usize] {
                acc += t.coef * scratch[t.a as usize] * scratch[t.b as usize];
            }
            scratch[op.dest as usize] = acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{close_moment, MomentSet};

    #[test]
    fn agrees_with_close_moment() {
        for p in [2u32, 3] {
            let tracked = MultiIndex::all_up_to(4, p);
            let base = MomentSet::from_fn(4, p, |i| {
                let e = i.exponents();
                0.2 + 0.1 * e[0] as f64 - 0.07 * e[1] as f64 + 0.03 * (e[2] * e[3]) as f64
            });
            let inputs: Vec<f64> = tracked.iter().map(|i| base.get(i).unwrap()).collect();
            let mut prog = ClosureProgram::new(4, p, &tracked).unwrap();
            let targets = [[1u8, 2, 9, 0], [0, 0, 5, 1], [2, 1, 1, 1], [1, 1, 0, 12]];
            let slots: Vec<u32> = targets
                .iter()
                .map(|t| prog.slot_for(&MultiIndex::from(*t)).unwrap())
                .collect();
            let mut scratch = Vec::new();
            prog.eval_into(&inputs, &mut scratch);
            for (t, s) in targets.iter().zip(slots) {
                let want = close_moment(&MultiIndex::from(*t), &base, p).unwrap();
                let got = scratch[s as usize];
                assert!(
                    (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                    "p={p} {t:?}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn tracked_slots_pass_through() {
        let tracked = MultiIndex::all_up_to(2, 2);
        let mut prog = ClosureProgram::new(2, 2, &tracked).unwrap();
        let s = prog.slot_for(&MultiIndex::from([1, 1])).unwrap();
        let mut scratch = Vec::new();
        prog.eval_into(&[1.0, 2.0, 3.0, 4.0, 5.0], &mut scratch);
        assert_eq!(scratch[s as usize], 4.0);
        assert_eq!(
            scratch[prog.slot_for(&MultiIndex::zero(2)).unwrap() as usize],
            1.0
        );
    }

    #[test]
    fn incomplete_tracking_is_rejected() {
        let tracked = MultiIndex::all_up_to(2, 1);
        assert!(ClosureProgram::new(2, 2, &tracked).is_err());
    }
}
