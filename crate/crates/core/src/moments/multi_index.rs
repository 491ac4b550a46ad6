use std::fmt;

/// Exponent vector of a monomial `X₁^c₁ ··· X_d^c_d`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u8>);

impl MultiIndex {
    pub fn new(exponents: Vec<u8>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(width: usize) -> Self {
        MultiIndex(vec![0; width])
    }

    /// `e_i` in `width` dimensions.
    pub fn unit(width: usize, i: usize) -> Self {
        let mut v = vec![0; width];
        v[i] = 1;
        MultiIndex(v)
    }

    pub fn exponents(&self) -> &[u8] {
        &self.0
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    pub fn order(&self) -> u32 {
        self.0.iter().map(|&c| c as u32).sum()
    }

    pub fn get(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn plus(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn minus(&self, other: &MultiIndex) -> Option<MultiIndex> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<u8>>>()
            .map(MultiIndex)
    }

    pub fn with_delta(&self, i: usize, delta: i32) -> Option<MultiIndex> {
        let v = self.0[i] as i32 + delta;
        if v < 0 {
            return None;
        }
        let mut out = self.0.clone();
        out[i] = v as u8;
        Some(MultiIndex(out))
    }

    pub fn first_nonzero(&self) -> Option<usize> {
        self.0.iter().position(|&c| c > 0)
    }

    /// Product of binomials `Π C(selfᵢ, kᵢ)`.
    pub fn binomial(&self, k: &MultiIndex) -> u64 {
        self.0
            .iter()
            .zip(&k.0)
            .map(|(&n, &k)| binomial(n as u64, k as u64))
            .product()
    }

    /// Every `k ≤ self` componentwise, in lexicographic order of exponents.
    pub fn sub_indices(&self) -> Vec<MultiIndex> {
        let mut out = vec![Vec::with_capacity(self.width())];
        for &c in &self.0 {
            let mut next = Vec::with_capacity(out.len() * (c as usize + 1));
            for prefix in &out {
                for v in 0..=c {
                    let mut p = prefix.clone();
                    p.push(v);
                    next.push(p);
                }
            }
            out = next;
        }
        out.into_iter().map(MultiIndex).collect()
    }

    /// All indices of `width` variables with `1 ≤ order ≤ max_order`, sorted
    /// by order and then descending exponent vector (`X₁` before `X₂`,
    /// `X₁²` before `X₁X₂`).
    pub fn all_up_to(width: usize, max_order: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for order in 1..=max_order {
            let mut level = Vec::new();
            let mut cur = vec![0u8; width];
            compositions(order, 0, &mut cur, &mut level);
            level.sort_by(|a: &Vec<u8>, b| b.cmp(a));
            out.extend(level.into_iter().map(MultiIndex));
        }
        out
    }

    /// Compact key such as `m_200000`. Exponents above 9 are wrapped in
    /// parentheses.
    pub fn key(&self) -> String {
        format!("m_{}", self.digits())
    }

    fn digits(&self) -> String {
        self.0
            .iter()
            .map(|&c| {
                if c < 10 {
                    c.to_string()
                } else {
                    format!("({c})")
                }
            })
            .collect()
    }

    /// Parses the output of [`MultiIndex::key`].
    pub fn parse_key(key: &str) -> Option<MultiIndex> {
        let s = key.strip_prefix("m_")?;
        let mut out = Vec::new();
        let mut chars = s.chars();
        while let Some(c) = chars.next() {
            if c == '(' {
                let mut num = String::new();
                for d in chars.by_ref() {
                    if d == ')' {
                        break;
                    }
                    num.push(d);
                }
                out.push(num.parse().ok()?);
            } else {
                out.push(c.to_digit(10)? as u8);
            }
        }
        Some(MultiIndex(out))
    }

    /// Human-readable monomial, e.g. `E[X1 X3^2]`.
    pub fn expectation(&self) -> String {
        if self.order() == 0 {
            return "1".into();
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| {
                if c == 1 {
                    format!("X{}", i + 1)
                } else {
                    format!("X{}^{}", i + 1, c)
                }
            })
            .collect();
        format!("E[{}]", parts.join(" "))
    }
}

fn compositions(remaining: u32, pos: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if pos == cur.len() - 1 {
        cur[pos] = remaining as u8;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    for v in 0..=remaining {
        cur[pos] = v as u8;
        compositions(remaining - v, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

impl From<&[u8]> for MultiIndex {
    fn from(v: &[u8]) -> Self {
        MultiIndex(v.to_vec())
    }
}

impl<const N: usize> From<[u8; N]> for MultiIndex {
    fn from(v: [u8; N]) -> Self {
        MultiIndex(v.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_system_sizes() {
        assert_eq!(MultiIndex::all_up_to(8, 1).len(), 8);
        assert_eq!(MultiIndex::all_up_to(8, 2).len(), 44);
        assert_eq!(MultiIndex::all_up_to(8, 3).len(), 164);
    }

    #[test]
    fn ordering_and_keys() {
        let all = MultiIndex::all_up_to(3, 2);
        assert_eq!(all[0], MultiIndex::from([1, 0, 0]));
        assert_eq!(all[3], MultiIndex::from([2, 0, 0]));
        assert_eq!(all[4], MultiIndex::from([1, 1, 0]));
        let m = MultiIndex::from([1, 1, 12]);
        assert_eq!(m.key(), "m_11(12)");
        assert_eq!(MultiIndex::parse_key(&m.key()), Some(m.clone()));
        assert_eq!(m.expectation(), "E[X1 X2 X3^12]");
        assert_eq!(m.order(), 14);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(12, 5), 792);
        assert_eq!(
            MultiIndex::from([2, 3]).binomial(&MultiIndex::from([1, 2])),
            6
        );
        assert_eq!(MultiIndex::from([1, 2]).sub_indices().len(), 6);
    }
}
