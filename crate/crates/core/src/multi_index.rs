//! Multi-indices in graded-lex order and the combinatorics on them.
//!
//! Within a fixed degree, indices are ordered so that weight on earlier
//! variables comes first: `(2,0) < (1,1) < (0,2)`.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::One;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = vec![0; n];
        v[i] = 1;
        MultiIndex(v)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Componentwise `self ≤ other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self − other`, `None` unless `other ≤ self`.
    pub fn sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if !other.le(self) {
            return None;
        }
        Some(MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    /// 𝐢! = ∏ i_k!
    pub fn factorial(&self) -> BigInt {
        self.0.iter().map(|&a| factorial(a)).product()
    }

    /// (𝐢 choose 𝐣) = ∏ (i_k choose j_k), zero unless 𝐣 ≤ 𝐢.
    pub fn binomial(&self, j: &MultiIndex) -> BigInt {
        if !j.le(self) {
            return BigInt::from(0);
        }
        self.0.iter().zip(&j.0).map(|(&a, &b)| binomial(a, b)).product()
    }

    /// Only the first `q` entries may be nonzero.
    pub fn supported_on_first(&self, q: usize) -> bool {
        self.0.iter().skip(q).all(|&a| a == 0)
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

pub fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::from(0);
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Number of multi-indices in `n` variables of degree ≤ `k`, i.e. C(n+k, n).
pub fn count_up_to(n: usize, k: u32) -> usize {
    let mut acc: u128 = 1;
    for i in 1..=n as u128 {
        acc = acc * (k as u128 + i) / i;
    }
    acc as usize
}

/// All multi-indices in `n` variables of degree ≤ `k`, in graded-lex order.
pub fn indices_up_to(n: usize, k: u32) -> Vec<MultiIndex> {
    let mut out = Vec::with_capacity(count_up_to(n, k));
    for d in 0..=k {
        out.extend(indices_of_degree(n, d));
    }
    out
}

/// Multi-indices of exact degree `d`, in graded-lex order.
pub fn indices_of_degree(n: usize, d: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fill(&mut cur, 0, d, &mut out);
    out
}

fn fill(cur: &mut Vec<u32>, pos: usize, rem: u32, out: &mut Vec<MultiIndex>) {
    let n = cur.len();
    if n == 0 {
        if rem == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return;
    }
    if pos == n - 1 {
        cur[pos] = rem;
        out.push(MultiIndex(cur.clone()));
        cur[pos] = 0;
        return;
    }
    for a in (0..=rem).rev() {
        cur[pos] = a;
        fill(cur, pos + 1, rem - a, out);
    }
    cur[pos] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_lex_listing() {
        let idx = indices_up_to(2, 2);
        let raw: Vec<Vec<u32>> = idx.iter().map(|m| m.0.clone()).collect();
        assert_eq!(
            raw,
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        let mut sorted = idx.clone();
        sorted.sort();
        assert_eq!(sorted, idx);
    }

    #[test]
    fn counts_match_listing() {
        for n in 0..4 {
            for k in 0..6 {
                assert_eq!(indices_up_to(n, k).len(), count_up_to(n, k));
            }
        }
    }

    #[test]
    fn binomials() {
        let i = MultiIndex(vec![3, 2]);
        assert_eq!(i.binomial(&MultiIndex(vec![1, 1])), BigInt::from(6));
        assert_eq!(i.binomial(&MultiIndex(vec![4, 0])), BigInt::from(0));
        assert_eq!(i.factorial(), BigInt::from(12));
    }
}
