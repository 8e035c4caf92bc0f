//! Weak compositions, multiset counts and the fiber map `(i, k) -> k + e_i`.
//!
//! Coordinates are 0-based throughout. All orderings are lexicographic on
//! the parts vector, which is what fixes the column order of every
//! decomposition built on top of these enumerations.

use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Rational;

/// A tuple of `d` nonnegative parts; its degree is the part sum.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeakComposition {
    parts: Vec<u32>,
}

impl WeakComposition {
    pub fn new(parts: Vec<u32>) -> Self {
        Self { parts }
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.parts.iter().sum()
    }

    /// Indices of the nonzero parts.
    pub fn support(&self) -> Vec<usize> {
        self.parts.iter().enumerate().filter(|(_, &p)| p > 0).map(|(i, _)| i).collect()
    }

    /// `self - e_i`, if part `i` is positive.
    pub fn decrement(&self, i: usize) -> Option<Self> {
        let mut parts = self.parts.clone();
        let p = parts.get_mut(i)?;
        *p = p.checked_sub(1)?;
        Some(Self { parts })
    }
}

impl fmt::Display for WeakComposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str(")")
    }
}

/// Coefficients `c_0..c_K` of a polynomial; only their support matters for
/// index sets, their values enter the diagonal factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportFilter {
    #[serde(with = "rational_strings")]
    pub coefficients: Vec<Rational>,
}

impl SupportFilter {
    pub fn new(coefficients: Vec<Rational>) -> Self {
        Self { coefficients }
    }

    pub fn from_i64(coefficients: &[i64]) -> Self {
        use crate::linalg::Scalar;
        Self::new(coefficients.iter().map(|&c| Rational::from_i64(c)).collect())
    }

    /// Highest index `K` (the filter has `K + 1` entries).
    pub fn max_degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn coefficient(&self, k: usize) -> Rational {
        self.coefficients.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_active(&self, k: usize) -> bool {
        self.coefficients.get(k).is_some_and(|c| !c.is_zero())
    }

    pub fn active_degrees(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.coefficients.len()).filter(|&k| self.is_active(k))
    }

    /// Comma-separated display such as `0,1,0,1`.
    pub fn label(&self) -> String {
        self.coefficients.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
    }

    pub fn parse(s: &str) -> Result<Self> {
        let coefficients = s
            .split(',')
            .map(|t| crate::linalg::parse_rational(t).ok_or_else(|| Error::Parse(format!("bad coefficient {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if coefficients.is_empty() {
            return Err(Error::Parse("empty coefficient list".into()));
        }
        Ok(Self::new(coefficients))
    }
}

pub(crate) mod rational_strings {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::linalg::{parse_rational, Rational};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|r| r.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|t| parse_rational(t).ok_or_else(|| serde::de::Error::custom(format!("bad rational {t:?}"))))
            .collect()
    }
}

/// Binomial coefficient; saturates at `u128::MAX` instead of overflowing.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) is exact at every step
        let num = (n - i) as u128;
        let den = (i + 1) as u128;
        let g = num_integer::gcd(acc, den);
        let (a, den) = (acc / g, den / g);
        let num = num / den;
        acc = match a.checked_mul(num) {
            Some(v) => v,
            None => return u128::MAX,
        };
    }
    acc
}

/// Number of weak compositions of `k` into `d` parts, `C(k + d - 1, k)`.
pub fn multiset_count(d: usize, k: usize) -> u128 {
    if d == 0 {
        return u128::from(k == 0);
    }
    binomial((k + d - 1) as u64, k as u64)
}

/// `k! / (k_1! ... k_d!)`, built as a product of binomials.
pub fn multinomial(c: &WeakComposition) -> u128 {
    let mut running = 0u64;
    let mut acc = 1u128;
    for &p in c.parts() {
        running += p as u64;
        acc = acc.saturating_mul(binomial(running, p as u64));
    }
    acc
}

/// All weak compositions of `k` into `d` parts in lexicographic order.
pub fn enumerate_lambda(d: usize, k: usize) -> Vec<WeakComposition> {
    let mut out = Vec::new();
    let mut parts = vec![0u32; d];
    fill_exact(&mut parts, 0, k as u32, &mut out);
    out
}

fn fill_exact(parts: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<WeakComposition>) {
    if pos + 1 >= parts.len() {
        if let Some(last) = parts.last_mut() {
            *last = remaining;
            out.push(WeakComposition::new(parts.to_vec()));
        } else if remaining == 0 {
            out.push(WeakComposition::new(Vec::new()));
        }
        return;
    }
    for v in 0..=remaining {
        parts[pos] = v;
        fill_exact(parts, pos + 1, remaining - v, out);
    }
}

/// All `k` with part sum at most `max_degree`, lexicographic, optionally
/// keeping only those whose degree has a nonzero coefficient in `filter`.
pub fn enumerate_lambda_upto(d: usize, max_degree: usize, filter: Option<&SupportFilter>) -> Vec<WeakComposition> {
    let mut out = Vec::new();
    let mut parts = vec![0u32; d];
    fill_bounded(&mut parts, 0, max_degree as u32, &mut out);
    if let Some(f) = filter {
        out.retain(|c| f.is_active(c.degree() as usize));
    }
    out
}

fn fill_bounded(parts: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<WeakComposition>) {
    if pos == parts.len() {
        out.push(WeakComposition::new(parts.to_vec()));
        return;
    }
    for v in 0..=remaining {
        parts[pos] = v;
        fill_bounded(parts, pos + 1, remaining - v, out);
    }
    parts[pos] = 0;
}

/// `(i, k) -> k + e_i`.
pub fn fiber_map(i: usize, c: &WeakComposition) -> WeakComposition {
    let mut parts = c.parts().to_vec();
    parts[i] += 1;
    WeakComposition::new(parts)
}

/// Chooses `s` pairs `(l, k)` with `k` of degree `k` whose fiber images
/// `k + e_l` are pairwise distinct and with at most `cap` pairs per `l`.
///
/// Images of degree `k + 1` are placed in order of support size, each into
/// the least-loaded coordinate of its support; then the most loaded
/// coordinates are pruned until `s` pairs remain. Output is sorted by
/// `(l, k)`.
pub fn balanced_fiber_transversal(d: usize, k: usize, s: usize, cap: usize) -> Result<Vec<(usize, WeakComposition)>> {
    if d == 0 {
        return Err(Error::Constraint("need at least one coordinate".into()));
    }
    let available = multiset_count(d, k + 1);
    let bound = available.min((cap as u128).saturating_mul(d as u128));
    if s as u128 > bound {
        return Err(Error::Constraint(format!(
            "cannot pick {s} pairs: min(cap * d, multiset_count(d, k + 1)) = {bound}"
        )));
    }

    let mut images = enumerate_lambda(d, k + 1);
    images.sort_by_key(|c| c.support().len());

    let mut buckets: Vec<Vec<WeakComposition>> = vec![Vec::new(); d];
    for img in images {
        let target = img
            .support()
            .into_iter()
            .min_by_key(|&l| (buckets[l].len(), l))
            .expect("degree k + 1 >= 1 has nonempty support");
        buckets[target].push(img);
    }

    let mut total: usize = buckets.iter().map(Vec::len).sum();
    while total > s {
        let fullest = (0..d).max_by_key(|&l| (buckets[l].len(), l)).expect("d >= 1");
        buckets[fullest].pop();
        total -= 1;
    }
    if let Some(l) = (0..d).find(|&l| buckets[l].len() > cap) {
        return Err(Error::Constraint(format!(
            "coordinate {l} holds {} pairs, above the cap of {cap}",
            buckets[l].len()
        )));
    }

    let mut out: Vec<(usize, WeakComposition)> = buckets
        .into_iter()
        .enumerate()
        .flat_map(|(l, imgs)| {
            imgs.into_iter().map(move |img| (l, img.decrement(l).expect("l is in the support")))
        })
        .collect();
    out.sort();
    Ok(out)
}
