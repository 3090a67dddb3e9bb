//! Index calculus: abstract simplices, increasing sequences, complements and
//! split-permutation signs.
//!
//! Two conventions coexist. Simplex labels are 0-based vertex labels `0..=d`;
//! increasing sequences are 1-based, entries in `1..=n`.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Binomial coefficient with the convention `C(n, m) = 0` for `m < 0` or `m > n`.
pub fn binomial(n: i64, m: i64) -> usize {
    if n < 0 || m < 0 || m > n {
        return 0;
    }
    let m = m.min(n - m) as u128;
    let n = n as u128;
    let mut acc: u128 = 1;
    for i in 0..m {
        acc = acc * (n - i) / (i + 1);
    }
    acc as usize
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// A nonempty set of vertex labels stored in ascending order.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AbstractSimplex {
    vertices: Vec<usize>,
}

impl AbstractSimplex {
    pub fn new(vertices: Vec<usize>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::Domain("a simplex needs at least one vertex".into()));
        }
        if vertices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain(format!(
                "simplex labels must be strictly increasing, got {vertices:?}"
            )));
        }
        Ok(Self { vertices })
    }

    /// Sorts and deduplicates the labels before validation.
    pub fn from_unsorted(mut vertices: Vec<usize>) -> Result<Self> {
        vertices.sort_unstable();
        vertices.dedup();
        Self::new(vertices)
    }

    /// The standard simplex `{0, 1, ..., d}`.
    pub fn standard(d: usize) -> Self {
        Self { vertices: (0..=d).collect() }
    }

    pub fn vertex(v: usize) -> Self {
        Self { vertices: vec![v] }
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn contains(&self, v: usize) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    pub fn is_subset_of(&self, other: &AbstractSimplex) -> bool {
        self.vertices.iter().all(|&v| other.contains(v))
    }

    /// Position of label `v` in the ascending order `[f]`.
    pub fn position(&self, v: usize) -> Option<usize> {
        self.vertices.binary_search(&v).ok()
    }

    /// `f \ e` in ascending order (possibly empty, hence a plain vector).
    pub fn difference(&self, other: &AbstractSimplex) -> Vec<usize> {
        self.vertices.iter().copied().filter(|&v| !other.contains(v)).collect()
    }

    /// `f ∪ {v}`.
    pub fn with_vertex(&self, v: usize) -> AbstractSimplex {
        let mut vertices = self.vertices.clone();
        if let Err(pos) = vertices.binary_search(&v) {
            vertices.insert(pos, v);
        }
        AbstractSimplex { vertices }
    }

    /// Labels of `{0..=d}` not in `f`; empty when `f` is the full set.
    pub fn complement_labels(&self, d: usize) -> Vec<usize> {
        (0..=d).filter(|&v| !self.contains(v)).collect()
    }

    /// Maps local labels (positions in a host simplex) to the host's labels.
    pub fn relabel(&self, host: &[usize]) -> AbstractSimplex {
        AbstractSimplex::from_unsorted(self.vertices.iter().map(|&v| host[v]).collect())
            .expect("relabelling a nonempty simplex")
    }
}

impl fmt::Debug for AbstractSimplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.vertices)
    }
}

impl Serialize for AbstractSimplex {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.vertices.serialize(serializer)
    }
}

/// All `s`-dimensional sub-simplices of `f`, in lexicographic order.
pub fn subsimplices(f: &AbstractSimplex, s: usize) -> Result<Vec<AbstractSimplex>> {
    if s > f.dim() {
        return Err(Error::Domain(format!(
            "sub-simplex dimension {s} exceeds simplex dimension {}",
            f.dim()
        )));
    }
    Ok(combinations(f.vertices(), s + 1)
        .into_iter()
        .map(|vertices| AbstractSimplex { vertices })
        .collect())
}

/// The opposite simplex `f*` with `f ⊔ f* = {0..=d}`.
pub fn opposite(f: &AbstractSimplex, ambient_dim: usize) -> Result<AbstractSimplex> {
    if f.vertices().iter().any(|&v| v > ambient_dim) {
        return Err(Error::Domain(format!("{f:?} is not a subset of {{0..{ambient_dim}}}")));
    }
    let rest = f.complement_labels(ambient_dim);
    if rest.is_empty() {
        return Err(Error::Domain("the full simplex has no opposite simplex".into()));
    }
    Ok(AbstractSimplex { vertices: rest })
}

/// Lexicographically ordered `m`-element subsets of `items` (which must be sorted).
pub(crate) fn combinations(items: &[usize], m: usize) -> Vec<Vec<usize>> {
    let n = items.len();
    if m > n {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(binomial(n as i64, m as i64));
    let mut idx: Vec<usize> = (0..m).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        // advance the rightmost index that can still move
        let mut i = m;
        while i > 0 && idx[i - 1] == n - m + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        let i = i - 1;
        idx[i] += 1;
        for j in i + 1..m {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// A strictly increasing map `{1..m} → {1..n}`, stored as its range.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IncreasingSequence {
    n: usize,
    entries: Vec<usize>,
}

impl IncreasingSequence {
    pub fn new(entries: Vec<usize>, n: usize) -> Result<Self> {
        if entries.len() > n {
            return Err(Error::Domain(format!("sequence length {} exceeds bound {n}", entries.len())));
        }
        if entries.iter().any(|&x| x == 0 || x > n) {
            return Err(Error::Domain(format!("entries {entries:?} outside 1..={n}")));
        }
        if entries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain(format!("entries {entries:?} not strictly increasing")));
        }
        Ok(Self { n, entries })
    }

    pub fn empty(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn full(n: usize) -> Self {
        Self { n, entries: (1..=n).collect() }
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn bound(&self) -> usize {
        self.n
    }

    pub fn contains(&self, x: usize) -> bool {
        self.entries.binary_search(&x).is_ok()
    }

    /// Position of this sequence in the lexicographic enumeration of `Σ(m, n)`.
    pub fn rank(&self) -> usize {
        sequence_rank(&self.entries, self.n)
    }
}

impl fmt::Debug for IncreasingSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}/{}", self.entries, self.n)
    }
}

impl Serialize for IncreasingSequence {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.entries.serialize(serializer)
    }
}

/// `Σ(m, n)` in lexicographic order; `m = 0` gives the single empty sequence.
pub fn increasing_sequences(m: usize, n: usize) -> Result<Vec<IncreasingSequence>> {
    if m > n {
        return Err(Error::Domain(format!("no increasing sequences of length {m} in 1..={n}")));
    }
    let items: Vec<usize> = (1..=n).collect();
    Ok(combinations(&items, m)
        .into_iter()
        .map(|entries| IncreasingSequence { n, entries })
        .collect())
}

/// Lexicographic rank of a strictly increasing 1-based sequence within `Σ(len, n)`.
pub(crate) fn sequence_rank(entries: &[usize], n: usize) -> usize {
    let m = entries.len();
    let mut rank = 0;
    let mut prev = 0;
    for (i, &x) in entries.iter().enumerate() {
        // count sequences that agree up to i and have a smaller entry at i
        for y in prev + 1..x {
            rank += binomial((n - y) as i64, (m - i - 1) as i64);
        }
        prev = x;
    }
    rank
}

/// The complementary sequence `σ^c` with `σ ⊔ σ^c = {1..n}`.
pub fn complement(sigma: &IncreasingSequence) -> IncreasingSequence {
    IncreasingSequence {
        n: sigma.n,
        entries: (1..=sigma.n).filter(|&x| !sigma.contains(x)).collect(),
    }
}

/// Sign of the permutation `(σ(1), …, σ(m), τ(1), …, τ(n−m))` of `{1..n}`.
pub fn permutation_sign(sigma: &IncreasingSequence, tau: &IncreasingSequence) -> Result<i32> {
    let n = sigma.n;
    if tau.n != n || sigma.len() + tau.len() != n {
        return Err(Error::Domain(format!("{sigma:?} and {tau:?} do not partition 1..={n}")));
    }
    if sigma.entries.iter().any(|&x| tau.contains(x)) {
        return Err(Error::Domain(format!("{sigma:?} and {tau:?} overlap")));
    }
    Ok(concatenation_sign(&sigma.entries, &tau.entries))
}

/// Sign of the permutation sorting the concatenation of two increasing, disjoint lists.
pub(crate) fn concatenation_sign(a: &[usize], b: &[usize]) -> i32 {
    // both halves are sorted, so inversions are exactly pairs (x in a, y in b) with x > y
    let mut inversions = 0usize;
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        inversions += j;
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Checks `C(d,k) = Σ_ℓ C(d−s, ℓ−s)·C(s, k−(ℓ−s))` over `ℓ = max(s,k)..=min(k+s,d)`.
pub fn vandermonde_identity_check(d: usize, k: usize, s: usize) -> bool {
    let (d, k, s) = (d as i64, k as i64, s as i64);
    let lo = s.max(k);
    let hi = (k + s).min(d);
    let rhs: usize = (lo..=hi)
        .map(|l| binomial(d - s, l - s) * binomial(s, k - (l - s)))
        .sum();
    binomial(d, k) == rhs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(entries: &[usize], n: usize) -> IncreasingSequence {
        IncreasingSequence::new(entries.to_vec(), n).unwrap()
    }

    /// Inversion count of an arbitrary permutation by brute force over all pairs.
    fn brute_sign(perm: &[usize]) -> i32 {
        let mut inv = 0;
        for i in 0..perm.len() {
            for j in i + 1..perm.len() {
                if perm[i] > perm[j] {
                    inv += 1;
                }
            }
        }
        if inv % 2 == 0 {
            1
        } else {
            -1
        }
    }

    #[test]
    fn binomial_conventions() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(4, -1), 0);
        assert_eq!(binomial(4, 5), 0);
        assert_eq!(binomial(0, 0), 1);
        assert_eq!(binomial(-1, 0), 0);
    }

    #[test]
    fn sequences_small_cases() {
        let s = increasing_sequences(1, 2).unwrap();
        assert_eq!(s, vec![seq(&[1], 2), seq(&[2], 2)]);
        let s = increasing_sequences(0, 3).unwrap();
        assert_eq!(s.len(), 1);
        assert!(s[0].is_empty());
        let s = increasing_sequences(2, 4).unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(s[0].entries(), &[1, 2]);
        assert_eq!(s[5].entries(), &[3, 4]);
        assert!(increasing_sequences(3, 2).is_err());
    }

    #[test]
    fn sequence_counts_and_ranks() {
        for n in 0..=8 {
            for m in 0..=n {
                let all = increasing_sequences(m, n).unwrap();
                assert_eq!(all.len(), binomial(n as i64, m as i64));
                for (i, s) in all.iter().enumerate() {
                    assert_eq!(s.rank(), i);
                    assert_eq!(complement(&complement(s)), *s);
                }
                assert!(all.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn complement_examples() {
        assert_eq!(complement(&seq(&[1, 3], 4)), seq(&[2, 4], 4));
        assert_eq!(complement(&IncreasingSequence::empty(3)), seq(&[1, 2, 3], 3));
        assert!(complement(&IncreasingSequence::full(5)).is_empty());
    }

    #[test]
    fn sign_examples() {
        assert_eq!(permutation_sign(&seq(&[1, 2], 3), &seq(&[3], 3)).unwrap(), 1);
        assert_eq!(permutation_sign(&seq(&[2], 3), &seq(&[1, 3], 3)).unwrap(), -1);
        assert!(permutation_sign(&seq(&[1, 2], 3), &seq(&[2, 3], 3)).is_err());
        assert!(permutation_sign(&seq(&[1], 3), &seq(&[2], 3)).is_err());
    }

    #[test]
    fn sign_matches_brute_force_and_swap_law() {
        for n in 0..=7 {
            for m in 0..=n {
                for s in increasing_sequences(m, n).unwrap() {
                    let c = complement(&s);
                    let perm: Vec<usize> = s.entries().iter().chain(c.entries()).copied().collect();
                    let sign = permutation_sign(&s, &c).unwrap();
                    assert_eq!(sign, brute_sign(&perm));
                    let swapped = permutation_sign(&c, &s).unwrap();
                    let expected = if (m * (n - m)) % 2 == 0 { 1 } else { -1 };
                    assert_eq!(sign * swapped, expected);
                }
            }
        }
    }

    #[test]
    fn subsimplex_examples() {
        let tri = AbstractSimplex::standard(2);
        let edges = subsimplices(&tri, 1).unwrap();
        let expect: Vec<Vec<usize>> = vec![vec![0, 1], vec![0, 2], vec![1, 2]];
        assert_eq!(edges.iter().map(|e| e.vertices().to_vec()).collect::<Vec<_>>(), expect);
        assert_eq!(subsimplices(&AbstractSimplex::standard(3), 2).unwrap().len(), 4);
        let seg = AbstractSimplex::standard(1);
        assert_eq!(subsimplices(&seg, 0).unwrap(), vec![AbstractSimplex::vertex(0), AbstractSimplex::vertex(1)]);
        assert!(subsimplices(&seg, 2).is_err());
        for d in 0..=6 {
            let t = AbstractSimplex::standard(d);
            for s in 0..=d {
                assert_eq!(subsimplices(&t, s).unwrap().len(), binomial(d as i64 + 1, s as i64 + 1));
            }
        }
    }

    #[test]
    fn opposite_examples() {
        let f = AbstractSimplex::vertex(0);
        assert_eq!(opposite(&f, 3).unwrap().vertices(), &[1, 2, 3]);
        let f = AbstractSimplex::new(vec![0, 1]).unwrap();
        assert_eq!(opposite(&f, 3).unwrap().vertices(), &[2, 3]);
        let f = AbstractSimplex::new(vec![1, 3]).unwrap();
        assert_eq!(opposite(&f, 4).unwrap().vertices(), &[0, 2, 4]);
        assert!(opposite(&AbstractSimplex::standard(3), 3).is_err());
    }

    #[test]
    fn simplex_invariants() {
        assert!(AbstractSimplex::new(vec![]).is_err());
        assert!(AbstractSimplex::new(vec![2, 1]).is_err());
        assert!(AbstractSimplex::new(vec![1, 1]).is_err());
        let f = AbstractSimplex::from_unsorted(vec![3, 1, 2]).unwrap();
        assert_eq!(f.vertices(), &[1, 2, 3]);
        assert_eq!(f.with_vertex(0).vertices(), &[0, 1, 2, 3]);
        assert_eq!(f.difference(&AbstractSimplex::vertex(2)), vec![1, 3]);
    }

    #[test]
    fn vandermonde_examples() {
        // (3,1,1): ℓ=1 gives C(2,0)C(1,1)=1, ℓ=2 gives C(2,1)C(1,0)=2
        assert!(vandermonde_identity_check(3, 1, 1));
        for d in 0..=6 {
            for k in 0..=d {
                assert!(vandermonde_identity_check(d, k, 0));
                for s in 0..=d {
                    assert!(vandermonde_identity_check(d, k, s), "d={d} k={k} s={s}");
                }
            }
        }
    }
}
