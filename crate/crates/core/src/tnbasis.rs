//! Tangential-normal bases of `Alt^k(R^d)` anchored at a sub-simplex `e`.
//!
//! For `e ∈ Δ_s(T)` the space splits over the sub-simplices `f ⊇ e` of dimension
//! `ℓ ∈ [max(s,k), min(k+s,d)]`. The block carried by `f` is spanned by
//! `♭t^e_σ ∧ dλ_{[f\e]}`, `σ ∈ Σ(k−(ℓ−s), s)`; replacing the gradients by the
//! tangential-normal vectors `∇_{e∪{i}} λ_i` gives a basis paired diagonally with it.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::combinatorics::{combinations, complement, increasing_sequences, AbstractSimplex, IncreasingSequence};
use crate::error::{Error, Result};
use crate::exterior::{hodge_star, inner, wedge_vectors, AltForm, DEFAULT_TOL};
use crate::simplex::{GeometricSimplex, TnFrameSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    /// `♭t^e_σ ∧ dλ_{[f\e]}`.
    Primal,
    /// `♭t^e_σ ∧ ∧_{i∈f\e} ♭∇_{e∪{i}} λ_i`.
    Dual,
    /// `⋆(♭t^e_{σ^c} ∧ dλ_{[f*]})`; `sigma` holds `σ^c`.
    Hodge,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TnBasisElement {
    pub e: AbstractSimplex,
    pub f: AbstractSimplex,
    pub sigma: IncreasingSequence,
    pub flavor: Flavor,
}

impl TnBasisElement {
    /// Same `(e, f)` slot in another flavor; converting to or from `Hodge`
    /// complements `sigma` within `1..=s`.
    pub fn with_flavor(&self, flavor: Flavor) -> Self {
        let was_hodge = self.flavor == Flavor::Hodge;
        let is_hodge = flavor == Flavor::Hodge;
        let sigma = if was_hodge != is_hodge { complement(&self.sigma) } else { self.sigma.clone() };
        Self { e: self.e.clone(), f: self.f.clone(), sigma, flavor }
    }

    /// Form degree of the realized element in `R^d`.
    pub fn degree(&self) -> usize {
        let (s, l) = (self.e.dim(), self.f.dim());
        match self.flavor {
            Flavor::Primal | Flavor::Dual => self.sigma.len() + l - s,
            Flavor::Hodge => l - self.sigma.len(),
        }
    }
}

/// The `C(d,k)` primal elements anchored at `e`, ordered by `ℓ`, then `f`, then `σ`.
pub fn decompose_altk(d: usize, e: &AbstractSimplex, k: usize) -> Result<Vec<TnBasisElement>> {
    if k > d {
        return Err(Error::Domain(format!("form degree {k} exceeds dimension {d}")));
    }
    if e.vertices().last().copied().unwrap_or(0) > d {
        return Err(Error::Domain(format!("{e:?} is not a sub-simplex of a {d}-simplex")));
    }
    let s = e.dim();
    let others = e.complement_labels(d);
    let mut out = Vec::new();
    for l in s.max(k)..=(k + s).min(d) {
        let tangential = k - (l - s);
        let mut fs: Vec<AbstractSimplex> = combinations(&others, l - s)
            .into_iter()
            .map(|extra| {
                let mut v = e.vertices().to_vec();
                v.extend(extra);
                AbstractSimplex::from_unsorted(v).expect("nonempty")
            })
            .collect();
        fs.sort();
        for f in fs {
            for sigma in increasing_sequences(tangential, s)? {
                out.push(TnBasisElement { e: e.clone(), f: f.clone(), sigma, flavor: Flavor::Primal });
            }
        }
    }
    Ok(out)
}

fn require_cell(t: &GeometricSimplex) -> Result<()> {
    if t.dim() != t.ambient_dim() {
        return Err(Error::Domain("t-n bases are built on full-dimensional simplices".into()));
    }
    Ok(())
}

fn check_element(d: usize, elem: &TnBasisElement) -> Result<()> {
    // with e ⊆ f and σ ⊆ 1..s the degree bounds max(s,k) ≤ ℓ ≤ min(k+s,d) hold automatically
    let consistent = elem.e.is_subset_of(&elem.f)
        && elem.f.vertices().last().copied().unwrap_or(0) <= d
        && elem.sigma.bound() == elem.e.dim();
    if !consistent {
        return Err(Error::Domain(format!("inconsistent t-n element {elem:?}")));
    }
    Ok(())
}

/// Realizes elements against precomputed frames of their common anchor.
pub(crate) fn realize_with(t: &GeometricSimplex, frames: &TnFrameSet, elem: &TnBasisElement) -> Result<AltForm> {
    let d = t.ambient_dim();
    let mut vectors: Vec<DVector<f64>> =
        elem.sigma.entries().iter().map(|&i| frames.tangents[i - 1].clone()).collect();
    match elem.flavor {
        Flavor::Primal => {
            vectors.extend(elem.f.difference(&elem.e).into_iter().map(|i| t.gradient(i).clone()));
            Ok(wedge_vectors(d, &vectors))
        }
        Flavor::Dual => {
            for i in elem.f.difference(&elem.e) {
                let n = frames
                    .normal_tn(i)
                    .ok_or_else(|| Error::Domain(format!("vertex {i} is not normal to {:?}", elem.e)))?;
                vectors.push(n.clone());
            }
            Ok(wedge_vectors(d, &vectors))
        }
        Flavor::Hodge => {
            vectors.extend(elem.f.complement_labels(d).into_iter().map(|j| t.gradient(j).clone()));
            Ok(hodge_star(&wedge_vectors(d, &vectors)))
        }
    }
}

/// The constant-coefficient form of `elem` on the cell `t`.
pub fn realize(t: &GeometricSimplex, elem: &TnBasisElement) -> Result<AltForm> {
    require_cell(t)?;
    check_element(t.dim(), elem)?;
    let frames = t.tn_frames(&elem.e)?;
    realize_with(t, &frames, elem)
}

/// Elements anchored at one `e`, realized in the primal and dual flavors.
#[derive(Clone, Debug)]
pub struct TnBasis {
    pub e: AbstractSimplex,
    pub k: usize,
    pub frames: TnFrameSet,
    pub elements: Vec<TnBasisElement>,
    pub primal: Vec<AltForm>,
    pub dual: Vec<AltForm>,
}

impl TnBasis {
    pub fn new(t: &GeometricSimplex, e: &AbstractSimplex, k: usize) -> Result<Self> {
        require_cell(t)?;
        let frames = t.tn_frames(e)?;
        Self::with_frames(t, frames, k)
    }

    pub(crate) fn with_frames(t: &GeometricSimplex, frames: TnFrameSet, k: usize) -> Result<Self> {
        let e = frames.e.clone();
        let elements = decompose_altk(t.dim(), &e, k)?;
        let primal = elements.iter().map(|x| realize_with(t, &frames, x)).collect::<Result<Vec<_>>>()?;
        let dual = elements
            .iter()
            .map(|x| realize_with(t, &frames, &x.with_flavor(Flavor::Dual)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { e, k, frames, elements, primal, dual })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// `P[i][j] = ⟨primal_i, dual_j⟩`.
    pub fn pairing_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| inner(&self.primal[i], &self.dual[j]).expect("same degree"))
    }

    /// `⟨primal_i, dual_i⟩`.
    pub fn pairing_diagonal(&self) -> Vec<f64> {
        self.primal.iter().zip(&self.dual).map(|(p, q)| inner(p, q).expect("same degree")).collect()
    }

    /// Contiguous element ranges sharing the same `f`.
    pub fn groups(&self) -> Vec<(AbstractSimplex, std::ops::Range<usize>)> {
        let mut out: Vec<(AbstractSimplex, std::ops::Range<usize>)> = Vec::new();
        for (i, x) in self.elements.iter().enumerate() {
            match out.last_mut() {
                Some((f, range)) if *f == x.f => range.end = i + 1,
                _ => out.push((x.f.clone(), i..i + 1)),
            }
        }
        out
    }
}

/// Gram matrix `⟨primal_i, dual_j⟩` over the basis anchored at `e`.
pub fn pairing_matrix(t: &GeometricSimplex, e: &AbstractSimplex, k: usize) -> Result<DMatrix<f64>> {
    Ok(TnBasis::new(t, e, k)?.pairing_matrix())
}

/// Returns `c` and the Hodge partner of a dual element, with
/// `⋆(♭t^e_σ ∧ d_f λ̂_{[f\e]}) = c · ♭t^e_{σ^c} ∧ dλ_{[f*]}`.
///
/// `c` is obtained from `|dual|² = c · (dual ∧ ♭t_{σ^c} ∧ dλ_{[f*]})`; the
/// colinearity of both sides is then checked directly.
pub fn hodge_coefficient(t: &GeometricSimplex, elem: &TnBasisElement) -> Result<(f64, TnBasisElement)> {
    hodge_coefficient_with_tol(t, elem, DEFAULT_TOL)
}

pub fn hodge_coefficient_with_tol(
    t: &GeometricSimplex,
    elem: &TnBasisElement,
    tol: f64,
) -> Result<(f64, TnBasisElement)> {
    let (c, partner, _) = hodge_relation(t, elem)?;
    let residual = hodge_residual(t, elem, c)?;
    if residual > tol {
        return Err(Error::Consistency(format!("Hodge colinearity residual {residual:e} for {elem:?}")));
    }
    Ok((c, partner))
}

/// `(c, partner, base)` where `base = ♭t_{σ^c} ∧ dλ_{[f*]}`.
fn hodge_relation(t: &GeometricSimplex, elem: &TnBasisElement) -> Result<(f64, TnBasisElement, AltForm)> {
    require_cell(t)?;
    if elem.flavor != Flavor::Dual {
        return Err(Error::Domain("the Hodge coefficient is defined for dual elements".into()));
    }
    check_element(t.dim(), elem)?;
    let d = t.dim();
    let frames = t.tn_frames(&elem.e)?;
    let dual = realize_with(t, &frames, elem)?;
    let partner = elem.with_flavor(Flavor::Hodge);
    let mut vectors: Vec<DVector<f64>> =
        partner.sigma.entries().iter().map(|&i| frames.tangents[i - 1].clone()).collect();
    vectors.extend(elem.f.complement_labels(d).into_iter().map(|j| t.gradient(j).clone()));
    let base = wedge_vectors(d, &vectors);
    let top = crate::exterior::wedge(&dual, &base)?.coeffs()[0];
    let c = dual.norm().powi(2) / top;
    Ok((c, partner, base))
}

/// `|⋆dual − c·base| / |⋆dual|`.
pub fn hodge_residual(t: &GeometricSimplex, elem: &TnBasisElement, c: f64) -> Result<f64> {
    let (_, _, base) = hodge_relation(t, elem)?;
    let frames = t.tn_frames(&elem.e)?;
    let star = hodge_star(&realize_with(t, &frames, elem)?);
    Ok((&star - &base.scaled(c)).norm() / star.norm())
}
