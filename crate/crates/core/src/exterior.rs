//! Constant-coefficient alternating forms on `R^d`.
//!
//! An [`AltForm`] of degree `k` stores one coefficient per increasing sequence
//! `σ ∈ Σ(k, d)` (lexicographic order), the coefficient of `dx_σ` in the
//! positively oriented orthonormal frame `{dx_i}`. Subspaces enter only through
//! explicit [`Frame`]s; all conversions between frame and ambient coordinates go
//! through the `k`-th compound matrix of the frame (its `k×k` minors).

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};

use crate::combinatorics::{binomial, combinations, concatenation_sign, sequence_rank};
use crate::error::{Error, Result};

/// Default tolerance for tangentiality and orthonormality checks.
pub const DEFAULT_TOL: f64 = 1e-10;

/// 1-based increasing sequences of `Σ(k, d)` in lexicographic order.
pub(crate) fn sequences(k: usize, d: usize) -> Vec<Vec<usize>> {
    let items: Vec<usize> = (1..=d).collect();
    combinations(&items, k)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AltForm {
    d: usize,
    k: usize,
    coeffs: Vec<f64>,
}

impl AltForm {
    pub fn zero(d: usize, k: usize) -> Self {
        assert!(k <= d, "form degree {k} exceeds dimension {d}");
        Self { d, k, coeffs: vec![0.0; binomial(d as i64, k as i64)] }
    }

    pub fn from_coeffs(d: usize, k: usize, coeffs: Vec<f64>) -> Result<Self> {
        if k > d {
            return Err(Error::Domain(format!("form degree {k} exceeds dimension {d}")));
        }
        let n = binomial(d as i64, k as i64);
        if coeffs.len() != n {
            return Err(Error::Domain(format!(
                "a {k}-form on R^{d} has {n} coefficients, got {}",
                coeffs.len()
            )));
        }
        Ok(Self { d, k, coeffs })
    }

    pub fn scalar(d: usize, value: f64) -> Self {
        Self { d, k: 0, coeffs: vec![value] }
    }

    /// `dx_σ` for a 1-based increasing sequence.
    pub fn basis(d: usize, sigma: &[usize]) -> Result<Self> {
        if sigma.windows(2).any(|w| w[0] >= w[1]) || sigma.iter().any(|&i| i == 0 || i > d) {
            return Err(Error::Domain(format!("{sigma:?} is not in Σ({}, {d})", sigma.len())));
        }
        let mut form = Self::zero(d, sigma.len());
        form.coeffs[sequence_rank(sigma, d)] = 1.0;
        Ok(form)
    }

    /// `dx_i`, 1-based.
    pub fn dx(d: usize, i: usize) -> Self {
        Self::basis(d, &[i]).expect("index in range")
    }

    /// The volume form `dx_1 ∧ … ∧ dx_d`.
    pub fn volume(d: usize) -> Self {
        Self { d, k: d, coeffs: vec![1.0] }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn coeff(&self, sigma: &[usize]) -> f64 {
        self.coeffs[sequence_rank(sigma, self.d)]
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { d: self.d, k: self.k, coeffs: self.coeffs.iter().map(|c| c * factor).collect() }
    }

    /// Evaluates the form on `k` vectors: `Σ_σ a_σ det(V[σ, :])`.
    pub fn evaluate(&self, vectors: &[DVector<f64>]) -> Result<f64> {
        if vectors.len() != self.k || vectors.iter().any(|v| v.len() != self.d) {
            return Err(Error::Domain(format!(
                "a {}-form on R^{} needs {} vectors of length {}",
                self.k, self.d, self.k, self.d
            )));
        }
        if self.k == 0 {
            return Ok(self.coeffs[0]);
        }
        let v = DMatrix::from_columns(vectors);
        let minors = compound(&v, self.k);
        Ok((0..self.coeffs.len()).map(|i| self.coeffs[i] * minors[(i, 0)]).sum())
    }

    fn check_same_space(&self, other: &AltForm) {
        assert!(
            self.d == other.d && self.k == other.k,
            "mismatched forms: ({}, {}) vs ({}, {})",
            self.d,
            self.k,
            other.d,
            other.k
        );
    }
}

impl Add for &AltForm {
    type Output = AltForm;
    fn add(self, rhs: &AltForm) -> AltForm {
        self.check_same_space(rhs);
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect();
        AltForm { d: self.d, k: self.k, coeffs }
    }
}

impl Sub for &AltForm {
    type Output = AltForm;
    fn sub(self, rhs: &AltForm) -> AltForm {
        self.check_same_space(rhs);
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect();
        AltForm { d: self.d, k: self.k, coeffs }
    }
}

impl AddAssign<&AltForm> for AltForm {
    fn add_assign(&mut self, rhs: &AltForm) {
        self.check_same_space(rhs);
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl Mul<f64> for &AltForm {
    type Output = AltForm;
    fn mul(self, rhs: f64) -> AltForm {
        self.scaled(rhs)
    }
}

impl Neg for &AltForm {
    type Output = AltForm;
    fn neg(self) -> AltForm {
        self.scaled(-1.0)
    }
}

/// `ω ∧ η`.
pub fn wedge(omega: &AltForm, eta: &AltForm) -> Result<AltForm> {
    if omega.d != eta.d {
        return Err(Error::Domain(format!("wedge of forms on R^{} and R^{}", omega.d, eta.d)));
    }
    let d = omega.d;
    let (p, q) = (omega.k, eta.k);
    if p + q > d {
        return Err(Error::Domain(format!("wedge degree {p}+{q} exceeds dimension {d}")));
    }
    let mut out = AltForm::zero(d, p + q);
    let left = sequences(p, d);
    let right = sequences(q, d);
    let mut merged = Vec::with_capacity(p + q);
    for (sigma, &a) in left.iter().zip(&omega.coeffs) {
        if a == 0.0 {
            continue;
        }
        for (tau, &b) in right.iter().zip(&eta.coeffs) {
            if b == 0.0 || tau.iter().any(|t| sigma.binary_search(t).is_ok()) {
                continue;
            }
            merged.clear();
            merged.extend_from_slice(sigma);
            merged.extend_from_slice(tau);
            merged.sort_unstable();
            let sign = concatenation_sign(sigma, tau) as f64;
            out.coeffs[sequence_rank(&merged, d)] += sign * a * b;
        }
    }
    Ok(out)
}

/// `♭v_1 ∧ … ∧ ♭v_p`, computed directly from the `p×p` minors of `[v_1 … v_p]`.
pub fn wedge_vectors(d: usize, vectors: &[DVector<f64>]) -> AltForm {
    if vectors.is_empty() {
        return AltForm::scalar(d, 1.0);
    }
    let v = DMatrix::from_columns(vectors);
    let minors = compound(&v, vectors.len());
    AltForm { d, k: vectors.len(), coeffs: minors.column(0).iter().copied().collect() }
}

/// `ω ⌟ v`, i.e. `(ω ⌟ v)(v_1, …) = ω(v, v_1, …)`.
pub fn contraction(omega: &AltForm, v: &DVector<f64>) -> Result<AltForm> {
    if omega.k == 0 {
        return Err(Error::Domain("cannot contract a 0-form".into()));
    }
    if v.len() != omega.d {
        return Err(Error::Domain(format!("vector length {} vs dimension {}", v.len(), omega.d)));
    }
    let d = omega.d;
    let mut out = AltForm::zero(d, omega.k - 1);
    let mut reduced = Vec::with_capacity(omega.k - 1);
    for (sigma, &a) in sequences(omega.k, d).iter().zip(&omega.coeffs) {
        if a == 0.0 {
            continue;
        }
        for i in 0..sigma.len() {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            reduced.clear();
            reduced.extend(sigma.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &x)| x));
            out.coeffs[sequence_rank(&reduced, d)] += sign * a * v[sigma[i] - 1];
        }
    }
    Ok(out)
}

/// Hodge star in the ambient positively oriented orthonormal frame:
/// `⋆dx_σ = sign(σ, σ^c) dx_{σ^c}`.
pub fn hodge_star(omega: &AltForm) -> AltForm {
    let d = omega.d;
    let mut out = AltForm::zero(d, d - omega.k);
    for (sigma, &a) in sequences(omega.k, d).iter().zip(&omega.coeffs) {
        let comp: Vec<usize> = (1..=d).filter(|x| sigma.binary_search(x).is_err()).collect();
        out.coeffs[sequence_rank(&comp, d)] = concatenation_sign(sigma, &comp) as f64 * a;
    }
    out
}

/// `⟨ω, η⟩`, for which `{dx_σ}` is orthonormal.
pub fn inner(omega: &AltForm, eta: &AltForm) -> Result<f64> {
    if omega.d != eta.d || omega.k != eta.k {
        return Err(Error::Domain(format!(
            "inner product of a {}-form on R^{} with a {}-form on R^{}",
            omega.k, omega.d, eta.k, eta.d
        )));
    }
    Ok(omega.coeffs.iter().zip(&eta.coeffs).map(|(a, b)| a * b).sum())
}

pub fn flat(v: &DVector<f64>) -> AltForm {
    AltForm { d: v.len(), k: 1, coeffs: v.iter().copied().collect() }
}

pub fn sharp(omega: &AltForm) -> Result<DVector<f64>> {
    if omega.k != 1 {
        return Err(Error::Domain(format!("sharp of a {}-form", omega.k)));
    }
    Ok(DVector::from_column_slice(&omega.coeffs))
}

/// The `k`-th compound matrix: entry `(σ, τ)` is the minor on rows `σ` and
/// columns `τ` (both lexicographic). `k = 0` gives the `1×1` identity.
pub(crate) fn compound(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let rows = sequences(k, m.nrows());
    let cols = sequences(k, m.ncols());
    let mut out = DMatrix::zeros(rows.len(), cols.len());
    let mut minor = DMatrix::zeros(k, k);
    for (i, r) in rows.iter().enumerate() {
        for (j, c) in cols.iter().enumerate() {
            out[(i, j)] = if k == 0 {
                1.0
            } else {
                for (a, &ri) in r.iter().enumerate() {
                    for (b, &cj) in c.iter().enumerate() {
                        minor[(a, b)] = m[(ri - 1, cj - 1)];
                    }
                }
                small_det(&minor)
            };
        }
    }
    out
}

fn small_det(m: &DMatrix<f64>) -> f64 {
    match m.nrows() {
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        3 => {
            m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
                - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
                + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
        }
        _ => m.clone().lu().determinant(),
    }
}

/// An ordered list of vectors in `R^d` spanning an `ℓ`-dimensional subspace.
///
/// A frame with `ℓ < d` orients its span by the order of its vectors; a full
/// frame (`ℓ = d`) is oriented only if its determinant is positive.
#[derive(Clone, Debug)]
pub struct Frame {
    vectors: DMatrix<f64>,
    orthonormal: bool,
    oriented: bool,
}

impl Frame {
    pub fn new(vectors: &[DVector<f64>], ambient_dim: usize, tol: f64) -> Result<Self> {
        if vectors.len() > ambient_dim || vectors.iter().any(|v| v.len() != ambient_dim) {
            return Err(Error::Domain(format!(
                "{} vectors do not form a frame in R^{ambient_dim}",
                vectors.len()
            )));
        }
        let m = if vectors.is_empty() {
            DMatrix::zeros(ambient_dim, 0)
        } else {
            DMatrix::from_columns(vectors)
        };
        let gram = m.transpose() * &m;
        let orthonormal = (&gram - DMatrix::identity(gram.nrows(), gram.ncols())).amax() <= tol;
        let oriented = vectors.len() < ambient_dim || m.determinant() > 0.0;
        Ok(Self { vectors: m, orthonormal, oriented })
    }

    /// `{e_1, …, e_d}`.
    pub fn standard(d: usize) -> Self {
        Self { vectors: DMatrix::identity(d, d), orthonormal: true, oriented: true }
    }

    pub fn ambient_dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.vectors.column(i).into_owned()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn is_orthonormal(&self) -> bool {
        self.orthonormal
    }

    pub fn is_oriented(&self) -> bool {
        self.oriented
    }

    pub fn is_standard(&self) -> bool {
        self.dim() == self.ambient_dim()
            && (&self.vectors - DMatrix::identity(self.dim(), self.dim())).amax() == 0.0
    }

    /// The same subspace with the opposite orientation (first vector negated).
    pub fn reversed(&self) -> Self {
        let mut vectors = self.vectors.clone();
        if vectors.ncols() > 0 {
            vectors.column_mut(0).neg_mut();
        }
        let oriented = vectors.ncols() < vectors.nrows() || vectors.determinant() > 0.0;
        Self { vectors, orthonormal: self.orthonormal, oriented }
    }

    /// Coordinates `v ↦ (t_1·v, …, t_ℓ·v)`.
    pub fn coordinates(&self, v: &DVector<f64>) -> DVector<f64> {
        self.vectors.transpose() * v
    }

    /// Orthogonal projection onto the span (orthonormal frames only).
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.vectors * (self.vectors.transpose() * v)
    }

    /// Matrix mapping frame coefficients of a `k`-form to ambient coefficients.
    pub fn embedding_matrix(&self, k: usize) -> DMatrix<f64> {
        compound(&self.vectors, k)
    }
}

fn require_orthonormal(frame: &Frame) -> Result<()> {
    if !frame.orthonormal {
        return Err(Error::Domain("frame is not orthonormal".into()));
    }
    Ok(())
}

/// Frame coordinates of the restriction of `ω` to the frame's span:
/// the coefficient of `dt_τ` is `ω(t_τ(1), …, t_τ(k))`.
pub fn restrict_to_frame(frame: &Frame, omega: &AltForm) -> Result<AltForm> {
    if omega.d != frame.ambient_dim() {
        return Err(Error::Domain("form and frame live in different spaces".into()));
    }
    if omega.k > frame.dim() {
        return Err(Error::Domain(format!(
            "a {}-form has no nonzero restriction to a {}-dimensional subspace",
            omega.k,
            frame.dim()
        )));
    }
    let e = frame.embedding_matrix(omega.k);
    let a = DVector::from_column_slice(&omega.coeffs);
    let b = e.transpose() * a;
    AltForm::from_coeffs(frame.dim(), omega.k, b.iter().copied().collect())
}

/// `Π_f^* ω_sub`: the ambient form that agrees with `ω_sub` on the frame's span
/// and annihilates its orthogonal complement.
pub fn pullback_embed(frame: &Frame, omega_sub: &AltForm) -> Result<AltForm> {
    require_orthonormal(frame)?;
    if omega_sub.d != frame.dim() {
        return Err(Error::Domain(format!(
            "form on R^{} cannot be embedded through a {}-vector frame",
            omega_sub.d,
            frame.dim()
        )));
    }
    let e = frame.embedding_matrix(omega_sub.k);
    let b = DVector::from_column_slice(&omega_sub.coeffs);
    AltForm::from_coeffs(frame.ambient_dim(), omega_sub.k, (e * b).iter().copied().collect())
}

/// `⋆_f ω` for a form tangential to the frame's span, returned in ambient coordinates.
pub fn hodge_star_in_subspace(frame: &Frame, omega: &AltForm, tol: f64) -> Result<AltForm> {
    require_orthonormal(frame)?;
    if !frame.oriented {
        return Err(Error::Domain("frame is not positively oriented".into()));
    }
    let sub = restrict_to_frame(frame, omega)?;
    let back = pullback_embed(frame, &sub)?;
    let residual = (&back - omega).max_abs();
    if residual > tol * omega.max_abs().max(1.0) {
        return Err(Error::Domain(format!(
            "form is not tangential to the subspace (residual {residual:e})"
        )));
    }
    pullback_embed(frame, &hodge_star(&sub))
}
