//! Polynomial differential forms `P_rΛ^k(T)`: traces, exterior derivative, DoFs,
//! shape and dual bases, bubble spaces and the checks built on them.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::combinatorics::{binomial, increasing_sequences, opposite, subsimplices, AbstractSimplex, IncreasingSequence};
use crate::error::{Error, Result};
use crate::exterior::{
    compound, contraction, flat, hodge_star, hodge_star_in_subspace, inner, sequences, wedge, wedge_vectors, AltForm,
    Frame, DEFAULT_TOL,
};
use crate::linalg::{condition_number, off_diagonal_max, rank_info, strict_upper_block_max};
use crate::poly::{lagrange_to_bernstein, lattice, lattice_rank, monomial_integral, vandermonde, BernsteinPoly};
use crate::report::Report;
use crate::simplex::GeometricSimplex;
use crate::tnbasis::{hodge_coefficient, TnBasis};

/// `dim P_r` on an `m`-simplex.
pub fn poly_dim(m: usize, r: usize) -> usize {
    binomial((r + m) as i64, m as i64)
}

/// `dim Alt^k(R^m)`, zero for `k > m`.
pub fn alt_dim(m: usize, k: usize) -> usize {
    binomial(m as i64, k as i64)
}

/// `dim P_rΛ^k(T)` for a `d`-simplex.
pub fn space_dim(d: usize, r: usize, k: usize) -> usize {
    poly_dim(d, r) * alt_dim(d, k)
}

/// A form `Σ_α Σ_σ c[α,σ] λ^α dt_σ` on a simplex, where `dt_σ` are the coordinate
/// forms of an orthonormal frame of the simplex's tangent space. On a cell the frame
/// is the ambient `{e_i}`.
#[derive(Clone, Debug)]
pub struct PolyForm {
    simplex: Arc<GeometricSimplex>,
    frame: Arc<Frame>,
    r: usize,
    k: usize,
    coeffs: DMatrix<f64>,
}

impl PolyForm {
    pub fn new(simplex: Arc<GeometricSimplex>, frame: Arc<Frame>, r: usize, k: usize, coeffs: DMatrix<f64>) -> Result<Self> {
        let m = simplex.dim();
        if frame.dim() != m || frame.ambient_dim() != simplex.ambient_dim() || !frame.is_orthonormal() {
            return Err(Error::Domain("frame does not match the simplex's tangent space".into()));
        }
        if coeffs.shape() != (poly_dim(m, r), alt_dim(m, k)) {
            return Err(Error::Domain(format!(
                "coefficient shape {:?} does not match r={r}, k={k} on a {m}-simplex",
                coeffs.shape()
            )));
        }
        Ok(Self { simplex, frame, r, k, coeffs })
    }

    /// A form on a full-dimensional simplex, in ambient coordinates.
    pub fn on_cell(cell: Arc<GeometricSimplex>, r: usize, k: usize, coeffs: DMatrix<f64>) -> Result<Self> {
        require_cell(&cell)?;
        let frame = Arc::new(Frame::standard(cell.dim()));
        Self::new(cell, frame, r, k, coeffs)
    }

    pub fn zero_on_cell(cell: Arc<GeometricSimplex>, r: usize, k: usize) -> Result<Self> {
        let d = cell.dim();
        Self::on_cell(cell, r, k, DMatrix::zeros(poly_dim(d, r), alt_dim(d, k)))
    }

    /// `p · w` for a polynomial and a constant ambient form on a cell.
    pub fn from_product(cell: &Arc<GeometricSimplex>, p: &BernsteinPoly, w: &AltForm) -> Result<Self> {
        if p.dim() != cell.dim() || w.dim() != cell.ambient_dim() {
            return Err(Error::Domain("factors do not live on this cell".into()));
        }
        let c = DMatrix::from_fn(p.coeffs().len(), w.coeffs().len(), |a, j| p.coeffs()[a] * w.coeffs()[j]);
        Self::on_cell(cell.clone(), p.degree(), w.degree(), c)
    }

    /// Inverse of [`PolyForm::to_vector`] on a cell.
    pub fn from_vector(cell: &Arc<GeometricSimplex>, r: usize, k: usize, v: &DVector<f64>) -> Result<Self> {
        let d = cell.dim();
        let (p, a) = (poly_dim(d, r), alt_dim(d, k));
        if v.len() != p * a {
            return Err(Error::Domain(format!("vector of length {} for a space of dimension {}", v.len(), p * a)));
        }
        Self::on_cell(cell.clone(), r, k, DMatrix::from_fn(p, a, |i, j| v[i * a + j]))
    }

    pub fn simplex(&self) -> &Arc<GeometricSimplex> {
        &self.simplex
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    /// Polynomial degree `r`.
    pub fn degree(&self) -> usize {
        self.r
    }

    pub fn form_degree(&self) -> usize {
        self.k
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Coefficients flattened with the lattice index outermost.
    pub fn to_vector(&self) -> DVector<f64> {
        let (p, a) = self.coeffs.shape();
        DVector::from_fn(p * a, |i, _| self.coeffs[(i / a, i % a)])
    }

    /// The polynomial multiplying `dt_σ`, `σ` the `j`-th sequence.
    pub fn component(&self, j: usize) -> BernsteinPoly {
        BernsteinPoly::new(self.simplex.dim(), self.r, self.coeffs.column(j).iter().copied().collect())
            .expect("shape checked on construction")
    }

    fn with_coeffs(&self, r: usize, k: usize, coeffs: DMatrix<f64>) -> Self {
        Self { simplex: self.simplex.clone(), frame: self.frame.clone(), r, k, coeffs }
    }

    fn from_components(&self, r: usize, k: usize, comps: &[BernsteinPoly]) -> Self {
        let p = poly_dim(self.simplex.dim(), r);
        let c = DMatrix::from_fn(p, comps.len(), |a, j| comps[j].coeffs()[a]);
        self.with_coeffs(r, k, c)
    }

    /// Value at barycentric coordinates, in frame coordinates.
    pub fn eval_lambda(&self, lambda: &[f64]) -> Result<AltForm> {
        let m = self.simplex.dim();
        if lambda.len() != m + 1 {
            return Err(Error::Domain(format!("{} barycentric coordinates on a {m}-simplex", lambda.len())));
        }
        let mut out = vec![0.0; self.coeffs.ncols()];
        for (a, alpha) in lattice(m, self.r as i64).iter().enumerate() {
            let v: f64 = alpha.iter().zip(lambda).map(|(&p, &l)| l.powi(p as i32)).product();
            for (j, o) in out.iter_mut().enumerate() {
                *o += v * self.coeffs[(a, j)];
            }
        }
        AltForm::from_coeffs(m, self.k, out)
    }

    /// Value at `x`, in frame coordinates.
    pub fn eval(&self, x: &DVector<f64>) -> Result<AltForm> {
        self.eval_lambda(&self.simplex.barycentric(x))
    }

    /// Value at `x` as an ambient form (`Π^*` of the frame value).
    pub fn eval_ambient(&self, x: &DVector<f64>) -> Result<AltForm> {
        if self.k > self.simplex.dim() {
            return Ok(AltForm::zero(self.simplex.ambient_dim(), self.k));
        }
        crate::exterior::pullback_embed(&self.frame, &self.eval(x)?)
    }

    fn check_compatible(&self, other: &PolyForm) -> Result<()> {
        if !Arc::ptr_eq(&self.simplex, &other.simplex) && self.simplex.points() != other.simplex.points() {
            return Err(Error::Domain("forms live on different simplices".into()));
        }
        if self.k != other.k || (self.frame.matrix() - other.frame.matrix()).amax() > 0.0 {
            return Err(Error::Domain("forms differ in degree or frame".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &PolyForm) -> Result<PolyForm> {
        self.check_compatible(other)?;
        let r = self.r.max(other.r);
        let a = self.elevate(r)?;
        let b = other.elevate(r)?;
        Ok(self.with_coeffs(r, self.k, a.coeffs + b.coeffs))
    }

    pub fn scaled(&self, factor: f64) -> PolyForm {
        self.with_coeffs(self.r, self.k, &self.coeffs * factor)
    }

    /// The same form written with polynomial degree `r ≥ self.degree()`.
    pub fn elevate(&self, r: usize) -> Result<PolyForm> {
        if r == self.r {
            return Ok(self.clone());
        }
        let comps = (0..self.coeffs.ncols())
            .map(|j| self.component(j).elevate(r))
            .collect::<Result<Vec<_>>>()?;
        let mut out = self.from_components(r, self.k, &comps);
        if comps.is_empty() {
            out.coeffs = DMatrix::zeros(poly_dim(self.simplex.dim(), r), 0);
        }
        Ok(out)
    }

    /// Frame used for traces on `f`: its own ascending-edge frame, never one that
    /// depends on the surrounding simplex.
    pub fn face_frame(&self, f: &AbstractSimplex) -> Result<Frame> {
        if f.dim() == 0 {
            Frame::new(&[], self.simplex.ambient_dim(), DEFAULT_TOL)
        } else {
            self.simplex.oriented_subframe(f)
        }
    }

    /// `tr_f ω` in the face's own frame.
    pub fn trace(&self, f: &AbstractSimplex) -> Result<PolyForm> {
        let frame = self.face_frame(f)?;
        self.trace_with_frame(f, frame)
    }

    /// `tr_f ω` in coordinates of `frame`, an orthonormal frame of the tangent space of `f`.
    pub fn trace_with_frame(&self, f: &AbstractSimplex, frame: Frame) -> Result<PolyForm> {
        let sub = Arc::new(self.simplex.sub_simplex(f)?);
        let l = f.dim();
        if frame.dim() != l {
            return Err(Error::Domain(format!("{}-vector frame for a {l}-dimensional face", frame.dim())));
        }
        let change = compound(&(self.frame.matrix().transpose() * frame.matrix()), self.k);
        let mut coeffs = DMatrix::zeros(poly_dim(l, self.r), alt_dim(l, self.k));
        if coeffs.ncols() > 0 {
            let m = self.simplex.dim();
            for (a, local) in lattice(l, self.r as i64).iter().enumerate() {
                let mut full = vec![0; m + 1];
                for (pos, &v) in f.vertices().iter().enumerate() {
                    full[v] = local[pos];
                }
                let row = self.coeffs.row(lattice_rank(&full)) * &change;
                coeffs.row_mut(a).copy_from(&row);
            }
        }
        PolyForm::new(sub, Arc::new(frame), self.r, self.k, coeffs)
    }

    /// `tr^n_F ω = tr_F(ω ⌟ n_F)` with the unit outward normal of the facet `F`,
    /// in the facet's own frame.
    pub fn normal_trace(&self, facet: &AbstractSimplex) -> Result<PolyForm> {
        let frame = self.face_frame(facet)?;
        self.normal_trace_with_frame(facet, frame)
    }

    pub fn normal_trace_with_frame(&self, facet: &AbstractSimplex, frame: Frame) -> Result<PolyForm> {
        if self.k == 0 {
            return Err(Error::Domain("the normal trace of a 0-form is undefined".into()));
        }
        let m = self.simplex.dim();
        if facet.dim() + 1 != m {
            return Err(Error::Domain(format!("{facet:?} is not a facet of a {m}-simplex")));
        }
        let i = opposite(facet, m)?.vertices()[0];
        let g = self.simplex.gradient(i);
        let normal = self.frame.coordinates(&(-g / g.norm()));
        let mut coeffs = DMatrix::zeros(self.coeffs.nrows(), alt_dim(m, self.k - 1));
        for a in 0..self.coeffs.nrows() {
            let w = AltForm::from_coeffs(m, self.k, self.coeffs.row(a).iter().copied().collect())?;
            let c = contraction(&w, &normal)?;
            for (j, &v) in c.coeffs().iter().enumerate() {
                coeffs[(a, j)] = v;
            }
        }
        self.with_coeffs(self.r, self.k - 1, coeffs).trace_with_frame(facet, frame)
    }

    /// Hodge star in frame coordinates, relative to the orientation of the frame.
    pub fn hodge(&self) -> Result<PolyForm> {
        let m = self.simplex.dim();
        if self.k > m {
            return Err(Error::Domain("no Hodge star of a form above the dimension".into()));
        }
        let mut coeffs = DMatrix::zeros(self.coeffs.nrows(), alt_dim(m, m - self.k));
        for a in 0..self.coeffs.nrows() {
            let w = AltForm::from_coeffs(m, self.k, self.coeffs.row(a).iter().copied().collect())?;
            for (j, &v) in hodge_star(&w).coeffs().iter().enumerate() {
                coeffs[(a, j)] = v;
            }
        }
        Ok(self.with_coeffs(self.r, m - self.k, coeffs))
    }

    /// `dω = Σ_i ∂_i p_σ dλ_i ∧ dt_σ`, exact in the monomial representation.
    pub fn exterior_derivative(&self) -> Result<PolyForm> {
        let m = self.simplex.dim();
        if self.k >= m {
            return Err(Error::Domain(format!("d of a {}-form on a {m}-simplex", self.k)));
        }
        let r = self.r.saturating_sub(1);
        let mut out = DMatrix::zeros(poly_dim(m, r), alt_dim(m, self.k + 1));
        if self.r == 0 {
            return Ok(self.with_coeffs(0, self.k + 1, out));
        }
        let basis_k = sequences(self.k, m);
        let wedges: Vec<DMatrix<f64>> = (0..=m)
            .map(|i| {
                let g = flat(&self.frame.coordinates(self.simplex.gradient(i)));
                let mut w = DMatrix::zeros(alt_dim(m, self.k + 1), basis_k.len());
                for (j, sigma) in basis_k.iter().enumerate() {
                    let prod = wedge(&g, &AltForm::basis(m, sigma).expect("valid sequence")).expect("degree fits");
                    for (t, &v) in prod.coeffs().iter().enumerate() {
                        w[(t, j)] = v;
                    }
                }
                w
            })
            .collect();
        for j in 0..basis_k.len() {
            for (i, deriv) in self.component(j).barycentric_derivatives().iter().enumerate() {
                let p = DVector::from_column_slice(deriv.coeffs());
                out += p * wedges[i].column(j).transpose();
            }
        }
        Ok(self.with_coeffs(r, self.k + 1, out))
    }

    /// `∫ ⟨ω, η⟩` over the simplex, exact.
    pub fn integrate_inner(&self, other: &PolyForm) -> Result<f64> {
        self.check_compatible(other)?;
        let m = self.simplex.dim();
        let vol = self.simplex.volume();
        let la = lattice(m, self.r as i64);
        let lb = lattice(m, other.r as i64);
        let mut total = 0.0;
        let mut sum = vec![0; m + 1];
        for (a, alpha) in la.iter().enumerate() {
            for (b, beta) in lb.iter().enumerate() {
                let dot = self.coeffs.row(a).dot(&other.coeffs.row(b));
                if dot != 0.0 {
                    for i in 0..=m {
                        sum[i] = alpha[i] + beta[i];
                    }
                    total += dot * monomial_integral(&sum, vol);
                }
            }
        }
        Ok(total)
    }

    /// `∫ ω` of a top-degree form, with the orientation of the frame.
    pub fn integrate(&self) -> Result<f64> {
        let m = self.simplex.dim();
        if self.k != m {
            return Err(Error::Domain(format!("only {m}-forms integrate over a {m}-simplex")));
        }
        Ok(self.component(0).integrate(self.simplex.volume()))
    }
}

fn require_cell(t: &GeometricSimplex) -> Result<()> {
    if t.dim() != t.ambient_dim() {
        return Err(Error::Domain("expected a full-dimensional simplex".into()));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DofFlavor {
    /// Point values at interior lattice points of `e`.
    Nodal,
    /// Moments against `λ_e^q` on `e`.
    Integral,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DofPayload {
    /// Cell lattice index `α` with `x_α` interior to `e`.
    Nodal(Vec<usize>),
    /// Exponent `q` of `λ_e^q`, `|q| = r − (s+1)`.
    Moment(Vec<usize>),
}

/// `N(ω) = ⟨ω, ♭t^e_σ ∧ d_fλ̂_{[f\e]}⟩` at `x_α` or integrated against `λ_e^q`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Dof {
    pub e: AbstractSimplex,
    pub f: AbstractSimplex,
    pub sigma: IncreasingSequence,
    pub payload: DofPayload,
}

impl Dof {
    fn sort_key(&self) -> (usize, &AbstractSimplex, &AbstractSimplex, &[usize], &DofPayload) {
        (self.e.dim(), &self.e, &self.f, self.sigma.entries(), &self.payload)
    }

    /// The cell lattice index `q + 1_e` shared by both payload kinds.
    pub fn alpha(&self, d: usize) -> Vec<usize> {
        match &self.payload {
            DofPayload::Nodal(alpha) => alpha.clone(),
            DofPayload::Moment(q) => {
                let mut alpha = vec![0; d + 1];
                for (pos, &v) in self.e.vertices().iter().enumerate() {
                    alpha[v] = q[pos] + 1;
                }
                alpha
            }
        }
    }
}

/// All DoFs of `P_rΛ^k` on a `d`-simplex, ordered by `dim e`, `e`, `f`, `σ`, payload.
pub fn build_dofs(d: usize, r: usize, k: usize, flavor: DofFlavor) -> Result<Vec<Dof>> {
    if r == 0 {
        return Err(Error::Domain("DoFs need polynomial degree r ≥ 1".into()));
    }
    if k > d {
        return Err(Error::Domain(format!("form degree {k} exceeds dimension {d}")));
    }
    let mut out = Vec::new();
    for s in 0..=d {
        for e in subsimplices(&AbstractSimplex::standard(d), s)? {
            let qs = lattice(s, r as i64 - (s as i64 + 1));
            for elem in crate::tnbasis::decompose_altk(d, &e, k)? {
                for q in &qs {
                    let payload = match flavor {
                        DofFlavor::Integral => DofPayload::Moment(q.clone()),
                        DofFlavor::Nodal => {
                            let mut alpha = vec![0; d + 1];
                            for (pos, &v) in e.vertices().iter().enumerate() {
                                alpha[v] = q[pos] + 1;
                            }
                            DofPayload::Nodal(alpha)
                        }
                    };
                    out.push(Dof { e: e.clone(), f: elem.f.clone(), sigma: elem.sigma.clone(), payload });
                }
            }
        }
    }
    out.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    Ok(out)
}

/// The DoFs of `P_rΛ^k(T)` on one cell with their t-n forms.
#[derive(Clone, Debug)]
pub struct LocalSpace {
    cell: Arc<GeometricSimplex>,
    r: usize,
    k: usize,
    flavor: DofFlavor,
    dofs: Vec<Dof>,
    bases: BTreeMap<AbstractSimplex, TnBasis>,
    slots: Vec<usize>,
}

impl LocalSpace {
    pub fn new(cell: Arc<GeometricSimplex>, r: usize, k: usize, flavor: DofFlavor) -> Result<Self> {
        Self::build(cell, r, k, flavor, false)
    }

    /// With `flip_tangents`, every anchor of dimension ≥ 1 uses the reverse of its
    /// tangent orientation: a deliberately inconsistent local convention.
    pub(crate) fn build(
        cell: Arc<GeometricSimplex>,
        r: usize,
        k: usize,
        flavor: DofFlavor,
        flip_tangents: bool,
    ) -> Result<Self> {
        require_cell(&cell)?;
        let d = cell.dim();
        let dofs = build_dofs(d, r, k, flavor)?;
        let mut bases = BTreeMap::new();
        for dof in &dofs {
            if !bases.contains_key(&dof.e) {
                let mut frames = cell.tn_frames(&dof.e)?;
                if flip_tangents && !frames.tangents.is_empty() {
                    frames.tangents[0].neg_mut();
                }
                bases.insert(dof.e.clone(), TnBasis::with_frames(&cell, frames, k)?);
            }
        }
        let slots = dofs
            .iter()
            .map(|dof| {
                bases[&dof.e]
                    .elements
                    .iter()
                    .position(|x| x.f == dof.f && x.sigma == dof.sigma)
                    .expect("every DoF has its t-n element")
            })
            .collect();
        Ok(Self { cell, r, k, flavor, dofs, bases, slots })
    }

    pub fn cell(&self) -> &Arc<GeometricSimplex> {
        &self.cell
    }

    pub fn degree(&self) -> usize {
        self.r
    }

    pub fn form_degree(&self) -> usize {
        self.k
    }

    pub fn flavor(&self) -> DofFlavor {
        self.flavor
    }

    pub fn dofs(&self) -> &[Dof] {
        &self.dofs
    }

    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    pub fn primal(&self, i: usize) -> &AltForm {
        &self.bases[&self.dofs[i].e].primal[self.slots[i]]
    }

    pub fn dual(&self, i: usize) -> &AltForm {
        &self.bases[&self.dofs[i].e].dual[self.slots[i]]
    }

    /// `⟨primal_i, dual_i⟩`.
    pub fn pairing(&self, i: usize) -> f64 {
        inner(self.primal(i), self.dual(i)).expect("same degree")
    }

    /// Start of each `dim e` block, with the total length appended.
    pub fn block_offsets(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut current = None;
        for (i, dof) in self.dofs.iter().enumerate() {
            if current != Some(dof.e.dim()) {
                current = Some(dof.e.dim());
                out.push(i);
            }
        }
        out.push(self.dofs.len());
        out
    }

    /// Polynomial weights `w_β` with `N_i(λ^β w) = w_β ⟨w, dual_i⟩` for constant `w`.
    fn polynomial_weights(&self, i: usize) -> Result<Vec<f64>> {
        let d = self.cell.dim();
        let dof = &self.dofs[i];
        match &dof.payload {
            DofPayload::Nodal(alpha) => {
                let v = vandermonde(d, self.r)?;
                Ok(v.row(lattice_rank(alpha)).iter().copied().collect())
            }
            DofPayload::Moment(q) => {
                let volume = self.cell.sub_simplex(&dof.e)?.volume();
                Ok(lattice(d, self.r as i64)
                    .iter()
                    .map(|beta| {
                        if (0..=d).any(|v| beta[v] > 0 && !dof.e.contains(v)) {
                            return 0.0;
                        }
                        let local: Vec<usize> =
                            dof.e.vertices().iter().zip(q).map(|(&v, &qv)| beta[v] + qv).collect();
                        monomial_integral(&local, volume)
                    })
                    .collect())
            }
        }
    }

    fn functional_with(&self, i: usize, alt: &[f64]) -> Result<DVector<f64>> {
        let w = self.polynomial_weights(i)?;
        let a = alt.len();
        Ok(DVector::from_fn(w.len() * a, |idx, _| w[idx / a] * alt[idx % a]))
    }

    /// Row vector of DoF `i` against [`PolyForm::to_vector`] coordinates.
    pub fn functional(&self, i: usize) -> Result<DVector<f64>> {
        self.functional_with(i, self.dual(i).coeffs())
    }

    /// All functionals stacked as rows.
    pub fn functionals(&self) -> Result<DMatrix<f64>> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, space_dim(self.cell.dim(), self.r, self.k));
        for i in 0..n {
            m.row_mut(i).copy_from(&self.functional(i)?.transpose());
        }
        Ok(m)
    }

    fn prepared(&self, omega: &PolyForm) -> Result<DVector<f64>> {
        if omega.form_degree() != self.k || omega.degree() > self.r || omega.simplex().points() != self.cell.points() {
            return Err(Error::Domain("form does not belong to this local space".into()));
        }
        if !omega.frame().is_standard() {
            return Err(Error::Domain("DoFs act on forms in ambient coordinates".into()));
        }
        Ok(omega.elevate(self.r)?.to_vector())
    }

    pub fn apply(&self, i: usize, omega: &PolyForm) -> Result<f64> {
        Ok(self.functional(i)?.dot(&self.prepared(omega)?))
    }

    /// Values of all DoFs on `omega`.
    pub fn apply_all(&self, omega: &PolyForm) -> Result<DVector<f64>> {
        Ok(self.functionals()? * self.prepared(omega)?)
    }

    /// `♭t^e_{σ^c} ∧ dλ_{[f*]}` for DoF `i`.
    fn hodge_base(&self, i: usize) -> AltForm {
        let d = self.cell.dim();
        let dof = &self.dofs[i];
        let tangents = &self.bases[&dof.e].frames.tangents;
        let mut vectors: Vec<DVector<f64>> = crate::combinatorics::complement(&dof.sigma)
            .entries()
            .iter()
            .map(|&j| tangents[j - 1].clone())
            .collect();
        vectors.extend(dof.f.complement_labels(d).into_iter().map(|j| self.cell.gradient(j).clone()));
        wedge_vectors(d, &vectors)
    }

    /// The Hodge-form variant `∫_e ⋆(ω ∧ ♭t^e_{σ^c} ∧ dλ_{[f*]}) λ_e^q` (integral flavor).
    pub fn apply_hodge(&self, i: usize, omega: &PolyForm) -> Result<f64> {
        if self.flavor != DofFlavor::Integral {
            return Err(Error::Domain("the Hodge variant is a moment DoF".into()));
        }
        let d = self.cell.dim();
        let base = self.hodge_base(i);
        let alt: Vec<f64> = sequences(self.k, d)
            .iter()
            .map(|sigma| Ok(wedge(&AltForm::basis(d, sigma)?, &base)?.coeffs()[0]))
            .collect::<Result<_>>()?;
        Ok(self.functional_with(i, &alt)?.dot(&self.prepared(omega)?))
    }

    /// `c` with `N_i = c · (Hodge variant of N_i)`.
    pub fn hodge_coefficient(&self, i: usize) -> Result<f64> {
        let dof = &self.dofs[i];
        let elem = self.bases[&dof.e].elements[self.slots[i]].with_flavor(crate::tnbasis::Flavor::Dual);
        Ok(hodge_coefficient(&self.cell, &elem)?.0)
    }

    /// `λ^α · primal_i` with `α = q + 1_e`.
    pub fn shape(&self, i: usize) -> Result<PolyForm> {
        let alpha = self.dofs[i].alpha(self.cell.dim());
        PolyForm::from_product(&self.cell, &BernsteinPoly::monomial(&alpha), self.primal(i))
    }

    /// `φ_α · primal_i` with the Lagrange polynomial `φ_α`.
    pub fn dual_shape(&self, i: usize) -> Result<PolyForm> {
        let alpha = self.dofs[i].alpha(self.cell.dim());
        PolyForm::from_product(&self.cell, &lagrange_to_bernstein(&alpha), self.primal(i))
    }

    fn columns(&self, f: impl Fn(usize) -> Result<PolyForm>) -> Result<DMatrix<f64>> {
        let n = self.len();
        let mut m = DMatrix::zeros(space_dim(self.cell.dim(), self.r, self.k), n);
        for j in 0..n {
            m.column_mut(j).copy_from(&f(j)?.to_vector());
        }
        Ok(m)
    }

    pub fn shapes_matrix(&self) -> Result<DMatrix<f64>> {
        self.columns(|j| self.shape(j))
    }

    pub fn dual_shapes_matrix(&self) -> Result<DMatrix<f64>> {
        self.columns(|j| self.dual_shape(j))
    }

    /// `M[i][j] = N_i(shape_j)`.
    pub fn dof_basis_matrix(&self) -> Result<DMatrix<f64>> {
        Ok(self.functionals()? * self.shapes_matrix()?)
    }

    /// Basis dual to the nodal DoFs: `dual_shape_i / pairing_i` (nodal flavor).
    pub fn nodal_basis_matrix(&self) -> Result<DMatrix<f64>> {
        if self.flavor != DofFlavor::Nodal {
            return Err(Error::Domain("the Lagrange-type dual basis belongs to nodal DoFs".into()));
        }
        let mut m = self.dual_shapes_matrix()?;
        for j in 0..self.len() {
            let p = self.pairing(j);
            m.column_mut(j).scale_mut(1.0 / p);
        }
        Ok(m)
    }
}

/// The form in `P_rΛ^k(T)` whose nodal DoFs match those of `sampler`.
pub fn interpolate<F>(cell: &Arc<GeometricSimplex>, r: usize, k: usize, sampler: F) -> Result<PolyForm>
where
    F: Fn(&DVector<f64>) -> AltForm,
{
    let space = LocalSpace::new(cell.clone(), r, k, DofFlavor::Nodal)?;
    let d = cell.dim();
    let mut v = DVector::zeros(space_dim(d, r, k));
    for (i, dof) in space.dofs().iter().enumerate() {
        let alpha = dof.alpha(d);
        let lambda: Vec<f64> = alpha.iter().map(|&a| a as f64 / r as f64).collect();
        let value = sampler(&cell.point_at(&lambda));
        let n = inner(&value, space.dual(i))?;
        v += space.dual_shape(i)?.to_vector() * (n / space.pairing(i));
    }
    PolyForm::from_vector(cell, r, k, &v)
}

/// Label of one bubble basis member `λ^{q+1_e} ⋆_f ♭t^e_τ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BubbleLabel {
    pub e: AbstractSimplex,
    pub q: Vec<usize>,
    pub tau: IncreasingSequence,
}

/// `B_rΛ^k(f) = ⊕_{e ⊆ f} b_e ⋆_f P_{r−(s+1)}Λ^{ℓ−k}(e)`, realized on the cell.
#[derive(Clone, Debug)]
pub struct BubbleSpace {
    pub f: AbstractSimplex,
    pub r: usize,
    pub k: usize,
    pub basis: Vec<PolyForm>,
    pub labels: Vec<BubbleLabel>,
}

impl BubbleSpace {
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Basis coefficients as columns; `rows` is `dim P_rΛ^k(T)`.
    pub fn matrix(&self, rows: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(rows, self.basis.len());
        for (j, b) in self.basis.iter().enumerate() {
            m.column_mut(j).copy_from(&b.to_vector());
        }
        m
    }
}

/// `Σ_{s=ℓ−k}^{ℓ} C(ℓ+1, s+1) · dim P_{r−(s+1)}(e) · C(s, ℓ−k)`.
pub fn bubble_dimension(l: usize, r: usize, k: usize) -> usize {
    if k > l {
        return 0;
    }
    (l - k..=l)
        .map(|s| {
            binomial((l + 1) as i64, (s + 1) as i64)
                * binomial(r as i64 - 1, s as i64)
                * binomial(s as i64, (l - k) as i64)
        })
        .sum()
}

pub fn bubble_space(cell: &Arc<GeometricSimplex>, f: &AbstractSimplex, r: usize, k: usize) -> Result<BubbleSpace> {
    require_cell(cell)?;
    let d = cell.dim();
    let l = f.dim();
    if k > l {
        return Err(Error::Domain(format!("B_rΛ^{k} on a {l}-dimensional simplex")));
    }
    if f.vertices().last().copied().unwrap_or(0) > d {
        return Err(Error::Domain(format!("{f:?} is not a sub-simplex of a {d}-simplex")));
    }
    let frame = if l == 0 { None } else { Some(cell.oriented_subframe(f)?) };
    let mut basis = Vec::new();
    let mut labels = Vec::new();
    for s in l - k..=l {
        let qs = lattice(s, r as i64 - (s as i64 + 1));
        if qs.is_empty() {
            continue;
        }
        for e in subsimplices(f, s)? {
            let tangents = cell.tangents(&e)?;
            for tau in increasing_sequences(l - k, s)? {
                let form = match &frame {
                    None => AltForm::scalar(d, 1.0),
                    Some(frame) => {
                        let vectors: Vec<DVector<f64>> =
                            tau.entries().iter().map(|&j| tangents[j - 1].clone()).collect();
                        hodge_star_in_subspace(frame, &wedge_vectors(d, &vectors), DEFAULT_TOL)?
                    }
                };
                for q in &qs {
                    let mut alpha = vec![0; d + 1];
                    for (pos, &v) in e.vertices().iter().enumerate() {
                        alpha[v] = q[pos] + 1;
                    }
                    basis.push(PolyForm::from_product(cell, &BernsteinPoly::monomial(&alpha), &form)?);
                    labels.push(BubbleLabel { e: e.clone(), q: q.clone(), tau: tau.clone() });
                }
            }
        }
    }
    Ok(BubbleSpace { f: f.clone(), r, k, basis, labels })
}

/// Largest trace coefficient of the members of `space` on the facets of its carrier.
pub fn bubble_trace_residual(space: &BubbleSpace) -> Result<f64> {
    let l = space.f.dim();
    if l == 0 || space.k == l {
        return Ok(0.0);
    }
    let mut worst: f64 = 0.0;
    for g in subsimplices(&space.f, l - 1)? {
        for b in &space.basis {
            worst = worst.max(b.trace(&g)?.max_abs());
        }
    }
    Ok(worst)
}

/// Largest `|tr_F ω(x)|` over lattice points `x` of each facet `F` of the cell.
fn sampled_boundary_trace(omega: &PolyForm, points_per_edge: usize) -> Result<f64> {
    let d = omega.simplex().dim();
    let mut worst: f64 = 0.0;
    for i in 0..=d {
        let facet = opposite(&AbstractSimplex::vertex(i), d)?;
        let tr = omega.trace(&facet)?;
        for alpha in lattice(d - 1, points_per_edge as i64) {
            let lambda: Vec<f64> = alpha.iter().map(|&a| a as f64 / points_per_edge as f64).collect();
            worst = worst.max(tr.eval_lambda(&lambda)?.max_abs());
        }
    }
    Ok(worst)
}

/// Stacked facet-trace operator on `P_rΛ^k(T)` in [`PolyForm::to_vector`] coordinates.
pub fn boundary_trace_matrix(cell: &Arc<GeometricSimplex>, r: usize, k: usize) -> Result<DMatrix<f64>> {
    let d = cell.dim();
    let n = space_dim(d, r, k);
    let facets: Vec<AbstractSimplex> =
        (0..=d).map(|i| opposite(&AbstractSimplex::vertex(i), d)).collect::<Result<_>>()?;
    let rows_per = poly_dim(d - 1, r) * alt_dim(d - 1, k);
    let mut m = DMatrix::zeros(rows_per * facets.len(), n);
    for j in 0..n {
        let mut unit = DVector::zeros(n);
        unit[j] = 1.0;
        let omega = PolyForm::from_vector(cell, r, k, &unit)?;
        for (b, facet) in facets.iter().enumerate() {
            let t = omega.trace(facet)?.to_vector();
            m.view_mut((b * rows_per, j), (rows_per, 1)).copy_from(&t);
        }
    }
    Ok(m)
}

/// `dim B_rΛ^k(T)` against the nullity of the boundary trace operator, plus
/// vanishing traces of the constructed basis.
pub fn bubble_kernel_check(cell: &Arc<GeometricSimplex>, r: usize, k: usize) -> Result<Report> {
    let d = cell.dim();
    if k >= d {
        return Err(Error::Domain("the trace kernel check needs k ≤ d − 1".into()));
    }
    let mut report = Report::new("bubble_kernel");
    report.param("d", d).param("r", r).param("k", k);
    let space = bubble_space(cell, &cell.all(), r, k)?;
    let expected = bubble_dimension(d, r, k);
    let traces = boundary_trace_matrix(cell, r, k)?;
    let kernel = rank_info(&traces);
    let basis = space.matrix(space_dim(d, r, k));
    let basis_rank = rank_info(&basis);
    report
        .dim("bubble_formula", expected)
        .dim("bubble_basis", space.len())
        .dim("space", space_dim(d, r, k))
        .rank("trace_operator", kernel.rank)
        .rank("bubble_basis", basis_rank.rank)
        .dim("trace_kernel", kernel.nullity);
    let mut sampled: f64 = 0.0;
    for b in &space.basis {
        sampled = sampled.max(sampled_boundary_trace(b, r.max(2))?);
    }
    let coeff = bubble_trace_residual(&space)?;
    report.residual("boundary_trace_samples", sampled).residual("boundary_trace_coefficients", coeff);
    report
        .require(space.len() == expected, || format!("basis has {} members, formula gives {expected}", space.len()))
        .require(kernel.nullity == expected, || format!("trace kernel has dimension {}, expected {expected}", kernel.nullity))
        .require(basis_rank.rank == space.len(), || "bubble basis is linearly dependent".into())
        .require(sampled < 1e-12, || format!("bubble trace sample {sampled:e} on the boundary"));
    if kernel.ambiguous() || basis_rank.ambiguous() {
        report.note("rank decision within a factor 10 of the threshold");
    }
    Ok(report)
}

/// Least-squares coordinates of the columns of `v` in the column space of `basis`,
/// with the largest relative residual.
fn coordinates_in(basis: &DMatrix<f64>, v: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    if basis.ncols() == 0 {
        return (DMatrix::zeros(0, v.ncols()), v.iter().fold(0.0, |m, x| m.max(x.abs())));
    }
    let svd = basis.clone().svd(true, true);
    let x = svd.solve(v, 1e-14).expect("both factors computed");
    let residual = (basis * &x - v).amax() / v.amax().max(1.0);
    (x, residual)
}

/// Exactness of `0 → B_{r+k}Λ^0 → … → B_{r+k−d}Λ^d → R` on the cell.
///
/// Slot `j` holds `B_{r+k−j}Λ^j(T)`; the top slot needs `r + k − d ≥ 1`.
pub fn bubble_complex_check(cell: &Arc<GeometricSimplex>, r: usize, k: usize) -> Result<Report> {
    let d = cell.dim();
    if r + k < d + 1 {
        return Err(Error::Domain(format!("top bubble degree r + k − d = {} must be ≥ 1", r as i64 + k as i64 - d as i64)));
    }
    let mut report = Report::new("bubble_complex");
    report.param("d", d).param("r", r).param("k", k);
    let degree = |j: usize| r + k - j;
    let spaces: Vec<BubbleSpace> =
        (0..=d).map(|j| bubble_space(cell, &cell.all(), degree(j), j)).collect::<Result<_>>()?;
    let matrices: Vec<DMatrix<f64>> =
        (0..=d).map(|j| spaces[j].matrix(space_dim(d, degree(j), j))).collect();
    for (j, s) in spaces.iter().enumerate() {
        report.dim(&format!("slot_{j}"), s.len());
    }
    // maps[j] sends slot j to slot j+1; the last one is the integral
    let mut maps: Vec<DMatrix<f64>> = Vec::new();
    for j in 0..d {
        let mut images = DMatrix::zeros(matrices[j + 1].nrows(), spaces[j].len());
        for (c, b) in spaces[j].basis.iter().enumerate() {
            images.column_mut(c).copy_from(&b.exterior_derivative()?.to_vector());
        }
        let (x, residual) = coordinates_in(&matrices[j + 1], &images);
        report.residual("derivative_in_bubbles", residual);
        maps.push(x);
    }
    let integral = DMatrix::from_fn(1, spaces[d].len(), |_, c| spaces[d].basis[c].integrate().expect("top degree"));
    maps.push(integral);
    let infos: Vec<_> = maps.iter().map(rank_info).collect();
    for (j, info) in infos.iter().enumerate() {
        report.rank(&format!("map_{j}"), info.rank);
        if info.ambiguous() {
            report.note(format!("rank of map {j} is within a factor 10 of the threshold"));
        }
    }
    for j in 0..d {
        let composite = &maps[j + 1] * &maps[j];
        let scale = maps[j + 1].amax().max(1.0) * maps[j].amax().max(1.0);
        report.residual("d_squared", composite.amax() / scale);
    }
    report.require(infos[0].nullity == 0, || "first map is not injective".into());
    for j in 1..=d {
        let (nullity, image) = (infos[j].nullity, infos[j - 1].rank);
        report.require(nullity == image, || format!("slot {j}: kernel dimension {nullity} but image dimension {image}"));
    }
    report.require(infos[d].rank == 1, || "integral is not surjective".into());
    let (into, dd) = (report.residuals["derivative_in_bubbles"], report.residuals["d_squared"]);
    report
        .require(into < 1e-9, || format!("derivative leaves the bubble space (residual {into:e})"))
        .require(dd < 1e-10, || format!("d∘d residual {dd:e}"));
    Ok(report)
}

/// `P_rΛ^k(T)` split by anchor `e` (t-n shape functions) and by carrier `f`
/// (bubble spaces); each group and each full stack must have full rank.
pub fn geometric_decomposition_check(cell: &Arc<GeometricSimplex>, r: usize, k: usize) -> Result<Report> {
    let d = cell.dim();
    let n = space_dim(d, r, k);
    let mut report = Report::new("geometric_decomposition");
    report.param("d", d).param("r", r).param("k", k).dim("space", n);

    let space = LocalSpace::new(cell.clone(), r, k, DofFlavor::Integral)?;
    let shapes = space.shapes_matrix()?;
    let mut by_anchor: BTreeMap<AbstractSimplex, Vec<usize>> = BTreeMap::new();
    for (i, dof) in space.dofs().iter().enumerate() {
        by_anchor.entry(dof.e.clone()).or_default().push(i);
    }
    let mut anchor_dims = vec![0; d + 1];
    for (e, cols) in &by_anchor {
        anchor_dims[e.dim()] += cols.len();
        let sub = shapes.select_columns(cols);
        let rk = rank_info(&sub).rank;
        report.require(rk == cols.len(), || format!("anchor {e:?}: rank {rk} of {}", cols.len()));
    }
    for (s, &dim) in anchor_dims.iter().enumerate() {
        report.dim(&format!("anchor_dim_{s}"), dim);
    }
    let anchor_rank = rank_info(&shapes).rank;
    report.rank("anchor_stack", anchor_rank);
    report.require(shapes.ncols() == n && anchor_rank == n, || format!("anchor stack has rank {anchor_rank} of {n}"));

    let mut columns: Vec<DVector<f64>> = Vec::new();
    for l in k..=d {
        let mut total = 0;
        for f in subsimplices(&cell.all(), l)? {
            let b = bubble_space(cell, &f, r, k)?;
            let expected = bubble_dimension(l, r, k);
            let m = b.matrix(n);
            let rk = rank_info(&m).rank;
            report.require(b.len() == expected && rk == expected, || {
                format!("carrier {f:?}: {} members of rank {rk}, expected {expected}", b.len())
            });
            total += b.len();
            columns.extend(m.column_iter().map(|c| c.into_owned()));
        }
        report.dim(&format!("carrier_dim_{l}"), total);
    }
    let stack = if columns.is_empty() { DMatrix::zeros(n, 0) } else { DMatrix::from_columns(&columns) };
    let carrier_rank = rank_info(&stack).rank;
    report.rank("carrier_stack", carrier_rank);
    report.require(stack.ncols() == n && carrier_rank == n, || {
        format!("carrier stack has {} columns of rank {carrier_rank}, expected {n}", stack.ncols())
    });
    Ok(report)
}

/// Invertibility and block lower-triangular structure of the DoF–basis matrix.
pub fn unisolvence_check(cell: &Arc<GeometricSimplex>, r: usize, k: usize, flavor: DofFlavor) -> Result<Report> {
    let d = cell.dim();
    let space = LocalSpace::new(cell.clone(), r, k, flavor)?;
    let m = space.dof_basis_matrix()?;
    let offsets = space.block_offsets();
    let mut report = Report::new("unisolvence");
    report.param("d", d).param("r", r).param("k", k).param("flavor", flavor);
    let n = space.len();
    let info = rank_info(&m);
    let upper = strict_upper_block_max(&m, &offsets);
    report
        .dim("dofs", n)
        .dim("space", space_dim(d, r, k))
        .rank("dof_basis_matrix", info.rank)
        .residual("strict_upper_block", upper)
        .residual("condition_number", condition_number(&m));
    report
        .require(n == space_dim(d, r, k), || format!("{n} DoFs for a space of dimension {}", space_dim(d, r, k)))
        .require(info.rank == n, || format!("DoF–basis matrix has rank {} of {n}", info.rank))
        .require(upper < 1e-12, || format!("strict upper block entry {upper:e}"));
    for b in 0..offsets.len() - 1 {
        let (lo, hi) = (offsets[b], offsets[b + 1]);
        let block = m.view((lo, lo), (hi - lo, hi - lo)).into_owned();
        let rk = rank_info(&block).rank;
        report.require(rk == hi - lo, || format!("diagonal block {b} has rank {rk} of {}", hi - lo));
    }
    Ok(report)
}

/// Nodal DoFs against the Lagrange-type dual basis: diagonal with the pairing scalars.
pub fn nodal_duality_check(cell: &Arc<GeometricSimplex>, r: usize, k: usize) -> Result<Report> {
    let space = LocalSpace::new(cell.clone(), r, k, DofFlavor::Nodal)?;
    let m = space.functionals()? * space.dual_shapes_matrix()?;
    let mut report = Report::new("nodal_duality");
    report.param("d", cell.dim()).param("r", r).param("k", k).dim("dofs", space.len());
    let off = off_diagonal_max(&m);
    let mut diag_err: f64 = 0.0;
    let mut smallest = f64::INFINITY;
    for i in 0..space.len() {
        let p = space.pairing(i);
        diag_err = diag_err.max((m[(i, i)] - p).abs() / p.abs());
        smallest = smallest.min(m[(i, i)].abs());
    }
    report.residual("off_diagonal", off).residual("diagonal_vs_pairing", diag_err);
    report
        .require(off < 1e-12, || format!("off-diagonal entry {off:e}"))
        .require(smallest > 1e-12, || format!("diagonal entry {smallest:e}"))
        .require(diag_err < 1e-10, || format!("diagonal differs from pairing by {diag_err:e}"));
    Ok(report)
}

/// Integral DoFs against their Hodge-form variants on `omega`: `N_i(ω) = c_i N^⋆_i(ω)`.
pub fn hodge_dof_check(cell: &Arc<GeometricSimplex>, omega: &PolyForm) -> Result<Report> {
    let (r, k) = (omega.degree().max(1), omega.form_degree());
    let space = LocalSpace::new(cell.clone(), r, k, DofFlavor::Integral)?;
    let mut report = Report::new("hodge_dofs");
    report.param("d", cell.dim()).param("r", r).param("k", k);
    let values = space.apply_all(omega)?;
    let scale = values.amax().max(1e-300);
    let mut smallest_c = f64::INFINITY;
    for i in 0..space.len() {
        let c = space.hodge_coefficient(i)?;
        smallest_c = smallest_c.min(c.abs());
        let h = space.apply_hodge(i, omega)?;
        report.residual("ratio", (values[i] - c * h).abs() / scale);
    }
    let ratio = report.residuals.get("ratio").copied().unwrap_or(0.0);
    report
        .require(ratio < 1e-10, || format!("DoFs differ from c × Hodge variant by {ratio:e}"))
        .require(smallest_c > 1e-12, || format!("Hodge coefficient {smallest_c:e}"));
    report.param("smallest_coefficient", smallest_c);
    Ok(report)
}

/// Frame of the facet opposite vertex `i` with the boundary orientation (outward
/// normal first), and the orientation sign of a point facet when `d = 1`.
pub fn induced_facet_orientation(cell: &GeometricSimplex, i: usize) -> Result<(AbstractSimplex, Frame, f64)> {
    require_cell(cell)?;
    let d = cell.dim();
    let facet = opposite(&AbstractSimplex::vertex(i), d)?;
    let g = cell.gradient(i);
    let normal = -g / g.norm();
    if d == 1 {
        let frame = Frame::new(&[], 1, DEFAULT_TOL)?;
        return Ok((facet, frame, normal[0].signum()));
    }
    let frame = cell.oriented_subframe(&facet)?;
    let mut columns = vec![normal];
    columns.extend((0..frame.dim()).map(|c| frame.vector(c)));
    let frame = if DMatrix::from_columns(&columns).determinant() < 0.0 { frame.reversed() } else { frame };
    Ok((facet, frame, 1.0))
}

/// Largest coefficient of `⋆_F tr_F ω − sign · tr^n_F ⋆_T ω` on the facet opposite
/// vertex `i`, relative to the size of `ω`.
pub fn trace_duality_residual_signed(cell: &Arc<GeometricSimplex>, omega: &PolyForm, i: usize, sign: f64) -> Result<f64> {
    let (facet, frame, orientation) = induced_facet_orientation(cell, i)?;
    let lhs = omega.trace_with_frame(&facet, frame.clone())?.hodge()?.scaled(orientation);
    let rhs = omega.hodge()?.normal_trace_with_frame(&facet, frame)?.scaled(sign);
    Ok((lhs.coeffs() - rhs.coeffs()).amax() / omega.max_abs().max(1.0))
}

/// `⋆_F tr_F ω = (−1)^k tr^n_F ⋆_T ω` on the facet opposite vertex `i`.
pub fn trace_duality_residual(cell: &Arc<GeometricSimplex>, omega: &PolyForm, i: usize) -> Result<f64> {
    let sign = if omega.form_degree() % 2 == 0 { 1.0 } else { -1.0 };
    trace_duality_residual_signed(cell, omega, i, sign)
}

/// The member `b_e ⋆_F ♭t^e` of `B_2Λ^1(F)`, `F = {0,1,2}`, `e = {0,1}`, on a
/// tetrahedron, and its trace on the facet `{0,1,3}`, which contains `e` but not `F`.
/// That trace does not vanish unless `F` meets `{0,1,3}` at a right angle.
pub fn bubble_face_witness(cell: &Arc<GeometricSimplex>) -> Result<Report> {
    if cell.dim() != 3 {
        return Err(Error::Domain("the face witness lives on a tetrahedron".into()));
    }
    let f = AbstractSimplex::new(vec![0, 1, 2])?;
    let e = AbstractSimplex::new(vec![0, 1])?;
    let other = AbstractSimplex::new(vec![0, 1, 3])?;
    let space = bubble_space(cell, &f, 2, 1)?;
    let idx = space
        .labels
        .iter()
        .position(|l| l.e == e)
        .ok_or_else(|| Error::Consistency("edge bubble missing from B_2Λ^1(F)".into()))?;
    let member = &space.basis[idx];
    let trace = member.trace(&other)?;
    let mut sampled: f64 = 0.0;
    for alpha in lattice(2, 4) {
        let lambda: Vec<f64> = alpha.iter().map(|&a| a as f64 / 4.0).collect();
        sampled = sampled.max(trace.eval_lambda(&lambda)?.max_abs());
    }
    // ⋆_F ♭t^e is ± the unit in-face normal of e, i.e. ∇_F λ_2 / |∇_F λ_2|
    let n = cell.surface_gradient(&f, 2)?;
    let reference = PolyForm::from_product(cell, &BernsteinPoly::bubble(&e, 3), &flat(&(&n / n.norm())))?.trace(&other)?;
    let plus = (trace.coeffs() - reference.coeffs()).amax();
    let minus = (trace.coeffs() + reference.coeffs()).amax();
    let (g2, g3) = (cell.gradient(2), cell.gradient(3));
    let cosine = g2.dot(g3) / (g2.norm() * g3.norm());
    let mut report = Report::new("bubble_face_witness");
    report
        .param("f", &f)
        .param("e", &e)
        .param("facet", &other)
        .param("face_normal_cosine", cosine)
        .residual("trace_magnitude", sampled)
        .residual("in_face_normal_formula", plus.min(minus));
    report
        .require(cosine.abs() > 1e-6, || "the two faces meet at a right angle".into())
        .require(sampled > 1e-6, || format!("trace magnitude {sampled:e} does not exceed 1e-6"))
        .require(plus.min(minus) < 1e-12, || "trace differs from the in-face normal expression".into());
    Ok(report)
}
