//! Geometric simplices in `R^d`: barycentric gradients, surface gradients,
//! tangent frames and the two normal bases anchored at a sub-simplex.
//!
//! Sub-simplices are addressed by [`AbstractSimplex`] values whose labels are
//! vertex positions `0..=m` of the simplex at hand. Every sub-simplex is oriented
//! by its own ascending vertex order, never by a containing cell.

use nalgebra::{DMatrix, DVector};

use crate::combinatorics::{factorial, subsimplices, AbstractSimplex};
use crate::error::{Error, Result};
use crate::exterior::{Frame, DEFAULT_TOL};

/// A simplex is degenerate when `σ_min(E) < DEGENERACY_RATIO · σ_max(E)` for its edge matrix `E`.
pub const DEGENERACY_RATIO: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct GeometricSimplex {
    labels: Vec<usize>,
    points: Vec<DVector<f64>>,
    gradients: Vec<DVector<f64>>,
    frame: Frame,
    volume: f64,
}

impl GeometricSimplex {
    /// An `m`-simplex in `R^d` from `m+1` points, labelled `0..=m`.
    pub fn new(points: Vec<DVector<f64>>) -> Result<Self> {
        let labels = (0..points.len()).collect();
        Self::with_labels(labels, points)
    }

    /// Like [`GeometricSimplex::new`] but recording the labels the points carry in
    /// some host (a cell or a mesh); labels must ascend.
    pub fn with_labels(labels: Vec<usize>, points: Vec<DVector<f64>>) -> Result<Self> {
        if points.is_empty() || labels.len() != points.len() {
            return Err(Error::Domain("a simplex needs one label per point and at least one point".into()));
        }
        if labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain(format!("simplex labels {labels:?} do not ascend")));
        }
        let d = points[0].len();
        let m = points.len() - 1;
        if m > d || points.iter().any(|p| p.len() != d) {
            return Err(Error::Domain(format!("{} points do not span a simplex in R^{d}", points.len())));
        }
        if m == 0 {
            let frame = Frame::new(&[], d, DEFAULT_TOL)?;
            return Ok(Self { labels, points, gradients: vec![DVector::zeros(d)], frame, volume: 1.0 });
        }
        let edges: Vec<DVector<f64>> = points[1..].iter().map(|p| p - &points[0]).collect();
        let e = DMatrix::from_columns(&edges);
        let sv = e.singular_values();
        let (smin, smax) = (sv.min(), sv.max());
        if !(smin > DEGENERACY_RATIO * smax) {
            return Err(Error::Degenerate(format!(
                "edge matrix singular values range from {smin:e} to {smax:e}"
            )));
        }
        let gram = e.transpose() * &e;
        let gram_inv = gram
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("singular edge Gram matrix".into()))?;
        let g = &e * gram_inv;
        let mut gradients = Vec::with_capacity(m + 1);
        let rest: Vec<DVector<f64>> = (0..m).map(|j| g.column(j).into_owned()).collect();
        gradients.push(-rest.iter().fold(DVector::zeros(d), |acc, v| acc + v));
        gradients.extend(rest);
        let volume = gram.determinant().sqrt() / factorial(m);
        let frame = Frame::new(&gram_schmidt(&edges)?, d, DEFAULT_TOL)?;
        Ok(Self { labels, points, gradients, frame, volume })
    }

    /// `{0, e_1, …, e_d}`.
    pub fn reference(d: usize) -> Self {
        let mut points = vec![DVector::zeros(d)];
        for i in 0..d {
            let mut p = DVector::zeros(d);
            p[i] = 1.0;
            points.push(p);
        }
        Self::new(points).expect("reference simplex is nondegenerate")
    }

    pub fn ambient_dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn dim(&self) -> usize {
        self.points.len() - 1
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &DVector<f64> {
        &self.points[i]
    }

    /// `m`-dimensional measure.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn diameter(&self) -> f64 {
        let mut h: f64 = 0.0;
        for a in &self.points {
            for b in &self.points {
                h = h.max((a - b).norm());
            }
        }
        h
    }

    /// `AbstractSimplex` covering all vertices.
    pub fn all(&self) -> AbstractSimplex {
        AbstractSimplex::standard(self.dim())
    }

    /// Barycentric gradients within the simplex's affine hull; they sum to zero.
    pub fn barycentric_gradients(&self) -> &[DVector<f64>] {
        &self.gradients
    }

    pub fn gradient(&self, i: usize) -> &DVector<f64> {
        &self.gradients[i]
    }

    /// `λ_i(x) = 1 + ∇λ_i · (x − v_i)`, extended affinely off the hull.
    pub fn barycentric(&self, x: &DVector<f64>) -> Vec<f64> {
        self.gradients
            .iter()
            .zip(&self.points)
            .map(|(g, v)| 1.0 + g.dot(&(x - v)))
            .collect()
    }

    /// `Σ λ_i v_i`.
    pub fn point_at(&self, lambda: &[f64]) -> DVector<f64> {
        self.points
            .iter()
            .zip(lambda)
            .fold(DVector::zeros(self.ambient_dim()), |acc, (v, &l)| acc + v * l)
    }

    /// Orthonormal frame of the simplex's own tangent space, from Gram–Schmidt on
    /// `v_1 − v_0, …, v_m − v_0`.
    pub fn tangent_frame(&self) -> &Frame {
        &self.frame
    }

    fn check_sub(&self, f: &AbstractSimplex) -> Result<()> {
        if f.vertices().last().copied().unwrap_or(0) > self.dim() {
            return Err(Error::Domain(format!("{f:?} is not a sub-simplex of a {}-simplex", self.dim())));
        }
        Ok(())
    }

    /// The sub-simplex `f` as a geometric simplex with host labels.
    pub fn sub_simplex(&self, f: &AbstractSimplex) -> Result<GeometricSimplex> {
        self.check_sub(f)?;
        let labels = f.vertices().iter().map(|&v| self.labels[v]).collect();
        let points = f.vertices().iter().map(|&v| self.points[v].clone()).collect();
        GeometricSimplex::with_labels(labels, points)
    }

    /// Orthonormal tangents of `f`: modified Gram–Schmidt on its edge vectors taken
    /// from its lowest vertex, in ascending label order.
    pub fn tangents(&self, f: &AbstractSimplex) -> Result<Vec<DVector<f64>>> {
        self.check_sub(f)?;
        let v = f.vertices();
        let edges: Vec<DVector<f64>> = v[1..].iter().map(|&j| &self.points[j] - &self.points[v[0]]).collect();
        gram_schmidt(&edges)
    }

    /// `∇_f λ_i`: the projection of `∇λ_i` onto the tangent space of `f`.
    pub fn surface_gradient(&self, f: &AbstractSimplex, i: usize) -> Result<DVector<f64>> {
        if i > self.dim() {
            return Err(Error::Domain(format!("vertex {i} out of range")));
        }
        let tangents = self.tangents(f)?;
        let g = &self.gradients[i];
        Ok(tangents.iter().fold(DVector::zeros(self.ambient_dim()), |acc, t| acc + t * t.dot(g)))
    }

    /// Positively oriented orthonormal frame of the tangent space of `f` (`dim f ≥ 1`).
    ///
    /// For a proper sub-simplex the orientation is the one of its ascending edge
    /// vectors. For a full-dimensional `f` the ambient frame `{e_i}` is returned,
    /// so that `⋆_f` is the ambient Hodge star.
    pub fn oriented_subframe(&self, f: &AbstractSimplex) -> Result<Frame> {
        self.check_sub(f)?;
        if f.dim() == 0 {
            return Err(Error::Domain("a vertex has no tangent frame".into()));
        }
        if f.dim() == self.ambient_dim() {
            return Ok(Frame::standard(self.ambient_dim()));
        }
        Frame::new(&self.tangents(f)?, self.ambient_dim(), DEFAULT_TOL)
    }

    /// Tangents of `e` with the face-normal basis `{∇λ_i}` and the tangential-normal
    /// basis `{∇_{e∪{i}} λ_i}` over `i ∈ e*`.
    pub fn tn_frames(&self, e: &AbstractSimplex) -> Result<TnFrameSet> {
        self.check_sub(e)?;
        let complement = e.complement_labels(self.dim());
        let normals_face: Vec<DVector<f64>> = complement.iter().map(|&i| self.gradients[i].clone()).collect();
        let normals_tn = complement
            .iter()
            .map(|&i| self.surface_gradient(&e.with_vertex(i), i))
            .collect::<Result<Vec<_>>>()?;
        TnFrameSet::assemble(e.clone(), self.tangents(e)?, complement, normals_face, normals_tn, self.diameter())
    }

    /// The pair of bases `{∇_f λ_i}` and `{∇_{e∪{i}} λ_i}`, `i ∈ f \ e`, of the normal
    /// space of `e` inside `f`.
    pub fn nef_frames(&self, f: &AbstractSimplex, e: &AbstractSimplex) -> Result<TnFrameSet> {
        self.check_sub(f)?;
        if !e.is_subset_of(f) || e.dim() >= f.dim() {
            return Err(Error::Domain(format!("{e:?} is not a proper sub-simplex of {f:?}")));
        }
        let diff = f.difference(e);
        let normals_face = diff.iter().map(|&i| self.surface_gradient(f, i)).collect::<Result<Vec<_>>>()?;
        let normals_tn = diff
            .iter()
            .map(|&i| self.surface_gradient(&e.with_vertex(i), i))
            .collect::<Result<Vec<_>>>()?;
        TnFrameSet::assemble(e.clone(), self.tangents(e)?, diff, normals_face, normals_tn, self.diameter())
    }

    /// Largest scaled `|∇_{f∪{i}}λ_i · ∇λ_j|` over all `f` and `i ≠ j ∈ f*`.
    pub fn tn_orthogonality_residual(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for s in 0..self.dim() {
            for f in subsimplices(&self.all(), s)? {
                let comp = f.complement_labels(self.dim());
                for &i in &comp {
                    let n = self.surface_gradient(&f.with_vertex(i), i)?;
                    for &j in &comp {
                        if i != j {
                            let g = &self.gradients[j];
                            worst = worst.max(n.dot(g).abs() / (n.norm() * g.norm()));
                        }
                    }
                }
            }
        }
        Ok(worst)
    }
}

/// Modified Gram–Schmidt; fails on (numerically) dependent input.
fn gram_schmidt(vectors: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    let scale = vectors.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        for q in &out {
            let c = q.dot(&w);
            w -= q * c;
        }
        let n = w.norm();
        if !(n > DEGENERACY_RATIO * scale) {
            return Err(Error::Degenerate("dependent edge vectors".into()));
        }
        out.push(w / n);
    }
    Ok(out)
}

/// Tangents of an anchor `e` together with two normal families indexed by the
/// same labels, paired diagonally: `normals_tn[a] · normals_face[b] = 0` for `a ≠ b`.
#[derive(Clone, Debug)]
pub struct TnFrameSet {
    pub e: AbstractSimplex,
    pub tangents: Vec<DVector<f64>>,
    /// Vertex labels indexing both normal families.
    pub labels: Vec<usize>,
    pub normals_face: Vec<DVector<f64>>,
    pub normals_tn: Vec<DVector<f64>>,
}

impl TnFrameSet {
    fn assemble(
        e: AbstractSimplex,
        tangents: Vec<DVector<f64>>,
        labels: Vec<usize>,
        normals_face: Vec<DVector<f64>>,
        normals_tn: Vec<DVector<f64>>,
        diameter: f64,
    ) -> Result<Self> {
        let set = Self { e, tangents, labels, normals_face, normals_tn };
        let p = set.pairing_matrix();
        // gradients scale like 1/h
        let scale = 1.0 / (diameter * diameter);
        for a in 0..p.nrows() {
            if !(p[(a, a)].abs() > DEFAULT_TOL * scale) {
                return Err(Error::Consistency(format!("vanishing pairing for vertex {}", set.labels[a])));
            }
            for b in 0..p.ncols() {
                if a != b && p[(a, b)].abs() > DEFAULT_TOL * p[(a, a)].abs().max(scale) {
                    return Err(Error::Consistency(format!(
                        "normal bases are not dual: entry ({a}, {b}) = {:e}",
                        p[(a, b)]
                    )));
                }
            }
        }
        Ok(set)
    }

    /// `P[a][b] = normals_tn[a] · normals_face[b]`.
    pub fn pairing_matrix(&self) -> DMatrix<f64> {
        let n = self.labels.len();
        DMatrix::from_fn(n, n, |a, b| self.normals_tn[a].dot(&self.normals_face[b]))
    }

    pub fn normal_tn(&self, label: usize) -> Option<&DVector<f64>> {
        self.labels.iter().position(|&l| l == label).map(|a| &self.normals_tn[a])
    }

    pub fn normal_face(&self, label: usize) -> Option<&DVector<f64>> {
        self.labels.iter().position(|&l| l == label).map(|a| &self.normals_face[a])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_simplex;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn s(v: &[usize]) -> AbstractSimplex {
        AbstractSimplex::new(v.to_vec()).unwrap()
    }

    #[test]
    fn unit_interval_gradients() {
        let t = GeometricSimplex::new(vec![v(&[0.0]), v(&[1.0])]).unwrap();
        assert_eq!(t.gradient(0)[0], -1.0);
        assert_eq!(t.gradient(1)[0], 1.0);
        assert_eq!(t.volume(), 1.0);
    }

    #[test]
    fn reference_triangle_gradients() {
        let t = GeometricSimplex::reference(2);
        assert!((t.gradient(1) - v(&[1.0, 0.0])).amax() < 1e-15);
        assert!((t.gradient(2) - v(&[0.0, 1.0])).amax() < 1e-15);
        assert!((t.gradient(0) - v(&[-1.0, -1.0])).amax() < 1e-15);
        assert!((t.volume() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_simplex_is_rejected() {
        let r = GeometricSimplex::new(vec![v(&[0.0, 0.0]), v(&[1.0, 1.0]), v(&[2.0, 2.0])]);
        assert!(matches!(r, Err(Error::Degenerate(_))));
    }

    #[test]
    fn gradients_interpolate_and_sum_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in 1..=4 {
            for _ in 0..10 {
                let t = random_simplex(d, &mut rng);
                let sum = t.barycentric_gradients().iter().fold(DVector::zeros(d), |a, g| a + g);
                assert!(sum.amax() < 1e-12);
                for j in 0..=d {
                    let l = t.barycentric(t.point(j));
                    for (i, li) in l.iter().enumerate() {
                        let expect = if i == j { 1.0 } else { 0.0 };
                        assert!((li - expect).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn barycentric_vanishes_on_opposite_faces() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = random_simplex(3, &mut rng);
        for f in subsimplices(&t.all(), 2).unwrap() {
            let face = t.sub_simplex(&f).unwrap();
            let i = f.complement_labels(3)[0];
            for w in [[1.0, 1.0, 1.0], [1.0, 2.0, 0.0], [0.0, 3.0, 1.0]] {
                let total: f64 = w.iter().sum();
                let x = face.point_at(&w.map(|c| c / total));
                assert!(t.barycentric(&x)[i].abs() < 1e-13);
            }
        }
    }

    #[test]
    fn surface_gradient_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = random_simplex(3, &mut rng);
        for i in 0..=3 {
            assert!((t.surface_gradient(&t.all(), i).unwrap() - t.gradient(i)).amax() < 1e-12);
            assert_eq!(t.surface_gradient(&s(&[2]), i).unwrap().amax(), 0.0);
        }
        assert!(t.tn_orthogonality_residual().unwrap() < 1e-12);
    }

    #[test]
    fn tangents_reproduce_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = random_simplex(4, &mut rng);
        for sdim in 1..=4 {
            for e in subsimplices(&t.all(), sdim).unwrap() {
                let tangents = t.tangents(&e).unwrap();
                let frame = Frame::new(&tangents, 4, 1e-12).unwrap();
                assert!(frame.is_orthonormal());
                for &j in &e.vertices()[1..] {
                    let edge = t.point(j) - t.point(e.vertices()[0]);
                    assert!((frame.project(&edge) - &edge).amax() < 1e-12);
                }
                for &i in &e.complement_labels(4) {
                    for tv in &tangents {
                        assert!(t.gradient(i).dot(tv).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn vertex_anchor_normals_are_scaled_edge_tangents() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_simplex(3, &mut rng);
        let set = t.tn_frames(&s(&[0])).unwrap();
        for (a, &i) in set.labels.iter().enumerate() {
            let edge = t.point(i) - t.point(0);
            let n = &set.normals_tn[a];
            // parallel to the edge, with λ_i increasing along it
            assert!((n.dot(&edge).abs() - n.norm() * edge.norm()).abs() < 1e-12);
            assert!((n.dot(&edge) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn edge_anchor_pairing_is_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let t = random_simplex(3, &mut rng);
        let set = t.tn_frames(&s(&[0, 1])).unwrap();
        assert_eq!(set.labels, vec![2, 3]);
        let p = set.pairing_matrix();
        assert!(p[(0, 1)].abs() < 1e-12 && p[(1, 0)].abs() < 1e-12);
        for a in 0..2 {
            assert!((p[(a, a)] - set.normals_tn[a].norm_squared()).abs() < 1e-12);
        }
    }

    #[test]
    fn nef_frames_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = random_simplex(3, &mut rng);
        let whole = t.nef_frames(&t.all(), &s(&[1])).unwrap();
        let tn = t.tn_frames(&s(&[1])).unwrap();
        for a in 0..3 {
            assert!((&whole.normals_face[a] - &tn.normals_face[a]).amax() < 1e-12);
            assert!((&whole.normals_tn[a] - &tn.normals_tn[a]).amax() < 1e-12);
        }
        let one = t.nef_frames(&s(&[0, 1, 3]), &s(&[0, 3])).unwrap();
        let (a, b) = (&one.normals_face[0], &one.normals_tn[0]);
        assert!((a.dot(b).abs() - a.norm() * b.norm()).abs() < 1e-12);
        let two = t.nef_frames(&s(&[0, 1, 2, 3]), &s(&[2, 3])).unwrap();
        let m = DMatrix::from_columns(&[
            two.normals_face[0].clone(),
            two.normals_face[1].clone(),
            two.normals_tn[0].clone(),
            two.normals_tn[1].clone(),
        ]);
        assert_eq!(m.rank(1e-10), 2);
        assert!(t.nef_frames(&s(&[0, 1]), &s(&[2])).is_err());
    }

    #[test]
    fn oriented_subframe_examples() {
        let t = GeometricSimplex::reference(2);
        assert!(t.oriented_subframe(&t.all()).unwrap().matrix().determinant() > 0.0);
        let edge = t.oriented_subframe(&s(&[1, 2])).unwrap();
        let expect = v(&[-1.0, 1.0]) / 2f64.sqrt();
        assert!((edge.vector(0) - expect).amax() < 1e-15);
        // a shared face gets the same frame from either neighbour
        let a = GeometricSimplex::new(vec![v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 1.0])]).unwrap();
        let b = GeometricSimplex::new(vec![v(&[1.0, 0.0]), v(&[0.0, 1.0]), v(&[1.0, 1.0])]).unwrap();
        let fa = a.oriented_subframe(&s(&[1, 2])).unwrap();
        let fb = b.oriented_subframe(&s(&[0, 1])).unwrap();
        assert_eq!(fa.matrix(), fb.matrix());
    }
}
