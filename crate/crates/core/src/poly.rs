//! Polynomials on a simplex in the barycentric monomial basis `λ^α`, the
//! simplicial lattice with its interpolation points, and the Lagrange nodal basis.
//!
//! A polynomial of degree `r` on an `m`-simplex is stored as coefficients over
//! `T^m_r = {α ∈ N^{m+1} : |α| = r}` in lexicographic order. The representation is
//! homogeneous: lower-degree polynomials are raised with `Σ λ_i = 1`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::combinatorics::{binomial, factorial, subsimplices, AbstractSimplex};
use crate::error::{Error, Result};
use crate::simplex::GeometricSimplex;

/// Largest polynomial degree accepted by the nodal conversions.
pub const MAX_DEGREE: usize = 10;

/// All `α ∈ N^{dim+1}` with `|α| = r`, lexicographically ascending; empty for `r < 0`.
pub fn lattice(dim: usize, r: i64) -> Vec<Vec<usize>> {
    if r < 0 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(binomial(r + dim as i64, dim as i64));
    let mut current = vec![0; dim + 1];
    fill(&mut current, 0, r as usize, &mut out);
    out
}

fn fill(current: &mut Vec<usize>, pos: usize, remaining: usize, out: &mut Vec<Vec<usize>>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(current.clone());
        return;
    }
    for c in 0..=remaining {
        current[pos] = c;
        fill(current, pos + 1, remaining - c, out);
    }
}

/// Position of `α` in `lattice(α.len() − 1, |α|)`.
pub fn lattice_rank(alpha: &[usize]) -> usize {
    let m = alpha.len() - 1;
    let mut remaining: usize = alpha.iter().sum();
    let mut rank = 0;
    for (i, &a) in alpha[..m].iter().enumerate() {
        let rest = (m - i - 1) as i64;
        for c in 0..a {
            rank += binomial((remaining - c) as i64 + rest, rest);
        }
        remaining -= a;
    }
    rank
}

/// `α! = Π α_i!`.
pub fn multi_factorial(alpha: &[usize]) -> f64 {
    alpha.iter().map(|&a| factorial(a)).product()
}

/// Vertices where `α` is positive.
pub fn support(alpha: &[usize]) -> Option<AbstractSimplex> {
    let v: Vec<usize> = (0..alpha.len()).filter(|&i| alpha[i] > 0).collect();
    AbstractSimplex::new(v).ok()
}

/// `∫_T λ^α = |T| α! m! / (|α| + m)!` on an `m`-simplex of measure `volume`.
pub fn monomial_integral(alpha: &[usize], volume: f64) -> f64 {
    let m = alpha.len() - 1;
    let total: usize = alpha.iter().sum();
    volume * multi_factorial(alpha) * factorial(m) / factorial(total + m)
}

/// `∫_T λ^α dx`.
pub fn integrate_bernstein(alpha: &[usize], t: &GeometricSimplex) -> Result<f64> {
    if alpha.len() != t.dim() + 1 {
        return Err(Error::Domain(format!("multi-index {alpha:?} on a {}-simplex", t.dim())));
    }
    Ok(monomial_integral(alpha, t.volume()))
}

/// A point of the principal lattice `x_α = Σ (α_i / r) v_i` and the sub-simplex
/// carrying it in its relative interior.
#[derive(Clone, Debug)]
pub struct LatticePoint {
    pub alpha: Vec<usize>,
    pub point: DVector<f64>,
    pub carrier: AbstractSimplex,
}

pub fn interpolation_points(t: &GeometricSimplex, r: usize) -> Result<Vec<LatticePoint>> {
    if r == 0 {
        return Err(Error::Domain("degree 0 has no nodal lattice".into()));
    }
    Ok(lattice(t.dim(), r as i64)
        .into_iter()
        .map(|alpha| {
            let lambda: Vec<f64> = alpha.iter().map(|&a| a as f64 / r as f64).collect();
            let carrier = support(&alpha).expect("|α| = r > 0");
            LatticePoint { point: t.point_at(&lambda), carrier, alpha }
        })
        .collect())
}

/// `φ_α = (1/α!) Π_i Π_{j<α_i} (r λ_i − j)` evaluated at barycentric coordinates.
pub fn lagrange_eval(alpha: &[usize], lambda: &[f64]) -> f64 {
    let r: usize = alpha.iter().sum();
    let mut v = 1.0 / multi_factorial(alpha);
    for (&a, &l) in alpha.iter().zip(lambda) {
        for j in 0..a {
            v *= r as f64 * l - j as f64;
        }
    }
    v
}

/// Polynomial `Σ_α c_α λ^α` of homogeneous degree `r` on an `m`-simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct BernsteinPoly {
    dim: usize,
    r: usize,
    coeffs: Vec<f64>,
}

impl BernsteinPoly {
    pub fn zero(dim: usize, r: usize) -> Self {
        Self { dim, r, coeffs: vec![0.0; binomial((r + dim) as i64, dim as i64)] }
    }

    pub fn new(dim: usize, r: usize, coeffs: Vec<f64>) -> Result<Self> {
        let n = binomial((r + dim) as i64, dim as i64);
        if coeffs.len() != n {
            return Err(Error::Domain(format!(
                "degree {r} on a {dim}-simplex needs {n} coefficients, got {}",
                coeffs.len()
            )));
        }
        Ok(Self { dim, r, coeffs })
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        Self { dim, r: 0, coeffs: vec![value] }
    }

    pub fn monomial(alpha: &[usize]) -> Self {
        let r = alpha.iter().sum();
        let mut p = Self::zero(alpha.len() - 1, r);
        p.coeffs[lattice_rank(alpha)] = 1.0;
        p
    }

    /// `b_f = Π_{i∈f} λ_i` on a `dim`-simplex.
    pub fn bubble(f: &AbstractSimplex, dim: usize) -> Self {
        let mut alpha = vec![0; dim + 1];
        for &v in f.vertices() {
            alpha[v] = 1;
        }
        Self::monomial(&alpha)
    }

    /// The affine function `Σ a_i λ_i`.
    pub fn linear(a: &[f64]) -> Self {
        let dim = a.len() - 1;
        let mut p = Self::zero(dim, 1);
        for (i, &c) in a.iter().enumerate() {
            let mut alpha = vec![0; dim + 1];
            alpha[i] = 1;
            p.coeffs[lattice_rank(&alpha)] = c;
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.r
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn eval(&self, lambda: &[f64]) -> f64 {
        lattice(self.dim, self.r as i64)
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, &c)| c != 0.0)
            .map(|(alpha, &c)| c * alpha.iter().zip(lambda).map(|(&a, &l)| l.powi(a as i32)).product::<f64>())
            .sum()
    }

    pub fn eval_at(&self, t: &GeometricSimplex, x: &DVector<f64>) -> f64 {
        self.eval(&t.barycentric(x))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { dim: self.dim, r: self.r, coeffs: self.coeffs.iter().map(|c| c * factor).collect() }
    }

    pub fn add(&self, other: &BernsteinPoly) -> Result<Self> {
        let r = self.r.max(other.r);
        let a = self.elevate(r)?;
        let b = other.elevate(r)?;
        let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + y).collect();
        Ok(Self { dim: self.dim, r, coeffs })
    }

    pub fn mul(&self, other: &BernsteinPoly) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Domain("product of polynomials on different simplices".into()));
        }
        let mut out = Self::zero(self.dim, self.r + other.r);
        let la = lattice(self.dim, self.r as i64);
        let lb = lattice(self.dim, other.r as i64);
        let mut sum = vec![0; self.dim + 1];
        for (a, &ca) in la.iter().zip(&self.coeffs) {
            if ca == 0.0 {
                continue;
            }
            for (b, &cb) in lb.iter().zip(&other.coeffs) {
                if cb == 0.0 {
                    continue;
                }
                for i in 0..=self.dim {
                    sum[i] = a[i] + b[i];
                }
                out.coeffs[lattice_rank(&sum)] += ca * cb;
            }
        }
        Ok(out)
    }

    /// The same polynomial written with degree `r ≥ self.degree()`.
    pub fn elevate(&self, r: usize) -> Result<Self> {
        if r < self.r {
            return Err(Error::Domain(format!("cannot lower degree {} to {r}", self.r)));
        }
        let mut p = self.clone();
        let one = Self::linear(&vec![1.0; self.dim + 1]);
        while p.r < r {
            p = p.mul(&one)?;
        }
        Ok(p)
    }

    /// `∂λ^α = Σ_i α_i λ^{α − e_i} ∇λ_i`: entry `i` is the coefficient of `∇λ_i`.
    pub fn barycentric_derivatives(&self) -> Vec<BernsteinPoly> {
        let r = self.r;
        let mut out = vec![Self::zero(self.dim, r.saturating_sub(1)); self.dim + 1];
        if r == 0 {
            return out;
        }
        for (alpha, &c) in lattice(self.dim, r as i64).iter().zip(&self.coeffs) {
            if c == 0.0 {
                continue;
            }
            for i in 0..=self.dim {
                if alpha[i] > 0 {
                    let mut lower = alpha.clone();
                    lower[i] -= 1;
                    out[i].coeffs[lattice_rank(&lower)] += c * alpha[i] as f64;
                }
            }
        }
        out
    }

    /// Cartesian gradient on `t`.
    pub fn gradient(&self, t: &GeometricSimplex) -> Vec<(BernsteinPoly, DVector<f64>)> {
        self.barycentric_derivatives().into_iter().zip(t.barycentric_gradients().iter().cloned()).collect()
    }

    /// Restriction to the face `f` (labels are positions in this simplex).
    pub fn restrict(&self, f: &AbstractSimplex) -> Self {
        let mut out = Self::zero(f.dim(), self.r);
        for (alpha, &c) in lattice(self.dim, self.r as i64).iter().zip(&self.coeffs) {
            if (0..=self.dim).all(|i| alpha[i] == 0 || f.contains(i)) {
                let local: Vec<usize> = f.vertices().iter().map(|&v| alpha[v]).collect();
                out.coeffs[lattice_rank(&local)] = c;
            }
        }
        out
    }

    /// Extension from the face `f` by the same barycentric expression.
    pub fn extend(&self, f: &AbstractSimplex, dim: usize) -> Self {
        let mut out = Self::zero(dim, self.r);
        for (alpha, &c) in lattice(self.dim, self.r as i64).iter().zip(&self.coeffs) {
            let mut full = vec![0; dim + 1];
            for (j, &v) in f.vertices().iter().enumerate() {
                full[v] = alpha[j];
            }
            out.coeffs[lattice_rank(&full)] = c;
        }
        out
    }

    /// `∫` over an `m`-simplex of measure `volume`.
    pub fn integrate(&self, volume: f64) -> f64 {
        lattice(self.dim, self.r as i64)
            .iter()
            .zip(&self.coeffs)
            .map(|(alpha, &c)| c * monomial_integral(alpha, volume))
            .sum()
    }
}

/// `φ_α` expanded in `λ^β`, `|β| = |α|`, by homogenizing each factor to `r λ_i − j Σ_m λ_m`.
pub fn lagrange_to_bernstein(alpha: &[usize]) -> BernsteinPoly {
    let dim = alpha.len() - 1;
    let r: usize = alpha.iter().sum();
    let mut p = BernsteinPoly::constant(dim, 1.0 / multi_factorial(alpha));
    for (i, &a) in alpha.iter().enumerate() {
        for j in 0..a {
            let mut factor = vec![-(j as f64); dim + 1];
            factor[i] += r as f64;
            p = p.mul(&BernsteinPoly::linear(&factor)).expect("same dimension");
        }
    }
    if r == 0 {
        p
    } else {
        p.elevate(r).expect("degree only grows")
    }
}

type ConversionCache = Mutex<HashMap<(usize, usize), Arc<DMatrix<f64>>>>;

fn vandermonde_cache() -> &'static ConversionCache {
    static CACHE: OnceLock<ConversionCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `V[β][α] = λ(x_β)^α = Π_i (β_i / r)^{α_i}`: nodal values of the monomials.
/// Independent of the geometry; memoized per `(dim, r)`.
pub fn vandermonde(dim: usize, r: usize) -> Result<Arc<DMatrix<f64>>> {
    if r == 0 || r > MAX_DEGREE {
        return Err(Error::Domain(format!("nodal degree must lie in 1..={MAX_DEGREE}, got {r}")));
    }
    let mut cache = vandermonde_cache().lock().expect("cache poisoned");
    Ok(cache
        .entry((dim, r))
        .or_insert_with(|| {
            let l = lattice(dim, r as i64);
            Arc::new(DMatrix::from_fn(l.len(), l.len(), |b, a| {
                l[b].iter()
                    .zip(&l[a])
                    .map(|(&bi, &ai)| (bi as f64 / r as f64).powi(ai as i32))
                    .product()
            }))
        })
        .clone())
}

/// Monomial coefficients of the polynomial with the given values at `x_β`.
pub fn nodal_to_bernstein(dim: usize, r: usize, values: &[f64]) -> Result<BernsteinPoly> {
    let v = vandermonde(dim, r)?;
    let rhs = DVector::from_column_slice(values);
    let sol = v
        .as_ref()
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Unisolvence("singular Vandermonde matrix".into()))?;
    BernsteinPoly::new(dim, r, sol.iter().copied().collect())
}

/// Nodal values at `x_β` of a degree-`r` polynomial.
pub fn bernstein_to_nodal(p: &BernsteinPoly) -> Result<Vec<f64>> {
    let v = vandermonde(p.dim, p.r)?;
    Ok((v.as_ref() * DVector::from_column_slice(&p.coeffs)).iter().copied().collect())
}

/// Dimension of the interior Lagrange space on one sub-simplex.
#[derive(Clone, Debug)]
pub struct LagrangeGroup {
    pub f: AbstractSimplex,
    pub dim: usize,
}

/// `P_r(T) = ⊕_f b_f P_{r−(ℓ+1)}(f)` bookkeeping over all sub-simplices of a `d`-simplex.
pub fn lagrange_decomposition_dims(d: usize, r: usize) -> Vec<LagrangeGroup> {
    let mut out = Vec::new();
    for l in 0..=d {
        let interior = r as i64 - (l as i64 + 1);
        for f in subsimplices(&AbstractSimplex::standard(d), l).expect("l ≤ d") {
            out.push(LagrangeGroup { f, dim: binomial(interior + l as i64, l as i64) });
        }
    }
    out
}
