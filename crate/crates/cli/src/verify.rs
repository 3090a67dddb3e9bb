//! The invariant suite behind `tnforms verify`.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use tnforms::combinatorics::{binomial, subsimplices, vandermonde_identity_check};
use tnforms::exterior::AltForm;
use tnforms::feforms::{
    bubble_complex_check, bubble_face_witness, bubble_kernel_check, build_dofs, geometric_decomposition_check,
    hodge_dof_check, interpolate, nodal_duality_check, space_dim, trace_duality_residual_signed, unisolvence_check,
    DofFlavor, PolyForm,
};
use tnforms::linalg::{off_diagonal_max, rank};
use tnforms::poly::BernsteinPoly;
use tnforms::random::{random_simplex, random_vector};
use tnforms::report::Report;
use tnforms::simplex::GeometricSimplex;
use tnforms::tnbasis::{decompose_altk, hodge_coefficient_with_tol, hodge_residual, Flavor, TnBasis};

use crate::commands::{check_dims, emit};
use crate::{Failure, VerifyArgs};

const DUALITY_TOL: f64 = 1e-12;
const ORTHOGONALITY_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-11;
const HODGE_TOL: f64 = 1e-11;
const INTERPOLATION_TOL: f64 = 1e-9;
/// Random constant forms per facet sweep in the trace-duality check.
const TRACE_SAMPLES: usize = 4;
/// At most this many failure messages are kept per check.
const KEPT_FAILURES: usize = 5;

/// One check aggregated over all trials: worst residuals, dims from the first
/// trial, and the first failure messages.
#[derive(Serialize)]
struct Aggregate {
    check: String,
    pass: bool,
    trials: usize,
    dims: BTreeMap<String, usize>,
    ranks: BTreeMap<String, usize>,
    residuals: BTreeMap<String, f64>,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Aggregate {
    fn new(check: &str) -> Self {
        Self {
            check: check.into(),
            pass: true,
            trials: 0,
            dims: BTreeMap::new(),
            ranks: BTreeMap::new(),
            residuals: BTreeMap::new(),
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn absorb(&mut self, trial: usize, report: &Report) {
        self.trials += 1;
        for (key, v) in &report.dims {
            self.dims.entry(key.clone()).or_insert(*v);
        }
        for (key, v) in &report.ranks {
            self.ranks.entry(key.clone()).or_insert(*v);
        }
        for (key, v) in &report.residuals {
            let slot = self.residuals.entry(key.clone()).or_insert(0.0);
            *slot = slot.max(*v);
        }
        for note in &report.notes {
            if !self.notes.contains(note) {
                self.notes.push(note.clone());
            }
        }
        if !report.pass {
            self.pass = false;
            if self.failures.len() < KEPT_FAILURES {
                let msgs: Vec<&str> = report.notes.iter().map(String::as_str).collect();
                self.failures.push(format!("trial {trial}: {}", msgs.join("; ")));
            }
        }
    }
}

struct Suite {
    d: usize,
    r: usize,
    k: usize,
    tol: Option<f64>,
    inject_fault: bool,
}

impl Suite {
    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    fn dimension_identities(&self, cell: &GeometricSimplex) -> tnforms::Result<Report> {
        let (d, r, k) = (self.d, self.r, self.k);
        let mut report = Report::new("dimension_identities");
        let expected = binomial(d as i64, k as i64);
        for s in 0..=d {
            report.require(vandermonde_identity_check(d, k, s), || format!("Vandermonde identity fails at s = {s}"));
            for e in subsimplices(&cell.all(), s)? {
                let b = TnBasis::new(cell, &e, k)?;
                let n = decompose_altk(d, &e, k)?.len();
                let columns: Vec<_> = b.primal.iter().map(|w| nalgebra::DVector::from_column_slice(w.coeffs())).collect();
                let rk = if columns.is_empty() { 0 } else { rank(&DMatrix::from_columns(&columns)) };
                report.require(n == expected && rk == expected, || {
                    format!("anchor {e:?}: {n} elements of rank {rk}, expected {expected}")
                });
            }
        }
        report.dim("alt_k", expected);
        for flavor in [DofFlavor::Nodal, DofFlavor::Integral] {
            let n = build_dofs(d, r, k, flavor)?.len();
            let want = binomial((r + d) as i64, d as i64) * expected;
            report.dim("dofs", n).require(n == want && n == space_dim(d, r, k), || {
                format!("{n} {flavor:?} DoFs, expected {want}")
            });
        }
        Ok(report)
    }

    fn scaled_duality(&self, cell: &GeometricSimplex) -> tnforms::Result<Report> {
        let tol = self.tol(DUALITY_TOL);
        let mut report = Report::new("scaled_duality");
        for s in 0..=self.d {
            for e in subsimplices(&cell.all(), s)? {
                let p = TnBasis::new(cell, &e, self.k)?.pairing_matrix();
                let off = off_diagonal_max(&p);
                let smallest = (0..p.nrows()).map(|i| p[(i, i)].abs()).fold(f64::INFINITY, f64::min);
                report.residual("off_diagonal_max", off);
                report
                    .require(off < tol, || format!("anchor {e:?}: off-diagonal pairing {off:e}"))
                    .require(smallest > tol, || format!("anchor {e:?}: diagonal pairing {smallest:e}"));
            }
        }
        Ok(report)
    }

    fn tn_orthogonality(&self, cell: &GeometricSimplex) -> tnforms::Result<Report> {
        let tol = self.tol(ORTHOGONALITY_TOL);
        let residual = cell.tn_orthogonality_residual()?;
        let mut report = Report::new("tn_orthogonality");
        report.residual("scaled_dot_product", residual);
        report.require(residual < tol, || format!("normal pairing {residual:e}"));
        Ok(report)
    }

    fn trace_duality(&self, cell: &Arc<GeometricSimplex>, rng: &mut ChaCha8Rng) -> tnforms::Result<Report> {
        let (d, k) = (self.d, self.k);
        let tol = self.tol(TRACE_TOL);
        let mut sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        if self.inject_fault {
            sign = -sign;
        }
        let mut report = Report::new("trace_duality");
        report.param("sign", sign);
        for _ in 0..TRACE_SAMPLES {
            let w = AltForm::from_coeffs(d, k, random_vector(binomial(d as i64, k as i64), rng).as_slice().to_vec())?;
            let omega = PolyForm::from_product(cell, &BernsteinPoly::constant(d, 1.0), &w)?;
            for i in 0..=d {
                let res = trace_duality_residual_signed(cell, &omega, i, sign)?;
                report.residual("residual", res);
                report.require(res < tol, || format!("facet opposite vertex {i}: residual {res:e}"));
            }
        }
        Ok(report)
    }

    fn hodge_coefficients(&self, cell: &GeometricSimplex) -> tnforms::Result<Report> {
        let tol = self.tol(HODGE_TOL);
        let mut report = Report::new("hodge_coefficients");
        let mut smallest = f64::INFINITY;
        for s in 0..=self.d {
            for e in subsimplices(&cell.all(), s)? {
                for elem in decompose_altk(self.d, &e, self.k)? {
                    let dual = elem.with_flavor(Flavor::Dual);
                    let (c, _) = hodge_coefficient_with_tol(cell, &dual, f64::INFINITY)?;
                    let res = hodge_residual(cell, &dual, c)?;
                    smallest = smallest.min(c.abs());
                    report.residual("colinearity", res);
                    report
                        .require(res < tol, || format!("{dual:?}: colinearity residual {res:e}"))
                        .require(c.abs() > 1e-12, || format!("{dual:?}: coefficient {c:e}"));
                }
            }
        }
        report.param("smallest_coefficient", smallest);
        Ok(report)
    }

    fn interpolation(&self, cell: &Arc<GeometricSimplex>, rng: &mut ChaCha8Rng) -> tnforms::Result<Report> {
        let (d, r, k) = (self.d, self.r, self.k);
        let tol = self.tol(INTERPOLATION_TOL);
        let omega = PolyForm::from_vector(cell, r, k, &random_vector(space_dim(d, r, k), rng))?;
        let sampled = interpolate(cell, r, k, |x| omega.eval(x).expect("point inside the ambient space"))?;
        let err = (sampled.coeffs() - omega.coeffs()).amax();
        let mut report = Report::new("interpolation");
        report.residual("coefficient_error", err);
        report.require(err < tol, || format!("interpolant differs by {err:e}"));
        Ok(report)
    }

    fn hodge_dofs(&self, cell: &Arc<GeometricSimplex>, rng: &mut ChaCha8Rng) -> tnforms::Result<Report> {
        let (d, r, k) = (self.d, self.r, self.k);
        let omega = PolyForm::from_vector(cell, r, k, &random_vector(space_dim(d, r, k), rng))?;
        hodge_dof_check(cell, &omega)
    }

    /// Every applicable check on one simplex, in a fixed order.
    fn run_trial(&self, cell: &Arc<GeometricSimplex>, rng: &mut ChaCha8Rng) -> tnforms::Result<Vec<Report>> {
        let (d, r, k) = (self.d, self.r, self.k);
        let mut out = vec![self.dimension_identities(cell)?, self.scaled_duality(cell)?, self.tn_orthogonality(cell)?];
        if k < d {
            out.push(self.trace_duality(cell, rng)?);
        }
        out.push(self.hodge_coefficients(cell)?);
        for flavor in [DofFlavor::Nodal, DofFlavor::Integral] {
            let mut rep = unisolvence_check(cell, r, k, flavor)?;
            rep.check = format!("unisolvence_{}", if flavor == DofFlavor::Nodal { "nodal" } else { "integral" });
            out.push(rep);
        }
        out.push(nodal_duality_check(cell, r, k)?);
        out.push(self.interpolation(cell, rng)?);
        out.push(self.hodge_dofs(cell, rng)?);
        if k < d {
            out.push(bubble_kernel_check(cell, r, k)?);
        }
        if r + k > d {
            out.push(bubble_complex_check(cell, r, k)?);
        }
        out.push(geometric_decomposition_check(cell, r, k)?);
        if d == 3 {
            out.push(bubble_face_witness(cell)?);
        }
        Ok(out)
    }
}

pub fn run(a: &VerifyArgs) -> Result<(), Failure> {
    check_dims(a.d, a.k)?;
    if a.r == 0 {
        return Err(Failure::Usage("--r must be at least 1".into()));
    }
    if a.trials == 0 {
        return Err(Failure::Usage("--trials must be at least 1".into()));
    }
    if a.inject_fault && a.k == a.d {
        return Err(Failure::Usage("the fault flips the trace-duality sign, which needs k < d".into()));
    }
    if let Some(t) = a.tol {
        if !(t > 0.0) {
            return Err(Failure::Usage("--tol must be positive".into()));
        }
    }
    let suite = Suite { d: a.d, r: a.r, k: a.k, tol: a.tol, inject_fault: a.inject_fault };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut checks: Vec<Aggregate> = Vec::new();
    for trial in 0..a.trials {
        let cell = Arc::new(random_simplex(a.d, &mut rng));
        let reports = suite.run_trial(&cell, &mut rng).map_err(|e| Failure::Verification(format!("trial {trial}: {e}")))?;
        for rep in reports {
            let slot = match checks.iter().position(|c| c.check == rep.check) {
                Some(i) => i,
                None => {
                    checks.push(Aggregate::new(&rep.check));
                    checks.len() - 1
                }
            };
            checks[slot].absorb(trial, &rep);
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    let report = json!({
        "command": "verify",
        "parameters": {
            "d": a.d, "r": a.r, "k": a.k, "seed": a.seed, "trials": a.trials,
            "tol": a.tol, "inject_fault": a.inject_fault,
        },
        "checks": checks,
        "pass": pass,
    });
    emit(&report, a.out.as_deref())?;
    if pass {
        Ok(())
    } else {
        let failing: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.check.as_str()).collect();
        Err(Failure::Verification(failing.join(", ")))
    }
}
