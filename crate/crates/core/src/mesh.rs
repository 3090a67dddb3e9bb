//! Simplicial meshes, global DoF numbering and the assembled de Rham complex.
//!
//! Mesh files are plain text:
//!
//! ```text
//! dim 2
//! vertices 4
//! 0 0
//! 1 0
//! 1 1
//! 0 1
//! cells 2
//! 0 1 2
//! 0 2 3
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Every sub-simplex is
//! oriented by its ascending global vertex indices.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::combinatorics::{subsimplices, AbstractSimplex, IncreasingSequence};
use crate::error::{Error, Result};
use crate::feforms::{build_dofs, space_dim, DofFlavor, LocalSpace, PolyForm};
use crate::linalg::{rank_info, RankInfo};
use crate::poly::{lattice, monomial_integral};
use crate::random::random_vector;
use crate::report::Report;
use crate::simplex::GeometricSimplex;

/// Barycentric slack when testing whether a vertex touches another cell.
const CONTAINMENT_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct MeshComplex {
    dim: usize,
    vertices: Vec<DVector<f64>>,
    cells: Vec<Vec<usize>>,
    geometry: Vec<Arc<GeometricSimplex>>,
    /// `tables[ℓ]`: all `ℓ`-dimensional sub-simplices, sorted.
    tables: Vec<Vec<AbstractSimplex>>,
    /// `incidence[ℓ][i]`: cells containing `tables[ℓ][i]`.
    incidence: Vec<Vec<Vec<usize>>>,
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            let line = line.trim();
            if !line.is_empty() && !line.starts_with('#') {
                return Ok(line);
            }
        }
        Err(Error::Parse { line: self.last + 1, msg: "unexpected end of file".into() })
    }

    fn error(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.last, msg: msg.into() }
    }

    fn header(&mut self, keyword: &str) -> Result<usize> {
        let line = self.next()?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(keyword) {
            return Err(self.error(format!("expected `{keyword} <count>`")));
        }
        let value = parts.next().and_then(|t| t.parse().ok());
        match (value, parts.next()) {
            (Some(v), None) => Ok(v),
            _ => Err(self.error(format!("expected `{keyword} <count>`"))),
        }
    }

    fn numbers<T: std::str::FromStr>(&mut self, count: usize, what: &str) -> Result<Vec<T>> {
        let line = self.next()?;
        let values: Vec<T> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| self.error(format!("invalid {what} `{t}`"))))
            .collect::<Result<_>>()?;
        if values.len() != count {
            return Err(self.error(format!("expected {count} {what}s, found {}", values.len())));
        }
        Ok(values)
    }
}

impl MeshComplex {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };
        let dim = lines.header("dim")?;
        if dim == 0 {
            return Err(lines.error("dimension must be at least 1"));
        }
        let n = lines.header("vertices")?;
        let mut vertices = Vec::with_capacity(n);
        for _ in 0..n {
            let coords: Vec<f64> = lines.numbers(dim, "coordinate")?;
            if coords.iter().any(|c| !c.is_finite()) {
                return Err(lines.error("non-finite coordinate"));
            }
            vertices.push(DVector::from_vec(coords));
        }
        let m = lines.header("cells")?;
        let mut cells = Vec::with_capacity(m);
        for _ in 0..m {
            let mut cell: Vec<usize> = lines.numbers(dim + 1, "vertex index")?;
            if let Some(&bad) = cell.iter().find(|&&v| v >= n) {
                return Err(lines.error(format!("vertex index {bad} out of range")));
            }
            cell.sort_unstable();
            if cell.windows(2).any(|w| w[0] == w[1]) {
                return Err(lines.error("repeated vertex in cell"));
            }
            cells.push(cell);
        }
        if let Ok(extra) = lines.next() {
            return Err(lines.error(format!("unexpected trailing content `{extra}`")));
        }
        Self::new(vertices, cells)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Builds and validates a mesh; cell vertex lists are sorted ascending.
    pub fn new(vertices: Vec<DVector<f64>>, cells: Vec<Vec<usize>>) -> Result<Self> {
        let dim = vertices.first().map(|v| v.len()).ok_or_else(|| Error::Domain("mesh without vertices".into()))?;
        if cells.is_empty() {
            return Err(Error::Domain("mesh without cells".into()));
        }
        let mut sorted = Vec::with_capacity(cells.len());
        let mut geometry = Vec::with_capacity(cells.len());
        for (c, cell) in cells.into_iter().enumerate() {
            let mut cell = cell;
            cell.sort_unstable();
            if cell.len() != dim + 1 || cell.windows(2).any(|w| w[0] == w[1]) || cell.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Domain(format!("cell {c} is not a list of {} distinct vertices", dim + 1)));
            }
            let points = cell.iter().map(|&v| vertices[v].clone()).collect();
            let g = GeometricSimplex::with_labels(cell.clone(), points)
                .map_err(|e| Error::Degenerate(format!("cell {c}: {e}")))?;
            geometry.push(Arc::new(g));
            sorted.push(cell);
        }
        let mut tables = Vec::with_capacity(dim + 1);
        let mut incidence = Vec::with_capacity(dim + 1);
        for l in 0..=dim {
            let mut owners: BTreeMap<AbstractSimplex, Vec<usize>> = BTreeMap::new();
            for (c, cell) in sorted.iter().enumerate() {
                for local in subsimplices(&AbstractSimplex::standard(dim), l)? {
                    owners.entry(local.relabel(cell)).or_default().push(c);
                }
            }
            let (faces, cells_of): (Vec<_>, Vec<_>) = owners.into_iter().unzip();
            tables.push(faces);
            incidence.push(cells_of);
        }
        let mesh = Self { dim, vertices, cells: sorted, geometry, tables, incidence };
        mesh.validate()?;
        Ok(mesh)
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim;
        for (face, owners) in self.tables[d].iter().zip(&self.incidence[d]) {
            if owners.len() > 1 {
                return Err(Error::NonConforming(format!("cell {face:?} appears {} times", owners.len())));
            }
        }
        for (face, owners) in self.tables[d - 1].iter().zip(&self.incidence[d - 1]) {
            if owners.len() > 2 {
                return Err(Error::NonConforming(format!("facet {face:?} is shared by {} cells", owners.len())));
            }
        }
        if self.tables[0].len() != self.vertices.len() {
            return Err(Error::NonConforming("some vertices belong to no cell".into()));
        }
        // a vertex touching a cell it does not belong to is a hanging node or an overlap
        for (v, x) in self.vertices.iter().enumerate() {
            for (c, g) in self.geometry.iter().enumerate() {
                if self.cells[c].contains(&v) {
                    continue;
                }
                if g.barycentric(x).iter().all(|&l| l > -CONTAINMENT_TOL) {
                    return Err(Error::NonConforming(format!("vertex {v} lies on cell {c} without being one of its vertices")));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn cell_geometry(&self, c: usize) -> &Arc<GeometricSimplex> {
        &self.geometry[c]
    }

    /// Sorted `ℓ`-dimensional sub-simplices.
    pub fn subsimplices(&self, l: usize) -> &[AbstractSimplex] {
        &self.tables[l]
    }

    /// Cells containing the `i`-th entry of `subsimplices(ℓ)`.
    pub fn incident_cells(&self, l: usize, i: usize) -> &[usize] {
        &self.incidence[l][i]
    }

    /// Position of `f` in its table.
    pub fn index_of(&self, f: &AbstractSimplex) -> Option<usize> {
        self.tables.get(f.dim())?.binary_search(f).ok()
    }

    /// Local (position) labels of the global simplex `f` inside cell `c`.
    pub fn local_in_cell(&self, c: usize, f: &AbstractSimplex) -> Option<AbstractSimplex> {
        let cell = &self.cells[c];
        let pos: Option<Vec<usize>> = f.vertices().iter().map(|v| cell.iter().position(|w| w == v)).collect();
        AbstractSimplex::new(pos?).ok()
    }

    /// `Σ_ℓ (−1)^ℓ |Δ_ℓ|`.
    pub fn euler_characteristic(&self) -> i64 {
        self.tables.iter().enumerate().map(|(l, t)| if l % 2 == 0 { t.len() as i64 } else { -(t.len() as i64) }).sum()
    }
}

pub fn load_mesh(path: &Path) -> Result<MeshComplex> {
    MeshComplex::load(path)
}

/// A global DoF: carrier `f`, anchor `e ⊆ f`, tangential index `σ` and the lattice
/// index on `e` of its interior node (all labels global).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GlobalDof {
    pub f: AbstractSimplex,
    pub e: AbstractSimplex,
    pub sigma: IncreasingSequence,
    pub node: Vec<usize>,
}

type DofKey = (usize, AbstractSimplex, usize, AbstractSimplex, Vec<usize>, Vec<usize>);

impl GlobalDof {
    fn key(&self) -> DofKey {
        (self.f.dim(), self.f.clone(), self.e.dim(), self.e.clone(), self.sigma.entries().to_vec(), self.node.clone())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GlobalDofMap {
    pub r: usize,
    pub k: usize,
    pub dofs: Vec<GlobalDof>,
    /// `cell_maps[c][i]`: global index of local DoF `i` of cell `c`.
    pub cell_maps: Vec<Vec<usize>>,
}

impl GlobalDofMap {
    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    /// Contiguous ranges of DoFs carried by each `f`, in numbering order.
    pub fn carrier_ranges(&self) -> Vec<(AbstractSimplex, std::ops::Range<usize>)> {
        let mut out: Vec<(AbstractSimplex, std::ops::Range<usize>)> = Vec::new();
        for (i, dof) in self.dofs.iter().enumerate() {
            match out.last_mut() {
                Some((f, range)) if *f == dof.f => range.end = i + 1,
                _ => out.push((dof.f.clone(), i..i + 1)),
            }
        }
        out
    }
}

/// Global DoFs of `P_rΛ^k(T_h)` grouped by carrier `f` (by dimension, then
/// lexicographically), then by `(dim e, e, σ, node)`.
pub fn global_dof_numbering(mesh: &MeshComplex, r: usize, k: usize) -> Result<GlobalDofMap> {
    let d = mesh.dim();
    let local = build_dofs(d, r, k, DofFlavor::Nodal)?;
    let mut per_cell_keys = Vec::with_capacity(mesh.cells().len());
    let mut unique: BTreeMap<DofKey, GlobalDof> = BTreeMap::new();
    for cell in mesh.cells() {
        let mut keys = Vec::with_capacity(local.len());
        for dof in &local {
            let alpha = dof.alpha(d);
            let g = GlobalDof {
                f: dof.f.relabel(cell),
                e: dof.e.relabel(cell),
                sigma: dof.sigma.clone(),
                node: dof.e.vertices().iter().map(|&v| alpha[v]).collect(),
            };
            let key = g.key();
            unique.entry(key.clone()).or_insert(g);
            keys.push(key);
        }
        per_cell_keys.push(keys);
    }
    let index: BTreeMap<&DofKey, usize> = unique.keys().enumerate().map(|(i, key)| (key, i)).collect();
    let cell_maps = per_cell_keys.iter().map(|keys| keys.iter().map(|key| index[key]).collect()).collect();
    Ok(GlobalDofMap { r, k, dofs: unique.into_values().collect(), cell_maps })
}

/// Local spaces of every cell with the local basis dual to the nodal DoFs.
#[derive(Clone, Debug)]
pub struct MeshSpace {
    pub map: GlobalDofMap,
    locals: Vec<LocalSpace>,
    /// Columns: coefficient vectors of the local basis dual to the local DoFs.
    bases: Vec<DMatrix<f64>>,
}

impl MeshSpace {
    pub fn new(mesh: &MeshComplex, r: usize, k: usize) -> Result<Self> {
        Self::build(mesh, r, k, None)
    }

    /// As [`MeshSpace::new`], with cell `faulty` using reversed tangent
    /// orientations for its DoFs.
    pub fn with_orientation_fault(mesh: &MeshComplex, r: usize, k: usize, faulty: usize) -> Result<Self> {
        if faulty >= mesh.cells().len() {
            return Err(Error::Domain(format!("no cell {faulty}")));
        }
        Self::build(mesh, r, k, Some(faulty))
    }

    fn build(mesh: &MeshComplex, r: usize, k: usize, faulty: Option<usize>) -> Result<Self> {
        let map = global_dof_numbering(mesh, r, k)?;
        let mut locals = Vec::with_capacity(mesh.cells().len());
        let mut bases = Vec::with_capacity(mesh.cells().len());
        for c in 0..mesh.cells().len() {
            let space = LocalSpace::build(mesh.cell_geometry(c).clone(), r, k, DofFlavor::Nodal, faulty == Some(c))?;
            bases.push(space.nodal_basis_matrix()?);
            locals.push(space);
        }
        Ok(Self { map, locals, bases })
    }

    pub fn local(&self, c: usize) -> &LocalSpace {
        &self.locals[c]
    }

    /// Local basis of cell `c` in [`PolyForm::to_vector`] coordinates.
    pub fn local_basis(&self, c: usize) -> &DMatrix<f64> {
        &self.bases[c]
    }

    /// The restriction to cell `c` of the global function with coefficients `u`.
    pub fn local_form(&self, c: usize, u: &DVector<f64>) -> Result<PolyForm> {
        let values = DVector::from_iterator(self.map.cell_maps[c].len(), self.map.cell_maps[c].iter().map(|&g| u[g]));
        let space = &self.locals[c];
        PolyForm::from_vector(space.cell(), space.degree(), space.form_degree(), &(&self.bases[c] * values))
    }
}

/// Compares the traces of random global functions from every pair of cells sharing
/// a sub-simplex `f` with `k ≤ dim f < d`.
pub fn conformity_check(mesh: &MeshComplex, space: &MeshSpace, trials: usize, seed: u64) -> Result<Report> {
    let (r, k, d) = (space.map.r, space.map.k, mesh.dim());
    let mut report = Report::new("conformity");
    report.param("r", r).param("k", k).param("trials", trials).param("seed", seed);
    report.dim("global_dofs", space.map.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shared = 0;
    let mut worst: (f64, String) = (0.0, String::new());
    for _ in 0..trials {
        let u = random_vector(space.map.len(), &mut rng);
        let forms: Vec<PolyForm> = (0..mesh.cells().len()).map(|c| space.local_form(c, &u)).collect::<Result<_>>()?;
        for l in k..d {
            for (i, f) in mesh.subsimplices(l).iter().enumerate() {
                let cells = mesh.incident_cells(l, i);
                if cells.len() < 2 {
                    continue;
                }
                shared += 1;
                let traces: Vec<PolyForm> = cells
                    .iter()
                    .map(|&c| forms[c].trace(&mesh.local_in_cell(c, f).expect("incident cell contains f")))
                    .collect::<Result<_>>()?;
                for (a, t) in traces.iter().enumerate().skip(1) {
                    let diff = (t.coeffs() - traces[0].coeffs()).amax() / traces[0].max_abs().max(1.0);
                    if diff > worst.0 {
                        worst = (diff, format!("{f:?} between cells {} and {}", cells[0], cells[a]));
                    }
                }
            }
        }
    }
    report.dim("shared_subsimplex_checks", shared).residual("trace_mismatch", worst.0);
    if worst.0 >= 1e-11 {
        report.fail(format!("traces disagree on {} (residual {:e})", worst.1, worst.0));
    }
    Ok(report)
}

/// Local derivative of cell `c` from the `source` basis into `target` DoF values.
fn local_derivative(source: &MeshSpace, target: &MeshSpace, c: usize) -> Result<DMatrix<f64>> {
    let from = source.local(c);
    let to = target.local(c);
    let basis = source.local_basis(c);
    let functionals = to.functionals()?;
    let mut images = DMatrix::zeros(functionals.ncols(), basis.ncols());
    for j in 0..basis.ncols() {
        let omega = PolyForm::from_vector(from.cell(), from.degree(), from.form_degree(), &basis.column(j).into_owned())?;
        images.column_mut(j).copy_from(&omega.exterior_derivative()?.to_vector());
    }
    Ok(functionals * images)
}

/// Global `D_k: P_rΛ^k(T_h) → P_{r−1}Λ^{k+1}(T_h)` in DoF coordinates, together with
/// the largest disagreement between cells computing the same row.
pub fn assemble_derivative(mesh: &MeshComplex, r: usize, k: usize) -> Result<(DMatrix<f64>, f64)> {
    if k >= mesh.dim() {
        return Err(Error::Domain(format!("no derivative out of degree {k} in dimension {}", mesh.dim())));
    }
    if r < 2 {
        return Err(Error::Domain("the target degree r − 1 must be at least 1".into()));
    }
    let source = MeshSpace::new(mesh, r, k)?;
    let target = MeshSpace::new(mesh, r - 1, k + 1)?;
    assemble_derivative_between(mesh, &source, &target)
}

pub fn assemble_derivative_between(mesh: &MeshComplex, source: &MeshSpace, target: &MeshSpace) -> Result<(DMatrix<f64>, f64)> {
    let mut global = DMatrix::zeros(target.map.len(), source.map.len());
    let mut filled = vec![false; target.map.len()];
    let mut disagreement: f64 = 0.0;
    for c in 0..mesh.cells().len() {
        let local = local_derivative(source, target, c)?;
        let rows = &target.map.cell_maps[c];
        let cols = &source.map.cell_maps[c];
        for (i, &gi) in rows.iter().enumerate() {
            let mut row = DVector::zeros(source.map.len());
            for (j, &gj) in cols.iter().enumerate() {
                row[gj] = local[(i, j)];
            }
            if filled[gi] {
                let scale = row.amax().max(1.0);
                disagreement = disagreement.max((global.row(gi).transpose() - &row).amax() / scale);
            } else {
                global.row_mut(gi).copy_from(&row.transpose());
                filled[gi] = true;
            }
        }
    }
    Ok((global, disagreement))
}

/// Cellwise derivative of the global basis of `source`: rows are the stacked
/// [`PolyForm::to_vector`] coordinates of `dω` on each cell. Its kernel is the
/// kernel of `d` on the global space, whatever space `dω` is measured in.
pub fn assemble_broken_derivative(mesh: &MeshComplex, source: &MeshSpace) -> Result<DMatrix<f64>> {
    let (d, r, k) = (mesh.dim(), source.map.r, source.map.k);
    if k >= d {
        return Err(Error::Domain(format!("no derivative out of degree {k} in dimension {d}")));
    }
    let block = space_dim(d, r.saturating_sub(1), k + 1);
    let mut global = DMatrix::zeros(block * mesh.cells().len(), source.map.len());
    for c in 0..mesh.cells().len() {
        let local = source.local(c);
        let basis = source.local_basis(c);
        for (j, &gj) in source.map.cell_maps[c].iter().enumerate() {
            let omega = PolyForm::from_vector(local.cell(), r, k, &basis.column(j).into_owned())?;
            let image = omega.exterior_derivative()?.to_vector();
            global.view_mut((c * block, gj), (block, 1)).copy_from(&image);
        }
    }
    Ok(global)
}

/// `∫ ⟨λ^α dx_σ, λ^β dx_τ⟩` over a cell in [`PolyForm::to_vector`] coordinates.
fn monomial_gram(cell: &GeometricSimplex, r: usize, k: usize) -> DMatrix<f64> {
    let d = cell.dim();
    let l = lattice(d, r as i64);
    let a = space_dim(d, r, k) / l.len();
    let mut g = DMatrix::zeros(l.len() * a, l.len() * a);
    for (i, alpha) in l.iter().enumerate() {
        for (j, beta) in l.iter().enumerate() {
            let sum: Vec<usize> = alpha.iter().zip(beta).map(|(x, y)| x + y).collect();
            let v = monomial_integral(&sum, cell.volume());
            for s in 0..a {
                g[(i * a + s, j * a + s)] = v;
            }
        }
    }
    g
}

/// `(ψ_i, ψ_j)_Ω` over the global basis dual to the nodal DoFs.
pub fn assemble_mass(mesh: &MeshComplex, space: &MeshSpace) -> Result<DMatrix<f64>> {
    let n = space.map.len();
    let mut mass = DMatrix::zeros(n, n);
    for c in 0..mesh.cells().len() {
        let basis = space.local_basis(c);
        let local = space.local(c);
        let gram = basis.transpose() * monomial_gram(mesh.cell_geometry(c), local.degree(), local.form_degree()) * basis;
        let map = &space.map.cell_maps[c];
        for (i, &gi) in map.iter().enumerate() {
            for (j, &gj) in map.iter().enumerate() {
                mass[(gi, gj)] += gram[(i, j)];
            }
        }
    }
    Ok(mass)
}

/// Symmetry and positive definiteness of a mass matrix.
pub fn mass_check(mass: &DMatrix<f64>) -> Report {
    let mut report = Report::new("mass");
    report.dim("size", mass.nrows());
    let asym = (mass - mass.transpose()).amax() / mass.amax().max(1e-300);
    report.residual("symmetry", asym);
    let sym = (mass + mass.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    let smallest = eig.iter().copied().fold(f64::INFINITY, f64::min);
    report.param("smallest_eigenvalue", smallest);
    report
        .require(asym < 1e-13, || format!("mass matrix asymmetry {asym:e}"))
        .require(smallest > 0.0 && nalgebra::Cholesky::new(sym).is_some(), || "mass matrix is not positive definite".into());
    report
}

/// Betti-like numbers of `P_{r+k_max}Λ^0 → … → P_rΛ^{k_max}` on the mesh; slot `j`
/// has polynomial degree `r + k_max − j`.
#[derive(Clone, Debug, Serialize)]
pub struct Cohomology {
    pub betti: Vec<i64>,
    pub report: Report,
    #[serde(skip)]
    pub derivatives: Vec<DMatrix<f64>>,
}

pub fn cohomology_ranks(mesh: &MeshComplex, r: usize, k_max: usize) -> Result<Cohomology> {
    let d = mesh.dim();
    if k_max > d || r == 0 {
        return Err(Error::Domain(format!("need 1 ≤ r and k_max ≤ {d}")));
    }
    let outgoing = k_max < d;
    // P_0 carries no DoFs of this family, so a last derivative into degree 0 is
    // measured cellwise instead
    let broken = outgoing && r < 2;
    let mut report = Report::new("cohomology");
    report.param("r", r).param("k_max", k_max).param("cells", mesh.cells().len());
    let last = if outgoing && !broken { k_max + 1 } else { k_max };
    let spaces: Vec<MeshSpace> = (0..=last).map(|j| MeshSpace::new(mesh, r + k_max - j, j)).collect::<Result<_>>()?;
    let mut derivatives = Vec::new();
    for j in 0..last {
        let (m, disagreement) = assemble_derivative_between(mesh, &spaces[j], &spaces[j + 1])?;
        report.residual("cell_disagreement", disagreement);
        derivatives.push(m);
    }
    if broken {
        report.note(format!("d_{k_max} is the cellwise derivative into discontinuous degree-0 forms"));
        derivatives.push(assemble_broken_derivative(mesh, &spaces[k_max])?);
    }
    let infos: Vec<RankInfo> = derivatives.iter().map(rank_info).collect();
    for j in 0..=k_max {
        report.dim(&format!("slot_{j}"), spaces[j].map.len());
    }
    for (j, info) in infos.iter().enumerate() {
        report.rank(&format!("d_{j}"), info.rank);
        if info.ambiguous() {
            report.note(format!("warning: rank of d_{j} is within a factor 10 of the threshold"));
        }
    }
    for j in 0..derivatives.len().saturating_sub(1) {
        let prod = &derivatives[j + 1] * &derivatives[j];
        let scale = derivatives[j + 1].amax().max(1.0) * derivatives[j].amax().max(1.0);
        report.residual("d_squared", prod.amax() / scale);
    }
    let betti: Vec<i64> = (0..=k_max)
        .map(|j| {
            let kernel = if j < infos.len() { infos[j].nullity } else { spaces[j].map.len() };
            let image = if j > 0 { infos[j - 1].rank } else { 0 };
            kernel as i64 - image as i64
        })
        .collect();
    report.param("betti", &betti);
    let dd = report.residuals.get("d_squared").copied().unwrap_or(0.0);
    let dis = report.residuals.get("cell_disagreement").copied().unwrap_or(0.0);
    report
        .require(dd < 1e-11, || format!("d∘d residual {dd:e}"))
        .require(dis < 1e-9, || format!("cells disagree on shared derivative DoFs ({dis:e})"));
    Ok(Cohomology { betti, report, derivatives })
}

/// Σ over cells of local DoF counts minus the repeats of shared DoFs, counted
/// independently of the numbering.
pub fn dedup_dof_count(mesh: &MeshComplex, r: usize, k: usize) -> Result<usize> {
    let d = mesh.dim();
    let local = build_dofs(d, r, k, DofFlavor::Nodal)?;
    let mut seen = BTreeSet::new();
    for cell in mesh.cells() {
        for dof in &local {
            let x: Vec<usize> = dof.alpha(d).to_vec();
            // the node position in global barycentric form identifies the point; with f
            // and σ it identifies the functional
            let mut node: Vec<(usize, usize)> = cell.iter().zip(&x).filter(|(_, &a)| a > 0).map(|(&v, &a)| (v, a)).collect();
            node.sort_unstable();
            seen.insert((dof.f.relabel(cell), dof.sigma.entries().to_vec(), node));
        }
    }
    Ok(seen.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const TWO_TRIANGLES: &str = "dim 2\nvertices 4\n0 0\n1 0\n1 1\n0 1\ncells 2\n0 1 2\n0 2 3\n";
    const SINGLE_TET: &str = "dim 3\nvertices 4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\ncells 1\n0 1 2 3\n";
    const TWO_TETS: &str = "dim 3\nvertices 5\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n1 1 1\ncells 2\n0 1 2 3\n1 2 3 4\n";
    const INTERVAL: &str = "dim 1\nvertices 2\n0\n2\ncells 1\n0 1\n";
    const ANNULUS: &str = "dim 2\nvertices 8\n0 0\n3 0\n3 3\n0 3\n1 1\n2 1\n2 2\n1 2\ncells 8\n0 1 5\n0 5 4\n1 2 6\n1 6 5\n2 3 7\n2 7 6\n3 0 4\n3 4 7\n";

    #[test]
    fn tables() {
        let tet = MeshComplex::parse(SINGLE_TET).unwrap();
        let counts: Vec<usize> = (0..=3).map(|l| tet.subsimplices(l).len()).collect();
        assert_eq!(counts, vec![4, 6, 4, 1]);
        let two = MeshComplex::parse(TWO_TRIANGLES).unwrap();
        assert_eq!(two.subsimplices(1).len(), 5);
        let shared = two.index_of(&AbstractSimplex::new(vec![0, 2]).unwrap()).unwrap();
        assert_eq!(two.incident_cells(1, shared), &[0, 1]);
        assert_eq!(MeshComplex::parse(ANNULUS).unwrap().euler_characteristic(), 0);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "dim 2\nvertices 3\n0 0\n1 x\n0 1\ncells 1\n0 1 2\n";
        match MeshComplex::parse(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(matches!(MeshComplex::parse("dim 2\nvertices 1\n0 0\ncells 1\n0 1 2\n"), Err(Error::Parse { line: 5, .. })));
        let flat = "dim 2\nvertices 3\n0 0\n1 0\n2 0\ncells 1\n0 1 2\n";
        assert!(matches!(MeshComplex::parse(flat), Err(Error::Degenerate(_))));
        let hanging = "dim 2\nvertices 5\n0 0\n2 0\n0 2\n1 0\n1 -1\ncells 2\n0 1 2\n0 3 4\n";
        assert!(matches!(MeshComplex::parse(hanging), Err(Error::NonConforming(_))));
        let tripled = "dim 2\nvertices 5\n0 0\n1 0\n0 1\n-1 -1\n2 2\ncells 3\n0 1 2\n0 1 3\n0 1 4\n";
        assert!(matches!(MeshComplex::parse(tripled), Err(Error::NonConforming(_))));
    }

    #[test]
    fn global_numbering() {
        let two = MeshComplex::parse(TWO_TRIANGLES).unwrap();
        let one = MeshComplex::new(two.vertices()[..3].to_vec(), vec![vec![0, 1, 2]]).unwrap();
        let map = global_dof_numbering(&one, 1, 1).unwrap();
        assert_eq!(map.len(), 6);
        assert!(map.carrier_ranges().iter().all(|(f, range)| f.dim() == 1 && range.len() == 2));
        let lagrange = global_dof_numbering(&two, 2, 0).unwrap();
        assert_eq!(lagrange.len(), 9);
        assert!(lagrange.dofs[..4].iter().all(|g| g.f.dim() == 0));
        for (d_mesh, r, k) in [(TWO_TETS, 2, 1), (TWO_TETS, 3, 2), (TWO_TRIANGLES, 3, 1), (ANNULUS, 2, 0)] {
            let mesh = MeshComplex::parse(d_mesh).unwrap();
            let map = global_dof_numbering(&mesh, r, k).unwrap();
            assert_eq!(map.len(), dedup_dof_count(&mesh, r, k).unwrap());
            for cm in &map.cell_maps {
                assert_eq!(cm.len(), space_dim(mesh.dim(), r, k));
            }
        }
        // DoFs on the shared face of two tetrahedra are counted once
        let tets = MeshComplex::parse(TWO_TETS).unwrap();
        let map = global_dof_numbering(&tets, 1, 2).unwrap();
        assert_eq!(map.len(), 2 * 12 - 3);
    }

    #[test]
    fn conformity_and_fault() {
        let two = MeshComplex::parse(TWO_TRIANGLES).unwrap();
        for k in 0..=2 {
            let space = MeshSpace::new(&two, 2, k).unwrap();
            let rep = conformity_check(&two, &space, 2, 0).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
        // lowest-order DoFs sit at vertices and carry no tangent orientation
        let faulty = MeshSpace::with_orientation_fault(&two, 2, 1, 1).unwrap();
        assert!(!conformity_check(&two, &faulty, 2, 0).unwrap().pass);
        let tets = MeshComplex::parse(TWO_TETS).unwrap();
        for k in 0..=2 {
            let rep = conformity_check(&tets, &MeshSpace::new(&tets, 2, k).unwrap(), 1, 1).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
    }

    #[test]
    fn interval_mass_matrix() {
        let mesh = MeshComplex::parse(INTERVAL).unwrap();
        let mass = assemble_mass(&mesh, &MeshSpace::new(&mesh, 1, 0).unwrap()).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]) * (2.0 / 6.0);
        assert!((mass - want).amax() < 1e-15);
        let two = MeshComplex::parse(TWO_TRIANGLES).unwrap();
        let rep = mass_check(&assemble_mass(&two, &MeshSpace::new(&two, 2, 1).unwrap()).unwrap());
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn derivative_examples() {
        let two = MeshComplex::parse(TWO_TRIANGLES).unwrap();
        let (d0, dis0) = assemble_derivative(&two, 3, 0).unwrap();
        let (d1, dis1) = assemble_derivative(&two, 2, 1).unwrap();
        assert!(dis0 < 1e-10 && dis1 < 1e-10);
        assert!((&d1 * &d0).amax() < 1e-11 * d1.amax() * d0.amax());
        // the constant function has nodal values 1 and zero derivative
        let ones = DVector::from_element(d0.ncols(), 1.0);
        assert!((&d0 * ones).amax() < 1e-12);
        assert!(assemble_derivative(&two, 1, 0).is_err());
    }

    #[test]
    fn cohomology_examples() {
        let tet = MeshComplex::parse(SINGLE_TET).unwrap();
        assert_eq!(cohomology_ranks(&tet, 1, 3).unwrap().betti, vec![1, 0, 0, 0]);
        let two = MeshComplex::parse(TWO_TRIANGLES).unwrap();
        for r in 1..=2 {
            let c = cohomology_ranks(&two, r, 2).unwrap();
            assert_eq!(c.betti, vec![1, 0, 0], "{:?}", c.report);
            assert!(c.report.pass);
        }
        let annulus = MeshComplex::parse(ANNULUS).unwrap();
        assert_eq!(cohomology_ranks(&annulus, 1, 2).unwrap().betti, vec![1, 1, 0]);
    }

    #[test]
    fn truncated_complex_into_degree_zero() {
        let two = MeshComplex::parse(TWO_TRIANGLES).unwrap();
        let c = cohomology_ranks(&two, 1, 1).unwrap();
        assert_eq!(c.betti, vec![1, 0]);
        assert!(c.report.pass, "{:?}", c.report);
        let annulus = MeshComplex::parse(ANNULUS).unwrap();
        assert_eq!(cohomology_ranks(&annulus, 1, 1).unwrap().betti, vec![1, 1]);
    }

    /// The cellwise derivative and the DoF-coordinate derivative share their kernel.
    #[test]
    fn broken_derivative_kernel() {
        let two = MeshComplex::parse(TWO_TRIANGLES).unwrap();
        for k in 0..2 {
            let source = MeshSpace::new(&two, 2, k).unwrap();
            let broken = assemble_broken_derivative(&two, &source).unwrap();
            let (dofs, _) = assemble_derivative(&two, 2, k).unwrap();
            assert_eq!(rank_info(&broken).nullity, rank_info(&dofs).nullity);
        }
    }
}
