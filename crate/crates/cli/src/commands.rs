use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use tnforms::combinatorics::{subsimplices, AbstractSimplex};
use tnforms::feforms::{alt_dim, bubble_dimension, build_dofs, space_dim, DofFlavor};
use tnforms::mesh::{
    assemble_mass, cohomology_ranks, conformity_check, global_dof_numbering, mass_check, MeshComplex, MeshSpace,
};
use tnforms::random::random_simplex;
use tnforms::report::{to_json, write_matrix_market};
use tnforms::simplex::GeometricSimplex;
use tnforms::tnbasis::{hodge_coefficient, realize, Flavor, TnBasis, TnBasisElement};

use crate::{AssembleArgs, BasisArgs, Failure, InfoArgs, SimplexChoice};

/// Largest dimension accepted on the command line.
const MAX_DIM: usize = 6;

pub fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), Failure> {
    let text = to_json(value);
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn check_dims(d: usize, k: usize) -> Result<(), Failure> {
    if d == 0 || d > MAX_DIM {
        return Err(Failure::Usage(format!("--d must lie in 1..={MAX_DIM}")));
    }
    if k > d {
        return Err(Failure::Usage(format!("--k {k} exceeds --d {d}")));
    }
    Ok(())
}

fn load(path: &Path) -> Result<MeshComplex, Failure> {
    MeshComplex::load(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct BasisEntry {
    e: AbstractSimplex,
    f: AbstractSimplex,
    sigma: Vec<usize>,
    flavor: Flavor,
    coeffs: Vec<f64>,
    /// `⟨primal, dual⟩` for primal and dual entries, `c` of `⋆dual = c·hodge` for Hodge entries.
    scalar: f64,
}

#[derive(Serialize)]
struct Anchor {
    e: AbstractSimplex,
    primal: Vec<BasisEntry>,
    dual: Vec<BasisEntry>,
    hodge: Vec<BasisEntry>,
    pairing_matrix: Vec<Vec<f64>>,
}

fn entry(elem: &TnBasisElement, coeffs: &[f64], scalar: f64) -> BasisEntry {
    BasisEntry {
        e: elem.e.clone(),
        f: elem.f.clone(),
        sigma: elem.sigma.entries().to_vec(),
        flavor: elem.flavor,
        coeffs: coeffs.to_vec(),
        scalar,
    }
}

pub fn basis(a: &BasisArgs) -> Result<(), Failure> {
    check_dims(a.d, a.k)?;
    if a.s > a.d {
        return Err(Failure::Usage(format!("--s {} exceeds --d {}", a.s, a.d)));
    }
    let t = match a.simplex {
        SimplexChoice::Reference => GeometricSimplex::reference(a.d),
        SimplexChoice::Random => random_simplex(a.d, &mut ChaCha8Rng::seed_from_u64(a.seed)),
    };
    let mut anchors = Vec::new();
    for e in subsimplices(&t.all(), a.s)? {
        let b = TnBasis::new(&t, &e, a.k)?;
        let p = b.pairing_matrix();
        let (mut primal, mut dual, mut hodge) = (Vec::new(), Vec::new(), Vec::new());
        for (i, elem) in b.elements.iter().enumerate() {
            let dual_elem = elem.with_flavor(Flavor::Dual);
            let (c, partner) = hodge_coefficient(&t, &dual_elem)?;
            primal.push(entry(elem, b.primal[i].coeffs(), p[(i, i)]));
            dual.push(entry(&dual_elem, b.dual[i].coeffs(), p[(i, i)]));
            hodge.push(entry(&partner, realize(&t, &partner)?.coeffs(), c));
        }
        let pairing_matrix = (0..p.nrows()).map(|i| p.row(i).iter().copied().collect()).collect();
        anchors.push(Anchor { e, primal, dual, hodge, pairing_matrix });
    }
    let vertices: Vec<Vec<f64>> = t.points().iter().map(|p| p.iter().copied().collect()).collect();
    let simplex = match a.simplex {
        SimplexChoice::Reference => "reference",
        SimplexChoice::Random => "random",
    };
    let report = json!({
        "command": "basis",
        "parameters": { "d": a.d, "k": a.k, "s": a.s, "simplex": simplex, "seed": a.seed },
        "vertices": vertices,
        "anchors": anchors,
    });
    emit(&report, a.out.as_deref())
}

pub fn assemble(a: &AssembleArgs) -> Result<(), Failure> {
    let mesh = load(&a.mesh)?;
    let d = mesh.dim();
    let k_max = a.k.unwrap_or(d);
    if k_max > d {
        return Err(Failure::Usage(format!("--k {k_max} exceeds the mesh dimension {d}")));
    }
    if a.r == 0 {
        return Err(Failure::Usage("--r must be at least 1".into()));
    }
    if a.inject_fault && mesh.cells().len() < 2 {
        return Err(Failure::Usage("fault injection needs a mesh with shared faces".into()));
    }
    std::fs::create_dir_all(&a.out).map_err(|e| Failure::Usage(format!("{}: {e}", a.out.display())))?;
    let cohomology = cohomology_ranks(&mesh, a.r, k_max)?;
    let mut files = Vec::new();
    let write = |name: String, m: &nalgebra::DMatrix<f64>, files: &mut Vec<String>| -> Result<(), Failure> {
        let path = a.out.join(&name);
        let mut file = std::fs::File::create(&path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        write_matrix_market(&mut file, m).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        files.push(name);
        Ok(())
    };
    for (j, m) in cohomology.derivatives.iter().enumerate() {
        write(format!("D_{j}.mtx"), m, &mut files)?;
    }
    let mut conformity = Vec::new();
    let mut mass = Vec::new();
    for j in 0..=k_max {
        let degree = a.r + k_max - j;
        let space = MeshSpace::new(&mesh, degree, j)?;
        let m = assemble_mass(&mesh, &space)?;
        write(format!("mass_{j}.mtx"), &m, &mut files)?;
        let mut rep = mass_check(&m);
        rep.param("k", j).param("r", degree);
        mass.push(rep);
        // vertex-anchored DoFs carry no orientation, so the fault needs degree ≥ 2 and k ≥ 1
        let checked = if a.inject_fault && j >= 1 && degree >= 2 {
            MeshSpace::with_orientation_fault(&mesh, degree, j, 0)?
        } else {
            space
        };
        conformity.push(conformity_check(&mesh, &checked, 2, a.seed)?);
    }
    let counts: Vec<usize> = (0..=d).map(|l| mesh.subsimplices(l).len()).collect();
    let pass = cohomology.report.pass && conformity.iter().all(|r| r.pass) && mass.iter().all(|r| r.pass);
    let report = json!({
        "command": "assemble",
        "parameters": { "mesh": a.mesh.display().to_string(), "r": a.r, "k": k_max, "seed": a.seed, "inject_fault": a.inject_fault },
        "mesh": { "dim": d, "subsimplex_counts": counts, "euler_characteristic": mesh.euler_characteristic() },
        "betti": cohomology.betti,
        "cohomology": cohomology.report,
        "conformity": conformity,
        "mass": mass,
        "files": files,
        "pass": pass,
    });
    let text = to_json(&report);
    let path = a.out.join("report.json");
    std::fs::write(&path, &text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    print!("{text}");
    if pass {
        Ok(())
    } else {
        let failing: Vec<&str> = conformity
            .iter()
            .chain(&mass)
            .chain(std::iter::once(&cohomology.report))
            .filter(|r| !r.pass)
            .map(|r| r.check.as_str())
            .collect();
        Err(Failure::Verification(failing.join(", ")))
    }
}

fn space_info(d: usize, r: usize, k: usize) -> Result<Value, Failure> {
    let dofs = build_dofs(d, r, k, DofFlavor::Integral)?;
    let mut by_anchor_dim = vec![0usize; d + 1];
    for dof in &dofs {
        by_anchor_dim[dof.e.dim()] += 1;
    }
    let bubbles: BTreeMap<String, usize> = (k..=d).map(|l| (format!("dim_{l}"), bubble_dimension(l, r, k))).collect();
    Ok(json!({
        "d": d,
        "r": r,
        "k": k,
        "alt_dim": alt_dim(d, k),
        "space_dim": space_dim(d, r, k),
        "dofs_by_anchor_dim": by_anchor_dim,
        "bubble_dim_by_carrier_dim": bubbles,
    }))
}

pub fn info(a: &InfoArgs) -> Result<(), Failure> {
    let mut report = json!({
        "command": "info",
        "version": env!("CARGO_PKG_VERSION"),
    });
    if let Some(d) = a.d {
        let k = a.k.unwrap_or(0);
        check_dims(d, k)?;
        let r = a.r.unwrap_or(1);
        if r == 0 {
            return Err(Failure::Usage("--r must be at least 1".into()));
        }
        report["space"] = space_info(d, r, k)?;
        // the Alt^k block sizes of one t-n basis per anchor dimension
        report["tn_blocks"] = json!((0..=d)
            .map(|s| {
                let e = AbstractSimplex::standard(s);
                let elems = tnforms::tnbasis::decompose_altk(d, &e, k).expect("checked ranges");
                json!({ "s": s, "count": elems.len() })
            })
            .collect::<Vec<_>>());
    }
    if let Some(path) = &a.mesh {
        let mesh = load(path)?;
        let counts: Vec<usize> = (0..=mesh.dim()).map(|l| mesh.subsimplices(l).len()).collect();
        let mut m = json!({
            "path": path.display().to_string(),
            "dim": mesh.dim(),
            "subsimplex_counts": counts,
            "euler_characteristic": mesh.euler_characteristic(),
        });
        if let Some(r) = a.r {
            let k = a.k.unwrap_or(0);
            check_dims(mesh.dim(), k)?;
            m["global_dofs"] = json!(global_dof_numbering(&mesh, r, k)?.len());
        }
        report["mesh"] = m;
    }
    emit(&report, a.out.as_deref())
}
