//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tnforms::combinatorics::{binomial, subsimplices, vandermonde_identity_check, AbstractSimplex};
use tnforms::exterior::AltForm;
use tnforms::feforms::{
    bubble_complex_check, bubble_face_witness, bubble_kernel_check, build_dofs, interpolate, nodal_duality_check,
    space_dim, trace_duality_residual, unisolvence_check, DofFlavor, PolyForm,
};
use tnforms::linalg::{off_diagonal_max, rank};
use tnforms::mesh::{cohomology_ranks, conformity_check, MeshComplex, MeshSpace};
use tnforms::poly::BernsteinPoly;
use tnforms::random::{random_simplex, random_vector};
use tnforms::report::Report;
use tnforms::simplex::GeometricSimplex;
use tnforms::tnbasis::{decompose_altk, hodge_coefficient_with_tol, hodge_residual, realize, Flavor, TnBasis};

type Outcome = Result<String, String>;

fn rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed_0000 + tag)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn passed(report: &Report) -> Result<(), String> {
    ensure(report.pass, || format!("{} {:?}: {}", report.check, report.parameters, report.notes.join("; ")))
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn column_rank(forms: &[AltForm]) -> usize {
    if forms.is_empty() {
        return 0;
    }
    let cols: Vec<DVector<f64>> = forms.iter().map(|w| DVector::from_column_slice(w.coeffs())).collect();
    rank(&DMatrix::from_columns(&cols))
}

fn dimension_identities() -> Outcome {
    let mut cases = 0;
    for d in 0..=5usize {
        let t = GeometricSimplex::reference(d);
        for k in 0..=d {
            let expected = binomial(d as i64, k as i64);
            for s in 0..=d {
                ensure(vandermonde_identity_check(d, k, s), || format!("Vandermonde identity at d={d} k={k} s={s}"))?;
                for e in subsimplices(&AbstractSimplex::standard(d), s).map_err(err)? {
                    let elems = decompose_altk(d, &e, k).map_err(err)?;
                    ensure(elems.len() == expected, || format!("d={d} k={k} e={e:?}: {} elements", elems.len()))?;
                    if d >= 1 {
                        let forms: Vec<AltForm> = elems.iter().map(|x| realize(&t, x)).collect::<Result<_, _>>().map_err(err)?;
                        let rk = column_rank(&forms);
                        ensure(rk == expected, || format!("d={d} k={k} e={e:?}: rank {rk} of {expected}"))?;
                    }
                    cases += 1;
                }
            }
        }
    }
    Ok(format!("{cases} anchors, d ≤ 5"))
}

fn scaled_duality() -> Outcome {
    let mut worst: f64 = 0.0;
    for d in 1..=4usize {
        let mut g = rng(2 + d as u64);
        for _ in 0..50 {
            let t = random_simplex(d, &mut g);
            for k in 0..=d {
                for s in 0..=d {
                    for e in subsimplices(&t.all(), s).map_err(err)? {
                        let p = TnBasis::new(&t, &e, k).map_err(err)?.pairing_matrix();
                        let off = off_diagonal_max(&p);
                        worst = worst.max(off);
                        let smallest = (0..p.nrows()).map(|i| p[(i, i)].abs()).fold(f64::INFINITY, f64::min);
                        ensure(off < 1e-12, || format!("d={d} k={k} e={e:?}: off-diagonal {off:e}"))?;
                        ensure(smallest > 1e-12, || format!("d={d} k={k} e={e:?}: diagonal {smallest:e}"))?;
                    }
                }
            }
        }
    }
    Ok(format!("off-diagonal max {worst:.2e}"))
}

fn tn_orthogonality() -> Outcome {
    let mut worst: f64 = 0.0;
    for d in 1..=4usize {
        let mut g = rng(10 + d as u64);
        for _ in 0..50 {
            let res = random_simplex(d, &mut g).tn_orthogonality_residual().map_err(err)?;
            worst = worst.max(res);
            ensure(res < 1e-12, || format!("d={d}: scaled dot product {res:e}"))?;
        }
    }
    Ok(format!("max {worst:.2e}"))
}

fn trace_duality() -> Outcome {
    let mut worst: f64 = 0.0;
    for d in 1..=4usize {
        for k in 0..d {
            let mut g = rng(20 + 10 * d as u64 + k as u64);
            for _ in 0..20 {
                let t = Arc::new(random_simplex(d, &mut g));
                let coeffs = random_vector(binomial(d as i64, k as i64), &mut g);
                let w = AltForm::from_coeffs(d, k, coeffs.as_slice().to_vec()).map_err(err)?;
                let omega = PolyForm::from_product(&t, &BernsteinPoly::constant(d, 1.0), &w).map_err(err)?;
                for i in 0..=d {
                    let res = trace_duality_residual(&t, &omega, i).map_err(err)?;
                    worst = worst.max(res);
                    ensure(res < 1e-11, || format!("d={d} k={k} facet {i}: residual {res:e}"))?;
                }
            }
        }
    }
    Ok(format!("max residual {worst:.2e}"))
}

fn hodge_coefficients() -> Outcome {
    let (mut worst, mut smallest) = (0.0f64, f64::INFINITY);
    for d in 1..=4usize {
        let mut g = rng(70 + d as u64);
        let mut cells = vec![GeometricSimplex::reference(d)];
        cells.extend((0..10).map(|_| random_simplex(d, &mut g)));
        for t in &cells {
            for k in 0..=d {
                for s in 0..=d {
                    for e in subsimplices(&t.all(), s).map_err(err)? {
                        for elem in decompose_altk(d, &e, k).map_err(err)? {
                            let dual = elem.with_flavor(Flavor::Dual);
                            let (c, _) = hodge_coefficient_with_tol(t, &dual, f64::INFINITY).map_err(err)?;
                            let res = hodge_residual(t, &dual, c).map_err(err)?;
                            worst = worst.max(res);
                            smallest = smallest.min(c.abs());
                            ensure(res < 1e-11 && c.abs() > 1e-12, || format!("{dual:?}: residual {res:e}, c = {c:e}"))?;
                        }
                    }
                }
            }
        }
    }
    Ok(format!("colinearity max {worst:.2e}, min |c| {smallest:.2e}"))
}

/// Criteria 6 and 7 share the sweep d ≤ 3, k ≤ d, 1 ≤ r ≤ 4 on 20 random simplices.
fn local_sweep<F>(tag: u64, mut check: F) -> Result<(), String>
where
    F: FnMut(&Arc<GeometricSimplex>, usize, usize, &mut ChaCha8Rng) -> Result<(), String>,
{
    for d in 1..=3usize {
        let mut g = rng(tag + d as u64);
        for _ in 0..20 {
            let t = Arc::new(random_simplex(d, &mut g));
            for k in 0..=d {
                for r in 1..=4 {
                    check(&t, r, k, &mut g)?;
                }
            }
        }
    }
    Ok(())
}

fn unisolvence() -> Outcome {
    let (mut upper, mut interp) = (0.0f64, 0.0f64);
    local_sweep(100, |t, r, k, g| {
        for flavor in [DofFlavor::Nodal, DofFlavor::Integral] {
            let rep = unisolvence_check(t, r, k, flavor).map_err(err)?;
            upper = upper.max(rep.residuals["strict_upper_block"]);
            passed(&rep)?;
        }
        let d = t.dim();
        let omega = PolyForm::from_vector(t, r, k, &random_vector(space_dim(d, r, k), g)).map_err(err)?;
        let back = interpolate(t, r, k, |x| omega.eval(x).expect("ambient point")).map_err(err)?;
        let e = (back.coeffs() - omega.coeffs()).amax();
        interp = interp.max(e);
        ensure(e < 1e-9, || format!("d={d} r={r} k={k}: interpolation error {e:e}"))
    })?;
    Ok(format!("strict upper block max {upper:.2e}, interpolation error max {interp:.2e}"))
}

fn nodal_duality() -> Outcome {
    let mut worst: f64 = 0.0;
    local_sweep(200, |t, r, k, _| {
        let d = t.dim();
        let rep = nodal_duality_check(t, r, k).map_err(err)?;
        worst = worst.max(rep.residuals["off_diagonal"]);
        passed(&rep)?;
        let want = binomial((r + d) as i64, d as i64) * binomial(d as i64, k as i64);
        let n = build_dofs(d, r, k, DofFlavor::Nodal).map_err(err)?.len();
        ensure(n == want, || format!("d={d} r={r} k={k}: {n} DoFs, expected {want}"))
    })?;
    let edge = build_dofs(3, 1, 1, DofFlavor::Nodal).map_err(err)?.len();
    ensure(edge == 12, || format!("d=3 k=1 r=1 has {edge} DoFs"))?;
    Ok(format!("off-diagonal max {worst:.2e}; d=3 k=1 r=1 → {edge} DoFs"))
}

fn bubbles() -> Outcome {
    let mut sampled: f64 = 0.0;
    let mut cases = 0;
    for d in 1..=3usize {
        let mut g = rng(300 + d as u64);
        for _ in 0..3 {
            let t = Arc::new(random_simplex(d, &mut g));
            for k in 0..d {
                for r in 1..=4 {
                    let rep = bubble_kernel_check(&t, r, k).map_err(err)?;
                    sampled = sampled.max(rep.residuals["boundary_trace_samples"]);
                    passed(&rep)?;
                    cases += 1;
                }
            }
        }
    }
    let mut g = rng(310);
    let mut magnitude = f64::INFINITY;
    for _ in 0..5 {
        let t = Arc::new(random_simplex(3, &mut g));
        let rep = bubble_face_witness(&t).map_err(err)?;
        magnitude = magnitude.min(rep.residuals["trace_magnitude"]);
        passed(&rep)?;
    }
    Ok(format!(
        "{cases} kernel checks, boundary trace max {sampled:.2e}; face witness trace ≥ {magnitude:.2e}"
    ))
}

fn bubble_complex() -> Outcome {
    let mut cases = 0;
    for d in 1..=3usize {
        let mut g = rng(400 + d as u64);
        for _ in 0..3 {
            let t = Arc::new(random_simplex(d, &mut g));
            for r in 1..=3 {
                for k in 0..=d {
                    if r + k < d + 1 {
                        continue;
                    }
                    passed(&bubble_complex_check(&t, r, k).map_err(err)?)?;
                    cases += 1;
                }
            }
        }
    }
    Ok(format!("{cases} complexes exact"))
}

fn mesh_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../meshes").join(name)
}

fn global_complex() -> Outcome {
    let names = ["interval.mesh", "triangle.mesh", "single_tet.mesh", "two_triangles.mesh", "two_tets.mesh"];
    let mut worst: f64 = 0.0;
    for name in names {
        let mesh = MeshComplex::load(&mesh_path(name)).map_err(err)?;
        let d = mesh.dim();
        for r in 1..=3 {
            let c = cohomology_ranks(&mesh, r, d).map_err(err)?;
            let mut want = vec![0i64; d + 1];
            want[0] = 1;
            worst = worst.max(c.report.residuals.get("d_squared").copied().unwrap_or(0.0));
            ensure(c.betti == want, || format!("{name} r={r}: Betti {:?}", c.betti))?;
            passed(&c.report)?;
            for j in 0..=d {
                let space = MeshSpace::new(&mesh, r + d - j, j).map_err(err)?;
                passed(&conformity_check(&mesh, &space, 2, 0).map_err(err)?)?;
            }
        }
    }
    for name in ["two_triangles.mesh", "two_tets.mesh"] {
        let mesh = MeshComplex::load(&mesh_path(name)).map_err(err)?;
        let faulty = MeshSpace::with_orientation_fault(&mesh, 2, 1, 0).map_err(err)?;
        let rep = conformity_check(&mesh, &faulty, 2, 0).map_err(err)?;
        ensure(!rep.pass, || format!("{name}: orientation fault went undetected"))?;
    }
    Ok(format!("Betti (1,0,…) on 5 meshes, r ≤ 3; d∘d max {worst:.2e}; faults detected"))
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_tnforms")).args(args).output().map_err(err)?;
    ensure(out.status.success(), || format!("tnforms {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)))?;
    Ok(out.stdout)
}

fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("tnforms-acceptance-{}", std::process::id()));
    let mesh = mesh_path("two_tets.mesh");
    let mesh = mesh.to_str().ok_or("mesh path is not UTF-8")?;
    let runs: Vec<Vec<String>> = vec![
        ["verify", "--d", "3", "--r", "2", "--k", "1", "--trials", "3", "--seed", "7"].map(String::from).to_vec(),
        ["basis", "--d", "3", "--k", "1", "--s", "1", "--simplex", "random", "--seed", "7"].map(String::from).to_vec(),
        vec!["assemble".into(), "--mesh".into(), mesh.into(), "--r".into(), "1".into(), "--seed".into(), "7".into()],
    ];
    for (i, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let mut a: Vec<String> = args.clone();
            if a[0] == "assemble" {
                let out = dir.join(format!("run{i}_{rep}"));
                a.extend(["--out".into(), out.display().to_string()]);
            }
            let refs: Vec<&str> = a.iter().map(String::as_str).collect();
            let stdout = run_cli(&refs)?;
            if a[0] == "assemble" {
                let out = dir.join(format!("run{i}_{rep}"));
                let mut files = vec![stdout];
                for f in ["D_0.mtx", "D_1.mtx", "D_2.mtx", "mass_0.mtx", "mass_3.mtx", "report.json"] {
                    files.push(std::fs::read(out.join(f)).map_err(err)?);
                }
                outputs.push(files.concat());
            } else {
                outputs.push(stdout);
            }
        }
        ensure(outputs[0] == outputs[1], || format!("`tnforms {}` differs between runs", args[0]))?;
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok("verify, basis and assemble byte-identical across runs".into())
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("dimension identities", dimension_identities),
        ("scaled duality of t-n and face-normal bases", scaled_duality),
        ("orthogonality of tangential-normal vectors", tn_orthogonality),
        ("trace duality", trace_duality),
        ("Hodge coefficient identity", hodge_coefficients),
        ("unisolvence and interpolation", unisolvence),
        ("Lagrange-type duality and DoF counts", nodal_duality),
        ("bubble spaces", bubbles),
        ("bubble complex exactness", bubble_complex),
        ("global complex", global_complex),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({secs:.1}s)", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {detail} ({secs:.1}s)", i + 1);
            }
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
