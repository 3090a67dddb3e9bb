use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use tnforms::report::read_matrix_market;

fn tnforms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tnforms")).args(args).output().expect("binary runs")
}

fn mesh(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../meshes").join(name);
    p.display().to_string()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn basis_edge_elements_on_the_reference_tet() {
    let out = tnforms(&["basis", "--d", "3", "--k", "1", "--s", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let anchors = v["anchors"].as_array().unwrap();
    assert_eq!(anchors.len(), 6);
    for a in anchors {
        for flavor in ["primal", "dual", "hodge"] {
            let elems = a[flavor].as_array().unwrap();
            assert_eq!(elems.len(), 3);
            assert!(elems.iter().all(|x| x["flavor"] == flavor && x["coeffs"].as_array().unwrap().len() == 3));
        }
        let p = a["pairing_matrix"].as_array().unwrap();
        for (i, row) in p.iter().enumerate() {
            for (j, x) in row.as_array().unwrap().iter().enumerate() {
                let x = x.as_f64().unwrap();
                if i == j {
                    assert!(x.abs() > 1e-12);
                } else {
                    assert!(x.abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn basis_small_cases() {
    // volume forms anchored at a vertex: one element per anchor, carried by the whole triangle
    let v = json(&tnforms(&["basis", "--d", "2", "--k", "2", "--s", "0"]));
    let anchors = v["anchors"].as_array().unwrap();
    assert_eq!(anchors.len(), 3);
    for a in anchors {
        assert_eq!(a["primal"][0]["f"], serde_json::json!([0, 1, 2]));
    }
    // scalars: the constant 1 at every vertex
    let v = json(&tnforms(&["basis", "--d", "3", "--k", "0", "--s", "0"]));
    for a in v["anchors"].as_array().unwrap() {
        assert_eq!(a["primal"][0]["coeffs"], serde_json::json!([1.0]));
    }
}

#[test]
fn floats_carry_seventeen_digits() {
    let out = tnforms(&["basis", "--d", "2", "--k", "1", "--s", "1", "--simplex", "random", "--seed", "3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let sample = text.lines().find(|l| l.contains('e') && l.trim_start().starts_with(|c: char| c == '-' || c.is_ascii_digit())).unwrap();
    let mantissa = sample.trim().trim_end_matches(',').split('e').next().unwrap();
    assert_eq!(mantissa.trim_start_matches('-').replace('.', "").len(), 17, "{sample}");
}

#[test]
fn verify_passes_and_names_an_injected_fault() {
    let ok = tnforms(&["verify", "--d", "2", "--r", "1", "--k", "0"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert_eq!(json(&ok)["pass"], true);

    let ok = tnforms(&["verify", "--d", "3", "--r", "2", "--k", "1", "--trials", "20"]);
    assert_eq!(ok.status.code(), Some(0));

    let bad = tnforms(&["verify", "--d", "3", "--r", "2", "--k", "1", "--trials", "2", "--inject-fault"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("FAIL: trace_duality"));
    let checks = json(&bad)["checks"].as_array().unwrap().clone();
    let failing: Vec<&str> = checks.iter().filter(|c| c["pass"] == false).map(|c| c["check"].as_str().unwrap()).collect();
    assert_eq!(failing, vec!["trace_duality"]);
}

#[test]
fn verify_tolerance_override_is_honored() {
    let strict = tnforms(&["verify", "--d", "2", "--r", "1", "--k", "1", "--trials", "1", "--tol", "1e-30"]);
    assert_eq!(strict.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(tnforms(&["verify", "--d", "2", "--r", "1", "--k", "5"]).status.code(), Some(2));
    assert_eq!(tnforms(&["verify", "--d", "2", "--r", "0", "--k", "0"]).status.code(), Some(2));
    assert_eq!(tnforms(&["verify", "--d", "2", "--r", "1", "--k", "2", "--inject-fault"]).status.code(), Some(2));
    assert_eq!(tnforms(&["basis", "--d", "2", "--k", "1", "--s", "3"]).status.code(), Some(2));
    assert_eq!(tnforms(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(tnforms(&["verify", "--d", "2"]).status.code(), Some(2));
}

#[test]
fn assemble_two_triangles() {
    let dir = tempfile::tempdir().unwrap();
    let out = tnforms(&["assemble", "--mesh", &mesh("two_triangles.mesh"), "--r", "1", "--k", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    assert_eq!(report["betti"], serde_json::json!([1, 0]));
    let on_disk: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(on_disk, report);
    let d0 = read_matrix_market(&std::fs::read_to_string(dir.path().join("D_0.mtx")).unwrap()).unwrap();
    let d1 = read_matrix_market(&std::fs::read_to_string(dir.path().join("D_1.mtx")).unwrap()).unwrap();
    assert_eq!(d1.ncols(), d0.nrows());
    assert!((&d1 * &d0).amax() < 1e-11 * d1.amax().max(1.0) * d0.amax().max(1.0));
    let m0 = read_matrix_market(&std::fs::read_to_string(dir.path().join("mass_0.mtx")).unwrap()).unwrap();
    assert_eq!(m0.nrows(), d0.ncols());
    assert!((&m0 - m0.transpose()).amax() < 1e-13);
}

#[test]
fn assemble_single_tet_is_acyclic() {
    let dir = tempfile::tempdir().unwrap();
    let out = tnforms(&["assemble", "--mesh", &mesh("single_tet.mesh"), "--r", "2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["betti"], serde_json::json!([1, 0, 0, 0]));
}

#[test]
fn assemble_detects_the_hole_of_an_annulus() {
    let dir = tempfile::tempdir().unwrap();
    let out = tnforms(&["assemble", "--mesh", &mesh("annulus.mesh"), "--r", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["betti"], serde_json::json!([1, 1, 0]));
}

#[test]
fn assemble_orientation_fault_fails_conformity() {
    let dir = tempfile::tempdir().unwrap();
    let out = tnforms(&["assemble", "--mesh", &mesh("two_tets.mesh"), "--r", "1", "--inject-fault", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("conformity"));
}

#[test]
fn assemble_missing_mesh_names_the_path() {
    let out = tnforms(&["assemble", "--mesh", "no/such/file.mesh", "--r", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no/such/file.mesh"));
}

#[test]
fn assemble_reports_parse_errors_with_path_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.mesh");
    std::fs::write(&path, "dim 2\nvertices 3\n0 0\n1 x\n0 1\ncells 1\n0 1 2\n").unwrap();
    let out = tnforms(&["assemble", "--mesh", path.to_str().unwrap(), "--r", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.mesh") && err.contains('4'), "{err}");
}

#[test]
fn info_counts() {
    let v = json(&tnforms(&["info", "--d", "3", "--r", "1", "--k", "1"]));
    assert_eq!(v["space"]["space_dim"], 12);
    let v = json(&tnforms(&["info", "--mesh", &mesh("two_tets.mesh")]));
    assert_eq!(v["mesh"]["subsimplex_counts"], serde_json::json!([5, 9, 7, 2]));
    assert_eq!(v["mesh"]["euler_characteristic"], 1);
}
