//! End-to-end tests of the command-line interface: exit codes, report shape,
//! and the documented error behavior for malformed and failing inputs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use graphcorr::endomorphism::ad_endo;
use graphcorr::equivalence::BlockAutomorphism;
use graphcorr::harness::fixtures;
use graphcorr::json::{EndoDto, RepDto};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_graphcorr")
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("graphcorr-cli-{}-{tag}", std::process::id()));
    if dir.exists() {
        std::fs::remove_dir_all(&dir).unwrap();
    }
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn verify_passes_on_reference_fixture() {
    let dir = workdir("verify");
    graphcorr::json::write_file(
        &dir.join("g3_rep.json"),
        &RepDto::from_model(&fixtures::rep_g3()),
    )
    .unwrap();
    let out = run_in(&dir, &["verify", "g3_rep.json", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["status"], "ok");
    assert_eq!(report["command"], "verify");
}

#[test]
fn coisometric_reports_violation_with_exit_1() {
    let dir = workdir("coiso");
    graphcorr::json::write_file(
        &dir.join("g4_rep.json"),
        &RepDto::from_model(&fixtures::rep_g4()),
    )
    .unwrap();
    let out = run_in(&dir, &["coisometric", "g4_rep.json", "--json"]);
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_json(&out);
    assert_eq!(report["status"], "violation");
    assert_eq!(report["details"]["per_vertex"]["v1"], false);
    assert_eq!(report["details"]["per_vertex"]["v2"], false);

    graphcorr::json::write_file(
        &dir.join("g3_rep.json"),
        &RepDto::from_model(&fixtures::rep_g3()),
    )
    .unwrap();
    let out = run_in(&dir, &["coisometric", "g3_rep.json"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn factor_rejects_non_endomorphism_with_exit_1() {
    let dir = workdir("factor-bad");
    // Double one image of a valid induced endomorphism: multiplicativity breaks.
    let good = ad_endo(&fixtures::rep_g3());
    let mut dto = EndoDto::from_model(&good);
    for entry in &mut dto.images {
        if entry.block == "v1" && entry.p == 0 && entry.q == 0 {
            for rows in entry.value.values_mut() {
                for row in rows.iter_mut() {
                    for z in row.iter_mut() {
                        z[0] *= 2.0;
                        z[1] *= 2.0;
                    }
                }
            }
        }
    }
    graphcorr::json::write_file(&dir.join("not_a_hom.json"), &dto).unwrap();
    let out = run_in(&dir, &["factor", "not_a_hom.json", "-o", "out", "--json"]);
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_json(&out);
    assert_eq!(report["status"], "violation");
    assert_eq!(report["details"]["kind"], "NotAnEndomorphism");
    let msg = report["details"]["error"].as_str().unwrap();
    assert!(msg.contains("v1"), "offending unit named: {msg}");
}

#[test]
fn factor_succeeds_on_fixture_and_writes_artifacts() {
    let dir = workdir("factor-ok");
    graphcorr::json::write_file(
        &dir.join("endo.json"),
        &EndoDto::from_model(&ad_endo(&fixtures::rep_g3())),
    )
    .unwrap();
    let out = run_in(&dir, &["factor", "endo.json", "-o", "fact", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["details"]["unital"], true);
    assert_eq!(report["details"]["multiplicities"][0][0], 1);
    assert_eq!(report["details"]["multiplicities"][0][1], 2);
    for artifact in ["fact/graph.json", "fact/rep.json", "fact/report.json"] {
        assert!(dir.join(artifact).exists(), "missing {artifact}");
    }
    // The written representation verifies.
    let out = run_in(&dir, &["verify", "fact/rep.json"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn malformed_json_exits_2_and_names_the_path() {
    let dir = workdir("malformed");
    std::fs::write(
        dir.join("graph.json"),
        r#"{"vertices": ["v"], "edges": [{"id": "e", "src": 3, "dst": "v"}]}"#,
    )
    .unwrap();
    let out = run_in(&dir, &["graph-iso", "graph.json", "graph.json", "--json"]);
    assert_eq!(out.status.code(), Some(2));
    let report = stdout_json(&out);
    assert_eq!(report["status"], "error");
    let msg = report["details"]["error"].as_str().unwrap();
    assert!(msg.contains("edges[0].src"), "diagnostic names the path: {msg}");

    let out = run_in(&dir, &["verify", "missing.json"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run_in(&dir, &["--definitely-not-a-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn graph_iso_exit_codes() {
    let dir = workdir("iso");
    graphcorr::json::write_file(&dir.join("g2.json"), &fixtures::g2()).unwrap();
    graphcorr::json::write_file(&dir.join("g4.json"), &fixtures::g4()).unwrap();
    let out = run_in(&dir, &["graph-iso", "g2.json", "g2.json"]);
    assert_eq!(out.status.code(), Some(0));
    let out = run_in(&dir, &["graph-iso", "g2.json", "g4.json", "--json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["details"]["isomorphic"], false);
}

#[test]
fn gen_rep_seed_round_trip_and_tol_flag() {
    let dir = workdir("genrep");
    graphcorr::json::write_file(&dir.join("graph.json"), &fixtures::g3()).unwrap();
    graphcorr::json::write_file(&dir.join("dims.json"), &fixtures::dims_g3()).unwrap();
    let out = run_in(
        &dir,
        &["gen-rep", "graph.json", "--dims", "dims.json", "--seed", "11", "-o", "rep.json", "--json"],
    );
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["seed"], 11);

    let out = run_in(&dir, &["verify", "rep.json", "--json"]);
    assert_eq!(out.status.code(), Some(0));

    // An absurdly tight tolerance makes the same representation fail.
    let out = run_in(&dir, &["verify", "rep.json", "--tol", "1e-18", "--json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["tol"], 1e-18);
}

#[test]
fn equiv_and_cue_apply_pipeline() {
    let dir = workdir("equiv");
    graphcorr::json::write_file(&dir.join("graph.json"), &fixtures::g2()).unwrap();
    graphcorr::json::write_file(
        &dir.join("rep.json"),
        &RepDto::from_model(&fixtures::rep_g2()),
    )
    .unwrap();
    let out = run_in(&dir, &["gen-cue", "graph.json", "--seed", "4", "-o", "cue.json"]);
    assert_eq!(out.status.code(), Some(0));
    let out = run_in(&dir, &["cue-apply", "cue.json", "rep.json", "-o", "rep2.json"]);
    assert_eq!(out.status.code(), Some(0));
    let out = run_in(&dir, &["equiv", "rep2.json", "rep.json", "-o", "recovered.json", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert!(report["details"]["pullback_residual"].as_f64().unwrap() <= 1e-9);

    // Two representations with different induced endomorphisms: violation.
    graphcorr::json::write_file(
        &dir.join("g4_rep.json"),
        &RepDto::from_model(&fixtures::rep_g4()),
    )
    .unwrap();
    let out = run_in(&dir, &["equiv", "rep.json", "g4_rep.json", "-o", "nope.json", "--json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn conjugacy_pipeline() {
    let dir = workdir("conjugacy");
    let t1 = fixtures::rep_g3();
    // t2 = pullback of t1 by a random CUE; the identity automorphism then
    // witnesses conjugacy because the induced endomorphisms are equal.
    let cue = graphcorr::harness::random_cue(&fixtures::g3(), 6);
    let t2 = graphcorr::representation::pullback(&t1, &cue).unwrap();
    let gamma = BlockAutomorphism::identity(t1.layout());

    graphcorr::json::write_file(&dir.join("rep1.json"), &RepDto::from_model(&t1)).unwrap();
    graphcorr::json::write_file(&dir.join("rep2.json"), &RepDto::from_model(&t2)).unwrap();
    graphcorr::json::write_file(&dir.join("gamma.json"), &EndoDto::from_model(gamma.endo()))
        .unwrap();

    let out = run_in(
        &dir,
        &["conjugacy", "rep1.json", "rep2.json", "--gamma", "gamma.json", "-o", "w.json", "--json"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = stdout_json(&out);
    assert!(report["details"]["residual"].as_f64().unwrap() <= 1e-9);
    assert!(dir.join("w.json").exists());

    // Non-conjugate pair: G3 vs G4 reference representations.
    graphcorr::json::write_file(
        &dir.join("rep4.json"),
        &RepDto::from_model(&fixtures::rep_g4()),
    )
    .unwrap();
    let out = run_in(
        &dir,
        &["conjugacy", "rep1.json", "rep4.json", "--gamma", "gamma.json", "-o", "x.json", "--json"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["details"]["kind"], "NotConjugate");
}

#[test]
fn schema_flag_prints_formats() {
    let dir = workdir("schema");
    let out = run_in(&dir, &["--schema"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for needle in ["graph.json", "rep.json", "cue.json", "endo.json", "witness.json"] {
        assert!(text.contains(needle), "schema mentions {needle}");
    }
}

#[test]
fn gen_auto_and_gen_instance_commands() {
    let dir = workdir("gen");
    graphcorr::json::write_file(&dir.join("dims.json"), &fixtures::dims_g3()).unwrap();
    let out = run_in(&dir, &["gen-auto", "dims.json", "--seed", "3", "-o", "auto.json"]);
    assert_eq!(out.status.code(), Some(0));
    let auto = graphcorr::json::read_endo(&dir.join("auto.json")).unwrap();
    assert!(BlockAutomorphism::from_endo(auto, &graphcorr::Tolerance::default()).is_ok());

    let out = run_in(
        &dir,
        &["gen-instance", "--max-vertices", "3", "--max-edges", "4", "--max-dim", "4", "--seed", "2", "-o", "inst"],
    );
    assert_eq!(out.status.code(), Some(0));
    let out = run_in(&dir, &["verify", "inst/rep.json"]);
    assert_eq!(out.status.code(), Some(0));
}
