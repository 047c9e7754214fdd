use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lcc-lab")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn random_instance_has_requested_matching_sizes() {
    let out = run(&["gen", "--kind", "random", "--n", "100", "--delta", "0.25", "--seed", "1"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["n"], 100);
    let matchings = v["matchings"].as_array().unwrap();
    assert_eq!(matchings.len(), 100);
    for (label, m) in matchings.iter().enumerate() {
        let edges = m.as_array().unwrap();
        assert_eq!(edges.len(), 25);
        let mut seen = std::collections::BTreeSet::new();
        for e in edges {
            let (u, w) = (e[0].as_u64().unwrap() as usize, e[1].as_u64().unwrap() as usize);
            assert!(u != label && w != label);
            assert!(seen.insert(u) && seen.insert(w));
        }
    }
}

#[test]
fn hadamard_requires_power_of_two() {
    let out = run(&["gen", "--kind", "hadamard", "--n", "100"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("power of two"));
}

#[test]
fn random_instances_need_a_seed() {
    let out = run(&["gen", "--kind", "random", "--n", "100", "--delta", "0.25"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn perfect_matchings_need_a_small_seed() {
    let out = run(&["seed-search", "--kind", "perfect", "--n", "1024"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["verified"], true);
    assert!(v["seed_size"].as_u64().unwrap() <= 20);
}

#[test]
fn seed_search_reads_instance_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    let out = run(&["gen", "--kind", "concat", "--n", "64", "--delta", "0.4", "--seed", "2", "--out"]
        .into_iter()
        .chain([path.to_str().unwrap()])
        .collect::<Vec<_>>());
    assert!(out.status.success());
    let csv = dir.path().join("s.csv");
    let out = run(&["seed-search", "--input", path.to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(json(&out)["verified"], true);
    let text = std::fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "schema,kind,n,delta,seed_size,phases_case1,phases_case2,wall_ms,rng_seed"
    );
    assert!(lines.next().unwrap().starts_with("v1,file,64,"));
}

#[test]
fn malformed_instance_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"n\": 4, \"delta\": 0.25, \"matchings\": [[[0, 0]]]").unwrap();
    let out = run(&["seed-search", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(&path, "{\"n\": 4, \"delta\": 0.25, \"matchings\": [[[1, 1]], [], [], []]}").unwrap();
    let out = run(&["seed-search", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("self-loop"));
}

#[test]
fn zero_trials_is_a_usage_error() {
    let out = run(&["decode", "--k", "12", "--b", "3", "--seed", "1", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn decode_reports_success_and_bounds() {
    let out = run(&["decode", "--k", "12", "--b", "3", "--seed", "1", "--trials", "50", "--emit-bounds"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["schema"], "lcc-lab/v1");
    assert_eq!(v["success_rate"], 1.0);
    assert_eq!(v["bounds"]["fano_holds"], true);
    assert_eq!(v["code"]["n"], 16);
}

#[test]
fn decode_rejects_bad_parameters() {
    assert_eq!(run(&["decode", "--k", "10", "--b", "3", "--seed", "1", "--trials", "5"]).status.code(), Some(2));
    assert_eq!(
        run(&["decode", "--k", "12", "--b", "3", "--tau", "2/0", "--seed", "1", "--trials", "5"]).status.code(),
        Some(2)
    );
}

#[test]
fn ldc_demo_passes_on_defaults() {
    let out = run(&["ldc-demo", "--seed", "1", "--trials", "3000"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["decode"]["uncorrupted_success"], 1.0);
    assert_eq!(v["vc"]["indices"].as_array().unwrap().len(), 3);
    assert_eq!(v["distances"]["chain_holds"], true);
}

#[test]
fn ldc_demo_rejects_large_outer_codes() {
    assert_eq!(run(&["ldc-demo", "--k", "12", "--b", "2", "--seed", "1"]).status.code(), Some(2));
}

#[test]
fn invalid_thread_count_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_lcc-lab"))
        .args(["gen", "--kind", "perfect", "--n", "8"])
        .env("LCC_LAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
