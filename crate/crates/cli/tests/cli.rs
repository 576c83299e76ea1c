use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn isosense(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isosense"))
        .args(args)
        .output()
        .unwrap()
}

fn run_ok(args: &[&str]) {
    let out = isosense(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: PathBuf) -> Value {
    serde_json::from_slice(&fs::read(p).unwrap()).unwrap()
}

fn synth(root: &Path, name: &str, spec: &str) -> PathBuf {
    let spec_path = root.join(format!("{name}.json"));
    fs::write(&spec_path, spec).unwrap();
    let out = root.join(name);
    run_ok(&["synth", "--config", s(&spec_path), "--out", s(&out)]);
    out
}

const CLUSTERS: &str = r#"{"dim": 8, "n_layers": 1, "seed": 0, "lemmas": 1, "senses_per_lemma": 2,
    "occurrences_per_sense": 20, "means": "orthogonal", "noise_std": 0.0}"#;

const SPIKED: &str = r#"{"dim": 16, "n_layers": 2, "seed": 4, "lemmas": 3, "senses_per_lemma": 2,
    "occurrences_per_sense": 10, "means": "gaussian", "noise_std": 0.2,
    "spikes": [{"magnitude": 5.0, "spread": 2.0}], "unannotated": 40}"#;

#[test]
fn orthogonal_noise_free_clusters_score_delta_one() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path(), "clusters", CLUSTERS);
    let out = tmp.path().join("eval");
    run_ok(&["eval", "--dataset", s(&data), "--out", s(&out), "--k", "40"]);
    let report = read_json(out.join("metrics.json"));
    assert_eq!(report["layers"][0]["delta"].as_f64(), Some(1.0));
    assert_eq!(report["words"][0]["inter_sim"].as_f64(), Some(0.0));
    assert!(out.join("metrics.csv").exists());
    assert!(out.join("run_manifest.json").exists());
}

#[test]
fn spiked_data_has_high_baseline() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path(), "spiked", SPIKED);
    let out = tmp.path().join("analyze");
    run_ok(&["analyze", "--dataset", s(&data), "--out", s(&out), "--k", "100"]);
    let profiles = read_json(out.join("profiles.json"));
    for p in profiles.as_array().unwrap() {
        assert!(p["baseline_b"].as_f64().unwrap() > 0.5);
        assert!(p["explained_variance"][0].as_f64().unwrap() > 0.5);
    }
    assert!(out.join("projection_layer_1.csv").exists());
}

#[test]
fn synth_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let a = synth(tmp.path(), "a", SPIKED);
    let b = synth(tmp.path(), "b", SPIKED);
    for name in [
        "manifest.json",
        "occurrences.tsv",
        "layer_0.f32",
        "layer_1.f32",
        "ground_truth.json",
    ] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn laser_output_feeds_every_other_command() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let data = synth(root, "spiked", SPIKED);
    let cfg = root.join("laser.json");
    fs::write(&cfg, r#"{"d_remove": 1, "iterations": 20, "alpha": 1.0}"#).unwrap();
    let retro = root.join("retro");
    run_ok(&["laser", "--dataset", s(&data), "--config", s(&cfg), "--out", s(&retro)]);
    assert_eq!(read_json(retro.join("manifest.json"))["postprocessing"], "laser");
    let meta = read_json(retro.join("laser_meta.json"));
    assert_eq!(meta["layers"].as_array().unwrap().len(), 2);

    run_ok(&[
        "analyze",
        "--dataset",
        s(&retro),
        "--out",
        s(&root.join("an")),
        "--k",
        "100",
    ]);
    run_ok(&[
        "eval",
        "--dataset",
        s(&retro),
        "--out",
        s(&root.join("ev")),
        "--k",
        "100",
    ]);
    let cmp = root.join("cmp");
    run_ok(&[
        "compare",
        "--before",
        s(&data),
        "--after",
        s(&retro),
        "--out",
        s(&cmp),
        "--k",
        "100",
    ]);
    let rows = read_json(cmp.join("comparison.json"));
    for row in rows.as_array().unwrap() {
        assert!(row["after"]["baseline_b"].as_f64().unwrap().abs() < row["before"]["baseline_b"].as_f64().unwrap());
        assert!(row["change_delta"].as_f64().unwrap() > 0.0);
    }
    for name in [
        "comparison.csv",
        "fig_random_baseline.csv",
        "fig_explained_variance.csv",
        "fig_sense_relatedness.csv",
    ] {
        assert!(cmp.join(name).exists(), "{name}");
    }
}

#[test]
fn compare_rejects_different_occurrence_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let a = synth(tmp.path(), "a", SPIKED);
    let b = synth(tmp.path(), "b", &SPIKED.replace("\"seed\": 4", "\"seed\": 5"));
    let out = isosense(&[
        "compare",
        "--before",
        s(&a),
        "--after",
        s(&b),
        "--out",
        s(&tmp.path().join("c")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row"));
    assert!(!tmp.path().join("c").exists());
}

#[test]
fn exit_codes_follow_the_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let missing = root.join("missing");
    let out = isosense(&["analyze", "--dataset", s(&missing), "--out", s(&root.join("o"))]);
    assert_eq!(out.status.code(), Some(2));

    assert_eq!(isosense(&["analyze", "--bogus"]).status.code(), Some(3));

    let data = synth(root, "clusters", CLUSTERS);
    let cfg = root.join("bad.json");
    fs::write(&cfg, r#"{"d_remov": 1}"#).unwrap();
    let out = isosense(&[
        "laser",
        "--dataset",
        s(&data),
        "--config",
        s(&cfg),
        "--out",
        s(&root.join("l")),
    ]);
    assert_eq!(out.status.code(), Some(3));

    fs::write(&cfg, r#"{"d_remove": 50}"#).unwrap();
    let out = isosense(&[
        "laser",
        "--dataset",
        s(&data),
        "--config",
        s(&cfg),
        "--out",
        s(&root.join("l")),
    ]);
    assert_eq!(out.status.code(), Some(3));

    let out = isosense(&[
        "analyze",
        "--dataset",
        s(&data),
        "--out",
        s(&root.join("a")),
        "--k",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(3));

    fs::write(data.join("layer_0.f32"), [0u8; 12]).unwrap();
    let out = isosense(&["analyze", "--dataset", s(&data), "--out", s(&root.join("a"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("12"));
}

#[test]
fn inventory_reads_tsv_and_xml() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let xml = root.join("toy.xml");
    fs::write(
        &xml,
        r#"<corpus><document><paragraph>
<sentence>
  <word surface_form="The"/>
  <word surface_form="document" lemma="document" pos="NN" wn30_key="document%1:10:00::"/>
  <word surface_form="documents" lemma="document" pos="VBZ" wn30_key="document%2:32:00::"/>
</sentence>
<sentence>
  <word surface_form="document" lemma="document" pos="NN" wn30_key="document%1:10:00::"/>
  <word surface_form="bank" lemma="bank" pos="NN" wn30_key="bank%1:17:01::"/>
</sentence>
</paragraph></document></corpus>"#,
    )
    .unwrap();
    let out = root.join("inv");
    run_ok(&["inventory", "--corpus", s(&xml), "--format", "xml", "--out", s(&out)]);
    let report = read_json(out.join("inventory_summary.json"));
    assert_eq!(report["occurrences"], 5);
    assert_eq!(report["annotated"], 4);
    assert_eq!(report["retained"], 3);

    let tsv = out.join("occurrences.tsv");
    let again = root.join("inv2");
    run_ok(&["inventory", "--corpus", s(&tsv), "--format", "tsv", "--out", s(&again)]);
    assert_eq!(fs::read(tsv).unwrap(), fs::read(again.join("occurrences.tsv")).unwrap());
}
