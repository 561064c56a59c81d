//! End-to-end runs of the `evinf` binary.

use std::path::Path;
use std::process::{Command, Output};

use evinf::manifest::{hash_path, RunManifest};

fn evinf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evinf"))
        .args(args)
        .current_dir(dir)
        .env_remove(evinf::DATA_ROOT_ENV)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn synth(dir: &Path, name: &str) {
    ok(&evinf(dir, &["synth", "--articles", "30", "--seed", "4", "--out", name]));
}

#[test]
fn synth_is_reproducible_and_records_a_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "a.jsonl");
    synth(tmp.path(), "b.jsonl");
    let a = hash_path(&tmp.path().join("a.jsonl")).unwrap();
    assert_eq!(a, hash_path(&tmp.path().join("b.jsonl")).unwrap());
    let m = RunManifest::load(&tmp.path().join("a.jsonl.manifest.json")).unwrap();
    assert_eq!(m.command, "synth");
    assert_eq!(m.seeds, vec![4]);
    assert_eq!(m.produced.unwrap()[0].sha256, a);
}

#[test]
fn train_run_directory_contract_and_replay() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "d.jsonl");
    ok(&evinf(tmp.path(), &["train", "--variant", "lr", "--data", "d.jsonl", "--run-dir", "run"]));
    let run = tmp.path().join("run");
    for f in ["manifest.json", "config.toml", "vocab.json", "lr.json", "epochs.jsonl", "summary.json", "report.txt", "report.jsonl"] {
        assert!(run.join(f).is_file(), "missing {f}");
    }
    let report = std::fs::read_to_string(run.join("report.jsonl")).unwrap();
    assert_eq!(report.lines().count(), 2);
    let m = RunManifest::load(&run.join("manifest.json")).unwrap();
    assert_eq!(m.inputs.len(), 1);
    assert!(m.produced.is_some());

    let eval = ok(&evinf(tmp.path(), &["eval", "--data", "d.jsonl", "--model", "run", "--split", "test"]));
    let stored = std::fs::read_to_string(run.join("report.txt")).unwrap();
    let test_block = stored.split("== ").find(|b| b.starts_with("lr on test")).unwrap();
    assert!(eval.contains(test_block.trim_end()), "reloaded model scores differently");

    let replay = ok(&evinf(tmp.path(), &["replay", "run/manifest.json"]));
    assert!(!replay.contains("DIFF"), "{replay}");
}

#[test]
fn neural_training_writes_a_checkpoint_that_reloads() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "d.jsonl");
    let args = [
        "train", "--variant", "cond-attn", "--pretrain", "tokenwise", "--data", "d.jsonl", "--run-dir", "run", "--epochs", "2",
        "--patience", "1", "--pretrain-epochs", "2", "--embedding-dim", "8", "--hidden", "6",
    ];
    ok(&evinf(tmp.path(), &args));
    let epochs = std::fs::read_to_string(tmp.path().join("run/epochs.jsonl")).unwrap();
    assert!(epochs.contains("\"phase\":\"pretrain\"") && epochs.contains("\"phase\":\"train\""));
    let out = ok(&evinf(tmp.path(), &["eval", "--data", "d.jsonl", "--model", "run", "--oracle-spans"]));
    assert!(out.contains("cond-attn on test [oracle spans]"));
}

#[test]
fn majority_and_heuristics_baselines() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "d.jsonl");
    let out = ok(&evinf(tmp.path(), &["eval", "--data", "d.jsonl", "--model", "majority", "--out-dir", "maj"]));
    assert!(out.contains("majority on test"));
    assert!(out.contains("0.333"), "majority recall is one third:\n{out}");
    assert!(tmp.path().join("maj/manifest.json").is_file());
    let out = ok(&evinf(tmp.path(), &["heuristics", "--data", "d.jsonl"]));
    assert!(out.contains("heuristics on test"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(evinf(tmp.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(evinf(tmp.path(), &["train", "--variant", "nope", "--data", "x", "--run-dir", "r"]).status.code(), Some(1));
    assert_eq!(evinf(tmp.path(), &["eval", "--data", "missing.jsonl", "--model", "majority"]).status.code(), Some(2));
    std::fs::write(tmp.path().join("bad.toml"), "no_such_key = 1\n").unwrap();
    synth(tmp.path(), "d.jsonl");
    let bad_config = ["train", "--variant", "lr", "--data", "d.jsonl", "--config", "bad.toml", "--run-dir", "r"];
    assert_eq!(evinf(tmp.path(), &bad_config).status.code(), Some(1));
    assert_eq!(evinf(tmp.path(), &["gradcheck", "--seeds", "2"]).status.code(), Some(0));
}

#[test]
fn data_root_resolves_relative_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::create_dir(tmp.path().join("data")).unwrap();
    synth(&tmp.path().join("data"), "d.jsonl");
    let out = Command::new(env!("CARGO_BIN_EXE_evinf"))
        .args(["eval", "--data", "d.jsonl", "--model", "heuristics"])
        .current_dir(tmp.path())
        .env(evinf::DATA_ROOT_ENV, tmp.path().join("data"))
        .output()
        .unwrap();
    ok(&out);
}

#[test]
fn ingest_from_csv_files() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::create_dir_all(dir.join("txt_files")).unwrap();
    let text = "Methods were standard. Weight fell with drug a versus drug b (p = 0.01). Nothing else changed.";
    std::fs::write(dir.join("txt_files/PMC11.txt"), text).unwrap();
    std::fs::write(dir.join("txt_files/PMC12.txt"), text).unwrap();
    std::fs::write(dir.join("train.txt"), "11\n").unwrap();
    std::fs::write(dir.join("dev.txt"), "").unwrap();
    std::fs::write(dir.join("test.txt"), "12\n").unwrap();
    std::fs::write(
        dir.join("prompts.csv"),
        "PromptID,PMCID,Outcome,Intervention,Comparator\n1,11,weight,drug a,drug b\n2,12,weight,drug a,drug b\n",
    )
    .unwrap();
    std::fs::write(
        dir.join("annotations.csv"),
        "UserID,PromptID,PMCID,Valid Label,Valid Reasoning,Label,Annotations,Label Code,Evidence Start,Evidence End\n\
         0,1,11,1,1,significantly decreased,Weight fell with drug a,-1,23,46\n\
         4,1,11,1,1,significantly decreased,weight fell with drug a versus drug b,-1,,\n\
         0,2,12,1,1,significantly decreased,Weight fell with drug a,-1,23,46\n\
         4,2,12,1,1,significantly decreased,Weight fell,-1,23,34\n",
    )
    .unwrap();
    let args = [
        "ingest", "--annotations", "annotations.csv", "--prompts", "prompts.csv", "--articles", ".", "--splits", ".", "--out",
        "corpus.jsonl",
    ];
    ok(&evinf(dir, &args));
    let ds = evinf::dataset::load_dataset(&dir.join("corpus.jsonl")).unwrap();
    assert_eq!(ds.prompts.len(), 2);
    assert_eq!(ds.records.len(), 4);
    let span = ds.gold_evidence(1).unwrap();
    assert_eq!(&ds.articles["11"].doc.text[span.start..span.end], "Weight fell with drug a");
    let published = [&args[..], &["--expect-published"]].concat();
    assert_eq!(evinf(dir, &published).status.code(), Some(2));
}
