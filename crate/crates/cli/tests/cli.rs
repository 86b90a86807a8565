mod common;

use std::fs;

use common::*;
use lscd_core::scores::read_score_tsv;
use tempfile::tempdir;

#[test]
fn planted_change_ranks_first_for_every_metric() {
    let tmp = tempdir().unwrap();
    let bundles = tmp.path().join("bundles");
    planted_change(&bundles);
    for metric in ["prt", "apd", "jsd"] {
        let out = tmp.path().join(format!("{metric}.tsv"));
        let run = lscd(&["score", "--bundles-dir", path_str(&bundles), "--metric", metric, "--output", path_str(&out)]);
        assert!(run.status.success(), "{metric}: {}", stderr(&run));
        let text = fs::read_to_string(&out).unwrap();
        let first = text.lines().next().unwrap();
        assert!(first.starts_with("shifted\t"), "{metric}: {text}");
        assert!(tmp.path().join(format!("{metric}.tsv.manifest.json")).is_file());
    }
}

#[test]
fn manifest_records_config_and_digests() {
    let tmp = tempdir().unwrap();
    let bundles = tmp.path().join("b");
    planted_change(&bundles);
    let out = tmp.path().join("s.tsv");
    let run = lscd(&[
        "score", "--bundles-dir", path_str(&bundles), "--metric", "apd", "--subsample-cap", "2", "--seed", "7",
        "--output", path_str(&out),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("s.tsv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seed"], 7);
    assert_eq!(manifest["config"]["subsample_cap"], 2);
    assert_eq!(manifest["config"]["metric"], "apd");
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 6);
    assert_eq!(manifest["scored"], 2);
    assert!(manifest["version"].is_string());
}

#[test]
fn jsd_on_single_occurrences() {
    let tmp = tempdir().unwrap();
    let bundles = tmp.path().join("b");
    add_bundle(&bundles, "solo", &[vec![1.0, 2.0]], &[vec![3.0, -1.0]]);
    let out = tmp.path().join("s.tsv");
    let run = lscd(&["score", "--bundles-dir", path_str(&bundles), "--metric", "jsd", "--output", path_str(&out)]);
    assert!(run.status.success(), "{}", stderr(&run));
    let scores = read_score_tsv(&out).unwrap();
    let v = scores["solo"];
    assert!((0.0..=1.0).contains(&v));
}

#[test]
fn empty_bundle_dir_fails() {
    let tmp = tempdir().unwrap();
    let out = tmp.path().join("s.tsv");
    let run = lscd(&["score", "--bundles-dir", path_str(tmp.path()), "--metric", "apd", "--output", path_str(&out)]);
    assert!(!run.status.success());
    assert!(stderr(&run).contains("no targets found"));
}

#[test]
fn missing_target_bundle_is_reported_and_fails() {
    let tmp = tempdir().unwrap();
    let bundles = tmp.path().join("b");
    planted_change(&bundles);
    let targets = write(&tmp.path().join("targets.txt"), "stable\nghost\nshifted\n");
    let out = tmp.path().join("s.tsv");
    let run = lscd(&[
        "score", "--bundles-dir", path_str(&bundles), "--targets", path_str(&targets), "--metric", "prt",
        "--output", path_str(&out),
    ]);
    assert!(!run.status.success());
    assert!(stderr(&run).contains("1 of 3 words failed"));
    let scores = read_score_tsv(&out).unwrap();
    assert_eq!(scores.len(), 2);
    let manifest = fs::read_to_string(tmp.path().join("s.tsv.manifest.json")).unwrap();
    assert!(manifest.contains("ghost"));
}

#[test]
fn rejects_zero_subsample_cap() {
    let tmp = tempdir().unwrap();
    let run = lscd(&[
        "score", "--bundles-dir", path_str(tmp.path()), "--metric", "apd", "--subsample-cap", "0", "--output", "x",
    ]);
    assert!(!run.status.success());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempdir().unwrap();
    let bundles = tmp.path().join("b");
    for i in 0..6 {
        let t1: Vec<Vec<f32>> = (0..9).map(|k| vec![(k as f32).sin(), i as f32 * 0.1, (k * i) as f32 * 0.01]).collect();
        let t2: Vec<Vec<f32>> = (0..7).map(|k| vec![(k as f32).cos(), 1.0 - i as f32 * 0.1, k as f32 * 0.02]).collect();
        add_bundle(&bundles, &format!("w{i}"), &t1, &t2);
    }
    for metric in ["apd", "jsd"] {
        let mut outputs = Vec::new();
        for (run_idx, workers) in ["1", "4"].iter().enumerate() {
            let out = tmp.path().join(format!("{metric}{run_idx}.tsv"));
            let run = lscd(&[
                "score", "--bundles-dir", path_str(&bundles), "--metric", metric, "--subsample-cap", "5", "--seed", "3",
                "--workers", workers, "--output", path_str(&out),
            ]);
            assert!(run.status.success(), "{}", stderr(&run));
            outputs.push(fs::read(&out).unwrap());
        }
        assert_eq!(outputs[0], outputs[1]);
    }
}

#[test]
fn evaluate_identical_and_shuffled() {
    let tmp = tempdir().unwrap();
    let gold = write(&tmp.path().join("gold.tsv"), "a\t0.1\nb\t0.4\nc\t0.2\nd\t0.9\ne\t0.5\n");
    let run = lscd(&["evaluate", "--pred", path_str(&gold), "--gold", path_str(&gold)]);
    assert!(run.status.success(), "{}", stderr(&run));
    let text = stdout(&run);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split('\t').collect();
    assert_eq!(row[0].parse::<f64>().unwrap(), 1.0);
    assert_eq!(row[2], "5");

    let pred = write(&tmp.path().join("pred.tsv"), "a\t0.9\nb\t0.1\nc\t0.5\nd\t0.4\ne\t0.2\n");
    let json = tmp.path().join("report.json");
    let run = lscd(&[
        "evaluate", "--pred", path_str(&pred), "--gold", path_str(&gold), "--format", "json", "--output", path_str(&json),
    ]);
    assert!(run.status.success());
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert!(report["rho"].as_f64().unwrap().abs() < 1.0);
    assert_eq!(report["method"], "exact-permutation");
}

#[test]
fn evaluate_reports_line_of_malformed_input() {
    let tmp = tempdir().unwrap();
    let gold = write(&tmp.path().join("gold.tsv"), "a\t0.1\nb\t0.4\nc\t0.2\n");
    let pred = write(&tmp.path().join("pred.tsv"), "a\t0.1\nword;0.3\n");
    let run = lscd(&["evaluate", "--pred", path_str(&pred), "--gold", path_str(&gold)]);
    assert!(!run.status.success());
    let err = stderr(&run);
    assert!(err.contains("pred.tsv") && err.contains(":2"), "{err}");
}

#[test]
fn evaluate_needs_three_shared_words() {
    let tmp = tempdir().unwrap();
    let gold = write(&tmp.path().join("gold.tsv"), "a\t0.1\nb\t0.4\nc\t0.2\n");
    let pred = write(&tmp.path().join("pred.tsv"), "a\t0.1\nb\t0.3\nz\t0.3\n");
    let run = lscd(&["evaluate", "--pred", path_str(&pred), "--gold", path_str(&gold)]);
    assert!(!run.status.success());
}

#[test]
fn score_output_round_trips_through_evaluate() {
    let tmp = tempdir().unwrap();
    let bundles = tmp.path().join("b");
    for i in 0..5 {
        let t1: Vec<Vec<f32>> = (0..4).map(|k| vec![1.0, k as f32 * 0.1]).collect();
        let t2: Vec<Vec<f32>> = (0..4).map(|k| vec![1.0 - i as f32 * 0.2, i as f32 * 0.3 + k as f32 * 0.05]).collect();
        add_bundle(&bundles, &format!("w{i}"), &t1, &t2);
    }
    let out = tmp.path().join("s.tsv");
    assert!(lscd(&["score", "--bundles-dir", path_str(&bundles), "--metric", "apd", "--output", path_str(&out)])
        .status
        .success());
    let run = lscd(&["evaluate", "--pred", path_str(&out), "--gold", path_str(&out)]);
    assert!(run.status.success());
    let rho: f64 = stdout(&run).lines().nth(1).unwrap().split('\t').next().unwrap().parse().unwrap();
    assert_eq!(rho, 1.0);
    let parsed = read_score_tsv(&out).unwrap();
    let rewritten = tmp.path().join("again.tsv");
    let text: String = fs::read_to_string(&out).unwrap();
    fs::write(&rewritten, &text).unwrap();
    assert_eq!(read_score_tsv(&rewritten).unwrap(), parsed);
}

#[test]
fn fd_on_identical_corpora_is_zero() {
    let tmp = tempdir().unwrap();
    let corpus = write(&tmp.path().join("c.txt"), "the bank of the river\nmoney in the bank\n");
    let targets = write(&tmp.path().join("t.txt"), "bank\nriver\nmoney\n");
    let out = tmp.path().join("fd.tsv");
    let run = lscd(&[
        "baseline", "fd", "--corpus1", path_str(&corpus), "--corpus2", path_str(&corpus), "--targets",
        path_str(&targets), "--output", path_str(&out),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let scores = read_score_tsv(&out).unwrap();
    assert_eq!(scores.len(), 3);
    assert!(scores.values().all(|v| *v == 0.0));
    assert!(tmp.path().join("fd.tsv.manifest.json").is_file());
}

#[test]
fn count_window_changes_scores_reproducibly() {
    let tmp = tempdir().unwrap();
    let c1 = write(&tmp.path().join("c1.txt"), "a t b c d e f g h i j k l\nt x y a\n");
    let c2 = write(&tmp.path().join("c2.txt"), "b t a l k j i h g f e d c\nx t y\n");
    let targets = write(&tmp.path().join("t.txt"), "t\n");
    let run_with = |window: &str, name: &str| {
        let out = tmp.path().join(name);
        let run = lscd(&[
            "baseline", "count", "--corpus1", path_str(&c1), "--corpus2", path_str(&c2), "--targets",
            path_str(&targets), "--window", window, "--output", path_str(&out),
        ]);
        assert!(run.status.success(), "{}", stderr(&run));
        fs::read(&out).unwrap()
    };
    let wide = run_with("10", "w10.tsv");
    let narrow = run_with("1", "w1.tsv");
    assert_ne!(wide, narrow);
    assert_eq!(wide, run_with("10", "w10b.tsv"));
    assert_eq!(narrow, run_with("1", "w1b.tsv"));
}

fn write_embeddings(path: &std::path::Path, words: &[String], rows: &[Vec<f64>]) {
    let mut text = format!("{} {}\n", rows.len(), rows[0].len());
    for (w, r) in words.iter().zip(rows) {
        let nums: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
        text.push_str(&format!("{w} {}\n", nums.join(" ")));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn procrustes_on_rotated_copy_is_near_zero() {
    let tmp = tempdir().unwrap();
    let words: Vec<String> = (0..30).map(|i| format!("w{i}")).collect();
    let rows: Vec<Vec<f64>> = (0..30)
        .map(|i| (0..4).map(|j| ((i * 7 + j * 3) as f64 * 0.37).sin()).collect())
        .collect();
    let (c, s) = (0.6f64, 0.8f64);
    let rotated: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| vec![c * r[0] - s * r[1], s * r[0] + c * r[1], r[3], -r[2]])
        .collect();
    let e1 = tmp.path().join("e1.txt");
    let e2 = tmp.path().join("e2.txt");
    write_embeddings(&e1, &words, &rows);
    write_embeddings(&e2, &words, &rotated);
    let targets = write(&tmp.path().join("t.txt"), "w1\nw5\nw9\n");
    let out = tmp.path().join("p.tsv");
    let run = lscd(&[
        "baseline", "procrustes", "--embeddings1", path_str(&e1), "--embeddings2", path_str(&e2), "--targets",
        path_str(&targets), "--output", path_str(&out),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let scores = read_score_tsv(&out).unwrap();
    assert_eq!(scores.len(), 3);
    assert!(scores.values().all(|v| v.abs() < 1e-9), "{scores:?}");
}

#[test]
fn median_performance_reproduces_perfect_negative_correlation() {
    let tmp = tempdir().unwrap();
    let entries = write(
        &tmp.path().join("entries.tsv"),
        "english\t0.200\t0.605\nswedish\t0.203\t0.569\ngerman\t0.266\t0.560\ngems\t0.267\t0.323\nlatin\t0.364\t-0.113\n",
    );
    let run = lscd(&["analyze", "median-performance", "--entries", path_str(&entries)]);
    assert!(run.status.success(), "{}", stderr(&run));
    let report: serde_json::Value = serde_json::from_str(&stdout(&run)).unwrap();
    assert_eq!(report["rho"].as_f64().unwrap(), -1.0);
    assert_eq!(report["n"], 5);
}

#[test]
fn median_performance_from_gold_files() {
    let tmp = tempdir().unwrap();
    let gold_dir = tmp.path().join("gold");
    fs::create_dir(&gold_dir).unwrap();
    // medians after unit normalisation: 0.25, 0.5, 0.75
    write(&gold_dir.join("a.tsv"), "x\t1\ny\t2\nz\t8\n");
    write(&gold_dir.join("b.tsv"), "x\t1\ny\t2\nz\t4\n");
    write(&gold_dir.join("c.tsv"), "x\t3\ny\t3\nz\t4\n");
    let entries = write(&tmp.path().join("entries.tsv"), "a\tgold/a.tsv\t0.1\nb\tgold/b.tsv\t0.2\nc\tgold/c.tsv\t0.3\n");
    let run = lscd(&["analyze", "median-performance", "--unit-normalise", "--entries", path_str(&entries)]);
    assert!(run.status.success(), "{}", stderr(&run));
    let report: serde_json::Value = serde_json::from_str(&stdout(&run)).unwrap();
    assert_eq!(report["rho"].as_f64().unwrap(), 1.0);
}

#[test]
fn distributions_single_word_and_conservation() {
    let tmp = tempdir().unwrap();
    let single = write(&tmp.path().join("one.tsv"), "w\t0.5\n");
    let many = write(
        &tmp.path().join("many.tsv"),
        &(0..37).map(|i| format!("w{i}\t{}\n", (i as f64 * 0.7).sin().abs())).collect::<String>(),
    );
    let out = tmp.path().join("dist.csv");
    let run = lscd(&[
        "analyze", "distributions", "--bins", "6", "--output", path_str(&out), path_str(&single), path_str(&many),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "file,n,median,min,max,bin,bin_start,bin_end,count");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let one: Vec<_> = rows.iter().filter(|r| r[0].ends_with("one.tsv")).collect();
    assert_eq!(one.len(), 1);
    assert_eq!(one[0][2].parse::<f64>().unwrap(), 0.5);
    assert_eq!(one[0][8], "1");
    let total: usize = rows
        .iter()
        .filter(|r| r[0].ends_with("many.tsv"))
        .map(|r| r[8].parse::<usize>().unwrap())
        .sum();
    assert_eq!(total, 37);
}
