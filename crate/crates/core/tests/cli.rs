use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use tempfile::TempDir;

fn textmask(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_textmask"))
        .args(args)
        .env_remove("TEXTMASK_K")
        .env_remove("TEXTMASK_T")
        .env_remove("TEXTMASK_SEED")
        .env_remove("TEXTMASK_THREADS")
        .env_remove("TEXTMASK_STRATEGY")
        .env_remove("TEXTMASK_IMAGE_RATIO")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = textmask(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const THREE: &str = "a dog on grass\nA dog runs.\nthe cat\n";

#[test]
fn freq_table_counts_words() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "c.txt", THREE);
    let table = dir.path().join("freq.tsv");
    ok(&["freq", "-i", s(&input), "-o", s(&table)]);
    let text = std::fs::read_to_string(&table).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "#total 10");
    assert_eq!(&lines[1..3], ["a\t2", "dog\t2"]);
    assert!(lines.contains(&".\t1") && lines.contains(&"runs\t1"));
    assert_eq!(lines.len(), 1 + 8);

    // same input, same bytes
    let again = dir.path().join("again.tsv");
    ok(&["freq", "-i", s(&input), "-o", s(&again), "--threads", "3"]);
    assert_eq!(std::fs::read(&table).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn freq_on_empty_corpus_fails() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "empty.txt", "");
    let out = textmask(&["freq", "-i", s(&input), "-o", s(&dir.path().join("f.tsv"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty corpus"));
}

#[test]
fn frequency_mask_without_table_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "c.txt", THREE);
    for strategy in ["frequency", "swclip"] {
        let out = textmask(&["mask", "-i", s(&input), "--strategy", strategy, "-o", s(&dir.path().join("o.txt"))]);
        assert_eq!(out.status.code(), Some(2), "{strategy}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("--freq-table"));
    }
}

#[test]
fn bad_threshold_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "c.txt", THREE);
    let out = textmask(&["mask", "-i", s(&input), "--strategy", "random", "-t", "0", "-o", s(&dir.path().join("o.txt"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tsv_mask_keeps_ids_and_order() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "c.tsv", "x1\tThe small dog runs on the grass\nx2\tA cat\n\nx3\tred car\n");
    let output = dir.path().join("o.tsv");
    ok(&["mask", "-i", s(&input), "--strategy", "truncation", "-k", "3", "-o", s(&output)]);
    assert_eq!(
        std::fs::read_to_string(&output).unwrap(),
        "x1\tthe small dog\nx2\ta cat\nx3\tred car\n"
    );
}

#[test]
fn jsonl_round_trip_with_gzip() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("c.jsonl.gz");
    let mut gz = GzEncoder::new(std::fs::File::create(&input).unwrap(), Compression::default());
    gz.write_all(b"{\"id\": 7, \"caption\": \"A dog runs on the grass.\"}\n{\"id\": \"b\", \"caption\": \"cat\"}\n")
        .unwrap();
    gz.finish().unwrap();

    let table = dir.path().join("freq.tsv");
    ok(&["freq", "-i", s(&input), "-o", s(&table)]);
    let output = dir.path().join("o.jsonl.gz");
    ok(&[
        "mask", "-i", s(&input), "--strategy", "frequency", "-k", "2", "--freq-table", s(&table), "-o", s(&output),
    ]);
    let mut text = String::new();
    GzDecoder::new(std::fs::File::open(&output).unwrap())
        .read_to_string(&mut text)
        .unwrap();
    let rows: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["id"], "7");
    assert_eq!(rows[0]["caption"].as_str().unwrap().split(' ').count(), 2);
    assert_eq!(rows[1]["id"], "b");
    assert_eq!(rows[1]["caption"], "cat");
}

#[test]
fn plain_output_to_tsv_uses_line_numbers() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "c.txt", THREE);
    let output = dir.path().join("o.tsv");
    ok(&[
        "mask", "-i", s(&input), "--strategy", "block", "-k", "2", "--output-format", "tsv", "-o", s(&output),
    ]);
    let text = std::fs::read_to_string(&output).unwrap();
    let ids: Vec<&str> = text.lines().map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(ids, ["1", "2", "3"]);
}

#[test]
fn dist_csv_shape() {
    let dir = TempDir::new().unwrap();
    let mut corpus = String::new();
    for i in 0..200 {
        let words: Vec<String> = (0..12).map(|j| format!("w{}", (i * 7 + j * 13) % 97)).collect();
        corpus.push_str(&words.join(" "));
        corpus.push('\n');
    }
    let input = write(&dir, "c.txt", &corpus);
    let csv_path = dir.path().join("dist.csv");
    ok(&["analyze", "dist", "-i", s(&input), "-k", "6", "--csv", s(&csv_path)]);
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header.len(), 9);
    assert_eq!(&header[..3], ["rank", "word", "before"]);
    assert!(header[3..].iter().all(|h| h.starts_with("after_")));
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 50);
    assert!(rows.iter().all(|r| r.len() == 9));
}

#[test]
fn stats_and_slots() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "c.txt", THREE);
    let csv_path = dir.path().join("stats.csv");
    ok(&["analyze", "stats", "-i", s(&input), "--csv", s(&csv_path)]);
    // lengths 4, 4, 2
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(text, "sample_count,total_words,mean,std\n3,10,3.333333,0.942809\n");

    let out = ok(&["analyze", "slots", "-i", s(&input), "-k", "3"]);
    assert!(out.lines().any(|l| l.starts_with("truncation") && l.ends_with("1.000000")));
}

#[test]
fn pos_report_from_pretagged_input() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "c.txt", "the/DT dog/NN runs/VBZ fast/RB\nred/JJ cars/NNS park/VB here/RB\n");
    let csv_path = dir.path().join("pos.csv");
    ok(&[
        "analyze", "pos", "-i", s(&input), "--pretagged", "-k", "2", "--strategies", "syntax,truncation", "--csv",
        s(&csv_path),
    ]);
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "strategy,NN,JJ,VB,OTHER,total,NN_pct,JJ_pct,VB_pct,OTHER_pct");
    assert_eq!(lines[1], "before,2,1,2,3,8,25.00,12.50,25.00,37.50");
    assert_eq!(lines[2], "syntax,2,1,1,0,4,50.00,25.00,25.00,0.00");
    assert_eq!(lines[3], "truncation,2,1,0,1,4,50.00,25.00,0.00,25.00");
}

#[test]
fn env_overrides_default_k() {
    let out = Command::new(env!("CARGO_BIN_EXE_textmask"))
        .args(["demo", "one two three four five"])
        .env("TEXTMASK_K", "2")
        .output()
        .unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    let row = stdout.lines().find_map(|l| l.strip_prefix("truncation")).unwrap();
    assert_eq!(row.trim(), "one two");
}
