use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lexpost::corpus::{save_corpus, Corpus, Utterance, WordToken, WordType};
use lexpost::phonology::PhoneInventory;

fn lexpost(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lexpost")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_dir_sorted(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files.into_iter().map(|p| (p.file_name().unwrap().into(), std::fs::read(&p).unwrap())).collect()
}

#[test]
fn every_subcommand_has_help() {
    for args in [
        &["--help"][..],
        &["lexicon", "build", "--help"],
        &["lexicon", "lookup", "--help"],
        &["align", "--help"],
        &["g2p", "train", "--help"],
        &["g2p", "predict", "--help"],
        &["postlex", "train", "--help"],
        &["postlex", "predict", "--help"],
        &["corpus", "synth", "--help"],
        &["eval", "--help"],
    ] {
        let o = lexpost(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}");
        assert!(stdout(&o).contains("Usage"), "{args:?}");
    }
}

#[test]
fn usage_errors_exit_two() {
    let o = lexpost(&["align", "--mode", "sideways", "--src", "a", "--dst", "b"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).lines().any(|l| l.starts_with("ERR usage ")));
    let o = lexpost(&["eval", "--metric", "loudness"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("ERR usage unknown metric"));
}

#[test]
fn runtime_errors_exit_one_with_code() {
    let o = lexpost(&["lexicon", "lookup", "--word", "qxzv"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr(&o).trim(), "ERR not-found `qxzv` not found");
    let o = lexpost(&["lexicon", "lookup", "--lex", "/no/such/lex.tsv", "--word", "cat"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("ERR missing-file lexicon"));
    let o = lexpost(&["align", "--mode", "postlex", "--src", "k zz t", "--dst", "k t"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("ERR unknown-symbol "));
}

#[test]
fn lookup_prints_entries() {
    let o = lexpost(&["lexicon", "lookup", "--word", "cat"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "cat\t\tk ae1 t\n");
}

#[test]
fn abrupt_alignment_shows_deletion() {
    let o = lexpost(&["align", "--mode", "postlex", "--src", "ah0 b r ah1 p t", "--dst", "ax bcl b r ah pcl"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.starts_with("del\tt\t-\t")), "{out}");
    assert!(out.lines().any(|l| l == "chunk\tb\tbcl+b"), "{out}");
    assert!(out.lines().any(|l| l == "chunk\tt\t_"), "{out}");
    let cost: f64 = out.lines().find_map(|l| l.strip_prefix("cost=")).unwrap().parse().unwrap();
    let steps: f64 = out.lines().skip(1).filter_map(|l| l.split('\t').nth(3)).map(|c| c.parse::<f64>().unwrap()).sum();
    assert!((cost - steps).abs() < 1e-9);
}

fn fixture_corpus(dir: &Path) {
    let inv = PhoneInventory::bundled();
    let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/table_d.tsv")).unwrap();
    let mut utts = Vec::new();
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        let f: Vec<&str> = line.split('\t').collect();
        for _ in 0..f[2].parse::<usize>().unwrap() {
            let w = WordToken {
                orthography: "add".into(),
                tag: None,
                lexical: inv.parse_lexical(f[0]).unwrap(),
                postlex: inv.parse_postlexical(f[1]).unwrap(),
                word_type: WordType::Content,
                prominence: 2,
            };
            utts.push(Utterance::new(format!("u{:03}", utts.len()), vec![w]));
        }
    }
    save_corpus(&Corpus::new(utts), dir, &inv).unwrap();
}

#[test]
fn table_of_d_on_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    fixture_corpus(tmp.path());
    let o = lexpost(&["eval", "--metric", "table:/d/", "--corpus", s(tmp.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let row = |name: &str| -> Vec<String> {
        let line = out.lines().find(|l| l.starts_with(name)).unwrap();
        line[name.len()..].split_whitespace().map(String::from).collect()
    };
    assert!(out.starts_with("Realization of /d/"));
    assert_eq!(row("closure + release"), ["51", "40"]);
    assert_eq!(row("closure only"), ["14", "11"]);
    assert_eq!(row("release only"), ["12", "9"]);
    assert_eq!(row("flap"), ["12", "9"]);
    assert_eq!(row("deleted"), ["14", "11"]);
    assert_eq!(row("total"), ["127"]);
}

#[test]
fn synthesis_is_reproducible_and_manifested() {
    let tmp = tempfile::tempdir().unwrap();
    let prompts = tmp.path().join("prompts.txt");
    std::fs::write(&prompts, "# two prompts\nThe muddy hat helped his pin.\nWhy did they meet that wheel?\n").unwrap();
    let run = |name: &str, seed: &str| {
        let out = tmp.path().join(name);
        let o = lexpost(&["corpus", "synth", "--prompts", s(&prompts), "--seed", seed, "--out", s(&out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains("utterances=2\n"));
        out
    };
    let a = run("a", "4");
    let b = run("b", "4");
    let strip = |files: Vec<(PathBuf, Vec<u8>)>| -> Vec<(PathBuf, Vec<u8>)> {
        files.into_iter().filter(|(n, _)| n != Path::new("run.manifest")).collect()
    };
    assert_eq!(strip(read_dir_sorted(&a)), strip(read_dir_sorted(&b)));
    let manifest = std::fs::read_to_string(a.join("run.manifest")).unwrap();
    assert!(manifest.lines().all(|l| l.contains('=')));
    assert!(manifest.contains("seed=4\n"));
    assert!(manifest.contains("rules=bundled\n"));
    let o = lexpost(&["eval", "--metric", "identity", "--corpus", s(&a)]);
    assert!(stdout(&o).starts_with("identity_rate=0."));
}

#[test]
fn lexicon_build_records_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("lex.tsv");
    let o = lexpost(&["lexicon", "build", "--seed", "3", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# command=lexicon build\n"));
    assert!(text.contains("# seed=3\n"));
    let o = lexpost(&["lexicon", "lookup", "--lex", s(&out), "--word", "cat"]);
    assert_eq!(stdout(&o), "cat\t\tk ae1 t\n");
}

#[test]
fn g2p_train_and_predict_with_config_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("run.toml");
    std::fs::write(&config, "seed = 11\n[g2p]\nepochs = 80\nwindow = 9\n").unwrap();
    let train = |name: &str| {
        let dir = tmp.path().join(name);
        let o = lexpost(&["g2p", "train", "--config", s(&config), "--seed", "5", "--out", s(&dir)]);
        assert!(o.status.success(), "{}", stderr(&o));
        dir
    };
    let a = train("a");
    let manifest = std::fs::read_to_string(a.join("run.manifest")).unwrap();
    assert!(manifest.contains("seed=5\n"), "{manifest}");
    assert!(manifest.contains("g2p.epochs=80\n"));
    assert!(manifest.contains("g2p.window=9\n"));
    assert!(manifest.contains("g2p.learning_rate=0.3\n"));

    let o = lexpost(&["g2p", "predict", "--model", s(&a), "--word", "cat"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "k ae t\n");

    let b = train("b");
    let names_a: Vec<_> = read_dir_sorted(&a).into_iter().filter(|(n, _)| n != Path::new("run.manifest")).collect();
    let names_b: Vec<_> = read_dir_sorted(&b).into_iter().filter(|(n, _)| n != Path::new("run.manifest")).collect();
    assert_eq!(names_a, names_b);
}
