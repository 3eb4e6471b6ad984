//! Realization-table fixtures as single-word utterances.

use std::path::Path;

use lexpost::corpus::{Utterance, WordToken, WordType};
use lexpost::phonology::PhoneInventory;

pub fn fixture_utterances(inv: &PhoneInventory, name: &str) -> Vec<Utterance> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    let text = std::fs::read_to_string(path).unwrap();
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.is_empty()) {
        let f: Vec<&str> = line.split('\t').collect();
        let n: usize = f[2].parse().unwrap();
        for _ in 0..n {
            let word = WordToken {
                orthography: "x".into(),
                tag: None,
                lexical: inv.parse_lexical(f[0]).unwrap(),
                postlex: inv.parse_postlexical(f[1]).unwrap(),
                word_type: WordType::Content,
                prominence: 2,
            };
            out.push(Utterance::new(format!("u{}", out.len()), vec![word]));
        }
    }
    out
}
