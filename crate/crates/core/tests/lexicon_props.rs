use std::path::Path;

use lexpost::lexicon::{bundled_sources, merge_lexica, parse_entries, Lexicon, MergePolicy, Source};
use lexpost::phonology::PhoneInventory;
use proptest::prelude::*;

fn merged_subset(inv: &PhoneInventory, mask: &[bool]) -> (Lexicon, MergePolicy) {
    let policy = MergePolicy::bundled(inv);
    let sources: Vec<_> = bundled_sources(inv)
        .into_iter()
        .map(|src| src.into_iter().enumerate().filter(|(i, _)| mask[i % mask.len()]).map(|(_, e)| e).collect())
        .collect();
    (merge_lexica(&sources, &policy, inv).unwrap(), policy)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn merge_is_idempotent(mask in proptest::collection::vec(any::<bool>(), 1..9)) {
        let inv = PhoneInventory::bundled();
        let (lex, policy) = merged_subset(&inv, &mask);
        let reparsed = parse_entries(&lex.to_tsv(&inv), Path::new("merged.tsv"), Source::Synthetic, &inv).unwrap();
        let again = merge_lexica(&[reparsed], &policy, &inv).unwrap();
        prop_assert_eq!(again.to_tsv(&inv), lex.to_tsv(&inv));
    }

    #[test]
    fn tagged_lookup_is_a_subset(mask in proptest::collection::vec(any::<bool>(), 1..5)) {
        let inv = PhoneInventory::bundled();
        let (lex, _) = merged_subset(&inv, &mask);
        for e in lex.entries() {
            if let Some(tag) = &e.tag {
                let all = lex.lookup(&e.orthography, None).unwrap();
                for t in lex.lookup(&e.orthography, Some(tag)).unwrap() {
                    prop_assert!(all.contains(&t));
                }
            }
        }
    }
}

#[test]
fn bundled_pronunciations_are_lexical() {
    let inv = PhoneInventory::bundled();
    let lex = Lexicon::bundled(&inv);
    assert!(lex.len() >= 500);
    for e in lex.entries() {
        assert!(!e.pronunciation.is_empty());
        for p in &e.pronunciation {
            assert!(inv.phone(p.id).alphabet.is_lexical(), "{} in {}", inv.symbol(p.id), e.orthography);
        }
    }
}

#[test]
fn saved_lexicon_reloads() {
    let inv = PhoneInventory::bundled();
    let lex = Lexicon::bundled(&inv);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lex.tsv");
    lex.save(&path, &inv).unwrap();
    assert_eq!(Lexicon::load(&path, &inv).unwrap(), lex);
}
