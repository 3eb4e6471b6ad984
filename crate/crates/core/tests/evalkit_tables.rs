mod common;

use common::tables::fixture_utterances;
use lexpost::alignment::AllophoneTable;
use lexpost::evalkit::{aligned_phones, exact_match_rate, identity_rate, realization_table, AlignedPhone};
use lexpost::phonology::PhoneInventory;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn table_of_d_counts() {
    let inv = PhoneInventory::bundled();
    let allo = AllophoneTable::bundled(&inv);
    let aligned = aligned_phones(&inv, &allo, &fixture_utterances(&inv, "table_d.tsv")).unwrap();
    let t = realization_table(&inv, &aligned, "d").unwrap();
    let counts: Vec<usize> = t.rows.iter().map(|(_, n)| *n).collect();
    assert_eq!(counts, [51, 14, 12, 12, 14]);
    assert_eq!((t.other, t.total), (24, 127));
    assert_eq!(t.percents(), [40, 11, 9, 9, 11, 19]);
    assert_eq!(counts.iter().sum::<usize>() + t.other, t.total);
}

#[test]
fn table_of_t_counts() {
    let inv = PhoneInventory::bundled();
    let allo = AllophoneTable::bundled(&inv);
    let aligned = aligned_phones(&inv, &allo, &fixture_utterances(&inv, "table_t.tsv")).unwrap();
    let t = realization_table(&inv, &aligned, "t").unwrap();
    let names: Vec<&str> = t.rows.iter().map(|(c, _)| c.as_str()).collect();
    assert_eq!(names, ["closure + release", "closure only", "release only", "flap", "glottal stop", "deleted"]);
    let counts: Vec<usize> = t.rows.iter().map(|(_, n)| *n).collect();
    assert_eq!(counts, [68, 26, 12, 4, 8, 7]);
    assert_eq!((t.other, t.total), (1, 126));
    assert_eq!(t.percents(), [54, 21, 10, 3, 6, 6, 1]);
}

#[test]
fn identity_rate_of_seventy_in_a_hundred() {
    let inv = PhoneInventory::bundled();
    let allo = AllophoneTable::bundled(&inv);
    let t = fixture_utterances(&inv, "table_t.tsv");
    let d = fixture_utterances(&inv, "table_d.tsv");
    // 50 two-phone words: every vowel survives, 20 stops are released alone
    let mut utts = t[94..106].to_vec();
    utts.extend(d[65..73].iter().cloned());
    utts.extend(t[..30].iter().cloned());
    assert_eq!(utts.len(), 50);
    assert_eq!(identity_rate(&inv, &allo, &utts).unwrap(), 0.70);
}

fn chunk() -> impl Strategy<Value = Vec<u16>> {
    proptest::collection::vec(0u16..4, 0..3)
}

proptest! {
    #[test]
    fn exact_match_equals_recount(pairs in proptest::collection::vec((chunk(), chunk()), 1..40)) {
        let (pred, gold): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let mut hits = 0;
        for i in 0..gold.len() {
            if pred[i] == gold[i] {
                hits += 1;
            }
        }
        let rate = exact_match_rate(&pred, &gold).unwrap();
        prop_assert!((0.0..=1.0).contains(&rate));
        prop_assert_eq!(rate, hits as f64 / gold.len() as f64);
    }

    #[test]
    fn tables_ignore_utterance_order(seed in any::<u64>()) {
        let inv = PhoneInventory::bundled();
        let allo = AllophoneTable::bundled(&inv);
        let mut utts = fixture_utterances(&inv, "table_d.tsv");
        let base = realization_table(&inv, &aligned_phones(&inv, &allo, &utts).unwrap(), "d").unwrap();
        utts.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let shuffled = realization_table(&inv, &aligned_phones(&inv, &allo, &utts).unwrap(), "d").unwrap();
        prop_assert_eq!(base, shuffled);
    }

    #[test]
    fn identity_rate_equals_recount(picks in proptest::collection::vec(0usize..127, 1..30)) {
        let inv = PhoneInventory::bundled();
        let allo = AllophoneTable::bundled(&inv);
        let all = fixture_utterances(&inv, "table_d.tsv");
        let utts: Vec<_> = picks.iter().map(|&i| all[i].clone()).collect();
        let mut ident = 0;
        let mut total = 0;
        for u in &utts {
            let lex: Vec<&str> = u.words[0].lexical.iter().map(|p| inv.symbol(p.id)).collect();
            let post = inv.format(&u.words[0].postlex);
            // the vowel always survives; the stop is identical only when released alone
            total += lex.len();
            ident += 1 + usize::from(post == "ae d");
        }
        let rate = identity_rate(&inv, &allo, &utts).unwrap();
        prop_assert!((0.0..=1.0).contains(&rate));
        prop_assert_eq!(rate, ident as f64 / total as f64);
    }
}

#[test]
fn aligned_phone_identity() {
    let inv = PhoneInventory::bundled();
    let t = inv.id("t").unwrap();
    assert!(AlignedPhone { lexical: t, chunk: vec![t] }.is_identity());
    assert!(!AlignedPhone { lexical: t, chunk: vec![] }.is_identity());
}
