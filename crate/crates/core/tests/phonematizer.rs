use std::sync::OnceLock;

use lexpost::lexicon::Lexicon;
use lexpost::neuralnet::Hyperparams;
use lexpost::phonematizer::{build_g2p_dataset, letters_of, lexicon_dataset, train_phonematizer, G2PModel, LetterEncoder};
use lexpost::phonology::{LetterModels, PhoneInventory};
use proptest::prelude::*;

fn small_model() -> &'static (PhoneInventory, G2PModel) {
    static MODEL: OnceLock<(PhoneInventory, G2PModel)> = OnceLock::new();
    MODEL.get_or_init(|| {
        let inv = PhoneInventory::bundled();
        let letters = LetterModels::bundled(&inv);
        let lex = Lexicon::bundled(&inv);
        let enc = LetterEncoder::new(&inv, &letters, 5).unwrap();
        let entries: Vec<_> = lex.primary_entries().take(150).collect();
        let data = build_g2p_dataset(
            &inv,
            &letters,
            entries.iter().map(|e| (e.orthography.as_str(), e.pronunciation.as_slice())),
            &enc,
        )
        .unwrap();
        let hyper = Hyperparams { epochs: 3, ..lexpost::phonematizer::default_hyperparams() };
        let (model, _) = train_phonematizer(&inv, &data, &enc, &hyper).unwrap();
        (inv, model)
    })
}

#[test]
fn dataset_is_deterministic() {
    let inv = PhoneInventory::bundled();
    let letters = LetterModels::bundled(&inv);
    let lex = Lexicon::bundled(&inv);
    let enc = LetterEncoder::new(&inv, &letters, 7).unwrap();
    let a = lexicon_dataset(&inv, &letters, &lex, &enc).unwrap();
    let b = lexicon_dataset(&inv, &letters, &lex, &enc).unwrap();
    assert_eq!(a.len(), b.len());
    assert!(a.examples.iter().zip(&b.examples).all(|(x, y)| x.input == y.input && x.chunk == y.chunk));
    let letters_total: usize = lex
        .primary_entries()
        .map(|e| letters_of(&e.orthography).len())
        .sum();
    assert!(a.len() <= letters_total);
    assert!(a.len() > letters_total * 9 / 10);
}

#[test]
fn novel_word_gets_a_lexical_pronunciation() {
    let (inv, model) = small_model();
    let pron = model.phonematize(inv, "budgeroom").unwrap();
    assert!(!pron.is_empty());
    for p in &pron {
        assert!(inv.phone(p.id).alphabet.is_lexical());
    }
}

#[test]
fn saved_model_predicts_the_same() {
    let (inv, model) = small_model();
    let dir = tempfile::tempdir().unwrap();
    model.save(dir.path()).unwrap();
    let back = G2PModel::load(dir.path(), inv).unwrap();
    for w in ["cat", "thistle", "quorum", "zebra"] {
        assert_eq!(model.phonematize(inv, w).unwrap(), back.phonematize(inv, w).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn output_stays_in_lexical_alphabet(word in "[a-z]{1,12}") {
        let (inv, model) = small_model();
        let chunks = model.predict_chunks(inv, &word).unwrap();
        prop_assert_eq!(chunks.len(), word.len());
        for c in &chunks {
            prop_assert!(c.len() <= 2);
            for p in c {
                prop_assert!(inv.phone(p.id).alphabet.is_lexical());
                prop_assert!(p.stress.is_none() || inv.is_vowel(p.id));
            }
        }
    }
}
