use lexpost::alignment::AllophoneTable;
use lexpost::corpus::{bundled_function_words, bundled_prompts, synthesize_corpus, BoundaryKind, Corpus};
use lexpost::evalkit::{bundled_probes, identity_rate, phenomena_probe, prepare_probes};
use lexpost::labels::{self, LabelSet};
use lexpost::lexicon::Lexicon;
use lexpost::phonology::{syllabify, PhoneInventory, SyllablePosition};
use lexpost::postlex::{build_postlex_dataset, chunk_label, ContextSpec, PostlexModel, RuleOracle};
use lexpost::neuralnet::{Activation, Network};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn corpus_with(oracle: &RuleOracle, prompts: usize, seed: u64) -> Corpus {
    let inv = PhoneInventory::bundled();
    let lex = Lexicon::bundled(&inv);
    let sentences: Vec<String> = bundled_prompts().into_iter().take(prompts).collect();
    synthesize_corpus(&inv, &sentences, &lex, &bundled_function_words(), None, oracle, seed).unwrap()
}

#[test]
fn oracle_is_deterministic_and_idempotent() {
    let inv = PhoneInventory::bundled();
    let oracle = RuleOracle::bundled(&inv);
    assert!(oracle.is_deterministic());
    let corpus = corpus_with(&oracle, 120, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for u in &corpus.utterances {
        let once = oracle.apply(&inv, u, &mut rng).unwrap();
        assert_eq!(&once, u);
        assert_eq!(oracle.apply(&inv, &once, &mut rng).unwrap(), once);
    }
}

#[test]
fn oracle_passes_every_probe() {
    let inv = PhoneInventory::bundled();
    let oracle = RuleOracle::bundled(&inv);
    let lex = Lexicon::bundled(&inv);
    let prepared = prepare_probes(&bundled_probes(), &lex, &bundled_function_words()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let report = phenomena_probe(&inv, &prepared, |u| oracle.chunks(&inv, u, &mut rng));
    assert_eq!(report.passed(), 15, "{report}");
}

#[test]
fn dataset_labels_round_trip() {
    let inv = PhoneInventory::bundled();
    let allo = AllophoneTable::bundled(&inv);
    let corpus = corpus_with(&RuleOracle::bundled(&inv), 100, 3);
    let data = build_postlex_dataset(&inv, &allo, &corpus.utterances, &ContextSpec::new(&inv)).unwrap();
    let set = data.label_set(&inv);
    set.validate().unwrap();
    for e in &data.examples {
        let label = chunk_label(&inv, &e.chunk);
        let idx = set.encode(&label).unwrap();
        assert_eq!(set.decode(idx).unwrap(), label);
        let back: Vec<_> = labels::split(&label).iter().map(|s| inv.id(s).unwrap()).collect();
        assert_eq!(back, e.chunk);
    }
}

#[test]
fn only_unreleased_coda_rule_matches_independent_count() {
    let inv = PhoneInventory::bundled();
    let allo = AllophoneTable::bundled(&inv);
    let mut oracle = RuleOracle::bundled(&inv);
    oracle.enable_only(&["R1"]);
    let corpus = corpus_with(&oracle, 200, 11);
    let stop = inv.feature_index("stop").unwrap();
    let syllabic = inv.feature_index("syllabic").unwrap();
    let mut total = 0usize;
    let mut changed = 0usize;
    for u in &corpus.utterances {
        let flat: Vec<_> = u.words.iter().flat_map(|w| w.lexical.iter().map(|p| p.id)).collect();
        let mut k = 0;
        for (wi, w) in u.words.iter().enumerate() {
            let slots = syllabify(&inv, &w.lexical);
            let phrase_final = u.boundary_distance(BoundaryKind::Phrase, wi).1 == 0;
            for (pi, p) in w.lexical.iter().enumerate() {
                total += 1;
                let coda = slots[pi].position == SyllablePosition::Coda;
                let next_consonant = flat.get(k + 1).is_some_and(|&n| !inv.features(n).get(syllabic));
                let final_pause = pi + 1 == w.lexical.len() && phrase_final;
                if inv.features(p.id).get(stop) && coda && (next_consonant || final_pause) {
                    changed += 1;
                }
                k += 1;
            }
        }
    }
    assert!(changed > 0);
    let expected = 1.0 - changed as f64 / total as f64;
    let got = identity_rate(&inv, &allo, &corpus.utterances).unwrap();
    assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
}

fn random_model(inv: &PhoneInventory, seed: u64, labels: &LabelSet) -> PostlexModel {
    let spec = ContextSpec::with_window(inv, 3);
    let network = Network::new(spec.width(), &[8], labels.len(), Activation::Sigmoid, seed).unwrap();
    PostlexModel { network, spec, labels: labels.clone() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn output_length_follows_chunk_arithmetic(seed in any::<u64>(), utt in 0usize..40) {
        let inv = PhoneInventory::bundled();
        let labels = LabelSet::new(["_", "t", "tcl+t", "dx", "q+ah", "ax"].map(String::from));
        let model = random_model(&inv, seed, &labels);
        let corpus = corpus_with(&RuleOracle::bundled(&inv), 40, 2);
        let u = &corpus.utterances[utt];
        let chunks = model.predict_chunks(&inv, u).unwrap();
        let lexical = u.lexical_phone_count();
        prop_assert_eq!(chunks.len(), lexical);
        let deletions = chunks.iter().filter(|c| c.is_empty()).count();
        let insertions: usize = chunks.iter().map(|c| c.len().saturating_sub(1)).sum();
        let out = model.postlexicalize(&inv, u).unwrap();
        prop_assert_eq!(out.len(), lexical - deletions + insertions);
        for p in out {
            prop_assert!(inv.phone(p).alphabet.is_postlexical());
        }
    }
}
