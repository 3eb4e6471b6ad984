//! Lexical to postlexical conversion: dataset construction from aligned
//! tiers, training, and inference.

pub mod context;
pub mod rules;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use context::{encode_context, ContextSpec, Frame, PhoneContext, Site};
pub use rules::{Rule, RuleOracle};

use crate::alignment::{AllophoneTable, LexPostlexCost};
use crate::corpus::Utterance;
use crate::error::{Error, Result};
use crate::labels::{self, LabelSet};
use crate::neuralnet::{train_epochs, Hyperparams, Network, TrainingExample};
use crate::phonology::{PhoneId, PhoneInventory};

/// One lexical phone with its encoded context and aligned surface chunk.
#[derive(Clone, Debug, PartialEq)]
pub struct PostlexExample {
    pub utterance: usize,
    pub word: usize,
    pub phone: usize,
    pub input: Vec<f64>,
    pub chunk: Vec<PhoneId>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PostlexDataset {
    pub examples: Vec<PostlexExample>,
    /// Word tokens dropped because a lexical phone owned too many symbols.
    pub skipped_tokens: usize,
}

impl PostlexDataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Labels of every chunk in the dataset.
    pub fn label_set(&self, inventory: &PhoneInventory) -> LabelSet {
        LabelSet::new(self.examples.iter().map(|e| chunk_label(inventory, &e.chunk)))
    }
}

pub fn chunk_label(inventory: &PhoneInventory, chunk: &[PhoneId]) -> String {
    let symbols: Vec<&str> = chunk.iter().map(|&p| inventory.symbol(p)).collect();
    labels::join(&symbols)
}

/// Align every word token's lexical and postlexical tiers and emit one
/// example per lexical phone.
pub fn build_postlex_dataset<'a>(
    inventory: &PhoneInventory,
    allophones: &AllophoneTable,
    utterances: impl IntoIterator<Item = &'a Utterance>,
    spec: &ContextSpec,
) -> Result<PostlexDataset> {
    spec.validate(inventory)?;
    let cost = LexPostlexCost::new(inventory, allophones);
    let mut out = PostlexDataset::default();
    for (u, utt) in utterances.into_iter().enumerate() {
        let frame = Frame::new(inventory, utt);
        for (w, word) in utt.words.iter().enumerate() {
            let lex: Vec<PhoneId> = word.lexical.iter().map(|p| p.id).collect();
            let chunks = match cost.align_and_chunk(&lex, &word.postlex) {
                Ok((_, chunks)) => chunks,
                Err(Error::OverfullChunk { .. }) => {
                    out.skipped_tokens += 1;
                    continue;
                }
                Err(e) => return Err(e.at(format!("{} word {w}", utt.id))),
            };
            for c in chunks {
                let i = frame.index(utt, w, c.src)?;
                out.examples.push(PostlexExample {
                    utterance: u,
                    word: w,
                    phone: c.src,
                    input: spec.encode(inventory, &frame, i),
                    chunk: c.dst.iter().map(|&d| word.postlex[d]).collect(),
                });
            }
        }
    }
    Ok(out)
}

/// A trained lexical to postlexical classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct PostlexModel {
    pub network: Network,
    pub spec: ContextSpec,
    pub labels: LabelSet,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sidecar {
    kind: String,
    seed: u64,
    spec: ContextSpec,
    labels: LabelSet,
}

const NETWORK_FILE: &str = "network.bin";
const SIDECAR_FILE: &str = "meta.json";

/// Train a classifier on `dataset`. Returns the model and its loss curve.
pub fn train_postlex(
    inventory: &PhoneInventory,
    dataset: &PostlexDataset,
    spec: &ContextSpec,
    hyper: &Hyperparams,
) -> Result<(PostlexModel, Vec<f64>)> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let labels = dataset.label_set(inventory);
    let data = dataset
        .examples
        .iter()
        .map(|e| {
            Ok(TrainingExample { input: e.input.clone(), label: labels.encode(&chunk_label(inventory, &e.chunk))? })
        })
        .collect::<Result<Vec<_>>>()?;
    let net = Network::new(spec.width(), &hyper.hidden, labels.len(), hyper.activation, hyper.seed)?;
    let (network, curve) = train_epochs(net, &data, hyper)?;
    Ok((PostlexModel { network, spec: spec.clone(), labels }, curve))
}

impl PostlexModel {
    fn check(&self, inventory: &PhoneInventory) -> Result<()> {
        self.spec.validate(inventory)?;
        self.labels.validate()?;
        if self.network.input_width() != self.spec.width() {
            return Err(Error::DimensionMismatch { expected: self.spec.width(), actual: self.network.input_width() });
        }
        if self.network.output_width() != self.labels.len() {
            return Err(Error::DimensionMismatch { expected: self.labels.len(), actual: self.network.output_width() });
        }
        for l in self.labels.labels() {
            self.decode_label(inventory, l)?;
        }
        Ok(())
    }

    fn decode_label(&self, inventory: &PhoneInventory, label: &str) -> Result<Vec<PhoneId>> {
        labels::split(label)
            .into_iter()
            .map(|s| {
                let id = inventory.id(s)?;
                if !inventory.phone(id).alphabet.is_postlexical() {
                    return Err(Error::Model(format!("label symbol `{s}` is not a postlexical phone")));
                }
                Ok(id)
            })
            .collect()
    }

    /// Chunk predicted for one encoded input.
    pub fn predict_input(&self, inventory: &PhoneInventory, input: &[f64]) -> Result<Vec<PhoneId>> {
        let k = self.network.predict(input)?;
        self.decode_label(inventory, self.labels.decode(k)?)
    }

    /// Predicted chunk for every lexical phone of `utt`, in order.
    pub fn predict_chunks(&self, inventory: &PhoneInventory, utt: &Utterance) -> Result<Vec<Vec<PhoneId>>> {
        let frame = Frame::new(inventory, utt);
        (0..frame.len()).map(|i| self.predict_input(inventory, &self.spec.encode(inventory, &frame, i))).collect()
    }

    /// Postlexical phone string of `utt`.
    pub fn postlexicalize(&self, inventory: &PhoneInventory, utt: &Utterance) -> Result<Vec<PhoneId>> {
        Ok(self.predict_chunks(inventory, utt)?.into_iter().flatten().collect())
    }

    /// A copy of `utt` with every word's postlexical tier predicted.
    pub fn apply(&self, inventory: &PhoneInventory, utt: &Utterance) -> Result<Utterance> {
        let mut it = self.predict_chunks(inventory, utt)?.into_iter();
        let mut out = utt.clone();
        for w in &mut out.words {
            w.postlex = it.by_ref().take(w.lexical.len()).flatten().collect();
        }
        Ok(out)
    }

    /// Write `network.bin` and `meta.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.network.save(&dir.join(NETWORK_FILE))?;
        let meta = Sidecar {
            kind: "postlex".into(),
            seed: self.network.seed,
            spec: self.spec.clone(),
            labels: self.labels.clone(),
        };
        let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::Model(e.to_string()))?;
        fs::write(dir.join(SIDECAR_FILE), json + "\n")?;
        Ok(())
    }

    pub fn load(dir: &Path, inventory: &PhoneInventory) -> Result<Self> {
        let network = Network::load(&dir.join(NETWORK_FILE))?;
        let text = fs::read_to_string(dir.join(SIDECAR_FILE))?;
        let meta: Sidecar = serde_json::from_str(&text).map_err(|e| Error::Model(format!("{SIDECAR_FILE}: {e}")))?;
        if meta.kind != "postlex" {
            return Err(Error::Model(format!("expected a postlex model, found `{}`", meta.kind)));
        }
        if meta.seed != network.seed {
            return Err(Error::Model(format!("sidecar seed {} differs from network seed {}", meta.seed, network.seed)));
        }
        let model = PostlexModel { network, spec: meta.spec, labels: meta.labels };
        model.check(inventory)?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{WordToken, WordType};
    use crate::neuralnet::Activation;

    fn token(inv: &PhoneInventory, orth: &str, lex: &str, post: &str, word_type: WordType) -> WordToken {
        WordToken {
            orthography: orth.into(),
            tag: None,
            lexical: inv.parse_lexical(lex).unwrap(),
            postlex: inv.parse_postlexical(post).unwrap(),
            word_type,
            prominence: 1,
        }
    }

    fn abrupt_start(inv: &PhoneInventory) -> Utterance {
        Utterance::new(
            "u",
            vec![
                token(inv, "abrupt", "ah0 b r ah1 p t", "ah bcl b r ah pcl", WordType::Content),
                token(inv, "start", "s t aa1 r t", "s tcl t aa r tcl", WordType::Content),
            ],
        )
    }

    #[test]
    fn abrupt_final_t_is_deleted() {
        let inv = PhoneInventory::bundled();
        let allo = AllophoneTable::bundled(&inv);
        let u = abrupt_start(&inv);
        let d = build_postlex_dataset(&inv, &allo, [&u], &ContextSpec::new(&inv)).unwrap();
        assert_eq!(d.len(), u.lexical_phone_count());
        let labels: Vec<String> = d.examples.iter().map(|e| chunk_label(&inv, &e.chunk)).collect();
        assert_eq!(labels, ["ah", "bcl+b", "r", "ah", "pcl", "_", "s", "tcl+t", "aa", "r", "tcl"]);
    }

    #[test]
    fn identity_token_labels_equal_lexical_phones() {
        let inv = PhoneInventory::bundled();
        let allo = AllophoneTable::bundled(&inv);
        let u = Utterance::new("u", vec![token(&inv, "fish", "f ih1 sh", "f ih sh", WordType::Content)]);
        let d = build_postlex_dataset(&inv, &allo, [&u], &ContextSpec::new(&inv)).unwrap();
        let labels: Vec<String> = d.examples.iter().map(|e| chunk_label(&inv, &e.chunk)).collect();
        assert_eq!(labels, ["f", "ih", "sh"]);
    }

    #[test]
    fn overfull_token_is_skipped() {
        let inv = PhoneInventory::bundled();
        let allo = AllophoneTable::bundled(&inv);
        let u = Utterance::new(
            "u",
            vec![
                token(&inv, "a", "ah0", "ah s s s", WordType::Function),
                token(&inv, "fish", "f ih1 sh", "f ih sh", WordType::Content),
            ],
        );
        let d = build_postlex_dataset(&inv, &allo, [&u], &ContextSpec::new(&inv)).unwrap();
        assert_eq!(d.skipped_tokens, 1);
        assert_eq!(d.len(), 3);
        assert_eq!(d.examples[0].word, 1);
    }

    #[test]
    fn zero_network_predicts_first_label() {
        let inv = PhoneInventory::bundled();
        let allo = AllophoneTable::bundled(&inv);
        let u = abrupt_start(&inv);
        let spec = ContextSpec::new(&inv);
        let d = build_postlex_dataset(&inv, &allo, [&u], &spec).unwrap();
        let labels = d.label_set(&inv);
        let mut network = Network::new(spec.width(), &[4], labels.len(), Activation::Sigmoid, 1).unwrap();
        for l in &mut network.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
            l.biases.iter_mut().for_each(|b| *b = 0.0);
        }
        let model = PostlexModel { network, spec, labels };
        let first = model.decode_label(&inv, model.labels.decode(0).unwrap()).unwrap();
        for chunk in model.predict_chunks(&inv, &u).unwrap() {
            assert_eq!(chunk, first);
        }
    }

    #[test]
    fn trains_saves_and_reloads() {
        let inv = PhoneInventory::bundled();
        let allo = AllophoneTable::bundled(&inv);
        let u = abrupt_start(&inv);
        let spec = ContextSpec::new(&inv);
        let d = build_postlex_dataset(&inv, &allo, [&u], &spec).unwrap();
        let hyper = Hyperparams { epochs: 300, learning_rate: 0.5, decay: 0.0, batch_size: 4, hidden: vec![16], ..Hyperparams::default() };
        let (model, curve) = train_postlex(&inv, &d, &spec, &hyper).unwrap();
        assert!(curve.last().unwrap() < &curve[0]);
        let pred = model.apply(&inv, &u).unwrap();
        for (p, g) in pred.words.iter().zip(&u.words) {
            assert_eq!(inv.format(&p.postlex), inv.format(&g.postlex));
        }
        let dir = tempfile::tempdir().unwrap();
        model.save(dir.path()).unwrap();
        assert_eq!(PostlexModel::load(dir.path(), &inv).unwrap(), model);
        assert!(matches!(train_postlex(&inv, &PostlexDataset::default(), &spec, &hyper), Err(Error::EmptyDataset)));
    }
}
