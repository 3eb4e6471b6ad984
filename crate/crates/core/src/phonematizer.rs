//! Letter-to-sound conversion for words missing from the lexicon.
//!
//! Letters are aligned with lexical phones, each letter owns a chunk of zero
//! to two phones, and a windowed classifier predicts the chunk of the centre
//! letter. Vowel labels carry their stress digit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::alignment::{align, chunk_by_affinity, LetterPhoneCost};
use crate::corpus::Pronouncer;
use crate::error::{Error, Result};
use crate::labels::{self, LabelSet};
use crate::lexicon::{parse_entries, LexEntry, Lexicon, Source};
use crate::neuralnet::{train_epochs, Hyperparams, Network, TrainingExample};
use crate::phonology::{LetterModels, LexPhone, PhoneInventory};

/// Layout of the letter-window input.
///
/// Each slot holds a one-hot over `letters`, one bit marking a slot beyond
/// the word edge, and the union of the features of the letter's candidate
/// phones.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LetterEncoder {
    pub window: usize,
    pub letters: Vec<char>,
    pub feature_count: usize,
    /// Feature indices per letter, parallel to `letters`.
    pub letter_features: Vec<Vec<usize>>,
}

impl LetterEncoder {
    pub const DEFAULT_WINDOW: usize = 7;

    pub fn new(inventory: &PhoneInventory, letters: &LetterModels, window: usize) -> Result<Self> {
        if window.is_multiple_of(2) {
            return Err(Error::Invalid(format!("window {window} must be odd")));
        }
        let chars: Vec<char> = letters.letters().collect();
        let letter_features = chars
            .iter()
            .map(|&c| Ok(letters.get(c)?.features(inventory).indices().collect()))
            .collect::<Result<_>>()?;
        Ok(LetterEncoder { window, letters: chars, feature_count: inventory.feature_count(), letter_features })
    }

    pub fn slot_width(&self) -> usize {
        self.letters.len() + 1 + self.feature_count
    }

    pub fn width(&self) -> usize {
        self.window * self.slot_width()
    }

    fn letter_index(&self, c: char) -> Result<usize> {
        self.letters.binary_search(&c).map_err(|_| Error::UnsupportedCharacter(c))
    }

    /// Encode the window centred on letter `i` of `word`.
    pub fn encode(&self, word: &[char], i: usize) -> Result<Vec<f64>> {
        if i >= word.len() {
            return Err(Error::IndexOutOfRange(format!("letter {i} of {}", word.len())));
        }
        let mut x = vec![0.0; self.width()];
        let half = (self.window / 2) as isize;
        for (slot, offset) in (-half..=half).enumerate() {
            let base = slot * self.slot_width();
            let j = i as isize + offset;
            if j < 0 || j as usize >= word.len() {
                x[base + self.letters.len()] = 1.0;
                continue;
            }
            let k = self.letter_index(word[j as usize])?;
            x[base + k] = 1.0;
            for &f in &self.letter_features[k] {
                x[base + self.letters.len() + 1 + f] = 1.0;
            }
        }
        Ok(x)
    }

    fn validate(&self, inventory: &PhoneInventory) -> Result<()> {
        if self.window.is_multiple_of(2) {
            return Err(Error::Model(format!("window {} must be odd", self.window)));
        }
        if self.feature_count != inventory.feature_count() {
            return Err(Error::Model(format!(
                "encoder expects {} features, inventory has {}",
                self.feature_count,
                inventory.feature_count()
            )));
        }
        if self.letter_features.len() != self.letters.len() || !self.letters.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Model("malformed letter table".into()));
        }
        if self.letter_features.iter().flatten().any(|&f| f >= self.feature_count) {
            return Err(Error::Model("letter feature index out of range".into()));
        }
        Ok(())
    }
}

/// Lowercase `word` and split it into letters.
pub fn letters_of(word: &str) -> Vec<char> {
    word.chars().flat_map(char::to_lowercase).collect()
}

/// One letter with its window encoding and aligned lexical chunk.
#[derive(Clone, Debug, PartialEq)]
pub struct G2PExample {
    pub orthography: String,
    pub letter: usize,
    pub input: Vec<f64>,
    pub chunk: Vec<LexPhone>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct G2PDataset {
    pub examples: Vec<G2PExample>,
    /// Entries dropped because a letter owned too many phones.
    pub skipped_entries: usize,
}

impl G2PDataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn label_set(&self, inventory: &PhoneInventory) -> LabelSet {
        LabelSet::new(self.examples.iter().map(|e| lex_chunk_label(inventory, &e.chunk)))
    }
}

pub fn lex_chunk_label(inventory: &PhoneInventory, chunk: &[LexPhone]) -> String {
    let tokens: Vec<String> = chunk.iter().map(|&p| inventory.lex_token(p)).collect();
    labels::join(&tokens)
}

/// Letter-to-phone chunks of one word.
pub fn align_word(
    inventory: &PhoneInventory,
    letters: &LetterModels,
    word: &[char],
    pronunciation: &[LexPhone],
) -> Result<Vec<Vec<LexPhone>>> {
    let cost = LetterPhoneCost::new(inventory, letters);
    let src: Vec<String> = word.iter().map(char::to_string).collect();
    let dst: Vec<&str> = pronunciation.iter().map(|p| inventory.symbol(p.id)).collect();
    let a = align(&src, &dst, &cost)?;
    let chunks = chunk_by_affinity(&a, &src, &dst, &cost)?;
    Ok(chunks.into_iter().map(|c| c.dst.iter().map(|&d| pronunciation[d]).collect()).collect())
}

/// One example per letter of `(orthography, pronunciation)` pairs.
pub fn build_g2p_dataset<'a>(
    inventory: &PhoneInventory,
    letters: &LetterModels,
    entries: impl IntoIterator<Item = (&'a str, &'a [LexPhone])>,
    encoder: &LetterEncoder,
) -> Result<G2PDataset> {
    let mut out = G2PDataset::default();
    for (orth, pron) in entries {
        let word = letters_of(orth);
        for &c in &word {
            letters.get(c)?;
        }
        let chunks = match align_word(inventory, letters, &word, pron) {
            Ok(c) => c,
            Err(Error::OverfullChunk { .. }) => {
                out.skipped_entries += 1;
                continue;
            }
            Err(e) => return Err(e.at(orth)),
        };
        for (i, chunk) in chunks.into_iter().enumerate() {
            out.examples.push(G2PExample { orthography: orth.to_string(), letter: i, input: encoder.encode(&word, i)?, chunk });
        }
    }
    Ok(out)
}

/// [`build_g2p_dataset`] over the first pronunciation of every orthography.
pub fn lexicon_dataset(
    inventory: &PhoneInventory,
    letters: &LetterModels,
    lexicon: &Lexicon,
    encoder: &LetterEncoder,
) -> Result<G2PDataset> {
    let entries = lexicon.primary_entries().map(|e| (e.orthography.as_str(), e.pronunciation.as_slice()));
    build_g2p_dataset(inventory, letters, entries, encoder)
}

const BUNDLED_HELDOUT: &str = include_str!("../data/g2p_heldout.tsv");

/// Regular words absent from the bundled lexicon, for held-out evaluation.
pub fn bundled_heldout(inventory: &PhoneInventory) -> Vec<LexEntry> {
    parse_entries(BUNDLED_HELDOUT, Path::new("<bundled>/g2p_heldout.tsv"), Source::Synthetic, inventory)
        .expect("bundled held-out words are valid")
}

/// A trained letter-to-sound classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct G2PModel {
    pub network: Network,
    pub encoder: LetterEncoder,
    pub labels: LabelSet,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sidecar {
    kind: String,
    seed: u64,
    encoder: LetterEncoder,
    labels: LabelSet,
}

const NETWORK_FILE: &str = "network.bin";
const SIDECAR_FILE: &str = "meta.json";

/// Bundled training settings for the letter classifier. Letter data is
/// small, so it trains longer and faster than the phone classifier.
pub fn default_hyperparams() -> Hyperparams {
    Hyperparams { learning_rate: 0.3, epochs: 150, batch_size: 16, ..Hyperparams::default() }
}

pub fn train_phonematizer(
    inventory: &PhoneInventory,
    dataset: &G2PDataset,
    encoder: &LetterEncoder,
    hyper: &Hyperparams,
) -> Result<(G2PModel, Vec<f64>)> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let labels = dataset.label_set(inventory);
    let data = dataset
        .examples
        .iter()
        .map(|e| {
            Ok(TrainingExample { input: e.input.clone(), label: labels.encode(&lex_chunk_label(inventory, &e.chunk))? })
        })
        .collect::<Result<Vec<_>>>()?;
    let net = Network::new(encoder.width(), &hyper.hidden, labels.len(), hyper.activation, hyper.seed)?;
    let (network, curve) = train_epochs(net, &data, hyper)?;
    Ok((G2PModel { network, encoder: encoder.clone(), labels }, curve))
}

impl G2PModel {
    fn decode_label(&self, inventory: &PhoneInventory, label: &str) -> Result<Vec<LexPhone>> {
        labels::split(label)
            .into_iter()
            .map(|t| {
                let p = inventory.parse_lex_token(t)?;
                if !inventory.phone(p.id).alphabet.is_lexical() {
                    return Err(Error::Model(format!("label symbol `{t}` is not a lexical phone")));
                }
                Ok(p)
            })
            .collect()
    }

    /// Chunk predicted for one encoded input.
    pub fn predict_input(&self, inventory: &PhoneInventory, input: &[f64]) -> Result<Vec<LexPhone>> {
        let k = self.network.predict(input)?;
        self.decode_label(inventory, self.labels.decode(k)?)
    }

    /// Predicted chunk for every letter of `word`.
    pub fn predict_chunks(&self, inventory: &PhoneInventory, word: &str) -> Result<Vec<Vec<LexPhone>>> {
        let letters = letters_of(word);
        (0..letters.len()).map(|i| self.predict_input(inventory, &self.encoder.encode(&letters, i)?)).collect()
    }

    /// Lexical pronunciation of `word`.
    pub fn phonematize(&self, inventory: &PhoneInventory, word: &str) -> Result<Vec<LexPhone>> {
        Ok(self.predict_chunks(inventory, word)?.into_iter().flatten().collect())
    }

    /// A [`Pronouncer`] backed by this model.
    pub fn pronouncer<'a>(&'a self, inventory: &'a PhoneInventory) -> Phonematizer<'a> {
        Phonematizer { model: self, inventory }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.network.save(&dir.join(NETWORK_FILE))?;
        let meta = Sidecar {
            kind: "g2p".into(),
            seed: self.network.seed,
            encoder: self.encoder.clone(),
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
        if meta.kind != "g2p" {
            return Err(Error::Model(format!("expected a g2p model, found `{}`", meta.kind)));
        }
        if meta.seed != network.seed {
            return Err(Error::Model(format!("sidecar seed {} differs from network seed {}", meta.seed, network.seed)));
        }
        meta.encoder.validate(inventory)?;
        meta.labels.validate()?;
        let model = G2PModel { network, encoder: meta.encoder, labels: meta.labels };
        if model.network.input_width() != model.encoder.width() {
            return Err(Error::DimensionMismatch { expected: model.encoder.width(), actual: model.network.input_width() });
        }
        if model.network.output_width() != model.labels.len() {
            return Err(Error::DimensionMismatch { expected: model.labels.len(), actual: model.network.output_width() });
        }
        for l in model.labels.labels() {
            model.decode_label(inventory, l)?;
        }
        Ok(model)
    }
}

/// A phonematizer bound to its inventory.
pub struct Phonematizer<'a> {
    model: &'a G2PModel,
    inventory: &'a PhoneInventory,
}

impl Pronouncer for Phonematizer<'_> {
    fn pronounce(&self, orthography: &str) -> Result<Vec<LexPhone>> {
        self.model.phonematize(self.inventory, orthography)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (PhoneInventory, LetterModels) {
        let inv = PhoneInventory::bundled();
        let letters = LetterModels::bundled(&inv);
        (inv, letters)
    }

    fn labels_of(inv: &PhoneInventory, d: &G2PDataset) -> Vec<String> {
        d.examples.iter().map(|e| lex_chunk_label(inv, &e.chunk)).collect()
    }

    #[test]
    fn cat_has_one_phone_per_letter() {
        let (inv, letters) = setup();
        let enc = LetterEncoder::new(&inv, &letters, 7).unwrap();
        let pron = inv.parse_lexical("k ae1 t").unwrap();
        let d = build_g2p_dataset(&inv, &letters, [("cat", pron.as_slice())], &enc).unwrap();
        assert_eq!(labels_of(&inv, &d), ["k", "ae1", "t"]);
    }

    #[test]
    fn box_gives_x_two_phones() {
        let (inv, letters) = setup();
        let enc = LetterEncoder::new(&inv, &letters, 7).unwrap();
        let pron = inv.parse_lexical("b aa1 k s").unwrap();
        let d = build_g2p_dataset(&inv, &letters, [("box", pron.as_slice())], &enc).unwrap();
        assert_eq!(labels_of(&inv, &d), ["b", "aa1", "k+s"]);
    }

    #[test]
    fn one_letter_word_is_padded() {
        let (inv, letters) = setup();
        let enc = LetterEncoder::new(&inv, &letters, 7).unwrap();
        let pron = inv.parse_lexical("ah0").unwrap();
        let d = build_g2p_dataset(&inv, &letters, [("a", pron.as_slice())], &enc).unwrap();
        assert_eq!(d.len(), 1);
        let x = &d.examples[0].input;
        let sw = enc.slot_width();
        for slot in (0..7).filter(|&s| s != 3) {
            assert_eq!(x[slot * sw + enc.letters.len()], 1.0);
        }
        assert_eq!(x[3 * sw + enc.letters.len()], 0.0);
        assert_eq!(x.len(), enc.width());
    }

    #[test]
    fn rejects_even_window_and_unknown_letters() {
        let (inv, letters) = setup();
        assert!(LetterEncoder::new(&inv, &letters, 6).is_err());
        let enc = LetterEncoder::new(&inv, &letters, 7).unwrap();
        let pron = inv.parse_lexical("k ae1 t").unwrap();
        let r = build_g2p_dataset(&inv, &letters, [("c4t", pron.as_slice())], &enc);
        assert!(matches!(r, Err(Error::UnsupportedCharacter('4'))));
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let (inv, letters) = setup();
        let enc = LetterEncoder::new(&inv, &letters, 7).unwrap();
        let r = train_phonematizer(&inv, &G2PDataset::default(), &enc, &Hyperparams::default());
        assert!(matches!(r, Err(Error::EmptyDataset)));
    }

    #[test]
    fn memorizes_and_reloads() {
        let (inv, letters) = setup();
        let enc = LetterEncoder::new(&inv, &letters, 7).unwrap();
        let words = [("cat", "k ae1 t"), ("box", "b aa1 k s"), ("dog", "d ao1 g")];
        let prons: Vec<_> = words.iter().map(|(_, p)| inv.parse_lexical(p).unwrap()).collect();
        let entries = words.iter().zip(&prons).map(|((o, _), p)| (*o, p.as_slice()));
        let d = build_g2p_dataset(&inv, &letters, entries, &enc).unwrap();
        let hyper = Hyperparams { epochs: 300, learning_rate: 0.5, decay: 0.0, batch_size: 2, hidden: vec![16], ..Hyperparams::default() };
        let (model, _) = train_phonematizer(&inv, &d, &enc, &hyper).unwrap();
        for ((o, p), _) in words.iter().zip(&prons) {
            assert_eq!(inv.format_lexical(&model.phonematize(&inv, o).unwrap()), *p);
        }
        assert!(matches!(model.phonematize(&inv, "c-t"), Err(Error::UnsupportedCharacter('-'))));
        let dir = tempfile::tempdir().unwrap();
        model.save(dir.path()).unwrap();
        assert_eq!(G2PModel::load(dir.path(), &inv).unwrap(), model);
        assert_eq!(model.pronouncer(&inv).pronounce("CAT").unwrap(), prons[0]);
    }
}
