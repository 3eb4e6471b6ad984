//! Per-phone context of a lexical phone within its utterance, and the
//! fixed-width input encoding built from it.

use serde::{Deserialize, Serialize};

use crate::corpus::{BoundaryKind, Utterance, WordType};
use crate::error::{Error, Result};
use crate::phonology::{syllabify, PhoneId, PhoneInventory, SyllablePosition};

/// Everything the rules and the classifier know about one lexical phone
/// besides the identities of its neighbours.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhoneContext {
    /// Phones between this one and the word's left edge.
    pub word_left: usize,
    pub word_right: usize,
    /// Words between this word and the phrase edges.
    pub phrase_left: usize,
    pub phrase_right: usize,
    pub clause_left: usize,
    pub clause_right: usize,
    pub sentence_left: usize,
    pub sentence_right: usize,
    /// Stress of the syllable containing the phone.
    pub stress: Option<u8>,
    pub syllable: SyllablePosition,
    pub word_type: WordType,
    pub prominence: u8,
}

/// One lexical phone of an utterance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Site {
    pub word: usize,
    pub phone: usize,
    pub id: PhoneId,
    pub context: PhoneContext,
}

/// The lexical phones of an utterance, flattened across words.
#[derive(Clone, Debug)]
pub struct Frame {
    pub sites: Vec<Site>,
    word_start: Vec<usize>,
}

impl Frame {
    pub fn new(inventory: &PhoneInventory, utt: &Utterance) -> Self {
        let mut sites = Vec::with_capacity(utt.lexical_phone_count());
        let mut word_start = Vec::with_capacity(utt.words.len());
        for (w, word) in utt.words.iter().enumerate() {
            word_start.push(sites.len());
            let syl = syllabify(inventory, &word.lexical);
            let (pl, pr) = utt.boundary_distance(BoundaryKind::Phrase, w);
            let (cl, cr) = utt.boundary_distance(BoundaryKind::Clause, w);
            let (sl, sr) = utt.boundary_distance(BoundaryKind::Sentence, w);
            let n = word.lexical.len();
            for (p, lp) in word.lexical.iter().enumerate() {
                sites.push(Site {
                    word: w,
                    phone: p,
                    id: lp.id,
                    context: PhoneContext {
                        word_left: p,
                        word_right: n - 1 - p,
                        phrase_left: pl,
                        phrase_right: pr,
                        clause_left: cl,
                        clause_right: cr,
                        sentence_left: sl,
                        sentence_right: sr,
                        stress: syl[p].stress,
                        syllable: syl[p].position,
                        word_type: word.word_type,
                        prominence: word.prominence,
                    },
                });
            }
        }
        Frame { sites, word_start }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Flat position of phone `phone` of word `word`.
    pub fn index(&self, utt: &Utterance, word: usize, phone: usize) -> Result<usize> {
        let w = utt
            .words
            .get(word)
            .ok_or_else(|| Error::IndexOutOfRange(format!("word {word} of {} in {}", utt.words.len(), utt.id)))?;
        if phone >= w.lexical.len() {
            return Err(Error::IndexOutOfRange(format!("phone {phone} of {} in word {word}", w.lexical.len())));
        }
        Ok(self.word_start[word] + phone)
    }

    /// The phone `offset` positions away from `i`, or `None` past an edge.
    pub fn neighbour(&self, i: usize, offset: isize) -> Option<PhoneId> {
        let j = i as isize + offset;
        (j >= 0 && (j as usize) < self.sites.len()).then(|| self.sites[j as usize].id)
    }
}

/// Layout of the classifier input.
///
/// Each window slot holds a phone one-hot over the whole inventory, one bit
/// marking a slot beyond the utterance edge, and the phone's features. The
/// context block follows: eight boundary distances one-hot over
/// `0..=distance_cap` (the cap doubles as overflow), then stress
/// (0, 1, 2, none), syllable position, word type and prominence (0, 1, 2+).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextSpec {
    pub window: usize,
    pub distance_cap: usize,
    pub inventory_size: usize,
    pub feature_count: usize,
}

impl ContextSpec {
    pub const DEFAULT_WINDOW: usize = 9;
    pub const DEFAULT_DISTANCE_CAP: usize = 7;

    pub fn new(inventory: &PhoneInventory) -> Self {
        Self::with_window(inventory, Self::DEFAULT_WINDOW)
    }

    pub fn with_window(inventory: &PhoneInventory, window: usize) -> Self {
        ContextSpec {
            window,
            distance_cap: Self::DEFAULT_DISTANCE_CAP,
            inventory_size: inventory.len(),
            feature_count: inventory.feature_count(),
        }
    }

    pub fn validate(&self, inventory: &PhoneInventory) -> Result<()> {
        if self.window.is_multiple_of(2) {
            return Err(Error::Invalid(format!("window {} must be odd", self.window)));
        }
        if self.inventory_size != inventory.len() || self.feature_count != inventory.feature_count() {
            return Err(Error::Model(format!(
                "encoder expects {} phones and {} features, inventory has {} and {}",
                self.inventory_size,
                self.feature_count,
                inventory.len(),
                inventory.feature_count()
            )));
        }
        Ok(())
    }

    pub fn slot_width(&self) -> usize {
        self.inventory_size + 1 + self.feature_count
    }

    pub fn context_width(&self) -> usize {
        8 * (self.distance_cap + 1) + 4 + 3 + 2 + 3
    }

    pub fn width(&self) -> usize {
        self.window * self.slot_width() + self.context_width()
    }

    /// Encode flat position `i` of `frame`.
    pub fn encode(&self, inventory: &PhoneInventory, frame: &Frame, i: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.width()];
        let half = (self.window / 2) as isize;
        for (slot, offset) in (-half..=half).enumerate() {
            let base = slot * self.slot_width();
            match frame.neighbour(i, offset) {
                Some(id) => {
                    x[base + id.index()] = 1.0;
                    for f in inventory.features(id).indices() {
                        x[base + self.inventory_size + 1 + f] = 1.0;
                    }
                }
                None => x[base + self.inventory_size] = 1.0,
            }
        }
        let c = &frame.sites[i].context;
        let mut at = self.window * self.slot_width();
        let cap = self.distance_cap;
        for d in [
            c.word_left,
            c.word_right,
            c.phrase_left,
            c.phrase_right,
            c.clause_left,
            c.clause_right,
            c.sentence_left,
            c.sentence_right,
        ] {
            x[at + d.min(cap)] = 1.0;
            at += cap + 1;
        }
        x[at + c.stress.map_or(3, |s| s.min(2) as usize)] = 1.0;
        at += 4;
        x[at + match c.syllable {
            SyllablePosition::Onset => 0,
            SyllablePosition::Nucleus => 1,
            SyllablePosition::Coda => 2,
        }] = 1.0;
        at += 3;
        x[at + usize::from(c.word_type == WordType::Content)] = 1.0;
        at += 2;
        x[at + c.prominence.min(2) as usize] = 1.0;
        x
    }
}

/// Input vector for phone `phone` of word `word`.
pub fn encode_context(inventory: &PhoneInventory, utt: &Utterance, word: usize, phone: usize, spec: &ContextSpec) -> Result<Vec<f64>> {
    let frame = Frame::new(inventory, utt);
    let i = frame.index(utt, word, phone)?;
    Ok(spec.encode(inventory, &frame, i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::WordToken;

    fn utt(inv: &PhoneInventory, words: &[(&str, &str)]) -> Utterance {
        let toks = words
            .iter()
            .map(|(o, p)| WordToken {
                orthography: o.to_string(),
                tag: None,
                lexical: inv.parse_lexical(p).unwrap(),
                postlex: Vec::new(),
                word_type: WordType::Content,
                prominence: 1,
            })
            .collect();
        Utterance::new("t", toks)
    }

    #[test]
    fn initial_phone_has_four_left_sentinels() {
        let inv = PhoneInventory::bundled();
        let u = utt(&inv, &[("abrupt", "ah0 b r ah1 p t"), ("start", "s t aa1 r t")]);
        let spec = ContextSpec::new(&inv);
        let x = encode_context(&inv, &u, 0, 0, &spec).unwrap();
        let sw = spec.slot_width();
        for slot in 0..4 {
            assert_eq!(x[slot * sw + inv.len()], 1.0, "slot {slot}");
        }
        assert_eq!(x[4 * sw + inv.len()], 0.0);
        assert_eq!(x.len(), spec.width());
    }

    #[test]
    fn final_t_of_start_is_at_right_edges() {
        let inv = PhoneInventory::bundled();
        let u = utt(&inv, &[("abrupt", "ah0 b r ah1 p t"), ("start", "s t aa1 r t")]);
        let f = Frame::new(&inv, &u);
        let i = f.index(&u, 1, 4).unwrap();
        let c = f.sites[i].context;
        assert_eq!((c.word_right, c.sentence_right, c.phrase_right), (0, 0, 0));
        assert_eq!(c.word_left, 4);
        assert_eq!(c.syllable, SyllablePosition::Coda);
        assert!(encode_context(&inv, &u, 1, 5, &ContextSpec::new(&inv)).is_err());
        assert!(encode_context(&inv, &u, 2, 0, &ContextSpec::new(&inv)).is_err());
    }

    #[test]
    fn width_is_fixed() {
        let inv = PhoneInventory::bundled();
        let spec = ContextSpec::new(&inv);
        assert_eq!(spec.width(), 9 * (inv.len() + 1 + inv.feature_count()) + spec.context_width());
        let u = utt(&inv, &[("a", "ah0"), ("cat", "k ae1 t")]);
        let f = Frame::new(&inv, &u);
        for i in 0..f.len() {
            let x = spec.encode(&inv, &f, i);
            assert_eq!(x.len(), spec.width());
            // exactly one hot per distance group and per categorical group
            let ctx = &x[9 * spec.slot_width()..];
            assert_eq!(ctx.iter().filter(|&&v| v == 1.0).count(), 8 + 4);
        }
    }
}
