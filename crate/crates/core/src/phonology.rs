//! Phone inventories, articulatory features and letter models.
//!
//! An inventory holds both alphabets: lexical phones (what the lexicon and
//! the phonematizer use) and postlexical phones (what a speaker actually
//! produces). Most symbols belong to both; flaps, closures, the glottal stop,
//! syllabic consonants and reduced vowels are postlexical only.
//!
//! Stress is not a phone feature. Lexical pronunciations carry it as a digit
//! suffixed to vowel symbols (`ae1`), parsed into [`LexPhone`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which alphabet(s) a phone belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Alphabet {
    Lexical,
    Postlexical,
    Both,
}

impl Alphabet {
    pub fn is_lexical(self) -> bool {
        matches!(self, Alphabet::Lexical | Alphabet::Both)
    }

    pub fn is_postlexical(self) -> bool {
        matches!(self, Alphabet::Postlexical | Alphabet::Both)
    }
}

impl FromStr for Alphabet {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "lexical" => Ok(Alphabet::Lexical),
            "postlexical" => Ok(Alphabet::Postlexical),
            "both" => Ok(Alphabet::Both),
            other => Err(format!("unknown alphabet `{other}`")),
        }
    }
}

/// Fixed-length set of binary articulatory features.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureVector {
    bits: u64,
    len: u8,
}

impl FeatureVector {
    pub const MAX_LEN: usize = 64;

    pub fn empty(len: usize) -> Self {
        assert!(len <= Self::MAX_LEN, "at most {} features", Self::MAX_LEN);
        FeatureVector { bits: 0, len: len as u8 }
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::empty(len);
        for i in indices {
            v.set(i);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        i < self.len() && self.bits >> i & 1 == 1
    }

    pub fn set(&mut self, i: usize) {
        assert!(i < self.len(), "feature index {i} out of range");
        self.bits |= 1 << i;
    }

    /// Number of set features.
    pub fn count(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn union(&self, other: &Self) -> Self {
        assert_eq!(self.len, other.len, "feature vectors of different length");
        FeatureVector { bits: self.bits | other.bits, len: self.len }
    }

    /// Number of features set in both vectors.
    pub fn overlap(&self, other: &Self) -> usize {
        (self.bits & other.bits).count_ones() as usize
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.bits & !other.bits == 0
    }

    /// Shared features over features set in either (1.0 for two empty vectors).
    pub fn overlap_fraction(&self, other: &Self) -> f64 {
        let union = (self.bits | other.bits).count_ones();
        if union == 0 {
            1.0
        } else {
            self.overlap(other) as f64 / union as f64
        }
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.get(i))
    }
}

impl fmt::Debug for FeatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len()).map(|i| if self.get(i) { '1' } else { '0' }).collect();
        write!(f, "FeatureVector({s})")
    }
}

/// Index of a phone within its inventory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PhoneId(pub u16);

impl PhoneId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Phone {
    pub symbol: String,
    pub alphabet: Alphabet,
    pub features: FeatureVector,
}

/// Ordered set of phones sharing one feature layout.
#[derive(Clone, Debug)]
pub struct PhoneInventory {
    phones: Vec<Phone>,
    feature_names: Vec<String>,
    by_symbol: HashMap<String, PhoneId>,
}

const BUNDLED_INVENTORY: &str = include_str!("../data/inventory.tsv");
const BUNDLED_LETTERS: &str = include_str!("../data/letters.tsv");

impl PhoneInventory {
    /// The inventory shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_INVENTORY, Path::new("<bundled>/inventory.tsv"))
            .expect("bundled inventory is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut feature_names: Vec<String> = Vec::new();
        let mut rows = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields[0] == "@feature" {
                if fields.len() < 2 || fields[1].is_empty() {
                    return Err(Error::parse(origin, n + 1, "feature declaration without a name"));
                }
                if !rows.is_empty() {
                    return Err(Error::parse(origin, n + 1, "features must be declared before phones"));
                }
                feature_names.push(fields[1].to_string());
                continue;
            }
            if fields.len() != 3 {
                return Err(Error::parse(origin, n + 1, "expected symbol<TAB>alphabet<TAB>features"));
            }
            rows.push((n + 1, fields[0], fields[1], fields[2]));
        }
        if feature_names.len() > FeatureVector::MAX_LEN {
            return Err(Error::parse(origin, 0, "too many features"));
        }
        let feature_index: HashMap<&str, usize> =
            feature_names.iter().enumerate().map(|(i, f)| (f.as_str(), i)).collect();

        let mut phones = Vec::with_capacity(rows.len());
        let mut by_symbol = HashMap::new();
        for (line, symbol, alphabet, features) in rows {
            let alphabet: Alphabet = alphabet.parse().map_err(|e| Error::parse(origin, line, e))?;
            let mut fv = FeatureVector::empty(feature_names.len());
            for name in features.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let i = *feature_index
                    .get(name)
                    .ok_or_else(|| Error::parse(origin, line, format!("unknown feature `{name}`")))?;
                fv.set(i);
            }
            if symbol.is_empty() || symbol.chars().any(|c| c.is_whitespace() || c.is_ascii_digit()) {
                return Err(Error::parse(origin, line, format!("bad phone symbol `{symbol}`")));
            }
            let id = PhoneId(phones.len() as u16);
            if by_symbol.insert(symbol.to_string(), id).is_some() {
                return Err(Error::parse(origin, line, format!("duplicate symbol `{symbol}`")));
            }
            phones.push(Phone { symbol: symbol.to_string(), alphabet, features: fv });
        }
        Ok(PhoneInventory { phones, feature_names, by_symbol })
    }

    pub fn len(&self) -> usize {
        self.phones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phones.is_empty()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_count(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }

    pub fn phones(&self) -> &[Phone] {
        &self.phones
    }

    pub fn ids(&self) -> impl Iterator<Item = PhoneId> {
        (0..self.phones.len() as u16).map(PhoneId)
    }

    pub fn id(&self, symbol: &str) -> Result<PhoneId> {
        self.by_symbol.get(symbol).copied().ok_or_else(|| Error::unknown_symbol(symbol))
    }

    pub fn phone(&self, id: PhoneId) -> &Phone {
        &self.phones[id.index()]
    }

    pub fn symbol(&self, id: PhoneId) -> &str {
        &self.phones[id.index()].symbol
    }

    pub fn features(&self, id: PhoneId) -> &FeatureVector {
        &self.phones[id.index()].features
    }

    /// Feature vector of the phone named `symbol`.
    pub fn phone_features(&self, symbol: &str) -> Result<&FeatureVector> {
        Ok(self.features(self.id(symbol)?))
    }

    /// True when `id` has the named feature. Unknown feature names are false.
    pub fn has(&self, id: PhoneId, feature: &str) -> bool {
        self.feature_index(feature).is_some_and(|i| self.features(id).get(i))
    }

    pub fn is_vowel(&self, id: PhoneId) -> bool {
        self.has(id, "vowel")
    }

    /// Parse whitespace-separated symbols. Errors name the offending token's
    /// position (1-based).
    pub fn parse_phone_string(&self, text: &str) -> Result<Vec<PhoneId>> {
        text.split_whitespace()
            .enumerate()
            .map(|(i, tok)| self.id(tok).map_err(|e| e.at(format!("token {}", i + 1))))
            .collect()
    }

    /// Like [`parse_phone_string`](Self::parse_phone_string) but every symbol
    /// must belong to the postlexical alphabet.
    pub fn parse_postlexical(&self, text: &str) -> Result<Vec<PhoneId>> {
        let ids = self.parse_phone_string(text)?;
        for (i, &id) in ids.iter().enumerate() {
            if !self.phone(id).alphabet.is_postlexical() {
                return Err(Error::unknown_symbol_at(
                    self.symbol(id),
                    format!("token {} (not postlexical)", i + 1),
                ));
            }
        }
        Ok(ids)
    }

    pub fn format(&self, ids: &[PhoneId]) -> String {
        ids.iter().map(|&id| self.symbol(id)).collect::<Vec<_>>().join(" ")
    }

    /// Parse one stress-marked lexical token such as `ae1` or `t`.
    ///
    /// Stressable (vowel) phones need a stress digit; other phones must not
    /// carry one. The symbol must belong to the lexical alphabet.
    pub fn parse_lex_token(&self, token: &str) -> Result<LexPhone> {
        let (base, stress) = match token.as_bytes().last() {
            Some(b @ b'0'..=b'2') => (&token[..token.len() - 1], Some(b - b'0')),
            _ => (token, None),
        };
        let id = self.id(base).map_err(|_| Error::unknown_symbol(token))?;
        let phone = self.phone(id);
        if !phone.alphabet.is_lexical() {
            return Err(Error::unknown_symbol_at(token, "lexical alphabet"));
        }
        let stressable = self.has(id, "stressable");
        if stressable != stress.is_some() {
            return Err(Error::unknown_symbol_at(
                token,
                if stressable { "vowel without stress digit" } else { "stress on non-vowel" },
            ));
        }
        Ok(LexPhone { id, stress })
    }

    pub fn parse_lexical(&self, text: &str) -> Result<Vec<LexPhone>> {
        text.split_whitespace()
            .enumerate()
            .map(|(i, tok)| self.parse_lex_token(tok).map_err(|e| e.at(format!("token {}", i + 1))))
            .collect()
    }

    pub fn lex_token(&self, p: LexPhone) -> String {
        match p.stress {
            Some(s) => format!("{}{}", self.symbol(p.id), s),
            None => self.symbol(p.id).to_string(),
        }
    }

    pub fn format_lexical(&self, pron: &[LexPhone]) -> String {
        pron.iter().map(|&p| self.lex_token(p)).collect::<Vec<_>>().join(" ")
    }
}

/// A lexical phone with its stress digit (vowels only).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LexPhone {
    pub id: PhoneId,
    pub stress: Option<u8>,
}

/// Orthographic letter with the phones it may spell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LetterModel {
    pub letter: char,
    pub candidates: Vec<PhoneId>,
}

impl LetterModel {
    /// Union of the candidate phones' features.
    pub fn features(&self, inventory: &PhoneInventory) -> FeatureVector {
        letter_features(self, inventory)
    }
}

pub fn letter_features(model: &LetterModel, inventory: &PhoneInventory) -> FeatureVector {
    model
        .candidates
        .iter()
        .fold(FeatureVector::empty(inventory.feature_count()), |acc, &id| {
            acc.union(inventory.features(id))
        })
}

/// The supported orthography: a-z plus apostrophe.
pub fn is_supported_letter(c: char) -> bool {
    c.is_ascii_lowercase() || c == '\''
}

/// Letter models for the whole orthography.
#[derive(Clone, Debug)]
pub struct LetterModels {
    models: BTreeMap<char, LetterModel>,
}

impl LetterModels {
    pub fn bundled(inventory: &PhoneInventory) -> Self {
        Self::parse(BUNDLED_LETTERS, Path::new("<bundled>/letters.tsv"), inventory)
            .expect("bundled letter models are valid")
    }

    pub fn load(path: &Path, inventory: &PhoneInventory) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path, inventory)
    }

    pub fn parse(text: &str, origin: &Path, inventory: &PhoneInventory) -> Result<Self> {
        let mut models = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (letter, phones) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(origin, n + 1, "expected letter<TAB>phones"))?;
            let mut chars = letter.chars();
            let c = match (chars.next(), chars.next()) {
                (Some(c), None) if is_supported_letter(c) => c,
                _ => return Err(Error::parse(origin, n + 1, format!("unsupported letter `{letter}`"))),
            };
            let mut candidates = Vec::new();
            for sym in phones.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let id = inventory.id(sym).map_err(|e| e.at(format!("{}:{}", origin.display(), n + 1)))?;
                if !inventory.phone(id).alphabet.is_lexical() {
                    return Err(Error::parse(origin, n + 1, format!("`{sym}` is not a lexical phone")));
                }
                candidates.push(id);
            }
            if candidates.is_empty() {
                return Err(Error::parse(origin, n + 1, format!("letter `{c}` has no candidate phones")));
            }
            if models.insert(c, LetterModel { letter: c, candidates }).is_some() {
                return Err(Error::parse(origin, n + 1, format!("duplicate letter `{c}`")));
            }
        }
        Ok(LetterModels { models })
    }

    pub fn get(&self, c: char) -> Result<&LetterModel> {
        self.models.get(&c).ok_or(Error::UnsupportedCharacter(c))
    }

    pub fn letters(&self) -> impl Iterator<Item = char> + '_ {
        self.models.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn letter_index(&self, c: char) -> Option<usize> {
        self.models.keys().position(|&k| k == c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SyllablePosition {
    Onset,
    Nucleus,
    Coda,
}

/// Per-phone syllable membership.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SyllableSlot {
    pub position: SyllablePosition,
    /// Stress of the syllable the phone belongs to (`None` for a vowelless word).
    pub stress: Option<u8>,
}

const LEGAL_ONSETS: &[&str] = &[
    "p l", "b l", "k l", "g l", "f l", "s l", "p r", "b r", "t r", "d r", "k r", "g r", "f r",
    "th r", "sh r", "s p", "s t", "s k", "s m", "s n", "s w", "s f", "t w", "d w", "k w", "g w",
    "th w", "p y", "b y", "k y", "m y", "f y", "hh y", "v y", "s p l", "s p r", "s t r", "s k r",
    "s k w", "s k y", "s p y",
];

/// Split a lexical pronunciation into syllables using maximal onsets.
///
/// Vowels are nuclei. Consonants before the first vowel are onsets and those
/// after the last are codas; an intervocalic cluster gives the following
/// syllable its longest legal onset.
pub fn syllabify(inventory: &PhoneInventory, pron: &[LexPhone]) -> Vec<SyllableSlot> {
    let nuclei: Vec<usize> = (0..pron.len()).filter(|&i| inventory.is_vowel(pron[i].id)).collect();
    let mut slots = vec![SyllableSlot { position: SyllablePosition::Onset, stress: None }; pron.len()];
    if nuclei.is_empty() {
        return slots;
    }
    let is_legal_onset = |cluster: &[LexPhone]| -> bool {
        match cluster.len() {
            0 => true,
            1 => inventory.symbol(cluster[0].id) != "ng",
            _ => {
                let s = inventory.format(&cluster.iter().map(|p| p.id).collect::<Vec<_>>());
                LEGAL_ONSETS.contains(&s.as_str())
            }
        }
    };
    for &v in &nuclei {
        slots[v] = SyllableSlot { position: SyllablePosition::Nucleus, stress: pron[v].stress };
    }
    for slot in slots.iter_mut().take(nuclei[0]) {
        *slot = SyllableSlot { position: SyllablePosition::Onset, stress: pron[nuclei[0]].stress };
    }
    let last = *nuclei.last().unwrap();
    for slot in slots.iter_mut().skip(last + 1) {
        *slot = SyllableSlot { position: SyllablePosition::Coda, stress: pron[last].stress };
    }
    for pair in nuclei.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let cluster = &pron[a + 1..b];
        let split = (0..=cluster.len()).find(|&k| is_legal_onset(&cluster[k..])).unwrap_or(cluster.len());
        for (k, slot) in slots[a + 1..b].iter_mut().enumerate() {
            *slot = if k < split {
                SyllableSlot { position: SyllablePosition::Coda, stress: pron[a].stress }
            } else {
                SyllableSlot { position: SyllablePosition::Onset, stress: pron[b].stress }
            };
        }
    }
    slots
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inv() -> PhoneInventory {
        PhoneInventory::bundled()
    }

    fn feats(inv: &PhoneInventory, names: &[&str]) -> FeatureVector {
        FeatureVector::from_indices(inv.feature_count(), names.iter().map(|n| inv.feature_index(n).unwrap()))
    }

    #[test]
    fn t_is_voiceless_alveolar_stop() {
        let inv = inv();
        let t = inv.phone_features("t").unwrap();
        assert_eq!(*t, feats(&inv, &["consonantal", "voiceless", "alveolar", "stop"]));
    }

    #[test]
    fn flap_is_postlexical() {
        let inv = inv();
        let id = inv.id("dx").unwrap();
        assert!(inv.has(id, "flap"));
        assert_eq!(inv.phone(id).alphabet, Alphabet::Postlexical);
    }

    #[test]
    fn glottal_stop_features() {
        let inv = inv();
        let q = inv.phone_features("q").unwrap();
        assert!(feats(&inv, &["glottal", "stop"]).is_subset_of(q));
    }

    #[test]
    fn unknown_symbol() {
        assert!(matches!(inv().phone_features("xx"), Err(Error::UnknownSymbol { .. })));
    }

    #[test]
    fn postlexical_only_classes() {
        let inv = inv();
        for sym in ["dx", "nx", "q", "tcl", "dcl", "pcl", "el", "en", "ax", "ix"] {
            assert_eq!(inv.phone(inv.id(sym).unwrap()).alphabet, Alphabet::Postlexical, "{sym}");
        }
    }

    #[test]
    fn feature_vectors_distinct() {
        let inv = inv();
        let mut seen = HashMap::new();
        for p in inv.phones() {
            assert_eq!(p.features.len(), inv.feature_count());
            if let Some(prev) = seen.insert(p.features, &p.symbol) {
                panic!("{} and {} share a feature vector", prev, p.symbol);
            }
        }
    }

    #[test]
    fn letter_c_is_union_of_s_and_k() {
        let inv = inv();
        let letters = LetterModels::bundled(&inv);
        let c = LetterModel { letter: 'c', candidates: vec![inv.id("s").unwrap(), inv.id("k").unwrap()] };
        let expected = inv.phone_features("s").unwrap().union(inv.phone_features("k").unwrap());
        assert_eq!(letter_features(&c, &inv), expected);
        // the bundled 'c' also spells ch and sh
        assert!(expected.is_subset_of(&letters.get('c').unwrap().features(&inv)));
    }

    #[test]
    fn single_candidate_letter() {
        let inv = inv();
        let letters = LetterModels::bundled(&inv);
        let m = letters.get('m').unwrap();
        assert_eq!(m.features(&inv), *inv.phone_features("m").unwrap());
    }

    #[test]
    fn letter_x_superset_by_enumeration() {
        let inv = inv();
        let letters = LetterModels::bundled(&inv);
        let x = letters.get('x').unwrap();
        let fx = x.features(&inv);
        for sym in ["k", "s", "z", "g"] {
            let fp = inv.phone_features(sym).unwrap();
            for i in 0..inv.feature_count() {
                assert!(!fp.get(i) || fx.get(i), "feature {i} of {sym} missing from x");
            }
        }
    }

    #[test]
    fn every_letter_covers_candidates() {
        let inv = inv();
        let letters = LetterModels::bundled(&inv);
        assert_eq!(letters.len(), 27);
        for c in letters.letters() {
            let m = letters.get(c).unwrap();
            assert!(!m.candidates.is_empty());
            let f = m.features(&inv);
            for &p in &m.candidates {
                assert!(inv.features(p).is_subset_of(&f));
            }
        }
        assert!(matches!(letters.get('7'), Err(Error::UnsupportedCharacter('7'))));
    }

    #[test]
    fn parse_examples() {
        let inv = inv();
        let cat = inv.parse_phone_string("k ae t").unwrap();
        assert_eq!(inv.format(&cat), "k ae t");
        assert_eq!(inv.parse_phone_string("ax b r ah p t").unwrap().len(), 6);
        let curls = inv.parse_phone_string("k er l ax z").unwrap();
        assert_eq!(curls.len(), 5);
        assert_eq!(curls[3], inv.id("ax").unwrap());
    }

    #[test]
    fn parse_error_has_position() {
        let err = inv().parse_phone_string("k ae zz t").unwrap_err();
        match err {
            Error::UnknownSymbol { symbol, location } => {
                assert_eq!(symbol, "zz");
                assert_eq!(location.as_deref(), Some("token 3"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lexical_tokens() {
        let inv = inv();
        let p = inv.parse_lexical("k ae1 t").unwrap();
        assert_eq!(p[1].stress, Some(1));
        assert_eq!(inv.format_lexical(&p), "k ae1 t");
        assert!(inv.parse_lexical("k ae t").is_err());
        assert!(inv.parse_lexical("k1 ae1 t").is_err());
        assert!(inv.parse_lexical("d ax0").is_err(), "ax is postlexical only");
        assert!(inv.parse_lexical("d ix0").is_err());
    }

    #[test]
    fn syllables_dirty_and_corner() {
        let inv = inv();
        let dirty = inv.parse_lexical("d er1 t iy0").unwrap();
        let s = syllabify(&inv, &dirty);
        assert_eq!(s[2], SyllableSlot { position: SyllablePosition::Onset, stress: Some(0) });
        let corner = inv.parse_lexical("k ow1 r n er0").unwrap();
        let s = syllabify(&inv, &corner);
        assert_eq!(s[2].position, SyllablePosition::Coda);
        assert_eq!(s[3], SyllableSlot { position: SyllablePosition::Onset, stress: Some(0) });
        let children = inv.parse_lexical("ch ih1 l d r ah0 n z").unwrap();
        let s = syllabify(&inv, &children);
        assert_eq!(s[2].position, SyllablePosition::Coda);
        assert_eq!(s[3].position, SyllablePosition::Onset);
        assert_eq!(s[4].stress, Some(0));
        assert_eq!(s[7].position, SyllablePosition::Coda);
    }

    proptest::proptest! {
        #[test]
        fn union_commutative_idempotent(a in 0u64..(1 << 30), b in 0u64..(1 << 30)) {
            let fa = FeatureVector::from_indices(30, (0..30).filter(|i| a >> i & 1 == 1));
            let fb = FeatureVector::from_indices(30, (0..30).filter(|i| b >> i & 1 == 1));
            proptest::prop_assert_eq!(fa.union(&fb), fb.union(&fa));
            proptest::prop_assert_eq!(fa.union(&fa), fa);
            proptest::prop_assert!(fa.is_subset_of(&fa.union(&fb)));
        }

        #[test]
        fn phone_string_round_trip(idx in proptest::collection::vec(0usize..56, 0..12)) {
            let inv = PhoneInventory::bundled();
            let ids: Vec<PhoneId> = idx.iter().map(|&i| PhoneId((i % inv.len()) as u16)).collect();
            let text = inv.format(&ids);
            proptest::prop_assert_eq!(inv.parse_phone_string(&text).unwrap(), ids);
        }
    }
}
