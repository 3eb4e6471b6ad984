//! Labeled utterances: word tier, postlexical phone tier and annotations.
//!
//! On disk every utterance `ID` is three files in one directory:
//!
//! * `ID.wrd`: `start<TAB>end<TAB>orthography` per word,
//! * `ID.phn`: `start<TAB>end<TAB>symbol` per postlexical phone,
//! * `ID.ann`: `wordIndex<TAB>tag<TAB>wordType<TAB>prominence[<TAB>lexical]`
//!   per word plus `BOUNDARY<TAB>kind<TAB>afterWordIndex` lines.
//!
//! Times may be `-`. With times, phones belong to the word whose span
//! contains them; without, the phone tier is aligned against the lexical
//! pronunciations to find word membership.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::alignment::{AllophoneTable, LexPostlexCost};
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::phonology::{LexPhone, PhoneId, PhoneInventory};
use crate::postlex::RuleOracle;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WordType {
    Function,
    Content,
}

impl fmt::Display for WordType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WordType::Function => "function",
            WordType::Content => "content",
        })
    }
}

impl FromStr for WordType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "function" => Ok(WordType::Function),
            "content" => Ok(WordType::Content),
            _ => Err(Error::Invalid(format!("unknown word type `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoundaryKind {
    Phrase,
    Clause,
    Sentence,
}

impl fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryKind::Phrase => "phrase",
            BoundaryKind::Clause => "clause",
            BoundaryKind::Sentence => "sentence",
        })
    }
}

impl FromStr for BoundaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phrase" => Ok(BoundaryKind::Phrase),
            "clause" => Ok(BoundaryKind::Clause),
            "sentence" => Ok(BoundaryKind::Sentence),
            _ => Err(Error::Invalid(format!("unknown boundary kind `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordToken {
    pub orthography: String,
    pub tag: Option<String>,
    pub lexical: Vec<LexPhone>,
    pub postlex: Vec<PhoneId>,
    pub word_type: WordType,
    pub prominence: u8,
}

/// A sentence-sized stretch of speech.
///
/// Boundaries are recorded as "after word index" positions. The sets are
/// kept nested: every sentence boundary is a clause boundary and every
/// clause boundary a phrase boundary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Utterance {
    pub id: String,
    pub words: Vec<WordToken>,
    phrase: BTreeSet<usize>,
    clause: BTreeSet<usize>,
    sentence: BTreeSet<usize>,
}

impl Utterance {
    pub fn new(id: impl Into<String>, words: Vec<WordToken>) -> Self {
        let mut u = Utterance { id: id.into(), words, phrase: BTreeSet::new(), clause: BTreeSet::new(), sentence: BTreeSet::new() };
        if !u.words.is_empty() {
            let last = u.words.len() - 1;
            u.add_boundary(BoundaryKind::Sentence, last);
        }
        u
    }

    /// Mark a boundary after word `after`, along with the weaker kinds it
    /// implies.
    pub fn add_boundary(&mut self, kind: BoundaryKind, after: usize) {
        self.phrase.insert(after);
        if kind >= BoundaryKind::Clause {
            self.clause.insert(after);
        }
        if kind == BoundaryKind::Sentence {
            self.sentence.insert(after);
        }
    }

    pub fn boundaries(&self, kind: BoundaryKind) -> &BTreeSet<usize> {
        match kind {
            BoundaryKind::Phrase => &self.phrase,
            BoundaryKind::Clause => &self.clause,
            BoundaryKind::Sentence => &self.sentence,
        }
    }

    /// Strongest boundary after word `after`, if any.
    pub fn boundary_after(&self, after: usize) -> Option<BoundaryKind> {
        [BoundaryKind::Sentence, BoundaryKind::Clause, BoundaryKind::Phrase]
            .into_iter()
            .find(|&k| self.boundaries(k).contains(&after))
    }

    /// Words between `word` and the enclosing unit's left and right edges.
    ///
    /// The last word is always followed by a sentence boundary, so the
    /// right distance is bounded.
    pub fn boundary_distance(&self, kind: BoundaryKind, word: usize) -> (usize, usize) {
        let set = self.boundaries(kind);
        let left = match set.range(..word).next_back() {
            Some(&b) => word - b - 1,
            None => word,
        };
        let right = match set.range(word..).next() {
            Some(&b) => b - word,
            None => self.words.len().saturating_sub(word + 1),
        };
        (left, right)
    }

    /// The phone tier: all postlexical phones in order.
    pub fn phone_tier(&self) -> Vec<PhoneId> {
        self.words.iter().flat_map(|w| w.postlex.iter().copied()).collect()
    }

    pub fn lexical_phone_count(&self) -> usize {
        self.words.iter().map(|w| w.lexical.len()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
    /// Left over once both requested sizes are met.
    Unused,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    pub utterances: Vec<Utterance>,
    /// Assignment per utterance, parallel to `utterances`.
    pub split: Vec<Split>,
}

impl Corpus {
    pub fn new(utterances: Vec<Utterance>) -> Self {
        let split = vec![Split::Train; utterances.len()];
        Corpus { utterances, split }
    }

    pub fn word_count(&self) -> usize {
        self.utterances.iter().map(|u| u.words.len()).sum()
    }

    pub fn words_in(&self, split: Split) -> usize {
        self.utterances.iter().zip(&self.split).filter(|(_, s)| **s == split).map(|(u, _)| u.words.len()).sum()
    }

    pub fn utterances_in(&self, split: Split) -> impl Iterator<Item = &Utterance> {
        self.utterances.iter().zip(&self.split).filter(move |(_, s)| **s == split).map(|(u, _)| u)
    }
}

/// Assign whole utterances to Test and then Train, in seeded random order,
/// until each reaches its word budget. Remaining utterances are Unused.
pub fn split_corpus(mut corpus: Corpus, train_words: usize, test_words: usize, seed: u64) -> Result<Corpus> {
    let total = corpus.word_count();
    if train_words + test_words > total {
        return Err(Error::InsufficientData { requested: train_words + test_words, available: total });
    }
    let mut order: Vec<usize> = (0..corpus.utterances.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (mut test, mut train) = (0, 0);
    corpus.split = vec![Split::Unused; corpus.utterances.len()];
    for i in order {
        let n = corpus.utterances[i].words.len();
        if test < test_words {
            corpus.split[i] = Split::Test;
            test += n;
        } else if train < train_words {
            corpus.split[i] = Split::Train;
            train += n;
        }
    }
    Ok(corpus)
}

struct Timed {
    start: Option<f64>,
    end: Option<f64>,
    label: String,
    line: usize,
}

fn parse_time(s: &str, path: &Path, line: usize) -> Result<Option<f64>> {
    if s == "-" {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::parse(path, line, format!("bad time `{s}`")))
}

fn read_tier(path: &Path) -> Result<Vec<Timed>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(Error::parse(path, n + 1, "expected start<TAB>end<TAB>label"));
        }
        out.push(Timed {
            start: parse_time(f[0], path, n + 1)?,
            end: parse_time(f[1], path, n + 1)?,
            label: f[2].trim().to_string(),
            line: n + 1,
        });
    }
    Ok(out)
}

/// Phone-tier labels for silence, ignored when loading.
pub const SILENCE_LABELS: [&str; 3] = ["h#", "pau", "sil"];

struct Annotation {
    tag: Option<String>,
    word_type: WordType,
    prominence: u8,
    lexical: Option<Vec<LexPhone>>,
}

type Annotations = (Vec<(usize, Annotation)>, Vec<(BoundaryKind, usize)>);

fn read_annotations(path: &Path, inventory: &PhoneInventory) -> Result<Annotations> {
    let text = std::fs::read_to_string(path)?;
    let (mut words, mut bounds) = (Vec::new(), Vec::new());
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let perr = |m: String| Error::parse(path, n + 1, m);
        if f[0] == "BOUNDARY" {
            if f.len() != 3 {
                return Err(perr("expected BOUNDARY<TAB>kind<TAB>afterWordIndex".into()));
            }
            let kind = f[1].parse().map_err(|e: Error| perr(e.to_string()))?;
            let after = f[2].parse().map_err(|_| perr(format!("bad word index `{}`", f[2])))?;
            bounds.push((kind, after));
            continue;
        }
        if f.len() != 4 && f.len() != 5 {
            return Err(perr("expected wordIndex<TAB>tag<TAB>wordType<TAB>prominence".into()));
        }
        let idx = f[0].parse().map_err(|_| perr(format!("bad word index `{}`", f[0])))?;
        let tag = Some(f[1].trim()).filter(|t| !t.is_empty() && *t != "-").map(str::to_string);
        let word_type = f[2].parse().map_err(|e: Error| perr(e.to_string()))?;
        let prominence = f[3].parse().map_err(|_| perr(format!("bad prominence `{}`", f[3])))?;
        let lexical = match f.get(4) {
            Some(p) => Some(inventory.parse_lexical(p).map_err(|e| e.at(format!("{}:{}", path.display(), n + 1)))?),
            None => None,
        };
        words.push((idx, Annotation { tag, word_type, prominence, lexical }));
    }
    Ok((words, bounds))
}

/// Read every utterance (`*.wrd` with matching `.phn` and `.ann`) in `dir`,
/// in file-name order. Words whose annotation lacks a lexical pronunciation
/// take the first lexicon entry for their orthography and tag.
pub fn load_corpus(dir: &Path, inventory: &PhoneInventory, lexicon: Option<&Lexicon>) -> Result<Corpus> {
    let mut stems: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "wrd"))
        .collect();
    stems.sort();
    let allophones = AllophoneTable::bundled(inventory);
    let cost = LexPostlexCost::new(inventory, &allophones);
    let mut utterances = Vec::with_capacity(stems.len());
    for wrd in stems {
        utterances.push(load_utterance(&wrd, inventory, lexicon, &cost)?);
    }
    Ok(Corpus::new(utterances))
}

fn load_utterance(wrd_path: &Path, inventory: &PhoneInventory, lexicon: Option<&Lexicon>, cost: &LexPostlexCost<'_>) -> Result<Utterance> {
    let id = wrd_path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
    let mismatch = |m: String| Error::TierMismatch { utterance: id.clone(), message: m };
    let phn_path = wrd_path.with_extension("phn");
    let ann_path = wrd_path.with_extension("ann");
    for p in [&phn_path, &ann_path] {
        if !p.exists() {
            return Err(mismatch(format!("missing {}", p.display())));
        }
    }
    let words = read_tier(wrd_path)?;
    let phones: Vec<Timed> = read_tier(&phn_path)?.into_iter().filter(|p| !SILENCE_LABELS.contains(&p.label.as_str())).collect();
    let (mut anns, bounds) = read_annotations(&ann_path, inventory)?;
    anns.sort_by_key(|(i, _)| *i);
    if anns.len() != words.len() || anns.iter().enumerate().any(|(k, (i, _))| *i != k) {
        return Err(mismatch(format!("{} words but annotations for indices {:?}", words.len(), anns.iter().map(|a| a.0).collect::<Vec<_>>())));
    }

    let mut phone_ids = Vec::with_capacity(phones.len());
    for p in &phones {
        let id = inventory
            .id(&p.label)
            .map_err(|_| Error::unknown_symbol_at(p.label.clone(), format!("{}:{}", phn_path.display(), p.line)))?;
        if !inventory.phone(id).alphabet.is_postlexical() {
            return Err(Error::unknown_symbol_at(p.label.clone(), format!("{}:{} (not postlexical)", phn_path.display(), p.line)));
        }
        phone_ids.push(id);
    }

    let mut tokens = Vec::with_capacity(words.len());
    for (w, (_, ann)) in words.iter().zip(anns) {
        let lexical = match (ann.lexical, lexicon) {
            (Some(l), _) => l,
            (None, Some(lex)) => lex.lookup(&w.label, ann.tag.as_deref())?[0].pronunciation.clone(),
            (None, None) => Vec::new(),
        };
        tokens.push(WordToken {
            orthography: w.label.to_lowercase(),
            tag: ann.tag,
            lexical,
            postlex: Vec::new(),
            word_type: ann.word_type,
            prominence: ann.prominence,
        });
    }

    let timed = words.iter().all(|w| w.start.is_some() && w.end.is_some()) && phones.iter().all(|p| p.start.is_some() && p.end.is_some());
    if timed {
        for (p, &pid) in phones.iter().zip(&phone_ids) {
            let (ps, pe) = (p.start.unwrap(), p.end.unwrap());
            let owner = words.iter().position(|w| ps >= w.start.unwrap() && pe <= w.end.unwrap());
            match owner {
                Some(k) => tokens[k].postlex.push(pid),
                None => return Err(mismatch(format!("phone `{}` at line {} lies outside every word", p.label, p.line))),
            }
        }
    } else {
        if tokens.iter().any(|t| t.lexical.is_empty()) {
            return Err(mismatch("untimed tiers need lexical pronunciations".into()));
        }
        let lex: Vec<PhoneId> = tokens.iter().flat_map(|t| t.lexical.iter().map(|p| p.id)).collect();
        let mut owner = Vec::with_capacity(lex.len());
        for (k, t) in tokens.iter().enumerate() {
            owner.extend(std::iter::repeat_n(k, t.lexical.len()));
        }
        let (_, chunks) = cost.align_and_chunk(&lex, &phone_ids).map_err(|e| mismatch(e.to_string()))?;
        for c in chunks {
            for d in c.dst {
                tokens[owner[c.src]].postlex.push(phone_ids[d]);
            }
        }
    }

    let mut utt = Utterance::new(id.clone(), tokens);
    for (kind, after) in bounds {
        if after >= utt.words.len() {
            return Err(mismatch(format!("boundary after word {after} but only {} words", utt.words.len())));
        }
        utt.add_boundary(kind, after);
    }
    Ok(utt)
}

/// Write every utterance with integer times (one unit per phone).
pub fn save_corpus(corpus: &Corpus, dir: &Path, inventory: &PhoneInventory) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for utt in &corpus.utterances {
        let (mut wrd, mut phn, mut ann) = (String::new(), String::new(), String::new());
        let mut t = 0usize;
        for (i, w) in utt.words.iter().enumerate() {
            let start = t;
            for &p in &w.postlex {
                phn.push_str(&format!("{}\t{}\t{}\n", t, t + 1, inventory.symbol(p)));
                t += 1;
            }
            wrd.push_str(&format!("{start}\t{t}\t{}\n", w.orthography));
            ann.push_str(&format!(
                "{i}\t{}\t{}\t{}\t{}\n",
                w.tag.as_deref().unwrap_or("-"),
                w.word_type,
                w.prominence,
                inventory.format_lexical(&w.lexical)
            ));
        }
        for i in 0..utt.words.len() {
            if let Some(kind) = utt.boundary_after(i) {
                ann.push_str(&format!("BOUNDARY\t{kind}\t{i}\n"));
            }
        }
        std::fs::write(dir.join(format!("{}.wrd", utt.id)), wrd)?;
        std::fs::write(dir.join(format!("{}.phn", utt.id)), phn)?;
        std::fs::write(dir.join(format!("{}.ann", utt.id)), ann)?;
    }
    Ok(())
}

const BUNDLED_FUNCTION_WORDS: &str = include_str!("../data/function_words.txt");
const BUNDLED_PROMPTS: &str = include_str!("../data/prompts.txt");

/// The closed-class word list used for word-type annotation.
pub fn bundled_function_words() -> HashSet<String> {
    BUNDLED_FUNCTION_WORDS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

/// The bundled prompt sentences, one per line.
pub fn bundled_prompts() -> Vec<String> {
    BUNDLED_PROMPTS.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect()
}

const CONJUNCTIONS: &[&str] = &["and", "but", "or", "nor", "so", "yet", "whilst", "while", "because", "although", "though", "unless", "since"];

/// One word of a tokenized prompt.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptWord {
    pub orthography: String,
    pub tag: Option<String>,
    /// Strongest boundary implied by punctuation after this word.
    pub boundary: Option<BoundaryKind>,
}

/// Split a prompt into words with `word/TAG` tags and punctuation-derived
/// boundaries: any punctuation closes a phrase, `;` and `:` or a comma
/// before a conjunction close a clause, and `.`, `?`, `!` close a sentence.
pub fn tokenize_prompt(sentence: &str) -> Result<Vec<PromptWord>> {
    let mut out: Vec<PromptWord> = Vec::new();
    let mut pending_comma = false;
    for raw in sentence.split_whitespace() {
        let trimmed = raw.trim_end_matches([',', ';', ':', '.', '?', '!']);
        let punct = &raw[trimmed.len()..];
        let (word, tag) = match trimmed.split_once('/') {
            Some((w, t)) if !t.is_empty() => (w, Some(t.to_string())),
            _ => (trimmed, None),
        };
        let orth = word.to_lowercase();
        if orth.is_empty() {
            return Err(Error::Invalid(format!("empty word in `{sentence}`")));
        }
        if let Some(c) = orth.chars().find(|c| !crate::phonology::is_supported_letter(*c)) {
            return Err(Error::UnsupportedCharacter(c));
        }
        if pending_comma && CONJUNCTIONS.contains(&orth.as_str()) {
            if let Some(prev) = out.last_mut() {
                prev.boundary = prev.boundary.max(Some(BoundaryKind::Clause));
            }
        }
        let boundary = punct
            .chars()
            .map(|c| match c {
                '.' | '?' | '!' => BoundaryKind::Sentence,
                ';' | ':' => BoundaryKind::Clause,
                _ => BoundaryKind::Phrase,
            })
            .max();
        pending_comma = punct.contains(',');
        out.push(PromptWord { orthography: orth, tag, boundary });
    }
    Ok(out)
}

/// Resolves a word to a lexical pronunciation when the lexicon lacks it.
pub trait Pronouncer {
    fn pronounce(&self, orthography: &str) -> Result<Vec<LexPhone>>;
}

/// Build annotated utterances (lexical tier only) from prompts.
///
/// Function words get prominence 0, content words 1, and the last content
/// word before each sentence boundary 2.
pub fn annotate_prompts(
    sentences: &[String],
    lexicon: &Lexicon,
    function_words: &HashSet<String>,
    fallback: Option<&dyn Pronouncer>,
) -> Result<Vec<Utterance>> {
    let mut out = Vec::with_capacity(sentences.len());
    for (n, s) in sentences.iter().enumerate() {
        let words = tokenize_prompt(s)?;
        let mut tokens = Vec::with_capacity(words.len());
        for w in &words {
            let lexical = match lexicon.lookup(&w.orthography, w.tag.as_deref()) {
                Ok(entries) => entries[0].pronunciation.clone(),
                Err(Error::NotFound(what)) => match fallback {
                    Some(f) => f.pronounce(&w.orthography)?,
                    None => return Err(Error::NotFound(what)),
                },
                Err(e) => return Err(e),
            };
            let word_type = if function_words.contains(&w.orthography) { WordType::Function } else { WordType::Content };
            tokens.push(WordToken {
                orthography: w.orthography.clone(),
                tag: w.tag.clone(),
                lexical,
                postlex: Vec::new(),
                word_type,
                prominence: u8::from(word_type == WordType::Content),
            });
        }
        let mut utt = Utterance::new(format!("s{:04}", n + 1), tokens);
        for (i, w) in words.iter().enumerate() {
            if let Some(kind) = w.boundary {
                utt.add_boundary(kind, i);
            }
        }
        let mut start = 0;
        for &end in utt.sentence.clone().iter() {
            if let Some(k) = (start..=end).rev().find(|&k| utt.words[k].word_type == WordType::Content) {
                utt.words[k].prominence = 2;
            }
            start = end + 1;
        }
        out.push(utt);
    }
    Ok(out)
}

/// Annotate `sentences` and label their postlexical tiers with `oracle`.
///
/// Probabilistic rules draw from one stream seeded by `seed`, consumed in
/// utterance order.
pub fn synthesize_corpus(
    inventory: &PhoneInventory,
    sentences: &[String],
    lexicon: &Lexicon,
    function_words: &HashSet<String>,
    fallback: Option<&dyn Pronouncer>,
    oracle: &RuleOracle,
    seed: u64,
) -> Result<Corpus> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let utterances = annotate_prompts(sentences, lexicon, function_words, fallback)?
        .iter()
        .map(|u| oracle.apply(inventory, u, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(Corpus::new(utterances))
}
