//! Evaluation: chunk accuracy, identity rate, realization tables and
//! phenomenon probes.

use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::path::Path;

use crate::alignment::{AllophoneTable, LexPostlexCost};
use crate::corpus::{annotate_prompts, Utterance};
use crate::error::{Error, Result};
use crate::labels;
use crate::lexicon::Lexicon;
use crate::phonology::{PhoneId, PhoneInventory};
use crate::postlex::chunk_label;

/// Fraction of positions whose predicted chunk equals the gold chunk.
/// Zero for empty input.
pub fn exact_match_rate<T: PartialEq>(predicted: &[T], gold: &[T]) -> Result<f64> {
    if predicted.len() != gold.len() {
        return Err(Error::LengthMismatch(predicted.len(), gold.len()));
    }
    if gold.is_empty() {
        return Ok(0.0);
    }
    let hits = predicted.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / gold.len() as f64)
}

/// A lexical phone and the postlexical chunk aligned to it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlignedPhone {
    pub lexical: PhoneId,
    pub chunk: Vec<PhoneId>,
}

impl AlignedPhone {
    pub fn is_identity(&self) -> bool {
        self.chunk.len() == 1 && self.chunk[0] == self.lexical
    }
}

/// Word-by-word alignment of both tiers of every utterance.
pub fn aligned_phones<'a>(
    inventory: &PhoneInventory,
    allophones: &AllophoneTable,
    utterances: impl IntoIterator<Item = &'a Utterance>,
) -> Result<Vec<AlignedPhone>> {
    let cost = LexPostlexCost::new(inventory, allophones);
    let mut out = Vec::new();
    for utt in utterances {
        for (w, word) in utt.words.iter().enumerate() {
            let lex: Vec<PhoneId> = word.lexical.iter().map(|p| p.id).collect();
            let (_, chunks) = cost.align_and_chunk(&lex, &word.postlex).map_err(|e| e.at(format!("{} word {w}", utt.id)))?;
            out.extend(chunks.into_iter().map(|c| AlignedPhone {
                lexical: lex[c.src],
                chunk: c.dst.iter().map(|&d| word.postlex[d]).collect(),
            }));
        }
    }
    Ok(out)
}

/// Fraction of lexical phones realized as exactly themselves. Zero when
/// there are no lexical phones.
pub fn identity_rate<'a>(
    inventory: &PhoneInventory,
    allophones: &AllophoneTable,
    utterances: impl IntoIterator<Item = &'a Utterance>,
) -> Result<f64> {
    let aligned = aligned_phones(inventory, allophones, utterances)?;
    if aligned.is_empty() {
        return Ok(0.0);
    }
    Ok(aligned.iter().filter(|a| a.is_identity()).count() as f64 / aligned.len() as f64)
}

/// Nearest integer, halves away from zero.
pub fn round_percent(count: usize, total: usize) -> i64 {
    if total == 0 {
        return 0;
    }
    (100.0 * count as f64 / total as f64).round() as i64
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Category {
    ClosureRelease,
    ClosureOnly,
    ReleaseOnly,
    Flap,
    Glottal,
    Unchanged,
    Deleted,
}

impl Category {
    fn name(&self) -> &'static str {
        match self {
            Category::ClosureRelease => "closure + release",
            Category::ClosureOnly => "closure only",
            Category::ReleaseOnly => "release only",
            Category::Flap => "flap",
            Category::Glottal => "glottal stop",
            Category::Unchanged => "unchanged",
            Category::Deleted => "deleted",
        }
    }
}

/// Counts of the surface forms of one lexical phone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RealizationTable {
    pub phone: String,
    /// Named categories in display order with their counts.
    pub rows: Vec<(String, usize)>,
    /// Occurrences matching no named category.
    pub other: usize,
    pub total: usize,
}

impl RealizationTable {
    /// Rounded percentage of each named row, then of `other`.
    pub fn percents(&self) -> Vec<i64> {
        self.rows
            .iter()
            .map(|(_, n)| round_percent(*n, self.total))
            .chain([round_percent(self.other, self.total)])
            .collect()
    }

    pub fn count(&self, category: &str) -> Option<usize> {
        self.rows.iter().find(|(c, _)| c == category).map(|(_, n)| *n)
    }

    /// Tab-separated `category count percent` rows with a header.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("category\tcount\tpercent\n");
        let pct = self.percents();
        for ((name, n), p) in self.rows.iter().zip(&pct) {
            let _ = writeln!(out, "{name}\t{n}\t{p}");
        }
        let _ = writeln!(out, "other\t{}\t{}", self.other, pct[self.rows.len()]);
        let _ = writeln!(out, "total\t{}\t{}", self.total, if self.total == 0 { 0 } else { 100 });
        out
    }
}

impl fmt::Display for RealizationTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let header = format!("Realization of /{}/", self.phone);
        let pct = self.percents();
        let names: Vec<&str> = self.rows.iter().map(|(c, _)| c.as_str()).chain(["other", "total"]).collect();
        let width = names.iter().map(|n| n.len()).chain([header.len()]).max().unwrap_or(0);
        writeln!(f, "{header:<width$}  {:>6}  {:>4}", "count", "%")?;
        for ((name, n), p) in self.rows.iter().zip(&pct) {
            writeln!(f, "{name:<width$}  {n:>6}  {p:>4}")?;
        }
        writeln!(f, "{:<width$}  {:>6}  {:>4}", "other", self.other, pct[self.rows.len()])?;
        write!(f, "{:<width$}  {:>6}", "total", self.total)
    }
}

/// Tabulate how `phone` is realized across `aligned`.
///
/// Stops with a closure symbol get closure + release, closure only, release
/// only, then flap for /t d/, glottal stop for /t/, and deleted. Other
/// phones get unchanged and deleted.
pub fn realization_table(inventory: &PhoneInventory, aligned: &[AlignedPhone], phone: &str) -> Result<RealizationTable> {
    let lex = inventory.id(phone)?;
    if !inventory.phone(lex).alphabet.is_lexical() {
        return Err(Error::unknown_symbol_at(phone, "lexical alphabet"));
    }
    let closure = inventory.id(&format!("{phone}cl")).ok();
    let flap = inventory.id("dx").ok();
    let glottal = inventory.id("q").ok();
    let mut cats = Vec::new();
    if closure.is_some() {
        cats.extend([Category::ClosureRelease, Category::ClosureOnly, Category::ReleaseOnly]);
        if matches!(phone, "t" | "d") {
            cats.push(Category::Flap);
        }
        if phone == "t" {
            cats.push(Category::Glottal);
        }
    } else {
        cats.push(Category::Unchanged);
    }
    cats.push(Category::Deleted);

    let classify = |chunk: &[PhoneId]| -> Option<Category> {
        let c = match chunk {
            [] => Category::Deleted,
            [a, b] if Some(*a) == closure && *b == lex => Category::ClosureRelease,
            [a] if Some(*a) == closure => Category::ClosureOnly,
            [a] if *a == lex => {
                if closure.is_some() {
                    Category::ReleaseOnly
                } else {
                    Category::Unchanged
                }
            }
            [a] if Some(*a) == flap => Category::Flap,
            [a] if Some(*a) == glottal => Category::Glottal,
            _ => return None,
        };
        cats.contains(&c).then_some(c)
    };

    let mut counts = vec![0usize; cats.len()];
    let mut other = 0;
    let mut total = 0;
    for a in aligned.iter().filter(|a| a.lexical == lex) {
        total += 1;
        match classify(&a.chunk).and_then(|c| cats.iter().position(|x| *x == c)) {
            Some(i) => counts[i] += 1,
            None => other += 1,
        }
    }
    Ok(RealizationTable {
        phone: phone.to_string(),
        rows: cats.iter().map(|c| c.name().to_string()).zip(counts).collect(),
        other,
        total,
    })
}

/// One phenomenon check: the chunk expected for one lexical phone of a
/// sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Probe {
    pub name: String,
    pub sentence: String,
    pub word: usize,
    pub phone: usize,
    /// Expected chunk label, `+`-joined or `_`.
    pub expected: String,
}

/// Parse `name<TAB>sentence<TAB>word<TAB>phone<TAB>expected` lines.
pub fn parse_probes(text: &str, origin: &Path) -> Result<Vec<Probe>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(Error::parse(origin, n + 1, format!("expected 5 columns, found {}", cols.len())));
        }
        let index = |s: &str| s.parse::<usize>().map_err(|_| Error::parse(origin, n + 1, format!("bad index `{s}`")));
        out.push(Probe {
            name: cols[0].to_string(),
            sentence: cols[1].to_string(),
            word: index(cols[2])?,
            phone: index(cols[3])?,
            expected: cols[4].to_string(),
        });
    }
    Ok(out)
}

pub fn bundled_probes() -> Vec<Probe> {
    parse_probes(include_str!("../data/probes.tsv"), Path::new("probes.tsv")).expect("bundled probes are valid")
}

pub fn load_probes(path: &Path) -> Result<Vec<Probe>> {
    parse_probes(&std::fs::read_to_string(path)?, path)
}

/// A probe sentence annotated for prediction.
#[derive(Clone, Debug)]
pub struct PreparedProbe {
    pub probe: Probe,
    pub utterance: Utterance,
    /// Flat lexical-phone position of the target.
    pub position: usize,
}

/// Annotate every probe sentence and locate its target phone.
pub fn prepare_probes(probes: &[Probe], lexicon: &Lexicon, function_words: &HashSet<String>) -> Result<Vec<PreparedProbe>> {
    probes
        .iter()
        .map(|p| {
            let utt = annotate_prompts(std::slice::from_ref(&p.sentence), lexicon, function_words, None)?.remove(0);
            let word = utt
                .words
                .get(p.word)
                .ok_or_else(|| Error::IndexOutOfRange(format!("probe {}: word {}", p.name, p.word)))?;
            if p.phone >= word.lexical.len() {
                return Err(Error::IndexOutOfRange(format!("probe {}: phone {}", p.name, p.phone)));
            }
            let position = utt.words[..p.word].iter().map(|w| w.lexical.len()).sum::<usize>() + p.phone;
            Ok(PreparedProbe { probe: p.clone(), utterance: utt, position })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbeResult {
    pub name: String,
    pub sentence: String,
    pub expected: String,
    /// Predicted chunk label, or the error text when prediction failed.
    pub predicted: String,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbeReport {
    pub results: Vec<ProbeResult>,
}

impl ProbeReport {
    pub fn passed(&self) -> usize {
        self.results.iter().filter(|r| r.passed).count()
    }

    pub fn len(&self) -> usize {
        self.results.len()
    }

    pub fn is_empty(&self) -> bool {
        self.results.is_empty()
    }
}

impl fmt::Display for ProbeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.results {
            writeln!(
                f,
                "{}\t{}\t{}\texpected={}\tpredicted={}",
                if r.passed { "PASS" } else { "FAIL" },
                r.name,
                r.sentence,
                r.expected,
                r.predicted
            )?;
        }
        write!(f, "{}/{} probes passed", self.passed(), self.len())
    }
}

/// Run every probe through `predict`, which returns one chunk per lexical
/// phone of an utterance. Prediction errors count as failures.
pub fn phenomena_probe<F>(inventory: &PhoneInventory, probes: &[PreparedProbe], mut predict: F) -> ProbeReport
where
    F: FnMut(&Utterance) -> Result<Vec<Vec<PhoneId>>>,
{
    let results = probes
        .iter()
        .map(|p| {
            let predicted = match predict(&p.utterance) {
                Ok(chunks) => match chunks.get(p.position) {
                    Some(c) => chunk_label(inventory, c),
                    None => format!("ERR only {} chunks", chunks.len()),
                },
                Err(e) => format!("ERR {e}"),
            };
            ProbeResult {
                name: p.probe.name.clone(),
                sentence: p.probe.sentence.clone(),
                expected: p.probe.expected.clone(),
                passed: predicted == p.probe.expected,
                predicted,
            }
        })
        .collect();
    ProbeReport { results }
}

/// Check that `label` only names postlexical symbols.
pub fn validate_label(inventory: &PhoneInventory, label: &str) -> Result<()> {
    for s in labels::split(label) {
        let id = inventory.id(s)?;
        if !inventory.phone(id).alphabet.is_postlexical() {
            return Err(Error::unknown_symbol_at(s, "postlexical alphabet"));
        }
    }
    Ok(())
}
