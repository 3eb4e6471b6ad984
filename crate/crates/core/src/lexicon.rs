//! Merged pronunciation lexicon.
//!
//! Source lexica share one TSV layout, `orth<TAB>tag<TAB>phones`, with stress
//! digits on vowels. A saved lexicon appends `source` and `rank` columns.
//! Lines starting with `#` are comments.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::phonology::{LexPhone, PhoneId, PhoneInventory};

/// Where an entry came from. Declaration order is merge priority.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    A,
    B,
    C,
    Synthetic,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::A => "A",
            Source::B => "B",
            Source::C => "C",
            Source::Synthetic => "Synthetic",
        })
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" => Ok(Source::A),
            "B" => Ok(Source::B),
            "C" => Ok(Source::C),
            "Synthetic" => Ok(Source::Synthetic),
            other => Err(Error::Invalid(format!("unknown lexicon source `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexEntry {
    pub orthography: String,
    pub pronunciation: Vec<LexPhone>,
    pub tag: Option<String>,
    pub source: Source,
    pub variant_rank: u8,
}

/// One `PREFER <pattern> OVER <pattern> [WHEN <glob>]` line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreferRule {
    pub prefer: Vec<PhoneId>,
    pub over: Vec<PhoneId>,
    pub when: Option<String>,
}

impl PreferRule {
    fn applies_to(&self, orthography: &str) -> bool {
        self.when.as_deref().is_none_or(|g| glob_match(g, orthography))
    }
}

/// `*` matches any run of characters; everything else is literal.
pub fn glob_match(pattern: &str, text: &str) -> bool {
    let parts: Vec<&str> = pattern.split('*').collect();
    if parts.len() == 1 {
        return pattern == text;
    }
    let (first, last) = (parts[0], parts[parts.len() - 1]);
    if !text.starts_with(first) || text.len() < first.len() + last.len() || !text.ends_with(last) {
        return false;
    }
    let mut rest = &text[first.len()..text.len() - last.len()];
    for mid in &parts[1..parts.len() - 1] {
        match rest.find(mid) {
            Some(i) => rest = &rest[i + mid.len()..],
            None => return false,
        }
    }
    true
}

/// Merger-avoiding preferences applied after the explicit rules when
/// distinctions are preferred.
const DISTINCTION_PAIRS: &[(&str, &str)] =
    &[("ao", "aa"), ("hw", "w"), ("ow+r", "ao+r"), ("ae+r", "eh+r"), ("ey+r", "eh+r")];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MergePolicy {
    pub rules: Vec<PreferRule>,
    pub prefer_distinctions: bool,
    /// Fall back to source priority and lexicographic order when rules leave
    /// more than one variant; otherwise such a tie is a conflict.
    pub tie_break: bool,
}

impl Default for MergePolicy {
    fn default() -> Self {
        MergePolicy { rules: Vec::new(), prefer_distinctions: true, tie_break: true }
    }
}

const BUNDLED_POLICY: &str = include_str!("../data/policy.rules");

impl MergePolicy {
    pub fn bundled(inventory: &PhoneInventory) -> Self {
        Self::parse(BUNDLED_POLICY, Path::new("<bundled>/policy.rules"), inventory)
            .expect("bundled policy is valid")
    }

    pub fn load(path: &Path, inventory: &PhoneInventory) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, path, inventory)
    }

    pub fn parse(text: &str, origin: &Path, inventory: &PhoneInventory) -> Result<Self> {
        let mut policy = MergePolicy::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            let err = |m: &str| Error::parse(origin, n + 1, m);
            match words.as_slice() {
                ["DISTINCTIONS", v] => policy.prefer_distinctions = parse_switch(v).ok_or_else(|| err("expected on/off"))?,
                ["TIEBREAK", v] => policy.tie_break = parse_switch(v).ok_or_else(|| err("expected on/off"))?,
                ["PREFER", p, "OVER", q, rest @ ..] => {
                    let when = match rest {
                        [] => None,
                        ["WHEN", g] => Some(g.to_string()),
                        _ => return Err(err("expected `WHEN <glob>`")),
                    };
                    let loc = |e: Error| e.at(format!("{}:{}", origin.display(), n + 1));
                    policy.rules.push(PreferRule {
                        prefer: parse_pattern(p, inventory).map_err(loc)?,
                        over: parse_pattern(q, inventory).map_err(loc)?,
                        when,
                    });
                }
                _ => return Err(err("expected PREFER, DISTINCTIONS or TIEBREAK")),
            }
        }
        Ok(policy)
    }

    fn all_rules(&self, inventory: &PhoneInventory) -> Vec<PreferRule> {
        let mut rules = self.rules.clone();
        if self.prefer_distinctions {
            for (p, q) in DISTINCTION_PAIRS {
                rules.push(PreferRule {
                    prefer: parse_pattern(p, inventory).expect("built-in pattern"),
                    over: parse_pattern(q, inventory).expect("built-in pattern"),
                    when: None,
                });
            }
        }
        rules
    }
}

fn parse_switch(v: &str) -> Option<bool> {
    match v {
        "on" => Some(true),
        "off" => Some(false),
        _ => None,
    }
}

fn parse_pattern(text: &str, inventory: &PhoneInventory) -> Result<Vec<PhoneId>> {
    text.split('+')
        .map(|sym| {
            let base = sym.trim_end_matches(['0', '1', '2']);
            inventory.id(base)
        })
        .collect()
}

fn bases(pron: &[LexPhone]) -> Vec<PhoneId> {
    pron.iter().map(|p| p.id).collect()
}

/// True if replacing one occurrence of `over` in `worse` by `prefer` gives
/// `better`, comparing phones without stress.
fn dominates(better: &[PhoneId], worse: &[PhoneId], rule: &PreferRule) -> bool {
    let q = &rule.over;
    if q.is_empty() || worse.len() < q.len() {
        return false;
    }
    (0..=worse.len() - q.len()).any(|i| {
        worse[i..i + q.len()] == q[..]
            && better.len() + q.len() == worse.len() + rule.prefer.len()
            && better[..i] == worse[..i]
            && better[i..i + rule.prefer.len()] == rule.prefer[..]
            && better[i + rule.prefer.len()..] == worse[i + q.len()..]
    })
}

/// A candidate pronunciation during merging.
#[derive(Clone, Debug)]
struct Candidate {
    pron: Vec<LexPhone>,
    source: Source,
}

/// Reduce a variant set to one pronunciation.
fn collapse(
    orthography: &str,
    mut cands: Vec<Candidate>,
    rules: &[PreferRule],
    tie_break: bool,
    inventory: &PhoneInventory,
) -> Result<Candidate> {
    // identical pronunciations keep the highest-priority source
    cands.sort_by(|a, b| a.pron.cmp(&b.pron).then(a.source.cmp(&b.source)));
    cands.dedup_by(|b, a| a.pron == b.pron);
    for rule in rules.iter().filter(|r| r.applies_to(orthography)) {
        if cands.len() < 2 {
            break;
        }
        let keys: Vec<Vec<PhoneId>> = cands.iter().map(|c| bases(&c.pron)).collect();
        let keep: Vec<bool> = keys
            .iter()
            .map(|w| !keys.iter().any(|b| dominates(b, w, rule)))
            .collect();
        let mut k = keep.iter();
        cands.retain(|_| *k.next().unwrap());
    }
    if cands.len() > 1 && !tie_break {
        return Err(Error::Conflict {
            orthography: orthography.to_string(),
            first: inventory.format_lexical(&cands[0].pron),
            second: inventory.format_lexical(&cands[1].pron),
        });
    }
    let fmt = |c: &Candidate| inventory.format_lexical(&c.pron);
    Ok(cands
        .into_iter()
        .min_by(|a, b| a.source.cmp(&b.source).then_with(|| fmt(a).cmp(&fmt(b))))
        .expect("non-empty variant set"))
}

/// Parse a lexicon file. Three-column lines take `default_source`; five-column
/// lines carry their own source and rank.
pub fn parse_entries(
    text: &str,
    origin: &Path,
    default_source: Source,
    inventory: &PhoneInventory,
) -> Result<Vec<LexEntry>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 && f.len() != 5 {
            return Err(Error::parse(origin, n + 1, format!("expected 3 or 5 tab-separated fields, found {}", f.len())));
        }
        let orthography = f[0].trim().to_lowercase();
        if orthography.is_empty() {
            return Err(Error::parse(origin, n + 1, "empty orthography"));
        }
        let pronunciation = inventory
            .parse_lexical(f[2])
            .map_err(|e| Error::parse(origin, n + 1, e.to_string()))?;
        if pronunciation.is_empty() {
            return Err(Error::parse(origin, n + 1, "empty pronunciation"));
        }
        let tag = Some(f[1].trim()).filter(|t| !t.is_empty()).map(str::to_string);
        let (source, variant_rank) = if f.len() == 5 {
            let s = f[3].parse().map_err(|e: Error| Error::parse(origin, n + 1, e.to_string()))?;
            let r = f[4].parse().map_err(|_| Error::parse(origin, n + 1, format!("bad rank `{}`", f[4])))?;
            (s, r)
        } else {
            (default_source, 0)
        };
        out.push(LexEntry { orthography, pronunciation, tag, source, variant_rank });
    }
    Ok(out)
}

/// Orthography to ranked pronunciations.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Lexicon {
    entries: BTreeMap<String, Vec<LexEntry>>,
}

const BUNDLED_SOURCES: [(&str, Source, &str); 3] = [
    ("lexicon_a.tsv", Source::A, include_str!("../data/lexicon_a.tsv")),
    ("lexicon_b.tsv", Source::B, include_str!("../data/lexicon_b.tsv")),
    ("lexicon_c.tsv", Source::C, include_str!("../data/lexicon_c.tsv")),
];

/// The three bundled source lexica, parsed.
pub fn bundled_sources(inventory: &PhoneInventory) -> Vec<Vec<LexEntry>> {
    BUNDLED_SOURCES
        .iter()
        .map(|(name, src, text)| {
            parse_entries(text, &Path::new("<bundled>").join(name), *src, inventory).expect("bundled lexicon is valid")
        })
        .collect()
}

/// Merge source entry lists into one lexicon.
///
/// Entries are grouped by orthography and tag. Each group is reduced to a
/// single pronunciation by the policy. When an orthography has tagged
/// entries its untagged variants are dropped, since tagging already
/// separates its pronunciations.
pub fn merge_lexica(sources: &[Vec<LexEntry>], policy: &MergePolicy, inventory: &PhoneInventory) -> Result<Lexicon> {
    let rules = policy.all_rules(inventory);
    let mut groups: BTreeMap<&str, BTreeMap<Option<&str>, Vec<Candidate>>> = BTreeMap::new();
    for e in sources.iter().flatten() {
        groups
            .entry(e.orthography.as_str())
            .or_default()
            .entry(e.tag.as_deref())
            .or_default()
            .push(Candidate { pron: e.pronunciation.clone(), source: e.source });
    }
    let mut entries = BTreeMap::new();
    for (orth, mut by_tag) in groups {
        if by_tag.keys().any(Option::is_some) {
            by_tag.remove(&None);
        }
        // None sorts first, then tags alphabetically
        let mut list = Vec::with_capacity(by_tag.len());
        for (rank, (tag, cands)) in by_tag.into_iter().enumerate() {
            let c = collapse(orth, cands, &rules, policy.tie_break, inventory)?;
            list.push(LexEntry {
                orthography: orth.to_string(),
                pronunciation: c.pron,
                tag: tag.map(str::to_string),
                source: c.source,
                variant_rank: rank as u8,
            });
        }
        entries.insert(orth.to_string(), list);
    }
    Ok(Lexicon { entries })
}

impl Lexicon {
    /// The bundled sources merged under the bundled policy.
    pub fn bundled(inventory: &PhoneInventory) -> Self {
        merge_lexica(&bundled_sources(inventory), &MergePolicy::bundled(inventory), inventory)
            .expect("bundled lexica merge")
    }

    pub fn from_entries(list: impl IntoIterator<Item = LexEntry>) -> Self {
        let mut entries: BTreeMap<String, Vec<LexEntry>> = BTreeMap::new();
        for e in list {
            entries.entry(e.orthography.clone()).or_default().push(e);
        }
        for v in entries.values_mut() {
            v.sort_by_key(|e| e.variant_rank);
        }
        Lexicon { entries }
    }

    /// Entries for `orthography` in rank order, restricted to `tag` if given.
    pub fn lookup(&self, orthography: &str, tag: Option<&str>) -> Result<Vec<&LexEntry>> {
        let key = orthography.to_lowercase();
        let found: Vec<&LexEntry> = self
            .entries
            .get(&key)
            .map(|v| v.iter().filter(|e| tag.is_none() || e.tag.as_deref() == tag).collect())
            .unwrap_or_default();
        if found.is_empty() {
            let what = match tag {
                Some(t) => format!("{orthography}/{t}"),
                None => orthography.to_string(),
            };
            return Err(Error::NotFound(what));
        }
        Ok(found)
    }

    /// The first-ranked pronunciation of every orthography.
    pub fn primary_entries(&self) -> impl Iterator<Item = &LexEntry> {
        self.entries.values().filter_map(|v| v.first())
    }

    pub fn entries(&self) -> impl Iterator<Item = &LexEntry> {
        self.entries.values().flatten()
    }

    pub fn orthographies(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Number of orthographies.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry_count(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn load(path: &Path, inventory: &PhoneInventory) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::from_entries(parse_entries(&text, path, Source::Synthetic, inventory)?))
    }

    pub fn to_tsv(&self, inventory: &PhoneInventory) -> String {
        let mut out = String::from("# orth\ttag\tphones\tsource\trank\n");
        for e in self.entries() {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                e.orthography,
                e.tag.as_deref().unwrap_or(""),
                inventory.format_lexical(&e.pronunciation),
                e.source,
                e.variant_rank
            ));
        }
        out
    }

    pub fn save(&self, path: &Path, inventory: &PhoneInventory) -> Result<()> {
        std::fs::write(path, self.to_tsv(inventory))?;
        Ok(())
    }
}
