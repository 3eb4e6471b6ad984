//! Minimum-cost monotone alignment of two symbol sequences.
//!
//! The same dynamic program aligns letters with lexical phones (phonematizer
//! training data) and lexical with postlexical phones (postlexical training
//! data); only the [`CostModel`] differs. [`chunk_alignment`] then groups the
//! destination symbols by source position, which is the label unit of both
//! classifiers.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::phonology::{LetterModels, PhoneId, PhoneInventory};

/// Default cost of an insertion or deletion.
pub const DEFAULT_GAP_COST: f64 = 1.0;
/// Default cost of a documented allophone substitution.
pub const DEFAULT_ALLOPHONE_COST: f64 = 0.1;
/// Added to a lexical to postlexical substitution that changes syllabicity
/// without an allophone entry, so a deleted vowel next to an inserted
/// consonant aligns as a deletion and an insertion.
pub const SYLLABICITY_PENALTY: f64 = 2.0;

/// Prices edit operations between a source and a destination alphabet.
///
/// All costs must be finite and non-negative.
pub trait CostModel {
    fn substitution(&self, src: &str, dst: &str) -> Result<f64>;
    /// Cost of leaving `src` unpaired.
    fn deletion(&self, src: &str) -> Result<f64>;
    /// Cost of leaving `dst` unpaired.
    fn insertion(&self, dst: &str) -> Result<f64>;
}

/// One aligned position. At least one side is present.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub src: Option<usize>,
    pub dst: Option<usize>,
    pub cost: f64,
}

impl Step {
    pub fn is_substitution(&self) -> bool {
        self.src.is_some() && self.dst.is_some()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Alignment {
    pub steps: Vec<Step>,
    pub total_cost: f64,
    pub src_len: usize,
    pub dst_len: usize,
}

impl Alignment {
    /// Checks monotonicity and coverage of both index sequences.
    pub fn validate(&self) -> Result<()> {
        let (mut next_src, mut next_dst) = (0, 0);
        for (k, step) in self.steps.iter().enumerate() {
            if step.src.is_none() && step.dst.is_none() {
                return Err(Error::Invalid(format!("step {k} is empty")));
            }
            if let Some(s) = step.src {
                if s != next_src {
                    return Err(Error::Invalid(format!("step {k}: source index {s}, expected {next_src}")));
                }
                next_src += 1;
            }
            if let Some(d) = step.dst {
                if d != next_dst {
                    return Err(Error::Invalid(format!("step {k}: target index {d}, expected {next_dst}")));
                }
                next_dst += 1;
            }
        }
        if next_src != self.src_len || next_dst != self.dst_len {
            return Err(Error::Invalid("alignment does not cover both sequences".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Op {
    Sub,
    Del,
    Ins,
}

fn checked(cost: f64, what: &str) -> Result<f64> {
    if cost.is_finite() && cost >= 0.0 {
        Ok(cost)
    } else {
        Err(Error::Invalid(format!("cost for {what} is {cost}")))
    }
}

/// Global minimum-cost alignment.
///
/// Ties prefer substitution, then deletion, then insertion, decided cell by
/// cell during the fill; the traceback is therefore deterministic.
pub fn align<S, T, M>(src: &[S], dst: &[T], model: &M) -> Result<Alignment>
where
    S: AsRef<str>,
    T: AsRef<str>,
    M: CostModel + ?Sized,
{
    let (n, m) = (src.len(), dst.len());
    let del: Vec<f64> = src
        .iter()
        .map(|s| model.deletion(s.as_ref()).and_then(|c| checked(c, s.as_ref())))
        .collect::<Result<_>>()?;
    let ins: Vec<f64> = dst
        .iter()
        .map(|d| model.insertion(d.as_ref()).and_then(|c| checked(c, d.as_ref())))
        .collect::<Result<_>>()?;
    let mut sub = vec![0.0; n * m];
    for (i, s) in src.iter().enumerate() {
        for (j, d) in dst.iter().enumerate() {
            sub[i * m + j] = checked(model.substitution(s.as_ref(), d.as_ref())?, s.as_ref())?;
        }
    }

    let w = m + 1;
    let mut cost = vec![0.0f64; (n + 1) * w];
    let mut back = vec![Op::Sub; (n + 1) * w];
    for i in 1..=n {
        cost[i * w] = cost[(i - 1) * w] + del[i - 1];
        back[i * w] = Op::Del;
    }
    for j in 1..=m {
        cost[j] = cost[j - 1] + ins[j - 1];
        back[j] = Op::Ins;
    }
    for i in 1..=n {
        for j in 1..=m {
            let s = cost[(i - 1) * w + j - 1] + sub[(i - 1) * m + j - 1];
            let d = cost[(i - 1) * w + j] + del[i - 1];
            let a = cost[i * w + j - 1] + ins[j - 1];
            let (best, op) = if s <= d && s <= a {
                (s, Op::Sub)
            } else if d <= a {
                (d, Op::Del)
            } else {
                (a, Op::Ins)
            };
            cost[i * w + j] = best;
            back[i * w + j] = op;
        }
    }

    let mut steps = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        match back[i * w + j] {
            Op::Sub => {
                steps.push(Step { src: Some(i - 1), dst: Some(j - 1), cost: sub[(i - 1) * m + j - 1] });
                i -= 1;
                j -= 1;
            }
            Op::Del => {
                steps.push(Step { src: Some(i - 1), dst: None, cost: del[i - 1] });
                i -= 1;
            }
            Op::Ins => {
                steps.push(Step { src: None, dst: Some(j - 1), cost: ins[j - 1] });
                j -= 1;
            }
        }
    }
    steps.reverse();
    Ok(Alignment { steps, total_cost: cost[n * w + m], src_len: n, dst_len: m })
}

/// The destination symbols owned by one source position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chunk {
    pub src: usize,
    pub dst: Vec<usize>,
}

/// Which neighbour an inserted destination symbol joins.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// An inserted destination symbol and its candidate owners.
#[derive(Clone, Copy, Debug)]
pub struct InsertionSite {
    pub dst: usize,
    pub left_src: Option<usize>,
    pub right_src: Option<usize>,
}

/// Most destination symbols a single source position may own.
pub const MAX_CHUNK: usize = 2;

/// Group destination symbols by source position, attaching insertions to the
/// preceding source symbol.
pub fn chunk_alignment(a: &Alignment) -> Result<Vec<Chunk>> {
    chunk_alignment_with(a, |_| Side::Left)
}

/// Group destination symbols by source position.
///
/// `choose` decides where each insertion goes. Insertions at the sequence
/// edges go to the only neighbour available. Within a run of consecutive
/// insertions, once one attaches right the rest follow so that destination
/// order is preserved.
pub fn chunk_alignment_with<F>(a: &Alignment, mut choose: F) -> Result<Vec<Chunk>>
where
    F: FnMut(InsertionSite) -> Side,
{
    let mut chunks: Vec<Chunk> = (0..a.src_len).map(|src| Chunk { src, dst: Vec::new() }).collect();
    if a.src_len == 0 {
        return if a.dst_len == 0 {
            Ok(chunks)
        } else {
            Err(Error::Invalid("insertions without any source symbol".into()))
        };
    }
    let mut prev_src: Option<usize> = None;
    let mut k = 0;
    while k < a.steps.len() {
        let step = a.steps[k];
        if let Some(s) = step.src {
            if let Some(d) = step.dst {
                chunks[s].dst.push(d);
            }
            prev_src = Some(s);
            k += 1;
            continue;
        }
        // a run of insertions
        let start = k;
        while k < a.steps.len() && a.steps[k].src.is_none() {
            k += 1;
        }
        let next_src = a.steps.get(k).and_then(|s| s.src);
        let mut pending_right = Vec::new();
        for step in &a.steps[start..k] {
            let d = step.dst.expect("insertion has a target");
            let side = match (prev_src, next_src) {
                (None, _) => Side::Right,
                (_, None) => Side::Left,
                _ if !pending_right.is_empty() => Side::Right,
                (l, r) => choose(InsertionSite { dst: d, left_src: l, right_src: r }),
            };
            match side {
                Side::Left => chunks[prev_src.unwrap()].dst.push(d),
                Side::Right => pending_right.push(d),
            }
        }
        if let Some(r) = next_src {
            let mut dst = pending_right;
            dst.append(&mut chunks[r].dst);
            chunks[r].dst = dst;
        }
    }
    for c in &chunks {
        if c.dst.len() > MAX_CHUNK {
            return Err(Error::OverfullChunk { index: c.src, count: c.dst.len() });
        }
    }
    Ok(chunks)
}

/// Group destination symbols by source position, sending each insertion to
/// the neighbouring source symbol with the cheaper substitution cost for it
/// (left on ties).
pub fn chunk_by_affinity<S, T, M>(a: &Alignment, src: &[S], dst: &[T], model: &M) -> Result<Vec<Chunk>>
where
    S: AsRef<str>,
    T: AsRef<str>,
    M: CostModel + ?Sized,
{
    let mut failure = None;
    let chunks = chunk_alignment_with(a, |site| {
        let d = dst[site.dst].as_ref();
        let l = model.substitution(src[site.left_src.unwrap()].as_ref(), d);
        let r = model.substitution(src[site.right_src.unwrap()].as_ref(), d);
        match (l, r) {
            (Ok(l), Ok(r)) if r < l => Side::Right,
            (Ok(_), Ok(_)) => Side::Left,
            (Err(e), _) | (_, Err(e)) => {
                failure.get_or_insert(e);
                Side::Left
            }
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(chunks),
    }
}

/// Zero for identical symbols, one otherwise, unit gaps.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityCost;

impl CostModel for IdentityCost {
    fn substitution(&self, src: &str, dst: &str) -> Result<f64> {
        Ok(if src == dst { 0.0 } else { 1.0 })
    }
    fn deletion(&self, _: &str) -> Result<f64> {
        Ok(DEFAULT_GAP_COST)
    }
    fn insertion(&self, _: &str) -> Result<f64> {
        Ok(DEFAULT_GAP_COST)
    }
}

/// Explicit cost tables; symbols missing from a table cannot be priced.
#[derive(Clone, Debug, Default)]
pub struct TableCost {
    pub substitution: HashMap<(String, String), f64>,
    pub deletion: HashMap<String, f64>,
    pub insertion: HashMap<String, f64>,
}

impl CostModel for TableCost {
    fn substitution(&self, src: &str, dst: &str) -> Result<f64> {
        self.substitution
            .get(&(src.to_string(), dst.to_string()))
            .copied()
            .ok_or_else(|| Error::SymbolOutsideModel(format!("{src}/{dst}")))
    }
    fn deletion(&self, src: &str) -> Result<f64> {
        self.deletion.get(src).copied().ok_or_else(|| Error::SymbolOutsideModel(src.into()))
    }
    fn insertion(&self, dst: &str) -> Result<f64> {
        self.insertion.get(dst).copied().ok_or_else(|| Error::SymbolOutsideModel(dst.into()))
    }
}

/// Letter-to-phone costs derived from the letter models.
///
/// A candidate phone of the letter costs nothing; any other phone costs
/// `(K - overlap) / K` where `K` is the feature count and `overlap` the
/// number of features shared by the letter and the phone.
pub struct LetterPhoneCost<'a> {
    inventory: &'a PhoneInventory,
    letters: &'a LetterModels,
    gap: f64,
    gap_overrides: HashMap<String, f64>,
}

impl<'a> LetterPhoneCost<'a> {
    pub fn new(inventory: &'a PhoneInventory, letters: &'a LetterModels) -> Self {
        LetterPhoneCost { inventory, letters, gap: DEFAULT_GAP_COST, gap_overrides: HashMap::new() }
    }

    /// Override the gap cost for one letter or phone symbol.
    pub fn with_gap_cost(mut self, symbol: &str, cost: f64) -> Self {
        self.gap_overrides.insert(symbol.to_string(), cost);
        self
    }

    pub fn cost(&self, letter: char, phone: &str) -> Result<f64> {
        let model = self.letters.get(letter)?;
        let id = self.inventory.id(phone)?;
        if model.candidates.contains(&id) {
            return Ok(0.0);
        }
        let k = self.inventory.feature_count() as f64;
        let overlap = model.features(self.inventory).overlap(self.inventory.features(id)) as f64;
        Ok((k - overlap) / k)
    }

    fn letter(s: &str) -> Result<char> {
        let mut it = s.chars();
        match (it.next(), it.next()) {
            (Some(c), None) => Ok(c),
            _ => Err(Error::SymbolOutsideModel(s.to_string())),
        }
    }
}

impl CostModel for LetterPhoneCost<'_> {
    fn substitution(&self, src: &str, dst: &str) -> Result<f64> {
        self.cost(Self::letter(src)?, dst)
    }
    fn deletion(&self, src: &str) -> Result<f64> {
        self.letters.get(Self::letter(src)?)?;
        Ok(self.gap_overrides.get(src).copied().unwrap_or(self.gap))
    }
    fn insertion(&self, dst: &str) -> Result<f64> {
        self.inventory.id(dst)?;
        Ok(self.gap_overrides.get(dst).copied().unwrap_or(self.gap))
    }
}

/// Documented lexical/postlexical allophone pairs with their costs.
#[derive(Clone, Debug, Default)]
pub struct AllophoneTable {
    pairs: HashMap<(PhoneId, PhoneId), f64>,
}

const BUNDLED_ALLOPHONES: &str = include_str!("../data/allophones.tsv");

impl AllophoneTable {
    pub fn bundled(inventory: &PhoneInventory) -> Self {
        Self::parse(BUNDLED_ALLOPHONES, Path::new("<bundled>/allophones.tsv"), inventory)
            .expect("bundled allophone table is valid")
    }

    pub fn load(path: &Path, inventory: &PhoneInventory) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, path, inventory)
    }

    pub fn parse(text: &str, origin: &Path, inventory: &PhoneInventory) -> Result<Self> {
        let mut pairs = HashMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(Error::parse(origin, n + 1, "expected lexical<TAB>postlexical<TAB>cost"));
            }
            let lex = inventory.id(f[0]).map_err(|e| e.at(format!("{}:{}", origin.display(), n + 1)))?;
            let post = inventory.id(f[1]).map_err(|e| e.at(format!("{}:{}", origin.display(), n + 1)))?;
            let cost: f64 = f[2]
                .parse()
                .map_err(|_| Error::parse(origin, n + 1, format!("bad cost `{}`", f[2])))?;
            if !(cost.is_finite() && cost >= 0.0) {
                return Err(Error::parse(origin, n + 1, "cost must be finite and non-negative"));
            }
            pairs.insert((lex, post), cost);
        }
        Ok(AllophoneTable { pairs })
    }

    pub fn get(&self, lex: PhoneId, post: PhoneId) -> Option<f64> {
        self.pairs.get(&(lex, post)).copied()
    }

    pub fn insert(&mut self, lex: PhoneId, post: PhoneId, cost: f64) {
        self.pairs.insert((lex, post), cost);
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Lexical-to-postlexical costs: zero for identity, the table cost for a
/// documented allophone pair, otherwise one minus the feature overlap
/// fraction.
pub struct LexPostlexCost<'a> {
    inventory: &'a PhoneInventory,
    allophones: &'a AllophoneTable,
    gap: f64,
    gap_overrides: HashMap<PhoneId, f64>,
}

impl<'a> LexPostlexCost<'a> {
    pub fn new(inventory: &'a PhoneInventory, allophones: &'a AllophoneTable) -> Self {
        LexPostlexCost { inventory, allophones, gap: DEFAULT_GAP_COST, gap_overrides: HashMap::new() }
    }

    pub fn with_gap_cost(mut self, symbol: &str, cost: f64) -> Result<Self> {
        let id = self.inventory.id(symbol)?;
        self.gap_overrides.insert(id, cost);
        Ok(self)
    }

    pub fn cost_ids(&self, lex: PhoneId, post: PhoneId) -> f64 {
        if lex == post {
            return 0.0;
        }
        if let Some(c) = self.allophones.get(lex, post) {
            return c;
        }
        let base = 1.0 - self.inventory.features(lex).overlap_fraction(self.inventory.features(post));
        if self.inventory.has(lex, "syllabic") != self.inventory.has(post, "syllabic") {
            base + SYLLABICITY_PENALTY
        } else {
            base
        }
    }

    /// Cost of realizing lexical `lex` as postlexical `post`.
    pub fn cost(&self, lex: &str, post: &str) -> Result<f64> {
        let (l, p) = (self.lexical(lex)?, self.postlexical(post)?);
        Ok(self.cost_ids(l, p))
    }

    fn lexical(&self, sym: &str) -> Result<PhoneId> {
        let id = self.inventory.id(sym)?;
        if !self.inventory.phone(id).alphabet.is_lexical() {
            return Err(Error::unknown_symbol_at(sym, "lexical alphabet"));
        }
        Ok(id)
    }

    fn postlexical(&self, sym: &str) -> Result<PhoneId> {
        let id = self.inventory.id(sym)?;
        if !self.inventory.phone(id).alphabet.is_postlexical() {
            return Err(Error::unknown_symbol_at(sym, "postlexical alphabet"));
        }
        Ok(id)
    }

    fn gap_for(&self, id: PhoneId) -> f64 {
        self.gap_overrides.get(&id).copied().unwrap_or(self.gap)
    }

    /// Attachment preference for an inserted postlexical symbol: it joins
    /// the neighbouring lexical phone it is cheaper to substitute for,
    /// preferring the left one on ties.
    pub fn affinity(&self, left: PhoneId, inserted: PhoneId, right: PhoneId) -> Side {
        if self.cost_ids(right, inserted) < self.cost_ids(left, inserted) {
            Side::Right
        } else {
            Side::Left
        }
    }

    /// Align two phone-id sequences and chunk by lexical position using
    /// [`affinity`](Self::affinity) attachment.
    pub fn align_and_chunk(&self, lex: &[PhoneId], post: &[PhoneId]) -> Result<(Alignment, Vec<Chunk>)> {
        let a = align_ids(lex, post, self)?;
        let chunks = chunk_alignment_with(&a, |site| {
            self.affinity(lex[site.left_src.unwrap()], post[site.dst], lex[site.right_src.unwrap()])
        })?;
        Ok((a, chunks))
    }
}

impl CostModel for LexPostlexCost<'_> {
    fn substitution(&self, src: &str, dst: &str) -> Result<f64> {
        self.cost(src, dst)
    }
    fn deletion(&self, src: &str) -> Result<f64> {
        Ok(self.gap_for(self.lexical(src)?))
    }
    fn insertion(&self, dst: &str) -> Result<f64> {
        Ok(self.gap_for(self.postlexical(dst)?))
    }
}

/// [`align`] over phone ids, priced through `model` by symbol.
pub fn align_ids(lex: &[PhoneId], post: &[PhoneId], model: &LexPostlexCost<'_>) -> Result<Alignment> {
    let src: Vec<&str> = lex.iter().map(|&id| model.inventory.symbol(id)).collect();
    let dst: Vec<&str> = post.iter().map(|&id| model.inventory.symbol(id)).collect();
    align(&src, &dst, model)
}
