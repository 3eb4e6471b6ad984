//! Context-conditioned rewrite rules over lexical phones.
//!
//! A rule file holds one rule per line:
//!
//! ```text
//! NAME<TAB>pattern<TAB>predicate<TAB>rewrite<TAB>probability
//! ```
//!
//! * `pattern`: alternatives joined by `|`; each a phone symbol or `@class`
//!   where the class is a feature name or `consonant` (any non-syllabic
//!   phone).
//! * `predicate`: `-` or terms joined by ` & `. Phone keys `prev`, `next`
//!   and `prev2` to `next4` take `=`/`!=` against `|`-joined symbols, classes or
//!   `#` (beyond the utterance edge). Numeric keys `wl`, `wr` (phones to the
//!   word edge), `pl`, `pr`, `cl`, `cr`, `sl`, `sr` (words to the phrase,
//!   clause, sentence edge), `stress` and `prom` take `= != < <= > >=`.
//!   `syl` takes `onset|nucleus|coda`, `wtype` takes `function|content`.
//! * `rewrite`: `_` deletes; otherwise up to two tokens from a symbol, `@`
//!   (the matched lexical phone), `@cl` (its closure) and `$` (the output
//!   so far for this phone).
//!
//! Every rule is tested against the lexical input and its context; rules
//! run in file order and a later match replaces the output of an earlier
//! one. Several lines may share a name.

use std::path::Path;

use rand::Rng;

use super::context::{Frame, PhoneContext};
use crate::corpus::{Utterance, WordType};
use crate::error::{Error, Result};
use crate::phonology::{PhoneId, PhoneInventory, SyllablePosition};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Class {
    Feature(usize),
    Consonant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Matcher {
    Phone(PhoneId),
    Class(Class),
    Edge,
}

impl Matcher {
    fn matches(self, inv: &PhoneInventory, phone: Option<PhoneId>) -> bool {
        match (self, phone) {
            (Matcher::Edge, None) => true,
            (Matcher::Phone(p), Some(q)) => p == q,
            (Matcher::Class(Class::Feature(f)), Some(q)) => inv.features(q).get(f),
            (Matcher::Class(Class::Consonant), Some(q)) => !inv.has(q, "syllabic"),
            _ => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Op {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Op {
    fn test(self, a: i64, b: i64) -> bool {
        match self {
            Op::Eq => a == b,
            Op::Ne => a != b,
            Op::Lt => a < b,
            Op::Le => a <= b,
            Op::Gt => a > b,
            Op::Ge => a >= b,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum NumKey {
    WordLeft,
    WordRight,
    PhraseLeft,
    PhraseRight,
    ClauseLeft,
    ClauseRight,
    SentenceLeft,
    SentenceRight,
    Stress,
    Prominence,
}

impl NumKey {
    fn value(self, c: &PhoneContext) -> Option<i64> {
        Some(match self {
            NumKey::WordLeft => c.word_left as i64,
            NumKey::WordRight => c.word_right as i64,
            NumKey::PhraseLeft => c.phrase_left as i64,
            NumKey::PhraseRight => c.phrase_right as i64,
            NumKey::ClauseLeft => c.clause_left as i64,
            NumKey::ClauseRight => c.clause_right as i64,
            NumKey::SentenceLeft => c.sentence_left as i64,
            NumKey::SentenceRight => c.sentence_right as i64,
            NumKey::Stress => return c.stress.map(i64::from),
            NumKey::Prominence => c.prominence as i64,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Term {
    Phone { offset: isize, negate: bool, alts: Vec<Matcher> },
    Num { key: NumKey, op: Op, value: i64 },
    Syllable { negate: bool, position: SyllablePosition },
    WordType { negate: bool, word_type: WordType },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Token {
    Base,
    Closure,
    Current,
    Symbol(PhoneId),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub name: String,
    pattern: Vec<Matcher>,
    terms: Vec<Term>,
    rewrite: Vec<Token>,
    pub probability: f64,
    pub enabled: bool,
    /// The source line, for diagnostics.
    pub text: String,
}

impl Rule {
    fn matches(&self, inv: &PhoneInventory, frame: &Frame, i: usize) -> bool {
        let site = &frame.sites[i];
        if !self.pattern.iter().any(|m| m.matches(inv, Some(site.id))) {
            return false;
        }
        self.terms.iter().all(|t| match t {
            Term::Phone { offset, negate, alts } => {
                let p = frame.neighbour(i, *offset);
                alts.iter().any(|m| m.matches(inv, p)) != *negate
            }
            Term::Num { key, op, value } => key.value(&site.context).is_some_and(|v| op.test(v, *value)),
            Term::Syllable { negate, position } => (site.context.syllable == *position) != *negate,
            Term::WordType { negate, word_type } => (site.context.word_type == *word_type) != *negate,
        })
    }

    fn rewrite(&self, inv: &PhoneInventory, base: PhoneId, current: &[PhoneId]) -> Result<Vec<PhoneId>> {
        let mut out = Vec::with_capacity(2);
        for tok in &self.rewrite {
            match tok {
                Token::Base => out.push(base),
                Token::Closure => out.push(closure_of(inv, base).ok_or_else(|| {
                    Error::RuleConflict(format!("{}: `{}` has no closure symbol", self.name, inv.symbol(base)))
                })?),
                Token::Current => out.extend_from_slice(current),
                Token::Symbol(p) => out.push(*p),
            }
        }
        if out.len() > 2 {
            return Err(Error::RuleConflict(format!(
                "{} rewrites `{}` as {} symbols `{}`",
                self.name,
                inv.symbol(base),
                out.len(),
                inv.format(&out)
            )));
        }
        Ok(out)
    }
}

fn closure_of(inv: &PhoneInventory, base: PhoneId) -> Option<PhoneId> {
    inv.id(&format!("{}cl", inv.symbol(base))).ok()
}

fn parse_matcher(tok: &str, inv: &PhoneInventory, allow_edge: bool) -> Result<Matcher> {
    if tok == "#" && allow_edge {
        return Ok(Matcher::Edge);
    }
    if let Some(class) = tok.strip_prefix('@') {
        if class == "consonant" {
            return Ok(Matcher::Class(Class::Consonant));
        }
        return inv
            .feature_index(class)
            .map(|f| Matcher::Class(Class::Feature(f)))
            .ok_or_else(|| Error::Invalid(format!("unknown class `@{class}`")));
    }
    let id = inv.id(tok)?;
    if !inv.phone(id).alphabet.is_lexical() {
        return Err(Error::Invalid(format!("`{tok}` is not a lexical phone")));
    }
    Ok(Matcher::Phone(id))
}

fn parse_term(text: &str, inv: &PhoneInventory) -> Result<Term> {
    let ops = [("<=", Op::Le), (">=", Op::Ge), ("!=", Op::Ne), ("=", Op::Eq), ("<", Op::Lt), (">", Op::Gt)];
    let (pos, sym, op) = ops
        .iter()
        .filter_map(|(s, op)| text.find(s).map(|p| (p, *s, *op)))
        .min_by_key(|(p, s, _)| (*p, std::cmp::Reverse(s.len())))
        .ok_or_else(|| Error::Invalid(format!("no operator in `{text}`")))?;
    let key = text[..pos].trim();
    let value = text[pos + sym.len()..].trim();
    let eq_only = |op: Op| -> Result<bool> {
        match op {
            Op::Eq => Ok(false),
            Op::Ne => Ok(true),
            _ => Err(Error::Invalid(format!("`{key}` only supports = and !=")))
        }
    };
    let offset = match key {
        "prev" => Some(-1),
        "next" => Some(1),
        _ => ["prev", "next"].iter().zip([-1, 1]).find_map(|(p, sign)| {
            let n: isize = key.strip_prefix(p)?.parse().ok()?;
            (2..=4).contains(&n).then_some(sign * n)
        }),
    };
    if let Some(offset) = offset {
        let alts = value.split('|').map(|t| parse_matcher(t.trim(), inv, true)).collect::<Result<_>>()?;
        return Ok(Term::Phone { offset, negate: eq_only(op)?, alts });
    }
    match key {
        "syl" => {
            let position = match value {
                "onset" => SyllablePosition::Onset,
                "nucleus" => SyllablePosition::Nucleus,
                "coda" => SyllablePosition::Coda,
                _ => return Err(Error::Invalid(format!("unknown syllable position `{value}`"))),
            };
            Ok(Term::Syllable { negate: eq_only(op)?, position })
        }
        "wtype" => Ok(Term::WordType { negate: eq_only(op)?, word_type: value.parse()? }),
        _ => {
            let key = match key {
                "wl" => NumKey::WordLeft,
                "wr" => NumKey::WordRight,
                "pl" => NumKey::PhraseLeft,
                "pr" => NumKey::PhraseRight,
                "cl" => NumKey::ClauseLeft,
                "cr" => NumKey::ClauseRight,
                "sl" => NumKey::SentenceLeft,
                "sr" => NumKey::SentenceRight,
                "stress" => NumKey::Stress,
                "prom" => NumKey::Prominence,
                other => return Err(Error::Invalid(format!("unknown predicate key `{other}`"))),
            };
            let value = value.parse().map_err(|_| Error::Invalid(format!("`{value}` is not an integer")))?;
            Ok(Term::Num { key, op, value })
        }
    }
}

fn parse_rewrite(text: &str, inv: &PhoneInventory) -> Result<Vec<Token>> {
    if text == "_" {
        return Ok(Vec::new());
    }
    let toks: Vec<Token> = text
        .split_whitespace()
        .map(|t| match t {
            "@" => Ok(Token::Base),
            "@cl" => Ok(Token::Closure),
            "$" => Ok(Token::Current),
            sym => {
                let id = inv.id(sym)?;
                if !inv.phone(id).alphabet.is_postlexical() {
                    return Err(Error::RuleConflict(format!("`{sym}` is not a postlexical phone")));
                }
                Ok(Token::Symbol(id))
            }
        })
        .collect::<Result<_>>()?;
    if toks.is_empty() {
        return Err(Error::Invalid("empty rewrite (use `_` to delete)".into()));
    }
    if toks.len() > 2 {
        return Err(Error::RuleConflict(format!("rewrite `{text}` has more than two symbols")));
    }
    Ok(toks)
}

/// An ordered rule list producing postlexical phones from lexical ones.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleOracle {
    pub rules: Vec<Rule>,
}

const BUNDLED_RULES: &str = include_str!("../../data/default.rules");

impl RuleOracle {
    pub fn bundled(inventory: &PhoneInventory) -> Self {
        Self::parse(BUNDLED_RULES, Path::new("<bundled>/default.rules"), inventory).expect("bundled rules are valid")
    }

    pub fn load(path: &Path, inventory: &PhoneInventory) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, path, inventory)
    }

    pub fn parse(text: &str, origin: &Path, inventory: &PhoneInventory) -> Result<Self> {
        let mut rules = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let wrap = |e: Error| match e {
                Error::RuleConflict(m) => Error::RuleConflict(format!("{}:{}: {m}", origin.display(), n + 1)),
                other => Error::parse(origin, n + 1, other.to_string()),
            };
            let f: Vec<&str> = line.split('\t').map(str::trim).collect();
            if f.len() != 5 {
                return Err(Error::parse(origin, n + 1, format!("expected 5 tab-separated fields, found {}", f.len())));
            }
            let pattern: Vec<Matcher> =
                f[1].split('|').map(|t| parse_matcher(t.trim(), inventory, false)).collect::<Result<_>>().map_err(wrap)?;
            let terms = if f[2] == "-" || f[2].is_empty() {
                Vec::new()
            } else {
                f[2].split('&').map(|t| parse_term(t.trim(), inventory)).collect::<Result<_>>().map_err(wrap)?
            };
            let rewrite = parse_rewrite(f[3], inventory).map_err(wrap)?;
            let probability: f64 =
                f[4].parse().map_err(|_| Error::parse(origin, n + 1, format!("bad probability `{}`", f[4])))?;
            if !(0.0..=1.0).contains(&probability) {
                return Err(Error::parse(origin, n + 1, "probability must lie in [0, 1]"));
            }
            let rule = Rule { name: f[0].to_string(), pattern, terms, rewrite, probability, enabled: true, text: line.to_string() };
            if rule.rewrite.contains(&Token::Closure) {
                for m in &rule.pattern {
                    if let Matcher::Phone(p) = m {
                        if closure_of(inventory, *p).is_none() {
                            return Err(wrap(Error::RuleConflict(format!("`{}` has no closure symbol", inventory.symbol(*p)))));
                        }
                    }
                }
            }
            rules.push(rule);
        }
        Ok(RuleOracle { rules })
    }

    /// Distinct rule names in file order.
    pub fn names(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rules {
            if !out.contains(&r.name.as_str()) {
                out.push(&r.name);
            }
        }
        out
    }

    /// Enable or disable every line named `name`; returns how many matched.
    pub fn set_enabled(&mut self, name: &str, enabled: bool) -> usize {
        let mut n = 0;
        for r in self.rules.iter_mut().filter(|r| r.name == name) {
            r.enabled = enabled;
            n += 1;
        }
        n
    }

    /// Keep only the named rules enabled.
    pub fn enable_only(&mut self, names: &[&str]) {
        for r in &mut self.rules {
            r.enabled = names.contains(&r.name.as_str());
        }
    }

    pub fn is_deterministic(&self) -> bool {
        self.rules.iter().all(|r| !r.enabled || r.probability == 0.0 || r.probability == 1.0)
    }

    /// Postlexical chunk for every lexical phone of `utt`, in order.
    pub fn chunks<R: Rng + ?Sized>(&self, inventory: &PhoneInventory, utt: &Utterance, rng: &mut R) -> Result<Vec<Vec<PhoneId>>> {
        let frame = Frame::new(inventory, utt);
        let mut out = Vec::with_capacity(frame.len());
        for i in 0..frame.len() {
            let base = frame.sites[i].id;
            let mut chunk = vec![base];
            for rule in self.rules.iter().filter(|r| r.enabled && r.probability > 0.0) {
                if !rule.matches(inventory, &frame, i) {
                    continue;
                }
                if rule.probability < 1.0 && !rng.gen_bool(rule.probability) {
                    continue;
                }
                chunk = rule.rewrite(inventory, base, &chunk)?;
            }
            for &p in &chunk {
                if !inventory.phone(p).alphabet.is_postlexical() {
                    return Err(Error::RuleConflict(format!("`{}` is not a postlexical phone", inventory.symbol(p))));
                }
            }
            out.push(chunk);
        }
        Ok(out)
    }

    /// A copy of `utt` whose postlexical tier is the oracle's output. The
    /// output depends only on the lexical tier and annotations.
    pub fn apply<R: Rng + ?Sized>(&self, inventory: &PhoneInventory, utt: &Utterance, rng: &mut R) -> Result<Utterance> {
        let chunks = self.chunks(inventory, utt, rng)?;
        let mut out = utt.clone();
        let mut it = chunks.into_iter();
        for w in &mut out.words {
            w.postlex = it.by_ref().take(w.lexical.len()).flatten().collect();
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::WordToken;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn inv() -> PhoneInventory {
        PhoneInventory::bundled()
    }

    fn utt(inv: &PhoneInventory, words: &[(&str, &str, WordType)]) -> Utterance {
        let toks = words
            .iter()
            .map(|(o, p, t)| WordToken {
                orthography: o.to_string(),
                tag: None,
                lexical: inv.parse_lexical(p).unwrap(),
                postlex: Vec::new(),
                word_type: *t,
                prominence: u8::from(*t == WordType::Content),
            })
            .collect();
        Utterance::new("t", toks)
    }

    fn run(oracle: &RuleOracle, inv: &PhoneInventory, u: &Utterance) -> Vec<String> {
        let out = oracle.apply(inv, u, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        out.words.iter().map(|w| inv.format(&w.postlex)).collect()
    }

    use WordType::{Content as C, Function as F};

    #[test]
    fn fed_final_stop_unreleased() {
        let inv = inv();
        let o = RuleOracle::bundled(&inv);
        assert_eq!(run(&o, &inv, &utt(&inv, &[("fed", "f eh1 d", C)])), ["f eh dcl"]);
    }

    #[test]
    fn in_her_voices_h() {
        let inv = inv();
        let o = RuleOracle::bundled(&inv);
        let out = run(&o, &inv, &utt(&inv, &[("in", "ih0 n", F), ("her", "hh er0", F)]));
        assert_eq!(out, ["ix n", "hv er"]);
    }

    #[test]
    fn no_trigger_means_identity() {
        let inv = inv();
        let o = RuleOracle::bundled(&inv);
        let u = utt(&inv, &[("some", "s ah1 m", C), ("fish", "f ih1 sh", C)]);
        assert_eq!(run(&o, &inv, &u), ["s ah m", "f ih sh"]);
    }

    #[test]
    fn all_disabled_is_identity() {
        let inv = inv();
        let mut o = RuleOracle::bundled(&inv);
        o.enable_only(&[]);
        let u = utt(&inv, &[("abrupt", "ah0 b r ah1 p t", C), ("start", "s t aa1 r t", C)]);
        assert_eq!(run(&o, &inv, &u), ["ah b r ah p t", "s t aa r t"]);
    }

    #[test]
    fn abrupt_start() {
        let inv = inv();
        let o = RuleOracle::bundled(&inv);
        let u = utt(&inv, &[("abrupt", "ah0 b r ah1 p t", C), ("start", "s t aa1 r t", C)]);
        assert_eq!(run(&o, &inv, &u), ["ah bcl b r ah pcl", "s tcl t aa r tcl"]);
    }

    #[test]
    fn rewrite_overflow_is_conflict() {
        let inv = inv();
        let err = RuleOracle::parse("X\tt\t-\tq t t\t1\n", Path::new("r"), &inv).unwrap_err();
        assert!(matches!(err, Error::RuleConflict(_)), "{err}");
        let o = RuleOracle::parse("A\tt\t-\t@cl @\t1\nB\tt\t-\tq $\t1\n", Path::new("r"), &inv).unwrap();
        let u = utt(&inv, &[("at", "ae1 t", C)]);
        assert!(matches!(o.apply(&inv, &u, &mut ChaCha8Rng::seed_from_u64(0)), Err(Error::RuleConflict(_))));
    }

    #[test]
    fn parse_errors() {
        let inv = inv();
        for bad in [
            "X\tt\tprev=zz\tq\t1",
            "X\tt\tfoo=1\tq\t1",
            "X\tdx\t-\tq\t1",
            "X\tt\t-\tt\t1.5",
            "X\tt\t-\tq",
            "X\tt\tsyl<onset\tq\t1",
            "X\ts\t-\t@cl\t1",
        ] {
            assert!(RuleOracle::parse(bad, Path::new("r"), &inv).is_err(), "{bad}");
        }
        let err = RuleOracle::parse("# c\nX\tt\t-\tzz\t1\n", Path::new("r.rules"), &inv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn probability_is_per_opportunity() {
        let inv = inv();
        let o = RuleOracle::parse("F\tt\t-\tdx\t0.5\n", Path::new("r"), &inv).unwrap();
        assert!(!o.is_deterministic());
        let u = utt(&inv, &(0..200).map(|_| ("t", "t", C)).collect::<Vec<_>>());
        let out = o.apply(&inv, &u, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let flaps = out.words.iter().filter(|w| inv.symbol(w.postlex[0]) == "dx").count();
        assert!((60..140).contains(&flaps), "{flaps}");
        let again = o.apply(&inv, &u, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(out, again);
    }
}
