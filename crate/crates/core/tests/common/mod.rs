//! Helpers shared by the integration tests.

#![allow(dead_code)]

use std::collections::HashMap;

use lexpost::alignment::{CostModel, TableCost};
use rand::Rng;

pub const ALPHABET: [&str; 5] = ["a", "b", "c", "d", "e"];

/// Random table over [`ALPHABET`] with costs that are multiples of 1/4, so
/// every path sum is exact in floating point.
pub fn random_table<R: Rng>(rng: &mut R) -> TableCost {
    let mut q = || rng.gen_range(0..=16) as f64 / 4.0;
    let mut substitution = HashMap::new();
    let mut deletion = HashMap::new();
    let mut insertion = HashMap::new();
    for a in ALPHABET {
        deletion.insert(a.to_string(), q());
        insertion.insert(a.to_string(), q());
        for b in ALPHABET {
            substitution.insert((a.to_string(), b.to_string()), q());
        }
    }
    TableCost { substitution, deletion, insertion }
}

pub fn random_word<R: Rng>(rng: &mut R, max_len: usize) -> Vec<&'static str> {
    let n = rng.gen_range(0..=max_len);
    (0..n).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())]).collect()
}

/// Minimum cost over every monotone alignment, by explicit enumeration of
/// edit paths.
pub fn brute_force_min<M: CostModel>(src: &[&str], dst: &[&str], model: &M) -> f64 {
    fn go<M: CostModel>(src: &[&str], dst: &[&str], model: &M, acc: f64, best: &mut f64) {
        if src.is_empty() && dst.is_empty() {
            *best = best.min(acc);
            return;
        }
        if let (Some(a), Some(b)) = (src.first(), dst.first()) {
            go(&src[1..], &dst[1..], model, acc + model.substitution(a, b).unwrap(), best);
        }
        if let Some(a) = src.first() {
            go(&src[1..], dst, model, acc + model.deletion(a).unwrap(), best);
        }
        if let Some(b) = dst.first() {
            go(src, &dst[1..], model, acc + model.insertion(b).unwrap(), best);
        }
    }
    let mut best = f64::INFINITY;
    go(src, dst, model, 0.0, &mut best);
    best
}
pub mod tables;
