//! Trainable phonematizer and postlexical pronunciation models.
//!
//! Orthography is mapped to lexical phones by a windowed letter classifier,
//! and lexical phones to postlexical (surface) phones by a windowed phone
//! classifier that also sees word, phrase and stress context.

pub mod alignment;
pub mod corpus;
pub mod error;
pub mod evalkit;
pub mod labels;
pub mod lexicon;
pub mod neuralnet;
pub mod phonematizer;
pub mod phonology;
pub mod postlex;

pub use error::{Error, Result};
