pub mod corpus;
pub mod correction;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod lexicon;
pub mod models;
pub mod neural;
pub mod ngram;
pub mod predictor;
pub mod tagger;

pub use error::{Error, Result};
