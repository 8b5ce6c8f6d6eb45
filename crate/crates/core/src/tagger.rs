//! Per-word category assignment and phrase segmentation.
//!
//! Each word passes through five recurrent networks in order: basic
//! syntactic and basic semantic disambiguation, abstract syntactic and
//! abstract semantic categorization, and phrase-start detection. Every
//! network keeps its own context, so the annotation of a word depends only
//! on the words before it.

use serde::Serialize;

use crate::correction::{Deletion, DeletionReason};
use crate::error::{Error, Result};
use crate::lexicon::{Axis, CategoryVector, Lexicon, Lookup};
use crate::models::{Models, NetId};
use crate::neural::combine_two_unit_output;

/// Combined phrase-start output at or above this value opens a new phrase.
pub const BOUNDARY_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct TokenAnnotation {
    pub word: String,
    pub known: bool,
    pub basic_syn: CategoryVector,
    pub abs_syn: CategoryVector,
    pub basic_sem: CategoryVector,
    pub abs_sem: CategoryVector,
    pub phrase_start: f64,
    pub deleted: Option<Deletion>,
}

impl TokenAnnotation {
    /// Argmax abbreviations in the order basic syn, abstract syn, basic sem,
    /// abstract sem.
    pub fn labels(&self) -> [&'static str; 4] {
        [
            self.basic_syn.argmax_label(),
            self.abs_syn.argmax_label(),
            self.basic_sem.argmax_label(),
            self.abs_sem.argmax_label(),
        ]
    }

    pub fn is_deleted(&self) -> bool {
        self.deleted.is_some()
    }

    pub fn deletion_reason(&self) -> Option<DeletionReason> {
        self.deleted.as_ref().map(|d| d.reason)
    }

    pub fn starts_phrase(&self) -> bool {
        self.phrase_start >= BOUNDARY_THRESHOLD
    }

    /// Annotation assigned without running any network: lexicon memberships,
    /// interjection group, miscellaneous, and an immediate deletion mark.
    pub fn symbolic(word: &str, lookup: &Lookup, reason: DeletionReason) -> Self {
        TokenAnnotation {
            word: word.to_string(),
            known: lookup.known,
            basic_syn: lookup.syn.clone(),
            abs_syn: CategoryVector::one_hot(Axis::AbsSyn, Axis::AbsSyn.index_of("IG").unwrap_or(0)),
            basic_sem: lookup.sem.clone(),
            abs_sem: CategoryVector::one_hot(Axis::AbsSem, Axis::AbsSem.index_of("MISC").unwrap_or(0)),
            phrase_start: 1.0,
            deleted: Some(Deletion::symbolic(reason)),
        }
    }
}

/// Recurrent contexts of the five category networks.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggerState {
    syn_dis: Vec<f64>,
    sem_dis: Vec<f64>,
    abs_syn: Vec<f64>,
    abs_sem: Vec<f64>,
    phrase: Vec<f64>,
    position: usize,
}

impl TaggerState {
    pub fn new(models: &Models) -> Self {
        let zeros = |id: NetId| models.get(id).zero_context();
        TaggerState {
            syn_dis: zeros(NetId::BasSynDis),
            sem_dis: zeros(NetId::BasSemDis),
            abs_syn: zeros(NetId::AbsSynCat),
            abs_sem: zeros(NetId::AbsSemCat),
            phrase: zeros(NetId::PhraseStart),
            position: 0,
        }
    }

    /// Words tagged since the last reset.
    pub fn position(&self) -> usize {
        self.position
    }

    pub fn reset(&mut self) {
        for c in [
            &mut self.syn_dis,
            &mut self.sem_dis,
            &mut self.abs_syn,
            &mut self.abs_sem,
            &mut self.phrase,
        ] {
            c.iter_mut().for_each(|x| *x = 0.0);
        }
        self.position = 0;
    }
}

fn step(models: &Models, id: NetId, context: &mut Vec<f64>, input: &[f64]) -> Vec<f64> {
    let (out, hidden) = models.run(id, input, context);
    *context = hidden;
    out
}

fn to_vector(axis: Axis, values: Vec<f64>) -> CategoryVector {
    CategoryVector::new(axis, values).expect("sigmoid outputs lie in (0, 1)")
}

/// Context-dependent choice among a word's basic category memberships.
pub fn disambiguate(
    models: &Models,
    axis: Axis,
    state: &mut TaggerState,
    ambiguous: &CategoryVector,
) -> Result<CategoryVector> {
    if ambiguous.axis() != axis {
        return Err(Error::AxisMismatch {
            expected: axis,
            found: ambiguous.axis(),
        });
    }
    let out = match axis {
        Axis::BasicSyn => step(models, NetId::BasSynDis, &mut state.syn_dis, ambiguous.values()),
        Axis::BasicSem => step(models, NetId::BasSemDis, &mut state.sem_dis, ambiguous.values()),
        other => {
            return Err(Error::AxisMismatch {
                expected: Axis::BasicSyn,
                found: other,
            })
        }
    };
    Ok(to_vector(axis, out))
}

/// Maps a disambiguated basic vector to its abstract axis.
pub fn abstract_map(models: &Models, state: &mut TaggerState, disambiguated: &CategoryVector) -> Result<CategoryVector> {
    let (axis, out) = match disambiguated.axis() {
        Axis::BasicSyn => (
            Axis::AbsSyn,
            step(models, NetId::AbsSynCat, &mut state.abs_syn, disambiguated.values()),
        ),
        Axis::BasicSem => (
            Axis::AbsSem,
            step(models, NetId::AbsSemCat, &mut state.abs_sem, disambiguated.values()),
        ),
        other => {
            return Err(Error::AxisMismatch {
                expected: Axis::BasicSyn,
                found: other,
            })
        }
    };
    Ok(to_vector(axis, out))
}

/// Plausibility that the current word opens a phrase. The first word of an
/// utterance always does; the network still runs so its context advances.
pub fn phrase_start(models: &Models, state: &mut TaggerState, disambiguated_syn: &CategoryVector) -> Result<f64> {
    if disambiguated_syn.axis() != Axis::BasicSyn {
        return Err(Error::AxisMismatch {
            expected: Axis::BasicSyn,
            found: disambiguated_syn.axis(),
        });
    }
    let out = step(models, NetId::PhraseStart, &mut state.phrase, disambiguated_syn.values());
    if state.position == 0 {
        return Ok(1.0);
    }
    combine_two_unit_output(out[0], out[1])
}

/// Runs the full category part for one word.
pub fn tag_word(lexicon: &Lexicon, models: &Models, state: &mut TaggerState, word: &str) -> TokenAnnotation {
    tag_lookup(models, state, word, &lexicon.lookup(word))
}

pub(crate) fn tag_lookup(models: &Models, state: &mut TaggerState, word: &str, lookup: &Lookup) -> TokenAnnotation {
    let basic_syn = disambiguate(models, Axis::BasicSyn, state, &lookup.syn).expect("lookup axis");
    let basic_sem = disambiguate(models, Axis::BasicSem, state, &lookup.sem).expect("lookup axis");
    let abs_syn = abstract_map(models, state, &basic_syn).expect("basic axis");
    let abs_sem = abstract_map(models, state, &basic_sem).expect("basic axis");
    let start = phrase_start(models, state, &basic_syn).expect("basic axis");
    state.position += 1;
    TokenAnnotation {
        word: word.to_string(),
        known: lookup.known,
        basic_syn,
        abs_syn,
        basic_sem,
        abs_sem,
        phrase_start: start,
        deleted: None,
    }
}

/// Tags every word left to right with fresh contexts. Never fails: unknown
/// words fall back to the lexicon's default vectors.
pub fn tag_sequence(lexicon: &Lexicon, models: &Models, words: &[impl AsRef<str>]) -> Vec<TokenAnnotation> {
    let mut state = TaggerState::new(models);
    words
        .iter()
        .map(|w| tag_word(lexicon, models, &mut state, w.as_ref()))
        .collect()
}

/// Re-tags the surviving words with fresh contexts. Deleted tokens keep
/// their annotations and do not advance any context.
pub fn retag(lexicon: &Lexicon, models: &Models, annotations: &[TokenAnnotation]) -> Vec<TokenAnnotation> {
    let mut state = TaggerState::new(models);
    annotations
        .iter()
        .map(|a| {
            if a.is_deleted() {
                a.clone()
            } else {
                tag_word(lexicon, models, &mut state, &a.word)
            }
        })
        .collect()
}

/// A phrase over surviving tokens, identified by token positions in the
/// original stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Phrase {
    pub tokens: Vec<usize>,
    pub abs_syn: usize,
    pub abs_sem: usize,
}

impl Phrase {
    pub fn first(&self) -> usize {
        self.tokens[0]
    }

    pub fn last(&self) -> usize {
        *self.tokens.last().expect("phrases are non-empty")
    }

    pub fn span(&self) -> (usize, usize) {
        (self.first(), self.last())
    }

    pub fn syn_label(&self) -> &'static str {
        Axis::AbsSyn.abbrev(self.abs_syn)
    }

    pub fn sem_label(&self) -> &'static str {
        Axis::AbsSem.abbrev(self.abs_sem)
    }
}

/// Splits the surviving tokens at phrase boundaries. A phrase takes its
/// syntactic label from its first word and its semantic label from its last.
pub fn finalize_phrases(annotations: &[TokenAnnotation]) -> Result<Vec<Phrase>> {
    if annotations.is_empty() {
        return Err(Error::EmptyAnnotations);
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, a) in annotations.iter().enumerate() {
        if a.is_deleted() {
            continue;
        }
        match groups.last_mut() {
            Some(g) if !a.starts_phrase() => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    Ok(groups
        .into_iter()
        .map(|tokens| {
            let abs_syn = annotations[tokens[0]].abs_syn.argmax();
            let abs_sem = annotations[*tokens.last().unwrap()].abs_sem.argmax();
            Phrase {
                tokens,
                abs_syn,
                abs_sem,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnotationRecord<'a> {
    pub index: usize,
    pub word: &'a str,
    pub known: bool,
    pub basic_syn: &'static str,
    pub abs_syn: &'static str,
    pub basic_sem: &'static str,
    pub abs_sem: &'static str,
    pub phrase_start: f64,
    pub deleted: Option<&'static str>,
    pub vectors: [&'a [f64]; 4],
}

impl<'a> AnnotationRecord<'a> {
    pub fn new(index: usize, a: &'a TokenAnnotation) -> Self {
        let [basic_syn, abs_syn, basic_sem, abs_sem] = a.labels();
        AnnotationRecord {
            index,
            word: &a.word,
            known: a.known,
            basic_syn,
            abs_syn,
            basic_sem,
            abs_sem,
            phrase_start: a.phrase_start,
            deleted: a.deletion_reason().map(DeletionReason::as_str),
            vectors: [
                a.basic_syn.values(),
                a.abs_syn.values(),
                a.basic_sem.values(),
                a.abs_sem.values(),
            ],
        }
    }
}

/// One JSON object per token, newline separated.
pub fn dump_annotations(annotations: &[TokenAnnotation]) -> String {
    let mut out = String::new();
    for (i, a) in annotations.iter().enumerate() {
        out.push_str(&serde_json::to_string(&AnnotationRecord::new(i, a)).expect("plain data serializes"));
        out.push('\n');
    }
    out
}
