//! Pause, interjection and repair handling.
//!
//! Pauses and interjections are recognized symbolically. Word repairs are
//! detected from three preferences between adjacent words (lexical,
//! syntactic and semantic equality) and phrase repairs from the same three
//! preferences between adjacent phrases. Repaired material is marked as
//! deleted, never removed; the earlier occurrence is the one marked.

use serde::{Deserialize, Serialize};

use crate::lexicon::{Axis, Lexicon, Lookup, PAUSE_TOKEN};
use crate::models::{Models, NetId};
use crate::neural::combine_two_unit_output;
use crate::tagger::{finalize_phrases, retag, tag_sequence, Phrase, TokenAnnotation};

/// Decision threshold of the two repair networks.
pub const REPAIR_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeletionReason {
    Pause,
    Interjection,
    WordRepair,
    PhraseRepair,
}

impl DeletionReason {
    pub const ALL: [DeletionReason; 4] = [
        DeletionReason::Pause,
        DeletionReason::Interjection,
        DeletionReason::WordRepair,
        DeletionReason::PhraseRepair,
    ];

    /// Short name used in corpus files.
    pub fn as_str(self) -> &'static str {
        match self {
            DeletionReason::Pause => "pause",
            DeletionReason::Interjection => "interjection",
            DeletionReason::WordRepair => "word",
            DeletionReason::PhraseRepair => "phrase",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        DeletionReason::ALL.into_iter().find(|r| r.as_str() == s)
    }

    pub fn is_repair(self) -> bool {
        matches!(self, DeletionReason::WordRepair | DeletionReason::PhraseRepair)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EqualityPreferences {
    pub lexical: f64,
    pub syntactic: f64,
    pub semantic: f64,
}

impl EqualityPreferences {
    pub fn as_input(&self) -> [f64; 3] {
        [self.lexical, self.syntactic, self.semantic]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepairKind {
    Word,
    Phrase,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepairDecision {
    pub kind: RepairKind,
    /// Token positions marked deleted.
    pub deleted: Vec<usize>,
    /// First token of the repairing material.
    pub repaired_by: usize,
    pub preferences: EqualityPreferences,
    pub score: f64,
}

/// Why a token was marked, with the repair evidence when there is any.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deletion {
    pub reason: DeletionReason,
    pub decision: Option<RepairDecision>,
}

impl Deletion {
    pub fn symbolic(reason: DeletionReason) -> Self {
        Deletion { reason, decision: None }
    }
}

/// Pause or interjection test on the surface form and lexicon entry.
pub fn pause_or_interjection(word: &str, lookup: &Lookup) -> Option<DeletionReason> {
    if word == PAUSE_TOKEN {
        return Some(DeletionReason::Pause);
    }
    let interjection = Axis::BasicSyn.index_of("I").expect("interjection label");
    (lookup.known && lookup.syn.is_set(interjection)).then_some(DeletionReason::Interjection)
}

pub fn detect_pause_or_interjection(word: &str, lookup: &Lookup) -> bool {
    pause_or_interjection(word, lookup).is_some()
}

fn equality(models: &Models, id: NetId, a: &[f64], b: &[f64]) -> f64 {
    let input: Vec<f64> = a.iter().chain(b).copied().collect();
    let (out, _) = models.run(id, &input, &[]);
    combine_two_unit_output(out[0], out[1]).expect("sigmoid outputs")
}

fn same_word(a: &str, b: &str) -> f64 {
    if crate::lexicon::fold(a) == crate::lexicon::fold(b) {
        1.0
    } else {
        0.0
    }
}

/// Equality preferences between two adjacent words.
pub fn word_equality(models: &Models, a: &TokenAnnotation, b: &TokenAnnotation) -> EqualityPreferences {
    EqualityPreferences {
        lexical: same_word(&a.word, &b.word),
        syntactic: equality(models, NetId::BasSynEq, a.basic_syn.values(), b.basic_syn.values()),
        semantic: equality(models, NetId::BasSemEq, a.basic_sem.values(), b.basic_sem.values()),
    }
}

fn decide(models: &Models, id: NetId, prefs: &EqualityPreferences) -> (bool, f64) {
    let (out, _) = models.run(id, &prefs.as_input(), &[]);
    let score = combine_two_unit_output(out[0], out[1]).expect("sigmoid outputs");
    (score >= REPAIR_THRESHOLD, score)
}

/// Whether the earlier of two adjacent words is repaired by the later one,
/// with the network's combined score.
pub fn decide_word_error(models: &Models, prefs: &EqualityPreferences) -> (bool, f64) {
    decide(models, NetId::WordError, prefs)
}

/// Equality preferences between two adjacent phrases: first words
/// lexically, first words' abstract syntax, last words' abstract semantics.
pub fn phrase_equality(
    models: &Models,
    annotations: &[TokenAnnotation],
    p1: &Phrase,
    p2: &Phrase,
) -> EqualityPreferences {
    let (f1, f2) = (&annotations[p1.first()], &annotations[p2.first()]);
    let (l1, l2) = (&annotations[p1.last()], &annotations[p2.last()]);
    EqualityPreferences {
        lexical: same_word(&f1.word, &f2.word),
        syntactic: equality(models, NetId::AbsSynEq, f1.abs_syn.values(), f2.abs_syn.values()),
        semantic: equality(models, NetId::AbsSemEq, l1.abs_sem.values(), l2.abs_sem.values()),
    }
}

pub fn decide_phrase_error(models: &Models, prefs: &EqualityPreferences) -> (bool, f64) {
    decide(models, NetId::PhraseError, prefs)
}

fn mark_symbolic(lexicon: &Lexicon, annotations: &mut [TokenAnnotation]) -> bool {
    let mut changed = false;
    for a in annotations.iter_mut().filter(|a| !a.is_deleted()) {
        if let Some(reason) = pause_or_interjection(&a.word, &lexicon.lookup(&a.word)) {
            a.deleted = Some(Deletion::symbolic(reason));
            changed = true;
        }
    }
    changed
}

/// One left-to-right pass over adjacent surviving words. After a deletion
/// the current word is compared with its next neighbour, so chains such as
/// "ich ich ich" collapse to the last occurrence.
fn mark_word_repairs(models: &Models, annotations: &mut [TokenAnnotation]) -> bool {
    let mut changed = false;
    let mut prev: Option<usize> = None;
    for i in 0..annotations.len() {
        if annotations[i].is_deleted() {
            continue;
        }
        if let Some(p) = prev {
            let prefs = word_equality(models, &annotations[p], &annotations[i]);
            let (repair, score) = decide_word_error(models, &prefs);
            if repair {
                annotations[p].deleted = Some(Deletion {
                    reason: DeletionReason::WordRepair,
                    decision: Some(RepairDecision {
                        kind: RepairKind::Word,
                        deleted: vec![p],
                        repaired_by: i,
                        preferences: prefs,
                        score,
                    }),
                });
                changed = true;
            }
        }
        prev = Some(i);
    }
    changed
}

fn mark_phrase_repairs(models: &Models, annotations: &mut [TokenAnnotation]) -> bool {
    let Ok(phrases) = finalize_phrases(annotations) else {
        return false;
    };
    let mut changed = false;
    for pair in phrases.windows(2) {
        let (p1, p2) = (&pair[0], &pair[1]);
        if annotations[p1.first()].is_deleted() {
            continue;
        }
        let prefs = phrase_equality(models, annotations, p1, p2);
        let (repair, score) = decide_phrase_error(models, &prefs);
        if repair {
            let decision = RepairDecision {
                kind: RepairKind::Phrase,
                deleted: p1.tokens.clone(),
                repaired_by: p2.first(),
                preferences: prefs,
                score,
            };
            for &t in &p1.tokens {
                annotations[t].deleted = Some(Deletion {
                    reason: DeletionReason::PhraseRepair,
                    decision: Some(decision.clone()),
                });
            }
            changed = true;
        }
    }
    changed
}

/// Marks pauses, interjections, word repairs and phrase repairs, re-tagging
/// the surviving stream after each stage that changed something. The stages
/// repeat until nothing new is marked, so applying the function to its own
/// output is a no-op.
pub fn apply_corrections(lexicon: &Lexicon, models: &Models, annotations: &[TokenAnnotation]) -> Vec<TokenAnnotation> {
    let mut anns = annotations.to_vec();
    loop {
        let mut changed = false;
        let mut dirty = mark_symbolic(lexicon, &mut anns);
        dirty |= mark_word_repairs(models, &mut anns);
        if dirty {
            anns = retag(lexicon, models, &anns);
            changed = true;
        }
        if mark_phrase_repairs(models, &mut anns) {
            anns = retag(lexicon, models, &anns);
            changed = true;
        }
        if !changed {
            return anns;
        }
    }
}

/// Tags a transcript and applies all corrections.
pub fn analyze_transcript(lexicon: &Lexicon, models: &Models, words: &[impl AsRef<str>]) -> Vec<TokenAnnotation> {
    let tagged = tag_sequence(lexicon, models, words);
    apply_corrections(lexicon, models, &tagged)
}

/// One line of the repair report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepairRecord<'a> {
    pub index: usize,
    pub word: &'a str,
    pub reason: DeletionReason,
    pub preferences: Option<EqualityPreferences>,
    pub score: Option<f64>,
}

pub fn repair_report(annotations: &[TokenAnnotation]) -> Vec<RepairRecord<'_>> {
    annotations
        .iter()
        .enumerate()
        .filter_map(|(index, a)| {
            let d = a.deleted.as_ref()?;
            Some(RepairRecord {
                index,
                word: &a.word,
                reason: d.reason,
                preferences: d.decision.as_ref().map(|r| r.preferences),
                score: d.decision.as_ref().map(|r| r.score),
            })
        })
        .collect()
}
