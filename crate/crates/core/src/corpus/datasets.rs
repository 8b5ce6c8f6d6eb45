//! Per-network training sets derived from gold annotations.

use std::collections::BTreeMap;

use crate::correction::DeletionReason;
use crate::error::{Error, Result};
use crate::lexicon::{fold, Axis, CategoryVector, Lexicon};
use crate::models::NetId;
use crate::neural::{Sample, SequenceDataset};

use super::{AnnotatedCorpus, AnnotatedToken, Utterance};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingSets {
    sets: BTreeMap<NetId, SequenceDataset>,
}

impl TrainingSets {
    pub fn get(&self, id: NetId) -> &SequenceDataset {
        &self.sets[&id]
    }

    pub fn iter(&self) -> impl Iterator<Item = (NetId, &SequenceDataset)> {
        self.sets.iter().map(|(k, v)| (*k, v))
    }

    /// Pattern counts per network.
    pub fn sizes(&self) -> Vec<(NetId, usize)> {
        self.iter().map(|(id, d)| (id, d.len())).collect()
    }
}

fn one_hot(axis: Axis, i: usize) -> Vec<f64> {
    CategoryVector::one_hot(axis, i).values().to_vec()
}

fn flag(b: bool) -> Vec<f64> {
    if b {
        vec![1.0, 0.0]
    } else {
        vec![0.0, 1.0]
    }
}

fn eq(a: bool) -> f64 {
    if a {
        1.0
    } else {
        0.0
    }
}

/// Token streams the recurrent networks see for one utterance: the stream
/// during correction (pauses, interjections and word reparanda removed)
/// and, when a phrase was restarted, the fully corrected stream as well.
fn streams(u: &Utterance) -> Vec<Vec<&AnnotatedToken>> {
    let tagging: Vec<&AnnotatedToken> = u.tagging_positions().into_iter().map(|i| &u.tokens[i]).collect();
    let mut out = Vec::new();
    if u.tokens.iter().any(|t| t.deleted == Some(DeletionReason::PhraseRepair)) {
        out.push(u.surviving());
    }
    out.insert(0, tagging);
    out.retain(|s| !s.is_empty());
    out
}

/// Builds one dataset per network from the corpus.
///
/// Category networks get sequences over each token stream: lexicon
/// memberships to gold basic labels, gold basic to gold abstract labels,
/// gold basic syntax to the phrase-start flag, and each gold basic label
/// to the next one. Equality networks get every ordered pair of one-hot
/// categories, with equal pairs repeated to balance the classes. The two
/// repair networks get gold equality features of adjacent words and
/// adjacent phrases with the gold repair mark of the earlier one.
pub fn derive_training_sets(corpus: &AnnotatedCorpus, lexicon: &Lexicon) -> Result<TrainingSets> {
    if corpus.utterances().next().is_none() {
        return Err(Error::EmptyCorpus);
    }
    let mut seqs: BTreeMap<NetId, Vec<Vec<Sample>>> = BTreeMap::new();
    let mut word_error = Vec::new();
    let mut phrase_error = Vec::new();
    for u in corpus.utterances() {
        for s in streams(u) {
            let mut push = |id: NetId, samples: Vec<Sample>| {
                if !samples.is_empty() {
                    seqs.entry(id).or_default().push(samples);
                }
            };
            push(
                NetId::BasSynDis,
                s.iter()
                    .map(|t| Sample::new(lexicon.lookup(&t.word).syn.values().to_vec(), one_hot(Axis::BasicSyn, t.basic_syn)))
                    .collect(),
            );
            push(
                NetId::BasSemDis,
                s.iter()
                    .map(|t| Sample::new(lexicon.lookup(&t.word).sem.values().to_vec(), one_hot(Axis::BasicSem, t.basic_sem)))
                    .collect(),
            );
            push(
                NetId::AbsSynCat,
                s.iter()
                    .map(|t| Sample::new(one_hot(Axis::BasicSyn, t.basic_syn), one_hot(Axis::AbsSyn, t.abs_syn)))
                    .collect(),
            );
            push(
                NetId::AbsSemCat,
                s.iter()
                    .map(|t| Sample::new(one_hot(Axis::BasicSem, t.basic_sem), one_hot(Axis::AbsSem, t.abs_sem)))
                    .collect(),
            );
            push(
                NetId::PhraseStart,
                s.iter()
                    .enumerate()
                    .map(|(i, t)| Sample::new(one_hot(Axis::BasicSyn, t.basic_syn), flag(i == 0 || t.phrase_start)))
                    .collect(),
            );
            push(
                NetId::BasSynPre,
                s.windows(2)
                    .map(|w| Sample::new(one_hot(Axis::BasicSyn, w[0].basic_syn), one_hot(Axis::BasicSyn, w[1].basic_syn)))
                    .collect(),
            );
            push(
                NetId::BasSemPre,
                s.windows(2)
                    .map(|w| Sample::new(one_hot(Axis::BasicSem, w[0].basic_sem), one_hot(Axis::BasicSem, w[1].basic_sem)))
                    .collect(),
            );
        }

        let lexical = u.lexical_positions();
        for w in lexical.windows(2) {
            let (a, b) = (&u.tokens[w[0]], &u.tokens[w[1]]);
            let input = vec![
                eq(fold(&a.word) == fold(&b.word)),
                eq(a.basic_syn == b.basic_syn),
                eq(a.basic_sem == b.basic_sem),
            ];
            word_error.push(Sample::new(input, flag(a.deleted == Some(DeletionReason::WordRepair))));
        }

        let phrases = u.phrases_over(&u.tagging_positions());
        for w in phrases.windows(2) {
            let (f1, f2) = (&u.tokens[w[0].tokens[0]], &u.tokens[w[1].tokens[0]]);
            let (l1, l2) = (
                &u.tokens[*w[0].tokens.last().unwrap()],
                &u.tokens[*w[1].tokens.last().unwrap()],
            );
            let input = vec![
                eq(fold(&f1.word) == fold(&f2.word)),
                eq(f1.abs_syn == f2.abs_syn),
                eq(l1.abs_sem == l2.abs_sem),
            ];
            phrase_error.push(Sample::new(input, flag(f1.deleted == Some(DeletionReason::PhraseRepair))));
        }
    }

    let mut sets = BTreeMap::new();
    for (id, s) in seqs {
        sets.insert(id, SequenceDataset::new(s));
    }
    for (id, axis) in [
        (NetId::BasSynEq, Axis::BasicSyn),
        (NetId::BasSemEq, Axis::BasicSem),
        (NetId::AbsSynEq, Axis::AbsSyn),
        (NetId::AbsSemEq, Axis::AbsSem),
    ] {
        sets.insert(id, equality_set(axis));
    }
    sets.insert(NetId::WordError, SequenceDataset::from_patterns(word_error));
    sets.insert(NetId::PhraseError, SequenceDataset::from_patterns(phrase_error));
    for id in NetId::ALL {
        sets.entry(id).or_default();
    }
    Ok(TrainingSets { sets })
}

/// Every ordered pair of categories; equal pairs repeated `n - 1` times.
fn equality_set(axis: Axis) -> SequenceDataset {
    let n = axis.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let input: Vec<f64> = one_hot(axis, i).into_iter().chain(one_hot(axis, j)).collect();
            let reps = if i == j { n - 1 } else { 1 };
            for _ in 0..reps {
                out.push(Sample::new(input.clone(), flag(i == j)));
            }
        }
    }
    SequenceDataset::from_patterns(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{fixture_corpus, generate_synthetic, GrammarConfig};
    use crate::lexicon::argmax;

    fn meine() -> AnnotatedCorpus {
        let mut c = fixture_corpus();
        c.turns.retain(|t| t.id == "fixture-meine");
        c
    }

    #[test]
    fn meine_prediction_pairs() {
        let sets = derive_training_sets(&meine(), &Lexicon::builtin()).unwrap();
        assert_eq!(sets.get(NetId::BasSynPre).len(), 4);
        assert_eq!(sets.get(NetId::BasSemPre).len(), 4);
        assert_eq!(sets.get(NetId::BasSynDis).len(), 5);
        let first = &sets.get(NetId::BasSynPre).sequences[0][0];
        assert_eq!(argmax(&first.input), Axis::BasicSyn.index_of("N").unwrap());
        assert_eq!(argmax(&first.target), Axis::BasicSyn.index_of("U").unwrap());
    }

    #[test]
    fn ambiguous_word_disambiguation_pattern() {
        let sets = derive_training_sets(&meine(), &Lexicon::builtin()).unwrap();
        let meine = &sets.get(NetId::BasSynDis).sequences[0][2];
        let v = Axis::BasicSyn.index_of("V").unwrap();
        let u = Axis::BasicSyn.index_of("U").unwrap();
        assert_eq!(meine.input.iter().filter(|&&x| x == 1.0).count(), 2);
        assert!(meine.input[v] == 1.0 && meine.input[u] == 1.0);
        assert_eq!(argmax(&meine.target), v);
    }

    #[test]
    fn word_repetition_is_positive() {
        let mut c = fixture_corpus();
        c.turns.retain(|t| t.id == "fixture-repeat");
        let sets = derive_training_sets(&c, &Lexicon::builtin()).unwrap();
        let pos: Vec<&Sample> = sets.get(NetId::WordError).samples().filter(|s| s.target[0] == 1.0).collect();
        assert_eq!(pos.len(), 2);
        assert!(pos.iter().all(|s| s.input == vec![1.0, 1.0, 1.0]));
    }

    #[test]
    fn phrase_restart_is_positive() {
        let mut c = fixture_corpus();
        c.turns.retain(|t| t.id == "fixture-restart");
        let sets = derive_training_sets(&c, &Lexicon::builtin()).unwrap();
        let pe: Vec<&Sample> = sets.get(NetId::PhraseError).samples().collect();
        // wir | brauchen | den früheren Termin | den späteren Termin
        assert_eq!(pe.len(), 3);
        assert_eq!(pe[2].input, vec![1.0, 1.0, 1.0]);
        assert_eq!(pe[2].target, vec![1.0, 0.0]);
        // the corrected stream is added for the recurrent networks
        assert_eq!(sets.get(NetId::BasSynDis).sequences.len(), 2);
        assert_eq!(sets.get(NetId::BasSynDis).len(), 8 + 5);
    }

    #[test]
    fn equality_sets_are_exhaustive_and_balanced() {
        let sets = derive_training_sets(&meine(), &Lexicon::builtin()).unwrap();
        let d = sets.get(NetId::AbsSynEq);
        assert_eq!(d.len(), 8 * 8 + 8 * 6);
        let pos = d.samples().filter(|s| s.target[0] == 1.0).count();
        assert_eq!(pos * 2, d.len());
    }

    #[test]
    fn pair_count_matches_stream_lengths() {
        let c = generate_synthetic(&GrammarConfig::default(), 60, 4).unwrap();
        let sets = derive_training_sets(&c, &Lexicon::builtin()).unwrap();
        let expected: usize = c
            .utterances()
            .flat_map(streams)
            .map(|s| s.len().saturating_sub(1))
            .sum();
        assert_eq!(sets.get(NetId::BasSynPre).len(), expected);
        let tokens: usize = c.utterances().flat_map(streams).map(|s| s.len()).sum();
        assert_eq!(sets.get(NetId::PhraseStart).len(), tokens);
        for id in NetId::ALL {
            sets.get(id).check(id.spec(14)).unwrap();
        }
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(matches!(
            derive_training_sets(&AnnotatedCorpus::default(), &Lexicon::builtin()),
            Err(Error::EmptyCorpus)
        ));
    }
}
