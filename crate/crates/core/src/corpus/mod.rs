//! Gold-annotated corpora: file format, validation, splits, fixtures,
//! synthetic generation and per-network training sets.

mod datasets;
mod fixtures;
mod synth;

pub use datasets::{derive_training_sets, TrainingSets};
pub use fixtures::{appointment_graph, fixture_corpus, APPOINTMENT_SENTENCE, APPOINTMENT_GRAPH, FIXTURES};
pub use synth::{
    corpus_word_graphs, generate_synthetic, synth_word_graph, GrammarConfig, NoiseConfig, SynthGraph, UtteranceShape,
};

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::correction::DeletionReason;
use crate::error::{Error, Result};
use crate::lexicon::{Axis, PAUSE_TOKEN};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnnotatedToken {
    pub word: String,
    pub basic_syn: usize,
    pub abs_syn: usize,
    pub basic_sem: usize,
    pub abs_sem: usize,
    pub phrase_start: bool,
    pub deleted: Option<DeletionReason>,
}

impl AnnotatedToken {
    /// Builds a token from label abbreviations.
    pub fn new(word: &str, labels: [&str; 4], phrase_start: bool, deleted: Option<DeletionReason>) -> Result<Self> {
        Ok(AnnotatedToken {
            word: word.to_string(),
            basic_syn: Axis::BasicSyn.parse_label(labels[0])?,
            abs_syn: Axis::AbsSyn.parse_label(labels[1])?,
            basic_sem: Axis::BasicSem.parse_label(labels[2])?,
            abs_sem: Axis::AbsSem.parse_label(labels[3])?,
            phrase_start,
            deleted,
        })
    }

    /// Label abbreviations in the order basic syn, abstract syn, basic sem,
    /// abstract sem.
    pub fn labels(&self) -> [&'static str; 4] {
        [
            Axis::BasicSyn.abbrev(self.basic_syn),
            Axis::AbsSyn.abbrev(self.abs_syn),
            Axis::BasicSem.abbrev(self.basic_sem),
            Axis::AbsSem.abbrev(self.abs_sem),
        ]
    }

    pub fn is_deleted(&self) -> bool {
        self.deleted.is_some()
    }

    /// Removed before any network sees the stream.
    pub fn is_symbolic(&self) -> bool {
        matches!(self.deleted, Some(DeletionReason::Pause | DeletionReason::Interjection))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Utterance {
    pub tokens: Vec<AnnotatedToken>,
}

/// A gold phrase over surviving tokens, by position in the utterance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GoldPhrase {
    pub tokens: Vec<usize>,
    pub abs_syn: usize,
    pub abs_sem: usize,
}

impl Utterance {
    pub fn new(tokens: Vec<AnnotatedToken>) -> Self {
        Utterance { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn words(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.word.as_str()).collect()
    }

    pub fn text(&self) -> String {
        self.words().join(" ")
    }

    pub fn surviving(&self) -> Vec<&AnnotatedToken> {
        self.tokens.iter().filter(|t| !t.is_deleted()).collect()
    }

    /// Positions of the tokens the tagger runs over during correction:
    /// everything except pauses, interjections and word reparanda.
    pub fn tagging_positions(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| !matches!(self.tokens[i].deleted, Some(r) if r != DeletionReason::PhraseRepair))
            .collect()
    }

    /// Positions the word-repair check compares: everything except pauses
    /// and interjections.
    pub fn lexical_positions(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.tokens[i].is_symbolic()).collect()
    }

    /// Phrases over the listed positions; the first listed token always
    /// opens a phrase.
    pub fn phrases_over(&self, positions: &[usize]) -> Vec<GoldPhrase> {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for &i in positions {
            match groups.last_mut() {
                Some(g) if !self.tokens[i].phrase_start => g.push(i),
                _ => groups.push(vec![i]),
            }
        }
        groups
            .into_iter()
            .map(|tokens| GoldPhrase {
                abs_syn: self.tokens[tokens[0]].abs_syn,
                abs_sem: self.tokens[*tokens.last().unwrap()].abs_sem,
                tokens,
            })
            .collect()
    }

    pub fn gold_phrases(&self) -> Vec<GoldPhrase> {
        let positions: Vec<usize> = (0..self.len()).filter(|&i| !self.tokens[i].is_deleted()).collect();
        self.phrases_over(&positions)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::Corpus(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Turn {
    pub id: String,
    pub split: Split,
    pub utterances: Vec<Utterance>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AnnotatedCorpus {
    pub turns: Vec<Turn>,
}

fn parse_deleted(s: &str) -> Option<Option<DeletionReason>> {
    if s == "none" {
        Some(None)
    } else {
        DeletionReason::parse(s).map(Some)
    }
}

impl AnnotatedCorpus {
    pub fn new(turns: Vec<Turn>) -> Self {
        AnnotatedCorpus { turns }
    }

    /// Parses the tab-separated corpus format and validates the result.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut turns: Vec<Turn> = Vec::new();
        let mut current: Vec<AnnotatedToken> = Vec::new();
        let flush = |turns: &mut Vec<Turn>, current: &mut Vec<AnnotatedToken>| {
            if !current.is_empty() {
                let turn = turns.last_mut().expect("tokens only follow a turn header");
                turn.utterances.push(Utterance::new(std::mem::take(current)));
            }
        };
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.trim_end();
            if line.trim_start().starts_with('#') {
                continue;
            }
            if line.trim().is_empty() {
                flush(&mut turns, &mut current);
                continue;
            }
            if let Some(header) = line.strip_prefix("==") {
                flush(&mut turns, &mut current);
                let parts: Vec<&str> = header.split_whitespace().collect();
                if parts.len() != 3 || parts[0] != "turn" {
                    return Err(Error::parse(source, line_no, "expected `== turn <id> <split>`"));
                }
                let split = parts[2]
                    .parse()
                    .map_err(|e: Error| Error::parse(source, line_no, e.to_string()))?;
                turns.push(Turn {
                    id: parts[1].to_string(),
                    split,
                    utterances: Vec::new(),
                });
                continue;
            }
            if turns.is_empty() {
                return Err(Error::parse(source, line_no, "token before the first turn header"));
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 7 {
                return Err(Error::parse(
                    source,
                    line_no,
                    format!("expected 7 tab-separated fields, found {}", f.len()),
                ));
            }
            let phrase_start = match f[5] {
                "1" => true,
                "0" => false,
                other => return Err(Error::parse(source, line_no, format!("phrase start `{other}` is not 0 or 1"))),
            };
            let deleted = parse_deleted(f[6])
                .ok_or_else(|| Error::parse(source, line_no, format!("unknown deletion mark `{}`", f[6])))?;
            let token = AnnotatedToken::new(f[0], [f[1], f[2], f[3], f[4]], phrase_start, deleted)
                .map_err(|e| Error::parse(source, line_no, e.to_string()))?;
            current.push(token);
        }
        flush(&mut turns, &mut current);
        let corpus = AnnotatedCorpus { turns };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(Error::file(path))?;
        AnnotatedCorpus::parse(&text, &path.display().to_string())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for turn in &self.turns {
            out.push_str(&format!("== turn {} {}\n", turn.id, turn.split));
            for (u, utt) in turn.utterances.iter().enumerate() {
                if u > 0 {
                    out.push('\n');
                }
                for t in &utt.tokens {
                    let [a, b, c, d] = t.labels();
                    out.push_str(&format!(
                        "{}\t{a}\t{b}\t{c}\t{d}\t{}\t{}\n",
                        t.word,
                        u8::from(t.phrase_start),
                        t.deleted.map_or("none", DeletionReason::as_str)
                    ));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(Error::file(path))?;
        Ok(())
    }

    /// Rejects empty turns or utterances, duplicate turn ids, out-of-range
    /// labels and malformed words.
    pub fn validate(&self) -> Result<()> {
        if self.turns.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut seen: HashSet<&str> = HashSet::new();
        for turn in &self.turns {
            if !seen.insert(&turn.id) {
                return Err(Error::Corpus(format!("turn `{}` appears more than once", turn.id)));
            }
            if turn.utterances.is_empty() {
                return Err(Error::Corpus(format!("turn `{}` has no utterances", turn.id)));
            }
            for (u, utt) in turn.utterances.iter().enumerate() {
                if utt.is_empty() {
                    return Err(Error::Corpus(format!("turn `{}` utterance {u} is empty", turn.id)));
                }
                for (i, t) in utt.tokens.iter().enumerate() {
                    let at = || format!("turn `{}` utterance {u} token {i} `{}`", turn.id, t.word);
                    if t.word.is_empty() || t.word.contains(char::is_whitespace) {
                        return Err(Error::Corpus(format!("{}: malformed word", at())));
                    }
                    for (axis, v) in [
                        (Axis::BasicSyn, t.basic_syn),
                        (Axis::AbsSyn, t.abs_syn),
                        (Axis::BasicSem, t.basic_sem),
                        (Axis::AbsSem, t.abs_sem),
                    ] {
                        if v >= axis.len() {
                            return Err(Error::Corpus(format!("{}: {axis:?} label index {v}", at())));
                        }
                    }
                    if t.deleted == Some(DeletionReason::Pause) && t.word != PAUSE_TOKEN {
                        return Err(Error::Corpus(format!("{}: pause mark on a word", at())));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.utterances().map(Utterance::len).sum()
    }

    pub fn utterances(&self) -> impl Iterator<Item = &Utterance> {
        self.turns.iter().flat_map(|t| &t.utterances)
    }

    /// Turns of one split, as a corpus of their own.
    pub fn subset(&self, split: Split) -> AnnotatedCorpus {
        AnnotatedCorpus {
            turns: self.turns.iter().filter(|t| t.split == split).cloned().collect(),
        }
    }

    pub fn train(&self) -> AnnotatedCorpus {
        self.subset(Split::Train)
    }

    pub fn test(&self) -> AnnotatedCorpus {
        self.subset(Split::Test)
    }

    /// Reassigns splits by a seeded turn shuffle: `round(train_fraction * n)`
    /// turns become training turns. Turns matched by `pinned` stay in
    /// training and are not counted.
    pub fn resplit(&mut self, train_fraction: f64, seed: u64, pinned: impl Fn(&Turn) -> bool) -> Result<()> {
        if !(0.0..=1.0).contains(&train_fraction) {
            return Err(Error::InvalidFraction(train_fraction));
        }
        let mut free: Vec<usize> = (0..self.turns.len()).filter(|&i| !pinned(&self.turns[i])).collect();
        let n_train = (train_fraction * free.len() as f64).round() as usize;
        free.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        for (k, &i) in free.iter().enumerate() {
            self.turns[i].split = if k < n_train { Split::Train } else { Split::Test };
        }
        for turn in self.turns.iter_mut().filter(|t| pinned(t)) {
            turn.split = Split::Train;
        }
        Ok(())
    }

    /// Appends another corpus; turn ids must stay unique.
    pub fn extend(&mut self, other: AnnotatedCorpus) -> Result<()> {
        self.turns.extend(other.turns);
        self.validate()
    }
}

/// Fixture turns carry this id prefix and are always in training.
pub const FIXTURE_PREFIX: &str = "fixture-";

pub fn is_fixture(turn: &Turn) -> bool {
    turn.id.starts_with(FIXTURE_PREFIX)
}

/// Fixtures plus a synthetic corpus, split one third train and two thirds
/// test by turn, fixtures pinned to train.
pub fn standard_corpus(grammar: &GrammarConfig, size: usize, seed: u64) -> Result<AnnotatedCorpus> {
    let mut corpus = generate_synthetic(grammar, size, seed)?;
    corpus.extend(fixture_corpus())?;
    corpus.resplit(1.0 / 3.0, seed, is_fixture)?;
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# two turns
== turn a train
Käse\tN\tNG\tNO\tNEG\t1\tnone
ich\tU\tNG\tANIM\tAGENT\t1\tnone

ähm\tI\tIG\tNIL\tMISC\t1\tinterjection
ja\tO\tMG\tYES\tCONF\t1\tnone

== turn b test
Montag\tN\tNG\tTIME\tTM-AT\t1\tword
Dienstag\tN\tNG\tTIME\tTM-AT\t1\tnone
";

    #[test]
    fn parse_and_round_trip() {
        let c = AnnotatedCorpus::parse(SAMPLE, "s").unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.turns[0].utterances.len(), 2);
        assert_eq!(c.turns[1].split, Split::Test);
        assert_eq!(c.turns[1].utterances[0].tokens[0].deleted, Some(DeletionReason::WordRepair));
        let again = AnnotatedCorpus::parse(&c.to_text(), "t").unwrap();
        assert_eq!(again, c);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.corpus");
        c.save(&path).unwrap();
        assert_eq!(AnnotatedCorpus::load(&path).unwrap(), c);
    }

    #[test]
    fn label_typo_is_located() {
        let bad = SAMPLE.replace("ich\tU\tNG", "ich\tU\tVGG");
        let e = AnnotatedCorpus::parse(&bad, "x.corpus").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("line 4") && msg.contains("VGG"), "{msg}");
    }

    #[test]
    fn duplicate_turn_rejected() {
        let bad = SAMPLE.replace("== turn b test", "== turn a test");
        let e = AnnotatedCorpus::parse(&bad, "x").unwrap_err();
        assert!(e.to_string().contains("more than once"), "{e}");
    }

    #[test]
    fn malformed_records_rejected() {
        assert!(AnnotatedCorpus::parse("ich\tU\tNG\tANIM\tAGENT\t1\tnone\n", "x").is_err());
        assert!(AnnotatedCorpus::parse("== turn a dev\n", "x").is_err());
        let e = AnnotatedCorpus::parse("== turn a train\nich\tU\tNG\tANIM\tAGENT\t2\tnone\n", "x").unwrap_err();
        assert!(e.to_string().contains("line 2"));
        let e = AnnotatedCorpus::parse("== turn a train\nich\tU\tNG\tANIM\tAGENT\t1\tgone\n", "x").unwrap_err();
        assert!(e.to_string().contains("deletion mark"));
        assert!(matches!(AnnotatedCorpus::parse("", "x"), Err(Error::EmptyCorpus)));
        assert!(AnnotatedCorpus::parse("== turn a train\n", "x").is_err());
    }

    #[test]
    fn phrases_and_streams() {
        let c = AnnotatedCorpus::parse(SAMPLE, "s").unwrap();
        let u = &c.turns[1].utterances[0];
        assert_eq!(u.gold_phrases().len(), 1);
        assert_eq!(u.gold_phrases()[0].tokens, vec![1]);
        assert_eq!(u.tagging_positions(), vec![1]);
        assert_eq!(u.lexical_positions(), vec![0, 1]);
        let u = &c.turns[0].utterances[1];
        assert_eq!(u.lexical_positions(), vec![1]);
    }

    #[test]
    fn resplit_pins_and_partitions() {
        let mut c = AnnotatedCorpus::new(
            (0..9)
                .map(|i| Turn {
                    id: if i == 0 { "fixture-x".into() } else { format!("t{i}") },
                    split: Split::Test,
                    utterances: vec![Utterance::new(vec![AnnotatedToken::new(
                        "ja",
                        ["O", "MG", "YES", "CONF"],
                        true,
                        None,
                    )
                    .unwrap()])],
                })
                .collect(),
        );
        c.resplit(1.0 / 3.0, 4, is_fixture).unwrap();
        assert_eq!(c.turns[0].split, Split::Train);
        assert_eq!(c.train().len(), 1 + 3);
        assert_eq!(c.test().len(), 5);
        let ids: HashSet<_> = c.train().turns.iter().map(|t| t.id.clone()).collect();
        assert!(c.test().turns.iter().all(|t| !ids.contains(&t.id)));
        let mut d = c.clone();
        d.resplit(1.0 / 3.0, 4, is_fixture).unwrap();
        assert_eq!(c, d);
    }
}
