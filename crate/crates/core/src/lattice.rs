//! Word graphs and incremental search over word-hypothesis sequences.
//!
//! Sequences are grown hypothesis by hypothesis. Every extension runs one
//! tagging and prediction step, so each live sequence carries its own
//! recurrent contexts, annotations and score. Sequences that can no longer
//! reach the end of the graph are dropped at once; the rest are ranked and
//! cut to the beam width after every expansion step.

use std::cmp::Ordering;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correction::{
    apply_corrections, decide_word_error, pause_or_interjection, word_equality, Deletion, DeletionReason,
    RepairDecision, RepairKind,
};
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::models::Models;
use crate::predictor::{RankingMode, SequenceScore, StepScore, PredictorState, sequence_score};
use crate::tagger::{tag_lookup, TaggerState, TokenAnnotation};

/// Times are held in centiseconds, the resolution of recognizer output.
pub type Centis = u32;

pub fn to_centis(seconds: f64) -> Centis {
    (seconds * 100.0).round().max(0.0) as Centis
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordHypothesis {
    pub start: Centis,
    pub end: Centis,
    pub word: String,
    pub acoustic: f64,
}

impl WordHypothesis {
    pub fn new(start: f64, end: f64, word: &str, acoustic: f64) -> Self {
        WordHypothesis {
            start: to_centis(start),
            end: to_centis(end),
            word: word.to_string(),
            acoustic,
        }
    }

    pub fn start_time(&self) -> f64 {
        f64::from(self.start) / 100.0
    }

    pub fn end_time(&self) -> f64 {
        f64::from(self.end) / 100.0
    }
}

fn canonical(a: &WordHypothesis, b: &WordHypothesis) -> Ordering {
    (a.start, a.end, &a.word)
        .cmp(&(b.start, b.end, &b.word))
        .then(a.acoustic.total_cmp(&b.acoustic))
}

/// A set of word hypotheses, stored in canonical order (start, end, word,
/// plausibility) so that input record order does not matter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordGraph {
    hypotheses: Vec<WordHypothesis>,
    start: Centis,
    end: Centis,
}

impl WordGraph {
    pub fn new(mut hypotheses: Vec<WordHypothesis>) -> Result<Self> {
        if hypotheses.is_empty() {
            return Err(Error::EmptyGraph);
        }
        for (i, h) in hypotheses.iter().enumerate() {
            if h.start >= h.end {
                return Err(Error::InvalidSpec(format!(
                    "hypothesis {i} `{}` starts at {} but ends at {}",
                    h.word,
                    h.start_time(),
                    h.end_time()
                )));
            }
            if !(h.acoustic > 0.0 && h.acoustic.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "hypothesis {i} `{}` has plausibility {}",
                    h.word, h.acoustic
                )));
            }
        }
        hypotheses.sort_by(canonical);
        let start = hypotheses.iter().map(|h| h.start).min().unwrap_or(0);
        let end = hypotheses.iter().map(|h| h.end).max().unwrap_or(0);
        Ok(WordGraph { hypotheses, start, end })
    }

    /// Parses `start TAB end TAB word TAB plausibility` records. Times are
    /// seconds and may carry a trailing `s`; `#` starts a comment.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut hyps = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(Error::parse(
                    source,
                    line_no,
                    format!("expected 4 tab-separated fields, found {}", fields.len()),
                ));
            }
            let time = |name: &str, s: &str| -> Result<f64> {
                let v: f64 = s
                    .trim_end_matches('s')
                    .parse()
                    .map_err(|_| Error::parse(source, line_no, format!("{name} `{s}` is not a number")))?;
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::parse(source, line_no, format!("{name} `{s}` is negative")));
                }
                Ok(v)
            };
            let start = time("start time", fields[0])?;
            let end = time("end time", fields[1])?;
            if fields[2].is_empty() {
                return Err(Error::parse(source, line_no, "word is empty"));
            }
            let acoustic: f64 = fields[3]
                .parse()
                .map_err(|_| Error::parse(source, line_no, format!("plausibility `{}` is not a number", fields[3])))?;
            if !(acoustic > 0.0 && acoustic.is_finite()) {
                return Err(Error::parse(source, line_no, format!("plausibility `{}` must be positive", fields[3])));
            }
            let h = WordHypothesis::new(start, end, fields[2], acoustic);
            if h.start >= h.end {
                return Err(Error::parse(
                    source,
                    line_no,
                    format!("start time {} is not before end time {}", fields[0], fields[1]),
                ));
            }
            hyps.push(h);
        }
        if hyps.is_empty() {
            return Err(Error::EmptyGraph);
        }
        WordGraph::new(hyps)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(Error::file(path))?;
        WordGraph::parse(&text, &path.display().to_string())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for h in &self.hypotheses {
            out.push_str(&format!(
                "{:.2}\t{:.2}\t{}\t{:e}\n",
                h.start_time(),
                h.end_time(),
                h.word,
                h.acoustic
            ));
        }
        out
    }

    pub fn hypotheses(&self) -> &[WordHypothesis] {
        &self.hypotheses
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn start(&self) -> Centis {
        self.start
    }

    pub fn end(&self) -> Centis {
        self.end
    }

    /// Index of the first hypothesis matching the given times and word.
    pub fn find(&self, start: f64, end: f64, word: &str) -> Option<usize> {
        let (s, e) = (to_centis(start), to_centis(end));
        self.hypotheses
            .iter()
            .position(|h| h.start == s && h.end == e && h.word == word)
    }

    /// Every path from an entry hypothesis to the graph end, by exhaustive
    /// depth-first search. Meant for small graphs.
    pub fn complete_paths(&self, gap: Centis) -> Vec<Vec<usize>> {
        let links = Links::new(self, gap);
        let mut out = Vec::new();
        let mut path = Vec::new();
        fn walk(links: &Links, i: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            path.push(i);
            if links.complete[i] {
                out.push(path.clone());
            }
            for &j in &links.successors[i] {
                walk(links, j, path, out);
            }
            path.pop();
        }
        for &e in &links.entries {
            walk(&links, e, &mut path, &mut out);
        }
        out.sort();
        out
    }

    /// Whether `path` is a valid sequence of connectable hypotheses.
    pub fn is_path(&self, path: &[usize], gap: Centis) -> bool {
        path.iter().all(|&i| i < self.len())
            && path
                .windows(2)
                .all(|w| connectable_centis(&self.hypotheses[w[0]], &self.hypotheses[w[1]], gap))
    }
}

fn connectable_centis(h1: &WordHypothesis, h2: &WordHypothesis, gap: Centis) -> bool {
    h2.start > h1.end && h2.start - h1.end <= gap
}

/// True iff the second hypothesis starts after the first ends, by at most
/// the configured gap.
pub fn connectable(h1: &WordHypothesis, h2: &WordHypothesis, config: &DecoderConfig) -> bool {
    connectable_centis(h1, h2, config.gap_centis())
}

/// Connectivity restricted to hypotheses that can still reach the graph end.
#[derive(Debug, Clone)]
struct Links {
    successors: Vec<Vec<usize>>,
    complete: Vec<bool>,
    entries: Vec<usize>,
}

impl Links {
    fn new(graph: &WordGraph, gap: Centis) -> Self {
        let hyps = &graph.hypotheses;
        let n = hyps.len();
        let complete: Vec<bool> = hyps.iter().map(|h| graph.end - h.end <= gap).collect();
        let mut reach = complete.clone();
        let mut successors = vec![Vec::new(); n];
        // successors start strictly later, so a reverse sweep in start order
        // sees every successor before its predecessors
        for i in (0..n).rev() {
            for j in i + 1..n {
                if connectable_centis(&hyps[i], &hyps[j], gap) && reach[j] {
                    successors[i].push(j);
                }
            }
            reach[i] = reach[i] || !successors[i].is_empty();
        }
        let entries = (0..n)
            .filter(|&i| hyps[i].start - graph.start <= gap && reach[i])
            .collect();
        Links {
            successors,
            complete,
            entries,
        }
    }

    fn max_acoustic(graph: &WordGraph, among: &[usize]) -> f64 {
        among
            .iter()
            .map(|&j| graph.hypotheses[j].acoustic)
            .fold(f64::MIN_POSITIVE, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnowledgeSources {
    pub syntax: bool,
    pub semantics: bool,
}

impl Default for KnowledgeSources {
    fn default() -> Self {
        KnowledgeSources {
            syntax: true,
            semantics: true,
        }
    }
}

impl KnowledgeSources {
    pub const ACOUSTIC: KnowledgeSources = KnowledgeSources {
        syntax: false,
        semantics: false,
    };
    pub const ACOUSTIC_SYNTAX: KnowledgeSources = KnowledgeSources {
        syntax: true,
        semantics: false,
    };
    pub const ALL: KnowledgeSources = KnowledgeSources {
        syntax: true,
        semantics: true,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoderConfig {
    pub beam_width: usize,
    /// Largest allowed pause between connected hypotheses, in seconds.
    pub gap: f64,
    pub ranking: RankingMode,
    pub sources: KnowledgeSources,
    pub trace: bool,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            beam_width: 10,
            gap: 0.03,
            ranking: RankingMode::Normalized,
            sources: KnowledgeSources::default(),
            trace: false,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_width == 0 {
            return Err(Error::InvalidConfig("beam width must be at least 1".into()));
        }
        if !(self.gap >= 0.01 - 1e-9) {
            return Err(Error::InvalidConfig(format!("gap {} is below 0.01 s", self.gap)));
        }
        Ok(())
    }

    pub fn gap_centis(&self) -> Centis {
        to_centis(self.gap)
    }
}

/// One live word-hypothesis sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceState {
    /// Hypothesis indices; doubles as the stable identifier.
    pub path: Vec<usize>,
    pub tagger: TaggerState,
    pub predictor: PredictorState,
    pub annotations: Vec<TokenAnnotation>,
    pub score: SequenceScore,
}

impl SequenceState {
    pub fn new(models: &Models) -> Self {
        SequenceState {
            path: Vec::new(),
            tagger: TaggerState::new(models),
            predictor: PredictorState::new(models),
            annotations: Vec::new(),
            score: sequence_score(&[]),
        }
    }

    pub fn id(&self) -> String {
        self.path.iter().map(usize::to_string).collect::<Vec<_>>().join(".")
    }

    pub fn words(&self) -> Vec<&str> {
        self.annotations.iter().map(|a| a.word.as_str()).collect()
    }

    fn last_surviving(&self) -> Option<usize> {
        self.annotations.iter().rposition(|a| !a.is_deleted())
    }

    /// Adds one word with its normalized acoustic plausibility. Pauses and
    /// interjections are marked on arrival and do not advance any context.
    /// A detected word repair marks the earlier word and recomputes all
    /// contexts over the surviving words.
    pub fn push_word(
        &mut self,
        lexicon: &Lexicon,
        models: &Models,
        sources: KnowledgeSources,
        index: usize,
        word: &str,
        acoustic: f64,
    ) {
        let lookup = lexicon.lookup(word);
        self.path.push(index);
        if let Some(reason) = pause_or_interjection(word, &lookup) {
            self.annotations.push(TokenAnnotation::symbolic(word, &lookup, reason));
            self.score.push(StepScore::unjudged(acoustic).expect("normalized acoustic"));
            return;
        }
        let ann = tag_lookup(models, &mut self.tagger, word, &lookup);
        let step = if self.predictor.has_prediction() {
            let (syn, sem) = self.predictor.plausibility(&ann);
            let syn = if sources.syntax { syn } else { 1.0 };
            let sem = if sources.semantics { sem } else { 1.0 };
            StepScore::new(acoustic, syn, sem)
        } else {
            StepScore::unjudged(acoustic)
        };
        self.score.push(step.expect("plausibilities in [0, 1]"));

        let repair = self.last_surviving().and_then(|p| {
            let prefs = word_equality(models, &self.annotations[p], &ann);
            let (fire, score) = decide_word_error(models, &prefs);
            fire.then_some((p, prefs, score))
        });
        let current = self.annotations.len();
        self.annotations.push(ann);
        match repair {
            None => self.predictor.observe(models, &self.annotations[current]),
            Some((p, preferences, score)) => {
                self.annotations[p].deleted = Some(Deletion {
                    reason: DeletionReason::WordRepair,
                    decision: Some(RepairDecision {
                        kind: RepairKind::Word,
                        deleted: vec![p],
                        repaired_by: current,
                        preferences,
                        score,
                    }),
                });
                self.rebuild_contexts(lexicon, models);
            }
        }
    }

    fn rebuild_contexts(&mut self, lexicon: &Lexicon, models: &Models) {
        self.tagger = TaggerState::new(models);
        self.predictor = PredictorState::new(models);
        for a in self.annotations.iter_mut().filter(|a| !a.is_deleted()) {
            *a = tag_lookup(models, &mut self.tagger, &a.word, &lexicon.lookup(&a.word));
            self.predictor.observe(models, a);
        }
    }
}

/// A finished sequence with its final, corrected annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedSequence {
    pub path: Vec<usize>,
    pub score: SequenceScore,
    pub annotations: Vec<TokenAnnotation>,
}

impl DecodedSequence {
    pub fn id(&self) -> String {
        self.path.iter().map(usize::to_string).collect::<Vec<_>>().join(".")
    }

    pub fn words(&self) -> Vec<&str> {
        self.annotations.iter().map(|a| a.word.as_str()).collect()
    }

    /// Words that survived all corrections.
    pub fn surviving_words(&self) -> Vec<&str> {
        self.annotations
            .iter()
            .filter(|a| !a.is_deleted())
            .map(|a| a.word.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeamEntry {
    pub id: String,
    pub words: Vec<String>,
    pub score: f64,
}

/// One expansion step of the search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEvent {
    pub step: usize,
    pub frontier: f64,
    pub expanded: usize,
    pub created: usize,
    pub completed: usize,
    pub pruned: Vec<String>,
    pub beam: Vec<BeamEntry>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Beam {
    pub live: Vec<SequenceState>,
    pub complete: Vec<SequenceState>,
    pub steps: usize,
}

pub struct Decoder<'a> {
    lexicon: &'a Lexicon,
    models: &'a Models,
    config: DecoderConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoding {
    pub ranked: Vec<DecodedSequence>,
    pub trace: Vec<TraceEvent>,
}

impl Decoding {
    pub fn trace_lines(&self) -> String {
        self.trace
            .iter()
            .map(|e| serde_json::to_string(e).expect("plain data serializes") + "\n")
            .collect()
    }
}

impl<'a> Decoder<'a> {
    pub fn new(lexicon: &'a Lexicon, models: &'a Models, config: DecoderConfig) -> Result<Self> {
        config.validate()?;
        Ok(Decoder {
            lexicon,
            models,
            config,
        })
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    fn order(&self, graph: &WordGraph, a: &SequenceState, b: &SequenceState) -> Ordering {
        let end = |s: &SequenceState| s.path.last().map(|&i| graph.hypotheses[i].end);
        b.score
            .value(self.config.ranking)
            .total_cmp(&a.score.value(self.config.ranking))
            .then(a.path.len().cmp(&b.path.len()))
            .then(end(a).cmp(&end(b)))
            .then_with(|| a.words().cmp(&b.words()))
            .then_with(|| a.path.cmp(&b.path))
    }

    fn extend(&self, graph: &WordGraph, base: &SequenceState, index: usize, norm: f64) -> SequenceState {
        let h = &graph.hypotheses[index];
        let mut s = base.clone();
        s.push_word(self.lexicon, self.models, self.config.sources, index, &h.word, h.acoustic / norm);
        s
    }

    /// Scores one explicit path exactly as the search would.
    pub fn score_path(&self, graph: &WordGraph, path: &[usize]) -> SequenceState {
        let links = Links::new(graph, self.config.gap_centis());
        let mut s = SequenceState::new(self.models);
        for (k, &i) in path.iter().enumerate() {
            let among = if k == 0 {
                &links.entries
            } else {
                &links.successors[path[k - 1]]
            };
            let norm = Links::max_acoustic(graph, among).max(graph.hypotheses[i].acoustic);
            s = self.extend(graph, &s, i, norm);
        }
        s
    }

    fn classify(links: &Links, s: SequenceState, live: &mut Vec<SequenceState>, complete: &mut Vec<SequenceState>) -> bool {
        let last = *s.path.last().expect("non-empty");
        let done = links.complete[last];
        if !links.successors[last].is_empty() {
            if done {
                complete.push(s.clone());
            }
            live.push(s);
        } else if done {
            complete.push(s);
        }
        done
    }

    /// Fresh sequences for every entry hypothesis.
    pub fn start(&self, graph: &WordGraph) -> Beam {
        let links = Links::new(graph, self.config.gap_centis());
        let norm = Links::max_acoustic(graph, &links.entries);
        let empty = SequenceState::new(self.models);
        let fresh: Vec<SequenceState> = links
            .entries
            .par_iter()
            .map(|&i| self.extend(graph, &empty, i, norm))
            .collect();
        let mut beam = Beam::default();
        for s in fresh {
            Self::classify(&links, s, &mut beam.live, &mut beam.complete);
        }
        self.prune(graph, &mut beam.live);
        beam
    }

    fn prune(&self, graph: &WordGraph, live: &mut Vec<SequenceState>) -> Vec<String> {
        live.sort_by(|a, b| self.order(graph, a, b));
        live.split_off(self.config.beam_width.min(live.len()))
            .iter()
            .map(SequenceState::id)
            .collect()
    }

    /// Expands every live sequence ending at the earliest frontier time, then
    /// re-ranks and truncates the live set. Returns `None` once nothing is
    /// left to expand.
    pub fn advance(&self, graph: &WordGraph, beam: &mut Beam) -> Option<TraceEvent> {
        let links = Links::new(graph, self.config.gap_centis());
        self.advance_with(graph, &links, beam)
    }

    fn advance_with(&self, graph: &WordGraph, links: &Links, beam: &mut Beam) -> Option<TraceEvent> {
        let end = |s: &SequenceState| graph.hypotheses[*s.path.last().expect("non-empty")].end;
        let frontier = beam.live.iter().map(end).min()?;
        let (now, rest): (Vec<_>, Vec<_>) = std::mem::take(&mut beam.live)
            .into_iter()
            .partition(|s| end(s) == frontier);
        let created: Vec<SequenceState> = now
            .par_iter()
            .flat_map_iter(|s| {
                let last = *s.path.last().expect("non-empty");
                let succ = &links.successors[last];
                let norm = Links::max_acoustic(graph, succ);
                succ.iter().map(move |&j| self.extend(graph, s, j, norm))
            })
            .collect();
        let n_created = created.len();
        let mut live = rest;
        let mut completed = 0;
        for s in created {
            if Self::classify(links, s, &mut live, &mut beam.complete) {
                completed += 1;
            }
        }
        let pruned = self.prune(graph, &mut live);
        beam.live = live;
        beam.steps += 1;
        Some(TraceEvent {
            step: beam.steps,
            frontier: f64::from(frontier) / 100.0,
            expanded: now.len(),
            created: n_created,
            completed,
            pruned,
            beam: if self.config.trace {
                beam.live
                    .iter()
                    .map(|s| BeamEntry {
                        id: s.id(),
                        words: s.words().iter().map(|w| w.to_string()).collect(),
                        score: s.score.value(self.config.ranking),
                    })
                    .collect()
            } else {
                Vec::new()
            },
        })
    }

    /// Runs the search to the end of the graph and returns all complete
    /// sequences, best first, with corrections applied.
    pub fn decode(&self, graph: &WordGraph) -> Result<Decoding> {
        if graph.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let links = Links::new(graph, self.config.gap_centis());
        let mut beam = self.start(graph);
        let mut trace = Vec::new();
        let mut longest: Vec<Vec<usize>> = beam.live.iter().map(|s| s.path.clone()).collect();
        while let Some(event) = self.advance_with(graph, &links, &mut beam) {
            for s in &beam.live {
                if longest.first().is_none_or(|l| s.path.len() > l.len()) {
                    longest = vec![s.path.clone()];
                } else if longest[0].len() == s.path.len() && longest.len() < 3 {
                    longest.push(s.path.clone());
                }
            }
            if self.config.trace {
                trace.push(event);
            }
        }
        if beam.complete.is_empty() {
            let longest = if longest.is_empty() {
                graph.hypotheses.iter().take(1).map(|h| vec![h.word.clone()]).collect()
            } else {
                longest
                    .iter()
                    .map(|p| p.iter().map(|&i| graph.hypotheses[i].word.clone()).collect())
                    .collect()
            };
            return Err(Error::NoCompletePath { longest });
        }
        let mut complete = beam.complete;
        complete.sort_by(|a, b| self.order(graph, a, b));
        let ranked = complete
            .into_par_iter()
            .map(|s| DecodedSequence {
                annotations: apply_corrections(self.lexicon, self.models, &s.annotations),
                path: s.path,
                score: s.score,
            })
            .collect();
        Ok(Decoding { ranked, trace })
    }

    /// Scores every complete path exhaustively and ranks them like `decode`.
    pub fn brute_force(&self, graph: &WordGraph) -> Vec<DecodedSequence> {
        let mut all: Vec<SequenceState> = graph
            .complete_paths(self.config.gap_centis())
            .par_iter()
            .map(|p| self.score_path(graph, p))
            .collect();
        all.sort_by(|a, b| self.order(graph, a, b));
        all.into_iter()
            .map(|s| DecodedSequence {
                annotations: apply_corrections(self.lexicon, self.models, &s.annotations),
                path: s.path,
                score: s.score,
            })
            .collect()
    }
}

/// One JSON object per ranked sequence.
pub fn ranked_lines(decoding: &Decoding, ranking: RankingMode) -> String {
    #[derive(Serialize)]
    struct Line<'a> {
        rank: usize,
        id: String,
        score: f64,
        words: Vec<&'a str>,
        surviving: Vec<&'a str>,
        labels: Vec<[&'static str; 4]>,
        deleted: Vec<Option<&'static str>>,
    }
    decoding
        .ranked
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let line = Line {
                rank: i + 1,
                id: d.id(),
                score: d.score.value(ranking),
                words: d.words(),
                surviving: d.surviving_words(),
                labels: d.annotations.iter().map(TokenAnnotation::labels).collect(),
                deleted: d
                    .annotations
                    .iter()
                    .map(|a| a.deletion_reason().map(DeletionReason::as_str))
                    .collect(),
            };
            serde_json::to_string(&line).expect("plain data serializes") + "\n"
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn h(s: f64, e: f64, w: &str, p: f64) -> WordHypothesis {
        WordHypothesis::new(s, e, w, p)
    }

    fn linear(words: &[&str]) -> WordGraph {
        let hyps = words
            .iter()
            .enumerate()
            .map(|(i, w)| h(i as f64 * 0.2, i as f64 * 0.2 + 0.19, w, 0.01))
            .collect();
        WordGraph::new(hyps).unwrap()
    }

    fn setup() -> (Lexicon, Models) {
        (Lexicon::builtin(), Models::untrained(14, 2).unwrap())
    }

    #[test]
    fn connection_predicate() {
        let cfg = DecoderConfig::default();
        assert!(connectable(&h(0.20, 0.43, "am", 1.0), &h(0.44, 0.80, "sechsten", 1.0), &cfg));
        assert!(connectable(&h(1.23, 1.30, "ich", 1.0), &h(1.31, 1.38, "ich", 1.0), &cfg));
        assert!(!connectable(&h(1.23, 1.30, "ich", 1.0), &h(1.30, 1.38, "ich", 1.0), &cfg));
        assert!(!connectable(&h(1.23, 1.37, "ich", 1.0), &h(1.31, 1.38, "ich", 1.0), &cfg));
        assert!(!connectable(&h(0.0, 0.1, "a", 1.0), &h(0.14, 0.2, "b", 1.0), &cfg));
    }

    #[test]
    fn parse_records() {
        let text = "# start end word plausibility\n1.22s\t1.37s\tich\t1.527688e-03\n1.23\t1.30\tich\t1.178415e-02\n";
        let g = WordGraph::parse(text, "t").unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.hypotheses()[0].start, 122);
        assert_eq!(g.hypotheses()[1].acoustic, 1.178415e-02);
        assert_eq!(WordGraph::parse(&g.to_text(), "t").unwrap(), g);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(WordGraph::parse("", "t"), Err(Error::EmptyGraph)));
        let e = WordGraph::parse("0.5\t0.4\tich\t0.1\n", "g.wg").unwrap_err();
        assert!(e.to_string().contains("line 1"), "{e}");
        let e = WordGraph::parse("0.1\t0.4\tich\n", "g.wg").unwrap_err();
        assert!(e.to_string().contains("4 tab-separated"), "{e}");
        let e = WordGraph::parse("0.1\t0.4\tich\t0.1\n0.5\tx\tdu\t0.1\n", "g.wg").unwrap_err();
        assert!(e.to_string().contains("line 2") && e.to_string().contains("end time"), "{e}");
    }

    #[test]
    fn record_order_is_irrelevant() {
        let a = WordGraph::parse("0.0\t0.2\tich\t0.1\n0.21\t0.4\tmeine\t0.2\n", "a").unwrap();
        let b = WordGraph::parse("0.21\t0.4\tmeine\t0.2\n0.0\t0.2\tich\t0.1\n", "b").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        let mut c = DecoderConfig::default();
        assert!(c.validate().is_ok());
        c.beam_width = 0;
        assert!(c.validate().is_err());
        c.beam_width = 1;
        c.gap = 0.005;
        assert!(c.validate().is_err());
    }

    #[test]
    fn single_hypothesis_graph() {
        let (lex, m) = setup();
        let g = WordGraph::new(vec![h(0.0, 0.3, "März", 0.004)]).unwrap();
        let d = Decoder::new(&lex, &m, DecoderConfig::default()).unwrap();
        let out = d.decode(&g).unwrap();
        assert_eq!(out.ranked.len(), 1);
        let s = &out.ranked[0].score;
        assert_eq!(s.steps.len(), 1);
        assert_eq!(s.normalized, s.steps[0].combined);
    }

    #[test]
    fn beam_of_one_on_a_linear_graph() {
        let (lex, m) = setup();
        let g = linear(&["ich", "meine", "natürlich", "März"]);
        let cfg = DecoderConfig {
            beam_width: 1,
            trace: true,
            ..DecoderConfig::default()
        };
        let d = Decoder::new(&lex, &m, cfg).unwrap();
        let mut beam = d.start(&g);
        assert_eq!(beam.live.len(), 1);
        while d.advance(&g, &mut beam).is_some() {
            assert!(beam.live.len() <= 1);
        }
        assert_eq!(beam.complete.len(), 1);
        let out = d.decode(&g).unwrap();
        assert_eq!(out.ranked[0].words(), vec!["ich", "meine", "natürlich", "März"]);
        assert!(out.trace.iter().all(|e| e.pruned.is_empty()));
    }

    #[test]
    fn dead_ends_are_dropped() {
        let (lex, m) = setup();
        // "Termin" ends early with nothing after it
        let g = WordGraph::new(vec![
            h(0.0, 0.2, "ich", 0.1),
            h(0.21, 0.4, "habe", 0.1),
            h(0.21, 0.3, "Termin", 0.5),
            h(0.41, 0.7, "Zeit", 0.1),
        ])
        .unwrap();
        let d = Decoder::new(&lex, &m, DecoderConfig::default()).unwrap();
        let out = d.decode(&g).unwrap();
        assert_eq!(out.ranked.len(), 1);
        assert_eq!(out.ranked[0].words(), vec!["ich", "habe", "Zeit"]);
    }

    #[test]
    fn no_complete_path_reports_partials() {
        let (lex, m) = setup();
        let g = WordGraph::new(vec![h(0.0, 0.2, "ich", 0.1), h(0.5, 0.9, "Zeit", 0.1)]).unwrap();
        let d = Decoder::new(&lex, &m, DecoderConfig::default()).unwrap();
        match d.decode(&g) {
            Err(Error::NoCompletePath { longest }) => assert!(!longest.is_empty()),
            other => panic!("expected no complete path, got {other:?}"),
        }
    }

    #[test]
    fn interjection_marked_during_search() {
        let (lex, m) = setup();
        let g = linear(&["ähm", "ich", "komme"]);
        let d = Decoder::new(&lex, &m, DecoderConfig::default()).unwrap();
        let out = d.decode(&g).unwrap();
        let top = &out.ranked[0];
        assert_eq!(top.annotations[0].deletion_reason(), Some(DeletionReason::Interjection));
        assert_eq!(top.score.steps[0].syntactic, 1.0);
        assert_eq!(top.surviving_words(), vec!["ich", "komme"]);
    }

    fn small_graph() -> impl Strategy<Value = WordGraph> {
        let words = ["ich", "meine", "März", "am", "Montag", "habe", "Zeit", "ähm", "den", "Termin"];
        proptest::collection::vec((0u32..6, 1u32..3, 0usize..10, 1u32..100), 1..10).prop_map(move |v| {
            let hyps = v
                .into_iter()
                .map(|(slot, len, w, p)| WordHypothesis {
                    start: slot * 10,
                    end: slot * 10 + len * 10 - 1,
                    word: words[w].to_string(),
                    acoustic: f64::from(p) / 1000.0,
                })
                .collect();
            WordGraph::new(hyps).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn wide_beam_matches_exhaustive_search(g in small_graph()) {
            let lex = Lexicon::builtin();
            let m = Models::untrained(7, 5).unwrap();
            let paths = g.complete_paths(3);
            let cfg = DecoderConfig { beam_width: paths.len().max(1), ..DecoderConfig::default() };
            let d = Decoder::new(&lex, &m, cfg).unwrap();
            let oracle = d.brute_force(&g);
            match d.decode(&g) {
                Ok(out) => {
                    prop_assert_eq!(out.ranked, oracle);
                }
                Err(Error::NoCompletePath { .. }) => prop_assert!(paths.is_empty()),
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }

        #[test]
        fn every_result_is_a_path(g in small_graph(), w in 1usize..4) {
            let lex = Lexicon::builtin();
            let m = Models::untrained(7, 6).unwrap();
            let cfg = DecoderConfig { beam_width: w, ..DecoderConfig::default() };
            let d = Decoder::new(&lex, &m, cfg).unwrap();
            let all = g.complete_paths(3);
            if let Ok(out) = d.decode(&g) {
                for s in &out.ranked {
                    prop_assert!(g.is_path(&s.path, 3));
                    prop_assert!(all.contains(&s.path));
                }
            }
        }
    }
}
