//! System training, evaluation metrics and experiments.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    corpus_word_graphs, derive_training_sets, is_fixture, standard_corpus, AnnotatedCorpus, GrammarConfig, NoiseConfig,
    TrainingSets, Utterance,
};
use crate::correction::analyze_transcript;
use crate::error::{Error, Result};
use crate::lattice::{Decoder, DecoderConfig, KnowledgeSources};
use crate::lexicon::{argmax, Axis, CategoryVector, Lexicon};
use crate::models::{Models, NetId, ERROR_NET_HIDDEN};
use crate::neural::{init_network, train, Network, SequenceDataset, TrainingConfig};
use crate::ngram::{exclusion_curve, fit_ngram, ExclusionCurve, Smoothing, MAX_ORDER};
use crate::tagger::{finalize_phrases, TokenAnnotation};

/// Per-network accuracies reported for the original meeting corpus. They
/// are not reproducible without that corpus and serve as reference only.
pub const REFERENCE_NETWORK_ACCURACY: [(NetId, f64); 7] = [
    (NetId::BasSynDis, 0.89),
    (NetId::BasSemDis, 0.86),
    (NetId::AbsSynCat, 0.84),
    (NetId::AbsSemCat, 0.83),
    (NetId::PhraseStart, 0.90),
    (NetId::WordError, 0.94),
    (NetId::PhraseError, 0.98),
];

/// Syntactic and semantic phrase accuracy reported for the original test set.
pub const REFERENCE_FLAT_ACCURACY: (f64, f64) = (0.74, 0.72);

/// The same after removing 5% and 10% of the lexicon.
pub const REFERENCE_ABLATED_ACCURACY: [(f64, f64, f64); 2] = [(0.05, 0.72, 0.67), (0.10, 0.70, 0.67)];

/// Everything needed to build a trained system from scratch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub training: TrainingConfig,
    pub grammar: GrammarConfig,
    /// Synthetic turns before adding the fixtures.
    pub corpus_size: usize,
    pub corpus_seed: u64,
    /// Per-network learning rates overriding `training.learning_rate`.
    pub learning_rates: BTreeMap<NetId, f64>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            training: TrainingConfig::default(),
            grammar: GrammarConfig::default(),
            corpus_size: 184,
            corpus_seed: 1,
            learning_rates: default_learning_rates(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedSystem {
    pub lexicon: Lexicon,
    pub models: Models,
    pub corpus: AnnotatedCorpus,
}

/// Trains every network on its dataset, in parallel. `learning_rates`
/// overrides the configured rate per network. Networks without training
/// data keep their initial weights.
pub fn train_models(sets: &TrainingSets, config: &TrainingConfig, learning_rates: &BTreeMap<NetId, f64>) -> Result<Models> {
    config.validate()?;
    let nets: Vec<Network> = NetId::ALL
        .par_iter()
        .enumerate()
        .map(|(i, &id)| {
            let cfg = net_config(id, i, config, learning_rates.get(&id).copied());
            cfg.validate()?;
            let net = init_network(id.spec(cfg.hidden_units), cfg.seed)?;
            let data = sets.get(id);
            if data.is_empty() {
                return Ok(net);
            }
            train(&net, data, &cfg).map(|(n, _)| n)
        })
        .collect::<Result<_>>()?;
    Models::from_networks(nets)
}

fn net_config(id: NetId, index: usize, base: &TrainingConfig, rate: Option<f64>) -> TrainingConfig {
    let hidden_units = match id {
        NetId::WordError | NetId::PhraseError => ERROR_NET_HIDDEN,
        _ => base.hidden_units,
    };
    TrainingConfig {
        hidden_units,
        seed: base.seed.wrapping_add(index as u64),
        learning_rate: rate.unwrap_or(base.learning_rate),
        ..*base
    }
}

/// Learning rates picked per network by [`learning_rate_sweep`] on the
/// standard corpus.
pub fn default_learning_rates() -> BTreeMap<NetId, f64> {
    NetId::ALL.iter().map(|&id| (id, DEFAULT_RATES[id as usize])).collect()
}

const DEFAULT_RATES: [f64; 13] = [0.03, 0.1, 0.03, 0.01, 0.01, 0.01, 0.01, 0.03, 0.03, 0.1, 0.03, 0.003, 0.03];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub net: NetId,
    pub learning_rate: f64,
    pub accuracy: f64,
}

/// Holds out a fraction of the non-fixture training turns for validation.
pub fn validation_split(corpus: &AnnotatedCorpus, fraction: f64, seed: u64) -> Result<(AnnotatedCorpus, AnnotatedCorpus)> {
    let mut train = corpus.train();
    train.resplit(1.0 - fraction, seed, is_fixture)?;
    let fit = train.train();
    let validation = train.test();
    if validation.utterances().next().is_none() {
        return Err(Error::EmptyTestSet);
    }
    Ok((fit, validation))
}

/// Trains every network at each learning rate on part of the training
/// split and scores it on the held-out rest.
pub fn learning_rate_sweep(
    corpus: &AnnotatedCorpus,
    lexicon: &Lexicon,
    base: &TrainingConfig,
    rates: &[f64],
    seed: u64,
) -> Result<Vec<SweepRow>> {
    let (fit, validation) = validation_split(corpus, 0.25, seed)?;
    let fit_sets = derive_training_sets(&fit, lexicon)?;
    let val_sets = derive_training_sets(&validation, lexicon)?;
    let jobs: Vec<(usize, NetId, f64)> = NetId::ALL
        .iter()
        .enumerate()
        .flat_map(|(i, &id)| rates.iter().map(move |&r| (i, id, r)))
        .collect();
    jobs.par_iter()
        .map(|&(i, id, rate)| {
            let cfg = net_config(id, i, base, Some(rate));
            cfg.validate()?;
            let net = init_network(id.spec(cfg.hidden_units), cfg.seed)?;
            let net = if fit_sets.get(id).is_empty() {
                net
            } else {
                train(&net, fit_sets.get(id), &cfg)?.0
            };
            let val = if val_sets.get(id).is_empty() { fit_sets.get(id) } else { val_sets.get(id) };
            Ok(SweepRow {
                net: id,
                learning_rate: rate,
                accuracy: network_accuracy(&net, val)?,
            })
        })
        .collect()
}

/// Best rate per network; ties go to the rate listed first.
pub fn select_learning_rates(rows: &[SweepRow]) -> BTreeMap<NetId, f64> {
    let mut best: BTreeMap<NetId, SweepRow> = BTreeMap::new();
    for r in rows {
        match best.get(&r.net) {
            Some(b) if b.accuracy >= r.accuracy => {}
            _ => {
                best.insert(r.net, *r);
            }
        }
    }
    best.into_iter().map(|(k, v)| (k, v.learning_rate)).collect()
}

/// Generates the standard corpus, derives the training sets from its
/// training split and trains all networks.
pub fn build_system(config: &SystemConfig) -> Result<TrainedSystem> {
    let lexicon = Lexicon::builtin();
    let corpus = standard_corpus(&config.grammar, config.corpus_size, config.corpus_seed)?;
    let sets = derive_training_sets(&corpus.train(), &lexicon)?;
    let models = train_models(&sets, &config.training, &config.learning_rates)?;
    Ok(TrainedSystem {
        lexicon,
        models,
        corpus,
    })
}

/// Fraction of patterns whose output argmax equals the target argmax, with
/// the context reset at every sequence start.
pub fn network_accuracy(net: &Network, dataset: &SequenceDataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    dataset.check(net.spec())?;
    let mut correct = 0usize;
    for seq in &dataset.sequences {
        let mut context = net.zero_context();
        for s in seq {
            let (out, hidden) = net.forward(&s.input, &context)?;
            if argmax(&out) == argmax(&s.target) {
                correct += 1;
            }
            if net.spec().recurrent {
                context = hidden;
            }
        }
    }
    Ok(correct as f64 / dataset.len() as f64)
}

/// Accuracy of every network on the datasets derived from `corpus`;
/// networks with no patterns are left out.
pub fn network_accuracies(models: &Models, corpus: &AnnotatedCorpus, lexicon: &Lexicon) -> Result<BTreeMap<NetId, f64>> {
    let sets = derive_training_sets(corpus, lexicon)?;
    NetId::ALL
        .iter()
        .filter(|id| !sets.get(**id).is_empty())
        .map(|&id| Ok((id, network_accuracy(models.get(id), sets.get(id))?)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatAccuracy {
    pub syntactic: f64,
    pub semantic: f64,
    pub phrases: usize,
}

/// Phrase-level scoring against gold: a gold phrase counts as correct on
/// an axis when the system produced a phrase over exactly the same tokens
/// with the same abstract label. Outputs whose length differs from the
/// gold utterance score zero for that utterance.
pub fn overall_flat_accuracy(system: &[Vec<TokenAnnotation>], gold: &[&Utterance]) -> FlatAccuracy {
    let mut syn = 0usize;
    let mut sem = 0usize;
    let mut total = 0usize;
    for (out, u) in system.iter().zip(gold) {
        let gold_phrases = u.gold_phrases();
        total += gold_phrases.len();
        if out.len() != u.len() {
            continue;
        }
        let Ok(found) = finalize_phrases(out) else { continue };
        for g in &gold_phrases {
            if let Some(p) = found.iter().find(|p| p.tokens == g.tokens) {
                syn += usize::from(p.abs_syn == g.abs_syn);
                sem += usize::from(p.abs_sem == g.abs_sem);
            }
        }
    }
    let frac = |n: usize| if total == 0 { 0.0 } else { n as f64 / total as f64 };
    FlatAccuracy {
        syntactic: frac(syn),
        semantic: frac(sem),
        phrases: total,
    }
}

/// Analyzes every gold transcript of `corpus` and scores the result.
pub fn flat_accuracy_on(lexicon: &Lexicon, models: &Models, corpus: &AnnotatedCorpus) -> FlatAccuracy {
    let utts: Vec<&Utterance> = corpus.utterances().collect();
    let outputs: Vec<Vec<TokenAnnotation>> = utts
        .par_iter()
        .map(|u| analyze_transcript(lexicon, models, &u.words()))
        .collect();
    overall_flat_accuracy(&outputs, &utts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub fraction: f64,
    pub syntactic: f64,
    pub semantic: f64,
    pub syntactic_drop: f64,
    pub semantic_drop: f64,
    /// Utterances analyzed without failure, over all seeds.
    pub completed: usize,
    pub utterances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

/// Re-scores the test split with lexica missing a fraction of entries,
/// averaging over seeds. Removed words fall back to the default vectors.
pub fn ablation_experiment(
    corpus: &AnnotatedCorpus,
    lexicon: &Lexicon,
    models: &Models,
    fractions: &[f64],
    seeds: &[u64],
) -> Result<AblationTable> {
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("ablation needs at least one seed".into()));
    }
    let test = corpus.test();
    let n_utts = test.utterances().count();
    let base = flat_accuracy_on(lexicon, models, &test);
    let mut rows = Vec::new();
    for &fraction in fractions {
        let mut syn = 0.0;
        let mut sem = 0.0;
        let mut completed = 0;
        for &seed in seeds {
            let ablated = lexicon.ablate(fraction, seed)?;
            let acc = flat_accuracy_on(&ablated, models, &test);
            syn += acc.syntactic;
            sem += acc.semantic;
            completed += n_utts;
        }
        let k = seeds.len() as f64;
        let (syn, sem) = (syn / k, sem / k);
        rows.push(AblationRow {
            fraction,
            syntactic: syn,
            semantic: sem,
            syntactic_drop: base.syntactic - syn,
            semantic_drop: base.semantic - sem,
            completed,
            utterances: n_utts * seeds.len(),
        });
    }
    Ok(AblationTable { rows })
}

/// Gold basic category sequences over the tagging stream of each utterance.
pub fn category_sequences(corpus: &AnnotatedCorpus, axis: Axis) -> Vec<Vec<usize>> {
    corpus
        .utterances()
        .map(|u| {
            u.tagging_positions()
                .into_iter()
                .map(|i| match axis {
                    Axis::BasicSem => u.tokens[i].basic_sem,
                    _ => u.tokens[i].basic_syn,
                })
                .collect::<Vec<_>>()
        })
        .filter(|s| !s.is_empty())
        .collect()
}

/// Output of a prediction network after reading `history` from a fresh
/// context.
pub fn srn_predict(net: &Network, axis: Axis, history: &[usize]) -> Vec<f64> {
    let mut context = net.zero_context();
    let mut out = Vec::new();
    for &c in history {
        let input = CategoryVector::one_hot(axis, c);
        let (o, h) = net.forward(input.values(), &context).expect("prediction network shape");
        out = o;
        context = h;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisComparison {
    pub axis: Axis,
    pub srn: ExclusionCurve,
    pub ngrams: Vec<ExclusionCurve>,
}

impl AxisComparison {
    pub fn best_ngram(&self) -> &ExclusionCurve {
        self.ngrams
            .iter()
            .max_by(|a, b| a.mean().total_cmp(&b.mean()))
            .expect("at least one n-gram")
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("# {:?}\nk\t{}", self.axis, self.srn.name);
        for c in &self.ngrams {
            out.push_str(&format!("\t{}", c.name));
        }
        out.push('\n');
        for k in 0..self.srn.accuracy.len() {
            out.push_str(&format!("{k}\t{:.6}", self.srn.accuracy[k]));
            for c in &self.ngrams {
                out.push_str(&format!("\t{:.6}", c.accuracy[k]));
            }
            out.push('\n');
        }
        out.push_str(&format!("mean\t{:.6}", self.srn.mean()));
        for c in &self.ngrams {
            out.push_str(&format!("\t{:.6}", c.mean()));
        }
        out.push('\n');
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgramReport {
    pub axes: Vec<AxisComparison>,
    /// Seconds per forward step of the syntactic prediction network; only
    /// filled when timing was requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_seconds: Option<f64>,
}

/// Exclusion curves of both prediction networks against 1- to 5-gram
/// models fitted on the training split, all scored on the test split.
pub fn srn_vs_ngram_report(models: &Models, corpus: &AnnotatedCorpus, timing: bool) -> Result<NgramReport> {
    let (train_c, test_c) = (corpus.train(), corpus.test());
    let mut axes = Vec::new();
    for (axis, id) in [(Axis::BasicSyn, NetId::BasSynPre), (Axis::BasicSem, NetId::BasSemPre)] {
        let train_seqs = category_sequences(&train_c, axis);
        let test_seqs = category_sequences(&test_c, axis);
        let net = models.get(id);
        let srn = exclusion_curve(&format!("srn-{}", id.name()), |h| srn_predict(net, axis, h), &test_seqs, axis.len())?;
        let ngrams = (1..=MAX_ORDER)
            .map(|n| {
                let m = fit_ngram(&train_seqs, axis.len(), n, Smoothing::default())?;
                exclusion_curve(&format!("{n}-gram"), |h| m.predict(h), &test_seqs, axis.len())
            })
            .collect::<Result<_>>()?;
        axes.push(AxisComparison { axis, srn, ngrams });
    }
    let step_seconds = timing.then(|| {
        let net = models.get(NetId::BasSynPre);
        let input = CategoryVector::one_hot(Axis::BasicSyn, 0);
        let context = net.zero_context();
        let n = 20_000;
        let start = Instant::now();
        for _ in 0..n {
            std::hint::black_box(net.forward(input.values(), &context).expect("shape"));
        }
        start.elapsed().as_secs_f64() / f64::from(n)
    });
    Ok(NgramReport { axes, step_seconds })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceResult {
    pub sources: KnowledgeSources,
    pub mean_reciprocal_rank: f64,
    pub top1: f64,
    pub graphs: usize,
}

/// Rank of the gold path among decoded sequences on synthetic word graphs
/// built from test utterances, for several knowledge-source settings.
pub fn knowledge_source_experiment(
    system: &TrainedSystem,
    noise: &NoiseConfig,
    decoder: &DecoderConfig,
    graphs: usize,
    settings: &[KnowledgeSources],
    seed: u64,
) -> Result<Vec<SourceResult>> {
    let mut test = system.corpus.test();
    test.turns.iter_mut().for_each(|t| t.utterances.retain(|u| u.len() >= 2));
    test.turns.retain(|t| !t.utterances.is_empty());
    let all = corpus_word_graphs(&test, noise, &system.lexicon, seed)?;
    let chosen: Vec<_> = all.into_iter().take(graphs).collect();
    if chosen.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    settings
        .iter()
        .map(|&sources| {
            let cfg = DecoderConfig { sources, ..*decoder };
            let d = Decoder::new(&system.lexicon, &system.models, cfg)?;
            let ranks: Vec<Option<usize>> = chosen
                .par_iter()
                .map(|g| {
                    d.decode(&g.graph)
                        .ok()
                        .and_then(|out| out.ranked.iter().position(|s| s.path == g.gold))
                })
                .collect();
            let n = ranks.len() as f64;
            Ok(SourceResult {
                sources,
                mean_reciprocal_rank: ranks.iter().map(|r| r.map_or(0.0, |r| 1.0 / (r + 1) as f64)).sum::<f64>() / n,
                top1: ranks.iter().filter(|r| **r == Some(0)).count() as f64 / n,
                graphs: ranks.len(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub network_accuracy: BTreeMap<String, f64>,
    pub untrained_accuracy: BTreeMap<String, f64>,
    pub flat_accuracy: FlatAccuracy,
    pub exclusion: NgramReport,
    pub ablation: AblationTable,
    pub knowledge_sources: Vec<SourceResult>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes") + "\n"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub ablation_fractions: Vec<f64>,
    pub ablation_seeds: Vec<u64>,
    pub graphs: usize,
    pub graph_seed: u64,
    pub noise: NoiseConfig,
    pub decoder: DecoderConfig,
    pub timing: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            ablation_fractions: vec![0.0, 0.05, 0.10],
            ablation_seeds: vec![1, 2, 3],
            graphs: 60,
            graph_seed: 11,
            noise: NoiseConfig::default(),
            decoder: DecoderConfig::default(),
            timing: false,
        }
    }
}

/// Runs every experiment on a trained system.
pub fn evaluate(system: &TrainedSystem, config: &EvalConfig, seed: u64) -> Result<EvalReport> {
    let names = |m: BTreeMap<NetId, f64>| m.into_iter().map(|(k, v)| (k.name().to_string(), v)).collect();
    let test = system.corpus.test();
    let untrained = Models::untrained(system.models.hidden_units(), seed)?;
    Ok(EvalReport {
        network_accuracy: names(network_accuracies(&system.models, &test, &system.lexicon)?),
        untrained_accuracy: names(network_accuracies(&untrained, &test, &system.lexicon)?),
        flat_accuracy: flat_accuracy_on(&system.lexicon, &system.models, &test),
        exclusion: srn_vs_ngram_report(&system.models, &system.corpus, config.timing)?,
        ablation: ablation_experiment(
            &system.corpus,
            &system.lexicon,
            &system.models,
            &config.ablation_fractions,
            &config.ablation_seeds,
        )?,
        knowledge_sources: knowledge_source_experiment(
            system,
            &config.noise,
            &config.decoder,
            config.graphs,
            &[KnowledgeSources::ACOUSTIC, KnowledgeSources::ACOUSTIC_SYNTAX, KnowledgeSources::ALL],
            config.graph_seed,
        )?,
    })
}
