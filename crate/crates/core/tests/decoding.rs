use std::sync::OnceLock;

use proptest::prelude::*;

use flatparse::corpus::{appointment_graph, APPOINTMENT_SENTENCE};
use flatparse::harness::{build_system, SystemConfig, TrainedSystem};
use flatparse::lattice::{Decoder, DecoderConfig, KnowledgeSources, WordGraph, WordHypothesis};

fn system() -> &'static TrainedSystem {
    static SYSTEM: OnceLock<TrainedSystem> = OnceLock::new();
    SYSTEM.get_or_init(|| build_system(&SystemConfig::default()).unwrap())
}

fn gold_rank(graph: &WordGraph, sources: KnowledgeSources) -> usize {
    let s = system();
    let config = DecoderConfig {
        beam_width: 1000,
        sources,
        ..DecoderConfig::default()
    };
    let out = Decoder::new(&s.lexicon, &s.models, config).unwrap().decode(graph).unwrap();
    out.ranked
        .iter()
        .position(|d| d.words().join(" ") == APPOINTMENT_SENTENCE)
        .expect("gold path present")
}

#[test]
fn both_listed_paths_exist_before_pruning() {
    let g = appointment_graph();
    let sentences: Vec<String> = g
        .complete_paths(DecoderConfig::default().gap_centis())
        .iter()
        .map(|p| p.iter().map(|&i| g.hypotheses()[i].word.as_str()).collect::<Vec<_>>().join(" "))
        .collect();
    assert!(sentences.iter().any(|s| s == APPOINTMENT_SENTENCE));
    assert!(sentences.iter().any(|s| s == "Ähm ich am sechsten April wenn ich ich leider außer Hause"));
}

#[test]
fn language_knowledge_recovers_from_acoustic_confusion() {
    // Make the recognizer prefer "wenn" over "bin".
    let hyps = appointment_graph()
        .hypotheses()
        .iter()
        .map(|h| {
            let acoustic = if h.word == "wenn" { 2.0e-2 } else { h.acoustic };
            WordHypothesis::new(h.start_time(), h.end_time(), &h.word, acoustic)
        })
        .collect();
    let g = WordGraph::new(hyps).unwrap();
    let acoustic = gold_rank(&g, KnowledgeSources::ACOUSTIC);
    let full = gold_rank(&g, KnowledgeSources::ALL);
    assert!(acoustic > 0);
    assert!(full <= acoustic, "full {full} acoustic {acoustic}");
}

fn small_graph() -> impl Strategy<Value = WordGraph> {
    let words = ["ich", "meine", "März", "am", "Montag", "habe", "Zeit", "ähm", "den", "Termin", "blorf"];
    proptest::collection::vec((0u32..6, 1u32..3, 0usize..11, 1u32..100), 1..12).prop_map(move |v| {
        let hyps = v
            .into_iter()
            .map(|(slot, len, w, p)| {
                let start = f64::from(slot) / 10.0;
                WordHypothesis::new(start, start + f64::from(len) / 10.0 - 0.01, words[w], f64::from(p) / 1000.0)
            })
            .collect();
        WordGraph::new(hyps).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn results_are_complete_paths(g in small_graph(), w in 1usize..5) {
        let s = system();
        let config = DecoderConfig { beam_width: w, ..DecoderConfig::default() };
        if let Ok(out) = Decoder::new(&s.lexicon, &s.models, config).unwrap().decode(&g) {
            for d in &out.ranked {
                prop_assert!(g.is_path(&d.path, config.gap_centis()));
            }
        }
    }

    #[test]
    fn no_beam_beats_an_exhaustive_one(g in small_graph()) {
        let s = system();
        let best = |w: usize| {
            let config = DecoderConfig { beam_width: w, ..DecoderConfig::default() };
            Decoder::new(&s.lexicon, &s.models, config)
                .unwrap()
                .decode(&g)
                .ok()
                .map(|out| out.ranked[0].score.value(config.ranking))
        };
        let paths = g.complete_paths(DecoderConfig::default().gap_centis()).len();
        let Some(exhaustive) = best(paths.max(1)) else {
            return Ok(());
        };
        for w in 1..6 {
            let narrow = best(w).unwrap();
            prop_assert!(narrow <= exhaustive, "width {w}: {narrow} > {exhaustive}");
        }
    }
}
