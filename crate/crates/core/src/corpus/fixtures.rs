use crate::lattice::WordGraph;

use super::AnnotatedCorpus;

/// Example utterances with hand-entered gold labels, always used for training.
pub const FIXTURES: &str = include_str!("../../data/fixtures.corpus");

/// A small recognizer word graph with one desired path.
pub const APPOINTMENT_GRAPH: &str = include_str!("../../data/appointment.wg");

pub const APPOINTMENT_SENTENCE: &str = "Ähm am sechsten April bin ich leider außer Hause";

pub fn fixture_corpus() -> AnnotatedCorpus {
    AnnotatedCorpus::parse(FIXTURES, "fixtures.corpus").expect("bundled fixtures parse")
}

pub fn appointment_graph() -> WordGraph {
    WordGraph::parse(APPOINTMENT_GRAPH, "appointment.wg").expect("bundled word graph parses")
}
