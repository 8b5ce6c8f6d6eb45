//! Decodes a word graph with the incremental beam search and prints the
//! best sequences and the search trace.

use flatparse::corpus::appointment_graph;
use flatparse::harness::{build_system, SystemConfig};
use flatparse::lattice::{Decoder, DecoderConfig};
use flatparse::neural::TrainingConfig;

fn main() -> flatparse::Result<()> {
    let config = SystemConfig {
        corpus_size: 60,
        training: TrainingConfig {
            epochs: 1500,
            ..TrainingConfig::default()
        },
        ..SystemConfig::default()
    };
    let system = build_system(&config)?;
    let graph = appointment_graph();
    let decoder_config = DecoderConfig {
        trace: true,
        ..DecoderConfig::default()
    };
    let decoding = Decoder::new(&system.lexicon, &system.models, decoder_config)?.decode(&graph)?;
    for event in &decoding.trace {
        println!(
            "t={:.2}s expanded {} created {} completed {} pruned {}",
            event.frontier,
            event.expanded,
            event.created,
            event.completed,
            event.pruned.len()
        );
    }
    for (rank, s) in decoding.ranked.iter().take(5).enumerate() {
        let marks: Vec<String> = s
            .annotations
            .iter()
            .filter_map(|a| a.deletion_reason().map(|r| format!("{}={}", a.word, r.as_str())))
            .collect();
        println!(
            "#{} {:.4} {} {:?}",
            rank + 1,
            s.score.value(decoder_config.ranking),
            s.words().join(" "),
            marks
        );
    }
    Ok(())
}
