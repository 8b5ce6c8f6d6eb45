//! Trains a small system, saves the weights and reports per-network test
//! accuracy next to the reference values.

use flatparse::harness::{build_system, network_accuracies, SystemConfig, REFERENCE_NETWORK_ACCURACY};
use flatparse::models::Models;
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
    let dir = std::env::temp_dir().join("flatparse-example-models");
    system.models.save(&dir)?;
    assert_eq!(Models::load(&dir)?, system.models);
    println!("weights written to {}", dir.display());

    let test = system.corpus.test();
    let acc = network_accuracies(&system.models, &test, &system.lexicon)?;
    println!("{:<14} {:>8} {:>10}", "network", "test", "reference");
    for (id, a) in &acc {
        let reference = REFERENCE_NETWORK_ACCURACY
            .iter()
            .find(|(r, _)| r == id)
            .map_or("-".to_string(), |(_, v)| format!("{v:.2}"));
        println!("{:<14} {a:>8.3} {reference:>10}", id.name());
    }
    Ok(())
}
