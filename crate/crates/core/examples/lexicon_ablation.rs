//! Flat accuracy on the test split with 5% and 10% of the lexicon removed.

use flatparse::harness::{ablation_experiment, build_system, SystemConfig, REFERENCE_ABLATED_ACCURACY};
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
    let table = ablation_experiment(&system.corpus, &system.lexicon, &system.models, &[0.0, 0.05, 0.10], &[1, 2, 3])?;
    println!("removed  syntactic  semantic  drop");
    for r in &table.rows {
        println!(
            "{:>6.0}%  {:>9.3}  {:>8.3}  {:.1}/{:.1} pp",
            r.fraction * 100.0,
            r.syntactic,
            r.semantic,
            r.syntactic_drop * 100.0,
            r.semantic_drop * 100.0
        );
    }
    for (f, syn, sem) in REFERENCE_ABLATED_ACCURACY {
        println!("reference at {:.0}%: {syn:.2} / {sem:.2}", f * 100.0);
    }
    Ok(())
}
