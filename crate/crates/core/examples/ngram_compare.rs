//! Exclusion curves of the category prediction networks against 1- to
//! 5-gram models on the test split.

use flatparse::harness::{build_system, srn_vs_ngram_report, SystemConfig};
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
    let report = srn_vs_ngram_report(&system.models, &system.corpus, true)?;
    for axis in &report.axes {
        print!("{}", axis.to_tsv());
        println!("best n-gram: {}\n", axis.best_ngram().name);
    }
    if let Some(s) = report.step_seconds {
        println!("network step {:.2} us", s * 1e6);
    }
    Ok(())
}
