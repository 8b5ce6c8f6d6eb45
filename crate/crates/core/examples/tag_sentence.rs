//! Tags a transcript word by word, applies corrections and prints the
//! resulting flat phrases.

use flatparse::correction::analyze_transcript;
use flatparse::harness::{build_system, SystemConfig};
use flatparse::neural::TrainingConfig;
use flatparse::tagger::finalize_phrases;

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
    for text in ["Käse ich meine natürlich März", "ähm ich ich komme am Montag nach Hamburg"] {
        let words: Vec<&str> = text.split(' ').collect();
        let annotations = analyze_transcript(&system.lexicon, &system.models, &words);
        println!("{text}");
        for a in &annotations {
            let [bs, as_, bm, am] = a.labels();
            let mark = a.deletion_reason().map_or("", |r| r.as_str());
            println!("  {:<10} {bs:<2} {as_:<3} {bm:<6} {am:<6} {mark}", a.word);
        }
        for p in finalize_phrases(&annotations)? {
            let words: Vec<&str> = p.tokens.iter().map(|&i| annotations[i].word.as_str()).collect();
            println!("  [{}] {} {}", words.join(" "), p.syn_label(), p.sem_label());
        }
    }
    Ok(())
}
