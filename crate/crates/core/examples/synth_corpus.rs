//! Generates a small annotated corpus and a noisy word graph for one of its
//! utterances.

use flatparse::corpus::{generate_synthetic, synth_word_graph, GrammarConfig, NoiseConfig};
use flatparse::lexicon::Lexicon;

fn main() -> flatparse::Result<()> {
    let corpus = generate_synthetic(&GrammarConfig::default(), 5, 42)?;
    print!("{}", corpus.to_text());
    println!("{} turns, {} tokens", corpus.len(), corpus.token_count());

    let utterance = corpus.utterances().max_by_key(|u| u.len()).expect("non-empty corpus");
    let g = synth_word_graph(utterance, &NoiseConfig::default(), &Lexicon::builtin(), 1)?;
    println!("\nword graph for: {}", utterance.text());
    print!("{}", g.graph.to_text());
    println!("gold path {:?}, {:.1} hypotheses per spoken word", g.gold, g.density());
    Ok(())
}
