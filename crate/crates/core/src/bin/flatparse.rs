use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use flatparse::corpus::{
    corpus_word_graphs, derive_training_sets, generate_synthetic, standard_corpus, AnnotatedCorpus, NoiseConfig,
};
use flatparse::correction::analyze_transcript;
use flatparse::harness::{
    ablation_experiment, evaluate, srn_vs_ngram_report, train_models, EvalConfig, SystemConfig, TrainedSystem,
};
use flatparse::lattice::{ranked_lines, Decoder, DecoderConfig, KnowledgeSources, WordGraph};
use flatparse::lexicon::Lexicon;
use flatparse::models::Models;
use flatparse::predictor::RankingMode;
use flatparse::tagger::dump_annotations;
use flatparse::{Error, Result};

const CORPUS_FILE: &str = "corpus.txt";

#[derive(Parser)]
#[command(name = "flatparse", version, about = "Flat syntactic and semantic analysis of word graphs")]
struct Cli {
    /// Seed for training, corpus generation and ablation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    beam_width: Option<usize>,
    /// Largest pause between connected hypotheses, in seconds.
    #[arg(long, global = true)]
    gap: Option<f64>,
    #[arg(long, global = true, value_enum)]
    ranking: Option<Ranking>,
    /// TOML file with `system`, `decoder` and `eval` tables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Lexicon file instead of the built-in one.
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Ranking {
    Normalized,
    Raw,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sources {
    Acoustic,
    Syntax,
    All,
}

#[derive(Args)]
struct ModelArgs {
    /// Directory written by `train`.
    #[arg(long, default_value = "models")]
    models: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Train every network and write one weight file each.
    Train {
        #[arg(long, default_value = "models")]
        out: PathBuf,
        /// Annotated corpus; the standard synthetic corpus when absent.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Tag and correct transcripts, one utterance per line.
    Tag {
        #[command(flatten)]
        models: ModelArgs,
        /// Transcript file; standard input when absent.
        input: Option<PathBuf>,
    },
    /// Decode a word graph into ranked annotated sequences.
    Decode {
        #[command(flatten)]
        models: ModelArgs,
        graph: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        sources: Sources,
        /// Write per-step search records to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run every experiment on the test split and print a JSON report.
    Eval {
        #[command(flatten)]
        models: ModelArgs,
    },
    /// Flat accuracy with parts of the lexicon removed.
    Ablate {
        #[command(flatten)]
        models: ModelArgs,
        #[arg(long, value_delimiter = ',', default_value = "0,0.05,0.1")]
        fractions: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        seeds: Vec<u64>,
    },
    /// Exclusion curves of the prediction networks against n-gram models.
    NgramCompare {
        #[command(flatten)]
        models: ModelArgs,
    },
    /// Generate a synthetic annotated corpus and optionally word graphs.
    Gen {
        #[arg(long, default_value_t = 184)]
        size: usize,
        /// Write one word graph per utterance into this directory.
        #[arg(long)]
        lattices: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    system: SystemConfig,
    decoder: DecoderConfig,
    eval: EvalConfig,
}

struct Settings {
    file: FileConfig,
    lexicon: Lexicon,
}

impl Settings {
    fn new(cli: &Cli) -> Result<Self> {
        let mut file: FileConfig = match &cli.config {
            Some(path) => {
                let text = read(path)?;
                toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        if let Some(seed) = cli.seed {
            file.system.training.seed = seed;
            file.system.corpus_seed = seed;
        }
        for d in [&mut file.decoder, &mut file.eval.decoder] {
            if let Some(w) = cli.beam_width {
                d.beam_width = w;
            }
            if let Some(g) = cli.gap {
                d.gap = g;
            }
            if let Some(r) = cli.ranking {
                d.ranking = match r {
                    Ranking::Normalized => RankingMode::Normalized,
                    Ranking::Raw => RankingMode::Raw,
                };
            }
            d.validate()?;
        }
        let lexicon = match &cli.lexicon {
            Some(path) => Lexicon::load(path)?,
            None => Lexicon::builtin(),
        };
        Ok(Settings { file, lexicon })
    }

    fn seed(&self) -> u64 {
        self.file.system.corpus_seed
    }

    fn system(&self, dir: &Path) -> Result<TrainedSystem> {
        Ok(TrainedSystem {
            lexicon: self.lexicon.clone(),
            models: Models::load(dir)?,
            corpus: AnnotatedCorpus::load(dir.join(CORPUS_FILE))?,
        })
    }
}

fn run(cli: Cli, out: &mut impl Write) -> Result<()> {
    let settings = Settings::new(&cli)?;
    let system_config = &settings.file.system;
    match cli.command {
        Command::Train { out: dir, corpus } => {
            let corpus = match corpus {
                Some(path) => AnnotatedCorpus::load(path)?,
                None => standard_corpus(&system_config.grammar, system_config.corpus_size, system_config.corpus_seed)?,
            };
            let sets = derive_training_sets(&corpus.train(), &settings.lexicon)?;
            let models = train_models(&sets, &system_config.training, &system_config.learning_rates)?;
            models.save(&dir)?;
            corpus.save(dir.join(CORPUS_FILE))?;
            writeln!(out, "net\tpatterns")?;
            for (id, n) in sets.sizes() {
                writeln!(out, "{}\t{n}", id.name())?;
            }
        }
        Command::Tag { models, input } => {
            let models = Models::load(&models.models)?;
            let text = match input {
                Some(path) => read(&path)?,
                None => {
                    let mut s = String::new();
                    io::stdin().read_to_string(&mut s)?;
                    s
                }
            };
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                let words: Vec<&str> = line.split_whitespace().collect();
                writeln!(out, "# {line}")?;
                write!(out, "{}", dump_annotations(&analyze_transcript(&settings.lexicon, &models, &words)))?;
            }
        }
        Command::Decode {
            models,
            graph,
            sources,
            trace,
        } => {
            let models = Models::load(&models.models)?;
            let graph = WordGraph::load(graph)?;
            let config = DecoderConfig {
                sources: match sources {
                    Sources::Acoustic => KnowledgeSources::ACOUSTIC,
                    Sources::Syntax => KnowledgeSources::ACOUSTIC_SYNTAX,
                    Sources::All => KnowledgeSources::ALL,
                },
                trace: trace.is_some(),
                ..settings.file.decoder
            };
            let decoding = Decoder::new(&settings.lexicon, &models, config)?.decode(&graph)?;
            write!(out, "{}", ranked_lines(&decoding, config.ranking))?;
            if let Some(path) = trace {
                write_file(&path, decoding.trace_lines())?;
            }
        }
        Command::Eval { models } => {
            let system = settings.system(&models.models)?;
            write!(out, "{}", evaluate(&system, &settings.file.eval, settings.seed())?.to_json())?;
        }
        Command::Ablate {
            models,
            fractions,
            seeds,
        } => {
            let system = settings.system(&models.models)?;
            let table = ablation_experiment(&system.corpus, &system.lexicon, &system.models, &fractions, &seeds)?;
            writeln!(out, "fraction\tsyntactic\tsemantic\tsyntactic_drop\tsemantic_drop\tcompleted")?;
            for r in &table.rows {
                writeln!(
                    out,
                    "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}/{}",
                    r.fraction, r.syntactic, r.semantic, r.syntactic_drop, r.semantic_drop, r.completed, r.utterances
                )?;
            }
        }
        Command::NgramCompare { models } => {
            let system = settings.system(&models.models)?;
            let report = srn_vs_ngram_report(&system.models, &system.corpus, false)?;
            for axis in &report.axes {
                write!(out, "{}", axis.to_tsv())?;
            }
        }
        Command::Gen { size, lattices } => {
            let corpus = generate_synthetic(&system_config.grammar, size, settings.seed())?;
            write!(out, "{}", corpus.to_text())?;
            if let Some(dir) = lattices {
                write_lattices(&corpus, &settings.file.eval.noise, &settings.lexicon, settings.seed(), &dir)?;
            }
        }
    }
    Ok(())
}

fn write_lattices(corpus: &AnnotatedCorpus, noise: &NoiseConfig, lexicon: &Lexicon, seed: u64, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| file_error(dir, e))?;
    for (i, g) in corpus_word_graphs(corpus, noise, lexicon, seed)?.iter().enumerate() {
        let gold: Vec<String> = g.gold.iter().map(usize::to_string).collect();
        let text = format!("# gold {}\n{}", gold.join(" "), g.graph.to_text());
        write_file(&dir.join(format!("{i:04}.wg")), text)?;
    }
    Ok(())
}

fn file_error(path: &Path, source: io::Error) -> Error {
    Error::File {
        path: path.to_path_buf(),
        source,
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| file_error(path, e))
}

fn write_file(path: &Path, text: String) -> Result<()> {
    std::fs::write(path, text).map_err(|e| file_error(path, e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("flatparse: {e}");
            return ExitCode::FAILURE;
        }
    }
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    match run(cli, &mut out).and_then(|()| out.flush().map_err(Error::from)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("flatparse: {e}");
            ExitCode::FAILURE
        }
    }
}
