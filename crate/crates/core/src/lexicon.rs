//! Category inventories and the word lexicon.
//!
//! Every word is described along four label axes: basic syntactic, abstract
//! syntactic, basic semantic and abstract semantic. Label order within an axis
//! is fixed; indices are used directly as network unit positions.
//!
//! The lexicon maps case-folded word forms to binary membership vectors over
//! the two basic axes. Words missing from the lexicon receive average default
//! vectors built from per-label entry frequencies.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reserved token standing for a recognizer pause.
pub const PAUSE_TOKEN: &str = "<pause>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    BasicSyn,
    AbsSyn,
    BasicSem,
    AbsSem,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::BasicSyn, Axis::AbsSyn, Axis::BasicSem, Axis::AbsSem];

    pub fn labels(self) -> &'static [Label] {
        match self {
            Axis::BasicSyn => BASIC_SYN,
            Axis::AbsSyn => ABS_SYN,
            Axis::BasicSem => BASIC_SEM,
            Axis::AbsSem => ABS_SEM,
        }
    }

    pub fn len(self) -> usize {
        self.labels().len()
    }

    pub fn abbrev(self, index: usize) -> &'static str {
        self.labels()[index].abbrev
    }

    pub fn index_of(self, abbrev: &str) -> Option<usize> {
        self.labels().iter().position(|l| l.abbrev == abbrev)
    }

    pub fn parse_label(self, abbrev: &str) -> Result<usize> {
        self.index_of(abbrev).ok_or_else(|| Error::UnknownLabel {
            axis: self,
            label: abbrev.to_string(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Label {
    pub abbrev: &'static str,
    pub name: &'static str,
}

const fn label(abbrev: &'static str, name: &'static str) -> Label {
    Label { abbrev, name }
}

static BASIC_SYN: &[Label] = &[
    label("N", "noun"),
    label("V", "verb"),
    label("R", "preposition"),
    label("U", "pronoun"),
    label("M", "numeral"),
    label("P", "participle"),
    label("/", "pause"),
    label("J", "adjective"),
    label("A", "adverb"),
    label("C", "conjunction"),
    label("D", "determiner"),
    label("I", "interjection"),
    label("O", "other"),
];

static ABS_SYN: &[Label] = &[
    label("VG", "verb group"),
    label("NG", "noun group"),
    label("AG", "adverbial group"),
    label("PG", "prepositional group"),
    label("CG", "conjunction group"),
    label("MG", "modus group"),
    label("SG", "special group"),
    label("IG", "interjection group"),
];

static BASIC_SEM: &[Label] = &[
    label("SEL", "select"),
    label("SUG", "suggest"),
    label("MEET", "meet"),
    label("UTTER", "utter"),
    label("IS", "is"),
    label("HAVE", "have"),
    label("MOVE", "move"),
    label("AUX", "aux"),
    label("QUEST", "question"),
    label("PHYS", "physical"),
    label("ANIM", "animate"),
    label("ABS", "abstract"),
    label("HERE", "here"),
    label("SRC", "source"),
    label("DEST", "destination"),
    label("LOC", "location"),
    label("TIME", "time"),
    label("NO", "negative evaluation"),
    label("YES", "positive evaluation"),
    label("NIL", "nil"),
];

static ABS_SEM: &[Label] = &[
    label("ACT", "action"),
    label("AUX", "aux-action"),
    label("AGENT", "agent"),
    label("OBJ", "object"),
    label("RECIP", "recipient"),
    label("INSTR", "instrument"),
    label("MANNER", "manner"),
    label("TM-AT", "time-at"),
    label("TM-FRM", "time-from"),
    label("TM-TO", "time-to"),
    label("LC-AT", "loc-at"),
    label("LC-FRM", "loc-from"),
    label("LC-TO", "loc-to"),
    label("CONF", "confirmation"),
    label("NEG", "negation"),
    label("QUEST", "question"),
    label("MISC", "misc"),
];

/// The ordered label inventory of one axis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CategoryScheme {
    pub axis: Axis,
    pub labels: Vec<Label>,
}

impl CategoryScheme {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, abbrev: &str) -> Option<usize> {
        self.labels.iter().position(|l| l.abbrev == abbrev)
    }
}

pub fn build_scheme(axis: Axis) -> CategoryScheme {
    CategoryScheme {
        axis,
        labels: axis.labels().to_vec(),
    }
}

/// Dense plausibility vector over one axis, every element in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryVector {
    axis: Axis,
    values: Vec<f64>,
}

impl CategoryVector {
    pub fn new(axis: Axis, values: Vec<f64>) -> Result<Self> {
        if values.len() != axis.len() {
            return Err(Error::AxisLength {
                axis,
                expected: axis.len(),
                found: values.len(),
            });
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::OutOfRange { index, value });
        }
        Ok(CategoryVector { axis, values })
    }

    pub fn zeros(axis: Axis) -> Self {
        CategoryVector {
            axis,
            values: vec![0.0; axis.len()],
        }
    }

    pub fn one_hot(axis: Axis, index: usize) -> Self {
        let mut v = Self::zeros(axis);
        v.values[index] = 1.0;
        v
    }

    /// Binary membership vector from a set of label indices.
    pub fn membership(axis: Axis, indices: &[usize]) -> Self {
        let mut v = Self::zeros(axis);
        for &i in indices {
            v.values[i] = 1.0;
        }
        v
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the largest element; ties resolve to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.values)
    }

    pub fn argmax_label(&self) -> &'static str {
        self.axis.abbrev(self.argmax())
    }

    pub fn is_set(&self, index: usize) -> bool {
        self.values[index] >= 1.0
    }
}

/// Lowest-index argmax over a slice.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LexiconEntry {
    pub word: String,
    pub syn: CategoryVector,
    pub sem: CategoryVector,
}

impl LexiconEntry {
    pub fn new(word: &str, syn: &[usize], sem: &[usize]) -> Result<Self> {
        if syn.is_empty() || sem.is_empty() {
            return Err(Error::Corpus(format!(
                "lexicon entry `{word}` needs at least one label per axis"
            )));
        }
        Ok(LexiconEntry {
            word: fold(word),
            syn: CategoryVector::membership(Axis::BasicSyn, syn),
            sem: CategoryVector::membership(Axis::BasicSem, sem),
        })
    }
}

/// Result of a lexicon lookup. Unknown words carry the default vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Lookup {
    pub syn: CategoryVector,
    pub sem: CategoryVector,
    pub known: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    entries: BTreeMap<String, LexiconEntry>,
    default_syn: CategoryVector,
    default_sem: CategoryVector,
}

pub(crate) fn fold(word: &str) -> String {
    word.to_lowercase()
}

impl Lexicon {
    pub fn from_entries(entries: impl IntoIterator<Item = LexiconEntry>) -> Result<Self> {
        let entries: BTreeMap<String, LexiconEntry> =
            entries.into_iter().map(|e| (e.word.clone(), e)).collect();
        Self::from_map(entries)
    }

    fn from_map(entries: BTreeMap<String, LexiconEntry>) -> Result<Self> {
        let mut lexicon = Lexicon {
            entries,
            default_syn: CategoryVector::zeros(Axis::BasicSyn),
            default_sem: CategoryVector::zeros(Axis::BasicSem),
        };
        lexicon.default_syn = average_default_vector(&lexicon, Axis::BasicSyn)?;
        lexicon.default_sem = average_default_vector(&lexicon, Axis::BasicSem)?;
        Ok(lexicon)
    }

    /// Parses `word TAB syn[,syn..] TAB sem[,sem..]` lines; `#` starts a comment.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim_end();
            if line.trim().is_empty() {
                continue;
            }
            // `#` inside a word never occurs; `<pause>` has no `#`.
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(
                    source,
                    n + 1,
                    format!("expected 3 tab-separated fields, found {}", fields.len()),
                ));
            }
            let labels = |axis: Axis, field: &str| -> Result<Vec<usize>> {
                field
                    .split(',')
                    .map(|s| {
                        axis.parse_label(s.trim())
                            .map_err(|e| Error::parse(source, n + 1, e.to_string()))
                    })
                    .collect()
            };
            let syn = labels(Axis::BasicSyn, fields[1])?;
            let sem = labels(Axis::BasicSem, fields[2])?;
            entries.push(
                LexiconEntry::new(fields[0].trim(), &syn, &sem)
                    .map_err(|e| Error::parse(source, n + 1, e.to_string()))?,
            );
        }
        Self::from_entries(entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(Error::file(path))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// The meeting-domain lexicon shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(include_str!("../data/lexicon.tsv"), "builtin lexicon")
            .expect("builtin lexicon is valid")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &LexiconEntry> {
        self.entries.values()
    }

    pub fn get(&self, word: &str) -> Option<&LexiconEntry> {
        self.entries.get(&fold(word))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(&fold(word))
    }

    pub fn default_syn(&self) -> &CategoryVector {
        &self.default_syn
    }

    pub fn default_sem(&self) -> &CategoryVector {
        &self.default_sem
    }

    pub fn lookup(&self, word: &str) -> Lookup {
        match self.get(word) {
            Some(e) => Lookup {
                syn: e.syn.clone(),
                sem: e.sem.clone(),
                known: true,
            },
            None => Lookup {
                syn: self.default_syn.clone(),
                sem: self.default_sem.clone(),
                known: false,
            },
        }
    }

    /// Copy with `floor(fraction * len)` seeded-random entries removed.
    pub fn ablate(&self, fraction: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::InvalidFraction(fraction));
        }
        let remove = (fraction * self.entries.len() as f64).floor() as usize;
        let mut words: Vec<&String> = self.entries.keys().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        words.shuffle(&mut rng);
        let removed: std::collections::BTreeSet<&String> = words.into_iter().take(remove).collect();
        let kept = self
            .entries
            .iter()
            .filter(|(w, _)| !removed.contains(w))
            .map(|(w, e)| (w.clone(), e.clone()))
            .collect();
        Self::from_map(kept)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for e in self.entries.values() {
            let join = |v: &CategoryVector| {
                (0..v.len())
                    .filter(|&i| v.is_set(i))
                    .map(|i| v.axis().abbrev(i))
                    .collect::<Vec<_>>()
                    .join(",")
            };
            out.push_str(&format!("{}\t{}\t{}\n", e.word, join(&e.syn), join(&e.sem)));
        }
        out
    }
}

/// Per-label fraction of entries whose membership includes that label.
pub fn average_default_vector(lexicon: &Lexicon, axis: Axis) -> Result<CategoryVector> {
    if lexicon.entries.is_empty() {
        return Err(Error::EmptyLexicon);
    }
    let mut counts = vec![0usize; axis.len()];
    for e in lexicon.entries.values() {
        let v = match axis {
            Axis::BasicSyn => &e.syn,
            Axis::BasicSem => &e.sem,
            other => {
                return Err(Error::AxisMismatch {
                    expected: Axis::BasicSyn,
                    found: other,
                })
            }
        };
        for (c, &x) in counts.iter_mut().zip(v.values()) {
            if x >= 1.0 {
                *c += 1;
            }
        }
    }
    let total = lexicon.entries.len() as f64;
    CategoryVector::new(axis, counts.into_iter().map(|c| c as f64 / total).collect())
}

impl fmt::Display for CategoryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.argmax_label())?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v:.3}")?;
        }
        Ok(())
    }
}
