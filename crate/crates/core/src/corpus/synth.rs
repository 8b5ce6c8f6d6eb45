//! Template grammar for meeting-arrangement utterances with gold labels,
//! disfluency injection, and recognizer-style word graphs.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::correction::DeletionReason;
use crate::error::{Error, Result};
use crate::lattice::{Centis, WordGraph, WordHypothesis};
use crate::lexicon::{fold, Lexicon, PAUSE_TOKEN};

use super::{AnnotatedCorpus, AnnotatedToken, Split, Turn, Utterance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Per-utterance probability of inserting an interjection or pause.
    pub interjection: f64,
    /// Per-utterance probability of repeating one word.
    pub repetition: f64,
    /// Per-utterance probability of a word replaced by one of the same categories.
    pub substitution: f64,
    /// Per-utterance probability of restarting a phrase.
    pub restart: f64,
    /// Probability that a spoken word gets competing hypotheses.
    pub confusion: f64,
    pub hypotheses_per_word: f64,
    /// Probability that a competing hypothesis scores like a correct one.
    pub acoustic_ambiguity: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            interjection: 0.2,
            repetition: 0.1,
            substitution: 0.05,
            restart: 0.05,
            confusion: 1.0,
            hypotheses_per_word: 6.3,
            acoustic_ambiguity: 0.3,
            seed: 7,
        }
    }
}

impl NoiseConfig {
    /// No disfluencies and no competing hypotheses.
    pub fn clean() -> Self {
        NoiseConfig {
            interjection: 0.0,
            repetition: 0.0,
            substitution: 0.0,
            restart: 0.0,
            confusion: 0.0,
            hypotheses_per_word: 1.0,
            acoustic_ambiguity: 0.0,
            seed: 7,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("interjection", self.interjection),
            ("repetition", self.repetition),
            ("substitution", self.substitution),
            ("restart", self.restart),
            ("confusion", self.confusion),
            ("acoustic_ambiguity", self.acoustic_ambiguity),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("{name} rate {v} outside [0, 1]")));
            }
        }
        if !(self.hypotheses_per_word >= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "hypotheses per word {} below 1",
                self.hypotheses_per_word
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UtteranceShape {
    /// Statements, questions, confirmations and corrections of varying length.
    #[default]
    Mixed,
    /// One-word answers only.
    SingleWord,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrammarConfig {
    pub shape: UtteranceShape,
    pub max_utterances_per_turn: usize,
    /// Most free adjuncts inside a verb bracket.
    pub middle_field: usize,
    pub noise: NoiseConfig,
}

impl Default for GrammarConfig {
    fn default() -> Self {
        GrammarConfig {
            shape: UtteranceShape::Mixed,
            max_utterances_per_turn: 2,
            middle_field: 3,
            noise: NoiseConfig::default(),
        }
    }
}

/// One word with its basic labels.
type W = (&'static str, &'static str, &'static str);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Agent,
    Recipient,
    Verb,
    Aux,
    TimeAt,
    TimeFrom,
    TimeTo,
    Object,
    Negated,
    LocAt,
    LocTo,
    LocFrom,
    Special,
    Adverbial,
    Confirm,
    Deny,
    Question,
    Thanks,
    Conj,
    Exclaim,
}

impl Kind {
    fn labels(self) -> (&'static str, &'static str) {
        match self {
            Kind::Agent => ("NG", "AGENT"),
            Kind::Recipient => ("NG", "RECIP"),
            Kind::Verb => ("VG", "ACT"),
            Kind::Aux => ("VG", "AUX"),
            Kind::TimeAt => ("PG", "TM-AT"),
            Kind::TimeFrom => ("PG", "TM-FRM"),
            Kind::TimeTo => ("PG", "TM-TO"),
            Kind::Object => ("NG", "OBJ"),
            Kind::Negated => ("NG", "NEG"),
            Kind::LocAt => ("PG", "LC-AT"),
            Kind::LocTo => ("PG", "LC-TO"),
            Kind::LocFrom => ("PG", "LC-FRM"),
            Kind::Special => ("SG", "MISC"),
            Kind::Adverbial => ("AG", "TM-AT"),
            Kind::Confirm => ("MG", "CONF"),
            Kind::Deny => ("MG", "NEG"),
            Kind::Question => ("MG", "QUEST"),
            Kind::Thanks => ("SG", "MISC"),
            Kind::Conj => ("CG", "MISC"),
            Kind::Exclaim => ("NG", "NEG"),
        }
    }
}

#[derive(Debug, Clone)]
struct Phrase {
    kind: Kind,
    /// Overrides the kind's abstract labels.
    labels: Option<(&'static str, &'static str)>,
    words: Vec<W>,
}

impl Phrase {
    fn new(kind: Kind, words: Vec<W>) -> Self {
        Phrase {
            kind,
            labels: None,
            words,
        }
    }

    fn labelled(kind: Kind, labels: (&'static str, &'static str), words: Vec<W>) -> Self {
        Phrase {
            kind,
            labels: Some(labels),
            words,
        }
    }

    fn tokens(&self) -> Vec<AnnotatedToken> {
        let (asyn, asem) = self.labels.unwrap_or_else(|| self.kind.labels());
        self.words
            .iter()
            .enumerate()
            .map(|(i, &(w, bs, bm))| AnnotatedToken::new(w, [bs, asyn, bm, asem], i == 0, None).expect("grammar labels"))
            .collect()
    }
}

const WEEKDAYS: [&str; 5] = ["Montag", "Dienstag", "Mittwoch", "Donnerstag", "Freitag"];
const MONTHS: [&str; 4] = ["März", "April", "Mai", "Juni"];
const ORDINALS: [&str; 5] = ["sechsten", "dritten", "zehnten", "vierzehnten", "zwanzigsten"];
const HOURS: [&str; 6] = ["neun", "zehn", "elf", "zwei", "drei", "vier"];
const CITIES: [&str; 3] = ["Hamburg", "Berlin", "Frankfurt"];
const SPECIAL: [W; 8] = [
    ("leider", "A", "NIL"),
    ("natürlich", "A", "NIL"),
    ("allerdings", "A", "NIL"),
    ("dann", "A", "NIL"),
    ("vielleicht", "A", "NIL"),
    ("noch", "A", "NIL"),
    ("schon", "A", "NIL"),
    ("da", "A", "HERE"),
];
const INTERJECTIONS: [&str; 6] = ["ähm", "äh", "eh", "hm", "also", "oh"];

/// Words that may stand in for each other: same basic labels.
const SUBSTITUTES: [&[&str]; 10] = [
    &WEEKDAYS,
    &MONTHS,
    &ORDINALS,
    &HOURS,
    &CITIES,
    &["Termin", "Treffen", "Arzttermin"],
    &["habe", "hätte", "brauche"],
    &["haben", "hätten", "brauchen"],
    &["ich", "wir"],
    &["Büro", "Zimmer"],
];

fn pick<T: Copy>(rng: &mut ChaCha8Rng, xs: &[T]) -> T {
    *xs.choose(rng).expect("non-empty choice")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Person {
    First,
    Plural,
}

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    middle_field: usize,
}

impl Gen<'_> {
    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    fn subject(&mut self) -> (Phrase, Person) {
        let (w, p) = pick(self.rng, &[("ich", Person::First), ("wir", Person::Plural), ("Sie", Person::Plural)]);
        (Phrase::new(Kind::Agent, vec![(w, "U", "ANIM")]), p)
    }

    fn agent(w: &'static str) -> Phrase {
        Phrase::new(Kind::Agent, vec![(w, "U", "ANIM")])
    }

    fn time(&mut self, kind: Kind) -> Phrase {
        let w = match kind {
            Kind::TimeFrom => {
                if self.chance(0.5) {
                    vec![("von", "R", "SRC"), (pick(self.rng, &HOURS), "M", "TIME")]
                } else {
                    vec![("ab", "R", "SRC"), (pick(self.rng, &HOURS), "M", "TIME"), ("Uhr", "N", "TIME")]
                }
            }
            Kind::TimeTo => vec![("bis", "R", "DEST"), (pick(self.rng, &HOURS), "M", "TIME"), ("Uhr", "N", "TIME")],
            _ => match self.rng.gen_range(0..5) {
                0 => vec![("am", "R", "HERE"), (pick(self.rng, &WEEKDAYS), "N", "TIME")],
                1 => vec![
                    ("am", "R", "HERE"),
                    (pick(self.rng, &ORDINALS), "M", "TIME"),
                    (pick(self.rng, &MONTHS), "N", "TIME"),
                ],
                2 => vec![("um", "R", "HERE"), (pick(self.rng, &HOURS), "M", "TIME"), ("Uhr", "N", "TIME")],
                3 => vec![("im", "R", "HERE"), (pick(self.rng, &MONTHS), "N", "TIME")],
                _ => vec![
                    ("in", "R", "HERE"),
                    ("der", "D", "NIL"),
                    ("nächsten", "J", "TIME"),
                    ("Woche", "N", "TIME"),
                ],
            },
        };
        Phrase::new(kind, w)
    }

    /// A time expression of any form: prepositional, bare noun or adverb.
    fn any_time(&mut self) -> Phrase {
        match self.rng.gen_range(0..10) {
            0 => Phrase::labelled(Kind::TimeAt, ("NG", "TM-AT"), vec![(pick(self.rng, &MONTHS), "N", "TIME")]),
            1 => Phrase::labelled(Kind::TimeAt, ("NG", "TM-AT"), vec![(pick(self.rng, &WEEKDAYS), "N", "TIME")]),
            2 => Phrase::new(Kind::Adverbial, vec![(pick(self.rng, &["später", "morgen"]), "A", "TIME")]),
            3 => self.time(Kind::TimeFrom),
            _ => self.time(Kind::TimeAt),
        }
    }

    fn object(&mut self) -> Phrase {
        let w = match self.rng.gen_range(0..7) {
            0 => vec![("einen", "D", "NIL"), ("Termin", "N", "ABS")],
            1 => vec![("den", "D", "NIL"), ("Termin", "N", "ABS")],
            2 => vec![("eine", "D", "NIL"), ("Besprechung", "N", "ABS")],
            3 => vec![("ein", "D", "NIL"), ("Treffen", "N", "ABS")],
            4 => vec![("Zeit", "N", "ABS")],
            5 => vec![("den", "D", "NIL"), (pick(self.rng, &["früheren", "späteren"]), "J", "TIME"), ("Termin", "N", "ABS")],
            _ => vec![("einen", "D", "NIL"), ("Arzttermin", "N", "ABS")],
        };
        Phrase::new(Kind::Object, w)
    }

    fn location(&mut self, kind: Kind) -> Phrase {
        let w = match kind {
            Kind::LocTo => vec![("nach", "R", "DEST"), (pick(self.rng, &CITIES), "N", "LOC")],
            Kind::LocFrom => vec![("von", "R", "SRC"), (pick(self.rng, &CITIES), "N", "LOC")],
            _ => match self.rng.gen_range(0..5) {
                0 => vec![("in", "R", "HERE"), (pick(self.rng, &CITIES), "N", "LOC")],
                1 => vec![("im", "R", "HERE"), (pick(self.rng, &["Büro", "Zimmer"]), "N", "PHYS")],
                2 => vec![("beim", "R", "HERE"), ("Zahnarzt", "N", "ANIM")],
                3 => vec![("außer", "R", "HERE"), ("Hause", "N", "LOC")],
                _ => vec![("in", "R", "HERE"), ("Hamburg", "N", "LOC")],
            },
        };
        Phrase::new(kind, w)
    }

    /// Regenerates a phrase of the same kind, for restarts.
    fn like(&mut self, p: &Phrase) -> Option<Phrase> {
        let mut q = match p.kind {
            Kind::TimeAt | Kind::TimeFrom | Kind::TimeTo => self.time(p.kind),
            Kind::Object => self.object(),
            Kind::LocAt | Kind::LocTo | Kind::LocFrom => self.location(p.kind),
            _ => return None,
        };
        q.labels = p.labels;
        Some(q)
    }

    fn special(&mut self) -> Phrase {
        Phrase::new(Kind::Special, vec![pick(self.rng, &SPECIAL)])
    }

    /// Up to `middle_field` adjuncts of distinct kinds in random order.
    fn adjuncts(&mut self, out: &mut Vec<Phrase>) {
        let mut kinds = [0, 1, 2];
        kinds.shuffle(self.rng);
        for &k in kinds.iter().take(self.middle_field) {
            if !self.chance(0.45) {
                continue;
            }
            let p = match k {
                0 => self.any_time(),
                1 => self.location(Kind::LocAt),
                _ => self.special(),
            };
            out.push(p);
        }
    }

    fn verb(w: &'static str, sem: &'static str) -> Phrase {
        Phrase::new(Kind::Verb, vec![(w, "V", sem)])
    }

    fn finite(&mut self, person: Person, lemma: &str) -> Phrase {
        let first = person == Person::First;
        let (w, sem) = match lemma {
            "have" => (
                pick(self.rng, if first { &["habe", "hätte", "brauche"] } else { &["haben", "hätten", "brauchen"] }),
                "HAVE",
            ),
            "be" => (if first { "bin" } else { "sind" }, "IS"),
            "move" => (
                pick(self.rng, if first { &["komme", "fahre"] } else { &["kommen", "fahren"] }),
                "MOVE",
            ),
            "select" => (if first { "nehme" } else { "nehmen" }, "SEL"),
            _ => (
                pick(self.rng, if first { &["kann", "würde", "könnte"] } else { &["können", "würden", "könnten"] }),
                "AUX",
            ),
        };
        if sem == "AUX" {
            Phrase::new(Kind::Aux, vec![(w, "V", "AUX")])
        } else {
            Gen::verb(w, sem)
        }
    }

    /// Complements of a full verb, in the order they appear after it.
    fn complements(&mut self, lemma: &str, out: &mut Vec<Phrase>) {
        match lemma {
            "have" => {
                if self.chance(0.5) {
                    out.push(self.any_time());
                }
                if self.chance(0.3) {
                    out.push(Phrase::new(Kind::Negated, vec![("keine", "D", "NO"), ("Zeit", "N", "ABS")]));
                } else {
                    out.push(self.object());
                }
                if self.chance(0.25) {
                    out.push(self.location(Kind::LocAt));
                }
            }
            "be" => {
                if self.chance(0.6) {
                    out.push(self.any_time());
                }
                out.push(self.location(Kind::LocAt));
            }
            "move" => {
                if self.chance(0.3) {
                    out.push(self.location(Kind::LocFrom));
                }
                if self.chance(0.5) {
                    out.push(self.any_time());
                }
                out.push(self.location(Kind::LocTo));
            }
            _ => {
                out.push(self.object());
                if self.chance(0.6) {
                    out.push(self.any_time());
                }
            }
        }
    }

    fn statement(&mut self) -> Vec<Phrase> {
        let (subj, person) = self.subject();
        let lemma = pick(self.rng, &["have", "be", "move", "select"]);
        let mut out = vec![subj, self.finite(person, lemma)];
        self.adjuncts(&mut out);
        self.complements(lemma, &mut out);
        out
    }

    /// Time first, verb second, subject third.
    fn topicalized(&mut self) -> Vec<Phrase> {
        let (subj, person) = self.subject();
        let lemma = pick(self.rng, &["have", "be", "move"]);
        let mut out = vec![self.time(Kind::TimeAt), self.finite(person, lemma), subj];
        self.adjuncts(&mut out);
        match lemma {
            "have" => out.push(if self.chance(0.5) {
                Phrase::new(Kind::Negated, vec![("keine", "D", "NO"), ("Zeit", "N", "ABS")])
            } else {
                self.object()
            }),
            "be" => out.push(self.location(Kind::LocAt)),
            _ => out.push(self.location(Kind::LocTo)),
        }
        out
    }

    /// Modal verb early, infinitive last.
    fn modal(&mut self) -> Vec<Phrase> {
        let (subj, person) = self.subject();
        let mut out = vec![subj, self.finite(person, "aux")];
        self.adjuncts(&mut out);
        let (inf, sem) = pick(
            self.rng,
            &[
                ("treffen", "MEET"),
                ("vereinbaren", "SEL"),
                ("vorschlagen", "SUG"),
                ("nehmen", "SEL"),
                ("fahren", "MOVE"),
                ("kommen", "MOVE"),
            ],
        );
        match sem {
            "MEET" => {
                out.push(Phrase::new(Kind::Recipient, vec![("uns", "U", "ANIM")]));
                if self.chance(0.7) {
                    out.push(self.any_time());
                }
                if self.chance(0.3) {
                    out.push(self.location(Kind::LocAt));
                }
            }
            "MOVE" => {
                if self.chance(0.5) {
                    out.push(self.any_time());
                }
                out.push(self.location(Kind::LocTo));
            }
            _ => {
                out.push(self.object());
                if self.chance(0.6) {
                    out.push(self.any_time());
                }
            }
        }
        out.push(Gen::verb(inf, sem));
        out
    }

    /// Auxiliary early, participle last.
    fn perfect(&mut self) -> Vec<Phrase> {
        let (subj, person) = self.subject();
        let aux = if person == Person::First { "habe" } else { "haben" };
        let mut out = vec![subj, Gen::verb(aux, "HAVE")];
        self.adjuncts(&mut out);
        let (part, sem) = pick(
            self.rng,
            &[("vereinbart", "SEL"), ("vorgeschlagen", "SUG"), ("getroffen", "MEET"), ("gesagt", "UTTER")],
        );
        match sem {
            "MEET" => out.push(Phrase::new(Kind::Recipient, vec![("uns", "U", "ANIM")])),
            "UTTER" => out.push(Phrase::new(Kind::Object, vec![("das", "U", "NIL")])),
            _ => out.push(self.object()),
        }
        if self.chance(0.6) {
            out.push(self.any_time());
        }
        out.push(Phrase::new(Kind::Verb, vec![(part, "P", sem)]));
        out
    }

    /// Conditional clause with the verb last, then a verb-first main clause.
    fn conditional(&mut self) -> Vec<Phrase> {
        let (subj, person) = self.subject();
        let mut out = vec![Phrase::new(Kind::Conj, vec![("wenn", "C", "NIL")]), subj];
        self.adjuncts(&mut out);
        let have = if person == Person::First { "habe" } else { "haben" };
        out.push(Phrase::new(Kind::Object, vec![("Zeit", "N", "ABS")]));
        out.push(Gen::verb(have, "HAVE"));
        let (s2, p2) = self.subject();
        if self.chance(0.5) {
            out.push(self.finite(p2, "aux"));
            out.push(s2);
            out.push(Phrase::new(Kind::Recipient, vec![("uns", "U", "ANIM")]));
            out.push(Gen::verb("treffen", "MEET"));
        } else {
            out.push(Phrase::new(Kind::Special, vec![("dann", "A", "NIL")]));
            out.push(self.finite(p2, "move"));
            out.push(s2);
            out.push(self.location(Kind::LocTo));
        }
        out
    }

    fn question(&mut self) -> Vec<Phrase> {
        let mut out = Vec::new();
        if self.chance(0.5) {
            out.push(Phrase::new(Kind::Question, vec![(pick(self.rng, &["wann", "wo", "wie"]), "A", "QUEST")]));
        }
        let (subj, person) = self.subject();
        let aux = out.is_empty() || self.chance(0.5);
        if aux {
            out.push(self.finite(person, "aux"));
            out.push(subj);
            out.push(Phrase::new(Kind::Recipient, vec![("uns", "U", "ANIM")]));
            self.adjuncts(&mut out);
            out.push(Gen::verb("treffen", "MEET"));
        } else {
            let have = if person == Person::First { "habe" } else { "haben" };
            out.push(Gen::verb(have, "HAVE"));
            out.push(subj);
            out.push(Phrase::new(Kind::Object, vec![("Zeit", "N", "ABS")]));
        }
        out
    }

    fn confirm_phrase(&mut self) -> Phrase {
        let w = match self.rng.gen_range(0..6) {
            0 => vec![("ja", "O", "YES"), ("genau", "A", "YES")],
            1 => vec![("gut", "O", "YES"), ("prima", "J", "YES")],
            2 => vec![("okay", "O", "YES")],
            3 => vec![("richtig", "O", "YES")],
            4 => vec![("genau", "A", "YES")],
            _ => vec![("ja", "O", "YES")],
        };
        Phrase::new(Kind::Confirm, w)
    }

    fn confirmation(&mut self) -> Vec<Phrase> {
        let mut out = vec![self.confirm_phrase()];
        match self.rng.gen_range(0..4) {
            0 => {
                out.push(Phrase::new(Kind::Thanks, vec![("vielen", "J", "NIL"), ("Dank", "N", "YES")]));
            }
            1 => {
                let t = self.time(Kind::TimeAt);
                out.push(t);
                out.push(Gen::verb(pick(self.rng, &["paßt", "passt"]), "IS"));
                out.push(Phrase::labelled(Kind::Adverbial, ("AG", "CONF"), vec![("gut", "J", "YES")]));
            }
            2 => {
                out.push(Phrase::new(Kind::Agent, vec![("das", "U", "NIL")]));
                out.push(Gen::verb("ist", "IS"));
                out.push(Phrase::labelled(Kind::Adverbial, ("AG", "CONF"), vec![(pick(self.rng, &["gut", "schön"]), "J", "YES")]));
            }
            _ => {
                let mut rest = self.statement();
                out.append(&mut rest);
            }
        }
        out
    }

    fn denial(&mut self) -> Vec<Phrase> {
        let mut out = vec![Phrase::new(Kind::Deny, vec![("nein", "O", "NO")])];
        if self.chance(0.5) {
            out.push(Phrase::new(Kind::Agent, vec![("das", "U", "NIL")]));
            out.push(Gen::verb("ist", "IS"));
            out.push(self.maybe_leider());
            out.push(Phrase::labelled(Kind::Adverbial, ("AG", "NEG"), vec![("schlecht", "J", "NO")]));
        } else {
            out.push(Phrase::new(Kind::Special, vec![("da", "A", "HERE")]));
            let (v, w) = pick(self.rng, &[("habe", "ich"), ("haben", "wir")]);
            out.push(Gen::verb(v, "HAVE"));
            out.push(Gen::agent(w));
            out.push(self.maybe_leider());
            out.push(Phrase::new(Kind::Negated, vec![("keine", "D", "NO"), ("Zeit", "N", "ABS")]));
        }
        out.retain(|p| !p.words.is_empty());
        out
    }

    fn maybe_leider(&mut self) -> Phrase {
        let words = if self.chance(0.5) { vec![("leider", "A", "NIL")] } else { Vec::new() };
        Phrase::new(Kind::Special, words)
    }

    /// "Käse ich meine ..." style self-corrections.
    fn exclamation(&mut self) -> Vec<Phrase> {
        let mut out = Vec::new();
        if self.chance(0.5) {
            out.push(Phrase::new(Kind::Exclaim, vec![("Käse", "N", "NO")]));
        }
        out.push(Gen::agent("ich"));
        out.push(Gen::verb(pick(self.rng, &["meine", "dachte", "sage"]), "UTTER"));
        if self.chance(0.6) {
            out.push(Phrase::new(Kind::Special, vec![pick(self.rng, &SPECIAL[..4])]));
        }
        out.push(self.any_time());
        out
    }

    fn utterance(&mut self) -> Vec<Phrase> {
        let mut phrases = match self.rng.gen_range(0..20) {
            0..=3 => self.statement(),
            4..=6 => self.topicalized(),
            7..=9 => self.modal(),
            10..=11 => self.perfect(),
            12..=13 => self.conditional(),
            14..=15 => self.question(),
            16..=17 => self.confirmation(),
            18 => self.denial(),
            _ => self.exclamation(),
        };
        // a bare start-of-range time expression gets its matching end
        let mut i = 0;
        while i < phrases.len() {
            if phrases[i].kind == Kind::TimeFrom && phrases[i].words[0].0 == "von" {
                let to = self.time(Kind::TimeTo);
                phrases.insert(i + 1, to);
                i += 1;
            }
            i += 1;
        }
        phrases
    }

    fn single_word(&mut self) -> Vec<Phrase> {
        let p = match self.rng.gen_range(0..8) {
            0 => Phrase::new(Kind::Confirm, vec![("ja", "O", "YES")]),
            1 => Phrase::new(Kind::Confirm, vec![("genau", "A", "YES")]),
            2 => Phrase::new(Kind::Confirm, vec![("okay", "O", "YES")]),
            3 => Phrase::new(Kind::Confirm, vec![("richtig", "O", "YES")]),
            4 => Phrase::new(Kind::Deny, vec![("nein", "O", "NO")]),
            5 => Phrase::new(Kind::Thanks, vec![("bitte", "O", "NIL")]),
            _ => Phrase::labelled(Kind::TimeAt, ("NG", "TM-AT"), vec![(pick(self.rng, &WEEKDAYS), "N", "TIME")]),
        };
        vec![p]
    }
}

fn mark(tokens: &mut [AnnotatedToken], reason: DeletionReason) {
    for t in tokens {
        t.deleted = Some(reason);
    }
}

/// Applies restarts, word repairs and interjections to a phrase list.
fn inject(gen: &mut Gen<'_>, phrases: Vec<Phrase>, noise: &NoiseConfig) -> Vec<AnnotatedToken> {
    let mut phrases: Vec<(Phrase, bool)> = phrases.into_iter().map(|p| (p, false)).collect();
    if gen.chance(noise.restart) {
        let candidates: Vec<usize> = (0..phrases.len())
            .filter(|&i| phrases[i].0.words.len() >= 2 && gen_like_possible(&phrases[i].0))
            .collect();
        if let Some(&i) = candidates.choose(gen.rng) {
            let target = phrases[i].0.clone();
            for _ in 0..20 {
                let Some(alt) = gen.like(&target) else { break };
                if fold(alt.words[0].0) == fold(target.words[0].0) && alt.words != target.words {
                    phrases.insert(i, (alt, true));
                    break;
                }
            }
        }
    }
    let mut tokens: Vec<AnnotatedToken> = Vec::new();
    let mut boundaries = Vec::new();
    for (p, restart) in &phrases {
        boundaries.push(tokens.len());
        let mut ts = p.tokens();
        if *restart {
            mark(&mut ts, DeletionReason::PhraseRepair);
        }
        tokens.extend(ts);
    }

    let insert_before = |tokens: &mut Vec<AnnotatedToken>, boundaries: &mut Vec<usize>, at: usize, t: AnnotatedToken| {
        tokens.insert(at, t);
        for b in boundaries.iter_mut().filter(|b| **b > at) {
            *b += 1;
        }
    };

    if gen.chance(noise.substitution) {
        let candidates: Vec<(usize, &'static [&'static str])> = (0..tokens.len())
            .filter(|&i| !tokens[i].is_deleted())
            .filter_map(|i| {
                SUBSTITUTES
                    .iter()
                    .find(|set| set.contains(&tokens[i].word.as_str()))
                    .map(|set| (i, *set))
            })
            .collect();
        if let Some(&(i, set)) = candidates.choose(gen.rng) {
            let others: Vec<&str> = set.iter().copied().filter(|w| *w != tokens[i].word).collect();
            let mut wrong = tokens[i].clone();
            wrong.word = pick(gen.rng, &others).to_string();
            wrong.deleted = Some(DeletionReason::WordRepair);
            insert_before(&mut tokens, &mut boundaries, i, wrong);
        }
    }
    if gen.chance(noise.repetition) {
        let candidates: Vec<usize> = (0..tokens.len()).filter(|&i| !tokens[i].is_deleted()).collect();
        if let Some(&i) = candidates.choose(gen.rng) {
            let mut copy = tokens[i].clone();
            copy.deleted = Some(DeletionReason::WordRepair);
            insert_before(&mut tokens, &mut boundaries, i, copy);
        }
    }
    if gen.chance(noise.interjection) {
        let at = *boundaries.choose(gen.rng).expect("at least one phrase");
        let t = if gen.chance(0.2) {
            AnnotatedToken::new(PAUSE_TOKEN, ["/", "IG", "NIL", "MISC"], true, Some(DeletionReason::Pause))
        } else {
            AnnotatedToken::new(
                pick(gen.rng, &INTERJECTIONS),
                ["I", "IG", "NIL", "MISC"],
                true,
                Some(DeletionReason::Interjection),
            )
        }
        .expect("interjection labels");
        insert_before(&mut tokens, &mut boundaries, at, t);
    }
    tokens
}

fn gen_like_possible(p: &Phrase) -> bool {
    matches!(
        p.kind,
        Kind::TimeAt | Kind::TimeFrom | Kind::TimeTo | Kind::Object | Kind::LocAt | Kind::LocTo | Kind::LocFrom
    ) && p.labels.is_none()
}

/// Adjacent material that the repair detectors must not mistake for a
/// repair: equal basic categories on both axes between words, or equal
/// first word and abstract syntax between phrases.
pub(crate) fn ambiguous_repair(u: &Utterance) -> bool {
    let lex = u.lexical_positions();
    for w in lex.windows(2) {
        let (a, b) = (&u.tokens[w[0]], &u.tokens[w[1]]);
        let same = a.basic_syn == b.basic_syn && a.basic_sem == b.basic_sem;
        let repair = a.deleted == Some(DeletionReason::WordRepair);
        if same != repair {
            return true;
        }
    }
    let phrases = u.phrases_over(&u.tagging_positions());
    for w in phrases.windows(2) {
        let (f1, f2) = (&u.tokens[w[0].tokens[0]], &u.tokens[w[1].tokens[0]]);
        let same = fold(&f1.word) == fold(&f2.word) && f1.abs_syn == f2.abs_syn;
        let repair = f1.deleted == Some(DeletionReason::PhraseRepair);
        if same != repair {
            return true;
        }
    }
    false
}

fn make_utterance(gen: &mut Gen<'_>, config: &GrammarConfig) -> Utterance {
    let mut last = None;
    for _ in 0..100 {
        let phrases = match config.shape {
            UtteranceShape::Mixed => gen.utterance(),
            UtteranceShape::SingleWord => gen.single_word(),
        };
        let u = Utterance::new(inject(gen, phrases, &config.noise));
        if !ambiguous_repair(&u) {
            return u;
        }
        last = Some(u);
    }
    last.expect("at least one attempt")
}

/// Generates `size` turns of gold-annotated utterances. All turns are
/// marked as training turns; use [`AnnotatedCorpus::resplit`] to split.
pub fn generate_synthetic(config: &GrammarConfig, size: usize, seed: u64) -> Result<AnnotatedCorpus> {
    if size == 0 {
        return Err(Error::InvalidConfig("corpus size must be at least 1".into()));
    }
    if config.max_utterances_per_turn == 0 {
        return Err(Error::InvalidConfig("turns need at least one utterance".into()));
    }
    config.noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gen = Gen {
        rng: &mut rng,
        middle_field: config.middle_field,
    };
    let turns = (0..size)
        .map(|i| {
            let n = 1 + (1..config.max_utterances_per_turn).filter(|_| gen.chance(0.7)).count();
            Turn {
                id: format!("synth-{i:04}"),
                split: Split::Train,
                utterances: (0..n).map(|_| make_utterance(&mut gen, config)).collect(),
            }
        })
        .collect();
    Ok(AnnotatedCorpus::new(turns))
}

/// A generated word graph and the hypothesis indices of the spoken words.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthGraph {
    pub graph: WordGraph,
    pub gold: Vec<usize>,
}

impl SynthGraph {
    pub fn density(&self) -> f64 {
        self.graph.len() as f64 / self.gold.len() as f64
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.gen_range(lo..hi))
}

/// Lays the utterance out in time and adds competing hypotheses around it:
/// other words over the same span, words splitting a span in two, words
/// spanning two spoken words, and re-timed copies of the spoken word.
pub fn synth_word_graph(utterance: &Utterance, noise: &NoiseConfig, lexicon: &Lexicon, seed: u64) -> Result<SynthGraph> {
    if utterance.is_empty() {
        return Err(Error::EmptyAnnotations);
    }
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ noise.seed.rotate_left(17));
    let vocab: Vec<&str> = lexicon
        .entries()
        .map(|e| e.word.as_str())
        .filter(|w| *w != PAUSE_TOKEN)
        .collect();
    let mut spans: Vec<(Centis, Centis)> = Vec::new();
    let mut t: Centis = 0;
    for _ in &utterance.tokens {
        let dur = rng.gen_range(15..=40);
        spans.push((t, t + dur));
        t += dur + rng.gen_range(1..=2);
    }
    let mut gold = Vec::new();
    let mut hyps = Vec::new();
    for (tok, &(s, e)) in utterance.tokens.iter().zip(&spans) {
        let h = WordHypothesis {
            start: s,
            end: e,
            word: tok.word.clone(),
            acoustic: log_uniform(&mut rng, -2.5, -1.5),
        };
        gold.push(h.clone());
        hyps.push(h);
    }
    let per_word = if noise.confusion > 0.0 {
        (noise.hypotheses_per_word - 1.0) / noise.confusion
    } else {
        0.0
    };
    for i in 0..spans.len() {
        if !rng.gen_bool(noise.confusion) {
            continue;
        }
        let mut budget = per_word.floor() as usize + usize::from(rng.gen_bool(per_word.fract()));
        let (s, e) = spans[i];
        let base = gold[i].acoustic;
        while budget > 0 {
            let acoustic = |rng: &mut ChaCha8Rng| {
                if rng.gen_bool(noise.acoustic_ambiguity) {
                    base * log_uniform(rng, -0.3, 0.5)
                } else {
                    base * log_uniform(rng, -1.5, -0.5)
                }
            };
            let roll = rng.gen_range(0..20);
            if roll < 2 && budget >= 2 && e - s >= 6 {
                let m = rng.gen_range(s + 2..e - 2);
                for (a, b) in [(s, m), (m + 1, e)] {
                    let a_score = acoustic(&mut rng);
                    hyps.push(WordHypothesis {
                        start: a,
                        end: b,
                        word: pick(&mut rng, &vocab).to_string(),
                        acoustic: a_score,
                    });
                }
                budget -= 2;
                continue;
            }
            let (start, end, word) = if roll < 4 && i + 1 < spans.len() {
                (s, spans[i + 1].1, pick(&mut rng, &vocab).to_string())
            } else if roll < 6 {
                let (ds, de) = pick(&mut rng, &[(1, 0), (0, 1), (1, 1)]);
                (s + ds, e - de, gold[i].word.clone())
            } else {
                (s, e, pick(&mut rng, &vocab).to_string())
            };
            let a_score = acoustic(&mut rng);
            hyps.push(WordHypothesis {
                start,
                end,
                word,
                acoustic: a_score,
            });
            budget -= 1;
        }
    }
    let graph = WordGraph::new(hyps)?;
    let gold = gold
        .iter()
        .map(|g| graph.hypotheses().iter().position(|h| h == g).expect("gold hypothesis kept"))
        .collect();
    Ok(SynthGraph { graph, gold })
}

/// One word graph per utterance, each seeded from `seed` and its position.
pub fn corpus_word_graphs(corpus: &AnnotatedCorpus, noise: &NoiseConfig, lexicon: &Lexicon, seed: u64) -> Result<Vec<SynthGraph>> {
    corpus
        .utterances()
        .enumerate()
        .map(|(i, u)| synth_word_graph(u, noise, lexicon, seed.wrapping_mul(1_000_003).wrapping_add(i as u64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::DecoderConfig;
    use proptest::prelude::*;

    fn clean() -> GrammarConfig {
        GrammarConfig {
            noise: NoiseConfig::clean(),
            ..GrammarConfig::default()
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_synthetic(&GrammarConfig::default(), 30, 3).unwrap();
        let b = generate_synthetic(&GrammarConfig::default(), 30, 3).unwrap();
        let c = generate_synthetic(&GrammarConfig::default(), 30, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn clean_corpus_has_no_deletions() {
        let c = generate_synthetic(&clean(), 80, 1).unwrap();
        assert!(c.utterances().flat_map(|u| &u.tokens).all(|t| !t.is_deleted()));
    }

    #[test]
    fn forced_repetition_on_single_words() {
        let mut g = GrammarConfig {
            shape: UtteranceShape::SingleWord,
            ..clean()
        };
        g.noise.repetition = 1.0;
        let c = generate_synthetic(&g, 40, 2).unwrap();
        for u in c.utterances() {
            assert_eq!(u.len(), 2, "{}", u.text());
            assert_eq!(u.tokens[0].deleted, Some(DeletionReason::WordRepair));
            assert_eq!(u.surviving().len(), 1);
        }
    }

    #[test]
    fn gold_words_match_lexicon() {
        let lex = Lexicon::builtin();
        let mut g = GrammarConfig::default();
        g.noise.restart = 0.5;
        g.noise.substitution = 0.5;
        let c = generate_synthetic(&g, 300, 5).unwrap();
        for t in c.utterances().flat_map(|u| &u.tokens) {
            let l = lex.lookup(&t.word);
            assert!(l.known, "{} not in lexicon", t.word);
            assert!(l.syn.is_set(t.basic_syn), "{} {:?}", t.word, t.labels());
            assert!(l.sem.is_set(t.basic_sem), "{} {:?}", t.word, t.labels());
        }
    }

    #[test]
    fn corpus_shape_resembles_meeting_dialogs() {
        let c = generate_synthetic(&GrammarConfig::default(), 184, 11).unwrap();
        let utts = c.utterances().count() as f64;
        let per_turn = utts / 184.0;
        let per_utt = c.token_count() as f64 / utts;
        assert!((1.4..=2.0).contains(&per_turn), "{per_turn}");
        assert!((5.0..=10.0).contains(&per_utt), "{per_utt}");
        let ambiguous = c.utterances().filter(|u| ambiguous_repair(u)).count();
        assert_eq!(ambiguous, 0);
        for reason in DeletionReason::ALL {
            assert!(
                c.utterances().flat_map(|u| &u.tokens).any(|t| t.deleted == Some(reason)),
                "{reason:?}"
            );
        }
    }

    #[test]
    fn restart_keeps_first_word_and_labels() {
        let mut g = clean();
        g.noise.restart = 1.0;
        let c = generate_synthetic(&g, 100, 8).unwrap();
        let mut seen = 0;
        for u in c.utterances() {
            let rep: Vec<usize> = (0..u.len())
                .filter(|&i| u.tokens[i].deleted == Some(DeletionReason::PhraseRepair))
                .collect();
            if rep.is_empty() {
                continue;
            }
            seen += 1;
            let next = rep.last().unwrap() + 1;
            assert_eq!(fold(&u.tokens[rep[0]].word), fold(&u.tokens[next].word));
            assert_eq!(u.tokens[rep[0]].abs_syn, u.tokens[next].abs_syn);
            assert!(u.tokens[next].phrase_start);
        }
        assert!(seen > 30, "{seen}");
    }

    #[test]
    fn clean_graph_is_linear() {
        let lex = Lexicon::builtin();
        let c = generate_synthetic(&clean(), 5, 1).unwrap();
        for u in c.utterances() {
            let g = synth_word_graph(u, &NoiseConfig::clean(), &lex, 3).unwrap();
            assert_eq!(g.graph.len(), u.len());
            let paths = g.graph.complete_paths(DecoderConfig::default().gap_centis());
            assert_eq!(paths, vec![g.gold.clone()]);
        }
    }

    #[test]
    fn graph_density_near_target() {
        let lex = Lexicon::builtin();
        let c = generate_synthetic(&GrammarConfig::default(), 40, 9).unwrap();
        let noise = NoiseConfig::default();
        let graphs = corpus_word_graphs(&c, &noise, &lex, 1).unwrap();
        for g in &graphs {
            let d = g.density();
            assert!((5.3..=7.3).contains(&d), "{d}");
        }
    }

    #[test]
    fn config_validation() {
        let mut n = NoiseConfig::default();
        n.repetition = 1.5;
        assert!(n.validate().is_err());
        let mut n = NoiseConfig::default();
        n.hypotheses_per_word = 0.5;
        assert!(n.validate().is_err());
        assert!(generate_synthetic(&GrammarConfig::default(), 0, 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn gold_path_always_connectable(seed in 0u64..10_000) {
            let lex = Lexicon::builtin();
            let c = generate_synthetic(&GrammarConfig::default(), 1, seed).unwrap();
            let u = &c.turns[0].utterances[0];
            let g = synth_word_graph(u, &NoiseConfig::default(), &lex, seed).unwrap();
            let gap = DecoderConfig::default().gap_centis();
            prop_assert!(g.graph.is_path(&g.gold, gap));
            let words: Vec<&str> = g.gold.iter().map(|&i| g.graph.hypotheses()[i].word.as_str()).collect();
            prop_assert_eq!(words, u.words());
            let first = &g.graph.hypotheses()[g.gold[0]];
            let last = &g.graph.hypotheses()[*g.gold.last().unwrap()];
            prop_assert!(first.start - g.graph.start() <= gap);
            prop_assert!(g.graph.end() - last.end <= gap);
        }
    }
}
