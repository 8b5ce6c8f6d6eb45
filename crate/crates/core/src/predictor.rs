//! Next-category prediction and sequence scoring.
//!
//! Two recurrent networks predict the basic syntactic and basic semantic
//! category of the next word. When that word arrives, the prediction's value
//! at its disambiguated category is the step's syntactic (or semantic)
//! plausibility. Each step's score is the product of acoustic, syntactic and
//! semantic plausibility.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{Axis, CategoryVector};
use crate::models::{Models, NetId};
use crate::tagger::TokenAnnotation;

/// Predicts the category distribution of the next word and advances the
/// context.
pub fn predict_next(
    models: &Models,
    axis: Axis,
    context: &mut Vec<f64>,
    current: &CategoryVector,
) -> Result<CategoryVector> {
    if current.axis() != axis {
        return Err(Error::AxisMismatch {
            expected: axis,
            found: current.axis(),
        });
    }
    let id = match axis {
        Axis::BasicSyn => NetId::BasSynPre,
        Axis::BasicSem => NetId::BasSemPre,
        other => {
            return Err(Error::AxisMismatch {
                expected: Axis::BasicSyn,
                found: other,
            })
        }
    };
    let net = models.get(id);
    let (out, hidden) = net.forward(current.values(), context)?;
    *context = hidden;
    CategoryVector::new(axis, out)
}

/// Value of the prediction at the argmax of the disambiguated vector.
pub fn step_plausibility(predicted: &CategoryVector, disambiguated: &CategoryVector) -> Result<f64> {
    if predicted.axis() != disambiguated.axis() {
        return Err(Error::AxisMismatch {
            expected: predicted.axis(),
            found: disambiguated.axis(),
        });
    }
    Ok(predicted.get(disambiguated.argmax()))
}

pub fn combined_step(acoustic: f64, syntactic: f64, semantic: f64) -> Result<f64> {
    for (index, value) in [acoustic, syntactic, semantic].into_iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::OutOfRange { index, value });
        }
    }
    Ok(acoustic * syntactic * semantic)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepScore {
    pub acoustic: f64,
    pub syntactic: f64,
    pub semantic: f64,
    pub combined: f64,
    /// False for words no prediction applies to: the first word and words
    /// removed on arrival.
    pub judged: bool,
}

impl StepScore {
    pub fn new(acoustic: f64, syntactic: f64, semantic: f64) -> Result<Self> {
        Ok(StepScore {
            acoustic,
            syntactic,
            semantic,
            combined: combined_step(acoustic, syntactic, semantic)?,
            judged: true,
        })
    }

    /// A step scored on acoustics alone.
    pub fn unjudged(acoustic: f64) -> Result<Self> {
        Ok(StepScore {
            judged: false,
            ..StepScore::new(acoustic, 1.0, 1.0)?
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankingMode {
    /// Geometric mean per word.
    #[default]
    Normalized,
    /// Plain product of all steps.
    Raw,
}

impl FromStr for RankingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normalized" => Ok(RankingMode::Normalized),
            "raw" => Ok(RankingMode::Raw),
            other => Err(Error::InvalidConfig(format!("unknown ranking mode `{other}`"))),
        }
    }
}

impl fmt::Display for RankingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankingMode::Normalized => "normalized",
            RankingMode::Raw => "raw",
        })
    }
}

/// Length-normalized scores average the acoustic factor over all steps and
/// the syntactic and semantic factors over judged steps only, so words that
/// escape prediction neither dilute nor inflate the language factors. With
/// every step judged this is the geometric mean of the combined values.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SequenceScore {
    pub steps: Vec<StepScore>,
    pub log_sum: f64,
    pub log_acoustic: f64,
    pub judged: usize,
    pub normalized: f64,
}

impl SequenceScore {
    pub fn push(&mut self, step: StepScore) {
        self.log_sum += step.combined.ln();
        self.log_acoustic += step.acoustic.ln();
        self.judged += usize::from(step.judged);
        self.steps.push(step);
        let language = (self.log_sum - self.log_acoustic) / self.judged.max(1) as f64;
        self.normalized = (self.log_acoustic / self.steps.len() as f64 + language).exp();
    }

    pub fn raw(&self) -> f64 {
        self.log_sum.exp()
    }

    pub fn value(&self, mode: RankingMode) -> f64 {
        match mode {
            RankingMode::Normalized => self.normalized,
            RankingMode::Raw => self.raw(),
        }
    }
}

/// Aggregates steps into a log-sum and its per-step geometric mean. An empty
/// step list has log-sum 0 and normalized score 1.
pub fn sequence_score(steps: &[StepScore]) -> SequenceScore {
    let mut s = SequenceScore {
        normalized: 1.0,
        ..SequenceScore::default()
    };
    for step in steps {
        s.push(*step);
    }
    s
}

/// Prediction contexts and the predictions awaiting the next word.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorState {
    syn_context: Vec<f64>,
    sem_context: Vec<f64>,
    syn_prediction: Option<CategoryVector>,
    sem_prediction: Option<CategoryVector>,
}

impl PredictorState {
    pub fn new(models: &Models) -> Self {
        PredictorState {
            syn_context: models.get(NetId::BasSynPre).zero_context(),
            sem_context: models.get(NetId::BasSemPre).zero_context(),
            syn_prediction: None,
            sem_prediction: None,
        }
    }

    pub fn has_prediction(&self) -> bool {
        self.syn_prediction.is_some()
    }

    /// Syntactic and semantic plausibility of a newly tagged word; 1.0 for
    /// the first word, which has no prediction.
    pub fn plausibility(&self, annotation: &TokenAnnotation) -> (f64, f64) {
        let syn = self
            .syn_prediction
            .as_ref()
            .map_or(1.0, |p| p.get(annotation.basic_syn.argmax()));
        let sem = self
            .sem_prediction
            .as_ref()
            .map_or(1.0, |p| p.get(annotation.basic_sem.argmax()));
        (syn, sem)
    }

    /// Feeds a word's disambiguated categories, as one-hot vectors, and
    /// stores the next predictions.
    pub fn observe(&mut self, models: &Models, annotation: &TokenAnnotation) {
        let syn = CategoryVector::one_hot(Axis::BasicSyn, annotation.basic_syn.argmax());
        let sem = CategoryVector::one_hot(Axis::BasicSem, annotation.basic_sem.argmax());
        self.syn_prediction = Some(predict_next(models, Axis::BasicSyn, &mut self.syn_context, &syn).expect("basic axis"));
        self.sem_prediction = Some(predict_next(models, Axis::BasicSem, &mut self.sem_context, &sem).expect("basic axis"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn zero_net_predicts_uniform_half() {
        let m = Models::zeros(14).unwrap();
        let mut ctx = m.get(NetId::BasSynPre).zero_context();
        let p = predict_next(&m, Axis::BasicSyn, &mut ctx, &CategoryVector::one_hot(Axis::BasicSyn, 3)).unwrap();
        assert!(p.values().iter().all(|&x| x == 0.5));
        assert_eq!(step_plausibility(&p, &CategoryVector::one_hot(Axis::BasicSyn, 7)).unwrap(), 0.5);
    }

    #[test]
    fn plausibility_reads_the_selected_unit() {
        let mut v = vec![0.1; 13];
        v[1] = 0.9;
        let pred = CategoryVector::new(Axis::BasicSyn, v).unwrap();
        let dis = CategoryVector::one_hot(Axis::BasicSyn, 1);
        assert_eq!(step_plausibility(&pred, &dis).unwrap(), 0.9);
        let sem = CategoryVector::one_hot(Axis::BasicSem, 1);
        assert!(step_plausibility(&pred, &sem).is_err());
    }

    #[test]
    fn minimum_prediction_gives_minimum_plausibility() {
        let v: Vec<f64> = (0..13).map(|i| 0.2 + 0.05 * i as f64).collect();
        let pred = CategoryVector::new(Axis::BasicSyn, v).unwrap();
        let worst = step_plausibility(&pred, &CategoryVector::one_hot(Axis::BasicSyn, 0)).unwrap();
        for i in 0..13 {
            assert!(step_plausibility(&pred, &CategoryVector::one_hot(Axis::BasicSyn, i)).unwrap() >= worst);
        }
    }

    #[test]
    fn combined_step_products() {
        assert_eq!(combined_step(1.0, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(combined_step(0.5, 1.0, 1.0).unwrap(), 0.5);
        assert!(close(combined_step(0.8, 0.5, 0.5).unwrap(), 0.2));
        assert!(matches!(combined_step(1.2, 0.5, 0.5), Err(Error::OutOfRange { index: 0, .. })));
        assert!(combined_step(0.5, 0.5, -0.1).is_err());
    }

    #[test]
    fn sequence_score_arithmetic() {
        let s = sequence_score(&[StepScore::new(0.2, 1.0, 1.0).unwrap()]);
        assert!(close(s.normalized, 0.2));
        let q = StepScore::new(0.25, 1.0, 1.0).unwrap();
        let s = sequence_score(&[q, q]);
        assert!(close(s.raw(), 0.0625));
        assert!(close(s.normalized, 0.25));
        assert_eq!(sequence_score(&[]).normalized, 1.0);
    }

    #[test]
    fn unjudged_steps_do_not_dilute_language_factors() {
        let judged = StepScore::new(0.5, 0.2, 0.5).unwrap();
        let free = StepScore::unjudged(0.5).unwrap();
        let a = sequence_score(&[judged, judged]);
        let b = sequence_score(&[judged, free, judged]);
        assert!(close(a.normalized, 0.5 * 0.1));
        assert!(close(b.normalized, a.normalized));
        assert!(close(b.raw(), a.raw() * 0.5));
        assert_eq!(b.judged, 2);
    }

    #[test]
    fn ranking_modes_parse() {
        assert_eq!("raw".parse::<RankingMode>().unwrap(), RankingMode::Raw);
        assert_eq!(RankingMode::default().to_string(), "normalized");
        assert!("best".parse::<RankingMode>().is_err());
    }

    fn steps() -> impl Strategy<Value = Vec<StepScore>> {
        proptest::collection::vec((0.01f64..1.0, 0.01f64..1.0, 0.01f64..1.0), 1..10)
            .prop_map(|v| v.into_iter().map(|(a, s, m)| StepScore::new(a, s, m).unwrap()).collect())
    }

    proptest! {
        #[test]
        fn constant_steps_normalize_to_the_constant(c in 0.01f64..1.0, n in 1usize..20) {
            let step = StepScore::new(c, 1.0, 1.0).unwrap();
            let s = sequence_score(&vec![step; n]);
            prop_assert!((s.normalized - c).abs() < 1e-9);
        }

        #[test]
        fn raising_one_step_raises_both_scores(st in steps(), pick in 0usize..10, bump in 0.01f64..0.5) {
            let i = pick % st.len();
            let base = sequence_score(&st);
            let mut better = st.clone();
            let a = (better[i].acoustic + bump).min(1.0);
            prop_assume!(a > better[i].acoustic);
            better[i] = StepScore::new(a, better[i].syntactic, better[i].semantic).unwrap();
            let up = sequence_score(&better);
            prop_assert!(up.raw() > base.raw());
            prop_assert!(up.normalized > base.normalized);
        }

        #[test]
        fn aggregate_ignores_step_order(st in steps(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = st.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = sequence_score(&st);
            let b = sequence_score(&shuffled);
            prop_assert!((a.log_sum - b.log_sum).abs() < 1e-9);
            prop_assert!((a.normalized - b.normalized).abs() < 1e-9);
        }

        #[test]
        fn plausibility_ignores_other_units(v in proptest::collection::vec(0.0f64..1.0, 13), w in proptest::collection::vec(0.0f64..1.0, 13), sel in 0usize..13) {
            let dis = CategoryVector::one_hot(Axis::BasicSyn, sel);
            let mut w = w;
            w[sel] = v[sel];
            let a = step_plausibility(&CategoryVector::new(Axis::BasicSyn, v).unwrap(), &dis).unwrap();
            let b = step_plausibility(&CategoryVector::new(Axis::BasicSyn, w).unwrap(), &dis).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn neutral_language_factors_reduce_to_acoustic_ranking(a in proptest::collection::vec(0.01f64..1.0, 1..8), b in proptest::collection::vec(0.01f64..1.0, 1..8)) {
            let score = |xs: &[f64]| sequence_score(&xs.iter().map(|&x| StepScore::new(x, 1.0, 1.0).unwrap()).collect::<Vec<_>>());
            let acoustic = |xs: &[f64]| xs.iter().map(|x| x.ln()).sum::<f64>() / xs.len() as f64;
            let (sa, sb) = (score(&a), score(&b));
            let ord_full = sa.normalized.partial_cmp(&sb.normalized).unwrap();
            let ord_ac = acoustic(&a).partial_cmp(&acoustic(&b)).unwrap();
            if (acoustic(&a) - acoustic(&b)).abs() > 1e-9 {
                prop_assert_eq!(ord_full, ord_ac);
            }
        }
    }
}
