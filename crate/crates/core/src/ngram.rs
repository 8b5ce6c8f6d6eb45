//! Smoothed category n-gram models and the exclusion-curve metric shared
//! with the recurrent predictors.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 5;

/// Interpolated back-off in the Witten-Bell style: each order mixes its
/// relative frequencies with the next lower order, weighted by how many
/// distinct continuations the history has been seen with. The unigram
/// floor adds `unigram_pseudocount` to every category.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smoothing {
    pub unigram_pseudocount: f64,
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing {
            unigram_pseudocount: 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Counts {
    next: Vec<f64>,
    total: f64,
    types: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    order: usize,
    categories: usize,
    smoothing: Smoothing,
    /// `tables[k]` holds counts for histories of length k.
    tables: Vec<HashMap<Vec<usize>, Counts>>,
}

impl NgramModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn categories(&self) -> usize {
        self.categories
    }

    fn bos(&self) -> usize {
        self.categories
    }

    /// Unsmoothed relative frequency of `next` after the last `order - 1`
    /// categories of `context` (start-padded). Zero for unseen histories.
    pub fn mle(&self, context: &[usize], next: usize) -> f64 {
        let h = self.history(context, self.order - 1);
        match self.tables[h.len()].get(&h) {
            Some(c) if c.total > 0.0 => c.next[next] / c.total,
            _ => 0.0,
        }
    }

    fn history(&self, context: &[usize], len: usize) -> Vec<usize> {
        let mut padded = vec![self.bos(); len.saturating_sub(context.len())];
        padded.extend_from_slice(&context[context.len().saturating_sub(len)..]);
        padded
    }

    /// Smoothed distribution over the next category.
    pub fn predict(&self, context: &[usize]) -> Vec<f64> {
        let v = self.categories as f64;
        let uni = &self.tables[0][&Vec::new()];
        let a = self.smoothing.unigram_pseudocount;
        let mut dist: Vec<f64> = uni.next.iter().map(|&c| (c + a) / (uni.total + a * v)).collect();
        for len in 1..self.order {
            let h = self.history(context, len);
            if let Some(c) = self.tables[len].get(&h) {
                let denom = c.total + c.types;
                for (p, &n) in dist.iter_mut().zip(&c.next) {
                    *p = (n + c.types * *p) / denom;
                }
            }
        }
        dist
    }
}

/// Fits an order-`n` model over category index sequences. Each sequence is
/// padded with start symbols, so the first category is predicted from an
/// all-start history.
pub fn fit_ngram(sequences: &[Vec<usize>], categories: usize, n: usize, smoothing: Smoothing) -> Result<NgramModel> {
    if !(1..=MAX_ORDER).contains(&n) {
        return Err(Error::NgramOrder(n));
    }
    if sequences.iter().all(Vec::is_empty) {
        return Err(Error::EmptyDataset);
    }
    if let Some(&bad) = sequences.iter().flatten().find(|&&c| c >= categories) {
        return Err(Error::OutOfRange {
            index: bad,
            value: bad as f64,
        });
    }
    let mut tables: Vec<HashMap<Vec<usize>, Counts>> = vec![HashMap::new(); n];
    let bos = categories;
    for seq in sequences {
        let mut padded = vec![bos; n - 1];
        padded.extend_from_slice(seq);
        for i in n - 1..padded.len() {
            let next = padded[i];
            for (len, table) in tables.iter_mut().enumerate() {
                let h = padded[i - len..i].to_vec();
                let c = table.entry(h).or_insert_with(|| Counts {
                    next: vec![0.0; categories],
                    ..Counts::default()
                });
                if c.next[next] == 0.0 {
                    c.types += 1.0;
                }
                c.next[next] += 1.0;
                c.total += 1.0;
            }
        }
    }
    Ok(NgramModel {
        order: n,
        categories,
        smoothing,
        tables,
    })
}

pub fn ngram_predict(model: &NgramModel, context: &[usize]) -> Vec<f64> {
    model.predict(context)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionCurve {
    pub name: String,
    /// `accuracy[k]` with the k lowest-valued categories excluded.
    pub accuracy: Vec<f64>,
    pub positions: usize,
}

impl ExclusionCurve {
    pub fn mean(&self) -> f64 {
        self.accuracy.iter().sum::<f64>() / self.accuracy.len() as f64
    }

    pub fn is_monotone(&self) -> bool {
        self.accuracy.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("# {}\nk\taccuracy\n", self.name);
        for (k, a) in self.accuracy.iter().enumerate() {
            out.push_str(&format!("{k}\t{a:.6}\n"));
        }
        out
    }
}

/// Rank of `target` counted from the bottom: how many categories would be
/// excluded before it. Ascending by value; among equal values the higher
/// index goes first, so the lowest index is kept longest, matching argmax.
fn exclusion_rank(values: &[f64], target: usize) -> usize {
    let t = values[target];
    values
        .iter()
        .enumerate()
        .filter(|&(i, v)| v.total_cmp(&t).is_lt() || (*v == t && i > target))
        .count()
}

/// Scores a predictor on every position after the first of each sequence,
/// using the gold categories before that position as history.
pub fn exclusion_curve<F>(name: &str, predictor: F, sequences: &[Vec<usize>], categories: usize) -> Result<ExclusionCurve>
where
    F: Fn(&[usize]) -> Vec<f64> + Sync,
{
    let ranks: Vec<usize> = sequences
        .par_iter()
        .flat_map_iter(|seq| {
            let predictor = &predictor;
            (1..seq.len()).map(move |i| {
                let values = predictor(&seq[..i]);
                assert_eq!(values.len(), categories, "predictor output size");
                exclusion_rank(&values, seq[i])
            })
        })
        .collect();
    if ranks.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let n = ranks.len() as f64;
    let accuracy = (0..categories)
        .map(|k| ranks.iter().filter(|&&r| r >= k).count() as f64 / n)
        .collect();
    Ok(ExclusionCurve {
        name: name.to_string(),
        accuracy,
        positions: ranks.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // N=0, V=1, /=6 in the basic syntactic order
    const N: usize = 0;
    const V: usize = 1;
    const SLASH: usize = 6;

    #[test]
    fn unigram_relative_frequencies() {
        let m = fit_ngram(&[vec![N, V, N]], 13, 1, Smoothing::default()).unwrap();
        assert!((m.mle(&[], N) - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.mle(&[], V) - 1.0 / 3.0).abs() < 1e-12);
        let p = m.predict(&[]);
        assert!((p[N] - 3.0 / 16.0).abs() < 1e-12);
        assert!((p[5] - 1.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn bigram_relative_frequency() {
        let m = fit_ngram(&[vec![N, V, SLASH, N, V]], 13, 2, Smoothing::default()).unwrap();
        assert_eq!(m.mle(&[N], V), 1.0);
        assert_eq!(m.mle(&[V], SLASH), 1.0);
    }

    #[test]
    fn witten_bell_by_hand() {
        // bigram history N seen twice, always followed by V: one type
        let m = fit_ngram(&[vec![N, V], vec![N, V]], 3, 2, Smoothing::default()).unwrap();
        let uni = [(2.0 + 1.0) / 7.0, (2.0 + 1.0) / 7.0, 1.0 / 7.0];
        let p = m.predict(&[N]);
        assert!((p[V] - (2.0 + uni[1]) / 3.0).abs() < 1e-12);
        assert!((p[2] - uni[2] / 3.0).abs() < 1e-12);
    }

    #[test]
    fn unseen_context_backs_off() {
        let m3 = fit_ngram(&[vec![N, V, N, V]], 13, 3, Smoothing::default()).unwrap();
        let m2 = fit_ngram(&[vec![N, V, N, V]], 13, 2, Smoothing::default()).unwrap();
        let m1 = fit_ngram(&[vec![N, V, N, V]], 13, 1, Smoothing::default()).unwrap();
        // history (SLASH, SLASH) never seen at any order above the unigram
        assert_eq!(m3.predict(&[SLASH, SLASH]), m1.predict(&[]));
        // (SLASH, N) unseen as a trigram history but N is seen as a bigram one
        assert_eq!(m3.predict(&[SLASH, N]), m2.predict(&[N]));
    }

    #[test]
    fn invalid_order_and_input() {
        assert!(matches!(fit_ngram(&[vec![N]], 13, 0, Smoothing::default()), Err(Error::NgramOrder(0))));
        assert!(matches!(fit_ngram(&[vec![N]], 13, 6, Smoothing::default()), Err(Error::NgramOrder(6))));
        assert!(fit_ngram(&[vec![]], 13, 2, Smoothing::default()).is_err());
        assert!(fit_ngram(&[vec![13]], 13, 2, Smoothing::default()).is_err());
    }

    #[test]
    fn deterministic_fit() {
        let data = vec![vec![0, 1, 2, 1, 0], vec![2, 2, 1]];
        let a = fit_ngram(&data, 4, 3, Smoothing::default()).unwrap();
        let b = fit_ngram(&data, 4, 3, Smoothing::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.predict(&[2, 1]), b.predict(&[2, 1]));
    }

    #[test]
    fn curve_edge_cases() {
        let test = vec![vec![0, 1, 2, 3], vec![3, 2]];
        let oracle = |h: &[usize]| {
            let next = match h.last() {
                Some(0) => 1,
                Some(1) => 2,
                Some(2) => 3,
                _ => 2,
            };
            (0..4).map(|c| if c == next { 1.0 } else { 0.0 }).collect()
        };
        let c = exclusion_curve("oracle", oracle, &test, 4).unwrap();
        assert_eq!(c.accuracy, vec![1.0; 4]);
        assert_eq!(c.positions, 4);

        // uniform output: ties keep the lowest index, so the last point is
        // the rate of category 0 as the true next category
        let uniform = |_: &[usize]| vec![0.25; 4];
        let u = exclusion_curve("uniform", uniform, &test, 4).unwrap();
        assert_eq!(u.accuracy[0], 1.0);
        assert_eq!(u.accuracy[3], 0.0);
        assert!(u.is_monotone());

        assert!(matches!(
            exclusion_curve("x", uniform, &[vec![1]], 4),
            Err(Error::EmptyTestSet)
        ));
    }

    #[test]
    fn last_point_is_top_one_accuracy() {
        let test = vec![vec![0, 1, 1, 2, 0, 3, 3]];
        let m = fit_ngram(&test, 4, 2, Smoothing::default()).unwrap();
        let c = exclusion_curve("2-gram", |h| m.predict(h), &test, 4).unwrap();
        let top1 = (1..test[0].len())
            .filter(|&i| crate::lexicon::argmax(&m.predict(&test[0][..i])) == test[0][i])
            .count() as f64
            / 6.0;
        assert!((c.accuracy[3] - top1).abs() < 1e-12);
        assert!(c.to_tsv().starts_with("# 2-gram\nk\taccuracy\n0\t1.000000\n"));
    }

    fn sequences() -> impl Strategy<Value = Vec<Vec<usize>>> {
        proptest::collection::vec(proptest::collection::vec(0usize..6, 1..12), 1..8)
    }

    proptest! {
        #[test]
        fn distributions_are_normalized_and_positive(data in sequences(), n in 1usize..=5, ctx in proptest::collection::vec(0usize..6, 0..6)) {
            let m = fit_ngram(&data, 6, n, Smoothing::default()).unwrap();
            let p = m.predict(&ctx);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|&x| x > 0.0));
        }

        #[test]
        fn curves_are_monotone_and_repeatable(train in sequences(), test in sequences(), n in 1usize..=5) {
            let m = fit_ngram(&train, 6, n, Smoothing::default()).unwrap();
            let a = exclusion_curve("m", |h| m.predict(h), &test, 6);
            let b = exclusion_curve("m", |h| m.predict(h), &test, 6);
            prop_assert_eq!(&a.as_ref().ok(), &b.as_ref().ok());
            if let Ok(c) = a {
                prop_assert!(c.is_monotone());
                prop_assert_eq!(c.accuracy[0], 1.0);
                prop_assert!(c.accuracy.iter().all(|&x| (0.0..=1.0).contains(&x)));
            }
        }
    }
}
