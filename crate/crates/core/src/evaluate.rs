//! Identification metrics: inclusion probabilities, credible-interval
//! indicators, TPR/FPR sweeps, AUC, top-k counts, and replicate
//! summaries.

use crate::error::{Error, Result};
use crate::model::{quantile_sorted, GroundTruth, MethodId, PosteriorSummary};
use serde::{Deserialize, Serialize};

/// What a score refers to: a gene's main effect or one of its
/// interactions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EffectKind {
    Main,
    Interaction(usize),
}

/// One scored effect.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectScore {
    pub gene: usize,
    pub kind: EffectKind,
    pub score: f64,
    pub method: MethodId,
}

impl EffectScore {
    fn is_true(&self, truth: &GroundTruth) -> bool {
        match self.kind {
            EffectKind::Main => truth.is_true_main(self.gene),
            EffectKind::Interaction(k) => truth.is_true_interaction(self.gene, k),
        }
    }

    fn env_index(&self) -> usize {
        match self.kind {
            EffectKind::Main => 0,
            EffectKind::Interaction(k) => k + 1,
        }
    }
}

/// One point of the TPR/FPR sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub cutoff: f64,
    pub tpr: f64,
    pub fpr: f64,
}

/// Posterior inclusion probability: the mean of the slab indicators.
pub fn inclusion_probability(indicators: &[bool]) -> Result<f64> {
    if indicators.is_empty() {
        return Err(Error::EmptyDraws("inclusion probability".into()));
    }
    Ok(indicators.iter().filter(|&&b| b).count() as f64 / indicators.len() as f64)
}

/// Equal-tailed credible interval of a draw sequence.
pub fn equal_tailed_interval(draws: &[f64], level: f64) -> Result<(f64, f64)> {
    if draws.len() < 2 {
        return Err(Error::EmptyDraws("credible interval".into()));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(Error::Config(format!("level {level} outside (0,1)")));
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
    Ok((
        quantile_sorted(&sorted, (1.0 - level) / 2.0),
        quantile_sorted(&sorted, (1.0 + level) / 2.0),
    ))
}

/// 1 iff the equal-tailed interval at `level` excludes zero.
pub fn credible_indicator(draws: &[f64], level: f64) -> Result<bool> {
    let (lo, hi) = equal_tailed_interval(draws, level)?;
    Ok(lo > 0.0 || hi < 0.0)
}

/// Score every gene-linked effect of a scan. Spike methods score by
/// inclusion probability, the others by the average credible indicator
/// over the summary's level grid; both live on [0,1].
pub fn score_effects(summaries: &[Option<PosteriorSummary>]) -> Vec<EffectScore> {
    let mut out = Vec::new();
    for s in summaries.iter().flatten() {
        out.push(EffectScore {
            gene: s.gene,
            kind: EffectKind::Main,
            score: s.beta.score(),
            method: s.method,
        });
        for (k, e) in s.eta.iter().enumerate() {
            out.push(EffectScore {
                gene: s.gene,
                kind: EffectKind::Interaction(k),
                score: e.score(),
                method: s.method,
            });
        }
    }
    out
}

pub fn mains_only(scores: &[EffectScore]) -> Vec<EffectScore> {
    scores.iter().filter(|s| s.kind == EffectKind::Main).copied().collect()
}

pub fn interactions_only(scores: &[EffectScore]) -> Vec<EffectScore> {
    scores
        .iter()
        .filter(|s| matches!(s.kind, EffectKind::Interaction(_)))
        .copied()
        .collect()
}

fn split_labels(scores: &[EffectScore], truth: &GroundTruth) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for s in scores {
        if s.is_true(truth) {
            pos.push(s.score);
        } else {
            neg.push(s.score);
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::UndefinedAuc(format!(
            "need both true and false effects, got {} true / {} false",
            pos.len(),
            neg.len()
        )));
    }
    Ok((pos, neg))
}

/// Area under the TPR/FPR curve swept over all cutoffs, computed as the
/// Mann-Whitney statistic with ties counted one half.
pub fn roc_auc(scores: &[EffectScore], truth: &GroundTruth) -> Result<f64> {
    let (pos, neg) = split_labels(scores, truth)?;
    // Rank-sum over the pooled sample with midranks for ties.
    let mut pooled: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    pooled.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite scores"));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j + 1 < pooled.len() && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let midrank = (i + j + 2) as f64 / 2.0;
        for item in &pooled[i..=j] {
            if item.1 {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }
    let np = pos.len() as f64;
    let nn = neg.len() as f64;
    Ok((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn))
}

/// TPR/FPR at every distinct cutoff (selection rule: score >= cutoff),
/// ordered by increasing cutoff, with anchor points at cutoff 0 and
/// above the maximum.
pub fn roc_points(scores: &[EffectScore], truth: &GroundTruth) -> Result<Vec<RocPoint>> {
    let (pos, neg) = split_labels(scores, truth)?;
    let mut cutoffs: Vec<f64> = scores.iter().map(|s| s.score).collect();
    cutoffs.push(0.0);
    cutoffs.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    cutoffs.dedup();
    let max = cutoffs.last().copied().unwrap_or(0.0);
    cutoffs.push(max + 1.0);
    let np = pos.len() as f64;
    let nn = neg.len() as f64;
    Ok(cutoffs
        .into_iter()
        .map(|c| RocPoint {
            cutoff: c,
            tpr: pos.iter().filter(|&&s| s >= c).count() as f64 / np,
            fpr: neg.iter().filter(|&&s| s >= c).count() as f64 / nn,
        })
        .collect())
}

/// True-signal counts among the k top-scored mains and the k top-scored
/// interactions. Ties break by (score desc, gene asc, env asc) so the
/// selection is reproducible.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopKCounts {
    pub mains: usize,
    pub interactions: usize,
    pub total: usize,
}

pub fn top_k(scores: &[EffectScore], truth: &GroundTruth, k: usize) -> Result<TopKCounts> {
    let count_top = |mut subset: Vec<EffectScore>| -> Result<usize> {
        if k > subset.len() {
            return Err(Error::Config(format!(
                "k = {k} exceeds the {} scored effects in the category",
                subset.len()
            )));
        }
        subset.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .expect("finite scores")
                .then(a.gene.cmp(&b.gene))
                .then(a.env_index().cmp(&b.env_index()))
        });
        Ok(subset[..k].iter().filter(|s| s.is_true(truth)).count())
    };
    let mains = count_top(mains_only(scores))?;
    let interactions = count_top(interactions_only(scores))?;
    Ok(TopKCounts {
        mains,
        interactions,
        total: mains + interactions,
    })
}

/// Mean and sample standard deviation over replicates.
pub fn summarize_replicates(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::Config(format!(
            "need at least 2 replicates for a standard deviation, got {}",
            values.len()
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{RngStream, StreamId};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn truth_of(mains: &[usize], ints: &[(usize, usize)]) -> GroundTruth {
        GroundTruth {
            mains: mains.iter().map(|&g| (g, 0.3)).collect(),
            interactions: ints.iter().map(|&(g, k)| (g, k, 0.3)).collect(),
            env_coefs: vec![],
            clin_coefs: vec![],
        }
    }

    fn main_score(gene: usize, score: f64) -> EffectScore {
        EffectScore {
            gene,
            kind: EffectKind::Main,
            score,
            method: MethodId::Ladblss,
        }
    }

    /// O(n^2) pairwise AUC oracle with half-weight ties.
    fn auc_brute_force(scores: &[EffectScore], truth: &GroundTruth) -> f64 {
        let pos: Vec<f64> = scores.iter().filter(|s| s.is_true(truth)).map(|s| s.score).collect();
        let neg: Vec<f64> = scores.iter().filter(|s| !s.is_true(truth)).map(|s| s.score).collect();
        let mut sum = 0.0;
        for &p in &pos {
            for &q in &neg {
                sum += if p > q {
                    1.0
                } else if p == q {
                    0.5
                } else {
                    0.0
                };
            }
        }
        sum / (pos.len() * neg.len()) as f64
    }

    #[test]
    fn inclusion_probability_basics() {
        assert_eq!(inclusion_probability(&[true; 4]).unwrap(), 1.0);
        assert_eq!(inclusion_probability(&[true, false, true, false]).unwrap(), 0.5);
        assert!(inclusion_probability(&[]).is_err());
    }

    #[test]
    fn inclusion_probability_law_of_large_numbers() {
        let mut rng = RngStream::new(1, StreamId::new(0, 0, 0));
        let ind: Vec<bool> = (0..5000).map(|_| rng.uniform() < 0.3).collect();
        let p = inclusion_probability(&ind).unwrap();
        assert!((p - 0.3).abs() < 0.02, "p {p}");
    }

    #[test]
    fn credible_indicator_cases() {
        assert!(credible_indicator(&[2.0; 10], 0.95).unwrap());
        assert!(credible_indicator(&[2.0; 10], 0.5).unwrap());
        let sym: Vec<f64> = (-50..=50).map(|i| i as f64 / 10.0).collect();
        assert!(!credible_indicator(&sym, 0.95).unwrap());
        // N(1,1) draws: the 95% interval straddles zero, indicator 0.
        let mut rng = RngStream::new(2, StreamId::new(0, 0, 0));
        let draws: Vec<f64> = (0..10_000)
            .map(|_| crate::dist::sample_normal(1.0, 1.0, &mut rng).unwrap())
            .collect();
        assert!(!credible_indicator(&draws, 0.95).unwrap());
        // ... but at 50% it excludes zero (interval about [0.33, 1.67]).
        assert!(credible_indicator(&draws, 0.5).unwrap());
        assert!(credible_indicator(&[1.0], 0.95).is_err());
        assert!(credible_indicator(&[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn auc_perfect_separation_and_ties() {
        let truth = truth_of(&[0, 1], &[]);
        let scores = vec![main_score(0, 0.9), main_score(1, 0.8), main_score(2, 0.1)];
        assert_eq!(roc_auc(&scores, &truth).unwrap(), 1.0);
        let all_equal = vec![main_score(0, 0.5), main_score(1, 0.5), main_score(2, 0.5)];
        assert_eq!(roc_auc(&all_equal, &truth).unwrap(), 0.5);
        // Degenerate truth.
        let no_pos = truth_of(&[], &[]);
        assert!(roc_auc(&scores, &no_pos).is_err());
    }

    #[test]
    fn auc_matches_brute_force_oracle() {
        let mut rng = RngStream::new(3, StreamId::new(0, 0, 0));
        for trial in 0..20 {
            let truth = truth_of(&[0, 3, 7, 11, 15], &[]);
            let scores: Vec<EffectScore> = (0..20)
                .map(|g| {
                    // Quantized scores force plenty of ties.
                    let s = (rng.uniform() * 8.0).round() / 8.0;
                    main_score(g, s)
                })
                .collect();
            let fast = roc_auc(&scores, &truth).unwrap();
            let brute = auc_brute_force(&scores, &truth);
            assert_abs_diff_eq!(fast, brute, epsilon = 1e-12);
            let _ = trial;
        }
    }

    #[test]
    fn roc_endpoints() {
        let truth = truth_of(&[0], &[]);
        let scores = vec![main_score(0, 0.9), main_score(1, 0.2), main_score(2, 0.0)];
        let pts = roc_points(&scores, &truth).unwrap();
        let first = pts.first().unwrap();
        assert_eq!(first.cutoff, 0.0);
        assert_eq!((first.tpr, first.fpr), (1.0, 1.0));
        let last = pts.last().unwrap();
        assert_eq!((last.tpr, last.fpr), (0.0, 0.0));
        // Monotone nonincreasing in cutoff.
        for w in pts.windows(2) {
            assert!(w[1].tpr <= w[0].tpr + 1e-15);
            assert!(w[1].fpr <= w[0].fpr + 1e-15);
        }
    }

    #[test]
    fn top_k_exhaustive_and_separated() {
        let truth = truth_of(&[0, 1], &[(0, 0), (2, 1)]);
        let mut scores = vec![];
        for g in 0..4 {
            scores.push(main_score(g, if truth.is_true_main(g) { 0.9 } else { 0.1 }));
            for k in 0..2 {
                scores.push(EffectScore {
                    gene: g,
                    kind: EffectKind::Interaction(k),
                    score: if truth.is_true_interaction(g, k) { 0.8 } else { 0.2 },
                    method: MethodId::Ladblss,
                });
            }
        }
        // k = all effects: counts equal the whole truth.
        let all = top_k(&scores, &truth, 4).unwrap();
        assert_eq!((all.mains, all.interactions, all.total), (2, 2, 4));
        // Separation: every true effect scores above every null.
        let sep = top_k(&scores, &truth, 2).unwrap();
        assert_eq!(sep.total, 4);
        assert!(top_k(&scores, &truth, 100).is_err());
    }

    #[test]
    fn top_k_tie_break_is_deterministic() {
        let truth = truth_of(&[3], &[(3, 0)]);
        let scores: Vec<EffectScore> = (0..6)
            .flat_map(|g| {
                vec![
                    main_score(g, 0.5),
                    EffectScore {
                        gene: g,
                        kind: EffectKind::Interaction(0),
                        score: 0.5,
                        method: MethodId::Ladblss,
                    },
                ]
            })
            .collect();
        // All tied at 0.5: selection must be by gene index, so gene 3
        // is picked iff k >= 4.
        let t3 = top_k(&scores, &truth, 3).unwrap();
        assert_eq!(t3.total, 0);
        let t4 = top_k(&scores, &truth, 4).unwrap();
        assert_eq!(t4.total, 2);
    }

    #[test]
    fn replicate_summaries() {
        let (m, s) = summarize_replicates(&[0.9, 0.9, 0.9]).unwrap();
        assert_eq!(m, 0.9);
        assert_eq!(s, 0.0);
        let (m2, s2) = summarize_replicates(&[0.0, 1.0]).unwrap();
        assert_eq!(m2, 0.5);
        assert_abs_diff_eq!(s2, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert!(summarize_replicates(&[1.0]).is_err());
    }

    #[test]
    fn replicate_summary_two_pass_cross_check() {
        let mut rng = RngStream::new(4, StreamId::new(0, 0, 0));
        let vals: Vec<f64> = (0..100).map(|_| rng.uniform() * 3.0).collect();
        let (mean, sd) = summarize_replicates(&vals).unwrap();
        // Two-pass: shift by the mean and recompute.
        let shifted: Vec<f64> = vals.iter().map(|v| v - mean).collect();
        let var2 = shifted.iter().map(|v| v * v).sum::<f64>() / (vals.len() - 1) as f64;
        assert_abs_diff_eq!(sd, var2.sqrt(), epsilon = 1e-12);
    }

    proptest! {
        /// AUC is invariant under strictly monotone score transforms.
        #[test]
        fn auc_monotone_invariance(raw in proptest::collection::vec(0.0f64..1.0, 10..40)) {
            let truth = truth_of(&[0, 1, 2], &[]);
            let scores: Vec<EffectScore> = raw.iter().enumerate()
                .map(|(g, &s)| main_score(g, s)).collect();
            let transformed: Vec<EffectScore> = raw.iter().enumerate()
                .map(|(g, &s)| main_score(g, (3.0 * s).exp() / (1.0 + (3.0 * s).exp()))).collect();
            let a = roc_auc(&scores, &truth).unwrap();
            let b = roc_auc(&transformed, &truth).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }

        /// Permuting equal-scored effects never changes the AUC.
        #[test]
        fn auc_tie_permutation_invariance(seed in 0u64..500) {
            let mut rng = RngStream::new(seed, StreamId::new(0, 0, 0));
            let truth = truth_of(&[0, 4, 8], &[]);
            let mut scores: Vec<EffectScore> = (0..12)
                .map(|g| main_score(g, (rng.uniform() * 3.0).round() / 3.0))
                .collect();
            let before = roc_auc(&scores, &truth).unwrap();
            // Reverse order (stable permutation of ties).
            scores.reverse();
            let after = roc_auc(&scores, &truth).unwrap();
            prop_assert!((before - after).abs() < 1e-12);
        }
    }
}
