//! Study metrics: persuasiveness and effectiveness over rating triplets,
//! questionnaire shares, and the Wilcoxon rank-sum test between arms.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::data::{ItemId, UserId};

/// Smallest per-arm sample considered adequately powered.
pub const MIN_SAMPLE_SIZE: usize = 73;

/// Largest `|a| + |b|` for which p-values are computed by enumeration.
pub const EXACT_LIMIT: usize = 12;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("user {user} item {item}: missing post-explanation rating")]
    MissingPostExplanation { user: UserId, item: ItemId },
    #[error("user {user} item {item}: missing post-trailer rating")]
    MissingPostTrailer { user: UserId, item: ItemId },
    #[error("user {user} has {found} rated items, expected {expected}")]
    WrongCount { user: UserId, expected: usize, found: usize },
    #[error("no records")]
    Empty,
    #[error("rank-sum test needs two non-empty samples")]
    EmptySample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatingTriplet {
    pub user: UserId,
    pub item: ItemId,
    /// Before the explanation.
    pub r: f64,
    /// After the explanation.
    pub r_e: Option<f64>,
    /// After the trailer.
    pub r_t: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Satisfaction {
    ReallyCaptures,
    PartiallyCaptures,
    DoesNotCapture,
}

impl Satisfaction {
    pub const ALL: [Satisfaction; 3] =
        [Satisfaction::ReallyCaptures, Satisfaction::PartiallyCaptures, Satisfaction::DoesNotCapture];

    pub fn score(self) -> f64 {
        match self {
            Satisfaction::ReallyCaptures => 2.0,
            Satisfaction::PartiallyCaptures => 1.0,
            Satisfaction::DoesNotCapture => 0.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Satisfaction::ReallyCaptures => "really_captures",
            Satisfaction::PartiallyCaptures => "partially_captures",
            Satisfaction::DoesNotCapture => "does_not_capture",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionnaireAnswer {
    pub user: UserId,
    /// "I understood the reason why the two movies have been ranked ..."
    pub transparency: bool,
    pub trust: bool,
    pub satisfaction: Satisfaction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuestionnaireSummary {
    pub transparency: f64,
    pub trust: f64,
    pub satisfaction: f64,
}

fn group(records: &[RatingTriplet], n: usize) -> Result<BTreeMap<UserId, Vec<&RatingTriplet>>, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut by_user: BTreeMap<UserId, Vec<&RatingTriplet>> = BTreeMap::new();
    for r in records {
        by_user.entry(r.user).or_default().push(r);
    }
    for (user, rs) in by_user.iter_mut() {
        if rs.len() != n {
            return Err(MetricsError::WrongCount { user: *user, expected: n, found: rs.len() });
        }
        rs.sort_by_key(|r| r.item);
    }
    Ok(by_user)
}

/// Per-user mean of `r_e - r`.
pub fn persuasiveness_per_user(records: &[RatingTriplet], n: usize) -> Result<BTreeMap<UserId, f64>, MetricsError> {
    group(records, n)?
        .into_iter()
        .map(|(user, rs)| {
            let mut sum = 0.0;
            for r in rs {
                let r_e = r.r_e.ok_or(MetricsError::MissingPostExplanation { user, item: r.item })?;
                sum += r_e - r.r;
            }
            Ok((user, sum / n as f64))
        })
        .collect()
}

/// Per-user mean of `|r_e - r_t|`.
pub fn effectiveness_per_user(records: &[RatingTriplet], n: usize) -> Result<BTreeMap<UserId, f64>, MetricsError> {
    group(records, n)?
        .into_iter()
        .map(|(user, rs)| {
            let mut sum = 0.0;
            for r in rs {
                let r_e = r.r_e.ok_or(MetricsError::MissingPostExplanation { user, item: r.item })?;
                let r_t = r.r_t.ok_or(MetricsError::MissingPostTrailer { user, item: r.item })?;
                sum += (r_e - r_t).abs();
            }
            Ok((user, sum / n as f64))
        })
        .collect()
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len();
    values.sum::<f64>() / n as f64
}

/// Mean over users of the per-user mean rating change. Positive means the
/// explanation raised ratings.
pub fn persuasiveness(records: &[RatingTriplet], n: usize) -> Result<f64, MetricsError> {
    Ok(mean(persuasiveness_per_user(records, n)?.into_values()))
}

/// Mean over users of the per-user mean `|r_e - r_t|`. Lower is better.
pub fn effectiveness(records: &[RatingTriplet], n: usize) -> Result<f64, MetricsError> {
    Ok(mean(effectiveness_per_user(records, n)?.into_values()))
}

pub fn questionnaire_metrics(answers: &[QuestionnaireAnswer]) -> Result<QuestionnaireSummary, MetricsError> {
    if answers.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = answers.len() as f64;
    let share = |f: fn(&QuestionnaireAnswer) -> bool| answers.iter().filter(|a| f(a)).count() as f64 / n;
    Ok(QuestionnaireSummary {
        transparency: share(|a| a.transparency),
        trust: share(|a| a.trust),
        satisfaction: answers.iter().map(|a| a.satisfaction.score()).sum::<f64>() / n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankSumTest {
    /// Sum of the midranks of sample `a`.
    pub w: f64,
    /// Mann-Whitney `U = W - |a| (|a| + 1) / 2`.
    pub u: f64,
    /// Two-sided.
    pub p: f64,
    pub method: PValueMethod,
}

/// Midranks (1-based) of `values`, ties sharing their average rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

fn pooled(a: &[f64], b: &[f64]) -> Result<(Vec<f64>, f64), MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptySample);
    }
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&all);
    let w = ranks[..a.len()].iter().sum();
    Ok((ranks, w))
}

fn finish(w: f64, na: usize, p: f64, method: PValueMethod) -> RankSumTest {
    RankSumTest {
        w,
        u: w - (na * (na + 1)) as f64 / 2.0,
        p: p.clamp(f64::MIN_POSITIVE, 1.0),
        method,
    }
}

/// Exact two-sided p-value: the share of all `C(n, |a|)` rank assignments
/// whose rank sum is at least as far from its mean as the observed one.
pub fn wilcoxon_exact(a: &[f64], b: &[f64]) -> Result<RankSumTest, MetricsError> {
    let (ranks, w) = pooled(a, b)?;
    let (na, n) = (a.len(), ranks.len());
    let expected = na as f64 * (n + 1) as f64 / 2.0;
    let observed = (w - expected).abs() - 1e-9;
    let (mut extreme, mut total) = (0u64, 0u64);
    let mut idx: Vec<usize> = (0..na).collect();
    loop {
        let s: f64 = idx.iter().map(|&i| ranks[i]).sum();
        total += 1;
        if (s - expected).abs() >= observed {
            extreme += 1;
        }
        // Next combination in lexicographic order.
        let mut k = na;
        while k > 0 && idx[k - 1] == n - na + k - 1 {
            k -= 1;
        }
        if k == 0 {
            break;
        }
        idx[k - 1] += 1;
        for t in k..na {
            idx[t] = idx[t - 1] + 1;
        }
    }
    Ok(finish(w, na, extreme as f64 / total as f64, PValueMethod::Exact))
}

/// Normal approximation with tie-corrected variance and a 0.5 continuity
/// correction.
pub fn wilcoxon_normal(a: &[f64], b: &[f64]) -> Result<RankSumTest, MetricsError> {
    let (ranks, w) = pooled(a, b)?;
    let (na, nb, n) = (a.len() as f64, b.len() as f64, ranks.len() as f64);
    let expected = na * (n + 1.0) / 2.0;
    let mut sorted = ranks.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    for group in sorted.chunk_by(|x, y| x == y) {
        let t = group.len() as f64;
        tie_term += t * t * t - t;
    }
    let variance = if n > 1.0 { na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0))) } else { 0.0 };
    if variance <= 0.0 {
        return Ok(finish(w, a.len(), 1.0, PValueMethod::Normal));
    }
    let z = ((w - expected).abs() - 0.5).max(0.0) / variance.sqrt();
    Ok(finish(w, a.len(), erfc(z / std::f64::consts::SQRT_2), PValueMethod::Normal))
}

/// Exact when `|a| + |b| <= 12`, normal approximation above.
pub fn wilcoxon_ranksum(a: &[f64], b: &[f64]) -> Result<RankSumTest, MetricsError> {
    if a.len() + b.len() <= EXACT_LIMIT {
        wilcoxon_exact(a, b)
    } else {
        wilcoxon_normal(a, b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSizeGate {
    pub n: usize,
    pub min: usize,
    pub pass: bool,
}

pub fn sample_size_gate(n: usize) -> SampleSizeGate {
    SampleSizeGate { n, min: MIN_SAMPLE_SIZE, pass: n >= MIN_SAMPLE_SIZE }
}

/// Completed-session records of one study arm.
#[derive(Debug, Clone, Default)]
pub struct ArmRecords {
    pub arm: String,
    pub triplets: Vec<RatingTriplet>,
    pub answers: Vec<QuestionnaireAnswer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmMetrics {
    pub arm: String,
    pub n: usize,
    pub persuasiveness: Option<f64>,
    pub effectiveness: Option<f64>,
    pub transparency: Option<f64>,
    pub trust: Option<f64>,
    pub satisfaction: Option<f64>,
    pub sample_size: SampleSizeGate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmComparison {
    pub metric: String,
    pub arm_a: String,
    pub arm_b: String,
    pub n_a: usize,
    pub n_b: usize,
    pub u: f64,
    pub p: f64,
    pub method: PValueMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    /// Items per user entering persuasiveness and effectiveness.
    pub items_per_user: usize,
    pub satisfaction_scale: BTreeMap<String, f64>,
    pub min_sample_size: usize,
    pub arms: Vec<ArmMetrics>,
    pub comparisons: Vec<ArmComparison>,
}

/// One block per arm plus rank-sum tests between every pair of arms, on
/// the per-user persuasiveness and effectiveness values.
pub fn build_report(arms: &[ArmRecords], items_per_user: usize) -> Result<MetricsReport, MetricsError> {
    let mut blocks = Vec::new();
    let mut per_user: Vec<(BTreeMap<UserId, f64>, BTreeMap<UserId, f64>)> = Vec::new();
    for arm in arms {
        let (pers, eff) = if arm.triplets.is_empty() {
            (BTreeMap::new(), BTreeMap::new())
        } else {
            (
                persuasiveness_per_user(&arm.triplets, items_per_user)?,
                effectiveness_per_user(&arm.triplets, items_per_user)?,
            )
        };
        let q = (!arm.answers.is_empty()).then(|| questionnaire_metrics(&arm.answers)).transpose()?;
        let n = arm.answers.len().max(pers.len());
        blocks.push(ArmMetrics {
            arm: arm.arm.clone(),
            n,
            persuasiveness: (!pers.is_empty()).then(|| mean(pers.values().copied())),
            effectiveness: (!eff.is_empty()).then(|| mean(eff.values().copied())),
            transparency: q.map(|q| q.transparency),
            trust: q.map(|q| q.trust),
            satisfaction: q.map(|q| q.satisfaction),
            sample_size: sample_size_gate(n),
        });
        per_user.push((pers, eff));
    }
    let mut comparisons = Vec::new();
    for (metric, pick) in [
        ("persuasiveness", 0usize),
        ("effectiveness", 1usize),
    ] {
        for a in 0..arms.len() {
            for b in a + 1..arms.len() {
                let get = |k: usize| -> Vec<f64> {
                    let m = if pick == 0 { &per_user[k].0 } else { &per_user[k].1 };
                    m.values().copied().collect()
                };
                let (va, vb) = (get(a), get(b));
                if va.is_empty() || vb.is_empty() {
                    continue;
                }
                let t = wilcoxon_ranksum(&va, &vb)?;
                comparisons.push(ArmComparison {
                    metric: metric.to_string(),
                    arm_a: arms[a].arm.clone(),
                    arm_b: arms[b].arm.clone(),
                    n_a: va.len(),
                    n_b: vb.len(),
                    u: t.u,
                    p: t.p,
                    method: t.method,
                });
            }
        }
    }
    Ok(MetricsReport {
        schema_version: REPORT_SCHEMA_VERSION,
        items_per_user,
        satisfaction_scale: Satisfaction::ALL.iter().map(|s| (s.as_str().to_string(), s.score())).collect(),
        min_sample_size: MIN_SAMPLE_SIZE,
        arms: blocks,
        comparisons,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn t(user: u32, item: u32, r: f64, r_e: f64, r_t: f64) -> RatingTriplet {
        RatingTriplet { user: UserId(user), item: ItemId(item), r, r_e: Some(r_e), r_t: Some(r_t) }
    }

    fn answer(user: u32, transparency: bool, trust: bool, satisfaction: Satisfaction) -> QuestionnaireAnswer {
        QuestionnaireAnswer { user: UserId(user), transparency, trust, satisfaction }
    }

    #[test]
    fn persuasiveness_examples() {
        assert_eq!(persuasiveness(&[t(1, 1, 3.0, 4.0, 0.0), t(1, 2, 4.0, 4.0, 0.0)], 2).unwrap(), 0.5);
        assert_eq!(persuasiveness(&[t(1, 1, 3.0, 3.0, 0.0), t(1, 2, 4.0, 4.0, 0.0)], 2).unwrap(), 0.0);
        assert_eq!(persuasiveness(&[t(1, 1, 3.0, 4.0, 0.0), t(2, 1, 3.0, 2.0, 0.0)], 1).unwrap(), 0.0);
        let mut missing = t(1, 7, 3.0, 0.0, 0.0);
        missing.r_e = None;
        assert_eq!(
            persuasiveness(&[missing], 1),
            Err(MetricsError::MissingPostExplanation { user: UserId(1), item: ItemId(7) })
        );
        assert!(matches!(persuasiveness(&[t(1, 1, 3.0, 4.0, 0.0)], 2), Err(MetricsError::WrongCount { .. })));
        assert_eq!(persuasiveness(&[], 2), Err(MetricsError::Empty));
    }

    #[test]
    fn effectiveness_examples() {
        let recs = [t(1, 1, 0.0, 4.0, 3.0), t(1, 2, 0.0, 4.0, 5.0)];
        assert_eq!(effectiveness(&recs, 2).unwrap(), 1.0);
        let swapped: Vec<_> = recs.iter().map(|r| RatingTriplet { r_e: r.r_t, r_t: r.r_e, ..*r }).collect();
        assert_eq!(effectiveness(&swapped, 2).unwrap(), 1.0);
        assert_eq!(effectiveness(&[t(1, 1, 2.0, 4.0, 4.0)], 1).unwrap(), 0.0);
        let mut missing = t(1, 1, 2.0, 4.0, 4.0);
        missing.r_t = None;
        assert!(matches!(effectiveness(&[missing], 1), Err(MetricsError::MissingPostTrailer { .. })));
    }

    #[test]
    fn questionnaire_examples() {
        use Satisfaction::*;
        let all = [answer(1, true, true, ReallyCaptures), answer(2, true, true, ReallyCaptures)];
        assert_eq!(
            questionnaire_metrics(&all).unwrap(),
            QuestionnaireSummary { transparency: 1.0, trust: 1.0, satisfaction: 2.0 }
        );
        let four = [
            answer(1, true, true, ReallyCaptures),
            answer(2, false, true, PartiallyCaptures),
            answer(3, true, true, DoesNotCapture),
            answer(4, true, false, PartiallyCaptures),
        ];
        let q = questionnaire_metrics(&four).unwrap();
        assert_eq!(q.trust, 0.75);
        assert_eq!(q.satisfaction, 1.0);
        assert_eq!(questionnaire_metrics(&[]), Err(MetricsError::Empty));
    }

    #[test]
    fn midranks_share_ties() {
        assert_eq!(midranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn exact_examples() {
        let r = wilcoxon_exact(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert!((r.p - 0.1).abs() < 1e-12);
        assert_eq!(r.w, 6.0);
        assert_eq!(r.u, 0.0);
        let same = wilcoxon_exact(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(same.p, 1.0);
        assert_eq!(wilcoxon_ranksum(&[], &[1.0]), Err(MetricsError::EmptySample));
        assert_eq!(wilcoxon_ranksum(&[1.0; 7], &[2.0; 6]).unwrap().method, PValueMethod::Normal);
    }

    /// Rank-sum distribution by brute force over all `2^n` subsets.
    fn subset_oracle(a: &[f64], b: &[f64]) -> f64 {
        let all: Vec<f64> = a.iter().chain(b).copied().collect();
        let ranks = midranks(&all);
        let n = all.len();
        let w: f64 = ranks[..a.len()].iter().sum();
        let e = a.len() as f64 * (n + 1) as f64 / 2.0;
        let (mut hit, mut tot) = (0, 0);
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != a.len() {
                continue;
            }
            let s: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
            tot += 1;
            if (s - e).abs() >= (w - e).abs() - 1e-9 {
                hit += 1;
            }
        }
        hit as f64 / tot as f64
    }

    #[test]
    fn normal_path_tracks_exact_at_twelve() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            let a: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..1.0)).collect();
            let b: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..1.0)).collect();
            let exact = wilcoxon_exact(&a, &b).unwrap().p;
            assert!((exact - subset_oracle(&a, &b)).abs() < 1e-12);
            worst = worst.max((wilcoxon_normal(&a, &b).unwrap().p - exact).abs());
        }
        assert!(worst <= 0.02, "max |p_normal - p_exact| = {worst}");
    }

    #[test]
    fn gate_boundary() {
        assert!(sample_size_gate(73).pass);
        assert!(!sample_size_gate(72).pass);
        // 892 participants over 12 arms, each arm at least 73.
        let arms = [73, 73, 73, 73, 73, 73, 73, 73, 73, 73, 73, 89];
        assert_eq!(arms.iter().sum::<usize>(), 892);
        assert!(arms.iter().all(|&n| sample_size_gate(n).pass));
    }

    #[test]
    fn report_has_one_block_per_arm_and_both_comparisons() {
        use Satisfaction::*;
        let a = ArmRecords {
            arm: "pairwise/semantic".into(),
            triplets: vec![t(1, 1, 3.0, 4.0, 4.0), t(1, 2, 3.0, 4.0, 5.0), t(2, 1, 2.0, 3.0, 3.0), t(2, 2, 2.0, 2.0, 2.0)],
            answers: vec![answer(1, true, true, ReallyCaptures), answer(2, false, true, PartiallyCaptures)],
        };
        let b = ArmRecords {
            arm: "popularity/semantic".into(),
            triplets: vec![t(3, 1, 3.0, 3.0, 4.0), t(3, 2, 3.0, 3.0, 3.0)],
            answers: vec![answer(3, false, false, DoesNotCapture)],
        };
        let c = ArmRecords { arm: "empty".into(), ..Default::default() };
        let report = build_report(&[a, b, c], 2).unwrap();
        assert_eq!(report.arms.len(), 3);
        assert_eq!(report.arms[0].n, 2);
        assert_eq!(report.arms[0].persuasiveness, Some(0.75));
        assert_eq!(report.arms[0].effectiveness, Some(0.25));
        assert!(!report.arms[0].sample_size.pass);
        assert_eq!(report.arms[2].persuasiveness, None);
        assert_eq!(report.comparisons.len(), 2);
        assert_eq!(report.comparisons[0].metric, "persuasiveness");
        assert_eq!(report.comparisons[1].metric, "effectiveness");
        assert_eq!(report.satisfaction_scale["really_captures"], 2.0);
        let json = serde_json::to_string(&report).unwrap();
        assert_eq!(serde_json::from_str::<MetricsReport>(&json).unwrap(), report);
    }

    fn arb_triplets() -> impl Strategy<Value = Vec<RatingTriplet>> {
        proptest::collection::vec((1.0f64..5.0, 1.0f64..5.0, 1.0f64..5.0), 2..20).prop_map(|v| {
            v.chunks_exact(2)
                .enumerate()
                .flat_map(|(u, c)| {
                    c.iter().enumerate().map(move |(i, &(r, r_e, r_t))| t(u as u32, i as u32, r, r_e, r_t))
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn persuasiveness_shifts_with_post_ratings(recs in arb_triplets(), c in -2.0f64..2.0) {
            let base = persuasiveness(&recs, 2).unwrap();
            let shifted: Vec<_> = recs.iter().map(|r| RatingTriplet { r_e: r.r_e.map(|v| v + c), ..*r }).collect();
            prop_assert!((persuasiveness(&shifted, 2).unwrap() - base - c).abs() < 1e-9);
        }

        #[test]
        fn metrics_ignore_record_order(mut recs in arb_triplets(), seed in any::<u64>()) {
            let (p, e) = (persuasiveness(&recs, 2).unwrap(), effectiveness(&recs, 2).unwrap());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rand::seq::SliceRandom::shuffle(recs.as_mut_slice(), &mut rng);
            prop_assert_eq!(persuasiveness(&recs, 2).unwrap(), p);
            prop_assert_eq!(effectiveness(&recs, 2).unwrap(), e);
            prop_assert!(e >= 0.0);
        }

        #[test]
        fn effectiveness_zero_iff_equal(recs in arb_triplets()) {
            let same: Vec<_> = recs.iter().map(|r| RatingTriplet { r_t: r.r_e, ..*r }).collect();
            prop_assert_eq!(effectiveness(&same, 2).unwrap(), 0.0);
            let any_diff = recs.iter().any(|r| r.r_e != r.r_t);
            prop_assert_eq!(effectiveness(&recs, 2).unwrap() > 0.0, any_diff);
        }

        #[test]
        fn exact_p_symmetric_and_in_range(
            a in proptest::collection::vec(0u8..6, 1..6),
            b in proptest::collection::vec(0u8..6, 1..6),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let (x, y) = (wilcoxon_exact(&a, &b).unwrap(), wilcoxon_exact(&b, &a).unwrap());
            prop_assert!((x.p - y.p).abs() < 1e-12);
            prop_assert!(x.p > 0.0 && x.p <= 1.0);
            prop_assert!((x.p - subset_oracle(&a, &b)).abs() < 1e-12);
            let z = wilcoxon_normal(&a, &b).unwrap();
            prop_assert!(z.p > 0.0 && z.p <= 1.0);
        }
    }
}
