//! Evaluation statistics: coefficient of variation, td-error percentage,
//! value regret, convergence detection, the greedy evaluation protocol and
//! the across-trial summaries (confidence intervals, Welch tests).

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::env::Environment;
use crate::learners::Learner;
use crate::linear_fa::{ActionChoices, LinearQ};
use crate::{Error, RandomStream, Result, Scalar};

/// Scores of consecutive episodes of one trial.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreSeries<S> {
    pub trial: u32,
    pub episodes: Vec<u64>,
    pub scores: Vec<S>,
}

impl<S: Scalar> ScoreSeries<S> {
    pub fn new(trial: u32) -> Self {
        Self { trial, episodes: Vec::new(), scores: Vec::new() }
    }

    pub fn from_scores(trial: u32, scores: Vec<S>) -> Self {
        Self { trial, episodes: (0..scores.len() as u64).collect(), scores }
    }

    pub fn push(&mut self, episode: u64, score: S) {
        self.episodes.push(episode);
        self.scores.push(score);
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn mean(&self) -> Result<S> {
        let (m, _) = moments(&self.scores)?;
        Ok(m)
    }

    /// Sample standard deviation (n − 1 denominator; 0 for a single score).
    pub fn std_dev(&self) -> Result<S> {
        let (_, sd) = moments(&self.scores)?;
        Ok(sd)
    }
}

/// Mean and sample standard deviation in one Welford pass.
pub fn moments<S: Scalar>(xs: &[S]) -> Result<(S, S)> {
    if xs.is_empty() {
        return Err(Error::UndefinedStatistic("empty series".into()));
    }
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    for (i, x) in xs.iter().enumerate() {
        let x = x.as_f64();
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    let sd = if xs.len() > 1 { (m2 / (xs.len() - 1) as f64).sqrt() } else { 0.0 };
    Ok((S::of(mean), S::of(sd)))
}

/// σ/μ from precomputed moments.
pub fn cv_from_moments<S: Scalar>(mean: S, sd: S) -> Result<S> {
    if mean == S::zero() {
        return Err(Error::UndefinedStatistic("coefficient of variation of a zero-mean series".into()));
    }
    Ok(sd / mean)
}

pub fn coefficient_of_variation<S: Scalar>(series: &ScoreSeries<S>) -> Result<S> {
    let (m, sd) = moments(&series.scores)?;
    cv_from_moments(m, sd)
}

/// Relative td error δ/Q.
pub fn td_error_pct<S: Scalar>(delta: S, q: S) -> Result<S> {
    if q == S::zero() {
        return Err(Error::UndefinedStatistic("td-error percentage with Q = 0".into()));
    }
    Ok(delta / q)
}

/// Mean td-error percentage over samples; samples with Q = 0 are counted
/// and left out.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TdErrorAccumulator {
    sum: f64,
    count: u64,
    excluded: u64,
}

impl TdErrorAccumulator {
    pub fn add<S: Scalar>(&mut self, delta: S, q: S) {
        match td_error_pct(delta, q) {
            Ok(p) => {
                self.sum += p.as_f64();
                self.count += 1;
            }
            Err(_) => self.excluded += 1,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn excluded(&self) -> u64 {
        self.excluded
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }
}

/// Σ_t [max_a Q_ref(s_t, a) − Q_ref(s_t, a_t)] over `(choices, executed index)` pairs.
pub fn value_regret<'a, S: Scalar + 'a>(
    trajectory: impl IntoIterator<Item = (&'a ActionChoices<S>, usize)>,
    q_ref: &LinearQ<S>,
) -> Result<S> {
    let mut total = S::zero();
    for (choices, executed) in trajectory {
        let values = choices.values(q_ref)?;
        let best = values.iter().copied().fold(S::neg_infinity(), S::max);
        let taken = *values
            .get(executed)
            .ok_or_else(|| Error::Contract(format!("executed index {executed} out of range")))?;
        total = total + (best - taken);
    }
    Ok(total)
}

/// Declares convergence once a full window of per-episode weight changes
/// stays at or below `eps`.
#[derive(Clone, Debug)]
pub struct ConvergenceMonitor {
    eps: f64,
    window: usize,
    recent: VecDeque<f64>,
}

impl ConvergenceMonitor {
    pub const DEFAULT_WINDOW: usize = 20;
    pub const DEFAULT_EPS: f64 = 1e-4;

    pub fn new(eps: f64, window: usize) -> Result<Self> {
        if window == 0 || !(eps > 0.0) {
            return Err(Error::Config(format!("convergence monitor needs window ≥ 1 and eps > 0 (got {window}, {eps})")));
        }
        Ok(Self { eps, window, recent: VecDeque::with_capacity(window) })
    }

    /// Record this episode's ΔQ and report whether the window has converged.
    pub fn convergence_reached(&mut self, delta_q: f64) -> bool {
        if self.recent.len() == self.window {
            self.recent.pop_front();
        }
        self.recent.push_back(delta_q);
        self.is_converged()
    }

    pub fn is_converged(&self) -> bool {
        self.recent.len() == self.window && self.recent.iter().all(|&d| d <= self.eps)
    }
}

/// Run `n` greedy, non-learning episodes.
pub fn evaluate_policy<S: Scalar, E: Environment>(
    agent: &Learner<S>,
    env: &E,
    n: usize,
    rng: &mut RandomStream,
) -> Result<ScoreSeries<S>> {
    if n == 0 {
        return Err(Error::Config("evaluation needs at least one episode".into()));
    }
    let mut series = ScoreSeries::new(0);
    for e in 0..n {
        let summary = agent.evaluate_episode(env, rng)?;
        series.push(e as u64, S::of(summary.score));
    }
    Ok(series)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
}

/// 95% normal-approximation interval for the mean; `None` below two samples.
pub fn ci95(xs: &[f64]) -> Option<ConfidenceInterval> {
    if xs.len() < 2 {
        return None;
    }
    let (m, sd) = moments(xs).ok()?;
    let half = 1.959_963_984_540_054 * sd / (xs.len() as f64).sqrt();
    Some(ConfidenceInterval { lower: m - half, upper: m + half })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    /// One-sided p value for `mean(a) > mean(b)`.
    pub p_greater: f64,
}

/// Welch's unequal-variance t test of `a` against `b`.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::UndefinedStatistic("Welch test needs two samples per group".into()));
    }
    let (ma, sa) = moments(a)?;
    let (mb, sb) = moments(b)?;
    let va = sa * sa / a.len() as f64;
    let vb = sb * sb / b.len() as f64;
    let se2 = va + vb;
    if se2 == 0.0 {
        let p = if ma > mb { 0.0 } else { 1.0 };
        let t = if ma == mb { 0.0 } else { (ma - mb).signum() * f64::INFINITY };
        return Ok(WelchTest { t, df: (a.len() + b.len() - 2) as f64, p_greater: p });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2
        / (va * va / (a.len() - 1) as f64 + vb * vb / (b.len() - 1) as f64);
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::UndefinedStatistic(e.to_string()))?;
    Ok(WelchTest { t, df, p_greater: 1.0 - dist.cdf(t) })
}

/// Bonferroni-adjusted p value for `comparisons` tests.
pub fn bonferroni(p: f64, comparisons: usize) -> f64 {
    (p * comparisons.max(1) as f64).min(1.0)
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::UndefinedStatistic("correlation needs two equal-length series of length ≥ 2".into()));
    }
    let (mx, _) = moments(xs)?;
    let (my, _) = moments(ys)?;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedStatistic("correlation of a constant series".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Average ranks, ties sharing their mean rank.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::UndefinedStatistic("correlation needs equal-length series".into()));
    }
    pearson(&ranks(xs), &ranks(ys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ActionId, FeatureMode, FiniteMdp};
    use crate::learners::AgentKind;
    use crate::linear_fa::{Encoding, LearningParams};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn two_pass(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
        (m, (ss / (n - 1.0)).sqrt())
    }

    #[test]
    fn cv_examples() {
        assert!((cv_from_moments(2493.17f64, 698.09).unwrap() - 0.28).abs() <= 0.005);
        assert!((cv_from_moments(3633.78f64, 1189.89).unwrap() - 0.33).abs() <= 0.005);
        assert!(cv_from_moments(0.0, 1.0).is_err());
        let s = ScoreSeries::from_scores(0, vec![1.0, -1.0]);
        assert!(matches!(coefficient_of_variation(&s), Err(Error::UndefinedStatistic(_))));
    }

    #[test]
    fn td_pct_examples() {
        assert_eq!(td_error_pct(1.0, 4.0).unwrap(), 0.25);
        assert_eq!(td_error_pct(0.0, 3.0).unwrap(), 0.0);
        assert!(td_error_pct(1.0, 0.0).is_err());
        let mut acc = TdErrorAccumulator::default();
        acc.add(1.0, 4.0);
        acc.add(1.0, 0.0);
        acc.add(3.0, 4.0);
        assert_eq!(acc.mean(), Some(0.5));
        assert_eq!((acc.count(), acc.excluded()), (2, 1));
    }

    fn row(values: &[f64]) -> (LinearQ<f64>, ActionChoices<f64>) {
        let mut q = LinearQ::tabular(1, values.len());
        q.set_weights(0.0, values.to_vec()).unwrap();
        let c = ActionChoices::new(
            (0..values.len()).map(|i| ActionId(i as u8)).collect(),
            (0..values.len()).map(Encoding::Index).collect(),
        )
        .unwrap();
        (q, c)
    }

    #[test]
    fn regret_examples() {
        let (q, c) = row(&[5.0, 2.0]);
        assert_eq!(value_regret([(&c, 1)], &q).unwrap(), 3.0);
        assert_eq!(value_regret([(&c, 0), (&c, 0)], &q).unwrap(), 0.0);
        assert!(value_regret([(&c, 5)], &q).is_err());
    }

    #[test]
    fn convergence_window() {
        let mut m = ConvergenceMonitor::new(1e-4, 3).unwrap();
        assert!(!m.convergence_reached(0.0));
        assert!(!m.convergence_reached(0.0));
        assert!(m.convergence_reached(0.0));
        assert!(!m.convergence_reached(1.0));
        assert!(!m.convergence_reached(0.0));
        assert!(!m.convergence_reached(0.0));
        assert!(m.convergence_reached(0.0));
        assert!(ConvergenceMonitor::new(1e-4, 0).is_err());
    }

    #[test]
    fn evaluation_is_pure_and_deterministic() {
        let env = FiniteMdp::cycle(&[0.0, 2.0], 10).unwrap();
        let p = LearningParams::new(0.1, 0.9, 0.0, 0.0, 0.0);
        let mut agent = Learner::for_env(&env, AgentKind::QLearning, p, FeatureMode::Tabular).unwrap();
        let mut rng = RandomStream::new(1);
        let mut arng = RandomStream::new(2);
        for _ in 0..5 {
            agent.train_episode(&env, &mut rng, &mut arng).unwrap();
        }
        let before = agent.q.clone();
        let s = evaluate_policy(&agent, &env, 4, &mut rng).unwrap();
        assert_eq!(agent.q, before);
        assert!(s.scores.iter().all(|&x| x == s.scores[0]));
        assert!(evaluate_policy(&agent, &env, 0, &mut rng).is_err());
    }

    #[test]
    fn welch_against_reference_values() {
        let a = [27.5, 21.0, 19.0, 23.6, 17.0, 17.9, 16.9, 20.1, 21.9, 22.6, 23.1, 19.6, 19.0, 21.7, 21.4];
        let b = [27.1, 22.0, 20.8, 23.4, 23.4, 23.5, 25.8, 22.0, 24.8, 20.2, 21.9, 22.1, 22.9, 20.5, 24.4];
        let w = welch_t_test(&a, &b).unwrap();
        // classic textbook example: t = -2.46, df = 24.99, two-sided p = 0.021
        assert_relative_eq!(w.t, -2.46, epsilon = 1e-2);
        assert_relative_eq!(w.df, 24.99, epsilon = 5e-2);
        assert_relative_eq!(2.0 * (1.0 - w.p_greater), 0.021, epsilon = 2e-3);
        assert_eq!(bonferroni(0.02, 4), 0.08);
        assert_eq!(bonferroni(0.5, 4), 1.0);
        assert!(welch_t_test(&a[..1], &b).is_err());
    }

    #[test]
    fn ci_needs_two_samples() {
        assert!(ci95(&[1.0]).is_none());
        let ci = ci95(&[1.0, 3.0]).unwrap();
        assert_relative_eq!(ci.upper - 2.0, 1.959_963_984_540_054 * 2f64.sqrt() / 2f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(ci.lower + ci.upper, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn correlations() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [2.0, 4.0, 6.0, 8.0, 10.0];
        assert_relative_eq!(pearson(&x, &y).unwrap(), 1.0, epsilon = 1e-12);
        let z = [1.0, 8.0, 27.0, 64.0, 125.0];
        assert_relative_eq!(spearman(&x, &z).unwrap(), 1.0, epsilon = 1e-12);
        let w = [5.0, 4.0, 4.0, 2.0, 1.0];
        assert!(spearman(&x, &w).unwrap() < -0.9);
        assert_eq!(ranks(&[3.0, 1.0, 3.0]), vec![2.5, 1.0, 2.5]);
        assert!(pearson(&x, &[1.0; 5]).is_err());
    }

    proptest! {
        #[test]
        fn moments_match_two_pass(xs in prop::collection::vec(-1e4f64..1e4, 2..200)) {
            let (m, sd) = moments(&xs).unwrap();
            let (m2, sd2) = two_pass(&xs);
            prop_assert!((m - m2).abs() <= 1e-9 * m2.abs().max(1.0));
            prop_assert!((sd - sd2).abs() <= 1e-9 * sd2.abs().max(1.0));
        }

        #[test]
        fn cv_scale_invariant(xs in prop::collection::vec(1.0f64..1e4, 2..100), c in 0.01f64..100.0) {
            let a = coefficient_of_variation(&ScoreSeries::from_scores(0, xs.clone())).unwrap();
            let b = coefficient_of_variation(&ScoreSeries::from_scores(0, xs.iter().map(|x| x * c).collect())).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-12));
        }

        #[test]
        fn regret_nonnegative_and_additive(
            rows in prop::collection::vec((prop::collection::vec(-10f64..10.0, 1..5), 0usize..5), 1..20),
            split in 0usize..20,
        ) {
            let qs: Vec<_> = rows.iter().map(|(v, a)| (row(v), a % v.len())).collect();
            // each step gets its own one-state table, all stacked into one Q
            let n = qs.len();
            let width = 4;
            let mut q = LinearQ::tabular(n, width);
            let mut w = vec![0.0; n * width];
            let mut steps = Vec::new();
            for (s, ((_, single), a)) in qs.iter().enumerate() {
                let k = single.len();
                for i in 0..k {
                    w[s * width + i] = rows[s].0[i];
                }
                let c = ActionChoices::new(
                    (0..k).map(|i| ActionId(i as u8)).collect(),
                    (0..k).map(|i| Encoding::Index(s * width + i)).collect(),
                ).unwrap();
                steps.push((c, *a));
            }
            q.set_weights(0.0, w).unwrap();
            let total = value_regret(steps.iter().map(|(c, a)| (c, *a)), &q).unwrap();
            prop_assert!(total >= 0.0);
            let cut = split.min(steps.len());
            let left = value_regret(steps[..cut].iter().map(|(c, a)| (c, *a)), &q).unwrap();
            let right = value_regret(steps[cut..].iter().map(|(c, a)| (c, *a)), &q).unwrap();
            prop_assert!((left + right - total).abs() < 1e-9);
        }

        #[test]
        fn convergence_monotone_in_eps(ds in prop::collection::vec(0f64..1e-3, 1..40), e1 in 1e-5f64..1e-3, extra in 0f64..1e-3) {
            let mut a = ConvergenceMonitor::new(e1, 5).unwrap();
            let mut b = ConvergenceMonitor::new(e1 + extra, 5).unwrap();
            for d in ds {
                let ra = a.convergence_reached(d);
                let rb = b.convergence_reached(d);
                prop_assert!(!ra || rb);
            }
        }
    }
}
