//! Multi-trial experiments: teacher preparation, parallel sessions and
//! the across-trial summary.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, CONFIG_SCHEMA_VERSION};
use super::session::{pretrain_teacher, run_session, train_q_teacher, SessionLog, SessionSetup, TeacherStats, TrainingRecord};
use crate::advising::{QTeacher, TeachingPolicyKind};
use crate::env::MazeEnv;
use crate::learners::Learner;
use crate::metrics::{bonferroni, ci95, moments, welch_t_test, ConfidenceInterval};
use crate::{Error, RandomStream, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub t: f64,
    pub df: f64,
    /// One-sided p value for "method beats the baseline".
    pub p_one_sided: f64,
    pub p_adjusted: f64,
    pub significant: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub trials: u32,
    /// Mean over trials of the per-trial mean student episode score.
    pub mean_score: f64,
    pub sd_score: f64,
    pub ci95: Option<ConfidenceInterval>,
    pub mean_eval_score: Option<f64>,
    pub mean_advice: f64,
    /// Average advice-exhaustion episode over trials that exhausted the budget.
    pub mean_exhaustion_episode: Option<f64>,
    pub exhausted_trials: u32,
    pub mean_observed_episodes: f64,
    pub versus_baseline: Option<Comparison>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub method: String,
    pub sessions: u64,
    pub mean_observed_episodes: f64,
    pub max_observed_episodes: u64,
    /// Episodes a full-session method observes.
    pub full_session_episodes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub env: String,
    pub seed: u64,
    pub trials: u32,
    pub budget: u32,
    pub episodes: u64,
    pub baseline: String,
    pub status: String,
    pub error: Option<String>,
    pub teacher: TeacherStats,
    pub methods: Vec<MethodSummary>,
    pub q_teaching_training: Vec<TrainingSummary>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub summary: Summary,
    pub logs: Vec<SessionLog>,
    pub teacher: Learner<f64>,
    pub q_teachers: Vec<(String, QTeacher<f64>, Vec<TrainingRecord>)>,
}

/// Acting teacher for a config: pretrained from `master.component("pretrain")`.
pub fn prepare_teacher(cfg: &ExperimentConfig, env: &MazeEnv, master: &RandomStream) -> Result<(Learner<f64>, TeacherStats)> {
    pretrain_teacher(env, &cfg.teacher, &master.component("pretrain"))
}

/// Train one Q-Teaching teacher per Q-Teaching method in the config.
pub fn prepare_q_teachers(
    cfg: &ExperimentConfig,
    env: &MazeEnv,
    sigma: &Learner<f64>,
    master: &RandomStream,
) -> Result<Vec<(String, QTeacher<f64>, Vec<TrainingRecord>)>> {
    let mut out = Vec::new();
    for m in cfg.methods() {
        if let TeachingPolicyKind::QTeaching { variant } = m {
            let setup = SessionSetup::from_config(cfg, env, sigma, m);
            let seed = master.component("q_teaching").component(&m.name());
            let (qt, records) = train_q_teacher(&setup, variant, cfg.q_teaching, cfg.teaching_sessions, &seed)?;
            out.push((m.name(), qt, records));
        }
    }
    Ok(out)
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Run every (method, trial) session. Trial `i` of every method uses the
/// seed `master.child(i)`, so methods see the same student randomness.
pub fn run_trials(
    cfg: &ExperimentConfig,
    env: &MazeEnv,
    sigma: &Learner<f64>,
    q_teachers: &[(String, QTeacher<f64>, Vec<TrainingRecord>)],
    master: &RandomStream,
) -> Result<Vec<Result<SessionLog>>> {
    let jobs: Vec<(TeachingPolicyKind, u32)> =
        cfg.methods().into_iter().flat_map(|m| (0..cfg.trials).map(move |t| (m, t))).collect();
    let run = |&(m, trial): &(TeachingPolicyKind, u32)| -> Result<SessionLog> {
        let setup = SessionSetup::from_config(cfg, env, sigma, m);
        let name = m.name();
        let mut qt = q_teachers.iter().find(|(n, _, _)| *n == name).map(|(_, q, _)| q.clone());
        run_session(&setup, qt.as_mut(), &name, trial, &master.child(u64::from(trial)))
    };
    if cfg.parallel <= 1 {
        return Ok(jobs.iter().map(run).collect());
    }
    Ok(pool(cfg.parallel)?.install(|| jobs.par_iter().map(run).collect()))
}

fn training_summary(name: &str, records: &[TrainingRecord], full: u64) -> TrainingSummary {
    let n = records.len().max(1) as f64;
    TrainingSummary {
        method: name.to_string(),
        sessions: records.len() as u64,
        mean_observed_episodes: records.iter().map(|r| r.observed_episodes as f64).sum::<f64>() / n,
        max_observed_episodes: records.iter().map(|r| r.observed_episodes).max().unwrap_or(0),
        full_session_episodes: full,
    }
}

/// Aggregate finished logs (in method, trial order) into a summary.
pub fn summarize(cfg: &ExperimentConfig, teacher: TeacherStats, logs: &[SessionLog], training: &[TrainingSummary]) -> Summary {
    let methods = cfg.methods();
    let mut warnings = Vec::new();
    if cfg.trials < 2 {
        warnings.push("fewer than two trials: confidence intervals and tests are undefined".to_string());
    }
    let per_method: Vec<(String, Vec<&SessionLog>)> = methods
        .iter()
        .map(|m| {
            let name = m.name();
            let group = logs.iter().filter(|l| l.method == name).collect();
            (name, group)
        })
        .collect();
    let scores = |group: &[&SessionLog]| -> Vec<f64> { group.iter().filter_map(|l| l.mean_score()).collect() };
    let baseline = scores(&per_method[0].1);
    let comparisons = methods.len().saturating_sub(1);
    let summaries = per_method
        .iter()
        .enumerate()
        .map(|(i, (name, group))| {
            let s = scores(group);
            let (mean_score, sd_score) = moments(&s).unwrap_or((f64::NAN, f64::NAN));
            let evals: Vec<f64> = group.iter().filter_map(|l| l.mean_eval_score()).collect();
            let exhaustion: Vec<f64> = group.iter().filter_map(|l| l.exhaustion_episode.map(|e| e as f64)).collect();
            let n = group.len().max(1) as f64;
            let versus_baseline = if i == 0 {
                None
            } else {
                welch_t_test(&s, &baseline).ok().map(|w| {
                    let p_adjusted = bonferroni(w.p_greater, comparisons);
                    Comparison { t: w.t, df: w.df, p_one_sided: w.p_greater, p_adjusted, significant: p_adjusted < 0.05 }
                })
            };
            MethodSummary {
                method: name.clone(),
                trials: group.len() as u32,
                mean_score,
                sd_score,
                ci95: ci95(&s),
                mean_eval_score: moments(&evals).ok().map(|(m, _)| m),
                mean_advice: group.iter().map(|l| f64::from(l.advised_total())).sum::<f64>() / n,
                mean_exhaustion_episode: moments(&exhaustion).ok().map(|(m, _)| m),
                exhausted_trials: exhaustion.len() as u32,
                mean_observed_episodes: group.iter().map(|l| l.observed_episodes as f64).sum::<f64>() / n,
                versus_baseline,
            }
        })
        .collect();
    Summary {
        schema_version: CONFIG_SCHEMA_VERSION,
        env: cfg.env.clone(),
        seed: cfg.seed,
        trials: cfg.trials,
        budget: cfg.budget,
        episodes: cfg.episodes,
        baseline: TeachingPolicyKind::NoAdvice.name(),
        status: "ok".into(),
        error: None,
        teacher,
        methods: summaries,
        q_teaching_training: training.to_vec(),
        warnings,
    }
}

/// Full experiment. When a trial fails the returned output is marked
/// failed and holds the logs of the trials that finished.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let env = MazeEnv::named(&cfg.env)?;
    let master = RandomStream::new(cfg.seed);
    let (teacher, stats) = prepare_teacher(cfg, &env, &master)?;
    let q_teachers = prepare_q_teachers(cfg, &env, &teacher, &master)?;
    let results = run_trials(cfg, &env, &teacher, &q_teachers, &master)?;
    let mut logs = Vec::with_capacity(results.len());
    let mut failure = None;
    for r in results {
        match r {
            Ok(log) => logs.push(log),
            Err(e) if failure.is_none() => failure = Some(e),
            Err(_) => {}
        }
    }
    let training: Vec<TrainingSummary> =
        q_teachers.iter().map(|(n, _, r)| training_summary(n, r, cfg.episodes)).collect();
    let mut summary = summarize(cfg, stats, &logs, &training);
    if let Some(e) = &failure {
        summary.status = "failed".into();
        summary.error = Some(e.to_string());
    }
    Ok(ExperimentOutput { summary, logs, teacher, q_teachers })
}
