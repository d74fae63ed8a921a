//! Experiment orchestration: configuration, teacher pre-training,
//! teacher-student sessions, multi-trial experiments and result export.

mod config;
mod experiment;
mod export;
mod session;

use std::fs;
use std::path::{Path, PathBuf};

pub use config::{ExperimentConfig, StudentSpec, TeacherSpec, CONFIG_SCHEMA_VERSION};
pub use experiment::{
    prepare_q_teachers, prepare_teacher, run_experiment, run_trials, summarize, Comparison, ExperimentOutput,
    MethodSummary, Summary, TrainingSummary,
};
pub use export::{
    curve_rows, export_results, read_curves, read_summary, read_teachers, report, write_curves, write_summary,
    write_teachers, CurveRow, CURVES_FILE, SUMMARY_FILE, TEACHERS_FILE,
};
pub use session::{
    evaluate_with_td, pretrain_teacher, run_session, train_q_teacher, EpisodeRecord, SessionLog, SessionSetup,
    StepRecord, TeacherStats, TrainingRecord,
};

use crate::advising::TeachingPolicyKind;
use crate::env::MazeEnv;
use crate::{Error, RandomStream, Result};

/// Weight file path for a named teacher inside `dir`.
pub fn teacher_weights_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("teacher_{name}.json"))
}

/// Pretrain the configured teacher (and any teacher grid), persist each
/// weight file and `teachers.csv` into `dir`. With `student_trials > 0`
/// every teacher also advises that many students with the first heuristic
/// policy of the config, filling the student mean score column.
pub fn pretrain_all(cfg: &ExperimentConfig, dir: &Path, student_trials: u32) -> Result<Vec<TeacherStats>> {
    cfg.validate()?;
    let env = MazeEnv::named(&cfg.env)?;
    let master = RandomStream::new(cfg.seed);
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let specs: Vec<&TeacherSpec> =
        if cfg.teacher_grid.is_empty() { vec![&cfg.teacher] } else { cfg.teacher_grid.iter().collect() };
    let policy = cfg
        .policies
        .iter()
        .copied()
        .find(|p| !matches!(p, TeachingPolicyKind::QTeaching { .. } | TeachingPolicyKind::NoAdvice))
        .unwrap_or(TeachingPolicyKind::Early);
    let mut table = Vec::new();
    for spec in specs {
        let (agent, mut stats) = pretrain_teacher(&env, spec, &master.component("pretrain").component(&spec.name))?;
        agent.q.save(&teacher_weights_path(dir, &spec.name))?;
        if student_trials > 0 {
            let setup = SessionSetup::from_config(cfg, &env, &agent, policy);
            let mut total = 0.0;
            for t in 0..student_trials {
                let log = run_session(&setup, None, &policy.name(), t, &master.child(u64::from(t)))?;
                total += log.mean_score().unwrap_or(0.0);
            }
            stats.student_mean_score = Some(total / f64::from(student_trials));
        }
        table.push(stats);
    }
    write_teachers(&table, &dir.join(TEACHERS_FILE))?;
    Ok(table)
}
