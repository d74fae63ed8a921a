//! Result tables: learning curves (CSV), experiment summary (JSON) and the
//! teacher table (CSV).

use std::fs::{self, File};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::experiment::Summary;
use super::session::{SessionLog, TeacherStats};
use crate::{Error, Result};

pub const CURVES_FILE: &str = "curves.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TEACHERS_FILE: &str = "teachers.csv";

const CURVE_HEADER: [&str; 7] = ["method", "trial", "episode", "score", "advised_count", "b_t", "eval_score"];
const TEACHER_HEADER: [&str; 6] = ["name", "mean", "sd", "cv", "td_error_pct", "student_mean_score"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub method: String,
    pub trial: u32,
    pub episode: u64,
    pub score: f64,
    pub advised_count: u32,
    pub b_t: u32,
    pub eval_score: Option<f64>,
}

pub fn curve_rows(logs: &[SessionLog]) -> Vec<CurveRow> {
    logs.iter()
        .flat_map(|log| {
            log.episodes.iter().map(move |e| CurveRow {
                method: log.method.clone(),
                trial: log.trial,
                episode: e.episode,
                score: e.score,
                advised_count: e.advised,
                b_t: e.budget_left,
                eval_score: e.eval_score,
            })
        })
        .collect()
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<File>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(create(path)?);
    w.write_record(header)?;
    Ok(w)
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_curves(logs: &[SessionLog], path: &Path) -> Result<()> {
    let mut w = csv_writer(path, &CURVE_HEADER)?;
    for row in curve_rows(logs) {
        w.serialize(row)?;
    }
    finish(w, path)
}

pub fn read_curves(path: &Path) -> Result<Vec<CurveRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let rows = r.deserialize().collect::<std::result::Result<Vec<CurveRow>, _>>()?;
    Ok(rows)
}

pub fn write_teachers(stats: &[TeacherStats], path: &Path) -> Result<()> {
    let mut w = csv_writer(path, &TEACHER_HEADER)?;
    for s in stats {
        w.serialize((&s.name, s.mean, s.sd, s.cv, s.td_error_pct, s.student_mean_score))?;
    }
    finish(w, path)
}

pub fn read_teachers(path: &Path) -> Result<Vec<TeacherStats>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let mut out = Vec::new();
    for row in r.deserialize() {
        let (name, mean, sd, cv, td_error_pct, student_mean_score): (String, f64, f64, Option<f64>, Option<f64>, Option<f64>) = row?;
        out.push(TeacherStats { name, mean, sd, cv, td_error_pct, td_excluded: 0, student_mean_score });
    }
    Ok(out)
}

pub fn write_summary(summary: &Summary, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(summary)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Write `curves.csv`, `summary.json` and `teachers.csv` into `dir`.
pub fn export_results(logs: &[SessionLog], summary: &Summary, teachers: &[TeacherStats], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_curves(logs, &dir.join(CURVES_FILE))?;
    write_summary(summary, &dir.join(SUMMARY_FILE))?;
    write_teachers(teachers, &dir.join(TEACHERS_FILE))
}

fn cell(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"))
}

/// Human-readable table of a summary.
pub fn report(summary: &Summary) -> String {
    let mut out = format!(
        "env {} | seed {} | trials {} | budget {} | status {}\n",
        summary.env, summary.seed, summary.trials, summary.budget, summary.status
    );
    out.push_str(&format!(
        "{:<28} {:>10} {:>21} {:>10} {:>9} {:>9} {:>10}\n",
        "method", "mean", "95% CI", "eval", "advice", "exhaust", "p (adj)"
    ));
    for m in &summary.methods {
        let ci = m.ci95.map_or_else(|| "-".to_string(), |c| format!("[{:.2}, {:.2}]", c.lower, c.upper));
        let p = m.versus_baseline.as_ref().map(|c| c.p_adjusted);
        out.push_str(&format!(
            "{:<28} {:>10.2} {:>21} {:>10} {:>9.1} {:>9} {:>10}\n",
            m.method,
            m.mean_score,
            ci,
            cell(m.mean_eval_score),
            m.mean_advice,
            cell(m.mean_exhaustion_episode),
            p.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
        ));
    }
    for t in &summary.q_teaching_training {
        out.push_str(&format!(
            "{}: {} training sessions, mean {:.2} / max {} observed episodes of {}\n",
            t.method, t.sessions, t.mean_observed_episodes, t.max_observed_episodes, t.full_session_episodes
        ));
    }
    for w in &summary.warnings {
        out.push_str(&format!("warning: {w}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::session::EpisodeRecord;

    fn log(method: &str, trial: u32, scores: &[f64]) -> SessionLog {
        SessionLog {
            method: method.into(),
            trial,
            budget: 3,
            episodes: scores
                .iter()
                .enumerate()
                .map(|(i, &s)| EpisodeRecord {
                    episode: i as u64,
                    score: s,
                    steps: 4,
                    advised: u32::from(i == 0),
                    budget_left: 2,
                    eval_score: (i % 2 == 1).then_some(s / 3.0),
                })
                .collect(),
            steps: Vec::new(),
            exhaustion_episode: None,
            termination_episode: 2,
            observed_episodes: 2,
            teacher_return: 0.0,
        }
    }

    #[test]
    fn empty_logs_give_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        write_curves(&[], &p).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), CURVE_HEADER.join(",") + "\n");
        assert!(read_curves(&p).unwrap().is_empty());
    }

    #[test]
    fn curves_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        let logs = vec![log("a", 0, &[1.5, -2.0 / 3.0, 1e-17]), log("b", 1, &[0.1, 0.2])];
        write_curves(&logs, &p).unwrap();
        assert_eq!(read_curves(&p).unwrap(), curve_rows(&logs));
    }

    #[test]
    fn teachers_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let t = TeacherStats {
            name: "q_learning_gamma_0.999".into(),
            mean: 2608.04,
            sd: 730.25,
            cv: crate::metrics::cv_from_moments(2608.04, 730.25).ok(),
            td_error_pct: None,
            td_excluded: 0,
            student_mean_score: Some(12.5),
        };
        write_teachers(std::slice::from_ref(&t), &p).unwrap();
        let back = read_teachers(&p).unwrap();
        assert_eq!(back, vec![t]);
        assert!((back[0].cv.unwrap() - 0.28).abs() <= 0.005);
    }

    #[test]
    fn unwritable_destination_is_io_error() {
        let err = write_curves(&[], Path::new("/nonexistent-dir/x/curves.csv")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert_eq!(err.exit_code(), 4);
    }
}
