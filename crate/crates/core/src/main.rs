use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use teachlab::advising::{TeacherMetadata, TeachingPolicyKind, TEACHER_SCHEMA_VERSION};
use teachlab::env::MazeEnv;
use teachlab::harness::{
    self, export_results, prepare_q_teachers, prepare_teacher, read_summary, report, run_experiment, run_session,
    teacher_weights_path, write_curves, write_teachers, ExperimentConfig, SessionSetup, SUMMARY_FILE, TEACHERS_FILE,
};
use teachlab::{Error, RandomStream, Result};

#[derive(Parser)]
#[command(name = "teachlab", version, about = "Budgeted action advising experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate the acting teacher(s), writing weights and teachers.csv.
    Pretrain(Common),
    /// Run a single teacher-student session and write its log.
    Teach(Common),
    /// Run all methods over all trials and write curves.csv, summary.json, teachers.csv.
    Experiment(Common),
    /// Print the summary of a finished experiment.
    Report {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment config; defaults to the preset named by --env.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u32>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    parallel: Option<usize>,
    /// Preset name (gridworld-10, mini-pacman) or maze file when used with --config.
    #[arg(long)]
    env: Option<String>,
    /// Restrict to one teaching policy (early, every_4, importance, mistake_correcting, q_teaching_off, q_teaching_on).
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    budget: Option<u32>,
    #[arg(long)]
    threshold: Option<f64>,
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match (&c.config, &c.env) {
        (Some(path), env) => {
            let mut cfg = ExperimentConfig::load(path)?;
            if let Some(env) = env {
                cfg.env = env.clone();
            }
            cfg
        }
        (None, env) => ExperimentConfig::preset(env.as_deref().unwrap_or("gridworld-10"))?,
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(t) = c.trials {
        cfg.trials = t;
    }
    if let Some(p) = c.parallel {
        cfg.parallel = p;
    }
    if let Some(b) = c.budget {
        cfg.budget = b;
    }
    if let Some(name) = &c.policy {
        cfg.policies = vec![TeachingPolicyKind::parse(name, c.threshold, None)?];
    } else if let Some(t) = c.threshold {
        for p in &mut cfg.policies {
            match p {
                TeachingPolicyKind::Importance { threshold } | TeachingPolicyKind::MistakeCorrecting { threshold } => {
                    *threshold = t
                }
                _ => {}
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn pretrain(c: &Common) -> Result<()> {
    let cfg = load_config(c)?;
    let trials = c.trials.unwrap_or(0);
    let table = harness::pretrain_all(&cfg, &c.out, trials)?;
    for t in &table {
        println!(
            "{:<28} mean {:>10.2}  sd {:>9.2}  cv {}",
            t.name,
            t.mean,
            t.sd,
            t.cv.map_or_else(|| "-".into(), |v| format!("{v:.3}"))
        );
    }
    println!("wrote {}", c.out.join(TEACHERS_FILE).display());
    Ok(())
}

fn teach(c: &Common) -> Result<()> {
    let mut cfg = load_config(c)?;
    cfg.log_steps = true;
    let policy = *cfg
        .policies
        .first()
        .ok_or_else(|| Error::Config("teach needs a policy".into()))?;
    cfg.policies = vec![policy];
    let env = MazeEnv::named(&cfg.env)?;
    let master = RandomStream::new(cfg.seed);
    let (sigma, stats) = prepare_teacher(&cfg, &env, &master)?;
    let mut q_teachers = prepare_q_teachers(&cfg, &env, &sigma, &master)?;
    create_dir(&c.out)?;
    let mut qt = None;
    if let Some((name, teacher, _)) = q_teachers.pop() {
        let meta = TeacherMetadata {
            variant: teacher.variant,
            budget: cfg.budget,
            horizon: cfg.horizon,
            schema_version: TEACHER_SCHEMA_VERSION,
        };
        teacher.to_file(meta).save(&c.out.join(format!("q_teacher_{name}.json")))?;
        qt = Some(teacher);
    }
    let setup = SessionSetup::from_config(&cfg, &env, &sigma, policy);
    let log = run_session(&setup, qt.as_mut(), &policy.name(), 0, &master.child(0))?;
    write_curves(std::slice::from_ref(&log), &c.out.join(harness::CURVES_FILE))?;
    let session_path = c.out.join("session.json");
    fs::write(&session_path, serde_json::to_string_pretty(&log)?).map_err(|e| Error::io(&session_path, e))?;
    write_teachers(&[stats], &c.out.join(TEACHERS_FILE))?;
    println!(
        "{}: mean score {:.2}, advice {} of {}, exhaustion episode {}",
        log.method,
        log.mean_score().unwrap_or(f64::NAN),
        log.advised_total(),
        log.budget,
        log.exhaustion_episode.map_or_else(|| "-".into(), |e| e.to_string())
    );
    Ok(())
}

fn experiment(c: &Common) -> Result<()> {
    let cfg = load_config(c)?;
    let out = run_experiment(&cfg)?;
    export_results(&out.logs, &out.summary, std::slice::from_ref(&out.summary.teacher), &c.out)?;
    out.teacher.q.save(&teacher_weights_path(&c.out, &cfg.teacher.name))?;
    for w in &out.summary.warnings {
        eprintln!("warning: {w}");
    }
    print!("{}", report(&out.summary));
    match out.summary.error {
        // partial logs are already on disk
        Some(e) => Err(Error::Divergence(e)),
        None => Ok(()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Pretrain(c) => pretrain(&c),
        Command::Teach(c) => teach(&c),
        Command::Experiment(c) => experiment(&c),
        Command::Report { out } => {
            let summary = read_summary(&out.join(SUMMARY_FILE))?;
            print!("{}", report(&summary));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("teachlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
