//! Experiment configuration (JSON) and the bundled presets.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::advising::{QTeachingParams, QTeachingVariant, TeachingPolicyKind};
use crate::env::FeatureMode;
use crate::learners::{AgentKind, AlphaSchedule};
use crate::linear_fa::{LearningParams, TraceKind};
use crate::{Error, Result};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// The acting agent whose value function provides advice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeacherSpec {
    /// Label used in file names and the teacher table.
    pub name: String,
    pub kind: AgentKind,
    pub params: LearningParams<f64>,
    pub mode: FeatureMode,
    #[serde(default)]
    pub schedule: Option<AlphaSchedule<f64>>,
    /// Pretrained weight file; when absent the teacher is trained first.
    #[serde(default)]
    pub weights: Option<PathBuf>,
    pub pretrain_episodes: u64,
    pub evaluation_episodes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudentSpec {
    pub kind: AgentKind,
    pub params: LearningParams<f64>,
    pub mode: FeatureMode,
    pub announces_intention: bool,
    #[serde(default)]
    pub traces: TraceKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Bundled maze name or maze file path.
    pub env: String,
    pub teacher: TeacherSpec,
    /// Extra teachers trained by `pretrain` for the teacher table.
    #[serde(default)]
    pub teacher_grid: Vec<TeacherSpec>,
    pub student: StudentSpec,
    /// Methods compared against the always-present no-advice baseline.
    pub policies: Vec<TeachingPolicyKind>,
    pub budget: u32,
    pub trials: u32,
    /// Student episodes per session.
    pub episodes: u64,
    /// Evaluate every this many student episodes (0 disables).
    pub eval_every: u64,
    pub eval_episodes: u64,
    /// Convergence-horizon episode used by the teaching state and session termination.
    pub horizon: u64,
    #[serde(default)]
    pub q_teaching: QTeachingParams<f64>,
    pub teaching_sessions: u64,
    /// Keep refreshing the acting value function during sessions.
    #[serde(default)]
    pub q_sigma_learning: bool,
    pub seed: u64,
    /// Worker threads for trials (1 runs serially).
    #[serde(default = "one")]
    pub parallel: usize,
    /// Keep per-step records in session logs.
    #[serde(default)]
    pub log_steps: bool,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "gridworld-10" => Ok(Self::gridworld()),
            "mini-pacman" => Ok(Self::mini_pacman()),
            other => Err(Error::Config(format!("unknown preset {other:?}"))),
        }
    }

    fn gridworld() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            env: "gridworld-10".into(),
            teacher: TeacherSpec {
                name: "q_learning".into(),
                kind: AgentKind::QLearning,
                params: LearningParams::new(0.2, 0.95, 0.2, 0.0, 0.0),
                mode: FeatureMode::Tabular,
                schedule: None,
                weights: None,
                pretrain_episodes: 3000,
                evaluation_episodes: 10,
            },
            teacher_grid: Vec::new(),
            student: StudentSpec {
                kind: AgentKind::Sarsa,
                params: LearningParams::new(0.1, 0.95, 0.05, 0.9, 0.0),
                mode: FeatureMode::Tabular,
                announces_intention: true,
                traces: TraceKind::Accumulating,
            },
            policies: vec![
                TeachingPolicyKind::Early,
                TeachingPolicyKind::EveryK { k: 4 },
                TeachingPolicyKind::Importance { threshold: 20.0 },
                TeachingPolicyKind::MistakeCorrecting { threshold: 20.0 },
                TeachingPolicyKind::QTeaching { variant: QTeachingVariant::OffStudent },
                TeachingPolicyKind::QTeaching { variant: QTeachingVariant::OnStudent },
            ],
            budget: 1000,
            trials: 30,
            episodes: 200,
            eval_every: 10,
            eval_episodes: 1,
            horizon: 100,
            q_teaching: QTeachingParams::default(),
            teaching_sessions: 500,
            q_sigma_learning: false,
            seed: 7,
            parallel: 1,
            log_steps: false,
        }
    }

    fn mini_pacman() -> Self {
        let teacher = |name: &str, kind, gamma| TeacherSpec {
            name: name.into(),
            kind,
            params: LearningParams::new(0.001, gamma, 0.05, 0.0, 0.0001),
            mode: FeatureMode::High,
            schedule: None,
            weights: None,
            pretrain_episodes: 1000,
            evaluation_episodes: 500,
        };
        let grid = [0.05, 0.2, 0.6, 0.9, 0.999]
            .iter()
            .map(|&g| teacher(&format!("q_learning_gamma_{g}"), AgentKind::QLearning, g))
            .chain([teacher("r_learning", AgentKind::RLearning, 1.0)])
            .collect();
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            env: "mini-pacman".into(),
            teacher: teacher("q_learning_gamma_0.9", AgentKind::QLearning, 0.9),
            teacher_grid: grid,
            student: StudentSpec {
                kind: AgentKind::Sarsa,
                params: LearningParams::new(0.001, 0.9, 0.05, 0.9, 0.0),
                mode: FeatureMode::High,
                announces_intention: true,
                traces: TraceKind::Accumulating,
            },
            policies: vec![
                TeachingPolicyKind::Early,
                TeachingPolicyKind::EveryK { k: 4 },
                TeachingPolicyKind::Importance { threshold: 200.0 },
                TeachingPolicyKind::MistakeCorrecting { threshold: 200.0 },
                TeachingPolicyKind::QTeaching { variant: QTeachingVariant::OffStudent },
                TeachingPolicyKind::QTeaching { variant: QTeachingVariant::OnStudent },
            ],
            budget: 1000,
            trials: 30,
            episodes: 1000,
            eval_every: 10,
            eval_episodes: 30,
            horizon: 500,
            q_teaching: QTeachingParams::default(),
            teaching_sessions: 500,
            q_sigma_learning: false,
            seed: 7,
            parallel: 1,
            log_steps: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Compared methods, no-advice first.
    pub fn methods(&self) -> Vec<TeachingPolicyKind> {
        let mut out = vec![TeachingPolicyKind::NoAdvice];
        out.extend(self.policies.iter().copied().filter(|p| *p != TeachingPolicyKind::NoAdvice));
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "config schema {} (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.trials < 1 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.parallel < 1 {
            return Err(Error::Config("parallel must be >= 1".into()));
        }
        if self.eval_every > 0 && self.eval_episodes == 0 {
            return Err(Error::Config("eval_episodes must be >= 1 when evaluation is enabled".into()));
        }
        for t in std::iter::once(&self.teacher).chain(&self.teacher_grid) {
            t.params.validate()?;
            if let Some(w) = &t.weights {
                if !w.exists() {
                    return Err(Error::Config(format!("teacher weights {} not found", w.display())));
                }
            }
        }
        self.student.params.validate()?;
        for p in &self.policies {
            p.validate(self.student.announces_intention)?;
        }
        let q = &self.q_teaching;
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !(q.alpha >= 0.0 && unit(q.gamma) && unit(q.lambda) && unit(q.epsilon) && unit(q.epsilon_decay) && unit(q.epsilon_floor)) {
            return Err(Error::Config("q_teaching parameters out of range".into()));
        }
        Ok(())
    }
}
