//! Q-Teaching: Q-Learning over the teaching task.
//!
//! The teacher chooses between `no_advice` and `advise` from its teaching
//! value function `Q_T`. When it advises, the advice is the greedy action
//! `a*` of the acting value function `Q_Σ`, and the teacher is paid
//! `Q_Σ(s, a*) − Q_Σ(s, â)`, where the baseline `â` is the worst legal
//! action (off-student) or the action the student announced (on-student).
//! Not advising pays zero, so a session can stop as soon as the budget is
//! spent.
//!
//! One step is split in two calls around the student's transition:
//! [`QTeacher::decide`] before the student acts, [`QTeacher::feedback`]
//! after the student moved and, optionally, after `Q_Σ` was refreshed on
//! the observed transition.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Budget, TeacherDecision, TeachingState};
use crate::env::ActionId;
use crate::linear_fa::{argmax, argmin, ActionChoices, LinearQ, WeightFile};
use crate::{Error, RandomStream, Result, Scalar};

pub const TEACHER_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QTeachingVariant {
    OffStudent,
    OnStudent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TeachingAction {
    NoAdvice,
    Advise,
}

impl TeachingAction {
    pub fn index(self) -> usize {
        match self {
            TeachingAction::NoAdvice => 0,
            TeachingAction::Advise => 1,
        }
    }

    fn from_id(id: ActionId) -> Self {
        if id.0 == 1 {
            TeachingAction::Advise
        } else {
            TeachingAction::NoAdvice
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QTeachingParams<S> {
    pub alpha: S,
    pub gamma: S,
    pub lambda: S,
    pub epsilon: S,
    /// Multiplier applied to ε after every teacher step.
    pub epsilon_decay: S,
    pub epsilon_floor: S,
}

impl<S: Scalar> Default for QTeachingParams<S> {
    fn default() -> Self {
        Self {
            alpha: S::of(0.002),
            gamma: S::of(0.9),
            lambda: S::of(0.9),
            epsilon: S::of(0.5),
            epsilon_decay: S::of(0.999),
            epsilon_floor: S::of(0.01),
        }
    }
}

/// `Q_Σ(s, a*) − Q_Σ(s, â)` when advising, zero otherwise.
pub fn teacher_reward<S: Scalar>(advised: bool, q_star: S, q_hat: S) -> S {
    if advised {
        q_star - q_hat
    } else {
        S::zero()
    }
}

#[derive(Clone, Debug)]
struct PendingStep<S> {
    choices: ActionChoices<S>,
    taken: usize,
    advised: bool,
    acting: ActionChoices<S>,
    best: usize,
    baseline: usize,
}

#[derive(Clone, Debug)]
pub struct QTeacher<S> {
    pub variant: QTeachingVariant,
    pub params: QTeachingParams<S>,
    pub q_t: LinearQ<S>,
    /// When false the teacher acts greedily on `Q_T` and never updates it.
    pub learning: bool,
    epsilon: S,
    pending: Option<PendingStep<S>>,
}

impl<S: Scalar> QTeacher<S> {
    /// Fresh teacher for teaching states of width `state_width`.
    pub fn new(variant: QTeachingVariant, params: QTeachingParams<S>, state_width: usize) -> Self {
        Self::with_q(variant, params, LinearQ::linear(2 * state_width))
    }

    pub fn with_q(variant: QTeachingVariant, params: QTeachingParams<S>, q_t: LinearQ<S>) -> Self {
        Self { variant, epsilon: params.epsilon, params, q_t, learning: true, pending: None }
    }

    pub fn epsilon(&self) -> S {
        self.epsilon
    }

    /// Forget any half-finished step (start of a new session).
    pub fn begin_session(&mut self) {
        self.pending = None;
        self.q_t.reset_traces();
    }

    fn teaching_choices(state: &TeachingState<S>, budget: &Budget) -> ActionChoices<S> {
        let mut actions = vec![ActionId(0)];
        let mut encodings = vec![state.encode(TeachingAction::NoAdvice)];
        // advising is not available once the budget is spent, even when exploring
        if !budget.is_exhausted() {
            actions.push(ActionId(1));
            encodings.push(state.encode(TeachingAction::Advise));
        }
        ActionChoices::new(actions, encodings).expect("at least the no-advice action")
    }

    /// Choose whether to advise. `acting` holds the student state's legal
    /// actions encoded for `q_sigma`; `intended` is the announced action
    /// (required on-student).
    pub fn decide(
        &mut self,
        q_sigma: &LinearQ<S>,
        acting: &ActionChoices<S>,
        intended: Option<ActionId>,
        state: &TeachingState<S>,
        budget: &Budget,
        rng: &mut RandomStream,
    ) -> Result<TeacherDecision> {
        let values = acting.values(q_sigma)?;
        let best = argmax(&values).ok_or_else(|| Error::Contract("empty action set".into()))?;
        let baseline = match self.variant {
            QTeachingVariant::OffStudent => argmin(&values).expect("non-empty"),
            QTeachingVariant::OnStudent => {
                let a = intended.ok_or_else(|| {
                    Error::Config("on-student Q-Teaching needs the student's announced action".into())
                })?;
                acting
                    .position(a)
                    .ok_or_else(|| Error::Contract(format!("announced action {a} is not legal")))?
            }
        };
        let choices = Self::teaching_choices(state, budget);
        let teach_values = choices.values(&self.q_t)?;
        let greedy = argmax(&teach_values).expect("non-empty");
        let taken = if self.learning && self.epsilon > S::zero() && rng.unit() < self.epsilon.as_f64() {
            rng.below(choices.len())
        } else {
            greedy
        };
        if self.learning {
            if teach_values[taken] < teach_values[greedy] {
                // Watkins: exploratory actions cut the traces
                self.q_t.reset_traces();
            }
            self.epsilon = (self.epsilon * self.params.epsilon_decay).max(self.params.epsilon_floor);
        }
        let advised = TeachingAction::from_id(choices.action(taken)) == TeachingAction::Advise;
        let decision = if advised { TeacherDecision::Advise(acting.action(best)) } else { TeacherDecision::NoAdvice };
        self.pending = Some(PendingStep { choices, taken, advised, acting: acting.clone(), best, baseline });
        Ok(decision)
    }

    /// Teacher reward for the last decision, read from `q_sigma` as it is
    /// now, followed by the Q-Learning update of `Q_T`. `next` is the next
    /// teaching state, or `None` when the session ended.
    pub fn feedback(
        &mut self,
        q_sigma: &LinearQ<S>,
        next: Option<(&TeachingState<S>, &Budget)>,
    ) -> Result<S> {
        let p = self
            .pending
            .take()
            .ok_or_else(|| Error::Contract("feedback without a pending decision".into()))?;
        let q_star = q_sigma.q_value(p.acting.encoding(p.best))?;
        let q_hat = q_sigma.q_value(p.acting.encoding(p.baseline))?;
        let reward = teacher_reward(p.advised, q_star, q_hat);
        if self.learning {
            let boot = match next {
                Some((state, budget)) => self.q_t.max_value(&Self::teaching_choices(state, budget))?,
                None => S::zero(),
            };
            let q = self.q_t.q_value(p.choices.encoding(p.taken))?;
            let td = reward + self.params.gamma * boot - q;
            self.q_t.apply_td_update(
                td,
                self.params.alpha,
                p.choices.encoding(p.taken),
                self.params.gamma * self.params.lambda,
            )?;
        }
        Ok(reward)
    }

    /// Greedy teaching action for a state, without side effects.
    pub fn preferred(&self, state: &TeachingState<S>, budget: &Budget) -> Result<TeachingAction> {
        let choices = Self::teaching_choices(state, budget);
        let idx = self.q_t.greedy_index(&choices)?;
        Ok(TeachingAction::from_id(choices.action(idx)))
    }

    pub fn to_file(&self, metadata: TeacherMetadata) -> TeacherFile {
        TeacherFile { weights: self.q_t.to_file(), metadata }
    }

    pub fn from_file(file: &TeacherFile, params: QTeachingParams<S>) -> Result<Self> {
        if file.metadata.schema_version != TEACHER_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "teacher file schema {} (expected {TEACHER_SCHEMA_VERSION})",
                file.metadata.schema_version
            )));
        }
        let q = LinearQ::from_file(&file.weights)?;
        Ok(Self::with_q(file.metadata.variant, params, q))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeacherMetadata {
    pub variant: QTeachingVariant,
    pub budget: u32,
    pub horizon: u64,
    pub schema_version: u32,
}

/// Teaching value function on disk: the weight document plus metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeacherFile {
    #[serde(flatten)]
    pub weights: WeightFile,
    pub metadata: TeacherMetadata,
}

impl TeacherFile {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
