//! The teaching layer: advice budget, teaching-state construction, the
//! heuristic advice-distribution policies, and Q-Teaching.
//!
//! Decision functions never touch the budget; the caller spends one unit
//! for every [`TeacherDecision::Advise`] it acts on. Every decision function
//! refuses to advise when the budget is exhausted.

mod q_teaching;

use serde::{Deserialize, Serialize};

use crate::env::ActionId;
use crate::linear_fa::{argmax, argmin, Encoding};
use crate::{Error, Result, Scalar};

pub use q_teaching::{
    teacher_reward, QTeacher, QTeachingParams, QTeachingVariant, TeacherFile, TeacherMetadata, TeachingAction,
    TEACHER_SCHEMA_VERSION,
};

/// Remaining advice. `remaining ≤ initial`, decreasing by one per advice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    initial: u32,
    remaining: u32,
}

impl Budget {
    pub fn new(initial: u32) -> Self {
        Self { initial, remaining: initial }
    }

    pub fn initial(&self) -> u32 {
        self.initial
    }

    pub fn remaining(&self) -> u32 {
        self.remaining
    }

    pub fn spent(&self) -> u32 {
        self.initial - self.remaining
    }

    pub fn is_exhausted(&self) -> bool {
        self.remaining == 0
    }

    /// Use one piece of advice.
    pub fn spend(&mut self) -> Result<()> {
        if self.remaining == 0 {
            return Err(Error::Contract("advice budget exhausted".into()));
        }
        self.remaining -= 1;
        Ok(())
    }

    /// `remaining / initial`, or 0 for a zero budget.
    pub fn fraction_left<S: Scalar>(&self) -> S {
        if self.initial == 0 {
            S::zero()
        } else {
            S::of(f64::from(self.remaining) / f64::from(self.initial))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TeacherDecision {
    Advise(ActionId),
    NoAdvice,
}

impl TeacherDecision {
    pub fn is_advice(self) -> bool {
        matches!(self, TeacherDecision::Advise(_))
    }

    pub fn advised_action(self) -> Option<ActionId> {
        match self {
            TeacherDecision::Advise(a) => Some(a),
            TeacherDecision::NoAdvice => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum TeachingPolicyKind {
    NoAdvice,
    Early,
    EveryK { k: u32 },
    Importance { threshold: f64 },
    MistakeCorrecting { threshold: f64 },
    QTeaching { variant: QTeachingVariant },
}

impl TeachingPolicyKind {
    /// Policies that need the student to announce its intended action.
    pub fn needs_intention(&self) -> bool {
        matches!(
            self,
            TeachingPolicyKind::MistakeCorrecting { .. }
                | TeachingPolicyKind::QTeaching { variant: QTeachingVariant::OnStudent }
        )
    }

    pub fn validate(&self, announces_intention: bool) -> Result<()> {
        if let TeachingPolicyKind::EveryK { k } = self {
            if *k < 1 {
                return Err(Error::Config("every_k needs k >= 1".into()));
            }
        }
        if self.needs_intention() && !announces_intention {
            return Err(Error::Config(format!("{} needs a student that announces its intended action", self.name())));
        }
        Ok(())
    }

    /// Short stable name used in output files.
    pub fn name(&self) -> String {
        match self {
            TeachingPolicyKind::NoAdvice => "no_advice".into(),
            TeachingPolicyKind::Early => "early".into(),
            TeachingPolicyKind::EveryK { k } => format!("every_{k}"),
            TeachingPolicyKind::Importance { threshold } => format!("importance_t{threshold}"),
            TeachingPolicyKind::MistakeCorrecting { threshold } => format!("mistake_correcting_t{threshold}"),
            TeachingPolicyKind::QTeaching { variant: QTeachingVariant::OffStudent } => "q_teaching_off".into(),
            TeachingPolicyKind::QTeaching { variant: QTeachingVariant::OnStudent } => "q_teaching_on".into(),
        }
    }

    /// Parse a CLI policy name; `threshold` and `k` fill in parameters.
    pub fn parse(name: &str, threshold: Option<f64>, k: Option<u32>) -> Result<Self> {
        let t = || threshold.ok_or_else(|| Error::Config(format!("{name} needs --threshold")));
        Ok(match name {
            "no_advice" => TeachingPolicyKind::NoAdvice,
            "early" => TeachingPolicyKind::Early,
            "every_k" => TeachingPolicyKind::EveryK { k: k.unwrap_or(4) },
            "importance" => TeachingPolicyKind::Importance { threshold: t()? },
            "mistake_correcting" => TeachingPolicyKind::MistakeCorrecting { threshold: t()? },
            "q_teaching_off" | "q_teaching" => TeachingPolicyKind::QTeaching { variant: QTeachingVariant::OffStudent },
            "q_teaching_on" => TeachingPolicyKind::QTeaching { variant: QTeachingVariant::OnStudent },
            other => {
                if let Some(k) = other.strip_prefix("every_").and_then(|k| k.parse().ok()) {
                    TeachingPolicyKind::EveryK { k }
                } else {
                    return Err(Error::Config(format!("unknown policy {other:?}")));
                }
            }
        })
    }
}

fn greedy<S: Scalar>(q_values: &[S], actions: &[ActionId]) -> Result<ActionId> {
    if q_values.len() != actions.len() {
        return Err(Error::Contract("q values and actions differ in length".into()));
    }
    argmax(q_values).map(|i| actions[i]).ok_or_else(|| Error::Contract("empty action set".into()))
}

/// Advise the greedy action whenever budget remains.
pub fn early_decide(budget: &Budget, greedy_action: ActionId) -> TeacherDecision {
    if budget.is_exhausted() {
        TeacherDecision::NoAdvice
    } else {
        TeacherDecision::Advise(greedy_action)
    }
}

/// Advise on every `k`-th student step (step 0 included).
pub fn every_k_decide(step_index: u64, k: u32, budget: &Budget, greedy_action: ActionId) -> Result<TeacherDecision> {
    if k < 1 {
        return Err(Error::Config("every_k needs k >= 1".into()));
    }
    if step_index.is_multiple_of(u64::from(k)) && !budget.is_exhausted() {
        Ok(TeacherDecision::Advise(greedy_action))
    } else {
        Ok(TeacherDecision::NoAdvice)
    }
}

/// `max Q − min Q` over the legal actions.
pub fn importance<S: Scalar>(q_values: &[S]) -> Result<S> {
    match (argmax(q_values), argmin(q_values)) {
        (Some(hi), Some(lo)) => Ok(q_values[hi] - q_values[lo]),
        _ => Err(Error::Contract("empty action set".into())),
    }
}

/// Advise the greedy action when the state's value gap strictly exceeds `threshold`.
pub fn importance_decide<S: Scalar>(
    q_values: &[S],
    actions: &[ActionId],
    threshold: S,
    budget: &Budget,
) -> Result<TeacherDecision> {
    let a = greedy(q_values, actions)?;
    if importance(q_values)? > threshold && !budget.is_exhausted() {
        Ok(TeacherDecision::Advise(a))
    } else {
        Ok(TeacherDecision::NoAdvice)
    }
}

/// Importance advising that stays silent when the student already intends the greedy action.
pub fn mistake_correcting_decide<S: Scalar>(
    q_values: &[S],
    actions: &[ActionId],
    intended: ActionId,
    threshold: S,
    budget: &Budget,
) -> Result<TeacherDecision> {
    match importance_decide(q_values, actions, threshold, budget)? {
        TeacherDecision::Advise(a) if a != intended => Ok(TeacherDecision::Advise(a)),
        _ => Ok(TeacherDecision::NoAdvice),
    }
}

/// A teaching session ends when the budget runs out or the student reaches
/// its convergence horizon.
pub fn session_termination(budget: &Budget, episode: u64, horizon: u64) -> bool {
    budget.is_exhausted() || episode >= horizon
}

/// What the teacher knows about the student at one step.
#[derive(Clone, Debug, PartialEq)]
pub struct TeacherObservation<S> {
    /// Acting-task features of the student's current state.
    pub acting_features: Vec<S>,
    pub last_reward: S,
    /// Whether the current state resulted from advice.
    pub advised_last: bool,
    pub intended: Option<ActionId>,
}

/// Teaching-task state: advice flag, budget left, student progress,
/// one-hot intended action (zeros when unknown), then acting features.
/// Every component lies in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TeachingState<S> {
    components: Vec<S>,
}

impl<S: Scalar> TeachingState<S> {
    pub fn components(&self) -> &[S] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn advice_flag(&self) -> S {
        self.components[0]
    }

    pub fn budget_fraction(&self) -> S {
        self.components[1]
    }

    pub fn progress(&self) -> S {
        self.components[2]
    }

    /// Intended-action slots.
    pub fn intention(&self, action_count: usize) -> &[S] {
        &self.components[3..3 + action_count]
    }

    /// Component count for a given acting feature length.
    pub fn width(action_count: usize, acting_len: usize) -> usize {
        3 + action_count + acting_len
    }

    /// Action-specific encoding for Q_T: the state fills the block of the
    /// teaching action, the other block is zero.
    pub fn encode(&self, action: TeachingAction) -> Encoding<S> {
        let d = self.components.len();
        let mut v = vec![S::zero(); 2 * d];
        let offset = action.index() * d;
        v[offset..offset + d].copy_from_slice(&self.components);
        Encoding::Dense(crate::linear_fa::FeatureVector::new(v).expect("teaching state components lie in [0, 1]"))
    }
}

/// Assemble the teaching state. `episode` is clamped to `horizon`.
pub fn build_teaching_state<S: Scalar>(
    obs: &TeacherObservation<S>,
    budget: &Budget,
    episode: u64,
    horizon: u64,
    action_count: usize,
) -> Result<TeachingState<S>> {
    let mut c = Vec::with_capacity(TeachingState::<S>::width(action_count, obs.acting_features.len()));
    c.push(if obs.advised_last { S::one() } else { S::zero() });
    c.push(budget.fraction_left());
    c.push(if horizon == 0 { S::one() } else { S::of(episode.min(horizon) as f64 / horizon as f64) });
    let mut slots = vec![S::zero(); action_count];
    if let Some(a) = obs.intended {
        *slots
            .get_mut(a.index())
            .ok_or_else(|| Error::Contract(format!("intended action {a} out of range")))? = S::one();
    }
    c.extend(slots);
    for (i, &x) in obs.acting_features.iter().enumerate() {
        if !(x.is_finite() && x >= S::zero() && x <= S::one()) {
            return Err(Error::Contract(format!("acting feature {i} = {x} outside [0, 1]")));
        }
        c.push(x);
    }
    Ok(TeachingState { components: c })
}

/// Acting features used inside the teaching state: the dense features of
/// the greedy pair, or a one-hot state indicator for tabular encodings.
pub fn acting_features<S: Scalar>(greedy_encoding: &Encoding<S>, table: Option<(usize, usize)>) -> Vec<S> {
    match (greedy_encoding, table) {
        (Encoding::Dense(f), _) => f.as_slice().to_vec(),
        (Encoding::Index(i), Some((states, actions))) => {
            let mut v = vec![S::zero(); states];
            v[i / actions] = S::one();
            v
        }
        (Encoding::Index(_), None) => Vec::new(),
    }
}
