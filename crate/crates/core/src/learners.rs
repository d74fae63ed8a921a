//! Students and acting agents: Q-Learning, Sarsa(λ) and average-reward
//! R-Learning over [`LinearQ`], with ε-greedy action selection.
//!
//! R-Learning follows Schwartz's formulation: the action value is the
//! transient reward relative to the running average reward `ρ`, and `ρ`
//! moves only on greedy steps.

use serde::{Deserialize, Serialize};

use crate::env::{ActionId, Environment, FeatureMode};
use crate::linear_fa::{argmax, ActionChoices, LearningParams, LinearQ};
use crate::{Error, RandomStream, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    QLearning,
    Sarsa,
    RLearning,
}

impl AgentKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "q_learning" => Ok(Self::QLearning),
            "sarsa" => Ok(Self::Sarsa),
            "r_learning" => Ok(Self::RLearning),
            other => Err(Error::Config(format!("unknown agent kind {other:?}"))),
        }
    }
}

/// Running estimate of the average reward per step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AvgRewardEstimate<S> {
    pub rho: S,
}

/// A single experienced step. `next == None` means the next state is absorbing.
#[derive(Clone, Copy, Debug)]
pub struct Transition<'a, S> {
    pub state: &'a ActionChoices<S>,
    /// Index of the executed action in `state`.
    pub action: usize,
    pub reward: S,
    pub next: Option<&'a ActionChoices<S>>,
}

/// ε-greedy choice; returns an index into `choices`. With `epsilon = 0` no
/// random number is drawn.
pub fn select_action<S: Scalar>(
    q: &LinearQ<S>,
    choices: &ActionChoices<S>,
    epsilon: S,
    rng: &mut RandomStream,
) -> Result<usize> {
    if epsilon > S::zero() && rng.unit() < epsilon.as_f64() {
        return Ok(rng.below(choices.len()));
    }
    q.greedy_index(choices)
}

fn bootstrap_max<S: Scalar>(q: &LinearQ<S>, next: Option<&ActionChoices<S>>) -> Result<S> {
    next.map_or(Ok(S::zero()), |n| q.max_value(n))
}

/// `r + γ max_a' Q(s', a') − Q(s, a)`, zero bootstrap at absorbing states.
pub fn q_learning_td<S: Scalar>(q: &LinearQ<S>, t: &Transition<'_, S>, gamma: S) -> Result<S> {
    let qsa = q.q_value(t.state.encoding(t.action))?;
    let next = bootstrap_max(q, t.next)?;
    check_td(t.reward + gamma * next - qsa)
}

/// `r + γ Q(s', a') − Q(s, a)`.
pub fn sarsa_td<S: Scalar>(
    q: &LinearQ<S>,
    t: &Transition<'_, S>,
    next_action: usize,
    gamma: S,
) -> Result<S> {
    let qsa = q.q_value(t.state.encoding(t.action))?;
    let next = match t.next {
        Some(n) => q.q_value(n.encoding(next_action))?,
        None => S::zero(),
    };
    check_td(t.reward + gamma * next - qsa)
}

/// `r − ρ + max_a' Q(s', a') − Q(s, a)`.
pub fn r_learning_td<S: Scalar>(
    q: &LinearQ<S>,
    rho: &AvgRewardEstimate<S>,
    t: &Transition<'_, S>,
) -> Result<S> {
    let qsa = q.q_value(t.state.encoding(t.action))?;
    let next = bootstrap_max(q, t.next)?;
    check_td(t.reward - rho.rho + next - qsa)
}

fn check_td<S: Scalar>(td: S) -> Result<S> {
    if td.is_finite() {
        Ok(td)
    } else {
        Err(Error::Divergence(format!("non-finite td error {td}")))
    }
}

pub fn q_learning_step<S: Scalar>(
    q: &mut LinearQ<S>,
    t: &Transition<'_, S>,
    params: &LearningParams<S>,
) -> Result<S> {
    let td = q_learning_td(q, t, params.gamma)?;
    q.apply_td_update(td, params.alpha, t.state.encoding(t.action), params.gamma * params.lambda)?;
    Ok(td)
}

/// Sarsa update bootstrapping on the action actually selected in `s'`.
pub fn sarsa_step<S: Scalar>(
    q: &mut LinearQ<S>,
    t: &Transition<'_, S>,
    next_action: usize,
    params: &LearningParams<S>,
) -> Result<S> {
    let td = sarsa_td(q, t, next_action, params.gamma)?;
    q.apply_td_update(td, params.alpha, t.state.encoding(t.action), params.gamma * params.lambda)?;
    Ok(td)
}

/// R-Learning update. Greediness of the executed action and both maxima are
/// read from `q` before the weight update; `ρ` moves only on greedy steps.
pub fn r_learning_step<S: Scalar>(
    q: &mut LinearQ<S>,
    rho: &mut AvgRewardEstimate<S>,
    t: &Transition<'_, S>,
    params: &LearningParams<S>,
) -> Result<S> {
    let values = t.state.values(q)?;
    let qsa = values[t.action];
    let max_here = values.iter().copied().fold(S::neg_infinity(), S::max);
    let max_next = bootstrap_max(q, t.next)?;
    let td = check_td(t.reward - rho.rho + max_next - qsa)?;
    q.apply_td_update(td, params.alpha, t.state.encoding(t.action), params.lambda)?;
    if qsa >= max_here {
        let new_rho = rho.rho + params.beta * (t.reward - rho.rho + max_next - max_here);
        if !new_rho.is_finite() {
            return Err(Error::Divergence("average reward estimate became non-finite".into()));
        }
        rho.rho = new_rho;
    }
    Ok(td)
}

/// Per-episode geometric decay of the learning rate, bounded below.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaSchedule<S> {
    pub decay: S,
    pub floor: S,
}

impl<S: Scalar> AlphaSchedule<S> {
    pub fn constant() -> Self {
        Self { decay: S::one(), floor: S::zero() }
    }

    pub fn alpha(&self, base: S, episode: usize) -> S {
        if self.decay == S::one() {
            return base;
        }
        (base * self.decay.powi(episode.min(i32::MAX as usize) as i32)).max(self.floor.min(base))
    }
}

#[derive(Clone, Debug)]
struct Pending<S> {
    state: ActionChoices<S>,
    action: usize,
    reward: S,
    next: ActionChoices<S>,
}

/// An ε-greedy learning agent that can be driven step by step, with the
/// executed action supplied from outside (so a teacher can override it).
#[derive(Clone, Debug)]
pub struct Learner<S> {
    pub kind: AgentKind,
    pub params: LearningParams<S>,
    pub mode: FeatureMode,
    pub q: LinearQ<S>,
    pub rho: AvgRewardEstimate<S>,
    pub schedule: AlphaSchedule<S>,
    /// When false, no weight or ρ updates happen.
    pub learning: bool,
    episode: usize,
    current: Option<(ActionChoices<S>, usize)>,
    pending: Option<Pending<S>>,
}

impl<S: Scalar> Learner<S> {
    pub fn new(kind: AgentKind, params: LearningParams<S>, mode: FeatureMode, q: LinearQ<S>) -> Result<Self> {
        params.validate()?;
        if kind != AgentKind::RLearning && params.gamma >= S::one() {
            return Err(Error::Config(format!("{kind:?} needs gamma < 1, got {}", params.gamma)));
        }
        if kind == AgentKind::RLearning && params.beta <= S::zero() {
            return Err(Error::Config("r_learning needs beta > 0".into()));
        }
        Ok(Self {
            kind,
            params,
            mode,
            q,
            rho: AvgRewardEstimate::default(),
            schedule: AlphaSchedule::constant(),
            learning: true,
            episode: 0,
            current: None,
            pending: None,
        })
    }

    /// Zero-initialized learner sized for `env`.
    pub fn for_env<E: Environment>(
        env: &E,
        kind: AgentKind,
        params: LearningParams<S>,
        mode: FeatureMode,
    ) -> Result<Self> {
        Self::new(kind, params, mode, env.new_q(mode)?)
    }

    pub fn with_schedule(mut self, schedule: AlphaSchedule<S>) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn episodes_started(&self) -> usize {
        self.episode
    }

    pub fn current_alpha(&self) -> S {
        self.schedule.alpha(self.params.alpha, self.episode.saturating_sub(1))
    }

    fn effective_params(&self) -> LearningParams<S> {
        LearningParams { alpha: self.current_alpha(), ..self.params }
    }

    pub fn begin_episode(&mut self) {
        self.episode += 1;
        self.q.reset_traces();
        self.current = None;
        self.pending = None;
    }

    /// The student's own ε-greedy choice in the current state.
    pub fn intend(&self, choices: &ActionChoices<S>, rng: &mut RandomStream) -> Result<usize> {
        select_action(&self.q, choices, self.params.epsilon, rng)
    }

    /// Greedy choice, no exploration.
    pub fn greedy(&self, choices: &ActionChoices<S>) -> Result<usize> {
        self.q.greedy_index(choices)
    }

    pub fn greedy_action(&self, choices: &ActionChoices<S>) -> Result<ActionId> {
        self.q.greedy_action(choices)
    }

    /// Record the action executed in the current state. Completes a pending
    /// Sarsa update (returning its td error) and cuts Q(λ) traces after a
    /// non-greedy action.
    pub fn commit(&mut self, choices: ActionChoices<S>, executed: usize) -> Result<Option<S>> {
        let mut td = None;
        if self.learning {
            match self.kind {
                AgentKind::Sarsa => {
                    if let Some(p) = self.pending.take() {
                        td = Some(self.finish_sarsa(&p, executed)?);
                    }
                }
                AgentKind::QLearning | AgentKind::RLearning => {
                    if self.params.lambda > S::zero() {
                        let values = choices.values(&self.q)?;
                        if argmax(&values).map(|g| values[g] > values[executed]).unwrap_or(false) {
                            self.q.reset_traces();
                        }
                    }
                }
            }
        }
        self.current = Some((choices, executed));
        Ok(td)
    }

    fn finish_sarsa(&mut self, p: &Pending<S>, next_action: usize) -> Result<S> {
        let params = self.effective_params();
        let t = Transition { state: &p.state, action: p.action, reward: p.reward, next: Some(&p.next) };
        sarsa_step(&mut self.q, &t, next_action, &params)
    }

    /// Learn from the reward of the committed action. `next` is `None` when
    /// the episode ended in an absorbing state; `truncated` marks an episode
    /// cut by the step cap (learners still bootstrap from `next`).
    pub fn observe(&mut self, reward: f64, next: Option<&ActionChoices<S>>, truncated: bool) -> Result<Option<S>> {
        let (state, action) = self
            .current
            .take()
            .ok_or_else(|| Error::Contract("observe called before commit".into()))?;
        if !self.learning {
            return Ok(None);
        }
        let reward = S::of(reward);
        let params = self.effective_params();
        let t = Transition { state: &state, action, reward, next };
        let td = match self.kind {
            AgentKind::QLearning => q_learning_step(&mut self.q, &t, &params)?,
            AgentKind::RLearning => r_learning_step(&mut self.q, &mut self.rho, &t, &params)?,
            AgentKind::Sarsa => match next {
                None => sarsa_step(&mut self.q, &t, 0, &params)?,
                Some(n) if truncated => {
                    // no further action will be taken; bootstrap on the greedy one
                    let a = self.q.greedy_index(n)?;
                    sarsa_step(&mut self.q, &t, a, &params)?
                }
                Some(n) => {
                    self.pending = Some(Pending { state, action, reward, next: n.clone() });
                    return Ok(None);
                }
            },
        };
        Ok(Some(td))
    }

    /// TD error this agent would compute for `t`, without learning. Sarsa
    /// agents bootstrap on their greedy action.
    pub fn td_error(&self, t: &Transition<'_, S>) -> Result<S> {
        match self.kind {
            AgentKind::QLearning => q_learning_td(&self.q, t, self.params.gamma),
            AgentKind::RLearning => r_learning_td(&self.q, &self.rho, t),
            AgentKind::Sarsa => {
                let a = t.next.map(|n| self.q.greedy_index(n)).transpose()?.unwrap_or(0);
                sarsa_td(&self.q, t, a, self.params.gamma)
            }
        }
    }

    /// Run one learning episode alone (no teacher). Returns the episode score.
    pub fn train_episode<E: Environment>(
        &mut self,
        env: &E,
        env_rng: &mut RandomStream,
        agent_rng: &mut RandomStream,
    ) -> Result<EpisodeSummary> {
        self.begin_episode();
        let mut state = env.reset(env_rng);
        let mut choices = env.choices::<S>(&state, self.mode)?;
        let mut score = 0.0;
        let mut steps = 0;
        loop {
            let a = self.intend(&choices, agent_rng)?;
            let action = choices.action(a);
            self.commit(choices, a)?;
            let out = env.step(&state, action, env_rng);
            score += out.reward;
            steps += 1;
            if out.absorbing() {
                self.observe(out.reward, None, false)?;
                break;
            }
            let next = env.choices::<S>(&out.next, self.mode)?;
            self.observe(out.reward, Some(&next), out.truncated)?;
            if out.terminal {
                break;
            }
            state = out.next;
            choices = next;
        }
        Ok(EpisodeSummary { score, steps })
    }

    /// Greedy episode without learning.
    pub fn evaluate_episode<E: Environment>(&self, env: &E, env_rng: &mut RandomStream) -> Result<EpisodeSummary> {
        let mut state = env.reset(env_rng);
        let mut score = 0.0;
        let mut steps = 0;
        loop {
            let choices = env.choices::<S>(&state, self.mode)?;
            let action = self.q.greedy_action(&choices)?;
            let out = env.step(&state, action, env_rng);
            score += out.reward;
            steps += 1;
            if out.terminal {
                break;
            }
            state = out.next;
        }
        Ok(EpisodeSummary { score, steps })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeSummary {
    pub score: f64,
    pub steps: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{FiniteMdp, Outcome};
    use crate::linear_fa::{Encoding, FeatureVector};

    fn table_choices(state: usize, actions: usize) -> ActionChoices<f64> {
        ActionChoices::new(
            (0..actions).map(|a| ActionId(a as u8)).collect(),
            (0..actions).map(|a| Encoding::Index(state * actions + a)).collect(),
        )
        .unwrap()
    }

    fn params(alpha: f64, gamma: f64) -> LearningParams<f64> {
        LearningParams::new(alpha, gamma, 0.0, 0.0, 0.1)
    }

    #[test]
    fn epsilon_zero_is_greedy() {
        let mut q = LinearQ::<f64>::tabular(1, 3);
        q.set_weights(0.0, vec![1.0, 5.0, 2.0]).unwrap();
        let c = table_choices(0, 3);
        let mut rng = RandomStream::new(1);
        for _ in 0..100 {
            assert_eq!(select_action(&q, &c, 0.0, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn epsilon_one_is_uniform() {
        let q = LinearQ::<f64>::tabular(1, 4);
        let c = table_choices(0, 4);
        let mut rng = RandomStream::new(2);
        let n = 10_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[select_action(&q, &c, 1.0, &mut rng).unwrap()] += 1;
        }
        // binomial(n, 1/4): mean 2500, sd sqrt(n p (1-p)) ≈ 43.3
        let sd = (n as f64 * 0.25 * 0.75).sqrt();
        for &k in &counts {
            assert!((k as f64 - 2500.0).abs() < 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn seeded_selection_reproducible() {
        let q = LinearQ::<f64>::tabular(1, 4);
        let c = table_choices(0, 4);
        let run = |seed| {
            let mut rng = RandomStream::new(seed);
            (0..200).map(|_| select_action(&q, &c, 0.05, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(17), run(17));
    }

    #[test]
    fn q_learning_examples() {
        let s = table_choices(0, 2);
        let n = table_choices(1, 2);
        let mut q = LinearQ::<f64>::tabular(2, 2);
        let t = Transition { state: &s, action: 0, reward: 10.0, next: Some(&n) };
        assert_eq!(q_learning_step(&mut q, &t, &params(0.5, 0.9)).unwrap(), 10.0);

        // fixed point: r = 0, max Q(s') = Q(s, a) / γ
        let mut q = LinearQ::<f64>::tabular(2, 2);
        q.set_weights(0.0, vec![0.9, 0.0, 1.0, 0.5]).unwrap();
        let before = q.clone();
        let t = Transition { state: &s, action: 0, reward: 0.0, next: Some(&n) };
        let td = q_learning_step(&mut q, &t, &params(0.5, 0.9)).unwrap();
        assert!(td.abs() < 1e-15);
        assert!(q.max_abs_diff(&before) < 1e-15);

        // absorbing next state
        let mut q = LinearQ::<f64>::tabular(2, 2);
        q.set_weights(0.0, vec![4.0, 0.0, 0.0, 0.0]).unwrap();
        let t = Transition { state: &s, action: 0, reward: 1.0, next: None };
        assert_eq!(q_learning_step(&mut q, &t, &params(0.5, 0.9)).unwrap(), -3.0);
    }

    #[test]
    fn sarsa_examples() {
        let s = table_choices(0, 2);
        let n = table_choices(1, 2);
        let mut q = LinearQ::<f64>::tabular(2, 2);
        let t = Transition { state: &s, action: 1, reward: -1.0, next: Some(&n) };
        assert_eq!(sarsa_step(&mut q, &t, 0, &params(0.5, 0.9)).unwrap(), -1.0);

        let mut q = LinearQ::<f64>::tabular(2, 2);
        q.set_weights(0.0, vec![1.0, 2.0, 3.0, 7.0]).unwrap();
        let t = Transition { state: &s, action: 0, reward: 0.5, next: Some(&n) };
        let greedy = q.greedy_index(&n).unwrap();
        let a = sarsa_td(&q, &t, greedy, 0.9).unwrap();
        let b = q_learning_td(&q, &t, 0.9).unwrap();
        assert_eq!(a, b);
    }

    /// Two-step episode s0 → s1 → absorbing, reward only at the end.
    /// With λ = 0.9 the final reward reaches Q(s0, ·) in the same episode;
    /// with λ = 0 it does not.
    #[test]
    fn sarsa_lambda_two_step_credit() {
        let run = |lambda: f64| {
            let s0 = table_choices(0, 1);
            let s1 = table_choices(1, 1);
            let p = LearningParams::new(0.5, 0.9, 0.0, lambda, 0.0);
            let mut l = Learner::new(AgentKind::Sarsa, p, FeatureMode::Tabular, LinearQ::tabular(2, 1)).unwrap();
            l.begin_episode();
            l.commit(s0, 0).unwrap();
            l.observe(0.0, Some(&s1), false).unwrap();
            l.commit(s1, 0).unwrap();
            l.observe(1.0, None, false).unwrap();
            l.q.weights().to_vec()
        };
        let w0 = run(0.0);
        let w9 = run(0.9);
        // λ = 0: Q(s1) = 0.5, Q(s0) untouched
        assert_eq!(w0, vec![0.0, 0.5]);
        // λ = 0.9: trace of s0 is γλ = 0.81, so Q(s0) = 0.5 * 1 * 0.81
        assert!((w9[0] - 0.405).abs() < 1e-12);
        assert_eq!(w9[1], 0.5);
    }

    #[test]
    fn r_learning_examples() {
        let s = table_choices(0, 2);
        let n = table_choices(1, 2);
        let p = LearningParams::new(0.1, 0.0, 0.0, 0.0, 0.25);
        let mut q = LinearQ::<f64>::tabular(2, 2);
        let mut rho = AvgRewardEstimate::default();
        let t = Transition { state: &s, action: 0, reward: 1.0, next: Some(&n) };
        let td = r_learning_step(&mut q, &mut rho, &t, &p).unwrap();
        assert_eq!(td, 1.0);
        assert_eq!(rho.rho, 0.25);

        // non-greedy action: ρ untouched
        let mut q = LinearQ::<f64>::tabular(2, 2);
        q.set_weights(0.0, vec![5.0, 0.0, 0.0, 0.0]).unwrap();
        let mut rho = AvgRewardEstimate { rho: 0.3 };
        let t = Transition { state: &s, action: 1, reward: 1.0, next: Some(&n) };
        r_learning_step(&mut q, &mut rho, &t, &p).unwrap();
        assert_eq!(rho.rho, 0.3);
    }

    #[test]
    fn r_learning_cycle_gain() {
        let mdp = FiniteMdp::cycle(&[0.0, 2.0], 200_000).unwrap();
        let p = LearningParams::new(0.1, 0.0, 0.0, 0.0, 0.01);
        let mut l = Learner::for_env(&mdp, AgentKind::RLearning, p, FeatureMode::Tabular).unwrap();
        let mut env_rng = RandomStream::new(0);
        let mut rng = RandomStream::new(1);
        l.train_episode(&mdp, &mut env_rng, &mut rng).unwrap();
        assert!((l.rho.rho - 1.0f64).abs() < 0.05, "rho = {}", l.rho.rho);
    }

    #[test]
    fn config_validation() {
        let q = LinearQ::<f64>::tabular(1, 1);
        let bad_gamma = LearningParams::new(0.1, 1.0, 0.0, 0.0, 0.0);
        assert!(Learner::new(AgentKind::QLearning, bad_gamma, FeatureMode::Tabular, q.clone()).is_err());
        let no_beta = LearningParams::new(0.1, 0.0, 0.0, 0.0, 0.0);
        assert!(Learner::new(AgentKind::RLearning, no_beta, FeatureMode::Tabular, q.clone()).is_err());
        let ok = LearningParams::new(0.1, 0.9, 0.05, 0.9, 0.0);
        assert!(Learner::new(AgentKind::Sarsa, ok, FeatureMode::Tabular, q).is_ok());
        assert!(AgentKind::parse("dqn").is_err());
    }

    #[test]
    fn frozen_learner_does_not_move() {
        let mdp = FiniteMdp::new(
            vec![vec![
                vec![Outcome { prob: 1.0, next: 1, reward: 5.0 }],
                vec![Outcome { prob: 1.0, next: 1, reward: 1.0 }],
            ], vec![vec![]]],
            0,
            vec![false, true],
            10,
        )
        .unwrap();
        let p = LearningParams::new(0.5, 0.9, 0.5, 0.0, 0.0);
        let mut l = Learner::for_env(&mdp, AgentKind::QLearning, p, FeatureMode::Tabular).unwrap();
        l.learning = false;
        let before = l.q.clone();
        let mut e = RandomStream::new(0);
        let mut r = RandomStream::new(0);
        for _ in 0..10 {
            l.train_episode(&mdp, &mut e, &mut r).unwrap();
        }
        assert_eq!(l.q, before);
    }

    #[test]
    fn alpha_schedule_decays_to_floor() {
        let s = AlphaSchedule { decay: 0.5f64, floor: 0.1 };
        assert_eq!(s.alpha(1.0, 0), 1.0);
        assert_eq!(s.alpha(1.0, 1), 0.5);
        assert_eq!(s.alpha(1.0, 10), 0.1);
        assert_eq!(AlphaSchedule::<f64>::constant().alpha(0.3, 1000), 0.3);
    }

    #[test]
    fn linear_learner_runs_on_dense_features() {
        let s = ActionChoices::new(
            vec![ActionId(0), ActionId(1)],
            vec![
                Encoding::Dense(FeatureVector::new(vec![1.0, 0.0]).unwrap()),
                Encoding::Dense(FeatureVector::new(vec![0.0, 1.0]).unwrap()),
            ],
        )
        .unwrap();
        let p = LearningParams::new(0.5, 0.9, 0.0, 0.0, 0.0);
        let mut l = Learner::new(AgentKind::QLearning, p, FeatureMode::High, LinearQ::linear(2)).unwrap();
        l.begin_episode();
        l.commit(s, 1).unwrap();
        let td = l.observe(2.0, None, false).unwrap().unwrap();
        assert_eq!(td, 2.0);
        assert_eq!(l.q.weights(), &[0.0, 1.0]);
        assert_eq!(l.q.bias(), 1.0);
    }
}
