//! Teacher pre-training and teacher-student sessions.

use serde::{Deserialize, Serialize};

use crate::advising::{
    acting_features, build_teaching_state, early_decide, every_k_decide, importance_decide, mistake_correcting_decide,
    session_termination, Budget, QTeacher, QTeachingVariant, TeacherDecision, TeacherObservation, TeachingPolicyKind,
    TeachingState,
};
use crate::env::{ActionId, Environment, FeatureMode, MazeEnv};
use crate::learners::{AlphaSchedule, Learner, Transition};
use crate::linear_fa::LinearQ;
use crate::metrics::{cv_from_moments, evaluate_policy, moments, ScoreSeries, TdErrorAccumulator};
use crate::{Error, RandomStream, Result};

use super::config::{ExperimentConfig, StudentSpec, TeacherSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeacherStats {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub cv: Option<f64>,
    pub td_error_pct: Option<f64>,
    /// Evaluation steps left out of the td-error average because Q was 0.
    pub td_excluded: u64,
    pub student_mean_score: Option<f64>,
}

fn check_schema(env: &MazeEnv, q: &LinearQ<f64>, mode: FeatureMode, who: &str) -> Result<()> {
    let expected = env.new_q::<f64>(mode)?.representation();
    if q.representation() != expected {
        return Err(Error::Config(format!(
            "{who} value function {:?} does not match the environment's {mode:?} schema {expected:?}",
            q.representation()
        )));
    }
    Ok(())
}

/// Greedy, non-learning evaluation that also collects the agent's own td
/// errors relative to its value estimates.
pub fn evaluate_with_td(
    agent: &Learner<f64>,
    env: &MazeEnv,
    n: u64,
    rng: &mut RandomStream,
) -> Result<(ScoreSeries<f64>, TdErrorAccumulator)> {
    let mut series = ScoreSeries::new(0);
    let mut acc = TdErrorAccumulator::default();
    for e in 0..n {
        let mut state = env.reset(rng);
        let mut choices = env.choices::<f64>(&state, agent.mode)?;
        let mut score = 0.0;
        loop {
            let a = agent.greedy(&choices)?;
            let out = env.step(&state, choices.action(a), rng);
            score += out.reward;
            let next = if out.absorbing() { None } else { Some(env.choices::<f64>(&out.next, agent.mode)?) };
            let t = Transition { state: &choices, action: a, reward: out.reward, next: next.as_ref() };
            acc.add(agent.td_error(&t)?, agent.q.q_value(choices.encoding(a))?);
            match next {
                Some(n) if !out.terminal => {
                    state = out.next;
                    choices = n;
                }
                _ => break,
            }
        }
        series.push(e, score);
    }
    Ok((series, acc))
}

/// Train (or load) the acting agent whose values drive advice, then
/// evaluate it greedily.
pub fn pretrain_teacher(
    env: &MazeEnv,
    spec: &TeacherSpec,
    seed: &RandomStream,
) -> Result<(Learner<f64>, TeacherStats)> {
    let mut agent = match &spec.weights {
        Some(path) => {
            let q = LinearQ::load(path)?;
            check_schema(env, &q, spec.mode, "teacher")?;
            Learner::new(spec.kind, spec.params, spec.mode, q)?
        }
        None => Learner::for_env(env, spec.kind, spec.params, spec.mode)?,
    };
    agent = agent.with_schedule(spec.schedule.unwrap_or_else(AlphaSchedule::constant));
    if spec.weights.is_none() {
        let mut env_rng = seed.component("env");
        let mut agent_rng = seed.component("agent");
        for _ in 0..spec.pretrain_episodes {
            agent.train_episode(env, &mut env_rng, &mut agent_rng)?;
        }
    }
    agent.learning = false;
    let mut eval_rng = seed.component("eval");
    let (series, acc) = evaluate_with_td(&agent, env, spec.evaluation_episodes, &mut eval_rng)?;
    let (mean, sd) = if series.is_empty() { (0.0, 0.0) } else { moments(&series.scores)? };
    let stats = TeacherStats {
        name: spec.name.clone(),
        mean,
        sd,
        cv: cv_from_moments(mean, sd).ok(),
        td_error_pct: acc.mean(),
        td_excluded: acc.excluded(),
        student_mean_score: None,
    };
    Ok((agent, stats))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub episode: u64,
    pub step: u64,
    pub digest: u64,
    pub intended: ActionId,
    pub action: ActionId,
    pub advised: bool,
    pub advised_action: Option<ActionId>,
    pub reward: f64,
    pub budget_left: u32,
    /// Teacher reward of a Q-Teaching decision taken at this step.
    pub teacher_reward: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: u64,
    pub score: f64,
    pub steps: u64,
    pub advised: u32,
    pub budget_left: u32,
    pub eval_score: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub method: String,
    pub trial: u32,
    pub budget: u32,
    pub episodes: Vec<EpisodeRecord>,
    pub steps: Vec<StepRecord>,
    /// Episode in which the last piece of advice was given.
    pub exhaustion_episode: Option<u64>,
    /// First episode index at which the teaching session is over.
    pub termination_episode: u64,
    /// Student episodes observed by the teacher (≤ the session length).
    pub observed_episodes: u64,
    pub teacher_return: f64,
}

impl SessionLog {
    pub fn advised_total(&self) -> u32 {
        self.episodes.iter().map(|e| e.advised).sum()
    }

    pub fn final_budget(&self) -> u32 {
        self.episodes.last().map_or(self.budget, |e| e.budget_left)
    }

    pub fn mean_score(&self) -> Option<f64> {
        if self.episodes.is_empty() {
            return None;
        }
        Some(self.episodes.iter().map(|e| e.score).sum::<f64>() / self.episodes.len() as f64)
    }

    pub fn mean_eval_score(&self) -> Option<f64> {
        let evals: Vec<f64> = self.episodes.iter().filter_map(|e| e.eval_score).collect();
        (!evals.is_empty()).then(|| evals.iter().sum::<f64>() / evals.len() as f64)
    }
}

/// Everything a session needs besides the seed and the optional Q-Teaching teacher.
#[derive(Clone, Copy, Debug)]
pub struct SessionSetup<'a> {
    pub env: &'a MazeEnv,
    pub sigma: &'a Learner<f64>,
    pub student: &'a StudentSpec,
    pub policy: TeachingPolicyKind,
    pub budget: u32,
    pub episodes: u64,
    pub eval_every: u64,
    pub eval_episodes: u64,
    pub horizon: u64,
    pub q_sigma_learning: bool,
    /// End the session as soon as the teaching session terminates.
    pub stop_at_termination: bool,
    pub log_steps: bool,
}

impl<'a> SessionSetup<'a> {
    pub fn from_config(
        cfg: &'a ExperimentConfig,
        env: &'a MazeEnv,
        sigma: &'a Learner<f64>,
        policy: TeachingPolicyKind,
    ) -> Self {
        Self {
            env,
            sigma,
            student: &cfg.student,
            policy,
            budget: cfg.budget,
            episodes: cfg.episodes,
            eval_every: cfg.eval_every,
            eval_episodes: cfg.eval_episodes,
            horizon: cfg.horizon,
            q_sigma_learning: cfg.q_sigma_learning,
            stop_at_termination: false,
            log_steps: cfg.log_steps,
        }
    }

    fn table(&self) -> Result<Option<(usize, usize)>> {
        Ok(match self.sigma.mode {
            FeatureMode::Tabular => Some((self.env.feature_len(FeatureMode::Tabular)?, self.env.action_count())),
            _ => None,
        })
    }

    /// Width of the teaching state for this environment and acting mode.
    pub fn teaching_width(&self) -> Result<usize> {
        Ok(TeachingState::<f64>::width(self.env.action_count(), self.env.feature_len(self.sigma.mode)?))
    }
}

/// Run one teacher-student session. Q-Teaching policies need `q_teacher`;
/// it learns during the session when its `learning` flag is set.
pub fn run_session(
    setup: &SessionSetup<'_>,
    mut q_teacher: Option<&mut QTeacher<f64>>,
    method: &str,
    trial: u32,
    seed: &RandomStream,
) -> Result<SessionLog> {
    let env = setup.env;
    setup.policy.validate(setup.student.announces_intention)?;
    let is_q = matches!(setup.policy, TeachingPolicyKind::QTeaching { .. });
    if is_q {
        let qt = q_teacher.as_deref().ok_or_else(|| Error::Config("Q-Teaching session without a teacher".into()))?;
        if qt.q_t.representation() != LinearQ::<f64>::linear(2 * setup.teaching_width()?).representation() {
            return Err(Error::Config("teaching value function does not match the teaching-state width".into()));
        }
    }
    check_schema(env, &setup.sigma.q, setup.sigma.mode, "teacher")?;
    let spec = setup.student;
    let mut student = Learner::new(spec.kind, spec.params, spec.mode, env.new_q(spec.mode)?.with_trace_kind(spec.traces))?;
    let mut sigma = setup.sigma.clone();
    sigma.learning = setup.q_sigma_learning;
    let table = setup.table()?;
    let same_mode = sigma.mode == student.mode;

    let mut env_rng = seed.component("env");
    let mut student_rng = seed.component("student");
    let mut teacher_rng = seed.component("teacher");
    let mut eval_rng = seed.component("eval");

    let mut budget = Budget::new(setup.budget);
    let mut log = SessionLog {
        method: method.to_string(),
        trial,
        budget: setup.budget,
        episodes: Vec::new(),
        steps: Vec::new(),
        exhaustion_episode: None,
        termination_episode: setup.episodes,
        observed_episodes: setup.episodes,
        teacher_return: 0.0,
    };
    let mut open = true;
    let mut pending_step: Option<usize> = None;
    let mut global_step = 0u64;
    let mut advised_last = false;
    let mut last_reward = 0.0;

    if let Some(qt) = q_teacher.as_deref_mut() {
        qt.begin_session();
    }

    // resolves the previous Q-Teaching decision
    let settle = |qt: &mut QTeacher<f64>,
                      q_sigma: &LinearQ<f64>,
                      next: Option<(&TeachingState<f64>, &Budget)>,
                      log: &mut SessionLog,
                      pending: &mut Option<usize>|
     -> Result<()> {
        if let Some(idx) = pending.take() {
            let r = qt.feedback(q_sigma, next)?;
            log.teacher_return += r;
            if let Some(rec) = log.steps.get_mut(idx) {
                rec.teacher_reward = Some(r);
            }
        }
        Ok(())
    };

    'episodes: for episode in 0..setup.episodes {
        if open && session_termination(&budget, episode, setup.horizon) {
            open = false;
            log.termination_episode = episode;
            if is_q {
                log.observed_episodes = episode;
                settle(q_teacher.as_deref_mut().expect("checked"), &sigma.q, None, &mut log, &mut pending_step)?;
                if setup.stop_at_termination {
                    break;
                }
            }
        }
        student.begin_episode();
        sigma.begin_episode();
        let mut state = env.reset(&mut env_rng);
        let mut score = 0.0;
        let mut steps = 0u64;
        let mut advised = 0u32;
        loop {
            let sc = env.choices::<f64>(&state, student.mode)?;
            let intended_idx = student.intend(&sc, &mut student_rng)?;
            let intended = sc.action(intended_idx);
            let tc = if same_mode { sc.clone() } else { env.choices::<f64>(&state, sigma.mode)? };
            let announced = setup.student.announces_intention.then_some(intended);
            let decision = match setup.policy {
                TeachingPolicyKind::NoAdvice => TeacherDecision::NoAdvice,
                TeachingPolicyKind::Early => early_decide(&budget, sigma.greedy_action(&tc)?),
                TeachingPolicyKind::EveryK { k } => every_k_decide(global_step, k, &budget, sigma.greedy_action(&tc)?)?,
                TeachingPolicyKind::Importance { threshold } => {
                    importance_decide(&tc.values(&sigma.q)?, tc.actions(), threshold, &budget)?
                }
                TeachingPolicyKind::MistakeCorrecting { threshold } => {
                    mistake_correcting_decide(&tc.values(&sigma.q)?, tc.actions(), intended, threshold, &budget)?
                }
                TeachingPolicyKind::QTeaching { .. } if open => {
                    let qt = q_teacher.as_deref_mut().expect("checked");
                    let g = sigma.greedy(&tc)?;
                    let obs = TeacherObservation {
                        acting_features: acting_features(tc.encoding(g), table),
                        last_reward,
                        advised_last,
                        intended: announced,
                    };
                    let ts = build_teaching_state(&obs, &budget, episode, setup.horizon, env.action_count())?;
                    settle(qt, &sigma.q, Some((&ts, &budget)), &mut log, &mut pending_step)?;
                    let d = qt.decide(&sigma.q, &tc, announced, &ts, &budget, &mut teacher_rng)?;
                    pending_step = Some(log.steps.len());
                    d
                }
                TeachingPolicyKind::QTeaching { .. } => TeacherDecision::NoAdvice,
            };
            let executed_idx = match decision {
                TeacherDecision::Advise(a) => {
                    budget.spend()?;
                    advised += 1;
                    sc.position(a).ok_or_else(|| Error::Contract(format!("advised action {a} is not legal")))?
                }
                TeacherDecision::NoAdvice => intended_idx,
            };
            let executed = sc.action(executed_idx);
            if sigma.learning {
                let ti = tc.position(executed).expect("same legal actions");
                sigma.commit(tc, ti)?;
            }
            student.commit(sc, executed_idx)?;
            let out = env.step(&state, executed, &mut env_rng);
            score += out.reward;
            steps += 1;
            let absorbing = out.absorbing();
            let next_s = if absorbing { None } else { Some(env.choices::<f64>(&out.next, student.mode)?) };
            student.observe(out.reward, next_s.as_ref(), out.truncated)?;
            if sigma.learning {
                let next_t = match (&next_s, same_mode) {
                    (Some(n), true) => Some(n.clone()),
                    (Some(_), false) => Some(env.choices::<f64>(&out.next, sigma.mode)?),
                    (None, _) => None,
                };
                sigma.observe(out.reward, next_t.as_ref(), out.truncated)?;
            }
            if setup.log_steps || pending_step == Some(log.steps.len()) {
                // Q-Teaching steps are always kept until their reward is known
                log.steps.push(StepRecord {
                    episode,
                    step: global_step,
                    digest: env.digest(&state),
                    intended,
                    action: executed,
                    advised: decision.is_advice(),
                    advised_action: decision.advised_action(),
                    reward: out.reward,
                    budget_left: budget.remaining(),
                    teacher_reward: None,
                });
            }
            if decision.is_advice() && budget.is_exhausted() {
                log.exhaustion_episode = Some(episode);
            }
            global_step += 1;
            advised_last = decision.is_advice();
            last_reward = out.reward;
            if open && budget.is_exhausted() {
                open = false;
                log.termination_episode = episode;
                if is_q {
                    log.observed_episodes = episode + 1;
                    settle(q_teacher.as_deref_mut().expect("checked"), &sigma.q, None, &mut log, &mut pending_step)?;
                    if setup.stop_at_termination {
                        log.episodes.push(EpisodeRecord {
                            episode,
                            score,
                            steps,
                            advised,
                            budget_left: budget.remaining(),
                            eval_score: None,
                        });
                        break 'episodes;
                    }
                }
            }
            if out.terminal {
                break;
            }
            state = out.next;
        }
        let eval_score = if setup.eval_every > 0 && (episode + 1) % setup.eval_every == 0 {
            let s = evaluate_policy(&student, env, setup.eval_episodes as usize, &mut eval_rng)?;
            Some(s.mean()?)
        } else {
            None
        };
        log.episodes.push(EpisodeRecord { episode, score, steps, advised, budget_left: budget.remaining(), eval_score });
    }
    if let Some(qt) = q_teacher {
        settle(qt, &sigma.q, None, &mut log, &mut pending_step)?;
    }
    if !setup.log_steps {
        log.steps.clear();
    }
    if is_q && open {
        log.observed_episodes = log.episodes.len() as u64;
    }
    Ok(log)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub session: u64,
    pub observed_episodes: u64,
    pub exhaustion_episode: Option<u64>,
    pub teacher_return: f64,
}

/// Train a Q-Teaching teacher over `sessions` fresh students; sessions end
/// at budget exhaustion or the convergence horizon. The returned teacher is
/// frozen (greedy, no learning).
pub fn train_q_teacher(
    setup: &SessionSetup<'_>,
    variant: QTeachingVariant,
    params: crate::advising::QTeachingParams<f64>,
    sessions: u64,
    seed: &RandomStream,
) -> Result<(QTeacher<f64>, Vec<TrainingRecord>)> {
    let mut qt = QTeacher::new(variant, params, setup.teaching_width()?);
    let mut s = *setup;
    s.stop_at_termination = true;
    s.eval_every = 0;
    s.log_steps = false;
    s.policy = TeachingPolicyKind::QTeaching { variant };
    let mut records = Vec::with_capacity(sessions as usize);
    for i in 0..sessions {
        let log = run_session(&s, Some(&mut qt), "q_teaching_training", 0, &seed.child(i))?;
        records.push(TrainingRecord {
            session: i,
            observed_episodes: log.observed_episodes,
            exhaustion_episode: log.exhaustion_episode,
            teacher_return: log.teacher_return,
        });
    }
    qt.learning = false;
    Ok((qt, records))
}
