use teachlab::env::{ActionId, Environment, FeatureMode, FiniteMdp, MazeEnv, Outcome};
use teachlab::learners::{AgentKind, AlphaSchedule, Learner};
use teachlab::linear_fa::{Encoding, LearningParams};
use teachlab::metrics::evaluate_policy;
use teachlab::RandomStream;

/// Five-state corridor: LEFT/RIGHT, reaching state 4 pays +1 and ends.
fn chain() -> FiniteMdp {
    let n: usize = 5;
    let transitions = (0..n)
        .map(|s| {
            if s == n - 1 {
                return vec![Vec::new(), Vec::new()];
            }
            let left = Outcome { prob: 1.0, next: s.saturating_sub(1), reward: 0.0 };
            let right = Outcome { prob: 1.0, next: s + 1, reward: if s + 1 == n - 1 { 1.0 } else { 0.0 } };
            vec![vec![left], vec![right]]
        })
        .collect();
    let mut terminal = vec![false; n];
    terminal[n - 1] = true;
    FiniteMdp::new(transitions, 0, terminal, 200).unwrap()
}

fn value_iteration(mdp: &FiniteMdp, gamma: f64) -> Vec<[f64; 2]> {
    let n = mdp.state_count();
    let mut q = vec![[0.0f64; 2]; n];
    for _ in 0..10_000 {
        let v: Vec<f64> = q
            .iter()
            .enumerate()
            .map(|(s, row)| if mdp.is_terminal(s) { 0.0 } else { row[0].max(row[1]) })
            .collect();
        let mut delta: f64 = 0.0;
        for s in 0..n {
            for a in 0..2 {
                let outs = mdp.outcomes(s, ActionId(a as u8));
                if outs.is_empty() {
                    continue;
                }
                let new: f64 = outs.iter().map(|o| o.prob * (o.reward + gamma * v[o.next])).sum();
                delta = delta.max((new - q[s][a]).abs());
                q[s][a] = new;
            }
        }
        if delta < 1e-14 {
            break;
        }
    }
    q
}

#[test]
fn q_learning_converges_to_value_iteration_on_chain() {
    let mdp = chain();
    let gamma = 0.9;
    let oracle = value_iteration(&mdp, gamma);
    let p = LearningParams::new(0.5, gamma, 1.0, 0.0, 0.0);
    let mut agent = Learner::for_env(&mdp, AgentKind::QLearning, p, FeatureMode::Tabular)
        .unwrap()
        .with_schedule(AlphaSchedule { decay: 0.999, floor: 0.01 });
    let mut env_rng = RandomStream::new(1);
    let mut rng = RandomStream::new(2);
    for _ in 0..3000 {
        agent.train_episode(&mdp, &mut env_rng, &mut rng).unwrap();
    }
    let mut worst: f64 = 0.0;
    for s in 0..4 {
        for a in 0..2 {
            let q = agent.q.q_value(&Encoding::tabular(s, ActionId(a), 2)).unwrap();
            worst = worst.max((q - oracle[s][a as usize]).abs());
        }
    }
    assert!(worst <= 0.01, "max-norm error {worst}");
}

#[test]
fn sarsa_lambda_finds_the_chain_policy() {
    let mdp = chain();
    let p = LearningParams::new(0.2, 0.9, 0.5, 0.9, 0.0);
    let mut agent = Learner::for_env(&mdp, AgentKind::Sarsa, p, FeatureMode::Tabular).unwrap();
    let mut env_rng = RandomStream::new(3);
    let mut rng = RandomStream::new(4);
    for _ in 0..300 {
        agent.train_episode(&mdp, &mut env_rng, &mut rng).unwrap();
    }
    let s = evaluate_policy(&agent, &mdp, 1, &mut env_rng).unwrap();
    assert_eq!(s.scores, vec![1.0]);
    for st in 0..4 {
        let right = agent.q.q_value(&Encoding::tabular(st, ActionId(1), 2)).unwrap();
        let left = agent.q.q_value(&Encoding::tabular(st, ActionId(0), 2)).unwrap();
        assert!(right > left, "state {st}");
    }
}

fn random_policy_mean(env: &MazeEnv, episodes: usize, rng: &mut RandomStream) -> f64 {
    let mut total = 0.0;
    for _ in 0..episodes {
        let mut s = env.reset(rng);
        loop {
            let legal = env.legal_actions(&s);
            let out = env.step(&s, legal[rng.below(legal.len())], rng);
            total += out.reward;
            if out.terminal {
                break;
            }
            s = out.next;
        }
    }
    total / episodes as f64
}

#[test]
fn trained_learners_beat_random_play_on_mini_pacman() {
    let env = MazeEnv::named("mini-pacman").unwrap();
    let random = random_policy_mean(&env, 200, &mut RandomStream::new(11));
    let configs = [
        (AgentKind::QLearning, LearningParams::new(0.001, 0.9, 0.05, 0.0, 0.0)),
        (AgentKind::Sarsa, LearningParams::new(0.001, 0.9, 0.05, 0.9, 0.0)),
        (AgentKind::RLearning, LearningParams::new(0.001, 1.0, 0.05, 0.0, 0.0001)),
    ];
    for (kind, p) in configs {
        let mut agent = Learner::for_env(&env, kind, p, FeatureMode::High).unwrap();
        let mut env_rng = RandomStream::new(5);
        let mut rng = RandomStream::new(6);
        for _ in 0..500 {
            agent.train_episode(&env, &mut env_rng, &mut rng).unwrap();
        }
        let eval = evaluate_policy(&agent, &env, 100, &mut RandomStream::new(12)).unwrap();
        let mean = eval.mean().unwrap();
        assert!(mean > random, "{kind:?}: {mean} vs random {random}");
    }
}
