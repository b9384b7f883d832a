use her_lab::agents::{q_update, Agent, AgentConfig, QTable};
use her_lab::env::{Cell, EnvConfig, GoalEnv, GridPushEnv, Move, PushState};
use her_lab::harness::{train, ExperimentConfig};
use her_lab::mdp::{binary_reward, Action, Goal, Transition};
use her_lab::probe::{probe_q, ProbeConfig, ProbeSpec};
use her_lab::relabel::StrategyKind;

fn bitflip(n: usize, relative_keys: bool, kind: StrategyKind, steps: u64) -> ExperimentConfig {
    ExperimentConfig::new(EnvConfig::Bitflip { n, relative_keys }, kind, steps)
}

#[test]
fn small_bitflip_is_solved_with_next_future() {
    let config = bitflip(6, true, StrategyKind::NextFuture, 50_000);
    for seed in 0..3 {
        let record = train(&config, seed, None).unwrap().record;
        let last = record.curve.last().unwrap();
        assert_eq!(last.env_step, 50_000);
        assert!(last.success_rate >= 0.95, "seed {seed}: {last:?}");
    }
}

#[test]
fn probing_does_not_change_the_curve() {
    let mut config = ExperimentConfig::new(
        EnvConfig::Gridpush {
            width: 5,
            height: 5,
            horizon: None,
        },
        StrategyKind::NextFuture,
        4_000,
    );
    config.eval_episodes = 10;
    config.probe = Some(ProbeConfig {
        goal: vec![2, 2],
        states: vec![vec![0, 2, 1, 2], vec![3, 3, 2, 3]],
        snapshot_every: Some(700),
    });
    let env = config.env.build().unwrap();
    let spec = config
        .probe
        .as_ref()
        .unwrap()
        .resolve(&env, config.total_env_steps)
        .unwrap();
    let with = train(&config, 9, Some(&spec)).unwrap();
    let without = train(&config, 9, None).unwrap();
    assert_eq!(with.record.curve, without.record.curve);
    assert!(without.probes.is_empty());
    assert_eq!(with.probes.len(), 1 + 4_000 / 700);
    assert!(with
        .probes
        .iter()
        .flat_map(|p| p.values.iter())
        .all(|&(_, v)| v <= 0.0));
}

#[test]
fn tqc_agent_trains_within_bounds() {
    let mut config = bitflip(5, true, StrategyKind::Future, 5_000);
    config.agent = AgentConfig::Tqc(Default::default());
    let outcome = train(&config, 1, None).unwrap();
    let (lo, hi) = outcome.agent.value_range().unwrap();
    assert!(hi <= 0.0 && lo >= -1.0 / (1.0 - config.gamma));
    assert!(outcome.record.curve.iter().all(|p| (0.0..=1.0).contains(&p.success_rate)));
}

// ---------------------------------------------------------------------------
// probes on a converged table

const GAMMA: f64 = 0.99;

/// Q-learning swept over every (state, action) for `goal` until nothing moves.
fn converged_for_goal(env: &GridPushEnv, goal: Goal) -> Agent {
    let transitions: Vec<Transition> = env
        .all_states()
        .unwrap()
        .into_iter()
        .flat_map(|s| (0..4).map(move |a| (s, Action(a))))
        .map(|(state, action)| {
            let next_state = env.step(state, action).unwrap();
            let d = env.distance(env.achieved_goal(next_state), goal).unwrap();
            let reward = binary_reward(d, 0.5).unwrap();
            Transition {
                state,
                action,
                next_state,
                goal,
                reward,
                success: reward == 0.0,
                done: reward == 0.0,
                episode_id: 0,
                step_index: 0,
            }
        })
        .collect();
    let mut table = QTable::new(4);
    for _ in 0..10_000 {
        let mut change = 0.0f64;
        for tr in &transitions {
            let before = table.get(env.value_key(tr.state, tr.goal), tr.action);
            let after = q_update(&mut table, env, tr, 1.0, GAMMA).unwrap();
            change = change.max((after - before).abs());
        }
        if change < 1e-12 {
            break;
        }
    }
    Agent::Q { table, alpha: 1.0 }
}

fn behind(env: &GridPushEnv, boxed: Cell, push: Move) -> PushState {
    let (dx, dy) = match push {
        Move::Up => (0, 1),
        Move::Down => (0, -1),
        Move::Left => (-1, 0),
        Move::Right => (1, 0),
    };
    let agent = Cell::new(boxed.x - dx, boxed.y - dy);
    assert!(env.contains(agent));
    PushState { agent, boxed }
}

#[test]
fn converged_probe_orders_states_by_distance() {
    let env = GridPushEnv::new(5, 5).unwrap();
    let goal_cell = Cell::new(4, 2);
    let goal = env.goal_at(goal_cell);
    let agent = converged_for_goal(&env, goal);
    let states = vec![
        // box on the goal
        env.encode(PushState {
            agent: Cell::new(0, 0),
            boxed: goal_cell,
        }),
        // one push away
        env.encode(behind(&env, Cell::new(3, 2), Move::Right)),
        // a distant interior start
        env.encode(PushState {
            agent: Cell::new(0, 4),
            boxed: Cell::new(1, 3),
        }),
    ];
    let spec = ProbeSpec {
        goal,
        states,
        snapshot_every: 1,
    };
    let snap = probe_q(&agent, &env, &spec, 0).unwrap();
    let v: Vec<f64> = snap.values.iter().map(|&(_, v)| v).collect();
    assert!(v[0].abs() <= 0.05, "{v:?}");
    assert!(v[1] > v[2], "{v:?}");
    assert!(v.iter().all(|&x| x <= 0.0));
}

#[test]
fn converged_values_rise_along_push_paths() {
    let env = GridPushEnv::new(5, 5).unwrap();
    let (mut pairs, mut ordered) = (0, 0);
    for goal_cell in [Cell::new(2, 2), Cell::new(4, 1), Cell::new(1, 0), Cell::new(3, 3)] {
        let goal = env.goal_at(goal_cell);
        let agent = converged_for_goal(&env, goal);
        for push in Move::ALL {
            // straight box path ending on the goal, agent behind the box
            let mut path = Vec::new();
            let mut boxed = goal_cell;
            loop {
                let prev = match push {
                    Move::Up => Cell::new(boxed.x, boxed.y - 1),
                    Move::Down => Cell::new(boxed.x, boxed.y + 1),
                    Move::Left => Cell::new(boxed.x + 1, boxed.y),
                    Move::Right => Cell::new(boxed.x - 1, boxed.y),
                };
                let agent_cell = match push {
                    Move::Up => Cell::new(prev.x, prev.y - 1),
                    Move::Down => Cell::new(prev.x, prev.y + 1),
                    Move::Left => Cell::new(prev.x + 1, prev.y),
                    Move::Right => Cell::new(prev.x - 1, prev.y),
                };
                if !env.contains(prev) || !env.contains(agent_cell) {
                    break;
                }
                path.push(env.encode(behind(&env, prev, push)));
                boxed = prev;
            }
            path.reverse();
            if path.len() < 2 {
                continue;
            }
            let spec = ProbeSpec {
                goal,
                states: path,
                snapshot_every: 1,
            };
            let snap = probe_q(&agent, &env, &spec, 0).unwrap();
            for w in snap.values.windows(2) {
                pairs += 1;
                if w[1].1 >= w[0].1 {
                    ordered += 1;
                }
            }
        }
    }
    assert!(pairs >= 8, "{pairs}");
    assert!(ordered as f64 >= 0.8 * pairs as f64, "{ordered}/{pairs}");
}
