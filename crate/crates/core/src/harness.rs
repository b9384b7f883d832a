//! Seeded experiment driver: collect an episode, store it with the replay
//! strategy, run a burst of minibatch updates, evaluate greedily on a fixed
//! cadence.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agents::{epsilon_greedy, greedy_action, Agent, AgentConfig, ExplorationSchedule};
use crate::env::{Env, EnvConfig, GoalEnv};
use crate::error::{Error, Result};
use crate::mdp::{binary_reward, Episode, RewardParams, Transition};
use crate::probe::{probe_q, ProbeConfig, ProbeSnapshot, ProbeSpec};
use crate::relabel::{sample_minibatch, store_episode, ReplayBuffer, ReplayStrategy, StrategyKind};

/// One strategy or a list of them (sweeps run each).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Strategies {
    One(StrategyKind),
    Many(Vec<StrategyKind>),
}

impl Strategies {
    pub fn to_vec(&self) -> Vec<StrategyKind> {
        match self {
            Strategies::One(k) => vec![*k],
            Strategies::Many(ks) => ks.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    #[serde(default)]
    pub agent: AgentConfig,
    pub strategy: Strategies,
    #[serde(default = "defaults::k")]
    pub k: usize,
    /// Success threshold; the environment default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_r: Option<f64>,
    #[serde(default = "defaults::gamma")]
    pub gamma: f64,
    pub total_env_steps: u64,
    #[serde(default = "defaults::eval_every")]
    pub eval_every: u64,
    #[serde(default = "defaults::eval_episodes")]
    pub eval_episodes: usize,
    #[serde(default = "defaults::one")]
    pub updates_per_step: usize,
    #[serde(default = "defaults::batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub exploration: ExplorationSchedule,
    #[serde(default = "defaults::buffer_capacity")]
    pub buffer_capacity: usize,
    #[serde(default = "defaults::seeds")]
    pub seeds: Vec<u64>,
    /// Success-rate level used for steps-to-threshold in summaries.
    #[serde(default = "defaults::threshold")]
    pub success_threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeConfig>,
}

mod defaults {
    pub fn k() -> usize {
        4
    }
    pub fn gamma() -> f64 {
        0.99
    }
    pub fn eval_every() -> u64 {
        1000
    }
    pub fn eval_episodes() -> usize {
        50
    }
    pub fn one() -> usize {
        1
    }
    pub fn batch_size() -> usize {
        64
    }
    pub fn buffer_capacity() -> usize {
        crate::relabel::ReplayBuffer::DEFAULT_CAPACITY
    }
    pub fn seeds() -> Vec<u64> {
        vec![0]
    }
    pub fn threshold() -> f64 {
        0.8
    }
}

impl ExperimentConfig {
    /// Minimal config with every optional field at its default.
    pub fn new(env: EnvConfig, strategy: StrategyKind, total_env_steps: u64) -> Self {
        Self {
            env,
            agent: AgentConfig::default(),
            strategy: Strategies::One(strategy),
            k: defaults::k(),
            eps_r: None,
            gamma: defaults::gamma(),
            total_env_steps,
            eval_every: defaults::eval_every().min(total_env_steps.max(1)),
            eval_episodes: defaults::eval_episodes(),
            updates_per_step: 1,
            batch_size: defaults::batch_size(),
            exploration: ExplorationSchedule::default(),
            buffer_capacity: defaults::buffer_capacity(),
            seeds: defaults::seeds(),
            success_threshold: defaults::threshold(),
            probe: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| {
            let field = json_error_field(&e.to_string());
            Error::config(field, e.to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            Error::config("--config", format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_json(&text)
    }

    pub fn strategies(&self) -> Vec<StrategyKind> {
        self.strategy.to_vec()
    }

    pub fn validate(&self) -> Result<()> {
        let env = self
            .env
            .build()
            .map_err(|e| Error::config("env", e.to_string()))?;
        self.agent.validate()?;
        if self.strategies().is_empty() {
            return Err(Error::config("strategy", "at least one strategy is required"));
        }
        if self.k < 1 {
            return Err(Error::config("k", "must be >= 1"));
        }
        let eps_r = self.eps_r.unwrap_or(env.spec().default_eps_r);
        RewardParams::new(eps_r, self.gamma).map_err(|e| {
            let field = if self.eps_r.is_some() && !(eps_r > 0.0) { "eps_r" } else { "gamma" };
            Error::config(field, e.to_string())
        })?;
        if self.eval_every < 1 {
            return Err(Error::config("eval_every", "must be >= 1"));
        }
        if self.total_env_steps > 0 && self.eval_every > self.total_env_steps {
            return Err(Error::config("eval_every", "must not exceed total_env_steps"));
        }
        for (field, v) in [
            ("eval_episodes", self.eval_episodes),
            ("updates_per_step", self.updates_per_step),
            ("batch_size", self.batch_size),
            ("buffer_capacity", self.buffer_capacity),
        ] {
            if v < 1 {
                return Err(Error::config(field, "must be >= 1"));
            }
        }
        self.exploration.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        if !(self.success_threshold > 0.0 && self.success_threshold <= 1.0) {
            return Err(Error::config("success_threshold", "must lie in (0, 1]"));
        }
        if let Some(probe) = &self.probe {
            probe.resolve(&env, self.total_env_steps)?;
        }
        Ok(())
    }

    /// Copy restricted to one strategy.
    pub fn with_strategy(&self, kind: StrategyKind) -> Self {
        Self {
            strategy: Strategies::One(kind),
            ..self.clone()
        }
    }

    fn single_strategy(&self) -> Result<StrategyKind> {
        match self.strategies().as_slice() {
            [kind] => Ok(*kind),
            _ => Err(Error::config(
                "strategy",
                "a single run needs exactly one strategy",
            )),
        }
    }

    /// Identity of a single-strategy run, independent of seeds and probing.
    pub fn config_hash(&self) -> String {
        let canonical = Self {
            seeds: Vec::new(),
            probe: None,
            ..self.clone()
        };
        let json = serde_json::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest[..8].iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn env_label(&self) -> String {
        match &self.env {
            EnvConfig::Bitflip { n, .. } => format!("bitflip{n}"),
            EnvConfig::Gridpush { width, height, .. } => format!("gridpush{width}x{height}"),
            EnvConfig::Linereach { width, height } => format!("linereach{width}x{height}"),
        }
    }
}

/// Pulls the offending key out of a serde_json message, if it names one.
fn json_error_field(message: &str) -> String {
    for marker in ["unknown field `", "missing field `"] {
        if let Some(start) = message.find(marker) {
            let rest = &message[start + marker.len()..];
            if let Some(end) = rest.find('`') {
                return rest[..end].to_string();
            }
        }
    }
    "config".to_string()
}

/// Labels for the independent random streams of a run.
#[derive(Clone, Copy, Debug)]
#[repr(u64)]
pub enum Stream {
    Env = 1,
    Explore = 2,
    Relabel = 3,
    Batch = 4,
    Eval = 5,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub env_step: u64,
    pub success_rate: f64,
    pub mean_return: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub config_hash: String,
    pub seed: u64,
    pub strategy: StrategyKind,
    pub env: String,
    pub agent: String,
    pub curve: Vec<CurvePoint>,
    /// Seconds; informational only and never written to run CSVs.
    pub wall_time: f64,
}

impl RunRecord {
    pub fn max_success_rate(&self) -> f64 {
        self.curve.iter().map(|p| p.success_rate).fold(0.0, f64::max)
    }
}

/// Everything a finished run leaves behind.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub record: RunRecord,
    pub agent: Agent,
    pub probes: Vec<ProbeSnapshot>,
}

/// Fraction of episodes that reached the goal at least once.
pub fn success_rate(outcomes: &[bool]) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::InvalidArgument("no evaluation outcomes".into()));
    }
    Ok(outcomes.iter().filter(|&&s| s).count() as f64 / outcomes.len() as f64)
}

/// First evaluation step whose success rate reaches `threshold`.
pub fn steps_to_threshold(curve: &[CurvePoint], threshold: f64) -> Option<u64> {
    curve
        .iter()
        .find(|p| p.success_rate >= threshold)
        .map(|p| p.env_step)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub strategy: StrategyKind,
    pub env: String,
    pub agent: String,
    pub max_sr_mean: f64,
    pub max_sr_std: f64,
    pub steps_to_threshold_median: Option<f64>,
    pub threshold: f64,
    pub n_seeds: usize,
}

/// Median where `None` counts as +infinity. Even counts average the middle
/// pair when both are finite and fall back to the lower one otherwise, so
/// the result is absent exactly when more than half the entries are.
pub fn median_with_absent(values: &[Option<u64>]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted: Vec<Option<u64>> = values.to_vec();
    // absent entries sort last
    sorted.sort_by_key(|v| (v.is_none(), *v));
    let n = sorted.len();
    let lower = sorted[(n - 1) / 2];
    if n % 2 == 1 {
        return lower.map(|v| v as f64);
    }
    match (lower, sorted[n / 2]) {
        (Some(a), Some(b)) => Some((a as f64 + b as f64) / 2.0),
        (Some(a), None) => Some(a as f64),
        _ => None,
    }
}

pub fn summarize(runs: &[RunRecord], threshold: f64) -> Result<SummaryRow> {
    let first = runs
        .first()
        .ok_or_else(|| Error::InvalidArgument("no runs to summarize".into()))?;
    if runs.iter().any(|r| r.config_hash != first.config_hash) {
        return Err(Error::InvalidArgument(
            "runs come from different configs".into(),
        ));
    }
    let maxima: Vec<f64> = runs.iter().map(RunRecord::max_success_rate).collect();
    let n = maxima.len() as f64;
    let mean = maxima.iter().sum::<f64>() / n;
    let std = if maxima.len() > 1 {
        (maxima.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let steps: Vec<Option<u64>> = runs
        .iter()
        .map(|r| steps_to_threshold(&r.curve, threshold))
        .collect();
    Ok(SummaryRow {
        strategy: first.strategy,
        env: first.env.clone(),
        agent: first.agent.clone(),
        max_sr_mean: mean,
        max_sr_std: std,
        steps_to_threshold_median: median_with_absent(&steps),
        threshold,
        n_seeds: runs.len(),
    })
}

struct EvalResult {
    success_rate: f64,
    mean_return: f64,
}

fn evaluate(
    env: &Env,
    agent: &Agent,
    eps_r: f64,
    episodes: usize,
    rng: &mut ChaCha8Rng,
) -> Result<EvalResult> {
    let horizon = env.spec().horizon;
    let mut outcomes = Vec::with_capacity(episodes);
    let mut total_return = 0.0;
    for _ in 0..episodes {
        let (mut state, goal) = env.reset(rng);
        let mut success = false;
        for _ in 0..horizon {
            let action = greedy_action(agent, env, state, goal);
            state = env.step(state, action)?;
            let d = env.distance(env.achieved_goal(state), goal)?;
            let reward = binary_reward(d, eps_r)?;
            total_return += reward;
            if reward == 0.0 {
                success = true;
                break;
            }
        }
        outcomes.push(success);
    }
    Ok(EvalResult {
        success_rate: success_rate(&outcomes)?,
        mean_return: total_return / episodes as f64,
    })
}

/// Trains one seed of a single-strategy config.
pub fn run_experiment(config: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    train(config, seed, None).map(|o| o.record)
}

/// Trains one seed, optionally taking probe snapshots on the way. Probing
/// only reads the agent, so the learning curve does not depend on it.
pub fn train(
    config: &ExperimentConfig,
    seed: u64,
    probe: Option<&ProbeSpec>,
) -> Result<TrainOutcome> {
    config.validate()?;
    let started = Instant::now();
    let kind = config.single_strategy()?;
    let strategy = ReplayStrategy::new(kind, config.k)?;
    let env = config.env.build()?;
    let spec = env.spec();
    let eps_r = config.eps_r.unwrap_or(spec.default_eps_r);
    let gamma = config.gamma;
    let mut agent = config.agent.build_for(&env)?;
    let mut buffer = ReplayBuffer::new(config.buffer_capacity)?;

    let mut env_rng = stream_rng(seed, Stream::Env);
    let mut explore_rng = stream_rng(seed, Stream::Explore);
    let mut relabel_rng = stream_rng(seed, Stream::Relabel);
    let mut batch_rng = stream_rng(seed, Stream::Batch);
    let mut eval_rng = stream_rng(seed, Stream::Eval);

    let mut curve = Vec::new();
    let mut probes = Vec::new();
    let eval_point = |agent: &Agent, step: u64, rng: &mut ChaCha8Rng| -> Result<CurvePoint> {
        let r = evaluate(&env, agent, eps_r, config.eval_episodes, rng)?;
        Ok(CurvePoint {
            env_step: step,
            success_rate: r.success_rate,
            mean_return: r.mean_return,
        })
    };
    curve.push(eval_point(&agent, 0, &mut eval_rng)?);
    if let Some(p) = probe {
        probes.push(probe_q(&agent, &env, p, 0)?);
    }

    let total = config.total_env_steps;
    let mut steps = 0u64;
    let mut next_eval = config.eval_every;
    let mut next_snapshot = probe.map(|p| p.snapshot_every);
    let mut episode_id = 0u64;

    while steps < total {
        let horizon = (spec.horizon as u64).min(total - steps) as usize;
        let (mut state, goal) = env.reset(&mut env_rng);
        let mut episode = Episode::new(goal, spec.horizon);
        for t in 0..horizon {
            let action = epsilon_greedy(
                &agent,
                &env,
                state,
                goal,
                &config.exploration,
                steps,
                &mut explore_rng,
            );
            let next_state = env.step(state, action)?;
            let d = env.distance(env.achieved_goal(next_state), goal)?;
            let reward = binary_reward(d, eps_r)?;
            let success = reward == 0.0;
            episode.transitions.push(Transition {
                state,
                action,
                next_state,
                goal,
                reward,
                success,
                done: success,
                episode_id,
                step_index: t,
            });
            steps += 1;
            state = next_state;
            if success {
                break;
            }
        }
        store_episode(&mut buffer, &episode, strategy, &env, eps_r, &mut relabel_rng)?;
        for _ in 0..config.updates_per_step * episode.len() {
            for tr in sample_minibatch(&buffer, config.batch_size, &mut batch_rng)? {
                agent.update(&env, &tr, gamma)?;
            }
        }
        episode_id += 1;

        if steps >= next_eval {
            curve.push(eval_point(&agent, steps, &mut eval_rng)?);
            while next_eval <= steps {
                next_eval += config.eval_every;
            }
        }
        if let (Some(p), Some(next)) = (probe, next_snapshot.as_mut()) {
            if steps >= *next {
                probes.push(probe_q(&agent, &env, p, steps)?);
                while *next <= steps {
                    *next += p.snapshot_every;
                }
            }
        }
    }
    if curve.last().is_some_and(|p| p.env_step < steps) {
        curve.push(eval_point(&agent, steps, &mut eval_rng)?);
    }

    Ok(TrainOutcome {
        record: RunRecord {
            config_hash: config.config_hash(),
            seed,
            strategy: kind,
            env: config.env_label(),
            agent: config.agent.label().to_string(),
            curve,
            wall_time: started.elapsed().as_secs_f64(),
        },
        agent,
        probes,
    })
}

// ---------------------------------------------------------------------------
// CSV output

pub const RUN_CSV_HEADER: &str = "env_step,success_rate,mean_return";
pub const SUMMARY_CSV_HEADER: &str =
    "strategy,env,agent,max_sr_mean,max_sr_std,steps_to_thr_median,threshold,n_seeds";

pub fn run_csv(curve: &[CurvePoint]) -> String {
    let mut out = String::from(RUN_CSV_HEADER);
    out.push('\n');
    for p in curve {
        let _ = writeln!(out, "{},{},{}", p.env_step, p.success_rate, p.mean_return);
    }
    out
}

pub fn parse_run_csv(text: &str) -> Result<Vec<CurvePoint>> {
    let mut lines = text.lines();
    if lines.next() != Some(RUN_CSV_HEADER) {
        return Err(Error::InvalidArgument("unexpected run CSV header".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let bad = || Error::InvalidArgument(format!("malformed run CSV row `{line}`"));
            let mut fields = line.split(',');
            let mut next = || fields.next().ok_or_else(bad);
            let env_step = next()?.parse().map_err(|_| bad())?;
            let success_rate = next()?.parse().map_err(|_| bad())?;
            let mean_return = next()?.parse().map_err(|_| bad())?;
            Ok(CurvePoint {
                env_step,
                success_rate,
                mean_return,
            })
        })
        .collect()
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let median = r
            .steps_to_threshold_median
            .map(|m| m.to_string())
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.strategy, r.env, r.agent, r.max_sr_mean, r.max_sr_std, median, r.threshold, r.n_seeds
        );
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn run_dir(out_dir: &Path, config: &ExperimentConfig) -> PathBuf {
    out_dir.join("runs").join(config.config_hash())
}

/// Writes `runs/<hash>/<seed>.csv` plus the run's resolved `config.json`.
pub fn write_run(out_dir: &Path, config: &ExperimentConfig, record: &RunRecord) -> Result<PathBuf> {
    let dir = run_dir(out_dir, config);
    let resolved = ExperimentConfig {
        seeds: Vec::new(),
        probe: None,
        ..config.clone()
    };
    let json = serde_json::to_string_pretty(&resolved).expect("config serializes");
    write_file(&dir.join("config.json"), &json)?;
    let path = dir.join(format!("{}.csv", record.seed));
    write_file(&path, &run_csv(&record.curve))?;
    Ok(path)
}

pub fn write_summary(out_dir: &Path, rows: &[SummaryRow]) -> Result<PathBuf> {
    let path = out_dir.join("summary.csv");
    write_file(&path, &summary_csv(rows))?;
    Ok(path)
}

/// Rebuilds run records from `runs/<hash>/` directories written by
/// [`write_run`] and summarizes each directory.
pub fn summarize_dir(out_dir: &Path, threshold: Option<f64>) -> Result<Vec<SummaryRow>> {
    let runs_root = out_dir.join("runs");
    let mut dirs: Vec<PathBuf> = fs::read_dir(&runs_root)
        .map_err(|e| Error::io(&runs_root, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    let mut rows = Vec::new();
    for dir in dirs {
        let config_path = dir.join("config.json");
        let text = fs::read_to_string(&config_path).map_err(|e| Error::io(&config_path, e))?;
        let mut config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::config(config_path.display().to_string(), e.to_string()))?;
        config.seeds = vec![0];
        let kind = config.single_strategy()?;
        let mut seeds: Vec<(u64, PathBuf)> = fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter_map(|p| {
                let seed = p.file_stem()?.to_str()?.parse().ok()?;
                (p.extension()? == "csv").then_some((seed, p))
            })
            .collect();
        seeds.sort();
        let mut records = Vec::new();
        for (seed, path) in seeds {
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            records.push(RunRecord {
                config_hash: config.config_hash(),
                seed,
                strategy: kind,
                env: config.env_label(),
                agent: config.agent.label().to_string(),
                curve: parse_run_csv(&text)?,
                wall_time: 0.0,
            });
        }
        if !records.is_empty() {
            rows.push(summarize(
                &records,
                threshold.unwrap_or(config.success_threshold),
            )?);
        }
    }
    sort_rows(&mut rows);
    Ok(rows)
}

fn sort_rows(rows: &mut [SummaryRow]) {
    rows.sort_by(|a, b| (&a.env, &a.agent, a.strategy).cmp(&(&b.env, &b.agent, b.strategy)));
}

// ---------------------------------------------------------------------------
// Sweeps

#[derive(Debug)]
pub struct SweepOutcome {
    pub records: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
    pub failures: Vec<(StrategyKind, u64, Error)>,
}

/// Runs every (strategy, seed) pair on up to `jobs` threads, writing each
/// run CSV as soon as it finishes and `summary.csv` at the end. Output does
/// not depend on `jobs`.
pub fn sweep(config: &ExperimentConfig, out_dir: &Path, jobs: usize) -> Result<SweepOutcome> {
    config.validate()?;
    let tasks: Vec<(StrategyKind, u64)> = config
        .strategies()
        .into_iter()
        .flat_map(|k| config.seeds.iter().map(move |&s| (k, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let results: Vec<(StrategyKind, u64, Result<RunRecord>)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(kind, seed)| {
                let single = config.with_strategy(kind);
                let result = run_experiment(&single, seed).and_then(|record| {
                    write_run(out_dir, &single, &record)?;
                    Ok(record)
                });
                (kind, seed, result)
            })
            .collect()
    });

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (kind, seed, result) in results {
        match result {
            Ok(r) => records.push(r),
            Err(e) => failures.push((kind, seed, e)),
        }
    }
    let mut summary = Vec::new();
    for kind in config.strategies() {
        let runs: Vec<RunRecord> = records
            .iter()
            .filter(|r| r.strategy == kind)
            .cloned()
            .collect();
        if !runs.is_empty() {
            summary.push(summarize(&runs, config.success_threshold)?);
        }
    }
    sort_rows(&mut summary);
    write_summary(out_dir, &summary)?;
    Ok(SweepOutcome {
        records,
        summary,
        failures,
    })
}

/// Trains with probe snapshots and writes `probes/<hash>/<seed>.csv`.
pub fn run_probe(config: &ExperimentConfig, seed: u64, out_dir: &Path) -> Result<(TrainOutcome, PathBuf)> {
    let probe_config = config
        .probe
        .as_ref()
        .ok_or_else(|| Error::config("probe", "config has no probe section"))?;
    let env = config.env.build()?;
    let spec = probe_config.resolve(&env, config.total_env_steps)?;
    let outcome = train(config, seed, Some(&spec))?;
    let path = out_dir
        .join("probes")
        .join(config.config_hash())
        .join(format!("{seed}.csv"));
    crate::probe::emit_probe_csv(&outcome.probes, &env, &path)?;
    Ok((outcome, path))
}
