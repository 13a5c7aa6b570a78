use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{
    oracle_myopic_act, AgentConfig, BernoulliTs, IncrementalRlsvi, MyopicOracle, ValueAgent,
};
use crate::environments::{make_chain, make_recommendation, sample_dirichlet_mdp, sample_recommendation_instance};
use crate::error::{Error, Result};
use crate::features::{agnostic_basis, coherent_basis, normalized_distance, FeatureMap};
use crate::harness::config::{Algorithm, Experiment, ExperimentConfig};
use crate::harness::records::{records_from_rewards, seed_schedule, stream_rng, RunRecord, Stream};
use crate::mdp::{evaluate_policy, simulate_episode, solve_optimal, Agent, FiniteHorizonMdp, Policy};
use crate::optimism::{
    beta_projection, check_optimism, gaussian_dirichlet_pair, gaussian_tail_check, linspace,
    projected_sampler, single_crossing_check, tail_bound_crossover, truncated_mean_check, DirichletSpec,
    ZLaw,
};
use crate::sampling::MeanEstimate;

/// Seeds handed to one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSeeds {
    pub run_id: usize,
    pub environment: u64,
    pub basis: Option<u64>,
    pub agent: u64,
    pub trajectory: u64,
}

/// One line of the optimism verification table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimismRow {
    pub check: String,
    pub case: String,
    pub value: f64,
    /// `">="` or `"<="`: how `value` must relate to `limit`.
    pub relation: String,
    pub limit: f64,
    pub pass: bool,
}

impl OptimismRow {
    fn at_least(check: &str, case: String, value: f64, limit: f64) -> Self {
        Self { check: check.into(), case, value, relation: ">=".into(), limit, pass: value >= limit }
    }

    fn at_most(check: &str, case: String, value: f64, limit: f64) -> Self {
        Self { check: check.into(), case, value, relation: "<=".into(), limit, pass: value <= limit }
    }
}

/// Everything a study produces.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StudyOutput {
    pub records: Vec<RunRecord>,
    pub optimism: Vec<OptimismRow>,
    pub metrics: BTreeMap<String, f64>,
    pub seeds: Vec<RunSeeds>,
}

/// Runs `f` on a pool of `workers` threads, or on the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        Some(0) => Err(Error::Config("workers must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<StudyOutput> {
    cfg.validate()?;
    with_workers(cfg.workers, || match cfg.experiment {
        Experiment::ChainCoherent | Experiment::ChainAgnostic => run_chain_study(cfg),
        Experiment::Recommendation => run_recommendation_study(cfg),
        Experiment::TabularRegret => run_tabular_regret(cfg),
        Experiment::VerifyOptimism => run_verify_optimism(cfg),
    })?
}

/// A value-based agent by name.
pub fn make_value_agent(
    algorithm: Algorithm,
    fmap: Arc<FeatureMap>,
    horizon: usize,
    cfg: &AgentConfig,
    seed: u64,
) -> Result<Box<dyn Agent + Send>> {
    let cfg = cfg.clone();
    Ok(match algorithm {
        Algorithm::Rlsvi => Box::new(ValueAgent::rlsvi(fmap, horizon, cfg, seed)?),
        Algorithm::LsviBoltzmann => Box::new(ValueAgent::lsvi_boltzmann(fmap, horizon, cfg, seed)?),
        Algorithm::LsviEpsilonGreedy => Box::new(ValueAgent::lsvi_epsilon_greedy(fmap, horizon, cfg, seed)?),
        Algorithm::IncrementalRlsvi => Box::new(IncrementalRlsvi::new(fmap, horizon, cfg, seed)?),
        Algorithm::ContextualBandit => Box::new(ValueAgent::contextual_bandit(fmap, horizon, cfg, seed)?),
        other => return Err(Error::Config(format!("'{other}' is not a value-based agent"))),
    })
}

/// Simulates `episodes` episodes; returns realized rewards and `V*_0(s_0)` per episode.
pub fn play<R: Rng + ?Sized>(
    mdp: &FiniteHorizonMdp,
    v0: &[f64],
    agent: &mut dyn Agent,
    episodes: usize,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let mut rewards = Vec::with_capacity(episodes);
    let mut optimal = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let log = simulate_episode(mdp, agent, rng);
        rewards.push(log.episode_reward());
        optimal.push(v0[log.states[0]]);
    }
    (rewards, optimal)
}

fn label(records: &mut [RunRecord], algorithm: Algorithm, cfg: &AgentConfig, eta: Option<f64>) {
    for r in records {
        r.algorithm = Some(algorithm.name().into());
        match algorithm {
            Algorithm::LsviBoltzmann => r.eta = Some(eta.unwrap_or(cfg.eta)),
            Algorithm::LsviEpsilonGreedy => r.epsilon = Some(cfg.epsilon),
            _ => {}
        }
    }
}

/// Chain with a coherent or agnostic random basis drawn per run.
pub fn run_chain_study(cfg: &ExperimentConfig) -> Result<StudyOutput> {
    let agnostic = match cfg.experiment {
        Experiment::ChainCoherent => false,
        Experiment::ChainAgnostic => true,
        other => return Err(Error::Config(format!("'{other}' is not a chain study"))),
    };
    let n = cfg.num_states;
    let mdp = make_chain(n)?;
    let vf = solve_optimal(&mdp);
    let runs: Vec<(Vec<RunRecord>, RunSeeds, Option<f64>)> = (0..cfg.runs)
        .into_par_iter()
        .map(|m| -> Result<_> {
            let key = m as u64;
            let seeds = RunSeeds {
                run_id: m,
                environment: seed_schedule(cfg.seed, key, Stream::Environment),
                basis: Some(seed_schedule(cfg.seed, key, Stream::Basis)),
                agent: seed_schedule(cfg.seed, key, Stream::Agent),
                trajectory: seed_schedule(cfg.seed, key, Stream::Trajectory),
            };
            let mut basis_rng = stream_rng(cfg.seed, key, Stream::Basis);
            let fmap = if agnostic {
                agnostic_basis(&vf, cfg.num_features, cfg.rho, &mut basis_rng)?
            } else {
                coherent_basis(&vf, cfg.num_features, &mut basis_rng)?
            };
            let distance = if agnostic { Some(normalized_distance(&vf, &fmap)?) } else { None };
            let mut agent = make_value_agent(cfg.algorithm, Arc::new(fmap), n, &cfg.agent, seeds.agent)?;
            let mut traj = stream_rng(cfg.seed, key, Stream::Trajectory);
            let (rewards, optimal) = play(&mdp, &vf.v_star[0], agent.as_mut(), cfg.episodes, &mut traj);
            let mut recs = records_from_rewards(m, &optimal, &rewards);
            label(&mut recs, cfg.algorithm, &cfg.agent, None);
            for r in &mut recs {
                if agnostic {
                    r.rho = Some(cfg.rho);
                    r.distance = distance;
                }
            }
            Ok((recs, seeds, distance))
        })
        .collect::<Result<_>>()?;
    let mut out = StudyOutput::default();
    let mut distances = MeanEstimate::default();
    for (recs, seeds, d) in runs {
        out.records.extend(recs);
        out.seeds.push(seeds);
        if let Some(d) = d {
            distances.push(d);
        }
    }
    if agnostic {
        out.metrics.insert("mean_normalized_distance".into(), distances.mean());
    }
    insert_final_metrics(&mut out);
    Ok(out)
}

fn insert_final_metrics(out: &mut StudyOutput) {
    let summary = crate::harness::records::summarize(&out.records);
    let mut last: BTreeMap<String, (usize, f64)> = BTreeMap::new();
    for row in summary {
        let e = last.entry(row.series.clone()).or_insert((0, 0.0));
        if row.episode >= e.0 {
            *e = (row.episode, row.mean_cum_regret);
        }
    }
    for (series, (_, v)) in last {
        out.metrics.insert(format!("final_mean_cum_regret:{series}"), v);
    }
}

#[derive(Debug, Clone, Copy)]
struct Series {
    algorithm: Algorithm,
    eta: Option<f64>,
    reps: usize,
}

fn recommendation_series(cfg: &ExperimentConfig) -> Vec<Series> {
    let one = |algorithm, reps| Series { algorithm, eta: None, reps };
    let boltzmann = cfg
        .eta_grid
        .iter()
        .map(|&eta| Series { algorithm: Algorithm::LsviBoltzmann, eta: Some(eta), reps: cfg.runs });
    match cfg.algorithm {
        Algorithm::All => {
            let mut v = vec![one(Algorithm::Rlsvi, cfg.runs)];
            v.extend(boltzmann);
            v.push(one(Algorithm::BernoulliTs, cfg.bandit_runs));
            v.push(one(Algorithm::ContextualBandit, cfg.bandit_runs));
            v.push(one(Algorithm::Myopic, cfg.runs));
            v
        }
        Algorithm::LsviBoltzmann => boltzmann.collect(),
        a @ (Algorithm::BernoulliTs | Algorithm::ContextualBandit) => vec![one(a, cfg.bandit_runs)],
        a => vec![one(a, cfg.runs)],
    }
}

struct Instance {
    env: Arc<crate::environments::RecommendationEnv>,
    fmap: Arc<FeatureMap>,
    v0: Vec<f64>,
    myopic_gap: f64,
}

/// Logistic recommendation instances, each solved exactly, with every
/// selected algorithm run on every instance.
pub fn run_recommendation_study(cfg: &ExperimentConfig) -> Result<StudyOutput> {
    if cfg.experiment != Experiment::Recommendation {
        return Err(Error::Config(format!("'{}' is not the recommendation study", cfg.experiment)));
    }
    let (n, j) = (cfg.num_states, cfg.recommendations);
    let instances: Vec<Instance> = (0..cfg.instances)
        .into_par_iter()
        .map(|i| -> Result<Instance> {
            let mut rng = stream_rng(cfg.seed, i as u64, Stream::Environment);
            let (gamma, beta) = sample_recommendation_instance(n, cfg.scale, &mut rng)?;
            let env = Arc::new(make_recommendation(n, j, &gamma, &beta)?);
            let vf = solve_optimal(env.mdp());
            let mdp = env.mdp();
            let actions = (0..mdp.horizon())
                .map(|_| (0..mdp.num_states()).map(|s| oracle_myopic_act(&env, s)).collect())
                .collect();
            let myopic = evaluate_policy(mdp, &Policy::new(actions))?;
            let myopic_gap = vf.v_star[0][0] - myopic[0][0];
            Ok(Instance { fmap: Arc::new(FeatureMap::recommendation(env.clone())), v0: vf.v_star[0].clone(), env, myopic_gap })
        })
        .collect::<Result<_>>()?;

    let series = recommendation_series(cfg);
    let mut jobs = Vec::new();
    let mut run_id = 0usize;
    for s in &series {
        for i in 0..cfg.instances {
            for r in 0..s.reps {
                jobs.push((run_id, *s, i, r));
                run_id += 1;
            }
        }
    }
    let results: Vec<(Vec<RunRecord>, RunSeeds)> = jobs
        .into_par_iter()
        .map(|(run_id, s, i, r)| -> Result<_> {
            let inst = &instances[i];
            // agent and trajectory streams are shared across algorithms for the same (instance, repetition)
            let key = ((i as u64) << 32) | r as u64;
            let seeds = RunSeeds {
                run_id,
                environment: seed_schedule(cfg.seed, i as u64, Stream::Environment),
                basis: None,
                agent: seed_schedule(cfg.seed, key, Stream::Agent),
                trajectory: seed_schedule(cfg.seed, key, Stream::Trajectory),
            };
            let agent_cfg = AgentConfig { eta: s.eta.unwrap_or(cfg.agent.eta), ..cfg.agent.clone() };
            let mut agent: Box<dyn Agent + Send> = match s.algorithm {
                Algorithm::BernoulliTs => Box::new(BernoulliTs::new(n, j, seeds.agent)?),
                Algorithm::Myopic => Box::new(MyopicOracle::new(inst.env.clone())),
                a => make_value_agent(a, inst.fmap.clone(), j, &agent_cfg, seeds.agent)?,
            };
            let mut traj = stream_rng(cfg.seed, key, Stream::Trajectory);
            let (rewards, optimal) = play(inst.env.mdp(), &inst.v0, agent.as_mut(), cfg.episodes, &mut traj);
            let mut recs = records_from_rewards(run_id, &optimal, &rewards);
            label(&mut recs, s.algorithm, &agent_cfg, s.eta);
            recs.iter_mut().for_each(|rec| rec.instance = Some(i));
            Ok((recs, seeds))
        })
        .collect::<Result<_>>()?;

    let mut out = StudyOutput::default();
    for (recs, seeds) in results {
        out.records.extend(recs);
        out.seeds.push(seeds);
    }
    let gaps: MeanEstimate = instances.iter().map(|i| i.myopic_gap).collect();
    out.metrics.insert("mean_myopic_gap".into(), gaps.mean());
    let optimal: MeanEstimate = instances.iter().map(|i| i.v0[0]).collect();
    out.metrics.insert("mean_optimal_value".into(), optimal.mean());
    insert_final_metrics(&mut out);
    Ok(out)
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 || points.iter().any(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::InvalidArgument("log-log fit needs two or more positive points".into()));
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Mean cumulative regret across runs at each episode (single series).
pub fn mean_curve(records: &[RunRecord], episodes: usize) -> Vec<f64> {
    let mut sums = vec![0.0; episodes];
    let mut counts = vec![0usize; episodes];
    for r in records {
        if r.episode < episodes {
            sums[r.episode] += r.cum_regret;
            counts[r.episode] += 1;
        }
    }
    sums.iter().zip(&counts).map(|(s, c)| if *c == 0 { 0.0 } else { s / *c as f64 }).collect()
}

/// Growth exponent of cumulative regret against elapsed episodes, fitted on
/// the second half of the curve. `None` if the curve is not positive there.
pub fn regret_growth_exponent(curve: &[f64]) -> Option<f64> {
    let half = curve.len() / 2;
    let pts: Vec<(f64, f64)> = (half..curve.len()).map(|l| ((l + 1) as f64, curve[l])).collect();
    loglog_slope(&pts).ok()
}

/// Random Dirichlet MDPs learned by RLSVI with identity features.
pub fn run_tabular_regret(cfg: &ExperimentConfig) -> Result<StudyOutput> {
    if cfg.experiment != Experiment::TabularRegret {
        return Err(Error::Config(format!("'{}' is not the tabular study", cfg.experiment)));
    }
    let (s, a, h) = (cfg.num_states, cfg.num_actions, cfg.resolved_horizon());
    let fmap = Arc::new(FeatureMap::identity(s, a, h));
    let runs: Vec<(Vec<RunRecord>, RunSeeds)> = (0..cfg.runs)
        .into_par_iter()
        .map(|m| -> Result<_> {
            let key = m as u64;
            let seeds = RunSeeds {
                run_id: m,
                environment: seed_schedule(cfg.seed, key, Stream::Environment),
                basis: None,
                agent: seed_schedule(cfg.seed, key, Stream::Agent),
                trajectory: seed_schedule(cfg.seed, key, Stream::Trajectory),
            };
            let mdp = sample_dirichlet_mdp(s, a, h, &mut stream_rng(cfg.seed, key, Stream::Environment))?;
            let vf = solve_optimal(&mdp);
            let mut agent = make_value_agent(cfg.algorithm, fmap.clone(), h, &cfg.agent, seeds.agent)?;
            let mut traj = stream_rng(cfg.seed, key, Stream::Trajectory);
            let (rewards, optimal) = play(&mdp, &vf.v_star[0], agent.as_mut(), cfg.episodes, &mut traj);
            let mut recs = records_from_rewards(m, &optimal, &rewards);
            label(&mut recs, cfg.algorithm, &cfg.agent, None);
            Ok((recs, seeds))
        })
        .collect::<Result<_>>()?;
    let mut out = StudyOutput::default();
    for (recs, seeds) in runs {
        out.records.extend(recs);
        out.seeds.push(seeds);
    }
    let curve = mean_curve(&out.records, cfg.episodes);
    if let Some(slope) = regret_growth_exponent(&curve) {
        out.metrics.insert("regret_growth_exponent".into(), slope);
    }
    let (first, last) = first_last_regret(&out.records, cfg.episodes, 0.1);
    out.metrics.insert("mean_regret_first_decile".into(), first);
    out.metrics.insert("mean_regret_last_decile".into(), last);
    insert_final_metrics(&mut out);
    Ok(out)
}

/// Mean per-episode regret over the first and last `fraction` of episodes.
pub fn first_last_regret(records: &[RunRecord], episodes: usize, fraction: f64) -> (f64, f64) {
    let width = ((episodes as f64 * fraction).round() as usize).max(1);
    let mut first = MeanEstimate::default();
    let mut last = MeanEstimate::default();
    for r in records {
        if r.episode < width {
            first.push(r.regret);
        }
        if r.episode >= episodes.saturating_sub(width) {
            last.push(r.regret);
        }
    }
    (first.mean(), last.mean())
}

/// `√(4 ln 2)`, where the tail bound is first applied.
pub fn tail_operating_point() -> f64 {
    (4.0 * std::f64::consts::LN_2).sqrt()
}

/// The full optimism verification table.
pub fn run_verify_optimism(cfg: &ExperimentConfig) -> Result<StudyOutput> {
    let n_mc = cfg.mc_samples;
    let mut out = StudyOutput::default();
    let z_laws = [ZLaw::StandardNormal, ZLaw::UnitUniform, ZLaw::TwoPoint { low: 0.25, high: 0.75, p_low: 0.5 }];

    let mut spec_rng = stream_rng(cfg.seed, 0, Stream::Environment);
    let specs: Vec<DirichletSpec> = (0..cfg.optimism_specs)
        .map(|i| DirichletSpec::random([2, 3, 5][i % 3], 4.0, &mut spec_rng))
        .collect::<Result<_>>()?;
    let cases: Vec<(usize, usize)> = (0..specs.len()).flat_map(|i| (0..z_laws.len()).map(move |z| (i, z))).collect();
    let rows: Vec<OptimismRow> = cases
        .par_iter()
        .map(|&(i, z)| -> Result<OptimismRow> {
            let mut rng = stream_rng(cfg.seed, (i * z_laws.len() + z) as u64, Stream::Verification);
            let spec = &specs[i];
            let est = check_optimism(&gaussian_dirichlet_pair(spec), z_laws[z], n_mc, &mut rng)?;
            let case = format!("spec={i} N={} z={}", spec.values().len(), z_laws[z].label());
            Ok(OptimismRow::at_least("optimism", case, est.delta, -3.0 * est.std_error))
        })
        .collect::<Result<_>>()?;
    out.optimism.extend(rows);

    let mut proj_rng = stream_rng(cfg.seed, 1, Stream::Environment);
    let (mut sum_err, mut mean_err) = (0.0f64, 0.0f64);
    let mut proj_specs = Vec::new();
    for i in 0..100 {
        let spec = DirichletSpec::random(2 + i % 5, 5.0, &mut proj_rng)?;
        let (a, b) = beta_projection(&spec)?;
        let v = spec.values();
        sum_err = sum_err.max((a + b - spec.total()).abs());
        mean_err = mean_err.max(((a * v[v.len() - 1] + b * v[0]) / (a + b) - spec.mean()).abs());
        proj_specs.push(spec);
    }
    out.optimism.push(OptimismRow::at_most("beta-projection-sum", "100 specs, max error".into(), sum_err, 1e-12));
    out.optimism.push(OptimismRow::at_most("beta-projection-mean", "100 specs, max error".into(), mean_err, 1e-12));
    let mc_rows: Vec<OptimismRow> = proj_specs
        .par_iter()
        .take(cfg.optimism_specs)
        .enumerate()
        .map(|(i, spec)| -> Result<OptimismRow> {
            let mut rng = stream_rng(cfg.seed, 1_000_000 + i as u64, Stream::Verification);
            let projected = projected_sampler(spec)?;
            let pair = gaussian_dirichlet_pair(spec);
            let mut yt = MeanEstimate::default();
            let mut y = MeanEstimate::default();
            for _ in 0..n_mc {
                yt.push(projected(&mut rng));
                y.push((pair.y)(&mut rng));
            }
            let se = (yt.std_error().powi(2) + y.std_error().powi(2)).sqrt();
            let case = format!("spec={i} N={}", spec.values().len());
            Ok(OptimismRow::at_most("beta-projection-mc", case, (yt.mean() - y.mean()).abs(), 3.0 * se))
        })
        .collect::<Result<_>>()?;
    out.optimism.extend(mc_rows);

    let sweep = [1.0 / 3.0, 0.5, 1.0, 4.0 / 3.0, 2.0, 5.0, 10.0];
    let pairs: Vec<(f64, f64)> = sweep.iter().flat_map(|&a| sweep.iter().map(move |&b| (a, b))).collect();
    let crossing_rows: Vec<OptimismRow> = pairs
        .par_iter()
        .map(|&(a, b)| -> Result<OptimismRow> {
            let r = single_crossing_check(a, b, cfg.crossing_grid)?;
            Ok(OptimismRow::at_most("single-crossing", format!("alpha={a:.6} beta={b:.6}"), r.crossings as f64, 1.0))
        })
        .collect::<Result<_>>()?;
    out.optimism.extend(crossing_rows);

    let upper = gaussian_tail_check(&linspace(1.6, 10.0, 84_001))?;
    out.optimism.push(OptimismRow::at_least(
        "gaussian-tail",
        "gamma in [1.6, 10], min slack".into(),
        upper.min_slack,
        0.0,
    ));
    let full = gaussian_tail_check(&linspace(0.0, 10.0, 100_001))?;
    let crossover = tail_bound_crossover();
    out.optimism.push(OptimismRow::at_most(
        "gaussian-tail-crossover",
        "root of bound - tail, vs sqrt(4 ln 2)".into(),
        crossover,
        tail_operating_point(),
    ));
    out.metrics.insert("tail_crossover".into(), crossover);
    if let Some(g) = full.holds_from {
        out.metrics.insert("tail_holds_from_grid".into(), g);
    }
    let hazard = truncated_mean_check(&linspace(1.001, 20.0, 10_000))?;
    out.optimism.push(OptimismRow::at_least(
        "truncated-mean",
        "lambda in [1.001, 20], min slack".into(),
        hazard.min_slack,
        0.0,
    ));
    let failures = out.optimism.iter().filter(|r| !r.pass).count();
    out.metrics.insert("checks".into(), out.optimism.len() as f64);
    out.metrics.insert("failures".into(), failures as f64);
    Ok(out)
}
