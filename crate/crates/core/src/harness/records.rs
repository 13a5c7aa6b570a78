use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Independent randomness sources of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stream {
    Environment = 1,
    Basis = 2,
    Agent = 3,
    Trajectory = 4,
    Verification = 5,
}

/// Child seed for `(master, key, stream)`: the first 64 bits at block
/// `key` of the ChaCha stream `stream` under key `master`.
pub fn seed_schedule(master: u64, key: u64, stream: Stream) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream as u64);
    rng.set_word_pos(u128::from(key) * 16);
    rng.next_u64()
}

/// Generator seeded from [`seed_schedule`].
pub fn stream_rng(master: u64, key: u64, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed_schedule(master, key, stream))
}

/// One episode of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: usize,
    pub episode: usize,
    pub reward: f64,
    pub regret: f64,
    pub cum_regret: f64,
    pub algorithm: Option<String>,
    pub instance: Option<usize>,
    pub eta: Option<f64>,
    pub epsilon: Option<f64>,
    pub rho: Option<f64>,
    pub distance: Option<f64>,
}

impl RunRecord {
    pub fn new(run_id: usize, episode: usize, reward: f64, regret: f64, cum_regret: f64) -> Self {
        Self {
            run_id,
            episode,
            reward,
            regret,
            cum_regret,
            algorithm: None,
            instance: None,
            eta: None,
            epsilon: None,
            rho: None,
            distance: None,
        }
    }

    /// Label identifying the curve this record belongs to.
    pub fn series(&self) -> String {
        let mut s = self.algorithm.clone().unwrap_or_else(|| "agent".into());
        if let Some(eta) = self.eta {
            s.push_str(&format!("[eta={eta}]"));
        }
        if let Some(eps) = self.epsilon {
            s.push_str(&format!("[epsilon={eps}]"));
        }
        if let Some(rho) = self.rho {
            s.push_str(&format!("[rho={rho}]"));
        }
        s
    }
}

/// Records for one run from its per-episode rewards and a fixed optimal value.
pub fn records_from_rewards(run_id: usize, optimal: &[f64], rewards: &[f64]) -> Vec<RunRecord> {
    let mut cum = 0.0;
    rewards
        .iter()
        .zip(optimal)
        .enumerate()
        .map(|(l, (&r, &v))| {
            let regret = v - r;
            cum += regret;
            RunRecord::new(run_id, l, r, regret, cum)
        })
        .collect()
}

/// Full-precision decimal: 17 significant digits, round-trips exactly.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

const BASE_COLUMNS: [&str; 5] = ["run_id", "episode", "reward", "regret", "cum_regret"];
const EXTRA_COLUMNS: [&str; 6] = ["algorithm", "instance", "eta", "epsilon", "rho", "distance"];

fn extra_present(records: &[RunRecord]) -> [bool; 6] {
    let mut present = [false; 6];
    for r in records {
        present[0] |= r.algorithm.is_some();
        present[1] |= r.instance.is_some();
        present[2] |= r.eta.is_some();
        present[3] |= r.epsilon.is_some();
        present[4] |= r.rho.is_some();
        present[5] |= r.distance.is_some();
    }
    present
}

/// Writes records with the base columns plus every optional column that is
/// set on at least one record. UTF-8, LF line endings.
pub fn write_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no records to write".into()));
    }
    let present = extra_present(records);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(File::create(path)?));
    let mut header: Vec<&str> = BASE_COLUMNS.to_vec();
    header.extend(EXTRA_COLUMNS.iter().zip(present).filter(|(_, p)| *p).map(|(c, _)| *c));
    w.write_record(&header)?;
    let opt_f = |v: Option<f64>| v.map(format_float).unwrap_or_default();
    for r in records {
        let mut row = vec![
            r.run_id.to_string(),
            r.episode.to_string(),
            format_float(r.reward),
            format_float(r.regret),
            format_float(r.cum_regret),
        ];
        let extras = [
            r.algorithm.clone().unwrap_or_default(),
            r.instance.map(|i| i.to_string()).unwrap_or_default(),
            opt_f(r.eta),
            opt_f(r.epsilon),
            opt_f(r.rho),
            opt_f(r.distance),
        ];
        row.extend(extras.into_iter().zip(present).filter(|(_, p)| *p).map(|(v, _)| v));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a file produced by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let col = |name: &str| header.iter().position(|h| h == name);
    let bad = |what: &str| Error::InvalidArgument(format!("malformed CSV: {what}"));
    let base: Vec<usize> = BASE_COLUMNS
        .iter()
        .map(|c| col(c).ok_or_else(|| bad(&format!("missing column {c}"))))
        .collect::<Result<_>>()?;
    let float = |s: &str| s.parse::<f64>().map_err(|_| bad(s));
    let opt_float = |s: Option<&str>| -> Result<Option<f64>> {
        match s {
            None | Some("") => Ok(None),
            Some(v) => float(v).map(Some),
        }
    };
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let get = |name: &str| col(name).and_then(|i| row.get(i));
        let mut r = RunRecord::new(
            row[base[0]].parse().map_err(|_| bad("run_id"))?,
            row[base[1]].parse().map_err(|_| bad("episode"))?,
            float(&row[base[2]])?,
            float(&row[base[3]])?,
            float(&row[base[4]])?,
        );
        r.algorithm = get("algorithm").filter(|s| !s.is_empty()).map(str::to_owned);
        r.instance = match get("instance") {
            None | Some("") => None,
            Some(v) => Some(v.parse().map_err(|_| bad("instance"))?),
        };
        r.eta = opt_float(get("eta"))?;
        r.epsilon = opt_float(get("epsilon"))?;
        r.rho = opt_float(get("rho"))?;
        r.distance = opt_float(get("distance"))?;
        out.push(r);
    }
    Ok(out)
}

/// Cross-run statistics of one curve at one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub series: String,
    pub episode: usize,
    pub runs: usize,
    pub mean_reward: f64,
    pub mean_regret: f64,
    pub mean_cum_regret: f64,
    /// Half-width of the 95% normal-approximation band of `mean_cum_regret`.
    pub cum_regret_band: f64,
    pub reward_band: f64,
}

fn mean_and_band(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

/// Means and 95% bands across runs, per series and episode, in order of
/// first appearance of each series.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<(usize, usize), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        let s = r.series();
        let idx = order.iter().position(|o| *o == s).unwrap_or_else(|| {
            order.push(s);
            order.len() - 1
        });
        groups.entry((idx, r.episode)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((idx, episode), rs)| {
            let rewards: Vec<f64> = rs.iter().map(|r| r.reward).collect();
            let regrets: Vec<f64> = rs.iter().map(|r| r.regret).collect();
            let cums: Vec<f64> = rs.iter().map(|r| r.cum_regret).collect();
            let (mean_reward, reward_band) = mean_and_band(&rewards);
            let (mean_cum_regret, cum_regret_band) = mean_and_band(&cums);
            SummaryRow {
                series: order[idx].clone(),
                episode,
                runs: rs.len(),
                mean_reward,
                mean_regret: mean_and_band(&regrets).0,
                mean_cum_regret,
                cum_regret_band,
                reward_band,
            }
        })
        .collect()
}

pub fn write_summary_csv(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(File::create(path)?));
    w.write_record([
        "series",
        "episode",
        "runs",
        "mean_reward",
        "reward_band",
        "mean_regret",
        "mean_cum_regret",
        "cum_regret_band",
    ])?;
    for r in rows {
        w.write_record([
            r.series.clone(),
            r.episode.to_string(),
            r.runs.to_string(),
            format_float(r.mean_reward),
            format_float(r.reward_band),
            format_float(r.mean_regret),
            format_float(r.mean_cum_regret),
            format_float(r.cum_regret_band),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}
