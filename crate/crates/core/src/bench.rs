//! Seeded benchmark corpora and CSV records.
//!
//! A bench config is a `key = value` text file; `#` starts a comment.
//!
//! | key          | value                                        | default            |
//! |--------------|----------------------------------------------|--------------------|
//! | `m`          | comma list of character counts               | required           |
//! | `n`          | comma list of species counts                 | required           |
//! | `p`          | comma list of probabilities                  | required           |
//! | `instances`  | instances per `(m, n, p)` cell               | `10`               |
//! | `seed`       | base seed; instance `t` of a cell uses `seed + t` | `0`           |
//! | `methods`    | comma list of `zdd`, `bnb`, `brute`          | `zdd,bnb`          |
//! | `timeout_ms` | wall-clock budget per solve                  | `120000`           |
//! | `order`      | `character-major` or `element-major`         | `character-major`  |
//! | `pair_order` | `lexicographic`, `deferred`, `deferred-nearest` | `lexicographic` |
//! | `cap`        | solution cap for `brute`                     | `1000000`          |
//!
//! The grid is traversed with `m` outermost, then `n`, then `p`.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::bnb::bnb_count;
use crate::datagen::{generate, GenConfig};
use crate::feasibility::brute_force_solutions;
use crate::zdd_enum::{solve, BuildOutcome, PairSchedule, VarOrder};
use crate::{Error, Instance, Result};

pub const CSV_HEADER: &str =
    "instance,seed,m,n,p,method,status,time_ms,count,zdd_nodes,zdd_peak_nodes,bnb_calls,bnb_found";

/// Default per-solve budget: two minutes.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Zdd,
    Bnb,
    Brute,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Zdd => "zdd",
            Method::Bnb => "bnb",
            Method::Brute => "brute",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zdd" => Ok(Method::Zdd),
            "bnb" => Ok(Method::Bnb),
            "brute" => Ok(Method::Brute),
            _ => Err(Error::usage(format!("unknown method {s:?}"))),
        }
    }
}

pub fn parse_order(s: &str) -> Result<VarOrder> {
    match s {
        "character-major" => Ok(VarOrder::CharacterMajor),
        "element-major" => Ok(VarOrder::ElementMajor),
        _ => Err(Error::usage(format!("unknown order {s:?}"))),
    }
}

pub fn parse_pair_order(s: &str) -> Result<PairSchedule> {
    match s {
        "lexicographic" => Ok(PairSchedule::Lexicographic),
        "deferred" => Ok(PairSchedule::Deferred),
        "deferred-nearest" => Ok(PairSchedule::DeferredNearest),
        _ => Err(Error::usage(format!("unknown pair order {s:?}"))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Solved,
    Timeout,
    Refused,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Solved => "solved",
            Status::Timeout => "timeout",
            Status::Refused => "refused",
        })
    }
}

/// Settings shared by every solve of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveSettings {
    pub timeout: Duration,
    pub order: VarOrder,
    pub pair_order: PairSchedule,
    pub brute_cap: usize,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings {
            timeout: DEFAULT_TIMEOUT,
            order: VarOrder::CharacterMajor,
            pair_order: PairSchedule::Lexicographic,
            brute_cap: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub m: Vec<usize>,
    pub n: Vec<usize>,
    pub p: Vec<f64>,
    pub instances: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub settings: SolveSettings,
}

fn parse_values<T: FromStr>(key: &str, value: &str, line: usize) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::parse(line, format!("bad value {v:?} for `{key}`")))
        })
        .collect()
}

fn parse_one<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("bad value {value:?} for `{key}`")))
}

impl FromStr for BenchConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = BenchConfig {
            m: Vec::new(),
            n: Vec::new(),
            p: Vec::new(),
            instances: 10,
            seed: 0,
            methods: vec![Method::Zdd, Method::Bnb],
            settings: SolveSettings::default(),
        };
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| Error::parse(line, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "m" => cfg.m = parse_values(key, value, line)?,
                "n" => cfg.n = parse_values(key, value, line)?,
                "p" => {
                    cfg.p = parse_values(key, value, line)?;
                    if cfg.p.iter().any(|p| !(0.0..=1.0).contains(p)) {
                        return Err(Error::parse(line, "probabilities must lie in [0, 1]"));
                    }
                }
                "instances" => cfg.instances = parse_one(key, value, line)?,
                "seed" => cfg.seed = parse_one(key, value, line)?,
                "methods" => {
                    cfg.methods = value
                        .split(',')
                        .map(|m| {
                            m.trim()
                                .parse()
                                .map_err(|_| Error::parse(line, format!("unknown method {m:?}")))
                        })
                        .collect::<Result<_>>()?
                }
                "timeout_ms" => cfg.settings.timeout = Duration::from_millis(parse_one(key, value, line)?),
                "order" => cfg.settings.order = parse_order(value).map_err(|e| Error::parse(line, e.to_string()))?,
                "pair_order" => {
                    cfg.settings.pair_order = parse_pair_order(value).map_err(|e| Error::parse(line, e.to_string()))?
                }
                "cap" => cfg.settings.brute_cap = parse_one(key, value, line)?,
                _ => return Err(Error::parse(line, format!("unknown key `{key}`"))),
            }
        }
        for (key, empty) in [
            ("m", cfg.m.is_empty()),
            ("n", cfg.n.is_empty()),
            ("p", cfg.p.is_empty()),
        ] {
            if empty {
                return Err(Error::parse(text.lines().count().max(1), format!("missing `{key}`")));
            }
        }
        Ok(cfg)
    }
}

/// One generated corpus entry.
#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub id: String,
    pub config: GenConfig,
    pub instance: Instance,
}

impl BenchConfig {
    pub fn corpus(&self) -> Result<Vec<CorpusEntry>> {
        let mut out = Vec::new();
        for &m in &self.m {
            for &n in &self.n {
                for &p in &self.p {
                    for t in 0..self.instances {
                        let config = GenConfig {
                            m,
                            n,
                            p,
                            seed: self.seed.wrapping_add(t as u64),
                        };
                        out.push(CorpusEntry {
                            id: format!("m{m}-n{n}-p{p}-{t:03}"),
                            config,
                            instance: generate(&config)?,
                        });
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub instance_id: String,
    pub seed: u64,
    pub m: usize,
    pub n: usize,
    pub p: f64,
    pub method: Method,
    pub status: Status,
    pub time_ms: u128,
    /// Present iff solved.
    pub count: Option<BigUint>,
    pub zdd_nodes: Option<usize>,
    pub zdd_peak_nodes: Option<usize>,
    pub bnb_calls: Option<u64>,
    pub bnb_found: Option<BigUint>,
}

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(ToString::to_string).unwrap_or_default()
        }
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.instance_id,
            self.seed,
            self.m,
            self.n,
            self.p,
            self.method,
            self.status,
            self.time_ms,
            opt(&self.count),
            opt(&self.zdd_nodes),
            opt(&self.zdd_peak_nodes),
            opt(&self.bnb_calls),
            opt(&self.bnb_found),
        )
    }

    /// `log10(zdd_nodes / count)` for solved zdd records with a nonzero count.
    pub fn compression_ratio(&self) -> Option<f64> {
        match (self.status, &self.count, self.zdd_nodes) {
            (Status::Solved, Some(h), Some(nodes)) => compression_ratio(h, nodes),
            _ => None,
        }
    }
}

/// Runs one method on one instance, turning timeouts and refusals into records.
pub fn run_one(entry: &CorpusEntry, method: Method, settings: &SolveSettings) -> Result<BenchRecord> {
    let mut record = BenchRecord {
        instance_id: entry.id.clone(),
        seed: entry.config.seed,
        m: entry.config.m,
        n: entry.config.n,
        p: entry.config.p,
        method,
        status: Status::Solved,
        time_ms: 0,
        count: None,
        zdd_nodes: None,
        zdd_peak_nodes: None,
        bnb_calls: None,
        bnb_found: None,
    };
    let inst = &entry.instance;
    match method {
        Method::Zdd => match solve(inst, settings.order, settings.pair_order, Some(settings.timeout))? {
            BuildOutcome::Complete(sol) => {
                record.time_ms = sol.stats.wall_time.as_millis();
                record.count = Some(sol.count());
                record.zdd_nodes = Some(sol.stats.final_nodes);
                record.zdd_peak_nodes = Some(sol.stats.peak_nodes);
            }
            BuildOutcome::TimedOut(stats) => {
                record.status = Status::Timeout;
                record.time_ms = stats.wall_time.as_millis();
                record.zdd_peak_nodes = Some(stats.peak_nodes);
            }
        },
        Method::Bnb => {
            let stats = bnb_count(inst, Some(settings.timeout));
            record.time_ms = stats.wall_time.as_millis();
            record.bnb_calls = Some(stats.calls);
            if stats.completed {
                record.count = Some(stats.found.clone());
            } else {
                record.status = Status::Timeout;
            }
            record.bnb_found = Some(stats.found);
        }
        Method::Brute => {
            let started = std::time::Instant::now();
            match brute_force_solutions(inst, settings.brute_cap) {
                Ok(sols) => record.count = Some(BigUint::from(sols.len())),
                Err(Error::Refused(_)) => record.status = Status::Refused,
                Err(e) => return Err(e),
            }
            record.time_ms = started.elapsed().as_millis();
        }
    }
    Ok(record)
}

/// Runs every (instance, method) pair; records come back in corpus order
/// regardless of `jobs`.
pub fn run_bench(cfg: &BenchConfig, jobs: usize) -> Result<Vec<BenchRecord>> {
    use rayon::prelude::*;

    let corpus = cfg.corpus()?;
    let tasks: Vec<(&CorpusEntry, Method)> = corpus
        .iter()
        .flat_map(|e| cfg.methods.iter().map(move |&m| (e, m)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::usage(e.to_string()))?;
    pool.install(|| {
        tasks
            .par_iter()
            .map(|(entry, method)| run_one(entry, *method, &cfg.settings))
            .collect()
    })
}

fn log10_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("finite below 2^1000").log10();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64-bit prefix");
    top.log10() + shift as f64 * std::f64::consts::LOG10_2
}

/// `log10(nodes / h)`; `None` when `h = 0`.
pub fn compression_ratio(h: &BigUint, nodes: usize) -> Option<f64> {
    if h == &BigUint::ZERO || nodes == 0 {
        return None;
    }
    Some((nodes as f64).log10() - log10_big(h))
}

/// Mean and sample standard deviation; `None` for an empty slice.
pub fn mean_and_sd(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let sd = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    Some((mean, sd))
}

/// Per-cell summary: solved counts per method and the compression ratio
/// statistics of the zdd solves.
pub fn summarize(records: &[BenchRecord]) -> String {
    let mut cells: Vec<(usize, usize, String)> = Vec::new();
    for r in records {
        let key = (r.m, r.n, r.p.to_string());
        if !cells.contains(&key) {
            cells.push(key);
        }
    }
    let mut out = String::from("m\tn\tp\tmethod\tsolved\ttotal\tratio_mean\tratio_sd\n");
    for (m, n, p) in cells {
        let in_cell: Vec<&BenchRecord> = records
            .iter()
            .filter(|r| r.m == m && r.n == n && r.p.to_string() == p)
            .collect();
        let mut methods: Vec<Method> = Vec::new();
        for r in &in_cell {
            if !methods.contains(&r.method) {
                methods.push(r.method);
            }
        }
        for method in methods {
            let rows: Vec<&&BenchRecord> = in_cell.iter().filter(|r| r.method == method).collect();
            let solved = rows.iter().filter(|r| r.status == Status::Solved).count();
            let ratios: Vec<f64> = rows.iter().filter_map(|r| r.compression_ratio()).collect();
            let (mean, sd) = match mean_and_sd(&ratios) {
                Some((mean, sd)) => (format!("{mean:.2}"), format!("{sd:.2}")),
                None => (String::new(), String::new()),
            };
            out.push_str(&format!(
                "{m}\t{n}\t{p}\t{method}\t{solved}\t{}\t{mean}\t{sd}\n",
                rows.len()
            ));
        }
    }
    out
}
