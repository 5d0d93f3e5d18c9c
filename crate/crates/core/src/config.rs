//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comments start with '#'
//! dataset      = data/ratings.tsv
//! seeds        = 1,2,3,4,5
//! algorithms   = md, hybrid, knnmd, ucf
//! lambda       = 0.8
//! k            = 20
//! strategy     = similarity
//! core_methods = rank, frequency, degree, random
//! r            = 0.1:1.0:0.1
//! output       = report.csv
//! ```
//!
//! List values are comma-separated; numeric lists also accept inclusive
//! `start:end:step` ranges. Keys set later (including command-line
//! overrides applied through [`ExperimentConfig::set`]) win.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::info_core::CoreMethod;
use crate::recommend::{Algorithm, CandidatePool, SelectionStrategy};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgorithmKind {
    Md,
    Hybrid,
    Knnmd,
    Ucf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StrategyKind {
    Random,
    Degree,
    Resource,
    Similarity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoreMethodKind {
    Degree,
    Random,
    Frequency,
    Rank,
}

impl CoreMethodKind {
    /// Random cores draw from the split seed.
    pub fn with_seed(self, seed: u64) -> CoreMethod {
        match self {
            CoreMethodKind::Degree => CoreMethod::Degree,
            CoreMethodKind::Random => CoreMethod::Random { seed },
            CoreMethodKind::Frequency => CoreMethod::Frequency,
            CoreMethodKind::Rank => CoreMethod::Rank,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: Option<PathBuf>,
    pub split_ratio: f64,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<AlgorithmKind>,
    pub lambdas: Vec<f64>,
    pub ks: Vec<usize>,
    pub strategies: Vec<StrategyKind>,
    pub pool: CandidatePool,
    pub lengths: Vec<usize>,
    /// `N` of the neighbor tables used for frequency/rank cores.
    pub table_size: usize,
    pub core_methods: Vec<CoreMethodKind>,
    pub r_grid: Vec<f64>,
    pub output: Option<PathBuf>,
    /// When false, the `scoring_ms` column is written as `NA` so reports are
    /// byte-stable across runs.
    pub timing: bool,
    pub zero_fill_skipped: bool,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            split_ratio: 0.8,
            seeds: vec![1, 2, 3, 4, 5],
            algorithms: vec![AlgorithmKind::Md],
            lambdas: vec![0.8],
            ks: vec![20],
            strategies: vec![StrategyKind::Similarity],
            pool: CandidatePool::CoOccurring,
            lengths: vec![20],
            table_size: 20,
            core_methods: Vec::new(),
            r_grid: Vec::new(),
            output: None,
            timing: true,
            zero_fill_skipped: false,
            threads: None,
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_num<T: std::str::FromStr>(key: &str, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| cfg_err(format!("{key}: cannot parse `{s}`")))
}

/// Comma-separated values and inclusive `start:end:step` ranges.
pub fn parse_grid(key: &str, value: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for item in split_list(value) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [single] => out.push(parse_num(key, single)?),
            [start, end, step] => {
                let (a, b, s): (f64, f64, f64) =
                    (parse_num(key, start)?, parse_num(key, end)?, parse_num(key, step)?);
                if s.is_nan() || s <= 0.0 || b < a {
                    return Err(cfg_err(format!("{key}: bad range `{item}`")));
                }
                let count = ((b - a) / s + 1e-9).floor() as usize + 1;
                // snap to 12 decimals so 0.1 + 2·0.1 prints as 0.3
                out.extend((0..count).map(|i| ((a + i as f64 * s) * 1e12).round() / 1e12));
            }
            _ => return Err(cfg_err(format!("{key}: bad value `{item}`"))),
        }
    }
    if out.is_empty() {
        return Err(cfg_err(format!("{key}: empty list")));
    }
    Ok(out)
}

fn parse_int_grid(key: &str, value: &str) -> Result<Vec<usize>> {
    parse_grid(key, value)?
        .into_iter()
        .map(|x| {
            if x >= 0.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(cfg_err(format!("{key}: `{x}` is not a non-negative integer")))
            }
        })
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        other => Err(cfg_err(format!("{key}: expected a boolean, got `{other}`"))),
    }
}

fn parse_names<T>(key: &str, value: &str, f: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    let out = split_list(value)
        .map(|name| f(name).ok_or_else(|| cfg_err(format!("{key}: unknown value `{name}`"))))
        .collect::<Result<Vec<_>>>()?;
    if out.is_empty() {
        return Err(cfg_err(format!("{key}: empty list")));
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| cfg_err(format!("line {}: expected `key = value`", idx + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| cfg_err(format!("line {}: {}", idx + 1, e)))?;
        }
        Ok(cfg)
    }

    /// Reads a config file; a relative `dataset` or `output` path is resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.dataset, &mut cfg.output].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "dataset" => self.dataset = Some(PathBuf::from(value)),
            "output" => self.output = Some(PathBuf::from(value)),
            "split_ratio" => self.split_ratio = parse_num(key, value)?,
            "seeds" => {
                self.seeds = split_list(value)
                    .map(|s| parse_num(key, s))
                    .collect::<Result<_>>()?
            }
            "algorithms" => {
                self.algorithms = parse_names(key, value, |s| match s {
                    "md" => Some(AlgorithmKind::Md),
                    "hybrid" => Some(AlgorithmKind::Hybrid),
                    "knnmd" => Some(AlgorithmKind::Knnmd),
                    "ucf" => Some(AlgorithmKind::Ucf),
                    _ => None,
                })?
            }
            "lambda" => self.lambdas = parse_grid(key, value)?,
            "k" => self.ks = parse_int_grid(key, value)?,
            "strategy" => {
                self.strategies = parse_names(key, value, |s| match s {
                    "random" => Some(StrategyKind::Random),
                    "degree" => Some(StrategyKind::Degree),
                    "resource" => Some(StrategyKind::Resource),
                    "similarity" => Some(StrategyKind::Similarity),
                    _ => None,
                })?
            }
            "pool" => {
                self.pool = match value {
                    "cooccurring" => CandidatePool::CoOccurring,
                    "all" => CandidatePool::AllUsers,
                    _ => return Err(cfg_err(format!("pool: unknown value `{value}`"))),
                }
            }
            "L" | "length" => self.lengths = parse_int_grid(key, value)?,
            "n" | "table_size" => self.table_size = parse_num(key, value)?,
            "core_methods" => {
                self.core_methods = if value.trim() == "none" {
                    Vec::new()
                } else {
                    parse_names(key, value, |s| match s {
                        "degree" => Some(CoreMethodKind::Degree),
                        "random" => Some(CoreMethodKind::Random),
                        "frequency" => Some(CoreMethodKind::Frequency),
                        "rank" => Some(CoreMethodKind::Rank),
                        _ => None,
                    })?
                }
            }
            "r" => self.r_grid = parse_grid(key, value)?,
            "timing" => self.timing = parse_bool(key, value)?,
            "zero_fill_skipped" => self.zero_fill_skipped = parse_bool(key, value)?,
            "threads" => self.threads = Some(parse_num(key, value)?),
            other => return Err(cfg_err(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(cfg_err("split_ratio must lie in (0, 1)"));
        }
        if self.seeds.is_empty() {
            return Err(cfg_err("seeds: at least one seed is required"));
        }
        if self.algorithms.is_empty() {
            return Err(cfg_err("algorithms: at least one algorithm is required"));
        }
        if self.lambdas.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(cfg_err("lambda values must lie in [0, 1]"));
        }
        if self.ks.contains(&0) {
            return Err(cfg_err("k values must be >= 1"));
        }
        if self.lengths.is_empty() || self.lengths.contains(&0) {
            return Err(cfg_err("L values must be >= 1"));
        }
        if self.table_size == 0 {
            return Err(cfg_err("n (neighbor table size) must be >= 1"));
        }
        if self.r_grid.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
            return Err(cfg_err("r values must lie in (0, 1]"));
        }
        if !self.core_methods.is_empty() && self.r_grid.is_empty() {
            return Err(cfg_err("core_methods given without an r grid"));
        }
        if self.threads == Some(0) {
            return Err(cfg_err("threads must be >= 1"));
        }
        Ok(())
    }

    /// Every concrete algorithm cell of the sweep. Random KNN selection draws
    /// from the split seed.
    pub fn algorithm_cells(&self, split_seed: u64) -> Vec<Algorithm> {
        let mut out = Vec::new();
        for kind in &self.algorithms {
            match kind {
                AlgorithmKind::Md => out.push(Algorithm::MassDiffusion),
                AlgorithmKind::Hybrid => {
                    out.extend(self.lambdas.iter().map(|&lambda| Algorithm::Hybrid { lambda }))
                }
                AlgorithmKind::Knnmd => {
                    for &k in &self.ks {
                        for s in &self.strategies {
                            let strategy = match s {
                                StrategyKind::Random => SelectionStrategy::Random { seed: split_seed },
                                StrategyKind::Degree => SelectionStrategy::Degree,
                                StrategyKind::Resource => SelectionStrategy::Resource,
                                StrategyKind::Similarity => SelectionStrategy::Similarity,
                            };
                            out.push(Algorithm::Knnmd {
                                k,
                                strategy,
                                pool: self.pool,
                            });
                        }
                    }
                }
                AlgorithmKind::Ucf => out.extend(self.ks.iter().map(|&k| Algorithm::Ucf { k })),
            }
        }
        out
    }
}
