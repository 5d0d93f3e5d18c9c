//! The train/probe evaluation protocol: for every split seed, split the
//! data, build neighbor tables and cores on the training side only, then
//! evaluate every (algorithm, core, r, L) cell.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::eval::{evaluate_system, EvalOptions};
use crate::fmt::sig;
use crate::graph::{split_train_probe, BipartiteGraph, InteractionList};
use crate::info_core::UserRanking;
use crate::io::{load_edge_list, write_atomic};
use crate::par::Execution;
use crate::recommend::{Algorithm, CandidatePool};
use crate::similarity::NeighborTable;

pub const CSV_HEADER: &str = "seed,algorithm,params,core_method,N,r,K,lambda,L,users_evaluated,users_skipped,recall,retention_ratio,scoring_ms";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeedLabel {
    Seed(u64),
    Mean,
    Std,
}

impl std::fmt::Display for SeedLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeedLabel::Seed(s) => write!(f, "{s}"),
            SeedLabel::Mean => f.write_str("mean"),
            SeedLabel::Std => f.write_str("std"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub seed: SeedLabel,
    pub algorithm: &'static str,
    pub params: String,
    pub core_method: &'static str,
    pub table_size: Option<usize>,
    pub r: Option<f64>,
    pub k: Option<usize>,
    pub lambda: Option<f64>,
    pub length: usize,
    pub users_evaluated: f64,
    pub users_skipped: f64,
    /// `None` when the cell failed.
    pub recall: Option<f64>,
    pub retention: Option<f64>,
    pub scoring_ms: Option<f64>,
    pub error: Option<String>,
}

impl ReportRow {
    fn cell_key(&self) -> String {
        format!(
            "{}|{}|{}|{:?}|{:?}|{:?}|{:?}|{}",
            self.algorithm,
            self.params,
            self.core_method,
            self.table_size,
            self.r.map(f64::to_bits),
            self.k,
            self.lambda.map(f64::to_bits),
            self.length
        )
    }

    fn baseline_key(&self) -> String {
        format!(
            "{}|{}|{:?}|{:?}|{}",
            self.algorithm,
            self.params,
            self.k,
            self.lambda.map(f64::to_bits),
            self.length
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentReport {
    /// Per-seed rows in evaluation order, then `mean` and `std` rows per cell.
    pub rows: Vec<ReportRow>,
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

fn na(v: Option<f64>) -> String {
    v.map(|x| sig(x, 6)).unwrap_or_else(|| "NA".to_owned())
}

impl ExperimentReport {
    pub fn per_seed(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| matches!(r.seed, SeedLabel::Seed(_)))
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.error.is_some())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(128 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            let seed = &row.seed;
            let _ = writeln!(
                out,
                "{seed},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                row.algorithm,
                row.params,
                row.core_method,
                opt(row.table_size, |n| n.to_string()),
                opt(row.r, |r| sig(r, 6)),
                opt(row.k, |k| k.to_string()),
                opt(row.lambda, |l| sig(l, 6)),
                row.length,
                sig(row.users_evaluated, 6),
                sig(row.users_skipped, 6),
                na(row.recall),
                na(row.retention),
                na(row.scoring_ms),
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let csv = self.to_csv();
        write_atomic(path, |w| std::io::Write::write_all(w, csv.as_bytes()))
    }

    fn add_aggregates(&mut self) {
        let mut order: Vec<String> = Vec::new();
        let mut groups: HashMap<String, Vec<&ReportRow>> = HashMap::new();
        for row in self.per_seed() {
            let key = row.cell_key();
            groups
                .entry(key.clone())
                .or_insert_with(|| {
                    order.push(key);
                    Vec::new()
                })
                .push(row);
        }
        // mean recall of each unrestricted cell, for the retention of mean rows
        let mut baseline_mean: HashMap<String, f64> = HashMap::new();
        for key in &order {
            let rows = &groups[key];
            if rows[0].core_method == "none" {
                if let Some(m) = mean(rows.iter().filter_map(|r| r.recall)) {
                    baseline_mean.insert(rows[0].baseline_key(), m);
                }
            }
        }
        let mut extra = Vec::with_capacity(2 * order.len());
        for key in &order {
            let rows = &groups[key];
            let proto = rows[0];
            let ok: Vec<&&ReportRow> = rows.iter().filter(|r| r.recall.is_some()).collect();
            let col = |f: &dyn Fn(&ReportRow) -> Option<f64>| -> Vec<f64> {
                ok.iter().filter_map(|r| f(r)).collect()
            };
            let recalls = col(&|r| r.recall);
            let retentions = col(&|r| r.retention);
            let timings = col(&|r| r.scoring_ms);
            let evaluated = col(&|r| Some(r.users_evaluated));
            let skipped = col(&|r| Some(r.users_skipped));
            let mean_recall = mean(recalls.iter().copied());
            let mean_retention = match (mean_recall, baseline_mean.get(&proto.baseline_key())) {
                (Some(m), Some(&b)) if b > 0.0 => Some(m / b),
                _ => None,
            };
            let base = ReportRow {
                error: None,
                ..proto.clone()
            };
            extra.push(ReportRow {
                seed: SeedLabel::Mean,
                users_evaluated: mean(evaluated.iter().copied()).unwrap_or(0.0),
                users_skipped: mean(skipped.iter().copied()).unwrap_or(0.0),
                recall: mean_recall,
                retention: mean_retention,
                scoring_ms: mean(timings.iter().copied()),
                ..base.clone()
            });
            extra.push(ReportRow {
                seed: SeedLabel::Std,
                users_evaluated: std_dev(&evaluated).unwrap_or(0.0),
                users_skipped: std_dev(&skipped).unwrap_or(0.0),
                recall: std_dev(&recalls),
                retention: std_dev(&retentions),
                scoring_ms: std_dev(&timings),
                ..base
            });
        }
        self.rows.extend(extra);
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Sample standard deviation; 0 for a single value.
fn std_dev(values: &[f64]) -> Option<f64> {
    let m = mean(values.iter().copied())?;
    if values.len() < 2 {
        return Some(0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
    Some((ss / (values.len() - 1) as f64).sqrt())
}

fn params_of(algorithm: &Algorithm) -> String {
    match algorithm {
        Algorithm::Knnmd { strategy, pool, .. } => {
            let pool = match pool {
                CandidatePool::CoOccurring => "cooccurring",
                CandidatePool::AllUsers => "all",
            };
            format!("strategy={};pool={pool}", strategy.name())
        }
        _ => String::new(),
    }
}

/// Loads the configured dataset and runs the protocol.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let path = cfg
        .dataset
        .as_ref()
        .ok_or_else(|| Error::Config("dataset: no path given".into()))?;
    let loaded = load_edge_list(path)?;
    run_on(&loaded.interactions, cfg, Execution::default())
}

/// Runs the protocol on in-memory interactions.
pub fn run_on(
    interactions: &InteractionList,
    cfg: &ExperimentConfig,
    exec: Execution,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let graph = BipartiteGraph::build(interactions)?;
    let opts = EvalOptions {
        execution: exec,
        zero_fill_skipped: cfg.zero_fill_skipped,
    };
    let mut report = ExperimentReport::default();
    for &seed in &cfg.seeds {
        run_seed(&graph, cfg, seed, &opts, &mut report.rows)?;
    }
    report.add_aggregates();
    Ok(report)
}

fn run_seed(
    graph: &BipartiteGraph,
    cfg: &ExperimentConfig,
    seed: u64,
    opts: &EvalOptions,
    rows: &mut Vec<ReportRow>,
) -> Result<()> {
    let split = split_train_probe(graph, cfg.split_ratio, seed)?;
    let train = &split.train;
    let algorithms = cfg.algorithm_cells(seed);

    let algo_table_size = algorithms
        .iter()
        .filter(|a| a.needs_table())
        .filter_map(Algorithm::k)
        .max();
    let core_table_needed = cfg
        .core_methods
        .iter()
        .any(|m| m.with_seed(seed).needs_table());
    let shared_size = algo_table_size
        .unwrap_or(0)
        .max(if core_table_needed { cfg.table_size } else { 0 });
    let shared = (shared_size > 0)
        .then(|| NeighborTable::build_with(train, shared_size, None, opts.execution))
        .transpose()?;
    let core_table = match &shared {
        Some(t) if core_table_needed && t.size() != cfg.table_size => {
            Some(NeighborTable::build_with(train, cfg.table_size, None, opts.execution)?)
        }
        _ => None,
    };
    let core_table = core_table.as_ref().or(shared.as_ref());

    let mut baseline: HashMap<String, f64> = HashMap::new();
    let cell = |algorithm: &Algorithm,
                length: usize,
                core: Option<&crate::info_core::CoreSet>,
                table: Option<&NeighborTable>| {
        let result = evaluate_system(train, split.probe(), algorithm, length, core, table, opts);
        let mut row = ReportRow {
            seed: SeedLabel::Seed(seed),
            algorithm: algorithm.name(),
            params: params_of(algorithm),
            core_method: core.map_or("none", |c| c.method.name()),
            table_size: core.and_then(|c| c.table_size),
            r: core.map(|c| c.r),
            k: algorithm.k(),
            lambda: match algorithm {
                Algorithm::Hybrid { lambda } => Some(*lambda),
                _ => None,
            },
            length,
            users_evaluated: 0.0,
            users_skipped: 0.0,
            recall: None,
            retention: None,
            scoring_ms: None,
            error: None,
        };
        match result {
            Ok(res) => {
                row.users_evaluated = res.users_evaluated as f64;
                row.users_skipped = res.users_skipped() as f64;
                row.recall = Some(res.recall);
                row.scoring_ms = cfg.timing.then_some(res.scoring_time.as_secs_f64() * 1e3);
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        row
    };

    for algorithm in &algorithms {
        for &length in &cfg.lengths {
            let mut row = cell(algorithm, length, None, shared.as_ref());
            if let Some(r) = row.recall {
                baseline.insert(row.baseline_key(), r);
                row.retention = Some(1.0);
            }
            rows.push(row);
        }
    }

    for kind in &cfg.core_methods {
        let ranking = UserRanking::new(train, core_table, kind.with_seed(seed))?;
        for &r in &cfg.r_grid {
            let core = ranking.core(r)?;
            // neighbor lists ranked among core users only
            let restricted = algo_table_size
                .map(|n| NeighborTable::build_with(train, n, Some(core.mask()), opts.execution))
                .transpose()?;
            for algorithm in &algorithms {
                for &length in &cfg.lengths {
                    let mut row = cell(algorithm, length, Some(&core), restricted.as_ref());
                    row.retention = match (row.recall, baseline.get(&row.baseline_key())) {
                        (Some(x), Some(&b)) if b > 0.0 => Some(x / b),
                        _ => None,
                    };
                    rows.push(row);
                }
            }
        }
    }
    Ok(())
}
