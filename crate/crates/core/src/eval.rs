//! Recall of top-L recommendation lists against held-out probe links.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, ObjectId, UserId};
use crate::info_core::CoreSet;
use crate::par::{self, Execution};
use crate::recommend::{top_l, Algorithm, Diffuser, RecList, Scorer};
use crate::similarity::NeighborTable;

/// `d_i(L) / E_i`: the fraction of the user's probe objects (sorted
/// ascending) found in the list.
pub fn recall_user(rec: &RecList, probe: &[ObjectId]) -> Result<f64> {
    if probe.is_empty() {
        return Err(Error::UndefinedRecall);
    }
    let hits = rec
        .items
        .iter()
        .filter(|o| probe.binary_search(o).is_ok())
        .count();
    Ok(hits as f64 / probe.len() as f64)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EvalOptions {
    pub execution: Execution,
    /// Average over every user, counting skipped users as zero recall,
    /// instead of over evaluable users only.
    pub zero_fill_skipped: bool,
}

/// System-level recall for one configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemRecall {
    pub recall: f64,
    pub users_evaluated: usize,
    /// Users without probe links (recall undefined).
    pub skipped_no_probe: usize,
    /// Users with probe links but no training links (nothing to diffuse).
    pub skipped_empty_profile: usize,
    /// Lists that needed zero-score padding to reach length L.
    pub padded_lists: usize,
    /// Scoring plus list construction.
    pub scoring_time: Duration,
}

impl SystemRecall {
    pub fn users_skipped(&self) -> usize {
        self.skipped_no_probe + self.skipped_empty_profile
    }
}

enum Outcome {
    NoProbe,
    EmptyProfile,
    Scored { recall: f64, padded: bool },
}

/// Averages per-user recall over all users with probe links and a non-empty
/// training profile. Per-user values are summed in user-id order, so the
/// result does not depend on the worker count.
pub fn evaluate_system(
    train: &BipartiteGraph,
    probe: &[Vec<ObjectId>],
    algorithm: &Algorithm,
    length: usize,
    core: Option<&CoreSet>,
    table: Option<&NeighborTable>,
    opts: &EvalOptions,
) -> Result<SystemRecall> {
    algorithm.validate()?;
    if length == 0 {
        return Err(Error::param("recommendation length L must be >= 1"));
    }
    if probe.len() != train.n_users() {
        return Err(Error::param("probe sets do not match the training graph"));
    }
    if algorithm.needs_table() && table.is_none() {
        return Err(Error::MissingTable(algorithm.name()));
    }
    let mut scorer = Scorer::new(train);
    if let Some(t) = table {
        scorer = scorer.with_table(t);
    }
    if let Some(c) = core {
        if c.mask().len() != train.n_users() {
            return Err(Error::param("core does not match the training graph"));
        }
        scorer = scorer.with_mask(c.mask());
    }

    let start = Instant::now();
    let outcomes = par::map_range_with(
        opts.execution,
        train.n_users(),
        || Diffuser::new(train.n_users()),
        |scratch, u| -> Result<Outcome> {
            let user = u as UserId;
            let items = &probe[u];
            if items.is_empty() {
                return Ok(Outcome::NoProbe);
            }
            if train.user_degree(user) == 0 {
                return Ok(Outcome::EmptyProfile);
            }
            let scores = scorer.score(algorithm, user, scratch)?;
            let rec = top_l(&scores, train.objects_of(user), length)?;
            Ok(Outcome::Scored {
                recall: recall_user(&rec, items)?,
                padded: rec.padded > 0,
            })
        },
    );
    let scoring_time = start.elapsed();

    let mut sum = 0.0;
    let mut out = SystemRecall {
        recall: 0.0,
        users_evaluated: 0,
        skipped_no_probe: 0,
        skipped_empty_profile: 0,
        padded_lists: 0,
        scoring_time,
    };
    for outcome in outcomes {
        match outcome? {
            Outcome::NoProbe => out.skipped_no_probe += 1,
            Outcome::EmptyProfile => out.skipped_empty_profile += 1,
            Outcome::Scored { recall, padded } => {
                sum += recall;
                out.users_evaluated += 1;
                out.padded_lists += padded as usize;
            }
        }
    }
    if out.users_evaluated == 0 {
        return Err(Error::NoEvaluableUsers);
    }
    let denom = if opts.zero_fill_skipped {
        train.n_users()
    } else {
        out.users_evaluated
    };
    out.recall = sum / denom as f64;
    Ok(out)
}
