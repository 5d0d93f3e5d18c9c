//! Information-core extraction.
//!
//! Every method reduces to an ordering of all users; the core at ratio `r`
//! is the first `round(r·n)` users of that ordering. For the degree,
//! frequency and rank methods the ordering is by weight descending then id
//! ascending, so cores at growing `r` are nested.

use std::io::Write;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::fmt::sig;
use crate::graph::{BipartiteGraph, UserId};
use crate::recommend::{Algorithm, Diffuser, ScoreVector, Scorer};
use crate::rng::seeded;
use crate::similarity::NeighborTable;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoreMethod {
    /// Largest user degree.
    Degree,
    Random { seed: u64 },
    /// Number of other users' top-N lists the user appears in.
    Frequency,
    /// Sum of `1/p` over the top-N lists containing the user at position `p`.
    Rank,
}

impl CoreMethod {
    pub fn name(&self) -> &'static str {
        match self {
            CoreMethod::Degree => "degree",
            CoreMethod::Random { .. } => "random",
            CoreMethod::Frequency => "frequency",
            CoreMethod::Rank => "rank",
        }
    }

    pub fn needs_table(&self) -> bool {
        matches!(self, CoreMethod::Frequency | CoreMethod::Rank)
    }
}

/// `round(r·n)`, the number of users in a core at ratio `r`.
pub fn core_size(r: f64, n_users: usize) -> usize {
    (r * n_users as f64).round() as usize
}

fn check_ratio(r: f64) -> Result<()> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::param(format!("core ratio r must lie in (0, 1], got {r}")));
    }
    Ok(())
}

/// All users ordered by relevance under one method.
#[derive(Clone, Debug, PartialEq)]
pub struct UserRanking {
    pub method: CoreMethod,
    pub table_size: Option<usize>,
    order: Vec<UserId>,
    weights: Option<Vec<f64>>,
}

impl UserRanking {
    pub fn new(g: &BipartiteGraph, table: Option<&NeighborTable>, method: CoreMethod) -> Result<Self> {
        let n = g.n_users();
        let (weights, exact): (Vec<f64>, Option<Vec<u128>>) = match method {
            CoreMethod::Random { seed } => {
                let mut order: Vec<UserId> = (0..n as UserId).collect();
                order.shuffle(&mut seeded(seed));
                return Ok(Self {
                    method,
                    table_size: None,
                    order,
                    weights: None,
                });
            }
            CoreMethod::Degree => ((0..n as UserId).map(|u| g.user_degree(u) as f64).collect(), None),
            CoreMethod::Frequency | CoreMethod::Rank => {
                let table = table.ok_or(Error::MissingTable("frequency/rank core extraction"))?;
                if table.n_users() != n {
                    return Err(Error::param("neighbor table does not match the graph"));
                }
                if method == CoreMethod::Frequency {
                    (appearance_counts(table), None)
                } else {
                    rank_weights(table)
                }
            }
        };
        let mut order: Vec<UserId> = (0..n as UserId).collect();
        match &exact {
            Some(w) => order.sort_by(|&a, &b| w[b as usize].cmp(&w[a as usize]).then(a.cmp(&b))),
            None => order.sort_by(|&a, &b| {
                weights[b as usize]
                    .total_cmp(&weights[a as usize])
                    .then(a.cmp(&b))
            }),
        }
        Ok(Self {
            method,
            table_size: table.filter(|_| method.needs_table()).map(|t| t.size()),
            order,
            weights: Some(weights),
        })
    }

    /// Users from most to least relevant.
    pub fn order(&self) -> &[UserId] {
        &self.order
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// The core at ratio `r`.
    pub fn core(&self, r: f64) -> Result<CoreSet> {
        check_ratio(r)?;
        let n = self.order.len();
        let members = self.order[..core_size(r, n)].to_vec();
        let mut mask = vec![false; n];
        for &u in &members {
            mask[u as usize] = true;
        }
        Ok(CoreSet {
            members,
            mask,
            method: self.method,
            r,
            table_size: self.table_size,
            weights: self.weights.clone(),
        })
    }
}

fn appearance_counts(table: &NeighborTable) -> Vec<f64> {
    let mut counts = vec![0u64; table.n_users()];
    for j in 0..table.n_users() as UserId {
        for nb in table.neighbors(j) {
            counts[nb.user as usize] += 1;
        }
    }
    counts.into_iter().map(|c| c as f64).collect()
}

/// `w_i = Σ 1/p_ij`. Also summed exactly as integer multiples of
/// `1/lcm(1..=N)` when that fits in `u128`, so equal rational weights tie
/// exactly; very large `N` falls back to `f64` sums only.
fn rank_weights(table: &NeighborTable) -> (Vec<f64>, Option<Vec<u128>>) {
    let n = table.n_users();
    let longest = (0..n as UserId)
        .map(|j| table.neighbors(j).len())
        .max()
        .unwrap_or(0)
        .max(1);
    let scale = (1..=longest as u128).try_fold(1u128, |acc, p| {
        let g = gcd(acc, p);
        (acc / g).checked_mul(p)
    });
    match scale.filter(|s| s.checked_mul(n as u128 + 1).is_some()) {
        Some(scale) => {
            let mut w = vec![0u128; n];
            for j in 0..n as UserId {
                for (pos, nb) in table.neighbors(j).iter().enumerate() {
                    w[nb.user as usize] += scale / (pos as u128 + 1);
                }
            }
            let approx = w.iter().map(|&x| x as f64 / scale as f64).collect();
            (approx, Some(w))
        }
        None => {
            let mut w = vec![0f64; n];
            for j in 0..n as UserId {
                for (pos, nb) in table.neighbors(j).iter().enumerate() {
                    w[nb.user as usize] += 1.0 / (pos + 1) as f64;
                }
            }
            (w, None)
        }
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// A set of core users and the method that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct CoreSet {
    /// Members in selection order (most relevant first).
    members: Vec<UserId>,
    mask: Vec<bool>,
    pub method: CoreMethod,
    pub r: f64,
    pub table_size: Option<usize>,
    weights: Option<Vec<f64>>,
}

impl CoreSet {
    pub fn members(&self) -> &[UserId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, user: UserId) -> bool {
        self.mask[user as usize]
    }

    /// Membership indexed by user id.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Selection weight of every user, when the method has one.
    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// One line per member, `user-token<TAB>weight`, most relevant first.
    /// Methods without weights print `NA`.
    pub fn write_dump(&self, g: &BipartiteGraph, mut out: impl Write) -> std::io::Result<()> {
        for &u in &self.members {
            match &self.weights {
                Some(w) => writeln!(out, "{}\t{}", g.user_token(u), sig(w[u as usize], 12))?,
                None => writeln!(out, "{}\tNA", g.user_token(u))?,
            }
        }
        Ok(())
    }
}

/// Extracts the core of size `round(r·n)`.
pub fn extract_core(
    g: &BipartiteGraph,
    table: Option<&NeighborTable>,
    method: CoreMethod,
    r: f64,
) -> Result<CoreSet> {
    check_ratio(r)?;
    UserRanking::new(g, table, method)?.core(r)
}

/// Scores `target` with only core users on the user side. Targets outside
/// the core are still served. For similarity-based selections `table`
/// should rank neighbors among core users (see
/// [`NeighborTable::build_with`]); entries outside the core are skipped.
pub fn core_restricted_scores(
    g: &BipartiteGraph,
    core: &CoreSet,
    algorithm: &Algorithm,
    target: UserId,
    table: Option<&NeighborTable>,
) -> Result<ScoreVector> {
    if core.mask.len() != g.n_users() {
        return Err(Error::param("core does not match the graph"));
    }
    let mut scorer = Scorer::new(g).with_mask(&core.mask);
    if let Some(t) = table {
        scorer = scorer.with_table(t);
    }
    scorer.score(algorithm, target, &mut Diffuser::new(g.n_users()))
}
