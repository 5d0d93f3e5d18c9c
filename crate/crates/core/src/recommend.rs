//! Object scoring for one target user, and top-L list construction.
//!
//! All diffusion-style scorers share one two-pass kernel:
//!
//! 1. every object `β` the target collected sends `k_β^{-λ}` to each of its
//!    users, giving user-side resource `h_j`;
//! 2. every user that received resource spreads `h_j / k_j` to each of its
//!    objects, and the object side is finally scaled by `k_α^{-(1-λ)}`.
//!
//! With `λ = 1` this is mass diffusion, with `λ = 0` heat conduction. The
//! redistribution matrix is never materialized. Users can be masked out of
//! the user side (KNN selections, information cores); a masked user neither
//! receives nor redistributes anything.

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, MaskedUsers, ObjectId, UserId};
use crate::rng::derived;
use crate::similarity::NeighborTable;

/// Per-object scores for one target user.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreVector {
    pub target: UserId,
    scores: Vec<f64>,
}

impl ScoreVector {
    pub fn zeros(target: UserId, n_objects: usize) -> Self {
        Self {
            target,
            scores: vec![0.0; n_objects],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.scores
    }

    pub fn get(&self, object: ObjectId) -> f64 {
        self.scores[object as usize]
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.scores.iter().sum()
    }
}

/// How KNN mass diffusion picks the users allowed to redistribute.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelectionStrategy {
    /// Uniform draw; the per-target stream is derived from `seed` and the target id.
    Random { seed: u64 },
    /// Largest user degree.
    Degree,
    /// Largest resource received in the first diffusion pass.
    Resource,
    /// Head of the target's cosine neighbor list.
    Similarity,
}

impl SelectionStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            SelectionStrategy::Random { .. } => "random",
            SelectionStrategy::Degree => "degree",
            SelectionStrategy::Resource => "resource",
            SelectionStrategy::Similarity => "similarity",
        }
    }
}

/// Candidate users for the random and degree strategies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CandidatePool {
    /// Users sharing at least one object with the target.
    #[default]
    CoOccurring,
    /// Every user except the target. Users outside the co-occurring pool
    /// receive no resource, so choosing them only wastes slots.
    AllUsers,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborSelection {
    pub target: UserId,
    pub strategy: SelectionStrategy,
    pub k: usize,
    /// Selected users, ascending by id.
    pub chosen: Vec<UserId>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Algorithm {
    MassDiffusion,
    Hybrid { lambda: f64 },
    Knnmd {
        k: usize,
        strategy: SelectionStrategy,
        pool: CandidatePool,
    },
    Ucf { k: usize },
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::MassDiffusion => "md",
            Algorithm::Hybrid { .. } => "hybrid",
            Algorithm::Knnmd { .. } => "knnmd",
            Algorithm::Ucf { .. } => "ucf",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Algorithm::Hybrid { lambda } if !(0.0..=1.0).contains(&lambda) => {
                Err(Error::param(format!("lambda must lie in [0, 1], got {lambda}")))
            }
            Algorithm::Knnmd { k: 0, .. } | Algorithm::Ucf { k: 0 } => {
                Err(Error::param("neighbor count K must be >= 1"))
            }
            _ => Ok(()),
        }
    }

    /// Whether scoring needs a neighbor table.
    pub fn needs_table(&self) -> bool {
        matches!(
            self,
            Algorithm::Ucf { .. }
                | Algorithm::Knnmd {
                    strategy: SelectionStrategy::Similarity,
                    ..
                }
        )
    }

    pub fn k(&self) -> Option<usize> {
        match *self {
            Algorithm::Knnmd { k, .. } | Algorithm::Ucf { k } => Some(k),
            _ => None,
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match *self {
            Algorithm::Hybrid { lambda } => Some(lambda),
            Algorithm::MassDiffusion => Some(1.0),
            _ => None,
        }
    }
}

/// `k^{-e}`, exact for the two endpoints so that `λ = 1` reproduces mass
/// diffusion bit for bit.
#[inline]
fn inv_pow(k: usize, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e == 1.0 {
        1.0 / k as f64
    } else {
        (k as f64).powf(-e)
    }
}

/// Reusable user-side buffers for the diffusion kernel. One per worker.
#[derive(Debug)]
pub struct Diffuser {
    resource: Vec<f64>,
    touched: Vec<UserId>,
}

impl Diffuser {
    pub fn new(n_users: usize) -> Self {
        Self {
            resource: vec![0.0; n_users],
            touched: Vec::new(),
        }
    }

    fn ensure(&mut self, n_users: usize) {
        if self.resource.len() < n_users {
            self.resource.resize(n_users, 0.0);
        }
    }

    /// First pass: user-side resource, restricted to admitted users. With
    /// `index`, only the users it lists are visited at all.
    /// Leaves `touched` sorted ascending; the caller must call `clear`.
    fn gather(
        &mut self,
        g: &BipartiteGraph,
        index: Option<&MaskedUsers>,
        target: UserId,
        lambda: f64,
        admit: &impl Fn(UserId) -> bool,
    ) {
        self.ensure(g.n_users());
        for &beta in g.objects_of(target) {
            let w = inv_pow(g.object_degree(beta), lambda);
            let users = match index {
                Some(ix) => ix.users_of(beta),
                None => g.users_of(beta),
            };
            for &j in users {
                if !admit(j) {
                    continue;
                }
                let h = &mut self.resource[j as usize];
                if *h == 0.0 {
                    self.touched.push(j);
                }
                *h += w;
            }
        }
        self.touched.sort_unstable();
    }

    fn clear(&mut self) {
        for &j in &self.touched {
            self.resource[j as usize] = 0.0;
        }
        self.touched.clear();
    }

    /// Full two-pass diffusion with the user side limited to `admit`.
    pub(crate) fn spread(
        &mut self,
        g: &BipartiteGraph,
        index: Option<&MaskedUsers>,
        target: UserId,
        lambda: f64,
        admit: impl Fn(UserId) -> bool,
    ) -> ScoreVector {
        self.gather(g, index, target, lambda, &admit);
        let mut out = ScoreVector::zeros(target, g.n_objects());
        for &j in &self.touched {
            let share = self.resource[j as usize] / g.user_degree(j) as f64;
            for &alpha in g.objects_of(j) {
                out.scores[alpha as usize] += share;
            }
        }
        self.clear();
        if lambda != 1.0 {
            let e = 1.0 - lambda;
            for (alpha, s) in out.scores.iter_mut().enumerate() {
                if *s != 0.0 {
                    *s *= inv_pow(g.object_degree(alpha as ObjectId), e);
                }
            }
        }
        out
    }
}

fn check_target(g: &BipartiteGraph, target: UserId) -> Result<()> {
    if target as usize >= g.n_users() {
        return Err(Error::param(format!("user id {target} out of range")));
    }
    if g.user_degree(target) == 0 {
        return Err(Error::EmptyProfile(target));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::param(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    Ok(())
}

/// Mass diffusion scores `f' = W f` with `f` the target's profile.
pub fn md_scores(g: &BipartiteGraph, target: UserId) -> Result<ScoreVector> {
    hybrid_scores(g, target, 1.0)
}

/// Mass-diffusion / heat-conduction hybrid; `lambda = 1` is mass diffusion,
/// `lambda = 0` heat conduction.
pub fn hybrid_scores(g: &BipartiteGraph, target: UserId, lambda: f64) -> Result<ScoreVector> {
    check_lambda(lambda)?;
    check_target(g, target)?;
    Ok(Diffuser::new(g.n_users()).spread(g, None, target, lambda, |_| true))
}

/// Picks at most `k` users allowed to redistribute in KNN mass diffusion.
///
/// Only users for which `admit` holds are eligible; the target never is.
/// Ties are broken by ascending user id for every strategy.
#[allow(clippy::too_many_arguments)]
pub fn select_neighbors_in(
    g: &BipartiteGraph,
    target: UserId,
    k: usize,
    strategy: SelectionStrategy,
    pool: CandidatePool,
    table: Option<&NeighborTable>,
    admit: impl Fn(UserId) -> bool,
    scratch: &mut Diffuser,
) -> Result<NeighborSelection> {
    if k == 0 {
        return Err(Error::param("neighbor count K must be >= 1"));
    }
    if target as usize >= g.n_users() {
        return Err(Error::param(format!("user id {target} out of range")));
    }
    let eligible = |j: UserId| j != target && admit(j);
    let mut chosen: Vec<UserId> = match strategy {
        SelectionStrategy::Similarity => {
            let table = table.ok_or(Error::MissingTable("similarity-based neighbor selection"))?;
            if k > table.size() {
                return Err(Error::param(format!(
                    "K = {k} exceeds neighbor table size N = {}",
                    table.size()
                )));
            }
            table
                .neighbors(target)
                .iter()
                .map(|nb| nb.user)
                .filter(|&j| eligible(j))
                .take(k)
                .collect()
        }
        _ => {
            let mut cands: Vec<(UserId, f64)> = match pool {
                CandidatePool::AllUsers if strategy != SelectionStrategy::Resource => (0..g.n_users()
                    as UserId)
                    .filter(|&j| eligible(j))
                    .map(|j| (j, 0.0))
                    .collect(),
                _ => {
                    scratch.gather(g, None, target, 1.0, &eligible);
                    let c = scratch
                        .touched
                        .iter()
                        .map(|&j| (j, scratch.resource[j as usize]))
                        .collect();
                    scratch.clear();
                    c
                }
            };
            match strategy {
                SelectionStrategy::Random { seed } => {
                    let picks = rand::seq::index::sample(
                        &mut derived(seed, target as u64),
                        cands.len(),
                        k.min(cands.len()),
                    );
                    picks.into_iter().map(|i| cands[i].0).collect()
                }
                SelectionStrategy::Degree => {
                    take_top(&mut cands, k, |&(j, _)| g.user_degree(j) as f64)
                }
                SelectionStrategy::Resource => take_top(&mut cands, k, |&(_, h)| h),
                SelectionStrategy::Similarity => unreachable!(),
            }
        }
    };
    chosen.sort_unstable();
    Ok(NeighborSelection {
        target,
        strategy,
        k,
        chosen,
    })
}

fn take_top(
    cands: &mut [(UserId, f64)],
    k: usize,
    key: impl Fn(&(UserId, f64)) -> f64,
) -> Vec<UserId> {
    let order = |a: &(UserId, f64), b: &(UserId, f64)| key(b).total_cmp(&key(a)).then(a.0.cmp(&b.0));
    let k = k.min(cands.len());
    if k == 0 {
        return Vec::new();
    }
    cands.select_nth_unstable_by(k - 1, order);
    cands[..k].iter().map(|c| c.0).collect()
}

/// Unrestricted neighbor selection.
pub fn select_neighbors(
    g: &BipartiteGraph,
    target: UserId,
    k: usize,
    strategy: SelectionStrategy,
    table: Option<&NeighborTable>,
) -> Result<NeighborSelection> {
    select_neighbors_in(
        g,
        target,
        k,
        strategy,
        CandidatePool::CoOccurring,
        table,
        |_| true,
        &mut Diffuser::new(g.n_users()),
    )
}

/// Mass diffusion in which only the selected users redistribute.
pub fn knnmd_scores(
    g: &BipartiteGraph,
    target: UserId,
    selection: &NeighborSelection,
) -> Result<ScoreVector> {
    check_target(g, target)?;
    if selection.target != target {
        return Err(Error::param("neighbor selection was made for a different target"));
    }
    Ok(knnmd_with(g, selection, &mut Diffuser::new(g.n_users())))
}

pub(crate) fn knnmd_with(
    g: &BipartiteGraph,
    selection: &NeighborSelection,
    scratch: &mut Diffuser,
) -> ScoreVector {
    let chosen = &selection.chosen;
    scratch.spread(g, None, selection.target, 1.0, |j| chosen.binary_search(&j).is_ok())
}

/// User-based collaborative filtering: `p_α = Σ_{j ∈ top-K} s_ij a_jα`.
pub fn ucf_scores(
    g: &BipartiteGraph,
    target: UserId,
    k: usize,
    table: &NeighborTable,
) -> Result<ScoreVector> {
    ucf_scores_in(g, target, k, table, |_| true)
}

/// UCF with the neighbor list limited to admitted users.
pub fn ucf_scores_in(
    g: &BipartiteGraph,
    target: UserId,
    k: usize,
    table: &NeighborTable,
    admit: impl Fn(UserId) -> bool,
) -> Result<ScoreVector> {
    if k > table.size() {
        return Err(Error::param(format!(
            "K = {k} exceeds neighbor table size N = {}",
            table.size()
        )));
    }
    if target as usize >= g.n_users() || target as usize >= table.n_users() {
        return Err(Error::param(format!("user id {target} out of range")));
    }
    let mut out = ScoreVector::zeros(target, g.n_objects());
    for nb in table
        .neighbors(target)
        .iter()
        .filter(|nb| admit(nb.user))
        .take(k)
    {
        for &alpha in g.objects_of(nb.user) {
            out.scores[alpha as usize] += nb.similarity;
        }
    }
    Ok(out)
}

/// Scores objects for targets under one algorithm, optionally with the
/// user side limited to a mask (an information core).
#[derive(Clone, Debug)]
pub struct Scorer<'a> {
    graph: &'a BipartiteGraph,
    table: Option<&'a NeighborTable>,
    mask: Option<&'a [bool]>,
    masked_users: Option<MaskedUsers>,
}

impl<'a> Scorer<'a> {
    pub fn new(graph: &'a BipartiteGraph) -> Self {
        Self {
            graph,
            table: None,
            mask: None,
            masked_users: None,
        }
    }

    pub fn with_table(mut self, table: &'a NeighborTable) -> Self {
        self.table = Some(table);
        self
    }

    /// Restricts the user side to `mask[j] == true`; `mask` needs one entry
    /// per user.
    pub fn with_mask(mut self, mask: &'a [bool]) -> Self {
        self.masked_users = Some(MaskedUsers::new(self.graph, mask));
        self.mask = Some(mask);
        self
    }

    pub fn graph(&self) -> &'a BipartiteGraph {
        self.graph
    }

    /// Scores for `target`. Under a mask the target is excluded from the
    /// user side whatever its membership; it only ever redistributes onto its
    /// own profile, so rankings of uncollected objects are unaffected.
    pub fn score(
        &self,
        algorithm: &Algorithm,
        target: UserId,
        scratch: &mut Diffuser,
    ) -> Result<ScoreVector> {
        let g = self.graph;
        algorithm.validate()?;
        let mask = self.mask;
        let in_mask = move |j: UserId| mask.is_none_or(|m| m[j as usize]);
        match *algorithm {
            Algorithm::MassDiffusion | Algorithm::Hybrid { .. } => {
                let lambda = algorithm.lambda().unwrap_or(1.0);
                check_target(g, target)?;
                Ok(match mask {
                    None => scratch.spread(g, None, target, lambda, |_| true),
                    Some(_) => {
                        let index = self.masked_users.as_ref();
                        scratch.spread(g, index, target, lambda, |j| j != target)
                    }
                })
            }
            Algorithm::Knnmd { k, strategy, pool } => {
                check_target(g, target)?;
                let sel =
                    select_neighbors_in(g, target, k, strategy, pool, self.table, in_mask, scratch)?;
                Ok(knnmd_with(g, &sel, scratch))
            }
            Algorithm::Ucf { k } => {
                let table = self.table.ok_or(Error::MissingTable("user-based CF"))?;
                ucf_scores_in(g, target, k, table, in_mask)
            }
        }
    }
}

/// Top-L recommendations for one target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecList {
    pub target: UserId,
    pub items: Vec<ObjectId>,
    pub length: usize,
    /// How many trailing items carry zero score and only pad the list.
    pub padded: usize,
}

/// Ranks objects outside `profile` by score descending, ties by ascending
/// id, and keeps the first `length`. Zero-score objects appear only when
/// fewer than `length` objects have positive score.
pub fn top_l(scores: &ScoreVector, profile: &[ObjectId], length: usize) -> Result<RecList> {
    if length == 0 {
        return Err(Error::param("recommendation length L must be >= 1"));
    }
    let excluded = |o: usize| profile.binary_search(&(o as ObjectId)).is_ok();
    let mut positive: Vec<(ObjectId, f64)> = scores
        .scores
        .iter()
        .enumerate()
        .filter(|&(o, &s)| s > 0.0 && !excluded(o))
        .map(|(o, &s)| (o as ObjectId, s))
        .collect();
    let order =
        |a: &(ObjectId, f64), b: &(ObjectId, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    if positive.len() > length {
        positive.select_nth_unstable_by(length - 1, order);
        positive.truncate(length);
    }
    positive.sort_unstable_by(order);
    let mut items: Vec<ObjectId> = positive.into_iter().map(|(o, _)| o).collect();
    let ranked = items.len();
    if ranked < length {
        items.extend(
            (0..scores.len())
                .filter(|&o| scores.scores[o] <= 0.0 && !excluded(o))
                .take(length - ranked)
                .map(|o| o as ObjectId),
        );
    }
    Ok(RecList {
        target: scores.target,
        padded: items.len() - ranked,
        items,
        length,
    })
}
