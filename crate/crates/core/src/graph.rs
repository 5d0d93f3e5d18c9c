//! User–object bipartite interaction graph.
//!
//! The graph is stored twice in compressed sparse row form, once indexed by
//! user and once by object, so diffusion can walk from either side without
//! searching. Both views hold sorted, duplicate-free adjacency lists and are
//! immutable once built.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::seeded;

pub type UserId = u32;
pub type ObjectId = u32;

/// Where an [`InteractionList`] came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Provenance {
    File(PathBuf),
    Synthetic { seed: u64 },
    Sampled { seed: u64 },
    Inline,
}

/// Raw `(user-token, object-token)` pairs, before id assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InteractionList {
    pairs: Vec<(String, String)>,
    provenance: Provenance,
}

impl InteractionList {
    pub fn new(pairs: Vec<(String, String)>, provenance: Provenance) -> Result<Self> {
        if let Some(pos) = pairs.iter().position(|(u, o)| u.is_empty() || o.is_empty()) {
            return Err(Error::param(format!("empty token in pair #{pos}")));
        }
        Ok(Self { pairs, provenance })
    }

    pub fn from_pairs<U, O>(pairs: impl IntoIterator<Item = (U, O)>) -> Result<Self>
    where
        U: Into<String>,
        O: Into<String>,
    {
        let pairs = pairs
            .into_iter()
            .map(|(u, o)| (u.into(), o.into()))
            .collect();
        Self::new(pairs, Provenance::Inline)
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Drops repeated pairs, keeping the first occurrence.
    pub fn dedup(&mut self) {
        let mut seen = std::collections::HashSet::with_capacity(self.pairs.len());
        self.pairs.retain(|p| seen.insert(p.clone()));
    }
}

/// Token ↔ dense id mapping for one side of the graph.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    fn intern(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = self.tokens.len() as u32;
        self.tokens.push(token.to_owned());
        self.index.insert(token.to_owned(), id);
        id
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Csr {
    #[inline]
    fn row(&self, i: usize) -> &[u32] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Builds rows from `(row, col)` pairs already sorted by row then column.
    fn from_sorted(rows: usize, pairs: impl Iterator<Item = (u32, u32)>, nnz: usize) -> Self {
        let mut offsets = vec![0usize; rows + 1];
        let mut targets = Vec::with_capacity(nnz);
        for (r, c) in pairs {
            offsets[r as usize + 1] += 1;
            targets.push(c);
        }
        for i in 0..rows {
            offsets[i + 1] += offsets[i];
        }
        Self { offsets, targets }
    }

    fn transpose(&self, cols: usize) -> Self {
        let mut offsets = vec![0usize; cols + 1];
        for &c in &self.targets {
            offsets[c as usize + 1] += 1;
        }
        for i in 0..cols {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut targets = vec![0u32; self.targets.len()];
        // rows are visited in ascending order, so each transposed row comes out sorted
        for r in 0..self.offsets.len() - 1 {
            for &c in self.row(r) {
                targets[cursor[c as usize]] = r as u32;
                cursor[c as usize] += 1;
            }
        }
        Self { offsets, targets }
    }
}

/// Object-to-user adjacency keeping only the users a mask admits, in
/// ascending id order.
#[derive(Clone, Debug)]
pub(crate) struct MaskedUsers(Csr);

impl MaskedUsers {
    pub(crate) fn new(g: &BipartiteGraph, mask: &[bool]) -> Self {
        let kept = (0..g.n_objects() as u32)
            .flat_map(|o| g.users_of(o).iter().filter(|&&u| mask[u as usize]).map(move |&u| (o, u)));
        let nnz = g.links().filter(|&(u, _)| mask[u as usize]).count();
        MaskedUsers(Csr::from_sorted(g.n_objects(), kept, nnz))
    }

    #[inline]
    pub(crate) fn users_of(&self, object: ObjectId) -> &[UserId] {
        self.0.row(object as usize)
    }
}

/// Immutable binary adjacency between users and objects, with cached degrees.
#[derive(Clone, Debug)]
pub struct BipartiteGraph {
    by_user: Csr,
    by_object: Csr,
    users: Arc<Vocabulary>,
    objects: Arc<Vocabulary>,
}

impl PartialEq for BipartiteGraph {
    fn eq(&self, other: &Self) -> bool {
        self.by_user == other.by_user
            && self.by_object == other.by_object
            && self.users.tokens == other.users.tokens
            && self.objects.tokens == other.objects.tokens
    }
}

impl BipartiteGraph {
    /// Materializes the graph from raw interactions. Ids are dense and assigned
    /// in first-appearance order; repeated pairs collapse to a single link.
    pub fn build(interactions: &InteractionList) -> Result<Self> {
        if interactions.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut users = Vocabulary::default();
        let mut objects = Vocabulary::default();
        let links: Vec<(UserId, ObjectId)> = interactions
            .pairs()
            .iter()
            .map(|(u, o)| (users.intern(u), objects.intern(o)))
            .collect();
        Ok(Self::from_links(Arc::new(users), Arc::new(objects), links))
    }

    /// Builds a graph over a fixed id universe. Ids outside the vocabularies
    /// are a programming error.
    pub(crate) fn from_links(
        users: Arc<Vocabulary>,
        objects: Arc<Vocabulary>,
        mut links: Vec<(UserId, ObjectId)>,
    ) -> Self {
        links.sort_unstable();
        links.dedup();
        let by_user = Csr::from_sorted(users.len(), links.iter().copied(), links.len());
        let by_object = by_user.transpose(objects.len());
        Self {
            by_user,
            by_object,
            users,
            objects,
        }
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn n_links(&self) -> usize {
        self.by_user.targets.len()
    }

    /// Link density `l / (n·m)`.
    pub fn sparsity(&self) -> f64 {
        self.n_links() as f64 / (self.n_users() as f64 * self.n_objects() as f64)
    }

    #[inline]
    pub fn objects_of(&self, user: UserId) -> &[ObjectId] {
        self.by_user.row(user as usize)
    }

    #[inline]
    pub fn users_of(&self, object: ObjectId) -> &[UserId] {
        self.by_object.row(object as usize)
    }

    #[inline]
    pub fn user_degree(&self, user: UserId) -> usize {
        self.by_user.degree(user as usize)
    }

    #[inline]
    pub fn object_degree(&self, object: ObjectId) -> usize {
        self.by_object.degree(object as usize)
    }

    pub fn has_link(&self, user: UserId, object: ObjectId) -> bool {
        self.objects_of(user).binary_search(&object).is_ok()
    }

    /// All links in user-major, ascending order.
    pub fn links(&self) -> impl Iterator<Item = (UserId, ObjectId)> + '_ {
        (0..self.n_users() as UserId)
            .flat_map(move |u| self.objects_of(u).iter().map(move |&o| (u, o)))
    }

    pub fn user_vocabulary(&self) -> &Vocabulary {
        &self.users
    }

    pub fn object_vocabulary(&self) -> &Vocabulary {
        &self.objects
    }

    pub fn user_token(&self, user: UserId) -> &str {
        self.users.token(user)
    }

    pub fn object_token(&self, object: ObjectId) -> &str {
        self.objects.token(object)
    }

    /// Same id universe, different link set.
    pub(crate) fn with_links(&self, links: Vec<(UserId, ObjectId)>) -> Self {
        Self::from_links(self.users.clone(), self.objects.clone(), links)
    }

    /// Back to token pairs, in user-major order.
    pub fn to_interactions(&self) -> InteractionList {
        let pairs = self
            .links()
            .map(|(u, o)| (self.user_token(u).to_owned(), self.object_token(o).to_owned()))
            .collect();
        InteractionList {
            pairs,
            provenance: Provenance::Inline,
        }
    }
}

/// A training graph together with the held-out probe links.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitPair {
    pub train: BipartiteGraph,
    probe: Vec<Vec<ObjectId>>,
    pub seed: u64,
    pub ratio: f64,
}

impl SplitPair {
    /// Probe objects `E_i` of one user, sorted ascending.
    pub fn probe_of(&self, user: UserId) -> &[ObjectId] {
        &self.probe[user as usize]
    }

    pub fn probe(&self) -> &[Vec<ObjectId>] {
        &self.probe
    }

    pub fn n_probe_links(&self) -> usize {
        self.probe.iter().map(Vec::len).sum()
    }
}

/// Uniform random partition of the links into a training graph holding
/// `round(ratio·l)` links and a probe set holding the rest.
///
/// The training graph keeps the full user and object universe, so ids are the
/// same on both sides and users may end up with empty training profiles.
pub fn split_train_probe(graph: &BipartiteGraph, ratio: f64, seed: u64) -> Result<SplitPair> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::param(format!("split ratio must lie in (0, 1), got {ratio}")));
    }
    let mut links: Vec<(UserId, ObjectId)> = graph.links().collect();
    links.shuffle(&mut seeded(seed));
    let n_train = (ratio * links.len() as f64).round() as usize;
    let held_out = links.split_off(n_train);

    let mut probe = vec![Vec::new(); graph.n_users()];
    for (u, o) in held_out {
        probe[u as usize].push(o);
    }
    for items in &mut probe {
        items.sort_unstable();
    }
    Ok(SplitPair {
        train: graph.with_links(links),
        probe,
        seed,
        ratio,
    })
}

/// Result of [`sample_users`].
#[derive(Clone, Debug)]
pub struct UserSample {
    pub interactions: InteractionList,
    pub users_sampled: usize,
    /// Fewer eligible users than requested; every eligible user was kept.
    pub truncated: bool,
}

/// Keeps users with at least `min_degree` distinct objects, draws `count` of
/// them uniformly, and returns every interaction of the drawn users in input
/// order.
pub fn sample_users(
    interactions: &InteractionList,
    min_degree: usize,
    count: usize,
    seed: u64,
) -> Result<UserSample> {
    if count == 0 || min_degree == 0 {
        return Err(Error::param("sample count and min_degree must be >= 1"));
    }
    let mut order: Vec<&str> = Vec::new();
    let mut profiles: HashMap<&str, std::collections::HashSet<&str>> = HashMap::new();
    for (u, o) in interactions.pairs() {
        let entry = profiles.entry(u.as_str()).or_insert_with(|| {
            order.push(u.as_str());
            Default::default()
        });
        entry.insert(o.as_str());
    }
    let eligible: Vec<&str> = order
        .into_iter()
        .filter(|u| profiles[u].len() >= min_degree)
        .collect();
    if eligible.is_empty() {
        return Err(Error::NoEligibleUsers { min_degree });
    }

    let truncated = eligible.len() < count;
    let chosen: std::collections::HashSet<&str> = if truncated {
        eligible.iter().copied().collect()
    } else {
        rand::seq::index::sample(&mut seeded(seed), eligible.len(), count)
            .into_iter()
            .map(|i| eligible[i])
            .collect()
    };
    let pairs = interactions
        .pairs()
        .iter()
        .filter(|(u, _)| chosen.contains(u.as_str()))
        .cloned()
        .collect();
    Ok(UserSample {
        interactions: InteractionList {
            pairs,
            provenance: Provenance::Sampled { seed },
        },
        users_sampled: chosen.len(),
        truncated,
    })
}
