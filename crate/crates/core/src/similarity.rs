//! Cosine user–user similarity and ranked top-N neighbor tables.
//!
//! Candidates for user `i` are found through object co-occurrence, so users
//! with nothing in common are never scored. Ranking compares similarities
//! exactly in integer arithmetic (`c²/k_j` for a fixed target), so equal
//! similarities always tie and fall back to ascending user id.

use std::cmp::Ordering;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fmt::sig;
use crate::graph::{BipartiteGraph, UserId};
use crate::par::{self, Execution};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub user: UserId,
    pub similarity: f64,
}

/// `|Γ_i ∩ Γ_j| / √(k_i k_j)`, or 0 when either side has no objects.
#[inline]
pub(crate) fn cosine_from_overlap(overlap: usize, ki: usize, kj: usize) -> f64 {
    if overlap == 0 {
        return 0.0;
    }
    overlap as f64 / ((ki * kj) as f64).sqrt()
}

pub(crate) fn overlap(a: &[u32], b: &[u32]) -> usize {
    let (mut x, mut y, mut n) = (0, 0, 0);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            Ordering::Less => x += 1,
            Ordering::Greater => y += 1,
            Ordering::Equal => {
                n += 1;
                x += 1;
                y += 1;
            }
        }
    }
    n
}

/// Cosine similarity between two distinct users.
pub fn cosine(g: &BipartiteGraph, i: UserId, j: UserId) -> Result<f64> {
    if i == j {
        return Err(Error::param("cosine similarity of a user with itself"));
    }
    let n = g.n_users() as UserId;
    if i >= n || j >= n {
        return Err(Error::param(format!("user id out of range (n = {n})")));
    }
    let c = overlap(g.objects_of(i), g.objects_of(j));
    Ok(cosine_from_overlap(c, g.user_degree(i), g.user_degree(j)))
}

/// Per-user ranked lists of the `N` most similar users.
///
/// Lists hold only positive similarities, never the user itself, and are
/// ordered by similarity descending with ties on ascending id.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborTable {
    size: usize,
    lists: Vec<Vec<Neighbor>>,
}

struct Scratch {
    counts: Vec<u32>,
    touched: Vec<UserId>,
}

impl NeighborTable {
    pub fn build(g: &BipartiteGraph, size: usize) -> Result<Self> {
        Self::build_with(g, size, None, Execution::default())
    }

    /// Builds the table with candidates limited to users where
    /// `admitted[j]` is true. Every user still gets a list.
    pub fn build_with(
        g: &BipartiteGraph,
        size: usize,
        admitted: Option<&[bool]>,
        exec: Execution,
    ) -> Result<Self> {
        if size == 0 {
            return Err(Error::param("neighbor table size N must be >= 1"));
        }
        if let Some(mask) = admitted {
            if mask.len() != g.n_users() {
                return Err(Error::param("admission mask length differs from user count"));
            }
        }
        let n = g.n_users();
        let lists = par::map_range_with(
            exec,
            n,
            || Scratch {
                counts: vec![0; n],
                touched: Vec::new(),
            },
            |s, i| ranked_neighbors(g, i as UserId, size, admitted, s),
        );
        Ok(Self { size, lists })
    }

    /// The table's `N`.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn n_users(&self) -> usize {
        self.lists.len()
    }

    pub fn neighbors(&self, user: UserId) -> &[Neighbor] {
        &self.lists[user as usize]
    }

    /// 1-based rank of `candidate` in `user`'s list.
    pub fn position(&self, user: UserId, candidate: UserId) -> Option<usize> {
        self.neighbors(user)
            .iter()
            .position(|nb| nb.user == candidate)
            .map(|p| p + 1)
    }

    /// Text dump: a `# N=<size>` header, then per user one line of
    /// `user-id` followed by tab-separated `neighbor:similarity` pairs.
    pub fn write_to(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "# N={}", self.size)?;
        for (u, list) in self.lists.iter().enumerate() {
            write!(out, "{u}")?;
            for nb in list {
                write!(out, "\t{}:{}", nb.user, sig(nb.similarity, 12))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn read_from(input: impl BufRead, path: &Path) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse {
            path: path.to_owned(),
            line,
            message,
        };
        let mut size = None;
        let mut lists = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            if let Some(rest) = line.strip_prefix("# N=") {
                size = Some(rest.trim().parse().map_err(|_| perr(lineno, "bad N".into()))?);
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let user: usize = fields
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| perr(lineno, "bad user id".into()))?;
            if user != lists.len() {
                return Err(perr(lineno, format!("expected user {}, got {user}", lists.len())));
            }
            let list = fields
                .map(|f| {
                    let (id, s) = f.split_once(':')?;
                    Some(Neighbor {
                        user: id.parse().ok()?,
                        similarity: s.parse().ok()?,
                    })
                })
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| perr(lineno, "bad neighbor entry".into()))?;
            lists.push(list);
        }
        let size = size.ok_or_else(|| perr(1, "missing `# N=` header".into()))?;
        Ok(Self { size, lists })
    }
}

fn ranked_neighbors(
    g: &BipartiteGraph,
    i: UserId,
    size: usize,
    admitted: Option<&[bool]>,
    s: &mut Scratch,
) -> Vec<Neighbor> {
    let ki = g.user_degree(i);
    for &o in g.objects_of(i) {
        for &j in g.users_of(o) {
            if j == i || admitted.is_some_and(|m| !m[j as usize]) {
                continue;
            }
            if s.counts[j as usize] == 0 {
                s.touched.push(j);
            }
            s.counts[j as usize] += 1;
        }
    }
    // (user, overlap, degree)
    let mut cands: Vec<(UserId, u64, u64)> = s
        .touched
        .drain(..)
        .map(|j| {
            let c = std::mem::take(&mut s.counts[j as usize]) as u64;
            (j, c, g.user_degree(j) as u64)
        })
        .collect();

    // c_a/√k_a > c_b/√k_b  ⇔  c_a²·k_b > c_b²·k_a
    let order = |a: &(UserId, u64, u64), b: &(UserId, u64, u64)| {
        let lhs = (a.1 as u128).pow(2) * b.2 as u128;
        let rhs = (b.1 as u128).pow(2) * a.2 as u128;
        rhs.cmp(&lhs).then(a.0.cmp(&b.0))
    };
    if cands.len() > size {
        cands.select_nth_unstable_by(size - 1, order);
        cands.truncate(size);
    }
    cands.sort_unstable_by(order);
    cands
        .into_iter()
        .map(|(j, c, kj)| Neighbor {
            user: j,
            similarity: cosine_from_overlap(c as usize, ki, kj as usize),
        })
        .collect()
}
