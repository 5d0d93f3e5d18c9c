//! Brute-force reference implementations shared by the integration tests.
//! Everything here works on a dense 0/1 matrix rebuilt from the raw pairs,
//! never on the library's sparse views.

#![allow(dead_code)]

use std::cmp::Ordering;

use infocore::{BipartiteGraph, InteractionList};
use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Q = Ratio<u64>;

/// Dense adjacency indexed by the graph's ids.
#[derive(Clone, Debug)]
pub struct Dense {
    pub a: Vec<Vec<bool>>,
}

impl Dense {
    /// Rebuilds the adjacency from the pairs, using the graph only to map
    /// tokens to ids.
    pub fn from_pairs(list: &InteractionList, g: &BipartiteGraph) -> Self {
        let mut a = vec![vec![false; g.n_objects()]; g.n_users()];
        for (u, o) in list.pairs() {
            let i = g.user_vocabulary().id(u).unwrap() as usize;
            let x = g.object_vocabulary().id(o).unwrap() as usize;
            a[i][x] = true;
        }
        Self { a }
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn m(&self) -> usize {
        self.a.first().map_or(0, Vec::len)
    }

    pub fn k_user(&self, i: usize) -> usize {
        self.a[i].iter().filter(|&&b| b).count()
    }

    pub fn k_object(&self, x: usize) -> usize {
        self.a.iter().filter(|row| row[x]).count()
    }

    pub fn overlap(&self, i: usize, j: usize) -> u64 {
        (0..self.m()).filter(|&x| self.a[i][x] && self.a[j][x]).count() as u64
    }

    /// `W[α][β] = 1/(k_α^{1-λ} k_β^λ) Σ_j a_jα a_jβ / k_j` over the users
    /// in `users`, materialized as an m×m matrix.
    pub fn w_matrix(&self, lambda: f64, users: &dyn Fn(usize) -> bool) -> Vec<Vec<f64>> {
        let m = self.m();
        let ku: Vec<f64> = (0..self.n()).map(|j| self.k_user(j) as f64).collect();
        let ko: Vec<f64> = (0..m).map(|x| self.k_object(x) as f64).collect();
        let mut w = vec![vec![0.0; m]; m];
        for (alpha, row) in w.iter_mut().enumerate() {
            for (beta, cell) in row.iter_mut().enumerate() {
                let mut s = 0.0;
                for (j, row) in self.a.iter().enumerate() {
                    if users(j) && row[alpha] && row[beta] {
                        s += 1.0 / ku[j];
                    }
                }
                if s > 0.0 {
                    *cell = s / (ko[alpha].powf(1.0 - lambda) * ko[beta].powf(lambda));
                }
            }
        }
        w
    }

    /// `f' = W f` with `f` the target's 0/1 profile.
    pub fn diffuse(&self, target: usize, lambda: f64, users: &dyn Fn(usize) -> bool) -> Vec<f64> {
        let w = self.w_matrix(lambda, users);
        w.iter()
            .map(|row| {
                row.iter()
                    .zip(&self.a[target])
                    .map(|(&wv, &f)| if f { wv } else { 0.0 })
                    .sum()
            })
            .collect()
    }

    /// Squared cosine as an exact fraction.
    pub fn cosine_sq(&self, i: usize, j: usize) -> Q {
        let (ki, kj) = (self.k_user(i) as u64, self.k_user(j) as u64);
        if ki == 0 || kj == 0 {
            return Q::from_integer(0);
        }
        let c = self.overlap(i, j);
        Q::new(c * c, ki * kj)
    }

    /// All-pairs sort: every other user with positive similarity, most
    /// similar first, ties by ascending id, cut at `size`.
    pub fn top_n(&self, i: usize, size: usize) -> Vec<usize> {
        let mut others: Vec<(usize, Q)> = (0..self.n())
            .filter(|&j| j != i)
            .map(|j| (j, self.cosine_sq(i, j)))
            .filter(|(_, s)| *s > Q::from_integer(0))
            .collect();
        others.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        others.truncate(size);
        others.into_iter().map(|(j, _)| j).collect()
    }

    pub fn frequency_weights(&self, size: usize) -> Vec<Q> {
        let mut w = vec![Q::from_integer(0); self.n()];
        for i in 0..self.n() {
            for j in self.top_n(i, size) {
                w[j] += Q::from_integer(1);
            }
        }
        w
    }

    pub fn rank_weights(&self, size: usize) -> Vec<Q> {
        let mut w = vec![Q::from_integer(0); self.n()];
        for i in 0..self.n() {
            for (p, j) in self.top_n(i, size).into_iter().enumerate() {
                w[j] += Q::new(1, p as u64 + 1);
            }
        }
        w
    }
}

/// Users sorted by weight descending, ties by ascending id.
pub fn order_by_weight(w: &[Q]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| match w[b].cmp(&w[a]) {
        Ordering::Equal => a.cmp(&b),
        o => o,
    });
    order
}

pub fn core_size(r: f64, n: usize) -> usize {
    (r * n as f64).round() as usize
}

/// A random graph with at most `max_n` users and `max_m` objects; every
/// user has at least one link.
pub fn random_list(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize) -> InteractionList {
    let n = rng.gen_range(1..=max_n);
    let m = rng.gen_range(1..=max_m);
    let density: f64 = rng.gen_range(0.15..0.7);
    let mut pairs = Vec::new();
    for i in 0..n {
        let mut any = false;
        for x in 0..m {
            if rng.gen_bool(density) {
                pairs.push((format!("u{i}"), format!("o{x}")));
                any = true;
            }
        }
        if !any {
            pairs.push((format!("u{i}"), format!("o{}", rng.gen_range(0..m))));
        }
    }
    // scramble the input order so ids do not mirror the token numbers
    pairs.shuffle(rng);
    InteractionList::from_pairs(pairs).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn g1_list() -> InteractionList {
    InteractionList::from_pairs([
        ("u1", "o1"),
        ("u1", "o2"),
        ("u1", "o3"),
        ("u2", "o1"),
        ("u2", "o2"),
        ("u2", "o4"),
        ("u3", "o2"),
        ("u3", "o3"),
        ("u3", "o4"),
        ("u3", "o5"),
        ("u4", "o5"),
    ])
    .unwrap()
}
