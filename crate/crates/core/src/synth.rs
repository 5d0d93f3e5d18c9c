//! Seeded synthetic user–object data with planted community structure.
//!
//! User `u` belongs to community `u mod c` and object `o` to `o mod c`. Each
//! link is drawn from the user's own community with probability
//! `1 - mixing` and from the whole catalogue otherwise; within either pool
//! objects are picked with Zipf-like popularity `(rank + 1)^(-skew)`.
//! Tokens are `u<index>` and `o<index>`.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{InteractionList, Provenance};
use crate::rng::seeded;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DegreeDistribution {
    /// Every user gets `l/n` links, give or take one.
    Uniform,
    /// Degrees proportional to Pareto draws with this tail exponent (> 1).
    PowerLaw { exponent: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub n_users: usize,
    pub n_objects: usize,
    pub n_links: usize,
    pub degrees: DegreeDistribution,
    pub communities: usize,
    /// Probability that a link ignores community membership.
    pub mixing: f64,
    /// Popularity exponent for objects; 0 makes all objects equally likely.
    pub object_skew: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_users: 1000,
            n_objects: 2000,
            n_links: 20_000,
            degrees: DegreeDistribution::PowerLaw { exponent: 2.5 },
            communities: 5,
            mixing: 0.2,
            object_skew: 0.8,
            seed: 1,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let (n, m, l) = (self.n_users, self.n_objects, self.n_links);
        if n == 0 || m == 0 {
            return Err(Error::param("synthetic data needs at least one user and one object"));
        }
        if l < n {
            return Err(Error::param(format!(
                "link count {l} is below user count {n}; every user needs a link"
            )));
        }
        if l > n.saturating_mul(m) {
            return Err(Error::param(format!("link count {l} exceeds n*m = {}", n * m)));
        }
        if self.communities == 0 || self.communities > n.min(m) {
            return Err(Error::param("community count must lie in [1, min(n, m)]"));
        }
        if !(0.0..=1.0).contains(&self.mixing) {
            return Err(Error::param("mixing must lie in [0, 1]"));
        }
        if !(self.object_skew >= 0.0 && self.object_skew.is_finite()) {
            return Err(Error::param("object skew must be finite and >= 0"));
        }
        if let DegreeDistribution::PowerLaw { exponent } = self.degrees {
            if !(exponent > 1.0 && exponent.is_finite()) {
                return Err(Error::param("power-law exponent must be > 1"));
            }
        }
        Ok(())
    }

    pub fn user_community(&self, user: usize) -> usize {
        user % self.communities
    }

    pub fn object_community(&self, object: usize) -> usize {
        object % self.communities
    }
}

/// Generates exactly `n_links` distinct links.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<InteractionList> {
    spec.validate()?;
    let mut rng = seeded(spec.seed);
    let degrees = user_degrees(spec, &mut rng);

    let c = spec.communities;
    let popularity = |o: usize| ((o / c) as f64 + 1.0).powf(-spec.object_skew);
    let global = WeightedIndex::new((0..spec.n_objects).map(popularity)).expect("positive weights");
    let members: Vec<Vec<usize>> = (0..c)
        .map(|k| (k..spec.n_objects).step_by(c).collect())
        .collect();
    let local: Vec<WeightedIndex<f64>> = members
        .iter()
        .map(|objs| WeightedIndex::new(objs.iter().map(|&o| popularity(o))).expect("non-empty"))
        .collect();

    let mut taken = vec![false; spec.n_objects];
    let mut pairs = Vec::with_capacity(spec.n_links);
    let mut picks: Vec<usize> = Vec::new();
    for (u, &d) in degrees.iter().enumerate() {
        let k = spec.user_community(u);
        let budget = 20 * d + 100;
        let mut attempts = 0;
        while picks.len() < d && attempts < budget {
            attempts += 1;
            let o = if rng.gen::<f64>() < spec.mixing {
                global.sample(&mut rng)
            } else {
                members[k][local[k].sample(&mut rng)]
            };
            if !taken[o] {
                taken[o] = true;
                picks.push(o);
            }
        }
        if picks.len() < d {
            // near-saturated profile: top up from a random order of the rest
            let mut rest: Vec<usize> = (0..spec.n_objects).filter(|&o| !taken[o]).collect();
            rest.shuffle(&mut rng);
            for o in rest.into_iter().take(d - picks.len()) {
                taken[o] = true;
                picks.push(o);
            }
        }
        picks.sort_unstable();
        for &o in &picks {
            taken[o] = false;
            pairs.push((format!("u{u}"), format!("o{o}")));
        }
        picks.clear();
    }
    InteractionList::new(pairs, Provenance::Synthetic { seed: spec.seed })
}

/// Per-user degrees in `[1, m]` summing to exactly `n_links`.
fn user_degrees(spec: &SyntheticSpec, rng: &mut impl Rng) -> Vec<usize> {
    let (n, m, l) = (spec.n_users, spec.n_objects, spec.n_links);
    let weights: Vec<f64> = match spec.degrees {
        DegreeDistribution::Uniform => vec![1.0; n],
        DegreeDistribution::PowerLaw { exponent } => (0..n)
            .map(|_| (1.0 - rng.gen::<f64>()).powf(-1.0 / (exponent - 1.0)))
            .collect(),
    };
    let total: f64 = weights.iter().sum();
    let mut deg: Vec<usize> = weights
        .iter()
        .map(|w| ((l as f64 * w / total).floor() as usize).clamp(1, m))
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    // heaviest users absorb the surplus first
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]));
    let mut sum: usize = deg.iter().sum();
    while sum != l {
        let mut moved = false;
        for &u in &order {
            if sum < l && deg[u] < m {
                deg[u] += 1;
                sum += 1;
                moved = true;
            } else if sum > l && deg[u] > 1 {
                deg[u] -= 1;
                sum -= 1;
                moved = true;
            }
            if sum == l {
                break;
            }
        }
        debug_assert!(moved, "degree budget is feasible after validation");
    }
    deg
}
