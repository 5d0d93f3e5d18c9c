//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Runs without the libtest harness so the
//! lines always show up in `cargo test` output.

mod common;

use std::collections::{BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{core_size, g1_list, order_by_weight, random_list, rng, Dense};
use infocore::config::{AlgorithmKind, CoreMethodKind, StrategyKind};
use infocore::{
    evaluate_system, extract_core, generate_synthetic, hybrid_scores, knnmd_scores, md_scores,
    run_on, select_neighbors, split_train_probe, top_l, Algorithm, BipartiteGraph, CandidatePool,
    CoreMethod, DegreeDistribution, EvalOptions, Execution, ExperimentConfig, ExperimentReport,
    InteractionList, NeighborTable, SelectionStrategy, SeedLabel, SyntheticSpec, UserRanking,
};
use rand::seq::SliceRandom;
use rand::Rng;

type Outcome = Result<String, String>;

const ORACLE_TOL: f64 = 1e-12;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// The 10,000-user graph with five planted communities used by the curve
/// and timing criteria.
fn community_spec() -> SyntheticSpec {
    SyntheticSpec {
        n_users: 10_000,
        n_objects: 2_000,
        n_links: 100_000,
        degrees: DegreeDistribution::PowerLaw { exponent: 3.0 },
        communities: 5,
        mixing: 0.2,
        object_skew: 0.8,
        seed: 1,
    }
}

fn thousand_user_list() -> InteractionList {
    generate_synthetic(&SyntheticSpec {
        n_users: 1_000,
        n_objects: 1_500,
        n_links: 15_000,
        seed: 2,
        ..Default::default()
    })
    .unwrap()
}

struct DiffusionStats {
    graphs: usize,
    max_oracle_err: f64,
    max_degeneracy_err: f64,
    max_conservation_err: f64,
    elapsed: Duration,
}

fn diffusion_stats() -> DiffusionStats {
    let start = Instant::now();
    let mut s = DiffusionStats {
        graphs: 500,
        max_oracle_err: 0.0,
        max_degeneracy_err: 0.0,
        max_conservation_err: 0.0,
        elapsed: Duration::ZERO,
    };
    for trial in 0..s.graphs as u64 {
        let list = random_list(&mut rng(trial), 10, 10);
        let g = BipartiteGraph::build(&list).unwrap();
        let dense = Dense::from_pairs(&list, &g);
        for t in 0..g.n_users() as u32 {
            let md = md_scores(&g, t).unwrap();
            for lambda in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let got = hybrid_scores(&g, t, lambda).unwrap();
                let want = dense.diffuse(t as usize, lambda, &|_| true);
                for (x, y) in got.as_slice().iter().zip(&want) {
                    s.max_oracle_err = s.max_oracle_err.max((x - y).abs());
                }
                if lambda == 1.0 {
                    for (x, y) in got.as_slice().iter().zip(md.as_slice()) {
                        s.max_degeneracy_err = s.max_degeneracy_err.max((x - y).abs());
                    }
                }
            }
            let k = g.user_degree(t) as f64;
            s.max_conservation_err = s.max_conservation_err.max((md.total() - k).abs());
        }
    }
    s.elapsed = start.elapsed();
    s
}

fn diffusion_oracle(s: &DiffusionStats) -> Outcome {
    check(s.max_oracle_err <= ORACLE_TOL, || {
        format!("max |lib - W f| = {:e} > {ORACLE_TOL:e}", s.max_oracle_err)
    })?;
    check(s.elapsed < Duration::from_secs(10), || format!("took {:?} (limit 10 s)", s.elapsed))?;
    Ok(format!(
        "{} graphs, 5 lambdas, max err {:.2e}, {:.2} s",
        s.graphs,
        s.max_oracle_err,
        s.elapsed.as_secs_f64()
    ))
}

fn lambda_one(s: &DiffusionStats) -> Outcome {
    check(s.max_degeneracy_err <= ORACLE_TOL, || {
        format!("max |hybrid(1) - md| = {:e}", s.max_degeneracy_err)
    })?;
    Ok(format!("{} graphs, max diff {:.2e}", s.graphs, s.max_degeneracy_err))
}

fn conservation(s: &DiffusionStats) -> Outcome {
    check(s.max_conservation_err <= ORACLE_TOL, || {
        format!("max |sum f' - k| = {:e}", s.max_conservation_err)
    })?;
    Ok(format!("{} graphs, max |sum f' - k| {:.2e}", s.graphs, s.max_conservation_err))
}

fn knnmd_full_pool() -> Outcome {
    let mut compared = 0usize;
    for trial in 0..200u64 {
        let list = random_list(&mut rng(10_000 + trial), 10, 10);
        let g = BipartiteGraph::build(&list).unwrap();
        let table = NeighborTable::build(&g, g.n_users()).unwrap();
        for t in 0..g.n_users() as u32 {
            let sel =
                select_neighbors(&g, t, g.n_users(), SelectionStrategy::Similarity, Some(&table))
                    .unwrap();
            let knn = knnmd_scores(&g, t, &sel).unwrap();
            let md = md_scores(&g, t).unwrap();
            for o in 0..g.n_objects() as u32 {
                if g.has_link(t, o) {
                    continue;
                }
                check(knn.get(o).to_bits() == md.get(o).to_bits(), || {
                    format!("graph {trial}, user {t}, object {o}: {} vs {}", knn.get(o), md.get(o))
                })?;
                compared += 1;
            }
            let m = g.n_objects();
            check(
                top_l(&knn, g.objects_of(t), m).unwrap() == top_l(&md, g.objects_of(t), m).unwrap(),
                || format!("graph {trial}, user {t}: rankings differ"),
            )?;
        }
    }
    Ok(format!("200 graphs, {compared} uncollected scores bit-identical"))
}

fn core_brute_force() -> Outcome {
    let g = BipartiteGraph::build(&g1_list()).unwrap();
    let table = NeighborTable::build(&g, 2).unwrap();
    let tokens = |m: CoreMethod| -> Vec<String> {
        extract_core(&g, Some(&table), m, 0.5)
            .unwrap()
            .members()
            .iter()
            .map(|&u| g.user_token(u).to_owned())
            .collect()
    };
    check(tokens(CoreMethod::Frequency) == ["u3", "u1"], || {
        format!("G1 frequency core {:?}", tokens(CoreMethod::Frequency))
    })?;
    check(tokens(CoreMethod::Rank) == ["u1", "u3"], || {
        format!("G1 rank core {:?}", tokens(CoreMethod::Rank))
    })?;

    let mut r_rng = rng(99);
    for trial in 0..200u64 {
        let list = random_list(&mut rng(20_000 + trial), 12, 12);
        let g = BipartiteGraph::build(&list).unwrap();
        let dense = Dense::from_pairs(&list, &g);
        let n = g.n_users();
        let size = r_rng.gen_range(1..=n.max(1));
        let table = NeighborTable::build(&g, size).unwrap();
        for (method, weights) in [
            (CoreMethod::Frequency, dense.frequency_weights(size)),
            (CoreMethod::Rank, dense.rank_weights(size)),
        ] {
            let ranking = UserRanking::new(&g, Some(&table), method).unwrap();
            let want = order_by_weight(&weights);
            let got: Vec<usize> = ranking.order().iter().map(|&u| u as usize).collect();
            check(got == want, || {
                format!("trial {trial} {}: order {got:?}, brute force {want:?}", method.name())
            })?;
            for (u, w) in ranking.weights().unwrap().iter().enumerate() {
                let exact = *weights[u].numer() as f64 / *weights[u].denom() as f64;
                check((w - exact).abs() <= ORACLE_TOL, || {
                    format!("trial {trial} {}: weight of {u} is {w}, expected {exact}", method.name())
                })?;
            }
            let r: f64 = r_rng.gen_range(0.01..=1.0);
            let core = ranking.core(r).unwrap();
            let members: Vec<usize> = core.members().iter().map(|&u| u as usize).collect();
            check(members == want[..core_size(r, n)], || {
                format!("trial {trial} {} r={r}: core {members:?}", method.name())
            })?;
        }
    }
    Ok("G1 frequency {u3,u1}, rank {u1,u3}; 200 random graphs with n <= 12 match".into())
}

fn baseline_of(report: &ExperimentReport) -> HashMap<(u64, String), f64> {
    report
        .per_seed()
        .filter(|r| r.core_method == "none")
        .map(|r| {
            let SeedLabel::Seed(s) = r.seed else { unreachable!() };
            ((s, cell_name(r)), r.recall.unwrap())
        })
        .collect()
}

fn cell_name(r: &infocore::ReportRow) -> String {
    format!("{}|{}|{:?}|{:?}|{}", r.algorithm, r.params, r.k, r.lambda, r.length)
}

fn r_one_identity() -> Outcome {
    let cfg = ExperimentConfig {
        seeds: vec![1],
        algorithms: vec![
            AlgorithmKind::Md,
            AlgorithmKind::Hybrid,
            AlgorithmKind::Knnmd,
            AlgorithmKind::Ucf,
        ],
        lambdas: vec![0.0, 0.5, 0.8],
        ks: vec![10],
        strategies: vec![
            StrategyKind::Random,
            StrategyKind::Degree,
            StrategyKind::Resource,
            StrategyKind::Similarity,
        ],
        core_methods: vec![
            CoreMethodKind::Degree,
            CoreMethodKind::Random,
            CoreMethodKind::Frequency,
            CoreMethodKind::Rank,
        ],
        r_grid: vec![1.0],
        timing: false,
        ..Default::default()
    };
    let report = run_on(&thousand_user_list(), &cfg, Execution::default()).unwrap();
    check(report.failures().next().is_none(), || "a cell failed".into())?;
    let base = baseline_of(&report);
    let mut cells = 0;
    for row in report.per_seed().filter(|r| r.core_method != "none") {
        let SeedLabel::Seed(s) = row.seed else { unreachable!() };
        let full = base[&(s, cell_name(row))];
        let got = row.recall.unwrap();
        check(got.to_bits() == full.to_bits(), || {
            format!("{} {} {}: {got} vs {full}", row.algorithm, row.params, row.core_method)
        })?;
        cells += 1;
    }
    check(cells == 4 * 9, || format!("expected 36 core cells, saw {cells}"))?;
    Ok(format!("{cells} algorithm x core-method cells equal bit for bit (1000 users)"))
}

fn fig5_curve() -> Outcome {
    let start = Instant::now();
    let list = generate_synthetic(&community_spec()).unwrap();
    let cfg = ExperimentConfig {
        seeds: vec![1, 2, 3, 4, 5],
        algorithms: vec![AlgorithmKind::Md],
        core_methods: vec![
            CoreMethodKind::Rank,
            CoreMethodKind::Frequency,
            CoreMethodKind::Degree,
            CoreMethodKind::Random,
        ],
        r_grid: vec![0.2],
        table_size: 20,
        timing: false,
        ..Default::default()
    };
    let report = run_on(&list, &cfg, Execution::default()).unwrap();
    let retention = |method: &str| {
        report
            .rows
            .iter()
            .find(|r| r.seed == SeedLabel::Mean && r.core_method == method)
            .and_then(|r| r.retention)
            .unwrap()
    };
    let (rank, freq, degree, random) =
        (retention("rank"), retention("frequency"), retention("degree"), retention("random"));
    let elapsed = start.elapsed();
    let detail = format!(
        "r=0.2 retention rank {rank:.3}, frequency {freq:.3}, degree {degree:.3}, random {random:.3}; {:.1} s",
        elapsed.as_secs_f64()
    );
    check(rank > random, || format!("rank does not beat random: {detail}"))?;
    check(rank >= 0.70, || format!("rank retention below 0.70: {detail}"))?;
    check(elapsed < Duration::from_secs(600), || format!("too slow: {detail}"))?;
    Ok(detail)
}

fn containment() -> Outcome {
    let grid: Vec<f64> = (1..=20).map(|i| i as f64 * 0.05).collect();
    let methods = [CoreMethod::Degree, CoreMethod::Frequency, CoreMethod::Rank];
    let mut graphs: Vec<BipartiteGraph> = (0..50u64)
        .map(|t| BipartiteGraph::build(&random_list(&mut rng(30_000 + t), 12, 12)).unwrap())
        .collect();
    let big = BipartiteGraph::build(&thousand_user_list()).unwrap();
    graphs.push(split_train_probe(&big, 0.8, 1).unwrap().train);
    let mut checks = 0;
    for (gi, g) in graphs.iter().enumerate() {
        let table = NeighborTable::build(g, 20).unwrap();
        for method in methods {
            let ranking = UserRanking::new(g, Some(&table), method).unwrap();
            let cores: Vec<BTreeSet<u32>> = grid
                .iter()
                .map(|&r| ranking.core(r).unwrap().members().iter().copied().collect())
                .collect();
            for (i, c) in cores.iter().enumerate() {
                check(c.len() == core_size(grid[i], g.n_users()), || {
                    format!("graph {gi} {}: |C({})| = {}", method.name(), grid[i], c.len())
                })?;
            }
            for w in cores.windows(2) {
                check(w[0].is_subset(&w[1]), || format!("graph {gi} {}: not nested", method.name()))?;
                checks += 1;
            }
        }
    }
    Ok(format!("{checks} consecutive pairs over r = 0.05..1.00 nested, 51 graphs"))
}

fn speedup() -> Outcome {
    let g = BipartiteGraph::build(&generate_synthetic(&community_spec()).unwrap()).unwrap();
    let split = split_train_probe(&g, 0.8, 1).unwrap();
    let table = NeighborTable::build(&split.train, 20).unwrap();
    let ranking = UserRanking::new(&split.train, Some(&table), CoreMethod::Rank).unwrap();
    let small = ranking.core(0.2).unwrap();
    let whole = ranking.core(1.0).unwrap();
    let opts = EvalOptions::default();
    let time = |core| {
        let t = Instant::now();
        evaluate_system(
            &split.train,
            split.probe(),
            &Algorithm::MassDiffusion,
            20,
            Some(core),
            None,
            &opts,
        )
        .unwrap();
        t.elapsed().as_secs_f64()
    };
    // warm caches once, then alternate
    time(&whole);
    let (mut t_small, mut t_whole) = (0.0, 0.0);
    for _ in 0..3 {
        t_whole += time(&whole) / 3.0;
        t_small += time(&small) / 3.0;
    }
    let ratio = t_small / t_whole;
    let detail = format!(
        "mean MD scoring {:.0} ms at r=0.2 vs {:.0} ms at r=1, ratio {ratio:.3}",
        t_small * 1e3,
        t_whole * 1e3
    );
    check(ratio <= 0.5, || format!("{detail} > 0.5"))?;
    Ok(detail)
}

fn sweep_config() -> ExperimentConfig {
    ExperimentConfig {
        seeds: vec![1, 2],
        algorithms: vec![
            AlgorithmKind::Md,
            AlgorithmKind::Hybrid,
            AlgorithmKind::Knnmd,
            AlgorithmKind::Ucf,
        ],
        lambdas: vec![0.2, 0.8],
        ks: vec![5, 20],
        strategies: vec![StrategyKind::Random, StrategyKind::Resource, StrategyKind::Similarity],
        core_methods: vec![CoreMethodKind::Rank, CoreMethodKind::Random, CoreMethodKind::Degree],
        r_grid: vec![0.2, 0.6, 1.0],
        lengths: vec![10, 20],
        timing: false,
        ..Default::default()
    }
}

fn run_with_threads(list: &InteractionList, cfg: &ExperimentConfig, threads: usize) -> Vec<u8> {
    let run = || run_on(list, cfg, Execution::default()).unwrap();
    #[cfg(feature = "parallel")]
    let report = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(run);
    #[cfg(not(feature = "parallel"))]
    let report = {
        let _ = threads;
        run()
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    report.write_csv(&path).unwrap();
    std::fs::read(&path).unwrap()
}

fn determinism() -> Outcome {
    let list = generate_synthetic(&SyntheticSpec {
        n_users: 400,
        n_objects: 600,
        n_links: 8_000,
        seed: 5,
        ..Default::default()
    })
    .unwrap();
    let cfg = sweep_config();
    let one = run_with_threads(&list, &cfg, 1);
    let again = run_with_threads(&list, &cfg, 1);
    let four = run_with_threads(&list, &cfg, 4);
    let seq = run_on(&list, &cfg, Execution::Sequential).unwrap().to_csv().into_bytes();
    check(one == again, || "two identical runs differ".into())?;
    check(one == four, || "1 and 4 worker threads differ".into())?;
    check(one == seq, || "sequential and parallel execution differ".into())?;
    let rows = one.iter().filter(|&&b| b == b'\n').count() - 1;
    Ok(format!("{rows}-row CSV byte-identical across reruns, 1/4 threads and sequential mode"))
}

fn recall_bounds() -> Outcome {
    let mut pairs_checked = 0;
    for c in 0..50u64 {
        let mut r = rng(40_000 + c);
        let n = r.gen_range(30..120);
        let m = r.gen_range(40..150);
        let l = (n * r.gen_range(4..15)).min(n * m);
        let list = generate_synthetic(&SyntheticSpec {
            n_users: n,
            n_objects: m,
            n_links: l,
            communities: r.gen_range(1..5),
            seed: c,
            ..Default::default()
        })
        .unwrap();
        let g = BipartiteGraph::build(&list).unwrap();
        let split = split_train_probe(&g, r.gen_range(0.5..0.95), c).unwrap();
        let k = r.gen_range(1..30);
        let strategies = [
            SelectionStrategy::Random { seed: c },
            SelectionStrategy::Degree,
            SelectionStrategy::Resource,
            SelectionStrategy::Similarity,
        ];
        let algo = match r.gen_range(0..4) {
            0 => Algorithm::MassDiffusion,
            1 => Algorithm::Hybrid { lambda: r.gen_range(0.0..=1.0) },
            2 => Algorithm::Knnmd {
                k,
                strategy: *strategies.choose(&mut r).unwrap(),
                pool: CandidatePool::CoOccurring,
            },
            _ => Algorithm::Ucf { k },
        };
        let core = if r.gen_bool(0.5) {
            let method = [CoreMethod::Rank, CoreMethod::Degree, CoreMethod::Random { seed: c }]
                .choose(&mut r)
                .copied()
                .unwrap();
            let table = NeighborTable::build(&split.train, 20).unwrap();
            Some(extract_core(&split.train, Some(&table), method, r.gen_range(0.05..=1.0)).unwrap())
        } else {
            None
        };
        let table = NeighborTable::build_with(
            &split.train,
            k.max(20),
            core.as_ref().map(|c| c.mask()),
            Execution::default(),
        )
        .unwrap();
        let mut prev = 0.0;
        for length in 1..=40 {
            let rec = match evaluate_system(
                &split.train,
                split.probe(),
                &algo,
                length,
                core.as_ref(),
                Some(&table),
                &EvalOptions::default(),
            ) {
                Ok(s) => s.recall,
                Err(e) => return Err(format!("config {c}: {e}")),
            };
            check((0.0..=1.0).contains(&rec), || format!("config {c} L={length}: recall {rec}"))?;
            check(rec >= prev, || format!("config {c}: R({length}) = {rec} < R({}) = {prev}", length - 1))?;
            prev = rec;
            pairs_checked += 1;
        }
    }
    Ok(format!("50 configurations, L = 1..40, {pairs_checked} recalls in [0,1] and non-decreasing"))
}

fn main() {
    let mut failed = 0;
    let mut report = |name: &str, f: &dyn Fn() -> Outcome| {
        let outcome = catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|p| Err(format!("panicked: {}", panic_message(&p))));
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL  {name}: {reason}");
            }
        }
    };
    let stats = diffusion_stats();
    report("diffusion oracle equivalence", &|| diffusion_oracle(&stats));
    report("lambda=1 degeneracy", &|| lambda_one(&stats));
    report("resource conservation", &|| conservation(&stats));
    report("KNNMD full-pool equivalence", &knnmd_full_pool);
    report("core brute-force equivalence", &core_brute_force);
    report("r=1 identity", &r_one_identity);
    report("community curve at r=0.2", &fig5_curve);
    report("monotone core containment", &containment);
    report("core scoring speedup", &speedup);
    report("determinism", &determinism);
    report("recall bounds and monotonicity", &recall_bounds);
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}

fn panic_message(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}
