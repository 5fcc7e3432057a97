//! Properties checked over a fixed corpus of random bipartite graphs, with
//! transfer weights recomputed from the adjacency by a naive oracle.

use diffrec::dataset::{split_indexed, IdMaps, IndexedLinks};
use diffrec::kernel::{initial_resource, DEFAULT_ORACLE_CAP};
use diffrec::metrics::{evaluated_users, position_by_sort};
use diffrec::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-12;

fn random_graph(seed: u64) -> BipartiteGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(1..=60);
    let n = rng.gen_range(1..=200);
    let density = [0.01, 0.05, 0.15, 0.4][rng.gen_range(0..4)];
    let mut links = Vec::new();
    for u in 0..m {
        for o in 0..n {
            if rng.gen::<f64>() < density {
                links.push((u, o));
            }
        }
    }
    if links.is_empty() {
        links.push((rng.gen_range(0..m), rng.gen_range(0..n)));
    }
    BipartiteGraph::with_shape(m, n, &links).unwrap()
}

fn corpus() -> Vec<BipartiteGraph> {
    (0..100).map(random_graph).collect()
}

/// Transfer weights straight from the definitions, one entry at a time.
fn naive_weights(g: &BipartiteGraph, spec: KernelSpec) -> Vec<Vec<f64>> {
    let (m, n) = (g.num_users(), g.num_objects());
    let adj = |u: usize, o: usize| g.has_link(u, o) as u8 as f64;
    let k_obj: Vec<f64> = (0..n).map(|o| (0..m).map(|u| adj(u, o)).sum()).collect();
    let k_usr: Vec<f64> = (0..m).map(|u| (0..n).map(|o| adj(u, o)).sum()).collect();
    let mut w = vec![vec![0.0; n]; n];
    for alpha in 0..n {
        for beta in 0..n {
            if k_obj[alpha] == 0.0 || k_obj[beta] == 0.0 {
                continue;
            }
            w[alpha][beta] = match spec {
                KernelSpec::Generalized { a, b } => {
                    let s: f64 = (0..m)
                        .filter(|&l| k_usr[l] > 0.0)
                        .map(|l| adj(l, alpha) * adj(l, beta) / k_usr[l])
                        .sum();
                    k_obj[alpha].powf(-a) * k_obj[beta].powf(-b) * s
                }
                KernelSpec::Preferential { epsilon, normalization } => {
                    let s: f64 = (0..m)
                        .filter(|&l| adj(l, alpha) * adj(l, beta) > 0.0)
                        .map(|l| {
                            let norm = match normalization {
                                PdNormalization::ReceiverDegree => {
                                    (0..n).map(|r| adj(l, r) * k_obj[r].powf(epsilon)).sum::<f64>()
                                }
                                PdNormalization::Printed => k_usr[l] * k_obj[alpha].powf(epsilon),
                            };
                            1.0 / norm
                        })
                        .sum();
                    k_obj[alpha].powf(epsilon) / k_obj[beta] * s
                }
            };
        }
    }
    w
}

fn all_specs() -> Vec<KernelSpec> {
    vec![
        KernelSpec::md(),
        KernelSpec::hc(),
        KernelSpec::hhp(0.14),
        KernelSpec::bhc(0.87),
        KernelSpec::bd(0.79),
        KernelSpec::bd(1.5),
        KernelSpec::generalized(0.3, 0.6),
        KernelSpec::generalized(1.2, -0.4),
        KernelSpec::pd(-0.85),
        KernelSpec::pd(-0.3),
        KernelSpec::pd_printed(-0.5),
    ]
}

fn max_diff(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn users_with_links(g: &BipartiteGraph) -> impl Iterator<Item = usize> + '_ {
    (0..g.num_users()).filter(|&u| g.user_degree(u) > 0)
}

#[test]
fn dense_matrix_matches_naive_weights() {
    for (i, g) in corpus().iter().enumerate().step_by(5) {
        for spec in all_specs() {
            let dense = dense_transfer_matrix(g, spec, DEFAULT_ORACLE_CAP).unwrap();
            let naive = naive_weights(g, spec);
            for (alpha, row) in naive.iter().enumerate() {
                let d = max_diff(dense.row(alpha), row);
                assert!(d <= TOL, "graph {i} {spec} row {alpha}: {d:e}");
            }
        }
    }
}

#[test]
fn sparse_scores_match_dense_oracle() {
    for (i, g) in corpus().iter().enumerate() {
        for spec in all_specs() {
            let dense = dense_transfer_matrix(g, spec, DEFAULT_ORACLE_CAP).unwrap();
            let kernel = Kernel::new(g, spec).unwrap();
            for u in users_with_links(g) {
                let sparse = kernel.score_user(u).unwrap();
                let d = max_diff(&sparse.scores, &dense.apply(&initial_resource(g, u)));
                assert!(d <= TOL, "graph {i} {spec} user {u}: {d:e}");
                assert!(sparse.scores.iter().all(|&s| s >= 0.0));
            }
        }
    }
}

#[test]
fn stochastic_sums() {
    for g in corpus() {
        let md = dense_transfer_matrix(&g, KernelSpec::md(), DEFAULT_ORACLE_CAP).unwrap();
        let hc = dense_transfer_matrix(&g, KernelSpec::hc(), DEFAULT_ORACLE_CAP).unwrap();
        let (cols, rows) = (md.column_sums(), hc.row_sums());
        for o in 0..g.num_objects() {
            if g.object_degree(o) > 0 {
                assert!((cols[o] - 1.0).abs() <= TOL, "md column {o}: {}", cols[o]);
                assert!((rows[o] - 1.0).abs() <= TOL, "hc row {o}: {}", rows[o]);
            }
        }
    }
}

#[test]
fn balanced_kernel_is_symmetric() {
    for g in corpus() {
        for lambda in [0.0, 0.5, 0.79, 1.5] {
            let w = dense_transfer_matrix(&g, KernelSpec::bd(lambda), DEFAULT_ORACLE_CAP).unwrap();
            let n = w.dim();
            for x in 0..n {
                for y in x + 1..n {
                    assert!((w.get(x, y) - w.get(y, x)).abs() <= TOL);
                }
            }
        }
    }
}

#[test]
fn preset_identities() {
    let pairs = [
        (KernelSpec::hhp(1.0), KernelSpec::md()),
        (KernelSpec::hhp(0.0), KernelSpec::hc()),
        (KernelSpec::bhc(1.0), KernelSpec::hc()),
        (KernelSpec::pd(0.0), KernelSpec::md()),
        (KernelSpec::bd(0.0), KernelSpec::generalized(0.0, 0.0)),
    ];
    for g in corpus() {
        for (x, y) in pairs {
            let (kx, ky) = (Kernel::new(&g, x).unwrap(), Kernel::new(&g, y).unwrap());
            for u in users_with_links(&g) {
                let d = max_diff(&kx.score_user(u).unwrap().scores, &ky.score_user(u).unwrap().scores);
                assert!(d <= TOL, "{x} vs {y}: {d:e}");
            }
        }
    }
}

#[test]
fn printed_preferential_reduces_to_mass_diffusion() {
    for g in corpus().iter().step_by(4) {
        let md = Kernel::new(g, KernelSpec::md()).unwrap();
        for eps in [-1.0, -0.85, -0.3] {
            let pd = Kernel::new(g, KernelSpec::pd_printed(eps)).unwrap();
            for u in users_with_links(g) {
                let d = max_diff(&md.score_user(u).unwrap().scores, &pd.score_user(u).unwrap().scores);
                assert!(d <= 1e-10);
            }
        }
    }
}

fn split_of(g: &BipartiteGraph, seed: u64) -> SplitDataset {
    let users = (0..g.num_users()).map(|u| format!("u{u}")).collect();
    let objects = (0..g.num_objects()).map(|o| format!("o{o}")).collect();
    let indexed = IndexedLinks {
        id_maps: IdMaps::from_raw(users, objects).unwrap(),
        links: g.links().collect(),
        duplicates: 0,
    };
    split_indexed(indexed, 0.8, seed).unwrap()
}

/// Datasets from the corpus dense enough to have at least two evaluated users.
fn evaluable() -> Vec<SplitDataset> {
    corpus()
        .iter()
        .enumerate()
        .map(|(i, g)| split_of(g, i as u64))
        .filter(|ds| evaluated_users(ds).len() >= 2)
        .take(30)
        .collect()
}

#[test]
fn evaluator_agrees_with_brute_force_ranking() {
    let sets = evaluable();
    assert!(sets.len() >= 10);
    for ds in &sets {
        for spec in [KernelSpec::md(), KernelSpec::bd(0.79), KernelSpec::pd(-0.85)] {
            let ev = evaluate(ds, spec, EvalOptions::default()).unwrap();
            let kernel = Kernel::new(ds.train(), spec).unwrap();
            for link in &ev.links {
                let s = kernel.score_user(link.user).unwrap();
                assert_eq!(
                    link.position,
                    position_by_sort(&s.scores, ds.train(), link.user, link.object)
                );
            }
            let via_scorer = ranking_score(ds, |u| kernel.score_user(u)).unwrap();
            assert!((via_scorer.value - ev.report.ranking_score).abs() <= TOL);
            let curve = ev.degree_curve(None);
            assert!((curve.weighted_mean() - ev.report.ranking_score).abs() <= 1e-12);
        }
    }
}

#[test]
fn ranking_score_ignores_monotone_rescaling() {
    for ds in evaluable() {
        let kernel = Kernel::new(ds.train(), KernelSpec::hhp(0.3)).unwrap();
        let plain = ranking_score(&ds, |u| kernel.score_user(u)).unwrap();
        let squashed = ranking_score(&ds, |u| {
            let mut s = kernel.score_user(u)?;
            s.scores.iter_mut().for_each(|x| *x = 3.0 * x.sqrt() + 1.0);
            Ok(s)
        })
        .unwrap();
        assert_eq!(plain.value, squashed.value);
    }
}

#[test]
fn hamming_ignores_order_within_lists() {
    for ds in evaluable() {
        let ev = evaluate(
            &ds,
            KernelSpec::bd(0.5),
            EvalOptions {
                top_l: 5,
                bin_log_base: None,
            },
        )
        .unwrap();
        let mut shuffled = ev.lists.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for l in &mut shuffled {
            rand::seq::SliceRandom::shuffle(l.items.as_mut_slice(), &mut rng);
        }
        let h = hamming_distance(&shuffled, 5).unwrap();
        assert!((h - ev.report.hamming).abs() <= TOL);
    }
}

#[test]
fn sweep_points_equal_independent_runs() {
    let ds = &evaluable()[0];
    let opts = EvalOptions::default();
    let plan = SweepPlan {
        family: Family::Bd,
        range: ParamRange::new(0.0, 1.0, 0.5).unwrap(),
        options: opts,
    };
    let sweep = run_sweep(ds, &plan).unwrap();
    assert_eq!(sweep.points.len(), 3);
    for p in &sweep.points {
        let solo = evaluate(ds, KernelSpec::bd(p.param), opts).unwrap().report;
        assert_eq!(p.report.as_ref().unwrap(), &solo);
    }
}

#[test]
fn grid_cells_match_presets_and_sweeps() {
    let ds = &evaluable()[1];
    let opts = EvalOptions::default();
    let grid = run_grid(ds, &GridPlan::unit_square(0.5, opts)).unwrap();
    assert_eq!(grid.cells.len(), 9);
    let bd = run_sweep(
        ds,
        &SweepPlan {
            family: Family::Bd,
            range: ParamRange::new(0.0, 1.0, 0.5).unwrap(),
            options: opts,
        },
    )
    .unwrap();
    for c in &grid.cells {
        let solo = evaluate(ds, KernelSpec::generalized(c.a, c.b), opts).unwrap().report;
        assert_eq!(c.value, Some(solo.ranking_score));
        if c.a == c.b {
            let p = bd.points.iter().find(|p| p.param == c.a).unwrap();
            assert_eq!(c.value, Some(p.report.as_ref().unwrap().ranking_score));
        }
    }
    let md = evaluate(ds, KernelSpec::md(), opts).unwrap().report.ranking_score;
    let cell01 = grid.cells.iter().find(|c| c.a == 0.0 && c.b == 1.0).unwrap();
    assert_eq!(cell01.value, Some(md));

    let hhp = run_sweep(
        ds,
        &SweepPlan {
            family: Family::Hhp,
            range: ParamRange::new(0.0, 1.0, 1.0).unwrap(),
            options: opts,
        },
    )
    .unwrap();
    let hc = evaluate(ds, KernelSpec::hc(), opts).unwrap().report.ranking_score;
    assert_eq!(hhp.points[0].report.as_ref().unwrap().ranking_score, hc);
    assert_eq!(hhp.points[1].report.as_ref().unwrap().ranking_score, md);
}

/// Every user collects `d` objects and every object is collected by `d`
/// users, so all kernels reduce to the same ranking.
fn degree_regular(m: usize, d: usize) -> BipartiteGraph {
    let links: Vec<_> = (0..m).flat_map(|u| (0..d).map(move |j| (u, (u + j * 3) % m))).collect();
    let g = BipartiteGraph::with_shape(m, m, &links).unwrap();
    assert!((0..m).all(|o| g.object_degree(o) == d));
    g
}

#[test]
fn comparison_degenerates_on_regular_graph() {
    let g = degree_regular(40, 6);
    let ids = |p: &str| (0..40).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
    let links: Vec<_> = g.links().collect();
    // Held-out links lie outside the regular training graph.
    let ds = SplitDataset::from_parts(
        IdMaps::from_raw(ids("u"), ids("o")).unwrap(),
        &links,
        &[(0, 1), (1, 2), (2, 3), (5, 9)],
        0.9,
        0,
    )
    .unwrap();
    let report = compare_algorithms(
        &ds,
        &Family::COMPARED,
        0.25,
        EvalOptions {
            top_l: 5,
            bin_log_base: None,
        },
    )
    .unwrap();
    assert_eq!(report.rows.len(), 4);
    let first = report.rows[0].report.as_ref().unwrap();
    for row in &report.rows {
        let r = row.report.as_ref().unwrap();
        assert!((r.ranking_score - first.ranking_score).abs() <= TOL);
        assert!((r.hamming - first.hamming).abs() <= TOL);
        assert!((r.precision_enhancement - first.precision_enhancement).abs() <= TOL);
        assert!((r.self_information - first.self_information).abs() <= TOL);
    }
}

#[test]
fn comparison_schema_on_sparse_synthetic_data() {
    // Many users, few links each, a long tail of rare objects.
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let (m, n) = (300, 200);
    let mut links = Vec::new();
    for u in 0..m {
        let k = rng.gen_range(3..12);
        for _ in 0..k {
            let o = ((rng.gen::<f64>().powi(3)) * n as f64) as usize;
            links.push((u, o.min(n - 1)));
        }
    }
    let ds = split_of(&build_graph(&links), 3);
    let report = compare_algorithms(&ds, &Family::COMPARED, 0.25, EvalOptions::default()).unwrap();
    assert_eq!(report.rows.len(), 4);
    for (row, family) in report.rows.iter().zip(Family::COMPARED) {
        assert_eq!(row.family, family);
        let r = row.report.as_ref().unwrap();
        for v in [r.ranking_score, r.precision_enhancement, r.hamming, r.self_information] {
            assert!(v.is_finite());
        }
    }
    assert!(report.best.ranking_score.is_some());
    assert!(report.best.hamming.is_some());
}
