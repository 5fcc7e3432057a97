//! Accuracy, diversity and novelty metrics for diffusion recommenders.
//!
//! * ranking score `r`: mean relative position of held-out objects among a
//!   user's uncollected objects (lower is better);
//! * precision enhancement `ep(L)`: top-L precision over the precision of a
//!   random list;
//! * Hamming distance `h(L)`: mean pairwise dissimilarity of top-L lists;
//! * self-information `I(L)`: mean `log2(m / k)` of recommended objects.
//!
//! The evaluated population is the set of users with at least one test link
//! and at least one training link. Held-out links of users without training
//! links are skipped and counted.
//!
//! Relative positions are `p / (n - k_u)`, the 1-based position over the
//! number of objects the user has not collected. Positions follow the same
//! order as [`recommend`](crate::kernel::recommend): score descending, then
//! object index ascending.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::SplitDataset;
use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::kernel::{rank_order, top_uncollected, Kernel, KernelSpec, RecommendationList, ScoreVector, Scratch};

pub const DEFAULT_TOP_L: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub top_l: usize,
    /// Base of the logarithm in the degree-bin width `½·log 5`;
    /// `None` means natural log.
    pub bin_log_base: Option<f64>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            top_l: DEFAULT_TOP_L,
            bin_log_base: None,
        }
    }
}

impl EvalOptions {
    pub fn validate(&self) -> Result<()> {
        if self.top_l == 0 {
            return Err(Error::InvalidParameter("top-L must be at least 1".into()));
        }
        if let Some(b) = self.bin_log_base {
            if !(b.is_finite() && b > 0.0 && b != 1.0) {
                return Err(Error::InvalidParameter(format!("invalid log base {b}")));
            }
        }
        Ok(())
    }
}

/// Where one held-out link landed in its user's ranking.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkRank {
    pub user: usize,
    pub object: usize,
    /// 1-based position among uncollected objects.
    pub position: usize,
    /// Number of uncollected objects, `n - k_u`.
    pub candidates: usize,
    /// Training degree of the object.
    pub object_degree: usize,
    pub relative_rank: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankingScore {
    pub value: f64,
    pub links: Vec<LinkRank>,
    pub skipped_cold_links: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitDescriptor {
    pub ratio: f64,
    pub seed: u64,
    pub train_links: usize,
    pub test_links: usize,
}

impl SplitDescriptor {
    pub fn of(ds: &SplitDataset) -> Self {
        Self {
            ratio: ds.ratio(),
            seed: ds.seed(),
            train_links: ds.train().num_links(),
            test_links: ds.num_test_links(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub kernel: KernelSpec,
    pub top_l: usize,
    pub ranking_score: f64,
    pub precision_enhancement: f64,
    pub hamming: f64,
    pub self_information: f64,
    pub users_evaluated: usize,
    pub links_evaluated: usize,
    pub links_skipped: usize,
    pub split: SplitDescriptor,
}

/// Position of `alpha` in the ranking of uncollected objects, 1-based.
fn rank_position(scores: &[f64], collected: &[u32], alpha: usize) -> usize {
    let s = scores[alpha];
    let above = scores.iter().filter(|&&x| x > s).count();
    let tied_before = scores[..alpha].iter().filter(|&&x| x == s).count();
    let collected_ahead = collected
        .iter()
        .map(|&c| c as usize)
        .filter(|&c| scores[c] > s || (scores[c] == s && c < alpha))
        .count();
    above + tied_before - collected_ahead + 1
}

fn link_ranks(scores: &[f64], graph: &BipartiteGraph, user: usize, test: &[u32]) -> Vec<LinkRank> {
    let collected = graph.objects_of(user);
    let candidates = graph.num_objects() - collected.len();
    test.iter()
        .map(|&o| {
            let object = o as usize;
            let position = rank_position(scores, collected, object);
            LinkRank {
                user,
                object,
                position,
                candidates,
                object_degree: graph.object_degree(object),
                relative_rank: position as f64 / candidates as f64,
            }
        })
        .collect()
}

/// Users with at least one training link and one test link, ascending.
pub fn evaluated_users(ds: &SplitDataset) -> Vec<usize> {
    (0..ds.num_users())
        .filter(|&u| ds.train().user_degree(u) > 0 && !ds.test_objects(u).is_empty())
        .collect()
}

fn cold_links(ds: &SplitDataset) -> usize {
    (0..ds.num_users())
        .filter(|&u| ds.train().user_degree(u) == 0)
        .map(|u| ds.test_objects(u).len())
        .sum()
}

/// Ranking score over every held-out link whose user has training links,
/// with `scorer` supplying each user's scores.
pub fn ranking_score<F>(ds: &SplitDataset, scorer: F) -> Result<RankingScore>
where
    F: Fn(usize) -> Result<ScoreVector> + Sync,
{
    let users = evaluated_users(ds);
    let per_user = users
        .par_iter()
        .map(|&u| {
            let s = scorer(u)?;
            Ok(link_ranks(&s.scores, ds.train(), u, ds.test_objects(u)))
        })
        .collect::<Result<Vec<_>>>()?;
    let links: Vec<LinkRank> = per_user.into_iter().flatten().collect();
    if links.is_empty() {
        return Err(Error::EmptyEvaluation(
            "no test link belongs to a user with training links".into(),
        ));
    }
    Ok(RankingScore {
        value: mean(links.iter().map(|l| l.relative_rank)),
        links,
        skipped_cold_links: cold_links(ds),
    })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    sum / count as f64
}

/// `ep(L)`: mean over qualifying users of `(n / L) · hits / k_test`.
/// Lists of users without training or test links are ignored.
pub fn precision_enhancement(ds: &SplitDataset, lists: &[RecommendationList], top_l: usize) -> Result<f64> {
    if top_l == 0 {
        return Err(Error::InvalidParameter("top-L must be at least 1".into()));
    }
    let n = ds.num_objects() as f64;
    let per_user: Vec<f64> = lists
        .iter()
        .filter(|list| ds.train().user_degree(list.user) > 0 && !ds.test_objects(list.user).is_empty())
        .map(|list| {
            let test = ds.test_objects(list.user);
            let hits = list
                .items
                .iter()
                .take(top_l)
                .filter(|&&o| test.binary_search(&(o as u32)).is_ok())
                .count();
            (n / top_l as f64) * (hits as f64 / test.len() as f64)
        })
        .collect();
    if per_user.is_empty() {
        return Err(Error::EmptyEvaluation(
            "no list belongs to a user with test links".into(),
        ));
    }
    Ok(mean(per_user.into_iter()))
}

/// `h(L)`: mean of `1 - q_ij / L` over all unordered pairs of lists.
///
/// The pair sum `Σ q_ij` equals `Σ_α c_α (c_α - 1) / 2`, where `c_α` counts
/// the lists holding α in their first `L` places.
pub fn hamming_distance(lists: &[RecommendationList], top_l: usize) -> Result<f64> {
    if lists.len() < 2 {
        return Err(Error::EmptyEvaluation(
            "Hamming distance needs at least two users".into(),
        ));
    }
    if top_l == 0 {
        return Err(Error::InvalidParameter("top-L must be at least 1".into()));
    }
    let width = lists
        .iter()
        .flat_map(|l| l.items.iter().take(top_l))
        .max()
        .map_or(0, |&m| m + 1);
    let mut holders = vec![0u64; width];
    for list in lists {
        for &o in list.items.iter().take(top_l) {
            holders[o] += 1;
        }
    }
    let shared: u64 = holders.iter().map(|&c| c * c.saturating_sub(1) / 2).sum();
    let pairs = lists.len() as u64 * (lists.len() as u64 - 1) / 2;
    Ok(1.0 - shared as f64 / (top_l as f64 * pairs as f64))
}

/// `I(L)`: mean of `log2(m / k_α)` over every listed object in the first
/// `L` places. Objects with no training links carry no defined surprisal and
/// are left out.
pub fn self_information(graph: &BipartiteGraph, lists: &[RecommendationList], top_l: usize) -> Result<f64> {
    let m = graph.num_users() as f64;
    let bits: Vec<f64> = lists
        .iter()
        .flat_map(|l| l.items.iter().take(top_l))
        .map(|&o| graph.object_degree(o))
        .filter(|&k| k > 0)
        .map(|k| (m / k as f64).log2())
        .collect();
    if bits.is_empty() {
        return Err(Error::EmptyEvaluation(
            "no recommended object has training links".into(),
        ));
    }
    Ok(mean(bits.into_iter()))
}

/// One bin of the degree-dependence curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeBin {
    pub x: u32,
    /// Inclusive lower degree bound `a (x² - x)`.
    pub lo: f64,
    /// Exclusive upper degree bound `a (x² + x)`.
    pub hi: f64,
    /// `None` marks an empty bin.
    pub mean_r: Option<f64>,
    pub link_count: usize,
    pub object_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeBinCurve {
    /// Bin scale `a = ½ log 5` in the chosen base.
    pub scale: f64,
    pub log_base: f64,
    pub points: Vec<DegreeBin>,
}

impl DegreeBinCurve {
    /// Link-weighted mean of the populated bins.
    pub fn weighted_mean(&self) -> f64 {
        let (sum, count) = self
            .points
            .iter()
            .filter_map(|p| p.mean_r.map(|r| (r * p.link_count as f64, p.link_count)))
            .fold((0.0, 0), |(s, c), (x, n)| (s + x, c + n));
        sum / count as f64
    }
}

pub fn bin_scale(log_base: Option<f64>) -> f64 {
    let natural = 0.5 * 5f64.ln();
    match log_base {
        None => natural,
        Some(b) => natural / b.ln(),
    }
}

fn bin_of(degree: usize, scale: f64) -> u32 {
    let d = degree as f64;
    // smallest x with d < a(x² + x)
    let mut x = ((-1.0 + (1.0 + 4.0 * d / scale).sqrt()) / 2.0).floor().max(1.0) as u32;
    while d >= scale * ((x * x + x) as f64) {
        x += 1;
    }
    while x > 1 && d < scale * (((x - 1) * (x - 1) + (x - 1)) as f64) {
        x -= 1;
    }
    x
}

/// Mean relative rank of held-out links grouped by the training degree of
/// their object: bin `x` covers degrees in `[a(x²-x), a(x²+x))`.
pub fn degree_binned_ranking_score(links: &[LinkRank], log_base: Option<f64>) -> DegreeBinCurve {
    let scale = bin_scale(log_base);
    let top = links.iter().map(|l| bin_of(l.object_degree, scale)).max().unwrap_or(0);
    let mut sums = vec![0.0; top as usize];
    let mut counts = vec![0usize; top as usize];
    let mut objects: Vec<Vec<usize>> = vec![Vec::new(); top as usize];
    for l in links {
        let i = bin_of(l.object_degree, scale) as usize - 1;
        sums[i] += l.relative_rank;
        counts[i] += 1;
        objects[i].push(l.object);
    }
    let points = (1..=top)
        .map(|x| {
            let i = x as usize - 1;
            let objs = &mut objects[i];
            objs.sort_unstable();
            objs.dedup();
            let xf = x as f64;
            DegreeBin {
                x,
                lo: scale * (xf * xf - xf),
                hi: scale * (xf * xf + xf),
                mean_r: (counts[i] > 0).then(|| sums[i] / counts[i] as f64),
                link_count: counts[i],
                object_count: objs.len(),
            }
        })
        .collect();
    DegreeBinCurve {
        scale,
        log_base: log_base.unwrap_or(std::f64::consts::E),
        points,
    }
}

/// Everything one kernel evaluation produces.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub report: MetricsReport,
    pub links: Vec<LinkRank>,
    pub lists: Vec<RecommendationList>,
}

impl Evaluation {
    pub fn degree_curve(&self, log_base: Option<f64>) -> DegreeBinCurve {
        degree_binned_ranking_score(&self.links, log_base)
    }
}

/// Evaluates kernels on one split. The evaluated population and split
/// descriptor are computed once and shared by every kernel.
pub struct Evaluator<'d> {
    ds: &'d SplitDataset,
    options: EvalOptions,
    users: Vec<usize>,
    descriptor: SplitDescriptor,
    skipped: usize,
}

struct UserOutcome {
    ranks: Vec<LinkRank>,
    list: RecommendationList,
}

impl<'d> Evaluator<'d> {
    pub fn new(ds: &'d SplitDataset, options: EvalOptions) -> Result<Self> {
        options.validate()?;
        let users = evaluated_users(ds);
        if users.is_empty() {
            return Err(Error::EmptyEvaluation(
                "no user has both training and test links".into(),
            ));
        }
        Ok(Self {
            ds,
            options,
            descriptor: SplitDescriptor::of(ds),
            skipped: cold_links(ds),
            users,
        })
    }

    pub fn dataset(&self) -> &'d SplitDataset {
        self.ds
    }

    pub fn options(&self) -> EvalOptions {
        self.options
    }

    pub fn users(&self) -> &[usize] {
        &self.users
    }

    /// Scores every evaluated user once and derives all four metrics.
    /// Users are scored in parallel; reductions run in user order, so the
    /// result does not depend on the thread count.
    pub fn evaluate(&self, spec: KernelSpec) -> Result<Evaluation> {
        let graph = self.ds.train();
        let kernel = Kernel::new(graph, spec)?;
        let top_l = self.options.top_l;
        let outcomes = self
            .users
            .par_iter()
            .map_init(
                || (Scratch::default(), vec![0.0; graph.num_objects()]),
                |(scratch, scores), &u| {
                    kernel.score_into(u, scratch, scores)?;
                    Ok(UserOutcome {
                        ranks: link_ranks(scores, graph, u, self.ds.test_objects(u)),
                        list: RecommendationList {
                            user: u,
                            items: top_uncollected(scores, graph, u, top_l),
                            top_l,
                        },
                    })
                },
            )
            .collect::<Result<Vec<UserOutcome>>>()?;

        let mut links = Vec::with_capacity(self.descriptor.test_links);
        let mut lists = Vec::with_capacity(outcomes.len());
        for o in outcomes {
            links.extend(o.ranks);
            lists.push(o.list);
        }
        let ranking_score = mean(links.iter().map(|l| l.relative_rank));
        let report = MetricsReport {
            kernel: spec,
            top_l,
            ranking_score,
            precision_enhancement: precision_enhancement(self.ds, &lists, top_l)?,
            hamming: if lists.len() >= 2 {
                hamming_distance(&lists, top_l)?
            } else {
                0.0
            },
            self_information: self_information(graph, &lists, top_l)?,
            users_evaluated: lists.len(),
            links_evaluated: links.len(),
            links_skipped: self.skipped,
            split: self.descriptor,
        };
        Ok(Evaluation { report, links, lists })
    }
}

/// One-shot evaluation of a single kernel.
pub fn evaluate(ds: &SplitDataset, spec: KernelSpec, options: EvalOptions) -> Result<Evaluation> {
    Evaluator::new(ds, options)?.evaluate(spec)
}

/// Ties in `rank_order` are broken by index, so positions are unique.
#[doc(hidden)]
pub fn position_by_sort(scores: &[f64], graph: &BipartiteGraph, user: usize, alpha: usize) -> usize {
    let mut cands: Vec<usize> = (0..graph.num_objects()).filter(|&o| !graph.has_link(user, o)).collect();
    cands.sort_by(|&x, &y| rank_order(scores, x, y));
    cands.iter().position(|&o| o == alpha).expect("alpha is uncollected") + 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{IdMaps, SplitDataset};
    use crate::graph::BipartiteGraph;
    use crate::kernel::KernelSpec;

    fn ids(m: usize, n: usize) -> IdMaps {
        IdMaps::from_raw(
            (0..m).map(|i| format!("u{i}")).collect(),
            (0..n).map(|i| format!("o{i}")).collect(),
        )
        .unwrap()
    }

    fn list(user: usize, items: &[usize], top_l: usize) -> RecommendationList {
        RecommendationList {
            user,
            items: items.to_vec(),
            top_l,
        }
    }

    #[test]
    fn first_of_hundred() {
        let mut scores = vec![0.0; 100];
        scores[42] = 1.0;
        assert_eq!(rank_position(&scores, &[], 42), 1);
        let g = BipartiteGraph::with_shape(1, 100, &[]).unwrap();
        let r = link_ranks(&scores, &g, 0, &[42]);
        assert_eq!(r[0].relative_rank, 0.01);
    }

    #[test]
    fn position_skips_collected_and_breaks_ties_by_index() {
        let scores = [0.3, 0.9, 0.3, 0.3, 0.1];
        // object 1 collected; order among the rest: 0, 2, 3, 4
        assert_eq!(rank_position(&scores, &[1], 0), 1);
        assert_eq!(rank_position(&scores, &[1], 3), 3);
        assert_eq!(rank_position(&scores, &[1], 4), 4);
    }

    #[test]
    fn ep_single_user_closed_form() {
        let ds = SplitDataset::from_parts(ids(1, 1682), &[(0, 0)], &[(0, 5)], 0.9, 0).unwrap();
        let ep = precision_enhancement(&ds, &[list(0, &[5, 6], 20)], 20).unwrap();
        assert!((ep - 84.1).abs() < 1e-12);
        assert_eq!(precision_enhancement(&ds, &[list(0, &[6, 7], 20)], 20).unwrap(), 0.0);
    }

    #[test]
    fn ep_scales_linearly_in_n() {
        let ep = |n: usize| {
            let ds = SplitDataset::from_parts(ids(2, n), &[(0, 0), (1, 1)], &[(0, 2), (0, 3), (1, 4)], 0.9, 0).unwrap();
            precision_enhancement(&ds, &[list(0, &[2, 9], 2), list(1, &[8, 9], 2)], 2).unwrap()
        };
        assert!((ep(20) * 3.0 - ep(60)).abs() < 1e-12);
    }

    #[test]
    fn hamming_extremes() {
        let same = [list(0, &[1, 2, 3], 3), list(1, &[3, 2, 1], 3)];
        assert_eq!(hamming_distance(&same, 3).unwrap(), 0.0);
        let disjoint = [list(0, &[1, 2, 3], 3), list(1, &[4, 5, 6], 3)];
        assert_eq!(hamming_distance(&disjoint, 3).unwrap(), 1.0);
        assert!(hamming_distance(&same[..1], 3).is_err());
    }

    #[test]
    fn hamming_matches_pairwise_definition() {
        let lists = [
            list(0, &[1, 2, 3, 4], 4),
            list(1, &[2, 3, 9, 8], 4),
            list(2, &[7, 1, 2], 4),
            list(3, &[5, 6, 7, 8], 4),
        ];
        let mut total = 0.0;
        let mut pairs = 0;
        for i in 0..lists.len() {
            for j in i + 1..lists.len() {
                let q = lists[i].items.iter().filter(|o| lists[j].items.contains(o)).count();
                total += 1.0 - q as f64 / 4.0;
                pairs += 1;
            }
        }
        let h = hamming_distance(&lists, 4).unwrap();
        assert!((h - total / pairs as f64).abs() < 1e-15);
    }

    #[test]
    fn self_information_half_popularity_is_one_bit() {
        let g = BipartiteGraph::with_shape(4, 2, &[(0, 0), (1, 0), (2, 1)]).unwrap();
        assert_eq!(self_information(&g, &[list(3, &[0], 1)], 1).unwrap(), 1.0);
        // object 1: log2(4/1) = 2 bits
        assert_eq!(self_information(&g, &[list(3, &[0, 1], 2)], 2).unwrap(), 1.5);
    }

    #[test]
    fn degree_bins_all_degree_one() {
        let links: Vec<LinkRank> = (0..5)
            .map(|i| LinkRank {
                user: i,
                object: i,
                position: 1,
                candidates: 2,
                object_degree: 1,
                relative_rank: 0.5,
            })
            .collect();
        let curve = degree_binned_ranking_score(&links, None);
        assert!((curve.scale - 0.8047189562170501).abs() < 1e-15);
        assert_eq!(curve.points.len(), 1);
        assert_eq!(curve.points[0].lo, 0.0);
        assert!((curve.points[0].hi - 5f64.ln()).abs() < 1e-15);
        assert_eq!(curve.points[0].mean_r, Some(0.5));
        assert_eq!(curve.points[0].object_count, 5);
    }

    #[test]
    fn degree_bins_are_contiguous_and_mark_empties() {
        let mk = |d: usize, r: f64| LinkRank {
            user: 0,
            object: d,
            position: 1,
            candidates: 1,
            object_degree: d,
            relative_rank: r,
        };
        let links = [mk(0, 0.5), mk(1, 0.5), mk(30, 0.5), mk(2, 0.5)];
        let curve = degree_binned_ranking_score(&links, None);
        for w in curve.points.windows(2) {
            assert_eq!(w[0].hi, w[1].lo);
        }
        for p in &curve.points {
            assert!(p.mean_r.is_none() || p.mean_r == Some(0.5));
            assert_eq!(p.mean_r.is_none(), p.link_count == 0);
        }
        assert!(curve.points.iter().any(|p| p.mean_r.is_none()));
        for l in &links {
            let p = &curve.points[bin_of(l.object_degree, curve.scale) as usize - 1];
            assert!(p.lo <= l.object_degree as f64 && (l.object_degree as f64) < p.hi);
        }
        let base10 = degree_binned_ranking_score(&links, Some(10.0));
        assert!((base10.scale - 0.5 * 5f64.log10()).abs() < 1e-15);
    }

    #[test]
    fn bin_lookup_agrees_with_linear_scan() {
        let scale = bin_scale(None);
        for d in 0..5000usize {
            let x = bin_of(d, scale) as f64;
            assert!(
                scale * (x * x - x) <= d as f64 && (d as f64) < scale * (x * x + x),
                "degree {d}"
            );
        }
    }

    #[test]
    fn toy_ranking_score_matches_hand_ranking() {
        // u1→{o1,o2}, u2→{o2,o3}, u3→{o2,o3,o4} in training, u1's o4 held out.
        let ds = SplitDataset::from_parts(
            ids(3, 4),
            &[(0, 0), (0, 1), (1, 1), (1, 2), (2, 1), (2, 2), (2, 3)],
            &[(0, 3)],
            0.9,
            0,
        )
        .unwrap();
        // MD scores for u1: o3 = 5/18, o4 = 1/9, so o4 is 2nd of 2 candidates.
        let ev = evaluate(
            &ds,
            KernelSpec::md(),
            EvalOptions {
                top_l: 1,
                bin_log_base: None,
            },
        )
        .unwrap();
        assert_eq!(ev.links[0].position, 2);
        assert_eq!(ev.report.ranking_score, 1.0);
        assert_eq!(ev.lists[0].items, vec![2]);
        assert_eq!(ev.report.precision_enhancement, 0.0);
        assert_eq!(ev.report.users_evaluated, 1);
    }
}
