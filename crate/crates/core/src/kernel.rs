//! Diffusion kernels on the user-object network.
//!
//! Every kernel in the family has the shape
//!
//! ```text
//! f'_α = R(α) Σ_l a_lα / N(l) Σ_β a_lβ E(β) f_β
//! ```
//!
//! with a per-object emission weight `E`, a per-user normaliser `N` and a
//! per-object reception weight `R`. For the two-exponent kernel
//! `E(β) = k_β^-b`, `N(l) = k_l` and `R(α) = k_α^-a`; mass diffusion is
//! `(a, b) = (0, 1)` and heat conduction `(1, 0)`. Preferential diffusion
//! uses `E(β) = 1/k_β`, `R(α) = k_α^ε` and `N(l) = Σ_r a_lr k_r^ε`.
//!
//! Scoring a user walks only its two-hop neighbourhood; the n×n transfer
//! matrix is built only by [`dense_transfer_matrix`], which exists as a
//! test oracle and refuses graphs above a size cap.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;

pub const DEFAULT_ORACLE_CAP: usize = 2000;

/// How the user-side normaliser of preferential diffusion is computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PdNormalization {
    /// `M_l = Σ_r a_lr k_r^ε`: a user's resource is shared out in
    /// proportion to each receiving object's degree raised to ε.
    #[default]
    ReceiverDegree,
    /// `M = Σ_r a_lr k_α^ε`, indexed by the receiving object α. The ε
    /// factors cancel and the kernel reduces to mass diffusion for every ε.
    Printed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `w_αβ = k_α^-a k_β^-b Σ_l a_lα a_lβ / k_l`.
    Generalized { a: f64, b: f64 },
    Preferential {
        epsilon: f64,
        #[serde(default)]
        normalization: PdNormalization,
    },
}

impl KernelSpec {
    pub fn generalized(a: f64, b: f64) -> Self {
        KernelSpec::Generalized { a, b }
    }

    /// Mass diffusion (ProbS / NBI).
    pub fn md() -> Self {
        Self::generalized(0.0, 1.0)
    }

    /// Heat conduction (HeatS).
    pub fn hc() -> Self {
        Self::generalized(1.0, 0.0)
    }

    /// Nonlinear MD/HC hybrid: `λ = 1` is MD, `λ = 0` is HC.
    pub fn hhp(lambda: f64) -> Self {
        Self::generalized(1.0 - lambda, lambda)
    }

    /// Biased heat conduction.
    pub fn bhc(lambda: f64) -> Self {
        Self::generalized(lambda, 0.0)
    }

    /// Balanced diffusion: the same exponent on both object degrees.
    pub fn bd(lambda: f64) -> Self {
        Self::generalized(lambda, lambda)
    }

    pub fn pd(epsilon: f64) -> Self {
        KernelSpec::Preferential {
            epsilon,
            normalization: PdNormalization::ReceiverDegree,
        }
    }

    pub fn pd_printed(epsilon: f64) -> Self {
        KernelSpec::Preferential {
            epsilon,
            normalization: PdNormalization::Printed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Generalized { a, b } => {
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "kernel exponents must be finite (a={a}, b={b})"
                    )));
                }
            }
            KernelSpec::Preferential { epsilon, .. } => {
                if !(-1.0..=0.0).contains(&epsilon) {
                    return Err(Error::InvalidParameter(format!(
                        "preferential diffusion needs -1 <= epsilon <= 0, got {epsilon}"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Generalized { a, b } => write!(f, "generalized(a={a}, b={b})"),
            KernelSpec::Preferential {
                epsilon,
                normalization: PdNormalization::ReceiverDegree,
            } => write!(f, "pd(epsilon={epsilon})"),
            KernelSpec::Preferential {
                epsilon,
                normalization: PdNormalization::Printed,
            } => write!(f, "pd-printed(epsilon={epsilon})"),
        }
    }
}

/// Named kernel families, each mapping one parameter onto a [`KernelSpec`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Md,
    Hc,
    Hhp,
    Bhc,
    Bd,
    Pd,
}

impl Family {
    pub const COMPARED: [Family; 4] = [Family::Hhp, Family::Bhc, Family::Pd, Family::Bd];

    pub fn name(self) -> &'static str {
        match self {
            Family::Md => "md",
            Family::Hc => "hc",
            Family::Hhp => "hhp",
            Family::Bhc => "bhc",
            Family::Bd => "bd",
            Family::Pd => "pd",
        }
    }

    pub fn is_parametric(self) -> bool {
        !matches!(self, Family::Md | Family::Hc)
    }

    /// `"epsilon"` for PD, `"lambda"` otherwise.
    pub fn parameter_name(self) -> &'static str {
        match self {
            Family::Pd => "epsilon",
            _ => "lambda",
        }
    }

    /// Default sweep range `(lo, hi)`.
    pub fn default_range(self) -> (f64, f64) {
        match self {
            Family::Bd | Family::Bhc => (0.0, 1.5),
            Family::Hhp => (0.0, 1.0),
            Family::Pd => (-1.0, 0.0),
            Family::Md | Family::Hc => (0.0, 0.0),
        }
    }

    pub fn spec(self, param: f64) -> Result<KernelSpec> {
        let spec = match self {
            Family::Md => KernelSpec::md(),
            Family::Hc => KernelSpec::hc(),
            Family::Hhp => KernelSpec::hhp(param),
            Family::Bhc => KernelSpec::bhc(param),
            Family::Bd => KernelSpec::bd(param),
            Family::Pd => KernelSpec::pd(param),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "md" | "probs" | "nbi" => Ok(Family::Md),
            "hc" | "heats" => Ok(Family::Hc),
            "hhp" => Ok(Family::Hhp),
            "bhc" => Ok(Family::Bhc),
            "bd" => Ok(Family::Bd),
            "pd" => Ok(Family::Pd),
            other => Err(Error::InvalidParameter(format!("unknown kernel family '{other}'"))),
        }
    }
}

/// `k^e` with `k^0 = 1`; zero degrees map to 0 because such objects carry
/// no links and every weight touching them vanishes.
fn degree_power(k: usize, e: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if e == 0.0 {
        1.0
    } else if e == 1.0 {
        k as f64
    } else if e == -1.0 {
        1.0 / k as f64
    } else {
        (e * (k as f64).ln()).exp()
    }
}

/// Per-object scores produced for one target user.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreVector {
    pub user: usize,
    pub scores: Vec<f64>,
    pub kernel: KernelSpec,
}

/// A kernel bound to a graph, with its degree-exponent weights computed once.
#[derive(Clone, Debug)]
pub struct Kernel<'g> {
    graph: &'g BipartiteGraph,
    spec: KernelSpec,
    emit: Vec<f64>,
    receive: Vec<f64>,
    user_scale: Vec<f64>,
}

/// Reusable work buffer for [`Kernel::score_into`].
#[derive(Clone, Debug, Default)]
pub struct Scratch {
    user_resource: Vec<f64>,
}

impl<'g> Kernel<'g> {
    pub fn new(graph: &'g BipartiteGraph, spec: KernelSpec) -> Result<Self> {
        spec.validate()?;
        let object_degrees = graph.object_degrees();
        let user_degrees = graph.user_degrees();
        let (emit, receive, user_scale) = match spec {
            KernelSpec::Generalized { a, b } => {
                let emit = object_degrees.iter().map(|&k| degree_power(k, -b)).collect();
                let receive = object_degrees.iter().map(|&k| degree_power(k, -a)).collect();
                let scale = user_degrees.iter().map(|&k| inverse(k as f64)).collect();
                (emit, receive, scale)
            }
            KernelSpec::Preferential { epsilon, normalization } => {
                let emit = object_degrees.iter().map(|&k| degree_power(k, -1.0)).collect();
                let pref: Vec<f64> = object_degrees.iter().map(|&k| degree_power(k, epsilon)).collect();
                match normalization {
                    PdNormalization::ReceiverDegree => {
                        let scale = (0..graph.num_users())
                            .map(|l| {
                                let m: f64 = graph.objects_of(l).iter().map(|&r| pref[r as usize]).sum();
                                inverse(m)
                            })
                            .collect();
                        (emit, pref, scale)
                    }
                    PdNormalization::Printed => {
                        // k_α^ε over (k_l k_α^ε): the object factor is folded into the reception weight.
                        let receive = pref.iter().map(|&p| p * inverse(p)).collect();
                        let scale = user_degrees.iter().map(|&k| inverse(k as f64)).collect();
                        (emit, receive, scale)
                    }
                }
            }
        };
        Ok(Self {
            graph,
            spec,
            emit,
            receive,
            user_scale,
        })
    }

    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    pub fn graph(&self) -> &'g BipartiteGraph {
        self.graph
    }

    fn check_user(&self, user: usize) -> Result<()> {
        let m = self.graph.num_users();
        if user >= m {
            return Err(Error::UserOutOfRange { user, num_users: m });
        }
        if self.graph.user_degree(user) == 0 {
            return Err(Error::ColdStart { user });
        }
        Ok(())
    }

    pub fn score_user(&self, user: usize) -> Result<ScoreVector> {
        let mut scores = vec![0.0; self.graph.num_objects()];
        self.score_into(user, &mut Scratch::default(), &mut scores)?;
        Ok(ScoreVector {
            user,
            scores,
            kernel: self.spec,
        })
    }

    /// Writes the scores of `user` into `out` (length n), reusing `scratch`.
    pub fn score_into(&self, user: usize, scratch: &mut Scratch, out: &mut [f64]) -> Result<()> {
        self.check_user(user)?;
        let g = self.graph;
        assert_eq!(
            out.len(),
            g.num_objects(),
            "output buffer must have one slot per object"
        );
        out.fill(0.0);
        let resource = &mut scratch.user_resource;
        resource.clear();
        resource.resize(g.num_users(), 0.0);

        // objects -> users
        for &beta in g.objects_of(user) {
            let share = self.emit[beta as usize];
            for &l in g.users_of(beta as usize) {
                resource[l as usize] += share;
            }
        }
        // users -> objects
        for (l, &r) in resource.iter().enumerate() {
            if r == 0.0 {
                continue;
            }
            let share = r * self.user_scale[l];
            for &alpha in g.objects_of(l) {
                // SAFETY: adjacency indices are < num_objects == out.len().
                unsafe { *out.get_unchecked_mut(alpha as usize) += share };
            }
        }
        for (s, &w) in out.iter_mut().zip(&self.receive) {
            *s *= w;
        }
        Ok(())
    }
}

fn inverse(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        1.0 / x
    }
}

/// Scores every object for `user` under `spec`.
pub fn score_user(graph: &BipartiteGraph, user: usize, spec: KernelSpec) -> Result<ScoreVector> {
    Kernel::new(graph, spec)?.score_user(user)
}

/// Ordered recommendations for one user.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecommendationList {
    pub user: usize,
    pub items: Vec<usize>,
    pub top_l: usize,
}

/// Descending score, then ascending object index.
pub fn rank_order(scores: &[f64], x: usize, y: usize) -> Ordering {
    scores[y].total_cmp(&scores[x]).then(x.cmp(&y))
}

/// Every object the user has not collected, best first.
pub fn ranked_uncollected(scores: &[f64], graph: &BipartiteGraph, user: usize) -> Vec<usize> {
    let mut candidates = uncollected(graph, user);
    candidates.sort_unstable_by(|&x, &y| rank_order(scores, x, y));
    candidates
}

fn uncollected(graph: &BipartiteGraph, user: usize) -> Vec<usize> {
    let collected = graph.objects_of(user);
    let mut out = Vec::with_capacity(graph.num_objects() - collected.len());
    let mut next = collected.iter().peekable();
    for o in 0..graph.num_objects() {
        if next.peek().is_some_and(|&&c| c as usize == o) {
            next.next();
        } else {
            out.push(o);
        }
    }
    out
}

/// The top `top_l` uncollected objects of a score vector.
pub fn recommend(scores: &ScoreVector, graph: &BipartiteGraph, top_l: usize) -> Result<RecommendationList> {
    if top_l == 0 {
        return Err(Error::InvalidParameter(
            "recommendation length must be at least 1".into(),
        ));
    }
    Ok(RecommendationList {
        user: scores.user,
        items: top_uncollected(&scores.scores, graph, scores.user, top_l),
        top_l,
    })
}

pub(crate) fn top_uncollected(scores: &[f64], graph: &BipartiteGraph, user: usize, top_l: usize) -> Vec<usize> {
    let mut candidates = uncollected(graph, user);
    let cmp = |x: &usize, y: &usize| rank_order(scores, *x, *y);
    if top_l < candidates.len() {
        candidates.select_nth_unstable_by(top_l - 1, cmp);
        candidates.truncate(top_l);
    }
    candidates.sort_unstable_by(cmp);
    candidates
}

/// Explicit n×n transfer matrix, row-major: entry `(α, β)` is `w_αβ`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferMatrix {
    n: usize,
    data: Vec<f64>,
}

impl TransferMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, alpha: usize, beta: usize) -> f64 {
        self.data[alpha * self.n + beta]
    }

    pub fn row(&self, alpha: usize) -> &[f64] {
        &self.data[alpha * self.n..(alpha + 1) * self.n]
    }

    /// `W f`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        assert_eq!(f.len(), self.n);
        (0..self.n)
            .map(|alpha| self.row(alpha).iter().zip(f).map(|(w, x)| w * x).sum())
            .collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|alpha| self.row(alpha).iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n];
        for alpha in 0..self.n {
            for (s, w) in sums.iter_mut().zip(self.row(alpha)) {
                *s += w;
            }
        }
        sums
    }
}

/// Materialises the transfer matrix of `spec` straight from its closed form.
/// Refuses graphs with more than `cap` objects.
pub fn dense_transfer_matrix(graph: &BipartiteGraph, spec: KernelSpec, cap: usize) -> Result<TransferMatrix> {
    spec.validate()?;
    let n = graph.num_objects();
    if n > cap {
        return Err(Error::OracleTooLarge { n, cap });
    }
    let k = graph.object_degrees();
    let pow = |deg: usize, e: f64| (deg as f64).powf(e);
    let mut data = vec![0.0; n * n];

    for l in 0..graph.num_users() {
        let objs = graph.objects_of(l);
        if objs.is_empty() {
            continue;
        }
        for &alpha in objs {
            let alpha = alpha as usize;
            let denom = match spec {
                KernelSpec::Generalized { .. } => objs.len() as f64,
                KernelSpec::Preferential {
                    epsilon,
                    normalization: PdNormalization::ReceiverDegree,
                } => objs.iter().map(|&r| pow(k[r as usize], epsilon)).sum(),
                KernelSpec::Preferential {
                    epsilon,
                    normalization: PdNormalization::Printed,
                } => objs.len() as f64 * pow(k[alpha], epsilon),
            };
            for &beta in objs {
                data[alpha * n + beta as usize] += 1.0 / denom;
            }
        }
    }

    for alpha in 0..n {
        for beta in 0..n {
            let w = &mut data[alpha * n + beta];
            if *w == 0.0 {
                continue;
            }
            *w *= match spec {
                KernelSpec::Generalized { a, b } => 1.0 / (pow(k[alpha], a) * pow(k[beta], b)),
                KernelSpec::Preferential { epsilon, .. } => pow(k[alpha], epsilon) / k[beta] as f64,
            };
        }
    }
    Ok(TransferMatrix { n, data })
}

/// Initial resource of `user`: 1 on each collected object.
pub fn initial_resource(graph: &BipartiteGraph, user: usize) -> Vec<f64> {
    let mut f = vec![0.0; graph.num_objects()];
    for &o in graph.objects_of(user) {
        f[o as usize] = 1.0;
    }
    f
}
