//! Graph-indexed projection machinery.
//!
//! For a labeled bipartite graph `G`, the projection `p^G` of a kernel is
//! defined by the recursion `p^G(X) = E[X | H(G)] - sum_{F subset G} p^F(X)`
//! over the lattice of labeled subgraphs. Expanding the recursion gives a
//! signed combination of conditional expectations; because subgraphs are
//! exactly the down-sets of the poset "edge covers its endpoints", the
//! lattice is distributive and the coefficient of `F` in `p^G` is
//! `(-1)^(dropped nodes + dropped edges)` when every dropped edge keeps both
//! endpoints in `F`, and zero otherwise.
//!
//! Monte Carlo moments use the two-sided coupling: draw the universe latents
//! once, complete each factor with its own independent complement, and
//! average the product of the two signed sums. Conditional independence of
//! the sides given the shared draw makes the estimator unbiased for
//! `E[p^G1 p^G2]` and for the pairwise conditional-expectation products.

use crate::error::{Error, Result};
use crate::graph::{enumerate_gamma, BipartiteGraph, GraphClass};
use crate::kernels::KernelSpec;
use crate::mat::Mat;
use crate::models::ModelSpec;
use crate::rng::{self, role};
use crate::stats;
use serde::Serialize;

/// The labeled index universe against which subgraphs and blocks are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Universe {
    pub rows: usize,
    pub cols: usize,
}

impl Universe {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows > crate::graph::MAX_ROWS || cols > crate::graph::MAX_COLS {
            return Err(Error::SizeLimit {
                r: rows,
                c: cols,
                max_r: crate::graph::MAX_ROWS,
                max_c: crate::graph::MAX_COLS,
            });
        }
        Ok(Universe { rows, cols })
    }
}

/// The kernel's index block inside a universe: which universe rows/columns
/// form the `p x q` submatrix handed to the kernel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl Block {
    /// The leading block `[0..p) x [0..q)`.
    pub fn leading(p: usize, q: usize) -> Self {
        Block {
            rows: (0..p).collect(),
            cols: (0..q).collect(),
        }
    }

    fn validate(&self, kernel: &KernelSpec, u: Universe) -> Result<()> {
        if self.rows.len() != kernel.p() || self.cols.len() != kernel.q() {
            return Err(Error::UniverseMismatch(format!(
                "block is {}x{}, kernel needs {}x{}",
                self.rows.len(),
                self.cols.len(),
                kernel.p(),
                kernel.q()
            )));
        }
        if self.rows.iter().any(|&i| i >= u.rows) || self.cols.iter().any(|&j| j >= u.cols) {
            return Err(Error::UniverseMismatch(format!(
                "block indices exceed the {}x{} universe",
                u.rows, u.cols
            )));
        }
        Ok(())
    }
}

/// `p^G` as a flat signed combination of conditional expectations
/// `E[X | H(F)]`, `F ⊆ G`. Coefficients are exact integers.
#[derive(Debug, Clone)]
pub struct ProjectionPlan {
    target: BipartiteGraph,
    terms: Vec<(BipartiteGraph, i64)>,
}

impl ProjectionPlan {
    pub fn target(&self) -> &BipartiteGraph {
        &self.target
    }

    pub fn terms(&self) -> &[(BipartiteGraph, i64)] {
        &self.terms
    }

    /// Coefficient of a labeled subgraph (0 when absent).
    pub fn coefficient(&self, f: &BipartiteGraph) -> i64 {
        let key = f.labeled_key();
        self.terms
            .iter()
            .find(|(g, _)| g.labeled_key() == key)
            .map_or(0, |&(_, c)| c)
    }
}

/// Expands the projection recursion for `G` into its signed combination of
/// conditional expectations.
pub fn projection_plan(g: &BipartiteGraph) -> Result<ProjectionPlan> {
    if g.rows() > crate::graph::MAX_ROWS || g.cols() > crate::graph::MAX_COLS {
        return Err(Error::SizeLimit {
            r: g.rows(),
            c: g.cols(),
            max_r: crate::graph::MAX_ROWS,
            max_c: crate::graph::MAX_COLS,
        });
    }
    // Nonzero terms drop only isolated nodes and edges whose endpoints stay.
    let mut terms = Vec::new();
    let target_edges = {
        let (_, _, e) = g.labeled_key();
        e
    };
    for f in g.labeled_subgraphs() {
        let (rows, cols, edges) = f.labeled_key();
        let dropped_edges: Vec<&(usize, usize)> = target_edges
            .iter()
            .filter(|e| !edges.contains(e))
            .collect();
        let ok = dropped_edges
            .iter()
            .all(|(i, j)| rows.contains(i) && cols.contains(j));
        if !ok {
            continue;
        }
        let dropped_nodes = g.nodes() - f.nodes();
        let sign = if (dropped_nodes + dropped_edges.len()) % 2 == 0 {
            1
        } else {
            -1
        };
        terms.push((f, sign));
    }
    terms.sort_by(|(a, _), (b, _)| {
        (a.nodes(), a.edge_count(), a.labeled_key()).cmp(&(b.nodes(), b.edge_count(), b.labeled_key()))
    });
    Ok(ProjectionPlan {
        target: g.clone(),
        terms,
    })
}

/// Monte Carlo moment with its standard error.
#[derive(Debug, Clone, Serialize)]
pub struct MomentEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    pub estimand: String,
}

impl MomentEstimate {
    fn from_replicates(values: &[f64], estimand: String) -> Self {
        MomentEstimate {
            value: stats::mean_var(values).0,
            std_error: stats::std_error(values),
            samples: values.len(),
            estimand,
        }
    }

    pub fn z_score(&self) -> f64 {
        if self.std_error == 0.0 {
            if self.value == 0.0 {
                0.0
            } else {
                f64::INFINITY * self.value.signum()
            }
        } else {
            self.value / self.std_error
        }
    }
}

const U_MAX: usize = 4;

/// One draw of all latents on a universe (fixed-size scratch).
#[derive(Clone, Copy)]
struct UniverseDraw {
    xi: [f64; U_MAX],
    eta: [f64; U_MAX],
    zeta: [f64; U_MAX * U_MAX],
}

fn draw_universe(u: Universe, seed: u64) -> UniverseDraw {
    let mut d = UniverseDraw {
        xi: [0.0; U_MAX],
        eta: [0.0; U_MAX],
        zeta: [0.0; U_MAX * U_MAX],
    };
    for i in 0..u.rows {
        d.xi[i] = rng::uniform_at(seed, role::XI, i as u64, 0);
    }
    for j in 0..u.cols {
        d.eta[j] = rng::uniform_at(seed, role::ETA, 0, j as u64);
    }
    for i in 0..u.rows {
        for j in 0..u.cols {
            d.zeta[i * U_MAX + j] = rng::uniform_at(seed, role::ZETA, i as u64, j as u64);
        }
    }
    d
}

/// A plan term with membership masks in universe coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
struct MaskedTerm {
    rows: u8,
    cols: u8,
    edges: u16,
    coeff: f64,
}

fn mask_graph(f: &BipartiteGraph, u: Universe) -> Result<(u8, u8, u16)> {
    let mut rows = 0u8;
    let mut cols = 0u8;
    let mut edges = 0u16;
    for a in 0..f.rows() {
        let i = f.row_label(a);
        if i >= u.rows {
            return Err(Error::UniverseMismatch(format!(
                "row label {i} outside {}x{} universe",
                u.rows, u.cols
            )));
        }
        rows |= 1 << i;
    }
    for b in 0..f.cols() {
        let j = f.col_label(b);
        if j >= u.cols {
            return Err(Error::UniverseMismatch(format!(
                "column label {j} outside {}x{} universe",
                u.rows, u.cols
            )));
        }
        cols |= 1 << j;
    }
    for a in 0..f.rows() {
        for b in 0..f.cols() {
            if f.has_edge(a, b) {
                edges |= 1 << (f.row_label(a) * U_MAX + f.col_label(b));
            }
        }
    }
    Ok((rows, cols, edges))
}

fn mask_plan(plan: &ProjectionPlan, u: Universe) -> Result<Vec<MaskedTerm>> {
    plan.terms
        .iter()
        .map(|(f, c)| {
            let (rows, cols, edges) = mask_graph(f, u)?;
            Ok(MaskedTerm {
                rows,
                cols,
                edges,
                coeff: *c as f64,
            })
        })
        .collect()
}

/// Kernel value on `block` with latents from `base` inside the mask and
/// from `fresh` outside it.
#[inline]
fn masked_kernel_value(
    model: &ModelSpec,
    kernel: &KernelSpec,
    block: &Block,
    term: &MaskedTerm,
    base: &UniverseDraw,
    fresh: &UniverseDraw,
    scratch: &mut Mat,
) -> f64 {
    for (a, &i) in block.rows.iter().enumerate() {
        let xi = if term.rows >> i & 1 == 1 {
            base.xi[i]
        } else {
            fresh.xi[i]
        };
        for (b, &j) in block.cols.iter().enumerate() {
            let eta = if term.cols >> j & 1 == 1 {
                base.eta[j]
            } else {
                fresh.eta[j]
            };
            let cell = i * U_MAX + j;
            let zeta = if term.edges >> cell & 1 == 1 {
                base.zeta[cell]
            } else {
                fresh.zeta[cell]
            };
            scratch.set(a, b, model.realize(xi, eta, zeta));
        }
    }
    kernel.eval_unchecked(scratch)
}

/// Signed plan sum for one side of the coupling.
#[inline]
fn side_value(
    model: &ModelSpec,
    kernel: &KernelSpec,
    block: &Block,
    terms: &[MaskedTerm],
    base: &UniverseDraw,
    fresh: &UniverseDraw,
    scratch: &mut Mat,
) -> f64 {
    let mut acc = 0.0;
    for term in terms {
        acc += term.coeff * masked_kernel_value(model, kernel, block, term, base, fresh, scratch);
    }
    acc
}

/// Replicate values for `E[s1 s2]` where `s_k` is the signed plan sum on
/// its own fresh complement. Per replicate, one shared universe draw and
/// `sides` independent complements; all ordered pairs of distinct
/// complements are averaged (each pair is conditionally independent given
/// the shared draw, so the average stays unbiased and shrinks the
/// complement noise).
fn paired_product_replicates(
    model: &ModelSpec,
    kernel: &KernelSpec,
    universe: Universe,
    terms1: &[MaskedTerm],
    block1: &Block,
    terms2: &[MaskedTerm],
    block2: &Block,
    sides: usize,
    samples: usize,
    seed: u64,
) -> Vec<f64> {
    let sides = sides.max(2);
    let same = terms1 == terms2 && block1 == block2;
    let mut scratch = Mat::zeros(kernel.p(), kernel.q());
    let mut s1 = vec![0.0; sides];
    let mut s2 = vec![0.0; sides];
    let pairs = (sides * (sides - 1)) as f64;
    (0..samples)
        .map(|t| {
            let base = draw_universe(universe, rng::key(seed, &[role::REPLICATE, t as u64, 0]));
            for a in 0..sides {
                let fresh = draw_universe(
                    universe,
                    rng::key(seed, &[role::REPLICATE, t as u64, 1 + a as u64]),
                );
                s1[a] = side_value(model, kernel, block1, terms1, &base, &fresh, &mut scratch);
                s2[a] = if same {
                    s1[a]
                } else {
                    side_value(model, kernel, block2, terms2, &base, &fresh, &mut scratch)
                };
            }
            let mut acc = 0.0;
            for a in 0..sides {
                for b in 0..sides {
                    if a != b {
                        acc += s1[a] * s2[b];
                    }
                }
            }
            acc / pairs
        })
        .collect()
}

/// Unbiased estimate of `E[ E[h|H(F1)] * E[h|H(F2)] ]` for two labeled
/// subgraphs of a common universe, each factor evaluated on its own block.
pub fn cond_exp_pair_moment_in(
    model: &ModelSpec,
    kernel: &KernelSpec,
    universe: Universe,
    f1: &BipartiteGraph,
    block1: &Block,
    f2: &BipartiteGraph,
    block2: &Block,
    samples: usize,
    seed: u64,
) -> Result<MomentEstimate> {
    block1.validate(kernel, universe)?;
    block2.validate(kernel, universe)?;
    let t1 = [term_of(f1, universe)?];
    let t2 = [term_of(f2, universe)?];
    let values = paired_product_replicates(
        model, kernel, universe, &t1, block1, &t2, block2, 2, samples, seed,
    );
    Ok(MomentEstimate::from_replicates(
        &values,
        format!(
            "E[E[{k}|H(F1)] E[{k}|H(F2)]]",
            k = kernel.name()
        ),
    ))
}

fn term_of(f: &BipartiteGraph, u: Universe) -> Result<MaskedTerm> {
    let (rows, cols, edges) = mask_graph(f, u)?;
    Ok(MaskedTerm {
        rows,
        cols,
        edges,
        coeff: 1.0,
    })
}

/// Same-universe convenience: both factors on the leading `p x q` block.
pub fn cond_exp_pair_moment(
    model: &ModelSpec,
    kernel: &KernelSpec,
    f1: &BipartiteGraph,
    f2: &BipartiteGraph,
    samples: usize,
    seed: u64,
) -> Result<MomentEstimate> {
    let universe = Universe::new(kernel.p(), kernel.q())?;
    let block = Block::leading(kernel.p(), kernel.q());
    cond_exp_pair_moment_in(model, kernel, universe, f1, &block, f2, &block, samples, seed)
}

/// Unbiased estimate of `E[p^G1 p^G2]` for two labeled graphs in a common
/// universe (signed double sum over both plans, common random numbers).
pub fn projection_cross_moment(
    model: &ModelSpec,
    kernel: &KernelSpec,
    universe: Universe,
    g1: &BipartiteGraph,
    block1: &Block,
    g2: &BipartiteGraph,
    block2: &Block,
    samples: usize,
    seed: u64,
) -> Result<MomentEstimate> {
    block1.validate(kernel, universe)?;
    block2.validate(kernel, universe)?;
    let t1 = mask_plan(&projection_plan(g1)?, universe)?;
    let t2 = mask_plan(&projection_plan(g2)?, universe)?;
    let values = paired_product_replicates(
        model, kernel, universe, &t1, block1, &t2, block2, 4, samples, seed,
    );
    Ok(MomentEstimate::from_replicates(
        &values,
        format!("E[p^G1 p^G2] ({})", kernel.name()),
    ))
}

/// Canonical embedding of a class representative: rows `0..r`, columns
/// `0..c` of the kernel universe.
pub fn embed_class(class: &GraphClass, kernel: &KernelSpec) -> Result<BipartiteGraph> {
    let rep = &class.representative;
    if rep.rows() > kernel.p() || rep.cols() > kernel.q() {
        return Err(Error::UniverseMismatch(format!(
            "class is {}x{}, kernel arity is {}x{}",
            rep.rows(),
            rep.cols(),
            kernel.p(),
            kernel.q()
        )));
    }
    rep.clone()
        .with_labels((0..rep.rows()).collect(), (0..rep.cols()).collect())
}

/// Unbiased estimate of `E[(p^G)^2]` for one isomorphism class, using the
/// canonical embedding (exchangeability makes the choice immaterial).
pub fn projection_second_moment(
    model: &ModelSpec,
    kernel: &KernelSpec,
    class: &GraphClass,
    samples: usize,
    seed: u64,
) -> Result<MomentEstimate> {
    let g = embed_class(class, kernel)?;
    let universe = Universe::new(kernel.p(), kernel.q())?;
    let block = Block::leading(kernel.p(), kernel.q());
    let mut est = projection_cross_moment(
        model, kernel, universe, &g, &block, &g, &block, samples, seed,
    )?;
    est.estimand = format!(
        "E[(p^G)^2] ({}, G={}x{}:{:x})",
        kernel.name(),
        g.rows(),
        g.cols(),
        g.edges()
    );
    Ok(est)
}

/// Policy for the level scan of `detect_principal_support`.
#[derive(Debug, Clone)]
pub struct DetectPolicy {
    /// Replicates per class in the pilot stage.
    pub pilot: usize,
    /// Familywise significance level per scanned level (default 0.01).
    pub significance: f64,
    /// Highest level to scan; defaults to `p + q`.
    pub max_level: Option<usize>,
    /// Sample multiplier for borderline classes (default 4).
    pub escalation: usize,
    pub seed: u64,
}

impl Default for DetectPolicy {
    fn default() -> Self {
        DetectPolicy {
            pilot: 20_000,
            significance: 0.01,
            max_level: None,
            escalation: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassDecision {
    pub r: usize,
    pub c: usize,
    pub edges_hex: String,
    pub connected: bool,
    pub estimate: f64,
    pub std_error: f64,
    pub z: f64,
    pub samples: usize,
    pub escalated: bool,
    pub nonzero: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelLog {
    pub level: usize,
    pub z_threshold: f64,
    pub decisions: Vec<ClassDecision>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SupportReport {
    pub kernel: String,
    pub principal_degree: usize,
    pub degeneracy_order: usize,
    pub support_classes: Vec<ClassDecision>,
    pub all_connected: bool,
    pub levels: Vec<LevelLog>,
}

/// Scans levels `k = 1, 2, ...` and reports the first level with a class
/// whose estimated `E[(p^G)^2]` is significantly nonzero (one-sided z-test,
/// Bonferroni-corrected within the level, borderline classes re-run at
/// `escalation x pilot` samples).
pub fn detect_principal_support(
    model: &ModelSpec,
    kernel: &KernelSpec,
    policy: &DetectPolicy,
) -> Result<SupportReport> {
    let (p, q) = (kernel.p(), kernel.q());
    let max_level = policy.max_level.unwrap_or(p + q).min(p + q);
    let mut levels = Vec::new();
    for level in 1..=max_level {
        let mut classes: Vec<GraphClass> = Vec::new();
        for r in level.saturating_sub(q)..=level.min(p) {
            let c = level - r;
            if c > q {
                continue;
            }
            classes.extend(enumerate_gamma(r, c)?);
        }
        if classes.is_empty() {
            continue;
        }
        let z_threshold =
            stats::normal_quantile(1.0 - policy.significance / classes.len() as f64);
        let mut decisions = Vec::new();
        for (ci, class) in classes.iter().enumerate() {
            let seed = rng::key(policy.seed, &[level as u64, ci as u64]);
            let pilot = projection_second_moment(model, kernel, class, policy.pilot, seed)?;
            let mut est = pilot;
            let mut escalated = false;
            let z0 = est.z_score();
            if z0 > 2.0 && z0 < z_threshold {
                escalated = true;
                est = projection_second_moment(
                    model,
                    kernel,
                    class,
                    policy.pilot * policy.escalation.max(1),
                    rng::mix(seed, 0x5eed),
                )?;
            }
            let z = est.z_score();
            decisions.push(ClassDecision {
                r: class.representative.rows(),
                c: class.representative.cols(),
                edges_hex: format!("{:x}", class.representative.edges()),
                connected: class.connected,
                estimate: est.value,
                std_error: est.std_error,
                z,
                samples: est.samples,
                escalated,
                nonzero: z > z_threshold,
            });
        }
        let any = decisions.iter().any(|d| d.nonzero);
        levels.push(LevelLog {
            level,
            z_threshold,
            decisions,
        });
        if any {
            let support: Vec<ClassDecision> = levels
                .last()
                .unwrap()
                .decisions
                .iter()
                .filter(|d| d.nonzero)
                .cloned()
                .collect();
            let all_connected = support.iter().all(|d| d.connected);
            return Ok(SupportReport {
                kernel: kernel.name().into(),
                principal_degree: level,
                degeneracy_order: level - 1,
                support_classes: support,
                all_connected,
                levels,
            });
        }
    }
    Err(Error::NoSupportDetected { max_level })
}

/// Evaluates the identity `sum_{F ⊆ K_{p,q}} p^F(X) = X` on one latent
/// configuration: every conditional expectation is given a single value
/// from a shared inner-sample set, and the signed sums telescope exactly.
/// Returns the absolute residual.
pub fn telescoping_check(kernel: &KernelSpec, model: &ModelSpec, seed: u64) -> Result<f64> {
    let (p, q) = (kernel.p(), kernel.q());
    let universe = Universe::new(p, q)?;
    let block = Block::leading(p, q);
    let full = BipartiteGraph::complete(p, q)?
        .with_labels((0..p).collect(), (0..q).collect())?;

    let base = draw_universe(universe, rng::key(seed, &[0xbace]));
    let inner: Vec<UniverseDraw> = (0..32)
        .map(|r| draw_universe(universe, rng::key(seed, &[0xf2e5, r])))
        .collect();
    let mut scratch = Mat::zeros(p, q);

    // One value per conditional expectation, shared across every plan.
    let mut value_of = std::collections::HashMap::new();
    for f in full.labeled_subgraphs() {
        let term = term_of(&f, universe)?;
        let mean = inner
            .iter()
            .map(|fresh| {
                masked_kernel_value(model, kernel, &block, &term, &base, fresh, &mut scratch)
            })
            .sum::<f64>()
            / inner.len() as f64;
        value_of.insert(f.labeled_key(), mean);
    }

    let mut total = 0.0;
    for f in full.labeled_subgraphs() {
        for (sub, coeff) in projection_plan(&f)?.terms() {
            total += *coeff as f64 * value_of[&sub.labeled_key()];
        }
    }
    let full_term = term_of(&full, universe)?;
    let h_at_base =
        masked_kernel_value(model, kernel, &block, &full_term, &base, &base, &mut scratch);
    Ok((total - h_at_base).abs())
}

/// Closed-form conditional expectations from the running-example
/// derivations, used as oracles against the Monte Carlo estimators.
///
/// `Row`/`Col` name which latents are conditioned on; `Edge(s)` add the
/// matrix entries those edges expose. The required inputs are the latent
/// values in `xi`/`eta` and the entries in `y`, in the documented order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CondExpId {
    /// `E[h3 | xi1, xi2]`
    H3Rows,
    /// `E[h3 | eta1, eta2]`
    H3Cols,
    /// `E[h3 | xi1, eta1]`
    H3RowCol,
    /// `E[h3 | xi1, eta1, zeta11]`; `y = [Y11]`
    H3RowColEdge,
    /// `E[h3 | xi1, xi2, eta1]`
    H3RowsCol,
    /// `E[h3 | xi1, xi2, eta1, zeta11]`; `y = [Y11]`
    H3RowsColEdge,
    /// `E[h3 | xi1, xi2, eta1, zeta11, zeta21]`; `y = [Y11, Y21]`
    H3RowsColEdges,
    /// `E[h3 | xi1, eta1, eta2]`
    H3RowCols,
    /// `E[h3 | xi1, eta1, eta2, zeta11]`; `y = [Y11]`
    H3RowColsEdge,
    /// `E[h3 | xi1, eta1, eta2, zeta11, zeta12]`; `y = [Y11, Y12]`
    H3RowColsEdges,
    /// `E[ E[h3 | H(K_{1,2})]^2 ]` (no latent inputs)
    H3SecondMomentK12,
    /// `E[h6]`
    H6Mean,
    /// `E[h6 | xi1]`
    H6Row,
    /// `E[h6 | eta1]`
    H6Col,
    /// `E[h6 | xi1, xi2]`
    H6Rows,
    /// `E[h6 | eta1, eta2]`
    H6Cols,
    /// `E[h6 | xi1, eta1]`
    H6RowCol,
    /// `E[h6 | xi1, eta1, zeta11]`; `y = [Y11]`
    H6RowColEdge,
    /// `E[(p^{K_{1,1}})^2]` for h6 under alpha = 0 (no latent inputs)
    H6SecondMomentK11,
}

/// Inputs for [`analytic_cond_exp`]: model parameters plus the conditioning
/// latents / entries the chosen formula reads.
#[derive(Debug, Clone)]
pub struct CondExpInputs {
    pub lambda: f64,
    pub f: crate::models::DegreeFunction,
    pub g: crate::models::DegreeFunction,
    pub alpha: f64,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub y: Vec<f64>,
}

impl Default for CondExpInputs {
    fn default() -> Self {
        CondExpInputs {
            lambda: 1.0,
            f: crate::models::DegreeFunction::Constant,
            g: crate::models::DegreeFunction::Constant,
            alpha: 0.0,
            xi: Vec::new(),
            eta: Vec::new(),
            y: Vec::new(),
        }
    }
}

fn need(slice: &[f64], n: usize, what: &'static str) -> Result<()> {
    if slice.len() < n {
        return Err(Error::InvalidParameter {
            name: what,
            reason: format!("formula needs {n} value(s), got {}", slice.len()),
        });
    }
    Ok(())
}

/// Evaluates one closed-form conditional expectation.
pub fn analytic_cond_exp(id: CondExpId, inp: &CondExpInputs) -> Result<f64> {
    use CondExpId::*;
    let l = inp.lambda;
    let f2 = inp.f.moment(2);
    let f3 = inp.f.moment(3);
    let f4 = inp.f.moment(4);
    let g2 = inp.g.moment(2);
    let g3 = inp.g.moment(3);
    let a = inp.alpha;
    let fx = |i: usize| inp.f.eval(inp.xi[i]);
    let ge = |j: usize| inp.g.eval(inp.eta[j]);
    Ok(match id {
        H3Rows => {
            need(&inp.xi, 2, "xi")?;
            l * l / 2.0 * (fx(0) - fx(1)).powi(2)
        }
        H3Cols => {
            need(&inp.eta, 2, "eta")?;
            l * l * (f2 - 1.0) * ge(0) * ge(1)
        }
        H3RowCol => {
            need(&inp.xi, 1, "xi")?;
            need(&inp.eta, 1, "eta")?;
            l * l / 2.0 * (fx(0) * fx(0) - 2.0 * fx(0) + f2) * ge(0)
        }
        H3RowColEdge => {
            need(&inp.xi, 1, "xi")?;
            need(&inp.eta, 1, "eta")?;
            need(&inp.y, 1, "y")?;
            l / 2.0 * (fx(0) - 1.0) * inp.y[0] + l * l / 2.0 * (f2 - fx(0)) * ge(0)
        }
        H3RowsCol => {
            need(&inp.xi, 2, "xi")?;
            need(&inp.eta, 1, "eta")?;
            l * l / 2.0 * (fx(0) - fx(1)).powi(2) * ge(0)
        }
        H3RowsColEdge => {
            need(&inp.xi, 2, "xi")?;
            need(&inp.eta, 1, "eta")?;
            need(&inp.y, 1, "y")?;
            l / 2.0 * (fx(0) - fx(1)) * inp.y[0]
                + l * l / 2.0 * (fx(1) - fx(0)) * fx(1) * ge(0)
        }
        H3RowsColEdges => {
            need(&inp.xi, 2, "xi")?;
            need(&inp.y, 2, "y")?;
            l / 2.0 * (fx(0) - fx(1)) * (inp.y[0] - inp.y[1])
        }
        H3RowCols => {
            need(&inp.xi, 1, "xi")?;
            need(&inp.eta, 2, "eta")?;
            l * l / 2.0 * (fx(0) * fx(0) - 2.0 * fx(0) + f2) * ge(0) * ge(1)
        }
        H3RowColsEdge => {
            need(&inp.xi, 1, "xi")?;
            need(&inp.eta, 2, "eta")?;
            need(&inp.y, 1, "y")?;
            l / 2.0 * (fx(0) - 1.0) * ge(1) * inp.y[0]
                + l * l / 2.0 * (f2 - fx(0)) * ge(0) * ge(1)
        }
        H3RowColsEdges => {
            need(&inp.eta, 2, "eta")?;
            need(&inp.y, 2, "y")?;
            0.5 * inp.y[0] * inp.y[1] - l / 2.0 * (ge(1) * inp.y[0] + ge(0) * inp.y[1])
                + l * l / 2.0 * f2 * ge(0) * ge(1)
        }
        H3SecondMomentK12 => {
            l * l / 4.0 * f2
                + l.powi(3) / 2.0 * (f3 - 2.0 * f2 + 1.0) * g2
                + l.powi(4) / 4.0 * (f4 - 4.0 * f3 + 3.0 * f2 * f2) * g2 * g2
        }
        H6Mean => l.powi(3) * f2 * g2 * a,
        H6Row => {
            need(&inp.xi, 1, "xi")?;
            l.powi(3) / 2.0 * fx(0) * (fx(0) + f2) * g2 * a
        }
        H6Col => {
            need(&inp.eta, 1, "eta")?;
            l.powi(3) / 2.0 * f2 * ge(0) * (ge(0) + g2) * a
        }
        H6Rows => {
            need(&inp.xi, 2, "xi")?;
            l.powi(3) / 2.0 * (fx(0) * fx(0) * fx(1) + fx(1) * fx(1) * fx(0)) * g2 * a
        }
        H6Cols => {
            need(&inp.eta, 2, "eta")?;
            l.powi(3) / 2.0 * f2 * (ge(0) * ge(0) * ge(1) + ge(1) * ge(1) * ge(0)) * a
        }
        H6RowCol => {
            need(&inp.xi, 1, "xi")?;
            need(&inp.eta, 1, "eta")?;
            l.powi(3) / 4.0
                * fx(0)
                * ge(0)
                * (fx(0) * ge(0) + fx(0) * g2 + f2 * ge(0) + f2 * g2)
                * a
        }
        H6RowColEdge => {
            need(&inp.xi, 1, "xi")?;
            need(&inp.eta, 1, "eta")?;
            need(&inp.y, 1, "y")?;
            let (fv, gv, y) = (fx(0), ge(0), inp.y[0]);
            l.powi(3) / 4.0 * fv * gv * (fv * g2 * (a + 1.0) + f2 * gv * (a + 1.0) - f2 * g2)
                + l * l / 4.0 * y * (f2 * g2 * (a + 1.0) - fv * g2 - f2 * gv - fv * gv)
                + l / 4.0 * y * (y - 1.0)
        }
        H6SecondMomentK11 => {
            l.powi(4) / 16.0 * (l * (f3 - f2 * f2) * (g3 - g2 * g2) + 2.0 * f2 * g2)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::builtin;
    use crate::models::{sample, DegreeFunction, ModelSpec};
    use approx::assert_relative_eq;
    use std::collections::HashMap;

    fn power(a: f64) -> DegreeFunction {
        DegreeFunction::power(a).unwrap()
    }

    fn labeled(r: usize, c: usize, edges: u16, rows: Vec<usize>, cols: Vec<usize>) -> BipartiteGraph {
        BipartiteGraph::new(r, c, edges)
            .unwrap()
            .with_labels(rows, cols)
            .unwrap()
    }

    /// Direct memoized expansion of the recursion
    /// `p^F = E[.|H(F)] - sum_{F' subset F} p^{F'}`, as an independent
    /// oracle for the closed-form plan coefficients.
    fn plan_by_recursion(g: &BipartiteGraph) -> HashMap<Vec<u8>, i64> {
        type Key = (Vec<usize>, Vec<usize>, Vec<(usize, usize)>);
        fn key_bytes(k: &Key) -> Vec<u8> {
            format!("{k:?}").into_bytes()
        }
        fn subsets_of(g: &BipartiteGraph) -> Vec<BipartiteGraph> {
            g.labeled_subgraphs()
        }
        fn go(
            g: &BipartiteGraph,
            memo: &mut HashMap<Vec<u8>, HashMap<Vec<u8>, i64>>,
        ) -> HashMap<Vec<u8>, i64> {
            let me = key_bytes(&g.labeled_key());
            if let Some(hit) = memo.get(&me) {
                return hit.clone();
            }
            let mut plan: HashMap<Vec<u8>, i64> = HashMap::new();
            plan.insert(me.clone(), 1);
            for f in subsets_of(g) {
                if f.labeled_key() == g.labeled_key() {
                    continue;
                }
                for (k, v) in go(&f, memo) {
                    *plan.entry(k).or_insert(0) -= v;
                }
            }
            plan.retain(|_, v| *v != 0);
            memo.insert(me, plan.clone());
            plan
        }
        let mut memo = HashMap::new();
        go(g, &mut memo)
    }

    #[test]
    fn plan_for_k11_matches_worked_example() {
        // The five projections of the K_{1,1} lattice.
        let k11 = labeled(1, 1, 0b1, vec![0], vec![0]);
        let plan = projection_plan(&k11).unwrap();
        assert_eq!(plan.terms().len(), 2);
        assert_eq!(plan.coefficient(&k11), 1);
        assert_eq!(plan.coefficient(&labeled(1, 1, 0, vec![0], vec![0])), -1);
        assert_eq!(plan.coefficient(&labeled(1, 0, 0, vec![0], vec![])), 0);

        let f4 = labeled(1, 1, 0, vec![0], vec![0]);
        let plan4 = projection_plan(&f4).unwrap();
        assert_eq!(plan4.coefficient(&f4), 1);
        assert_eq!(plan4.coefficient(&labeled(1, 0, 0, vec![0], vec![])), -1);
        assert_eq!(plan4.coefficient(&labeled(0, 1, 0, vec![], vec![0])), -1);
        assert_eq!(plan4.coefficient(&BipartiteGraph::empty()), 1);

        let f2 = labeled(1, 0, 0, vec![0], vec![]);
        let plan2 = projection_plan(&f2).unwrap();
        assert_eq!(plan2.coefficient(&f2), 1);
        assert_eq!(plan2.coefficient(&BipartiteGraph::empty()), -1);

        let empty_plan = projection_plan(&BipartiteGraph::empty()).unwrap();
        assert_eq!(empty_plan.terms().len(), 1);
        assert_eq!(empty_plan.coefficient(&BipartiteGraph::empty()), 1);
    }

    #[test]
    fn plan_matches_recursion_oracle_on_k22_lattice() {
        let host = BipartiteGraph::complete(2, 2)
            .unwrap()
            .with_labels(vec![0, 1], vec![0, 1])
            .unwrap();
        for g in host.labeled_subgraphs() {
            let closed = projection_plan(&g).unwrap();
            let oracle = plan_by_recursion(&g);
            let mut closed_map: HashMap<Vec<u8>, i64> = HashMap::new();
            for (f, c) in closed.terms() {
                closed_map.insert(format!("{:?}", f.labeled_key()).into_bytes(), *c);
            }
            assert_eq!(closed_map, oracle, "graph {:?}", g.labeled_key());
        }
    }

    #[test]
    fn plans_telescope_exactly() {
        // sum over F of the coefficient of F' across all plans is 1 for
        // F' = K_{p,q} and 0 otherwise.
        let host = BipartiteGraph::complete(2, 2)
            .unwrap()
            .with_labels(vec![0, 1], vec![0, 1])
            .unwrap();
        let mut totals: HashMap<Vec<u8>, i64> = HashMap::new();
        for f in host.labeled_subgraphs() {
            for (sub, c) in projection_plan(&f).unwrap().terms() {
                *totals
                    .entry(format!("{:?}", sub.labeled_key()).into_bytes())
                    .or_insert(0) += c;
            }
        }
        let host_key = format!("{:?}", host.labeled_key()).into_bytes();
        for (k, v) in totals {
            assert_eq!(v, i64::from(k == host_key));
        }
    }

    #[test]
    fn telescoping_residual_tiny() {
        let gaussian = ModelSpec::GaussianIid;
        let poisson = ModelSpec::poisson_bedd(1.0, power(1.0), power(0.5)).unwrap();
        for seed in [1u64, 2, 3] {
            assert!(telescoping_check(&builtin("h2").unwrap(), &gaussian, seed).unwrap() < 1e-10);
            assert!(telescoping_check(&builtin("h6").unwrap(), &poisson, seed).unwrap() < 1e-10);
            assert!(telescoping_check(&builtin("h1").unwrap(), &gaussian, seed).unwrap() < 1e-10);
        }
        let constk = KernelSpec::new("const", 2, 2, true, |_: &Mat| 2.75);
        assert_eq!(telescoping_check(&constk, &gaussian, 9).unwrap(), 0.0);
    }

    #[test]
    fn pair_moment_full_graph_gives_second_moment() {
        // E[h1^2] under GaussianIid is E[Y11^2 Y12^2] = 1.
        let h1 = builtin("h1").unwrap();
        let full = labeled(1, 2, 0b11, vec![0], vec![0, 1]);
        let est = cond_exp_pair_moment(&ModelSpec::GaussianIid, &h1, &full, &full, 40_000, 4).unwrap();
        assert!(
            (est.value - 1.0).abs() < 3.0 * est.std_error,
            "{est:?}"
        );
    }

    #[test]
    fn pair_moment_empty_graphs_give_squared_mean() {
        let h1 = builtin("h1").unwrap();
        let empty = BipartiteGraph::empty();
        let est =
            cond_exp_pair_moment(&ModelSpec::GaussianIid, &h1, &empty, &empty, 20_000, 5).unwrap();
        assert!(est.value.abs() < 3.0 * est.std_error, "{est:?}");
    }

    #[test]
    fn pair_moment_row_col_under_null_vanishes() {
        // f == 1 kills E[h3 | xi] and E[h3 | eta].
        let h3 = builtin("h3").unwrap();
        let model = ModelSpec::poisson_bedd(1.0, DegreeFunction::Constant, power(1.0)).unwrap();
        let row = labeled(1, 0, 0, vec![0], vec![]);
        let col = labeled(0, 1, 0, vec![], vec![0]);
        let est = cond_exp_pair_moment(&model, &h3, &row, &col, 20_000, 6).unwrap();
        assert!(est.value.abs() < 3.0 * est.std_error, "{est:?}");
    }

    #[test]
    fn second_moment_k12_h1_gaussian_is_one() {
        let h1 = builtin("h1").unwrap();
        let class = enumerate_gamma(1, 2)
            .unwrap()
            .into_iter()
            .find(|c| c.representative.edge_count() == 2)
            .unwrap();
        let est =
            projection_second_moment(&ModelSpec::GaussianIid, &h1, &class, 40_000, 7).unwrap();
        assert!((est.value - 1.0).abs() < 3.0 * est.std_error, "{est:?}");
    }

    #[test]
    fn second_moment_k12_h3_null_is_quarter() {
        let h3 = builtin("h3").unwrap();
        let model =
            ModelSpec::poisson_bedd(1.0, DegreeFunction::Constant, power(1.0 + 2f64.sqrt()))
                .unwrap();
        let class = enumerate_gamma(1, 2)
            .unwrap()
            .into_iter()
            .find(|c| c.representative.edge_count() == 2)
            .unwrap();
        let est = projection_second_moment(&model, &h3, &class, 60_000, 8).unwrap();
        assert!(
            (est.value - 0.25).abs() < 3.0 * est.std_error,
            "{est:?}"
        );
    }

    #[test]
    fn gaussian_small_graphs_project_to_zero() {
        // Under GaussianIid every G with r+c = 2 has p^G = 0 for h1.
        let h1 = builtin("h1").unwrap();
        for class in enumerate_gamma(1, 1)
            .unwrap()
            .into_iter()
            .chain(enumerate_gamma(0, 2).unwrap())
        {
            let est =
                projection_second_moment(&ModelSpec::GaussianIid, &h1, &class, 20_000, 9).unwrap();
            assert!(
                est.value.abs() <= 3.0 * est.std_error.max(1e-12),
                "{est:?}"
            );
        }
    }

    #[test]
    fn cross_moment_orthogonality() {
        // Distinct labeled graphs have orthogonal projections; use two
        // disjoint K_{1,1} copies inside a 2x2 universe under a Poisson
        // model (both have nonzero individual second moments for h6).
        let h6 = builtin("h6").unwrap();
        let model = ModelSpec::poisson_bedd(1.0, power(1.0), power(1.0)).unwrap();
        let u = Universe::new(2, 2).unwrap();
        let block = Block::leading(2, 2);
        let g1 = labeled(1, 1, 0b1, vec![0], vec![0]);
        let g2 = labeled(1, 1, 0b1, vec![1], vec![1]);
        let est =
            projection_cross_moment(&model, &h6, u, &g1, &block, &g2, &block, 40_000, 10).unwrap();
        assert!(est.value.abs() < 3.0 * est.std_error, "{est:?}");
        // Also across nested graphs: K_{1,1} vs its edgeless subgraph.
        let g3 = labeled(1, 1, 0, vec![0], vec![0]);
        let est2 =
            projection_cross_moment(&model, &h6, u, &g1, &block, &g3, &block, 40_000, 11).unwrap();
        assert!(est2.value.abs() < 3.0 * est2.std_error, "{est2:?}");
    }

    #[test]
    fn projection_annihilates_smaller_graph_probes() {
        // E[p^F * probe(H(F'))] = 0 for F' strictly inside F: realized by
        // multiplying the side-1 signed sum with a bounded function of the
        // base draw's F' latents.
        let h6 = builtin("h6").unwrap();
        let model = ModelSpec::poisson_bedd(1.0, power(1.0), power(1.0)).unwrap();
        let u = Universe::new(2, 2).unwrap();
        let block = Block::leading(2, 2);
        let f = labeled(1, 1, 0b1, vec![0], vec![0]);
        let terms = mask_plan(&projection_plan(&f).unwrap(), u).unwrap();
        let mut scratch = Mat::zeros(2, 2);
        let samples = 40_000;
        let mut values = Vec::with_capacity(samples);
        for t in 0..samples {
            let base = draw_universe(u, rng::key(12, &[role::REPLICATE, t as u64, 0]));
            let fresh = draw_universe(u, rng::key(12, &[role::REPLICATE, t as u64, 1]));
            let s = side_value(&model, &h6, &block, &terms, &base, &fresh, &mut scratch);
            // probe of H(F') for F' = the row node alone
            let probe = (std::f64::consts::TAU * base.xi[0]).cos();
            values.push(s * probe);
        }
        let est = MomentEstimate::from_replicates(&values, "annihilation".into());
        assert!(est.value.abs() < 3.0 * est.std_error, "{est:?}");
    }

    #[test]
    fn analytic_cond_exp_examples() {
        // E[h3 | xi] with f = 2u at (xi1, xi2) = (1, 0).
        let inp = CondExpInputs {
            f: power(1.0),
            xi: vec![1.0, 0.0],
            ..Default::default()
        };
        assert_relative_eq!(
            analytic_cond_exp(CondExpId::H3Rows, &inp).unwrap(),
            2.0,
            epsilon = 1e-12
        );
        // E[h6] at f = g = 2u, alpha = 1/2.
        let inp6 = CondExpInputs {
            f: power(1.0),
            g: power(1.0),
            alpha: 0.5,
            ..Default::default()
        };
        assert_relative_eq!(
            analytic_cond_exp(CondExpId::H6Mean, &inp6).unwrap(),
            8.0 / 9.0,
            epsilon = 1e-12
        );
        // Second moment of E[h3 | H(K12)] under f == 1 collapses to l^2/4.
        let null = CondExpInputs::default();
        assert_relative_eq!(
            analytic_cond_exp(CondExpId::H3SecondMomentK12, &null).unwrap(),
            0.25,
            epsilon = 1e-12
        );
        // Missing inputs are rejected.
        assert!(analytic_cond_exp(CondExpId::H3Rows, &CondExpInputs::default()).is_err());
    }

    #[test]
    fn analytic_matches_conditional_resampling() {
        // Estimate E[h3 | xi1, xi2] by holding the two row latents of a
        // base sample fixed and redrawing everything else.
        let model = ModelSpec::poisson_bedd(1.5, power(1.0), power(0.5)).unwrap();
        let h3 = builtin("h3").unwrap();
        let base = sample(&model, 2, 2, 31).unwrap();
        let g = BipartiteGraph::new(2, 0, 0)
            .unwrap()
            .with_labels(vec![0, 1], vec![])
            .unwrap();
        let reps = 30_000;
        let mut vals = Vec::with_capacity(reps);
        for t in 0..reps {
            let re = crate::models::resample_given(&model, &base, &g, 900 + t as u64).unwrap();
            vals.push(h3.evaluate(&re.y).unwrap());
        }
        let est = MomentEstimate::from_replicates(&vals, "E[h3|xi]".into());
        let inp = CondExpInputs {
            lambda: 1.5,
            f: power(1.0),
            g: power(0.5),
            xi: base.xi.clone(),
            ..Default::default()
        };
        let expect = analytic_cond_exp(CondExpId::H3Rows, &inp).unwrap();
        assert!(
            (est.value - expect).abs() < 3.0 * est.std_error,
            "{est:?} expect {expect}"
        );
    }

    #[test]
    fn pair_moment_matches_analytic_k12_second_moment() {
        // General f: E[E[h3|H(K12)]^2] has the Appendix closed form.
        let model = ModelSpec::poisson_bedd(1.0, power(1.0), power(1.0)).unwrap();
        let h3 = builtin("h3").unwrap();
        let f = labeled(1, 2, 0b11, vec![0], vec![0, 1]);
        let est = cond_exp_pair_moment(&model, &h3, &f, &f, 60_000, 13).unwrap();
        let inp = CondExpInputs {
            f: power(1.0),
            g: power(1.0),
            ..Default::default()
        };
        let expect = analytic_cond_exp(CondExpId::H3SecondMomentK12, &inp).unwrap();
        assert_relative_eq!(expect, 107.0 / 135.0, epsilon = 1e-12);
        assert!(
            (est.value - expect).abs() < 3.0 * est.std_error,
            "{est:?} expect {expect}"
        );
    }

    #[test]
    fn h6_second_moment_closed_form_matches_mc() {
        let model = ModelSpec::overdispersed(1.0, power(1.0), power(1.0), 0.0).unwrap();
        let h6 = builtin("h6").unwrap();
        let class = enumerate_gamma(1, 1)
            .unwrap()
            .into_iter()
            .find(|c| c.representative.edge_count() == 1)
            .unwrap();
        let est = projection_second_moment(&model, &h6, &class, 60_000, 14).unwrap();
        let inp = CondExpInputs {
            f: power(1.0),
            g: power(1.0),
            ..Default::default()
        };
        let expect = analytic_cond_exp(CondExpId::H6SecondMomentK11, &inp).unwrap();
        assert_relative_eq!(expect, 292.0 / 81.0 / 16.0, epsilon = 1e-12);
        assert!(
            (est.value - expect).abs() < 3.0 * est.std_error,
            "{est:?} expect {expect}"
        );
    }

    #[test]
    fn detect_support_h6_overdispersed_null() {
        let model = ModelSpec::overdispersed(1.0, power(1.0), power(1.0), 0.0).unwrap();
        let h6 = builtin("h6").unwrap();
        let policy = DetectPolicy {
            seed: 2024,
            ..Default::default()
        };
        let report = detect_principal_support(&model, &h6, &policy).unwrap();
        assert_eq!(report.principal_degree, 2);
        assert_eq!(report.degeneracy_order, 1);
        assert_eq!(report.support_classes.len(), 1);
        let cls = &report.support_classes[0];
        assert_eq!((cls.r, cls.c, cls.edges_hex.as_str()), (1, 1, "1"));
        assert!(report.all_connected);
    }

    #[test]
    fn detect_support_constant_kernel_errors() {
        let constk = KernelSpec::new("const", 1, 1, true, |_: &Mat| 1.0);
        let policy = DetectPolicy {
            pilot: 2_000,
            seed: 3,
            ..Default::default()
        };
        let err = detect_principal_support(&ModelSpec::GaussianIid, &constk, &policy);
        assert!(matches!(err, Err(Error::NoSupportDetected { .. })));
    }
}
