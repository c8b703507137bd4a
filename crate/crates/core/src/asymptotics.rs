//! Variance assembly and test statistics.
//!
//! `V^{(r,c)}` aggregates the per-class projection second moments with the
//! combinatorial prefactor `p!^2 q!^2 / ((p-r)!^2 (q-c)!^2)`; the finite-size
//! variance and the balanced/unbalanced asymptotic variances are weighted
//! sums over the table. The statistics `Z^A`, `Z^B`, `Z^B'`, `Z^C` scale the
//! corresponding U-statistics by their closed-form null standard deviations.

use crate::decomp::{self, CondExpId, CondExpInputs};
use crate::error::{Error, Result};
use crate::graph::{enumerate_gamma, factorial};
use crate::kernels::KernelSpec;
use crate::mat::Mat;
use crate::models::{DegreeFunction, ModelSpec};
use crate::stats;
use crate::ustat;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::str::FromStr;

/// Growth regime of `(m_N, n_N)`: balanced shares with `m_N/N -> rho`, or
/// separate powers `m_N ~ N^a`, `n_N ~ N^b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SizeRegime {
    Balanced { rho: f64 },
    Power { a: f64, b: f64 },
}

impl SizeRegime {
    pub fn balanced(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidParameter {
                name: "rho",
                reason: format!("must lie in (0,1), got {rho}"),
            });
        }
        Ok(SizeRegime::Balanced { rho })
    }

    pub fn power(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidParameter {
                name: "a,b",
                reason: format!("exponents must be positive, got ({a}, {b})"),
            });
        }
        Ok(SizeRegime::Power { a, b })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct VEntry {
    pub value: f64,
    pub std_error: f64,
    pub exact: bool,
}

/// The table of `V^{(r,c)}` for `(0,0) < (r,c) <= (p,q)`.
#[derive(Debug, Clone, Serialize)]
pub struct VTable {
    pub p: usize,
    pub q: usize,
    entries: BTreeMap<(usize, usize), VEntry>,
}

impl VTable {
    pub fn new(p: usize, q: usize) -> Self {
        VTable {
            p,
            q,
            entries: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, r: usize, c: usize, entry: VEntry) {
        self.entries.insert((r, c), entry);
    }

    pub fn get(&self, r: usize, c: usize) -> Option<&VEntry> {
        self.entries.get(&(r, c))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize), &VEntry)> {
        self.entries.iter()
    }

    /// Entries treated as nonzero: exact nonzero values, or Monte Carlo
    /// values exceeding three standard errors.
    pub fn nonzero_entries(&self) -> Vec<(usize, usize)> {
        self.entries
            .iter()
            .filter(|(_, e)| {
                if e.exact {
                    e.value != 0.0
                } else {
                    e.value > 3.0 * e.std_error
                }
            })
            .map(|(&k, _)| k)
            .collect()
    }
}

/// Hardcoded exact `E[(p^G)^2]` per class for the model/kernel pairs whose
/// closed forms are implemented; `None` falls back to Monte Carlo.
fn exact_class_second_moment(
    model: &ModelSpec,
    kernel: &KernelSpec,
    class: &crate::graph::GraphClass,
) -> Option<f64> {
    let rep = &class.representative;
    let level = rep.nodes();
    match (model, kernel.name()) {
        (ModelSpec::GaussianIid, "h1") => {
            // The full K_{1,2} carries everything; E[Y11^2 Y12^2] = 1.
            if rep.rows() == 1 && rep.cols() == 2 && rep.edge_count() == 2 {
                Some(1.0)
            } else {
                Some(0.0)
            }
        }
        (ModelSpec::PoissonBedd { lambda, f, g }, "h3") if f.is_constant() => {
            if rep.rows() == 1 && rep.cols() == 2 && rep.edge_count() == 2 {
                let inp = CondExpInputs {
                    lambda: *lambda,
                    f: *f,
                    g: *g,
                    ..Default::default()
                };
                // With F2 = F3 = F4 = 1 all sub-projections vanish, so the
                // second moment of the conditional expectation is E[(p^G)^2].
                Some(decomp::analytic_cond_exp(CondExpId::H3SecondMomentK12, &inp).unwrap())
            } else if level <= 3 {
                Some(0.0)
            } else {
                None
            }
        }
        (ModelSpec::OverdispersedPoissonBedd { lambda, f, g, alpha }, "h6") if *alpha == 0.0 => {
            h6_exact_class(*lambda, *f, *g, rep, level)
        }
        (ModelSpec::PoissonBedd { lambda, f, g }, "h6") => h6_exact_class(*lambda, *f, *g, rep, level),
        _ => None,
    }
}

fn h6_exact_class(
    lambda: f64,
    f: DegreeFunction,
    g: DegreeFunction,
    rep: &crate::graph::BipartiteGraph,
    level: usize,
) -> Option<f64> {
    if rep.rows() == 1 && rep.cols() == 1 && rep.edge_count() == 1 {
        let inp = CondExpInputs {
            lambda,
            f,
            g,
            ..Default::default()
        };
        Some(decomp::analytic_cond_exp(CondExpId::H6SecondMomentK11, &inp).unwrap())
    } else if level <= 2 {
        Some(0.0)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VBudget {
    pub samples_per_class: usize,
    pub seed: u64,
}

impl Default for VBudget {
    fn default() -> Self {
        VBudget {
            samples_per_class: 50_000,
            seed: 0,
        }
    }
}

/// Fills `V^{(r,c)}` for every `(0,0) < (r,c) <= (p,q)` from the per-class
/// second moments, substituting closed forms where available.
pub fn v_table(model: &ModelSpec, kernel: &KernelSpec, budget: &VBudget) -> Result<VTable> {
    let (p, q) = (kernel.p(), kernel.q());
    let mut table = VTable::new(p, q);
    for r in 0..=p {
        for c in 0..=q {
            if (r, c) == (0, 0) {
                continue;
            }
            let pref = (factorial(p) * factorial(q)) as f64
                / (factorial(p - r) * factorial(q - c)) as f64;
            let pref2 = pref * pref;
            let mut value = 0.0;
            let mut var = 0.0;
            let mut exact = true;
            for (ci, class) in enumerate_gamma(r, c)?.iter().enumerate() {
                let inv_aut = 1.0 / class.aut_count as f64;
                match exact_class_second_moment(model, kernel, class) {
                    Some(v) => value += inv_aut * v,
                    None => {
                        exact = false;
                        let est = decomp::projection_second_moment(
                            model,
                            kernel,
                            class,
                            budget.samples_per_class,
                            crate::rng::key(budget.seed, &[r as u64, c as u64, ci as u64]),
                        )?;
                        value += inv_aut * est.value;
                        var += (inv_aut * est.std_error).powi(2);
                    }
                }
            }
            table.set(
                r,
                c,
                VEntry {
                    value: pref2 * value,
                    std_error: pref2 * var.sqrt(),
                    exact,
                },
            );
        }
    }
    Ok(table)
}

/// Exact finite-size variance
/// `V[U_{m,n}] = sum (m-r)!/m! (n-c)!/n! V^{(r,c)}`.
pub fn finite_variance(vt: &VTable, m: usize, n: usize) -> Result<f64> {
    if m < vt.p || n < vt.q {
        return Err(Error::DimensionShortfall {
            m,
            n,
            p: vt.p,
            q: vt.q,
        });
    }
    let mut total = 0.0;
    for (&(r, c), e) in vt.entries() {
        let mut w = 1.0;
        for i in 0..r {
            w /= (m - i) as f64;
        }
        for j in 0..c {
            w /= (n - j) as f64;
        }
        total += w * e.value;
    }
    Ok(total)
}

/// Asymptotic variance for the balanced regime:
/// `sigma^2 = sum_{r+c=d} rho^-r (1-rho)^-c V^{(r,c)}`.
pub fn sigma_squared_balanced(vt: &VTable, d: usize, rho: f64) -> Result<f64> {
    if d > vt.p + vt.q {
        return Err(Error::DegreeOutOfRange {
            d,
            max: vt.p + vt.q,
        });
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidParameter {
            name: "rho",
            reason: format!("must lie in (0,1), got {rho}"),
        });
    }
    let mut total = 0.0;
    for (&(r, c), e) in vt.entries() {
        if r + c == d {
            total += rho.powi(-(r as i32)) * (1.0 - rho).powi(-(c as i32)) * e.value;
        }
    }
    Ok(total)
}

/// Principal structure under `m_N ~ N^a`, `n_N ~ N^b`.
#[derive(Debug, Clone, Serialize)]
pub struct UnbalancedPrincipal {
    /// Argmin set of `a r + b c` over nonzero entries, sorted.
    pub principal_degrees: Vec<(usize, usize)>,
    /// `gamma(N) = N^e` with `e` the minimal exponent.
    pub gamma_exponent: f64,
    /// All one under the normalization `m_N = N^a`, `n_N = N^b` exactly.
    pub alpha_weights: Vec<f64>,
    pub sigma_squared: f64,
}

/// Finds the principal degrees, normalization exponent and asymptotic
/// variance for a power-growth regime from the nonzero pattern of `vt`.
pub fn unbalanced_principal(vt: &VTable, a: f64, b: f64) -> Result<UnbalancedPrincipal> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidParameter {
            name: "a,b",
            reason: format!("exponents must be positive, got ({a}, {b})"),
        });
    }
    let nonzero = vt.nonzero_entries();
    if nonzero.is_empty() {
        return Err(Error::EmptyNonzeroPattern);
    }
    let exponent = |(r, c): (usize, usize)| a * r as f64 + b * c as f64;
    let min_e = nonzero
        .iter()
        .map(|&rc| exponent(rc))
        .fold(f64::INFINITY, f64::min);
    let mut principal: Vec<(usize, usize)> = nonzero
        .into_iter()
        .filter(|&rc| exponent(rc) <= min_e + 1e-12)
        .collect();
    principal.sort_unstable();
    let sigma_squared = principal
        .iter()
        .map(|&(r, c)| vt.get(r, c).map_or(0.0, |e| e.value))
        .sum();
    Ok(UnbalancedPrincipal {
        alpha_weights: vec![1.0; principal.len()],
        principal_degrees: principal,
        gamma_exponent: min_e,
        sigma_squared,
    })
}

/// `sigma_1^2 = 2 / (rho (1-rho)^2)` for h1 under standard-normal entries.
pub fn sigma1_squared(rho: f64) -> f64 {
    2.0 / (rho * (1.0 - rho) * (1.0 - rho))
}

/// `sigma_3^2 = 2 lambda^2 / (rho (1-rho)^2)` for h3 under the
/// homogeneous-row Poisson-BEDD null.
pub fn sigma3_squared(lambda: f64, rho: f64) -> f64 {
    2.0 * lambda * lambda / (rho * (1.0 - rho) * (1.0 - rho))
}

/// `sigma_6^2 = lambda^4 [lambda (F3 - F2^2)(G3 - G2^2) + 2 F2 G2]
///  / (rho (1-rho))` for h6 under the Poisson-BEDD null.
pub fn sigma6_squared(lambda: f64, f: DegreeFunction, g: DegreeFunction, rho: f64) -> f64 {
    let (f2, f3) = (f.moment(2), f.moment(3));
    let (g2, g3) = (g.moment(2), g.moment(3));
    lambda.powi(4) * (lambda * (f3 - f2 * f2) * (g3 - g2 * g2) + 2.0 * f2 * g2)
        / (rho * (1.0 - rho))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StatName {
    ZA,
    ZB,
    ZBprime,
    ZC,
}

impl FromStr for StatName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ZA" | "za" => Ok(StatName::ZA),
            "ZB" | "zb" => Ok(StatName::ZB),
            "ZBprime" | "ZB'" | "zbprime" => Ok(StatName::ZBprime),
            "ZC" | "zc" => Ok(StatName::ZC),
            other => Err(Error::InvalidParameter {
                name: "stat",
                reason: format!("unknown statistic `{other}`"),
            }),
        }
    }
}

impl StatName {
    pub fn as_str(&self) -> &'static str {
        match self {
            StatName::ZA => "ZA",
            StatName::ZB => "ZB",
            StatName::ZBprime => "ZBprime",
            StatName::ZC => "ZC",
        }
    }
}

/// Model parameters a statistic may need (`rho` is always taken as `m/N`
/// from the observed matrix).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TestParams {
    pub lambda: Option<f64>,
    pub f: Option<DegreeFunction>,
    pub g: Option<DegreeFunction>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TestStatistic {
    pub name: StatName,
    pub value: f64,
    pub variance_used: f64,
    pub two_sided_p: f64,
}

fn require(v: Option<f64>, name: &'static str) -> Result<f64> {
    v.ok_or(Error::InvalidParameter {
        name,
        reason: "required by this statistic".into(),
    })
}

/// Computes one scaled test statistic on an observed matrix.
pub fn test_statistic(name: StatName, y: &Mat, params: &TestParams) -> Result<TestStatistic> {
    let (m, n) = (y.rows(), y.cols());
    let nn = (m + n) as f64;
    let rho = m as f64 / nn;
    let (value, variance) = match name {
        StatName::ZA => {
            let u = ustat::u_fast("h1", y)?.value;
            let s2 = sigma1_squared(rho);
            (nn.powf(1.5) * u / s2.sqrt(), s2)
        }
        StatName::ZB => {
            let lambda = require(params.lambda, "lambda")?;
            let u = ustat::u_fast("h3", y)?.value;
            let s2 = sigma3_squared(lambda, rho);
            (nn.powf(1.5) * u / s2.sqrt(), s2)
        }
        StatName::ZBprime => {
            // Plug-in of lambda^2 by U^h2 inside the sigma_3 formula.
            let u2 = ustat::u_fast("h2", y)?.value;
            if u2 <= 0.0 {
                return Err(Error::DegeneratePlugin(u2));
            }
            let u3 = ustat::u_fast("h3", y)?.value;
            let s2 = 2.0 * u2 / (rho * (1.0 - rho) * (1.0 - rho));
            (nn.powf(1.5) * u3 / s2.sqrt(), s2)
        }
        StatName::ZC => {
            let lambda = require(params.lambda, "lambda")?;
            let f = params.f.ok_or(Error::InvalidParameter {
                name: "f",
                reason: "required by ZC".into(),
            })?;
            let g = params.g.ok_or(Error::InvalidParameter {
                name: "g",
                reason: "required by ZC".into(),
            })?;
            let u = ustat::u_fast("h6", y)?.value;
            let s2 = sigma6_squared(lambda, f, g, rho);
            (nn * u / s2.sqrt(), s2)
        }
    };
    Ok(TestStatistic {
        name,
        value,
        variance_used: variance,
        two_sided_p: stats::two_sided_p(value),
    })
}
