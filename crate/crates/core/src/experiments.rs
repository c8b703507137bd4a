//! Batch experiment harness: Q-Q tables with confidence envelopes, power
//! curves, rate regressions and the self-verification suite. Every run
//! writes its data files plus a manifest that pins the config, seed and
//! per-replicate seed derivation; reruns reproduce the data byte for byte
//! regardless of worker count.

use crate::asymptotics::{self, StatName, TestParams};
use crate::decomp;
use crate::error::{Error, Result};
use crate::graph;
use crate::kernels::{builtin, KernelSpec};
use crate::mat::Mat;
use crate::models::{self, DegreeFunction, ModelSpec};
use crate::rng;
use crate::stats;
use crate::ustat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const CONFIG_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Qq,
    Power,
    Rate,
    Verify,
}

impl ExperimentKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ExperimentKind::Qq => "qq",
            ExperimentKind::Power => "power",
            ExperimentKind::Rate => "rate",
            ExperimentKind::Verify => "verify",
        }
    }
}

fn default_rho() -> f64 {
    0.5
}

fn default_nominal() -> f64 {
    0.05
}

fn default_envelope() -> f64 {
    0.99
}

/// One experiment's full configuration; the `schema` field versions the
/// on-disk format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub experiment: ExperimentKind,
    pub model: ModelSpec,
    #[serde(default)]
    pub statistic: Option<StatName>,
    #[serde(default)]
    pub kernel: Option<String>,
    pub sizes: Vec<usize>,
    /// Explicit `(m, n)` shapes; when nonempty, used instead of `sizes`.
    #[serde(default)]
    pub pairs: Vec<[usize; 2]>,
    pub replicates: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_nominal")]
    pub nominal_level: f64,
    #[serde(default = "default_envelope")]
    pub envelope_level: f64,
    /// Power experiments: F2 values (ZB) or dispersion values (ZC).
    #[serde(default)]
    pub deviations: Vec<f64>,
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != CONFIG_SCHEMA {
            return Err(Error::Config(format!(
                "unsupported schema {} (expected {CONFIG_SCHEMA})",
                self.schema
            )));
        }
        if self.replicates < 2 && self.experiment != ExperimentKind::Verify {
            return Err(Error::Config("replicates must be >= 2".into()));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::Config(format!("rho must lie in (0,1), got {}", self.rho)));
        }
        let shapes = self.shapes();
        match self.experiment {
            ExperimentKind::Qq | ExperimentKind::Power => {
                if self.statistic.is_none() {
                    return Err(Error::Config("statistic is required".into()));
                }
                if shapes.is_empty() {
                    return Err(Error::Config("at least one size is required".into()));
                }
            }
            ExperimentKind::Rate => {
                if self.kernel.is_none() {
                    return Err(Error::Config("kernel is required".into()));
                }
                if shapes.len() < 3 {
                    return Err(Error::Config("rate needs at least 3 sizes".into()));
                }
            }
            ExperimentKind::Verify => {}
        }
        if self.experiment == ExperimentKind::Power && self.deviations.is_empty() {
            return Err(Error::Config("power needs a deviation grid".into()));
        }
        for shape in shapes {
            if shape.m < 2 || shape.n < 2 {
                return Err(Error::Config(format!(
                    "size N={} leaves a {}x{} matrix, too small for 2x2 kernels",
                    shape.total, shape.m, shape.n
                )));
            }
        }
        Ok(())
    }

    /// The matrix shapes this run simulates: explicit pairs when given,
    /// otherwise each total split by `rho`.
    pub fn shapes(&self) -> Vec<Shape> {
        if self.pairs.is_empty() {
            self.sizes
                .iter()
                .map(|&total| {
                    let (m, n) = split_size(total, self.rho);
                    Shape { total, m, n }
                })
                .collect()
        } else {
            self.pairs
                .iter()
                .map(|&[m, n]| Shape { total: m + n, m, n })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub total: usize,
    pub m: usize,
    pub n: usize,
}

/// Splits a total size `N` into `(m, n)` with `m ~ rho N`.
pub fn split_size(total: usize, rho: f64) -> (usize, usize) {
    let m = ((total as f64 * rho).round() as usize).clamp(1, total - 1);
    (m, total - m)
}

/// Per-replicate seed: a splitmix64 fold of (seed, experiment tag, N,
/// replicate index). The rule is echoed in every manifest.
pub fn replicate_seed(base: u64, tag: &str, total_size: usize, replicate: usize) -> u64 {
    let k = rng::mix_str(rng::key(base, &[]), tag);
    rng::key(k, &[total_size as u64, replicate as u64])
}

const SEED_RULE: &str =
    "replicate_seed = splitmix64_fold(seed, experiment_tag, N, replicate_index)";

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema: u32,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub seed_rule: String,
    pub version: String,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<String>,
}

fn write_manifest(
    cfg: &ExperimentConfig,
    outputs: &[String],
    started: Instant,
) -> Result<PathBuf> {
    let manifest = RunManifest {
        schema: CONFIG_SCHEMA,
        config: cfg.clone(),
        seed: cfg.seed,
        seed_rule: SEED_RULE.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        outputs: outputs.to_vec(),
    };
    let path = cfg
        .out_dir
        .join(format!("{}.manifest.json", cfg.experiment.tag()));
    let mut f = std::fs::File::create(&path)?;
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    writeln!(f)?;
    Ok(path)
}

/// Statistic parameters implied by the model (lambda and degree functions
/// are read off the null model; rho always comes from the matrix shape).
pub fn params_for(model: &ModelSpec) -> TestParams {
    match model {
        ModelSpec::GaussianIid => TestParams::default(),
        ModelSpec::PoissonBedd { lambda, f, g } => TestParams {
            lambda: Some(*lambda),
            f: Some(*f),
            g: Some(*g),
        },
        ModelSpec::OverdispersedPoissonBedd { lambda, f, g, .. } => TestParams {
            lambda: Some(*lambda),
            f: Some(*f),
            g: Some(*g),
        },
    }
}

fn simulate_statistic(
    model: &ModelSpec,
    stat: StatName,
    params: &TestParams,
    m: usize,
    n: usize,
    seed: u64,
) -> Result<f64> {
    let s = models::sample(model, m, n, seed)?;
    Ok(asymptotics::test_statistic(stat, &s.y, params)?.value)
}

fn statistic_values(
    cfg: &ExperimentConfig,
    model: &ModelSpec,
    stat: StatName,
    params: &TestParams,
    shape: Shape,
) -> Result<Vec<f64>> {
    (0..cfg.replicates)
        .into_par_iter()
        .map(|rep| {
            let seed = replicate_seed(cfg.seed, cfg.experiment.tag(), shape.total, rep);
            simulate_statistic(model, stat, params, shape.m, shape.n, seed)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Q-Q experiment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct QqSummary {
    pub per_size: Vec<QqSizeSummary>,
    pub csv_path: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct QqSizeSummary {
    pub n: usize,
    pub points: usize,
    pub outside_envelope: usize,
}

/// Sorted sample quantiles against standard-normal quantiles at Blom
/// positions, with a pointwise order-statistic envelope: the Beta(k, K+1-k)
/// quantiles at the envelope tail levels mapped through the normal inverse
/// CDF.
pub fn run_qq(cfg: &ExperimentConfig) -> Result<QqSummary> {
    cfg.validate()?;
    let started = Instant::now();
    std::fs::create_dir_all(&cfg.out_dir)?;
    let stat = cfg.statistic.ok_or_else(|| Error::Config("statistic required".into()))?;
    let params = params_for(&cfg.model);
    let k_total = cfg.replicates;
    let tail = (1.0 - cfg.envelope_level) / 2.0;

    let csv_path = cfg.out_dir.join("qq.csv");
    let mut out = String::from("N,k,theoretical_q,sample_q,env_lo,env_hi\n");
    let mut per_size = Vec::new();
    for shape in cfg.shapes() {
        let mut values = statistic_values(cfg, &cfg.model, stat, &params, shape)?;
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut outside = 0;
        for (idx, &v) in values.iter().enumerate() {
            let k = idx + 1;
            let theo = stats::normal_quantile(stats::blom_position(k, k_total));
            let lo = stats::normal_quantile(stats::beta_quantile(
                k as f64,
                (k_total + 1 - k) as f64,
                tail,
            ));
            let hi = stats::normal_quantile(stats::beta_quantile(
                k as f64,
                (k_total + 1 - k) as f64,
                1.0 - tail,
            ));
            if v < lo || v > hi {
                outside += 1;
            }
            out.push_str(&format!("{},{k},{theo},{v},{lo},{hi}\n", shape.total));
        }
        per_size.push(QqSizeSummary {
            n: shape.total,
            points: k_total,
            outside_envelope: outside,
        });
    }
    std::fs::write(&csv_path, out)?;
    write_manifest(cfg, &["qq.csv".into()], started)?;
    Ok(QqSummary { per_size, csv_path })
}

// ---------------------------------------------------------------------------
// Power experiment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct PowerCell {
    pub n: usize,
    pub deviation: f64,
    pub reject_rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerSummary {
    pub cells: Vec<PowerCell>,
    pub csv_path: PathBuf,
}

/// Power-family exponent reproducing a target second moment
/// `F2 = (a+1)^2 / (2a+1)`.
pub fn exponent_for_f2(f2: f64) -> Result<f64> {
    if f2 < 1.0 {
        return Err(Error::InvalidParameter {
            name: "F2",
            reason: format!("power family needs F2 >= 1, got {f2}"),
        });
    }
    Ok((f2 - 1.0) + (f2 * (f2 - 1.0)).sqrt())
}

/// The simulation model at one deviation point: ZB bends the row-degree
/// function away from constant, ZC adds dispersion.
fn deviated_model(base: &ModelSpec, stat: StatName, deviation: f64) -> Result<ModelSpec> {
    match stat {
        StatName::ZB | StatName::ZBprime | StatName::ZA => match base {
            ModelSpec::PoissonBedd { lambda, g, .. } => ModelSpec::poisson_bedd(
                *lambda,
                if deviation == 1.0 {
                    DegreeFunction::Constant
                } else {
                    DegreeFunction::power(exponent_for_f2(deviation)?)?
                },
                *g,
            ),
            other => Err(Error::Config(format!(
                "F2 deviations need a poisson_bedd base model, got {other:?}"
            ))),
        },
        StatName::ZC => match base {
            ModelSpec::PoissonBedd { lambda, f, g }
            | ModelSpec::OverdispersedPoissonBedd { lambda, f, g, .. } => {
                if deviation == 0.0 {
                    ModelSpec::poisson_bedd(*lambda, *f, *g)
                } else {
                    ModelSpec::overdispersed(*lambda, *f, *g, deviation)
                }
            }
            other => Err(Error::Config(format!(
                "dispersion deviations need a Poisson base model, got {other:?}"
            ))),
        },
    }
}

/// Rejection rate of the two-sided nominal-level test per (size, deviation),
/// with a Wald 95% confidence interval.
pub fn run_power(cfg: &ExperimentConfig) -> Result<PowerSummary> {
    cfg.validate()?;
    let started = Instant::now();
    std::fs::create_dir_all(&cfg.out_dir)?;
    let stat = cfg.statistic.ok_or_else(|| Error::Config("statistic required".into()))?;
    let params = params_for(&cfg.model);
    let z_crit = stats::normal_quantile(1.0 - cfg.nominal_level / 2.0);

    let csv_path = cfg.out_dir.join("power.csv");
    let mut out = String::from("N,deviation,reject_rate,ci_lo,ci_hi\n");
    let mut cells = Vec::new();
    for shape in cfg.shapes() {
        for &dev in &cfg.deviations {
            let model = deviated_model(&cfg.model, stat, dev)?;
            let values = statistic_values(cfg, &model, stat, &params, shape)?;
            let rejections = values.iter().filter(|z| z.abs() > z_crit).count();
            let rate = rejections as f64 / values.len() as f64;
            let (lo, hi) = stats::wald_ci(rejections, values.len(), 0.95);
            out.push_str(&format!("{},{dev},{rate},{lo},{hi}\n", shape.total));
            cells.push(PowerCell {
                n: shape.total,
                deviation: dev,
                reject_rate: rate,
                ci_lo: lo,
                ci_hi: hi,
            });
        }
    }
    std::fs::write(&csv_path, out)?;
    write_manifest(cfg, &["power.csv".into()], started)?;
    Ok(PowerSummary { cells, csv_path })
}

// ---------------------------------------------------------------------------
// Rate experiment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub kernel: String,
    pub slope: f64,
    pub std_error: f64,
    pub per_size: Vec<RatePoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatePoint {
    pub n: usize,
    pub sd: f64,
}

/// Standard deviation of the raw U-statistic per size, and the OLS slope of
/// `log SD` on `log N`.
pub fn run_rate(cfg: &ExperimentConfig) -> Result<RateReport> {
    cfg.validate()?;
    let started = Instant::now();
    std::fs::create_dir_all(&cfg.out_dir)?;
    let kernel = cfg.kernel.clone().ok_or_else(|| Error::Config("kernel required".into()))?;
    builtin(&kernel)?;

    let mut per_size = Vec::new();
    for shape in cfg.shapes() {
        let values: Vec<f64> = (0..cfg.replicates)
            .into_par_iter()
            .map(|rep| {
                let seed = replicate_seed(cfg.seed, cfg.experiment.tag(), shape.total, rep);
                let s = models::sample(&cfg.model, shape.m, shape.n, seed)?;
                Ok(ustat::u_fast(&kernel, &s.y)?.value)
            })
            .collect::<Result<Vec<f64>>>()?;
        let (_, var) = stats::mean_var(&values);
        per_size.push(RatePoint {
            n: shape.total,
            sd: var.sqrt(),
        });
    }
    let logs_n: Vec<f64> = per_size.iter().map(|p| (p.n as f64).ln()).collect();
    let logs_sd: Vec<f64> = per_size.iter().map(|p| p.sd.ln()).collect();
    let (slope, std_error) = stats::ols_slope(&logs_n, &logs_sd);
    let report = RateReport {
        kernel,
        slope,
        std_error,
        per_size,
    };
    let json_path = cfg.out_dir.join("rate.json");
    let mut f = std::fs::File::create(&json_path)?;
    serde_json::to_writer_pretty(&mut f, &report)?;
    writeln!(f)?;
    write_manifest(cfg, &["rate.json".into()], started)?;
    Ok(report)
}

// ---------------------------------------------------------------------------
// Verification suite
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct VerifyCheck {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub all_pass: bool,
    pub checks: Vec<VerifyCheck>,
}

/// Test-harness injection points for negative controls.
#[doc(hidden)]
#[derive(Debug, Clone, Default)]
pub struct VerifyOverrides {
    /// Pretend `|Aut(K_{1,2})|` has this value inside the pair-coincidence
    /// closed form.
    pub tamper_aut_k12: Option<u64>,
}

fn check(name: &str, measured: f64, expected: f64, tolerance: f64) -> VerifyCheck {
    VerifyCheck {
        name: name.into(),
        pass: (measured - expected).abs() <= tolerance,
        measured,
        expected,
        tolerance,
    }
}

/// Runs the cross-module identity suite and reports one pass/fail line per
/// invariant. Failures are entries, not errors.
pub fn run_verify_with(cfg: &ExperimentConfig, overrides: &VerifyOverrides) -> Result<VerifyReport> {
    cfg.validate()?;
    let started = Instant::now();
    std::fs::create_dir_all(&cfg.out_dir)?;
    let seed = cfg.seed;
    let mut checks = Vec::new();

    // Catalog identities.
    let level2 = graph::enumerate_gamma(2, 0)?.len()
        + graph::enumerate_gamma(0, 2)?.len()
        + graph::enumerate_gamma(1, 1)?.len();
    checks.push(check("catalog_classes_level2", level2 as f64, 4.0, 0.0));
    let level3 = graph::enumerate_gamma(2, 1)?.len() + graph::enumerate_gamma(1, 2)?.len();
    checks.push(check("catalog_classes_level3", level3 as f64, 6.0, 0.0));
    checks.push(check(
        "aut_k12",
        graph::BipartiteGraph::complete(1, 2)?.automorphism_count() as f64,
        2.0,
        0.0,
    ));
    checks.push(check(
        "aut_k11",
        graph::BipartiteGraph::complete(1, 1)?.automorphism_count() as f64,
        1.0,
        0.0,
    ));
    let mut orbit_dev: f64 = 0.0;
    for r in 0..=3usize {
        for c in 0..=3usize {
            let total: f64 = graph::enumerate_gamma(r, c)?
                .iter()
                .map(|cls| {
                    (graph::factorial(r) * graph::factorial(c)) as f64 / cls.aut_count as f64
                })
                .sum();
            orbit_dev = orbit_dev.max((total - (1u64 << (r * c)) as f64).abs());
        }
    }
    checks.push(check("orbit_identity_max_deviation", orbit_dev, 0.0, 0.0));

    // Pair-coincidence identity (with the optional tamper hook).
    let mut max_rel: f64 = 0.0;
    for m in 2..=4usize {
        for n in 2..=4usize {
            for p in 1..=2usize {
                for q in 1..=2usize {
                    for r in 0..=p {
                        for c in 0..=q {
                            for class in graph::enumerate_gamma(r, c)? {
                                let (lhs, rhs) =
                                    graph::pair_coincidence_count(m, n, p, q, &class)?;
                                let mut rhs = rhs;
                                if let Some(fake) = overrides.tamper_aut_k12 {
                                    if r == 1
                                        && c == 2
                                        && class.representative.edge_count() == 2
                                    {
                                        rhs = rhs / class.aut_count * fake;
                                    }
                                }
                                let rel = (lhs as f64 - rhs as f64).abs() / rhs as f64;
                                max_rel = max_rel.max(rel);
                            }
                        }
                    }
                }
            }
        }
    }
    checks.push(check("pair_coincidence_max_rel_error", max_rel, 0.0, 0.0));

    // Telescoping.
    let gaussian = ModelSpec::GaussianIid;
    let poisson = ModelSpec::poisson_bedd(
        1.0,
        DegreeFunction::power(1.0)?,
        DegreeFunction::power(1.0)?,
    )?;
    checks.push(check(
        "telescoping_h2_gaussian",
        decomp::telescoping_check(&builtin("h2")?, &gaussian, seed)?,
        0.0,
        1e-10,
    ));
    checks.push(check(
        "telescoping_h6_poisson",
        decomp::telescoping_check(&builtin("h6")?, &poisson, seed)?,
        0.0,
        1e-10,
    ));

    // Fast vs exact U-statistics.
    let mut max_fast_rel: f64 = 0.0;
    for (t, name) in crate::kernels::BUILTIN_NAMES.iter().enumerate() {
        let s = models::sample(&poisson, 12, 11, rng::key(seed, &[t as u64]))?;
        let k = builtin(name)?;
        let exact = ustat::u_exact(&k, &s.y)?.value;
        let fast = ustat::u_fast(name, &s.y)?.value;
        let denom = exact.abs().max(1e-12);
        max_fast_rel = max_fast_rel.max((fast - exact).abs() / denom);
    }
    checks.push(check("ufast_vs_uexact_max_rel", max_fast_rel, 0.0, 1e-10));

    // Ordered/unordered identity for an asymmetric kernel.
    let corner = KernelSpec::new("corner", 2, 2, false, |y: &Mat| {
        y.get(0, 0) * y.get(0, 0) + 0.25 * y.get(1, 1)
    });
    let s = models::sample(&gaussian, 6, 6, rng::key(seed, &[0xabc]))?;
    let ordered = ustat::u_ordered(&corner, &s.y)?.value;
    let sym = ustat::u_exact(&corner.symmetrize(), &s.y)?.value;
    checks.push(check(
        "ordered_unordered_residual",
        (ordered - sym).abs(),
        0.0,
        1e-12,
    ));

    // Moment formulas.
    checks.push(check(
        "moment_power_sqrt2_f2",
        DegreeFunction::power(1.0 + 2f64.sqrt())?.moment(2),
        2.0,
        1e-12,
    ));
    checks.push(check(
        "moment_power1_f2",
        DegreeFunction::power(1.0)?.moment(2),
        4.0 / 3.0,
        1e-12,
    ));
    checks.push(check(
        "moment_power1_f3",
        DegreeFunction::power(1.0)?.moment(3),
        2.0,
        1e-12,
    ));

    // Closed-form variances.
    checks.push(check(
        "sigma1_sq_at_half",
        asymptotics::sigma1_squared(0.5),
        16.0,
        1e-12,
    ));
    checks.push(check(
        "sigma3_sq_at_half",
        asymptotics::sigma3_squared(1.0, 0.5),
        16.0,
        1e-12,
    ));
    checks.push(check(
        "sigma6_sq_at_half",
        asymptotics::sigma6_squared(
            1.0,
            DegreeFunction::power(1.0)?,
            DegreeFunction::power(1.0)?,
            0.5,
        ),
        1168.0 / 81.0,
        1e-12,
    ));

    // Monte Carlo orthogonality and projection oracles (z-scores).
    let h6 = builtin("h6")?;
    let u22 = decomp::Universe::new(2, 2)?;
    let block = decomp::Block::leading(2, 2);
    let g1 = graph::BipartiteGraph::new(1, 1, 0b1)?.with_labels(vec![0], vec![0])?;
    let g2 = graph::BipartiteGraph::new(1, 1, 0b1)?.with_labels(vec![1], vec![1])?;
    let ortho = decomp::projection_cross_moment(
        &poisson,
        &h6,
        u22,
        &g1,
        &block,
        &g2,
        &block,
        20_000,
        rng::key(seed, &[0xdef]),
    )?;
    checks.push(check("orthogonality_zscore", ortho.z_score().abs(), 0.0, 4.0));

    let h1 = builtin("h1")?;
    let k12 = graph::enumerate_gamma(1, 2)?
        .into_iter()
        .find(|c| c.representative.edge_count() == 2)
        .unwrap();
    let proj =
        decomp::projection_second_moment(&gaussian, &h1, &k12, 20_000, rng::key(seed, &[0xfed]))?;
    let zdev = (proj.value - 1.0).abs() / proj.std_error.max(1e-12);
    checks.push(check("projection_k12_h1_zdev", zdev, 0.0, 4.0));

    let all_pass = checks.iter().all(|c| c.pass);
    let report = VerifyReport { all_pass, checks };
    let json_path = cfg.out_dir.join("verify.json");
    let mut f = std::fs::File::create(&json_path)?;
    serde_json::to_writer_pretty(&mut f, &report)?;
    writeln!(f)?;
    write_manifest(cfg, &["verify.json".into()], started)?;
    Ok(report)
}

pub fn run_verify(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    run_verify_with(cfg, &VerifyOverrides::default())
}
