use clap::{Args, Parser, Subcommand};
use rce_ustat::asymptotics::{test_statistic, StatName, TestParams};
use rce_ustat::decomp::{detect_principal_support, DetectPolicy};
use rce_ustat::error::{Error, Result};
use rce_ustat::experiments::{
    run_power, run_qq, run_rate, run_verify, ExperimentConfig, ExperimentKind, CONFIG_SCHEMA,
};
use rce_ustat::graph::Catalog;
use rce_ustat::kernels::builtin;
use rce_ustat::mat::Mat;
use rce_ustat::models::{sample, DegreeFunction, ModelSpec};
use rce_ustat::ustat::{u_exact, u_fast, u_ordered};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "rce-ustat",
    version,
    about = "U-statistics on row-column exchangeable matrices: catalogs, simulation, decomposition diagnostics, tests and experiment harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// gaussian_iid | poisson_bedd | overdispersed_poisson_bedd
    #[arg(long, default_value = "gaussian_iid")]
    model: String,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Row degree function: `const` or `power:<a>`
    #[arg(long, default_value = "const")]
    f: String,
    /// Column degree function: `const` or `power:<a>`
    #[arg(long, default_value = "const")]
    g: String,
    /// Dispersion of the overdispersed variant
    #[arg(long, default_value_t = 0.0)]
    dispersion: f64,
}

impl ModelArgs {
    fn build(&self) -> Result<ModelSpec> {
        let f: DegreeFunction = self.f.parse()?;
        let g: DegreeFunction = self.g.parse()?;
        match self.model.as_str() {
            "gaussian_iid" => Ok(ModelSpec::GaussianIid),
            "poisson_bedd" => ModelSpec::poisson_bedd(self.lambda, f, g),
            "overdispersed_poisson_bedd" => {
                ModelSpec::overdispersed(self.lambda, f, g, self.dispersion)
            }
            other => Err(Error::InvalidParameter {
                name: "model",
                reason: format!("unknown model `{other}`"),
            }),
        }
    }
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// JSON config file (overrides all other flags)
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    /// Statistic for qq/power: ZA | ZB | ZBprime | ZC
    #[arg(long)]
    stat: Option<String>,
    /// Kernel for rate: h1..h6
    #[arg(long)]
    kernel: Option<String>,
    /// Total sizes N (comma separated)
    #[arg(long, value_delimiter = ',', default_values_t = vec![8usize, 16, 32, 64, 128, 256])]
    sizes: Vec<usize>,
    /// Explicit shapes `MxN` (comma separated), overriding --sizes
    #[arg(long, value_delimiter = ',')]
    pairs: Vec<String>,
    #[arg(long, default_value_t = 500)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "runs")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, default_value_t = 0.05)]
    nominal_level: f64,
    #[arg(long, default_value_t = 0.99)]
    envelope_level: f64,
    /// Power deviations: F2 values (ZB) or dispersion values (ZC)
    #[arg(long, value_delimiter = ',')]
    deviations: Vec<f64>,
}

impl ExperimentArgs {
    fn build(&self, kind: ExperimentKind) -> Result<ExperimentConfig> {
        if let Some(path) = &self.config {
            let cfg = ExperimentConfig::from_json_file(path)?;
            if cfg.experiment != kind {
                return Err(Error::Config(format!(
                    "config is for `{}`, invoked as `{}`",
                    cfg.experiment.tag(),
                    kind.tag()
                )));
            }
            return Ok(cfg);
        }
        let statistic = match &self.stat {
            Some(s) => Some(s.parse::<StatName>()?),
            None => None,
        };
        let cfg = ExperimentConfig {
            schema: CONFIG_SCHEMA,
            experiment: kind,
            model: self.model.build()?,
            statistic,
            kernel: self.kernel.clone(),
            sizes: self.sizes.clone(),
            replicates: self.replicates,
            seed: self.seed,
            out_dir: self.out_dir.clone(),
            rho: self.rho,
            nominal_level: self.nominal_level,
            envelope_level: self.envelope_level,
            deviations: self.deviations.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Dump the bipartite graph class catalogs
    Catalog {
        #[arg(long, default_value_t = 2)]
        max_rows: usize,
        #[arg(long, default_value_t = 2)]
        max_cols: usize,
        /// json | csv
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// Sample a matrix from an RCE model and write it as CSV
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path; a JSON sidecar `<out>.meta.json` records the model
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a U-statistic on a CSV matrix
    Ustat {
        #[arg(long)]
        kernel: String,
        #[arg(long = "in")]
        input: PathBuf,
        /// fast | exact | ordered
        #[arg(long, default_value = "fast")]
        path: String,
    },
    /// Detect the principal support graphs of a kernel under a model
    Support {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        kernel: String,
        /// Familywise significance per level
        #[arg(long, default_value_t = 0.01)]
        alpha: f64,
        #[arg(long, default_value_t = 20_000)]
        pilot: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute a scaled test statistic on a CSV matrix
    Test {
        #[arg(long)]
        stat: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        g: Option<String>,
    },
    /// Q-Q table of a statistic against the standard normal
    Qq(ExperimentArgs),
    /// Rejection-rate curves over a deviation grid
    Power(ExperimentArgs),
    /// Convergence-rate regression of SD(U_N) on N
    Rate(ExperimentArgs),
    /// Run the cross-module identity suite
    Verify(ExperimentArgs),
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

#[derive(Serialize)]
struct SimulateMeta<'a> {
    model: &'a ModelSpec,
    m: usize,
    n: usize,
    seed: u64,
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Catalog {
            max_rows,
            max_cols,
            format,
        } => {
            let catalog = Catalog::build(max_rows, max_cols)?;
            match format.as_str() {
                "json" => {
                    let mut out = Vec::new();
                    for r in 0..=max_rows {
                        for c in 0..=max_cols {
                            out.extend(catalog.gamma(r, c).iter().cloned());
                        }
                    }
                    print_json(&out)?;
                }
                "csv" => {
                    println!("r,c,edges_hex,aut,connected,class_id");
                    for r in 0..=max_rows {
                        for c in 0..=max_cols {
                            for cls in catalog.gamma(r, c) {
                                println!(
                                    "{},{},{:x},{},{},{}",
                                    r,
                                    c,
                                    cls.representative.edges(),
                                    cls.aut_count,
                                    cls.connected,
                                    cls.class_id
                                );
                            }
                        }
                    }
                }
                other => {
                    return Err(Error::Config(format!("unknown format `{other}`")));
                }
            }
        }
        Command::Simulate {
            model,
            m,
            n,
            seed,
            out,
        } => {
            let spec = model.build()?;
            let s = sample(&spec, m, n, seed)?;
            s.y.write_csv_path(&out)?;
            let meta_path = out.with_extension("meta.json");
            let meta = SimulateMeta {
                model: &spec,
                m,
                n,
                seed,
            };
            std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)?;
            eprintln!("wrote {} and {}", out.display(), meta_path.display());
        }
        Command::Ustat {
            kernel,
            input,
            path,
        } => {
            let y = Mat::read_csv_path(&input)?;
            let result = match path.as_str() {
                "fast" => u_fast(&kernel, &y)?,
                "exact" => u_exact(&builtin(&kernel)?, &y)?,
                "ordered" => u_ordered(&builtin(&kernel)?, &y)?,
                other => {
                    return Err(Error::Config(format!("unknown path `{other}`")));
                }
            };
            print_json(&result)?;
        }
        Command::Support {
            model,
            kernel,
            alpha,
            pilot,
            seed,
            out,
        } => {
            let spec = model.build()?;
            let k = builtin(&kernel)?;
            let policy = DetectPolicy {
                pilot,
                significance: alpha,
                seed,
                ..Default::default()
            };
            let report = detect_principal_support(&spec, &k, &policy)?;
            match out {
                Some(path) => {
                    std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
                    eprintln!("wrote {}", path.display());
                }
                None => print_json(&report)?,
            }
        }
        Command::Test {
            stat,
            input,
            lambda,
            f,
            g,
        } => {
            let y = Mat::read_csv_path(&input)?;
            let name: StatName = stat.parse()?;
            let params = TestParams {
                lambda,
                f: f.as_deref().map(str::parse).transpose()?,
                g: g.as_deref().map(str::parse).transpose()?,
            };
            let t = test_statistic(name, &y, &params)?;
            print_json(&t)?;
        }
        Command::Qq(args) => {
            let cfg = args.build(ExperimentKind::Qq)?;
            let summary = run_qq(&cfg)?;
            print_json(&summary)?;
        }
        Command::Power(args) => {
            let cfg = args.build(ExperimentKind::Power)?;
            let summary = run_power(&cfg)?;
            print_json(&summary)?;
        }
        Command::Rate(args) => {
            let cfg = args.build(ExperimentKind::Rate)?;
            let report = run_rate(&cfg)?;
            print_json(&report)?;
        }
        Command::Verify(args) => {
            let cfg = args.build(ExperimentKind::Verify)?;
            let report = run_verify(&cfg)?;
            for c in &report.checks {
                println!(
                    "{} {} measured={} expected={} tolerance={}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.measured,
                    c.expected,
                    c.tolerance
                );
            }
            if !report.all_pass {
                std::process::exit(1);
            }
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(2);
    }
}
