//! Command-line front end: tree and urn experiments, regime constants,
//! continuum Monte Carlo estimators, scaling fits, and the selftest.
//!
//! Settings come from an optional flat key=value config file overlaid
//! by command-line flags (flags win). Data goes to stdout or `--out`
//! as CSV with fixed headers; diagnostics go to stderr. Exit codes:
//! 0 success, 1 usage/configuration error, 2 numeric or simulation
//! failure, 3 selftest failure.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use fragtree::harness::{self, ExperimentConfig, TreeModel, UrnExperimentConfig};
use fragtree::subordinator::{self, MonteCarloEstimate};
use fragtree::theory::{self, Regime};
use fragtree::{DislocationModel, Error};

#[derive(Parser)]
#[command(
    name = "fragtree",
    version,
    about = "Ancestor-counting statistics in random fragmentation trees",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate ancestor counts of k-groups over an n-grid (CSV)
    GenStats(RunArgs),
    /// Simulate urn occupancy counts over an n-grid (CSV)
    Urn(UrnArgs),
    /// Regime classification and limit constants (CSV)
    Constants(ConstantsArgs),
    /// Monte Carlo estimate of the expected area E[A_k] vs theory (CSV)
    Area(EstimateArgs),
    /// Monte Carlo estimate of g_k(x) vs its small-x law (CSV)
    Gk(GkArgs),
    /// Fit the scaling law of a gen-stats/urn CSV against theory
    Fit(FitArgs),
    /// Run the built-in invariant suite
    Selftest,
}

#[derive(Args)]
struct RunArgs {
    /// Key=value config file; flags below override its entries
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Tree model: remy, ford, beta-split, gw-stable, dirichlet, beta-type
    #[arg(long)]
    model: Option<String>,
    /// Comma-separated model parameters, e.g. a=1,b=1
    #[arg(long, value_name = "LIST")]
    param: Option<String>,
    /// Group size (>= 2)
    #[arg(long)]
    k: Option<usize>,
    /// Geometric grid start:stop:factor, e.g. 1024:1048576:2
    #[arg(long = "n-grid", value_name = "SPEC")]
    n_grid: Option<String>,
    /// Replicas per grid point
    #[arg(long)]
    replicas: Option<usize>,
    /// Base seed of the replica streams
    #[arg(long)]
    seed: Option<u64>,
    /// Leaf grouping policy: consecutive or random-disjoint
    #[arg(long)]
    policy: Option<String>,
    /// Force growth or cascade construction (inferred by default)
    #[arg(long)]
    generator: Option<String>,
    /// Worker threads (0 = one per core)
    #[arg(long)]
    workers: Option<usize>,
    /// Output CSV file (stdout when omitted)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct UrnArgs {
    /// Key=value config file; flags below override its entries
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Urn law: zipf or geometric
    #[arg(long)]
    model: Option<String>,
    /// Law parameters, e.g. s=2 or s=2,j=65536 or q=0.5
    #[arg(long, value_name = "LIST")]
    param: Option<String>,
    /// Geometric grid start:stop:factor
    #[arg(long = "n-grid", value_name = "SPEC")]
    n_grid: Option<String>,
    /// Replicas per grid point
    #[arg(long)]
    replicas: Option<usize>,
    /// Base seed of the replica streams
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core)
    #[arg(long)]
    workers: Option<usize>,
    /// Output CSV file (stdout when omitted)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConstantsArgs {
    /// Measure (dirichlet, beta-type, ford, stable) or chain
    /// (remy, beta-split, gw-stable) classified via its limit measure
    #[arg(long)]
    model: String,
    /// Comma-separated model parameters
    #[arg(long, value_name = "LIST")]
    param: Option<String>,
    /// Group sizes, comma separated (e.g. 2,3,4)
    #[arg(long, value_name = "LIST", default_value = "2")]
    k: String,
    /// Output CSV file (stdout when omitted)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Dislocation measure: dirichlet, beta-type, ford, stable
    #[arg(long)]
    model: String,
    /// Comma-separated measure parameters
    #[arg(long, value_name = "LIST")]
    param: Option<String>,
    /// Group size (>= 2)
    #[arg(long, default_value_t = 2)]
    k: u32,
    /// Monte Carlo replicas
    #[arg(long, default_value_t = 2000)]
    replicas: u64,
    /// Seed of the estimator stream
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV file (stdout when omitted)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GkArgs {
    #[command(flatten)]
    common: EstimateArgs,
    /// Evaluation point x in (0, 1)
    #[arg(long)]
    x: f64,
}

#[derive(Args)]
struct FitArgs {
    /// CSV produced by gen-stats or urn
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Override the model used for the theory targets
    /// (reconstructed from the CSV labels by default)
    #[arg(long)]
    model: Option<String>,
    /// Parameters of the override model
    #[arg(long, value_name = "LIST")]
    param: Option<String>,
    /// Generator of the override model (growth or cascade)
    #[arg(long)]
    generator: Option<String>,
}

/// An error plus the exit code its stage assigns.
struct Failure {
    code: u8,
    err: Error,
}

trait Stage<T> {
    /// Stage-1 failure: bad invocation, flags, or configuration.
    fn usage(self) -> Result<T, Failure>;
    /// Execution failure: numeric/simulation errors exit 2, I/O and
    /// configuration surfacing late still count as usage.
    fn execution(self) -> Result<T, Failure>;
}

impl<T> Stage<T> for fragtree::Result<T> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|err| Failure { code: 1, err })
    }
    fn execution(self) -> Result<T, Failure> {
        self.map_err(|err| {
            let code = match err {
                Error::Config(_) | Error::Io(_) => 1,
                _ => 2,
            };
            Failure { code, err }
        })
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version arrive here too; only real mistakes exit 1.
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::GenStats(args) => cmd_gen_stats(args),
        Command::Urn(args) => cmd_urn(args),
        Command::Constants(args) => cmd_constants(args),
        Command::Area(args) => cmd_area(args),
        Command::Gk(args) => cmd_gk(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Selftest => return cmd_selftest(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, err }) => {
            eprintln!("error: {err}");
            ExitCode::from(code)
        }
    }
}

fn open_sink(path: Option<&Path>) -> fragtree::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::BufWriter::new(std::io::stdout())),
    })
}

fn insert_if(map: &mut BTreeMap<String, String>, key: &str, value: Option<String>) {
    if let Some(v) = value {
        map.insert(key.to_string(), v);
    }
}

fn base_map(config: Option<&Path>) -> fragtree::Result<BTreeMap<String, String>> {
    match config {
        Some(path) => harness::parse_key_value_file(path),
        None => Ok(BTreeMap::new()),
    }
}

fn cmd_gen_stats(args: RunArgs) -> Result<(), Failure> {
    let config = (|| {
        let mut map = base_map(args.config.as_deref())?;
        insert_if(&mut map, "model", args.model);
        insert_if(&mut map, "param", args.param);
        insert_if(&mut map, "k", args.k.map(|v| v.to_string()));
        insert_if(&mut map, "n-grid", args.n_grid);
        insert_if(&mut map, "replicas", args.replicas.map(|v| v.to_string()));
        insert_if(&mut map, "seed", args.seed.map(|v| v.to_string()));
        insert_if(&mut map, "policy", args.policy);
        insert_if(&mut map, "generator", args.generator);
        insert_if(&mut map, "workers", args.workers.map(|v| v.to_string()));
        insert_if(&mut map, "out", args.out.map(|p| p.display().to_string()));
        ExperimentConfig::from_map(&map)
    })()
    .usage()?;

    let mut sink = open_sink(config.out.as_deref()).usage()?;
    (|| {
        writeln!(sink, "{}", harness::csv_header())?;
        let t0 = Instant::now();
        harness::run_experiment_with(&config, |row| {
            writeln!(sink, "{}", row.csv_line())?;
            sink.flush()?;
            eprintln!(
                "n = {}: mean N = {:.4}, CoV = {:.4} ({} replicas, {:.1} s)",
                row.n,
                row.mean_n,
                row.cov(),
                row.replicas,
                t0.elapsed().as_secs_f64()
            );
            Ok(())
        })?;
        Ok(())
    })()
    .execution()
}

fn cmd_urn(args: UrnArgs) -> Result<(), Failure> {
    let config = (|| {
        let mut map = base_map(args.config.as_deref())?;
        insert_if(&mut map, "model", args.model);
        insert_if(&mut map, "param", args.param);
        insert_if(&mut map, "n-grid", args.n_grid);
        insert_if(&mut map, "replicas", args.replicas.map(|v| v.to_string()));
        insert_if(&mut map, "seed", args.seed.map(|v| v.to_string()));
        insert_if(&mut map, "workers", args.workers.map(|v| v.to_string()));
        insert_if(&mut map, "out", args.out.map(|p| p.display().to_string()));
        UrnExperimentConfig::from_map(&map)
    })()
    .usage()?;

    let mut sink = open_sink(config.out.as_deref()).usage()?;
    (|| {
        writeln!(sink, "{}", harness::csv_header())?;
        let t0 = Instant::now();
        harness::run_urn_experiment_with(&config, |row| {
            writeln!(sink, "{}", row.csv_line())?;
            sink.flush()?;
            eprintln!(
                "n = {}: mean N = {:.4} ({} replicas, {:.1} s)",
                row.n,
                row.mean_n,
                row.replicas,
                t0.elapsed().as_secs_f64()
            );
            Ok(())
        })?;
        Ok(())
    })()
    .execution()
}

/// Resolve a `constants` model name: direct measures pass through,
/// chain names classify via their limit measure.
fn resolve_measure(
    name: &str,
    params: &BTreeMap<String, f64>,
) -> fragtree::Result<(DislocationModel, String)> {
    match name {
        "dirichlet" | "beta-type" | "beta_type" | "ford" | "stable" => {
            let m = harness::measure_from_config(name, params)?;
            let label = m.params_label();
            Ok((m, label))
        }
        _ => {
            let chain = TreeModel::from_config(name, params, None)?;
            Ok((chain.limit_model()?, chain.params_label()))
        }
    }
}

fn regime_name(regime: Regime) -> &'static str {
    match regime {
        Regime::Subcritical => "subcritical",
        Regime::Critical => "critical",
        Regime::Supercritical => "supercritical",
    }
}

fn cmd_constants(args: ConstantsArgs) -> Result<(), Failure> {
    let (model, params_label, ks) = (|| {
        let params = harness::parse_param_list(args.param.as_deref().unwrap_or(""))?;
        let (model, label) = resolve_measure(&args.model, &params)?;
        let ks: Vec<u32> = args
            .k
            .split(',')
            .map(|part| {
                part.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad group size '{part}'")))
            })
            .collect::<fragtree::Result<_>>()?;
        if ks.is_empty() {
            return Err(Error::Config("no group sizes given".into()));
        }
        Ok((model, label, ks))
    })()
    .usage()?;

    let mut sink = open_sink(args.out.as_deref()).usage()?;
    (|| {
        let nr: Vec<String> =
            (1..=theory::MULTIPLICITY_R).map(|r| format!("constant_r_{r}")).collect();
        writeln!(
            sink,
            "model,params,k,regime,exponent,log_flag,constant,{}",
            nr.join(",")
        )?;
        for &k in &ks {
            let p = theory::classify(&model, k)?;
            let cr: Vec<String> = p.constant_r.iter().map(|v| format!("{v}")).collect();
            writeln!(
                sink,
                "{},{},{},{},{},{},{},{}",
                args.model,
                params_label,
                k,
                regime_name(p.regime),
                p.exponent,
                p.log_factor,
                p.constant,
                cr.join(",")
            )?;
        }
        sink.flush()?;
        Ok(())
    })()
    .execution()
}

/// Shared tail of `area`/`gk`: write the one-line estimate CSV.
fn write_estimate_row(
    sink: &mut dyn Write,
    model_name: &str,
    k: u32,
    x: Option<f64>,
    est: MonteCarloEstimate,
    theory_value: Option<f64>,
) -> fragtree::Result<()> {
    writeln!(sink, "model,k,x,estimate,stderr,theory_value,z_score")?;
    let x_col = x.map_or("-".to_string(), |v| format!("{v}"));
    let se_col = est.stderr.map_or("-".to_string(), |v| format!("{v}"));
    let (theory_col, z_col) = match theory_value {
        Some(t) => {
            let z = match est.stderr {
                Some(se) if se > 0.0 => format!("{}", (est.mean - t) / se),
                _ => "-".to_string(),
            };
            (format!("{t}"), z)
        }
        None => ("-".to_string(), "-".to_string()),
    };
    writeln!(
        sink,
        "{model_name},{k},{x_col},{},{se_col},{theory_col},{z_col}",
        est.mean
    )?;
    sink.flush()?;
    Ok(())
}

fn cmd_area(args: EstimateArgs) -> Result<(), Failure> {
    let model = (|| {
        let params = harness::parse_param_list(args.param.as_deref().unwrap_or(""))?;
        harness::measure_from_config(&args.model, &params)
    })()
    .usage()?;
    let mut sink = open_sink(args.out.as_deref()).usage()?;
    (|| {
        let theory_value = theory::expected_area(&model, args.k)?;
        let mut rng = harness::replica_rng(args.seed, 0, 0);
        let est = subordinator::area_estimate(&model, args.k, args.replicas, &mut rng)?;
        write_estimate_row(&mut sink, &args.model, args.k, None, est, Some(theory_value))
    })()
    .execution()
}

fn cmd_gk(args: GkArgs) -> Result<(), Failure> {
    let common = args.common;
    let model = (|| {
        let params = harness::parse_param_list(common.param.as_deref().unwrap_or(""))?;
        if !(args.x > 0.0 && args.x < 1.0) {
            return Err(Error::Config(format!("x must lie in (0, 1), got {}", args.x)));
        }
        harness::measure_from_config(&common.model, &params)
    })()
    .usage()?;
    let mut sink = open_sink(common.out.as_deref()).usage()?;
    (|| {
        // Small-x reference: c_sub x^{-1/k} (subcritical) or
        // c_cr x^{-1/k}|log x| (critical); none in the supercritical
        // regime, where g_k does not follow a one-term power law.
        let p = theory::classify(&model, common.k)?;
        let pow = args.x.powf(-1.0 / common.k as f64);
        let theory_value = match p.regime {
            Regime::Subcritical => Some(theory::c_sub(&model, common.k)? * pow),
            Regime::Critical => Some(theory::c_cr(&model, common.k)? * pow * args.x.ln().abs()),
            Regime::Supercritical => None,
        };
        let mut rng = harness::replica_rng(common.seed, 0, 0);
        let est =
            subordinator::gk_estimate(&model, common.k, args.x, common.replicas, &mut rng)?;
        write_estimate_row(&mut sink, &common.model, common.k, Some(args.x), est, theory_value)
    })()
    .execution()
}

/// Rebuild the theory model from a CSV's label columns ("a=1;b=1"
/// params style), unless the flags override it.
fn fit_prediction(
    args: &FitArgs,
    rows: &[harness::RunRow],
) -> fragtree::Result<theory::RegimePrediction> {
    let first = &rows[0];
    for row in rows {
        if row.model != first.model || row.params != first.params || row.k != first.k {
            return Err(Error::Config(
                "fit input mixes rows from different experiments".into(),
            ));
        }
    }
    let (name, params) = match &args.model {
        Some(name) => (
            name.clone(),
            harness::parse_param_list(args.param.as_deref().unwrap_or(""))?,
        ),
        None => {
            if args.param.is_some() || args.generator.is_some() {
                return Err(Error::Config(
                    "--param/--generator need an explicit --model".into(),
                ));
            }
            let listed = if first.params == "-" {
                String::new()
            } else {
                first.params.replace(';', ",")
            };
            (first.model.clone(), harness::parse_param_list(&listed)?)
        }
    };
    match name.as_str() {
        "zipf" => {
            let s = params
                .get("s")
                .copied()
                .ok_or_else(|| Error::Config("zipf prediction needs parameter 's'".into()))?;
            harness::zipf_karlin_prediction(s)
        }
        "geometric" => Err(Error::Domain(
            "the geometric urn grows logarithmically: no power-law fit target".into(),
        )),
        _ => {
            let chain = TreeModel::from_config(&name, &params, args.generator.as_deref())?;
            let k = u32::try_from(first.k)
                .map_err(|_| Error::Config(format!("bad k = {} in CSV", first.k)))?;
            chain.prediction(k)
        }
    }
}

fn cmd_fit(args: FitArgs) -> Result<(), Failure> {
    let (rows, prediction) = (|| {
        let file = std::fs::File::open(&args.input)?;
        let rows = harness::read_csv(file)?;
        if rows.is_empty() {
            return Err(Error::Config("fit input has no data rows".into()));
        }
        let prediction = fit_prediction(&args, &rows)?;
        Ok((rows, prediction))
    })()
    .usage()?;
    (|| {
        let fit = harness::fit_scaling(&rows, &prediction)?;
        println!("{fit}");
        let report = harness::multiplicity_ratio_report(&rows, &prediction);
        let last_n = rows.last().map(|r| r.n).unwrap_or(0);
        println!("multiplicity ratios at n = {last_n}:");
        for line in report.iter().filter(|l| l.n == last_n) {
            println!(
                "  r = {}: empirical {:.6}, predicted {:.6} (dev {:+.6})",
                line.r, line.empirical, line.predicted, line.deviation
            );
        }
        Ok(())
    })()
    .execution()
}

fn cmd_selftest() -> ExitCode {
    let report = harness::selftest();
    println!("{report}");
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}
