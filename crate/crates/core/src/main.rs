//! `zacr` command-line interface.
//!
//! Reports are written as text to stdout; `--json <path>` additionally writes
//! the machine-readable form (`--json -` sends JSON to stdout instead of text).
//! Failures print a JSON error object on stderr and exit with 2 (usage or
//! parameter domain), 3 (data or I/O) or 4 (numerical failure).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use zacr::analysis::{
    compare, comparison_variants, curve_grid, format_fit_table, format_survival_table,
    kaplan_meier, load_dataset, time_grid, to_json, write_curves_csv, write_dataset, write_km_csv,
};
use zacr::inference::{fit_mle, FitConfig};
use zacr::simulate::{
    calibrate_uniform_censoring, format_mc_report, monte_carlo_study, sample_dataset, CensoringSpec,
};
use zacr::{LogNormal, Result, SurvivalDataset, ZacrError, ZacrModel, ZacrVariant};

#[derive(Parser, Debug)]
#[command(
    name = "zacr",
    version,
    about = "Zero-adjusted cure-rate survival models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Mixture,
    Promotion,
    Geo,
    Nb,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum CensoringArg {
    None,
    Uniform,
    Exponential,
}

#[derive(clap::Args, Debug)]
struct VariantOpts {
    /// Model variant
    #[arg(long, value_enum)]
    variant: VariantArg,
    /// Dispersion for the negative-binomial variant
    #[arg(long, allow_negative_numbers = true)]
    eta: Option<f64>,
}

#[derive(clap::Args, Debug)]
struct FitOpts {
    /// Seed for the random optimizer restarts
    #[arg(long, default_value_t = 0x5eed)]
    fit_seed: u64,
    /// Number of optimizer starts
    #[arg(long, default_value_t = 5)]
    starts: usize,
}

impl FitOpts {
    fn config(&self) -> FitConfig {
        FitConfig {
            seed: self.fit_seed,
            n_starts: self.starts,
            ..FitConfig::default()
        }
    }
}

#[derive(clap::Args, Debug)]
struct CensoringOpts {
    /// Censoring law shared by cured and susceptible subjects
    #[arg(long, value_enum, default_value = "uniform")]
    censoring: CensoringArg,
    /// Upper bound of uniform censoring
    #[arg(long)]
    c_max: Option<f64>,
    /// Rate of exponential censoring
    #[arg(long)]
    rate: Option<f64>,
    /// Calibrate uniform censoring to this expected censored fraction
    #[arg(long)]
    target_censoring: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit one variant by maximum likelihood
    Fit {
        /// CSV file with header `time,status`
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        variant: VariantOpts,
        #[command(flatten)]
        fit: FitOpts,
        /// Write the FitResult JSON here (`-` for stdout)
        #[arg(long)]
        json: Option<String>,
    },
    /// Fit the mixture, promotion, negative-binomial and geometric variants and rank them by AIC
    Compare {
        /// CSV file with header `time,status`
        #[arg(long)]
        input: PathBuf,
        /// Dispersion of the negative-binomial variant
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        eta: f64,
        /// Times for the survival table
        #[arg(long, value_delimiter = ',', default_value = "0,6,12,18")]
        times: Vec<f64>,
        /// End of the curve grid; defaults to the largest finite observed time
        #[arg(long)]
        grid_max: Option<f64>,
        /// Number of points on the curve grid
        #[arg(long, default_value_t = 101)]
        grid_points: usize,
        #[command(flatten)]
        fit: FitOpts,
        /// Write the report JSON here (`-` for stdout)
        #[arg(long)]
        json: Option<String>,
    },
    /// Simulate a censored dataset and write it as CSV
    Simulate {
        #[command(flatten)]
        variant: VariantOpts,
        /// Log-scale location of the baseline
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        mu: f64,
        /// Log-scale spread of the baseline
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Cause parameters in variant order: p0,p1 | tau,theta | alpha0,alpha1
        #[arg(long, value_delimiter = ',', required = true)]
        params: Vec<f64>,
        /// Number of subjects
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        censoring: CensoringOpts,
        /// Seed for the simulated data
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output file; stdout when absent
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Monte Carlo study of bias, RMSE and Wald coverage
    McStudy {
        #[command(flatten)]
        variant: VariantOpts,
        /// Log-scale location of the baseline
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        mu: f64,
        /// Log-scale spread of the baseline
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// True cause parameters in variant order; defaults exist for mixture (0.3,0.1) and promotion (1.2,2.3)
        #[arg(long, value_delimiter = ',')]
        params: Option<Vec<f64>>,
        /// Sample size per replication
        #[arg(long, default_value_t = 500)]
        n: usize,
        /// Number of replications
        #[arg(long = "B", default_value_t = 1000)]
        b: usize,
        #[command(flatten)]
        censoring: CensoringOpts,
        /// Base seed; replication r draws from its own stream
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write the report JSON here (`-` for stdout)
        #[arg(long)]
        json: Option<String>,
    },
    /// Kaplan-Meier step function as CSV
    Km {
        /// CSV file with header `time,status`
        #[arg(long)]
        input: PathBuf,
        /// Output file; stdout when absent
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Kaplan-Meier and fitted survival of all compared variants on a time grid, as CSV
    Curves {
        /// CSV file with header `time,status`
        #[arg(long)]
        input: PathBuf,
        /// Dispersion of the negative-binomial variant
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        eta: f64,
        /// End of the curve grid; defaults to the largest finite observed time
        #[arg(long)]
        grid_max: Option<f64>,
        /// Number of points on the curve grid
        #[arg(long, default_value_t = 101)]
        grid_points: usize,
        #[command(flatten)]
        fit: FitOpts,
        /// Output file; stdout when absent
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    line: Option<usize>,
}

fn exit_code(e: &ZacrError) -> u8 {
    match e {
        ZacrError::Domain(_) => 2,
        ZacrError::Data { .. } | ZacrError::NonIdentifiable(_) | ZacrError::Io(_) => 3,
        ZacrError::Evaluation(_) | ZacrError::IntervalUnavailable(_) => 4,
    }
}

fn error_kind(e: &ZacrError) -> &'static str {
    match e {
        ZacrError::Domain(_) => "domain",
        ZacrError::Data { .. } => "data",
        ZacrError::NonIdentifiable(_) => "non_identifiable",
        ZacrError::Evaluation(_) => "evaluation",
        ZacrError::IntervalUnavailable(_) => "interval_unavailable",
        ZacrError::Io(_) => "io",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = match &e {
                ZacrError::Data { line, .. } => *line,
                _ => None,
            };
            let report = ErrorReport {
                error: error_kind(&e),
                message: e.to_string(),
                line,
            };
            let text = serde_json::to_string(&report)
                .unwrap_or_else(|_| format!("{{\"error\":\"{}\"}}", report.error));
            eprintln!("{text}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn variant_of(opts: &VariantOpts) -> Result<ZacrVariant> {
    match (opts.variant, opts.eta) {
        (VariantArg::Nb, Some(eta)) => ZacrVariant::negative_binomial(eta),
        (VariantArg::Nb, None) => Err(ZacrError::Domain(
            "--eta is required for --variant nb".into(),
        )),
        (_, Some(_)) => Err(ZacrError::Domain(
            "--eta only applies to --variant nb".into(),
        )),
        (VariantArg::Mixture, None) => Ok(ZacrVariant::StandardMixture),
        (VariantArg::Promotion, None) => Ok(ZacrVariant::Promotion),
        (VariantArg::Geo, None) => Ok(ZacrVariant::Geometric),
    }
}

fn censoring_of<B: zacr::Baseline>(
    opts: &CensoringOpts,
    model: &ZacrModel<B>,
    default_target: Option<f64>,
) -> Result<CensoringSpec> {
    match opts.censoring {
        CensoringArg::None => Ok(CensoringSpec::None),
        CensoringArg::Exponential => match opts.rate {
            Some(r) => CensoringSpec::exponential(r),
            None => Err(ZacrError::Domain(
                "--rate is required for exponential censoring".into(),
            )),
        },
        CensoringArg::Uniform => match (opts.c_max, opts.target_censoring.or(default_target)) {
            (Some(c), _) => CensoringSpec::uniform(c),
            (None, Some(t)) => calibrate_uniform_censoring(model, t),
            (None, None) => Err(ZacrError::Domain(
                "uniform censoring needs --c-max or --target-censoring".into(),
            )),
        },
    }
}

fn param_pair(p: &[f64]) -> Result<[f64; 2]> {
    match p {
        [a, b] => Ok([*a, *b]),
        _ => Err(ZacrError::Domain(format!(
            "--params takes exactly two values, got {}",
            p.len()
        ))),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| ZacrError::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Print `text` to stdout, and the JSON form to `json` if requested.
fn emit<T: Serialize>(text: &str, value: &T, json: Option<&str>) -> Result<()> {
    let mut out = io::stdout().lock();
    match json {
        Some("-") => writeln!(out, "{}", to_json(value)?)?,
        Some(path) => {
            write!(out, "{text}")?;
            std::fs::write(path, to_json(value)? + "\n")
                .map_err(|e| ZacrError::Io(format!("{path}: {e}")))?;
        }
        None => write!(out, "{text}")?,
    }
    out.flush()?;
    Ok(())
}

fn default_grid_max(d: &SurvivalDataset) -> Result<f64> {
    d.iter()
        .map(|o| o.time)
        .filter(|t| t.is_finite())
        .fold(None, |acc: Option<f64>, t| {
            Some(acc.map_or(t, |a| a.max(t)))
        })
        .filter(|&t| t > 0.0)
        .ok_or_else(|| {
            ZacrError::Domain(
                "no positive finite time to set the curve grid; pass --grid-max".into(),
            )
        })
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Fit {
            input,
            variant,
            fit,
            json,
        } => {
            let v = variant_of(&variant)?;
            let d = load_dataset(&input)?;
            let f = fit_mle(v, &d, &fit.config())?;
            let text = format!(
                "{}log-likelihood {:.4}  converged {}\n",
                format_fit_table(std::slice::from_ref(&f)),
                f.log_lik,
                f.converged
            );
            emit(&text, &f, json.as_deref())
        }
        Command::Compare {
            input,
            eta,
            times,
            grid_max,
            grid_points,
            fit,
            json,
        } => {
            let d = load_dataset(&input)?;
            let grid = time_grid(
                grid_max.map_or_else(|| default_grid_max(&d), Ok)?,
                grid_points,
            )?;
            let bundle = compare(&d, &comparison_variants(eta)?, &fit.config(), &times, &grid)?;
            let mut text = format_fit_table(&bundle.fits);
            text.push_str(&format!(
                "AIC ranking: {}\n",
                bundle.aic_ranking.join(" < ")
            ));
            for t in &bundle.survival_table {
                text.push_str(&format!(
                    "\n{}\n{}",
                    t.variant,
                    format_survival_table(&t.rows)
                ));
            }
            emit(&text, &bundle, json.as_deref())
        }
        Command::Simulate {
            variant,
            mu,
            sigma,
            params,
            n,
            censoring,
            seed,
            output: out,
        } => {
            let v = variant_of(&variant)?;
            let model =
                ZacrModel::from_cause_params(v, LogNormal::new(mu, sigma)?, param_pair(&params)?)?;
            let cens = censoring_of(&censoring, &model, None)?;
            let d = sample_dataset(&model, n, &cens, seed)?;
            let mut w = output(out.as_deref())?;
            write_dataset(&d, &mut w)?;
            w.flush()?;
            Ok(())
        }
        Command::McStudy {
            variant,
            mu,
            sigma,
            params,
            n,
            b,
            censoring,
            seed,
            json,
        } => {
            let v = variant_of(&variant)?;
            let (pair, default_target) = match (params, v) {
                (Some(p), ZacrVariant::StandardMixture) => (param_pair(&p)?, Some(0.351)),
                (Some(p), ZacrVariant::Promotion) => (param_pair(&p)?, Some(0.372)),
                (Some(p), _) => (param_pair(&p)?, None),
                (None, ZacrVariant::StandardMixture) => ([0.3, 0.1], Some(0.351)),
                (None, ZacrVariant::Promotion) => ([1.2, 2.3], Some(0.372)),
                (None, _) => {
                    return Err(ZacrError::Domain(
                        "--params is required for this variant".into(),
                    ))
                }
            };
            let truth = ZacrModel::from_cause_params(v, LogNormal::new(mu, sigma)?, pair)?;
            let cens = censoring_of(&censoring, &truth, default_target)?;
            let report = monte_carlo_study(v, &truth, n, b, &cens, seed, &FitConfig::default())?;
            emit(&format_mc_report(&report), &report, json.as_deref())
        }
        Command::Km { input, output: out } => {
            let d = load_dataset(&input)?;
            let mut w = output(out.as_deref())?;
            write_km_csv(&kaplan_meier(&d), &mut w)?;
            w.flush()?;
            Ok(())
        }
        Command::Curves {
            input,
            eta,
            grid_max,
            grid_points,
            fit,
            output: out,
        } => {
            let d = load_dataset(&input)?;
            let grid = time_grid(
                grid_max.map_or_else(|| default_grid_max(&d), Ok)?,
                grid_points,
            )?;
            let variants = comparison_variants(eta)?;
            let cfg = fit.config();
            let fits = variants
                .iter()
                .map(|&v| fit_mle(v, &d, &cfg))
                .collect::<Result<Vec<_>>>()?;
            let labels: Vec<String> = fits.iter().map(|f| f.variant.label().to_string()).collect();
            let mut w = output(out.as_deref())?;
            write_curves_csv(&curve_grid(&d, &fits, &grid)?, &labels, &mut w)?;
            w.flush()?;
            Ok(())
        }
    }
}
