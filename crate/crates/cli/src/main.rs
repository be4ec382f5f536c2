use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use graph_minimax::estimator::{self, estimate_classification, pinsker_plan, projection_cutoff, projection_estimate};
use graph_minimax::format::sig;
use graph_minimax::minimax::{fano_certificate, prior_bayes_risk, FanoModel};
use graph_minimax::sim::{run_experiment, Estimator, ExperimentSpec, Family, SpectrumCache};
use graph_minimax::sobolev::{ellipsoid_weights, SobolevSpec};
use graph_minimax::spectral::{eigendecompose, Spectrum, DEFAULT_I0, DEFAULT_KAPPA};
use graph_minimax::{ClassificationMode, Error, ErrorKind, GraphSpec};

#[derive(Parser)]
#[command(name = "graph-minimax", version, about = "Minimax estimation of smooth functions on graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the Laplacian eigenvalues as a "j,lambda" CSV.
    Spectrum {
        #[arg(long)]
        graph: GraphSpec,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the geometry exponent r from the eigenvalue growth.
    FitR {
        #[arg(long)]
        graph: GraphSpec,
        #[arg(long, default_value_t = DEFAULT_I0)]
        i0: usize,
        #[arg(long, default_value_t = DEFAULT_KAPPA)]
        kappa: f64,
    },
    /// Denoise an "i,y" signal with Pinsker or projection shrinkage.
    Denoise {
        #[arg(long)]
        graph: GraphSpec,
        #[arg(long)]
        obs: PathBuf,
        #[arg(long)]
        beta: f64,
        #[arg(long = "Q")]
        q: f64,
        #[arg(long)]
        sigma: f64,
        /// Geometry exponent; defaults to the known value or a fit.
        #[arg(long)]
        r: Option<f64>,
        #[arg(long, value_enum, default_value_t = RegEstimator::Pinsker)]
        estimator: RegEstimator,
        #[arg(long)]
        out: PathBuf,
        /// Optional "i,f" CSV of the true signal; prints the empirical risk.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Estimate P(Y = 1) from "i,y" binary labels.
    Classify {
        #[arg(long)]
        graph: GraphSpec,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        beta: f64,
        #[arg(long = "Q")]
        q: f64,
        /// Noise level used for the shrinkage plan.
        #[arg(long, default_value_t = 0.5)]
        sigma: f64,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long, value_enum, default_value_t = Mode::Direct)]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a Monte Carlo rate experiment.
    Simulate {
        /// path | grid:D | torus:D | ws:K,P,SEED | file:PATH
        #[arg(long)]
        family: Family,
        /// Comma-separated, strictly increasing sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long)]
        beta: f64,
        #[arg(long = "Q")]
        q: f64,
        #[arg(long)]
        sigma: f64,
        /// pinsker | projection | classification-direct | classification-link
        #[arg(long)]
        estimator: Estimator,
        #[arg(long)]
        reps: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        fill: f64,
        /// Writes PREFIX_results.csv and PREFIX_aggregate.csv.
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// Build a Fano lower-bound certificate.
    Fano {
        #[arg(long)]
        graph: GraphSpec,
        #[arg(long)]
        beta: f64,
        #[arg(long = "Q")]
        q: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum)]
        mode: FanoMode,
        /// Noise level for the regression model.
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo Bayes risk of the Pinsker plan under the worst-case prior.
    PriorDemo {
        #[arg(long)]
        graph: GraphSpec,
        #[arg(long)]
        beta: f64,
        #[arg(long = "Q")]
        q: f64,
        #[arg(long)]
        sigma: f64,
        /// Prior variances are shrunk by the factor (1 - delta).
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        draws: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        r: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RegEstimator {
    Pinsker,
    Projection,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Direct,
    Link,
}

#[derive(Clone, Copy, ValueEnum)]
enum FanoMode {
    Reg,
    Clf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Validation => 1,
                ErrorKind::Numeric => 2,
                ErrorKind::Io => 3,
            })
        }
    }
}

fn run(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Spectrum { graph, out } => {
            let s = decompose(&graph)?;
            write(&out, &s.eigenvalues_csv())?;
            println!("n = {}", s.n());
            println!("lambda_1 = {}", sig(s.lambda(1)));
        }
        Command::FitR { graph, i0, kappa } => {
            let s = decompose(&graph)?;
            let fit = s.fit_geometry(i0, kappa)?;
            println!("r_hat = {}", sig(fit.r_hat));
            println!("slope = {}", sig(fit.slope));
            println!("c1_hat = {}", sig(fit.c1_hat));
            println!("c2_hat = {}", sig(fit.c2_hat));
            println!("range = {}..={}", fit.i0, ((fit.kappa * s.n() as f64).floor() as usize).min(s.n() - 1));
            if let GraphSpec::SmallWorld { .. } = graph {
                println!("note: small-world graphs of this kind typically fit r near 1.4; compare qualitatively");
            }
        }
        Command::Denoise { graph, obs, beta, q, sigma, r, estimator, out, truth } => {
            let s = decompose(&graph)?;
            let spec = SobolevSpec::new(beta, q, resolve_r(&graph, &s, r)?)?;
            let y = read_signal(&obs, "y", s.n())?;
            let fhat = match estimator {
                RegEstimator::Pinsker => {
                    let plan = pinsker_plan(&ellipsoid_weights(&s, &spec), sigma, s.n())?;
                    println!("N = {}", plan.cutoff);
                    println!("x = {}", sig(plan.x));
                    println!("S = {}", sig(plan.risk));
                    estimator::estimate_regression(&s, &plan, &y)?
                }
                RegEstimator::Projection => {
                    let m = projection_cutoff(s.n(), &spec);
                    println!("m = {m}");
                    projection_estimate(&s, &y, m)?
                }
            };
            write(&out, &signal_csv("f_hat", &fhat))?;
            if let Some(path) = truth {
                let f = read_signal(&path, "f", s.n())?;
                println!("risk = {}", sig(graph_minimax::sim::empirical_risk(&fhat, &f)?));
            }
        }
        Command::Classify { graph, labels, beta, q, sigma, r, mode, out } => {
            let s = decompose(&graph)?;
            let spec = SobolevSpec::new(beta, q, resolve_r(&graph, &s, r)?)?;
            if beta < spec.r() / 2.0 {
                eprintln!("warning: beta = {beta} is below r/2 = {}", spec.r() / 2.0);
            }
            let y = read_signal(&labels, "y", s.n())?;
            let plan = pinsker_plan(&ellipsoid_weights(&s, &spec), sigma, s.n())?;
            let mode = match mode {
                Mode::Direct => ClassificationMode::Direct,
                Mode::Link => ClassificationMode::Link,
            };
            let rho = estimate_classification(&s, &plan, &y, mode)?;
            println!("N = {}", plan.cutoff);
            write(&out, &signal_csv("rho_hat", &rho))?;
        }
        Command::Simulate { family, n_list, beta, q, sigma, estimator, reps, seed, fill, out_prefix } => {
            let spec = ExperimentSpec { family, n_values: n_list, beta, q, sigma, estimator, reps, seed, fill };
            let report = run_experiment(&spec, &SpectrumCache::new())?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            let prefix = out_prefix.to_string_lossy().into_owned();
            write(Path::new(&format!("{prefix}_results.csv")), &report.results_csv()?)?;
            write(Path::new(&format!("{prefix}_aggregate.csv")), &report.aggregate_csv()?)?;
            for s in &report.sizes {
                println!("n = {} mean_risk = {} stderr = {}", s.n, sig(s.mean_risk), sig(s.stderr));
            }
            match (&report.fit, &report.degenerate) {
                (Some(fit), _) => {
                    let se = fit.stderr.map_or_else(|| "NA".to_string(), sig);
                    println!("slope = {} (stderr {se}), theory = {}", sig(fit.slope), sig(report.theory_slope));
                }
                (None, Some(flag)) => println!("slope = NA ({flag}), theory = {}", sig(report.theory_slope)),
                (None, None) => println!("slope = NA, theory = {}", sig(report.theory_slope)),
            }
        }
        Command::Fano { graph, beta, q, seed, mode, sigma, r, out } => {
            let s = decompose(&graph)?;
            let spec = SobolevSpec::new(beta, q, resolve_r(&graph, &s, r)?)?;
            let model = match mode {
                FanoMode::Clf => FanoModel::Classification,
                FanoMode::Reg => FanoModel::Regression { sigma },
            };
            let cert = fano_certificate(&s, &spec, &model, seed)?;
            write(&out, &cert.to_csv())?;
            println!("valid = {}", cert.valid);
            println!("N = {} M = {}", cert.dim, cert.m);
            println!("delta = {}", sig(cert.delta));
            println!("alpha = {}", sig(cert.alpha));
            println!("fano_bound = {}", sig(cert.fano_bound));
        }
        Command::PriorDemo { graph, beta, q, sigma, delta, draws, seed, r } => {
            let s = decompose(&graph)?;
            let spec = SobolevSpec::new(beta, q, resolve_r(&graph, &s, r)?)?;
            let w = ellipsoid_weights(&s, &spec);
            let plan = pinsker_plan(&w, sigma, s.n())?;
            let band = prior_bayes_risk(&plan, &w, delta, draws, seed)?;
            println!("S = {}", sig(plan.risk));
            println!("bayes_risk = {} (stderr {})", sig(band.mean), sig(band.stderr));
            println!("band = [{}, {}]", sig(band.lower), sig(band.upper));
            println!("prior_form = {} (radius {})", sig(band.mean_form), sig(w.radius_sq()));
        }
    }
    Ok(())
}

fn decompose(graph: &GraphSpec) -> Result<Spectrum, Error> {
    eigendecompose(&graph.build()?)
}

fn resolve_r(graph: &GraphSpec, s: &Spectrum, r: Option<f64>) -> Result<f64, Error> {
    match r.or(graph.known_r()) {
        Some(r) => Ok(r),
        None => Ok(s.fit_geometry(DEFAULT_I0, DEFAULT_KAPPA)?.r_hat.max(1.0)),
    }
}

fn write(path: &Path, contents: &str) -> Result<(), Error> {
    fs::write(path, contents).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn signal_csv(column: &str, values: &[f64]) -> String {
    let mut out = format!("i,{column}\n");
    for (i, v) in values.iter().enumerate() {
        out.push_str(&format!("{i},{}\n", sig(*v)));
    }
    out
}

/// Reads an "i,<column>" CSV covering every vertex exactly once.
fn read_signal(path: &Path, column: &str, n: usize) -> Result<Vec<f64>, Error> {
    let name = path.display().to_string();
    let io = |source: std::io::Error| Error::Io { path: name.clone(), source };
    let mut rd = csv::Reader::from_reader(fs::File::open(path).map_err(io)?);
    let bad = |line: usize, message: String| Error::Parse { line, message: format!("{name}: {message}") };
    let header = rd.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    if header.len() != 2 || &header[0] != "i" || &header[1] != column {
        return Err(bad(1, format!("expected header \"i,{column}\"")));
    }
    let mut values = vec![None; n];
    for (k, rec) in rd.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| bad(line, e.to_string()))?;
        let i: usize = rec[0].trim().parse().map_err(|_| bad(line, format!("bad vertex id {:?}", &rec[0])))?;
        let v: f64 = rec[1].trim().parse().map_err(|_| bad(line, format!("bad value {:?}", &rec[1])))?;
        if i >= n {
            return Err(bad(line, format!("vertex {i} out of range for n = {n}")));
        }
        if values[i].replace(v).is_some() {
            return Err(bad(line, format!("vertex {i} listed twice")));
        }
    }
    let missing = values.iter().filter(|v| v.is_none()).count();
    if missing > 0 {
        let first = values.iter().position(|v| v.is_none()).unwrap_or(0);
        return Err(Error::InvalidParameter(format!(
            "{name}: {missing} vertices missing (first missing vertex {first})"
        )));
    }
    Ok(values.into_iter().flatten().collect())
}
