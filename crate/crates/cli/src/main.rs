use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jacobi_diff::analysis::{default_grid, half_open_grid, sweep_surface, SurfaceParams, SurfaceQuantity};
use jacobi_diff::estimator::{estimate_series, SampledSignal};
use jacobi_diff::experiment::{
    apply_overrides, mc_report, parse_spec, preset, preset_variant, render_table, run_experiment, run_preset,
    PRESET_NAMES,
};
use jacobi_diff::kernel::{Direction, DiscreteKernel, EndpointRule, EstimatorConfig};
use jacobi_diff::stochastic::{NoiseModel, RngSeed};
use jacobi_diff::{Error, Result};

#[derive(Parser)]
#[command(name = "jacobi-diff", version, about = "Jacobi-kernel derivative estimation of noisy signals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the n-th derivative of a `t,value` CSV signal.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        est: EstimatorFlags,
    },
    /// Run a named preset (`table1-a`, `table1-b`, `table2-a`, `table2-b`,
    /// optionally suffixed `:integer` / `:extended`) or a key = value spec file.
    Experiment {
        target: String,
        /// Print the table layout instead of JSON (preset pairs only).
        #[arg(long)]
        table: bool,
        /// Write `t,truth,noisy_estimate,noiseless_estimate` (single runs only).
        #[arg(long)]
        series: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        snr_db: Option<f64>,
        #[command(flatten)]
        est: EstimatorFlags,
    },
    /// Dump discrete kernel taps as `i,abscissa,tap`.
    Kernel {
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        est: EstimatorFlags,
    },
    /// Dump a (κ, µ) surface grid.
    Surface {
        /// delay | xi | variance-minimal | variance-affine
        #[arg(long)]
        quantity: String,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long = "T", default_value_t = 1.0)]
        window: f64,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        /// Points per axis over (lo, hi]; the default is 41 over (−1, 1].
        #[arg(long)]
        cells: Option<usize>,
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, default_value_t = 1.0)]
        hi: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Monte-Carlo noise error with Chebyshev bands, as JSON.
    Mc {
        /// wiener | white | poisson
        #[arg(long, default_value = "wiener")]
        noise: String,
        #[arg(long, default_value_t = 1.0)]
        sigma2: f64,
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
        /// Estimation instant; defaults to the window length.
        #[arg(long, allow_hyphen_values = true)]
        t0: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        est: EstimatorFlags,
    },
}

#[derive(Args, Clone, Default)]
struct EstimatorFlags {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    /// +1 causal, −1 anti-causal.
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<i32>,
    /// Window length in seconds.
    #[arg(long = "T")]
    window: Option<f64>,
    #[arg(long)]
    xi: Option<f64>,
    /// Endpoint regularization factor.
    #[arg(long = "F")]
    factor: Option<f64>,
    /// Zero the singular endpoint tap instead of regularizing it.
    #[arg(long)]
    suppress: bool,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stream: Option<u64>,
    #[arg(long)]
    gamma: Option<f64>,
}

impl EstimatorFlags {
    /// Builds a config; `ts` ties `T` and `m` together when only one is given.
    fn config(&self, ts: Option<f64>) -> Result<EstimatorConfig> {
        let (window, m) = match (self.window, self.m, ts) {
            (Some(t), Some(m), _) => (t, m),
            (Some(t), None, Some(ts)) => (t, (t / ts).round() as usize),
            (None, Some(m), Some(ts)) => (m as f64 * ts, m),
            (Some(t), None, None) => (t, 100),
            (None, Some(m), None) => (1.0, m),
            (None, None, Some(ts)) => (20.0 * ts, 20),
            (None, None, None) => (1.0, 100),
        };
        let direction = Direction::from_sign(self.beta.unwrap_or(1))?;
        let cfg = EstimatorConfig::affine(
            self.n.unwrap_or(1),
            self.q.unwrap_or(0),
            self.mu.unwrap_or(0.0),
            self.kappa.unwrap_or(0.0),
            direction,
            window,
            m,
            self.xi,
        )?;
        cfg.with_endpoint(self.endpoint().unwrap_or_default())
    }

    fn endpoint(&self) -> Option<EndpointRule> {
        if self.suppress {
            Some(EndpointRule::Suppress)
        } else {
            self.factor.map(|factor| EndpointRule::Regularized { factor })
        }
    }

    fn seed(&self) -> RngSeed {
        RngSeed { seed: self.seed.unwrap_or(0), stream: self.stream.unwrap_or(0) }
    }

    /// The flags as spec-file overrides.
    fn overrides(&self) -> Vec<(String, String)> {
        let mut kv = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                kv.push((k.to_string(), v));
            }
        };
        push("n", self.n.map(|v| v.to_string()));
        push("q", self.q.map(|v| v.to_string()));
        push("mu", self.mu.map(|v| v.to_string()));
        push("kappa", self.kappa.map(|v| v.to_string()));
        push("beta", self.beta.map(|v| v.to_string()));
        push("T", self.window.map(|v| v.to_string()));
        push("m", self.m.map(|v| v.to_string()));
        push("xi", self.xi.map(|v| v.to_string()));
        push("F", self.factor.map(|v| v.to_string()));
        push("endpoint", self.suppress.then(|| "suppress".to_string()));
        push("seed", self.seed.map(|v| v.to_string()));
        push("stream", self.stream.map(|v| v.to_string()));
        push("gamma", self.gamma.map(|v| v.to_string()));
        kv
    }
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: serde::Serialize>(path: &Option<PathBuf>, value: &T) -> Result<()> {
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn experiment(
    target: &str,
    table: bool,
    series: &Option<PathBuf>,
    output: &Option<PathBuf>,
    snr_db: Option<f64>,
    est: &EstimatorFlags,
) -> Result<()> {
    let mut kv = est.overrides();
    if let Some(db) = snr_db {
        kv.push(("snr_db".into(), db.to_string()));
    }
    let name = target.split(':').next().unwrap_or(target);
    let is_pair = PRESET_NAMES.contains(&target);

    if is_pair {
        if series.is_some() {
            return Err(Error::Experiment("--series needs a single run, e.g. table1-a:extended".into()));
        }
        let mut pair = preset(target, est.seed())?;
        if !kv.is_empty() {
            pair.integer = apply_overrides(Some(pair.integer), &kv)?;
            pair.extended = apply_overrides(Some(pair.extended), &kv)?;
        }
        let report = run_preset(&pair)?;
        if table {
            let mut out = sink(output)?;
            write!(out, "{}", render_table(&report, pair.integer.ts))?;
            out.flush()?;
            return Ok(());
        }
        return write_json(output, &report);
    }

    let base = if PRESET_NAMES.contains(&name) {
        preset_variant(target, est.seed())?
    } else if Path::new(target).is_file() {
        parse_spec(&std::fs::read_to_string(target)?)?
    } else {
        return Err(Error::Experiment(format!(
            "'{target}' is neither a preset ({}) nor a readable spec file",
            PRESET_NAMES.join(", ")
        )));
    };
    if table {
        return Err(Error::Experiment("--table needs a preset pair".into()));
    }
    let spec = apply_overrides(Some(base), &kv)?;
    let run = run_experiment(&spec)?;
    if let Some(path) = series {
        run.series.write_csv(BufWriter::new(File::create(path)?))?;
    }
    write_json(output, &run.report)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Estimate { input, output, est } => {
            let signal = SampledSignal::read_csv(File::open(&input)?)?;
            let cfg = est.config(Some(signal.ts))?;
            estimate_series(&signal, &cfg)?.write_csv(sink(&output)?)
        }
        Command::Experiment { target, table, series, output, snr_db, est } => {
            experiment(&target, table, &series, &output, snr_db, &est)
        }
        Command::Kernel { output, est } => {
            let k = DiscreteKernel::from_config(&est.config(None)?)?;
            k.write_csv(sink(&output)?)
        }
        Command::Surface { quantity, n, window, eta, cells, lo, hi, output } => {
            let quantity: SurfaceQuantity = quantity.parse()?;
            let grid = match cells {
                Some(c) => half_open_grid(lo, hi, c),
                None => default_grid(),
            };
            let surface = sweep_surface(quantity, &grid, &grid, &SurfaceParams { n, window, eta })?;
            surface.write_csv(sink(&output)?)
        }
        Command::Mc { noise, sigma2, nu, t0, trials, output, est } => {
            let model = match noise.as_str() {
                "wiener" => NoiseModel::Wiener { sigma2 },
                "white" => NoiseModel::WhiteGaussian { sigma2 },
                "poisson" => NoiseModel::Poisson { nu },
                other => return Err(Error::InvalidConfig(format!("unknown noise '{other}'"))),
            };
            let cfg = est.config(None)?;
            let t0 = t0.unwrap_or(cfg.window);
            let report = mc_report(&cfg, &model, t0, trials, est.gamma.unwrap_or(2.0), est.seed())?;
            write_json(&output, &report)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
