use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use moment_lab::csv;
use moment_lab::figures::{self, FigureId};
use moment_lab::mc::{InitialVelocity, McConfig};
use moment_lab::series::{compute_series, linspace, moment_at};
use moment_lab::validation;
use moment_lab::{Method, Params, QuadOptions, ThermalKernel};

/// Orbital diamagnetic moment of a damped charged particle.
///
/// All inputs are in natural units (hbar = k_B = m = c = q = 1). Times given
/// on the command line are internal times; CSV output reports gamma*t.
#[derive(Parser, Debug)]
#[command(name = "moment-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    settings: Settings,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute M_z on a time grid.
    Moment,
    /// Reproduce a figure as CSV curves plus an SVG plot.
    Figure {
        /// fig1..fig7, fig5new, or `all`.
        id: String,
    },
    /// M_z as a function of gamma at fixed gamma*t.
    Sweep {
        #[arg(long, default_value_t = 0.5)]
        gamma_min: f64,
        #[arg(long, default_value_t = 40.0)]
        gamma_max: f64,
        /// Fixed gamma*t at which each point is evaluated.
        #[arg(long, default_value_t = 1.0)]
        gamma_t: f64,
    },
    /// Run the acceptance suite and write validation.txt.
    Validate,
}

/// Every knob that can come from the config file or a flag. Flags win.
#[derive(Args, Deserialize, Debug, Default, Clone)]
#[serde(deny_unknown_fields)]
struct Settings {
    /// Flat key = value TOML file with any of the options below.
    #[arg(long, global = true)]
    #[serde(skip)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    omega_c: Option<f64>,
    #[arg(long, global = true)]
    omega_0: Option<f64>,
    #[arg(long, global = true)]
    temperature: Option<f64>,
    /// full-coth, high-t or low-t (quadrature only).
    #[arg(long, global = true)]
    kernel: Option<String>,
    /// quadrature, high-t-closed, low-t-closed or monte-carlo.
    #[arg(long, global = true)]
    method: Option<String>,
    #[arg(long, global = true)]
    t_start: Option<f64>,
    #[arg(long, global = true)]
    t_stop: Option<f64>,
    /// Number of grid points.
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    #[arg(long, global = true)]
    abs_tol: Option<f64>,
    /// Hard frequency cutoff; required by the full-coth kernel.
    #[arg(long, global = true)]
    omega_cutoff: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trajectories: Option<usize>,
    /// Monte Carlo step; defaults to the stability limit.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// zero or thermal.
    #[arg(long, global = true)]
    initial_velocity: Option<String>,
    /// Output directory, created if missing.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

impl Settings {
    fn overlay(self, base: Settings) -> Settings {
        Settings {
            config: self.config,
            gamma: self.gamma.or(base.gamma),
            omega_c: self.omega_c.or(base.omega_c),
            omega_0: self.omega_0.or(base.omega_0),
            temperature: self.temperature.or(base.temperature),
            kernel: self.kernel.or(base.kernel),
            method: self.method.or(base.method),
            t_start: self.t_start.or(base.t_start),
            t_stop: self.t_stop.or(base.t_stop),
            n: self.n.or(base.n),
            rel_tol: self.rel_tol.or(base.rel_tol),
            abs_tol: self.abs_tol.or(base.abs_tol),
            omega_cutoff: self.omega_cutoff.or(base.omega_cutoff),
            seed: self.seed.or(base.seed),
            trajectories: self.trajectories.or(base.trajectories),
            dt: self.dt.or(base.dt),
            initial_velocity: self.initial_velocity.or(base.initial_velocity),
            out: self.out.or(base.out),
        }
    }

    fn params(&self) -> Result<Params> {
        Ok(Params::new(
            self.gamma.unwrap_or(10.0),
            self.omega_c.unwrap_or(1.0),
            self.omega_0.unwrap_or(0.0),
            self.temperature.unwrap_or(1.0),
        )?)
    }

    fn method(&self) -> Result<Method> {
        parse_opt(self.method.as_deref(), Method::HighTClosed, "method")
    }

    fn kernel(&self) -> Result<ThermalKernel> {
        parse_opt(self.kernel.as_deref(), ThermalKernel::ClassicalHighT, "kernel")
    }

    fn quad_options(&self) -> Result<QuadOptions> {
        let mut opts = QuadOptions::default();
        if let Some(r) = self.rel_tol {
            positive("rel_tol", r)?;
            opts.rel_tol = r;
        }
        if let Some(a) = self.abs_tol {
            positive("abs_tol", a)?;
            opts.abs_tol = a;
        }
        if let Some(c) = self.omega_cutoff {
            positive("omega_cutoff", c)?;
            opts.omega_cutoff = Some(c);
        }
        Ok(opts)
    }

    fn times(&self) -> Result<Vec<f64>> {
        let start = self.t_start.unwrap_or(0.0);
        let stop = self.t_stop.unwrap_or(1.0);
        let n = self.n.unwrap_or(101);
        if n < 2 {
            bail!("invalid n = {n}: must be >= 2");
        }
        if !(start >= 0.0 && start.is_finite()) {
            bail!("invalid t_start = {start}: must be finite and >= 0");
        }
        if !(stop > start && stop.is_finite()) {
            bail!("invalid t_stop = {stop}: must be finite and > t_start");
        }
        Ok(linspace(start, stop, n))
    }

    fn mc_config(&self, p: &Params, t_max: f64) -> Result<McConfig> {
        let initial_velocity = match self.initial_velocity.as_deref().unwrap_or("thermal") {
            "zero" => InitialVelocity::Zero,
            "thermal" => InitialVelocity::ThermalEquipartition,
            other => bail!("invalid initial_velocity `{other}` (expected zero or thermal)"),
        };
        let cfg = McConfig {
            n_trajectories: self.trajectories.unwrap_or(10_000),
            dt: self.dt.unwrap_or_else(|| McConfig::dt_limit(p)),
            t_max,
            seed: self.seed.unwrap_or(1),
            initial_velocity,
        };
        cfg.validate(p)?;
        Ok(cfg)
    }

    fn out_dir(&self) -> Result<PathBuf> {
        let dir = self.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }
}

fn parse_opt<T: std::str::FromStr<Err = String>>(s: Option<&str>, default: T, field: &str) -> Result<T> {
    match s {
        None => Ok(default),
        Some(s) => s.parse().map_err(|e| anyhow::anyhow!("invalid {field}: {e}")),
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("invalid {field} = {v}: must be positive and finite");
    }
    Ok(())
}

fn load_settings(cli: Settings) -> Result<Settings> {
    let Some(path) = cli.config.clone() else {
        return Ok(cli);
    };
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let file: Settings = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(cli.overlay(file))
}

fn params_comment(p: &Params) -> String {
    format!(
        "gamma={} omega_c={} omega_0={} T={}",
        p.gamma, p.omega_c, p.omega_0, p.temperature
    )
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    body(&mut w).with_context(|| format!("writing {}", path.display()))?;
    w.flush()?;
    println!("{}", path.display());
    Ok(())
}

fn run_moment(s: &Settings) -> Result<()> {
    let p = s.params()?;
    let method = s.method()?;
    let kernel = s.kernel()?;
    let opts = s.quad_options()?;
    let times = s.times()?;
    let mc = match method {
        Method::MonteCarlo => Some(s.mc_config(&p, *times.last().unwrap())?),
        _ => None,
    };
    let series = compute_series(&p, &times, method, kernel, &opts, mc.as_ref())?;
    let mut comment = params_comment(&p);
    match (method, &mc) {
        (Method::GeneralQuadrature, _) => comment.push_str(&format!(" kernel={} rel_tol={}", kernel.name(), opts.rel_tol)),
        (Method::MonteCarlo, Some(c)) => {
            comment.push_str(&format!(" trajectories={} dt={} seed={}", c.n_trajectories, c.dt, c.seed))
        }
        _ => {}
    }
    let path = s.out_dir()?.join(format!("moment_{}.csv", method.name()));
    write_file(&path, |w| csv::write_series(w, &series, p.gamma, &comment))
}

fn run_figure(s: &Settings, id: &str) -> Result<()> {
    let ids: Vec<FigureId> = if id.eq_ignore_ascii_case("all") {
        FigureId::ALL.to_vec()
    } else {
        vec![id.parse().map_err(anyhow::Error::msg)?]
    };
    let dir = s.out_dir()?;
    for id in ids {
        let fig = figures::compute(id)?;
        for path in fig.write(&dir).with_context(|| format!("writing {id}"))? {
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn run_sweep(s: &Settings, gamma_min: f64, gamma_max: f64, gamma_t: f64) -> Result<()> {
    positive("gamma_min", gamma_min)?;
    if !(gamma_max > gamma_min && gamma_max.is_finite()) {
        bail!("invalid gamma_max = {gamma_max}: must be finite and > gamma_min");
    }
    if !(gamma_t >= 0.0 && gamma_t.is_finite()) {
        bail!("invalid gamma_t = {gamma_t}: must be finite and >= 0");
    }
    let base = s.params()?;
    let method = s.method()?;
    if method == Method::MonteCarlo {
        bail!("invalid method: sweep supports deterministic methods only");
    }
    let kernel = s.kernel()?;
    let opts = s.quad_options()?;
    let n = s.n.unwrap_or(400);
    if n < 2 {
        bail!("invalid n = {n}: must be >= 2");
    }
    let gammas = linspace(gamma_min, gamma_max, n);
    let values = {
        use rayon::prelude::*;
        gammas
            .par_iter()
            .map(|&g| moment_at(&base.with_gamma(g), gamma_t / g, method, kernel, &opts))
            .collect::<moment_lab::Result<Vec<f64>>>()?
    };
    let comment = format!(
        "omega_c={} omega_0={} T={} gamma*t={gamma_t} method={}",
        base.omega_c, base.omega_0, base.temperature, method
    );
    let path = s.out_dir()?.join(format!("sweep_{}.csv", method.name()));
    write_file(&path, |w| csv::write_columns(w, &comment, ("gamma", "Mz"), &gammas, &values))
}

fn run_validate(s: &Settings) -> Result<bool> {
    let outcomes = validation::run_all();
    let report = validation::report(&outcomes);
    print!("{report}");
    let path = s.out_dir()?.join("validation.txt");
    write_file(&path, |w| w.write_all(report.as_bytes()))?;
    Ok(outcomes.iter().all(|o| o.passed))
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("MOMENT_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v.parse().with_context(|| format!("invalid MOMENT_LAB_THREADS = {v}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    configure_threads()?;
    let s = load_settings(cli.settings)?;
    match cli.command {
        Command::Moment => run_moment(&s)?,
        Command::Figure { id } => run_figure(&s, &id)?,
        Command::Sweep {
            gamma_min,
            gamma_max,
            gamma_t,
        } => run_sweep(&s, gamma_min, gamma_max, gamma_t)?,
        Command::Validate => return run_validate(&s),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
