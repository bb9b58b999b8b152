//! `corrpoly`: command-line front end for the correlated-noise polymer
//! toolkit. Every command writes `<command>.csv` and a `<command>.json`
//! manifest into the output directory.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::CommandError;
use config::Config;
use output::{Manifest, OutputRecord};

#[derive(Parser, Debug)]
#[command(name = "corrpoly", version, about = "Directed polymers in time-white, spatially correlated Gaussian noise")]
struct Cli {
    /// Key-value config file, or a previous run's JSON manifest.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "CORRPOLY_WORKERS")]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Treat warnings as failures (exit 3 after writing outputs).
    #[arg(long, global = true)]
    strict: bool,
    /// Also write an SVG plot.
    #[arg(long, global = true)]
    svg: bool,
    /// Override any config key.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct CovArgs {
    /// generalized-cauchy or indicator-ball.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    ell: Option<String>,
    #[arg(long)]
    dimension: Option<String>,
}

#[derive(Args, Debug, Default)]
struct GridArgs {
    #[arg(long)]
    half_width: Option<String>,
    #[arg(long)]
    spacing: Option<String>,
    /// reflecting or absorbing.
    #[arg(long)]
    boundary: Option<String>,
    /// Keep the grid as given instead of widening it for the horizon.
    #[arg(long)]
    no_widen: bool,
}

#[derive(Args, Debug, Default)]
struct WalkArgs {
    #[arg(long)]
    dt: Option<String>,
    /// Kernel cutoff in standard deviations.
    #[arg(long)]
    cutoff: Option<String>,
    #[arg(long)]
    realizations: Option<String>,
}

#[derive(Args, Debug, Default)]
struct PolymerArgs {
    #[command(flatten)]
    cov: CovArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    walk: WalkArgs,
}

#[derive(Args, Debug, Default)]
struct PinArgs {
    /// power-law, indicator-ball or covariance.
    #[arg(long)]
    potential: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    ell: Option<String>,
    #[arg(long)]
    radius: Option<String>,
    #[arg(long)]
    dimension: Option<String>,
    /// Lattice spacing.
    #[arg(long)]
    spacing: Option<String>,
    /// Transfer time step, or `auto`.
    #[arg(long)]
    dt: Option<String>,
    /// Domain half-width, or `auto`.
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    margin: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate the covariance profile and check positive semidefiniteness.
    CovarianceCheck {
        #[command(flatten)]
        cov: CovArgs,
        #[arg(long)]
        max_distance: Option<String>,
        #[arg(long)]
        points: Option<String>,
    },
    /// Synthesize one field realization and report its empirical covariance.
    FieldSample {
        #[command(flatten)]
        cov: CovArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        dt: Option<String>,
        #[arg(long)]
        n_steps: Option<String>,
        /// Also write the binary field dump.
        #[arg(long)]
        dump: bool,
    },
    /// Finite-time free energy over a beta ladder.
    FreeEnergy {
        #[command(flatten)]
        p: PolymerArgs,
        #[arg(long)]
        betas: Option<String>,
        #[arg(long)]
        t: Option<String>,
    },
    /// Fractional moment (1/t) log E W^gamma.
    FractionalMoment {
        #[command(flatten)]
        p: PolymerArgs,
        #[arg(long)]
        beta: Option<String>,
        #[arg(long)]
        t: Option<String>,
        #[arg(long)]
        gamma: Option<String>,
    },
    /// Pinning free energy over an h ladder.
    Pinning {
        #[command(flatten)]
        pin: PinArgs,
        #[arg(long)]
        h_list: Option<String>,
        /// transfer, transfer-growth or eigenvalue.
        #[arg(long)]
        method: Option<String>,
    },
    /// Localization verdict at one h across a domain ladder.
    CriticalProbe {
        #[command(flatten)]
        pin: PinArgs,
        #[arg(long)]
        h: Option<String>,
        #[arg(long)]
        ladder: Option<String>,
    },
    /// Median maximal displacement of sampled paths against t.
    Diffusivity {
        #[command(flatten)]
        p: PolymerArgs,
        #[arg(long)]
        beta: Option<String>,
        #[arg(long)]
        t_list: Option<String>,
        #[arg(long)]
        paths: Option<String>,
    },
    /// Variance of log Z against t.
    Variance {
        #[command(flatten)]
        p: PolymerArgs,
        #[arg(long)]
        beta: Option<String>,
        #[arg(long)]
        t_list: Option<String>,
    },
    /// Compare the beta-derivative of the free energy with the overlap.
    OverlapCheck {
        #[command(flatten)]
        p: PolymerArgs,
        #[arg(long)]
        beta: Option<String>,
        #[arg(long)]
        t: Option<String>,
        #[arg(long)]
        d_beta: Option<String>,
        #[arg(long)]
        pairs: Option<String>,
    },
    /// Mean-zero check of the tilted-field identity.
    GirsanovCheck {
        #[command(flatten)]
        p: PolymerArgs,
        #[arg(long)]
        beta: Option<String>,
        #[arg(long)]
        t: Option<String>,
        #[arg(long)]
        lambda: Option<String>,
        #[arg(long)]
        r_step: Option<String>,
    },
    /// Monte Carlo second moment against the two-replica pinning value.
    SecondMomentCheck {
        #[command(flatten)]
        p: PolymerArgs,
        #[arg(long)]
        beta: Option<String>,
        #[arg(long)]
        t: Option<String>,
    },
    /// Weak or strong disorder from the decay of W_t.
    WeakDisorder {
        #[command(flatten)]
        p: PolymerArgs,
        #[arg(long)]
        beta: Option<String>,
        #[arg(long)]
        checkpoints: Option<String>,
    },
    /// Power-law fit of a series or pinning CSV.
    Fit {
        /// Input CSV.
        #[arg(long)]
        input: Option<String>,
        /// loglog-y, loglog-negy or loglog-var.
        #[arg(long)]
        transform: Option<String>,
        #[arg(long)]
        n_boot: Option<String>,
    },
    /// Built-in exactness checks.
    Selftest,
}

type Pairs<'a> = Vec<(&'static str, &'a Option<String>)>;

impl CovArgs {
    fn pairs(&self) -> Pairs<'_> {
        vec![
            ("covariance.family", &self.family),
            ("covariance.theta", &self.theta),
            ("covariance.ell", &self.ell),
            ("covariance.dimension", &self.dimension),
        ]
    }
}

impl GridArgs {
    fn apply(&self, cfg: &mut Config) -> Result<(), config::ConfigError> {
        apply(cfg, vec![("grid.half_width", &self.half_width), ("grid.spacing", &self.spacing), ("grid.boundary", &self.boundary)])?;
        if self.no_widen {
            cfg.set("grid.widen", "false")?;
        }
        Ok(())
    }
}

impl PolymerArgs {
    fn apply(&self, cfg: &mut Config) -> Result<(), config::ConfigError> {
        apply(cfg, self.cov.pairs())?;
        self.grid.apply(cfg)?;
        apply(
            cfg,
            vec![("polymer.dt", &self.walk.dt), ("polymer.cutoff", &self.walk.cutoff), ("polymer.realizations", &self.walk.realizations)],
        )
    }
}

impl PinArgs {
    fn pairs(&self) -> Pairs<'_> {
        vec![
            ("pinning.potential", &self.potential),
            ("pinning.theta", &self.theta),
            ("pinning.ell", &self.ell),
            ("pinning.radius", &self.radius),
            ("pinning.dimension", &self.dimension),
            ("pinning.spacing", &self.spacing),
            ("pinning.dt", &self.dt),
            ("pinning.domain", &self.domain),
            ("pinning.margin", &self.margin),
        ]
    }
}

fn apply(cfg: &mut Config, pairs: Pairs<'_>) -> Result<(), config::ConfigError> {
    for (k, v) in pairs {
        if let Some(v) = v {
            cfg.set(k, v.as_str())?;
        }
    }
    Ok(())
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::CovarianceCheck { .. } => "covariance-check",
            Command::FieldSample { .. } => "field-sample",
            Command::FreeEnergy { .. } => "free-energy",
            Command::FractionalMoment { .. } => "fractional-moment",
            Command::Pinning { .. } => "pinning",
            Command::CriticalProbe { .. } => "critical-probe",
            Command::Diffusivity { .. } => "diffusivity",
            Command::Variance { .. } => "variance",
            Command::OverlapCheck { .. } => "overlap-check",
            Command::GirsanovCheck { .. } => "girsanov-check",
            Command::SecondMomentCheck { .. } => "second-moment-check",
            Command::WeakDisorder { .. } => "weak-disorder",
            Command::Fit { .. } => "fit",
            Command::Selftest => "selftest",
        }
    }

    /// Layer this command's typed flags onto `cfg`.
    fn apply(&self, cfg: &mut Config) -> Result<(), config::ConfigError> {
        match self {
            Command::CovarianceCheck { cov, max_distance, points } => {
                apply(cfg, cov.pairs())?;
                apply(cfg, vec![("check.max_distance", max_distance), ("check.points", points)])
            }
            Command::FieldSample { cov, grid, dt, n_steps, dump } => {
                apply(cfg, cov.pairs())?;
                grid.apply(cfg)?;
                apply(cfg, vec![("polymer.dt", dt), ("field.n_steps", n_steps)])?;
                if *dump {
                    cfg.set("field.dump", "true")?;
                }
                Ok(())
            }
            Command::FreeEnergy { p, betas, t } => {
                p.apply(cfg)?;
                apply(cfg, vec![("polymer.betas", betas), ("polymer.t", t)])
            }
            Command::FractionalMoment { p, beta, t, gamma } => {
                p.apply(cfg)?;
                apply(cfg, vec![("polymer.beta", beta), ("polymer.t", t), ("polymer.gamma", gamma)])
            }
            Command::Pinning { pin, h_list, method } => {
                apply(cfg, pin.pairs())?;
                apply(cfg, vec![("pinning.h_list", h_list), ("pinning.method", method)])
            }
            Command::CriticalProbe { pin, h, ladder } => {
                apply(cfg, pin.pairs())?;
                apply(cfg, vec![("pinning.h", h), ("pinning.ladder", ladder)])
            }
            Command::Diffusivity { p, beta, t_list, paths } => {
                p.apply(cfg)?;
                apply(cfg, vec![("polymer.beta", beta), ("polymer.t_list", t_list), ("polymer.paths", paths)])
            }
            Command::Variance { p, beta, t_list } => {
                p.apply(cfg)?;
                apply(cfg, vec![("polymer.beta", beta), ("polymer.t_list", t_list)])
            }
            Command::OverlapCheck { p, beta, t, d_beta, pairs } => {
                p.apply(cfg)?;
                apply(cfg, vec![("polymer.beta", beta), ("polymer.t", t), ("polymer.d_beta", d_beta), ("polymer.pairs", pairs)])
            }
            Command::GirsanovCheck { p, beta, t, lambda, r_step } => {
                p.apply(cfg)?;
                apply(cfg, vec![("polymer.beta", beta), ("polymer.t", t), ("polymer.lambda", lambda), ("polymer.r_step", r_step)])
            }
            Command::SecondMomentCheck { p, beta, t } => {
                p.apply(cfg)?;
                apply(cfg, vec![("polymer.beta", beta), ("polymer.t", t)])
            }
            Command::WeakDisorder { p, beta, checkpoints } => {
                p.apply(cfg)?;
                apply(cfg, vec![("polymer.beta", beta), ("polymer.checkpoints", checkpoints)])
            }
            Command::Fit { input, transform, n_boot } => {
                apply(cfg, vec![("fit.input", input), ("fit.transform", transform), ("fit.n_boot", n_boot)])
            }
            Command::Selftest => Ok(()),
        }
    }
}

fn resolve(cli: &Cli) -> Result<Config, config::ConfigError> {
    let mut cfg = Config::default();
    if let Some(path) = &cli.config {
        cfg.merge_file(path)?;
    }
    for pair in &cli.set {
        cfg.set_pair(pair)?;
    }
    cli.command.apply(&mut cfg)?;
    if let Some(s) = cli.seed {
        cfg.set("run.seed", s.to_string())?;
    }
    if let Some(w) = cli.workers {
        cfg.set("run.workers", w.to_string())?;
    }
    if let Some(o) = &cli.out {
        cfg.set("run.out", o.display().to_string())?;
    }
    if cli.strict {
        cfg.set("run.strict", "true")?;
    }
    if cli.svg {
        cfg.set("run.svg", "true")?;
    }
    Ok(cfg)
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    match execute(name, &cfg) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}

/// Run the command and write its outputs; returns the exit code. Errors
/// here are configuration problems found before any work starts.
fn execute(name: &str, cfg: &Config) -> Result<u8, config::ConfigError> {
    let workers: usize = cfg.get("run.workers")?;
    let strict: bool = cfg.get("run.strict")?;
    let svg: bool = cfg.get("run.svg")?;
    let out_dir = PathBuf::from(cfg.raw("run.out"));
    let started = chrono::Utc::now().to_rfc3339();

    let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return Ok(EXIT_NUMERICAL);
        }
    };
    let result = pool.install(|| commands::run(name, cfg));

    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        return Ok(EXIT_VALIDATION);
    }
    let (code, outcome, mut warnings) = match result {
        Ok(o) => {
            let code = if o.failed || (strict && !o.warnings.is_empty()) { EXIT_NUMERICAL } else { 0 };
            let w = o.warnings.clone();
            (code, Some(o), w)
        }
        Err(CommandError::Validation(m)) => {
            eprintln!("error: {m}");
            return Ok(EXIT_VALIDATION);
        }
        Err(CommandError::Numerical(m)) => {
            eprintln!("error: {m}");
            (EXIT_NUMERICAL, None, vec![format!("error: {m}")])
        }
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    let mut outputs: Vec<OutputRecord> = Vec::new();
    let mut results = serde_json::Value::Null;
    if let Some(o) = outcome {
        let written = (|| -> std::io::Result<()> {
            outputs.push(output::emit(&out_dir, &format!("{name}.csv"), &o.table.to_csv())?);
            for (file, bytes) in &o.extra {
                outputs.push(output::emit(&out_dir, file, bytes)?);
            }
            if svg {
                let pts = o.plot_points.clone().unwrap_or_else(|| o.table.points());
                let plot = output::svg_plot(&o.plot.0, &o.plot.1, &o.plot.2, &pts);
                outputs.push(output::emit(&out_dir, &format!("{name}.svg"), plot.as_bytes())?);
            }
            Ok(())
        })();
        if let Err(e) = written {
            eprintln!("error: writing outputs: {e}");
            warnings.push(format!("error: writing outputs: {e}"));
        }
        results = o.results;
    }

    let manifest = Manifest {
        tool: "corrpoly",
        version: env!("CARGO_PKG_VERSION"),
        command: name.to_string(),
        config: cfg.entries().clone(),
        seed_scheme: output::SEED_SCHEME,
        started,
        finished: chrono::Utc::now().to_rfc3339(),
        exit_status: code as i32,
        warnings,
        results,
        outputs,
    };
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    if let Err(e) = output::write_atomic(&output::manifest_path(&out_dir, name), &json) {
        eprintln!("error: writing manifest: {e}");
        return Ok(EXIT_NUMERICAL);
    }
    Ok(code)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn command_names_match_registry() {
        for sub in Cli::command().get_subcommands() {
            assert!(commands::COMMANDS.contains(&sub.get_name()), "{}", sub.get_name());
        }
        assert_eq!(Cli::command().get_subcommands().count(), commands::COMMANDS.len());
    }

    #[test]
    fn flags_layer_over_set_pairs() {
        let cli = Cli::parse_from(["corrpoly", "--set", "polymer.beta=0.3", "free-energy", "--t", "8", "--seed", "9"]);
        let cfg = resolve(&cli).unwrap();
        assert_eq!(cfg.raw("polymer.beta"), "0.3");
        assert_eq!(cfg.raw("polymer.t"), "8");
        assert_eq!(cfg.raw("run.seed"), "9");
    }
}
