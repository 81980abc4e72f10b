//! Library side of the `gmsurf` command-line tool, so the workflows can be driven from tests.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use gmsurf::Error;

pub use commands::{cmd_asymptotics, cmd_dispersion, cmd_ensemble, cmd_scatter, cmd_sweep};
pub use config::{ConfigError, Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "gmsurf",
    version,
    about = "Surface-wave scattering by random mass patches"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML run configuration; defaults are used for anything missing.
    #[arg(long, global = true, env = "GMSURF_CONFIG")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "GMSURF_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, env = "GMSURF_SEED")]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long, global = true, env = "GMSURF_THREADS")]
    pub threads: Option<usize>,
    /// Limiting-absorption offset; 0 uses the exact radiating kernel.
    #[arg(long, global = true, env = "GMSURF_EPSILON")]
    pub epsilon: Option<f64>,
    /// Spectral quadrature nodes.
    #[arg(long, global = true, env = "GMSURF_NODES")]
    pub nodes: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Surface-wave dispersion curve.
    Dispersion,
    /// Deterministic scattering by one patch over the frequency grid.
    Scatter,
    /// Monte Carlo statistics over random patches.
    Ensemble,
    /// Effective parameters, moment hierarchy and regime formulas.
    Asymptotics,
    /// Parameter sweep of the mean loss, plus an ensemble comparison.
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Dispersion => "dispersion",
            Command::Scatter => "scatter",
            Command::Ensemble => "ensemble",
            Command::Asymptotics => "asymptotics",
            Command::Sweep => "sweep",
        }
    }
}

pub fn dispatch(command: Command, cfg: &RunConfig) -> anyhow::Result<Vec<PathBuf>> {
    match command {
        Command::Dispersion => cmd_dispersion(cfg),
        Command::Scatter => cmd_scatter(cfg),
        Command::Ensemble => cmd_ensemble(cfg),
        Command::Asymptotics => cmd_asymptotics(cfg),
        Command::Sweep => cmd_sweep(cfg),
    }
}

/// Loads and validates the configuration, then runs the command in a pool of the requested size.
pub fn run(cli: &Cli) -> anyhow::Result<Vec<PathBuf>> {
    let c = &cli.common;
    let mut cfg = RunConfig::load(c.config.as_deref())?;
    cfg.apply(&Overrides {
        out: c.out.clone(),
        seed: c.seed,
        epsilon: c.epsilon,
        nodes: c.nodes,
    });
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(c.threads.unwrap_or(0))
        .build()?;
    pool.install(|| dispatch(cli.command, &cfg))
}

/// 2 for bad input, 3 for numerical non-convergence, 4 for singular systems, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    let Some(e) = err.chain().find_map(|c| c.downcast_ref::<Error>()) else {
        return 1;
    };
    match e.root_cause() {
        Error::InvalidInput(_)
        | Error::DomainError { .. }
        | Error::NoSurfaceBand { .. }
        | Error::FrequencyOutOfBand { .. }
        | Error::GammaOutOfSpectrum { .. } => 2,
        Error::QuadratureNotConverged { .. }
        | Error::TruncationNotConverged { .. }
        | Error::RootFindFailure { .. } => 3,
        Error::SingularSystem { .. } | Error::NonPositiveDiscriminant { .. } => 4,
        Error::Realization { .. } => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let e = |x: Error| exit_code(&anyhow::Error::from(x));
        assert_eq!(
            e(Error::NoSurfaceBand {
                m_s: 1.0,
                alpha_s: 2.0
            }),
            2
        );
        assert_eq!(
            e(Error::TruncationNotConverged {
                p_max: 60,
                what: "R_1",
                change: 1.0
            }),
            3
        );
        assert_eq!(
            e(Error::SingularSystem {
                size: 3,
                cond_estimate: 1e20
            }),
            4
        );
        let wrapped = Error::Realization {
            index: 4,
            source: Box::new(Error::SingularSystem {
                size: 1,
                cond_estimate: 0.0,
            }),
        };
        assert_eq!(e(wrapped), 4);
        assert_eq!(
            exit_code(&anyhow::Error::from(ConfigError(vec!["x".into()]))),
            2
        );
        assert_eq!(exit_code(&anyhow::anyhow!("io")), 1);
    }

    #[test]
    fn cli_parses_global_flags() {
        let cli =
            Cli::try_parse_from(["gmsurf", "ensemble", "--seed", "7", "--threads", "2"]).unwrap();
        assert_eq!(cli.command, Command::Ensemble);
        assert_eq!(cli.common.seed, Some(7));
        assert_eq!(cli.common.threads, Some(2));
    }
}
