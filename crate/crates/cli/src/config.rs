//! Run configuration: TOML file, environment and flag overrides, validation.

use std::fmt;
use std::path::{Path, PathBuf};

use gmsurf::ensemble::Distribution;
use gmsurf::greens::GreensOptions;
use gmsurf::scattering::{Normalization, SolverSettings};
use gmsurf::spectrum::{omega_max, SurfaceParams};
use serde::{Deserialize, Serialize};

/// Invalid configuration; every problem is reported with its key path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub Vec<String>);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration:")?;
        for e in &self.0 {
            write!(f, "\n  {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceConfig {
    pub m_s: f64,
    pub alpha_s: f64,
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        Self {
            m_s: 2.0,
            alpha_s: 1.3,
        }
    }
}

/// Frequencies as fractions of ω_max: either an explicit list or `count` evenly spaced points
/// from `start` to `stop` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OmegaConfig {
    pub fractions: Option<Vec<f64>>,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Default for OmegaConfig {
    fn default() -> Self {
        Self {
            fractions: None,
            start: 0.1,
            stop: 0.9,
            count: 15,
        }
    }
}

impl OmegaConfig {
    pub fn fraction_grid(&self) -> Vec<f64> {
        if let Some(f) = &self.fractions {
            return f.clone();
        }
        match self.count {
            0 => vec![],
            1 => vec![self.start],
            n => (0..n)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    /// 0 selects the outgoing limit; > 0 a trapezoid rule at that absorption.
    pub epsilon: f64,
    pub nodes: usize,
    pub guard: f64,
    pub p_max: usize,
    /// Doubling tolerance for the hierarchy truncation; 0 disables the check.
    pub hierarchy_tol: f64,
    /// Panel-doubling tolerance for the outgoing Green's function; 0 disables the check.
    pub greens_tol: f64,
    pub audit: bool,
    /// "mode" (â = √ρ₀) or "unit" (â = 1).
    pub normalization: String,
    pub cond_flag: f64,
    /// L̃ above which the strong-regime closed form replaces the hierarchy in sweeps.
    pub strong_cutoff: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.0,
            nodes: 1 << 16,
            guard: 1e-3,
            p_max: 60,
            hierarchy_tol: 1e-8,
            greens_tol: 1e-10,
            audit: true,
            normalization: "mode".into(),
            cond_flag: 1e12,
            strong_cutoff: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n_realizations: usize,
    pub sigma: f64,
    #[serde(rename = "L")]
    pub len: usize,
    pub distribution: String,
    pub seed: u64,
    /// Also write one row per realization.
    pub dump: bool,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_realizations: 200,
            sigma: 0.05,
            len: 40,
            distribution: "uniform".into(),
            seed: 1,
            dump: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ScatterConfig {
    /// Explicit perturbation; otherwise realization `index` of the ensemble section is used.
    pub mu: Option<Vec<f64>>,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionConfig {
    pub n_k: usize,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        Self { n_k: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct AsymptoticsConfig {
    /// Feynman–Kac paths per moment; 0 skips the Monte Carlo columns.
    pub fk_paths: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub m_s: Vec<f64>,
    pub alpha_s: Vec<f64>,
    pub fractions: Vec<f64>,
    pub lengths: Vec<f64>,
    /// Also run the ensemble-vs-hierarchy comparison on the main ω grid.
    pub compare: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            m_s: vec![1.0, 2.0, 3.0, 4.0],
            alpha_s: vec![0.25, 0.5, 1.0, 1.5, 2.0, 3.0],
            fractions: vec![0.5, 0.9],
            lengths: vec![40.0, 5000.0],
            compare: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub surface: SurfaceConfig,
    pub omega: OmegaConfig,
    pub numerics: NumericsConfig,
    pub ensemble: EnsembleConfig,
    pub scatter: ScatterConfig,
    pub dispersion: DispersionConfig,
    pub asymptotics: AsymptoticsConfig,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

/// Values given on the command line or in the environment; `None` keeps the file value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub epsilon: Option<f64>,
    pub nodes: Option<usize>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(vec![format!("config: {}", e.message())]))
    }

    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    ConfigError(vec![format!("config: cannot read {}: {e}", p.display())])
                })?;
                Ok(Self::from_toml(&text)?)
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.out {
            self.output.dir = v.clone();
        }
        if let Some(v) = o.seed {
            self.ensemble.seed = v;
        }
        if let Some(v) = o.epsilon {
            self.numerics.epsilon = v;
        }
        if let Some(v) = o.nodes {
            self.numerics.nodes = v;
        }
    }

    pub fn params(&self) -> gmsurf::Result<SurfaceParams> {
        SurfaceParams::new(self.surface.m_s, self.surface.alpha_s)
    }

    pub fn distribution(&self) -> Distribution {
        self.ensemble.distribution.parse().unwrap_or_default()
    }

    pub fn solver_settings(&self) -> SolverSettings {
        let n = &self.numerics;
        SolverSettings {
            guard: n.guard,
            epsilon: n.epsilon,
            n_nodes: n.nodes,
            greens: GreensOptions {
                verify_tol: (n.greens_tol > 0.0).then_some(n.greens_tol),
                ..Default::default()
            },
            normalization: if n.normalization == "unit" {
                Normalization::Unit
            } else {
                Normalization::ModeNormalized
            },
            audit: n.audit,
            cond_flag: n.cond_flag,
        }
    }

    pub fn hierarchy_options(&self) -> gmsurf::asymptotics::HierarchyOptions {
        let n = &self.numerics;
        gmsurf::asymptotics::HierarchyOptions {
            p_max: n.p_max,
            convergence_tol: (n.hierarchy_tol > 0.0).then_some(n.hierarchy_tol),
            ..Default::default()
        }
    }

    /// Absolute frequencies of the main grid.
    pub fn omega_grid(&self) -> gmsurf::Result<Vec<f64>> {
        let wmax = omega_max(&self.params()?)?;
        Ok(self
            .omega
            .fraction_grid()
            .into_iter()
            .map(|f| f * wmax)
            .collect())
    }

    /// Checks every field that does not need the physics; the surface band is checked by the commands.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut e = Vec::new();
        let mut check = |ok: bool, key: &str, msg: String| {
            if !ok {
                e.push(format!("{key}: {msg}"));
            }
        };
        let pos = |x: f64| x > 0.0 && x.is_finite();
        let s = &self.surface;
        check(
            pos(s.m_s),
            "surface.m_s",
            format!("must be positive, got {}", s.m_s),
        );
        check(
            pos(s.alpha_s),
            "surface.alpha_s",
            format!("must be positive, got {}", s.alpha_s),
        );

        let o = &self.omega;
        let grid = o.fraction_grid();
        let grid_key = if o.fractions.is_some() {
            "omega.fractions"
        } else {
            "omega.count"
        };
        check(!grid.is_empty(), grid_key, "frequency grid is empty".into());
        if o.fractions.is_none() {
            check(
                o.start > 0.0 && o.start < 1.0,
                "omega.start",
                format!("must lie in (0, 1), got {}", o.start),
            );
            check(
                o.stop > 0.0 && o.stop < 1.0,
                "omega.stop",
                format!("must lie in (0, 1), got {}", o.stop),
            );
        }
        for (i, f) in grid.iter().enumerate() {
            check(
                *f > 0.0 && *f < 1.0,
                &format!("omega.fractions[{i}]"),
                format!("must lie in (0, 1), got {f}"),
            );
        }

        let n = &self.numerics;
        check(
            n.epsilon >= 0.0 && n.epsilon.is_finite(),
            "numerics.epsilon",
            format!("must be >= 0, got {}", n.epsilon),
        );
        check(
            n.epsilon == 0.0 || (n.nodes >= 256 && n.nodes.is_power_of_two()),
            "numerics.nodes",
            format!("must be a power of two >= 256, got {}", n.nodes),
        );
        check(
            n.guard >= 0.0 && n.guard < 1.0,
            "numerics.guard",
            format!("must lie in [0, 1), got {}", n.guard),
        );
        check(
            n.p_max >= 20,
            "numerics.p_max",
            format!("must be at least 20, got {}", n.p_max),
        );
        check(
            n.hierarchy_tol >= 0.0,
            "numerics.hierarchy_tol",
            format!("must be >= 0, got {}", n.hierarchy_tol),
        );
        check(
            n.greens_tol >= 0.0,
            "numerics.greens_tol",
            format!("must be >= 0, got {}", n.greens_tol),
        );
        check(
            n.normalization == "mode" || n.normalization == "unit",
            "numerics.normalization",
            format!("must be 'mode' or 'unit', got '{}'", n.normalization),
        );
        check(
            pos(n.cond_flag),
            "numerics.cond_flag",
            format!("must be positive, got {}", n.cond_flag),
        );
        check(
            pos(n.strong_cutoff),
            "numerics.strong_cutoff",
            format!("must be positive, got {}", n.strong_cutoff),
        );

        let en = &self.ensemble;
        check(
            en.n_realizations > 0,
            "ensemble.n_realizations",
            "must be positive".into(),
        );
        check(en.len > 0, "ensemble.L", "must be positive".into());
        match en.distribution.parse::<Distribution>() {
            Err(err) => check(false, "ensemble.distribution", err.to_string()),
            Ok(d) => {
                if let Err(err) = gmsurf::ensemble::support_bound(d, en.sigma) {
                    check(false, "ensemble.sigma", err.to_string());
                }
            }
        }

        if let Some(mu) = &self.scatter.mu {
            check(!mu.is_empty(), "scatter.mu", "must not be empty".into());
            for (i, m) in mu.iter().enumerate() {
                check(
                    m.is_finite() && *m > -1.0,
                    &format!("scatter.mu[{i}]"),
                    format!("must be finite and > -1, got {m}"),
                );
            }
        } else {
            check(
                self.scatter.index < en.n_realizations,
                "scatter.index",
                format!(
                    "must be below ensemble.n_realizations ({})",
                    en.n_realizations
                ),
            );
        }

        check(
            self.dispersion.n_k >= 2,
            "dispersion.n_k",
            format!("must be at least 2, got {}", self.dispersion.n_k),
        );
        check(
            self.asymptotics.fk_paths == 0
                || self.asymptotics.fk_paths >= gmsurf::asymptotics::MIN_PATHS,
            "asymptotics.fk_paths",
            format!(
                "must be 0 or at least {}, got {}",
                gmsurf::asymptotics::MIN_PATHS,
                self.asymptotics.fk_paths
            ),
        );

        let sw = &self.sweep;
        check(!sw.m_s.is_empty(), "sweep.m_s", "must not be empty".into());
        check(
            !sw.alpha_s.is_empty(),
            "sweep.alpha_s",
            "must not be empty".into(),
        );
        for (i, v) in sw.m_s.iter().enumerate() {
            check(
                pos(*v),
                &format!("sweep.m_s[{i}]"),
                format!("must be positive, got {v}"),
            );
        }
        for (i, v) in sw.alpha_s.iter().enumerate() {
            check(
                pos(*v),
                &format!("sweep.alpha_s[{i}]"),
                format!("must be positive, got {v}"),
            );
        }
        for (i, f) in sw.fractions.iter().enumerate() {
            check(
                *f > 0.0 && *f < 1.0,
                &format!("sweep.fractions[{i}]"),
                format!("must lie in (0, 1), got {f}"),
            );
        }
        for (i, l) in sw.lengths.iter().enumerate() {
            check(
                pos(*l),
                &format!("sweep.lengths[{i}]"),
                format!("must be positive, got {l}"),
            );
        }
        if e.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(e))
        }
    }

    /// Flattened `key=value` lines in a fixed order.
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let value = toml::Value::try_from(self).expect("config serializes");
        let mut out = Vec::new();
        flatten("", &value, &mut out);
        out
    }
}

fn flatten(prefix: &str, v: &toml::Value, out: &mut Vec<(String, String)>) {
    match v {
        toml::Value::Table(t) => {
            for (k, child) in t {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, child, out);
            }
        }
        toml::Value::Float(f) => out.push((prefix.to_string(), format!("{f:?}"))),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn errors_carry_key_paths() {
        let mut c = RunConfig::default();
        c.ensemble.sigma = 0.7;
        c.numerics.p_max = 5;
        c.omega.fractions = Some(vec![0.5, 1.2]);
        let err = c.validate().unwrap_err();
        let text = err.to_string();
        assert!(text.contains("ensemble.sigma"));
        assert!(text.contains("numerics.p_max"));
        assert!(text.contains("omega.fractions[1]"));
        assert_eq!(err.0.len(), 3);
    }

    #[test]
    fn empty_grid_is_rejected() {
        let mut c = RunConfig::default();
        c.omega.fractions = Some(vec![]);
        assert!(c
            .validate()
            .unwrap_err()
            .to_string()
            .contains("omega.fractions: frequency grid is empty"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("[surface]\nm_s = 2.0\nbogus = 1\n").is_err());
    }

    #[test]
    fn toml_round_trip_and_overrides() {
        let c = RunConfig::from_toml("[ensemble]\nL = 12\nseed = 5\n[omega]\nfractions = [0.25]\n")
            .unwrap();
        assert_eq!(c.ensemble.len, 12);
        assert_eq!(c.omega.fraction_grid(), vec![0.25]);
        let mut d = c.clone();
        d.apply(&Overrides {
            seed: Some(9),
            ..Default::default()
        });
        assert_eq!(d.ensemble.seed, 9);
        assert_eq!(d.ensemble.len, 12);
        let kv = c.to_key_values();
        assert!(kv.iter().any(|(k, v)| k == "ensemble.L" && v == "12"));
    }

    #[test]
    fn linspace_grid() {
        let g = OmegaConfig::default().fraction_grid();
        assert_eq!(g.len(), 15);
        assert_eq!(g[0], 0.1);
        assert!((g[14] - 0.9).abs() < 1e-15);
    }
}
