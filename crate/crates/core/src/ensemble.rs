//! Random perturbation ensembles: reproducible sampling, bulk solves and statistics.
//!
//! Monte Carlo plumbing is f64 only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use crate::scattering::{PerturbationPatch, ScatteringSolver, SolverSettings};
use crate::spectrum::SurfaceParams;

/// Recorded in output metadata.
pub const RNG_FAMILY: &str =
    "ChaCha8Rng (rand_chacha 0.9): seed_from_u64(master_seed), stream = realization index";

/// Margin kept between the largest possible |μ| and 1.
const SUPPORT_MARGIN: f64 = 1e-3;
const GAUSS_CUT: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Distribution {
    /// Uniform on [-√3σ, √3σ].
    #[default]
    Uniform,
    /// Standard normal truncated at ±a (a ≤ 4), rescaled to variance σ².
    TruncatedGaussian,
}

impl Distribution {
    pub fn name(&self) -> &'static str {
        match self {
            Distribution::Uniform => "uniform",
            Distribution::TruncatedGaussian => "truncated-gaussian",
        }
    }
}

impl std::str::FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Distribution::Uniform),
            "truncated-gaussian" | "truncated_gaussian" | "gaussian" => {
                Ok(Distribution::TruncatedGaussian)
            }
            other => Err(Error::InvalidInput(format!(
                "unknown distribution '{other}' (expected 'uniform' or 'truncated-gaussian')"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub n_realizations: usize,
    pub sigma: f64,
    /// Patch length L.
    pub len: usize,
    pub distribution: Distribution,
    pub master_seed: u64,
    pub omega_grid: Vec<f64>,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_realizations == 0 {
            return Err(Error::InvalidInput(
                "n_realizations must be positive".into(),
            ));
        }
        if self.len == 0 {
            return Err(Error::InvalidInput(
                "patch length L must be positive".into(),
            ));
        }
        if self.omega_grid.is_empty() {
            return Err(Error::InvalidInput("omega grid is empty".into()));
        }
        Sampler::new(self.distribution, self.sigma).map(|_| ())
    }
}

/// Per-distribution sampling constants.
#[derive(Debug, Clone, Copy)]
struct Sampler {
    dist: Distribution,
    sigma: f64,
    /// Truncation point (Gaussian) in units of the unscaled normal.
    cut: f64,
    /// σ/√v(cut).
    scale: f64,
}

/// Variance of the standard normal truncated to [-a, a].
fn truncated_variance(a: f64) -> f64 {
    let gl = GaussLegendre::<f64>::new(64);
    let den = gl.integrate(0.0, a, |x| (-0.5 * x * x).exp());
    let num = gl.integrate(0.0, a, |x| x * x * (-0.5 * x * x).exp());
    num / den
}

impl Sampler {
    fn new(dist: Distribution, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        match dist {
            Distribution::Uniform => {
                if 3f64.sqrt() * sigma >= 1.0 {
                    return Err(Error::InvalidInput(format!(
                        "sigma = {sigma}: uniform support sqrt(3)*sigma must stay below 1 so that 1 + mu > 0"
                    )));
                }
                Ok(Self {
                    dist,
                    sigma,
                    cut: 3f64.sqrt(),
                    scale: sigma,
                })
            }
            Distribution::TruncatedGaussian => {
                let limit = 1.0 - SUPPORT_MARGIN;
                let reach = |a: f64| sigma * a / truncated_variance(a).sqrt();
                // reach(a) increases from √3σ (a → 0)
                if 3f64.sqrt() * sigma >= limit {
                    return Err(Error::InvalidInput(format!(
                        "sigma = {sigma}: no symmetric law with this variance fits inside 1 + mu > 0"
                    )));
                }
                let cut = if reach(GAUSS_CUT) <= limit {
                    GAUSS_CUT
                } else {
                    let (mut lo, mut hi) = (1e-6, GAUSS_CUT);
                    for _ in 0..100 {
                        let mid = 0.5 * (lo + hi);
                        if reach(mid) <= limit {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    lo
                };
                Ok(Self {
                    dist,
                    sigma,
                    cut,
                    scale: sigma / truncated_variance(cut).sqrt(),
                })
            }
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self.dist {
            Distribution::Uniform => {
                let h = self.cut * self.sigma;
                rng.random_range(-h..=h)
            }
            Distribution::TruncatedGaussian => loop {
                let x: f64 = rng.sample(StandardNormal);
                if x.abs() <= self.cut {
                    return x * self.scale;
                }
            },
        }
    }

    /// Largest |μ| that can be drawn.
    fn support(&self) -> f64 {
        self.cut * self.scale
    }
}

/// Largest |μ| the distribution can produce for this σ.
pub fn support_bound(dist: Distribution, sigma: f64) -> Result<f64> {
    Ok(Sampler::new(dist, sigma)?.support())
}

/// Deterministic patch for realization `index`.
pub fn draw_patch(spec: &EnsembleSpec, index: usize) -> Result<PerturbationPatch> {
    if index >= spec.n_realizations {
        return Err(Error::InvalidInput(format!(
            "realization index {index} out of range (n_realizations = {})",
            spec.n_realizations
        )));
    }
    let sampler = Sampler::new(spec.distribution, spec.sigma)?;
    draw_with(&sampler, spec, index)
}

fn draw_with(sampler: &Sampler, spec: &EnsembleSpec, index: usize) -> Result<PerturbationPatch> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.master_seed);
    rng.set_stream(index as u64);
    PerturbationPatch::new((0..spec.len).map(|_| sampler.sample(&mut rng)).collect())
}

/// Order-fixed pairwise summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().fold(0.0, |a, b| a + b);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample statistics of one quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    /// Unbiased variance; `None` for a single sample.
    pub variance: Option<f64>,
    /// Standard error of the mean.
    pub std_error: Option<f64>,
    /// Delta-method standard error of the sample standard deviation.
    pub std_dev_error: Option<f64>,
}

impl Moments {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let nf = n as f64;
        let mean = pairwise_sum(xs) / nf;
        if n < 2 {
            return Self {
                mean,
                variance: None,
                std_error: None,
                std_dev_error: None,
            };
        }
        let dev2: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&dev2) / (nf - 1.0);
        let m2 = pairwise_sum(&dev2) / nf;
        let dev4: Vec<f64> = dev2.iter().map(|d| d * d).collect();
        let m4 = pairwise_sum(&dev4) / nf;
        let sd = var.sqrt();
        let sd_err = if sd > 0.0 {
            ((m4 - m2 * m2).max(0.0) / nf).sqrt() / (2.0 * sd)
        } else {
            0.0
        };
        Self {
            mean,
            variance: Some(var),
            std_error: Some((var / nf).sqrt()),
            std_dev_error: Some(sd_err),
        }
    }

    pub fn std_dev(&self) -> Option<f64> {
        self.variance.map(f64::sqrt)
    }
}

/// One solve of the ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizationRecord {
    pub omega: f64,
    pub index: usize,
    pub mu_hash: u64,
    pub r2: f64,
    pub t2: f64,
    pub d: f64,
}

/// Statistics at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaStats {
    pub omega: f64,
    pub n: usize,
    pub r2: Moments,
    pub t2: Moments,
    pub d: Moments,
    /// |R|² + |T|².
    pub s: Moments,
    /// Number of solves whose condition estimate exceeded the flag threshold.
    pub flagged: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub per_omega: Vec<OmegaStats>,
    /// Present when requested.
    pub realizations: Option<Vec<RealizationRecord>>,
}

pub const STATS_CSV_HEADER: &str =
    "omega,n,mean_r2,var_r2,se_r2,mean_t2,var_t2,se_t2,mean_d,var_d,se_d,mean_s,var_s,se_s,flagged";
pub const REALIZATION_CSV_HEADER: &str = "omega,index,mu_hash,r2,t2,d";

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_else(|| "NaN".into())
}

impl OmegaStats {
    pub fn csv_row(&self) -> String {
        let mut cols = vec![fmt(self.omega), self.n.to_string()];
        for m in [&self.r2, &self.t2, &self.d, &self.s] {
            cols.push(fmt(m.mean));
            cols.push(fmt_opt(m.variance));
            cols.push(fmt_opt(m.std_error));
        }
        cols.push(self.flagged.to_string());
        cols.join(",")
    }
}

impl RealizationRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:016x},{},{},{}",
            fmt(self.omega),
            self.index,
            self.mu_hash,
            fmt(self.r2),
            fmt(self.t2),
            fmt(self.d)
        )
    }
}

/// Solves every realization at every grid frequency. The same patches are used at all
/// frequencies, and results do not depend on the thread schedule.
pub fn run_ensemble(
    params: &SurfaceParams,
    spec: &EnsembleSpec,
    settings: SolverSettings,
    keep_realizations: bool,
) -> Result<EnsembleStats> {
    spec.validate()?;
    let sampler = Sampler::new(spec.distribution, spec.sigma)?;
    let patches: Vec<PerturbationPatch> = (0..spec.n_realizations)
        .into_par_iter()
        .map(|i| draw_with(&sampler, spec, i))
        .collect::<Result<_>>()?;
    let mut per_omega = Vec::with_capacity(spec.omega_grid.len());
    let mut records = keep_realizations.then(Vec::new);
    for &omega in &spec.omega_grid {
        let solver = ScatteringSolver::new(params, omega, settings, spec.len)?;
        let results: Vec<(f64, f64, f64, bool)> = patches
            .par_iter()
            .enumerate()
            .map(|(i, patch)| {
                solver
                    .solve(patch)
                    .map(|r| (r.r.norm_sqr(), r.t.norm_sqr(), r.d, r.flagged))
                    .map_err(|e| Error::Realization {
                        index: i,
                        source: Box::new(e),
                    })
            })
            .collect::<Result<_>>()?;
        let r2: Vec<f64> = results.iter().map(|v| v.0).collect();
        let t2: Vec<f64> = results.iter().map(|v| v.1).collect();
        let d: Vec<f64> = results.iter().map(|v| v.2).collect();
        let s: Vec<f64> = results.iter().map(|v| v.0 + v.1).collect();
        if let Some(rec) = records.as_mut() {
            for (i, v) in results.iter().enumerate() {
                rec.push(RealizationRecord {
                    omega,
                    index: i,
                    mu_hash: patches[i].hash(),
                    r2: v.0,
                    t2: v.1,
                    d: v.2,
                });
            }
        }
        per_omega.push(OmegaStats {
            omega,
            n: results.len(),
            r2: Moments::from_samples(&r2),
            t2: Moments::from_samples(&t2),
            d: Moments::from_samples(&d),
            s: Moments::from_samples(&s),
            flagged: results.iter().filter(|v| v.3).count(),
        });
    }
    Ok(EnsembleStats {
        per_omega,
        realizations: records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncated_variance_limits() {
        assert!((truncated_variance(1e-3) - 1e-6 / 3.0).abs() < 1e-12);
        assert!((truncated_variance(8.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn single_sample_has_no_variance() {
        let m = Moments::from_samples(&[0.3]);
        assert_eq!(m.mean, 0.3);
        assert!(m.variance.is_none() && m.std_error.is_none());
    }

    #[test]
    fn moments_of_small_sample() {
        let m = Moments::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.variance.unwrap() - 5.0 / 3.0).abs() < 1e-15);
        assert!((m.std_error.unwrap() - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sigma_validation() {
        assert!(Sampler::new(Distribution::Uniform, 0.6).is_err());
        assert!(Sampler::new(Distribution::Uniform, 0.0).is_err());
        assert!(Sampler::new(Distribution::TruncatedGaussian, 0.577).is_err());
        let s = Sampler::new(Distribution::TruncatedGaussian, 0.4).unwrap();
        assert!(s.cut < GAUSS_CUT && s.support() <= 1.0 - SUPPORT_MARGIN + 1e-12);
        let s = Sampler::new(Distribution::TruncatedGaussian, 0.05).unwrap();
        assert_eq!(s.cut, GAUSS_CUT);
    }

    #[test]
    fn distribution_names_round_trip() {
        for d in [Distribution::Uniform, Distribution::TruncatedGaussian] {
            assert_eq!(d.name().parse::<Distribution>().unwrap(), d);
        }
        assert!("cauchy".parse::<Distribution>().is_err());
    }
}
