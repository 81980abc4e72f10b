//! Feynman–Kac Monte Carlo for the moment hierarchies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use super::hierarchy::Family;
use crate::ensemble::{pairwise_sum, Moments};
use crate::error::{Error, Result};

pub const MIN_PATHS: usize = 1000;

/// Paths whose best-case remaining contribution falls below this are stopped with weight 0.
const PRUNE_LOG: f64 = -27.631_021_115_928_547; // ln 1e-12

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

/// Upper bound on ln P(the chain ever reaches 0 | N = n).
fn log_return_bound(family: Family, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    match family {
        // recurrent
        Family::R => 0.0,
        // Σ_{j≥n} 1/(j+1)² ≤ 1/n
        Family::T => -n.ln(),
        // Σ_{j≥n} 4/((j+1)(j+2))² ≤ 4/(3n³)
        Family::U => (4.0 / 3.0f64).ln() - 3.0 * n.ln(),
    }
}

fn one_path(
    family: Family,
    lambda_tilde: f64,
    l_tilde: f64,
    p: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let mut n = p;
    let mut x = 0.0;
    let mut log_w = 0.0;
    // V ≥ -2 for 𝒰, ≥ 0 otherwise
    let growth = if family == Family::U { 2.0 } else { 0.0 };
    loop {
        let v: f64 = family.potential(n, lambda_tilde);
        let up: f64 = family.up_rate(n);
        let down: f64 = family.down_rate(n);
        let q = up + down;
        let hold = if q > 0.0 {
            rng.sample::<f64, _>(Exp1) / q
        } else {
            f64::INFINITY
        };
        if x + hold >= l_tilde {
            log_w -= v * (l_tilde - x);
            return if n == 0 { log_w.exp() } else { 0.0 };
        }
        log_w -= v * hold;
        x += hold;
        n = if rng.random::<f64>() * q < up {
            n + 1
        } else {
            n - 1
        };
        if log_w + growth * (l_tilde - x) + log_return_bound(family, n) < PRUNE_LOG {
            return 0.0;
        }
    }
}

/// Estimates ℛ_p, 𝒯_p or 𝒰_p at L̃ by simulating the jump process started at p.
/// Path i uses ChaCha8 stream i of `seed`.
pub fn jump_markov_estimate(
    lambda_tilde: f64,
    l_tilde: f64,
    p: usize,
    family: Family,
    n_paths: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n_paths < MIN_PATHS {
        return Err(Error::InvalidInput(format!(
            "n_paths must be at least {MIN_PATHS}, got {n_paths}"
        )));
    }
    if !(lambda_tilde >= 0.0 && lambda_tilde.is_finite())
        || !(l_tilde >= 0.0 && l_tilde.is_finite())
    {
        return Err(Error::InvalidInput(format!(
            "Lambda~ and L~ must be finite and non-negative, got {lambda_tilde}, {l_tilde}"
        )));
    }
    let weights: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            one_path(family, lambda_tilde, l_tilde, p, &mut rng)
        })
        .collect();
    let m = Moments::from_samples(&weights);
    debug_assert_eq!(m.mean, pairwise_sum(&weights) / n_paths as f64);
    Ok(McEstimate {
        estimate: m.mean,
        std_error: m.std_error.unwrap_or(0.0),
        n_paths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn return_bounds_are_upper_bounds() {
        for n in 1..200usize {
            let t: f64 = (n..200_000).map(|j| 1.0 / ((j + 1) as f64).powi(2)).sum();
            let u: f64 = (n..200_000)
                .map(|j| 4.0 / (((j + 1) * (j + 2)) as f64).powi(2))
                .sum();
            assert!(t.ln() <= log_return_bound(Family::T, n));
            assert!(u.ln() <= log_return_bound(Family::U, n) + 1e-12);
        }
    }

    #[test]
    fn too_few_paths_rejected() {
        assert!(jump_markov_estimate(1.0, 1.0, 0, Family::T, 10, 1).is_err());
    }
}
