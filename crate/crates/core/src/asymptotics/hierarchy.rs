//! Truncated moment hierarchies for E|R|^{2p}, E|R|^{2p}|T|², E|R|^{2p}|T|⁴.

use crate::error::{Error, Result};
use crate::ode::{integrate_autonomous, OdeOptions};
use crate::scalar::Real;

/// Which hierarchy: ℛ_p, 𝒯_p or 𝒰_p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    R,
    T,
    U,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::R, Family::T, Family::U];

    /// Jump rate n → n+1.
    #[inline]
    pub fn up_rate<F: Real>(self, n: usize) -> F {
        let k = match self {
            Family::R => n,
            Family::T => n + 1,
            Family::U => n + 2,
        };
        F::from_usize_lossy(k * k)
    }

    /// Jump rate n → n-1.
    #[inline]
    pub fn down_rate<F: Real>(self, n: usize) -> F {
        F::from_usize_lossy(n * n)
    }

    /// Killing potential V(n).
    #[inline]
    pub fn potential<F: Real>(self, n: usize, lambda_tilde: F) -> F {
        let n = F::from_usize_lossy(n);
        let two = F::lit(2.0);
        match self {
            Family::R => two * lambda_tilde * n,
            Family::T => lambda_tilde * (two * n + F::one()),
            Family::U => lambda_tilde * (two * n + two) - two,
        }
    }

    /// The moment the family is known for: ℛ₁, 𝒯₀ or 𝒰₀.
    pub fn headline_index(self) -> usize {
        match self {
            Family::R => 1,
            Family::T | Family::U => 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::R => "R",
            Family::T => "T",
            Family::U => "U",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchyOptions<F = f64> {
    /// Truncation order; the closure is X_{p_max+1} = X_{p_max}.
    pub p_max: usize,
    /// Maximum change of the headline moment allowed when p_max is doubled.
    /// `None` skips the check.
    pub convergence_tol: Option<F>,
    pub rtol: F,
    pub atol: F,
}

impl<F: Real> Default for HierarchyOptions<F> {
    fn default() -> Self {
        Self {
            p_max: 60,
            convergence_tol: Some(F::lit(1e-8)),
            rtol: F::lit(1e-10),
            atol: F::lit(1e-13),
        }
    }
}

const MIN_P_MAX: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct FamilySolution<F = f64> {
    pub family: Family,
    pub p_max: usize,
    pub grid: Vec<F>,
    /// values[i][p] = X_p(grid[i]).
    pub values: Vec<Vec<F>>,
}

impl<F: Real> FamilySolution<F> {
    pub fn moment(&self, p: usize) -> Vec<F> {
        self.values.iter().map(|v| v[p]).collect()
    }

    pub fn headline(&self) -> Vec<F> {
        self.moment(self.family.headline_index())
    }
}

fn validate_grid<F: Real>(grid: &[F]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty L~ grid".into()));
    }
    let sorted = grid.windows(2).all(|w| w[0] <= w[1]);
    if !sorted || !(grid[0] >= F::zero()) || !grid[grid.len() - 1].is_finite() {
        return Err(Error::InvalidInput(
            "L~ grid must be finite, non-negative and non-decreasing".into(),
        ));
    }
    Ok(())
}

fn integrate<F: Real>(
    family: Family,
    lambda_tilde: F,
    grid: &[F],
    p_max: usize,
    opts: &HierarchyOptions<F>,
) -> Result<Vec<Vec<F>>> {
    let n = p_max + 1;
    let up: Vec<F> = (0..n)
        .map(|p| {
            if p == p_max {
                F::zero()
            } else {
                family.up_rate(p)
            }
        })
        .collect();
    let down: Vec<F> = (0..n).map(|p| family.down_rate(p)).collect();
    let diag: Vec<F> = (0..n)
        .map(|p| -(up[p] + down[p] + family.potential(p, lambda_tilde)))
        .collect();
    let mut y0 = vec![F::zero(); n];
    y0[0] = F::one();
    // explicit stability: keep 2 p² h < 1
    let pm = F::from_usize_lossy(p_max + 2);
    let h_max = (F::lit(2.0) * pm * pm).recip();
    let t_end = grid[grid.len() - 1];
    let steps = (t_end / h_max).to_usize().unwrap_or(usize::MAX / 4);
    let ode = OdeOptions {
        rtol: opts.rtol,
        atol: opts.atol,
        h_max,
        max_steps: 4 * steps + 10_000,
    };
    integrate_autonomous(
        |x, dx| {
            for p in 0..n {
                let mut v = diag[p] * x[p];
                if p + 1 < n {
                    v = v + up[p] * x[p + 1];
                }
                if p > 0 {
                    v = v + down[p] * x[p - 1];
                }
                dx[p] = v;
            }
        },
        &y0,
        grid,
        &ode,
    )
}

/// Solves one hierarchy from indicator initial data on the given L̃ grid.
pub fn solve_family<F: Real>(
    family: Family,
    lambda_tilde: F,
    grid: &[F],
    opts: &HierarchyOptions<F>,
) -> Result<FamilySolution<F>> {
    if opts.p_max < MIN_P_MAX {
        return Err(Error::InvalidInput(format!(
            "p_max must be at least {MIN_P_MAX}, got {}",
            opts.p_max
        )));
    }
    if !(lambda_tilde >= F::zero() && lambda_tilde.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "Lambda~ must be finite and non-negative, got {lambda_tilde}"
        )));
    }
    validate_grid(grid)?;
    let values = integrate(family, lambda_tilde, grid, opts.p_max, opts)?;
    if let Some(tol) = opts.convergence_tol {
        let fine = integrate(family, lambda_tilde, grid, 2 * opts.p_max, opts)?;
        let j = family.headline_index();
        let change = values
            .iter()
            .zip(&fine)
            .map(|(a, b)| (a[j] - b[j]).abs())
            .fold(F::zero(), F::max);
        if change > tol {
            return Err(Error::TruncationNotConverged {
                p_max: opts.p_max,
                what: match family {
                    Family::R => "R_1",
                    Family::T => "T_0",
                    Family::U => "U_0",
                },
                change: change.as_f64(),
            });
        }
    }
    Ok(FamilySolution {
        family,
        p_max: opts.p_max,
        grid: grid.to_vec(),
        values,
    })
}

/// All three hierarchies plus the loss statistics they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSolution<F = f64> {
    pub lambda_tilde: F,
    pub grid: Vec<F>,
    pub p_max: usize,
    pub r: FamilySolution<F>,
    pub t: FamilySolution<F>,
    pub u: FamilySolution<F>,
    /// E[𝒟] = 1 - ℛ₁ - 𝒯₀.
    pub mean_d: Vec<F>,
    /// Var(𝒟) = ℛ₂ + 2𝒯₁ + 𝒰₀ - (ℛ₁ + 𝒯₀)².
    pub var_d: Vec<F>,
}

impl<F: Real> MomentSolution<F> {
    pub fn mean_r2(&self) -> Vec<F> {
        self.r.moment(1)
    }

    pub fn mean_t2(&self) -> Vec<F> {
        self.t.moment(0)
    }

    /// Var(|R|²) = ℛ₂ - ℛ₁².
    pub fn var_r2(&self) -> Vec<F> {
        self.r.values.iter().map(|v| v[2] - v[1] * v[1]).collect()
    }

    /// Var(|T|²) = 𝒰₀ - 𝒯₀².
    pub fn var_t2(&self) -> Vec<F> {
        self.t
            .values
            .iter()
            .zip(&self.u.values)
            .map(|(t, u)| u[0] - t[0] * t[0])
            .collect()
    }
}

pub fn solve_moment_hierarchy<F: Real>(
    lambda_tilde: F,
    grid: &[F],
    opts: &HierarchyOptions<F>,
) -> Result<MomentSolution<F>> {
    let r = solve_family(Family::R, lambda_tilde, grid, opts)?;
    let t = solve_family(Family::T, lambda_tilde, grid, opts)?;
    let u = solve_family(Family::U, lambda_tilde, grid, opts)?;
    let mut mean_d = Vec::with_capacity(grid.len());
    let mut var_d = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let (rv, tv, uv) = (&r.values[i], &t.values[i], &u.values[i]);
        let s = rv[1] + tv[0];
        mean_d.push(F::one() - s);
        var_d.push(rv[2] + F::lit(2.0) * tv[1] + uv[0] - s * s);
    }
    Ok(MomentSolution {
        lambda_tilde,
        grid: grid.to_vec(),
        p_max: opts.p_max,
        r,
        t,
        u,
        mean_d,
        var_d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates_and_potentials() {
        assert_eq!(Family::U.up_rate::<f64>(3), 25.0);
        assert_eq!(Family::T.down_rate::<f64>(3), 9.0);
        assert_eq!(Family::U.potential(0, 0.5), -1.0);
        assert_eq!(Family::R.potential(0, 0.5), 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let o = HierarchyOptions::<f64> {
            p_max: 10,
            ..Default::default()
        };
        assert!(solve_family(Family::R, 1.0, &[1.0], &o).is_err());
        let o = HierarchyOptions::<f64>::default();
        assert!(solve_family(Family::R, -1.0, &[1.0], &o).is_err());
        assert!(solve_family(Family::R, 1.0, &[2.0, 1.0], &o).is_err());
        assert!(solve_family(Family::R, 1.0, &[], &o).is_err());
    }
}
