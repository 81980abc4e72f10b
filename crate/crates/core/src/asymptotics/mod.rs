//! Small-σ, long-patch theory: effective parameters, moment hierarchies,
//! Feynman–Kac estimates and closed-form regime formulas.

mod hierarchy;
mod jump;
mod regimes;

pub use hierarchy::{
    solve_family, solve_moment_hierarchy, Family, FamilySolution, HierarchyOptions, MomentSolution,
};
pub use jump::{jump_markov_estimate, McEstimate, MIN_PATHS};
pub use regimes::{
    lambda_zero_transmittance, regime_formulas, strong_mean_loss, strong_moment_r, strong_var_loss,
    weak_regime, RegimeFormulas, StrongRegime, WeakRegime,
};

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use crate::scalar::{Real, C};
use crate::spectrum::{evanescent_k, k_of_gamma, spectral_data, SpectralData, SurfaceParams};
use num_complex::Complex;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticParams<F = f64> {
    pub omega: F,
    pub sigma: F,
    /// Localization length in sites.
    pub l_loc: F,
    /// Radiative loss rate per site.
    pub lambda: F,
    /// Λ·L_loc; independent of σ.
    pub lambda_tilde: F,
    /// Evanescent phase term (σ-free); reported only.
    pub kappa: F,
}

impl<F: Real> AsymptoticParams<F> {
    /// Dimensionless patch length L/L_loc.
    pub fn l_tilde(&self, len: F) -> F {
        len / self.l_loc
    }
}

const GL_ORDER: usize = 32;
const REL_TOL: f64 = 1e-12;

/// Composite Gauss–Legendre on (0, π/2) with a panel-doubling check.
fn smooth_integral<F: Real>(what: &'static str, f: impl Fn(F) -> F) -> Result<F> {
    let gl = GaussLegendre::<F>::new(GL_ORDER);
    let run = |panels: usize| -> F {
        gl.composite(F::zero(), F::FRAC_PI_2(), panels)
            .into_iter()
            .map(|(x, w)| w * f(x))
            .sum()
    };
    let tol = F::lit(REL_TOL).max(F::epsilon() * F::lit(64.0));
    let mut panels = 4;
    let mut coarse = run(panels);
    for _ in 0..8 {
        panels *= 2;
        let fine = run(panels);
        if (fine - coarse).abs() <= tol * fine.abs().max(F::min_positive_value()) {
            return Ok(fine);
        }
        coarse = fine;
    }
    Err(Error::QuadratureNotConverged {
        what,
        coarse: coarse.as_f64(),
        fine: run(panels).as_f64(),
    })
}

/// ∫₀^{ω²} ρ(γ)/sin k(γ) dγ with γ = ω² sin²φ, which removes both endpoint singularities.
pub fn radiative_integral<F: Real>(sd: &SpectralData<F>) -> Result<F> {
    let w2 = sd.omega_sq();
    let four = F::lit(4.0);
    smooth_integral("radiative integral", |phi: F| {
        let (s, c) = phi.sin_cos();
        let g = w2 * s * s;
        sd.rho(g) * four * sd.omega * c / (four - g).sqrt()
    })
}

/// ∫_{ω²-4}^0 ρ(υ) g_υ dυ with υ = -(4-ω²) sin²φ.
pub fn evanescent_integral<F: Real>(sd: &SpectralData<F>) -> Result<F> {
    let c = F::lit(4.0) - sd.omega_sq();
    let two = F::lit(2.0);
    smooth_integral("evanescent integral", |phi: F| {
        let (s, co) = phi.sin_cos();
        let u = -c * s * s;
        -sd.rho(u) * two * c.sqrt() * co / (F::lit(4.0) - u).sqrt()
    })
}

/// g_γ on the propagating band from the radiating 1D Green's function.
pub fn g_propagating<F: Real>(gamma: F) -> C<F> {
    let k = k_of_gamma(gamma);
    let e = Complex::new(k.cos(), -k.sin());
    let two = F::lit(2.0);
    let num = e * (gamma - two) + F::one();
    let den = e * (gamma * gamma - F::lit(4.0) * gamma + two) + (gamma - two);
    Complex::<F>::i() * num / den
}

/// g_γ = 1/(2 sin k(γ)) for γ ∈ (0, 4).
pub fn g_propagating_closed<F: Real>(gamma: F) -> F {
    (F::lit(2.0) * k_of_gamma(gamma).sin()).recip()
}

/// g_υ on the evanescent band υ < 0, from the decaying 1D Green's function.
pub fn g_evanescent<F: Real>(upsilon: F) -> F {
    let e = evanescent_k(upsilon).exp();
    let two = F::lit(2.0);
    (F::one() + e * (upsilon - two))
        / (upsilon - two + (upsilon * upsilon - F::lit(4.0) * upsilon + two) * e)
}

pub fn effective_params<F: Real>(
    params: &SurfaceParams<F>,
    omega: F,
    sigma: F,
) -> Result<AsymptoticParams<F>> {
    if !(sigma > F::zero() && sigma.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let sd = spectral_data(params, omega)?;
    let sin_k0 = sd.k_sw.sin();
    let m = params.m_s();
    let w4 = sd.omega_sq() * sd.omega_sq();
    let lambda_tilde = F::lit(2.0) * sin_k0 / sd.rho0 * radiative_integral(&sd)?;
    let inv_l_loc =
        sigma * sigma * m * m * w4 * sd.rho0 * sd.rho0 / (F::lit(4.0) * sin_k0 * sin_k0);
    let kappa = m * m * w4 * sd.rho0 / sin_k0 * evanescent_integral(&sd)?;
    Ok(AsymptoticParams {
        omega,
        sigma,
        l_loc: inv_l_loc.recip(),
        lambda: lambda_tilde * inv_l_loc,
        lambda_tilde,
        kappa,
    })
}
