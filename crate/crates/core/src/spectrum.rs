//! Surface-wave dispersion and the transverse eigenbasis of the unperturbed half-plane.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use crate::scalar::{Real, C};

/// Default relative guard below the band edge: ω ≤ (1-δ)·ω_max.
pub const DEFAULT_GUARD: f64 = 1e-3;
/// Residual tolerance for the coupled dispersion equations.
pub const ROOT_TOL: f64 = 1e-12;

/// Residual tolerance, loosened to the working precision for narrow types.
fn root_tol<F: Real>() -> F {
    F::lit(ROOT_TOL).max(F::epsilon() * F::lit(64.0))
}

/// Boundary material constants: surface mass ratio and surface bond stiffness ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceParams<F = f64> {
    m_s: F,
    alpha_s: F,
    has_band: bool,
}

impl<F: Real> SurfaceParams<F> {
    pub fn new(m_s: F, alpha_s: F) -> Result<Self> {
        if !(m_s > F::zero() && m_s.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "m_s must be positive and finite, got {m_s}"
            )));
        }
        if !(alpha_s > F::zero() && alpha_s.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "alpha_s must be positive and finite, got {alpha_s}"
            )));
        }
        Ok(Self {
            m_s,
            alpha_s,
            has_band: alpha_s < m_s,
        })
    }

    pub fn m_s(&self) -> F {
        self.m_s
    }

    pub fn alpha_s(&self) -> F {
        self.alpha_s
    }

    pub fn has_surface_band(&self) -> bool {
        self.has_band
    }

    pub fn require_band(&self) -> Result<()> {
        if self.has_band {
            Ok(())
        } else {
            Err(Error::NoSurfaceBand {
                m_s: self.m_s.as_f64(),
                alpha_s: self.alpha_s.as_f64(),
            })
        }
    }

    /// Rejects ω outside (0, (1-guard)·ω_max].
    pub fn check_frequency(&self, omega: F, guard: F) -> Result<F> {
        let wmax = omega_max(self)?;
        let limit = wmax * (F::one() - guard);
        if omega > F::zero() && omega <= limit && omega.is_finite() {
            Ok(wmax)
        } else {
            Err(Error::FrequencyOutOfBand {
                omega: omega.as_f64(),
                limit: limit.as_f64(),
                omega_max: wmax.as_f64(),
            })
        }
    }
}

/// Upper edge of the surface-wave band.
pub fn omega_max<F: Real>(params: &SurfaceParams<F>) -> Result<F> {
    params.require_band()?;
    let (m, a) = (params.m_s, params.alpha_s);
    let lit = F::lit;
    let a_s = m * (m - F::one());
    let b_s = -lit(8.0) * a * m + lit(4.0) * a + lit(4.0) * m + F::one();
    let c_s = lit(16.0) * a * a - lit(16.0) * a - lit(4.0);
    let disc = b_s * b_s - lit(4.0) * a_s * c_s;
    if !(disc > F::zero()) {
        return Err(Error::NonPositiveDiscriminant {
            m_s: m.as_f64(),
            alpha_s: a.as_f64(),
            discriminant: disc.as_f64(),
        });
    }
    let sq = disc.sqrt();
    // larger root of a w^2 + b w + c = 0 without cancellation
    let w2 = if b_s > F::zero() {
        lit(2.0) * c_s / (-b_s - sq)
    } else {
        (-b_s + sq) / (lit(2.0) * a_s)
    };
    Ok(w2.sqrt())
}

/// A point on the surface-wave branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionPoint<F = f64> {
    pub k_sw: F,
    pub omega: F,
    pub eta: F,
    pub v_group: F,
}

/// Residuals of ω² = 4sin²(k/2)+2-2cosh η and m_sω² = 4α_s sin²(k/2)+1-e^{-η}.
pub fn dispersion_residuals<F: Real>(params: &SurfaceParams<F>, k: F, omega: F, eta: F) -> (F, F) {
    let four = F::lit(4.0);
    let s = (k * F::lit(0.5)).sin().powi(2);
    let w2 = omega * omega;
    let r1 = w2 - four * s - F::lit(2.0) + F::lit(2.0) * eta.cosh();
    let r2 = params.m_s * w2 - four * params.alpha_s * s - F::one() + (-eta).exp();
    (r1, r2)
}

/// ω and η from |k| via the quadratic m t² - B t + (m-1) = 0 in t = e^η.
fn omega_eta_closed_form<F: Real>(params: &SurfaceParams<F>, k: F) -> (F, F) {
    let (m, a) = (params.m_s, params.alpha_s);
    let lit = F::lit;
    let s = (k.abs() * lit(0.5)).sin().powi(2);
    let b = m * (lit(4.0) * s + lit(2.0)) - lit(4.0) * a * s - F::one();
    let disc = (b * b - lit(4.0) * m * (m - F::one())).max(F::zero());
    let t = (b + disc.sqrt()) / (lit(2.0) * m);
    let eta = t.ln().max(F::zero());
    let w2 = (lit(4.0) * s + lit(2.0) - t - t.recip()).max(F::zero());
    (w2.sqrt(), eta)
}

pub fn group_velocity<F: Real>(params: &SurfaceParams<F>, k: F, omega: F, eta: F) -> F {
    let inv = ((F::lit(2.0) * eta).exp_m1()).recip();
    k.sin() / omega * (params.alpha_s + inv) / (params.m_s + inv)
}

/// Solves the coupled dispersion relations for a given surface wavenumber.
pub fn solve_dispersion<F: Real>(params: &SurfaceParams<F>, k_sw: F) -> Result<DispersionPoint<F>> {
    params.require_band()?;
    let pi = F::PI();
    if !(k_sw.abs() < pi && k_sw != F::zero()) {
        return Err(Error::DomainError {
            what: "surface wavenumber",
            value: k_sw.as_f64(),
        });
    }
    let k = k_sw.abs();
    let (mut omega, mut eta) = omega_eta_closed_form(params, k);
    // Newton polish on the original 2x2 system
    for _ in 0..3 {
        let (r1, r2) = dispersion_residuals(params, k, omega, eta);
        let j11 = F::lit(2.0) * omega;
        let j12 = F::lit(2.0) * eta.sinh();
        let j21 = F::lit(2.0) * params.m_s * omega;
        let j22 = -(-eta).exp();
        let det = j11 * j22 - j12 * j21;
        if det == F::zero() {
            break;
        }
        let dw = (r1 * j22 - r2 * j12) / det;
        let de = (j11 * r2 - j21 * r1) / det;
        omega = omega - dw;
        eta = eta - de;
    }
    let (r1, r2) = dispersion_residuals(params, k, omega, eta);
    let tol = root_tol::<F>();
    if !(r1.abs() < tol && r2.abs() < tol && eta > F::zero() && omega > F::zero()) {
        return Err(Error::RootFindFailure {
            what: "surface dispersion",
            lo: 0.0,
            hi: pi.as_f64(),
            residual: r1.abs().max(r2.abs()).as_f64(),
        });
    }
    let v = group_velocity(params, k, omega, eta);
    Ok(DispersionPoint {
        k_sw,
        omega,
        eta,
        v_group: if k_sw < F::zero() { -v } else { v },
    })
}

/// Right-going branch (k ∈ (0,π)) at a given frequency, by bisection on ω(k) then Newton.
pub fn solve_inverse_dispersion<F: Real>(
    params: &SurfaceParams<F>,
    omega: F,
) -> Result<DispersionPoint<F>> {
    params.check_frequency(omega, F::zero())?;
    let wmax = omega_max(params)?;
    if omega >= wmax {
        return Err(Error::FrequencyOutOfBand {
            omega: omega.as_f64(),
            limit: wmax.as_f64(),
            omega_max: wmax.as_f64(),
        });
    }
    let (mut lo, mut hi) = (F::zero(), F::PI());
    for _ in 0..200 {
        let mid = (lo + hi) * F::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        let (w, _) = omega_eta_closed_form(params, mid);
        if w < omega {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < F::epsilon() * F::lit(4.0) {
            break;
        }
    }
    let mut k = (lo + hi) * F::lit(0.5);
    for _ in 0..3 {
        let (w, eta) = omega_eta_closed_form(params, k);
        let v = group_velocity(params, k, w, eta);
        if v <= F::zero() {
            break;
        }
        let next = k - (w - omega) / v;
        if next > F::zero() && next < F::PI() {
            k = next;
        }
    }
    let point = solve_dispersion(params, k)?;
    if (point.omega - omega).abs() > F::lit(1e-12) * omega.max(F::one()) {
        return Err(Error::RootFindFailure {
            what: "inverse dispersion",
            lo: lo.as_f64(),
            hi: hi.as_f64(),
            residual: (point.omega - omega).abs().as_f64(),
        });
    }
    Ok(point)
}

/// Spectral data of the transverse operator at a fixed frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralData<F = f64> {
    pub params: SurfaceParams<F>,
    pub omega: F,
    pub omega_max: F,
    /// Discrete eigenvalue, > ω².
    pub gamma0: F,
    /// Decay exponent of the discrete eigenfunction (equals η(k_sw)).
    pub beta0: F,
    /// ρ(γ₀) = 1/(α_s + (e^{2β₀}-1)^{-1}).
    pub rho0: F,
    /// k(γ₀), the right-going surface wavenumber.
    pub k_sw: F,
}

pub fn spectral_data<F: Real>(params: &SurfaceParams<F>, omega: F) -> Result<SpectralData<F>> {
    spectral_data_guarded(params, omega, F::lit(DEFAULT_GUARD))
}

/// As [`spectral_data`] with an explicit band-edge guard δ.
pub fn spectral_data_guarded<F: Real>(
    params: &SurfaceParams<F>,
    omega: F,
    guard: F,
) -> Result<SpectralData<F>> {
    let wmax = params.check_frequency(omega, guard)?;
    let (m, a) = (params.m_s, params.alpha_s);
    let lit = F::lit;
    let w2 = omega * omega;
    // eliminate γ₀ = ω²-2+2cosh β₀: α t² + (α(ω²-2)+1-mω²) t + (α-1) = 0, t = e^{β₀}
    let b = a * (w2 - lit(2.0)) + F::one() - m * w2;
    let disc = b * b - lit(4.0) * a * (a - F::one());
    if disc < F::zero() {
        return Err(Error::RootFindFailure {
            what: "discrete eigenvalue",
            lo: w2.as_f64(),
            hi: f64::INFINITY,
            residual: disc.as_f64(),
        });
    }
    let sq = disc.sqrt();
    let t = if b < F::zero() {
        (-b + sq) / (lit(2.0) * a)
    } else {
        lit(2.0) * (a - F::one()) / (-b - sq)
    };
    let mut beta0 = t.ln();
    let mut gamma0 = w2 - lit(2.0) + lit(2.0) * beta0.cosh();
    // Newton polish on both relations
    for _ in 0..2 {
        let r1 = w2 - lit(2.0) - gamma0 + lit(2.0) * beta0.cosh();
        let r2 = m * w2 - a * gamma0 - F::one() + (-beta0).exp();
        // d/dγ, d/dβ
        let (j11, j12) = (-F::one(), lit(2.0) * beta0.sinh());
        let (j21, j22) = (-a, -(-beta0).exp());
        let det = j11 * j22 - j12 * j21;
        if det == F::zero() {
            break;
        }
        gamma0 = gamma0 - (r1 * j22 - r2 * j12) / det;
        beta0 = beta0 - (j11 * r2 - j21 * r1) / det;
    }
    let r1 = w2 - lit(2.0) - gamma0 + lit(2.0) * beta0.cosh();
    let r2 = m * w2 - a * gamma0 - F::one() + (-beta0).exp();
    let tol = root_tol::<F>() * gamma0.max(F::one());
    if !(beta0 > F::zero() && gamma0 > w2 && r1.abs() < tol && r2.abs() < tol && gamma0 < lit(4.0))
    {
        return Err(Error::RootFindFailure {
            what: "discrete eigenvalue",
            lo: w2.as_f64(),
            hi: 4.0,
            residual: r1.abs().max(r2.abs()).as_f64(),
        });
    }
    let rho0 = (a + ((lit(2.0) * beta0).exp_m1()).recip()).recip();
    let k_sw = (F::one() - gamma0 * lit(0.5)).acos();
    Ok(SpectralData {
        params: *params,
        omega,
        omega_max: wmax,
        gamma0,
        beta0,
        rho0,
        k_sw,
    })
}

impl<F: Real> SpectralData<F> {
    pub fn omega_sq(&self) -> F {
        self.omega * self.omega
    }

    /// Continuous density on (ω²-4, ω²); zero outside.
    pub fn rho(&self, gamma: F) -> F {
        let w2 = self.omega_sq();
        let p = (w2 - gamma) * (gamma - w2 + F::lit(4.0));
        if !(p > F::zero()) {
            return F::zero();
        }
        let (m, a) = (self.params.m_s, self.params.alpha_s);
        let x = gamma * (F::lit(2.0) * a - F::one()) + w2 * (F::one() - F::lit(2.0) * m);
        F::lit(2.0) / F::PI() * p.sqrt() / (p + x * x)
    }

    /// Propagative wavenumber k(γ) = arccos(1-γ/2) for γ ∈ (0,4).
    pub fn k_of_gamma(&self, gamma: F) -> F {
        k_of_gamma(gamma)
    }

    /// ζ(γ) ∈ (0,π) with 2cos ζ - 2 + ω² = γ.
    pub fn zeta_of_gamma(&self, gamma: F) -> F {
        let c = (gamma + F::lit(2.0) - self.omega_sq()) * F::lit(0.5);
        c.max(-F::one()).min(F::one()).acos()
    }

    /// Surface wavenumber pole z_sw = e^{i k_sw}.
    pub fn z_sw(&self) -> C<F> {
        Complex::new(self.k_sw.cos(), self.k_sw.sin())
    }

    pub fn in_continuum(&self, gamma: F) -> bool {
        let w2 = self.omega_sq();
        gamma > w2 - F::lit(4.0) && gamma < w2
    }

    fn is_gamma0(&self, gamma: F) -> bool {
        (gamma - self.gamma0).abs() <= F::lit(1e-10) * self.gamma0.max(F::one())
    }

    /// ψ_γ(y) for y = 0, -1, ..., -depth (ψ_γ(0) = 1).
    pub fn eigenfunction(&self, gamma: F, depth: usize) -> Result<Vec<F>> {
        if self.is_gamma0(gamma) {
            return Ok((0..=depth)
                .map(|d| (-self.beta0 * F::from_usize_lossy(d)).exp())
                .collect());
        }
        if !self.in_continuum(gamma) {
            let w2 = self.omega_sq();
            return Err(Error::GammaOutOfSpectrum {
                gamma: gamma.as_f64(),
                lower: (w2 - F::lit(4.0)).as_f64(),
                upper: w2.as_f64(),
                gamma0: self.gamma0.as_f64(),
            });
        }
        let zeta = self.zeta_of_gamma(gamma);
        let fs = self.surface_factor(gamma);
        let sz = zeta.sin();
        Ok((0..=depth)
            .map(|d| {
                let y = -F::from_usize_lossy(d);
                (fs * (zeta * y).sin() + (zeta * (y + F::one())).sin()) / sz
            })
            .collect())
    }

    /// m_sω² - α_sγ - 1.
    pub fn surface_factor(&self, gamma: F) -> F {
        self.params.m_s * self.omega_sq() - self.params.alpha_s * gamma - F::one()
    }

    /// sup_y |ψ_γ(y)| = 2|A_γ| for γ in the continuum.
    pub fn eigenfunction_bound(&self, gamma: F) -> F {
        let zeta = self.zeta_of_gamma(gamma);
        let b = (self.params.alpha_s * gamma + F::one()
            - self.params.m_s * self.omega_sq()
            - zeta.cos())
            / zeta.sin();
        (F::one() + b * b).sqrt()
    }

    /// Modal amplitudes of a vector u given on y = 0, -1, ..., -(len-1).
    ///
    /// Returns ǔ_{γ₀} and a closure-free table (γ, weight, |ǔ_γ|²) over the continuum,
    /// integrated in ζ with `n_nodes` Gauss–Legendre points.
    pub fn parseval_parts(&self, u: &[C<F>], n_nodes: usize) -> ParsevalParts<F> {
        let a = self.params.alpha_s;
        let inner = |psi: &dyn Fn(usize) -> F| -> C<F> {
            let mut s = u[0] * (a * psi(0));
            for (d, v) in u.iter().enumerate().skip(1) {
                s = s + v * psi(d);
            }
            s
        };
        let b0 = self.beta0;
        let discrete = inner(&|d| (-b0 * F::from_usize_lossy(d)).exp()) * self.rho0.sqrt();
        let norm_sq = a * u[0].norm_sqr() + u.iter().skip(1).map(|v| v.norm_sqr()).sum::<F>();
        let gl = GaussLegendre::<F>::new(n_nodes);
        let w2 = self.omega_sq();
        let mut continuum = F::zero();
        for (zeta, w) in gl.mapped(F::zero(), F::PI()) {
            // γ = ω² - 2 + 2cos ζ, dγ = 2 sin ζ dζ
            let gamma = w2 - F::lit(2.0) + F::lit(2.0) * zeta.cos();
            let fs = self.surface_factor(gamma);
            let sz = zeta.sin();
            let amp = inner(&|d| {
                let y = -F::from_usize_lossy(d);
                (fs * (zeta * y).sin() + (zeta * (y + F::one())).sin()) / sz
            });
            continuum = continuum + w * F::lit(2.0) * sz * self.rho(gamma) * amp.norm_sqr();
        }
        ParsevalParts {
            norm_sq,
            discrete: discrete.norm_sqr(),
            continuum,
        }
    }
}

/// Both sides of the Parseval relation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParsevalParts<F> {
    pub norm_sq: F,
    pub discrete: F,
    pub continuum: F,
}

impl<F: Real> ParsevalParts<F> {
    pub fn defect(&self) -> F {
        (self.norm_sq - self.discrete - self.continuum).abs()
    }
}

pub fn k_of_gamma<F: Real>(gamma: F) -> F {
    (F::one() - gamma * F::lit(0.5))
        .max(-F::one())
        .min(F::one())
        .acos()
}

/// Evanescent decay rate for γ < 0: cosh k = 1 - γ/2.
pub fn evanescent_k<F: Real>(gamma: F) -> F {
    (F::one() - gamma * F::lit(0.5)).max(F::one()).acosh()
}

/// ψ_γ(0..-depth) at frequency ω.
pub fn eigenfunction_samples<F: Real>(
    params: &SurfaceParams<F>,
    omega: F,
    gamma: F,
    depth: usize,
) -> Result<Vec<F>> {
    if depth < 1 {
        return Err(Error::InvalidInput(
            "eigenfunction depth must be at least 1".into(),
        ));
    }
    spectral_data(params, omega)?.eigenfunction(gamma, depth)
}

/// One-dimensional resolvent route to the normalization.
pub mod resolvent {
    use super::*;

    /// Root of ℓ + 1/ℓ - 2 + ω² = s with |ℓ| < 1.
    pub fn ell<F: Real>(s: C<F>, omega_sq: F) -> C<F> {
        let b = s + Complex::new(F::lit(2.0) - omega_sq, F::zero());
        let d = (b * b - Complex::new(F::lit(4.0), F::zero())).sqrt();
        let half = F::lit(0.5);
        let l1 = (b + d) * half;
        let l2 = (b - d) * half;
        if l1.norm() < l2.norm() {
            l1
        } else {
            l2
        }
    }

    /// G(0,0;s) = -1/(ℓ(s) + m_sω² - α_s s - 1).
    pub fn surface_resolvent<F: Real>(params: &SurfaceParams<F>, omega: F, s: C<F>) -> C<F> {
        let w2 = omega * omega;
        let fs = Complex::new(params.m_s * w2 - F::one(), F::zero()) - s * params.alpha_s;
        -(ell(s, w2) + fs).inv()
    }

    /// Discrete eigenvalue as the real zero of ℓ(s) + F_s(s) above ω², by bisection.
    pub fn gamma0<F: Real>(params: &SurfaceParams<F>, omega: F) -> Result<F> {
        params.require_band()?;
        let w2 = omega * omega;
        let g = |s: F| -> F {
            let b = s + F::lit(2.0) - w2;
            let l = (b - (b * b - F::lit(4.0)).max(F::zero()).sqrt()) * F::lit(0.5);
            l + params.m_s * w2 - params.alpha_s * s - F::one()
        };
        let mut lo = w2;
        let mut hi = w2 + (params.m_s * w2 + F::lit(2.0)) / params.alpha_s + F::one();
        if !(g(lo) > F::zero() && g(hi) < F::zero()) {
            return Err(Error::RootFindFailure {
                what: "resolvent pole",
                lo: lo.as_f64(),
                hi: hi.as_f64(),
                residual: g(lo).as_f64(),
            });
        }
        for _ in 0..300 {
            let mid = (lo + hi) * F::lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) > F::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lo + hi) * F::lit(0.5))
    }

    /// ρ(γ₀) as the residue of G(0,0;·) at γ₀, by the trapezoid rule on a circle.
    pub fn rho0_residue<F: Real>(params: &SurfaceParams<F>, omega: F, n_nodes: usize) -> Result<F> {
        let g0 = gamma0(params, omega)?;
        let radius = (g0 - omega * omega) * F::lit(0.5);
        let n = F::from_usize_lossy(n_nodes);
        let mut acc = Complex::new(F::zero(), F::zero());
        for j in 0..n_nodes {
            let th = F::lit(2.0) * F::PI() * F::from_usize_lossy(j) / n;
            let e = Complex::new(th.cos(), th.sin());
            // (1/2πi)∮ G ds with ds = i r e^{iθ} dθ
            acc = acc
                + surface_resolvent(params, omega, Complex::new(g0, F::zero()) + e * radius)
                    * e
                    * radius;
        }
        Ok((acc / n).re)
    }

    /// ρ(γ) from the jump of G(0,0;·) across the continuum, Richardson-corrected in δ.
    pub fn rho_jump<F: Real>(params: &SurfaceParams<F>, omega: F, gamma: F, delta: F) -> F {
        let jump = |d: F| -> F {
            let up = surface_resolvent(params, omega, Complex::new(gamma, d));
            let dn = surface_resolvent(params, omega, Complex::new(gamma, -d));
            // (i/2π)(G₊ - G₋)
            ((up - dn) * Complex::new(F::zero(), F::one())).re / (F::lit(2.0) * F::PI())
        };
        F::lit(2.0) * jump(delta * F::lit(0.5)) - jump(delta)
    }
}
