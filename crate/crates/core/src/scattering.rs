//! Exact scattering of the surface wave by a finite patch of boundary mass perturbations.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::greens::{
    branch_angle, greens_boundary_table, GreensOptions, GreensTable, Kernel, RadiatingGreens,
};
use crate::linalg::{Lu, Matrix};
use crate::quad::GaussLegendre;
use crate::scalar::{cis, Real, C};
use crate::spectrum::{spectral_data_guarded, SpectralData, SurfaceParams, DEFAULT_GUARD};

/// Relative mass perturbations μ₁..μ_L on consecutive boundary sites.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationPatch<F = f64> {
    mu: Vec<F>,
}

impl<F: Real> PerturbationPatch<F> {
    pub fn new(mu: Vec<F>) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::InvalidInput(
                "perturbation patch must be nonempty".into(),
            ));
        }
        if let Some((j, v)) = mu
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > -F::one()))
        {
            return Err(Error::InvalidInput(format!(
                "site {}: 1 + mu must be positive, got mu = {}",
                j + 1,
                v
            )));
        }
        Ok(Self { mu })
    }

    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(vec![F::zero(); len])
    }

    pub fn mu(&self) -> &[F] {
        &self.mu
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn reversed(&self) -> Self {
        Self {
            mu: self.mu.iter().rev().copied().collect(),
        }
    }

    /// FNV-1a over the f64 bit patterns; identifies a patch in CSV output.
    pub fn hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in &self.mu {
            for b in v.as_f64().to_bits().to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

/// Incident amplitude convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// â = √ρ(γ₀).
    #[default]
    ModeNormalized,
    /// â = 1.
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings<F = f64> {
    /// Band-edge guard δ: ω ≤ (1-δ)ω_max.
    pub guard: F,
    /// 0 selects the outgoing (ε → 0⁺) Green's function; > 0 the trapezoid rule at that ε.
    pub epsilon: F,
    /// Trapezoid nodes when `epsilon > 0`.
    pub n_nodes: usize,
    pub greens: GreensOptions<F>,
    pub normalization: Normalization,
    /// Compute the radiated flux by quadrature and report the energy residual.
    pub audit: bool,
    /// Results with a condition estimate above this are flagged.
    pub cond_flag: F,
}

impl<F: Real> Default for SolverSettings<F> {
    fn default() -> Self {
        Self {
            guard: F::lit(DEFAULT_GUARD),
            epsilon: F::zero(),
            n_nodes: 1 << 16,
            greens: GreensOptions::default(),
            normalization: Normalization::ModeNormalized,
            audit: false,
            cond_flag: F::lit(1e12),
        }
    }
}

/// Energy fluxes of one solve, all for the same incident amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown<F = f64> {
    pub e_inc: F,
    pub e_r: F,
    pub e_t: F,
    /// Flux radiated into the half-plane.
    pub e_half: F,
    /// Work functional, contour form.
    pub w_contour: F,
    /// Work functional, direct form -(ω/2) Im(conj(â) f(z_sw)).
    pub w_direct: F,
}

impl<F: Real> EnergyBreakdown<F> {
    /// (E_R + E_T + E_half)/E_inc - 1.
    pub fn balance_defect(&self) -> F {
        (self.e_r + self.e_t + self.e_half) / self.e_inc - F::one()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringResult<F = f64> {
    pub r: C<F>,
    pub t: C<F>,
    /// Radiative loss 1 - |R|² - |T|².
    pub d: F,
    /// ||R|² + |T|² + E_half/E_inc - 1| when audited, else 0.
    pub energy_residual: F,
    /// Total field on the patch sites.
    pub boundary_field: Vec<C<F>>,
    pub cond_estimate: F,
    pub flagged: bool,
    pub energy: Option<EnergyBreakdown<F>>,
}

pub const SCATTER_CSV_HEADER: &str =
    "omega,L,mu_hash,re_r,im_r,re_t,im_t,d,energy_residual,cond_estimate";

impl<F: Real> ScatteringResult<F> {
    pub fn csv_row(&self, omega: F, len: usize, mu_hash: u64) -> String {
        let g = |v: F| format!("{:.16e}", v.as_f64());
        [
            g(omega),
            len.to_string(),
            format!("{mu_hash:016x}"),
            g(self.r.re),
            g(self.r.im),
            g(self.t.re),
            g(self.t.im),
            g(self.d),
            g(self.energy_residual),
            g(self.cond_estimate),
        ]
        .join(",")
    }
}

/// Reusable solver at one frequency: holds the spectral data and the boundary Green's table.
#[derive(Debug, Clone)]
pub struct ScatteringSolver<F = f64> {
    spectral: SpectralData<F>,
    settings: SolverSettings<F>,
    table: GreensTable<F>,
    /// 𝔎′_s(z_sw) at ε = 0⁺.
    dk: C<F>,
    theta_b: F,
}

impl<F: Real> ScatteringSolver<F> {
    /// Builds the Green's table for patches up to `max_len` sites.
    pub fn new(
        params: &SurfaceParams<F>,
        omega: F,
        settings: SolverSettings<F>,
        max_len: usize,
    ) -> Result<Self> {
        let spectral = spectral_data_guarded(params, omega, settings.guard)?;
        let table = if settings.epsilon > F::zero() {
            greens_boundary_table(
                &Kernel::new(*params, omega, settings.epsilon)?,
                max_len.max(1),
                settings.n_nodes,
            )?
        } else {
            RadiatingGreens::from_spectral(&spectral, settings.greens)?
                .boundary_table(max_len.max(1))?
        };
        Self::with_table(&spectral, settings, table)
    }

    /// Uses a precomputed (e.g. cached) boundary table.
    pub fn with_table(
        spectral: &SpectralData<F>,
        settings: SolverSettings<F>,
        table: GreensTable<F>,
    ) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::InvalidInput("Green's table is empty".into()));
        }
        let kernel = Kernel::new(spectral.params, spectral.omega, F::zero())?;
        let dk = kernel.derivative(spectral.z_sw());
        Ok(Self {
            spectral: *spectral,
            settings,
            table,
            dk,
            theta_b: branch_angle(spectral.omega),
        })
    }

    pub fn spectral(&self) -> &SpectralData<F> {
        &self.spectral
    }

    pub fn table(&self) -> &GreensTable<F> {
        &self.table
    }

    pub fn settings(&self) -> &SolverSettings<F> {
        &self.settings
    }

    pub fn max_len(&self) -> usize {
        self.table.len()
    }

    pub fn incident_amplitude(&self) -> F {
        match self.settings.normalization {
            Normalization::ModeNormalized => self.spectral.rho0.sqrt(),
            Normalization::Unit => F::one(),
        }
    }

    /// û_j = â z_sw^j, j = 1..L.
    fn incident(&self, len: usize) -> Vec<C<F>> {
        let a = self.incident_amplitude();
        let z = self.spectral.z_sw();
        let mut ph = z * a;
        (0..len)
            .map(|_| {
                let v = ph;
                ph = ph * z;
                v
            })
            .collect()
    }

    /// 1/(z_sw 𝔎′_s(z_sw)).
    fn c0(&self) -> C<F> {
        (self.spectral.z_sw() * self.dk).inv()
    }

    pub fn solve(&self, patch: &PerturbationPatch<F>) -> Result<ScatteringResult<F>> {
        let len = patch.len();
        if len > self.table.len() {
            return Err(Error::InvalidInput(format!(
                "patch length {len} exceeds the Green's table length {}",
                self.table.len()
            )));
        }
        let w2 = self.spectral.omega_sq();
        let m = self.spectral.params.m_s();
        let d: Vec<F> = patch.mu().iter().map(|&mu| -m * w2 * mu).collect();
        let uhat = self.incident(len);
        let zero = Complex::new(F::zero(), F::zero());
        let (field, cond) = if d.iter().all(|v| *v == F::zero()) {
            (uhat.clone(), F::one())
        } else {
            let g = self.table.boundary();
            let a = Matrix::from_fn(len, |i, j| {
                let diag = if i == j {
                    Complex::new(F::one(), F::zero())
                } else {
                    zero
                };
                diag - g[i.abs_diff(j)] * d[j]
            });
            let lu = Lu::factor(a)?;
            (lu.solve(&uhat), lu.cond1_estimate())
        };
        let a = self.incident_amplitude();
        let c0 = self.c0();
        let mut sr = zero;
        let mut st = zero;
        for j in 0..len {
            let f = field[j] * d[j];
            sr = sr + uhat[j] * f;
            st = st + uhat[j].conj() * f;
        }
        let r = c0 * sr / (a * a);
        let t = Complex::new(F::one(), F::zero()) + c0 * st / (a * a);
        let loss = F::one() - r.norm_sqr() - t.norm_sqr();
        let mut out = ScatteringResult {
            r,
            t,
            d: loss,
            energy_residual: F::zero(),
            boundary_field: field,
            cond_estimate: cond,
            flagged: !(cond <= self.settings.cond_flag),
            energy: None,
        };
        if self.settings.audit {
            let e = self.energy(patch, &out)?;
            out.energy_residual =
                (r.norm_sqr() + t.norm_sqr() + e.e_half / e.e_inc - F::one()).abs();
            out.energy = Some(e);
        }
        Ok(out)
    }

    /// f(z) = Σ_j z^{-j} f_j with f_j = D_j w_j.
    fn source_transform(f: &[C<F>], z: C<F>) -> C<F> {
        let zi = z.inv();
        let mut ph = zi;
        let mut acc = Complex::new(F::zero(), F::zero());
        for v in f {
            acc = acc + v * ph;
            ph = ph * zi;
        }
        acc
    }

    /// Flux balance of a solved patch, with the radiated flux from quadrature on the radiating arc.
    pub fn energy(
        &self,
        patch: &PerturbationPatch<F>,
        result: &ScatteringResult<F>,
    ) -> Result<EnergyBreakdown<F>> {
        let len = patch.len();
        if result.boundary_field.len() != len {
            return Err(Error::InvalidInput(
                "boundary field length does not match the patch".into(),
            ));
        }
        let sd = &self.spectral;
        let w = sd.omega;
        let w2 = sd.omega_sq();
        let m = sd.params.m_s();
        let a = self.incident_amplitude();
        let f: Vec<C<F>> = patch
            .mu()
            .iter()
            .zip(&result.boundary_field)
            .map(|(&mu, u)| u * (-m * w2 * mu))
            .collect();
        let sin_k = sd.k_sw.sin();
        let e_inc = F::lit(0.5) * a * a * w * sin_k / sd.rho0;
        let e_half = self.radiated(&f)?;
        let zs = sd.z_sw();
        let f_sw = Self::source_transform(&f, zs);
        let f_isw = Self::source_transform(&f, zs.inv());
        let w_direct = -(w * F::lit(0.5)) * (f_sw * a).im;
        let w_contour =
            e_half + w * sd.rho0 * (f_sw.norm_sqr() + f_isw.norm_sqr()) / (F::lit(8.0) * sin_k);
        Ok(EnergyBreakdown {
            e_inc,
            e_r: result.r.norm_sqr() * e_inc,
            e_t: result.t.norm_sqr() * e_inc,
            e_half,
            w_contour,
            w_direct,
        })
    }

    /// (ω/4π) ∫_{|θ|<θ_b} Im λ |f|²/|𝔎_s|² dθ with θ = θ_b cos φ.
    fn radiated(&self, f: &[C<F>]) -> Result<F> {
        if f.iter().all(|v| v.re == F::zero() && v.im == F::zero()) {
            return Ok(F::zero());
        }
        let kernel = Kernel::new(self.spectral.params, self.spectral.omega, F::zero())?;
        let gl = GaussLegendre::<F>::new(32);
        let tb = self.theta_b;
        let phase = F::from_usize_lossy(f.len() + 1) * tb * F::PI();
        let base = (phase / F::lit(6.0)).ceil().to_usize().unwrap_or(1).max(8);
        let eval = |panels: usize| -> F {
            gl.composite(F::zero(), F::PI(), panels)
                .into_iter()
                .map(|(phi, wt)| {
                    let theta = tb * phi.cos();
                    let z = cis(theta);
                    let fz = Self::source_transform(f, z);
                    let k = kernel.eval(z);
                    wt * tb * phi.sin() * kernel.lambda(z).im * fz.norm_sqr() / k.norm_sqr()
                })
                .sum::<F>()
                * self.spectral.omega
                / (F::lit(4.0) * F::PI())
        };
        let coarse = eval(base);
        let fine = eval(2 * base);
        if (coarse - fine).abs() > F::lit(1e-10) * fine.abs() + F::min_positive_value() {
            return Err(Error::QuadratureNotConverged {
                what: "radiated flux",
                coarse: coarse.as_f64(),
                fine: fine.as_f64(),
            });
        }
        Ok(fine)
    }
}

/// One-shot solve (builds the Green's table for this patch only).
pub fn solve_patch<F: Real>(
    params: &SurfaceParams<F>,
    omega: F,
    patch: &PerturbationPatch<F>,
    settings: SolverSettings<F>,
) -> Result<ScatteringResult<F>> {
    ScatteringSolver::new(params, omega, settings, patch.len())?.solve(patch)
}

/// Energy fluxes for a boundary field obtained from [`solve_patch`] with the same settings.
pub fn radiated_flux<F: Real>(
    params: &SurfaceParams<F>,
    omega: F,
    patch: &PerturbationPatch<F>,
    result: &ScatteringResult<F>,
    settings: SolverSettings<F>,
) -> Result<EnergyBreakdown<F>> {
    ScatteringSolver::new(params, omega, settings, patch.len())?.energy(patch, result)
}

/// |T(μ) - T(reversed μ)|.
pub fn transmission_reciprocity_check<F: Real>(
    solver: &ScatteringSolver<F>,
    patch: &PerturbationPatch<F>,
) -> Result<F> {
    let a = solver.solve(patch)?;
    let b = solver.solve(&patch.reversed())?;
    Ok((a.t - b.t).norm())
}
