//! Boundary kernel 𝔎_s and lattice Green's functions of the structured half-plane.
//!
//! Two evaluation routes are provided:
//! * the finite-ε trapezoid rule on the unit circle ([`greens_boundary`], [`greens_interior`]),
//! * the outgoing limit ε → 0⁺ ([`RadiatingGreens`]), where the two surface poles are removed
//!   analytically and the bounded remainder is integrated with graded composite Gauss–Legendre.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use crate::scalar::{cis, Real, C};
use crate::spectrum::{spectral_data, SpectralData, SurfaceParams};

/// 𝔎_s(z) = λ(z) + 𝔉_s(z) at frequency ω + iε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel<F = f64> {
    pub params: SurfaceParams<F>,
    pub omega: F,
    pub epsilon: F,
}

impl<F: Real> Kernel<F> {
    pub fn new(params: SurfaceParams<F>, omega: F, epsilon: F) -> Result<Self> {
        if !(omega > F::zero() && omega.is_finite()) {
            return Err(Error::DomainError {
                what: "omega",
                value: omega.as_f64(),
            });
        }
        if !(epsilon >= F::zero() && epsilon.is_finite()) {
            return Err(Error::DomainError {
                what: "epsilon",
                value: epsilon.as_f64(),
            });
        }
        Ok(Self {
            params,
            omega,
            epsilon,
        })
    }

    /// Q(z) = 4 - z - 1/z - (ω+iε)².
    pub fn q(&self, z: C<F>) -> C<F> {
        let w = Complex::new(self.omega, self.epsilon);
        let mut q = Complex::new(F::lit(4.0), F::zero()) - z - z.inv() - w * w;
        if self.epsilon == F::zero()
            && q.im.abs() <= F::lit(16.0) * F::epsilon() * (q.norm() + F::one())
        {
            // on the unit circle Q is real; use the outgoing side Q - i0
            q.im = F::zero();
        }
        q
    }

    /// (h, r) = (√(Q-2), √(Q+2)).
    fn h_r(&self, q: C<F>) -> (C<F>, C<F>) {
        let two = Complex::new(F::lit(2.0), F::zero());
        (sqrt_outgoing(q - two), sqrt_outgoing(q + two))
    }

    pub fn lambda(&self, z: C<F>) -> C<F> {
        let (h, r) = self.h_r(self.q(z));
        (r - h) / (r + h)
    }

    /// 𝔉_s(z) = m_sω² - 1 + α_s(z + 1/z - 2).
    pub fn f_s(&self, z: C<F>) -> C<F> {
        let p = &self.params;
        Complex::new(
            p.m_s() * self.omega * self.omega - F::one() - F::lit(2.0) * p.alpha_s(),
            F::zero(),
        ) + (z + z.inv()) * p.alpha_s()
    }

    pub fn eval(&self, z: C<F>) -> C<F> {
        self.lambda(z) + self.f_s(z)
    }

    /// dλ/dQ = -4/(r h (r+h)²).
    fn dlambda_dq(&self, z: C<F>) -> C<F> {
        let (h, r) = self.h_r(self.q(z));
        let s = r + h;
        Complex::new(-F::lit(4.0), F::zero()) / (r * h * s * s)
    }

    /// Analytic derivative 𝔎′_s(z) = (1 - z⁻²)(α_s - dλ/dQ).
    pub fn derivative(&self, z: C<F>) -> C<F> {
        let zi2 = (z * z).inv();
        (Complex::new(F::one(), F::zero()) - zi2)
            * (Complex::new(self.params.alpha_s(), F::zero()) - self.dlambda_dq(z))
    }
}

/// Principal square root, except that a negative real argument is read as lying on the
/// lower side of the cut (the ε → 0⁺ limit of Q - iε).
fn sqrt_outgoing<F: Real>(w: C<F>) -> C<F> {
    if w.im == F::zero() && w.re < F::zero() {
        Complex::new(F::zero(), -(-w.re).sqrt())
    } else {
        w.sqrt()
    }
}

pub fn kernel_eval<F: Real>(kernel: &Kernel<F>, z: C<F>) -> C<F> {
    kernel.eval(z)
}

/// Surface-pole data at ε = 0⁺.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePole<F> {
    pub k_sw: F,
    pub eta: F,
    pub z_sw: C<F>,
    /// 𝔎′_s(z_sw).
    pub dk: C<F>,
}

impl<F: Real> SurfacePole<F> {
    /// Residue factor 1/(z 𝔎′_s(z)) at z_sw.
    pub fn residue_factor(&self) -> C<F> {
        (self.z_sw * self.dk).inv()
    }
}

/// Root of 𝔎_s on the unit circle, k ∈ (θ_b, π), by bisection on the real kernel.
pub fn kernel_root<F: Real>(kernel: &Kernel<F>) -> Result<F> {
    let theta_b = branch_angle(kernel.omega);
    let g = |k: F| kernel.eval(cis(k)).re;
    let (mut lo, mut hi) = (theta_b, F::PI());
    let (glo, ghi) = (g(lo), g(hi));
    if !(glo.signum() != ghi.signum()) {
        return Err(Error::RootFindFailure {
            what: "kernel zero",
            lo: lo.as_f64(),
            hi: hi.as_f64(),
            residual: glo.as_f64(),
        });
    }
    for _ in 0..200 {
        let mid = (lo + hi) * F::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid).signum() == glo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * F::lit(0.5))
}

/// θ_b with cos θ_b = 1 - ω²/2: edge of the radiating arc on the unit circle.
pub fn branch_angle<F: Real>(omega: F) -> F {
    (F::one() - omega * omega * F::lit(0.5))
        .max(-F::one())
        .acos()
}

/// ρ(γ₀) = (z - 1/z)/(z 𝔎′_s(z)) at z = e^{ik_sw}.
pub fn rho0_via_kernel<F: Real>(params: &SurfaceParams<F>, omega: F, k_sw: F) -> Result<F> {
    let ker = Kernel::new(*params, omega, F::zero())?;
    let z = cis(k_sw);
    Ok(((z - z.inv()) / (z * ker.derivative(z))).re)
}

/// ρ(γ) = Im λ_γ / (π |𝔎_s(z_γ)|²) with γ = 2 - z - 1/z, |z_γ| ≤ 1.
pub fn rho_via_kernel<F: Real>(params: &SurfaceParams<F>, omega: F, gamma: F) -> Result<F> {
    let ker = Kernel::new(*params, omega, F::zero())?;
    let z = if gamma > F::zero() && gamma < F::lit(4.0) {
        cis(crate::spectrum::k_of_gamma(gamma))
    } else {
        // real root of z² - (2-γ)z + 1 = 0 inside the disk
        let b = F::lit(2.0) - gamma;
        let d = (b * b - F::lit(4.0)).max(F::zero()).sqrt();
        let z = if b > F::zero() {
            (b - d) * F::lit(0.5)
        } else {
            (b + d) * F::lit(0.5)
        };
        Complex::new(z, F::zero())
    };
    let lam = ker.lambda(z);
    let k = ker.eval(z);
    Ok(lam.im / (F::PI() * k.norm_sqr()))
}

/// Checks the trapezoid preconditions.
fn check_trapezoid<F: Real>(kernel: &Kernel<F>, n_nodes: usize) -> Result<()> {
    if !(kernel.epsilon > F::zero()) {
        return Err(Error::InvalidInput(
            "trapezoid Green's function requires epsilon > 0".into(),
        ));
    }
    if n_nodes < 256 || !n_nodes.is_power_of_two() {
        return Err(Error::InvalidInput(format!(
            "n_nodes must be a power of two >= 256, got {n_nodes}"
        )));
    }
    Ok(())
}

/// Trapezoid sum (1/N) Σ λ^{|y|} z^{|x|}/𝔎_s over the nodes j ≡ offset (mod stride) of a 2N grid.
fn trapezoid_partial<F: Real>(
    kernel: &Kernel<F>,
    ax: usize,
    ay: usize,
    n2: usize,
    offset: usize,
    stride: usize,
) -> C<F> {
    let mut acc = Complex::new(F::zero(), F::zero());
    let nf = F::from_usize_lossy(n2);
    let mut j = offset;
    while j < n2 {
        let th = F::lit(2.0) * F::PI() * F::from_usize_lossy(j) / nf;
        let z = cis(th);
        let mut v = cis(th * F::from_usize_lossy(ax)) / kernel.eval(z);
        if ay > 0 {
            v = v * kernel.lambda(z).powi(ay as i32);
        }
        acc = acc + v;
        j += stride;
    }
    acc
}

fn trapezoid_checked<F: Real>(kernel: &Kernel<F>, x: i64, y: i64, n_nodes: usize) -> Result<C<F>> {
    check_trapezoid(kernel, n_nodes)?;
    if y > 0 {
        return Err(Error::DomainError {
            what: "depth y (must be <= 0)",
            value: y as f64,
        });
    }
    let (ax, ay) = (x.unsigned_abs() as usize, y.unsigned_abs() as usize);
    let n2 = 2 * n_nodes;
    let even = trapezoid_partial(kernel, ax, ay, n2, 0, 2);
    let odd = trapezoid_partial(kernel, ax, ay, n2, 1, 2);
    let coarse = even / F::from_usize_lossy(n_nodes);
    let fine = (even + odd) / F::from_usize_lossy(n2);
    let scale = fine.norm().max(F::min_positive_value());
    if (fine - coarse).norm() > F::lit(1e-10) * scale {
        return Err(Error::QuadratureNotConverged {
            what: "trapezoid Green's function",
            coarse: coarse.norm().as_f64(),
            fine: fine.norm().as_f64(),
        });
    }
    Ok(coarse)
}

/// 𝒢_{x,0} at finite ε by the N-point trapezoid rule; the 2N rule is used as a convergence check.
pub fn greens_boundary<F: Real>(kernel: &Kernel<F>, x: i64, n_nodes: usize) -> Result<C<F>> {
    trapezoid_checked(kernel, x, 0, n_nodes)
}

/// 𝒢_{x,y}, y ≤ 0, at finite ε by the trapezoid rule.
pub fn greens_interior<F: Real>(
    kernel: &Kernel<F>,
    x: i64,
    y: i64,
    n_nodes: usize,
) -> Result<C<F>> {
    trapezoid_checked(kernel, x, y, n_nodes)
}

/// Boundary table 𝒢_{0..n-1,0} at finite ε from one sweep of the trapezoid nodes.
pub fn greens_boundary_table<F: Real>(
    kernel: &Kernel<F>,
    n: usize,
    n_nodes: usize,
) -> Result<GreensTable<F>> {
    check_trapezoid(kernel, n_nodes)?;
    let sweep = |nn: usize| -> Vec<C<F>> {
        let nf = F::from_usize_lossy(nn);
        let inv_k: Vec<(C<F>, C<F>)> = (0..nn)
            .map(|j| {
                let z = cis(F::lit(2.0) * F::PI() * F::from_usize_lossy(j) / nf);
                (z, kernel.eval(z).inv())
            })
            .collect();
        phasor_sums(&inv_k, n).into_iter().map(|v| v / nf).collect()
    };
    let coarse = sweep(n_nodes);
    let fine = sweep(2 * n_nodes);
    let scale = fine.iter().map(|v| v.norm()).fold(F::zero(), F::max);
    for (c, f) in coarse.iter().zip(&fine) {
        if (c - f).norm() > F::lit(1e-10) * scale {
            return Err(Error::QuadratureNotConverged {
                what: "trapezoid Green's table",
                coarse: c.norm().as_f64(),
                fine: f.norm().as_f64(),
            });
        }
    }
    Ok(GreensTable::new(coarse, kernel.epsilon, n_nodes))
}

/// Σ_j w_j z_j^x for x = 0..n, in fixed-size x blocks so the result is schedule independent.
fn phasor_sums<F: Real>(weighted: &[(C<F>, C<F>)], n: usize) -> Vec<C<F>> {
    const BLOCK: usize = 32;
    let blocks: Vec<usize> = (0..n.div_ceil(BLOCK)).collect();
    let parts: Vec<Vec<C<F>>> = blocks
        .par_iter()
        .map(|&b| {
            let x0 = b * BLOCK;
            let len = BLOCK.min(n - x0);
            let mut out = vec![Complex::new(F::zero(), F::zero()); len];
            for &(z, w) in weighted {
                let mut ph = w * z.powi(x0 as i32);
                for o in out.iter_mut() {
                    *o = *o + ph;
                    ph = ph * z;
                }
            }
            out
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// Richardson extrapolation to ε → 0 of trapezoid values over a geometric ε ladder.
///
/// `ladder` must be decreasing with a constant ratio; the model is g(ε) = g₀ + aε + bε² + …
pub fn greens_boundary_richardson<F: Real>(
    params: &SurfaceParams<F>,
    omega: F,
    x: i64,
    ladder: &[F],
    n_nodes: &[usize],
) -> Result<C<F>> {
    if ladder.len() < 2 || ladder.len() != n_nodes.len() {
        return Err(Error::InvalidInput(
            "Richardson ladder needs >= 2 epsilons and one node count per epsilon".into(),
        ));
    }
    let ratio = ladder[0] / ladder[1];
    let mut level: Vec<C<F>> = ladder
        .iter()
        .zip(n_nodes)
        .map(|(&eps, &n)| greens_boundary(&Kernel::new(*params, omega, eps)?, x, n))
        .collect::<Result<_>>()?;
    let mut factor = ratio;
    while level.len() > 1 {
        level = level
            .windows(2)
            .map(|w| (w[1] * factor - w[0]) / (factor - F::one()))
            .collect();
        factor = factor * ratio;
    }
    Ok(level[0])
}

/// Options for the ε → 0⁺ route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreensOptions<F> {
    /// Gauss–Legendre points per panel.
    pub order: usize,
    /// Target oscillation phase per panel (radians).
    pub phase_per_panel: F,
    pub min_panels: usize,
    /// Relative tolerance of the panel-doubling check; `None` skips it.
    pub verify_tol: Option<F>,
}

impl<F: Real> Default for GreensOptions<F> {
    fn default() -> Self {
        Self {
            order: 32,
            phase_per_panel: F::lit(6.0),
            min_panels: 4,
            verify_tol: Some(F::lit(1e-10)),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Node<F> {
    theta: F,
    weight: F,
    z: C<F>,
    lambda: C<F>,
    inv_k: C<F>,
    pole: C<F>,
}

/// Outgoing (ε → 0⁺) Green's function with analytic surface-pole subtraction.
#[derive(Debug, Clone)]
pub struct RadiatingGreens<F = f64> {
    kernel: Kernel<F>,
    spectral: SpectralData<F>,
    pole: SurfacePole<F>,
    theta_b: F,
    opts: GreensOptions<F>,
}

impl<F: Real> RadiatingGreens<F> {
    pub fn new(params: &SurfaceParams<F>, omega: F, opts: GreensOptions<F>) -> Result<Self> {
        let spectral = spectral_data(params, omega)?;
        Self::from_spectral(&spectral, opts)
    }

    pub fn from_spectral(spectral: &SpectralData<F>, opts: GreensOptions<F>) -> Result<Self> {
        let kernel = Kernel::new(spectral.params, spectral.omega, F::zero())?;
        let z_sw = spectral.z_sw();
        // 𝔎′(z_sw) = (1 - z_sw⁻²)(α + λ_s²/(1-λ_s²)), λ_s = e^{-η}
        let lam_s = (-spectral.beta0).exp();
        let b =
            spectral.params.alpha_s() + lam_s * lam_s / -(-F::lit(2.0) * spectral.beta0).exp_m1();
        let dk = (Complex::new(F::one(), F::zero()) - (z_sw * z_sw).inv()) * b;
        let pole = SurfacePole {
            k_sw: spectral.k_sw,
            eta: spectral.beta0,
            z_sw,
            dk,
        };
        Ok(Self {
            kernel,
            spectral: *spectral,
            pole,
            theta_b: branch_angle(spectral.omega),
            opts,
        })
    }

    pub fn kernel(&self) -> &Kernel<F> {
        &self.kernel
    }

    pub fn spectral(&self) -> &SpectralData<F> {
        &self.spectral
    }

    pub fn pole(&self) -> &SurfacePole<F> {
        &self.pole
    }

    pub fn theta_b(&self) -> F {
        self.theta_b
    }

    /// P(z) = c/(z - z_sw) + c̃/(z - 1/z_sw) with c = 1/𝔎′(z_sw), c̃ = -1/(𝔎′(z_sw) z_sw²).
    fn pole_part(&self, z: C<F>) -> C<F> {
        let c = self.pole.dk.inv();
        let zs = self.pole.z_sw;
        let ct = -(self.pole.dk * zs * zs).inv();
        c / (z - zs) + ct / (z - zs.inv())
    }

    /// λ(z) and 1/𝔎_s(z) from the exact factorisation
    /// 𝔎_s(z) = (z - z_sw)(z - 1/z_sw)/z · (α + λλ_s/(1 - λλ_s)),
    /// which follows from λ + 1/λ = Q and 𝔎_s(z_sw) = 0. Unlike λ + 𝔉_s it keeps full relative
    /// accuracy next to the surface poles.
    fn factored_inverse(&self, z: C<F>) -> (C<F>, C<F>) {
        let (h, r) = self.kernel.h_r(self.kernel.q(z));
        let lam = (r - h) / (r + h);
        let one = Complex::new(F::one(), F::zero());
        let lam_s = (-self.pole.eta).exp();
        // 1 - λλ_s = (1 - λ) + λ(1 - λ_s) with 1 - λ = 2h/(r+h)
        let gap = h * F::lit(2.0) / (r + h) + lam * -(-self.pole.eta).exp_m1();
        let b = one * self.kernel.params.alpha_s() + lam * lam_s / gap;
        let zs = self.pole.z_sw;
        let k = (z - zs) * (z - zs.inv()) / z * b;
        (lam, k.inv())
    }

    /// Quadrature points (θ, weight) on [0, π]; mirrored to [-π, 0] by the caller.
    ///
    /// The radiating arc [0, θ_b] and the first evanescent segment are graded quadratically
    /// toward the branch point. The subtracted pole k_sw sits at the centre of its own panel so
    /// that no node comes close to it (the remainder is evaluated by cancellation there), and
    /// panels beyond it grow geometrically away from it.
    fn half_rule(&self, freq: usize, refine: usize) -> Vec<(F, F)> {
        let gl = GaussLegendre::<F>::new(self.opts.order);
        let two = F::lit(2.0);
        let pi = F::PI();
        let tb = self.theta_b;
        let ks = self.pole.k_sw;
        let rate = F::from_usize_lossy(freq + 1);
        let max_len = self.opts.phase_per_panel / rate;
        let count = |len: F| -> usize {
            let n = (len / max_len)
                .ceil()
                .to_usize()
                .unwrap_or(1)
                .max(self.opts.min_panels);
            n * refine
        };
        let mut out = Vec::new();
        // θ = t0 + (t1-t0)u²; u-panels shrink geometrically toward u = 0 down to `first`
        let graded = |t0: F, t1: F, first: F, out: &mut Vec<(F, F)>| {
            let n = count((t1 - t0).abs() * two);
            let uniform = F::one() / F::from_usize_lossy(n);
            let mut edges = vec![F::zero()];
            let mut h = first.min(uniform);
            while h < uniform && *edges.last().unwrap() + h < uniform {
                edges.push(*edges.last().unwrap() + h);
                h = h * two;
            }
            let start = *edges.last().unwrap();
            let rest = ((F::one() - start) / uniform)
                .ceil()
                .to_usize()
                .unwrap_or(1)
                .max(1);
            for i in 1..=rest {
                edges.push(
                    start + (F::one() - start) * F::from_usize_lossy(i) / F::from_usize_lossy(rest),
                );
            }
            for e in edges.windows(2) {
                for (u, w) in gl.mapped(e[0], e[1]) {
                    out.push((t0 + (t1 - t0) * u * u, w * (two * (t1 - t0) * u).abs()));
                }
            }
        };
        // on the radiating arc the subtracted pole term is singular at u ≈ i√((k_sw-θ_b)/θ_b)
        let near = ((ks - tb) / tb).sqrt() / F::from_usize_lossy(refine);
        graded(tb, F::zero(), near, &mut out);
        let hw = ((ks - tb).min(pi - ks) * F::lit(0.5)).min(max_len * F::lit(0.5));
        graded(tb, ks - hw, F::one(), &mut out);
        // odd panel count keeps k_sw at a panel centre
        out.extend(gl.composite(ks - hw, ks + hw, 2 * refine - 1));
        let mut a = ks + hw;
        let mut len = two * hw / F::from_usize_lossy(refine);
        let cap = max_len / F::from_usize_lossy(refine);
        while a < pi {
            let mut b = a + len;
            if b > pi || pi - b < F::lit(0.5) * len {
                b = pi;
            }
            out.extend(gl.mapped(a, b));
            a = b;
            len = (len * two).min(cap);
        }
        out
    }

    fn nodes(&self, freq: usize, refine: usize) -> Vec<Node<F>> {
        let scale = F::lit(2.0) * F::PI();
        let half = self.half_rule(freq, refine);
        let mut out = Vec::with_capacity(2 * half.len());
        for sign in [F::one(), -F::one()] {
            for &(t, w) in &half {
                let theta = sign * t;
                let z = cis(theta);
                let (lambda, inv_k) = self.factored_inverse(z);
                out.push(Node {
                    theta,
                    weight: w / scale,
                    z,
                    lambda,
                    inv_k,
                    pole: self.pole_part(z),
                });
            }
        }
        out
    }

    /// Analytic contribution e^{-η|y|} c z_sw^{|x|-1}.
    fn pole_value(&self, ax: usize, ay: usize) -> C<F> {
        let c = self.pole.dk.inv();
        c * self.pole.z_sw.powi(ax as i32 - 1) * (-self.pole.eta * F::from_usize_lossy(ay)).exp()
    }

    fn value_with(&self, nodes: &[Node<F>], ax: usize, ay: usize) -> C<F> {
        let decay = (-self.pole.eta * F::from_usize_lossy(ay)).exp();
        let xf = F::from_usize_lossy(ax);
        let mut acc = Complex::new(F::zero(), F::zero());
        for nd in nodes {
            let lam = if ay == 0 {
                Complex::new(F::one(), F::zero())
            } else {
                nd.lambda.powi(ay as i32)
            };
            let rem = lam * nd.inv_k - nd.pole * decay;
            acc = acc + rem * cis(nd.theta * xf) * nd.weight;
        }
        acc + self.pole_value(ax, ay)
    }

    /// Single value 𝒢_{x,y}, y ≤ 0.
    pub fn value(&self, x: i64, y: i64) -> Result<C<F>> {
        if y > 0 {
            return Err(Error::DomainError {
                what: "depth y (must be <= 0)",
                value: y as f64,
            });
        }
        let (ax, ay) = (x.unsigned_abs() as usize, y.unsigned_abs() as usize);
        let v = self.value_with(&self.nodes(ax + ay, 1), ax, ay);
        if let Some(tol) = self.opts.verify_tol {
            let fine = self.value_with(&self.nodes(ax + ay, 2), ax, ay);
            if (fine - v).norm() > tol * fine.norm().max(F::one()) {
                return Err(Error::QuadratureNotConverged {
                    what: "radiating Green's function",
                    coarse: v.norm().as_f64(),
                    fine: fine.norm().as_f64(),
                });
            }
        }
        Ok(v)
    }

    fn boundary_sweep(&self, n: usize, refine: usize) -> Vec<C<F>> {
        let nodes = self.nodes(n.saturating_sub(1), refine);
        let weighted: Vec<(C<F>, C<F>)> = nodes
            .iter()
            .map(|nd| (nd.z, (nd.inv_k - nd.pole) * nd.weight))
            .collect();
        phasor_sums(&weighted, n)
            .into_iter()
            .enumerate()
            .map(|(x, v)| v + self.pole_value(x, 0))
            .collect()
    }

    /// 𝒢_{0..n-1,0}.
    pub fn boundary_table(&self, n: usize) -> Result<GreensTable<F>> {
        let n = n.max(1);
        let values = self.boundary_sweep(n, 1);
        if let Some(tol) = self.opts.verify_tol {
            let fine = self.boundary_sweep(n, 2);
            let scale = fine.iter().map(|v| v.norm()).fold(F::zero(), F::max);
            for (c, f) in values.iter().zip(&fine) {
                if (c - f).norm() > tol * scale {
                    return Err(Error::QuadratureNotConverged {
                        what: "radiating Green's table",
                        coarse: c.norm().as_f64(),
                        fine: f.norm().as_f64(),
                    });
                }
            }
        }
        let nodes = self.nodes(n - 1, 1).len();
        Ok(GreensTable::new(values, F::zero(), nodes))
    }
}

/// Tabulated Green's values keyed by (|x|, y).
#[derive(Debug, Clone, PartialEq)]
pub struct GreensTable<F = f64> {
    boundary: Vec<C<F>>,
    interior: BTreeMap<(u64, i64), C<F>>,
    pub epsilon: F,
    pub quadrature_nodes: usize,
}

impl<F: Real> GreensTable<F> {
    pub fn new(boundary: Vec<C<F>>, epsilon: F, quadrature_nodes: usize) -> Self {
        Self {
            boundary,
            interior: BTreeMap::new(),
            epsilon,
            quadrature_nodes,
        }
    }

    /// 𝒢_{x,0} for x = 0..len.
    pub fn boundary(&self) -> &[C<F>] {
        &self.boundary
    }

    pub fn len(&self) -> usize {
        self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundary.is_empty()
    }

    pub fn insert(&mut self, x: i64, y: i64, v: C<F>) {
        if y == 0 && (x.unsigned_abs() as usize) < self.boundary.len() {
            self.boundary[x.unsigned_abs() as usize] = v;
        } else {
            self.interior.insert((x.unsigned_abs(), y), v);
        }
    }

    pub fn get(&self, x: i64, y: i64) -> Option<C<F>> {
        let ax = x.unsigned_abs();
        if y == 0 {
            if let Some(v) = self.boundary.get(ax as usize) {
                return Some(*v);
            }
        }
        self.interior.get(&(ax, y)).copied()
    }

    /// Writes `x,y,re,im` rows after `#` header lines carrying the cache key.
    pub fn write_cache<W: Write>(
        &self,
        mut w: W,
        params: &SurfaceParams<F>,
        omega: F,
    ) -> std::io::Result<()> {
        let mut head = String::new();
        let _ = writeln!(head, "# m_s={:.17e}", params.m_s().as_f64());
        let _ = writeln!(head, "# alpha_s={:.17e}", params.alpha_s().as_f64());
        let _ = writeln!(head, "# omega={:.17e}", omega.as_f64());
        let _ = writeln!(head, "# epsilon={:.17e}", self.epsilon.as_f64());
        let _ = writeln!(head, "# n_nodes={}", self.quadrature_nodes);
        w.write_all(head.as_bytes())?;
        writeln!(w, "x,y,re,im")?;
        for (x, v) in self.boundary.iter().enumerate() {
            writeln!(w, "{},0,{:.17e},{:.17e}", x, v.re.as_f64(), v.im.as_f64())?;
        }
        for ((x, y), v) in &self.interior {
            writeln!(
                w,
                "{},{},{:.17e},{:.17e}",
                x,
                y,
                v.re.as_f64(),
                v.im.as_f64()
            )?;
        }
        Ok(())
    }

    /// Reads a cache written by [`GreensTable::write_cache`]; returns the table and its key.
    pub fn read_cache<R: BufRead>(r: R) -> std::io::Result<(Self, CacheKey)> {
        let bad = |m: String| std::io::Error::new(std::io::ErrorKind::InvalidData, m);
        let mut key = CacheKey::default();
        let mut rows: Vec<(u64, i64, C<F>)> = Vec::new();
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(h) = line.strip_prefix('#') {
                if let Some((k, v)) = h.trim().split_once('=') {
                    let parse = |s: &str| {
                        s.trim()
                            .parse::<f64>()
                            .map_err(|e| bad(format!("{k}: {e}")))
                    };
                    match k.trim() {
                        "m_s" => key.m_s = parse(v)?,
                        "alpha_s" => key.alpha_s = parse(v)?,
                        "omega" => key.omega = parse(v)?,
                        "epsilon" => key.epsilon = parse(v)?,
                        "n_nodes" => {
                            key.n_nodes =
                                v.trim().parse().map_err(|e| bad(format!("n_nodes: {e}")))?
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if line.starts_with("x,") {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad(format!("expected 4 columns, got {}", f.len())));
            }
            let x: u64 = f[0].parse().map_err(|e| bad(format!("x: {e}")))?;
            let y: i64 = f[1].parse().map_err(|e| bad(format!("y: {e}")))?;
            let re: f64 = f[2].parse().map_err(|e| bad(format!("re: {e}")))?;
            let im: f64 = f[3].parse().map_err(|e| bad(format!("im: {e}")))?;
            rows.push((x, y, Complex::new(F::lit(re), F::lit(im))));
        }
        let mut boundary: Vec<(u64, C<F>)> = rows
            .iter()
            .filter(|r| r.1 == 0)
            .map(|r| (r.0, r.2))
            .collect();
        boundary.sort_by_key(|r| r.0);
        if boundary.iter().enumerate().any(|(i, r)| r.0 != i as u64) {
            return Err(bad("boundary rows must cover x = 0..n without gaps".into()));
        }
        let mut table = GreensTable::new(
            boundary.into_iter().map(|r| r.1).collect(),
            F::lit(key.epsilon),
            key.n_nodes,
        );
        for (x, y, v) in rows.into_iter().filter(|r| r.1 != 0) {
            table.interior.insert((x, y), v);
        }
        Ok((table, key))
    }
}

/// Parameters a cached table was built for.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CacheKey {
    pub m_s: f64,
    pub alpha_s: f64,
    pub omega: f64,
    pub epsilon: f64,
    pub n_nodes: usize,
}
