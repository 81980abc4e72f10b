//! Gauss–Legendre rules and adaptive Gauss–Kronrod integration.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre<F> {
    nodes: Vec<F>,
    weights: Vec<F>,
}

impl<F: Real> GaussLegendre<F> {
    /// Nodes by Newton iteration on the three-term recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![F::zero(); n];
        let mut weights = vec![F::zero(); n];
        let half = n.div_ceil(2);
        let nf = F::from_usize_lossy(n);
        let pi = F::PI();
        let quarter = F::lit(0.25);
        let half_f = F::lit(0.5);
        for i in 0..half {
            let fi = F::from_usize_lossy(i);
            let mut x = (pi * (fi + F::one() - quarter) / (nf + half_f)).cos();
            let mut dp = F::one();
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x = x - dx;
                if dx.abs() <= F::epsilon() * F::lit(4.0) {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != F::zero() {
                dp = d;
            }
            let w = F::lit(2.0) / ((F::one() - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[F] {
        &self.nodes
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: F, b: F) -> impl Iterator<Item = (F, F)> + '_ {
        let half = (b - a) * F::lit(0.5);
        let mid = (a + b) * F::lit(0.5);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// Composite rule: `panels` equal panels on [a, b].
    pub fn composite(&self, a: F, b: F, panels: usize) -> Vec<(F, F)> {
        let panels = panels.max(1);
        let h = (b - a) / F::from_usize_lossy(panels);
        let mut out = Vec::with_capacity(panels * self.order());
        for p in 0..panels {
            let lo = a + h * F::from_usize_lossy(p);
            out.extend(self.mapped(lo, lo + h));
        }
        out
    }

    pub fn integrate(&self, a: F, b: F, mut f: impl FnMut(F) -> F) -> F {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre<F: Real>(n: usize, x: F) -> (F, F) {
    let mut p0 = F::one();
    let mut p1 = x;
    for k in 2..=n {
        let kf = F::from_usize_lossy(k);
        let p2 = ((F::lit(2.0) * kf - F::one()) * x * p1 - (kf - F::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (F::one(), F::zero());
    }
    let nf = F::from_usize_lossy(n);
    let dp = nf * (x * p1 - p0) / (x * x - F::one());
    (p1, dp)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Real>(f: &mut impl FnMut(F) -> F, a: F, b: F) -> (F, F) {
    let half = (b - a) * F::lit(0.5);
    let mid = (a + b) * F::lit(0.5);
    let fc = f(mid);
    let mut kron = fc * F::lit(WGK[7]);
    let mut gauss = fc * F::lit(WG[3]);
    for j in 0..7 {
        let dx = half * F::lit(XGK[j]);
        let s = f(mid - dx) + f(mid + dx);
        kron = kron + s * F::lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + s * F::lit(WG[j / 2]);
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

/// Adaptive G7K15 on [a, b]. Intervals are bisected until each local error
/// estimate is below its share of `max(abs_tol, rel_tol * |I|)`.
pub fn adaptive<F: Real>(
    mut f: impl FnMut(F) -> F,
    a: F,
    b: F,
    abs_tol: F,
    rel_tol: F,
) -> Result<F> {
    const MAX_INTERVALS: usize = 20_000;
    let (i0, e0) = gk15(&mut f, a, b);
    let mut intervals = vec![(a, b, i0, e0)];
    let mut total = i0;
    let mut err = e0;
    while err > abs_tol.max(rel_tol * total.abs()) {
        if intervals.len() >= MAX_INTERVALS {
            return Err(Error::QuadratureNotConverged {
                what: "adaptive Gauss-Kronrod",
                coarse: total.as_f64(),
                fine: err.as_f64(),
            });
        }
        // split the interval with the largest error
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .fold((0, F::neg_infinity()), |acc, (i, iv)| {
                if iv.3 > acc.1 {
                    (i, iv.3)
                } else {
                    acc
                }
            });
        let (lo, hi, iv, ev) = intervals.swap_remove(idx);
        let mid = (lo + hi) * F::lit(0.5);
        let (il, el) = gk15(&mut f, lo, mid);
        let (ir, er) = gk15(&mut f, mid, hi);
        total = total - iv + il + ir;
        err = err - ev + el + er;
        intervals.push((lo, mid, il, el));
        intervals.push((mid, hi, ir, er));
    }
    // re-sum to shed drift from the running updates
    Ok(intervals.iter().map(|iv| iv.2).sum())
}

/// Adaptive integration over [a, ∞) via t = a + u/(1-u).
pub fn adaptive_semi_infinite<F: Real>(
    mut f: impl FnMut(F) -> F,
    a: F,
    abs_tol: F,
    rel_tol: F,
) -> Result<F> {
    adaptive(
        |u: F| {
            let one_minus = F::one() - u;
            if one_minus <= F::zero() {
                return F::zero();
            }
            let t = a + u / one_minus;
            let v = f(t) / (one_minus * one_minus);
            if v.is_finite() {
                v
            } else {
                F::zero()
            }
        },
        F::zero(),
        F::one(),
        abs_tol,
        rel_tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        for n in [1usize, 2, 5, 16, 32, 64] {
            let gl = GaussLegendre::<f64>::new(n);
            for deg in 0..(2 * n) {
                let got = gl.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
                let want = if deg % 2 == 1 {
                    0.0
                } else {
                    2.0 / (deg as f64 + 1.0)
                };
                assert!(
                    (got - want).abs() < 1e-13,
                    "n={n} deg={deg}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn weights_sum_to_two_and_nodes_sorted() {
        let gl = GaussLegendre::<f64>::new(47);
        let s: f64 = gl.weights().iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        assert!(gl.nodes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn composite_matches_exact() {
        let gl = GaussLegendre::<f64>::new(8);
        let s: f64 = gl
            .composite(0.0, 10.0, 20)
            .into_iter()
            .map(|(x, w)| w * x.sin())
            .sum();
        assert!((s - (1.0 - 10.0_f64.cos())).abs() < 1e-13);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let got = adaptive(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-12, 1e-12).unwrap();
        assert!((got - 2.0).abs() < 1e-9);
    }

    #[test]
    fn semi_infinite_gaussian() {
        let got = adaptive_semi_infinite(|x: f64| (-x * x).exp(), 0.0, 1e-13, 1e-13).unwrap();
        assert!((got - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-11);
    }

    #[test]
    fn f32_rule() {
        let gl = GaussLegendre::<f32>::new(10);
        let got = gl.integrate(0.0, 1.0, |x| x * x);
        assert!((got - 1.0 / 3.0).abs() < 1e-6);
    }
}
