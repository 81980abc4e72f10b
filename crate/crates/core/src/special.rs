//! Exponential integral E1.

use crate::error::{Error, Result};
use crate::scalar::Real;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const MAX_ITER: usize = 500;

/// E1(x) = ∫₁^∞ e^{-xt}/t dt for x > 0.
///
/// Power series for x ≤ 1, modified Lentz continued fraction above.
pub fn exp_integral_e1<F: Real>(x: F) -> Result<F> {
    check_domain(x)?;
    if x <= F::one() {
        Ok(e1_series(x))
    } else {
        Ok(e1_scaled_cf(x) * (-x).exp())
    }
}

/// e^x E1(x), evaluated without overflow for large x.
pub fn exp_scaled_e1<F: Real>(x: F) -> Result<F> {
    check_domain(x)?;
    if x <= F::one() {
        Ok(e1_series(x) * x.exp())
    } else {
        Ok(e1_scaled_cf(x))
    }
}

fn check_domain<F: Real>(x: F) -> Result<()> {
    if x > F::zero() && x.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainError {
            what: "E1 argument",
            value: x.as_f64(),
        })
    }
}

fn e1_series<F: Real>(x: F) -> F {
    // -gamma - ln x + sum_{k>=1} (-1)^{k+1} x^k / (k k!)
    let mut sum = F::zero();
    let mut fact_term = F::one(); // (-1)^{k+1} x^k / k!
    for k in 1..MAX_ITER {
        let kf = F::from_usize_lossy(k);
        fact_term = if k == 1 { x } else { -fact_term * x / kf };
        let term = fact_term / kf;
        sum = sum + term;
        if term.abs() <= sum.abs() * F::epsilon() {
            break;
        }
    }
    -F::lit(EULER_GAMMA) - x.ln() + sum
}

fn e1_scaled_cf<F: Real>(x: F) -> F {
    let tiny = F::min_positive_value() / F::epsilon();
    let two = F::lit(2.0);
    let mut b = x + F::one();
    let mut c = F::one() / tiny;
    let mut d = F::one() / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let fi = F::from_usize_lossy(i);
        let an = -fi * fi;
        b = b + two;
        d = F::one() / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h = h * del;
        if (del - F::one()).abs() <= F::epsilon() {
            break;
        }
    }
    h
}
