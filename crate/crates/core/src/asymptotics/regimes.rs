//! Closed forms in the weak (L̃ ≪ 1) and strong (L̃ ≫ 1) scattering regimes.

use crate::error::{Error, Result};
use crate::quad::adaptive_semi_infinite;
use crate::scalar::Real;
use crate::special::exp_scaled_e1;

/// Second-order expansions in L̃.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakRegime<F = f64> {
    pub mean_r2: F,
    pub mean_t2: F,
    pub mean_r4: F,
    pub mean_t4: F,
    pub mean_r2t2: F,
    pub mean_d: F,
    /// Leading-order term Λ̃L̃ alone.
    pub mean_d_leading: F,
    pub var_d: F,
}

/// L̃ → ∞ limits (|T| → 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongRegime<F = f64> {
    pub mean_r2: F,
    pub mean_d: F,
    pub var_d: F,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeFormulas<F = f64> {
    pub lambda_tilde: F,
    pub l_tilde: F,
    pub weak: WeakRegime<F>,
    pub strong: StrongRegime<F>,
    /// E|T|² with no radiative coupling, at this L̃.
    pub lambda_zero_t2: F,
}

fn check_lambda<F: Real>(lambda_tilde: F) -> Result<()> {
    if lambda_tilde > F::zero() && lambda_tilde.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainError {
            what: "Lambda~",
            value: lambda_tilde.as_f64(),
        })
    }
}

pub fn weak_regime<F: Real>(lambda_tilde: F, l_tilde: F) -> WeakRegime<F> {
    let (a, l) = (lambda_tilde, l_tilde);
    let one = F::one();
    let two = F::lit(2.0);
    let half = F::lit(0.5);
    let l2 = l * l;
    WeakRegime {
        mean_r2: l - (one + a) * l2,
        mean_t2: one - (one + a) * l + (one + a + half * a * a) * l2,
        mean_r4: two * l2,
        mean_t4: one - two * (one + a) * l + (F::lit(4.0) + F::lit(4.0) * a + two * a * a) * l2,
        mean_r2t2: l - (F::lit(3.0) + two * a) * l2,
        mean_d: a * l - half * a * a * l2,
        mean_d_leading: a * l,
        var_d: a * a * l2 * l2 / F::lit(3.0),
    }
}

/// Strong-regime E[𝒟] = x eˣ E₁(x), x = 2Λ̃.
pub fn strong_mean_loss<F: Real>(lambda_tilde: F) -> Result<F> {
    check_lambda(lambda_tilde)?;
    let x = F::lit(2.0) * lambda_tilde;
    Ok(x * exp_scaled_e1(x)?)
}

/// Strong-regime Var(𝒟) = (1 - E𝒟)(1 + 2Λ̃ + E𝒟) - 1.
pub fn strong_var_loss<F: Real>(lambda_tilde: F) -> Result<F> {
    let e = strong_mean_loss(lambda_tilde)?;
    Ok((F::one() - e) * (F::one() + F::lit(2.0) * lambda_tilde + e) - F::one())
}

/// Strong-regime E|R|^{2p} = Λ̃ ∫₀^∞ (s/(2+s))^p e^{-Λ̃s} ds.
pub fn strong_moment_r<F: Real>(lambda_tilde: F, p: u32) -> Result<F> {
    check_lambda(lambda_tilde)?;
    let pi = p as i32;
    adaptive_semi_infinite(
        |s: F| (s / (F::lit(2.0) + s)).powi(pi) * (-lambda_tilde * s).exp() * lambda_tilde,
        F::zero(),
        F::lit(1e-14),
        F::lit(1e-12),
    )
}

/// E|T|² without radiative loss: e^{-L̃/4} ∫₀^∞ e^{-s²L̃} 2πs sinh(πs)/cosh²(πs) ds.
pub fn lambda_zero_transmittance<F: Real>(l_tilde: F) -> Result<F> {
    if !(l_tilde >= F::zero() && l_tilde.is_finite()) {
        return Err(Error::DomainError {
            what: "L~",
            value: l_tilde.as_f64(),
        });
    }
    let pi = F::PI();
    let integral = adaptive_semi_infinite(
        |s: F| {
            let ps = pi * s;
            // sinh/cosh² = tanh·sech, finite for large s
            F::lit(2.0) * ps * ps.tanh() / ps.cosh() * (-s * s * l_tilde).exp()
        },
        F::zero(),
        F::lit(1e-15),
        F::lit(1e-13),
    )?;
    Ok((-l_tilde * F::lit(0.25)).exp() * integral)
}

pub fn regime_formulas<F: Real>(lambda_tilde: F, l_tilde: F) -> Result<RegimeFormulas<F>> {
    check_lambda(lambda_tilde)?;
    let mean_d = strong_mean_loss(lambda_tilde)?;
    Ok(RegimeFormulas {
        lambda_tilde,
        l_tilde,
        weak: weak_regime(lambda_tilde, l_tilde),
        strong: StrongRegime {
            mean_r2: F::one() - mean_d,
            mean_d,
            var_d: strong_var_loss(lambda_tilde)?,
        },
        lambda_zero_t2: lambda_zero_transmittance(l_tilde)?,
    })
}
