use gmsurf::greens::{rho0_via_kernel, rho_via_kernel, Kernel};
use gmsurf::spectrum::{
    eigenfunction_samples, omega_max, resolvent, solve_dispersion, solve_inverse_dispersion,
    spectral_data, SurfaceParams,
};
use gmsurf::Error;
use num_complex::Complex;
use std::f64::consts::PI;

fn p() -> SurfaceParams {
    SurfaceParams::new(2.0, 1.3).unwrap()
}

/// Independent oracle: 2x2 Newton on the raw coupled equations from a crude start.
fn newton_dispersion(m: f64, a: f64, k: f64) -> (f64, f64) {
    let s = (k / 2.0).sin().powi(2);
    let (mut w, mut e) = (1.0_f64, 0.5_f64);
    for _ in 0..200 {
        let r1 = w * w - 4.0 * s - 2.0 + 2.0 * e.cosh();
        let r2 = m * w * w - 4.0 * a * s - 1.0 + (-e).exp();
        let (j11, j12, j21, j22) = (2.0 * w, 2.0 * e.sinh(), 2.0 * m * w, -(-e).exp());
        let det = j11 * j22 - j12 * j21;
        let dw = (r1 * j22 - r2 * j12) / det;
        let de = (j11 * r2 - j21 * r1) / det;
        w -= 0.5 * dw;
        e -= 0.5 * de;
        if e <= 0.0 {
            e = 1e-3;
        }
    }
    (w, e)
}

#[test]
fn omega_max_closed_form_and_root_finding_agree() {
    let wmax = omega_max(&p()).unwrap();
    assert!((wmax - 1.707_600_330_908_031).abs() < 1e-12);
    assert!((wmax - 1.70759).abs() < 1e-4);
    assert!(wmax < 2.0);
    // ω(k) as k → π
    let (w_pi, _) = newton_dispersion(2.0, 1.3, PI - 1e-7);
    assert!((w_pi - wmax).abs() < 1e-9, "{w_pi} vs {wmax}");
}

#[test]
fn no_surface_band_for_equal_constants() {
    let q = SurfaceParams::new(1.0, 1.0).unwrap();
    assert!(matches!(omega_max(&q), Err(Error::NoSurfaceBand { .. })));
    assert!(matches!(
        solve_dispersion(&q, 1.0),
        Err(Error::NoSurfaceBand { .. })
    ));
    assert!(matches!(
        spectral_data(&q, 0.5),
        Err(Error::NoSurfaceBand { .. })
    ));
}

#[test]
fn dispersion_at_quarter_wavenumber() {
    let d = solve_dispersion(&p(), PI / 2.0).unwrap();
    // quadratic in t = e^η with ω² eliminated
    let s = 0.5_f64;
    let b = 2.0 * (4.0 * s + 2.0) - 4.0 * 1.3 * s - 1.0;
    let t = (b + (b * b - 4.0 * 2.0).sqrt()) / 4.0;
    let w = (4.0 * s + 2.0 - t - 1.0 / t).sqrt();
    assert!((d.omega - w).abs() < 1e-13);
    assert!((d.eta - t.ln()).abs() < 1e-13);
    assert!((d.omega - 1.24202).abs() < 1e-5);
    let (r1, r2) = gmsurf::spectrum::dispersion_residuals(&p(), d.k_sw, d.omega, d.eta);
    assert!(r1.abs() < 1e-12 && r2.abs() < 1e-12);
}

#[test]
fn dispersion_symmetry_in_k() {
    let a = solve_dispersion(&p(), PI / 2.0).unwrap();
    let b = solve_dispersion(&p(), -PI / 2.0).unwrap();
    assert_eq!(a.omega, b.omega);
    assert_eq!(a.eta, b.eta);
    assert_eq!(a.v_group, -b.v_group);
    assert!(a.v_group > 0.0);
}

#[test]
fn group_velocity_matches_finite_difference() {
    let k = PI / 2.0;
    let h = 1e-5;
    let fd = (solve_dispersion(&p(), k + h).unwrap().omega
        - solve_dispersion(&p(), k - h).unwrap().omega)
        / (2.0 * h);
    let v = solve_dispersion(&p(), k).unwrap().v_group;
    assert!((fd - v).abs() < 1e-6, "{fd} vs {v}");
}

#[test]
fn dispersion_rejects_bad_wavenumbers() {
    assert!(solve_dispersion(&p(), 0.0).is_err());
    assert!(solve_dispersion(&p(), PI).is_err());
    assert!(solve_dispersion(&p(), -4.0).is_err());
}

#[test]
fn inverse_dispersion_round_trip() {
    for k in [0.3, 1.0, 2.5] {
        let w = solve_dispersion(&p(), k).unwrap().omega;
        let back = solve_inverse_dispersion(&p(), w).unwrap();
        assert!((back.k_sw - k).abs() < 1e-10, "k={k}: {}", back.k_sw);
    }
}

#[test]
fn inverse_dispersion_at_half_band() {
    let wmax = omega_max(&p()).unwrap();
    let d = solve_inverse_dispersion(&p(), 0.5 * wmax).unwrap();
    let (r1, r2) = gmsurf::spectrum::dispersion_residuals(&p(), d.k_sw, d.omega, d.eta);
    assert!(r1.abs() < 1e-12 && r2.abs() < 1e-12);
    assert!(d.k_sw > 0.0 && d.k_sw < PI);
    assert!((d.k_sw - 0.974_617_636_110_384).abs() < 1e-10);
}

#[test]
fn inverse_dispersion_out_of_band() {
    let wmax = omega_max(&p()).unwrap();
    assert!(matches!(
        solve_inverse_dispersion(&p(), 1.01 * wmax),
        Err(Error::FrequencyOutOfBand { .. })
    ));
    assert!(matches!(
        solve_inverse_dispersion(&p(), -0.1),
        Err(Error::FrequencyOutOfBand { .. })
    ));
}

#[test]
fn band_is_monotone() {
    let mut prev = 0.0;
    for i in 1..=100 {
        let k = PI * i as f64 / 101.0;
        let w = solve_dispersion(&p(), k).unwrap().omega;
        assert!(w > prev);
        prev = w;
    }
}

#[test]
fn spectral_data_matches_dispersion() {
    let wmax = omega_max(&p()).unwrap();
    for frac in [0.1, 0.5, 0.9] {
        let sd = spectral_data(&p(), frac * wmax).unwrap();
        let d = solve_inverse_dispersion(&p(), frac * wmax).unwrap();
        assert!((sd.k_sw - d.k_sw).abs() < 1e-10);
        assert!((sd.beta0 - d.eta).abs() < 1e-10);
        assert!(sd.gamma0 > sd.omega_sq());
        // both eigen-relations
        let w2 = sd.omega_sq();
        assert!((sd.gamma0 - (w2 - 2.0 + 2.0 * sd.beta0.cosh())).abs() < 1e-12);
        assert!((2.0 * w2 - 1.3 * sd.gamma0 - 1.0 + (-sd.beta0).exp()).abs() < 1e-12);
        assert!((sd.rho0 - 1.0 / (1.3 + 1.0 / ((2.0 * sd.beta0).exp() - 1.0))).abs() < 1e-14);
    }
}

#[test]
fn rho0_three_routes_agree() {
    let wmax = omega_max(&p()).unwrap();
    for frac in [0.2, 0.5, 0.8] {
        let w = frac * wmax;
        let sd = spectral_data(&p(), w).unwrap();
        let via_kernel = rho0_via_kernel(&p(), w, sd.k_sw).unwrap();
        let via_residue = resolvent::rho0_residue(&p(), w, 256).unwrap();
        assert!(
            (via_kernel - sd.rho0).abs() < 1e-10,
            "{via_kernel} vs {}",
            sd.rho0
        );
        assert!(
            (via_residue - sd.rho0).abs() < 1e-10,
            "{via_residue} vs {}",
            sd.rho0
        );
        let g0 = resolvent::gamma0(&p(), w).unwrap();
        assert!((g0 - sd.gamma0).abs() < 1e-11);
    }
}

#[test]
fn rho_continuum_routes_agree() {
    let w = 0.5 * omega_max(&p()).unwrap();
    let sd = spectral_data(&p(), w).unwrap();
    let w2 = sd.omega_sq();
    for i in 1..=5 {
        let g = w2 * i as f64 / 6.0;
        let a = sd.rho(g);
        assert!(a > 0.0);
        let b = rho_via_kernel(&p(), w, g).unwrap();
        assert!((a - b).abs() < 1e-8, "γ={g}: {a} vs {b}");
        let c = resolvent::rho_jump(&p(), w, g, 1e-5);
        assert!((a - c).abs() < 1e-8, "γ={g}: {a} vs {c}");
    }
    // evanescent part of the continuum
    for g in [w2 - 3.5, w2 - 2.0, -0.1] {
        assert!((sd.rho(g) - rho_via_kernel(&p(), w, g).unwrap()).abs() < 1e-8);
    }
}

#[test]
fn discrete_eigenfunction_is_exponential() {
    let w = 0.5 * omega_max(&p()).unwrap();
    let sd = spectral_data(&p(), w).unwrap();
    let psi = eigenfunction_samples(&p(), w, sd.gamma0, 30).unwrap();
    assert_eq!(psi[0], 1.0);
    for (d, v) in psi.iter().enumerate() {
        assert!((v - (-sd.beta0 * d as f64).exp()).abs() < 1e-15);
    }
    assert!(psi.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn continuum_eigenfunction_bounds() {
    let w = 0.5 * omega_max(&p()).unwrap();
    let sd = spectral_data(&p(), w).unwrap();
    let w2 = sd.omega_sq();
    for i in 1..20 {
        let g = w2 - 4.0 + 4.0 * i as f64 / 20.0;
        let psi = sd.eigenfunction(g, 500).unwrap();
        assert!((psi[0] - 1.0).abs() < 1e-12);
        let zeta = sd.zeta_of_gamma(g);
        let f = (2.0 * w2 - 1.3 * g - 1.0).abs();
        let exact = sd.eigenfunction_bound(g);
        let loose = (1.0 + f) / zeta.sin();
        for v in &psi {
            assert!(v.abs() <= exact * (1.0 + 1e-10) + 1e-12);
            assert!(v.abs() <= loose);
        }
    }
}

#[test]
fn eigenfunction_rejects_out_of_spectrum() {
    let w = 0.5 * omega_max(&p()).unwrap();
    let sd = spectral_data(&p(), w).unwrap();
    assert!(matches!(
        sd.eigenfunction(sd.omega_sq() + 0.01, 5),
        Err(Error::GammaOutOfSpectrum { .. })
    ));
    assert!(eigenfunction_samples(&p(), w, sd.gamma0, 0).is_err());
}

#[test]
fn discrete_mode_is_normalized() {
    let w = 0.5 * omega_max(&p()).unwrap();
    let sd = spectral_data(&p(), w).unwrap();
    let norm = |depth: usize| {
        let psi = sd.eigenfunction(sd.gamma0, depth).unwrap();
        sd.rho0 * (1.3 * psi[0] * psi[0] + psi[1..].iter().map(|v| v * v).sum::<f64>())
    };
    let e10 = (norm(10) - 1.0).abs();
    let e2000 = (norm(2000) - 1.0).abs();
    assert!(e2000 < 1e-4);
    assert!(e2000 < e10);
}

#[test]
fn parseval_for_compact_vectors() {
    let w = 0.5 * omega_max(&p()).unwrap();
    let sd = spectral_data(&p(), w).unwrap();
    let u: Vec<Complex<f64>> = (0..12)
        .map(|d| Complex::new(((d * 7 + 3) % 5) as f64 - 2.0, 0.3 * d as f64 - 1.0))
        .collect();
    let parts = sd.parseval_parts(&u, 2000);
    assert!(parts.defect() < 1e-3 * parts.norm_sq, "{parts:?}");
}

#[test]
fn kernel_root_matches_dispersion() {
    let w = 0.5 * omega_max(&p()).unwrap();
    let d = solve_inverse_dispersion(&p(), w).unwrap();
    let ker = Kernel::new(p(), w, 0.0).unwrap();
    let k = gmsurf::greens::kernel_root(&ker).unwrap();
    assert!((k - d.k_sw).abs() < 1e-9);
}
