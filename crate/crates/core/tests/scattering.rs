use gmsurf::greens::{GreensOptions, Kernel, RadiatingGreens};
use gmsurf::scattering::{
    radiated_flux, solve_patch, transmission_reciprocity_check, Normalization, PerturbationPatch,
    ScatteringSolver, SolverSettings,
};
use gmsurf::spectrum::{omega_max, spectral_data, SurfaceParams};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn p() -> SurfaceParams {
    SurfaceParams::new(2.0, 1.3).unwrap()
}

fn wmax() -> f64 {
    omega_max(&p()).unwrap()
}

fn audited() -> SolverSettings {
    SolverSettings {
        audit: true,
        ..SolverSettings::default()
    }
}

fn random_patch(rng: &mut ChaCha8Rng, len: usize, sigma: f64) -> PerturbationPatch {
    let h = 3f64.sqrt() * sigma;
    PerturbationPatch::new((0..len).map(|_| rng.random_range(-h..h)).collect()).unwrap()
}

#[test]
fn unperturbed_patch_is_transparent() {
    let solver = ScatteringSolver::new(&p(), 0.5 * wmax(), audited(), 100).unwrap();
    for len in [1, 7, 100] {
        let r = solver
            .solve(&PerturbationPatch::zeros(len).unwrap())
            .unwrap();
        assert_eq!(r.r, Complex::new(0.0, 0.0));
        assert_eq!(r.t, Complex::new(1.0, 0.0));
        assert_eq!(r.d, 0.0);
        let e = r.energy.unwrap();
        assert_eq!(e.e_r, 0.0);
        assert_eq!(e.e_half, 0.0);
        assert_eq!(e.e_t, e.e_inc);
    }
}

#[test]
fn single_site_matches_scalar_reduction() {
    let w = 0.5 * wmax();
    let mu = 0.1;
    let res = solve_patch(
        &p(),
        w,
        &PerturbationPatch::new(vec![mu]).unwrap(),
        audited(),
    )
    .unwrap();
    // scalar oracle built from its own Green's value and kernel derivative
    let sd = spectral_data(&p(), w).unwrap();
    let g0 = RadiatingGreens::new(&p(), w, GreensOptions::default())
        .unwrap()
        .value(0, 0)
        .unwrap();
    let z = Complex::from_polar(1.0, sd.k_sw);
    let dk = Kernel::new(p(), w, 0.0).unwrap().derivative(z);
    let d = -2.0 * w * w * mu;
    let a = sd.rho0.sqrt();
    let uhat = z * a;
    let u1 = uhat + g0 * d * uhat / (1.0 - g0 * d);
    let c0 = 1.0 / (z * dk);
    let r = c0 * uhat * d * u1 / (a * a);
    let t = 1.0 + c0 * uhat.conj() * d * u1 / (a * a);
    assert!((res.r - r).norm() < 1e-12, "{} vs {r}", res.r);
    assert!((res.t - t).norm() < 1e-12, "{} vs {t}", res.t);
    assert!(res.energy_residual < 1e-6, "{}", res.energy_residual);
}

#[test]
fn energy_balance_on_random_patches() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for frac in [0.2, 0.5, 0.8] {
        let solver = ScatteringSolver::new(&p(), frac * wmax(), audited(), 40).unwrap();
        for _ in 0..20 {
            let len = rng.random_range(1..=40);
            let patch = random_patch(&mut rng, len, 0.05);
            let res = solver.solve(&patch).unwrap();
            let e = res.energy.unwrap();
            assert!(
                e.balance_defect().abs() < 1e-6,
                "ω/ωmax={frac} L={len}: {}",
                e.balance_defect()
            );
            assert!(res.r.norm_sqr() + res.t.norm_sqr() <= 1.0 + 1e-9);
        }
    }
}

#[test]
fn work_functional_two_ways() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let solver = ScatteringSolver::new(&p(), 0.5 * wmax(), audited(), 10).unwrap();
    for _ in 0..5 {
        let patch = random_patch(&mut rng, 10, 0.1);
        let e = solver.solve(&patch).unwrap().energy.unwrap();
        assert!(
            (e.w_contour - e.w_direct).abs() < 1e-6 * e.e_inc,
            "{} vs {}",
            e.w_contour,
            e.w_direct
        );
    }
}

#[test]
fn free_function_flux_matches_solver() {
    let w = 0.5 * wmax();
    let patch = PerturbationPatch::new(vec![0.05, -0.08, 0.02]).unwrap();
    let res = solve_patch(&p(), w, &patch, audited()).unwrap();
    let e = radiated_flux(&p(), w, &patch, &res, SolverSettings::default()).unwrap();
    assert!((e.e_half - res.energy.unwrap().e_half).abs() < 1e-14);
}

#[test]
fn reciprocity_of_transmission() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let solver = ScatteringSolver::new(&p(), 0.6 * wmax(), SolverSettings::default(), 30).unwrap();
    for _ in 0..10 {
        let patch = random_patch(&mut rng, 30, 0.1);
        assert!(transmission_reciprocity_check(&solver, &patch).unwrap() < 1e-10);
    }
    assert_eq!(
        transmission_reciprocity_check(&solver, &PerturbationPatch::zeros(5).unwrap()).unwrap(),
        0.0
    );
    let pal = PerturbationPatch::new(vec![0.1, -0.2, 0.3, -0.2, 0.1]).unwrap();
    assert!(transmission_reciprocity_check(&solver, &pal).unwrap() < 1e-15);
}

#[test]
fn amplitude_convention_does_not_change_coefficients() {
    let w = 0.4 * wmax();
    let patch = PerturbationPatch::new(vec![0.1, -0.05, 0.2, 0.0, -0.1]).unwrap();
    let a = solve_patch(&p(), w, &patch, SolverSettings::default()).unwrap();
    let unit = SolverSettings {
        normalization: Normalization::Unit,
        ..SolverSettings::default()
    };
    let b = solve_patch(&p(), w, &patch, unit).unwrap();
    assert!((a.r - b.r).norm() < 1e-13);
    assert!((a.t - b.t).norm() < 1e-13);
}

#[test]
fn reflection_is_linear_for_small_perturbations() {
    let w = 0.5 * wmax();
    let sd = spectral_data(&p(), w).unwrap();
    let z = Complex::from_polar(1.0, sd.k_sw);
    let dk = Kernel::new(p(), w, 0.0).unwrap().derivative(z);
    // Born slope dR/dμ = -m ω² z_sw² /(z_sw 𝔎′)
    let born = -2.0 * w * w * z * z / (z * dk);
    let solver = ScatteringSolver::new(&p(), w, SolverSettings::default(), 1).unwrap();
    let mut errs = vec![];
    for mu in [1e-3, 1e-4] {
        let r = solver
            .solve(&PerturbationPatch::new(vec![mu]).unwrap())
            .unwrap()
            .r;
        errs.push((r / mu - born).norm());
    }
    assert!(errs[1] < 0.2 * errs[0]);
    assert!(errs[1] < 1e-3 * born.norm());
}

#[test]
fn transmittance_limits_across_band() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let patch = random_patch(&mut rng, 40, 0.05);
    let t2 = |frac: f64| {
        solve_patch(&p(), frac * wmax(), &patch, SolverSettings::default())
            .unwrap()
            .t
            .norm_sqr()
    };
    let low = t2(0.02);
    let high = t2(0.998);
    assert!(low > 0.999, "{low}");
    assert!(high < 0.1, "{high}");
}

#[test]
fn finite_epsilon_route_is_close_to_radiating_route() {
    let w = 0.5 * wmax();
    let patch = PerturbationPatch::new(vec![0.1, -0.05, 0.08]).unwrap();
    let a = solve_patch(&p(), w, &patch, SolverSettings::default()).unwrap();
    let fin = SolverSettings {
        epsilon: 1e-3,
        n_nodes: 1 << 17,
        ..SolverSettings::default()
    };
    let b = solve_patch(&p(), w, &patch, fin).unwrap();
    assert!((a.t - b.t).norm() < 1e-2);
    assert!((a.t - b.t).norm() > 0.0);
}

#[test]
fn oversized_patch_is_rejected() {
    let solver = ScatteringSolver::new(&p(), 0.5 * wmax(), SolverSettings::default(), 4).unwrap();
    assert!(solver.solve(&PerturbationPatch::zeros(5).unwrap()).is_err());
}

#[test]
fn out_of_band_frequency_is_rejected() {
    let patch = PerturbationPatch::zeros(2).unwrap();
    assert!(matches!(
        solve_patch(&p(), 1.01 * wmax(), &patch, SolverSettings::default()),
        Err(gmsurf::Error::FrequencyOutOfBand { .. })
    ));
}
