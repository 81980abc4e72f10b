use gmsurf::ensemble::{
    draw_patch, run_ensemble, support_bound, Distribution, EnsembleSpec, Moments,
};
use gmsurf::scattering::{solve_patch, SolverSettings};
use gmsurf::spectrum::{omega_max, SurfaceParams};
use gmsurf::Error;

fn p() -> SurfaceParams {
    SurfaceParams::new(2.0, 1.3).unwrap()
}

fn spec(n: usize, len: usize, dist: Distribution) -> EnsembleSpec {
    let wmax = omega_max(&p()).unwrap();
    EnsembleSpec {
        n_realizations: n,
        sigma: 0.05,
        len,
        distribution: dist,
        master_seed: 20240611,
        omega_grid: vec![0.3 * wmax, 0.6 * wmax],
    }
}

fn sample_stats(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[test]
fn same_seed_and_index_give_identical_patch() {
    let s = spec(10, 40, Distribution::Uniform);
    assert_eq!(draw_patch(&s, 3).unwrap(), draw_patch(&s, 3).unwrap());
    assert_ne!(draw_patch(&s, 3).unwrap(), draw_patch(&s, 4).unwrap());
    let mut other = s.clone();
    other.master_seed += 1;
    assert_ne!(draw_patch(&s, 3).unwrap(), draw_patch(&other, 3).unwrap());
}

#[test]
fn index_out_of_range_is_rejected() {
    let s = spec(10, 40, Distribution::Uniform);
    assert!(matches!(draw_patch(&s, 10), Err(Error::InvalidInput(_))));
}

#[test]
fn uniform_draws_have_target_moments() {
    let s = spec(1000, 1000, Distribution::Uniform);
    let xs: Vec<f64> = (0..1000)
        .flat_map(|i| draw_patch(&s, i).unwrap().mu().to_vec())
        .collect();
    assert_eq!(xs.len(), 1_000_000);
    let (mean, var) = sample_stats(&xs);
    assert!(mean.abs() < 5.0 * 0.05 / 1000.0, "{mean}");
    assert!((var / 0.0025 - 1.0).abs() < 0.01, "{var}");
    let h = 3f64.sqrt() * 0.05;
    assert!(xs.iter().all(|x| x.abs() <= h));
}

#[test]
fn truncated_gaussian_draws_have_target_moments() {
    let mut s = spec(200, 1000, Distribution::TruncatedGaussian);
    s.sigma = 0.3;
    let xs: Vec<f64> = (0..200)
        .flat_map(|i| draw_patch(&s, i).unwrap().mu().to_vec())
        .collect();
    let (mean, var) = sample_stats(&xs);
    assert!(mean.abs() < 5.0 * 0.3 / (xs.len() as f64).sqrt());
    assert!((var / 0.09 - 1.0).abs() < 0.02, "{var}");
    let b = support_bound(Distribution::TruncatedGaussian, 0.3).unwrap();
    assert!(b < 1.0 && xs.iter().all(|x| x.abs() <= b));
}

#[test]
fn oversized_sigma_is_rejected() {
    let mut s = spec(4, 10, Distribution::Uniform);
    s.sigma = 0.6;
    assert!(s.validate().is_err());
    assert!(run_ensemble(&p(), &s, SolverSettings::default(), false).is_err());
}

#[test]
fn stats_satisfy_per_realization_identity() {
    let s = spec(64, 40, Distribution::Uniform);
    let st = run_ensemble(&p(), &s, SolverSettings::default(), true).unwrap();
    assert_eq!(st.per_omega.len(), 2);
    for o in &st.per_omega {
        assert_eq!(o.n, 64);
        for m in [&o.r2, &o.t2, &o.d] {
            assert!((0.0..=1.0).contains(&m.mean));
            assert!(m.variance.unwrap() >= 0.0);
        }
        assert!((o.r2.mean + o.t2.mean + o.d.mean - 1.0).abs() < 1e-9);
    }
    let recs = st.realizations.unwrap();
    assert_eq!(recs.len(), 128);
    // a record matches an independent single solve
    let r = &recs[70];
    let patch = draw_patch(&s, r.index).unwrap();
    let single = solve_patch(&p(), r.omega, &patch, SolverSettings::default()).unwrap();
    assert_eq!(single.r.norm_sqr(), r.r2);
    assert_eq!(patch.hash(), r.mu_hash);
}

#[test]
fn single_realization_reports_no_variance() {
    let s = spec(1, 20, Distribution::Uniform);
    let st = run_ensemble(&p(), &s, SolverSettings::default(), false).unwrap();
    let patch = draw_patch(&s, 0).unwrap();
    for o in &st.per_omega {
        let single = solve_patch(&p(), o.omega, &patch, SolverSettings::default()).unwrap();
        assert_eq!(o.t2.mean, single.t.norm_sqr());
        assert!(o.t2.variance.is_none() && o.t2.std_error.is_none());
    }
}

#[test]
fn results_are_independent_of_thread_count() {
    let s = spec(48, 30, Distribution::TruncatedGaussian);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_ensemble(&p(), &s, SolverSettings::default(), true).unwrap())
    };
    let one = run(1);
    for t in [4, 8] {
        assert_eq!(run(t), one);
    }
}

#[test]
fn standard_error_of_std_is_sensible() {
    // normal-ish samples: SE(sd) ≈ sd / √(2n)
    let s = spec(4000, 12, Distribution::TruncatedGaussian);
    let xs: Vec<f64> = (0..4000)
        .map(|i| draw_patch(&s, i).unwrap().mu()[0])
        .collect();
    let m = Moments::from_samples(&xs);
    let sd = m.std_dev().unwrap();
    let rough = sd / (2.0 * 4000f64).sqrt();
    assert!((m.std_dev_error.unwrap() / rough - 1.0).abs() < 0.15);
}
