//! The five workflows. Each writes its tables into the configured output directory.

use std::f64::consts::PI;
use std::path::PathBuf;

use gmsurf::asymptotics::{
    effective_params, jump_markov_estimate, regime_formulas, solve_family, solve_moment_hierarchy,
    strong_mean_loss, AsymptoticParams, Family, HierarchyOptions, MomentSolution,
};
use gmsurf::ensemble::{
    draw_patch, run_ensemble, EnsembleSpec, EnsembleStats, REALIZATION_CSV_HEADER, STATS_CSV_HEADER,
};
use gmsurf::scattering::{solve_patch, PerturbationPatch, SCATTER_CSV_HEADER};
use gmsurf::spectrum::{omega_max, solve_dispersion, SurfaceParams};
use gmsurf::Error;

use crate::config::RunConfig;
use crate::output::{num, Table};

/// Retries with a doubled truncation order (up to three times) when the doubling check fails.
pub fn solve_family_adaptive(
    family: Family,
    lambda_tilde: f64,
    grid: &[f64],
    opts: &HierarchyOptions,
) -> gmsurf::Result<(gmsurf::asymptotics::FamilySolution, usize)> {
    let mut o = *opts;
    for attempt in 0..4 {
        match solve_family(family, lambda_tilde, grid, &o) {
            Ok(s) => return Ok((s, o.p_max)),
            Err(Error::TruncationNotConverged { .. }) if attempt < 3 => o.p_max *= 2,
            Err(e) => return Err(e),
        }
    }
    unreachable!()
}

fn moments_adaptive(
    lambda_tilde: f64,
    l_tilde: f64,
    opts: &HierarchyOptions,
) -> gmsurf::Result<(MomentSolution, usize)> {
    let mut o = *opts;
    for attempt in 0..4 {
        match solve_moment_hierarchy(lambda_tilde, &[l_tilde], &o) {
            Ok(s) => return Ok((s, o.p_max)),
            Err(Error::TruncationNotConverged { .. }) if attempt < 3 => o.p_max *= 2,
            Err(e) => return Err(e),
        }
    }
    unreachable!()
}

fn ensemble_spec(cfg: &RunConfig) -> gmsurf::Result<EnsembleSpec> {
    Ok(EnsembleSpec {
        n_realizations: cfg.ensemble.n_realizations,
        sigma: cfg.ensemble.sigma,
        len: cfg.ensemble.len,
        distribution: cfg.distribution(),
        master_seed: cfg.ensemble.seed,
        omega_grid: cfg.omega_grid()?,
    })
}

pub fn cmd_dispersion(cfg: &RunConfig) -> anyhow::Result<Vec<PathBuf>> {
    let params = cfg.params()?;
    let wmax = omega_max(&params)?;
    let n = cfg.dispersion.n_k;
    let mut t = Table::new("dispersion.csv", "k,omega,eta,v_group");
    for i in 1..=n {
        let k = PI * i as f64 / (n + 1) as f64;
        let d = solve_dispersion(&params, k)?;
        t.rows.push(format!(
            "{},{},{},{}",
            num(k),
            num(d.omega),
            num(d.eta),
            num(d.v_group)
        ));
    }
    t.meta("omega_max", num(wmax));
    Ok(vec![t.write(&cfg.output.dir, "dispersion", cfg)?])
}

pub fn cmd_scatter(cfg: &RunConfig) -> anyhow::Result<Vec<PathBuf>> {
    let params = cfg.params()?;
    let spec = ensemble_spec(cfg)?;
    let patch = match &cfg.scatter.mu {
        Some(mu) => PerturbationPatch::new(mu.clone())?,
        None => draw_patch(&spec, cfg.scatter.index)?,
    };
    let settings = cfg.solver_settings();
    let mut t = Table::new("scatter.csv", SCATTER_CSV_HEADER);
    for &w in &spec.omega_grid {
        let r = solve_patch(&params, w, &patch, settings)?;
        t.rows.push(r.csv_row(w, patch.len(), patch.hash()));
    }
    t.meta(
        "mu_source",
        if cfg.scatter.mu.is_some() {
            "inline".to_string()
        } else {
            format!("seed:{}", cfg.scatter.index)
        },
    );
    t.meta("mu_hash", format!("{:016x}", patch.hash()));
    Ok(vec![t.write(&cfg.output.dir, "scatter", cfg)?])
}

fn run_configured_ensemble(cfg: &RunConfig) -> anyhow::Result<(EnsembleSpec, EnsembleStats)> {
    let params = cfg.params()?;
    let spec = ensemble_spec(cfg)?;
    let stats = run_ensemble(&params, &spec, cfg.solver_settings(), cfg.ensemble.dump)?;
    Ok((spec, stats))
}

pub fn cmd_ensemble(cfg: &RunConfig) -> anyhow::Result<Vec<PathBuf>> {
    let (spec, stats) = run_configured_ensemble(cfg)?;
    let mut t = Table::new("ensemble.csv", STATS_CSV_HEADER);
    t.rows = stats.per_omega.iter().map(|o| o.csv_row()).collect();
    t.meta("distribution", spec.distribution.name());
    let mut files = vec![t.write(&cfg.output.dir, "ensemble", cfg)?];
    if let Some(recs) = &stats.realizations {
        let mut d = Table::new("realizations.csv", REALIZATION_CSV_HEADER);
        d.rows = recs.iter().map(|r| r.csv_row()).collect();
        files.push(d.write(&cfg.output.dir, "ensemble", cfg)?);
    }
    Ok(files)
}

const ASYMPTOTICS_HEADER: &str = "omega,omega_frac,l_loc,lambda,lambda_tilde,kappa,l_tilde,p_max,R1,T0,U0,mean_D,var_D,var_R2,var_T2,weak_mean_D,weak_var_D,strong_mean_R2,strong_mean_D,strong_var_D,lambda0_T2";

/// One row of the asymptotic predictions at a single frequency.
pub struct AsymptoticRow {
    pub params: AsymptoticParams,
    pub l_tilde: f64,
    pub p_max: usize,
    pub moments: MomentSolution,
}

pub fn asymptotic_row(
    params: &SurfaceParams,
    omega: f64,
    sigma: f64,
    len: f64,
    opts: &HierarchyOptions,
) -> gmsurf::Result<AsymptoticRow> {
    let ap = effective_params(params, omega, sigma)?;
    let l_tilde = ap.l_tilde(len);
    let (moments, p_max) = moments_adaptive(ap.lambda_tilde, l_tilde, opts)?;
    Ok(AsymptoticRow {
        params: ap,
        l_tilde,
        p_max,
        moments,
    })
}

pub fn cmd_asymptotics(cfg: &RunConfig) -> anyhow::Result<Vec<PathBuf>> {
    let params = cfg.params()?;
    let wmax = omega_max(&params)?;
    let opts = cfg.hierarchy_options();
    let fk = cfg.asymptotics.fk_paths;
    let mut header = ASYMPTOTICS_HEADER.to_string();
    if fk > 0 {
        header.push_str(",fk_R1,fk_R1_se,fk_T0,fk_T0_se,fk_U0,fk_U0_se");
    }
    let mut t = Table::new("asymptotics.csv", header);
    for (i, w) in cfg.omega_grid()?.into_iter().enumerate() {
        let row = asymptotic_row(
            &params,
            w,
            cfg.ensemble.sigma,
            cfg.ensemble.len as f64,
            &opts,
        )?;
        let (ap, lt, m) = (&row.params, row.l_tilde, &row.moments);
        let rf = regime_formulas(ap.lambda_tilde, lt)?;
        let mut cols = vec![
            num(w),
            num(w / wmax),
            num(ap.l_loc),
            num(ap.lambda),
            num(ap.lambda_tilde),
            num(ap.kappa),
            num(lt),
            row.p_max.to_string(),
            num(m.r.values[0][1]),
            num(m.t.values[0][0]),
            num(m.u.values[0][0]),
            num(m.mean_d[0]),
            num(m.var_d[0]),
            num(m.var_r2()[0]),
            num(m.var_t2()[0]),
            num(rf.weak.mean_d),
            num(rf.weak.var_d),
            num(rf.strong.mean_r2),
            num(rf.strong.mean_d),
            num(rf.strong.var_d),
            num(rf.lambda_zero_t2),
        ];
        if fk > 0 {
            for (j, (fam, p)) in [(Family::R, 1), (Family::T, 0), (Family::U, 0)]
                .into_iter()
                .enumerate()
            {
                let seed = cfg.ensemble.seed.wrapping_add(((i as u64) << 8) | j as u64);
                let e = jump_markov_estimate(ap.lambda_tilde, lt, p, fam, fk, seed)?;
                cols.push(num(e.estimate));
                cols.push(num(e.std_error));
            }
        }
        t.rows.push(cols.join(","));
    }
    t.meta("omega_max", num(wmax));
    Ok(vec![t.write(&cfg.output.dir, "asymptotics", cfg)?])
}

/// E[𝒟] at L̃ from the ℛ and 𝒯 hierarchies, or the strong-regime limit beyond `cutoff`.
fn mean_loss(
    lambda_tilde: f64,
    l_tilde: f64,
    cutoff: f64,
    opts: &HierarchyOptions,
) -> gmsurf::Result<(f64, &'static str, usize)> {
    if l_tilde > cutoff {
        return Ok((strong_mean_loss(lambda_tilde)?, "strong-limit", 0));
    }
    let (r, pr) = solve_family_adaptive(Family::R, lambda_tilde, &[l_tilde], opts)?;
    let (t, pt) = solve_family_adaptive(Family::T, lambda_tilde, &[l_tilde], opts)?;
    Ok((
        1.0 - r.values[0][1] - t.values[0][0],
        "hierarchy",
        pr.max(pt),
    ))
}

pub fn cmd_sweep(cfg: &RunConfig) -> anyhow::Result<Vec<PathBuf>> {
    let sw = &cfg.sweep;
    let opts = cfg.hierarchy_options();
    let sigma = cfg.ensemble.sigma;
    let mut header = String::from("m_s,alpha_s,omega_frac,omega,lambda_tilde,l_loc");
    for l in &sw.lengths {
        header.push_str(&format!(",l_tilde_L{l},mean_D_L{l},route_L{l}"));
    }
    header.push_str(",mean_D_Linf");
    let mut heat = Table::new("sweep_heatmap.csv", header);
    for &m in &sw.m_s {
        for &a in &sw.alpha_s {
            for &f in &sw.fractions {
                let params = SurfaceParams::new(m, a)?;
                let mut cols = vec![num(m), num(a), num(f)];
                if !params.has_surface_band() {
                    cols.extend(["NaN".to_string(), "NaN".into(), "NaN".into()]);
                    for _ in &sw.lengths {
                        cols.extend(["NaN".to_string(), "NaN".into(), "no-band".into()]);
                    }
                    cols.push("NaN".into());
                    heat.rows.push(cols.join(","));
                    continue;
                }
                let w = f * omega_max(&params)?;
                let ap = effective_params(&params, w, sigma)?;
                cols.extend([num(w), num(ap.lambda_tilde), num(ap.l_loc)]);
                for &l in &sw.lengths {
                    let lt = ap.l_tilde(l);
                    let (d, route, _) =
                        mean_loss(ap.lambda_tilde, lt, cfg.numerics.strong_cutoff, &opts)?;
                    cols.extend([num(lt), num(d), route.to_string()]);
                }
                cols.push(num(strong_mean_loss(ap.lambda_tilde)?));
                heat.rows.push(cols.join(","));
            }
        }
    }
    let mut files = vec![heat.write(&cfg.output.dir, "sweep", cfg)?];
    if sw.compare {
        files.push(compare_table(cfg)?.write(&cfg.output.dir, "sweep", cfg)?);
    }
    Ok(files)
}

/// Ensemble statistics next to the hierarchy predictions on the main ω grid.
fn compare_table(cfg: &RunConfig) -> anyhow::Result<Table> {
    let params = cfg.params()?;
    let wmax = omega_max(&params)?;
    let (spec, stats) = run_configured_ensemble(cfg)?;
    let opts = cfg.hierarchy_options();
    let mut header = String::from("omega,omega_frac,lambda_tilde,l_tilde,n");
    for q in ["T2", "R2", "S"] {
        header.push_str(&format!(
            ",emp_mean_{q},emp_mean_se_{q},hier_mean_{q},emp_std_{q},emp_std_se_{q},hier_std_{q}"
        ));
    }
    let mut t = Table::new("sweep_compare.csv", header);
    for o in &stats.per_omega {
        let row = asymptotic_row(&params, o.omega, spec.sigma, spec.len as f64, &opts)?;
        let m = &row.moments;
        let hier = [
            (m.t.values[0][0], m.var_t2()[0]),
            (m.r.values[0][1], m.var_r2()[0]),
            (m.r.values[0][1] + m.t.values[0][0], m.var_d[0]),
        ];
        let mut cols = vec![
            num(o.omega),
            num(o.omega / wmax),
            num(row.params.lambda_tilde),
            num(row.l_tilde),
            o.n.to_string(),
        ];
        for (emp, (hm, hv)) in [&o.t2, &o.r2, &o.s].into_iter().zip(hier) {
            let opt = |v: Option<f64>| v.map(num).unwrap_or_else(|| "NaN".into());
            cols.extend([
                num(emp.mean),
                opt(emp.std_error),
                num(hm),
                opt(emp.std_dev()),
                opt(emp.std_dev_error),
                num(hv.max(0.0).sqrt()),
            ]);
        }
        t.rows.push(cols.join(","));
    }
    Ok(t)
}
