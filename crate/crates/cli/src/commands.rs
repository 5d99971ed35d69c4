//! Subcommand implementations: orchestration, CSV emission, manifests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64;
use serde_json::json;

use rns_core::evans::contour::{sample_contour, ContourShape};
use rns_core::evans::roots::locate_roots_semi_annulus;
use rns_core::evans::EvansEvaluator;
use rns_core::linop::SpectralSystem;
use rns_core::profile::{shock_reaction_ratio, solve_profile, Guess};
use rns_core::stab::{
    fit_boundary, neutral_boundary, track_roots, viscous_delay, BoundarySide,
    EvansStabilityOracle, FitModel, TrackOptions,
};
use rns_core::znd::znd_profile;

use crate::config::LoadedConfig;
use crate::manifest::ManifestBuilder;

pub struct CommandContext {
    pub loaded: LoadedConfig,
    pub jobs: usize,
}

/// Runs `f(0..n)` on up to `jobs` worker threads; the result vector is
/// ordered by index, so the output is identical for any worker count.
pub fn run_indexed<T, F>(n: usize, jobs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let results: Vec<Mutex<Option<T>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = Mutex::new(0usize);
    let workers = jobs.max(1).min(n.max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = {
                    let mut guard = next.lock().unwrap();
                    if *guard >= n {
                        return;
                    }
                    let i = *guard;
                    *guard += 1;
                    i
                };
                let out = f(i);
                *results[i].lock().unwrap() = Some(out);
            });
        }
    });
    results
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("worker completed"))
        .collect()
}

impl CommandContext {
    fn out_dir(&self) -> Result<PathBuf> {
        let dir = PathBuf::from(&self.loaded.config.output.dir);
        std::fs::create_dir_all(&dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(dir)
    }
}

fn write_csv(dir: &Path, name: &str, header: &str, rows: &[String]) -> Result<String> {
    let path = dir.join(name);
    let mut text = String::with_capacity(rows.len() * 32 + header.len() + 1);
    text.push_str(header);
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(name.to_string())
}

pub fn cmd_znd(ctx: &CommandContext) -> Result<()> {
    let t0 = Instant::now();
    let resolved = ctx.loaded.config.resolve()?;
    let dir = ctx.out_dir()?;
    let m_minus = ctx.loaded.config.solver.m_minus;
    let prof = znd_profile(&resolved.params, m_minus)?;
    prof.validate()?;
    let rows: Vec<String> = (0..prof.xs.len())
        .map(|i| {
            format!(
                "{},{},{},{},{},{}",
                prof.xs[i], prof.tau[i], prof.u[i], prof.e[i], prof.z[i], prof.temp[i]
            )
        })
        .collect();
    let csv = write_csv(&dir, "znd.csv", "x,tau,u,e,z,T", &rows)?;
    ManifestBuilder::new("znd", &ctx.loaded)
        .with_resolved(&resolved)
        .insert(
            "results",
            json!({
                "grid_points": prof.xs.len(),
                "e_mid": prof.e_mid,
                "neumann_state": {"tau": prof.neumann.0, "u": prof.neumann.1, "e": prof.neumann.2},
                "half_reaction_x": prof.half_reaction_x(),
            }),
        )
        .write(&dir, &[csv], t0.elapsed().as_secs_f64())?;
    Ok(())
}

pub fn cmd_profile(ctx: &CommandContext) -> Result<()> {
    let t0 = Instant::now();
    let resolved = ctx.loaded.config.resolve()?;
    let dir = ctx.out_dir()?;
    let prof = solve_profile(&resolved.params, &resolved.domain, Guess::ZndTemplate)?;
    prof.validate()?;
    let rows: Vec<String> = prof
        .mesh()
        .iter()
        .map(|&x| {
            let v = prof.value(x);
            format!("{},{},{},{},{},{}", x, v[0], 1.0 - v[0], v[1], v[2], v[3])
        })
        .collect();
    let csv = write_csv(&dir, "profile.csv", "x,tau,u,e,z,y", &rows)?;
    // Bench metric: reactant fraction where it enters the shock layer (the
    // leftmost abscissa where |tau'| reaches 5% of its maximum).
    let (a, b) = (prof.x_left(), prof.x_right());
    let n = ((b - a) / 0.005).ceil() as usize;
    let mut max_slope = 0.0f64;
    for i in 0..=n {
        let x = a + (b - a) * i as f64 / n as f64;
        max_slope = max_slope.max(prof.deriv(x)[0].abs());
    }
    let mut x_entry = a;
    for i in 0..=n {
        let x = a + (b - a) * i as f64 / n as f64;
        if prof.deriv(x)[0].abs() >= 0.05 * max_slope {
            x_entry = x;
            break;
        }
    }
    let bench_z = prof.value(x_entry)[2];
    ManifestBuilder::new("profile", &ctx.loaded)
        .with_resolved(&resolved)
        .insert(
            "results",
            json!({
                "mesh_points": prof.mesh().len(),
                "domain": [prof.x_left(), prof.x_right()],
                "endpoint_deviations": [prof.endpoint_dev.0, prof.endpoint_dev.1],
                "max_scaled_defect": prof.max_defect,
                "bench_z_at_layer_entry": bench_z,
                "shock_reaction_ratio": shock_reaction_ratio(&prof),
                "end_states": {
                    "tau_minus": prof.end_states.tau_minus,
                    "u_minus": prof.end_states.u_minus,
                    "e_minus": prof.end_states.e_minus,
                },
            }),
        )
        .write(&dir, &[csv], t0.elapsed().as_secs_f64())?;
    Ok(())
}

pub fn cmd_evans(ctx: &CommandContext) -> Result<()> {
    let t0 = Instant::now();
    let cfg = &ctx.loaded.config;
    let resolved = cfg.resolve()?;
    let dir = ctx.out_dir()?;
    let prof = solve_profile(&resolved.params, &resolved.domain, Guess::ZndTemplate)?;
    prof.validate()?;
    let sys = SpectralSystem::new(&prof);
    let ev = EvansEvaluator::new(&sys, cfg.evans_options())?;
    let shape = ContourShape::SemiAnnulus {
        r_in: cfg.evans.r_inner,
        r_out: cfg.evans.r_outer,
    };
    let sample = sample_contour(&ev, &shape, &cfg.contour_options())?;
    let (kp, km) = ev.dims;
    let rows: Vec<String> = sample
        .nodes
        .iter()
        .zip(&sample.values)
        .map(|(l, d)| format!("{},{},{},{},{},{}", l.re, l.im, d.re, d.im, kp, km))
        .collect();
    let csv = write_csv(&dir, "evans.csv", "re_lambda,im_lambda,re_d,im_d,k_plus,k_minus", &rows)?;
    ManifestBuilder::new("evans", &ctx.loaded)
        .with_resolved(&resolved)
        .insert(
            "results",
            json!({
                "region": {"shape": "semi-annulus", "r_inner": cfg.evans.r_inner, "r_outer": cfg.evans.r_outer},
                "nodes": sample.nodes.len(),
                "insertions": sample.insertions,
                "winding_number": sample.winding_number()?,
                "splitting_dims": [kp, km],
                "evaluations": *ev.evaluations.borrow(),
            }),
        )
        .write(&dir, &[csv], t0.elapsed().as_secs_f64())?;
    Ok(())
}

pub fn cmd_roots(ctx: &CommandContext) -> Result<()> {
    let t0 = Instant::now();
    let cfg = &ctx.loaded.config;
    let resolved = cfg.resolve()?;
    let dir = ctx.out_dir()?;
    let prof = solve_profile(&resolved.params, &resolved.domain, Guess::ZndTemplate)?;
    prof.validate()?;
    let sys = SpectralSystem::new(&prof);
    let ev = EvansEvaluator::new(&sys, cfg.evans_options())?;
    let set = locate_roots_semi_annulus(&ev, cfg.evans.r_inner, cfg.evans.r_outer, &cfg.root_options())?;
    let rows: Vec<String> = set
        .roots
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{}",
                r.lambda.re, r.lambda.im, r.multiplicity, r.residual
            )
        })
        .collect();
    let csv = write_csv(&dir, "roots.csv", "re_lambda,im_lambda,multiplicity,residual", &rows)?;
    ManifestBuilder::new("roots", &ctx.loaded)
        .with_resolved(&resolved)
        .insert(
            "results",
            json!({
                "region": {"shape": "semi-annulus", "r_inner": cfg.evans.r_inner, "r_outer": cfg.evans.r_outer},
                "target_accuracy": cfg.evans.target_accuracy,
                "count": set.total_multiplicity(),
                "conjugate_closed": set.conjugate_closed(10.0 * cfg.evans.target_accuracy),
                "evaluations": *ev.evaluations.borrow(),
            }),
        )
        .write(&dir, &[csv], t0.elapsed().as_secs_f64())?;
    Ok(())
}

fn oracle_for(ctx: &CommandContext, nu: Option<f64>) -> Result<EvansStabilityOracle> {
    let cfg = &ctx.loaded.config;
    let resolved = cfg.resolve()?;
    let mut base = resolved.params;
    if let Some(nu) = nu {
        // Boundary sweeps follow the equal-diffusivities family.
        base = rns_core::gasdyn::WaveParams::new(
            base.e_plus, base.q, base.e_act, base.gamma, nu, nu, nu, 1.0, base.t_ig, base.c_v,
        )?;
    }
    let mut oracle = EvansStabilityOracle::new(base);
    oracle.domain = resolved.domain;
    oracle.evans = cfg.evans_options();
    oracle.contour = cfg.contour_options();
    oracle.roots = cfg.root_options();
    oracle.r_in = cfg.evans.r_inner;
    oracle.r_out = cfg.evans.r_outer;
    oracle.base_e_act = cfg.sweep.base_e_act;
    oracle.max_step = cfg.sweep.max_continuation_step;
    Ok(oracle)
}

pub fn cmd_track(ctx: &CommandContext) -> Result<()> {
    let t0 = Instant::now();
    let cfg = &ctx.loaded.config;
    let resolved = cfg.resolve()?;
    let dir = ctx.out_dir()?;
    let mut oracle = oracle_for(ctx, None)?;
    let opts = TrackOptions {
        step: cfg.sweep.step,
        min_step: cfg.sweep.min_step,
    };
    let traj = track_roots(&mut oracle, cfg.sweep.e_start, cfg.sweep.e_end, &opts)?;
    let mut rows = Vec::new();
    for st in &traj.steps {
        for (r, id) in st.roots.roots.iter().zip(&st.lineage_ids) {
            rows.push(format!(
                "{},{},{},{}",
                st.e_act, r.lambda.re, r.lambda.im, id
            ));
        }
    }
    let csv = write_csv(&dir, "track.csv", "e_act,re_lambda,im_lambda,lineage_id", &rows)?;
    let lineages: Vec<_> = traj
        .lineages
        .iter()
        .map(|l| {
            json!({
                "id": l.id,
                "broken": l.broken,
                "e_first": l.points.first().map(|p| p.0),
                "e_last": l.points.last().map(|p| p.0),
                "points": l.points.len(),
            })
        })
        .collect();
    ManifestBuilder::new("track", &ctx.loaded)
        .with_resolved(&resolved)
        .insert(
            "results",
            json!({"steps": traj.steps.len(), "lineages": lineages}),
        )
        .write(&dir, &[csv], t0.elapsed().as_secs_f64())?;
    Ok(())
}

pub fn cmd_boundary(ctx: &CommandContext) -> Result<()> {
    let t0 = Instant::now();
    let cfg = &ctx.loaded.config;
    let resolved = cfg.resolve()?;
    let dir = ctx.out_dir()?;
    let nus = cfg.sweep.nus.clone();
    if nus.is_empty() {
        bail!("sweep.nus is empty");
    }
    let abs_err = cfg.sweep.abs_err;
    let columns = run_indexed(nus.len(), ctx.jobs, |i| boundary_column(ctx, nus[i], abs_err));
    let mut rows = Vec::new();
    for (&nu, r) in nus.iter().zip(columns) {
        let (lo, hi) = r?;
        rows.push(format!("{nu},{lo},{hi},{abs_err}"));
    }
    let csv = write_csv(&dir, "boundary.csv", "nu,e_minus,e_plus,abs_err", &rows)?;
    ManifestBuilder::new("boundary", &ctx.loaded)
        .with_resolved(&resolved)
        .insert(
            "results",
            json!({"columns": nus, "abs_err": abs_err, "jobs": ctx.jobs}),
        )
        .write(&dir, &[csv], t0.elapsed().as_secs_f64())?;
    Ok(())
}

/// Both boundaries for one viscosity column: bisect the lower side on the
/// configured bracket, then scan upward for restabilization and bisect the
/// upper side.
fn boundary_column(ctx: &CommandContext, nu: f64, abs_err: f64) -> Result<(f64, f64)> {
    let cfg = &ctx.loaded.config;
    let mut oracle = oracle_for(ctx, Some(nu))?;
    let lower = neutral_boundary(
        &mut oracle,
        BoundarySide::Lower,
        (cfg.sweep.bracket_lo, cfg.sweep.bracket_hi),
        abs_err,
    )?;
    // Find an upper bracket: march until the spectrum empties again.
    let mut lo = cfg.sweep.bracket_hi;
    let mut hi = lo;
    let limit = cfg.sweep.e_end.max(lo + 8.0);
    loop {
        hi = (hi + 1.0).min(limit);
        if count_at(&mut oracle, hi)? == 0 {
            break;
        }
        if hi >= limit {
            bail!("no restabilization found below E_A = {limit} at nu = {nu}");
        }
        lo = hi;
    }
    let upper = neutral_boundary(&mut oracle, BoundarySide::Upper, (lo, hi), abs_err)?;
    Ok((lower.e_act, upper.e_act))
}

fn count_at(oracle: &mut EvansStabilityOracle, e: f64) -> Result<usize> {
    use rns_core::stab::RootCounter;
    Ok(oracle.unstable_count(e)?)
}

fn parse_fit_model(s: &str) -> Result<FitModel> {
    match s {
        "linear" => Ok(FitModel::Linear),
        "linear_log" => Ok(FitModel::LinearLog),
        other => bail!("unknown fit model '{other}' (use linear or linear_log)"),
    }
}

pub fn cmd_fit(ctx: &CommandContext) -> Result<()> {
    let t0 = Instant::now();
    let cfg = &ctx.loaded.config;
    let dir = ctx.out_dir()?;
    let model = parse_fit_model(&cfg.sweep.fit_model)?;
    if cfg.sweep.fit_points.is_empty() {
        bail!("sweep.fit_points is empty");
    }
    let fit = fit_boundary(&cfg.sweep.fit_points, model)?;
    let doc = json!({
        "model": cfg.sweep.fit_model,
        "coefficients": fit.coeffs,
        "max_residual": fit.max_residual,
        "points": cfg.sweep.fit_points,
    });
    let path = dir.join("fit.json");
    std::fs::write(&path, serde_json::to_string_pretty(&doc)?)?;
    ManifestBuilder::new("fit", &ctx.loaded)
        .insert("results", doc)
        .write(&dir, &["fit.json".into()], t0.elapsed().as_secs_f64())?;
    Ok(())
}

pub fn cmd_delay(ctx: &CommandContext) -> Result<()> {
    let t0 = Instant::now();
    let cfg = &ctx.loaded.config;
    let dir = ctx.out_dir()?;
    if cfg.sweep.fit_points.is_empty() {
        bail!("sweep.fit_points (lower-boundary data) is empty");
    }
    let tab = viscous_delay(&cfg.sweep.fit_points, cfg.sweep.e_star);
    let rows: Vec<String> = tab.iter().map(|(nu, d)| format!("{nu},{d}")).collect();
    let csv = write_csv(&dir, "delay.csv", "nu,relative_delay", &rows)?;
    ManifestBuilder::new("delay", &ctx.loaded)
        .insert("results", json!({"e_star": cfg.sweep.e_star, "rows": tab.len()}))
        .write(&dir, &[csv], t0.elapsed().as_secs_f64())?;
    Ok(())
}

pub fn cmd_gmat(ctx: &CommandContext) -> Result<()> {
    let t0 = Instant::now();
    let cfg = &ctx.loaded.config;
    let resolved = cfg.resolve()?;
    let dir = ctx.out_dir()?;
    let prof = solve_profile(&resolved.params, &resolved.domain, Guess::ZndTemplate)?;
    let sys = SpectralSystem::new(&prof);
    let lambda = Complex64::new(cfg.evans.gmat_re_lambda, cfg.evans.gmat_im_lambda);
    let g = sys.g_at(cfg.evans.gmat_x, lambda)?;
    let mut rows = Vec::new();
    for r in 0..g.nrows() {
        for c in 0..g.ncols() {
            let mut line = String::new();
            write!(line, "{},{},{},{}", r, c, g[(r, c)].re, g[(r, c)].im).unwrap();
            rows.push(line);
        }
    }
    let csv = write_csv(&dir, "gmat.csv", "row,col,re,im", &rows)?;
    ManifestBuilder::new("gmat", &ctx.loaded)
        .with_resolved(&resolved)
        .insert(
            "results",
            json!({"x": cfg.evans.gmat_x, "lambda": [lambda.re, lambda.im]}),
        )
        .write(&dir, &[csv], t0.elapsed().as_secs_f64())?;
    Ok(())
}
