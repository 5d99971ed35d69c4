//! Parameter sweeps built on the Evans machinery: root tracking in
//! activation energy, neutral-boundary bisection at fixed viscosity,
//! boundary-curve fitting, and viscous-delay diagnostics.
//!
//! The sweep drivers are generic over small traits so the search logic is
//! testable against synthetic spectra; the production implementation wraps
//! profile continuation plus the Evans root counter.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evans::contour::ContourOptions;
use crate::evans::roots::{
    count_semi_annulus, locate_roots_semi_annulus, RootFinderOptions, RootSet,
};
use crate::evans::{EvansEvaluator, EvansOptions};
use crate::gasdyn::WaveParams;
use crate::linop::SpectralSystem;
use crate::profile::{solve_profile, DomainSpec, Guess, Profile};
use crate::znd::calibrate_k;

/// Counts unstable eigenvalues over the standard stability region at one
/// activation energy.
pub trait RootCounter {
    fn unstable_count(&mut self, e_act: f64) -> Result<usize>;
}

/// Locates unstable eigenvalues at one activation energy.
pub trait RootLocator {
    fn locate(&mut self, e_act: f64) -> Result<RootSet>;
}

/// Production oracle: profiles by continuation (reaction rate recalibrated
/// at every activation energy), Evans function over the semi-annulus.
pub struct EvansStabilityOracle {
    pub base: WaveParams,
    pub domain: DomainSpec,
    pub evans: EvansOptions,
    pub contour: ContourOptions,
    pub roots: RootFinderOptions,
    pub r_in: f64,
    pub r_out: f64,
    /// Largest continuation step in activation energy.
    pub max_step: f64,
    /// Activation energy of the first template-seeded solve.
    pub base_e_act: f64,
    cache: BTreeMap<u64, Profile>,
}

impl EvansStabilityOracle {
    pub fn new(base: WaveParams) -> Self {
        Self {
            base,
            domain: DomainSpec::default(),
            evans: EvansOptions::default(),
            contour: ContourOptions::default(),
            roots: RootFinderOptions::default(),
            r_in: 1e-4,
            r_out: 10.0,
            max_step: 0.5,
            base_e_act: 3.0,
            cache: BTreeMap::new(),
        }
    }

    fn family(&self, e_act: f64) -> Result<WaveParams> {
        let p = self.base.with_e_act(e_act);
        Ok(p.with_k(calibrate_k(&p)?))
    }

    /// Profile at the given activation energy, seeded by continuation from
    /// the nearest solved neighbor.
    pub fn profile_at(&mut self, e_act: f64) -> Result<Profile> {
        let key = e_act.to_bits();
        if let Some(p) = self.cache.get(&key) {
            return Ok(p.clone());
        }
        let nearest = self
            .cache
            .keys()
            .map(|&b| f64::from_bits(b))
            .min_by(|a, b| (a - e_act).abs().partial_cmp(&(b - e_act).abs()).unwrap());
        let (mut cur_e, mut cur) = match nearest {
            Some(e0) => (e0, self.cache[&e0.to_bits()].clone()),
            None => {
                let e0 = self.base_e_act;
                let prof = solve_profile(&self.family(e0)?, &self.domain, Guess::ZndTemplate)?;
                self.cache.insert(e0.to_bits(), prof.clone());
                if e0 == e_act {
                    return Ok(prof);
                }
                (e0, prof)
            }
        };
        let total = ((e_act - cur_e).abs() / self.max_step).ceil().max(1.0) as usize;
        for j in 1..=total {
            let e_next = if j == total {
                e_act
            } else {
                cur_e + (e_act - cur_e) / ((total - j + 1) as f64)
            };
            let prof = self.continue_to(&cur, cur_e, e_next, 8)?;
            self.cache.insert(e_next.to_bits(), prof.clone());
            cur = prof;
            cur_e = e_next;
        }
        Ok(cur)
    }

    fn continue_to(&self, prev: &Profile, from: f64, to: f64, depth: usize) -> Result<Profile> {
        match solve_profile(&self.family(to)?, &self.domain, Guess::Previous(prev)) {
            Ok(p) => Ok(p),
            Err(e) => {
                if depth == 0 {
                    return Err(e);
                }
                let mid = 0.5 * (from + to);
                let half = self.continue_to(prev, from, mid, depth - 1)?;
                self.continue_to(&half, mid, to, depth - 1)
            }
        }
    }
}

impl RootCounter for EvansStabilityOracle {
    fn unstable_count(&mut self, e_act: f64) -> Result<usize> {
        let prof = self.profile_at(e_act)?;
        let sys = SpectralSystem::new(&prof);
        let ev = EvansEvaluator::new(&sys, self.evans.clone())?;
        let m = count_semi_annulus(&ev, self.r_in, self.r_out, &self.contour)?;
        if m < 0 {
            return Err(Error::UnresolvedContour(format!(
                "negative winding {m} at E_A = {e_act}"
            )));
        }
        Ok(m as usize)
    }
}

impl RootLocator for EvansStabilityOracle {
    fn locate(&mut self, e_act: f64) -> Result<RootSet> {
        let prof = self.profile_at(e_act)?;
        let sys = SpectralSystem::new(&prof);
        let ev = EvansEvaluator::new(&sys, self.evans.clone())?;
        locate_roots_semi_annulus(&ev, self.r_in, self.r_out, &self.roots)
    }
}

// ---------------------------------------------------------------------------
// Neutral-boundary bisection.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundarySide {
    /// Onset of instability: stable below, unstable above.
    Lower,
    /// Restabilization: unstable below, stable above.
    Upper,
}

#[derive(Debug, Clone, Copy)]
pub struct BoundaryPoint {
    pub e_act: f64,
    pub abs_err: f64,
}

/// Bisects the activation energy on the predicate "the root set over the
/// standard semi-annulus is empty", to the requested absolute error.
pub fn neutral_boundary(
    counter: &mut dyn RootCounter,
    side: BoundarySide,
    bracket: (f64, f64),
    abs_err: f64,
) -> Result<BoundaryPoint> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) {
        return Err(Error::BadBracket(format!("bracket [{lo}, {hi}] is empty")));
    }
    let stable_lo = counter.unstable_count(lo)? == 0;
    let stable_hi = counter.unstable_count(hi)? == 0;
    let want = match side {
        BoundarySide::Lower => (true, false),
        BoundarySide::Upper => (false, true),
    };
    if (stable_lo, stable_hi) != want {
        return Err(Error::BadBracket(format!(
            "bracket stability ({stable_lo}, {stable_hi}) does not fit the {side:?} boundary"
        )));
    }
    while hi - lo > 2.0 * abs_err {
        let mid = 0.5 * (lo + hi);
        let stable_mid = counter.unstable_count(mid)? == 0;
        if stable_mid == stable_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(BoundaryPoint {
        e_act: 0.5 * (lo + hi),
        abs_err: 0.5 * (hi - lo),
    })
}

// ---------------------------------------------------------------------------
// Root tracking in activation energy.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct TrajectoryStep {
    pub e_act: f64,
    pub roots: RootSet,
    /// Lineage id per root, parallel to `roots.roots`.
    pub lineage_ids: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Lineage {
    pub id: usize,
    pub points: Vec<(f64, Complex64)>,
    /// Matching became ambiguous at the minimum step; continuity not
    /// claimed past that point.
    pub broken: bool,
}

#[derive(Debug, Clone)]
pub struct RootTrajectory {
    pub steps: Vec<TrajectoryStep>,
    pub lineages: Vec<Lineage>,
}

#[derive(Debug, Clone)]
pub struct TrackOptions {
    pub step: f64,
    pub min_step: f64,
}

impl Default for TrackOptions {
    fn default() -> Self {
        Self {
            step: 0.25,
            min_step: 0.03125,
        }
    }
}

fn min_separation(set: &RootSet) -> f64 {
    let mut m = f64::INFINITY;
    for (i, a) in set.roots.iter().enumerate() {
        for b in set.roots.iter().skip(i + 1) {
            m = m.min((a.lambda - b.lambda).norm());
        }
    }
    m
}

/// Best assignment (minimum total squared displacement) of previous roots to
/// next roots; brute force over injections, fine for the handful of roots
/// these spectra carry. `map[i] = Some(j)` means previous root `i` continues
/// as next root `j`.
fn match_roots(prev: &RootSet, next: &RootSet) -> Vec<Option<usize>> {
    let n1 = prev.roots.len();
    let n2 = next.roots.len();
    let mut best: Option<(f64, Vec<Option<usize>>)> = None;
    let mut assignment = vec![None::<usize>; n1];
    let mut used = vec![false; n2];

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        i: usize,
        n1: usize,
        prev: &RootSet,
        next: &RootSet,
        used: &mut [bool],
        assignment: &mut [Option<usize>],
        cost: f64,
        best: &mut Option<(f64, Vec<Option<usize>>)>,
    ) {
        if let Some((bc, _)) = best {
            if cost > *bc {
                return;
            }
        }
        if i == n1 {
            if best.as_ref().map_or(true, |(bc, _)| cost < *bc) {
                *best = Some((cost, assignment.to_vec()));
            }
            return;
        }
        let n2 = next.roots.len();
        let must_match = {
            let remaining_prev = n1 - i;
            let remaining_next = used.iter().filter(|u| !**u).count();
            remaining_next >= remaining_prev
        };
        for j in 0..n2 {
            if !used[j] {
                used[j] = true;
                assignment[i] = Some(j);
                let d = (prev.roots[i].lambda - next.roots[j].lambda).norm_sqr();
                recurse(i + 1, n1, prev, next, used, assignment, cost + d, best);
                used[j] = false;
                assignment[i] = None;
            }
        }
        if !must_match {
            recurse(i + 1, n1, prev, next, used, assignment, cost, best);
        }
    }
    recurse(0, n1, prev, next, &mut used, &mut assignment, 0.0, &mut best);
    best.map(|(_, a)| a).unwrap_or(assignment)
}

/// Links are trusted only when each displacement is below half the minimum
/// root separation at either step.
fn links_valid(prev: &RootSet, next: &RootSet, map: &[Option<usize>]) -> bool {
    let sep = 0.5 * min_separation(prev).min(min_separation(next));
    map.iter().enumerate().all(|(i, m)| match m {
        Some(j) => (prev.roots[i].lambda - next.roots[*j].lambda).norm() < sep,
        None => true,
    })
}

/// Tracks root motion over an activation-energy range with event-adaptive
/// step halving (entries, exits, and ambiguous matchings trigger halving
/// down to the minimum step).
pub fn track_roots(
    locator: &mut dyn RootLocator,
    e_start: f64,
    e_end: f64,
    opts: &TrackOptions,
) -> Result<RootTrajectory> {
    let mut steps: Vec<TrajectoryStep> = Vec::new();
    let mut lineages: Vec<Lineage> = Vec::new();
    let mut next_id = 0usize;

    let mut e = e_start;
    let mut set = locator.locate(e)?;
    let mut ids = Vec::new();
    for r in &set.roots {
        lineages.push(Lineage {
            id: next_id,
            points: vec![(e, r.lambda)],
            broken: false,
        });
        ids.push(next_id);
        next_id += 1;
    }
    steps.push(TrajectoryStep {
        e_act: e,
        roots: set.clone(),
        lineage_ids: ids.clone(),
    });

    let mut step = opts.step;
    while e < e_end - 1e-12 {
        let e_next = (e + step).min(e_end);
        let set_next = locator.locate(e_next)?;
        let map = match_roots(&set, &set_next);
        let count_changed = set_next.roots.len() != set.roots.len();
        let ambiguous = !links_valid(&set, &set_next, &map);
        if (count_changed || ambiguous) && e_next - e > opts.min_step {
            step = (0.5 * step).max(opts.min_step);
            continue;
        }
        let mut new_ids = vec![usize::MAX; set_next.roots.len()];
        for (i, m) in map.iter().enumerate() {
            if let Some(j) = m {
                let id = ids[i];
                new_ids[*j] = id;
                let lin = lineages.iter_mut().find(|l| l.id == id).unwrap();
                lin.points.push((e_next, set_next.roots[*j].lambda));
                if ambiguous {
                    lin.broken = true;
                }
            }
        }
        for (j, id) in new_ids.iter_mut().enumerate() {
            if *id == usize::MAX {
                lineages.push(Lineage {
                    id: next_id,
                    points: vec![(e_next, set_next.roots[j].lambda)],
                    broken: false,
                });
                *id = next_id;
                next_id += 1;
            }
        }
        steps.push(TrajectoryStep {
            e_act: e_next,
            roots: set_next.clone(),
            lineage_ids: new_ids.clone(),
        });
        e = e_next;
        set = set_next;
        ids = new_ids;
        step = (step * 2.0).min(opts.step);
    }
    Ok(RootTrajectory { steps, lineages })
}

// ---------------------------------------------------------------------------
// Boundary fits and the viscous delay.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    /// `E = a + b nu`
    Linear,
    /// `E = a + b nu + c ln(nu)`
    LinearLog,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: FitModel,
    pub coeffs: Vec<f64>,
    pub max_residual: f64,
}

/// Least squares of the boundary values against the model.
pub fn fit_boundary(points: &[(f64, f64)], model: FitModel) -> Result<FitResult> {
    let n_coef = match model {
        FitModel::Linear => 2,
        FitModel::LinearLog => 3,
    };
    if points.len() < n_coef {
        return Err(Error::FitError(format!(
            "{} points cannot determine {n_coef} coefficients",
            points.len()
        )));
    }
    let mut design = DMatrix::zeros(points.len(), n_coef);
    let mut rhs = DVector::zeros(points.len());
    for (r, &(nu, e)) in points.iter().enumerate() {
        if model == FitModel::LinearLog && nu <= 0.0 {
            return Err(Error::FitError(format!("nu = {nu} invalid for a log term")));
        }
        design[(r, 0)] = 1.0;
        design[(r, 1)] = nu;
        if n_coef == 3 {
            design[(r, 2)] = nu.ln();
        }
        rhs[r] = e;
    }
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 1e-12 * smax {
        return Err(Error::FitError("rank-deficient design matrix".into()));
    }
    let coeffs = svd
        .solve(&rhs, 1e-14 * smax)
        .map_err(|e| Error::FitError(e.to_string()))?;
    let resid = (&design * &coeffs - &rhs).amax();
    Ok(FitResult {
        model,
        coeffs: coeffs.iter().cloned().collect(),
        max_residual: resid,
    })
}

/// Relative delay of the instability onset against a reference inviscid
/// boundary: rows `(nu, (E^-(nu) - E_star)/E_star)`.
pub fn viscous_delay(lower_boundary: &[(f64, f64)], e_star: f64) -> Vec<(f64, f64)> {
    lower_boundary
        .iter()
        .map(|&(nu, e)| (nu, (e - e_star) / e_star))
        .collect()
}
