//! Viscous traveling-wave profiles: the heteroclinic two-point
//! boundary-value problem on a truncated domain with projective boundary
//! conditions, solved by collocation, with continuation in parameters.
//!
//! State ordering is `U = (tau, e, z, y)` with `y = d z' / tau^2`; the
//! velocity is recovered from mass conservation, `u = 1 - tau`.

use nalgebra::{DMatrix, DVector};

use crate::bvp::{self, BoundaryConditions, BvpOptions, BvpRhs, BvpSolution, InteriorPin};
use crate::error::{Error, Result};
use crate::gasdyn::{rh_end_state, EndStates, WaveParams};
use crate::subspace::{range_basis_real, split_real_spectrum};
use crate::znd;

pub const DIM: usize = 4;

/// Right-hand side of the once-integrated traveling-wave system.
///
/// The energy bracket carries `-(tau-1)^2/2`: the sign is forced by the
/// requirement that the burned Rankine-Hugoniot state be an equilibrium,
/// which also makes the bracket the integral of the momentum relation.
pub fn tw_rhs(u: &[f64; DIM], params: &WaveParams) -> Result<[f64; DIM]> {
    if !(u[0] > 0.0) {
        return Err(Error::Domain(format!("tw_rhs: tau must be positive, got {}", u[0])));
    }
    Ok(tw_rhs_raw(u, params))
}

#[inline]
fn tw_rhs_raw(u: &[f64; DIM], p: &WaveParams) -> [f64; DIM] {
    let (tau, e, z, y) = (u[0], u[1], u[2], u[3]);
    let tau_s = tau.max(1e-12);
    let g = p.gamma;
    let f1 = -(tau * (tau - 1.0) + g * (e - p.e_plus * tau)) / p.nu;
    let bracket = -0.5 * (tau - 1.0) * (tau - 1.0)
        + (e - p.e_plus)
        + g * p.e_plus * (tau - 1.0)
        + p.q * (y + z - WaveParams::Z_PLUS);
    let f2 = -(tau / p.kappa_v) * bracket;
    let f3 = tau_s * tau_s * y / p.d;
    let f4 = p.k * p.phi_e(e) * z - tau_s * tau_s * y / p.d;
    [f1, f2, f3, f4]
}

/// Analytic Jacobian of `tw_rhs`.
pub fn tw_jacobian(u: &[f64; DIM], p: &WaveParams) -> [[f64; DIM]; DIM] {
    let (tau, e, z, y) = (u[0], u[1], u[2], u[3]);
    let g = p.gamma;
    let bracket = -0.5 * (tau - 1.0) * (tau - 1.0)
        + (e - p.e_plus)
        + g * p.e_plus * (tau - 1.0)
        + p.q * (y + z - WaveParams::Z_PLUS);
    let phi = p.phi_e(e);
    let dphi = p.phi_e_prime(e);
    [
        [
            -(2.0 * tau - 1.0 - g * p.e_plus) / p.nu,
            -g / p.nu,
            0.0,
            0.0,
        ],
        [
            -(bracket + tau * (-(tau - 1.0) + g * p.e_plus)) / p.kappa_v,
            -tau / p.kappa_v,
            -tau * p.q / p.kappa_v,
            -tau * p.q / p.kappa_v,
        ],
        [2.0 * tau * y / p.d, 0.0, 0.0, tau * tau / p.d],
        [
            -2.0 * tau * y / p.d,
            p.k * dphi * z,
            p.k * phi,
            -tau * tau / p.d,
        ],
    ]
}

/// Unburned equilibrium `(1, e_+, 1, 0)`.
pub fn unburned_state(params: &WaveParams) -> [f64; DIM] {
    [WaveParams::TAU_PLUS, params.e_plus, WaveParams::Z_PLUS, 0.0]
}

/// Burned equilibrium `(tau_-, e_-, 0, 0)`.
pub fn burned_state(end: &EndStates) -> [f64; DIM] {
    [end.tau_minus, end.e_minus, WaveParams::Z_MINUS, 0.0]
}

struct TwSystem {
    params: WaveParams,
}

impl BvpRhs for TwSystem {
    fn dim(&self) -> usize {
        DIM
    }
    fn rhs(&self, _x: f64, y: &[f64], out: &mut [f64]) {
        let u = [y[0], y[1], y[2], y[3]];
        let f = tw_rhs_raw(&u, &self.params);
        out.copy_from_slice(&f);
    }
    fn jac(&self, _x: f64, y: &[f64], out: &mut DMatrix<f64>) {
        let u = [y[0], y[1], y[2], y[3]];
        let j = tw_jacobian(&u, &self.params);
        for r in 0..DIM {
            for c in 0..DIM {
                out[(r, c)] = j[r][c];
            }
        }
    }
}

/// End-state Jacobians, their spectral classification, and the projective
/// boundary-condition rows built from them.
pub struct EndAnalysis {
    pub j_plus: DMatrix<f64>,
    pub j_minus: DMatrix<f64>,
    /// Conditions at `-M`: rows spanning the left-invariant subspace of the
    /// strictly stable spectrum of `J_-` (modes that blow up backward).
    pub left_rows: DMatrix<f64>,
    /// Conditions at `+M`: rows spanning the left-invariant subspace of the
    /// strictly unstable plus center spectrum of `J_+`.
    pub right_rows: DMatrix<f64>,
    /// `(stable, center, unstable)` dimensions of `J_+`.
    pub dims_plus: (usize, usize, usize),
    /// `(stable, center, unstable)` dimensions of `J_-`.
    pub dims_minus: (usize, usize, usize),
    /// Center projectors; endpoint deviations are measured with center
    /// components removed (they need not decay, e.g. the frozen-reactant
    /// direction of a nonreactive shock).
    pub p_center_plus: DMatrix<f64>,
    pub p_center_minus: DMatrix<f64>,
}

fn dmat_from_jac(j: &[[f64; DIM]; DIM]) -> DMatrix<f64> {
    DMatrix::from_fn(DIM, DIM, |r, c| j[r][c])
}

/// Builds the 4x4 end Jacobians and the projective BC rows.
pub fn end_analysis(params: &WaveParams) -> Result<EndAnalysis> {
    let end = rh_end_state(params)?;
    let u_plus = unburned_state(params);
    let u_minus = burned_state(&end);
    let j_plus = dmat_from_jac(&tw_jacobian(&u_plus, params));
    let j_minus = dmat_from_jac(&tw_jacobian(&u_minus, params));

    let scale_p = j_plus.norm().max(1.0);
    let scale_m = j_minus.norm().max(1.0);
    let center_tol = 1e-9;
    let sp_plus = split_real_spectrum(&j_plus, center_tol * scale_p, 1e-10)
        .map_err(Error::IllConditionedEnds)?;
    let sp_minus = split_real_spectrum(&j_minus, center_tol * scale_m, 1e-10)
        .map_err(Error::IllConditionedEnds)?;

    // Left end: kill components along the strictly stable subspace of J_-.
    let left_rows = if sp_minus.dim_stable > 0 {
        range_basis_real(&sp_minus.p_stable.transpose(), sp_minus.dim_stable).transpose()
    } else {
        DMatrix::zeros(0, DIM)
    };
    // Right end: kill strictly unstable components and pin the centers.
    let p_right = &sp_plus.p_unstable + &sp_plus.p_center;
    let n_right = sp_plus.dim_unstable + sp_plus.dim_center;
    let right_rows = if n_right > 0 {
        range_basis_real(&p_right.transpose(), n_right).transpose()
    } else {
        DMatrix::zeros(0, DIM)
    };

    let total = left_rows.nrows() + right_rows.nrows() + 1;
    if total != DIM {
        return Err(Error::IllConditionedEnds(format!(
            "projective BC count {total} != {DIM}: J+ dims (s,c,u) = {:?}, J- dims = {:?}",
            (sp_plus.dim_stable, sp_plus.dim_center, sp_plus.dim_unstable),
            (sp_minus.dim_stable, sp_minus.dim_center, sp_minus.dim_unstable),
        )));
    }

    Ok(EndAnalysis {
        j_plus,
        j_minus,
        left_rows,
        right_rows,
        dims_plus: (sp_plus.dim_stable, sp_plus.dim_center, sp_plus.dim_unstable),
        dims_minus: (sp_minus.dim_stable, sp_minus.dim_center, sp_minus.dim_unstable),
        p_center_plus: sp_plus.p_center,
        p_center_minus: sp_minus.p_center,
    })
}

/// Truncated computational domain `[-m_minus, m_plus]` with auto-extension.
#[derive(Debug, Clone, Copy)]
pub struct DomainSpec {
    pub m_minus: f64,
    pub m_plus: f64,
    pub auto_extend: bool,
    pub max_extensions: usize,
}

impl Default for DomainSpec {
    fn default() -> Self {
        Self {
            m_minus: 25.0,
            m_plus: 5.0,
            auto_extend: true,
            max_extensions: 6,
        }
    }
}

/// Numerically resolved heteroclinic orbit with interpolant and derivative
/// access.
#[derive(Debug, Clone)]
pub struct Profile {
    pub params: WaveParams,
    pub end_states: EndStates,
    sol: BvpSolution,
    /// Max-abs deviations `|U(-M) - U_-|`, `|U(+M) - U_+|`.
    pub endpoint_dev: (f64, f64),
    pub max_defect: f64,
}

impl Profile {
    pub fn x_left(&self) -> f64 {
        self.sol.mesh[0]
    }
    pub fn x_right(&self) -> f64 {
        *self.sol.mesh.last().unwrap()
    }
    pub fn mesh(&self) -> &[f64] {
        &self.sol.mesh
    }

    pub fn value_into(&self, x: f64, out: &mut [f64; DIM]) {
        let xc = x.clamp(self.x_left(), self.x_right());
        self.sol.eval_into(xc, out.as_mut_slice());
    }

    pub fn deriv_into(&self, x: f64, out: &mut [f64; DIM]) {
        let xc = x.clamp(self.x_left(), self.x_right());
        self.sol.eval_deriv_into(xc, out.as_mut_slice());
    }

    pub fn value(&self, x: f64) -> [f64; DIM] {
        let mut out = [0.0; DIM];
        self.value_into(x, &mut out);
        out
    }

    pub fn deriv(&self, x: f64) -> [f64; DIM] {
        let mut out = [0.0; DIM];
        self.deriv_into(x, &mut out);
        out
    }

    /// Velocity `u = 1 - tau`.
    pub fn u(&self, x: f64) -> f64 {
        1.0 - self.value(x)[0]
    }

    /// Velocity gradient `u_x = -tau_x`.
    pub fn u_x(&self, x: f64) -> f64 {
        -self.deriv(x)[0]
    }

    /// Post-hoc verification of the resolution invariants: endpoint
    /// criterion, positivity, and the interpolant defect at interval
    /// midpoints and on a 10x finer grid.
    pub fn validate(&self) -> Result<()> {
        if self.endpoint_dev.0 > 1e-4 || self.endpoint_dev.1 > 1e-4 {
            return Err(Error::DomainTooShort(format!(
                "endpoint deviations {:?} exceed 1e-4",
                self.endpoint_dev
            )));
        }
        let sys = TwSystem { params: self.params };
        let mesh = self.mesh();
        let mut val = [0.0; DIM];
        let mut der = [0.0; DIM];
        let mut f = [0.0; DIM];
        for i in 0..mesh.len() - 1 {
            for s in 0..10 {
                let x = mesh[i] + (mesh[i + 1] - mesh[i]) * (s as f64 + 0.5) / 10.0;
                self.value_into(x, &mut val);
                if !(val[0] > 0.0) {
                    return Err(Error::Domain(format!("tau <= 0 at x = {x}")));
                }
                if !(val[1] > 0.0) {
                    return Err(Error::Domain(format!("e <= 0 at x = {x}")));
                }
                if !(-1e-9..=1.0 + 1e-6).contains(&val[2]) {
                    return Err(Error::Domain(format!("z = {} out of range at x = {x}", val[2])));
                }
            }
            // Strict defect check at the interval midpoint (a collocation
            // point of the converged solution).
            let xm = 0.5 * (mesh[i] + mesh[i + 1]);
            self.value_into(xm, &mut val);
            self.deriv_into(xm, &mut der);
            sys.rhs(xm, &val, &mut f);
            for c in 0..DIM {
                let defect = (der[c] - f[c]).abs();
                if defect > 1e-8 + 1e-6 * f[c].abs().max(1.0) {
                    return Err(Error::ProfileNotFound(format!(
                        "midpoint defect {defect:.3e} at x = {xm} component {c}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Initial-guess construction for `solve_profile`.
pub enum Guess<'a> {
    /// Smoothed ZND template (or a frozen-shock template when the reaction
    /// never ignites and carries no heat).
    ZndTemplate,
    /// Seed from a previously solved profile (continuation).
    Previous(&'a Profile),
}

fn initial_mesh(params: &WaveParams, m_minus: f64, m_plus: f64) -> Vec<f64> {
    let h_fine = (params.nu.min(params.kappa_v).min(params.d) / 10.0).clamp(1e-4, 0.05);
    let mut pts = vec![-m_minus, 0.0, m_plus];
    // Uniform backbone.
    let h_back = 0.25;
    let mut x = -m_minus + h_back;
    while x < m_plus - 0.5 * h_back {
        pts.push(x);
        x += h_back;
    }
    // Geometric cluster around the shock layer at x = 0.
    let mut o = h_fine;
    while o < 3.0 {
        if -o > -m_minus {
            pts.push(-o);
        }
        if o < m_plus {
            pts.push(o);
        }
        o *= 1.3;
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut mesh = vec![pts[0]];
    for &p in &pts[1..] {
        if p - mesh.last().unwrap() > 0.45 * h_fine {
            mesh.push(p);
        }
    }
    if (mesh.last().unwrap() - m_plus).abs() > 1e-12 {
        mesh.push(m_plus);
    }
    // 0 must be a mesh point for the phase condition.
    if !mesh.iter().any(|&v| v == 0.0) {
        mesh.push(0.0);
        mesh.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    mesh
}

fn template_guess(
    params: &WaveParams,
    end: &EndStates,
    mesh: &[f64],
) -> Result<DMatrix<f64>> {
    let u_plus = unburned_state(params);
    let w = params.nu.max(1e-3);
    let spike = znd::neumann_state(params.e_plus, params.gamma)?;
    let ignites = spike.2 / params.c_v > params.t_ig;

    let mut y = DMatrix::zeros(DIM, mesh.len());
    if params.q > 0.0 || ignites {
        let m_minus = -mesh[0];
        let zprof = znd::znd_profile_relaxed(params, m_minus)?;
        for (j, &x) in mesh.iter().enumerate() {
            let sigma = 1.0 / (1.0 + (-x / w).exp());
            let zx = zprof.z_at(x.min(0.0)).clamp(0.0, 1.0);
            let (tau_z, _, e_z, _) = znd::znd_state_at_z(zx, params)?;
            let dz = params.k * params.phi_e(e_z) * zx;
            let y_z = params.d * dz / (tau_z * tau_z);
            y[(0, j)] = sigma * u_plus[0] + (1.0 - sigma) * tau_z;
            y[(1, j)] = sigma * u_plus[1] + (1.0 - sigma) * e_z;
            y[(2, j)] = sigma * u_plus[2] + (1.0 - sigma) * zx;
            y[(3, j)] = (1.0 - sigma) * y_z;
        }
    } else {
        // Frozen shock: reaction is off everywhere and releases no heat.
        for (j, &x) in mesh.iter().enumerate() {
            let sigma = 1.0 / (1.0 + (-x / w).exp());
            y[(0, j)] = sigma * u_plus[0] + (1.0 - sigma) * end.tau_minus;
            y[(1, j)] = sigma * u_plus[1] + (1.0 - sigma) * end.e_minus;
            y[(2, j)] = 1.0;
            y[(3, j)] = 0.0;
        }
    }
    Ok(y)
}

fn endpoint_deviation(
    sol: &BvpSolution,
    u_minus: &[f64; DIM],
    u_plus: &[f64; DIM],
    analysis: &EndAnalysis,
) -> (f64, f64) {
    let m = sol.mesh.len();
    let mut delta_l = DVector::zeros(DIM);
    let mut delta_r = DVector::zeros(DIM);
    for c in 0..DIM {
        delta_l[c] = sol.y[(c, 0)] - u_minus[c];
        delta_r[c] = sol.y[(c, m - 1)] - u_plus[c];
    }
    let dl = &delta_l - &analysis.p_center_minus * &delta_l;
    let dr = &delta_r - &analysis.p_center_plus * &delta_r;
    (dl.amax(), dr.amax())
}

/// Solves the traveling-wave BVP with projective boundary conditions and the
/// phase condition `tau(0) = (tau_+ + tau_-)/2`, auto-extending the domain
/// until the endpoint criterion `|U(+-M) - U_+-| <= 1e-4` holds.
pub fn solve_profile(params: &WaveParams, domain: &DomainSpec, guess: Guess) -> Result<Profile> {
    if params.phi_t(params.t_plus()) > 0.0 {
        return Err(Error::Domain(format!(
            "unburned state ignites: T_+ = {:.6e} >= T_ig = {:.6e}",
            params.t_plus(),
            params.t_ig
        )));
    }
    let end = rh_end_state(params)?;
    let analysis = end_analysis(params)?;
    let u_plus = unburned_state(params);
    let u_minus = burned_state(&end);

    let bc = BoundaryConditions {
        left_rows: analysis.left_rows.clone(),
        y_left_ref: DVector::from_column_slice(&u_minus),
        right_rows: analysis.right_rows.clone(),
        y_right_ref: DVector::from_column_slice(&u_plus),
        pin: Some(InteriorPin {
            x: 0.0,
            coeffs: DVector::from_column_slice(&[1.0, 0.0, 0.0, 0.0]),
            value: 0.5 * (WaveParams::TAU_PLUS + end.tau_minus),
        }),
    };
    let sys = TwSystem { params: *params };
    let opts = BvpOptions::default();

    let (mut m_minus, mut m_plus) = (domain.m_minus, domain.m_plus);
    let mut prev: Option<Profile> = match guess {
        Guess::Previous(p) => Some(p.clone()),
        Guess::ZndTemplate => None,
    };

    for attempt in 0..=domain.max_extensions {
        let mesh = match &prev {
            // Continuation keeps the previous refined mesh (internal layers
            // persist across parameter steps); fresh skeleton only where the
            // domain grew.
            Some(p) => {
                let mut pts: Vec<f64> = p
                    .mesh()
                    .iter()
                    .cloned()
                    .filter(|&x| x >= -m_minus && x <= m_plus)
                    .collect();
                for x in initial_mesh(params, m_minus, m_plus) {
                    if x < p.x_left() || x > p.x_right() {
                        pts.push(x);
                    }
                }
                pts.push(-m_minus);
                pts.push(m_plus);
                pts.push(0.0);
                pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                pts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
                pts
            }
            None => initial_mesh(params, m_minus, m_plus),
        };
        let y0 = match &prev {
            Some(p) => {
                let mut y = DMatrix::zeros(DIM, mesh.len());
                let mut buf = [0.0; DIM];
                for (j, &x) in mesh.iter().enumerate() {
                    p.value_into(x, &mut buf);
                    for c in 0..DIM {
                        y[(c, j)] = buf[c];
                    }
                }
                y
            }
            None => template_guess(params, &end, &mesh)?,
        };

        let sol = bvp::solve(&sys, &bc, &mesh, &y0, &opts).map_err(|e| match e {
            bvp::BvpError::TooManyNodes { nodes, max_defect } => Error::ProfileNotFound(format!(
                "mesh limit at {nodes} nodes, defect {max_defect:.3e}"
            )),
            other => Error::ProfileNotFound(other.to_string()),
        })?;

        let dev = endpoint_deviation(&sol, &u_minus, &u_plus, &analysis);
        let profile = Profile {
            params: *params,
            end_states: end,
            endpoint_dev: dev,
            max_defect: sol.max_defect,
            sol,
        };
        if dev.0 <= 1e-4 && dev.1 <= 1e-4 {
            profile.validate()?;
            return Ok(profile);
        }
        if !domain.auto_extend || attempt == domain.max_extensions {
            return Err(Error::DomainTooShort(format!(
                "endpoint deviations {dev:?} exceed 1e-4 at domain [-{m_minus}, {m_plus}]"
            )));
        }
        if dev.0 > 1e-4 {
            m_minus *= 1.5;
        }
        if dev.1 > 1e-4 {
            m_plus *= 1.5;
        }
        prev = Some(profile);
    }
    unreachable!()
}

fn lerp_params(a: &WaveParams, b: &WaveParams, t: f64) -> Result<WaveParams> {
    let l = |x: f64, y: f64| x + t * (y - x);
    WaveParams::new(
        l(a.e_plus, b.e_plus),
        l(a.q, b.q),
        l(a.e_act, b.e_act),
        l(a.gamma, b.gamma),
        l(a.nu, b.nu),
        l(a.d, b.d),
        l(a.kappa_v, b.kappa_v),
        // k spans decades along calibrated sweeps; interpolate its log.
        (l(a.k.ln(), b.k.ln())).exp(),
        l(a.t_ig, b.t_ig),
        l(a.c_v, b.c_v),
    )
}

/// Solves a sequence of profiles, each seeding the next, with step halving
/// (up to 8 levels) on failure.
pub fn continue_profiles(
    path: &[WaveParams],
    domain: &DomainSpec,
) -> Result<Vec<Profile>> {
    if path.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(path.len());
    out.push(solve_profile(&path[0], domain, Guess::ZndTemplate)?);
    for i in 1..path.len() {
        let prev = out.last().unwrap();
        let prof = continue_step(prev, &path[i - 1], &path[i], domain, 8).map_err(|e| {
            Error::ContinuationStalled {
                reached: i - 1,
                total: path.len(),
                reason: e.to_string(),
            }
        })?;
        out.push(prof);
    }
    Ok(out)
}

fn continue_step(
    prev: &Profile,
    from: &WaveParams,
    to: &WaveParams,
    domain: &DomainSpec,
    depth: usize,
) -> Result<Profile> {
    match solve_profile(to, domain, Guess::Previous(prev)) {
        Ok(p) => Ok(p),
        Err(e) => {
            if depth == 0 {
                return Err(e);
            }
            let mid = lerp_params(from, to, 0.5)?;
            let half = continue_step(prev, from, &mid, domain, depth - 1)?;
            continue_step(&half, &mid, to, domain, depth - 1)
        }
    }
}

/// Shock-layer width over reaction-zone length.
///
/// Shock width is the x-interval over which `|tau'|` exceeds 5% of its
/// maximum (the visible extent of the layer); reaction length is the
/// half-reaction scale `|x at z = 1/2|`, matching the rate-calibration
/// convention. With these measures the standard `nu = 0.1` family sits at
/// ~1/10 and the `nu = 0.3` family at order one.
pub fn shock_reaction_ratio(profile: &Profile) -> f64 {
    let (a, b) = (profile.x_left(), profile.x_right());
    let h = (profile.params.nu / 20.0).clamp(1e-4, 0.01);
    let n = ((b - a) / h).ceil() as usize;
    let mut max_slope = 0.0f64;
    let mut slopes = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let x = a + (b - a) * i as f64 / n as f64;
        let s = profile.deriv(x)[0].abs();
        slopes.push((x, s));
        max_slope = max_slope.max(s);
    }
    let threshold = 0.05 * max_slope;
    let mut first = a;
    let mut last = a;
    let mut seen = false;
    for &(x, s) in &slopes {
        if s >= threshold {
            if !seen {
                first = x;
                seen = true;
            }
            last = x;
        }
    }
    let width = (last - first).max(h);

    // Leftmost crossing of z = 1/2.
    let mut x_lo = a;
    let mut x_hi = b;
    for &(x, _) in &slopes {
        if profile.value(x)[2] >= 0.5 {
            x_hi = x;
            break;
        }
        x_lo = x;
    }
    for _ in 0..60 {
        let mid = 0.5 * (x_lo + x_hi);
        if profile.value(mid)[2] >= 0.5 {
            x_hi = mid;
        } else {
            x_lo = mid;
        }
    }
    let reaction_len = 0.5 * (x_lo + x_hi).abs().max(1e-12);
    width / reaction_len
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::znd::calibrate_k;
    use approx::assert_abs_diff_eq;

    fn bench_family() -> WaveParams {
        let p =
            WaveParams::new(6.23e-2, 6.23e-1, 3.1, 0.2, 0.1, 0.1, 0.1, 1.0, 6.64e-2, 1.0).unwrap();
        let k = calibrate_k(&p).unwrap();
        p.with_k(k)
    }

    #[test]
    fn equilibria_are_fixed_points() {
        let p = bench_family();
        let end = rh_end_state(&p).unwrap();
        // Unburned state (reaction off below the ignition cutoff).
        assert!(p.t_plus() < p.t_ig);
        let f = tw_rhs(&unburned_state(&p), &p).unwrap();
        for c in f {
            assert_abs_diff_eq!(c, 0.0, epsilon = 1e-12);
        }
        // Burned state: z = 0 kills the reaction, RH closure kills fluxes.
        let f = tw_rhs(&burned_state(&end), &p).unwrap();
        for c in f {
            assert_abs_diff_eq!(c, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rh_closure_zeroes_flux_relations_after_q_zero() {
        // q = 0 nonreactive shock: both end states are equilibria of the
        // once-integrated system with y = 0, z constant.
        let p = WaveParams::new(6.23e-2, 0.0, 3.1, 0.2, 0.1, 0.1, 0.1, 1.0, 10.0, 1.0).unwrap();
        let end = rh_end_state(&p).unwrap();
        for state in [
            [1.0, p.e_plus, 1.0, 0.0],
            [end.tau_minus, end.e_minus, 1.0, 0.0],
        ] {
            let f = tw_rhs(&state, &p).unwrap();
            for c in f {
                assert_abs_diff_eq!(c, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = bench_family();
        let mut state = 0x853c49e6748fea9bu64;
        let mut rnd = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..10 {
            let u = [
                0.1 + 0.9 * rnd(),
                0.05 + 0.95 * rnd(),
                rnd(),
                0.2 * (rnd() - 0.5),
            ];
            let jac = tw_jacobian(&u, &p);
            for c in 0..DIM {
                let h = 1e-6 * (1.0 + u[c].abs());
                let mut up = u;
                up[c] += h;
                let mut dn = u;
                dn[c] -= h;
                let fp = tw_rhs(&up, &p).unwrap();
                let fm = tw_rhs(&dn, &p).unwrap();
                for r in 0..DIM {
                    let fd = (fp[r] - fm[r]) / (2.0 * h);
                    let tol = 1e-6 * (1.0 + fd.abs().max(jac[r][c].abs()));
                    assert!(
                        (jac[r][c] - fd).abs() <= tol,
                        "J[{r}][{c}] = {} vs FD {fd}",
                        jac[r][c]
                    );
                }
            }
        }
    }

    #[test]
    fn end_jacobian_structure_at_unburned_state() {
        // phi(T_+) = 0: the reaction rows decouple from (tau, e) and the
        // lower-left 2x2 coupling block vanishes identically.
        let p = bench_family();
        let j = tw_jacobian(&unburned_state(&p), &p);
        for r in 2..4 {
            for c in 0..2 {
                assert_eq!(j[r][c], 0.0);
            }
        }
        // z column only feeds the energy equation: J[1][2] = -tau q / kappa_v.
        assert_abs_diff_eq!(j[1][2], -p.q / p.kappa_v, epsilon = 1e-14);
        // Reaction block has eigenvalues {0, -tau^2/d}.
        assert_eq!(j[2][2], 0.0);
        assert_eq!(j[3][2], 0.0);
    }

    #[test]
    fn projective_bc_counts_close_the_bvp() {
        let p = bench_family();
        let a = end_analysis(&p).unwrap();
        // dim(stable at U+) + dim(unstable at U-) = 5 = 4 + (2 - 1).
        assert_eq!(a.dims_plus.0 + a.dims_minus.2, 5);
        assert_eq!(a.left_rows.nrows() + a.right_rows.nrows() + 1, DIM);
        // Expected classes: J+ has 3 stable + 1 center, J- has 2 stable + 2
        // unstable.
        assert_eq!(a.dims_plus, (3, 1, 0));
        assert_eq!(a.dims_minus, (2, 0, 2));
    }

    #[test]
    fn bc_projectors_idempotent() {
        let p = bench_family();
        let sp = split_real_spectrum(&end_analysis(&p).unwrap().j_minus, 1e-9, 1e-10).unwrap();
        let pp = &sp.p_stable;
        assert!((pp * pp - pp).norm() < 1e-12 * (1.0 + pp.norm()));
    }

    #[test]
    fn solve_bench_profile() {
        let p = bench_family();
        let prof = solve_profile(&p, &DomainSpec::default(), Guess::ZndTemplate).unwrap();
        prof.validate().unwrap();
        assert!(prof.endpoint_dev.0 <= 1e-4 && prof.endpoint_dev.1 <= 1e-4);
        // u = 1 - tau and u_x = -tau_x by construction.
        let x = -3.7;
        assert_abs_diff_eq!(prof.u(x), 1.0 - prof.value(x)[0], epsilon = 1e-14);
        assert_abs_diff_eq!(prof.u_x(x), -prof.deriv(x)[0], epsilon = 1e-14);
        // The bench: z enters the shock layer strictly below 1 and recovers.
        let z_entry = prof.value(-1.0)[2];
        assert!(z_entry < 0.95, "z at layer entrance = {z_entry}");
        assert!(prof.value(prof.x_right())[2] > 1.0 - 2e-4);
    }

    #[test]
    fn q_zero_reduces_to_gas_shock() {
        let p = WaveParams::new(6.23e-2, 0.0, 3.1, 0.2, 0.1, 0.1, 0.1, 1.0, 10.0, 1.0).unwrap();
        let prof = solve_profile(&p, &DomainSpec::default(), Guess::ZndTemplate).unwrap();
        for i in 0..=100 {
            let x = prof.x_left() + (prof.x_right() - prof.x_left()) * i as f64 / 100.0;
            assert!(
                (prof.value(x)[2] - 1.0).abs() <= 1e-8,
                "z deviates from 1 at x = {x}"
            );
        }
        // tau decreases monotonically through a pure shock.
        assert!(prof.value(prof.x_left())[0] < prof.value(prof.x_right())[0]);
    }

    #[test]
    fn translation_gauge_fixed_by_phase_condition() {
        let p = bench_family();
        let a = solve_profile(&p, &DomainSpec::default(), Guess::ZndTemplate).unwrap();
        // Second solve seeded from a shifted copy of the first.
        let b = solve_profile(&p, &DomainSpec::default(), Guess::Previous(&a)).unwrap();
        let mut worst = 0.0f64;
        for i in 0..=200 {
            let x = a.x_left().max(b.x_left())
                + (a.x_right().min(b.x_right()) - a.x_left().max(b.x_left())) * i as f64 / 200.0;
            let (ua, ub) = (a.value(x), b.value(x));
            for c in 0..DIM {
                worst = worst.max((ua[c] - ub[c]).abs());
            }
        }
        assert!(worst <= 1e-5, "profiles differ by {worst}");
    }

    #[test]
    fn bench_width_ratio_near_one_tenth() {
        let p = bench_family();
        let prof = solve_profile(&p, &DomainSpec::default(), Guess::ZndTemplate).unwrap();
        let r = shock_reaction_ratio(&prof);
        assert!(
            (0.05..=0.2).contains(&r),
            "shock/reaction ratio {r} not within factor 2 of 1/10"
        );
    }

    #[test]
    fn continuation_in_activation_energy() {
        let base = bench_family();
        let path: Vec<WaveParams> = [3.1, 3.6, 4.1]
            .iter()
            .map(|&ea| {
                let p = base.with_e_act(ea);
                let k = calibrate_k(&p).unwrap();
                p.with_k(k)
            })
            .collect();
        let profs = continue_profiles(&path, &DomainSpec::default()).unwrap();
        assert_eq!(profs.len(), 3);
        // End states do not involve E_A.
        for pr in &profs {
            assert_abs_diff_eq!(
                pr.end_states.tau_minus,
                profs[0].end_states.tau_minus,
                epsilon = 1e-14
            );
        }
        // Reversing the path reproduces the first profile.
        let back = continue_step(
            profs.last().unwrap(),
            &path[2],
            &path[0],
            &DomainSpec::default(),
            8,
        )
        .unwrap();
        let mut worst = 0.0f64;
        for i in 0..=100 {
            let x = back.x_left() + (back.x_right() - back.x_left()) * i as f64 / 100.0;
            let (ua, ub) = (back.value(x), profs[0].value(x));
            for c in 0..DIM {
                worst = worst.max((ua[c] - ub[c]).abs());
            }
        }
        assert!(worst <= 1e-6, "round trip differs by {worst}");
    }

    #[test]
    fn shock_width_shrinks_with_viscosity() {
        let base = bench_family();
        let mut widths = Vec::new();
        for nu in [0.1, 0.05] {
            let p = WaveParams::new(
                base.e_plus,
                base.q,
                base.e_act,
                base.gamma,
                nu,
                nu,
                nu,
                base.k,
                base.t_ig,
                base.c_v,
            )
            .unwrap();
            let prof = solve_profile(&p, &DomainSpec::default(), Guess::ZndTemplate).unwrap();
            widths.push(shock_reaction_ratio(&prof));
        }
        // Ratio scales roughly linearly in nu: halving nu should land near
        // half the ratio (within 20%).
        let ratio = widths[1] / widths[0];
        assert!(
            (0.4..=0.6).contains(&ratio),
            "width ratio scaling {ratio} not ~0.5"
        );
    }
}
