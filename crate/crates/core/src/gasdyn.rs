//! Thermodynamic closure, ignition kinetics, Rankine-Hugoniot algebra,
//! Chapman-Jouguet limits, and overdrive/Erpenbeck coordinate conversions.
//!
//! Everything here works in the scaled variables with wave speed `s = 1`,
//! unburned specific volume `tau_plus = 1`, and unburned velocity
//! `u_plus = 0`. The ideal-gas closure is `p = Gamma e / tau` with
//! `T = e / c_v`, so temperature and internal energy are interchangeable up
//! to the factor `c_v`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Full physical/numerical parameter tuple for one detonation-wave family,
/// with the scaling convention (`s = 1`, `tau_plus = 1`, `u_plus = 0`) baked in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveParams {
    /// Specific internal energy of the unburned state.
    pub e_plus: f64,
    /// Heat release, `0 <= q <= q_CJ(e_plus)`.
    pub q: f64,
    /// Activation energy (the bifurcation parameter of all sweeps).
    pub e_act: f64,
    /// Gruneisen coefficient `Gamma = gamma - 1 > 0`.
    pub gamma: f64,
    /// Viscosity.
    pub nu: f64,
    /// Species diffusivity.
    pub d: f64,
    /// Heat conductivity over specific heat, `kappa_v = kappa / c_v`.
    pub kappa_v: f64,
    /// Reaction rate.
    pub k: f64,
    /// Ignition temperature cutoff.
    pub t_ig: f64,
    /// Specific heat at constant volume.
    pub c_v: f64,
}

impl WaveParams {
    /// Wave speed, fixed by the scaling.
    pub const S: f64 = 1.0;
    /// Unburned specific volume, fixed by the scaling.
    pub const TAU_PLUS: f64 = 1.0;
    /// Unburned velocity, fixed by translation invariance.
    pub const U_PLUS: f64 = 0.0;
    /// Unburned reactant mass fraction.
    pub const Z_PLUS: f64 = 1.0;
    /// Burned reactant mass fraction.
    pub const Z_MINUS: f64 = 0.0;

    /// Validates the parameter tuple.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        e_plus: f64,
        q: f64,
        e_act: f64,
        gamma: f64,
        nu: f64,
        d: f64,
        kappa_v: f64,
        k: f64,
        t_ig: f64,
        c_v: f64,
    ) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::Domain(format!("Gamma must be positive, got {gamma}")));
        }
        let e_plus_max = 1.0 / (gamma * (gamma + 1.0));
        if !(0.0..=e_plus_max).contains(&e_plus) {
            return Err(Error::Domain(format!(
                "e_plus = {e_plus} outside [0, 1/(Gamma(Gamma+1))] = [0, {e_plus_max}]"
            )));
        }
        if !(q >= 0.0) {
            return Err(Error::Domain(format!("q must be nonnegative, got {q}")));
        }
        let q_max = q_cj(e_plus, gamma)?;
        if q > q_max {
            return Err(Error::CjLimitExceeded { q, q_cj: q_max });
        }
        if !(e_act >= 0.0) {
            return Err(Error::Domain(format!("E_A must be nonnegative, got {e_act}")));
        }
        for (name, v) in [
            ("nu", nu),
            ("d", d),
            ("kappa_v", kappa_v),
            ("k", k),
            ("c_v", c_v),
        ] {
            if !(v > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !t_ig.is_finite() {
            return Err(Error::Domain(format!("T_ig must be finite, got {t_ig}")));
        }
        Ok(Self {
            e_plus,
            q,
            e_act,
            gamma,
            nu,
            d,
            kappa_v,
            k,
            t_ig,
            c_v,
        })
    }

    /// Unburned temperature `T_+ = e_+ / c_v`.
    pub fn t_plus(&self) -> f64 {
        self.e_plus / self.c_v
    }

    /// Same family with a different reaction rate.
    pub fn with_k(&self, k: f64) -> Self {
        Self { k, ..*self }
    }

    /// Same family with a different activation energy.
    pub fn with_e_act(&self, e_act: f64) -> Self {
        Self { e_act, ..*self }
    }

    /// Ignition function of temperature: Arrhenius with temperature cutoff.
    ///
    /// `phi(T) = exp(-E_A / (T - T_ig))` for `T > T_ig`, `0` otherwise.
    /// The value at `T = T_ig` is `0` by the continuous limit.
    pub fn phi_t(&self, t: f64) -> f64 {
        if t > self.t_ig {
            (-self.e_act / (t - self.t_ig)).exp()
        } else {
            0.0
        }
    }

    /// Ignition function of internal energy, `phi_check(e) = phi(e / c_v)`.
    pub fn phi_e(&self, e: f64) -> f64 {
        self.phi_t(e / self.c_v)
    }

    /// `d phi_check / d e = phi_check(e) * E_A / (c_v (T - T_ig)^2)` for
    /// `T > T_ig`, `0` otherwise.
    pub fn phi_e_prime(&self, e: f64) -> f64 {
        let t = e / self.c_v;
        if t > self.t_ig {
            let dt = t - self.t_ig;
            self.phi_t(t) * self.e_act / (self.c_v * dt * dt)
        } else {
            0.0
        }
    }
}

/// Burned/unburned equilibria closed by the Rankine-Hugoniot relations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndStates {
    pub tau_minus: f64,
    pub u_minus: f64,
    pub e_minus: f64,
}

impl EndStates {
    pub fn t_minus(&self, c_v: f64) -> f64 {
        self.e_minus / c_v
    }
}

/// Ideal-gas pressure and its partial derivatives at `(tau, e)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pressure {
    pub p: f64,
    pub p_tau: f64,
    pub p_e: f64,
    pub p_z: f64,
}

/// `p = Gamma e / tau` with partials; the equation of state is z-independent.
pub fn pressure(tau: f64, e: f64, gamma: f64) -> Result<Pressure> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("pressure: tau must be positive, got {tau}")));
    }
    if !(e > 0.0) {
        return Err(Error::Domain(format!("pressure: e must be positive, got {e}")));
    }
    Ok(Pressure {
        p: gamma * e / tau,
        p_tau: -gamma * e / (tau * tau),
        p_e: gamma / tau,
        p_z: 0.0,
    })
}

/// Discriminant of the burned-state quadratic at heat release `q`.
///
/// `(Gamma+1)^2 (Gamma e_+ + 1)^2 - Gamma (Gamma+2) (1 + 2(Gamma+1) e_+ + 2q)`
pub fn rh_discriminant(e_plus: f64, q: f64, gamma: f64) -> f64 {
    let a = (gamma + 1.0) * (gamma * e_plus + 1.0);
    a * a - gamma * (gamma + 2.0) * (1.0 + 2.0 * (gamma + 1.0) * e_plus + 2.0 * q)
}

/// Chapman-Jouguet heat-release limit: the `q` at which the end-state
/// discriminant vanishes.
pub fn q_cj(e_plus: f64, gamma: f64) -> Result<f64> {
    let e_plus_max = 1.0 / (gamma * (gamma + 1.0));
    if !(0.0..=e_plus_max).contains(&e_plus) {
        return Err(Error::Domain(format!(
            "q_cj: e_plus = {e_plus} outside [0, {e_plus_max}]"
        )));
    }
    let a = (gamma + 1.0) * (gamma * e_plus + 1.0);
    Ok((a * a - gamma * (gamma + 2.0) * (1.0 + 2.0 * (gamma + 1.0) * e_plus))
        / (2.0 * gamma * (gamma + 2.0)))
}

/// Strong-branch (minus-root) state downstream of a discontinuity with heat
/// release `q`, for arbitrary `q` (used by the ZND construction with partial
/// heat release). Fails with `CjLimitExceeded` on a negative discriminant.
pub fn rh_state(e_plus: f64, q: f64, gamma: f64) -> Result<(f64, f64, f64)> {
    let disc = rh_discriminant(e_plus, q, gamma);
    if disc < 0.0 {
        let q_max = q_cj(e_plus, gamma).unwrap_or(f64::NAN);
        return Err(Error::CjLimitExceeded { q, q_cj: q_max });
    }
    let tau = ((gamma + 1.0) * (gamma * e_plus + 1.0) - disc.sqrt()) / (gamma + 2.0);
    let u = 1.0 - tau;
    let e = tau * (gamma * e_plus + 1.0 - tau) / gamma;
    Ok((tau, u, e))
}

/// Burned end state of a strong detonation, from the closed-form minus-branch
/// root of the Rankine-Hugoniot relations.
pub fn rh_end_state(params: &WaveParams) -> Result<EndStates> {
    let (tau_minus, u_minus, e_minus) = rh_state(params.e_plus, params.q, params.gamma)?;
    if !(tau_minus > 0.0 && tau_minus < 1.0 - 1e-12) {
        return Err(Error::Domain(format!(
            "degenerate end state: tau_minus = {tau_minus} not in (0, 1)"
        )));
    }
    Ok(EndStates {
        tau_minus,
        u_minus,
        e_minus,
    })
}

/// Ignition threshold from the convex-combination rule,
/// `e_ig = (1 - w) e_plus + w e_mid`, with `e_mid` the specific internal
/// energy at the jump of the corresponding ZND solution. Small `w` weights
/// the unburned state heavily.
pub fn ignition_energy_from_weight(e_plus: f64, e_mid: f64, w: f64) -> f64 {
    (1.0 - w) * e_plus + w * e_mid
}

/// Asymptotic overdrive estimate in the strong-shock limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overdrive {
    /// `f ~ 1 / (2 Gamma (Gamma+2) q)`
    pub f: f64,
    /// False when `q` exceeds the stated validity range
    /// `q <~ 1 / (2 Gamma (Gamma+2))` of the asymptotic form.
    pub within_validity: bool,
}

/// Overdrive factor `f = M^2 / M_CJ^2` estimated from the heat release alone
/// (the `e_plus -> 0` limit).
pub fn overdrive_from_q(q: f64, gamma: f64) -> Result<Overdrive> {
    if !(q > 0.0 && gamma > 0.0) {
        return Err(Error::Domain(format!(
            "overdrive_from_q: need q > 0 and Gamma > 0, got q = {q}, Gamma = {gamma}"
        )));
    }
    let bound = 1.0 / (2.0 * gamma * (gamma + 2.0));
    Ok(Overdrive {
        f: bound / q,
        within_validity: q < bound,
    })
}

/// Solves `q0 e = q_CJ(e)` for the Chapman-Jouguet unburned energy on
/// `(0, 1/(Gamma(Gamma+1))]` by safeguarded Newton with bisection fallback,
/// to absolute tolerance 1e-12.
pub fn e_cj_solve(q0: f64, gamma: f64) -> Result<f64> {
    if !(q0 > 0.0 && gamma > 0.0) {
        return Err(Error::Domain(format!(
            "e_cj_solve: need q0 > 0 and Gamma > 0, got q0 = {q0}, Gamma = {gamma}"
        )));
    }
    let e_max = 1.0 / (gamma * (gamma + 1.0));
    let f = |e: f64| -> f64 { q_cj(e, gamma).unwrap() - q0 * e };
    // f(0) = 1/(2 Gamma (Gamma+2)) > 0, f(e_max) = -q0 e_max < 0.
    let (mut lo, mut hi) = (0.0, e_max);
    let mut e = (1.0 / (2.0 * gamma * (gamma + 2.0) * q0)).min(0.5 * e_max);
    for _ in 0..200 {
        let fe = f(e);
        if fe > 0.0 {
            lo = e;
        } else {
            hi = e;
        }
        // Derivative of q_cj: d/de [((G+1)(Ge+1))^2 - ...] / (2 G (G+2))
        let a = (gamma + 1.0) * (gamma * e + 1.0);
        let dq_cj = (2.0 * a * (gamma + 1.0) * gamma
            - gamma * (gamma + 2.0) * 2.0 * (gamma + 1.0))
            / (2.0 * gamma * (gamma + 2.0));
        let df = dq_cj - q0;
        let mut next = if df != 0.0 { e - fe / df } else { 0.5 * (lo + hi) };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - e).abs() <= 1e-12 * (1.0 + e.abs()) {
            return Ok(next);
        }
        e = next;
    }
    Err(Error::Domain(
        "e_cj_solve: no convergence after 200 iterations".into(),
    ))
}

/// How the wave strength is specified when converting from Erpenbeck's
/// coordinatization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrengthSpec {
    /// Overdrive factor `f = e_plus^CJ / e_plus >= 1`.
    Overdrive(f64),
    /// Scaled unburned internal energy directly.
    EPlus(f64),
}

/// Result of converting Erpenbeck-scaled parameters `(q0, E0)` to ours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErpenbeckScaled {
    pub e_plus: f64,
    pub q: f64,
    pub e_act: f64,
    pub overdrive: f64,
    pub e_plus_cj: f64,
}

/// Maps Erpenbeck's `(f or e_plus; q0, E0)` to scaled `(e_plus, q, E_A)`:
/// `e_plus = e_plus^CJ / f`, `q = q0 e_plus`, `E_A = E0 e_plus`.
pub fn erpenbeck_convert(
    strength: StrengthSpec,
    q0: f64,
    e0: f64,
    gamma: f64,
) -> Result<ErpenbeckScaled> {
    let e_plus_cj = e_cj_solve(q0, gamma)?;
    let (e_plus, overdrive) = match strength {
        StrengthSpec::Overdrive(f) => {
            if !(f >= 1.0) {
                return Err(Error::Domain(format!("overdrive must be >= 1, got {f}")));
            }
            (e_plus_cj / f, f)
        }
        StrengthSpec::EPlus(e_plus) => {
            if !(e_plus > 0.0 && e_plus <= e_plus_cj) {
                return Err(Error::Domain(format!(
                    "e_plus = {e_plus} outside (0, e_plus_CJ = {e_plus_cj}]"
                )));
            }
            (e_plus, e_plus_cj / e_plus)
        }
    };
    Ok(ErpenbeckScaled {
        e_plus,
        q: q0 * e_plus,
        e_act: e0 * e_plus,
        overdrive,
        e_plus_cj,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn bench_params() -> WaveParams {
        WaveParams::new(6.23e-2, 6.23e-1, 3.1, 0.2, 0.1, 0.1, 0.1, 2.71e-1, 6.64e-2, 1.0).unwrap()
    }

    #[test]
    fn pressure_direct_values() {
        let pr = pressure(1.0, 6.23e-2, 0.2).unwrap();
        assert_relative_eq!(pr.p, 1.246e-2, max_relative = 1e-12);
        let pr = pressure(2.57e-1, 9.71e-1, 0.2).unwrap();
        assert_relative_eq!(pr.p, 0.2 * 9.71e-1 / 2.57e-1, max_relative = 1e-12);
        assert_abs_diff_eq!(pr.p, 7.556e-1, epsilon = 5e-4);
        assert_eq!(pr.p_z, 0.0);
        assert_relative_eq!(pr.p_tau, -0.2 * 9.71e-1 / (2.57e-1 * 2.57e-1), max_relative = 1e-12);
        assert_relative_eq!(pr.p_e, 0.2 / 2.57e-1, max_relative = 1e-12);
    }

    #[test]
    fn pressure_domain_errors() {
        assert!(pressure(0.0, 1.0, 0.2).is_err());
        assert!(pressure(-1.0, 1.0, 0.2).is_err());
        assert!(pressure(1.0, 0.0, 0.2).is_err());
    }

    #[test]
    fn ignition_cutoff_and_limits() {
        let p = bench_params();
        assert_eq!(p.phi_t(p.t_ig), 0.0);
        assert_eq!(p.phi_t(p.t_ig - 1e-9), 0.0);
        assert_relative_eq!(p.phi_t(1e12), 1.0, max_relative = 1e-10);
        // Exponent exactly -1 at T = T_ig + E_A.
        assert_relative_eq!(p.phi_t(p.t_ig + p.e_act), (-1.0f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn ignition_continuous_and_monotone() {
        let p = bench_params();
        let mut prev = 0.0;
        for i in 0..2000 {
            let t = p.t_ig + 1e-6 + (i as f64) * 1e-3;
            let phi = p.phi_t(t);
            assert!(phi >= prev, "phi not monotone at T = {t}");
            prev = phi;
        }
        // Continuity at the cutoff: tiny just above T_ig.
        assert!(p.phi_t(p.t_ig + 1e-8) < 1e-300);
    }

    #[test]
    fn ignition_derivative_matches_finite_differences() {
        let p = bench_params();
        for i in 1..50 {
            let e = p.t_ig * p.c_v + 0.02 * i as f64;
            let h = 1e-6 * (1.0 + e.abs());
            let fd = (p.phi_e(e + h) - p.phi_e(e - h)) / (2.0 * h);
            assert_relative_eq!(p.phi_e_prime(e), fd, max_relative = 1e-6);
        }
        // Zero below the cutoff.
        assert_eq!(p.phi_e_prime(p.t_ig * p.c_v - 0.01), 0.0);
    }

    #[test]
    fn q_cj_zeroes_discriminant() {
        for &(e_plus, gamma) in &[(6.23e-2, 0.2), (0.0, 0.2), (0.01, 0.4), (0.3, 0.5)] {
            let q = q_cj(e_plus, gamma).unwrap();
            assert_abs_diff_eq!(rh_discriminant(e_plus, q, gamma), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn q_cj_admits_paper_heat_release() {
        // Fig. parameters use q = 6.23e-1; the family must be admissible.
        let q = q_cj(6.23e-2, 0.2).unwrap();
        assert!(q > 6.23e-1, "q_CJ = {q} should exceed 6.23e-1");
    }

    #[test]
    fn q_cj_matches_bisection_oracle() {
        // Independent oracle: bisect the sign change of the discriminant in q.
        let (e_plus, gamma) = (6.23e-2, 0.2);
        let (mut lo, mut hi) = (0.0f64, 10.0f64);
        assert!(rh_discriminant(e_plus, lo, gamma) > 0.0);
        assert!(rh_discriminant(e_plus, hi, gamma) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if rh_discriminant(e_plus, mid, gamma) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let q_bisect = 0.5 * (lo + hi);
        assert_abs_diff_eq!(q_bisect, q_cj(e_plus, gamma).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn q_cj_domain_error() {
        assert!(q_cj(-0.1, 0.2).is_err());
        assert!(q_cj(10.0, 0.2).is_err());
    }

    #[test]
    fn rh_end_state_reproduces_figure_caption() {
        let s = rh_end_state(&bench_params()).unwrap();
        assert_abs_diff_eq!(s.tau_minus, 2.57e-1, epsilon = 5e-4);
        assert_abs_diff_eq!(s.u_minus, 7.43e-1, epsilon = 5e-4);
        assert_abs_diff_eq!(s.e_minus, 9.71e-1, epsilon = 5e-4);
    }

    #[test]
    fn mass_conservation_exact() {
        let s = rh_end_state(&bench_params()).unwrap();
        assert_eq!(s.u_minus, 1.0 - s.tau_minus);
    }

    #[test]
    fn q_cj_is_supremum_of_admissible_q() {
        let (e_plus, gamma) = (6.23e-2, 0.2);
        let q = q_cj(e_plus, gamma).unwrap();
        let ok = WaveParams::new(e_plus, q * (1.0 - 1e-9), 3.1, gamma, 0.1, 0.1, 0.1, 1.0, 0.066, 1.0);
        assert!(ok.is_ok());
        assert!(rh_end_state(&ok.unwrap()).is_ok());
        let bad = WaveParams::new(e_plus, q * (1.0 + 1e-9), 3.1, gamma, 0.1, 0.1, 0.1, 1.0, 0.066, 1.0);
        assert!(matches!(bad, Err(Error::CjLimitExceeded { .. })));
        assert!(matches!(
            rh_state(e_plus, q * (1.0 + 1e-9), gamma),
            Err(Error::CjLimitExceeded { .. })
        ));
    }

    #[test]
    fn tau_minus_strictly_monotone_in_q() {
        // Strong-branch monotonicity. The minus root moves up from the
        // Neumann value (q = 0) toward the sonic value at q_CJ: tau_minus is
        // strictly increasing in q, consistent with the figure-caption pair
        // (tau_N ~ 0.105 at q = 0, tau_minus ~ 0.257 at q = 0.623).
        let (e_plus, gamma) = (6.23e-2, 0.2);
        let q_max = q_cj(e_plus, gamma).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..50 {
            let q = q_max * (i as f64) / 50.0;
            let (tau, _, _) = rh_state(e_plus, q, gamma).unwrap();
            assert!(tau > prev, "tau_minus not increasing at q = {q}");
            prev = tau;
        }
    }

    #[test]
    fn overdrive_strong_shock_example() {
        // e_plus = 0, q = 0.1, Gamma = 0.2 gives f ~ 11.3.
        let od = overdrive_from_q(0.1, 0.2).unwrap();
        assert_abs_diff_eq!(od.f, 11.3, epsilon = 0.1);
        assert!(od.within_validity);
        let od = overdrive_from_q(5.0, 0.2).unwrap();
        assert!(!od.within_validity);
    }

    #[test]
    fn e_cj_fickett_wood_benchmark() {
        // q0 = 50, Gamma = 0.2 gives e_plus^CJ ~ 0.023.
        let e = e_cj_solve(50.0, 0.2).unwrap();
        assert_abs_diff_eq!(e, 0.023, epsilon = 0.001);
        // The solved root satisfies the implicit CJ relation exactly.
        let q0e = 50.0 * e;
        assert_abs_diff_eq!(q_cj(e, 0.2).unwrap(), q0e, epsilon = 1e-10);
    }

    #[test]
    fn erpenbeck_conversion_onset_example() {
        // q0 = E0 = 50, f ~ 1.73: e_plus ~ 0.012, q ~ 0.6, E_A = q.
        let c = erpenbeck_convert(StrengthSpec::Overdrive(1.73), 50.0, 50.0, 0.2).unwrap();
        assert_abs_diff_eq!(c.e_plus, 0.012, epsilon = 1.5e-3);
        assert_abs_diff_eq!(c.q, 0.6, epsilon = 0.08);
        assert_eq!(c.q, c.e_act);
        // Exact structural relations.
        assert_relative_eq!(c.e_plus, c.e_plus_cj / 1.73, max_relative = 1e-14);
        assert_relative_eq!(c.q, 50.0 * c.e_plus, max_relative = 1e-14);
        // Round trip through the e_plus form.
        let c2 = erpenbeck_convert(StrengthSpec::EPlus(c.e_plus), 50.0, 50.0, 0.2).unwrap();
        assert_relative_eq!(c2.overdrive, 1.73, max_relative = 1e-12);
    }

    #[test]
    fn ignition_weight_reproduces_caption_threshold() {
        // e_mid is the Neumann-spike internal energy for the standard family;
        // the weight 0.01 on e_mid (0.99 on e_plus) lands on the caption's
        // T_ig = 6.64e-2.
        let (_, _, e_mid) = rh_state(6.23e-2, 0.0, 0.2).unwrap();
        let e_ig = ignition_energy_from_weight(6.23e-2, e_mid, 0.01);
        assert_abs_diff_eq!(e_ig, 6.64e-2, epsilon = 5e-5);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn rh_state_is_physical(frac_e in 0.0f64..0.95, frac_q in 0.0f64..0.999, gamma in 0.05f64..1.0) {
                let e_plus = frac_e / (gamma * (gamma + 1.0));
                let q = frac_q * q_cj(e_plus, gamma).unwrap();
                let (tau, u, e) = rh_state(e_plus, q, gamma).unwrap();
                prop_assert!(tau > 0.0 && tau < 1.0);
                prop_assert_eq!(u, 1.0 - tau);
                prop_assert!(e > 0.0);
            }

            #[test]
            fn phi_bounded_and_monotone(t1 in -1.0f64..5.0, t2 in -1.0f64..5.0, e_act in 0.0f64..20.0) {
                let p = WaveParams::new(6.23e-2, 0.1, e_act, 0.2, 0.1, 0.1, 0.1, 1.0, 0.5, 1.0).unwrap();
                let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
                prop_assert!((0.0..=1.0).contains(&p.phi_t(lo)));
                prop_assert!(p.phi_t(lo) <= p.phi_t(hi));
            }
        }
    }
}
