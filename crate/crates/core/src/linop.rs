//! Assembly of the flux-variable eigenvalue system `W' = G(x; lambda) W`
//! linearized about a traveling-wave profile, including its `x -> +-inf`
//! limits.
//!
//! The unknown is ordered `(Y_1, Y_2, W_2)` with `Y_1` scalar, `Y_2` the
//! momentum/energy/reaction flux perturbations, and `W_2 = (u, e, z)` the
//! parabolic state perturbations; the specific-volume perturbation has been
//! eliminated through the first flux variable. All blocks are affine in the
//! spectral parameter.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gasdyn::{pressure, WaveParams};
use crate::profile::Profile;
use crate::subspace::splitting_complex;

pub const N: usize = 7;

type CMat = DMatrix<Complex64>;

/// Pointwise data needed to assemble `G`: the background state and its
/// x-derivatives (zero at the end states).
#[derive(Debug, Clone, Copy)]
pub struct StatePoint {
    pub tau: f64,
    pub u: f64,
    pub e: f64,
    pub z: f64,
    pub u_x: f64,
    pub e_x: f64,
    pub z_x: f64,
}

/// The x-dependent eigenvalue system attached to a resolved profile.
pub struct SpectralSystem<'a> {
    pub profile: &'a Profile,
    pub params: WaveParams,
    state_plus: StatePoint,
    state_minus: StatePoint,
}

impl<'a> SpectralSystem<'a> {
    pub fn new(profile: &'a Profile) -> Self {
        let params = profile.params;
        let end = profile.end_states;
        let state_plus = StatePoint {
            tau: WaveParams::TAU_PLUS,
            u: WaveParams::U_PLUS,
            e: params.e_plus,
            z: WaveParams::Z_PLUS,
            u_x: 0.0,
            e_x: 0.0,
            z_x: 0.0,
        };
        let state_minus = StatePoint {
            tau: end.tau_minus,
            u: end.u_minus,
            e: end.e_minus,
            z: WaveParams::Z_MINUS,
            u_x: 0.0,
            e_x: 0.0,
            z_x: 0.0,
        };
        Self {
            profile,
            params,
            state_plus,
            state_minus,
        }
    }

    pub fn x_left(&self) -> f64 {
        self.profile.x_left()
    }

    pub fn x_right(&self) -> f64 {
        self.profile.x_right()
    }

    /// Background state at `x` from the profile interpolant. The velocity
    /// gradient comes from mass conservation, `u_x = -tau_x`.
    pub fn state_at(&self, x: f64) -> StatePoint {
        let v = self.profile.value(x);
        let d = self.profile.deriv(x);
        StatePoint {
            tau: v[0],
            u: 1.0 - v[0],
            e: v[1],
            z: v[2],
            u_x: -d[0],
            e_x: d[1],
            z_x: d[2],
        }
    }

    /// `G(x; lambda)`.
    pub fn g_at(&self, x: f64, lambda: Complex64) -> Result<CMat> {
        if x < self.x_left() - 1e-12 || x > self.x_right() + 1e-12 {
            return Err(Error::Domain(format!(
                "x = {x} outside the profile domain [{}, {}]",
                self.x_left(),
                self.x_right()
            )));
        }
        assemble_g(&self.state_at(x), &self.params, lambda)
    }

    /// `G_+(lambda)`: the unburned-limit matrix (zero derivatives).
    pub fn g_plus(&self, lambda: Complex64) -> Result<CMat> {
        assemble_g(&self.state_plus, &self.params, lambda)
    }

    /// `G_-(lambda)`: the burned-limit matrix.
    pub fn g_minus(&self, lambda: Complex64) -> Result<CMat> {
        assemble_g(&self.state_minus, &self.params, lambda)
    }

    /// Consistent-splitting dimensions `(k_plus, k_minus)`: the count of
    /// decaying modes at `+inf` and growing modes at `-inf`. Errors with
    /// `SplittingLost` if either splitting degenerates or the dimensions do
    /// not fill the phase space.
    pub fn splitting_dims(&self, lambda: Complex64) -> Result<(usize, usize)> {
        let gp = self.g_plus(lambda)?;
        let gm = self.g_minus(lambda)?;
        let sp = splitting_complex(&gp).ok_or_else(|| Error::SplittingLost {
            re: lambda.re,
            im: lambda.im,
            reason: "splitting of the unburned limit matrix failed".into(),
        })?;
        let sm = splitting_complex(&gm).ok_or_else(|| Error::SplittingLost {
            re: lambda.re,
            im: lambda.im,
            reason: "splitting of the burned limit matrix failed".into(),
        })?;
        let (kp, km) = (sp.dim_stable, sm.dim_unstable);
        if kp + km != N {
            return Err(Error::SplittingLost {
                re: lambda.re,
                im: lambda.im,
                reason: format!("splitting dimensions {kp} + {km} != {N}"),
            });
        }
        Ok((kp, km))
    }
}

/// Assembles the 7x7 coefficient matrix from a background state point.
pub fn assemble_g(s: &StatePoint, p: &WaveParams, lambda: Complex64) -> Result<CMat> {
    let pr = pressure(s.tau, s.e, p.gamma)?;
    let (tau, u) = (s.tau, s.u);
    let (nu, kv, d, q, k) = (p.nu, p.kappa_v, p.d, p.q, p.k);
    let phi = p.phi_e(s.e);
    let dphi = p.phi_e_prime(s.e);
    let re = |v: f64| Complex64::new(v, 0.0);
    let l = lambda;

    let mut g = CMat::zeros(N, N);

    // Row 0: Y_1' = lambda Y_1 + lambda u-pert (wave speed 1).
    g[(0, 0)] = l;
    g[(0, 4)] = l;

    // Rows 1-3: Y_2' = (E_22 - lambda a0_22) W_2.
    g[(1, 4)] = -l;
    g[(2, 4)] = -l * u;
    g[(2, 5)] = -l + re(q * k * dphi * s.z);
    g[(2, 6)] = re(q * k * phi);
    g[(3, 5)] = re(-k * dphi * s.z);
    g[(3, 6)] = -l - re(k * phi);

    // Rows 4-6, column 0: b^{-1} A_21 A_11^{-1} with A_11 = -s = -1.
    g[(4, 0)] = re(-(tau * pr.p_tau / nu + s.u_x / tau));
    g[(5, 0)] = re(-s.e_x / tau);
    g[(6, 0)] = re(-2.0 * s.z_x / tau);

    // Rows 4-6, columns 1-3: -b^{-1}.
    g[(4, 1)] = re(-tau / nu);
    g[(5, 1)] = re(tau * u / kv);
    g[(5, 2)] = re(-tau / kv);
    g[(6, 3)] = re(-tau * tau / d);

    // Rows 4-6, columns 4-6: b^{-1}(-A_21 A_11^{-1} A_12 + A_22).
    let c1 = -(pr.p_tau + nu * s.u_x / (tau * tau)) - 1.0;
    let c2 = -(pr.p_tau * u + nu * u * s.u_x / (tau * tau) + kv * s.e_x / (tau * tau)) - u
        + pr.p
        - nu * s.u_x / tau;
    let c3 = -2.0 * d * s.z_x / (tau * tau * tau);
    g[(4, 4)] = re(tau / nu * c1);
    g[(4, 5)] = re(tau / nu * pr.p_e);
    g[(4, 6)] = re(tau / nu * pr.p_z);
    g[(5, 4)] = re(-(tau * u / kv) * c1 + (tau / kv) * c2);
    g[(5, 5)] = re(-tau / kv);
    g[(6, 4)] = re((tau * tau / d) * c3);
    g[(6, 6)] = re(-tau * tau / d);

    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{solve_profile, DomainSpec, Guess};
    use crate::znd::calibrate_k;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bench_profile() -> Profile {
        let p =
            WaveParams::new(6.23e-2, 6.23e-1, 3.1, 0.2, 0.1, 0.1, 0.1, 1.0, 6.64e-2, 1.0).unwrap();
        let k = calibrate_k(&p).unwrap();
        solve_profile(&p.with_k(k), &DomainSpec::default(), Guess::ZndTemplate).unwrap()
    }

    #[test]
    fn entry_identities_and_sparsity() {
        let prof = bench_profile();
        let sys = SpectralSystem::new(&prof);
        let l = c(0.7, 0.3);
        let g = sys.g_at(-2.0, l).unwrap();
        // g11 = lambda (s = 1); g13 = (lambda, 0, 0).
        assert_eq!(g[(0, 0)], l);
        assert_eq!(g[(0, 4)], l);
        // Zero blocks are exactly zero: g12, g21, g22.
        for col in 1..4 {
            assert_eq!(g[(0, col)], c(0.0, 0.0));
        }
        for row in 1..4 {
            for col in 0..4 {
                assert_eq!(g[(row, col)], c(0.0, 0.0));
            }
        }
        // First row vanishes at lambda = 0.
        let g0 = sys.g_at(-2.0, c(0.0, 0.0)).unwrap();
        for col in 0..N {
            assert_eq!(g0[(0, col)], c(0.0, 0.0));
        }
    }

    #[test]
    fn affine_in_lambda_to_machine_precision() {
        let prof = bench_profile();
        let sys = SpectralSystem::new(&prof);
        let (l1, l2, l3) = (c(0.2, 0.1), c(1.5, -0.7), c(-0.3, 2.2));
        for x in [-8.0, -0.3, 1.2] {
            let g1 = sys.g_at(x, l1).unwrap();
            let g2 = sys.g_at(x, l2).unwrap();
            let g3 = sys.g_at(x, l3).unwrap();
            let t = (l3 - l1) / (l2 - l1);
            let scale = g2.norm().max(1.0);
            for r in 0..N {
                for col in 0..N {
                    let extrap = g1[(r, col)] + t * (g2[(r, col)] - g1[(r, col)]);
                    assert!(
                        (extrap - g3[(r, col)]).norm() <= 1e-12 * scale,
                        "affinity fails at ({r},{col})"
                    );
                }
            }
        }
        // Limit matrices are affine too.
        let gp1 = sys.g_plus(l1).unwrap();
        let gp2 = sys.g_plus(l2).unwrap();
        let gp3 = sys.g_plus(l3).unwrap();
        let t = (l3 - l1) / (l2 - l1);
        assert!((&gp1 + (&gp2 - &gp1) * t - gp3).norm() < 1e-12 * gp2.norm().max(1.0));
    }

    #[test]
    fn real_coefficients_conjugate_equivariance() {
        let prof = bench_profile();
        let sys = SpectralSystem::new(&prof);
        let l = c(0.9, 1.7);
        for x in [-5.0, 0.1] {
            let g = sys.g_at(x, l).unwrap();
            let gc = sys.g_at(x, l.conj()).unwrap();
            for r in 0..N {
                for col in 0..N {
                    assert_eq!(g[(r, col)].conj(), gc[(r, col)]);
                }
            }
        }
        let gm = sys.g_minus(l).unwrap();
        let gmc = sys.g_minus(l.conj()).unwrap();
        assert_eq!(gm.map(|v| v.conj()), gmc);
    }

    #[test]
    fn reaction_block_vanishes_at_unburned_limit() {
        // Cutoff ignition at T_+ < T_ig: the E-contributions drop out of the
        // advection block, leaving pure -lambda diagonals (u_+ = 0).
        let prof = bench_profile();
        let sys = SpectralSystem::new(&prof);
        let l = c(0.4, 0.9);
        let gp = sys.g_plus(l).unwrap();
        for r in 1..4 {
            for col in 4..7 {
                let expect = if col - 3 == r { -l } else { c(0.0, 0.0) };
                assert_eq!(gp[(r, col)], expect, "g23 at ({r},{col})");
            }
        }
    }

    #[test]
    fn limit_matrices_consistent_with_endpoint_values() {
        let prof = bench_profile();
        let sys = SpectralSystem::new(&prof);
        let l = c(1.0, 0.5);
        let g_end = sys.g_at(sys.x_right(), l).unwrap();
        let gp = sys.g_plus(l).unwrap();
        assert!((g_end - &gp).norm() <= 1e-3 * gp.norm().max(1.0));
        let g_end = sys.g_at(sys.x_left(), l).unwrap();
        let gm = sys.g_minus(l).unwrap();
        assert!((g_end - &gm).norm() <= 1e-3 * gm.norm().max(1.0));
    }

    #[test]
    fn consistent_splitting_three_four() {
        let prof = bench_profile();
        let sys = SpectralSystem::new(&prof);
        for l in [c(1e-4, 0.0), c(0.1, 0.3), c(2.0, -5.0), c(10.0, 0.0), c(0.01, 9.0)] {
            let (kp, km) = sys.splitting_dims(l).unwrap();
            assert_eq!(kp + km, N);
            assert_eq!((kp, km), (3, 4), "unexpected splitting at {l}");
        }
    }

    // -----------------------------------------------------------------
    // Independent finite-difference linearization oracle.
    // -----------------------------------------------------------------

    /// Nonlinear maps of the conservative formulation.
    fn f0(u: &[f64; 4]) -> [f64; 4] {
        [u[0], u[1], u[2] + 0.5 * u[1] * u[1], u[3]]
    }
    fn f1(u: &[f64; 4], p: &WaveParams) -> [f64; 4] {
        let pr = p.gamma * u[2] / u[0];
        [-u[1], pr, u[1] * pr, 0.0]
    }
    fn bmat(u: &[f64; 4], p: &WaveParams) -> [[f64; 4]; 4] {
        let tau = u[0];
        let mut b = [[0.0; 4]; 4];
        b[1][1] = p.nu / tau;
        b[2][1] = p.nu * u[1] / tau;
        b[2][2] = p.kappa_v / tau;
        b[3][3] = p.d / (tau * tau);
        b
    }
    fn rsrc(u: &[f64; 4], p: &WaveParams) -> [f64; 4] {
        let w = p.k * p.phi_e(u[2]) * u[3];
        [0.0, 0.0, p.q * w, -w]
    }
    /// Total flux F(U, V) = (f1 - s f0)(U) - B(U) V, s = 1.
    fn total_flux(u: &[f64; 4], v: &[f64; 4], p: &WaveParams) -> [f64; 4] {
        let a = f0(u);
        let bflux = f1(u, p);
        let b = bmat(u, p);
        let mut out = [0.0; 4];
        for i in 0..4 {
            out[i] = bflux[i] - a[i];
            for j in 0..4 {
                out[i] -= b[i][j] * v[j];
            }
        }
        out
    }

    fn fd_dir<F: Fn(&[f64; 4]) -> [f64; 4]>(f: F, u: &[f64; 4], w: &[f64; 4]) -> [f64; 4] {
        let eps = 1e-6;
        let mut up = *u;
        let mut dn = *u;
        for i in 0..4 {
            up[i] += eps * w[i];
            dn[i] -= eps * w[i];
        }
        let (fp, fm) = (f(&up), f(&dn));
        let mut out = [0.0; 4];
        for i in 0..4 {
            out[i] = (fp[i] - fm[i]) / (2.0 * eps);
        }
        out
    }

    #[test]
    fn matches_finite_difference_linearization() {
        // Validates every entry of G against the directional derivative of
        // the nonlinear flux/source maps composed with the flux-variable
        // change of unknowns, at interior profile points.
        let prof = bench_profile();
        let p = prof.params;
        let sys = SpectralSystem::new(&prof);
        let lambdas = [c(0.8, 0.0), c(0.3, 1.1)];
        for &x in &[-12.0, -4.0, -0.7, -0.05, 0.8] {
            let s = sys.state_at(x);
            let ubar = [s.tau, s.u, s.e, s.z];
            let vbar = [-s.u_x, s.u_x, s.e_x, s.z_x]; // tau_x = -u_x
            for &l in &lambdas {
                let g = sys.g_at(x, l).unwrap();
                // 8 basis directions (W, W') span the flux-variable space.
                for dir in 0..8 {
                    let mut w = [0.0; 4];
                    let mut wp = [0.0; 4];
                    if dir < 4 {
                        w[dir] = 1.0;
                    } else {
                        wp[dir - 4] = 1.0;
                    }
                    // Y = dF/dU . W + dF/dV . W' (F is linear in V).
                    let mut y = fd_dir(|u| total_flux(u, &vbar, &p), &ubar, &w);
                    let b = bmat(&ubar, &p);
                    for i in 0..4 {
                        for j in 0..4 {
                            y[i] -= b[i][j] * wp[j];
                        }
                    }
                    let a0w = fd_dir(f0, &ubar, &w);
                    let ew = fd_dir(|u| rsrc(u, &p), &ubar, &w);
                    // Flux-variable vector (Y1, Y2, W2).
                    let mut wv = nalgebra::DVector::from_element(N, c(0.0, 0.0));
                    for i in 0..4 {
                        wv[i] = c(y[i], 0.0);
                    }
                    for i in 0..3 {
                        wv[4 + i] = c(w[1 + i], 0.0);
                    }
                    let gw = &g * &wv;
                    // Rows 0-3: Y' = E W - lambda a0 W.
                    for i in 0..4 {
                        let expect = c(ew[i], 0.0) - l * c(a0w[i], 0.0);
                        assert!(
                            (gw[i] - expect).norm() <= 1e-5 * (1.0 + expect.norm()),
                            "row {i} dir {dir} x {x}: {} vs {expect}",
                            gw[i]
                        );
                    }
                    // Rows 4-6: W_2' is the chosen direction's derivative.
                    for i in 0..3 {
                        let expect = c(wp[1 + i], 0.0);
                        assert!(
                            (gw[4 + i] - expect).norm() <= 1e-5 * (1.0 + expect.norm()),
                            "row {} dir {dir} x {x}: {} vs {expect}",
                            4 + i,
                            gw[4 + i]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn domain_range_error() {
        let prof = bench_profile();
        let sys = SpectralSystem::new(&prof);
        assert!(sys.g_at(sys.x_right() + 1.0, c(1.0, 0.0)).is_err());
    }

    #[test]
    fn burned_end_spot_value() {
        // g[4][1] = -tau/nu at the burned end.
        let prof = bench_profile();
        let sys = SpectralSystem::new(&prof);
        let gm = sys.g_minus(c(1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(
            gm[(4, 1)].re,
            -prof.end_states.tau_minus / prof.params.nu,
            epsilon = 1e-14
        );
    }
}
