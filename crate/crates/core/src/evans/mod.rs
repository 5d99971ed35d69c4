//! Evans-function evaluation by the polar-coordinate (analytic
//! orthogonalization) method with Kato-analytic initialization, plus the
//! contour, moment, and root-location machinery built on top of it.
//!
//! At each spectral point the decaying-at-`+inf` and growing-at-`-inf`
//! bundles are continued analytically from a real anchor, factored `V = QR`,
//! and the orthonormal frame is integrated toward the matching point `x = 0`
//! by `Q' = (I - QQ*)GQ` together with the radial accumulator
//! `(log gamma)' = trace(Q*GQ) - mu(lambda)`, where the analytic shift `mu`
//! is the sum of the bundle's limit eigenvalues. The Evans value is
//! `D = gamma_+ gamma_- det[Q_+ | Q_-]` at `x = 0`; the shift changes `D`
//! only by a nonvanishing analytic factor.

pub mod contour;
pub mod kato;
pub mod moments;
pub mod roots;

use std::cell::RefCell;
use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linop::{SpectralSystem, N};
use crate::ode::{integrate_projected, OdeOptions, OdeState};

use self::kato::{Bundle, KatoFrame, KatoTransporter};

type CMat = DMatrix<Complex64>;

/// Exponential-weight choice for the radial equation. Any analytic shift
/// leaves root locations untouched; alternatives exist to test exactly that.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShiftMode {
    /// Sum of the bundle's limit eigenvalues (keeps `log gamma` bounded).
    EigenvalueSum,
    /// Eigenvalue sum plus an affine analytic perturbation; changes `|D|`
    /// but not the root set.
    Perturbed { offset: Complex64, slope: Complex64 },
}

#[derive(Debug, Clone)]
pub struct EvansOptions {
    /// ODE tolerances for the frame/radial integration.
    pub rtol: f64,
    pub atol: f64,
    /// Real anchor for Kato seeding (outer contour radius by default).
    pub anchor: f64,
    /// Orthonormality drift threshold triggering polar retraction.
    pub drift_tol: f64,
    pub shift: ShiftMode,
    /// Evaluate `Im lambda < 0` by conjugating the mirror value (exact for
    /// this real-coefficient system).
    pub mirror_lower: bool,
    /// Scalar rescaling of the Kato seeds (gauge-invariance testing).
    pub seed_scale: Complex64,
}

impl Default for EvansOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-6,
            atol: 1e-8,
            anchor: 10.0,
            drift_tol: 1e-8,
            shift: ShiftMode::EigenvalueSum,
            mirror_lower: true,
            seed_scale: Complex64::new(1.0, 0.0),
        }
    }
}

/// Frame + radial state for the stiff integration.
#[derive(Clone)]
struct FrameState {
    omega: CMat,
    log_gamma: Complex64,
}

impl OdeState for FrameState {
    fn axpy(&mut self, a: f64, other: &Self) {
        self.omega.zip_apply(&other.omega, |s, o| *s += a * o);
        self.log_gamma += a * other.log_gamma;
    }
    fn scale(&mut self, a: f64) {
        self.omega.apply(|v| *v *= a);
        self.log_gamma *= a;
    }
    fn set_zero(&mut self) {
        self.omega.apply(|v| *v = Complex64::new(0.0, 0.0));
        self.log_gamma = Complex64::new(0.0, 0.0);
    }
    fn error_ratio(err: &Self, y: &Self, y_new: &Self, atol: f64, rtol: f64) -> f64 {
        let mut m = 0.0f64;
        for (e, (a, b)) in err.omega.iter().zip(y.omega.iter().zip(y_new.omega.iter())) {
            m = m.max(e.norm() / (atol + rtol * a.norm().max(b.norm())));
        }
        m.max(
            err.log_gamma.norm()
                / (atol + rtol * y.log_gamma.norm().max(y_new.log_gamma.norm())),
        )
    }
}

/// Evans-function evaluator bound to one spectral system.
pub struct EvansEvaluator<'a> {
    pub sys: &'a SpectralSystem<'a>,
    pub opts: EvansOptions,
    kato_plus: KatoTransporter<'a>,
    kato_minus: KatoTransporter<'a>,
    anchor_plus: KatoFrame,
    anchor_minus: KatoFrame,
    /// `(k_plus, k_minus)` at the anchor; rank constancy is enforced along
    /// every transport.
    pub dims: (usize, usize),
    last_frames: RefCell<Option<(KatoFrame, KatoFrame)>>,
    d_cache: RefCell<HashMap<(u64, u64), Complex64>>,
    pub evaluations: RefCell<usize>,
}

fn key_of(l: Complex64) -> (u64, u64) {
    (l.re.to_bits(), l.im.to_bits())
}

impl<'a> EvansEvaluator<'a> {
    pub fn new(sys: &'a SpectralSystem<'a>, opts: EvansOptions) -> Result<Self> {
        let anchor = Complex64::new(opts.anchor, 0.0);
        let (kp, km) = sys.splitting_dims(anchor)?;
        let kato_plus = KatoTransporter::new(sys, Bundle::StablePlus);
        let kato_minus = KatoTransporter::new(sys, Bundle::UnstableMinus);
        let mut anchor_plus = kato_plus.seed(anchor)?;
        let mut anchor_minus = kato_minus.seed(anchor)?;
        anchor_plus.basis *= opts.seed_scale;
        anchor_minus.basis *= opts.seed_scale;
        Ok(Self {
            sys,
            opts,
            kato_plus,
            kato_minus,
            anchor_plus,
            anchor_minus,
            dims: (kp, km),
            last_frames: RefCell::new(None),
            d_cache: RefCell::new(HashMap::new()),
            evaluations: RefCell::new(0),
        })
    }

    /// Canonical transport path from the anchor: radially along the real
    /// axis, then along the circular arc to the target argument.
    fn canonical_waypoints(&self, lambda: Complex64) -> Vec<Complex64> {
        let r = lambda.norm();
        let mut path = vec![Complex64::new(r, 0.0)];
        let theta = lambda.arg();
        let n_arc = (theta.abs() / 0.25).ceil() as usize;
        for j in 1..=n_arc.max(1) {
            let t = theta * j as f64 / n_arc.max(1) as f64;
            path.push(Complex64::from_polar(r, t));
        }
        path
    }

    fn frames_at(&self, lambda: Complex64) -> Result<(KatoFrame, KatoFrame)> {
        // Locality shortcut: continue from the last frames when the hop is
        // short and stays away from the origin.
        if let Some((fp, fm)) = self.last_frames.borrow().as_ref() {
            let from = fp.lambda;
            let hop = (lambda - from).norm();
            if hop <= 0.3 * (1.0 + lambda.norm().min(from.norm()))
                && segment_origin_clearance(from, lambda) > 5e-5
            {
                let np = self.kato_plus.transport(fp, lambda)?;
                let nm = self.kato_minus.transport(fm, lambda)?;
                return Ok((np, nm));
            }
        }
        let mut fp = self.anchor_plus.clone();
        let mut fm = self.anchor_minus.clone();
        for wp in self.canonical_waypoints(lambda) {
            fp = self.kato_plus.transport(&fp, wp)?;
            fm = self.kato_minus.transport(&fm, wp)?;
        }
        if fp.lambda != lambda {
            fp = self.kato_plus.transport(&fp, lambda)?;
            fm = self.kato_minus.transport(&fm, lambda)?;
        }
        Ok((fp, fm))
    }

    fn shift_value(&self, base: Complex64, lambda: Complex64) -> Complex64 {
        match self.opts.shift {
            ShiftMode::EigenvalueSum => base,
            ShiftMode::Perturbed { offset, slope } => base + offset + slope * lambda,
        }
    }

    /// Integrates one side's frame from the domain end to `x = 0`.
    fn integrate_side(&self, lambda: Complex64, frame: &KatoFrame, plus_side: bool) -> Result<FrameState> {
        let qr = frame.basis.clone().qr();
        let q = qr.q();
        let r = qr.r();
        let mut log_gamma = Complex64::new(0.0, 0.0);
        for i in 0..frame.rank {
            let rii = r[(i, i)];
            if rii.norm() == 0.0 {
                return Err(Error::EvansIntegrationFailure(
                    "rank-deficient Kato frame".into(),
                ));
            }
            log_gamma += rii.ln();
        }
        let mu_base = if plus_side {
            self.kato_plus.eigenvalue_sum(lambda)?
        } else {
            self.kato_minus.eigenvalue_sum(lambda)?
        };
        let mu = self.shift_value(mu_base, lambda);

        let x_start = if plus_side {
            self.sys.x_right()
        } else {
            self.sys.x_left()
        };
        let state0 = FrameState {
            omega: q,
            log_gamma,
        };
        let rhs = |x: f64, s: &FrameState| -> FrameState {
            let g = self
                .sys
                .g_at(x, lambda)
                .expect("x within the profile domain");
            let gq = &g * &s.omega;
            let qgq = s.omega.adjoint() * &gq;
            let omega_dot = &gq - &s.omega * &qgq;
            FrameState {
                omega: omega_dot,
                log_gamma: qgq.trace() - mu,
            }
        };
        let drift_tol = self.opts.drift_tol;
        let project = |s: &mut FrameState| -> bool {
            let m = s.omega.adjoint() * &s.omega;
            let k = m.nrows();
            let e = &m - CMat::identity(k, k);
            if e.norm() <= drift_tol {
                return false;
            }
            // Polar retraction Q <- Q (Q*Q)^{-1/2}; fold the log-det of the
            // correction into the radial factor.
            let e2 = &e * &e;
            let inv_sqrt = CMat::identity(k, k) - &e * Complex64::new(0.5, 0.0)
                + &e2 * Complex64::new(3.0 / 8.0, 0.0);
            s.omega = &s.omega * inv_sqrt;
            let corr = (&e - &e2 * Complex64::new(0.5, 0.0)).trace();
            s.log_gamma += 0.5 * corr;
            true
        };
        let opts = OdeOptions {
            rtol: self.opts.rtol,
            atol: self.opts.atol,
            max_steps: 4_000_000,
            initial_step: None,
        };
        integrate_projected(rhs, x_start, 0.0, state0, &opts, |_| {}, project)
            .map_err(|e| Error::EvansIntegrationFailure(e.to_string()))
    }

    /// Evans-function value at one spectral point.
    pub fn eval(&self, lambda: Complex64) -> Result<Complex64> {
        if self.opts.mirror_lower && lambda.im < 0.0 {
            return Ok(self.eval(lambda.conj())?.conj());
        }
        if let Some(v) = self.d_cache.borrow().get(&key_of(lambda)) {
            return Ok(*v);
        }
        let (fp, fm) = self.frames_at(lambda)?;
        let d = self.eval_with_frames(lambda, &fp, &fm)?;
        *self.last_frames.borrow_mut() = Some((fp, fm));
        self.d_cache.borrow_mut().insert(key_of(lambda), d);
        Ok(d)
    }

    fn eval_with_frames(&self, lambda: Complex64, fp: &KatoFrame, fm: &KatoFrame) -> Result<Complex64> {
        *self.evaluations.borrow_mut() += 1;
        let plus = self.integrate_side(lambda, fp, true)?;
        let minus = self.integrate_side(lambda, fm, false)?;
        let (kp, km) = (fp.rank, fm.rank);
        if kp + km != N {
            return Err(Error::SplittingLost {
                re: lambda.re,
                im: lambda.im,
                reason: format!("bundle dimensions {kp} + {km} != {N}"),
            });
        }
        let mut full = CMat::zeros(N, N);
        full.view_mut((0, 0), (N, kp)).copy_from(&plus.omega);
        full.view_mut((0, kp), (N, km)).copy_from(&minus.omega);
        let det = full.lu().determinant();
        Ok((plus.log_gamma + minus.log_gamma).exp() * det)
    }

    /// Clears transport locality (fresh start from the anchor).
    pub fn reset_locality(&self) {
        *self.last_frames.borrow_mut() = None;
    }
}

/// Distance from the origin to the segment `[a, b]` in the spectral plane.
fn segment_origin_clearance(a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return a.norm();
    }
    let t = (-(a.re * d.re + a.im * d.im) / len2).clamp(0.0, 1.0);
    (a + t * d).norm()
}
