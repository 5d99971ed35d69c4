//! Adaptive Dormand-Prince 5(4) integration, generic over the state type.
//!
//! Used for the ZND reaction-zone ODE (scalar state) and for the Evans
//! frame/radial system (matrix-valued complex state). Tolerances follow the
//! componentwise mixed criterion `|err| <= atol + rtol * |y|`.

/// Minimal vector-space interface the integrator needs.
pub trait OdeState: Clone {
    /// `self += a * other`
    fn axpy(&mut self, a: f64, other: &Self);
    /// `self *= a`
    fn scale(&mut self, a: f64);
    /// Fill with zeros, keeping the shape of `self`.
    fn set_zero(&mut self);
    /// Max over components of `|err_i| / (atol + rtol * max(|y_i|, |y_new_i|))`.
    fn error_ratio(err: &Self, y: &Self, y_new: &Self, atol: f64, rtol: f64) -> f64;
}

impl OdeState for f64 {
    fn axpy(&mut self, a: f64, other: &Self) {
        *self += a * other;
    }
    fn scale(&mut self, a: f64) {
        *self *= a;
    }
    fn set_zero(&mut self) {
        *self = 0.0;
    }
    fn error_ratio(err: &Self, y: &Self, y_new: &Self, atol: f64, rtol: f64) -> f64 {
        err.abs() / (atol + rtol * y.abs().max(y_new.abs()))
    }
}

impl OdeState for Vec<f64> {
    fn axpy(&mut self, a: f64, other: &Self) {
        for (s, o) in self.iter_mut().zip(other) {
            *s += a * o;
        }
    }
    fn scale(&mut self, a: f64) {
        for s in self.iter_mut() {
            *s *= a;
        }
    }
    fn set_zero(&mut self) {
        for s in self.iter_mut() {
            *s = 0.0;
        }
    }
    fn error_ratio(err: &Self, y: &Self, y_new: &Self, atol: f64, rtol: f64) -> f64 {
        let mut m = 0.0f64;
        for i in 0..err.len() {
            let r = err[i].abs() / (atol + rtol * y[i].abs().max(y_new[i].abs()));
            m = m.max(r);
        }
        m
    }
}

/// One accepted step of the integration, with the derivative at the left node
/// so that a cubic Hermite interpolant can be reconstructed.
#[derive(Debug, Clone)]
pub struct Step<S> {
    pub x: f64,
    pub y: S,
    pub dy: S,
}

pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub initial_step: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-6,
            atol: 1e-8,
            max_steps: 2_000_000,
            initial_step: None,
        }
    }
}

#[derive(Debug)]
pub enum OdeError {
    StepSizeUnderflow { x: f64 },
    MaxStepsExceeded { x: f64 },
}

impl std::fmt::Display for OdeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OdeError::StepSizeUnderflow { x } => write!(f, "step size underflow at x = {x:e}"),
            OdeError::MaxStepsExceeded { x } => write!(f, "max step count exceeded at x = {x:e}"),
        }
    }
}

// Dormand-Prince coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
// 5th-order weights equal the last A row; 4th-order weights below.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `y' = f(x, y)` from `x0` to `x1` (either direction). Calls
/// `on_step` after every accepted step; the final state is returned. The
/// callback receives the step data and may be used to record a dense profile.
pub fn integrate<S, F, G>(
    f: F,
    x0: f64,
    x1: f64,
    y0: S,
    opts: &OdeOptions,
    on_step: G,
) -> Result<S, OdeError>
where
    S: OdeState,
    F: FnMut(f64, &S) -> S,
    G: FnMut(&Step<S>),
{
    integrate_projected(f, x0, x1, y0, opts, on_step, |_| false)
}

/// Like [`integrate`], with a post-acceptance hook that may adjust the state
/// (manifold retraction for constrained systems). The hook returns whether
/// it modified the state, which invalidates the first-same-as-last stage.
pub fn integrate_projected<S, F, G, P>(
    mut f: F,
    x0: f64,
    x1: f64,
    y0: S,
    opts: &OdeOptions,
    mut on_step: G,
    mut project: P,
) -> Result<S, OdeError>
where
    S: OdeState,
    F: FnMut(f64, &S) -> S,
    G: FnMut(&Step<S>),
    P: FnMut(&mut S) -> bool,
{
    let dir = if x1 >= x0 { 1.0 } else { -1.0 };
    let span = (x1 - x0).abs();
    if span == 0.0 {
        return Ok(y0);
    }
    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(x, &y);
    let mut h = opts.initial_step.unwrap_or(span / 100.0).min(span);
    let h_min = span * 1e-14;

    let mut ks: Vec<S> = Vec::with_capacity(7);
    for step_count in 0..opts.max_steps {
        let _ = step_count;
        if (x - x1).abs() <= span * 1e-14 {
            return Ok(y);
        }
        h = h.min((x1 - x).abs());
        let hs = dir * h;

        ks.clear();
        ks.push(k1.clone());
        for i in 0..6 {
            let mut yi = y.clone();
            for (j, kj) in ks.iter().enumerate() {
                yi.axpy(hs * A[i][j], kj);
            }
            ks.push(f(x + C[i] * hs, &yi));
        }
        // 5th-order solution (FSAL: weights are A[5]).
        let mut y5 = y.clone();
        for (j, kj) in ks.iter().take(6).enumerate() {
            y5.axpy(hs * A[5][j], kj);
        }
        // Error = y5 - y4.
        let mut err = y5.clone();
        err.axpy(-1.0, &y);
        for (j, kj) in ks.iter().enumerate() {
            err.axpy(-hs * B4[j], kj);
        }
        let ratio = S::error_ratio(&err, &y, &y5, opts.atol, opts.rtol);

        if ratio <= 1.0 {
            on_step(&Step {
                x,
                y: y.clone(),
                dy: k1.clone(),
            });
            x += hs;
            y = y5;
            k1 = if project(&mut y) {
                f(x, &y)
            } else {
                ks[6].clone() // FSAL
            };
            if (x - x1).abs() <= span * 1e-14 {
                on_step(&Step {
                    x,
                    y: y.clone(),
                    dy: k1.clone(),
                });
                return Ok(y);
            }
        }
        let factor = if ratio > 0.0 {
            (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
        if h < h_min {
            return Err(OdeError::StepSizeUnderflow { x });
        }
    }
    Err(OdeError::MaxStepsExceeded { x })
}

/// Cubic Hermite evaluation on one step `[x0, x1]` with stored endpoint
/// values and derivatives.
pub fn hermite_eval(x0: f64, y0: f64, d0: f64, x1: f64, y1: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h * h10 * d0 + h01 * y1 + h * h11 * d1
}
