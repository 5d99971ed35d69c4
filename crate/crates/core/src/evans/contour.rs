//! Adaptive evaluation of an analytic function along closed contours, with
//! the refinement criterion used for winding-number work: adjacent samples
//! must differ by less than a quarter turn in argument and 20% in relative
//! magnitude.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Anything that can be evaluated as a single-valued analytic function on
/// the contour's domain. Implementations must return path-consistent values
/// (the Evans evaluator guarantees this through transported bases).
pub trait AnalyticMap {
    fn eval(&self, lambda: Complex64) -> Result<Complex64>;
}

impl AnalyticMap for crate::evans::EvansEvaluator<'_> {
    fn eval(&self, lambda: Complex64) -> Result<Complex64> {
        crate::evans::EvansEvaluator::eval(self, lambda)
    }
}

/// Wrapper for closures (synthetic test functions).
pub struct FnMap<F: Fn(Complex64) -> Complex64>(pub F);

impl<F: Fn(Complex64) -> Complex64> AnalyticMap for FnMap<F> {
    fn eval(&self, lambda: Complex64) -> Result<Complex64> {
        Ok((self.0)(lambda))
    }
}

/// Closed, positively oriented contour shapes.
#[derive(Debug, Clone, Copy)]
pub enum ContourShape {
    /// Boundary of `{Re >= 0, r_in <= |lambda| <= r_out}`.
    SemiAnnulus { r_in: f64, r_out: f64 },
    Rectangle {
        re_min: f64,
        re_max: f64,
        im_min: f64,
        im_max: f64,
    },
    Circle { center: Complex64, radius: f64 },
}

impl ContourShape {
    /// Point at parameter `t in [0, 1]`; `at(1) == at(0)` exactly.
    pub fn at(&self, t: f64) -> Complex64 {
        let t = if t >= 1.0 { t - 1.0 } else { t };
        match *self {
            ContourShape::SemiAnnulus { r_in, r_out } => {
                let s = 4.0 * t;
                if s < 1.0 {
                    // Outer arc, -pi/2 -> pi/2.
                    Complex64::from_polar(r_out, std::f64::consts::PI * (s - 0.5))
                } else if s < 2.0 {
                    // Down the positive imaginary axis, geometrically spaced:
                    // the radius spans decades and resolving near the inner
                    // corner needs uniform steps in log radius.
                    let r = r_out * (r_in / r_out).powf(s - 1.0);
                    Complex64::new(0.0, r)
                } else if s < 3.0 {
                    // Inner arc, pi/2 -> -pi/2.
                    Complex64::from_polar(r_in, std::f64::consts::PI * (0.5 - (s - 2.0)))
                } else {
                    let r = r_in * (r_out / r_in).powf(s - 3.0);
                    Complex64::new(0.0, -r)
                }
            }
            ContourShape::Rectangle {
                re_min,
                re_max,
                im_min,
                im_max,
            } => {
                let s = 4.0 * t;
                if s < 1.0 {
                    Complex64::new(re_min + s * (re_max - re_min), im_min)
                } else if s < 2.0 {
                    Complex64::new(re_max, im_min + (s - 1.0) * (im_max - im_min))
                } else if s < 3.0 {
                    Complex64::new(re_max - (s - 2.0) * (re_max - re_min), im_max)
                } else {
                    Complex64::new(re_min, im_max - (s - 3.0) * (im_max - im_min))
                }
            }
            ContourShape::Circle { center, radius } => {
                center + Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * t)
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            ContourShape::SemiAnnulus { r_out, .. } => 2.0 * r_out,
            ContourShape::Rectangle {
                re_min,
                re_max,
                im_min,
                im_max,
            } => (re_max - re_min).hypot(im_max - im_min),
            ContourShape::Circle { radius, .. } => 2.0 * radius,
        }
    }

    /// Smooth piece containing the segment `[t0, t1]` (segments never span
    /// piece boundaries: corners are always sampled).
    pub fn piece_of_segment(&self, t0: f64, t1: f64) -> usize {
        match *self {
            ContourShape::Circle { .. } => 0,
            _ => (4.0 * 0.5 * (t0 + t1)).floor().min(3.0) as usize,
        }
    }

    /// `d lambda / d t` at `t`, using the formula of the given piece (needed
    /// at corners, where one-sided tangents differ).
    pub fn tangent_in_piece(&self, t: f64, piece: usize) -> Complex64 {
        let i = Complex64::new(0.0, 1.0);
        match *self {
            ContourShape::SemiAnnulus { r_in, r_out } => match piece {
                0 => i * 4.0 * std::f64::consts::PI * self.at(t),
                1 => self.at(t) * 4.0 * (r_in / r_out).ln(),
                2 => -i * 4.0 * std::f64::consts::PI * self.at(t),
                _ => self.at(t) * 4.0 * (r_out / r_in).ln(),
            },
            ContourShape::Rectangle {
                re_min,
                re_max,
                im_min,
                im_max,
            } => match piece {
                0 => Complex64::new(4.0 * (re_max - re_min), 0.0),
                1 => i * 4.0 * (im_max - im_min),
                2 => Complex64::new(-4.0 * (re_max - re_min), 0.0),
                _ => -i * 4.0 * (im_max - im_min),
            },
            ContourShape::Circle { radius, .. } => {
                i * 2.0
                    * std::f64::consts::PI
                    * Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * t)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContourOptions {
    /// Initial nodes (distributed uniformly in the contour parameter).
    pub initial_nodes: usize,
    /// Maximum bisection passes of the adaptivity loop.
    pub max_bisect: usize,
    /// Adjacent-sample caps: argument step and relative magnitude step.
    pub arg_cap: f64,
    pub rel_cap: f64,
}

impl Default for ContourOptions {
    fn default() -> Self {
        Self {
            initial_nodes: 128,
            max_bisect: 12,
            arg_cap: std::f64::consts::FRAC_PI_2,
            rel_cap: 0.2,
        }
    }
}

/// Contour samples of an analytic function, resolved to the adaptivity
/// criterion, with the phase-unwrapped logarithm along the contour.
#[derive(Debug, Clone)]
pub struct EvansSample {
    pub ts: Vec<f64>,
    pub nodes: Vec<Complex64>,
    pub values: Vec<Complex64>,
    /// Unwrapped `log D`; the winding number is
    /// `(Im log_d[last] - Im log_d[0]) / 2 pi`.
    pub log_values: Vec<Complex64>,
    pub shape: ContourShape,
    pub insertions: usize,
}

impl EvansSample {
    pub fn winding_raw(&self) -> f64 {
        (self.log_values.last().unwrap().im - self.log_values[0].im)
            / (2.0 * std::f64::consts::PI)
    }

    /// Winding number, checked to be an integer within 0.05.
    pub fn winding_number(&self) -> Result<i64> {
        let w = self.winding_raw();
        let rounded = w.round();
        if (w - rounded).abs() > 0.05 {
            return Err(Error::UnresolvedContour(format!(
                "winding {w:.6} is not an integer (residual {:.3})",
                (w - rounded).abs()
            )));
        }
        Ok(rounded as i64)
    }

    /// Reverses orientation (negates the winding number). Winding-only: the
    /// reversed parameters no longer match the shape for moment quadrature.
    pub fn reversed(&self) -> EvansSample {
        let n = self.ts.len();
        let mut out = EvansSample {
            ts: self.ts.iter().rev().map(|t| 1.0 - t).collect(),
            nodes: self.nodes.iter().rev().cloned().collect(),
            values: self.values.iter().rev().cloned().collect(),
            log_values: Vec::with_capacity(n),
            shape: self.shape,
            insertions: self.insertions,
        };
        unwrap_log(&out.values, &mut out.log_values);
        out
    }
}

/// Largest `|value|` within `half_width` nodes of index `j` (excluding `j`),
/// wrapping around the closed contour.
fn local_window_max(values: &[Complex64], j: usize, half_width: usize) -> f64 {
    let n = values.len();
    let mut m = 0.0f64;
    for off in 1..=half_width {
        m = m.max(values[(j + off) % n].norm());
        m = m.max(values[(j + n - off % n) % n].norm());
    }
    m
}

fn unwrap_log(values: &[Complex64], out: &mut Vec<Complex64>) {
    out.clear();
    let mut l = values[0].ln();
    out.push(l);
    for w in values.windows(2) {
        l += (w[1] / w[0]).ln();
        out.push(l);
    }
}

/// Evaluates the map along the closed contour, bisecting segments until the
/// adaptivity criterion holds.
pub fn sample_contour(
    map: &dyn AnalyticMap,
    shape: &ContourShape,
    opts: &ContourOptions,
) -> Result<EvansSample> {
    let n0 = opts.initial_nodes.max(8).div_ceil(4) * 4;
    let mut ts: Vec<f64> = (0..=n0).map(|j| j as f64 / n0 as f64).collect();
    let mut values: Vec<Complex64> = Vec::with_capacity(ts.len());
    for &t in &ts {
        values.push(map.eval(shape.at(t))?);
    }
    let mut insertions = 0usize;

    for pass in 0..=opts.max_bisect {
        // An exact zero can abort immediately; near-zeros are only
        // diagnosed on resolved samples (before adaptivity, steep legitimate
        // magnitude variation along the contour looks just like a collapse).
        for (j, v) in values.iter().enumerate() {
            if v.norm() == 0.0 {
                let l = shape.at(ts[j]);
                return Err(Error::ContourThroughZero { re: l.re, im: l.im });
            }
        }

        let mut new_ts = Vec::new();
        for j in 0..ts.len() - 1 {
            let (a, b) = (values[j], values[j + 1]);
            let darg = (b / a).arg().abs();
            let rel = (b - a).norm() / a.norm().max(b.norm());
            if darg >= opts.arg_cap || rel >= opts.rel_cap {
                new_ts.push(0.5 * (ts[j] + ts[j + 1]));
            }
        }
        if new_ts.is_empty() {
            // Resolved sample: a value collapsing against its local window
            // marks a zero on the contour (the adaptivity criterion bounds
            // the legitimate per-segment magnitude ratio).
            for (j, v) in values.iter().enumerate() {
                if v.norm() < 1e-13 * local_window_max(&values, j, 8) {
                    let l = shape.at(ts[j]);
                    return Err(Error::ContourThroughZero { re: l.re, im: l.im });
                }
            }
            let mut log_values = Vec::new();
            unwrap_log(&values, &mut log_values);
            return Ok(EvansSample {
                nodes: ts.iter().map(|&t| shape.at(t)).collect(),
                ts,
                values,
                log_values,
                shape: *shape,
                insertions,
            });
        }
        if pass == opts.max_bisect {
            break;
        }
        insertions += new_ts.len();
        // Merge and evaluate the inserted parameters in order, so sequential
        // evaluators keep transport locality.
        let mut merged_ts = Vec::with_capacity(ts.len() + new_ts.len());
        let mut merged_vals = Vec::with_capacity(ts.len() + new_ts.len());
        let mut it_new = new_ts.into_iter().peekable();
        for (j, &t) in ts.iter().enumerate() {
            merged_ts.push(t);
            merged_vals.push(values[j]);
            while let Some(&tn) = it_new.peek() {
                if j + 1 < ts.len() && tn < ts[j + 1] {
                    merged_ts.push(tn);
                    merged_vals.push(map.eval(shape.at(tn))?);
                    it_new.next();
                } else {
                    break;
                }
            }
        }
        ts = merged_ts;
        values = merged_vals;
    }
    // A segment that refuses to resolve while |D| collapses against its
    // local neighborhood is the signature of a zero hugging the contour.
    for (j, v) in values.iter().enumerate() {
        if v.norm() <= 1e-5 * local_window_max(&values, j, 8) {
            let l = shape.at(ts[j]);
            return Err(Error::ContourThroughZero { re: l.re, im: l.im });
        }
    }
    Err(Error::UnresolvedContour(format!(
        "adaptivity cap {} reached with unresolved segments",
        opts.max_bisect
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn shapes_close_exactly() {
        for shape in [
            ContourShape::SemiAnnulus {
                r_in: 1e-4,
                r_out: 10.0,
            },
            ContourShape::Rectangle {
                re_min: 0.5,
                re_max: 2.0,
                im_min: -1.0,
                im_max: 1.0,
            },
            ContourShape::Circle {
                center: c(1.0, 1.0),
                radius: 0.5,
            },
        ] {
            assert_eq!(shape.at(0.0), shape.at(1.0));
        }
    }

    #[test]
    fn winding_counts_polynomial_roots() {
        // (lambda - (1+i))(lambda - (1-i))(lambda - 3): two roots inside the
        // rectangle, one outside.
        let f = FnMap(|l: Complex64| (l - c(1.0, 1.0)) * (l - c(1.0, -1.0)) * (l - c(3.0, 0.0)));
        let shape = ContourShape::Rectangle {
            re_min: 0.0,
            re_max: 2.0,
            im_min: -2.0,
            im_max: 2.0,
        };
        let s = sample_contour(&f, &shape, &ContourOptions::default()).unwrap();
        assert_eq!(s.winding_number().unwrap(), 2);
        // Reversing the orientation negates the winding number.
        assert_eq!(s.reversed().winding_number().unwrap(), -2);
    }

    #[test]
    fn winding_zero_when_no_roots_enclosed() {
        let f = FnMap(|l: Complex64| (l - c(5.0, 5.0)) * l.exp());
        let shape = ContourShape::Circle {
            center: c(0.0, 0.0),
            radius: 1.0,
        };
        let s = sample_contour(&f, &shape, &ContourOptions::default()).unwrap();
        assert_eq!(s.winding_number().unwrap(), 0);
    }

    #[test]
    fn multiplicity_counted_with_order() {
        let f = FnMap(|l: Complex64| (l - c(0.3, 0.0)).powu(3));
        let shape = ContourShape::Circle {
            center: c(0.3, 0.0),
            radius: 0.7,
        };
        let s = sample_contour(&f, &shape, &ContourOptions::default()).unwrap();
        assert_eq!(s.winding_number().unwrap(), 3);
    }

    #[test]
    fn zero_on_contour_detected() {
        let f = FnMap(|l: Complex64| l - c(1.0, 0.0));
        let shape = ContourShape::Circle {
            center: c(0.0, 0.0),
            radius: 1.0,
        };
        assert!(matches!(
            sample_contour(&f, &shape, &ContourOptions::default()),
            Err(Error::ContourThroughZero { .. })
        ));
    }

    #[test]
    fn semi_annulus_traverses_positively() {
        // For f = lambda, the winding over the semi-annulus boundary is 0
        // (origin outside the region).
        let f = FnMap(|l: Complex64| l);
        let shape = ContourShape::SemiAnnulus {
            r_in: 0.1,
            r_out: 2.0,
        };
        let s = sample_contour(&f, &shape, &ContourOptions::default()).unwrap();
        assert_eq!(s.winding_number().unwrap(), 0);
        // A root inside the semi-annulus is seen positively.
        let f = FnMap(|l: Complex64| l - c(1.0, 0.5));
        let s = sample_contour(&f, &shape, &ContourOptions::default()).unwrap();
        assert_eq!(s.winding_number().unwrap(), 1);
    }
}
