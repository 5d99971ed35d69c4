//! Moments of an analytic function over a closed contour via the argument
//! principle: `M_p = (1/2 pi i) oint (lambda - c)^p D'/D dlambda` equals the
//! sum of `(root - c)^p` over enclosed roots.
//!
//! `D'/D` is never evaluated directly: the integral is reduced by parts to
//! an integral of the phase-unwrapped `log D`, which the contour sampler
//! already carries. The zeroth moment telescopes to the exact winding
//! number.

use num_complex::Complex64;

use super::contour::EvansSample;
use crate::error::Result;

/// `p`-th moment of the sampled function about `center`.
pub fn moment(sample: &EvansSample, p: u32, center: Complex64) -> Result<Complex64> {
    let w = sample.winding_number()? as f64;
    if p == 0 {
        return Ok(Complex64::new(w, 0.0));
    }
    // Integration by parts on the closed contour: the boundary term carries
    // the 2 pi i w jump of log D at the start point.
    //   M_p = w (l0 - c)^p - p/(2 pi i) oint (l - c)^{p-1} log D dl
    let l0 = sample.nodes[0] - center;
    let boundary = l0.powu(p) * w;
    let g: Vec<Complex64> = sample
        .nodes
        .iter()
        .zip(&sample.log_values)
        .map(|(l, ld)| (l - center).powu(p - 1) * ld)
        .collect();
    let integral = integrate_sample(sample, &g);
    let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
    Ok(boundary - integral * Complex64::new(p as f64, 0.0) / two_pi_i)
}

/// Integrates node values of a smooth integrand against `dlambda` over the
/// sampled contour. Within each smooth shape piece the product
/// `g(t) lambda'(t)` is fitted by quadratics through consecutive node
/// triples in the contour parameter (composite Simpson generalized to
/// nonuniform nodes); runs never straddle a corner.
pub fn integrate_sample(sample: &EvansSample, g: &[Complex64]) -> Complex64 {
    let n = sample.ts.len();
    assert_eq!(n, g.len());
    let shape = &sample.shape;
    // f(t) = g(t) * dlambda/dt per segment's piece.
    let seg_piece: Vec<usize> = (0..n - 1)
        .map(|j| shape.piece_of_segment(sample.ts[j], sample.ts[j + 1]))
        .collect();
    let mut total = Complex64::new(0.0, 0.0);
    let mut run_start = 0usize;
    for j in 0..n - 1 {
        let run_ends = j + 1 == n - 1 || seg_piece[j + 1] != seg_piece[j];
        if !run_ends {
            continue;
        }
        let piece = seg_piece[run_start];
        let lo = run_start;
        let hi = j + 1; // node range [lo, hi] inclusive
        let f: Vec<Complex64> = (lo..=hi)
            .map(|m| g[m] * shape.tangent_in_piece(sample.ts[m], piece))
            .collect();
        total += integrate_run(&sample.ts[lo..=hi], &f);
        run_start = j + 1;
    }
    total
}

/// Composite quadratic integration of `f(t) dt` over a smooth run.
fn integrate_run(ts: &[f64], f: &[Complex64]) -> Complex64 {
    let n = ts.len();
    let mut total = Complex64::new(0.0, 0.0);
    if n < 2 {
        return total;
    }
    if n == 2 {
        return 0.5 * (f[0] + f[1]) * (ts[1] - ts[0]);
    }
    let mut j = 0;
    while j + 2 < n {
        total += quad_triple(&ts[j..j + 3], &f[j..j + 3], ts[j], ts[j + 2]);
        j += 2;
    }
    if j + 1 < n {
        // Leftover final segment: reuse the last quadratic, restricted.
        total += quad_triple(&ts[n - 3..n], &f[n - 3..n], ts[n - 2], ts[n - 1]);
    }
    total
}

/// Integral over `[ta, tb]` of the quadratic through three samples.
fn quad_triple(ts: &[f64], f: &[Complex64], ta: f64, tb: f64) -> Complex64 {
    let (t0, t1, t2) = (ts[0], ts[1], ts[2]);
    let h1 = t1 - t0;
    let h2 = t2 - t1;
    if h1 == 0.0 || h2 == 0.0 {
        return 0.5 * (f[0] + f[2]) * (tb - ta);
    }
    // Newton form f(t) = f0 + c1 (t - t0) + c2 (t - t0)(t - t1).
    let c1 = (f[1] - f[0]) / h1;
    let c2 = ((f[2] - f[1]) / h2 - c1) / (h1 + h2);
    let (ua, ub) = (ta - t0, tb - t0);
    let p1 = 0.5 * (ub * ub - ua * ua);
    let p2 = (ub * ub * ub - ua * ua * ua) / 3.0 - 0.5 * h1 * (ub * ub - ua * ua);
    f[0] * (ub - ua) + c1 * p1 + c2 * p2
}
