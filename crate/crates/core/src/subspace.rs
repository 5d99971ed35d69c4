//! Spectral projectors onto half-plane invariant subspaces via the matrix
//! sign function, with Newton iteration and determinantal scaling.
//!
//! For a matrix with no eigenvalues on the splitting line `Re = sigma`, the
//! sign of `A - sigma I` yields the spectral projectors
//! `P_right = (I + S)/2`, `P_left = (I - S)/2`; the subspace dimension is the
//! (rounded) trace of the projector. No eigenvectors are ever required,
//! which keeps the construction smooth in matrix entries -- the property the
//! analytic continuation of Evans subspaces relies on.

use nalgebra::DMatrix;
use num_complex::Complex64;

type CMat = DMatrix<Complex64>;
type RMat = DMatrix<f64>;

const MAX_SIGN_ITER: usize = 80;

/// Matrix sign function of a complex matrix by scaled Newton iteration.
/// Fails if an eigenvalue is (numerically) on the imaginary axis.
pub fn sign_complex(a: &CMat) -> Option<CMat> {
    let n = a.nrows();
    let mut s = a.clone();
    let mut last_diff = f64::INFINITY;
    for _ in 0..MAX_SIGN_ITER {
        let lu = s.clone().lu();
        let det = lu.determinant();
        if !det.norm().is_finite() || det.norm() == 0.0 {
            return None;
        }
        let inv = lu.try_inverse()?;
        // Determinantal scaling accelerates convergence for skew spectra.
        let c = det.norm().powf(-1.0 / n as f64);
        let mut next = &s * Complex64::new(0.5 * c, 0.0);
        next += inv * Complex64::new(0.5 / c, 0.0);
        let diff = (&next - &s).norm();
        s = next;
        if diff <= 1e-14 * s.norm().max(1.0) {
            break;
        }
        // Divergence guard: the iteration must contract eventually.
        if diff > 1e8 * last_diff.max(1.0) {
            return None;
        }
        last_diff = diff;
    }
    // Validate: S^2 = I.
    let err = (&s * &s - CMat::identity(n, n)).norm();
    if err > 1e-8 * (1.0 + s.norm()) {
        return None;
    }
    Some(s)
}

/// Matrix sign function of a real matrix.
pub fn sign_real(a: &RMat) -> Option<RMat> {
    let n = a.nrows();
    let mut s = a.clone();
    let mut last_diff = f64::INFINITY;
    for _ in 0..MAX_SIGN_ITER {
        let lu = s.clone().lu();
        let det = lu.determinant();
        if !det.is_finite() || det == 0.0 {
            return None;
        }
        let inv = lu.try_inverse()?;
        let c = det.abs().powf(-1.0 / n as f64);
        let next = 0.5 * c * &s + (0.5 / c) * inv;
        let diff = (&next - &s).norm();
        s = next;
        if diff <= 1e-14 * s.norm().max(1.0) {
            break;
        }
        if diff > 1e8 * last_diff.max(1.0) {
            return None;
        }
        last_diff = diff;
    }
    let err = (&s * &s - RMat::identity(n, n)).norm();
    if err > 1e-8 * (1.0 + s.norm()) {
        return None;
    }
    Some(s)
}

/// Half-plane splitting of a complex matrix at `Re = 0`.
pub struct Splitting {
    /// Projector onto the span of eigenvectors with `Re lambda < 0`.
    pub p_stable: CMat,
    /// Projector onto the span of eigenvectors with `Re lambda > 0`.
    pub p_unstable: CMat,
    pub dim_stable: usize,
    pub dim_unstable: usize,
}

/// Spectral projectors of `a` onto its stable/unstable invariant subspaces.
/// `None` when the splitting is degenerate or the iteration fails.
pub fn splitting_complex(a: &CMat) -> Option<Splitting> {
    let n = a.nrows();
    let s = sign_complex(a)?;
    let id = CMat::identity(n, n);
    let p_stable = (&id - &s) * Complex64::new(0.5, 0.0);
    let p_unstable = (&id + &s) * Complex64::new(0.5, 0.0);
    let tr = p_stable.trace();
    let dim_stable = tr.re.round();
    if (tr.re - dim_stable).abs() > 1e-6 || tr.im.abs() > 1e-6 {
        return None;
    }
    if !(0.0..=n as f64).contains(&dim_stable) {
        return None;
    }
    // Idempotency check.
    if (&p_stable * &p_stable - &p_stable).norm() > 1e-9 * (1.0 + p_stable.norm()) {
        return None;
    }
    let dim_stable = dim_stable as usize;
    Some(Splitting {
        p_stable,
        p_unstable,
        dim_stable,
        dim_unstable: n - dim_stable,
    })
}

/// Orthonormal basis (columns) of the range of a rank-`k` projector, by
/// column-pivoted QR. Deterministic for fixed input.
pub fn range_basis_complex(p: &CMat, k: usize) -> CMat {
    let qr = p.clone().col_piv_qr();
    let q = qr.q();
    q.columns(0, k).into_owned()
}

/// Orthonormal basis (columns) of the range of a real projector.
pub fn range_basis_real(p: &RMat, k: usize) -> RMat {
    let qr = p.clone().col_piv_qr();
    let q = qr.q();
    q.columns(0, k).into_owned()
}

/// Classification of a real spectrum into stable / center / unstable classes
/// with projectors, as needed for projective boundary conditions.
pub struct RealSplit {
    pub p_stable: RMat,
    pub p_center: RMat,
    pub p_unstable: RMat,
    pub dim_stable: usize,
    pub dim_center: usize,
    pub dim_unstable: usize,
    /// Smallest separation between the real-part classes.
    pub gap: f64,
}

/// Splits a real matrix's spectrum at `Re = +-center_tol`. Eigenvalue real
/// parts within `center_tol` of zero form the center class. Fails when a
/// non-center eigenvalue sits within `min_gap` of the center band edge
/// (ambiguous classification) or when a sign iteration does not converge.
pub fn split_real_spectrum(
    a: &RMat,
    center_tol: f64,
    min_gap: f64,
) -> Result<RealSplit, String> {
    let n = a.nrows();
    let eigs = a.clone().complex_eigenvalues();
    let mut res: Vec<f64> = eigs.iter().map(|e| e.re).collect();
    res.sort_by(|x, y| x.partial_cmp(y).unwrap());

    let stable: Vec<f64> = res.iter().cloned().filter(|r| *r < -center_tol).collect();
    let center: Vec<f64> = res
        .iter()
        .cloned()
        .filter(|r| r.abs() <= center_tol)
        .collect();
    let unstable: Vec<f64> = res.iter().cloned().filter(|r| *r > center_tol).collect();

    // Margin of every non-center eigenvalue to the classification band.
    let mut gap = f64::INFINITY;
    for r in stable.iter().chain(unstable.iter()) {
        gap = gap.min(r.abs() - center_tol);
    }
    if gap < min_gap {
        return Err(format!(
            "eigenvalue margin {gap:.3e} to the center band below {min_gap:.1e}; \
             classification ambiguous"
        ));
    }

    let id = RMat::identity(n, n);
    // Split line between stable and the rest.
    let p_stable = if stable.is_empty() {
        RMat::zeros(n, n)
    } else {
        let hi = center
            .first()
            .or(unstable.first())
            .cloned()
            .unwrap_or(stable.last().unwrap() + 1.0);
        let sigma = 0.5 * (stable.last().unwrap() + hi);
        let s = sign_real(&(a - sigma * &id))
            .ok_or_else(|| "sign iteration failed for stable split".to_string())?;
        0.5 * (&id - &s)
    };
    let p_unstable = if unstable.is_empty() {
        RMat::zeros(n, n)
    } else {
        let lo = center
            .last()
            .or(stable.last())
            .cloned()
            .unwrap_or(unstable.first().unwrap() - 1.0);
        let sigma = 0.5 * (lo + unstable.first().unwrap());
        let s = sign_real(&(a - sigma * &id))
            .ok_or_else(|| "sign iteration failed for unstable split".to_string())?;
        0.5 * (&id + &s)
    };
    let p_center = &id - &p_stable - &p_unstable;

    for (name, p, dim) in [
        ("stable", &p_stable, stable.len()),
        ("center", &p_center, center.len()),
        ("unstable", &p_unstable, unstable.len()),
    ] {
        let tr = p.trace();
        if (tr - dim as f64).abs() > 1e-6 {
            return Err(format!(
                "{name} projector trace {tr:.6} disagrees with eigenvalue count {dim}"
            ));
        }
        if (p * p - p).norm() > 1e-8 * (1.0 + p.norm()) {
            return Err(format!("{name} projector failed idempotency"));
        }
    }

    Ok(RealSplit {
        p_stable,
        p_center,
        p_unstable,
        dim_stable: stable.len(),
        dim_center: center.len(),
        dim_unstable: unstable.len(),
        gap,
    })
}
