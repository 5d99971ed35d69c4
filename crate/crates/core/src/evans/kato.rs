//! Analytic continuation of the invariant-subspace bases of the limit
//! matrices, by integrating the projector-commutator differential relation
//! `V' = [P', P] V` along paths in the spectral plane.
//!
//! The projector `P(lambda)` is built from the matrix sign function of the
//! limit matrix, so it inherits analyticity from `G_+-(lambda)` wherever the
//! splitting persists. Transport is RK4 per substep with the projector
//! derivative from centered differences along the path; substeps are chosen
//! so the projector moves by at most `max_dp` per step, and the frame is
//! re-leaned onto `range P` after every substep to suppress leakage.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linop::SpectralSystem;
use crate::subspace::{range_basis_complex, splitting_complex};

type CMat = DMatrix<Complex64>;

/// Which invariant subspace is continued.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bundle {
    /// Decaying-at-`+inf` subspace of `G_+` (stable spectrum).
    StablePlus,
    /// Growing-at-`-inf` subspace of `G_-` (unstable spectrum).
    UnstableMinus,
}

/// An analytically transported basis at one spectral point.
#[derive(Debug, Clone)]
pub struct KatoFrame {
    pub lambda: Complex64,
    pub basis: CMat,
    pub rank: usize,
}

pub struct KatoTransporter<'a> {
    sys: &'a SpectralSystem<'a>,
    bundle: Bundle,
    /// Max Frobenius movement of the projector per substep.
    pub max_dp: f64,
}

impl<'a> KatoTransporter<'a> {
    pub fn new(sys: &'a SpectralSystem<'a>, bundle: Bundle) -> Self {
        Self {
            sys,
            bundle,
            max_dp: 0.05,
        }
    }

    fn limit_matrix(&self, lambda: Complex64) -> Result<CMat> {
        match self.bundle {
            Bundle::StablePlus => self.sys.g_plus(lambda),
            Bundle::UnstableMinus => self.sys.g_minus(lambda),
        }
    }

    /// Spectral projector of the bundle at `lambda`.
    pub fn projector(&self, lambda: Complex64) -> Result<(CMat, usize)> {
        let g = self.limit_matrix(lambda)?;
        let sp = splitting_complex(&g).ok_or_else(|| Error::SplittingLost {
            re: lambda.re,
            im: lambda.im,
            reason: "sign iteration failed for the limit matrix".into(),
        })?;
        Ok(match self.bundle {
            Bundle::StablePlus => (sp.p_stable, sp.dim_stable),
            Bundle::UnstableMinus => (sp.p_unstable, sp.dim_unstable),
        })
    }

    /// Sum of the bundle's limit eigenvalues, `trace(G P)`: the analytic
    /// exponential-weight shift for the radial equation.
    pub fn eigenvalue_sum(&self, lambda: Complex64) -> Result<Complex64> {
        let g = self.limit_matrix(lambda)?;
        let (p, _) = self.projector(lambda)?;
        Ok((g * p).trace())
    }

    /// Orthonormal seed basis at an anchor point. At real `lambda` the limit
    /// matrix is real, so the seed is real and the whole construction
    /// commutes with complex conjugation.
    pub fn seed(&self, lambda: Complex64) -> Result<KatoFrame> {
        let (p, rank) = self.projector(lambda)?;
        let basis = range_basis_complex(&p, rank);
        Ok(KatoFrame {
            lambda,
            basis,
            rank,
        })
    }

    /// Transports a frame along the straight segment to `lambda1`,
    /// subdividing adaptively so the projector moves slowly per step.
    pub fn transport(&self, frame: &KatoFrame, lambda1: Complex64) -> Result<KatoFrame> {
        if lambda1 == frame.lambda {
            return Ok(frame.clone());
        }
        let (p0, r0) = self.projector(frame.lambda)?;
        if r0 != frame.rank {
            return Err(Error::SplittingLost {
                re: frame.lambda.re,
                im: frame.lambda.im,
                reason: format!("projector rank changed {} -> {r0}", frame.rank),
            });
        }
        let mut v = frame.basis.clone();
        self.transport_segment(frame.lambda, lambda1, &p0, &mut v, frame.rank, 0)?;
        Ok(KatoFrame {
            lambda: lambda1,
            basis: v,
            rank: frame.rank,
        })
    }

    fn transport_segment(
        &self,
        la: Complex64,
        lb: Complex64,
        pa: &CMat,
        v: &mut CMat,
        rank: usize,
        depth: usize,
    ) -> Result<()> {
        let (pb, rb) = self.projector(lb)?;
        if rb != rank {
            if depth >= 30 {
                return Err(Error::SplittingLost {
                    re: lb.re,
                    im: lb.im,
                    reason: format!("projector rank changed {rank} -> {rb}"),
                });
            }
            let mid = 0.5 * (la + lb);
            self.transport_segment(la, mid, pa, v, rank, depth + 1)?;
            let (pm, _) = self.projector(mid)?;
            return self.transport_segment(mid, lb, &pm, v, rank, depth + 1);
        }
        let dp = (&pb - pa).norm();
        if dp > self.max_dp {
            if depth >= 30 {
                return Err(Error::SplittingLost {
                    re: lb.re,
                    im: lb.im,
                    reason: format!("projector step {dp:.3e} not resolvable"),
                });
            }
            let mid = 0.5 * (la + lb);
            self.transport_segment(la, mid, pa, v, rank, depth + 1)?;
            let (pm, _) = self.projector(mid)?;
            return self.transport_segment(mid, lb, &pm, v, rank, depth + 1);
        }

        // RK4 on V' = [P'(t), P(t)] V over t in [0, 1], lambda(t) = la + t dl.
        let dl = lb - la;
        let scale = 1.0 + la.norm().min(lb.norm());
        let h_fd = 2e-5 * scale / dl.norm();
        let a_of = |t: f64| -> Result<CMat> {
            let l = la + Complex64::new(t, 0.0) * dl;
            let p = if t == 0.0 {
                pa.clone()
            } else if t == 1.0 {
                pb.clone()
            } else {
                self.projector(l)?.0
            };
            let pp = self.projector(la + Complex64::new(t + h_fd, 0.0) * dl)?.0;
            let pm = self.projector(la + Complex64::new(t - h_fd, 0.0) * dl)?.0;
            let dpdt = (pp - pm) / Complex64::new(2.0 * h_fd, 0.0);
            Ok(&dpdt * &p - &p * &dpdt)
        };
        let a0 = a_of(0.0)?;
        let a_half = a_of(0.5)?;
        let a1 = a_of(1.0)?;
        let half = Complex64::new(0.5, 0.0);
        let two = Complex64::new(2.0, 0.0);
        let k1 = &a0 * &*v;
        let k2 = &a_half * (&*v + &k1 * half);
        let k3 = &a_half * (&*v + &k2 * half);
        let k4 = &a1 * (&*v + &k3);
        *v += (k1 + k2 * two + k3 * two + k4) / Complex64::new(6.0, 0.0);
        // Re-lean onto range P(lb): analytic, and kills O(h^5) leakage.
        *v = &pb * &*v;
        Ok(())
    }
}
