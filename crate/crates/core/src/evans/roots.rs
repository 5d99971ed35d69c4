//! Root location by recursive two-dimensional bisection: count roots in a
//! box by the argument principle, discard empty boxes, subdivide the rest
//! until the target accuracy, then refine isolated roots by the first
//! moment and a secant polish.

use num_complex::Complex64;

use super::contour::{sample_contour, AnalyticMap, ContourOptions, ContourShape};
use super::moments::moment;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct RootEntry {
    pub lambda: Complex64,
    pub multiplicity: usize,
    /// Side length of the final enclosing box.
    pub box_diam: f64,
    /// `|D|` at the reported location.
    pub residual: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RootSet {
    pub roots: Vec<RootEntry>,
}

impl RootSet {
    pub fn total_multiplicity(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// Every root with `|Im| > tol` has a conjugate partner within `tol`.
    pub fn conjugate_closed(&self, tol: f64) -> bool {
        self.roots.iter().all(|r| {
            r.lambda.im.abs() <= tol
                || self
                    .roots
                    .iter()
                    .any(|s| (s.lambda - r.lambda.conj()).norm() <= tol)
        })
    }
}

#[derive(Debug, Clone)]
pub struct RootFinderOptions {
    pub target_accuracy: f64,
    pub contour: ContourOptions,
    /// Extra refinement of isolated simple roots after the quadtree.
    pub polish: bool,
    pub max_depth: usize,
}

impl Default for RootFinderOptions {
    fn default() -> Self {
        Self {
            target_accuracy: 1e-3,
            contour: ContourOptions {
                initial_nodes: 32,
                // Box edges may legitimately pass close to the origin's
                // translation zero; resolving |D| ~ dist along such edges
                // takes more bisection levels than a standard sweep.
                max_bisect: 18,
                ..Default::default()
            },
            polish: true,
            max_depth: 48,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    fn shape(&self) -> ContourShape {
        ContourShape::Rectangle {
            re_min: self.re_min,
            re_max: self.re_max,
            im_min: self.im_min,
            im_max: self.im_max,
        }
    }
    fn diam(&self) -> f64 {
        (self.re_max - self.re_min).hypot(self.im_max - self.im_min)
    }
    fn center(&self) -> Complex64 {
        Complex64::new(
            0.5 * (self.re_min + self.re_max),
            0.5 * (self.im_min + self.im_max),
        )
    }
}

fn count_in(map: &dyn AnalyticMap, rect: &Rect, copts: &ContourOptions) -> Result<(i64, Complex64)> {
    let s = sample_contour(map, &rect.shape(), copts)?;
    let m0 = s.winding_number()?;
    let m1 = if m0 > 0 {
        moment(&s, 1, rect.center())?
    } else {
        Complex64::new(0.0, 0.0)
    };
    Ok((m0, m1))
}

/// Root count inside a rectangle.
pub fn count_rectangle(map: &dyn AnalyticMap, rect: Rect, opts: &RootFinderOptions) -> Result<i64> {
    Ok(count_in(map, &rect, &opts.contour)?.0)
}

/// Root count inside the standard semi-annulus.
pub fn count_semi_annulus(
    map: &dyn AnalyticMap,
    r_in: f64,
    r_out: f64,
    copts: &ContourOptions,
) -> Result<i64> {
    let shape = ContourShape::SemiAnnulus { r_in, r_out };
    sample_contour(map, &shape, copts)?.winding_number()
}

/// Quadtree bisection over a rectangle. Power-of-two jitter fractions keep
/// subdivision lines off roots when a split line hits one.
pub fn locate_roots_rectangle(
    map: &dyn AnalyticMap,
    rect: Rect,
    opts: &RootFinderOptions,
) -> Result<RootSet> {
    let mut out = RootSet::default();
    // Auto-perturb the outer boundary when it passes through a zero.
    let mut rect = rect;
    let mut count = 0i64;
    for attempt in 0..4 {
        match count_in(map, &rect, &opts.contour) {
            Ok((m0, _)) => {
                count = m0;
                break;
            }
            Err(Error::ContourThroughZero { .. }) | Err(Error::UnresolvedContour(_))
                if attempt < 3 =>
            {
                let eps = 1e-6 * rect.diam() * 10f64.powi(attempt);
                rect = Rect {
                    re_min: rect.re_min - eps,
                    re_max: rect.re_max + eps,
                    im_min: rect.im_min - eps,
                    im_max: rect.im_max + eps,
                };
            }
            Err(e) => return Err(e),
        }
    }
    if count < 0 {
        return Err(Error::UnresolvedContour(format!(
            "negative root count {count} on the initial box"
        )));
    }
    if count == 0 {
        return Ok(out);
    }
    subdivide(map, rect, count, opts, 0, &mut out)?;
    out.roots.sort_by(|a, b| {
        (a.lambda.re, a.lambda.im)
            .partial_cmp(&(b.lambda.re, b.lambda.im))
            .unwrap()
    });
    Ok(out)
}

fn subdivide(
    map: &dyn AnalyticMap,
    rect: Rect,
    count: i64,
    opts: &RootFinderOptions,
    depth: usize,
    out: &mut RootSet,
) -> Result<()> {
    if rect.diam() <= opts.target_accuracy || depth >= opts.max_depth {
        finalize_box(map, rect, count, opts, out)?;
        return Ok(());
    }
    // Children sharing exact split lines tile the parent; jitter only when a
    // split line passes through a root.
    'jitter: for jitter_level in 0..5 {
        let f = match jitter_level {
            0 => 0.0,
            1 => 1e-6,
            2 => 1e-4,
            3 => 3e-3,
            _ => 1.7e-2,
        };
        let cx = 0.5 * (rect.re_min + rect.re_max) + f * (rect.re_max - rect.re_min);
        let cy = 0.5 * (rect.im_min + rect.im_max) + f * (rect.im_max - rect.im_min);
        let children = [
            Rect { re_min: rect.re_min, re_max: cx, im_min: rect.im_min, im_max: cy },
            Rect { re_min: cx, re_max: rect.re_max, im_min: rect.im_min, im_max: cy },
            Rect { re_min: rect.re_min, re_max: cx, im_min: cy, im_max: rect.im_max },
            Rect { re_min: cx, re_max: rect.re_max, im_min: cy, im_max: rect.im_max },
        ];
        let counts = match child_counts(map, &children, &opts.contour)? {
            Some(c) => c,
            None => continue 'jitter,
        };
        let total: i64 = counts.iter().sum();
        if total != count {
            // Escalate the node density once before giving up.
            let mut dense = opts.clone();
            dense.contour.initial_nodes *= 2;
            let counts2 = match child_counts(map, &children, &dense.contour)? {
                Some(c) => c,
                None => continue 'jitter,
            };
            let total2: i64 = counts2.iter().sum();
            if total2 != count {
                return Err(Error::UnresolvedContour(format!(
                    "subdivision counts {counts2:?} sum to {total2} != parent {count}"
                )));
            }
            for (i, ch) in children.iter().enumerate() {
                if counts2[i] > 0 {
                    subdivide(map, *ch, counts2[i], &dense, depth + 1, out)?;
                }
            }
            return Ok(());
        }
        for (i, ch) in children.iter().enumerate() {
            if counts[i] > 0 {
                subdivide(map, *ch, counts[i], opts, depth + 1, out)?;
            }
        }
        return Ok(());
    }
    Err(Error::UnresolvedContour(
        "all jitter levels hit a zero on a subdivision line".into(),
    ))
}

/// Counts roots in all four children; `None` signals a split line that must
/// be jittered (a zero on, or hugging, a child contour).
fn child_counts(
    map: &dyn AnalyticMap,
    children: &[Rect; 4],
    copts: &ContourOptions,
) -> Result<Option<[i64; 4]>> {
    let mut counts = [0i64; 4];
    for (i, ch) in children.iter().enumerate() {
        match count_in(map, ch, copts) {
            Ok((m0, _)) => counts[i] = m0,
            Err(Error::ContourThroughZero { .. }) | Err(Error::UnresolvedContour(_)) => {
                return Ok(None)
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Some(counts))
}

fn finalize_box(
    map: &dyn AnalyticMap,
    rect: Rect,
    count: i64,
    opts: &RootFinderOptions,
    out: &mut RootSet,
) -> Result<()> {
    let (m0, m1) = count_in(map, &rect, &opts.contour)?;
    debug_assert_eq!(m0, count);
    let center = rect.center();
    let mut lambda = center + m1 / Complex64::new(count as f64, 0.0);
    if count == 1 && opts.polish {
        // One secant step along each axis.
        let h = 0.25 * rect.diam().max(1e-12);
        for dir in [Complex64::new(h, 0.0), Complex64::new(0.0, h)] {
            let d0 = map.eval(lambda)?;
            let d1 = map.eval(lambda + dir)?;
            let denom = d1 - d0;
            if denom.norm() > 0.0 {
                let step = -d0 * dir / denom;
                if step.norm() <= rect.diam() {
                    lambda += step;
                }
            }
        }
    }
    let residual = map.eval(lambda)?.norm();
    out.roots.push(RootEntry {
        lambda,
        multiplicity: count as usize,
        box_diam: rect.diam(),
        residual,
    });
    Ok(())
}

/// Locates every root of the map inside the semi-annulus
/// `{Re >= 0, r_in <= |lambda| <= r_out}`.
///
/// The total is counted on the semi-annulus boundary itself; location runs
/// on the bounding rectangle (inset on the left to keep the origin's
/// translation zero outside) and is cross-checked against the total.
pub fn locate_roots_semi_annulus(
    map: &dyn AnalyticMap,
    r_in: f64,
    r_out: f64,
    opts: &RootFinderOptions,
) -> Result<RootSet> {
    let total = count_semi_annulus(map, r_in, r_out, &opts.contour)?;
    if total < 0 {
        return Err(Error::UnresolvedContour(format!(
            "negative root count {total} on the semi-annulus"
        )));
    }
    if total == 0 {
        return Ok(RootSet::default());
    }
    let rect = Rect {
        re_min: (1e-5 * r_out).max(0.5 * r_in),
        re_max: r_out * 1.000001,
        im_min: -r_out * 1.000001,
        im_max: r_out * 1.000001,
    };
    let found = locate_roots_rectangle(map, rect, opts)?;
    let members: Vec<RootEntry> = found
        .roots
        .into_iter()
        .filter(|r| {
            let m = r.lambda.norm();
            m >= r_in * 0.999 && m <= r_out * 1.001 && r.lambda.re >= 0.0
        })
        .collect();
    let set = RootSet { roots: members };
    if set.total_multiplicity() as i64 != total {
        return Err(Error::UnresolvedContour(format!(
            "located multiplicity {} disagrees with the semi-annulus count {total}",
            set.total_multiplicity()
        )));
    }
    Ok(set)
}
