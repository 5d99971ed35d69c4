//! Two-point boundary-value solver: collocation with a C1 cubic spline
//! (3-stage Lobatto IIIA, 4th order), damped Newton iteration on a banded
//! Jacobian, and defect-based adaptive mesh refinement with Lobatto-point
//! residual sampling.
//!
//! Boundary conditions are separated linear projections at the two ends,
//! plus an optional scalar pin at an interior mesh point (used for phase
//! conditions of translation-invariant problems).

use nalgebra::{DMatrix, DVector};

/// Right-hand side and Jacobian of `y' = f(x, y)`.
pub trait BvpRhs {
    fn dim(&self) -> usize;
    fn rhs(&self, x: f64, y: &[f64], out: &mut [f64]);
    fn jac(&self, x: f64, y: &[f64], out: &mut DMatrix<f64>);
}

/// Scalar condition `coeffs . y(x) = value` at a mesh point.
#[derive(Debug, Clone)]
pub struct InteriorPin {
    pub x: f64,
    pub coeffs: DVector<f64>,
    pub value: f64,
}

/// Linear separated boundary conditions:
/// `left_rows * (y(a) - y_left_ref) = 0`, `right_rows * (y(b) - y_right_ref) = 0`.
#[derive(Debug, Clone)]
pub struct BoundaryConditions {
    pub left_rows: DMatrix<f64>,
    pub y_left_ref: DVector<f64>,
    pub right_rows: DMatrix<f64>,
    pub y_right_ref: DVector<f64>,
    pub pin: Option<InteriorPin>,
}

impl BoundaryConditions {
    pub fn condition_count(&self) -> usize {
        self.left_rows.nrows() + self.right_rows.nrows() + usize::from(self.pin.is_some())
    }
}

#[derive(Debug, Clone)]
pub struct BvpOptions {
    /// Relative defect tolerance.
    pub rel_tol: f64,
    /// Absolute defect tolerance.
    pub abs_tol: f64,
    pub max_nodes: usize,
    pub max_newton_iter: usize,
    pub max_refinements: usize,
}

impl Default for BvpOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            abs_tol: 1e-8,
            max_nodes: 40_000,
            max_newton_iter: 20,
            max_refinements: 14,
        }
    }
}

#[derive(Debug)]
pub enum BvpError {
    BadInput(String),
    SingularJacobian,
    NewtonFailed { residual: f64, iterations: usize },
    TooManyNodes { nodes: usize, max_defect: f64 },
}

impl std::fmt::Display for BvpError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BvpError::BadInput(s) => write!(f, "bad input: {s}"),
            BvpError::SingularJacobian => write!(f, "singular collocation Jacobian"),
            BvpError::NewtonFailed {
                residual,
                iterations,
            } => write!(
                f,
                "Newton failed after {iterations} iterations, residual {residual:.3e}"
            ),
            BvpError::TooManyNodes { nodes, max_defect } => write!(
                f,
                "mesh limit reached at {nodes} nodes, max scaled defect {max_defect:.3e}"
            ),
        }
    }
}

/// Converged collocation solution with its C1 cubic interpolant.
#[derive(Debug, Clone)]
pub struct BvpSolution {
    pub mesh: Vec<f64>,
    /// `n x m` values at the mesh nodes.
    pub y: DMatrix<f64>,
    /// `n x m` right-hand sides at the mesh nodes.
    pub f: DMatrix<f64>,
    /// Largest scaled defect over all intervals (<= 1 on success).
    pub max_defect: f64,
    pub newton_iterations: usize,
}

impl BvpSolution {
    fn interval_of(&self, x: f64) -> usize {
        let m = self.mesh.len();
        if x <= self.mesh[0] {
            return 0;
        }
        if x >= self.mesh[m - 1] {
            return m - 2;
        }
        match self.mesh.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(m - 2),
            Err(i) => i - 1,
        }
    }

    /// Interpolant value; cubic Hermite on the containing interval.
    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        let i = self.interval_of(x);
        let (x0, x1) = (self.mesh[i], self.mesh[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        for c in 0..self.y.nrows() {
            out[c] = h00 * self.y[(c, i)]
                + h * h10 * self.f[(c, i)]
                + h01 * self.y[(c, i + 1)]
                + h * h11 * self.f[(c, i + 1)];
        }
    }

    /// Interpolant derivative.
    pub fn eval_deriv_into(&self, x: f64, out: &mut [f64]) {
        let i = self.interval_of(x);
        let (x0, x1) = (self.mesh[i], self.mesh[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let t2 = t * t;
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (-6.0 * t2 + 6.0 * t) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        for c in 0..self.y.nrows() {
            out[c] = d00 * self.y[(c, i)]
                + d10 * self.f[(c, i)]
                + d01 * self.y[(c, i + 1)]
                + d11 * self.f[(c, i + 1)];
        }
    }
}

// ---------------------------------------------------------------------------
// Banded LU with partial pivoting (LAPACK-style storage).
// ---------------------------------------------------------------------------

pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    /// Column-major, (2*kl + ku + 1) rows per column.
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            data: vec![0.0; (2 * kl + ku + 1) * n],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i + self.ku + self.kl >= j && j + self.kl >= i);
        let row = self.kl + self.ku + i - j;
        j * (2 * self.kl + self.ku + 1) + row
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let ix = self.idx(i, j);
        self.data[ix] += v;
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let ix = self.idx(i, j);
        self.data[ix] = v;
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    /// In-place LU factorization with partial pivoting. `None` if a pivot
    /// vanishes.
    pub fn lu_factor(mut self) -> Option<BandLu> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut ipiv = vec![0usize; n];
        let kv = kl + ku;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut piv = 0usize;
            let mut pmax = 0.0f64;
            for t in 0..=km {
                let v = self.get(j + t, j).abs();
                if v > pmax {
                    pmax = v;
                    piv = t;
                }
            }
            if pmax < 1e-300 {
                return None;
            }
            ipiv[j] = j + piv;
            let ju = (j + kv).min(n - 1);
            if piv != 0 {
                for c in j..=ju {
                    let a = self.get(j + piv, c);
                    let b = self.get(j, c);
                    self.set(j + piv, c, b);
                    self.set(j, c, a);
                }
            }
            let pivot = self.get(j, j);
            for t in 1..=km {
                let v = self.get(j + t, j) / pivot;
                self.set(j + t, j, v);
            }
            for c in (j + 1)..=ju {
                let ujc = self.get(j, c);
                if ujc != 0.0 {
                    for t in 1..=km {
                        let l = self.get(j + t, j);
                        if l != 0.0 {
                            self.add(j + t, c, -l * ujc);
                        }
                    }
                }
            }
        }
        Some(BandLu { mat: self, ipiv })
    }
}

pub struct BandLu {
    mat: BandMatrix,
    ipiv: Vec<usize>,
}

impl BandLu {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.mat.n;
        let kl = self.mat.kl;
        let kv = self.mat.kl + self.mat.ku;
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(p, j);
            }
            let km = kl.min(n - 1 - j);
            let bj = b[j];
            if bj != 0.0 {
                for t in 1..=km {
                    b[j + t] -= self.mat.get(j + t, j) * bj;
                }
            }
        }
        for j in (0..n).rev() {
            let lo = j.saturating_sub(kv);
            let bj = b[j] / self.mat.get(j, j);
            b[j] = bj;
            if bj != 0.0 {
                for i in lo..j {
                    b[i] -= self.mat.get(i, j) * bj;
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Collocation solver.
// ---------------------------------------------------------------------------

struct Workspace {
    n: usize,
    y: DMatrix<f64>,
    f: DMatrix<f64>,
}

fn eval_f(rhs: &dyn BvpRhs, mesh: &[f64], y: &DMatrix<f64>, f: &mut DMatrix<f64>) {
    let n = rhs.dim();
    let mut buf = vec![0.0; n];
    for (j, &x) in mesh.iter().enumerate() {
        rhs.rhs(x, y.column(j).as_slice(), &mut buf);
        for c in 0..n {
            f[(c, j)] = buf[c];
        }
    }
}

fn residual(
    rhs: &dyn BvpRhs,
    bc: &BoundaryConditions,
    mesh: &[f64],
    ws: &Workspace,
    pin_node: Option<usize>,
    out: &mut [f64],
) {
    let n = ws.n;
    let m = mesh.len();
    let n_l = bc.left_rows.nrows();
    let mut row = 0usize;

    for r in 0..n_l {
        let mut s = 0.0;
        for c in 0..n {
            s += bc.left_rows[(r, c)] * (ws.y[(c, 0)] - bc.y_left_ref[c]);
        }
        out[row] = s;
        row += 1;
    }

    let mut fm = vec![0.0; n];
    let mut ym = vec![0.0; n];
    for i in 0..m - 1 {
        if pin_node == Some(i) {
            let pin = bc.pin.as_ref().unwrap();
            let mut s = -pin.value;
            for c in 0..n {
                s += pin.coeffs[c] * ws.y[(c, i)];
            }
            out[row] = s;
            row += 1;
        }
        let h = mesh[i + 1] - mesh[i];
        let xm = 0.5 * (mesh[i] + mesh[i + 1]);
        for c in 0..n {
            ym[c] = 0.5 * (ws.y[(c, i)] + ws.y[(c, i + 1)])
                - h / 8.0 * (ws.f[(c, i + 1)] - ws.f[(c, i)]);
        }
        rhs.rhs(xm, &ym, &mut fm);
        for c in 0..n {
            out[row] = ws.y[(c, i + 1)]
                - ws.y[(c, i)]
                - h / 6.0 * (ws.f[(c, i)] + 4.0 * fm[c] + ws.f[(c, i + 1)]);
            row += 1;
        }
    }
    if pin_node == Some(m - 1) {
        let pin = bc.pin.as_ref().unwrap();
        let mut s = -pin.value;
        for c in 0..n {
            s += pin.coeffs[c] * ws.y[(c, m - 1)];
        }
        out[row] = s;
        row += 1;
    }
    for r in 0..bc.right_rows.nrows() {
        let mut s = 0.0;
        for c in 0..n {
            s += bc.right_rows[(r, c)] * (ws.y[(c, m - 1)] - bc.y_right_ref[c]);
        }
        out[row] = s;
        row += 1;
    }
    debug_assert_eq!(row, n * m);
}

fn jacobian(
    rhs: &dyn BvpRhs,
    bc: &BoundaryConditions,
    mesh: &[f64],
    ws: &Workspace,
    pin_node: Option<usize>,
) -> BandMatrix {
    let n = ws.n;
    let m = mesh.len();
    let (kl, ku) = (2 * n + 1, 2 * n + 1);
    let mut band = BandMatrix::zeros(n * m, kl, ku);
    let n_l = bc.left_rows.nrows();
    let mut row = 0usize;

    for r in 0..n_l {
        for c in 0..n {
            band.set(row, c, bc.left_rows[(r, c)]);
        }
        row += 1;
    }

    let mut j_i = DMatrix::zeros(n, n);
    let mut j_ip = DMatrix::zeros(n, n);
    let mut j_m = DMatrix::zeros(n, n);
    let mut ym = vec![0.0; n];
    let eye = DMatrix::<f64>::identity(n, n);
    for i in 0..m - 1 {
        if pin_node == Some(i) {
            let pin = bc.pin.as_ref().unwrap();
            for c in 0..n {
                band.set(row, n * i + c, pin.coeffs[c]);
            }
            row += 1;
        }
        let h = mesh[i + 1] - mesh[i];
        let xm = 0.5 * (mesh[i] + mesh[i + 1]);
        rhs.jac(mesh[i], ws.y.column(i).as_slice(), &mut j_i);
        rhs.jac(mesh[i + 1], ws.y.column(i + 1).as_slice(), &mut j_ip);
        for c in 0..n {
            ym[c] = 0.5 * (ws.y[(c, i)] + ws.y[(c, i + 1)])
                - h / 8.0 * (ws.f[(c, i + 1)] - ws.f[(c, i)]);
        }
        rhs.jac(xm, &ym, &mut j_m);

        let t_left = &j_i + 4.0 * &j_m * (0.5 * &eye + (h / 8.0) * &j_i);
        let t_right = &j_ip + 4.0 * &j_m * (0.5 * &eye - (h / 8.0) * &j_ip);
        for r in 0..n {
            for c in 0..n {
                let a = -((r == c) as u8 as f64) - h / 6.0 * t_left[(r, c)];
                let b = ((r == c) as u8 as f64) - h / 6.0 * t_right[(r, c)];
                band.add(row + r, n * i + c, a);
                band.add(row + r, n * (i + 1) + c, b);
            }
        }
        row += n;
    }
    if pin_node == Some(m - 1) {
        let pin = bc.pin.as_ref().unwrap();
        for c in 0..n {
            band.set(row, n * (m - 1) + c, pin.coeffs[c]);
        }
        row += 1;
    }
    for r in 0..bc.right_rows.nrows() {
        for c in 0..n {
            band.set(row, n * (m - 1) + c, bc.right_rows[(r, c)]);
        }
        row += 1;
    }
    debug_assert_eq!(row, n * m);
    band
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

/// Scaled defect of the C1 interpolant on each interval, sampled at the two
/// interior 5-point Lobatto nodes. A value <= 1 means within tolerance.
fn interval_defects(
    rhs: &dyn BvpRhs,
    mesh: &[f64],
    ws: &Workspace,
    rel: f64,
    abs: f64,
) -> Vec<f64> {
    let n = ws.n;
    let m = mesh.len();
    let s = (3.0f64 / 7.0).sqrt() * 0.5;
    let mut out = Vec::with_capacity(m - 1);
    let mut yv = vec![0.0; n];
    let mut dv = vec![0.0; n];
    let mut fv = vec![0.0; n];
    for i in 0..m - 1 {
        let h = mesh[i + 1] - mesh[i];
        let mut worst = 0.0f64;
        for &t in &[0.5 - s, 0.5 + s] {
            let (t2, t3) = (t * t, t * t * t);
            let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
            let h10 = t3 - 2.0 * t2 + t;
            let h01 = -2.0 * t3 + 3.0 * t2;
            let h11 = t3 - t2;
            let d00 = (6.0 * t2 - 6.0 * t) / h;
            let d10 = 3.0 * t2 - 4.0 * t + 1.0;
            let d01 = (-6.0 * t2 + 6.0 * t) / h;
            let d11 = 3.0 * t2 - 2.0 * t;
            for c in 0..n {
                yv[c] = h00 * ws.y[(c, i)]
                    + h * h10 * ws.f[(c, i)]
                    + h01 * ws.y[(c, i + 1)]
                    + h * h11 * ws.f[(c, i + 1)];
                dv[c] = d00 * ws.y[(c, i)]
                    + d10 * ws.f[(c, i)]
                    + d01 * ws.y[(c, i + 1)]
                    + d11 * ws.f[(c, i + 1)];
            }
            rhs.rhs(mesh[i] + t * h, &yv, &mut fv);
            for c in 0..n {
                let defect = (dv[c] - fv[c]).abs();
                worst = worst.max(defect / (abs + rel * fv[c].abs()));
            }
        }
        out.push(worst);
    }
    out
}

/// Solves the BVP from the given initial mesh and guess.
pub fn solve(
    rhs: &dyn BvpRhs,
    bc: &BoundaryConditions,
    mesh0: &[f64],
    y0: &DMatrix<f64>,
    opts: &BvpOptions,
) -> Result<BvpSolution, BvpError> {
    let n = rhs.dim();
    if bc.condition_count() != n {
        return Err(BvpError::BadInput(format!(
            "boundary conditions supply {} rows for a system of dimension {n}",
            bc.condition_count()
        )));
    }
    if mesh0.len() < 3 || !mesh0.windows(2).all(|w| w[1] > w[0]) {
        return Err(BvpError::BadInput("mesh must be strictly increasing".into()));
    }
    if y0.nrows() != n || y0.ncols() != mesh0.len() {
        return Err(BvpError::BadInput("guess shape does not match mesh".into()));
    }
    let mut mesh = mesh0.to_vec();
    if let Some(pin) = &bc.pin {
        if !mesh.iter().any(|&x| x == pin.x) {
            return Err(BvpError::BadInput(format!(
                "pin abscissa {} is not a mesh point",
                pin.x
            )));
        }
    }

    let mut ws = Workspace {
        n,
        y: y0.clone(),
        f: DMatrix::zeros(n, mesh.len()),
    };
    eval_f(rhs, &mesh, &ws.y, &mut ws.f);

    let mut total_newton = 0usize;
    let mut last_res = f64::INFINITY;
    for round in 0..=opts.max_refinements {
        let m = mesh.len();
        let pin_node = bc
            .pin
            .as_ref()
            .map(|p| mesh.iter().position(|&x| x == p.x).expect("pin in mesh"));

        // Newton pass on the current mesh, with the affine-invariant line
        // search: the merit function is the norm of the Newton correction
        // under the frozen factorization, which stays meaningful inside
        // stiff layers where the raw residual norm does not.
        let mut res = vec![0.0; n * m];
        residual(rhs, bc, &mesh, &ws, pin_node, &mut res);
        let mut res_norm = inf_norm(&res);
        let mut converged = false;
        let mut iters = 0usize;
        'newton: while iters < opts.max_newton_iter {
            let scale = 1.0 + ws.y.amax();
            if res_norm <= 1e-12 * scale {
                converged = true;
                break;
            }
            iters += 1;
            total_newton += 1;
            let band = jacobian(rhs, bc, &mesh, &ws, pin_node);
            let lu = band.lu_factor().ok_or(BvpError::SingularJacobian)?;
            let mut step = res.clone();
            lu.solve_in_place(&mut step);
            let q0 = inf_norm(&step);
            if q0 <= 1e-12 * scale {
                converged = true;
                break;
            }

            let mut t = 1.0f64;
            let y_save = ws.y.clone();
            for _ in 0..12 {
                for j in 0..m {
                    for c in 0..n {
                        ws.y[(c, j)] = y_save[(c, j)] - t * step[n * j + c];
                    }
                }
                eval_f(rhs, &mesh, &ws.y, &mut ws.f);
                let mut new_res = vec![0.0; n * m];
                residual(rhs, bc, &mesh, &ws, pin_node, &mut new_res);
                let mut corr = new_res.clone();
                lu.solve_in_place(&mut corr);
                let q_t = inf_norm(&corr);
                if q_t.is_finite() && q_t <= (1.0 - 0.02 * t) * q0 {
                    res = new_res;
                    res_norm = inf_norm(&res);
                    if q_t <= 1e-12 * scale {
                        converged = true;
                        break 'newton;
                    }
                    continue 'newton;
                }
                t *= 0.5;
            }
            // No acceptable damping: restore and stop.
            ws.y = y_save;
            eval_f(rhs, &mesh, &ws.y, &mut ws.f);
            break;
        }
        let scale = 1.0 + ws.y.amax();
        converged = converged || res_norm <= 1e-12 * scale;

        // Refinement only ever runs against a converged iterate; defects of
        // a non-solution would drive the mesh everywhere.
        if !converged {
            return Err(BvpError::NewtonFailed {
                residual: res_norm,
                iterations: total_newton,
            });
        }

        let defects = interval_defects(rhs, &mesh, &ws, opts.rel_tol, opts.abs_tol);
        let max_defect = defects.iter().cloned().fold(0.0f64, f64::max);
        if max_defect <= 1.0 {
            return Ok(BvpSolution {
                mesh,
                y: ws.y,
                f: ws.f,
                max_defect,
                newton_iterations: total_newton,
            });
        }
        if round == opts.max_refinements {
            return Err(BvpError::TooManyNodes {
                nodes: mesh.len(),
                max_defect,
            });
        }
        let _ = last_res;
        last_res = res_norm;

        {
            let mut new_mesh = Vec::with_capacity(mesh.len() * 2);
            for i in 0..mesh.len() - 1 {
                new_mesh.push(mesh[i]);
                if defects[i] > 100.0 {
                    let h = mesh[i + 1] - mesh[i];
                    new_mesh.push(mesh[i] + h / 3.0);
                    new_mesh.push(mesh[i] + 2.0 * h / 3.0);
                } else if defects[i] > 1.0 {
                    new_mesh.push(0.5 * (mesh[i] + mesh[i + 1]));
                }
            }
            new_mesh.push(*mesh.last().unwrap());
            if new_mesh.len() > opts.max_nodes {
                return Err(BvpError::TooManyNodes {
                    nodes: new_mesh.len(),
                    max_defect,
                });
            }
            let sol = BvpSolution {
                mesh: mesh.clone(),
                y: ws.y.clone(),
                f: ws.f.clone(),
                max_defect,
                newton_iterations: total_newton,
            };
            let mut y_new = DMatrix::zeros(n, new_mesh.len());
            let mut buf = vec![0.0; n];
            for (j, &x) in new_mesh.iter().enumerate() {
                sol.eval_into(x, &mut buf);
                for c in 0..n {
                    y_new[(c, j)] = buf[c];
                }
            }
            mesh = new_mesh;
            ws.y = y_new;
            ws.f = DMatrix::zeros(n, mesh.len());
            eval_f(rhs, &mesh, &ws.y, &mut ws.f);
        }
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    struct LinearSinh;
    impl BvpRhs for LinearSinh {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, _x: f64, y: &[f64], out: &mut [f64]) {
            out[0] = y[1];
            out[1] = y[0];
        }
        fn jac(&self, _x: f64, _y: &[f64], out: &mut DMatrix<f64>) {
            out[(0, 0)] = 0.0;
            out[(0, 1)] = 1.0;
            out[(1, 0)] = 1.0;
            out[(1, 1)] = 0.0;
        }
    }

    #[test]
    fn banded_lu_matches_dense_oracle() {
        let n = 40;
        let (kl, ku) = (3, 2);
        let mut dense = DMatrix::<f64>::zeros(n, n);
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rnd = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut band = BandMatrix::zeros(n, kl, ku);
        for j in 0..n {
            for i in j.saturating_sub(ku)..(j + kl + 1).min(n) {
                let v = rnd() + if i == j { 4.0 } else { 0.0 };
                dense[(i, j)] = v;
                band.set(i, j, v);
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let lu = band.lu_factor().unwrap();
        let mut x = b.clone();
        lu.solve_in_place(&mut x);
        let x_dense = dense.lu().solve(&DVector::from_column_slice(&b)).unwrap();
        for i in 0..n {
            assert_abs_diff_eq!(x[i], x_dense[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn linear_bvp_reproduces_sinh() {
        // y'' = y, y(0) = 0, y(1) = sinh(1).
        let bc = BoundaryConditions {
            left_rows: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            y_left_ref: DVector::from_column_slice(&[0.0, 0.0]),
            right_rows: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            y_right_ref: DVector::from_column_slice(&[1.0f64.sinh(), 0.0]),
            pin: None,
        };
        let mesh: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let y0 = DMatrix::zeros(2, mesh.len());
        let sol = solve(&LinearSinh, &bc, &mesh, &y0, &BvpOptions::default()).unwrap();
        let mut buf = [0.0; 2];
        for i in 0..=50 {
            let x = i as f64 / 50.0;
            sol.eval_into(x, &mut buf);
            assert_abs_diff_eq!(buf[0], x.sinh(), epsilon = 1e-7);
            sol.eval_deriv_into(x, &mut buf);
            assert_abs_diff_eq!(buf[0], x.cosh(), epsilon = 1e-6);
        }
    }

    struct Logistic;
    impl BvpRhs for Logistic {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _x: f64, y: &[f64], out: &mut [f64]) {
            out[0] = y[0] * (1.0 - y[0]);
        }
        fn jac(&self, _x: f64, y: &[f64], out: &mut DMatrix<f64>) {
            out[(0, 0)] = 1.0 - 2.0 * y[0];
        }
    }

    #[test]
    fn interior_pin_fixes_translation() {
        // Front solution of y' = y(1-y) pinned to y(0) = 1/2; closed form is
        // the logistic sigmoid.
        let bc = BoundaryConditions {
            left_rows: DMatrix::zeros(0, 1),
            y_left_ref: DVector::zeros(1),
            right_rows: DMatrix::zeros(0, 1),
            y_right_ref: DVector::zeros(1),
            pin: Some(InteriorPin {
                x: 0.0,
                coeffs: DVector::from_column_slice(&[1.0]),
                value: 0.5,
            }),
        };
        let mesh: Vec<f64> = (-40..=40).map(|i| i as f64 / 2.0).collect();
        let y0 = DMatrix::from_fn(1, mesh.len(), |_, j| 1.0 / (1.0 + (-(mesh[j] - 2.0)).exp()));
        let sol = solve(&Logistic, &bc, &mesh, &y0, &BvpOptions::default()).unwrap();
        let mut buf = [0.0];
        for i in -30..=30 {
            let x = i as f64 / 3.0;
            sol.eval_into(x, &mut buf);
            assert_abs_diff_eq!(buf[0], 1.0 / (1.0 + (-x).exp()), epsilon = 1e-6);
        }
    }

    #[test]
    fn refinement_reported_in_solution() {
        let bc = BoundaryConditions {
            left_rows: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            y_left_ref: DVector::from_column_slice(&[0.0, 0.0]),
            right_rows: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            y_right_ref: DVector::from_column_slice(&[1.0f64.sinh(), 0.0]),
            pin: None,
        };
        let mesh = vec![0.0, 0.5, 1.0];
        let y0 = DMatrix::zeros(2, mesh.len());
        let sol = solve(&LinearSinh, &bc, &mesh, &y0, &BvpOptions::default()).unwrap();
        assert!(sol.mesh.len() > 3);
        assert!(sol.max_defect <= 1.0);
    }
}
