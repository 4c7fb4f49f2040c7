//! Vertical rescaling of Riemannian submersions (the canonical variation):
//! curvature of the fiber-shrunk metric from pointwise O'Neill data, the
//! error against the fiber cross product, and the largest rescaling below
//! which a curvature condition holds.
//!
//! Frame convention: indices 0..k−1 are vertical (tangent to the fiber),
//! k..n−1 horizontal.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::curvop::{from_riemann_unchecked, CurvatureOperator, Riemann4};
use crate::error::{CurvError, Result};
use crate::geometry::{ChartMetric, RotSymKind, RotSymModel};

/// Pointwise data of a Riemannian submersion at a reference point:
/// the ambient curvature in an adapted frame, the two O'Neill tensors on
/// that frame, and the fiber/base curvatures.
#[derive(Debug, Clone)]
pub struct SubmersionData {
    pub n: usize,
    /// Fiber dimension.
    pub k: usize,
    /// Ambient curvature tensor in the adapted frame (vertical first).
    pub r_m: Riemann4,
    /// T[i][j] = T_{v_i} v_j, horizontal vectors in frame components.
    pub t_tensor: Vec<Vec<DVector<f64>>>,
    /// A[r][i] = A_{h_r} v_i, horizontal vectors in frame components.
    pub a_tensor: Vec<Vec<DVector<f64>>>,
    /// Curvature of the fiber with its induced metric (k-dimensional).
    pub r_f: FiberCurvature,
    /// Pullback of the base curvature on the horizontal block
    /// ((n−k)-dimensional).
    pub r_b: BaseCurvature,
}

/// Rank-4 curvature components of the fiber; dimensions below 3 carry no
/// curvature and are stored as the zero tensor on a padded index set.
#[derive(Debug, Clone)]
pub struct FiberCurvature {
    pub dim: usize,
    data: Vec<f64>,
}

impl FiberCurvature {
    pub fn zeros(dim: usize) -> Self {
        FiberCurvature {
            dim,
            data: vec![0.0; dim.max(1).pow(4)],
        }
    }

    /// Constant-curvature fiber: R(x,y,z,w) = κ(δ_xw δ_yz − δ_xz δ_yw).
    pub fn space_form(dim: usize, kappa: f64) -> Self {
        let mut f = FiberCurvature::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        let v = kappa
                            * ((if i == l { 1.0 } else { 0.0 }) * (if j == k { 1.0 } else { 0.0 })
                                - (if i == k { 1.0 } else { 0.0 })
                                    * (if j == l { 1.0 } else { 0.0 }));
                        f.set(i, j, k, l, v);
                    }
                }
            }
        }
        f
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        if self.dim == 0 {
            return 0.0;
        }
        self.data[((i * self.dim + j) * self.dim + k) * self.dim + l]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        self.data[((i * self.dim + j) * self.dim + k) * self.dim + l] = v;
    }
}

pub type BaseCurvature = FiberCurvature;

impl SubmersionData {
    pub fn new(
        n: usize,
        k: usize,
        r_m: Riemann4,
        t_tensor: Vec<Vec<DVector<f64>>>,
        a_tensor: Vec<Vec<DVector<f64>>>,
        r_f: FiberCurvature,
        r_b: BaseCurvature,
    ) -> Result<Self> {
        if r_m.n() != n || k >= n || r_f.dim != k || r_b.dim != n - k {
            return Err(CurvError::DimensionMismatch("submersion data".into()));
        }
        let data = SubmersionData {
            n,
            k,
            r_m,
            t_tensor,
            a_tensor,
            r_f,
            r_b,
        };
        data.validate()?;
        Ok(data)
    }

    fn validate(&self) -> Result<()> {
        let (n, k) = (self.n, self.k);
        if self.t_tensor.len() != k || self.t_tensor.iter().any(|row| row.len() != k) {
            return Err(CurvError::DimensionMismatch("T tensor shape".into()));
        }
        if self.a_tensor.len() != n - k || self.a_tensor.iter().any(|row| row.len() != k) {
            return Err(CurvError::DimensionMismatch("A tensor shape".into()));
        }
        // T symmetric in its vertical arguments, values horizontal
        for i in 0..k {
            for j in 0..k {
                let d = (&self.t_tensor[i][j] - &self.t_tensor[j][i]).norm();
                if d > 1e-12 {
                    return Err(CurvError::InvariantViolation {
                        check: "T symmetry in vertical arguments",
                        residual: d,
                        tol: 1e-12,
                    });
                }
                for c in 0..k {
                    if self.t_tensor[i][j][c].abs() > 1e-12 {
                        return Err(CurvError::invalid("T values must be horizontal"));
                    }
                }
            }
        }
        for r in 0..(n - k) {
            for i in 0..k {
                for c in 0..k {
                    if self.a_tensor[r][i][c].abs() > 1e-12 {
                        return Err(CurvError::invalid("A values must be horizontal"));
                    }
                }
            }
        }
        // at scale 1 the rescaled curvature must reproduce the ambient one
        let back = variation_curvature(self, 1.0)?;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for kk in 0..n {
                    for l in 0..n {
                        worst = worst.max((back.get(i, j, kk, l) - self.r_m.get(i, j, kk, l)).abs());
                    }
                }
            }
        }
        if worst > 1e-12 * self.r_m.max_abs().max(1.0) {
            return Err(CurvError::InvariantViolation {
                check: "scale-1 consistency of the submersion data",
                residual: worst,
                tol: 1e-12,
            });
        }
        Ok(())
    }

    fn g(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.dot(y)
    }
}

/// Sign-carrying canonicalization of an index quadruple under the dihedral
/// symmetries of a curvature tensor, targeting the six canonical
/// vertical/horizontal patterns.
fn canonicalize(k: usize, idx: [usize; 4]) -> ([usize; 4], f64) {
    let is_v = |a: usize| a < k;
    // (permutation of slots, sign)
    const TRANSFORMS: [([usize; 4], f64); 8] = [
        ([0, 1, 2, 3], 1.0),
        ([1, 0, 2, 3], -1.0),
        ([0, 1, 3, 2], -1.0),
        ([1, 0, 3, 2], 1.0),
        ([2, 3, 0, 1], 1.0),
        ([3, 2, 0, 1], -1.0),
        ([2, 3, 1, 0], -1.0),
        ([3, 2, 1, 0], 1.0),
    ];
    let canonical = |t: [bool; 4]| -> bool {
        matches!(
            t,
            [true, true, true, true]
                | [true, true, true, false]
                | [true, true, false, false]
                | [false, true, false, true]
                | [false, false, false, true]
                | [false, false, false, false]
        )
    };
    for (perm, sign) in TRANSFORMS {
        let moved = [idx[perm[0]], idx[perm[1]], idx[perm[2]], idx[perm[3]]];
        let pattern = [
            is_v(moved[0]),
            is_v(moved[1]),
            is_v(moved[2]),
            is_v(moved[3]),
        ];
        if canonical(pattern) {
            return (moved, sign);
        }
    }
    unreachable!("every vertical/horizontal pattern has a canonical transform")
}

/// Curvature tensor of the vertically rescaled metric on the original frame
/// vectors (vertical vectors keep their scale-1 length; the frame is
/// g-orthogonal but not gᵗ-orthonormal).
///
/// The six component classes, with v vertical, h horizontal:
///   (v,v,v,v):  t²·R_F − t⁴·(g(T₂₃,T₁₄) − g(T₁₃,T₂₄))
///   (v,v,v,h):  t²·R_M − (t²−t⁴)·(g(T₁₃,A_h v₂) + g(T₂₃,A_h v₁))
///   (v,v,h,h):  t²·R_M + (t²−t⁴)·(g(A₁v₂,A₂v₁) − g(A₁v₁,A₂v₂))
///   (h,v,h,v):  t²·R_M + (t²−t⁴)·g(A₁v₂,A₂v₁)
///   (h,h,h,v):  t²·R_M
///   (h,h,h,h):  t²·R_M + (1−t²)·R_B
pub fn variation_curvature(d: &SubmersionData, t: f64) -> Result<Riemann4> {
    if !(t > 0.0) {
        return Err(CurvError::invalid("scale t must be positive"));
    }
    let (n, k) = (d.n, d.k);
    let t2 = t * t;
    let t4 = t2 * t2;
    let tt = t2 - t4;
    let class_value = |idx: [usize; 4]| -> f64 {
        let [a, b, c, e] = idx;
        let is_v = |x: usize| x < k;
        match (is_v(a), is_v(b), is_v(c), is_v(e)) {
            (true, true, true, true) => {
                t2 * d.r_f.get(a, b, c, e)
                    - t4 * (d.g(&d.t_tensor[b][c], &d.t_tensor[a][e])
                        - d.g(&d.t_tensor[a][c], &d.t_tensor[b][e]))
            }
            (true, true, true, false) => {
                let hr = e - k;
                t2 * d.r_m.get(a, b, c, e)
                    - tt * (d.g(&d.t_tensor[a][c], &d.a_tensor[hr][b])
                        + d.g(&d.t_tensor[b][c], &d.a_tensor[hr][a]))
            }
            (true, true, false, false) => {
                let (hr, hs) = (c - k, e - k);
                t2 * d.r_m.get(a, b, c, e)
                    + tt * (d.g(&d.a_tensor[hr][b], &d.a_tensor[hs][a])
                        - d.g(&d.a_tensor[hr][a], &d.a_tensor[hs][b]))
            }
            (false, true, false, true) => {
                let (hr, hs) = (a - k, c - k);
                t2 * d.r_m.get(a, b, c, e) + tt * d.g(&d.a_tensor[hr][e], &d.a_tensor[hs][b])
            }
            (false, false, false, true) => t2 * d.r_m.get(a, b, c, e),
            (false, false, false, false) => {
                t2 * d.r_m.get(a, b, c, e) + (1.0 - t2) * d.r_b.get(a - k, b - k, c - k, e - k)
            }
            _ => unreachable!("non-canonical pattern"),
        }
    };
    let out = Riemann4::from_fn_unchecked(n, |i, j, kk, l| {
        let (canon, sign) = canonicalize(k, [i, j, kk, l]);
        sign * class_value(canon)
    });
    out.validate()?;
    Ok(out)
}

/// Pullback of the rescaled curvature along the gᵗ-orthonormal frame
/// (vertical vectors divided by t): each component of
/// [`variation_curvature`] is divided by t^{#vertical slots}.
pub fn pullback_rescaled(d: &SubmersionData, t: f64) -> Result<CurvatureOperator> {
    let raw = variation_curvature(d, t)?;
    let k = d.k;
    let count_v = |i: usize| if i < k { 1 } else { 0 };
    let scaled = Riemann4::from_fn_unchecked(d.n, |i, j, kk, l| {
        let p = count_v(i) + count_v(j) + count_v(kk) + count_v(l);
        raw.get(i, j, kk, l) / t.powi(p)
    });
    Ok(from_riemann_unchecked(&scaled))
}

/// Operator of the fiber cross product (F × ℝⁿ⁻ᵏ, t²g_F + flat) in the
/// rescaled frame: (1/t²) times the embedded fiber curvature.
pub fn fiber_operator(d: &SubmersionData, t: f64) -> Result<CurvatureOperator> {
    if !(t > 0.0) {
        return Err(CurvError::invalid("scale t must be positive"));
    }
    let k = d.k;
    let embedded = Riemann4::from_fn_unchecked(d.n, |i, j, kk, l| {
        if i < k && j < k && kk < k && l < k {
            d.r_f.get(i, j, kk, l) / (t * t)
        } else {
            0.0
        }
    });
    Ok(from_riemann_unchecked(&embedded))
}

/// Deviation of the rescaled pullback from the fiber cross product,
/// cross-checked against the explicit component formulas:
///   (v,v,v,v):  g(T₁₃,T₂₄) − g(T₂₃,T₁₄)
///   (v,v,v,h):  t⁻¹·R_M − (t⁻¹−t)(g(T₁₃,A v₂) + g(T₂₃,A v₁))
///   (v,v,h,h):  R_M + (1−t²)(g(A₁v₂,A₂v₁) − g(A₁v₁,A₂v₂))
///   (h,v,h,v):  R_M + (1−t²)·g(A₁v₂,A₂v₁)
///   (h,h,h,v):  t·R_M
///   (h,h,h,h):  t²·R_M + (1−t²)·R_B
pub fn error_term(d: &SubmersionData, t: f64) -> Result<CurvatureOperator> {
    let full = pullback_rescaled(d, t)?;
    let fiber = fiber_operator(d, t)?;
    let e = full.sub(&fiber)?;

    // independent evaluation through the literal row formulas
    let (n, k) = (d.n, d.k);
    let t2 = t * t;
    let row_value = |idx: [usize; 4]| -> f64 {
        let [a, b, c, ee] = idx;
        let is_v = |x: usize| x < k;
        match (is_v(a), is_v(b), is_v(c), is_v(ee)) {
            (true, true, true, true) => {
                d.g(&d.t_tensor[a][c], &d.t_tensor[b][ee])
                    - d.g(&d.t_tensor[b][c], &d.t_tensor[a][ee])
            }
            (true, true, true, false) => {
                let hr = ee - k;
                d.r_m.get(a, b, c, ee) / t
                    - (1.0 / t - t)
                        * (d.g(&d.t_tensor[a][c], &d.a_tensor[hr][b])
                            + d.g(&d.t_tensor[b][c], &d.a_tensor[hr][a]))
            }
            (true, true, false, false) => {
                let (hr, hs) = (c - k, ee - k);
                d.r_m.get(a, b, c, ee)
                    + (1.0 - t2)
                        * (d.g(&d.a_tensor[hr][b], &d.a_tensor[hs][a])
                            - d.g(&d.a_tensor[hr][a], &d.a_tensor[hs][b]))
            }
            (false, true, false, true) => {
                let (hr, hs) = (a - k, c - k);
                d.r_m.get(a, b, c, ee)
                    + (1.0 - t2) * d.g(&d.a_tensor[hr][ee], &d.a_tensor[hs][b])
            }
            (false, false, false, true) => t * d.r_m.get(a, b, c, ee),
            (false, false, false, false) => {
                t2 * d.r_m.get(a, b, c, ee) + (1.0 - t2) * d.r_b.get(a - k, b - k, c - k, ee - k)
            }
            _ => unreachable!(),
        }
    };
    let explicit = Riemann4::from_fn_unchecked(n, |i, j, kk, l| {
        let (canon, sign) = canonicalize(k, [i, j, kk, l]);
        sign * row_value(canon)
    });
    let explicit_op = from_riemann_unchecked(&explicit);
    let dev = crate::util::max_abs(&(e.mat() - explicit_op.mat()));
    let scale = e.operator_norm().max(1.0);
    if dev > 1e-10 * scale {
        return Err(CurvError::InvariantViolation {
            check: "error-term component formulas",
            residual: dev,
            tol: 1e-10 * scale,
        });
    }
    Ok(e)
}

#[derive(Debug, Clone, Serialize)]
pub struct RescaleRow {
    pub t: f64,
    pub margin: f64,
    pub e_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RescaleReport {
    pub rows: Vec<RescaleRow>,
    /// Fitted constant with ‖Eᵗ‖ ≤ c_fit/t on the grid.
    pub c_fit: f64,
    /// Largest grid scale below which every margin is positive.
    pub t_star: f64,
}

/// Scans a grid of rescaling parameters and reports the largest scale below
/// which the condition holds, together with the error-norm fit.
///
/// Hypothesis gate: convex variants require the fiber cross product to lie
/// strictly inside the condition; the almost-positive spectral variant only
/// requires it to be positive semidefinite (its inner cones exist around
/// every nonnegative operator).
pub fn find_t_star(
    d: &SubmersionData,
    c: &crate::conditions::Condition,
    grid: &[f64],
) -> Result<RescaleReport> {
    use crate::conditions::ConditionKind;
    if grid.is_empty() || grid.iter().any(|&t| !(t > 0.0)) {
        return Err(CurvError::invalid("rescaling grid must be positive"));
    }
    let fiber1 = fiber_operator(d, 1.0)?;
    match c.kind {
        ConditionKind::SpectralAlmostPos(_) => {
            let lam = fiber1.lambda_min();
            let tol = 1e-10 * fiber1.operator_norm().max(1.0);
            if lam < -tol {
                return Err(CurvError::Hypothesis {
                    what: "fiber cross product is not positive semidefinite".into(),
                    margin: lam,
                });
            }
        }
        ConditionKind::SecAlmostNonneg(_) => {
            return Err(CurvError::invalid(
                "almost-nonnegative sectional curvature is not supported by the rescaling gate",
            ));
        }
        _ => {
            let margin = c.margin(&fiber1)?;
            if !(margin > crate::conditions::BOUNDARY_TOL) {
                return Err(CurvError::Hypothesis {
                    what: format!("fiber cross product not strictly inside {}", c.label()),
                    margin,
                });
            }
        }
    }

    let mut ts: Vec<f64> = grid.to_vec();
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut rows = Vec::with_capacity(ts.len());
    let mut c_fit = 0.0f64;
    for &t in &ts {
        let op = pullback_rescaled(d, t)?;
        let margin = c.margin(&op)?;
        let e_norm = error_term(d, t)?.operator_norm();
        c_fit = c_fit.max(t * e_norm);
        rows.push(RescaleRow { t, margin, e_norm });
    }
    let mut t_star = 0.0;
    for row in &rows {
        if row.margin > 0.0 {
            t_star = row.t;
        } else {
            break;
        }
    }
    Ok(RescaleReport {
        rows,
        c_fit,
        t_star,
    })
}

/// Built-in example: the unit-sphere circle bundle over the half-radius
/// round 2-sphere. Fibers are totally geodesic great circles (T = 0) and
/// the horizontal distribution twists with ‖A_h v‖ = 1.
pub fn hopf_data() -> SubmersionData {
    let n = 3;
    let k = 1;
    // round ambient: R(x,y,z,w) = δ_xw δ_yz − δ_xz δ_yw
    let r_m = Riemann4::from_fn_unchecked(n, |i, j, kk, l| {
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        d(i, l) * d(j, kk) - d(i, kk) * d(j, l)
    });
    let zero_h = DVector::zeros(n);
    let t_tensor = vec![vec![zero_h.clone()]];
    let mut a1 = DVector::zeros(n);
    a1[2] = 1.0; // A_{h1} v = h2
    let mut a2 = DVector::zeros(n);
    a2[1] = -1.0; // A_{h2} v = −h1
    let a_tensor = vec![vec![a1], vec![a2]];
    let r_f = FiberCurvature::zeros(k);
    // base sphere of radius 1/2: sectional curvature 4
    let r_b = BaseCurvature::space_form(n - k, 4.0);
    SubmersionData::new(n, k, r_m, t_tensor, a_tensor, r_f, r_b)
        .expect("built-in data is consistent")
}

/// Built-in example: a metric product of two space forms, fibered over the
/// second factor. Both O'Neill tensors vanish.
pub fn product_data(fiber: &RotSymModel, base: &RotSymModel) -> Result<SubmersionData> {
    for m in [fiber, base] {
        if matches!(m.kind, RotSymKind::RoundSphereSubsphere { .. }) {
            return Err(CurvError::invalid(
                "product data needs space-form factors (point models)",
            ));
        }
    }
    let k = fiber.n;
    let nb = base.n;
    let n = k + nb;
    if n > crate::curvop::MAX_DIM {
        return Err(CurvError::invalid(format!(
            "product dimension {n} exceeds the supported cap"
        )));
    }
    let kf = fiber.ambient_sec();
    let kb = base.ambient_sec();
    let r_m = Riemann4::from_fn_unchecked(n, |i, j, kk, l| {
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let in_f = |a: usize| a < k;
        let kappa = if in_f(i) && in_f(j) && in_f(kk) && in_f(l) {
            kf
        } else if !in_f(i) && !in_f(j) && !in_f(kk) && !in_f(l) {
            kb
        } else {
            return 0.0;
        };
        kappa * (d(i, l) * d(j, kk) - d(i, kk) * d(j, l))
    });
    let zero_h = DVector::zeros(n);
    let t_tensor = vec![vec![zero_h.clone(); k]; k];
    let a_tensor = vec![vec![zero_h; k]; nb];
    let r_f = FiberCurvature::space_form(k, kf);
    let r_b = BaseCurvature::space_form(nb, kb);
    SubmersionData::new(n, k, r_m, t_tensor, a_tensor, r_f, r_b)
}

/// Chart metric of the fiber-rescaled round 3-sphere in stereographic
/// coordinates: the round metric with the circle direction (left translate
/// of the first imaginary unit) shrunk by t².
pub fn berger_chart_metric(t: f64) -> ChartMetric {
    ChartMetric::new(3, move |x: &[f64]| {
        let q2: f64 = x.iter().map(|&v| v * v).sum();
        let denom = 1.0 + q2;
        // inverse stereographic point on the unit quaternion sphere
        let p = [
            (1.0 - q2) / denom,
            2.0 * x[0] / denom,
            2.0 * x[1] / denom,
            2.0 * x[2] / denom,
        ];
        // Jacobian columns dφ(e_m) in ℝ⁴
        let mut jac = [[0.0f64; 4]; 3];
        for (m, col) in jac.iter_mut().enumerate() {
            let xm = x[m];
            col[0] = -4.0 * xm / (denom * denom);
            for i in 0..3 {
                let e = if i == m { 1.0 } else { 0.0 };
                col[i + 1] = (2.0 * e * denom - 4.0 * xm * x[i]) / (denom * denom);
            }
        }
        // vertical field: left quaternion translate p·i
        let vert = [-p[1], p[0], p[3], -p[2]];
        let mut g = DMatrix::zeros(3, 3);
        for a in 0..3 {
            for b in 0..3 {
                let dot: f64 = (0..4).map(|i| jac[a][i] * jac[b][i]).sum();
                let va: f64 = (0..4).map(|i| jac[a][i] * vert[i]).sum();
                let vb: f64 = (0..4).map(|i| jac[b][i] * vert[i]).sum();
                g[(a, b)] = dot + (t * t - 1.0) * va * vb;
            }
        }
        g
    })
}

/// Adapted gᵗ-orthonormal frame (vertical first) at a Berger chart point,
/// as coordinate components; used to compare the rescaling formulas with
/// the finite-difference oracle.
pub fn berger_adapted_frame(t: f64, x: &[f64]) -> Result<DMatrix<f64>> {
    let chart = berger_chart_metric(t);
    let g = chart.eval(x);
    let round = berger_chart_metric(1.0).eval(x);
    // coordinate components of the vertical field: solve dφ(w) = p·i, which
    // in the round metric means w is the g-preimage of the vertical covector
    let q2: f64 = x.iter().map(|&v| v * v).sum();
    let denom = 1.0 + q2;
    let p = [
        (1.0 - q2) / denom,
        2.0 * x[0] / denom,
        2.0 * x[1] / denom,
        2.0 * x[2] / denom,
    ];
    let vert4 = [-p[1], p[0], p[3], -p[2]];
    let mut jac = [[0.0f64; 4]; 3];
    for (m, col) in jac.iter_mut().enumerate() {
        let xm = x[m];
        col[0] = -4.0 * xm / (denom * denom);
        for i in 0..3 {
            let e = if i == m { 1.0 } else { 0.0 };
            col[i + 1] = (2.0 * e * denom - 4.0 * xm * x[i]) / (denom * denom);
        }
    }
    let rhs = DVector::from_fn(3, |a, _| (0..4).map(|i| jac[a][i] * vert4[i]).sum());
    let w = round
        .clone()
        .try_inverse()
        .ok_or_else(|| CurvError::domain("degenerate round metric"))?
        * rhs;
    // gᵗ-normalize the vertical vector, then complete with two horizontal
    // directions by Gram–Schmidt in gᵗ
    let vnorm = (w.transpose() * &g * &w)[(0, 0)].sqrt();
    let v = &w / vnorm;
    let mut cols = vec![v.clone()];
    for i in 0..3 {
        let mut u = DVector::zeros(3);
        u[i] = 1.0;
        for c in &cols {
            let proj = (c.transpose() * &g * &u)[(0, 0)];
            u -= c * proj;
        }
        let norm2 = (u.transpose() * &g * &u)[(0, 0)];
        if norm2 > 1e-12 {
            cols.push(u / norm2.sqrt());
        }
        if cols.len() == 3 {
            break;
        }
    }
    let mut frame = DMatrix::zeros(3, 3);
    for (i, c) in cols.iter().enumerate() {
        frame.set_column(i, c);
    }
    Ok(frame)
}
