//! Curvature conditions as signed-margin predicates.
//!
//! A condition is an O(n)-invariant subset of curvature operators; its
//! margin is a continuous, positively homogeneous function that is positive
//! exactly on the open condition (up to minimizer tolerance for the
//! variants that require Grassmannian minimization).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvop::{
    self, act, biv_count, haar_orthogonal_rng, model_operator, random_psd_operator,
    random_unit_direction, CurvatureOperator,
};
use crate::error::{CurvError, Result};

/// Margins with |margin| below this are reported as boundary/undecided.
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ConditionKind {
    /// tr(R) > 0.
    ScalPositive,
    /// Positive isotropic curvature: complex sectional curvature positive on
    /// all isotropic planes.
    Pic,
    /// s_p(R)(P) > 0 for every p-plane P.
    PCurvature(usize),
    /// sec(R) > −ε·tr(R).
    SecAlmostNonneg(f64),
    /// R > −ε‖R‖ in the spectral sense.
    SpectralAlmostPos(f64),
    /// R > 0 in the spectral sense.
    OperatorPositive,
}

/// Multistart configuration for the sampled (Grassmannian) margins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizerConfig {
    pub multistarts: usize,
    pub max_iters: usize,
    pub step_tol: f64,
    pub seed: u64,
}

impl Default for MinimizerConfig {
    fn default() -> Self {
        MinimizerConfig {
            multistarts: 256,
            max_iters: 120,
            step_tol: 1e-8,
            seed: 0x5eed_cafe,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub kind: ConditionKind,
    pub minimizer: MinimizerConfig,
}

impl Condition {
    pub fn scal_positive() -> Self {
        Condition {
            kind: ConditionKind::ScalPositive,
            minimizer: MinimizerConfig::default(),
        }
    }

    pub fn pic() -> Self {
        Condition {
            kind: ConditionKind::Pic,
            minimizer: MinimizerConfig::default(),
        }
    }

    pub fn p_curvature(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(CurvError::invalid("p-curvature needs p ≥ 1"));
        }
        Ok(Condition {
            kind: ConditionKind::PCurvature(p),
            minimizer: MinimizerConfig::default(),
        })
    }

    pub fn sec_almost_nonneg(eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(CurvError::invalid("ε must be positive"));
        }
        Ok(Condition {
            kind: ConditionKind::SecAlmostNonneg(eps),
            minimizer: MinimizerConfig::default(),
        })
    }

    pub fn spectral_almost_pos(eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(CurvError::invalid("ε must be positive"));
        }
        Ok(Condition {
            kind: ConditionKind::SpectralAlmostPos(eps),
            minimizer: MinimizerConfig::default(),
        })
    }

    pub fn operator_positive() -> Self {
        Condition {
            kind: ConditionKind::OperatorPositive,
            minimizer: MinimizerConfig::default(),
        }
    }

    pub fn with_minimizer(mut self, cfg: MinimizerConfig) -> Self {
        self.minimizer = cfg;
        self
    }

    /// The variants that define convex cones.
    pub fn is_convex(&self) -> bool {
        matches!(
            self.kind,
            ConditionKind::ScalPositive
                | ConditionKind::Pic
                | ConditionKind::PCurvature(_)
                | ConditionKind::OperatorPositive
        )
    }

    /// Margins computed by eigendecomposition or trace (no sampling).
    pub fn is_exact(&self) -> bool {
        matches!(
            self.kind,
            ConditionKind::ScalPositive
                | ConditionKind::SpectralAlmostPos(_)
                | ConditionKind::OperatorPositive
        )
    }

    pub fn label(&self) -> String {
        match self.kind {
            ConditionKind::ScalPositive => "scal>0".into(),
            ConditionKind::Pic => "pic".into(),
            ConditionKind::PCurvature(p) => format!("p-curv({p})"),
            ConditionKind::SecAlmostNonneg(e) => format!("sec>-{e}*scal"),
            ConditionKind::SpectralAlmostPos(e) => format!("spectral({e})"),
            ConditionKind::OperatorPositive => "R>0".into(),
        }
    }

    /// Lipschitz constant of the margin with respect to the operator norm.
    pub fn margin_lipschitz(&self, n: usize) -> f64 {
        let nb = biv_count(n) as f64;
        match self.kind {
            ConditionKind::ScalPositive => nb,
            ConditionKind::Pic => 6.0,
            ConditionKind::PCurvature(p) => {
                let m = (n - p) as f64;
                (m * (m - 1.0)).max(1.0)
            }
            ConditionKind::SecAlmostNonneg(e) => 1.0 + e * nb,
            ConditionKind::SpectralAlmostPos(e) => 1.0 + e,
            ConditionKind::OperatorPositive => 1.0,
        }
    }

    /// Signed margin. Positive iff the operator satisfies the condition
    /// (up to minimizer tolerance for the sampled variants); positively
    /// homogeneous in the operator.
    pub fn margin(&self, r: &CurvatureOperator) -> Result<f64> {
        // Normalize so eigen/minimization work at unit scale even for the
        // rescaled operators produced deep inside a surgery neck.
        let scale = r.mat().iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        if scale == 0.0 {
            return margin_raw(self, r);
        }
        if !scale.is_finite() {
            return Err(CurvError::invalid("operator has non-finite entries"));
        }
        let normalized = r.scale(1.0 / scale);
        Ok(margin_raw(self, &normalized)? * scale)
    }
}

fn margin_raw(c: &Condition, r: &CurvatureOperator) -> Result<f64> {
    let n = r.n();
    match c.kind {
        ConditionKind::ScalPositive => Ok(r.scal()),
        ConditionKind::OperatorPositive => Ok(r.lambda_min()),
        ConditionKind::SpectralAlmostPos(eps) => Ok(r.lambda_min() + eps * r.operator_norm()),
        ConditionKind::SecAlmostNonneg(eps) => {
            let min_sec = minimize_frames(r, 2, Objective::Sectional, &c.minimizer);
            Ok(min_sec + eps * r.scal())
        }
        ConditionKind::Pic => {
            if n < 4 {
                return Err(CurvError::invalid(
                    "positive isotropic curvature needs n ≥ 4",
                ));
            }
            Ok(minimize_frames(r, 4, Objective::Isotropic, &c.minimizer))
        }
        ConditionKind::PCurvature(p) => {
            if p + 2 > n {
                return Err(CurvError::invalid(format!(
                    "p-curvature needs p ≤ n−2 (got p = {p}, n = {n})"
                )));
            }
            Ok(minimize_frames(r, n - p, Objective::PCurvature, &c.minimizer))
        }
    }
}

#[derive(Clone, Copy)]
enum Objective {
    /// R(f₁, f₂, f₂, f₁) on 2-frames.
    Sectional,
    /// Complex sectional curvature on 4-frames.
    Isotropic,
    /// Σ_{a≠b} R(f_a, f_b, f_b, f_a) on (n−p)-frames spanning P^⊥.
    PCurvature,
}

/// Flat scratch evaluator for the frame objectives; mat is the operator in
/// the bivector basis, frame columns live in the first k columns of q.
struct FrameEval<'a> {
    mat: &'a DMatrix<f64>,
    n: usize,
    k: usize,
    obj: Objective,
    w: Vec<f64>,
    mw: Vec<f64>,
    w2: Vec<f64>,
}

impl<'a> FrameEval<'a> {
    fn new(mat: &'a DMatrix<f64>, n: usize, k: usize, obj: Objective) -> Self {
        let nb = biv_count(n);
        FrameEval {
            mat,
            n,
            k,
            obj,
            w: vec![0.0; nb],
            mw: vec![0.0; nb],
            w2: vec![0.0; nb],
        }
    }

    #[inline]
    fn wedge_into(n: usize, q: &[f64], a: usize, b: usize, out: &mut [f64]) {
        let ca = &q[a * n..(a + 1) * n];
        let cb = &q[b * n..(b + 1) * n];
        let mut idx = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                out[idx] = ca[i] * cb[j] - ca[j] * cb[i];
                idx += 1;
            }
        }
    }

    #[inline]
    fn quad_form(&mut self, q: &[f64], a: usize, b: usize) -> f64 {
        let nb = self.w.len();
        Self::wedge_into(self.n, q, a, b, &mut self.w);
        let m = self.mat.as_slice(); // column-major, symmetric
        let mut acc = 0.0;
        for col in 0..nb {
            let wc = self.w[col];
            if wc != 0.0 {
                let mcol = &m[col * nb..(col + 1) * nb];
                let mut dot = 0.0;
                for row in 0..nb {
                    dot += self.w[row] * mcol[row];
                }
                acc += dot * wc;
            }
        }
        acc
    }

    /// ⟨M ω(f_a, f_b), ω(f_c, f_d)⟩.
    #[inline]
    fn cross_form(&mut self, q: &[f64], a: usize, b: usize, c: usize, d: usize) -> f64 {
        let nb = self.w.len();
        Self::wedge_into(self.n, q, a, b, &mut self.w);
        Self::wedge_into(self.n, q, c, d, &mut self.w2);
        let m = self.mat.as_slice();
        for row in 0..nb {
            self.mw[row] = 0.0;
        }
        for col in 0..nb {
            let wc = self.w[col];
            if wc != 0.0 {
                let mcol = &m[col * nb..(col + 1) * nb];
                for row in 0..nb {
                    self.mw[row] += mcol[row] * wc;
                }
            }
        }
        (0..nb).map(|i| self.mw[i] * self.w2[i]).sum()
    }

    fn eval(&mut self, q: &[f64]) -> f64 {
        match self.obj {
            Objective::Sectional => self.quad_form(q, 0, 1),
            Objective::Isotropic => {
                let s = self.quad_form(q, 0, 2)
                    + self.quad_form(q, 0, 3)
                    + self.quad_form(q, 1, 2)
                    + self.quad_form(q, 1, 3);
                // R(f1,f2,f3,f4) = −⟨M ω₁₂, ω₃₄⟩
                let r1234 = -self.cross_form(q, 0, 1, 2, 3);
                s - 2.0 * r1234
            }
            Objective::PCurvature => {
                let mut s = 0.0;
                for a in 0..self.k {
                    for b in (a + 1)..self.k {
                        s += self.quad_form(q, a, b);
                    }
                }
                2.0 * s
            }
        }
    }
}

/// Multistart pattern search over orthonormal k-frames. Each start carries a
/// full orthogonal matrix; moves are Givens rotations mixing frame columns
/// with the orthogonal complement (and with each other where the objective
/// is not rotation invariant within the frame).
fn minimize_frames(r: &CurvatureOperator, k: usize, obj: Objective, cfg: &MinimizerConfig) -> f64 {
    let n = r.n();
    let include_intra = matches!(obj, Objective::Isotropic);
    let mut gens: Vec<(usize, usize)> = Vec::new();
    for c in 0..k {
        for d in k..n {
            gens.push((c, d));
        }
    }
    if include_intra {
        for c in 0..k {
            for d in (c + 1)..k {
                gens.push((c, d));
            }
        }
    }

    let descend = |q: &mut Vec<f64>, start_step: f64| -> f64 {
        let mut ev = FrameEval::new(r.mat(), n, k, obj);
        let mut best = ev.eval(q);
        let mut step = start_step;
        let mut iters = 0;
        let mut stalled = 0;
        while step > cfg.step_tol && iters < cfg.max_iters {
            iters += 1;
            let mut improved = false;
            for &(a, b) in &gens {
                // three-point stencil along the rotation, then a parabola step
                rotate_cols(q, n, a, b, step);
                let fp = ev.eval(q);
                rotate_cols(q, n, a, b, -2.0 * step);
                let fm = ev.eval(q);
                rotate_cols(q, n, a, b, step); // back to center
                let denom = fm - 2.0 * best + fp;
                let mut moved = false;
                if denom > 1e-300 {
                    let t = (0.5 * step * (fm - fp) / denom).clamp(-2.0 * step, 2.0 * step);
                    if t != 0.0 {
                        rotate_cols(q, n, a, b, t);
                        let ft = ev.eval(q);
                        if ft < best - 1e-16 * best.abs().max(1.0) {
                            best = ft;
                            moved = true;
                        } else {
                            rotate_cols(q, n, a, b, -t);
                        }
                    }
                }
                if !moved {
                    let (fbest, ang) = if fp < fm { (fp, step) } else { (fm, -step) };
                    if fbest < best - 1e-16 * best.abs().max(1.0) {
                        rotate_cols(q, n, a, b, ang);
                        best = fbest;
                        moved = true;
                    }
                }
                improved |= moved;
            }
            if improved {
                stalled = 0;
            } else {
                // the parabola step has already polished the minimum; a few
                // fruitless shrinks in a row means convergence
                step *= 0.35;
                stalled += 1;
                if stalled >= 4 {
                    break;
                }
            }
        }
        best
    };

    let wave = |starts: Vec<(u64, Option<Vec<f64>>)>, step0: f64| -> (f64, Vec<f64>) {
        let (v, _, q) = starts
            .into_par_iter()
            .map(|(seed, warm)| {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    cfg.seed ^ seed.wrapping_mul(0x9E37_79B9_7F4A_7C15),
                );
                let mut q = match warm {
                    Some(mut base) => {
                        // perturb the warm frame by a few random rotations
                        for _ in 0..3 {
                            let a = rng.gen_range(0..n);
                            let b = (a + 1 + rng.gen_range(0..(n - 1))) % n;
                            let ang = rng.gen_range(-0.4..0.4);
                            rotate_cols(&mut base, n, a, b, ang);
                        }
                        base
                    }
                    None => {
                        let q0 = haar_orthogonal_rng(n, &mut rng);
                        let mut q = Vec::with_capacity(n * n);
                        for c in 0..n {
                            for i in 0..n {
                                q.push(q0[(i, c)]);
                            }
                        }
                        q
                    }
                };
                let val = descend(&mut q, step0);
                (val, seed, q)
            })
            .reduce(
                || (f64::INFINITY, u64::MAX, Vec::new()),
                |a, b| {
                    if (b.0, b.1) < (a.0, a.1) {
                        b
                    } else {
                        a
                    }
                },
            );
        (v, q)
    };

    // the start budget is split: three quarters Haar-random frames, one
    // quarter basin-hop perturbations of the best frame of the first wave
    let random_starts = (3 * cfg.multistarts / 4).max(1);
    let hop_starts = (cfg.multistarts - random_starts).max(8);
    let starts: Vec<(u64, Option<Vec<f64>>)> =
        (0..random_starts as u64).map(|s| (s, None)).collect();
    let (v1, q1) = wave(starts, 0.5);
    let hops: Vec<(u64, Option<Vec<f64>>)> = (0..hop_starts as u64)
        .map(|s| (s + 1_000_000, Some(q1.clone())))
        .collect();
    let (v2, _) = wave(hops, 0.25);
    v1.min(v2)
}

#[inline]
fn rotate_cols(q: &mut [f64], n: usize, a: usize, b: usize, ang: f64) {
    let (c, s) = (ang.cos(), ang.sin());
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let (left, right) = q.split_at_mut(hi * n);
    let ca = &mut left[lo * n..(lo + 1) * n];
    let cb = &mut right[..n];
    for i in 0..n {
        let (x, y) = (ca[i], cb[i]);
        ca[i] = c * x + s * y;
        cb[i] = -s * x + c * y;
    }
}

/// Inner-cone ball radius for the almost-positive spectral condition: for R
/// in the condition with parameter ε, returns δ such that the ball of radius
/// tδ around R + tS stays in the condition for every t ≥ 0 and every PSD
/// direction S with ‖S‖ = 1.
///
/// δ = ½·min{(ε − ε′)/(1+ε)², ε/(1+ε)} with ε′ the midpoint of
/// (max(0, −λ_min(R)/‖R‖), ε).
pub fn cepsilon_delta(eps: f64, r: &CurvatureOperator) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(CurvError::invalid("ε must be positive"));
    }
    let lam_min = r.lambda_min();
    let norm = r.operator_norm();
    let margin = lam_min + eps * norm;
    if !(margin > 0.0) {
        return Err(CurvError::Hypothesis {
            what: "operator is not strictly inside the spectral condition".into(),
            margin,
        });
    }
    let lower = if norm > 0.0 {
        (-lam_min / norm).max(0.0)
    } else {
        0.0
    };
    let eps_prime = 0.5 * (lower + eps);
    let d1 = (eps - eps_prime) / ((1.0 + eps) * (1.0 + eps));
    let d2 = eps / (1.0 + eps);
    Ok(0.5 * d1.min(d2))
}

/// Largest ball (spectral norm) around `s` that stays inside the condition,
/// estimated as the minimum over sampled unit directions of the exit radius
/// found by bisection; the reported value carries a 0.9 safety factor.
///
/// The sampled directions always include −I and −s/‖s‖, which are the
/// extremal escape directions for the trace and spectral conditions.
pub fn cone_ball_radius(c: &Condition, s: &CurvatureOperator) -> Result<f64> {
    let m0 = c.margin(s)?;
    if !(m0 > BOUNDARY_TOL) {
        return Err(CurvError::Hypothesis {
            what: format!("base operator is not strictly inside {}", c.label()),
            margin: m0,
        });
    }
    let n = s.n();
    let s_norm = s.operator_norm();
    let mut dirs: Vec<CurvatureOperator> = Vec::with_capacity(64);
    dirs.push(CurvatureOperator::identity(n)?.scale(-1.0));
    dirs.push(s.scale(-1.0 / s_norm));
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c0e_ba11);
    while dirs.len() < 64 {
        dirs.push(random_unit_direction(n, &mut rng));
    }

    let cap = 1e8 * s_norm.max(1.0);
    let mut rho_hat = f64::INFINITY;
    for t in &dirs {
        // grow until outside (or give up at the cap)
        let mut hi = 0.25 * s_norm.max(1.0);
        let mut lo = 0.0;
        loop {
            let margin = c.margin(&s.add(&t.scale(hi))?)?;
            if margin <= 0.0 {
                break;
            }
            lo = hi;
            hi *= 2.0;
            if hi > cap {
                break;
            }
        }
        if hi > cap {
            continue; // direction never exits within the cap
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let margin = c.margin(&s.add(&t.scale(mid))?)?;
            if margin > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        rho_hat = rho_hat.min(0.5 * (lo + hi));
    }
    if !rho_hat.is_finite() {
        return Err(CurvError::invalid(
            "no sampled direction exits the condition; radius unbounded",
        ));
    }
    Ok(0.9 * rho_hat)
}

/// Ball radius around `s` inside a convex cone condition. For convex
/// variants this radius realizes the inner cone condition: the cone over the
/// ball can be added to any operator of the condition.
pub fn inner_cone_rho_convex(c: &Condition, s: &CurvatureOperator) -> Result<f64> {
    if !c.is_convex() {
        return Err(CurvError::invalid(format!(
            "{} is not one of the convex cone variants",
            c.label()
        )));
    }
    cone_ball_radius(c, s)
}

#[derive(Debug, Clone, Serialize)]
pub struct InnerConeSample {
    pub t: f64,
    pub direction: usize,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InnerConeCertificate {
    pub rho: f64,
    pub samples: Vec<InnerConeSample>,
    pub verdict: bool,
}

/// Samples the cone {t(s + T) : ‖T‖ < ρ, t ≥ 0} added to the base operator
/// and checks membership of every sample. Failures produce a failing
/// verdict, not an error.
pub fn certify_inner_cone(
    c: &Condition,
    s: &CurvatureOperator,
    r: &CurvatureOperator,
    rho: f64,
    seed: u64,
) -> Result<InnerConeCertificate> {
    if !(rho > 0.0) {
        return Err(CurvError::invalid("inner cone radius must be positive"));
    }
    let n = s.n();
    if r.n() != n {
        return Err(CurvError::DimensionMismatch("certify_inner_cone".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s_norm = s.operator_norm();
    let mut dirs: Vec<CurvatureOperator> = vec![
        CurvatureOperator::zeros(n)?,
        CurvatureOperator::identity(n)?.scale(-0.98 * rho),
        s.scale(-0.98 * rho / s_norm),
        CurvatureOperator::identity(n)?.scale(0.98 * rho),
    ];
    for _ in 0..12 {
        let u: f64 = rng.gen_range(0.2..0.98);
        dirs.push(random_unit_direction(n, &mut rng).scale(u * rho));
    }

    // log grid of cone parameters, scaled by ‖r‖/‖s‖, plus the t = 0 row
    let scale = r.operator_norm().max(1e-30) / s_norm;
    let mut ts = vec![0.0f64];
    let steps = 25;
    for i in 0..=steps {
        let e = -3.0 + 7.0 * i as f64 / steps as f64;
        ts.push(scale * 10f64.powf(e));
    }

    let mut samples = Vec::with_capacity(ts.len() * dirs.len());
    let mut verdict = true;
    for &t in &ts {
        for (di, d) in dirs.iter().enumerate() {
            let probe = r.add(&s.add(d)?.scale(t))?;
            let margin = c.margin(&probe)?;
            if !(margin > 0.0) {
                verdict = false;
            }
            samples.push(InnerConeSample {
                t,
                direction: di,
                margin,
            });
        }
    }
    Ok(InnerConeCertificate {
        rho,
        samples,
        verdict,
    })
}

#[derive(Debug, Clone)]
pub struct OrbitAverage {
    pub average: CurvatureOperator,
    pub lambda: f64,
    pub residual: f64,
}

/// Monte-Carlo average of the O(d+1)-orbit of an operator supported in the
/// Λ² block of the first d coordinates. The average is a fixed point of the
/// induced representation, hence proportional to the model operator of the
/// (d+1)-curved-direction product; λ is fitted by least squares.
pub fn orbit_average(
    r: &CurvatureOperator,
    d: usize,
    samples: usize,
    seed: u64,
) -> Result<OrbitAverage> {
    let n = r.n();
    if d + 1 > n {
        return Err(CurvError::invalid(format!(
            "orbit average over O({}) does not fit in dimension {n}",
            d + 1
        )));
    }
    if samples == 0 {
        return Err(CurvError::invalid("need at least one sample"));
    }
    // support check: the averaging group O(d+1) acts on the first d+1
    // coordinates, so the operator must not touch bivectors outside that
    // block (model operators with up to d+1 curved directions qualify)
    let scale = r.operator_norm().max(1.0);
    let nb = biv_count(n);
    for bi in 0..nb {
        for bj in 0..nb {
            let (_, j1) = curvop::biv_pair(bi, n)?;
            let (_, j2) = curvop::biv_pair(bj, n)?;
            let inside = j1 <= d && j2 <= d;
            if !inside && r.mat()[(bi, bj)].abs() > 1e-12 * scale {
                return Err(CurvError::invalid(format!(
                    "operator not supported in the first-{}-coordinates Λ² block (entry ({bi},{bj}))",
                    d + 1
                )));
            }
        }
    }

    // fixed-size chunks keep the summation order independent of threading
    const CHUNK: usize = 1024;
    let chunks: Vec<(usize, usize)> = (0..samples)
        .step_by(CHUNK)
        .map(|s| (s, (s + CHUNK).min(samples)))
        .collect();
    let partials: Vec<DMatrix<f64>> = chunks
        .par_iter()
        .map(|&(lo, hi)| {
            let mut acc = DMatrix::zeros(nb, nb);
            for idx in lo..hi {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(seed ^ (idx as u64).wrapping_mul(0x9E37_79B9));
                let a_small = haar_orthogonal_rng(d + 1, &mut rng);
                let mut a = DMatrix::identity(n, n);
                for i in 0..(d + 1) {
                    for j in 0..(d + 1) {
                        a[(i, j)] = a_small[(i, j)];
                    }
                }
                let moved = act(&a, r).expect("orthogonal by construction");
                acc += moved.mat();
            }
            acc
        })
        .collect();
    let mut sum = DMatrix::zeros(nb, nb);
    for p in partials {
        sum += p;
    }
    let avg_mat = sum / samples as f64;
    let avg = CurvatureOperator::new(n, avg_mat.clone())?;

    let model = model_operator(d + 1, 1.0, n)?;
    let denom = (model.mat().transpose() * model.mat()).trace();
    let lambda = (model.mat().transpose() * &avg_mat).trace() / denom;
    let resid_mat = &avg_mat - model.mat() * lambda;
    let residual = crate::util::frobenius(&resid_mat) / crate::util::frobenius(&avg_mat);
    Ok(OrbitAverage {
        average: avg,
        lambda,
        residual,
    })
}

/// Random operator strictly inside the given condition, for sampling-based
/// tests: a rotated PSD wedge square plus a multiple of the identity.
pub fn random_member<R: Rng>(c: &Condition, n: usize, rng: &mut R) -> Result<CurvatureOperator> {
    for _ in 0..64 {
        let psd = random_psd_operator(n, rng);
        let bump: f64 = rng.gen_range(0.05..0.6);
        let candidate = psd.add(&CurvatureOperator::identity(n)?.scale(bump))?;
        let q = haar_orthogonal_rng(n, rng);
        let candidate = act(&q, &candidate)?;
        if c.margin(&candidate)? > 10.0 * BOUNDARY_TOL {
            return Ok(candidate);
        }
    }
    Err(CurvError::invalid(format!(
        "could not sample an operator inside {}",
        c.label()
    )))
}

/// Random symmetric Gaussian, Bianchi projected (not normalized).
pub fn random_bianchi<R: Rng>(n: usize, rng: &mut R) -> CurvatureOperator {
    let nb = biv_count(n);
    let g = DMatrix::from_fn(nb, nb, |_, _| rng.sample::<f64, _>(StandardNormal));
    let sym = (&g + g.transpose()) * 0.5;
    curvop::bianchi_project(n, &sym).expect("symmetric input")
}

/// Minimum sectional curvature via the sampled minimizer, exposed for
/// diagnostics.
pub fn min_sectional(r: &CurvatureOperator, cfg: &MinimizerConfig) -> f64 {
    minimize_frames(r, 2, Objective::Sectional, cfg)
}

pub(crate) fn unit_vector(n: usize, i: usize) -> DVector<f64> {
    DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvop::Frame;
    use approx::assert_abs_diff_eq;

    fn fast_cfg() -> MinimizerConfig {
        MinimizerConfig {
            multistarts: 64,
            ..MinimizerConfig::default()
        }
    }

    #[test]
    fn margin_examples() {
        let scal = Condition::scal_positive();
        let m = model_operator(2, 1.0, 5).unwrap();
        assert_abs_diff_eq!(scal.margin(&m).unwrap(), 1.0, epsilon = 1e-14);

        let id = CurvatureOperator::identity(5).unwrap();
        let spec = Condition::spectral_almost_pos(0.5).unwrap();
        assert_abs_diff_eq!(spec.margin(&id).unwrap(), 1.5, epsilon = 1e-12);

        let op = Condition::operator_positive();
        assert_abs_diff_eq!(op.margin(&id).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn p_curvature_threshold_at_n5() {
        let m = model_operator(3, 1.0, 5).unwrap();
        let p1 = Condition::p_curvature(1).unwrap().with_minimizer(fast_cfg());
        let p2 = Condition::p_curvature(2).unwrap().with_minimizer(fast_cfg());
        let m1 = p1.margin(&m).unwrap();
        let m2 = p2.margin(&m).unwrap();
        assert!(m1 > 1e-3, "d = p+2 case must be strictly positive, got {m1}");
        // minimum over planes meeting the curved block in one line is 0
        assert!(m2.abs() <= 1e-3, "d = p+1 case must be boundary, got {m2}");
        // the exact minimum for d = p+2 is 2 (two curved directions forced)
        assert_abs_diff_eq!(m1, 2.0, epsilon = 1e-4);
    }

    #[test]
    fn pic_margin_of_cylinder_model() {
        let n = 5;
        let m = model_operator(n - 1, 1.0, n).unwrap();
        let pic = Condition::pic().with_minimizer(fast_cfg());
        let margin = pic.margin(&m).unwrap();
        // minimum complex sectional curvature of the once-flat cylinder is 2
        assert_abs_diff_eq!(margin, 2.0, epsilon = 1e-4);
    }

    #[test]
    fn sec_almost_nonneg_margin() {
        let n = 4;
        let id = CurvatureOperator::identity(n).unwrap();
        let c = Condition::sec_almost_nonneg(0.1)
            .unwrap()
            .with_minimizer(fast_cfg());
        // min sectional of the round sphere is 1; trace is 6
        assert_abs_diff_eq!(c.margin(&id).unwrap(), 1.0 + 0.6, epsilon = 1e-5);
    }

    #[test]
    fn margins_are_homogeneous() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 5;
        let r = random_psd_operator(n, &mut rng)
            .add(&CurvatureOperator::identity(n).unwrap().scale(0.3))
            .unwrap();
        for c in [
            Condition::scal_positive(),
            Condition::spectral_almost_pos(0.25).unwrap(),
            Condition::operator_positive(),
        ] {
            let m1 = c.margin(&r).unwrap();
            let m2 = c.margin(&r.scale(7.5)).unwrap();
            assert_abs_diff_eq!(m2, 7.5 * m1, epsilon = 1e-10 * m1.abs().max(1.0));
        }
    }

    #[test]
    fn equivariance_spot_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 5;
        for trial in 0..10 {
            let r = random_bianchi(n, &mut rng);
            let a = haar_orthogonal_rng(n, &mut rng);
            let moved = act(&a, &r).unwrap();
            for c in [
                Condition::scal_positive(),
                Condition::spectral_almost_pos(0.3).unwrap(),
                Condition::operator_positive(),
            ] {
                let d = (c.margin(&r).unwrap() - c.margin(&moved).unwrap()).abs();
                assert!(d <= 1e-6, "{} trial {trial}: drift {d}", c.label());
            }
            let pic = Condition::pic().with_minimizer(fast_cfg());
            let d = (pic.margin(&r).unwrap() - pic.margin(&moved).unwrap()).abs();
            assert!(d <= 1e-3, "pic trial {trial}: drift {d}");
        }
    }

    #[test]
    fn convex_variants_preserve_positivity_under_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 5;
        for c in [
            Condition::scal_positive(),
            Condition::operator_positive(),
            Condition::pic().with_minimizer(fast_cfg()),
        ] {
            for _ in 0..5 {
                let a = random_member(&c, n, &mut rng).unwrap();
                let b = random_member(&c, n, &mut rng).unwrap();
                let sum_margin = c.margin(&a.add(&b).unwrap()).unwrap();
                assert!(sum_margin > 0.0, "{}: sum left the cone", c.label());
            }
        }
    }

    #[test]
    fn cepsilon_delta_worked_example() {
        let id = CurvatureOperator::identity(4).unwrap();
        let delta = cepsilon_delta(1.0, &id).unwrap();
        // ε′ = 0.5, δ = ½·min{0.5/4, 0.5} = 0.0625
        assert_abs_diff_eq!(delta, 0.0625, epsilon = 1e-12);

        // near-boundary operator degenerates the radius
        let eps = 0.4;
        let r = {
            let nb = biv_count(4);
            let mut m = DMatrix::identity(nb, nb);
            m[(nb - 1, nb - 1)] = -eps * (1.0 - 1e-9);
            curvop::bianchi_project(4, &m).unwrap()
        };
        let d = cepsilon_delta(eps, &r).unwrap();
        assert!(d < 1e-6, "boundary case must collapse, got {d}");

        let bad = CurvatureOperator::identity(4).unwrap().scale(-1.0);
        assert!(cepsilon_delta(0.3, &bad).is_err());
    }

    #[test]
    fn cepsilon_ball_membership_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 4;
        let eps = 0.6;
        let c = Condition::spectral_almost_pos(eps).unwrap();
        let mut failures = 0;
        for _ in 0..200 {
            let r = random_member(&c, n, &mut rng).unwrap();
            let delta = cepsilon_delta(eps, &r).unwrap();
            let s = random_psd_operator(n, &mut rng);
            let t = 10f64.powf(rng.gen_range(-2.0..2.0)) * r.operator_norm();
            let dir = random_unit_direction(n, &mut rng);
            let u: f64 = rng.gen_range(0.0..1.0);
            let probe = r
                .add(&s.scale(t))
                .unwrap()
                .add(&dir.scale(u * t * delta))
                .unwrap();
            if !(c.margin(&probe).unwrap() > 0.0) {
                failures += 1;
            }
        }
        assert_eq!(failures, 0);
    }

    #[test]
    fn inner_cone_radius_examples() {
        // trace condition: exact radius is tr(S)/N
        let s = model_operator(2, 1.0, 4).unwrap();
        let c = Condition::scal_positive();
        let rho = inner_cone_rho_convex(&c, &s).unwrap();
        let exact = 1.0 / biv_count(4) as f64;
        assert!(rho <= exact + 1e-9, "rho {rho} above the exact radius {exact}");
        assert!(rho >= 0.8 * exact, "rho {rho} overly conservative");

        // spectral positivity at the identity: radius 1
        let id = CurvatureOperator::identity(4).unwrap();
        let c = Condition::operator_positive();
        let rho = inner_cone_rho_convex(&c, &id).unwrap();
        assert_abs_diff_eq!(rho, 0.9, epsilon = 1e-6);

        // boundary base is rejected
        let z = CurvatureOperator::zeros(4).unwrap();
        assert!(inner_cone_rho_convex(&Condition::scal_positive(), &z).is_err());
        // non-convex variant is rejected
        assert!(
            inner_cone_rho_convex(&Condition::spectral_almost_pos(0.1).unwrap(), &id).is_err()
        );
    }

    #[test]
    fn certify_inner_cone_examples() {
        let n = 5;
        let s = model_operator(3, 1.0, n).unwrap();
        let r = CurvatureOperator::identity(n).unwrap();
        let c = Condition::scal_positive();
        let rho = inner_cone_rho_convex(&c, &s).unwrap();
        let cert = certify_inner_cone(&c, &s, &r, rho, 3).unwrap();
        assert!(cert.verdict);
        // the t = 0 rows carry the base margin
        assert!(cert
            .samples
            .iter()
            .filter(|row| row.t == 0.0)
            .all(|row| row.margin > 0.0));

        // a grossly inflated radius must fail with a witness
        let cert = certify_inner_cone(&c, &s, &r, 10.0 * rho / 0.9, 3).unwrap();
        assert!(!cert.verdict);
        assert!(cert.samples.iter().any(|row| row.margin <= 0.0));
    }

    #[test]
    fn orbit_average_fixed_point_and_single_sample() {
        let n = 4;
        // already-invariant operator is its own average
        let m = model_operator(3, 1.0, n).unwrap();
        let out = orbit_average(&m, 2, 500, 11).unwrap();
        assert!(crate::util::max_abs(&(out.average.mat() - m.mat())) <= 1e-10);
        assert_abs_diff_eq!(out.lambda, 1.0, epsilon = 1e-10);

        // single sample is one rotated copy
        let r = model_operator(2, 1.0, n).unwrap();
        let one = orbit_average(&r, 2, 1, 42).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42u64 ^ 0);
        let a_small = haar_orthogonal_rng(3, &mut rng);
        let mut a = DMatrix::identity(n, n);
        for i in 0..3 {
            for j in 0..3 {
                a[(i, j)] = a_small[(i, j)];
            }
        }
        let expect = act(&a, &r).unwrap();
        assert!(crate::util::max_abs(&(one.average.mat() - expect.mat())) <= 1e-12);

        // unsupported block structure errors out
        let bad = model_operator(4, 1.0, n).unwrap();
        assert!(orbit_average(&bad, 2, 10, 1).is_err());
    }

    #[test]
    fn orbit_average_converges_to_model_multiple() {
        let n = 4;
        let r = model_operator(2, 1.0, n).unwrap();
        let out = orbit_average(&r, 2, 20_000, 7).unwrap();
        assert!(out.residual <= 3e-2, "residual {}", out.residual);
        assert!(
            (out.lambda - 1.0 / 3.0).abs() <= 0.02 * (1.0 / 3.0),
            "λ = {}",
            out.lambda
        );

        // residual decreases with sample count (seed-averaged)
        let mut small = 0.0;
        let mut large = 0.0;
        for seed in 0..3 {
            small += orbit_average(&r, 2, 1_000, seed).unwrap().residual;
            large += orbit_average(&r, 2, 20_000, seed).unwrap().residual;
        }
        assert!(large < small, "residual did not decrease: {small} vs {large}");
    }

    #[test]
    fn frame_eval_matches_operator_api() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 5;
        let r = random_bianchi(n, &mut rng);
        let q0 = haar_orthogonal_rng(n, &mut rng);
        let mut q = Vec::new();
        for c in 0..n {
            for i in 0..n {
                q.push(q0[(i, c)]);
            }
        }
        let mut ev = FrameEval::new(r.mat(), n, 4, Objective::Isotropic);
        let got = ev.eval(&q);
        let f = Frame::new(q0.columns(0, 4).into_owned()).unwrap();
        let want = r.complex_sectional(&f).unwrap();
        assert_abs_diff_eq!(got, want, epsilon = 1e-10);

        let mut ev = FrameEval::new(r.mat(), n, 2, Objective::Sectional);
        let got = ev.eval(&q);
        let want = r
            .sectional(&q0.column(0).into_owned(), &q0.column(1).into_owned())
            .unwrap();
        assert_abs_diff_eq!(got, want, epsilon = 1e-10);
    }

    #[test]
    fn unit_vector_helper() {
        let e2 = unit_vector(4, 2);
        assert_eq!(e2[2], 1.0);
        assert_eq!(e2.sum(), 1.0);
    }
}
