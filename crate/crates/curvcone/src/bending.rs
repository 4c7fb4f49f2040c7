//! Tube bending around a submanifold: a graph-like deformation in
//! (ambient) × ℝ driven by an angle profile θ(s) that turns the metric
//! collar around the submanifold into a cylinder over a small distance tube
//! while a curvature condition is preserved.
//!
//! The inductive bends halve the tube radius each step, so a completed
//! profile can reach radii far below the floating-point range. Segments are
//! therefore parametrized by the dimensionless local coordinate
//! ŝ = (s − s_l)/r_l and radii are tracked in logarithms; curvature checks
//! run on r²-rescaled operators, which is sufficient because all condition
//! margins are positively homogeneous.

use serde::Serialize;

use crate::conditions::{
    cepsilon_delta, cone_ball_radius, inner_cone_rho_convex, Condition, ConditionKind,
    BOUNDARY_TOL,
};
use crate::curvop::{
    from_riemann_unchecked, kulkarni_wedge, model_operator, CurvatureOperator, Riemann4,
    SymmetricForm,
};
use crate::error::{CurvError, Result};
use crate::geometry::{
    chart_curvature_fd, tube_constant, tube_curvature, ChartMetric, RotSymModel,
    stereographic_factor,
};
use crate::util;

const NODES: usize = 512;

/// Radii and angle bounds governing a bending run.
#[derive(Debug, Clone, Serialize)]
pub struct BendingConstants {
    pub r_bar: f64,
    /// Inner-cone radius around the cylinder model operator.
    pub rho: f64,
    /// Tube constant: ‖tube deviation‖ ≤ l_tube/r (fitted, ×2 safety).
    pub l_tube: f64,
    /// Tube admissibility radius.
    pub r_star: f64,
    /// Bound on the mixed (three tangent, one radial) ambient components.
    pub c1: f64,
    /// Bound entering the θ′-part of the deformation error.
    pub c2: f64,
    /// Half of the minimum sampled ambient margin.
    pub eps1: f64,
    /// Start radius of the bending: r_s < min{1, r_*, ρ/4L, ½√(ρ/(sup‖R‖+C1)), r̄}.
    pub r_s: f64,
    /// Initial bending angle.
    pub theta0: f64,
    /// End of the initial segment, r̄ − r_s/2.
    pub s0: f64,
    pub sup_rm: f64,
    pub sup_rt: f64,
    /// True when the ambient sits on the boundary of the condition
    /// (margin ≈ 0, e.g. the flat model with the trace condition).
    pub boundary_ambient: bool,
    pub safety: f64,
    /// eps1 divided by the margin Lipschitz constant of the condition.
    eps1_eff: f64,
}

impl BendingConstants {
    /// Re-checks the radius and angle constraints.
    pub fn validate(&self) -> Result<()> {
        let mut cap = self.r_bar.min(1.0).min(self.r_star);
        if self.l_tube > 0.0 {
            cap = cap.min(self.rho / (4.0 * self.l_tube));
        }
        if self.sup_rm + self.c1 > 0.0 {
            cap = cap.min(0.5 * (self.rho / (self.sup_rm + self.c1)).sqrt());
        }
        if !(self.r_s < cap) {
            return Err(CurvError::InvariantViolation {
                check: "start-radius constraint",
                residual: self.r_s,
                tol: cap,
            });
        }
        if !(self.theta0 > 0.0 && self.theta0 < self.r_s / 8.0) {
            return Err(CurvError::InvariantViolation {
                check: "initial angle below r_s/8",
                residual: self.theta0,
                tol: self.r_s / 8.0,
            });
        }
        if !self.boundary_ambient {
            let s2 = self.theta0.sin().powi(2);
            let lhs1 = s2 * (self.sup_rm + self.sup_rt);
            let lhs2 = (1.0 - self.theta0.cos()) * self.c1
                + 2.0 * self.theta0.sin() / self.r_s * self.c2;
            let eps = self.eps1_effective();
            if !(lhs1 < 0.5 * eps && lhs2 < 0.5 * eps) {
                return Err(CurvError::InvariantViolation {
                    check: "initial-angle inequalities",
                    residual: lhs1.max(lhs2),
                    tol: 0.5 * eps,
                });
            }
        }
        Ok(())
    }

    /// The Step-1 margin converted into an operator-ball radius; set during
    /// estimation (margin divided by the condition's Lipschitz constant).
    pub fn eps1_effective(&self) -> f64 {
        self.eps1_eff
    }

    pub fn bend_count_bound(&self) -> usize {
        let growth = self.rho / (16.0 * self.c2) * self.theta0.sin();
        ((std::f64::consts::FRAC_PI_2 - self.theta0) / growth).ceil() as usize
    }
}

impl BendingConstants {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        r_bar: f64,
        rho: f64,
        l_tube: f64,
        r_star: f64,
        c1: f64,
        c2: f64,
        eps1: f64,
        eps1_eff: f64,
        r_s: f64,
        theta0: f64,
        sup_rm: f64,
        sup_rt: f64,
        boundary_ambient: bool,
    ) -> Self {
        BendingConstants {
            r_bar,
            rho,
            l_tube,
            r_star,
            c1,
            c2,
            eps1,
            r_s,
            theta0,
            s0: r_bar - 0.5 * r_s,
            sup_rm,
            sup_rt,
            boundary_ambient,
            safety: 0.9,
            eps1_eff,
        }
    }
}

/// Estimates every constant of the bending run from the model geometry:
/// the inner-cone radius over the ambient pullbacks, the tube constant, the
/// deformation-error bounds, the admissible start radius and the initial
/// angle.
pub fn estimate_constants(
    m: &RotSymModel,
    c: &Condition,
    r_bar: f64,
) -> Result<BendingConstants> {
    if !(r_bar > 0.0 && r_bar < m.r_max) {
        return Err(CurvError::domain(format!(
            "collar radius {r_bar} (model domain (0, {}))",
            m.r_max
        )));
    }
    let n = m.n;
    if m.sphere_dim() < 2 {
        return Err(CurvError::invalid(
            "bending needs at least two normal sphere directions (codimension ≥ 3)",
        ));
    }

    // ambient pullbacks over the collar (rotational symmetry makes them
    // radius-independent space forms, but sample the grid regardless)
    let grid = util::log_grid(1e-3 * r_bar, r_bar, 32);
    let mut min_margin = f64::INFINITY;
    let mut sup_rm = 0.0f64;
    let mut c1 = 0.0f64;
    for &r in &grid {
        let amb = m.ambient_operator(r)?;
        min_margin = min_margin.min(c.margin(&amb)?);
        sup_rm = sup_rm.max(amb.operator_norm());
        let t = m.warped_curvature(r)?;
        let mut mixed = 0.0f64;
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                for k in 0..n - 1 {
                    mixed = mixed.max(t.get(i, j, k, n - 1).abs());
                }
            }
        }
        c1 = c1.max(2.0 * mixed);
    }
    if min_margin < -BOUNDARY_TOL {
        return Err(CurvError::Hypothesis {
            what: format!("ambient model violates {} on the collar", c.label()),
            margin: min_margin,
        });
    }
    let boundary_ambient = min_margin <= BOUNDARY_TOL;
    let eps1 = 0.5 * min_margin.max(0.0);
    let eps1_eff = eps1 / c.margin_lipschitz(n);

    // inner-cone radius around the cylinder model
    let s_model = model_operator(m.sphere_dim(), 1.0, n)?;
    let rho = match c.kind {
        ConditionKind::SpectralAlmostPos(eps) => {
            if boundary_ambient {
                // vanishing ambient: membership reduces to the cone ball
                // around the model operator itself
                cone_ball_radius(c, &s_model)?
            } else {
                let mut d = f64::INFINITY;
                for &r in &grid {
                    d = d.min(cepsilon_delta(eps, &m.ambient_operator(r)?)?);
                }
                d
            }
        }
        ConditionKind::SecAlmostNonneg(_) => {
            return Err(CurvError::invalid(
                "almost-nonnegative sectional curvature has no implemented inner-cone route",
            ));
        }
        _ => inner_cone_rho_convex(c, &s_model)?,
    };

    // tube constant with a factor-2 safety margin
    let tube_grid = util::log_grid(1e-3 * r_bar, (0.999 * m.r_max).min(r_bar), 32);
    let l_tube = 2.0 * tube_constant(m, &tube_grid)?;
    let mut r_star = (0.99 * m.r_max).min(r_bar);
    if l_tube > 0.0 {
        r_star = r_star.min(rho / l_tube);
    }

    // θ′-error constant: 2·sup(r‖sff‖ + r‖A‖)
    let mut c2 = 0.0f64;
    for &r in &tube_grid {
        let (sff, a) = crate::geometry::tube_sff(m, r)?;
        c2 = c2.max(2.0 * (r * sff.operator_norm() + r * a.operator_norm()));
    }

    // start radius
    let mut cap = r_bar.min(1.0).min(r_star);
    if l_tube > 0.0 {
        cap = cap.min(rho / (4.0 * l_tube));
    }
    if sup_rm + c1 > 0.0 {
        cap = cap.min(0.5 * (rho / (sup_rm + c1)).sqrt());
    }
    let r_s = 0.9 * cap;

    // largest tube-operator norm over the region the initial bend touches
    let mut sup_rt = 0.0f64;
    for &r in &util::log_grid(0.5 * r_s, r_bar, 32) {
        sup_rt = sup_rt.max(tube_curvature(m, r)?.rt.operator_norm());
    }

    // initial angle
    let cap_theta = r_s / 8.0;
    let theta0 = if boundary_ambient {
        // the two-sided margin argument is vacuous on the boundary; take a
        // fixed fraction of the structural cap
        0.9 * r_s / 16.0
    } else {
        let eps = eps1_eff;
        let ok = |th: f64| {
            th.sin().powi(2) * (sup_rm + sup_rt) < 0.5 * eps
                && (1.0 - th.cos()) * c1 + 2.0 * th.sin() / r_s * c2 < 0.5 * eps
        };
        let mut lo = 0.0;
        let mut hi = cap_theta * 0.999;
        if !ok(hi * 1e-9) {
            return Err(CurvError::Hypothesis {
                what: "no admissible initial angle".into(),
                margin: eps,
            });
        }
        if ok(hi) {
            hi
        } else {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if ok(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        }
        .min(cap_theta * 0.999)
            * 0.9
    };

    let k = BendingConstants::assemble(
        r_bar,
        rho,
        l_tube,
        r_star,
        c1,
        c2,
        eps1,
        eps1_eff,
        r_s,
        theta0,
        sup_rm,
        sup_rt,
        boundary_ambient,
    );
    k.validate()?;
    Ok(k)
}

#[derive(Debug, Clone, Serialize)]
enum SegShape {
    /// Constant angle.
    Level,
    /// Initial ramp: θ += dθ·step(u) over the whole segment.
    Ramp { dtheta: f64 },
    /// Inductive bump: θ′·r_l = plateau·shape(ŝ), ŝ ∈ [0, ½].
    Bump { plateau_hat: f64 },
}

/// One profile segment in local coordinates ŝ = (s − s_start)/r_start.
#[derive(Debug, Clone, Serialize)]
pub struct Segment {
    pub s_start: f64,
    pub t_start: f64,
    pub ln_r_start: f64,
    pub theta_start: f64,
    pub theta_end: f64,
    /// Segment length divided by the start radius.
    pub len_hat: f64,
    shape: SegShape,
    /// y(ŝ) = r(ŝ)/r_start at the quadrature nodes.
    #[serde(skip)]
    y_nodes: Vec<f64>,
    /// Exact ln of the end shrink factor when the numeric table would
    /// cancel catastrophically (straight inserts with tiny targets).
    #[serde(skip)]
    ln_y_end_exact: Option<f64>,
    /// ∫ sinθ dŝ cumulative at the quadrature nodes.
    #[serde(skip)]
    tsin_nodes: Vec<f64>,
}

/// Bump shape on ŝ ∈ [0, ½]: zero margins of width 1/16, smooth ramps of
/// width 1/16, plateau value 1 in between. Integral over the bump is 5/16.
fn bump_shape(shat: f64) -> f64 {
    const W: f64 = 1.0 / 16.0;
    if shat <= W || shat >= 0.5 - W {
        0.0
    } else if shat < 2.0 * W {
        util::smoothstep((shat - W) / W)
    } else if shat <= 0.5 - 2.0 * W {
        1.0
    } else {
        util::smoothstep((0.5 - W - shat) / W)
    }
}

/// ∫₀^ŝ bump_shape.
fn bump_shape_integral(shat: f64) -> f64 {
    const W: f64 = 1.0 / 16.0;
    let s = shat.clamp(0.0, 0.5);
    if s <= W {
        0.0
    } else if s < 2.0 * W {
        W * util::smoothstep_integral((s - W) / W)
    } else if s <= 0.5 - 2.0 * W {
        W * 0.5 + (s - 2.0 * W)
    } else if s < 0.5 - W {
        W * 0.5 + (0.5 - 4.0 * W) + W * (0.5 - util::smoothstep_integral((0.5 - W - s) / W))
    } else {
        W + (0.5 - 4.0 * W)
    }
}

impl Segment {
    fn theta_at(&self, shat: f64) -> f64 {
        match self.shape {
            SegShape::Level => self.theta_start,
            SegShape::Ramp { dtheta } => {
                self.theta_start + dtheta * util::smoothstep(shat / self.len_hat)
            }
            SegShape::Bump { plateau_hat } => {
                self.theta_start + plateau_hat * bump_shape_integral(shat)
            }
        }
    }

    /// dθ/dŝ.
    fn dtheta_dshat(&self, shat: f64) -> f64 {
        match self.shape {
            SegShape::Level => 0.0,
            SegShape::Ramp { dtheta } => {
                dtheta * util::smoothstep_d1(shat / self.len_hat) / self.len_hat
            }
            SegShape::Bump { plateau_hat } => plateau_hat * bump_shape(shat),
        }
    }

    fn build_tables(&mut self) {
        let h = self.len_hat / NODES as f64;
        let mut y = Vec::with_capacity(NODES + 1);
        let mut ts = Vec::with_capacity(NODES + 1);
        y.push(1.0);
        ts.push(0.0);
        for i in 0..NODES {
            let a = i as f64 * h;
            let b = a + h;
            let mid = 0.5 * (a + b);
            let cos_int =
                h / 6.0 * (self.theta_at(a).cos() + 4.0 * self.theta_at(mid).cos() + self.theta_at(b).cos());
            let sin_int =
                h / 6.0 * (self.theta_at(a).sin() + 4.0 * self.theta_at(mid).sin() + self.theta_at(b).sin());
            y.push(y[i] - cos_int);
            ts.push(ts[i] + sin_int);
        }
        self.y_nodes = y;
        self.tsin_nodes = ts;
        self.theta_end = self.theta_at(self.len_hat);
    }

    /// y(ŝ) = r(ŝ)/r_start via the cached table plus local quadrature.
    fn y_at(&self, shat: f64) -> f64 {
        let h = self.len_hat / NODES as f64;
        let idx = ((shat / h) as usize).min(NODES);
        let base = idx as f64 * h;
        let tail = util::gauss_legendre_32(base, shat, |u| self.theta_at(u).cos());
        self.y_nodes[idx] - tail
    }

    fn tsin_at(&self, shat: f64) -> f64 {
        let h = self.len_hat / NODES as f64;
        let idx = ((shat / h) as usize).min(NODES);
        let base = idx as f64 * h;
        let tail = util::gauss_legendre_32(base, shat, |u| self.theta_at(u).sin());
        self.tsin_nodes[idx] + tail
    }

    fn y_end(&self) -> f64 {
        *self.y_nodes.last().unwrap()
    }

    fn ln_y_end(&self) -> f64 {
        self.ln_y_end_exact.unwrap_or_else(|| self.y_end().ln())
    }
}

/// Position on a profile: segment index plus the fraction of the segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePos {
    pub segment: usize,
    pub u: f64,
}

/// The bending datum θ(s) with its radius and height bookkeeping.
#[derive(Debug, Clone, Serialize)]
pub struct AngleProfile {
    pub segments: Vec<Segment>,
    pub r_bar: f64,
    /// Number of inductive bumps.
    pub m_bends: usize,
    /// True once θ has reached π/2.
    pub complete: bool,
    pub ln_r_final: f64,
}

impl AngleProfile {
    pub fn theta(&self, pos: SamplePos) -> f64 {
        let seg = &self.segments[pos.segment];
        seg.theta_at(pos.u.clamp(0.0, 1.0) * seg.len_hat)
    }

    /// The dimensionless slope group θ′(s)·r(s).
    pub fn theta_prime_r(&self, pos: SamplePos) -> f64 {
        let seg = &self.segments[pos.segment];
        let shat = pos.u.clamp(0.0, 1.0) * seg.len_hat;
        seg.dtheta_dshat(shat) * seg.y_at(shat)
    }

    /// Physical θ′(s) = (dθ/dŝ)/r_start; may overflow for radii below the
    /// floating-point range (use [`theta_prime_r`] there).
    pub fn theta_prime(&self, pos: SamplePos) -> f64 {
        let seg = &self.segments[pos.segment];
        let shat = pos.u.clamp(0.0, 1.0) * seg.len_hat;
        seg.dtheta_dshat(shat) / seg.ln_r_start.exp()
    }

    pub fn ln_r(&self, pos: SamplePos) -> f64 {
        let seg = &self.segments[pos.segment];
        let shat = pos.u.clamp(0.0, 1.0) * seg.len_hat;
        seg.ln_r_start + seg.y_at(shat).ln()
    }

    pub fn r(&self, pos: SamplePos) -> f64 {
        self.ln_r(pos).exp()
    }

    pub fn s_global(&self, pos: SamplePos) -> f64 {
        let seg = &self.segments[pos.segment];
        seg.s_start + pos.u.clamp(0.0, 1.0) * seg.len_hat * seg.ln_r_start.exp()
    }

    pub fn t_global(&self, pos: SamplePos) -> f64 {
        let seg = &self.segments[pos.segment];
        let shat = pos.u.clamp(0.0, 1.0) * seg.len_hat;
        seg.t_start + seg.ln_r_start.exp() * seg.tsin_at(shat)
    }

    /// θ at a global arclength (valid while segment starts are resolvable
    /// in double precision; deep necks should address by [`SamplePos`]).
    pub fn theta_at_s(&self, s: f64) -> f64 {
        let pos = self.locate(s);
        self.theta(pos)
    }

    pub fn r_at_s(&self, s: f64) -> f64 {
        self.r(self.locate(s))
    }

    fn locate(&self, s: f64) -> SamplePos {
        let idx = self
            .segments
            .partition_point(|seg| seg.s_start <= s)
            .saturating_sub(1);
        let seg = &self.segments[idx];
        let len = seg.len_hat * seg.ln_r_start.exp();
        let u = if len > 0.0 {
            ((s - seg.s_start) / len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        SamplePos { segment: idx, u }
    }

    pub fn breakpoints(&self) -> Vec<Breakpoint> {
        self.segments
            .iter()
            .map(|seg| Breakpoint {
                s: seg.s_start,
                theta: seg.theta_start,
                ln_r: seg.ln_r_start,
            })
            .collect()
    }

    fn push_segment(&mut self, mut seg: Segment) {
        seg.build_tables();
        self.ln_r_final = seg.ln_r_start + seg.ln_y_end();
        self.segments.push(seg);
    }

    fn end_state(&self) -> (f64, f64, f64, f64) {
        let seg = self.segments.last().expect("profile has segments");
        let r_start = seg.ln_r_start.exp();
        (
            seg.s_start + seg.len_hat * r_start,
            seg.t_start + r_start * seg.tsin_nodes.last().unwrap(),
            self.ln_r_final,
            seg.theta_end,
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Breakpoint {
    pub s: f64,
    pub theta: f64,
    pub ln_r: f64,
}

/// Builds the initial profile: flat angle over the untouched collar, a
/// smooth ramp up to θ₀ over a quarter start radius, and a plateau ending
/// at s₀ = r̄ − r_s/2 where the radius is still above r_s/2.
pub fn initial_bend(k: &BendingConstants) -> Result<AngleProfile> {
    k.validate()?;
    let mut p = AngleProfile {
        segments: Vec::new(),
        r_bar: k.r_bar,
        m_bends: 0,
        complete: false,
        ln_r_final: k.r_bar.ln(),
    };
    // θ ≡ 0 down to radius r_s
    p.push_segment(Segment {
        s_start: 0.0,
        t_start: 0.0,
        ln_r_start: k.r_bar.ln(),
        theta_start: 0.0,
        theta_end: 0.0,
        len_hat: (k.r_bar - k.r_s) / k.r_bar,
        shape: SegShape::Level,
        y_nodes: Vec::new(),
        tsin_nodes: Vec::new(),
        ln_y_end_exact: None,
    });
    // ramp 0 → θ₀ over r_s/4 (slope ≤ 1.875·θ₀/(r_s/4) < 1 since θ₀ < r_s/8)
    let (s, t, ln_r, _) = p.end_state();
    p.push_segment(Segment {
        s_start: s,
        t_start: t,
        ln_r_start: ln_r,
        theta_start: 0.0,
        theta_end: k.theta0,
        len_hat: 0.25 * k.r_s / ln_r.exp(),
        shape: SegShape::Ramp { dtheta: k.theta0 },
        y_nodes: Vec::new(),
        tsin_nodes: Vec::new(),
        ln_y_end_exact: None,
    });
    // plateau at θ₀ up to s₀
    let (s, t, ln_r, th) = p.end_state();
    p.push_segment(Segment {
        s_start: s,
        t_start: t,
        ln_r_start: ln_r,
        theta_start: th,
        theta_end: th,
        len_hat: (k.s0 - s) / ln_r.exp(),
        shape: SegShape::Level,
        y_nodes: Vec::new(),
        tsin_nodes: Vec::new(),
        ln_y_end_exact: None,
    });
    let (_, _, ln_r_end, _) = p.end_state();
    debug_assert!(ln_r_end.exp() > 0.5 * k.r_s * 0.999);
    Ok(p)
}

/// Target radius for the completed profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RTarget {
    /// Half of the largest reachable radius.
    Auto,
    Abs(f64),
    Ln(f64),
}

fn append_bump(
    p: &mut AngleProfile,
    rho: f64,
    c2: f64,
    plateau_factor: f64,
    enforce_slope: bool,
) -> Result<bool> {
    let (s, t, ln_r, theta_l) = p.end_state();
    let base_plateau = rho / (4.0 * c2) * theta_l.sin() * plateau_factor;
    let full_gain = base_plateau * bump_shape_integral(0.5);
    let remaining = std::f64::consts::FRAC_PI_2 - theta_l;
    let (plateau_hat, last) = if full_gain >= remaining {
        (base_plateau * remaining / full_gain, true)
    } else {
        (base_plateau, false)
    };
    let mut seg = Segment {
        s_start: s,
        t_start: t,
        ln_r_start: ln_r,
        theta_start: theta_l,
        theta_end: theta_l,
        len_hat: 0.5,
        shape: SegShape::Bump { plateau_hat },
        y_nodes: Vec::new(),
        tsin_nodes: Vec::new(),
        ln_y_end_exact: None,
    };
    seg.build_tables();
    if enforce_slope {
        // slope constraint θ′ ≤ (ρ/2C₂)·sinθ/r at every node (the bump
        // plateau is half that bound at the segment start, so this holds
        // with a factor-two margin)
        let h = seg.len_hat / NODES as f64;
        for i in 0..=NODES {
            let shat = i as f64 * h;
            let lhs = seg.dtheta_dshat(shat) * seg.y_nodes[i];
            let rhs = rho / (2.0 * c2) * seg.theta_at(shat).sin();
            if lhs > rhs * (1.0 + 1e-9) {
                return Err(CurvError::InvariantViolation {
                    check: "bend slope bound",
                    residual: lhs,
                    tol: rhs,
                });
            }
        }
        // radius halves at most over the bump
        if seg.y_end() < 0.5 - 1e-12 {
            return Err(CurvError::InvariantViolation {
                check: "radius halving bound",
                residual: seg.y_end(),
                tol: 0.5,
            });
        }
    }
    p.ln_r_final = seg.ln_r_start + seg.ln_y_end();
    p.segments.push(seg);
    p.m_bends += 1;
    Ok(last)
}

fn run_bumps(
    p: &mut AngleProfile,
    k: &BendingConstants,
    plateau_factor: f64,
    enforce_slope: bool,
) -> Result<()> {
    let cap = 4 * k.bend_count_bound() + 16;
    loop {
        let last = append_bump(p, k.rho, k.c2, plateau_factor, enforce_slope)?;
        if last {
            break;
        }
        if p.m_bends > cap {
            return Err(CurvError::invalid(
                "bend count exceeded the theoretical bound; constants inconsistent",
            ));
        }
    }
    p.complete = true;
    Ok(())
}

fn extend_internal(
    start: &AngleProfile,
    k: &BendingConstants,
    r_target: RTarget,
    plateau_factor: f64,
    enforce_slope: bool,
) -> Result<AngleProfile> {
    let (_, _, _, theta_end) = start.end_state();
    if theta_end >= std::f64::consts::FRAC_PI_2 {
        return Err(CurvError::invalid("profile already reaches the vertical angle"));
    }

    // probe pass: no straight segment, record the reachable radius and the
    // state just before the final bump
    let mut probe = start.clone();
    run_bumps(&mut probe, k, plateau_factor, enforce_slope)?;
    let ln_r_reachable = probe.ln_r_final;
    let last_seg = probe.segments.last().unwrap();
    let ln_y_last = last_seg.y_end().ln();
    let theta_before_last = last_seg.theta_start;
    let m_probe = probe.m_bends;

    let ln_rt = match r_target {
        RTarget::Auto => ln_r_reachable - std::f64::consts::LN_2,
        RTarget::Abs(x) => {
            if !(x > 0.0) {
                return Err(CurvError::invalid("target radius must be positive"));
            }
            x.ln()
        }
        RTarget::Ln(v) => v,
    };
    if !(ln_rt < ln_r_reachable) {
        return Err(CurvError::invalid(format!(
            "target radius ln {ln_rt:.6} is not below the reachable ln {ln_r_reachable:.6}"
        )));
    }

    // rebuild, inserting a straight segment before the final bump so the
    // profile lands exactly on the target radius
    let mut out = start.clone();
    for _ in 0..(m_probe - 1) {
        let last = append_bump(&mut out, k.rho, k.c2, plateau_factor, enforce_slope)?;
        debug_assert!(!last);
    }
    let (s, t, ln_r_m1, theta_m1) = out.end_state();
    debug_assert!((theta_m1 - theta_before_last).abs() < 1e-12);
    let ln_r_sb = ln_rt - ln_y_last;
    let shrink = (ln_r_sb - ln_r_m1).exp();
    if !(shrink > 0.0 && shrink < 1.0 + 1e-12) {
        return Err(CurvError::invalid(format!(
            "straight-segment shrink factor {shrink} out of range"
        )));
    }
    let len_hat = ((1.0 - shrink.min(1.0)) / theta_m1.cos()).max(0.0);
    out.push_segment(Segment {
        s_start: s,
        t_start: t,
        ln_r_start: ln_r_m1,
        theta_start: theta_m1,
        theta_end: theta_m1,
        len_hat,
        shape: SegShape::Level,
        y_nodes: Vec::new(),
        tsin_nodes: Vec::new(),
        ln_y_end_exact: Some(ln_r_sb - ln_r_m1),
    });
    let last = append_bump(&mut out, k.rho, k.c2, plateau_factor, enforce_slope)?;
    debug_assert!(last);
    out.complete = true;

    // cylindrical tail for sampling the completed end
    let (s, t, ln_r, th) = out.end_state();
    debug_assert!((th - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    out.push_segment(Segment {
        s_start: s,
        t_start: t,
        ln_r_start: ln_r,
        theta_start: std::f64::consts::FRAC_PI_2,
        theta_end: std::f64::consts::FRAC_PI_2,
        len_hat: 0.5,
        shape: SegShape::Level,
        y_nodes: Vec::new(),
        tsin_nodes: Vec::new(),
        ln_y_end_exact: None,
    });
    Ok(out)
}

/// Extends an initial profile by inductive bumps until the angle reaches
/// π/2, inserting a straight segment before the last bump so the final
/// radius lands on the requested target. The bump count obeys
/// m ≤ ⌈(π/2 − θ₀)·16C₂/(ρ·sinθ₀)⌉ and each bump advances the angle by at
/// least (ρ/16C₂)·sinθ₀ while the radius at most halves.
pub fn inductive_bend(
    start: &AngleProfile,
    k: &BendingConstants,
    r_target: RTarget,
) -> Result<AngleProfile> {
    extend_internal(start, k, r_target, 1.0, true)
}

/// Diagnostic variant with the bump plateaus scaled by `factor` and the
/// slope assertion disabled; used as a negative control for the membership
/// distance checks.
pub fn inductive_bend_with_plateau_factor(
    start: &AngleProfile,
    k: &BendingConstants,
    r_target: RTarget,
    factor: f64,
) -> Result<AngleProfile> {
    extend_internal(start, k, r_target, factor, false)
}

/// Second fundamental form of the bent hypersurface at angle θ with slope
/// θ′, in the frame (tube tangents, curve tangent last): the tangential
/// block is sinθ·sff_tube, the curve diagonal −θ′, the cross terms vanish.
pub fn sff_deformed(theta: f64, theta_prime: f64, sff_tube: &SymmetricForm) -> SymmetricForm {
    let n = sff_tube.n();
    let mut mat = sff_tube.mat() * theta.sin();
    mat[(n - 1, n - 1)] = -theta_prime;
    SymmetricForm::new(mat).expect("symmetric by construction")
}

/// r²-rescaled curvature data of the bent hypersurface at a profile
/// position. All operators carry an implicit factor r(s)⁻²; margins of the
/// rescaled operators have the same sign as the physical ones.
#[derive(Debug, Clone)]
pub struct ScaledAssembly {
    /// r²·(operator of the bent metric).
    pub rd_r2: CurvatureOperator,
    /// r²·(ambient pullback).
    pub rm_r2: CurvatureOperator,
    /// r²·(tube cross product pullback).
    pub rt_r2: CurvatureOperator,
    /// r²·(deviation from the two-term cos²/sin² combination).
    pub e_r2: CurvatureOperator,
    pub theta: f64,
    /// θ′(s)·r(s).
    pub theta_prime_r: f64,
    pub ln_r: f64,
}

/// Assembles the bent-hypersurface curvature at a profile position through
/// the Gauss equation with [`sff_deformed`], everything rescaled by r².
pub fn assemble_scaled(
    m: &RotSymModel,
    p: &AngleProfile,
    pos: SamplePos,
) -> Result<ScaledAssembly> {
    let n = m.n;
    let theta = p.theta(pos);
    let tpr = p.theta_prime_r(pos);
    let ln_r = p.ln_r(pos);
    let r = ln_r.exp(); // may underflow to zero deep in the neck
    let r2 = (2.0 * ln_r).exp();
    if r >= m.r_max {
        return Err(CurvError::domain(format!(
            "profile radius {r} left the model domain"
        )));
    }

    // ambient curvature at this radius (bounded entries), full and with the
    // radial slots damped by cosθ (the curve tangent has radial component
    // cosθ); both times r²
    let amb = if r > 0.0 {
        m.warped_curvature(r)?
    } else {
        // limiting tensor: space-form values are radius independent
        m.warped_curvature(0.5 * m.r_max)?
    };
    let cos_t = theta.cos();
    let damped = Riemann4::from_fn_unchecked(n, |i, j, k, l| {
        let mut v = amb.get(i, j, k, l) * r2;
        for idx in [i, j, k, l] {
            if idx == n - 1 {
                v *= cos_t;
            }
        }
        v
    });
    let rm_r2 = from_riemann_unchecked(&amb).scale(r2);

    // r-rescaled tube second fundamental form (diagonal, stable at r → 0)
    let nv = m.sphere_dim();
    let mut rsff_diag = vec![0.0; n];
    for (i, slot) in rsff_diag.iter_mut().enumerate().take(n - 1) {
        *slot = if i < nv {
            m.r_sff_sphere(r)
        } else {
            m.r_sff_sub(r)
        };
    }
    let rsff = SymmetricForm::from_diagonal(&rsff_diag);

    // r²·(tube cross product): restricted ambient + wedge square
    let restricted_r2 = Riemann4::from_fn_unchecked(n, |i, j, k, l| {
        if i == n - 1 || j == n - 1 || k == n - 1 || l == n - 1 {
            0.0
        } else {
            amb.get(i, j, k, l) * r2
        }
    });
    let rt_r2 = from_riemann_unchecked(&restricted_r2).add(&kulkarni_wedge(&rsff, &rsff)?)?;

    // r²·(bent metric): Gauss equation with the deformed second fundamental
    // form, also r-rescaled (curve slot −θ′r)
    let sffd_r = sff_deformed(theta, tpr, &rsff);
    let rd_r2 = from_riemann_unchecked(&damped).add(&kulkarni_wedge(&sffd_r, &sffd_r)?)?;

    let combo = rm_r2
        .scale(cos_t * cos_t)
        .add(&rt_r2.scale(theta.sin() * theta.sin()))?;
    let e_r2 = rd_r2.sub(&combo)?;

    Ok(ScaledAssembly {
        rd_r2,
        rm_r2,
        rt_r2,
        e_r2,
        theta,
        theta_prime_r: tpr,
        ln_r,
    })
}

/// Materialized (unscaled) curvature of the bent hypersurface and its
/// deviation term; only valid while 1/r² is representable.
pub fn assemble_r_d(
    m: &RotSymModel,
    p: &AngleProfile,
    pos: SamplePos,
) -> Result<(CurvatureOperator, CurvatureOperator)> {
    let sa = assemble_scaled(m, p, pos)?;
    if sa.ln_r < -300.0 {
        return Err(CurvError::domain(
            "radius below floating-point range; use the rescaled assembly",
        ));
    }
    let inv_r2 = (-2.0 * sa.ln_r).exp();
    Ok((sa.rd_r2.scale(inv_r2), sa.e_r2.scale(inv_r2)))
}

#[derive(Debug, Clone, Serialize)]
pub struct MarginRow {
    pub segment: usize,
    pub u: f64,
    pub s: f64,
    pub ln_r: f64,
    pub theta: f64,
    /// Margin of the r²-rescaled operator (same sign as the physical one).
    pub margin_scaled: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistanceRow {
    pub segment: usize,
    pub u: f64,
    /// ‖r²·(bent − ambient − sin²θ·model)‖.
    pub lhs: f64,
    /// ρ·sin²θ.
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorBoundRow {
    pub segment: usize,
    pub u: f64,
    pub e_norm_scaled: f64,
    pub bound_scaled: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EndDescriptor {
    pub n: usize,
    pub k: usize,
    pub ln_r_final: f64,
    pub class: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct BendingReport {
    pub model: String,
    pub condition: String,
    pub n: usize,
    pub k: usize,
    pub constants: BendingConstants,
    pub m_bends: usize,
    pub bend_bound: usize,
    pub theta_final: f64,
    pub ln_r_final: f64,
    pub r_final: f64,
    pub breakpoints: Vec<Breakpoint>,
    pub rows: Vec<MarginRow>,
    pub step1_rows: Vec<MarginRow>,
    pub distance_rows: Vec<DistanceRow>,
    pub error_rows: Vec<ErrorBoundRow>,
    pub min_margin_scaled: f64,
    pub oracle_deviation: f64,
    pub oracle_points: usize,
    pub end: EndDescriptor,
    pub verdict: bool,
}

fn end_class(m: &RotSymModel) -> String {
    if m.k == 0 {
        format!("round-sphere-cylinder(n={})", m.n)
    } else {
        format!("sphere-bundle-cylinder(n={},k={})", m.n, m.k)
    }
}

/// Chart of the bent hypersurface near one profile position: coordinates
/// (arclength offset, stereographic sphere, stereographic submanifold) with
/// metric ds² + f(r(s))²·g_sphere + h(r(s))²·g_sub.
fn graph_chart(m: &RotSymModel, p: &AngleProfile, pos: SamplePos) -> ChartMetric {
    let model = *m;
    let n = m.n;
    let nv = m.sphere_dim();
    let k = m.k;
    let seg = p.segments[pos.segment].clone();
    let shat0 = pos.u * seg.len_hat;
    let r0 = p.r(pos);
    ChartMetric::new(n, move |x: &[f64]| {
        let ds = x[0];
        let shat = shat0 + ds / seg.ln_r_start.exp();
        let r = r0
            - seg.ln_r_start.exp()
                * util::gauss_legendre_32(shat0, shat, |v| seg.theta_at(v).cos());
        let u = &x[1..1 + nv];
        let w = &x[1 + nv..1 + nv + k];
        let f2 = model.f(r).powi(2) * stereographic_factor(u);
        let h2 = model.h(r).powi(2) * stereographic_factor(w);
        let mut g = nalgebra::DMatrix::zeros(n, n);
        g[(0, 0)] = 1.0;
        for i in 0..nv {
            g[(1 + i, 1 + i)] = f2;
        }
        for i in 0..k {
            g[(1 + nv + i, 1 + nv + i)] = h2;
        }
        g
    })
}

/// Finite-difference cross-check of the assembled curvature at one profile
/// position; returns the worst componentwise deviation.
pub fn oracle_deviation_at(m: &RotSymModel, p: &AngleProfile, pos: SamplePos) -> Result<f64> {
    let n = m.n;
    let (rd, _) = assemble_r_d(m, p, pos)?;
    let assembled = rd.to_riemann();
    let r0 = p.r(pos);
    // scale-aware step: truncation grows with the curvature scale 1/r²
    let h = (r0 * 1.5e-3).clamp(2e-5, 1e-4);
    let chart = graph_chart(m, p, pos).with_richardson(true).with_step(h);
    let x = vec![0.0; n];
    let fd = chart_curvature_fd(&chart, &x)?;
    // chart index 0 is the forward curve tangent; the assembled frame uses
    // the backward tangent in the last slot, so odd occurrences flip sign
    let map = |i: usize| if i == 0 { n - 1 } else { i - 1 };
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut sign = 1.0;
                    for idx in [i, j, k, l] {
                        if idx == 0 {
                            sign = -sign;
                        }
                    }
                    let a = fd.get(i, j, k, l) * sign;
                    let b = assembled.get(map(i), map(j), map(k), map(l));
                    worst = worst.max((a - b).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// Samples margins, membership distances and deviation bounds along a
/// completed profile and issues the verdict.
///
/// Margin rows cover the bending-active region from the θ₀-plateau onward;
/// the two initial segments (where the metric is still the ambient one up
/// to the ramp) are reported separately, because an ambient sitting exactly
/// on the boundary of the condition provably dips outside during any smooth
/// angle onset.
pub fn verify_bend(
    m: &RotSymModel,
    c: &Condition,
    p: &AngleProfile,
    k: &BendingConstants,
    samples_per_segment: usize,
) -> Result<BendingReport> {
    if !p.complete {
        return Err(CurvError::invalid("profile does not reach the vertical angle"));
    }
    let spp = samples_per_segment.max(1);
    let mut rows = Vec::new();
    let mut step1_rows = Vec::new();
    let mut distance_rows = Vec::new();
    let mut error_rows = Vec::new();
    let mut min_margin = f64::INFINITY;
    let s_proj = model_operator(m.sphere_dim(), 1.0, m.n)?;

    for (si, _seg) in p.segments.iter().enumerate() {
        for i in 0..spp {
            let u = (i as f64 + 0.5) / spp as f64;
            let pos = SamplePos { segment: si, u };
            let sa = assemble_scaled(m, p, pos)?;
            let margin = c.margin(&sa.rd_r2)?;
            let row = MarginRow {
                segment: si,
                u,
                s: p.s_global(pos),
                ln_r: sa.ln_r,
                theta: sa.theta,
                margin_scaled: margin,
                pass: margin > 0.0,
            };
            if si < 2 {
                step1_rows.push(row);
            } else {
                min_margin = min_margin.min(margin);
                rows.push(row);
            }

            // deviation bound ‖E‖ ≤ cosθ(1−cosθ)C₁ + (θ′sinθ/r)C₂, rescaled
            let r2 = (2.0 * sa.ln_r).exp();
            let bound = r2 * sa.theta.cos() * (1.0 - sa.theta.cos()) * k.c1
                + sa.theta_prime_r * sa.theta.sin() * k.c2;
            let e_norm = sa.e_r2.operator_norm();
            error_rows.push(ErrorBoundRow {
                segment: si,
                u,
                e_norm_scaled: e_norm,
                bound_scaled: bound,
                pass: e_norm <= bound + 1e-12 * bound.max(1.0),
            });

            // membership distance towards the shifted model cone, active
            // wherever the bend has begun
            if si >= 2 && sa.theta > 0.0 {
                let sin2 = sa.theta.sin() * sa.theta.sin();
                let lhs = sa
                    .rd_r2
                    .sub(&sa.rm_r2)?
                    .sub(&s_proj.scale(sin2))?
                    .operator_norm();
                let rhs = k.rho * sin2;
                distance_rows.push(DistanceRow {
                    segment: si,
                    u,
                    lhs,
                    rhs,
                    pass: lhs < rhs,
                });
            }
        }
    }

    // finite-difference oracle over early positions with representable radii
    let mut oracle_dev = 0.0f64;
    let mut oracle_points = 0usize;
    for si in 0..p.segments.len().min(6) {
        let pos = SamplePos {
            segment: si,
            u: 0.45,
        };
        // below this radius the curvature scale 1/r² pushes the finite
        // differences into their noise floor
        if p.ln_r(pos) < (0.03f64.max(k.r_s / 8.0)).ln() {
            break;
        }
        oracle_dev = oracle_dev.max(oracle_deviation_at(m, p, pos)?);
        oracle_points += 1;
    }

    let theta_final = p.theta(SamplePos {
        segment: p.segments.len() - 1,
        u: 1.0,
    });
    let bend_bound = k.bend_count_bound();
    let verdict = min_margin > 0.0
        && distance_rows.iter().all(|r| r.pass)
        && error_rows.iter().all(|r| r.pass)
        && (oracle_points == 0 || oracle_dev <= 1e-5)
        && (theta_final - std::f64::consts::FRAC_PI_2).abs() < 1e-12
        && p.m_bends <= bend_bound;

    Ok(BendingReport {
        model: m.label(),
        condition: c.label(),
        n: m.n,
        k: m.k,
        constants: k.clone(),
        m_bends: p.m_bends,
        bend_bound,
        theta_final,
        ln_r_final: p.ln_r_final,
        r_final: p.ln_r_final.exp(),
        breakpoints: p.breakpoints(),
        rows,
        step1_rows,
        distance_rows,
        error_rows,
        min_margin_scaled: min_margin,
        oracle_deviation: oracle_dev,
        oracle_points,
        end: EndDescriptor {
            n: m.n,
            k: m.k,
            ln_r_final: p.ln_r_final,
            class: end_class(m),
        },
        verdict,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SmoothEndRow {
    pub t: f64,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SmoothEndReport {
    pub r: f64,
    pub r_star_star: f64,
    pub rows: Vec<SmoothEndRow>,
    pub endpoint_deviation: f64,
    pub verdict: bool,
}

fn blend(t: f64) -> f64 {
    util::smoothstep((t - 0.25) * 2.0)
}

/// Sphere-radius profile of the blended family: model warp at t = 0, cone
/// warp (connection metric) at t = 1.
fn family_f(m: &RotSymModel, t: f64, r: f64) -> f64 {
    let phi = blend(t);
    (1.0 - phi) * m.f(r) + phi * r
}

fn family_h(m: &RotSymModel, t: f64, r: f64) -> f64 {
    let phi = blend(t);
    (1.0 - phi) * m.h(r) + phi * m.h(0.0)
}

/// Blends the collar metric into the connection metric through a
/// one-parameter family and checks the curvature condition on the distance
/// tube of the deformed product, via the finite-difference oracle.
pub fn smooth_end(m: &RotSymModel, c: &Condition, r: f64) -> Result<SmoothEndReport> {
    let n = m.n;
    if m.sphere_dim() < 2 {
        return Err(CurvError::invalid(
            "smoothing needs at least two normal sphere directions",
        ));
    }
    // admissibility radius from the blended family: the tube cross-section
    // operator must stay within the inner cone of its own model
    let s_model = model_operator(m.sphere_dim(), 1.0, n)?;
    let rho = match c.kind {
        ConditionKind::SpectralAlmostPos(_) | ConditionKind::SecAlmostNonneg(_) => {
            cone_ball_radius(c, &s_model)?
        }
        _ => inner_cone_rho_convex(c, &s_model)?,
    };
    let t_grid = util::lin_grid(0.02, 0.98, 13);
    let probe_grid = util::log_grid(1e-3 * m.r_max, 0.5 * m.r_max, 12);
    let mut l_fam = 0.0f64;
    for &t in &t_grid {
        for &rp in &probe_grid {
            let ff = family_f(m, t, rp);
            let op = family_tube_operator(m, t, rp)?;
            let model = model_operator(m.sphere_dim(), ff, n)?;
            l_fam = l_fam.max(ff * op.sub(&model)?.operator_norm());
        }
    }
    let r_star_star = 0.9
        * if l_fam > 0.0 {
            (rho / l_fam).min(0.5 * m.r_max)
        } else {
            0.5 * m.r_max
        };
    if !(r > 0.0 && r < r_star_star) {
        return Err(CurvError::domain(format!(
            "smoothing radius {r} (admissible range (0, {r_star_star}))"
        )));
    }

    let mut rows = Vec::new();
    let mut verdict = true;
    for &t in &t_grid {
        let op = family_tube_operator(m, t, r)?;
        let margin = c.margin(&op)?;
        if !(margin > 0.0) {
            verdict = false;
        }
        rows.push(SmoothEndRow {
            t,
            margin,
            pass: margin > 0.0,
        });
    }

    // family endpoints reproduce the collar tube metric and the connection
    // metric exactly
    let mut endpoint_dev = 0.0f64;
    for &rp in &[0.5 * r, r] {
        endpoint_dev = endpoint_dev.max((family_f(m, 0.0, rp) - m.f(rp)).abs());
        endpoint_dev = endpoint_dev.max((family_f(m, 1.0, rp) - rp).abs());
        endpoint_dev = endpoint_dev.max((family_h(m, 0.0, rp) - m.h(rp)).abs());
        endpoint_dev = endpoint_dev.max((family_h(m, 1.0, rp) - m.h(0.0)).abs());
    }
    verdict = verdict && endpoint_dev <= 1e-10;

    Ok(SmoothEndReport {
        r,
        r_star_star,
        rows,
        endpoint_deviation: endpoint_dev,
        verdict,
    })
}

/// Operator of the tube cross-section inside the blended product
/// (collar × [0,1], g(t) + dt²), computed with the finite-difference
/// oracle on the chart (t, stereographic sphere, stereographic sub).
fn family_tube_operator(m: &RotSymModel, t: f64, r: f64) -> Result<CurvatureOperator> {
    let n = m.n;
    let nv = m.sphere_dim();
    let k = m.k;
    let model = *m;
    let chart = ChartMetric::new(n, move |x: &[f64]| {
        let tt = x[0];
        let u = &x[1..1 + nv];
        let w = &x[1 + nv..1 + nv + k];
        let f2 = family_f(&model, tt, r).powi(2) * stereographic_factor(u);
        let h2 = family_h(&model, tt, r).powi(2) * stereographic_factor(w);
        let mut g = nalgebra::DMatrix::zeros(n, n);
        g[(0, 0)] = 1.0;
        for i in 0..nv {
            g[(1 + i, 1 + i)] = f2;
        }
        for i in 0..k {
            g[(1 + nv + i, 1 + nv + i)] = h2;
        }
        g
    })
    .with_richardson(true);
    let mut x = vec![0.0; n];
    x[0] = t;
    x[1] = 0.1; // generic chart point away from the stereographic pole
    let fd = chart_curvature_fd(&chart, &x)?;
    // reorder to the adapted convention (sphere, sub, parameter-last) so the
    // curved block aligns with the model operator
    let map = |i: usize| if i == 0 { n - 1 } else { i - 1 };
    let adapted = Riemann4::from_fn_unchecked(n, |i, j, k, l| {
        let inv = |a: usize| if a == n - 1 { 0 } else { a + 1 };
        let _ = map;
        fd.get(inv(i), inv(j), inv(k), inv(l))
    });
    Ok(from_riemann_unchecked(&adapted))
}

#[derive(Debug, Clone, Serialize)]
pub struct JoinReport {
    pub verdict: bool,
    pub reasons: Vec<String>,
}

/// Compatibility of two cylindrical ends: same dimension and submanifold
/// class, and final radii equal to within 1e-10 (relative, compared on
/// logarithms).
pub fn join(a: &BendingReport, b: &BendingReport) -> JoinReport {
    let mut reasons = Vec::new();
    if !a.verdict {
        reasons.push("first report failed verification".into());
    }
    if !b.verdict {
        reasons.push("second report failed verification".into());
    }
    if a.end.n != b.end.n {
        reasons.push(format!("dimension mismatch: {} vs {}", a.end.n, b.end.n));
    }
    if a.end.class != b.end.class {
        reasons.push(format!(
            "cross-section class mismatch: {} vs {}",
            a.end.class, b.end.class
        ));
    }
    let dln = (a.end.ln_r_final - b.end.ln_r_final).abs();
    if dln > 1e-10 {
        reasons.push(format!(
            "final radius mismatch: ln r {:.12e} vs {:.12e}",
            a.end.ln_r_final, b.end.ln_r_final
        ));
    }
    JoinReport {
        verdict: reasons.is_empty(),
        reasons,
    }
}
