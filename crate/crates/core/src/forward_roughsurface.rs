//! Scattering from a sound-soft line with a compactly supported bump and a
//! reference ball floating above it.
//!
//! The propagation domain is `{x₂ > h(x₁)}` with `h ≥ 0` supported on a
//! finite interval.  All potentials use the Dirichlet half-plane Green
//! function `G(x,y) = Φ(x,y) − Φ(x,y′)`, `y′ = (y₁,−y₂)`, which vanishes
//! whenever either argument lies on the flat line.  Consequently the
//! combined-field density `u^s = ∫ (∂G/∂ν(y) − iη_c G) φ` needs support only
//! on the perturbed part of the surface (plus a safety margin) and on the
//! ball: the flat remainder of the line carries exactly zero density and the
//! boundary condition there is satisfied identically.
//!
//! The perturbed arc is parametrized over `[0, 2π]` through a monotone
//! grading whose speed has quartic zeros at both ends, so that open-arc
//! integrands extend to smooth periodic functions and the spectral
//! logarithmic rule of [`crate::nystrom`] applies to the direct (free-space)
//! part of the kernels.  The image part is smooth but develops a sharp peak
//! where the surface height falls toward the line; collocation rows whose
//! height is below a few node spacings integrate that peak with dyadically
//! refined Gauss panels against the trigonometric density interpolant
//! instead of the plain trapezoid product.  Incidence is restricted to
//! downward plane waves (the incident-plus-reflected pair of the unperturbed
//! half-plane), observation to upward directions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::Error;
use crate::farfield::{gamma2, Aperture, DirectionGrid, FarFieldMatrix};
use crate::forward_obstacle::BoundaryDensity;
use crate::geometry::{Point, ReferenceBall, Scene, SceneKind, SurfaceProfile};
use crate::nystrom::{log_weight_at, log_weight_ring, trig_cardinal_row};
use crate::specfun::{hankel1_01, EULER_GAMMA};
use crate::Result;

const I: Complex64 = Complex64::new(0.0, 1.0);
const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Combined-field coupling parameter `η_c`.
fn coupling(k: f64) -> f64 {
    k
}

/// Heights below this are treated as exactly flat: the Green function kills
/// every kernel there, so the collocation row degenerates to `φ/2 = 0`.
const FLAT_HEIGHT: f64 = 1e-8;

/// Direction of the specularly reflected wave: vertical flip.
pub fn reflect_direction(d: Point) -> Point {
    Point::new(d.x, -d.y)
}

/// Downward plane wave together with its reflection at the unperturbed
/// sound-soft line: `u^i = e^{ikx·d}`, `u^r = −e^{ikx·d′}`.  Their sum is the
/// incident field driving the perturbed problem; it vanishes identically on
/// the flat line.
#[derive(Debug, Clone)]
pub struct HalfPlaneIncidence {
    k: f64,
    d: Point,
}

impl HalfPlaneIncidence {
    pub fn new(k: f64, d: Point) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "wavenumber must be positive, got {k}"
            )));
        }
        let n = d.norm();
        if !n.is_finite() || (n - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "incident direction must be a unit vector, |d| = {n}"
            )));
        }
        if d.y >= -1e-12 {
            return Err(Error::InvalidParameter(format!(
                "incidence must travel downward toward the surface, d₂ = {}",
                d.y
            )));
        }
        Ok(HalfPlaneIncidence { k, d })
    }

    pub fn direction(&self) -> Point {
        self.d
    }

    /// `u^i(x) = e^{ikx·d}`.
    pub fn incident(&self, x: Point) -> Complex64 {
        (I * self.k * x.dot(&self.d)).exp()
    }

    /// `u^r(x) = −e^{ikx·d′}` with the flipped direction `d′`.
    pub fn reflected(&self, x: Point) -> Complex64 {
        -(I * self.k * x.dot(&reflect_direction(self.d))).exp()
    }

    /// `u^i + u^r`; exactly zero on the line `x₂ = 0`.
    pub fn total(&self, x: Point) -> Complex64 {
        self.incident(x) + self.reflected(x)
    }
}

/// Dirichlet Green function of the lower-boundary half-plane:
/// `G(x,y) = Φ(x,y) − Φ(x,y′)` with the mirrored source `y′ = (y₁,−y₂)`.
pub fn half_plane_green(k: f64, x: Point, y: Point) -> Result<Complex64> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "wavenumber must be positive, got {k}"
        )));
    }
    let r = (x - y).norm();
    let rm = (x - Point::new(y.x, -y.y)).norm();
    if r < 1e-14 || rm < 1e-14 {
        return Err(Error::Singularity(
            "half-plane Green function evaluated at a coincident or mirrored point".into(),
        ));
    }
    let (h0, _) = hankel1_01(k * r);
    let (h0m, _) = hankel1_01(k * rm);
    Ok(I / 4.0 * (h0 - h0m))
}

// ---------------------------------------------------------------------------
// kernels
// ---------------------------------------------------------------------------

/// Free-space combined kernel `(∂/∂ν(y) − iη_c)Φ(x,y)` without the Jacobian.
fn direct_kernel(k: f64, etac: f64, x: Point, y: Point, nu: Point) -> Complex64 {
    let delta = x - y;
    let r = delta.norm();
    let (h0, h1) = hankel1_01(k * r);
    I * k / 4.0 * h1 * nu.dot(&delta) / r - I * etac * (I / 4.0 * h0)
}

/// Mirror correction `−(∂/∂ν(y) − iη_c)Φ(x,y′)`: a double layer at the
/// mirrored source `y′` with flipped normal, plus the matching single layer.
/// Returns zero when `x` coincides with `y′` to machine precision (then the
/// whole combined kernel of `G` cancels anyway).
fn image_kernel(k: f64, etac: f64, x: Point, y: Point, nu: Point) -> Complex64 {
    let ym = Point::new(y.x, -y.y);
    let num = Point::new(nu.x, -nu.y);
    let delta = x - ym;
    let r = delta.norm();
    if r < 1e-14 {
        return Complex64::new(0.0, 0.0);
    }
    let (h0, h1) = hankel1_01(k * r);
    -(I * k / 4.0 * h1 * num.dot(&delta) / r - I * etac * (I / 4.0 * h0))
}

/// Far-field kernel of `(∂/∂ν(y) − iη_c)G(x,y)` (without `γ₂`): the plane
/// phase of the source and of its mirror, each with its own normal factor.
fn farfield_kernel(k: f64, etac: f64, xhat: Point, y: Point, nu: Point) -> Complex64 {
    let ym = Point::new(y.x, -y.y);
    let num = Point::new(nu.x, -nu.y);
    let e_dir = (-I * k * xhat.dot(&y)).exp();
    let e_img = (-I * k * xhat.dot(&ym)).exp();
    (-I * k * xhat.dot(&nu) - I * etac) * e_dir - (-I * k * xhat.dot(&num) - I * etac) * e_img
}

/// Split of a weakly singular kernel against `ln(4 sin²((t−τ)/2))`.
struct Split {
    log_part: Complex64,
    remainder: Complex64,
}

/// Split of the combined direct kernel (double − iη_c single, Jacobian
/// included) between collocation parameter `t` at point `x` and a node at
/// parameter `tj`, position `pos`, speed `speed`, normal `nu` on the same
/// curve.
fn direct_split(
    k: f64,
    etac: f64,
    x: Point,
    t: f64,
    pos: Point,
    nu: Point,
    speed: f64,
    tj: f64,
) -> Split {
    let delta = x - pos;
    let r = delta.norm();
    let (h0, h1) = hankel1_01(k * r);
    let nd = nu.dot(&delta) * speed / r;
    let pi4 = 4.0 * std::f64::consts::PI;
    // Re H_m^{(1)} = J_m, so the Hankel pair already carries both Bessel
    // factors of the logarithmic parts.
    let dl_log = Complex64::new(-k / pi4 * h1.re * nd, 0.0);
    let sl_log = Complex64::new(-h0.re / pi4 * speed, 0.0);
    let dl_full = I * k / 4.0 * h1 * nd;
    let sl_full = I / 4.0 * h0 * speed;
    let lg = (4.0 * ((t - tj) / 2.0).sin().powi(2)).ln();
    let log_part = dl_log - I * etac * sl_log;
    let full = dl_full - I * etac * sl_full;
    Split {
        log_part,
        remainder: full - log_part * lg,
    }
}

/// Diagonal limit of [`direct_split`]: the single-layer constant plus the
/// curvature term of the double layer (`curv`), both with local speed.
fn direct_diag(k: f64, etac: f64, speed: f64, curv: f64) -> Split {
    let pi = std::f64::consts::PI;
    let sl_log = Complex64::new(-speed / (4.0 * pi), 0.0);
    let sl_rem = speed * (I / 4.0 - (EULER_GAMMA + (k * speed / 2.0).ln()) / (2.0 * pi));
    Split {
        log_part: -I * etac * sl_log,
        remainder: Complex64::new(curv, 0.0) - I * etac * sl_rem,
    }
}

// ---------------------------------------------------------------------------
// grids
// ---------------------------------------------------------------------------

/// Endpoint grading over `[0, 2π]`: `q` rises monotonically from 0 to 1 with
/// `q′ ∝ sin⁴(t/2)`, so the parametrization speed has quartic zeros at both
/// ends and open-arc integrands extend to `C³` periodic functions.
fn grade(t: f64) -> (f64, f64, f64) {
    let pi = std::f64::consts::PI;
    let c = t.cos();
    let q = (6.0 * t - 8.0 * t.sin() + (2.0 * t).sin()) / (12.0 * pi);
    let dq = (1.0 - c) * (1.0 - c) / (3.0 * pi);
    let ddq = 2.0 * (1.0 - c) * t.sin() / (3.0 * pi);
    (q, dq, ddq)
}

/// Discretized perturbed arc: the support of the profile plus a flat margin
/// on both sides, graded toward the truncation ends, nodes at midpoint
/// offsets `t_j = (j+½)h`.
struct ArcGrid {
    n: usize,
    h: f64,
    s_lo: f64,
    s_len: f64,
    t: Vec<f64>,
    pos: Vec<Point>,
    /// `ds/dt` at the nodes (grading speed).
    sp: Vec<f64>,
    /// `|x′(t)|` at the nodes.
    speed: Vec<f64>,
    normal: Vec<Point>,
    /// Double-layer diagonal term `s′h″/(4π(1+h′²))`.
    curv: Vec<f64>,
    flat: Vec<bool>,
    profile: SurfaceProfile,
}

impl ArcGrid {
    fn build(profile: &SurfaceProfile, k: f64, n: usize, margin_wavelengths: f64) -> Result<Self> {
        if n < 32 || n % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "arc node count must be even and at least 32, got {n}"
            )));
        }
        if !(margin_wavelengths > 0.05) || !margin_wavelengths.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "flat margin must be at least 0.05 wavelengths, got {margin_wavelengths}"
            )));
        }
        let margin = margin_wavelengths * TWO_PI / k;
        let (lo, hi) = profile.support();
        let s_lo = lo - margin;
        let s_len = (hi - lo) + 2.0 * margin;
        let h = TWO_PI / n as f64;
        let mut g = ArcGrid {
            n,
            h,
            s_lo,
            s_len,
            t: Vec::with_capacity(n),
            pos: Vec::with_capacity(n),
            sp: Vec::with_capacity(n),
            speed: Vec::with_capacity(n),
            normal: Vec::with_capacity(n),
            curv: Vec::with_capacity(n),
            flat: Vec::with_capacity(n),
            profile: profile.clone(),
        };
        let pi4 = 4.0 * std::f64::consts::PI;
        for j in 0..n {
            let t = (j as f64 + 0.5) * h;
            let (q, dq, _) = grade(t);
            let s = s_lo + s_len * q;
            let sp = s_len * dq;
            let f = profile.height(s);
            if f < 0.0 {
                return Err(Error::InvalidGeometry(format!(
                    "surface height {f:.4e} below the line at s = {s:.4}; the image \
                     representation needs a nonnegative profile"
                )));
            }
            let f1 = profile.slope(s);
            let f2 = profile.second(s);
            let hyp = (1.0 + f1 * f1).sqrt();
            g.t.push(t);
            g.pos.push(Point::new(s, f));
            g.sp.push(sp);
            g.speed.push(sp * hyp);
            g.normal.push(Point::new(-f1, 1.0) / hyp);
            g.curv.push(sp * f2 / (pi4 * (1.0 + f1 * f1)));
            g.flat.push(f < FLAT_HEIGHT);
        }
        Ok(g)
    }

    /// Point, grading speed, curve speed and unit normal at an arbitrary
    /// parameter (for refined quadrature and off-node probes).
    fn at(&self, t: f64) -> (Point, f64, f64, Point) {
        let (q, dq, _) = grade(t);
        let s = self.s_lo + self.s_len * q;
        let sp = self.s_len * dq;
        let f = self.profile.height(s);
        let f1 = self.profile.slope(s);
        let hyp = (1.0 + f1 * f1).sqrt();
        (
            Point::new(s, f),
            sp,
            sp * hyp,
            Point::new(-f1, 1.0) / hyp,
        )
    }
}

/// Discretized reference ball (closed circle, nodes at `t_j = jh`).
struct BallGrid {
    n: usize,
    h: f64,
    center: Point,
    radius: f64,
    pos: Vec<Point>,
    normal: Vec<Point>,
}

impl BallGrid {
    fn build(ball: &ReferenceBall, n: usize) -> Result<Self> {
        if n < 32 || n % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "ball node count must be even and at least 32, got {n}"
            )));
        }
        let h = TWO_PI / n as f64;
        let mut pos = Vec::with_capacity(n);
        let mut normal = Vec::with_capacity(n);
        for j in 0..n {
            let t = j as f64 * h;
            let nu = Point::new(t.cos(), t.sin());
            pos.push(ball.center + ball.radius * nu);
            normal.push(nu);
        }
        Ok(BallGrid {
            n,
            h,
            center: ball.center,
            radius: ball.radius,
            pos,
            normal,
        })
    }
}

// ---------------------------------------------------------------------------
// image-part quadrature on the arc
// ---------------------------------------------------------------------------

/// 8-point Gauss–Legendre rule on `[−1, 1]`.
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_3),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_3),
];

/// Partition-of-unity window around the mirror peak: exactly 1 on the inner
/// half of its support, then a C⁴ polynomial descent to 0 (degree 9
/// smootherstep), so the complementary trapezoid integrand keeps four
/// continuous derivatives and the windowed part vanishes identically at the
/// panel boundary.
fn window(u: f64) -> f64 {
    let a = u.abs();
    if a <= 0.5 {
        1.0
    } else if a >= 1.0 {
        0.0
    } else {
        let y = 2.0 * (1.0 - a);
        let y2 = y * y;
        y2 * y2 * y * (126.0 + y * (-420.0 + y * (540.0 + y * (-315.0 + y * 70.0))))
    }
}

/// One row of the image-part interaction of the arc with itself: entry `j`
/// multiplies the density at arc node `j`.
///
/// The baseline is the plain trapezoid product, which is accurate as long as
/// the mirror peak below the target spans several nodes.  When the target
/// sits on the arc (`on_arc_param`) at a height below a few node spacings,
/// the row is split with a smooth window centered on the peak: the windowed
/// part is integrated on locally refined Gauss panels (dyadic toward the
/// peak, capped at two node spacings so the trigonometric cardinal functions
/// of the density stay resolved), the complement stays on the trapezoid.
fn arc_image_row(
    arc: &ArcGrid,
    k: f64,
    etac: f64,
    x: Point,
    on_arc_param: Option<f64>,
) -> Vec<Complex64> {
    let n = arc.n;
    let h = arc.h;
    let plain = |row: &mut Vec<Complex64>, damp: bool, t_star: f64, w_half: f64| {
        for j in 0..n {
            let f = if damp {
                1.0 - window((arc.t[j] - t_star) / w_half)
            } else {
                1.0
            };
            if f > 0.0 {
                row[j] = image_kernel(k, etac, x, arc.pos[j], arc.normal[j])
                    * (arc.speed[j] * h * f);
            }
        }
    };
    let mut row = vec![Complex64::new(0.0, 0.0); n];
    let t_star = match on_arc_param {
        Some(t) => t,
        None => {
            plain(&mut row, false, 0.0, 1.0);
            return row;
        }
    };
    let (_, sp_star, _, _) = arc.at(t_star);
    let xi = x.y.max(0.0);
    if xi >= 6.0 * sp_star * h {
        plain(&mut row, false, 0.0, 1.0);
        return row;
    }
    // The window must stay inside the parameter interval; the flat margins
    // put near-line targets far from the truncation ends on any grid fine
    // enough to matter, so the extra clamp only guards very coarse grids.
    let w_half = (32.0 * h).min(t_star).min(TWO_PI - t_star);
    if w_half < 8.0 * h {
        plain(&mut row, false, 0.0, 1.0);
        return row;
    }
    plain(&mut row, true, t_star, w_half);
    // Panel breakpoints per side, as distances from the peak: dyadic growth
    // from the peak scale up to the cap, then uniform cap-sized steps.
    let cap = 2.0 * h;
    let feature = (0.5 * xi / sp_star).clamp(1e-12, h);
    let mut dists = vec![0.0, feature];
    let mut d = feature;
    while d < cap {
        d = (2.0 * d).min(cap);
        dists.push(d);
    }
    let rem = w_half - d;
    if rem > 0.0 {
        let m = (rem / cap).ceil().max(1.0) as usize;
        for i in 1..=m {
            dists.push(d + rem * i as f64 / m as f64);
        }
    }
    for side in [-1.0, 1.0] {
        for pair in dists.windows(2) {
            let (p, q) = (t_star + side * pair[0], t_star + side * pair[1]);
            let (a, b) = if p <= q { (p, q) } else { (q, p) };
            if b - a < 1e-300 {
                continue;
            }
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            for (gx, gw) in GL8 {
                let tq = mid + half * gx;
                let wq = window((tq - t_star) / w_half);
                if wq == 0.0 {
                    continue;
                }
                let (y, _, speed_q, nu_q) = arc.at(tq);
                let val = image_kernel(k, etac, x, y, nu_q) * (speed_q * wq * gw * half);
                if val.norm_sqr() == 0.0 {
                    continue;
                }
                let card = trig_cardinal_row(n, tq - 0.5 * h);
                for j in 0..n {
                    row[j] += val * card[j];
                }
            }
        }
    }
    row
}

// ---------------------------------------------------------------------------
// solver
// ---------------------------------------------------------------------------

/// Factorized combined-field solver for one surface profile (with flat
/// margins), an optional reference ball, and a fixed wavenumber.
pub struct HalfPlaneSolver {
    k: f64,
    arc: ArcGrid,
    ball: Option<BallGrid>,
    total: usize,
    lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl HalfPlaneSolver {
    /// Build the solver from explicit parts.  `margin_wavelengths` is the
    /// width of the flat run kept on each side of the perturbation support.
    pub fn new(
        k: f64,
        profile: &SurfaceProfile,
        ball: Option<&ReferenceBall>,
        arc_nodes: usize,
        ball_nodes: usize,
        margin_wavelengths: f64,
    ) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "wavenumber must be positive, got {k}"
            )));
        }
        let arc = ArcGrid::build(profile, k, arc_nodes, margin_wavelengths)?;
        let ball_grid = match ball {
            Some(b) => {
                if b.center.y - b.radius <= profile.max_height().max(0.0) {
                    return Err(Error::InvalidGeometry(format!(
                        "ball must float strictly above the surface: bottom at {:.4}, \
                         surface max {:.4}",
                        b.center.y - b.radius,
                        profile.max_height()
                    )));
                }
                Some(BallGrid::build(b, ball_nodes)?)
            }
            None => None,
        };
        let total = arc.n + ball_grid.as_ref().map_or(0, |b| b.n);
        let a = assemble(k, &arc, ball_grid.as_ref());
        let lu = a.lu();
        if !lu.is_invertible() {
            return Err(Error::DegenerateOperator(
                "half-plane boundary matrix is singular".into(),
            ));
        }
        Ok(HalfPlaneSolver {
            k,
            arc,
            ball: ball_grid,
            total,
            lu,
        })
    }

    /// Build a solver for a perturbed-surface scene (profile plus reference
    /// ball) after full validation.  The flat margin defaults to one
    /// wavelength; the ball uses half the arc node count.
    pub fn for_scene(scene: &Scene, k: f64, nodes: usize) -> Result<Self> {
        crate::geometry::validate_scene(scene, k).ensure_admissible()?;
        let profile = match &scene.kind {
            SceneKind::RoughSurface { profile } => profile,
            _ => {
                return Err(Error::InvalidParameter(
                    "half-plane solver needs a perturbed-surface scene".into(),
                ))
            }
        };
        let ball_nodes = (nodes / 2).max(64);
        let ball_nodes = ball_nodes + ball_nodes % 2;
        Self::new(k, profile, Some(&scene.ball), nodes, ball_nodes, 1.0)
    }

    pub fn wavenumber(&self) -> f64 {
        self.k
    }

    pub fn node_count(&self) -> usize {
        self.total
    }

    fn check_density(&self, density: &BoundaryDensity) -> Result<()> {
        if density.values.len() != self.total {
            return Err(Error::GridMismatch(format!(
                "density has {} entries, solver has {} nodes",
                density.values.len(),
                self.total
            )));
        }
        Ok(())
    }

    /// Solve the boundary system for one downward plane wave.
    pub fn solve(&self, d: Point) -> Result<BoundaryDensity> {
        let inc = HalfPlaneIncidence::new(self.k, d)?;
        let mut rhs = DVector::zeros(self.total);
        for i in 0..self.arc.n {
            rhs[i] = -inc.total(self.arc.pos[i]);
        }
        if let Some(b) = &self.ball {
            for i in 0..b.n {
                rhs[self.arc.n + i] = -inc.total(b.pos[i]);
            }
        }
        let phi = self
            .lu
            .solve(&rhs)
            .ok_or_else(|| Error::SolverFailure("half-plane boundary solve failed".into()))?;
        Ok(BoundaryDensity { values: phi })
    }

    /// Far-field pattern at upward observation angles (in `(0, π)`).
    pub fn far_field(&self, density: &BoundaryDensity, obs_angles: &[f64]) -> Result<Vec<Complex64>> {
        self.check_density(density)?;
        let etac = coupling(self.k);
        let g2 = gamma2(self.k);
        obs_angles
            .iter()
            .map(|&a| {
                if !(a.sin() > 1e-9) {
                    return Err(Error::InvalidParameter(format!(
                        "observation angle {a:.4} does not point into the upper half-plane"
                    )));
                }
                let xh = crate::geometry::unit_dir(a);
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..self.arc.n {
                    acc += farfield_kernel(self.k, etac, xh, self.arc.pos[j], self.arc.normal[j])
                        * self.arc.speed[j]
                        * self.arc.h
                        * density.values[j];
                }
                if let Some(b) = &self.ball {
                    for j in 0..b.n {
                        acc += farfield_kernel(self.k, etac, xh, b.pos[j], b.normal[j])
                            * b.radius
                            * b.h
                            * density.values[self.arc.n + j];
                    }
                }
                Ok(g2 * acc)
            })
            .collect()
    }

    /// Scattered field at a point of the propagation domain (plain
    /// quadrature: accurate away from the surface, the ball, and the strip
    /// over the junctions of the perturbation with the line).
    pub fn scattered_at(&self, density: &BoundaryDensity, x: Point) -> Result<Complex64> {
        self.check_density(density)?;
        let etac = coupling(self.k);
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..self.arc.n {
            let r = (x - self.arc.pos[j]).norm();
            if r < 1e-12 {
                return Err(Error::Singularity(
                    "near-field evaluation point lies on a quadrature node".into(),
                ));
            }
            let kernel = direct_kernel(self.k, etac, x, self.arc.pos[j], self.arc.normal[j])
                + image_kernel(self.k, etac, x, self.arc.pos[j], self.arc.normal[j]);
            acc += kernel * self.arc.speed[j] * self.arc.h * density.values[j];
        }
        if let Some(b) = &self.ball {
            for j in 0..b.n {
                let r = (x - b.pos[j]).norm();
                if r < 1e-12 {
                    return Err(Error::Singularity(
                        "near-field evaluation point lies on a quadrature node".into(),
                    ));
                }
                let kernel = direct_kernel(self.k, etac, x, b.pos[j], b.normal[j])
                    + image_kernel(self.k, etac, x, b.pos[j], b.normal[j]);
                acc += kernel * b.radius * b.h * density.values[self.arc.n + j];
            }
        }
        Ok(acc)
    }

    /// Max modulus of the total field at inter-node boundary points, for a
    /// unit-amplitude incident wave.  Off-node log weights, refined image
    /// quadrature and trigonometric interpolation of the density make this
    /// an independent probe rather than a restatement of collocation.
    pub fn boundary_residual(&self, density: &BoundaryDensity, d: Point) -> Result<f64> {
        self.check_density(density)?;
        let inc = HalfPlaneIncidence::new(self.k, d)?;
        let etac = coupling(self.k);
        let na = self.arc.n;
        let phi_arc: Vec<Complex64> = (0..na).map(|j| density.values[j]).collect();
        // Probe points sit half a cell from the nodes, so the off-node log
        // weights repeat on a ring of half-offset values.
        let lw_arc: Vec<f64> = (0..na)
            .map(|q| log_weight_at(na, (q as f64 + 0.5) * self.arc.h))
            .collect();
        let mut worst = 0.0f64;
        for m in 1..na {
            let t = m as f64 * self.arc.h;
            let (x, _, _, _) = self.arc.at(t);
            let card = trig_cardinal_row(na, t - 0.5 * self.arc.h);
            let phi_t: Complex64 = card
                .iter()
                .zip(&phi_arc)
                .map(|(w, p)| Complex64::new(*w, 0.0) * p)
                .sum();
            let mut u = inc.total(x) + 0.5 * phi_t;
            if x.y < FLAT_HEIGHT {
                // Both kernel families of G cancel pairwise on the line;
                // only the jump and the (vanishing) incident pair remain.
                worst = worst.max(u.norm());
                continue;
            }
            for j in 0..na {
                let split = direct_split(
                    self.k,
                    etac,
                    x,
                    t,
                    self.arc.pos[j],
                    self.arc.normal[j],
                    self.arc.speed[j],
                    self.arc.t[j],
                );
                let lw = lw_arc[(m + na - j - 1) % na];
                u += (lw * split.log_part + self.arc.h * split.remainder) * phi_arc[j];
            }
            let img_row = arc_image_row(&self.arc, self.k, etac, x, Some(t));
            for j in 0..na {
                u += img_row[j] * phi_arc[j];
            }
            if let Some(b) = &self.ball {
                for j in 0..b.n {
                    let kernel = direct_kernel(self.k, etac, x, b.pos[j], b.normal[j])
                        + image_kernel(self.k, etac, x, b.pos[j], b.normal[j]);
                    u += kernel * b.radius * b.h * density.values[na + j];
                }
            }
            worst = worst.max(u.norm());
        }
        if let Some(b) = &self.ball {
            let psi: Vec<Complex64> = (0..b.n).map(|j| density.values[na + j]).collect();
            let lw_ball: Vec<f64> = (0..b.n)
                .map(|q| log_weight_at(b.n, (q as f64 + 0.5) * b.h))
                .collect();
            for m in 0..b.n {
                let t = (m as f64 + 0.5) * b.h;
                let x = b.center + b.radius * Point::new(t.cos(), t.sin());
                let card = trig_cardinal_row(b.n, t);
                let psi_t: Complex64 = card
                    .iter()
                    .zip(&psi)
                    .map(|(w, p)| Complex64::new(*w, 0.0) * p)
                    .sum();
                let mut u = inc.total(x) + 0.5 * psi_t;
                for j in 0..b.n {
                    let split = direct_split(
                        self.k,
                        etac,
                        x,
                        t,
                        b.pos[j],
                        b.normal[j],
                        b.radius,
                        j as f64 * b.h,
                    );
                    let lw = lw_ball[(m + b.n - j) % b.n];
                    u += (lw * split.log_part + b.h * split.remainder) * psi[j];
                    u += image_kernel(self.k, etac, x, b.pos[j], b.normal[j])
                        * b.radius
                        * b.h
                        * psi[j];
                }
                for j in 0..na {
                    let kernel = direct_kernel(self.k, etac, x, self.arc.pos[j], self.arc.normal[j])
                        + image_kernel(self.k, etac, x, self.arc.pos[j], self.arc.normal[j]);
                    u += kernel * self.arc.speed[j] * self.arc.h * phi_arc[j];
                }
                worst = worst.max(u.norm());
            }
        }
        Ok(worst)
    }

    /// Multistatic far-field matrix on a half-aperture direction grid.
    pub fn multistatic(&self, grid: &DirectionGrid) -> Result<FarFieldMatrix> {
        if grid.aperture() != Aperture::Half {
            return Err(Error::GridMismatch(
                "half-plane scattering needs a half-aperture direction grid".into(),
            ));
        }
        let obs = grid.obs_angles();
        let m = grid.len();
        let columns: Vec<Result<Vec<Complex64>>> = (0..m)
            .into_par_iter()
            .map(|n| {
                let phi = self.solve(grid.inc_dir(n))?;
                self.far_field(&phi, &obs)
            })
            .collect();
        let mut data = DMatrix::zeros(m, m);
        for (n, col) in columns.into_iter().enumerate() {
            let col = col?;
            for (i, v) in col.into_iter().enumerate() {
                data[(i, n)] = v;
            }
        }
        FarFieldMatrix::new(self.k, grid.clone(), data)
    }
}

/// Solve one perturbed-surface scene end to end on a half-aperture grid.
pub fn multistatic_farfield(
    scene: &Scene,
    k: f64,
    grid: &DirectionGrid,
    nodes: usize,
) -> Result<FarFieldMatrix> {
    HalfPlaneSolver::for_scene(scene, k, nodes)?.multistatic(grid)
}

fn assemble(k: f64, arc: &ArcGrid, ball: Option<&BallGrid>) -> DMatrix<Complex64> {
    let etac = coupling(k);
    let na = arc.n;
    let nb = ball.map_or(0, |b| b.n);
    let mut a = DMatrix::zeros(na + nb, na + nb);
    let ring = log_weight_ring(na);
    for i in 0..na {
        if arc.flat[i] {
            // Collocation on the flat line: every kernel of G vanishes
            // identically there, leaving the bare jump relation φ/2 = 0.
            a[(i, i)] = Complex64::new(0.5, 0.0);
            continue;
        }
        let x = arc.pos[i];
        for j in 0..na {
            let split = if i == j {
                direct_diag(k, etac, arc.speed[i], arc.curv[i])
            } else {
                direct_split(
                    k,
                    etac,
                    x,
                    arc.t[i],
                    arc.pos[j],
                    arc.normal[j],
                    arc.speed[j],
                    arc.t[j],
                )
            };
            a[(i, j)] = ring[(i + na - j) % na] * split.log_part + arc.h * split.remainder;
        }
        let img_row = arc_image_row(arc, k, etac, x, Some(arc.t[i]));
        for j in 0..na {
            a[(i, j)] += img_row[j];
        }
        a[(i, i)] += Complex64::new(0.5, 0.0);
        if let Some(b) = ball {
            for j in 0..b.n {
                a[(i, na + j)] = (direct_kernel(k, etac, x, b.pos[j], b.normal[j])
                    + image_kernel(k, etac, x, b.pos[j], b.normal[j]))
                    * b.radius
                    * b.h;
            }
        }
    }
    if let Some(b) = ball {
        let ring_b = log_weight_ring(b.n);
        for i in 0..b.n {
            let x = b.pos[i];
            for j in 0..b.n {
                let split = if i == j {
                    direct_diag(k, etac, b.radius, -1.0 / (4.0 * std::f64::consts::PI))
                } else {
                    direct_split(
                        k,
                        etac,
                        x,
                        i as f64 * b.h,
                        b.pos[j],
                        b.normal[j],
                        b.radius,
                        j as f64 * b.h,
                    )
                };
                a[(na + i, na + j)] = ring_b[(i + b.n - j) % b.n] * split.log_part
                    + b.h * split.remainder
                    + image_kernel(k, etac, x, b.pos[j], b.normal[j]) * b.radius * b.h;
            }
            a[(na + i, na + i)] += Complex64::new(0.5, 0.0);
            for j in 0..na {
                a[(na + i, j)] = (direct_kernel(k, etac, x, arc.pos[j], arc.normal[j])
                    + image_kernel(k, etac, x, arc.pos[j], arc.normal[j]))
                    * arc.speed[j]
                    * arc.h;
            }
        }
    }
    a
}
