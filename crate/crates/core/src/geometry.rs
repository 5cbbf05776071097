//! Scene geometry: boundary curves, the known reference ball, locally
//! perturbed surface profiles, periodic quadrature rules and scene
//! admissibility checks.
//!
//! All closed curves are parametrised counterclockwise over `[0, 2pi)` by
//! analytic maps `p(t)`, so the trapezoid rule (and the logarithmic Kress
//! rule built on top of it) converges spectrally.  The outward unit normal of
//! a counterclockwise curve is `(p2', -p1')/|p'|`.

use num_complex::Complex64;

use crate::error::Error;
use crate::specfun::J0_FIRST_ZERO;
use crate::Result;

/// Planar point / vector.
pub type Point = nalgebra::Vector2<f64>;

/// Unit vector at the given angle.
pub fn unit_dir(angle: f64) -> Point {
    Point::new(angle.cos(), angle.sin())
}

// ---------------------------------------------------------------------------
// boundary curves
// ---------------------------------------------------------------------------

/// Shape family of a boundary curve.
#[derive(Debug, Clone, PartialEq)]
enum CurveKind {
    Circle {
        radius: f64,
    },
    /// The benchmark kite `(cos t + 0.65 cos 2t - 0.65, 1.5 sin t)`,
    /// uniformly scaled.
    Kite {
        scale: f64,
    },
    /// Star-shaped curve `r(t) = mean + sum_m (a_m cos mt + b_m sin mt)`
    /// around its center.
    TrigPolynomial {
        mean: f64,
        cos_coeffs: Vec<f64>,
        sin_coeffs: Vec<f64>,
    },
}

/// A closed, non-self-intersecting boundary curve.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCurve {
    kind: CurveKind,
    center: Point,
}

impl BoundaryCurve {
    /// Circle of given radius.
    pub fn circle(center: Point, radius: f64) -> Result<Self> {
        require_finite_point(center)?;
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "circle radius must be positive, got {radius}"
            )));
        }
        Ok(BoundaryCurve {
            kind: CurveKind::Circle { radius },
            center,
        })
    }

    /// Scaled/translated copy of the benchmark kite.
    pub fn kite(center: Point, scale: f64) -> Result<Self> {
        require_finite_point(center)?;
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "kite scale must be positive, got {scale}"
            )));
        }
        Ok(BoundaryCurve {
            kind: CurveKind::Kite { scale },
            center,
        })
    }

    /// Star-shaped trigonometric-polynomial curve.  The radial function must
    /// stay strictly positive; the generic self-intersection sampling check
    /// runs as well.
    pub fn trig_polynomial(
        center: Point,
        mean: f64,
        cos_coeffs: Vec<f64>,
        sin_coeffs: Vec<f64>,
    ) -> Result<Self> {
        require_finite_point(center)?;
        if !mean.is_finite() || cos_coeffs.iter().chain(&sin_coeffs).any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "trig polynomial coefficients must be finite".into(),
            ));
        }
        let curve = BoundaryCurve {
            kind: CurveKind::TrigPolynomial {
                mean,
                cos_coeffs,
                sin_coeffs,
            },
            center,
        };
        // radial positivity
        let samples = 1024;
        for j in 0..samples {
            let t = 2.0 * std::f64::consts::PI * j as f64 / samples as f64;
            let r = curve.radial(t);
            if r <= 0.0 {
                return Err(Error::InvalidGeometry(format!(
                    "trig polynomial radius non-positive at t = {t:.4} (r = {r:.4e})"
                )));
            }
        }
        curve.check_self_intersection()?;
        Ok(curve)
    }

    fn radial(&self, t: f64) -> f64 {
        match &self.kind {
            CurveKind::TrigPolynomial {
                mean,
                cos_coeffs,
                sin_coeffs,
            } => {
                let mut r = *mean;
                for (m, a) in cos_coeffs.iter().enumerate() {
                    r += a * ((m + 1) as f64 * t).cos();
                }
                for (m, b) in sin_coeffs.iter().enumerate() {
                    r += b * ((m + 1) as f64 * t).sin();
                }
                r
            }
            _ => unreachable!("radial() only applies to trig polynomials"),
        }
    }

    fn radial_d1(&self, t: f64) -> f64 {
        match &self.kind {
            CurveKind::TrigPolynomial {
                cos_coeffs,
                sin_coeffs,
                ..
            } => {
                let mut r = 0.0;
                for (m, a) in cos_coeffs.iter().enumerate() {
                    let mf = (m + 1) as f64;
                    r -= a * mf * (mf * t).sin();
                }
                for (m, b) in sin_coeffs.iter().enumerate() {
                    let mf = (m + 1) as f64;
                    r += b * mf * (mf * t).cos();
                }
                r
            }
            _ => unreachable!(),
        }
    }

    fn radial_d2(&self, t: f64) -> f64 {
        match &self.kind {
            CurveKind::TrigPolynomial {
                cos_coeffs,
                sin_coeffs,
                ..
            } => {
                let mut r = 0.0;
                for (m, a) in cos_coeffs.iter().enumerate() {
                    let mf = (m + 1) as f64;
                    r -= a * mf * mf * (mf * t).cos();
                }
                for (m, b) in sin_coeffs.iter().enumerate() {
                    let mf = (m + 1) as f64;
                    r -= b * mf * mf * (mf * t).sin();
                }
                r
            }
            _ => unreachable!(),
        }
    }

    /// Position `p(t)`.
    pub fn point(&self, t: f64) -> Point {
        let (c, s) = (t.cos(), t.sin());
        match &self.kind {
            CurveKind::Circle { radius } => self.center + Point::new(radius * c, radius * s),
            CurveKind::Kite { scale } => {
                let c2 = (2.0 * t).cos();
                self.center + *scale * Point::new(c + 0.65 * c2 - 0.65, 1.5 * s)
            }
            CurveKind::TrigPolynomial { .. } => {
                let r = self.radial(t);
                self.center + Point::new(r * c, r * s)
            }
        }
    }

    /// Velocity `p'(t)`.
    pub fn velocity(&self, t: f64) -> Point {
        let (c, s) = (t.cos(), t.sin());
        match &self.kind {
            CurveKind::Circle { radius } => Point::new(-radius * s, radius * c),
            CurveKind::Kite { scale } => {
                let s2 = (2.0 * t).sin();
                *scale * Point::new(-s - 1.3 * s2, 1.5 * c)
            }
            CurveKind::TrigPolynomial { .. } => {
                let r = self.radial(t);
                let rd = self.radial_d1(t);
                Point::new(rd * c - r * s, rd * s + r * c)
            }
        }
    }

    /// Acceleration `p''(t)`.
    pub fn acceleration(&self, t: f64) -> Point {
        let (c, s) = (t.cos(), t.sin());
        match &self.kind {
            CurveKind::Circle { radius } => Point::new(-radius * c, -radius * s),
            CurveKind::Kite { scale } => {
                let c2 = (2.0 * t).cos();
                *scale * Point::new(-c - 2.6 * c2, -1.5 * s)
            }
            CurveKind::TrigPolynomial { .. } => {
                let r = self.radial(t);
                let rd = self.radial_d1(t);
                let rdd = self.radial_d2(t);
                Point::new(
                    (rdd - r) * c - 2.0 * rd * s,
                    (rdd - r) * s + 2.0 * rd * c,
                )
            }
        }
    }

    /// Outward unit normal (counterclockwise orientation).
    pub fn outward_normal(&self, t: f64) -> Point {
        let v = self.velocity(t);
        Point::new(v.y, -v.x) / v.norm()
    }

    /// Curve center (translation applied to the shape).
    pub fn center(&self) -> Point {
        self.center
    }

    /// Translated copy.
    pub fn translated(&self, shift: Point) -> Self {
        BoundaryCurve {
            kind: self.kind.clone(),
            center: self.center + shift,
        }
    }

    /// Diameter estimate from dense samples.
    pub fn diameter(&self) -> f64 {
        let n = 256;
        let pts: Vec<Point> = (0..n)
            .map(|j| self.point(2.0 * std::f64::consts::PI * j as f64 / n as f64))
            .collect();
        let mut d = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                d = d.max((pts[i] - pts[j]).norm());
            }
        }
        d
    }

    /// Largest distance from the origin, sampled densely (used by the
    /// enclosing-disk check).
    pub fn max_norm(&self) -> f64 {
        (0..1024)
            .map(|j| {
                self.point(2.0 * std::f64::consts::PI * j as f64 / 1024.0)
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    /// Arc length by the trapezoid rule with `n` nodes.
    pub fn length(&self, n: usize) -> f64 {
        let mut sum = 0.0;
        for j in 0..n {
            let t = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            sum += self.velocity(t).norm();
        }
        sum * 2.0 * std::f64::consts::PI / n as f64
    }

    /// Axis-aligned bounding box from dense samples: `(min, max)` corners.
    pub fn bounding_box(&self) -> (Point, Point) {
        let n = 4096;
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for j in 0..n {
            let p = self.point(2.0 * std::f64::consts::PI * j as f64 / n as f64);
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    /// Sampled self-intersection check: samples that are non-adjacent in
    /// parameter must stay at least `1e-6 * diameter` apart.
    fn check_self_intersection(&self) -> Result<()> {
        let n = 512usize;
        let pts: Vec<Point> = (0..n)
            .map(|j| self.point(2.0 * std::f64::consts::PI * j as f64 / n as f64))
            .collect();
        let diam = self.diameter();
        let skip = 16usize;
        for i in 0..n {
            for j in (i + 1)..n {
                let gap = (j - i).min(n - (j - i));
                if gap < skip {
                    continue;
                }
                if (pts[i] - pts[j]).norm() <= 1e-6 * diam {
                    return Err(Error::InvalidGeometry(format!(
                        "curve self-intersects near parameters t_i = {:.4}, t_j = {:.4}",
                        2.0 * std::f64::consts::PI * i as f64 / n as f64,
                        2.0 * std::f64::consts::PI * j as f64 / n as f64,
                    )));
                }
            }
        }
        Ok(())
    }
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_cross(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

fn point_in_closed_polyline(p: Point, poly: &[Point]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if (a.y > p.y) != (b.y > p.y) {
            let t = (p.y - a.y) / (b.y - a.y);
            if a.x + t * (b.x - a.x) > p.x {
                inside = !inside;
            }
        }
    }
    inside
}

/// True when the two closed sampled curves cross, one contains the other, or
/// they come within `touch_dist` of each other.
fn sampled_curves_overlap(a: &[Point], b: &[Point], touch_dist: f64) -> bool {
    for i in 0..a.len() {
        let a1 = a[i];
        let a2 = a[(i + 1) % a.len()];
        for j in 0..b.len() {
            if segments_cross(a1, a2, b[j], b[(j + 1) % b.len()]) {
                return true;
            }
        }
    }
    if point_in_closed_polyline(b[0], a) || point_in_closed_polyline(a[0], b) {
        return true;
    }
    let mut min_d = f64::INFINITY;
    for p in a {
        for q in b {
            min_d = min_d.min((p - q).norm());
        }
    }
    min_d <= touch_dist
}

fn require_finite_point(p: Point) -> Result<()> {
    if p.x.is_finite() && p.y.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "point has non-finite coordinates: ({}, {})",
            p.x, p.y
        )))
    }
}

// ---------------------------------------------------------------------------
// quadrature
// ---------------------------------------------------------------------------

/// Periodic trapezoid rule on a boundary curve: equispaced parameters,
/// weights `|p'(t_j)| * 2pi/n`, outward unit normals.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub params: Vec<f64>,
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
    pub normals: Vec<Point>,
}

/// Build the rule.  `n` must be even and at least 16 (the logarithmic
/// singularity splitting downstream needs an even count).
pub fn quadrature(curve: &BoundaryCurve, n: usize) -> Result<QuadratureRule> {
    if n < 16 || n % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "quadrature size must be even and >= 16, got {n}"
        )));
    }
    let step = 2.0 * std::f64::consts::PI / n as f64;
    let mut rule = QuadratureRule {
        params: Vec::with_capacity(n),
        nodes: Vec::with_capacity(n),
        weights: Vec::with_capacity(n),
        normals: Vec::with_capacity(n),
    };
    for j in 0..n {
        let t = step * j as f64;
        let v = curve.velocity(t);
        rule.params.push(t);
        rule.nodes.push(curve.point(t));
        rule.weights.push(v.norm() * step);
        rule.normals.push(Point::new(v.y, -v.x) / v.norm());
    }
    Ok(rule)
}

// ---------------------------------------------------------------------------
// reference ball
// ---------------------------------------------------------------------------

/// The known sound-soft reference ball `B = B(center, radius)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceBall {
    pub center: Point,
    pub radius: f64,
}

impl ReferenceBall {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        require_finite_point(center)?;
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "reference ball radius must be positive, got {radius}"
            )));
        }
        Ok(ReferenceBall { center, radius })
    }

    /// Boundary circle of the ball.
    pub fn curve(&self) -> BoundaryCurve {
        BoundaryCurve::circle(self.center, self.radius).expect("validated on construction")
    }

    /// Dirichlet-eigenvalue safety: `k * radius` below the first zero of
    /// `J_0` guarantees `k^2` is not an interior eigenvalue of the ball, so
    /// its scattered field cannot vanish identically.
    pub fn dirichlet_radius_ok(&self, k: f64) -> bool {
        k * self.radius < J0_FIRST_ZERO
    }

    /// Transmission-eigenvalue safety margin for a penetrable ball of index
    /// `n0`: `radius < pi / (2 k (sqrt(n0) + 1))`.
    pub fn transmission_radius_ok(&self, k: f64, n0: f64) -> bool {
        let bound = std::f64::consts::PI / (2.0 * k * (n0.max(0.0).sqrt() + 1.0));
        self.radius < bound
    }
}

// ---------------------------------------------------------------------------
// rough-surface profiles
// ---------------------------------------------------------------------------

/// Compactly supported height profile `h(s)` of a locally perturbed line.
#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceProfile {
    /// `h(s) = a * exp(1 / (((s-c)/w)^2 - 1))` for `|s-c| < w`, zero outside.
    /// Infinitely smooth; peak height `a/e` at `s = c`.
    Bump {
        amplitude: f64,
        center: f64,
        halfwidth: f64,
    },
    /// Sum of scaled cubic B-spline bumps `a * B3((s-c)/w)`; `B3` is the
    /// standard C^2 cubic B-spline supported on `[-2, 2]`.
    SplineBumps { bumps: Vec<SplineBump> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplineBump {
    pub amplitude: f64,
    pub center: f64,
    pub halfwidth: f64,
}

/// Cubic B-spline `B3(u)`, support `[-2, 2]`, `B3(0) = 2/3`.
fn bspline3(u: f64) -> f64 {
    let a = u.abs();
    if a >= 2.0 {
        0.0
    } else if a >= 1.0 {
        let d = 2.0 - a;
        d * d * d / 6.0
    } else {
        2.0 / 3.0 - a * a + a * a * a / 2.0
    }
}

fn bspline3_d1(u: f64) -> f64 {
    let a = u.abs();
    let s = u.signum();
    if a >= 2.0 {
        0.0
    } else if a >= 1.0 {
        let d = 2.0 - a;
        -s * d * d / 2.0
    } else {
        s * (1.5 * a * a - 2.0 * a)
    }
}

fn bspline3_d2(u: f64) -> f64 {
    let a = u.abs();
    if a >= 2.0 {
        0.0
    } else if a >= 1.0 {
        2.0 - a
    } else {
        3.0 * a - 2.0
    }
}

impl SurfaceProfile {
    pub fn bump(amplitude: f64, center: f64, halfwidth: f64) -> Result<Self> {
        if !amplitude.is_finite() || !center.is_finite() || !(halfwidth > 0.0) {
            return Err(Error::InvalidParameter(
                "bump profile needs finite amplitude/center and positive halfwidth".into(),
            ));
        }
        Ok(SurfaceProfile::Bump {
            amplitude,
            center,
            halfwidth,
        })
    }

    pub fn spline(bumps: Vec<SplineBump>) -> Result<Self> {
        if bumps.is_empty() {
            return Err(Error::InvalidParameter(
                "spline profile needs at least one bump".into(),
            ));
        }
        for b in &bumps {
            if !b.amplitude.is_finite() || !b.center.is_finite() || !(b.halfwidth > 0.0) {
                return Err(Error::InvalidParameter(
                    "spline bump needs finite amplitude/center and positive halfwidth".into(),
                ));
            }
        }
        Ok(SurfaceProfile::SplineBumps { bumps })
    }

    /// Height `h(s)`; exactly zero outside the support.
    pub fn height(&self, s: f64) -> f64 {
        match self {
            SurfaceProfile::Bump {
                amplitude,
                center,
                halfwidth,
            } => {
                let u = (s - center) / halfwidth;
                if u.abs() >= 1.0 {
                    0.0
                } else {
                    amplitude * (1.0 / (u * u - 1.0)).exp()
                }
            }
            SurfaceProfile::SplineBumps { bumps } => bumps
                .iter()
                .map(|b| b.amplitude * bspline3((s - b.center) / b.halfwidth))
                .sum(),
        }
    }

    /// Slope `h'(s)`.
    pub fn slope(&self, s: f64) -> f64 {
        match self {
            SurfaceProfile::Bump {
                amplitude,
                center,
                halfwidth,
            } => {
                let u = (s - center) / halfwidth;
                if u.abs() >= 1.0 {
                    0.0
                } else {
                    let d = u * u - 1.0;
                    amplitude * (1.0 / d).exp() * (-2.0 * u / (d * d)) / halfwidth
                }
            }
            SurfaceProfile::SplineBumps { bumps } => bumps
                .iter()
                .map(|b| b.amplitude * bspline3_d1((s - b.center) / b.halfwidth) / b.halfwidth)
                .sum(),
        }
    }

    /// Curvature input `h''(s)`.
    pub fn second(&self, s: f64) -> f64 {
        match self {
            SurfaceProfile::Bump {
                amplitude,
                center,
                halfwidth,
            } => {
                let u = (s - center) / halfwidth;
                if u.abs() >= 1.0 {
                    0.0
                } else {
                    let d = u * u - 1.0;
                    // d/du of exp(1/d) * (-2u/d^2) = exp(1/d) * ( (6u^2+2)/d^3·... )
                    let e = (1.0 / d).exp();
                    let term = (-2.0 / (d * d)) + (4.0 * u * u / (d * d * d * d))
                        + (8.0 * u * u / (d * d * d));
                    amplitude * e * term / (halfwidth * halfwidth)
                }
            }
            SurfaceProfile::SplineBumps { bumps } => bumps
                .iter()
                .map(|b| {
                    b.amplitude * bspline3_d2((s - b.center) / b.halfwidth)
                        / (b.halfwidth * b.halfwidth)
                })
                .sum(),
        }
    }

    /// Support interval `[lo, hi]` outside which the profile vanishes.
    pub fn support(&self) -> (f64, f64) {
        match self {
            SurfaceProfile::Bump {
                center, halfwidth, ..
            } => (center - halfwidth, center + halfwidth),
            SurfaceProfile::SplineBumps { bumps } => {
                let lo = bumps
                    .iter()
                    .map(|b| b.center - 2.0 * b.halfwidth)
                    .fold(f64::INFINITY, f64::min);
                let hi = bumps
                    .iter()
                    .map(|b| b.center + 2.0 * b.halfwidth)
                    .fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
        }
    }

    /// Maximum height, sampled densely over the support.
    pub fn max_height(&self) -> f64 {
        let (lo, hi) = self.support();
        (0..=2048)
            .map(|j| self.height(lo + (hi - lo) * j as f64 / 2048.0))
            .fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// scenes
// ---------------------------------------------------------------------------

/// Boundary condition on an obstacle component.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCondition {
    /// Sound-soft: `u = 0`.
    Dirichlet,
    /// Impedance: `du/dnu + eta u = 0` with `Im eta >= 0`.
    Impedance(ImpedanceProfile),
}

/// Impedance coefficient along a component, parametrised over `t`.
#[derive(Debug, Clone, PartialEq)]
pub enum ImpedanceProfile {
    Constant(Complex64),
    TrigPolynomial {
        mean: Complex64,
        cos_coeffs: Vec<Complex64>,
        sin_coeffs: Vec<Complex64>,
    },
}

impl ImpedanceProfile {
    pub fn eval(&self, t: f64) -> Complex64 {
        match self {
            ImpedanceProfile::Constant(c) => *c,
            ImpedanceProfile::TrigPolynomial {
                mean,
                cos_coeffs,
                sin_coeffs,
            } => {
                let mut v = *mean;
                for (m, a) in cos_coeffs.iter().enumerate() {
                    v += a * ((m + 1) as f64 * t).cos();
                }
                for (m, b) in sin_coeffs.iter().enumerate() {
                    v += b * ((m + 1) as f64 * t).sin();
                }
                v
            }
        }
    }
}

/// One impenetrable scatterer: a curve plus its boundary condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleComponent {
    pub curve: BoundaryCurve,
    pub bc: BoundaryCondition,
}

/// A penetrable inclusion inside the enclosing disk.
#[derive(Debug, Clone, PartialEq)]
pub enum MediumInclusion {
    Disk {
        center: Point,
        radius: f64,
        index: Complex64,
    },
}

/// The scatterer family of a scene.
#[derive(Debug, Clone, PartialEq)]
pub enum SceneKind {
    /// Impenetrable components inside the enclosing disk `B_R`.
    Obstacle { components: Vec<ObstacleComponent> },
    /// Refractive-index inclusions inside `B_R`; the reference ball carries
    /// the known constant real index `ball_index` and is itself penetrable.
    Medium {
        inclusions: Vec<MediumInclusion>,
        ball_index: f64,
    },
    /// Sound-soft locally perturbed line `x2 = h(x1)`; the perturbation fits
    /// inside `B_R` and the (sound-soft) ball floats above the surface.
    RoughSurface { profile: SurfaceProfile },
}

/// A complete measurement scene: unknown scatterer, known reference ball,
/// enclosing radius `R` of the a-priori disk containing the unknown part.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub kind: SceneKind,
    pub ball: ReferenceBall,
    pub enclosing_radius: f64,
}

/// Severity of a validation finding.  `Warning` flags risky-but-runnable
/// configurations (eigenvalue-range radii); `Violation` blocks solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Warning,
    Violation,
}

/// One validation finding.
#[derive(Debug, Clone)]
pub struct Finding {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
}

/// Outcome of `validate_scene`: every finding, with hard violations
/// separated from advisory warnings.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    fn push(&mut self, severity: Severity, code: &'static str, message: String) {
        self.findings.push(Finding {
            severity,
            code,
            message,
        });
    }

    pub fn violations(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Violation)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Warning)
    }

    pub fn is_admissible(&self) -> bool {
        self.violations().next().is_none()
    }

    pub fn has_warning(&self, code: &str) -> bool {
        self.warnings().any(|f| f.code == code)
    }

    /// Collapse violations into an error, for solver entry points.
    pub fn ensure_admissible(&self) -> Result<()> {
        if self.is_admissible() {
            Ok(())
        } else {
            let msgs: Vec<String> = self
                .violations()
                .map(|f| format!("[{}] {}", f.code, f.message))
                .collect();
            Err(Error::InvalidGeometry(msgs.join("; ")))
        }
    }
}

/// Check every admissibility rule of a scene at wavenumber `k` and report
/// all findings (the report lists everything rather than stopping at the
/// first problem).
pub fn validate_scene(scene: &Scene, k: f64) -> ValidationReport {
    let mut report = ValidationReport::default();
    let ball = &scene.ball;
    let r_encl = scene.enclosing_radius;

    if !(k > 0.0) || !k.is_finite() {
        report.push(
            Severity::Violation,
            "wavenumber",
            format!("wavenumber must be positive and finite, got {k}"),
        );
        return report;
    }
    if !(r_encl > 0.0) || !r_encl.is_finite() {
        report.push(
            Severity::Violation,
            "enclosing-radius",
            format!("enclosing radius must be positive, got {r_encl}"),
        );
        return report;
    }

    // Ball strictly outside the closed enclosing disk.  Reflections of the
    // ball through the origin keep |center|, so the same bound separates the
    // reflected ball from B_R as well.
    let sep = ball.center.norm() - (r_encl + ball.radius);
    if sep <= 0.0 {
        report.push(
            Severity::Violation,
            "ball-overlaps-enclosure",
            format!(
                "reference ball (|b| = {:.4}, rho = {:.4}) must lie strictly outside the \
                 enclosing disk of radius {:.4}",
                ball.center.norm(),
                ball.radius,
                r_encl
            ),
        );
    }

    match &scene.kind {
        SceneKind::Obstacle { components } => {
            if !ball.dirichlet_radius_ok(k) {
                report.push(
                    Severity::Warning,
                    "ball-eigenvalue-risk",
                    format!(
                        "k * rho = {:.4} >= {:.4}: k^2 may be a Dirichlet eigenvalue of the \
                         reference ball; its scattered field could degenerate",
                        k * ball.radius,
                        J0_FIRST_ZERO
                    ),
                );
            }
            for (i, comp) in components.iter().enumerate() {
                let max_norm = comp.curve.max_norm();
                if max_norm >= r_encl {
                    report.push(
                        Severity::Violation,
                        "component-outside-enclosure",
                        format!(
                            "component {i} reaches |x| = {max_norm:.4} >= enclosing radius {r_encl:.4}"
                        ),
                    );
                }
                if let BoundaryCondition::Impedance(profile) = &comp.bc {
                    for j in 0..256 {
                        let t = 2.0 * std::f64::consts::PI * j as f64 / 256.0;
                        let eta = profile.eval(t);
                        if eta.im < 0.0 {
                            report.push(
                                Severity::Violation,
                                "impedance-sign",
                                format!(
                                    "component {i}: Im eta = {:.4e} < 0 at t = {t:.4}",
                                    eta.im
                                ),
                            );
                            break;
                        }
                    }
                }
            }
            // pairwise disjointness: crossings, containment, near contact
            let polys: Vec<Vec<Point>> = components
                .iter()
                .map(|c| {
                    (0..256)
                        .map(|j| c.curve.point(2.0 * std::f64::consts::PI * j as f64 / 256.0))
                        .collect()
                })
                .collect();
            for i in 0..components.len() {
                for j in (i + 1)..components.len() {
                    let scale =
                        components[i].curve.diameter().max(components[j].curve.diameter());
                    if sampled_curves_overlap(&polys[i], &polys[j], 1e-6 * scale) {
                        report.push(
                            Severity::Violation,
                            "components-overlap",
                            format!("components {i} and {j} intersect or touch"),
                        );
                    }
                }
            }
        }
        SceneKind::Medium {
            inclusions,
            ball_index,
        } => {
            if !(*ball_index > 0.0) || !ball_index.is_finite() {
                report.push(
                    Severity::Violation,
                    "ball-index-range",
                    format!("ball index must be a positive real, got {ball_index}"),
                );
            }
            if (ball_index - 1.0).abs() < 1e-12 {
                report.push(
                    Severity::Violation,
                    "ball-index-trivial",
                    "ball index equals the background (n0 = 1): the reference ball would not \
                     scatter"
                        .into(),
                );
            }
            if !ball.transmission_radius_ok(k, *ball_index) {
                report.push(
                    Severity::Warning,
                    "ball-transmission-risk",
                    format!(
                        "ball radius {:.4} >= pi/(2k(sqrt(n0)+1)) = {:.4}: transmission \
                         eigenvalues of the ball are no longer excluded",
                        ball.radius,
                        std::f64::consts::PI / (2.0 * k * (ball_index.max(0.0).sqrt() + 1.0))
                    ),
                );
            }
            for (i, inc) in inclusions.iter().enumerate() {
                match inc {
                    MediumInclusion::Disk {
                        center,
                        radius,
                        index,
                    } => {
                        if !(radius > &0.0) {
                            report.push(
                                Severity::Violation,
                                "inclusion-radius",
                                format!("inclusion {i} radius must be positive, got {radius}"),
                            );
                            continue;
                        }
                        if center.norm() + radius >= r_encl {
                            report.push(
                                Severity::Violation,
                                "inclusion-outside-enclosure",
                                format!(
                                    "inclusion {i} reaches |x| = {:.4} >= enclosing radius {:.4}",
                                    center.norm() + radius,
                                    r_encl
                                ),
                            );
                        }
                        if index.re <= 0.0 || index.im < 0.0 {
                            report.push(
                                Severity::Violation,
                                "index-range",
                                format!(
                                    "inclusion {i} index must have Re > 0 and Im >= 0, got {index}"
                                ),
                            );
                        }
                    }
                }
            }
            for i in 0..inclusions.len() {
                for j in (i + 1)..inclusions.len() {
                    let MediumInclusion::Disk {
                        center: c1,
                        radius: r1,
                        ..
                    } = &inclusions[i];
                    let MediumInclusion::Disk {
                        center: c2,
                        radius: r2,
                        ..
                    } = &inclusions[j];
                    if (c1 - c2).norm() <= r1 + r2 {
                        report.push(
                            Severity::Violation,
                            "inclusions-overlap",
                            format!("inclusions {i} and {j} overlap"),
                        );
                    }
                }
            }
        }
        SceneKind::RoughSurface { profile } => {
            if !ball.dirichlet_radius_ok(k) {
                report.push(
                    Severity::Warning,
                    "ball-eigenvalue-risk",
                    format!(
                        "k * rho = {:.4} >= {:.4}: k^2 may be a Dirichlet eigenvalue of the \
                         reference ball",
                        k * ball.radius,
                        J0_FIRST_ZERO
                    ),
                );
            }
            let (lo, hi) = profile.support();
            let reach = lo.abs().max(hi.abs()).max(profile.max_height());
            if reach >= r_encl {
                report.push(
                    Severity::Violation,
                    "perturbation-outside-enclosure",
                    format!(
                        "surface perturbation reaches {reach:.4} >= enclosing radius {r_encl:.4}"
                    ),
                );
            }
            // The image-kernel representation places mirror singularities at
            // the reflection of the surface; dips below the line would put
            // them inside the propagation domain.
            let min_h = (0..=2048)
                .map(|j| profile.height(lo + (hi - lo) * j as f64 / 2048.0))
                .fold(0.0f64, f64::min);
            if min_h < 0.0 {
                report.push(
                    Severity::Violation,
                    "negative-height",
                    format!(
                        "surface profile dips to {min_h:.4e} below the flat line; only \
                         nonnegative perturbations are supported"
                    ),
                );
            }
            // Ball strictly above the surface (and above the flat line, so
            // the mirrored ball below the line stays disjoint from it).
            let clearance = ball.center.y - ball.radius;
            if clearance <= profile.max_height().max(0.0) {
                report.push(
                    Severity::Violation,
                    "ball-touches-surface",
                    format!(
                        "ball must float strictly above the surface: bottom at x2 = {:.4}, \
                         surface max {:.4}",
                        clearance,
                        profile.max_height()
                    ),
                );
            }
            // Ball off the vertical symmetry axis, so the origin-reflected
            // and line-reflected copies of the ball are pairwise disjoint.
            if ball.center.x.abs() <= ball.radius {
                report.push(
                    Severity::Violation,
                    "ball-on-symmetry-axis",
                    format!(
                        "|b_1| = {:.4} must exceed the ball radius {:.4} so the reflected \
                         balls stay disjoint",
                        ball.center.x.abs(),
                        ball.radius
                    ),
                );
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kite_bounding_box() {
        // x-range of cos t + 0.65 cos 2t - 0.65 is [-97/65, 1]: the interior
        // minimum sits at cos t = -5/13.
        let kite = BoundaryCurve::kite(Point::new(0.0, 0.0), 1.0).unwrap();
        let (lo, hi) = kite.bounding_box();
        let want_lo_x = -97.0 / 65.0;
        assert!((lo.x - want_lo_x).abs() < 1e-6, "lo.x = {}", lo.x);
        assert!((hi.x - 1.0).abs() < 1e-6, "hi.x = {}", hi.x);
        assert!((lo.y + 1.5).abs() < 1e-6, "lo.y = {}", lo.y);
        assert!((hi.y - 1.5).abs() < 1e-6, "hi.y = {}", hi.y);
    }

    #[test]
    fn kite_analytic_extremum_on_dense_grid() {
        // The sampled minimum converges to the analytic value 1.3c^2 + c - 1.3
        // at c = -5/13 to 1e-12 on a fine grid around the extremum.
        let c: f64 = -5.0 / 13.0;
        let t0 = c.acos();
        let kite = BoundaryCurve::kite(Point::new(0.0, 0.0), 1.0).unwrap();
        let mut min_x = f64::INFINITY;
        for j in -1000..=1000 {
            let t = t0 + j as f64 * 1e-7;
            min_x = min_x.min(kite.point(t).x);
        }
        assert!((min_x - (-97.0 / 65.0)).abs() < 1e-12);
    }

    #[test]
    fn circle_quadrature_sums_to_circumference() {
        let c = BoundaryCurve::circle(Point::new(0.3, -0.2), 1.7).unwrap();
        for &n in &[16usize, 64, 256] {
            let q = quadrature(&c, n).unwrap();
            let len: f64 = q.weights.iter().sum();
            let want = 2.0 * std::f64::consts::PI * 1.7;
            assert!((len - want).abs() < 1e-10, "n = {n}: {len} vs {want}");
        }
    }

    #[test]
    fn kite_length_self_convergence() {
        let kite = BoundaryCurve::kite(Point::new(0.0, 0.0), 1.0).unwrap();
        let l128 = kite.length(128);
        let l256 = kite.length(256);
        assert!((l128 - l256).abs() < 1e-10, "{l128} vs {l256}");
    }

    #[test]
    fn normals_are_unit_and_outward() {
        let shapes = [
            BoundaryCurve::circle(Point::new(0.0, 0.0), 2.0).unwrap(),
            BoundaryCurve::kite(Point::new(0.5, -0.25), 0.8).unwrap(),
            BoundaryCurve::trig_polynomial(
                Point::new(0.0, 0.0),
                1.0,
                vec![0.15, 0.0, 0.05],
                vec![0.0, 0.1],
            )
            .unwrap(),
        ];
        for curve in &shapes {
            let q = quadrature(curve, 64).unwrap();
            for j in 0..q.nodes.len() {
                assert!((q.normals[j].norm() - 1.0).abs() < 1e-14);
                // Outward: moving along +normal increases distance from the
                // curve's center for these star-shaped samples.
                let out = (q.nodes[j] + 1e-6 * q.normals[j] - curve.center()).norm();
                let inn = (q.nodes[j] - 1e-6 * q.normals[j] - curve.center()).norm();
                assert!(out > inn, "normal points inward at node {j}");
            }
        }
    }

    #[test]
    fn velocity_matches_finite_differences() {
        let shapes = [
            BoundaryCurve::kite(Point::new(0.1, 0.2), 1.3).unwrap(),
            BoundaryCurve::trig_polynomial(Point::new(0.0, 0.0), 1.0, vec![0.2], vec![0.1])
                .unwrap(),
        ];
        let h = 1e-6;
        for curve in &shapes {
            for j in 0..24 {
                let t = 2.0 * std::f64::consts::PI * j as f64 / 24.0;
                let fd_v = (curve.point(t + h) - curve.point(t - h)) / (2.0 * h);
                assert!((fd_v - curve.velocity(t)).norm() < 1e-8);
                let fd_a = (curve.velocity(t + h) - curve.velocity(t - h)) / (2.0 * h);
                assert!((fd_a - curve.acceleration(t)).norm() < 1e-7);
            }
        }
    }

    #[test]
    fn degenerate_trig_polynomial_rejected() {
        // mean radius too small: r(t) crosses zero -> invalid.
        let r = BoundaryCurve::trig_polynomial(Point::new(0.0, 0.0), 0.5, vec![0.8], vec![]);
        assert!(matches!(r, Err(Error::InvalidGeometry(_))));
    }

    #[test]
    fn self_intersecting_curve_rejected() {
        // Strong m=2 modulation pinches the curve through itself.
        let r = BoundaryCurve::trig_polynomial(
            Point::new(0.0, 0.0),
            1.0,
            vec![0.0, 1.2],
            vec![],
        );
        assert!(r.is_err());
    }

    #[test]
    fn quadrature_size_validation() {
        let c = BoundaryCurve::circle(Point::new(0.0, 0.0), 1.0).unwrap();
        assert!(quadrature(&c, 15).is_err());
        assert!(quadrature(&c, 17).is_err());
        assert!(quadrature(&c, 16).is_ok());
    }

    #[test]
    fn bump_profile_properties() {
        let p = SurfaceProfile::bump(0.8, 0.3, 1.2).unwrap();
        // zero outside support, exactly
        assert_eq!(p.height(0.3 + 1.2), 0.0);
        assert_eq!(p.height(-5.0), 0.0);
        // peak a/e at the center
        assert!((p.height(0.3) - 0.8 * (-1.0f64).exp()).abs() < 1e-15);
        // slope/second derivative agree with finite differences
        let h = 1e-6;
        for &s in &[-0.5, 0.0, 0.3, 0.9, 1.3] {
            let fd1 = (p.height(s + h) - p.height(s - h)) / (2.0 * h);
            assert!((fd1 - p.slope(s)).abs() < 1e-7, "slope at {s}");
            let fd2 = (p.slope(s + h) - p.slope(s - h)) / (2.0 * h);
            assert!((fd2 - p.second(s)).abs() < 1e-6, "second at {s}");
        }
    }

    #[test]
    fn spline_profile_properties() {
        let p = SurfaceProfile::spline(vec![
            SplineBump {
                amplitude: 0.5,
                center: -0.4,
                halfwidth: 0.6,
            },
            SplineBump {
                amplitude: 0.3,
                center: 0.8,
                halfwidth: 0.4,
            },
        ])
        .unwrap();
        let (lo, hi) = p.support();
        assert!((lo - (-1.6)).abs() < 1e-14);
        assert!((hi - 1.6).abs() < 1e-14);
        assert_eq!(p.height(lo - 0.1), 0.0);
        let h = 1e-6;
        for &s in &[-1.0, -0.4, 0.0, 0.5, 1.0] {
            let fd1 = (p.height(s + h) - p.height(s - h)) / (2.0 * h);
            assert!((fd1 - p.slope(s)).abs() < 1e-7);
        }
    }

    fn obstacle_scene(ball_center: Point, ball_radius: f64, r_encl: f64) -> Scene {
        Scene {
            kind: SceneKind::Obstacle {
                components: vec![ObstacleComponent {
                    curve: BoundaryCurve::kite(Point::new(0.0, 0.0), 1.0).unwrap(),
                    bc: BoundaryCondition::Dirichlet,
                }],
            },
            ball: ReferenceBall::new(ball_center, ball_radius).unwrap(),
            enclosing_radius: r_encl,
        }
    }

    #[test]
    fn admissible_obstacle_scene_passes() {
        // The kite reaches |x| = 2.0657, so the enclosing radius must clear it.
        let scene = obstacle_scene(Point::new(3.5, 0.0), 0.3, 2.2);
        let report = validate_scene(&scene, 5.0);
        assert!(report.is_admissible(), "{:?}", report.findings);
        assert!(report.warnings().next().is_none());
    }

    #[test]
    fn kite_needs_room_in_the_enclosure() {
        let scene = obstacle_scene(Point::new(3.5, 0.0), 0.3, 2.0);
        let report = validate_scene(&scene, 5.0);
        assert!(report
            .violations()
            .any(|f| f.code == "component-outside-enclosure"));
    }

    #[test]
    fn ball_inside_enclosure_flagged() {
        let scene = obstacle_scene(Point::new(2.3, 0.0), 0.3, 2.2);
        let report = validate_scene(&scene, 5.0);
        assert!(!report.is_admissible());
        assert!(report
            .violations()
            .any(|f| f.code == "ball-overlaps-enclosure"));
    }

    #[test]
    fn eigenvalue_risk_is_warning_not_violation() {
        // k * rho = 5 * 0.6 = 3 > j_{0,1}: flagged, but still admissible.
        let scene = obstacle_scene(Point::new(4.0, 0.0), 0.6, 2.2);
        let report = validate_scene(&scene, 5.0);
        assert!(report.is_admissible());
        assert!(report.has_warning("ball-eigenvalue-risk"));
    }

    #[test]
    fn overlapping_components_flagged() {
        let scene = Scene {
            kind: SceneKind::Obstacle {
                components: vec![
                    ObstacleComponent {
                        curve: BoundaryCurve::circle(Point::new(0.0, 0.0), 1.0).unwrap(),
                        bc: BoundaryCondition::Dirichlet,
                    },
                    ObstacleComponent {
                        curve: BoundaryCurve::circle(Point::new(1.0, 0.0), 0.5).unwrap(),
                        bc: BoundaryCondition::Dirichlet,
                    },
                ],
            },
            ball: ReferenceBall::new(Point::new(4.0, 0.0), 0.3).unwrap(),
            enclosing_radius: 2.0,
        };
        let report = validate_scene(&scene, 2.0);
        assert!(report.violations().any(|f| f.code == "components-overlap"));
    }

    #[test]
    fn negative_impedance_imaginary_part_flagged() {
        let scene = Scene {
            kind: SceneKind::Obstacle {
                components: vec![ObstacleComponent {
                    curve: BoundaryCurve::circle(Point::new(0.0, 0.0), 1.0).unwrap(),
                    bc: BoundaryCondition::Impedance(ImpedanceProfile::Constant(Complex64::new(
                        1.0, -0.2,
                    ))),
                }],
            },
            ball: ReferenceBall::new(Point::new(4.0, 0.0), 0.3).unwrap(),
            enclosing_radius: 2.0,
        };
        let report = validate_scene(&scene, 2.0);
        assert!(report.violations().any(|f| f.code == "impedance-sign"));
    }

    #[test]
    fn medium_scene_validation() {
        let ok = Scene {
            kind: SceneKind::Medium {
                inclusions: vec![MediumInclusion::Disk {
                    center: Point::new(0.0, 0.0),
                    radius: 0.8,
                    index: Complex64::new(1.5, 0.0),
                }],
                ball_index: 2.0,
            },
            ball: ReferenceBall::new(Point::new(3.0, 0.0), 0.25).unwrap(),
            enclosing_radius: 1.5,
        };
        let report = validate_scene(&ok, 2.0);
        assert!(report.is_admissible(), "{:?}", report.findings);
        // rho = 0.25 < pi/(2*2*(sqrt(2)+1)) = 0.3253..: no transmission warning
        assert!(!report.has_warning("ball-transmission-risk"));

        // Push the radius past the transmission bound: warning, still admissible.
        let mut risky = ok.clone();
        risky.ball = ReferenceBall::new(Point::new(3.0, 0.0), 0.4).unwrap();
        let report = validate_scene(&risky, 2.0);
        assert!(report.is_admissible());
        assert!(report.has_warning("ball-transmission-risk"));

        // Ball index 1 is degenerate.
        let mut trivial = ok.clone();
        if let SceneKind::Medium { ball_index, .. } = &mut trivial.kind {
            *ball_index = 1.0;
        }
        assert!(!validate_scene(&trivial, 2.0).is_admissible());
    }

    #[test]
    fn rough_scene_validation() {
        let ok = Scene {
            kind: SceneKind::RoughSurface {
                profile: SurfaceProfile::bump(0.5, 0.0, 1.0).unwrap(),
            },
            ball: ReferenceBall::new(Point::new(1.5, 2.5), 0.3).unwrap(),
            enclosing_radius: 1.8,
        };
        let report = validate_scene(&ok, 3.0);
        assert!(report.is_admissible(), "{:?}", report.findings);

        // Ball centered on the symmetry axis: reflected copies collide.
        let mut on_axis = ok.clone();
        on_axis.ball = ReferenceBall::new(Point::new(0.1, 2.5), 0.3).unwrap();
        let report = validate_scene(&on_axis, 3.0);
        assert!(report
            .violations()
            .any(|f| f.code == "ball-on-symmetry-axis"));

        // Ball dunked into the surface.
        let mut low = ok.clone();
        low.ball = ReferenceBall::new(Point::new(1.5, 0.2), 0.3).unwrap();
        let report = validate_scene(&low, 3.0);
        assert!(report.violations().any(|f| f.code == "ball-touches-surface"));
    }

    #[test]
    fn transmission_radius_bound_value() {
        // rho < pi/(2k(sqrt(n0)+1)): check the boundary numerically.
        let ball = ReferenceBall::new(Point::new(3.0, 0.0), 0.325).unwrap();
        assert!(ball.transmission_radius_ok(2.0, 2.0));
        let ball = ReferenceBall::new(Point::new(3.0, 0.0), 0.326).unwrap();
        assert!(!ball.transmission_radius_ok(2.0, 2.0));
    }
}
