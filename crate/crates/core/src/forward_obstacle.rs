//! Combined-field Nyström solver for time-harmonic scattering from
//! sound-soft and impedance obstacles.
//!
//! The scattered field is represented as a combined double/single-layer
//! potential `u^s = (D − iη_c S)φ` with coupling `η_c = k`, which keeps the
//! boundary system uniquely solvable at every wavenumber.  Logarithmic
//! singularities are integrated with the spectral product rule from
//! [`crate::nystrom`]; the hypersingular operator needed for impedance
//! boundaries is reduced to weakly singular form (tangential-derivative
//! identity), so every block converges superalgebraically on analytic
//! curves.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::Error;
use crate::farfield::{gamma2, DirectionGrid, FarFieldMatrix};
use crate::geometry::{BoundaryCondition, BoundaryCurve, Point, Scene, SceneKind};
use crate::nystrom::{log_weight_at, log_weight_ring, trig_cardinal_row, trig_diff_matrix};
use crate::specfun::{bessel_j, fundamental_solution_2d, hankel1_01, EULER_GAMMA};
use crate::Result;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Combined-field coupling parameter `η_c`.
fn coupling(k: f64) -> f64 {
    k
}

/// Rotate a vector by −π/2: maps the tangent `p′` to the unnormalized
/// outward normal of a counterclockwise curve.
fn rot(v: Point) -> Point {
    Point::new(v.y, -v.x)
}

/// Incident fields driving a forward solve.
#[derive(Debug, Clone, PartialEq)]
pub enum IncidentField {
    /// Plane wave `e^{ik x·d}` with unit direction `d`.
    PlaneWave { dir: Point },
    /// Sum of two unit-amplitude plane waves.
    Superposition { dir1: Point, dir2: Point },
    /// Point source `Φ(x, z)`.
    PointSource { location: Point },
}

fn checked_unit(dir: Point) -> Result<Point> {
    let n = dir.norm();
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter(format!(
            "incident direction must be a unit vector, |d| = {n}"
        )));
    }
    Ok(dir / n)
}

impl IncidentField {
    pub fn plane_wave(dir: Point) -> Result<Self> {
        Ok(IncidentField::PlaneWave {
            dir: checked_unit(dir)?,
        })
    }

    pub fn plane_wave_angle(angle: f64) -> Self {
        IncidentField::PlaneWave {
            dir: crate::geometry::unit_dir(angle),
        }
    }

    pub fn superposition(dir1: Point, dir2: Point) -> Result<Self> {
        Ok(IncidentField::Superposition {
            dir1: checked_unit(dir1)?,
            dir2: checked_unit(dir2)?,
        })
    }

    pub fn point_source(location: Point) -> Self {
        IncidentField::PointSource { location }
    }

    /// Field value at `x`.
    pub fn eval(&self, k: f64, x: Point) -> Complex64 {
        match self {
            IncidentField::PlaneWave { dir } => (I * k * dir.dot(&x)).exp(),
            IncidentField::Superposition { dir1, dir2 } => {
                (I * k * dir1.dot(&x)).exp() + (I * k * dir2.dot(&x)).exp()
            }
            IncidentField::PointSource { location } => {
                fundamental_solution_2d(k, x, *location).unwrap_or(Complex64::new(f64::NAN, 0.0))
            }
        }
    }

    /// Cartesian gradient at `x` as `(∂₁, ∂₂)`.
    pub fn gradient(&self, k: f64, x: Point) -> (Complex64, Complex64) {
        match self {
            IncidentField::PlaneWave { dir } => {
                let v = I * k * (I * k * dir.dot(&x)).exp();
                (v * dir.x, v * dir.y)
            }
            IncidentField::Superposition { dir1, dir2 } => {
                let v1 = I * k * (I * k * dir1.dot(&x)).exp();
                let v2 = I * k * (I * k * dir2.dot(&x)).exp();
                (v1 * dir1.x + v2 * dir2.x, v1 * dir1.y + v2 * dir2.y)
            }
            IncidentField::PointSource { location } => {
                // ∇ₓ Φ(x,z) = −(ik/4) H₁(k r) (x−z)/r
                let delta = x - location;
                let r = delta.norm();
                let (_, h1) = hankel1_01(k * r);
                let v = -I * k / 4.0 * h1 / r;
                (v * delta.x, v * delta.y)
            }
        }
    }
}

/// Everything precomputed on one discretized boundary component.
struct ComponentGrid {
    curve: BoundaryCurve,
    n: usize,
    h: f64,
    params: Vec<f64>,
    pos: Vec<Point>,
    speed: Vec<f64>,
    normal: Vec<Point>,
    /// `(p₁″p₂′ − p₂″p₁′)/(4π|p′|²)` — the diagonal of the double-layer
    /// remainder kernel.
    curvature_term: Vec<f64>,
    /// Impedance samples at the nodes; empty for sound-soft components.
    eta: Vec<Complex64>,
}

impl ComponentGrid {
    fn build(curve: &BoundaryCurve, bc: &BoundaryCondition, n: usize) -> Result<Self> {
        if n < 16 || n % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "nodes per component must be even and at least 16, got {n}"
            )));
        }
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let params: Vec<f64> = (0..n).map(|j| j as f64 * h).collect();
        let mut pos = Vec::with_capacity(n);
        let mut speed = Vec::with_capacity(n);
        let mut normal = Vec::with_capacity(n);
        let mut curvature_term = Vec::with_capacity(n);
        for &t in &params {
            let p = curve.point(t);
            let v = curve.velocity(t);
            let a = curve.acceleration(t);
            let s = v.norm();
            if s < 1e-12 {
                return Err(Error::InvalidGeometry(format!(
                    "degenerate parametrization: |p'({t})| = {s:e}"
                )));
            }
            pos.push(p);
            speed.push(s);
            normal.push(rot(v) / s);
            curvature_term.push((a.x * v.y - a.y * v.x) / (4.0 * std::f64::consts::PI * s * s));
        }
        let eta = match bc {
            BoundaryCondition::Dirichlet => Vec::new(),
            BoundaryCondition::Impedance(profile) => {
                params.iter().map(|&t| profile.eval(t)).collect()
            }
        };
        Ok(ComponentGrid {
            curve: curve.clone(),
            n,
            h,
            params,
            pos,
            speed,
            normal,
            curvature_term,
            eta,
        })
    }

    fn is_impedance(&self) -> bool {
        !self.eta.is_empty()
    }
}

/// Split of a weakly singular kernel at a boundary collocation point:
/// `full(t,τ) = log_part·ln(4 sin²((t−τ)/2)) + remainder`.
struct KernelSplit {
    log_part: Complex64,
    remainder: Complex64,
}

/// Single-layer kernel `(i/4)H₀(k r)·|p′(τ_j)|` split at off-diagonal
/// arguments; `x` is the collocation point at parameter `t` on the same
/// component as node `j`.
fn single_layer_split(k: f64, x: Point, t: f64, g: &ComponentGrid, j: usize) -> KernelSplit {
    let r = (x - g.pos[j]).norm();
    let (h0, _) = hankel1_01(k * r);
    let log_part =
        Complex64::new(-bessel_j(0, k * r) / (4.0 * std::f64::consts::PI) * g.speed[j], 0.0);
    let full = I / 4.0 * h0 * g.speed[j];
    let dt = t - g.params[j];
    let lg = (4.0 * (dt / 2.0).sin().powi(2)).ln();
    KernelSplit {
        log_part,
        remainder: full - log_part * lg,
    }
}

fn single_layer_diag(k: f64, g: &ComponentGrid, i: usize) -> KernelSplit {
    let s = g.speed[i];
    KernelSplit {
        log_part: Complex64::new(-s / (4.0 * std::f64::consts::PI), 0.0),
        remainder: s
            * (I / 4.0
                - (EULER_GAMMA + (k * s / 2.0).ln()) / (2.0 * std::f64::consts::PI)),
    }
}

/// Double-layer kernel `(ik/4)H₁(k r)·(ν(τ)·(x−y))|p′(τ)|/r` split at
/// off-diagonal arguments.
fn double_layer_split(k: f64, x: Point, t: f64, g: &ComponentGrid, j: usize) -> KernelSplit {
    let delta = x - g.pos[j];
    let r = delta.norm();
    let nd = delta.dot(&g.normal[j]) * g.speed[j];
    let (_, h1) = hankel1_01(k * r);
    let log_part =
        Complex64::new(-k / (4.0 * std::f64::consts::PI) * bessel_j(1, k * r) * nd / r, 0.0);
    let full = I * k / 4.0 * h1 * nd / r;
    let dt = t - g.params[j];
    let lg = (4.0 * (dt / 2.0).sin().powi(2)).ln();
    KernelSplit {
        log_part,
        remainder: full - log_part * lg,
    }
}

fn double_layer_diag(g: &ComponentGrid, i: usize) -> KernelSplit {
    KernelSplit {
        log_part: Complex64::new(0.0, 0.0),
        remainder: Complex64::new(g.curvature_term[i], 0.0),
    }
}

/// Normal-derivative-of-single-layer kernel
/// `−(ik/4)H₁(k r)·(ν(t)·(x−y))|p′(τ)|/r` split at off-diagonal arguments;
/// `nu` is the unit normal at the collocation point.
fn adjoint_layer_split(
    k: f64,
    x: Point,
    nu: Point,
    t: f64,
    g: &ComponentGrid,
    j: usize,
) -> KernelSplit {
    let delta = x - g.pos[j];
    let r = delta.norm();
    let nd = nu.dot(&delta) * g.speed[j];
    let (_, h1) = hankel1_01(k * r);
    let log_part =
        Complex64::new(k / (4.0 * std::f64::consts::PI) * bessel_j(1, k * r) * nd / r, 0.0);
    let full = -I * k / 4.0 * h1 * nd / r;
    let dt = t - g.params[j];
    let lg = (4.0 * (dt / 2.0).sin().powi(2)).ln();
    KernelSplit {
        log_part,
        remainder: full - log_part * lg,
    }
}

/// Fundamental solution without the Jacobian, split for the tangential
/// (Maue) form of the hypersingular operator.
fn bare_kernel_split(k: f64, x: Point, t: f64, g: &ComponentGrid, j: usize) -> KernelSplit {
    let r = (x - g.pos[j]).norm();
    let (h0, _) = hankel1_01(k * r);
    let log_part = Complex64::new(-bessel_j(0, k * r) / (4.0 * std::f64::consts::PI), 0.0);
    let full = I / 4.0 * h0;
    let dt = t - g.params[j];
    let lg = (4.0 * (dt / 2.0).sin().powi(2)).ln();
    KernelSplit {
        log_part,
        remainder: full - log_part * lg,
    }
}

fn bare_kernel_diag(k: f64, g: &ComponentGrid, i: usize) -> KernelSplit {
    KernelSplit {
        log_part: Complex64::new(-1.0 / (4.0 * std::f64::consts::PI), 0.0),
        remainder: I / 4.0
            - (EULER_GAMMA + (k * g.speed[i] / 2.0).ln()) / (2.0 * std::f64::consts::PI),
    }
}

/// Smooth-kernel values between two distinct components (plain trapezoid
/// weights apply).  `nu_x` is the unit normal at the collocation point;
/// only impedance rows use the `nu_x`-dependent members.
struct CrossKernels {
    single: Complex64,
    double: Complex64,
    adjoint: Complex64,
    hyper: Complex64,
}

fn cross_kernels(k: f64, x: Point, nu_x: Point, g: &ComponentGrid, j: usize) -> CrossKernels {
    let delta = x - g.pos[j];
    let r = delta.norm();
    let (h0, h1) = hankel1_01(k * r);
    let s = g.speed[j];
    let nu_y = g.normal[j];
    let single = I / 4.0 * h0 * s;
    let double = I * k / 4.0 * h1 * nu_y.dot(&delta) / r * s;
    let adjoint = -I * k / 4.0 * h1 * nu_x.dot(&delta) / r * s;
    // ∂²Φ/∂ν(x)∂ν(y) = (ik/4)[(krH₀ − 2H₁)(ν_x·Δ)(ν_y·Δ)/r³ + H₁(ν_x·ν_y)/r]
    let hyper = I * k / 4.0
        * ((k * r * h0 - 2.0 * h1) * nu_x.dot(&delta) * nu_y.dot(&delta) / (r * r * r)
            + h1 * nu_x.dot(&nu_y) / r)
        * s;
    CrossKernels {
        single,
        double,
        adjoint,
        hyper,
    }
}

/// Boundary density of a combined-field solve, stored on the concatenated
/// quadrature nodes of all components.
#[derive(Debug, Clone)]
pub struct BoundaryDensity {
    pub values: DVector<Complex64>,
}

/// Factorized boundary solver for a fixed obstacle configuration and
/// wavenumber.
pub struct ObstacleSolver {
    k: f64,
    comps: Vec<ComponentGrid>,
    offsets: Vec<usize>,
    total: usize,
    lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl ObstacleSolver {
    /// Build a solver for explicit components (no scene validation beyond
    /// discretizability).
    pub fn from_components(
        k: f64,
        parts: &[(BoundaryCurve, BoundaryCondition)],
        nodes_per_component: usize,
    ) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "wavenumber must be positive, got {k}"
            )));
        }
        if parts.is_empty() {
            return Err(Error::InvalidGeometry("no boundary components".into()));
        }
        let mut comps = Vec::with_capacity(parts.len());
        for (curve, bc) in parts {
            comps.push(ComponentGrid::build(curve, bc, nodes_per_component)?);
        }
        let mut offsets = Vec::with_capacity(comps.len());
        let mut total = 0;
        for g in &comps {
            offsets.push(total);
            total += g.n;
        }
        let a = assemble(k, &comps, &offsets, total);
        let lu = a.lu();
        if !lu.is_invertible() {
            return Err(Error::DegenerateOperator(
                "combined-field boundary matrix is singular".into(),
            ));
        }
        Ok(ObstacleSolver {
            k,
            comps,
            offsets,
            total,
            lu,
        })
    }

    /// Build a solver for an obstacle scene: its components plus the
    /// sound-soft reference ball as the final component.  The scene must
    /// pass validation at this wavenumber.
    pub fn for_scene(scene: &Scene, k: f64, nodes_per_component: usize) -> Result<Self> {
        crate::geometry::validate_scene(scene, k).ensure_admissible()?;
        let components = match &scene.kind {
            SceneKind::Obstacle { components } => components,
            _ => {
                return Err(Error::InvalidParameter(
                    "obstacle solver needs an obstacle scene".into(),
                ))
            }
        };
        let mut parts: Vec<(BoundaryCurve, BoundaryCondition)> = components
            .iter()
            .map(|c| (c.curve.clone(), c.bc.clone()))
            .collect();
        parts.push((scene.ball.curve(), BoundaryCondition::Dirichlet));
        Self::from_components(k, &parts, nodes_per_component)
    }

    pub fn wavenumber(&self) -> f64 {
        self.k
    }

    pub fn node_count(&self) -> usize {
        self.total
    }

    /// Solve the boundary system for one incident field.
    pub fn solve(&self, incident: &IncidentField) -> Result<BoundaryDensity> {
        let mut rhs = DVector::zeros(self.total);
        for (c, g) in self.comps.iter().enumerate() {
            let o = self.offsets[c];
            for i in 0..g.n {
                let x = g.pos[i];
                rhs[o + i] = if g.is_impedance() {
                    let (gx, gy) = incident.gradient(self.k, x);
                    let dn = gx * g.normal[i].x + gy * g.normal[i].y;
                    -(dn + g.eta[i] * incident.eval(self.k, x))
                } else {
                    -incident.eval(self.k, x)
                };
            }
        }
        let phi = self
            .lu
            .solve(&rhs)
            .ok_or_else(|| Error::SolverFailure("boundary solve failed".into()))?;
        Ok(BoundaryDensity { values: phi })
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

    /// Far-field pattern of the represented scattered wave at the given
    /// observation angles.
    pub fn far_field(&self, density: &BoundaryDensity, obs_angles: &[f64]) -> Result<Vec<Complex64>> {
        self.check_density(density)?;
        let etac = coupling(self.k);
        let g2 = gamma2(self.k);
        Ok(obs_angles
            .iter()
            .map(|&a| {
                let xh = crate::geometry::unit_dir(a);
                let mut acc = Complex64::new(0.0, 0.0);
                for (c, g) in self.comps.iter().enumerate() {
                    let o = self.offsets[c];
                    for j in 0..g.n {
                        let kernel = (-I * self.k * xh.dot(&g.normal[j]) - I * etac)
                            * (-I * self.k * xh.dot(&g.pos[j])).exp();
                        acc += kernel * g.speed[j] * g.h * density.values[o + j];
                    }
                }
                g2 * acc
            })
            .collect())
    }

    /// Scattered field at an exterior point (plain quadrature — accurate
    /// away from the boundary, degrading within ~one node spacing of it).
    pub fn scattered_at(&self, density: &BoundaryDensity, x: Point) -> Result<Complex64> {
        self.check_density(density)?;
        let etac = coupling(self.k);
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, g) in self.comps.iter().enumerate() {
            let o = self.offsets[c];
            for j in 0..g.n {
                let delta = x - g.pos[j];
                let r = delta.norm();
                if r < 1e-12 {
                    return Err(Error::Singularity(
                        "near-field evaluation point lies on a quadrature node".into(),
                    ));
                }
                let (h0, h1) = hankel1_01(self.k * r);
                let kernel = I * self.k / 4.0 * h1 * g.normal[j].dot(&delta) / r
                    - I * etac * (I / 4.0 * h0);
                acc += kernel * g.speed[j] * g.h * density.values[o + j];
            }
        }
        Ok(acc)
    }

    /// Max modulus of the total field at inter-node boundary points of the
    /// sound-soft components, relative to the incident amplitude.  Uses the
    /// off-node form of the logarithmic rule plus trigonometric
    /// interpolation of the density, so it is an independent accuracy probe
    /// rather than a restatement of the collocation equations.
    pub fn boundary_residual(
        &self,
        density: &BoundaryDensity,
        incident: &IncidentField,
    ) -> Result<f64> {
        self.check_density(density)?;
        let etac = coupling(self.k);
        let mut scale = 0.0f64;
        for g in &self.comps {
            for i in 0..g.n {
                scale = scale.max(incident.eval(self.k, g.pos[i]).norm());
            }
        }
        let scale = scale.max(1e-300);
        let mut worst = 0.0f64;
        for (c, g) in self.comps.iter().enumerate() {
            if g.is_impedance() {
                continue;
            }
            let o = self.offsets[c];
            let phi_c: Vec<Complex64> =
                (0..g.n).map(|j| density.values[o + j]).collect();
            for i in 0..g.n {
                let t = g.params[i] + 0.5 * g.h;
                let x = g.curve.point(t);
                // Interpolated density at the midpoint (for the jump term).
                let card = trig_cardinal_row(g.n, t);
                let phi_mid: Complex64 = card
                    .iter()
                    .zip(&phi_c)
                    .map(|(w, p)| Complex64::new(*w, 0.0) * p)
                    .sum();
                let mut u = incident.eval(self.k, x) + 0.5 * phi_mid;
                // Same-component potentials via the off-node product rule.
                for j in 0..g.n {
                    let dl = double_layer_split(self.k, x, t, g, j);
                    let sl = single_layer_split(self.k, x, t, g, j);
                    let log_w = log_weight_at(g.n, t - g.params[j]);
                    let a1 = dl.log_part - I * etac * sl.log_part;
                    let a2 = dl.remainder - I * etac * sl.remainder;
                    u += (log_w * a1 + g.h * a2) * phi_c[j];
                }
                // Other components are smooth sources at x.
                for (c2, g2) in self.comps.iter().enumerate() {
                    if c2 == c {
                        continue;
                    }
                    let o2 = self.offsets[c2];
                    for j in 0..g2.n {
                        let ck = cross_kernels(self.k, x, Point::new(0.0, 0.0), g2, j);
                        u += (ck.double - I * etac * ck.single)
                            * g2.h
                            * density.values[o2 + j];
                    }
                }
                worst = worst.max(u.norm());
            }
        }
        Ok(worst / scale)
    }

    /// Multistatic far-field matrix of an obstacle scene on a matched
    /// direction grid.
    pub fn multistatic(&self, grid: &DirectionGrid) -> Result<FarFieldMatrix> {
        let obs = grid.obs_angles();
        let m = grid.len();
        let columns: Vec<Result<Vec<Complex64>>> = (0..m)
            .into_par_iter()
            .map(|n| {
                let inc = IncidentField::PlaneWave {
                    dir: grid.inc_dir(n),
                };
                let phi = self.solve(&inc)?;
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

/// Solve one obstacle scene end to end on a direction grid.
pub fn multistatic_farfield(
    scene: &Scene,
    k: f64,
    grid: &DirectionGrid,
    nodes_per_component: usize,
) -> Result<FarFieldMatrix> {
    ObstacleSolver::for_scene(scene, k, nodes_per_component)?.multistatic(grid)
}

fn assemble(
    k: f64,
    comps: &[ComponentGrid],
    offsets: &[usize],
    total: usize,
) -> DMatrix<Complex64> {
    let etac = coupling(k);
    let mut a = DMatrix::zeros(total, total);
    for (c, g) in comps.iter().enumerate() {
        let o = offsets[c];
        if g.is_impedance() {
            impedance_self_block(k, g, &mut a, o);
        } else {
            dirichlet_self_block(k, g, &mut a, o);
        }
        for (c2, g2) in comps.iter().enumerate() {
            if c2 == c {
                continue;
            }
            let o2 = offsets[c2];
            for i in 0..g.n {
                let x = g.pos[i];
                let nu = g.normal[i];
                for j in 0..g2.n {
                    let ck = cross_kernels(k, x, nu, g2, j);
                    a[(o + i, o2 + j)] = if g.is_impedance() {
                        let eta = g.eta[i];
                        (ck.hyper + eta * ck.double - I * etac * ck.adjoint
                            - I * etac * eta * ck.single)
                            * g2.h
                    } else {
                        (ck.double - I * etac * ck.single) * g2.h
                    };
                }
            }
        }
    }
    a
}

fn dirichlet_self_block(k: f64, g: &ComponentGrid, a: &mut DMatrix<Complex64>, o: usize) {
    let etac = coupling(k);
    let ring = log_weight_ring(g.n);
    for i in 0..g.n {
        let x = g.pos[i];
        let t = g.params[i];
        for j in 0..g.n {
            let (dl, sl) = if i == j {
                (double_layer_diag(g, i), single_layer_diag(k, g, i))
            } else {
                (
                    double_layer_split(k, x, t, g, j),
                    single_layer_split(k, x, t, g, j),
                )
            };
            let a1 = dl.log_part - I * etac * sl.log_part;
            let a2 = dl.remainder - I * etac * sl.remainder;
            let mut v = ring[(i + g.n - j) % g.n] * a1 + g.h * a2;
            if i == j {
                v += Complex64::new(0.5, 0.0);
            }
            a[(o + i, o + j)] = v;
        }
    }
}

fn impedance_self_block(k: f64, g: &ComponentGrid, a: &mut DMatrix<Complex64>, o: usize) {
    let etac = coupling(k);
    let n = g.n;
    let ring = log_weight_ring(n);
    let mut smat = DMatrix::zeros(n, n); // single layer, with Jacobian
    let mut kmat = DMatrix::zeros(n, n); // double layer
    let mut kpmat = DMatrix::zeros(n, n); // normal derivative of single layer
    let mut bare = DMatrix::zeros(n, n); // Φ(t,τ) without Jacobian
    for i in 0..n {
        let x = g.pos[i];
        let t = g.params[i];
        let nu = g.normal[i];
        for j in 0..n {
            let w = ring[(i + n - j) % n];
            let (sl, dl, al, bk) = if i == j {
                (
                    single_layer_diag(k, g, i),
                    double_layer_diag(g, i),
                    double_layer_diag(g, i),
                    bare_kernel_diag(k, g, i),
                )
            } else {
                (
                    single_layer_split(k, x, t, g, j),
                    double_layer_split(k, x, t, g, j),
                    adjoint_layer_split(k, x, nu, t, g, j),
                    bare_kernel_split(k, x, t, g, j),
                )
            };
            smat[(i, j)] = w * sl.log_part + g.h * sl.remainder;
            kmat[(i, j)] = w * dl.log_part + g.h * dl.remainder;
            kpmat[(i, j)] = w * al.log_part + g.h * al.remainder;
            bare[(i, j)] = w * bk.log_part + g.h * bk.remainder;
        }
    }
    // Hypersingular operator in tangential-derivative form:
    //   Tφ(t) = (1/|p′(t)|) d/dt ∫ Φ(t,τ) φ′(τ) dτ
    //           + k² ν(t)·∫ Φ(t,τ) ν(τ) φ(τ) |p′(τ)| dτ.
    let d_real = trig_diff_matrix(n);
    let d = d_real.map(|v| Complex64::new(v, 0.0));
    let mut tmat = &d * &bare * &d;
    for i in 0..n {
        for j in 0..n {
            tmat[(i, j)] = tmat[(i, j)] / g.speed[i]
                + k * k * g.normal[i].dot(&g.normal[j]) * smat[(i, j)];
        }
    }
    for i in 0..n {
        let eta = g.eta[i];
        for j in 0..n {
            let mut v = tmat[(i, j)] + eta * kmat[(i, j)]
                - I * etac * kpmat[(i, j)]
                - I * etac * eta * smat[(i, j)];
            if i == j {
                v += (eta + I * etac) / 2.0;
            }
            a[(o + i, o + j)] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{
        impedance_disk_farfield, soundsoft_disk_farfield, translation_factor,
    };
    use crate::geometry::{unit_dir, ImpedanceProfile};

    fn disk_solver(k: f64, radius: f64, center: Point, n: usize) -> ObstacleSolver {
        let curve = BoundaryCurve::circle(center, radius).unwrap();
        ObstacleSolver::from_components(k, &[(curve, BoundaryCondition::Dirichlet)], n).unwrap()
    }

    fn kite_ball_scene() -> Scene {
        crate::scenes::kite_ball()
    }

    #[test]
    fn unit_disk_matches_separation_series() {
        for &k in &[1.0, 5.0] {
            let solver = disk_solver(k, 1.0, Point::new(0.0, 0.0), 128);
            let inc_angle = 0.7;
            let phi = solver
                .solve(&IncidentField::plane_wave_angle(inc_angle))
                .unwrap();
            let obs: Vec<f64> = (0..64)
                .map(|m| 2.0 * std::f64::consts::PI * m as f64 / 64.0)
                .collect();
            let got = solver.far_field(&phi, &obs).unwrap();
            let mut worst = 0.0f64;
            let mut scale = 0.0f64;
            for (m, &a) in obs.iter().enumerate() {
                let want =
                    soundsoft_disk_farfield(k, 1.0, Point::new(0.0, 0.0), a, inc_angle);
                worst = worst.max((got[m] - want).norm());
                scale = scale.max(want.norm());
            }
            assert!(
                worst / scale < 1e-8,
                "k={k}: relative error {:e}",
                worst / scale
            );
        }
    }

    #[test]
    fn boundary_residual_small_on_disk() {
        let solver = disk_solver(1.0, 1.0, Point::new(0.0, 0.0), 64);
        let inc = IncidentField::plane_wave_angle(0.0);
        let phi = solver.solve(&inc).unwrap();
        let res = solver.boundary_residual(&phi, &inc).unwrap();
        assert!(res < 1e-8, "off-node residual {res:e}");
    }

    #[test]
    fn impedance_disk_matches_series() {
        for &(k, eta) in &[
            (3.0, Complex64::new(2.0, 0.5)),
            (3.0, Complex64::new(2.0, 0.0)),
        ] {
            let curve = BoundaryCurve::circle(Point::new(0.0, 0.0), 1.0).unwrap();
            let bc = BoundaryCondition::Impedance(ImpedanceProfile::Constant(eta));
            let solver = ObstacleSolver::from_components(k, &[(curve, bc)], 128).unwrap();
            let inc_angle = 1.1;
            let phi = solver
                .solve(&IncidentField::plane_wave_angle(inc_angle))
                .unwrap();
            let obs: Vec<f64> = (0..48)
                .map(|m| 2.0 * std::f64::consts::PI * m as f64 / 48.0)
                .collect();
            let got = solver.far_field(&phi, &obs).unwrap();
            let mut worst = 0.0f64;
            let mut scale = 0.0f64;
            for (m, &a) in obs.iter().enumerate() {
                let want = impedance_disk_farfield(
                    k,
                    1.0,
                    Point::new(0.0, 0.0),
                    eta,
                    a,
                    inc_angle,
                );
                worst = worst.max((got[m] - want).norm());
                scale = scale.max(want.norm());
            }
            assert!(
                worst / scale < 1e-8,
                "eta={eta}: relative error {:e}",
                worst / scale
            );
        }
    }

    #[test]
    fn translated_disk_picks_up_phase_factor() {
        let k = 2.0;
        let z = Point::new(1.2, -0.6);
        let base = disk_solver(k, 0.8, Point::new(0.0, 0.0), 96);
        let moved = disk_solver(k, 0.8, z, 96);
        let inc_angle = 0.3;
        let inc = IncidentField::plane_wave_angle(inc_angle);
        let phi0 = base.solve(&inc).unwrap();
        let phiz = moved.solve(&inc).unwrap();
        for &obs in &[0.0, 1.3, 2.9, 4.4] {
            let f0 = base.far_field(&phi0, &[obs]).unwrap()[0];
            let fz = moved.far_field(&phiz, &[obs]).unwrap()[0];
            let want = translation_factor(k, z, obs, inc_angle) * f0;
            assert!((fz - want).norm() < 1e-9 * f0.norm().max(1.0));
        }
    }

    #[test]
    fn kite_ball_reciprocity() {
        let scene = kite_ball_scene();
        let grid = DirectionGrid::full(32).unwrap();
        let f = multistatic_farfield(&scene, 5.0, &grid, 128).unwrap();
        let defect = f.reciprocity_defect().unwrap();
        assert!(defect < 1e-7 * f.max_abs(), "defect {defect:e}");
        assert!(f.max_abs() > 1e-6);
    }

    #[test]
    fn superposition_is_linear() {
        let solver = disk_solver(3.0, 1.0, Point::new(0.2, 0.1), 64);
        let a1 = 0.4;
        let a2 = 2.6;
        let f1 = solver
            .far_field(
                &solver.solve(&IncidentField::plane_wave_angle(a1)).unwrap(),
                &[1.0, 2.0],
            )
            .unwrap();
        let f2 = solver
            .far_field(
                &solver.solve(&IncidentField::plane_wave_angle(a2)).unwrap(),
                &[1.0, 2.0],
            )
            .unwrap();
        let fs = solver
            .far_field(
                &solver
                    .solve(
                        &IncidentField::superposition(unit_dir(a1), unit_dir(a2)).unwrap(),
                    )
                    .unwrap(),
                &[1.0, 2.0],
            )
            .unwrap();
        for i in 0..2 {
            assert!((fs[i] - f1[i] - f2[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn energy_balance_and_absorption() {
        // Sound-soft kite: scattered power equals extinction.
        let curve = BoundaryCurve::kite(Point::new(0.0, 0.0), 1.0).unwrap();
        let solver = ObstacleSolver::from_components(
            2.0,
            &[(curve.clone(), BoundaryCondition::Dirichlet)],
            96,
        )
        .unwrap();
        let grid = DirectionGrid::full(48).unwrap();
        let f = solver.multistatic(&grid).unwrap();
        for (total, ext) in f.cross_section_balance().unwrap() {
            assert!((total - ext).abs() < 1e-8 * total);
        }
        // Absorbing impedance disk: scattered power strictly below extinction.
        let disk = BoundaryCurve::circle(Point::new(0.0, 0.0), 1.0).unwrap();
        let bc = BoundaryCondition::Impedance(ImpedanceProfile::Constant(Complex64::new(
            1.0, 0.8,
        )));
        let solver = ObstacleSolver::from_components(2.0, &[(disk, bc)], 96).unwrap();
        let f = solver.multistatic(&grid).unwrap();
        for (total, ext) in f.cross_section_balance().unwrap() {
            assert!(total < ext * (1.0 - 1e-3), "total {total}, ext {ext}");
        }
    }

    #[test]
    fn refinement_changes_little() {
        let k = 5.0;
        let curve = BoundaryCurve::kite(Point::new(0.0, 0.0), 1.0).unwrap();
        let parts = [(curve, BoundaryCondition::Dirichlet)];
        let coarse = ObstacleSolver::from_components(k, &parts, 96).unwrap();
        let fine = ObstacleSolver::from_components(k, &parts, 192).unwrap();
        let inc = IncidentField::plane_wave_angle(5.8);
        let obs = [0.0, 0.9, 3.7];
        let fc = coarse
            .far_field(&coarse.solve(&inc).unwrap(), &obs)
            .unwrap();
        let ff = fine.far_field(&fine.solve(&inc).unwrap(), &obs).unwrap();
        for i in 0..obs.len() {
            assert!((fc[i] - ff[i]).norm() < 1e-9, "diff {:e}", (fc[i] - ff[i]).norm());
        }
    }

    #[test]
    fn variable_impedance_keeps_reciprocity() {
        let curve = BoundaryCurve::kite(Point::new(0.0, 0.0), 0.8).unwrap();
        let bc = BoundaryCondition::Impedance(ImpedanceProfile::TrigPolynomial {
            mean: Complex64::new(2.0, 0.5),
            cos_coeffs: vec![Complex64::new(0.6, 0.0)],
            sin_coeffs: vec![Complex64::new(0.0, 0.4)],
        });
        let solver = ObstacleSolver::from_components(3.0, &[(curve, bc)], 128).unwrap();
        let grid = DirectionGrid::full(24).unwrap();
        let f = solver.multistatic(&grid).unwrap();
        let defect = f.reciprocity_defect().unwrap();
        assert!(defect < 1e-8 * f.max_abs(), "defect {defect:e}");
    }

    #[test]
    fn mixed_reciprocity_relates_point_source_and_plane_wave() {
        // Far field of the response to a point source at z, observed at x̂,
        // equals γ₂ times the plane-wave (direction −x̂) scattered field
        // at z.
        let k = 2.0;
        let solver = disk_solver(k, 1.0, Point::new(0.0, 0.0), 128);
        let z = Point::new(2.5, 0.7);
        let phi_pt = solver.solve(&IncidentField::point_source(z)).unwrap();
        for &obs in &[0.4, 1.9, 3.3] {
            let lhs = solver.far_field(&phi_pt, &[obs]).unwrap()[0];
            let phi_pw = solver
                .solve(&IncidentField::plane_wave(-unit_dir(obs)).unwrap())
                .unwrap();
            let rhs = gamma2(k) * solver.scattered_at(&phi_pw, z).unwrap();
            assert!(
                (lhs - rhs).norm() < 1e-10,
                "obs {obs}: {:e}",
                (lhs - rhs).norm()
            );
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let curve = BoundaryCurve::circle(Point::new(0.0, 0.0), 1.0).unwrap();
        let parts = [(curve, BoundaryCondition::Dirichlet)];
        assert!(ObstacleSolver::from_components(2.0, &parts, 31).is_err());
        assert!(ObstacleSolver::from_components(-1.0, &parts, 64).is_err());
        assert!(IncidentField::plane_wave(Point::new(0.5, 0.5)).is_err());
        let solver = ObstacleSolver::from_components(2.0, &parts, 64).unwrap();
        let short = BoundaryDensity {
            values: DVector::zeros(12),
        };
        assert!(solver.far_field(&short, &[0.0]).is_err());
    }

    #[test]
    fn scene_solver_includes_the_ball() {
        let scene = kite_ball_scene();
        let with_ball = ObstacleSolver::for_scene(&scene, 5.0, 64).unwrap();
        assert_eq!(with_ball.node_count(), 128);
        let inc = IncidentField::plane_wave_angle(0.0);
        let f_scene = with_ball
            .far_field(&with_ball.solve(&inc).unwrap(), &[2.0])
            .unwrap()[0];
        // Dropping the ball changes the far field measurably.
        let kite_only = ObstacleSolver::from_components(
            5.0,
            &[(
                BoundaryCurve::kite(Point::new(0.0, 0.0), 1.0).unwrap(),
                BoundaryCondition::Dirichlet,
            )],
            64,
        )
        .unwrap();
        let f_kite = kite_only
            .far_field(&kite_only.solve(&inc).unwrap(), &[2.0])
            .unwrap()[0];
        assert!((f_scene - f_kite).norm() > 1e-3);
    }
}
