//! Linear sampling reconstruction from a phased far-field matrix.
//!
//! For a probe point `z` the far-field equation `(F g)(x̂) = Φ^∞(x̂, z)`
//! asks for an incident-direction density `g` whose scattered superposition
//! looks like a point source at `z`.  The equation is severely ill posed;
//! `‖g_z‖` stays moderate for `z` inside the scatterer and blows up
//! outside, so `1/‖g_z‖` works as a support indicator.  We discretize the
//! incidence integral with the trapezoid weight of the direction grid,
//! regularize by Tikhonov filtering on a singular value decomposition, and
//! pick the parameter by Morozov's discrepancy principle with a small floor
//! so the noiseless limit stays well posed.
//!
//! Full-aperture data uses the free-space point-source far field
//! `γ₂ e^{−ik x̂·z}`.  Half-aperture (rough-surface) data uses the
//! sound-soft half-plane analogue `γ₂ (e^{−ik x̂·z} − e^{−ik x̂·z′})` with
//! `z′` the mirror image of `z`; there the indicator is only a localization
//! heuristic (it feeds the conjugation-branch probe, not a reconstruction).
//!
//! The factorization is computed once per matrix and shared read-only
//! across probes, so an indicator map is one SVD plus `O(M²)` work per
//! probe point.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::Error;
use crate::farfield::{parse_f64, parse_usize, point_source_farfield, Aperture, FarFieldMatrix};
use crate::geometry::Point;
use crate::Result;

/// Singular values below this are treated as numerically zero.
const RANK_EPS: f64 = 1e-14;

/// Noiseless floor, relative to the largest singular value: the Morozov
/// level never drops below `1e-8·σ_max`, and neither does the Tikhonov
/// parameter.  The second half matters for probes outside the scatterer,
/// where the far-field equation is unsolvable and the discrepancy can never
/// reach its level: without a parameter floor the bisection would dive to
/// α ≈ 0 and invert rounding-noise singular modes, making `‖g_z‖` depend on
/// the last bits of the factorization.
const NOISE_FLOOR: f64 = 1e-8;

/// Diagnostics of one regularized probe solve.
#[derive(Debug, Clone, Copy)]
pub struct LsmSolution {
    /// Norm of the regularized density `g_z`.
    pub g_norm: f64,
    /// Tikhonov parameter chosen by the discrepancy principle.
    pub regularization: f64,
    /// Residual `‖F g_z − Φ^∞(·, z)‖` at that parameter.
    pub discrepancy: f64,
}

/// Factorized far-field operator, reusable across many probe points.
pub struct LsmSolver {
    k: f64,
    aperture: Aperture,
    obs_angles: Vec<f64>,
    /// Left singular vectors of the quadrature-weighted operator.
    u: DMatrix<Complex64>,
    /// Singular values, descending.
    sigma: Vec<f64>,
    sigma_max: f64,
}

impl LsmSolver {
    /// Factorize the incidence-weighted operator `A = F · Δθ`.
    pub fn new(f: &FarFieldMatrix) -> Result<Self> {
        let w = f.grid.inc_weight();
        let a = f.data.map(|v| v * w);
        let svd = a.svd(true, false);
        let u = svd
            .u
            .ok_or_else(|| Error::SolverFailure("SVD did not return left vectors".into()))?;
        let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
        let sigma_max = sigma.iter().copied().fold(0.0, f64::max);
        if sigma_max < RANK_EPS {
            return Err(Error::DegenerateOperator(format!(
                "all {} singular values are below {RANK_EPS:.0e}; the far-field \
                 operator carries no usable information",
                sigma.len()
            )));
        }
        Ok(LsmSolver {
            k: f.k,
            aperture: f.grid.aperture(),
            obs_angles: f.grid.obs_angles(),
            u,
            sigma,
            sigma_max,
        })
    }

    /// Largest singular value of the weighted operator.
    pub fn operator_norm(&self) -> f64 {
        self.sigma_max
    }

    /// Point-source right-hand side sampled on the observation grid.
    fn rhs(&self, z: Point) -> DVector<Complex64> {
        DVector::from_iterator(
            self.obs_angles.len(),
            self.obs_angles.iter().map(|&a| match self.aperture {
                Aperture::Full => point_source_farfield(self.k, z, a),
                // Image-subtracted test function of the sound-soft line.
                Aperture::Half => {
                    point_source_farfield(self.k, z, a)
                        - point_source_farfield(self.k, Point::new(z.x, -z.y), a)
                }
            }),
        )
    }

    /// Solve the regularized far-field equation at probe `z` with (relative)
    /// noise level `delta`; the Morozov level is
    /// `max(delta·‖Φ^∞(·,z)‖, 1e-8·σ_max)`.
    pub fn solve(&self, z: Point, delta: f64) -> Result<LsmSolution> {
        if !z.x.is_finite() || !z.y.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "probe point must be finite, got ({}, {})",
                z.x, z.y
            )));
        }
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise level must be a nonnegative finite number, got {delta}"
            )));
        }
        let rhs = self.rhs(z);
        let rhs_norm2 = rhs.norm_squared();
        // Coefficients of the rhs in the left singular basis.
        let b = self.u.ad_mul(&rhs);
        let b2: Vec<f64> = b.iter().map(|v| v.norm_sqr()).collect();
        // Energy outside the numerical range of the operator: irreducible
        // residual floor (zero for a full-rank square matrix).
        let perp2 = (rhs_norm2 - b2.iter().sum::<f64>()).max(0.0);

        // Residual and solution norms of the Tikhonov-filtered solve.
        let eval = |alpha: f64| -> (f64, f64) {
            let a2 = alpha * alpha;
            let mut res2 = perp2;
            let mut norm2 = 0.0;
            for (&s, &c2) in self.sigma.iter().zip(&b2) {
                let den = s * s + a2;
                res2 += (a2 / den) * (a2 / den) * c2;
                norm2 += (s / den) * (s / den) * c2;
            }
            (res2, norm2)
        };

        let level = (delta * rhs_norm2.sqrt()).max(NOISE_FLOOR * self.sigma_max);
        let level2 = level * level;
        // The residual grows monotonically with alpha; bisect in log scale
        // for the crossing of the discrepancy level.  When the level is
        // unreachable (unsolvable probe), fall back to the parameter floor.
        let mut lo = NOISE_FLOOR * self.sigma_max;
        let mut hi = 1e4 * self.sigma_max;
        let alpha = if eval(lo).0 >= level2 {
            lo
        } else if eval(hi).0 <= level2 {
            hi
        } else {
            for _ in 0..100 {
                let mid = (lo * hi).sqrt();
                if eval(mid).0 < level2 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            (lo * hi).sqrt()
        };
        let (res2, norm2) = eval(alpha);
        Ok(LsmSolution {
            g_norm: norm2.sqrt(),
            regularization: alpha,
            discrepancy: res2.sqrt(),
        })
    }

    /// Indicator value `1/‖g_z‖`.
    pub fn indicator(&self, z: Point, delta: f64) -> Result<f64> {
        let sol = self.solve(z, delta)?;
        let value = 1.0 / sol.g_norm;
        if !value.is_finite() || !(value > 0.0) {
            return Err(Error::Inconsistent(format!(
                "probe at ({}, {}) produced density norm {}; the test function \
                 is degenerate there (on the half-aperture mirror line?)",
                z.x, z.y, sol.g_norm
            )));
        }
        Ok(value)
    }
}

/// One-shot regularized solve at a single probe point.
pub fn lsm_solve(f: &FarFieldMatrix, z: Point, delta: f64) -> Result<LsmSolution> {
    LsmSolver::new(f)?.solve(z, delta)
}

/// Rectangular probe grid with endpoint-inclusive uniform spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingGrid {
    xlim: (f64, f64),
    ylim: (f64, f64),
    nx: usize,
    ny: usize,
}

impl SamplingGrid {
    pub fn new(xlim: (f64, f64), ylim: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        for v in [xlim.0, xlim.1, ylim.0, ylim.1] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(
                    "sampling grid limits must be finite".into(),
                ));
            }
        }
        if !(xlim.0 < xlim.1) || !(ylim.0 < ylim.1) {
            return Err(Error::InvalidParameter(format!(
                "sampling grid limits must be increasing, got x {xlim:?}, y {ylim:?}"
            )));
        }
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidParameter(format!(
                "sampling grid needs at least 2 points per axis, got {nx}x{ny}"
            )));
        }
        Ok(SamplingGrid { xlim, ylim, nx, ny })
    }

    /// Square grid of `n × n` points centered at `center`.
    pub fn centered(center: Point, half_extent: f64, n: usize) -> Result<Self> {
        if !(half_extent > 0.0) || !half_extent.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "half extent must be positive, got {half_extent}"
            )));
        }
        SamplingGrid::new(
            (center.x - half_extent, center.x + half_extent),
            (center.y - half_extent, center.y + half_extent),
            n,
            n,
        )
    }

    /// Same shape, shifted by `z`.
    pub fn translated(&self, z: Point) -> SamplingGrid {
        SamplingGrid {
            xlim: (self.xlim.0 + z.x, self.xlim.1 + z.x),
            ylim: (self.ylim.0 + z.y, self.ylim.1 + z.y),
            nx: self.nx,
            ny: self.ny,
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn xlim(&self) -> (f64, f64) {
        self.xlim
    }

    pub fn ylim(&self) -> (f64, f64) {
        self.ylim
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x_coord(&self, ix: usize) -> f64 {
        self.xlim.0 + (self.xlim.1 - self.xlim.0) * ix as f64 / (self.nx - 1) as f64
    }

    pub fn y_coord(&self, iy: usize) -> f64 {
        self.ylim.0 + (self.ylim.1 - self.ylim.0) * iy as f64 / (self.ny - 1) as f64
    }

    /// Point of the row-major cell `idx = iy·nx + ix`.
    pub fn point(&self, idx: usize) -> Point {
        Point::new(self.x_coord(idx % self.nx), self.y_coord(idx / self.nx))
    }

    /// Cell `(ix, iy)` nearest to `p` (clamped to the grid).
    pub fn nearest(&self, p: Point) -> (usize, usize) {
        let fx = (p.x - self.xlim.0) / (self.xlim.1 - self.xlim.0) * (self.nx - 1) as f64;
        let fy = (p.y - self.ylim.0) / (self.ylim.1 - self.ylim.0) * (self.ny - 1) as f64;
        let ix = fx.round().clamp(0.0, (self.nx - 1) as f64) as usize;
        let iy = fy.round().clamp(0.0, (self.ny - 1) as f64) as usize;
        (ix, iy)
    }
}

/// Sampling-method indicator `1/‖g_z‖` over a rectangular grid, with the
/// per-point regularization diagnostics.  Storage is row-major with the row
/// index running over `y` (index `iy·nx + ix`).
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorMap {
    pub grid: SamplingGrid,
    pub values: Vec<f64>,
    pub regularization: Vec<f64>,
    pub discrepancy: Vec<f64>,
}

impl IndicatorMap {
    pub fn value_at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.grid.nx + ix]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Indicator value of the grid cell nearest to `p`.
    pub fn value_near(&self, p: Point) -> f64 {
        let (ix, iy) = self.grid.nearest(p);
        self.value_at(ix, iy)
    }

    /// Grid point with the largest indicator value.
    pub fn argmax(&self) -> Point {
        let idx = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        self.grid.point(idx)
    }

    /// Whether `p` falls in the superlevel set
    /// `{ value ≥ frac · max value }` (nearest-cell lookup).
    pub fn superlevel_contains(&self, frac: f64, p: Point) -> bool {
        self.value_near(p) >= frac * self.max_value()
    }

    /// Position of `p`'s cell in the log-scale dynamic range of the map:
    /// `(ln v − ln min)/(ln max − ln min)`, so 0 is the dimmest cell and 1
    /// the brightest.  Indicator values span orders of magnitude (a small
    /// cavity easily outshines a large scatterer on a linear scale), so
    /// containment questions are asked on the log scale.
    pub fn log_level(&self, p: Point) -> f64 {
        let lo = self.min_value().ln();
        let hi = self.max_value().ln();
        if hi > lo {
            (self.value_near(p).ln() - lo) / (hi - lo)
        } else {
            0.0
        }
    }

    /// Log-scale counterpart of [`superlevel_contains`].
    pub fn log_superlevel_contains(&self, frac: f64, p: Point) -> bool {
        self.log_level(p) >= frac
    }

    /// Plain-text raster: `#` headers with the grid extents, then one
    /// `ix,iy,x,y,value,regularization,discrepancy` row per cell in
    /// row-major order.  Floats round-trip bit-exactly.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# indicator")?;
        writeln!(
            w,
            "# xaxis {} {} {}",
            self.grid.xlim.0, self.grid.xlim.1, self.grid.nx
        )?;
        writeln!(
            w,
            "# yaxis {} {} {}",
            self.grid.ylim.0, self.grid.ylim.1, self.grid.ny
        )?;
        writeln!(w, "ix,iy,x,y,value,regularization,discrepancy")?;
        for iy in 0..self.grid.ny {
            for ix in 0..self.grid.nx {
                let i = iy * self.grid.nx + ix;
                writeln!(
                    w,
                    "{ix},{iy},{},{},{},{},{}",
                    self.grid.x_coord(ix),
                    self.grid.y_coord(iy),
                    self.values[i],
                    self.regularization[i],
                    self.discrepancy[i]
                )?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut xaxis = None;
        let mut yaxis = None;
        let mut rows: Vec<(usize, usize, f64, f64, f64)> = Vec::new();
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with("ix,") {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                match parts.first() {
                    Some(&"xaxis") if parts.len() == 4 => {
                        xaxis = Some((
                            parse_f64(parts[1])?,
                            parse_f64(parts[2])?,
                            parse_usize(parts[3])?,
                        ));
                    }
                    Some(&"yaxis") if parts.len() == 4 => {
                        yaxis = Some((
                            parse_f64(parts[1])?,
                            parse_f64(parts[2])?,
                            parse_usize(parts[3])?,
                        ));
                    }
                    _ => {}
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(Error::Format(format!("bad indicator row: {line}")));
            }
            rows.push((
                parse_usize(fields[0])?,
                parse_usize(fields[1])?,
                parse_f64(fields[4])?,
                parse_f64(fields[5])?,
                parse_f64(fields[6])?,
            ));
        }
        let (x0, x1, nx) = xaxis.ok_or_else(|| Error::Format("missing xaxis header".into()))?;
        let (y0, y1, ny) = yaxis.ok_or_else(|| Error::Format("missing yaxis header".into()))?;
        let grid = SamplingGrid::new((x0, x1), (y0, y1), nx, ny)?;
        if rows.len() != grid.len() {
            return Err(Error::Format(format!(
                "expected {} raster rows, found {}",
                grid.len(),
                rows.len()
            )));
        }
        let mut values = vec![f64::NAN; grid.len()];
        let mut regularization = vec![f64::NAN; grid.len()];
        let mut discrepancy = vec![f64::NAN; grid.len()];
        for (ix, iy, v, a, d) in rows {
            if ix >= nx || iy >= ny {
                return Err(Error::Format(format!("cell ({ix},{iy}) out of range")));
            }
            let i = iy * nx + ix;
            values[i] = v;
            regularization[i] = a;
            discrepancy[i] = d;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Format("raster has missing cells".into()));
        }
        Ok(IndicatorMap {
            grid,
            values,
            regularization,
            discrepancy,
        })
    }

    /// SVG heatmap: one unit square per cell, linear grayscale with the
    /// minimum mapped to black and the maximum to white.  Columns left to
    /// right follow increasing `x`; rows top to bottom follow *decreasing*
    /// `y`, so the image is oriented like the scene.
    pub fn write_svg<W: Write>(&self, mut w: W) -> Result<()> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let min = self.min_value();
        let span = self.max_value() - min;
        writeln!(
            w,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" \
             viewBox=\"0 0 {nx} {ny}\" shape-rendering=\"crispEdges\">",
            nx * 8,
            ny * 8
        )?;
        writeln!(
            w,
            "<!-- column c, row r: cell x = {} + c*{}, y = {} + ({})*{}; \
             gray = (value - {min})/{span} -->",
            self.grid.xlim.0,
            (self.grid.xlim.1 - self.grid.xlim.0) / (nx - 1) as f64,
            self.grid.ylim.0,
            ny - 1,
            (self.grid.ylim.1 - self.grid.ylim.0) / (ny - 1) as f64
        )?;
        for r in 0..ny {
            let iy = ny - 1 - r;
            for ix in 0..nx {
                let v = self.value_at(ix, iy);
                let level = if span > 0.0 {
                    (255.0 * (v - min) / span).round().clamp(0.0, 255.0) as u8
                } else {
                    0
                };
                writeln!(
                    w,
                    "<rect x=\"{ix}\" y=\"{r}\" width=\"1\" height=\"1\" \
                     fill=\"rgb({level},{level},{level})\"/>"
                )?;
            }
        }
        writeln!(w, "</svg>")?;
        Ok(())
    }
}

/// Indicator map over `grid`: one factorization, probes in parallel.
pub fn indicator_map(
    f: &FarFieldMatrix,
    grid: &SamplingGrid,
    delta: f64,
) -> Result<IndicatorMap> {
    let solver = LsmSolver::new(f)?;
    let cells: Vec<(f64, f64, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let sol = solver.solve(grid.point(idx), delta)?;
            let value = 1.0 / sol.g_norm;
            if !value.is_finite() || !(value > 0.0) || !(sol.regularization > 0.0) {
                let p = grid.point(idx);
                return Err(Error::Inconsistent(format!(
                    "indicator at ({}, {}) is not a positive finite number",
                    p.x, p.y
                )));
            }
            Ok((value, sol.regularization, sol.discrepancy))
        })
        .collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(cells.len());
    let mut regularization = Vec::with_capacity(cells.len());
    let mut discrepancy = Vec::with_capacity(cells.len());
    for (v, a, d) in cells {
        values.push(v);
        regularization.push(a);
        discrepancy.push(d);
    }
    Ok(IndicatorMap {
        grid: grid.clone(),
        values,
        regularization,
        discrepancy,
    })
}

/// Ratio `indicator(b) / indicator(−b)` — large when the data localizes
/// support near `b` rather than near its origin reflection.  This is the
/// quantity the conjugation-branch test thresholds.
pub fn probe_ratio(f: &FarFieldMatrix, b: Point) -> Result<f64> {
    if b.norm() < 1e-12 {
        return Err(Error::InvalidParameter(
            "branch probe must be away from the origin (it coincides with its \
             reflection there)"
                .into(),
        ));
    }
    let solver = LsmSolver::new(f)?;
    Ok(solver.indicator(b, 0.0)? / solver.indicator(-b, 0.0)?)
}
