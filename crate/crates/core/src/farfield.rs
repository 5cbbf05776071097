//! Direction grids, the multistatic far-field matrix, and its on-disk
//! format.
//!
//! Far fields follow the convention `u^s(x) ~ (e^{ik|x|}/√|x|) u^∞(x̂)`, so
//! the far-field kernel of the fundamental solution is `γ₂ e^{−ik x̂·y}` with
//! `γ₂ = e^{iπ/4}/√(8πk)`.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::Error;
use crate::geometry::{unit_dir, Point};
use crate::Result;

/// `γ₂ = e^{iπ/4}/√(8πk)` — the 2D far-field normalization constant.
pub fn gamma2(k: f64) -> Complex64 {
    Complex64::new(0.0, std::f64::consts::FRAC_PI_4).exp()
        / (8.0 * std::f64::consts::PI * k).sqrt()
}

/// Far field of a point source at `z`: `γ₂ e^{−ik x̂·z}` (the right-hand
/// side of the sampling-method equation).
pub fn point_source_farfield(k: f64, z: Point, obs_angle: f64) -> Complex64 {
    gamma2(k) * (-Complex64::i() * k * unit_dir(obs_angle).dot(&z)).exp()
}

/// Aperture convention of a paired observation/incidence grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aperture {
    /// Observation and incidence both sweep the full circle on the same
    /// angles `2πm/M`.
    Full,
    /// Upward observation `π(m+1/2)/M ∈ (0,π)`, downward incidence obtained
    /// by adding `π` (rough-surface scenes).
    Half,
}

/// Matched observation/incidence direction grids.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionGrid {
    aperture: Aperture,
    size: usize,
}

impl DirectionGrid {
    pub fn full(size: usize) -> Result<Self> {
        if size < 4 {
            return Err(Error::InvalidParameter(format!(
                "full direction grid needs at least 4 directions, got {size}"
            )));
        }
        Ok(DirectionGrid {
            aperture: Aperture::Full,
            size,
        })
    }

    pub fn half(size: usize) -> Result<Self> {
        if size < 4 {
            return Err(Error::InvalidParameter(format!(
                "half direction grid needs at least 4 directions, got {size}"
            )));
        }
        Ok(DirectionGrid {
            aperture: Aperture::Half,
            size,
        })
    }

    pub fn aperture(&self) -> Aperture {
        self.aperture
    }

    /// Number of directions per grid (observation count = incidence count).
    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn obs_angle(&self, m: usize) -> f64 {
        match self.aperture {
            Aperture::Full => 2.0 * std::f64::consts::PI * m as f64 / self.size as f64,
            Aperture::Half => std::f64::consts::PI * (m as f64 + 0.5) / self.size as f64,
        }
    }

    pub fn inc_angle(&self, n: usize) -> f64 {
        match self.aperture {
            Aperture::Full => self.obs_angle(n),
            Aperture::Half => self.obs_angle(n) + std::f64::consts::PI,
        }
    }

    pub fn obs_dir(&self, m: usize) -> Point {
        unit_dir(self.obs_angle(m))
    }

    pub fn inc_dir(&self, n: usize) -> Point {
        unit_dir(self.inc_angle(n))
    }

    pub fn obs_angles(&self) -> Vec<f64> {
        (0..self.size).map(|m| self.obs_angle(m)).collect()
    }

    pub fn inc_angles(&self) -> Vec<f64> {
        (0..self.size).map(|n| self.inc_angle(n)).collect()
    }

    /// Angular weight of one incidence direction (trapezoid over the
    /// aperture).
    pub fn inc_weight(&self) -> f64 {
        match self.aperture {
            Aperture::Full => 2.0 * std::f64::consts::PI / self.size as f64,
            Aperture::Half => std::f64::consts::PI / self.size as f64,
        }
    }

    /// Index pair `(m*, n*)` such that reciprocity predicts
    /// `F[m, n] = F[m*, n*]`: observation `−d_n`, incidence `−x̂_m`.
    pub fn reciprocal_pair(&self, m: usize, n: usize) -> Result<(usize, usize)> {
        match self.aperture {
            Aperture::Full => {
                if self.size % 2 != 0 {
                    return Err(Error::GridMismatch(format!(
                        "reciprocal pairing on a full grid needs an even direction count, got {}",
                        self.size
                    )));
                }
                let half = self.size / 2;
                Ok(((n + half) % self.size, (m + half) % self.size))
            }
            // Upward −d_n has the observation angle of index n; downward
            // −x̂_m has the incidence angle of index m.
            Aperture::Half => Ok((n, m)),
        }
    }
}

/// Multistatic far-field samples `F[m, n] = u^∞(x̂_m, d_n)` at one
/// wavenumber.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldMatrix {
    pub k: f64,
    pub grid: DirectionGrid,
    pub data: DMatrix<Complex64>,
}

impl FarFieldMatrix {
    pub fn new(k: f64, grid: DirectionGrid, data: DMatrix<Complex64>) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "wavenumber must be positive, got {k}"
            )));
        }
        if data.nrows() != grid.len() || data.ncols() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "matrix is {}x{} but the grid has {} directions",
                data.nrows(),
                data.ncols(),
                grid.len()
            )));
        }
        if data.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidParameter(
                "far-field matrix contains non-finite entries".into(),
            ));
        }
        Ok(FarFieldMatrix { k, grid, data })
    }

    /// Largest modulus over all entries.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Entrywise multiplication by a constant (e.g. a gauge factor).
    pub fn scaled(&self, c: Complex64) -> Self {
        FarFieldMatrix {
            k: self.k,
            grid: self.grid.clone(),
            data: self.data.map(|v| c * v),
        }
    }

    /// Entrywise conjugate.
    pub fn conjugated(&self) -> Self {
        FarFieldMatrix {
            k: self.k,
            grid: self.grid.clone(),
            data: self.data.map(|v| v.conj()),
        }
    }

    /// Max deviation from the reciprocity relation
    /// `u^∞(x̂,d) = u^∞(−d,−x̂)` over all entries.
    pub fn reciprocity_defect(&self) -> Result<f64> {
        let m = self.grid.len();
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                let (ri, rj) = self.grid.reciprocal_pair(i, j)?;
                worst = worst.max((self.data[(i, j)] - self.data[(ri, rj)]).norm());
            }
        }
        Ok(worst)
    }

    /// Per-incidence `(scattered power, extinction)` pairs of the optical
    /// theorem `∫|u^∞|²dθ = −√(8π/k)·Re[e^{iπ/4} u^∞(d,d)]`; equality for
    /// non-absorbing scatterers, `≤` with absorption.  Full aperture only.
    pub fn cross_section_balance(&self) -> Result<Vec<(f64, f64)>> {
        if self.grid.aperture() != Aperture::Full {
            return Err(Error::GridMismatch(
                "cross-section balance needs the full aperture".into(),
            ));
        }
        let m = self.grid.len();
        let dtheta = 2.0 * std::f64::consts::PI / m as f64;
        let phase = Complex64::new(0.0, std::f64::consts::FRAC_PI_4).exp();
        let scale = -(8.0 * std::f64::consts::PI / self.k).sqrt();
        Ok((0..m)
            .map(|j| {
                let total: f64 =
                    (0..m).map(|i| self.data[(i, j)].norm_sqr()).sum::<f64>() * dtheta;
                let ext = scale * (phase * self.data[(j, j)]).re;
                (total, ext)
            })
            .collect())
    }

    /// Plain-text export: `#`-prefixed header, then one `m,n,re,im` row per
    /// entry.  Floats use the shortest round-trip form, so import is
    /// bit-exact.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# farfield")?;
        writeln!(w, "# k {}", self.k)?;
        let ap = match self.grid.aperture() {
            Aperture::Full => "full",
            Aperture::Half => "half",
        };
        writeln!(w, "# aperture {ap}")?;
        writeln!(w, "# size {}", self.grid.len())?;
        writeln!(w, "m,n,re,im")?;
        for m in 0..self.grid.len() {
            for n in 0..self.grid.len() {
                let v = self.data[(m, n)];
                writeln!(w, "{m},{n},{},{}", v.re, v.im)?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut k = None;
        let mut aperture = None;
        let mut size = None;
        let mut entries: Vec<(usize, usize, Complex64)> = Vec::new();
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line == "m,n,re,im" {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut parts = rest.split_whitespace();
                match parts.next() {
                    Some("k") => {
                        k = Some(parse_f64(parts.next().unwrap_or(""))?);
                    }
                    Some("aperture") => {
                        aperture = Some(match parts.next() {
                            Some("full") => Aperture::Full,
                            Some("half") => Aperture::Half,
                            other => {
                                return Err(Error::Format(format!(
                                    "unknown aperture {other:?}"
                                )))
                            }
                        });
                    }
                    Some("size") => {
                        size = Some(parse_usize(parts.next().unwrap_or(""))?);
                    }
                    _ => {}
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(Error::Format(format!("bad far-field row: {line}")));
            }
            entries.push((
                parse_usize(fields[0])?,
                parse_usize(fields[1])?,
                Complex64::new(parse_f64(fields[2])?, parse_f64(fields[3])?),
            ));
        }
        let k = k.ok_or_else(|| Error::Format("missing k header".into()))?;
        let size = size.ok_or_else(|| Error::Format("missing size header".into()))?;
        let grid = match aperture.ok_or_else(|| Error::Format("missing aperture header".into()))? {
            Aperture::Full => DirectionGrid::full(size)?,
            Aperture::Half => DirectionGrid::half(size)?,
        };
        if entries.len() != size * size {
            return Err(Error::Format(format!(
                "expected {} entries, found {}",
                size * size,
                entries.len()
            )));
        }
        let mut data = DMatrix::zeros(size, size);
        for (m, n, v) in entries {
            if m >= size || n >= size {
                return Err(Error::Format(format!("index ({m},{n}) out of range")));
            }
            data[(m, n)] = v;
        }
        FarFieldMatrix::new(k, grid, data)
    }
}

pub(crate) fn parse_f64(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Format(format!("bad float: {s:?}")))
}

pub(crate) fn parse_usize(s: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::Format(format!("bad integer: {s:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::soundsoft_disk_farfield;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn full_grid_layout() {
        let g = DirectionGrid::full(8).unwrap();
        assert_eq!(g.len(), 8);
        assert_eq!(g.obs_angle(0), 0.0);
        assert!((g.obs_angle(2) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(g.inc_angle(3), g.obs_angle(3));
        assert!((g.inc_weight() - std::f64::consts::PI / 4.0).abs() < 1e-15);
        // Reciprocal pair: obs −d_n, inc −x̂_m.
        let (rm, rn) = g.reciprocal_pair(1, 6).unwrap();
        assert_eq!((rm, rn), (2, 5));
        let td = g.obs_dir(rm) + g.inc_dir(6);
        assert!(td.norm() < 1e-15, "obs of pair is −d_n");
    }

    #[test]
    fn half_grid_layout() {
        let g = DirectionGrid::half(16).unwrap();
        for m in 0..16 {
            let a = g.obs_angle(m);
            assert!(a > 0.0 && a < std::f64::consts::PI);
            assert!(g.obs_dir(m).y > 0.0, "observations point up");
            assert!(g.inc_dir(m).y < 0.0, "incidences point down");
        }
        assert!((g.inc_weight() - std::f64::consts::PI / 16.0).abs() < 1e-15);
        // Half-aperture reciprocity swaps the index roles.
        assert_eq!(g.reciprocal_pair(3, 11).unwrap(), (11, 3));
        let (rm, rn) = g.reciprocal_pair(3, 11).unwrap();
        assert!((g.obs_dir(rm) + g.inc_dir(11)).norm() < 1e-15);
        assert!((g.inc_dir(rn) + g.obs_dir(3)).norm() < 1e-15);
    }

    #[test]
    fn odd_full_grid_has_no_reciprocal_pairing() {
        let g = DirectionGrid::full(9).unwrap();
        assert!(g.reciprocal_pair(0, 0).is_err());
    }

    #[test]
    fn gamma2_matches_fundamental_solution_asymptotics() {
        // Φ(x, z) ~ (e^{ik|x|}/√|x|)·γ₂ e^{−ik x̂·z} for large |x|.
        let k = 2.7;
        let z = Point::new(0.4, -0.9);
        let r = 5.0e3;
        for &obs in &[0.0, 1.0, 4.4] {
            let x = r * unit_dir(obs);
            let phi = crate::specfun::fundamental_solution_2d(k, x, z).unwrap();
            let pred = (Complex64::i() * k * r).exp() / r.sqrt()
                * point_source_farfield(k, z, obs);
            let rel = (phi - pred).norm() / phi.norm();
            assert!(rel < 1e-3, "rel {rel:e} at obs {obs}");
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let grid = DirectionGrid::full(6).unwrap();
        let data = DMatrix::from_fn(6, 6, |_, _| {
            Complex64::new(rng.gen::<f64>() * 2e3 - 1e3, rng.gen::<f64>() * 2.0 - 1.0)
        });
        let f = FarFieldMatrix::new(3.25, grid, data).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let g = FarFieldMatrix::read_csv(&buf[..]).unwrap();
        assert_eq!(f, g);

        let grid = DirectionGrid::half(5).unwrap();
        let data = DMatrix::from_fn(5, 5, |_, _| {
            Complex64::new(rng.gen::<f64>(), rng.gen::<f64>())
        });
        let f = FarFieldMatrix::new(1.0, grid, data).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        assert_eq!(f, FarFieldMatrix::read_csv(&buf[..]).unwrap());
    }

    #[test]
    fn malformed_csv_rejected() {
        assert!(FarFieldMatrix::read_csv(&b"# farfield\n# k 1\n"[..]).is_err());
        let text = b"# farfield\n# k 1\n# aperture full\n# size 4\n0,0,1.0,nope\n";
        assert!(FarFieldMatrix::read_csv(&text[..]).is_err());
    }

    fn series_matrix(k: f64, m: usize) -> FarFieldMatrix {
        let grid = DirectionGrid::full(m).unwrap();
        let data = DMatrix::from_fn(m, m, |i, j| {
            soundsoft_disk_farfield(
                k,
                1.0,
                Point::new(0.0, 0.0),
                grid.obs_angle(i),
                grid.inc_angle(j),
            )
        });
        FarFieldMatrix::new(k, grid, data).unwrap()
    }

    #[test]
    fn series_matrix_passes_reciprocity_and_balance() {
        let f = series_matrix(5.0, 64);
        assert!(f.reciprocity_defect().unwrap() < 1e-12);
        for (total, ext) in f.cross_section_balance().unwrap() {
            assert!((total - ext).abs() < 1e-10 * total.max(1.0));
        }
    }

    #[test]
    fn scaling_and_conjugation() {
        let f = series_matrix(5.0, 8);
        let c = Complex64::from_polar(1.0, 0.83);
        let g = f.scaled(c);
        assert!((g.data[(3, 5)] - c * f.data[(3, 5)]).norm() < 1e-15);
        let h = f.conjugated();
        assert_eq!(h.data[(2, 7)], f.data[(2, 7)].conj());
        assert!((f.max_abs() - g.max_abs()).abs() < 1e-13);
    }
}
