//! Phaseless measurement synthesis: far-field moduli for single plane
//! waves and for superpositions with a fixed reference incidence `d₀`,
//! plus the translation-invariance diagnostics that motivate the
//! superposition data.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::farfield::{parse_f64, parse_usize, Aperture, DirectionGrid, FarFieldMatrix};
use crate::geometry::Point;
use crate::Result;

/// Moduli of far-field data: singles `|F(x̂_m, d_n)|`, the reference column
/// `|F(x̂_m, d₀)|`, and superpositions `|F(x̂_m, d_n) + F(x̂_m, d₀)|`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaselessDataset {
    pub k: f64,
    pub grid: DirectionGrid,
    pub d0_index: usize,
    pub noise_level: f64,
    pub seed: u64,
    pub mod_single: DMatrix<f64>,
    pub mod_ref: DVector<f64>,
    pub mod_super: DMatrix<f64>,
}

impl PhaselessDataset {
    pub fn d0_angle(&self) -> f64 {
        self.grid.inc_angle(self.d0_index)
    }

    /// Both noiseless triangle inequalities, worst slack over all entries
    /// (negative means satisfied):
    /// `|super − single| ≤ ref` and `super ≤ single + ref`.
    pub fn triangle_defect(&self) -> f64 {
        let m = self.grid.len();
        let mut worst = f64::NEG_INFINITY;
        for i in 0..m {
            for j in 0..m {
                let s = self.mod_single[(i, j)];
                let p = self.mod_super[(i, j)];
                let r = self.mod_ref[i];
                worst = worst.max((p - s).abs() - r).max(p - s - r);
            }
        }
        worst
    }
}

/// Build the phaseless dataset of a far-field matrix.  With
/// `noise_level > 0` every stored modulus is multiplied by an independent
/// `1 + noise_level·U[−1,1]` factor drawn from a ChaCha stream seeded with
/// `seed` (order: singles row-major, then the reference column, then
/// superpositions row-major), so noisy datasets are bit-reproducible.
pub fn synthesize_dataset(
    f: &FarFieldMatrix,
    d0_index: usize,
    noise_level: f64,
    seed: u64,
) -> Result<PhaselessDataset> {
    let m = f.grid.len();
    if d0_index >= m {
        return Err(Error::GridMismatch(format!(
            "reference incidence index {d0_index} is off the {m}-direction grid"
        )));
    }
    if !(0.0..1.0).contains(&noise_level) {
        return Err(Error::InvalidParameter(format!(
            "noise level must lie in [0, 1), got {noise_level}"
        )));
    }
    let mut mod_single = DMatrix::zeros(m, m);
    let mut mod_ref = DVector::zeros(m);
    let mut mod_super = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            mod_single[(i, j)] = f.data[(i, j)].norm();
        }
        mod_ref[i] = f.data[(i, d0_index)].norm();
        for j in 0..m {
            mod_super[(i, j)] = (f.data[(i, j)] + f.data[(i, d0_index)]).norm();
        }
    }
    if noise_level > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut jitter = |v: &mut f64| {
            let u: f64 = rng.gen::<f64>() * 2.0 - 1.0;
            *v *= 1.0 + noise_level * u;
        };
        for i in 0..m {
            for j in 0..m {
                jitter(&mut mod_single[(i, j)]);
            }
        }
        for i in 0..m {
            jitter(&mut mod_ref[i]);
        }
        for i in 0..m {
            for j in 0..m {
                jitter(&mut mod_super[(i, j)]);
            }
        }
    }
    Ok(PhaselessDataset {
        k: f.k,
        grid: f.grid.clone(),
        d0_index,
        noise_level,
        seed,
        mod_single,
        mod_ref,
        mod_super,
    })
}

/// Far field of the scene translated by `z`:
/// `F_z(x̂, d) = e^{ik(d − x̂)·z} F(x̂, d)`.
pub fn translate_farfield(f: &FarFieldMatrix, z: Point) -> FarFieldMatrix {
    let m = f.grid.len();
    let mut data = f.data.clone();
    for i in 0..m {
        for j in 0..m {
            let factor = crate::analytic::translation_factor(
                f.k,
                z,
                f.grid.obs_angle(i),
                f.grid.inc_angle(j),
            );
            data[(i, j)] *= factor;
        }
    }
    FarFieldMatrix {
        k: f.k,
        grid: f.grid.clone(),
        data,
    }
}

/// How strongly superposition moduli with reference `d₀` distinguish the
/// scene from its translate by `z`: max entrywise difference of
/// `|F_z(x̂,d) + F_z(x̂,d₀)|` and `|F(x̂,d) + F(x̂,d₀)|`.
pub fn invariance_gap(f: &FarFieldMatrix, z: Point, d0_index: usize) -> Result<f64> {
    let m = f.grid.len();
    if d0_index >= m {
        return Err(Error::GridMismatch(format!(
            "reference incidence index {d0_index} is off the {m}-direction grid"
        )));
    }
    let fz = translate_farfield(f, z);
    let mut gap = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let a = (fz.data[(i, j)] + fz.data[(i, d0_index)]).norm();
            let b = (f.data[(i, j)] + f.data[(i, d0_index)]).norm();
            gap = gap.max((a - b).abs());
        }
    }
    Ok(gap)
}

/// Single-incidence analogue of [`invariance_gap`]: always at rounding
/// level, demonstrating that plain moduli cannot see translations.
pub fn single_invariance_gap(f: &FarFieldMatrix, z: Point) -> f64 {
    let fz = translate_farfield(f, z);
    let m = f.grid.len();
    let mut gap = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            gap = gap.max((fz.data[(i, j)].norm() - f.data[(i, j)].norm()).abs());
        }
    }
    gap
}

fn write_header<W: Write>(
    d: &PhaselessDataset,
    section: &str,
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "# phaseless {section}")?;
    writeln!(w, "# k {}", d.k)?;
    let ap = match d.grid.aperture() {
        Aperture::Full => "full",
        Aperture::Half => "half",
    };
    writeln!(w, "# aperture {ap}")?;
    writeln!(w, "# size {}", d.grid.len())?;
    writeln!(w, "# d0 {}", d.d0_index)?;
    writeln!(w, "# noise {}", d.noise_level)?;
    writeln!(w, "# seed {}", d.seed)
}

impl PhaselessDataset {
    /// Write the dataset as a CSV triplet with a common header.
    pub fn write_csv<W1: Write, W2: Write, W3: Write>(
        &self,
        mut single: W1,
        mut reference: W2,
        mut superpos: W3,
    ) -> Result<()> {
        let m = self.grid.len();
        write_header(self, "single", &mut single)?;
        writeln!(single, "m,n,value")?;
        for i in 0..m {
            for j in 0..m {
                writeln!(single, "{i},{j},{}", self.mod_single[(i, j)])?;
            }
        }
        write_header(self, "ref", &mut reference)?;
        writeln!(reference, "m,value")?;
        for i in 0..m {
            writeln!(reference, "{i},{}", self.mod_ref[i])?;
        }
        write_header(self, "super", &mut superpos)?;
        writeln!(superpos, "m,n,value")?;
        for i in 0..m {
            for j in 0..m {
                writeln!(superpos, "{i},{j},{}", self.mod_super[(i, j)])?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R1: BufRead, R2: BufRead, R3: BufRead>(
        single: R1,
        reference: R2,
        superpos: R3,
    ) -> Result<Self> {
        let (h1, singles) = read_section(single, "single", 3)?;
        let (h2, refs) = read_section(reference, "ref", 2)?;
        let (h3, supers) = read_section(superpos, "super", 3)?;
        if h1 != h2 || h1 != h3 {
            return Err(Error::Format(
                "phaseless CSV triplet headers disagree".into(),
            ));
        }
        let m = h1.size;
        let grid = match h1.aperture {
            Aperture::Full => DirectionGrid::full(m)?,
            Aperture::Half => DirectionGrid::half(m)?,
        };
        let mut mod_single = DMatrix::zeros(m, m);
        let mut mod_super = DMatrix::zeros(m, m);
        let mut mod_ref = DVector::zeros(m);
        if singles.len() != m * m || supers.len() != m * m || refs.len() != m {
            return Err(Error::Format("phaseless CSV triplet is incomplete".into()));
        }
        for row in singles {
            mod_single[(index(row[0], m)?, index(row[1], m)?)] = row[2];
        }
        for row in supers {
            mod_super[(index(row[0], m)?, index(row[1], m)?)] = row[2];
        }
        for row in refs {
            mod_ref[index(row[0], m)?] = row[1];
        }
        if mod_single.iter().chain(mod_super.iter()).any(|&v| v < 0.0)
            || mod_ref.iter().any(|&v| v < 0.0)
        {
            return Err(Error::Format("phaseless moduli must be nonnegative".into()));
        }
        Ok(PhaselessDataset {
            k: h1.k,
            grid,
            d0_index: h1.d0,
            noise_level: h1.noise,
            seed: h1.seed,
            mod_single,
            mod_ref,
            mod_super,
        })
    }
}

#[derive(PartialEq)]
struct Header {
    k: f64,
    aperture: Aperture,
    size: usize,
    d0: usize,
    noise: f64,
    seed: u64,
}

fn read_section<R: BufRead>(r: R, section: &str, cols: usize) -> Result<(Header, Vec<Vec<f64>>)> {
    let mut k = None;
    let mut aperture = None;
    let mut size = None;
    let mut d0 = None;
    let mut noise = None;
    let mut seed = None;
    let mut tagged = false;
    let mut rows = Vec::new();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line == "m,n,value" || line == "m,value" {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut parts = rest.split_whitespace();
            match parts.next() {
                Some("phaseless") => {
                    if parts.next() != Some(section) {
                        return Err(Error::Format(format!(
                            "expected a `{section}` section: {line}"
                        )));
                    }
                    tagged = true;
                }
                Some("k") => k = Some(parse_f64(parts.next().unwrap_or(""))?),
                Some("aperture") => {
                    aperture = Some(match parts.next() {
                        Some("full") => Aperture::Full,
                        Some("half") => Aperture::Half,
                        other => {
                            return Err(Error::Format(format!("unknown aperture {other:?}")))
                        }
                    })
                }
                Some("size") => size = Some(parse_usize(parts.next().unwrap_or(""))?),
                Some("d0") => d0 = Some(parse_usize(parts.next().unwrap_or(""))?),
                Some("noise") => noise = Some(parse_f64(parts.next().unwrap_or(""))?),
                Some("seed") => {
                    seed = Some(
                        parts
                            .next()
                            .unwrap_or("")
                            .parse::<u64>()
                            .map_err(|_| Error::Format("bad seed".into()))?,
                    )
                }
                _ => {}
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(Error::Format(format!("bad phaseless row: {line}")));
        }
        rows.push(fields.iter().map(|s| parse_f64(s)).collect::<Result<_>>()?);
    }
    if !tagged {
        return Err(Error::Format(format!("missing `phaseless {section}` tag")));
    }
    let header = Header {
        k: k.ok_or_else(|| Error::Format("missing k header".into()))?,
        aperture: aperture.ok_or_else(|| Error::Format("missing aperture header".into()))?,
        size: size.ok_or_else(|| Error::Format("missing size header".into()))?,
        d0: d0.ok_or_else(|| Error::Format("missing d0 header".into()))?,
        noise: noise.ok_or_else(|| Error::Format("missing noise header".into()))?,
        seed: seed.ok_or_else(|| Error::Format("missing seed header".into()))?,
    };
    Ok((header, rows))
}

fn index(v: f64, m: usize) -> Result<usize> {
    let i = v as usize;
    if i as f64 != v || i >= m {
        return Err(Error::Format(format!("bad index {v}")));
    }
    Ok(i)
}
