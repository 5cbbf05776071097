//! Constructive phase recovery from phaseless superposition data.
//!
//! A [`crate::phaseless::PhaselessDataset`] stores `|F(x̂,d)|`, `|F(x̂,d₀)|`
//! and `|F(x̂,d) + F(x̂,d₀)|` on matched direction grids.  Entrywise these
//! determine the cosine of the relative phase
//! `δ(x̂,d) = arg F(x̂,d) − arg F(x̂,d₀)` through
//!
//! ```text
//! |F + F₀|² = |F|² + |F₀|² + 2 |F| |F₀| cos δ,
//! ```
//!
//! and the recovery pipeline turns this into a full complex matrix:
//!
//! 1. [`relative_phase`] inverts the cosine identity, clamps rounding
//!    overshoot at `±1`, and masks entries whose modulus product is too
//!    small to divide by.
//! 2. [`resolve_signs`] — the cosine leaves `±δ` open per entry.  A greedy
//!    flood fill over the direction grid, visiting the frontier in order of
//!    decreasing decision margin, picks the signs that make `δ` smooth.
//!    One global flip remains free: it is exactly the conjugation
//!    ambiguity, not an artifact of the algorithm.
//! 3. [`absolute_phase`] lifts to absolute phases with reciprocity
//!    `F(x̂,d) = F(−d,−x̂)`: writing `φ(x̂) = arg F(x̂,d₀)`, every entry pair
//!    `(m,n) ↔ (m*,n*)` of the reciprocity involution yields
//!    `φ(m) − φ(m*) = δ(m*,n*) − δ(m,n)`.  The over-determined difference
//!    system is solved in least squares by angular synchronisation: the
//!    phases are read off the leading eigenvector of the Hermitian
//!    consensus matrix `H[m,p] = Σ e^{i(δ(p,q) − δ(m,n))}`.  Negating every
//!    `δ` conjugates the solution, so the two global orientations produce
//!    exactly conjugate candidate matrices.
//! 4. [`disambiguate_branch`] breaks the ambiguity with the known reference
//!    ball at `b`: the physical candidate's sampling indicator localises at
//!    `b`, the conjugate one at the reflected point `−b`.
//! 5. [`fix_global_phase`] (optional) removes the remaining unimodular
//!    constant.  The scattered field is represented by a two-centre
//!    multipole expansion — outgoing cylinder modes about the origin for
//!    the unknown scatterer plus modes about the ball centre — fitted to
//!    the recovered far field, and the sound-soft condition
//!    `u^i + c·u^s = 0` on the ball boundary determines `c` in least
//!    squares.  The origin part converges on the ball boundary exactly when
//!    `|b| − ρ > R`, which is the admissibility gate.
//!
//! Phaseless data cannot see conjugation at all: a far-field matrix and its
//! entrywise conjugate synthesise bit-identical datasets.  The ball prior
//! is therefore the only branch information, and stage 4 reports both probe
//! scores so callers can audit the margin.

use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::Error;
use crate::farfield::{Aperture, DirectionGrid, FarFieldMatrix};
use crate::geometry::{unit_dir, ReferenceBall};
use crate::inversion_lsm::probe_ratio;
use crate::phaseless::PhaselessDataset;
use crate::specfun::hankel1_seq;
use crate::Result;

/// Entries whose modulus product `|F(x̂,d)|·|F(x̂,d₀)|` falls below this
/// fraction of the largest product are masked: dividing by them would turn
/// measurement rounding into arbitrary phases.
const MASK_FRACTION: f64 = 1e-6;

/// Probe-score ratios within this margin of 1 leave the conjugation branch
/// unresolved.
const BRANCH_MARGIN: f64 = 0.1;

/// Accepted departure of the raw gauge constant's modulus from 1.
const GAUGE_MODULUS_TOL: f64 = 0.05;

/// Reciprocity-equation disagreement above this level attaches a warning to
/// the candidate pair (noiseless data sits many orders below).
const CONSISTENCY_WARN: f64 = 1e-6;

/// Expansion orders stop where the outgoing mode grows beyond this factor
/// over `H_0` at the evaluation radius: higher coefficients are fitted from
/// data at noise level and would be amplified by the mode's growth when
/// evaluated near the convergence circle.
const AMPLIFICATION_LIMIT: f64 = 1e5;

/// Tikhonov weight on the two-centre expansion coefficients, scaled per
/// mode by its boundary-evaluation magnitude.  A ball-centred mode is
/// reproducible in the far field by origin modes (translation identity), so
/// the unregularised normal equations are rank-deficient and the
/// minimum-norm solution can park ball energy in origin coefficients that
/// blow up on the near side of the ball boundary.  Pricing each coefficient
/// by the size of its mode on the evaluation circle makes the bounded,
/// physical split the cheapest one while perturbing the fit by only
/// `O(damping²)`.
const SPLIT_DAMPING: f64 = 1e-7;

const POWER_ITERATIONS: usize = 800;

fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

// ---------------------------------------------------------------------------
// stage 1: relative phases from the cosine identity
// ---------------------------------------------------------------------------

/// Entrywise relative phases `δ(x̂_m, d_n)` extracted from a phaseless
/// dataset.  After [`relative_phase`], `delta` holds the non-negative
/// principal value `arccos(cos_delta) ∈ [0,π]`; [`resolve_signs`] rewrites
/// it with resolved signs into `(−π, π]` and fills `sign_confidence`.
#[derive(Debug, Clone)]
pub struct RelativePhaseField {
    pub grid: DirectionGrid,
    pub d0_index: usize,
    /// Cosine of the relative phase, clamped to `[−1, 1]`.
    pub cos_delta: DMatrix<f64>,
    /// Relative phase in `(−π, π]` once signs are resolved.
    pub delta: DMatrix<f64>,
    /// Per-entry sign decision margin in `[0, 1]`; zero until resolved and
    /// on masked entries.
    pub sign_confidence: DMatrix<f64>,
    /// `true` where the entry is reliable enough to carry phase data.
    pub mask: DMatrix<bool>,
    /// Largest overshoot `|raw cosine| − 1` seen before clamping (rounding
    /// level on noiseless data, possibly large on noisy data).
    pub clamp_excess: f64,
    /// Set by [`resolve_signs`]; guards the reciprocity lift.
    pub resolved: bool,
}

impl RelativePhaseField {
    pub fn masked_entries(&self) -> usize {
        self.mask.iter().filter(|m| !**m).count()
    }
}

/// Invert the cosine identity entry by entry.
///
/// Masked entries (tiny modulus product) get `cos_delta = 1`, `delta = 0`
/// and stay out of every later decision; they never produce NaN.
pub fn relative_phase(data: &PhaselessDataset) -> Result<RelativePhaseField> {
    let m = data.grid.len();
    if data.mod_single.nrows() != m
        || data.mod_single.ncols() != m
        || data.mod_super.nrows() != m
        || data.mod_super.ncols() != m
        || data.mod_ref.len() != m
    {
        return Err(Error::GridMismatch(format!(
            "dataset matrices do not match the {m}-direction grid"
        )));
    }
    if data.d0_index >= m {
        return Err(Error::GridMismatch(format!(
            "reference incidence index {} is off the {m}-direction grid",
            data.d0_index
        )));
    }
    let mut denom_max = 0.0_f64;
    for i in 0..m {
        for j in 0..m {
            let d = data.mod_single[(i, j)] * data.mod_ref[i];
            if d.is_finite() {
                denom_max = denom_max.max(d);
            }
        }
    }
    let threshold = MASK_FRACTION * denom_max;
    let mut cos_delta = DMatrix::from_element(m, m, 1.0);
    let mut mask = DMatrix::from_element(m, m, false);
    let mut clamp_excess = 0.0_f64;
    for i in 0..m {
        for j in 0..m {
            let s = data.mod_single[(i, j)];
            let r = data.mod_ref[i];
            let p = data.mod_super[(i, j)];
            let denom = s * r;
            if !(denom.is_finite() && p.is_finite() && denom > threshold && denom > 0.0) {
                continue;
            }
            let raw = (p * p - s * s - r * r) / (2.0 * denom);
            if !raw.is_finite() {
                continue;
            }
            clamp_excess = clamp_excess.max(raw.abs() - 1.0);
            cos_delta[(i, j)] = raw.clamp(-1.0, 1.0);
            mask[(i, j)] = true;
        }
    }
    let delta = cos_delta.map(|c| c.acos());
    Ok(RelativePhaseField {
        grid: data.grid.clone(),
        d0_index: data.d0_index,
        cos_delta,
        delta,
        sign_confidence: DMatrix::zeros(m, m),
        mask,
        clamp_excess: clamp_excess.max(0.0),
        resolved: false,
    })
}

// ---------------------------------------------------------------------------
// stage 2: sign resolution by margin-ordered flood fill
// ---------------------------------------------------------------------------

/// Summary of a sign resolution run.
#[derive(Debug, Clone, Copy)]
pub struct SignResolution {
    /// Seed entry `(m, n)` — the unmasked entry with the largest `|sin δ|`.
    pub seed: (usize, usize),
    /// `|sin δ|` at the seed; near zero means every phase is `0` or `π` and
    /// the sign field carries no information at all.
    pub seed_sin: f64,
    /// Mean decision margin over unmasked entries.
    pub mean_confidence: f64,
    /// `true` when even the seed cannot distinguish `±δ`.
    pub degenerate: bool,
}

/// Entry at offset `(di, dj)` from `(i, j)`: wraps both indices on
/// full-circle grids (the angles are periodic), clips on half-aperture
/// grids.
fn offset(grid: &DirectionGrid, i: usize, j: usize, di: i64, dj: i64) -> Option<(usize, usize)> {
    let m = grid.len() as i64;
    let ni = i as i64 + di;
    let nj = j as i64 + dj;
    if grid.aperture() == Aperture::Full {
        Some((ni.rem_euclid(m) as usize, nj.rem_euclid(m) as usize))
    } else if (0..m).contains(&ni) && (0..m).contains(&nj) {
        Some((ni as usize, nj as usize))
    } else {
        None
    }
}

const DIRECTIONS: [(i64, i64); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

/// Grid adjacency of the entry `(i, j)`: the four axis neighbours.
fn neighbours(grid: &DirectionGrid, i: usize, j: usize) -> Vec<(usize, usize)> {
    DIRECTIONS
        .iter()
        .filter_map(|&(di, dj)| offset(grid, i, j, di, dj))
        .collect()
}

/// Pick the sign of every `δ` by a greedy flood fill.
///
/// The seed takes the `+` sign (the global flip is not decidable from the
/// data — it is the conjugation branch).  The frontier is kept in a
/// max-heap keyed by the decision margin `|cost(+) − cost(−)|`, where
/// `cost(s)` sums the wrapped distances of `s·arccos` to the already-fixed
/// neighbours; confident entries are fixed first so weak ones inherit
/// settled surroundings.  `sign_confidence` stores the margin normalised by
/// `π·(fixed neighbours)`.
///
/// Fails with [`Error::FragmentedMask`] when the unmasked region is not
/// connected (the fill cannot propagate a consistent sign between
/// components) and with [`Error::Inconsistent`] when everything is masked.
pub fn resolve_signs(field: &mut RelativePhaseField) -> Result<SignResolution> {
    let m = field.grid.len();
    let mut seed: Option<(f64, usize, usize)> = None;
    for i in 0..m {
        for j in 0..m {
            if !field.mask[(i, j)] {
                continue;
            }
            let c: f64 = field.cos_delta[(i, j)];
            let sin = (1.0 - c * c).max(0.0).sqrt();
            if seed.map_or(true, |(best, _, _)| sin > best) {
                seed = Some((sin, i, j));
            }
        }
    }
    let Some((seed_sin, si, sj)) = seed else {
        return Err(Error::Inconsistent(
            "every entry of the dataset is masked; no phase can be resolved".into(),
        ));
    };
    let mut fixed = DMatrix::from_element(m, m, false);
    fixed[(si, sj)] = true;
    field.sign_confidence[(si, sj)] = seed_sin.min(1.0);
    // seed keeps its principal value +arccos ∈ [0, π]

    // Cost of assigning ±|δ| at (i, j), judged against each direction that
    // already carries fixed values.  With two consecutive fixed cells in a
    // direction the candidate is compared against the linear continuation of
    // the wrapped phase gradient; plain value proximity would reflect the
    // branch at every zero crossing of δ whose local slope exceeds the
    // crossing value, silently flipping the region beyond it.  With a single
    // fixed cell (the first ring around the seed) proximity is all there is.
    let margin_of = |field: &RelativePhaseField, fixed: &DMatrix<bool>, i: usize, j: usize| {
        let a = field.delta[(i, j)].abs();
        let mut cost_plus = 0.0;
        let mut cost_minus = 0.0;
        let mut n_fixed = 0usize;
        for (di, dj) in DIRECTIONS {
            let Some(n1) = offset(&field.grid, i, j, di, dj) else {
                continue;
            };
            if !fixed[n1] || !field.mask[n1] {
                continue;
            }
            let d1 = field.delta[n1];
            let predicted = match offset(&field.grid, i, j, 2 * di, 2 * dj) {
                Some(n2) if fixed[n2] && field.mask[n2] => d1 + wrap_angle(d1 - field.delta[n2]),
                _ => d1,
            };
            cost_plus += wrap_angle(a - predicted).abs();
            cost_minus += wrap_angle(-a - predicted).abs();
            n_fixed += 1;
        }
        (cost_plus, cost_minus, n_fixed)
    };

    let mut heap: BinaryHeap<(u64, usize, usize)> = BinaryHeap::new();
    let mut push_frontier = |heap: &mut BinaryHeap<(u64, usize, usize)>,
                             field: &RelativePhaseField,
                             fixed: &DMatrix<bool>,
                             i: usize,
                             j: usize| {
        for (ni, nj) in neighbours(&field.grid, i, j) {
            if field.mask[(ni, nj)] && !fixed[(ni, nj)] {
                let (cp, cm, nf) = margin_of(field, fixed, ni, nj);
                let margin = if nf > 0 {
                    (cp - cm).abs() / (PI * nf as f64)
                } else {
                    0.0
                };
                heap.push((margin.to_bits(), ni, nj));
            }
        }
    };
    push_frontier(&mut heap, field, &fixed, si, sj);

    let mut n_resolved = 1usize;
    while let Some((_, i, j)) = heap.pop() {
        if fixed[(i, j)] {
            continue;
        }
        // Heap keys can be stale; decide from the neighbours fixed *now*.
        let (cp, cm, nf) = margin_of(field, &fixed, i, j);
        if nf == 0 {
            continue;
        }
        let a = field.delta[(i, j)].abs();
        if cm < cp && a < PI {
            field.delta[(i, j)] = -a;
        } else {
            field.delta[(i, j)] = a;
        }
        field.sign_confidence[(i, j)] = ((cp - cm).abs() / (PI * nf as f64)).min(1.0);
        fixed[(i, j)] = true;
        n_resolved += 1;
        push_frontier(&mut heap, field, &fixed, i, j);
    }

    let unmasked = m * m - field.masked_entries();
    if n_resolved < unmasked {
        // Count the connected components of the unmasked region.
        let mut seen = DMatrix::from_element(m, m, false);
        let mut components = 0usize;
        for i in 0..m {
            for j in 0..m {
                if !field.mask[(i, j)] || seen[(i, j)] {
                    continue;
                }
                components += 1;
                let mut stack = vec![(i, j)];
                seen[(i, j)] = true;
                while let Some((ci, cj)) = stack.pop() {
                    for (ni, nj) in neighbours(&field.grid, ci, cj) {
                        if field.mask[(ni, nj)] && !seen[(ni, nj)] {
                            seen[(ni, nj)] = true;
                            stack.push((ni, nj));
                        }
                    }
                }
            }
        }
        return Err(Error::FragmentedMask(components));
    }

    let mut mean = 0.0;
    for i in 0..m {
        for j in 0..m {
            if field.mask[(i, j)] {
                mean += field.sign_confidence[(i, j)];
            }
        }
    }
    mean /= unmasked.max(1) as f64;
    field.resolved = true;
    Ok(SignResolution {
        seed: (si, sj),
        seed_sin,
        mean_confidence: mean,
        degenerate: seed_sin < 1e-6,
    })
}

// ---------------------------------------------------------------------------
// stage 3: reciprocity lift to absolute phases
// ---------------------------------------------------------------------------

/// The two candidate far-field matrices produced by the reciprocity lift.
///
/// `candidates[1]` is the entrywise conjugate of `candidates[0]`: negating
/// every relative phase negates the synchronised reference phases, so the
/// opposite global sign orientation conjugates the whole matrix.  Which of
/// the two is physical is decided by [`disambiguate_branch`].
#[derive(Debug, Clone)]
pub struct PhaseCandidates {
    pub candidates: [FarFieldMatrix; 2],
    /// Worst wrapped defect of the over-determined phase-difference
    /// equations at the synchronised solution.
    pub consistency_residual: f64,
    /// Number of reciprocity equations that entered the lift.
    pub equation_count: usize,
    /// Entries excluded by the reliability mask.
    pub masked_entries: usize,
    /// Present when the equations disagree beyond rounding — a sign of
    /// noise, sign-resolution errors, or non-reciprocal data.
    pub warning: Option<String>,
}

/// Lift resolved relative phases to absolute phases via reciprocity.
///
/// Every entry pair of the reciprocity involution gives one equation
/// between two reference-column phases; the least-squares solution is the
/// leading eigenvector of the Hermitian consensus matrix accumulated from
/// `e^{iθ}` equation factors (power iteration — for consistent data the
/// matrix is a rank-one phase outer product and the iteration converges in
/// a handful of steps).  The phase of the strongest synchronised component
/// is normalised to zero; the remaining freedom is one global unimodular
/// constant per orientation.
pub fn absolute_phase(
    field: &RelativePhaseField,
    data: &PhaselessDataset,
) -> Result<PhaseCandidates> {
    if !field.resolved {
        return Err(Error::Inconsistent(
            "sign resolution must run before the reciprocity lift".into(),
        ));
    }
    if field.grid != data.grid || field.d0_index != data.d0_index {
        return Err(Error::GridMismatch(
            "relative-phase field and dataset disagree on grids or d₀".into(),
        ));
    }
    let m = field.grid.len();
    let mut equations: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..m {
        for j in 0..m {
            let (p, q) = field.grid.reciprocal_pair(i, j)?;
            if p == i {
                continue; // links a phase to itself, no information
            }
            if !(field.mask[(i, j)] && field.mask[(p, q)]) {
                continue;
            }
            equations.push((i, p, field.delta[(p, q)] - field.delta[(i, j)]));
        }
    }
    if equations.is_empty() {
        return Err(Error::Inconsistent(
            "no usable reciprocity equations: the mask is too sparse".into(),
        ));
    }

    let mut h = DMatrix::<Complex64>::zeros(m, m);
    for &(i, p, theta) in &equations {
        let u = Complex64::from_polar(1.0, theta);
        h[(i, p)] += u;
        h[(p, i)] += u.conj();
    }

    let mut z = DVector::from_element(m, Complex64::new(1.0, 0.0));
    z = z.unscale(z.norm());
    let mut lambda = 0.0_f64;
    for it in 0..POWER_ITERATIONS {
        let w = &h * &z;
        let nw = w.norm();
        if nw < 1e-300 {
            // started orthogonal to the leading space; deterministic restart
            z = DVector::from_fn(m, |r, _| Complex64::from_polar(1.0, 0.7 + 1.3 * r as f64));
            z = z.unscale(z.norm());
            continue;
        }
        lambda = z.dotc(&w).re;
        let resid = (&w - z.scale(lambda)).norm();
        z = w.unscale(nw);
        if it > 0 && resid <= 1e-13 * lambda.abs().max(1e-300) {
            break;
        }
    }
    if !(lambda > 0.0) {
        return Err(Error::Inconsistent(format!(
            "phase synchronisation failed to find a dominant direction (λ = {lambda:.3e})"
        )));
    }
    let mut reference = 0usize;
    for i in 0..m {
        if z[i].norm() > z[reference].norm() {
            reference = i;
        }
    }
    if z[reference].norm() < 1e-300 {
        return Err(Error::Inconsistent(
            "phase synchronisation produced a null vector".into(),
        ));
    }
    let rot = z[reference].conj() / z[reference].norm();
    let phi: Vec<f64> = (0..m).map(|i| (z[i] * rot).arg()).collect();

    let mut consistency = 0.0_f64;
    for &(i, p, theta) in &equations {
        consistency = consistency.max(wrap_angle(phi[i] - phi[p] - theta).abs());
    }

    let direct = DMatrix::from_fn(m, m, |i, j| {
        Complex64::from_polar(data.mod_single[(i, j)], phi[i] + field.delta[(i, j)])
    });
    let conjugate = direct.map(|v| v.conj());
    let warning = (consistency > CONSISTENCY_WARN).then(|| {
        format!("reciprocity equations disagree by {consistency:.3e} at the synchronised phases")
    });
    Ok(PhaseCandidates {
        candidates: [
            FarFieldMatrix {
                k: data.k,
                grid: data.grid.clone(),
                data: direct,
            },
            FarFieldMatrix {
                k: data.k,
                grid: data.grid.clone(),
                data: conjugate,
            },
        ],
        consistency_residual: consistency,
        equation_count: equations.len(),
        masked_entries: field.masked_entries(),
        warning,
    })
}

// ---------------------------------------------------------------------------
// stage 4: conjugation-branch disambiguation at the reference ball
// ---------------------------------------------------------------------------

/// Which of the two lift orientations the ball probe selected.
///
/// `Direct` is the orientation the sign-resolution seed happened to
/// produce, `Conjugate` its entrywise conjugate.  The labels are relative
/// to the candidate pair: phaseless data of a matrix and of its conjugate
/// are bit-identical, so against a conjugated generator the selected matrix
/// is the generator's conjugate and the reported branch flips.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Direct,
    Conjugate,
}

/// Diagnostics accumulated across the recovery stages.
#[derive(Debug, Clone, Default)]
pub struct ResidualReport {
    /// Worst reciprocity-equation defect from the lift.
    pub phase_consistency: f64,
    /// Ball-probe scores `(selected, rejected)` — each is the indicator
    /// ratio between the ball centre and its reflection.
    pub branch_scores: (f64, f64),
    /// `max |u^i + c·u^s|` over the ball boundary after gauge fixing.
    pub boundary_residual: Option<f64>,
    /// Modulus of the raw least-squares gauge constant (1 up to recovery
    /// error; far from 1 means the data violate the boundary condition).
    pub gauge_modulus: Option<f64>,
    /// The unimodular constant applied to the matrix.
    pub gauge_constant: Option<Complex64>,
    /// Worst per-column relative misfit of the two-centre expansion fit.
    pub expansion_fit_residual: Option<f64>,
}

/// A recovered far-field matrix with its branch decision and diagnostics.
#[derive(Debug, Clone)]
pub struct RecoveredField {
    pub f_rec: FarFieldMatrix,
    pub branch: Branch,
    /// Ratio of the selected candidate's probe score to the rejected one's
    /// (> 1 by construction, ≫ 1 for a clean decision).
    pub branch_score_ratio: f64,
    pub global_phase_fixed: bool,
    pub residual_report: ResidualReport,
}

impl RecoveredField {
    /// Structured-text sidecar with the branch decision and residuals; the
    /// matrix itself is exported with [`FarFieldMatrix::write_csv`].
    pub fn write_report<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "# phase recovery report")?;
        let branch = match self.branch {
            Branch::Direct => "direct",
            Branch::Conjugate => "conjugate",
        };
        writeln!(out, "branch,{branch}")?;
        writeln!(out, "branch_score_selected,{:.17e}", self.residual_report.branch_scores.0)?;
        writeln!(out, "branch_score_rejected,{:.17e}", self.residual_report.branch_scores.1)?;
        writeln!(out, "branch_score_ratio,{:.17e}", self.branch_score_ratio)?;
        writeln!(out, "global_phase_fixed,{}", self.global_phase_fixed)?;
        writeln!(out, "phase_consistency,{:.17e}", self.residual_report.phase_consistency)?;
        if let Some(c) = self.residual_report.gauge_constant {
            writeln!(out, "gauge_constant_re,{:.17e}", c.re)?;
            writeln!(out, "gauge_constant_im,{:.17e}", c.im)?;
        }
        if let Some(v) = self.residual_report.gauge_modulus {
            writeln!(out, "gauge_modulus_raw,{v:.17e}")?;
        }
        if let Some(v) = self.residual_report.boundary_residual {
            writeln!(out, "boundary_residual,{v:.17e}")?;
        }
        if let Some(v) = self.residual_report.expansion_fit_residual {
            writeln!(out, "expansion_fit_residual,{v:.17e}")?;
        }
        Ok(())
    }
}

/// Select the physical orientation by probing the sampling indicator at the
/// reference ball centre and at its origin reflection.
///
/// The candidate whose indicator favours `b` over `−b` wins.  Scores within
/// [`BRANCH_MARGIN`] of each other (in particular for real matrices, whose
/// two candidates coincide) leave the branch unresolved; the caller still
/// holds both candidates in the [`PhaseCandidates`] it passed in.
pub fn disambiguate_branch(
    cands: &PhaseCandidates,
    ball: &ReferenceBall,
) -> Result<RecoveredField> {
    let s0 = probe_ratio(&cands.candidates[0], ball.center)?;
    let s1 = probe_ratio(&cands.candidates[1], ball.center)?;
    if !(s0.is_finite() && s1.is_finite() && s0 > 0.0 && s1 > 0.0) {
        return Err(Error::Inconsistent(format!(
            "ball probe produced unusable scores {s0:.3e}, {s1:.3e}"
        )));
    }
    let (winner, ratio) = if s0 >= s1 { (0, s0 / s1) } else { (1, s1 / s0) };
    if ratio <= 1.0 + BRANCH_MARGIN {
        return Err(Error::UnresolvedBranch(format!(
            "probe scores {s0:.3e} and {s1:.3e} are within {:.0}% of each other",
            BRANCH_MARGIN * 100.0
        )));
    }
    Ok(RecoveredField {
        f_rec: cands.candidates[winner].clone(),
        branch: if winner == 0 {
            Branch::Direct
        } else {
            Branch::Conjugate
        },
        branch_score_ratio: ratio,
        global_phase_fixed: false,
        residual_report: ResidualReport {
            phase_consistency: cands.consistency_residual,
            branch_scores: if winner == 0 { (s0, s1) } else { (s1, s0) },
            ..ResidualReport::default()
        },
    })
}

/// Full pipeline: cosine identity → sign fill → reciprocity lift → branch
/// selection.  Global-phase fixing stays a separate, geometry-gated call.
pub fn recover_field(data: &PhaselessDataset, ball: &ReferenceBall) -> Result<RecoveredField> {
    let mut field = relative_phase(data)?;
    resolve_signs(&mut field)?;
    let cands = absolute_phase(&field, data)?;
    disambiguate_branch(&cands, ball)
}

// ---------------------------------------------------------------------------
// stage 5: global-phase fixing on the ball boundary
// ---------------------------------------------------------------------------

/// `H_j` for signed order from a non-negative-order table
/// (`H_{−n} = (−1)^n H_n`).
fn hankel_signed(table: &[Complex64], j: i64) -> Complex64 {
    let n = j.unsigned_abs() as usize;
    let v = table[n];
    if j < 0 && n % 2 == 1 {
        -v
    } else {
        v
    }
}

/// `(−i)^j` for signed `j`.
fn quarter_turn(j: i64) -> Complex64 {
    Complex64::from_polar(1.0, -(j as f64) * FRAC_PI_2)
}

/// Largest order whose outgoing mode at argument `x` stays within
/// [`AMPLIFICATION_LIMIT`] of the zeroth mode, capped at `requested`.
fn growth_capped_order(x: f64, requested: usize) -> usize {
    if !(x > 0.0) || requested == 0 {
        return 0;
    }
    let table = hankel1_seq(requested, x);
    let floor = table[0].norm().max(1.0);
    let mut cap = 0;
    for (j, v) in table.iter().enumerate() {
        if v.norm().is_finite() && v.norm() <= AMPLIFICATION_LIMIT * floor {
            cap = j;
        } else {
            break;
        }
    }
    cap
}

/// Remove the remaining global unimodular constant using the sound-soft
/// reference ball.
///
/// The scattered field behind the recovered far field is represented as a
/// two-centre outgoing expansion: orders `|j| ≤ Ma` about the origin carry
/// the unknown scatterer (their sum converges on the ball boundary because
/// `|b| − ρ > R`), orders `|j| ≤ Mb` about the ball centre carry the ball's
/// own field (convergent up to its boundary).  One least-squares fit of the
/// mode far fields `√(2/(πk)) e^{−iπ/4} (−i)^j e^{ijθ}` (ball modes carry
/// the extra translation factor `e^{−ik x̂·b}`) against all columns yields
/// the coefficients, the expansion is evaluated on boundary test points,
/// and the constant `c` minimising `Σ |u^i + c·u^s|²` is projected to unit
/// modulus and applied.  Requested orders are trimmed by mode growth at the
/// evaluation radii and by the observation count.
///
/// Fails with [`Error::ExpansionGeometry`] when the geometry or aperture
/// does not support the expansion and with [`Error::Inconsistent`] when the
/// raw constant's modulus strays more than 5 % from 1.
pub fn fix_global_phase(
    rec: &mut RecoveredField,
    ball: &ReferenceBall,
    enclosing_radius: f64,
    expansion_order: usize,
) -> Result<()> {
    let k = rec.f_rec.k;
    let grid = rec.f_rec.grid.clone();
    if grid.aperture() != Aperture::Full {
        return Err(Error::ExpansionGeometry(
            "global-phase fixing needs full-circle observation to form mode coefficients".into(),
        ));
    }
    if !(enclosing_radius > 0.0) || !enclosing_radius.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "enclosing radius must be positive, got {enclosing_radius}"
        )));
    }
    if !(ball.radius > 0.0) || !ball.radius.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "ball radius must be positive, got {}",
            ball.radius
        )));
    }
    let r_near = ball.center.norm() - ball.radius;
    if r_near <= enclosing_radius {
        return Err(Error::ExpansionGeometry(format!(
            "ball boundary reaches the enclosing disk: |b| − ρ = {r_near:.3} ≤ R = \
             {enclosing_radius:.3}; the origin expansion does not converge there"
        )));
    }
    let mobs = grid.len();
    let mut ma = growth_capped_order(k * r_near, expansion_order);
    let mut mb = growth_capped_order(k * ball.radius, expansion_order);
    while 2 * (ma + mb) + 2 > mobs.saturating_sub(2) && (ma > 0 || mb > 0) {
        if ma >= mb {
            ma -= 1;
        } else {
            mb -= 1;
        }
    }
    if ma < 4 || mb < 1 {
        return Err(Error::ExpansionGeometry(format!(
            "observation grid of {mobs} directions leaves no room for expansion orders \
             (origin {ma}, ball {mb})"
        )));
    }

    let prefactor = (2.0 / (PI * k)).sqrt() * Complex64::from_polar(1.0, -FRAC_PI_4);
    let ncols = 2 * ma + 1 + 2 * mb + 1;
    let orders: Vec<(i64, bool)> = (-(ma as i64)..=ma as i64)
        .map(|j| (j, false))
        .chain((-(mb as i64)..=mb as i64).map(|j| (j, true)))
        .collect();
    let design = DMatrix::from_fn(mobs, ncols, |row, col| {
        let th = grid.obs_angle(row);
        let (j, ball_mode) = orders[col];
        let mut v = prefactor * quarter_turn(j) * Complex64::from_polar(1.0, j as f64 * th);
        if ball_mode {
            v *= Complex64::from_polar(1.0, -k * grid.obs_dir(row).dot(&ball.center));
        }
        v
    });
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    if !(smax > 0.0) {
        return Err(Error::DegenerateOperator(
            "expansion design matrix is numerically zero".into(),
        ));
    }
    let coef = svd
        .solve(&rec.f_rec.data, 1e-12 * smax)
        .map_err(|e| Error::SolverFailure(format!("expansion fit failed: {e}")))?;
    let misfit = &design * &coef - &rec.f_rec.data;
    let mut fit_residual = 0.0_f64;
    for n in 0..mobs {
        let d = rec.f_rec.data.column(n).norm();
        if d > 0.0 {
            fit_residual = fit_residual.max(misfit.column(n).norm() / d);
        }
    }

    // Evaluate the expansion and the incident waves on the ball boundary.
    let tpts = 64usize;
    let ball_table = hankel1_seq(mb, k * ball.radius);
    let mut eval = DMatrix::<Complex64>::zeros(tpts, ncols);
    let mut incident = DMatrix::<Complex64>::zeros(tpts, mobs);
    for t in 0..tpts {
        let psi = 2.0 * PI * t as f64 / tpts as f64;
        let x = ball.center + ball.radius * unit_dir(psi);
        let origin_table = hankel1_seq(ma, k * x.norm());
        let thx = x.y.atan2(x.x);
        for (col, &(j, ball_mode)) in orders.iter().enumerate() {
            eval[(t, col)] = if ball_mode {
                hankel_signed(&ball_table, j) * Complex64::from_polar(1.0, j as f64 * psi)
            } else {
                hankel_signed(&origin_table, j) * Complex64::from_polar(1.0, j as f64 * thx)
            };
        }
        for n in 0..mobs {
            incident[(t, n)] = Complex64::from_polar(1.0, k * x.dot(&grid.inc_dir(n)));
        }
    }
    let scattered = &eval * &coef; // tpts × mobs

    let mut inner = Complex64::new(0.0, 0.0);
    let mut energy = 0.0_f64;
    for t in 0..tpts {
        for n in 0..mobs {
            inner += scattered[(t, n)].conj() * incident[(t, n)];
            energy += scattered[(t, n)].norm_sqr();
        }
    }
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(Error::Inconsistent(
            "reconstructed scattered field vanishes on the ball boundary".into(),
        ));
    }
    let c_raw = -inner / energy;
    let c_mod = c_raw.norm();
    if !c_mod.is_finite() || (c_mod - 1.0).abs() > GAUGE_MODULUS_TOL {
        return Err(Error::Inconsistent(format!(
            "gauge constant modulus {c_mod:.4} is more than {:.0}% away from 1: the recovered \
             field does not satisfy the ball boundary condition",
            GAUGE_MODULUS_TOL * 100.0
        )));
    }
    let c = c_raw / c_mod;
    let mut boundary_residual = 0.0_f64;
    for t in 0..tpts {
        for n in 0..mobs {
            boundary_residual =
                boundary_residual.max((incident[(t, n)] + c * scattered[(t, n)]).norm());
        }
    }

    rec.f_rec = rec.f_rec.scaled(c);
    rec.global_phase_fixed = true;
    rec.residual_report.gauge_constant = Some(c);
    rec.residual_report.gauge_modulus = Some(c_mod);
    rec.residual_report.boundary_residual = Some(boundary_residual);
    rec.residual_report.expansion_fit_residual = Some(fit_residual);
    Ok(())
}
