//! Separation-of-variables solutions for disks — the reference answers the
//! integral-equation and volume solvers are measured against.
//!
//! For a plane wave `e^{ikx·d}` hitting a disk of radius `a` centered at the
//! origin, expand in circular harmonics: `e^{ikx·d} = Σ i^n J_n(kr)
//! e^{in(θ-θ_d)}`.  Matching the boundary condition mode by mode gives the
//! scattered coefficients, and the large-argument Hankel asymptotics give the
//! far field in the convention `u^s ~ (e^{ik|x|}/√|x|) u^∞(x̂)`.
//!
//! A disk centered at `z` follows from the translation rule
//! `u_z^∞(x̂,d) = e^{ik(d−x̂)·z} u_0^∞(x̂,d)`.

use num_complex::Complex64;

use crate::geometry::{unit_dir, Point};
use crate::specfun::{bessel_j_seq, hankel1_seq};

/// Truncation order for disk series: coefficients decay superexponentially
/// once the order passes `ka`.
fn series_order(ka: f64) -> usize {
    (ka + 10.0 * ka.cbrt() + 20.0).ceil() as usize
}

/// `e^{ik(d−x̂)·z}` — the exact effect of translating a scatterer by `z` on
/// its far field.
pub fn translation_factor(k: f64, z: Point, obs_angle: f64, inc_angle: f64) -> Complex64 {
    let d = unit_dir(inc_angle);
    let x_hat = unit_dir(obs_angle);
    (Complex64::i() * k * (d - x_hat).dot(&z)).exp()
}

/// Common prefactor `√(2/(πk)) e^{−iπ/4}` of the 2D circular-harmonic far
/// field.
fn farfield_prefactor(k: f64) -> Complex64 {
    (2.0 / (std::f64::consts::PI * k)).sqrt()
        * Complex64::new(0.0, -std::f64::consts::FRAC_PI_4).exp()
}

/// Evaluate `c₀ + 2 Σ_{n≥1} c_n cos(nψ)`; the coefficient symmetry
/// `c_{−n} = c_n` holds for every boundary condition below.
fn cosine_series(coeffs: &[Complex64], psi: f64) -> Complex64 {
    let mut s = coeffs[0];
    for (n, c) in coeffs.iter().enumerate().skip(1) {
        s += 2.0 * c * (n as f64 * psi).cos();
    }
    s
}

/// Far field of a sound-soft disk of radius `a` centered at `center`.
pub fn soundsoft_disk_farfield(
    k: f64,
    a: f64,
    center: Point,
    obs_angle: f64,
    inc_angle: f64,
) -> Complex64 {
    let ka = k * a;
    let nmax = series_order(ka);
    let j = bessel_j_seq(nmax, ka);
    let h = hankel1_seq(nmax, ka);
    let coeffs: Vec<Complex64> = (0..=nmax).map(|n| -j[n] / h[n]).collect();
    farfield_prefactor(k)
        * cosine_series(&coeffs, obs_angle - inc_angle)
        * translation_factor(k, center, obs_angle, inc_angle)
}

/// Far field of an impedance disk (`∂u/∂ν + ηu = 0`, ν outward) of radius
/// `a` centered at `center`.
pub fn impedance_disk_farfield(
    k: f64,
    a: f64,
    center: Point,
    eta: Complex64,
    obs_angle: f64,
    inc_angle: f64,
) -> Complex64 {
    let ka = k * a;
    let nmax = series_order(ka);
    let j = bessel_j_seq(nmax + 1, ka);
    let h = hankel1_seq(nmax + 1, ka);
    let jp = |n: usize| {
        if n == 0 {
            -j[1]
        } else {
            j[n - 1] - (n as f64 / ka) * j[n]
        }
    };
    let hp = |n: usize| {
        if n == 0 {
            -h[1]
        } else {
            h[n - 1] - (n as f64 / ka) * h[n]
        }
    };
    let coeffs: Vec<Complex64> = (0..=nmax)
        .map(|n| -(k * jp(n) + eta * j[n]) / (k * hp(n) + eta * h[n]))
        .collect();
    farfield_prefactor(k)
        * cosine_series(&coeffs, obs_angle - inc_angle)
        * translation_factor(k, center, obs_angle, inc_angle)
}

/// Far field of a penetrable disk of radius `a`, constant refractive index
/// `n0 > 0` (interior wavenumber `k√n0`), centered at `center`.
pub fn penetrable_disk_farfield(
    k: f64,
    a: f64,
    center: Point,
    n0: f64,
    obs_angle: f64,
    inc_angle: f64,
) -> Complex64 {
    let k1 = k * n0.sqrt();
    let ka = k * a;
    let k1a = k1 * a;
    let nmax = series_order(ka.max(k1a));
    let j = bessel_j_seq(nmax + 1, ka);
    let h = hankel1_seq(nmax + 1, ka);
    let j1 = bessel_j_seq(nmax + 1, k1a);
    let jp = |n: usize| {
        if n == 0 {
            -j[1]
        } else {
            j[n - 1] - (n as f64 / ka) * j[n]
        }
    };
    let hp = |n: usize| {
        if n == 0 {
            -h[1]
        } else {
            h[n - 1] - (n as f64 / ka) * h[n]
        }
    };
    let j1p = |n: usize| {
        if n == 0 {
            -j1[1]
        } else {
            j1[n - 1] - (n as f64 / k1a) * j1[n]
        }
    };
    // Continuity of u and ∂u/∂r at r = a for each mode.
    let coeffs: Vec<Complex64> = (0..=nmax)
        .map(|n| {
            let num = k1 * j1p(n) * j[n] - k * jp(n) * j1[n];
            let den = k1 * j1p(n) * h[n] - k * hp(n) * j1[n];
            -num / den
        })
        .collect();
    // The scattered coefficients are i^n b_n against the incident i^n J_n;
    // the i^{±n} factors cancel against the Hankel asymptotics exactly as in
    // the sound-soft case, leaving the bare cosine series.
    farfield_prefactor(k)
        * cosine_series(&coeffs, obs_angle - inc_angle)
        * translation_factor(k, center, obs_angle, inc_angle)
}

/// Scattered near field of the sound-soft disk, valid for `|x − center| ≥ a`.
pub fn soundsoft_disk_scattered(
    k: f64,
    a: f64,
    center: Point,
    inc_angle: f64,
    x: Point,
) -> Complex64 {
    let rel = x - center;
    let r = rel.norm();
    let theta = rel.y.atan2(rel.x);
    let ka = k * a;
    let nmax = series_order(ka);
    let j = bessel_j_seq(nmax, ka);
    let ha = hankel1_seq(nmax, ka);
    let hr = hankel1_seq(nmax, k * r);
    // The incident wave seen from the disk center carries e^{ik c·d}.
    let phase = (Complex64::i() * k * center.dot(&unit_dir(inc_angle))).exp();
    let mut s = Complex64::new(0.0, 0.0);
    for n in 0..=nmax {
        let coeff = -j[n] / ha[n];
        let i_pow = Complex64::i().powu(n as u32);
        let ang = n as f64 * (theta - inc_angle);
        let e_plus = Complex64::new(0.0, ang).exp();
        if n == 0 {
            s += coeff * hr[0];
        } else {
            // n and −n: i^{−n} H_{−n} = i^{−n} (−1)^n H_n = i^n H_n.
            s += coeff * i_pow * hr[n] * (e_plus + e_plus.conj());
        }
    }
    phase * s
}
