//! Periodic quadrature building blocks: the logarithmic product rule and
//! spectral differentiation on equispaced grids over `[0, 2π)`.

use nalgebra::DMatrix;

/// Quadrature weights for `∫₀^{2π} ln(4 sin²((t−τ)/2)) f(τ) dτ` with `n`
/// equispaced nodes `τ_j = 2πj/n` (`n` even).  The rule is a convolution:
/// the weight of node `j` at collocation node `i` is `ring[(i−j) mod n]`.
/// It integrates trigonometric polynomials of degree `< n/2` exactly.
pub fn log_weight_ring(n: usize) -> Vec<f64> {
    assert!(n >= 2 && n % 2 == 0, "need an even node count, got {n}");
    let h = 2.0 * std::f64::consts::PI / n as f64;
    (0..n).map(|delta| log_weight_at(n, delta as f64 * h)).collect()
}

/// Weight of a node at signed parameter offset `dt = t − τ_j` for the same
/// rule, valid at arbitrary (off-node) collocation points `t`:
/// `R(dt) = −(4π/n) Σ_{m=1}^{n/2−1} cos(m·dt)/m − (2π/n²) cos((n/2)·dt)`.
pub fn log_weight_at(n: usize, dt: f64) -> f64 {
    assert!(n >= 2 && n % 2 == 0);
    let half = n / 2;
    let mut s = 0.0;
    for m in 1..half {
        s += (m as f64 * dt).cos() / m as f64;
    }
    let nf = n as f64;
    -4.0 * std::f64::consts::PI / nf * s
        - 2.0 * std::f64::consts::PI / (nf * nf) * (half as f64 * dt).cos()
}

/// Spectral differentiation matrix on `n` equispaced nodes (`n` even):
/// `D_ij = (1/2)(−1)^{i−j} cot((t_i − t_j)/2)`, zero diagonal.  Exact on
/// trigonometric polynomials of degree `< n/2`.
pub fn trig_diff_matrix(n: usize) -> DMatrix<f64> {
    assert!(n >= 2 && n % 2 == 0, "need an even node count, got {n}");
    let h = 2.0 * std::f64::consts::PI / n as f64;
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            let dt = (i as f64 - j as f64) * h;
            0.5 * sign / (dt / 2.0).tan()
        }
    })
}

/// Values of the `n` trigonometric cardinal functions at parameter `t`:
/// `L_j(t)` with `L_j(t_i) = δ_ij`, for even `n`.  Used to evaluate a
/// density between quadrature nodes.
pub fn trig_cardinal_row(n: usize, t: f64) -> Vec<f64> {
    assert!(n >= 2 && n % 2 == 0);
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let half = n / 2;
    (0..n)
        .map(|j| {
            let dt = t - j as f64 * h;
            // L_j(t) = (1/n)[1 + 2Σ_{m<n/2} cos(m·dt) + cos((n/2)·dt)],
            // summed in closed form by the Dirichlet-kernel identity
            // 1 + 2Σ cos(m·dt) + cos((n/2)dt) = sin((n/2)dt) cot(dt/2).
            let s2 = (0.5 * dt).sin();
            if s2.abs() < 1e-9 {
                1.0
            } else {
                (half as f64 * dt).sin() * (0.5 * dt).cos() / (s2 * n as f64)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    // ∫ ln(4 sin²((t−τ)/2)) cos(mτ) dτ = −(2π/m) cos(mt),  and 0 for m = 0.
    fn log_integral_exact(m: usize, t: f64) -> f64 {
        if m == 0 {
            0.0
        } else {
            -(2.0 * PI / m as f64) * (m as f64 * t).cos()
        }
    }

    #[test]
    fn log_rule_exact_on_low_order_modes() {
        let n = 32;
        let ring = log_weight_ring(n);
        let h = 2.0 * PI / n as f64;
        for m in 0..n / 2 {
            for i in [0usize, 5, 19] {
                let t = i as f64 * h;
                let mut acc = 0.0;
                for j in 0..n {
                    acc += ring[(i + n - j) % n] * (m as f64 * j as f64 * h).cos();
                }
                let want = log_integral_exact(m, t);
                assert!(
                    (acc - want).abs() < 1e-12,
                    "mode {m} node {i}: got {acc}, want {want}"
                );
            }
        }
    }

    #[test]
    fn log_rule_exact_off_nodes() {
        let n = 40;
        let h = 2.0 * PI / n as f64;
        for m in 1..n / 2 {
            for &t in &[0.123, 1.77, h * 0.5 + 3.0] {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += log_weight_at(n, t - j as f64 * h) * (m as f64 * j as f64 * h).cos();
                }
                let want = log_integral_exact(m, t);
                assert!(
                    (acc - want).abs() < 1e-12,
                    "mode {m} at t={t}: got {acc}, want {want}"
                );
            }
        }
    }

    #[test]
    fn log_rule_converges_spectrally_on_smooth_functions() {
        // f(τ) = exp(cos τ) is analytic; doubling nodes should change the
        // result by far less than any algebraic rate would.
        let t = 0.9;
        let value = |n: usize| {
            let h = 2.0 * PI / n as f64;
            (0..n)
                .map(|j| log_weight_at(n, t - j as f64 * h) * (j as f64 * h).cos().exp())
                .sum::<f64>()
        };
        let coarse = value(32);
        let fine = value(256);
        assert!(
            (coarse - fine).abs() < 1e-10,
            "coarse {coarse} vs fine {fine}"
        );
    }

    #[test]
    fn diff_matrix_exact_on_trig_polynomials() {
        let n = 24;
        let d = trig_diff_matrix(n);
        let h = 2.0 * PI / n as f64;
        for m in 0..n / 2 {
            let mf = m as f64;
            let cos_vec: Vec<f64> = (0..n).map(|j| (mf * j as f64 * h).cos()).collect();
            let sin_vec: Vec<f64> = (0..n).map(|j| (mf * j as f64 * h).sin()).collect();
            for i in 0..n {
                let dc: f64 = (0..n).map(|j| d[(i, j)] * cos_vec[j]).sum();
                let ds: f64 = (0..n).map(|j| d[(i, j)] * sin_vec[j]).sum();
                let t = i as f64 * h;
                assert!((dc + mf * (mf * t).sin()).abs() < 1e-10, "d/dt cos({m}t)");
                assert!((ds - mf * (mf * t).cos()).abs() < 1e-10, "d/dt sin({m}t)");
            }
        }
    }

    #[test]
    fn diff_matrix_annihilates_constants() {
        let d = trig_diff_matrix(16);
        for i in 0..16 {
            let row_sum: f64 = (0..16).map(|j| d[(i, j)]).sum();
            assert!(row_sum.abs() < 1e-13);
        }
    }

    #[test]
    fn cardinal_row_interpolates() {
        let n = 20;
        let h = 2.0 * PI / n as f64;
        // Exactly the identity on the nodes.
        for i in 0..n {
            let row = trig_cardinal_row(n, i as f64 * h);
            for (j, &v) in row.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-12);
            }
        }
        // Reproduces trig polynomials of degree < n/2 between nodes.
        let f = |t: f64| 1.0 + (3.0 * t).cos() - 2.0 * (7.0 * t).sin();
        let samples: Vec<f64> = (0..n).map(|j| f(j as f64 * h)).collect();
        for &t in &[0.37, 2.1, 5.9] {
            let row = trig_cardinal_row(n, t);
            let interp: f64 = row.iter().zip(&samples).map(|(w, s)| w * s).sum();
            assert!((interp - f(t)).abs() < 1e-12, "at t={t}");
        }
    }
}
