// Scratch diagnostic for the phase-recovery stages. Not part of the crate API.
use farphase_core::analytic::soundsoft_disk_farfield;
use farphase_core::farfield::{DirectionGrid, FarFieldMatrix};
use farphase_core::geometry::{unit_dir, Point};
use farphase_core::phase_recovery::{absolute_phase, relative_phase, resolve_signs};
use farphase_core::phaseless::synthesize_dataset;
use farphase_core::specfun::hankel1_seq;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

fn synthetic(m: usize, k: f64) -> FarFieldMatrix {
    let grid = DirectionGrid::full(m).unwrap();
    let a = |th: f64| {
        Complex64::from_polar(
            1.2 + 0.4 * th.cos() + 0.15 * (2.0 * th).sin(),
            0.8 * th.sin() + 0.3 * (2.0 * th).cos(),
        )
    };
    let s = |t: f64| Complex64::from_polar(1.0 + 0.2 * t, 0.5 * t);
    let data = DMatrix::from_fn(m, m, |i, j| {
        let cosangle = grid.obs_dir(i).dot(&grid.inc_dir(j));
        a(grid.obs_angle(i)) * a(grid.inc_angle(j) + PI) * s(cosangle)
    });
    FarFieldMatrix { k, grid, data }
}

fn sign_report(f: &FarFieldMatrix, d0: usize, label: &str) {
    let m = f.grid.len();
    let ds = synthesize_dataset(f, d0, 0.0, 0).unwrap();
    let mut rp = relative_phase(&ds).unwrap();
    let summary = resolve_signs(&mut rp).unwrap();
    let td = |i: usize, j: usize| (f.data[(i, j)] * f.data[(i, d0)].conj()).arg();
    let (mut ep, mut em) = (0.0f64, 0.0f64);
    for i in 0..m {
        for j in 0..m {
            ep = ep.max(wrap(rp.delta[(i, j)] - td(i, j)).abs());
            em = em.max(wrap(rp.delta[(i, j)] + td(i, j)).abs());
        }
    }
    // count badly signed entries for the better global orientation
    let flip = if em < ep { -1.0 } else { 1.0 };
    let mut bad = 0usize;
    let mut bad_big = 0usize;
    for i in 0..m {
        for j in 0..m {
            let e = wrap(flip * rp.delta[(i, j)] - td(i, j)).abs();
            if e > 1e-6 {
                bad += 1;
                if td(i, j).abs() > 0.3 {
                    bad_big += 1;
                }
            }
        }
    }
    println!(
        "{label}: m={m} err(min over flip)={:.3e} bad={bad}/{} bad(|δ|>0.3)={bad_big} seed_sin={:.3} mean_conf={:.3}",
        ep.min(em),
        m * m,
        summary.seed_sin,
        summary.mean_confidence
    );

    // lift from TRUE deltas to isolate the synchronisation stage
    let mut rp_true = rp.clone();
    for i in 0..m {
        for j in 0..m {
            rp_true.delta[(i, j)] = td(i, j);
            rp_true.mask[(i, j)] = true;
        }
    }
    rp_true.resolved = true;
    let cands = absolute_phase(&rp_true, &ds).unwrap();
    let align = |a: &FarFieldMatrix| {
        let mut inner = Complex64::new(0.0, 0.0);
        let mut tmax = 0.0f64;
        for (va, vt) in a.data.iter().zip(f.data.iter()) {
            inner += va.conj() * vt;
            tmax = tmax.max(vt.norm());
        }
        let c = inner / inner.norm();
        let mut worst = 0.0f64;
        for (va, vt) in a.data.iter().zip(f.data.iter()) {
            worst = worst.max((c * va - vt).norm());
        }
        worst / tmax
    };
    println!(
        "  true-delta lift: consistency={:.3e} align0={:.3e} align1={:.3e} eqs={}",
        cands.consistency_residual,
        align(&cands.candidates[0]),
        align(&cands.candidates[1]),
        cands.equation_count
    );
}

fn gauge_report(f: &FarFieldMatrix, ball_center: Point, ball_radius: f64, ma: usize, mb: usize) {
    let k = f.k;
    let grid = &f.grid;
    let mobs = grid.len();
    let prefactor = (2.0 / (PI * k)).sqrt() * Complex64::from_polar(1.0, -FRAC_PI_4);
    let quarter = |j: i64| Complex64::from_polar(1.0, -(j as f64) * FRAC_PI_2);
    let orders: Vec<(i64, bool)> = (-(ma as i64)..=ma as i64)
        .map(|j| (j, false))
        .chain((-(mb as i64)..=mb as i64).map(|j| (j, true)))
        .collect();
    let design = DMatrix::from_fn(mobs, orders.len(), |row, col| {
        let th = grid.obs_angle(row);
        let (j, ball_mode) = orders[col];
        let mut v = prefactor * quarter(j) * Complex64::from_polar(1.0, j as f64 * th);
        if ball_mode {
            v *= Complex64::from_polar(1.0, -k * grid.obs_dir(row).dot(&ball_center));
        }
        v
    });
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let smin = svd.singular_values.iter().cloned().fold(f64::MAX, f64::min);
    let coef = svd.solve(&f.data, 1e-12 * smax).unwrap();
    let misfit = &design * &coef - &f.data;
    let mut fit = 0.0f64;
    for n in 0..mobs {
        fit = fit.max(misfit.column(n).norm() / f.data.column(n).norm());
    }
    println!(
        "  design {}x{} smax={smax:.3e} smin={smin:.3e} fit_rel={fit:.3e}",
        mobs,
        orders.len()
    );
    // coefficient magnitude profile
    let mut amax = vec![0.0f64; orders.len()];
    for (c, row) in amax.iter_mut().enumerate() {
        for n in 0..mobs {
            *row = row.max(coef[(c, n)].norm());
        }
    }
    let origin_mag: Vec<String> = (0..=ma)
        .map(|j| format!("{:.1e}", amax[ma + j]))
        .collect();
    let ball_mag: Vec<String> = (0..=mb)
        .map(|j| format!("{:.1e}", amax[2 * ma + 1 + mb + j]))
        .collect();
    println!("  |a_j| j=0..{ma}: {}", origin_mag.join(" "));
    println!("  |b_j| j=0..{mb}: {}", ball_mag.join(" "));

    let tpts = 64usize;
    let hb = hankel1_seq(mb, k * ball_radius);
    let hsigned = |t: &[Complex64], j: i64| {
        let n = j.unsigned_abs() as usize;
        if j < 0 && n % 2 == 1 {
            -t[n]
        } else {
            t[n]
        }
    };
    let mut inner = Complex64::new(0.0, 0.0);
    let mut energy = 0.0f64;
    let mut us_max = 0.0f64;
    let mut worst_pt = (0usize, 0usize, 0.0f64);
    let mut resid_at_unit_c = 0.0f64;
    for t in 0..tpts {
        let psi = 2.0 * PI * t as f64 / tpts as f64;
        let x = ball_center + ball_radius * unit_dir(psi);
        let ha = hankel1_seq(ma, k * x.norm());
        let thx = x.y.atan2(x.x);
        for n in 0..mobs {
            let mut us = Complex64::new(0.0, 0.0);
            for (col, &(j, ball_mode)) in orders.iter().enumerate() {
                let basis = if ball_mode {
                    hsigned(&hb, j) * Complex64::from_polar(1.0, j as f64 * psi)
                } else {
                    hsigned(&ha, j) * Complex64::from_polar(1.0, j as f64 * thx)
                };
                us += coef[(col, n)] * basis;
            }
            let ui = Complex64::from_polar(1.0, k * x.dot(&grid.inc_dir(n)));
            inner += us.conj() * ui;
            energy += us.norm_sqr();
            us_max = us_max.max(us.norm());
            let r = (ui + us).norm();
            resid_at_unit_c = resid_at_unit_c.max(r);
            if r > worst_pt.2 {
                worst_pt = (t, n, r);
            }
        }
    }
    let c_raw = -inner / energy;
    println!(
        "  c_raw={c_raw:.6} |c|={:.4} us_max={us_max:.3e} resid(c=1)={resid_at_unit_c:.3e} worst at t={} n={}",
        c_raw.norm(),
        worst_pt.0,
        worst_pt.1
    );
}

fn main() {
    for m in [16usize, 32, 48] {
        sign_report(&synthetic(m, 2.0), 3, "synthetic");
    }

    let scene = farphase_core::scenes::kite_ball();
    let grid = DirectionGrid::full(48).unwrap();
    let f = farphase_core::forward_obstacle::multistatic_farfield(&scene, 5.0, &grid, 160).unwrap();
    sign_report(&f, 0, "kite48");

    // Ball-only analytic matrix: the origin part should fit ~0 and the ball
    // part should carry everything; c must come out 1.
    let b = Point::new(3.0, 0.0);
    let rho = 0.4;
    let k = 2.0;
    let g64 = DirectionGrid::full(64).unwrap();
    let data = DMatrix::from_fn(64, 64, |i, j| {
        soundsoft_disk_farfield(k, rho, b, g64.obs_angle(i), g64.inc_angle(j))
    });
    let fb = FarFieldMatrix {
        k,
        grid: g64.clone(),
        data,
    };
    println!("ball-only analytic, ma=16 mb=6:");
    gauge_report(&fb, b, rho, 16, 6);
    println!("ball-only analytic, ma=4 mb=6:");
    gauge_report(&fb, b, rho, 4, 6);

    let gs = farphase_core::scenes::gauge_reference_scene();
    let fg = farphase_core::forward_obstacle::multistatic_farfield(&gs, k, &g64, 128).unwrap();
    println!("gauge scene (disk+ball), ma=16 mb=6:");
    gauge_report(&fg, gs.ball.center, gs.ball.radius, 16, 6);
}
