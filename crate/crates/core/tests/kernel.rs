use wall_lab::kernel::{
    kernel_at, kernel_boundary_check, kernel_boundary_residual, kernel_closed, kernel_spectral, KernelQuery,
    SpectralOptions,
};
use wall_lab::{Complex64, UnitSystem, WallParameter};

const U: UnitSystem = UnitSystem::NATURAL;

fn walls() -> [WallParameter; 4] {
    [WallParameter::DIRICHLET, WallParameter::NEUMANN, WallParameter::Finite(-1.0), WallParameter::Finite(1.0)]
}

fn closed(a: f64, b: f64, t: f64, l: WallParameter) -> Complex64 {
    kernel_closed(&KernelQuery::new(a, b, t, l, U).unwrap()).unwrap().value
}

#[test]
fn closed_and_spectral_agree_on_the_grid() {
    let pts = [0.5, 1.0, 2.0];
    let mut worst: f64 = 0.0;
    for wall in walls() {
        for &a in &pts {
            for &b in &pts {
                for &t in &pts {
                    let q = KernelQuery::new(a, b, t, wall, U).unwrap();
                    let c = kernel_closed(&q).unwrap().value;
                    let s = kernel_spectral(&q, SpectralOptions::default()).unwrap();
                    let rel = (c - s.value).norm() / c.norm();
                    assert!(rel <= 1e-5, "L={wall} a={a} b={b} T={t}: rel {rel:e}");
                    // the estimate is conservative: it bounds the observed discrepancy
                    assert!((c - s.value).norm() <= s.est_error + 1e-9 * c.norm(), "L={wall} a={a} b={b} T={t}");
                    worst = worst.max(rel);
                }
            }
        }
    }
    eprintln!("worst closed/spectral relative difference {worst:e}");
}

#[test]
fn spectral_bound_term_difference() {
    let q = KernelQuery::new(1.0, 1.0, 1.0, WallParameter::Finite(1.0), U).unwrap();
    let with = kernel_spectral(&q, SpectralOptions::default()).unwrap().value;
    let without = kernel_spectral(&q, SpectralOptions { include_bound: false, ..Default::default() }).unwrap().value;
    assert!(((with - without).norm() - 2.0 * (-2.0f64).exp()).abs() < 1e-12);
}

#[test]
fn neumann_kernel_has_zero_slope_at_wall() {
    let h = 1e-4;
    let k = |b: f64| kernel_at(WallParameter::NEUMANN, 1.0, b, 1.0, &U).unwrap();
    let slope = (k(0.0) * -3.0 + k(h) * 4.0 - k(2.0 * h)) / (2.0 * h);
    assert!(slope.norm() < 1e-6, "slope {slope}");
}

#[test]
fn boundary_residuals_match_and_mismatch() {
    for wall in walls() {
        for (a, t) in [(1.0, 1.0), (0.5, 2.0), (2.0, 0.5)] {
            let r = kernel_boundary_check(wall, a, t, &U).unwrap();
            assert!(r <= 1e-5, "L={wall} a={a} T={t}: {r:e}");
        }
    }
    let mismatched = [
        (WallParameter::NEUMANN, WallParameter::DIRICHLET),
        (WallParameter::DIRICHLET, WallParameter::NEUMANN),
        (WallParameter::Finite(-1.0), WallParameter::Finite(1.0)),
        (WallParameter::Finite(1.0), WallParameter::DIRICHLET),
    ];
    for (kw, cw) in mismatched {
        let r = kernel_boundary_residual(kw, cw, 1.0, 1.0, &U).unwrap();
        assert!(r > 1e-2, "kernel {kw} vs condition {cw}: {r:e}");
    }
}

#[test]
fn kernel_solves_the_schrodinger_equation() {
    for wall in walls() {
        let (b, t) = (1.3, 0.9);
        let residual = |h: f64| {
            let k = |bb: f64, tt: f64| closed(0.7, bb, tt, wall);
            let dt = (k(b, t + h) - k(b, t - h)) / (2.0 * h);
            let dbb = (k(b + h, t) - k(b, t) * 2.0 + k(b - h, t)) / (h * h);
            (Complex64::i() * dt + dbb * 0.5).norm() / k(b, t).norm()
        };
        let coarse = residual(1e-2);
        let fine = residual(5e-3);
        assert!(fine <= 1e-3, "L={wall}: residual {fine:e}");
        assert!(fine < coarse, "L={wall}: {fine:e} !< {coarse:e}");
    }
}

#[test]
fn small_lengths_approach_the_dirichlet_kernel() {
    let k0 = closed(1.0, 1.0, 1.0, WallParameter::DIRICHLET);
    for sign in [-1.0, 1.0] {
        let d1 = (closed(1.0, 1.0, 1.0, WallParameter::Finite(sign * 0.01)) - k0).norm();
        let d2 = (closed(1.0, 1.0, 1.0, WallParameter::Finite(sign * 0.005)) - k0).norm();
        assert!(d1 <= 0.05 * k0.norm(), "L={}: {d1}", sign * 0.01);
        let ratio = d1 / d2;
        assert!((ratio - 2.0).abs() < 0.2, "linear shrinking, ratio {ratio}");
    }
}

#[test]
fn symmetric_in_endpoints() {
    for wall in walls() {
        for (a, b, t) in [(0.5, 2.0, 1.0), (1.0, 3.0, 0.3), (4.0, 0.2, 7.0)] {
            assert_eq!(closed(a, b, t, wall), closed(b, a, t, wall));
        }
    }
}
