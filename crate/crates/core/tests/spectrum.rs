use wall_lab::spectrum::{
    bound_state, evolve_packet, measure_time_delay, phase_shift, time_delay, track_peaks, WavePacket,
};
use wall_lab::{Grid, UnitSystem, WallParameter};

const U: UnitSystem = UnitSystem::NATURAL;

fn packet(sigma: f64, l: f64) -> WavePacket {
    WavePacket::new(2.0, sigma, 30.0, WallParameter::Finite(l), U).unwrap()
}

fn delay_grid(sigma: f64) -> Grid {
    let x_max = 30.0 + 8.0 / sigma;
    Grid::half_line(x_max, (x_max / 0.02) as usize + 1).unwrap()
}

#[test]
fn group_delay_identity() {
    for k in [0.5, 1.0, 2.0, 4.0] {
        for l in [0.5, -0.5, 2.0, -2.0] {
            let wall = WallParameter::Finite(l);
            let h = 1e-5 * k;
            let dd = (phase_shift(k + h, wall).unwrap() - phase_shift(k - h, wall).unwrap()) / (2.0 * h);
            let group = U.mass / (U.hbar * k) * dd;
            let tau = time_delay(k, wall, &U).unwrap();
            assert!(((group - tau) / tau).abs() <= 1e-6, "k={k} L={l}: {group} vs {tau}");
        }
    }
}

#[test]
fn packet_norm_is_conserved() {
    let p = packet(0.1, -1.0);
    let grid = Grid::half_line(120.0, 6001).unwrap();
    let n0 = evolve_packet(&p, 0.0, grid).unwrap().norm();
    let n5 = evolve_packet(&p, 5.0, grid).unwrap().norm();
    let n15 = evolve_packet(&p, 15.0, grid).unwrap().norm();
    assert!((n5 / n0 - 1.0).abs() < 1e-6, "{n5} vs {n0}");
    assert!((n15 / n0 - 1.0).abs() < 1e-6, "{n15} vs {n0}");
    assert!((n0 - 1.0).abs() < 1e-6);
}

#[test]
fn packet_never_populates_the_bound_state() {
    let p = packet(0.1, 1.0);
    let grid = Grid::half_line(120.0, 12001).unwrap();
    let b = bound_state(p.wall, grid, &U).unwrap();
    for t in [15.0, 40.0] {
        let psi = evolve_packet(&p, t, grid).unwrap();
        let overlap = b.field.overlap(&psi).unwrap();
        assert!(overlap.norm() < 1e-6, "t={t}: overlap {overlap}");
    }
}

#[test]
fn peak_lines_follow_stationary_phase() {
    let times: Vec<f64> = (0..21).map(|i| 1.5 * i as f64).collect();
    for l in [0.0, -0.5] {
        let p = packet(0.1, l);
        let (inc, refl) = track_peaks(&p, &times, delay_grid(0.1)).unwrap();
        assert!((inc.slope + 2.0).abs() <= 0.04, "incident slope {}", inc.slope);
        assert!((refl.slope - 2.0).abs() <= 0.04, "reflected slope {}", refl.slope);
        let expected = -30.0 + 2.0 * l / (1.0 + (2.0 * l) * (2.0 * l));
        assert!(((refl.intercept - expected) / expected).abs() <= 0.02, "intercept {}", refl.intercept);
    }
}

#[test]
fn measured_delay_matches_closed_form() {
    for l in [0.0, -0.5, 0.5] {
        let p = packet(0.1, l);
        let measured = measure_time_delay(&p, delay_grid(0.1)).unwrap();
        let exact = time_delay(2.0, p.wall, &U).unwrap();
        if l == 0.0 {
            assert!(measured.abs() <= 0.05, "L=0: {measured}");
        } else {
            assert!(((measured - exact) / exact).abs() <= 0.05, "L={l}: {measured} vs {exact}");
        }
    }
}

#[test]
fn narrower_spectra_reduce_dispersion_error() {
    for l in [-0.5, 0.5] {
        let exact = time_delay(2.0, WallParameter::Finite(l), &U).unwrap();
        let wide = (measure_time_delay(&packet(0.1, l), delay_grid(0.1)).unwrap() - exact).abs();
        let narrow = (measure_time_delay(&packet(0.05, l), delay_grid(0.05)).unwrap() - exact).abs();
        assert!(narrow < wide, "L={l}: {narrow} !< {wide}");
    }
}
