use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, PI};
use wall_lab::regularization::{
    convergence_sweep, decades, match_step, ode_log_derivative, reflection_phase, scheme_potential,
    RegularizationScheme, SchemeFamily, StepPotential,
};
use wall_lab::spectrum::phase_shift;
use wall_lab::{UnitSystem, WallParameter};

const U: UnitSystem = UnitSystem::NATURAL;
const ENERGIES: [f64; 3] = [0.5, 1.0, 2.0];

fn sweep_to_finest(scheme: &RegularizationScheme) -> wall_lab::regularization::Sweep {
    let last = -scheme.family.finest_d().log10().round() as i32;
    convergence_sweep(scheme, &ENERGIES, &decades(4, last), &U).unwrap()
}

#[test]
fn tuned_schemes_reach_their_wall() {
    for family in [SchemeFamily::S311, SchemeFamily::S312, SchemeFamily::S316, SchemeFamily::S318] {
        for l in [1.0, -1.0, 2.0] {
            let scheme = RegularizationScheme::with_defaults(family, WallParameter::Finite(l));
            let sweep = sweep_to_finest(&scheme);
            let last = sweep.at_smallest_d();
            let worst = last.iter().map(|r| r.err).fold(0.0, f64::max);
            let (lo, hi) = last.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.r), b.max(r.r)));
            assert!(worst <= 1e-2, "{family:?} L={l}: err {worst:e}");
            assert!(hi - lo <= 2.0 * worst, "{family:?} L={l}: spread {:e} vs err {worst:e}", hi - lo);
            assert!(sweep.non_converging.is_empty(), "{family:?} L={l}: {:?}", sweep.non_converging);
            assert!(sweep.orders.iter().all(|&q| q > 0.0), "{family:?} L={l}: orders {:?}", sweep.orders);
        }
    }
}

#[test]
fn s316_sweep_example() {
    let mut scheme = RegularizationScheme::with_defaults(SchemeFamily::S316, WallParameter::Finite(1.0));
    scheme.beta0 = PI / 4.0;
    let sweep = convergence_sweep(&scheme, &ENERGIES, &decades(2, 7), &U).unwrap();
    for e in ENERGIES {
        let errs: Vec<f64> = sweep.rows.iter().filter(|r| r.energy == e).map(|r| r.err).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "E={e}: {errs:?}");
    }
    assert!(sweep.at_smallest_d().iter().all(|r| r.err <= 1e-2));
}

#[test]
fn untuned_potential_is_the_standard_wall() {
    let d = 1e-8;
    let p = StepPotential::new(1.0 / d, -1.0 / d, d).unwrap();
    let m = match_step(&p, 1.0, &U).unwrap();
    assert!(m.inv_r.abs() <= 1e-3, "1/R = {}", m.inv_r);
    assert!(m.r.abs() > 1e3);
    for e in ENERGIES {
        let phase = reflection_phase(&p, e, &U).unwrap();
        assert!((phase - PI).abs() <= 0.01 * PI, "E={e}: {phase}");
    }
}

#[test]
fn two_schemes_agree_on_one_target() {
    let s311 = RegularizationScheme::with_defaults(SchemeFamily::S311, WallParameter::Finite(2.0));
    let s312 = RegularizationScheme::with_defaults(SchemeFamily::S312, WallParameter::Finite(2.0));
    let a = sweep_to_finest(&s311).at_smallest_d();
    let b = sweep_to_finest(&s312).at_smallest_d();
    for (x, y) in a.iter().zip(&b) {
        assert!((x.r + 0.5).abs() <= 1e-2 && (y.r + 0.5).abs() <= 1e-2, "{} {}", x.r, y.r);
        assert!((x.r - y.r).abs() <= 1e-2);
    }
}

#[test]
fn detuned_well_depth_misses_the_target() {
    // β0 away from the fine-tuned value π leaves a standard wall
    let mut s312 = RegularizationScheme::with_defaults(SchemeFamily::S312, WallParameter::Finite(2.0));
    s312.beta0 = 1.0;
    let sweep = convergence_sweep(&s312, &ENERGIES, &decades(2, 10), &U).unwrap();
    assert!(sweep.at_smallest_d().iter().all(|r| r.inv_r.abs() < 1e-3));
    let mut s318 = RegularizationScheme::with_defaults(SchemeFamily::S318, WallParameter::Finite(1.0));
    s318.beta0 = 1.0;
    let sweep = convergence_sweep(&s318, &ENERGIES, &decades(2, 8), &U).unwrap();
    assert!(sweep.at_smallest_d().iter().all(|r| r.err > 0.1), "{:?}", sweep.at_smallest_d());
}

#[test]
fn neumann_sequence_approaches_its_limit() {
    let mut s = RegularizationScheme::with_defaults(SchemeFamily::S513, WallParameter::NEUMANN);
    s.c = 1.5;
    let sweep = convergence_sweep(&s, &ENERGIES, &decades(4, 12), &U).unwrap();
    for row in sweep.at_smallest_d() {
        assert!((row.r + s.c * s.c / 3.0).abs() <= 1e-2, "E = {}: R = {}", row.energy, row.r);
    }
}

#[test]
fn analytic_and_integrated_log_derivatives_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut checked = 0;
    while checked < 50 {
        let v1 = 10f64.powf(rng.gen_range(0.0..6.0));
        let v2 = -10f64.powf(rng.gen_range(-1.0..4.0));
        let d = 10f64.powf(rng.gen_range(-3.0..0.0));
        let e = rng.gen_range(0.01..0.9) * v1;
        let p = StepPotential::new(v1, v2, d).unwrap();
        let m = match_step(&p, e, &U).unwrap();
        if (m.alpha - m.beta).cos().abs() < 1e-3 {
            continue;
        }
        let ode = ode_log_derivative(&p, e, &U).unwrap();
        let rel = (ode - m.r).abs() / m.r.abs().max(1.0);
        assert!(rel <= 1e-8, "V1={v1} V2={v2} d={d} E={e}: {} vs {ode} ({rel:e})", m.r);
        checked += 1;
    }
}

#[test]
fn finite_d_phase_tracks_the_wall_phase() {
    let s = RegularizationScheme::with_defaults(SchemeFamily::S311, WallParameter::Finite(1.0));
    let p = scheme_potential(&s, 1e-8, &U).unwrap();
    let phase = reflection_phase(&p, 0.5, &U).unwrap();
    let target = phase_shift(1.0, s.l_target).unwrap();
    assert!((target - FRAC_PI_2).abs() < 1e-15);
    assert!((phase - target).abs() <= 0.01 * target, "{phase}");
}

#[test]
fn s311_against_ode() {
    let mut s = RegularizationScheme::with_defaults(SchemeFamily::S311, WallParameter::Finite(1.0));
    let p = scheme_potential(&s, 1e-8, &U).unwrap();
    let r = ode_log_derivative(&p, 1.0, &U).unwrap();
    assert!((r + 1.0).abs() <= 0.02, "{r}");
    // at the window edge the subleading d^{-1/2} term of V1 shifts the limit by −c²/3
    s.nu = -0.5;
    let p = scheme_potential(&s, 1e-12, &U).unwrap();
    let r = ode_log_derivative(&p, 1.0, &U).unwrap();
    assert!((r + 1.0 + 1.0 / 3.0).abs() <= 1e-3, "{r}");
}
