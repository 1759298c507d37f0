//! Semiclassical two-path analysis of the propagator.
//!
//! The direct path runs from `a` to `b` in time `T`; the bounce path turns at
//! `x(E)` on the way. For step sequences realizing a wall the excess action of
//! the bounce path tends to a constant `ΔS`, and the two-path sum is exact
//! only when `e^{iΔS/ħ}` reproduces the sign of the exact bounce term, which
//! happens for the Dirichlet and Neumann walls alone.

use serde::{Deserialize, Serialize};

use crate::classical::{nodes_between, orbit_integral, turning_point, ClassicalPotential, Moment};
use crate::error::{Error, Result};
use crate::kernel::{free_prefactor, kernel_closed, KernelQuery};
use crate::numerics::{bisect, bracket_geometric, integrate_adaptive_breaks};
use crate::regularization::{scheme_potential, RegularizationScheme, StepPotential};
use crate::units::UnitSystem;
use crate::wall::WallParameter;
use crate::Complex64;

pub use crate::regularization::delta_s_limit;

/// Relative tolerance of the flight-time and action quadratures. Tight enough
/// for second finite differences of the action.
const WKB_TOL: f64 = 1e-13;
const MAX_DOUBLINGS: usize = 60;
const ROOT_TOL: f64 = 1e-15;
/// Step of the finite-difference cross-checks.
pub const FD_STEP: f64 = 1e-4;

/// A potential seen by the direct path.
#[derive(Debug, Clone, PartialEq)]
pub enum PathPotential {
    Classical(ClassicalPotential),
    Step(StepPotential),
}

impl PathPotential {
    pub const FREE: PathPotential = PathPotential::Classical(ClassicalPotential::HardWall);

    pub fn value(&self, x: f64, u: &UnitSystem) -> Result<f64> {
        match self {
            Self::Classical(v) => v.value(x, u),
            Self::Step(p) => Ok(p.value(x)),
        }
    }

    /// Points in `(lo, hi)` where the potential or its slope jumps.
    fn kinks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let candidates = match self {
            Self::Classical(v) => {
                let mut k = nodes_between(v, lo, hi);
                k.push(v.support_end());
                k
            }
            Self::Step(p) => vec![-p.d, 0.0],
        };
        let mut k: Vec<f64> = candidates.into_iter().filter(|&x| x > lo && x < hi).collect();
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }

    /// `max V` on `[lo, hi]`. Every supported shape is monotone or piecewise
    /// constant between kinks, so endpoints and one-sided kink values suffice.
    fn max_on(&self, lo: f64, hi: f64, u: &UnitSystem) -> Result<f64> {
        let mut m = self.value(lo, u)?.max(self.value(hi, u)?);
        for x in self.kinks(lo, hi) {
            let eps = 1e-12 * x.abs().max(1e-300);
            m = m.max(self.value(x - eps, u)?).max(self.value(x + eps, u)?);
        }
        Ok(m)
    }
}

/// `∫_a^b moment(E − V) dx` over an allowed segment.
fn segment(v: &PathPotential, energy: f64, a: f64, b: f64, moment: Moment, u: &UnitSystem) -> Result<f64> {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let mut breaks = vec![lo];
    breaks.extend(v.kinks(lo, hi));
    breaks.push(hi);
    let f = |x: f64| moment.of(energy - v.value(x, u).unwrap_or(f64::NAN), energy);
    let value = integrate_adaptive_breaks(&breaks, WKB_TOL, f)?.0;
    if !value.is_finite() {
        return Err(Error::QuadratureFailure(format!("direct path integrand not finite at E = {energy}")));
    }
    Ok(value)
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::DomainError(format!("T must be positive and finite, got {t}")));
    }
    Ok(())
}

/// Root of a decreasing flight time `time(E) = t` for `E > floor`, bracketed
/// around the free-particle energy.
fn solve_energy(floor: f64, seed: f64, t: f64, time: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let f = |eps: f64| time(floor + eps).map(|tau| tau - t).unwrap_or(f64::NAN);
    let (lo, hi) = bracket_geometric(f, seed, MAX_DOUBLINGS)?;
    if lo == hi {
        return Ok(floor + lo);
    }
    Ok(floor + bisect(f, lo, hi, ROOT_TOL)?)
}

/// Energy of the direct path from `a` to `b` taking time `T`.
pub fn direct_energy(v: &PathPotential, a: f64, b: f64, t: f64, u: &UnitSystem) -> Result<f64> {
    check_time(t)?;
    if a == b {
        return Err(Error::DegeneratePath(format!("a = b = {a}: the direct path is at rest, E = V(a)")));
    }
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let floor = v.max_on(lo, hi, u)?;
    let seed = u.mass * (b - a) * (b - a) / (2.0 * t * t);
    let speed = (u.mass / 2.0).sqrt();
    solve_energy(floor, seed, t, |e| Ok(speed * segment(v, e, a, b, Moment::Time, u)?))
        .map_err(|err| Error::NoSolution(format!("direct path energy for a = {a}, b = {b}, T = {t}: {err}")))
}

/// Action of the direct path with its mixed second derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectAction {
    pub energy: f64,
    pub s: f64,
    /// Closed form through the `(E − V)^{−3/2}` moment.
    pub d2s_dadb: f64,
}

fn direct_action_value(v: &PathPotential, a: f64, b: f64, t: f64, u: &UnitSystem) -> Result<(f64, f64)> {
    let e = direct_energy(v, a, b, t, u)?;
    let s = -t * e + (2.0 * u.mass).sqrt() * segment(v, e, a, b, Moment::Action, u)?;
    Ok((e, s))
}

pub fn direct_action(v: &PathPotential, a: f64, b: f64, t: f64, u: &UnitSystem) -> Result<DirectAction> {
    let (energy, s) = direct_action_value(v, a, b, t, u)?;
    let ga = energy - v.value(a, u)?;
    let gb = energy - v.value(b, u)?;
    let cube = segment(v, energy, a, b, Moment::InverseCube, u)?;
    let d2s_dadb = -(2.0 * u.mass).sqrt() / (ga.sqrt() * gb.sqrt() * cube);
    Ok(DirectAction { energy, s, d2s_dadb })
}

/// Central mixed difference `∂²S/∂a∂b` of the direct action.
pub fn direct_d2s_fd(v: &PathPotential, a: f64, b: f64, t: f64, h: f64, u: &UnitSystem) -> Result<f64> {
    let s = |da: f64, db: f64| direct_action_value(v, a + da, b + db, t, u).map(|r| r.1);
    Ok((s(h, h)? - s(h, -h)? - s(-h, h)? + s(-h, -h)?) / (4.0 * h * h))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BounceAnalysis {
    pub e_direct: f64,
    pub s_direct: f64,
    /// Set when `a = b`: the direct path is at rest with `E = V(a)`.
    pub direct_degenerate: bool,
    pub e_bounce: f64,
    pub s_bounce: f64,
    pub ds_da: f64,
    /// Central difference of `S_bounce` in `a`, the cross-check of `ds_da`.
    pub ds_da_fd: f64,
    pub d2s_dadb: f64,
    /// `S_bounce − m(a+b)²/2T`.
    pub delta_s: f64,
}

fn free_bounce_action(a: f64, b: f64, t: f64, u: &UnitSystem) -> f64 {
    u.mass * (a + b) * (a + b) / (2.0 * t)
}

fn direct_part(v: &PathPotential, a: f64, b: f64, t: f64, u: &UnitSystem) -> Result<(f64, f64, bool)> {
    if a == b {
        let rest = v.value(a, u)?;
        return Ok((rest, -t * rest, true));
    }
    let (e, s) = direct_action_value(v, a, b, t, u)?;
    Ok((e, s, false))
}

/// Flight time of the bounce path at energy `E`.
fn bounce_time(v: &ClassicalPotential, e: f64, a: f64, b: f64, u: &UnitSystem) -> Result<f64> {
    let xt = turning_point(v, e, u)?;
    let leg = |end: f64| orbit_integral(v, e, xt, end, Moment::Time, WKB_TOL, u);
    Ok((u.mass / 2.0).sqrt() * (leg(a)? + leg(b)?))
}

fn bounce_energy(v: &ClassicalPotential, a: f64, b: f64, t: f64, u: &UnitSystem) -> Result<f64> {
    let floor = v.value(a, u)?.max(v.value(b, u)?);
    let seed = u.mass * (a + b) * (a + b) / (2.0 * t * t);
    solve_energy(floor, seed, t, |e| bounce_time(v, e, a, b, u))
        .map_err(|err| Error::NoSolution(format!("bounce energy for a = {a}, b = {b}, T = {t}: {err}")))
}

fn bounce_action_value(v: &ClassicalPotential, a: f64, b: f64, t: f64, u: &UnitSystem) -> Result<(f64, f64)> {
    let e = bounce_energy(v, a, b, t, u)?;
    let xt = turning_point(v, e, u)?;
    let leg = |end: f64| orbit_integral(v, e, xt, end, Moment::Action, WKB_TOL, u);
    Ok((e, -t * e + (2.0 * u.mass).sqrt() * (leg(a)? + leg(b)?)))
}

/// Direct and bounce quantities for a reflecting potential.
pub fn bounce_quantities(v: &ClassicalPotential, a: f64, b: f64, t: f64, u: &UnitSystem) -> Result<BounceAnalysis> {
    check_time(t)?;
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::DomainError(format!("bounce endpoints must be positive, got a = {a}, b = {b}")));
    }
    let path = PathPotential::Classical(v.clone());
    let (e_direct, s_direct, direct_degenerate) = direct_part(&path, a, b, t, u)?;
    let (e, s) = bounce_action_value(v, a, b, t, u)?;
    let ga = e - v.value(a, u)?;
    let gb = e - v.value(b, u)?;
    let ds_da = (2.0 * u.mass).sqrt() * ga.sqrt();
    let h = FD_STEP * a.min(b);
    let ds_da_fd = (bounce_action_value(v, a + h, b, t, u)?.1 - bounce_action_value(v, a - h, b, t, u)?.1) / (2.0 * h);
    // ∂E/∂b from the flight-time condition; ∂T/∂E by central difference
    let de = 1e-5 * e;
    let dt_de = (bounce_time(v, e + de, a, b, u)? - bounce_time(v, e - de, a, b, u)?) / (2.0 * de);
    let de_db = -((u.mass / 2.0).sqrt() / gb.sqrt()) / dt_de;
    let d2s_dadb = (2.0 * u.mass).sqrt() / (2.0 * ga.sqrt()) * de_db;
    Ok(BounceAnalysis {
        e_direct,
        s_direct,
        direct_degenerate,
        e_bounce: e,
        s_bounce: s,
        ds_da,
        ds_da_fd,
        d2s_dadb,
        delta_s: s - free_bounce_action(a, b, t, u),
    })
}

/// Bounce off a step of the scheme at width `d`, with region I impenetrable:
/// the path crosses the well of depth `|V2|` and width `d` twice.
pub fn step_bounce(
    scheme: &RegularizationScheme,
    d: f64,
    a: f64,
    b: f64,
    t: f64,
    u: &UnitSystem,
) -> Result<BounceAnalysis> {
    check_time(t)?;
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::DomainError(format!("bounce endpoints must be positive, got a = {a}, b = {b}")));
    }
    let p = scheme_potential(scheme, d, u)?;
    let well = -p.v2;
    let speed = (u.mass / 2.0).sqrt();
    let root2m = (2.0 * u.mass).sqrt();
    let time = |e: f64| speed * (a + b) / e.sqrt() + 2.0 * speed * d / (e + well).sqrt();
    let seed = u.mass * (a + b) * (a + b) / (2.0 * t * t);
    let e = solve_energy(0.0, seed, t, |e| Ok(time(e)))
        .map_err(|err| Error::NoSolution(format!("step bounce energy at d = {d}: {err}")))?;
    let action = |a: f64, e: f64| -t * e + root2m * (a + b) * e.sqrt() + 2.0 * root2m * d * (e + well).sqrt();
    let s = action(a, e);
    let ds_da = root2m * e.sqrt();
    let h = FD_STEP * a.min(b);
    let energy_at = |a: f64| {
        let time = |e: f64| speed * (a + b) / e.sqrt() + 2.0 * speed * d / (e + well).sqrt();
        solve_energy(0.0, seed, t, |e| Ok(time(e)))
    };
    let ds_da_fd = (action(a + h, energy_at(a + h)?) - action(a - h, energy_at(a - h)?)) / (2.0 * h);
    // b(E) from the flight-time condition, differentiated in closed form
    let db_de = t / (2.0 * speed * e.sqrt()) - d * well / (e.sqrt() * (e + well).powf(1.5));
    let d2s_dadb = root2m / (2.0 * e.sqrt()) / db_de;
    let (e_direct, s_direct, direct_degenerate) = direct_part(&PathPotential::Step(p), a, b, t, u)?;
    Ok(BounceAnalysis {
        e_direct,
        s_direct,
        direct_degenerate,
        e_bounce: e,
        s_bounce: s,
        ds_da,
        ds_da_fd,
        d2s_dadb,
        delta_s: s - free_bounce_action(a, b, t, u),
    })
}

/// The two-path semiclassical kernel for the Dirichlet and Neumann walls. The
/// van Vleck factor of the bounce path is `m/T` and its excess action `πħ` or `0`.
pub fn wkb_kernel(wall: WallParameter, a: f64, b: f64, t: f64, u: &UnitSystem) -> Result<Complex64> {
    let delta_s = if wall.is_dirichlet() {
        std::f64::consts::PI * u.hbar
    } else if wall.is_neumann() {
        0.0
    } else {
        return Err(Error::UnsupportedWall(format!("the two-path sum is not exact for L = {wall}")));
    };
    KernelQuery::new(a, b, t, wall, *u)?;
    let vleck = free_prefactor(t, u);
    let direct = Complex64::from_polar(1.0, u.mass * (b - a) * (b - a) / (2.0 * u.hbar * t));
    let bounce = Complex64::from_polar(1.0, free_bounce_action(a, b, t, u) / u.hbar) * Complex64::from_polar(1.0, delta_s / u.hbar);
    Ok(vleck * (direct + bounce))
}

/// `K = P [e^{im(b−a)²/2ħT} + A_L e^{iS₀/ħ}]` with `P = √(m/2πiħT)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelDecomposition {
    pub a_l: Complex64,
    /// `m(a+b)²/2T`.
    pub s0_bounce: f64,
    pub prefactor: Complex64,
    pub direct_phase: f64,
    pub kernel: Complex64,
    /// Error estimate of `A_L` inherited from the kernel.
    pub est_error: f64,
}

impl KernelDecomposition {
    pub fn reconstruct(&self, u: &UnitSystem) -> Complex64 {
        self.prefactor
            * (Complex64::from_polar(1.0, self.direct_phase) + self.a_l * Complex64::from_polar(1.0, self.s0_bounce / u.hbar))
    }

    /// `ħ arg A_L`, the excess bounce action measured against the Neumann branch.
    pub fn delta_s(&self, u: &UnitSystem) -> f64 {
        u.hbar * self.a_l.arg()
    }
}

#[allow(non_snake_case)]
pub fn extract_AL(wall: WallParameter, a: f64, b: f64, t: f64, u: &UnitSystem) -> Result<KernelDecomposition> {
    let q = KernelQuery::new(a, b, t, wall, *u)?;
    let k = kernel_closed(&q)?;
    let prefactor = free_prefactor(t, u);
    let direct_phase = u.mass * (b - a) * (b - a) / (2.0 * u.hbar * t);
    let s0_bounce = free_bounce_action(a, b, t, u);
    let a_l = (k.value / prefactor - Complex64::from_polar(1.0, direct_phase)) * Complex64::from_polar(1.0, -s0_bounce / u.hbar);
    Ok(KernelDecomposition { a_l, s0_bounce, prefactor, direct_phase, kernel: k.value, est_error: k.est_error / prefactor.norm() })
}

/// Large-`T` form of `P·A_L` for a finite nonzero wall length.
pub fn al_asymptote(l: f64, a: f64, b: f64, t: f64, u: &UnitSystem) -> Result<Complex64> {
    check_time(t)?;
    let (m, hbar, s) = (u.mass, u.hbar, a + b);
    if l < 0.0 {
        Ok(-free_prefactor(t, u) * Complex64::from_polar(1.0, -2.0 * m * l * (s - l) / (hbar * t)))
    } else if l > 0.0 && l.is_finite() {
        let reach = hbar * t / (m * l);
        Ok(Complex64::from_polar(2.0 / l * (-s / l).exp(), -m / (2.0 * hbar * t) * (s * s - reach * reach)))
    } else {
        Err(Error::UnsupportedWall(format!("no asymptote needed for L = {l}")))
    }
}

/// Sums `a + b` probed by [`al_ab_dependence`], at `a = b`.
pub const AB_SUMS: [f64; 4] = [2.0, 3.0, 4.0, 6.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbDependence {
    pub sums: Vec<f64>,
    /// Unwrapped `arg A_L` at each sum.
    pub args: Vec<f64>,
    pub spread: f64,
    /// Largest phase uncertainty from the kernel error estimates.
    pub noise: f64,
}

/// Variation of `arg A_L` with `a + b` at fixed `T`.
pub fn al_ab_dependence(wall: WallParameter, t: f64, u: &UnitSystem) -> Result<AbDependence> {
    let mut args: Vec<f64> = Vec::with_capacity(AB_SUMS.len());
    let mut noise: f64 = 0.0;
    for s in AB_SUMS {
        let dec = extract_AL(wall, s / 2.0, s / 2.0, t, u)?;
        let mut arg = dec.a_l.arg();
        if let Some(&prev) = args.last() {
            arg -= (2.0 * std::f64::consts::PI) * ((arg - prev) / (2.0 * std::f64::consts::PI)).round();
        }
        args.push(arg);
        noise = noise.max(dec.est_error / dec.a_l.norm());
    }
    let hi = args.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = args.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(AbDependence { sums: AB_SUMS.to_vec(), args, spread: hi - lo, noise })
}
