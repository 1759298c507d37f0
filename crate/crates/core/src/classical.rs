//! Classical reflecting potentials and the delay/turning-point inversion.
//!
//! A particle of energy `E` launched from `x0` towards the wall returns after
//! the flight time across `[x(E), x0]`; its delay is measured against free
//! flight to `x = 0` and back. For `L > 0` a potential supported on `(0, L]`
//! reproduces the quantum delay for every `x0`; for `L < 0` the turning points
//! required by the Abel inversion are negative, and only the `x0 → ∞` limit can
//! be realized.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{integrate_adaptive, integrate_adaptive_breaks, Pchip};
use crate::units::UnitSystem;

pub(crate) const QUAD_TOL: f64 = 1e-10;

/// `ħ²/(2mL²)`, the energy scale of a wall of length `L`.
fn wall_energy(l: f64, u: &UnitSystem) -> f64 {
    u.kinetic() / (l * l)
}

/// Strictly decreasing samples of a barrier ending at zero. Left of the first
/// node the particle meets a hard wall; right of the last node `V = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedPotential {
    interp: Pchip,
}

impl TabulatedPotential {
    pub fn new(xs: Vec<f64>, vs: Vec<f64>) -> Result<Self> {
        if xs.first().map_or(true, |&x| !(x > 0.0)) {
            return Err(Error::DomainError("tabulated potential must start at x > 0".into()));
        }
        if vs.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::DomainError("tabulated potential must decrease strictly".into()));
        }
        if vs.last() != Some(&0.0) {
            return Err(Error::DomainError("tabulated potential must end at V = 0".into()));
        }
        Ok(Self { interp: Pchip::new(xs, vs)? })
    }

    fn value(&self, x: f64) -> f64 {
        let (lo, hi) = self.interp.x_range();
        if x >= hi {
            0.0
        } else if x < lo {
            f64::INFINITY
        } else {
            self.interp.eval(x)
        }
    }
}

/// Parameters of the weak realization for `L < 0`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WeakRealization {
    /// Wall length, negative.
    pub l: f64,
    /// Asymptotic strength `c ≥ 1`.
    pub c: f64,
}

impl WeakRealization {
    pub fn new(l: f64, c: f64) -> Result<Self> {
        let r = Self { l, c };
        r.validate()?;
        Ok(r)
    }

    fn validate(&self) -> Result<()> {
        if !(self.l < 0.0 && self.l.is_finite()) {
            return Err(Error::DomainError(format!("weak realization needs L < 0, got {}", self.l)));
        }
        if !(self.c >= 1.0 && self.c.is_finite()) {
            return Err(Error::InvalidC(self.c));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassicalPotential {
    /// `(ħ²/2mL²)(L²/x² − 1)` on `(0, L]`, zero beyond; `L > 0`.
    Counterpart { l: f64 },
    /// Weak realization; the closed form is used for `c = 1`.
    Weak(WeakRealization),
    /// `V ≡ 0` with the particle reflected at `x = 0`.
    HardWall,
    Tabulated(TabulatedPotential),
}

impl ClassicalPotential {
    pub fn value(&self, x: f64, u: &UnitSystem) -> Result<f64> {
        match self {
            Self::Counterpart { l } => counterpart_potential(*l, x, u),
            Self::Weak(r) => weak_potential(r, x, u),
            Self::HardWall if x > 0.0 => Ok(0.0),
            Self::Tabulated(t) if x > 0.0 => Ok(t.value(x)),
            _ => Err(Error::DomainError(format!("potential is defined for x > 0, got {x}"))),
        }
    }

    /// Right end of the region where `V ≠ 0`.
    pub fn support_end(&self) -> f64 {
        match self {
            Self::Counterpart { l } => *l,
            Self::Weak(_) => f64::INFINITY,
            Self::HardWall => 0.0,
            Self::Tabulated(t) => t.interp.x_range().1,
        }
    }
}

/// Largest `x` with `V(x) = E`, approached from the allowed side.
pub fn turning_point(v: &ClassicalPotential, energy: f64, u: &UnitSystem) -> Result<f64> {
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(Error::DomainError(format!("turning point needs E > 0, got {energy}")));
    }
    match v {
        ClassicalPotential::HardWall => Ok(0.0),
        ClassicalPotential::Weak(r) => weak_turning(r, energy, u),
        ClassicalPotential::Counterpart { .. } | ClassicalPotential::Tabulated(_) => {
            let above = |x: f64| v.value(x, u).map(|vx| vx > energy);
            let mut hi = v.support_end();
            let floor = match v {
                ClassicalPotential::Tabulated(t) => t.interp.x_range().0,
                _ => 0.0,
            };
            let mut lo = 0.5 * hi;
            while !above(lo)? {
                hi = lo;
                lo *= 0.5;
                if lo < floor || lo < f64::MIN_POSITIVE {
                    if floor > 0.0 && above(floor)? {
                        lo = floor;
                        break;
                    }
                    return Err(Error::NoTurningPoint(format!("E = {energy} exceeds the barrier height")));
                }
            }
            // keep V(lo) > E ≥ V(hi) down to the last representable midpoint
            loop {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    return Ok(hi);
                }
                if above(mid)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
    }
}

/// `E − V(x(E) + s²)`; the counterpart uses the factored form to avoid cancellation.
fn gap(v: &ClassicalPotential, energy: f64, xt: f64, s: f64, u: &UnitSystem) -> f64 {
    let x = xt + s * s;
    match *v {
        ClassicalPotential::Counterpart { l } if x <= l => {
            wall_energy(l, u) * l * l * s * s * (2.0 * xt + s * s) / (xt * xt * x * x)
        }
        _ => {
            // x carries the rounding of s²; rescale so the gap refers to s itself
            let d = x - xt;
            let g = energy - v.value(x, u).unwrap_or(f64::NAN);
            if d > 0.0 { g * (s * s / d) } else { g }
        }
    }
}

/// Functions of `E − V` integrated along an orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Moment {
    /// `1/√(E−V) − 1/√E`
    Excess,
    /// `1/√(E−V)`
    Time,
    /// `√(E−V)`
    Action,
    /// `(E−V)^{−3/2}`
    InverseCube,
}

impl Moment {
    pub(crate) fn of(self, gap: f64, energy: f64) -> f64 {
        match self {
            Self::Excess => 1.0 / gap.sqrt() - 1.0 / energy.sqrt(),
            Self::Time => 1.0 / gap.sqrt(),
            Self::Action => gap.sqrt(),
            Self::InverseCube => gap.powf(-1.5),
        }
    }
}

/// Interpolation nodes strictly inside `(lo, hi)`: kinks of every integrand.
pub(crate) fn nodes_between(v: &ClassicalPotential, lo: f64, hi: f64) -> Vec<f64> {
    match v {
        ClassicalPotential::Tabulated(t) => t.interp.xs().iter().copied().filter(|&x| x > lo && x < hi).collect(),
        _ => Vec::new(),
    }
}

/// `∫_{x(E)}^{end} moment dx` with `x = x(E) + s²`; beyond the support `V = 0`
/// and the remainder is added in closed form.
pub(crate) fn orbit_integral(
    v: &ClassicalPotential,
    energy: f64,
    xt: f64,
    end: f64,
    moment: Moment,
    tol: f64,
    u: &UnitSystem,
) -> Result<f64> {
    let inner_end = end.min(v.support_end());
    let mut value = 0.0;
    if inner_end > xt {
        let integrand = |s: f64| 2.0 * s * moment.of(gap(v, energy, xt, s, u), energy);
        let mut breaks = vec![0.0];
        breaks.extend(nodes_between(v, xt, inner_end).into_iter().map(|x| (x - xt).sqrt()));
        breaks.push((inner_end - xt).sqrt());
        value = integrate_adaptive_breaks(&breaks, tol, integrand)?.0;
    }
    let outer = end - inner_end.max(xt);
    if outer > 0.0 {
        value += outer * moment.of(energy, energy);
    }
    if !value.is_finite() {
        return Err(Error::QuadratureFailure(format!("orbit integrand not finite at E = {energy}")));
    }
    Ok(value)
}

/// `√(2m)∫_{x(E)}^{x0} dx/√(E−V) − 2x0/v`, with `x = x(E) + s²` at the turning point.
pub fn classical_time_delay(v: &ClassicalPotential, energy: f64, x0: f64, u: &UnitSystem) -> Result<f64> {
    let xt = turning_point(v, energy, u)?;
    if !(x0 > xt) {
        return Err(Error::DomainError(format!("x0 = {x0} must lie beyond the turning point {xt}")));
    }
    // V = 0 beyond the support, so the free-flight difference vanishes there
    let excess = orbit_integral(v, energy, xt, x0, Moment::Excess, QUAD_TOL, u)?;
    Ok((2.0 * u.mass).sqrt() * (excess - xt / energy.sqrt()))
}

/// Time spent left of `x_ref`, where `V` must vanish.
pub fn tau_tilde(v: &ClassicalPotential, energy: f64, x_ref: f64, u: &UnitSystem) -> Result<f64> {
    if x_ref < v.support_end() {
        return Err(Error::DomainError(format!("reference point {x_ref} inside the potential support")));
    }
    let xt = turning_point(v, energy, u)?;
    let excess = orbit_integral(v, energy, xt, v.support_end(), Moment::Excess, QUAD_TOL, u)?;
    Ok((2.0 * u.mass).sqrt() * (excess + (x_ref - xt).max(0.0) / energy.sqrt()))
}

pub fn counterpart_potential(l: f64, x: f64, u: &UnitSystem) -> Result<f64> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::DomainError(format!("counterpart potential needs L > 0, got {l}")));
    }
    if !(x > 0.0) {
        return Err(Error::DomainError(format!("counterpart potential is defined for x > 0, got {x}")));
    }
    Ok(if x <= l { wall_energy(l, u) * ((l / x).powi(2) - 1.0) } else { 0.0 })
}

/// Energy dependence of a delay, the input of the Abel inversion.
#[derive(Debug, Clone, PartialEq)]
pub enum DelayProfile {
    /// `|τ|` of the quantum wall.
    QuantumTau { l: f64 },
    /// `2L/v + τ`, the time left of `x = L` for `L > 0`.
    TauTilde { l: f64 },
    /// Samples interpolated in `u = √E`; held constant below the first sample.
    Sampled(Pchip),
}

impl DelayProfile {
    pub fn sampled(energies: &[f64], taus: &[f64]) -> Result<Self> {
        if energies.iter().any(|&e| !(e >= 0.0)) {
            return Err(Error::DomainError("sampled delays need E >= 0".into()));
        }
        Ok(Self::Sampled(Pchip::new(energies.iter().map(|e| e.sqrt()).collect(), taus.to_vec())?))
    }

    /// Samples `τ̃` of a potential at the given energies.
    pub fn from_potential(v: &ClassicalPotential, energies: &[f64], x_ref: f64, u: &UnitSystem) -> Result<Self> {
        let taus = energies.par_iter().map(|&e| tau_tilde(v, e, x_ref, u)).collect::<Result<Vec<_>>>()?;
        Self::sampled(energies, &taus)
    }

    fn max_energy(&self) -> f64 {
        match self {
            Self::Sampled(p) => p.x_range().1.powi(2),
            _ => f64::INFINITY,
        }
    }

    pub fn eval(&self, energy: f64, u: &UnitSystem) -> Result<f64> {
        if !(energy > 0.0) {
            return Err(Error::DomainError(format!("delay profile needs E > 0, got {energy}")));
        }
        match *self {
            Self::QuantumTau { l } => {
                let gamma = 1.0 / wall_energy(l, u);
                Ok((2.0 * u.mass).sqrt() * l.abs() / (energy.sqrt() * (1.0 + gamma * energy)))
            }
            Self::TauTilde { l } if l > 0.0 => {
                Ok((2.0 * u.mass * l * l * energy).sqrt() / (wall_energy(l, u) + energy))
            }
            Self::TauTilde { l } => Err(Error::DomainError(format!("τ̃ is defined for L > 0, got {l}"))),
            Self::Sampled(ref p) => {
                let (u0, u1) = p.x_range();
                let s = energy.sqrt();
                if s > u1 * (1.0 + 1e-12) {
                    return Err(Error::DomainError(format!("E = {energy} beyond the sampled range")));
                }
                Ok(p.eval(s.max(u0)))
            }
        }
    }
}

/// `x(W) = x_ref − (1/(π√(2m)))∫₀^W τ(E) dE/√(W−E)` with `E = W sin²θ`.
pub fn abel_invert(profile: &DelayProfile, x_ref: f64, w: f64, u: &UnitSystem) -> Result<f64> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::DomainError(format!("Abel inversion needs W > 0, got {w}")));
    }
    if w > profile.max_energy() * (1.0 + 1e-12) {
        return Err(Error::DomainError(format!("W = {w} beyond the sampled delay range")));
    }
    let sw = w.sqrt();
    let integrand = |theta: f64| {
        let s = theta.sin();
        2.0 * sw * s * profile.eval((w * s * s).min(w), u).unwrap_or(f64::NAN)
    };
    let (value, _) = integrate_adaptive(0.0, FRAC_PI_2, QUAD_TOL, integrand)?;
    if !value.is_finite() {
        return Err(Error::QuadratureFailure(format!("Abel integrand not finite at W = {w}")));
    }
    Ok(x_ref - value / (PI * (2.0 * u.mass).sqrt()))
}

/// The bound on turning points that a potential reproducing the delay of an
/// `L < 0` wall for every `x0` would need, by two independent routes.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BoundWitness {
    pub closed: f64,
    pub quadrature: f64,
}

pub fn impossibility_bound(l: f64, w: f64, u: &UnitSystem) -> Result<BoundWitness> {
    if !(l < 0.0 && l.is_finite()) {
        return Err(Error::DomainError(format!("the bound concerns L < 0, got {l}")));
    }
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::DomainError(format!("the bound needs W > 0, got {w}")));
    }
    let closed = -l.abs() / (1.0 + w / wall_energy(l, u)).sqrt();
    let quadrature = abel_invert(&DelayProfile::QuantumTau { l }, 0.0, w, u)?;
    Ok(BoundWitness { closed, quadrature })
}

/// `x(W) = (ħ/√(2m))(c/√W − 1/√(ħ²/2mL² + W))`.
pub fn weak_turning(r: &WeakRealization, w: f64, u: &UnitSystem) -> Result<f64> {
    r.validate()?;
    if !(w > 0.0) {
        return Err(Error::DomainError(format!("turning point needs W > 0, got {w}")));
    }
    let e0 = wall_energy(r.l, u);
    let (a, b) = (w.sqrt(), (e0 + w).sqrt());
    // (c − 1)/√W plus the difference 1/√W − 1/√(e0+W) without cancellation
    let diff = e0 / (a * b * (a + b));
    Ok(u.hbar / (2.0 * u.mass).sqrt() * ((r.c - 1.0) / a + diff))
}

/// Auxiliary function of the `c = 1` closed form; `η(0) = 2^{−1/3}`.
pub fn weak_eta(y: f64) -> f64 {
    let t = y.powi(4) / 27.0;
    let s = (1.0 + t).sqrt();
    let (p, q) = ((s + 1.0).cbrt(), (t / (s + 1.0)).cbrt());
    (2.0 / (p * p + p * q + q * q)).sqrt() / 2f64.sqrt()
}

/// The potential whose turning points are [`weak_turning`].
pub fn weak_potential(r: &WeakRealization, x: f64, u: &UnitSystem) -> Result<f64> {
    r.validate()?;
    if !(x > 0.0) {
        return Err(Error::DomainError(format!("weak potential is defined for x > 0, got {x}")));
    }
    if r.c == 1.0 {
        let y = x / r.l.abs();
        let eta = weak_eta(y);
        let y23 = y.powf(2.0 / 3.0);
        let bracket = y23 + 1.0 / eta + 2.0 * (eta - eta.powi(4)).sqrt();
        Ok(4.0 * wall_energy(r.l, u) / (y23 * bracket * bracket))
    } else {
        weak_potential_by_inversion(r, x, u)
    }
}

/// Inverts [`weak_turning`] by bisection in `W`.
pub fn weak_potential_by_inversion(r: &WeakRealization, x: f64, u: &UnitSystem) -> Result<f64> {
    r.validate()?;
    if !(x > 0.0) {
        return Err(Error::DomainError(format!("weak potential is defined for x > 0, got {x}")));
    }
    let f = |w: f64| weak_turning(r, w, u).map(|xw| xw - x).unwrap_or(f64::NAN);
    // x(W) < (ħ/√2m) c/√W puts the root below this W
    let mut hi = u.kinetic() * r.c * r.c / (x * x);
    let mut lo = hi;
    for _ in 0..400 {
        lo *= 0.25;
        if f(lo) > 0.0 {
            break;
        }
        hi = lo;
    }
    if !(f(lo) > 0.0) {
        return Err(Error::NoSolution(format!("no energy with turning point {x}")));
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Turning point required for a fixed finite launch point `x0` with `V(x0) = v0`.
pub fn weak_finite_inversion(x0: f64, v0: f64, l: f64, w: f64, u: &UnitSystem) -> Result<f64> {
    if !(l < 0.0 && l.is_finite()) {
        return Err(Error::DomainError(format!("finite-x0 inversion needs L < 0, got {l}")));
    }
    if !(x0 > 0.0 && v0 > 0.0 && v0 < w) {
        return Err(Error::DomainError(format!("need x0 > 0 and 0 < V(x0) < W (got {x0}, {v0}, {w})")));
    }
    let gamma = 1.0 / wall_energy(l, u);
    let first = x0 / PI * (1.0 - 2.0 * v0 / w).acos();
    let ratio = ((1.0 + gamma * w) / (1.0 + gamma * v0) * v0 / w).sqrt();
    let second = 2.0 * l.abs() / PI / (1.0 + gamma * w).sqrt() * ratio.min(1.0).acos();
    Ok(first - second)
}

/// Closed-form delay of the weak potential for a launch point `x0`.
pub fn weak_delay_formula(r: &WeakRealization, x0: f64, energy: f64, u: &UnitSystem) -> Result<f64> {
    let v0 = weak_potential(r, x0, u)?;
    if !(energy > v0) {
        return Err(Error::DomainError(format!("E = {energy} must exceed V(x0) = {v0}")));
    }
    let e0 = wall_energy(r.l, u);
    let t = v0 / energy;
    // (√(1 − t) − 1)/√(V0 E) rewritten without cancellation
    let first = -r.c * t.sqrt() / (energy * (1.0 + (1.0 - t).sqrt()));
    let second = (1.0 / energy.sqrt() - (energy - v0).sqrt() / (e0 + energy)) / (e0 + v0).sqrt();
    Ok(u.hbar * (first + second))
}
