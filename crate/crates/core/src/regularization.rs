//! Three-region step potentials and the fine-tuned families that realize a wall.
//!
//! Region I (`x < −d`) holds `V1 > 0`, region II (`−d < x < 0`) holds `V2 < 0`,
//! and the potential vanishes for `x > 0`. The boundary log-derivative
//! `R(d) = φ'/φ(0)` must converge to `−1/L` for the wall `L` to be realized.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use ode_solvers::{Dopri5, OutputType, System, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::UnitSystem;
use crate::wall::WallParameter;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPotential {
    pub v1: f64,
    pub v2: f64,
    pub d: f64,
}

impl StepPotential {
    pub fn new(v1: f64, v2: f64, d: f64) -> Result<Self> {
        if !(v1 > 0.0 && v1.is_finite()) || !(v2 < 0.0 && v2.is_finite()) || !(d > 0.0 && d.is_finite()) {
            return Err(Error::DomainError(format!(
                "step potential needs V1 > 0, V2 < 0, d > 0 (got {v1}, {v2}, {d})"
            )));
        }
        Ok(Self { v1, v2, d })
    }

    pub fn value(&self, x: f64) -> f64 {
        if x < -self.d {
            self.v1
        } else if x < 0.0 {
            self.v2
        } else {
            0.0
        }
    }
}

/// Region-II amplitudes normalized to `φ(−d) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Amplitudes {
    /// `ln N` for `φ_I = N e^{κx}`; stored as a logarithm because `κd` can be large.
    pub log_n: f64,
    pub a: Complex64,
    pub b: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchingSolution {
    pub energy: f64,
    pub kappa: f64,
    pub ktilde: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `R = k̃ tan(α − β)`; signed infinity within rounding of a pole.
    pub r: f64,
    /// `1/R`, finite everywhere.
    pub inv_r: f64,
    pub amplitudes: Amplitudes,
}

impl MatchingSolution {
    /// `φ_II(0)` and `φ_II'(0)`.
    pub fn boundary_values(&self) -> (Complex64, Complex64) {
        let Amplitudes { a, b, .. } = self.amplitudes;
        (a + b, Complex64::new(0.0, self.ktilde) * (a - b))
    }

    /// `R` from the region-II amplitudes, `ik̃(A − B)/(A + B)`.
    pub fn r_from_amplitudes(&self) -> f64 {
        let (phi, dphi) = self.boundary_values();
        (dphi / phi).re
    }

    /// Exterior amplitudes `(C, D)` of `C e^{ikx} + D e^{−ikx}`; positive energies only.
    pub fn exterior(&self, units: &UnitSystem) -> Result<(Complex64, Complex64)> {
        if !(self.energy > 0.0) {
            return Err(Error::DomainError(format!(
                "no scattering exterior at E = {} (bound-type region III)",
                self.energy
            )));
        }
        let k = units.wavenumber(self.energy);
        let (phi, dphi) = self.boundary_values();
        let ratio = dphi / Complex64::new(0.0, k);
        Ok(((phi + ratio) * 0.5, (phi - ratio) * 0.5))
    }
}

/// Distance in `α − β` below which `R` is reported as a signed infinity.
const POLE_WINDOW: f64 = 1e-12;

/// Matches the eigenfunction of energy `E` across the two steps.
pub fn match_step(p: &StepPotential, energy: f64, units: &UnitSystem) -> Result<MatchingSolution> {
    if !(energy < p.v1) {
        return Err(Error::DomainError(format!("E = {energy} must lie below V1 = {}", p.v1)));
    }
    if !(energy > p.v2) {
        return Err(Error::DomainError(format!("E = {energy} must lie above V2 = {}", p.v2)));
    }
    let scale = (2.0 * units.mass).sqrt() / units.hbar;
    let kappa = scale * (p.v1 - energy).sqrt();
    let ktilde = scale * (energy - p.v2).sqrt();
    let alpha = (kappa / ktilde).atan();
    let beta = ktilde * p.d;
    let x = alpha - beta;
    let offset = x - FRAC_PI_2;
    let dist = (offset - PI * (offset / PI).round()).abs();
    if dist == 0.0 {
        return Err(Error::PoleAtMatching(format!("α − β = π/2 mod π at E = {energy}, d = {}", p.d)));
    }
    let (sin, cos) = x.sin_cos();
    let r = if dist < POLE_WINDOW { f64::INFINITY.copysign(sin * cos) } else { ktilde * sin / cos };
    let inv_r = cos / (ktilde * sin);
    let ratio = kappa / Complex64::new(0.0, ktilde);
    let amplitudes = Amplitudes {
        log_n: kappa * p.d,
        a: (ratio + 1.0) * 0.5 * Complex64::from_polar(1.0, beta),
        b: (-ratio + 1.0) * 0.5 * Complex64::from_polar(1.0, -beta),
    };
    Ok(MatchingSolution { energy, kappa, ktilde, alpha, beta, r, inv_r, amplitudes })
}

/// `arg(C/D) ∈ [0, 2π)`, the finite-`d` analogue of the wall phase shift.
pub fn reflection_phase(p: &StepPotential, energy: f64, units: &UnitSystem) -> Result<f64> {
    if !(energy > 0.0) {
        return Err(Error::DomainError(format!("reflection phase needs E > 0, got {energy}")));
    }
    let m = match_step(p, energy, units)?;
    let k = units.wavenumber(energy);
    // C/D = (ik r + 1)/(ik r − 1) with r = 1/R, finite at poles of R
    let ikr = Complex64::new(0.0, k * m.inv_r);
    Ok(((ikr + 1.0) / (ikr - 1.0)).arg().rem_euclid(2.0 * PI))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeFamily {
    /// `α0 = 0`, `β0 = 0`: `V1 = c²d^{2ν} − (2c/L)d^ν`, `V2 = −c d^{ν−1}`.
    S311,
    /// `α0 = 0`, `β0 > 0`: as S311 with `V2 = −(β0²d^{−2} + 2c d^{ν−1})`.
    S312,
    /// `0 < α0 = β0 < π/2`.
    S316,
    /// `α0 = π/2`: `V1 = c1²d^{2ν}`, `V2 = −(β0²d^{−2} + (2/L)d^{−1})`.
    S318,
    /// Dirichlet sequence with bounce action `πħ`: `V1 = c/d`, `V2 = −(π/2)²d^{−2}`.
    S512,
    /// `V1 = c²/d`, `V2 = −c d^{−3/2}`.
    S513,
}

impl SchemeFamily {
    pub const ALL: [SchemeFamily; 6] = [Self::S311, Self::S312, Self::S316, Self::S318, Self::S512, Self::S513];

    pub fn name(&self) -> &'static str {
        match self {
            Self::S311 => "s311",
            Self::S312 => "s312",
            Self::S316 => "s316",
            Self::S318 => "s318",
            Self::S512 => "s512",
            Self::S513 => "s513",
        }
    }

    /// Smallest `d` before cancellation in `α − β` outweighs the convergence
    /// with the family defaults, found by decade sweeps at `E ∈ [0.5, 2]`.
    pub fn finest_d(&self) -> f64 {
        match self {
            Self::S311 => 1e-16,
            Self::S312 => 1e-10,
            Self::S316 | Self::S318 | Self::S512 => 1e-8,
            Self::S513 => 1e-12,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(text))
            .ok_or_else(|| Error::MalformedInput(format!("unknown scheme '{text}'")))
    }
}

/// A `d`-indexed step-potential family. Energies in the formulas carry the
/// factor `ħ²/2m` applied by [`scheme_potential`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizationScheme {
    pub family: SchemeFamily,
    pub l_target: WallParameter,
    pub c: f64,
    pub nu: f64,
    pub beta0: f64,
    pub c1: f64,
}

impl RegularizationScheme {
    /// Family defaults. `ν = −1/4` for S311 and S312, `β0 = π` for S312 and
    /// `β0 = π/2` for S318 are the values inside each family's convergence window.
    pub fn with_defaults(family: SchemeFamily, l_target: WallParameter) -> Self {
        let (nu, beta0) = match family {
            SchemeFamily::S311 => (-0.25, 0.0),
            SchemeFamily::S312 => (-0.25, PI),
            SchemeFamily::S316 => (0.0, PI / 4.0),
            SchemeFamily::S318 => (-3.0, FRAC_PI_2),
            SchemeFamily::S512 => (0.0, FRAC_PI_2),
            SchemeFamily::S513 => (-0.5, 0.0),
        };
        let l_target = match family {
            SchemeFamily::S512 => WallParameter::DIRICHLET,
            SchemeFamily::S513 => WallParameter::NEUMANN,
            _ => l_target,
        };
        Self { family, l_target, c: 1.0, nu, beta0, c1: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScheme(msg));
        let fam = self.family.name();
        let needs_length = matches!(
            self.family,
            SchemeFamily::S311 | SchemeFamily::S312 | SchemeFamily::S316 | SchemeFamily::S318
        );
        if needs_length && self.l_target.is_dirichlet() {
            return bad(format!("{fam} targets a nonzero L (got L = 0)"));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad(format!("{fam} needs c > 0, got {}", self.c));
        }
        match self.family {
            SchemeFamily::S311 if !(self.nu > -1.0 && self.nu < 0.0) => bad(format!("s311 needs -1 < nu < 0, got {}", self.nu)),
            SchemeFamily::S312 if !(self.nu > -0.5 && self.nu < 0.0) => {
                bad(format!("s312 needs -1/2 < nu < 0, got {}", self.nu))
            }
            SchemeFamily::S312 if !(self.beta0 > 0.0) => bad(format!("s312 needs beta0 > 0, got {}", self.beta0)),
            SchemeFamily::S316 if !(self.beta0 > 0.0 && self.beta0 < FRAC_PI_2) => {
                bad(format!("s316 needs 0 < beta0 < pi/2, got {}", self.beta0))
            }
            SchemeFamily::S318 if !(self.nu < -2.0) => bad(format!("s318 needs nu < -2, got {}", self.nu)),
            SchemeFamily::S318 if !(self.beta0 > 0.0) => bad(format!("s318 needs beta0 > 0, got {}", self.beta0)),
            SchemeFamily::S318 if !(self.c1 > 0.0 && self.c1.is_finite()) => {
                bad(format!("s318 needs c1 > 0, got {}", self.c1))
            }
            _ => Ok(()),
        }
    }

    /// `1/L_target` with `1/∞ = 0`.
    fn inv_l(&self) -> f64 {
        self.l_target.inverse_length().unwrap_or(f64::INFINITY)
    }

    /// Exponent `q` in `d·√|V2| ∝ d^q` as `d → 0`, from the leading power of `V2`.
    pub fn action_exponent(&self) -> f64 {
        let v2_power = match self.family {
            SchemeFamily::S311 => self.nu - 1.0,
            SchemeFamily::S312 => (-2.0f64).min(self.nu - 1.0),
            SchemeFamily::S316 | SchemeFamily::S318 | SchemeFamily::S512 => -2.0,
            SchemeFamily::S513 => -1.5,
        };
        1.0 + 0.5 * v2_power
    }

    /// Coefficient of the leading power of `|V2|` in units of `ħ²/2m`.
    fn v2_leading_coefficient(&self) -> f64 {
        match self.family {
            SchemeFamily::S311 => self.c,
            SchemeFamily::S312 => self.beta0 * self.beta0,
            SchemeFamily::S316 | SchemeFamily::S318 => self.beta0 * self.beta0,
            SchemeFamily::S512 => (PI / 2.0).powi(2),
            SchemeFamily::S513 => self.c,
        }
    }
}

/// `V1(d)`, `V2(d)` for a scheme.
pub fn scheme_potential(scheme: &RegularizationScheme, d: f64, units: &UnitSystem) -> Result<StepPotential> {
    scheme.validate()?;
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::DegenerateD(format!("d must be positive and finite, got {d}")));
    }
    let k = units.kinetic();
    let RegularizationScheme { c, nu, beta0, c1, .. } = *scheme;
    let inv_l = scheme.inv_l();
    let (v1, v2) = match scheme.family {
        SchemeFamily::S311 => (c * c * d.powf(2.0 * nu) - 2.0 * c * inv_l * d.powf(nu), -c * d.powf(nu - 1.0)),
        SchemeFamily::S312 => (
            c * c * d.powf(2.0 * nu) - 2.0 * c * inv_l * d.powf(nu),
            -(beta0 * beta0 / (d * d) + 2.0 * c * d.powf(nu - 1.0)),
        ),
        SchemeFamily::S316 => {
            let t = beta0.tan();
            let cos2 = beta0.cos().powi(2);
            ((beta0 * t).powi(2) / (d * d) - 2.0 * inv_l * beta0 * t / cos2 / d, -beta0 * beta0 / (d * d))
        }
        SchemeFamily::S318 => (c1 * c1 * d.powf(2.0 * nu), -(beta0 * beta0 / (d * d) + 2.0 * inv_l / d)),
        SchemeFamily::S512 => (c / d, -(PI / 2.0).powi(2) / (d * d)),
        SchemeFamily::S513 => (c * c / d, -c * d.powf(-1.5)),
    };
    let (v1, v2) = (k * v1, k * v2);
    if !(v1 > 0.0) || !v1.is_finite() {
        return Err(Error::DegenerateD(format!("V1({d}) = {v1} is not a positive finite barrier")));
    }
    if !(v2 < 0.0) || !v2.is_finite() {
        return Err(Error::DegenerateD(format!("V2({d}) = {v2} is not a negative finite well")));
    }
    StepPotential::new(v1, v2, d)
}

/// `lim 2√(2m) d √|V2(d)|` from the power of `V2`; `DivergentLimit` for negative exponents.
pub fn delta_s_limit(scheme: &RegularizationScheme, units: &UnitSystem) -> Result<f64> {
    scheme.validate()?;
    let q = scheme.action_exponent();
    if q < 0.0 {
        return Err(Error::DivergentLimit(format!(
            "d·√|V2| grows like d^{q} for {}",
            scheme.family.name()
        )));
    }
    if q > 0.0 {
        return Ok(0.0);
    }
    // d √|V2| → √(ħ²/2m · coeff), times 2√(2m)
    Ok(2.0 * (2.0 * units.mass).sqrt() * (units.kinetic() * scheme.v2_leading_coefficient()).sqrt())
}

/// One `(d, E)` evaluation of a convergence sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub d: f64,
    pub energy: f64,
    pub r: f64,
    pub inv_r: f64,
    /// Distance to the target: `|R + 1/L|`, `|1/R|` for `L = 0`, `|R|` for `L = ∞`.
    pub err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    /// Row-major in `(d, E)`.
    pub rows: Vec<SweepRow>,
    /// Energies whose error grew between the two smallest `d`.
    pub non_converging: Vec<f64>,
    /// Log-log slope of the error against `d` over the last two `d`, per energy.
    pub orders: Vec<f64>,
}

impl Sweep {
    pub fn at_smallest_d(&self) -> Vec<SweepRow> {
        let d_min = self.rows.iter().map(|r| r.d).fold(f64::INFINITY, f64::min);
        self.rows.iter().copied().filter(|r| r.d == d_min).collect()
    }
}

pub fn target_error(l_target: WallParameter, m: &MatchingSolution) -> f64 {
    match l_target {
        WallParameter::Infinite => m.r.abs(),
        WallParameter::Finite(0.0) => m.inv_r.abs(),
        WallParameter::Finite(l) => (m.r + 1.0 / l).abs(),
    }
}

pub fn convergence_sweep(
    scheme: &RegularizationScheme,
    energies: &[f64],
    ds: &[f64],
    units: &UnitSystem,
) -> Result<Sweep> {
    scheme.validate()?;
    if ds.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::MalformedInput("d values must decrease strictly".into()));
    }
    if energies.is_empty() || ds.is_empty() {
        return Err(Error::MalformedInput("sweep needs at least one d and one E".into()));
    }
    let cells: Vec<(f64, f64)> = ds.iter().flat_map(|&d| energies.iter().map(move |&e| (d, e))).collect();
    let rows = cells
        .par_iter()
        .map(|&(d, e)| {
            let p = scheme_potential(scheme, d, units)?;
            let m = match_step(&p, e, units)?;
            Ok(SweepRow { d, energy: e, r: m.r, inv_r: m.inv_r, err: target_error(scheme.l_target, &m) })
        })
        .collect::<Result<Vec<_>>>()?;
    let n_e = energies.len();
    let mut non_converging = Vec::new();
    let mut orders = Vec::new();
    for (j, &e) in energies.iter().enumerate() {
        if ds.len() >= 2 {
            let last = rows[(ds.len() - 1) * n_e + j];
            let prev = rows[(ds.len() - 2) * n_e + j];
            if last.err > prev.err {
                non_converging.push(e);
            }
            orders.push((last.err / prev.err).ln() / (last.d / prev.d).ln());
        }
    }
    Ok(Sweep { rows, non_converging, orders })
}

/// Log-spaced `d = 10^{−a}, …, 10^{−b}` over whole decades.
pub fn decades(first: i32, last: i32) -> Vec<f64> {
    if first <= last {
        (first..=last).map(|e| 10f64.powi(-e)).collect()
    } else {
        decades(last, first)
    }
}

/// `φ'' = (2m/ħ²)(V − E)φ` on one constant-potential region.
struct Region {
    q: f64,
}

impl System<f64, Vector2<f64>> for Region {
    fn system(&self, _x: f64, y: &Vector2<f64>, dy: &mut Vector2<f64>) {
        dy[0] = y[1];
        dy[1] = self.q * y[0];
    }
}

/// Advances `(φ, φ')` across a region of the given width. The system is
/// autonomous, so a local coordinate starting at zero is used.
fn integrate_region(q: f64, width: f64, y: Vector2<f64>, rtol: f64) -> Result<Vector2<f64>> {
    let atol = rtol * 1e-6 * y.norm();
    let mut stepper = Dopri5::from_param(
        Region { q },
        0.0,
        width,
        width,
        y,
        rtol,
        atol,
        0.9,
        0.04,
        0.2,
        10.0,
        width,
        0.0,
        1_000_000,
        1000,
        OutputType::Sparse,
    );
    stepper
        .integrate()
        .map_err(|e| Error::QuadratureFailure(format!("ODE integration failed: {e:?}")))?;
    stepper
        .y_out()
        .last()
        .copied()
        .ok_or_else(|| Error::QuadratureFailure("ODE integration produced no output".into()))
}

/// Independent oracle for `R`: integrates the stationary equation from deep in
/// region I (decaying data at `x = −d − 10/κ`) through region II to `x = 0`.
pub fn ode_log_derivative(p: &StepPotential, energy: f64, units: &UnitSystem) -> Result<f64> {
    if !(energy < p.v1 && energy > p.v2) {
        return Err(Error::DomainError(format!("E = {energy} outside (V2, V1)")));
    }
    let c = 2.0 * units.mass / (units.hbar * units.hbar);
    let kappa = (c * (p.v1 - energy)).sqrt();
    let rtol = 1e-12;
    let y = integrate_region(c * (p.v1 - energy), 10.0 / kappa, Vector2::new(1.0, kappa), rtol)?;
    let y = integrate_region(c * (p.v2 - energy), p.d, y, rtol)?;
    Ok(y[1] / y[0])
}
