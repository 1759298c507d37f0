//! Exact propagators `K(b, T; a, 0)` on the half line and a spectral oracle.

use std::f64::consts::{FRAC_PI_4, PI};

use errorfunctions::ComplexErrorFunctions;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{extrapolate_to_zero, integrate_adaptive, GL16, GL32};
use crate::units::UnitSystem;
use crate::wall::WallParameter;

/// Propagation from `a` at time 0 to `b` at time `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelQuery {
    pub a: f64,
    pub b: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub wall: WallParameter,
    #[serde(default)]
    pub units: UnitSystem,
}

impl KernelQuery {
    pub fn new(a: f64, b: f64, t: f64, wall: WallParameter, units: UnitSystem) -> Result<Self> {
        let q = Self { a, b, t, wall, units };
        q.validate()?;
        Ok(q)
    }

    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !(ok(self.a) && ok(self.b) && ok(self.t)) {
            return Err(Error::DomainError(format!(
                "kernel needs a, b, T > 0 (got a = {}, b = {}, T = {})",
                self.a, self.b, self.t
            )));
        }
        Ok(())
    }

    /// Free prefactor `√(m / 2πiħT)`.
    pub fn prefactor(&self) -> Complex64 {
        free_prefactor(self.t, &self.units)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelMethod {
    Closed,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: Complex64,
    pub method: KernelMethod,
    /// A-posteriori error estimate (cross-check or refinement difference).
    pub est_error: f64,
}

pub fn free_prefactor(t: f64, units: &UnitSystem) -> Complex64 {
    Complex64::from_polar((units.mass / (2.0 * PI * units.hbar * t)).sqrt(), -FRAC_PI_4)
}

/// `∫₀^∞ e^{−z/λ} e^{iα(s ± z)²} dz` by completing the square into a scaled
/// complementary error function.
fn tail_integral(alpha: f64, s: f64, lambda: f64, sign: f64) -> Complex64 {
    let p = Complex64::new(sign * s, 1.0 / (2.0 * alpha * lambda));
    let zeta = Complex64::from_polar(alpha.sqrt(), -FRAC_PI_4) * p;
    Complex64::from_polar(0.5 * (PI / alpha).sqrt(), alpha * s * s + FRAC_PI_4) * zeta.erfcx()
}

/// The same integral by adaptive quadrature, used as a cross-check when the
/// integrand performs few oscillations over its decay length.
fn tail_integral_quadrature(alpha: f64, s: f64, lambda: f64, sign: f64) -> Result<Complex64> {
    let end = 40.0 * lambda;
    let f = |z: f64| {
        let w = s + sign * z;
        Complex64::from_polar((-z / lambda).exp(), alpha * w * w)
    };
    integrate_adaptive(0.0, end, 1e-13, f).map(|(v, _)| v)
}

/// Oscillations below which the quadrature cross-check is performed.
const CROSS_CHECK_CYCLES: f64 = 50.0;
const CROSS_CHECK_TOLERANCE: f64 = 1e-8;

/// Closed-form kernel; `b = 0` and `a = 0` are admitted for boundary checks.
fn closed_value(wall: WallParameter, a: f64, b: f64, t: f64, units: &UnitSystem) -> Result<(Complex64, f64)> {
    let pre = free_prefactor(t, units);
    let alpha = units.mass / (2.0 * units.hbar * t);
    let s = a + b;
    let direct = Complex64::from_polar(1.0, alpha * (b - a) * (b - a));
    let bounce = Complex64::from_polar(1.0, alpha * s * s);
    let l = match wall {
        WallParameter::Infinite => return Ok((pre * (direct + bounce), 0.0)),
        WallParameter::Finite(0.0) => return Ok((pre * (direct - bounce), 0.0)),
        WallParameter::Finite(l) => l,
    };
    let lambda = l.abs();
    let sign = if l < 0.0 { 1.0 } else { -1.0 };
    let tail = tail_integral(alpha, s, lambda, sign);
    if !tail.re.is_finite() || !tail.im.is_finite() {
        return Err(Error::EvaluationFailure(format!("erfc evaluation overflowed at L = {l}, T = {t}")));
    }
    let reach = s + 40.0 * lambda;
    let cycles = alpha * (reach * reach - if l > 0.0 { 0.0 } else { s * s }) / (2.0 * PI);
    let mut check = 0.0;
    if cycles <= CROSS_CHECK_CYCLES {
        let quad = tail_integral_quadrature(alpha, s, lambda, sign)?;
        check = (quad - tail).norm() / lambda;
        if check > CROSS_CHECK_TOLERANCE {
            return Err(Error::EvaluationFailure(format!(
                "erfc tail integral disagrees with quadrature by {check:e} (L = {l}, T = {t})"
            )));
        }
    }
    let mut value = pre * (direct + bounce - tail * (2.0 / lambda));
    if l > 0.0 {
        let theta = units.hbar * t / (2.0 * units.mass * l * l);
        value += Complex64::from_polar(2.0 / l * (-s / l).exp(), theta);
    }
    Ok((value, check * 2.0 / lambda * pre.norm()))
}

/// Closed-form kernel for every wall.
pub fn kernel_closed(q: &KernelQuery) -> Result<KernelValue> {
    q.validate()?;
    let (value, check) = closed_value(q.wall, q.a, q.b, q.t, &q.units)?;
    let est_error = check.max(1e-13 * value.norm());
    Ok(KernelValue { value, method: KernelMethod::Closed, est_error })
}

/// The bound-state contribution `(2/L) e^{iħT/(2mL²)} e^{−(a+b)/L}` (zero unless `0 < L < ∞`).
pub fn bound_contribution(q: &KernelQuery) -> Complex64 {
    match q.wall {
        WallParameter::Finite(l) if l > 0.0 => {
            let theta = q.units.hbar * q.t / (2.0 * q.units.mass * l * l);
            Complex64::from_polar(2.0 / l * (-(q.a + q.b) / l).exp(), theta)
        }
        _ => Complex64::default(),
    }
}

/// Controls for the spectral oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralOptions {
    /// Upper wavenumber cutoff; chosen from the smallest damping when `None`.
    pub k_max: Option<f64>,
    /// Minimum number of quadrature nodes.
    pub nodes: usize,
    /// Whether the bound-state term is added for `L > 0`.
    pub include_bound: bool,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self { k_max: None, nodes: 200, include_bound: true }
    }
}

const DAMPING_LEVELS: usize = 4;

/// Eigenfunction expansion `∫₀^{k_max} φ_k(b) φ_k*(a) e^{−iħk²(T−iε)/2m} dk`
/// extrapolated to `ε → 0`, plus the bound-state term.
pub fn kernel_spectral(q: &KernelQuery, opts: SpectralOptions) -> Result<KernelValue> {
    q.validate()?;
    if opts.nodes < 200 {
        return Err(Error::MalformedInput(format!("spectral oracle needs >= 200 nodes, got {}", opts.nodes)));
    }
    let u = q.units;
    let (a, b, t) = (q.a, q.b, q.t);
    let s = a + b;
    let gamma = u.hbar / (2.0 * u.mass);
    let beta = gamma * t;
    // Scale of T-derivatives of the continuum part; the damping must resolve it.
    let inv_l2 = q.wall.inverse_length().map_or(0.0, |il| il * il);
    let omega = u.mass * s * s / (2.0 * u.hbar * t * t) + 1.0 / t + gamma * inv_l2;
    let eps0 = (1e-2f64).min(0.1 / omega);
    let eps: Vec<f64> = (0..DAMPING_LEVELS).map(|j| eps0 / f64::from(1u32 << j)).collect();
    let eps_min = eps[DAMPING_LEVELS - 1];
    let k_max = opts.k_max.unwrap_or_else(|| (80.0 * u.mass / (u.hbar * eps_min)).sqrt());
    if !(k_max > 0.0) {
        return Err(Error::MalformedInput(format!("k_max must be positive, got {k_max}")));
    }

    // Panels bounded by the points where the fastest phase βk² + sk advances by 2π.
    let phase_end = beta * k_max * k_max + s * k_max;
    let by_phase = (phase_end / (2.0 * PI)).ceil() as usize;
    let panels = by_phase.max(opts.nodes.div_ceil(GL16.len())).max(1);
    let step = phase_end / panels as f64;
    let k_of = |phase: f64| {
        if beta == 0.0 {
            phase / s
        } else {
            2.0 * phase / (s + (s * s + 4.0 * beta * phase).sqrt())
        }
    };

    let integrand = |k: f64| -> [Complex64; DAMPING_LEVELS] {
        let r = crate::spectrum::reflection_coefficient(k, q.wall).expect("k > 0 inside the panels");
        let real = ((k * (b - a)).cos() + (Complex64::from_polar(1.0, k * s) * r).re) / PI;
        let osc = Complex64::from_polar(real, -beta * k * k);
        let g = gamma * k * k;
        let mut out = [Complex64::default(); DAMPING_LEVELS];
        for (o, e) in out.iter_mut().zip(&eps) {
            *o = osc * (-e * g).exp();
        }
        out
    };

    let mut coarse = [Complex64::default(); DAMPING_LEVELS];
    let mut fine = [Complex64::default(); DAMPING_LEVELS];
    for p in 0..panels {
        let lo = k_of(step * p as f64);
        let hi = if p + 1 == panels { k_max } else { k_of(step * (p + 1) as f64) };
        for (rule, acc) in [(&*GL16, &mut coarse), (&*GL32, &mut fine)] {
            for (k, w) in rule.nodes_on(lo, hi) {
                let vals = integrand(k);
                for (slot, v) in acc.iter_mut().zip(vals) {
                    *slot += v * w;
                }
            }
        }
    }

    let scale = q.prefactor().norm();
    let doubling = coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| (c - f).norm())
        .fold(0.0, f64::max);
    if doubling > 1e-8 * scale {
        return Err(Error::QuadratureFailure(format!(
            "spectral k-integral changed by {:e} under node doubling",
            doubling / scale
        )));
    }
    // The continuum part is analytic in T − iε, so a polynomial in ε extrapolates it.
    let full = extrapolate_to_zero(&eps, &fine);
    let partial = extrapolate_to_zero(&eps[..DAMPING_LEVELS - 1], &fine[..DAMPING_LEVELS - 1]);
    let mut value = full;
    if opts.include_bound {
        value += bound_contribution(q);
    }
    Ok(KernelValue { value, method: KernelMethod::Spectral, est_error: (full - partial).norm() + doubling })
}

/// Step of the one-sided difference in `b`.
const BOUNDARY_STEP: f64 = 1e-4;

/// `|K(0) + L ∂_b K(0)|` (or `|∂_b K(0)|` for the Neumann condition) for the
/// kernel of `kernel_wall`, tested against `condition`, relative to `|√(m/2πiħT)|`.
pub fn kernel_boundary_residual(
    kernel_wall: WallParameter,
    condition: WallParameter,
    a: f64,
    t: f64,
    units: &UnitSystem,
) -> Result<f64> {
    KernelQuery::new(a, a, t, kernel_wall, *units)?;
    let h = BOUNDARY_STEP * a.min((units.hbar * t / units.mass).sqrt()).min(1.0);
    let k = |b: f64| closed_value(kernel_wall, a, b, t, units).map(|v| v.0);
    let (k0, k1, k2) = (k(0.0)?, k(h)?, k(2.0 * h)?);
    let slope = (k0 * -3.0 + k1 * 4.0 - k2) / (2.0 * h);
    let raw = match condition {
        WallParameter::Infinite => slope.norm(),
        WallParameter::Finite(l) => (k0 + slope * l).norm(),
    };
    Ok(raw / free_prefactor(t, units).norm())
}

/// Residual of the closed-form kernel against its own wall condition.
pub fn kernel_boundary_check(wall: WallParameter, a: f64, t: f64, units: &UnitSystem) -> Result<f64> {
    kernel_boundary_residual(wall, wall, a, t, units)
}

/// `K` evaluated through the closed form at a possibly boundary point (`b ≥ 0`).
pub fn kernel_at(wall: WallParameter, a: f64, b: f64, t: f64, units: &UnitSystem) -> Result<Complex64> {
    if !(a >= 0.0 && b >= 0.0 && t > 0.0) {
        return Err(Error::DomainError(format!("kernel needs a, b >= 0 and T > 0 (got {a}, {b}, {t})")));
    }
    closed_value(wall, a, b, t, units).map(|v| v.0)
}
