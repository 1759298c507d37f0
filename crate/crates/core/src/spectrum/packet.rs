use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::reflection_coefficient;
use crate::error::{Error, Result};
use crate::field::{ComplexField, Grid};
use crate::numerics::{linear_fit, GlRule, GL16};
use crate::units::UnitSystem;
use crate::wall::WallParameter;

/// Half-width of the spectral window in units of `sigma`.
const WINDOW: f64 = 8.0;
/// Gauss-Legendre panels over the window (16 nodes each, 400 nodes in total).
const PANELS: usize = 25;
const SELF_CHECK: f64 = 1e-6;
const FIT_TOLERANCE: f64 = 0.05;

/// Gaussian superposition of scattering states launched from `x0` towards the wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavePacket {
    pub k0: f64,
    pub sigma: f64,
    pub x0: f64,
    pub wall: WallParameter,
    #[serde(default)]
    pub units: UnitSystem,
}

impl WavePacket {
    pub fn new(k0: f64, sigma: f64, x0: f64, wall: WallParameter, units: UnitSystem) -> Result<Self> {
        if !(k0 > 0.0 && sigma > 0.0 && x0 > 0.0) || !(k0.is_finite() && sigma.is_finite() && x0.is_finite()) {
            return Err(Error::DomainError(format!(
                "packet needs k0, sigma, x0 > 0 (got {k0}, {sigma}, {x0})"
            )));
        }
        if k0 / sigma < 5.0 {
            return Err(Error::DomainError(format!(
                "k0/sigma = {} < 5 makes the k > 0 truncation visible",
                k0 / sigma
            )));
        }
        Ok(Self { k0, sigma, x0, wall, units })
    }

    /// Spectral profile, normalized so that `∫|f|² dk = 1`.
    pub fn profile(&self, k: f64) -> f64 {
        let z = (k - self.k0) / self.sigma;
        (-0.5 * z * z).exp() / (self.sigma * PI.sqrt()).sqrt()
    }

    pub fn velocity(&self) -> f64 {
        self.units.velocity(self.k0)
    }

    /// Instant at which the incident peak reaches the wall.
    pub fn arrival_time(&self) -> f64 {
        self.x0 / self.velocity()
    }

    fn window(&self) -> (f64, f64) {
        ((self.k0 - WINDOW * self.sigma).max(0.0), self.k0 + WINDOW * self.sigma)
    }

    /// Quadrature weights with everything except the `e^{±ikx}` factor folded in.
    fn coefficients(&self, t: f64, panels: usize, rule: &GlRule) -> Result<Vec<Term>> {
        let (lo, hi) = self.window();
        let h = (hi - lo) / panels as f64;
        let inv = 1.0 / (2.0 * PI).sqrt();
        let mut out = Vec::with_capacity(panels * rule.len());
        for p in 0..panels {
            let a = lo + h * p as f64;
            for (k, w) in rule.nodes_on(a, a + h) {
                let omega = self.units.hbar * k * k / (2.0 * self.units.mass);
                let base = Complex64::from_polar(w * self.profile(k) * inv, k * self.x0 - omega * t);
                let refl = reflection_coefficient(k, self.wall)?;
                out.push(Term { k, incident: base, reflected: base * refl });
            }
        }
        Ok(out)
    }

    fn components_at(&self, t: f64, grid: Grid, panels: usize) -> Result<Vec<(Complex64, Complex64)>> {
        // Phasors e^{ikx} advance by a fixed factor along the uniform grid; each
        // chunk restarts from an exact value so rounding stays bounded.
        const CHUNK: usize = 256;
        let terms = self.coefficients(t, panels, &GL16)?;
        let h = grid.spacing();
        let chunks: Vec<usize> = (0..grid.n).step_by(CHUNK).collect();
        let parts: Vec<Vec<(Complex64, Complex64)>> = chunks
            .par_iter()
            .map(|&start| {
                let len = CHUNK.min(grid.n - start);
                let x0 = grid.point(start);
                let mut acc = vec![(Complex64::default(), Complex64::default()); len];
                for term in &terms {
                    let step = Complex64::from_polar(1.0, term.k * h);
                    let mut e = Complex64::from_polar(1.0, term.k * x0);
                    for slot in acc.iter_mut() {
                        slot.0 += term.incident * e.conj();
                        slot.1 += term.reflected * e;
                        e *= step;
                    }
                }
                acc
            })
            .collect();
        Ok(parts.concat())
    }

    /// Incident and reflected terms at time `t`, each with its node-doubling check.
    pub fn components(&self, t: f64, grid: Grid) -> Result<Vec<(Complex64, Complex64)>> {
        let coarse = self.components_at(t, grid, PANELS)?;
        let fine = self.components_at(t, grid, 2 * PANELS)?;
        let scale = fine.iter().map(|(a, b)| a.norm().max(b.norm())).fold(0.0, f64::max);
        let diff = coarse
            .iter()
            .zip(&fine)
            .map(|(c, f)| (c.0 - f.0).norm().max((c.1 - f.1).norm()))
            .fold(0.0, f64::max);
        if scale > 0.0 && diff > SELF_CHECK * scale {
            return Err(Error::QuadratureFailure(format!(
                "packet k-integral at t = {t} changed by {:e} (relative) under node doubling",
                diff / scale
            )));
        }
        Ok(fine)
    }
}

struct Term {
    k: f64,
    incident: Complex64,
    reflected: Complex64,
}

/// `ψ(x, t)` on a half-line grid: incident plus reflected superposition.
pub fn evolve_packet(packet: &WavePacket, t: f64, grid: Grid) -> Result<ComplexField> {
    if grid.x_min != 0.0 {
        return Err(Error::GridMismatch(format!("grid starts at {} instead of the wall", grid.x_min)));
    }
    let parts = packet.components(t, grid)?;
    ComplexField::new(grid, parts.into_iter().map(|(a, b)| a + b).collect())
}

/// Peak trajectory of one term with its least-squares line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakTrack {
    pub times: Vec<f64>,
    pub peaks: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// RMS fit residual divided by the range of peak positions.
    pub relative_residual: f64,
}

impl PeakTrack {
    fn fit(times: Vec<f64>, peaks: Vec<f64>) -> Result<Self> {
        let line = linear_fit(&times, &peaks)?;
        let (lo, hi) = peaks.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &p| (a.min(p), b.max(p)));
        let relative_residual = if hi > lo { line.residual / (hi - lo) } else { f64::INFINITY };
        if !(relative_residual <= FIT_TOLERANCE) {
            return Err(Error::FitFailure(format!(
                "peak trajectory deviates from a line (relative residual {relative_residual:.3e})"
            )));
        }
        Ok(Self { times, peaks, slope: line.slope, intercept: line.intercept, relative_residual })
    }

    /// Instant at which the fitted line crosses `x = 0`.
    pub fn wall_crossing(&self) -> f64 {
        -self.intercept / self.slope
    }
}

/// Tracks the incident and reflected peaks. Each term is located on the grid
/// mirrored to `[-x_max, x_max]`, so the reflected packet is followed from the
/// `x < 0` side before it emerges.
pub fn track_peaks(packet: &WavePacket, times: &[f64], grid: Grid) -> Result<(PeakTrack, PeakTrack)> {
    if grid.x_min != 0.0 {
        return Err(Error::GridMismatch(format!("grid starts at {} instead of the wall", grid.x_min)));
    }
    let t_hit = packet.arrival_time();
    let before = times.iter().filter(|&&t| t < t_hit).count();
    let after = times.iter().filter(|&&t| t > t_hit).count();
    if before < 5 || after < 5 {
        return Err(Error::MalformedInput(format!(
            "need >= 5 times on each side of the reflection at t = {t_hit} (got {before} before, {after} after)"
        )));
    }
    let mirrored = Grid::new(-grid.x_max, grid.x_max, 2 * grid.n - 1)?;
    let mut incident = Vec::with_capacity(times.len());
    let mut reflected = Vec::with_capacity(times.len());
    for &t in times {
        let parts = packet.components(t, mirrored)?;
        let (inc, refl): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
        incident.push(ComplexField::new(mirrored, inc)?.peak_position());
        reflected.push(ComplexField::new(mirrored, refl)?.peak_position());
    }
    Ok((PeakTrack::fit(times.to_vec(), incident)?, PeakTrack::fit(times.to_vec(), reflected)?))
}

/// Number of sampling instants used by [`measure_time_delay`].
pub const DELAY_SAMPLES: usize = 21;

/// Time delay `t2 − t1` from the wall crossings of the fitted peak lines, with
/// sampling instants spread uniformly over `[0, 2 x0 / v0]`.
pub fn measure_time_delay(packet: &WavePacket, grid: Grid) -> Result<f64> {
    let span = 2.0 * packet.arrival_time();
    let times: Vec<f64> = (0..DELAY_SAMPLES).map(|i| span * i as f64 / (DELAY_SAMPLES - 1) as f64).collect();
    let (incident, reflected) = track_peaks(packet, &times, grid)?;
    Ok(reflected.wall_crossing() - incident.wall_crossing())
}
