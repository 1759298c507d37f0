//! Stationary states, the energy functional and the scattering time delay.

mod packet;

pub use packet::{evolve_packet, measure_time_delay, track_peaks, PeakTrack, WavePacket};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ComplexField, Grid};
use crate::numerics::{derivative, simpson};
use crate::units::UnitSystem;
use crate::wall::WallParameter;

/// Reflection phase `δ_k = 2 arccot(kL)` with the cotangent inverse on `(0, π)`.
pub fn phase_shift(k: f64, wall: WallParameter) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::DomainError(format!("wavenumber must be positive, got {k}")));
    }
    Ok(match wall {
        WallParameter::Infinite => 0.0,
        WallParameter::Finite(0.0) => PI,
        WallParameter::Finite(l) => 2.0 * 1f64.atan2(k * l),
    })
}

/// `e^{iδ_k}` evaluated without trigonometry: `(ikL - 1)/(ikL + 1)`.
pub fn reflection_coefficient(k: f64, wall: WallParameter) -> Result<Complex64> {
    if !(k > 0.0) {
        return Err(Error::DomainError(format!("wavenumber must be positive, got {k}")));
    }
    Ok(match wall {
        WallParameter::Infinite => Complex64::new(1.0, 0.0),
        WallParameter::Finite(l) => {
            let ikl = Complex64::new(0.0, k * l);
            (ikl - 1.0) / (ikl + 1.0)
        }
    })
}

/// Box-normalized scattering eigenfunction of the wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringState {
    pub k: f64,
    pub wall: WallParameter,
    pub delta: f64,
}

impl ScatteringState {
    pub fn new(k: f64, wall: WallParameter) -> Result<Self> {
        Ok(Self { k, wall, delta: phase_shift(k, wall)? })
    }

    /// `(e^{-ikx} + e^{iδ} e^{ikx}) / √(2π)`.
    pub fn value(&self, x: f64) -> Complex64 {
        let r = Complex64::from_polar(1.0, self.delta);
        (Complex64::from_polar(1.0, -self.k * x) + r * Complex64::from_polar(1.0, self.k * x)) / (2.0 * PI).sqrt()
    }

    pub fn sample(&self, grid: Grid) -> ComplexField {
        ComplexField::sample(grid, |x| self.value(x))
    }
}

/// The negative-energy state that exists for `L > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundState {
    pub wall: WallParameter,
    pub energy: f64,
    pub field: ComplexField,
}

/// Bound-state energy `-ħ²/(2mL²)`, or `NoBoundState` unless `0 < L < ∞`.
pub fn bound_state_energy(wall: WallParameter, units: &UnitSystem) -> Result<f64> {
    match wall {
        WallParameter::Finite(l) if l > 0.0 => Ok(-units.kinetic() / (l * l)),
        other => Err(Error::NoBoundState(format!("a bound state needs 0 < L < inf, got L = {other}"))),
    }
}

pub fn bound_state(wall: WallParameter, grid: Grid, units: &UnitSystem) -> Result<BoundState> {
    let energy = bound_state_energy(wall, units)?;
    let l = wall.length().expect("finite by construction");
    if grid.x_min != 0.0 {
        return Err(Error::GridMismatch(format!("grid starts at {} instead of the wall", grid.x_min)));
    }
    if grid.x_max <= 10.0 * l {
        return Err(Error::GridMismatch(format!(
            "grid ends at {} but must extend past 10 L = {}",
            grid.x_max,
            10.0 * l
        )));
    }
    let amp = (2.0 / l).sqrt();
    let field = ComplexField::sample(grid, |x| Complex64::new(amp * (-x / l).exp(), 0.0));
    Ok(BoundState { wall, energy, field })
}

/// Energy expectation evaluated two ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyExpectation {
    /// Quadratic form `(ħ²/2m)[∫|ψ'|² − |ψ(0)|²/L]`.
    pub direct: f64,
    /// `(ħ²/2m)(1/L²)∫|ψ + Lψ'|² − ħ²/(2mL²)`.
    pub via_identity: f64,
    /// The non-negative integral `∫|ψ + Lψ'|²`.
    pub defect: f64,
}

pub fn energy_expectation(field: &ComplexField, wall: WallParameter, units: &UnitSystem) -> Result<EnergyExpectation> {
    let l = match wall {
        WallParameter::Finite(l) if l != 0.0 => l,
        other => return Err(Error::DomainError(format!("energy identity needs finite nonzero L, got {other}"))),
    };
    let grid = field.grid;
    if grid.x_min != 0.0 {
        return Err(Error::GridMismatch(format!("grid starts at {} instead of the wall", grid.x_min)));
    }
    if grid.n < 5 {
        return Err(Error::GridMismatch("at least five samples are needed".into()));
    }
    let peak = field.max_modulus();
    if field.values[grid.n - 1].norm() >= 1e-8 * peak {
        return Err(Error::GridMismatch("field has not decayed at the end of the grid".into()));
    }
    let norm2 = field.norm_squared();
    if (norm2 - 1.0).abs() > 1e-6 {
        return Err(Error::NotNormalized(norm2.sqrt()));
    }
    let h = grid.spacing();
    let d = derivative(&field.values, h);
    let grad2: Vec<f64> = d.iter().map(|v| v.norm_sqr()).collect();
    let defect_density: Vec<f64> = field.values.iter().zip(&d).map(|(v, dv)| (v + dv * l).norm_sqr()).collect();
    let kin = units.kinetic();
    let direct = kin * (simpson(&grad2, h) - field.values[0].norm_sqr() / l);
    let defect = simpson(&defect_density, h);
    let via_identity = kin * (defect / (l * l) - 1.0 / (l * l));
    Ok(EnergyExpectation { direct, via_identity, defect })
}

/// Quantum time delay `τ = −2mL / (ħk0[1 + (k0L)²])`.
pub fn time_delay(k0: f64, wall: WallParameter, units: &UnitSystem) -> Result<f64> {
    if !(k0 > 0.0) {
        return Err(Error::DomainError(format!("wavenumber must be positive, got {k0}")));
    }
    Ok(match wall {
        WallParameter::Infinite => 0.0,
        WallParameter::Finite(0.0) => 0.0,
        WallParameter::Finite(l) => {
            let kl = k0 * l;
            -2.0 * units.mass * l / (units.hbar * k0 * (1.0 + kl * kl))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const U: UnitSystem = UnitSystem::NATURAL;

    #[test]
    fn phase_shift_anchors() {
        assert_eq!(phase_shift(1.0, WallParameter::DIRICHLET).unwrap(), PI);
        assert_eq!(phase_shift(1.0, WallParameter::NEUMANN).unwrap(), 0.0);
        assert_eq!(phase_shift(1.0, WallParameter::Finite(1.0)).unwrap(), PI / 2.0);
        assert!(phase_shift(0.0, WallParameter::DIRICHLET).is_err());
        assert!(phase_shift(-1.0, WallParameter::NEUMANN).is_err());
    }

    #[test]
    fn phase_shift_limits() {
        assert!(phase_shift(1.0, WallParameter::Finite(1e9)).unwrap() < 1e-8);
        assert!(2.0 * PI - phase_shift(1.0, WallParameter::Finite(-1e9)).unwrap() < 1e-8);
    }

    #[test]
    fn time_delay_anchors() {
        assert_eq!(time_delay(3.0, WallParameter::DIRICHLET, &U).unwrap(), 0.0);
        assert_eq!(time_delay(2.0, WallParameter::NEUMANN, &U).unwrap(), 0.0);
        assert_relative_eq!(time_delay(1.0, WallParameter::Finite(-1.0), &U).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(time_delay(2.0, WallParameter::Finite(-0.5), &U).unwrap(), 0.25, max_relative = 1e-15);
        assert!(time_delay(0.0, WallParameter::Finite(1.0), &U).is_err());
    }

    #[test]
    fn scattering_state_meets_wall_condition() {
        let wall = WallParameter::Finite(1.0);
        let state = ScatteringState::new(1.0, wall).unwrap();
        let grid = Grid::half_line(10.0, 10001).unwrap();
        let r = crate::field::boundary_residual(&state.sample(grid), wall).unwrap();
        assert!(r <= 1e-6, "residual {r}");
        let bad = crate::field::boundary_residual(
            &ComplexField::sample(grid, |x| Complex64::new(x.sin(), 0.0)),
            WallParameter::NEUMANN,
        )
        .unwrap();
        assert!(bad > 0.01);
    }

    #[test]
    fn bound_state_properties() {
        let grid = Grid::half_line(40.0, 8001).unwrap();
        let b = bound_state(WallParameter::Finite(1.0), grid, &U).unwrap();
        assert_eq!(b.energy, -0.5);
        assert_relative_eq!(b.field.values[0].re, 2f64.sqrt());
        let b2 = bound_state(WallParameter::Finite(2.0), grid, &U).unwrap();
        assert_eq!(b2.energy, -0.125);
        assert!((b2.field.norm_squared() - 1.0).abs() < 1e-8);
        assert!(matches!(bound_state(WallParameter::Finite(-1.0), grid, &U), Err(Error::NoBoundState(_))));
        assert!(matches!(bound_state(WallParameter::NEUMANN, grid, &U), Err(Error::NoBoundState(_))));
        assert!(matches!(bound_state(WallParameter::Finite(5.0), grid, &U), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn energy_of_bound_state_hits_lower_bound() {
        let grid = Grid::half_line(40.0, 8001).unwrap();
        let b = bound_state(WallParameter::Finite(1.0), grid, &U).unwrap();
        let e = energy_expectation(&b.field, b.wall, &U).unwrap();
        assert!((e.direct + 0.5).abs() < 1e-8);
        assert!((e.via_identity + 0.5).abs() < 1e-8);
        assert!(e.defect < 1e-8);
    }

    #[test]
    fn energy_routes_agree_for_gaussian_bump() {
        let grid = Grid::half_line(20.0, 4001).unwrap();
        let raw = ComplexField::sample(grid, |x| Complex64::from_polar((-(x - 5.0f64).powi(2) / 2.0).exp(), 0.3 * x));
        let scale = 1.0 / raw.norm();
        let field = ComplexField::new(grid, raw.values.iter().map(|v| v * scale).collect()).unwrap();
        for l in [1.0, 2.0, -0.7] {
            let e = energy_expectation(&field, WallParameter::Finite(l), &U).unwrap();
            assert!((e.direct - e.via_identity).abs() < 1e-7);
            assert!(e.via_identity >= -U.kinetic() / (l * l));
        }
        assert!(matches!(
            energy_expectation(&raw, WallParameter::Finite(1.0), &U),
            Err(Error::NotNormalized(_))
        ));
        assert!(energy_expectation(&field, WallParameter::DIRICHLET, &U).is_err());
    }

    proptest! {
        #[test]
        fn reflection_is_unitary_and_matches_phase(k in 1e-3f64..1e3, l in -1e3f64..1e3) {
            let wall = WallParameter::Finite(l);
            let r = reflection_coefficient(k, wall).unwrap();
            prop_assert!((r.norm() - 1.0).abs() < 1e-14);
            let d = phase_shift(k, wall).unwrap();
            prop_assert!((0.0..2.0 * PI).contains(&d));
            prop_assert!((r - Complex64::from_polar(1.0, d)).norm() < 1e-12);
        }

        #[test]
        fn phase_shift_monotone_on_each_sign(k in 0.1f64..10.0, l1 in 0.01f64..10.0, l2 in 0.01f64..10.0) {
            let (lo, hi) = if l1 < l2 { (l1, l2) } else { (l2, l1) };
            prop_assume!(hi - lo > 1e-6);
            let p = |l: f64| phase_shift(k, WallParameter::Finite(l)).unwrap();
            prop_assert!(p(lo) > p(hi));
            prop_assert!(p(-hi) > p(-lo));
        }
    }
}
