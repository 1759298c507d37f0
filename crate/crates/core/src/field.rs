use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::simpson;
use crate::wall::WallParameter;

/// Uniform sampling grid on `[x_min, x_max]` with `n` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_min < x_max) {
            return Err(Error::MalformedInput(format!("grid bounds [{x_min}, {x_max}] are not increasing")));
        }
        if n < 2 {
            return Err(Error::MalformedInput(format!("grid needs at least 2 points, got {n}")));
        }
        Ok(Self { x_min, x_max, n })
    }

    /// Grid on the half line starting at the wall.
    pub fn half_line(x_max: f64, n: usize) -> Result<Self> {
        Self::new(0.0, x_max, n)
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.x_max
        } else {
            self.x_min + self.spacing() * i as f64
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Same interval with the spacing halved.
    pub fn refined(&self) -> Self {
        Self { n: 2 * self.n - 1, ..*self }
    }
}

/// Complex samples of a wavefunction on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.n
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every grid point.
    pub fn sample(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.points().into_iter().map(f).collect();
        Self { grid, values }
    }

    /// `∫|ψ|²` by composite Simpson.
    pub fn norm_squared(&self) -> f64 {
        let density: Vec<f64> = self.values.iter().map(|v| v.norm_sqr()).collect();
        simpson(&density, self.grid.spacing())
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `∫ conj(self) other`.
    pub fn overlap(&self, other: &ComplexField) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("overlap of fields on different grids".into()));
        }
        let prod: Vec<Complex64> = self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).collect();
        Ok(simpson(&prod, self.grid.spacing()))
    }

    /// Peak position by discrete argmax of `|ψ|` refined with a parabola through
    /// the three neighbouring samples.
    pub fn peak_position(&self) -> f64 {
        let mods: Vec<f64> = self.values.iter().map(|v| v.norm()).collect();
        let i = mods
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &m)| if m > best.1 { (i, m) } else { best })
            .0;
        let x = self.grid.point(i);
        if i == 0 || i + 1 == mods.len() {
            return x;
        }
        let (l, c, r) = (mods[i - 1], mods[i], mods[i + 1]);
        let denom = l - 2.0 * c + r;
        if denom == 0.0 {
            return x;
        }
        x + 0.5 * (l - r) / denom * self.grid.spacing()
    }
}

/// Normalized violation of the wall condition at `x = 0`: `|ψ(0) + L ψ'(0)|`
/// (or `|ψ'(0)|` for the Neumann wall) divided by `max |ψ|`.
pub fn boundary_residual(field: &ComplexField, wall: WallParameter) -> Result<f64> {
    let grid = field.grid;
    if grid.x_min != 0.0 {
        return Err(Error::GridMismatch(format!("grid starts at {} instead of the wall", grid.x_min)));
    }
    if grid.n < 4 {
        return Err(Error::GridMismatch(format!("{} samples are too few for the wall stencil", grid.n)));
    }
    let v = &field.values;
    let h = grid.spacing();
    let slope = (v[0] * -3.0 + v[1] * 4.0 - v[2]) / (2.0 * h);
    let scale = field.max_modulus();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let raw = match wall {
        WallParameter::Finite(l) => (v[0] + slope * l).norm(),
        WallParameter::Infinite => slope.norm(),
    };
    Ok(raw / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn exp_field(n: usize, l: f64) -> ComplexField {
        let grid = Grid::half_line(20.0 * l, n).unwrap();
        ComplexField::sample(grid, |x| Complex64::new((2.0 / l).sqrt() * (-x / l).exp(), 0.0))
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(1.0, 1.0, 10).is_err());
        assert!(Grid::new(0.0, 1.0, 1).is_err());
        let g = Grid::new(0.0, 1.0, 11).unwrap();
        assert_relative_eq!(g.spacing(), 0.1);
        assert_eq!(g.point(10), 1.0);
        assert_eq!(g.refined().n, 21);
    }

    #[test]
    fn exponential_norm_is_one() {
        assert_relative_eq!(exp_field(4001, 1.0).norm(), 1.0, max_relative = 1e-9);
    }

    #[test]
    fn residual_rejects_offset_grid() {
        let grid = Grid::new(0.5, 2.0, 10).unwrap();
        let f = ComplexField::sample(grid, |_| Complex64::new(1.0, 0.0));
        assert!(matches!(boundary_residual(&f, WallParameter::Infinite), Err(Error::GridMismatch(_))));
        let tiny = ComplexField::sample(Grid::new(0.0, 1.0, 3).unwrap(), |_| Complex64::new(1.0, 0.0));
        assert!(boundary_residual(&tiny, WallParameter::Infinite).is_err());
    }

    #[test]
    fn residual_is_second_order_and_scale_invariant() {
        let wall = WallParameter::Finite(1.0);
        let coarse = boundary_residual(&exp_field(2001, 1.0), wall).unwrap();
        let fine = boundary_residual(&exp_field(4001, 1.0), wall).unwrap();
        assert!(coarse / fine >= 3.0, "ratio {}", coarse / fine);
        let mut f = exp_field(2001, 1.0);
        let phase = Complex64::from_polar(7.5, 1.2);
        f.values.iter_mut().for_each(|v| *v *= phase);
        assert_relative_eq!(boundary_residual(&f, wall).unwrap(), coarse, max_relative = 1e-7);
    }

    #[test]
    fn peak_refinement_is_sub_grid() {
        let grid = Grid::new(0.0, 10.0, 101).unwrap();
        let f = ComplexField::sample(grid, |x| Complex64::new((-(x - 4.333f64).powi(2)).exp(), 0.0));
        assert!((f.peak_position() - 4.333).abs() < 2e-3);
    }
}
