//! Quadrature, root bracketing, interpolation and fitting helpers.

use std::num::NonZeroUsize;
use std::ops::{Add, Mul, Sub};
use std::sync::LazyLock;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};

/// Values that can be accumulated by a quadrature rule.
pub trait Quadrand: Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn magnitude(self) -> f64;
}

impl Quadrand for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Quadrand for num_complex::Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// A Gauss-Legendre rule on `[-1, 1]`.
pub struct GlRule {
    pairs: Box<[(f64, f64)]>,
}

impl GlRule {
    pub fn new(points: usize) -> Self {
        let degree = NonZeroUsize::new(points).expect("rule needs at least one node");
        Self { pairs: GaussLegendre::new(degree).into_node_weight_pairs() }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Integrates `f` over `[a, b]` with a single application of the rule.
    pub fn integrate<T: Quadrand>(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> T) -> T {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut acc = T::default();
        for &(x, w) in self.pairs.iter() {
            acc = acc + f(mid + half * x) * w;
        }
        acc * half
    }

    /// Mapped nodes and weights on `[a, b]`.
    pub fn nodes_on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.pairs.iter().map(move |&(x, w)| (mid + half * x, w * half))
    }
}

pub static GL16: LazyLock<GlRule> = LazyLock::new(|| GlRule::new(16));
pub static GL32: LazyLock<GlRule> = LazyLock::new(|| GlRule::new(32));

/// Composite rule over consecutive breakpoints.
pub fn integrate_breaks<T: Quadrand>(rule: &GlRule, breaks: &[f64], mut f: impl FnMut(f64) -> T) -> T {
    breaks
        .windows(2)
        .fold(T::default(), |acc, w| acc + rule.integrate(w[0], w[1], &mut f))
}

/// Composite rule over `panels` equal panels of `[a, b]`.
pub fn integrate_uniform<T: Quadrand>(
    rule: &GlRule,
    a: f64,
    b: f64,
    panels: usize,
    mut f: impl FnMut(f64) -> T,
) -> T {
    let h = (b - a) / panels as f64;
    (0..panels).fold(T::default(), |acc, i| {
        let lo = a + h * i as f64;
        let hi = if i + 1 == panels { b } else { lo + h };
        acc + rule.integrate(lo, hi, &mut f)
    })
}

/// Globally adaptive Gauss-Legendre: panels are bisected until the 16-point and
/// 32-point results agree to `tol` relative to the running total.
pub fn integrate_adaptive<T: Quadrand>(a: f64, b: f64, tol: f64, f: impl Fn(f64) -> T) -> Result<(T, f64)> {
    integrate_adaptive_breaks(&[a, b], tol, f)
}

/// [`integrate_adaptive`] starting from one panel per interval of `breaks`.
pub fn integrate_adaptive_breaks<T: Quadrand>(breaks: &[f64], tol: f64, f: impl Fn(f64) -> T) -> Result<(T, f64)> {
    const MAX_PANELS: usize = 1 << 14;
    let (a, b) = (breaks[0], breaks[breaks.len() - 1]);
    let estimate = |lo: f64, hi: f64| {
        let coarse = GL16.integrate(lo, hi, &f);
        let fine = GL32.integrate(lo, hi, &f);
        (fine, (fine - coarse).magnitude())
    };
    let mut panels: Vec<_> = breaks.windows(2).map(|w| (w[0], w[1], estimate(w[0], w[1]))).collect();
    loop {
        let total = panels.iter().fold(T::default(), |acc, p| acc + p.2 .0);
        let err: f64 = panels.iter().map(|p| p.2 .1).sum();
        let scale = total.magnitude().max(f64::MIN_POSITIVE);
        if err <= tol * scale || err <= 1e-300 {
            return Ok((total, err));
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::QuadratureFailure(format!(
                "adaptive quadrature on [{a}, {b}] did not reach tolerance {tol} (error estimate {err:e})"
            )));
        }
        // split every panel whose error is above the mean
        let mean = err / panels.len() as f64;
        let mut next = Vec::with_capacity(panels.len() * 2);
        for (lo, hi, est) in panels {
            if est.1 >= mean {
                let mid = 0.5 * (lo + hi);
                next.push((lo, mid, estimate(lo, mid)));
                next.push((mid, hi, estimate(mid, hi)));
            } else {
                next.push((lo, hi, est));
            }
        }
        panels = next;
    }
}

/// Bisection on a sign-changing bracket, to `rel_tol` relative width.
pub fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, rel_tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return Err(Error::NoSolution(format!(
            "root not bracketed on [{lo}, {hi}] (f = {flo:e}, {fhi:e})"
        )));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= rel_tol * mid.abs().max(f64::MIN_POSITIVE) || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Expands `[seed/2^n, seed*2^n]` geometrically until `f` changes sign.
pub fn bracket_geometric(mut f: impl FnMut(f64) -> f64, seed: f64, max_doublings: usize) -> Result<(f64, f64)> {
    let f0 = f(seed);
    if f0 == 0.0 {
        return Ok((seed, seed));
    }
    let mut lo = seed;
    let mut hi = seed;
    for _ in 0..max_doublings {
        lo *= 0.5;
        hi *= 2.0;
        if f(hi).signum() != f0.signum() {
            return Ok((hi / 2.0, hi));
        }
        if f(lo).signum() != f0.signum() {
            return Ok((lo, lo * 2.0));
        }
    }
    Err(Error::NoSolution(format!(
        "no sign change within {max_doublings} doublings around {seed}"
    )))
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
#[derive(Debug, Clone, PartialEq)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl Pchip {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::MalformedInput("interpolation needs >= 2 matched samples".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::MalformedInput("interpolation abscissae must increase strictly".into()));
        }
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut slopes = vec![0.0; n];
        if n == 2 {
            slopes[0] = delta[0];
            slopes[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    slopes[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            slopes[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            slopes[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Self { xs, ys, slopes })
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Evaluates the interpolant; outside the table the end cubics are extended.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let i = match self.xs.partition_point(|&xi| xi <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1] + h11 * h * self.slopes[i + 1]
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if s.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        s
    }
}

/// Least-squares line through `(xs, ys)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual.
    pub residual: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::FitFailure("need at least two points for a line".into()));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::FitFailure("abscissae are all equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    Ok(LineFit { slope, intercept, residual: (ss / n as f64).sqrt() })
}

/// Composite Simpson over uniformly spaced samples; an even sample count gets a
/// 3/8 rule on the last three intervals.
pub fn simpson<T: Quadrand>(values: &[T], h: f64) -> T {
    let n = values.len();
    match n {
        0 | 1 => T::default(),
        2 => (values[0] + values[1]) * (0.5 * h),
        3 => (values[0] + values[1] * 4.0 + values[2]) * (h / 3.0),
        _ => {
            let (main, tail) = if n % 2 == 1 { (n, None) } else { (n - 3, Some(n - 4)) };
            let mut acc = values[0] + values[main - 1];
            for (i, &v) in values.iter().enumerate().take(main - 1).skip(1) {
                acc = acc + v * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            let mut total = acc * (h / 3.0);
            if let Some(s) = tail {
                total = total
                    + (values[s] + values[s + 1] * 3.0 + values[s + 2] * 3.0 + values[s + 3]) * (3.0 * h / 8.0);
            }
            total
        }
    }
}

/// Fourth-order finite-difference derivative of uniformly spaced samples.
pub fn derivative<T: Quadrand>(values: &[T], h: f64) -> Vec<T> {
    let n = values.len();
    assert!(n >= 5, "need at least five samples for a fourth-order stencil");
    let v = values;
    let mut out = vec![T::default(); n];
    let inv = 1.0 / (12.0 * h);
    for i in 2..n - 2 {
        out[i] = (v[i - 2] - v[i - 1] * 8.0 + v[i + 1] * 8.0 - v[i + 2]) * inv;
    }
    let fwd = |i: usize| (v[i] * -25.0 + v[i + 1] * 48.0 - v[i + 2] * 36.0 + v[i + 3] * 16.0 - v[i + 4] * 3.0) * inv;
    let mix = |i: usize| (v[i - 1] * -3.0 - v[i] * 10.0 + v[i + 1] * 18.0 - v[i + 2] * 6.0 + v[i + 3]) * inv;
    out[0] = fwd(0);
    out[1] = mix(1);
    let bwd = |i: usize| (v[i] * 25.0 - v[i - 1] * 48.0 + v[i - 2] * 36.0 - v[i - 3] * 16.0 + v[i - 4] * 3.0) * inv;
    let bmix = |i: usize| (v[i + 1] * 3.0 + v[i] * 10.0 - v[i - 1] * 18.0 + v[i - 2] * 6.0 - v[i - 3]) * inv;
    out[n - 1] = bwd(n - 1);
    out[n - 2] = bmix(n - 2);
    out
}

/// Richardson/Neville extrapolation of `values[i] = F(hs[i])` to `h = 0`.
pub fn extrapolate_to_zero<T: Quadrand>(hs: &[f64], values: &[T]) -> T {
    let mut p: Vec<T> = values.to_vec();
    let n = p.len();
    for level in 1..n {
        for i in 0..n - level {
            let (hi, hj) = (hs[i], hs[i + level]);
            // interpolating polynomial through points i..i+level evaluated at 0
            p[i] = (p[i + 1] * hi - p[i] * hj) * (1.0 / (hi - hj));
        }
    }
    p[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let v = GL16.integrate(0.0, 2.0, |x: f64| x.powi(7));
        assert_relative_eq!(v, 2f64.powi(8) / 8.0, max_relative = 1e-14);
    }

    #[test]
    fn adaptive_handles_a_kink() {
        let (v, _) = integrate_adaptive(-1.0, 2.0, 1e-12, |x: f64| x.abs()).unwrap();
        assert_relative_eq!(v, 2.5, max_relative = 1e-11);
    }

    #[test]
    fn bisection_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert_relative_eq!(r, 2f64.sqrt(), max_relative = 1e-13);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0, 1e-12).is_err());
    }

    #[test]
    fn geometric_bracket_contains_root() {
        let (lo, hi) = bracket_geometric(|x| x - 1000.0, 1.0, 60).unwrap();
        assert!(lo <= 1000.0 && 1000.0 <= hi);
    }

    #[test]
    fn pchip_preserves_monotonicity_and_reproduces_linear_data() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 2.0 * x).collect();
        let p = Pchip::new(xs, ys).unwrap();
        assert_relative_eq!(p.eval(4.3), 3.0 - 8.6, max_relative = 1e-14);
        let xs: Vec<f64> = vec![0.0, 1.0, 1.1, 3.0, 7.0];
        let ys: Vec<f64> = vec![10.0, 5.0, 4.9, 1.0, 0.0];
        let p = Pchip::new(xs, ys).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..=700 {
            let v = p.eval(i as f64 * 0.01);
            assert!(v <= prev + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn simpson_and_derivative_on_smooth_data() {
        let h = 0.01;
        let xs: Vec<f64> = (0..=300).map(|i| i as f64 * h).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        assert_relative_eq!(simpson(&ys, h), 1.0 - 3f64.cos(), max_relative = 1e-9);
        assert_relative_eq!(simpson(&ys[..300], h), 1.0 - 2.99f64.cos(), max_relative = 1e-9);
        let d = derivative(&ys, h);
        for (x, dv) in xs.iter().zip(&d) {
            assert!((dv - x.cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn line_fit_recovers_coefficients() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let fit = linear_fit(&xs, &ys).unwrap();
        assert_relative_eq!(fit.slope, 2.0);
        assert_relative_eq!(fit.intercept, 1.0);
        assert!(fit.residual < 1e-14);
    }

    #[test]
    fn extrapolation_removes_polynomial_terms() {
        let hs = [0.1, 0.05, 0.025];
        let vals: Vec<f64> = hs.iter().map(|h| 2.0 + 3.0 * h - 5.0 * h * h).collect();
        assert_relative_eq!(extrapolate_to_zero(&hs, &vals), 2.0, max_relative = 1e-13);
    }
}
