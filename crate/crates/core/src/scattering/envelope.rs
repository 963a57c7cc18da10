//! Unit-norm spectral envelopes of single-photon pulses.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    #[default]
    Lorentzian,
    Gaussian,
}

/// Real envelope f(k) with ∫ f² dk = 1.
///
/// Lorentzian: f = n/(α² + (k − k̄)²), n = √(2α³/π).
/// Gaussian: f = n·exp(−(k − k̄)²/(4α²)), n = (2πα²)^{-1/4}, so α is the
/// standard deviation of f².
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub shape: Shape,
    pub center: f64,
    pub width: f64,
    pub norm: f64,
}

impl Envelope {
    pub fn new(shape: Shape, center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) || !center.is_finite() {
            return Err(Error::Validation(format!("envelope needs finite center and width > 0, got {center}, {width}")));
        }
        let norm = match shape {
            Shape::Lorentzian => (2.0 * width.powi(3) / PI).sqrt(),
            Shape::Gaussian => (2.0 * PI * width * width).powf(-0.25),
        };
        Ok(Self { shape, center, width, norm })
    }

    pub fn eval(&self, k: f64) -> f64 {
        let x = k - self.center;
        match self.shape {
            Shape::Lorentzian => self.norm / (self.width * self.width + x * x),
            Shape::Gaussian => self.norm * (-x * x / (4.0 * self.width * self.width)).exp(),
        }
    }

    /// ∫_{k > k̄ + w} f² dk for any real w.
    pub fn mass_above(&self, w: f64) -> f64 {
        if w < 0.0 {
            return 1.0 - self.mass_above(-w);
        }
        let u = w / self.width;
        match self.shape {
            Shape::Lorentzian => (0.5 * PI - u.atan() - u / (1.0 + u * u)) / PI,
            Shape::Gaussian => 0.5 * libm::erfc(u / std::f64::consts::SQRT_2),
        }
    }

    /// Mass outside |k − k̄| ≤ w.
    pub fn tail_mass(&self, w: f64) -> f64 {
        2.0 * self.mass_above(w)
    }

    /// Mass outside the interval [a, b].
    pub fn mass_outside(&self, a: f64, b: f64) -> f64 {
        self.mass_above(b - self.center) + (1.0 - self.mass_above(a - self.center))
    }

    /// Smallest half-width whose tail mass is at most `tol`.
    pub fn cutoff(&self, tol: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, self.width);
        while self.tail_mass(hi) > tol {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.tail_mass(mid) > tol {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// Partial fractions of a Lorentzian seen as a function of q when
    /// k = c ± q, centred in q at `c_q`: f = Σ r/(q − z).
    pub fn partial_fractions(&self, c_q: f64) -> Option<[(Complex64, Complex64); 2]> {
        match self.shape {
            Shape::Gaussian => None,
            Shape::Lorentzian => {
                let r = Complex64::new(0.0, -self.norm / (2.0 * self.width));
                Some([(Complex64::new(c_q, self.width), r), (Complex64::new(c_q, -self.width), -r)])
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::composite_gauss;

    fn norm2(e: &Envelope, a: f64, b: f64) -> f64 {
        let (x, w) = composite_gauss(a, b, 4000, 8);
        x.iter().zip(&w).map(|(x, w)| w * e.eval(*x).powi(2)).sum()
    }

    #[test]
    fn envelopes_are_unit_norm() {
        let g = Envelope::new(Shape::Gaussian, 0.3, 0.2).unwrap();
        assert!((norm2(&g, -5.0, 5.0) - 1.0).abs() < 1e-13);
        let l = Envelope::new(Shape::Lorentzian, 0.3, 0.2).unwrap();
        let w = 50.0;
        let (x, wt) = composite_gauss(0.3 - w, 0.3 + w, 20000, 8);
        let inside: f64 = x.iter().zip(&wt).map(|(x, w)| w * l.eval(*x).powi(2)).sum();
        assert!((inside + l.tail_mass(w) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cutoff_meets_tolerance() {
        for shape in [Shape::Lorentzian, Shape::Gaussian] {
            let e = Envelope::new(shape, 1.0, 0.5).unwrap();
            let w = e.cutoff(1e-10);
            assert!(e.tail_mass(w) <= 1e-10 && e.tail_mass(0.99 * w) > 1e-10);
            assert!((e.mass_outside(1.0 - w, 1.0 + w) - e.tail_mass(w)).abs() < 1e-15);
        }
    }

    #[test]
    fn partial_fractions_reproduce_lorentzian() {
        let e = Envelope::new(Shape::Lorentzian, 0.7, 0.3).unwrap();
        let pf = e.partial_fractions(0.7).unwrap();
        for k in [-1.0, 0.2, 0.7, 3.0] {
            let v: Complex64 = pf.iter().map(|(z, r)| r / (k - z)).sum();
            assert!((v.re - e.eval(k)).abs() < 1e-14 && v.im.abs() < 1e-14);
        }
    }
}
