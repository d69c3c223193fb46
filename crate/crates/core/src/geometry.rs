//! Spherical-coordinate points on a cone and small numeric utilities.
//!
//! A point P is stored as (r, theta) with r > 0 and theta = (theta_1, ..,
//! theta_{n-1}); the distinguished component is x_n = r cos(theta_1).
//! For n = 2 the single angle runs over [0, 2*pi) so arcs wider than pi
//! stay representable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Point of the cone in spherical coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub r: f64,
    pub theta: Vec<f64>,
}

impl Point {
    pub fn new(r: f64, theta: Vec<f64>) -> Result<Self> {
        if !r.is_finite() || r <= 0.0 {
            return Err(Error::domain(format!("point radius must be positive, got {r}")));
        }
        if theta.is_empty() || theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::domain("point angles must be finite and non-empty"));
        }
        Ok(Point { r, theta })
    }

    /// Dimension of the ambient space.
    pub fn dim(&self) -> usize {
        self.theta.len() + 1
    }

    /// The colatitude theta_1.
    pub fn colatitude(&self) -> f64 {
        self.theta[0]
    }

    pub fn to_cartesian(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n];
        let mut sinprod = 1.0;
        out[n - 1] = self.r * self.theta[0].cos();
        for j in 1..n - 1 {
            sinprod *= self.theta[j - 1].sin();
            out[n - 1 - j] = self.r * sinprod * self.theta[j].cos();
        }
        sinprod *= self.theta[n - 2].sin();
        out[0] = self.r * sinprod;
        out
    }

    pub fn from_cartesian(x: &[f64]) -> Result<Self> {
        let n = x.len();
        if n < 2 {
            return Err(Error::domain("need at least two cartesian components"));
        }
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r <= 0.0 || !r.is_finite() {
            return Err(Error::domain("cartesian point must be finite and nonzero"));
        }
        let mut theta = Vec::with_capacity(n - 1);
        if n == 2 {
            theta.push(wrap_angle(x[0].atan2(x[1])));
        } else {
            let mut rem = r;
            for j in 0..n - 2 {
                let c = (x[n - 1 - j] / rem).clamp(-1.0, 1.0);
                theta.push(c.acos());
                let rem2 = rem * rem - x[n - 1 - j] * x[n - 1 - j];
                rem = rem2.max(0.0).sqrt();
                if rem == 0.0 {
                    // remaining angles are undetermined; pin them to zero
                    while theta.len() < n - 1 {
                        theta.push(0.0);
                    }
                    return Point::new(r, theta);
                }
            }
            theta.push(wrap_angle(x[0].atan2(x[1])));
        }
        Point::new(r, theta)
    }

    pub fn distance(&self, other: &Point) -> f64 {
        let a = self.to_cartesian();
        let b = other.to_cartesian();
        a.iter()
            .zip(b.iter())
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt()
    }
}

/// Map an angle into [0, 2*pi).
pub fn wrap_angle(t: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut v = t % two_pi;
    if v < 0.0 {
        v += two_pi;
    }
    v
}

/// Gamma function at half-integer arguments: `gamma_half(k)` = Gamma(k/2).
pub fn gamma_half(k: u32) -> f64 {
    assert!(k >= 1, "gamma_half needs a positive argument");
    let mut val = if k % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut arg = if k % 2 == 0 { 2 } else { 1 };
    while arg < k {
        val *= arg as f64 / 2.0;
        arg += 2;
    }
    val
}

/// Surface area of the unit sphere S^{n-1}.
pub fn sphere_area(n: u32) -> f64 {
    assert!(n >= 2);
    2.0 * std::f64::consts::PI.powf(n as f64 / 2.0) / gamma_half(n)
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi-style initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_poly_and_deriv(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_poly_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Golden-section maximum of a unimodal function on [a, b].
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cartesian_round_trip() {
        for (n, theta) in [
            (2, vec![0.7]),
            (2, vec![4.0]),
            (3, vec![0.9, 2.3]),
            (4, vec![1.1, 0.8, 5.0]),
        ] {
            let p = Point::new(1.7, theta).unwrap();
            let q = Point::from_cartesian(&p.to_cartesian()).unwrap();
            assert_eq!(q.dim(), n);
            assert!((p.r - q.r).abs() < 1e-12);
            for (a, b) in p.theta.iter().zip(q.theta.iter()) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn sphere_areas_match_closed_forms() {
        let pi = std::f64::consts::PI;
        assert!((sphere_area(2) - 2.0 * pi).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * pi).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * pi * pi).abs() < 1e-13);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(16);
        // integral of x^6 over [-1,1] = 2/7
        let s: f64 = x.iter().zip(w.iter()).map(|(xi, wi)| wi * xi.powi(6)).sum();
        assert!((s - 2.0 / 7.0).abs() < 1e-13);
    }

    #[test]
    fn golden_section_finds_interior_max() {
        let (x, v) = golden_section_max(|t: f64| -(t - 0.3) * (t - 0.3), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-6);
        assert!(v.abs() < 1e-10);
    }
}
