//! Least Dirichlet eigenpair of the Laplace-Beltrami operator on the
//! angular domain of the cone.
//!
//! Supported domains have closed-form or one-dimensional-root eigenpairs:
//!
//! * `arc(alpha)` on S^1:  lambda = (pi/alpha)^2, phi = sqrt(2/alpha) sin(pi theta / alpha)
//! * `cap(alpha)` on S^2:  lambda = nu(nu+1) with P_nu(cos alpha) = 0,
//!   phi the normalized Legendre profile P_nu(cos theta_1)
//! * `half_sphere` in any dimension: lambda = n-1, phi = (2n/s_n)^{1/2} cos theta_1
//!
//! All profiles are normalized to unit L^2 mass over the domain and vanish
//! on its boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{gauss_legendre, golden_section_max, sphere_area};

const BOUNDARY_SNAP: f64 = 1e-10;

/// Angular domain of the cone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    /// Arc {theta in (0, alpha)} on the circle, n = 2.
    Arc { alpha: f64 },
    /// Polar cap {theta_1 in [0, alpha)} on S^2, n = 3.
    Cap { alpha: f64 },
    /// Upper half sphere {theta_1 < pi/2}, any n >= 2.
    HalfSphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub n: u32,
    pub shape: Shape,
}

impl DomainSpec {
    pub fn new(n: u32, shape: Shape) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("dimension must be >= 2, got {n}")));
        }
        match shape {
            Shape::Arc { alpha } => {
                if n != 2 {
                    return Err(Error::domain("arc domains require n = 2"));
                }
                if !(alpha > 0.0) || alpha > 2.0 * std::f64::consts::PI - 1e-6 {
                    return Err(Error::domain(format!(
                        "arc angle must lie in (0, 2*pi - 1e-6), got {alpha}"
                    )));
                }
            }
            Shape::Cap { alpha } => {
                if n != 3 {
                    return Err(Error::domain("cap domains require n = 3"));
                }
                if !(alpha > 0.0) || alpha >= std::f64::consts::PI {
                    return Err(Error::domain(format!("cap angle must lie in (0, pi), got {alpha}")));
                }
            }
            Shape::HalfSphere => {}
        }
        Ok(DomainSpec { n, shape })
    }

    /// Colatitude of the lateral boundary measured from the symmetry axis.
    /// For arcs the axis sits at alpha/2 and the half-width is alpha/2.
    pub fn boundary_colatitude(&self) -> f64 {
        match self.shape {
            Shape::Arc { alpha } => alpha,
            Shape::Cap { alpha } => alpha,
            Shape::HalfSphere => std::f64::consts::FRAC_PI_2,
        }
    }

    /// Angular coordinates of the symmetry axis.
    pub fn axis_theta(&self) -> Vec<f64> {
        match self.shape {
            Shape::Arc { alpha } => vec![alpha / 2.0],
            _ => vec![0.0; (self.n - 1) as usize],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum Profile {
    Arc { alpha: f64, norm: f64 },
    Cap { alpha: f64, nu: f64, norm: f64 },
    HalfSphere { norm: f64 },
}

/// Least eigenpair with evaluators for the profile, its colatitude
/// derivative, and the inward normal derivative on the boundary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SphericalEigen {
    pub domain: DomainSpec,
    pub lambda: f64,
    /// sup of phi over the domain.
    pub j_omega: f64,
    pub normalization_residual: f64,
    profile: Profile,
}

impl SphericalEigen {
    /// Signed position of theta relative to the domain: negative inside,
    /// zero on the boundary (within snap), positive outside the closure.
    fn boundary_gap(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != (self.domain.n - 1) as usize {
            return Err(Error::domain(format!(
                "expected {} angular coordinates, got {}",
                self.domain.n - 1,
                theta.len()
            )));
        }
        let t = theta[0];
        match self.profile {
            Profile::Arc { alpha, .. } => {
                // distance to the nearest of the two edges {0, alpha}
                Ok((-t).max(t - alpha))
            }
            Profile::Cap { alpha, .. } => Ok(t - alpha),
            Profile::HalfSphere { .. } => Ok(t - std::f64::consts::FRAC_PI_2),
        }
    }

    /// Does theta lie strictly inside the domain?
    pub fn is_interior(&self, theta: &[f64]) -> bool {
        matches!(self.boundary_gap(theta), Ok(g) if g < -BOUNDARY_SNAP)
    }

    /// phi(theta); exactly zero on the boundary, error outside the closure.
    pub fn phi(&self, theta: &[f64]) -> Result<f64> {
        let gap = self.boundary_gap(theta)?;
        if gap > BOUNDARY_SNAP {
            return Err(Error::domain(format!(
                "angular point lies outside the domain closure (gap {gap:.3e})"
            )));
        }
        if gap >= -BOUNDARY_SNAP {
            return Ok(0.0);
        }
        let t = theta[0];
        Ok(match self.profile {
            Profile::Arc { alpha, norm } => norm * (std::f64::consts::PI * t / alpha).sin(),
            Profile::Cap { nu, norm, .. } => norm * legendre_p(nu, t.cos()),
            Profile::HalfSphere { norm } => norm * t.cos(),
        })
    }

    /// d phi / d theta_1.
    pub fn dphi_dcolatitude(&self, theta: &[f64]) -> Result<f64> {
        let gap = self.boundary_gap(theta)?;
        if gap > BOUNDARY_SNAP {
            return Err(Error::domain("angular point lies outside the domain closure"));
        }
        let t = theta[0];
        Ok(match self.profile {
            Profile::Arc { alpha, norm } => {
                let k = std::f64::consts::PI / alpha;
                norm * k * (k * t).cos()
            }
            Profile::Cap { nu, norm, .. } => {
                let (_, dp_dx) = legendre_p_and_dx(nu, t.cos());
                -norm * t.sin() * dp_dx
            }
            Profile::HalfSphere { norm } => -norm * t.sin(),
        })
    }

    /// Tangential gradient in the orthonormal colatitude-first frame;
    /// profiles are axisymmetric so only the first component is nonzero.
    pub fn grad_phi(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let mut g = vec![0.0; theta.len()];
        g[0] = self.dphi_dcolatitude(theta)?;
        Ok(g)
    }

    /// Inward normal derivative of phi at a boundary point; always positive.
    pub fn boundary_normal_derivative(&self, theta: &[f64]) -> Result<f64> {
        let gap = self.boundary_gap(theta)?;
        if gap.abs() > 1e-6 {
            return Err(Error::domain(format!(
                "point is not on the lateral boundary (gap {gap:.3e})"
            )));
        }
        let t = theta[0];
        Ok(match self.profile {
            Profile::Arc { alpha, norm } => {
                // both edges give the same magnitude by symmetry of sin
                let _ = t;
                norm * std::f64::consts::PI / alpha
            }
            Profile::Cap { alpha, nu, norm } => {
                let (_, dp_dx) = legendre_p_and_dx(nu, alpha.cos());
                norm * alpha.sin() * dp_dx
            }
            Profile::HalfSphere { norm } => norm,
        })
    }
}

/// Solve the least Dirichlet eigenproblem on the given domain.
pub fn solve_eigen(spec: &DomainSpec, tol: f64) -> Result<SphericalEigen> {
    let tol = tol.max(1e-14);
    let (lambda, profile) = match spec.shape {
        Shape::Arc { alpha } => {
            let lambda = (std::f64::consts::PI / alpha).powi(2);
            let norm = (2.0 / alpha).sqrt();
            (lambda, Profile::Arc { alpha, norm })
        }
        Shape::HalfSphere => {
            let n = spec.n;
            let norm = (2.0 * n as f64 / sphere_area(n)).sqrt();
            ((n - 1) as f64, Profile::HalfSphere { norm })
        }
        Shape::Cap { alpha } => {
            let x0 = alpha.cos();
            let nu = smallest_legendre_degree(x0, tol)?;
            let lambda = nu * (nu + 1.0);
            // 2*pi * c^2 * int_{cos a}^1 P_nu(x)^2 dx = 1
            let mass = legendre_sq_integral(nu, x0, 64);
            let norm = 1.0 / (2.0 * std::f64::consts::PI * mass).sqrt();
            (lambda, Profile::Cap { alpha, nu, norm })
        }
    };

    let mut eigen = SphericalEigen {
        domain: *spec,
        lambda,
        j_omega: 0.0,
        normalization_residual: 0.0,
        profile,
    };
    eigen.normalization_residual = (normalization_mass(&eigen) - 1.0).abs();
    eigen.j_omega = sup_phi(&eigen);
    Ok(eigen)
}

fn sup_phi(eigen: &SphericalEigen) -> f64 {
    let hi = eigen.domain.boundary_colatitude();
    let f = |t: f64| eigen.phi(&axis_like(eigen, t)).unwrap_or(0.0);
    let (t_star, v) = golden_section_max(f, 0.0, hi, 1e-9);
    let _ = t_star;
    v.max(f(0.0)).max(f(hi))
}

fn axis_like(eigen: &SphericalEigen, t: f64) -> Vec<f64> {
    let mut theta = vec![0.0; (eigen.domain.n - 1) as usize];
    theta[0] = t;
    theta
}

/// Quadrature of phi^2 over the domain (should be 1).
fn normalization_mass(eigen: &SphericalEigen) -> f64 {
    let n = eigen.domain.n;
    let hi = eigen.domain.boundary_colatitude();
    let (nodes, weights) = gauss_legendre(128);
    // dS on S^{n-1} in colatitude: s_{n-1} sin^{n-2}(theta) d theta;
    // for the arc both "sides" are part of the 1-d domain already.
    let measure = |t: f64| -> f64 {
        match eigen.domain.shape {
            Shape::Arc { .. } => 1.0,
            _ => sphere_area(n - 1) * t.sin().powi((n - 2) as i32),
        }
    };
    let mut acc = 0.0;
    for (x, w) in nodes.iter().zip(weights.iter()) {
        let t = 0.5 * (x + 1.0) * hi;
        let phi = eigen.phi(&axis_like(eigen, t)).unwrap_or(0.0);
        acc += w * 0.5 * hi * phi * phi * measure(t);
    }
    acc
}

/// Legendre function of the first kind for real degree nu on (-1, 1],
/// through the hypergeometric series at z = (1-x)/2.
pub fn legendre_p(nu: f64, x: f64) -> f64 {
    legendre_p_and_dx(nu, x).0
}

/// (P_nu(x), d P_nu / dx).
pub fn legendre_p_and_dx(nu: f64, x: f64) -> (f64, f64) {
    let z = 0.5 * (1.0 - x);
    if z == 0.0 {
        // P_nu(1) = 1, P'_nu(1) = nu (nu + 1) / 2
        return (1.0, nu * (nu + 1.0) / 2.0);
    }
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut dsum = 0.0_f64; // sum of k c_k z^{k-1}
    for k in 0..200_000u64 {
        let kf = k as f64;
        term *= (kf - nu) * (kf + nu + 1.0) / ((kf + 1.0) * (kf + 1.0)) * z;
        sum += term;
        dsum += (kf + 1.0) * term / z;
        if kf > nu + 2.0 && term.abs() < 1e-16 * sum.abs().max(1e-300) {
            break;
        }
    }
    (sum, -0.5 * dsum)
}

/// Smallest positive degree nu with P_nu(x0) = 0, located by scan and
/// bisection over nu in (0, 30].
fn smallest_legendre_degree(x0: f64, tol: f64) -> Result<f64> {
    let f = |nu: f64| legendre_p(nu, x0);
    let mut lo = 1e-4;
    let mut flo = f(lo);
    if flo <= 0.0 {
        return Err(Error::Convergence("Legendre degree scan started past a root".into()));
    }
    let mut hi = lo;
    while hi < 30.0 {
        hi = (hi + 0.25).min(30.0);
        let fhi = f(hi);
        if fhi <= 0.0 {
            if fhi == 0.0 {
                return Ok(hi);
            }
            let mut a = lo;
            let mut b = hi;
            let mut fa = flo;
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                let fm = f(mid);
                if fm == 0.0 || (b - a) < tol.min(1e-10) {
                    return Ok(mid);
                }
                if fa * fm < 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    fa = fm;
                }
            }
            return Ok(0.5 * (a + b));
        }
        lo = hi;
        flo = fhi;
    }
    Err(Error::Convergence(format!(
        "no Legendre degree root in (0, 30] for cos(alpha) = {x0}; cap too narrow"
    )))
}

fn legendre_sq_integral(nu: f64, x0: f64, n_nodes: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(n_nodes);
    let mut acc = 0.0;
    for (x, w) in nodes.iter().zip(weights.iter()) {
        let xv = x0 + 0.5 * (x + 1.0) * (1.0 - x0);
        let p = legendre_p(nu, xv);
        acc += w * 0.5 * (1.0 - x0) * p * p;
    }
    acc
}
