//! Discrete equilibrium measures, Green energies, reduced functions, and
//! superfunction evaluation.
//!
//! The equilibrium measure of a point cloud solves the complementarity
//! problem for the quadratic program
//!
//! ```text
//!   min over w >= 0 of  1/2 w' G w - m' w,
//! ```
//!
//! whose optimum satisfies G w = m on the charged (active) points and
//! G w >= m elsewhere - the discrete counterpart of the capacitary measure
//! with potential equal to the Martin kernel on the set. The solver starts
//! from the unconstrained system, clamps negative weights out, re-solves on
//! the active set, and re-admits inactive points whose potential falls
//! under the target, until a fixed point.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::kernels::{CachedPoint, ConeContext, KernelModel};
use crate::sets::{BlockDecomposition, WeightedPoint};

/// Nonnegative atomic measure with per-atom regularization spacings.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct AtomicMeasure {
    pub support: Vec<Point>,
    pub weights: Vec<f64>,
    /// Local spacing per atom; zero means an ideal point charge.
    pub h: Vec<f64>,
}

impl AtomicMeasure {
    pub fn empty() -> Self {
        AtomicMeasure::default()
    }

    pub fn from_atoms(atoms: Vec<(Point, f64)>) -> Self {
        let mut m = AtomicMeasure::empty();
        for (p, w) in atoms {
            m.support.push(p);
            m.weights.push(w);
            m.h.push(0.0);
        }
        m
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }
}

/// Equilibrium fit of one point cloud.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub block: i32,
    pub measure: AtomicMeasure,
    /// Green energy of the measure against the regularized kernel.
    pub energy: f64,
    /// Total capacitary mass.
    pub mass: f64,
    /// Max relative target error over active points.
    pub residual: f64,
    pub active_fraction: f64,
    /// Tikhonov jitter that had to be added to factor the kernel matrix.
    pub regularization: f64,
    pub n_points: usize,
}

impl EquilibriumResult {
    pub fn zero(block: i32) -> Self {
        EquilibriumResult {
            block,
            measure: AtomicMeasure::empty(),
            energy: 0.0,
            mass: 0.0,
            residual: 0.0,
            active_fraction: 0.0,
            regularization: 0.0,
            n_points: 0,
        }
    }
}

const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-9, 1e-6];

fn solve_spd(g: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<(DVector<f64>, f64)> {
    for &eps in JITTER_LADDER.iter() {
        let mut m = g.clone();
        if eps > 0.0 {
            let mean_diag = m.diagonal().mean();
            for i in 0..m.nrows() {
                m[(i, i)] += eps * mean_diag;
            }
        }
        if let Some(ch) = m.cholesky() {
            return Some((ch.solve(rhs), eps));
        }
    }
    None
}

/// Constrained fit of weights w >= 0 with G w = targets on the active set.
pub fn fit_measure_to_target(
    cloud: &[WeightedPoint],
    targets: &[f64],
    model: &KernelModel,
    block: i32,
) -> Result<EquilibriumResult> {
    let n = cloud.len();
    if n == 0 {
        return Ok(EquilibriumResult::zero(block));
    }
    if targets.len() != n {
        return Err(Error::domain("target vector length does not match the cloud"));
    }
    let cached: Vec<CachedPoint> =
        cloud.iter().map(|wp| model.cache_point(&wp.point)).collect::<Result<_>>()?;

    let g = DMatrix::from_fn(n, n, |i, j| {
        let h = if i == j { cloud[i].h } else { cloud[i].h.min(cloud[j].h) };
        model.green_cached(&cached[i], &cached[j], h)
    });
    let m = DVector::from_iterator(n, targets.iter().copied());

    // points with nonpositive target carry no charge
    let mut active: Vec<usize> = (0..n).filter(|&i| targets[i] > 0.0).collect();
    let mut visited: std::collections::BTreeSet<Vec<usize>> = std::collections::BTreeSet::new();
    let mut w_full = DVector::zeros(n);
    let mut max_jitter = 0.0_f64;

    let mut iter = 0;
    loop {
        iter += 1;
        if active.is_empty() {
            break;
        }
        let na = active.len();
        let g_aa = DMatrix::from_fn(na, na, |i, j| g[(active[i], active[j])]);
        let m_a = DVector::from_fn(na, |i, _| m[active[i]]);
        let (w_a, eps) = solve_spd(&g_aa, &m_a).ok_or(Error::Conditioning {
            block,
            detail: format!("kernel matrix of {na} points not factorizable after regularization"),
        })?;
        max_jitter = max_jitter.max(eps);

        w_full.fill(0.0);
        for (i, &idx) in active.iter().enumerate() {
            w_full[idx] = w_a[i];
        }

        if iter >= 50 {
            // iteration cap: keep the clamped state
            for v in w_full.iter_mut() {
                *v = v.max(0.0);
            }
            break;
        }

        let had_negatives = w_a.iter().any(|&v| v < 0.0);
        if had_negatives {
            active = active
                .iter()
                .enumerate()
                .filter(|&(i, _)| w_a[i] > 0.0)
                .map(|(_, &idx)| idx)
                .collect();
            continue;
        }

        // dual feasibility: the potential must reach the target off the support
        let s = &g * &w_full;
        let mut violated: Vec<usize> = (0..n)
            .filter(|&i| {
                targets[i] > 0.0 && w_full[i] == 0.0 && m[i] - s[i] > 1e-9 * (1.0 + m[i].abs())
            })
            .collect();
        if violated.is_empty() {
            break;
        }
        active.append(&mut violated);
        active.sort_unstable();
        active.dedup();
        if !visited.insert(active.clone()) {
            break; // active-set cycle; keep the current feasible state
        }
    }

    let s = &g * &w_full;
    let mut residual = 0.0_f64;
    let mut n_active = 0usize;
    for i in 0..n {
        if w_full[i] > 0.0 {
            n_active += 1;
            residual = residual.max((s[i] - m[i]).abs() / m[i].max(1e-300));
        }
    }
    let energy = w_full.dot(&s);
    let mass = w_full.sum();

    let measure = AtomicMeasure {
        support: cloud.iter().map(|wp| wp.point.clone()).collect(),
        weights: w_full.iter().copied().collect(),
        h: cloud.iter().map(|wp| wp.h).collect(),
    };
    Ok(EquilibriumResult {
        block,
        measure,
        energy,
        mass,
        residual,
        active_fraction: n_active as f64 / n as f64,
        regularization: max_jitter,
        n_points: n,
    })
}

/// Equilibrium measure of one block cloud with target M(., infinity).
pub fn equilibrium_measure(
    cloud: &[WeightedPoint],
    model: &KernelModel,
    block: i32,
) -> Result<EquilibriumResult> {
    let targets: Vec<f64> = cloud
        .iter()
        .map(|wp| model.context.martin_infinity(&wp.point))
        .collect::<Result<_>>()?;
    fit_measure_to_target(cloud, &targets, model, block)
}

/// Recompute the double sum w' G w with the regularized diagonal.
pub fn green_energy(result: &EquilibriumResult, model: &KernelModel) -> Result<f64> {
    let mu = &result.measure;
    let cached: Vec<CachedPoint> =
        mu.support.iter().map(|p| model.cache_point(p)).collect::<Result<_>>()?;
    let n = mu.len();
    let mut acc = 0.0;
    for i in 0..n {
        if mu.weights[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            if mu.weights[j] == 0.0 {
                continue;
            }
            let h = if i == j { mu.h[i] } else { mu.h[i].min(mu.h[j]) };
            acc += mu.weights[i] * mu.weights[j] * model.green_cached(&cached[i], &cached[j], h);
        }
    }
    Ok(acc)
}

/// Total mass of the capacitary measure.
pub fn capacity_mass(result: &EquilibriumResult) -> f64 {
    result.measure.total_mass()
}

/// Green potential of an atomic measure at a point.
pub fn green_potential(mu: &AtomicMeasure, model: &KernelModel, p: &Point) -> Result<f64> {
    if mu.is_empty() {
        return Ok(0.0);
    }
    let cp = model.cache_point(p)?;
    let mut acc = 0.0;
    for i in 0..mu.len() {
        if mu.weights[i] == 0.0 {
            continue;
        }
        let cq = model.cache_point(&mu.support[i])?;
        acc += mu.weights[i] * model.green_cached(&cp, &cq, mu.h[i]);
    }
    Ok(acc)
}

/// Value at `p_eval` of the Green potential of the constrained equilibrium
/// fit over the window's support with the given nonnegative target.
pub fn reduced_function<F>(
    window: &BlockDecomposition,
    u_target: F,
    model: &KernelModel,
    p_eval: &Point,
) -> Result<f64>
where
    F: Fn(&Point) -> Result<f64>,
{
    let cloud: Vec<WeightedPoint> =
        window.iter_blocks().flat_map(|(_, c)| c.iter().cloned()).collect();
    if cloud.is_empty() {
        return Ok(0.0);
    }
    let targets: Vec<f64> = cloud.iter().map(|wp| u_target(&wp.point)).collect::<Result<_>>()?;
    if targets.iter().any(|t| *t < 0.0) {
        return Err(Error::domain("reduced function needs a nonnegative target"));
    }
    let fit = fit_measure_to_target(&cloud, &targets, model, window.k_min)?;
    green_potential(&fit.measure, model, p_eval)
}

/// Superfunction in representation form: multiples of the two Martin
/// kernels plus a Green potential plus a boundary Poisson sum.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct Superfunction {
    pub c_inf: f64,
    pub c_origin: f64,
    pub mu: AtomicMeasure,
    /// Atoms on the lateral boundary, weighted against the Poisson kernel.
    pub nu: AtomicMeasure,
}

impl Superfunction {
    pub fn martin_multiple(c_inf: f64) -> Self {
        Superfunction { c_inf, ..Default::default() }
    }

    pub fn from_green_potential(mu: AtomicMeasure) -> Self {
        Superfunction { mu, ..Default::default() }
    }
}

pub fn superfunction_eval(v: &Superfunction, model: &KernelModel, p: &Point) -> Result<f64> {
    let ctx: &ConeContext = &model.context;
    let mut acc = 0.0;
    if v.c_inf != 0.0 {
        acc += v.c_inf * ctx.martin_infinity(p)?;
    }
    if v.c_origin != 0.0 {
        acc += v.c_origin * ctx.martin_origin(p)?;
    }
    acc += green_potential(&v.mu, model, p)?;
    for i in 0..v.nu.len() {
        if v.nu.weights[i] != 0.0 {
            acc += v.nu.weights[i] * model.poisson(p, &v.nu.support[i])?;
        }
    }
    Ok(acc)
}

/// Right-hand side of the capacitary mass bound: the V-weighted masses of
/// the representing measures,
/// `int V(t) phi dmu + int V(t) t^{-1} dphi/dn dnu`.
pub fn superfunction_mass_bound(v: &Superfunction, ctx: &ConeContext) -> Result<f64> {
    let mut acc = 0.0;
    for i in 0..v.mu.len() {
        if v.mu.weights[i] == 0.0 {
            continue;
        }
        let p = &v.mu.support[i];
        let (vv, _, _, _) = ctx.basis.eval(p.r)?;
        acc += v.mu.weights[i] * vv * ctx.phi(p)?;
    }
    for i in 0..v.nu.len() {
        if v.nu.weights[i] == 0.0 {
            continue;
        }
        let q = &v.nu.support[i];
        let (vv, _, _, _) = ctx.basis.eval(q.r)?;
        let dphi = ctx.eigen.boundary_normal_derivative(&q.theta)?;
        acc += v.nu.weights[i] * vv * dphi / q.r;
    }
    Ok(acc)
}

/// Dyadic integrability diagnostics of a measure against a radial weight.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailDiagnostics {
    pub k_lo: i32,
    /// Per-octave increments of `int weight(t) dmu`.
    pub octave_increments: Vec<f64>,
    /// (W(R)/V(R)) * int_{t<R} V-weighted mass, along R = 2^k.
    pub ratio_partials: Vec<f64>,
}

/// Tail behavior of `int W(t) phi dmu` for interior measures, or of the
/// boundary analogue with the `t^{-1} dphi/dn` weight when `boundary` is
/// set.
pub fn measure_tail_diagnostics(
    mu: &AtomicMeasure,
    ctx: &ConeContext,
    boundary: bool,
) -> Result<TailDiagnostics> {
    if mu.is_empty() || mu.weights.iter().all(|w| *w == 0.0) {
        return Ok(TailDiagnostics { k_lo: 0, octave_increments: vec![], ratio_partials: vec![] });
    }
    let mut k_lo = i32::MAX;
    let mut k_hi = i32::MIN;
    for p in &mu.support {
        let k = p.r.log2().floor() as i32;
        k_lo = k_lo.min(k);
        k_hi = k_hi.max(k);
    }
    let angular = |p: &Point| -> Result<f64> {
        if boundary {
            Ok(ctx.eigen.boundary_normal_derivative(&p.theta)? / p.r)
        } else {
            ctx.phi(p)
        }
    };
    let n_oct = (k_hi - k_lo + 1) as usize;
    let mut w_inc = vec![0.0; n_oct];
    let mut v_partial = vec![0.0; n_oct];
    for i in 0..mu.len() {
        if mu.weights[i] == 0.0 {
            continue;
        }
        let p = &mu.support[i];
        let k = (p.r.log2().floor() as i32 - k_lo) as usize;
        let (vv, ww, _, _) = ctx.basis.eval(p.r)?;
        let a = angular(p)?;
        w_inc[k] += mu.weights[i] * ww * a;
        v_partial[k] += mu.weights[i] * vv * a;
    }
    let mut ratio_partials = Vec::with_capacity(n_oct);
    let mut cum = 0.0;
    for k in 0..n_oct {
        cum += v_partial[k];
        let radius = 2.0_f64.powi(k_lo + k as i32 + 1);
        let (vv, ww, _, _) = ctx.basis.eval(radius)?;
        ratio_partials.push(ww / vv * cum);
    }
    Ok(TailDiagnostics { k_lo, octave_increments: w_inc, ratio_partials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{KernelMode, KernelModel};
    use crate::radial::{solve_radial, PotentialSpec};
    use crate::sets::{discretize, DiscretizationParams, Primitive, SetSpec};
    use crate::spherical::{solve_eigen, DomainSpec, Shape};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn halfspace_context() -> Arc<ConeContext> {
        let domain = DomainSpec::new(3, Shape::HalfSphere).unwrap();
        let eigen = solve_eigen(&domain, 1e-12).unwrap();
        let basis = solve_radial(&PotentialSpec::pure(0.0), 3, eigen.lambda, 1e-8).unwrap();
        Arc::new(ConeContext::new(domain, eigen, basis).unwrap())
    }

    fn axis(r: f64) -> Point {
        Point::new(r, vec![0.0, 0.0]).unwrap()
    }

    fn wp(p: Point, h: f64) -> WeightedPoint {
        WeightedPoint { point: p, h }
    }

    #[test]
    fn single_point_closed_form() {
        let ctx = halfspace_context();
        let model = KernelModel::new(ctx.clone(), KernelMode::HalfspaceOracle).unwrap();
        let p = axis(4.0);
        let h = 0.5;
        let cloud = vec![wp(p.clone(), h)];
        let res = equilibrium_measure(&cloud, &model, 2).unwrap();
        let m = ctx.martin_infinity(&p).unwrap();
        let g =
            model.green_cached(&model.cache_point(&p).unwrap(), &model.cache_point(&p).unwrap(), h);
        assert!((res.mass - m / g).abs() < 1e-12 * (m / g));
        assert!((res.energy - m * m / g).abs() < 1e-12 * (m * m / g));
        assert!(res.residual < 1e-12);
        assert_eq!(res.active_fraction, 1.0);
    }

    #[test]
    fn empty_block_gives_zero() {
        let model = KernelModel::new(halfspace_context(), KernelMode::Surrogate).unwrap();
        let res = equilibrium_measure(&[], &model, 0).unwrap();
        assert_eq!(res.mass, 0.0);
        assert_eq!(res.energy, 0.0);
        assert_eq!(res.n_points, 0);
    }

    #[test]
    fn two_distant_atoms_add_energies() {
        let ctx = halfspace_context();
        let model = KernelModel::new(ctx.clone(), KernelMode::HalfspaceOracle).unwrap();
        let h = 0.25;
        let p1 = axis(64.0);
        let p2 = Point::new(100.0, vec![0.9, 3.0]).unwrap();
        let both = vec![wp(p1.clone(), h), wp(p2.clone(), h)];
        let res_both = fit_measure_to_target(&both, &[1.0, 1.0], &model, 0).unwrap();
        let res_1 = fit_measure_to_target(&[wp(p1, h)], &[1.0], &model, 0).unwrap();
        let res_2 = fit_measure_to_target(&[wp(p2, h)], &[1.0], &model, 0).unwrap();
        let sum = res_1.energy + res_2.energy;
        assert!((res_both.energy - sum).abs() < 0.02 * sum, "{} vs {}", res_both.energy, sum);
    }

    #[test]
    fn refinement_keeps_energy_and_mass_stable() {
        let ctx = halfspace_context();
        let model = KernelModel::new(ctx, KernelMode::HalfspaceOracle).unwrap();
        let eigen = &model.context.eigen.clone();
        let spec = SetSpec::new("ball", vec![Primitive::Ball { center: axis(8.0), radius: 1.0 }]);
        let coarse_params = DiscretizationParams::new(0.20, 3, 3).unwrap();
        let fine_params = DiscretizationParams::new(0.10, 3, 3).unwrap();
        let coarse = discretize(&spec, eigen, &coarse_params).unwrap();
        let fine = discretize(&spec, eigen, &fine_params).unwrap();
        assert!(coarse.block(3).len() >= 40);
        assert!(fine.block(3).len() >= 4 * coarse.block(3).len());
        let rc = equilibrium_measure(coarse.block(3), &model, 3).unwrap();
        let rf = equilibrium_measure(fine.block(3), &model, 3).unwrap();
        assert!(
            (rc.energy - rf.energy).abs() <= 0.10 * rf.energy,
            "{} vs {}",
            rc.energy,
            rf.energy
        );
        assert!((rc.mass - rf.mass).abs() <= 0.10 * rf.mass, "{} vs {}", rc.mass, rf.mass);
    }

    #[test]
    fn energy_recompute_matches() {
        let ctx = halfspace_context();
        let model = KernelModel::new(ctx, KernelMode::Surrogate).unwrap();
        let eigen = &model.context.eigen.clone();
        let spec = SetSpec::new("ball", vec![Primitive::Ball { center: axis(4.0), radius: 0.8 }]);
        let d = discretize(&spec, eigen, &DiscretizationParams::new(0.2, 1, 2).unwrap()).unwrap();
        let res = equilibrium_measure(d.block(2), &model, 2).unwrap();
        let recomputed = green_energy(&res, &model).unwrap();
        assert!((res.energy - recomputed).abs() < 1e-9 * res.energy.max(1e-300));
        assert_eq!(capacity_mass(&res), res.measure.total_mass());
    }

    #[test]
    fn green_potential_basics() {
        let ctx = halfspace_context();
        let model = KernelModel::new(ctx.clone(), KernelMode::HalfspaceOracle).unwrap();
        assert_eq!(green_potential(&AtomicMeasure::empty(), &model, &axis(2.0)).unwrap(), 0.0);
        let q = axis(3.0);
        let mu = AtomicMeasure::from_atoms(vec![(q.clone(), 1.0)]);
        let p = axis(1.0);
        let direct = model.green(&p, &q).unwrap();
        assert!((green_potential(&mu, &model, &p).unwrap() - direct).abs() < 1e-15);
        // oracle potential equals the image-formula sum
        let mu2 = AtomicMeasure::from_atoms(vec![(axis(3.0), 0.7), (axis(5.0), 0.3)]);
        let by_sum = 0.7 * crate::kernels::halfspace_green_oracle(&p, &axis(3.0)).unwrap()
            + 0.3 * crate::kernels::halfspace_green_oracle(&p, &axis(5.0)).unwrap();
        assert!((green_potential(&mu2, &model, &p).unwrap() - by_sum).abs() < 1e-15);
    }

    #[test]
    fn reduced_function_contract() {
        let ctx = halfspace_context();
        let model = KernelModel::new(ctx.clone(), KernelMode::HalfspaceOracle).unwrap();
        let eigen = &model.context.eigen.clone();
        // empty window
        let empty = discretize(
            &SetSpec::empty("none"),
            eigen,
            &DiscretizationParams::new(0.2, 3, 3).unwrap(),
        )
        .unwrap();
        let v = reduced_function(&empty, |_| Ok(1.0), &model, &axis(1.0)).unwrap();
        assert_eq!(v, 0.0);

        // at a support point the potential matches the target
        let spec = SetSpec::new("ball", vec![Primitive::Ball { center: axis(8.0), radius: 1.0 }]);
        let window =
            discretize(&spec, eigen, &DiscretizationParams::new(0.15, 3, 3).unwrap()).unwrap();
        let target = |p: &Point| model.context.martin_infinity(p);
        let probe = window.block(3)[0].point.clone();
        let fit_at_probe = reduced_function(&window, target, &model, &probe).unwrap();
        let want = model.context.martin_infinity(&probe).unwrap();
        assert!((fit_at_probe - want).abs() < 1e-6 * want, "{fit_at_probe} vs {want}");
    }

    #[test]
    fn superfunction_linearity() {
        let ctx = halfspace_context();
        let model = KernelModel::new(ctx.clone(), KernelMode::Surrogate).unwrap();
        let p = axis(2.5);
        let v1 = Superfunction::martin_multiple(1.0);
        assert!(
            (superfunction_eval(&v1, &model, &p).unwrap() - ctx.martin_infinity(&p).unwrap())
                .abs()
                < 1e-14
        );
        let q = axis(6.0);
        let v2 =
            Superfunction::from_green_potential(AtomicMeasure::from_atoms(vec![(q.clone(), 1.0)]));
        assert!(
            (superfunction_eval(&v2, &model, &p).unwrap() - model.green(&p, &q).unwrap()).abs()
                < 1e-14
        );
        let bq = Point::new(2.0, vec![std::f64::consts::FRAC_PI_2, 0.0]).unwrap();
        let mixed = Superfunction {
            c_inf: 0.5,
            c_origin: 2.0,
            mu: AtomicMeasure::from_atoms(vec![(q.clone(), 1.5)]),
            nu: AtomicMeasure::from_atoms(vec![(bq.clone(), 0.25)]),
        };
        let want = 0.5 * ctx.martin_infinity(&p).unwrap()
            + 2.0 * ctx.martin_origin(&p).unwrap()
            + 1.5 * model.green(&p, &q).unwrap()
            + 0.25 * model.poisson(&p, &bq).unwrap();
        assert!((superfunction_eval(&mixed, &model, &p).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn kernel_scaling_equivariance() {
        let ctx = halfspace_context();
        let eigen = solve_eigen(&DomainSpec::new(3, Shape::HalfSphere).unwrap(), 1e-12).unwrap();
        let spec = SetSpec::new("ball", vec![Primitive::Ball { center: axis(4.0), radius: 0.7 }]);
        let d = discretize(&spec, &eigen, &DiscretizationParams::new(0.2, 2, 2).unwrap()).unwrap();
        let base = KernelModel::new(ctx.clone(), KernelMode::Surrogate).unwrap();
        let scaled = KernelModel::new(ctx, KernelMode::Surrogate).unwrap().with_scale(2.0);
        let r0 = equilibrium_measure(d.block(2), &base, 2).unwrap();
        let r2 = equilibrium_measure(d.block(2), &scaled, 2).unwrap();
        assert!((r2.mass - r0.mass / 2.0).abs() < 1e-12 * r0.mass);
        assert!((r2.energy - r0.energy / 2.0).abs() < 1e-12 * r0.energy);
        for (a, b) in r0.measure.weights.iter().zip(r2.measure.weights.iter()) {
            assert!((b - a / 2.0).abs() <= 1e-12 * a.abs().max(1e-300));
        }
    }

    #[test]
    fn potential_obeys_maximum_principle_surrogate() {
        let ctx = halfspace_context();
        let model = KernelModel::new(ctx.clone(), KernelMode::HalfspaceOracle).unwrap();
        let eigen = &model.context.eigen.clone();
        let spec = SetSpec::new("ball", vec![Primitive::Ball { center: axis(8.0), radius: 1.5 }]);
        let d = discretize(&spec, eigen, &DiscretizationParams::new(0.15, 3, 3).unwrap()).unwrap();
        let res = equilibrium_measure(d.block(3), &model, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let r = rng.gen_range(0.5..40.0);
            let ct: f64 = rng.gen_range(0.01..0.999);
            let psi: f64 = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
            let p = Point::new(r, vec![ct.acos(), psi]).unwrap();
            let pot = green_potential(&res.measure, &model, &p).unwrap();
            let m = model.context.martin_infinity(&p).unwrap();
            assert!(
                pot <= (1.0 + res.residual + 0.1) * m.max(1e-300),
                "potential {pot} exceeds Martin bound {m} at r={r}"
            );
        }
    }

    #[test]
    fn mass_bound_for_separated_superfunction() {
        let ctx = halfspace_context();
        let model = KernelModel::new(ctx.clone(), KernelMode::HalfspaceOracle).unwrap();
        let eigen = &model.context.eigen.clone();
        // E: ball in block 2; mu atoms far above it
        let spec = SetSpec::new("ball", vec![Primitive::Ball { center: axis(5.0), radius: 0.8 }]);
        let d = discretize(&spec, eigen, &DiscretizationParams::new(0.2, 2, 2).unwrap()).unwrap();
        let cloud = d.block(2);

        let mu = AtomicMeasure::from_atoms(vec![(axis(64.0), 1.0), (axis(100.0), 2.0)]);
        let mut v = Superfunction::from_green_potential(mu);
        // rescale so that min over E of v is exactly 1
        let min_v = cloud
            .iter()
            .map(|wpt| superfunction_eval(&v, &model, &wpt.point).unwrap())
            .fold(f64::INFINITY, f64::min);
        for w in v.mu.weights.iter_mut() {
            *w /= min_v;
        }
        for wpt in cloud {
            assert!(superfunction_eval(&v, &model, &wpt.point).unwrap() >= 1.0 - 1e-12);
        }
        let res = equilibrium_measure(cloud, &model, 2).unwrap();
        let bound = superfunction_mass_bound(&v, &ctx).unwrap();
        assert!(
            capacity_mass(&res) <= 1.05 * bound,
            "mass {} vs bound {}",
            capacity_mass(&res),
            bound
        );
    }

    #[test]
    fn tail_diagnostics_decay_for_bead_measures() {
        let ctx = halfspace_context();
        let model = KernelModel::new(ctx.clone(), KernelMode::HalfspaceOracle).unwrap();
        let eigen = &model.context.eigen.clone();
        let spec =
            SetSpec::new("beads", vec![Primitive::AxisBeads { radius: 1.0, k_lo: 2, k_hi: 9 }]);
        let d = discretize(&spec, eigen, &DiscretizationParams::new(0.2, 2, 9).unwrap()).unwrap();
        let mut union = AtomicMeasure::empty();
        for (k, cloud) in d.iter_blocks() {
            let res = equilibrium_measure(cloud, &model, k).unwrap();
            for i in 0..res.measure.len() {
                if res.measure.weights[i] > 0.0 {
                    union.support.push(res.measure.support[i].clone());
                    union.weights.push(res.measure.weights[i]);
                    union.h.push(res.measure.h[i]);
                }
            }
        }
        let diag = measure_tail_diagnostics(&union, &ctx, false).unwrap();
        let inc = &diag.octave_increments;
        assert!(inc.len() >= 6);
        // octave increments of int W phi dmu decay along the tail
        for w in inc[inc.len() / 2..].windows(2) {
            assert!(w[1] < w[0] * 1.02, "tail increment grew: {inc:?}");
        }
        // (W/V)-weighted partial masses tend to zero
        let rp = &diag.ratio_partials;
        assert!(rp[rp.len() - 1] < 0.25 * rp[rp.len() / 2], "{rp:?}");
    }

    #[test]
    fn boundary_tail_diagnostics_with_normal_weight() {
        let ctx = halfspace_context();
        // boundary atoms at t = 2^j with unit weights
        let mut nu = AtomicMeasure::empty();
        for j in 1..9 {
            nu.support
                .push(Point::new(2.0_f64.powi(j), vec![std::f64::consts::FRAC_PI_2, 0.0]).unwrap());
            nu.weights.push(1.0);
            nu.h.push(0.0);
        }
        let diag = measure_tail_diagnostics(&nu, &ctx, true).unwrap();
        for w in diag.octave_increments.windows(2) {
            assert!(w[1] < w[0]);
        }
        let rp = &diag.ratio_partials;
        assert!(rp[rp.len() - 1] < rp[0]);
    }
}
