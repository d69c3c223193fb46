//! Test sets in the cone and their discretization into weighted point
//! clouds per dyadic block I_k = {2^k <= r < 2^{k+1}}.
//!
//! Every solid primitive is sampled on a fixed cartesian lattice whose
//! spacing scales with the block radius (`resolution * 2^k`), capped by the
//! primitive's own diameter so small features at large radii stay resolved.
//! The weight h attached to each point is the lattice spacing actually
//! used; it doubles as the diagonal regularization radius downstream.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::spherical::{DomainSpec, Shape, SphericalEigen};

/// Geometric primitive of a test set.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Primitive {
    Ball {
        center: Point,
        radius: f64,
    },
    /// Radial range of whole blocks, restricted to an angular cap of
    /// half-width `alpha_sub` around the symmetry axis.
    ShellSector {
        k_lo: i32,
        k_hi: i32,
        alpha_sub: f64,
    },
    /// One ball of fixed radius centered on the axis at r = 2^k for each
    /// k in the range.
    AxisBeads {
        radius: f64,
        k_lo: i32,
        k_hi: i32,
    },
    ExplicitPoints {
        points: Vec<(Point, f64)>,
    },
    /// {dist to lateral boundary <= coeff * |P - apex|^2} within `extent`
    /// of the apex; tangential contact of quadratic order.
    TangentialCusp {
        apex: Point,
        coeff: f64,
        extent: f64,
    },
    /// Non-tangential approach region {dist to lateral boundary >=
    /// aperture * |P - apex|} within `extent` of the apex.
    BoundaryCone {
        apex: Point,
        aperture: f64,
        extent: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SetSpec {
    pub name: String,
    pub shapes: Vec<Primitive>,
}

impl SetSpec {
    pub fn new(name: impl Into<String>, shapes: Vec<Primitive>) -> Self {
        SetSpec { name: name.into(), shapes }
    }

    pub fn empty(name: impl Into<String>) -> Self {
        SetSpec { name: name.into(), shapes: Vec::new() }
    }
}

/// Distance from a point to the lateral boundary of the cone, exact for
/// the half space and first-order accurate near the boundary otherwise.
pub fn lateral_distance(domain: &DomainSpec, p: &Point) -> f64 {
    let gap = match domain.shape {
        Shape::Arc { alpha } => p.theta[0].min(alpha - p.theta[0]),
        Shape::Cap { alpha } => alpha - p.theta[0],
        Shape::HalfSphere => std::f64::consts::FRAC_PI_2 - p.theta[0],
    };
    p.r * gap.clamp(0.0, std::f64::consts::FRAC_PI_2).sin()
}

fn primitive_contains(prim: &Primitive, domain: &DomainSpec, p: &Point, cart: &[f64]) -> bool {
    match prim {
        Primitive::Ball { center, radius } => {
            let c = center.to_cartesian();
            sq_dist(cart, &c) <= radius * radius
        }
        Primitive::ShellSector { k_lo, k_hi, alpha_sub } => {
            let r_lo = pow2(*k_lo);
            let r_hi = pow2(*k_hi + 1);
            if p.r < r_lo || p.r > r_hi {
                return false;
            }
            let axis_gap = match domain.shape {
                Shape::Arc { alpha } => (p.theta[0] - alpha / 2.0).abs(),
                _ => p.theta[0],
            };
            axis_gap <= *alpha_sub
        }
        Primitive::AxisBeads { radius, k_lo, k_hi } => {
            let axis = domain.axis_theta();
            for k in *k_lo..=*k_hi {
                let center = Point::new(pow2(k), axis.clone()).unwrap();
                if sq_dist(cart, &center.to_cartesian()) <= radius * radius {
                    return true;
                }
            }
            false
        }
        Primitive::ExplicitPoints { points } => {
            points.iter().any(|(q, h)| sq_dist(cart, &q.to_cartesian()) <= h * h)
        }
        Primitive::TangentialCusp { apex, coeff, extent } => {
            let d = sq_dist(cart, &apex.to_cartesian()).sqrt();
            d <= *extent && lateral_distance(domain, p) <= coeff * d * d
        }
        Primitive::BoundaryCone { apex, aperture, extent } => {
            let d = sq_dist(cart, &apex.to_cartesian()).sqrt();
            d <= *extent && lateral_distance(domain, p) >= aperture * d
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn pow2(k: i32) -> f64 {
    2.0_f64.powi(k)
}

/// Dyadic block index: floor(log2 r).
pub fn block_index(p: &Point) -> i32 {
    p.r.log2().floor() as i32
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightedPoint {
    pub point: Point,
    pub h: f64,
}

/// A set discretized into per-block weighted point clouds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockDecomposition {
    pub name: String,
    pub k_min: i32,
    pub k_max: i32,
    pub resolution: f64,
    blocks: Vec<Vec<WeightedPoint>>,
    /// Blocks whose clouds hit the point cap and were coarsened.
    pub coarsened_blocks: Vec<i32>,
    /// Primitives that produced no points anywhere.
    pub skipped_primitives: Vec<String>,
}

impl BlockDecomposition {
    pub fn block(&self, k: i32) -> &[WeightedPoint] {
        if k < self.k_min || k > self.k_max {
            return &[];
        }
        &self.blocks[(k - self.k_min) as usize]
    }

    pub fn iter_blocks(&self) -> impl Iterator<Item = (i32, &[WeightedPoint])> {
        self.blocks.iter().enumerate().map(move |(i, b)| (self.k_min + i as i32, b.as_slice()))
    }

    pub fn total_points(&self) -> usize {
        self.blocks.iter().map(|b| b.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total_points() == 0
    }

    /// Blockwise subset check by exact coordinates, used by the
    /// monotonicity diagnostics.
    pub fn is_subset_of(&self, other: &BlockDecomposition) -> bool {
        for (k, cloud) in self.iter_blocks() {
            let theirs: BTreeSet<Vec<u64>> = other.block(k).iter().map(point_key).collect();
            for wp in cloud {
                if !theirs.contains(&point_key(wp)) {
                    return false;
                }
            }
        }
        true
    }

    /// CSV export: k, r, theta..., h.
    pub fn to_csv(&self) -> String {
        let n_theta =
            self.blocks.iter().flatten().next().map(|wp| wp.point.theta.len()).unwrap_or(1);
        let mut out = String::from("k,r");
        for i in 1..=n_theta {
            out.push_str(&format!(",theta{i}"));
        }
        out.push_str(",h\n");
        for (k, cloud) in self.iter_blocks() {
            for wp in cloud {
                out.push_str(&format!("{k},{}", wp.point.r));
                for t in &wp.point.theta {
                    out.push_str(&format!(",{t}"));
                }
                out.push_str(&format!(",{}\n", wp.h));
            }
        }
        out
    }
}

fn point_key(wp: &WeightedPoint) -> Vec<u64> {
    let mut key: Vec<u64> = wp.point.to_cartesian().iter().map(|x| x.to_bits()).collect();
    key.push(wp.h.to_bits());
    key
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DiscretizationParams {
    pub resolution: f64,
    pub k_min: i32,
    pub k_max: i32,
    pub point_cap: usize,
    /// Lattice jitter as a fraction of the spacing; 0 disables it.
    pub jitter: f64,
    pub seed: u64,
}

impl DiscretizationParams {
    pub fn new(resolution: f64, k_min: i32, k_max: i32) -> Result<Self> {
        if !(resolution > 0.0 && resolution < 1.0) {
            return Err(Error::domain(format!("resolution must lie in (0,1), got {resolution}")));
        }
        if k_min > k_max {
            return Err(Error::domain("k_min must not exceed k_max"));
        }
        Ok(DiscretizationParams { resolution, k_min, k_max, point_cap: 4096, jitter: 0.0, seed: 0 })
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.point_cap = cap.max(1);
        self
    }
}

fn primitive_scale(prim: &Primitive) -> f64 {
    match prim {
        Primitive::Ball { radius, .. } => 2.0 * radius,
        Primitive::AxisBeads { radius, .. } => 2.0 * radius,
        Primitive::ShellSector { .. } => f64::INFINITY,
        Primitive::ExplicitPoints { .. } => f64::INFINITY,
        Primitive::TangentialCusp { extent, .. } => 2.0 * extent,
        Primitive::BoundaryCone { extent, .. } => 2.0 * extent,
    }
}

/// Cartesian bounding box of primitive-and-block, or None when disjoint.
fn primitive_box(
    prim: &Primitive,
    domain: &DomainSpec,
    n: usize,
    r_hi: f64,
) -> Option<(Vec<f64>, Vec<f64>)> {
    let shell_lo = vec![-r_hi; n];
    let shell_hi = vec![r_hi; n];
    let around = |c: &[f64], rad: f64| -> (Vec<f64>, Vec<f64>) {
        (c.iter().map(|x| x - rad).collect(), c.iter().map(|x| x + rad).collect())
    };
    let clip = |(lo, hi): (Vec<f64>, Vec<f64>)| -> Option<(Vec<f64>, Vec<f64>)> {
        let lo: Vec<f64> = lo.iter().zip(shell_lo.iter()).map(|(a, b)| a.max(*b)).collect();
        let hi: Vec<f64> = hi.iter().zip(shell_hi.iter()).map(|(a, b)| a.min(*b)).collect();
        if lo.iter().zip(hi.iter()).any(|(a, b)| a > b) {
            None
        } else {
            Some((lo, hi))
        }
    };
    match prim {
        Primitive::Ball { center, radius } => clip(around(&center.to_cartesian(), *radius)),
        Primitive::ShellSector { .. } => Some((shell_lo, shell_hi)),
        Primitive::AxisBeads { radius, k_lo, k_hi } => {
            let axis = domain.axis_theta();
            let mut lo: Option<Vec<f64>> = None;
            let mut hi: Option<Vec<f64>> = None;
            for k in *k_lo..=*k_hi {
                let c = Point::new(pow2(k), axis.clone()).unwrap().to_cartesian();
                let (bl, bh) = around(&c, *radius);
                lo = Some(match lo {
                    None => bl,
                    Some(prev) => prev.iter().zip(bl.iter()).map(|(a, b)| a.min(*b)).collect(),
                });
                hi = Some(match hi {
                    None => bh,
                    Some(prev) => prev.iter().zip(bh.iter()).map(|(a, b)| a.max(*b)).collect(),
                });
            }
            clip((lo?, hi?))
        }
        Primitive::ExplicitPoints { .. } => None,
        Primitive::TangentialCusp { apex, extent, .. }
        | Primitive::BoundaryCone { apex, extent, .. } => {
            clip(around(&apex.to_cartesian(), *extent))
        }
    }
}

/// Discretize a set into per-block weighted clouds. Points exactly on the
/// lateral boundary carry no capacity and are discarded with the rest of
/// the exterior.
pub fn discretize(
    spec: &SetSpec,
    eigen: &SphericalEigen,
    params: &DiscretizationParams,
) -> Result<BlockDecomposition> {
    let domain = &eigen.domain;
    let n = domain.n as usize;
    let n_blocks = (params.k_max - params.k_min + 1) as usize;
    let mut blocks: Vec<Vec<WeightedPoint>> = vec![Vec::new(); n_blocks];
    let mut coarsened = Vec::new();
    let mut produced = vec![false; spec.shapes.len()];

    for kb in 0..n_blocks {
        let k = params.k_min + kb as i32;
        let r_lo = pow2(k);
        let r_hi = pow2(k + 1);
        let mut multiplier = 1.0;
        let cloud = loop {
            let mut seen: BTreeSet<Vec<u64>> = BTreeSet::new();
            let mut cloud: Vec<WeightedPoint> = Vec::new();
            let mut overflow = false;

            for (pi, prim) in spec.shapes.iter().enumerate() {
                if let Primitive::ExplicitPoints { points } = prim {
                    for (q, h) in points {
                        if q.r >= r_lo && q.r < r_hi && eigen.is_interior(&q.theta) {
                            let wp = WeightedPoint { point: q.clone(), h: *h };
                            if seen.insert(point_key(&wp)) {
                                cloud.push(wp);
                                produced[pi] = true;
                            }
                        }
                    }
                    continue;
                }
                let base = params.resolution * pow2(k).min(primitive_scale(prim));
                let mut delta = base * multiplier;
                let bbox = match primitive_box(prim, domain, n, r_hi) {
                    Some(b) => b,
                    None => continue,
                };
                // guard against runaway lattice enumeration
                loop {
                    let est: f64 = bbox
                        .0
                        .iter()
                        .zip(bbox.1.iter())
                        .map(|(lo, hi)| ((hi - lo) / delta + 2.0).max(1.0))
                        .product();
                    if est < 2e7 {
                        break;
                    }
                    delta *= 2.0;
                }
                let mut rng = if params.jitter > 0.0 {
                    Some(ChaCha8Rng::seed_from_u64(params.seed ^ ((k as u64) << 32) ^ pi as u64))
                } else {
                    None
                };
                lattice_scan(&bbox.0, &bbox.1, delta, &mut |x: &[f64]| {
                    if overflow {
                        return;
                    }
                    let mut node = x.to_vec();
                    if let Some(rng) = rng.as_mut() {
                        for c in node.iter_mut() {
                            *c += delta * params.jitter * (rng.gen_range(-0.5..0.5));
                        }
                    }
                    let r = node.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if r < r_lo || r >= r_hi || r == 0.0 {
                        return;
                    }
                    let p = match Point::from_cartesian(&node) {
                        Ok(p) => p,
                        Err(_) => return,
                    };
                    if !eigen.is_interior(&p.theta) {
                        return;
                    }
                    if !primitive_contains(prim, domain, &p, &node) {
                        return;
                    }
                    let wp = WeightedPoint { point: p, h: delta };
                    if seen.insert(point_key(&wp)) {
                        cloud.push(wp);
                        produced[pi] = true;
                        if cloud.len() > params.point_cap {
                            overflow = true;
                        }
                    }
                });
                if overflow {
                    break;
                }
            }

            if !overflow {
                break cloud;
            }
            multiplier *= 2.0;
            if multiplier > 256.0 {
                // cap unreachable by coarsening (explicit points dominate);
                // keep the first point_cap in deterministic order
                let mut cloud = cloud;
                cloud.sort_by(|a, b| point_key(a).cmp(&point_key(b)));
                cloud.truncate(params.point_cap);
                break cloud;
            }
        };
        if multiplier > 1.0 {
            coarsened.push(k);
        }
        let mut cloud = cloud;
        cloud.sort_by(|a, b| point_key(a).cmp(&point_key(b)));
        blocks[kb] = cloud;
    }

    let skipped = spec
        .shapes
        .iter()
        .enumerate()
        .filter(|(i, _)| !produced[*i])
        .map(|(i, p)| format!("primitive {i} ({}) produced no points", primitive_name(p)))
        .collect();

    Ok(BlockDecomposition {
        name: spec.name.clone(),
        k_min: params.k_min,
        k_max: params.k_max,
        resolution: params.resolution,
        blocks,
        coarsened_blocks: coarsened,
        skipped_primitives: skipped,
    })
}

fn primitive_name(p: &Primitive) -> &'static str {
    match p {
        Primitive::Ball { .. } => "ball",
        Primitive::ShellSector { .. } => "shell_sector",
        Primitive::AxisBeads { .. } => "axis_beads",
        Primitive::ExplicitPoints { .. } => "explicit_points",
        Primitive::TangentialCusp { .. } => "tangential_cusp",
        Primitive::BoundaryCone { .. } => "boundary_cone",
    }
}

fn lattice_scan(lo: &[f64], hi: &[f64], delta: f64, f: &mut dyn FnMut(&[f64])) {
    let n = lo.len();
    let m_lo: Vec<i64> = lo.iter().map(|v| (v / delta - 0.5).floor() as i64).collect();
    let m_hi: Vec<i64> = hi.iter().map(|v| (v / delta - 0.5).ceil() as i64).collect();
    if m_lo.iter().zip(m_hi.iter()).any(|(a, b)| a > b) {
        return;
    }
    let mut idx = m_lo.clone();
    let mut x = vec![0.0; n];
    'outer: loop {
        for d in 0..n {
            x[d] = (idx[d] as f64 + 0.5) * delta;
        }
        f(&x);
        for d in 0..n {
            idx[d] += 1;
            if idx[d] <= m_hi[d] {
                continue 'outer;
            }
            idx[d] = m_lo[d];
        }
        break;
    }
}

/// True when every point keeps angular distance from the lateral boundary:
/// phi(Theta) >= margin * sup phi.
pub fn in_subcone(decomp: &BlockDecomposition, margin: f64, eigen: &SphericalEigen) -> bool {
    let floor = margin * eigen.j_omega;
    decomp
        .iter_blocks()
        .flat_map(|(_, c)| c.iter())
        .all(|wp| eigen.phi(&wp.point.theta).map(|v| v >= floor).unwrap_or(false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spherical::solve_eigen;

    fn half_eigen() -> SphericalEigen {
        solve_eigen(&DomainSpec::new(3, Shape::HalfSphere).unwrap(), 1e-12).unwrap()
    }

    fn axis(r: f64) -> Point {
        Point::new(r, vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn block_index_examples() {
        assert_eq!(block_index(&axis(4.0)), 2);
        assert_eq!(block_index(&axis(1.0)), 0);
        assert_eq!(block_index(&axis(0.3)), -2);
    }

    #[test]
    fn contained_ball_lands_in_single_block() {
        // radii of the ball span [4.5, 5.5], entirely inside block 2
        let spec = SetSpec::new("ball", vec![Primitive::Ball { center: axis(5.0), radius: 0.5 }]);
        let params = DiscretizationParams::new(0.125, 0, 5).unwrap();
        let d = discretize(&spec, &half_eigen(), &params).unwrap();
        assert!(!d.block(2).is_empty());
        for (k, cloud) in d.iter_blocks() {
            if k != 2 {
                assert!(cloud.is_empty(), "unexpected points in block {k}");
            }
            for wp in cloud {
                assert!(wp.point.r >= 4.0 && wp.point.r < 8.0);
                assert!(wp.h <= 0.125 * 4.0 + 1e-12);
            }
        }
    }

    #[test]
    fn straddling_ball_splits_by_radius() {
        // a ball touching r = 4 from around has points on both sides
        let spec = SetSpec::new("ball", vec![Primitive::Ball { center: axis(4.0), radius: 0.5 }]);
        let params = DiscretizationParams::new(0.125, 0, 5).unwrap();
        let d = discretize(&spec, &half_eigen(), &params).unwrap();
        assert!(!d.block(1).is_empty());
        assert!(!d.block(2).is_empty());
        for (k, cloud) in d.iter_blocks() {
            for wp in cloud {
                assert_eq!(block_index(&wp.point), k);
            }
        }
    }

    #[test]
    fn empty_spec_gives_empty_blocks() {
        let d = discretize(
            &SetSpec::empty("nothing"),
            &half_eigen(),
            &DiscretizationParams::new(0.125, 0, 8).unwrap(),
        )
        .unwrap();
        assert!(d.is_empty());
        assert_eq!(d.block(3).len(), 0);
    }

    #[test]
    fn shell_count_matches_volume_estimate() {
        let spec = SetSpec::new(
            "shell3",
            vec![Primitive::ShellSector { k_lo: 3, k_hi: 3, alpha_sub: 10.0 }],
        );
        let params = DiscretizationParams::new(0.25, 3, 3).unwrap().with_cap(100_000);
        let d = discretize(&spec, &half_eigen(), &params).unwrap();
        let delta: f64 = 0.25 * 8.0;
        let volume = (2.0 * std::f64::consts::PI / 3.0) * (16.0_f64.powi(3) - 8.0_f64.powi(3));
        let estimate = volume / delta.powi(3);
        let count = d.block(3).len() as f64;
        assert!((count - estimate).abs() <= 0.2 * estimate, "count {count} vs estimate {estimate}");
    }

    #[test]
    fn beads_sit_on_axis_and_in_subcone() {
        let spec =
            SetSpec::new("beads", vec![Primitive::AxisBeads { radius: 1.0, k_lo: 0, k_hi: 8 }]);
        let eigen = half_eigen();
        let params = DiscretizationParams::new(0.125, 0, 8).unwrap();
        let d = discretize(&spec, &eigen, &params).unwrap();
        assert!(d.total_points() > 100);
        assert!(in_subcone(&d, 0.5, &eigen));
    }

    #[test]
    fn full_shells_leave_subcone() {
        let spec = SetSpec::new(
            "full",
            vec![Primitive::ShellSector { k_lo: 0, k_hi: 3, alpha_sub: 10.0 }],
        );
        let eigen = half_eigen();
        let d =
            discretize(&spec, &eigen, &DiscretizationParams::new(0.125, 0, 3).unwrap()).unwrap();
        assert!(!in_subcone(&d, 0.5, &eigen));
        // empty decomposition is vacuously inside
        let e =
            discretize(&SetSpec::empty("e"), &eigen, &DiscretizationParams::new(0.5, 0, 1).unwrap())
                .unwrap();
        assert!(in_subcone(&e, 0.9, &eigen));
    }

    #[test]
    fn discretize_is_deterministic() {
        let spec = SetSpec::new(
            "mix",
            vec![
                Primitive::Ball { center: axis(3.0), radius: 1.0 },
                Primitive::AxisBeads { radius: 0.5, k_lo: 1, k_hi: 4 },
            ],
        );
        let eigen = half_eigen();
        let params = DiscretizationParams::new(0.2, 0, 5).unwrap();
        let a = discretize(&spec, &eigen, &params).unwrap();
        let b = discretize(&spec, &eigen, &params).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn nested_specs_give_nested_clouds() {
        let small = SetSpec::new("a", vec![Primitive::Ball { center: axis(4.0), radius: 0.5 }]);
        let big = SetSpec::new(
            "b",
            vec![
                Primitive::Ball { center: axis(4.0), radius: 0.5 },
                Primitive::Ball { center: axis(2.0), radius: 0.4 },
            ],
        );
        let eigen = half_eigen();
        let params = DiscretizationParams::new(0.125, 0, 4).unwrap();
        let da = discretize(&small, &eigen, &params).unwrap();
        let db = discretize(&big, &eigen, &params).unwrap();
        assert!(da.is_subset_of(&db));
        assert!(!db.is_subset_of(&da));
    }

    #[test]
    fn refining_resolution_grows_clouds() {
        let spec = SetSpec::new("ball", vec![Primitive::Ball { center: axis(4.0), radius: 1.0 }]);
        let eigen = half_eigen();
        let coarse =
            discretize(&spec, &eigen, &DiscretizationParams::new(0.25, 2, 2).unwrap()).unwrap();
        let fine =
            discretize(&spec, &eigen, &DiscretizationParams::new(0.125, 2, 2).unwrap()).unwrap();
        assert!(fine.total_points() >= 2 * coarse.total_points());
    }

    #[test]
    fn exterior_primitive_skipped_with_warning() {
        // center below the boundary plane: intersects nothing of the cone
        let below = Point::new(2.0, vec![2.8, 0.0]).unwrap();
        let spec = SetSpec::new("out", vec![Primitive::Ball { center: below, radius: 0.2 }]);
        let d = discretize(
            &spec,
            &half_eigen(),
            &DiscretizationParams::new(0.125, 0, 3).unwrap(),
        )
        .unwrap();
        assert!(d.is_empty());
        assert_eq!(d.skipped_primitives.len(), 1);
    }

    #[test]
    fn cap_triggers_coarsening_flag() {
        let spec = SetSpec::new(
            "full",
            vec![Primitive::ShellSector { k_lo: 2, k_hi: 2, alpha_sub: 10.0 }],
        );
        let params = DiscretizationParams::new(0.05, 2, 2).unwrap().with_cap(400);
        let d = discretize(&spec, &half_eigen(), &params).unwrap();
        assert!(d.block(2).len() <= 400);
        assert_eq!(d.coarsened_blocks, vec![2]);
    }

    #[test]
    fn boundary_band_points_are_discarded() {
        let spec = SetSpec::new(
            "shell",
            vec![Primitive::ShellSector { k_lo: 1, k_hi: 1, alpha_sub: 10.0 }],
        );
        let eigen = half_eigen();
        let d = discretize(&spec, &eigen, &DiscretizationParams::new(0.2, 1, 1).unwrap()).unwrap();
        for wp in d.block(1) {
            assert!(eigen.phi(&wp.point.theta).unwrap() > 0.0);
        }
    }

    #[test]
    fn csv_round_trips_block_and_weight() {
        let spec = SetSpec::new("ball", vec![Primitive::Ball { center: axis(2.0), radius: 0.3 }]);
        let d = discretize(
            &spec,
            &half_eigen(),
            &DiscretizationParams::new(0.2, 1, 1).unwrap(),
        )
        .unwrap();
        let csv = d.to_csv();
        assert!(csv.starts_with("k,r,theta1,theta2,h\n"));
        assert_eq!(csv.lines().count(), 1 + d.total_points());
    }
}
