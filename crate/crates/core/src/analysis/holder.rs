//! Sampled Hölder quotients of gradients, within and across subdomains.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::manufactured::ExactSolution;
use crate::fem::DiscreteField;
use crate::geometry::Point;
use crate::math::{cos, exp, ln, powf, sin, sqrt, TAU};
use crate::mesh::{PointLocator, TriMesh};

/// Two element centroids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePair {
    pub x: Point,
    pub y: Point,
    pub tri_x: usize,
    pub tri_y: usize,
    pub tag_x: usize,
    pub tag_y: usize,
}

impl SamplePair {
    pub fn distance(&self) -> f64 {
        self.x.dist(self.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSampling {
    pub rho: f64,
    pub same: Vec<SamplePair>,
    pub cross: Vec<SamplePair>,
}

/// Draws up to `count` same-subdomain and `count` cross-interface pairs
/// of element centroids with `|x - y| ∈ [ρ, diam/2]`. The first point is
/// area-uniform; the distance is log-uniform so that every scale down to
/// `ρ` is represented.
pub fn sample_pairs(mesh: &TriMesh, rho: f64, count: usize, seed: u64) -> PairSampling {
    let mut out = PairSampling { rho, same: Vec::new(), cross: Vec::new() };
    if mesh.triangles.is_empty() {
        return out;
    }
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &mesh.nodes {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let dmax = 0.5 * lo.dist(hi);
    if !(rho < dmax) {
        return out;
    }
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut acc = 0.0;
    for t in 0..mesh.triangles.len() {
        acc += mesh.area(t);
        cumulative.push(acc);
    }
    let locator = PointLocator::new(mesh);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lr, lm) = (ln(rho), ln(dmax));
    let budget = 200 * count.max(1);
    for _ in 0..budget {
        if out.same.len() >= count && (out.cross.len() >= count || mesh.subdomains < 2) {
            break;
        }
        let u: f64 = rng.random::<f64>() * acc;
        let tx = cumulative.partition_point(|&c| c < u).min(mesh.triangles.len() - 1);
        let d = exp(lr + (lm - lr) * rng.random::<f64>());
        let phi = TAU * rng.random::<f64>();
        let x = mesh.centroid(tx);
        let Some((ty, _)) = locator.locate(mesh, x + Point::new(cos(phi), sin(phi)) * d) else {
            continue;
        };
        let y = mesh.centroid(ty);
        let dist = x.dist(y);
        if dist < rho || dist > dmax {
            continue;
        }
        let pair = SamplePair {
            x,
            y,
            tri_x: tx,
            tri_y: ty,
            tag_x: mesh.triangles[tx].tag,
            tag_y: mesh.triangles[ty].tag,
        };
        if pair.tag_x == pair.tag_y {
            if out.same.len() < count {
                out.same.push(pair);
            }
        } else if out.cross.len() < count {
            out.cross.push(pair);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderEstimate {
    /// `sup |G(x) - G(y)| / |x - y|^α` over same-subdomain pairs, index `tag - 1`.
    pub per_subdomain: Vec<f64>,
    /// The same supremum over pairs in different subdomains.
    pub cross: f64,
    pub same_pairs: usize,
    pub cross_pairs: usize,
}

impl HolderEstimate {
    pub fn max_within(&self) -> f64 {
        self.per_subdomain.iter().fold(0.0, |m, v| m.max(*v))
    }
}

/// Quotients over a fixed pair set; `grad(tri, tag, p, out)` writes `width` values.
pub fn holder_over_pairs<G>(pairs: &PairSampling, subdomains: usize, alpha: f64, width: usize, mut grad: G) -> HolderEstimate
where
    G: FnMut(usize, usize, Point, &mut [f64]),
{
    let mut gx = vec![0.0; width];
    let mut gy = vec![0.0; width];
    let mut quotient = |p: &SamplePair| {
        grad(p.tri_x, p.tag_x, p.x, &mut gx);
        grad(p.tri_y, p.tag_y, p.y, &mut gy);
        let diff = sqrt(gx.iter().zip(&gy).map(|(a, b)| (a - b) * (a - b)).sum());
        diff / powf(p.distance(), alpha)
    };
    let mut per_subdomain = vec![0.0f64; subdomains];
    for p in &pairs.same {
        let q = quotient(p);
        per_subdomain[p.tag_x - 1] = per_subdomain[p.tag_x - 1].max(q);
    }
    let cross = pairs.cross.iter().map(&mut quotient).fold(0.0, f64::max);
    HolderEstimate { per_subdomain, cross, same_pairs: pairs.same.len(), cross_pairs: pairs.cross.len() }
}

/// Gradient quotients of a discrete field at element centroids.
pub fn holder_seminorm(field: &DiscreteField, pairs: &PairSampling, alpha: f64) -> HolderEstimate {
    let n = field.components;
    holder_over_pairs(pairs, field.space.mesh.subdomains, alpha, 2 * n, |t, _, _, out| {
        field.gradient_in(t, [1.0 / 3.0; 3], out)
    })
}

/// Gradient quotients of an exact solution on the same pairs.
pub fn holder_exact<E: ExactSolution + ?Sized>(exact: &E, pairs: &PairSampling, subdomains: usize, alpha: f64) -> HolderEstimate {
    let n = exact.components();
    let mut v = vec![0.0; n];
    holder_over_pairs(pairs, subdomains, alpha, 2 * n, |_, tag, p, out| exact.eval(tag, p, &mut v, out))
}
