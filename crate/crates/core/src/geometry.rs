//! Outer domain, inclusions and parametric interface curves.
//!
//! Every closed curve is parametrised counter-clockwise by an angle-like
//! parameter `t ∈ [0, 2π)`. Arclength is tabulated once at construction so
//! that arclength-uniform sampling and `s → t` inversion are cheap. Normals
//! always point INTO the region the curve encloses.
//!
//! Subdomains are numbered from 1: inclusion `i` (0-based position in
//! [`DomainPartition::inclusions`]) is subdomain `i + 1`, and the region
//! adjacent to the outer boundary is subdomain `M = inclusions + 1`.

use alloc::format;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math::{atan2, cos, floor, powf, sin, sqrt, wrap, TAU};
use crate::quadrature::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Point {
        Point { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        sqrt(self.dot(self))
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    /// Rotation by +90 degrees.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Point {
        let n = self.norm();
        Point::new(self.x / n, self.y / n)
    }

    pub fn midpoint(self, o: Point) -> Point {
        Point::new(0.5 * (self.x + o.x), 0.5 * (self.y + o.y))
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Shape of a closed parametric curve around its center.
#[derive(Debug, Clone, PartialEq)]
pub enum CurveShape {
    Circle { radius: f64 },
    Ellipse { semi_x: f64, semi_y: f64 },
    /// `r(t) = R + Σ a_k |sin(k t / 2)|^{1+α}`: the tangent is α-Hölder but
    /// not Lipschitz at the zeros of each sine.
    PerturbedCircle { base_radius: f64, modes: Vec<(u32, f64)>, exponent: f64 },
}

const ARCLENGTH_PANELS: usize = 4096;

#[derive(Debug, Clone)]
pub struct InterfaceCurve {
    center: Point,
    shape: CurveShape,
    /// Cumulative arclength at `t_i = i · 2π / ARCLENGTH_PANELS`.
    arclength: Vec<f64>,
}

impl PartialEq for InterfaceCurve {
    fn eq(&self, other: &Self) -> bool {
        self.center == other.center && self.shape == other.shape
    }
}

impl InterfaceCurve {
    pub fn circle(center: Point, radius: f64) -> Result<InterfaceCurve> {
        InterfaceCurve::new(center, CurveShape::Circle { radius })
    }

    pub fn ellipse(center: Point, semi_x: f64, semi_y: f64) -> Result<InterfaceCurve> {
        InterfaceCurve::new(center, CurveShape::Ellipse { semi_x, semi_y })
    }

    pub fn perturbed_circle(
        center: Point,
        base_radius: f64,
        modes: Vec<(u32, f64)>,
        exponent: f64,
    ) -> Result<InterfaceCurve> {
        InterfaceCurve::new(center, CurveShape::PerturbedCircle { base_radius, modes, exponent })
    }

    pub fn new(center: Point, shape: CurveShape) -> Result<InterfaceCurve> {
        match &shape {
            CurveShape::Circle { radius } if *radius > 0.0 => {}
            CurveShape::Ellipse { semi_x, semi_y } if *semi_x > 0.0 && *semi_y > 0.0 => {}
            CurveShape::PerturbedCircle { base_radius, modes, exponent } => {
                if !(*exponent > 0.0 && *exponent <= 1.0) {
                    return Err(Error::InvalidGeometry(format!(
                        "perturbation exponent {exponent} outside (0, 1]"
                    )));
                }
                let negative: f64 = modes.iter().map(|&(_, a)| a.min(0.0)).sum();
                if *base_radius + negative <= 0.0 {
                    return Err(Error::InvalidGeometry(
                        "perturbed radius is not strictly positive".into(),
                    ));
                }
                if modes.iter().any(|&(k, _)| k == 0) {
                    return Err(Error::InvalidGeometry("perturbation frequency 0".into()));
                }
            }
            other => {
                return Err(Error::InvalidGeometry(format!("non-positive size in {other:?}")));
            }
        }
        let mut curve = InterfaceCurve { center, shape, arclength: Vec::new() };
        curve.tabulate_arclength();
        Ok(curve)
    }

    fn tabulate_arclength(&mut self) {
        let (gx, gw) = gauss_legendre(6);
        let dt = TAU / ARCLENGTH_PANELS as f64;
        let mut table = Vec::with_capacity(ARCLENGTH_PANELS + 1);
        let mut acc = 0.0;
        table.push(0.0);
        for i in 0..ARCLENGTH_PANELS {
            let t0 = i as f64 * dt;
            let panel: f64 = gx
                .iter()
                .zip(&gw)
                .map(|(x, w)| w * self.speed(t0 + 0.5 * dt * (x + 1.0)))
                .sum();
            acc += 0.5 * dt * panel;
            table.push(acc);
        }
        self.arclength = table;
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn shape(&self) -> &CurveShape {
        &self.shape
    }

    /// Hölder exponent of the unit tangent (1 for smooth shapes).
    pub fn holder_exponent(&self) -> f64 {
        match &self.shape {
            CurveShape::PerturbedCircle { exponent, .. } => *exponent,
            _ => 1.0,
        }
    }

    fn polar_radius(&self, t: f64) -> (f64, f64) {
        match &self.shape {
            CurveShape::Circle { radius } => (*radius, 0.0),
            CurveShape::PerturbedCircle { base_radius, modes, exponent } => {
                let mut r = *base_radius;
                let mut dr = 0.0;
                for &(k, a) in modes {
                    let k = k as f64;
                    let s = sin(0.5 * k * t);
                    let c = cos(0.5 * k * t);
                    let mag = s.abs();
                    r += a * powf(mag, 1.0 + exponent);
                    if mag > 0.0 {
                        dr += a * (1.0 + exponent) * powf(mag, *exponent) * s.signum() * c * 0.5 * k;
                    }
                }
                (r, dr)
            }
            CurveShape::Ellipse { .. } => unreachable!("ellipse is not polar"),
        }
    }

    /// Position at parameter `t`.
    pub fn point(&self, t: f64) -> Point {
        match &self.shape {
            CurveShape::Ellipse { semi_x, semi_y } => {
                self.center + Point::new(semi_x * cos(t), semi_y * sin(t))
            }
            _ => {
                let (r, _) = self.polar_radius(t);
                self.center + Point::new(r * cos(t), r * sin(t))
            }
        }
    }

    /// Derivative of [`Self::point`] with respect to `t`.
    pub fn derivative(&self, t: f64) -> Point {
        match &self.shape {
            CurveShape::Ellipse { semi_x, semi_y } => Point::new(-semi_x * sin(t), semi_y * cos(t)),
            _ => {
                let (r, dr) = self.polar_radius(t);
                let (c, s) = (cos(t), sin(t));
                Point::new(dr * c - r * s, dr * s + r * c)
            }
        }
    }

    pub fn speed(&self, t: f64) -> f64 {
        self.derivative(t).norm()
    }

    pub fn tangent(&self, t: f64) -> Point {
        self.derivative(t).normalized()
    }

    /// Unit normal at parameter `t`, pointing into the enclosed region.
    pub fn inward_normal(&self, t: f64) -> Point {
        self.tangent(t).perp()
    }

    pub fn length(&self) -> f64 {
        self.arclength[ARCLENGTH_PANELS]
    }

    /// Arclength from `t = 0` to `t`.
    pub fn arclength_at(&self, t: f64) -> f64 {
        let t = wrap(t, TAU);
        let dt = TAU / ARCLENGTH_PANELS as f64;
        let i = (floor(t / dt) as usize).min(ARCLENGTH_PANELS - 1);
        let t0 = i as f64 * dt;
        self.arclength[i] + self.partial_length(t0, t)
    }

    fn partial_length(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let (gx, gw) = gauss_legendre(6);
        let h = b - a;
        0.5 * h * gx.iter().zip(&gw).map(|(x, w)| w * self.speed(a + 0.5 * h * (x + 1.0))).sum::<f64>()
    }

    /// Parameter at arclength `s` (taken modulo the length).
    pub fn param_at_arclength(&self, s: f64) -> f64 {
        let len = self.length();
        let s = wrap(s, len);
        let i = self.arclength.partition_point(|&v| v <= s).saturating_sub(1).min(ARCLENGTH_PANELS - 1);
        let dt = TAU / ARCLENGTH_PANELS as f64;
        let a = i as f64 * dt;
        let target = s - self.arclength[i];
        let panel = self.arclength[i + 1] - self.arclength[i];
        let (mut lo, mut hi) = (a, a + dt);
        let mut t = a + dt * (target / panel).clamp(0.0, 1.0);
        // Newton inside the bracketing panel with a bisection safeguard.
        for _ in 0..60 {
            let f = self.partial_length(a, t) - target;
            if f.abs() <= 1e-15 * len {
                break;
            }
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let mut next = t - f / self.speed(t);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if next == t {
                break;
            }
            t = next;
        }
        t
    }

    /// Unit normal at arclength `s`, pointing into the enclosed region.
    pub fn normal_at(&self, s: f64) -> Point {
        self.inward_normal(self.param_at_arclength(s))
    }

    /// Tangent at arclength `s`.
    pub fn tangent_at(&self, s: f64) -> Point {
        self.tangent(self.param_at_arclength(s))
    }

    /// `n` parameters at arclength-uniform spacing starting from `t = 0`.
    pub fn uniform_params(&self, n: usize) -> Vec<f64> {
        let len = self.length();
        (0..n).map(|i| if i == 0 { 0.0 } else { self.param_at_arclength(len * i as f64 / n as f64) }).collect()
    }

    /// Composite Gauss–Legendre rule: `panels` uniform panels in the
    /// parameter with `order` nodes each.
    pub fn boundary_quadrature(&self, order: usize, panels: usize) -> Vec<BoundaryNode> {
        let (gx, gw) = gauss_legendre(order.max(1));
        let dt = TAU / panels as f64;
        let mut nodes = Vec::with_capacity(order * panels);
        for p in 0..panels {
            let t0 = p as f64 * dt;
            for (x, w) in gx.iter().zip(&gw) {
                let t = t0 + 0.5 * dt * (x + 1.0);
                nodes.push(BoundaryNode {
                    param: t,
                    point: self.point(t),
                    normal: self.inward_normal(t),
                    weight: 0.5 * dt * w * self.speed(t),
                });
            }
        }
        nodes
    }

    /// Integral of `g` along the curve.
    pub fn integrate<G: Fn(Point, f64) -> f64>(&self, g: G) -> f64 {
        self.boundary_quadrature(8, 512).iter().map(|n| n.weight * g(n.point, n.param)).sum()
    }

    /// Strict interior test.
    pub fn contains(&self, p: Point) -> bool {
        let d = p - self.center;
        match &self.shape {
            CurveShape::Circle { radius } => d.norm() < *radius,
            CurveShape::Ellipse { semi_x, semi_y } => {
                (d.x / semi_x) * (d.x / semi_x) + (d.y / semi_y) * (d.y / semi_y) < 1.0
            }
            CurveShape::PerturbedCircle { .. } => {
                let t = wrap(atan2(d.y, d.x), TAU);
                d.norm() < self.polar_radius(t).0
            }
        }
    }

    /// Euclidean distance from `p` to the curve and the closest parameter.
    pub fn closest(&self, p: Point) -> (f64, f64) {
        let d = p - self.center;
        if let CurveShape::Circle { radius } = self.shape {
            let t = if d.norm() == 0.0 { 0.0 } else { wrap(atan2(d.y, d.x), TAU) };
            return ((d.norm() - radius).abs(), t);
        }
        const SAMPLES: usize = 720;
        let dt = TAU / SAMPLES as f64;
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..SAMPLES {
            let t = i as f64 * dt;
            let dd = self.point(t).dist(p);
            if dd < best.0 {
                best = (dd, t);
            }
        }
        // Golden-section refinement on the bracketing interval.
        let (mut a, mut b) = (best.1 - dt, best.1 + dt);
        let g = 0.5 * (sqrt(5.0) - 1.0);
        let mut c = b - g * (b - a);
        let mut e = a + g * (b - a);
        let mut fc = self.point(c).dist(p);
        let mut fe = self.point(e).dist(p);
        for _ in 0..80 {
            if fc < fe {
                b = e;
                e = c;
                fe = fc;
                c = b - g * (b - a);
                fc = self.point(c).dist(p);
            } else {
                a = c;
                c = e;
                fc = fe;
                e = a + g * (b - a);
                fe = self.point(e).dist(p);
            }
        }
        let t = 0.5 * (a + b);
        let dd = self.point(t).dist(p);
        if dd < best.0 {
            (dd, wrap(t, TAU))
        } else {
            best
        }
    }

    pub fn distance(&self, p: Point) -> f64 {
        self.closest(p).0
    }

    /// Area enclosed, by the shoelace formula on the curve.
    pub fn area(&self) -> f64 {
        match &self.shape {
            CurveShape::Circle { radius } => core::f64::consts::PI * radius * radius,
            CurveShape::Ellipse { semi_x, semi_y } => core::f64::consts::PI * semi_x * semi_y,
            CurveShape::PerturbedCircle { .. } => {
                // ½ ∮ (x dy − y dx) with parameter quadrature.
                let (gx, gw) = gauss_legendre(8);
                let panels = 2048;
                let dt = TAU / panels as f64;
                let mut acc = 0.0;
                for p in 0..panels {
                    for (x, w) in gx.iter().zip(&gw) {
                        let t = (p as f64 + 0.5 * (x + 1.0)) * dt;
                        let q = self.point(t) - self.center;
                        acc += 0.5 * dt * w * 0.5 * q.cross(self.derivative(t));
                    }
                }
                acc
            }
        }
    }

    /// Closed polygon through `n` arclength-uniform points.
    pub fn polygon(&self, n: usize) -> Vec<Point> {
        self.uniform_params(n).into_iter().map(|t| self.point(t)).collect()
    }

    /// Dense pairwise segment test for self-intersection.
    pub fn is_simple(&self, samples: usize) -> bool {
        polygon_is_simple(&self.polygon(samples))
    }

    /// Sampled Hölder quotient `sup |t(s1) − t(s2)| / |s1 − s2|^α` of the
    /// unit tangent over random arclength pairs (periodic distance).
    pub fn tangent_holder_quotient(&self, alpha: f64, pairs: usize, seed: u64) -> f64 {
        let len = self.length();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sup: f64 = 0.0;
        for _ in 0..pairs {
            let s1: f64 = rng.random::<f64>() * len;
            // Log-uniform separation so that small scales are represented.
            let span = powf(10.0, -6.0 * rng.random::<f64>()) * 0.5 * len;
            let s2 = s1 + span;
            let d = span.min(len - span);
            if d <= 0.0 {
                continue;
            }
            let q = (self.tangent_at(s1) - self.tangent_at(s2)).norm() / powf(d, alpha);
            sup = sup.max(q);
        }
        sup
    }
}

/// One node of a boundary quadrature rule.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryNode {
    pub param: f64,
    pub point: Point,
    /// Normal pointing into the enclosed region.
    pub normal: Point,
    pub weight: f64,
}

pub(crate) fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = (b - a).cross(c - a);
    let o2 = (b - a).cross(d - a);
    let o3 = (d - c).cross(a - c);
    let o4 = (d - c).cross(b - c);
    (o1 > 0.0) != (o2 > 0.0) && (o3 > 0.0) != (o4 > 0.0) && o1 != 0.0 && o2 != 0.0
}

pub(crate) fn polygon_is_simple(poly: &[Point]) -> bool {
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

pub(crate) fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// Even-odd point-in-polygon test.
pub(crate) fn polygon_contains(poly: &[Point], p: Point) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Winding number of a closed polygon around `p`.
pub fn winding_number(poly: &[Point], p: Point) -> i32 {
    let n = poly.len();
    let mut wn = 0;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let side = (b - a).cross(p - a);
        if a.y <= p.y {
            if b.y > p.y && side > 0.0 {
                wn += 1;
            }
        } else if b.y <= p.y && side < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// Outer boundary of the computational domain.
#[derive(Debug, Clone, PartialEq)]
pub enum OuterBoundary {
    Curve(InterfaceCurve),
    Box { min: Point, max: Point },
}

impl OuterBoundary {
    pub fn contains(&self, p: Point) -> bool {
        match self {
            OuterBoundary::Curve(c) => c.contains(p),
            OuterBoundary::Box { min, max } => {
                p.x > min.x && p.x < max.x && p.y > min.y && p.y < max.y
            }
        }
    }

    pub fn distance(&self, p: Point) -> f64 {
        match self {
            OuterBoundary::Curve(c) => c.distance(p),
            OuterBoundary::Box { min, max } => {
                let corners = self.corners();
                let mut d = f64::INFINITY;
                for i in 0..4 {
                    d = d.min(point_segment_distance(p, corners[i], corners[(i + 1) % 4]));
                }
                let _ = (min, max);
                d
            }
        }
    }

    fn corners(&self) -> [Point; 4] {
        match self {
            OuterBoundary::Box { min, max } => {
                [*min, Point::new(max.x, min.y), *max, Point::new(min.x, max.y)]
            }
            OuterBoundary::Curve(_) => unreachable!(),
        }
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        match self {
            OuterBoundary::Box { min, max } => (*min, *max),
            OuterBoundary::Curve(c) => {
                let poly = c.polygon(1024);
                let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
                let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
                for p in poly {
                    lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
                    hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
                }
                // Chords cut corners of convex arcs; pad slightly.
                let pad = 1e-3 * (hi - lo).norm();
                (lo - Point::new(pad, pad), hi + Point::new(pad, pad))
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    pub fn area(&self) -> f64 {
        match self {
            OuterBoundary::Box { min, max } => (max.x - min.x) * (max.y - min.y),
            OuterBoundary::Curve(c) => c.area(),
        }
    }

    /// Closed polygon approximating the boundary with about `n` vertices.
    pub fn polygon(&self, n: usize) -> Vec<Point> {
        match self {
            OuterBoundary::Curve(c) => c.polygon(n),
            OuterBoundary::Box { .. } => {
                let corners = self.corners();
                let per = (n / 4).max(1);
                let mut out = Vec::with_capacity(4 * per);
                for i in 0..4 {
                    let (a, b) = (corners[i], corners[(i + 1) % 4]);
                    for k in 0..per {
                        out.push(a + (b - a) * (k as f64 / per as f64));
                    }
                }
                out
            }
        }
    }
}

/// Result of [`DomainPartition::classify_point`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    /// 1-based subdomain index.
    Subdomain(usize),
    /// Point lies within the tolerance band of inclusion curve `i` (0-based).
    Interface(usize),
}

/// Outer domain together with its disjoint or nested inclusions.
#[derive(Debug, Clone)]
pub struct DomainPartition {
    pub outer: OuterBoundary,
    pub inclusions: Vec<InterfaceCurve>,
    /// Index of the enclosing inclusion, `None` when directly inside the
    /// outermost subdomain.
    pub parent: Vec<Option<usize>>,
    pub tol_geom: f64,
}

const VALIDATION_SAMPLES: usize = 2048;

impl DomainPartition {
    /// Validates the geometry and infers the containment tree.
    pub fn new(outer: OuterBoundary, inclusions: Vec<InterfaceCurve>) -> Result<DomainPartition> {
        if let OuterBoundary::Box { min, max } = &outer {
            if !(max.x > min.x && max.y > min.y) {
                return Err(Error::InvalidGeometry("degenerate box".into()));
            }
        }
        let polys: Vec<Vec<Point>> = inclusions.iter().map(|c| c.polygon(VALIDATION_SAMPLES)).collect();
        for (i, poly) in polys.iter().enumerate() {
            if !polygon_is_simple(poly) {
                return Err(Error::InvalidGeometry(format!("inclusion {} is not simple", i + 1)));
            }
            if !poly.iter().all(|&p| outer.contains(p)) {
                return Err(Error::InvalidGeometry(format!(
                    "inclusion {} is not strictly inside the outer boundary",
                    i + 1
                )));
            }
        }
        if let OuterBoundary::Curve(c) = &outer {
            if !c.is_simple(VALIDATION_SAMPLES) {
                return Err(Error::InvalidGeometry("outer curve is not simple".into()));
            }
        }
        // inside[i][j]: curve i lies inside curve j.
        let n = inclusions.len();
        let mut inside = alloc::vec![alloc::vec![false; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let count = polys[i].iter().filter(|&&p| inclusions[j].contains(p)).count();
                if count != 0 && count != polys[i].len() {
                    return Err(Error::InvalidGeometry(format!(
                        "inclusions {} and {} intersect",
                        i + 1,
                        j + 1
                    )));
                }
                inside[i][j] = count == polys[i].len();
            }
        }
        let mut parent = Vec::with_capacity(n);
        for i in 0..n {
            let mut best: Option<usize> = None;
            for j in 0..n {
                if inside[i][j] {
                    best = match best {
                        Some(b) if inside[b][j] => Some(b),
                        _ => Some(j),
                    };
                }
            }
            parent.push(best);
        }
        let tol_geom = 1e-10 * outer.diameter();
        let partition = DomainPartition { outer, inclusions, parent, tol_geom };
        if n > 0 && !(partition.min_separation() > 0.0) {
            return Err(Error::InvalidGeometry("curves touch".into()));
        }
        Ok(partition)
    }

    /// Number of subdomains `M`.
    pub fn subdomain_count(&self) -> usize {
        self.inclusions.len() + 1
    }

    /// Subdomain enclosed by inclusion `i` (0-based).
    pub fn inclusion_subdomain(&self, i: usize) -> usize {
        i + 1
    }

    /// Subdomain directly outside inclusion `i`.
    pub fn outer_neighbour(&self, i: usize) -> usize {
        match self.parent[i] {
            Some(p) => p + 1,
            None => self.subdomain_count(),
        }
    }

    pub fn with_tolerance(mut self, tol_geom: f64) -> Self {
        self.tol_geom = tol_geom;
        self
    }

    /// Subdomain of a point strictly away from every interface, using the
    /// exact curves.
    pub fn subdomain_of(&self, p: Point) -> usize {
        let mut best: Option<usize> = None;
        for (i, c) in self.inclusions.iter().enumerate() {
            if c.contains(p) {
                best = match best {
                    Some(b) if self.is_ancestor(i, b) => Some(b),
                    _ => Some(i),
                };
            }
        }
        best.map_or(self.subdomain_count(), |i| i + 1)
    }

    /// Whether inclusion `a` encloses inclusion `b`.
    pub fn is_ancestor(&self, a: usize, b: usize) -> bool {
        let mut cur = self.parent[b];
        while let Some(c) = cur {
            if c == a {
                return true;
            }
            cur = self.parent[c];
        }
        false
    }

    pub fn classify_point(&self, p: Point) -> Result<Location> {
        if !self.outer.contains(p) && self.outer.distance(p) > self.tol_geom {
            return Err(Error::OutsideDomain { x: p.x, y: p.y });
        }
        for (i, c) in self.inclusions.iter().enumerate() {
            if c.distance(p) < self.tol_geom {
                return Ok(Location::Interface(i));
            }
        }
        Ok(Location::Subdomain(self.subdomain_of(p)))
    }

    /// Smallest sampled distance between any two curves (outer included).
    pub fn min_separation(&self) -> f64 {
        const SAMPLES: usize = 1024;
        let mut polys: Vec<Vec<Point>> = self.inclusions.iter().map(|c| c.polygon(SAMPLES)).collect();
        polys.push(self.outer.polygon(SAMPLES));
        let mut best = f64::INFINITY;
        for i in 0..polys.len() {
            for j in (i + 1)..polys.len() {
                for &p in &polys[i] {
                    let q = &polys[j];
                    for k in 0..q.len() {
                        best = best.min(point_segment_distance(p, q[k], q[(k + 1) % q.len()]));
                    }
                }
            }
        }
        best
    }

    /// Area of subdomain `j` (1-based) from the exact curves.
    pub fn subdomain_area(&self, j: usize) -> f64 {
        let mut area = if j == self.subdomain_count() {
            self.outer.area()
        } else {
            self.inclusions[j - 1].area()
        };
        for (i, c) in self.inclusions.iter().enumerate() {
            let direct_child = match self.parent[i] {
                Some(p) => p + 1 == j,
                None => j == self.subdomain_count(),
            };
            if direct_child {
                area -= c.area();
            }
        }
        area
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::PI;
    use alloc::vec;

    fn disk_with_inclusion() -> DomainPartition {
        DomainPartition::new(
            OuterBoundary::Curve(InterfaceCurve::circle(Point::new(0.0, 0.0), 1.0).unwrap()),
            vec![InterfaceCurve::circle(Point::new(0.0, 0.0), 0.5).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn classify_center_annulus_and_interface() {
        let part = disk_with_inclusion();
        assert_eq!(part.classify_point(Point::new(0.0, 0.0)).unwrap(), Location::Subdomain(1));
        assert_eq!(part.classify_point(Point::new(0.75, 0.0)).unwrap(), Location::Subdomain(2));
        let tight = part.clone().with_tolerance(1e-12);
        assert_eq!(tight.classify_point(Point::new(0.5, 0.0)).unwrap(), Location::Interface(0));
        assert!(matches!(
            part.classify_point(Point::new(1.5, 0.0)),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn inward_normals_of_circle_and_ellipse() {
        let c = InterfaceCurve::circle(Point::new(0.0, 0.0), 0.5).unwrap();
        let n = c.normal_at(0.0);
        assert!((n.x + 1.0).abs() < 1e-12 && n.y.abs() < 1e-12);
        let n = c.normal_at(0.25 * c.length());
        assert!(n.x.abs() < 1e-12 && (n.y + 1.0).abs() < 1e-12, "{n:?}");
        assert!((n.norm() - 1.0).abs() < 1e-12);

        let e = InterfaceCurve::ellipse(Point::new(0.0, 0.0), 0.5, 0.25).unwrap();
        let n = e.normal_at(0.0);
        // Oracle: gradient of (x/a)^2 + (y/b)^2 at (a, 0) is (2/a, 0); flip toward center.
        let g = Point::new(-2.0 / 0.5, 0.0).normalized();
        assert!((n - g).norm() < 1e-12, "{n:?}");
    }

    #[test]
    fn ellipse_normals_match_implicit_gradient_everywhere() {
        let (a, b) = (0.5, 0.25);
        let e = InterfaceCurve::ellipse(Point::new(0.1, -0.2), a, b).unwrap();
        for k in 0..16 {
            let s = e.length() * k as f64 / 16.0;
            let t = e.param_at_arclength(s);
            let p = e.point(t) - e.center();
            let grad = Point::new(2.0 * p.x / (a * a), 2.0 * p.y / (b * b));
            let oracle = (-grad).normalized();
            assert!((e.normal_at(s) - oracle).norm() < 1e-10);
        }
    }

    #[test]
    fn arclength_roundtrip() {
        let e = InterfaceCurve::perturbed_circle(Point::new(0.0, 0.0), 0.4, vec![(3, 0.05)], 0.5).unwrap();
        for k in 0..50 {
            let s = e.length() * k as f64 / 50.0;
            let t = e.param_at_arclength(s);
            assert!((e.arclength_at(t) - s).abs() < 1e-11, "s={s} back={}", e.arclength_at(t));
        }
    }

    #[test]
    fn circle_quadrature_length_and_moments() {
        let c = InterfaceCurve::circle(Point::new(0.0, 0.0), 0.5).unwrap();
        let q = c.boundary_quadrature(4, 256);
        let len: f64 = q.iter().map(|n| n.weight).sum();
        assert!((len - PI).abs() < 1e-8 * PI);
        let cos_int: f64 = q.iter().map(|n| n.weight * cos(n.param)).sum();
        assert!(cos_int.abs() < 1e-10);
        let nu: Point = q.iter().fold(Point::default(), |acc, n| acc + n.normal * n.weight);
        assert!(nu.norm() < 1e-8);
    }

    #[test]
    fn perturbed_curve_is_simple_and_holder_stable() {
        let c = InterfaceCurve::perturbed_circle(Point::new(0.0, 0.0), 0.5, vec![(4, 0.04), (7, 0.01)], 0.5)
            .unwrap();
        assert!(c.is_simple(2048));
        let q1 = c.tangent_holder_quotient(0.5, 10_000, 7);
        let q2 = c.tangent_holder_quotient(0.5, 20_000, 7);
        assert!(q1.is_finite() && q1 > 0.0);
        assert!((q2 - q1).abs() <= 0.1 * q1, "q1={q1} q2={q2}");
    }

    #[test]
    fn intersecting_inclusions_rejected() {
        let outer = OuterBoundary::Curve(InterfaceCurve::circle(Point::new(0.0, 0.0), 1.0).unwrap());
        let a = InterfaceCurve::circle(Point::new(-0.1, 0.0), 0.3).unwrap();
        let b = InterfaceCurve::circle(Point::new(0.1, 0.0), 0.3).unwrap();
        assert!(DomainPartition::new(outer.clone(), vec![a.clone(), b]).is_err());
        let inner = InterfaceCurve::circle(Point::new(-0.1, 0.0), 0.1).unwrap();
        let part = DomainPartition::new(outer, vec![a, inner]).unwrap();
        assert_eq!(part.parent, vec![None, Some(0)]);
        assert_eq!(part.subdomain_of(Point::new(-0.1, 0.0)), 2);
        assert_eq!(part.subdomain_of(Point::new(-0.3, 0.0)), 1);
        assert_eq!(part.subdomain_of(Point::new(0.8, 0.0)), 3);
        let ring = part.subdomain_area(1);
        assert!((ring - PI * (0.09 - 0.01)).abs() < 1e-12);
    }
}
