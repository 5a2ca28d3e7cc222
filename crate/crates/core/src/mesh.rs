//! Interface-fitted triangulations and uniform red refinement.
//!
//! Curves are polygonalised at arclength-uniform nodes, the interior is
//! seeded with a jittered equilateral lattice, and the union is Delaunay
//! triangulated. Curve segments missing from the triangulation are split
//! until every segment is a mesh edge, so every triangle lies in exactly
//! one subdomain.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::delaunay::{orient, triangulate};
use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, polygon_contains, DomainPartition, OuterBoundary, Point};
use crate::math::{acos, ceil, floor, sqrt, PI, TAU};

/// Which closed curve a boundary node sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CurveId {
    Outer,
    Inclusion(usize),
}

/// Position of a node on a curve: `param` is the curve parameter (or the
/// perimeter coordinate for a box).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePosition {
    pub curve: CurveId,
    pub param: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triangle {
    /// Counter-clockwise node ids.
    pub nodes: [usize; 3],
    /// 1-based subdomain.
    pub tag: usize,
}

/// Interface edge, oriented so that the inner subdomain is on the left of
/// `nodes[0] → nodes[1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterfaceEdge {
    pub nodes: [usize; 2],
    /// 0-based inclusion index.
    pub curve: usize,
    pub inner_tag: usize,
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    pub nodes: Vec<Point>,
    pub triangles: Vec<Triangle>,
    pub interface_edges: Vec<InterfaceEdge>,
    /// Outer boundary edges, counter-clockwise.
    pub boundary_edges: Vec<[usize; 2]>,
    /// Curve membership of each node, `None` for interior nodes.
    pub node_curve: Vec<Option<CurvePosition>>,
    /// Longest edge.
    pub h: f64,
    pub subdomains: usize,
}

pub const MIN_ANGLE_DEG: f64 = 20.0;
const ATTEMPTS: u64 = 8;

struct Polyline {
    curve: CurveId,
    nodes: Vec<usize>,
}

struct SegmentGrid {
    lo: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<(Point, Point)>>,
}

impl SegmentGrid {
    fn new(lo: Point, hi: Point, cell: f64) -> SegmentGrid {
        let nx = (ceil((hi.x - lo.x) / cell) as usize).max(1) + 1;
        let ny = (ceil((hi.y - lo.y) / cell) as usize).max(1) + 1;
        SegmentGrid { lo, cell, nx, ny, cells: vec![Vec::new(); nx * ny] }
    }

    fn index(&self, p: Point) -> (isize, isize) {
        (floor((p.x - self.lo.x) / self.cell) as isize, floor((p.y - self.lo.y) / self.cell) as isize)
    }

    fn insert(&mut self, a: Point, b: Point) {
        let (i0, j0) = self.index(Point::new(a.x.min(b.x), a.y.min(b.y)));
        let (i1, j1) = self.index(Point::new(a.x.max(b.x), a.y.max(b.y)));
        for i in i0.max(0)..=i1.min(self.nx as isize - 1) {
            for j in j0.max(0)..=j1.min(self.ny as isize - 1) {
                self.cells[j as usize * self.nx + i as usize].push((a, b));
            }
        }
    }

    /// Distance to the nearest segment, capped at one cell size.
    fn distance(&self, p: Point) -> f64 {
        let (ci, cj) = self.index(p);
        let mut best = self.cell;
        for i in (ci - 1).max(0)..=(ci + 1).min(self.nx as isize - 1) {
            for j in (cj - 1).max(0)..=(cj + 1).min(self.ny as isize - 1) {
                for &(a, b) in &self.cells[j as usize * self.nx + i as usize] {
                    best = best.min(point_segment_distance(p, a, b));
                }
            }
        }
        best
    }
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn curve_point(partition: &DomainPartition, pos: CurvePosition) -> Point {
    match pos.curve {
        CurveId::Inclusion(i) => partition.inclusions[i].point(pos.param),
        CurveId::Outer => match &partition.outer {
            OuterBoundary::Curve(c) => c.point(pos.param),
            OuterBoundary::Box { .. } => unreachable!("box nodes are placed linearly"),
        },
    }
}

/// Parameter midway along the curve from `a` to `b` (counter-clockwise).
fn mid_param(a: f64, b: f64) -> f64 {
    let mut b = b;
    if b <= a {
        b += TAU;
    }
    let m = 0.5 * (a + b);
    if m >= TAU {
        m - TAU
    } else {
        m
    }
}

struct Builder<'a> {
    partition: &'a DomainPartition,
    nodes: Vec<Point>,
    node_curve: Vec<Option<CurvePosition>>,
    polylines: Vec<Polyline>,
}

impl<'a> Builder<'a> {
    fn push_node(&mut self, p: Point, pos: Option<CurvePosition>) -> usize {
        self.nodes.push(p);
        self.node_curve.push(pos);
        self.nodes.len() - 1
    }

    fn discretize_curves(&mut self, h: f64) {
        let partition = self.partition;
        for (i, c) in partition.inclusions.iter().enumerate() {
            let n = (ceil(c.length() / h) as usize).max(8);
            let ids: Vec<usize> = c
                .uniform_params(n)
                .into_iter()
                .map(|t| self.push_node(c.point(t), Some(CurvePosition { curve: CurveId::Inclusion(i), param: t })))
                .collect();
            self.polylines.push(Polyline { curve: CurveId::Inclusion(i), nodes: ids });
        }
        match &partition.outer {
            OuterBoundary::Curve(c) => {
                let n = (ceil(c.length() / h) as usize).max(8);
                let ids: Vec<usize> = c
                    .uniform_params(n)
                    .into_iter()
                    .map(|t| self.push_node(c.point(t), Some(CurvePosition { curve: CurveId::Outer, param: t })))
                    .collect();
                self.polylines.push(Polyline { curve: CurveId::Outer, nodes: ids });
            }
            OuterBoundary::Box { min, max } => {
                let corners = [*min, Point::new(max.x, min.y), *max, Point::new(min.x, max.y)];
                let mut ids = Vec::new();
                let mut perimeter = 0.0;
                for k in 0..4 {
                    let (a, b) = (corners[k], corners[(k + 1) % 4]);
                    let len = a.dist(b);
                    let n = (ceil(len / h) as usize).max(1);
                    for s in 0..n {
                        let f = s as f64 / n as f64;
                        let pos = CurvePosition { curve: CurveId::Outer, param: perimeter + f * len };
                        ids.push(self.push_node(a + (b - a) * f, Some(pos)));
                    }
                    perimeter += len;
                }
                self.polylines.push(Polyline { curve: CurveId::Outer, nodes: ids });
            }
        }
    }

    fn segment_grid(&self, cell: f64) -> SegmentGrid {
        let (lo, hi) = self.partition.outer.bounding_box();
        let mut grid = SegmentGrid::new(lo - Point::new(cell, cell), hi + Point::new(cell, cell), cell);
        for pl in &self.polylines {
            let n = pl.nodes.len();
            for k in 0..n {
                grid.insert(self.nodes[pl.nodes[k]], self.nodes[pl.nodes[(k + 1) % n]]);
            }
        }
        grid
    }

    fn seed_lattice(&mut self, h: f64, rng: &mut ChaCha8Rng, jitter: f64) {
        let grid = self.segment_grid(h);
        let (lo, hi) = self.partition.outer.bounding_box();
        let dy = 0.5 * sqrt(3.0) * h;
        let ox = jitter * (rng.random::<f64>() - 0.5) * h;
        let oy = jitter * (rng.random::<f64>() - 0.5) * dy;
        let rows = ceil((hi.y - lo.y) / dy) as usize + 2;
        let cols = ceil((hi.x - lo.x) / h) as usize + 2;
        for j in 0..rows {
            for i in 0..cols {
                let shift = if j % 2 == 1 { 0.5 } else { 0.0 };
                let p = Point::new(
                    lo.x + (i as f64 + shift) * h + ox,
                    lo.y + j as f64 * dy + oy,
                );
                if !self.partition.outer.contains(p) {
                    continue;
                }
                if grid.distance(p) < 0.6 * h {
                    continue;
                }
                self.push_node(p, None);
            }
        }
    }

    fn split_segment(&mut self, pl: usize, k: usize) {
        let n = self.polylines[pl].nodes.len();
        let a = self.polylines[pl].nodes[k];
        let b = self.polylines[pl].nodes[(k + 1) % n];
        let pa = self.node_curve[a].expect("curve node");
        let pb = self.node_curve[b].expect("curve node");
        let (p, pos) = match (&self.partition.outer, pa.curve) {
            (OuterBoundary::Box { .. }, CurveId::Outer) => {
                let mut tb = pb.param;
                if tb <= pa.param {
                    tb += self.polylines_perimeter();
                }
                (self.nodes[a].midpoint(self.nodes[b]), CurvePosition { curve: CurveId::Outer, param: 0.5 * (pa.param + tb) })
            }
            _ => {
                let pos = CurvePosition { curve: pa.curve, param: mid_param(pa.param, pb.param) };
                (curve_point(self.partition, pos), pos)
            }
        };
        let id = self.push_node(p, Some(pos));
        self.polylines[pl].nodes.insert(k + 1, id);
    }

    fn polylines_perimeter(&self) -> f64 {
        match &self.partition.outer {
            OuterBoundary::Box { min, max } => 2.0 * ((max.x - min.x) + (max.y - min.y)),
            OuterBoundary::Curve(c) => c.length(),
        }
    }

    /// Triangulates and splits missing curve segments until they conform.
    fn conforming_triangulation(&mut self) -> Result<Vec<[usize; 3]>> {
        for _ in 0..12 {
            let tris = triangulate(&self.nodes);
            let mut edges = BTreeSet::new();
            for t in &tris {
                for k in 0..3 {
                    edges.insert(edge_key(t[k], t[(k + 1) % 3]));
                }
            }
            let mut missing = Vec::new();
            for (pi, pl) in self.polylines.iter().enumerate() {
                let n = pl.nodes.len();
                for k in 0..n {
                    if !edges.contains(&edge_key(pl.nodes[k], pl.nodes[(k + 1) % n])) {
                        missing.push((pi, k));
                    }
                }
            }
            if missing.is_empty() {
                return Ok(tris);
            }
            // Split from the back so earlier indices stay valid.
            missing.sort();
            for &(pi, k) in missing.iter().rev() {
                self.split_segment(pi, k);
            }
        }
        Err(Error::MeshFailure("curve segments do not conform to the triangulation".into()))
    }

    fn polygon_of(&self, pl: &Polyline) -> Vec<Point> {
        pl.nodes.iter().map(|&i| self.nodes[i]).collect()
    }

    fn keep_inside(&self, tris: Vec<[usize; 3]>) -> Vec<[usize; 3]> {
        let outer = self.polylines.iter().find(|p| p.curve == CurveId::Outer).expect("outer polyline");
        let poly = self.polygon_of(outer);
        tris.into_iter()
            .filter(|t| {
                let c = (self.nodes[t[0]] + self.nodes[t[1]] + self.nodes[t[2]]) * (1.0 / 3.0);
                polygon_contains(&poly, c)
            })
            .collect()
    }

    fn smooth(&mut self, tris: &[[usize; 3]], h: f64, sweeps: usize) {
        let n = self.nodes.len();
        let mut nbrs: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for t in tris {
            for k in 0..3 {
                nbrs[t[k]].insert(t[(k + 1) % 3]);
                nbrs[t[k]].insert(t[(k + 2) % 3]);
            }
        }
        let grid = self.segment_grid(h);
        for _ in 0..sweeps {
            for i in 0..n {
                if self.node_curve[i].is_some() || nbrs[i].is_empty() {
                    continue;
                }
                let mut c = Point::default();
                for &j in &nbrs[i] {
                    c = c + self.nodes[j];
                }
                let c = c * (1.0 / nbrs[i].len() as f64);
                if self.partition.outer.contains(c) && grid.distance(c) >= 0.5 * h {
                    self.nodes[i] = c;
                }
            }
        }
    }

    fn finish(self, tris: Vec<[usize; 3]>) -> Result<TriMesh> {
        let partition = self.partition;
        let incl_polys: Vec<Vec<Point>> = self
            .polylines
            .iter()
            .filter(|p| matches!(p.curve, CurveId::Inclusion(_)))
            .map(|p| self.polygon_of(p))
            .collect();
        let m = partition.subdomain_count();
        let mut triangles = Vec::with_capacity(tris.len());
        for t in &tris {
            let c = (self.nodes[t[0]] + self.nodes[t[1]] + self.nodes[t[2]]) * (1.0 / 3.0);
            let mut best: Option<usize> = None;
            for (i, poly) in incl_polys.iter().enumerate() {
                if polygon_contains(poly, c) {
                    best = match best {
                        Some(b) if partition.is_ancestor(i, b) => Some(b),
                        _ => Some(i),
                    };
                }
            }
            triangles.push(Triangle { nodes: *t, tag: best.map_or(m, |i| i + 1) });
        }
        // Compact away nodes not referenced by any triangle.
        let mut used = vec![false; self.nodes.len()];
        for t in &triangles {
            for &v in &t.nodes {
                used[v] = true;
            }
        }
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        let mut node_curve = Vec::new();
        for (i, &u) in used.iter().enumerate() {
            if u {
                remap[i] = nodes.len();
                nodes.push(self.nodes[i]);
                node_curve.push(self.node_curve[i]);
            }
        }
        for t in &mut triangles {
            t.nodes = t.nodes.map(|v| remap[v]);
        }
        let mut interface_edges = Vec::new();
        let mut boundary_edges = Vec::new();
        for pl in &self.polylines {
            let n = pl.nodes.len();
            for k in 0..n {
                let (a, b) = (remap[pl.nodes[k]], remap[pl.nodes[(k + 1) % n]]);
                if a == usize::MAX || b == usize::MAX {
                    return Err(Error::MeshFailure("curve node dropped from triangulation".into()));
                }
                match pl.curve {
                    CurveId::Inclusion(i) => interface_edges.push(InterfaceEdge {
                        nodes: [a, b],
                        curve: i,
                        inner_tag: partition.inclusion_subdomain(i),
                    }),
                    CurveId::Outer => boundary_edges.push([a, b]),
                }
            }
        }
        let mut mesh = TriMesh {
            nodes,
            triangles,
            interface_edges,
            boundary_edges,
            node_curve,
            h: 0.0,
            subdomains: m,
        };
        mesh.h = mesh.longest_edge();
        mesh.check_topology(partition)?;
        Ok(mesh)
    }
}

/// Interface-fitted mesh with target edge length `h_target`.
pub fn generate_fitted_mesh(partition: &DomainPartition, h_target: f64) -> Result<TriMesh> {
    if !(h_target > 0.0 && h_target.is_finite()) {
        return Err(Error::Precondition(format!("h_target must be positive, got {h_target}")));
    }
    let sep = partition.min_separation();
    if !partition.inclusions.is_empty() && h_target >= 0.5 * sep {
        return Err(Error::Precondition(format!(
            "h_target {h_target} is not below half the curve separation {sep}"
        )));
    }
    if partition.inclusions.is_empty() && h_target >= 0.5 * partition.outer.diameter() {
        return Err(Error::Precondition(format!("h_target {h_target} too large for the domain")));
    }
    let mut last_err = Error::MeshFailure("no attempt made".into());
    for attempt in 0..ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + attempt);
        let jitter = if attempt == 0 { 0.0 } else { 0.8 };
        match build_once(partition, h_target, &mut rng, jitter) {
            Ok(mesh) if mesh.min_angle_deg() >= MIN_ANGLE_DEG => return Ok(mesh),
            Ok(mesh) => {
                last_err = Error::MeshFailure(format!(
                    "minimum angle {:.2} below {MIN_ANGLE_DEG} degrees",
                    mesh.min_angle_deg()
                ))
            }
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

fn build_once(partition: &DomainPartition, h: f64, rng: &mut ChaCha8Rng, jitter: f64) -> Result<TriMesh> {
    let mut b = Builder { partition, nodes: Vec::new(), node_curve: Vec::new(), polylines: Vec::new() };
    b.discretize_curves(h);
    b.seed_lattice(h, rng, jitter);
    let tris = b.conforming_triangulation()?;
    let tris = b.keep_inside(tris);
    b.smooth(&tris, h, 4);
    let tris = b.conforming_triangulation()?;
    let tris = b.keep_inside(tris);
    b.finish(tris)
}

impl TriMesh {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self, t: usize) -> [Point; 3] {
        self.triangles[t].nodes.map(|v| self.nodes[v])
    }

    /// Signed area (positive for counter-clockwise triangles).
    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.vertices(t);
        0.5 * orient(a, b, c)
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.vertices(t);
        (a + b + c) * (1.0 / 3.0)
    }

    pub fn longest_edge(&self) -> f64 {
        let mut h: f64 = 0.0;
        for t in 0..self.triangles.len() {
            let [a, b, c] = self.vertices(t);
            h = h.max(a.dist(b)).max(b.dist(c)).max(c.dist(a));
        }
        h
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        let mut best = 180.0f64;
        for t in 0..self.triangles.len() {
            for ang in triangle_angles(self.vertices(t)) {
                best = best.min(ang);
            }
        }
        best
    }

    /// Sorted unique edges.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut set = BTreeSet::new();
        for t in &self.triangles {
            for k in 0..3 {
                set.insert(edge_key(t.nodes[k], t.nodes[(k + 1) % 3]));
            }
        }
        set.into_iter().collect()
    }

    /// Triangles adjacent to each undirected edge.
    pub fn edge_triangles(&self) -> BTreeMap<(usize, usize), Vec<usize>> {
        let mut map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (ti, t) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                map.entry(edge_key(t.nodes[k], t.nodes[(k + 1) % 3])).or_default().push(ti);
            }
        }
        map
    }

    /// Boundary node flags (outer boundary only).
    pub fn boundary_nodes(&self) -> Vec<bool> {
        let mut flags = vec![false; self.nodes.len()];
        for e in &self.boundary_edges {
            flags[e[0]] = true;
            flags[e[1]] = true;
        }
        flags
    }

    /// For each interface edge: (inner triangle, outer triangle).
    pub fn interface_sides(&self) -> Vec<(usize, usize)> {
        let map = self.edge_triangles();
        self.interface_edges
            .iter()
            .map(|e| {
                let ts = &map[&edge_key(e.nodes[0], e.nodes[1])];
                let (a, b) = (self.nodes[e.nodes[0]], self.nodes[e.nodes[1]]);
                let left = |t: usize| {
                    let c = self.centroid(t);
                    orient(a, b, c) > 0.0
                };
                if left(ts[0]) {
                    (ts[0], ts[1])
                } else {
                    (ts[1], ts[0])
                }
            })
            .collect()
    }

    /// Structural validation of the mesh invariants.
    pub fn check_topology(&self, partition: &DomainPartition) -> Result<()> {
        for t in 0..self.triangles.len() {
            if !(self.area(t) > 0.0) {
                return Err(Error::SingularElement { element: t, jacobian: 2.0 * self.area(t) });
            }
        }
        let map = self.edge_triangles();
        for e in &self.interface_edges {
            let ts = map
                .get(&edge_key(e.nodes[0], e.nodes[1]))
                .ok_or_else(|| Error::MeshFailure("interface edge missing".into()))?;
            if ts.len() != 2 {
                return Err(Error::MeshFailure("interface edge not shared by two triangles".into()));
            }
            let (a, b) = (self.nodes[e.nodes[0]], self.nodes[e.nodes[1]]);
            let mut inner = None;
            let mut outer = None;
            for &t in ts {
                if orient(a, b, self.centroid(t)) > 0.0 {
                    inner = Some(self.triangles[t].tag);
                } else {
                    outer = Some(self.triangles[t].tag);
                }
            }
            match (inner, outer) {
                (Some(i), Some(o)) if i == e.inner_tag && o == partition.outer_neighbour(e.curve) => {}
                _ => {
                    return Err(Error::MeshFailure(format!(
                        "interface edge on curve {} has inconsistent side tags {inner:?}/{outer:?}",
                        e.curve + 1
                    )))
                }
            }
        }
        for e in &self.boundary_edges {
            match map.get(&edge_key(e[0], e[1])) {
                Some(ts) if ts.len() == 1 => {}
                _ => return Err(Error::MeshFailure("boundary edge not on exactly one triangle".into())),
            }
        }
        // Every edge with one triangle must be a boundary edge.
        let boundary: BTreeSet<(usize, usize)> = self.boundary_edges.iter().map(|e| edge_key(e[0], e[1])).collect();
        for (k, ts) in &map {
            if ts.len() == 1 && !boundary.contains(k) {
                return Err(Error::MeshFailure("hole in triangulation".into()));
            }
            if ts.len() == 2 {
                let (ta, tb) = (self.triangles[ts[0]].tag, self.triangles[ts[1]].tag);
                if ta != tb {
                    let on_interface = self.node_curve[k.0].is_some_and(|p| matches!(p.curve, CurveId::Inclusion(_)))
                        && self.node_curve[k.1].is_some_and(|p| matches!(p.curve, CurveId::Inclusion(_)));
                    if !on_interface {
                        return Err(Error::MeshFailure("subdomain change across a non-interface edge".into()));
                    }
                }
            }
        }
        Ok(())
    }

    /// Uniform red refinement; midpoints of curve edges are placed on the
    /// exact curve.
    pub fn refine(&self, partition: &DomainPartition) -> Result<TriMesh> {
        let mut nodes = self.nodes.clone();
        let mut node_curve = self.node_curve.clone();
        let mut mid: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let is_box = matches!(partition.outer, OuterBoundary::Box { .. });
        let perimeter = match &partition.outer {
            OuterBoundary::Box { min, max } => 2.0 * ((max.x - min.x) + (max.y - min.y)),
            OuterBoundary::Curve(c) => c.length(),
        };
        // Directed curve edges so midpoints follow the curve orientation.
        let mut curve_edges: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
        for e in &self.interface_edges {
            curve_edges.insert(edge_key(e.nodes[0], e.nodes[1]), (e.nodes[0], e.nodes[1]));
        }
        for e in &self.boundary_edges {
            curve_edges.insert(edge_key(e[0], e[1]), (e[0], e[1]));
        }
        let mut midpoint = |a: usize, b: usize, nodes: &mut Vec<Point>, node_curve: &mut Vec<Option<CurvePosition>>| {
            let key = edge_key(a, b);
            if let Some(&m) = mid.get(&key) {
                return m;
            }
            let (p, pos) = match curve_edges.get(&key) {
                Some(&(s, e)) => {
                    let ps = node_curve[s].expect("curve node");
                    let pe = node_curve[e].expect("curve node");
                    if is_box && ps.curve == CurveId::Outer {
                        let mut te = pe.param;
                        if te <= ps.param {
                            te += perimeter;
                        }
                        let mut tm = 0.5 * (ps.param + te);
                        if tm >= perimeter {
                            tm -= perimeter;
                        }
                        (nodes[s].midpoint(nodes[e]), Some(CurvePosition { curve: CurveId::Outer, param: tm }))
                    } else {
                        let pos = CurvePosition { curve: ps.curve, param: mid_param(ps.param, pe.param) };
                        (curve_point(partition, pos), Some(pos))
                    }
                }
                None => (nodes[a].midpoint(nodes[b]), None),
            };
            nodes.push(p);
            node_curve.push(pos);
            let id = nodes.len() - 1;
            mid.insert(key, id);
            id
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for t in &self.triangles {
            let [a, b, c] = t.nodes;
            let ab = midpoint(a, b, &mut nodes, &mut node_curve);
            let bc = midpoint(b, c, &mut nodes, &mut node_curve);
            let ca = midpoint(c, a, &mut nodes, &mut node_curve);
            for n in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]] {
                triangles.push(Triangle { nodes: n, tag: t.tag });
            }
        }
        let mut interface_edges = Vec::with_capacity(2 * self.interface_edges.len());
        for e in &self.interface_edges {
            let m = mid[&edge_key(e.nodes[0], e.nodes[1])];
            interface_edges.push(InterfaceEdge { nodes: [e.nodes[0], m], ..*e });
            interface_edges.push(InterfaceEdge { nodes: [m, e.nodes[1]], ..*e });
        }
        let mut boundary_edges = Vec::with_capacity(2 * self.boundary_edges.len());
        for e in &self.boundary_edges {
            let m = mid[&edge_key(e[0], e[1])];
            boundary_edges.push([e[0], m]);
            boundary_edges.push([m, e[1]]);
        }
        let mut mesh = TriMesh {
            nodes,
            triangles,
            interface_edges,
            boundary_edges,
            node_curve,
            h: 0.0,
            subdomains: self.subdomains,
        };
        mesh.h = mesh.longest_edge();
        for t in 0..mesh.triangles.len() {
            if !(mesh.area(t) > 0.0) {
                return Err(Error::MeshFailure("curve projection inverted an element".into()));
            }
        }
        if mesh.min_angle_deg() < MIN_ANGLE_DEG {
            return Err(Error::MeshFailure(format!(
                "refinement broke the quality floor: {:.2} degrees",
                mesh.min_angle_deg()
            )));
        }
        Ok(mesh)
    }

    /// Total length of the polygonal interface `curve`.
    pub fn interface_length(&self, curve: usize) -> f64 {
        self.interface_edges
            .iter()
            .filter(|e| e.curve == curve)
            .map(|e| self.nodes[e.nodes[0]].dist(self.nodes[e.nodes[1]]))
            .sum()
    }

    /// Area of the triangles tagged `subdomain`.
    pub fn subdomain_area(&self, subdomain: usize) -> f64 {
        (0..self.triangles.len()).filter(|&t| self.triangles[t].tag == subdomain).map(|t| self.area(t)).sum()
    }

    pub fn statistics(&self, partition: &DomainPartition) -> MeshStatistics {
        mesh_statistics(self, partition)
    }
}

fn triangle_angles([a, b, c]: [Point; 3]) -> [f64; 3] {
    let ang = |p: Point, q: Point, r: Point| {
        let u = q - p;
        let v = r - p;
        let cosv = (u.dot(v) / (u.norm() * v.norm())).clamp(-1.0, 1.0);
        acos(cosv) * 180.0 / PI
    };
    [ang(a, b, c), ang(b, c, a), ang(c, a, b)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshStatistics {
    pub h: f64,
    pub min_angle_deg: f64,
    pub nodes: usize,
    pub triangles: usize,
    /// Triangle count per subdomain (index 0 is subdomain 1).
    pub triangles_per_subdomain: Vec<usize>,
    /// Interface edge count per inclusion curve.
    pub interface_edges_per_curve: Vec<usize>,
    /// Largest distance of an interface node from its exact curve.
    pub interface_node_deviation: f64,
}

pub fn mesh_statistics(mesh: &TriMesh, partition: &DomainPartition) -> MeshStatistics {
    let mut per = vec![0usize; mesh.subdomains];
    for t in &mesh.triangles {
        if t.tag >= 1 && t.tag <= per.len() {
            per[t.tag - 1] += 1;
        }
    }
    let mut per_curve = vec![0usize; partition.inclusions.len()];
    let mut dev: f64 = 0.0;
    for e in &mesh.interface_edges {
        if e.curve < per_curve.len() {
            per_curve[e.curve] += 1;
            for &v in &e.nodes {
                dev = dev.max(partition.inclusions[e.curve].distance(mesh.nodes[v]));
            }
        }
    }
    MeshStatistics {
        h: mesh.longest_edge(),
        min_angle_deg: mesh.min_angle_deg(),
        nodes: mesh.nodes.len(),
        triangles: mesh.triangles.len(),
        triangles_per_subdomain: per,
        interface_edges_per_curve: per_curve,
        interface_node_deviation: dev,
    }
}

/// Uniform bucket grid for point location.
#[derive(Debug, Clone)]
pub struct PointLocator {
    lo: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl PointLocator {
    pub fn new(mesh: &TriMesh) -> PointLocator {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &mesh.nodes {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let cell = mesh.h.max(1e-12);
        let nx = (ceil((hi.x - lo.x) / cell) as usize).max(1);
        let ny = (ceil((hi.y - lo.y) / cell) as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for t in 0..mesh.triangles.len() {
            let [a, b, c] = mesh.vertices(t);
            let bl = Point::new(a.x.min(b.x).min(c.x), a.y.min(b.y).min(c.y));
            let tr = Point::new(a.x.max(b.x).max(c.x), a.y.max(b.y).max(c.y));
            let i0 = (floor((bl.x - lo.x) / cell) as usize).min(nx - 1);
            let j0 = (floor((bl.y - lo.y) / cell) as usize).min(ny - 1);
            let i1 = (floor((tr.x - lo.x) / cell) as usize).min(nx - 1);
            let j1 = (floor((tr.y - lo.y) / cell) as usize).min(ny - 1);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(t);
                }
            }
        }
        PointLocator { lo, cell, nx, ny, buckets }
    }

    /// Containing triangle and barycentric coordinates.
    pub fn locate(&self, mesh: &TriMesh, p: Point) -> Option<(usize, [f64; 3])> {
        let fx = (p.x - self.lo.x) / self.cell;
        let fy = (p.y - self.lo.y) / self.cell;
        if fx < -1e-9 || fy < -1e-9 {
            return None;
        }
        let i = (floor(fx) as usize).min(self.nx - 1);
        let j = (floor(fy) as usize).min(self.ny - 1);
        if fx > self.nx as f64 + 1e-9 || fy > self.ny as f64 + 1e-9 {
            return None;
        }
        let tol = -1e-12;
        for &t in &self.buckets[j * self.nx + i] {
            let bary = barycentric(mesh.vertices(t), p);
            if bary.iter().all(|&l| l >= tol) {
                return Some((t, bary));
            }
        }
        None
    }
}

pub fn barycentric([a, b, c]: [Point; 3], p: Point) -> [f64; 3] {
    let det = orient(a, b, c);
    let l1 = orient(p, b, c) / det;
    let l2 = orient(a, p, c) / det;
    [l1, l2, 1.0 - l1 - l2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::InterfaceCurve;

    fn disk_partition() -> DomainPartition {
        DomainPartition::new(
            OuterBoundary::Curve(InterfaceCurve::circle(Point::new(0.0, 0.0), 1.0).unwrap()),
            vec![InterfaceCurve::circle(Point::new(0.0, 0.0), 0.5).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn fitted_mesh_invariants() {
        let part = disk_partition();
        let mesh = generate_fitted_mesh(&part, 0.1).unwrap();
        mesh.check_topology(&part).unwrap();
        assert!(mesh.h <= 0.2, "h = {}", mesh.h);
        assert!(mesh.min_angle_deg() >= MIN_ANGLE_DEG);
        let stats = mesh.statistics(&part);
        assert!(stats.interface_node_deviation <= 1e-10);
        assert_eq!(stats.triangles_per_subdomain.iter().sum::<usize>(), mesh.triangle_count());
        for t in 0..mesh.triangle_count() {
            assert_eq!(part.subdomain_of(mesh.centroid(t)), mesh.triangles[t].tag);
        }
    }

    #[test]
    fn node_count_scales_with_inverse_h_squared() {
        let part = disk_partition();
        let coarse = generate_fitted_mesh(&part, 0.1).unwrap();
        let fine = generate_fitted_mesh(&part, 0.05).unwrap();
        let ratio = fine.node_count() as f64 / coarse.node_count() as f64;
        assert!((2.0..=8.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn oversized_h_is_rejected() {
        let part = disk_partition();
        assert!(generate_fitted_mesh(&part, 0.3).is_err());
    }

    #[test]
    fn red_refinement_quadruples_and_projects() {
        let part = disk_partition();
        let mesh = generate_fitted_mesh(&part, 0.1).unwrap();
        let fine = mesh.refine(&part).unwrap();
        assert_eq!(fine.triangle_count(), 4 * mesh.triangle_count());
        fine.check_topology(&part).unwrap();
        assert!(fine.h <= 0.5 * mesh.h * 1.2 && fine.h >= 0.5 * mesh.h / 1.2);
        for e in &fine.interface_edges {
            for &v in &e.nodes {
                assert!((fine.nodes[v].norm() - 0.5).abs() < 1e-12);
            }
        }
        let again = fine.refine(&part).unwrap();
        let again2 = fine.refine(&part).unwrap();
        assert_eq!(again.nodes, again2.nodes);
    }

    #[test]
    fn interface_length_error_is_second_order() {
        let part = disk_partition();
        let mut mesh = generate_fitted_mesh(&part, 0.1).unwrap();
        let exact = PI;
        let mut errs = Vec::new();
        for _ in 0..3 {
            errs.push((exact - mesh.interface_length(0)).abs());
            mesh = mesh.refine(&part).unwrap();
        }
        for w in errs.windows(2) {
            let r = w[0] / w[1];
            assert!((r - 4.0).abs() <= 0.3 * 4.0, "ratio {r}");
        }
    }

    #[test]
    fn subdomain_area_converges_at_second_order() {
        let part = disk_partition();
        let mut mesh = generate_fitted_mesh(&part, 0.1).unwrap();
        let mut errs = Vec::new();
        for _ in 0..3 {
            errs.push((mesh.subdomain_area(1) - PI * 0.25).abs());
            mesh = mesh.refine(&part).unwrap();
        }
        for w in errs.windows(2) {
            let rate = crate::math::ln(w[0] / w[1]) / crate::math::ln(2.0);
            assert!(rate >= 1.8, "rate {rate}");
        }
    }

    #[test]
    fn box_and_nested_partitions_mesh() {
        let part = DomainPartition::new(
            OuterBoundary::Box { min: Point::new(0.0, 0.0), max: Point::new(1.0, 1.0) },
            vec![],
        )
        .unwrap();
        let mesh = generate_fitted_mesh(&part, 1.0 / 16.0).unwrap();
        mesh.check_topology(&part).unwrap();
        let area: f64 = (0..mesh.triangle_count()).map(|t| mesh.area(t)).sum();
        assert!((area - 1.0).abs() < 1e-12);

        let nested = DomainPartition::new(
            OuterBoundary::Curve(InterfaceCurve::circle(Point::new(0.0, 0.0), 1.0).unwrap()),
            vec![
                InterfaceCurve::circle(Point::new(0.0, 0.0), 0.3).unwrap(),
                InterfaceCurve::circle(Point::new(0.0, 0.0), 0.6).unwrap(),
            ],
        )
        .unwrap();
        let mesh = generate_fitted_mesh(&nested, 0.08).unwrap();
        mesh.check_topology(&nested).unwrap();
        let stats = mesh.statistics(&nested);
        assert!(stats.triangles_per_subdomain.iter().all(|&c| c > 0));
    }

    #[test]
    fn perturbed_and_elliptic_inclusions_mesh() {
        let part = DomainPartition::new(
            OuterBoundary::Box { min: Point::new(-1.0, -1.0), max: Point::new(1.0, 1.0) },
            vec![
                InterfaceCurve::perturbed_circle(Point::new(-0.4, 0.0), 0.3, vec![(3, 0.04)], 0.5).unwrap(),
                InterfaceCurve::ellipse(Point::new(0.5, 0.1), 0.25, 0.15).unwrap(),
            ],
        )
        .unwrap();
        let mesh = generate_fitted_mesh(&part, 0.05).unwrap();
        mesh.check_topology(&part).unwrap();
        assert!(mesh.statistics(&part).interface_node_deviation < 1e-10);
        let fine = mesh.refine(&part).unwrap();
        fine.check_topology(&part).unwrap();
    }

    #[test]
    fn statistics_of_single_and_equilateral_triangles() {
        let mesh = TriMesh {
            nodes: vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)],
            triangles: vec![Triangle { nodes: [0, 1, 2], tag: 1 }],
            interface_edges: vec![],
            boundary_edges: vec![],
            node_curve: vec![None; 3],
            h: 0.0,
            subdomains: 1,
        };
        assert!((mesh.longest_edge() - sqrt(2.0)).abs() < 1e-15);
        let eq = TriMesh {
            nodes: vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.5, 0.5 * sqrt(3.0))],
            ..mesh
        };
        assert!((eq.min_angle_deg() - 60.0).abs() < 1e-9);
    }

    #[test]
    fn locator_finds_points() {
        let part = disk_partition();
        let mesh = generate_fitted_mesh(&part, 0.1).unwrap();
        let loc = PointLocator::new(&mesh);
        for t in (0..mesh.triangle_count()).step_by(7) {
            let c = mesh.centroid(t);
            let (found, bary) = loc.locate(&mesh, c).unwrap();
            assert_eq!(found, t);
            assert!(bary.iter().all(|&l| (l - 1.0 / 3.0).abs() < 1e-9));
        }
        assert!(loc.locate(&mesh, Point::new(5.0, 5.0)).is_none());
    }
}
