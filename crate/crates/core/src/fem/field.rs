//! Lagrange P1/P2 spaces on a fitted mesh and the fields that live on them.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::{barycentric, PointLocator, TriMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BasisOrder {
    P1,
    P2,
}

impl BasisOrder {
    pub fn local_count(self) -> usize {
        match self {
            BasisOrder::P1 => 3,
            BasisOrder::P2 => 6,
        }
    }

    pub fn degree(self) -> usize {
        match self {
            BasisOrder::P1 => 1,
            BasisOrder::P2 => 2,
        }
    }

    pub fn from_degree(d: usize) -> Option<BasisOrder> {
        match d {
            1 => Some(BasisOrder::P1),
            2 => Some(BasisOrder::P2),
            _ => None,
        }
    }
}

/// Local edge `e` joins local vertices `EDGE_VERTS[e]`.
pub const EDGE_VERTS: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];

/// Affine data of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub vertices: [Point; 3],
    pub area: f64,
    /// Gradients of the barycentric coordinates.
    pub grad_lambda: [Point; 3],
}

impl ElementGeometry {
    pub fn new(vertices: [Point; 3]) -> ElementGeometry {
        let [a, b, c] = vertices;
        let det = (b - a).cross(c - a);
        let inv = 1.0 / det;
        let grad_lambda = [
            Point::new(b.y - c.y, c.x - b.x) * inv,
            Point::new(c.y - a.y, a.x - c.x) * inv,
            Point::new(a.y - b.y, b.x - a.x) * inv,
        ];
        ElementGeometry { vertices, area: 0.5 * det, grad_lambda }
    }

    pub fn point(&self, bary: [f64; 3]) -> Point {
        let [a, b, c] = self.vertices;
        a * bary[0] + b * bary[1] + c * bary[2]
    }
}

/// Scalar shape function values at `bary`; the first `order.local_count()` are used.
pub fn shape_values(order: BasisOrder, l: [f64; 3]) -> [f64; 6] {
    match order {
        BasisOrder::P1 => [l[0], l[1], l[2], 0.0, 0.0, 0.0],
        BasisOrder::P2 => {
            let mut v = [0.0; 6];
            for i in 0..3 {
                v[i] = l[i] * (2.0 * l[i] - 1.0);
            }
            for (e, [i, j]) in EDGE_VERTS.iter().enumerate() {
                v[3 + e] = 4.0 * l[*i] * l[*j];
            }
            v
        }
    }
}

pub fn shape_gradients(order: BasisOrder, geo: &ElementGeometry, l: [f64; 3]) -> [Point; 6] {
    let g = geo.grad_lambda;
    let mut out = [Point::new(0.0, 0.0); 6];
    match order {
        BasisOrder::P1 => out[..3].copy_from_slice(&g),
        BasisOrder::P2 => {
            for i in 0..3 {
                out[i] = g[i] * (4.0 * l[i] - 1.0);
            }
            for (e, [i, j]) in EDGE_VERTS.iter().enumerate() {
                out[3 + e] = (g[*j] * l[*i] + g[*i] * l[*j]) * 4.0;
            }
        }
    }
    out
}

/// Scalar Lagrange space; the vector-valued unknown of `n` components
/// uses global index `scalar * n + component`.
#[derive(Debug)]
pub struct FeSpace {
    pub mesh: TriMesh,
    pub order: BasisOrder,
    /// Scalar dofs per triangle in local order (vertices, then edges).
    pub element_dofs: Vec<[usize; 6]>,
    /// Position of every scalar dof.
    pub dof_points: Vec<Point>,
    /// Scalar dofs on the outer boundary.
    pub boundary: Vec<bool>,
    /// Edge dof of each mesh edge (P2).
    pub edge_dof: BTreeMap<(usize, usize), usize>,
    locator: PointLocator,
}

impl FeSpace {
    pub fn new(mesh: TriMesh, order: BasisOrder) -> Arc<FeSpace> {
        let nn = mesh.nodes.len();
        let mut dof_points = mesh.nodes.clone();
        let mut boundary = mesh.boundary_nodes();
        let mut edge_dof = BTreeMap::new();
        let mut element_dofs = Vec::with_capacity(mesh.triangles.len());
        if order == BasisOrder::P2 {
            for (k, (a, b)) in mesh.edges().into_iter().enumerate() {
                edge_dof.insert((a, b), nn + k);
                dof_points.push(mesh.nodes[a].midpoint(mesh.nodes[b]));
                boundary.push(false);
            }
            for e in &mesh.boundary_edges {
                let key = (e[0].min(e[1]), e[0].max(e[1]));
                boundary[edge_dof[&key]] = true;
            }
        }
        for t in &mesh.triangles {
            let mut d = [usize::MAX; 6];
            d[..3].copy_from_slice(&t.nodes);
            if order == BasisOrder::P2 {
                for (e, [i, j]) in EDGE_VERTS.iter().enumerate() {
                    let (a, b) = (t.nodes[*i], t.nodes[*j]);
                    d[3 + e] = edge_dof[&(a.min(b), a.max(b))];
                }
            }
            element_dofs.push(d);
        }
        let locator = PointLocator::new(&mesh);
        Arc::new(FeSpace { mesh, order, element_dofs, dof_points, boundary, edge_dof, locator })
    }

    pub fn scalar_dofs(&self) -> usize {
        self.dof_points.len()
    }

    pub fn local_count(&self) -> usize {
        self.order.local_count()
    }

    pub fn dofs(&self, t: usize) -> &[usize] {
        &self.element_dofs[t][..self.local_count()]
    }

    pub fn geometry(&self, t: usize) -> ElementGeometry {
        ElementGeometry::new(self.mesh.vertices(t))
    }

    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        self.locator.locate(&self.mesh, p)
    }

    /// Scalar dofs of an interface edge in edge-local order: start, end
    /// and (P2) the midpoint.
    pub fn edge_dofs(&self, a: usize, b: usize) -> Vec<usize> {
        let mut out = vec![a, b];
        if self.order == BasisOrder::P2 {
            out.push(self.edge_dof[&(a.min(b), a.max(b))]);
        }
        out
    }
}

/// Piecewise polynomial field with `components` values per scalar dof.
#[derive(Debug, Clone)]
pub struct DiscreteField {
    pub space: Arc<FeSpace>,
    pub components: usize,
    pub values: Vec<f64>,
}

impl DiscreteField {
    pub fn zeros(space: &Arc<FeSpace>, components: usize) -> DiscreteField {
        let len = space.scalar_dofs() * components;
        DiscreteField { space: space.clone(), components, values: vec![0.0; len] }
    }

    pub fn from_values(space: &Arc<FeSpace>, components: usize, values: Vec<f64>) -> Result<DiscreteField> {
        if values.len() != space.scalar_dofs() * components {
            return Err(Error::Dimension(alloc::format!(
                "expected {} values, got {}",
                space.scalar_dofs() * components,
                values.len()
            )));
        }
        Ok(DiscreteField { space: space.clone(), components, values })
    }

    /// Nodal interpolant of `f(tag, p, out)`; `tag` is a subdomain of some
    /// triangle containing the dof.
    pub fn interpolate<F>(space: &Arc<FeSpace>, components: usize, f: F) -> DiscreteField
    where
        F: Fn(usize, Point, &mut [f64]),
    {
        let mut field = DiscreteField::zeros(space, components);
        let mut seen = vec![false; space.scalar_dofs()];
        let mut buf = vec![0.0; components];
        for (t, tri) in space.mesh.triangles.iter().enumerate() {
            for &d in space.dofs(t) {
                if seen[d] {
                    continue;
                }
                seen[d] = true;
                f(tri.tag, space.dof_points[d], &mut buf);
                field.values[d * components..(d + 1) * components].copy_from_slice(&buf);
            }
        }
        field
    }

    pub fn dof_count(&self) -> usize {
        self.values.len()
    }

    pub fn value_in(&self, t: usize, bary: [f64; 3], out: &mut [f64]) {
        let n = self.components;
        let phi = shape_values(self.space.order, bary);
        out.fill(0.0);
        for (a, &d) in self.space.dofs(t).iter().enumerate() {
            for i in 0..n {
                out[i] += phi[a] * self.values[d * n + i];
            }
        }
    }

    /// Gradient in triangle `t`, `out[k * n + i] = ∂_k u^i`.
    pub fn gradient_in(&self, t: usize, bary: [f64; 3], out: &mut [f64]) {
        let geo = self.space.geometry(t);
        self.gradient_with(&geo, t, bary, out)
    }

    pub fn gradient_with(&self, geo: &ElementGeometry, t: usize, bary: [f64; 3], out: &mut [f64]) {
        let n = self.components;
        let grads = shape_gradients(self.space.order, geo, bary);
        out.fill(0.0);
        for (a, &d) in self.space.dofs(t).iter().enumerate() {
            for i in 0..n {
                let v = self.values[d * n + i];
                out[i] += grads[a].x * v;
                out[n + i] += grads[a].y * v;
            }
        }
    }

    /// Value at a point of the domain; `None` outside the mesh.
    pub fn value_at(&self, p: Point, out: &mut [f64]) -> Option<usize> {
        let (t, bary) = self.space.locate(p)?;
        self.value_in(t, bary, out);
        Some(t)
    }

    pub fn gradient_at(&self, p: Point, out: &mut [f64]) -> Option<usize> {
        let (t, bary) = self.space.locate(p)?;
        self.gradient_in(t, bary, out);
        Some(t)
    }

    /// Gradient in triangle `t` at a physical point of (or near) it.
    pub fn gradient_in_at(&self, t: usize, p: Point, out: &mut [f64]) {
        let bary = barycentric(self.space.mesh.vertices(t), p);
        self.gradient_in(t, bary, out)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> DiscreteField {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `self - other` on the same space.
    pub fn difference(&self, other: &DiscreteField) -> DiscreteField {
        assert_eq!(self.values.len(), other.values.len());
        let mut out = self.clone();
        for (v, o) in out.values.iter_mut().zip(&other.values) {
            *v -= o;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p2_shape_functions_are_nodal_and_partition_unity() {
        let nodes = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];
        for (k, l) in nodes.iter().enumerate() {
            let v = shape_values(BasisOrder::P2, *l);
            for (a, &x) in v.iter().enumerate() {
                assert!((x - if a == k { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        let geo = ElementGeometry::new([Point::new(0.0, 0.0), Point::new(2.0, 0.1), Point::new(0.3, 1.0)]);
        let l = [0.2, 0.3, 0.5];
        let g = shape_gradients(BasisOrder::P2, &geo, l);
        let s = g.iter().fold(Point::new(0.0, 0.0), |acc, p| acc + *p);
        assert!(s.norm() < 1e-13);
        assert!((shape_values(BasisOrder::P2, l).iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }
}
