//! Stiffness, volume and interface assembly.
//!
//! The bilinear form is `a(u, φ) = ∫ A^{kl}_{ij} ∂_l u^j ∂_k φ^i` and the
//! volume functional is `ℓ(φ) = -∫ F_k^i ∂_k φ^i + ∫ f^i φ^i`, so a weak
//! solution satisfies `a(u, φ) = -ℓ(φ) + σ ∫_Γ g φ`.

use alloc::vec;
use alloc::vec::Vec;

use super::coefficient::CoefficientField;
use super::field::{shape_gradients, shape_values, BasisOrder, ElementGeometry, FeSpace};
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::geometry::{DomainPartition, Point};
use crate::math::{wrap, PI, TAU};
use crate::quadrature::{gauss_unit, TriangleRule};

const NONE: usize = usize::MAX;

/// A set of elements with a compact numbering of the scalar dofs they touch.
#[derive(Debug, Clone)]
pub struct Region {
    pub elements: Vec<usize>,
    pub local_of: Vec<usize>,
    pub global_of: Vec<usize>,
}

impl Region {
    pub fn whole(space: &FeSpace) -> Region {
        Region::from_elements(space, (0..space.mesh.triangles.len()).collect())
    }

    /// Closed subdomain `tag` (1-based).
    pub fn subdomain(space: &FeSpace, tag: usize) -> Region {
        let elements = (0..space.mesh.triangles.len())
            .filter(|&t| space.mesh.triangles[t].tag == tag)
            .collect();
        Region::from_elements(space, elements)
    }

    pub fn from_elements(space: &FeSpace, elements: Vec<usize>) -> Region {
        let mut local_of = vec![NONE; space.scalar_dofs()];
        let mut used = vec![false; space.scalar_dofs()];
        for &t in &elements {
            for &d in space.dofs(t) {
                used[d] = true;
            }
        }
        let mut global_of = Vec::new();
        for (d, &u) in used.iter().enumerate() {
            if u {
                local_of[d] = global_of.len();
                global_of.push(d);
            }
        }
        Region { elements, local_of, global_of }
    }

    /// Number of scalar dofs.
    pub fn len(&self) -> usize {
        self.global_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.global_of.is_empty()
    }

    pub fn contains(&self, scalar_dof: usize) -> bool {
        self.local_of[scalar_dof] != NONE
    }

    /// Global vector to region vector (`n` components per dof).
    pub fn restrict(&self, global: &[f64], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.len() * n];
        for (l, &g) in self.global_of.iter().enumerate() {
            out[l * n..(l + 1) * n].copy_from_slice(&global[g * n..(g + 1) * n]);
        }
        out
    }

    /// Region vector to a global vector, zero elsewhere.
    pub fn extend(&self, local: &[f64], n: usize, scalar_dofs: usize) -> Vec<f64> {
        let mut out = vec![0.0; scalar_dofs * n];
        for (l, &g) in self.global_of.iter().enumerate() {
            out[g * n..(g + 1) * n].copy_from_slice(&local[l * n..(l + 1) * n]);
        }
        out
    }
}

/// Quadrature degree for volume integrals.
pub fn volume_degree(order: BasisOrder) -> usize {
    match order {
        BasisOrder::P1 => 4,
        BasisOrder::P2 => 6,
    }
}

/// Right-hand-side data of the volume functional at a quadrature point.
pub trait LoadData {
    fn components(&self) -> usize;
    /// Writes `F` (layout `k * n + i`) and `f`. Returns false when both are
    /// identically zero in this subdomain so the point can be skipped.
    fn eval(&self, tri: usize, tag: usize, p: Point, bary: [f64; 3], flux: &mut [f64], source: &mut [f64]) -> bool;
}

impl LoadData for CoefficientField {
    fn components(&self) -> usize {
        self.components
    }

    fn eval(&self, _tri: usize, tag: usize, p: Point, _bary: [f64; 3], flux: &mut [f64], source: &mut [f64]) -> bool {
        let a = self.flux(tag, p, flux);
        let b = self.source(tag, p, source);
        a || b
    }
}

/// Element stiffness for a constant tensor; rows `a * n + i`.
pub fn local_stiffness(order: BasisOrder, geo: &ElementGeometry, n: usize, tensor: &[f64]) -> Vec<f64> {
    let rule = TriangleRule::with_degree(2 * (order.degree() - 1));
    let mut out = vec![0.0; (order.local_count() * n).pow(2)];
    for q in rule.points() {
        add_stiffness_point(order, geo, n, tensor, q.0, q.1 * geo.area, &mut out);
    }
    out
}

fn add_stiffness_point(
    order: BasisOrder,
    geo: &ElementGeometry,
    n: usize,
    tensor: &[f64],
    bary: [f64; 3],
    weight: f64,
    out: &mut [f64],
) {
    let m = order.local_count();
    let dim = m * n;
    let g = shape_gradients(order, geo, bary);
    for a in 0..m {
        let ga = [g[a].x, g[a].y];
        for b in 0..m {
            let gb = [g[b].x, g[b].y];
            for k in 0..2 {
                for l in 0..2 {
                    let s = weight * ga[k] * gb[l];
                    if s == 0.0 {
                        continue;
                    }
                    for i in 0..n {
                        for j in 0..n {
                            out[(a * n + i) * dim + b * n + j] += s * tensor[((k * 2 + l) * n + i) * n + j];
                        }
                    }
                }
            }
        }
    }
}

/// Global stiffness over `region`, size `region.len() * n`.
pub fn assemble_stiffness(space: &FeSpace, coeff: &CoefficientField, region: &Region) -> Result<CsrMatrix> {
    let n = coeff.components;
    let order = space.order;
    let m = order.local_count();
    let dim = m * n;
    let rule = TriangleRule::with_degree(volume_degree(order));
    let mut tensor = vec![0.0; coeff.tensor_len()];
    let mut local = vec![0.0; dim * dim];
    let mut triplets = Vec::with_capacity(region.elements.len() * dim * dim);
    for &t in &region.elements {
        let geo = space.geometry(t);
        if !(geo.area > 0.0) {
            return Err(Error::SingularElement { element: t, jacobian: 2.0 * geo.area });
        }
        let tag = space.mesh.triangles[t].tag;
        local.fill(0.0);
        for (bary, w) in rule.points() {
            coeff.tensor(tag, geo.point(bary), &mut tensor);
            add_stiffness_point(order, &geo, n, &tensor, bary, w * geo.area, &mut local);
        }
        let dofs = space.dofs(t);
        for a in 0..m {
            for i in 0..n {
                let r = region.local_of[dofs[a]] * n + i;
                for b in 0..m {
                    for j in 0..n {
                        let v = local[(a * n + i) * dim + b * n + j];
                        if v != 0.0 {
                            triplets.push((r, region.local_of[dofs[b]] * n + j, v));
                        }
                    }
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(region.len() * n, triplets))
}

/// `ℓ(φ) = -∫ F·∇φ + ∫ f φ` over `region`.
pub fn assemble_load<D: LoadData + ?Sized>(space: &FeSpace, data: &D, region: &Region) -> Vec<f64> {
    let n = data.components();
    let order = space.order;
    let m = order.local_count();
    let rule = TriangleRule::with_degree(volume_degree(order));
    let mut flux = vec![0.0; 2 * n];
    let mut source = vec![0.0; n];
    let mut out = vec![0.0; region.len() * n];
    for &t in &region.elements {
        let geo = space.geometry(t);
        let tag = space.mesh.triangles[t].tag;
        let dofs = space.dofs(t);
        for (bary, w) in rule.points() {
            let p = geo.point(bary);
            if !data.eval(t, tag, p, bary, &mut flux, &mut source) {
                continue;
            }
            let w = w * geo.area;
            let phi = shape_values(order, bary);
            let g = shape_gradients(order, &geo, bary);
            for a in 0..m {
                let base = region.local_of[dofs[a]] * n;
                for i in 0..n {
                    out[base + i] += w * (source[i] * phi[a] - flux[i] * g[a].x - flux[n + i] * g[a].y);
                }
            }
        }
    }
    out
}

pub fn assemble_volume_load(space: &FeSpace, coeff: &CoefficientField, region: &Region) -> Vec<f64> {
    assemble_load(space, coeff, region)
}

/// `∫ φ_a` for every scalar dof of `region`.
pub fn assemble_mass_vector(space: &FeSpace, region: &Region) -> Vec<f64> {
    let order = space.order;
    let rule = TriangleRule::with_degree(order.degree());
    let mut out = vec![0.0; region.len()];
    for &t in &region.elements {
        let geo = space.geometry(t);
        let dofs = space.dofs(t);
        for (bary, w) in rule.points() {
            let phi = shape_values(order, bary);
            for a in 0..order.local_count() {
                out[region.local_of[dofs[a]]] += w * geo.area * phi[a];
            }
        }
    }
    out
}

/// Edge shape functions in the local parameter `s ∈ [0, 1]`: start, end, midpoint.
fn edge_shapes(order: BasisOrder, s: f64) -> [f64; 3] {
    match order {
        BasisOrder::P1 => [1.0 - s, s, 0.0],
        BasisOrder::P2 => [(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)],
    }
}

/// Gauss points per interface edge.
pub const INTERFACE_POINTS: usize = 4;

/// Parameter interval `(t0, t1)` of an interface edge on curve `c`, with
/// `t1` unwrapped so that `|t1 - t0| < π`.
pub fn edge_parameters(space: &FeSpace, nodes: [usize; 2]) -> Result<(f64, f64)> {
    let p = |v: usize| {
        space.mesh.node_curve[v]
            .map(|c| c.param)
            .ok_or_else(|| Error::MeshFailure(alloc::format!("interface node {v} has no curve position")))
    };
    let t0 = p(nodes[0])?;
    let mut dt = wrap(p(nodes[1])? - t0, TAU);
    if dt > PI {
        dt -= TAU;
    }
    Ok((t0, t0 + dt))
}

/// `sign · ∫_Γ g φ` for inclusion curve `curve`, integrated along the exact
/// curve between the parameters of each edge's end nodes.
pub fn assemble_interface_load(
    space: &FeSpace,
    partition: &DomainPartition,
    coeff: &CoefficientField,
    curve: usize,
    sign: f64,
    region: &Region,
) -> Result<Vec<f64>> {
    let n = coeff.components;
    let c = partition.inclusions.get(curve).ok_or(Error::UnknownInterface(curve))?;
    let mut out = vec![0.0; region.len() * n];
    if coeff.interfaces.get(curve).and_then(|g| g.as_ref()).is_none() {
        return Ok(out);
    }
    let gauss = gauss_unit(INTERFACE_POINTS);
    let mut g = vec![0.0; n];
    for e in space.mesh.interface_edges.iter().filter(|e| e.curve == curve) {
        let (t0, t1) = edge_parameters(space, e.nodes)?;
        let dofs = space.edge_dofs(e.nodes[0], e.nodes[1]);
        for &(s, w) in &gauss {
            let t = t0 + s * (t1 - t0);
            let p = c.point(t);
            let ds = w * c.speed(t) * (t1 - t0).abs();
            coeff.interface(curve, p, wrap(t, TAU), &mut g);
            let phi = edge_shapes(space.order, s);
            for (a, &d) in dofs.iter().enumerate() {
                let l = region.local_of[d];
                if l == NONE {
                    return Err(Error::Precondition(alloc::format!("interface dof {d} outside the region")));
                }
                for i in 0..n {
                    out[l * n + i] += sign * ds * g[i] * phi[a];
                }
            }
        }
    }
    Ok(out)
}
