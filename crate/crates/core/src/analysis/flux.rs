//! Recovered conormal flux jumps across interfaces.

use alloc::vec;

use super::manufactured::conormal_flux;
use crate::error::{Error, Result};
use crate::fem::assembly::{edge_parameters, INTERFACE_POINTS};
use crate::fem::{CoefficientField, DiscreteField};
use crate::geometry::DomainPartition;
use crate::math::{sqrt, wrap, TAU};
use crate::mesh::barycentric;
use crate::quadrature::gauss_unit;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxJumpReport {
    /// `‖[(A∇u_h - F)·ν] - g‖_{L₂(Γ)}`.
    pub residual: f64,
    /// `‖g‖_{L₂(Γ)}` on the same quadrature.
    pub data_norm: f64,
    pub edges: usize,
}

impl FluxJumpReport {
    pub fn relative(&self) -> f64 {
        if self.data_norm > 0.0 {
            self.residual / self.data_norm
        } else {
            self.residual
        }
    }
}

/// Jump of the element-wise conormal flux across inclusion curve `curve`,
/// inside minus outside with `ν` pointing into the inclusion, compared
/// with the prescribed `g`.
pub fn flux_jump_residual(
    field: &DiscreteField,
    coeff: &CoefficientField,
    partition: &DomainPartition,
    curve: usize,
) -> Result<FluxJumpReport> {
    let c = partition.inclusions.get(curve).ok_or(Error::UnknownInterface(curve))?;
    let space = &field.space;
    let mesh = &space.mesh;
    let n = field.components;
    let gauss = gauss_unit(INTERFACE_POINTS);
    let sides = mesh.interface_sides();
    let mut g = vec![0.0; n];
    let mut grad_in = vec![0.0; 2 * n];
    let mut grad_out = vec![0.0; 2 * n];
    let (mut res, mut data, mut edges) = (0.0, 0.0, 0);
    for (e, &(ti, to)) in mesh.interface_edges.iter().zip(&sides) {
        if e.curve != curve {
            continue;
        }
        edges += 1;
        let (a, b) = (mesh.nodes[e.nodes[0]], mesh.nodes[e.nodes[1]]);
        let nu = (b - a).perp().normalized();
        let (t0, t1) = edge_parameters(space, e.nodes)?;
        let (tag_in, tag_out) = (mesh.triangles[ti].tag, mesh.triangles[to].tag);
        let (vi, vo) = (mesh.vertices(ti), mesh.vertices(to));
        for &(s, w) in &gauss {
            let p = a + (b - a) * s;
            field.gradient_in(ti, barycentric(vi, p), &mut grad_in);
            field.gradient_in(to, barycentric(vo, p), &mut grad_out);
            let fi = conormal_flux(coeff, tag_in, p, nu, &grad_in);
            let fo = conormal_flux(coeff, tag_out, p, nu, &grad_out);
            let t = t0 + s * (t1 - t0);
            let ds = w * c.speed(t) * (t1 - t0).abs();
            coeff.interface(curve, c.point(t), wrap(t, TAU), &mut g);
            for i in 0..n {
                let d = fi[i] - fo[i] - g[i];
                res += ds * d * d;
                data += ds * g[i] * g[i];
            }
        }
    }
    Ok(FluxJumpReport { residual: sqrt(res), data_norm: sqrt(data), edges })
}
