//! Integral norms of discrete fields and errors against exact solutions.

use alloc::vec;
use alloc::vec::Vec;

use super::manufactured::ExactSolution;
use crate::fem::{CoefficientField, DiscreteField, FeSpace};
use crate::geometry::DomainPartition;
use crate::math::sqrt;
use crate::quadrature::TriangleRule;

/// Per-subdomain (index `tag - 1`) and global norms.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldNorms {
    pub l2: Vec<f64>,
    pub h1_semi: Vec<f64>,
    pub l2_total: f64,
    pub h1_semi_total: f64,
}

impl FieldNorms {
    fn from_squares(l2: Vec<f64>, semi: Vec<f64>) -> FieldNorms {
        let l2_total = sqrt(l2.iter().sum());
        let h1_semi_total = sqrt(semi.iter().sum());
        FieldNorms {
            l2: l2.into_iter().map(sqrt).collect(),
            h1_semi: semi.into_iter().map(sqrt).collect(),
            l2_total,
            h1_semi_total,
        }
    }

    pub fn h1(&self, subdomain: usize) -> f64 {
        let (a, b) = (self.l2[subdomain - 1], self.h1_semi[subdomain - 1]);
        sqrt(a * a + b * b)
    }

    pub fn h1_total(&self) -> f64 {
        sqrt(self.l2_total * self.l2_total + self.h1_semi_total * self.h1_semi_total)
    }
}

/// L₂ and H¹-seminorm per subdomain, exact for the basis order.
pub fn norms(field: &DiscreteField) -> FieldNorms {
    let space = &field.space;
    let n = field.components;
    let m = space.mesh.subdomains;
    let rule = TriangleRule::with_degree(2 * space.order.degree());
    let mut l2 = vec![0.0; m];
    let mut semi = vec![0.0; m];
    let mut v = vec![0.0; n];
    let mut g = vec![0.0; 2 * n];
    for t in 0..space.mesh.triangles.len() {
        let geo = space.geometry(t);
        let tag = space.mesh.triangles[t].tag;
        for (bary, w) in rule.points() {
            field.value_in(t, bary, &mut v);
            field.gradient_with(&geo, t, bary, &mut g);
            let w = w * geo.area;
            l2[tag - 1] += w * v.iter().map(|x| x * x).sum::<f64>();
            semi[tag - 1] += w * g.iter().map(|x| x * x).sum::<f64>();
        }
    }
    FieldNorms::from_squares(l2, semi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorNorms {
    pub subdomains: FieldNorms,
    /// Largest `|∇u_h - ∇u|` at element centroids, per subdomain.
    pub max_gradient_error: Vec<f64>,
}

impl ErrorNorms {
    pub fn l2(&self) -> f64 {
        self.subdomains.l2_total
    }

    pub fn h1_semi(&self) -> f64 {
        self.subdomains.h1_semi_total
    }

    pub fn h1(&self) -> f64 {
        self.subdomains.h1_total()
    }
}

/// Errors of `field` against the branch of `exact` selected by each
/// element's subdomain tag.
pub fn error_vs_exact<E: ExactSolution + ?Sized>(field: &DiscreteField, exact: &E) -> ErrorNorms {
    let space = &field.space;
    let n = field.components;
    let m = space.mesh.subdomains;
    let rule = TriangleRule::with_degree(8);
    let mut l2 = vec![0.0; m];
    let mut semi = vec![0.0; m];
    let mut worst = vec![0.0f64; m];
    let (mut v, mut ve) = (vec![0.0; n], vec![0.0; n]);
    let (mut g, mut ge) = (vec![0.0; 2 * n], vec![0.0; 2 * n]);
    for t in 0..space.mesh.triangles.len() {
        let geo = space.geometry(t);
        let tag = space.mesh.triangles[t].tag;
        for (bary, w) in rule.points() {
            let p = geo.point(bary);
            field.value_in(t, bary, &mut v);
            field.gradient_with(&geo, t, bary, &mut g);
            exact.eval(tag, p, &mut ve, &mut ge);
            let w = w * geo.area;
            l2[tag - 1] += w * v.iter().zip(&ve).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            semi[tag - 1] += w * g.iter().zip(&ge).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        let c = [1.0 / 3.0; 3];
        field.gradient_with(&geo, t, c, &mut g);
        exact.eval(tag, geo.point(c), &mut ve, &mut ge);
        let e = sqrt(g.iter().zip(&ge).map(|(a, b)| (a - b) * (a - b)).sum());
        worst[tag - 1] = worst[tag - 1].max(e);
    }
    ErrorNorms { subdomains: FieldNorms::from_squares(l2, semi), max_gradient_error: worst }
}

/// `max |∇u_h|` per subdomain, sampled at element vertices and centroids.
pub fn max_gradient_per_subdomain(field: &DiscreteField) -> Vec<f64> {
    let space = &field.space;
    let n = field.components;
    let mut out = vec![0.0f64; space.mesh.subdomains];
    let mut g = vec![0.0; 2 * n];
    let samples = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0 / 3.0; 3]];
    for t in 0..space.mesh.triangles.len() {
        let geo = space.geometry(t);
        let tag = space.mesh.triangles[t].tag;
        for b in samples {
            field.gradient_with(&geo, t, b, &mut g);
            out[tag - 1] = out[tag - 1].max(sqrt(g.iter().map(|x| x * x).sum()));
        }
    }
    out
}

/// `‖F‖_{L₂(Ω)}`, `‖f‖_{L₂(Ω)}` and `‖g_j‖_{L₂(Γ_j)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataNorms {
    pub flux: f64,
    pub source: f64,
    pub interfaces: Vec<f64>,
}

impl DataNorms {
    pub fn total(&self) -> f64 {
        self.flux + self.source + self.interfaces.iter().sum::<f64>()
    }
}

pub fn data_norms(coeff: &CoefficientField, space: &FeSpace, partition: &DomainPartition) -> DataNorms {
    let n = coeff.components;
    let rule = TriangleRule::with_degree(8);
    let mut f = vec![0.0; 2 * n];
    let mut s = vec![0.0; n];
    let (mut flux, mut source) = (0.0, 0.0);
    for t in 0..space.mesh.triangles.len() {
        let geo = space.geometry(t);
        let tag = space.mesh.triangles[t].tag;
        for (bary, w) in rule.points() {
            let p = geo.point(bary);
            let w = w * geo.area;
            if coeff.flux(tag, p, &mut f) {
                flux += w * f.iter().map(|x| x * x).sum::<f64>();
            }
            if coeff.source(tag, p, &mut s) {
                source += w * s.iter().map(|x| x * x).sum::<f64>();
            }
        }
    }
    let mut g = vec![0.0; n];
    let interfaces = partition
        .inclusions
        .iter()
        .enumerate()
        .map(|(j, c)| {
            if coeff.interfaces.get(j).and_then(|g| g.as_ref()).is_none() {
                return 0.0;
            }
            let mut acc = 0.0;
            for node in c.boundary_quadrature(6, 256) {
                coeff.interface(j, node.point, node.param, &mut g);
                acc += node.weight * g.iter().map(|x| x * x).sum::<f64>();
            }
            sqrt(acc)
        })
        .collect();
    DataNorms { flux: sqrt(flux), source: sqrt(source), interfaces }
}
