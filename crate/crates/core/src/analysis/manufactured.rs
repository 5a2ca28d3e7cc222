//! Closed-form solutions with their induced data.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::fem::CoefficientField;
use crate::geometry::{DomainPartition, InterfaceCurve, OuterBoundary, Point};

pub trait ExactSolution {
    fn components(&self) -> usize;
    /// Value and gradient (`grad[k * n + i] = ∂_k u^i`) of the branch
    /// belonging to subdomain `tag`.
    fn eval(&self, tag: usize, p: Point, value: &mut [f64], grad: &mut [f64]);
}

pub type ExactFn = Arc<dyn Fn(usize, Point, &mut [f64], &mut [f64]) + Send + Sync>;

#[derive(Clone)]
pub struct ManufacturedSolution {
    pub name: String,
    pub partition: DomainPartition,
    pub coeff: CoefficientField,
    pub exact: ExactFn,
}

impl core::fmt::Debug for ManufacturedSolution {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ManufacturedSolution").field("name", &self.name).finish()
    }
}

impl ExactSolution for ManufacturedSolution {
    fn components(&self) -> usize {
        self.coeff.components
    }

    fn eval(&self, tag: usize, p: Point, value: &mut [f64], grad: &mut [f64]) {
        (self.exact)(tag, p, value, grad)
    }
}

fn unit_disk_with(inner: f64) -> DomainPartition {
    let o = Point::new(0.0, 0.0);
    DomainPartition::new(
        OuterBoundary::Curve(InterfaceCurve::circle(o, 1.0).expect("unit circle")),
        vec![InterfaceCurve::circle(o, inner).expect("inner circle")],
    )
    .expect("concentric disks")
}

impl ManufacturedSolution {
    /// Unit disk with the inclusion `r < 1/2` and `A = I`:
    /// `u = r cos θ` inside, `u = -(r - 1/r) cos θ / 3` outside.
    pub fn ms1() -> ManufacturedSolution {
        let mut ms = ManufacturedSolution::ms1_with_coefficients(1.0, 1.0);
        ms.name = "MS-1".to_string();
        ms
    }

    /// The MS-1 profile with `A = a1 I` inside and `a2 I` outside; the
    /// induced jump is `g = -(a1 + 5 a2 / 3) cos θ`.
    pub fn ms1_with_coefficients(a1: f64, a2: f64) -> ManufacturedSolution {
        let partition = unit_disk_with(0.5);
        let lambda = -(a1 + 5.0 * a2 / 3.0);
        let coeff = CoefficientField::for_partition(1, &partition)
            .with_scalar_coefficient(1, move |_| a1)
            .with_scalar_coefficient(2, move |_| a2)
            .with_interface(0, Arc::new(move |p: Point, _t, o: &mut [f64]| o[0] = lambda * p.x / p.norm()));
        let exact: ExactFn = Arc::new(|tag, p: Point, v: &mut [f64], g: &mut [f64]| {
            if tag == 1 {
                v[0] = p.x;
                g[0] = 1.0;
                g[1] = 0.0;
            } else {
                let r2 = p.x * p.x + p.y * p.y;
                let r4 = r2 * r2;
                v[0] = -(p.x - p.x / r2) / 3.0;
                g[0] = -(1.0 - 1.0 / r2 + 2.0 * p.x * p.x / r4) / 3.0;
                g[1] = -(2.0 * p.x * p.y / r4) / 3.0;
            }
        });
        ManufacturedSolution { name: "MS-1-piecewise".to_string(), partition, coeff, exact }
    }

    /// Smooth solution across the interface with zero jump:
    /// `u = (1 - r²)(1 + xy)` on the MS-1 partition, `A = I`.
    pub fn smooth_zero_jump() -> ManufacturedSolution {
        let partition = unit_disk_with(0.5);
        let coeff = CoefficientField::for_partition(1, &partition)
            .with_uniform_source(|p: Point| -4.0 - 12.0 * p.x * p.y)
            .with_interface(0, Arc::new(|_, _, o: &mut [f64]| o[0] = 0.0));
        let exact: ExactFn = Arc::new(|_, p: Point, v: &mut [f64], g: &mut [f64]| {
            let a = 1.0 - p.x * p.x - p.y * p.y;
            let b = 1.0 + p.x * p.y;
            v[0] = a * b;
            g[0] = -2.0 * p.x * b + a * p.y;
            g[1] = -2.0 * p.y * b + a * p.x;
        });
        ManufacturedSolution { name: "smooth-zero-jump".to_string(), partition, coeff, exact }
    }

    /// Largest `|u⁺ - u⁻|` and largest `|g - [(A∇u - F)·ν]|` over `samples`
    /// points per interface, with `ν` pointing into the inclusion and the
    /// jump taken as inside minus outside.
    pub fn interface_consistency(&self, samples: usize) -> (f64, f64) {
        let n = self.coeff.components;
        let mut worst_u: f64 = 0.0;
        let mut worst_g: f64 = 0.0;
        let mut vi = vec![0.0; n];
        let mut vo = vec![0.0; n];
        let mut gi = vec![0.0; 2 * n];
        let mut go = vec![0.0; 2 * n];
        let mut g = vec![0.0; n];
        for (c, curve) in self.partition.inclusions.iter().enumerate() {
            let inner = self.partition.inclusion_subdomain(c);
            let outer = self.partition.outer_neighbour(c);
            for t in curve.uniform_params(samples) {
                let p = curve.point(t);
                let nu = curve.inward_normal(t);
                self.eval(inner, p, &mut vi, &mut gi);
                self.eval(outer, p, &mut vo, &mut go);
                let fi = conormal_flux(&self.coeff, inner, p, nu, &gi);
                let fo = conormal_flux(&self.coeff, outer, p, nu, &go);
                self.coeff.interface(c, p, t, &mut g);
                for i in 0..n {
                    worst_u = worst_u.max((vi[i] - vo[i]).abs());
                    worst_g = worst_g.max((fi[i] - fo[i] - g[i]).abs());
                }
            }
        }
        (worst_u, worst_g)
    }
}

/// `(A^{kl}_{ij} ∂_l u^j - F_k^i) ν_k` in subdomain `tag`.
pub fn conormal_flux(coeff: &CoefficientField, tag: usize, p: Point, nu: Point, grad: &[f64]) -> Vec<f64> {
    let n = coeff.components;
    let mut a = vec![0.0; coeff.tensor_len()];
    let mut f = vec![0.0; 2 * n];
    coeff.tensor(tag, p, &mut a);
    coeff.flux(tag, p, &mut f);
    let nuv = [nu.x, nu.y];
    let mut out = vec![0.0; n];
    for i in 0..n {
        for k in 0..2 {
            let mut s = -f[k * n + i];
            for l in 0..2 {
                for j in 0..n {
                    s += a[((k * 2 + l) * n + i) * n + j] * grad[l * n + j];
                }
            }
            out[i] += s * nuv[k];
        }
    }
    out
}
