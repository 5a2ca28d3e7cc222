//! Piecewise coefficient data `A^{kl}_{ij}`, `F_k^i`, `f^i` and `g^i`.
//!
//! Tensor layout: `A^{kl}_{ij}` lives at `((k * 2 + l) * n + i) * n + j`.
//! Flux layout: `F_k^i` at `k * n + i`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{DomainPartition, Point};
use crate::math::sqrt;

pub type TensorFn = Arc<dyn Fn(Point, &mut [f64]) + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point, &mut [f64]) + Send + Sync>;
/// Interface data evaluated at a curve point and its curve parameter.
pub type InterfaceFn = Arc<dyn Fn(Point, f64, &mut [f64]) + Send + Sync>;

#[derive(Clone)]
pub struct SubdomainData {
    pub tensor: TensorFn,
    pub flux: Option<VectorFn>,
    pub source: Option<VectorFn>,
}

/// Coefficients and data for every subdomain and interface.
#[derive(Clone)]
pub struct CoefficientField {
    pub components: usize,
    /// Index `j - 1` holds subdomain `j`.
    pub subdomains: Vec<SubdomainData>,
    /// Index `i` holds the jump data on inclusion curve `i`.
    pub interfaces: Vec<Option<InterfaceFn>>,
}

impl core::fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("CoefficientField")
            .field("components", &self.components)
            .field("subdomains", &self.subdomains.len())
            .field("interfaces", &self.interfaces.len())
            .finish()
    }
}

pub fn identity_tensor(n: usize) -> TensorFn {
    Arc::new(move |_p, out: &mut [f64]| {
        out.fill(0.0);
        for k in 0..2 {
            for i in 0..n {
                out[((k * 2 + k) * n + i) * n + i] = 1.0;
            }
        }
    })
}

impl CoefficientField {
    /// Laplacian in every subdomain, zero data everywhere.
    pub fn laplacian(components: usize, subdomains: usize, interfaces: usize) -> CoefficientField {
        let sub = SubdomainData { tensor: identity_tensor(components), flux: None, source: None };
        CoefficientField {
            components,
            subdomains: vec![sub; subdomains],
            interfaces: vec![None; interfaces],
        }
    }

    pub fn for_partition(components: usize, partition: &DomainPartition) -> CoefficientField {
        CoefficientField::laplacian(components, partition.subdomain_count(), partition.inclusions.len())
    }

    pub fn tensor_len(&self) -> usize {
        4 * self.components * self.components
    }

    pub fn with_tensor(mut self, subdomain: usize, tensor: TensorFn) -> Self {
        self.subdomains[subdomain - 1].tensor = tensor;
        self
    }

    /// `A^{kl}_{ij} = a(x) δ_kl δ_ij` on `subdomain`.
    pub fn with_scalar_coefficient<A>(self, subdomain: usize, a: A) -> Self
    where
        A: Fn(Point) -> f64 + Send + Sync + 'static,
    {
        let n = self.components;
        self.with_tensor(
            subdomain,
            Arc::new(move |p, out: &mut [f64]| {
                out.fill(0.0);
                let v = a(p);
                for k in 0..2 {
                    for i in 0..n {
                        out[((k * 2 + k) * n + i) * n + i] = v;
                    }
                }
            }),
        )
    }

    /// Scalar (n = 1) tensor given as the 2x2 matrix `[[a11, a12], [a21, a22]]`.
    pub fn with_matrix(self, subdomain: usize, m: [[f64; 2]; 2]) -> Self {
        assert_eq!(self.components, 1, "with_matrix is for scalar problems");
        self.with_tensor(
            subdomain,
            Arc::new(move |_p, out: &mut [f64]| {
                out[0] = m[0][0];
                out[1] = m[0][1];
                out[2] = m[1][0];
                out[3] = m[1][1];
            }),
        )
    }

    pub fn with_flux(mut self, subdomain: usize, flux: VectorFn) -> Self {
        self.subdomains[subdomain - 1].flux = Some(flux);
        self
    }

    pub fn with_source(mut self, subdomain: usize, source: VectorFn) -> Self {
        self.subdomains[subdomain - 1].source = Some(source);
        self
    }

    pub fn with_interface(mut self, curve: usize, g: InterfaceFn) -> Self {
        self.interfaces[curve] = Some(g);
        self
    }

    /// Scalar source `f` on every subdomain.
    pub fn with_uniform_source<S>(mut self, f: S) -> Self
    where
        S: Fn(Point) -> f64 + Send + Sync + 'static,
    {
        let f: Arc<dyn Fn(Point) -> f64 + Send + Sync> = Arc::new(f);
        for s in &mut self.subdomains {
            let f = f.clone();
            s.source = Some(Arc::new(move |p, out: &mut [f64]| out.fill(f(p))));
        }
        self
    }

    pub fn tensor(&self, subdomain: usize, p: Point, out: &mut [f64]) {
        (self.subdomains[subdomain - 1].tensor)(p, out)
    }

    pub fn flux(&self, subdomain: usize, p: Point, out: &mut [f64]) -> bool {
        match &self.subdomains[subdomain - 1].flux {
            Some(f) => {
                f(p, out);
                true
            }
            None => {
                out.fill(0.0);
                false
            }
        }
    }

    pub fn source(&self, subdomain: usize, p: Point, out: &mut [f64]) -> bool {
        match &self.subdomains[subdomain - 1].source {
            Some(f) => {
                f(p, out);
                true
            }
            None => {
                out.fill(0.0);
                false
            }
        }
    }

    pub fn interface(&self, curve: usize, p: Point, param: f64, out: &mut [f64]) -> bool {
        match self.interfaces.get(curve).and_then(|g| g.as_ref()) {
            Some(g) => {
                g(p, param, out);
                true
            }
            None => {
                out.fill(0.0);
                false
            }
        }
    }

    /// Copy with every interface datum multiplied by `s`.
    pub fn scale_interfaces(&self, s: f64) -> CoefficientField {
        let mut out = self.clone();
        for g in out.interfaces.iter_mut() {
            if let Some(inner) = g.take() {
                *g = Some(Arc::new(move |p, t, o: &mut [f64]| {
                    inner(p, t, o);
                    o.iter_mut().for_each(|v| *v *= s);
                }));
            }
        }
        out
    }

    /// Copy with F, f and g all multiplied by `s`.
    pub fn scale_data(&self, s: f64) -> CoefficientField {
        let mut out = self.scale_interfaces(s);
        for sub in out.subdomains.iter_mut() {
            for slot in [&mut sub.flux, &mut sub.source] {
                if let Some(inner) = slot.take() {
                    *slot = Some(Arc::new(move |p, o: &mut [f64]| {
                        inner(p, o);
                        o.iter_mut().for_each(|v| *v *= s);
                    }));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticityReport {
    pub pass: bool,
    /// Smallest sampled `A ξ·ξ / |ξ|²`.
    pub worst_ratio: f64,
    /// Largest sampled Frobenius norm of a block `A^{kl}`.
    pub max_block_norm: f64,
    pub samples: usize,
}

/// Samples `κ|ξ|² ≤ A^{kl}_{ij} ξ_k^i ξ_l^j` and `|A^{kl}| ≤ 1/κ` at
/// `points` random points per subdomain and `directions` random `ξ`.
pub fn verify_ellipticity(
    coeff: &CoefficientField,
    partition: &DomainPartition,
    kappa: f64,
    points: usize,
    directions: usize,
    seed: u64,
) -> EllipticityReport {
    assert!(kappa > 0.0, "ellipticity constant must be positive");
    let n = coeff.components;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = partition.outer.bounding_box();
    let mut worst = f64::INFINITY;
    let mut max_norm: f64 = 0.0;
    let mut a = vec![0.0; coeff.tensor_len()];
    let mut xi = vec![0.0; 2 * n];
    let mut samples = 0;
    for sub in 1..=partition.subdomain_count() {
        let mut found = 0;
        let mut attempts = 0;
        while found < points && attempts < 5000 * points {
            attempts += 1;
            let p = Point::new(
                lo.x + (hi.x - lo.x) * rng.random::<f64>(),
                lo.y + (hi.y - lo.y) * rng.random::<f64>(),
            );
            if !partition.outer.contains(p) || partition.subdomain_of(p) != sub {
                continue;
            }
            found += 1;
            coeff.tensor(sub, p, &mut a);
            for k in 0..2 {
                for l in 0..2 {
                    let mut fro = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            let v = a[((k * 2 + l) * n + i) * n + j];
                            fro += v * v;
                        }
                    }
                    max_norm = max_norm.max(sqrt(fro));
                }
            }
            // Coordinate directions first, then random ones.
            for d in 0..(2 * n + directions) {
                if d < 2 * n {
                    xi.fill(0.0);
                    xi[d] = 1.0;
                } else {
                    for v in xi.iter_mut() {
                        *v = 2.0 * rng.random::<f64>() - 1.0;
                    }
                }
                let norm2: f64 = xi.iter().map(|v| v * v).sum();
                if norm2 == 0.0 {
                    continue;
                }
                let mut q = 0.0;
                for k in 0..2 {
                    for l in 0..2 {
                        for i in 0..n {
                            for j in 0..n {
                                q += a[((k * 2 + l) * n + i) * n + j] * xi[k * n + i] * xi[l * n + j];
                            }
                        }
                    }
                }
                worst = worst.min(q / norm2);
                samples += 1;
            }
        }
    }
    let pass = worst >= kappa * (1.0 - 1e-12) && max_norm <= (1.0 / kappa) * (1.0 + 1e-12);
    EllipticityReport { pass, worst_ratio: worst, max_block_norm: max_norm, samples }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{InterfaceCurve, OuterBoundary};

    fn partition() -> DomainPartition {
        DomainPartition::new(
            OuterBoundary::Curve(InterfaceCurve::circle(Point::new(0.0, 0.0), 1.0).unwrap()),
            vec![InterfaceCurve::circle(Point::new(0.0, 0.0), 0.5).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn identity_is_elliptic_with_unit_constant() {
        let part = partition();
        let c = CoefficientField::for_partition(1, &part);
        let r = verify_ellipticity(&c, &part, 1.0, 100, 1000, 1);
        assert!(r.pass);
        assert!((r.worst_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn anisotropic_tensor_against_two_constants() {
        let part = partition();
        let m = [[2.0, 0.0], [0.0, 0.5]];
        let c = CoefficientField::for_partition(1, &part).with_matrix(1, m).with_matrix(2, m);
        let strict = verify_ellipticity(&c, &part, 1.0, 100, 1000, 1);
        assert!(!strict.pass);
        assert!((strict.worst_ratio - 0.5).abs() < 1e-12);
        assert!(verify_ellipticity(&c, &part, 0.4, 100, 1000, 1).pass);
    }

    #[test]
    fn decoupled_system_is_elliptic() {
        let part = partition();
        let c = CoefficientField::for_partition(2, &part).with_scalar_coefficient(1, |_| 3.0);
        let r = verify_ellipticity(&c, &part, 0.2, 20, 200, 2);
        assert!(r.pass, "{r:?}");
        assert!((r.worst_ratio - 1.0).abs() < 1e-12);
    }
}
