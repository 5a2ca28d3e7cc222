//! Mean oscillation over balls, decay fits, and Dini moduli.
//!
//! Ball averages use a polar product rule: Gauss–Legendre in the radius
//! (weight `ρ dρ`) and the trapezoid rule in the angle. Points outside the
//! clip region are dropped, which integrates over `B_r(x) ∩ region`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fem::{CoefficientField, DiscreteField};
use crate::geometry::{DomainPartition, Point};
use crate::math::{cos, ln, powf, sin, sqrt, TAU};
use crate::quadrature::gauss_unit;

/// A vector-valued function on the domain that also reports the subdomain
/// of each point (`None` outside the domain).
pub trait PointSampler {
    fn width(&self) -> usize;
    fn sample(&self, p: Point, out: &mut [f64]) -> Option<usize>;
}

/// `∇u_h`, located through the mesh.
pub struct FieldGradient<'a>(pub &'a DiscreteField);

impl PointSampler for FieldGradient<'_> {
    fn width(&self) -> usize {
        2 * self.0.components
    }

    fn sample(&self, p: Point, out: &mut [f64]) -> Option<usize> {
        let t = self.0.gradient_at(p, out)?;
        Some(self.0.space.mesh.triangles[t].tag)
    }
}

/// Closure-backed sampler.
pub struct FnSampler<F> {
    pub width: usize,
    pub f: F,
}

impl<F: Fn(Point, &mut [f64]) -> Option<usize>> PointSampler for FnSampler<F> {
    fn width(&self) -> usize {
        self.width
    }

    fn sample(&self, p: Point, out: &mut [f64]) -> Option<usize> {
        (self.f)(p, out)
    }
}

/// One entry `A^{kl}_{ij}` of a coefficient tensor, classified by the
/// exact partition.
pub struct TensorComponent<'a> {
    pub coeff: &'a CoefficientField,
    pub partition: &'a DomainPartition,
    pub index: [usize; 4],
}

impl PointSampler for TensorComponent<'_> {
    fn width(&self) -> usize {
        1
    }

    fn sample(&self, p: Point, out: &mut [f64]) -> Option<usize> {
        if !self.partition.outer.contains(p) {
            return None;
        }
        let tag = self.partition.subdomain_of(p);
        let n = self.coeff.components;
        let mut a = vec![0.0; self.coeff.tensor_len()];
        self.coeff.tensor(tag, p, &mut a);
        let [k, l, i, j] = self.index;
        out[0] = a[((k * 2 + l) * n + i) * n + j];
        Some(tag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Clip {
    Domain,
    /// One-sided: only points of this subdomain.
    Subdomain(usize),
}

impl Clip {
    fn accepts(self, tag: usize) -> bool {
        match self {
            Clip::Domain => true,
            Clip::Subdomain(j) => j == tag,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallRule {
    pub radial: usize,
    pub angular: usize,
}

impl Default for BallRule {
    fn default() -> Self {
        BallRule { radial: 24, angular: 96 }
    }
}

struct BallSample {
    weight: f64,
    tag: usize,
    point: Point,
    values: Vec<f64>,
}

fn ball_samples<S: PointSampler + ?Sized>(sampler: &S, x: Point, r: f64, clip: Clip, rule: BallRule) -> Vec<BallSample> {
    let w = sampler.width();
    let mut out = Vec::with_capacity(rule.radial * rule.angular);
    let mut buf = vec![0.0; w];
    for (s, ws) in gauss_unit(rule.radial) {
        let rho = s * r;
        for a in 0..rule.angular {
            let th = TAU * (a as f64 + 0.5) / rule.angular as f64;
            let p = x + Point::new(cos(th), sin(th)) * rho;
            if let Some(tag) = sampler.sample(p, &mut buf) {
                if clip.accepts(tag) {
                    let weight = ws * rho * r * TAU / rule.angular as f64;
                    out.push(BallSample { weight, tag, point: p, values: buf.clone() });
                }
            }
        }
    }
    out
}

fn rms_deviation(samples: &[&BallSample], width: usize) -> (f64, f64) {
    let total: f64 = samples.iter().map(|s| s.weight).sum();
    if total <= 0.0 {
        return (0.0, 0.0);
    }
    let mut mean = vec![0.0; width];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(&s.values) {
            *m += s.weight * v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= total);
    let mut acc = 0.0;
    for s in samples {
        acc += s.weight * s.values.iter().zip(&mean).map(|(v, m)| (v - m) * (v - m)).sum::<f64>();
    }
    (acc, total)
}

/// `φ(x, r)`: RMS deviation of the sampled field from its average over
/// `B_r(x)` clipped to the domain or to one subdomain.
pub fn mean_oscillation<S: PointSampler + ?Sized>(sampler: &S, x: Point, r: f64, clip: Clip, rule: BallRule) -> Result<f64> {
    let samples = ball_samples(sampler, x, r, clip, rule);
    if samples.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let refs: Vec<&BallSample> = samples.iter().collect();
    let (acc, total) = rms_deviation(&refs, sampler.width());
    Ok(sqrt(acc / total))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillationProbe {
    pub center: Point,
    pub radii: Vec<f64>,
    pub phi: Vec<f64>,
}

/// `φ(x, r0 μ^k)` for `k = 0..levels`.
pub fn oscillation_probe<S: PointSampler + ?Sized>(
    sampler: &S,
    center: Point,
    r0: f64,
    mu: f64,
    levels: usize,
    clip: Clip,
    rule: BallRule,
) -> Result<OscillationProbe> {
    if !(mu > 0.0 && mu < 1.0) || !(r0 > 0.0) {
        return Err(Error::Precondition(alloc::format!("ladder needs r0 > 0 and 0 < μ < 1, got {r0}, {mu}")));
    }
    let mut radii = Vec::with_capacity(levels);
    let mut phi = Vec::with_capacity(levels);
    let mut r = r0;
    for _ in 0..levels {
        radii.push(r);
        phi.push(mean_oscillation(sampler, center, r, clip, rule)?);
        r *= mu;
    }
    Ok(OscillationProbe { center, radii, phi })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// `φ ≈ constant · r^β`.
    pub beta: f64,
    pub constant: f64,
    /// RMS residual of the fit in log space.
    pub residual: f64,
    pub points: usize,
}

/// Slope, intercept and RMS residual of the least-squares line.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let res = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>();
    (slope, intercept, sqrt(res / n))
}

/// Fit `log φ = log C + β log r` over the points with `φ > 0`.
pub fn decay_fit(radii: &[f64], phi: &[f64]) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .zip(phi)
        .filter(|(r, p)| **p > 0.0 && **r > 0.0)
        .map(|(r, p)| (ln(*r), ln(*p)))
        .collect();
    if pts.is_empty() {
        return Err(Error::DegenerateLadder("φ vanishes at every scale".into()));
    }
    if pts.len() < 4 {
        return Err(Error::DegenerateLadder(alloc::format!("{} positive ladder points, need 4", pts.len())));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (beta, intercept, residual) = least_squares(&xs, &ys);
    Ok(DecayFit { beta, constant: crate::math::exp(intercept), residual, points: pts.len() })
}

impl OscillationProbe {
    pub fn fit(&self) -> Result<DecayFit> {
        decay_fit(&self.radii, &self.phi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiniModulus {
    pub radii: Vec<f64>,
    pub omega: Vec<f64>,
}

fn grouped<'a>(samples: &'a [BallSample]) -> alloc::collections::BTreeMap<usize, Vec<&'a BallSample>> {
    let mut groups: alloc::collections::BTreeMap<usize, Vec<&BallSample>> = Default::default();
    for s in samples {
        groups.entry(s.tag).or_default().push(s);
    }
    groups
}

/// Best piecewise-constant L₂ approximation error over `B_r(x) ∩ Ω`.
pub fn piecewise_constant_oscillation<S: PointSampler + ?Sized>(sampler: &S, x: Point, r: f64, rule: BallRule) -> Option<f64> {
    let samples = ball_samples(sampler, x, r, Clip::Domain, rule);
    if samples.is_empty() {
        return None;
    }
    let total: f64 = samples.iter().map(|s| s.weight).sum();
    let acc: f64 = grouped(&samples).values().map(|g| rms_deviation(g, sampler.width()).0).sum();
    Some(sqrt(acc / total))
}

/// Best piecewise-linear L₂ approximation error over `B_r(x) ∩ Ω`, for
/// comparison against the piecewise-constant class.
pub fn piecewise_linear_oscillation<S: PointSampler + ?Sized>(sampler: &S, x: Point, r: f64, rule: BallRule) -> Option<f64> {
    let samples = ball_samples(sampler, x, r, Clip::Domain, rule);
    if samples.is_empty() {
        return None;
    }
    let total: f64 = samples.iter().map(|s| s.weight).sum();
    let mut acc = 0.0;
    for group in grouped(&samples).values() {
        for c in 0..sampler.width() {
            // Normal equations in the basis (1, (x-x0)/r, (y-y0)/r).
            let mut m = [[0.0; 3]; 3];
            let mut rhs = [0.0; 3];
            for s in group {
                let b = [1.0, (s.point.x - x.x) / r, (s.point.y - x.y) / r];
                for i in 0..3 {
                    rhs[i] += s.weight * b[i] * s.values[c];
                    for j in 0..3 {
                        m[i][j] += s.weight * b[i] * b[j];
                    }
                }
            }
            let coef = solve3(m, rhs);
            for s in group {
                let b = [1.0, (s.point.x - x.x) / r, (s.point.y - x.y) / r];
                let fit: f64 = (0..3).map(|i| coef[i] * b[i]).sum();
                acc += s.weight * (s.values[c] - fit).powi(2);
            }
        }
    }
    Some(sqrt(acc / total))
}

/// Gaussian elimination with partial pivoting; singular directions get 0.
fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    let scale = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut pivot_ok = [true; 3];
    for c in 0..3 {
        let p = (c..3).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, p);
        b.swap(c, p);
        if m[c][c].abs() <= 1e-12 * scale {
            pivot_ok[c] = false;
            continue;
        }
        for r in (c + 1)..3 {
            let f = m[r][c] / m[c][c];
            for k in c..3 {
                m[r][k] -= f * m[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = [0.0; 3];
    for c in (0..3).rev() {
        if !pivot_ok[c] {
            continue;
        }
        let s: f64 = ((c + 1)..3).map(|k| m[c][k] * x[k]).sum();
        x[c] = (b[c] - s) / m[c][c];
    }
    x
}

/// `ω(r) = sup_x` of the best piecewise-constant L₂ oscillation over the
/// sampled centers.
pub fn dini_modulus<S: PointSampler + ?Sized>(sampler: &S, radii: &[f64], centers: &[Point], rule: BallRule) -> DiniModulus {
    let omega = radii
        .iter()
        .map(|&r| {
            centers
                .iter()
                .filter_map(|&c| piecewise_constant_oscillation(sampler, c, r, rule))
                .fold(0.0, f64::max)
        })
        .collect();
    DiniModulus { radii: radii.to_vec(), omega }
}

impl DiniModulus {
    /// Decay exponent of ω over the ladder.
    pub fn fit(&self) -> Result<DecayFit> {
        decay_fit(&self.radii, &self.omega)
    }
}

/// Geometric ladder `r0, r0 μ, …`.
pub fn ladder(r0: f64, mu: f64, levels: usize) -> Vec<f64> {
    (0..levels).map(|k| r0 * powf(mu, k as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{InterfaceCurve, OuterBoundary};

    fn linear_gradient(shift: f64, scale: f64) -> FnSampler<impl Fn(Point, &mut [f64]) -> Option<usize>> {
        FnSampler {
            width: 2,
            f: move |p: Point, out: &mut [f64]| {
                out[0] = scale * p.x + shift;
                out[1] = shift;
                Some(1)
            },
        }
    }

    #[test]
    fn oscillation_of_linear_gradient_is_half_radius() {
        let rule = BallRule::default();
        let o = Point::new(0.0, 0.0);
        for r in [1.0, 0.3, 0.01] {
            let phi = mean_oscillation(&linear_gradient(0.0, 1.0), o, r, Clip::Domain, rule).unwrap();
            assert!((phi - r / 2.0).abs() < 1e-12 * r.max(1.0), "{phi}");
            let shifted = mean_oscillation(&linear_gradient(7.5, 1.0), o, r, Clip::Domain, rule).unwrap();
            assert!((shifted - phi).abs() < 1e-12);
            let doubled = mean_oscillation(&linear_gradient(0.0, 2.0), o, r, Clip::Domain, rule).unwrap();
            assert!((doubled - 2.0 * phi).abs() < 1e-12);
        }
        let constant = FnSampler { width: 2, f: |_: Point, o: &mut [f64]| {
            o.fill(3.0);
            Some(1)
        } };
        assert!(mean_oscillation(&constant, o, 0.5, Clip::Domain, rule).unwrap() < 1e-12);
        let nowhere = FnSampler { width: 1, f: |_: Point, _: &mut [f64]| None };
        assert!(matches!(mean_oscillation(&nowhere, o, 0.5, Clip::Domain, rule), Err(Error::EmptyRegion)));
    }

    #[test]
    fn decay_fit_recovers_power_laws() {
        let radii = ladder(1.0, 0.5, 6);
        let fit = decay_fit(&radii, &radii).unwrap();
        assert!((fit.beta - 1.0).abs() < 1e-9);
        let phi: Vec<f64> = radii.iter().map(|r| 3.0 * powf(*r, 0.5)).collect();
        let fit = decay_fit(&radii, &phi).unwrap();
        assert!((fit.beta - 0.5).abs() < 1e-9 && (fit.constant - 3.0).abs() < 1e-6);
        assert!(matches!(decay_fit(&radii, &[0.0; 6]), Err(Error::DegenerateLadder(_))));
        assert!(matches!(decay_fit(&radii[..3], &phi[..3]), Err(Error::DegenerateLadder(_))));
    }

    fn partition() -> DomainPartition {
        DomainPartition::new(
            OuterBoundary::Curve(InterfaceCurve::circle(Point::new(0.0, 0.0), 1.0).unwrap()),
            vec![InterfaceCurve::circle(Point::new(0.0, 0.0), 0.5).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn dini_modulus_examples() {
        let part = partition();
        let radii = ladder(0.2, 0.5, 5);
        let centers = [Point::new(0.0, 0.0), Point::new(0.5, 0.0), Point::new(0.7, 0.1), Point::new(-0.2, 0.4)];
        let pc = CoefficientField::for_partition(1, &part)
            .with_scalar_coefficient(1, |_| 5.0)
            .with_scalar_coefficient(2, |_| 1.0);
        let s = TensorComponent { coeff: &pc, partition: &part, index: [0, 0, 0, 0] };
        let w = dini_modulus(&s, &radii, &centers, BallRule::default());
        assert!(w.omega.iter().all(|v| *v <= 1e-10), "{w:?}");

        let lin = CoefficientField::for_partition(1, &part)
            .with_scalar_coefficient(1, |p| 2.0 + p.x)
            .with_scalar_coefficient(2, |p| 2.0 + p.x);
        let s = TensorComponent { coeff: &lin, partition: &part, index: [0, 0, 0, 0] };
        let w = dini_modulus(&s, &radii, &[Point::new(0.25, 0.0)], BallRule::default());
        for (r, om) in w.radii.iter().zip(&w.omega) {
            assert!((om / r - 0.5).abs() < 0.05, "r {r}: {om}");
        }
        for c in &centers[..3] {
            let pc = piecewise_constant_oscillation(&s, *c, 0.2, BallRule::default()).unwrap();
            let pl = piecewise_linear_oscillation(&s, *c, 0.2, BallRule::default()).unwrap();
            assert!(pl <= pc + 1e-12);
        }
    }

    #[test]
    fn dini_modulus_of_holder_field_decays_at_its_exponent() {
        let part = partition();
        let gamma = 0.5;
        let c = CoefficientField::for_partition(1, &part)
            .with_scalar_coefficient(1, move |p| 2.0 + powf(p.norm(), gamma))
            .with_scalar_coefficient(2, move |p| 2.0 + powf(p.norm(), gamma));
        let s = TensorComponent { coeff: &c, partition: &part, index: [1, 1, 0, 0] };
        let w = dini_modulus(&s, &ladder(0.2, 0.5, 6), &[Point::new(0.0, 0.0)], BallRule::default());
        let fit = w.fit().unwrap();
        assert!((fit.beta - gamma).abs() < 0.15, "{fit:?}");
    }
}
