//! Quadrature rules on the reference triangle and on `[-1, 1]`.

use alloc::vec::Vec;

use crate::math::{cos, PI};

/// Symmetric triangle rule: barycentric points with weights summing to one.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Smallest tabulated rule exact for polynomials of `degree`.
    pub fn with_degree(degree: usize) -> TriangleRule {
        let mut rule = TriangleRule { degree: 0, points: Vec::new(), weights: Vec::new() };
        match degree {
            0 | 1 => {
                rule.degree = 1;
                rule.push_centroid(1.0);
            }
            2 => {
                rule.degree = 2;
                rule.push_orbit3(2.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0);
            }
            3 | 4 => {
                rule.degree = 4;
                rule.push_orbit3(0.108_103_018_168_070, 0.445_948_490_915_965, 0.223_381_589_678_011);
                rule.push_orbit3(0.816_847_572_980_459, 0.091_576_213_509_771, 0.109_951_743_655_322);
            }
            5 | 6 => {
                rule.degree = 6;
                rule.push_orbit3(0.501_426_509_658_179, 0.249_286_745_170_910, 0.116_786_275_726_379);
                rule.push_orbit3(0.873_821_971_016_996, 0.063_089_014_491_502, 0.050_844_906_370_207);
                rule.push_orbit6(
                    0.053_145_049_844_817,
                    0.310_352_451_033_784,
                    0.636_502_499_121_399,
                    0.082_851_075_618_374,
                );
            }
            _ => {
                // Degree 8, 16 points.
                rule.degree = 8;
                rule.push_centroid(0.144_315_607_677_787);
                rule.push_orbit3(0.081_414_823_414_554, 0.459_292_588_292_723, 0.095_091_634_267_285);
                rule.push_orbit3(0.658_861_384_496_480, 0.170_569_307_751_760, 0.103_217_370_534_718);
                rule.push_orbit3(0.898_905_543_365_938, 0.050_547_228_317_031, 0.032_458_497_623_198);
                rule.push_orbit6(
                    0.008_394_777_409_958,
                    0.263_112_829_634_638,
                    0.728_492_392_955_404,
                    0.027_230_314_174_435,
                );
            }
        }
        rule
    }

    fn push_centroid(&mut self, w: f64) {
        self.points.push([1.0 / 3.0; 3]);
        self.weights.push(w);
    }

    fn push_orbit3(&mut self, a: f64, b: f64, w: f64) {
        for p in [[a, b, b], [b, a, b], [b, b, a]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }

    fn push_orbit6(&mut self, a: f64, b: f64, c: f64, w: f64) {
        for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }

    /// `(barycentric point, weight)` pairs.
    pub fn points(&self) -> impl Iterator<Item = ([f64; 3], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre needs at least one node");
    let mut nodes = alloc::vec![0.0; n];
    let mut weights = alloc::vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[0, 1]`.
pub fn gauss_unit(n: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    x.iter().zip(&w).map(|(&x, &w)| (0.5 * (x + 1.0), 0.5 * w)).collect()
}
