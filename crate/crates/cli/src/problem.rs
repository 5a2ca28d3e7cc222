//! Turns a validated configuration into core coefficient closures.

use std::sync::{Arc, Mutex};

use transmission_core::analysis::ExactSolution;
use transmission_core::fem::CoefficientField;
use transmission_core::geometry::Point;
use transmission_core::transmission::TransmissionProblem;

use crate::config::{Keyed, RunConfig, TensorSpec};
use crate::expr::{EvalError, Expr};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalFailure {
    pub key: String,
    pub point: Point,
    pub error: EvalError,
}

impl std::fmt::Display for EvalFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} at ({}, {}): {}", self.key, self.point.x, self.point.y, self.error)
    }
}

/// Records the first evaluation failure; failed evaluations yield zero so
/// assembly can finish and the caller reports the failure afterwards.
#[derive(Debug, Clone, Default)]
pub struct EvalGuard(Arc<Mutex<Option<EvalFailure>>>);

impl EvalGuard {
    pub fn eval(&self, k: &Keyed, p: Point) -> f64 {
        match k.expr.eval(p.x, p.y) {
            Ok(v) => v,
            Err(error) => {
                let mut slot = self.0.lock().expect("guard lock");
                if slot.is_none() {
                    *slot = Some(EvalFailure { key: k.key.clone(), point: p, error });
                }
                0.0
            }
        }
    }

    pub fn check(&self) -> Result<(), EvalFailure> {
        match self.0.lock().expect("guard lock").clone() {
            Some(f) => Err(f),
            None => Ok(()),
        }
    }
}

fn fill(guard: &EvalGuard, exprs: &[Keyed], p: Point, out: &mut [f64]) {
    for (o, e) in out.iter_mut().zip(exprs) {
        *o = guard.eval(e, p);
    }
}

pub fn coefficient_field(cfg: &RunConfig, guard: &EvalGuard) -> CoefficientField {
    let n = cfg.components;
    let mut coeff = CoefficientField::for_partition(n, &cfg.partition);
    for (idx, spec) in cfg.subdomains.iter().enumerate() {
        let j = idx + 1;
        match &spec.tensor {
            TensorSpec::Scalar(a) if a.expr == Expr::num(1.0) => {}
            TensorSpec::Scalar(a) => {
                let (a, g) = (a.clone(), guard.clone());
                coeff = coeff.with_scalar_coefficient(j, move |p| g.eval(&a, p));
            }
            TensorSpec::Matrix(m) => {
                let (m, g) = (m.clone(), guard.clone());
                coeff = coeff.with_tensor(
                    j,
                    Arc::new(move |p, out: &mut [f64]| {
                        out.fill(0.0);
                        for k in 0..2 {
                            for l in 0..2 {
                                let v = g.eval(&m[k][l], p);
                                for i in 0..n {
                                    out[((k * 2 + l) * n + i) * n + i] = v;
                                }
                            }
                        }
                    }),
                );
            }
        }
        if let Some(f) = &spec.flux {
            let (f, g) = (f.clone(), guard.clone());
            coeff = coeff.with_flux(j, Arc::new(move |p, out: &mut [f64]| fill(&g, &f, p, out)));
        }
        if let Some(s) = &spec.source {
            let (s, g) = (s.clone(), guard.clone());
            coeff = coeff.with_source(j, Arc::new(move |p, out: &mut [f64]| fill(&g, &s, p, out)));
        }
    }
    for (i, data) in cfg.interfaces.iter().enumerate() {
        if let Some(d) = data {
            let (d, g) = (d.clone(), guard.clone());
            coeff = coeff.with_interface(i, Arc::new(move |p, _t, out: &mut [f64]| fill(&g, &d, p, out)));
        }
    }
    coeff
}

pub fn problem(cfg: &RunConfig, guard: &EvalGuard) -> transmission_core::Result<TransmissionProblem> {
    TransmissionProblem::new(cfg.partition.clone(), coefficient_field(cfg, guard))
}

/// Closed-form solution from `[exact]` with symbolic gradients.
#[derive(Debug, Clone)]
pub struct ExprExact {
    pub components: usize,
    pub values: Vec<Vec<Keyed>>,
    /// `grad[j][k * n + i] = ∂_k u^i` on subdomain `j + 1`.
    pub grad: Vec<Vec<Keyed>>,
    pub guard: EvalGuard,
}

impl ExprExact {
    pub fn new(n: usize, values: &[Vec<Keyed>], guard: &EvalGuard) -> ExprExact {
        let grad = values
            .iter()
            .map(|u| {
                let mut g = Vec::with_capacity(2 * n);
                for wrt_y in [false, true] {
                    for c in u {
                        g.push(Keyed { key: format!("d/d{} {}", if wrt_y { "y" } else { "x" }, c.key), expr: c.expr.derivative(wrt_y) });
                    }
                }
                g
            })
            .collect();
        ExprExact { components: n, values: values.to_vec(), grad, guard: guard.clone() }
    }
}

impl ExactSolution for ExprExact {
    fn components(&self) -> usize {
        self.components
    }

    fn eval(&self, tag: usize, p: Point, value: &mut [f64], grad: &mut [f64]) {
        fill(&self.guard, &self.values[tag - 1], p, value);
        fill(&self.guard, &self.grad[tag - 1], p, grad);
    }
}
