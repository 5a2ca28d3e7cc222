//! Dirichlet and mean-zero Neumann linear solves.

use alloc::vec;
use alloc::vec::Vec;

use super::sparse::{bicgstab, norm, pcg, CsrMatrix, KrylovResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative residual target.
    pub tol: f64,
    /// Iteration cap; `None` means ten times the system size.
    pub max_iter: Option<usize>,
    /// Allowed `|Σ b| / ‖b‖` for a pure Neumann system.
    pub compat_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, max_iter: None, compat_tol: 1e-10 }
    }
}

impl SolverOptions {
    fn cap(&self, n: usize) -> usize {
        self.max_iter.unwrap_or(10 * n.max(10))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KrylovMethod {
    ConjugateGradient,
    BiCgStab,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverStats {
    pub method: KrylovMethod,
    pub iterations: usize,
    pub relative_residual: f64,
    pub unknowns: usize,
}

fn finish(method: KrylovMethod, r: KrylovResult, unknowns: usize) -> Result<SolverStats> {
    if !r.converged {
        return Err(Error::NoConvergence { iterations: r.iterations, residual: r.relative_residual });
    }
    Ok(SolverStats { method, iterations: r.iterations, relative_residual: r.relative_residual, unknowns })
}

/// Solve `K u = b` with `u = 0` on the fixed scalar dofs (each carrying
/// `n` components). Symmetric systems use CG, others BiCGSTAB.
pub fn solve_dirichlet(
    k: &CsrMatrix,
    rhs: &[f64],
    fixed: &[bool],
    n: usize,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolverStats)> {
    if rhs.len() != k.n || fixed.len() * n != k.n {
        return Err(Error::Dimension(alloc::format!(
            "matrix {}, rhs {}, constraints {}x{n}",
            k.n,
            rhs.len(),
            fixed.len()
        )));
    }
    let mask: Vec<bool> = (0..k.n).map(|r| fixed[r / n]).collect();
    let a = k.constrain(&mask);
    let b: Vec<f64> = rhs.iter().zip(&mask).map(|(&v, &m)| if m { 0.0 } else { v }).collect();
    let mut x = vec![0.0; k.n];
    let cap = opts.cap(k.n);
    let stats = if a.is_symmetric(1e-12) {
        finish(KrylovMethod::ConjugateGradient, pcg(&a, &b, &mut x, opts.tol, cap, |_| {}), k.n)?
    } else {
        finish(KrylovMethod::BiCgStab, bicgstab(&a, &b, &mut x, opts.tol, cap), k.n)?
    };
    Ok((x, stats))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanZeroSolution {
    pub values: Vec<f64>,
    pub stats: SolverStats,
    /// Lagrange multiplier per component, `Σ b / Σ m`.
    pub multiplier: Vec<f64>,
    /// `max_i |Σ b^i| / ‖b‖`.
    pub mismatch: f64,
}

/// Solve the singular Neumann system `K w = b` with `∫ w = 0`, where
/// `mass[d] = ∫ φ_d` and the kernel of `K` is the constants per component.
pub fn solve_mean_zero(
    k: &CsrMatrix,
    rhs: &[f64],
    mass: &[f64],
    n: usize,
    opts: &SolverOptions,
) -> Result<MeanZeroSolution> {
    if rhs.len() != k.n || mass.len() * n != k.n {
        return Err(Error::Dimension(alloc::format!("matrix {}, rhs {}, mass {}x{n}", k.n, rhs.len(), mass.len())));
    }
    let dofs = mass.len();
    let bnorm = norm(rhs);
    let sums: Vec<f64> = (0..n).map(|i| (0..dofs).map(|d| rhs[d * n + i]).sum()).collect();
    let mismatch = if bnorm > 0.0 { sums.iter().fold(0.0f64, |m, s| m.max(s.abs())) / bnorm } else { 0.0 };
    if mismatch > opts.compat_tol {
        return Err(Error::IncompatibleData { mismatch, tolerance: opts.compat_tol });
    }
    let total_mass: f64 = mass.iter().sum();
    let multiplier: Vec<f64> = sums.iter().map(|s| s / total_mass).collect();
    // Remove the round-off part of b outside the range of K.
    let mut b = rhs.to_vec();
    for i in 0..n {
        let mean = sums[i] / dofs as f64;
        for d in 0..dofs {
            b[d * n + i] -= mean;
        }
    }
    let project = |v: &mut [f64]| {
        for i in 0..n {
            let mean = (0..dofs).map(|d| v[d * n + i]).sum::<f64>() / dofs as f64;
            for d in 0..dofs {
                v[d * n + i] -= mean;
            }
        }
    };
    let mut x = vec![0.0; k.n];
    let r = pcg(k, &b, &mut x, opts.tol, opts.cap(k.n), project);
    let stats = finish(KrylovMethod::ConjugateGradient, r, k.n)?;
    for i in 0..n {
        let mean = (0..dofs).map(|d| mass[d] * x[d * n + i]).sum::<f64>() / total_mass;
        for d in 0..dofs {
            x[d * n + i] -= mean;
        }
    }
    Ok(MeanZeroSolution { values: x, stats, multiplier, mismatch })
}
