//! Transmission problems: direct weak solve and the Neumann reduction.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::analysis::norms::{data_norms, max_gradient_per_subdomain, norms, DataNorms, FieldNorms};
use crate::error::{Error, Result};
use crate::fem::assembly::{
    assemble_interface_load, assemble_load, assemble_mass_vector, assemble_stiffness, LoadData, Region,
};
use crate::fem::{
    solve_dirichlet, solve_mean_zero, verify_ellipticity, BasisOrder, CoefficientField, DiscreteField,
    EllipticityReport, FeSpace, SolverOptions, SolverStats,
};
use crate::geometry::{DomainPartition, Point};
use crate::math::sqrt;
use crate::mesh::{generate_fitted_mesh, MeshStatistics};
use alloc::sync::Arc;

/// Sign of the interface line load in `a(u, φ) = -ℓ(φ) + σ Σ_j ∫_{Γ_j} g_j φ`
/// for `g_j = [(A∇u - F)·ν]` with `ν` pointing into the inclusion.
/// [`sign_self_test`] re-derives it from a manufactured solution.
pub const INTERFACE_SIGN: f64 = -1.0;

#[derive(Debug, Clone)]
pub struct TransmissionProblem {
    pub partition: DomainPartition,
    /// Coefficients per subdomain and `g_j` per inclusion curve.
    pub coeff: CoefficientField,
}

impl TransmissionProblem {
    pub fn new(partition: DomainPartition, coeff: CoefficientField) -> Result<TransmissionProblem> {
        if coeff.components == 0 {
            return Err(Error::Precondition("the unknown needs at least one component".into()));
        }
        if coeff.subdomains.len() != partition.subdomain_count() {
            return Err(Error::Precondition(format!(
                "{} coefficient sets for {} subdomains",
                coeff.subdomains.len(),
                partition.subdomain_count()
            )));
        }
        if coeff.interfaces.len() != partition.inclusions.len() {
            return Err(Error::Precondition(format!(
                "{} interface data for {} inclusions",
                coeff.interfaces.len(),
                partition.inclusions.len()
            )));
        }
        Ok(TransmissionProblem { partition, coeff })
    }

    pub fn components(&self) -> usize {
        self.coeff.components
    }

    /// Fails with `Precondition` if the sampled ellipticity check fails.
    pub fn validate_ellipticity(&self, kappa: f64, seed: u64) -> Result<EllipticityReport> {
        let r = verify_ellipticity(&self.coeff, &self.partition, kappa, 64, 256, seed);
        if r.pass {
            Ok(r)
        } else {
            Err(Error::Precondition(format!(
                "ellipticity fails for κ = {kappa}: min A ξ·ξ/|ξ|² = {}, max |A^kl| = {}",
                r.worst_ratio, r.max_block_norm
            )))
        }
    }

    /// Same problem with every `g_j` multiplied by `s`.
    pub fn with_scaled_interfaces(&self, s: f64) -> TransmissionProblem {
        TransmissionProblem { partition: self.partition.clone(), coeff: self.coeff.scale_interfaces(s) }
    }
}

/// `c_j = ∫_{∂Ω_j} g_j / |Ω_j|`, the solvability constant of
/// `Δw = c_j` in `Ω_j`, `∂w/∂n = g_j` on the inclusion curve (outward
/// normal) and `∂w/∂n = 0` on curves of enclosed inclusions. Computed
/// from the exact curve and area, one value per component.
pub fn compatibility_constant(partition: &DomainPartition, coeff: &CoefficientField, inclusion: usize) -> Result<Vec<f64>> {
    let curve = partition.inclusions.get(inclusion).ok_or(Error::UnknownInterface(inclusion))?;
    let n = coeff.components;
    let mut acc = vec![0.0; n];
    if coeff.interfaces.get(inclusion).and_then(|g| g.as_ref()).is_none() {
        return Ok(acc);
    }
    let mut g = vec![0.0; n];
    for node in curve.boundary_quadrature(8, 512) {
        coeff.interface(inclusion, node.point, node.param, &mut g);
        for i in 0..n {
            acc[i] += node.weight * g[i];
        }
    }
    let area = partition.subdomain_area(partition.inclusion_subdomain(inclusion));
    Ok(acc.into_iter().map(|v| v / area).collect())
}

/// Discrete solution of the auxiliary Neumann problem in one inclusion.
#[derive(Debug, Clone)]
pub struct AuxiliarySolution {
    pub inclusion: usize,
    /// `w_j` in the global numbering, zero outside the closed `Ω_j`.
    pub w: DiscreteField,
    /// Constant used in the discrete solve, `Σ ∫ g φ / |Ω_j|_h`.
    pub c_discrete: Vec<f64>,
    /// Constant from the exact curve and area.
    pub c_exact: Vec<f64>,
    pub stats: SolverStats,
    /// Relative compatibility mismatch seen by the mean-zero solve.
    pub mismatch: f64,
    pub w_h1: f64,
    pub g_l2: f64,
}

impl AuxiliarySolution {
    /// `‖w‖_{H¹(Ω_j)} / ‖g‖_{L₂(∂Ω_j)}`, zero for zero data.
    pub fn energy_ratio(&self) -> f64 {
        if self.g_l2 > 0.0 {
            self.w_h1 / self.g_l2
        } else {
            0.0
        }
    }
}

pub fn solve_inclusion_neumann(
    problem: &TransmissionProblem,
    space: &Arc<FeSpace>,
    inclusion: usize,
    opts: &SolverOptions,
) -> Result<AuxiliarySolution> {
    let partition = &problem.partition;
    if inclusion >= partition.inclusions.len() {
        return Err(Error::UnknownInterface(inclusion));
    }
    let n = problem.components();
    let tag = partition.inclusion_subdomain(inclusion);
    let region = Region::subdomain(space, tag);
    if region.is_empty() {
        return Err(Error::MeshFailure(format!("no elements in subdomain {tag}")));
    }
    let lap = CoefficientField::laplacian(n, partition.subdomain_count(), partition.inclusions.len());
    let k = assemble_stiffness(space, &lap, &region)?;
    let mut b = assemble_interface_load(space, partition, &problem.coeff, inclusion, 1.0, &region)?;
    let mass = assemble_mass_vector(space, &region);
    let area: f64 = mass.iter().sum();
    let c_discrete: Vec<f64> = (0..n).map(|i| (0..region.len()).map(|d| b[d * n + i]).sum::<f64>() / area).collect();
    for d in 0..region.len() {
        for i in 0..n {
            b[d * n + i] -= c_discrete[i] * mass[d];
        }
    }
    let sol = solve_mean_zero(&k, &b, &mass, n, opts)?;
    let w = DiscreteField::from_values(space, n, region.extend(&sol.values, n, space.scalar_dofs()))?;
    let c_exact = compatibility_constant(partition, &problem.coeff, inclusion)?;
    let w_h1 = norms(&w).h1(tag);
    let g_l2 = data_norms(&problem.coeff, space, partition).interfaces[inclusion];
    Ok(AuxiliarySolution { inclusion, w, c_discrete, c_exact, stats: sol.stats, mismatch: sol.mismatch, w_h1, g_l2 })
}

/// `F̃ = F - Σ_j 1_{Ω_j} ∇w_j` and `f̃ = f + Σ_j 1_{Ω_j} c_j`, evaluated at
/// quadrature points with the element-wise gradient of `w_j`.
pub struct ReducedData<'a> {
    pub problem: &'a TransmissionProblem,
    /// Auxiliary solution per inclusion.
    pub auxiliaries: Vec<&'a AuxiliarySolution>,
}

pub fn build_reduced_data<'a>(
    problem: &'a TransmissionProblem,
    auxiliaries: &'a [AuxiliarySolution],
) -> Result<ReducedData<'a>> {
    let mut slots: Vec<Option<&AuxiliarySolution>> = vec![None; problem.partition.inclusions.len()];
    for a in auxiliaries {
        if a.inclusion >= slots.len() {
            return Err(Error::UnknownInterface(a.inclusion));
        }
        slots[a.inclusion] = Some(a);
    }
    let auxiliaries = slots
        .into_iter()
        .enumerate()
        .map(|(j, a)| a.ok_or(Error::MissingAuxiliary(j)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReducedData { problem, auxiliaries })
}

impl ReducedData<'_> {
    fn inclusion_of(&self, tag: usize) -> Option<&AuxiliarySolution> {
        (tag < self.problem.partition.subdomain_count()).then(|| self.auxiliaries[tag - 1])
    }

    /// `F̃` in element `tri` at barycentric `bary`.
    pub fn reduced_flux(&self, tri: usize, tag: usize, p: Point, bary: [f64; 3], out: &mut [f64]) {
        self.problem.coeff.flux(tag, p, out);
        if let Some(a) = self.inclusion_of(tag) {
            let mut g = vec![0.0; out.len()];
            a.w.gradient_in(tri, bary, &mut g);
            for (o, gw) in out.iter_mut().zip(&g) {
                *o -= gw;
            }
        }
    }

    /// `f̃` in subdomain `tag`.
    pub fn reduced_source(&self, tag: usize, p: Point, out: &mut [f64]) {
        self.problem.coeff.source(tag, p, out);
        if let Some(a) = self.inclusion_of(tag) {
            for (o, c) in out.iter_mut().zip(&a.c_discrete) {
                *o += c;
            }
        }
    }
}

impl LoadData for ReducedData<'_> {
    fn components(&self) -> usize {
        self.problem.components()
    }

    fn eval(&self, tri: usize, tag: usize, p: Point, bary: [f64; 3], flux: &mut [f64], source: &mut [f64]) -> bool {
        self.reduced_flux(tri, tag, p, bary, flux);
        self.reduced_source(tag, p, source);
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    Direct,
    Reduction,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Direct => "direct",
            Pipeline::Reduction => "reduction",
        }
    }
}

/// Everything a solve produced. Reports are not modified after creation.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub pipeline: Pipeline,
    pub u: DiscreteField,
    pub sigma: f64,
    pub stats: SolverStats,
    pub auxiliaries: Vec<AuxiliarySolution>,
    pub u_norms: FieldNorms,
    pub data: DataNorms,
    /// `‖u‖_{H¹} / (‖F‖ + Σ‖g_j‖ + ‖f‖)`, zero for zero data.
    pub energy_ratio: f64,
    /// `max |∇u_h|` per subdomain.
    pub max_gradient: Vec<f64>,
    /// `max_ij |K_ij - K_ji|` of the stiffness matrix.
    pub asymmetry: f64,
    pub mesh: MeshStatistics,
}

impl SolveReport {
    pub fn dofs(&self) -> usize {
        self.u.dof_count()
    }
}

fn global_solve(
    problem: &TransmissionProblem,
    space: &Arc<FeSpace>,
    pipeline: Pipeline,
    rhs: Vec<f64>,
    auxiliaries: Vec<AuxiliarySolution>,
    sigma: f64,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let n = problem.components();
    let k = assemble_stiffness(space, &problem.coeff, &Region::whole(space))?;
    let asymmetry = k.asymmetry();
    let (values, stats) = solve_dirichlet(&k, &rhs, &space.boundary, n, opts)?;
    let u = DiscreteField::from_values(space, n, values)?;
    let u_norms = norms(&u);
    let data = data_norms(&problem.coeff, space, &problem.partition);
    let total = data.total();
    let energy_ratio = if total > 0.0 { u_norms.h1_total() / total } else { 0.0 };
    let max_gradient = max_gradient_per_subdomain(&u);
    let mesh = space.mesh.statistics(&problem.partition);
    Ok(SolveReport { pipeline, u, sigma, stats, auxiliaries, u_norms, data, energy_ratio, max_gradient, asymmetry, mesh })
}

fn direct_rhs(problem: &TransmissionProblem, space: &FeSpace, sigma: f64) -> Result<Vec<f64>> {
    let region = Region::whole(space);
    let mut rhs: Vec<f64> = assemble_load(space, &problem.coeff, &region).into_iter().map(|v| -v).collect();
    for j in 0..problem.partition.inclusions.len() {
        let g = assemble_interface_load(space, &problem.partition, &problem.coeff, j, sigma, &region)?;
        for (r, v) in rhs.iter_mut().zip(g) {
            *r += v;
        }
    }
    Ok(rhs)
}

fn solve_direct_with_sign(
    problem: &TransmissionProblem,
    space: &Arc<FeSpace>,
    sigma: f64,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let rhs = direct_rhs(problem, space, sigma)?;
    global_solve(problem, space, Pipeline::Direct, rhs, Vec::new(), sigma, opts)
}

/// One global solve with the interface data as line loads.
pub fn solve_direct(problem: &TransmissionProblem, space: &Arc<FeSpace>, opts: &SolverOptions) -> Result<SolveReport> {
    solve_direct_with_sign(problem, space, INTERFACE_SIGN, opts)
}

/// One Neumann solve per inclusion, then a Dirichlet solve with `F̃`, `f̃`.
pub fn solve_by_reduction(problem: &TransmissionProblem, space: &Arc<FeSpace>, opts: &SolverOptions) -> Result<SolveReport> {
    let auxiliaries = (0..problem.partition.inclusions.len())
        .map(|j| solve_inclusion_neumann(problem, space, j, opts))
        .collect::<Result<Vec<_>>>()?;
    let rhs = {
        let reduced = build_reduced_data(problem, &auxiliaries)?;
        assemble_load(space, &reduced, &Region::whole(space)).into_iter().map(|v| -v).collect()
    };
    global_solve(problem, space, Pipeline::Reduction, rhs, auxiliaries, INTERFACE_SIGN, opts)
}

/// Reduction for three or more subdomains.
pub fn solve_multi(problem: &TransmissionProblem, space: &Arc<FeSpace>, opts: &SolverOptions) -> Result<SolveReport> {
    if problem.partition.subdomain_count() < 3 {
        return Err(Error::Precondition(format!(
            "solve_multi needs at least 3 subdomains, got {}",
            problem.partition.subdomain_count()
        )));
    }
    solve_by_reduction(problem, space, opts)
}

/// Relative H¹ distance `‖a - b‖ / ‖b‖` of two fields on one space.
pub fn relative_h1_difference(a: &DiscreteField, b: &DiscreteField) -> f64 {
    let d = norms(&a.difference(b)).h1_total();
    let r = norms(b).h1_total();
    if r > 0.0 {
        d / r
    } else {
        d
    }
}

/// Solves the built-in manufactured problem with both candidate signs and
/// returns the one whose solution matches the exact solution.
pub fn sign_self_test(h: f64) -> Result<f64> {
    use crate::analysis::manufactured::ManufacturedSolution;
    use crate::analysis::norms::error_vs_exact;
    let ms = ManufacturedSolution::ms1();
    let problem = TransmissionProblem::new(ms.partition.clone(), ms.coeff.clone())?;
    let space = FeSpace::new(generate_fitted_mesh(&problem.partition, h)?, BasisOrder::P1);
    let opts = SolverOptions::default();
    let mut best = (f64::INFINITY, 0.0);
    for sigma in [1.0, -1.0] {
        let rep = solve_direct_with_sign(&problem, &space, sigma, &opts)?;
        let e = error_vs_exact(&rep.u, &ms).h1();
        if e < best.0 {
            best = (e, sigma);
        }
    }
    let scale = sqrt(crate::math::PI);
    if best.0 > 0.5 * scale {
        return Err(Error::Precondition(format!("sign self-test inconclusive: best H¹ error {}", best.0)));
    }
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::manufactured::ManufacturedSolution;
    use crate::analysis::norms::error_vs_exact;
    use crate::geometry::{InterfaceCurve, OuterBoundary};

    #[test]
    fn pinned_sign_agrees_with_self_test() {
        assert_eq!(sign_self_test(0.1).unwrap(), INTERFACE_SIGN);
    }

    #[test]
    fn ms1_direct_and_reduction_agree() {
        let ms = ManufacturedSolution::ms1();
        let problem = TransmissionProblem::new(ms.partition.clone(), ms.coeff.clone()).unwrap();
        let space = FeSpace::new(generate_fitted_mesh(&problem.partition, 0.1).unwrap(), BasisOrder::P1);
        let opts = SolverOptions::default();
        let d = solve_direct(&problem, &space, &opts).unwrap();
        let r = solve_by_reduction(&problem, &space, &opts).unwrap();
        assert!(error_vs_exact(&d.u, &ms).h1() < 0.3);
        assert!(relative_h1_difference(&r.u, &d.u) < 1e-6);
        assert_eq!(r.auxiliaries.len(), 1);
        assert!(r.auxiliaries[0].c_exact[0].abs() < 1e-12);
    }

    #[test]
    fn zero_data_gives_zero() {
        let part = DomainPartition::new(
            OuterBoundary::Curve(InterfaceCurve::circle(Point::new(0.0, 0.0), 1.0).unwrap()),
            vec![InterfaceCurve::circle(Point::new(0.1, 0.0), 0.4).unwrap()],
        )
        .unwrap();
        let c = CoefficientField::for_partition(1, &part);
        let problem = TransmissionProblem::new(part, c).unwrap();
        let space = FeSpace::new(generate_fitted_mesh(&problem.partition, 0.15).unwrap(), BasisOrder::P1);
        for rep in [
            solve_direct(&problem, &space, &SolverOptions::default()).unwrap(),
            solve_by_reduction(&problem, &space, &SolverOptions::default()).unwrap(),
        ] {
            assert_eq!(rep.u.max_abs(), 0.0);
            assert_eq!(rep.energy_ratio, 0.0);
        }
        assert!(matches!(
            solve_multi(&problem, &space, &SolverOptions::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn missing_auxiliary_is_reported() {
        let ms = ManufacturedSolution::ms1();
        let problem = TransmissionProblem::new(ms.partition.clone(), ms.coeff.clone()).unwrap();
        assert!(matches!(build_reduced_data(&problem, &[]), Err(Error::MissingAuxiliary(0))));
    }

    #[test]
    fn mismatched_data_is_rejected() {
        let ms = ManufacturedSolution::ms1();
        let c = CoefficientField::laplacian(1, 3, 1);
        assert!(matches!(TransmissionProblem::new(ms.partition, c), Err(Error::Precondition(_))));
    }
}
