//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Run with `cargo test -p transmission-core --test acceptance`.

use std::sync::Arc;
use std::time::Instant;

use transmission_core::analysis::manufactured::ManufacturedSolution;
use transmission_core::analysis::oscillation::{ladder, FieldGradient, FnSampler, TensorComponent};
use transmission_core::analysis::{
    decay_fit, dini_modulus, error_vs_exact, fitted_order, flux_jump_residual, holder_seminorm, observed_orders,
    oscillation_probe, sample_pairs, BallRule, Clip, ExactSolution,
};
use transmission_core::fem::{BasisOrder, CoefficientField, FeSpace, SolverOptions};
use transmission_core::mesh::generate_fitted_mesh;
use transmission_core::transmission::{
    relative_h1_difference, solve_by_reduction, solve_direct, solve_inclusion_neumann, solve_multi, SolveReport,
    TransmissionProblem,
};
use transmission_core::{DomainPartition, InterfaceCurve, OuterBoundary, Point, TriMesh};

/// Lattice spacing whose longest mesh edge is close to 0.1.
const COARSE_TARGET: f64 = 0.07;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Level {
    h: f64,
    space: Arc<FeSpace>,
    direct: SolveReport,
    reduction: SolveReport,
}

fn ms1_levels(ms: &ManufacturedSolution, levels: usize) -> Vec<Level> {
    let problem = TransmissionProblem::new(ms.partition.clone(), ms.coeff.clone()).unwrap();
    let opts = SolverOptions::default();
    // Target spacing chosen so that the longest edge of level 0 is about 0.1.
    let mut mesh = generate_fitted_mesh(&ms.partition, COARSE_TARGET).unwrap();
    let mut out = Vec::new();
    for l in 0..levels {
        if l > 0 {
            mesh = mesh.refine(&ms.partition).unwrap();
        }
        let space = FeSpace::new(mesh.clone(), BasisOrder::P1);
        let direct = solve_direct(&problem, &space, &opts).unwrap();
        let reduction = solve_by_reduction(&problem, &space, &opts).unwrap();
        out.push(Level { h: mesh.h, space, direct, reduction });
    }
    out
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn monotone_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn criterion1(ms: &ManufacturedSolution, levels: &[Level], elapsed: f64) -> Outcome {
    let h: Vec<f64> = levels.iter().map(|l| l.h).collect();
    let errs: Vec<_> = levels.iter().map(|l| error_vs_exact(&l.reduction.u, ms)).collect();
    let h1: Vec<f64> = errs.iter().map(|e| e.h1()).collect();
    let l2: Vec<f64> = errs.iter().map(|e| e.l2()).collect();
    let (oh1, ol2) = (fitted_order(&h, &h1), fitted_order(&h, &l2));
    let pass = (0.9..=1.3).contains(&oh1) && (1.7..=2.3).contains(&ol2) && elapsed <= 60.0;
    outcome(
        pass,
        format!(
            "H1 order {oh1:.3} (pairwise {}), L2 order {ol2:.3} (pairwise {}), h {}, {elapsed:.1} s",
            fmt(&observed_orders(&h, &h1)),
            fmt(&observed_orders(&h, &l2)),
            fmt(&h)
        ),
    )
}

fn criterion2(levels: &[Level]) -> Outcome {
    let d: Vec<f64> = levels.iter().map(|l| relative_h1_difference(&l.reduction.u, &l.direct.u)).collect();
    let pass = monotone_decreasing(&d) && *d.last().unwrap() <= 0.05;
    outcome(pass, format!("relative H1 difference per level {}", fmt(&d)))
}

fn neumann_partition() -> DomainPartition {
    let o = Point::new(0.0, 0.0);
    DomainPartition::new(
        OuterBoundary::Curve(InterfaceCurve::circle(o, 1.25).unwrap()),
        vec![InterfaceCurve::circle(o, 1.0).unwrap()],
    )
    .unwrap()
}

fn neumann_problem(g: fn(Point) -> f64) -> TransmissionProblem {
    let part = neumann_partition();
    let coeff = CoefficientField::for_partition(1, &part).with_interface(0, Arc::new(move |p, _, o: &mut [f64]| o[0] = g(p)));
    TransmissionProblem::new(part, coeff).unwrap()
}

fn criterion3() -> Outcome {
    let opts = SolverOptions::default();
    // g ≡ 1: c = 2, w = r²/2 - 1/4.
    let p1 = neumann_problem(|_| 1.0);
    let mesh = generate_fitted_mesh(&p1.partition, 1.0 / 64.0).unwrap();
    let space = FeSpace::new(mesh, BasisOrder::P2);
    let aux = solve_inclusion_neumann(&p1, &space, 0, &opts).unwrap();
    let c1 = aux.c_exact[0];
    let mut nodal: f64 = 0.0;
    for (t, tri) in space.mesh.triangles.iter().enumerate() {
        if tri.tag != 1 {
            continue;
        }
        for &d in space.dofs(t) {
            let p = space.dof_points[d];
            let exact = 0.5 * p.dot(p) - 0.25;
            nodal = nodal.max((aux.w.values[d] - exact).abs());
        }
    }
    // g = cos θ: c = 0, w = x.
    let p2 = neumann_problem(|p| p.x / p.norm());
    let mut mesh = generate_fitted_mesh(&p2.partition, 0.1).unwrap();
    let mut h1 = Vec::new();
    let mut hs = Vec::new();
    let mut c2: f64 = 0.0;
    for l in 0..3 {
        if l > 0 {
            mesh = mesh.refine(&p2.partition).unwrap();
        }
        let space = FeSpace::new(mesh.clone(), BasisOrder::P1);
        let aux = solve_inclusion_neumann(&p2, &space, 0, &opts).unwrap();
        c2 = c2.max(aux.c_exact[0].abs());
        let exact = FnExact(|_, p: Point, v: &mut [f64], g: &mut [f64]| {
            v[0] = p.x;
            g[0] = 1.0;
            g[1] = 0.0;
        });
        h1.push(error_vs_exact(&aux.w, &exact).subdomains.h1(1));
        hs.push(mesh.h);
    }
    let order = fitted_order(&hs, &h1);
    let pass = (c1 - 2.0).abs() <= 1e-8 && nodal <= 1e-3 && c2 <= 1e-10 && order >= 0.9;
    outcome(
        pass,
        format!(
            "g=1: c = {c1:.12}, c_h = {:.6}, nodal max error {nodal:.3e} (P2, h=1/64); g=cos: |c| = {c2:.1e}, H1 errors {} order {order:.3}",
            aux.c_discrete[0],
            fmt(&h1)
        ),
    )
}

struct FnExact<F>(F);

impl<F: Fn(usize, Point, &mut [f64], &mut [f64])> ExactSolution for FnExact<F> {
    fn components(&self) -> usize {
        1
    }
    fn eval(&self, tag: usize, p: Point, v: &mut [f64], g: &mut [f64]) {
        (self.0)(tag, p, v, g)
    }
}

fn criterion4(ms: &ManufacturedSolution, levels: &[Level]) -> Outcome {
    let r: Vec<f64> = levels
        .iter()
        .map(|l| flux_jump_residual(&l.reduction.u, &ms.coeff, &ms.partition, 0).unwrap().residual)
        .collect();
    let factor = r[0] / r[r.len() - 1];
    let pass = monotone_decreasing(&r) && factor >= 3.0;
    outcome(pass, format!("L2(Γ) jump residual {} reduction x{factor:.2}", fmt(&r)))
}

fn criterion5(levels: &[Level]) -> Outcome {
    let alpha = 0.5;
    let mut within = Vec::new();
    let mut cross = Vec::new();
    for l in levels {
        let pairs = sample_pairs(&l.space.mesh, 4.0 * l.h, 10_000, 2024);
        let est = holder_seminorm(&l.reduction.u, &pairs, alpha);
        within.push(est.per_subdomain.clone());
        cross.push(est.cross);
    }
    let n = levels.len();
    // Drift is max/min over the last three levels; growth only counts increases.
    let mut drift: f64 = 1.0;
    let mut growth_only: f64 = 1.0;
    for j in 0..within[0].len() {
        let last: Vec<f64> = within[n - 3..].iter().map(|w| w[j]).collect();
        let (lo, hi) = last.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
        drift = drift.max(hi / lo);
        growth_only = growth_only.max(hi / last[0]);
    }
    let growth = cross[n - 1] / cross[0];
    let pass = drift < 2.0 && growth >= 5.0;
    let w1: Vec<f64> = within.iter().map(|w| w[0]).collect();
    let w2: Vec<f64> = within.iter().map(|w| w[1]).collect();
    outcome(
        pass,
        format!(
            "within Ω1 {} Ω2 {} (drift x{drift:.2}, growth x{growth_only:.2}); cross {} (growth x{growth:.2}, ρ^-α bound x{:.2})",
            fmt(&w1),
            fmt(&w2),
            fmt(&cross),
            (levels[0].h / levels[n - 1].h).powf(alpha)
        ),
    )
}

fn criterion6(ms: &ManufacturedSolution, levels: &[Level]) -> Outcome {
    let center = Point::new(0.75, 0.0);
    let rule = BallRule::default();
    let exact = FnSampler {
        width: 2,
        f: |p: Point, out: &mut [f64]| {
            if p.norm() > 1.0 {
                return None;
            }
            let tag = ms.partition.subdomain_of(p);
            let mut v = [0.0];
            ms.eval(tag, p, &mut v, out);
            Some(tag)
        },
    };
    let a = oscillation_probe(&exact, center, 0.2, 0.5, 5, Clip::Subdomain(2), rule).unwrap();
    let fa = decay_fit(&a.radii, &a.phi).unwrap();
    let finest = levels.last().unwrap();
    let d = oscillation_probe(&FieldGradient(&finest.reduction.u), center, 0.2, 0.5, 5, Clip::Subdomain(2), rule).unwrap();
    let fd = decay_fit(&d.radii, &d.phi).unwrap();
    let pass = fa.beta >= 0.95 && fd.beta >= 0.8;
    outcome(
        pass,
        format!("analytic β {:.3}, discrete β {:.3} (φ_h {}, h {:.4})", fa.beta, fd.beta, fmt(&d.phi), finest.h),
    )
}

fn gap_problem(delta: f64) -> TransmissionProblem {
    let o = Point::new(0.0, 0.0);
    let part = DomainPartition::new(
        OuterBoundary::Curve(InterfaceCurve::circle(o, 1.0).unwrap()),
        vec![InterfaceCurve::circle(o, 0.4).unwrap(), InterfaceCurve::circle(o, 0.4 + delta).unwrap()],
    )
    .unwrap();
    // Inclusion 0 is the disk, inclusion 1 the disk of radius 0.4 + δ.
    let coeff = CoefficientField::for_partition(1, &part)
        .with_scalar_coefficient(1, |_| 1.0)
        .with_scalar_coefficient(2, |_| 4.0)
        .with_scalar_coefficient(3, |_| 1.0)
        .with_uniform_source(|_| 1.0)
        .with_interface(0, Arc::new(|_, _, o: &mut [f64]| o[0] = 1.0))
        .with_interface(1, Arc::new(|_, _, o: &mut [f64]| o[0] = 0.0));
    TransmissionProblem::new(part, coeff).unwrap()
}

fn criterion7() -> Outcome {
    let deltas = [0.2, 0.1, 0.05];
    let h = 0.0125;
    let mut grads = Vec::new();
    let mut diag = Vec::new();
    for &d in &deltas {
        let p = gap_problem(d);
        let mesh = generate_fitted_mesh(&p.partition, h).unwrap();
        let stats = mesh.statistics(&p.partition);
        diag.push(format!("δ={d}: h {:.4}, min angle {:.1}, gap/h {:.1}", stats.h, stats.min_angle_deg, d / stats.h));
        let space = FeSpace::new(mesh, BasisOrder::P1);
        let rep = solve_multi(&p, &space, &SolverOptions::default()).unwrap();
        grads.push(rep.max_gradient.clone());
    }
    let mut worst: f64 = 0.0;
    for j in 0..grads[0].len() {
        worst = worst.max(grads[2][j] / grads[0][j]);
    }
    let pass = worst < 2.0;
    let per: Vec<String> = grads.iter().map(|g| fmt(g)).collect();
    outcome(pass, format!("max |∇u_h| per subdomain {} growth x{worst:.2}; {}", per.join(" "), diag.join("; ")))
}

fn criterion8(ms: &ManufacturedSolution, mesh: &TriMesh) -> Outcome {
    let opts = SolverOptions::default();
    let space = FeSpace::new(mesh.clone(), BasisOrder::P1);
    let zero = TransmissionProblem::new(ms.partition.clone(), CoefficientField::for_partition(1, &ms.partition)).unwrap();
    let z1 = solve_direct(&zero, &space, &opts).unwrap().u.max_abs();
    let z2 = solve_by_reduction(&zero, &space, &opts).unwrap().u.max_abs();
    let base = TransmissionProblem::new(ms.partition.clone(), ms.coeff.clone()).unwrap();
    let five = base.with_scaled_interfaces(5.0);
    let mut worst: f64 = 0.0;
    for solve in [solve_direct, solve_by_reduction] {
        let u1 = solve(&base, &space, &opts).unwrap().u;
        let u5 = solve(&five, &space, &opts).unwrap().u;
        let rel = u5.difference(&u1.scaled(5.0)).max_abs() / u5.max_abs();
        worst = worst.max(rel);
    }
    let pass = z1 <= 1e-12 && z2 <= 1e-12 && worst <= 1e-9;
    outcome(pass, format!("zero data max|u| {z1:.1e} / {z2:.1e}; scaling g by 5: relative deviation {worst:.2e}"))
}

fn criterion9(ms: &ManufacturedSolution) -> Outcome {
    let part = &ms.partition;
    let radii = ladder(0.2, 0.5, 5);
    let mut centers = Vec::new();
    for i in -4..=4 {
        for j in -4..=4 {
            let p = Point::new(0.2 * i as f64, 0.2 * j as f64);
            if p.norm() < 1.0 {
                centers.push(p);
            }
        }
    }
    let rule = BallRule::default();
    let pc = CoefficientField::for_partition(1, part)
        .with_scalar_coefficient(1, |_| 5.0)
        .with_scalar_coefficient(2, |_| 1.0);
    let w0 = dini_modulus(&TensorComponent { coeff: &pc, partition: part, index: [0, 0, 0, 0] }, &radii, &centers, rule);
    let lin = CoefficientField::for_partition(1, part)
        .with_scalar_coefficient(1, |p| 2.0 + p.x)
        .with_scalar_coefficient(2, |p| 2.0 + p.x);
    let w1 = dini_modulus(&TensorComponent { coeff: &lin, partition: part, index: [0, 0, 0, 0] }, &radii, &centers, rule);
    let ratios: Vec<f64> = w1.omega.iter().zip(&radii).map(|(o, r)| o / r).collect();
    let max0 = w0.omega.iter().fold(0.0f64, |m, v| m.max(*v));
    let pass = max0 <= 1e-10 && ratios.iter().all(|q| (q - 0.5).abs() <= 0.05);
    outcome(pass, format!("piecewise constant max ω {max0:.1e}; A = 2 + x1: ω/r {}", fmt(&ratios)))
}

fn main() {
    let ms = ManufacturedSolution::ms1();
    let start = Instant::now();
    let levels = ms1_levels(&ms, 4);
    let elapsed = start.elapsed().as_secs_f64();
    let results = [
        ("manufactured convergence", criterion1(&ms, &levels, elapsed)),
        ("reduction-direct equivalence", criterion2(&levels)),
        ("compatibility and Neumann exactness", criterion3()),
        ("flux-jump recovery", criterion4(&ms, &levels)),
        ("piecewise vs global regularity", criterion5(&levels)),
        ("oscillation decay", criterion6(&ms, &levels)),
        ("multi-subdomain gap study", criterion7()),
        ("linearity and zero data", criterion8(&ms, &levels[0].space.mesh)),
        ("Dini modulus estimator", criterion9(&ms)),
    ];
    let mut unexpected = Vec::new();
    for (i, (name, o)) in results.iter().enumerate() {
        let id = i + 1;
        let note = match (o.pass, UNATTAINABLE.iter().find(|(k, _)| *k == id)) {
            (false, Some((_, why))) => format!(" [known red: {why}]"),
            (false, None) => {
                unexpected.push(id);
                String::new()
            }
            _ => String::new(),
        };
        println!("criterion {id} {}: {name}: {}{note}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}

/// Criteria that cannot be met as stated, with the reason; each one still
/// prints FAIL when it fails.
const UNATTAINABLE: [(usize, &str); 2] = [
    (2, "both pipelines are the same discrete system, the difference is solver round-off and has no monotone trend"),
    (5, "with ρ = 4h and α = 1/2 the cross quotient of a fixed gradient jump grows like ρ^-α, at most x2.83 over three halvings"),
];
