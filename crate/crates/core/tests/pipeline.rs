use std::sync::Arc;

use transmission_core::analysis::manufactured::ManufacturedSolution;
use transmission_core::analysis::{error_vs_exact, flux_jump_residual, ExactSolution};
use transmission_core::fem::{BasisOrder, CoefficientField, DiscreteField, FeSpace, SolverOptions};
use transmission_core::math::{wrap, PI, TAU};
use transmission_core::mesh::{generate_fitted_mesh, CurveId, CurvePosition, InterfaceEdge, Triangle};
use transmission_core::transmission::{
    build_reduced_data, relative_h1_difference, solve_by_reduction, solve_direct, solve_inclusion_neumann,
    solve_multi, TransmissionProblem,
};
use transmission_core::{DomainPartition, InterfaceCurve, OuterBoundary, Point, TriMesh};

fn circle(x: f64, y: f64, r: f64) -> InterfaceCurve {
    InterfaceCurve::circle(Point::new(x, y), r).unwrap()
}

fn opts() -> SolverOptions {
    SolverOptions::default()
}

#[test]
fn poisson_on_unit_square_matches_series_value() {
    let part = DomainPartition::new(
        OuterBoundary::Box { min: Point::new(0.0, 0.0), max: Point::new(1.0, 1.0) },
        vec![],
    )
    .unwrap();
    // div ∇u = f with f = -1, i.e. -Δu = 1.
    let coeff = CoefficientField::for_partition(1, &part).with_uniform_source(|_| -1.0);
    let problem = TransmissionProblem::new(part, coeff).unwrap();
    let space = FeSpace::new(generate_fitted_mesh(&problem.partition, 1.0 / 32.0).unwrap(), BasisOrder::P1);
    let rep = solve_direct(&problem, &space, &opts()).unwrap();
    let mut v = [0.0];
    rep.u.value_at(Point::new(0.5, 0.5), &mut v).unwrap();
    assert!((v[0] - 0.0736713).abs() < 5e-3, "u(1/2, 1/2) = {}", v[0]);
}

#[test]
fn smooth_solution_converges_and_recovers_zero_jump() {
    let ms = ManufacturedSolution::smooth_zero_jump();
    let problem = TransmissionProblem::new(ms.partition.clone(), ms.coeff.clone()).unwrap();
    let mut mesh = generate_fitted_mesh(&ms.partition, 0.1).unwrap();
    let (mut l2, mut resid, mut hs) = (Vec::new(), Vec::new(), Vec::new());
    for level in 0..3 {
        if level > 0 {
            mesh = mesh.refine(&ms.partition).unwrap();
        }
        let space = FeSpace::new(mesh.clone(), BasisOrder::P1);
        let rep = solve_by_reduction(&problem, &space, &opts()).unwrap();
        l2.push(error_vs_exact(&rep.u, &ms).l2());
        resid.push(flux_jump_residual(&rep.u, &ms.coeff, &ms.partition, 0).unwrap().residual);
        hs.push(mesh.h);
    }
    let ratio = l2[1] / l2[2];
    assert!((3.0..=5.0).contains(&ratio), "L2 ratio {ratio}");
    let rate = (resid[1] / resid[2]).ln() / (hs[1] / hs[2]).ln();
    assert!(rate >= 0.4, "flux residual rate {rate}: {resid:?}");
}

#[test]
fn exact_linear_field_has_no_error_and_zero_field_no_residual() {
    let ms = ManufacturedSolution::ms1();
    let space = FeSpace::new(generate_fitted_mesh(&ms.partition, 0.15).unwrap(), BasisOrder::P1);
    struct X;
    impl ExactSolution for X {
        fn components(&self) -> usize {
            1
        }
        fn eval(&self, _: usize, p: Point, v: &mut [f64], g: &mut [f64]) {
            v[0] = p.x;
            g[0] = 1.0;
            g[1] = 0.0;
        }
    }
    let u = DiscreteField::interpolate(&space, 1, |_, p, o| o[0] = p.x);
    let e = error_vs_exact(&u, &X);
    assert!(e.h1() <= 1e-12 && e.max_gradient_error.iter().all(|v| *v <= 1e-12));
    let zero = CoefficientField::for_partition(1, &ms.partition);
    let r = flux_jump_residual(&DiscreteField::zeros(&space, 1), &zero, &ms.partition, 0).unwrap();
    assert_eq!(r.residual, 0.0);
    assert!(flux_jump_residual(&u, &zero, &ms.partition, 4).is_err());
}

#[test]
fn energy_ratio_is_stable_under_refinement() {
    let ms = ManufacturedSolution::ms1();
    let problem = TransmissionProblem::new(ms.partition.clone(), ms.coeff.clone()).unwrap();
    let mut mesh = generate_fitted_mesh(&ms.partition, 0.1).unwrap();
    let mut ratios = Vec::new();
    for level in 0..3 {
        if level > 0 {
            mesh = mesh.refine(&ms.partition).unwrap();
        }
        let space = FeSpace::new(mesh.clone(), BasisOrder::P1);
        ratios.push(solve_by_reduction(&problem, &space, &opts()).unwrap().energy_ratio);
    }
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    assert!(hi / lo < 1.2, "{ratios:?}");
}

fn neumann_problem(flux: bool, source: bool, g: fn(Point) -> f64) -> TransmissionProblem {
    let part = DomainPartition::new(OuterBoundary::Curve(circle(0.0, 0.0, 1.25)), vec![circle(0.0, 0.0, 1.0)]).unwrap();
    let mut coeff = CoefficientField::for_partition(1, &part).with_interface(0, Arc::new(move |p, _, o: &mut [f64]| o[0] = g(p)));
    if flux {
        for j in 1..=2 {
            coeff = coeff.with_flux(j, Arc::new(|_, o: &mut [f64]| {
                o[0] = 1.0;
                o[1] = 0.0;
            }));
        }
    }
    if source {
        coeff = coeff.with_uniform_source(|_| 1.0);
    }
    TransmissionProblem::new(part, coeff).unwrap()
}

#[test]
fn neumann_zero_data_and_reduced_data_arithmetic() {
    let p0 = neumann_problem(false, false, |_| 0.0);
    let space = FeSpace::new(generate_fitted_mesh(&p0.partition, 0.08).unwrap(), BasisOrder::P1);
    let aux = solve_inclusion_neumann(&p0, &space, 0, &opts()).unwrap();
    assert_eq!(aux.w.max_abs(), 0.0);
    assert_eq!(aux.c_exact[0], 0.0);
    assert_eq!(aux.energy_ratio(), 0.0);

    // F ≡ (1, 0) and w ≈ x on Ω₁: F̃ ≈ 0 inside, (1, 0) outside.
    let pf = neumann_problem(true, false, |p| p.x / p.norm());
    let aux = [solve_inclusion_neumann(&pf, &space, 0, &opts()).unwrap()];
    let red = build_reduced_data(&pf, &aux).unwrap();
    let mut f = [0.0; 2];
    for (t, tri) in space.mesh.triangles.iter().enumerate() {
        let c = space.mesh.centroid(t);
        red.reduced_flux(t, tri.tag, c, [1.0 / 3.0; 3], &mut f);
        if tri.tag == 1 {
            assert!(f[0].abs() < 0.05 && f[1].abs() < 0.05, "{f:?}");
        } else {
            assert_eq!(f, [1.0, 0.0]);
        }
    }

    // f ≡ 1 and c = 2: f̃ = 3 inside, 1 outside.
    let ps = neumann_problem(false, true, |_| 1.0);
    let aux = [solve_inclusion_neumann(&ps, &space, 0, &opts()).unwrap()];
    assert!((aux[0].c_exact[0] - 2.0).abs() < 1e-12);
    let red = build_reduced_data(&ps, &aux).unwrap();
    let mut s = [0.0];
    red.reduced_source(1, Point::new(0.0, 0.0), &mut s);
    assert!((s[0] - 3.0).abs() < 1e-2);
    red.reduced_source(2, Point::new(1.1, 0.0), &mut s);
    assert_eq!(s[0], 1.0);
}

#[test]
fn three_subdomains_with_inactive_interface_collapse_to_two() {
    let part3 = DomainPartition::new(
        OuterBoundary::Curve(circle(0.0, 0.0, 1.0)),
        vec![circle(0.0, 0.0, 0.4), circle(0.0, 0.0, 0.7)],
    )
    .unwrap();
    let c3 = CoefficientField::for_partition(1, &part3)
        .with_interface(0, Arc::new(|_, _, o: &mut [f64]| o[0] = 1.0))
        .with_interface(1, Arc::new(|_, _, o: &mut [f64]| o[0] = 0.0));
    let p3 = TransmissionProblem::new(part3, c3).unwrap();
    let mesh3 = generate_fitted_mesh(&p3.partition, 0.06).unwrap();
    let space3 = FeSpace::new(mesh3.clone(), BasisOrder::P1);
    let multi = solve_multi(&p3, &space3, &opts()).unwrap();
    assert_eq!(multi.auxiliaries.len(), 2);
    assert_eq!(multi.auxiliaries[1].w.max_abs(), 0.0);

    // The same mesh, viewed as a two-subdomain mesh.
    let part2 = DomainPartition::new(OuterBoundary::Curve(circle(0.0, 0.0, 1.0)), vec![circle(0.0, 0.0, 0.4)]).unwrap();
    let mut mesh2 = mesh3.clone();
    mesh2.subdomains = 2;
    for t in &mut mesh2.triangles {
        t.tag = t.tag.min(2);
    }
    mesh2.interface_edges.retain(|e| e.curve == 0);
    for nc in &mut mesh2.node_curve {
        if matches!(nc, Some(CurvePosition { curve: CurveId::Inclusion(1), .. })) {
            *nc = None;
        }
    }
    let c2 = CoefficientField::for_partition(1, &part2).with_interface(0, Arc::new(|_, _, o: &mut [f64]| o[0] = 1.0));
    let p2 = TransmissionProblem::new(part2, c2).unwrap();
    let collapsed = solve_direct(&p2, &FeSpace::new(mesh2, BasisOrder::P1), &opts()).unwrap();
    let diff = multi.u.difference(&DiscreteField::from_values(&space3, 1, collapsed.u.values.clone()).unwrap());
    assert!(diff.max_abs() <= 1e-8 * multi.u.max_abs(), "{}", diff.max_abs());
    let m = multi.max_gradient.len();
    assert_eq!(m, 3);
}

/// Reflect a mesh in the y-axis for a partition whose inclusions swap
/// under the reflection.
fn mirror(mesh: &TriMesh, swap_curve: fn(usize) -> usize, swap_tag: fn(usize) -> usize) -> TriMesh {
    let mut out = mesh.clone();
    out.nodes = mesh.nodes.iter().map(|p| Point::new(-p.x, p.y)).collect();
    out.triangles = mesh
        .triangles
        .iter()
        .map(|t| Triangle { nodes: [t.nodes[0], t.nodes[2], t.nodes[1]], tag: swap_tag(t.tag) })
        .collect();
    out.interface_edges = mesh
        .interface_edges
        .iter()
        .map(|e| InterfaceEdge { nodes: [e.nodes[1], e.nodes[0]], curve: swap_curve(e.curve), inner_tag: swap_tag(e.inner_tag) })
        .collect();
    out.boundary_edges = mesh.boundary_edges.iter().rev().map(|e| [e[1], e[0]]).collect();
    out.node_curve = mesh
        .node_curve
        .iter()
        .map(|nc| {
            nc.map(|c| CurvePosition {
                curve: match c.curve {
                    CurveId::Outer => CurveId::Outer,
                    CurveId::Inclusion(i) => CurveId::Inclusion(swap_curve(i)),
                },
                param: wrap(PI - c.param, TAU),
            })
        })
        .collect();
    out
}

#[test]
fn mirrored_inclusions_give_mirrored_solution() {
    let part = DomainPartition::new(
        OuterBoundary::Curve(circle(0.0, 0.0, 1.0)),
        vec![circle(-0.4, 0.0, 0.2), circle(0.4, 0.0, 0.2)],
    )
    .unwrap();
    let data = |a: f64, b: f64| {
        CoefficientField::for_partition(1, &part)
            .with_interface(0, Arc::new(move |p: Point, _, o: &mut [f64]| o[0] = a * (1.0 + p.y)))
            .with_interface(1, Arc::new(move |p: Point, _, o: &mut [f64]| o[0] = b * (1.0 + p.y)))
    };
    let pa = TransmissionProblem::new(part.clone(), data(1.0, 2.0)).unwrap();
    let pb = TransmissionProblem::new(part.clone(), data(2.0, 1.0)).unwrap();
    let mesh = generate_fitted_mesh(&part, 0.08).unwrap();
    let mirrored = mirror(&mesh, |c| 1 - c, |t| if t == 3 { 3 } else { 3 - t });
    mirrored.check_topology(&part).unwrap();
    let ua = solve_direct(&pa, &FeSpace::new(mesh, BasisOrder::P1), &opts()).unwrap().u;
    let ub = solve_direct(&pb, &FeSpace::new(mirrored, BasisOrder::P1), &opts()).unwrap().u;
    let worst = ua.values.iter().zip(&ub.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(worst <= 1e-9 * ua.max_abs(), "{worst}");
}

#[test]
fn p2_gives_higher_order_on_ms1() {
    let ms = ManufacturedSolution::ms1();
    let problem = TransmissionProblem::new(ms.partition.clone(), ms.coeff.clone()).unwrap();
    let mesh = generate_fitted_mesh(&ms.partition, 0.1).unwrap();
    let fine = mesh.refine(&ms.partition).unwrap();
    let mut e = Vec::new();
    for m in [mesh, fine] {
        let space = FeSpace::new(m, BasisOrder::P2);
        let d = solve_direct(&problem, &space, &opts()).unwrap();
        let r = solve_by_reduction(&problem, &space, &opts()).unwrap();
        assert!(relative_h1_difference(&r.u, &d.u) < 1e-8);
        e.push(error_vs_exact(&d.u, &ms).h1());
    }
    assert!((e[0] / e[1]).log2() > 1.5, "{e:?}");
}
