//! Solve, compare, convergence, probe and mesh-info campaigns.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;
use transmission_core::analysis::oscillation::{ladder, FieldGradient, TensorComponent};
use transmission_core::analysis::{
    dini_modulus, error_vs_exact, fitted_order, flux_jump_residual, holder_seminorm, observed_orders,
    oscillation_probe, sample_pairs, BallRule, Clip, DecayFit, ErrorNorms,
};
use transmission_core::fem::solve::KrylovMethod;
use transmission_core::fem::{assemble_stiffness, FeSpace, Region, SolverOptions};
use transmission_core::mesh::generate_fitted_mesh;
use transmission_core::transmission::{
    relative_h1_difference, solve_by_reduction, solve_direct, solve_multi, Pipeline, SolveReport, TransmissionProblem,
};
use transmission_core::{Error as CoreError, TriMesh};

use crate::config::{Campaign, ConfigError, RunConfig};
use crate::output::{num, nums, write_mesh, write_triplets, Document, Table};
use crate::problem::{problem, EvalGuard, ExprExact};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Eval(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config(ConfigError::Parse { .. }) => "parse",
            CliError::Config(ConfigError::Validation { .. }) | CliError::Validation(_) => "validation",
            CliError::Numerical(_) => "numerical",
            CliError::Eval(_) => "eval",
            CliError::Io(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "parse" => 2,
            "validation" => 3,
            "io" => 5,
            _ => 4,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidGeometry(_)
            | CoreError::Precondition(_)
            | CoreError::UnknownInterface(_)
            | CoreError::OutsideDomain { .. }
            | CoreError::Dimension(_) => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Files written and lines for the terminal.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

struct Writer<'a> {
    dir: &'a Path,
    outcome: Outcome,
}

impl Writer<'_> {
    fn write(&mut self, name: &str, content: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, content).map_err(|e| io_err(&path, e))?;
        self.outcome.files.push(path);
        Ok(())
    }

    fn say(&mut self, line: String) {
        self.outcome.summary.push(line);
    }
}

struct Setup {
    problem: TransmissionProblem,
    guard: EvalGuard,
    exact: Option<ExprExact>,
    opts: SolverOptions,
}

fn setup(cfg: &RunConfig) -> Result<Setup, CliError> {
    let guard = EvalGuard::default();
    let problem = problem(cfg, &guard)?;
    if let Some(kappa) = cfg.solver.kappa {
        problem.validate_ellipticity(kappa, cfg.seed)?;
    }
    let exact = cfg.exact.as_ref().map(|u| ExprExact::new(cfg.components, u, &guard));
    let opts = SolverOptions { tol: cfg.solver.tol, max_iter: cfg.solver.max_iter, ..SolverOptions::default() };
    checked(&guard)?;
    Ok(Setup { problem, guard, exact, opts })
}

fn checked(guard: &EvalGuard) -> Result<(), CliError> {
    guard.check().map_err(|f| CliError::Eval(f.to_string()))
}

fn run_pipeline(s: &Setup, space: &Arc<FeSpace>, pipeline: Pipeline) -> Result<SolveReport, CliError> {
    let rep = match pipeline {
        Pipeline::Direct => solve_direct(&s.problem, space, &s.opts)?,
        Pipeline::Reduction if s.problem.partition.subdomain_count() >= 3 => solve_multi(&s.problem, space, &s.opts)?,
        Pipeline::Reduction => solve_by_reduction(&s.problem, space, &s.opts)?,
    };
    checked(&s.guard)?;
    Ok(rep)
}

fn base_mesh(cfg: &RunConfig) -> Result<TriMesh, CliError> {
    Ok(generate_fitted_mesh(&cfg.partition, cfg.solver.h)?)
}

fn method_name(m: KrylovMethod) -> &'static str {
    match m {
        KrylovMethod::ConjugateGradient => "cg",
        KrylovMethod::BiCgStab => "bicgstab",
    }
}

fn header(doc: &mut Document, cfg: &RunConfig) {
    doc.set("campaign", cfg.campaign.name());
    doc.set("problem_hash", &cfg.hash);
    doc.set("seed", cfg.seed);
    doc.set("components", cfg.components);
    doc.set("subdomains", cfg.subdomain_count());
    doc.set("basis_order", cfg.solver.order.degree());
}

fn mesh_lines(doc: &mut Document, prefix: &str, mesh: &TriMesh, cfg: &RunConfig) {
    let st = mesh.statistics(&cfg.partition);
    doc.set_num(format!("{prefix}mesh.h"), st.h);
    doc.set_num(format!("{prefix}mesh.min_angle_deg"), st.min_angle_deg);
    doc.set(format!("{prefix}mesh.nodes"), st.nodes);
    doc.set(format!("{prefix}mesh.triangles"), st.triangles);
    doc.set_num(format!("{prefix}mesh.interface_node_deviation"), st.interface_node_deviation);
}

fn mesh_table(mesh: &TriMesh, cfg: &RunConfig) -> (Table, Table) {
    let st = mesh.statistics(&cfg.partition);
    let mut subs = Table::new("mesh_subdomains", &["subdomain", "triangles", "area"]);
    for j in 1..=mesh.subdomains {
        subs.push(vec![j.to_string(), st.triangles_per_subdomain[j - 1].to_string(), num(mesh.subdomain_area(j))]);
    }
    let mut curves = Table::new("mesh_interfaces", &["interface", "edges", "length", "exact_length"]);
    for (i, c) in cfg.partition.inclusions.iter().enumerate() {
        curves.push(vec![
            (i + 1).to_string(),
            st.interface_edges_per_curve[i].to_string(),
            num(mesh.interface_length(i)),
            num(c.length()),
        ]);
    }
    (subs, curves)
}

/// Key-value lines and tables describing one solve, keys prefixed by `prefix`.
fn report_lines(
    doc: &mut Document,
    prefix: &str,
    s: &Setup,
    rep: &SolveReport,
    cfg: &RunConfig,
) -> Result<(Option<ErrorNorms>, Vec<f64>), CliError> {
    let p = |k: &str| format!("{prefix}{k}");
    doc.set(p("pipeline"), rep.pipeline.name());
    doc.set_num(p("sigma"), rep.sigma);
    doc.set(p("solver.method"), method_name(rep.stats.method));
    doc.set(p("solver.iterations"), rep.stats.iterations);
    doc.set_num(p("solver.relative_residual"), rep.stats.relative_residual);
    doc.set(p("solver.unknowns"), rep.stats.unknowns);
    doc.set_num(p("stiffness.asymmetry"), rep.asymmetry);
    doc.set_num(p("norm.u_l2"), rep.u_norms.l2_total);
    doc.set_num(p("norm.u_h1_semi"), rep.u_norms.h1_semi_total);
    doc.set_num(p("norm.u_h1"), rep.u_norms.h1_total());
    doc.set_num(p("norm.flux_l2"), rep.data.flux);
    doc.set_num(p("norm.source_l2"), rep.data.source);
    for (i, g) in rep.data.interfaces.iter().enumerate() {
        doc.set_num(p(&format!("norm.interface_l2.{}", i + 1)), *g);
    }
    doc.set_num(p("energy_ratio"), rep.energy_ratio);
    for a in &rep.auxiliaries {
        let q = |k: &str| p(&format!("aux.{}.{k}", a.inclusion + 1));
        doc.set(q("c_exact"), nums(&a.c_exact));
        doc.set(q("c_discrete"), nums(&a.c_discrete));
        doc.set(q("iterations"), a.stats.iterations);
        doc.set_num(q("relative_residual"), a.stats.relative_residual);
        doc.set_num(q("compatibility_mismatch"), a.mismatch);
        doc.set_num(q("norm.w_h1"), a.w_h1);
        doc.set_num(q("energy_ratio"), a.energy_ratio());
    }
    let mut residuals = Vec::new();
    for i in 0..cfg.partition.inclusions.len() {
        let r = flux_jump_residual(&rep.u, &s.problem.coeff, &cfg.partition, i)?;
        doc.set_num(p(&format!("residual.flux_jump.{}", i + 1)), r.residual);
        doc.set_num(p(&format!("residual.flux_jump_relative.{}", i + 1)), r.relative());
        residuals.push(r.residual);
    }
    checked(&s.guard)?;
    let errors = match &s.exact {
        Some(ex) => {
            let e = error_vs_exact(&rep.u, ex);
            checked(&s.guard)?;
            doc.set_num(p("error.l2"), e.l2());
            doc.set_num(p("error.h1_semi"), e.h1_semi());
            doc.set_num(p("error.h1"), e.h1());
            doc.set_num(p("error.max_gradient"), e.max_gradient_error.iter().fold(0.0, |m, v| m.max(*v)));
            Some(e)
        }
        None => None,
    };
    let mut subs = Table::new(&p("subdomains"), &["subdomain", "l2", "h1_semi", "max_gradient"]);
    for j in 1..=cfg.subdomain_count() {
        subs.push(vec![
            j.to_string(),
            num(rep.u_norms.l2[j - 1]),
            num(rep.u_norms.h1_semi[j - 1]),
            num(rep.max_gradient[j - 1]),
        ]);
    }
    doc.table(subs);
    Ok((errors, residuals))
}

fn solution_csv(rep: &SolveReport) -> String {
    let n = rep.u.components;
    let mut header = vec!["dof".to_string(), "x".into(), "y".into()];
    header.extend((1..=n).map(|i| if n == 1 { "u".to_string() } else { format!("u{i}") }));
    let mut t = Table { name: String::new(), header, rows: Vec::new() };
    for (d, p) in rep.u.space.dof_points.iter().enumerate() {
        let mut row = vec![d.to_string(), num(p.x), num(p.y)];
        row.extend((0..n).map(|c| num(rep.u.values[d * n + c])));
        t.rows.push(row);
    }
    t.csv()
}

fn fit_lines(doc: &mut Document, prefix: &str, fit: transmission_core::Result<DecayFit>) {
    match fit {
        Ok(f) => {
            doc.set_num(format!("{prefix}.beta"), f.beta);
            doc.set_num(format!("{prefix}.constant"), f.constant);
            doc.set_num(format!("{prefix}.residual"), f.residual);
            doc.set(format!("{prefix}.points"), f.points);
        }
        Err(e) => {
            doc.set(format!("{prefix}.beta"), "inf");
            doc.set(format!("{prefix}.note"), e);
        }
    }
}

pub fn run_campaign(cfg: &RunConfig) -> Result<Outcome, CliError> {
    fs::create_dir_all(&cfg.out).map_err(|e| io_err(&cfg.out, e))?;
    let mut w = Writer { dir: &cfg.out, outcome: Outcome::default() };
    match cfg.campaign {
        Campaign::Solve => solve(cfg, &mut w)?,
        Campaign::Compare => compare(cfg, &mut w)?,
        Campaign::Convergence => convergence(cfg, &mut w)?,
        Campaign::Probe => probe(cfg, &mut w)?,
        Campaign::MeshInfo => mesh_info(cfg, &mut w)?,
    }
    Ok(w.outcome)
}

fn solve(cfg: &RunConfig, w: &mut Writer) -> Result<(), CliError> {
    let s = setup(cfg)?;
    let t0 = Instant::now();
    let mesh = base_mesh(cfg)?;
    let t_mesh = t0.elapsed().as_secs_f64();
    let space = FeSpace::new(mesh, cfg.solver.order);
    let t1 = Instant::now();
    let rep = run_pipeline(&s, &space, cfg.solver.pipeline)?;
    let t_solve = t1.elapsed().as_secs_f64();
    let mut doc = Document::default();
    header(&mut doc, cfg);
    mesh_lines(&mut doc, "", &space.mesh, cfg);
    let t2 = Instant::now();
    report_lines(&mut doc, "", &s, &rep, cfg)?;
    doc.set_num("timing.mesh_s", t_mesh);
    doc.set_num("timing.solve_s", t_solve);
    doc.set_num("timing.analysis_s", t2.elapsed().as_secs_f64());
    let (a, b) = mesh_table(&space.mesh, cfg);
    doc.table(a);
    doc.table(b);
    w.write("report.txt", &doc.render())?;
    w.write("solution.csv", &solution_csv(&rep))?;
    w.write("mesh.txt", &write_mesh(&space.mesh))?;
    if cfg.export_matrix {
        let k = assemble_stiffness(&space, &s.problem.coeff, &Region::whole(&space))?;
        checked(&s.guard)?;
        w.write("stiffness.txt", &write_triplets(&k))?;
    }
    w.say(format!("pipeline {} dofs {} h {}", rep.pipeline.name(), rep.dofs(), num(space.mesh.h)));
    w.say(format!("norm.u_h1 {} energy_ratio {}", num(rep.u_norms.h1_total()), num(rep.energy_ratio)));
    if let Some(e) = doc.get("error.h1") {
        w.say(format!("error.h1 {e}"));
    }
    Ok(())
}

fn compare(cfg: &RunConfig, w: &mut Writer) -> Result<(), CliError> {
    let s = setup(cfg)?;
    let space = FeSpace::new(base_mesh(cfg)?, cfg.solver.order);
    let t0 = Instant::now();
    let direct = run_pipeline(&s, &space, Pipeline::Direct)?;
    let t_direct = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let reduction = run_pipeline(&s, &space, Pipeline::Reduction)?;
    let t_reduction = t1.elapsed().as_secs_f64();
    let rel = relative_h1_difference(&reduction.u, &direct.u);
    let diff = transmission_core::analysis::norms(&reduction.u.difference(&direct.u));
    let mut doc = Document::default();
    header(&mut doc, cfg);
    mesh_lines(&mut doc, "", &space.mesh, cfg);
    doc.set_num("difference.h1_relative", rel);
    doc.set_num("difference.l2", diff.l2_total);
    doc.set_num("difference.h1_semi", diff.h1_semi_total);
    doc.set_num("difference.max_abs", reduction.u.difference(&direct.u).max_abs());
    report_lines(&mut doc, "direct.", &s, &direct, cfg)?;
    report_lines(&mut doc, "reduction.", &s, &reduction, cfg)?;
    doc.set_num("timing.direct_s", t_direct);
    doc.set_num("timing.reduction_s", t_reduction);
    w.write("compare.txt", &doc.render())?;
    let mut t = Table::new("compare", &["quantity", "direct", "reduction"]);
    for (name, a, b) in [
        ("u_h1", direct.u_norms.h1_total(), reduction.u_norms.h1_total()),
        ("u_l2", direct.u_norms.l2_total, reduction.u_norms.l2_total),
        ("energy_ratio", direct.energy_ratio, reduction.energy_ratio),
    ] {
        t.push(vec![name.into(), num(a), num(b)]);
    }
    if let Some(ex) = &s.exact {
        let (a, b) = (error_vs_exact(&direct.u, ex), error_vs_exact(&reduction.u, ex));
        checked(&s.guard)?;
        t.push(vec!["h1_err".into(), num(a.h1()), num(b.h1())]);
        t.push(vec!["l2_err".into(), num(a.l2()), num(b.l2())]);
    }
    w.write("compare.csv", &t.csv())?;
    w.say(format!("relative H1 difference {}", num(rel)));
    Ok(())
}

fn convergence(cfg: &RunConfig, w: &mut Writer) -> Result<(), CliError> {
    let s = setup(cfg)?;
    let Some(exact) = &s.exact else {
        return Err(CliError::Validation("exact: the convergence campaign needs an [exact] section".into()));
    };
    let mut mesh = base_mesh(cfg)?;
    let mut table = Table::new(
        "convergence",
        &["level", "h", "dofs", "l2_err", "h1_err", "flux_resid", "holder_in", "holder_cross", "energy_ratio"],
    );
    let (mut hs, mut l2s, mut h1s) = (Vec::new(), Vec::new(), Vec::new());
    let mut timings = Vec::new();
    for level in 0..cfg.solver.levels {
        if level > 0 {
            mesh = mesh.refine(&cfg.partition)?;
        }
        let t0 = Instant::now();
        let space = FeSpace::new(mesh.clone(), cfg.solver.order);
        let rep = run_pipeline(&s, &space, cfg.solver.pipeline)?;
        let err = error_vs_exact(&rep.u, exact);
        let mut resid2 = 0.0;
        for i in 0..cfg.partition.inclusions.len() {
            let r = flux_jump_residual(&rep.u, &s.problem.coeff, &cfg.partition, i)?.residual;
            resid2 += r * r;
        }
        checked(&s.guard)?;
        let pairs = sample_pairs(&space.mesh, cfg.analysis.rho_factor * space.mesh.h, cfg.analysis.pairs, cfg.seed);
        let holder = holder_seminorm(&rep.u, &pairs, cfg.analysis.alpha);
        table.push(vec![
            level.to_string(),
            num(space.mesh.h),
            rep.dofs().to_string(),
            num(err.l2()),
            num(err.h1()),
            num(resid2.sqrt()),
            num(holder.max_within()),
            num(holder.cross),
            num(rep.energy_ratio),
        ]);
        hs.push(space.mesh.h);
        l2s.push(err.l2());
        h1s.push(err.h1());
        timings.push(t0.elapsed().as_secs_f64());
    }
    w.write("convergence.csv", &table.csv())?;
    let mut doc = Document::default();
    header(&mut doc, cfg);
    doc.set("levels", cfg.solver.levels);
    doc.set("pipeline", cfg.solver.pipeline.name());
    let mut orders = Table::new("observed_orders", &["from_level", "to_level", "l2_order", "h1_order"]);
    let (ol2, oh1) = (observed_orders(&hs, &l2s), observed_orders(&hs, &h1s));
    for (k, (a, b)) in ol2.iter().zip(&oh1).enumerate() {
        orders.push(vec![k.to_string(), (k + 1).to_string(), num(*a), num(*b)]);
    }
    if hs.len() >= 2 {
        doc.set_num("fitted_order.l2", fitted_order(&hs, &l2s));
        doc.set_num("fitted_order.h1", fitted_order(&hs, &h1s));
        doc.set_num("final_order.l2", *ol2.last().expect("two levels"));
        doc.set_num("final_order.h1", *oh1.last().expect("two levels"));
        w.say(format!("observed h1 order {} (fit {})", num(*oh1.last().unwrap()), num(fitted_order(&hs, &h1s))));
        w.say(format!("observed l2 order {} (fit {})", num(*ol2.last().unwrap()), num(fitted_order(&hs, &l2s))));
    }
    for (k, t) in timings.iter().enumerate() {
        doc.set_num(format!("timing.level.{k}_s"), *t);
    }
    doc.table(orders);
    w.write("convergence_summary.txt", &doc.render())?;
    Ok(())
}

/// Every `stride`-th triangle centroid, `count` of them at most.
fn spread_centers(mesh: &TriMesh, count: usize) -> Vec<transmission_core::Point> {
    let t = mesh.triangles.len();
    if count == 0 || t == 0 {
        return Vec::new();
    }
    let stride = (t / count).max(1);
    (0..t).step_by(stride).take(count).map(|i| mesh.centroid(i)).collect()
}

fn probe(cfg: &RunConfig, w: &mut Writer) -> Result<(), CliError> {
    let s = setup(cfg)?;
    let space = FeSpace::new(base_mesh(cfg)?, cfg.solver.order);
    let rep = run_pipeline(&s, &space, cfg.solver.pipeline)?;
    let a = &cfg.analysis;
    let rule = BallRule::default();
    let probe = oscillation_probe(&FieldGradient(&rep.u), a.center, a.r0, a.mu, a.levels, a.clip, rule)?;
    let mut t = Table::new("probe", &["r", "phi"]);
    for (r, phi) in probe.radii.iter().zip(&probe.phi) {
        t.push(vec![num(*r), num(*phi)]);
    }
    w.write("probe.csv", &t.csv())?;

    let radii = ladder(a.r0, a.mu, a.levels);
    let centers = spread_centers(&space.mesh, a.modulus_centers);
    let sampler = TensorComponent { coeff: &s.problem.coeff, partition: &cfg.partition, index: [0, 0, 0, 0] };
    let modulus = dini_modulus(&sampler, &radii, &centers, rule);
    checked(&s.guard)?;
    let mut m = Table::new("modulus", &["r", "omega"]);
    for (r, om) in modulus.radii.iter().zip(&modulus.omega) {
        m.push(vec![num(*r), num(*om)]);
    }
    w.write("modulus.csv", &m.csv())?;

    let mut doc = Document::default();
    header(&mut doc, cfg);
    mesh_lines(&mut doc, "", &space.mesh, cfg);
    doc.set("probe.center", format!("{} {}", num(a.center.x), num(a.center.y)));
    doc.set(
        "probe.clip",
        match a.clip {
            Clip::Domain => "domain".to_string(),
            Clip::Subdomain(j) => j.to_string(),
        },
    );
    let smallest = probe.radii.iter().fold(f64::INFINITY, |m, r| m.min(*r));
    // Below one mesh size a P1 gradient is constant on the ball.
    doc.set_num("probe.min_radius_over_h", smallest / space.mesh.h);
    fit_lines(&mut doc, "probe.fit", probe.fit());
    doc.set("modulus.centers", centers.len());
    fit_lines(&mut doc, "modulus.fit", modulus.fit());
    w.write("probe_summary.txt", &doc.render())?;
    if let Some(b) = doc.get("probe.fit.beta") {
        w.say(format!("phi decay exponent {b}"));
    }
    Ok(())
}

fn mesh_info(cfg: &RunConfig, w: &mut Writer) -> Result<(), CliError> {
    let mesh = base_mesh(cfg)?;
    mesh.check_topology(&cfg.partition)?;
    let mut doc = Document::default();
    header(&mut doc, cfg);
    mesh_lines(&mut doc, "", &mesh, cfg);
    let (a, b) = mesh_table(&mesh, cfg);
    doc.table(a);
    doc.table(b);
    w.write("mesh_info.txt", &doc.render())?;
    w.write("mesh.txt", &write_mesh(&mesh))?;
    w.say(format!("nodes {} triangles {} h {}", mesh.node_count(), mesh.triangle_count(), num(mesh.h)));
    Ok(())
}
