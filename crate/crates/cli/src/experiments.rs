//! One function per experiment; each turns a validated config into artifacts.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use slef_core::analysis::{
    ak_recursion, counterexample_experiment, critical_source_probe, fit_growth, ratio_probe, sample_ray,
    sector_boundary, sector_mesh, sigma_recursion, CounterexampleConfig, GrowthFit, GrowthModel, OuterData,
    ProbeRegion, ProbeSample, RecursionTrace, SectorGrid, SigmaMode,
};
use slef_core::geometry::{BumpCurve, Disk, GraphDomain, Rectangle, SectorDomain};
use slef_core::mesh::{
    build_cartesian_mesh, build_graded_line_mesh, build_line_mesh, build_polar_mesh, build_region_mesh, Field, Mesh,
    DEFAULT_FOLD,
};
use slef_core::ode_lab::{angular_profile, flat_profile, AngularOutcome, FlatParam};
use slef_core::slef::{solve_singular, SleConfig, SolveReport};
use slef_core::spectral::{cap_frequency, classify, sector_frequency};
use slef_core::Point;

use crate::config::{
    BoundaryKind, ConfigError, Experiment, FitModel, OdeKind, RecursionKindCfg, RunConfig, Shape, SourceProfile,
};
use crate::output::{Artifacts, Summary, Table};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Core(slef_core::Error),
    Io(std::io::Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "invalid config: {e}"),
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<slef_core::Error> for RunError {
    fn from(e: slef_core::Error) -> Self {
        RunError::Core(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

impl RunError {
    /// 2 for convergence failures, 3 for invalid configuration, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 3,
            RunError::Core(e) if e.is_convergence_failure() => 2,
            RunError::Core(slef_core::Error::InvalidInput(_)) => 3,
            _ => 1,
        }
    }
}

type RunResult<T> = Result<T, RunError>;

struct Stopwatch<'a> {
    art: &'a mut Artifacts,
    start: Instant,
}

impl<'a> Stopwatch<'a> {
    fn new(art: &'a mut Artifacts) -> Self {
        Self {
            art,
            start: Instant::now(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.art
            .timings
            .push((stage.to_string(), now.duration_since(self.start).as_secs_f64()));
        self.start = now;
    }
}

/// Runs the configured experiment.
pub fn run_experiment(cfg: &RunConfig) -> RunResult<Artifacts> {
    match cfg.experiment()? {
        Experiment::Spectral => spectral(cfg),
        Experiment::Solve => solve(cfg),
        Experiment::Ode => ode(cfg),
        Experiment::Fit => fit(cfg),
        Experiment::Recursion => recursion(cfg),
        Experiment::Harnack => harnack(cfg),
        Experiment::Counterexample => counterexample(cfg),
        Experiment::Probe => probe(cfg),
    }
}

fn sle_config(cfg: &RunConfig) -> RunResult<SleConfig> {
    let gamma = cfg.gamma()?;
    let eq = cfg.equation()?;
    let mut sle = match eq.profile.unwrap_or(SourceProfile::Constant) {
        SourceProfile::Constant => SleConfig::constant(gamma, eq.f.unwrap_or(1.0))?,
        SourceProfile::Oscillating => {
            let lo = eq.f_min.unwrap_or(1.0);
            let hi = eq.f_max.unwrap_or(lo);
            let f = move |p: Point| {
                lo + (hi - lo) * 0.5 * (1.0 + (2.0 * PI * p[0]).sin() * (2.0 * PI * p[1]).sin())
            };
            SleConfig::with_source(gamma, Arc::new(f), lo, hi)?
        }
    };
    if let Some(s) = &cfg.solver {
        if let Some(v) = s.newton_tol {
            sle.newton_tol = v;
        }
        if let Some(v) = s.eps0 {
            sle.eps0 = v;
        }
        if let Some(v) = s.eps_factor {
            sle.eps_factor = v;
        }
        if s.eps_min.is_some() {
            sle.eps_min = s.eps_min;
        }
        if let Some(v) = s.max_newton {
            sle.max_newton = v;
        }
        if let Some(v) = s.final_exact {
            sle.final_exact = v;
        }
    }
    sle.validate()?;
    Ok(sle)
}

fn sector_grid(cfg: &RunConfig) -> RunResult<SectorGrid> {
    let d = cfg.domain()?;
    let theta = d.theta.ok_or_else(|| missing("domain.theta"))?;
    let mut g = SectorGrid::standard(theta);
    if let Some(r) = d.radius {
        g.radius = r;
    }
    if let Some(m) = &cfg.mesh {
        g.nr = m.nr.unwrap_or(g.nr);
        g.n_omega = m.n_omega.unwrap_or(g.n_omega);
        g.grading = m.grading.unwrap_or(g.grading);
    }
    Ok(g)
}

fn missing(key: &str) -> RunError {
    RunError::Config(ConfigError::Range {
        key: key.to_string(),
        message: "required for this experiment".into(),
    })
}

fn build_mesh(cfg: &RunConfig) -> RunResult<Mesh> {
    let d = cfg.domain()?;
    let m = cfg.mesh()?;
    let h = || m.h.ok_or_else(|| missing("mesh.h"));
    Ok(match cfg.shape()? {
        Shape::Sector => {
            let g = sector_grid(cfg)?;
            build_polar_mesh(&SectorDomain::new(g.theta, g.radius)?, g.nr, g.n_omega, g.grading)?
        }
        Shape::Disk => {
            let disk = Disk::new(d.center.unwrap_or([0.0, 0.0]), d.radius.unwrap_or(1.0))?;
            build_region_mesh(&disk, h()?, DEFAULT_FOLD)?
        }
        Shape::Rectangle => {
            let rect = Rectangle {
                lo: d.lo.unwrap_or([0.0, 0.0]),
                hi: d.hi.unwrap_or([1.0, 1.0]),
            };
            build_region_mesh(&rect, h()?, DEFAULT_FOLD)?
        }
        Shape::Flat => {
            let [a, b] = d.x_range.unwrap_or([-1.0, 1.0]);
            build_cartesian_mesh(&GraphDomain::flat((a, b), d.top.unwrap_or(1.0))?, h()?)?
        }
        Shape::Bumpy => {
            let curve = BumpCurve::new(d.radius.unwrap_or(2.0), d.i_max.unwrap_or(8))?;
            build_cartesian_mesh(&GraphDomain::bumpy(curve)?, h()?)?
        }
        Shape::Line => {
            let n = m.intervals.ok_or_else(|| missing("mesh.intervals"))?;
            let len = d.length.unwrap_or(1.0);
            match m.grading {
                Some(q) if q != 1.0 => build_graded_line_mesh(0.0, len, n, q)?,
                _ => build_line_mesh(0.0, len, n)?,
            }
        }
        Shape::Cap => {
            return Err(RunError::Config(ConfigError::Range {
                key: "domain.shape".into(),
                message: "caps are only supported by the spectral experiment".into(),
            }))
        }
    })
}

fn report_summary(s: &mut Summary, prefix: &str, r: &SolveReport) {
    s.put(&format!("{prefix}eps_levels"), r.eps_schedule.len());
    s.put(&format!("{prefix}newton_iterations"), r.newton_iters.iter().sum::<usize>());
    s.put(&format!("{prefix}final_residual"), r.final_residual);
    s.put(&format!("{prefix}monotone_in_eps"), r.monotone_in_eps.to_string());
    s.put(&format!("{prefix}subsolution_ok"), r.subsolution_ok.to_string());
    s.put(&format!("{prefix}min_monotone_margin"), r.min_monotone_margin);
    s.put(&format!("{prefix}linear_iterations"), r.linear_iterations);
}

fn spectral(cfg: &RunConfig) -> RunResult<Artifacts> {
    let mut art = Artifacts::default();
    let gamma = cfg.gamma()?;
    let d = cfg.domain()?;
    let (shape, param, cone) = match cfg.shape()? {
        Shape::Sector => {
            let t = d.theta.ok_or_else(|| missing("domain.theta"))?;
            ("sector", t, sector_frequency(t)?)
        }
        _ => {
            let a = d.alpha.ok_or_else(|| missing("domain.alpha"))?;
            let nodes = cfg.mesh.as_ref().and_then(|m| m.nodes).unwrap_or(1000);
            ("cap", a, cap_frequency(a, nodes)?)
        }
    };
    let class = classify(&cone, gamma)?;
    let mut t = Table::new("spectral", &["shape", "param", "lambda", "phi", "gamma", "class", "margin"]);
    t.push(vec![
        shape.into(),
        param.into(),
        cone.lambda_sigma.into(),
        cone.phi_sigma.into(),
        gamma.into(),
        class.class.to_string().into(),
        class.margin.into(),
    ]);
    art.tables.push(t);
    let s = &mut art.summary;
    s.put("shape", shape);
    s.put("param", param);
    s.put("lambda", cone.lambda_sigma);
    s.put("phi", cone.phi_sigma);
    s.put("gamma", gamma);
    s.put("class", class.class.to_string());
    s.put("margin", class.margin);
    Ok(art)
}

fn solve(cfg: &RunConfig) -> RunResult<Artifacts> {
    let mut art = Artifacts::default();
    let sle = sle_config(cfg)?;
    let mut sw = Stopwatch::new(&mut art);
    let mesh = build_mesh(cfg)?;
    sw.lap("mesh");
    let b = cfg.boundary.as_ref().ok_or_else(|| missing("boundary"))?;
    let value = b.value.unwrap_or(0.0);
    if !(value >= 0.0 && value.is_finite()) {
        return Err(RunError::Config(ConfigError::Range {
            key: "boundary.value".into(),
            message: format!("{value} must be nonnegative"),
        }));
    }
    let data = match b.kind.unwrap_or(BoundaryKind::Constant) {
        BoundaryKind::Constant => Field::from_boundary(&mesh, |_, _| value),
        BoundaryKind::Height => Field::from_boundary(&mesh, |p, _| value * p[1].max(0.0)),
        BoundaryKind::Outer => {
            let cone = sector_frequency(sector_grid(cfg)?.theta)?;
            sector_boundary(&mesh, &cone, OuterData::Constant(value))?
        }
    };
    let (u, report) = solve_singular(&mesh, &sle, &data)?;
    sw.lap("solve");
    art.warnings.extend(report.warnings.iter().cloned());
    let mut t = Table::new("solution", &["x1", "x2", "u", "interior"]);
    for k in 0..mesh.n_nodes() {
        let p = mesh.point(k);
        t.push(vec![p[0].into(), p[1].into(), u.values()[k].into(), usize::from(mesh.is_interior(k)).into()]);
    }
    art.tables.push(t);
    let mut levels = Table::new("continuation", &["eps", "newton_iterations", "cauchy_gap"]);
    for (j, (&e, &n)) in report.eps_schedule.iter().zip(&report.newton_iters).enumerate() {
        let gap = if j == 0 { f64::NAN } else { report.cauchy_gap[j - 1] };
        levels.push(vec![e.into(), n.into(), gap.into()]);
    }
    art.tables.push(levels);
    let s = &mut art.summary;
    s.put("nodes", mesh.n_nodes());
    s.put("interior_nodes", mesh.n_interior());
    s.put("max_u", u.max());
    report_summary(s, "", &report);
    Ok(art)
}

fn ode(cfg: &RunConfig) -> RunResult<Artifacts> {
    let mut art = Artifacts::default();
    let gamma = cfg.gamma()?;
    let o = cfg.ode.as_ref().ok_or_else(|| missing("ode"))?;
    let n = o.samples.unwrap_or(200);
    let mut t = Table::new("profile", &["t", "u"]);
    match o.kind.unwrap_or(OdeKind::Flat) {
        OdeKind::Flat => {
            let param = match (o.k, o.c) {
                (Some(k), _) => FlatParam::K(k),
                (None, Some(c)) => FlatParam::C(c),
                (None, None) if gamma < 1.0 => FlatParam::K(1.0),
                (None, None) => FlatParam::C(0.0),
            };
            let p = flat_profile(gamma, param, o.t_max.unwrap_or(1.0), n)?;
            for &(x, u) in &p.samples {
                t.push(vec![x.into(), u.into()]);
            }
            let s = &mut art.summary;
            s.put("family", "flat");
            s.put("gamma", gamma);
            s.put("peak", p.peak.unwrap_or(f64::INFINITY));
            s.put("t_star", p.t_star.unwrap_or(f64::INFINITY));
            s.put("life", p.validity.1);
            s.put("exists", "true");
        }
        OdeKind::Angular => {
            let theta = cfg.domain()?.theta.ok_or_else(|| missing("domain.theta"))?;
            let out = angular_profile(gamma, theta, n)?;
            let s = &mut art.summary;
            s.put("family", "angular");
            s.put("gamma", gamma);
            s.put("theta", theta);
            match &out {
                AngularOutcome::Exists(p) => {
                    for i in 0..=n {
                        let w = theta * i as f64 / n as f64;
                        t.push(vec![w.into(), p.eval(w)?.into()]);
                    }
                    s.put("peak", p.peak);
                    s.put("side_slope", p.side_slope);
                    s.put("exists", "true");
                }
                AngularOutcome::Nonexistent { sup_half_width } => {
                    s.put("sup_half_width", *sup_half_width);
                    s.put("exists", "false");
                }
                AngularOutcome::Inconclusive { last_half_width } => {
                    s.put("last_half_width", *last_half_width);
                    s.put("exists", "inconclusive");
                }
            }
        }
    }
    art.tables.push(t);
    Ok(art)
}

fn fit_summary(s: &mut Summary, prefix: &str, f: &GrowthFit) {
    s.put(&format!("{prefix}alpha"), f.alpha);
    s.put(&format!("{prefix}log_power"), f.log_power);
    s.put(&format!("{prefix}log_constant"), f.log_constant);
    s.put(&format!("{prefix}rms"), f.rms);
}

fn fit(cfg: &RunConfig) -> RunResult<Artifacts> {
    let mut art = Artifacts::default();
    let sle = sle_config(cfg)?;
    let grid = sector_grid(cfg)?;
    let f = cfg.fit.as_ref().ok_or_else(|| missing("fit"))?;
    let mut sw = Stopwatch::new(&mut art);
    let (mesh, cone) = sector_mesh(grid)?;
    let outer = match f.outer {
        Some(v) if v > 0.0 => OuterData::Constant(v),
        _ => OuterData::Zero,
    };
    let data = sector_boundary(&mesh, &cone, outer)?;
    let (u, report) = solve_singular(&mesh, &sle, &data)?;
    sw.lap("solve");
    let samples = sample_ray(
        &u,
        &mesh,
        grid.theta / 2.0,
        f.t_min.unwrap_or(2f64.powi(-9)),
        f.t_max.unwrap_or(2f64.powi(-3)),
        f.samples.unwrap_or(25),
    )?;
    let phi = f.phi.unwrap_or(sle.beta());
    let pure = fit_growth(&samples, GrowthModel::Pure, None)?;
    let log = fit_growth(&samples, GrowthModel::LogAugmented, Some(phi))?;
    sw.lap("fit");
    art.warnings.extend(report.warnings.iter().cloned());
    let chosen = match f.model.unwrap_or(FitModel::Pure) {
        FitModel::Pure => &pure,
        FitModel::Log => &log,
    };
    let mut t = Table::new("trace", &["t", "u", "fit"]);
    for &(x, v) in &samples {
        t.push(vec![x.into(), v.into(), chosen.predict(x).into()]);
    }
    art.tables.push(t);
    let s = &mut art.summary;
    s.put("theta", grid.theta);
    s.put("gamma", sle.gamma);
    s.put("class", classify(&cone, sle.gamma)?.class.to_string());
    fit_summary(s, "pure.", &pure);
    fit_summary(s, "log.", &log);
    s.put("rms_reduction", 1.0 - log.rms / pure.rms);
    report_summary(s, "solve.", &report);
    Ok(art)
}

fn recursion_table(tr: &RecursionTrace) -> Table {
    let mut t = Table::new("trace", &["k", "value", "scaled"]);
    for &(k, v, sc) in &tr.checkpoints {
        t.push(vec![k.into(), v.into(), sc.into()]);
    }
    t
}

fn recursion(cfg: &RunConfig) -> RunResult<Artifacts> {
    let mut art = Artifacts::default();
    let r = cfg.recursion.as_ref().ok_or_else(|| missing("recursion"))?;
    let k_max = r.k_max.unwrap_or(1_000_000);
    let kind = r.kind.unwrap_or(RecursionKindCfg::Ak);
    let tr = match kind {
        RecursionKindCfg::Ak => ak_recursion(cfg.gamma()?, r.a1.unwrap_or(10.0), k_max)?,
        RecursionKindCfg::Geometric | RecursionKindCfg::Harmonic => {
            let mode = if kind == RecursionKindCfg::Geometric {
                SigmaMode::Geometric
            } else {
                SigmaMode::Harmonic
            };
            sigma_recursion(r.q_big.unwrap_or(1.0), r.q.unwrap_or(0.5), mode, k_max)?
        }
    };
    art.tables.push(recursion_table(&tr));
    let s = &mut art.summary;
    s.put(
        "kind",
        match kind {
            RecursionKindCfg::Ak => "ak",
            RecursionKindCfg::Geometric => "geometric",
            RecursionKindCfg::Harmonic => "harmonic",
        },
    );
    s.put("k_max", tr.k_max);
    s.put("final_value", tr.final_value);
    s.put("scaled_final", tr.scaled_final);
    s.put("scaled_sup", tr.scaled_sup);
    s.put("tail_monotone", tr.tail_monotone.to_string());
    if let Some(e) = tr.closed_form_error {
        s.put("closed_form_error", e);
    }
    if kind == RecursionKindCfg::Ak {
        s.put("continuum_limit", slef_core::analysis::ak_continuum_limit(cfg.gamma()?));
    }
    Ok(art)
}

fn harnack(cfg: &RunConfig) -> RunResult<Artifacts> {
    let mut art = Artifacts::default();
    let sle = sle_config(cfg)?;
    let grid = sector_grid(cfg)?;
    let h = cfg.harnack.as_ref().ok_or_else(|| missing("harnack"))?;
    let mut sw = Stopwatch::new(&mut art);
    let (mesh, cone) = sector_mesh(grid)?;
    let du = sector_boundary(&mesh, &cone, OuterData::Constant(h.outer_u.unwrap_or(1.0)))?;
    let dv = sector_boundary(&mesh, &cone, OuterData::Constant(h.outer_v.unwrap_or(2.0)))?;
    let (u, ru) = solve_singular(&mesh, &sle, &du)?;
    let (v, rv) = solve_singular(&mesh, &sle, &dv)?;
    sw.lap("solve");
    let depths = h
        .depths
        .clone()
        .unwrap_or_else(|| (3..=8).map(|k| 2f64.powi(-k)).collect());
    let dir = [(grid.theta / 2.0).cos(), (grid.theta / 2.0).sin()];
    let path: Vec<(f64, Point)> = depths.iter().map(|&t| (t, [t * dir[0], t * dir[1]])).collect();
    let region = ProbeRegion::Ball {
        center: [0.0, 0.0],
        radius: h.region_radius.unwrap_or(grid.radius / 2.0),
    };
    let probe = ratio_probe(&u, &v, &mesh, region, &path, sle.gamma)?;
    sw.lap("probe");
    art.warnings.extend(ru.warnings.iter().chain(&rv.warnings).cloned());
    let mut t = Table::new("ratio", &["depth", "u", "v", "ratio", "deviation"]);
    for (smp, d) in probe.path.iter().zip(&probe.deviation) {
        t.push(vec![smp.param.into(), smp.u.into(), smp.v.into(), smp.ratio.into(), (*d).into()]);
    }
    art.tables.push(t);
    let s = &mut art.summary;
    s.put("theta", grid.theta);
    s.put("class", classify(&cone, sle.gamma)?.class.to_string());
    s.put("sup", probe.sup);
    s.put("inf", probe.inf);
    s.put("region_nodes", probe.region_nodes);
    s.put("inversions", probe.inversions.len());
    s.put("decay_rate", probe.decay_rate.unwrap_or(f64::NAN));
    s.put("template_beta", probe.template.beta);
    s.put("template_c", probe.template.c_empirical);
    report_summary(s, "u.", &ru);
    report_summary(s, "v.", &rv);
    Ok(art)
}

fn probe_table(name: &str, samples: &[ProbeSample]) -> Table {
    let mut t = Table::new(name, &["depth", "u", "v", "ratio"]);
    for &(d, u, v, r) in samples {
        t.push(vec![d.into(), u.into(), v.into(), r.into()]);
    }
    t
}

fn counterexample(cfg: &RunConfig) -> RunResult<Artifacts> {
    let mut art = Artifacts::default();
    let c = cfg.counterexample.as_ref().ok_or_else(|| missing("counterexample"))?;
    let mut ce = CounterexampleConfig {
        gamma: cfg.gamma()?,
        h: cfg.mesh()?.h.ok_or_else(|| missing("mesh.h"))?,
        k: c.k,
        ..Default::default()
    };
    if let Some(v) = c.radius {
        ce.radius = v;
    }
    if let Some(v) = c.i_max {
        ce.i_max = v;
    }
    if let Some(v) = c.slope_margin {
        ce.slope_margin = v;
    }
    if let Some(v) = c.apex_index {
        ce.apex_index = v;
    }
    if let Some(v) = c.depths {
        ce.depths = v;
    }
    let mut sw = Stopwatch::new(&mut art);
    let r = counterexample_experiment(&ce)?;
    sw.lap("solve");
    art.warnings
        .extend(r.u_report.warnings.iter().chain(&r.v_report.warnings).cloned());
    art.tables.push(probe_table("midline", &r.midline));
    art.tables.push(probe_table("apex", &r.apex));
    let s = &mut art.summary;
    s.put("k", r.k);
    s.put("k_min", r.k_min);
    s.put("mesh_nodes", r.mesh_nodes);
    s.put("min_u_minus_phi", r.min_u_minus_phi);
    s.put("min_psi_minus_v", r.min_psi_minus_v);
    s.put("comparison_holds", r.comparison_holds(1e-10).to_string());
    s.put("separation", r.separation);
    report_summary(s, "u.", &r.u_report);
    report_summary(s, "v.", &r.v_report);
    Ok(art)
}

fn probe(cfg: &RunConfig) -> RunResult<Artifacts> {
    let mut art = Artifacts::default();
    let gamma = cfg.gamma()?;
    let grid = sector_grid(cfg)?;
    let caps = cfg
        .probe
        .as_ref()
        .and_then(|p| p.caps.clone())
        .ok_or_else(|| missing("probe.caps"))?;
    let mut sw = Stopwatch::new(&mut art);
    let r = critical_source_probe(grid, gamma, &caps)?;
    sw.lap("probe");
    let mut t = Table::new("trend", &["cap", "sup_w"]);
    for &(m, w) in &r.trend {
        t.push(vec![m.into(), w.into()]);
    }
    art.tables.push(t);
    let s = &mut art.summary;
    s.put("theta", r.theta);
    s.put("gamma", r.gamma);
    s.put(
        "class",
        r.criticality.map(|c| c.to_string()).unwrap_or_else(|| "linear".into()),
    );
    s.put("last_change", r.last_change);
    Ok(art)
}
