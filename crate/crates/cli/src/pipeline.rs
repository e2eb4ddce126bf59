//! Subcommand orchestration: geometry, metric, assumption gate, operator, spectrum.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use nalgebra::DVector;
use serde::Serialize;
use waveguide_core::assumption_checker::{
    check_basic, check_coefficient_assumptions, check_curvature_decay, check_metric_hypotheses, AssumptionReport,
    OverlapEvidence, Verdict,
};
use waveguide_core::cross_section::{cross_section_spectrum, CrossSection, ThresholdSet};
use waveguide_core::curvature::CurvatureProfile;
use waveguide_core::curve_geometry::{
    check_self_overlap, default_overlap_parameters, integrate_frenet_default, tube_embedding,
};
use waveguide_core::effective_operator::{effective_potential, CoefficientField};
use waveguide_core::numerics::linspace;
use waveguide_core::spectral_engine::bound_states::{bound_states, TubeRecipe};
use waveguide_core::spectral_engine::mourre::{mourre_check_straight, MourreOptions, MourreWindow};
use waveguide_core::spectral_engine::SpectralReport;
use waveguide_core::tube_metric::{metric_from_jacobi, write_metric_csv, EuclideanTubeMetric, TubeMetric};

use crate::config::{ProblemKind, WaveguideConfig};
use crate::{exit, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Check,
    Export,
    Mourre,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Check => "check",
            Command::Export => "export",
            Command::Mourre => "mourre",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Run the spectral pipeline even when the assumption gate fails.
    pub force: bool,
    pub verbose: bool,
}

/// What a run decided, and the files it wrote.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub message: String,
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct RunSummary<'a> {
    command: &'a str,
    status: &'a str,
    exit_code: i32,
    message: &'a str,
}

#[derive(Serialize)]
struct ExportSummary {
    vertices: usize,
    s_samples: usize,
    u_samples: usize,
    files: Vec<String>,
}

#[derive(Serialize)]
struct ReportFile<'a> {
    run: RunSummary<'a>,
    config: &'a WaveguideConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    spectrum: Option<&'a SpectralReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    export: Option<&'a ExportSummary>,
}

struct Context<'a> {
    config: &'a WaveguideConfig,
    opts: &'a RunOptions,
    files: Vec<PathBuf>,
}

impl Context<'_> {
    fn log(&self, msg: impl AsRef<str>) {
        if self.opts.verbose {
            eprintln!("[waveguide] {}", msg.as_ref());
        }
    }

    fn write(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
        let path = self.opts.out.join(name);
        let io = |source| CliError::Io {
            path: path.display().to_string(),
            source,
        };
        let file = fs::File::create(&path).map_err(io)?;
        let mut w = BufWriter::new(file);
        body(&mut w).and_then(|_| w.flush()).map_err(io)?;
        self.log(format!("wrote {}", path.display()));
        self.files.push(path);
        Ok(())
    }

    /// report.txt: a timestamp line, then TOML holding the run summary, the resolved
    /// config and the results.
    fn report(
        &mut self,
        command: Command,
        code: i32,
        message: &str,
        spectrum: Option<&SpectralReport>,
        export: Option<&ExportSummary>,
    ) -> Result<(), CliError> {
        let status = match code {
            exit::PASS => "pass",
            exit::ASSUMPTIONS => "assumption-failure",
            exit::SOLVER => "solver-failure",
            _ => "config-error",
        };
        let body = ReportFile {
            run: RunSummary {
                command: command.name(),
                status,
                exit_code: code,
                message,
            },
            config: self.config,
            spectrum,
            export,
        };
        let text = toml::to_string(&body).map_err(|e| CliError::Config(format!("report serialization: {e}")))?;
        let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        self.write("report.txt", |w| {
            writeln!(w, "# timestamp: {stamp} (unix seconds)")?;
            w.write_all(text.as_bytes())
        })
    }
}

/// Runs one subcommand. Errors before any report could be produced are returned as
/// `Err`; everything else ends in an [`Outcome`] whose code is the exit status.
pub fn run(command: Command, config: &WaveguideConfig, opts: &RunOptions) -> Result<Outcome, CliError> {
    fs::create_dir_all(&opts.out).map_err(|source| CliError::Io {
        path: opts.out.display().to_string(),
        source,
    })?;
    let mut ctx = Context {
        config,
        opts,
        files: vec![],
    };
    let (code, message) = match command {
        Command::Spectrum => spectrum(&mut ctx)?,
        Command::Check => check(&mut ctx)?,
        Command::Export => export(&mut ctx)?,
        Command::Mourre => mourre(&mut ctx)?,
    };
    Ok(Outcome {
        code,
        message,
        files: ctx.files,
    })
}

struct Geometry {
    omega: CrossSection,
    profile: Option<CurvatureProfile>,
    metric: Arc<dyn TubeMetric>,
    thresholds: ThresholdSet,
}

fn geometry(ctx: &Context<'_>) -> Result<Geometry, CliError> {
    let cfg = ctx.config;
    let omega = cfg.cross_section()?;
    let thresholds = cross_section_spectrum(&omega, cfg.numerics.thresholds, cfg.mask_resolution())?;
    ctx.log(format!("cross-section {}, nu1 = {:.10}", omega.describe(), thresholds.nu1()));
    let r = cfg.s_range();
    let (profile, metric): (Option<CurvatureProfile>, Arc<dyn TubeMetric>) = match cfg.problem.kind {
        ProblemKind::EuclideanTube => {
            let profile = cfg.curvature_profile()?;
            ctx.log(format!("integrating the Tang frame on [-{r}, {r}]"));
            let metric = EuclideanTubeMetric::from_profile(&profile, omega.radius(), cfg.problem.frame_step)?;
            (Some(profile), Arc::new(metric))
        }
        ProblemKind::SurfaceStrip => {
            let surface = cfg.surface()?.expect("validated: strips carry a surface");
            let spec = cfg.surface.as_ref().expect("validated");
            let n_s = (2.0 * r / spec.s_step).ceil() as usize + 1;
            let a = surface.half_width;
            ctx.log(format!("solving the Jacobi equation on {n_s} columns"));
            let metric = metric_from_jacobi(&surface, &linspace(-r, r, n_s), &linspace(-a, a, spec.u_nodes))?;
            (None, Arc::new(metric))
        }
    };
    Ok(Geometry {
        omega,
        profile,
        metric,
        thresholds,
    })
}

fn assumptions(ctx: &Context<'_>, g: &Geometry) -> Result<AssumptionReport, CliError> {
    let cfg = ctx.config;
    let checker = cfg.checker();
    let overlap = match (&g.profile, cfg.problem.waive_overlap) {
        (_, true) => None,
        (Some(profile), false) => {
            let a = g.omega.radius();
            let r = cfg.s_range();
            let step = (0.25 * a).min(0.25);
            let n = (2.0 * r / step).ceil() as usize + 1;
            ctx.log(format!("overlap heuristic on {n} centreline samples"));
            let frame = integrate_frenet_default(profile, &linspace(-r, r, n))?;
            let d = profile.dimension();
            let cloud = tube_embedding(&frame, &[DVector::zeros(d - 1)], a)?;
            let (sep, clearance) = default_overlap_parameters(a);
            Some(check_self_overlap(&cloud, sep, clearance)?)
        }
        (None, false) => None,
    };
    let evidence = match (&overlap, cfg.problem.waive_overlap) {
        (Some(r), _) => OverlapEvidence::Checked(r),
        (None, true) => OverlapEvidence::Waived,
        (None, false) => OverlapEvidence::NotChecked,
    };
    let metric = g.metric.as_ref();
    let mut report = check_basic(g.profile.as_ref(), metric, evidence, &checker)?;
    let decay = match &g.profile {
        Some(profile) => check_curvature_decay(profile, &checker)?,
        None => check_metric_hypotheses(metric, &checker)?,
    };
    report = report.merge(decay);
    let coeffs = CoefficientField::new(g.metric.clone());
    let potential = effective_potential(g.metric.clone());
    report = report.merge(check_coefficient_assumptions(&coeffs, &potential, &checker)?);
    ctx.log(format!("assumption gate: {}", report.overall));
    Ok(report)
}

fn failed_items(report: &AssumptionReport) -> String {
    let ids: Vec<&str> = report
        .entries
        .iter()
        .filter(|e| e.verdict == Verdict::Fail)
        .map(|e| e.id.as_str())
        .collect();
    ids.join(", ")
}

fn spectrum(ctx: &mut Context<'_>) -> Result<(i32, String), CliError> {
    let g = geometry(ctx)?;
    let mut report = SpectralReport::new(&g.thresholds);
    let gate = assumptions(ctx, &g)?;
    let gate_failed = gate.overall == Verdict::Fail;
    let inconclusive = gate.overall == Verdict::Inconclusive;
    report.assumptions = Some(gate.clone());
    if gate_failed && !ctx.opts.force {
        let msg = format!("assumption gate failed ({}); rerun with --force to compute anyway", failed_items(&gate));
        ctx.report(Command::Spectrum, exit::ASSUMPTIONS, &msg, Some(&report), None)?;
        return Ok((exit::ASSUMPTIONS, msg));
    }
    if gate_failed {
        report.limitations.push(format!("computed under --force although {} failed", failed_items(&gate)));
    }
    if inconclusive {
        report.limitations.push("some hypotheses could not be settled on the finite s-range".into());
    }
    let cfg = ctx.config;
    let mut recipe = TubeRecipe::new(g.metric.clone(), g.omega.clone(), cfg.discretization());
    recipe.min_transverse_nodes = cfg.numerics.min_transverse_nodes;
    ctx.log("running the truncation and spacing ladders");
    let result = bound_states(&recipe, &g.thresholds, &cfg.policy());
    let (code, msg) = match result {
        Ok(b) => {
            if !b.note.is_empty() {
                ctx.log(&b.note);
            }
            let sound = b.is_sound();
            let msg = if sound {
                format!("{} bound state(s) below nu1 = {:.10}", b.states.len(), b.nu1)
            } else {
                format!("report not sound: {}", b.note)
            };
            report.bound_states = Some(b);
            (if sound { exit::PASS } else { exit::SOLVER }, msg)
        }
        Err(e) => {
            let err = CliError::Core(e);
            (err.exit_code(), err.to_string())
        }
    };
    ctx.report(Command::Spectrum, code, &msg, Some(&report), None)?;
    let csv = report.spectrum_csv();
    ctx.write("spectrum.csv", |w| w.write_all(csv.as_bytes()))?;
    Ok((code, msg))
}

fn check(ctx: &mut Context<'_>) -> Result<(i32, String), CliError> {
    let g = geometry(ctx)?;
    let mut report = SpectralReport::new(&g.thresholds);
    let gate = assumptions(ctx, &g)?;
    let (code, msg) = match gate.overall {
        Verdict::Fail => (exit::ASSUMPTIONS, format!("failed: {}", failed_items(&gate))),
        v => (exit::PASS, format!("assumption check {v}")),
    };
    report.assumptions = Some(gate);
    ctx.report(Command::Check, code, &msg, Some(&report), None)?;
    Ok((code, msg))
}

/// Sample points of the cross-section for the mesh: a line across an interval, the
/// boundary of a disc or rectangle.
fn section_points(omega: &CrossSection, n: usize) -> Result<Vec<DVector<f64>>, CliError> {
    let ring = |f: &dyn Fn(f64) -> [f64; 2]| -> Vec<DVector<f64>> {
        (0..n)
            .map(|k| DVector::from_row_slice(&f(2.0 * std::f64::consts::PI * k as f64 / n as f64)))
            .collect()
    };
    Ok(match omega {
        CrossSection::Interval { half_width } => {
            linspace(-half_width, *half_width, n).into_iter().map(|u| DVector::from_element(1, u)).collect()
        }
        CrossSection::Disc { radius } => ring(&|t| [radius * t.cos(), radius * t.sin()]),
        CrossSection::Rectangle { sides } if sides.len() == 2 => {
            let (a, b) = (0.5 * sides[0], 0.5 * sides[1]);
            // The boundary point in direction t, found by scaling the unit vector.
            ring(&|t| {
                let (c, s) = (t.cos(), t.sin());
                let scale = (a / c.abs().max(1e-300)).min(b / s.abs().max(1e-300));
                [scale * c, scale * s]
            })
        }
        _ => {
            return Err(CliError::Config(format!(
                "export supports interval, disc and two-dimensional rectangle cross-sections, not {}",
                omega.describe()
            )))
        }
    })
}

fn export(ctx: &mut Context<'_>) -> Result<(i32, String), CliError> {
    let g = geometry(ctx)?;
    let spec = &ctx.config.export;
    let s_grid = linspace(-spec.half_length, spec.half_length, spec.s_samples);
    let (points, summary) = match &g.profile {
        Some(profile) => {
            let frame = integrate_frenet_default(profile, &s_grid)?;
            let points = section_points(&g.omega, spec.u_samples)?;
            let cloud = tube_embedding(&frame, &points, g.omega.radius())?;
            ctx.write("mesh.txt", |w| cloud.write_mesh(w))?;
            (points, cloud.points.len())
        }
        None => {
            // A strip is an abstract surface: the mesh lists Fermi coordinates and h.
            let a = g.omega.radius();
            let u = linspace(-a, a, spec.u_samples);
            let metric = g.metric.clone();
            let s_values = s_grid.clone();
            let u_values = u.clone();
            ctx.write("mesh.txt", move |w| {
                writeln!(w, "# s u h")?;
                for &s in &s_values {
                    for &x in &u_values {
                        let h = metric.h(s, &[x]).map_err(std::io::Error::other)?;
                        writeln!(w, "{s:.12e} {x:.12e} {h:.12e}")?;
                    }
                }
                Ok(())
            })?;
            let points = u.into_iter().map(|x| DVector::from_element(1, x)).collect();
            (points, s_grid.len() * spec.u_samples)
        }
    };
    let u_values: Vec<Vec<f64>> = points.iter().map(|p| p.iter().copied().collect()).collect();
    let metric = g.metric.clone();
    ctx.write("metric.csv", |w| write_metric_csv(metric.as_ref(), &s_grid, &u_values, w))?;
    let summary = ExportSummary {
        vertices: summary,
        s_samples: s_grid.len(),
        u_samples: points.len(),
        files: vec!["mesh.txt".into(), "metric.csv".into()],
    };
    let msg = format!("{} vertices exported", summary.vertices);
    ctx.report(Command::Export, exit::PASS, &msg, None, Some(&summary))?;
    Ok((exit::PASS, msg))
}

fn windows(ctx: &Context<'_>, omega: &CrossSection) -> Result<(ThresholdSet, Vec<MourreWindow>), CliError> {
    let spec = &ctx.config.mourre;
    let deepest = spec.gaps.iter().map(|[n, _]| *n as usize).max().unwrap_or(0);
    let count = ctx.config.numerics.thresholds.max(2 * deepest + 2);
    let thresholds = cross_section_spectrum(omega, count, ctx.config.mask_resolution())?;
    let distinct = thresholds.distinct();
    let mut centres = spec.lambdas.clone();
    for [n, f] in &spec.gaps {
        let n = *n as usize;
        if n >= distinct.len() {
            return Err(CliError::Config(format!("mourre.gaps refers to threshold {} but only {} are known", n + 1, distinct.len())));
        }
        centres.push(distinct[n - 1] + f * (distinct[n] - distinct[n - 1]));
    }
    if centres.is_empty() {
        return Err(CliError::Config("mourre needs at least one window (mourre.lambdas or mourre.gaps)".into()));
    }
    let windows = centres.iter().map(|&l| MourreWindow::around(&thresholds, l)).collect::<Result<Vec<_>, _>>()?;
    Ok((thresholds, windows))
}

fn mourre(ctx: &mut Context<'_>) -> Result<(i32, String), CliError> {
    let omega = ctx.config.cross_section()?;
    let (thresholds, windows) = windows(ctx, &omega)?;
    let spec = &ctx.config.mourre;
    let opts = MourreOptions {
        relative_tol: spec.relative_tol,
        ..MourreOptions::default()
    };
    ctx.log(format!("Mourre check of H0 on {} window(s)", windows.len()));
    let mut report = SpectralReport::new(&thresholds);
    report
        .limitations
        .push("the Mourre estimate is measured for the straight tube H0 only".into());
    let (code, msg) = match mourre_check_straight(&omega, spec.half_length, spec.spacing, &thresholds, &windows, &opts, spec.max_doublings) {
        Ok((l, checks)) => {
            let passed = checks.iter().filter(|c| c.pass).count();
            let msg = format!("{passed} of {} windows pass at L = {l}", checks.len());
            report.mourre_checks = checks;
            (if passed == windows.len() { exit::PASS } else { exit::SOLVER }, msg)
        }
        Err(e) => {
            let err = CliError::Core(e);
            (err.exit_code(), err.to_string())
        }
    };
    ctx.report(Command::Mourre, code, &msg, Some(&report), None)?;
    let csv = report.mourre_csv();
    ctx.write("mourre.csv", |w| w.write_all(csv.as_bytes()))?;
    Ok((code, msg))
}

/// Reads the TOML body of a report, skipping the timestamp line.
pub fn report_body(path: &Path) -> std::io::Result<String> {
    let text = fs::read_to_string(path)?;
    Ok(text.lines().filter(|l| !l.starts_with("# timestamp:")).collect::<Vec<_>>().join("\n"))
}
