//! The TOML problem definition and its resolution into toolkit objects.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use waveguide_core::assumption_checker::CheckerConfig;
use waveguide_core::cross_section::{CrossSection, GridMask};
use waveguide_core::curvature::{Curvature, CurvatureProfile, SampledCurvature};
use waveguide_core::grid::MIN_TRANSVERSE_NODES;
use waveguide_core::spectral_engine::bound_states::{ConvergencePolicy, Discretization};
use waveguide_core::tube_metric::{GaussCurvature, SurfaceData};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    EuclideanTube,
    SurfaceStrip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub kind: ProblemKind,
    pub dimension: usize,
    /// Curvature data and the metric live on [−s_range, s_range]. Defaults to the
    /// largest truncation length plus a margin.
    pub s_range: Option<f64>,
    #[serde(default = "default_frame_step")]
    pub frame_step: f64,
    /// Treat the tube as an abstract Riemannian manifold and skip the overlap test.
    #[serde(default)]
    pub waive_overlap: bool,
}

fn default_frame_step() -> f64 {
    1.0 / 16.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CurvatureSpec {
    Constant {
        value: f64,
    },
    /// amplitude·exp(−((s − center)/sigma)²)
    GaussianBump {
        amplitude: f64,
        sigma: f64,
        #[serde(default)]
        center: f64,
    },
    /// amplitude·(1 + (s/sigma)²)^(−exponent/2)
    PowerTail {
        amplitude: f64,
        sigma: f64,
        exponent: f64,
    },
    /// Two-column samples `s value`, separated by whitespace or commas; `#` starts a comment.
    Table {
        file: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CrossSectionSpec {
    Interval {
        half_width: f64,
    },
    Rectangle {
        sides: Vec<f64>,
    },
    Disc {
        radius: f64,
    },
    /// A character image, '#' inside, stretched over the box [lower, upper].
    Mask {
        lower: [f64; 2],
        upper: [f64; 2],
        rows: Vec<String>,
        resolution: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    /// Constant Gauss curvature K.
    pub gauss: Option<f64>,
    /// Samples `s u K` on a tensor grid, interpolated bilinearly.
    pub gauss_table: Option<PathBuf>,
    #[serde(default = "default_strip_step")]
    pub s_step: f64,
    #[serde(default = "default_strip_nodes")]
    pub u_nodes: usize,
}

fn default_strip_step() -> f64 {
    1.0 / 32.0
}

fn default_strip_nodes() -> usize {
    65
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscretizationSpec {
    Transformed,
    Weighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub initial_half_length: f64,
    pub max_half_length: f64,
    pub fixed_half_length: Option<f64>,
    pub coarse_spacing: f64,
    pub levels: usize,
    pub trunc_tol: f64,
    pub order_tolerance: f64,
    pub discretization: DiscretizationSpec,
    pub min_transverse_nodes: usize,
    /// Number of transverse thresholds ν₁ … ν_n computed.
    pub thresholds: usize,
    pub eigen_tol: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        let p = ConvergencePolicy::default();
        Self {
            initial_half_length: p.initial_half_length,
            max_half_length: p.max_half_length,
            fixed_half_length: None,
            coarse_spacing: p.coarse_spacing,
            levels: p.levels,
            trunc_tol: p.trunc_tol,
            order_tolerance: p.order_tolerance,
            discretization: DiscretizationSpec::Transformed,
            min_transverse_nodes: MIN_TRANSVERSE_NODES,
            thresholds: 4,
            eigen_tol: p.eigen.tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckerSpec {
    pub r0: f64,
    pub zero_tol: f64,
    pub theta_min: f64,
    pub max_rms: f64,
    pub samples: usize,
    pub noise_floor: f64,
}

impl Default for CheckerSpec {
    fn default() -> Self {
        let c = CheckerConfig::default();
        Self {
            r0: c.r0,
            zero_tol: c.zero_tol,
            theta_min: c.theta_min,
            max_rms: c.max_rms,
            samples: c.samples,
            noise_floor: c.noise_floor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MourreSpec {
    pub half_length: f64,
    pub spacing: f64,
    /// Window centres given directly.
    pub lambdas: Vec<f64>,
    /// Window centres ν_n + f·(ν_{n+1} − ν_n) given as pairs [n, f] with n ≥ 1.
    pub gaps: Vec<[f64; 2]>,
    pub relative_tol: f64,
    pub max_doublings: usize,
}

impl Default for MourreSpec {
    fn default() -> Self {
        Self {
            half_length: 64.0,
            spacing: 1.0 / 16.0,
            lambdas: vec![],
            gaps: vec![[1.0, 0.3], [1.0, 0.7], [2.0, 0.4]],
            relative_tol: 0.05,
            max_doublings: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExportSpec {
    pub half_length: f64,
    pub s_samples: usize,
    pub u_samples: usize,
}

impl Default for ExportSpec {
    fn default() -> Self {
        Self {
            half_length: 10.0,
            s_samples: 201,
            u_samples: 9,
        }
    }
}

/// One waveguide problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveguideConfig {
    pub problem: Problem,
    #[serde(default)]
    pub curvature: Vec<CurvatureSpec>,
    pub cross_section: CrossSectionSpec,
    pub surface: Option<SurfaceSpec>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub checker: CheckerSpec,
    #[serde(default)]
    pub mourre: MourreSpec,
    #[serde(default)]
    pub export: ExportSpec,
}

/// A report file written by this tool: the config sits under `[config]`.
#[derive(Deserialize)]
struct Embedded {
    config: WaveguideConfig,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(format!("{name} must be positive, got {v}")))
    }
}

impl WaveguideConfig {
    /// Reads a config file, or the `[config]` table of a report written earlier.
    /// Relative table paths are resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let value: toml::Table = toml::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let parsed = if value.contains_key("config") {
            toml::from_str::<Embedded>(&text).map(|e| e.config)
        } else {
            toml::from_str::<WaveguideConfig>(&text)
        };
        let mut config = parsed.map_err(|e| bad(format!("{}: {e}", path.display())))?;
        config.resolve(path.parent().unwrap_or(Path::new(".")))?;
        Ok(config)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut config: WaveguideConfig = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        config.resolve(base)?;
        Ok(config)
    }

    /// Fills every defaulted value, makes paths absolute and validates.
    fn resolve(&mut self, base: &Path) -> Result<(), CliError> {
        let absolute = |p: &mut PathBuf| -> Result<(), CliError> {
            let joined = if p.is_absolute() { p.clone() } else { base.join(&*p) };
            *p = joined.canonicalize().map_err(|e| bad(format!("{}: {e}", joined.display())))?;
            Ok(())
        };
        for c in &mut self.curvature {
            if let CurvatureSpec::Table { file } = c {
                absolute(file)?;
            }
        }
        if let Some(SurfaceSpec {
            gauss_table: Some(file), ..
        }) = &mut self.surface
        {
            absolute(file)?;
        }
        if self.problem.s_range.is_none() {
            let n = &self.numerics;
            let longest = n.fixed_half_length.unwrap_or(n.max_half_length).max(self.export.half_length);
            self.problem.s_range = Some(longest + 8.0);
        }
        self.validate()
    }

    fn validate(&self) -> Result<(), CliError> {
        let d = self.problem.dimension;
        if d < 2 {
            return Err(bad("problem.dimension must be at least 2"));
        }
        positive("problem.s_range", self.s_range())?;
        positive("problem.frame_step", self.problem.frame_step)?;
        let dims = match &self.cross_section {
            CrossSectionSpec::Interval { .. } => 1,
            CrossSectionSpec::Rectangle { sides } => sides.len(),
            CrossSectionSpec::Disc { .. } | CrossSectionSpec::Mask { .. } => 2,
        };
        if dims != d - 1 {
            return Err(bad(format!("cross_section has dimension {dims}, expected {}", d - 1)));
        }
        match self.problem.kind {
            ProblemKind::EuclideanTube => {
                if self.surface.is_some() {
                    return Err(bad("[surface] is only meaningful for problem.kind = \"surface-strip\""));
                }
                if self.curvature.len() != d - 1 {
                    return Err(bad(format!(
                        "a tube in dimension {d} needs {} [[curvature]] entries, found {}",
                        d - 1,
                        self.curvature.len()
                    )));
                }
            }
            ProblemKind::SurfaceStrip => {
                if d != 2 {
                    return Err(bad("surface strips have problem.dimension = 2"));
                }
                if self.curvature.len() != 1 {
                    return Err(bad("a surface strip needs exactly one [[curvature]] entry (the geodesic curvature)"));
                }
                let s = self.surface.as_ref().ok_or_else(|| bad("surface strips need a [surface] table"))?;
                if s.gauss.is_some() == s.gauss_table.is_some() {
                    return Err(bad("[surface] needs exactly one of gauss and gauss_table"));
                }
                positive("surface.s_step", s.s_step)?;
                if s.u_nodes < 5 {
                    return Err(bad("surface.u_nodes must be at least 5"));
                }
                if !matches!(self.cross_section, CrossSectionSpec::Interval { .. }) {
                    return Err(bad("surface strips have an interval cross-section"));
                }
            }
        }
        let n = &self.numerics;
        positive("numerics.initial_half_length", n.initial_half_length)?;
        positive("numerics.max_half_length", n.max_half_length)?;
        positive("numerics.coarse_spacing", n.coarse_spacing)?;
        positive("numerics.eigen_tol", n.eigen_tol)?;
        if let Some(l) = n.fixed_half_length {
            positive("numerics.fixed_half_length", l)?;
        }
        if n.levels < 2 {
            return Err(bad("numerics.levels must be at least 2"));
        }
        if n.thresholds < 2 {
            return Err(bad("numerics.thresholds must be at least 2"));
        }
        positive("mourre.half_length", self.mourre.half_length)?;
        positive("mourre.spacing", self.mourre.spacing)?;
        for [k, f] in &self.mourre.gaps {
            if *k < 1.0 || k.fract() != 0.0 || !(0.0..=1.0).contains(f) {
                return Err(bad(format!("mourre.gaps entry [{k}, {f}] needs an integer n >= 1 and 0 <= f <= 1")));
            }
        }
        positive("export.half_length", self.export.half_length)?;
        if self.export.s_samples < 2 || self.export.u_samples < 2 {
            return Err(bad("export.s_samples and export.u_samples must be at least 2"));
        }
        positive("checker.r0", self.checker.r0)?;
        Ok(())
    }

    pub fn s_range(&self) -> f64 {
        self.problem.s_range.unwrap_or(f64::NAN)
    }

    pub fn curvature_profile(&self) -> Result<CurvatureProfile, CliError> {
        let kappas = self.curvature.iter().map(curvature).collect::<Result<Vec<_>, _>>()?;
        let r = self.s_range();
        Ok(CurvatureProfile::new(self.problem.dimension, kappas, (-r, r))?)
    }

    pub fn cross_section(&self) -> Result<CrossSection, CliError> {
        let omega = match &self.cross_section {
            CrossSectionSpec::Interval { half_width } => CrossSection::interval(*half_width),
            CrossSectionSpec::Rectangle { sides } => CrossSection::Rectangle { sides: sides.clone() },
            CrossSectionSpec::Disc { radius } => CrossSection::Disc { radius: *radius },
            CrossSectionSpec::Mask { lower, upper, rows, .. } => {
                CrossSection::GridMask(GridMask::from_image(*lower, *upper, rows)?)
            }
        };
        omega.validate()?;
        Ok(omega)
    }

    pub fn mask_resolution(&self) -> Option<usize> {
        match &self.cross_section {
            CrossSectionSpec::Mask { resolution, .. } => *resolution,
            _ => None,
        }
    }

    pub fn surface(&self) -> Result<Option<SurfaceData>, CliError> {
        let Some(spec) = &self.surface else {
            return Ok(None);
        };
        let kappa = curvature(&self.curvature[0])?;
        let half_width = self.cross_section()?.radius();
        let gauss: GaussCurvature = match (&spec.gauss, &spec.gauss_table) {
            (Some(k), _) => {
                let k = *k;
                Arc::new(move |_, _| k)
            }
            (None, Some(file)) => Arc::new(GaussTable::read(file)?.into_fn()),
            (None, None) => return Err(bad("[surface] needs gauss or gauss_table")),
        };
        Ok(Some(SurfaceData {
            gauss,
            kappa_geodesic: kappa,
            half_width,
        }))
    }

    pub fn policy(&self) -> ConvergencePolicy {
        let n = &self.numerics;
        let mut p = ConvergencePolicy {
            initial_half_length: n.initial_half_length,
            max_half_length: n.max_half_length,
            coarse_spacing: n.coarse_spacing,
            levels: n.levels,
            trunc_tol: n.trunc_tol,
            order_tolerance: n.order_tolerance,
            fixed_half_length: n.fixed_half_length,
            ..ConvergencePolicy::default()
        };
        p.eigen.tol = n.eigen_tol;
        p
    }

    pub fn discretization(&self) -> Discretization {
        match self.numerics.discretization {
            DiscretizationSpec::Transformed => Discretization::Transformed,
            DiscretizationSpec::Weighted => Discretization::Weighted,
        }
    }

    pub fn checker(&self) -> CheckerConfig {
        let c = &self.checker;
        CheckerConfig {
            r0: c.r0,
            zero_tol: c.zero_tol,
            theta_min: c.theta_min,
            max_rms: c.max_rms,
            samples: c.samples,
            noise_floor: c.noise_floor,
            ..CheckerConfig::default()
        }
    }

    /// The config as TOML, with every default filled in.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }
}

fn read_columns(file: &Path, columns: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let text = fs::read_to_string(file).map_err(|e| bad(format!("{}: {e}", file.display())))?;
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Result<Vec<f64>, _> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .map(str::parse)
            .collect();
        match fields {
            Ok(f) if f.len() == columns => rows.push(f),
            _ => {
                return Err(bad(format!(
                    "{}:{}: expected {columns} numbers",
                    file.display(),
                    n + 1
                )))
            }
        }
    }
    Ok(rows)
}

fn curvature(spec: &CurvatureSpec) -> Result<Curvature, CliError> {
    Ok(match spec {
        CurvatureSpec::Constant { value } => Curvature::Constant(*value),
        CurvatureSpec::GaussianBump {
            amplitude,
            sigma,
            center,
        } => {
            positive("curvature.sigma", *sigma)?;
            Curvature::GaussianBump {
                amplitude: *amplitude,
                sigma: *sigma,
                center: *center,
            }
        }
        CurvatureSpec::PowerTail {
            amplitude,
            sigma,
            exponent,
        } => {
            positive("curvature.sigma", *sigma)?;
            Curvature::power_tail(*amplitude, *sigma, *exponent)
        }
        CurvatureSpec::Table { file } => {
            let rows = read_columns(file, 2)?;
            let (s, v) = rows.into_iter().map(|r| (r[0], r[1])).unzip();
            Curvature::Sampled(SampledCurvature::new(s, v)?)
        }
    })
}

/// Gauss curvature samples on a tensor grid.
struct GaussTable {
    s: Vec<f64>,
    u: Vec<f64>,
    /// `k[i * u.len() + j]` at (s[i], u[j]).
    k: Vec<f64>,
}

impl GaussTable {
    fn read(file: &Path) -> Result<Self, CliError> {
        let mut rows = read_columns(file, 3)?;
        rows.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        let mut s: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        s.dedup();
        let mut u: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        u.sort_by(f64::total_cmp);
        u.dedup();
        if s.len() < 2 || u.len() < 2 || rows.len() != s.len() * u.len() {
            return Err(bad(format!(
                "{}: gauss_table must cover a full tensor grid of at least 2 x 2 points",
                file.display()
            )));
        }
        for (n, r) in rows.iter().enumerate() {
            if r[0] != s[n / u.len()] || r[1] != u[n % u.len()] {
                return Err(bad(format!("{}: gauss_table is not a tensor grid", file.display())));
            }
        }
        let k = rows.into_iter().map(|r| r[2]).collect();
        Ok(Self { s, u, k })
    }

    fn into_fn(self) -> impl Fn(f64, f64) -> f64 + Send + Sync {
        move |s, u| {
            let locate = |xs: &[f64], x: f64| {
                let x = x.clamp(xs[0], xs[xs.len() - 1]);
                let i = xs.partition_point(|v| *v <= x).clamp(1, xs.len() - 1) - 1;
                (i, (x - xs[i]) / (xs[i + 1] - xs[i]))
            };
            let (i, a) = locate(&self.s, s);
            let (j, b) = locate(&self.u, u);
            let n = self.u.len();
            let at = |p: usize, q: usize| self.k[p * n + q];
            (1.0 - a) * ((1.0 - b) * at(i, j) + b * at(i, j + 1)) + a * ((1.0 - b) * at(i + 1, j) + b * at(i + 1, j + 1))
        }
    }
}
