//! Scenario driver: a sectioned TOML file describes the geometry, media,
//! excitation, window, quadrature, solver, error targets and outputs of a
//! run or of a convergence study. [`run`] executes it and writes the CSV
//! tables, field slices and a flat manifest into an output directory.
//!
//! ```toml
//! name = "bump"
//!
//! [geometry]
//! kind = "hemispherical-bump"
//! radius = 1.0
//! mesh_size = 0.125
//!
//! [media]
//! omega = 6.283185307179586
//! pec_lower = true
//!
//! [excitation]
//! type = "planewave"
//! polarization = "te"
//! grazing_angle = 0.09817477042468103
//!
//! [window]
//! A = 3.0
//! c = 0.7
//!
//! [error]
//! target = "bump"
//!
//! [study]
//! mode = "h-sweep"
//! h = [0.25, 0.177, 0.125]
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_rhs, assemble_system, SurfaceCurrents};
use crate::error::{Error, Result};
use crate::fields::{relative_error, write_field_csv, write_vtk, EvalOptions, FieldEvaluator, FieldGrid};
use crate::geometry::{build_rwg_basis, make_surface, GeometryKind, GeometrySpec, Region, RwgBasis, TriangleMesh};
use crate::media::{
    DipoleSpec, EMField, Excitation, LayeredConfig, Material, PlanewaveSpec, Polarization, SourceField,
};
use crate::oracle::{fibonacci_sphere, BumpReference, MieSeries};
use crate::quadrature::QuadratureRule;
use crate::solver::{eigen_diagnostics, solve, write_residuals, Preconditioner, SolveOptions, SolveReport, SolverMethod};
use crate::window::{Window, WindowParams};
use crate::{CVec3, Complex64, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub geometry: GeometrySection,
    #[serde(default)]
    pub media: MediaSection,
    #[serde(default)]
    pub excitation: ExcitationSection,
    #[serde(default)]
    pub window: WindowSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    #[serde(default)]
    pub solve: SolveSection,
    #[serde(default)]
    pub error: ErrorSection,
    #[serde(default)]
    pub outputs: OutputSection,
    #[serde(default)]
    pub study: StudySection,
}

fn default_name() -> String {
    "scenario".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub kind: String,
    #[serde(default = "one")]
    pub radius: f64,
    pub mesh_size: f64,
    #[serde(default = "one")]
    pub grading: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aperture: Option<f64>,
}

fn one() -> f64 {
    1.0
}

/// Dimensionless units: the vacuum permittivity and permeability are one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MediaSection {
    pub omega: f64,
    pub eps1: f64,
    pub mu1: f64,
    pub eps2: f64,
    pub eps2_im: f64,
    pub mu2: f64,
    pub pec_lower: bool,
}

impl Default for MediaSection {
    fn default() -> Self {
        Self {
            omega: 2.0 * std::f64::consts::PI,
            eps1: 1.0,
            mu1: 1.0,
            eps2: 1.0,
            eps2_im: 0.0,
            mu2: 1.0,
            pec_lower: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExcitationSection {
    #[serde(rename = "type")]
    pub kind: String,
    pub polarization: String,
    pub grazing_angle: f64,
    pub amplitude: f64,
    pub dipoles: Vec<DipoleSection>,
}

impl Default for ExcitationSection {
    fn default() -> Self {
        Self {
            kind: "planewave".into(),
            polarization: "te".into(),
            grazing_angle: std::f64::consts::FRAC_PI_4,
            amplitude: 1.0,
            dipoles: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipoleSection {
    pub location: [f64; 3],
    pub moment: [f64; 3],
    #[serde(default)]
    pub moment_im: [f64; 3],
    #[serde(default = "upper")]
    pub region: String,
}

fn upper() -> String {
    "upper".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowSection {
    pub shape: String,
    #[serde(rename = "A")]
    pub a: f64,
    /// Second half-width of a rectangular window (defaults to `A`).
    #[serde(rename = "Ay", skip_serializing_if = "Option::is_none")]
    pub ay: Option<f64>,
    pub c: f64,
}

impl Default for WindowSection {
    fn default() -> Self {
        Self {
            shape: "radial".into(),
            a: 0.0,
            ay: None,
            c: 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSection {
    pub regular_points: usize,
    pub singular_order: usize,
    pub near_threshold: f64,
    pub near_order: usize,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        let q = QuadratureRule::default();
        Self {
            regular_points: q.regular_points,
            singular_order: q.singular_order,
            near_threshold: q.near_threshold,
            near_order: q.near_order,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveSection {
    /// `mfie` or `mueller`; inferred from `media.pec_lower` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formulation: Option<String>,
    pub method: String,
    pub preconditioner: String,
    pub tolerance: f64,
    pub restart: usize,
    pub max_iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub residuals: bool,
}

impl Default for SolveSection {
    fn default() -> Self {
        let s = SolveOptions::default();
        Self {
            formulation: None,
            method: "gmres".into(),
            preconditioner: "jacobi".into(),
            tolerance: s.tolerance,
            restart: s.restart,
            max_iterations: s.max_iterations,
            threads: None,
            residuals: false,
        }
    }
}

/// Where and against what the field error is measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ErrorSection {
    /// `none`, `source` (total field against the source field), `bump`
    /// (exact conducting-bump solution) or `self` (solution with window
    /// radius `reference_A` on the same mesh size).
    pub target: String,
    /// `hemisphere` or `disk`.
    pub points: String,
    pub count: usize,
    /// Hemisphere or disk radius; defaults to two wavelengths.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Hemisphere points below this height are dropped; the disk lies at
    /// this height. Defaults to a quarter wavelength.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
    #[serde(rename = "reference_A", skip_serializing_if = "Option::is_none")]
    pub reference_a: Option<f64>,
}

impl Default for ErrorSection {
    fn default() -> Self {
        Self {
            target: "none".into(),
            points: "hemisphere".into(),
            count: 200,
            radius: None,
            height: None,
            reference_a: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub slices: Vec<SliceSection>,
    /// Far fields are not produced; requesting them is a config error.
    pub far_field: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceSection {
    /// `xy`, `xz` or `yz`.
    pub plane: String,
    #[serde(default)]
    pub offset: f64,
    pub u: [f64; 2],
    pub v: [f64; 2],
    #[serde(default = "default_resolution")]
    pub resolution: [usize; 2],
    /// Any of `total`, `scattered`, `source`.
    #[serde(default = "default_quantities")]
    pub quantities: Vec<String>,
    /// Any of `csv`, `vtk`.
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn default_resolution() -> [usize; 2] {
    [41, 41]
}

fn default_quantities() -> Vec<String> {
    vec!["total".into()]
}

fn default_formats() -> Vec<String> {
    vec!["csv".into(), "vtk".into()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudySection {
    pub mode: String,
    pub h: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
}

impl Default for StudySection {
    fn default() -> Self {
        Self {
            mode: "single".into(),
            h: Vec::new(),
            a: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyMode {
    Single,
    HSweep,
    ASweep,
    HAGrid,
}

impl StudyMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "single" => Some(Self::Single),
            "h-sweep" => Some(Self::HSweep),
            "A-sweep" | "a-sweep" => Some(Self::ASweep),
            "hA-grid" | "ha-grid" => Some(Self::HAGrid),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    None,
    Source,
    Bump,
    SelfReference,
}

fn check(ok: bool, key: &str, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(key, msg()))
    }
}

fn positive(v: f64, key: &str) -> Result<()> {
    check(v > 0.0 && v.is_finite(), key, || format!("must be positive, got {v}"))
}

/// Reads and validates a scenario file.
pub fn load(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, &path.display().to_string())
}

/// Parses and validates scenario text.
pub fn parse(text: &str, label: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(0, |s| text[..s.start].lines().count().max(1));
        Error::Format {
            path: label.to_string(),
            line,
            msg: e.message().to_string(),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl ScenarioConfig {
    pub fn geometry_kind(&self) -> Result<GeometryKind> {
        GeometryKind::parse(&self.geometry.kind)
            .ok_or_else(|| Error::config("geometry.kind", format!("unknown geometry `{}`", self.geometry.kind)))
    }

    pub fn study_mode(&self) -> Result<StudyMode> {
        StudyMode::parse(&self.study.mode)
            .ok_or_else(|| Error::config("study.mode", format!("unknown study mode `{}`", self.study.mode)))
    }

    fn target(&self) -> Result<Target> {
        match self.error.target.as_str() {
            "none" => Ok(Target::None),
            "source" => Ok(Target::Source),
            "bump" => Ok(Target::Bump),
            "self" => Ok(Target::SelfReference),
            t => Err(Error::config("error.target", format!("unknown error target `{t}`"))),
        }
    }

    fn closed(&self) -> bool {
        matches!(self.geometry_kind(), Ok(GeometryKind::ClosedSphere))
    }

    /// Checks every section, reporting the offending key.
    pub fn validate(&self) -> Result<()> {
        check(
            !self.name.is_empty() && self.name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)),
            "name",
            || format!("`{}` is not usable as a file name prefix", self.name),
        )?;
        let kind = self.geometry_kind()?;
        let g = &self.geometry;
        positive(g.radius, "geometry.radius")?;
        positive(g.mesh_size, "geometry.mesh_size")?;
        check(g.grading >= 1.0, "geometry.grading", || format!("must be at least 1, got {}", g.grading))?;
        if let Some(ap) = g.aperture {
            check(ap > 0.0 && ap < g.radius, "geometry.aperture", || {
                format!("must lie in (0, geometry.radius), got {ap}")
            })?;
        }

        let m = &self.media;
        positive(m.omega, "media.omega")?;
        positive(m.eps1, "media.eps1")?;
        positive(m.mu1, "media.mu1")?;
        if !m.pec_lower {
            positive(m.eps2, "media.eps2")?;
            positive(m.mu2, "media.mu2")?;
            check(m.eps2_im >= 0.0, "media.eps2_im", || format!("must be non-negative, got {}", m.eps2_im))?;
        }
        if let Some(f) = &self.solve.formulation {
            match (f.as_str(), m.pec_lower) {
                ("mfie", true) | ("mueller", false) => {}
                ("mfie", false) => {
                    return Err(Error::config(
                        "solve.formulation",
                        "the MFIE needs a perfectly conducting lower medium (media.pec_lower = true)",
                    ))
                }
                ("mueller", true) => {
                    return Err(Error::config(
                        "solve.formulation",
                        "the Müller formulation needs a penetrable lower medium (media.pec_lower = false)",
                    ))
                }
                _ => return Err(Error::config("solve.formulation", format!("unknown formulation `{f}`"))),
            }
        }

        let e = &self.excitation;
        match e.kind.as_str() {
            "planewave" => {
                check(e.grazing_angle > 0.0 && e.grazing_angle <= std::f64::consts::FRAC_PI_2, "excitation.grazing_angle", || {
                    format!("must lie in (0, pi/2], got {}", e.grazing_angle)
                })?;
                self.polarization()?;
                check(e.amplitude.is_finite() && e.amplitude != 0.0, "excitation.amplitude", || {
                    format!("must be finite and non-zero, got {}", e.amplitude)
                })?;
            }
            "dipole" => {
                check(!e.dipoles.is_empty(), "excitation.dipoles", || "at least one dipole is required".into())?;
                for (i, d) in e.dipoles.iter().enumerate() {
                    let region = parse_region(&d.region)
                        .ok_or_else(|| Error::config(format!("excitation.dipoles[{i}].region"), "must be `upper` or `lower`"))?;
                    if region == Region::Lower && m.pec_lower {
                        return Err(Error::config(
                            format!("excitation.dipoles[{i}].region"),
                            "no dipole can sit inside the perfect conductor",
                        ));
                    }
                    check(d.moment.iter().chain(&d.moment_im).any(|v| *v != 0.0), &format!("excitation.dipoles[{i}].moment"), || {
                        "dipole moment is zero".into()
                    })?;
                }
            }
            t => return Err(Error::config("excitation.type", format!("unknown excitation `{t}`"))),
        }

        let w = &self.window;
        check(w.c > 0.0 && w.c < 1.0, "window.c", || format!("must lie in (0, 1), got {}", w.c))?;
        if !self.closed() {
            positive(w.a, "window.A")?;
        }
        match w.shape.as_str() {
            "radial" => {}
            "rectangular" => {
                if let Some(ay) = w.ay {
                    positive(ay, "window.Ay")?;
                }
            }
            s => return Err(Error::config("window.shape", format!("unknown window shape `{s}`"))),
        }

        let q = &self.quadrature;
        check(q.singular_order >= 1, "quadrature.singular_order", || "must be at least 1".into())?;
        check(q.near_order >= 1, "quadrature.near_order", || "must be at least 1".into())?;
        check(q.near_threshold >= 0.0, "quadrature.near_threshold", || "must be non-negative".into())?;
        self.quadrature_rule().validate().map_err(|e| Error::config("quadrature.regular_points", e.to_string()))?;

        let s = &self.solve;
        self.solve_options()?;
        positive(s.tolerance, "solve.tolerance")?;
        check(s.restart >= 1, "solve.restart", || "must be at least 1".into())?;
        check(s.max_iterations >= 1, "solve.max_iterations", || "must be at least 1".into())?;
        if let Some(t) = s.threads {
            check(t >= 1, "solve.threads", || "must be at least 1".into())?;
        }

        let target = self.target()?;
        match self.error.points.as_str() {
            "hemisphere" | "disk" => {}
            p => return Err(Error::config("error.points", format!("unknown point set `{p}`"))),
        }
        check(self.error.count >= 1, "error.count", || "must be at least 1".into())?;
        if let Some(r) = self.error.radius {
            positive(r, "error.radius")?;
        }
        match target {
            Target::Bump => {
                check(kind == GeometryKind::HemisphericalBump && m.pec_lower, "error.target", || {
                    "the exact bump solution needs geometry.kind = \"hemispherical-bump\" and media.pec_lower = true".into()
                })?;
                check(e.kind == "planewave", "error.target", || "the exact bump solution needs planewave excitation".into())?;
            }
            Target::SelfReference => {
                let ra = self
                    .error
                    .reference_a
                    .ok_or_else(|| Error::config("error.reference_A", "required when error.target = \"self\""))?;
                positive(ra, "error.reference_A")?;
            }
            Target::Source | Target::None => {}
        }

        for (i, sl) in self.outputs.slices.iter().enumerate() {
            let key = |k: &str| format!("outputs.slices[{i}].{k}");
            check(["xy", "xz", "yz"].contains(&sl.plane.as_str()), &key("plane"), || {
                format!("must be xy, xz or yz, got `{}`", sl.plane)
            })?;
            check(sl.u[0] < sl.u[1], &key("u"), || "range must be increasing".into())?;
            check(sl.v[0] < sl.v[1], &key("v"), || "range must be increasing".into())?;
            check(sl.resolution.iter().all(|&n| n >= 2), &key("resolution"), || "needs at least 2 x 2 points".into())?;
            for q in &sl.quantities {
                check(["total", "scattered", "source"].contains(&q.as_str()), &key("quantities"), || {
                    format!("unknown quantity `{q}`")
                })?;
            }
            for f in &sl.formats {
                check(["csv", "vtk"].contains(&f.as_str()), &key("formats"), || format!("unknown format `{f}`"))?;
            }
        }
        if self.outputs.far_field {
            return Err(Error::config(
                "outputs.far_field",
                "far fields are not available: the windowed fields are accurate only near the perturbation, \
                 inside the window plateau; map those near fields to the far zone with a layered-medium \
                 Green function instead",
            ));
        }

        let mode = self.study_mode()?;
        let need_h = matches!(mode, StudyMode::HSweep | StudyMode::HAGrid);
        let need_a = matches!(mode, StudyMode::ASweep | StudyMode::HAGrid);
        check(!need_h || !self.study.h.is_empty(), "study.h", || format!("required for study mode `{}`", self.study.mode))?;
        check(!need_a || !self.study.a.is_empty(), "study.A", || format!("required for study mode `{}`", self.study.mode))?;
        for (i, h) in self.study.h.iter().enumerate() {
            positive(*h, &format!("study.h[{i}]"))?;
        }
        for (i, a) in self.study.a.iter().enumerate() {
            positive(*a, &format!("study.A[{i}]"))?;
        }
        if let (Target::SelfReference, Some(ra)) = (target, self.error.reference_a) {
            for (_, a) in self.runs()? {
                check(ra > a, "error.reference_A", || format!("must exceed every window radius, got {ra} <= {a}"))?;
            }
        }
        for (h, a) in self.runs()? {
            self.geometry_spec(h, a).validate().map_err(|e| Error::config("geometry", e.to_string()))?;
        }
        Ok(())
    }

    fn polarization(&self) -> Result<Polarization> {
        match self.excitation.polarization.to_ascii_lowercase().as_str() {
            "te" => Ok(Polarization::Te),
            "tm" => Ok(Polarization::Tm),
            p => Err(Error::config("excitation.polarization", format!("must be te or tm, got `{p}`"))),
        }
    }

    pub fn layered(&self) -> LayeredConfig<f64> {
        let m = &self.media;
        let upper = Material::real(m.eps1, m.mu1);
        if m.pec_lower {
            LayeredConfig::pec(m.omega, upper)
        } else {
            let lower = Material::new(Complex64::new(m.eps2, m.eps2_im), Complex64::new(m.mu2, 0.0));
            LayeredConfig::new(m.omega, upper, lower)
        }
    }

    pub fn excitation(&self, cfg: &LayeredConfig<f64>) -> Result<Excitation<f64>> {
        let e = &self.excitation;
        if e.kind == "planewave" {
            let mut spec = PlanewaveSpec::unit(self.polarization()?, e.grazing_angle, cfg);
            spec.polarization = spec.polarization.scale_re(e.amplitude);
            return Ok(Excitation::Planewave(spec));
        }
        let list = e
            .dipoles
            .iter()
            .map(|d| {
                let c = |i: usize| Complex64::new(d.moment[i], d.moment_im[i]);
                DipoleSpec {
                    location: Vec3::from_f64(d.location),
                    polarization: CVec3::new(c(0), c(1), c(2)),
                    region: parse_region(&d.region).unwrap_or(Region::Upper),
                }
            })
            .collect();
        Ok(Excitation::Dipoles(list))
    }

    pub fn geometry_spec(&self, h: f64, a: f64) -> GeometrySpec<f64> {
        let kind = self.geometry_kind().unwrap_or(GeometryKind::FlatDisk);
        let mut spec = GeometrySpec::new(kind, self.geometry.radius, a, h);
        spec.grading = self.geometry.grading;
        spec.aperture = self.geometry.aperture;
        spec
    }

    pub fn window_for(&self, a: f64) -> Result<Window<f64>> {
        if self.closed() {
            return Ok(None);
        }
        let w = match self.window.shape.as_str() {
            "rectangular" => WindowParams::rectangular(a, self.window.ay.unwrap_or(a), self.window.c),
            _ => WindowParams::radial(a, self.window.c),
        };
        w.map(Some).map_err(|e| Error::config("window", e.to_string()))
    }

    pub fn quadrature_rule(&self) -> QuadratureRule {
        let q = &self.quadrature;
        QuadratureRule {
            regular_points: q.regular_points,
            singular_order: q.singular_order,
            near_threshold: q.near_threshold,
            near_order: q.near_order,
        }
    }

    pub fn solve_options(&self) -> Result<SolveOptions> {
        let s = &self.solve;
        let method = match s.method.as_str() {
            "gmres" => SolverMethod::Gmres,
            "lu" => SolverMethod::Lu,
            m => return Err(Error::config("solve.method", format!("must be gmres or lu, got `{m}`"))),
        };
        let preconditioner = match s.preconditioner.as_str() {
            "jacobi" => Preconditioner::Jacobi,
            "none" => Preconditioner::None,
            p => return Err(Error::config("solve.preconditioner", format!("must be jacobi or none, got `{p}`"))),
        };
        Ok(SolveOptions {
            tolerance: s.tolerance,
            restart: s.restart,
            max_iterations: s.max_iterations,
            preconditioner,
            method,
        })
    }

    /// `(h, A)` pairs of the study, in run order.
    pub fn runs(&self) -> Result<Vec<(f64, f64)>> {
        let (h0, a0) = (self.geometry.mesh_size, self.window.a);
        Ok(match self.study_mode()? {
            StudyMode::Single => vec![(h0, a0)],
            StudyMode::HSweep => self.study.h.iter().map(|&h| (h, a0)).collect(),
            StudyMode::ASweep => self.study.a.iter().map(|&a| (h0, a)).collect(),
            StudyMode::HAGrid => self
                .study
                .h
                .iter()
                .flat_map(|&h| self.study.a.iter().map(move |&a| (h, a)))
                .collect(),
        })
    }

    /// Error target points with their region tags.
    pub fn error_points(&self) -> Vec<(Vec3<f64>, Region)> {
        let lambda = self.layered().wavelength();
        let r = self.error.radius.unwrap_or(2.0 * lambda);
        let z0 = self.error.height.unwrap_or(0.25 * lambda);
        let spec = self.geometry_spec(self.geometry.mesh_size, self.window.a.max(r));
        let n = self.error.count;
        let pts: Vec<Vec3<f64>> = if self.error.points == "disk" {
            // Vogel spiral
            let g = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|i| {
                    let s = r * ((i as f64 + 0.5) / n as f64).sqrt();
                    let t = g * i as f64;
                    Vec3::new(s * t.cos(), s * t.sin(), z0)
                })
                .collect()
        } else {
            let mut m = 2 * n;
            loop {
                let p: Vec<_> = fibonacci_sphere(m).into_iter().map(|p| p * r).filter(|p| p.z >= z0).collect();
                if p.len() >= n || m > 64 * n {
                    break p.into_iter().take(n).collect();
                }
                m *= 2;
            }
        };
        pts.into_iter().map(|p| (p, spec.region(p))).collect()
    }

    /// Flattened `section.key = value` pairs of the resolved config.
    pub fn flattened(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        if let Ok(v) = toml::Value::try_from(self) {
            flatten("", &v, &mut out);
        }
        out
    }
}

fn parse_region(s: &str) -> Option<Region> {
    match s {
        "upper" => Some(Region::Upper),
        "lower" => Some(Region::Lower),
        _ => None,
    }
}

fn flatten(prefix: &str, v: &toml::Value, out: &mut BTreeMap<String, String>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                flatten(&key(k), v, out);
            }
        }
        toml::Value::Array(a) if a.iter().any(|x| x.is_table()) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, out);
            }
        }
        v => {
            out.insert(prefix.to_string(), v.to_string());
        }
    }
}

/// Wall-clock seconds spent in each stage of one solve.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimes {
    pub mesh: f64,
    pub assembly: f64,
    pub solve: f64,
    pub evaluation: f64,
}

impl StageTimes {
    pub fn total(&self) -> f64 {
        self.mesh + self.assembly + self.solve + self.evaluation
    }
}

/// Solved currents for one `(h, A)` pair.
pub struct Solution {
    pub h: f64,
    pub a: f64,
    pub mesh: TriangleMesh<f64>,
    pub basis: RwgBasis<f64>,
    pub geometry: GeometrySpec<f64>,
    pub config: LayeredConfig<f64>,
    pub window: Window<f64>,
    pub source: SourceField<f64>,
    pub currents: SurfaceCurrents<f64>,
    pub report: SolveReport,
    pub rhs_norm: f64,
    pub times: StageTimes,
}

impl Solution {
    pub fn evaluator(&self) -> Result<FieldEvaluator<'_, f64>> {
        FieldEvaluator::new(
            &self.mesh,
            &self.basis,
            &self.config,
            &self.window,
            &self.currents,
            EvalOptions::for_mesh_size(self.h),
        )
    }

    /// Total fields at tagged points.
    pub fn total(&self, points: &[(Vec3<f64>, Region)]) -> Result<Vec<EMField<f64>>> {
        self.evaluator()?.total_many(points, &self.source)
    }

    pub fn current_norm(&self) -> f64 {
        let s: f64 = self.currents.u.iter().map(|z| z.norm_sqr()).sum::<f64>()
            + self.currents.v.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>();
        s.sqrt()
    }
}

/// Meshes, assembles and solves the scenario at mesh size `h` and window
/// radius `a`.
pub fn solve_point(cfg: &ScenarioConfig, h: f64, a: f64) -> Result<Solution> {
    let t0 = Instant::now();
    let geometry = cfg.geometry_spec(h, a);
    let mesh = make_surface(&geometry).map_err(|e| e.in_stage("mesh"))?;
    let basis = build_rwg_basis(&mesh).map_err(|e| e.in_stage("mesh"))?;
    let mesh_time = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let config = cfg.layered();
    let window = cfg.window_for(a)?;
    let exc = cfg.excitation(&config)?;
    let source = SourceField::new(&config, &exc).map_err(|e| e.in_stage("excitation"))?;
    let rule = cfg.quadrature_rule();
    let m = assemble_system(&mesh, &basis, &config, &window, &rule).map_err(|e| e.in_stage("assembly"))?;
    let b = assemble_rhs(&mesh, &basis, &source, &rule).map_err(|e| e.in_stage("assembly"))?;
    let assembly = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let (x, report) = solve(&m, &b, &cfg.solve_options()?).map_err(|e| e.in_stage("solve"))?;
    drop(m);
    let currents = SurfaceCurrents::from_solution(&x, basis.len());
    let rhs_norm = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok(Solution {
        h,
        a,
        mesh,
        basis,
        geometry,
        config,
        window,
        source,
        currents,
        report,
        rhs_norm,
        times: StageTimes {
            mesh: mesh_time,
            assembly,
            solve: t2.elapsed().as_secs_f64(),
            evaluation: 0.0,
        },
    })
}

/// Window-size slopes `-log(e_n / e_{n-1}) / log(A_n / A_{n-1})`.
pub fn window_slopes(a: &[f64], err: &[f64]) -> Result<Vec<f64>> {
    Ok(log_slopes(a, err)?.into_iter().map(|s| -s).collect())
}

/// Mesh-size slopes `log(e_n / e_{n-1}) / log(h_n / h_{n-1})`, the
/// observed convergence order.
pub fn mesh_slopes(h: &[f64], err: &[f64]) -> Result<Vec<f64>> {
    log_slopes(h, err)
}

fn log_slopes(x: &[f64], err: &[f64]) -> Result<Vec<f64>> {
    if x.len() != err.len() {
        return Err(Error::Data(format!("{} abscissae but {} errors", x.len(), err.len())));
    }
    if let Some(v) = x.iter().chain(err).find(|v| !(**v > 0.0)) {
        return Err(Error::Data(format!("slopes need positive entries, got {v}")));
    }
    Ok(x.windows(2)
        .zip(err.windows(2))
        .map(|(x, e)| (e[1] / e[0]).ln() / (x[1] / x[0]).ln())
        .collect())
}

/// One row of a study table.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub h: f64,
    pub a: f64,
    /// Number of RWG functions.
    pub n: usize,
    pub iterations: usize,
    pub residual: f64,
    pub error_e: Option<f64>,
    pub error_h: Option<f64>,
    pub times: StageTimes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub name: String,
    pub mode: StudyMode,
    pub rows: Vec<StudyRow>,
    /// Slope against the previous row with the same `h` (window slope).
    pub slope_a: Vec<Option<f64>>,
    /// Slope against the previous row with the same `A` (mesh slope).
    pub slope_h: Vec<Option<f64>>,
}

impl StudyReport {
    pub fn new(name: String, mode: StudyMode, rows: Vec<StudyRow>) -> Result<Self> {
        let prev = |i: usize, same: &dyn Fn(&StudyRow) -> bool| (0..i).rev().find(|&j| same(&rows[j]));
        let mut slope_a = vec![None; rows.len()];
        let mut slope_h = vec![None; rows.len()];
        for (i, r) in rows.iter().enumerate() {
            let Some(e) = r.error_e else { continue };
            if let Some(j) = prev(i, &|q| q.h == r.h && q.a != r.a) {
                if let Some(ej) = rows[j].error_e {
                    slope_a[i] = window_slopes(&[rows[j].a, r.a], &[ej, e])?.first().copied();
                }
            }
            if let Some(j) = prev(i, &|q| q.a == r.a && q.h != r.h) {
                if let Some(ej) = rows[j].error_e {
                    slope_h[i] = mesh_slopes(&[rows[j].h, r.h], &[ej, e])?.first().copied();
                }
            }
        }
        Ok(Self {
            name,
            mode,
            rows,
            slope_a,
            slope_h,
        })
    }

    /// `h,A,N,iterations,error_E,error_H,slope_A,slope_h,wall_time`.
    pub fn study_csv(&self) -> String {
        let mut s = String::from("h,A,N,iterations,error_E,error_H,slope_A,slope_h,wall_time\n");
        for (i, r) in self.rows.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{:.3}",
                r.h,
                r.a,
                r.n,
                r.iterations,
                opt(r.error_e),
                opt(r.error_h),
                opt(self.slope_a[i]),
                opt(self.slope_h[i]),
                r.times.total()
            );
        }
        s
    }

    /// Error table without timings, bit-reproducible for a fixed thread count.
    pub fn errors_csv(&self) -> String {
        let mut s = String::from("h,A,N,iterations,relative_residual,error_E,error_H\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{:e},{},{}",
                r.h,
                r.a,
                r.n,
                r.iterations,
                r.residual,
                opt(r.error_e),
                opt(r.error_h)
            );
        }
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:e}"))
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub output_dir: PathBuf,
    /// Dump GMRES residual histories.
    pub residuals: bool,
    /// Run only the single `(mesh_size, A)` point regardless of the study mode.
    pub single: bool,
}

struct Reference {
    e: Vec<CVec3<f64>>,
    h: Vec<CVec3<f64>>,
}

fn reference_fields(
    cfg: &ScenarioConfig,
    target: Target,
    sol: &Solution,
    points: &[(Vec3<f64>, Region)],
    cache: &mut Vec<(f64, Reference)>,
) -> Result<Option<Reference>> {
    let split = |f: Vec<EMField<f64>>| Reference {
        e: f.iter().map(|f| f.e).collect(),
        h: f.iter().map(|f| f.h).collect(),
    };
    Ok(match target {
        Target::None => None,
        Target::Source => Some(split(
            points.iter().map(|&(p, r)| sol.source.field(p, r)).collect::<Result<_>>()?,
        )),
        Target::Bump => {
            let mie = MieSeries::for_config(cfg.geometry.radius, &sol.config, None)?;
            let bump = BumpReference::new(
                mie,
                cfg.excitation.grazing_angle,
                cfg.polarization()?,
                Complex64::new(cfg.excitation.amplitude, 0.0),
            );
            Some(split(points.iter().map(|&(p, _)| bump.total(p)).collect::<Result<_>>()?))
        }
        Target::SelfReference => {
            if let Some(i) = cache.iter().position(|(h, _)| *h == sol.h) {
                let r = &cache[i].1;
                return Ok(Some(Reference {
                    e: r.e.clone(),
                    h: r.h.clone(),
                }));
            }
            let ra = cfg.error.reference_a.unwrap_or(sol.a);
            let refsol = solve_point(cfg, sol.h, ra).map_err(|e| e.in_stage("reference solve"))?;
            let f = refsol.total(points).map_err(|e| e.in_stage("reference evaluation"))?;
            let r = split(f);
            cache.push((
                sol.h,
                Reference {
                    e: r.e.clone(),
                    h: r.h.clone(),
                },
            ));
            Some(r)
        }
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn slice_grid(sl: &SliceSection, spec: &GeometrySpec<f64>) -> Result<FieldGrid<f64>> {
    let (iu, iv, iw) = match sl.plane.as_str() {
        "xy" => (0, 1, 2),
        "xz" => (0, 2, 1),
        _ => (1, 2, 0),
    };
    let mut o = [0.0; 3];
    let mut du = [0.0; 3];
    let mut dv = [0.0; 3];
    o[iu] = sl.u[0];
    o[iv] = sl.v[0];
    o[iw] = sl.offset;
    du[iu] = sl.u[1] - sl.u[0];
    dv[iv] = sl.v[1] - sl.v[0];
    FieldGrid::slice(
        Vec3::from_f64(o),
        Vec3::from_f64(du),
        Vec3::from_f64(dv),
        sl.resolution[0],
        sl.resolution[1],
        |p| spec.region(p),
    )
}

fn write_slices(cfg: &ScenarioConfig, sol: &Solution, dir: &Path, artifacts: &mut Vec<PathBuf>) -> Result<()> {
    if cfg.outputs.slices.is_empty() {
        return Ok(());
    }
    let ev = sol.evaluator()?;
    let nan = Complex64::new(f64::NAN, f64::NAN);
    let blank = EMField::new(CVec3::new(nan, nan, nan), CVec3::new(nan, nan, nan));
    for sl in &cfg.outputs.slices {
        let grid = slice_grid(sl, &sol.geometry)?;
        let tagged = grid.tagged();
        let ok: Vec<bool> = tagged.iter().map(|(p, _)| ev.admissible(*p)).collect();
        let inside: Vec<_> = tagged.iter().zip(&ok).filter(|(_, k)| **k).map(|(t, _)| *t).collect();
        let scat = ev.scattered_many(&inside)?;
        for q in &sl.quantities {
            let mut it = scat.iter().zip(&inside);
            let fields = ok
                .iter()
                .map(|&k| {
                    if !k {
                        return Ok(blank);
                    }
                    let (s, &(p, r)) = it.next().expect("one field per admissible point");
                    Ok(match q.as_str() {
                        "scattered" => *s,
                        "source" => sol.source.field(p, r)?,
                        _ => *s + sol.source.field(p, r)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            for f in &sl.formats {
                let path = dir.join(format!("{}_{}_{}.{}", cfg.name, q, sl.plane, f));
                if f == "csv" {
                    write_field_csv(&path, &grid.points, &fields)?;
                } else {
                    write_vtk(&path, &grid, &fields, &format!("{} {} field, {} plane", cfg.name, q, sl.plane))?;
                }
                artifacts.push(path);
            }
        }
    }
    Ok(())
}

/// Outcome of [`run`].
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub report: StudyReport,
    pub artifacts: Vec<PathBuf>,
}

/// Runs the scenario (or its study) and writes `errors.csv`, `study.csv`,
/// `manifest.txt`, the requested slices and residual histories.
pub fn run(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunSummary> {
    cfg.validate()?;
    let dir = &opts.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let started = Instant::now();
    let target = cfg.target()?;
    let runs = if opts.single {
        vec![(cfg.geometry.mesh_size, cfg.window.a)]
    } else {
        cfg.runs()?
    };
    let mode = if opts.single { StudyMode::Single } else { cfg.study_mode()? };
    let points = cfg.error_points();
    let mut cache = Vec::new();
    let mut rows = Vec::new();
    let mut artifacts = Vec::new();
    let residuals = opts.residuals || cfg.solve.residuals;
    for (i, &(h, a)) in runs.iter().enumerate() {
        let mut sol = solve_point(cfg, h, a)?;
        let t = Instant::now();
        let (mut error_e, mut error_h) = (None, None);
        if let Some(r) = reference_fields(cfg, target, &sol, &points, &mut cache)? {
            let f = sol.total(&points).map_err(|e| e.in_stage("evaluation"))?;
            let e: Vec<_> = f.iter().map(|f| f.e).collect();
            let hh: Vec<_> = f.iter().map(|f| f.h).collect();
            error_e = Some(relative_error(&e, &r.e).map_err(|e| e.in_stage("error"))?);
            error_h = Some(relative_error(&hh, &r.h).map_err(|e| e.in_stage("error"))?);
        }
        if i + 1 == runs.len() {
            write_slices(cfg, &sol, dir, &mut artifacts).map_err(|e| e.in_stage("field output"))?;
        }
        sol.times.evaluation = t.elapsed().as_secs_f64();
        if residuals {
            let path = if runs.len() == 1 {
                dir.join(format!("{}_residuals.csv", cfg.name))
            } else {
                dir.join(format!("{}_residuals_{i}.csv", cfg.name))
            };
            write_residuals(&path, &sol.report.history)?;
            artifacts.push(path);
        }
        rows.push(StudyRow {
            h,
            a,
            n: sol.basis.len(),
            iterations: sol.report.iterations,
            residual: sol.report.relative_residual,
            error_e,
            error_h,
            times: sol.times,
        });
    }
    let report = StudyReport::new(cfg.name.clone(), mode, rows)?;
    for (file, text) in [("errors.csv", report.errors_csv()), ("study.csv", report.study_csv())] {
        let path = dir.join(file);
        write(&path, &text)?;
        artifacts.push(path);
    }
    let path = dir.join("manifest.txt");
    write(&path, &manifest(cfg, &report, started.elapsed().as_secs_f64()))?;
    artifacts.push(path);
    Ok(RunSummary { report, artifacts })
}

fn manifest(cfg: &ScenarioConfig, report: &StudyReport, wall: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "version = \"{}\"", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "threads = {}", rayon::current_num_threads());
    let lc = cfg.layered();
    let _ = writeln!(s, "derived.wavelength = {}", lc.wavelength());
    let _ = writeln!(s, "derived.k1 = \"{}\"", lc.k1());
    if let Some(k2) = lc.k2() {
        let _ = writeln!(s, "derived.k2 = \"{}\"", k2);
    }
    let _ = writeln!(s, "derived.formulation = \"{}\"", if lc.is_pec() { "mfie" } else { "mueller" });
    for (k, v) in cfg.flattened() {
        let _ = writeln!(s, "{k} = {v}");
    }
    for (i, r) in report.rows.iter().enumerate() {
        let t = r.times;
        let _ = writeln!(
            s,
            "run[{i}] = {{ h = {}, A = {}, N = {}, iterations = {}, mesh_s = {:.3}, assembly_s = {:.3}, solve_s = {:.3}, evaluation_s = {:.3} }}",
            r.h, r.a, r.n, r.iterations, t.mesh, t.assembly, t.solve, t.evaluation
        );
    }
    let _ = writeln!(s, "wall_time_s = {wall:.3}");
    s
}

/// Spectrum of the system matrix at the single `(mesh_size, A)` point.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub dim: usize,
    pub plain: Vec<Complex64>,
    pub preconditioned: Vec<Complex64>,
}

impl SpectrumReport {
    /// `(min |lambda|, median |lambda|)` of the preconditioned spectrum.
    pub fn preconditioned_spread(&self) -> (f64, f64) {
        spread(&self.preconditioned)
    }

    pub fn plain_spread(&self) -> (f64, f64) {
        spread(&self.plain)
    }
}

fn spread(v: &[Complex64]) -> (f64, f64) {
    let mut m: Vec<f64> = v.iter().map(|z| z.norm()).collect();
    m.sort_by(f64::total_cmp);
    if m.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    (m[0], m[m.len() / 2])
}

/// Computes both spectra and writes `spectrum.csv` into `dir`.
pub fn spectrum(cfg: &ScenarioConfig, dir: &Path, cap: usize) -> Result<SpectrumReport> {
    cfg.validate()?;
    let (h, a) = (cfg.geometry.mesh_size, cfg.window.a);
    let mesh = make_surface(&cfg.geometry_spec(h, a)).map_err(|e| e.in_stage("mesh"))?;
    let basis = build_rwg_basis(&mesh).map_err(|e| e.in_stage("mesh"))?;
    let lc = cfg.layered();
    let m = assemble_system(&mesh, &basis, &lc, &cfg.window_for(a)?, &cfg.quadrature_rule())
        .map_err(|e| e.in_stage("assembly"))?;
    let plain = eigen_diagnostics(&m, false, cap).map_err(|e| e.in_stage("spectrum"))?;
    let preconditioned = eigen_diagnostics(&m, true, cap).map_err(|e| e.in_stage("spectrum"))?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut s = String::from("matrix,re,im,abs\n");
    for (label, v) in [("plain", &plain), ("jacobi", &preconditioned)] {
        for z in v.iter() {
            let _ = writeln!(s, "{label},{:e},{:e},{:e}", z.re, z.im, z.norm());
        }
    }
    write(&dir.join("spectrum.csv"), &s)?;
    Ok(SpectrumReport {
        dim: m.dim(),
        plain,
        preconditioned,
    })
}
