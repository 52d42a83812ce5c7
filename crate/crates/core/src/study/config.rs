use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::TestFunction;
use crate::interp::Method;

/// Interpolation variant whose errors a study reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Booster {
    /// Plain underlying interpolation.
    None,
    Bfecc,
    Maccormack,
}

impl Booster {
    pub fn id(self) -> &'static str {
        match self {
            Booster::None => "none",
            Booster::Bfecc => "bfecc",
            Booster::Maccormack => "maccormack",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    #[default]
    Linf,
    Rms,
}

impl NormKind {
    pub fn id(self) -> &'static str {
        match self {
            NormKind::Linf => "linf",
            NormKind::Rms => "rms",
        }
    }

    fn is_linf(&self) -> bool {
        *self == NormKind::Linf
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    /// Source grid translated by `shift` (fractions of the source spacing).
    Shift,
    /// Source grid shifted, then rotated about `axis` through `center`.
    Rotation,
    /// Sinusoidally perturbed copy of the source lattice, then shifted.
    Perturbation,
    /// Target spacing is the ladder spacing, source spacing is `ratio` times it.
    Ratio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub name: String,
    pub dim: usize,
    pub function: TestFunction,
    pub method: Method,
    pub boosters: Vec<Booster>,
    /// Excluded band along the target hull, in source cells.
    #[serde(default = "default_margin")]
    pub margin: usize,
}

fn default_margin() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSection {
    /// Base spacings, coarsest first, halving from level to level.
    pub spacings: Vec<f64>,
    /// Per-axis multiplier of the base spacing (`dx : dy : dz`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aspect: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub kind: TargetKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    /// Split the fine target into interleaved subgrids with these factors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Vec<usize>>,
}

impl TargetSection {
    pub fn new(kind: TargetKind) -> Self {
        TargetSection {
            kind,
            shift: None,
            angle_deg: None,
            axis: None,
            center: None,
            amplitude: None,
            ratio: None,
            split: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<PathBuf>,
}

impl OutputSection {
    fn is_empty(&self) -> bool {
        self.csv.is_none() && self.text.is_none()
    }
}

/// Acceptance band evaluated on a finished report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Check {
    /// Every observed order within `tol` of the matching `expected` entry.
    Orders {
        booster: Booster,
        #[serde(default, skip_serializing_if = "NormKind::is_linf")]
        norm: NormKind,
        expected: Vec<f64>,
        tol: f64,
    },
    /// Every observed order in `[min, max]`.
    OrderRange {
        booster: Booster,
        #[serde(default, skip_serializing_if = "NormKind::is_linf")]
        norm: NormKind,
        min: f64,
        max: f64,
    },
    /// Last observed order strictly below `max`.
    FinalOrderBelow {
        booster: Booster,
        #[serde(default, skip_serializing_if = "NormKind::is_linf")]
        norm: NormKind,
        max: f64,
    },
    /// `booster` error strictly below `other` error at every level.
    ErrorBelow {
        booster: Booster,
        other: Booster,
        #[serde(default, skip_serializing_if = "NormKind::is_linf")]
        norm: NormKind,
    },
}

impl Check {
    pub(crate) fn boosters(&self) -> Vec<Booster> {
        match self {
            Check::Orders { booster, .. }
            | Check::OrderRange { booster, .. }
            | Check::FinalOrderBelow { booster, .. } => vec![*booster],
            Check::ErrorBelow { booster, other, .. } => vec![*booster, *other],
        }
    }
}

/// Complete description of one convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub study: StudySection,
    pub domain: DomainSection,
    pub ladder: LadderSection,
    pub target: TargetSection,
    #[serde(default, skip_serializing_if = "OutputSection::is_empty")]
    pub output: OutputSection,
    #[serde(default, rename = "check", skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{}", format_parse(*.line, *.column, .message))]
    Parse {
        line: Option<usize>,
        column: Option<usize>,
        message: String,
    },
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

fn format_parse(line: Option<usize>, column: Option<usize>, message: &str) -> String {
    match (line, column) {
        (Some(l), Some(c)) => format!("parse error at line {l}, column {c}: {message}"),
        _ => format!("parse error: {message}"),
    }
}

/// Offending fields with a reason each.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ValidationError {
    pub issues: Vec<(String, String)>,
}

impl ValidationError {
    pub fn fields(&self) -> impl Iterator<Item = &str> {
        self.issues.iter().map(|(f, _)| f.as_str())
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid study configuration:")?;
        for (field, reason) in &self.issues {
            write!(f, "\n  {field}: {reason}")?;
        }
        Ok(())
    }
}

struct Issues(Vec<(String, String)>);

impl Issues {
    fn push(&mut self, field: impl Into<String>, reason: impl Into<String>) {
        self.0.push((field.into(), reason.into()));
    }

    fn vector(&mut self, field: &str, v: &[f64], dim: usize) -> bool {
        if v.len() != dim {
            self.push(field, format!("expected {dim} components, got {}", v.len()));
            return false;
        }
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            self.push(format!("{field}[{i}]"), "must be finite");
            return false;
        }
        true
    }
}

impl StudyConfig {
    /// Parses and validates a TOML study description.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: StudyConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = match e.span() {
                Some(span) => {
                    let before = &text[..span.start.min(text.len())];
                    let line = before.matches('\n').count() + 1;
                    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
                    (Some(line), Some(column))
                }
                None => (None, None),
            };
            ConfigError::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("study configs always serialize")
    }

    pub fn dim(&self) -> usize {
        self.study.dim
    }

    /// Per-axis spacing multipliers, `1` when no aspect is given.
    pub fn aspect(&self) -> Vec<f64> {
        self.ladder
            .aspect
            .clone()
            .unwrap_or_else(|| vec![1.0; self.study.dim])
    }

    pub fn shift(&self) -> Vec<f64> {
        self.target
            .shift
            .clone()
            .unwrap_or_else(|| vec![0.0; self.study.dim])
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        let mut is = Issues(Vec::new());
        let d = self.study.dim;
        if !(1..=3).contains(&d) {
            is.push("study.dim", format!("must be 1, 2 or 3, got {d}"));
            return Err(ValidationError { issues: is.0 });
        }
        if self.study.function.dim() > d {
            is.push(
                "study.function",
                format!("{} needs {} dimensions", self.study.function, self.study.function.dim()),
            );
        }
        if self.study.boosters.is_empty() {
            is.push("study.boosters", "at least one booster is required");
        }
        for (i, b) in self.study.boosters.iter().enumerate() {
            if self.study.boosters[..i].contains(b) {
                is.push("study.boosters", format!("'{}' listed twice", b.id()));
            }
        }

        let lo_ok = is.vector("domain.lower", &self.domain.lower, d);
        let hi_ok = is.vector("domain.upper", &self.domain.upper, d);
        if lo_ok && hi_ok {
            for k in 0..d {
                if self.domain.upper[k] <= self.domain.lower[k] {
                    is.push(format!("domain.upper[{k}]"), "must exceed domain.lower");
                }
            }
        }

        let sp = &self.ladder.spacings;
        if sp.len() < 2 {
            is.push("ladder.spacings", "need at least two levels");
        }
        for (i, h) in sp.iter().enumerate() {
            if !(h.is_finite() && *h > 0.0) {
                is.push(format!("ladder.spacings[{i}]"), "must be positive");
            }
        }
        for i in 1..sp.len() {
            if ((sp[i - 1] / sp[i]) - 2.0).abs() > 1e-9 {
                is.push(
                    format!("ladder.spacings[{i}]"),
                    format!("must be half of the previous spacing ({})", sp[i - 1]),
                );
            }
        }
        if let Some(a) = &self.ladder.aspect {
            if is.vector("ladder.aspect", a, d) {
                for (k, v) in a.iter().enumerate() {
                    if *v <= 0.0 {
                        is.push(format!("ladder.aspect[{k}]"), "must be positive");
                    }
                }
            }
        }

        let t = &self.target;
        if let Some(w) = &t.shift {
            if is.vector("target.shift", w, d) {
                for (k, v) in w.iter().enumerate() {
                    if !(0.0..=1.0).contains(v) {
                        is.push(format!("target.shift[{k}]"), format!("{v} is outside [0, 1]"));
                    }
                }
            }
        }
        let unused = |is: &mut Issues, present: bool, field: &str| {
            if present {
                is.push(format!("target.{field}"), "not used by this target kind");
            }
        };
        match t.kind {
            TargetKind::Shift => {
                unused(&mut is, t.angle_deg.is_some(), "angle_deg");
                unused(&mut is, t.axis.is_some(), "axis");
                unused(&mut is, t.center.is_some(), "center");
                unused(&mut is, t.amplitude.is_some(), "amplitude");
                unused(&mut is, t.ratio.is_some(), "ratio");
                unused(&mut is, t.split.is_some(), "split");
            }
            TargetKind::Rotation => {
                if d == 1 {
                    is.push("target.kind", "rotation needs at least two dimensions");
                }
                match t.angle_deg {
                    Some(a) if a.is_finite() => {}
                    _ => is.push("target.angle_deg", "required finite angle in degrees"),
                }
                if let Some(ax) = &t.axis {
                    if is.vector("target.axis", ax, 3) && d == 2 && (ax[0] != 0.0 || ax[1] != 0.0) {
                        is.push("target.axis", "2D rotations are about the z axis");
                    }
                }
                if let Some(c) = &t.center {
                    is.vector("target.center", c, d);
                }
                unused(&mut is, t.amplitude.is_some(), "amplitude");
                unused(&mut is, t.ratio.is_some(), "ratio");
                unused(&mut is, t.split.is_some(), "split");
            }
            TargetKind::Perturbation => {
                match t.amplitude {
                    Some(a) if a.is_finite() && a >= 0.0 && a * std::f64::consts::PI < 1.0 => {}
                    Some(a) => is.push(
                        "target.amplitude",
                        format!("{a} violates 0 <= amplitude * pi < 1"),
                    ),
                    None => is.push("target.amplitude", "required"),
                }
                if lo_ok && hi_ok {
                    for k in 0..d {
                        let (lo, hi) = (self.domain.lower[k], self.domain.upper[k]);
                        if (lo + hi).abs() > 1e-12 * (hi - lo) {
                            is.push(
                                format!("domain.lower[{k}]"),
                                "perturbed studies need a domain centered on the origin",
                            );
                        }
                    }
                }
                unused(&mut is, t.angle_deg.is_some(), "angle_deg");
                unused(&mut is, t.axis.is_some(), "axis");
                unused(&mut is, t.center.is_some(), "center");
                unused(&mut is, t.ratio.is_some(), "ratio");
                unused(&mut is, t.split.is_some(), "split");
            }
            TargetKind::Ratio => {
                match t.ratio {
                    Some(r) if r.is_finite() && r > 0.0 => {
                        if let Some(f) = &t.split {
                            if f.len() != d {
                                is.push("target.split", format!("expected {d} components, got {}", f.len()));
                            } else if f.iter().any(|&v| v == 0 || (v as f64 - r).abs() > 1e-12) {
                                is.push(
                                    "target.split",
                                    "every factor must equal target.ratio so subgrids match the source 1:1",
                                );
                            }
                        }
                    }
                    _ => is.push("target.ratio", "required positive spacing ratio"),
                }
                if self.study.boosters.contains(&Booster::Maccormack) {
                    is.push(
                        "study.boosters",
                        "maccormack needs equal node counts and is unavailable for ratio targets",
                    );
                }
                unused(&mut is, t.angle_deg.is_some(), "angle_deg");
                unused(&mut is, t.axis.is_some(), "axis");
                unused(&mut is, t.center.is_some(), "center");
                unused(&mut is, t.amplitude.is_some(), "amplitude");
            }
        }

        for (i, c) in self.checks.iter().enumerate() {
            for b in c.boosters() {
                if !self.study.boosters.contains(&b) {
                    is.push(format!("check[{i}]"), format!("booster '{}' is not run", b.id()));
                }
            }
            match c {
                Check::Orders { expected, tol, .. } => {
                    if expected.len() + 1 != sp.len() {
                        is.push(
                            format!("check[{i}].expected"),
                            format!("need {} orders for {} levels", sp.len().saturating_sub(1), sp.len()),
                        );
                    }
                    if !(*tol >= 0.0) {
                        is.push(format!("check[{i}].tol"), "must be non-negative");
                    }
                }
                Check::OrderRange { min, max, .. } => {
                    if !(min <= max) {
                        is.push(format!("check[{i}]"), "min must not exceed max");
                    }
                }
                Check::FinalOrderBelow { .. } | Check::ErrorBelow { .. } => {}
            }
        }

        if is.0.is_empty() {
            Ok(())
        } else {
            Err(ValidationError { issues: is.0 })
        }
    }
}
