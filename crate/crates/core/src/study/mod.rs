//! Convergence studies: build source/target grid pairs over a spacing ladder,
//! transfer a test function with each booster and tabulate errors and orders.

mod config;
mod presets;

pub use config::{
    Booster, Check, ConfigError, DomainSection, LadderSection, NormKind, OutputSection,
    StudyConfig, StudySection, TargetKind, TargetSection, ValidationError,
};
pub use presets::{preset, PRESETS};

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::analysis::{error_norms, AnalysisError, Norms};
use crate::bfecc::{bfecc_interpolate, maccormack_interpolate, BfeccError, NodeStatus};
use crate::grid::{
    make_uniform_grid, perturb_grid, rotate_grid, shift_grid, split_fine_grid, Field, Grid,
    GridError, MAX_DIM,
};
use crate::interp::{Method, Transfer};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("level {level} (spacing {spacing}): {source}")]
    Grid {
        level: usize,
        spacing: f64,
        source: GridError,
    },
    #[error(transparent)]
    Bfecc(#[from] BfeccError),
    #[error("level {level}: {source}")]
    Analysis { level: usize, source: AnalysisError },
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
}

/// Errors of every booster at one spacing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelResult {
    /// Base ladder spacing.
    pub spacing: f64,
    pub nodes_measured: usize,
    /// One entry per configured booster, in configuration order.
    pub norms: Vec<Norms>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub levels: Vec<LevelResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

/// Source and target grids of one level, with per-axis spacings.
struct LevelGrids {
    source: Grid,
    target: Grid,
    source_spacing: Vec<f64>,
    target_spacing: Vec<f64>,
}

fn axis_count(extent: f64, h: f64) -> usize {
    (extent / h + 1e-9).floor() as usize + 1
}

fn build_level(cfg: &StudyConfig, h: f64) -> Result<LevelGrids, GridError> {
    let d = cfg.dim();
    let lower = &cfg.domain.lower;
    let upper = &cfg.domain.upper;
    let base: Vec<f64> = cfg.aspect().iter().map(|a| a * h).collect();
    let t = &cfg.target;
    let scale = match t.kind {
        TargetKind::Ratio => t.ratio.unwrap_or(1.0),
        _ => 1.0,
    };
    let source_spacing: Vec<f64> = base.iter().map(|b| b * scale).collect();
    let counts: Vec<usize> = (0..d)
        .map(|k| axis_count(upper[k] - lower[k], source_spacing[k]))
        .collect();
    let source = make_uniform_grid(d, &counts, &source_spacing, lower)?;
    let frac = cfg.shift();
    let shift_by = |spacing: &[f64]| -> Vec<f64> { (0..d).map(|k| frac[k] * spacing[k]).collect() };

    let (target, target_spacing) = match t.kind {
        TargetKind::Shift => (shift_grid(&source, &shift_by(&source_spacing))?, source_spacing.clone()),
        TargetKind::Rotation => {
            let center = t
                .center
                .clone()
                .unwrap_or_else(|| (0..d).map(|k| 0.5 * (lower[k] + upper[k])).collect());
            let shifted = shift_grid(&source, &shift_by(&source_spacing))?;
            let rotated = rotate_grid(
                &shifted,
                t.angle_deg.unwrap_or(0.0),
                t.axis.as_deref(),
                &center,
            )?;
            (rotated, source_spacing.clone())
        }
        TargetKind::Perturbation => {
            let lengths: Vec<f64> = (0..d).map(|k| upper[k] - lower[k]).collect();
            let pert = perturb_grid(&source, t.amplitude.unwrap_or(0.0), &lengths)?;
            (shift_grid(&pert, &shift_by(&source_spacing))?, source_spacing.clone())
        }
        TargetKind::Ratio => {
            let tc: Vec<usize> = (0..d).map(|k| axis_count(upper[k] - lower[k], base[k])).collect();
            let fine = make_uniform_grid(d, &tc, &base, lower)?;
            (shift_grid(&fine, &shift_by(&base))?, base.clone())
        }
    };
    Ok(LevelGrids {
        source,
        target,
        source_spacing,
        target_spacing,
    })
}

/// Values and per-node usability of every booster on one target grid.
type Columns = Vec<(Vec<f64>, Vec<bool>)>;

fn transfer_columns(
    source: &Grid,
    f: &Field,
    target: &Grid,
    method: Method,
    boosters: &[Booster],
) -> Result<Columns, BfeccError> {
    let usable = |r: &crate::bfecc::BfeccResult| -> Vec<bool> {
        r.mask.iter().map(|&m| m == NodeStatus::Bfecc).collect()
    };
    let split_plain = |r: &crate::bfecc::BfeccResult| -> (Vec<f64>, Vec<bool>) {
        (
            r.forward.values().to_vec(),
            r.mask.iter().map(|&m| m != NodeStatus::Invalid).collect(),
        )
    };
    let mut plain: Option<(Vec<f64>, Vec<bool>)> = None;
    let mut boosted: Vec<Option<(Vec<f64>, Vec<bool>)>> = vec![None; boosters.len()];
    for (i, b) in boosters.iter().enumerate() {
        let r = match b {
            Booster::None => continue,
            Booster::Bfecc => bfecc_interpolate(source, f, target, method)?,
            Booster::Maccormack => maccormack_interpolate(source, f, target, method)?,
        };
        if plain.is_none() && boosters.contains(&Booster::None) {
            plain = Some(split_plain(&r));
        }
        let ok = usable(&r);
        boosted[i] = Some((r.values.into_values(), ok));
    }
    let mut out = Vec::with_capacity(boosters.len());
    for (i, b) in boosters.iter().enumerate() {
        if *b == Booster::None {
            let col = match plain.take() {
                Some(p) => p,
                None => Transfer::between(source, target, method).apply_with_mask(f.values()),
            };
            out.push(col);
        } else {
            out.push(boosted[i].take().expect("boosted column computed above"));
        }
    }
    Ok(out)
}

fn run_level(cfg: &StudyConfig, level: usize, h: f64) -> Result<LevelResult, StudyError> {
    let grid_err = |source| StudyError::Grid {
        level,
        spacing: h,
        source,
    };
    let lg = build_level(cfg, h).map_err(grid_err)?;
    let tf = cfg.study.function;
    let method = cfg.study.method;
    let boosters = &cfg.study.boosters;
    let f = Field::from_fn(&lg.source, |p| tf.value(p));

    let columns = match &cfg.target.split {
        Some(factor) if cfg.target.kind == TargetKind::Ratio => {
            let n = lg.target.len();
            let mut cols: Columns = vec![(vec![f64::NAN; n], vec![false; n]); boosters.len()];
            for sub in split_fine_grid(&lg.target, factor).map_err(grid_err)? {
                let part = transfer_columns(&lg.source, &f, &sub.grid, method, boosters)?;
                for (j, (vals, ok)) in part.into_iter().enumerate() {
                    for (i, (v, o)) in vals.into_iter().zip(ok).enumerate() {
                        let fine = lg.target.linear_index(sub.fine_index(sub.grid.multi_index(i)));
                        cols[j].0[fine] = v;
                        cols[j].1[fine] = o;
                    }
                }
            }
            cols
        }
        _ => transfer_columns(&lg.source, &f, &lg.target, method, boosters)?,
    };
    drop(f);

    let target = &lg.target;
    let exact: Vec<f64> = (0..target.len())
        .into_par_iter()
        .map(|i| tf.value(&target.position_linear(i)))
        .collect();

    let d = cfg.dim();
    let counts = target.counts();
    let mut lo = [0usize; MAX_DIM];
    let mut hi = [0usize; MAX_DIM];
    for k in 0..d {
        let m = (cfg.study.margin as f64 * lg.source_spacing[k] / lg.target_spacing[k] - 1e-9).ceil() as usize;
        lo[k] = m;
        hi[k] = counts[k].saturating_sub(1 + m);
    }
    let mask: Vec<bool> = (0..target.len())
        .into_par_iter()
        .map(|i| {
            let idx = target.multi_index(i);
            (0..d).all(|k| idx[k] >= lo[k] && idx[k] <= hi[k]) && columns.iter().all(|c| c.1[i])
        })
        .collect();
    let nodes_measured = mask.iter().filter(|&&m| m).count();
    let norms = columns
        .iter()
        .map(|(vals, _)| error_norms(vals, &exact, &mask))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|source| StudyError::Analysis { level, source })?;
    Ok(LevelResult {
        spacing: h,
        nodes_measured,
        norms,
    })
}

/// Validates `cfg` and runs every level, coarsest first.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport, StudyError> {
    cfg.validate()?;
    let levels = cfg
        .ladder
        .spacings
        .iter()
        .enumerate()
        .map(|(level, &h)| run_level(cfg, level, h))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(StudyReport {
        config: cfg.clone(),
        levels,
    })
}

pub fn run_preset(name: &str) -> Result<StudyReport, StudyError> {
    run_study(&preset(name)?)
}

fn pick(n: &Norms, norm: NormKind) -> f64 {
    match norm {
        NormKind::Linf => n.linf,
        NormKind::Rms => n.rms,
    }
}

/// Six significant digits.
fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if (-3..6).contains(&e) {
        format!("{:.*}", (5 - e) as usize, x)
    } else {
        format!("{x:.5e}")
    }
}

impl StudyReport {
    fn booster_index(&self, b: Booster) -> Option<usize> {
        self.config.study.boosters.iter().position(|&x| x == b)
    }

    /// Column label: the underlying method name for plain interpolation.
    pub fn label(&self, b: Booster) -> &'static str {
        match b {
            Booster::None => self.config.study.method.name(),
            _ => b.id(),
        }
    }

    pub fn errors(&self, b: Booster, norm: NormKind) -> Option<Vec<f64>> {
        let j = self.booster_index(b)?;
        Some(self.levels.iter().map(|l| pick(&l.norms[j], norm)).collect())
    }

    /// `log2(e[k-1] / e[k])` between consecutive levels.
    pub fn orders(&self, b: Booster, norm: NormKind) -> Option<Vec<f64>> {
        let e = self.errors(b, norm)?;
        Some(e.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,spacing,method,linf,rms,order_linf,order_rms,nodes_measured\n");
        let boosters = &self.config.study.boosters;
        let orders: Vec<(Vec<f64>, Vec<f64>)> = boosters
            .iter()
            .map(|&b| {
                (
                    self.orders(b, NormKind::Linf).unwrap_or_default(),
                    self.orders(b, NormKind::Rms).unwrap_or_default(),
                )
            })
            .collect();
        for (li, level) in self.levels.iter().enumerate() {
            for (j, &b) in boosters.iter().enumerate() {
                let n = &level.norms[j];
                let (ol, or) = if li == 0 {
                    (String::new(), String::new())
                } else {
                    (format!("{:e}", orders[j].0[li - 1]), format!("{:e}", orders[j].1[li - 1]))
                };
                let _ = writeln!(
                    out,
                    "{li},{:e},{},{:e},{:e},{ol},{or},{}",
                    level.spacing,
                    self.label(b),
                    n.linf,
                    n.rms,
                    level.nodes_measured
                );
            }
        }
        out
    }

    /// Aligned table: one row per level, error and order columns per booster.
    pub fn to_text(&self) -> String {
        let cfg = &self.config;
        let mut header = vec!["spacing".to_string()];
        for &b in &cfg.study.boosters {
            let l = self.label(b);
            header.extend([format!("{l} linf"), "order".into(), format!("{l} rms"), "order".into()]);
        }
        header.push("nodes".into());
        let mut rows = vec![header];
        let orders: Vec<_> = cfg
            .study
            .boosters
            .iter()
            .map(|&b| {
                (
                    self.orders(b, NormKind::Linf).unwrap_or_default(),
                    self.orders(b, NormKind::Rms).unwrap_or_default(),
                )
            })
            .collect();
        for (li, level) in self.levels.iter().enumerate() {
            let mut row = vec![sig6(level.spacing)];
            for (j, n) in level.norms.iter().enumerate() {
                let o = |v: &Vec<f64>| if li == 0 { String::new() } else { sig6(v[li - 1]) };
                row.extend([sig6(n.linf), o(&orders[j].0), sig6(n.rms), o(&orders[j].1)]);
            }
            row.push(level.nodes_measured.to_string());
            rows.push(row);
        }
        let ncol = rows[0].len();
        let widths: Vec<usize> = (0..ncol)
            .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{}: {} {}D, {} underlying, target {}",
            cfg.study.name,
            cfg.study.function.formula(),
            cfg.dim(),
            cfg.study.method.name(),
            describe_target(cfg)
        );
        for (ri, row) in rows.iter().enumerate() {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(cell, w)| format!("{cell:>w$}"))
                .collect();
            let _ = writeln!(out, "{}", line.join("  "));
            if ri == 0 {
                let total = widths.iter().sum::<usize>() + 2 * (ncol - 1);
                let _ = writeln!(out, "{}", "-".repeat(total));
            }
        }
        out
    }

    pub fn check_outcomes(&self) -> Vec<CheckOutcome> {
        self.config.checks.iter().map(|c| self.evaluate(c)).collect()
    }

    pub fn all_checks_pass(&self) -> bool {
        self.check_outcomes().iter().all(|o| o.passed)
    }

    fn evaluate(&self, c: &Check) -> CheckOutcome {
        let fmt_list = |v: &[f64]| {
            let s: Vec<String> = v.iter().map(|x| format!("{x:.3}")).collect();
            format!("[{}]", s.join(", "))
        };
        match c {
            Check::Orders {
                booster,
                norm,
                expected,
                tol,
            } => {
                let got = self.orders(*booster, *norm).unwrap_or_default();
                let passed = got.len() == expected.len()
                    && got.iter().zip(expected).all(|(g, e)| (g - e).abs() <= *tol);
                CheckOutcome {
                    label: format!(
                        "{} {} orders within {tol} of {}",
                        self.label(*booster),
                        norm.id(),
                        fmt_list(expected)
                    ),
                    passed,
                    detail: format!("observed {}", fmt_list(&got)),
                }
            }
            Check::OrderRange {
                booster,
                norm,
                min,
                max,
            } => {
                let got = self.orders(*booster, *norm).unwrap_or_default();
                let passed = !got.is_empty() && got.iter().all(|g| (*min..=*max).contains(g));
                CheckOutcome {
                    label: format!("{} {} orders in [{min}, {max}]", self.label(*booster), norm.id()),
                    passed,
                    detail: format!("observed {}", fmt_list(&got)),
                }
            }
            Check::FinalOrderBelow { booster, norm, max } => {
                let got = self.orders(*booster, *norm).unwrap_or_default();
                let last = got.last().copied().unwrap_or(f64::NAN);
                CheckOutcome {
                    label: format!("{} {} final order below {max}", self.label(*booster), norm.id()),
                    passed: last < *max,
                    detail: format!("observed {}", fmt_list(&got)),
                }
            }
            Check::ErrorBelow {
                booster,
                other,
                norm,
            } => {
                let a = self.errors(*booster, *norm).unwrap_or_default();
                let b = self.errors(*other, *norm).unwrap_or_default();
                let passed = !a.is_empty() && a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x < y);
                let ratios: Vec<f64> = a.iter().zip(&b).map(|(x, y)| y / x).collect();
                CheckOutcome {
                    label: format!(
                        "{} {} error below {} at every level",
                        self.label(*booster),
                        norm.id(),
                        self.label(*other)
                    ),
                    passed,
                    detail: format!("{}/{} ratios {}", self.label(*other), self.label(*booster), fmt_list(&ratios)),
                }
            }
        }
    }
}

fn describe_target(cfg: &StudyConfig) -> String {
    let t = &cfg.target;
    let shift = cfg.shift();
    match t.kind {
        TargetKind::Shift => format!("shifted by {shift:?} cells"),
        TargetKind::Rotation => format!(
            "shifted by {shift:?} cells, rotated {} deg",
            t.angle_deg.unwrap_or(0.0)
        ),
        TargetKind::Perturbation => format!(
            "perturbed (amplitude {}) and shifted by {shift:?} cells",
            t.amplitude.unwrap_or(0.0)
        ),
        TargetKind::Ratio => {
            let mut s = format!("spacing ratio {}:1", t.ratio.unwrap_or(1.0));
            if let Some(f) = &t.split {
                let _ = write!(s, ", split {f:?}");
            }
            s
        }
    }
}
