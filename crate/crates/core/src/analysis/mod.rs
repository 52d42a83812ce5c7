//! Error measurement and convergence-order estimation.

mod expansion;
mod functions;

pub use expansion::{
    leading_error_check, linear_leading_error_check, verify_expansions, ExpansionCheck,
    ExpansionTerm, EXPANSION_GAP_TOLERANCE, EXPANSION_SPACINGS,
};
pub use functions::{TestFunction, UnknownFunction, ALL_FUNCTIONS};

use serde::Serialize;
use thiserror::Error;

use crate::grid::{Field, Grid, MAX_DIM};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("no nodes selected for measurement")]
    EmptyMask,
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
    #[error("need at least {needed} levels, got {got}")]
    InsufficientLevels { needed: usize, got: usize },
    #[error("error at level {level} is {value:e}; orders need positive errors (exact reproduction reads as infinite order)")]
    NonpositiveError { level: usize, value: f64 },
    #[error("finer-level difference vanishes; the three-grid estimate is undefined")]
    ZeroDenominator,
    #[error("grids are not nested: {0}")]
    NotNested(&'static str),
    #[error("shift fractions must lie in (0, 1), got {0}")]
    ShiftOutOfRange(f64),
    #[error("the predicted leading coefficient vanishes; relative gap is undefined")]
    DegeneratePrediction,
    #[error("function {function} needs {needed}D, check requested {dim}D")]
    FunctionDim {
        function: TestFunction,
        needed: usize,
        dim: usize,
    },
    #[error(transparent)]
    Bfecc(#[from] crate::bfecc::BfeccError),
    #[error(transparent)]
    Grid(#[from] crate::grid::GridError),
}

/// Samples `tf` at every node of `g`.
pub fn sample_function(g: &Grid, tf: TestFunction) -> Field {
    Field::from_fn(g, |p| tf.value(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Norms {
    pub linf: f64,
    pub rms: f64,
}

/// Max and root-mean-square differences over the nodes selected by `mask`.
pub fn error_norms(approx: &[f64], exact: &[f64], mask: &[bool]) -> Result<Norms, AnalysisError> {
    if approx.len() != exact.len() {
        return Err(AnalysisError::Length(approx.len(), exact.len()));
    }
    if mask.len() != exact.len() {
        return Err(AnalysisError::Length(mask.len(), exact.len()));
    }
    let mut linf = 0.0_f64;
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    for ((a, e), &m) in approx.iter().zip(exact).zip(mask) {
        if m {
            let d = (a - e).abs();
            linf = linf.max(d);
            sum_sq += d * d;
            count += 1;
        }
    }
    if count == 0 {
        return Err(AnalysisError::EmptyMask);
    }
    Ok(Norms {
        linf,
        rms: (sum_sq / count as f64).sqrt(),
    })
}

/// Orders `log2(e[k-1] / e[k])` for errors measured at halving spacings.
pub fn observed_order(errors: &[f64]) -> Result<Vec<f64>, AnalysisError> {
    if errors.len() < 2 {
        return Err(AnalysisError::InsufficientLevels {
            needed: 2,
            got: errors.len(),
        });
    }
    if let Some((level, &value)) = errors.iter().enumerate().find(|(_, &e)| !(e > 0.0)) {
        return Err(AnalysisError::NonpositiveError { level, value });
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

/// Three-grid order estimate
/// `kappa = log2(|f_c - f_m|_2 / |f_m - f_f|_2)` over a common point set.
pub fn three_grid_order(coarse: &[f64], medium: &[f64], fine: &[f64]) -> Result<f64, AnalysisError> {
    if coarse.len() != medium.len() {
        return Err(AnalysisError::Length(coarse.len(), medium.len()));
    }
    if medium.len() != fine.len() {
        return Err(AnalysisError::Length(medium.len(), fine.len()));
    }
    if coarse.is_empty() {
        return Err(AnalysisError::EmptyMask);
    }
    let l2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let num = l2(coarse, medium);
    let den = l2(medium, fine);
    if !(den > 0.0) {
        return Err(AnalysisError::ZeroDenominator);
    }
    Ok((num / den).log2())
}

/// Picks the values of a field on `fine` at the nodes of `coarse`, where the
/// coarse lattice is every `factor`-th fine node starting at the fine node
/// coinciding with the coarse origin.
pub fn restrict_to_coarse(fine: &Field, coarse: &Grid, factor: usize) -> Result<Vec<f64>, AnalysisError> {
    let g = fine.grid();
    if g.dim() != coarse.dim() || factor == 0 {
        return Err(AnalysisError::NotNested("dimension or factor"));
    }
    let p0 = coarse.node_position([0; MAX_DIM]);
    let loc = g.locate(&p0)?;
    if !loc.inside {
        return Err(AnalysisError::NotNested("coarse origin outside the fine grid"));
    }
    let mut start = [0usize; MAX_DIM];
    for k in 0..g.dim() {
        let u = loc.cell[k] as f64 + loc.local[k];
        if (u - u.round()).abs() > 1e-9 {
            return Err(AnalysisError::NotNested("coarse origin is not a fine node"));
        }
        start[k] = u.round() as usize;
    }
    let cc = coarse.counts();
    let fc = g.counts();
    for k in 0..g.dim() {
        if start[k] + factor * (cc[k] - 1) >= fc[k] {
            return Err(AnalysisError::NotNested("coarse grid extends past the fine grid"));
        }
    }
    let mut out = Vec::with_capacity(coarse.len());
    for lin in 0..coarse.len() {
        let ci = coarse.multi_index(lin);
        let mut fi = [0usize; MAX_DIM];
        for k in 0..MAX_DIM {
            fi[k] = start[k] + factor * ci[k];
        }
        let pc = coarse.node_position(ci);
        let pf = g.node_position(fi);
        let scale = g.spacing()[0];
        if (0..MAX_DIM).any(|k| (pc[k] - pf[k]).abs() > 1e-9 * scale) {
            return Err(AnalysisError::NotNested("node positions do not coincide"));
        }
        out.push(fine.values()[g.linear_index(fi)]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_uniform_grid;

    #[test]
    fn sample_constant_and_known_value() {
        let g = make_uniform_grid(1, &[3], &[0.5], &[0.0]).unwrap();
        let f = sample_function(&g, TestFunction::SinPiX);
        assert!((f.values()[1] - 1.0).abs() < 1e-15);
        let c = Field::from_fn(&g, |_| 4.0);
        assert!(c.values().iter().all(|&v| v == 4.0));
    }

    #[test]
    fn norms_hand_arithmetic() {
        let n = error_norms(&[3.0, -4.0], &[0.0, 0.0], &[true, true]).unwrap();
        assert_eq!(n.linf, 4.0);
        assert!((n.rms - 3.5355339059327378).abs() < 1e-15);
        let z = error_norms(&[1.0, 2.0], &[1.0, 2.0], &[true, true]).unwrap();
        assert_eq!((z.linf, z.rms), (0.0, 0.0));
        assert_eq!(
            error_norms(&[1.0], &[2.0], &[false]),
            Err(AnalysisError::EmptyMask)
        );
        // masked-out NaN is ignored
        let m = error_norms(&[f64::NAN, 1.0], &[0.0, 0.5], &[false, true]).unwrap();
        assert_eq!(m.linf, 0.5);
    }

    #[test]
    fn order_from_exact_power() {
        let eps = 1.3e-7;
        assert_eq!(observed_order(&[8.0 * eps, eps]).unwrap(), vec![3.0]);
        let table1 = observed_order(&[7.19e-4, 1.67e-4]).unwrap()[0];
        assert!((table1 - 2.106).abs() < 1e-3);
        let table3 = observed_order(&[2.01e-4, 1.27e-5]).unwrap()[0];
        assert!((table3 - 3.984).abs() < 1e-3);
    }

    #[test]
    fn order_errors() {
        assert!(matches!(
            observed_order(&[1.0, 0.0]),
            Err(AnalysisError::NonpositiveError { level: 1, .. })
        ));
        assert!(matches!(
            observed_order(&[1.0]),
            Err(AnalysisError::InsufficientLevels { .. })
        ));
    }

    #[test]
    fn kappa_constructed_ratio() {
        let d = 1e-3;
        let fine = vec![1.0, 2.0, 3.0];
        let medium: Vec<f64> = fine.iter().map(|v| v + d).collect();
        let coarse: Vec<f64> = medium.iter().map(|v| v + 4.0 * d).collect();
        let k = three_grid_order(&coarse, &medium, &fine).unwrap();
        assert!((k - 2.0).abs() < 1e-9);
    }

    #[test]
    fn kappa_degenerate() {
        let a = vec![1.0, 2.0];
        let b = vec![1.5, 2.5];
        assert_eq!(
            three_grid_order(&b, &a, &a),
            Err(AnalysisError::ZeroDenominator)
        );
    }

    #[test]
    fn restriction_picks_coincident_nodes() {
        let fine = make_uniform_grid(1, &[9], &[0.125], &[0.0]).unwrap();
        let coarse = make_uniform_grid(1, &[3], &[0.25], &[0.25]).unwrap();
        let f = Field::from_fn(&fine, |p| p[0]);
        assert_eq!(restrict_to_coarse(&f, &coarse, 2).unwrap(), vec![0.25, 0.5, 0.75]);
        let off = make_uniform_grid(1, &[3], &[0.25], &[0.1]).unwrap();
        assert!(restrict_to_coarse(&f, &off, 2).is_err());
    }
}
