//! Numerical check of the leading Taylor error terms of plain and BFECC
//! interpolation between a uniform grid and its shifted copy.
//!
//! For shift fractions `(a, b)` and spacing `h` the predicted expansions are
//!
//! * plain 1D: `f* - f = a(1-a)/2 h^2 f_xx`
//! * plain 2D: `f* - f = [(a-a^2) f_xx + (b-b^2) f_yy] h^2 / 2`
//! * BFECC 1D: `f_new - f = a(a-1)[(8a-4) h^3 f_xxx - 9a(a-1) h^4 f_xxxx] / 24`
//! * BFECC 2D: `f_new - f = [(a-3a^2+2a^3) f_xxx + (b-3b^2+2b^3) f_yyy] h^3 / 6`
//!
//! The scaled error `(f_new - f) / h^p` is measured at a fixed probe point for
//! several spacings and extrapolated to `h -> 0` with a polynomial in `h`.

use serde::Serialize;

use super::{sample_function, AnalysisError, TestFunction};
use crate::bfecc::bfecc_interpolate;
use crate::grid::{make_uniform_grid, shift_grid, Point};
use crate::interp::{Method, TransferPlan};

/// Cells between the probe node and the grid boundary.
const PROBE_MARGIN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionTerm {
    /// `h^2` term of plain interpolation.
    Quadratic,
    /// `h^3` term of BFECC.
    Cubic,
    /// `h^4` term of BFECC, used where the cubic coefficient vanishes.
    Quartic,
}

impl ExpansionTerm {
    pub fn power(self) -> i32 {
        match self {
            ExpansionTerm::Quadratic => 2,
            ExpansionTerm::Cubic => 3,
            ExpansionTerm::Quartic => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExpansionTerm::Quadratic => "h^2",
            ExpansionTerm::Cubic => "h^3",
            ExpansionTerm::Quartic => "h^4",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionCheck {
    pub dim: usize,
    pub alpha: f64,
    pub beta: f64,
    pub function: TestFunction,
    pub booster: &'static str,
    pub term: ExpansionTerm,
    pub spacings: Vec<f64>,
    /// `(approx - exact) / h^p` per spacing.
    pub scaled_errors: Vec<f64>,
    pub estimated: f64,
    pub predicted: f64,
    pub relative_gap: f64,
}

impl ExpansionCheck {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.relative_gap <= tolerance
    }
}

/// `a(a-1)(2a-1)`, the cubic shape factor shared by the 1D and 2D formulas.
fn cubic_shape(a: f64) -> f64 {
    a - 3.0 * a * a + 2.0 * a * a * a
}

/// Polynomial extrapolation of `(h_i, q_i)` to `h = 0` (Neville).
fn extrapolate_to_zero(h: &[f64], q: &[f64]) -> f64 {
    let n = h.len();
    let mut p = q.to_vec();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (h[i + m] * p[i] - h[i] * p[i + 1]) / (h[i + m] - h[i]);
        }
    }
    p[0]
}

fn validate(
    dim: usize,
    alpha: f64,
    beta: f64,
    tf: TestFunction,
    spacings: &[f64],
) -> Result<(), AnalysisError> {
    if !(1..=2).contains(&dim) {
        return Err(AnalysisError::Grid(crate::grid::GridError::InvalidDim(dim)));
    }
    if tf.dim() > dim {
        return Err(AnalysisError::FunctionDim {
            function: tf,
            needed: tf.dim(),
            dim,
        });
    }
    for s in [alpha, beta].into_iter().take(dim) {
        if !(0.0..1.0).contains(&s) {
            return Err(AnalysisError::ShiftOutOfRange(s));
        }
    }
    if spacings.len() < 3 {
        return Err(AnalysisError::InsufficientLevels {
            needed: 3,
            got: spacings.len(),
        });
    }
    Ok(())
}

/// Runs the shifted-grid transfer at spacing `h` and returns
/// `(approx, exact)` at the probe node.
fn probe_values(
    dim: usize,
    shift: [f64; 2],
    tf: TestFunction,
    h: f64,
    boosted: bool,
) -> Result<(f64, f64), AnalysisError> {
    let p0 = tf.probe();
    let m = PROBE_MARGIN;
    let counts = vec![2 * m + 2; dim];
    let spacing = vec![h; dim];
    let origin: Vec<f64> = (0..dim).map(|k| p0[k] - (shift[k] + m as f64) * h).collect();
    let source = make_uniform_grid(dim, &counts, &spacing, &origin)?;
    let w: Vec<f64> = (0..dim).map(|k| shift[k] * h).collect();
    let target = shift_grid(&source, &w)?;
    let f = sample_function(&source, tf);
    let probe = target.linear_index([m, if dim > 1 { m } else { 0 }, 0]);
    let exact = tf.value(&target.position_linear(probe));
    let approx = if boosted {
        bfecc_interpolate(&source, &f, &target, Method::Multilinear)?
            .values
            .values()[probe]
    } else {
        TransferPlan::for_grid(&source, &target, Method::Multilinear).apply_values(f.values())[probe]
    };
    Ok((approx, exact))
}

fn finish(
    dim: usize,
    shift: [f64; 2],
    tf: TestFunction,
    spacings: &[f64],
    boosted: bool,
    term: ExpansionTerm,
    predicted: f64,
) -> Result<ExpansionCheck, AnalysisError> {
    if predicted == 0.0 || !predicted.is_finite() {
        return Err(AnalysisError::DegeneratePrediction);
    }
    let mut scaled = Vec::with_capacity(spacings.len());
    for &h in spacings {
        let (approx, exact) = probe_values(dim, shift, tf, h, boosted)?;
        scaled.push((approx - exact) / h.powi(term.power()));
    }
    let estimated = extrapolate_to_zero(spacings, &scaled);
    Ok(ExpansionCheck {
        dim,
        alpha: shift[0],
        beta: if dim > 1 { shift[1] } else { 0.0 },
        function: tf,
        booster: if boosted { "bfecc" } else { "plain" },
        term,
        spacings: spacings.to_vec(),
        scaled_errors: scaled,
        estimated,
        predicted,
        relative_gap: (estimated - predicted).abs() / predicted.abs(),
    })
}

/// Compares the measured leading BFECC error coefficient with its closed
/// form. Uses the quartic term in 1D at `alpha = 1/2`, where the cubic term
/// vanishes.
pub fn leading_error_check(
    dim: usize,
    alpha: f64,
    beta: f64,
    tf: TestFunction,
    spacings: &[f64],
) -> Result<ExpansionCheck, AnalysisError> {
    validate(dim, alpha, beta, tf, spacings)?;
    let p: Point = tf.probe();
    let (term, predicted) = if dim == 1 {
        let a = alpha;
        if 8.0 * a - 4.0 == 0.0 {
            let aa = a * (a - 1.0);
            (ExpansionTerm::Quartic, -9.0 * aa * aa / 24.0 * tf.partial(&p, 0, 4))
        } else {
            (
                ExpansionTerm::Cubic,
                a * (a - 1.0) * (8.0 * a - 4.0) / 24.0 * tf.partial(&p, 0, 3),
            )
        }
    } else {
        let c = (cubic_shape(alpha) * tf.partial(&p, 0, 3) + cubic_shape(beta) * tf.partial(&p, 1, 3)) / 6.0;
        (ExpansionTerm::Cubic, c)
    };
    finish(dim, [alpha, beta], tf, spacings, true, term, predicted)
}

/// Same check for the plain underlying interpolation (`h^2` term).
pub fn linear_leading_error_check(
    dim: usize,
    alpha: f64,
    beta: f64,
    tf: TestFunction,
    spacings: &[f64],
) -> Result<ExpansionCheck, AnalysisError> {
    validate(dim, alpha, beta, tf, spacings)?;
    let p: Point = tf.probe();
    let mut predicted = alpha * (1.0 - alpha) / 2.0 * tf.partial(&p, 0, 2);
    if dim == 2 {
        predicted += beta * (1.0 - beta) / 2.0 * tf.partial(&p, 1, 2);
    }
    finish(
        dim,
        [alpha, beta],
        tf,
        spacings,
        false,
        ExpansionTerm::Quadratic,
        predicted,
    )
}

/// Largest accepted relative gap between measured and predicted coefficients.
pub const EXPANSION_GAP_TOLERANCE: f64 = 0.05;

/// Spacings used by [`verify_expansions`].
pub const EXPANSION_SPACINGS: [f64; 3] = [0.02, 0.01, 0.005];

/// Runs the standard matrix of leading-term checks: BFECC in 1D on
/// `sin(pi x)` and in 2D on `sin(pi (x + 2y))`, plus plain interpolation.
pub fn verify_expansions() -> Result<Vec<ExpansionCheck>, AnalysisError> {
    let h = &EXPANSION_SPACINGS;
    let mut out = Vec::new();
    for a in [0.1, 0.25, 0.4, 0.5] {
        out.push(leading_error_check(1, a, 0.0, TestFunction::SinPiX, h)?);
    }
    for (a, b) in [(0.1, 0.1), (0.25, 0.25), (0.4, 0.4), (0.4, 0.1), (0.25, 0.0)] {
        out.push(leading_error_check(2, a, b, TestFunction::SinPiX2y, h)?);
    }
    out.push(linear_leading_error_check(1, 0.25, 0.0, TestFunction::SinPiX, h)?);
    out.push(linear_leading_error_check(2, 0.25, 0.25, TestFunction::SinPiX2y, h)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPACINGS: [f64; 3] = [0.02, 0.01, 0.005];

    #[test]
    fn neville_recovers_polynomial_limit() {
        let h = [0.4, 0.2, 0.1];
        let q: Vec<f64> = h.iter().map(|x| 1.5 - 2.0 * x + 3.0 * x * x).collect();
        assert!((extrapolate_to_zero(&h, &q) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn quarter_shift_coefficient_value() {
        let a: f64 = 0.25;
        assert_eq!(a * (a - 1.0) * (8.0 * a - 4.0) / 24.0, 0.015625);
        assert_eq!(cubic_shape(a) / 6.0, 0.015625);
        assert_eq!(cubic_shape(0.5), 0.0);
    }

    #[test]
    fn one_d_quarter_shift_matches() {
        let c = leading_error_check(1, 0.25, 0.0, TestFunction::SinPiX, &SPACINGS).unwrap();
        assert_eq!(c.term, ExpansionTerm::Cubic);
        assert!(c.relative_gap <= 0.02, "{c:?}");
    }

    #[test]
    fn one_d_half_shift_switches_to_quartic() {
        let c = leading_error_check(1, 0.5, 0.0, TestFunction::SinPiX, &SPACINGS).unwrap();
        assert_eq!(c.term, ExpansionTerm::Quartic);
        assert!(c.relative_gap <= 0.05, "{c:?}");
    }

    #[test]
    fn plain_interpolation_quadratic_term() {
        let c = linear_leading_error_check(1, 0.25, 0.0, TestFunction::SinPiX, &SPACINGS).unwrap();
        assert!(c.relative_gap <= 0.05, "{c:?}");
        let c2 = linear_leading_error_check(2, 0.3, 0.6, TestFunction::SinPiX2y, &SPACINGS).unwrap();
        assert!(c2.relative_gap <= 0.05, "{c2:?}");
    }

    #[test]
    fn input_validation() {
        assert!(matches!(
            leading_error_check(1, 0.25, 0.0, TestFunction::SinPiX, &[0.01, 0.005]),
            Err(AnalysisError::InsufficientLevels { .. })
        ));
        assert!(matches!(
            leading_error_check(1, 1.5, 0.0, TestFunction::SinPiX, &SPACINGS),
            Err(AnalysisError::ShiftOutOfRange(_))
        ));
        assert!(matches!(
            leading_error_check(1, 0.25, 0.0, TestFunction::SinPiX2y, &SPACINGS),
            Err(AnalysisError::FunctionDim { .. })
        ));
        assert!(matches!(
            leading_error_check(2, 0.5, 0.5, TestFunction::SinPiX2y, &SPACINGS),
            Err(AnalysisError::DegeneratePrediction)
        ));
    }

    #[test]
    fn default_matrix_within_tolerance() {
        for c in verify_expansions().unwrap() {
            assert!(c.passes(EXPANSION_GAP_TOLERANCE), "{c:?}");
        }
    }
}
