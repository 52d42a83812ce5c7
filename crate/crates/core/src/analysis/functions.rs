use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::grid::Point;

/// Closed-form test functions used by the convergence studies.
///
/// Each function provides pure partial derivatives up to fourth order along
/// every axis, and a probe point for leading-error checks chosen away from
/// zeros of the second, third and fourth partials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    /// sin(pi x)
    SinPiX,
    /// sin(pi (x + 2y))
    SinPiX2y,
    /// sin(pi (x + 0.2y))
    SinPiX02y,
    /// (x + 0.2y)^3
    CubicX02y,
    /// exp(x + 0.2y)
    ExpX02y,
    /// sin(pi (x + 2y + 3z))
    SinPiX2y3z,
    /// sin(x + 2y + z^2)
    SinX2yZ2,
}

#[derive(Clone, Copy)]
enum Profile {
    SinPi,
    Exp,
    Cube,
}

impl Profile {
    /// m-th derivative of the profile at u.
    fn derivative(self, u: f64, m: u32) -> f64 {
        match self {
            Profile::SinPi => PI.powi(m as i32) * (PI * u + m as f64 * PI / 2.0).sin(),
            Profile::Exp => u.exp(),
            Profile::Cube => match m {
                0 => u * u * u,
                1 => 3.0 * u * u,
                2 => 6.0 * u,
                3 => 6.0,
                _ => 0.0,
            },
        }
    }
}

pub const ALL_FUNCTIONS: [TestFunction; 7] = [
    TestFunction::SinPiX,
    TestFunction::SinPiX2y,
    TestFunction::SinPiX02y,
    TestFunction::CubicX02y,
    TestFunction::ExpX02y,
    TestFunction::SinPiX2y3z,
    TestFunction::SinX2yZ2,
];

impl TestFunction {
    pub fn id(self) -> &'static str {
        match self {
            TestFunction::SinPiX => "sin_pi_x",
            TestFunction::SinPiX2y => "sin_pi_x2y",
            TestFunction::SinPiX02y => "sin_pi_x02y",
            TestFunction::CubicX02y => "cubic_x02y",
            TestFunction::ExpX02y => "exp_x02y",
            TestFunction::SinPiX2y3z => "sin_pi_x2y3z",
            TestFunction::SinX2yZ2 => "sin_x2y_z2",
        }
    }

    pub fn formula(self) -> &'static str {
        match self {
            TestFunction::SinPiX => "sin(pi*x)",
            TestFunction::SinPiX2y => "sin(pi*(x+2y))",
            TestFunction::SinPiX02y => "sin(pi*(x+0.2y))",
            TestFunction::CubicX02y => "(x+0.2y)^3",
            TestFunction::ExpX02y => "exp(x+0.2y)",
            TestFunction::SinPiX2y3z => "sin(pi*(x+2y+3z))",
            TestFunction::SinX2yZ2 => "sin(x+2y+z^2)",
        }
    }

    /// Number of coordinates the function depends on.
    pub fn dim(self) -> usize {
        match self {
            TestFunction::SinPiX => 1,
            TestFunction::SinPiX2y
            | TestFunction::SinPiX02y
            | TestFunction::CubicX02y
            | TestFunction::ExpX02y => 2,
            TestFunction::SinPiX2y3z | TestFunction::SinX2yZ2 => 3,
        }
    }

    fn ridge(self) -> Option<(Profile, Point)> {
        Some(match self {
            TestFunction::SinPiX => (Profile::SinPi, [1.0, 0.0, 0.0]),
            TestFunction::SinPiX2y => (Profile::SinPi, [1.0, 2.0, 0.0]),
            TestFunction::SinPiX02y => (Profile::SinPi, [1.0, 0.2, 0.0]),
            TestFunction::CubicX02y => (Profile::Cube, [1.0, 0.2, 0.0]),
            TestFunction::ExpX02y => (Profile::Exp, [1.0, 0.2, 0.0]),
            TestFunction::SinPiX2y3z => (Profile::SinPi, [1.0, 2.0, 3.0]),
            TestFunction::SinX2yZ2 => return None,
        })
    }

    pub fn value(self, p: &Point) -> f64 {
        self.partial(p, 0, 0)
    }

    /// Pure partial derivative of order `order` (0..=4) along `axis`.
    pub fn partial(self, p: &Point, axis: usize, order: u32) -> f64 {
        assert!(order <= 4 && axis < 3);
        if let Some((profile, k)) = self.ridge() {
            let u = k[0] * p[0] + k[1] * p[1] + k[2] * p[2];
            return k[axis].powi(order as i32) * profile.derivative(u, order);
        }
        // sin(x + 2y + z^2)
        let u = p[0] + 2.0 * p[1] + p[2] * p[2];
        let (s, c) = u.sin_cos();
        let linear = [s, c, -s, -c, s];
        match axis {
            0 => linear[order as usize],
            1 => 2f64.powi(order as i32) * linear[order as usize],
            _ => {
                let z = p[2];
                match order {
                    0 => s,
                    1 => 2.0 * z * c,
                    2 => 2.0 * c - 4.0 * z * z * s,
                    3 => -12.0 * z * s - 8.0 * z * z * z * c,
                    _ => -12.0 * s - 48.0 * z * z * c + 16.0 * z.powi(4) * s,
                }
            }
        }
    }

    /// Point used by leading-error checks.
    pub fn probe(self) -> Point {
        match self.dim() {
            1 => [0.2, 0.0, 0.0],
            2 => [0.15, 0.05, 0.0],
            _ => [0.1, 0.05, 0.3],
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown test function '{0}'")]
pub struct UnknownFunction(pub String);

impl FromStr for TestFunction {
    type Err = UnknownFunction;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ALL_FUNCTIONS
            .iter()
            .copied()
            .find(|f| f.id() == s)
            .ok_or_else(|| UnknownFunction(s.to_string()))
    }
}
