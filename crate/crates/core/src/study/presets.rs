use super::{
    Booster, Check, DomainSection, LadderSection, NormKind, OutputSection, StudyConfig,
    StudyError, StudySection, TargetKind, TargetSection,
};
use crate::analysis::TestFunction;
use crate::interp::Method;

/// Preset names with a one-line description.
pub const PRESETS: [(&str, &str); 18] = [
    ("table1", "1D, shift 0.25dx, sin(pi*x), linear vs BFECC"),
    ("table2", "2D, shift 0.25, sin(pi*(x+2y)), bilinear vs BFECC"),
    ("table3", "2D, shift 0.5 (centroids), sin(pi*(x+2y)), super-convergence"),
    ("table4", "2D LLS, shift 0.25, sin(pi*(x+0.2y)), BFECC vs MacCormack"),
    ("table5", "2D LLS, shift 0.25, (x+0.2y)^3, BFECC vs MacCormack"),
    ("table6", "2D LLS, shift 0.25, exp(x+0.2y), BFECC vs MacCormack"),
    ("table7", "2D LLS, shift 0.5, exp(x+0.2y), BFECC vs MacCormack"),
    ("table8", "3D, source/target spacing ratio sqrt(2):1"),
    ("table9", "3D, perturbed and shifted target, sin(x+2y+z^2)"),
    ("table10", "3D, target rotated 3 deg about z through the domain center"),
    ("table11", "3D, dx:dy:dz = 1:0.9:1.2, shift 0.25, trilinear"),
    ("table12", "3D, dx:dy:dz = 1:0.9:1.2, shift 0.5, trilinear"),
    ("table13", "3D, dx:dy:dz = 1:0.9:1.2, shift 0.25, LLS"),
    ("uniform3d_quarter", "3D, shift 0.25, trilinear"),
    ("uniform3d_lls_quarter", "3D, shift 0.25, LLS"),
    ("uniform3d_half", "3D, shift 0.5, trilinear"),
    ("ratio2", "3D, 2:1 spacing ratio, fine target transferred directly"),
    ("split_ratio2", "3D, 2:1 spacing ratio with the fine target split into 8 subgrids"),
];

const LADDER: [f64; 4] = [0.05, 0.025, 0.0125, 0.00625];

struct Builder {
    cfg: StudyConfig,
}

impl Builder {
    fn new(name: &str, dim: usize, function: TestFunction, method: Method, target: TargetSection) -> Self {
        Builder {
            cfg: StudyConfig {
                study: StudySection {
                    name: name.to_string(),
                    dim,
                    function,
                    method,
                    boosters: vec![Booster::None, Booster::Bfecc],
                    margin: 2,
                },
                domain: DomainSection {
                    lower: vec![0.0; dim],
                    upper: vec![1.0; dim],
                },
                ladder: LadderSection {
                    spacings: LADDER.to_vec(),
                    aspect: None,
                },
                target,
                output: OutputSection::default(),
                checks: Vec::new(),
            },
        }
    }

    fn shifted(name: &str, dim: usize, function: TestFunction, method: Method, frac: f64) -> Self {
        let mut t = TargetSection::new(TargetKind::Shift);
        t.shift = Some(vec![frac; dim]);
        Self::new(name, dim, function, method, t)
    }

    fn with_maccormack(mut self) -> Self {
        self.cfg.study.boosters.push(Booster::Maccormack);
        self
    }

    fn orders(mut self, booster: Booster, expected: &[f64], tol: f64) -> Self {
        self.cfg.checks.push(Check::Orders {
            booster,
            norm: NormKind::Linf,
            expected: expected.to_vec(),
            tol,
        });
        self
    }

    fn range(mut self, booster: Booster, min: f64, max: f64) -> Self {
        self.cfg.checks.push(Check::OrderRange {
            booster,
            norm: NormKind::Linf,
            min,
            max,
        });
        self
    }

    fn below(mut self, booster: Booster, other: Booster) -> Self {
        self.cfg.checks.push(Check::ErrorBelow {
            booster,
            other,
            norm: NormKind::Linf,
        });
        self
    }

    fn build(self) -> StudyConfig {
        debug_assert!(self.cfg.validate().is_ok(), "{:?}", self.cfg.validate());
        self.cfg
    }
}

/// Configuration of a named preset.
pub fn preset(name: &str) -> Result<StudyConfig, StudyError> {
    use Booster::{Bfecc, Maccormack, None as Plain};
    use Method::{LeastSquares as Lls, Multilinear as Ml};
    use TestFunction::*;
    let cfg = match name {
        "table1" => Builder::shifted(name, 1, SinPiX, Ml, 0.25)
            .orders(Plain, &[2.11, 2.06, 2.03], 0.15)
            .orders(Bfecc, &[3.00, 3.00, 3.00], 0.15)
            .build(),
        "table2" => Builder::shifted(name, 2, SinPiX2y, Ml, 0.25)
            .orders(Plain, &[2.11, 2.05, 2.03], 0.15)
            .orders(Bfecc, &[2.95, 3.03, 2.99], 0.15)
            .build(),
        "table3" => Builder::shifted(name, 2, SinPiX2y, Ml, 0.5)
            .orders(Plain, &[2.08, 2.03, 2.01], 0.15)
            .orders(Bfecc, &[3.98, 4.01, 3.99], 0.2)
            .build(),
        "table4" => Builder::shifted(name, 2, SinPiX02y, Lls, 0.25)
            .with_maccormack()
            .orders(Bfecc, &[3.00, 3.00, 3.00], 0.15)
            .orders(Maccormack, &[2.99, 3.00, 3.00], 0.15)
            .below(Bfecc, Maccormack)
            .build(),
        "table5" => Builder::shifted(name, 2, CubicX02y, Lls, 0.25)
            .with_maccormack()
            .orders(Bfecc, &[3.00, 3.00, 3.00], 0.15)
            .orders(Maccormack, &[3.00, 3.00, 3.00], 0.15)
            .below(Bfecc, Maccormack)
            .build(),
        "table6" => Builder::shifted(name, 2, ExpX02y, Lls, 0.25)
            .with_maccormack()
            .orders(Bfecc, &[2.98, 2.99, 2.99], 0.15)
            .orders(Maccormack, &[3.01, 3.00, 3.00], 0.15)
            .below(Bfecc, Maccormack)
            .build(),
        "table7" => Builder::shifted(name, 2, ExpX02y, Lls, 0.5)
            .with_maccormack()
            .range(Bfecc, 3.8, 4.2)
            .range(Maccormack, 2.8, 3.2)
            .below(Bfecc, Maccormack)
            .build(),
        "table8" => {
            let mut t = TargetSection::new(TargetKind::Ratio);
            t.ratio = Some(std::f64::consts::SQRT_2);
            let mut b = Builder::new(name, 3, SinPiX2y3z, Ml, t)
                .range(Bfecc, 1.85, 2.2)
                .below(Bfecc, Plain);
            b.cfg.ladder.spacings = vec![0.0625, 0.03125, 0.015625, 0.0078125];
            b.build()
        }
        "table9" => {
            let mut t = TargetSection::new(TargetKind::Perturbation);
            t.shift = Some(vec![0.25; 3]);
            t.amplitude = Some(0.1);
            let mut b = Builder::new(name, 3, SinX2yZ2, Ml, t).orders(Bfecc, &[2.79, 2.91, 3.06], 0.25);
            b.cfg.domain = DomainSection {
                lower: vec![-0.25; 3],
                upper: vec![0.25; 3],
            };
            b.cfg.ladder.spacings = vec![0.0125, 0.00625, 0.003125, 0.0015625];
            b.build()
        }
        "table10" => {
            let mut t = TargetSection::new(TargetKind::Rotation);
            t.angle_deg = Some(3.0);
            t.axis = Some(vec![0.0, 0.0, 1.0]);
            t.center = Some(vec![0.5; 3]);
            let mut b = Builder::new(name, 3, SinPiX2y3z, Ml, t).below(Bfecc, Plain);
            b.cfg.checks.push(Check::FinalOrderBelow {
                booster: Bfecc,
                norm: NormKind::Linf,
                max: 2.5,
            });
            b.build()
        }
        "table11" | "table12" | "table13" => {
            let (frac, method, expected, tol) = match name {
                "table11" => (0.25, Ml, [3.21, 3.06, 3.01], 0.2),
                "table12" => (0.5, Ml, [3.94, 3.99, 4.00], 0.2),
                _ => (0.25, Lls, [3.22, 3.06, 3.01], 0.25),
            };
            let mut b = Builder::shifted(name, 3, SinPiX2y3z, method, frac).orders(Bfecc, &expected, tol);
            b.cfg.ladder.aspect = Some(vec![1.0, 0.9, 1.2]);
            b.build()
        }
        "uniform3d_quarter" => Builder::shifted(name, 3, SinPiX2y3z, Ml, 0.25)
            .orders(Bfecc, &[3.19, 3.05, 3.01], 0.2)
            .build(),
        "uniform3d_lls_quarter" => Builder::shifted(name, 3, SinPiX2y3z, Lls, 0.25)
            .orders(Bfecc, &[2.99, 2.99, 2.99], 0.25)
            .build(),
        "uniform3d_half" => Builder::shifted(name, 3, SinPiX2y3z, Ml, 0.5)
            .orders(Bfecc, &[3.97, 4.00, 4.00], 0.2)
            .build(),
        "ratio2" | "split_ratio2" => {
            let split = name == "split_ratio2";
            let mut t = TargetSection::new(TargetKind::Ratio);
            t.ratio = Some(2.0);
            t.shift = Some(vec![0.25; 3]);
            if split {
                t.split = Some(vec![2, 2, 2]);
            }
            let (min, max) = if split { (2.8, 3.8) } else { (1.85, 2.2) };
            Builder::new(name, 3, SinPiX2y3z, Ml, t)
                .range(Bfecc, min, max)
                .below(Bfecc, Plain)
                .build()
        }
        _ => return Err(StudyError::UnknownPreset(name.to_string())),
    };
    Ok(cfg)
}
