use serde::Serialize;

/// Built-in test functions. The planar members are defined on `(x1, x2)` and
/// lifted to higher dimensions by adding `sum_{i>=3} x_i^2`; `linear` and
/// `squared_norm` are defined natively in every dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusMember {
    /// `(x1^2 - 1)^2 + x2^2`
    DoubleWell,
    /// `|x1^2 - 1| + x2^2`
    NonsmoothWell,
    /// `x1 + x1^2 x2`
    Broughton,
    /// `x1^2 x2^2`
    CrossSquare,
    /// `x1`
    Linear,
    /// `|x1|`
    AbsX1,
    /// `|x|^2`
    SquaredNorm,
}

/// Static description used by `corpus list` and the scoreboard.
#[derive(Debug, Clone, Serialize)]
pub struct CorpusInfo {
    pub name: &'static str,
    pub formula: &'static str,
    pub known: &'static str,
}

impl CorpusMember {
    pub const ALL: [CorpusMember; 7] = [
        CorpusMember::DoubleWell,
        CorpusMember::NonsmoothWell,
        CorpusMember::Broughton,
        CorpusMember::CrossSquare,
        CorpusMember::Linear,
        CorpusMember::AbsX1,
        CorpusMember::SquaredNorm,
    ];

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }

    pub fn name(self) -> &'static str {
        self.info().name
    }

    pub fn info(self) -> CorpusInfo {
        let (name, formula, known) = match self {
            CorpusMember::DoubleWell => (
                "double_well",
                "(x1^2 - 1)^2 + x2^2",
                "critical mountain-pass value c = 1 at (0, 0)",
            ),
            CorpusMember::NonsmoothWell => (
                "nonsmooth_well",
                "|x1^2 - 1| + x2^2",
                "nonsmooth, critical mountain-pass value c = 1 at (0, 0)",
            ),
            CorpusMember::Broughton => (
                "broughton",
                "x1 + x1^2 x2",
                "no critical points; c = 0 is a tangency value at infinity",
            ),
            CorpusMember::CrossSquare => (
                "cross_square",
                "x1^2 x2^2",
                "tangency values at infinity {0} (4 axis branches)",
            ),
            CorpusMember::Linear => ("linear", "x1", "no tangency values at infinity"),
            CorpusMember::AbsX1 => ("abs_x1", "|x1|", "Clarke subdifferential [-1, 1] x {0} at 0"),
            CorpusMember::SquaredNorm => (
                "squared_norm",
                "|x|^2",
                "radially symmetric: every sphere point is a tangency point",
            ),
        };
        CorpusInfo {
            name,
            formula,
            known,
        }
    }

    pub fn min_dim(self) -> usize {
        match self {
            CorpusMember::Linear | CorpusMember::SquaredNorm => 1,
            _ => 2,
        }
    }

    fn lifted(self) -> bool {
        !matches!(self, CorpusMember::Linear | CorpusMember::SquaredNorm)
    }

    fn tail(self, x: &[f64]) -> f64 {
        if self.lifted() {
            x[2..].iter().map(|v| v * v).sum()
        } else {
            0.0
        }
    }

    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            CorpusMember::Linear => x[0],
            CorpusMember::SquaredNorm => x.iter().map(|v| v * v).sum(),
            _ => {
                let (a, b) = (x[0], x[1]);
                let planar = match self {
                    CorpusMember::DoubleWell => {
                        let u = a * a - 1.0;
                        u * u + b * b
                    }
                    CorpusMember::NonsmoothWell => (a * a - 1.0).abs() + b * b,
                    CorpusMember::Broughton => a + a * a * b,
                    CorpusMember::CrossSquare => a * a * b * b,
                    CorpusMember::AbsX1 => a.abs(),
                    CorpusMember::Linear | CorpusMember::SquaredNorm => unreachable!(),
                };
                planar + self.tail(x)
            }
        }
    }

    /// Exact gradient. On the nonsmooth locus one branch is returned.
    pub fn gradient(self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        match self {
            CorpusMember::Linear => g[0] = 1.0,
            CorpusMember::SquaredNorm => {
                for (gi, xi) in g.iter_mut().zip(x) {
                    *gi = 2.0 * xi;
                }
            }
            _ => {
                let (a, b) = (x[0], x[1]);
                let (ga, gb) = match self {
                    CorpusMember::DoubleWell => (4.0 * a * (a * a - 1.0), 2.0 * b),
                    CorpusMember::NonsmoothWell => {
                        let s = if a * a - 1.0 < 0.0 { -1.0 } else { 1.0 };
                        (2.0 * s * a, 2.0 * b)
                    }
                    CorpusMember::Broughton => (1.0 + 2.0 * a * b, a * a),
                    CorpusMember::CrossSquare => (2.0 * a * b * b, 2.0 * a * a * b),
                    CorpusMember::AbsX1 => (if a < 0.0 { -1.0 } else { 1.0 }, 0.0),
                    CorpusMember::Linear | CorpusMember::SquaredNorm => unreachable!(),
                };
                g[0] = ga;
                g[1] = gb;
                for i in 2..x.len() {
                    g[i] = 2.0 * x[i];
                }
            }
        }
        g
    }

    pub fn is_smooth(self) -> bool {
        !matches!(self, CorpusMember::NonsmoothWell | CorpusMember::AbsX1)
    }

    pub fn nonsmooth_hint(self, x: &[f64]) -> bool {
        let band = super::expr::TIE_TOL;
        match self {
            CorpusMember::NonsmoothWell => (x[0] * x[0] - 1.0).abs() <= band,
            CorpusMember::AbsX1 => x[0].abs() <= band,
            _ => false,
        }
    }
}
