//! Locally Lipschitz objective functions.

mod corpus;
mod expr;

pub use corpus::{CorpusInfo, CorpusMember};
pub use expr::{parse_expression, Expr, Expression, Func, LipschitzWarning, TIE_TOL};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng;

/// Pairs sampled by [`ScalarField::lipschitz_bound_on`].
pub const LIPSCHITZ_PAIRS: usize = 2000;
/// Inflation applied to the sampled Lipschitz quotient.
pub const LIPSCHITZ_INFLATION: f64 = 1.5;

#[derive(Debug, Clone)]
enum Source {
    Corpus(CorpusMember),
    Expression(Expression),
}

/// An evaluable locally Lipschitz function `R^n -> R`.
///
/// Immutable after construction; every method takes `&self` and is safe to
/// call from many threads.
#[derive(Debug, Clone)]
pub struct ScalarField {
    name: String,
    dim: usize,
    source: Source,
}

impl ScalarField {
    /// A built-in corpus member in dimension `dim`.
    pub fn corpus(name: &str, dim: usize) -> Result<Self> {
        let member = CorpusMember::from_name(name).ok_or_else(|| Error::UnknownCorpus(name.into()))?;
        Self::from_member(member, dim)
    }

    pub fn from_member(member: CorpusMember, dim: usize) -> Result<Self> {
        if dim < member.min_dim() {
            return Err(Error::InvalidArgument(format!(
                "{} needs dimension >= {}, got {dim}",
                member.name(),
                member.min_dim()
            )));
        }
        Ok(Self {
            name: member.name().to_string(),
            dim,
            source: Source::Corpus(member),
        })
    }

    /// A user expression over `x1..x{dim}`.
    pub fn from_expr(text: &str, dim: usize) -> Result<Self> {
        let e = parse_expression(text, dim)?;
        Ok(Self {
            name: e.to_string(),
            dim,
            source: Source::Expression(e),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn corpus_member(&self) -> Option<CorpusMember> {
        match &self.source {
            Source::Corpus(m) => Some(*m),
            Source::Expression(_) => None,
        }
    }

    pub fn expression(&self) -> Option<&Expression> {
        match &self.source {
            Source::Expression(e) => Some(e),
            Source::Corpus(_) => None,
        }
    }

    /// Parse-time warnings about constructs that may break the Lipschitz
    /// assumption. Always empty for corpus members.
    pub fn warnings(&self) -> &[LipschitzWarning] {
        match &self.source {
            Source::Expression(e) => e.warnings(),
            Source::Corpus(_) => &[],
        }
    }

    /// Whether the function is known to be smooth everywhere (no
    /// `abs`/`max`/`min`/`norm`/`sqrt` in expressions).
    pub fn is_smooth(&self) -> bool {
        match &self.source {
            Source::Corpus(m) => m.is_smooth(),
            Source::Expression(e) => !has_kinks(e.root()),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let v = match &self.source {
            Source::Corpus(m) => m.eval(x),
            Source::Expression(e) => e.eval(x)?,
        };
        if !v.is_finite() {
            return Err(Error::Domain(format!("non-finite value {v} at {x:?}")));
        }
        Ok(v)
    }

    /// True when `x` lies on (or numerically next to) the declared
    /// nonsmooth locus.
    pub fn nonsmooth_hint(&self, x: &[f64]) -> bool {
        match &self.source {
            Source::Corpus(m) => m.nonsmooth_hint(x),
            Source::Expression(e) => e.at_tie(x),
        }
    }

    /// Gradient off the nonsmooth locus. Signals [`Error::NonsmoothPoint`]
    /// on the locus; callers perturb and retry.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        if self.nonsmooth_hint(x) {
            return Err(Error::NonsmoothPoint(x.to_vec()));
        }
        self.branch_gradient(x)
    }

    /// Gradient of whichever smooth branch is active at `x`, without the
    /// locus check.
    pub fn branch_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let g = match &self.source {
            Source::Corpus(m) => m.gradient(x),
            Source::Expression(e) => e.eval_with_gradient(x)?.1,
        };
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite gradient at {x:?}")));
        }
        Ok(g)
    }

    /// Central finite differences with step `(1 + |x|) * eps^(1/3)`.
    pub fn fd_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let h = fd_step(x);
        let mut probe = x.to_vec();
        let mut g = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            probe[i] = x[i] + h;
            let up = self.eval(&probe)?;
            probe[i] = x[i] - h;
            let down = self.eval(&probe)?;
            probe[i] = x[i];
            g.push((up - down) / (2.0 * h));
        }
        Ok(g)
    }

    /// Sampled local Lipschitz constant on the box `[lo, hi]`: the largest
    /// difference quotient over [`LIPSCHITZ_PAIRS`] random pairs, inflated by
    /// [`LIPSCHITZ_INFLATION`].
    pub fn lipschitz_bound_on(&self, lo: &[f64], hi: &[f64], seed: u64) -> Result<f64> {
        self.lipschitz_bound_with(lo, hi, LIPSCHITZ_PAIRS, seed)
    }

    pub fn lipschitz_bound_with(&self, lo: &[f64], hi: &[f64], pairs: usize, seed: u64) -> Result<f64> {
        self.check_dim(lo)?;
        self.check_dim(hi)?;
        let mut r = rng::stream(seed, 0x11_95);
        let mut best: f64 = 0.0;
        for _ in 0..pairs {
            let a = rng::in_box(&mut r, lo, hi);
            let b = rng::in_box(&mut r, lo, hi);
            let d = linalg::dist(&a, &b);
            if d <= f64::EPSILON {
                continue;
            }
            let q = (self.eval(&a)? - self.eval(&b)?).abs() / d;
            best = best.max(q);
        }
        Ok(LIPSCHITZ_INFLATION * best)
    }
}

pub fn fd_step(x: &[f64]) -> f64 {
    (1.0 + linalg::norm(x)) * f64::EPSILON.cbrt()
}

fn has_kinks(e: &Expr) -> bool {
    match e {
        Expr::Call(_, _) => true,
        Expr::Num(_) | Expr::Var(_) => false,
        Expr::Neg(a) | Expr::Pow(a, _) => has_kinks(a),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            has_kinks(a) || has_kinks(b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(name: &str) -> ScalarField {
        ScalarField::corpus(name, 2).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(field("double_well").eval(&[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(field("double_well").eval(&[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(field("nonsmooth_well").eval(&[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn gradient_examples() {
        assert_eq!(field("double_well").gradient(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(field("double_well").gradient(&[1.0, 1.0]).unwrap(), vec![0.0, 2.0]);
        assert_eq!(field("nonsmooth_well").gradient(&[0.5, 0.0]).unwrap(), vec![-1.0, 0.0]);
    }

    #[test]
    fn gradient_signals_nonsmooth_point() {
        assert!(matches!(
            field("nonsmooth_well").gradient(&[1.0, 0.3]),
            Err(Error::NonsmoothPoint(_))
        ));
        let e = ScalarField::from_expr("abs(x1) + x2", 2).unwrap();
        assert!(matches!(e.gradient(&[0.0, 1.0]), Err(Error::NonsmoothPoint(_))));
        assert!(e.gradient(&[0.1, 1.0]).is_ok());
    }

    #[test]
    fn dimension_is_checked() {
        assert!(matches!(
            field("double_well").eval(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
        assert!(ScalarField::corpus("double_well", 1).is_err());
        assert!(matches!(
            ScalarField::corpus("nope", 2),
            Err(Error::UnknownCorpus(_))
        ));
    }

    #[test]
    fn lifting_adds_squares() {
        let f = ScalarField::corpus("double_well", 4).unwrap();
        assert_eq!(f.eval(&[0.0, 0.0, 1.0, 2.0]).unwrap(), 1.0 + 1.0 + 4.0);
        assert_eq!(f.gradient(&[0.0, 0.0, 1.0, 2.0]).unwrap(), vec![0.0, 0.0, 2.0, 4.0]);
        let lin = ScalarField::corpus("linear", 3).unwrap();
        assert_eq!(lin.gradient(&[5.0, 1.0, 1.0]).unwrap(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn expression_matches_corpus() {
        let e = ScalarField::from_expr("abs(x1^2 - 1) + x2^2", 2).unwrap();
        let c = field("nonsmooth_well");
        for x in [[0.3, -0.2], [1.7, 0.4], [-2.0, 1.0]] {
            assert_eq!(e.eval(&x).unwrap(), c.eval(&x).unwrap());
            assert_eq!(e.gradient(&x).unwrap(), c.gradient(&x).unwrap());
        }
    }

    #[test]
    fn lipschitz_bound_dominates_pairs() {
        let f = field("double_well");
        let k = f.lipschitz_bound_on(&[-1.0, -1.0], &[1.0, 1.0], 3).unwrap();
        // |grad| <= sqrt((4*x*(x^2-1))^2 + 4) on the box; the sup is about 3.6.
        assert!(k > 2.0 && k < 10.0, "{k}");
    }
}
