use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linalg;
use crate::par;

/// Evaluation points per segment used when no refinement is specified.
pub const DEFAULT_REFINE: usize = 16;
/// Default vertex count of re-spaced paths.
pub const DEFAULT_VERTICES: usize = 65;

/// Piecewise-linear path with cached vertex values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PLPath {
    vertices: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl PLPath {
    pub fn new(field: &ScalarField, vertices: Vec<Vec<f64>>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidArgument("a path needs at least two vertices".into()));
        }
        let values = par::map_indexed(&vertices, |_, v| field.eval(v))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { vertices, values })
    }

    /// Segment from `a` to `b` with `n` equally spaced vertices.
    pub fn straight(field: &ScalarField, a: &[f64], b: &[f64], n: usize) -> Result<Self> {
        let n = n.max(2);
        let vertices = (0..n)
            .map(|i| {
                if i == 0 {
                    a.to_vec()
                } else if i == n - 1 {
                    b.to_vec()
                } else {
                    linalg::lerp(a, b, i as f64 / (n - 1) as f64)
                }
            })
            .collect();
        Self::new(field, vertices)
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn start(&self) -> &[f64] {
        &self.vertices[0]
    }

    pub fn end(&self) -> &[f64] {
        &self.vertices[self.vertices.len() - 1]
    }

    /// Index and value of the highest vertex.
    pub fn vertex_max(&self) -> (usize, f64) {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
    }

    /// Max of `f` over the vertices and `refine - 1` interior points per
    /// segment.
    pub fn path_value(&self, field: &ScalarField, refine: usize) -> Result<f64> {
        Ok(self.profile(field, refine)?.0)
    }

    /// Path value together with the larger change of `f` from the highest
    /// evaluation point to its neighbours, an estimate of the refinement
    /// error at the peak.
    pub fn profile(&self, field: &ScalarField, refine: usize) -> Result<(f64, f64)> {
        let refine = refine.max(1);
        let segs: Vec<usize> = (0..self.vertices.len() - 1).collect();
        let maxima = par::map_indexed(&segs, |_, &i| -> Result<(f64, f64)> {
            let (a, b) = (&self.vertices[i], &self.vertices[i + 1]);
            let mut samples = Vec::with_capacity(refine + 1);
            samples.push(self.values[i]);
            for k in 1..refine {
                samples.push(field.eval(&linalg::lerp(a, b, k as f64 / refine as f64))?);
            }
            samples.push(self.values[i + 1]);
            let (k, m) = samples
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
            let left = if k > 0 { (m - samples[k - 1]).abs() } else { 0.0 };
            let right = if k < refine { (m - samples[k + 1]).abs() } else { 0.0 };
            Ok((m, left.max(right)))
        });
        let (mut best, mut jump) = (f64::NEG_INFINITY, 0.0f64);
        for m in maxima {
            let (v, j) = m?;
            if v > best {
                best = v;
                jump = j;
            } else if v == best {
                jump = jump.max(j);
            }
        }
        Ok((best, jump))
    }

    /// Largest norm along the path. Attained at a vertex since the norm is
    /// convex on each segment.
    pub fn max_norm(&self) -> f64 {
        self.vertices.iter().map(|v| linalg::norm(v)).fold(0.0, f64::max)
    }

    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| linalg::dist(&w[0], &w[1])).sum()
    }

    /// Whether the path lies in the feasible family for `(r, epsilon)`:
    /// value below `c_ref + epsilon` and norm at most `r`. The sampled value
    /// is a lower bound of the true maximum, so half the peak jump from
    /// [`PLPath::profile`] is added before comparing.
    pub fn membership(&self, field: &ScalarField, r: f64, epsilon: f64, c_ref: f64) -> Result<bool> {
        // Projection onto the r-sphere can overshoot r by an ulp.
        if self.max_norm() > r * (1.0 + 1e-12) {
            return Ok(false);
        }
        let (value, jump) = self.profile(field, DEFAULT_REFINE)?;
        Ok(value + 0.5 * jump < c_ref + epsilon)
    }

    /// Same endpoints, new interior.
    pub fn with_vertices(&self, field: &ScalarField, vertices: Vec<Vec<f64>>) -> Result<Self> {
        if vertices.first().map(Vec::as_slice) != Some(self.start())
            || vertices.last().map(Vec::as_slice) != Some(self.end())
        {
            return Err(Error::InvalidArgument("path endpoints must not change".into()));
        }
        Self::new(field, vertices)
    }

    /// `n` vertices equally spaced in arc length along the current polyline.
    pub fn respaced(&self, field: &ScalarField, n: usize) -> Result<Self> {
        let n = n.max(2);
        let mut cum = Vec::with_capacity(self.vertices.len());
        cum.push(0.0);
        for w in self.vertices.windows(2) {
            let last = *cum.last().unwrap();
            cum.push(last + linalg::dist(&w[0], &w[1]));
        }
        let total = *cum.last().unwrap();
        if total == 0.0 {
            return Self::new(field, vec![self.start().to_vec(); n]);
        }
        let mut out = Vec::with_capacity(n);
        out.push(self.start().to_vec());
        let mut seg = 0;
        for k in 1..n - 1 {
            let s = total * k as f64 / (n - 1) as f64;
            while seg + 1 < cum.len() - 1 && cum[seg + 1] < s {
                seg += 1;
            }
            let len = cum[seg + 1] - cum[seg];
            let t = if len > 0.0 { ((s - cum[seg]) / len).clamp(0.0, 1.0) } else { 0.0 };
            out.push(linalg::lerp(&self.vertices[seg], &self.vertices[seg + 1], t));
        }
        out.push(self.end().to_vec());
        Self::new(field, out)
    }

    /// Projects every interior vertex onto the closed `r`-ball.
    pub fn projected(&self, field: &ScalarField, r: f64) -> Result<Self> {
        let n = self.vertices.len();
        let vertices = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| {
                if i == 0 || i == n - 1 {
                    v.clone()
                } else {
                    linalg::project_to_ball(v, r)
                }
            })
            .collect();
        Self::new(field, vertices)
    }

    /// CSV with columns `t, x1..xn, f`; `t` is the normalized arc length.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let dim = self.vertices[0].len();
        let mut header = vec!["t".to_string()];
        header.extend((1..=dim).map(|i| format!("x{i}")));
        header.push("f".into());
        writeln!(w, "{}", header.join(","))?;
        let total = self.length();
        let mut s = 0.0;
        for (i, (v, f)) in self.vertices.iter().zip(&self.values).enumerate() {
            if i > 0 {
                s += linalg::dist(&self.vertices[i - 1], v);
            }
            let t = if total > 0.0 { s / total } else { 0.0 };
            let mut row = vec![format!("{t:.17e}")];
            row.extend(v.iter().map(|c| format!("{c:.17e}")));
            row.push(format!("{f:.17e}"));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn segment(name: &str) -> (ScalarField, PLPath) {
        let f = ScalarField::corpus(name, 2).unwrap();
        let p = PLPath::straight(&f, &[-1.0, 0.0], &[1.0, 0.0], DEFAULT_VERTICES).unwrap();
        (f, p)
    }

    #[test]
    fn straight_segment_values() {
        for name in ["double_well", "nonsmooth_well"] {
            let (f, p) = segment(name);
            assert!((p.path_value(&f, 64).unwrap() - 1.0).abs() < 1e-3);
            assert_eq!(p.vertices()[32], vec![0.0, 0.0]);
        }
    }

    #[test]
    fn refinement_is_monotone() {
        let f = ScalarField::corpus("broughton", 2).unwrap();
        let p = PLPath::straight(&f, &[-1.0, 0.0], &[1.0, -2.0], 7).unwrap();
        let mut last = f64::NEG_INFINITY;
        for refine in [1, 2, 4, 8, 16, 32] {
            let v = p.path_value(&f, refine).unwrap();
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn membership_examples() {
        let (f, p) = segment("double_well");
        assert!(p.membership(&f, 2.0, 0.1, 1.0).unwrap());
        assert!(!p.membership(&f, 0.5, 0.1, 1.0).unwrap());
        assert!(!p.membership(&f, 2.0, 1e-6, 1.0).unwrap());
    }

    #[test]
    fn respacing_keeps_endpoints_and_equalizes() {
        let f = ScalarField::corpus("double_well", 2).unwrap();
        let p = PLPath::new(
            &f,
            vec![vec![-1.0, 0.0], vec![-0.9, 0.0], vec![-0.8, 0.5], vec![1.0, 0.0]],
        )
        .unwrap();
        let q = p.respaced(&f, 21).unwrap();
        assert_eq!(q.start(), p.start());
        assert_eq!(q.end(), p.end());
        let gaps: Vec<f64> = q.vertices().windows(2).map(|w| linalg::dist(&w[0], &w[1])).collect();
        let (lo, hi) = gaps.iter().fold((f64::INFINITY, 0.0f64), |a, &g| (a.0.min(g), a.1.max(g)));
        // Chords across corners are shorter than the arc they replace.
        assert!(hi - lo < 0.05, "{lo} {hi}");
        for (v, y) in q.vertices().iter().zip(q.values()) {
            assert_eq!(f.eval(v).unwrap(), *y);
        }
    }

    #[test]
    fn projection_fixes_endpoints() {
        let f = ScalarField::corpus("broughton", 2).unwrap();
        let p = PLPath::new(&f, vec![vec![-1.0, 0.0], vec![0.0, -5.0], vec![1.0, -2.0]]).unwrap();
        let q = p.projected(&f, 3.0).unwrap();
        assert!((q.max_norm() - 3.0).abs() < 1e-12);
        assert_eq!(q.end(), &[1.0, -2.0]);
    }

    #[test]
    fn endpoints_cannot_move() {
        let (f, p) = segment("double_well");
        let mut v = p.vertices().to_vec();
        v[0] = vec![-1.5, 0.0];
        assert!(p.with_vertices(&f, v).is_err());
    }
}
