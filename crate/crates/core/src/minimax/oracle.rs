use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::par;

use super::problem::MountainPassProblem;

/// Largest lattice resolution per axis accepted by the oracle.
pub const MAX_RESOLUTION: usize = 201;

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on the bottleneck value; index as a deterministic tiebreak.
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Mountain-pass value of `problem` on a lattice over the box `[lo, hi]`.
pub fn grid_bottleneck_oracle(problem: &MountainPassProblem, lo: &[f64], hi: &[f64], resolution: usize) -> Result<f64> {
    bottleneck_on_grid(&problem.field, &problem.x_star, &problem.y_star, lo, hi, resolution)
}

/// Minimum over lattice paths from `a` to `b` of the largest node value.
///
/// The lattice has `resolution` nodes per axis with axis and diagonal moves
/// (8 neighbours in 2-D, 26 in 3-D). The endpoints snap to their nearest
/// nodes, which carry `f(a)` and `f(b)`.
pub fn bottleneck_on_grid(
    field: &ScalarField,
    a: &[f64],
    b: &[f64],
    lo: &[f64],
    hi: &[f64],
    resolution: usize,
) -> Result<f64> {
    let dim = field.dim();
    if !(dim == 2 || dim == 3) {
        return Err(Error::InvalidArgument(format!("grid oracle supports dimension 2 or 3, got {dim}")));
    }
    if !(2..=MAX_RESOLUTION).contains(&resolution) {
        return Err(Error::InvalidArgument(format!(
            "grid resolution must be in 2..={MAX_RESOLUTION}, got {resolution}"
        )));
    }
    for (name, len) in [("a", a.len()), ("b", b.len()), ("lo", lo.len()), ("hi", hi.len())] {
        if len != dim {
            return Err(Error::InvalidArgument(format!("{name} has dimension {len}, expected {dim}")));
        }
    }
    for p in [a, b] {
        if p.iter().zip(lo.iter().zip(hi)).any(|(x, (l, h))| x < l || x > h) {
            return Err(Error::InvalidArgument(format!("endpoint {p:?} outside the oracle box")));
        }
    }

    let n = resolution;
    let total = n.pow(dim as u32);
    let step: Vec<f64> = (0..dim).map(|i| (hi[i] - lo[i]) / (n - 1) as f64).collect();
    let coords = |mut idx: usize| -> Vec<f64> {
        let mut x = vec![0.0; dim];
        for i in 0..dim {
            x[i] = lo[i] + (idx % n) as f64 * step[i];
            idx /= n;
        }
        x
    };
    let nearest = |p: &[f64]| -> usize {
        let mut idx = 0;
        let mut mul = 1;
        for i in 0..dim {
            let k = ((p[i] - lo[i]) / step[i]).round().clamp(0.0, (n - 1) as f64) as usize;
            idx += k * mul;
            mul *= n;
        }
        idx
    };

    let nodes: Vec<usize> = (0..total).collect();
    let mut weight = par::map_indexed(&nodes, |_, &i| field.eval(&coords(i)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let (sa, sb) = (nearest(a), nearest(b));
    weight[sa] = field.eval(a)?;
    weight[sb] = field.eval(b)?;

    let offsets: Vec<Vec<i64>> = {
        let mut out = vec![vec![]];
        for _ in 0..dim {
            out = out
                .into_iter()
                .flat_map(|o| {
                    [-1i64, 0, 1].into_iter().map(move |d| {
                        let mut o = o.clone();
                        o.push(d);
                        o
                    })
                })
                .collect();
        }
        out.retain(|o| o.iter().any(|&d| d != 0));
        out
    };

    let mut best = vec![f64::INFINITY; total];
    let mut done = vec![false; total];
    let mut heap = BinaryHeap::new();
    best[sa] = weight[sa];
    heap.push(Entry(weight[sa], sa));
    let mut digits = vec![0usize; dim];
    while let Some(Entry(v, u)) = heap.pop() {
        if done[u] {
            continue;
        }
        if u == sb {
            return Ok(v);
        }
        done[u] = true;
        let mut rem = u;
        for d in digits.iter_mut() {
            *d = rem % n;
            rem /= n;
        }
        'nb: for o in &offsets {
            let mut idx = 0;
            let mut mul = 1;
            for i in 0..dim {
                let k = digits[i] as i64 + o[i];
                if k < 0 || k >= n as i64 {
                    continue 'nb;
                }
                idx += k as usize * mul;
                mul *= n;
            }
            if done[idx] {
                continue;
            }
            let cand = v.max(weight[idx]);
            if cand < best[idx] {
                best[idx] = cand;
                heap.push(Entry(cand, idx));
            }
        }
    }
    Err(Error::InvalidArgument("oracle lattice is disconnected".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(f: &ScalarField, res: usize) -> f64 {
        bottleneck_on_grid(f, &[-1.0, 0.0], &[1.0, 0.0], &[-2.0, -2.0], &[2.0, 2.0], res).unwrap()
    }

    #[test]
    fn wells_have_unit_pass() {
        for name in ["double_well", "nonsmooth_well"] {
            let f = ScalarField::corpus(name, 2).unwrap();
            let c101 = square(&f, 101);
            let c51 = square(&f, 51);
            assert!((c101 - 1.0).abs() <= 2e-2, "{name}: {c101}");
            assert!((c101 - c51).abs() <= 5e-2);
        }
    }

    #[test]
    fn convex_bowl_returns_endpoint_max() {
        let f = ScalarField::corpus("squared_norm", 2).unwrap();
        let c = bottleneck_on_grid(&f, &[0.0, 0.0], &[1.0, 0.0], &[-2.0, -2.0], &[2.0, 2.0], 101).unwrap();
        assert_eq!(c, 1.0);
    }

    #[test]
    fn three_dimensional_lattice() {
        let f = ScalarField::corpus("double_well", 3).unwrap();
        let c = bottleneck_on_grid(&f, &[-1.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[-2.0; 3], &[2.0; 3], 41).unwrap();
        assert!((c - 1.0).abs() <= 2e-2, "{c}");
    }

    #[test]
    fn rejects_points_outside_box() {
        let f = ScalarField::corpus("double_well", 2).unwrap();
        assert!(bottleneck_on_grid(&f, &[-3.0, 0.0], &[1.0, 0.0], &[-2.0, -2.0], &[2.0, 2.0], 11).is_err());
    }
}
