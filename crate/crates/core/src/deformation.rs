//! Cutoff pseudo-gradient field and the descent flow that deforms paths.
//!
//! The field is `phi(x) v(x)`. Here `v` is the pseudo-gradient built from a
//! sampled hull at `x`. `phi` is a smoothstep in the distance to the high set:
//! it equals 1 within `r1` and 0 beyond `r2`. Integrating `-phi v` for a time
//! `h <= min(b / (2 K K'), h0)` lowers `f` by at least `b h / 2` on the core.

use std::io::Write;

use serde::Serialize;

use crate::clarke::{self, GradientHull, H0Calibration, HullParams, PseudoGradient};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linalg::{self, norm};
use crate::par;
use crate::rng;

/// Euler substeps per [`flow`] call.
pub const FLOW_SUBSTEPS: usize = 32;
/// Probes used by the `h0` calibration.
pub const H0_PROBES: usize = 100;
/// Sampled pairs for the direction-field Lipschitz estimate.
pub const DIRECTION_PAIRS: usize = 48;
/// Inflation of the sampled direction-field Lipschitz quotient.
pub const DIRECTION_INFLATION: f64 = 1.5;

/// Smoothstep cutoff `1 - 3u^2 + 2u^3` with `u = (d - r1) / (r2 - r1)`.
pub fn cutoff(d: f64, r1: f64, r2: f64) -> f64 {
    if d <= r1 {
        1.0
    } else if d >= r2 {
        0.0
    } else {
        let u = (d - r1) / (r2 - r1);
        1.0 - u * u * (3.0 - 2.0 * u)
    }
}

/// Lipschitz constant of [`cutoff`] as a function of `d`.
pub fn cutoff_lipschitz(r1: f64, r2: f64) -> f64 {
    1.5 / (r2 - r1)
}

/// Construction parameters for [`build_descent_field`].
#[derive(Debug, Clone, Serialize)]
pub struct DescentParams {
    pub hull: HullParams,
    /// Defaults to twice the hull radius.
    pub cutoff_inner: Option<f64>,
    /// Defaults to three times `cutoff_inner`.
    pub cutoff_outer: Option<f64>,
    pub x_star: Vec<f64>,
    pub y_star: Vec<f64>,
    pub h0_probes: usize,
    pub direction_pairs: usize,
    pub k_prime_pairs: usize,
}

impl DescentParams {
    pub fn new(hull: HullParams, x_star: Vec<f64>, y_star: Vec<f64>) -> Self {
        Self {
            hull,
            cutoff_inner: None,
            cutoff_outer: None,
            x_star,
            y_star,
            h0_probes: H0_PROBES,
            direction_pairs: DIRECTION_PAIRS,
            k_prime_pairs: crate::field::LIPSCHITZ_PAIRS,
        }
    }

    pub fn radii(&self) -> (f64, f64) {
        let r1 = self.cutoff_inner.unwrap_or(2.0 * self.hull.radius);
        let r2 = self.cutoff_outer.unwrap_or(3.0 * r1);
        (r1, r2)
    }
}

/// The cutoff field `phi v` over a finite cover of the high set.
#[derive(Debug, Clone, Serialize)]
pub struct DescentField {
    pub region_centers: Vec<Vec<f64>>,
    pub region_radius: f64,
    pub b: f64,
    pub cutoff_inner: f64,
    pub cutoff_outer: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "K_prime")]
    pub k_prime: f64,
    pub h0: H0Calibration,
    pub excluded: [Vec<f64>; 2],
    pub hull: HullParams,
}

/// One evaluation of the field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub value: Vec<f64>,
    pub phi: f64,
    /// Set when `phi > 0` but the pseudo-gradient failed.
    pub near_critical: Option<f64>,
}

/// Builds the cutoff field over `high_set`.
///
/// Every center must carry a sampled min-norm of at least `2b`. Centers
/// closer than `r2` to an endpoint are rejected.
pub fn build_descent_field(
    field: &ScalarField,
    high_set: &[Vec<f64>],
    b: f64,
    params: &DescentParams,
) -> Result<DescentField> {
    if !(b > 0.0) {
        return Err(Error::InvalidArgument("b must be positive".into()));
    }
    let (r1, r2) = params.radii();
    if !(r1 > 0.0 && r1 < r2) {
        return Err(Error::InvalidArgument(format!(
            "cutoff radii must satisfy 0 < r1 < r2, got r1 = {r1}, r2 = {r2}"
        )));
    }
    for c in high_set {
        for e in [&params.x_star, &params.y_star] {
            let d = linalg::dist(c, e);
            if d <= r2 {
                return Err(Error::EndpointExclusion {
                    center: c.clone(),
                    endpoint: e.clone(),
                    radius: r2,
                });
            }
        }
    }
    let mut df = DescentField {
        region_centers: high_set.to_vec(),
        region_radius: r2,
        b,
        cutoff_inner: r1,
        cutoff_outer: r2,
        k: 0.0,
        k_prime: 0.0,
        h0: H0Calibration {
            h0: clarke::H0_START,
            halvings: 0,
            violations: 0,
            probes: 0,
        },
        excluded: [params.x_star.clone(), params.y_star.clone()],
        hull: params.hull,
    };
    if high_set.is_empty() {
        return Ok(df);
    }

    let hulls: Vec<GradientHull> = par::map_indexed(high_set, |_, c| clarke::sample_hull(field, c, &params.hull))
        .into_iter()
        .collect::<Result<_>>()?;
    for (c, h) in high_set.iter().zip(&hulls) {
        let m = norm(h.min_norm());
        if m < 2.0 * b {
            return Err(Error::InvalidArgument(format!(
                "high-set point {c:?} has sampled min-norm {m} < 2b = {}",
                2.0 * b
            )));
        }
    }

    // K': subgradient bound over the region, sampled by pairs inside the
    // same enlarged ball.
    let reach = r2 + params.hull.radius;
    let sampled = region_lipschitz(field, high_set, reach, params.k_prime_pairs, params.hull.seed)?;
    let hull_max = hulls.iter().map(|h| h.max_generator_norm()).fold(0.0, f64::max);
    df.k_prime = sampled.max(hull_max);

    df.k = cutoff_lipschitz(r1, r2) + direction_lipschitz(field, &df, params.direction_pairs)?;
    df.h0 = clarke::calibrate_h0(field, high_set, &hulls, b / 4.0, params.h0_probes, params.hull.seed)?;
    Ok(df)
}

/// Largest difference quotient of `f` over pairs drawn in a common ball
/// `B(c, reach)`, inflated like [`ScalarField::lipschitz_bound_on`].
fn region_lipschitz(field: &ScalarField, centers: &[Vec<f64>], reach: f64, pairs: usize, seed: u64) -> Result<f64> {
    let dim = field.dim();
    let mut r = rng::stream(seed, 0x4B_9121);
    let mut best: f64 = 0.0;
    for _ in 0..pairs {
        let c = &centers[rand::Rng::random_range(&mut r, 0..centers.len())];
        let a = linalg::add(c, &rng::in_ball(&mut r, dim, reach));
        let b = linalg::add(c, &rng::in_ball(&mut r, dim, reach));
        let d = linalg::dist(&a, &b);
        if d <= f64::EPSILON {
            continue;
        }
        best = best.max((field.eval(&a)? - field.eval(&b)?).abs() / d);
    }
    Ok(crate::field::LIPSCHITZ_INFLATION * best)
}

/// Sampled Lipschitz quotient of the unit pseudo-gradient direction over the
/// support, inflated by [`DIRECTION_INFLATION`].
fn direction_lipschitz(field: &ScalarField, df: &DescentField, pairs: usize) -> Result<f64> {
    let dim = field.dim();
    let mut r = rng::stream(df.hull.seed, 0xD1_4EC7);
    let mut probes = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let i = rand::Rng::random_range(&mut r, 0..df.region_centers.len());
        let a = linalg::add(&df.region_centers[i], &rng::in_ball(&mut r, dim, df.cutoff_outer));
        let step = df.cutoff_inner * 0.5 * (0.1 + 0.9 * rand::Rng::random::<f64>(&mut r));
        let b = linalg::axpy(&a, step, &rng::unit_vector(&mut r, dim));
        probes.push((a, b));
    }
    let quotients = par::map_indexed(&probes, |_, (a, b)| -> Result<f64> {
        let va = df.direction(field, a)?;
        let vb = df.direction(field, b)?;
        Ok(match (va, vb) {
            (Some(va), Some(vb)) => linalg::dist(&va, &vb) / linalg::dist(a, b),
            _ => 0.0,
        })
    });
    let mut best: f64 = 0.0;
    for q in quotients {
        best = best.max(q?);
    }
    Ok(DIRECTION_INFLATION * best)
}

impl DescentField {
    /// Largest admissible flow duration `min(b / (2 K K'), h0)`.
    pub fn h_max(&self) -> f64 {
        if self.region_centers.is_empty() || self.k * self.k_prime == 0.0 {
            return self.h0.h0;
        }
        (self.b / (2.0 * self.k * self.k_prime)).min(self.h0.h0)
    }

    pub fn distance_to_centers(&self, x: &[f64]) -> f64 {
        self.region_centers
            .iter()
            .map(|c| linalg::dist(c, x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn phi(&self, x: &[f64]) -> f64 {
        if self.region_centers.is_empty() || self.excluded.iter().any(|e| e.as_slice() == x) {
            return 0.0;
        }
        cutoff(self.distance_to_centers(x), self.cutoff_inner, self.cutoff_outer)
    }

    fn direction(&self, field: &ScalarField, x: &[f64]) -> Result<Option<Vec<f64>>> {
        let hull = clarke::sample_hull(field, x, &self.hull)?;
        Ok(match clarke::pseudo_gradient(&hull, self.b) {
            PseudoGradient::Direction(v) => Some(v),
            PseudoGradient::Fails { .. } => None,
        })
    }

    /// `phi(x) v(x)`, or zero outside the support and at near-critical points.
    pub fn field_at(&self, field: &ScalarField, x: &[f64]) -> Result<FieldSample> {
        let phi = self.phi(x);
        if phi == 0.0 {
            return Ok(FieldSample {
                value: vec![0.0; x.len()],
                phi,
                near_critical: None,
            });
        }
        let hull = clarke::sample_hull(field, x, &self.hull)?;
        Ok(match clarke::pseudo_gradient(&hull, self.b) {
            PseudoGradient::Direction(v) => FieldSample {
                value: linalg::scale(&v, phi),
                phi,
                near_critical: None,
            },
            PseudoGradient::Fails { min_norm } => FieldSample {
                value: vec![0.0; x.len()],
                phi,
                near_critical: Some(min_norm),
            },
        })
    }
}

/// Outcome of one [`flow`] call.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowStepReport {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub h: f64,
    pub f_drop: f64,
    pub in_core: bool,
    /// Substeps where the pseudo-gradient failed inside the support.
    pub near_critical: usize,
}

/// Integrates `x' = -phi(x) v(x)` from `x0` for `duration` by explicit Euler
/// with [`FLOW_SUBSTEPS`] substeps.
pub fn flow(df: &DescentField, field: &ScalarField, x0: &[f64], duration: f64) -> Result<FlowStepReport> {
    let mut trace = None;
    flow_impl(df, field, x0, duration, &mut trace)
}

/// Like [`flow`] but also returns every substep as `(s, x, f(x))`.
pub fn flow_trace(
    df: &DescentField,
    field: &ScalarField,
    x0: &[f64],
    duration: f64,
) -> Result<(FlowStepReport, Vec<(f64, Vec<f64>, f64)>)> {
    let mut trace = Some(Vec::with_capacity(FLOW_SUBSTEPS + 1));
    let report = flow_impl(df, field, x0, duration, &mut trace)?;
    Ok((report, trace.unwrap_or_default()))
}

fn flow_impl(
    df: &DescentField,
    field: &ScalarField,
    x0: &[f64],
    duration: f64,
    trace: &mut Option<Vec<(f64, Vec<f64>, f64)>>,
) -> Result<FlowStepReport> {
    let h_max = df.h_max();
    if !(duration > 0.0) || duration > h_max * (1.0 + 1e-12) {
        return Err(Error::FlowDuration { duration, h_max });
    }
    let f0 = field.eval(x0)?;
    let in_core = df.phi(x0) == 1.0;
    let dt = duration / FLOW_SUBSTEPS as f64;
    let mut x = x0.to_vec();
    let mut near_critical = 0;
    if let Some(t) = trace.as_mut() {
        t.push((0.0, x.clone(), f0));
    }
    for k in 0..FLOW_SUBSTEPS {
        let s = df.field_at(field, &x)?;
        if s.near_critical.is_some() {
            near_critical += 1;
        }
        if s.phi > 0.0 {
            x = linalg::axpy(&x, -dt, &s.value);
        }
        if let Some(t) = trace.as_mut() {
            let fx = field.eval(&x)?;
            t.push(((k + 1) as f64 * dt, x.clone(), fx));
        }
    }
    let f1 = field.eval(&x)?;
    Ok(FlowStepReport {
        start: x0.to_vec(),
        end: x,
        h: duration,
        f_drop: f0 - f1,
        in_core,
        near_critical,
    })
}

/// Writes a flow trace as CSV with columns `s, x1..xn, f`.
pub fn write_trace_csv<W: Write>(mut w: W, trace: &[(f64, Vec<f64>, f64)]) -> std::io::Result<()> {
    let dim = trace.first().map_or(0, |t| t.1.len());
    let mut header = vec!["s".to_string()];
    header.extend((1..=dim).map(|i| format!("x{i}")));
    header.push("f".into());
    writeln!(w, "{}", header.join(","))?;
    for (s, x, f) in trace {
        let mut row = vec![format!("{s:.17e}")];
        row.extend(x.iter().map(|v| format!("{v:.17e}")));
        row.push(format!("{f:.17e}"));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn double_well() -> ScalarField {
        ScalarField::corpus("double_well", 2).unwrap()
    }

    fn params() -> DescentParams {
        let mut p = DescentParams::new(HullParams::new(0.05, 16, 11), vec![-1.0, 0.0], vec![1.0, 0.0]);
        p.cutoff_inner = Some(0.1);
        p.cutoff_outer = Some(0.3);
        p
    }

    #[test]
    fn cutoff_endpoints_and_midpoint() {
        assert_eq!(cutoff(0.0, 0.1, 0.3), 1.0);
        assert_eq!(cutoff(0.1, 0.1, 0.3), 1.0);
        assert_eq!(cutoff(0.3, 0.1, 0.3), 0.0);
        assert_eq!(cutoff(0.5, 0.1, 0.3), 0.0);
        assert!((cutoff(0.2, 0.1, 0.3) - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn cutoff_lipschitz_bound_holds() {
        let l = cutoff_lipschitz(0.1, 0.3);
        let n = 10_000;
        for i in 0..n {
            let a = 0.1 + 0.2 * i as f64 / n as f64;
            let b = a + 0.2 / n as f64;
            assert!((cutoff(a, 0.1, 0.3) - cutoff(b, 0.1, 0.3)).abs() <= l * (b - a) * (1.0 + 1e-9));
        }
    }

    #[test]
    fn phi_at_center_and_outside() {
        let f = double_well();
        // The center itself has zero gradient, so use a regular point.
        let df = build_descent_field(&f, &[vec![0.0, 0.2]], 0.05, &params()).unwrap();
        assert_eq!(df.phi(&[0.0, 0.2]), 1.0);
        assert_eq!(df.phi(&[0.5, 0.2]), 0.0);
        assert!((df.phi(&[0.0, 0.4]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_cover_is_zero_field() {
        let f = double_well();
        let df = build_descent_field(&f, &[], 0.05, &params()).unwrap();
        let s = df.field_at(&f, &[0.0, 0.1]).unwrap();
        assert_eq!(s.value, vec![0.0, 0.0]);
        let r = flow(&df, &f, &[0.0, 0.1], df.h_max()).unwrap();
        assert_eq!(r.end, vec![0.0, 0.1]);
        assert_eq!(r.f_drop, 0.0);
    }

    #[test]
    fn endpoint_exclusion_is_enforced() {
        let f = double_well();
        let err = build_descent_field(&f, &[vec![-0.9, 0.0]], 0.01, &params()).unwrap_err();
        assert!(matches!(err, Error::EndpointExclusion { .. }));
    }

    #[test]
    fn field_inside_support_is_a_pseudo_gradient() {
        let f = double_well();
        let df = build_descent_field(&f, &[vec![0.0, 0.2]], 0.05, &params()).unwrap();
        let s = df.field_at(&f, &[0.0, 0.2]).unwrap();
        assert!((norm(&s.value) - 0.75).abs() < 1e-12);
        assert!(linalg::dot(&[0.0, 0.4], &s.value) > 0.05);
        let s = df.field_at(&f, &[-1.0, 0.0]).unwrap();
        assert_eq!(s.value, vec![0.0, 0.0]);
    }

    #[test]
    fn core_flow_descends_at_rate() {
        let f = double_well();
        let df = build_descent_field(&f, &[vec![0.0, 0.2]], 0.05, &params()).unwrap();
        let h = df.h_max();
        let r = flow(&df, &f, &[0.0, 0.2], h).unwrap();
        assert!(r.in_core);
        assert!(r.f_drop > df.b * h / 2.0, "{} vs {}", r.f_drop, df.b * h / 2.0);
        assert!(linalg::dist(&r.end, &r.start) <= h);
    }

    #[test]
    fn duration_above_h_max_is_rejected() {
        let f = double_well();
        let df = build_descent_field(&f, &[vec![0.0, 0.2]], 0.05, &params()).unwrap();
        assert!(matches!(
            flow(&df, &f, &[0.0, 0.2], 2.0 * df.h_max()),
            Err(Error::FlowDuration { .. })
        ));
    }

    #[test]
    fn trace_csv_has_header_and_rows() {
        let f = double_well();
        let df = build_descent_field(&f, &[vec![0.0, 0.2]], 0.05, &params()).unwrap();
        let (_, trace) = flow_trace(&df, &f, &[0.0, 0.2], df.h_max()).unwrap();
        let mut out = Vec::new();
        write_trace_csv(&mut out, &trace).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("s,x1,x2,f\n"));
        assert_eq!(text.lines().count(), FLOW_SUBSTEPS + 2);
    }
}
