//! The corpus benchmark: reference instances, the acceptance criteria and
//! the scoreboard they produce.

use std::fmt::Write as _;
use std::time::Instant;

use anyhow::Result;
use rand::Rng;

use mountain_pass::clarke::{self, GradientHull, HullParams, PseudoGradient};
use mountain_pass::classifier::{Classification, Tolerances, Verdict};
use mountain_pass::deformation::{self, DescentParams};
use mountain_pass::field::CorpusMember;
use mountain_pass::linalg;
use mountain_pass::minimax::{
    estimate_r, geometric_grid, grid_bottleneck_oracle, Barrier, MinimaxRun, MountainPassProblem, REstimate,
    RoundSettings,
};
use mountain_pass::rng;
use mountain_pass::solve::{initial_path, solve, SolveSettings};
use mountain_pass::sweep::{cluster_limits, sweep, ClusterReport, SweepMethod};
use mountain_pass::ScalarField;

/// Radii used by every sweep in the suite.
pub const SWEEP_RADII: [f64; 4] = [10.0, 20.0, 40.0, 80.0];
/// Interior waypoint that starts the escaping instance on the far side of
/// the valley.
pub const ESCAPING_VIA: [f64; 2] = [0.05, -10.0];
pub const ORACLE_RESOLUTION: usize = 101;

/// `x* = (-1, 0)`, `y* = (1, 0)` and the ball of radius 1/2 about `x*`.
pub fn well_problem(name: &str, seed: u64) -> Result<MountainPassProblem> {
    let field = ScalarField::corpus(name, 2)?;
    let barrier = Barrier::Ball {
        center: vec![-1.0, 0.0],
        radius: 0.5,
    };
    Ok(MountainPassProblem::new(field, vec![-1.0, 0.0], vec![1.0, 0.0], barrier, seed)?)
}

/// `x1 + x1^2 x2` with `x* = (-1, 0)`, `y* = (1, -2)` and the half-plane
/// `x1 < 0`. Both endpoints sit below the level 0 attained on `x1 = 0`, and
/// every path keeping its maximum near 0 must run far down the valley.
pub fn escaping_problem(seed: u64) -> Result<MountainPassProblem> {
    let field = ScalarField::corpus("broughton", 2)?;
    let barrier = Barrier::HalfSpace {
        normal: vec![1.0, 0.0],
        offset: 0.0,
    };
    Ok(MountainPassProblem::new(field, vec![-1.0, 0.0], vec![1.0, -2.0], barrier, seed)?)
}

pub fn escaping_settings(seed: u64) -> SolveSettings {
    let mut s = SolveSettings::new(2, seed);
    s.via = vec![ESCAPING_VIA.to_vec()];
    s
}

pub fn oracle(problem: &MountainPassProblem) -> Result<f64> {
    Ok(grid_bottleneck_oracle(problem, &[-2.0, -2.0], &[2.0, 2.0], ORACLE_RESOLUTION)?)
}

/// Planar sweep over [`SWEEP_RADII`] followed by clustering.
pub fn planar_sweep(name: &str, resolution: usize) -> Result<ClusterReport> {
    let field = ScalarField::corpus(name, 2)?;
    let trace = sweep(&field, &SWEEP_RADII, SweepMethod::Circle { resolution })?;
    Ok(cluster_limits(&trace)?)
}

/// Cluster value closest to `c`, if any.
pub fn nearest_cluster(report: &ClusterReport, c: f64) -> Option<f64> {
    report
        .clusters
        .iter()
        .map(|k| k.value)
        .min_by(|a, b| (a - c).abs().total_cmp(&(b - c).abs()))
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Sweep cross_square at the coarsest resolution only.
    pub quick: bool,
}

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    /// Wall time; reported but kept out of the scoreboard file.
    pub seconds: f64,
    pub budget_seconds: Option<f64>,
}

impl CriterionResult {
    pub fn within_budget(&self) -> bool {
        self.budget_seconds.is_none_or(|b| self.seconds < b)
    }

    pub fn ok(&self) -> bool {
        self.passed && self.within_budget()
    }

    /// `criterion N [PASS|FAIL] name: detail (time)`.
    pub fn line(&self) -> String {
        let status = if self.ok() { "PASS" } else { "FAIL" };
        let budget = match self.budget_seconds {
            Some(b) => format!("{:.2} s of {b} s", self.seconds),
            None => format!("{:.2} s", self.seconds),
        };
        format!("criterion {} [{status}] {}: {} ({budget})", self.id, self.name, self.detail)
    }
}

/// One scoreboard row for a solved or swept instance.
#[derive(Debug, Clone)]
pub struct InstanceRow {
    pub item: String,
    pub c: Option<f64>,
    pub verdict: String,
    pub oracle: Option<f64>,
}

impl InstanceRow {
    pub fn gap(&self) -> Option<f64> {
        Some(self.c? - self.oracle?)
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub instances: Vec<InstanceRow>,
    pub criteria: Vec<CriterionResult>,
}

fn num(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.9e}"))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl SuiteOutcome {
    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(CriterionResult::ok)
    }

    /// Columns `item, c, verdict, oracle, gap, passed, detail`. Timings are
    /// left out so the file is reproducible byte for byte.
    pub fn scoreboard_csv(&self) -> String {
        let mut out = String::from("item,c,verdict,oracle,gap,passed,detail\n");
        for r in &self.instances {
            let _ = writeln!(
                out,
                "{},{},{},{},{},,",
                csv_field(&r.item),
                num(r.c),
                csv_field(&r.verdict),
                num(r.oracle),
                num(r.gap())
            );
        }
        for c in &self.criteria {
            let _ = writeln!(
                out,
                "criterion {} {},,,,,{},{}",
                c.id,
                c.name,
                c.passed,
                csv_field(&c.detail)
            );
        }
        out
    }

    pub fn scoreboard_markdown(&self) -> String {
        let mut out = String::from("| instance | c | verdict | oracle | gap |\n|---|---|---|---|---|\n");
        for r in &self.instances {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} |",
                r.item,
                num(r.c),
                r.verdict,
                num(r.oracle),
                num(r.gap())
            );
        }
        out.push_str("\n| # | criterion | result | time (s) | detail |\n|---|---|---|---|---|\n");
        for c in &self.criteria {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {:.2} | {} |",
                c.id,
                c.name,
                if c.ok() { "pass" } else { "FAIL" },
                c.seconds,
                c.detail
            );
        }
        out
    }
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Critical => "Critical",
        Verdict::TangencyAtInfinity => "TangencyAtInfinity",
        Verdict::Inconclusive => "Inconclusive",
    }
}

struct WellRun {
    name: &'static str,
    run: MinimaxRun,
    class: Classification,
    oracle: f64,
    seconds: f64,
}

fn run_well(name: &'static str, seed: u64) -> Result<WellRun> {
    let t = Instant::now();
    let problem = well_problem(name, seed)?;
    let oracle = oracle(&problem)?;
    let settings = SolveSettings::new(2, seed);
    let tol = Tolerances::new(settings.round.hull);
    let (run, class) = solve(problem, &settings, &tol)?;
    Ok(WellRun {
        name,
        run,
        class,
        oracle,
        seconds: t.elapsed().as_secs_f64(),
    })
}

fn criterion_1(wells: &[WellRun]) -> CriterionResult {
    let mut passed = true;
    let mut parts = Vec::new();
    for w in wells {
        let gap = w.run.c_best - w.oracle;
        passed &= gap.abs() <= 5e-2;
        parts.push(format!("{} c_best {:.6} oracle {:.6} gap {:.2e}", w.name, w.run.c_best, w.oracle, gap));
    }
    CriterionResult {
        id: 1,
        name: "oracle equivalence of c",
        passed,
        detail: parts.join("; "),
        seconds: wells.iter().map(|w| w.seconds).fold(0.0, f64::max),
        budget_seconds: Some(60.0),
    }
}

fn criterion_2(wells: &[WellRun]) -> CriterionResult {
    let mut passed = true;
    let mut parts = Vec::new();
    for w in wells {
        let v = w.class.verdict;
        match &w.class.critical_witness {
            Some(cw) if v == Verdict::Critical => {
                let d = linalg::norm(&cw.x);
                passed &= d <= 5e-2 && cw.residual <= 1e-3;
                parts.push(format!("{} Critical at distance {d:.2e} residual {:.2e}", w.name, cw.residual));
            }
            _ => {
                passed = false;
                parts.push(format!("{} {}", w.name, verdict_name(v)));
            }
        }
    }
    CriterionResult {
        id: 2,
        name: "critical branch",
        passed,
        detail: parts.join("; "),
        seconds: wells.iter().map(|w| w.seconds).fold(0.0, f64::max),
        budget_seconds: Some(60.0),
    }
}

struct EscapingRun {
    class: Classification,
    c_best: f64,
    cluster: Option<f64>,
    seconds: f64,
}

fn run_escaping(seed: u64) -> Result<EscapingRun> {
    let t = Instant::now();
    let problem = escaping_problem(seed)?;
    let settings = escaping_settings(seed);
    let tol = Tolerances::new(settings.round.hull);
    let (run, class) = solve(problem, &settings, &tol)?;
    let report = planar_sweep("broughton", 1440)?;
    Ok(EscapingRun {
        cluster: nearest_cluster(&report, run.c_best),
        c_best: run.c_best,
        class,
        seconds: t.elapsed().as_secs_f64(),
    })
}

fn criterion_3(e: &EscapingRun) -> CriterionResult {
    let trace = e.class.tangency_trace.as_deref().unwrap_or(&[]);
    let mut passed = e.class.verdict == Verdict::TangencyAtInfinity && !trace.is_empty() && e.cluster.is_some();
    let value = e.cluster.unwrap_or(f64::NAN);
    let mut worst_gap: f64 = 0.0;
    let mut worst_res: f64 = 0.0;
    for entry in trace {
        worst_gap = worst_gap.max((entry.f - value).abs());
        match entry.residual.value() {
            Some(r) => worst_res = worst_res.max(r),
            None => passed = false,
        }
    }
    passed &= worst_gap <= 0.1 && worst_res <= 0.05;
    CriterionResult {
        id: 3,
        name: "tangency branch",
        passed,
        detail: format!(
            "broughton {} with {} trace entries; sweep cluster {value:.3e}; max |f - cluster| {worst_gap:.3e}; max residual {worst_res:.3e}",
            verdict_name(e.class.verdict),
            trace.len()
        ),
        seconds: e.seconds,
        budget_seconds: Some(120.0),
    }
}

fn criterion_4(opts: &SuiteOptions, rows: &mut Vec<InstanceRow>) -> Result<CriterionResult> {
    let t = Instant::now();
    let resolutions: &[usize] = if opts.quick { &[720] } else { &[720, 1440, 2880] };
    let mut passed = true;
    let mut parts = Vec::new();
    for &res in resolutions {
        let report = planar_sweep("cross_square", res)?;
        let ok = report.clusters.len() == 1
            && report.clusters[0].value.abs() <= 1e-6
            && report.clusters[0].branch_count == 4;
        passed &= ok;
        let summary: Vec<String> = report
            .clusters
            .iter()
            .map(|c| format!("{:.1e} x{}", c.value, c.branch_count))
            .collect();
        parts.push(format!("cross_square@{res} [{}]", summary.join(" ")));
        rows.push(InstanceRow {
            item: format!("sweep cross_square @{res}"),
            c: report.clusters.first().map(|c| c.value),
            verdict: format!("{} cluster(s), {} branch(es)", report.clusters.len(), report.clusters.first().map_or(0, |c| c.branch_count)),
            oracle: Some(0.0),
        });
    }
    let report = planar_sweep("linear", 1440)?;
    passed &= report.clusters.is_empty();
    parts.push(format!("linear {} cluster(s)", report.clusters.len()));
    rows.push(InstanceRow {
        item: "sweep linear @1440".into(),
        c: None,
        verdict: format!("{} cluster(s)", report.clusters.len()),
        oracle: None,
    });
    Ok(CriterionResult {
        id: 4,
        name: "sweep ground truth",
        passed,
        detail: parts.join("; "),
        seconds: t.elapsed().as_secs_f64(),
        budget_seconds: Some(30.0),
    })
}

/// A random hull whose minimum-norm element is nonzero, with `b` drawn in
/// `(0, |m| / 2]`.
fn random_hull_and_b(r: &mut rng::StreamRng) -> (GradientHull, f64) {
    loop {
        let dim = r.random_range(2..=6);
        let count = r.random_range(1..=24);
        let offset = linalg::scale(&rng::unit_vector(r, dim), r.random_range(0.5..3.0));
        let spread = r.random_range(0.0..1.5) * linalg::norm(&offset);
        let generators: Vec<Vec<f64>> = (0..count)
            .map(|_| linalg::add(&offset, &rng::in_ball(r, dim, spread)))
            .collect();
        let hull = GradientHull::from_generators(vec![0.0; dim], generators, 0.0);
        let m = linalg::norm(hull.min_norm());
        if m > 1e-6 {
            let b = 0.5 * m * r.random_range(0.05..=1.0);
            return (hull, b);
        }
    }
}

fn criterion_5(opts: &SuiteOptions) -> CriterionResult {
    let t = Instant::now();
    let trials = 1000;
    let mut r = rng::stream(opts.seed, 0xC5);
    let mut violations = 0;
    let mut worst_margin = f64::INFINITY;
    let mut max_norm: f64 = 0.0;
    for _ in 0..trials {
        let (hull, b) = random_hull_and_b(&mut r);
        match clarke::pseudo_gradient(&hull, b) {
            PseudoGradient::Direction(v) => {
                let n = linalg::norm(&v);
                let low = hull
                    .generators
                    .iter()
                    .map(|w| linalg::dot(w, &v))
                    .fold(f64::INFINITY, f64::min);
                if !(n < 1.0 && low > b) {
                    violations += 1;
                }
                worst_margin = worst_margin.min(low / b);
                max_norm = max_norm.max(n);
            }
            PseudoGradient::Fails { .. } => violations += 1,
        }
    }
    CriterionResult {
        id: 5,
        name: "pseudo-gradient contract",
        passed: violations == 0,
        detail: format!(
            "{trials} hulls, {violations} violations; max |v| {max_norm:.6}; min over hulls of min<w,v>/b {worst_margin:.6}"
        ),
        seconds: t.elapsed().as_secs_f64(),
        budget_seconds: None,
    }
}

/// Centers of the descent field used by the flow checks.
pub const DESCENT_CENTERS: [[f64; 2]; 3] = [[-0.3, 0.55], [0.0, 0.6], [0.3, 0.55]];
pub const DESCENT_B: f64 = 0.25;

fn criterion_6(opts: &SuiteOptions) -> Result<CriterionResult> {
    let t = Instant::now();
    let field = ScalarField::corpus("double_well", 2)?;
    let centers: Vec<Vec<f64>> = DESCENT_CENTERS.iter().map(|c| c.to_vec()).collect();
    let params = DescentParams::new(
        HullParams::new(0.05, 16, rng::derive_seed(opts.seed, 0xC6)),
        vec![-1.0, 0.0],
        vec![1.0, 0.0],
    );
    let df = deformation::build_descent_field(&field, &centers, DESCENT_B, &params)?;
    let h = df.h_max();
    let mut r = rng::stream(opts.seed, 0xC6_01);
    let core_starts: Vec<Vec<f64>> = (0..200)
        .map(|_| {
            let c = &centers[r.random_range(0..centers.len())];
            linalg::add(c, &rng::in_ball(&mut r, 2, df.cutoff_inner - h))
        })
        .collect();
    let any_starts: Vec<Vec<f64>> = (0..200).map(|_| rng::in_box(&mut r, &[-2.0, -2.0], &[2.0, 2.0])).collect();

    let bound = df.b * h / 2.0 - 1e-9;
    let mut core_violations = 0;
    let mut min_core = f64::INFINITY;
    for x in &core_starts {
        let rep = deformation::flow(&df, &field, x, h)?;
        min_core = min_core.min(rep.f_drop);
        if !(rep.in_core && rep.f_drop >= bound) {
            core_violations += 1;
        }
    }
    let mut any_violations = 0;
    let mut min_any = f64::INFINITY;
    for x in &any_starts {
        let rep = deformation::flow(&df, &field, x, h)?;
        min_any = min_any.min(rep.f_drop);
        if !(rep.f_drop >= -1e-9) {
            any_violations += 1;
        }
    }
    Ok(CriterionResult {
        id: 6,
        name: "descent contract",
        passed: core_violations == 0 && any_violations == 0,
        detail: format!(
            "h {h:.4e}, b h / 2 {:.4e}; core: {core_violations} violations, min drop {min_core:.4e}; arbitrary: {any_violations} violations, min drop {min_any:.4e}",
            df.b * h / 2.0
        ),
        seconds: t.elapsed().as_secs_f64(),
        budget_seconds: None,
    })
}

/// Forward-error bound for `max_w <w, x>` when `x` itself carries one
/// rounding per coordinate: `(d + 2) u sum_i |w_i| |x_i|` with headroom,
/// `u` the unit roundoff.
fn dot_slack(hull: &GradientHull, x: &[f64]) -> f64 {
    let d = x.len() as f64;
    let gamma = 2.0 * (d + 2.0) * f64::EPSILON;
    hull.generators
        .iter()
        .map(|w| w.iter().zip(x).map(|(a, b)| (a * b).abs()).sum::<f64>())
        .fold(0.0, f64::max)
        * gamma
}

fn criterion_7(opts: &SuiteOptions) -> Result<CriterionResult> {
    let t = Instant::now();
    let mut r = rng::stream(opts.seed, 0xC7);
    let tuples = 1000;
    let (mut sub_fail, mut hom_fail, mut exact_hom) = (0, 0, 0);
    for _ in 0..tuples {
        let dim = r.random_range(1..=6);
        let count = r.random_range(1..=20);
        let generators: Vec<Vec<f64>> = (0..count)
            .map(|_| (0..dim).map(|_| r.random_range(-3.0..3.0)).collect())
            .collect();
        let hull = GradientHull::from_generators(vec![0.0; dim], generators, 0.0);
        let v: Vec<f64> = (0..dim).map(|_| r.random_range(-2.0..2.0)).collect();
        let u: Vec<f64> = (0..dim).map(|_| r.random_range(-2.0..2.0)).collect();
        let s: f64 = r.random_range(1e-3..10.0);

        let vu = linalg::add(&v, &u);
        let abs_sum: Vec<f64> = v.iter().zip(&u).map(|(a, b)| a.abs() + b.abs()).collect();
        let lhs = clarke::directional_upper(&hull, &vu);
        let rhs = clarke::directional_upper(&hull, &v) + clarke::directional_upper(&hull, &u);
        if lhs > rhs + 2.0 * dot_slack(&hull, &abs_sum) {
            sub_fail += 1;
        }

        let sv = linalg::scale(&v, s);
        let a = clarke::directional_upper(&hull, &sv);
        let b = s * clarke::directional_upper(&hull, &v);
        if a == b {
            exact_hom += 1;
        }
        if (a - b).abs() > 2.0 * dot_slack(&hull, &sv) {
            hom_fail += 1;
        }
    }

    let mut mono_fail = 0;
    let mut checked = 0;
    let deltas = [1e-2, 1e-3, 1e-4];
    for member in CorpusMember::ALL.into_iter().filter(|m| m.is_smooth()) {
        let field = ScalarField::from_member(member, 2)?;
        for k in 0..20u64 {
            let x = rng::in_box(&mut r, &[-2.0, -2.0], &[2.0, 2.0]);
            let seed = rng::derive_seed(opts.seed, 0xC7_00 + k);
            let mut diam = Vec::new();
            let mut scale: f64 = 0.0;
            for &delta in &deltas {
                let hull = clarke::sample_hull(&field, &x, &HullParams::new(delta, 16, seed))?;
                scale = scale.max(hull.max_generator_norm());
                diam.push(hull.diameter());
            }
            let slack = 64.0 * f64::EPSILON * scale;
            if diam.windows(2).any(|w| w[1] > w[0] + slack) {
                mono_fail += 1;
            }
            checked += 1;
        }
    }
    Ok(CriterionResult {
        id: 7,
        name: "generalized directional derivative",
        passed: sub_fail == 0 && hom_fail == 0 && mono_fail == 0,
        detail: format!(
            "{tuples} tuples: {sub_fail} subadditivity and {hom_fail} homogeneity violations beyond rounding ({exact_hom} bitwise equal); diameter over delta 1e-2,1e-3,1e-4: {mono_fail} of {checked} points not monotone"
        ),
        seconds: t.elapsed().as_secs_f64(),
        budget_seconds: None,
    })
}

fn fmt_r(r: REstimate) -> String {
    match r.finite() {
        Some(v) => format!("{v:.4}"),
        None => "inf".into(),
    }
}

/// Escape radius on each of `eps` against `c_ref`, every search warm
/// started from `warm`.
fn r_profile(
    problem: &MountainPassProblem,
    eps: &[f64],
    c_ref: f64,
    grid: &[f64],
    via: &[Vec<f64>],
    seed: u64,
) -> Result<Vec<REstimate>> {
    let mut settings = RoundSettings::new(HullParams::new(0.05, HullParams::default_count(2), seed));
    settings.budget = 25;
    let warm = initial_path(problem, via, settings.vertices)?;
    eps.iter()
        .enumerate()
        .map(|(j, &e)| {
            let mut s = settings.clone();
            s.hull = s.hull.with_seed(rng::derive_seed(seed, 0x10_0000 + j as u64));
            Ok(estimate_r(problem, e, c_ref, grid, &warm, &s, 8)?.value)
        })
        .collect()
}

fn criterion_8(opts: &SuiteOptions, broughton_cluster: Option<f64>, dw_oracle: f64) -> Result<CriterionResult> {
    let t = Instant::now();
    let eps = [0.5, 0.25, 0.125, 0.0625];
    let ratio = 1.05;

    let problem = escaping_problem(opts.seed)?;
    let c_ref = broughton_cluster.unwrap_or(0.0);
    let grid = geometric_grid(problem.endpoint_norm(), 3.5, ratio);
    let br = r_profile(&problem, &eps, c_ref, &grid, &[ESCAPING_VIA.to_vec()], opts.seed)?;
    // Smaller epsilon must not need a smaller radius, up to one grid step.
    let monotone = br.windows(2).all(|w| match (w[0].finite(), w[1].finite()) {
        (_, None) => true,
        (None, Some(_)) => false,
        (Some(a), Some(b)) => b * ratio >= a,
    });
    let escapes = br.last().is_some_and(|r| r.is_infinite());

    let dw = well_problem("double_well", opts.seed)?;
    let floor = dw.endpoint_norm();
    let grid = geometric_grid(floor, 3.0, ratio);
    let wr = r_profile(&dw, &eps, dw_oracle, &grid, &[], opts.seed)?;
    let constant = wr.iter().all(|r| r.finite() == Some(floor));

    let list = |v: &[REstimate]| v.iter().map(|r| fmt_r(*r)).collect::<Vec<_>>().join(", ");
    Ok(CriterionResult {
        id: 8,
        name: "escape radius monotonicity",
        passed: monotone && escapes && constant,
        detail: format!(
            "eps 0.5..0.0625: broughton R [{}] (cap 3.5), double_well R [{}] (straight bound {floor})",
            list(&br),
            list(&wr)
        ),
        seconds: t.elapsed().as_secs_f64(),
        budget_seconds: Some(120.0),
    })
}

/// Runs criteria 1 to 8 and collects the scoreboard rows.
pub fn run_suite(opts: &SuiteOptions) -> Result<SuiteOutcome> {
    let mut rows = Vec::new();
    let mut wells = Vec::new();
    for name in ["double_well", "nonsmooth_well"] {
        let w = run_well(name, opts.seed)?;
        rows.push(InstanceRow {
            item: format!("solve {name}"),
            c: Some(w.run.c_best),
            verdict: verdict_name(w.class.verdict).into(),
            oracle: Some(w.oracle),
        });
        wells.push(w);
    }
    let esc = run_escaping(opts.seed)?;
    rows.push(InstanceRow {
        item: "solve broughton (escaping)".into(),
        c: Some(esc.c_best),
        verdict: verdict_name(esc.class.verdict).into(),
        oracle: esc.cluster,
    });
    rows.push(InstanceRow {
        item: "sweep broughton @1440".into(),
        c: esc.cluster,
        verdict: "nearest cluster".into(),
        oracle: Some(0.0),
    });

    let mut criteria = vec![criterion_1(&wells), criterion_2(&wells), criterion_3(&esc)];
    criteria.push(criterion_4(opts, &mut rows)?);
    criteria.push(criterion_5(opts));
    criteria.push(criterion_6(opts)?);
    criteria.push(criterion_7(opts)?);
    criteria.push(criterion_8(opts, esc.cluster, wells[0].oracle)?);
    Ok(SuiteOutcome {
        instances: rows,
        criteria,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a, b"), "\"a, b\"");
        assert_eq!(csv_field("say \"hi\", ok"), "\"say \"\"hi\"\", ok\"");
    }

    #[test]
    fn scoreboard_leaves_out_timings() {
        let mk = |seconds| SuiteOutcome {
            instances: vec![InstanceRow {
                item: "solve x".into(),
                c: Some(1.0),
                verdict: "Critical".into(),
                oracle: Some(0.5),
            }],
            criteria: vec![CriterionResult {
                id: 1,
                name: "n",
                passed: true,
                detail: "d".into(),
                seconds,
                budget_seconds: Some(1.0),
            }],
        };
        let (a, b) = (mk(0.1), mk(5.0));
        assert_eq!(a.scoreboard_csv(), b.scoreboard_csv());
        assert!(a.all_passed() && !b.all_passed());
        assert!(a.scoreboard_csv().contains("solve x,1.000000000e0,Critical,5.000000000e-1,5.000000000e-1,,"));
    }
}
