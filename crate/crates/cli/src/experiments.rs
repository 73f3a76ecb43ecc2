//! The experiment registry and the per-experiment checks.

use ebound::diagnostics::{
    analyze, probe, regularity_summary, strict_complementarity, ComplementarityReport, Directions,
    ProbeReport, RegularitySummary,
};
use ebound::instances::{self, Scenario};
use ebound::problem::{DistanceOptions, OptimalityCertificate, ProblemInstance, DEFAULT_CERTIFY_TOL};
use ebound::solver::{estimate_linear_rate, proximal_gradient, RateEstimate, SolveStatus, StopCriteria};
use ebound::space::Element;
use ebound::Error;

use crate::config::{log_spaced, ExperimentConfig, ProbeSpec, SolverSpec};

pub const EXPERIMENTS: &[(&str, &str)] = &[
    ("counterexample", "nuclear-norm instance where the Lipschitz error bound fails (residual quadratic in distance)"),
    ("noncompact", "two-dimensional instance with an unbounded optimal set; ratio d/||R|| blows up along a ray"),
    ("grouped-lasso", "random grouped LASSO (10x20, groups of 4); Lipschitz error bound expected"),
    ("lasso", "random LASSO (10x20); Lipschitz error bound expected"),
    ("strongly-convex", "random L1-regularized least squares with full column rank (20x10); linear convergence"),
    ("nuclear-regular", "nuclear-norm instance with strict complementarity; Lipschitz error bound expected"),
    ("custom", "problem read from the config file"),
];

const SCENARIO_RADII: [f64; 5] = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];
const DEFAULT_DIRECTIONS: usize = 8;
const DEFAULT_SEED: u64 = 1;
const SLOPE_RANGE: (f64, f64) = (0.85, 1.15);
const KAPPA_STABILITY: f64 = 2.0;

#[derive(Debug, Clone, Default)]
pub struct RunArgs {
    pub seed: Option<u64>,
    /// `(left, right)` end points of the noncompact ray's x-range.
    pub x_range: Option<(f64, f64)>,
    pub y: Option<f64>,
    pub config: Option<ExperimentConfig>,
}

#[derive(Debug)]
pub enum RunError {
    /// Bad arguments or configuration (exit code 2).
    Usage(String),
    /// The computation itself failed (exit code 1).
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub expected: String,
    pub observed: String,
}

fn check(name: &str, pass: bool, expected: impl Into<String>, observed: impl Into<String>) -> Check {
    Check { name: name.to_string(), pass, expected: expected.into(), observed: observed.into() }
}

#[derive(Debug, Clone)]
pub struct SolverInfo {
    pub steps: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub rate: Option<RateEstimate>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub experiment: String,
    pub seed: Option<u64>,
    pub report: ProbeReport,
    pub regularity: Option<RegularitySummary>,
    pub complementarity: Option<ComplementarityReport>,
    pub solver: Option<SolverInfo>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn failed(e: Error) -> RunError {
    RunError::Failed(e.to_string())
}

struct Context {
    probe: ProbeSpec,
    solver: SolverSpec,
    seed: u64,
}

impl Context {
    fn radii(&self, default: &[f64]) -> Vec<f64> {
        self.probe.radii.clone().unwrap_or_else(|| default.to_vec())
    }

    fn random(&self) -> Directions {
        Directions::Random { count: self.probe.directions.unwrap_or(DEFAULT_DIRECTIONS), seed: self.seed }
    }
}

pub fn run(name: &str, args: &RunArgs) -> Result<Outcome, RunError> {
    if !EXPERIMENTS.iter().any(|e| e.0 == name) {
        return Err(RunError::Usage(format!("unknown experiment `{name}`; see `ebound list`")));
    }
    if let Some(cfg) = &args.config {
        if cfg.experiment != name {
            return Err(RunError::Usage(format!(
                "config describes experiment `{}` but `{name}` was requested",
                cfg.experiment
            )));
        }
    }
    if name != "noncompact" && (args.x_range.is_some() || args.y.is_some()) {
        return Err(RunError::Usage("--x-range and --y only apply to the noncompact experiment".into()));
    }
    let probe_spec = args.config.as_ref().map(|c| c.probe.clone()).unwrap_or_default();
    let ctx = Context {
        seed: args.seed.or(probe_spec.seed).unwrap_or(DEFAULT_SEED),
        probe: probe_spec,
        solver: args.config.as_ref().map(|c| c.solver).unwrap_or_default(),
    };
    let mut outcome = match name {
        "counterexample" => counterexample(&ctx),
        "noncompact" => noncompact(&ctx, args),
        "grouped-lasso" => scenario(&ctx, Scenario::GroupedLasso),
        "lasso" => scenario(&ctx, Scenario::Lasso),
        "strongly-convex" => scenario(&ctx, Scenario::StronglyConvex),
        "nuclear-regular" => nuclear_regular(&ctx),
        "custom" => custom(&ctx, args.config.as_ref()),
        _ => unreachable!("registry checked above"),
    }?;
    outcome.experiment = name.to_string();
    Ok(outcome)
}

fn blank(report: ProbeReport) -> Outcome {
    Outcome {
        experiment: String::new(),
        seed: None,
        report,
        regularity: None,
        complementarity: None,
        solver: None,
        checks: Vec::new(),
        notes: Vec::new(),
    }
}

fn in_range(x: f64, (lo, hi): (f64, f64)) -> bool {
    (lo..=hi).contains(&x)
}

fn slope_check(report: &ProbeReport) -> Check {
    check(
        "exponent slope",
        in_range(report.fit.slope, SLOPE_RANGE),
        format!("slope in [{}, {}]", SLOPE_RANGE.0, SLOPE_RANGE.1),
        format!("slope {:.6}", report.fit.slope),
    )
}

fn kappa_check(report: &ProbeReport) -> Check {
    check(
        "kappa stability",
        report.kappa_stability <= KAPPA_STABILITY,
        format!("max/min per-radius kappa <= {KAPPA_STABILITY}"),
        format!("{:.6}", report.kappa_stability),
    )
}

fn solve(prob: &ProblemInstance, x0: &Element, spec: &SolverSpec) -> Result<(OptimalityCertificate, SolverInfo), RunError> {
    let stop = spec.stop_or(StopCriteria { tol: 1e-12, max_iter: 200_000 });
    let trace = proximal_gradient(prob, x0, spec.step_or_default(), stop).map_err(failed)?;
    let final_residual = trace.iterates.last().map_or(f64::INFINITY, |r| r.residual_norm);
    let info = SolverInfo {
        steps: trace.steps(),
        converged: trace.status == SolveStatus::Converged,
        final_residual,
        rate: estimate_linear_rate(&trace).ok().flatten(),
    };
    let cert = prob
        .certify(&trace.terminal, DEFAULT_CERTIFY_TOL.max(stop.tol))
        .map_err(|e| RunError::Failed(format!("solver did not reach a certifiable optimum: {e}")))?;
    Ok((cert, info))
}

fn probe_report(
    prob: &ProblemInstance,
    cert: &OptimalityCertificate,
    radii: &[f64],
    dirs: &Directions,
) -> Result<ProbeReport, RunError> {
    let samples = probe(prob, cert, radii, dirs, &DistanceOptions::default()).map_err(|e| match e {
        Error::InvalidInput(m) => RunError::Usage(m),
        other => failed(other),
    })?;
    analyze(samples).map_err(failed)
}

fn counterexample(ctx: &Context) -> Result<Outcome, RunError> {
    let prob = instances::counterexample().map_err(failed)?;
    let xbar = instances::counterexample_optimum();
    let cert = prob.certify(&xbar, 1e-10).map_err(failed)?;
    let radii = ctx.radii(&log_spaced(1e-1, 1e-4, 7));
    let report = probe_report(&prob, &cert, &radii, &Directions::Curve(instances::counterexample_curve()))?;
    let comp = strict_complementarity(&prob, &cert).map_err(failed)?;
    let x0 = Element::matrix_from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]);
    let stop = ctx.solver.stop_or(StopCriteria { tol: 1e-13, max_iter: 1_000_000 });
    let trace = proximal_gradient(&prob, &x0, ctx.solver.step_or_default(), stop).map_err(failed)?;
    let gap = trace.terminal.distance(&xbar);
    let mut out = blank(report);
    let fit = out.report.fit;
    out.checks = vec![
        check("exponent slope", in_range(fit.slope, (1.9, 2.1)), "slope in [1.9, 2.1]", format!("slope {:.6}", fit.slope)),
        check("fit quality", fit.r_squared >= 0.999, "R^2 >= 0.999", format!("R^2 {:.6}", fit.r_squared)),
        check(
            "strict complementarity",
            !comp.holds,
            "fails (s_bar = 2, rank 1)",
            format!("holds = {} (s_bar = {}, rank {})", comp.holds, comp.s_bar, comp.rank_x),
        ),
        check("solver reaches optimum", gap <= 1e-6, "||X - diag(1,0)|| <= 1e-6 from diag(2,1)", format!("{gap:.3e}")),
    ];
    out.notes.push(format!(
        "kappa_max {:.6e} at delta_min {:.1e}; growth tracks 1/delta_min",
        fit.kappa_max,
        radii.last().copied().unwrap_or(f64::NAN)
    ));
    out.regularity = Some(regularity_summary(&prob, &cert));
    out.complementarity = Some(comp);
    out.solver = Some(SolverInfo {
        steps: trace.steps(),
        converged: trace.status == SolveStatus::Converged,
        final_residual: trace.iterates.last().map_or(f64::NAN, |r| r.residual_norm),
        rate: estimate_linear_rate(&trace).ok().flatten(),
    });
    Ok(out)
}

fn noncompact(ctx: &Context, args: &RunArgs) -> Result<Outcome, RunError> {
    let (left, right) = args.x_range.unwrap_or((-50.0, -5.0));
    if !(left < right && right <= 0.0) {
        return Err(RunError::Usage(format!("--x-range needs left < right <= 0, got {left}..{right}")));
    }
    let y = args.y.unwrap_or(1.0);
    if !(y > 0.0 && y.is_finite()) {
        return Err(RunError::Usage(format!("--y must be positive, got {y}")));
    }
    let prob = instances::noncompact().map_err(failed)?;
    let cert = prob.certify(&instances::noncompact_optimum(), 1e-12).map_err(failed)?;
    // the curve parameter is -x, listed from the far end of the ray inwards
    let count = ((right - left).ceil() as usize + 1).max(2);
    let params: Vec<f64> = (0..count).map(|k| -(left + (right - left) * k as f64 / (count - 1) as f64)).collect();
    let params = ctx.probe.radii.clone().unwrap_or(params);
    let report = probe_report(&prob, &cert, &params, &Directions::Curve(instances::noncompact_ray(y)))?;
    // walk the ray outwards: from x = right towards x = left
    let outward: Vec<_> = report.samples.iter().rev().collect();
    let d_err = outward.iter().map(|s| (s.d - y).abs()).fold(0.0, f64::max);
    let ratios: Vec<f64> = outward.iter().map(|s| s.d / s.r_prox).collect();
    let increasing = ratios.windows(2).all(|w| w[1] > w[0]);
    let final_ratio = ratios.last().copied().unwrap_or(f64::NAN);
    let mut out = blank(report);
    out.checks = vec![
        check("distance constant", d_err <= 1e-12, format!("|d - {y}| <= 1e-12"), format!("max deviation {d_err:.3e}")),
        check("ratio unbounded", increasing, "d/||R|| strictly increasing along the ray", format!("increasing = {increasing}")),
        check("final ratio", final_ratio > 1e10, "final d/||R|| > 1e10", format!("{final_ratio:.6e}")),
    ];
    out.regularity = Some(regularity_summary(&prob, &cert));
    Ok(out)
}

fn scenario(ctx: &Context, which: Scenario) -> Result<Outcome, RunError> {
    let prob = which.build(ctx.seed).map_err(failed)?;
    let (cert, info) = solve(&prob, &prob.feasible_point, &ctx.solver)?;
    let report = probe_report(&prob, &cert, &ctx.radii(&SCENARIO_RADII), &ctx.random())?;
    let mut out = blank(report);
    out.seed = Some(ctx.seed);
    out.checks = vec![slope_check(&out.report), kappa_check(&out.report)];
    if which == Scenario::StronglyConvex {
        out.checks.push(match info.rate {
            Some(r) => check(
                "linear rate",
                r.rate <= 0.99 && r.r_squared >= 0.99,
                "rate <= 0.99 with R^2 >= 0.99",
                format!("rate {:.6}, R^2 {:.6}", r.rate, r.r_squared),
            ),
            None => check("linear rate", false, "rate <= 0.99 with R^2 >= 0.99", "no linear fit"),
        });
    }
    out.notes.push(format!("r_prox/r_alt spread {:.3}", out.report.residual_ratio_spread));
    out.regularity = Some(regularity_summary(&prob, &cert));
    out.solver = Some(info);
    Ok(out)
}

fn nuclear_regular(ctx: &Context) -> Result<Outcome, RunError> {
    let prob = instances::regular_nuclear().map_err(failed)?;
    let cert = prob.certify(&instances::regular_nuclear_optimum(), 1e-10).map_err(failed)?;
    let comp = strict_complementarity(&prob, &cert).map_err(failed)?;
    let report = probe_report(&prob, &cert, &ctx.radii(&SCENARIO_RADII), &ctx.random())?;
    let mut out = blank(report);
    out.seed = Some(ctx.seed);
    out.checks = vec![
        check(
            "strict complementarity",
            comp.holds,
            "holds (rank x* = s_bar)",
            format!("holds = {} (s_bar = {}, rank {}, margin {:.6})", comp.holds, comp.s_bar, comp.rank_x, comp.margin),
        ),
        slope_check(&out.report),
        kappa_check(&out.report),
    ];
    out.regularity = Some(regularity_summary(&prob, &cert));
    out.complementarity = Some(comp);
    Ok(out)
}

fn custom(ctx: &Context, config: Option<&ExperimentConfig>) -> Result<Outcome, RunError> {
    let spec = config
        .and_then(|c| c.problem.as_ref())
        .ok_or_else(|| RunError::Usage("the custom experiment needs --config with a problem".into()))?;
    let prob = ProblemInstance::new(spec.smooth.clone(), spec.reg.clone(), spec.x0.clone())
        .map_err(|e| RunError::Usage(format!("problem: {e}")))?;
    let (cert, info) = match &spec.x_star {
        Some(x) => (prob.certify(x, DEFAULT_CERTIFY_TOL).map_err(failed)?, None),
        None => {
            let (c, i) = solve(&prob, &spec.x0, &ctx.solver)?;
            (c, Some(i))
        }
    };
    let report = probe_report(&prob, &cert, &ctx.radii(&SCENARIO_RADII), &ctx.random())?;
    let summary = regularity_summary(&prob, &cert);
    let mut out = blank(report);
    out.seed = Some(ctx.seed);
    if summary.lipschitz_eb_expected {
        out.checks = vec![slope_check(&out.report), kappa_check(&out.report)];
    } else {
        out.notes.push("no sufficient condition for a Lipschitz error bound applies; fit reported only".into());
    }
    if let Some(comp) = summary.complementarity {
        out.complementarity = Some(comp);
    }
    out.regularity = Some(summary);
    out.solver = info;
    Ok(out)
}

/// Parses `a..b`.
pub fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected a range like -50..0, got `{s}`"))?;
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad range end `{t}`: {e}"));
    Ok((parse(a)?, parse(b)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parsing() {
        assert_eq!(parse_range("-50..0"), Ok((-50.0, 0.0)));
        assert_eq!(parse_range("-5.5..-1"), Ok((-5.5, -1.0)));
        assert!(parse_range("-5").is_err());
        assert!(parse_range("a..1").is_err());
    }

    #[test]
    fn every_named_experiment_passes() {
        for (name, _) in EXPERIMENTS.iter().filter(|e| e.0 != "custom") {
            let out = run(name, &RunArgs::default()).unwrap();
            assert!(out.passed(), "{name}: {:?}", out.checks);
        }
    }

    #[test]
    fn noncompact_range_from_zero() {
        let args = RunArgs { x_range: Some((-50.0, 0.0)), y: Some(1.0), ..RunArgs::default() };
        let out = run("noncompact", &args).unwrap();
        assert_eq!(out.report.samples.len(), 51);
        assert!(out.passed(), "{:?}", out.checks);
    }

    #[test]
    fn usage_errors() {
        assert!(matches!(run("nope", &RunArgs::default()), Err(RunError::Usage(_))));
        let args = RunArgs { y: Some(1.0), ..RunArgs::default() };
        assert!(matches!(run("lasso", &args), Err(RunError::Usage(_))));
        assert!(matches!(run("custom", &RunArgs::default()), Err(RunError::Usage(_))));
        let args = RunArgs { x_range: Some((-5.0, 2.0)), ..RunArgs::default() };
        assert!(matches!(run("noncompact", &args), Err(RunError::Usage(_))));
    }
}
