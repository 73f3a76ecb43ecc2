//! Artifact files: samples.csv, loglog.csv, fit.json and summary.txt.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use ebound::diagnostics::{ExponentFit, RegularityCondition};
use serde::Serialize;

use crate::experiments::{Check, Outcome};

/// `--out`, then the config's `output`, then `$EBOUND_OUT/<name>`, then
/// `results/<name>`.
pub fn output_dir(name: &str, flag: Option<&Path>, config: Option<&Path>) -> PathBuf {
    if let Some(p) = flag.or(config) {
        return p.to_path_buf();
    }
    match std::env::var_os("EBOUND_OUT") {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(name),
        _ => PathBuf::from("results").join(name),
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn samples_csv(outcome: &Outcome) -> String {
    let mut s = String::from("radius,direction_id,d,r_prox,r_alt,F_val\n");
    for p in &outcome.report.samples {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            num(p.radius),
            p.direction_id,
            num(p.d),
            num(p.r_prox),
            num(p.r_alt),
            num(p.f_val)
        );
    }
    s
}

/// Log-log pairs of the points entering the exponent fit.
pub fn loglog_csv(outcome: &Outcome) -> String {
    let mut s = String::from("radius,direction_id,log10_d,log10_r_prox\n");
    for p in outcome.report.samples.iter().filter(|p| p.d > 0.0 && p.r_prox > 0.0) {
        let _ = writeln!(s, "{},{},{},{}", num(p.radius), p.direction_id, num(p.d.log10()), num(p.r_prox.log10()));
    }
    s
}

#[derive(Serialize)]
struct FitJson {
    slope: f64,
    intercept: f64,
    r_squared: f64,
    kappa_max: f64,
    count: usize,
}

impl From<&ExponentFit> for FitJson {
    fn from(f: &ExponentFit) -> Self {
        FitJson { slope: f.slope, intercept: f.intercept, r_squared: f.r_squared, kappa_max: f.kappa_max, count: f.count }
    }
}

#[derive(Serialize)]
struct ComplementarityJson {
    s_bar: usize,
    rank_x: usize,
    holds: bool,
    /// `null` when the margin is infinite.
    margin: Option<f64>,
}

#[derive(Serialize)]
struct RateJson {
    rate: f64,
    r_squared: f64,
}

#[derive(Serialize)]
struct SolverJson {
    steps: usize,
    converged: bool,
    final_residual: f64,
    linear_rate: Option<RateJson>,
}

#[derive(Serialize)]
struct CheckJson<'a> {
    name: &'a str,
    pass: bool,
    expected: &'a str,
    observed: &'a str,
}

#[derive(Serialize)]
struct Document<'a> {
    experiment: &'a str,
    seed: Option<u64>,
    samples: usize,
    slope: f64,
    intercept: f64,
    r_squared: f64,
    kappa_max: f64,
    envelope: Option<FitJson>,
    kappa_by_radius: Vec<[f64; 2]>,
    kappa_stability: f64,
    residual_lipschitz: f64,
    residual_ratio_spread: f64,
    regularity: Option<&'static str>,
    lipschitz_eb_expected: Option<bool>,
    complementarity: Option<ComplementarityJson>,
    solver: Option<SolverJson>,
    checks: Vec<CheckJson<'a>>,
    passed: bool,
}

fn condition_name(c: RegularityCondition) -> &'static str {
    match c {
        RegularityCondition::StronglyConvex => "strongly_convex",
        RegularityCondition::Polyhedral => "polyhedral",
        RegularityCondition::NuclearWithSc => "nuclear_strict_complementarity",
        RegularityCondition::Unverified => "unverified",
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn fit_json(o: &Outcome) -> String {
    let r = &o.report;
    let doc = Document {
        experiment: &o.experiment,
        seed: o.seed,
        samples: r.samples.len(),
        slope: r.fit.slope,
        intercept: r.fit.intercept,
        r_squared: r.fit.r_squared,
        kappa_max: r.fit.kappa_max,
        envelope: r.envelope.as_ref().map(FitJson::from),
        kappa_by_radius: r.kappa_by_radius.iter().map(|&(a, b)| [a, b]).collect(),
        kappa_stability: r.kappa_stability,
        residual_lipschitz: r.residual_lipschitz,
        residual_ratio_spread: r.residual_ratio_spread,
        regularity: o.regularity.as_ref().map(|s| condition_name(s.condition)),
        lipschitz_eb_expected: o.regularity.as_ref().map(|s| s.lipschitz_eb_expected),
        complementarity: o.complementarity.as_ref().map(|c| ComplementarityJson {
            s_bar: c.s_bar,
            rank_x: c.rank_x,
            holds: c.holds,
            margin: finite(c.margin),
        }),
        solver: o.solver.as_ref().map(|s| SolverJson {
            steps: s.steps,
            converged: s.converged,
            final_residual: s.final_residual,
            linear_rate: s.rate.map(|r| RateJson { rate: r.rate, r_squared: r.r_squared }),
        }),
        checks: o
            .checks
            .iter()
            .map(|c| CheckJson { name: &c.name, pass: c.pass, expected: &c.expected, observed: &c.observed })
            .collect(),
        passed: o.passed(),
    };
    // serde_json writes NaN and infinities as null
    let mut s = serde_json::to_string_pretty(&doc).expect("plain data serializes");
    s.push('\n');
    s
}

fn check_line(c: &Check) -> String {
    format!("  [{}] {}: expected {}; observed {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.expected, c.observed)
}

pub fn summary_txt(o: &Outcome) -> String {
    let r = &o.report;
    let mut s = String::new();
    let _ = writeln!(s, "experiment: {}", o.experiment);
    if let Some(seed) = o.seed {
        let _ = writeln!(s, "seed: {seed}");
    }
    let _ = writeln!(s, "samples: {}", r.samples.len());
    let _ = writeln!(
        s,
        "exponent fit: slope {:.6}, intercept {:.6}, R^2 {:.6}, over {} points",
        r.fit.slope, r.fit.intercept, r.fit.r_squared, r.fit.count
    );
    if let Some(e) = &r.envelope {
        let _ = writeln!(s, "envelope fit: slope {:.6}, R^2 {:.6}", e.slope, e.r_squared);
    }
    let _ = writeln!(s, "kappa_max: {:.6e}", r.fit.kappa_max);
    let _ = writeln!(s, "kappa stability (max/min over radii): {:.6}", r.kappa_stability);
    let _ = writeln!(s, "residual Lipschitz estimate: {:.6}", r.residual_lipschitz);
    let _ = writeln!(s, "r_prox/r_alt spread: {:.6}", r.residual_ratio_spread);
    if let Some(reg) = &o.regularity {
        let _ = writeln!(
            s,
            "regularity: {} (Lipschitz error bound expected: {})",
            condition_name(reg.condition),
            reg.lipschitz_eb_expected
        );
    }
    if let Some(c) = &o.complementarity {
        let _ = writeln!(
            s,
            "strict complementarity: holds {} (s_bar {}, rank {}, margin {:.6e})",
            c.holds, c.s_bar, c.rank_x, c.margin
        );
    }
    if let Some(sv) = &o.solver {
        let _ = write!(
            s,
            "solver: {} steps, converged {}, final residual {:.3e}",
            sv.steps, sv.converged, sv.final_residual
        );
        match sv.rate {
            Some(rate) => {
                let _ = writeln!(s, ", linear rate {:.6} (R^2 {:.6})", rate.rate, rate.r_squared);
            }
            None => s.push('\n'),
        }
    }
    for n in &o.notes {
        let _ = writeln!(s, "note: {n}");
    }
    let _ = writeln!(s, "checks:");
    for c in &o.checks {
        let _ = writeln!(s, "{}", check_line(c));
    }
    let _ = writeln!(s, "result: {}", if o.passed() { "PASS" } else { "FAIL" });
    s
}

/// Lines describing each failed check, for stderr.
pub fn diff_report(o: &Outcome) -> String {
    o.checks.iter().filter(|c| !c.pass).map(|c| check_line(c) + "\n").collect()
}

pub fn write_all(dir: &Path, o: &Outcome) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("samples.csv"), samples_csv(o))?;
    fs::write(dir.join("loglog.csv"), loglog_csv(o))?;
    fs::write(dir.join("fit.json"), fit_json(o))?;
    fs::write(dir.join("summary.txt"), summary_txt(o))?;
    Ok(())
}
