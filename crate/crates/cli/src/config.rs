//! Experiment configuration: a single JSON document, validated in full before
//! anything runs. All problems are collected and reported together.

use std::fmt;
use std::path::{Path, PathBuf};

use ebound::losses::{CompositeSmooth, SmoothLoss};
use ebound::regularizers::{Regularizer, SignConstraint};
use ebound::solver::{StepPolicy, StopCriteria};
use ebound::space::{Element, LinearMap, Shape};
use ndarray::Array2;
use serde_json::{Map, Value};

use crate::experiments::EXPERIMENTS;
use crate::locate::{join_index, join_key, LineIndex};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub problem: Option<ProblemSpec>,
    pub probe: ProbeSpec,
    pub solver: SolverSpec,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub smooth: CompositeSmooth,
    pub reg: Regularizer,
    pub x0: Element,
    /// Certify this point instead of solving.
    pub x_star: Option<Element>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProbeSpec {
    pub radii: Option<Vec<f64>>,
    pub directions: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolverSpec {
    pub step: Option<StepPolicy>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

impl SolverSpec {
    pub fn step_or_default(&self) -> StepPolicy {
        self.step.unwrap_or_default()
    }

    pub fn stop_or(&self, default: StopCriteria) -> StopCriteria {
        StopCriteria { tol: self.tol.unwrap_or(default.tol), max_iter: self.max_iter.unwrap_or(default.max_iter) }
    }
}

pub fn validate_config(path: &Path) -> Result<ExperimentConfig, Vec<ConfigError>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        vec![ConfigError { line: None, path: String::new(), message: format!("cannot read {}: {e}", path.display()) }]
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<ConfigError>> {
    let value: Value = serde_json::from_str(text).map_err(|e| {
        vec![ConfigError { line: Some(e.line()), path: String::new(), message: format!("invalid JSON: {e}") }]
    })?;
    let index = LineIndex::build(text);
    let mut w = Walker { index: &index, errors: Vec::new() };
    let config = w.config(&value);
    match config {
        Some(c) if w.errors.is_empty() => Ok(c),
        _ => Err(w.errors),
    }
}

struct Walker<'a> {
    index: &'a LineIndex,
    errors: Vec<ConfigError>,
}

impl Walker<'_> {
    fn err<T>(&mut self, path: &str, message: impl Into<String>) -> Option<T> {
        self.errors.push(ConfigError {
            line: self.index.line(path),
            path: path.to_string(),
            message: message.into(),
        });
        None
    }

    fn lift<T, E: fmt::Display>(&mut self, r: Result<T, E>, path: &str) -> Option<T> {
        match r {
            Ok(t) => Some(t),
            Err(e) => self.err(path, e.to_string()),
        }
    }

    fn object<'v>(&mut self, v: &'v Value, path: &str, allowed: &[&str], required: &[&str]) -> Option<&'v Map<String, Value>> {
        let Some(map) = v.as_object() else {
            return self.err(path, "expected an object");
        };
        // unknown keys are reported but do not stop validation of the rest
        for key in map.keys() {
            if !allowed.contains(&key.as_str()) {
                self.err::<()>(&join_key(path, key), format!("unknown key (allowed: {})", allowed.join(", ")));
            }
        }
        let mut ok = true;
        for key in required {
            if !map.contains_key(*key) {
                ok = false;
                self.err::<()>(path, format!("missing required field `{key}`"));
            }
        }
        ok.then_some(map)
    }

    fn number(&mut self, v: &Value, path: &str) -> Option<f64> {
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => self.err(path, "expected a finite number"),
        }
    }

    fn non_negative(&mut self, v: &Value, path: &str, what: &str) -> Option<f64> {
        let x = self.number(v, path)?;
        if x < 0.0 {
            return self.err(path, format!("{what}, got {x}"));
        }
        Some(x)
    }

    fn positive(&mut self, v: &Value, path: &str) -> Option<f64> {
        let x = self.number(v, path)?;
        if x <= 0.0 {
            return self.err(path, format!("must be positive, got {x}"));
        }
        Some(x)
    }

    fn count(&mut self, v: &Value, path: &str) -> Option<usize> {
        match v.as_u64() {
            Some(n) => Some(n as usize),
            None => self.err(path, "expected a non-negative integer"),
        }
    }

    fn numbers(&mut self, v: &Value, path: &str) -> Option<Vec<f64>> {
        let Some(items) = v.as_array() else {
            return self.err(path, "expected an array of numbers");
        };
        let out: Vec<Option<f64>> = items.iter().enumerate().map(|(i, x)| self.number(x, &join_index(path, i))).collect();
        out.into_iter().collect()
    }

    fn matrix(&mut self, v: &Value, path: &str) -> Option<Array2<f64>> {
        let Some(rows) = v.as_array() else {
            return self.err(path, "expected a matrix as an array of rows");
        };
        if rows.is_empty() {
            return self.err(path, "matrix has no rows");
        }
        let parsed: Vec<Option<Vec<f64>>> = rows.iter().enumerate().map(|(i, r)| self.numbers(r, &join_index(path, i))).collect();
        let parsed: Vec<Vec<f64>> = parsed.into_iter().collect::<Option<_>>()?;
        let n = parsed[0].len();
        if n == 0 || parsed.iter().any(|r| r.len() != n) {
            return self.err(path, "matrix rows must be non-empty and of equal length");
        }
        Some(Array2::from_shape_fn((parsed.len(), n), |(i, j)| parsed[i][j]))
    }

    fn config(&mut self, v: &Value) -> Option<ExperimentConfig> {
        let map = self.object(v, "", &["experiment", "problem", "probe", "solver", "output"], &[])?;
        let experiment = match map.get("experiment").map(Value::as_str) {
            None => self.err("", "missing required field `experiment`"),
            Some(Some(name)) if EXPERIMENTS.iter().any(|e| e.0 == name) => Some(name.to_string()),
            Some(Some(name)) => self.err(
                "experiment",
                format!("unknown experiment `{name}` (known: {})", EXPERIMENTS.iter().map(|e| e.0).collect::<Vec<_>>().join(", ")),
            ),
            Some(None) => self.err("experiment", "expected a string"),
        };
        let problem = match (map.get("problem"), experiment.as_deref()) {
            (Some(p), Some("custom")) => self.problem(p, "problem").map(Some),
            (Some(_), Some(_)) => self.err("problem", "only the `custom` experiment takes a problem description"),
            (None, Some("custom")) => self.err("", "the `custom` experiment needs a `problem` field"),
            (p, _) => {
                if let Some(p) = p {
                    self.problem(p, "problem");
                }
                Some(None)
            }
        };
        let probe = map.get("probe").map_or(Some(ProbeSpec::default()), |p| self.probe(p));
        let solver = map.get("solver").map_or(Some(SolverSpec::default()), |s| self.solver(s));
        let output = match map.get("output") {
            None => Some(None),
            Some(Value::String(s)) if !s.is_empty() => Some(Some(PathBuf::from(s))),
            Some(_) => self.err("output", "expected a non-empty directory path"),
        };
        Some(ExperimentConfig { experiment: experiment?, problem: problem?, probe: probe?, solver: solver?, output: output? })
    }

    fn shape(&mut self, v: &Value, path: &str) -> Option<Shape> {
        match v {
            Value::Number(_) => match self.count(v, path)? {
                0 => self.err(path, "dimension must be positive"),
                n => Some(Shape::Vector(n)),
            },
            Value::Array(items) if items.len() == 2 => {
                let m = self.count(&items[0], &join_index(path, 0))?;
                let n = self.count(&items[1], &join_index(path, 1))?;
                if m == 0 || n == 0 {
                    return self.err(path, "matrix dimensions must be positive");
                }
                Some(Shape::Matrix(m, n))
            }
            _ => self.err(path, "expected a vector length n or matrix dimensions [m, n]"),
        }
    }

    fn problem(&mut self, v: &Value, path: &str) -> Option<ProblemSpec> {
        let allowed = ["shape", "loss", "linear_map", "c", "regularizer", "x0", "x_star"];
        let map = self.object(v, path, &allowed, &["shape", "loss", "regularizer"])?;
        let shape = self.shape(&map["shape"], &join_key(path, "shape"));
        let loss = self.loss(&map["loss"], &join_key(path, "loss"));
        let reg = self.regularizer(&map["regularizer"], &join_key(path, "regularizer"));
        let shape = shape?;
        let map_path = join_key(path, "linear_map");
        let linear = match map.get("linear_map") {
            None => Some(LinearMap::identity(shape)),
            Some(m) => self.linear_map(m, &map_path, shape),
        };
        let mut element = |key: &str| -> Option<Option<Element>> {
            let p = join_key(path, key);
            match map.get(key) {
                None => Some(None),
                Some(v) => {
                    let flat = self.numbers(v, &p)?;
                    match Element::from_flat(shape, flat) {
                        Ok(e) => Some(Some(e)),
                        Err(e) => self.err(&p, e.to_string()),
                    }
                }
            }
        };
        let c = element("c");
        let x0 = element("x0");
        let x_star = element("x_star");
        let (loss, reg, linear, c, x0, x_star) = (loss?, reg?, linear?, c?, x0?, x_star?);
        let x0 = x0.unwrap_or_else(|| Element::zeros(shape));
        if let Err(e) = reg.check_element(&x0) {
            return self.err(&join_key(path, "regularizer"), e.to_string());
        }
        match CompositeSmooth::new(loss, linear, c, &x0) {
            Ok(smooth) => Some(ProblemSpec { smooth, reg, x0, x_star }),
            Err(e) => self.err(path, format!("cannot assemble the smooth part: {e}")),
        }
    }

    fn loss(&mut self, v: &Value, path: &str) -> Option<SmoothLoss> {
        let kind = v.get("type").and_then(Value::as_str);
        let built = match kind {
            Some("least_squares") => {
                let m = self.object(v, path, &["type", "targets"], &["targets"])?;
                SmoothLoss::least_squares(self.numbers(&m["targets"], &join_key(path, "targets"))?)
            }
            Some("general_quadratic") => {
                let m = self.object(v, path, &["type", "b", "d"], &["b", "d"])?;
                let b = self.matrix(&m["b"], &join_key(path, "b"));
                let d = self.numbers(&m["d"], &join_key(path, "d"));
                SmoothLoss::general_quadratic(b?, d?)
            }
            Some("logistic") => {
                let m = self.object(v, path, &["type", "labels"], &["labels"])?;
                SmoothLoss::logistic(self.numbers(&m["labels"], &join_key(path, "labels"))?)
            }
            Some("poisson") => {
                let m = self.object(v, path, &["type", "counts"], &["counts"])?;
                SmoothLoss::poisson(self.numbers(&m["counts"], &join_key(path, "counts"))?)
            }
            Some("noncompact") => {
                self.object(v, path, &["type"], &[])?;
                Ok(SmoothLoss::NoncompactExample)
            }
            Some(other) => {
                return self.err(
                    &join_key(path, "type"),
                    format!("unknown loss `{other}` (known: least_squares, general_quadratic, logistic, poisson, noncompact)"),
                )
            }
            None => return self.err(path, "missing required field `type`"),
        };
        self.lift(built, path)
    }

    fn linear_map(&mut self, v: &Value, path: &str, shape: Shape) -> Option<LinearMap> {
        if v.as_str() == Some("identity") {
            return Some(LinearMap::identity(shape));
        }
        let map = self.object(v, path, &["dense", "coordinate_select"], &[])?;
        if map.len() != 1 {
            return self.err(path, "expected \"identity\", {\"dense\": ...} or {\"coordinate_select\": ...}");
        }
        if let Some(d) = map.get("dense") {
            let p = join_key(path, "dense");
            let a = self.matrix(d, &p)?;
            return self.lift(LinearMap::dense(shape, a), &p);
        }
        let p = join_key(path, "coordinate_select");
        let Some(entries) = map["coordinate_select"].as_array() else {
            return self.err(&p, "expected an array of indices");
        };
        let mut flat = Vec::new();
        for (k, entry) in entries.iter().enumerate() {
            let ep = join_index(&p, k);
            let idx: Option<Vec<usize>> = match entry {
                Value::Number(_) => self.count(entry, &ep).map(|i| vec![i]),
                Value::Array(parts) => parts.iter().enumerate().map(|(i, x)| self.count(x, &join_index(&ep, i))).collect(),
                _ => self.err(&ep, "expected an index or [row, col]"),
            };
            let Some(idx) = idx else { continue };
            let f = match (shape, idx.as_slice()) {
                (Shape::Vector(n), [i]) if *i < n => Some(*i),
                (Shape::Matrix(m, n), [i, j]) if *i < m && *j < n => Some(i * n + j),
                _ => self.err(&ep, format!("index out of range for {shape}")),
            };
            flat.extend(f);
        }
        if flat.len() != entries.len() {
            return None;
        }
        self.lift(LinearMap::select_flat(shape, flat), &p)
    }

    fn regularizer(&mut self, v: &Value, path: &str) -> Option<Regularizer> {
        let kind = v.get("type").and_then(Value::as_str);
        let weight_msg = "weight must satisfy weight ≥ 0";
        let built = match kind {
            Some("l1") => {
                let m = self.object(v, path, &["type", "weight"], &["weight"])?;
                Regularizer::l1(self.non_negative(&m["weight"], &join_key(path, "weight"), weight_msg)?)
            }
            Some("ridge") => {
                let m = self.object(v, path, &["type", "weight"], &["weight"])?;
                Regularizer::ridge(self.non_negative(&m["weight"], &join_key(path, "weight"), weight_msg)?)
            }
            Some("nuclear_norm") => {
                let m = self.object(v, path, &["type", "weight"], &[])?;
                match m.get("weight") {
                    None => Ok(Regularizer::nuclear()),
                    Some(w) => Regularizer::nuclear_weighted(self.non_negative(w, &join_key(path, "weight"), weight_msg)?),
                }
            }
            Some("grouped_lasso") => {
                let m = self.object(v, path, &["type", "groups", "weights"], &["groups", "weights"])?;
                let gp = join_key(path, "groups");
                let groups: Option<Vec<Vec<usize>>> = match m["groups"].as_array() {
                    Some(gs) => gs
                        .iter()
                        .enumerate()
                        .map(|(k, g)| {
                            let p = join_index(&gp, k);
                            match g.as_array() {
                                Some(ix) => ix.iter().enumerate().map(|(i, x)| self.count(x, &join_index(&p, i))).collect(),
                                None => self.err(&p, "expected an array of coordinate indices"),
                            }
                        })
                        .collect::<Vec<_>>()
                        .into_iter()
                        .collect(),
                    None => self.err(&gp, "expected an array of groups"),
                };
                let wp = join_key(path, "weights");
                let weights: Option<Vec<f64>> = match m["weights"].as_array() {
                    Some(ws) => ws
                        .iter()
                        .enumerate()
                        .map(|(k, w)| self.non_negative(w, &join_index(&wp, k), "group weight must satisfy ω_J ≥ 0"))
                        .collect::<Vec<_>>()
                        .into_iter()
                        .collect(),
                    None => self.err(&wp, "expected an array of group weights"),
                };
                Regularizer::grouped_lasso(groups?, weights?)
            }
            Some("orthant") => {
                let m = self.object(v, path, &["type", "signs"], &["signs"])?;
                let sp = join_key(path, "signs");
                let Some(items) = m["signs"].as_array() else {
                    return self.err(&sp, "expected an array of signs");
                };
                let signs: Option<Vec<SignConstraint>> = items
                    .iter()
                    .enumerate()
                    .map(|(i, s)| match s.as_str() {
                        Some("free") => Some(SignConstraint::Free),
                        Some("nonneg") => Some(SignConstraint::NonNeg),
                        Some("nonpos") => Some(SignConstraint::NonPos),
                        Some("zero") => Some(SignConstraint::Zero),
                        _ => self.err(&join_index(&sp, i), "expected one of free, nonneg, nonpos, zero"),
                    })
                    .collect::<Vec<_>>()
                    .into_iter()
                    .collect();
                Ok(Regularizer::orthant(signs?))
            }
            Some(other) => {
                return self.err(
                    &join_key(path, "type"),
                    format!("unknown regularizer `{other}` (known: l1, ridge, grouped_lasso, nuclear_norm, orthant)"),
                )
            }
            None => return self.err(path, "missing required field `type`"),
        };
        self.lift(built, path)
    }

    fn probe(&mut self, v: &Value) -> Option<ProbeSpec> {
        let map = self.object(v, "probe", &["radii", "directions", "seed"], &[])?;
        let radii = match map.get("radii") {
            None => Some(None),
            Some(r @ Value::Array(_)) => self.radii_list(r).map(Some),
            Some(r) => self.radii_range(r).map(Some),
        };
        let directions = match map.get("directions") {
            None => Some(None),
            Some(d) => match self.count(d, "probe.directions")? {
                0 => self.err("probe.directions", "need at least one direction"),
                n => Some(Some(n)),
            },
        };
        let seed = match map.get("seed") {
            None => Some(None),
            Some(s) => match s.as_u64() {
                Some(s) => Some(Some(s)),
                None => self.err("probe.seed", "expected a non-negative integer"),
            },
        };
        Some(ProbeSpec { radii: radii?, directions: directions?, seed: seed? })
    }

    fn radii_list(&mut self, v: &Value) -> Option<Vec<f64>> {
        let radii = self.numbers(v, "probe.radii")?;
        if radii.is_empty() {
            return self.err("probe.radii", "need at least one radius");
        }
        if radii.iter().any(|r| *r < 0.0) {
            return self.err("probe.radii", "radii must be non-negative");
        }
        if radii.windows(2).any(|w| w[1] > w[0]) {
            return self.err("probe.radii", "radii must be listed from largest to smallest");
        }
        Some(radii)
    }

    /// `{"from": a, "to": b, "count": n}`: `n` log-spaced radii from `a` down to `b`.
    fn radii_range(&mut self, v: &Value) -> Option<Vec<f64>> {
        let map = self.object(v, "probe.radii", &["from", "to", "count"], &["from", "to", "count"])?;
        let from = self.positive(&map["from"], "probe.radii.from");
        let to = self.positive(&map["to"], "probe.radii.to");
        let count = self.count(&map["count"], "probe.radii.count");
        let (from, to, count) = (from?, to?, count?);
        if to > from {
            return self.err("probe.radii", "`from` must be at least `to`");
        }
        if count < 2 {
            return self.err("probe.radii.count", "need at least two radii");
        }
        Some(log_spaced(from, to, count))
    }

    fn solver(&mut self, v: &Value) -> Option<SolverSpec> {
        let map = self.object(v, "solver", &["step", "tol", "max_iter"], &[])?;
        let step = match map.get("step") {
            None => Some(None),
            Some(s) => self.step(s).map(Some),
        };
        let tol = match map.get("tol") {
            None => Some(None),
            Some(t) => self.positive(t, "solver.tol").map(Some),
        };
        let max_iter = match map.get("max_iter") {
            None => Some(None),
            Some(m) => self.count(m, "solver.max_iter").map(Some),
        };
        Some(SolverSpec { step: step?, tol: tol?, max_iter: max_iter? })
    }

    fn step(&mut self, v: &Value) -> Option<StepPolicy> {
        if v.as_str() == Some("backtracking") {
            return Some(StepPolicy::default());
        }
        let map = self.object(v, "solver.step", &["fixed", "backtracking"], &[])?;
        if map.len() != 1 {
            return self.err("solver.step", "expected \"backtracking\", {\"fixed\": t} or {\"backtracking\": {...}}");
        }
        if let Some(t) = map.get("fixed") {
            return self.positive(t, "solver.step.fixed").map(StepPolicy::Fixed);
        }
        let b = self.object(&map["backtracking"], "solver.step.backtracking", &["beta", "t0"], &[])?;
        let beta = match b.get("beta") {
            None => Some(0.5),
            Some(x) => match self.number(x, "solver.step.backtracking.beta")? {
                beta if beta > 0.0 && beta < 1.0 => Some(beta),
                beta => self.err("solver.step.backtracking.beta", format!("must lie in (0, 1), got {beta}")),
            },
        };
        let t0 = match b.get("t0") {
            None => Some(1.0),
            Some(x) => self.positive(x, "solver.step.backtracking.t0"),
        };
        Some(StepPolicy::Backtracking { beta: beta?, t0: t0? })
    }
}

pub fn log_spaced(from: f64, to: f64, count: usize) -> Vec<f64> {
    let (a, b) = (from.log10(), to.log10());
    (0..count).map(|k| 10f64.powf(a + (b - a) * k as f64 / (count - 1) as f64)).collect()
}
