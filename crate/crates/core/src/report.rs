//! Executes scenario commands and assembles the JSON report.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::causal::{check_causality, check_isotony};
use crate::commutant::{commutant, double_commutant, endo_algebra, is_von_neumann, FinPremonCat, GeneratorSet};
use crate::crossed::{covariance_residual, crossed_product, CrossedContext};
use crate::error::Result;
use crate::hilb::{central_factor, cstar_residuals, interchange_residuals, t_family, Arrow};
use crate::scenario::{matrix_to_spec, CommandKind, CommandSpec, Expect, Loaded, MatrixSpec, Scenario, SCHEMA};

/// Bound on interchange, containment and causality residuals.
pub const CHECK_TOL: f64 = 1e-8;
/// Bound on C*-axiom and covariance residuals.
pub const EXACT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmitBases {
    None,
    Dims,
    Full,
}

impl FromStr for EmitBases {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" => Ok(EmitBases::None),
            "dims" => Ok(EmitBases::Dims),
            "full" => Ok(EmitBases::Full),
            other => Err(format!("expected none, dims or full, found `{other}`")),
        }
    }
}

impl fmt::Display for EmitBases {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmitBases::None => "none",
            EmitBases::Dims => "dims",
            EmitBases::Full => "full",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Overrides the scenario's tolerance.
    pub tol: Option<f64>,
    pub emit_bases: EmitBases,
    /// Adds per-command wall time, which makes reports run-dependent.
    pub timings: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { tol: None, emit_bases: EmitBases::Dims, timings: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairEntry {
    pub dom: String,
    pub cod: String,
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<MatrixSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommandResult {
    pub command: CommandKind,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<PairEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endo_dim: Option<usize>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub residuals: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
    pub failures: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

impl CommandResult {
    fn new(command: CommandKind) -> Self {
        CommandResult {
            command,
            passed: true,
            pairs: None,
            endo_dim: None,
            residuals: BTreeMap::new(),
            details: None,
            failures: Vec::new(),
            wall_ms: None,
        }
    }

    fn fail(&mut self, msg: String) {
        self.failures.push(msg);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub scenario: Scenario,
    pub tol: f64,
    pub emit_bases: EmitBases,
    pub passed: bool,
    pub results: Vec<CommandResult>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report values are finite");
        s.push('\n');
        s
    }
}

fn pair_key(dom: &str, cod: &str) -> String {
    format!("{dom}->{cod}")
}

fn pairs_of(cat: &FinPremonCat, emit: EmitBases) -> Option<Vec<PairEntry>> {
    if emit == EmitBases::None {
        return None;
    }
    Some(
        cat.homs()
            .iter()
            .map(|h| PairEntry {
                dom: h.dom().name().to_string(),
                cod: h.cod().name().to_string(),
                dim: h.dim(),
                basis: (emit == EmitBases::Full).then(|| h.basis().iter().map(|f| matrix_to_spec(f.mat())).collect()),
            })
            .collect(),
    )
}

fn check_dims(res: &mut CommandResult, cat: &FinPremonCat, expect: &Expect) {
    let Some(dims) = &expect.dims else { return };
    for (key, &want) in dims {
        let found = cat.homs().iter().find(|h| pair_key(h.dom().name(), h.cod().name()) == *key);
        match found {
            Some(h) if h.dim() == want => {}
            Some(h) => res.fail(format!("{key}: dimension {} but expected {want}", h.dim())),
            None => res.fail(format!("{key}: no such hom-pair in the universe")),
        }
    }
}

fn check_endo(res: &mut CommandResult, cat: &FinPremonCat, expect: &Expect) -> Result<()> {
    let dim = endo_algebra(cat)?.len();
    res.endo_dim = Some(dim);
    if let Some(want) = expect.endo_dim {
        if want != dim {
            res.fail(format!("endo-algebra dimension {dim} but expected {want}"));
        }
    }
    Ok(())
}

fn check_verdict(res: &mut CommandResult, verdict: bool, expect: &Expect) {
    let want = expect.holds.unwrap_or(true);
    if verdict != want {
        res.fail(format!("verdict {verdict} but expected {want}"));
    }
}

/// Largest interchange residual between any basis arrow of `cat` and any of `gens`.
pub fn max_interchange(cat: &FinPremonCat, gens: &[Arrow]) -> f64 {
    let mut worst: f64 = 0.0;
    for f in cat.all_arrows() {
        for g in gens {
            let (a, b) = interchange_residuals(&f, g).expect("shared context");
            worst = worst.max(a).max(b);
        }
    }
    worst
}

fn bound(res: &mut CommandResult, name: &str, value: f64, limit: f64) {
    res.residuals.insert(name.to_string(), value);
    if value > limit {
        res.fail(format!("{name} residual {value:.3e} exceeds {limit:.0e}"));
    }
}

fn run_command(l: &Loaded, spec: &CommandSpec, tol: f64, emit: EmitBases) -> Result<CommandResult> {
    let expect = spec.expect.clone().unwrap_or_default();
    let mut res = CommandResult::new(spec.run);
    let gens = &l.gens;
    let universe = &l.universe;
    match spec.run {
        CommandKind::Centre => {
            let t = GeneratorSet::new(l.ctx, t_family(l.ctx))?;
            let cat = commutant(&t, universe, tol)?;
            for h in cat.homs() {
                let want = h.dom().dim() * h.cod().dim();
                if h.dim() != want {
                    res.fail(format!("{}: dimension {} but the centre has {want}", pair_key(h.dom().name(), h.cod().name()), h.dim()));
                }
            }
            let noncentral = cat.all_arrows().iter().filter(|f| central_factor(f, CHECK_TOL).is_none()).count();
            if noncentral > 0 {
                res.fail(format!("{noncentral} basis arrows are not of the form f⊗id_H"));
            }
            bound(&mut res, "interchange", max_interchange(&cat, t.arrows()), CHECK_TOL);
            check_dims(&mut res, &cat, &expect);
            res.pairs = pairs_of(&cat, emit);
        }
        CommandKind::Commutant => {
            let cat = commutant(gens, universe, tol)?;
            bound(&mut res, "interchange", max_interchange(&cat, gens.arrows()), CHECK_TOL);
            check_dims(&mut res, &cat, &expect);
            res.pairs = pairs_of(&cat, emit);
        }
        CommandKind::DoubleCommutant => {
            let cat = double_commutant(gens, universe, tol)?;
            let containment = gens
                .arrows()
                .iter()
                .filter_map(|g| cat.hom(g.dom().name(), g.cod().name()).map(|h| h.relative_residual(g)))
                .fold(0.0, f64::max);
            bound(&mut res, "containment", containment, CHECK_TOL);
            check_dims(&mut res, &cat, &expect);
            res.pairs = pairs_of(&cat, emit);
        }
        CommandKind::VnCheck => {
            let cat = FinPremonCat::span_of(gens, universe.clone(), tol)?;
            let vn = is_von_neumann(&cat, tol);
            check_verdict(&mut res, vn.holds, &expect);
            check_dims(&mut res, &cat, &expect);
            res.details = Some(json!({ "holds": vn.holds, "pairs": vn.pairs }));
            res.pairs = pairs_of(&cat, emit);
        }
        CommandKind::EndoAlgebra => {
            let cat = double_commutant(gens, universe, tol)?;
            check_endo(&mut res, &cat, &expect)?;
            if emit == EmitBases::Full {
                let basis: Vec<MatrixSpec> = endo_algebra(&cat)?.iter().map(matrix_to_spec).collect();
                res.details = Some(json!({ "basis": basis }));
            }
        }
        CommandKind::CrossedProduct => {
            let rep = l.rep.as_ref().expect("validated");
            let cat = crossed_product(gens, rep, universe, tol)?;
            check_endo(&mut res, &cat, &expect)?;
            check_dims(&mut res, &cat, &expect);
            res.details = Some(json!({ "group_order": rep.group().order(), "tilde_hdim": cat.universe().ctx().hdim() }));
            res.pairs = pairs_of(&cat, emit);
        }
        CommandKind::Covariance => {
            let rep = l.rep.as_ref().expect("validated");
            let cc = CrossedContext::new(l.ctx, rep.group().clone());
            let mut worst: f64 = 0.0;
            for f in gens.arrows() {
                for g in 0..rep.group().order() {
                    worst = worst.max(covariance_residual(g, f, rep, &cc)?);
                }
            }
            bound(&mut res, "covariance", worst, EXACT_TOL);
            res.residuals.insert("homomorphism".into(), rep.homomorphism_defect());
        }
        CommandKind::Causality => {
            let net = l.net.as_ref().expect("validated");
            let ctol = tol.max(CHECK_TOL);
            let iso = check_isotony(net, ctol);
            let cau = check_causality(net, ctol);
            check_verdict(&mut res, iso.holds && cau.holds, &expect);
            if let Some(w) = &cau.worst {
                res.residuals.insert("interchange".into(), w.residual);
            }
            res.details = Some(json!({ "isotony": iso, "causality": cau }));
        }
        CommandKind::CstarCheck => {
            let mut worst = BTreeMap::<&str, f64>::new();
            let mut count = 0usize;
            for s in gens.arrows() {
                for t in gens.arrows().iter().filter(|t| t.cod() == s.dom()) {
                    for a in universe.objects() {
                        count += 1;
                        for (k, v) in cstar_residuals(s, t, a)?.to_map() {
                            let e = worst.entry(k).or_insert(0.0);
                            *e = e.max(v);
                        }
                    }
                }
            }
            for (k, v) in worst {
                bound(&mut res, k, v, EXACT_TOL);
            }
            res.details = Some(json!({ "checked": count }));
        }
    }
    res.passed = res.failures.is_empty();
    Ok(res)
}

/// Runs every command in order. Engine errors abort the run.
pub fn run(l: &Loaded, opts: &RunOptions) -> Result<Report> {
    let tol = opts.tol.unwrap_or(l.scenario.tol);
    let mut results = Vec::with_capacity(l.scenario.commands.len());
    for spec in &l.scenario.commands {
        let start = Instant::now();
        let mut r = run_command(l, spec, tol, opts.emit_bases)?;
        if opts.timings {
            r.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
        }
        results.push(r);
    }
    Ok(Report {
        schema: SCHEMA,
        scenario: l.scenario.clone(),
        tol,
        emit_bases: opts.emit_bases,
        passed: results.iter().all(|r| r.passed),
        results,
    })
}
