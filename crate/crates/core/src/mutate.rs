//! Single-site mutation testing of a program's code and specifications.
//!
//! Sites are identified by the pre-order position of the affected
//! expression in [`walk_exprs`]; a mutant is the baseline with exactly one
//! site rewritten, printed back to source and recompiled.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::domains::DomainParams;
use crate::harness::{run_all, Failure, TestConfig};
use crate::interp::FaultKind;
use crate::sampler::{SampleError, SamplePlan};
use crate::syntax::{
    compile, print_source, walk_exprs, walk_exprs_mut, BinaryOp, ExprKind, Program, Quantifier,
    Span,
};

/// Default cap on mutants per program.
pub const DEFAULT_MAX_MUTANTS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MutationOperator {
    OperatorSwap,
    ConstantIncrement,
    ConstantDecrement,
    BooleanFlip,
    QuantifierSwap,
}

impl MutationOperator {
    pub fn name(self) -> &'static str {
        match self {
            MutationOperator::OperatorSwap => "operator-swap",
            MutationOperator::ConstantIncrement => "constant-increment",
            MutationOperator::ConstantDecrement => "constant-decrement",
            MutationOperator::BooleanFlip => "boolean-flip",
            MutationOperator::QuantifierSwap => "quantifier-swap",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MutationSite {
    /// Pre-order index of the rewritten expression.
    pub ordinal: usize,
    #[serde(serialize_with = "span_text")]
    pub span: Span,
    pub operator: MutationOperator,
    pub original: String,
    pub replacement: String,
}

fn span_text<S: serde::Serializer>(span: &Span, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(span)
}

/// The swap partner of a relational or logical operator; an involution.
pub fn swapped(op: BinaryOp) -> Option<BinaryOp> {
    use BinaryOp::*;
    Some(match op {
        Eq => Ne,
        Ne => Eq,
        Lt => Ge,
        Ge => Lt,
        Le => Gt,
        Gt => Le,
        And => Or,
        Or => And,
        _ => return None,
    })
}

fn other(q: Quantifier) -> Quantifier {
    match q {
        Quantifier::All => Quantifier::Some,
        Quantifier::Some => Quantifier::All,
    }
}

/// Every site in source order; parents precede their children.
pub fn enumerate_sites(program: &Program) -> Vec<MutationSite> {
    let mut sites = Vec::new();
    let mut ordinal = 0;
    walk_exprs(&program.source.declarations, &mut |e| {
        let mut push = |operator, original: String, replacement: String| {
            sites.push(MutationSite {
                ordinal,
                span: e.span,
                operator,
                original,
                replacement,
            })
        };
        match &e.kind {
            ExprKind::Binary(op, ..) => {
                if let Some(to) = swapped(*op) {
                    push(
                        MutationOperator::OperatorSwap,
                        op.symbol().into(),
                        to.symbol().into(),
                    );
                }
            }
            ExprKind::Int(v) => {
                push(
                    MutationOperator::ConstantIncrement,
                    v.to_string(),
                    (v + 1u8).to_string(),
                );
                push(
                    MutationOperator::ConstantDecrement,
                    v.to_string(),
                    (v - 1u8).to_string(),
                );
            }
            ExprKind::Bool(b) => push(
                MutationOperator::BooleanFlip,
                b.to_string(),
                (!b).to_string(),
            ),
            ExprKind::Quantified { quantifier, .. } => push(
                MutationOperator::QuantifierSwap,
                quantifier.keyword().into(),
                other(*quantifier).keyword().into(),
            ),
            _ => {}
        }
        ordinal += 1;
    });
    sites
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum MutateError {
    #[error("baseline already fails: {}", .0.join(", "))]
    DirtyBaseline(Vec<String>),
    #[error("mutant at {span} ({original} -> {replacement}) does not compile: {message}")]
    Reprint {
        span: Span,
        original: String,
        replacement: String,
        message: String,
    },
    #[error(transparent)]
    Sample(#[from] SampleError),
}

/// Rewrites one site; the result is re-printed and recompiled.
pub fn apply(program: &Program, site: &MutationSite) -> Result<Program, MutateError> {
    let mut decls = program.source.declarations.clone();
    let mut ordinal = 0;
    walk_exprs_mut(&mut decls, &mut |e| {
        if ordinal == site.ordinal {
            match (&mut e.kind, site.operator) {
                (ExprKind::Binary(op, ..), MutationOperator::OperatorSwap) => {
                    *op = swapped(*op).expect("site operator is swappable");
                }
                (ExprKind::Int(v), MutationOperator::ConstantIncrement) => *v += 1,
                (ExprKind::Int(v), MutationOperator::ConstantDecrement) => *v -= 1,
                (ExprKind::Bool(b), MutationOperator::BooleanFlip) => *b = !*b,
                (ExprKind::Quantified { quantifier, .. }, MutationOperator::QuantifierSwap) => {
                    *quantifier = other(*quantifier);
                }
                _ => panic!("site {} does not match program", site.ordinal),
            }
        }
        ordinal += 1;
    });
    let text = print_source(&decls);
    compile(&text, program.path()).map_err(|d| MutateError::Reprint {
        span: site.span,
        original: site.original.clone(),
        replacement: site.replacement.clone(),
        message: d.error.message,
    })
}

/// The site undoing `site` on its mutant.
pub fn inverse(site: &MutationSite) -> MutationSite {
    let operator = match site.operator {
        MutationOperator::ConstantIncrement => MutationOperator::ConstantDecrement,
        MutationOperator::ConstantDecrement => MutationOperator::ConstantIncrement,
        op => op,
    };
    MutationSite {
        operator,
        original: site.replacement.clone(),
        replacement: site.original.clone(),
        ..site.clone()
    }
}

/// A uniform sample of `min(max_n, |sites|)` sites, in source order.
pub fn sample_mutants(sites: &[MutationSite], max_n: usize, seed: u64) -> Vec<MutationSite> {
    SamplePlan::with_count((sites.len() as u64).into(), max_n as u64, seed)
        .indices()
        .map(|i| sites[i.to_usize().expect("site index")].clone())
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MutantOutcome {
    Detected,
    Undetected,
    /// Counted as undetected.
    Timeout,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MutantResult {
    pub id: usize,
    pub site: MutationSite,
    pub outcome: MutantOutcome,
    /// Kind of the first failure, in declaration order.
    pub fault_kind: Option<FaultKind>,
    /// Signature and counterexample of that failure.
    pub failure: Option<(String, Failure)>,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MutationReport {
    pub path: String,
    pub seed: u64,
    pub rate: f64,
    pub params: DomainParams,
    pub total_sites: usize,
    pub mutants: Vec<MutantResult>,
}

impl MutationReport {
    fn count(&self, outcome: MutantOutcome) -> usize {
        self.mutants.iter().filter(|m| m.outcome == outcome).count()
    }

    pub fn detected(&self) -> usize {
        self.count(MutantOutcome::Detected)
    }

    pub fn undetected(&self) -> usize {
        self.count(MutantOutcome::Undetected)
    }

    pub fn timeouts(&self) -> usize {
        self.count(MutantOutcome::Timeout)
    }

    /// Detected over sampled, as a percentage; 0 when nothing was sampled.
    pub fn percentage(&self) -> f64 {
        if self.mutants.is_empty() {
            0.0
        } else {
            100.0 * self.detected() as f64 / self.mutants.len() as f64
        }
    }
}

fn run_mutant(
    mutant: &Program,
    config: &TestConfig,
    id: usize,
    site: MutationSite,
) -> Result<MutantResult, MutateError> {
    let start = Instant::now();
    let report = run_all(mutant, config)?;
    let first = report
        .results
        .iter()
        .find_map(|r| r.failures.first().map(|f| (r.signature.clone(), f.clone())));
    let outcome = match &first {
        Some(_) => MutantOutcome::Detected,
        None if report.results.iter().any(|r| r.timed_out) => MutantOutcome::Timeout,
        None => MutantOutcome::Undetected,
    };
    Ok(MutantResult {
        id,
        site,
        outcome,
        fault_kind: first.as_ref().map(|(_, f)| f.fault.kind),
        failure: first,
        elapsed: start.elapsed(),
    })
}

/// Runs the harness on each sampled mutant. The baseline must be clean
/// under `config`.
pub fn run_campaign(
    program: &Program,
    config: &TestConfig,
    max_n: usize,
) -> Result<MutationReport, MutateError> {
    let baseline = run_all(program, config)?;
    if baseline.failing() > 0 {
        let failing = baseline
            .results
            .iter()
            .filter(|r| !r.passed())
            .map(|r| r.signature.clone())
            .collect();
        return Err(MutateError::DirtyBaseline(failing));
    }
    let sites = enumerate_sites(program);
    let chosen = sample_mutants(&sites, max_n, config.seed);
    let inner = TestConfig {
        jobs: None,
        ..config.clone()
    };
    let run = || -> Result<Vec<MutantResult>, MutateError> {
        chosen
            .par_iter()
            .enumerate()
            .map(|(id, site)| {
                let mutant = apply(program, site)?;
                run_mutant(&mutant, &inner, id, site.clone())
            })
            .collect()
    };
    let mutants = match config.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(run)?,
        None => run()?,
    };
    Ok(MutationReport {
        path: program.path().to_string(),
        seed: config.seed,
        rate: config.rate,
        params: config.params,
        total_sites: sites.len(),
        mutants,
    })
}

#[derive(Serialize)]
struct Row<'a> {
    id: usize,
    span: String,
    operator: &'static str,
    original: &'a str,
    replacement: &'a str,
    outcome: MutantOutcome,
    fault_kind: Option<FaultKind>,
    elapsed_ms: Option<u128>,
}

fn rows(report: &MutationReport, timings: bool) -> impl Iterator<Item = Row<'_>> {
    report.mutants.iter().map(move |m| Row {
        id: m.id,
        span: m.site.span.to_string(),
        operator: m.site.operator.name(),
        original: &m.site.original,
        replacement: &m.site.replacement,
        outcome: m.outcome,
        fault_kind: m.fault_kind,
        elapsed_ms: timings.then_some(m.elapsed.as_millis()),
    })
}

/// One row per mutant; `elapsed_ms` is blank unless `timings` is set.
pub fn render_csv(report: &MutationReport, timings: bool) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows(report, timings) {
        w.serialize(row).expect("csv row");
    }
    String::from_utf8(w.into_inner().expect("csv flush")).expect("utf-8")
}

#[derive(Serialize)]
struct JsonReport<'a> {
    schema: u32,
    file: &'a str,
    seed: u64,
    rate: f64,
    params: DomainParams,
    total_sites: usize,
    sampled: usize,
    detected: usize,
    undetected: usize,
    timeouts: usize,
    percentage: f64,
    mutants: Vec<JsonMutant<'a>>,
}

#[derive(Serialize)]
struct JsonMutant<'a> {
    #[serde(flatten)]
    row: Row<'a>,
    #[serde(skip_serializing_if = "Option::is_none")]
    counterexample: Option<String>,
}

pub fn render_json(report: &MutationReport, timings: bool) -> String {
    let doc = JsonReport {
        schema: crate::harness::SCHEMA,
        file: &report.path,
        seed: report.seed,
        rate: report.rate,
        params: report.params,
        total_sites: report.total_sites,
        sampled: report.mutants.len(),
        detected: report.detected(),
        undetected: report.undetected(),
        timeouts: report.timeouts(),
        percentage: report.percentage(),
        mutants: rows(report, timings)
            .zip(&report.mutants)
            .map(|(row, m)| JsonMutant {
                row,
                counterexample: m.failure.as_ref().map(|(sig, f)| {
                    let name = sig.split('(').next().unwrap_or(sig);
                    f.counterexample(name)
                }),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("report serialises");
    text.push('\n');
    text
}

pub fn render_text(report: &MutationReport, timings: bool) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "speccheck mutate {}", report.path);
    let _ = writeln!(
        out,
        "seed {}, rate {}, {}",
        report.seed, report.rate, report.params
    );
    for m in &report.mutants {
        let kind = m.fault_kind.map(|k| format!(" ({k})")).unwrap_or_default();
        let _ = write!(
            out,
            "#{:<3} {:<7} {} {} -> {}: {:?}{kind}",
            m.id,
            m.site.span.to_string(),
            m.site.operator.name(),
            m.site.original,
            m.site.replacement,
            m.outcome
        );
        if timings {
            let _ = write!(out, ", {} ms", m.elapsed.as_millis());
        }
        out.push('\n');
    }
    let _ = writeln!(
        out,
        "{} sites, {} sampled, {} detected, {} undetected, {} timed out ({:.1}% detected)",
        report.total_sites,
        report.mutants.len(),
        report.detected(),
        report.undetected(),
        report.timeouts(),
        report.percentage()
    );
    out
}
