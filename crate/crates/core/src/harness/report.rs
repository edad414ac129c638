use std::fmt::Write as _;

use serde::Serialize;

use super::{FunctionResult, TestReport};
use crate::domains::DomainParams;
use crate::interp::FaultRecord;
use crate::syntax::Program;

/// JSON layout version.
pub const SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReportOptions {
    /// Include wall-clock timings; off by default so reports are reproducible.
    pub timings: bool,
}

/// Header line shared by all report formats.
pub fn header(report: &TestReport) -> String {
    let c = &report.config;
    format!("seed {}, rate {}, {}", c.seed, c.rate, c.params)
}

pub fn render_text(report: &TestReport, program: &Program, opts: ReportOptions) -> String {
    let src = &program.source;
    let mut out = String::new();
    let _ = writeln!(out, "speccheck {}", report.path);
    let _ = writeln!(out, "{}", header(report));
    for r in &report.results {
        let status = match (r.passed(), &r.note) {
            (false, _) => "FAIL",
            (true, Some(_)) => "SKIP",
            (true, None) if r.timed_out => "TIMEOUT",
            (true, None) => "ok",
        };
        let _ = write!(
            out,
            "{:<8} {}: domain {}, sampled {}, meaningless {}, executed {}, inconclusive {}",
            status,
            r.signature,
            r.domain_size,
            r.sampled,
            r.meaningless,
            r.executed,
            r.inconclusive
        );
        if opts.timings {
            let _ = write!(out, ", {} ms", r.elapsed.as_millis());
        }
        out.push('\n');
        if let Some(note) = &r.note {
            let _ = writeln!(out, "    {note}");
        }
        for f in &r.failures {
            let _ = writeln!(out, "    counterexample: {}", f.counterexample(&r.name));
            let trace = f.fault.format_trace(&src.path, &src.text, &src.line_index);
            for line in trace.lines() {
                let _ = writeln!(out, "    {line}");
            }
        }
    }
    let _ = writeln!(
        out,
        "{} tested, {} failing",
        report.results.len(),
        report.failing()
    );
    out
}

#[derive(Serialize)]
struct JsonReport<'a> {
    schema: u32,
    file: &'a str,
    seed: u64,
    rate: f64,
    params: DomainParams,
    functions: Vec<JsonFunction>,
    failing: usize,
}

#[derive(Serialize)]
struct JsonFunction {
    name: String,
    signature: String,
    domain_size: String,
    sampled: u64,
    meaningless: u64,
    executed: u64,
    inconclusive: u64,
    timed_out: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    elapsed_ms: Option<u128>,
    failures: Vec<JsonFailure>,
}

#[derive(Serialize)]
struct JsonFailure {
    #[serde(flatten)]
    fault: FaultRecord,
    index: String,
    counterexample: String,
    trace: String,
}

fn json_function(r: &FunctionResult, program: &Program, opts: ReportOptions) -> JsonFunction {
    let src = &program.source;
    JsonFunction {
        name: r.name.clone(),
        signature: r.signature.clone(),
        domain_size: r.domain_size.to_string(),
        sampled: r.sampled,
        meaningless: r.meaningless,
        executed: r.executed,
        inconclusive: r.inconclusive,
        timed_out: r.timed_out,
        note: r.note.clone(),
        elapsed_ms: opts.timings.then_some(r.elapsed.as_millis()),
        failures: r
            .failures
            .iter()
            .map(|f| JsonFailure {
                fault: f.fault.record(&src.path),
                index: f.index.to_string(),
                counterexample: f.counterexample(&r.name),
                trace: f.fault.format_trace(&src.path, &src.text, &src.line_index),
            })
            .collect(),
    }
}

pub fn render_json(report: &TestReport, program: &Program, opts: ReportOptions) -> String {
    let doc = JsonReport {
        schema: SCHEMA,
        file: &report.path,
        seed: report.config.seed,
        rate: report.config.rate,
        params: report.config.params,
        functions: report
            .results
            .iter()
            .map(|r| json_function(r, program, opts))
            .collect(),
        failing: report.failing(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("report serialises");
    text.push('\n');
    text
}

#[derive(Serialize)]
struct CsvRow<'a> {
    signature: &'a str,
    domain_size: String,
    sampled: u64,
    meaningless: u64,
    executed: u64,
    inconclusive: u64,
    failures: usize,
    timed_out: bool,
    first_fault: Option<crate::interp::FaultKind>,
    elapsed_ms: Option<u128>,
}

/// One row per declaration.
pub fn render_csv(report: &TestReport, opts: ReportOptions) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &report.results {
        w.serialize(CsvRow {
            signature: &r.signature,
            domain_size: r.domain_size.to_string(),
            sampled: r.sampled,
            meaningless: r.meaningless,
            executed: r.executed,
            inconclusive: r.inconclusive,
            failures: r.failures.len(),
            timed_out: r.timed_out,
            first_fault: r.failures.first().map(|f| f.fault.kind),
            elapsed_ms: opts.timings.then_some(r.elapsed.as_millis()),
        })
        .expect("csv row");
    }
    String::from_utf8(w.into_inner().expect("csv flush")).expect("utf-8")
}
