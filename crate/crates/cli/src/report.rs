//! Report data model and serialization: deterministic JSON with
//! round-trip-safe reals (17 significant digits), a human-readable table
//! with 6 significant digits, and the trace CSV writer.

use newton_cert::{Certificate, ComparisonVerdict, NewtonTrace, TerminalStatus};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Machine-readable certification/run report.
///
/// Serialization is deterministic: struct field order is fixed and reals
/// print with 17 significant digits, so a serialized report re-parses
/// field-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub problem_name: String,
    pub eta: f64,
    pub modulus_description: String,
    pub certificates: Vec<CertificateReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub comparison: Option<ComparisonReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trace_summary: Option<TraceSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub criterion: String,
    pub passed: bool,
    pub eta: f64,
    /// None encodes an unbounded admissible eta (affine limit).
    pub eta_max: Option<f64>,
    pub v_star: Option<f64>,
    pub diagnostics: Vec<(String, f64)>,
}

impl From<&Certificate> for CertificateReport {
    fn from(c: &Certificate) -> Self {
        CertificateReport {
            criterion: c.criterion.as_str().to_string(),
            passed: c.passed,
            eta: c.eta,
            eta_max: c.eta_max.is_finite().then_some(c.eta_max),
            v_star: c.v_star,
            diagnostics: c
                .diagnostics
                .iter()
                .filter(|(_, v)| v.is_finite())
                .cloned()
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub ratio: f64,
    pub critical_ratio: f64,
    pub new_weaker_than_kantorovich: bool,
}

impl From<&ComparisonVerdict> for ComparisonReport {
    fn from(v: &ComparisonVerdict) -> Self {
        ComparisonReport {
            ratio: v.ratio,
            critical_ratio: v.critical_ratio,
            new_weaker_than_kantorovich: v.new_weaker_than_kantorovich,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub status: String,
    pub iterations: usize,
    pub final_residual: f64,
    pub final_error_bound: Option<f64>,
    pub audits_passed: bool,
}

pub fn status_name(status: TerminalStatus) -> &'static str {
    match status {
        TerminalStatus::ConvergedToRoot => "converged-to-root",
        TerminalStatus::AuditViolation => "audit-violation",
        TerminalStatus::SingularJacobian => "singular-jacobian",
        TerminalStatus::MaxIterations => "max-iterations",
    }
}

impl TraceSummary {
    pub fn from_trace(trace: &NewtonTrace) -> Self {
        TraceSummary {
            status: status_name(trace.status).to_string(),
            iterations: trace.iterations(),
            final_residual: trace.final_residual(),
            final_error_bound: trace.final_error_bound,
            audits_passed: trace.audits_passed(),
        }
    }
}

/// JSON formatter printing every real with 17 significant digits
/// (round-trip exact for f64).
struct SigDigitFormatter;

impl serde_json::ser::Formatter for SigDigitFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes a report to its canonical JSON form.
pub fn to_json(report: &Report) -> String {
    let mut out = Vec::new();
    let mut serializer = serde_json::Serializer::with_formatter(&mut out, SigDigitFormatter);
    report
        .serialize(&mut serializer)
        .expect("report serialization cannot fail");
    String::from_utf8(out).expect("JSON is UTF-8")
}

pub fn from_json(text: &str) -> serde_json::Result<Report> {
    serde_json::from_str(text)
}

/// 6-significant-digit rendering for the human tables.
pub fn fmt6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let magnitude = x.abs().log10().floor() as i32;
    if (-4..6).contains(&magnitude) {
        let decimals = (5 - magnitude).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}

/// Renders the certificate table.
pub fn render_table(report: &Report) -> String {
    let mut out = String::new();
    out.push_str(&format!("problem: {}\n", report.problem_name));
    out.push_str(&format!("eta: {}\n", fmt6(report.eta)));
    out.push_str(&format!("modulus: {}\n\n", report.modulus_description));
    out.push_str(&format!(
        "{:<15} {:<7} {:<13} {:<13} diagnostics\n",
        "criterion", "passed", "eta_max", "v_star"
    ));
    for cert in &report.certificates {
        let eta_max = cert.eta_max.map_or("inf".to_string(), fmt6);
        let v_star = cert.v_star.map_or("-".to_string(), fmt6);
        let diagnostics = cert
            .diagnostics
            .iter()
            .map(|(name, value)| format!("{name}={}", fmt6(*value)))
            .collect::<Vec<_>>()
            .join(" ");
        out.push_str(&format!(
            "{:<15} {:<7} {:<13} {:<13} {}\n",
            cert.criterion,
            if cert.passed { "yes" } else { "no" },
            eta_max,
            v_star,
            diagnostics
        ));
    }
    out.push_str(&format!(
        "\nthresholds: new-condition 3-2*sqrt(2) = {}, argyros (linear) 0.1, alternative (2-sqrt(3))/2 = {}\n",
        fmt6(3.0 - 2.0 * std::f64::consts::SQRT_2),
        fmt6((2.0 - 3.0_f64.sqrt()) / 2.0),
    ));
    if let Some(cmp) = &report.comparison {
        let verdict = if cmp.new_weaker_than_kantorovich {
            "new condition admits larger eta than Kantorovich"
        } else {
            "Kantorovich admits at least as large an eta"
        };
        out.push_str(&format!(
            "comparison: l0/l = {} vs critical ratio 6-4*sqrt(2) = {} -> {}\n",
            fmt6(cmp.ratio),
            fmt6(cmp.critical_ratio),
            verdict
        ));
    }
    if let Some(summary) = &report.trace_summary {
        out.push_str(&format!(
            "run: status={} iterations={} final_residual={} audits_passed={}{}\n",
            summary.status,
            summary.iterations,
            fmt6(summary.final_residual),
            summary.audits_passed,
            summary
                .final_error_bound
                .map(|b| format!(" final_error_bound={}", fmt6(b)))
                .unwrap_or_default(),
        ));
    }
    out
}

/// Writes the per-iterate trace CSV (LF line endings, header row). Certified
/// traces carry the majorant columns; uncertified ones do not. Step-scoped
/// cells are empty on the final row, which has no outgoing step.
pub fn write_trace_csv<W: Write>(writer: &mut W, trace: &NewtonTrace) -> std::io::Result<()> {
    let dim = trace.iterates.first().map_or(0, |x| x.dim());
    let certified = !trace.majorant_values.is_empty();
    let mut header: Vec<String> = vec!["k".into()];
    header.extend((1..=dim).map(|i| format!("x{i}")));
    header.push("step_norm".into());
    if certified {
        header.push("v_k".into());
        header.push("v_gap".into());
    }
    header.push("residual".into());
    if certified {
        header.push("step_bound_ok".into());
        header.push("ball_ok".into());
    }
    writeln!(writer, "{}", header.join(","))?;

    let v_last = trace.majorant_values.last().copied().unwrap_or(0.0);
    for (k, x) in trace.iterates.iter().enumerate() {
        let mut cells: Vec<String> = vec![k.to_string()];
        cells.extend(x.as_slice().iter().map(|v| format!("{v:.16e}")));
        cells.push(
            trace
                .step_norms
                .get(k)
                .map(|s| format!("{s:.16e}"))
                .unwrap_or_default(),
        );
        if certified {
            let v_k = trace.majorant_values.get(k).copied().unwrap_or(v_last);
            cells.push(format!("{v_k:.16e}"));
            match trace.v_star {
                Some(v_star) => cells.push(format!("{:.16e}", (v_star - v_k).max(0.0))),
                None => cells.push(String::new()),
            }
        }
        cells.push(format!("{:.16e}", trace.residual_norms[k]));
        if certified {
            match trace.audits.get(k) {
                Some(audit) => {
                    cells.push(audit.step_bound_ok.to_string());
                    cells.push(audit.ball_ok.to_string());
                }
                None => {
                    cells.push(String::new());
                    cells.push(String::new());
                }
            }
        }
        writeln!(writer, "{}", cells.join(","))?;
    }
    Ok(())
}
