//! Plain-text tables and CSV output.

use std::fmt::Write;
use std::path::Path;

use rigidtop::certificate::{CertificateFile, ReplayReport};
use rigidtop::rational::{format_rational, parse_rational, Rational};

const RIGIDITY_PREFIX: &str = "rigidity-defect[";

pub fn summary(file: &CertificateFile) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "group {}  profile {}  policy {}",
        file.group.label, file.profile.settings.rule, file.profile.policy
    );
    let _ = writeln!(
        out,
        "{:>5} {:>8} {:>22} {:>10} {:>12} {:>14} {:>7}",
        "stage", "M_n", "modulus", "|supp|", "max defect", "zero windows", "checks"
    );
    for s in &file.stages {
        let max_defect = s
            .checks
            .iter()
            .filter(|c| c.name.starts_with(RIGIDITY_PREFIX))
            .filter_map(|c| parse_rational(&c.value).ok())
            .max()
            .map_or("-".to_string(), |d| format_rational(&d));
        let zero = match s.zero_windows.total {
            Some(t) => t.to_string(),
            None => format!("{}+", s.zero_windows.witnesses.len()),
        };
        let gating: Vec<_> = s.checks.iter().filter(|c| c.gating).collect();
        let passed = gating.iter().filter(|c| c.passed).count();
        let _ = writeln!(
            out,
            "{:>5} {:>8} {:>22} {:>10} {:>12} {:>14} {:>7}",
            s.n,
            s.steps,
            s.quotient.modulus,
            s.psi.support_size,
            max_defect,
            zero,
            format!("{passed}/{}", gating.len())
        );
    }
    let f = file.topology.flags;
    let _ = writeln!(
        out,
        "hausdorff {}  non-discrete {}  non-precompact {}",
        f.hausdorff, f.non_discrete, f.non_precompact
    );
    out
}

pub fn replay_table(report: &ReplayReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "replay backend: {}", report.backend);
    for item in &report.items {
        if item.agrees {
            let _ = writeln!(out, "ok        {}", item.field);
        } else {
            let _ = writeln!(out, "MISMATCH  {}", item.field);
            let _ = writeln!(out, "          recorded:   {}", item.recorded);
            let _ = writeln!(out, "          recomputed: {}", item.recomputed);
        }
    }
    let bad = report.mismatches().len();
    let _ = writeln!(out, "{} checks, {} mismatches", report.items.len(), bad);
    out
}

/// One `s ∈ F_i` at one stage `n`.
pub struct RigidityRow {
    pub stage: usize,
    pub index: usize,
    pub element: String,
    pub defect: Rational,
    pub derived: Rational,
    pub sum_a: Option<Rational>,
    pub sum_b: Option<Rational>,
}

pub fn rigidity_rows(file: &CertificateFile) -> Result<Vec<RigidityRow>, String> {
    let mut rows = Vec::new();
    for s in &file.stages {
        for c in &s.checks {
            let Some(key) = c.name.strip_prefix(RIGIDITY_PREFIX).and_then(|k| k.strip_suffix(']')) else {
                continue;
            };
            let (index, element) = key
                .strip_prefix('F')
                .and_then(|k| k.split_once(':'))
                .ok_or_else(|| format!("unrecognized check name {}", c.name))?;
            let index: usize = index.parse().map_err(|_| format!("unrecognized check name {}", c.name))?;
            let parse = |t: &str| parse_rational(t).map_err(|e| e.to_string());
            let bound_of = |prefix: &str| s.check(&format!("{prefix}[{key}]")).map(|c| parse(&c.bound)).transpose();
            rows.push(RigidityRow {
                stage: s.n,
                index,
                element: element.to_string(),
                defect: parse(&c.value)?,
                derived: parse(&c.bound)?,
                sum_a: bound_of("telescoped-a")?,
                sum_b: bound_of("telescoped-b")?,
            });
        }
    }
    Ok(rows)
}

fn compare(defect: Rational, bound: Option<Rational>) -> String {
    match bound {
        Some(b) => format!("{} {}", if defect < b { "<" } else { ">=" }, format_rational(&b)),
        None => "-".into(),
    }
}

pub fn rigidity_table(rows: &[RigidityRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>5} {:>3} {:>28} {:>12} {:>16} {:>18} {:>18}",
        "stage", "i", "s", "defect", "1/(M_{i+1}+1)", "sum 1/M_{j+1}, j>=i", "sum 1/M_j, j>i"
    );
    for r in rows {
        let derived = format!("{} {}", if r.defect <= r.derived { "<=" } else { ">" }, format_rational(&r.derived));
        let _ = writeln!(
            out,
            "{:>5} {:>3} {:>28} {:>12} {:>16} {:>18} {:>18}",
            r.stage,
            r.index,
            r.element,
            format_rational(&r.defect),
            derived,
            compare(r.defect, r.sum_a),
            compare(r.defect, r.sum_b)
        );
    }
    out
}

pub fn write_plot(rows: &[RigidityRow], path: &Path) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["stage", "rigidity_index", "element", "defect", "defect_decimal"])?;
    for r in rows {
        let decimal = *r.defect.numer() as f64 / *r.defect.denom() as f64;
        w.write_record([
            r.stage.to_string(),
            r.index.to_string(),
            r.element.clone(),
            format_rational(&r.defect),
            format!("{decimal:.12}"),
        ])?;
    }
    w.flush()?;
    Ok(())
}
