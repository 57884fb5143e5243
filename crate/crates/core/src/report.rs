//! Deterministic rendering of evaluation reports.
//!
//! Files written by [`write_report`] for a stem `S`:
//!
//! * `S.json` – the full report (confusion matrix, per-class scores, averages).
//! * `S.txt` – aligned table, four decimals.
//! * `S_scores.csv` – `class,precision,recall,f1,support`, one row per class
//!   in label-map order, then `macro_avg`, `weighted_avg` and `accuracy` rows
//!   (their f1 column carries the value, other numeric columns are empty).
//! * `S_confusion.csv` – header `truth\pred,<class...>`, then one row per true
//!   class with integer counts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::binio::write_file;
use crate::error::{Error, Result};
use crate::metrics::{ConfusionMatrix, EvaluationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" | "txt" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::ConfigInvalid(format!("unknown report format `{other}`"))),
        }
    }
}

pub fn render_text(report: &EvaluationReport) -> String {
    let width = report
        .per_class
        .iter()
        .map(|s| s.name.len())
        .chain(["weighted avg".len()])
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>9}  {:>9}  {:>9}  {:>9}",
        "class", "precision", "recall", "f1", "support"
    );
    for s in &report.per_class {
        let _ = writeln!(
            out,
            "{:<width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>9}",
            s.name, s.precision, s.recall, s.f1, s.support
        );
    }
    let total: u64 = report.per_class.iter().map(|s| s.support).sum();
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<width$}  {:>9}  {:>9}  {:>9.4}  {:>9}", "macro avg", "", "", report.macro_f1, total);
    let _ = writeln!(out, "{:<width$}  {:>9}  {:>9}  {:>9.4}  {:>9}", "weighted avg", "", "", report.weighted_f1, total);
    let _ = writeln!(out, "{:<width$}  {:>9}  {:>9}  {:>9.4}  {:>9}", "accuracy", "", "", report.accuracy, total);
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

pub fn render_scores_csv(report: &EvaluationReport) -> String {
    let mut out = String::from("class,precision,recall,f1,support\n");
    for s in &report.per_class {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{}",
            csv_field(&s.name),
            s.precision,
            s.recall,
            s.f1,
            s.support
        );
    }
    let _ = writeln!(out, "macro_avg,,,{:.6},", report.macro_f1);
    let _ = writeln!(out, "weighted_avg,,,{:.6},", report.weighted_f1);
    let _ = writeln!(out, "accuracy,,,{:.6},", report.accuracy);
    out
}

pub fn render_confusion_csv(cm: &ConfusionMatrix) -> String {
    let mut out = String::from("truth\\pred");
    for name in cm.class_names() {
        out.push(',');
        out.push_str(&csv_field(name));
    }
    out.push('\n');
    for (i, name) in cm.class_names().iter().enumerate() {
        out.push_str(&csv_field(name));
        for c in &cm.counts()[i] {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
    }
    out
}

pub fn render_json(report: &EvaluationReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn parse_json(text: &str) -> Result<EvaluationReport> {
    serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(format!("report JSON: {e}")))
}

/// Writes the files for `format` into `dir`; returns the paths written.
pub fn report_render(
    report: &EvaluationReport,
    format: ReportFormat,
    dir: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>> {
    let files: Vec<(PathBuf, String)> = match format {
        ReportFormat::Text => vec![(dir.join(format!("{stem}.txt")), render_text(report))],
        ReportFormat::Csv => vec![
            (dir.join(format!("{stem}_scores.csv")), render_scores_csv(report)),
            (
                dir.join(format!("{stem}_confusion.csv")),
                render_confusion_csv(&report.confusion),
            ),
        ],
        ReportFormat::Json => vec![(dir.join(format!("{stem}.json")), render_json(report))],
    };
    let mut written = Vec::with_capacity(files.len());
    for (path, body) in files {
        write_file(&path, body.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

/// All formats at once.
pub fn write_report(report: &EvaluationReport, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for format in [ReportFormat::Json, ReportFormat::Text, ReportFormat::Csv] {
        out.extend(report_render(report, format, dir, stem)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> EvaluationReport {
        EvaluationReport::from_confusion(
            ConfusionMatrix::from_counts(
                vec!["Benign".into(), "Bot".into()],
                vec![vec![2, 0], vec![1, 1]],
            )
            .unwrap(),
        )
    }

    #[test]
    fn text_shows_macro_f1() {
        let text = render_text(&fixture());
        let macro_line = text.lines().find(|l| l.starts_with("macro avg")).unwrap();
        assert!(macro_line.contains("0.7333"), "{macro_line}");
    }

    #[test]
    fn perfect_report_renders_ones() {
        let r = EvaluationReport::from_confusion(
            ConfusionMatrix::from_counts(vec!["a".into(), "b".into()], vec![vec![3, 0], vec![0, 2]]).unwrap(),
        );
        let text = render_text(&r);
        assert_eq!(text.matches("1.0000").count(), 2 * 3 + 3);
    }

    #[test]
    fn csv_layouts() {
        let r = fixture();
        let scores = render_scores_csv(&r);
        assert!(scores.starts_with("class,precision,recall,f1,support\nBenign,0.666667,1.000000,0.800000,2\n"));
        assert!(scores.contains("macro_avg,,,0.733333,"));
        assert_eq!(render_confusion_csv(&r.confusion), "truth\\pred,Benign,Bot\nBenign,2,0\nBot,1,1\n");
    }

    #[test]
    fn json_round_trip_and_stable_bytes() {
        let r = fixture();
        let a = render_json(&r);
        assert_eq!(a, render_json(&r));
        assert_eq!(parse_json(&a).unwrap(), r);
    }
}
