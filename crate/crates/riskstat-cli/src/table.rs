//! Aligned-text rendering of a run report.

use crate::run::RunReport;

fn fmt_value(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:.9}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), fmt_value)
}

fn render_rows(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |cells: &[String], widths: &[usize]| -> String {
        cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let header_cells: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    out.push_str(&line(&header_cells, &widths));
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row, &widths));
        out.push('\n');
    }
    out
}

/// Renders the human-readable table view.
pub fn render(report: &RunReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "riskstat {} (core {}), seed {}\n\n",
        report.versions.cli, report.versions.riskstat, report.config.seed
    ));

    if !report.suites.is_empty() {
        let rows: Vec<Vec<String>> = report
            .suites
            .iter()
            .map(|s| {
                vec![
                    s.suite.clone(),
                    s.subject.clone(),
                    s.report.trials.to_string(),
                    s.report.violations.to_string(),
                    s.report.skipped.to_string(),
                    format!("{:+.3e}", s.report.worst_margin),
                ]
            })
            .collect();
        out.push_str(&render_rows(
            &["suite", "subject", "trials", "violations", "skipped", "worst margin"],
            &rows,
        ));
        out.push('\n');
    }

    if !report.evaluations.is_empty() {
        let rows: Vec<Vec<String>> = report
            .evaluations
            .iter()
            .map(|e| {
                vec![
                    e.index.to_string(),
                    fmt_value(e.value),
                    fmt_opt(e.primal.as_ref().map(|p| p.analytic)),
                    fmt_opt(e.primal.as_ref().map(|p| p.numeric)),
                    fmt_opt(e.dual.as_ref().map(|d| d.value)),
                    fmt_opt(e.dual.as_ref().and_then(|d| d.gap.as_ref()).map(|g| g.gap)),
                    e.decompose.as_ref().map_or_else(
                        || "-".into(),
                        |d| {
                            d.error
                                .clone()
                                .unwrap_or_else(|| fmt_opt(d.residual))
                        },
                    ),
                ]
            })
            .collect();
        out.push_str(&render_rows(
            &["input", "rho", "primal", "primal(grid)", "dual", "gap", "decompose"],
            &rows,
        ));
        out.push('\n');
    }

    out.push_str(&format!(
        "inputs: {}  violations: {}  skipped: {}  max gap: {}  status: {}\n",
        report.summary.inputs,
        report.summary.total_violations,
        report.summary.total_skipped,
        fmt_opt(report.summary.max_gap),
        if report.summary.clean { "clean" } else { "VIOLATIONS" }
    ));

    if let Some(timings) = &report.timings_ms {
        out.push('\n');
        for (stage, ms) in timings {
            out.push_str(&format!("{stage}: {ms:.1} ms\n"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;
    use crate::run::{run, Stages};
    use riskstat::{ScenarioSpace, ScenarioVector};

    #[test]
    fn renders_all_sections() {
        let config: RunConfig = toml::from_str(
            r#"
            seed = 1
            [space]
            k = [2, 1]
            [simple]
            family = "max"
            [clustering]
            family = "neg-average"
            gamma = [1.0, 1.0]
            [trials]
            default = 50
        "#,
        )
        .unwrap();
        let space = ScenarioSpace::new(vec![2, 1]).unwrap();
        let inputs = vec![ScenarioVector::from_flat(space, &[1.0, 3.0, 2.0]).unwrap()];
        let report = run(&config, &inputs, Stages::everything(), true).unwrap();
        let text = render(&report);
        assert!(text.contains("suite"));
        assert!(text.contains("rho"));
        assert!(text.contains("status"));
        assert!(text.contains("ms"));
    }
}
