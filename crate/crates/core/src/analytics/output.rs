//! CSV tables and SVG bar charts.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::report::{MessageStatsReport, Metric};
use super::stats::{paired_t_test, wilcoxon_signed_rank, StatError, StatTestResult, TestMethod};

pub const REPORTS_HEADER: &str = "scenario_id,seed,router,created,started,relayed,aborted,dropped,removed,delivered,delivery_prob,overhead_ratio,latency_avg,latency_med,hopcount_avg";
pub const COMPARISON_HEADER: &str =
    "metric,router_a,router_b,method,n,statistic,p_value,significant";

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("no reports to write")]
    Empty,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub scenario_id: String,
    pub seed: u64,
    pub router: String,
    pub report: MessageStatsReport,
}

/// One paired test between two routers on one metric.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub metric: String,
    pub router_a: String,
    pub router_b: String,
    pub method: TestMethod,
    pub outcome: Result<StatTestResult, StatError>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn reports_csv(rows: &[ReportRow]) -> String {
    let mut out = format!("{REPORTS_HEADER}\n");
    for row in rows {
        let r = &row.report;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.scenario_id,
            row.seed,
            row.router,
            r.created,
            r.started,
            r.relayed,
            r.aborted,
            r.dropped,
            r.removed,
            r.delivered,
            r.delivery_prob,
            opt(r.overhead_ratio),
            opt(r.latency_avg),
            opt(r.latency_med),
            opt(r.hopcount_avg),
        );
    }
    out
}

/// Degenerate tests keep their row, with empty numbers and `degenerate`
/// in the significance column.
pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = format!("{COMPARISON_HEADER}\n");
    for row in rows {
        let _ = write!(
            out,
            "{},{},{},{},",
            row.metric, row.router_a, row.router_b, row.method
        );
        match &row.outcome {
            Ok(t) => {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    t.n, t.statistic, t.p_value, t.significant
                );
            }
            Err(_) => out.push_str(",,,degenerate\n"),
        }
    }
    out
}

/// Paired per-seed values of `metric` for two routers. `rows` must hold
/// both routers for the same seeds; seeds where either value is undefined
/// are skipped.
pub fn paired_values(rows: &[ReportRow], metric: Metric, a: &str, b: &str) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for ra in rows.iter().filter(|r| r.router == a) {
        let Some(rb) = rows
            .iter()
            .find(|r| r.router == b && r.seed == ra.seed && r.scenario_id == ra.scenario_id)
        else {
            continue;
        };
        if let (Some(x), Some(y)) = (metric.of(&ra.report), metric.of(&rb.report)) {
            xs.push(x);
            ys.push(y);
        }
    }
    (xs, ys)
}

/// Both tests on every metric for every router pair.
pub fn compare_routers(rows: &[ReportRow], routers: &[String]) -> Vec<ComparisonRow> {
    let mut out = Vec::new();
    for metric in Metric::ALL {
        for (i, a) in routers.iter().enumerate() {
            for b in &routers[i + 1..] {
                let (xs, ys) = paired_values(rows, metric, a, b);
                for method in [TestMethod::PairedT, TestMethod::Wilcoxon] {
                    let outcome = match method {
                        TestMethod::PairedT => paired_t_test(&xs, &ys),
                        TestMethod::Wilcoxon => wilcoxon_signed_rank(&xs, &ys),
                    };
                    out.push(ComparisonRow {
                        metric: metric.as_str().to_string(),
                        router_a: a.clone(),
                        router_b: b.clone(),
                        method,
                        outcome,
                    });
                }
            }
        }
    }
    out
}

/// Writes `reports.csv`, `comparison.csv` (when `tests` is non-empty) and,
/// with `plots`, one SVG per headline metric. Returns the written paths.
pub fn write_outputs(
    reports: &[ReportRow],
    tests: &[ComparisonRow],
    out_dir: &Path,
    plots: bool,
) -> Result<Vec<PathBuf>, OutputError> {
    if reports.is_empty() {
        return Err(OutputError::Empty);
    }
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> io::Result<()> {
        let p = out_dir.join(name);
        fs::write(&p, body)?;
        written.push(p);
        Ok(())
    };
    put("reports.csv", reports_csv(reports))?;
    if !tests.is_empty() {
        put("comparison.csv", comparison_csv(tests))?;
    }
    if plots {
        for (metric, log_scale) in [
            (Metric::DeliveryProb, false),
            (Metric::OverheadRatio, true),
            (Metric::LatencyAvg, false),
        ] {
            put(
                &format!("{}.svg", metric.as_str()),
                bar_chart(reports, metric, log_scale),
            )?;
        }
    }
    Ok(written)
}

/// Mean of `metric` per router, in first-seen router order.
fn router_means(rows: &[ReportRow], metric: Metric) -> Vec<(String, Option<f64>)> {
    let mut routers: Vec<&str> = Vec::new();
    for r in rows {
        if !routers.contains(&r.router.as_str()) {
            routers.push(&r.router);
        }
    }
    routers
        .into_iter()
        .map(|name| {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| r.router == name)
                .filter_map(|r| metric.of(&r.report))
                .collect();
            let mean = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
            (name.to_string(), mean)
        })
        .collect()
}

fn bar_chart(rows: &[ReportRow], metric: Metric, log_scale: bool) -> String {
    const W: f64 = 480.0;
    const H: f64 = 320.0;
    const PAD: f64 = 50.0;
    let means = router_means(rows, metric);
    let scale = |v: f64| if log_scale { (v.max(1e-9)).log10() } else { v };
    let floor = if log_scale {
        means
            .iter()
            .filter_map(|(_, m)| *m)
            .map(scale)
            .fold(f64::INFINITY, f64::min)
            .floor()
            .min(0.0)
    } else {
        0.0
    };
    let top = means
        .iter()
        .filter_map(|(_, m)| *m)
        .map(scale)
        .fold(floor, f64::max);
    let span = if top > floor { top - floor } else { 1.0 };
    let plot_h = H - 2.0 * PAD;
    let slot = (W - 2.0 * PAD) / means.len().max(1) as f64;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let title = if log_scale {
        format!("{} (log scale)", metric.as_str())
    } else {
        metric.as_str().to_string()
    };
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle">{title}</text>"#,
        W / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{PAD}" y1="{y}" x2="{x2}" y2="{y}" stroke="black"/>"#,
        y = H - PAD,
        x2 = W - PAD
    );
    for (i, (name, mean)) in means.iter().enumerate() {
        let x = PAD + i as f64 * slot + slot * 0.15;
        let w = slot * 0.7;
        if let Some(m) = mean {
            let h = (scale(*m) - floor) / span * plot_h;
            let _ = writeln!(
                svg,
                r##"<rect x="{x:.1}" y="{:.1}" width="{w:.1}" height="{h:.1}" fill="#4878a8"/>"##,
                H - PAD - h
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{m:.4}</text>"#,
                x + w / 2.0,
                H - PAD - h - 4.0
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{name}</text>"#,
            x + w / 2.0,
            H - PAD + 16.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}
