//! The run / sweep / train / compare pipelines behind the CLI.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::analytics::{
    compare_routers, compute_report, write_outputs, ComparisonRow, MessageStatsReport, OutputError,
    ReportError, ReportRow, StatTestResult,
};
use crate::config::{parse_raw, ConfigError, Scenario, ScenarioConfig};
use crate::events::{EventLog, LogError};
use crate::ml::{
    build_dataset, evaluate_model, split_dataset, train_gbdt, Dataset, DatasetError, GbdtModel,
    GbdtParams, ModelError, TrainError, TrainReport, FEATURE_NAMES,
};
use crate::routing::RouterKind;
use crate::sim::{run_simulation, SimError};

pub const DEFAULT_GRID_CAP: usize = 10_000;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("log `{}`: {source}", path.display())]
    Log { path: PathBuf, source: LogError },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("sweep needs at least one axis")]
    NoAxes,
    #[error("axis `{0}` has no values")]
    EmptyAxis(String),
    #[error("axis `{0}`: {1}")]
    BadAxis(String, String),
    #[error("sweep of {runs} runs exceeds the cap of {cap}")]
    GridCap { runs: usize, cap: usize },
    #[error("compare needs at least two routers")]
    TooFewRouters,
    #[error("need at least {0} seeds")]
    TooFewSeeds(u64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug)]
pub struct RunOutput {
    pub log: EventLog,
    pub report: MessageStatsReport,
    pub files: Vec<PathBuf>,
}

/// Runs one simulation and writes `events.csv` and `reports.csv` to `out_dir`.
pub fn cmd_run(
    config: &ScenarioConfig,
    seed: Option<u64>,
    out_dir: &Path,
    plots: bool,
) -> Result<RunOutput, CommandError> {
    let seed = seed.unwrap_or(config.seed);
    let scenario = Scenario::resolve(config.clone())?;
    let log = run_simulation(&scenario, seed)?;
    let report = compute_report(&log)?;
    fs::create_dir_all(out_dir)?;
    let events_path = out_dir.join("events.csv");
    fs::write(&events_path, log.to_csv())?;
    let row = ReportRow {
        scenario_id: config.name.clone(),
        seed,
        router: config.router_label(),
        report: report.clone(),
    };
    let mut files = vec![events_path];
    files.extend(write_outputs(&[row], &[], out_dir, plots)?);
    Ok(RunOutput { log, report, files })
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: ScenarioConfig,
    /// Parameter name and its values, outermost axis first.
    pub axes: Vec<(String, Vec<String>)>,
    pub seeds: u64,
    pub cap: usize,
}

impl SweepSpec {
    pub fn new(base: ScenarioConfig, axes: Vec<(String, Vec<String>)>) -> Self {
        Self {
            base,
            axes,
            seeds: 10,
            cap: DEFAULT_GRID_CAP,
        }
    }

    /// Parses `name=v1,v2,...`.
    pub fn parse_axis(text: &str) -> Result<(String, Vec<String>), CommandError> {
        let (name, vals) = text.split_once('=').ok_or_else(|| {
            CommandError::BadAxis(text.to_string(), "expected name=v1,v2,...".into())
        })?;
        let vals: Vec<String> = vals
            .split(',')
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect();
        if vals.is_empty() {
            return Err(CommandError::EmptyAxis(name.trim().to_string()));
        }
        Ok((name.trim().to_string(), vals))
    }

    pub fn cell_count(&self) -> usize {
        self.axes.iter().map(|(_, v)| v.len()).product()
    }

    /// Every grid cell as its list of (axis, value) settings.
    pub fn cells(&self) -> Vec<Vec<(String, String)>> {
        let mut cells = vec![Vec::new()];
        for (name, vals) in &self.axes {
            cells = cells
                .into_iter()
                .flat_map(|cell| {
                    vals.iter().map(move |v| {
                        let mut c = cell.clone();
                        c.push((name.clone(), v.clone()));
                        c
                    })
                })
                .collect();
        }
        cells
    }

    fn check(&self) -> Result<(), CommandError> {
        if self.axes.is_empty() {
            return Err(CommandError::NoAxes);
        }
        if let Some((name, _)) = self.axes.iter().find(|(_, v)| v.is_empty()) {
            return Err(CommandError::EmptyAxis(name.clone()));
        }
        if self.seeds == 0 {
            return Err(CommandError::TooFewSeeds(1));
        }
        let runs = self.cell_count().saturating_mul(self.seeds as usize);
        if runs > self.cap {
            return Err(CommandError::GridCap {
                runs,
                cap: self.cap,
            });
        }
        Ok(())
    }
}

/// Config keys an axis name sets. Full `Section.key` names pass through;
/// bare group fields apply to every group; `nodeCount` needs one group.
fn axis_keys(base: &ScenarioConfig, name: &str) -> Result<Vec<String>, CommandError> {
    if name.contains('.') {
        return Ok(vec![name.to_string()]);
    }
    let groups = base.groups.len();
    match name {
        "nodeCount" if groups == 1 => Ok(vec!["Group1.count".into()]),
        "nodeCount" => Err(CommandError::BadAxis(
            name.into(),
            "ambiguous with several groups; use GroupK.count".into(),
        )),
        "duration" | "step" | "map" | "ttl" => Ok(vec![format!("Scenario.{name}")]),
        "count" | "speedMin" | "speedMax" | "pauseMin" | "pauseMax" | "range" | "bitrate"
        | "bufferSize" | "router" | "snwCopies" | "hopThreshold" | "mlThreshold" | "modelPath" => {
            Ok((1..=groups).map(|k| format!("Group{k}.{name}")).collect())
        }
        "intervalMin" | "intervalMax" | "sizeMin" | "sizeMax" | "srcHosts" | "dstHosts" => {
            Ok(vec![format!("Traffic.{name}")])
        }
        _ => Err(CommandError::BadAxis(
            name.into(),
            "unknown parameter".into(),
        )),
    }
}

fn cell_config(
    base: &ScenarioConfig,
    cell: &[(String, String)],
) -> Result<ScenarioConfig, CommandError> {
    let mut raw = parse_raw(&base.to_text())?;
    let mut tag = Vec::new();
    for (name, value) in cell {
        for key in axis_keys(base, name)? {
            raw.insert(key, value.clone());
        }
        tag.push(format!("{name}={value}"));
    }
    let mut cfg = ScenarioConfig::from_raw(&raw, None)?;
    cfg.name = format!("{}[{}]", base.name, tag.join(";"));
    Ok(cfg)
}

/// One run per (cell, seed) with seeds `0..seeds`; writes the combined
/// `reports.csv` to `out_dir`.
pub fn cmd_sweep(spec: &SweepSpec, out_dir: &Path) -> Result<Vec<ReportRow>, CommandError> {
    spec.check()?;
    let configs: Vec<ScenarioConfig> = spec
        .cells()
        .iter()
        .map(|cell| cell_config(&spec.base, cell))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::with_capacity(configs.len() * spec.seeds as usize);
    for cfg in configs {
        let scenario = Scenario::resolve(cfg)?;
        for seed in 0..spec.seeds {
            log::info!("sweep {} seed {seed}", scenario.config.name);
            let log = run_simulation(&scenario, seed)?;
            rows.push(ReportRow {
                scenario_id: scenario.config.name.clone(),
                seed,
                router: scenario.config.router_label(),
                report: compute_report(&log)?,
            });
        }
    }
    write_outputs(&rows, &[], out_dir, false)?;
    Ok(rows)
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub model: GbdtModel,
    pub report: TrainReport,
    pub summary: String,
}

pub fn read_log(path: &Path) -> Result<EventLog, CommandError> {
    let file = File::open(path)?;
    EventLog::read_csv(BufReader::new(file)).map_err(|source| CommandError::Log {
        path: path.to_path_buf(),
        source,
    })
}

/// Builds one dataset from every log, splits it, trains, evaluates on the
/// held-out part and saves the model to `out`.
pub fn cmd_train(
    logs: &[PathBuf],
    params: &GbdtParams,
    split_seed: u64,
    train_fraction: f64,
    out: &Path,
) -> Result<TrainOutcome, CommandError> {
    let mut data = Dataset::default();
    for path in logs {
        data.extend(build_dataset(&read_log(path)?)?);
    }
    let (train, test) = split_dataset(&data, train_fraction, split_seed)?;
    let (model, mut report) = train_gbdt(&train, params)?;
    report.n_test = test.len();
    if !test.is_empty() {
        report.test = Some(evaluate_model(&model, &test));
    }
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    model.save(out)?;
    let summary = train_summary(&data, &report);
    Ok(TrainOutcome {
        model,
        report,
        summary,
    })
}

fn train_summary(data: &Dataset, report: &TrainReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "examples: {} ({} positive), train {}, test {}",
        data.len(),
        data.positives(),
        report.n_train,
        report.n_test
    );
    let _ = writeln!(s, "train log loss: {:.5}", report.train_log_loss());
    let _ = writeln!(s, "gain importance:");
    for (name, g) in FEATURE_NAMES.iter().zip(report.gains) {
        let share = if report.total_gain > 0.0 {
            g / report.total_gain
        } else {
            0.0
        };
        let _ = writeln!(s, "  {name:<18} {g:>14.4} ({:.1}%)", share * 100.0);
    }
    if let Some(ev) = &report.test {
        let auc = ev
            .auc
            .map_or("undefined".to_string(), |a| format!("{a:.4}"));
        let _ = writeln!(
            s,
            "test: auc {auc}, accuracy {:.4}, log loss {:.5}",
            ev.accuracy, ev.log_loss
        );
    }
    s
}

#[derive(Debug)]
pub struct CompareOutcome {
    pub rows: Vec<ReportRow>,
    pub tests: Vec<ComparisonRow>,
    pub verdict: String,
}

/// Runs every router on seeds `0..seeds` of the same config and tests each
/// metric for each router pair.
pub fn cmd_compare(
    config: &ScenarioConfig,
    routers: &[RouterKind],
    seeds: u64,
    out_dir: &Path,
    plots: bool,
) -> Result<CompareOutcome, CommandError> {
    if routers.len() < 2 {
        return Err(CommandError::TooFewRouters);
    }
    if seeds < 2 {
        return Err(CommandError::TooFewSeeds(2));
    }
    let mut rows = Vec::new();
    for &router in routers {
        let scenario = Scenario::resolve(config.with_router(router))?;
        for seed in 0..seeds {
            log::info!("compare {router} seed {seed}");
            let log = run_simulation(&scenario, seed)?;
            rows.push(ReportRow {
                scenario_id: config.name.clone(),
                seed,
                router: router.to_string(),
                report: compute_report(&log)?,
            });
        }
    }
    let names: Vec<String> = routers.iter().map(|r| r.to_string()).collect();
    let tests = compare_routers(&rows, &names);
    write_outputs(&rows, &tests, out_dir, plots)?;
    let verdict = verdict_text(&tests);
    Ok(CompareOutcome {
        rows,
        tests,
        verdict,
    })
}

fn verdict_text(tests: &[ComparisonRow]) -> String {
    let mut s = String::new();
    for t in tests {
        let _ = write!(
            s,
            "{:<15} {} vs {} ({}): ",
            t.metric, t.router_a, t.router_b, t.method
        );
        match &t.outcome {
            Ok(StatTestResult {
                statistic,
                p_value,
                significant,
                ..
            }) => {
                let mark = if *significant {
                    "significant"
                } else {
                    "not significant"
                };
                let _ = writeln!(s, "stat {statistic:.4}, p {p_value:.4} -> {mark}");
            }
            Err(e) => {
                let _ = writeln!(s, "degenerate ({e})");
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn base() -> ScenarioConfig {
        parse_config(
            "Scenario.duration = 300\nScenario.map = grid:3x3@50\nGroup1.count = 5\nGroup1.router = epidemic\nTraffic.intervalMin = 20\nTraffic.intervalMax = 30\n",
        )
        .unwrap()
    }

    #[test]
    fn sweep_cells_and_errors() {
        let mut spec = SweepSpec::new(base(), vec![]);
        assert!(matches!(spec.check(), Err(CommandError::NoAxes)));
        spec.axes = vec![
            SweepSpec::parse_axis("nodeCount=50,100,150").unwrap(),
            SweepSpec::parse_axis("range=50,100,150").unwrap(),
        ];
        assert_eq!(spec.cells().len(), 9);
        spec.cap = 50;
        assert!(matches!(
            spec.check(),
            Err(CommandError::GridCap { runs: 90, cap: 50 })
        ));
        assert!(matches!(
            SweepSpec::parse_axis("ttl="),
            Err(CommandError::EmptyAxis(_))
        ));
    }

    #[test]
    fn cell_config_applies_aliases() {
        let cell = vec![
            ("nodeCount".to_string(), "7".to_string()),
            ("ttl".to_string(), "300".to_string()),
        ];
        let cfg = cell_config(&base(), &cell).unwrap();
        assert_eq!(cfg.groups[0].count, 7);
        assert_eq!(cfg.ttl, 300.0);
        assert_eq!(cfg.name, "scenario[nodeCount=7;ttl=300]");
        assert!(cell_config(&base(), &[("colour".into(), "1".into())]).is_err());
    }

    #[test]
    fn sweep_row_count() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = SweepSpec::new(base(), vec![SweepSpec::parse_axis("ttl=100,200").unwrap()]);
        spec.seeds = 3;
        let rows = cmd_sweep(&spec, dir.path()).unwrap();
        assert_eq!(rows.len(), 6);
        let csv = fs::read_to_string(dir.path().join("reports.csv")).unwrap();
        assert_eq!(csv.lines().count(), 7);
    }

    #[test]
    fn compare_needs_two_routers() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            cmd_compare(&base(), &[RouterKind::Epidemic], 3, dir.path(), false),
            Err(CommandError::TooFewRouters)
        ));
    }
}
