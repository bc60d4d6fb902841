//! Batch evaluation over a dataset directory.
//!
//! Each task directory holds `metamodel.ecore`, `spec.txt`, and
//! `reference.xmi`. Generation runs live against a configured endpoint,
//! scripted from `mock_response.txt`, or is skipped entirely in offline
//! mode, which scores a pre-existing `generated.xmi`. The batch report
//! contains the validity rate and per-task metric rows; averages cover
//! the tasks that produced a scoreable model.

use crate::compile::CompileReport;
use crate::diag::write_jsonl;
use crate::ecore::parse_ecore;
use crate::eval::{canonicalize, compute_metrics, match_elements, MetricsReport, Rational};
use crate::llm::{generate_instance_model, generate_with_endpoint, LlmConfig, ScriptedEndpoint};
use crate::xmi::{parse_xmi, serialize_xmi};
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMode {
    /// Call the configured HTTP endpoint per task.
    Live,
    /// Use each task's `mock_response.txt` as the sole completion.
    Mock,
    /// Score each task's pre-generated `generated.xmi`; no generation.
    Offline,
}

#[derive(Debug)]
pub struct BenchOptions {
    pub mode: BenchMode,
    pub jobs: usize,
    /// When set, per-task artifacts plus `report.json` and `tasks.csv`
    /// are written under this directory.
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("dataset layout error: {0}")]
    DatasetLayout(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TaskRow {
    pub task: String,
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attempts: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsReport>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AverageRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ga: Option<f64>,
    pub sp: f64,
    pub sr: f64,
    pub sa: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AverageTable {
    pub objects: AverageRow,
    pub attributes: AverageRow,
    pub associations: AverageRow,
    pub overall: AverageRow,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BatchReport {
    pub task_count: u64,
    pub valid_count: u64,
    pub vr: Rational,
    /// Tasks that produced a scoreable model and therefore enter the
    /// averages; generation failures count against VR only.
    pub averaged_task_count: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub averages: Option<AverageTable>,
    pub tasks: Vec<TaskRow>,
}

struct TaskInput {
    name: String,
    ecore_text: String,
    spec_text: String,
    reference_text: String,
    mock_response: Option<String>,
    generated_text: Option<String>,
}

struct TaskResult {
    row: TaskRow,
    artifacts: Vec<(&'static str, String)>,
}

/// Runs every task in the dataset and assembles the batch report.
/// `config` may be omitted for mock and offline runs.
pub fn run_benchmark(
    dataset_dir: &Path,
    config: Option<&LlmConfig>,
    options: &BenchOptions,
) -> Result<BatchReport, BenchError> {
    if options.mode == BenchMode::Live && config.is_none() {
        return Err(BenchError::Config(
            "live mode requires an endpoint config".into(),
        ));
    }
    let fallback_config = LlmConfig {
        endpoint_base_url: String::new(),
        model_name: "scripted".into(),
        temperature: 0.0,
        max_output_tokens: 4096,
        api_key_env_var: String::new(),
        max_retries: 0,
        timeout_seconds: 60,
        omit_temperature: false,
    };
    let config = config.unwrap_or(&fallback_config);

    let tasks = discover_tasks(dataset_dir, options.mode)?;
    let results = run_all(&tasks, options, config);

    let rows: Vec<TaskRow> = results.iter().map(|r| r.row.clone()).collect();
    let report = assemble_report(rows);

    if let Some(out_dir) = &options.out_dir {
        write_outputs(out_dir, &report, &results)?;
    }
    Ok(report)
}

fn discover_tasks(dataset_dir: &Path, mode: BenchMode) -> Result<Vec<TaskInput>, BenchError> {
    let entries = fs::read_dir(dataset_dir).map_err(|source| BenchError::Io {
        path: dataset_dir.display().to_string(),
        source,
    })?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(BenchError::DatasetLayout(format!(
            "no task directories under {}",
            dataset_dir.display()
        )));
    }

    let mut tasks = Vec::with_capacity(dirs.len());
    for dir in dirs {
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let required = |file: &str| -> Result<String, BenchError> {
            let path = dir.join(file);
            if !path.is_file() {
                return Err(BenchError::DatasetLayout(format!(
                    "task '{name}' is missing {file}"
                )));
            }
            fs::read_to_string(&path).map_err(|source| BenchError::Io {
                path: path.display().to_string(),
                source,
            })
        };
        let ecore_text = required("metamodel.ecore")?;
        let spec_text = required("spec.txt")?;
        let reference_text = required("reference.xmi")?;
        let mock_response = match mode {
            BenchMode::Mock => Some(required("mock_response.txt")?),
            _ => None,
        };
        let generated_text = match mode {
            BenchMode::Offline => Some(required("generated.xmi")?),
            _ => None,
        };
        tasks.push(TaskInput {
            name,
            ecore_text,
            spec_text,
            reference_text,
            mock_response,
            generated_text,
        });
    }
    Ok(tasks)
}

/// Executes tasks on a small worker pool; results land in task order
/// regardless of completion order.
fn run_all(tasks: &[TaskInput], options: &BenchOptions, config: &LlmConfig) -> Vec<TaskResult> {
    let jobs = options.jobs.max(1).min(tasks.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<TaskResult>>> =
        Mutex::new((0..tasks.len()).map(|_| None).collect());

    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= tasks.len() {
                    break;
                }
                let result = run_task(&tasks[i], options.mode, config);
                slots.lock().unwrap()[i] = Some(result);
            });
        }
    });

    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every task slot filled"))
        .collect()
}

fn run_task(input: &TaskInput, mode: BenchMode, config: &LlmConfig) -> TaskResult {
    let fail = |failure: String, attempts: Option<u32>, artifacts| TaskResult {
        row: TaskRow {
            task: input.name.clone(),
            valid: false,
            attempts,
            failure: Some(failure),
            metrics: None,
        },
        artifacts,
    };

    let m = match parse_ecore(&input.ecore_text) {
        Ok((m, _)) => m,
        Err(e) => {
            return fail(
                format!("metamodel.ecore failed to load: {e}"),
                None,
                Vec::new(),
            )
        }
    };
    let reference = match parse_xmi(&input.reference_text, &m) {
        Ok(model) => model,
        Err(e) => {
            return fail(
                format!("reference.xmi failed to load: {e}"),
                None,
                Vec::new(),
            )
        }
    };
    let truth_set = canonicalize(&reference, &m);

    if mode == BenchMode::Offline {
        let generated_text = input.generated_text.as_deref().unwrap_or_default();
        return match parse_xmi(generated_text, &m) {
            Ok(model) => {
                let gen_set = canonicalize(&model, &m);
                let matched = match_elements(&gen_set, &truth_set);
                let metrics = compute_metrics(&matched, &gen_set, &truth_set, None);
                TaskResult {
                    row: TaskRow {
                        task: input.name.clone(),
                        valid: true,
                        attempts: None,
                        failure: None,
                        metrics: Some(metrics),
                    },
                    artifacts: vec![("metrics.json", pretty_json(&metrics))],
                }
            }
            Err(e) => fail(
                format!("generated.xmi failed to load: {e}"),
                None,
                Vec::new(),
            ),
        };
    }

    let generation = match mode {
        BenchMode::Mock => {
            let response = input.mock_response.clone().unwrap_or_default();
            let endpoint = ScriptedEndpoint::new([response]);
            let mut scripted_config = config.clone();
            scripted_config.max_retries = 0;
            generate_with_endpoint(&m, &input.spec_text, &[], &scripted_config, &endpoint)
        }
        BenchMode::Live => generate_instance_model(&m, &input.spec_text, &[], config),
        BenchMode::Offline => unreachable!("handled above"),
    };

    match generation {
        Ok(trace) => {
            let report = trace
                .report
                .as_ref()
                .expect("successful traces carry a report");
            let xmi = serialize_xmi(report, &m);
            let reload_failure = parse_xmi(&xmi, &m)
                .err()
                .map(|e| format!("serialized XMI failed to reload: {e}"));
            let valid = !report.has_errors() && reload_failure.is_none();

            let gen_set = canonicalize(&report.model, &m);
            let matched = match_elements(&gen_set, &truth_set);
            let metrics = compute_metrics(&matched, &gen_set, &truth_set, Some(&report.counts));

            let artifacts = vec![
                ("generated.xmi", xmi),
                ("trace.json", pretty_json(&trace.to_json())),
                ("metrics.json", pretty_json(&metrics)),
                ("diagnostics.jsonl", diagnostics_jsonl(report)),
            ];
            TaskResult {
                row: TaskRow {
                    task: input.name.clone(),
                    valid,
                    attempts: Some(trace.attempts),
                    failure: reload_failure,
                    metrics: Some(metrics),
                },
                artifacts,
            }
        }
        Err(failed) => {
            let artifacts = vec![("trace.json", pretty_json(&failed.trace.to_json()))];
            fail(failed.reason.clone(), Some(failed.attempts), artifacts)
        }
    }
}

fn diagnostics_jsonl(report: &CompileReport) -> String {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, &report.diagnostics).expect("in-memory write");
    String::from_utf8(buf).expect("diagnostics are UTF-8")
}

fn assemble_report(rows: Vec<TaskRow>) -> BatchReport {
    let task_count = rows.len() as u64;
    let valid_count = rows.iter().filter(|r| r.valid).count() as u64;
    let scored: Vec<&MetricsReport> = rows.iter().filter_map(|r| r.metrics.as_ref()).collect();

    let averages = if scored.is_empty() {
        None
    } else {
        let avg = |pick: fn(&MetricsReport) -> crate::eval::MetricRow| {
            let n = scored.len() as f64;
            let ga_values: Vec<f64> = scored
                .iter()
                .filter_map(|m| pick(m).ga.map(|g| g.value()))
                .collect();
            AverageRow {
                ga: if ga_values.is_empty() {
                    None
                } else {
                    Some(ga_values.iter().sum::<f64>() / ga_values.len() as f64)
                },
                sp: scored.iter().map(|m| pick(m).sp.value()).sum::<f64>() / n,
                sr: scored.iter().map(|m| pick(m).sr.value()).sum::<f64>() / n,
                sa: scored.iter().map(|m| pick(m).sa.value()).sum::<f64>() / n,
            }
        };
        Some(AverageTable {
            objects: avg(|m| m.objects),
            attributes: avg(|m| m.attributes),
            associations: avg(|m| m.associations),
            overall: avg(|m| m.overall),
        })
    };

    BatchReport {
        task_count,
        valid_count,
        vr: Rational::new(valid_count, task_count),
        averaged_task_count: scored.len() as u64,
        averages,
        tasks: rows,
    }
}

fn write_outputs(
    out_dir: &Path,
    report: &BatchReport,
    results: &[TaskResult],
) -> Result<(), BenchError> {
    let write = |path: &Path, content: &str| -> Result<(), BenchError> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| BenchError::Io {
                path: parent.display().to_string(),
                source,
            })?;
        }
        fs::write(path, content).map_err(|source| BenchError::Io {
            path: path.display().to_string(),
            source,
        })
    };

    write(&out_dir.join("report.json"), &pretty_json(report))?;
    write(&out_dir.join("tasks.csv"), &render_csv(&report.tasks))?;
    for result in results {
        for (file, content) in &result.artifacts {
            write(&out_dir.join(&result.row.task).join(file), content)?;
        }
    }
    Ok(())
}

fn pretty_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text
}

/// One row per task; metric cells are `{:.6}` fixed-point, blank when the
/// value is undefined for that task.
pub fn render_csv(rows: &[TaskRow]) -> String {
    let mut out = String::from("task,valid");
    for category in ["objects", "attributes", "associations", "overall"] {
        for metric in ["ga", "sp", "sr", "sa"] {
            let _ = write!(out, ",{metric}_{category}");
        }
    }
    out.push('\n');

    for row in rows {
        let _ = write!(out, "{},{}", csv_field(&row.task), row.valid);
        let cells = row
            .metrics
            .map(|m| [m.objects, m.attributes, m.associations, m.overall]);
        for i in 0..4 {
            let metric_row = cells.map(|c| c[i]);
            let fmt = |v: Option<f64>| v.map(|v| format!("{v:.6}")).unwrap_or_default();
            let _ = write!(
                out,
                ",{},{},{},{}",
                fmt(metric_row.and_then(|r| r.ga.map(|g| g.value()))),
                fmt(metric_row.map(|r| r.sp.value())),
                fmt(metric_row.map(|r| r.sr.value())),
                fmt(metric_row.map(|r| r.sa.value())),
            );
        }
        out.push('\n');
    }
    out
}

fn csv_field(raw: &str) -> String {
    if raw.contains([',', '"', '\n']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw.to_string()
    }
}

/// Scores a generated model against a reference without compile
/// accounting; used for single-pair evaluation of stored XMI files.
pub fn evaluate_pair(
    generated: &crate::compile::InstanceModel,
    reference: &crate::compile::InstanceModel,
    m: &crate::ecore::MetaModel,
) -> MetricsReport {
    let gen_set = canonicalize(generated, m);
    let truth_set = canonicalize(reference, m);
    let matched = match_elements(&gen_set, &truth_set);
    compute_metrics(&matched, &gen_set, &truth_set, None)
}
