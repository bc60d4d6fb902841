//! Command-line front end for the instance-model toolkit.
//!
//! Exit codes: 0 on success, 1 when any error-severity diagnostic was
//! produced (outputs are still written so partial results can be
//! inspected), 2 on usage or I/O failures.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use modelgen_core::bench::{run_benchmark, BenchMode, BenchOptions};
use modelgen_core::diag::{has_errors, write_jsonl, Diagnostic};
use modelgen_core::ecore::{parse_ecore, MetaModel};
use modelgen_core::eval::MetricsReport;
use modelgen_core::llm::{FewShotExample, LlmConfig};
use modelgen_core::{
    compile, evaluate_pair, extract_json_payload, generate_instance_model, parse_cim, parse_xmi,
    render_plantuml, serialize_xmi, validate_structure,
};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "modelgen",
    version,
    about = "Generate, compile, and score instance models for Ecore metamodels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render an Ecore metamodel as a PlantUML class diagram
    Ecore2puml {
        /// Path to the .ecore file
        #[arg(long)]
        ecore: PathBuf,
        /// Output file; standard output when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a conceptual instance model JSON for structural problems
    ValidateCim {
        /// Path to the CIM JSON (may be wrapped in markdown fences)
        #[arg(long)]
        cim: PathBuf,
        /// Append diagnostics as JSON lines to this file
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Compile a conceptual instance model into an XMI document
    Compile {
        #[arg(long)]
        ecore: PathBuf,
        #[arg(long)]
        cim: PathBuf,
        /// Destination .xmi file; written even when diagnostics contain
        /// errors so salvageable parts survive
        #[arg(long)]
        out: PathBuf,
        /// Diagnostics log as JSON lines
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Generate an instance model from a scenario description via an LLM
    Generate {
        #[arg(long)]
        ecore: PathBuf,
        /// Scenario description text file
        #[arg(long)]
        spec: PathBuf,
        /// Endpoint configuration JSON
        #[arg(long)]
        config: PathBuf,
        /// Directory of few-shot example triples
        #[arg(long)]
        examples: Option<PathBuf>,
        /// Write the full generation trace (prompt, raw responses,
        /// attempts) to this JSON file
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Score a generated model against a reference model
    Eval {
        #[arg(long)]
        ecore: PathBuf,
        /// Generated instance model (.xmi)
        #[arg(long)]
        generated: PathBuf,
        /// Ground-truth instance model (.xmi)
        #[arg(long)]
        reference: PathBuf,
        /// Metric report destination; standard output when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every task in a dataset directory and write a batch report
    Bench {
        /// Dataset root: one subdirectory per task containing
        /// metamodel.ecore, spec.txt, and reference.xmi
        #[arg(long)]
        dataset: PathBuf,
        /// Endpoint configuration JSON; required unless --mock or
        /// --offline
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for report.json, tasks.csv, and per-task
        /// artifacts
        #[arg(long)]
        out: PathBuf,
        /// Number of tasks to run in parallel
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Use each task's mock_response.txt instead of calling an
        /// endpoint
        #[arg(long, conflicts_with = "offline")]
        mock: bool,
        /// Score each task's pre-generated generated.xmi; no generation
        #[arg(long, conflicts_with = "mock")]
        offline: bool,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(2);
        }
    }
}

fn run(command: Command) -> Result<i32> {
    match command {
        Command::Ecore2puml { ecore, out } => ecore2puml(&ecore, out.as_deref()),
        Command::ValidateCim { cim, log } => validate_cim(&cim, log.as_deref()),
        Command::Compile {
            ecore,
            cim,
            out,
            log,
        } => compile_cmd(&ecore, &cim, &out, log.as_deref()),
        Command::Generate {
            ecore,
            spec,
            config,
            examples,
            trace,
            out,
            log,
        } => generate_cmd(
            &ecore,
            &spec,
            &config,
            examples.as_deref(),
            trace.as_deref(),
            &out,
            log.as_deref(),
        ),
        Command::Eval {
            ecore,
            generated,
            reference,
            out,
        } => eval_cmd(&ecore, &generated, &reference, out.as_deref()),
        Command::Bench {
            dataset,
            config,
            out,
            jobs,
            mock,
            offline,
        } => bench_cmd(&dataset, config.as_deref(), &out, jobs, mock, offline),
    }
}

fn ecore2puml(ecore: &Path, out: Option<&Path>) -> Result<i32> {
    let (m, diags) = load_metamodel(ecore)?;
    report_to_stderr(&diags);
    let doc = render_plantuml(&m);
    match out {
        Some(path) => write_output(path, &doc.text)?,
        None => print!("{}", doc.text),
    }
    Ok(exit_code(&diags))
}

fn validate_cim(cim_path: &Path, log: Option<&Path>) -> Result<i32> {
    let raw = read_input(cim_path)?;
    let payload = extract_json_payload(&raw)
        .with_context(|| format!("{} does not contain a JSON object", cim_path.display()))?;
    let (cim, mut diags) =
        parse_cim(&payload).with_context(|| format!("cannot parse {}", cim_path.display()))?;
    diags.extend(validate_structure(&cim));
    report_to_stderr(&diags);
    if let Some(path) = log {
        write_log(path, &diags)?;
    }
    eprintln!(
        "{} instance entries, {} diagnostics",
        cim.objects.len(),
        diags.len()
    );
    Ok(exit_code(&diags))
}

fn compile_cmd(ecore: &Path, cim_path: &Path, out: &Path, log: Option<&Path>) -> Result<i32> {
    let (m, mut diags) = load_metamodel(ecore)?;
    let raw = read_input(cim_path)?;
    let payload = extract_json_payload(&raw)
        .with_context(|| format!("{} does not contain a JSON object", cim_path.display()))?;
    let (cim, cim_diags) =
        parse_cim(&payload).with_context(|| format!("cannot parse {}", cim_path.display()))?;
    diags.extend(cim_diags);

    let report = compile(&m, &cim);
    diags.extend(report.diagnostics.clone());

    write_output(out, &serialize_xmi(&report, &m))?;
    report_to_stderr(&diags);
    if let Some(path) = log {
        write_log(path, &diags)?;
    }
    eprintln!(
        "compiled {} of {} attempted elements into {}",
        report.counts.total_accepted(),
        report.counts.total_attempted(),
        out.display()
    );
    Ok(exit_code(&diags))
}

fn generate_cmd(
    ecore: &Path,
    spec: &Path,
    config_path: &Path,
    examples_dir: Option<&Path>,
    trace_path: Option<&Path>,
    out: &Path,
    log: Option<&Path>,
) -> Result<i32> {
    let (m, mut diags) = load_metamodel(ecore)?;
    let spec_text = read_input(spec)?;
    let config = load_config(config_path)?;
    let examples = match examples_dir {
        Some(dir) => load_examples(dir)?,
        None => Vec::new(),
    };

    match generate_instance_model(&m, &spec_text, &examples, &config) {
        Ok(trace) => {
            if let Some(path) = trace_path {
                write_output(path, &pretty(&trace.to_json()))?;
            }
            let report = trace
                .report
                .as_ref()
                .expect("successful generation carries a compile report");
            diags.extend(report.diagnostics.clone());
            write_output(out, &serialize_xmi(report, &m))?;
            report_to_stderr(&diags);
            if let Some(path) = log {
                write_log(path, &diags)?;
            }
            eprintln!(
                "generated {} after {} attempt(s)",
                out.display(),
                trace.attempts
            );
            Ok(exit_code(&diags))
        }
        Err(failed) => {
            if let Some(path) = trace_path {
                write_output(path, &pretty(&failed.trace.to_json()))?;
            }
            eprintln!(
                "generation failed after {} attempt(s): {}",
                failed.attempts, failed.reason
            );
            Ok(1)
        }
    }
}

fn eval_cmd(ecore: &Path, generated: &Path, reference: &Path, out: Option<&Path>) -> Result<i32> {
    let (m, diags) = load_metamodel(ecore)?;
    report_to_stderr(&diags);
    let load = |path: &Path| -> Result<_> {
        parse_xmi(&read_input(path)?, &m).with_context(|| format!("cannot load {}", path.display()))
    };
    let generated_model = load(generated)?;
    let reference_model = load(reference)?;
    let metrics: MetricsReport = evaluate_pair(&generated_model, &reference_model, &m);
    let text = pretty(&metrics);
    match out {
        Some(path) => write_output(path, &text)?,
        None => print!("{text}"),
    }
    Ok(exit_code(&diags))
}

fn bench_cmd(
    dataset: &Path,
    config_path: Option<&Path>,
    out: &Path,
    jobs: usize,
    mock: bool,
    offline: bool,
) -> Result<i32> {
    let mode = if mock {
        BenchMode::Mock
    } else if offline {
        BenchMode::Offline
    } else {
        BenchMode::Live
    };
    let config = match config_path {
        Some(path) => Some(load_config(path)?),
        None => None,
    };
    let options = BenchOptions {
        mode,
        jobs,
        out_dir: Some(out.to_path_buf()),
    };
    let report =
        run_benchmark(dataset, config.as_ref(), &options).context("benchmark run failed")?;
    eprintln!(
        "{} tasks, {} valid, VR {}",
        report.task_count, report.valid_count, report.vr
    );
    Ok(if report.valid_count == report.task_count {
        0
    } else {
        1
    })
}

fn load_metamodel(path: &Path) -> Result<(MetaModel, Vec<Diagnostic>)> {
    let text = read_input(path)?;
    parse_ecore(&text).with_context(|| format!("cannot load {}", path.display()))
}

fn load_config(path: &Path) -> Result<LlmConfig> {
    let text = read_input(path)?;
    serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

/// Loads few-shot examples from sorted subdirectories. Each holds
/// spec.txt, cim.json, and either metamodel.puml or metamodel.ecore
/// (rendered to PlantUML on the fly).
fn load_examples(dir: &Path) -> Result<Vec<FewShotExample>> {
    let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot read {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    if subdirs.is_empty() {
        bail!("no example directories under {}", dir.display());
    }

    let mut examples = Vec::new();
    for sub in subdirs {
        let spec_text = read_input(&sub.join("spec.txt"))?;
        let cim_text = read_input(&sub.join("cim.json"))?;
        let puml_path = sub.join("metamodel.puml");
        let metamodel_text = if puml_path.is_file() {
            read_input(&puml_path)?
        } else {
            let (m, _) = load_metamodel(&sub.join("metamodel.ecore"))?;
            render_plantuml(&m).text
        };
        let example = FewShotExample::new(metamodel_text, spec_text, cim_text)
            .with_context(|| format!("rejected example {}", sub.display()))?;
        examples.push(example);
    }
    Ok(examples)
}

fn read_input(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write_output(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .with_context(|| format!("cannot create {}", parent.display()))?;
    }
    fs::write(path, content).with_context(|| format!("cannot write {}", path.display()))
}

fn write_log(path: &Path, diags: &[Diagnostic]) -> Result<()> {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, diags).expect("in-memory write");
    write_output(
        path,
        &String::from_utf8(buf).expect("diagnostics are UTF-8"),
    )
}

fn report_to_stderr(diags: &[Diagnostic]) {
    for d in diags {
        let mut location = String::new();
        if let Some(id) = &d.instance_id {
            location.push_str(&format!(" instance={id}"));
        }
        if let Some(feature) = &d.feature_name {
            location.push_str(&format!(" feature={feature}"));
        }
        eprintln!(
            "{} {:?}{}: {}",
            match d.severity {
                modelgen_core::Severity::Warning => "warning",
                modelgen_core::Severity::Error => "error",
            },
            d.code,
            location,
            d.detail
        );
    }
}

fn exit_code(diags: &[Diagnostic]) -> i32 {
    if has_errors(diags) {
        1
    } else {
        0
    }
}

fn pretty<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    text
}
