//! Toolkit for generating XMI instance models from an Ecore metamodel and a
//! natural-language specification.
//!
//! Pipeline stages, in order:
//! 1. [`ecore`] loads the metamodel.
//! 2. [`plantuml`] renders it as class-diagram text for prompts.
//! 3. [`llm`] asks a chat endpoint for a conceptual instance model (CIM).
//! 4. [`cim`] extracts and parses that JSON intermediate representation.
//! 5. [`compile`] turns a CIM into a validated instance object graph.
//! 6. [`xmi`] serializes the graph to XMI and loads XMI back.
//! 7. [`eval`] scores generated models against references.

pub mod bench;
pub mod cim;
pub mod compile;
pub mod diag;
pub mod ecore;
pub mod eval;
pub mod llm;
pub mod plantuml;
pub mod xmi;

pub use bench::{evaluate_pair, run_benchmark, BatchReport, BenchError, BenchMode, BenchOptions};
pub use cim::{extract_json_payload, parse_cim, validate_structure, ConceptualInstanceModel};
pub use compile::{compile, CompileReport, ElementCounts, InstanceModel, InstanceObject};
pub use diag::{has_errors, DiagCode, Diagnostic, Severity};
pub use ecore::{parse_ecore, EcoreError, MetaModel};
pub use eval::{
    canonicalize, compute_metrics, match_elements, CanonicalElementSet, MatchResult, MetricsReport,
    Rational,
};
pub use llm::{
    build_prompt, generate_instance_model, generate_with_endpoint, ChatEndpoint, ChatMessage,
    FewShotExample, GenerationTrace, LlmConfig, LlmError, PromptBundle, ScriptedEndpoint,
};
pub use plantuml::{render_plantuml, PlantUmlDoc};
pub use xmi::{parse_xmi, serialize_model, serialize_xmi, XmiError};
