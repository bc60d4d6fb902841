//! Diagnostics shared by every pipeline stage.
//!
//! Recoverable problems never abort a stage. They are collected as
//! [`Diagnostic`] values so callers can log them, count them for accuracy
//! accounting, and decide on an exit code.

use serde::Serialize;
use std::fmt;
use std::io::Write;

/// How bad a diagnostic is. Errors reject the element they concern;
/// warnings never change the produced model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

/// Closed set of diagnostic codes. Each code is emitted by exactly one
/// stage; the groups below follow pipeline order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DiagCode {
    // Metamodel parsing (warnings).
    UnsupportedConstruct,
    UnknownDataType,
    DuplicateClassifier,
    DuplicateFeature,
    InvalidBounds,

    // Conceptual instance model parsing.
    MissingTypeField,
    MalformedEntry,
    UnknownKey,
    AssociationAlias,

    // Metamodel-independent structural validation.
    DanglingTargetId,
    SelfComposition,

    // Instance compilation (errors reject one element each).
    UnknownClass,
    AbstractClass,
    UnknownAttribute,
    ValueCoercionFailed,
    UpperBoundExceeded,
    UnknownReference,
    DanglingTarget,
    TypeNonConforming,
    SecondContainer,
    ContainmentCycle,
    OwnerMissing,

    // Instance compilation (warnings).
    KindMismatch,
    TypeMismatchDeclared,
    LowerBoundUnmet,
}

impl fmt::Display for DiagCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// One reported problem, tied to an instance and feature when known.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: DiagCode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feature_name: Option<String>,
    pub detail: String,
}

impl Diagnostic {
    pub fn error(code: DiagCode, detail: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code,
            instance_id: None,
            feature_name: None,
            detail: detail.into(),
        }
    }

    pub fn warning(code: DiagCode, detail: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            code,
            instance_id: None,
            feature_name: None,
            detail: detail.into(),
        }
    }

    pub fn with_instance(mut self, id: impl Into<String>) -> Self {
        self.instance_id = Some(id.into());
        self
    }

    pub fn with_feature(mut self, name: impl Into<String>) -> Self {
        self.feature_name = Some(name.into());
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}[{}]", self.code)?;
        if let Some(id) = &self.instance_id {
            write!(f, " instance '{id}'")?;
        }
        if let Some(feat) = &self.feature_name {
            write!(f, " feature '{feat}'")?;
        }
        write!(f, ": {}", self.detail)
    }
}

/// True when any diagnostic in the slice has error severity.
pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

/// Writes diagnostics as JSON lines, one object per diagnostic.
pub fn write_jsonl<W: Write>(mut out: W, diags: &[Diagnostic]) -> std::io::Result<()> {
    for d in diags {
        let line = serde_json::to_string(d).expect("diagnostic serializes");
        writeln!(out, "{line}")?;
    }
    Ok(())
}
