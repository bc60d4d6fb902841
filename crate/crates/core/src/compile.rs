//! Compilation of a conceptual instance model into a validated instance
//! object graph.
//!
//! Two phases: every object is instantiated first (so forward references
//! work regardless of key order), then attributes and associations are
//! populated in source order. Every rejected element produces exactly one
//! error diagnostic, which is what grammatical-accuracy accounting counts.

use crate::cim::{AttributeSpec, ConceptualInstanceModel, LinkSpec};
use crate::diag::{DiagCode, Diagnostic};
use crate::ecore::{Classifier, ClassifierId, DataType, MetaModel};
use indexmap::IndexMap;

/// One compiled object. Attribute and reference values keep insertion
/// order; `child_links` records accepted containment links in order for
/// serialization.
#[derive(Debug, Clone)]
pub struct InstanceObject {
    pub id: String,
    pub class: ClassifierId,
    pub attr_values: IndexMap<String, Vec<ScalarValue>>,
    pub ref_targets: IndexMap<String, Vec<String>>,
    pub child_links: Vec<(String, String)>,
    /// Set iff this object is the target of an accepted composition:
    /// (parent id, containment feature name).
    pub container: Option<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScalarValue {
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    EnumLit(String),
}

impl ScalarValue {
    /// Canonical text rendering: ints without leading zeros, floats in
    /// shortest-roundtrip form, booleans lowercase.
    pub fn render(&self) -> String {
        match self {
            ScalarValue::Str(s) => s.clone(),
            ScalarValue::Int(i) => i.to_string(),
            ScalarValue::Float(f) => f.to_string(),
            ScalarValue::Bool(b) => b.to_string(),
            ScalarValue::EnumLit(l) => l.clone(),
        }
    }
}

/// Compiled object graph. Containment edges form a forest; `roots` are the
/// objects without a container, in source order.
#[derive(Debug, Clone, Default)]
pub struct InstanceModel {
    pub objects: IndexMap<String, InstanceObject>,
    pub roots: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct Counter {
    pub accepted: u64,
    pub attempted: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ElementCounts {
    pub objects: Counter,
    pub attributes: Counter,
    pub associations: Counter,
}

impl ElementCounts {
    pub fn total_accepted(&self) -> u64 {
        self.objects.accepted + self.attributes.accepted + self.associations.accepted
    }

    pub fn total_attempted(&self) -> u64 {
        self.objects.attempted + self.attributes.attempted + self.associations.attempted
    }
}

#[derive(Debug, Clone)]
pub struct CompileReport {
    pub model: InstanceModel,
    pub diagnostics: Vec<Diagnostic>,
    pub counts: ElementCounts,
}

impl CompileReport {
    pub fn has_errors(&self) -> bool {
        crate::diag::has_errors(&self.diagnostics)
    }
}

/// Runs the two compilation phases over the whole CIM and computes roots.
/// Never fails: every problem is a diagnostic in the report.
pub fn compile(m: &MetaModel, cim: &ConceptualInstanceModel) -> CompileReport {
    let mut st = Compiler {
        m,
        objects: IndexMap::new(),
        diags: Vec::new(),
        counts: ElementCounts::default(),
    };

    st.instantiate_objects(cim);
    st.populate(cim);
    st.warn_unmet_lower_bounds();

    let roots = st
        .objects
        .values()
        .filter(|o| o.container.is_none())
        .map(|o| o.id.clone())
        .collect();

    CompileReport {
        model: InstanceModel {
            objects: st.objects,
            roots,
        },
        diagnostics: st.diags,
        counts: st.counts,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    Composition,
    Reference,
}

struct Compiler<'m> {
    m: &'m MetaModel,
    objects: IndexMap<String, InstanceObject>,
    diags: Vec<Diagnostic>,
    counts: ElementCounts,
}

impl Compiler<'_> {
    /// Phase one: create an object for every CIM entry whose type names an
    /// instantiable class.
    fn instantiate_objects(&mut self, cim: &ConceptualInstanceModel) {
        for (id, spec) in &cim.objects {
            self.counts.objects.attempted += 1;
            let Some(cid) = self.m.resolve_classifier(&spec.type_name) else {
                self.diags.push(
                    Diagnostic::error(
                        DiagCode::UnknownClass,
                        format!("type '{}' is not a class in the metamodel", spec.type_name),
                    )
                    .with_instance(id),
                );
                continue;
            };
            match self.m.classifier(cid) {
                Classifier::Enum(_) => {
                    self.diags.push(
                        Diagnostic::error(
                            DiagCode::UnknownClass,
                            format!("type '{}' names an enum, not a class", spec.type_name),
                        )
                        .with_instance(id),
                    );
                    continue;
                }
                Classifier::Class(c) => {
                    if c.is_abstract || c.is_interface {
                        let flavor = if c.is_abstract {
                            "abstract"
                        } else {
                            "an interface"
                        };
                        self.diags.push(
                            Diagnostic::error(
                                DiagCode::AbstractClass,
                                format!(
                                    "class '{}' is {flavor} and cannot be instantiated",
                                    c.name
                                ),
                            )
                            .with_instance(id),
                        );
                        continue;
                    }
                }
            }
            self.counts.objects.accepted += 1;
            self.objects.insert(
                id.clone(),
                InstanceObject {
                    id: id.clone(),
                    class: cid,
                    attr_values: IndexMap::new(),
                    ref_targets: IndexMap::new(),
                    child_links: Vec::new(),
                    container: None,
                },
            );
        }
    }

    /// Phase two: attributes, then compositions, then references, per
    /// object in source order.
    fn populate(&mut self, cim: &ConceptualInstanceModel) {
        for (id, spec) in &cim.objects {
            if self.objects.contains_key(id) {
                for attr in &spec.attributes {
                    self.counts.attributes.attempted += 1;
                    if self.set_attribute(id, attr) {
                        self.counts.attributes.accepted += 1;
                    }
                }
                for link in &spec.compositions {
                    self.counts.associations.attempted += 1;
                    if self.set_association(id, link, LinkKind::Composition) {
                        self.counts.associations.accepted += 1;
                    }
                }
                for link in &spec.references {
                    self.counts.associations.attempted += 1;
                    if self.set_association(id, link, LinkKind::Reference) {
                        self.counts.associations.accepted += 1;
                    }
                }
            } else {
                // Rejected owner: its element specs still count as attempts.
                for attr in &spec.attributes {
                    self.counts.attributes.attempted += 1;
                    self.diags.push(
                        Diagnostic::error(
                            DiagCode::OwnerMissing,
                            "attribute on an instance that was not created",
                        )
                        .with_instance(id)
                        .with_feature(&attr.attribute_name),
                    );
                }
                for link in spec.compositions.iter().chain(&spec.references) {
                    self.counts.associations.attempted += 1;
                    self.diags.push(
                        Diagnostic::error(
                            DiagCode::OwnerMissing,
                            "association on an instance that was not created",
                        )
                        .with_instance(id)
                        .with_feature(&link.association_name),
                    );
                }
            }
        }
    }

    /// Returns true when the value was stored. At most one error diagnostic
    /// is emitted per rejected attribute.
    fn set_attribute(&mut self, owner_id: &str, spec: &AttributeSpec) -> bool {
        let owner_class = self.objects[owner_id].class;
        let name = &spec.attribute_name;
        let Some(attr) = self.m.find_attribute(owner_class, name) else {
            self.diags.push(
                Diagnostic::error(
                    DiagCode::UnknownAttribute,
                    format!(
                        "class '{}' has no attribute '{name}'",
                        self.m.classifier(owner_class).name()
                    ),
                )
                .with_instance(owner_id)
                .with_feature(name),
            );
            return false;
        };
        let declared = attr.data_type;
        let upper = attr.upper;

        // The metamodel's type wins; a differing declared kind only warns.
        let expected = declared.display_name(self.m);
        if !spec.data_type.is_empty() && !spec.data_type.eq_ignore_ascii_case(expected) {
            self.diags.push(
                Diagnostic::warning(
                    DiagCode::TypeMismatchDeclared,
                    format!(
                        "declared dataType '{}' disagrees with metamodel type '{expected}'",
                        spec.data_type
                    ),
                )
                .with_instance(owner_id)
                .with_feature(name),
            );
        }

        let Some(value) = coerce(&spec.value, declared, self.m) else {
            self.diags.push(
                Diagnostic::error(
                    DiagCode::ValueCoercionFailed,
                    format!("value \"{}\" does not coerce to {expected}", spec.value),
                )
                .with_instance(owner_id)
                .with_feature(name),
            );
            return false;
        };

        let owner = &mut self.objects[owner_id];
        let slot = owner.attr_values.entry(name.clone()).or_default();
        if upper >= 0 && slot.len() as i64 >= upper {
            self.diags.push(
                Diagnostic::error(
                    DiagCode::UpperBoundExceeded,
                    format!(
                        "attribute '{name}' already holds {} value(s), upper bound {upper}",
                        slot.len()
                    ),
                )
                .with_instance(owner_id)
                .with_feature(name),
            );
            return false;
        }
        slot.push(value);
        true
    }

    /// Returns true when the link was stored. Checks run in a fixed order
    /// so each rejection carries exactly one deterministic diagnostic.
    fn set_association(&mut self, owner_id: &str, spec: &LinkSpec, kind: LinkKind) -> bool {
        let owner_class = self.objects[owner_id].class;
        let name = &spec.association_name;
        let Some(reference) = self.m.find_reference(owner_class, name) else {
            self.diags.push(
                Diagnostic::error(
                    DiagCode::UnknownReference,
                    format!(
                        "class '{}' has no reference '{name}'",
                        self.m.classifier(owner_class).name()
                    ),
                )
                .with_instance(owner_id)
                .with_feature(name),
            );
            return false;
        };
        let containment = reference.containment;
        let target_class_decl = reference.target;
        let upper = reference.upper;

        let metamodel_kind = if containment {
            LinkKind::Composition
        } else {
            LinkKind::Reference
        };
        if metamodel_kind != kind {
            let (given, actual) = match kind {
                LinkKind::Composition => ("composition", "non-containment reference"),
                LinkKind::Reference => ("reference", "containment"),
            };
            self.diags.push(
                Diagnostic::warning(
                    DiagCode::KindMismatch,
                    format!(
                        "link given as {given} but '{name}' is a {actual}; metamodel kind used"
                    ),
                )
                .with_instance(owner_id)
                .with_feature(name),
            );
        }

        let target_id = &spec.target_instance_id;
        let Some(target) = self.objects.get(target_id) else {
            self.diags.push(
                Diagnostic::error(
                    DiagCode::DanglingTarget,
                    format!("target instance \"{target_id}\" does not exist"),
                )
                .with_instance(owner_id)
                .with_feature(name),
            );
            return false;
        };
        let target_class = target.class;

        if !self.m.conforms_to(target_class, target_class_decl) {
            self.diags.push(
                Diagnostic::error(
                    DiagCode::TypeNonConforming,
                    format!(
                        "target is a '{}' but '{name}' requires '{}'",
                        self.m.classifier(target_class).name(),
                        self.m.classifier(target_class_decl).name()
                    ),
                )
                .with_instance(owner_id)
                .with_feature(name),
            );
            return false;
        }

        // The target's actual class governs conformance; a differing
        // associatedClassName label only warns.
        if !spec.associated_class_name.is_empty()
            && spec.associated_class_name != self.m.classifier(target_class).name()
        {
            self.diags.push(
                Diagnostic::warning(
                    DiagCode::TypeMismatchDeclared,
                    format!(
                        "associatedClassName '{}' disagrees with the target's class '{}'",
                        spec.associated_class_name,
                        self.m.classifier(target_class).name()
                    ),
                )
                .with_instance(owner_id)
                .with_feature(name),
            );
        }

        let existing = self.objects[owner_id]
            .ref_targets
            .get(name)
            .map_or(0, Vec::len);
        if upper >= 0 && existing as i64 >= upper {
            self.diags.push(
                Diagnostic::error(
                    DiagCode::UpperBoundExceeded,
                    format!(
                        "reference '{name}' already holds {existing} link(s), upper bound {upper}"
                    ),
                )
                .with_instance(owner_id)
                .with_feature(name),
            );
            return false;
        }

        if containment {
            if self.objects[target_id].container.is_some() {
                self.diags.push(
                    Diagnostic::error(
                        DiagCode::SecondContainer,
                        format!("target \"{target_id}\" is already contained elsewhere"),
                    )
                    .with_instance(owner_id)
                    .with_feature(name),
                );
                return false;
            }
            if self.would_cycle(owner_id, target_id) {
                self.diags.push(
                    Diagnostic::error(
                        DiagCode::ContainmentCycle,
                        format!("containing \"{target_id}\" would create a containment cycle"),
                    )
                    .with_instance(owner_id)
                    .with_feature(name),
                );
                return false;
            }
            self.objects[target_id].container = Some((owner_id.to_string(), name.clone()));
            let owner = &mut self.objects[owner_id];
            owner.child_links.push((name.clone(), target_id.clone()));
        }

        let owner = &mut self.objects[owner_id];
        owner
            .ref_targets
            .entry(name.clone())
            .or_default()
            .push(target_id.clone());
        true
    }

    /// True when making `target` a child of `owner` would close a loop:
    /// the target is the owner itself or one of its containment ancestors.
    fn would_cycle(&self, owner_id: &str, target_id: &str) -> bool {
        let mut current = Some(owner_id.to_string());
        while let Some(id) = current {
            if id == target_id {
                return true;
            }
            current = self.objects[&id].container.as_ref().map(|(p, _)| p.clone());
        }
        false
    }

    fn warn_unmet_lower_bounds(&mut self) {
        let mut warnings = Vec::new();
        for obj in self.objects.values() {
            let (attrs, refs) = self.m.all_features(obj.class);
            for a in attrs {
                let have = obj.attr_values.get(&a.name).map_or(0, Vec::len);
                if (have as i64) < i64::from(a.lower) {
                    warnings.push((obj.id.clone(), a.name.clone(), a.lower, have));
                }
            }
            for r in refs {
                let have = obj.ref_targets.get(&r.name).map_or(0, Vec::len);
                if (have as i64) < i64::from(r.lower) {
                    warnings.push((obj.id.clone(), r.name.clone(), r.lower, have));
                }
            }
        }
        for (id, feature, lower, have) in warnings {
            self.diags.push(
                Diagnostic::warning(
                    DiagCode::LowerBoundUnmet,
                    format!("feature '{feature}' requires at least {lower} value(s), has {have}"),
                )
                .with_instance(id)
                .with_feature(feature),
            );
        }
    }
}

/// Coerces raw text to the metamodel's scalar kind. `None` means the value
/// does not belong to the type.
fn coerce(raw: &str, data_type: DataType, m: &MetaModel) -> Option<ScalarValue> {
    match data_type {
        DataType::String => Some(ScalarValue::Str(raw.to_string())),
        DataType::Int => {
            let body = raw.strip_prefix(['+', '-']).unwrap_or(raw);
            if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            raw.parse::<i64>().ok().map(ScalarValue::Int)
        }
        DataType::Float => {
            if raw.is_empty() {
                return None;
            }
            // Decimal or scientific notation only; reject inf/nan words.
            let ok_chars = raw
                .bytes()
                .all(|b| b.is_ascii_digit() || matches!(b, b'+' | b'-' | b'.' | b'e' | b'E'));
            if !ok_chars {
                return None;
            }
            raw.parse::<f64>()
                .ok()
                .filter(|f| f.is_finite())
                .map(ScalarValue::Float)
        }
        DataType::Boolean => {
            if raw.eq_ignore_ascii_case("true") {
                Some(ScalarValue::Bool(true))
            } else if raw.eq_ignore_ascii_case("false") {
                Some(ScalarValue::Bool(false))
            } else {
                None
            }
        }
        DataType::Enum(eid) => {
            let e = m
                .classifier(eid)
                .as_enum()
                .expect("enum data types point at enums");
            e.literals
                .iter()
                .any(|l| l == raw)
                .then(|| ScalarValue::EnumLit(raw.to_string()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cim::parse_cim;
    use crate::ecore::parse_ecore;

    const ALLOCATION: &str = include_str!("../fixtures/allocation.ecore");
    const LIBRARY: &str = include_str!("../fixtures/library.ecore");
    const FIG3: &str = include_str!("../fixtures/allocation_fig3.cim.json");

    fn compile_text(ecore: &str, cim_text: &str) -> CompileReport {
        let (m, _) = parse_ecore(ecore).unwrap();
        let (cim, diags) = parse_cim(cim_text).unwrap();
        assert!(
            diags.is_empty(),
            "CIM fixture should parse clean: {diags:?}"
        );
        compile(&m, &cim)
    }

    fn error_codes(report: &CompileReport) -> Vec<DiagCode> {
        report
            .diagnostics
            .iter()
            .filter(|d| d.is_error())
            .map(|d| d.code)
            .collect()
    }

    #[test]
    fn fig3_cim_compiles_cleanly_with_nine_objects() {
        let report = compile_text(ALLOCATION, FIG3);
        assert!(!report.has_errors(), "diags: {:?}", report.diagnostics);
        assert_eq!(report.model.objects.len(), 9);
        assert_eq!(
            report.counts.objects,
            Counter {
                accepted: 9,
                attempted: 9
            }
        );
        assert_eq!(report.model.roots, ["b1", "VM1", "VM2", "app1", "app2"]);

        let core0 = &report.model.objects["core0"];
        assert_eq!(core0.ref_targets["assignedTo"], ["VM1"]);
        assert_eq!(core0.container.as_ref().unwrap().0, "cpu1");
        let vm1 = &report.model.objects["VM1"];
        assert_eq!(vm1.ref_targets["hosts"], ["app1"]);
        assert_eq!(core0.attr_values["frequency"], vec![ScalarValue::Int(50)]);
    }

    #[test]
    fn empty_cim_compiles_to_empty_model() {
        let report = compile_text(ALLOCATION, "{}");
        assert!(report.model.objects.is_empty());
        assert!(report.model.roots.is_empty());
        assert_eq!(report.counts, ElementCounts::default());
        assert!(report.diagnostics.is_empty());
    }

    #[test]
    fn concrete_types_instantiate_without_diagnostics() {
        let report = compile_text(
            ALLOCATION,
            r#"{"b": {"type": "Board"}, "c": {"type": "CPU"}}"#,
        );
        assert_eq!(report.model.objects.len(), 2);
        assert!(report.diagnostics.iter().all(|d| !d.is_error()));
    }

    #[test]
    fn abstract_type_is_rejected_with_one_diagnostic() {
        let report = compile_text(LIBRARY, r#"{"p": {"type": "Person"}}"#);
        assert!(report.model.objects.is_empty());
        assert_eq!(error_codes(&report), [DiagCode::AbstractClass]);
        assert_eq!(
            report.counts.objects,
            Counter {
                accepted: 0,
                attempted: 1
            }
        );
    }

    #[test]
    fn unknown_type_is_rejected_with_one_diagnostic() {
        let report = compile_text(ALLOCATION, r#"{"s": {"type": "Spaceship"}}"#);
        assert_eq!(error_codes(&report), [DiagCode::UnknownClass]);
        assert_eq!(
            report.counts.objects,
            Counter {
                accepted: 0,
                attempted: 1
            }
        );
    }

    #[test]
    fn enum_type_is_not_instantiable() {
        let report = compile_text(LIBRARY, r#"{"g": {"type": "Genre"}}"#);
        assert_eq!(error_codes(&report), [DiagCode::UnknownClass]);
    }

    #[test]
    fn int_attribute_coerces_digits() {
        let report = compile_text(
            ALLOCATION,
            r#"{"c": {"type": "Core", "attributes": [
                {"dataType": "int", "attributeName": "frequency", "value": "2"}
            ]}}"#,
        );
        assert!(!report.has_errors());
        assert_eq!(
            report.model.objects["c"].attr_values["frequency"],
            vec![ScalarValue::Int(2)]
        );
        // Oracle: an independent string-to-int parse agrees.
        assert_eq!("2".parse::<i64>().unwrap(), 2);
    }

    #[test]
    fn empty_string_is_a_valid_string_value() {
        let report = compile_text(
            ALLOCATION,
            r#"{"b": {"type": "Board", "attributes": [
                {"dataType": "string", "attributeName": "name", "value": ""}
            ]}}"#,
        );
        assert!(!report.has_errors());
        assert_eq!(
            report.model.objects["b"].attr_values["name"],
            vec![ScalarValue::Str(String::new())]
        );
    }

    #[test]
    fn non_numeric_int_value_fails_coercion() {
        let report = compile_text(
            ALLOCATION,
            r#"{"c": {"type": "Core", "attributes": [
                {"dataType": "int", "attributeName": "frequency", "value": "fast"}
            ]}}"#,
        );
        assert_eq!(error_codes(&report), [DiagCode::ValueCoercionFailed]);
        assert_eq!(
            report.counts.attributes,
            Counter {
                accepted: 0,
                attempted: 1
            }
        );
        assert!("fast".parse::<i64>().is_err());
    }

    #[test]
    fn unknown_attribute_is_rejected() {
        let report = compile_text(
            ALLOCATION,
            r#"{"b": {"type": "Board", "attributes": [
                {"dataType": "string", "attributeName": "color", "value": "red"}
            ]}}"#,
        );
        assert_eq!(error_codes(&report), [DiagCode::UnknownAttribute]);
    }

    #[test]
    fn metamodel_type_wins_with_declared_mismatch_warning() {
        let report = compile_text(
            ALLOCATION,
            r#"{"c": {"type": "Core", "attributes": [
                {"dataType": "string", "attributeName": "frequency", "value": "3"}
            ]}}"#,
        );
        assert!(!report.has_errors());
        assert_eq!(
            report.model.objects["c"].attr_values["frequency"],
            vec![ScalarValue::Int(3)]
        );
        assert!(report
            .diagnostics
            .iter()
            .any(|d| d.code == DiagCode::TypeMismatchDeclared));
    }

    #[test]
    fn boolean_enum_and_float_coercions() {
        let report = compile_text(
            LIBRARY,
            r#"{"bk": {"type": "Book", "attributes": [
                {"dataType": "boolean", "attributeName": "available", "value": "TRUE"},
                {"dataType": "Genre", "attributeName": "genre", "value": "FICTION"},
                {"dataType": "int", "attributeName": "pages", "value": "312"}
            ]}}"#,
        );
        assert!(!report.has_errors(), "diags: {:?}", report.diagnostics);
        let obj = &report.model.objects["bk"];
        assert_eq!(obj.attr_values["available"], vec![ScalarValue::Bool(true)]);
        assert_eq!(
            obj.attr_values["genre"],
            vec![ScalarValue::EnumLit("FICTION".into())]
        );

        let report = compile_text(
            LIBRARY,
            r#"{"bk": {"type": "Book", "attributes": [
                {"dataType": "Genre", "attributeName": "genre", "value": "fiction"}
            ]}}"#,
        );
        assert_eq!(error_codes(&report), [DiagCode::ValueCoercionFailed]);
    }

    #[test]
    fn float_accepts_decimal_and_scientific_rejects_words() {
        let (m, _) = parse_ecore(include_str!("../fixtures/fleet.ecore")).unwrap();
        for ok in ["2.5", "1e3", "-0.25", "3", "+4.0E-2"] {
            assert!(
                coerce(ok, DataType::Float, &m).is_some(),
                "{ok} should coerce"
            );
        }
        for bad in ["fast", "", "inf", "NaN", "0x10"] {
            assert!(
                coerce(bad, DataType::Float, &m).is_none(),
                "{bad} should fail"
            );
        }
    }

    #[test]
    fn multivalued_attribute_appends_until_bound() {
        let report = compile_text(
            LIBRARY,
            r#"{"bk": {"type": "Book", "attributes": [
                {"dataType": "string", "attributeName": "tags", "value": "a"},
                {"dataType": "string", "attributeName": "tags", "value": "b"},
                {"dataType": "string", "attributeName": "title", "value": "t1"},
                {"dataType": "string", "attributeName": "title", "value": "t2"}
            ]}}"#,
        );
        let obj = &report.model.objects["bk"];
        assert_eq!(obj.attr_values["tags"].len(), 2);
        assert_eq!(obj.attr_values["title"].len(), 1);
        assert_eq!(error_codes(&report), [DiagCode::UpperBoundExceeded]);
        assert_eq!(
            report.counts.attributes,
            Counter {
                accepted: 3,
                attempted: 4
            }
        );
    }

    #[test]
    fn reference_link_keeps_target_contained_elsewhere() {
        let report = compile_text(ALLOCATION, FIG3);
        let core0 = &report.model.objects["core0"];
        // The VM link must not steal core0 from its CPU.
        assert_eq!(core0.container.as_ref().unwrap().0, "cpu1");
        assert_eq!(report.model.objects["VM1"].container, None);
    }

    #[test]
    fn second_container_is_rejected() {
        let report = compile_text(
            ALLOCATION,
            r#"{
                "b1": {"type": "Board", "associations": {"compositions": [
                    {"associationName": "cpus", "associatedClassName": "CPU", "instanceID": "c"}
                ], "references": []}},
                "b2": {"type": "Board", "associations": {"compositions": [
                    {"associationName": "cpus", "associatedClassName": "CPU", "instanceID": "c"}
                ], "references": []}},
                "c": {"type": "CPU"}
            }"#,
        );
        assert_eq!(error_codes(&report), [DiagCode::SecondContainer]);
        // Oracle: containment in-degree of every object stays <= 1.
        let in_degree = |id: &str| {
            report
                .model
                .objects
                .values()
                .flat_map(|o| &o.child_links)
                .filter(|(_, child)| child == id)
                .count()
        };
        assert_eq!(in_degree("c"), 1);
        assert_eq!(
            report.counts.associations,
            Counter {
                accepted: 1,
                attempted: 2
            }
        );
    }

    #[test]
    fn containment_cycle_is_rejected() {
        // Board cannot contain Board in the fixture, so use a two-level
        // chain: b contains c, then c tries to contain... CPUs cannot
        // contain Boards either, so build a dedicated metamodel.
        let text = r##"<?xml version="1.0"?>
<ecore:EPackage xmlns:ecore="http://www.eclipse.org/emf/2002/Ecore" xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" name="n" nsURI="http://example.org/n" nsPrefix="n">
  <eClassifiers xsi:type="ecore:EClass" name="Node">
    <eStructuralFeatures xsi:type="ecore:EReference" name="children" upperBound="-1" eType="#//Node" containment="true"/>
  </eClassifiers>
</ecore:EPackage>"##;
        let report = compile_text(
            text,
            r#"{
                "a": {"type": "Node", "associations": {"compositions": [
                    {"associationName": "children", "associatedClassName": "Node", "instanceID": "b"}
                ], "references": []}},
                "b": {"type": "Node", "associations": {"compositions": [
                    {"associationName": "children", "associatedClassName": "Node", "instanceID": "a"}
                ], "references": []}}
            }"#,
        );
        assert_eq!(error_codes(&report), [DiagCode::ContainmentCycle]);
        // Oracle: DFS from roots reaches every object exactly once.
        let mut seen = std::collections::HashSet::new();
        let mut stack = report.model.roots.clone();
        while let Some(id) = stack.pop() {
            assert!(seen.insert(id.clone()), "cycle reached {id} twice");
            stack.extend(
                report.model.objects[&id]
                    .child_links
                    .iter()
                    .map(|(_, c)| c.clone()),
            );
        }
        assert_eq!(seen.len(), report.model.objects.len());
    }

    #[test]
    fn self_composition_is_a_containment_cycle() {
        let text = r##"<?xml version="1.0"?>
<ecore:EPackage xmlns:ecore="http://www.eclipse.org/emf/2002/Ecore" xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" name="n" nsURI="http://example.org/n" nsPrefix="n">
  <eClassifiers xsi:type="ecore:EClass" name="Node">
    <eStructuralFeatures xsi:type="ecore:EReference" name="children" upperBound="-1" eType="#//Node" containment="true"/>
  </eClassifiers>
</ecore:EPackage>"##;
        let report = compile_text(
            text,
            r#"{"a": {"type": "Node", "associations": {"compositions": [
                {"associationName": "children", "associatedClassName": "Node", "instanceID": "a"}
            ], "references": []}}}"#,
        );
        assert_eq!(error_codes(&report), [DiagCode::ContainmentCycle]);
    }

    #[test]
    fn dangling_and_nonconforming_targets_are_rejected() {
        let report = compile_text(
            ALLOCATION,
            r#"{"b": {"type": "Board", "associations": {"compositions": [
                {"associationName": "cpus", "associatedClassName": "CPU", "instanceID": "ghost"}
            ], "references": []}}}"#,
        );
        assert_eq!(error_codes(&report), [DiagCode::DanglingTarget]);

        let report = compile_text(
            ALLOCATION,
            r#"{
                "b": {"type": "Board", "associations": {"compositions": [
                    {"associationName": "cpus", "associatedClassName": "CPU", "instanceID": "r"}
                ], "references": []}},
                "r": {"type": "RAM"}
            }"#,
        );
        assert_eq!(error_codes(&report), [DiagCode::TypeNonConforming]);
    }

    #[test]
    fn unknown_reference_is_rejected() {
        let report = compile_text(
            ALLOCATION,
            r#"{
                "b": {"type": "Board", "associations": {"references": [
                    {"associationName": "powers", "associatedClassName": "CPU", "instanceID": "c"}
                ], "compositions": []}},
                "c": {"type": "CPU"}
            }"#,
        );
        assert_eq!(error_codes(&report), [DiagCode::UnknownReference]);
    }

    #[test]
    fn kind_mismatch_accepts_under_metamodel_kind() {
        // "cpus" is containment but arrives as a reference entry.
        let report = compile_text(
            ALLOCATION,
            r#"{
                "b": {"type": "Board", "associations": {"compositions": [], "references": [
                    {"associationName": "cpus", "associatedClassName": "CPU", "instanceID": "c"}
                ]}},
                "c": {"type": "CPU"}
            }"#,
        );
        assert!(!report.has_errors());
        assert!(report
            .diagnostics
            .iter()
            .any(|d| d.code == DiagCode::KindMismatch));
        // Accepted as containment: c is contained by b.
        assert_eq!(report.model.objects["c"].container.as_ref().unwrap().0, "b");
        assert_eq!(report.model.roots, ["b"]);
    }

    #[test]
    fn subtype_target_conforms_through_inheritance() {
        let report = compile_text(
            LIBRARY,
            r#"{
                "lib": {"type": "Library", "associations": {"compositions": [
                    {"associationName": "members", "associatedClassName": "Member", "instanceID": "m"}
                ], "references": []}},
                "m": {"type": "Member"}
            }"#,
        );
        assert!(!report.has_errors(), "diags: {:?}", report.diagnostics);
        assert_eq!(report.model.roots, ["lib"]);
    }

    #[test]
    fn elements_on_rejected_owner_count_as_attempted() {
        let report = compile_text(
            LIBRARY,
            r#"{"p": {"type": "Person",
                "attributes": [
                    {"dataType": "string", "attributeName": "name", "value": "x"},
                    {"dataType": "string", "attributeName": "name", "value": "y"}
                ],
                "associations": {"compositions": [], "references": []}
            }}"#,
        );
        assert_eq!(
            report.counts.objects,
            Counter {
                accepted: 0,
                attempted: 1
            }
        );
        assert_eq!(
            report.counts.attributes,
            Counter {
                accepted: 0,
                attempted: 2
            }
        );
        let owner_missing = report
            .diagnostics
            .iter()
            .filter(|d| d.code == DiagCode::OwnerMissing)
            .count();
        assert_eq!(owner_missing, 2);
    }

    #[test]
    fn rejection_accounting_matches_error_diagnostics() {
        // Mixed failure modes in one CIM; every rejected element carries
        // exactly one error diagnostic.
        let report = compile_text(
            ALLOCATION,
            r#"{
                "b": {"type": "Board", "attributes": [
                    {"dataType": "string", "attributeName": "color", "value": "red"}
                ]},
                "x": {"type": "Ghost"},
                "c": {"type": "Core", "attributes": [
                    {"dataType": "int", "attributeName": "frequency", "value": "slow"}
                ]}
            }"#,
        );
        let rejected = report.counts.total_attempted() - report.counts.total_accepted();
        let errors = report.diagnostics.iter().filter(|d| d.is_error()).count() as u64;
        assert_eq!(rejected, errors);
    }

    #[test]
    fn lower_bound_violation_is_a_warning_only() {
        let text = r##"<?xml version="1.0"?>
<ecore:EPackage xmlns:ecore="http://www.eclipse.org/emf/2002/Ecore" xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" name="n" nsURI="http://example.org/n" nsPrefix="n">
  <eClassifiers xsi:type="ecore:EClass" name="A">
    <eStructuralFeatures xsi:type="ecore:EAttribute" name="req" lowerBound="1" eType="ecore:EDataType http://www.eclipse.org/emf/2002/Ecore#//EString"/>
  </eClassifiers>
</ecore:EPackage>"##;
        let report = compile_text(text, r#"{"a": {"type": "A"}}"#);
        assert!(!report.has_errors());
        assert!(report
            .diagnostics
            .iter()
            .any(|d| d.code == DiagCode::LowerBoundUnmet));
    }

    #[test]
    fn compile_is_deterministic() {
        let (m, _) = parse_ecore(ALLOCATION).unwrap();
        let (cim, _) = parse_cim(FIG3).unwrap();
        let a = compile(&m, &cim);
        let b = compile(&m, &cim);
        assert_eq!(format!("{:?}", a.model), format!("{:?}", b.model));
        assert_eq!(a.counts, b.counts);
        assert_eq!(a.diagnostics.len(), b.diagnostics.len());
    }
}
