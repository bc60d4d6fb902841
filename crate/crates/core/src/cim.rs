//! The conceptual instance model (CIM): a flat JSON intermediate
//! representation of an instance model.
//!
//! LLMs emit this format instead of XMI. The module extracts the JSON
//! payload from raw model output, parses it leniently (collecting
//! diagnostics instead of failing), validates structure, and writes the
//! canonical form used for few-shot examples.

use crate::diag::{DiagCode, Diagnostic};
use indexmap::IndexMap;
use serde_json::{Map, Value};
use thiserror::Error;

/// The JSON template shown to LLMs. Parsing and re-serializing this text
/// through the canonical writer reproduces it byte for byte.
pub const CIM_TEMPLATE: &str = r#"{
 "<InstanceID>": {
  "type": "<ClassName>",
  "attributes": [
   {
    "dataType": "<DataType>",
    "attributeName": "<AttributeName>",
    "value": "<Value>"
   }
  ],
  "associations": {
   "compositions": [
    {
     "associationName": "<AssociationName>",
     "associatedClassName": "<ClassName>",
     "instanceID": "<InstanceID>"
    }
   ],
   "references": [
    {
     "associationName": "<AssociationName>",
     "associatedClassName": "<ClassName>",
     "instanceID": "<InstanceID>"
    }
   ]
  }
 }
}"#;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConceptualInstanceModel {
    /// Instance id to object spec, in source order.
    pub objects: IndexMap<String, ObjectSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ObjectSpec {
    pub type_name: String,
    pub attributes: Vec<AttributeSpec>,
    pub compositions: Vec<LinkSpec>,
    pub references: Vec<LinkSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeSpec {
    /// Scalar kind as written in the source; the metamodel's declared type
    /// wins during compilation.
    pub data_type: String,
    pub attribute_name: String,
    /// Raw value text. Native JSON scalars are stringified canonically.
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkSpec {
    pub association_name: String,
    pub associated_class_name: String,
    pub target_instance_id: String,
}

#[derive(Debug, Error)]
pub enum CimError {
    #[error("input is not valid JSON: {0}")]
    InvalidJson(String),
    #[error("top-level JSON value is not an object")]
    NotAJsonObject,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("no JSON object found in the output")]
pub struct NoJsonFound;

/// Returns the first balanced `{...}` block that parses as JSON, after
/// dropping Markdown code-fence lines. Deterministic: earlier candidates
/// win regardless of size.
pub fn extract_json_payload(raw: &str) -> Result<String, NoJsonFound> {
    let stripped: String = raw
        .lines()
        .filter(|line| !line.trim_start().starts_with("```"))
        .collect::<Vec<_>>()
        .join("\n");

    let bytes: Vec<(usize, char)> = stripped.char_indices().collect();
    let mut start = 0usize;
    while let Some(open) = bytes[start..].iter().position(|(_, c)| *c == '{') {
        let open = start + open;
        if let Some(end_byte) = balanced_end(&bytes, open) {
            let begin_byte = bytes[open].0;
            let candidate = &stripped[begin_byte..end_byte];
            if serde_json::from_str::<Value>(candidate).is_ok() {
                return Ok(candidate.to_string());
            }
        }
        start = open + 1;
    }
    Err(NoJsonFound)
}

/// Scans from the opening brace at char index `open`; returns the byte
/// offset one past the matching close brace, honoring JSON strings.
fn balanced_end(chars: &[(usize, char)], open: usize) -> Option<usize> {
    let mut depth = 0i64;
    let mut in_string = false;
    let mut escaped = false;
    for &(byte, c) in &chars[open..] {
        if in_string {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(byte + 1);
                }
            }
            _ => {}
        }
    }
    None
}

/// Parses CIM JSON. Unknown keys warn; malformed entries are dropped with
/// error diagnostics while the rest of the model is retained.
pub fn parse_cim(json_text: &str) -> Result<(ConceptualInstanceModel, Vec<Diagnostic>), CimError> {
    let value: Value =
        serde_json::from_str(json_text).map_err(|e| CimError::InvalidJson(e.to_string()))?;
    let Value::Object(entries) = value else {
        return Err(CimError::NotAJsonObject);
    };

    let mut cim = ConceptualInstanceModel::default();
    let mut diags = Vec::new();

    for (id, entry) in entries {
        let Value::Object(fields) = entry else {
            diags.push(
                Diagnostic::error(
                    DiagCode::MalformedEntry,
                    "instance entry is not a JSON object; dropped",
                )
                .with_instance(&id),
            );
            continue;
        };

        let type_name = match fields.get("type").and_then(Value::as_str) {
            Some(t) if !t.is_empty() => t.to_string(),
            _ => {
                diags.push(
                    Diagnostic::error(
                        DiagCode::MissingTypeField,
                        "instance has no non-empty \"type\"; dropped",
                    )
                    .with_instance(&id),
                );
                continue;
            }
        };

        let mut spec = ObjectSpec {
            type_name,
            ..ObjectSpec::default()
        };

        for (key, val) in &fields {
            match key.as_str() {
                "type" => {}
                "attributes" => parse_attributes(val, &id, &mut spec, &mut diags),
                "associations" => parse_associations(val, &id, &mut spec, &mut diags),
                "compositions" | "references" => {
                    diags.push(
                        Diagnostic::warning(
                            DiagCode::AssociationAlias,
                            format!(
                                "\"{key}\" given at instance level instead of under \
                                 \"associations\"; accepted"
                            ),
                        )
                        .with_instance(&id),
                    );
                    parse_links(val, &id, key, &mut spec, &mut diags);
                }
                other => diags.push(
                    Diagnostic::warning(
                        DiagCode::UnknownKey,
                        format!("unknown key \"{other}\" ignored"),
                    )
                    .with_instance(&id),
                ),
            }
        }

        cim.objects.insert(id, spec);
    }

    Ok((cim, diags))
}

fn parse_attributes(val: &Value, id: &str, spec: &mut ObjectSpec, diags: &mut Vec<Diagnostic>) {
    let Value::Array(items) = val else {
        diags.push(
            Diagnostic::error(
                DiagCode::MalformedEntry,
                "\"attributes\" is not an array; dropped",
            )
            .with_instance(id),
        );
        return;
    };
    for item in items {
        let Value::Object(fields) = item else {
            diags.push(
                Diagnostic::error(
                    DiagCode::MalformedEntry,
                    "attribute entry is not an object; dropped",
                )
                .with_instance(id),
            );
            continue;
        };
        let name = match fields.get("attributeName").and_then(Value::as_str) {
            Some(n) if !n.is_empty() => n.to_string(),
            _ => {
                diags.push(
                    Diagnostic::error(
                        DiagCode::MalformedEntry,
                        "attribute entry has no non-empty \"attributeName\"; dropped",
                    )
                    .with_instance(id),
                );
                continue;
            }
        };
        let value = match fields.get("value") {
            None => String::new(),
            Some(v) => match scalar_to_string(v) {
                Some(s) => s,
                None => {
                    diags.push(
                        Diagnostic::error(
                            DiagCode::MalformedEntry,
                            "attribute \"value\" is not a JSON scalar; dropped",
                        )
                        .with_instance(id)
                        .with_feature(&name),
                    );
                    continue;
                }
            },
        };
        warn_unknown_keys(fields, &["dataType", "attributeName", "value"], id, diags);
        spec.attributes.push(AttributeSpec {
            data_type: fields
                .get("dataType")
                .and_then(Value::as_str)
                .unwrap_or("")
                .to_string(),
            attribute_name: name,
            value,
        });
    }
}

fn parse_associations(val: &Value, id: &str, spec: &mut ObjectSpec, diags: &mut Vec<Diagnostic>) {
    let Value::Object(fields) = val else {
        diags.push(
            Diagnostic::error(
                DiagCode::MalformedEntry,
                "\"associations\" is not an object; dropped",
            )
            .with_instance(id),
        );
        return;
    };
    for (key, lists) in fields {
        match key.as_str() {
            "compositions" | "references" => parse_links(lists, id, key, spec, diags),
            other => diags.push(
                Diagnostic::warning(
                    DiagCode::UnknownKey,
                    format!("unknown key \"{other}\" under \"associations\" ignored"),
                )
                .with_instance(id),
            ),
        }
    }
}

fn parse_links(
    val: &Value,
    id: &str,
    kind: &str,
    spec: &mut ObjectSpec,
    diags: &mut Vec<Diagnostic>,
) {
    let Value::Array(items) = val else {
        diags.push(
            Diagnostic::error(
                DiagCode::MalformedEntry,
                format!("\"{kind}\" is not an array; dropped"),
            )
            .with_instance(id),
        );
        return;
    };
    for item in items {
        let Value::Object(fields) = item else {
            diags.push(
                Diagnostic::error(
                    DiagCode::MalformedEntry,
                    format!("{kind} entry is not an object; dropped"),
                )
                .with_instance(id),
            );
            continue;
        };
        let name = fields
            .get("associationName")
            .and_then(Value::as_str)
            .unwrap_or("")
            .to_string();
        let target = fields
            .get("instanceID")
            .and_then(scalar_to_string)
            .unwrap_or_default();
        if name.is_empty() || target.is_empty() {
            diags.push(
                Diagnostic::error(
                    DiagCode::MalformedEntry,
                    format!(
                        "{kind} entry needs non-empty \"associationName\" and \
                         \"instanceID\"; dropped"
                    ),
                )
                .with_instance(id),
            );
            continue;
        }
        warn_unknown_keys(
            fields,
            &["associationName", "associatedClassName", "instanceID"],
            id,
            diags,
        );
        let link = LinkSpec {
            association_name: name,
            associated_class_name: fields
                .get("associatedClassName")
                .and_then(Value::as_str)
                .unwrap_or("")
                .to_string(),
            target_instance_id: target,
        };
        if kind == "compositions" {
            spec.compositions.push(link);
        } else {
            spec.references.push(link);
        }
    }
}

fn warn_unknown_keys(
    fields: &Map<String, Value>,
    known: &[&str],
    id: &str,
    diags: &mut Vec<Diagnostic>,
) {
    for key in fields.keys() {
        if !known.contains(&key.as_str()) {
            diags.push(
                Diagnostic::warning(
                    DiagCode::UnknownKey,
                    format!("unknown key \"{key}\" ignored"),
                )
                .with_instance(id),
            );
        }
    }
}

/// Canonical string rendering of a JSON scalar: `1`, `2.5`, `true`, text
/// as-is. Arrays, objects, and null are not scalars.
fn scalar_to_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Null | Value::Array(_) | Value::Object(_) => None,
    }
}

/// Metamodel-independent structural checks: every link target must name an
/// object in the model, and no object may compose itself.
pub fn validate_structure(cim: &ConceptualInstanceModel) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for (id, spec) in &cim.objects {
        for link in &spec.compositions {
            if link.target_instance_id == *id {
                diags.push(
                    Diagnostic::error(
                        DiagCode::SelfComposition,
                        format!("instance composes itself via '{}'", link.association_name),
                    )
                    .with_instance(id)
                    .with_feature(&link.association_name),
                );
            } else if !cim.objects.contains_key(&link.target_instance_id) {
                diags.push(dangling(id, link));
            }
        }
        for link in &spec.references {
            if !cim.objects.contains_key(&link.target_instance_id) {
                diags.push(dangling(id, link));
            }
        }
    }
    diags
}

fn dangling(id: &str, link: &LinkSpec) -> Diagnostic {
    Diagnostic::error(
        DiagCode::DanglingTargetId,
        format!(
            "link '{}' targets unknown instance \"{}\"",
            link.association_name, link.target_instance_id
        ),
    )
    .with_instance(id)
    .with_feature(&link.association_name)
}

/// The CIM as a JSON value in canonical shape (all sections present).
pub fn to_json(cim: &ConceptualInstanceModel) -> Value {
    let mut root = Map::new();
    for (id, spec) in &cim.objects {
        let mut obj = Map::new();
        obj.insert("type".into(), Value::String(spec.type_name.clone()));
        obj.insert(
            "attributes".into(),
            Value::Array(
                spec.attributes
                    .iter()
                    .map(|a| {
                        let mut e = Map::new();
                        e.insert("dataType".into(), Value::String(a.data_type.clone()));
                        e.insert(
                            "attributeName".into(),
                            Value::String(a.attribute_name.clone()),
                        );
                        e.insert("value".into(), Value::String(a.value.clone()));
                        Value::Object(e)
                    })
                    .collect(),
            ),
        );
        let mut assoc = Map::new();
        assoc.insert("compositions".into(), links_to_json(&spec.compositions));
        assoc.insert("references".into(), links_to_json(&spec.references));
        obj.insert("associations".into(), Value::Object(assoc));
        root.insert(id.clone(), Value::Object(obj));
    }
    Value::Object(root)
}

fn links_to_json(links: &[LinkSpec]) -> Value {
    Value::Array(
        links
            .iter()
            .map(|l| {
                let mut e = Map::new();
                e.insert(
                    "associationName".into(),
                    Value::String(l.association_name.clone()),
                );
                e.insert(
                    "associatedClassName".into(),
                    Value::String(l.associated_class_name.clone()),
                );
                e.insert(
                    "instanceID".into(),
                    Value::String(l.target_instance_id.clone()),
                );
                Value::Object(e)
            })
            .collect(),
    )
}

/// Canonical writer: one-space indent, key order as in the template.
/// `parse_cim` of this output reproduces the input model exactly.
pub fn to_canonical_string(cim: &ConceptualInstanceModel) -> String {
    let value = to_json(cim);
    let mut buf = Vec::new();
    let formatter = serde_json::ser::PrettyFormatter::with_indent(b" ");
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, formatter);
    serde::Serialize::serialize(&value, &mut ser).expect("CIM serializes");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diag::has_errors;

    const FIG3: &str = include_str!("../fixtures/allocation_fig3.cim.json");

    #[test]
    fn listing_shaped_instance_parses_cleanly() {
        let text = r#"{
          "b1": {
            "type": "Board",
            "attributes": [
              {"dataType": "string", "attributeName": "name", "value": "b1"}
            ],
            "associations": {"compositions": [], "references": []}
          }
        }"#;
        let (cim, diags) = parse_cim(text).unwrap();
        assert_eq!(cim.objects.len(), 1);
        assert!(diags.is_empty());
        let spec = &cim.objects["b1"];
        assert_eq!(spec.type_name, "Board");
        assert_eq!(spec.attributes.len(), 1);
        assert_eq!(spec.attributes[0].value, "b1");
    }

    #[test]
    fn empty_object_is_an_empty_model() {
        let (cim, diags) = parse_cim("{}").unwrap();
        assert!(cim.objects.is_empty());
        assert!(diags.is_empty());
    }

    #[test]
    fn missing_type_drops_object_but_keeps_the_rest() {
        let text = r#"{
          "a": {"attributes": []},
          "b": {"type": "Board"}
        }"#;
        let (cim, diags) = parse_cim(text).unwrap();
        assert_eq!(cim.objects.len(), 1);
        assert!(cim.objects.contains_key("b"));
        let dropped: Vec<_> = diags
            .iter()
            .filter(|d| d.code == DiagCode::MissingTypeField)
            .collect();
        assert_eq!(dropped.len(), 1);
        assert_eq!(dropped[0].instance_id.as_deref(), Some("a"));
        // Retained + dropped = source count; diagnostics cover every drop.
        assert_eq!(cim.objects.len() + dropped.len(), 2);
        assert!(diags.len() >= dropped.len());
    }

    #[test]
    fn unknown_keys_warn_and_are_ignored() {
        let text = r#"{"x": {"type": "Board", "comment": "extra"}}"#;
        let (cim, diags) = parse_cim(text).unwrap();
        assert_eq!(cim.objects.len(), 1);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, DiagCode::UnknownKey);
        assert!(!has_errors(&diags));
    }

    #[test]
    fn top_level_link_lists_are_accepted_as_alias() {
        let text = r#"{
          "x": {
            "type": "Board",
            "compositions": [
              {"associationName": "cpus", "associatedClassName": "CPU", "instanceID": "y"}
            ]
          },
          "y": {"type": "CPU"}
        }"#;
        let (cim, diags) = parse_cim(text).unwrap();
        assert_eq!(cim.objects["x"].compositions.len(), 1);
        assert!(diags.iter().any(|d| d.code == DiagCode::AssociationAlias));
        assert!(!has_errors(&diags));
    }

    #[test]
    fn native_scalars_are_stringified_canonically() {
        let text = r#"{
          "x": {
            "type": "Core",
            "attributes": [
              {"dataType": "int", "attributeName": "frequency", "value": 1},
              {"dataType": "float", "attributeName": "load", "value": 2.5},
              {"dataType": "boolean", "attributeName": "on", "value": true}
            ]
          }
        }"#;
        let (cim, _) = parse_cim(text).unwrap();
        let values: Vec<&str> = cim.objects["x"]
            .attributes
            .iter()
            .map(|a| a.value.as_str())
            .collect();
        assert_eq!(values, ["1", "2.5", "true"]);
    }

    #[test]
    fn malformed_entries_drop_with_error_diagnostics() {
        let text = r#"{
          "x": {
            "type": "Board",
            "attributes": [{"dataType": "string", "value": "no name"}, 7],
            "associations": {"references": [{"associationName": "hosts"}]}
          }
        }"#;
        let (cim, diags) = parse_cim(text).unwrap();
        assert!(cim.objects["x"].attributes.is_empty());
        assert!(cim.objects["x"].references.is_empty());
        let errors = diags.iter().filter(|d| d.is_error()).count();
        assert_eq!(errors, 3);
        assert!(diags.iter().all(|d| d.code == DiagCode::MalformedEntry));
    }

    #[test]
    fn non_object_top_level_is_rejected() {
        assert!(matches!(parse_cim("[1,2]"), Err(CimError::NotAJsonObject)));
        assert!(matches!(
            parse_cim("not json"),
            Err(CimError::InvalidJson(_))
        ));
    }

    #[test]
    fn extract_strips_fences() {
        let raw = "```json\n{\"b1\":{\"type\":\"Board\"}}\n```";
        assert_eq!(
            extract_json_payload(raw).unwrap(),
            "{\"b1\":{\"type\":\"Board\"}}"
        );
    }

    #[test]
    fn extract_of_bare_object_is_identity() {
        let raw = r#"{"b1": {"type": "Board"}}"#;
        assert_eq!(extract_json_payload(raw).unwrap(), raw);
    }

    #[test]
    fn extract_without_braces_fails() {
        assert_eq!(
            extract_json_payload("Sure! Here is the model:"),
            Err(NoJsonFound)
        );
    }

    #[test]
    fn extract_takes_first_parsable_object() {
        let raw = "Here you go:\n{\"a\": 1}\nand also {\"b\": 2}";
        assert_eq!(extract_json_payload(raw).unwrap(), "{\"a\": 1}");
    }

    #[test]
    fn extract_skips_unparsable_brace_runs() {
        let raw = "weird {not json} but then {\"ok\": true}";
        assert_eq!(extract_json_payload(raw).unwrap(), "{\"ok\": true}");
    }

    #[test]
    fn extract_honors_braces_inside_strings() {
        let raw = r#"{"s": "}{", "n": 1}"#;
        assert_eq!(extract_json_payload(raw).unwrap(), raw);
    }

    #[test]
    fn validate_reports_dangling_target() {
        let text = r#"{
          "a": {
            "type": "Board",
            "associations": {
              "compositions": [
                {"associationName": "cpus", "associatedClassName": "CPU", "instanceID": "x9"}
              ],
              "references": []
            }
          }
        }"#;
        let (cim, _) = parse_cim(text).unwrap();
        let diags = validate_structure(&cim);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, DiagCode::DanglingTargetId);
        assert!(diags[0].detail.contains("x9"));
    }

    #[test]
    fn validate_of_closed_model_is_empty() {
        let (cim, _) = parse_cim(FIG3).unwrap();
        assert!(validate_structure(&cim).is_empty());
    }

    #[test]
    fn validate_reports_self_composition() {
        let text = r#"{
          "a": {
            "type": "Board",
            "associations": {
              "compositions": [
                {"associationName": "cpus", "associatedClassName": "Board", "instanceID": "a"}
              ],
              "references": []
            }
          }
        }"#;
        let (cim, _) = parse_cim(text).unwrap();
        let diags = validate_structure(&cim);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, DiagCode::SelfComposition);
    }

    #[test]
    fn fig3_fixture_roundtrips_through_canonical_writer() {
        let (cim, diags) = parse_cim(FIG3).unwrap();
        assert!(diags.is_empty());
        assert_eq!(cim.objects.len(), 9);
        let text = to_canonical_string(&cim);
        let (again, diags) = parse_cim(&text).unwrap();
        assert!(diags.is_empty());
        assert_eq!(cim, again);
    }

    #[test]
    fn template_roundtrips_byte_identically() {
        let (cim, diags) = parse_cim(CIM_TEMPLATE).unwrap();
        assert!(diags.is_empty());
        assert_eq!(to_canonical_string(&cim), CIM_TEMPLATE);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_ident() -> impl Strategy<Value = String> {
            "[A-Za-z][A-Za-z0-9_]{0,8}"
        }

        fn arb_value() -> impl Strategy<Value = String> {
            ".{0,12}"
        }

        fn arb_link() -> impl Strategy<Value = LinkSpec> {
            (arb_ident(), arb_ident(), arb_ident()).prop_map(|(a, c, t)| LinkSpec {
                association_name: a,
                associated_class_name: c,
                target_instance_id: t,
            })
        }

        fn arb_spec() -> impl Strategy<Value = ObjectSpec> {
            (
                arb_ident(),
                prop::collection::vec(
                    (arb_ident(), arb_ident(), arb_value()).prop_map(|(d, n, v)| AttributeSpec {
                        data_type: d,
                        attribute_name: n,
                        value: v,
                    }),
                    0..4,
                ),
                prop::collection::vec(arb_link(), 0..3),
                prop::collection::vec(arb_link(), 0..3),
            )
                .prop_map(|(type_name, attributes, compositions, references)| {
                    ObjectSpec {
                        type_name,
                        attributes,
                        compositions,
                        references,
                    }
                })
        }

        fn arb_cim() -> impl Strategy<Value = ConceptualInstanceModel> {
            prop::collection::vec((arb_ident(), arb_spec()), 0..6).prop_map(|entries| {
                let mut cim = ConceptualInstanceModel::default();
                for (i, (id, spec)) in entries.into_iter().enumerate() {
                    cim.objects.insert(format!("{id}_{i}"), spec);
                }
                cim
            })
        }

        proptest! {
            #[test]
            fn canonical_writer_roundtrips(cim in arb_cim()) {
                let text = to_canonical_string(&cim);
                let (parsed, diags) = parse_cim(&text).unwrap();
                prop_assert!(diags.is_empty(), "diagnostics: {diags:?}");
                prop_assert_eq!(parsed, cim);
            }
        }
    }
}
