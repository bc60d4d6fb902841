//! XMI 2.0 serialization of compiled instance models and the inverse
//! loader.
//!
//! A single root object becomes the document element; zero or several
//! roots are wrapped in `<xmi:XMI>`. Non-containment references are
//! encoded as fragment paths (`/`, `/2`, `//@cpus.0/@cores.1`). The writer
//! is deterministic: feature-declaration order for attributes, link
//! acceptance order for children, 2-space indentation.

use crate::compile::{CompileReport, InstanceModel, InstanceObject, ScalarValue};
use crate::ecore::{Classifier, ClassifierId, DataType, MetaModel, XMI_NS_URI, XSI_NS_URI};
use indexmap::IndexMap;
use std::collections::HashMap;
use std::fmt::Write as _;

#[derive(Debug, thiserror::Error)]
pub enum XmiError {
    #[error("malformed XMI: {0}")]
    MalformedXml(String),
    #[error("namespace mismatch: {0}")]
    NamespaceMismatch(String),
    #[error("unknown element class: {0}")]
    UnknownElementClass(String),
    #[error("unresolvable fragment path \"{0}\"")]
    UnresolvableFragmentPath(String),
}

/// Serializes the model of a compile report. Rejected elements never made
/// it into the model, so no filtering is needed here.
pub fn serialize_xmi(report: &CompileReport, m: &MetaModel) -> String {
    serialize_model(&report.model, m)
}

pub fn serialize_model(model: &InstanceModel, m: &MetaModel) -> String {
    let paths = fragment_paths(model);
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");

    let ns_decls = namespace_declarations(model, m);
    if model.roots.len() == 1 {
        let root = &model.objects[&model.roots[0]];
        write_object(&mut out, root, None, model, m, &paths, 0, &ns_decls);
    } else {
        out.push_str("<xmi:XMI xmi:version=\"2.0\"");
        for (prefix, uri) in &ns_decls {
            let _ = write!(out, " xmlns:{prefix}=\"{}\"", escape_attr(uri));
        }
        if model.roots.is_empty() {
            out.push_str("/>\n");
        } else {
            out.push_str(">\n");
            for id in &model.roots {
                write_object(&mut out, &model.objects[id], None, model, m, &paths, 1, &[]);
            }
            out.push_str("</xmi:XMI>\n");
        }
    }
    out
}

/// xmi and xsi first, then every metamodel package used by some object,
/// in package tree order.
fn namespace_declarations(model: &InstanceModel, m: &MetaModel) -> Vec<(String, String)> {
    let mut decls = vec![
        ("xmi".to_string(), XMI_NS_URI.to_string()),
        ("xsi".to_string(), XSI_NS_URI.to_string()),
    ];
    let used: std::collections::HashSet<_> = model
        .objects
        .values()
        .map(|o| m.classifier(o.class).package())
        .collect();
    for pid in m.package_ids() {
        if used.contains(&pid) {
            let p = m.package(pid);
            decls.push((p.ns_prefix.clone(), p.ns_uri.clone()));
        }
    }
    decls
}

/// Maps every object id to its fragment path. The sole root is "/";
/// roots under an `xmi:XMI` wrapper are "/0", "/1", …; children append
/// "/@feature.index".
fn fragment_paths(model: &InstanceModel) -> HashMap<String, String> {
    let mut paths = HashMap::new();
    let sole = model.roots.len() == 1;
    for (i, id) in model.roots.iter().enumerate() {
        let base = if sole {
            "/".to_string()
        } else {
            format!("/{i}")
        };
        assign_paths(model, id, base, &mut paths);
    }
    paths
}

fn assign_paths(
    model: &InstanceModel,
    id: &str,
    path: String,
    paths: &mut HashMap<String, String>,
) {
    let obj = &model.objects[id];
    let mut feature_counts: HashMap<&str, usize> = HashMap::new();
    for (feat, child) in &obj.child_links {
        let idx = feature_counts.entry(feat.as_str()).or_default();
        let child_path = format!("{path}/@{feat}.{idx}");
        *idx += 1;
        assign_paths(model, child, child_path, paths);
    }
    paths.insert(id.to_string(), path);
}

#[allow(clippy::too_many_arguments)]
fn write_object(
    out: &mut String,
    obj: &InstanceObject,
    containing_feature: Option<(&str, ClassifierId)>,
    model: &InstanceModel,
    m: &MetaModel,
    paths: &HashMap<String, String>,
    depth: usize,
    ns_decls: &[(String, String)],
) {
    let indent = "  ".repeat(depth);
    let class = m
        .classifier(obj.class)
        .as_class()
        .expect("instance objects are class-typed");

    let _ = write!(out, "{indent}<");
    let mut tag = String::new();
    match containing_feature {
        Some((feature, _)) => tag.push_str(feature),
        None => {
            let prefix = &m.package(class.package).ns_prefix;
            let _ = write!(tag, "{prefix}:{}", class.name);
        }
    }
    out.push_str(&tag);

    if containing_feature.is_none() && !ns_decls.is_empty() {
        out.push_str(" xmi:version=\"2.0\"");
        for (prefix, uri) in ns_decls {
            let _ = write!(out, " xmlns:{prefix}=\"{}\"", escape_attr(uri));
        }
    }
    if let Some((_, declared)) = containing_feature {
        if obj.class != declared {
            let prefix = &m.package(class.package).ns_prefix;
            let _ = write!(out, " xsi:type=\"{prefix}:{}\"", class.name);
        }
    }

    let (attrs, refs) = m.all_features(obj.class);
    for a in &attrs {
        if a.is_many() {
            continue;
        }
        if let Some(values) = obj.attr_values.get(&a.name) {
            if let Some(v) = values.first() {
                let _ = write!(out, " {}=\"{}\"", a.name, escape_attr(&v.render()));
            }
        }
    }
    for r in &refs {
        if r.containment {
            continue;
        }
        if let Some(targets) = obj.ref_targets.get(&r.name) {
            if !targets.is_empty() {
                let joined: Vec<&str> = targets.iter().map(|t| paths[t].as_str()).collect();
                let _ = write!(out, " {}=\"{}\"", r.name, escape_attr(&joined.join(" ")));
            }
        }
    }

    let many_attrs: Vec<_> = attrs
        .iter()
        .filter(|a| a.is_many() && obj.attr_values.get(&a.name).is_some_and(|v| !v.is_empty()))
        .collect();
    if many_attrs.is_empty() && obj.child_links.is_empty() {
        out.push_str("/>\n");
        return;
    }

    out.push_str(">\n");
    let inner = "  ".repeat(depth + 1);
    for a in many_attrs {
        for v in &obj.attr_values[&a.name] {
            let _ = writeln!(
                out,
                "{inner}<{0}>{1}</{0}>",
                a.name,
                escape_text(&v.render())
            );
        }
    }
    for (feat, child_id) in &obj.child_links {
        let declared = m
            .find_reference(obj.class, feat)
            .expect("accepted containment features exist")
            .target;
        write_object(
            out,
            &model.objects[child_id],
            Some((feat, declared)),
            model,
            m,
            paths,
            depth + 1,
            &[],
        );
    }
    let _ = writeln!(out, "{indent}</{tag}>");
}

fn escape_attr(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\n' => out.push_str("&#10;"),
            '\t' => out.push_str("&#9;"),
            '\r' => out.push_str("&#13;"),
            _ => out.push(c),
        }
    }
    out
}

fn escape_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '\r' => out.push_str("&#13;"),
            _ => out.push(c),
        }
    }
    out
}

/// Loads an XMI document back into an instance model. Object ids are
/// synthesized from fragment paths, so they match what references use.
pub fn parse_xmi(text: &str, m: &MetaModel) -> Result<InstanceModel, XmiError> {
    let doc =
        roxmltree::Document::parse(text).map_err(|e| XmiError::MalformedXml(e.to_string()))?;
    let root = doc.root_element();

    let mut loader = Loader {
        m,
        objects: IndexMap::new(),
        roots: Vec::new(),
        pending_refs: Vec::new(),
    };

    if root.tag_name().namespace() == Some(XMI_NS_URI) {
        if root.tag_name().name() != "XMI" {
            return Err(XmiError::MalformedXml(format!(
                "unexpected xmi element '{}'",
                root.tag_name().name()
            )));
        }
        let object_elems: Vec<_> = root.children().filter(|c| c.is_element()).collect();
        let sole = object_elems.len() == 1;
        for (i, elem) in object_elems.into_iter().enumerate() {
            let path = if sole {
                "/".to_string()
            } else {
                format!("/{i}")
            };
            let class = loader.class_of_root(&elem)?;
            loader.load_object(&elem, class, path, None)?;
        }
    } else {
        let class = loader.class_of_root(&root)?;
        loader.load_object(&root, class, "/".to_string(), None)?;
    }

    loader.resolve_references()?;
    Ok(InstanceModel {
        objects: loader.objects,
        roots: loader.roots,
    })
}

struct Loader<'m> {
    m: &'m MetaModel,
    objects: IndexMap<String, InstanceObject>,
    roots: Vec<String>,
    pending_refs: Vec<(String, String, String)>,
}

impl Loader<'_> {
    /// Resolves a `prefix:Class` root element against the metamodel's
    /// package namespaces.
    fn class_of_root(&self, elem: &roxmltree::Node) -> Result<ClassifierId, XmiError> {
        let name = elem.tag_name().name();
        let Some(uri) = elem.tag_name().namespace() else {
            return Err(XmiError::NamespaceMismatch(format!(
                "element '{name}' has no namespace; expected a metamodel package URI"
            )));
        };
        let Some(pkg) = self.m.find_package_by_ns_uri(uri) else {
            return Err(XmiError::NamespaceMismatch(format!(
                "namespace \"{uri}\" does not match any metamodel package"
            )));
        };
        self.resolve_concrete_class(pkg, name)
    }

    fn resolve_concrete_class(
        &self,
        pkg: crate::ecore::PackageId,
        name: &str,
    ) -> Result<ClassifierId, XmiError> {
        let Some(cid) = self.m.resolve_in_package(pkg, name) else {
            return Err(XmiError::UnknownElementClass(format!(
                "'{name}' is not a class of package '{}'",
                self.m.package(pkg).name
            )));
        };
        match self.m.classifier(cid) {
            Classifier::Class(c) if !c.is_abstract && !c.is_interface => Ok(cid),
            Classifier::Class(c) => Err(XmiError::UnknownElementClass(format!(
                "class '{}' is abstract and cannot appear as an instance element",
                c.name
            ))),
            Classifier::Enum(e) => Err(XmiError::UnknownElementClass(format!(
                "'{}' names an enum, not a class",
                e.name
            ))),
        }
    }

    /// Loads one object element, then recurses into containment children.
    /// Ids are the fragment paths computed on the way down.
    fn load_object(
        &mut self,
        elem: &roxmltree::Node,
        class: ClassifierId,
        path: String,
        container: Option<(String, String)>,
    ) -> Result<(), XmiError> {
        let mut obj = InstanceObject {
            id: path.clone(),
            class,
            attr_values: IndexMap::new(),
            ref_targets: IndexMap::new(),
            child_links: Vec::new(),
            container: container.clone(),
        };

        for attr in elem.attributes() {
            let ns = attr.namespace();
            if ns == Some(XMI_NS_URI) || ns == Some(XSI_NS_URI) {
                continue;
            }
            let name = attr.name();
            if let Some(a) = self.m.find_attribute(class, name) {
                let value = coerce_loaded(attr.value(), a.data_type, self.m, &path, name)?;
                obj.attr_values
                    .entry(name.to_string())
                    .or_default()
                    .push(value);
            } else if let Some(r) = self.m.find_reference(class, name) {
                if r.containment {
                    return Err(XmiError::MalformedXml(format!(
                        "containment '{name}' on \"{path}\" must be a child element, not an attribute"
                    )));
                }
                for target in attr.value().split_whitespace() {
                    self.pending_refs
                        .push((path.clone(), name.to_string(), target.to_string()));
                }
            } else {
                return Err(XmiError::MalformedXml(format!(
                    "'{}' is not a feature of class '{}'",
                    name,
                    self.m.classifier(class).name()
                )));
            }
        }

        if container.is_none() {
            self.roots.push(path.clone());
        }
        self.objects.insert(path.clone(), obj);

        let mut feature_counts: HashMap<String, usize> = HashMap::new();
        for child in elem.children() {
            if !child.is_element() {
                continue;
            }
            let name = child.tag_name().name();
            if child.tag_name().namespace() == Some(XMI_NS_URI)
                || child.tag_name().namespace() == Some(XSI_NS_URI)
            {
                continue;
            }
            if let Some(a) = self.m.find_attribute(class, name) {
                let text = child.text().unwrap_or_default();
                let value = coerce_loaded(text, a.data_type, self.m, &path, name)?;
                self.objects[&path]
                    .attr_values
                    .entry(name.to_string())
                    .or_default()
                    .push(value);
                continue;
            }
            let Some(r) = self.m.find_reference(class, name) else {
                return Err(XmiError::MalformedXml(format!(
                    "'{}' is not a feature of class '{}'",
                    name,
                    self.m.classifier(class).name()
                )));
            };
            if !r.containment {
                return Err(XmiError::MalformedXml(format!(
                    "reference '{name}' on \"{path}\" must be an attribute, not a child element"
                )));
            }
            let declared = r.target;
            let child_class = match xsi_type(&child) {
                Some(type_ref) => self.resolve_xsi_type(type_ref, &child)?,
                None => {
                    // Without xsi:type the declared target must be concrete.
                    self.require_concrete(declared, name)?
                }
            };
            if !self.m.conforms_to(child_class, declared) {
                return Err(XmiError::MalformedXml(format!(
                    "child of '{name}' is a '{}' which does not conform to '{}'",
                    self.m.classifier(child_class).name(),
                    self.m.classifier(declared).name()
                )));
            }

            let idx = feature_counts.entry(name.to_string()).or_default();
            let child_path = format!("{path}/@{name}.{idx}");
            *idx += 1;

            let parent = &mut self.objects[&path];
            parent
                .child_links
                .push((name.to_string(), child_path.clone()));
            parent
                .ref_targets
                .entry(name.to_string())
                .or_default()
                .push(child_path.clone());
            self.load_object(
                &child,
                child_class,
                child_path,
                Some((path.clone(), name.to_string())),
            )?;
        }
        Ok(())
    }

    fn require_concrete(
        &self,
        declared: ClassifierId,
        feature: &str,
    ) -> Result<ClassifierId, XmiError> {
        match self.m.classifier(declared) {
            Classifier::Class(c) if !c.is_abstract && !c.is_interface => Ok(declared),
            other => Err(XmiError::MalformedXml(format!(
                "child of '{feature}' needs xsi:type because '{}' is not concrete",
                other.name()
            ))),
        }
    }

    /// `xsi:type` values are `prefix:Class`; the prefix maps to a package
    /// namespace through the document's own declarations.
    fn resolve_xsi_type(
        &self,
        type_ref: &str,
        node: &roxmltree::Node,
    ) -> Result<ClassifierId, XmiError> {
        let (prefix, name) = type_ref.split_once(':').unwrap_or(("", type_ref));
        let Some(uri) = node.lookup_namespace_uri(Some(prefix).filter(|p| !p.is_empty())) else {
            return Err(XmiError::MalformedXml(format!(
                "xsi:type \"{type_ref}\" uses an undeclared namespace prefix"
            )));
        };
        let Some(pkg) = self.m.find_package_by_ns_uri(uri) else {
            return Err(XmiError::NamespaceMismatch(format!(
                "xsi:type namespace \"{uri}\" does not match any metamodel package"
            )));
        };
        self.resolve_concrete_class(pkg, name)
    }

    /// Second pass: every recorded fragment path must land on a loaded
    /// object.
    fn resolve_references(&mut self) -> Result<(), XmiError> {
        let pending = std::mem::take(&mut self.pending_refs);
        for (owner, feature, raw_path) in pending {
            let target = self.resolve_fragment(&raw_path)?;
            self.objects[&owner]
                .ref_targets
                .entry(feature)
                .or_default()
                .push(target);
        }
        Ok(())
    }

    /// Walks a fragment path structurally: root selector, then
    /// `@feature.index` hops ("@feature" alone means index 0).
    fn resolve_fragment(&self, path: &str) -> Result<String, XmiError> {
        let fail = || XmiError::UnresolvableFragmentPath(path.to_string());
        let rest = path.strip_prefix('/').ok_or_else(fail)?;
        let mut segments = rest.split('/');
        let first = segments.next().unwrap_or_default();

        let mut current = if first.is_empty() {
            self.roots.first().cloned().ok_or_else(fail)?
        } else if first.starts_with('@') {
            // "/@feat.0" form: relative to the sole root.
            let root = self.roots.first().cloned().ok_or_else(fail)?;
            self.hop(&root, first).ok_or_else(fail)?
        } else {
            let idx: usize = first.parse().map_err(|_| fail())?;
            self.roots.get(idx).cloned().ok_or_else(fail)?
        };

        for seg in segments {
            if seg.is_empty() {
                continue;
            }
            current = self.hop(&current, seg).ok_or_else(fail)?;
        }
        Ok(current)
    }

    fn hop(&self, from: &str, segment: &str) -> Option<String> {
        let body = segment.strip_prefix('@')?;
        let (feature, idx) = match body.rsplit_once('.') {
            Some((f, i)) if i.bytes().all(|b| b.is_ascii_digit()) && !i.is_empty() => {
                (f, i.parse::<usize>().ok()?)
            }
            _ => (body, 0),
        };
        let obj = self.objects.get(from)?;
        obj.ref_targets.get(feature)?.get(idx).cloned()
    }
}

fn xsi_type<'a>(node: &'a roxmltree::Node) -> Option<&'a str> {
    node.attribute((XSI_NS_URI, "type"))
}

fn coerce_loaded(
    raw: &str,
    data_type: DataType,
    m: &MetaModel,
    path: &str,
    feature: &str,
) -> Result<ScalarValue, XmiError> {
    let parsed = match data_type {
        DataType::String => Some(ScalarValue::Str(raw.to_string())),
        DataType::Int => raw.parse::<i64>().ok().map(ScalarValue::Int),
        DataType::Float => raw
            .parse::<f64>()
            .ok()
            .filter(|f| f.is_finite())
            .map(ScalarValue::Float),
        DataType::Boolean => match raw {
            _ if raw.eq_ignore_ascii_case("true") => Some(ScalarValue::Bool(true)),
            _ if raw.eq_ignore_ascii_case("false") => Some(ScalarValue::Bool(false)),
            _ => None,
        },
        DataType::Enum(eid) => {
            let e = m
                .classifier(eid)
                .as_enum()
                .expect("enum ids point at enums");
            e.literals
                .iter()
                .any(|l| l == raw)
                .then(|| ScalarValue::EnumLit(raw.to_string()))
        }
    };
    parsed.ok_or_else(|| {
        XmiError::MalformedXml(format!(
            "value \"{raw}\" of '{feature}' on \"{path}\" does not coerce to {}",
            data_type.display_name(m)
        ))
    })
}
