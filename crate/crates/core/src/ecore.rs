//! Ecore metamodel loading and structural queries.
//!
//! [`parse_ecore`] reads the XML form of a metamodel into an immutable
//! [`MetaModel`]: a package tree plus a flat classifier arena addressed by
//! [`ClassifierId`]. Queries needed by the later stages (classifier lookup,
//! inherited-feature flattening, instantiability, subtype conformance) live
//! on [`MetaModel`].

use crate::diag::{DiagCode, Diagnostic};
use indexmap::IndexMap;
use std::collections::HashSet;
use thiserror::Error;

pub const ECORE_NS_URI: &str = "http://www.eclipse.org/emf/2002/Ecore";
pub const XSI_NS_URI: &str = "http://www.w3.org/2001/XMLSchema-instance";
pub const XMI_NS_URI: &str = "http://www.omg.org/XMI";

pub type ClassifierId = usize;
pub type PackageId = usize;

/// Scalar kind an attribute can hold. Built-in Ecore data types collapse to
/// the four plain kinds; enum attributes point at their [`EEnum`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataType {
    String,
    Int,
    Float,
    Boolean,
    Enum(ClassifierId),
}

impl DataType {
    /// Human-facing type name: the plain kind or the enum's own name.
    pub fn display_name<'a>(&self, m: &'a MetaModel) -> &'a str {
        match self {
            DataType::String => "string",
            DataType::Int => "int",
            DataType::Float => "float",
            DataType::Boolean => "boolean",
            DataType::Enum(id) => m.classifier(*id).name(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EAttribute {
    pub name: String,
    pub data_type: DataType,
    pub lower: u32,
    /// Upper bound; -1 means unbounded.
    pub upper: i64,
}

#[derive(Debug, Clone)]
pub struct EReference {
    pub name: String,
    pub target: ClassifierId,
    pub containment: bool,
    pub lower: u32,
    /// Upper bound; -1 means unbounded.
    pub upper: i64,
}

impl EAttribute {
    pub fn is_many(&self) -> bool {
        self.upper < 0 || self.upper > 1
    }
}

#[derive(Debug, Clone)]
pub struct EClass {
    pub name: String,
    pub is_abstract: bool,
    pub is_interface: bool,
    pub super_types: Vec<ClassifierId>,
    pub attributes: Vec<EAttribute>,
    pub references: Vec<EReference>,
    pub package: PackageId,
}

#[derive(Debug, Clone)]
pub struct EEnum {
    pub name: String,
    pub literals: Vec<String>,
    pub package: PackageId,
}

#[derive(Debug, Clone)]
pub enum Classifier {
    Class(EClass),
    Enum(EEnum),
}

impl Classifier {
    pub fn name(&self) -> &str {
        match self {
            Classifier::Class(c) => &c.name,
            Classifier::Enum(e) => &e.name,
        }
    }

    pub fn package(&self) -> PackageId {
        match self {
            Classifier::Class(c) => c.package,
            Classifier::Enum(e) => e.package,
        }
    }

    pub fn as_class(&self) -> Option<&EClass> {
        match self {
            Classifier::Class(c) => Some(c),
            Classifier::Enum(_) => None,
        }
    }

    pub fn as_enum(&self) -> Option<&EEnum> {
        match self {
            Classifier::Enum(e) => Some(e),
            Classifier::Class(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EPackage {
    pub name: String,
    pub ns_uri: String,
    pub ns_prefix: String,
    pub classifiers: Vec<ClassifierId>,
    pub subpackages: Vec<PackageId>,
    pub parent: Option<PackageId>,
}

/// Immutable metamodel. Package 0 is the document root package; classifier
/// ids index a flat arena in package-tree pre-order.
#[derive(Debug)]
pub struct MetaModel {
    packages: Vec<EPackage>,
    classifiers: Vec<Classifier>,
    /// Qualified name ("pkg.sub.Name") to classifier, in pre-order.
    index: IndexMap<String, ClassifierId>,
    /// Simple name to first matching classifier in pre-order.
    simple: IndexMap<String, ClassifierId>,
}

#[derive(Debug, Error)]
pub enum EcoreError {
    #[error("malformed ecore XML: {0}")]
    MalformedXml(String),
    #[error("package '{0}' has an empty or missing nsURI")]
    MissingNsURI(String),
    #[error("unresolvable eType reference '{href}' ({context})")]
    UnresolvableTypeRef { href: String, context: String },
    #[error("inheritance cycle involving class '{0}'")]
    InheritanceCycle(String),
}

impl MetaModel {
    pub fn root_package(&self) -> &EPackage {
        &self.packages[0]
    }

    pub fn package(&self, id: PackageId) -> &EPackage {
        &self.packages[id]
    }

    /// Package ids in pre-order (root first).
    pub fn package_ids(&self) -> Vec<PackageId> {
        let mut order = Vec::new();
        let mut stack = vec![0];
        while let Some(pid) = stack.pop() {
            order.push(pid);
            for &sub in self.packages[pid].subpackages.iter().rev() {
                stack.push(sub);
            }
        }
        order
    }

    pub fn classifier(&self, id: ClassifierId) -> &Classifier {
        &self.classifiers[id]
    }

    pub fn classifier_count(&self) -> usize {
        self.classifiers.len()
    }

    /// Qualified-name index over all classifiers, in pre-order.
    pub fn classifier_index(&self) -> &IndexMap<String, ClassifierId> {
        &self.index
    }

    /// Resolves a classifier by simple name (first match in pre-order) or by
    /// qualified "pkg.sub.Name" form. Case-sensitive; `None` when absent.
    pub fn resolve_classifier(&self, name: &str) -> Option<ClassifierId> {
        if name.contains('.') {
            self.index.get(name).copied()
        } else {
            self.simple.get(name).copied()
        }
    }

    pub fn find_package_by_ns_uri(&self, uri: &str) -> Option<PackageId> {
        self.package_ids()
            .into_iter()
            .find(|&pid| self.packages[pid].ns_uri == uri)
    }

    /// Looks a classifier up among one package's own classifiers.
    pub fn resolve_in_package(&self, pid: PackageId, name: &str) -> Option<ClassifierId> {
        self.packages[pid]
            .classifiers
            .iter()
            .copied()
            .find(|&cid| self.classifiers[cid].name() == name)
    }

    /// True for a concrete EClass; false for abstract classes, interfaces,
    /// and enums.
    pub fn is_instantiable(&self, id: ClassifierId) -> bool {
        match &self.classifiers[id] {
            Classifier::Class(c) => !c.is_abstract && !c.is_interface,
            Classifier::Enum(_) => false,
        }
    }

    /// The class itself plus its transitive supertypes, supertype-first,
    /// each visited once.
    pub fn linearize(&self, class: ClassifierId) -> Vec<ClassifierId> {
        let mut order = Vec::new();
        let mut seen = HashSet::new();
        self.linearize_into(class, &mut seen, &mut order);
        order
    }

    fn linearize_into(
        &self,
        id: ClassifierId,
        seen: &mut HashSet<ClassifierId>,
        order: &mut Vec<ClassifierId>,
    ) {
        if !seen.insert(id) {
            return;
        }
        if let Classifier::Class(c) = &self.classifiers[id] {
            for &s in &c.super_types {
                self.linearize_into(s, seen, order);
            }
        }
        order.push(id);
    }

    /// Own plus inherited features, supertype-first, deduplicated by name
    /// (first declaration wins; attribute and reference names share one
    /// namespace per class).
    pub fn all_features(&self, class: ClassifierId) -> (Vec<&EAttribute>, Vec<&EReference>) {
        let mut attrs = Vec::new();
        let mut refs = Vec::new();
        let mut names: HashSet<&str> = HashSet::new();
        for id in self.linearize(class) {
            if let Classifier::Class(c) = &self.classifiers[id] {
                for a in &c.attributes {
                    if names.insert(a.name.as_str()) {
                        attrs.push(a);
                    }
                }
                for r in &c.references {
                    if names.insert(r.name.as_str()) {
                        refs.push(r);
                    }
                }
            }
        }
        (attrs, refs)
    }

    pub fn find_attribute(&self, class: ClassifierId, name: &str) -> Option<&EAttribute> {
        self.all_features(class)
            .0
            .into_iter()
            .find(|a| a.name == name)
    }

    pub fn find_reference(&self, class: ClassifierId, name: &str) -> Option<&EReference> {
        self.all_features(class)
            .1
            .into_iter()
            .find(|r| r.name == name)
    }

    /// True when `sub` equals `sup` or lists it among transitive supertypes.
    pub fn conforms_to(&self, sub: ClassifierId, sup: ClassifierId) -> bool {
        self.linearize(sub).contains(&sup)
    }

    fn duplicate_feature_warnings(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        for (cid, cl) in self.classifiers.iter().enumerate() {
            let Classifier::Class(_) = cl else { continue };
            let mut seen: HashSet<&str> = HashSet::new();
            for id in self.linearize(cid) {
                if let Classifier::Class(c) = &self.classifiers[id] {
                    let names = c
                        .attributes
                        .iter()
                        .map(|a| a.name.as_str())
                        .chain(c.references.iter().map(|r| r.name.as_str()));
                    for n in names {
                        if !seen.insert(n) {
                            diags.push(
                                Diagnostic::warning(
                                    DiagCode::DuplicateFeature,
                                    format!(
                                        "feature '{n}' appears more than once in the \
                                         flattened features of class '{}'; the first \
                                         declaration wins",
                                        cl.name()
                                    ),
                                )
                                .with_feature(n),
                            );
                        }
                    }
                }
            }
        }
        diags
    }
}

/// Parses Ecore XML. Unsupported constructs are skipped with warnings;
/// structural defects that would leave the metamodel unusable are errors.
pub fn parse_ecore(text: &str) -> Result<(MetaModel, Vec<Diagnostic>), EcoreError> {
    let doc =
        roxmltree::Document::parse(text).map_err(|e| EcoreError::MalformedXml(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "EPackage" {
        return Err(EcoreError::MalformedXml(format!(
            "root element is <{}>, expected an EPackage",
            root.tag_name().name()
        )));
    }

    let mut b = Builder::default();
    b.walk_package(root, None)?;
    b.resolve_types()?;
    b.check_inheritance_cycles()?;

    let (index, simple) = build_indexes(&b.packages, &b.classifiers);
    let model = MetaModel {
        packages: b.packages,
        classifiers: b.classifiers,
        index,
        simple,
    };
    let mut diags = b.diags;
    diags.extend(model.duplicate_feature_warnings());
    Ok((model, diags))
}

fn build_indexes(
    packages: &[EPackage],
    classifiers: &[Classifier],
) -> (
    IndexMap<String, ClassifierId>,
    IndexMap<String, ClassifierId>,
) {
    let mut index = IndexMap::new();
    let mut simple = IndexMap::new();
    let mut stack = vec![(0usize, packages[0].name.clone())];
    while let Some((pid, prefix)) = stack.pop() {
        for &cid in &packages[pid].classifiers {
            let name = classifiers[cid].name();
            index.insert(format!("{prefix}.{name}"), cid);
            simple.entry(name.to_string()).or_insert(cid);
        }
        for &sub in packages[pid].subpackages.iter().rev() {
            stack.push((sub, format!("{prefix}.{}", packages[sub].name)));
        }
    }
    (index, simple)
}

struct RawFeature {
    is_reference: bool,
    name: String,
    etype: Option<String>,
    containment: bool,
    lower: u32,
    upper: i64,
}

struct RawClass {
    id: ClassifierId,
    supers: Vec<String>,
    features: Vec<RawFeature>,
}

enum LocalTarget {
    Cls(ClassifierId),
    Alias,
}

#[derive(Default)]
struct Builder {
    packages: Vec<EPackage>,
    classifiers: Vec<Classifier>,
    /// Locally declared EDataType names per package; they type attributes
    /// as plain strings.
    aliases: Vec<HashSet<String>>,
    raws: Vec<RawClass>,
    diags: Vec<Diagnostic>,
    warned_types: HashSet<String>,
}

impl Builder {
    fn walk_package(
        &mut self,
        node: roxmltree::Node,
        parent: Option<PackageId>,
    ) -> Result<PackageId, EcoreError> {
        let name = node.attribute("name").unwrap_or("").to_string();
        if name.is_empty() {
            return Err(EcoreError::MalformedXml(
                "EPackage without a name".to_string(),
            ));
        }
        let ns_uri = node.attribute("nsURI").unwrap_or("").to_string();
        if ns_uri.is_empty() {
            return Err(EcoreError::MissingNsURI(name));
        }
        let ns_prefix = node
            .attribute("nsPrefix")
            .filter(|p| !p.is_empty())
            .unwrap_or(&name)
            .to_string();

        let pid = self.packages.len();
        self.packages.push(EPackage {
            name,
            ns_uri,
            ns_prefix,
            classifiers: Vec::new(),
            subpackages: Vec::new(),
            parent,
        });
        self.aliases.push(HashSet::new());

        let mut used_names: HashSet<String> = HashSet::new();
        for child in node.children().filter(|c| c.is_element()) {
            match child.tag_name().name() {
                "eClassifiers" => self.walk_classifier(child, pid, &mut used_names),
                "eSubpackages" => {
                    let sub = self.walk_package(child, Some(pid))?;
                    self.packages[pid].subpackages.push(sub);
                }
                other => self.warn_unsupported(other, "EPackage"),
            }
        }
        Ok(pid)
    }

    fn walk_classifier(
        &mut self,
        node: roxmltree::Node,
        pid: PackageId,
        used_names: &mut HashSet<String>,
    ) {
        let kind = xsi_type_suffix(node).unwrap_or_default();
        let name = node.attribute("name").unwrap_or("").to_string();
        if name.is_empty() {
            self.diags.push(Diagnostic::warning(
                DiagCode::UnsupportedConstruct,
                format!("classifier of kind '{kind}' without a name skipped"),
            ));
            return;
        }
        if !used_names.insert(name.clone()) {
            self.diags.push(Diagnostic::warning(
                DiagCode::DuplicateClassifier,
                format!(
                    "classifier '{name}' declared more than once in package '{}'; \
                     later declaration skipped",
                    self.packages[pid].name
                ),
            ));
            return;
        }
        match kind.as_str() {
            "EClass" => self.walk_class(node, pid, name),
            "EEnum" => self.walk_enum(node, pid, name),
            "EDataType" => {
                self.diags.push(Diagnostic::warning(
                    DiagCode::UnknownDataType,
                    format!("locally declared EDataType '{name}' is treated as string"),
                ));
                self.aliases[pid].insert(name);
            }
            other => self.warn_unsupported(
                &format!("classifier '{name}' of kind '{other}'"),
                "EPackage",
            ),
        }
    }

    fn walk_class(&mut self, node: roxmltree::Node, pid: PackageId, name: String) {
        let is_abstract = node.attribute("abstract") == Some("true");
        let is_interface = node.attribute("interface") == Some("true");
        let mut supers: Vec<String> = node
            .attribute("eSuperTypes")
            .map(|s| s.split_whitespace().map(str::to_string).collect())
            .unwrap_or_default();
        let mut features = Vec::new();

        for child in node.children().filter(|c| c.is_element()) {
            match child.tag_name().name() {
                "eStructuralFeatures" => {
                    self.walk_feature(child, &name, &mut features);
                }
                "eSuperTypes" => {
                    if let Some(href) = child.attribute("href") {
                        supers.push(href.to_string());
                    }
                }
                other => self.warn_unsupported(other, &format!("EClass '{name}'")),
            }
        }

        let cid = self.classifiers.len();
        self.classifiers.push(Classifier::Class(EClass {
            name,
            is_abstract,
            is_interface,
            super_types: Vec::new(),
            attributes: Vec::new(),
            references: Vec::new(),
            package: pid,
        }));
        self.packages[pid].classifiers.push(cid);
        self.raws.push(RawClass {
            id: cid,
            supers,
            features,
        });
    }

    fn walk_feature(
        &mut self,
        node: roxmltree::Node,
        class_name: &str,
        features: &mut Vec<RawFeature>,
    ) {
        let kind = xsi_type_suffix(node).unwrap_or_default();
        let name = node.attribute("name").unwrap_or("").to_string();
        if name.is_empty() {
            self.diags.push(Diagnostic::warning(
                DiagCode::UnsupportedConstruct,
                format!("feature without a name in class '{class_name}' skipped"),
            ));
            return;
        }
        let is_reference = match kind.as_str() {
            "EAttribute" => false,
            "EReference" => true,
            other => {
                self.warn_unsupported(
                    &format!("feature '{name}' of kind '{other}'"),
                    &format!("EClass '{class_name}'"),
                );
                return;
            }
        };
        let context = format!("{class_name}.{name}");
        let lower = self.parse_bound(node, "lowerBound", 0, &context);
        let upper = self.parse_bound(node, "upperBound", 1, &context);
        let (lower, upper) = self.check_bounds(lower, upper, &context);
        features.push(RawFeature {
            is_reference,
            name,
            etype: feature_type_href(node),
            containment: node.attribute("containment") == Some("true"),
            lower,
            upper,
        });
    }

    fn walk_enum(&mut self, node: roxmltree::Node, pid: PackageId, name: String) {
        let mut literals: Vec<String> = Vec::new();
        for child in node.children().filter(|c| c.is_element()) {
            match child.tag_name().name() {
                "eLiterals" => {
                    let lit = child.attribute("name").unwrap_or("");
                    if lit.is_empty() {
                        self.diags.push(Diagnostic::warning(
                            DiagCode::UnsupportedConstruct,
                            format!("literal without a name in enum '{name}' skipped"),
                        ));
                    } else if literals.iter().any(|l| l == lit) {
                        self.diags.push(Diagnostic::warning(
                            DiagCode::DuplicateFeature,
                            format!("duplicate literal '{lit}' in enum '{name}' skipped"),
                        ));
                    } else {
                        literals.push(lit.to_string());
                    }
                }
                other => self.warn_unsupported(other, &format!("EEnum '{name}'")),
            }
        }
        if literals.is_empty() {
            self.diags.push(Diagnostic::warning(
                DiagCode::UnsupportedConstruct,
                format!("enum '{name}' has no literals and was skipped"),
            ));
            return;
        }
        let cid = self.classifiers.len();
        self.classifiers.push(Classifier::Enum(EEnum {
            name,
            literals,
            package: pid,
        }));
        self.packages[pid].classifiers.push(cid);
    }

    fn parse_bound(
        &mut self,
        node: roxmltree::Node,
        attr: &str,
        default: i64,
        context: &str,
    ) -> i64 {
        match node.attribute(attr) {
            None => default,
            Some(raw) => match raw.parse::<i64>() {
                Ok(v) => v,
                Err(_) => {
                    self.diags.push(Diagnostic::warning(
                        DiagCode::InvalidBounds,
                        format!("{attr} '{raw}' on '{context}' is not an integer; using {default}"),
                    ));
                    default
                }
            },
        }
    }

    fn check_bounds(&mut self, lower: i64, upper: i64, context: &str) -> (u32, i64) {
        let mut lower = if lower < 0 {
            self.diags.push(Diagnostic::warning(
                DiagCode::InvalidBounds,
                format!("negative lowerBound on '{context}' clamped to 0"),
            ));
            0
        } else {
            lower
        };
        let upper = if upper < -1 {
            self.diags.push(Diagnostic::warning(
                DiagCode::InvalidBounds,
                format!("upperBound below -1 on '{context}' treated as unbounded"),
            ));
            -1
        } else {
            upper
        };
        if upper >= 0 && lower > upper {
            self.diags.push(Diagnostic::warning(
                DiagCode::InvalidBounds,
                format!("lowerBound exceeds upperBound on '{context}'; lowered to match"),
            ));
            lower = upper;
        }
        (lower as u32, upper)
    }

    fn warn_unsupported(&mut self, what: &str, context: &str) {
        self.diags.push(Diagnostic::warning(
            DiagCode::UnsupportedConstruct,
            format!("unsupported construct '{what}' in {context} skipped"),
        ));
    }

    fn resolve_types(&mut self) -> Result<(), EcoreError> {
        let raws = std::mem::take(&mut self.raws);
        for raw in &raws {
            let class_name = self.classifiers[raw.id].name().to_string();

            let mut super_ids = Vec::new();
            for href in &raw.supers {
                let id = self.resolve_class_href(href, &format!("supertype of '{class_name}'"))?;
                super_ids.push(id);
            }

            let mut attributes = Vec::new();
            let mut references = Vec::new();
            for f in &raw.features {
                let context = format!("{class_name}.{}", f.name);
                let href = f
                    .etype
                    .as_deref()
                    .ok_or_else(|| EcoreError::UnresolvableTypeRef {
                        href: "(missing eType)".to_string(),
                        context: context.clone(),
                    })?;
                if f.is_reference {
                    let target = self.resolve_class_href(href, &context)?;
                    references.push(EReference {
                        name: f.name.clone(),
                        target,
                        containment: f.containment,
                        lower: f.lower,
                        upper: f.upper,
                    });
                } else {
                    let data_type = self.resolve_data_type_href(href, &context)?;
                    attributes.push(EAttribute {
                        name: f.name.clone(),
                        data_type,
                        lower: f.lower,
                        upper: f.upper,
                    });
                }
            }

            let Classifier::Class(c) = &mut self.classifiers[raw.id] else {
                unreachable!("raw classes always index EClass entries");
            };
            c.super_types = super_ids;
            c.attributes = attributes;
            c.references = references;
        }
        Ok(())
    }

    /// Navigates a "#//sub/Name" fragment from the root package.
    fn resolve_local(&self, fragment: &str) -> Option<LocalTarget> {
        let path = fragment.strip_prefix("//")?;
        let segments: Vec<&str> = path.split('/').collect();
        let (last, pkg_path) = segments.split_last()?;
        let mut pid = 0;
        for seg in pkg_path {
            pid = self.packages[pid]
                .subpackages
                .iter()
                .copied()
                .find(|&sub| self.packages[sub].name == *seg)?;
        }
        if let Some(cid) = self.packages[pid]
            .classifiers
            .iter()
            .copied()
            .find(|&cid| self.classifiers[cid].name() == *last)
        {
            return Some(LocalTarget::Cls(cid));
        }
        if self.aliases[pid].contains(*last) {
            return Some(LocalTarget::Alias);
        }
        None
    }

    fn resolve_class_href(
        &mut self,
        href_raw: &str,
        context: &str,
    ) -> Result<ClassifierId, EcoreError> {
        let href = href_raw.split_whitespace().last().unwrap_or("");
        let err = || EcoreError::UnresolvableTypeRef {
            href: href_raw.to_string(),
            context: context.to_string(),
        };
        let fragment = href.strip_prefix('#').ok_or_else(err)?;
        match self.resolve_local(fragment) {
            Some(LocalTarget::Cls(cid)) if self.classifiers[cid].as_class().is_some() => Ok(cid),
            _ => Err(err()),
        }
    }

    fn resolve_data_type_href(
        &mut self,
        href_raw: &str,
        context: &str,
    ) -> Result<DataType, EcoreError> {
        let href = href_raw.split_whitespace().last().unwrap_or("");
        let err = || EcoreError::UnresolvableTypeRef {
            href: href_raw.to_string(),
            context: context.to_string(),
        };
        if let Some(fragment) = href.strip_prefix('#') {
            return match self.resolve_local(fragment) {
                Some(LocalTarget::Cls(cid)) => match &self.classifiers[cid] {
                    Classifier::Enum(_) => Ok(DataType::Enum(cid)),
                    Classifier::Class(_) => Err(err()),
                },
                Some(LocalTarget::Alias) => Ok(DataType::String),
                None => Err(err()),
            };
        }
        let (base, fragment) = href.split_once('#').ok_or_else(err)?;
        if base != ECORE_NS_URI {
            return Err(err());
        }
        let builtin = fragment.strip_prefix("//").ok_or_else(err)?;
        Ok(match builtin {
            "EString" => DataType::String,
            "EInt" | "EBigInteger" | "ELong" | "EShort" => DataType::Int,
            "EFloat" | "EDouble" => DataType::Float,
            "EBoolean" => DataType::Boolean,
            other => {
                if self.warned_types.insert(other.to_string()) {
                    self.diags.push(Diagnostic::warning(
                        DiagCode::UnknownDataType,
                        format!("Ecore data type '{other}' is treated as string"),
                    ));
                }
                DataType::String
            }
        })
    }

    fn check_inheritance_cycles(&self) -> Result<(), EcoreError> {
        // 0 = unvisited, 1 = on stack, 2 = done.
        let mut color = vec![0u8; self.classifiers.len()];
        for start in 0..self.classifiers.len() {
            if color[start] != 0 {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            color[start] = 1;
            while let Some(&mut (id, ref mut next)) = stack.last_mut() {
                let supers = match &self.classifiers[id] {
                    Classifier::Class(c) => &c.super_types,
                    Classifier::Enum(_) => {
                        color[id] = 2;
                        stack.pop();
                        continue;
                    }
                };
                if *next < supers.len() {
                    let s = supers[*next];
                    *next += 1;
                    match color[s] {
                        0 => {
                            color[s] = 1;
                            stack.push((s, 0));
                        }
                        1 => {
                            return Err(EcoreError::InheritanceCycle(
                                self.classifiers[s].name().to_string(),
                            ));
                        }
                        _ => {}
                    }
                } else {
                    color[id] = 2;
                    stack.pop();
                }
            }
        }
        Ok(())
    }
}

fn xsi_type_suffix(node: roxmltree::Node) -> Option<String> {
    let t = node.attribute((XSI_NS_URI, "type"))?;
    Some(t.rsplit(':').next().unwrap_or(t).to_string())
}

fn feature_type_href(node: roxmltree::Node) -> Option<String> {
    if let Some(t) = node.attribute("eType") {
        return Some(t.to_string());
    }
    node.children()
        .filter(|c| c.is_element())
        .find(|c| c.tag_name().name() == "eType")
        .and_then(|c| c.attribute("href"))
        .map(str::to_string)
}
