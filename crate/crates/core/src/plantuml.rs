//! PlantUML class-diagram rendering of a metamodel.
//!
//! The rendered text is the metamodel context embedded in LLM prompts, so
//! output must be deterministic and free of styling noise.

use crate::ecore::{Classifier, ClassifierId, MetaModel};
use std::fmt::Write;

/// A rendered class diagram. Starts with `@startuml`, ends with `@enduml`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlantUmlDoc {
    pub text: String,
}

/// Renders classifiers in declaration order (package tree pre-order):
/// class and enum blocks first, then inheritance edges, then association
/// edges. Containments use `*--`, plain references `-->`.
pub fn render_plantuml(m: &MetaModel) -> PlantUmlDoc {
    let mut out = String::new();
    out.push_str("@startuml\n");
    let _ = writeln!(out, "' package {}", m.root_package().name);

    let order = classifier_order(m);

    for &cid in &order {
        match m.classifier(cid) {
            Classifier::Class(c) => {
                let keyword = if c.is_abstract || c.is_interface {
                    "abstract class"
                } else {
                    "class"
                };
                let _ = writeln!(out, "{keyword} {} {{", ident(&c.name));
                for a in &c.attributes {
                    let _ = writeln!(
                        out,
                        "  {} : {}",
                        ident(&a.name),
                        a.data_type.display_name(m)
                    );
                }
                out.push_str("}\n");
            }
            Classifier::Enum(e) => {
                let _ = writeln!(out, "enum {} {{", ident(&e.name));
                for lit in &e.literals {
                    let _ = writeln!(out, "  {}", ident(lit));
                }
                out.push_str("}\n");
            }
        }
    }

    for &cid in &order {
        if let Classifier::Class(c) = m.classifier(cid) {
            for &sup in &c.super_types {
                let _ = writeln!(
                    out,
                    "{} <|-- {}",
                    ident(m.classifier(sup).name()),
                    ident(&c.name)
                );
            }
        }
    }

    for &cid in &order {
        if let Classifier::Class(c) = m.classifier(cid) {
            for r in &c.references {
                let arrow = if r.containment { "*--" } else { "-->" };
                let line = if r.containment {
                    format!(
                        "{} \"1\" {arrow} \"{}\" {} : {}",
                        ident(&c.name),
                        multiplicity(r.lower, r.upper),
                        ident(m.classifier(r.target).name()),
                        ident(&r.name)
                    )
                } else {
                    format!(
                        "{} {arrow} \"{}\" {} : {}",
                        ident(&c.name),
                        multiplicity(r.lower, r.upper),
                        ident(m.classifier(r.target).name()),
                        ident(&r.name)
                    )
                };
                out.push_str(&line);
                out.push('\n');
            }
        }
    }

    out.push_str("@enduml\n");
    PlantUmlDoc { text: out }
}

fn classifier_order(m: &MetaModel) -> Vec<ClassifierId> {
    let mut order = Vec::new();
    for pid in m.package_ids() {
        order.extend(m.package(pid).classifiers.iter().copied());
    }
    order
}

fn multiplicity(lower: u32, upper: i64) -> String {
    match upper {
        -1 => format!("{lower}..*"),
        u if i64::from(lower) == u => format!("{u}"),
        u => format!("{lower}..{u}"),
    }
}

/// Quotes identifiers PlantUML would misparse; plain alphanumeric names
/// (plus underscore) pass through untouched.
fn ident(name: &str) -> String {
    let plain = !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if plain {
        name.to_string()
    } else {
        format!("\"{}\"", name.replace('"', ""))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecore::parse_ecore;

    const ALLOCATION: &str = include_str!("../fixtures/allocation.ecore");
    const LIBRARY: &str = include_str!("../fixtures/library.ecore");
    const FLEET: &str = include_str!("../fixtures/fleet.ecore");

    #[test]
    fn allocation_diagram_shows_classes_and_edges() {
        let (m, _) = parse_ecore(ALLOCATION).unwrap();
        let doc = render_plantuml(&m).text;
        assert!(doc.starts_with("@startuml\n"));
        assert!(doc.ends_with("@enduml\n"));
        assert!(doc.contains("class Board {"));
        assert!(doc.contains("Board \"1\" *-- \"0..*\" CPU : cpus"));
        assert!(doc.contains("CPU \"1\" *-- \"0..*\" Core : cores"));
        assert!(doc.contains("Core --> \"0..1\" VM : assignedTo"));
        assert!(doc.contains("VM --> \"0..*\" APP : hosts"));
    }

    #[test]
    fn empty_package_renders_frame_and_title() {
        let text = r#"<?xml version="1.0"?>
<ecore:EPackage xmlns:ecore="http://www.eclipse.org/emf/2002/Ecore" xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" name="empty" nsURI="http://example.org/empty" nsPrefix="empty"/>"#;
        let (m, _) = parse_ecore(text).unwrap();
        let doc = render_plantuml(&m).text;
        assert_eq!(doc, "@startuml\n' package empty\n@enduml\n");
    }

    #[test]
    fn enum_block_lists_literals_and_types_attribute() {
        let (m, _) = parse_ecore(LIBRARY).unwrap();
        let doc = render_plantuml(&m).text;
        assert!(doc.contains("enum Genre {\n  FICTION\n  NONFICTION\n  REFERENCE\n}\n"));
        assert!(doc.contains("  genre : Genre\n"));
        assert!(doc.contains("abstract class Person {"));
        assert!(doc.contains("Person <|-- Member"));
    }

    #[test]
    fn every_class_declared_exactly_once_and_edge_counts_match() {
        for src in [ALLOCATION, LIBRARY, FLEET] {
            let (m, _) = parse_ecore(src).unwrap();
            let doc = render_plantuml(&m).text;
            let mut containments = 0usize;
            let mut references = 0usize;
            for cid in 0..m.classifier_count() {
                if let Classifier::Class(c) = m.classifier(cid) {
                    let decls = doc
                        .lines()
                        .filter(|l| {
                            *l == format!("class {} {{", c.name)
                                || *l == format!("abstract class {} {{", c.name)
                        })
                        .count();
                    assert_eq!(decls, 1, "class {} declared {decls} times", c.name);
                    for r in &c.references {
                        if r.containment {
                            containments += 1;
                        } else {
                            references += 1;
                        }
                    }
                }
            }
            let star_lines = doc.lines().filter(|l| l.contains(" *-- ")).count();
            let arrow_lines = doc.lines().filter(|l| l.contains(" --> ")).count();
            assert_eq!(star_lines, containments);
            assert_eq!(arrow_lines, references);
        }
    }

    #[test]
    fn rendering_is_byte_identical_across_runs() {
        let (m1, _) = parse_ecore(FLEET).unwrap();
        let (m2, _) = parse_ecore(FLEET).unwrap();
        assert_eq!(render_plantuml(&m1), render_plantuml(&m2));
    }

    #[test]
    fn non_alphanumeric_identifiers_are_quoted() {
        let text = r#"<?xml version="1.0"?>
<ecore:EPackage xmlns:ecore="http://www.eclipse.org/emf/2002/Ecore" xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" name="p" nsURI="http://example.org/p" nsPrefix="p">
  <eClassifiers xsi:type="ecore:EClass" name="My Class">
    <eStructuralFeatures xsi:type="ecore:EAttribute" name="name" eType="ecore:EDataType http://www.eclipse.org/emf/2002/Ecore#//EString"/>
  </eClassifiers>
</ecore:EPackage>"#;
        let (m, _) = parse_ecore(text).unwrap();
        let doc = render_plantuml(&m).text;
        assert!(doc.contains("class \"My Class\" {"));
    }

    #[test]
    fn collapsed_multiplicity_for_exact_bounds() {
        assert_eq!(multiplicity(1, 1), "1");
        assert_eq!(multiplicity(0, 1), "0..1");
        assert_eq!(multiplicity(0, -1), "0..*");
        assert_eq!(multiplicity(2, 5), "2..5");
        assert_eq!(multiplicity(1, -1), "1..*");
    }
}
