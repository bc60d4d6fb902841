//! Scoring of generated instance models against references.
//!
//! Both models are flattened to canonical element sets (objects,
//! attributes, associations), elements are matched between the two sets,
//! and the match yields precision (SP), recall (SR) and accuracy (SA) per
//! category. Grammatical accuracy (GA) comes from compile accounting and
//! is only available when the generated model went through the compiler.

use crate::compile::{ElementCounts, InstanceModel, InstanceObject};
use crate::ecore::MetaModel;
use serde::Serialize;
use std::collections::HashMap;

/// One object in canonical form. `name` is the value of a name-like
/// attribute, or a `Class#ordinal` signature when the object is unnamed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ObjKey {
    pub class: String,
    pub name: String,
}

/// One attribute value, owned by the object at `owner` (document-order
/// index into `objects`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttrElem {
    pub owner: usize,
    pub name: String,
    pub value: String,
}

/// One link (containment or plain reference), endpoints as document-order
/// indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AssocElem {
    pub owner: usize,
    pub reference: String,
    pub target: usize,
}

/// Flattened view of an instance model, ordered by document position and
/// feature declaration so equal models produce equal sets.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CanonicalElementSet {
    pub objects: Vec<ObjKey>,
    pub attributes: Vec<AttrElem>,
    pub associations: Vec<AssocElem>,
}

const NAME_LIKE: [&str; 3] = ["name", "id", "label"];

/// Flattens a model. Objects appear in document order (roots, then
/// containment pre-order); attribute and association elements follow
/// feature-declaration order within each object.
pub fn canonicalize(model: &InstanceModel, m: &MetaModel) -> CanonicalElementSet {
    let ordered = document_order(model);
    let index_of: HashMap<&str, usize> = ordered
        .iter()
        .enumerate()
        .map(|(i, o)| (o.id.as_str(), i))
        .collect();

    let mut set = CanonicalElementSet::default();
    let mut unnamed_ordinals: HashMap<String, usize> = HashMap::new();

    for obj in &ordered {
        let class = m.classifier(obj.class).name().to_string();
        let name = match name_key(obj) {
            Some(n) => n,
            None => {
                let ordinal = unnamed_ordinals.entry(class.clone()).or_default();
                let sig = format!("{class}#{ordinal}");
                *ordinal += 1;
                sig
            }
        };
        set.objects.push(ObjKey { class, name });
    }

    for (idx, obj) in ordered.iter().enumerate() {
        let (attrs, refs) = m.all_features(obj.class);
        for a in attrs {
            if let Some(values) = obj.attr_values.get(&a.name) {
                for v in values {
                    set.attributes.push(AttrElem {
                        owner: idx,
                        name: a.name.clone(),
                        value: v.render(),
                    });
                }
            }
        }
        for r in refs {
            if let Some(targets) = obj.ref_targets.get(&r.name) {
                for t in targets {
                    set.associations.push(AssocElem {
                        owner: idx,
                        reference: r.name.clone(),
                        target: index_of[t.as_str()],
                    });
                }
            }
        }
    }
    set
}

/// Pre-order walk of the containment forest; any object missed by the
/// walk (impossible after compile, defensive for loaded models) is
/// appended in map order.
fn document_order(model: &InstanceModel) -> Vec<&InstanceObject> {
    let mut ordered = Vec::with_capacity(model.objects.len());
    let mut seen = std::collections::HashSet::new();
    for root in &model.roots {
        walk(model, root, &mut ordered, &mut seen);
    }
    for obj in model.objects.values() {
        if seen.insert(obj.id.as_str()) {
            ordered.push(obj);
        }
    }
    ordered
}

fn walk<'a>(
    model: &'a InstanceModel,
    id: &str,
    ordered: &mut Vec<&'a InstanceObject>,
    seen: &mut std::collections::HashSet<&'a str>,
) {
    let Some(obj) = model.objects.get(id) else {
        return;
    };
    if !seen.insert(obj.id.as_str()) {
        return;
    }
    ordered.push(obj);
    for (_, child) in &obj.child_links {
        walk(model, child, ordered, seen);
    }
}

/// First non-empty value of "name", then "id", then "label"; trimmed,
/// case preserved. Whitespace-only values count as unnamed.
fn name_key(obj: &InstanceObject) -> Option<String> {
    for key in NAME_LIKE {
        if let Some(values) = obj.attr_values.get(key) {
            if let Some(v) = values.first() {
                let trimmed = v.render().trim().to_string();
                if !trimmed.is_empty() {
                    return Some(trimmed);
                }
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CategoryCounts {
    pub objects: u64,
    pub attributes: u64,
    pub associations: u64,
}

/// Correspondence between two canonical sets: which objects pair up, and
/// how many attribute/association tuples agree across paired objects.
#[derive(Debug, Clone, Serialize)]
pub struct MatchResult {
    /// (generated index, truth index); injective on both sides.
    pub object_pairs: Vec<(usize, usize)>,
    pub matched_attributes: u64,
    pub matched_associations: u64,
    pub unmatched_generated: CategoryCounts,
    pub unmatched_truth: CategoryCounts,
}

/// Pairs objects between the sets, exact (class, name) matches first,
/// then remaining same-class objects by shared attribute tuples.
pub fn match_elements(gen: &CanonicalElementSet, truth: &CanonicalElementSet) -> MatchResult {
    let mut truth_free: Vec<bool> = vec![true; truth.objects.len()];
    let mut gen_partner: Vec<Option<usize>> = vec![None; gen.objects.len()];

    // Exact pass, generated document order, first free identical truth
    // object wins.
    for (g, key) in gen.objects.iter().enumerate() {
        if let Some(t) =
            (0..truth.objects.len()).find(|&t| truth_free[t] && truth.objects[t] == *key)
        {
            truth_free[t] = false;
            gen_partner[g] = Some(t);
        }
    }

    // Fallback pass: same class, scored by count of equal attribute
    // tuples, descending; ties in document order. Zero-score pairs never
    // match.
    let gen_attrs = attrs_by_owner(gen);
    let truth_attrs = attrs_by_owner(truth);
    let mut candidates = Vec::new();
    for (g, gk) in gen.objects.iter().enumerate() {
        if gen_partner[g].is_some() {
            continue;
        }
        for (t, tk) in truth.objects.iter().enumerate() {
            if !truth_free[t] || tk.class != gk.class {
                continue;
            }
            let score = multiset_intersection(
                gen_attrs.get(&g).map_or(&[][..], Vec::as_slice),
                truth_attrs.get(&t).map_or(&[][..], Vec::as_slice),
            );
            if score > 0 {
                candidates.push((score, g, t));
            }
        }
    }
    candidates.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for (_, g, t) in candidates {
        if gen_partner[g].is_none() && truth_free[t] {
            truth_free[t] = false;
            gen_partner[g] = Some(t);
        }
    }

    let object_pairs: Vec<(usize, usize)> = gen_partner
        .iter()
        .enumerate()
        .filter_map(|(g, p)| p.map(|t| (g, t)))
        .collect();
    let pair_of: HashMap<usize, usize> = object_pairs.iter().copied().collect();

    // Attribute tuples agree when paired owners hold equal (name, value).
    let mut matched_attributes = 0;
    for (g, t) in &object_pairs {
        matched_attributes += multiset_intersection(
            gen_attrs.get(g).map_or(&[][..], Vec::as_slice),
            truth_attrs.get(t).map_or(&[][..], Vec::as_slice),
        );
    }

    // Association tuples agree when both endpoints are paired and the
    // reference name is the same, multiset semantics.
    let mut truth_assoc_pool: HashMap<(usize, &str, usize), u64> = HashMap::new();
    for a in &truth.associations {
        *truth_assoc_pool
            .entry((a.owner, a.reference.as_str(), a.target))
            .or_default() += 1;
    }
    let mut matched_associations = 0;
    for a in &gen.associations {
        let (Some(&owner), Some(&target)) = (pair_of.get(&a.owner), pair_of.get(&a.target)) else {
            continue;
        };
        if let Some(n) = truth_assoc_pool.get_mut(&(owner, a.reference.as_str(), target)) {
            if *n > 0 {
                *n -= 1;
                matched_associations += 1;
            }
        }
    }

    let matched_objects = object_pairs.len() as u64;
    MatchResult {
        unmatched_generated: CategoryCounts {
            objects: gen.objects.len() as u64 - matched_objects,
            attributes: gen.attributes.len() as u64 - matched_attributes,
            associations: gen.associations.len() as u64 - matched_associations,
        },
        unmatched_truth: CategoryCounts {
            objects: truth.objects.len() as u64 - matched_objects,
            attributes: truth.attributes.len() as u64 - matched_attributes,
            associations: truth.associations.len() as u64 - matched_associations,
        },
        object_pairs,
        matched_attributes,
        matched_associations,
    }
}

fn attrs_by_owner(set: &CanonicalElementSet) -> HashMap<usize, Vec<(&str, &str)>> {
    let mut map: HashMap<usize, Vec<(&str, &str)>> = HashMap::new();
    for a in &set.attributes {
        map.entry(a.owner)
            .or_default()
            .push((a.name.as_str(), a.value.as_str()));
    }
    map
}

fn multiset_intersection(a: &[(&str, &str)], b: &[(&str, &str)]) -> u64 {
    let mut pool: HashMap<&(&str, &str), u64> = HashMap::new();
    for t in b {
        *pool.entry(t).or_default() += 1;
    }
    let mut n = 0;
    for t in a {
        if let Some(c) = pool.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                n += 1;
            }
        }
    }
    n
}

/// Exact ratio in [0, 1]. The empty case 0/0 normalizes to 1: comparing
/// nothing against nothing is a perfect score.
#[derive(Debug, Clone, Copy)]
pub struct Rational {
    pub num: u64,
    pub den: u64,
}

impl PartialEq for Rational {
    fn eq(&self, other: &Self) -> bool {
        u128::from(self.num) * u128::from(other.den) == u128::from(other.num) * u128::from(self.den)
    }
}

impl Eq for Rational {}

impl Rational {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(num <= den || den == 0, "ratio {num}/{den} exceeds 1");
        if den == 0 {
            Rational { num: 1, den: 1 }
        } else {
            Rational { num, den }
        }
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        let left = u128::from(self.num) * u128::from(other.den);
        let right = u128::from(other.num) * u128::from(self.den);
        left.partial_cmp(&right)
    }
}

impl Serialize for Rational {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.value())
    }
}

impl std::fmt::Display for Rational {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.6}", self.value())
    }
}

/// Scores for one element category. GA is absent when the generated
/// model was loaded from disk rather than compiled.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MetricRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ga: Option<Rational>,
    pub sp: Rational,
    pub sr: Rational,
    pub sa: Rational,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MetricsReport {
    pub objects: MetricRow,
    pub attributes: MetricRow,
    pub associations: MetricRow,
    pub overall: MetricRow,
}

/// Derives the metric table from a match. `counts` carries the compile
/// accounting for GA when available.
pub fn compute_metrics(
    matched: &MatchResult,
    gen: &CanonicalElementSet,
    truth: &CanonicalElementSet,
    counts: Option<&ElementCounts>,
) -> MetricsReport {
    let row = |matched: u64, gen_n: u64, truth_n: u64, ga: Option<Rational>| MetricRow {
        ga,
        sp: Rational::new(matched, gen_n),
        sr: Rational::new(matched, truth_n),
        sa: Rational::new(matched, gen_n + truth_n - matched),
    };

    let mo = matched.object_pairs.len() as u64;
    let objects = row(
        mo,
        gen.objects.len() as u64,
        truth.objects.len() as u64,
        counts.map(|c| Rational::new(c.objects.accepted, c.objects.attempted)),
    );
    let attributes = row(
        matched.matched_attributes,
        gen.attributes.len() as u64,
        truth.attributes.len() as u64,
        counts.map(|c| Rational::new(c.attributes.accepted, c.attributes.attempted)),
    );
    let associations = row(
        matched.matched_associations,
        gen.associations.len() as u64,
        truth.associations.len() as u64,
        counts.map(|c| Rational::new(c.associations.accepted, c.associations.attempted)),
    );
    let overall = row(
        mo + matched.matched_attributes + matched.matched_associations,
        (gen.objects.len() + gen.attributes.len() + gen.associations.len()) as u64,
        (truth.objects.len() + truth.attributes.len() + truth.associations.len()) as u64,
        counts.map(|c| Rational::new(c.total_accepted(), c.total_attempted())),
    );

    MetricsReport {
        objects,
        attributes,
        associations,
        overall,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cim::parse_cim;
    use crate::compile::compile;
    use crate::ecore::parse_ecore;
    use crate::xmi::{parse_xmi, serialize_xmi};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    const ALLOCATION: &str = include_str!("../fixtures/allocation.ecore");
    const FIG3: &str = include_str!("../fixtures/allocation_fig3.cim.json");

    fn fig3_set() -> (
        MetaModel,
        crate::compile::CompileReport,
        CanonicalElementSet,
    ) {
        let (m, _) = parse_ecore(ALLOCATION).unwrap();
        let (cim, _) = parse_cim(FIG3).unwrap();
        let report = compile(&m, &cim);
        let set = canonicalize(&report.model, &m);
        (m, report, set)
    }

    #[test]
    fn fig3_canonical_set_names_objects_by_name_attribute() {
        let (_, _, set) = fig3_set();
        assert_eq!(set.objects.len(), 9);
        for (class, name) in [("VM", "VM1"), ("APP", "app1"), ("Core", "core0")] {
            assert!(
                set.objects
                    .iter()
                    .any(|o| o.class == class && o.name == name),
                "missing ({class}, {name})"
            );
        }
        // 9 name values + frequency x2 + size = 12 attribute elements.
        assert_eq!(set.attributes.len(), 12);
        // cpus, rams, cores x2, assignedTo, hosts = 6 links.
        assert_eq!(set.associations.len(), 6);
    }

    #[test]
    fn empty_model_flattens_to_empty_sets() {
        let (m, _) = parse_ecore(ALLOCATION).unwrap();
        let (cim, _) = parse_cim("{}").unwrap();
        let report = compile(&m, &cim);
        let set = canonicalize(&report.model, &m);
        assert_eq!(set, CanonicalElementSet::default());
    }

    #[test]
    fn unnamed_objects_get_ordinal_signatures() {
        let (m, _) = parse_ecore(ALLOCATION).unwrap();
        let (cim, _) = parse_cim(
            r#"{"x": {"type": "Core"}, "y": {"type": "Core"},
                "z": {"type": "Core", "attributes": [
                    {"dataType": "string", "attributeName": "name", "value": "  core9  "}
                ]}}"#,
        )
        .unwrap();
        let report = compile(&m, &cim);
        let set = canonicalize(&report.model, &m);
        let names: Vec<&str> = set.objects.iter().map(|o| o.name.as_str()).collect();
        // Ordinals count unnamed objects only; the named one is trimmed.
        assert_eq!(names, ["Core#0", "Core#1", "core9"]);
    }

    #[test]
    fn canonical_set_survives_xmi_roundtrip() {
        let (m, report, set) = fig3_set();
        let xmi = serialize_xmi(&report, &m);
        let loaded = parse_xmi(&xmi, &m).unwrap();
        assert_eq!(canonicalize(&loaded, &m), set);
    }

    #[test]
    fn identical_sets_match_completely() {
        let (_, _, set) = fig3_set();
        let result = match_elements(&set, &set);
        assert_eq!(result.object_pairs.len(), set.objects.len());
        assert_eq!(result.matched_attributes, set.attributes.len() as u64);
        assert_eq!(result.matched_associations, set.associations.len() as u64);
        assert_eq!(result.unmatched_generated, CategoryCounts::default());
        assert_eq!(result.unmatched_truth, CategoryCounts::default());

        let metrics = compute_metrics(&result, &set, &set, None);
        for row in [
            metrics.objects,
            metrics.attributes,
            metrics.associations,
            metrics.overall,
        ] {
            assert_eq!(row.sp, Rational::new(1, 1));
            assert_eq!(row.sr, Rational::new(1, 1));
            assert_eq!(row.sa, Rational::new(1, 1));
        }
    }

    #[test]
    fn extra_generated_object_is_unmatched() {
        let (m, _, truth) = fig3_set();
        let bigger = FIG3.replacen(
            "\"VM2\": {",
            "\"VM3\": {\n  \"type\": \"VM\",\n  \"attributes\": [\n   {\"dataType\": \"string\", \"attributeName\": \"name\", \"value\": \"VM3\"}\n  ]\n },\n \"VM2\": {",
            1,
        );
        let (cim, _) = parse_cim(&bigger).unwrap();
        let report = compile(&m, &cim);
        let gen = canonicalize(&report.model, &m);
        let result = match_elements(&gen, &truth);
        assert_eq!(result.unmatched_generated.objects, 1);
        assert_eq!(result.unmatched_truth.objects, 0);
    }

    #[test]
    fn same_name_objects_match_with_attribute_differences_counted() {
        let (m, _) = parse_ecore(ALLOCATION).unwrap();
        let one = |freq: &str| {
            let (cim, _) = parse_cim(&format!(
                r#"{{"c": {{"type": "Core", "attributes": [
                    {{"dataType": "string", "attributeName": "name", "value": "core0"}},
                    {{"dataType": "int", "attributeName": "frequency", "value": "{freq}"}}
                ]}}}}"#
            ))
            .unwrap();
            canonicalize(&compile(&m, &cim).model, &m)
        };
        let gen = one("50");
        let truth = one("60");
        let result = match_elements(&gen, &truth);
        assert_eq!(result.object_pairs, [(0, 0)]);
        // Name agrees, frequency differs: 1 of 2 attribute tuples.
        assert_eq!(result.matched_attributes, 1);
        assert_eq!(result.unmatched_generated.attributes, 1);
        assert_eq!(result.unmatched_truth.attributes, 1);
    }

    #[test]
    fn unnamed_object_pairs_with_named_twin_through_attributes() {
        let (m, _) = parse_ecore(ALLOCATION).unwrap();
        let (gen_cim, _) = parse_cim(
            r#"{"c": {"type": "Core", "attributes": [
                {"dataType": "int", "attributeName": "frequency", "value": "50"}
            ]}}"#,
        )
        .unwrap();
        let (truth_cim, _) = parse_cim(
            r#"{"c": {"type": "Core", "attributes": [
                {"dataType": "string", "attributeName": "name", "value": "core0"},
                {"dataType": "int", "attributeName": "frequency", "value": "50"}
            ]}}"#,
        )
        .unwrap();
        let gen = canonicalize(&compile(&m, &gen_cim).model, &m);
        let truth = canonicalize(&compile(&m, &truth_cim).model, &m);
        let result = match_elements(&gen, &truth);
        assert_eq!(result.object_pairs, [(0, 0)]);
        assert_eq!(result.matched_attributes, 1);
    }

    #[test]
    fn hand_computed_ratios() {
        // |E_g| = 10, |E_gt| = 8, intersection 6.
        assert_eq!(Rational::new(6, 10).value(), 0.6);
        assert_eq!(Rational::new(6, 8).value(), 0.75);
        assert_eq!(Rational::new(6, 10 + 8 - 6).value(), 0.5);
    }

    #[test]
    fn zero_over_zero_is_one() {
        let r = Rational::new(0, 0);
        assert_eq!(r, Rational::new(1, 1));
        assert_eq!(r.value(), 1.0);
    }

    #[test]
    fn metrics_identities_hold_on_fixture() {
        let (m, _, truth) = fig3_set();
        // A generated model missing VM2 and app2.
        let smaller = {
            let mut v: serde_json::Value = serde_json::from_str(FIG3).unwrap();
            v.as_object_mut().unwrap().remove("VM2");
            v.as_object_mut().unwrap().remove("app2");
            v.to_string()
        };
        let (cim, _) = parse_cim(&smaller).unwrap();
        let gen_report = compile(&m, &cim);
        let gen = canonicalize(&gen_report.model, &m);
        let result = match_elements(&gen, &truth);
        let metrics = compute_metrics(&result, &gen, &truth, Some(&gen_report.counts));

        // SP and SR share the intersection as numerator, with |E_g| and
        // |E_gt| as denominators.
        let checks = [
            (metrics.objects, gen.objects.len(), truth.objects.len()),
            (
                metrics.attributes,
                gen.attributes.len(),
                truth.attributes.len(),
            ),
            (
                metrics.associations,
                gen.associations.len(),
                truth.associations.len(),
            ),
        ];
        for (row, gn, tn) in checks {
            assert_eq!(row.sp.num, row.sr.num, "shared intersection");
            assert_eq!(row.sp.den, gn as u64);
            assert_eq!(row.sr.den, tn as u64);
            assert!(row.sa <= row.sp && row.sa <= row.sr);
        }
        assert_eq!(metrics.objects.sp, Rational::new(7, 7));
        assert_eq!(metrics.objects.sr, Rational::new(7, 9));
        assert_eq!(metrics.objects.sa, Rational::new(7, 9));
        assert_eq!(metrics.objects.ga, Some(Rational::new(7, 7)));
    }

    /// Brute-force maximum bipartite matching (augmenting paths) on the
    /// exact-equality graph.
    fn max_bipartite(gen: &[ObjKey], truth: &[ObjKey]) -> usize {
        fn try_augment(
            g: usize,
            gen: &[ObjKey],
            truth: &[ObjKey],
            t_of_g: &mut [Option<usize>],
            g_of_t: &mut [Option<usize>],
            visited: &mut [bool],
        ) -> bool {
            for t in 0..truth.len() {
                if visited[t] || gen[g] != truth[t] {
                    continue;
                }
                visited[t] = true;
                let free = match g_of_t[t] {
                    None => true,
                    Some(prev) => try_augment(prev, gen, truth, t_of_g, g_of_t, visited),
                };
                if free {
                    t_of_g[g] = Some(t);
                    g_of_t[t] = Some(g);
                    return true;
                }
            }
            false
        }
        let mut t_of_g = vec![None; gen.len()];
        let mut g_of_t = vec![None; truth.len()];
        let mut total = 0;
        for g in 0..gen.len() {
            let mut visited = vec![false; truth.len()];
            if try_augment(g, gen, truth, &mut t_of_g, &mut g_of_t, &mut visited) {
                total += 1;
            }
        }
        total
    }

    #[test]
    fn greedy_matching_equals_brute_force_in_exact_equality_regime() {
        let classes = ["VM", "APP", "Core"];
        let names = ["a", "b", "c", ""];
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..300 {
            let draw = |rng: &mut StdRng| -> Vec<ObjKey> {
                let n = rng.random_range(0..8);
                (0..n)
                    .map(|_| ObjKey {
                        class: classes[rng.random_range(0..classes.len())].into(),
                        name: names[rng.random_range(0..names.len())].into(),
                    })
                    .collect()
            };
            let gen = CanonicalElementSet {
                objects: draw(&mut rng),
                ..Default::default()
            };
            let truth = CanonicalElementSet {
                objects: draw(&mut rng),
                ..Default::default()
            };

            let forward = match_elements(&gen, &truth).object_pairs.len();
            let backward = match_elements(&truth, &gen).object_pairs.len();
            let oracle = max_bipartite(&gen.objects, &truth.objects);
            assert_eq!(
                forward, oracle,
                "gen {:?} truth {:?}",
                gen.objects, truth.objects
            );
            assert_eq!(forward, backward, "matching cardinality must be symmetric");
        }
    }

    #[test]
    fn sa_never_exceeds_sp_or_sr_on_random_counts() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..1000 {
            let gen_n: u64 = rng.random_range(0..40);
            let truth_n: u64 = rng.random_range(0..40);
            let matched = rng.random_range(0..=gen_n.min(truth_n));
            let sp = Rational::new(matched, gen_n);
            let sr = Rational::new(matched, truth_n);
            let sa = Rational::new(matched, gen_n + truth_n - matched);
            assert!(sa <= sp, "sa {sa} sp {sp}");
            assert!(sa <= sr, "sa {sa} sr {sr}");
        }
    }

    #[test]
    fn ga_comes_from_compile_accounting() {
        let (m, _) = parse_ecore(ALLOCATION).unwrap();
        let (cim, _) = parse_cim(
            r#"{
                "b": {"type": "Board", "attributes": [
                    {"dataType": "string", "attributeName": "name", "value": "b"},
                    {"dataType": "string", "attributeName": "color", "value": "red"}
                ]},
                "x": {"type": "Ghost"}
            }"#,
        )
        .unwrap();
        let report = compile(&m, &cim);
        let set = canonicalize(&report.model, &m);
        let result = match_elements(&set, &set);
        let metrics = compute_metrics(&result, &set, &set, Some(&report.counts));
        assert_eq!(metrics.objects.ga, Some(Rational::new(1, 2)));
        assert_eq!(metrics.attributes.ga, Some(Rational::new(1, 2)));
        assert_eq!(metrics.associations.ga, Some(Rational::new(1, 1)));
        assert_eq!(metrics.overall.ga, Some(Rational::new(2, 4)));
    }
}
