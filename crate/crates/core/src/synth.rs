//! Synthetic dataset generators.
//!
//! Two families: the uniform-Id construction with controlled set ratios
//! (`gen_example1`), and ancestral sampling from binary Bayesian networks
//! described by a small JSON document (`load_network_spec`,
//! `sample_bayesnet`). A LUCAS-topology network ships with the crate in two
//! forms: a template whose probabilities are 0.5 placeholders, and a
//! stand-in parameterization usable for simulation studies.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::largest_remainder;
use crate::error::{Error, Result};
use crate::model::Unit;

/// Units with a single covariate "Id" drawn i.i.d. uniform on [0, 1),
/// with set sizes controlled exactly.
///
/// The unexposed arm has `n_per_arm` units of which a fraction `ab_split`
/// survive (Set A) and the rest die (Set B); the exposed arm has `n_per_arm`
/// units split by `cd_split` into survivors (Set C) and deaths (Set D).
/// Fractions become integer cardinalities by largest-remainder rounding.
///
/// Because Id is uniform and independent of set membership, the nearest
/// unexposed neighbour of an exposed death falls in Set A with long-run
/// frequency |A| / (|A| + |B|) = ab_split, so PC estimates on this data
/// converge to `ab_split` as the arms grow.
pub fn gen_example1(
    n_per_arm: usize,
    ab_split: f64,
    cd_split: f64,
    seed: u64,
) -> Result<Vec<Unit>> {
    if n_per_arm == 0 {
        return Err(Error::OutOfDomain {
            what: "n_per_arm",
            domain: "[1, ..)",
            value: 0.0,
        });
    }
    for (what, v) in [("ab_split", ab_split), ("cd_split", cd_split)] {
        if !(0.0..=1.0).contains(&v) || v.is_nan() {
            return Err(Error::BadGeneratorParam {
                what,
                domain: "[0, 1]",
                value: v,
            });
        }
    }
    let q0 = largest_remainder(&[ab_split, 1.0 - ab_split], n_per_arm);
    let q1 = largest_remainder(&[cd_split, 1.0 - cd_split], n_per_arm);
    let (n_a, n_b, n_c, n_d) = (q0[0], q0[1], q1[0], q1[1]);
    if n_d == 0 {
        return Err(Error::DegenerateSplit { set: "D" });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut units = Vec::with_capacity(2 * n_per_arm);
    // A then B then C then D; ids number each arm independently.
    let cells: [(usize, u8, u8); 4] = [(n_a, 0, 0), (n_b, 0, 1), (n_c, 1, 0), (n_d, 1, 1)];
    let mut arm_pos = [0usize; 2];
    for (count, x, y) in cells {
        for _ in 0..count {
            let pos = &mut arm_pos[x as usize];
            units.push(Unit {
                id: format!("x{x}-{pos:06}"),
                x,
                y,
                covariates: vec![rng.gen::<f64>()],
            });
            *pos += 1;
        }
    }
    Ok(units)
}

/// The JSON document describing a binary Bayesian network.
///
/// `edges` lists parent → child pairs; a node's parents are ordered by their
/// appearance in this list. `cpt` maps each node to its rows: the key is the
/// parent assignment as a bit string, most significant bit first in parent
/// order (root nodes use the empty string), and the value is
/// P(node = 1 | that assignment).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub nodes: Vec<String>,
    pub edges: Vec<(String, String)>,
    pub cause: String,
    pub effect: String,
    pub cpt: BTreeMap<String, BTreeMap<String, f64>>,
}

/// A validated binary Bayesian network ready for ancestral sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryBayesNet {
    nodes: Vec<String>,
    /// Parent indices per node, in edge-appearance order.
    parents: Vec<Vec<usize>>,
    /// P(node = 1 | parent assignment), one row per assignment; row index is
    /// the parent bits read most significant first.
    cpt: Vec<Vec<f64>>,
    /// A topological order for sampling.
    order: Vec<usize>,
    cause: usize,
    effect: usize,
    /// Non-cause, non-effect nodes in declaration order; these become the
    /// unit covariates.
    covariates: Vec<usize>,
}

impl BinaryBayesNet {
    /// Validates a parsed document into a sampleable network.
    pub fn from_doc(doc: &NetworkDoc) -> Result<Self> {
        let nodes = doc.nodes.clone();
        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, name) in nodes.iter().enumerate() {
            if index.insert(name.as_str(), i).is_some() {
                return Err(Error::DuplicateNode { node: name.clone() });
            }
        }
        let lookup = |name: &str| -> Result<usize> {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::UnknownNode { node: name.into() })
        };

        let mut parents: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
        let mut seen_edges = std::collections::BTreeSet::new();
        for (parent, child) in &doc.edges {
            let p = lookup(parent)?;
            let c = lookup(child)?;
            if !seen_edges.insert((p, c)) {
                return Err(Error::DuplicateEdge {
                    parent: parent.clone(),
                    child: child.clone(),
                });
            }
            parents[c].push(p);
        }

        let cause = index
            .get(doc.cause.as_str())
            .copied()
            .ok_or_else(|| Error::BadRole {
                role: "cause",
                node: doc.cause.clone(),
            })?;
        let effect = index
            .get(doc.effect.as_str())
            .copied()
            .ok_or_else(|| Error::BadRole {
                role: "effect",
                node: doc.effect.clone(),
            })?;
        if cause == effect {
            return Err(Error::CauseEqualsEffect {
                node: doc.cause.clone(),
            });
        }

        // Kahn's algorithm, always emitting the lowest-index ready node so
        // the sampling order is deterministic.
        let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut emitted = vec![false; nodes.len()];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
        for (c, ps) in parents.iter().enumerate() {
            for &p in ps {
                children[p].push(c);
            }
        }
        let mut order = Vec::with_capacity(nodes.len());
        while order.len() < nodes.len() {
            let next = (0..nodes.len()).find(|&i| !emitted[i] && indegree[i] == 0);
            let Some(i) = next else {
                let stuck = (0..nodes.len()).find(|&i| !emitted[i]).unwrap();
                return Err(Error::CyclicNetwork {
                    node: nodes[stuck].clone(),
                });
            };
            emitted[i] = true;
            order.push(i);
            for &c in &children[i] {
                indegree[c] -= 1;
            }
        }

        // CPT rows: every parent-bit pattern exactly once, values in [0, 1].
        for name in doc.cpt.keys() {
            if !index.contains_key(name.as_str()) {
                return Err(Error::UnknownNode { node: name.clone() });
            }
        }
        static EMPTY: BTreeMap<String, f64> = BTreeMap::new();
        let mut cpt: Vec<Vec<f64>> = Vec::with_capacity(nodes.len());
        for (i, name) in nodes.iter().enumerate() {
            let rows = doc.cpt.get(name).unwrap_or(&EMPTY);
            let k = parents[i].len();
            let mut table = Vec::with_capacity(1usize << k);
            for row in 0..(1usize << k) {
                let pattern = pattern_string(row, k);
                let Some(&p) = rows.get(&pattern) else {
                    return Err(Error::MissingCptRow {
                        node: name.clone(),
                        pattern,
                    });
                };
                if !(0.0..=1.0).contains(&p) || p.is_nan() {
                    return Err(Error::BadProbability {
                        node: name.clone(),
                        pattern,
                        p,
                    });
                }
                table.push(p);
            }
            for pattern in rows.keys() {
                let expected =
                    pattern.len() == k && pattern.bytes().all(|b| b == b'0' || b == b'1');
                if !expected {
                    return Err(Error::UnexpectedCptRow {
                        node: name.clone(),
                        pattern: pattern.clone(),
                        parents: k,
                    });
                }
            }
            cpt.push(table);
        }

        let covariates = (0..nodes.len())
            .filter(|&i| i != cause && i != effect)
            .collect();
        Ok(BinaryBayesNet {
            nodes,
            parents,
            cpt,
            order,
            cause,
            effect,
            covariates,
        })
    }

    pub fn node_names(&self) -> &[String] {
        &self.nodes
    }

    pub fn cause_node(&self) -> &str {
        &self.nodes[self.cause]
    }

    pub fn effect_node(&self) -> &str {
        &self.nodes[self.effect]
    }

    /// Names of the nodes that become unit covariates, in declaration order.
    pub fn covariate_nodes(&self) -> Vec<&str> {
        self.covariates.iter().map(|&i| self.nodes[i].as_str()).collect()
    }

    /// P(node = 1 | parent values), with parents given in this node's
    /// parent order.
    fn row_probability(&self, node: usize, values: &[u8]) -> f64 {
        let mut row = 0usize;
        for &p in &self.parents[node] {
            row = (row << 1) | values[p] as usize;
        }
        self.cpt[node][row]
    }
}

/// The bit-string key for `row` of a node with `k` parents, most significant
/// bit first.
fn pattern_string(row: usize, k: usize) -> String {
    (0..k)
        .rev()
        .map(|b| if row >> b & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Parses and validates a network document.
pub fn load_network_spec(json: &str) -> Result<BinaryBayesNet> {
    let doc: NetworkDoc = serde_json::from_str(json)?;
    BinaryBayesNet::from_doc(&doc)
}

/// The bundled LUCAS-topology document with placeholder probabilities. The
/// structure matches the published benchmark graph; every CPT value is 0.5
/// and meant to be replaced.
pub fn lucas_template_doc() -> &'static str {
    include_str!("../data/lucas_template.json")
}

/// The bundled LUCAS-topology document with stand-in probabilities, suitable
/// for simulation studies out of the box. The parameters are invented, not
/// the benchmark's.
pub fn lucas_standin_doc() -> &'static str {
    include_str!("../data/lucas_standin.json")
}

/// The validated stand-in network.
pub fn lucas_standin() -> BinaryBayesNet {
    load_network_spec(lucas_standin_doc()).expect("bundled network is valid")
}

/// Ancestral sampling: `n` units drawn by sampling each node given its
/// parents in topological order. The cause node becomes x, the effect node
/// becomes y, every other node becomes a 0/1 covariate in declaration order.
pub fn sample_bayesnet(net: &BinaryBayesNet, n: usize, seed: u64) -> Result<Vec<Unit>> {
    if n == 0 {
        return Err(Error::OutOfDomain {
            what: "n",
            domain: "[1, ..)",
            value: 0.0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![0u8; net.nodes.len()];
    let mut units = Vec::with_capacity(n);
    for i in 0..n {
        for &node in &net.order {
            let p = net.row_probability(node, &values);
            values[node] = rng.gen_bool(p) as u8;
        }
        units.push(Unit {
            id: format!("bn-{i:06}"),
            x: values[net.cause],
            y: values[net.effect],
            covariates: net.covariates.iter().map(|&j| values[j] as f64).collect(),
        });
    }
    Ok(units)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::partition_dataset;
    use proptest::prelude::*;

    fn doc_from(json: &str) -> NetworkDoc {
        serde_json::from_str(json).unwrap()
    }

    fn two_node_doc() -> NetworkDoc {
        doc_from(
            r#"{
                "nodes": ["X", "Y"],
                "edges": [["X", "Y"]],
                "cause": "X",
                "effect": "Y",
                "cpt": {"X": {"": 0.5}, "Y": {"0": 0.0, "1": 1.0}}
            }"#,
        )
    }

    #[test]
    fn example1_fixed_cardinalities() {
        let units = gen_example1(500, 0.8, 0.6, 1).unwrap();
        let p = partition_dataset(&units).unwrap();
        assert_eq!(p.counts().a, 400);
        assert_eq!(p.counts().b, 100);
        assert_eq!(p.counts().c, 300);
        assert_eq!(p.counts().d, 200);
    }

    #[test]
    fn example1_rare_event_cardinalities() {
        for (d_target, r) in [(2usize, 0.002), (5, 0.005), (10, 0.010), (15, 0.015)] {
            let units = gen_example1(1000, 0.8, 1.0 - r, 3).unwrap();
            let p = partition_dataset(&units).unwrap();
            assert_eq!(p.counts().d, d_target, "r = {r}");
            assert_eq!(p.counts().c, 1000 - d_target);
        }
    }

    #[test]
    fn example1_boundary_split_empties_b() {
        let units = gen_example1(50, 1.0, 0.6, 0).unwrap();
        let p = partition_dataset(&units).unwrap();
        assert_eq!(p.counts().a, 50);
        assert_eq!(p.counts().b, 0);
    }

    #[test]
    fn example1_rejects_empty_d() {
        assert!(matches!(
            gen_example1(100, 0.8, 1.0, 0),
            Err(Error::DegenerateSplit { set: "D" })
        ));
    }

    #[test]
    fn example1_rejects_bad_params() {
        assert!(gen_example1(0, 0.5, 0.5, 0).is_err());
        assert!(matches!(
            gen_example1(10, 1.5, 0.5, 0),
            Err(Error::BadGeneratorParam { what: "ab_split", .. })
        ));
        assert!(matches!(
            gen_example1(10, 0.5, -0.1, 0),
            Err(Error::BadGeneratorParam { what: "cd_split", .. })
        ));
    }

    #[test]
    fn example1_is_deterministic_and_seed_sensitive() {
        let a = gen_example1(200, 0.8, 0.6, 7).unwrap();
        let b = gen_example1(200, 0.8, 0.6, 7).unwrap();
        let c = gen_example1(200, 0.8, 0.6, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(
            serde_json::to_vec(&a).unwrap(),
            serde_json::to_vec(&b).unwrap()
        );
    }

    #[test]
    fn example1_ids_and_support() {
        let units = gen_example1(30, 0.5, 0.5, 11).unwrap();
        assert_eq!(units.len(), 60);
        let mut ids: Vec<&str> = units.iter().map(|u| u.id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 60);
        for u in &units {
            assert!(u.id.starts_with(if u.x == 0 { "x0-" } else { "x1-" }));
            assert_eq!(u.covariates.len(), 1);
            assert!((0.0..1.0).contains(&u.covariates[0]));
        }
    }

    proptest! {
        #[test]
        fn example1_quotas_always_fill_both_arms(
            n in 1usize..300,
            ab in 0.0f64..=1.0,
            cd in 0.0f64..=1.0,
        ) {
            let quota_d = largest_remainder(&[cd, 1.0 - cd], n)[1];
            match gen_example1(n, ab, cd, 5) {
                Ok(units) => {
                    let p = partition_dataset(&units).unwrap();
                    prop_assert_eq!(p.counts().a + p.counts().b, n);
                    prop_assert_eq!(p.counts().c + p.counts().d, n);
                    prop_assert_eq!(p.counts().d, quota_d);
                    prop_assert!(quota_d >= 1);
                }
                Err(Error::DegenerateSplit { set: "D" }) => {
                    prop_assert_eq!(quota_d, 0);
                }
                Err(e) => return Err(TestCaseError::fail(format!("unexpected error {e}"))),
            }
        }
    }

    #[test]
    fn deterministic_chain_copies_cause_to_effect() {
        let net = BinaryBayesNet::from_doc(&two_node_doc()).unwrap();
        let units = sample_bayesnet(&net, 2000, 13).unwrap();
        assert!(units.iter().all(|u| u.x == u.y));
        assert!(units.iter().any(|u| u.x == 0) && units.iter().any(|u| u.x == 1));
        assert!(units.iter().all(|u| u.covariates.is_empty()));
    }

    #[test]
    fn constant_effect_net_yields_all_deaths() {
        // Constant cause 0, effect forced to 1 by its own root CPT.
        let doc = doc_from(
            r#"{
                "nodes": ["X", "Y"],
                "edges": [],
                "cause": "X",
                "effect": "Y",
                "cpt": {"X": {"": 0.0}, "Y": {"": 1.0}}
            }"#,
        );
        let net = BinaryBayesNet::from_doc(&doc).unwrap();
        let units = sample_bayesnet(&net, 500, 0).unwrap();
        assert!(units.iter().all(|u| u.x == 0 && u.y == 1));
    }

    #[test]
    fn two_parent_marginal_matches_enumeration() {
        let doc = doc_from(
            r#"{
                "nodes": ["C", "G", "E"],
                "edges": [["C", "E"], ["G", "E"]],
                "cause": "C",
                "effect": "E",
                "cpt": {
                    "C": {"": 0.5},
                    "G": {"": 0.3},
                    "E": {"00": 0.1, "01": 0.6, "10": 0.3, "11": 0.9}
                }
            }"#,
        );
        // Exact marginal by enumerating the joint straight from the document.
        let pc = doc.cpt["C"][""];
        let pg = doc.cpt["G"][""];
        let mut exact = 0.0;
        for c in 0..2u8 {
            for g in 0..2u8 {
                let wc = if c == 1 { pc } else { 1.0 - pc };
                let wg = if g == 1 { pg } else { 1.0 - pg };
                exact += wc * wg * doc.cpt["E"][&format!("{c}{g}")];
            }
        }
        assert!((exact - 0.365).abs() < 1e-15);

        let net = BinaryBayesNet::from_doc(&doc).unwrap();
        let units = sample_bayesnet(&net, 100_000, 19).unwrap();
        let empirical = units.iter().filter(|u| u.y == 1).count() as f64 / 100_000.0;
        assert!(
            (empirical - exact).abs() < 0.01,
            "empirical {empirical} vs exact {exact}"
        );
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let net = lucas_standin();
        let a = sample_bayesnet(&net, 300, 21).unwrap();
        let b = sample_bayesnet(&net, 300, 21).unwrap();
        let c = sample_bayesnet(&net, 300, 22).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn template_loads_and_gives_uniform_marginals() {
        let net = load_network_spec(lucas_template_doc()).unwrap();
        assert_eq!(net.node_names().len(), 11);
        let units = sample_bayesnet(&net, 20_000, 4).unwrap();
        // With every CPT row at 0.5 each node is a fair coin regardless of
        // its parents.
        let p_x = units.iter().filter(|u| u.x == 1).count() as f64 / 20_000.0;
        let p_y = units.iter().filter(|u| u.y == 1).count() as f64 / 20_000.0;
        assert!((p_x - 0.5).abs() < 0.02, "P(x=1) = {p_x}");
        assert!((p_y - 0.5).abs() < 0.02, "P(y=1) = {p_y}");
    }

    #[test]
    fn lucas_standin_roles_and_covariates() {
        let net = lucas_standin();
        assert_eq!(net.cause_node(), "Smoking");
        assert_eq!(net.effect_node(), "Lung Cancer");
        let cov = net.covariate_nodes();
        assert_eq!(cov.len(), 9);
        assert!(!cov.contains(&"Smoking") && !cov.contains(&"Lung Cancer"));
        let units = sample_bayesnet(&net, 10, 0).unwrap();
        assert_eq!(units[0].covariates.len(), 9);
        assert_eq!(units[0].id, "bn-000000");
        assert!(units
            .iter()
            .all(|u| u.covariates.iter().all(|&v| v == 0.0 || v == 1.0)));
    }

    #[test]
    fn missing_cpt_row_names_node_and_pattern() {
        let mut doc = doc_from(lucas_standin_doc());
        doc.cpt.get_mut("Coughing").unwrap().remove("10");
        match BinaryBayesNet::from_doc(&doc) {
            Err(Error::MissingCptRow { node, pattern }) => {
                assert_eq!(node, "Coughing");
                assert_eq!(pattern, "10");
            }
            other => panic!("expected MissingCptRow, got {other:?}"),
        }
    }

    #[test]
    fn missing_whole_node_reports_first_pattern() {
        let mut doc = doc_from(lucas_standin_doc());
        doc.cpt.remove("Anxiety");
        match BinaryBayesNet::from_doc(&doc) {
            Err(Error::MissingCptRow { node, pattern }) => {
                assert_eq!(node, "Anxiety");
                assert_eq!(pattern, "");
            }
            other => panic!("expected MissingCptRow, got {other:?}"),
        }
    }

    #[test]
    fn stray_cpt_rows_are_rejected() {
        let mut doc = doc_from(lucas_standin_doc());
        doc.cpt
            .get_mut("Anxiety")
            .unwrap()
            .insert("0".into(), 0.5);
        match BinaryBayesNet::from_doc(&doc) {
            Err(Error::UnexpectedCptRow { node, pattern, parents }) => {
                assert_eq!(node, "Anxiety");
                assert_eq!(pattern, "0");
                assert_eq!(parents, 0);
            }
            other => panic!("expected UnexpectedCptRow, got {other:?}"),
        }
        let mut doc = doc_from(lucas_standin_doc());
        doc.cpt
            .insert("Ghost".into(), BTreeMap::from([(String::new(), 0.5)]));
        assert!(matches!(
            BinaryBayesNet::from_doc(&doc),
            Err(Error::UnknownNode { .. })
        ));
    }

    #[test]
    fn probabilities_outside_unit_interval_are_rejected() {
        let mut doc = doc_from(lucas_standin_doc());
        doc.cpt
            .get_mut("Smoking")
            .unwrap()
            .insert("11".into(), 1.2);
        match BinaryBayesNet::from_doc(&doc) {
            Err(Error::BadProbability { node, pattern, p }) => {
                assert_eq!(node, "Smoking");
                assert_eq!(pattern, "11");
                assert_eq!(p, 1.2);
            }
            other => panic!("expected BadProbability, got {other:?}"),
        }
    }

    #[test]
    fn cycles_are_detected() {
        let doc = doc_from(
            r#"{
                "nodes": ["A", "B"],
                "edges": [["A", "B"], ["B", "A"]],
                "cause": "A",
                "effect": "B",
                "cpt": {"A": {"0": 0.5, "1": 0.5}, "B": {"0": 0.5, "1": 0.5}}
            }"#,
        );
        assert!(matches!(
            BinaryBayesNet::from_doc(&doc),
            Err(Error::CyclicNetwork { .. })
        ));
    }

    #[test]
    fn unknown_edge_endpoint_is_rejected() {
        let mut doc = two_node_doc();
        doc.edges.push(("Z".into(), "Y".into()));
        match BinaryBayesNet::from_doc(&doc) {
            Err(Error::UnknownNode { node }) => assert_eq!(node, "Z"),
            other => panic!("expected UnknownNode, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_declarations_are_rejected() {
        let mut doc = two_node_doc();
        doc.nodes.push("X".into());
        assert!(matches!(
            BinaryBayesNet::from_doc(&doc),
            Err(Error::DuplicateNode { .. })
        ));
        let mut doc = two_node_doc();
        doc.edges.push(("X".into(), "Y".into()));
        assert!(matches!(
            BinaryBayesNet::from_doc(&doc),
            Err(Error::DuplicateEdge { .. })
        ));
    }

    #[test]
    fn bad_roles_are_rejected() {
        let mut doc = two_node_doc();
        doc.cause = "Nope".into();
        assert!(matches!(
            BinaryBayesNet::from_doc(&doc),
            Err(Error::BadRole { role: "cause", .. })
        ));
        let mut doc = two_node_doc();
        doc.effect = "X".into();
        assert!(matches!(
            BinaryBayesNet::from_doc(&doc),
            Err(Error::CauseEqualsEffect { .. })
        ));
    }

    #[test]
    fn pattern_string_is_msb_first() {
        assert_eq!(pattern_string(0, 0), "");
        assert_eq!(pattern_string(2, 2), "10");
        assert_eq!(pattern_string(1, 2), "01");
        assert_eq!(pattern_string(5, 3), "101");
    }

    #[test]
    fn doc_round_trips_through_json() {
        let doc = doc_from(lucas_standin_doc());
        let back: NetworkDoc =
            serde_json::from_str(&serde_json::to_string(&doc).unwrap()).unwrap();
        assert_eq!(doc, back);
    }
}
