//! Canonical instance file format.
//!
//! JSON with top-level keys `horizon`, `asset_dim`, `alphabets`, `prices`,
//! `priors`. Nodes are keyed by `"/"`-joined labels (root = `""`); every
//! rational is a decimal-free `"numerator/denominator"` string. Floats are
//! rejected outright.

use super::{NodeId, ProbVector, ScenarioTree, Violation};
use crate::rat::{format_vec, parse_rat, RatParseError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Serialize, Deserialize)]
struct InstanceDto {
    horizon: usize,
    asset_dim: usize,
    alphabets: Vec<Vec<String>>,
    prices: BTreeMap<String, Vec<String>>,
    priors: BTreeMap<String, Vec<Vec<String>>>,
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("malformed instance JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("at `{location}`: {source}")]
    Rational {
        location: String,
        #[source]
        source: RatParseError,
    },
    #[error("at `{location}`: {source}")]
    Node {
        location: String,
        #[source]
        source: super::MarketError,
    },
}

/// Parses the canonical format. Structural and numeric problems are hard
/// errors; semantically bad content (unknown node keys, missing prices,
/// invalid generators) is returned as violations alongside the tree so
/// that `validate` can report everything in one pass.
pub fn parse_instance(text: &str) -> Result<(ScenarioTree, Vec<Violation>), ParseError> {
    let dto: InstanceDto = serde_json::from_str(text)?;
    let mut tree = ScenarioTree {
        horizon: dto.horizon,
        asset_dim: dto.asset_dim,
        alphabets: dto.alphabets,
        prices: BTreeMap::new(),
        priors: BTreeMap::new(),
    };
    let mut violations = Vec::new();
    fn key_of(
        violations: &mut Vec<Violation>,
        tree: &ScenarioTree,
        key: &str,
        what: &str,
    ) -> Option<NodeId> {
        match tree.parse_key(key) {
            Ok(node) => Some(node),
            Err(_) => {
                violations.push(Violation::new(key, &format!("{what} at unknown node key")));
                None
            }
        }
    }
    let mut prices = BTreeMap::new();
    for (key, entry) in &dto.prices {
        let Some(node) = key_of(&mut violations, &tree, key, "price") else { continue };
        let mut vec = Vec::with_capacity(entry.len());
        for s in entry {
            vec.push(parse_rat(s).map_err(|source| ParseError::Rational {
                location: format!("prices[\"{key}\"]"),
                source,
            })?);
        }
        prices.insert(node, vec);
    }
    let mut priors = BTreeMap::new();
    for (key, gens) in &dto.priors {
        let Some(node) = key_of(&mut violations, &tree, key, "priors") else { continue };
        if node.depth() >= tree.horizon {
            violations.push(Violation::new(key, "priors at terminal node"));
            continue;
        }
        let mut parsed = Vec::with_capacity(gens.len());
        for (i, g) in gens.iter().enumerate() {
            let mut weights = Vec::with_capacity(g.len());
            for s in g {
                weights.push(parse_rat(s).map_err(|source| ParseError::Rational {
                    location: format!("priors[\"{key}\"][{i}]"),
                    source,
                })?);
            }
            parsed.push(ProbVector::new(weights));
        }
        priors.insert(node, parsed);
    }
    tree.prices = prices;
    tree.priors = priors;
    Ok((tree, violations))
}

/// Canonical serialization: sorted node keys, reduced `"n/d"` rationals,
/// pretty-printed with a trailing newline. Deterministic for a given tree.
pub fn serialize_instance(tree: &ScenarioTree) -> String {
    let mut prices = BTreeMap::new();
    for (node, p) in &tree.prices {
        if let Some(key) = tree.node_key_checked(node) {
            prices.insert(key, format_vec(p));
        }
    }
    let mut priors = BTreeMap::new();
    for (node, gens) in &tree.priors {
        if let Some(key) = tree.node_key_checked(node) {
            priors.insert(key, gens.iter().map(|g| format_vec(&g.weights)).collect());
        }
    }
    let dto = InstanceDto {
        horizon: tree.horizon,
        asset_dim: tree.asset_dim,
        alphabets: tree.alphabets.clone(),
        prices,
        priors,
    };
    let mut s = serde_json::to_string_pretty(&dto).expect("instance serialization");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_int};

    fn sample_json() -> &'static str {
        r#"{
            "horizon": 1,
            "asset_dim": 1,
            "alphabets": [["up", "down"]],
            "prices": {"": ["0/1"], "up": ["1/1"], "down": ["-1/1"]},
            "priors": {"": [["1/2", "1/2"]]}
        }"#
    }

    #[test]
    fn parse_valid_instance() {
        let (tree, violations) = parse_instance(sample_json()).unwrap();
        assert!(violations.is_empty());
        assert!(tree.validate().is_empty());
        assert_eq!(tree.prices[&NodeId(vec![0])], vec![rat_int(1)]);
        assert_eq!(tree.priors[&NodeId::root()][0].weights, vec![rat(1, 2), rat(1, 2)]);
    }

    #[test]
    fn round_trip_is_identity() {
        let (tree, _) = parse_instance(sample_json()).unwrap();
        let text = serialize_instance(&tree);
        let (again, violations) = parse_instance(&text).unwrap();
        assert!(violations.is_empty());
        assert_eq!(tree, again);
        // canonical output is stable
        assert_eq!(text, serialize_instance(&again));
    }

    #[test]
    fn floats_are_rejected() {
        let bad = sample_json().replace("\"1/2\", \"1/2\"", "\"0.5\", \"1/2\"");
        match parse_instance(&bad) {
            Err(ParseError::Rational { location, source }) => {
                assert!(location.contains("priors"));
                assert!(matches!(source, RatParseError::FloatRejected(_)));
            }
            other => panic!("expected float rejection, got {other:?}"),
        }
    }

    #[test]
    fn json_numbers_for_rationals_are_type_errors() {
        let bad = sample_json().replace("\"0/1\"", "0.5");
        assert!(matches!(parse_instance(&bad), Err(ParseError::Json(_))));
    }

    #[test]
    fn unknown_node_key_is_a_violation() {
        let bad = sample_json().replace("\"up\":", "\"sideways\":");
        let (tree, violations) = parse_instance(&bad).unwrap();
        assert_eq!(violations.len(), 1);
        assert!(violations[0].message.contains("unknown node key"));
        // the tree itself then reports the hole
        assert!(tree.validate().iter().any(|v| v.message.contains("price absent")));
    }

    #[test]
    fn short_alphabet_list_does_not_panic() {
        let bad = sample_json().replace("\"horizon\": 1", "\"horizon\": 2");
        let (tree, _violations) = parse_instance(&bad).unwrap();
        assert!(!tree.validate().is_empty());
        assert!(tree.parse_key("up/up").is_err());
    }

    #[test]
    fn missing_price_found_by_validate() {
        let bad = sample_json().replace("\"up\": [\"1/1\"], ", "");
        let (tree, violations) = parse_instance(&bad).unwrap();
        assert!(violations.is_empty());
        let report = tree.validate();
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].location, "up");
    }
}
