//! JSON file formats for groupoids, potentials, measures, transverse
//! functions, modular functions, XY specs, Markov specs and finite maps.
//!
//! All point-indexed data is keyed by point label; class-indexed data by the
//! class label ("C1", "C2", ... in class order). Maps are ordered so that
//! serialized output is deterministic.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dyn_def::MarkovSpec;
use crate::error::{Error, Result};
use crate::groupoid::{
    FiniteGroupoid, Measure, ModularFunction, PointId, PointSpace, Potential,
    SignedTransverseFunction, TransverseFunction,
};
use crate::xy::XySpec;

#[derive(Debug, Serialize, Deserialize)]
pub struct GroupoidFile {
    pub points: Vec<String>,
    pub classes: Vec<Vec<String>>,
    /// Reference weights per point; normalized per class on load. Uniform
    /// weights are used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_hat: Option<BTreeMap<String, f64>>,
}

/// Loads a groupoid and its probability reference transverse function.
pub fn load_groupoid(text: &str) -> Result<(FiniteGroupoid, TransverseFunction)> {
    let file: GroupoidFile = serde_json::from_str(text)?;
    let space = PointSpace::new(file.points)?;
    let g = FiniteGroupoid::from_labelled_partition(space, &file.classes)?;
    let nu_hat = match file.nu_hat {
        None => TransverseFunction::uniform(&g),
        Some(weights) => {
            let values = point_table(&weights, &g, "nu_hat")?;
            let per_class = g
                .classes()
                .map(|c| g.members(c).iter().map(|&p| values[p.0]).collect())
                .collect();
            TransverseFunction::new(&g, per_class)?.into_probability(&g)?
        }
    };
    Ok((g, nu_hat))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PotentialFile {
    pub values: BTreeMap<String, f64>,
}

pub fn load_potential(text: &str, g: &FiniteGroupoid) -> Result<Potential> {
    let file: PotentialFile = serde_json::from_str(text)?;
    Potential::new(point_table(&file.values, g, "values")?)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MeasureFile {
    pub mass: BTreeMap<String, f64>,
}

pub fn load_measure(text: &str, g: &FiniteGroupoid) -> Result<Measure> {
    let file: MeasureFile = serde_json::from_str(text)?;
    Measure::new(point_table(&file.mass, g, "mass")?)
}

pub fn measure_file(m: &Measure, g: &FiniteGroupoid) -> MeasureFile {
    MeasureFile {
        mass: g
            .space()
            .points()
            .map(|p| (g.space().label(p).to_string(), m.mass(p)))
            .collect(),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TransverseFile {
    pub per_class: BTreeMap<String, BTreeMap<String, f64>>,
}

/// Loads a (possibly signed) transverse function keyed by class label.
pub fn load_transverse(text: &str, g: &FiniteGroupoid) -> Result<SignedTransverseFunction> {
    let file: TransverseFile = serde_json::from_str(text)?;
    let mut per_class = Vec::with_capacity(g.n_classes());
    for c in g.classes() {
        let label = g.class_label(c);
        let entries = file
            .per_class
            .get(&label)
            .ok_or_else(|| Error::Invalid(format!("missing class `{label}` in per_class")))?;
        let mut row = Vec::with_capacity(g.members(c).len());
        for &p in g.members(c) {
            let point = g.space().label(p);
            let w = entries
                .get(point)
                .ok_or_else(|| Error::Invalid(format!("missing weight for point `{point}`")))?;
            row.push(*w);
        }
        per_class.push(row);
    }
    SignedTransverseFunction::new(g, per_class)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModularEntry {
    pub x: String,
    pub y: String,
    pub value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModularFile {
    /// Exponential form: `delta(x, y) = e^{V(y) - V(x)}` for this `V`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<BTreeMap<String, f64>>,
    /// Explicit in-class pair table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<ModularEntry>>,
}

pub fn load_modular(text: &str, g: &FiniteGroupoid) -> Result<ModularFunction> {
    let file: ModularFile = serde_json::from_str(text)?;
    match (file.potential, file.table) {
        (Some(values), None) => Ok(ModularFunction::Exp(Potential::new(point_table(
            &values, g, "potential",
        )?)?)),
        (None, Some(entries)) => {
            let mut table = std::collections::HashMap::new();
            for e in &entries {
                let x = lookup(g, &e.x)?;
                let y = lookup(g, &e.y)?;
                table.insert((x, y), e.value);
            }
            Ok(ModularFunction::Table(table))
        }
        _ => Err(Error::Invalid(
            "modular file needs exactly one of `potential` or `table`".into(),
        )),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct XyFile {
    pub alphabet: Vec<String>,
    pub a_priori: Vec<f64>,
    pub depth: usize,
    /// Nested arrays, one level per coordinate; a flat array of length d^k
    /// is also accepted.
    pub potential: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_symbol: Option<String>,
}

pub fn load_xy(text: &str) -> Result<XySpec> {
    let file: XyFile = serde_json::from_str(text)?;
    let mut flat = Vec::new();
    flatten_numbers(&file.potential, &mut flat)?;
    let base_symbol = match &file.base_symbol {
        None => 0,
        Some(label) => file
            .alphabet
            .iter()
            .position(|a| a == label)
            .ok_or_else(|| Error::UnknownPoint(label.clone()))?,
    };
    XySpec::new(file.alphabet, file.a_priori, file.depth, flat, base_symbol)
}

fn flatten_numbers(value: &serde_json::Value, out: &mut Vec<f64>) -> Result<()> {
    match value {
        serde_json::Value::Number(n) => {
            out.push(n.as_f64().ok_or_else(|| {
                Error::Invalid(format!("non-finite number in potential table: {n}"))
            })?);
            Ok(())
        }
        serde_json::Value::Array(items) => {
            for item in items {
                flatten_numbers(item, out)?;
            }
            Ok(())
        }
        other => Err(Error::Invalid(format!(
            "potential table must contain only numbers and arrays, found {other}"
        ))),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MarkovFile {
    pub transition: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stationary: Option<Vec<f64>>,
}

pub fn load_markov(text: &str) -> Result<MarkovSpec> {
    let file: MarkovFile = serde_json::from_str(text)?;
    MarkovSpec::new(file.transition, file.stationary)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MapFile {
    /// Point label to image point label.
    pub map: BTreeMap<String, String>,
}

pub fn load_map(text: &str, g: &FiniteGroupoid) -> Result<Vec<PointId>> {
    let file: MapFile = serde_json::from_str(text)?;
    let mut out = Vec::with_capacity(g.n_points());
    for p in g.space().points() {
        let from = g.space().label(p);
        let to = file
            .map
            .get(from)
            .ok_or_else(|| Error::Invalid(format!("missing image for point `{from}`")))?;
        out.push(lookup(g, to)?);
    }
    Ok(out)
}

fn lookup(g: &FiniteGroupoid, label: &str) -> Result<PointId> {
    g.space()
        .id(label)
        .ok_or_else(|| Error::UnknownPoint(label.to_string()))
}

fn point_table(
    entries: &BTreeMap<String, f64>,
    g: &FiniteGroupoid,
    what: &str,
) -> Result<Vec<f64>> {
    for label in entries.keys() {
        lookup(g, label)?;
    }
    let mut out = Vec::with_capacity(g.n_points());
    for p in g.space().points() {
        let label = g.space().label(p);
        let v = entries
            .get(label)
            .ok_or_else(|| Error::Invalid(format!("missing {what} entry for point `{label}`")))?;
        out.push(*v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const G4_JSON: &str = r#"{
        "points": ["p1", "p2", "p3", "p4"],
        "classes": [["p1", "p2"], ["p3", "p4"]]
    }"#;

    #[test]
    fn groupoid_roundtrip_uniform() {
        let (g, nu) = load_groupoid(G4_JSON).unwrap();
        assert_eq!(g.n_points(), 4);
        assert_eq!(g.n_classes(), 2);
        assert!(nu.is_probability(1e-12));
        assert!((nu.weight(&g, PointId(0)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn groupoid_with_weights_normalizes() {
        let text = r#"{
            "points": ["p1", "p2", "p3"],
            "classes": [["p1", "p2"], ["p3"]],
            "nu_hat": {"p1": 1.0, "p2": 3.0, "p3": 7.0}
        }"#;
        let (g, nu) = load_groupoid(text).unwrap();
        assert!((nu.weight(&g, PointId(0)) - 0.25).abs() < 1e-15);
        assert!((nu.weight(&g, PointId(1)) - 0.75).abs() < 1e-15);
        assert!((nu.weight(&g, PointId(2)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn potential_requires_every_point() {
        let (g, _) = load_groupoid(G4_JSON).unwrap();
        let text = r#"{"values": {"p1": 0.5, "p2": -0.5, "p3": 0.0, "p4": 1.0}}"#;
        let u = load_potential(text, &g).unwrap();
        assert!((u.value(PointId(3)) - 1.0).abs() < 1e-15);
        let missing = r#"{"values": {"p1": 0.5}}"#;
        assert!(load_potential(missing, &g).is_err());
        let unknown = r#"{"values": {"p1": 0.5, "p2": 0.0, "p3": 0.0, "p4": 0.0, "p9": 1.0}}"#;
        assert!(matches!(
            load_potential(unknown, &g).unwrap_err(),
            Error::UnknownPoint(_)
        ));
    }

    #[test]
    fn transverse_by_class_label() {
        let (g, _) = load_groupoid(G4_JSON).unwrap();
        let text = r#"{"per_class": {
            "C1": {"p1": 0.2, "p2": 0.8},
            "C2": {"p3": 1.5, "p4": -0.5}
        }}"#;
        let nu = load_transverse(text, &g).unwrap();
        assert!((nu.weight(&g, PointId(1)) - 0.8).abs() < 1e-15);
        assert!((nu.weight(&g, PointId(3)) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn modular_exp_and_table_forms() {
        let (g, _) = load_groupoid(G4_JSON).unwrap();
        let exp = r#"{"potential": {"p1": 0.0, "p2": 0.7, "p3": 0.0, "p4": 0.0}}"#;
        let delta = load_modular(exp, &g).unwrap();
        let v = delta.eval(&g, PointId(0), PointId(1)).unwrap();
        assert!((v - 0.7f64.exp()).abs() < 1e-15);
        let table = r#"{"table": [
            {"x": "p1", "y": "p1", "value": 1.0},
            {"x": "p1", "y": "p2", "value": 2.0},
            {"x": "p2", "y": "p1", "value": 0.5},
            {"x": "p2", "y": "p2", "value": 1.0},
            {"x": "p3", "y": "p3", "value": 1.0},
            {"x": "p3", "y": "p4", "value": 1.0},
            {"x": "p4", "y": "p3", "value": 1.0},
            {"x": "p4", "y": "p4", "value": 1.0}
        ]}"#;
        let delta = load_modular(table, &g).unwrap();
        assert!((delta.eval(&g, PointId(0), PointId(1)).unwrap() - 2.0).abs() < 1e-15);
        let both = r#"{"potential": {"p1": 0.0}, "table": []}"#;
        assert!(load_modular(both, &g).is_err());
    }

    #[test]
    fn xy_nested_potential() {
        let text = r#"{
            "alphabet": ["a", "b"],
            "a_priori": [0.5, 0.5],
            "depth": 2,
            "potential": [[0.1, 0.2], [0.3, 0.4]],
            "base_symbol": "b"
        }"#;
        let spec = load_xy(text).unwrap();
        assert_eq!(spec.base_symbol(), 1);
        assert!((spec.v(&[1, 0]) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn markov_file_roundtrip() {
        let text = r#"{"transition": [[0.9, 0.1], [0.5, 0.5]]}"#;
        let spec = load_markov(text).unwrap();
        assert!((spec.stationary()[0] - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn map_file() {
        let (g, _) = load_groupoid(G4_JSON).unwrap();
        let text = r#"{"map": {"p1": "p1", "p2": "p1", "p3": "p3", "p4": "p3"}}"#;
        let map = load_map(text, &g).unwrap();
        assert_eq!(map, vec![PointId(0), PointId(0), PointId(2), PointId(2)]);
    }
}
