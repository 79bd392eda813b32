//! Grid data model, the JSON grid file format, validation, and
//! configuration overrides (load scaling, generation scaling, switch states).

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_CONFIGURATION: &str = "standard";

fn default_configuration() -> String {
    DEFAULT_CONFIGURATION.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: String,
    /// Active-power demand in MW.
    pub demand_mw: f64,
}

/// A line or transformer. Susceptance is stored pre-folded with the base
/// power, so `susceptance * (theta_from - theta_to)` is a flow in MW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub id: String,
    #[serde(rename = "from")]
    pub from_bus: String,
    #[serde(rename = "to")]
    pub to_bus: String,
    pub susceptance: f64,
    pub flow_limit_mw: f64,
    pub attackable: bool,
    pub in_service: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub id: String,
    pub bus: String,
    pub p_max_mw: f64,
    /// Cyber-attackable (and protectable) iff true.
    pub ict_controlled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCase {
    pub name: String,
    #[serde(default = "default_configuration")]
    pub configuration_label: String,
    pub reference_bus: String,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
}

/// An attackable (and therefore protectable) grid component.
///
/// Ordering puts branches before generators and compares ids as strings;
/// every tie-break on component sets in this crate uses this order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Component {
    Branch(String),
    Generator(String),
}

impl Component {
    pub fn id(&self) -> &str {
        match self {
            Component::Branch(id) | Component::Generator(id) => id,
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Component::Branch(id) => write!(f, "branch {id}"),
            Component::Generator(id) => write!(f, "generator {id}"),
        }
    }
}

/// Serde adapter writing a component list as `{"branches": [...], "generators": [...]}`.
pub mod component_set {
    use std::collections::BTreeSet;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::Component;

    #[derive(Serialize, Deserialize)]
    struct Repr {
        #[serde(default)]
        branches: BTreeSet<String>,
        #[serde(default)]
        generators: BTreeSet<String>,
    }

    pub fn serialize<S: Serializer>(components: &[Component], s: S) -> Result<S::Ok, S::Error> {
        let mut repr = Repr {
            branches: BTreeSet::new(),
            generators: BTreeSet::new(),
        };
        for c in components {
            match c {
                Component::Branch(id) => repr.branches.insert(id.clone()),
                Component::Generator(id) => repr.generators.insert(id.clone()),
            };
        }
        repr.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Component>, D::Error> {
        let repr = Repr::deserialize(d)?;
        Ok(repr
            .branches
            .into_iter()
            .map(Component::Branch)
            .chain(repr.generators.into_iter().map(Component::Generator))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    Structure,
    Duplicate,
    Reference,
    Domain,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    /// The offending component, e.g. `branch 4-5`.
    pub component: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.component, self.message)
    }
}

impl GridCase {
    pub fn total_demand_mw(&self) -> f64 {
        self.buses.iter().map(|b| b.demand_mw).sum()
    }

    pub fn total_generation_mw(&self) -> f64 {
        self.generators.iter().map(|g| g.p_max_mw).sum()
    }

    pub fn branch(&self, id: &str) -> Option<&Branch> {
        self.branches.iter().find(|b| b.id == id)
    }

    pub fn generator(&self, id: &str) -> Option<&Generator> {
        self.generators.iter().find(|g| g.id == id)
    }

    /// Attackable universe: in-service attackable branches and ICT-controlled
    /// generators, sorted. Open branches carry no flow and are excluded.
    pub fn attackable_components(&self) -> Vec<Component> {
        let mut out: Vec<Component> = self
            .branches
            .iter()
            .filter(|b| b.attackable && b.in_service)
            .map(|b| Component::Branch(b.id.clone()))
            .chain(
                self.generators
                    .iter()
                    .filter(|g| g.ict_controlled)
                    .map(|g| Component::Generator(g.id.clone())),
            )
            .collect();
        out.sort();
        out
    }

    pub fn is_attackable(&self, component: &Component) -> bool {
        match component {
            Component::Branch(id) => self
                .branch(id)
                .is_some_and(|b| b.attackable && b.in_service),
            Component::Generator(id) => self.generator(id).is_some_and(|g| g.ict_controlled),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("grid serialization is infallible")
    }
}

/// Parses and validates a grid file.
pub fn parse_grid(text: &str) -> Result<GridCase> {
    let grid: GridCase = serde_json::from_str(text).map_err(Error::from_json)?;
    let diagnostics = validate(&grid);
    if diagnostics.is_empty() {
        Ok(grid)
    } else {
        Err(Error::Invalid(diagnostics))
    }
}

pub fn serialize_grid(grid: &GridCase) -> String {
    grid.to_json()
}

/// Checks every grid invariant and returns one diagnostic per violation.
pub fn validate(grid: &GridCase) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut push = |kind, component: String, message: String| {
        out.push(Diagnostic {
            kind,
            component,
            message,
        })
    };

    if grid.buses.is_empty() {
        push(
            DiagnosticKind::Structure,
            format!("grid {}", grid.name),
            "grid has no buses".into(),
        );
    }

    let bus_ids = check_duplicates(grid.buses.iter().map(|b| b.id.as_str()), "bus", &mut push);
    check_duplicates(grid.branches.iter().map(|b| b.id.as_str()), "branch", &mut push);
    check_duplicates(
        grid.generators.iter().map(|g| g.id.as_str()),
        "generator",
        &mut push,
    );

    if !grid.buses.is_empty() && !bus_ids.contains(grid.reference_bus.as_str()) {
        push(
            DiagnosticKind::Reference,
            format!("grid {}", grid.name),
            format!("reference bus `{}` does not exist", grid.reference_bus),
        );
    }

    for bus in &grid.buses {
        if !(bus.demand_mw.is_finite() && bus.demand_mw >= 0.0) {
            push(
                DiagnosticKind::Domain,
                format!("bus {}", bus.id),
                format!("demand_mw must be finite and >= 0, got {}", bus.demand_mw),
            );
        }
    }

    for br in &grid.branches {
        let who = format!("branch {}", br.id);
        for (end, bus) in [("from", &br.from_bus), ("to", &br.to_bus)] {
            if !bus_ids.contains(bus.as_str()) {
                push(
                    DiagnosticKind::Reference,
                    who.clone(),
                    format!("`{end}` bus `{bus}` does not exist"),
                );
            }
        }
        if br.from_bus == br.to_bus {
            push(
                DiagnosticKind::Domain,
                who.clone(),
                format!("both ends connect to bus `{}`", br.from_bus),
            );
        }
        if !(br.susceptance.is_finite() && br.susceptance > 0.0) {
            push(
                DiagnosticKind::Domain,
                who.clone(),
                format!("susceptance must be > 0, got {}", br.susceptance),
            );
        }
        if !(br.flow_limit_mw.is_finite() && br.flow_limit_mw > 0.0) {
            push(
                DiagnosticKind::Domain,
                who,
                format!("flow_limit_mw must be > 0, got {}", br.flow_limit_mw),
            );
        }
    }

    for gen in &grid.generators {
        let who = format!("generator {}", gen.id);
        if !bus_ids.contains(gen.bus.as_str()) {
            push(
                DiagnosticKind::Reference,
                who.clone(),
                format!("bus `{}` does not exist", gen.bus),
            );
        }
        if !(gen.p_max_mw.is_finite() && gen.p_max_mw >= 0.0) {
            push(
                DiagnosticKind::Domain,
                who,
                format!("p_max_mw must be finite and >= 0, got {}", gen.p_max_mw),
            );
        }
    }

    out
}

fn check_duplicates<'a>(
    ids: impl Iterator<Item = &'a str>,
    class: &str,
    push: &mut impl FnMut(DiagnosticKind, String, String),
) -> HashSet<&'a str> {
    let mut seen = HashSet::new();
    let mut reported = HashSet::new();
    for id in ids {
        if !seen.insert(id) && reported.insert(id) {
            push(
                DiagnosticKind::Duplicate,
                format!("{class} {id}"),
                "duplicate id".into(),
            );
        }
    }
    seen
}

/// Study-case variant of a base grid: per-bus load scaling, per-generator
/// capacity scaling and switch states.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigurationOverride {
    pub label: String,
    #[serde(default)]
    pub load_scale: BTreeMap<String, f64>,
    #[serde(default)]
    pub generation_scale: BTreeMap<String, f64>,
    #[serde(default)]
    pub switch_states: BTreeMap<String, bool>,
}

impl ConfigurationOverride {
    pub fn identity(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            ..Self::default()
        }
    }
}

pub fn parse_configuration(text: &str) -> Result<ConfigurationOverride> {
    serde_json::from_str(text).map_err(Error::from_json)
}

/// Returns a new grid with the override applied; `grid` is left untouched.
pub fn apply_configuration(grid: &GridCase, config: &ConfigurationOverride) -> Result<GridCase> {
    let check_scale = |what: &str, id: &str, scale: f64| {
        if scale.is_finite() && scale >= 0.0 {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "configuration `{}`: {what} scale for `{id}` must be finite and >= 0, got {scale}",
                config.label
            )))
        }
    };

    for (id, &scale) in &config.load_scale {
        if !grid.buses.iter().any(|b| &b.id == id) {
            return Err(Error::UnknownId {
                kind: "bus",
                id: id.clone(),
            });
        }
        check_scale("load", id, scale)?;
    }
    for (id, &scale) in &config.generation_scale {
        if grid.generator(id).is_none() {
            return Err(Error::UnknownId {
                kind: "generator",
                id: id.clone(),
            });
        }
        check_scale("generation", id, scale)?;
    }
    for id in config.switch_states.keys() {
        if grid.branch(id).is_none() {
            return Err(Error::UnknownId {
                kind: "branch",
                id: id.clone(),
            });
        }
    }

    let mut out = grid.clone();
    out.configuration_label = config.label.clone();
    for bus in &mut out.buses {
        if let Some(scale) = config.load_scale.get(&bus.id) {
            bus.demand_mw *= scale;
        }
    }
    for gen in &mut out.generators {
        if let Some(scale) = config.generation_scale.get(&gen.id) {
            gen.p_max_mw *= scale;
        }
    }
    for br in &mut out.branches {
        if let Some(&closed) = config.switch_states.get(&br.id) {
            br.in_service = closed;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "one", "reference_bus": "1",
        "buses": [{"id": "1", "demand_mw": 0}],
        "branches": [], "generators": []
    }"#;

    fn two_bus() -> GridCase {
        parse_grid(
            r#"{
            "name": "toy", "reference_bus": "A",
            "buses": [{"id": "A", "demand_mw": 0}, {"id": "B", "demand_mw": 50}],
            "branches": [{"id": "AB", "from": "A", "to": "B", "susceptance": 10,
                          "flow_limit_mw": 100, "attackable": true, "in_service": true}],
            "generators": [{"id": "G", "bus": "A", "p_max_mw": 100, "ict_controlled": false}]
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn minimal_grid_parses() {
        let grid = parse_grid(MINIMAL).unwrap();
        assert_eq!(grid.buses.len(), 1);
        assert!(grid.branches.is_empty());
        assert!(grid.generators.is_empty());
        assert_eq!(grid.configuration_label, DEFAULT_CONFIGURATION);
    }

    #[test]
    fn unknown_to_bus_names_branch() {
        let text = MINIMAL.replace(
            r#""branches": []"#,
            r#""branches": [{"id": "L7", "from": "1", "to": "9", "susceptance": 1,
                "flow_limit_mw": 1, "attackable": true, "in_service": true}]"#,
        );
        match parse_grid(&text) {
            Err(Error::Invalid(diags)) => {
                assert_eq!(diags.len(), 1);
                assert_eq!(diags[0].kind, DiagnosticKind::Reference);
                assert!(diags[0].component.contains("L7"));
            }
            other => panic!("expected reference error, got {other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_grid("{\n  \"name\": \"x\",\n  \"buses\": [}").unwrap_err();
        match err {
            Error::Syntax { line, .. } => assert_eq!(line, 3),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn missing_field_is_syntax_error() {
        let text = MINIMAL.replace(r#""demand_mw": 0"#, "");
        assert!(matches!(parse_grid(&text), Err(Error::Syntax { .. })));
    }

    #[test]
    fn negative_limit_is_domain_error() {
        let mut grid = two_bus();
        grid.branches[0].flow_limit_mw = -5.0;
        let diags = validate(&grid);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].kind, DiagnosticKind::Domain);
    }

    #[test]
    fn duplicate_bus_gives_one_diagnostic() {
        let mut grid = two_bus();
        grid.buses.push(Bus {
            id: "B".into(),
            demand_mw: 1.0,
        });
        let diags = validate(&grid);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].kind, DiagnosticKind::Duplicate);
        assert_eq!(diags[0].message, "duplicate id");
    }

    #[test]
    fn zero_susceptance_is_domain_diagnostic() {
        let mut grid = two_bus();
        grid.branches[0].susceptance = 0.0;
        let diags = validate(&grid);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].kind, DiagnosticKind::Domain);
    }

    #[test]
    fn self_loop_and_bad_generator() {
        let mut grid = two_bus();
        grid.branches[0].to_bus = "A".into();
        grid.generators[0].bus = "Z".into();
        grid.generators[0].p_max_mw = -1.0;
        let kinds: Vec<_> = validate(&grid).into_iter().map(|d| d.kind).collect();
        assert_eq!(
            kinds,
            vec![
                DiagnosticKind::Domain,
                DiagnosticKind::Reference,
                DiagnosticKind::Domain
            ]
        );
    }

    #[test]
    fn identity_override_only_changes_label() {
        let grid = two_bus();
        let out = apply_configuration(&grid, &ConfigurationOverride::identity("same")).unwrap();
        assert_eq!(out.configuration_label, "same");
        let mut relabelled = out.clone();
        relabelled.configuration_label = grid.configuration_label.clone();
        assert_eq!(relabelled, grid);
    }

    #[test]
    fn zero_load_scale_removes_demand() {
        let grid = two_bus();
        let mut cfg = ConfigurationOverride::identity("empty");
        for b in &grid.buses {
            cfg.load_scale.insert(b.id.clone(), 0.0);
        }
        let out = apply_configuration(&grid, &cfg).unwrap();
        assert_eq!(out.total_demand_mw(), 0.0);
        assert_eq!(grid.total_demand_mw(), 50.0);
    }

    #[test]
    fn override_scales_and_switches() {
        let grid = two_bus();
        let cfg = parse_configuration(
            r#"{"label": "x", "load_scale": {"B": 0.5},
                "generation_scale": {"G": 2}, "switch_states": {"AB": false}}"#,
        )
        .unwrap();
        let out = apply_configuration(&grid, &cfg).unwrap();
        assert_eq!(out.buses[1].demand_mw, 25.0);
        assert_eq!(out.generators[0].p_max_mw, 200.0);
        assert!(!out.branches[0].in_service);
        assert!(out.attackable_components().is_empty());
    }

    #[test]
    fn override_rejects_unknown_ids_and_negative_scales() {
        let grid = two_bus();
        let mut cfg = ConfigurationOverride::identity("x");
        cfg.switch_states.insert("nope".into(), true);
        assert!(matches!(
            apply_configuration(&grid, &cfg),
            Err(Error::UnknownId { kind: "branch", .. })
        ));
        let mut cfg = ConfigurationOverride::identity("x");
        cfg.load_scale.insert("B".into(), -1.0);
        assert!(matches!(apply_configuration(&grid, &cfg), Err(Error::Domain(_))));
    }

    #[test]
    fn attackable_universe_is_sorted_and_skips_open_branches() {
        let mut grid = two_bus();
        grid.generators[0].ict_controlled = true;
        grid.branches.push(Branch {
            id: "AA".into(),
            from_bus: "A".into(),
            to_bus: "B".into(),
            susceptance: 1.0,
            flow_limit_mw: 1.0,
            attackable: true,
            in_service: false,
        });
        assert_eq!(
            grid.attackable_components(),
            vec![
                Component::Branch("AB".into()),
                Component::Generator("G".into())
            ]
        );
    }
}
