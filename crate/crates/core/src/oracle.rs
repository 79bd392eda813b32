//! Brute-force reference solvers. Slow and obviously correct; used to
//! certify the CAS enumeration and the protection branch-and-bound.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cas::{snap_mw, CasList};
use crate::dcopf::{solve_dcopf, AttackVector};
use crate::error::{Error, Result};
use crate::grid::{component_set, Component, GridCase};

/// Upper limit on C(n, x_max) * C(n, z_max) for the trilevel oracle.
pub const TRILEVEL_GUARD: f64 = 1e7;

/// Upper limit on candidate protected sets for the IP oracle, unless the
/// component universe has at most [`IP_GUARD_COMPONENTS`] members.
pub const IP_GUARD_CANDIDATES: f64 = 1e6;
pub const IP_GUARD_COMPONENTS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrilevelResult {
    pub x_max: usize,
    pub z_max: usize,
    #[serde(with = "component_set")]
    pub protected: Vec<Component>,
    pub worst_case_lost_load_mw: f64,
    pub worst_attack: AttackVector,
    /// The optimal protection leaves fewer than `z_max` attackable
    /// components, so the attacker strikes all that remain.
    pub attack_budget_exhausted: bool,
}

fn choose(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Every subset of `items` with at most `max_size` elements, smallest first.
fn subsets_up_to<T: Clone>(items: &[T], max_size: usize) -> Vec<Vec<T>> {
    fn rec<T: Clone>(items: &[T], start: usize, size: usize, cur: &mut Vec<T>, out: &mut Vec<Vec<T>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i].clone());
            rec(items, i + 1, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for size in 0..=max_size.min(items.len()) {
        rec(items, 0, size, &mut Vec::with_capacity(size), &mut out);
    }
    out
}

fn subsets_of_size<T: Clone>(items: &[T], size: usize) -> Vec<Vec<T>> {
    subsets_up_to(items, size)
        .into_iter()
        .filter(|s| s.len() == size)
        .collect()
}

/// Exact defender-attacker-defender optimum by full enumeration: the
/// protected set (at most `x_max` components) minimizing the worst lost load
/// over attacks on `z_max` unprotected components. If fewer than `z_max`
/// remain unprotected, the attacker takes all of them.
///
/// Ties go to the lower lost load, then fewer protected components, then
/// the lexicographically smallest set; the reported attack is the
/// lexicographically smallest among the worst.
pub fn brute_force_trilevel(grid: &GridCase, x_max: usize, z_max: usize) -> Result<TrilevelResult> {
    let universe = grid.attackable_components();
    let n = universe.len();
    let required = choose(n, x_max.min(n)) * choose(n, z_max.min(n));
    if required > TRILEVEL_GUARD {
        return Err(Error::GuardExceeded {
            what: "brute-force trilevel",
            required,
            limit: TRILEVEL_GUARD,
        });
    }

    let protections = subsets_up_to(&universe, x_max);

    // Every attack any protection can face.
    let mut needed: BTreeSet<Vec<Component>> = subsets_of_size(&universe, z_max.min(n)).into_iter().collect();
    for p in &protections {
        if n - p.len() < z_max {
            needed.insert(universe.iter().filter(|c| !p.contains(c)).cloned().collect());
        }
    }
    let needed: Vec<Vec<Component>> = needed.into_iter().collect();
    let values: Vec<f64> = needed
        .par_iter()
        .map(|a| {
            let attack = AttackVector::from_components(a);
            solve_dcopf(grid, &attack).map(|d| snap_mw(d.lost_load_mw))
        })
        .collect::<Result<_>>()?;
    let lost_load: HashMap<&Vec<Component>, f64> = needed.iter().zip(values).collect();

    let outcomes: Vec<(f64, &Vec<Component>, Vec<Component>, bool)> = protections
        .par_iter()
        .map(|p| {
            let size = z_max.min(n - p.len());
            let free: Vec<Component> = universe.iter().filter(|c| !p.contains(c)).cloned().collect();
            let mut worst: Option<(f64, Vec<Component>)> = None;
            for a in subsets_of_size(&free, size) {
                let v = lost_load[&a];
                let better = match &worst {
                    None => true,
                    Some((w, wa)) => v > *w || (v == *w && a < *wa),
                };
                if better {
                    worst = Some((v, a));
                }
            }
            let (v, a) = worst.expect("at least the empty attack exists");
            (v, p, a, size < z_max)
        })
        .collect();

    let best = outcomes
        .into_iter()
        .min_by(|x, y| {
            x.0.partial_cmp(&y.0)
                .unwrap_or(Ordering::Equal)
                .then_with(|| x.1.len().cmp(&y.1.len()))
                .then_with(|| x.1.cmp(y.1))
        })
        .expect("the empty protection is always a candidate");

    Ok(TrilevelResult {
        x_max,
        z_max,
        protected: best.1.clone(),
        worst_case_lost_load_mw: best.0,
        worst_attack: AttackVector::from_components(&best.2),
        attack_budget_exhausted: best.3,
    })
}

/// Number of leading scenarios sharing a component with `protected`.
fn consecutive_excluded(cas: &CasList, protected: &[Component]) -> usize {
    cas.records
        .iter()
        .take_while(|r| protected.iter().any(|c| r.components.contains(c)))
        .count()
}

/// Exact optimum of the protected-set IP by scanning every set of at most
/// `x_max` components drawn from the scenarios. Returns the best consecutive
/// exclusion count and every set achieving it, smallest first.
pub fn brute_force_protection_ip(cas: &CasList, x_max: usize) -> Result<(usize, Vec<Vec<Component>>)> {
    let universe: Vec<Component> = cas
        .records
        .iter()
        .flat_map(|r| r.components.components())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = universe.len();
    let candidates: f64 = (0..=x_max.min(n)).map(|k| choose(n, k)).sum();
    if n > IP_GUARD_COMPONENTS && candidates > IP_GUARD_CANDIDATES {
        return Err(Error::GuardExceeded {
            what: "brute-force protection IP",
            required: candidates,
            limit: IP_GUARD_CANDIDATES,
        });
    }

    let mut best = 0;
    let mut plans = Vec::new();
    for set in subsets_up_to(&universe, x_max) {
        let value = consecutive_excluded(cas, &set);
        match value.cmp(&best) {
            Ordering::Greater => {
                best = value;
                plans = vec![set];
            }
            Ordering::Equal => plans.push(set),
            Ordering::Less => {}
        }
    }
    Ok((best, plans))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cas::CasRecord;
    use crate::grid::parse_grid;

    fn toy() -> GridCase {
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

    fn b(id: &str) -> Component {
        Component::Branch(id.into())
    }

    fn triangle() -> CasList {
        let sets = [["a", "b"], ["a", "c"], ["b", "c"]];
        CasList {
            source_grid: "g".into(),
            z_max: 2,
            complete: false,
            records: sets
                .iter()
                .enumerate()
                .map(|(i, s)| CasRecord {
                    rank: i + 1,
                    components: AttackVector::from_components(&[b(s[0]), b(s[1])]),
                    lost_load_mw: 5.0,
                    configuration_label: "c".into(),
                })
                .collect(),
        }
    }

    #[test]
    fn subsets_are_enumerated_smallest_first() {
        let s = subsets_up_to(&[1, 2, 3], 2);
        assert_eq!(
            s,
            vec![
                vec![],
                vec![1],
                vec![2],
                vec![3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
    }

    #[test]
    fn toy_trilevel_protects_the_branch() {
        let r = brute_force_trilevel(&toy(), 1, 1).unwrap();
        assert_eq!(r.protected, vec![b("AB")]);
        assert_eq!(r.worst_case_lost_load_mw, 0.0);
        assert!(r.attack_budget_exhausted);
        assert!(r.worst_attack.is_empty());
    }

    #[test]
    fn toy_trilevel_without_budget() {
        let r = brute_force_trilevel(&toy(), 0, 1).unwrap();
        assert!(r.protected.is_empty());
        assert!((r.worst_case_lost_load_mw - 50.0).abs() < 1e-6);
        assert!(!r.attack_budget_exhausted);
    }

    #[test]
    fn ip_oracle_on_triangle() {
        let (objective, plans) = brute_force_protection_ip(&triangle(), 1).unwrap();
        assert_eq!(objective, 2);
        assert_eq!(plans, vec![vec![b("a")]]);
    }

    #[test]
    fn ip_oracle_full_coverage_and_empty() {
        let (objective, _) = brute_force_protection_ip(&triangle(), 3).unwrap();
        assert_eq!(objective, 3);
        let mut empty = triangle();
        empty.records.clear();
        assert_eq!(brute_force_protection_ip(&empty, 2).unwrap(), (0, vec![vec![]]));
    }

    #[test]
    fn trilevel_guard_refuses_large_inputs() {
        let mut grid = toy();
        for i in 0..40 {
            grid.branches.push(crate::grid::Branch {
                id: format!("p{i}"),
                from_bus: "A".into(),
                to_bus: "B".into(),
                susceptance: 1.0,
                flow_limit_mw: 1.0,
                attackable: true,
                in_service: true,
            });
        }
        assert!(matches!(
            brute_force_trilevel(&grid, 6, 6),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn trilevel_result_json_shape() {
        let r = brute_force_trilevel(&toy(), 1, 1).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["protected"]["branches"][0], "AB");
        assert_eq!(v["attack_budget_exhausted"], true);
        assert_eq!(serde_json::from_value::<TrilevelResult>(v).unwrap(), r);
    }
}
