//! Vulnerability-based protected-set selection.
//!
//! Given a ranked CAS list, choose at most `x_max` components to protect so
//! that the number of consecutively excluded scenarios, counted from the
//! worst one, is maximal. A scenario is excluded when at least one of its
//! members is protected.
//!
//! The integer program is solved exactly by depth-first branch-and-bound.
//! At every node the first scenario that is neither excluded nor given up is
//! branched on: either one of its (still allowed) members is protected, with
//! earlier siblings' members forbidden so that no set is generated twice, or
//! the scenario is abandoned and all of its members are forbidden. Every
//! irredundant protected set (each member excludes some scenario no other
//! member excludes) is reachable this way, and every optimum has an
//! irredundant representative.
//!
//! Bounds: the consecutive count cannot extend past a scenario that has no
//! allowed member left, nor past the point where a greedy packing of pairwise
//! disjoint open scenarios needs more components than the remaining budget.
//! The total count is bounded by the current hits plus the sum of the largest
//! per-component gains.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cas::{AttackSpace, CasList};
use crate::dcopf::AttackVector;
use crate::error::{Error, Result};
use crate::grid::{Component, GridCase};

/// How ties on the consecutive-exclusion objective are resolved.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum TieBreak {
    /// Consecutive exclusions only; ties go to the fewest components, then
    /// the lexicographically smallest sorted id tuple.
    Consecutive,
    /// Additionally maximize the total number of excluded scenarios before
    /// falling back to size and lexicographic order.
    #[default]
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RemainingWorstCase {
    /// Lost load of the first scenario the plan does not exclude.
    Value(f64),
    /// Every listed scenario is excluded. For an incomplete list the true
    /// remaining worst case is unknown and bounded above by the list's
    /// smallest lost load.
    AllExcluded { upper_bound_mw: Option<f64> },
}

impl RemainingWorstCase {
    pub fn value(&self) -> Option<f64> {
        match self {
            RemainingWorstCase::Value(v) => Some(*v),
            RemainingWorstCase::AllExcluded { .. } => None,
        }
    }

    pub fn is_all_excluded(&self) -> bool {
        matches!(self, RemainingWorstCase::AllExcluded { .. })
    }
}

pub const ALL_EXCLUDED: &str = "all-excluded";

/// Serialized as the lost load in MW or the string `"all-excluded"`.
impl Serialize for RemainingWorstCase {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RemainingWorstCase::Value(v) => s.serialize_f64(*v),
            RemainingWorstCase::AllExcluded { .. } => s.serialize_str(ALL_EXCLUDED),
        }
    }
}

impl<'de> Deserialize<'de> for RemainingWorstCase {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match RemainingRepr::deserialize(d)? {
            RemainingRepr::Value(v) => Ok(RemainingWorstCase::Value(v)),
            RemainingRepr::Marker(m) if m == ALL_EXCLUDED => {
                Ok(RemainingWorstCase::AllExcluded { upper_bound_mw: None })
            }
            RemainingRepr::Marker(m) => Err(serde::de::Error::custom(format!(
                "expected a number or \"{ALL_EXCLUDED}\", got \"{m}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "PlanRepr", try_from = "PlanRepr")]
pub struct ProtectionPlan {
    pub protected_branches: BTreeSet<String>,
    pub protected_generators: BTreeSet<String>,
    pub budget: usize,
    pub consecutive_excluded: usize,
    pub total_excluded: usize,
    pub remaining_worst_case_mw: RemainingWorstCase,
}

impl ProtectionPlan {
    pub fn protected_components(&self) -> Vec<Component> {
        self.protected_branches
            .iter()
            .map(|id| Component::Branch(id.clone()))
            .chain(
                self.protected_generators
                    .iter()
                    .map(|id| Component::Generator(id.clone())),
            )
            .collect()
    }

    pub fn protected_count(&self) -> usize {
        self.protected_branches.len() + self.protected_generators.len()
    }

    pub fn protects(&self, component: &Component) -> bool {
        match component {
            Component::Branch(id) => self.protected_branches.contains(id),
            Component::Generator(id) => self.protected_generators.contains(id),
        }
    }

    /// True if at least one member of `attack` is protected.
    pub fn excludes(&self, attack: &AttackVector) -> bool {
        !self.protected_branches.is_disjoint(&attack.attacked_branches)
            || !self.protected_generators.is_disjoint(&attack.attacked_generators)
    }
}

#[derive(Serialize, Deserialize)]
struct ComponentsRepr {
    branches: BTreeSet<String>,
    generators: BTreeSet<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RemainingRepr {
    Value(f64),
    Marker(String),
}

#[derive(Serialize, Deserialize)]
struct PlanRepr {
    budget: usize,
    protected: ComponentsRepr,
    consecutive_excluded: usize,
    total_excluded: usize,
    remaining_worst_case_mw: RemainingRepr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    remaining_upper_bound_mw: Option<f64>,
}

impl From<ProtectionPlan> for PlanRepr {
    fn from(p: ProtectionPlan) -> Self {
        let (remaining, bound) = match p.remaining_worst_case_mw {
            RemainingWorstCase::Value(v) => (RemainingRepr::Value(v), None),
            RemainingWorstCase::AllExcluded { upper_bound_mw } => {
                (RemainingRepr::Marker(ALL_EXCLUDED.into()), upper_bound_mw)
            }
        };
        PlanRepr {
            budget: p.budget,
            protected: ComponentsRepr {
                branches: p.protected_branches,
                generators: p.protected_generators,
            },
            consecutive_excluded: p.consecutive_excluded,
            total_excluded: p.total_excluded,
            remaining_worst_case_mw: remaining,
            remaining_upper_bound_mw: bound,
        }
    }
}

impl TryFrom<PlanRepr> for ProtectionPlan {
    type Error = String;

    fn try_from(r: PlanRepr) -> std::result::Result<Self, String> {
        let remaining = match r.remaining_worst_case_mw {
            RemainingRepr::Value(v) => RemainingWorstCase::Value(v),
            RemainingRepr::Marker(m) if m == ALL_EXCLUDED => RemainingWorstCase::AllExcluded {
                upper_bound_mw: r.remaining_upper_bound_mw,
            },
            RemainingRepr::Marker(m) => {
                return Err(format!("expected a number or \"{ALL_EXCLUDED}\", got \"{m}\""))
            }
        };
        Ok(ProtectionPlan {
            protected_branches: r.protected.branches,
            protected_generators: r.protected.generators,
            budget: r.budget,
            consecutive_excluded: r.consecutive_excluded,
            total_excluded: r.total_excluded,
            remaining_worst_case_mw: remaining,
        })
    }
}

/// Objective values of a protected set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Score {
    pub consecutive: usize,
    pub total: usize,
}

impl Score {
    fn key(self, mode: TieBreak) -> (usize, usize) {
        match mode {
            TieBreak::Consecutive => (self.consecutive, 0),
            TieBreak::Extended => (self.consecutive, self.total),
        }
    }
}

/// A CAS list flattened to component indices.
#[derive(Debug, Clone)]
pub struct ProtectionInstance {
    universe: Vec<Component>,
    records: Vec<Vec<usize>>,
    incidence: Vec<Vec<usize>>,
}

impl ProtectionInstance {
    pub fn new(cas: &CasList) -> Self {
        let universe: Vec<Component> = cas
            .records
            .iter()
            .flat_map(|r| r.components.components())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index: HashMap<&Component, usize> =
            universe.iter().enumerate().map(|(i, c)| (c, i)).collect();
        let records: Vec<Vec<usize>> = cas
            .records
            .iter()
            .map(|r| {
                let mut m: Vec<usize> = r.components.components().iter().map(|c| index[c]).collect();
                m.sort_unstable();
                m
            })
            .collect();
        let mut incidence = vec![Vec::new(); universe.len()];
        for (w, members) in records.iter().enumerate() {
            for &m in members {
                incidence[m].push(w);
            }
        }
        Self {
            universe,
            records,
            incidence,
        }
    }

    /// Components appearing in at least one scenario, sorted.
    pub fn universe(&self) -> &[Component] {
        &self.universe
    }

    pub fn records(&self) -> &[Vec<usize>] {
        &self.records
    }

    pub fn index_of(&self, component: &Component) -> Option<usize> {
        self.universe.binary_search(component).ok()
    }

    /// Scores an arbitrary set of component indices.
    pub fn score(&self, set: &[usize]) -> Score {
        let mut hit = vec![false; self.records.len()];
        for &c in set {
            for &w in &self.incidence[c] {
                hit[w] = true;
            }
        }
        Score {
            consecutive: hit.iter().position(|h| !h).unwrap_or(hit.len()),
            total: hit.iter().filter(|h| **h).count(),
        }
    }

    /// True if removing any single member lowers the score under `mode`.
    pub fn is_irredundant(&self, set: &[usize], mode: TieBreak) -> bool {
        let key = self.score(set).key(mode);
        (0..set.len()).all(|skip| {
            let rest: Vec<usize> = set
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, &c)| c)
                .collect();
            self.score(&rest).key(mode) < key
        })
    }

    fn plan(&self, cas: &CasList, set: &[usize], budget: usize) -> ProtectionPlan {
        let score = self.score(set);
        let mut plan = ProtectionPlan {
            protected_branches: BTreeSet::new(),
            protected_generators: BTreeSet::new(),
            budget,
            consecutive_excluded: score.consecutive,
            total_excluded: score.total,
            remaining_worst_case_mw: remaining_after(cas, score.consecutive),
        };
        for &c in set {
            match &self.universe[c] {
                Component::Branch(id) => plan.protected_branches.insert(id.clone()),
                Component::Generator(id) => plan.protected_generators.insert(id.clone()),
            };
        }
        plan
    }
}

fn remaining_after(cas: &CasList, consecutive: usize) -> RemainingWorstCase {
    match cas.records.get(consecutive) {
        Some(r) => RemainingWorstCase::Value(r.lost_load_mw),
        None => RemainingWorstCase::AllExcluded {
            upper_bound_mw: if cas.complete {
                None
            } else {
                cas.min_lost_load_mw()
            },
        },
    }
}

/// Scores a given protected set against `cas`, as if chosen with `budget`.
pub fn plan_for(cas: &CasList, protected: &[Component], budget: usize) -> ProtectionPlan {
    let inst = ProtectionInstance::new(cas);
    let mut plan = {
        let set: Vec<usize> = protected.iter().filter_map(|c| inst.index_of(c)).collect();
        inst.plan(cas, &set, budget)
    };
    // Components outside every scenario still belong to the plan.
    for c in protected {
        match c {
            Component::Branch(id) => plan.protected_branches.insert(id.clone()),
            Component::Generator(id) => plan.protected_generators.insert(id.clone()),
        };
    }
    plan
}

/// Shortlex order: fewer components first, then sorted index tuples.
fn shortlex(a: &[usize], b: &[usize]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

fn sorted(set: &[usize]) -> Vec<usize> {
    let mut s = set.to_vec();
    s.sort_unstable();
    s
}

enum Goal {
    Best {
        key: (usize, usize),
        set: Vec<usize>,
    },
    /// Every set reaching the best consecutive count seen so far.
    Collect {
        consecutive: usize,
        sets: Vec<Vec<usize>>,
    },
}

struct Search<'a> {
    inst: &'a ProtectionInstance,
    budget: usize,
    mode: TieBreak,
    chosen: Vec<usize>,
    forbidden: Vec<u32>,
    hits: Vec<u32>,
    hit_records: usize,
    abandoned: Vec<bool>,
    goal: Goal,
    nodes: u64,
    // scratch
    gain: Vec<usize>,
    used: Vec<u64>,
    stamp: u64,
}

impl<'a> Search<'a> {
    fn new(inst: &'a ProtectionInstance, budget: usize, mode: TieBreak, collect: bool) -> Self {
        let n = inst.universe.len();
        let goal = if collect {
            Goal::Collect {
                consecutive: 0,
                sets: Vec::new(),
            }
        } else {
            Goal::Best {
                key: (0, 0),
                set: Vec::new(),
            }
        };
        Self {
            inst,
            budget,
            mode,
            chosen: Vec::new(),
            forbidden: vec![0; n],
            hits: vec![0; inst.records.len()],
            hit_records: 0,
            abandoned: vec![false; inst.records.len()],
            goal,
            nodes: 0,
            gain: vec![0; n],
            used: vec![0; n],
            stamp: 0,
        }
    }

    fn consecutive(&self) -> usize {
        self.hits.iter().position(|&h| h == 0).unwrap_or(self.hits.len())
    }

    fn add(&mut self, c: usize) {
        self.chosen.push(c);
        for &w in &self.inst.incidence[c] {
            if self.hits[w] == 0 {
                self.hit_records += 1;
            }
            self.hits[w] += 1;
        }
    }

    fn remove(&mut self, c: usize) {
        let popped = self.chosen.pop();
        debug_assert_eq!(popped, Some(c));
        for &w in &self.inst.incidence[c] {
            self.hits[w] -= 1;
            if self.hits[w] == 0 {
                self.hit_records -= 1;
            }
        }
    }

    fn offer(&mut self, consecutive: usize) {
        let score = Score {
            consecutive,
            total: self.hit_records,
        };
        match &mut self.goal {
            Goal::Best { key, set } => {
                let k = score.key(self.mode);
                let better = match k.cmp(key) {
                    Ordering::Greater => true,
                    Ordering::Less => false,
                    Ordering::Equal => shortlex(&sorted(&self.chosen), set) == Ordering::Less,
                };
                if better {
                    *key = k;
                    *set = sorted(&self.chosen);
                }
            }
            Goal::Collect { consecutive: best, sets } => {
                if consecutive > *best {
                    *best = consecutive;
                    sets.clear();
                }
                if consecutive == *best {
                    sets.push(sorted(&self.chosen));
                }
            }
        }
    }

    /// Upper bounds on (consecutive, total) over all descendants.
    fn bound(&mut self, from: usize) -> (usize, usize) {
        let remaining = self.budget - self.chosen.len();
        let records = &self.inst.records;

        self.stamp += 1;
        let stamp = self.stamp;
        let mut packed = 0;
        let mut consecutive = records.len();
        for (q, members) in records.iter().enumerate().skip(from) {
            if self.hits[q] > 0 {
                continue;
            }
            let mut allowed = members.iter().filter(|&&m| self.forbidden[m] == 0).peekable();
            if self.abandoned[q] || allowed.peek().is_none() {
                consecutive = q;
                break;
            }
            if allowed.clone().all(|&m| self.used[m] != stamp) {
                packed += 1;
                if packed > remaining {
                    consecutive = q;
                    break;
                }
                for &m in allowed {
                    self.used[m] = stamp;
                }
            }
        }

        if self.mode == TieBreak::Consecutive || matches!(self.goal, Goal::Collect { .. }) {
            return (consecutive, 0);
        }

        let mut touched = Vec::new();
        for (q, members) in records.iter().enumerate() {
            if self.hits[q] > 0 || self.abandoned[q] {
                continue;
            }
            for &m in members {
                if self.forbidden[m] == 0 {
                    if self.gain[m] == 0 {
                        touched.push(m);
                    }
                    self.gain[m] += 1;
                }
            }
        }
        let mut gains: Vec<usize> = touched.iter().map(|&m| self.gain[m]).collect();
        for &m in &touched {
            self.gain[m] = 0;
        }
        gains.sort_unstable_by(|a, b| b.cmp(a));
        let extra: usize = gains.iter().take(remaining).sum();
        (consecutive, self.hit_records + extra)
    }

    fn pruned(&self, bound: (usize, usize)) -> bool {
        match &self.goal {
            Goal::Best { key, set } => match bound.cmp(key) {
                Ordering::Less => true,
                // Any new descendant set has more members than the current one.
                Ordering::Equal => self.chosen.len() + 1 > set.len(),
                Ordering::Greater => false,
            },
            Goal::Collect { consecutive, .. } => bound.0 < *consecutive,
        }
    }

    fn visit(&mut self) {
        self.nodes += 1;
        let consecutive = self.consecutive();
        self.offer(consecutive);
        if self.chosen.len() >= self.budget {
            return;
        }
        let Some(open) = (consecutive..self.hits.len())
            .find(|&q| self.hits[q] == 0 && !self.abandoned[q])
        else {
            return;
        };
        let bound = self.bound(consecutive);
        if self.pruned(bound) {
            return;
        }

        let members = &self.inst.records[open];
        let mut forbidden_here = Vec::with_capacity(members.len());
        for &m in members {
            if self.forbidden[m] > 0 {
                continue;
            }
            self.add(m);
            self.visit();
            self.remove(m);
            self.forbidden[m] += 1;
            forbidden_here.push(m);
        }

        // Giving up on a scenario can only pay off through the total count.
        if self.mode == TieBreak::Extended {
            self.abandoned[open] = true;
            self.visit();
            self.abandoned[open] = false;
        }

        for m in forbidden_here {
            self.forbidden[m] -= 1;
        }
    }
}

/// Optimal protected set under the extended tie-break.
pub fn optimal_protection(cas: &CasList, x_max: usize) -> ProtectionPlan {
    optimal_protection_with(cas, x_max, TieBreak::Extended)
}

pub fn optimal_protection_with(cas: &CasList, x_max: usize, mode: TieBreak) -> ProtectionPlan {
    let inst = ProtectionInstance::new(cas);
    let mut search = Search::new(&inst, x_max, mode, false);
    search.visit();
    let Goal::Best { set, .. } = search.goal else {
        unreachable!()
    };
    inst.plan(cas, &set, x_max)
}

/// All irredundant plans reaching the optimal consecutive count, best first
/// under the tie-break chain of `mode`, truncated to `limit`.
pub fn enumerate_optimal_protections(cas: &CasList, x_max: usize, limit: usize) -> Vec<ProtectionPlan> {
    enumerate_optimal_protections_with(cas, x_max, limit, TieBreak::Extended)
}

pub fn enumerate_optimal_protections_with(
    cas: &CasList,
    x_max: usize,
    limit: usize,
    mode: TieBreak,
) -> Vec<ProtectionPlan> {
    if limit == 0 {
        return Vec::new();
    }
    let inst = ProtectionInstance::new(cas);
    let mut search = Search::new(&inst, x_max, mode, true);
    search.visit();
    let Goal::Collect { sets, .. } = search.goal else {
        unreachable!()
    };
    let mut seen = HashSet::new();
    let mut scored: Vec<(Score, Vec<usize>)> = sets
        .into_iter()
        .filter(|s| seen.insert(s.clone()))
        .filter(|s| inst.is_irredundant(s, mode))
        .map(|s| (inst.score(&s), s))
        .collect();
    scored.sort_by(|(sa, a), (sb, b)| {
        sb.key(mode)
            .cmp(&sa.key(mode))
            .then_with(|| shortlex(a, b))
    });
    scored
        .into_iter()
        .take(limit)
        .map(|(_, s)| inst.plan(cas, &s, x_max))
        .collect()
}

/// One plan per budget, in input order.
pub fn budget_sweep(cas: &CasList, budgets: &[usize]) -> Vec<ProtectionPlan> {
    budget_sweep_with(cas, budgets, TieBreak::Extended)
}

pub fn budget_sweep_with(cas: &CasList, budgets: &[usize], mode: TieBreak) -> Vec<ProtectionPlan> {
    budgets
        .par_iter()
        .map(|&b| optimal_protection_with(cas, b, mode))
        .collect()
}

/// Ground-truth worst case against a protected grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtectionAssessment {
    pub worst_case_mw: f64,
    pub worst_attack: AttackVector,
    /// Size of the evaluated attacks; below `z_max` when exhausted.
    pub attack_size: usize,
    /// Fewer than `z_max` unprotected attackable components remain.
    pub exhausted: bool,
}

/// Worst-case lost load over every attack of `z_max` unprotected components,
/// by exhaustive evaluation. When fewer components remain, the attack on all
/// of them is evaluated and the result is flagged as exhausted.
pub fn evaluate_protection(grid: &GridCase, plan: &ProtectionPlan, z_max: usize) -> Result<ProtectionAssessment> {
    for c in plan.protected_components() {
        if !grid.is_attackable(&c) {
            return Err(Error::InvalidInput(format!(
                "protected {c} is not an attackable component of grid `{}`",
                grid.name
            )));
        }
    }
    let universe: Vec<Component> = grid
        .attackable_components()
        .into_iter()
        .filter(|c| !plan.protects(c))
        .collect();
    let size = z_max.min(universe.len());
    let space = AttackSpace::evaluate(grid, universe, size)?;
    let worst = &space.candidates()[0];
    Ok(ProtectionAssessment {
        worst_case_mw: worst.lost_load_mw,
        worst_attack: space.attack(worst),
        attack_size: size,
        exhausted: size < z_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cas::CasRecord;

    fn cas(sets: &[&[&str]], loads: &[f64]) -> CasList {
        CasList {
            source_grid: "g".into(),
            z_max: sets.first().map_or(0, |s| s.len()),
            complete: false,
            records: sets
                .iter()
                .zip(loads)
                .enumerate()
                .map(|(i, (s, &mw))| CasRecord {
                    rank: i + 1,
                    components: AttackVector::from_components(
                        s.iter()
                            .map(|id| Component::Branch(id.to_string()))
                            .collect::<Vec<_>>()
                            .iter(),
                    ),
                    lost_load_mw: mw,
                    configuration_label: "c".into(),
                })
                .collect(),
        }
    }

    fn ids(plan: &ProtectionPlan) -> Vec<&str> {
        plan.protected_branches.iter().map(String::as_str).collect()
    }

    #[test]
    fn empty_list_protects_nothing() {
        let plan = optimal_protection(&cas(&[], &[]), 3);
        assert_eq!(plan.consecutive_excluded, 0);
        assert_eq!(plan.protected_count(), 0);
        assert!(plan.remaining_worst_case_mw.is_all_excluded());
    }

    #[test]
    fn zero_budget_leaves_worst_case() {
        let l = cas(&[&["a", "b"], &["c", "d"]], &[40.0, 10.0]);
        let plan = optimal_protection(&l, 0);
        assert_eq!(plan.consecutive_excluded, 0);
        assert_eq!(plan.remaining_worst_case_mw, RemainingWorstCase::Value(40.0));
    }

    #[test]
    fn triangle_protects_shared_component() {
        let l = cas(&[&["a", "b"], &["a", "c"], &["b", "c"]], &[5.0, 5.0, 5.0]);
        let plan = optimal_protection(&l, 1);
        assert_eq!(ids(&plan), vec!["a"]);
        assert_eq!(plan.consecutive_excluded, 2);
        assert_eq!(plan.total_excluded, 2);
        assert_eq!(plan.remaining_worst_case_mw, RemainingWorstCase::Value(5.0));

        let all = enumerate_optimal_protections(&l, 1, 10);
        assert_eq!(all.len(), 1);
        assert_eq!(all[0], plan);
    }

    #[test]
    fn symmetric_optima_are_all_listed() {
        let l = cas(&[&["a", "b"]], &[1.0]);
        let all = enumerate_optimal_protections(&l, 1, 10);
        let sets: Vec<_> = all.iter().map(ids).collect();
        assert_eq!(sets, vec![vec!["a"], vec!["b"]]);
        let one = enumerate_optimal_protections(&l, 1, 1);
        assert_eq!(one, vec![optimal_protection(&l, 1)]);
        assert!(enumerate_optimal_protections(&l, 1, 0).is_empty());
    }

    #[test]
    fn extended_mode_prefers_more_exclusions() {
        // Both {a} and {b} exclude rank 1 only; {b} also excludes rank 3.
        let l = cas(&[&["a", "b"], &["c", "d"], &["b", "e"]], &[3.0, 2.0, 1.0]);
        assert_eq!(ids(&optimal_protection_with(&l, 1, TieBreak::Extended)), vec!["b"]);
        let consecutive = optimal_protection_with(&l, 1, TieBreak::Consecutive);
        assert_eq!(ids(&consecutive), vec!["a"]);
        assert_eq!(consecutive.total_excluded, 1);
    }

    #[test]
    fn complete_coverage_reports_all_excluded() {
        let mut l = cas(&[&["a", "b"], &["c", "d"]], &[3.0, 2.0]);
        let plan = optimal_protection(&l, 2);
        assert_eq!(plan.consecutive_excluded, 2);
        assert_eq!(
            plan.remaining_worst_case_mw,
            RemainingWorstCase::AllExcluded {
                upper_bound_mw: Some(2.0)
            }
        );
        l.complete = true;
        assert_eq!(
            optimal_protection(&l, 2).remaining_worst_case_mw,
            RemainingWorstCase::AllExcluded {
                upper_bound_mw: None
            }
        );
    }

    #[test]
    fn budget_sweep_keeps_order_and_is_deterministic() {
        let l = cas(&[&["a", "b"], &["c", "d"], &["e", "f"]], &[3.0, 2.0, 1.0]);
        let plans = budget_sweep(&l, &[2, 0, 2]);
        assert_eq!(plans[0].consecutive_excluded, 2);
        assert_eq!(plans[1].consecutive_excluded, 0);
        assert_eq!(plans[0], plans[2]);
    }

    #[test]
    fn plan_json_round_trip() {
        let l = cas(&[&["a", "b"]], &[7.5]);
        for plan in [optimal_protection(&l, 0), optimal_protection(&l, 1)] {
            let json = serde_json::to_string(&plan).unwrap();
            assert_eq!(serde_json::from_str::<ProtectionPlan>(&json).unwrap(), plan);
        }
        let json = serde_json::to_value(optimal_protection(&l, 1)).unwrap();
        assert_eq!(json["remaining_worst_case_mw"], ALL_EXCLUDED);
        assert_eq!(json["remaining_upper_bound_mw"], 7.5);
        assert_eq!(json["protected"]["branches"][0], "a");
        assert!(serde_json::from_str::<ProtectionPlan>(
            &json.to_string().replace(ALL_EXCLUDED, "bogus")
        )
        .is_err());
    }

    #[test]
    fn plan_for_scores_given_sets() {
        let l = cas(&[&["a", "b"], &["c", "d"], &["b", "e"]], &[3.0, 2.0, 1.0]);
        let plan = plan_for(&l, &[Component::Branch("e".into()), Component::Branch("z".into())], 2);
        assert_eq!(plan.consecutive_excluded, 0);
        assert_eq!(plan.total_excluded, 1);
        assert_eq!(plan.protected_count(), 2);
        assert_eq!(plan.remaining_worst_case_mw, RemainingWorstCase::Value(3.0));
    }

    #[test]
    fn irredundancy() {
        let l = cas(&[&["a", "b"], &["b", "c"]], &[2.0, 1.0]);
        let inst = ProtectionInstance::new(&l);
        let (a, b) = (0, 1);
        assert!(inst.is_irredundant(&[b], TieBreak::Extended));
        assert!(!inst.is_irredundant(&[a, b], TieBreak::Extended));
    }
}
