//! Critical attack scenario (CAS) identification.
//!
//! The attacker's problem is solved exactly by enumerating every attack set of
//! the requested size and evaluating it with the DC-OPF. Scenarios beyond the
//! worst case are obtained by exclusion cuts: a candidate is admissible only
//! if, for every previously found scenario, at least one of its members stays
//! unattacked.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dcopf::{AttackVector, DcOpfModel};
use crate::error::{Error, Result};
use crate::grid::{Component, GridCase};

/// Lost-load values are compared on a 1e-6 MW grid so that LP round-off
/// cannot reorder scenarios of equal impact.
const MW_PER_QUANTUM_INV: f64 = 1e6;

/// Refuse exhaustive enumeration beyond this many candidate sets.
pub const MAX_ATTACK_CANDIDATES: u64 = 5_000_000;

pub(crate) fn quantize_mw(mw: f64) -> i64 {
    (mw.max(0.0) * MW_PER_QUANTUM_INV).round() as i64
}

/// Rounds a lost-load value onto the comparison grid.
pub fn snap_mw(mw: f64) -> f64 {
    quantize_mw(mw) as f64 / MW_PER_QUANTUM_INV
}

/// Descending by lost load, then ascending by component tuple.
pub fn scenario_order(a_mw: f64, a: &AttackVector, b_mw: f64, b: &AttackVector) -> Ordering {
    quantize_mw(b_mw)
        .cmp(&quantize_mw(a_mw))
        .then_with(|| a.cmp(b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CasRecord {
    pub rank: usize,
    pub components: AttackVector,
    pub lost_load_mw: f64,
    pub configuration_label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CasList {
    pub source_grid: String,
    pub z_max: usize,
    /// True iff every admissible attack set was enumerated.
    pub complete: bool,
    pub records: Vec<CasRecord>,
}

impl CasList {
    pub fn empty(source_grid: impl Into<String>, z_max: usize) -> Self {
        Self {
            source_grid: source_grid.into(),
            z_max,
            complete: false,
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn top_lost_load_mw(&self) -> Option<f64> {
        self.records.first().map(|r| r.lost_load_mw)
    }

    pub fn min_lost_load_mw(&self) -> Option<f64> {
        self.records.last().map(|r| r.lost_load_mw)
    }

    /// Distinct configuration labels in order of first appearance.
    pub fn configuration_labels(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for r in &self.records {
            for label in r.configuration_label.split(LABEL_SEPARATOR) {
                if seen.insert(label.to_string()) {
                    out.push(label.to_string());
                }
            }
        }
        out
    }

    /// Checks ranks, ordering, distinctness and scenario sizes.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (i, r) in self.records.iter().enumerate() {
            if r.rank != i + 1 {
                return Err(Error::InvalidInput(format!(
                    "record {} has rank {}, expected {}",
                    i + 1,
                    r.rank,
                    i + 1
                )));
            }
            if !(r.lost_load_mw.is_finite() && r.lost_load_mw >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "record {} has invalid lost load {}",
                    r.rank, r.lost_load_mw
                )));
            }
            if r.components.len() != self.z_max {
                return Err(Error::InvalidInput(format!(
                    "record {} attacks {} components, expected z_max = {}",
                    r.rank,
                    r.components.len(),
                    self.z_max
                )));
            }
            if !seen.insert(&r.components) {
                return Err(Error::InvalidInput(format!(
                    "record {} repeats an earlier component set",
                    r.rank
                )));
            }
            if i > 0 && quantize_mw(r.lost_load_mw) > quantize_mw(self.records[i - 1].lost_load_mw) {
                return Err(Error::InvalidInput(format!(
                    "lost load increases at rank {}",
                    r.rank
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let list: CasList = serde_json::from_str(text).map_err(Error::from_json)?;
        list.validate()?;
        Ok(list)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("CAS list serialization is infallible")
    }
}

/// When to stop enumerating scenarios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub max_scenarios: Option<usize>,
    /// Stop once the next-best scenario falls strictly below this value.
    pub min_lost_load_mw: f64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            max_scenarios: Some(500),
            min_lost_load_mw: 0.0,
        }
    }
}

impl StopRule {
    pub fn unbounded() -> Self {
        Self {
            max_scenarios: None,
            min_lost_load_mw: 0.0,
        }
    }

    pub fn max_scenarios(n: usize) -> Self {
        Self {
            max_scenarios: Some(n),
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.min_lost_load_mw.is_finite() && self.min_lost_load_mw >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "min_lost_load_mw must be finite and >= 0, got {}",
                self.min_lost_load_mw
            )));
        }
        Ok(())
    }
}

/// One candidate attack set, members given as indices into the universe.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub members: Vec<usize>,
    pub lost_load_mw: f64,
}

/// Every attack set of one size over a component universe, evaluated with
/// the DC-OPF and sorted worst-first.
#[derive(Debug, Clone)]
pub struct AttackSpace {
    universe: Vec<Component>,
    size: usize,
    candidates: Vec<Candidate>,
    lp_solves: usize,
}

impl AttackSpace {
    /// Attack sets of exactly `size` components drawn from `universe`
    /// (which must be sorted and attackable in `grid`).
    pub fn evaluate(grid: &GridCase, universe: Vec<Component>, size: usize) -> Result<Self> {
        let n = universe.len();
        if size > n {
            return Err(Error::InvalidInput(format!(
                "attack size {size} exceeds the {n} attackable components"
            )));
        }
        let count = binomial(n, size);
        if count > MAX_ATTACK_CANDIDATES as f64 {
            return Err(Error::InvalidInput(format!(
                "{count} attack sets of size {size} exceed the exhaustive limit of {MAX_ATTACK_CANDIDATES}"
            )));
        }
        debug_assert!(universe.windows(2).all(|w| w[0] < w[1]));

        let model = DcOpfModel::new(grid);
        let total = quantize_mw(grid.total_demand_mw());
        let solve = |members: &[usize]| -> Result<f64> {
            let comps: Vec<&Component> = members.iter().map(|&i| &universe[i]).collect();
            model.lost_load(&model.outage_of(&comps)).map(snap_mw)
        };

        let mut lp_solves = 0;
        let mut candidates = if size == 0 {
            lp_solves += 1;
            vec![Candidate {
                members: Vec::new(),
                lost_load_mw: solve(&[])?,
            }]
        } else {
            Vec::new()
        };

        // Evaluate level by level; a set is skipped without an LP solve when
        // one of its subsets one level down already sheds all demand.
        let mut full_shed: HashSet<Vec<usize>> = HashSet::new();
        for level in 1..=size {
            let sets = combinations(n, level);
            let evaluated: Vec<(Candidate, bool)> = sets
                .into_par_iter()
                .map(|members| {
                    let pruned = level > 1
                        && !full_shed.is_empty()
                        && (0..members.len()).any(|skip| {
                            let sub: Vec<usize> = members
                                .iter()
                                .enumerate()
                                .filter(|&(j, _)| j != skip)
                                .map(|(_, &m)| m)
                                .collect();
                            full_shed.contains(&sub)
                        });
                    let lost_load_mw = if pruned {
                        snap_mw(grid.total_demand_mw())
                    } else {
                        solve(&members)?
                    };
                    Ok((
                        Candidate {
                            members,
                            lost_load_mw,
                        },
                        !pruned,
                    ))
                })
                .collect::<Result<_>>()?;
            lp_solves += evaluated.iter().filter(|(_, solved)| *solved).count();
            full_shed = evaluated
                .iter()
                .filter(|(c, _)| quantize_mw(c.lost_load_mw) >= total)
                .map(|(c, _)| c.members.clone())
                .collect();
            if level == size {
                candidates = evaluated.into_iter().map(|(c, _)| c).collect();
            }
        }

        // Index tuples order exactly like component tuples because the
        // universe is sorted.
        candidates.sort_by(|a, b| {
            quantize_mw(b.lost_load_mw)
                .cmp(&quantize_mw(a.lost_load_mw))
                .then_with(|| a.members.cmp(&b.members))
        });
        Ok(Self {
            universe,
            size,
            candidates,
            lp_solves,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn universe(&self) -> &[Component] {
        &self.universe
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    /// Number of DC-OPF solves actually performed (pruned sets excluded).
    pub fn lp_solves(&self) -> usize {
        self.lp_solves
    }

    pub fn attack(&self, candidate: &Candidate) -> AttackVector {
        AttackVector::from_components(candidate.members.iter().map(|&i| &self.universe[i]))
    }

    fn index_of(&self) -> HashMap<&Component, usize> {
        self.universe.iter().enumerate().map(|(i, c)| (c, i)).collect()
    }
}

/// Exclusion cuts over a universe. A cut forbids every candidate containing
/// all of its members.
#[derive(Debug, Default)]
struct CutSet {
    same_size: HashSet<Vec<usize>>,
    smaller: Vec<Vec<usize>>,
}

impl CutSet {
    fn add(&mut self, space: &AttackSpace, index: &HashMap<&Component, usize>, cut: &AttackVector) {
        let mut members = Vec::with_capacity(cut.len());
        for c in cut.components() {
            match index.get(&c) {
                Some(&i) => members.push(i),
                // A component outside the universe is never attacked, so the
                // cut is always satisfied.
                None => return,
            }
        }
        members.sort_unstable();
        match members.len().cmp(&space.size) {
            Ordering::Equal => {
                self.same_size.insert(members);
            }
            Ordering::Less => self.smaller.push(members),
            Ordering::Greater => {}
        }
    }

    fn admits(&self, candidate: &[usize]) -> bool {
        !self.same_size.contains(candidate)
            && !self
                .smaller
                .iter()
                .any(|cut| cut.iter().all(|m| candidate.binary_search(m).is_ok()))
    }
}

/// Worst admissible attack of exactly `z_max` components.
///
/// Ties on lost load go to the lexicographically smallest sorted component
/// tuple. Returns [`Error::Exhausted`] when the cuts leave nothing admissible.
pub fn worst_case_attack(
    grid: &GridCase,
    z_max: usize,
    exclusions: &[AttackVector],
) -> Result<(AttackVector, f64)> {
    let space = AttackSpace::evaluate(grid, grid.attackable_components(), z_max)?;
    worst_in_space(&space, exclusions)
}

pub fn worst_in_space(space: &AttackSpace, exclusions: &[AttackVector]) -> Result<(AttackVector, f64)> {
    let index = space.index_of();
    let mut cuts = CutSet::default();
    for e in exclusions {
        cuts.add(space, &index, e);
    }
    space
        .candidates
        .iter()
        .find(|c| cuts.admits(&c.members))
        .map(|c| (space.attack(c), c.lost_load_mw))
        .ok_or(Error::Exhausted { size: space.size })
}

/// Enumerates scenarios worst-first by repeatedly solving the attacker
/// problem and cutting off each solution found.
pub fn enumerate_cas(grid: &GridCase, z_max: usize, stop: StopRule) -> Result<CasList> {
    if z_max == 0 {
        return Err(Error::InvalidInput("z_max must be at least 1".into()));
    }
    stop.validate()?;
    let space = AttackSpace::evaluate(grid, grid.attackable_components(), z_max)?;
    enumerate_in_space(grid, &space, stop)
}

pub fn enumerate_in_space(grid: &GridCase, space: &AttackSpace, stop: StopRule) -> Result<CasList> {
    let index = space.index_of();
    let mut cuts = CutSet::default();
    let mut records: Vec<CasRecord> = Vec::new();
    let mut exhausted = false;
    // Cuts only accumulate, so a candidate once rejected stays rejected and
    // the scan can resume where it stopped.
    let mut cursor = 0;
    loop {
        if stop.max_scenarios.is_some_and(|max| records.len() >= max) {
            break;
        }
        let next = space.candidates[cursor..]
            .iter()
            .position(|c| cuts.admits(&c.members))
            .map(|offset| cursor + offset);
        let Some(pos) = next else {
            exhausted = true;
            break;
        };
        let candidate = &space.candidates[pos];
        if candidate.lost_load_mw < stop.min_lost_load_mw {
            break;
        }
        let attack = space.attack(candidate);
        cuts.add(space, &index, &attack);
        records.push(CasRecord {
            rank: records.len() + 1,
            components: attack,
            lost_load_mw: candidate.lost_load_mw,
            configuration_label: grid.configuration_label.clone(),
        });
        cursor = pos + 1;
    }
    Ok(CasList {
        source_grid: grid.name.clone(),
        z_max: space.size,
        complete: exhausted || records.len() == space.candidates.len(),
        records,
    })
}

const LABEL_SEPARATOR: char = '+';

/// Union of several CAS lists over the same grid and attack budget.
///
/// A component set found in several lists keeps its largest lost load and
/// the `+`-joined, sorted labels of every contributing configuration.
pub fn merge_cas_lists(lists: &[CasList]) -> Result<CasList> {
    let first = lists
        .first()
        .ok_or_else(|| Error::InvalidInput("no CAS lists to merge".into()))?;
    for l in &lists[1..] {
        if l.z_max != first.z_max {
            return Err(Error::Mismatch(format!(
                "z_max {} differs from {}",
                l.z_max, first.z_max
            )));
        }
        if l.source_grid != first.source_grid {
            return Err(Error::Mismatch(format!(
                "source grid `{}` differs from `{}`",
                l.source_grid, first.source_grid
            )));
        }
    }

    let mut merged: BTreeMap<&AttackVector, (f64, BTreeSet<&str>)> = BTreeMap::new();
    for r in lists.iter().flat_map(|l| &l.records) {
        let entry = merged
            .entry(&r.components)
            .or_insert((r.lost_load_mw, BTreeSet::new()));
        entry.0 = entry.0.max(r.lost_load_mw);
        entry.1.extend(r.configuration_label.split(LABEL_SEPARATOR));
    }

    let mut records: Vec<CasRecord> = merged
        .into_iter()
        .map(|(components, (lost_load_mw, labels))| CasRecord {
            rank: 0,
            components: components.clone(),
            lost_load_mw,
            configuration_label: labels.into_iter().collect::<Vec<_>>().join("+"),
        })
        .collect();
    records.sort_by(|a, b| scenario_order(a.lost_load_mw, &a.components, b.lost_load_mw, &b.components));
    for (i, r) in records.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok(CasList {
        source_grid: first.source_grid.clone(),
        z_max: first.z_max,
        complete: lists.iter().all(|l| l.complete),
        records,
    })
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
