//! Lower-level defender: minimum load shedding under DC power flow for a
//! fixed attack vector.
//!
//! With the attack fixed, an attacked branch simply drops out of the network
//! and an attacked generator has zero capacity, so each solve is a plain LP:
//!
//! ```text
//! min  sum_i shed_i
//! s.t. sum_{g at i} gen_g + shed_i - sum_{k from i} flow_k + sum_{k to i} flow_k = demand_i
//!      flow_k = B_k (theta_from - theta_to)          for every live branch k
//!      0 <= gen_g <= p_max_g,  0 <= shed_i <= demand_i,  |flow_k| <= limit_k
//! ```
//!
//! One angle per electrical island is pinned to zero (the reference bus for
//! its own island, the lowest-index bus elsewhere); all other angles are free.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Component, GridCase};

/// Maximum residual tolerated on bus balance and branch flow equations (MW).
pub const RESIDUAL_TOLERANCE_MW: f64 = 1e-6;

/// Any angle beyond this magnitude is treated as a solver failure (rad).
pub const ANGLE_LIMIT_RAD: f64 = 1e4;

const BOUND_SLACK: f64 = 1e-7;

/// A set of attacked components: the upper-level decision.
///
/// Serialized as `{"branches": [...], "generators": [...]}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttackVector {
    #[serde(rename = "branches", default)]
    pub attacked_branches: BTreeSet<String>,
    #[serde(rename = "generators", default)]
    pub attacked_generators: BTreeSet<String>,
}

impl AttackVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_components<'a>(components: impl IntoIterator<Item = &'a Component>) -> Self {
        let mut out = Self::default();
        for c in components {
            out.insert(c.clone());
        }
        out
    }

    pub fn insert(&mut self, component: Component) {
        match component {
            Component::Branch(id) => self.attacked_branches.insert(id),
            Component::Generator(id) => self.attacked_generators.insert(id),
        };
    }

    pub fn contains(&self, component: &Component) -> bool {
        match component {
            Component::Branch(id) => self.attacked_branches.contains(id),
            Component::Generator(id) => self.attacked_generators.contains(id),
        }
    }

    pub fn len(&self) -> usize {
        self.attacked_branches.len() + self.attacked_generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Components in canonical order (branches first, then generators).
    pub fn components(&self) -> Vec<Component> {
        self.attacked_branches
            .iter()
            .map(|id| Component::Branch(id.clone()))
            .chain(
                self.attacked_generators
                    .iter()
                    .map(|id| Component::Generator(id.clone())),
            )
            .collect()
    }

    fn keys(&self) -> impl Iterator<Item = (u8, &str)> {
        self.attacked_branches
            .iter()
            .map(|id| (0u8, id.as_str()))
            .chain(self.attacked_generators.iter().map(|id| (1u8, id.as_str())))
    }

    pub fn is_disjoint(&self, other: &AttackVector) -> bool {
        self.attacked_branches.is_disjoint(&other.attacked_branches)
            && self.attacked_generators.is_disjoint(&other.attacked_generators)
    }

    pub fn is_subset(&self, other: &AttackVector) -> bool {
        self.attacked_branches.is_subset(&other.attacked_branches)
            && self.attacked_generators.is_subset(&other.attacked_generators)
    }

    /// Checks that every member exists and is attackable in `grid`.
    pub fn validate_for(&self, grid: &GridCase) -> Result<()> {
        for c in self.components() {
            if !grid.is_attackable(&c) {
                return Err(Error::InvalidInput(format!(
                    "{c} is not an attackable component of grid `{}`",
                    grid.name
                )));
            }
        }
        Ok(())
    }
}

/// Lexicographic order of the sorted component tuples.
impl Ord for AttackVector {
    fn cmp(&self, other: &Self) -> Ordering {
        self.keys().cmp(other.keys())
    }
}

impl PartialOrd for AttackVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchResult {
    pub shed_mw: BTreeMap<String, f64>,
    pub gen_mw: BTreeMap<String, f64>,
    pub flow_mw: BTreeMap<String, f64>,
    pub angle_rad: BTreeMap<String, f64>,
    pub lost_load_mw: f64,
}

pub fn total_lost_load(result: &DispatchResult) -> f64 {
    result.shed_mw.values().sum()
}

/// Solves the load-shedding DC-OPF for `grid` under `attack`.
pub fn solve_dcopf(grid: &GridCase, attack: &AttackVector) -> Result<DispatchResult> {
    attack.validate_for(grid)?;
    let model = DcOpfModel::new(grid);
    let outage = model.outage(attack);
    let dispatch = model.solve(&outage)?;
    Ok(model.to_result(&dispatch))
}

/// Largest violations of the dispatch contract found in `result`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Residuals {
    pub balance_mw: f64,
    pub flow_equation_mw: f64,
    pub bound_mw: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.balance_mw.max(self.flow_equation_mw).max(self.bound_mw)
    }
}

/// Recomputes bus balance, flow equation and bound residuals from scratch.
pub fn check_dispatch(grid: &GridCase, attack: &AttackVector, result: &DispatchResult) -> Residuals {
    let get = |m: &BTreeMap<String, f64>, id: &str| m.get(id).copied().unwrap_or(f64::NAN);
    let mut balance: HashMap<&str, f64> = grid
        .buses
        .iter()
        .map(|b| (b.id.as_str(), get(&result.shed_mw, &b.id) - b.demand_mw))
        .collect();
    let mut res = Residuals::default();
    let mut bound = |violation: f64| res.bound_mw = res.bound_mw.max(violation);

    for b in &grid.buses {
        let shed = get(&result.shed_mw, &b.id);
        bound((-shed).max(shed - b.demand_mw).max(0.0));
    }
    for g in &grid.generators {
        let p = get(&result.gen_mw, &g.id);
        let cap = if attack.attacked_generators.contains(&g.id) {
            0.0
        } else {
            g.p_max_mw
        };
        bound((-p).max(p - cap).max(0.0));
        *balance.get_mut(g.bus.as_str()).unwrap() += p;
    }
    let mut flow_eq: f64 = 0.0;
    for br in &grid.branches {
        let f = get(&result.flow_mw, &br.id);
        *balance.get_mut(br.from_bus.as_str()).unwrap() -= f;
        *balance.get_mut(br.to_bus.as_str()).unwrap() += f;
        bound((f.abs() - br.flow_limit_mw).max(0.0));
        let live = br.in_service && !attack.attacked_branches.contains(&br.id);
        let expected = if live {
            br.susceptance * (get(&result.angle_rad, &br.from_bus) - get(&result.angle_rad, &br.to_bus))
        } else {
            0.0
        };
        flow_eq = flow_eq.max((f - expected).abs());
    }
    res.flow_equation_mw = flow_eq;
    res.balance_mw = balance.values().fold(0.0, |m, v| m.max(v.abs()));
    let lost = total_lost_load(result);
    res.balance_mw = res.balance_mw.max((lost - result.lost_load_mw).abs());
    res
}

/// Components taken out by an attack, as index masks over a model's
/// branches and generators.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Outage {
    pub branches: Vec<bool>,
    pub generators: Vec<bool>,
}

/// Dispatch in model index order.
#[derive(Debug, Clone)]
pub struct Dispatch {
    pub shed: Vec<f64>,
    pub gen: Vec<f64>,
    pub flow: Vec<f64>,
    pub angle: Vec<f64>,
    pub lost_load_mw: f64,
}

/// Index-based view of a grid, built once and reused across many solves.
#[derive(Debug)]
pub struct DcOpfModel<'g> {
    grid: &'g GridCase,
    branch_ends: Vec<(usize, usize)>,
    gen_bus: Vec<usize>,
    reference: usize,
    branch_index: HashMap<&'g str, usize>,
    gen_index: HashMap<&'g str, usize>,
}

impl<'g> DcOpfModel<'g> {
    /// `grid` must already be valid (see [`crate::grid::validate`]).
    pub fn new(grid: &'g GridCase) -> Self {
        let bus_index: HashMap<&str, usize> = grid
            .buses
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id.as_str(), i))
            .collect();
        let branch_ends = grid
            .branches
            .iter()
            .map(|b| (bus_index[b.from_bus.as_str()], bus_index[b.to_bus.as_str()]))
            .collect();
        let gen_bus = grid
            .generators
            .iter()
            .map(|g| bus_index[g.bus.as_str()])
            .collect();
        Self {
            grid,
            branch_ends,
            gen_bus,
            reference: bus_index.get(grid.reference_bus.as_str()).copied().unwrap_or(0),
            branch_index: grid
                .branches
                .iter()
                .enumerate()
                .map(|(i, b)| (b.id.as_str(), i))
                .collect(),
            gen_index: grid
                .generators
                .iter()
                .enumerate()
                .map(|(i, g)| (g.id.as_str(), i))
                .collect(),
        }
    }

    pub fn grid(&self) -> &'g GridCase {
        self.grid
    }

    pub fn outage(&self, attack: &AttackVector) -> Outage {
        let mut out = self.no_outage();
        for id in &attack.attacked_branches {
            out.branches[self.branch_index[id.as_str()]] = true;
        }
        for id in &attack.attacked_generators {
            out.generators[self.gen_index[id.as_str()]] = true;
        }
        out
    }

    pub fn no_outage(&self) -> Outage {
        Outage {
            branches: vec![false; self.grid.branches.len()],
            generators: vec![false; self.grid.generators.len()],
        }
    }

    pub fn outage_of(&self, components: &[&Component]) -> Outage {
        let mut out = self.no_outage();
        for c in components {
            match c {
                Component::Branch(id) => out.branches[self.branch_index[id.as_str()]] = true,
                Component::Generator(id) => out.generators[self.gen_index[id.as_str()]] = true,
            }
        }
        out
    }

    fn island_roots(&self, live: &[bool]) -> Vec<usize> {
        let n = self.grid.buses.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (k, &(s, r)) in self.branch_ends.iter().enumerate() {
            if live[k] {
                let (a, b) = (find(&mut parent, s), find(&mut parent, r));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        (0..n).map(|i| find(&mut parent, i)).collect()
    }

    pub fn solve(&self, outage: &Outage) -> Result<Dispatch> {
        let grid = self.grid;
        let n_bus = grid.buses.len();
        let live: Vec<bool> = grid
            .branches
            .iter()
            .zip(&outage.branches)
            .map(|(b, &out)| b.in_service && !out)
            .collect();

        let total_demand = grid.total_demand_mw();
        if total_demand == 0.0 {
            return Ok(Dispatch {
                shed: vec![0.0; n_bus],
                gen: vec![0.0; grid.generators.len()],
                flow: vec![0.0; grid.branches.len()],
                angle: vec![0.0; n_bus],
                lost_load_mw: 0.0,
            });
        }

        // Pin one angle per island.
        let roots = self.island_roots(&live);
        let mut pinned = vec![false; n_bus];
        let mut island_has_ref = vec![false; n_bus];
        island_has_ref[roots[self.reference]] = true;
        pinned[self.reference] = true;
        for i in 0..n_bus {
            let root = roots[i];
            if !island_has_ref[root] {
                island_has_ref[root] = true;
                pinned[i] = true;
            }
        }

        let mut lp = Problem::new(OptimizationDirection::Minimize);
        let shed_var: Vec<_> = grid
            .buses
            .iter()
            .map(|b| (b.demand_mw > 0.0).then(|| lp.add_var(1.0, (0.0, b.demand_mw))))
            .collect();
        let gen_var: Vec<_> = grid
            .generators
            .iter()
            .zip(&outage.generators)
            .map(|(g, &out)| (!out && g.p_max_mw > 0.0).then(|| lp.add_var(0.0, (0.0, g.p_max_mw))))
            .collect();
        let angle_var: Vec<_> = (0..n_bus)
            .map(|i| (!pinned[i]).then(|| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))))
            .collect();
        let flow_var: Vec<_> = grid
            .branches
            .iter()
            .zip(&live)
            .map(|(b, &on)| on.then(|| lp.add_var(0.0, (-b.flow_limit_mw, b.flow_limit_mw))))
            .collect();

        let mut rows: Vec<Vec<(microlp::Variable, f64)>> = vec![Vec::new(); n_bus];
        for (i, v) in shed_var.iter().enumerate() {
            if let Some(v) = v {
                rows[i].push((*v, 1.0));
            }
        }
        for (g, v) in gen_var.iter().enumerate() {
            if let Some(v) = v {
                rows[self.gen_bus[g]].push((*v, 1.0));
            }
        }
        for (k, v) in flow_var.iter().enumerate() {
            if let Some(v) = v {
                let (s, r) = self.branch_ends[k];
                rows[s].push((*v, -1.0));
                rows[r].push((*v, 1.0));
            }
        }
        for (i, row) in rows.iter().enumerate() {
            if !row.is_empty() {
                lp.add_constraint(row.as_slice(), ComparisonOp::Eq, grid.buses[i].demand_mw);
            }
        }
        for (k, v) in flow_var.iter().enumerate() {
            if let Some(v) = v {
                let (s, r) = self.branch_ends[k];
                let b = grid.branches[k].susceptance;
                let mut row = vec![(*v, 1.0)];
                if let Some(t) = angle_var[s] {
                    row.push((t, -b));
                }
                if let Some(t) = angle_var[r] {
                    row.push((t, b));
                }
                lp.add_constraint(row.as_slice(), ComparisonOp::Eq, 0.0);
            }
        }

        let solution = lp
            .solve()
            .map_err(|e| Error::Numerical(format!("LP solve failed on `{}`: {e}", grid.name)))?
            .into_solution()
            .map_err(|_| Error::Numerical("LP solve interrupted".into()))?;

        let value = |v: &Option<microlp::Variable>| v.map_or(0.0, |v| solution.var_value(v));
        let shed: Vec<f64> = shed_var
            .iter()
            .zip(&grid.buses)
            .map(|(v, b)| clamp(value(v), 0.0, b.demand_mw))
            .collect();
        let gen: Vec<f64> = gen_var
            .iter()
            .zip(&grid.generators)
            .map(|(v, g)| clamp(value(v), 0.0, g.p_max_mw))
            .collect();
        let flow: Vec<f64> = flow_var
            .iter()
            .zip(&grid.branches)
            .map(|(v, b)| clamp(value(v), -b.flow_limit_mw, b.flow_limit_mw))
            .collect();
        let angle: Vec<f64> = angle_var.iter().map(value).collect();

        if let Some(theta) = angle.iter().find(|t| !t.is_finite() || t.abs() > ANGLE_LIMIT_RAD) {
            return Err(Error::Numerical(format!(
                "voltage angle {theta} rad exceeds the {ANGLE_LIMIT_RAD} rad bound"
            )));
        }

        let dispatch = Dispatch {
            lost_load_mw: shed.iter().sum(),
            shed,
            gen,
            flow,
            angle,
        };
        self.verify(&dispatch, outage, &live)?;
        Ok(dispatch)
    }

    /// Lost load only; the full contract is still verified.
    pub fn lost_load(&self, outage: &Outage) -> Result<f64> {
        self.solve(outage).map(|d| d.lost_load_mw)
    }

    fn verify(&self, d: &Dispatch, outage: &Outage, live: &[bool]) -> Result<()> {
        let grid = self.grid;
        let mut balance: Vec<f64> = grid
            .buses
            .iter()
            .zip(&d.shed)
            .map(|(b, s)| s - b.demand_mw)
            .collect();
        for (g, p) in d.gen.iter().enumerate() {
            if outage.generators[g] && *p != 0.0 {
                return Err(Error::Numerical("attacked generator dispatched".into()));
            }
            balance[self.gen_bus[g]] += p;
        }
        for (k, f) in d.flow.iter().enumerate() {
            let (s, r) = self.branch_ends[k];
            balance[s] -= f;
            balance[r] += f;
            if live[k] {
                let expected = grid.branches[k].susceptance * (d.angle[s] - d.angle[r]);
                let residual = (f - expected).abs();
                if residual > RESIDUAL_TOLERANCE_MW {
                    return Err(Error::Numerical(format!(
                        "flow equation residual {residual:e} MW on branch {}",
                        grid.branches[k].id
                    )));
                }
            }
        }
        if let Some((i, r)) = balance
            .iter()
            .enumerate()
            .find(|(_, r)| r.abs() > RESIDUAL_TOLERANCE_MW)
        {
            return Err(Error::Numerical(format!(
                "power balance residual {r:e} MW at bus {}",
                grid.buses[i].id
            )));
        }
        Ok(())
    }

    pub fn to_result(&self, d: &Dispatch) -> DispatchResult {
        let grid = self.grid;
        let zip = |ids: Vec<&String>, vals: &[f64]| -> BTreeMap<String, f64> {
            ids.into_iter().cloned().zip(vals.iter().copied()).collect()
        };
        DispatchResult {
            shed_mw: zip(grid.buses.iter().map(|b| &b.id).collect(), &d.shed),
            gen_mw: zip(grid.generators.iter().map(|g| &g.id).collect(), &d.gen),
            flow_mw: zip(grid.branches.iter().map(|b| &b.id).collect(), &d.flow),
            angle_rad: zip(grid.buses.iter().map(|b| &b.id).collect(), &d.angle),
            lost_load_mw: d.lost_load_mw,
        }
    }
}

fn clamp(x: f64, lo: f64, hi: f64) -> f64 {
    if x < lo && x >= lo - BOUND_SLACK {
        lo
    } else if x > hi && x <= hi + BOUND_SLACK {
        hi
    } else {
        x
    }
}
