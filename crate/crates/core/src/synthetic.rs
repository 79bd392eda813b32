//! Random instances for property tests, oracle cross-checks and benchmarks.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::cas::{CasList, CasRecord};
use crate::dcopf::AttackVector;
use crate::grid::{Branch, Bus, Component, Generator, GridCase};

/// Shape of a random grid.
#[derive(Debug, Clone, Copy)]
pub struct GridShape {
    pub buses: (usize, usize),
    pub generators: (usize, usize),
    /// Branches added on top of a random spanning tree.
    pub extra_branches: (usize, usize),
}

impl Default for GridShape {
    fn default() -> Self {
        GridShape {
            buses: (6, 10),
            generators: (2, 4),
            extra_branches: (1, 4),
        }
    }
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

/// A connected grid: random spanning tree plus a few chords. Every branch is
/// attackable; generators are ICT-controlled except the first.
pub fn random_grid<R: Rng>(rng: &mut R, shape: GridShape) -> GridCase {
    let n = rng.gen_range(shape.buses.0..=shape.buses.1);
    let bus_id = |i: usize| format!("n{i}");
    let buses: Vec<Bus> = (0..n)
        .map(|i| Bus {
            id: bus_id(i),
            demand_mw: if rng.gen_bool(0.7) { round1(rng.gen_range(5.0..60.0)) } else { 0.0 },
        })
        .collect();

    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        edges.insert((j, i));
    }
    let extra = rng.gen_range(shape.extra_branches.0..=shape.extra_branches.1);
    for _ in 0..extra * 4 {
        if edges.len() >= n - 1 + extra {
            break;
        }
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    let branches = edges
        .into_iter()
        .enumerate()
        .map(|(k, (a, b))| Branch {
            id: format!("l{k}"),
            from_bus: bus_id(a),
            to_bus: bus_id(b),
            susceptance: round1(rng.gen_range(2.0..30.0)),
            flow_limit_mw: round1(rng.gen_range(20.0..120.0)),
            attackable: true,
            in_service: true,
        })
        .collect();

    let demand: f64 = buses.iter().map(|b| b.demand_mw).sum();
    let g = rng.gen_range(shape.generators.0..=shape.generators.1);
    let mut sites: Vec<usize> = (0..n).collect();
    sites.shuffle(rng);
    let generators = sites[..g]
        .iter()
        .enumerate()
        .map(|(k, &bus)| Generator {
            id: format!("g{k}"),
            bus: bus_id(bus),
            p_max_mw: round1(demand * rng.gen_range(0.4..0.9)),
            ict_controlled: k > 0,
        })
        .collect();

    GridCase {
        name: "random".into(),
        configuration_label: crate::grid::DEFAULT_CONFIGURATION.into(),
        reference_bus: bus_id(sites[0]),
        buses,
        branches,
        generators,
    }
}

/// Shape of a random CAS list.
#[derive(Debug, Clone, Copy)]
pub struct CasShape {
    pub records: usize,
    pub components: usize,
    pub z_max: usize,
    /// Zipf-like exponent on component popularity; 0 is uniform.
    pub skew: f64,
}

/// A valid CAS list of distinct `z_max`-sets over components `c000, c001, ...`
/// (a mix of branches and generators), with non-increasing lost loads. When
/// `records * z_max` allows it, every component appears in some record.
pub fn random_cas_list<R: Rng>(rng: &mut R, shape: CasShape) -> CasList {
    let comps: Vec<Component> = (0..shape.components)
        .map(|i| {
            if i % 5 == 4 {
                Component::Generator(format!("c{i:03}"))
            } else {
                Component::Branch(format!("c{i:03}"))
            }
        })
        .collect();
    let weights: Vec<f64> = (0..shape.components)
        .map(|i| 1.0 / ((i + 1) as f64).powf(shape.skew))
        .collect();
    let total: f64 = weights.iter().sum();
    let pick = |rng: &mut R| {
        let mut t = rng.gen_range(0.0..total);
        for (i, w) in weights.iter().enumerate() {
            if t < *w {
                return i;
            }
            t -= w;
        }
        weights.len() - 1
    };

    let z = shape.z_max.min(shape.components);
    let mut possible = 1.0f64;
    for i in 0..z {
        possible *= (shape.components - i) as f64 / (i + 1) as f64;
    }
    let target = (shape.records as f64).min(possible) as usize;

    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut sets: Vec<Vec<usize>> = Vec::with_capacity(target);
    if z > 0 && target * z >= shape.components {
        let mut order: Vec<usize> = (0..shape.components).collect();
        order.shuffle(rng);
        for chunk in order.chunks(z) {
            let mut s: BTreeSet<usize> = chunk.iter().copied().collect();
            while s.len() < z {
                s.insert(pick(rng));
            }
            let s: Vec<usize> = s.into_iter().collect();
            if seen.insert(s.clone()) {
                sets.push(s);
            }
        }
    }
    while sets.len() < target {
        let mut s: BTreeSet<usize> = BTreeSet::new();
        let mut guard = 0;
        while s.len() < z {
            guard += 1;
            s.insert(if guard > 64 { rng.gen_range(0..shape.components) } else { pick(rng) });
        }
        let s: Vec<usize> = s.into_iter().collect();
        if seen.insert(s.clone()) {
            sets.push(s);
        }
    }

    sets.shuffle(rng);

    let mut loads: Vec<f64> = (0..sets.len()).map(|_| round1(rng.gen_range(1.0..200.0))).collect();
    if rng.gen_bool(0.5) {
        // Coarse values create ties.
        for l in &mut loads {
            *l = (*l / 40.0).round() * 40.0;
        }
    }
    loads.sort_by(|a, b| b.partial_cmp(a).unwrap());

    CasList {
        source_grid: "synthetic".into(),
        z_max: z,
        complete: false,
        records: sets
            .into_iter()
            .zip(loads)
            .enumerate()
            .map(|(i, (s, mw))| CasRecord {
                rank: i + 1,
                components: AttackVector::from_components(&s.iter().map(|&k| comps[k].clone()).collect::<Vec<_>>()),
                lost_load_mw: mw,
                configuration_label: "synthetic".into(),
            })
            .collect(),
    }
}
