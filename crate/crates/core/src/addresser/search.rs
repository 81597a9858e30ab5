//! Look-ahead cost model used to place qubits and choose SWAPs.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use super::Rewiring;
use crate::chipspec::{ChipSpecification, CostMode, CostTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchMode {
    AStar,
    Greedy,
}

impl FromStr for SearchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "a-star" | "astar" => Ok(SearchMode::AStar),
            "greedy" => Ok(SearchMode::Greedy),
            other => Err(format!("unknown search mode {other}")),
        }
    }
}

impl fmt::Display for SearchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchMode::AStar => "a-star",
            SearchMode::Greedy => "greedy",
        })
    }
}

/// Cost of running a 2Q gate between any two physical qubits, moving one
/// endpoint next to the other along the cheapest SWAP path.
#[derive(Clone, Debug)]
pub struct CostModel {
    dist: HashMap<(usize, usize), f64>,
    qubits: Vec<usize>,
    min_link: f64,
    pub min_swap: f64,
}

impl CostModel {
    pub fn new(chip: &ChipSpecification, table: &CostTable, mode: CostMode) -> CostModel {
        let qubits: Vec<usize> = chip.qubit_ids().collect();
        let unit = |a: usize, b: usize| chip.link_unit_cost(a, b, mode).unwrap_or(f64::INFINITY);
        let mut dist = HashMap::new();
        for &a in &qubits {
            for &b in &qubits {
                if a == b {
                    continue;
                }
                let d = if chip.adjacent(a, b) {
                    unit(a, b)
                } else {
                    let toward = |from: usize, to: usize| {
                        chip.neighbors(to)
                            .into_iter()
                            .map(|n| table.cost(from, n) + unit(n, to))
                            .fold(f64::INFINITY, f64::min)
                    };
                    toward(a, b).min(toward(b, a))
                };
                dist.insert((a, b), d);
            }
        }
        let links = chip.links.keys();
        let min_link = links.clone().map(|&(a, b)| unit(a, b)).fold(f64::INFINITY, f64::min);
        let min_swap = chip
            .links
            .keys()
            .filter_map(|&(a, b)| chip.swap_cost(a, b, mode))
            .fold(f64::INFINITY, f64::min);
        CostModel {
            dist,
            qubits,
            min_link: if min_link.is_finite() { min_link } else { 0.0 },
            min_swap: if min_swap.is_finite() { min_swap } else { 0.0 },
        }
    }

    pub fn between(&self, a: usize, b: usize) -> f64 {
        self.dist.get(&(a, b)).copied().unwrap_or(f64::INFINITY)
    }

    /// Sorted distances from `p` to the physical qubits `rew` leaves free.
    pub fn free_distances(&self, rew: &Rewiring, p: usize) -> Vec<f64> {
        let mut d: Vec<f64> = self
            .qubits
            .iter()
            .filter(|&&q| q != p && rew.logical(q).is_none())
            .map(|&q| self.between(p, q))
            .collect();
        d.sort_by(f64::total_cmp);
        d
    }

    /// Estimated cost of a 2Q gate on logical qubits under `rew`.
    pub fn gate(&self, rew: &Rewiring, a: usize, b: usize) -> f64 {
        match (rew.physical(a), rew.physical(b)) {
            (Some(pa), Some(pb)) => self.between(pa, pb),
            (Some(p), None) | (None, Some(p)) => self
                .qubits
                .iter()
                .filter(|&&q| rew.logical(q).is_none())
                .map(|&q| self.between(p, q))
                .fold(f64::INFINITY, f64::min),
            (None, None) => self.min_link,
        }
    }
}

/// Σ_k d^k · cost(gate_k) over the pending 2Q gates in order. An unplaced
/// partner of a placed qubit is charged the distance to the r-th nearest
/// free qubit, where r counts the distinct unplaced partners seen so far.
pub fn heuristic_cost(model: &CostModel, rew: &Rewiring, pending: &[(usize, usize)], discount: f64) -> f64 {
    let mut partners: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut free_dist: HashMap<usize, Vec<f64>> = HashMap::new();
    let mut weight = 1.0;
    let mut total = 0.0;
    for &(a, b) in pending {
        let cost = match (rew.physical(a), rew.physical(b)) {
            (Some(pa), Some(pb)) => model.between(pa, pb),
            (Some(p), None) | (None, Some(p)) => {
                let u = if rew.physical(a).is_none() { a } else { b };
                let list = partners.entry(p).or_default();
                let rank = match list.iter().position(|&x| x == u) {
                    Some(r) => r,
                    None => {
                        list.push(u);
                        list.len() - 1
                    }
                };
                let d = free_dist.entry(p).or_insert_with(|| model.free_distances(rew, p));
                d.get(rank).or(d.last()).copied().unwrap_or(0.0)
            }
            (None, None) => model.min_link,
        };
        total += weight * cost;
        weight *= discount;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chipspec::build_cost_table;

    fn line(n: usize) -> ChipSpecification {
        let links: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        ChipSpecification::with_defaults(n, &links)
    }

    fn identity(n: usize) -> Rewiring {
        Rewiring::identity(0..n)
    }

    #[test]
    fn empty_pending_costs_nothing() {
        let chip = line(3);
        let m = CostModel::new(&chip, &build_cost_table(&chip, CostMode::Duration), CostMode::Duration);
        assert_eq!(heuristic_cost(&m, &identity(3), &[], 0.5), 0.0);
    }

    #[test]
    fn adjacent_gate_costs_one_link() {
        let chip = line(3);
        let m = CostModel::new(&chip, &build_cost_table(&chip, CostMode::Duration), CostMode::Duration);
        assert_eq!(heuristic_cost(&m, &identity(3), &[(0, 1)], 0.5), 150.0);
    }

    #[test]
    fn second_partner_pays_for_the_next_free_slot() {
        let chip = line(3);
        let m = CostModel::new(&chip, &build_cost_table(&chip, CostMode::Duration), CostMode::Duration);
        let mut end = Rewiring::new();
        end.assign(2, 0);
        let mut mid = Rewiring::new();
        mid.assign(2, 1);
        let pending = [(1, 2), (0, 2)];
        assert_eq!(heuristic_cost(&m, &mid, &pending, 0.5), 150.0 + 0.5 * 150.0);
        assert_eq!(heuristic_cost(&m, &end, &pending, 0.5), 150.0 + 0.5 * 600.0);
    }

    #[test]
    fn detour_costs_one_swap() {
        let chip = line(3);
        let m = CostModel::new(&chip, &build_cost_table(&chip, CostMode::Duration), CostMode::Duration);
        let h = heuristic_cost(&m, &identity(3), &[(0, 1), (0, 2)], 0.5);
        assert_eq!(h, 150.0 + 0.5 * (450.0 + 150.0));
    }
}
