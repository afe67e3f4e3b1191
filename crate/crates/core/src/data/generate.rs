//! Procedural game generation with per-type quotas.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameMatrix, OrderGraph, Topology, PAYOFF_MAX};
use crate::rng;
use crate::solvers::{self, DominanceCategory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub seed: u64,
    /// Games per topology type for double, single and non dominance.
    pub quotas: [usize; 3],
    pub payoff_max: i32,
    /// Total number of base games; quotas are trimmed to reach it, double
    /// dominance types first, then single, then non. `None` keeps the
    /// quotas as given.
    pub target_total: Option<usize>,
    pub max_draws: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 0,
            quotas: [3, 8, 22],
            payoff_max: PAYOFF_MAX,
            target_total: Some(1208),
            max_draws: 200_000_000,
        }
    }
}

/// Ordinal census of one topology type over all strict rank assignments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeCensus {
    pub topology: Topology,
    pub category: DominanceCategory,
    /// Strict ordinal games (payoff ranks 1..=4 per player) of this type.
    pub ordinal_games: u32,
    /// How many of those have at least one pure equilibrium.
    pub with_pure_equilibrium: u32,
}

impl TypeCensus {
    pub fn admits_pure_equilibrium(&self) -> bool {
        self.with_pure_equilibrium > 0
    }
}

fn permutations4() -> Vec<[i32; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 1..=4 {
        for b in 1..=4 {
            for c in 1..=4 {
                for d in 1..=4 {
                    let v = [a, b, c, d];
                    if (0..4).all(|i| (i + 1..4).all(|j| v[i] != v[j])) {
                        out.push(v);
                    }
                }
            }
        }
    }
    out
}

/// Dominance category and pure-equilibrium availability of all 144 types,
/// found by enumerating every strict ordinal game.
pub fn enumerate_type_categories() -> Vec<TypeCensus> {
    let mut census: Vec<TypeCensus> = Topology::all()
        .map(|t| TypeCensus {
            topology: t,
            category: category_of(t),
            ordinal_games: 0,
            with_pure_equilibrium: 0,
        })
        .collect();
    let perms = permutations4();
    for row in &perms {
        for col in &perms {
            let g = GameMatrix::unchecked("", *row, *col);
            let Ok(t) = g.classify_topology() else { continue };
            let entry = &mut census[t.index()];
            entry.ordinal_games += 1;
            if !solvers::pure_nash(&g).is_empty() {
                entry.with_pure_equilibrium += 1;
            }
        }
    }
    census
}

fn category_of(t: Topology) -> DominanceCategory {
    match (t.row_graph.is_dominant(), t.col_graph.is_dominant()) {
        (true, true) => DominanceCategory::Double,
        (false, false) => DominanceCategory::Non,
        _ => DominanceCategory::Single,
    }
}

fn category_slot(c: DominanceCategory) -> usize {
    match c {
        DominanceCategory::Double => 0,
        DominanceCategory::Single => 1,
        DominanceCategory::Non => 2,
    }
}

/// Per-type quotas (indexed by topology) after trimming to the target.
pub fn type_quotas(cfg: &GeneratorConfig, census: &[TypeCensus]) -> Result<Vec<usize>> {
    if cfg.quotas.contains(&0) {
        return Err(Error::InvalidInput("quotas must be positive".into()));
    }
    let mut quotas: Vec<usize> = census
        .iter()
        .map(|c| if c.admits_pure_equilibrium() { cfg.quotas[category_slot(c.category)] } else { 0 })
        .collect();
    let total: usize = quotas.iter().sum();
    let Some(target) = cfg.target_total else { return Ok(quotas) };
    if target > total {
        return Err(Error::InvalidInput(format!("target {target} exceeds the quota total {total}")));
    }
    let mut excess = total - target;
    for cat in DominanceCategory::ALL {
        while excess > 0 {
            let mut trimmed = false;
            for (q, c) in quotas.iter_mut().zip(census) {
                if excess == 0 {
                    break;
                }
                if c.category == cat && *q > 1 {
                    *q -= 1;
                    excess -= 1;
                    trimmed = true;
                }
            }
            if !trimmed {
                break;
            }
        }
    }
    if excess > 0 {
        return Err(Error::InvalidInput(format!("target {target} needs fewer than one game per type")));
    }
    Ok(quotas)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedGames {
    /// Accepted games in draw order.
    pub base: Vec<GameMatrix>,
    /// Each base game followed by its transposed twin (id suffixed `t`).
    pub instances: Vec<GameMatrix>,
    /// Accepted games per topology index.
    pub per_type: Vec<usize>,
    pub draws: u64,
}

impl GeneratedGames {
    /// Base-game counts per dominance category.
    pub fn category_counts(&self) -> [usize; 3] {
        let mut out = [0; 3];
        for (i, n) in self.per_type.iter().enumerate() {
            out[category_slot(category_of(Topology::from_index(i)))] += n;
        }
        out
    }
}

/// Draw a candidate: a scale `u ~ U{1..max}` once per game, then each payoff
/// from `U{1..u}`.
fn draw(rng: &mut impl Rng, max: i32) -> ([i32; 4], [i32; 4]) {
    let u = rng.gen_range(1..=max);
    let mut row = [0; 4];
    let mut col = [0; 4];
    for v in row.iter_mut().chain(col.iter_mut()) {
        *v = rng.gen_range(1..=u);
    }
    (row, col)
}

/// Generate tie-free games with at least one pure equilibrium, filling each
/// topology type up to its quota.
pub fn generate_games(cfg: &GeneratorConfig) -> Result<GeneratedGames> {
    if cfg.payoff_max < 4 {
        return Err(Error::InvalidInput("payoff_max must be at least 4 for tie-free games".into()));
    }
    let census = enumerate_type_categories();
    let quotas = type_quotas(cfg, &census)?;
    let mut remaining = quotas.clone();
    let mut missing: usize = remaining.iter().sum();
    let mut per_type = vec![0usize; 144];
    let mut base = Vec::with_capacity(missing);
    let mut rng = rng::stream(cfg.seed, 0);
    let mut draws = 0u64;
    while missing > 0 {
        if draws >= cfg.max_draws {
            let (i, _) = remaining.iter().enumerate().find(|(_, r)| **r > 0).unwrap_or((0, &0));
            let t = Topology::from_index(i);
            return Err(Error::QuotaInfeasible {
                category: format!("{t} ({})", category_of(t).as_str()),
                found: per_type[i],
                wanted: quotas[i],
            });
        }
        draws += 1;
        let (row, col) = draw(&mut rng, cfg.payoff_max);
        let g = GameMatrix::unchecked("", row, col);
        let Ok(t) = g.classify_topology() else { continue };
        let i = t.index();
        if remaining[i] == 0 || solvers::pure_nash(&g).is_empty() {
            continue;
        }
        remaining[i] -= 1;
        missing -= 1;
        per_type[i] += 1;
        base.push(GameMatrix::unchecked(format!("g{:04}", base.len() + 1), row, col));
    }
    let mut instances = Vec::with_capacity(2 * base.len());
    for g in &base {
        instances.push(g.clone());
        let mut twin = g.transpose_perspective();
        twin.id.push('t');
        instances.push(twin);
    }
    Ok(GeneratedGames { base, instances, per_type, draws })
}

/// Number of order graphs in which the owner has a dominant action.
pub fn dominant_graph_count() -> usize {
    OrderGraph::ALL.iter().filter(|g| g.is_dominant()).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn census_covers_all_ordinal_games() {
        let census = enumerate_type_categories();
        assert_eq!(census.iter().map(|c| c.ordinal_games).sum::<u32>(), 576);
        assert!(census.iter().all(|c| c.ordinal_games == 4));
        let count = |cat| census.iter().filter(|c| c.category == cat).count();
        assert_eq!(count(DominanceCategory::Double), 36);
        assert_eq!(count(DominanceCategory::Single), 72);
        assert_eq!(count(DominanceCategory::Non), 36);
        assert_eq!(dominant_graph_count(), 6);
        let with_psne = census.iter().filter(|c| c.admits_pure_equilibrium()).count();
        assert_eq!(with_psne, 144);
    }

    #[test]
    fn census_category_matches_solver() {
        let perms = permutations4();
        for row in &perms {
            for col in &perms {
                let g = GameMatrix::unchecked("", *row, *col);
                let t = g.classify_topology().unwrap();
                assert_eq!(category_of(t), solvers::dominance_category(&g));
            }
        }
    }

    #[test]
    fn quotas_trim_to_target() {
        let census = enumerate_type_categories();
        let q = type_quotas(&GeneratorConfig::default(), &census).unwrap();
        assert_eq!(q.iter().sum::<usize>(), 1208);
        assert!(q.iter().zip(&census).all(|(q, c)| !c.admits_pure_equilibrium() || *q >= 1));
        let untrimmed = type_quotas(&GeneratorConfig { target_total: None, ..Default::default() }, &census).unwrap();
        assert!(untrimmed.iter().sum::<usize>() >= 1208);
        let too_many = GeneratorConfig { target_total: Some(10_000), ..Default::default() };
        assert!(type_quotas(&too_many, &census).is_err());
    }

    #[test]
    fn small_generation_is_deterministic_and_valid() {
        let cfg = GeneratorConfig { seed: 3, quotas: [1, 1, 1], target_total: None, ..Default::default() };
        let a = generate_games(&cfg).unwrap();
        let b = generate_games(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.instances.len(), 2 * a.base.len());
        for g in &a.instances {
            g.validate(50).unwrap();
            g.classify_topology().unwrap();
            assert!(!solvers::pure_nash(g).is_empty());
        }
        assert_eq!(a.instances[1].id, "g0001t");
    }

    #[test]
    fn exhausted_budget_reports_quota() {
        let cfg = GeneratorConfig { max_draws: 10, ..Default::default() };
        assert!(matches!(generate_games(&cfg), Err(Error::QuotaInfeasible { .. })));
    }
}
