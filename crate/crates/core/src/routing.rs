//! Route selection over the complete directed link graph.
//!
//! Each regime's end-to-end metric is a monotone function of an additive
//! path cost whose link terms are powers of the link exposure, so the best
//! path is a shortest path under the right link cost.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use thiserror::Error;

use crate::allocation::{allocate_profiles, AllocError, LinkProfile, Path, PathPlan, Regime};
use crate::covertness::{link_gain, warden_sensitivity, CovertBudget};
use crate::scenario::{NodeId, Scenario, ScenarioError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RouteError {
    #[error("no finite-cost route from {from} to {to}")]
    NoRoute { from: NodeId, to: NodeId },
    #[error("exhaustive enumeration is limited to {max} nodes (got {got})")]
    TooLarge { max: usize, got: usize },
    #[error("route {path} is unobserved by any warden; its metric is unconstrained")]
    Unconstrained { path: Path },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Alloc(#[from] AllocError),
}

/// Cost of a link with exposure `omega` under `regime`:
/// `omega`, `sqrt(omega)`, `omega^2` or `omega^(2/3)`.
pub fn link_cost(omega: f64, regime: Regime) -> f64 {
    match regime {
        Regime::MtSk => omega,
        Regime::MdSk => libm::sqrt(omega),
        Regime::MtIk => omega * omega,
        Regime::MdIk => {
            let c = libm::cbrt(omega);
            c * c
        }
    }
}

/// Dense directed cost matrix over every node of a scenario. Index `i`
/// is the `i`-th node in id order; the diagonal is `+inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct CostedGraph {
    ids: Vec<NodeId>,
    costs: Vec<f64>,
}

impl CostedGraph {
    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    /// Number of ordered node pairs carrying a cost.
    pub fn link_count(&self) -> usize {
        let n = self.ids.len();
        n * n.saturating_sub(1)
    }

    pub fn cost(&self, from: usize, to: usize) -> f64 {
        self.costs[from * self.ids.len() + to]
    }

    /// Overrides one link cost. Used to perturb graphs in verification runs.
    pub fn set_cost(&mut self, from: usize, to: usize, cost: f64) {
        let n = self.ids.len();
        self.costs[from * n + to] = cost;
    }

    fn index_of(&self, id: NodeId) -> Result<usize, ScenarioError> {
        self.ids.binary_search(&id).map_err(|_| ScenarioError::UnknownNode(id))
    }
}

/// Costs every ordered node pair of `scenario` for `regime`.
pub fn build_graph(scenario: &Scenario, regime: Regime) -> Result<CostedGraph, RouteError> {
    let ids: Vec<NodeId> = scenario.nodes().iter().map(|n| n.id).collect();
    let n = ids.len();
    let mut costs = vec![f64::INFINITY; n * n];
    for (i, &tx) in ids.iter().enumerate() {
        // Same factors, in the same order, as `link_exposure`.
        let sensitivity = warden_sensitivity(scenario, tx)?;
        for (j, &rx) in ids.iter().enumerate() {
            if i != j {
                costs[i * n + j] = link_cost(link_gain(scenario, tx, rx)? * sensitivity, regime);
            }
        }
    }
    Ok(CostedGraph { ids, costs })
}

/// Tentative route label. Labels order by cost, then hop count, then the
/// node-index sequence, which makes equal-cost choices deterministic.
#[derive(Clone, Debug)]
struct Label {
    cost: f64,
    seq: Vec<usize>,
}

impl Label {
    fn order(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then(self.seq.len().cmp(&other.seq.len()))
            .then_with(|| self.seq.cmp(&other.seq))
    }
}

/// Dijkstra from `source` to `dest` on the dense graph. The source is never
/// re-entered and the destination is never expanded, so only `source` and
/// `dest` act as endpoints.
pub fn shortest_path(graph: &CostedGraph, source: NodeId, dest: NodeId) -> Result<(Path, f64), RouteError> {
    let n = graph.node_count();
    let s = graph.index_of(source)?;
    let t = graph.index_of(dest)?;
    let mut best: Vec<Option<Label>> = vec![None; n];
    let mut done = vec![false; n];
    best[s] = Some(Label { cost: 0.0, seq: vec![s] });
    loop {
        let next = (0..n)
            .filter(|&v| !done[v])
            .filter_map(|v| best[v].as_ref().map(|l| (v, l)))
            .min_by(|a, b| a.1.order(b.1))
            .map(|(v, _)| v);
        let Some(v) = next else { break };
        done[v] = true;
        if v == t {
            break;
        }
        let Some(here) = best[v].clone() else { break };
        for u in 0..n {
            if done[u] || u == s || u == v {
                continue;
            }
            let c = graph.cost(v, u);
            if !c.is_finite() {
                continue;
            }
            let mut seq = here.seq.clone();
            seq.push(u);
            let candidate = Label { cost: here.cost + c, seq };
            let improves = match &best[u] {
                None => true,
                Some(existing) => candidate.order(existing) == Ordering::Less,
            };
            if improves {
                best[u] = Some(candidate);
            }
        }
    }
    match best[t].take() {
        Some(label) if label.cost.is_finite() => {
            let nodes = label.seq.iter().map(|&i| graph.ids[i]).collect();
            Ok((Path::new(nodes)?, label.cost))
        }
        _ => Err(RouteError::NoRoute { from: source, to: dest }),
    }
}

/// A selected route and its optimal allocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RouteResult {
    pub regime: Regime,
    pub path: Path,
    /// Sum of the regime's link costs along `path`.
    pub path_cost: f64,
    pub plan: PathPlan,
}

impl RouteResult {
    /// The regime's headline metric: rate coefficient for throughput
    /// regimes, delay coefficient otherwise.
    pub fn metric(&self) -> f64 {
        if self.regime.is_throughput() {
            self.plan.allocation.rate_coeff
        } else {
            self.plan.allocation.delay_coeff
        }
    }
}

fn plan_route(
    scenario: &Scenario,
    budget: &CovertBudget,
    regime: Regime,
    path: Path,
    path_cost: f64,
) -> Result<RouteResult, RouteError> {
    let profiles =
        path.links().map(|(tx, rx)| LinkProfile::from_scenario(scenario, tx, rx)).collect::<Result<Vec<_>, _>>()?;
    match allocate_profiles(regime, &profiles, budget) {
        Ok(allocation) => {
            let plan = PathPlan { path: path.clone(), allocation };
            Ok(RouteResult { regime, path, path_cost, plan })
        }
        Err(AllocError::Unconstrained) => Err(RouteError::Unconstrained { path }),
        Err(e) => Err(e.into()),
    }
}

/// Picks the optimal route for `regime` and allocates powers along it.
///
/// In a warden-free scenario every cost is zero; the tie-break then selects
/// the direct link and the result is [`RouteError::Unconstrained`] carrying
/// that path.
pub fn route(scenario: &Scenario, budget: &CovertBudget, regime: Regime) -> Result<RouteResult, RouteError> {
    let graph = build_graph(scenario, regime)?;
    let (path, path_cost) = shortest_path(&graph, scenario.source(), scenario.dest())?;
    plan_route(scenario, budget, regime, path, path_cost)
}

/// Largest scenario [`brute_force_route`] accepts.
pub const BRUTE_FORCE_MAX_NODES: usize = 12;

/// Outcome of exhaustive path enumeration.
#[derive(Clone, Debug, PartialEq)]
pub struct BruteForceResult {
    /// Minimum additive-cost path (same tie-break as [`shortest_path`]).
    pub best: RouteResult,
    /// Path with the best closed-form end-to-end metric (largest rate or
    /// smallest delay), first found in enumeration order.
    pub best_metric_path: Path,
    pub best_metric: f64,
    pub paths_enumerated: usize,
}

struct Enumeration<'a> {
    scenario: &'a Scenario,
    budget: &'a CovertBudget,
    regime: Regime,
    profiles: Vec<Option<LinkProfile>>,
    costs: Vec<f64>,
    n: usize,
    dest: usize,
    best: Option<Label>,
    best_metric: Option<(f64, Vec<usize>)>,
    count: usize,
}

impl Enumeration<'_> {
    fn visit(&mut self, seq: &mut Vec<usize>, on_path: &mut [bool], cost: f64, hops: &mut Vec<LinkProfile>) {
        let v = seq[seq.len() - 1];
        if v == self.dest {
            self.count += 1;
            let label = Label { cost, seq: seq.clone() };
            if self.best.as_ref().is_none_or(|b| label.order(b) == Ordering::Less) {
                self.best = Some(label);
            }
            if let Ok(a) = allocate_profiles(self.regime, hops, self.budget) {
                let metric = if self.regime.is_throughput() { a.rate_coeff } else { a.delay_coeff };
                let better = match &self.best_metric {
                    None => true,
                    Some((m, _)) if self.regime.is_throughput() => metric > *m,
                    Some((m, _)) => metric < *m,
                };
                if better {
                    self.best_metric = Some((metric, seq.clone()));
                }
            }
            return;
        }
        for u in 0..self.n {
            if on_path[u] {
                continue;
            }
            let c = self.costs[v * self.n + u];
            let Some(profile) = self.profiles[v * self.n + u] else { continue };
            if !c.is_finite() {
                continue;
            }
            on_path[u] = true;
            seq.push(u);
            hops.push(profile);
            self.visit(seq, on_path, cost + c, hops);
            hops.pop();
            seq.pop();
            on_path[u] = false;
        }
    }
}

/// Enumerates every simple source-to-destination path.
///
/// Link costs are recomputed here from the scenario rather than read from a
/// [`CostedGraph`], so the result is an independent check on
/// [`build_graph`] and [`shortest_path`].
pub fn brute_force_route(
    scenario: &Scenario,
    budget: &CovertBudget,
    regime: Regime,
) -> Result<BruteForceResult, RouteError> {
    let nodes = scenario.nodes();
    let n = nodes.len();
    if n > BRUTE_FORCE_MAX_NODES {
        return Err(RouteError::TooLarge { max: BRUTE_FORCE_MAX_NODES, got: n });
    }
    let mut profiles = vec![None; n * n];
    let mut costs = vec![f64::INFINITY; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let p = LinkProfile::from_scenario(scenario, nodes[i].id, nodes[j].id)?;
                costs[i * n + j] = link_cost(p.omega, regime);
                profiles[i * n + j] = Some(p);
            }
        }
    }
    let s = scenario.index_of(scenario.source())?;
    let t = scenario.index_of(scenario.dest())?;
    let mut walk =
        Enumeration { scenario, budget, regime, profiles, costs, n, dest: t, best: None, best_metric: None, count: 0 };
    let mut on_path = vec![false; n];
    on_path[s] = true;
    walk.visit(&mut vec![s], &mut on_path, 0.0, &mut Vec::new());

    let to_path = |seq: &[usize]| Path::new(seq.iter().map(|&i| nodes[i].id).collect());
    let Some(best) = walk.best.take() else {
        return Err(RouteError::NoRoute { from: scenario.source(), to: scenario.dest() });
    };
    let best_path = to_path(&best.seq)?;
    let best_route = plan_route(walk.scenario, budget, regime, best_path, best.cost)?;
    let (best_metric, metric_seq) =
        walk.best_metric.take().ok_or(RouteError::Unconstrained { path: best_route.path.clone() })?;
    Ok(BruteForceResult {
        best: best_route,
        best_metric_path: to_path(&metric_seq)?,
        best_metric,
        paths_enumerated: walk.count,
    })
}
