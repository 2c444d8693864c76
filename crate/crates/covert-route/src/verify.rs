//! Randomized oracle suites behind `covert-route verify`.
//!
//! Each suite draws `cases` small scenarios from consecutive seeds and
//! checks a fast computation against an independent one:
//!
//! * `routing`: Dijkstra against exhaustive path enumeration.
//! * `allocation`: closed-form allocations against the numeric solver.
//! * `divergence`: exact relative entropy of routed plans against the
//!   Gaussian matrix construction.

use covert_route_core::allocation::{allocate, allocate_numeric_oracle_profiles, LinkProfile, PathPlan};
use covert_route_core::covertness::{kl_gaussian_oracle, GaussianPair};
use covert_route_core::routing::{brute_force_route, build_graph, route, shortest_path, BRUTE_FORCE_MAX_NODES};
use covert_route_core::scenario::distance;
use covert_route_core::{CovertBudget, NodeId, Path, RandomScenario, Regime, Scenario};
use thiserror::Error;

use crate::harness::mix;

pub const ROUTING_TOL: f64 = 1e-12;
pub const ORACLE_TOL: f64 = 1e-6;
pub const CONSTRAINT_TOL: f64 = 1e-12;
pub const DIVERGENCE_TOL: f64 = 1e-10;
/// Blocklength at which plans are certified.
pub const CERT_BLOCKLENGTH: u64 = 10_000;
const DELTA: f64 = 0.05;
const MAX_WARDENS: usize = 5;
const MAX_PATH_RELAYS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Largest total node count, Alice and Bob included.
    pub size_cap: usize,
    pub cases: usize,
    /// Relative factor added to every routing-graph cost before Dijkstra
    /// runs. Exists to prove the suite detects a corrupted router.
    pub perturbation: Option<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { seed: 1, size_cap: 8, cases: 200, perturbation: None }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum VerifyError {
    #[error("size cap must lie in 2..={max} (got {got})")]
    SizeCap { max: usize, got: usize },
    #[error("cases must be >= 1")]
    NoCases,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseFailure {
    pub seed: u64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub failures: Vec<CaseFailure>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs())
}

/// Small scenario for one case: 0..=cap-2 relays, 1..=5 wardens, alpha in
/// {2, 2.5, 3, 3.5, 4}, all derived from `seed`.
pub fn case_scenario(seed: u64, size_cap: usize) -> Scenario {
    let h = mix(seed);
    RandomScenario {
        n_relays: (h % (size_cap as u64 - 1)) as usize,
        n_wardens: 1 + ((h >> 16) % MAX_WARDENS as u64) as usize,
        dimension: 100.0,
        alpha: 2.0 + 0.5 * ((h >> 32) % 5) as f64,
        node_noise: 1.0,
        warden_noise: 1.0,
    }
    .generate(seed)
    .expect("case parameters are valid")
}

fn routing_case(s: &Scenario, budget: &CovertBudget, perturbation: Option<f64>) -> Result<(), String> {
    for regime in Regime::ALL {
        let mut graph = build_graph(s, regime).map_err(|e| e.to_string())?;
        if let Some(eps) = perturbation {
            let n = graph.node_count();
            for i in 0..n {
                for j in (0..n).filter(|&j| j != i) {
                    graph.set_cost(i, j, graph.cost(i, j) * (1.0 + eps));
                }
            }
        }
        let (path, cost) = shortest_path(&graph, s.source(), s.dest()).map_err(|e| e.to_string())?;
        let bf = brute_force_route(s, budget, regime).map_err(|e| e.to_string())?;
        if rel(cost, bf.best.path_cost) > ROUTING_TOL {
            return Err(format!("{regime}: dijkstra cost {cost:e} vs enumeration {:e}", bf.best.path_cost));
        }
        let metric = allocate(&path, s, budget, regime).map_err(|e| e.to_string())?;
        let metric = if regime.is_throughput() { metric.allocation.rate_coeff } else { metric.allocation.delay_coeff };
        let slack = ROUTING_TOL * bf.best_metric.abs();
        let optimal =
            if regime.is_throughput() { metric >= bf.best_metric - slack } else { metric <= bf.best_metric + slack };
        if !optimal {
            return Err(format!("{regime}: path {path} metric {metric:e}, enumeration best {:e}", bf.best_metric));
        }
    }
    Ok(())
}

/// A path through up to five relays in id order, chosen by `seed`.
fn case_path(s: &Scenario, seed: u64) -> Path {
    let relays: Vec<NodeId> = s.nodes().iter().map(|n| n.id).filter(|&id| id != s.source() && id != s.dest()).collect();
    let take = (mix(seed ^ 0xA5A5) % (relays.len().min(MAX_PATH_RELAYS) as u64 + 1)) as usize;
    let mut nodes = vec![s.source()];
    nodes.extend(&relays[..take]);
    nodes.push(s.dest());
    Path::new(nodes).expect("distinct nodes")
}

fn allocation_case(s: &Scenario, seed: u64, budget: &CovertBudget) -> Result<(), String> {
    let path = case_path(s, seed);
    let profiles: Vec<LinkProfile> = path
        .links()
        .map(|(tx, rx)| LinkProfile::from_scenario(s, tx, rx))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    for regime in Regime::ALL {
        let closed = allocate(&path, s, budget, regime).map_err(|e| e.to_string())?.allocation;
        let numeric = allocate_numeric_oracle_profiles(regime, &profiles, budget).map_err(|e| e.to_string())?;
        let (a, b) = if regime.is_throughput() {
            (closed.rate_coeff, numeric.rate_coeff)
        } else {
            (closed.delay_coeff, numeric.delay_coeff)
        };
        if rel(a, b) > ORACLE_TOL {
            return Err(format!("{regime}: path {path} closed form {a:e} vs numeric {b:e}"));
        }
        let (used, cap) = (closed.constraint_value(CERT_BLOCKLENGTH), closed.budget_value(budget, CERT_BLOCKLENGTH));
        if rel(used, cap) > CONSTRAINT_TOL {
            return Err(format!("{regime}: path {path} budget use {used:e} vs {cap:e}"));
        }
    }
    Ok(())
}

/// Relative entropy of `plan` built from the Gaussian construction: one
/// joint pair over every hop for a single key, one pair per hop otherwise.
pub fn matrix_divergence(s: &Scenario, plan: &PathPlan, n: u64) -> Result<f64, String> {
    let root_n = (n as f64).sqrt();
    let noise: Vec<f64> = s.wardens().iter().map(|w| w.noise_var).collect();
    let hop_inputs = |tx: NodeId, p: f64| -> Result<(f64, Vec<f64>), String> {
        let at = s.node(tx).map_err(|e| e.to_string())?.position;
        Ok((p / root_n, s.wardens().iter().map(|w| distance(at, w.position)).collect()))
    };
    let hops = plan
        .path
        .links()
        .zip(&plan.allocation.power_coeffs)
        .map(|((tx, _), &p)| hop_inputs(tx, p))
        .collect::<Result<Vec<_>, _>>()?;
    let oracle = |powers: &[f64], dists: &[Vec<f64>]| {
        GaussianPair::single_key(powers, &noise, dists, s.alpha(), n)
            .and_then(|pair| kl_gaussian_oracle(&pair))
            .map_err(|e| e.to_string())
    };
    if plan.allocation.regime.is_single_key() {
        let (powers, dists): (Vec<f64>, Vec<Vec<f64>>) = hops.into_iter().unzip();
        oracle(&powers, &dists)
    } else {
        hops.into_iter().map(|(p, d)| oracle(&[p], &[d])).sum()
    }
}

fn divergence_case(s: &Scenario, budget: &CovertBudget) -> Result<(), String> {
    for regime in Regime::ALL {
        let r = route(s, budget, regime).map_err(|e| e.to_string())?;
        let cert = r.plan.certify(s, budget, CERT_BLOCKLENGTH).map_err(|e| e.to_string())?;
        let matrix = matrix_divergence(s, &r.plan, CERT_BLOCKLENGTH)?;
        if rel(cert.exact_kl, matrix) > DIVERGENCE_TOL {
            return Err(format!("{regime}: exact {:e} vs matrix {matrix:e}", cert.exact_kl));
        }
        if !cert.passes() {
            return Err(format!("{regime}: exact divergence {:e} exceeds delta {:e}", cert.exact_kl, cert.delta));
        }
    }
    Ok(())
}

type CaseCheck<'a> = dyn Fn(&Scenario, u64) -> Result<(), String> + 'a;

/// Runs the three suites. Case `k` of every suite uses seed `seed + k`.
pub fn run_verification(cfg: &VerifyConfig) -> Result<Vec<SuiteReport>, VerifyError> {
    if !(2..=BRUTE_FORCE_MAX_NODES).contains(&cfg.size_cap) {
        return Err(VerifyError::SizeCap { max: BRUTE_FORCE_MAX_NODES, got: cfg.size_cap });
    }
    if cfg.cases == 0 {
        return Err(VerifyError::NoCases);
    }
    let budget = CovertBudget::new(DELTA).expect("valid delta");
    let mut reports = Vec::new();
    let suites: [(&'static str, &CaseCheck); 3] = [
        ("routing", &|s, _| routing_case(s, &budget, cfg.perturbation)),
        ("allocation", &|s, seed| allocation_case(s, seed, &budget)),
        ("divergence", &|s, _| divergence_case(s, &budget)),
    ];
    for (name, check) in suites {
        let failures = (0..cfg.cases as u64)
            .map(|k| cfg.seed.wrapping_add(k))
            .filter_map(|seed| {
                check(&case_scenario(seed, cfg.size_cap), seed).err().map(|detail| CaseFailure { seed, detail })
            })
            .collect();
        reports.push(SuiteReport { name, cases: cfg.cases, failures });
    }
    Ok(reports)
}
