//! Per-relay power allocation on a fixed path.
//!
//! With the low-power rate model `C_i = P_i / (2 sigma_i^2 d_i^alpha)` every
//! regime reduces to a program over per-link rate coefficients `c_i`
//! (`C_i = c_i / sqrt(n)`) and the link exposures `omega_i`:
//!
//! | regime | objective            | covertness constraint             |
//! |--------|----------------------|-----------------------------------|
//! | MT-SK  | max min_i c_i        | `sum_i omega_i c_i <= sqrt(delta)` |
//! | MT-IK  | max min_i c_i        | `sum_i (omega_i c_i)^2 <= delta`   |
//! | MD-SK  | min sum_i 1 / c_i    | `sum_i omega_i c_i <= sqrt(delta)` |
//! | MD-IK  | min sum_i 1 / c_i    | `sum_i (omega_i c_i)^2 <= delta`   |
//!
//! The closed forms put every optimum in terms of the additive path cost
//! `S = sum_i cost(omega_i)`:
//! MT-SK `c = sqrt(delta) / S`, MT-IK `c = sqrt(delta) / sqrt(S)`,
//! MD-SK `D = S^2 / sqrt(delta)`, MD-IK `D = S^(3/2) / sqrt(delta)`.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::covertness::{
    bound_ik, bound_sk, exact_kl_ik, exact_kl_sk, link_exposure, link_gain, warden_snrs, CovertBudget,
};
use crate::routing::link_cost;
use crate::scenario::{NodeId, Scenario, ScenarioError};

/// Optimization target and keying scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Regime {
    /// Maximum throughput, one key shared by every hop.
    MtSk,
    /// Minimum end-to-end delay, one shared key.
    MdSk,
    /// Maximum throughput, independent key per hop.
    MtIk,
    /// Minimum end-to-end delay, independent key per hop.
    MdIk,
}

impl Regime {
    pub const ALL: [Regime; 4] = [Regime::MtSk, Regime::MdSk, Regime::MtIk, Regime::MdIk];

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::MtSk => "mt-sk",
            Regime::MdSk => "md-sk",
            Regime::MtIk => "mt-ik",
            Regime::MdIk => "md-ik",
        }
    }

    pub fn is_throughput(self) -> bool {
        matches!(self, Regime::MtSk | Regime::MtIk)
    }

    pub fn is_single_key(self) -> bool {
        matches!(self, Regime::MtSk | Regime::MdSk)
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown regime (expected mt-sk, md-sk, mt-ik or md-ik)")]
pub struct ParseRegimeError;

impl FromStr for Regime {
    type Err = ParseRegimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mt-sk" => Ok(Regime::MtSk),
            "md-sk" => Ok(Regime::MdSk),
            "mt-ik" => Ok(Regime::MtIk),
            "md-ik" => Ok(Regime::MdIk),
            _ => Err(ParseRegimeError),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AllocError {
    #[error("path needs at least one hop")]
    EmptyPath,
    #[error("path visits node {0} twice")]
    RepeatedNode(NodeId),
    #[error("path must run from {expected_source} to {expected_dest}")]
    WrongEndpoints { expected_source: NodeId, expected_dest: NodeId },
    #[error("link {0} is unusable (a warden sits on its transmitter)")]
    InfeasibleLink(usize),
    #[error("link {0} has an invalid exposure or gain")]
    InvalidProfile(usize),
    #[error("no warden observes the path; the metric is unconstrained")]
    Unconstrained,
    #[error("numeric oracle is limited to {max} hops (got {got})")]
    TooManyHops { max: usize, got: usize },
    #[error("numeric oracle did not converge; iterates {trace:?}")]
    NonConvergence { trace: Vec<f64> },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// A simple path, stored as its node sequence.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path(Vec<NodeId>);

impl Path {
    pub fn new(nodes: Vec<NodeId>) -> Result<Self, AllocError> {
        if nodes.len() < 2 {
            return Err(AllocError::EmptyPath);
        }
        for (i, a) in nodes.iter().enumerate() {
            if nodes[i + 1..].contains(a) {
                return Err(AllocError::RepeatedNode(*a));
            }
        }
        Ok(Self(nodes))
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.0
    }

    pub fn hop_count(&self) -> usize {
        self.0.len() - 1
    }

    /// Links as `(tx, rx)` pairs, source first.
    pub fn links(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.0.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn source(&self) -> NodeId {
        self.0[0]
    }

    pub fn dest(&self) -> NodeId {
        self.0[self.0.len() - 1]
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, id) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{id}")?;
        }
        Ok(())
    }
}

/// What allocation needs to know about one link.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkProfile {
    /// Warden exposure of the link.
    pub omega: f64,
    /// `sigma_rx^2 d^alpha`: power needed per unit of rate is `2 * gain`.
    pub gain: f64,
}

impl LinkProfile {
    pub fn from_scenario(scenario: &Scenario, tx: NodeId, rx: NodeId) -> Result<Self, ScenarioError> {
        let omega = link_exposure(scenario, tx, rx)?.omega();
        Ok(Self { omega, gain: link_gain(scenario, tx, rx)? })
    }
}

/// Per-link coefficients of an allocation, normalized in the blocklength:
/// powers and rates are coefficients of `1/sqrt(n)`, delays of `sqrt(n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Allocation {
    pub regime: Regime,
    pub omegas: Vec<f64>,
    /// `p_i` with `P_i = p_i / sqrt(n)`.
    pub power_coeffs: Vec<f64>,
    /// `c_i` with `C_i = c_i / sqrt(n)`.
    pub rate_coeffs: Vec<f64>,
    /// `D_i` with `Delta_i = D_i sqrt(n)`.
    pub delay_coeffs: Vec<f64>,
    /// `t_i` with `T_i = t_i / sqrt(n)`: aggregate warden SNR of each hop.
    pub exposure_coeffs: Vec<f64>,
    /// Sum of the regime's link costs along the path.
    pub path_cost: f64,
    /// End-to-end throughput coefficient (the bottleneck rate).
    pub rate_coeff: f64,
    /// End-to-end delay coefficient.
    pub delay_coeff: f64,
}

impl Allocation {
    pub fn hop_count(&self) -> usize {
        self.omegas.len()
    }

    fn scaled_exposures(&self, n: u64) -> Vec<f64> {
        let root_n = libm::sqrt(n as f64);
        self.exposure_coeffs.iter().map(|t| t / root_n).collect()
    }

    /// Left side of the regime's budget at blocklength `n`: `sum_i T_i`
    /// (single key, compare with `gamma1`) or `sum_i T_i^2` (independent
    /// keys, compare with `gamma2`).
    pub fn constraint_value(&self, n: u64) -> f64 {
        let terms = self.scaled_exposures(n);
        if self.regime.is_single_key() {
            terms.iter().sum()
        } else {
            terms.iter().map(|t| t * t).sum()
        }
    }

    /// The matching budget, `gamma1(n)` or `gamma2(n)`.
    pub fn budget_value(&self, budget: &CovertBudget, n: u64) -> f64 {
        let gamma = if self.regime.is_single_key() { budget.gamma1(n) } else { budget.gamma2(n) };
        gamma.unwrap_or(f64::NAN)
    }

    /// Exact relative entropy the wardens accumulate at blocklength `n`.
    pub fn exact_kl(&self, n: u64) -> f64 {
        let terms = self.scaled_exposures(n);
        if self.regime.is_single_key() {
            exact_kl_sk(&terms, n)
        } else {
            exact_kl_ik(&terms, n)
        }
    }

    /// Quadratic bound used as the design constraint; equals `delta` for
    /// closed-form plans.
    pub fn kl_bound(&self, n: u64) -> f64 {
        let terms = self.scaled_exposures(n);
        if self.regime.is_single_key() {
            bound_sk(&terms, n)
        } else {
            bound_ik(&terms, n)
        }
    }
}

/// Result of checking a plan against the exact relative entropy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Certificate {
    pub blocklength: u64,
    pub exact_kl: f64,
    pub bound: f64,
    pub delta: f64,
}

impl Certificate {
    pub fn passes(&self) -> bool {
        self.exact_kl <= self.delta
    }
}

/// An allocation bound to a concrete path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathPlan {
    pub path: Path,
    pub allocation: Allocation,
}

impl PathPlan {
    /// Recomputes every warden's SNR from the scenario geometry and the
    /// plan's powers at blocklength `n`, and evaluates the exact relative
    /// entropy.
    pub fn certify(&self, scenario: &Scenario, budget: &CovertBudget, n: u64) -> Result<Certificate, AllocError> {
        let root_n = libm::sqrt(n as f64);
        let mut per_link = Vec::with_capacity(self.path.hop_count());
        let mut all = Vec::new();
        for ((tx, _), &p) in self.path.links().zip(&self.allocation.power_coeffs) {
            let snrs = if scenario.is_warden_free() { Vec::new() } else { warden_snrs(scenario, tx, p / root_n)? };
            per_link.push(snrs.iter().sum::<f64>());
            all.extend(snrs);
        }
        let (exact_kl, bound) = if self.allocation.regime.is_single_key() {
            (exact_kl_sk(&all, n), bound_sk(&per_link, n))
        } else {
            (exact_kl_ik(&per_link, n), bound_ik(&per_link, n))
        };
        Ok(Certificate { blocklength: n, exact_kl, bound, delta: budget.delta() })
    }
}

fn check_profiles(profiles: &[LinkProfile]) -> Result<(), AllocError> {
    if profiles.is_empty() {
        return Err(AllocError::EmptyPath);
    }
    for (i, p) in profiles.iter().enumerate() {
        if p.omega.is_nan() || p.omega < 0.0 || !(p.gain.is_finite() && p.gain > 0.0) {
            return Err(AllocError::InvalidProfile(i));
        }
        if p.omega.is_infinite() {
            return Err(AllocError::InfeasibleLink(i));
        }
    }
    Ok(())
}

fn path_cost(profiles: &[LinkProfile], regime: Regime) -> f64 {
    profiles.iter().map(|p| link_cost(p.omega, regime)).sum()
}

/// Every link carries the same rate coefficient `rate`.
fn equal_rate_allocation(regime: Regime, profiles: &[LinkProfile], rate: f64, cost: f64) -> Allocation {
    let hops = profiles.len();
    Allocation {
        regime,
        omegas: profiles.iter().map(|p| p.omega).collect(),
        power_coeffs: profiles.iter().map(|p| 2.0 * p.gain * rate).collect(),
        rate_coeffs: alloc::vec![rate; hops],
        delay_coeffs: alloc::vec![1.0 / rate; hops],
        exposure_coeffs: profiles.iter().map(|p| 2.0 * p.omega * rate).collect(),
        path_cost: cost,
        rate_coeff: rate,
        delay_coeff: hops as f64 / rate,
    }
}

/// Links with zero exposure get zero delay and unbounded power.
fn delay_allocation(regime: Regime, profiles: &[LinkProfile], delays: Vec<f64>, cost: f64, total: f64) -> Allocation {
    let rate_coeffs: Vec<f64> = delays.iter().map(|&d| if d > 0.0 { 1.0 / d } else { f64::INFINITY }).collect();
    let rate_coeff = rate_coeffs.iter().copied().fold(f64::INFINITY, f64::min);
    Allocation {
        regime,
        omegas: profiles.iter().map(|p| p.omega).collect(),
        power_coeffs: profiles.iter().zip(&rate_coeffs).map(|(p, &c)| 2.0 * p.gain * c).collect(),
        exposure_coeffs: profiles
            .iter()
            .zip(&rate_coeffs)
            .map(|(p, &c)| if p.omega > 0.0 { 2.0 * p.omega * c } else { 0.0 })
            .collect(),
        rate_coeffs,
        delay_coeffs: delays,
        path_cost: cost,
        rate_coeff,
        delay_coeff: total,
    }
}

/// Closed-form optimal allocation for `regime` over links described by
/// `profiles` (source first).
pub fn allocate_profiles(
    regime: Regime,
    profiles: &[LinkProfile],
    budget: &CovertBudget,
) -> Result<Allocation, AllocError> {
    check_profiles(profiles)?;
    let cost = path_cost(profiles, regime);
    if cost == 0.0 {
        return Err(AllocError::Unconstrained);
    }
    let root_delta = libm::sqrt(budget.delta());
    Ok(match regime {
        Regime::MtSk => equal_rate_allocation(regime, profiles, root_delta / cost, cost),
        Regime::MtIk => equal_rate_allocation(regime, profiles, root_delta / libm::sqrt(cost), cost),
        Regime::MdSk => {
            // Delta_i proportional to sqrt(omega_i), scaled onto the budget.
            let delays = profiles.iter().map(|p| link_cost(p.omega, regime) * cost / root_delta).collect();
            delay_allocation(regime, profiles, delays, cost, cost * cost / root_delta)
        }
        Regime::MdIk => {
            // Delta_i proportional to omega_i^(2/3).
            let root_cost = libm::sqrt(cost);
            let delays = profiles.iter().map(|p| link_cost(p.omega, regime) * root_cost / root_delta).collect();
            delay_allocation(regime, profiles, delays, cost, cost * root_cost / root_delta)
        }
    })
}

/// Largest path the numeric oracle accepts.
pub const ORACLE_MAX_HOPS: usize = 8;

/// Solves the same programs as [`allocate_profiles`] numerically, without
/// the closed forms.
///
/// Max-min rate: bisection on the common rate target (reaching a target
/// `r` on every link is cheapest with every `c_i = r`, and the budget load
/// is increasing in `r`). Min-delay: Newton iteration on the log of the
/// Lagrange multiplier, with per-link delays taken from stationarity of
/// `sum_i D_i + mu (sum_i a_i D_i^-q - B)`.
pub fn allocate_numeric_oracle_profiles(
    regime: Regime,
    profiles: &[LinkProfile],
    budget: &CovertBudget,
) -> Result<Allocation, AllocError> {
    check_profiles(profiles)?;
    if profiles.len() > ORACLE_MAX_HOPS {
        return Err(AllocError::TooManyHops { max: ORACLE_MAX_HOPS, got: profiles.len() });
    }
    if profiles.iter().all(|p| p.omega == 0.0) {
        return Err(AllocError::Unconstrained);
    }
    let cost = path_cost(profiles, regime);
    // Budget as `sum_i a_i c_i^q <= limit`, with a_i = omega_i^q.
    let (q, limit) = if regime.is_single_key() { (1, libm::sqrt(budget.delta())) } else { (2, budget.delta()) };
    let weights: Vec<f64> = profiles.iter().map(|p| libm::pow(p.omega, q as f64)).collect();

    if regime.is_throughput() {
        let load = |r: f64| weights.iter().map(|a| a * libm::pow(r, q as f64)).sum::<f64>();
        let rate = bisect_common_rate(load, limit)?;
        Ok(equal_rate_allocation(regime, profiles, rate, cost))
    } else {
        let delays = newton_multiplier(&weights, q, limit)?;
        let total = delays.iter().sum();
        Ok(delay_allocation(regime, profiles, delays, cost, total))
    }
}

fn bisect_common_rate(load: impl Fn(f64) -> f64, limit: f64) -> Result<f64, AllocError> {
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut trace = Vec::new();
    while load(hi) <= limit {
        lo = hi;
        hi *= 2.0;
        trace.push(hi);
        if !hi.is_finite() || trace.len() > 2100 {
            return Err(AllocError::NonConvergence { trace });
        }
    }
    for _ in 0..4000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(lo);
        }
        if load(mid) <= limit {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    trace.push(lo);
    Err(AllocError::NonConvergence { trace })
}

/// Stationary delays `D_i = (mu q a_i)^(1/(q+1))`, with `mu` chosen so the
/// budget `sum_i a_i D_i^-q = limit` holds.
fn newton_multiplier(weights: &[f64], q: i32, limit: f64) -> Result<Vec<f64>, AllocError> {
    let qf = q as f64;
    let delays_at = |log_mu: f64| -> Vec<f64> {
        let mu = libm::exp(log_mu);
        weights.iter().map(|&a| if a > 0.0 { libm::pow(mu * qf * a, 1.0 / (qf + 1.0)) } else { 0.0 }).collect()
    };
    let mut log_mu = 0.0;
    let mut trace = Vec::new();
    for _ in 0..100 {
        let delays = delays_at(log_mu);
        // terms a_i D_i^-q; d ln(term_i)/d ln(mu) = -q/(q+1).
        let terms: Vec<f64> =
            weights.iter().zip(&delays).map(|(&a, &d)| if a > 0.0 { a * libm::pow(d, -qf) } else { 0.0 }).collect();
        let load: f64 = terms.iter().sum();
        let residual = libm::log(load) - libm::log(limit);
        trace.push(log_mu);
        if libm::fabs(residual) <= 1e-15 {
            return Ok(delays);
        }
        let slope = terms.iter().map(|t| -qf / (qf + 1.0) * t).sum::<f64>() / load;
        log_mu -= residual / slope;
        if !log_mu.is_finite() {
            break;
        }
    }
    Err(AllocError::NonConvergence { trace })
}

fn profiles_for(path: &Path, scenario: &Scenario) -> Result<Vec<LinkProfile>, AllocError> {
    if path.source() != scenario.source() || path.dest() != scenario.dest() {
        return Err(AllocError::WrongEndpoints { expected_source: scenario.source(), expected_dest: scenario.dest() });
    }
    Ok(path.links().map(|(tx, rx)| LinkProfile::from_scenario(scenario, tx, rx)).collect::<Result<_, _>>()?)
}

/// Closed-form allocation of `regime` on `path` through `scenario`.
pub fn allocate(
    path: &Path,
    scenario: &Scenario,
    budget: &CovertBudget,
    regime: Regime,
) -> Result<PathPlan, AllocError> {
    let profiles = profiles_for(path, scenario)?;
    Ok(PathPlan { path: path.clone(), allocation: allocate_profiles(regime, &profiles, budget)? })
}

/// Max-min throughput with a single key: `c = sqrt(delta) / sum_i omega_i`.
pub fn allocate_mt_sk(path: &Path, scenario: &Scenario, budget: &CovertBudget) -> Result<PathPlan, AllocError> {
    allocate(path, scenario, budget, Regime::MtSk)
}

/// Max-min throughput with independent keys: `c = sqrt(delta) / sqrt(sum_i omega_i^2)`.
pub fn allocate_mt_ik(path: &Path, scenario: &Scenario, budget: &CovertBudget) -> Result<PathPlan, AllocError> {
    allocate(path, scenario, budget, Regime::MtIk)
}

/// Minimum delay with a single key: `D = (sum_i sqrt(omega_i))^2 / sqrt(delta)`.
pub fn allocate_md_sk(path: &Path, scenario: &Scenario, budget: &CovertBudget) -> Result<PathPlan, AllocError> {
    allocate(path, scenario, budget, Regime::MdSk)
}

/// Minimum delay with independent keys: `D = (sum_i omega_i^(2/3))^(3/2) / sqrt(delta)`.
pub fn allocate_md_ik(path: &Path, scenario: &Scenario, budget: &CovertBudget) -> Result<PathPlan, AllocError> {
    allocate(path, scenario, budget, Regime::MdIk)
}

/// Numeric-oracle counterpart of [`allocate`].
pub fn allocate_numeric_oracle(
    path: &Path,
    scenario: &Scenario,
    budget: &CovertBudget,
    regime: Regime,
) -> Result<PathPlan, AllocError> {
    let profiles = profiles_for(path, scenario)?;
    Ok(PathPlan { path: path.clone(), allocation: allocate_numeric_oracle_profiles(regime, &profiles, budget)? })
}
