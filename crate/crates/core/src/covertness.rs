//! Covertness budgets and relative-entropy math.
//!
//! A transmission is treated as covert when the relative entropy between the
//! wardens' joint observations with and without transmission is at most
//! `delta`, which guarantees `P_FA + P_MD >= 1 - epsilon` for
//! `delta = 2 epsilon^2`.
//!
//! Throughout, the per-link aggregate `T_i = sum_k P_i / (sigma_Wk^2 d_ik^alpha)`
//! is the signal-to-noise ratio that the whole warden population sees from
//! the transmitter of link `i`.

use alloc::vec::Vec;

use thiserror::Error;

use crate::scenario::{distance, NodeId, Scenario, ScenarioError};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum BudgetError {
    #[error("delta must be finite and > 0 (got {0})")]
    InvalidDelta(f64),
    #[error("epsilon must be finite and > 0 (got {0})")]
    InvalidEpsilon(f64),
    #[error("blocklength must be at least 1")]
    ZeroBlocklength,
}

/// Covertness parameters: relative-entropy budget `delta`, the matching
/// detection slack `epsilon = sqrt(delta / 2)` and an optional blocklength.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovertBudget {
    delta: f64,
    blocklength: Option<u64>,
}

impl CovertBudget {
    pub fn new(delta: f64) -> Result<Self, BudgetError> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(BudgetError::InvalidDelta(delta));
        }
        Ok(Self { delta, blocklength: None })
    }

    pub fn from_epsilon(epsilon: f64) -> Result<Self, BudgetError> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(BudgetError::InvalidEpsilon(epsilon));
        }
        Self::new(2.0 * epsilon * epsilon)
    }

    pub fn with_blocklength(self, n: u64) -> Result<Self, BudgetError> {
        if n == 0 {
            return Err(BudgetError::ZeroBlocklength);
        }
        Ok(Self { blocklength: Some(n), ..self })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn epsilon(&self) -> f64 {
        libm::sqrt(self.delta / 2.0)
    }

    pub fn blocklength(&self) -> Option<u64> {
        self.blocklength
    }

    /// Single-key budget on `sum_i T_i`: `2 sqrt(delta / n)`.
    pub fn gamma1(&self, n: u64) -> Result<f64, BudgetError> {
        if n == 0 {
            return Err(BudgetError::ZeroBlocklength);
        }
        Ok(2.0 * libm::sqrt(self.delta / n as f64))
    }

    /// Independent-key budget on `sum_i T_i^2`: `4 delta / n`.
    pub fn gamma2(&self, n: u64) -> Result<f64, BudgetError> {
        if n == 0 {
            return Err(BudgetError::ZeroBlocklength);
        }
        Ok(4.0 * self.delta / n as f64)
    }
}

/// Warden exposure of a directed link,
/// `omega = sum_k sigma_rx^2 d^alpha / (sigma_Wk^2 d_{tx,k}^alpha)`.
///
/// `+inf` when a warden sits on the transmitter. Every routing cost is a
/// power of this value.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct LinkExposure(pub f64);

impl LinkExposure {
    pub fn omega(self) -> f64 {
        self.0
    }

    pub fn is_usable(self) -> bool {
        self.0.is_finite()
    }
}

/// Aggregate warden sensitivity to transmitter `tx`,
/// `A = sum_k 1 / (sigma_Wk^2 d_{tx,k}^alpha)`, summed in scenario order.
///
/// `+inf` when a warden sits on the transmitter, `0` without wardens.
pub fn warden_sensitivity(scenario: &Scenario, tx: NodeId) -> Result<f64, ScenarioError> {
    let from = scenario.node(tx)?;
    Ok(scenario
        .wardens()
        .iter()
        .fold(0.0, |acc, w| acc + 1.0 / (w.noise_var * scenario.path_loss(distance(from.position, w.position)))))
}

/// Receiver-side cost of a link, `sigma_rx^2 d^alpha`.
pub fn link_gain(scenario: &Scenario, tx: NodeId, rx: NodeId) -> Result<f64, ScenarioError> {
    if tx == rx {
        return Err(ScenarioError::SelfLink(tx));
    }
    let from = scenario.node(tx)?;
    let to = scenario.node(rx)?;
    Ok(to.noise_var * scenario.path_loss(distance(from.position, to.position)))
}

/// Exposure of the link `tx -> rx`, evaluated as
/// `link_gain(tx, rx) * warden_sensitivity(tx)`.
pub fn link_exposure(scenario: &Scenario, tx: NodeId, rx: NodeId) -> Result<LinkExposure, ScenarioError> {
    let gain = link_gain(scenario, tx, rx)?;
    Ok(LinkExposure(gain * warden_sensitivity(scenario, tx)?))
}

/// Per-warden SNRs `P / (sigma_Wk^2 d_{tx,k}^alpha)` for a transmitter
/// emitting `power`.
pub fn warden_snrs(scenario: &Scenario, tx: NodeId, power: f64) -> Result<Vec<f64>, ScenarioError> {
    let from = scenario.node(tx)?;
    Ok(scenario
        .wardens()
        .iter()
        .map(|w| power / (w.noise_var * scenario.path_loss(distance(from.position, w.position))))
        .collect())
}

/// Quadratic upper bound on the single-key relative entropy,
/// `(n / 4) (sum_i T_i)^2`.
pub fn bound_sk(terms: &[f64], n: u64) -> f64 {
    let total: f64 = terms.iter().sum();
    n as f64 / 4.0 * total * total
}

/// Quadratic upper bound on the independent-key relative entropy,
/// `(n / 4) sum_i T_i^2`.
pub fn bound_ik(terms: &[f64], n: u64) -> f64 {
    n as f64 / 4.0 * terms.iter().map(|t| t * t).sum::<f64>()
}

/// `x - ln(1 + x)`, accurate when `x` is tiny.
///
/// Below `0.01` the alternating series is summed directly; above it the
/// cancellation costs at most a factor of 200 in relative error.
pub fn x_minus_ln_1p(x: f64) -> f64 {
    const SERIES_LIMIT: f64 = 0.01;
    const TERMS: i32 = 14;
    if x.abs() < SERIES_LIMIT {
        // sum_{k=2}^{TERMS} (-1)^k x^k / k, Horner from the top.
        let mut acc = 0.0;
        for k in (2..=TERMS).rev() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc = acc * x + sign / k as f64;
        }
        acc * x * x
    } else {
        x - libm::log1p(x)
    }
}

/// Exact single-key relative entropy `(n / 2) (T - ln(1 + T))`, where `T`
/// is the grand sum of `terms` (any split over links and wardens).
pub fn exact_kl_sk(terms: &[f64], n: u64) -> f64 {
    let total: f64 = terms.iter().sum();
    n as f64 / 2.0 * x_minus_ln_1p(total)
}

/// Exact independent-key relative entropy: per-hop divergences add, each
/// `(n / 2) (T_i - ln(1 + T_i))`.
pub fn exact_kl_ik(per_link: &[f64], n: u64) -> f64 {
    n as f64 / 2.0 * per_link.iter().map(|&t| x_minus_ln_1p(t)).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GaussianError {
    #[error("u has {u} entries but the covariance diagonal has {diag}")]
    DimensionMismatch { diag: usize, u: usize },
    #[error("replication factor must be at least 1")]
    ZeroReplication,
    #[error("covariance entry {0} is not positive; matrix is singular")]
    SingularCovariance(usize),
}

/// Zero-mean Gaussian pair `N(0, S (x) I_n)` versus `N(0, (S + u u^T) (x) I_n)`
/// with diagonal `S`.
///
/// The Kronecker factor is never materialized; `replication` enters as a
/// scalar multiplier.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianPair {
    sigma_diag: Vec<f64>,
    u: Vec<f64>,
    replication: u64,
}

impl GaussianPair {
    pub fn new(sigma_diag: Vec<f64>, u: Vec<f64>, replication: u64) -> Result<Self, GaussianError> {
        if sigma_diag.len() != u.len() {
            return Err(GaussianError::DimensionMismatch { diag: sigma_diag.len(), u: u.len() });
        }
        if replication == 0 {
            return Err(GaussianError::ZeroReplication);
        }
        Ok(Self { sigma_diag, u, replication })
    }

    /// Joint observation model of `M` wardens watching the same codeword
    /// relayed over `H` hops.
    ///
    /// `distances[i][k]` is the distance from the transmitter of hop `i` to
    /// warden `k`. Entries are grouped by warden: `S` repeats each
    /// `warden_noise[k]` `H` times and `u[k H + i] = sqrt(P_i) / d_ik^(alpha/2)`.
    pub fn single_key(
        powers: &[f64],
        warden_noise: &[f64],
        distances: &[Vec<f64>],
        alpha: f64,
        replication: u64,
    ) -> Result<Self, GaussianError> {
        let hops = powers.len();
        let mut sigma_diag = Vec::with_capacity(hops * warden_noise.len());
        let mut u = Vec::with_capacity(hops * warden_noise.len());
        for (k, &noise) in warden_noise.iter().enumerate() {
            for (i, &p) in powers.iter().enumerate() {
                sigma_diag.push(noise);
                u.push(libm::sqrt(p) / libm::pow(distances[i][k], alpha / 2.0));
            }
        }
        Self::new(sigma_diag, u, replication)
    }

    pub fn dim(&self) -> usize {
        self.sigma_diag.len()
    }
}

/// Relative entropy of the pair,
/// `(n / 2) (tr(S^-1 (S + u u^T)) - dim - ln(|S + u u^T| / |S|))`.
///
/// The determinant ratio uses `|S + u u^T| = |S| (1 + u^T S^-1 u)`, and the
/// trace excess `tr(S^-1 u u^T)` is accumulated directly so that `dim`
/// never has to be subtracted.
pub fn kl_gaussian_oracle(pair: &GaussianPair) -> Result<f64, GaussianError> {
    let mut trace_excess = 0.0;
    let mut quad = 0.0;
    for (j, (&s, &u)) in pair.sigma_diag.iter().zip(&pair.u).enumerate() {
        if !(s.is_finite() && s > 0.0) {
            return Err(GaussianError::SingularCovariance(j));
        }
        // S^-1 u u^T has diagonal u_j^2 / s_j.
        trace_excess += u * u / s;
        quad += u * (u / s);
    }
    Ok(0.5 * pair.replication as f64 * (trace_excess - libm::log1p(quad)))
}
