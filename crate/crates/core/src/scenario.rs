//! Network geometry and physics.

use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::rng::PlacementRng;

/// Identifier of a system node (Alice, Bob or a relay).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Planar position in meters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Euclidean distance between two points.
pub fn distance(a: Point, b: Point) -> f64 {
    libm::hypot(a.x - b.x, a.y - b.y)
}

/// A friendly node: it may transmit and receive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemNode {
    pub id: NodeId,
    pub position: Point,
    /// Receiver noise variance, linear units.
    pub noise_var: f64,
}

/// An adversarial observer. Wardens never relay traffic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Warden {
    pub position: Point,
    /// Observation noise variance, linear units.
    pub noise_var: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("dimension must be finite and > 0 (got {0})")]
    InvalidDimension(f64),
    #[error("alpha < 2 (got {0})")]
    AlphaTooSmall(f64),
    #[error("alpha must be finite (got {0})")]
    AlphaNotFinite(f64),
    #[error("node {0}: coordinates must be finite")]
    NodeNotFinite(NodeId),
    #[error("node {0}: noise_var must be finite and > 0")]
    NodeNoise(NodeId),
    #[error("warden {0}: coordinates must be finite")]
    WardenNotFinite(usize),
    #[error("warden {0}: noise_var must be finite and > 0")]
    WardenNoise(usize),
    #[error("duplicate node id {0}")]
    DuplicateNodeId(NodeId),
    #[error("nodes {0} and {1} share a position")]
    DuplicatePosition(NodeId, NodeId),
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("source and dest must differ (both {0})")]
    SourceIsDest(NodeId),
    #[error("a link needs two distinct endpoints (got {0} -> {0})")]
    SelfLink(NodeId),
}

/// A validated network: system nodes (including source and destination),
/// wardens and the propagation model.
///
/// Nodes are kept sorted by id; the position of a node in [`Scenario::nodes`]
/// is its graph index.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    dimension: f64,
    alpha: f64,
    nodes: Vec<SystemNode>,
    wardens: Vec<Warden>,
    source: NodeId,
    dest: NodeId,
}

impl Scenario {
    pub fn new(
        dimension: f64,
        alpha: f64,
        mut nodes: Vec<SystemNode>,
        wardens: Vec<Warden>,
        source: NodeId,
        dest: NodeId,
    ) -> Result<Self, ScenarioError> {
        validate_physics(dimension, alpha)?;
        for node in &nodes {
            if !node.position.is_finite() {
                return Err(ScenarioError::NodeNotFinite(node.id));
            }
            if !(node.noise_var.is_finite() && node.noise_var > 0.0) {
                return Err(ScenarioError::NodeNoise(node.id));
            }
        }
        for (k, w) in wardens.iter().enumerate() {
            if !w.position.is_finite() {
                return Err(ScenarioError::WardenNotFinite(k));
            }
            if !(w.noise_var.is_finite() && w.noise_var > 0.0) {
                return Err(ScenarioError::WardenNoise(k));
            }
        }
        nodes.sort_by_key(|n| n.id);
        for pair in nodes.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(ScenarioError::DuplicateNodeId(pair[0].id));
            }
        }
        for (i, a) in nodes.iter().enumerate() {
            for b in &nodes[i + 1..] {
                if a.position == b.position {
                    return Err(ScenarioError::DuplicatePosition(a.id, b.id));
                }
            }
        }
        let scenario = Self { dimension, alpha, nodes, wardens, source, dest };
        scenario.index_of(source)?;
        scenario.index_of(dest)?;
        if source == dest {
            return Err(ScenarioError::SourceIsDest(source));
        }
        Ok(scenario)
    }

    pub fn dimension(&self) -> f64 {
        self.dimension
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn nodes(&self) -> &[SystemNode] {
        &self.nodes
    }

    pub fn wardens(&self) -> &[Warden] {
        &self.wardens
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn dest(&self) -> NodeId {
        self.dest
    }

    /// True when no warden is present; every link cost is then zero.
    pub fn is_warden_free(&self) -> bool {
        self.wardens.is_empty()
    }

    /// Graph index of `id`.
    pub fn index_of(&self, id: NodeId) -> Result<usize, ScenarioError> {
        self.nodes.binary_search_by_key(&id, |n| n.id).map_err(|_| ScenarioError::UnknownNode(id))
    }

    pub fn node(&self, id: NodeId) -> Result<&SystemNode, ScenarioError> {
        self.index_of(id).map(|i| &self.nodes[i])
    }

    /// Path-loss gain of a link: `d^alpha`.
    pub fn path_loss(&self, d: f64) -> f64 {
        libm::pow(d, self.alpha)
    }

    /// Same geometry with a different path-loss exponent.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self, ScenarioError> {
        validate_physics(self.dimension, alpha)?;
        Ok(Self { alpha, ..self.clone() })
    }
}

fn validate_physics(dimension: f64, alpha: f64) -> Result<(), ScenarioError> {
    if !(dimension.is_finite() && dimension > 0.0) {
        return Err(ScenarioError::InvalidDimension(dimension));
    }
    if !alpha.is_finite() {
        return Err(ScenarioError::AlphaNotFinite(alpha));
    }
    if alpha < 2.0 {
        return Err(ScenarioError::AlphaTooSmall(alpha));
    }
    Ok(())
}

/// Id of the source in generated scenarios; it sits at `(0, 0)`.
pub const ALICE: NodeId = NodeId(0);
/// Id of the destination in generated scenarios; it sits at `(d, d)`.
pub const BOB: NodeId = NodeId(1);

/// Parameters for a uniformly random placement on `[0, d]^2`.
///
/// Relays get ids `2, 3, ...` in draw order. Relays and wardens come from
/// separate streams, and each population takes the first `count` draws of
/// its stream, so for a fixed seed the scenario with `k` relays (or
/// wardens) is a prefix of the one with `k + 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomScenario {
    pub n_relays: usize,
    pub n_wardens: usize,
    pub dimension: f64,
    pub alpha: f64,
    pub node_noise: f64,
    pub warden_noise: f64,
}

impl RandomScenario {
    pub fn generate(&self, seed: u64) -> Result<Scenario, ScenarioError> {
        validate_physics(self.dimension, self.alpha)?;
        let d = self.dimension;
        let (mut relay_rng, mut warden_rng) = PlacementRng::streams(seed);
        let mut nodes = Vec::with_capacity(self.n_relays + 2);
        nodes.push(SystemNode { id: ALICE, position: Point::new(0.0, 0.0), noise_var: self.node_noise });
        nodes.push(SystemNode { id: BOB, position: Point::new(d, d), noise_var: self.node_noise });
        for i in 0..self.n_relays {
            let x = relay_rng.unit() * d;
            let y = relay_rng.unit() * d;
            nodes.push(SystemNode { id: NodeId(i + 2), position: Point::new(x, y), noise_var: self.node_noise });
        }
        let wardens = (0..self.n_wardens)
            .map(|_| {
                let x = warden_rng.unit() * d;
                let y = warden_rng.unit() * d;
                Warden { position: Point::new(x, y), noise_var: self.warden_noise }
            })
            .collect();
        Scenario::new(d, self.alpha, nodes, wardens, ALICE, BOB)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn params(n_relays: usize, n_wardens: usize) -> RandomScenario {
        RandomScenario { n_relays, n_wardens, dimension: 100.0, alpha: 3.0, node_noise: 1.0, warden_noise: 1.0 }
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(Point::new(0.0, 0.0), Point::new(3.0, 4.0)), 5.0);
        assert_eq!(distance(Point::new(1.0, 1.0), Point::new(1.0, 1.0)), 0.0);
        assert!((distance(Point::new(0.0, 0.0), Point::new(1.0, 1.0)) - core::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(params(5, 3).generate(7).unwrap(), params(5, 3).generate(7).unwrap());
        assert_ne!(params(5, 3).generate(7).unwrap(), params(5, 3).generate(8).unwrap());
    }

    #[test]
    fn empty_generation_has_only_endpoints() {
        let s = params(0, 0).generate(7).unwrap();
        assert_eq!(s.nodes().len(), 2);
        assert!(s.wardens().is_empty());
        assert!(s.is_warden_free());
        assert_eq!(s.node(ALICE).unwrap().position, Point::new(0.0, 0.0));
        assert_eq!(s.node(BOB).unwrap().position, Point::new(100.0, 100.0));
    }

    #[test]
    fn generated_positions_lie_in_square_over_many_seeds() {
        for seed in 1..=1000 {
            let s = params(10, 10).generate(seed).unwrap();
            let inside = |p: Point| (0.0..=100.0).contains(&p.x) && (0.0..=100.0).contains(&p.y);
            assert!(s.nodes().iter().all(|n| inside(n.position)), "seed {seed}");
            assert!(s.wardens().iter().all(|w| inside(w.position)), "seed {seed}");
        }
    }

    #[test]
    fn populations_are_nested_prefixes() {
        let small = params(4, 3).generate(11).unwrap();
        let large = params(9, 8).generate(11).unwrap();
        assert_eq!(small.nodes(), &large.nodes()[..6]);
        assert_eq!(small.wardens(), &large.wardens()[..3]);
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        let node = |id, x| SystemNode { id: NodeId(id), position: Point::new(x, 0.0), noise_var: 1.0 };
        let ok = Scenario::new(10.0, 2.0, vec![node(0, 0.0), node(1, 1.0)], vec![], NodeId(0), NodeId(1));
        assert!(ok.is_ok());
        assert_eq!(
            Scenario::new(10.0, 1.5, vec![node(0, 0.0), node(1, 1.0)], vec![], NodeId(0), NodeId(1)),
            Err(ScenarioError::AlphaTooSmall(1.5))
        );
        assert_eq!(
            Scenario::new(10.0, 2.0, vec![node(0, 0.0), node(0, 1.0)], vec![], NodeId(0), NodeId(1)),
            Err(ScenarioError::DuplicateNodeId(NodeId(0)))
        );
        assert_eq!(
            Scenario::new(10.0, 2.0, vec![node(0, 0.0), node(1, 0.0)], vec![], NodeId(0), NodeId(1)),
            Err(ScenarioError::DuplicatePosition(NodeId(0), NodeId(1)))
        );
        assert_eq!(
            Scenario::new(10.0, 2.0, vec![node(0, 0.0), node(1, 1.0)], vec![], NodeId(0), NodeId(0)),
            Err(ScenarioError::SourceIsDest(NodeId(0)))
        );
        assert_eq!(
            Scenario::new(10.0, 2.0, vec![node(0, 0.0), node(1, 1.0)], vec![], NodeId(0), NodeId(5)),
            Err(ScenarioError::UnknownNode(NodeId(5)))
        );
        let noisy = SystemNode { noise_var: 0.0, ..node(1, 1.0) };
        assert!(Scenario::new(10.0, 2.0, vec![node(0, 0.0), noisy], vec![], NodeId(0), NodeId(1)).is_err());
        assert_eq!(params(0, 0).generate(1).map(|_| ()), Ok(()));
        let bad = RandomScenario { alpha: 1.0, ..params(1, 1) };
        assert_eq!(bad.generate(1), Err(ScenarioError::AlphaTooSmall(1.0)));
    }

    #[test]
    fn nodes_are_sorted_by_id() {
        let node = |id, x| SystemNode { id: NodeId(id), position: Point::new(x, 0.0), noise_var: 1.0 };
        let s = Scenario::new(10.0, 2.0, vec![node(5, 0.0), node(2, 1.0), node(9, 2.0)], vec![], NodeId(9), NodeId(2))
            .unwrap();
        assert_eq!(s.nodes().iter().map(|n| n.id.0).collect::<Vec<_>>(), vec![2, 5, 9]);
        assert_eq!(s.index_of(NodeId(9)), Ok(2));
    }
}
