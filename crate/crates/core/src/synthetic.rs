//! Analytically tractable domains used to check the search bounds exactly.
//!
//! Every domain here is realized lazily: states are computed on demand from
//! the action sequence and nothing beyond what the search touches is ever
//! materialized. Except for [`CollapsedChainDomain`] and
//! [`RandomGraphDomain`], states are the tree nodes themselves, so state cuts
//! never fire on them.

use std::collections::{HashMap, HashSet, VecDeque};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::search::{
    ActionId, Evaluation, Policy, PolicyError, SearchDomain, Trajectory, TrajectoryNode,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NoGoalError {
    #[error("goal set is empty")]
    Empty,
    #[error("no goal has positive probability under the policy")]
    Unreachable,
}

/// Policies whose conditionals are integer weights normalized by their sum.
/// Lets tests recompute node probabilities as exact rationals.
pub trait IntegerWeights<D: SearchDomain + ?Sized> {
    fn weights(&self, domain: &D, state: &D::State) -> Vec<u32>;
}

fn normalize(weights: &[u32]) -> Vec<f64> {
    let total: u64 = weights.iter().map(|&w| w as u64).sum();
    if total == 0 {
        return vec![0.0; weights.len()];
    }
    weights.iter().map(|&w| w as f64 / total as f64).collect()
}

/// Markov policy spreading mass evenly over the legal actions of a state.
/// A state without legal actions is a dead end (all-zero conditionals).
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformPolicy;

/// The uniform policy for `domain`.
pub fn make_uniform_policy<D: SearchDomain + ?Sized>(domain: &D) -> UniformPolicy {
    assert!(domain.action_count() >= 1, "a domain needs at least one action");
    UniformPolicy
}

impl<D: SearchDomain + ?Sized> IntegerWeights<D> for UniformPolicy {
    fn weights(&self, domain: &D, state: &D::State) -> Vec<u32> {
        (0..domain.action_count())
            .map(|a| domain.is_legal(state, ActionId::from(a)) as u32)
            .collect()
    }
}

impl<D: SearchDomain + ?Sized> Policy<D> for UniformPolicy {
    fn is_markov(&self) -> bool {
        true
    }

    fn evaluate(
        &self,
        domain: &D,
        node: &TrajectoryNode<D::State>,
    ) -> Result<Evaluation, PolicyError> {
        Ok(Evaluation::new(normalize(&self.weights(domain, node.state()))))
    }
}

/// Domains that can list a finite set of target paths containing a
/// minimum-cost target node.
pub trait TargetPaths: SearchDomain {
    fn target_paths(&self) -> Vec<Vec<ActionId>>;
}

/// Exact probability of `path` under integer-weight conditionals.
pub fn exact_probability<D, W>(domain: &D, weights: &W, path: &[ActionId]) -> BigRational
where
    D: SearchDomain + ?Sized,
    W: IntegerWeights<D> + ?Sized,
{
    let mut prob = BigRational::one();
    let mut state = domain.initial_state();
    for &action in path {
        let w = weights.weights(domain, &state);
        let total: u64 = w.iter().map(|&x| x as u64).sum();
        let numer = w.get(action.index()).copied().unwrap_or(0);
        if numer == 0 || total == 0 {
            return BigRational::zero();
        }
        prob *= BigRational::new(BigInt::from(numer), BigInt::from(total));
        domain.apply(&mut state, action);
    }
    prob
}

/// `min over target nodes of depth / probability` as an exact rational.
pub fn exact_min_cost<D, W>(domain: &D, weights: &W) -> Result<BigRational, NoGoalError>
where
    D: TargetPaths,
    W: IntegerWeights<D> + ?Sized,
{
    let paths = domain.target_paths();
    if paths.is_empty() {
        return Err(NoGoalError::Empty);
    }
    paths
        .iter()
        .filter_map(|path| {
            let p = exact_probability(domain, weights, path);
            (!p.is_zero()).then(|| BigRational::from_integer(BigInt::from(path.len())) / p)
        })
        .min()
        .ok_or(NoGoalError::Unreachable)
}

/// `ceil` of a non-negative rational, as an integer.
pub fn ceil_to_u64(value: &BigRational) -> u64 {
    let c = value.ceil().to_integer();
    u64::try_from(c).unwrap_or(u64::MAX)
}

/// A full, infinite binary tree whose states are the nodes. Under the
/// uniform policy every node of depth `d` has probability `2^-d`.
#[derive(Clone, Debug, Default)]
pub struct FullBinaryTreeDomain {
    goals: HashSet<Trajectory>,
    goal_depths: HashSet<usize>,
    max_depth: Option<usize>,
}

impl FullBinaryTreeDomain {
    pub fn with_goals<I>(goals: I) -> Self
    where
        I: IntoIterator<Item = Vec<ActionId>>,
    {
        let goals: HashSet<Trajectory> = goals
            .into_iter()
            .map(|p| Trajectory::from_actions(&p))
            .collect();
        let goal_depths = goals.iter().map(Trajectory::len).collect();
        FullBinaryTreeDomain {
            goals,
            goal_depths,
            max_depth: None,
        }
    }

    /// A single target node.
    pub fn needle(path: Vec<ActionId>) -> Self {
        Self::with_goals([path])
    }

    /// All `2^(depth-1)` nodes of depth `depth` whose first action is 0;
    /// their cumulative probability is 1/2.
    pub fn layer(depth: usize) -> Self {
        assert!(depth >= 1);
        let mut level = vec![Trajectory::new().push(ActionId(0))];
        for _ in 1..depth {
            level = level
                .iter()
                .flat_map(|t| [t.push(ActionId(0)), t.push(ActionId(1))])
                .collect();
        }
        let goal_depths = HashSet::from([depth]);
        FullBinaryTreeDomain {
            goals: level.into_iter().collect(),
            goal_depths,
            max_depth: None,
        }
    }

    /// Caps the tree: nodes at `max_depth` have no legal action.
    pub fn with_max_depth(mut self, max_depth: usize) -> Self {
        self.max_depth = Some(max_depth);
        self
    }

    pub fn goal_count(&self) -> usize {
        self.goals.len()
    }
}

impl SearchDomain for FullBinaryTreeDomain {
    type State = Trajectory;
    type Key = Trajectory;

    fn action_count(&self) -> usize {
        2
    }

    fn initial_state(&self) -> Trajectory {
        Trajectory::new()
    }

    fn transition(&self, state: &Trajectory, action: ActionId) -> Trajectory {
        state.push(action)
    }

    fn is_goal(&self, state: &Trajectory) -> bool {
        self.goal_depths.contains(&state.len()) && self.goals.contains(state)
    }

    fn state_key(&self, state: &Trajectory) -> Trajectory {
        state.clone()
    }

    fn is_legal(&self, state: &Trajectory, _action: ActionId) -> bool {
        self.max_depth.is_none_or(|m| state.len() < m)
    }
}

impl TargetPaths for FullBinaryTreeDomain {
    fn target_paths(&self) -> Vec<Vec<ActionId>> {
        let mut paths: Vec<_> = self.goals.iter().map(Trajectory::to_vec).collect();
        paths.sort();
        paths
    }
}

/// Which side of the chain-and-bin tree a target sits on.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ChainBinGoal {
    /// The chain node at this depth (>= 1).
    Chain { depth: u64 },
    /// A node of the binary tree below the root's action 1; `path` lists the
    /// actions taken after entering the bin, so its depth is `1 + path.len()`.
    Bin { path: Vec<ActionId> },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ChainBinState {
    Root,
    Chain(u64),
    Bin(Trajectory),
}

/// The chain-and-bin tree: the root's action 0 enters a chain where each
/// node has a single child, action 1 enters an infinite binary tree. With
/// the uniform policy the root's children have conditional 1/2, chain steps
/// have conditional 1, and bin steps 1/2.
#[derive(Clone, Debug)]
pub struct ChainAndBinDomain {
    goals: HashSet<ChainBinState>,
}

impl ChainAndBinDomain {
    pub fn new<I: IntoIterator<Item = ChainBinGoal>>(goals: I) -> Self {
        let goals = goals
            .into_iter()
            .map(|g| match g {
                ChainBinGoal::Chain { depth } => {
                    assert!(depth >= 1);
                    ChainBinState::Chain(depth)
                }
                ChainBinGoal::Bin { path } => ChainBinState::Bin(Trajectory::from_actions(&path)),
            })
            .collect();
        ChainAndBinDomain { goals }
    }
}

impl SearchDomain for ChainAndBinDomain {
    type State = ChainBinState;
    type Key = ChainBinState;

    fn action_count(&self) -> usize {
        2
    }

    fn initial_state(&self) -> ChainBinState {
        ChainBinState::Root
    }

    fn transition(&self, state: &ChainBinState, action: ActionId) -> ChainBinState {
        match state {
            ChainBinState::Root if action.0 == 0 => ChainBinState::Chain(1),
            ChainBinState::Root => ChainBinState::Bin(Trajectory::new()),
            // The chain has one real branch; action 1 aliases it.
            ChainBinState::Chain(d) => ChainBinState::Chain(d + 1),
            ChainBinState::Bin(path) => ChainBinState::Bin(path.push(action)),
        }
    }

    fn is_goal(&self, state: &ChainBinState) -> bool {
        self.goals.contains(state)
    }

    fn state_key(&self, state: &ChainBinState) -> ChainBinState {
        state.clone()
    }

    fn is_legal(&self, state: &ChainBinState, action: ActionId) -> bool {
        !matches!(state, ChainBinState::Chain(_)) || action.0 == 0
    }
}

impl TargetPaths for ChainAndBinDomain {
    fn target_paths(&self) -> Vec<Vec<ActionId>> {
        let mut paths: Vec<Vec<ActionId>> = self
            .goals
            .iter()
            .map(|g| match g {
                ChainBinState::Root => Vec::new(),
                ChainBinState::Chain(d) => vec![ActionId(0); *d as usize],
                ChainBinState::Bin(path) => {
                    let mut p = vec![ActionId(1)];
                    p.extend(path.to_vec());
                    p
                }
            })
            .collect();
        paths.sort();
        paths
    }
}

/// Action that moves one step further down the chain.
pub const ADVANCE: ActionId = ActionId(0);
/// Action that returns to the root state.
pub const RESET: ActionId = ActionId(1);

/// A binary tree where every [`RESET`] child is the root state again. The
/// state is the number of [`ADVANCE`] steps since the last reset, and the
/// single goal is `goal_depth` consecutive advances from the root.
#[derive(Clone, Copy, Debug)]
pub struct CollapsedChainDomain {
    pub goal_depth: u64,
}

impl CollapsedChainDomain {
    pub fn new(goal_depth: u64) -> Self {
        CollapsedChainDomain { goal_depth }
    }
}

impl SearchDomain for CollapsedChainDomain {
    type State = u64;
    type Key = u64;

    fn action_count(&self) -> usize {
        2
    }

    fn initial_state(&self) -> u64 {
        0
    }

    fn transition(&self, state: &u64, action: ActionId) -> u64 {
        if action == RESET {
            0
        } else {
            state + 1
        }
    }

    fn is_goal(&self, state: &u64) -> bool {
        *state == self.goal_depth
    }

    fn state_key(&self, state: &u64) -> u64 {
        *state
    }
}

impl TargetPaths for CollapsedChainDomain {
    /// Every other target node ends with the same advances after a reset, so
    /// it is deeper and less probable than the pure advance path.
    fn target_paths(&self) -> Vec<Vec<ActionId>> {
        vec![vec![ADVANCE; self.goal_depth as usize]]
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// A node of a [`RandomTreeDomain`]: the path plus a running hash of it, so
/// weights and table lookups cost O(1) instead of O(depth).
#[derive(Clone, Debug, Default)]
pub struct TreeNode {
    pub path: Trajectory,
    hash: u64,
}

impl TreeNode {
    pub fn push(&self, action: ActionId) -> TreeNode {
        TreeNode {
            path: self.path.push(action),
            hash: splitmix64(self.hash ^ (action.0 as u64 + 1)),
        }
    }

    pub fn from_actions(actions: &[ActionId]) -> TreeNode {
        actions.iter().fold(TreeNode::default(), |n, &a| n.push(a))
    }

    pub fn len(&self) -> usize {
        self.path.len()
    }

    pub fn is_empty(&self) -> bool {
        self.path.is_empty()
    }
}

impl PartialEq for TreeNode {
    fn eq(&self, other: &Self) -> bool {
        self.hash == other.hash && self.path == other.path
    }
}

impl Eq for TreeNode {}

impl std::hash::Hash for TreeNode {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        state.write_u64(self.hash);
    }
}

/// A tree whose states are the nodes, with explicit target paths.
/// The tree's shape comes from the zero weights of a [`RandomTreePolicy`].
#[derive(Clone, Debug)]
pub struct RandomTreeDomain {
    action_count: usize,
    goals: HashSet<TreeNode>,
    goal_depths: HashSet<usize>,
}

impl RandomTreeDomain {
    pub fn new(action_count: usize, goals: Vec<Vec<ActionId>>) -> Self {
        let goals: HashSet<TreeNode> = goals.iter().map(|p| TreeNode::from_actions(p)).collect();
        let goal_depths = goals.iter().map(TreeNode::len).collect();
        RandomTreeDomain {
            action_count,
            goals,
            goal_depths,
        }
    }
}

impl SearchDomain for RandomTreeDomain {
    type State = TreeNode;
    type Key = TreeNode;

    fn action_count(&self) -> usize {
        self.action_count
    }

    fn initial_state(&self) -> TreeNode {
        TreeNode::default()
    }

    fn transition(&self, state: &TreeNode, action: ActionId) -> TreeNode {
        state.push(action)
    }

    fn is_goal(&self, state: &TreeNode) -> bool {
        self.goal_depths.contains(&state.len()) && self.goals.contains(state)
    }

    fn state_key(&self, state: &TreeNode) -> TreeNode {
        state.clone()
    }
}

impl TargetPaths for RandomTreeDomain {
    fn target_paths(&self) -> Vec<Vec<ActionId>> {
        let mut paths: Vec<_> = self.goals.iter().map(|g| g.path.to_vec()).collect();
        paths.sort();
        paths
    }
}

/// Path-hashed integer weights in `0..=max_weight`, at least one positive
/// per node. Deterministic in `(seed, path)`.
#[derive(Clone, Copy, Debug)]
pub struct RandomTreePolicy {
    pub seed: u64,
    pub max_weight: u32,
}

impl RandomTreePolicy {
    pub fn node_weights(&self, action_count: usize, node: &TreeNode) -> Vec<u32> {
        let h = splitmix64(self.seed ^ node.hash ^ (node.len() as u64).wrapping_mul(0x2545_f491));
        let mut weights: Vec<u32> = (0..action_count)
            .map(|a| (splitmix64(h ^ (a as u64).wrapping_mul(0x9e37)) % (self.max_weight as u64 + 1)) as u32)
            .collect();
        if weights.iter().all(|&w| w == 0) {
            weights[(h % action_count as u64) as usize] = 1;
        }
        weights
    }
}

impl IntegerWeights<RandomTreeDomain> for RandomTreePolicy {
    fn weights(&self, domain: &RandomTreeDomain, state: &TreeNode) -> Vec<u32> {
        self.node_weights(domain.action_count, state)
    }
}

impl Policy<RandomTreeDomain> for RandomTreePolicy {
    fn is_markov(&self) -> bool {
        true
    }

    fn evaluate(
        &self,
        domain: &RandomTreeDomain,
        node: &TrajectoryNode<TreeNode>,
    ) -> Result<Evaluation, PolicyError> {
        Ok(Evaluation::new(normalize(&self.weights(domain, node.state()))))
    }
}

/// Parameters for [`random_tree_instance`].
#[derive(Clone, Copy, Debug)]
pub struct RandomTreeParams {
    pub action_count: usize,
    pub max_weight: u32,
    pub max_goal_depth: usize,
    pub max_goals: usize,
}

impl Default for RandomTreeParams {
    fn default() -> Self {
        RandomTreeParams {
            action_count: 3,
            max_weight: 4,
            max_goal_depth: 14,
            max_goals: 3,
        }
    }
}

/// A random tree instance whose goals are placed by positive-probability
/// walks of depth `1..=max_goal_depth`.
pub fn random_tree_instance(seed: u64, params: RandomTreeParams) -> (RandomTreeDomain, RandomTreePolicy) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let policy = RandomTreePolicy {
        seed: rng.random(),
        max_weight: params.max_weight,
    };
    let goal_count = rng.random_range(1..=params.max_goals);
    let mut goals = Vec::with_capacity(goal_count);
    for _ in 0..goal_count {
        let depth = rng.random_range(1..=params.max_goal_depth);
        let mut path = TreeNode::default();
        for _ in 0..depth {
            let w = policy.node_weights(params.action_count, &path);
            let total: u32 = w.iter().sum();
            let mut pick = rng.random_range(0..total);
            let action = w
                .iter()
                .position(|&x| {
                    if pick < x {
                        true
                    } else {
                        pick -= x;
                        false
                    }
                })
                .expect("positive total weight");
            path = path.push(ActionId::from(action));
        }
        goals.push(path.path.to_vec());
    }
    (RandomTreeDomain::new(params.action_count, goals), policy)
}

/// A finite deterministic graph over states `0..n` with a transition table.
/// Many nodes share a state, so Markov state cuts are active here.
#[derive(Clone, Debug)]
pub struct RandomGraphDomain {
    transitions: Vec<Vec<u32>>,
    goals: Vec<bool>,
}

impl RandomGraphDomain {
    pub fn new(transitions: Vec<Vec<u32>>, goals: Vec<bool>) -> Self {
        assert_eq!(transitions.len(), goals.len());
        RandomGraphDomain { transitions, goals }
    }

    pub fn state_count(&self) -> usize {
        self.transitions.len()
    }

    /// Exact `min over target nodes of depth / probability`.
    ///
    /// Runs a max-product recursion over depths: `best_prob[d][s]` is the
    /// highest probability of a length-`d` path ending in `s`. It stops once
    /// `d / max_s best_prob[d][s]` can no longer beat the best target cost.
    pub fn exact_min_cost(&self, policy: &GraphWeightPolicy) -> Result<BigRational, NoGoalError> {
        if !self.goals.iter().any(|&g| g) {
            return Err(NoGoalError::Empty);
        }
        if !self.goal_reachable(policy) {
            return Err(NoGoalError::Unreachable);
        }
        let n = self.state_count();
        let conditionals: Vec<Vec<BigRational>> = policy
            .weights
            .iter()
            .map(|w| {
                let total: u64 = w.iter().map(|&x| x as u64).sum();
                w.iter()
                    .map(|&x| BigRational::new(BigInt::from(x), BigInt::from(total.max(1))))
                    .collect()
            })
            .collect();
        let mut probs: Vec<BigRational> = vec![BigRational::zero(); n];
        probs[0] = BigRational::one();
        let mut best: Option<BigRational> = None;
        let mut depth: u64 = 0;
        loop {
            let depth_q = BigRational::from_integer(BigInt::from(depth));
            for (s, p) in probs.iter().enumerate() {
                if self.goals[s] && !p.is_zero() {
                    let cost = &depth_q / p;
                    if best.as_ref().is_none_or(|b| cost < *b) {
                        best = Some(cost);
                    }
                }
            }
            let max_prob = probs.iter().max().cloned().unwrap_or_else(BigRational::zero);
            if max_prob.is_zero() {
                break;
            }
            if let Some(b) = &best {
                let next = BigRational::from_integer(BigInt::from(depth + 1));
                if next / &max_prob >= *b {
                    break;
                }
            }
            let mut next_probs = vec![BigRational::zero(); n];
            for (s, p) in probs.iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                for (a, c) in conditionals[s].iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    let t = self.transitions[s][a] as usize;
                    let cand = p * c;
                    if cand > next_probs[t] {
                        next_probs[t] = cand;
                    }
                }
            }
            probs = next_probs;
            depth += 1;
        }
        best.ok_or(NoGoalError::Unreachable)
    }

    fn goal_reachable(&self, policy: &GraphWeightPolicy) -> bool {
        let mut seen = vec![false; self.state_count()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(s) = queue.pop_front() {
            if self.goals[s] {
                return true;
            }
            for (a, &w) in policy.weights[s].iter().enumerate() {
                let t = self.transitions[s][a] as usize;
                if w > 0 && !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        false
    }
}

impl SearchDomain for RandomGraphDomain {
    type State = u32;
    type Key = u32;

    fn action_count(&self) -> usize {
        self.transitions[0].len()
    }

    fn initial_state(&self) -> u32 {
        0
    }

    fn transition(&self, state: &u32, action: ActionId) -> u32 {
        self.transitions[*state as usize][action.index()]
    }

    fn is_goal(&self, state: &u32) -> bool {
        self.goals[*state as usize]
    }

    fn state_key(&self, state: &u32) -> u32 {
        *state
    }
}

/// Markov policy given by a per-state weight table.
#[derive(Clone, Debug)]
pub struct GraphWeightPolicy {
    pub weights: Vec<Vec<u32>>,
}

impl IntegerWeights<RandomGraphDomain> for GraphWeightPolicy {
    fn weights(&self, _domain: &RandomGraphDomain, state: &u32) -> Vec<u32> {
        self.weights[*state as usize].clone()
    }
}

impl Policy<RandomGraphDomain> for GraphWeightPolicy {
    fn is_markov(&self) -> bool {
        true
    }

    fn evaluate(
        &self,
        _domain: &RandomGraphDomain,
        node: &TrajectoryNode<u32>,
    ) -> Result<Evaluation, PolicyError> {
        Ok(Evaluation::new(normalize(&self.weights[*node.state() as usize])))
    }
}

/// Parameters for [`random_graph_instance`].
#[derive(Clone, Copy, Debug)]
pub struct RandomGraphParams {
    pub states: usize,
    pub action_count: usize,
    pub max_weight: u32,
    pub goals: usize,
}

impl Default for RandomGraphParams {
    fn default() -> Self {
        RandomGraphParams {
            states: 10,
            action_count: 3,
            max_weight: 4,
            goals: 1,
        }
    }
}

/// A random Markov graph instance whose goal is reachable with positive
/// probability and is not the initial state.
pub fn random_graph_instance(
    seed: u64,
    params: RandomGraphParams,
) -> (RandomGraphDomain, GraphWeightPolicy) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = params.states;
        let transitions: Vec<Vec<u32>> = (0..n)
            .map(|_| {
                (0..params.action_count)
                    .map(|_| rng.random_range(0..n as u32))
                    .collect()
            })
            .collect();
        let weights: Vec<Vec<u32>> = (0..n)
            .map(|_| {
                let mut w: Vec<u32> = (0..params.action_count)
                    .map(|_| rng.random_range(0..=params.max_weight))
                    .collect();
                if w.iter().all(|&x| x == 0) {
                    let i = rng.random_range(0..params.action_count);
                    w[i] = 1;
                }
                w
            })
            .collect();
        let mut goals = vec![false; n];
        for _ in 0..params.goals {
            goals[rng.random_range(1..n)] = true;
        }
        let domain = RandomGraphDomain::new(transitions, goals);
        let policy = GraphWeightPolicy { weights };
        if domain.goal_reachable(&policy) {
            return (domain, policy);
        }
    }
}

/// Number of distinct states reachable within `depth` steps under
/// positive-weight actions, by breadth-first search over state keys.
pub fn reachable_state_count<D, W>(domain: &D, weights: &W, depth: usize) -> usize
where
    D: SearchDomain,
    W: IntegerWeights<D> + ?Sized,
{
    let mut seen: HashMap<D::Key, ()> = HashMap::new();
    let mut frontier = vec![domain.initial_state()];
    seen.insert(domain.state_key(&frontier[0]), ());
    for _ in 0..depth {
        let mut next = Vec::new();
        for s in &frontier {
            for (a, &w) in weights.weights(domain, s).iter().enumerate() {
                if w == 0 {
                    continue;
                }
                let t = domain.transition(s, ActionId::from(a));
                if seen.insert(domain.state_key(&t), ()).is_none() {
                    next.push(t);
                }
            }
        }
        frontier = next;
    }
    seen.len()
}
