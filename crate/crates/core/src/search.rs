//! Domain and policy abstractions shared by every search algorithm.
//!
//! A node of the search tree is a sequence of actions from the initial
//! state. Nodes carry their depth, the natural log of their policy
//! probability and the environment state they lead to. Probabilities are
//! composed in log space throughout; `exp(log_prob)` underflows for deep
//! nodes long before the search itself runs out of memory.

use std::any::Any;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

/// Tolerance on the sum of a conditional probability vector.
pub const PROB_SUM_TOLERANCE: f64 = 1e-9;

/// Index of an action in `[0, action_count)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionId(pub u32);

impl ActionId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for ActionId {
    fn from(index: usize) -> Self {
        ActionId(index as u32)
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A deterministic single-agent environment.
///
/// `transition` must be total and pure. `state_key` identifies environment
/// states: two states share a key iff they are the same state. The goal test
/// looks at the state only, never at how it was reached.
pub trait SearchDomain {
    type State: Clone;
    type Key: Hash + Eq + Clone;

    fn action_count(&self) -> usize;
    fn initial_state(&self) -> Self::State;
    fn transition(&self, state: &Self::State, action: ActionId) -> Self::State;
    fn is_goal(&self, state: &Self::State) -> bool;
    fn state_key(&self, state: &Self::State) -> Self::Key;

    /// In-place variant of [`SearchDomain::transition`].
    fn apply(&self, state: &mut Self::State, action: ActionId) {
        *state = self.transition(state, action);
    }

    /// Whether `action` is a real branch at `state`. This is a hint for
    /// policies that spread mass over legal moves only; `transition` stays
    /// total regardless.
    fn is_legal(&self, _state: &Self::State, _action: ActionId) -> bool {
        true
    }
}

/// Opaque per-node data a policy threads along a trajectory (for instance
/// the posterior weights of a Bayes mixture).
#[derive(Clone, Default)]
pub struct PolicyContext(Option<Arc<dyn Any + Send + Sync>>);

impl PolicyContext {
    pub fn none() -> Self {
        PolicyContext(None)
    }

    pub fn new<T: Any + Send + Sync>(value: T) -> Self {
        PolicyContext(Some(Arc::new(value)))
    }

    pub fn is_none(&self) -> bool {
        self.0.is_none()
    }

    pub fn get<T: Any>(&self) -> Option<&T> {
        self.0.as_deref().and_then(|v| v.downcast_ref::<T>())
    }
}

impl fmt::Debug for PolicyContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            None => f.write_str("PolicyContext(None)"),
            Some(_) => f.write_str("PolicyContext(..)"),
        }
    }
}

/// The result of querying a policy at a node.
#[derive(Clone, Debug)]
pub struct Evaluation {
    /// `probs[a]` is the conditional probability of action `a`.
    pub probs: Vec<f64>,
    /// Context handed to each child; `None` means every child gets an empty
    /// context.
    pub child_contexts: Option<Vec<PolicyContext>>,
}

impl Evaluation {
    pub fn new(probs: Vec<f64>) -> Self {
        Evaluation {
            probs,
            child_contexts: None,
        }
    }

    pub fn with_contexts(probs: Vec<f64>, contexts: Vec<PolicyContext>) -> Self {
        Evaluation {
            probs,
            child_contexts: Some(contexts),
        }
    }

    pub fn child_context(&self, action: ActionId) -> PolicyContext {
        match &self.child_contexts {
            Some(contexts) => contexts[action.index()].clone(),
            None => PolicyContext::none(),
        }
    }

    /// Total mass; 1 for a regular node, 0 for a dead end.
    pub fn mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn is_dead_end(&self) -> bool {
        self.probs.iter().all(|&p| p == 0.0)
    }
}

/// Errors produced while querying a policy.
#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("policy returned {got} probabilities for {expected} actions")]
    WrongLength { expected: usize, got: usize },
    #[error("policy returned an invalid probability {value} for action {action}")]
    InvalidProbability { action: usize, value: f64 },
    #[error("policy conditionals sum to {sum}, expected 1")]
    BadSum { sum: f64 },
    #[error("policy unavailable: {0}")]
    Unavailable(String),
}

/// Checks a conditional vector: right length, finite non-negative entries,
/// and a sum of 1 within [`PROB_SUM_TOLERANCE`]. An all-zero vector is
/// accepted and marks a dead end.
pub fn validate_conditionals(probs: &[f64], action_count: usize) -> Result<(), PolicyError> {
    if probs.len() != action_count {
        return Err(PolicyError::WrongLength {
            expected: action_count,
            got: probs.len(),
        });
    }
    for (action, &value) in probs.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(PolicyError::InvalidProbability { action, value });
        }
    }
    let sum: f64 = probs.iter().sum();
    if sum != 0.0 && (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
        return Err(PolicyError::BadSum { sum });
    }
    Ok(())
}

/// A conditional action distribution given a trajectory.
///
/// A policy declaring `is_markov` must return identical conditionals for
/// any two nodes whose states share a key; LevinTS only performs state cuts
/// for such policies.
pub trait Policy<D: SearchDomain + ?Sized> {
    fn is_markov(&self) -> bool;

    fn root_context(&self, _domain: &D) -> PolicyContext {
        PolicyContext::none()
    }

    fn evaluate(
        &self,
        domain: &D,
        node: &TrajectoryNode<D::State>,
    ) -> Result<Evaluation, PolicyError>;

    fn conditionals(
        &self,
        domain: &D,
        node: &TrajectoryNode<D::State>,
    ) -> Result<Vec<f64>, PolicyError> {
        self.evaluate(domain, node).map(|e| e.probs)
    }
}

impl<D: SearchDomain + ?Sized, P: Policy<D> + ?Sized> Policy<D> for &P {
    fn is_markov(&self) -> bool {
        (**self).is_markov()
    }
    fn root_context(&self, domain: &D) -> PolicyContext {
        (**self).root_context(domain)
    }
    fn evaluate(
        &self,
        domain: &D,
        node: &TrajectoryNode<D::State>,
    ) -> Result<Evaluation, PolicyError> {
        (**self).evaluate(domain, node)
    }
}

impl<D: SearchDomain + ?Sized, P: Policy<D> + ?Sized> Policy<D> for Box<P> {
    fn is_markov(&self) -> bool {
        (**self).is_markov()
    }
    fn root_context(&self, domain: &D) -> PolicyContext {
        (**self).root_context(domain)
    }
    fn evaluate(
        &self,
        domain: &D,
        node: &TrajectoryNode<D::State>,
    ) -> Result<Evaluation, PolicyError> {
        (**self).evaluate(domain, node)
    }
}

impl<D: SearchDomain + ?Sized, P: Policy<D> + ?Sized> Policy<D> for Arc<P> {
    fn is_markov(&self) -> bool {
        (**self).is_markov()
    }
    fn root_context(&self, domain: &D) -> PolicyContext {
        (**self).root_context(domain)
    }
    fn evaluate(
        &self,
        domain: &D,
        node: &TrajectoryNode<D::State>,
    ) -> Result<Evaluation, PolicyError> {
        (**self).evaluate(domain, node)
    }
}

struct Link {
    action: ActionId,
    parent: Option<Arc<Link>>,
}

/// An immutable action sequence with O(1) extension and cloning.
///
/// Children share their parent's prefix, so a fringe of many nodes costs one
/// link per node rather than one copy of the full sequence.
#[derive(Clone, Default)]
pub struct Trajectory {
    tail: Option<Arc<Link>>,
    len: usize,
}

impl Trajectory {
    pub fn new() -> Self {
        Trajectory::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&self, action: ActionId) -> Trajectory {
        Trajectory {
            tail: Some(Arc::new(Link {
                action,
                parent: self.tail.clone(),
            })),
            len: self.len + 1,
        }
    }

    pub fn last(&self) -> Option<ActionId> {
        self.tail.as_ref().map(|l| l.action)
    }

    /// Iterates actions from the last one back to the first.
    pub fn iter_rev(&self) -> impl Iterator<Item = ActionId> + '_ {
        let mut cur = self.tail.as_deref();
        std::iter::from_fn(move || {
            let link = cur?;
            cur = link.parent.as_deref();
            Some(link.action)
        })
    }

    pub fn first(&self) -> Option<ActionId> {
        self.iter_rev().last()
    }

    pub fn to_vec(&self) -> Vec<ActionId> {
        let mut actions: Vec<ActionId> = self.iter_rev().collect();
        actions.reverse();
        actions
    }

    pub fn from_actions(actions: &[ActionId]) -> Trajectory {
        actions.iter().fold(Trajectory::new(), |t, &a| t.push(a))
    }
}

impl Drop for Trajectory {
    fn drop(&mut self) {
        // Unlink iteratively: recursive drops overflow the stack on the long
        // chains produced by deep sampling runs.
        let mut cur = self.tail.take();
        while let Some(link) = cur {
            match Arc::try_unwrap(link) {
                Ok(mut link) => cur = link.parent.take(),
                Err(_) => break,
            }
        }
    }
}

impl PartialEq for Trajectory {
    fn eq(&self, other: &Self) -> bool {
        if self.len != other.len {
            return false;
        }
        let mut a = self.tail.as_ref();
        let mut b = other.tail.as_ref();
        loop {
            match (a, b) {
                (None, None) => return true,
                (Some(x), Some(y)) => {
                    if Arc::ptr_eq(x, y) {
                        return true;
                    }
                    if x.action != y.action {
                        return false;
                    }
                    a = x.parent.as_ref();
                    b = y.parent.as_ref();
                }
                _ => return false,
            }
        }
    }
}

impl Eq for Trajectory {}

impl Hash for Trajectory {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.len.hash(state);
        for a in self.iter_rev() {
            a.hash(state);
        }
    }
}

impl fmt::Debug for Trajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.to_vec().iter().map(|a| a.0))
            .finish()
    }
}

/// A node of the search tree: the action sequence, its log-probability under
/// the policy, and the state it leads to.
#[derive(Clone, Debug)]
pub struct TrajectoryNode<S> {
    trajectory: Trajectory,
    log_prob: f64,
    state: S,
    context: PolicyContext,
}

impl<S: Clone> TrajectoryNode<S> {
    /// The root: empty sequence, depth 0, probability 1.
    pub fn root(state: S, context: PolicyContext) -> Self {
        TrajectoryNode {
            trajectory: Trajectory::new(),
            log_prob: 0.0,
            state,
            context,
        }
    }

    /// Root node of `domain` with the policy's initial context.
    pub fn root_of<D, P>(domain: &D, policy: &P) -> Self
    where
        D: SearchDomain<State = S>,
        P: Policy<D> + ?Sized,
    {
        TrajectoryNode::root(domain.initial_state(), policy.root_context(domain))
    }

    /// Number of actions from the root (the root has depth 0).
    pub fn depth(&self) -> usize {
        self.trajectory.len()
    }

    /// Natural log of the policy probability of this node.
    pub fn log_prob(&self) -> f64 {
        self.log_prob
    }

    pub fn probability(&self) -> f64 {
        self.log_prob.exp()
    }

    pub fn state(&self) -> &S {
        &self.state
    }

    pub fn context(&self) -> &PolicyContext {
        &self.context
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn actions(&self) -> Vec<ActionId> {
        self.trajectory.to_vec()
    }

    /// The same node seen with a different policy context. Used by policy
    /// combinators to query their components.
    pub fn with_context(&self, context: PolicyContext) -> Self {
        TrajectoryNode {
            trajectory: self.trajectory.clone(),
            log_prob: self.log_prob,
            state: self.state.clone(),
            context,
        }
    }

    /// Builds the child reached by `action` from an evaluation of this node.
    /// Zero-probability actions are rejected.
    pub fn child<D>(
        &self,
        domain: &D,
        evaluation: &Evaluation,
        action: ActionId,
    ) -> Result<Self, ExtendError>
    where
        D: SearchDomain<State = S> + ?Sized,
    {
        let p = self.checked_conditional(domain, evaluation, action)?;
        if p <= 0.0 {
            return Err(ExtendError::ZeroProbability { action });
        }
        Ok(self.child_unchecked(domain, evaluation, action, p))
    }

    /// Like [`TrajectoryNode::child`] but also accepts zero-probability
    /// actions, producing a node with `log_prob = -inf`.
    pub fn child_allowing_zero<D>(
        &self,
        domain: &D,
        evaluation: &Evaluation,
        action: ActionId,
    ) -> Result<Self, ExtendError>
    where
        D: SearchDomain<State = S> + ?Sized,
    {
        let p = self.checked_conditional(domain, evaluation, action)?;
        Ok(self.child_unchecked(domain, evaluation, action, p))
    }

    fn checked_conditional<D>(
        &self,
        domain: &D,
        evaluation: &Evaluation,
        action: ActionId,
    ) -> Result<f64, ExtendError>
    where
        D: SearchDomain<State = S> + ?Sized,
    {
        let count = domain.action_count();
        if action.index() >= count {
            return Err(ExtendError::InvalidAction { action, count });
        }
        evaluation
            .probs
            .get(action.index())
            .copied()
            .ok_or(ExtendError::InvalidAction { action, count })
    }

    fn child_unchecked<D>(&self, domain: &D, evaluation: &Evaluation, action: ActionId, p: f64) -> Self
    where
        D: SearchDomain<State = S> + ?Sized,
    {
        TrajectoryNode {
            trajectory: self.trajectory.push(action),
            log_prob: self.log_prob + p.ln(),
            state: domain.transition(&self.state, action),
            context: evaluation.child_context(action),
        }
    }
}

/// Errors from extending a node by one action.
#[derive(Debug, Error, PartialEq)]
pub enum ExtendError {
    #[error("action {action} out of range for {count} actions")]
    InvalidAction { action: ActionId, count: usize },
    #[error("action {action} has zero probability")]
    ZeroProbability { action: ActionId },
}

/// Errors from [`extend`].
#[derive(Debug, Error)]
pub enum ExtensionError {
    #[error(transparent)]
    Rejected(#[from] ExtendError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

/// Queries the policy at `node` and returns the child reached by `action`.
pub fn extend<D, P>(
    node: &TrajectoryNode<D::State>,
    action: ActionId,
    policy: &P,
    domain: &D,
) -> Result<TrajectoryNode<D::State>, ExtensionError>
where
    D: SearchDomain,
    P: Policy<D> + ?Sized,
{
    let evaluation = policy.evaluate(domain, node)?;
    validate_conditionals(&evaluation.probs, domain.action_count())?;
    Ok(node.child(domain, &evaluation, action)?)
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("malformed solution: action {action} at position {position} is out of range for {count} actions")]
pub struct ReplayError {
    pub position: usize,
    pub action: ActionId,
    pub count: usize,
}

/// Folds the transition function over `actions` from the initial state.
pub fn replay<D: SearchDomain + ?Sized>(
    actions: &[ActionId],
    domain: &D,
) -> Result<D::State, ReplayError> {
    let count = domain.action_count();
    let mut state = domain.initial_state();
    for (position, &action) in actions.iter().enumerate() {
        if action.index() >= count {
            return Err(ReplayError {
                position,
                action,
                count,
            });
        }
        domain.apply(&mut state, action);
    }
    Ok(state)
}

/// How a search ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SearchStatus {
    Solved,
    /// Every reachable node was expanded (or every allowed run failed).
    Exhausted,
    BudgetReached,
}

impl SearchStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SearchStatus::Solved => "solved",
            SearchStatus::Exhausted => "exhausted",
            SearchStatus::BudgetReached => "budget_reached",
        }
    }
}

impl fmt::Display for SearchStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one search.
///
/// `expansions` counts every node taken off the fringe (or visited by a
/// sampled trajectory) and goal-tested, the goal node included.
#[derive(Clone, Debug)]
pub struct SearchReport {
    pub status: SearchStatus,
    pub expansions: u64,
    pub solution: Option<Vec<ActionId>>,
    /// Sampled trajectories started; 0 for the enumeration algorithms.
    pub runs: u64,
    pub wall_time: Duration,
}

impl SearchReport {
    pub fn is_solved(&self) -> bool {
        self.status == SearchStatus::Solved
    }

    pub fn solution_length(&self) -> Option<usize> {
        self.solution.as_ref().map(Vec::len)
    }

    /// Field-by-field equality ignoring wall time.
    pub fn same_outcome(&self, other: &SearchReport) -> bool {
        self.status == other.status
            && self.expansions == other.expansions
            && self.solution == other.solution
            && self.runs == other.runs
    }
}

/// Expansion and wall-clock limits shared by all algorithms.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SearchLimits {
    pub max_expansions: Option<u64>,
    pub time_limit: Option<Duration>,
}

impl SearchLimits {
    pub fn unlimited() -> Self {
        SearchLimits::default()
    }

    pub fn expansions(max: u64) -> Self {
        SearchLimits {
            max_expansions: Some(max),
            time_limit: None,
        }
    }
}

/// Errors that abort a search run.
#[derive(Debug, Error)]
pub enum SearchError {
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("invalid search parameter: {0}")]
    InvalidParameter(&'static str),
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Counts in base `action_count`; every action is legal.
    struct Counter {
        actions: usize,
        goal: u64,
    }

    impl SearchDomain for Counter {
        type State = u64;
        type Key = u64;
        fn action_count(&self) -> usize {
            self.actions
        }
        fn initial_state(&self) -> u64 {
            0
        }
        fn transition(&self, s: &u64, a: ActionId) -> u64 {
            s * self.actions as u64 + a.0 as u64 + 1
        }
        fn is_goal(&self, s: &u64) -> bool {
            *s == self.goal
        }
        fn state_key(&self, s: &u64) -> u64 {
            *s
        }
    }

    struct Fixed(Vec<f64>);

    impl Policy<Counter> for Fixed {
        fn is_markov(&self) -> bool {
            true
        }
        fn evaluate(&self, _: &Counter, _: &TrajectoryNode<u64>) -> Result<Evaluation, PolicyError> {
            Ok(Evaluation::new(self.0.clone()))
        }
    }

    #[test]
    fn extend_multiplies_conditionals() {
        let domain = Counter { actions: 2, goal: 99 };
        let policy = Fixed(vec![0.5, 0.5]);
        let root = TrajectoryNode::root_of(&domain, &policy);
        assert_eq!(root.depth(), 0);
        assert_eq!(root.log_prob(), 0.0);
        let child = extend(&root, ActionId(1), &policy, &domain).unwrap();
        assert_eq!(child.depth(), 1);
        assert!((child.log_prob() - 0.5f64.ln()).abs() < 1e-15);
        assert!((child.log_prob() + std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(*child.state(), 2);
    }

    #[test]
    fn certain_action_keeps_log_prob() {
        let domain = Counter { actions: 2, goal: 99 };
        let policy = Fixed(vec![1.0, 0.0]);
        let root = TrajectoryNode::root_of(&domain, &policy);
        let child = extend(&root, ActionId(0), &policy, &domain).unwrap();
        assert_eq!(child.log_prob(), root.log_prob());
    }

    #[test]
    fn zero_probability_extension_is_rejected_by_default() {
        let domain = Counter { actions: 2, goal: 99 };
        let policy = Fixed(vec![1.0, 0.0]);
        let root = TrajectoryNode::root_of(&domain, &policy);
        let err = extend(&root, ActionId(1), &policy, &domain).unwrap_err();
        assert!(matches!(
            err,
            ExtensionError::Rejected(ExtendError::ZeroProbability { .. })
        ));
        let eval = policy.evaluate(&domain, &root).unwrap();
        let child = root.child_allowing_zero(&domain, &eval, ActionId(1)).unwrap();
        assert_eq!(child.log_prob(), f64::NEG_INFINITY);
    }

    #[test]
    fn out_of_range_action_is_rejected() {
        let domain = Counter { actions: 2, goal: 99 };
        let policy = Fixed(vec![0.5, 0.5]);
        let root = TrajectoryNode::root_of(&domain, &policy);
        let err = extend(&root, ActionId(2), &policy, &domain).unwrap_err();
        assert!(matches!(
            err,
            ExtensionError::Rejected(ExtendError::InvalidAction { .. })
        ));
    }

    #[test]
    fn uniform_chain_of_ten() {
        let domain = Counter { actions: 4, goal: u64::MAX };
        let policy = Fixed(vec![0.25; 4]);
        let mut node = TrajectoryNode::root_of(&domain, &policy);
        for i in 0..10 {
            node = extend(&node, ActionId(i % 4), &policy, &domain).unwrap();
        }
        assert!((node.log_prob() - 10.0 * 0.25f64.ln()).abs() < 1e-12);
        assert!((node.probability() - 4f64.powi(-10)).abs() < 1e-12);
        let replayed = replay(&node.actions(), &domain).unwrap();
        assert_eq!(&replayed, node.state());
    }

    #[test]
    fn replay_edge_cases() {
        let domain = Counter { actions: 2, goal: 2 };
        assert_eq!(replay(&[], &domain).unwrap(), 0);
        assert!(domain.is_goal(&replay(&[ActionId(1)], &domain).unwrap()));
        let err = replay(&[ActionId(0), ActionId(7)], &domain).unwrap_err();
        assert_eq!(err.position, 1);
    }

    #[test]
    fn validation_rules() {
        assert!(validate_conditionals(&[0.5, 0.5], 2).is_ok());
        assert!(validate_conditionals(&[0.0, 0.0], 2).is_ok());
        assert!(matches!(
            validate_conditionals(&[0.5], 2),
            Err(PolicyError::WrongLength { .. })
        ));
        assert!(matches!(
            validate_conditionals(&[0.6, 0.5], 2),
            Err(PolicyError::BadSum { .. })
        ));
        assert!(matches!(
            validate_conditionals(&[1.5, -0.5], 2),
            Err(PolicyError::InvalidProbability { .. })
        ));
    }

    #[test]
    fn trajectory_sharing_and_equality() {
        let base = Trajectory::from_actions(&[ActionId(1), ActionId(0)]);
        let a = base.push(ActionId(3));
        let b = Trajectory::from_actions(&[ActionId(1), ActionId(0), ActionId(3)]);
        assert_eq!(a, b);
        assert_eq!(a.first(), Some(ActionId(1)));
        assert_eq!(a.last(), Some(ActionId(3)));
        assert_ne!(a, base.push(ActionId(2)));
        assert_ne!(a, base);
    }

    #[test]
    fn long_trajectory_drops_without_recursion() {
        let mut t = Trajectory::new();
        for i in 0..1_000_000u32 {
            t = t.push(ActionId(i % 2));
        }
        assert_eq!(t.len(), 1_000_000);
        drop(t);
    }
}
