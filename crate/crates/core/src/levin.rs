//! Best-first enumeration ordered by `depth(n) / pi(n)`, with state cuts
//! for Markov policies, plus the greedy most-probable-first baseline.
//!
//! Keys are compared in log space: `ln(depth) - log_prob` orders nodes
//! exactly like `depth / pi`, and the root's key is `-inf`. Ties pop in
//! insertion order. Goal tests happen when a node is popped, so the goal
//! node itself counts as an expansion.

use std::cmp::Ordering;
use std::collections::hash_map::Entry as MapEntry;
use std::collections::{BinaryHeap, HashMap};
use std::time::Instant;

use crate::search::{
    validate_conditionals, ActionId, Policy, SearchDomain, SearchError, SearchLimits,
    SearchReport, SearchStatus, TrajectoryNode,
};

/// Two log-probabilities closer than this are treated as equal when
/// deciding a state cut.
const CUT_LOG_TOLERANCE: f64 = 1e-12;

/// What happened to a node taken off the fringe.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpansionOutcome {
    Goal,
    /// Its state was already expanded with at least the same probability.
    Cut,
    Expanded,
}

/// Hooks into a best-first search, used by tests and tracing tools.
pub trait SearchObserver<S> {
    fn expanded(&mut self, _node: &TrajectoryNode<S>, _outcome: ExpansionOutcome) {}
    fn generated(&mut self, _node: &TrajectoryNode<S>) {}
}

impl<S> SearchObserver<S> for () {}

/// Records the action sequence of every popped node, in order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExpansionTrace {
    pub popped: Vec<(Vec<ActionId>, ExpansionOutcome)>,
}

impl<S: Clone> SearchObserver<S> for ExpansionTrace {
    fn expanded(&mut self, node: &TrajectoryNode<S>, outcome: ExpansionOutcome) {
        self.popped.push((node.actions(), outcome));
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevinOptions {
    pub limits: SearchLimits,
    /// Perform state cuts when the policy is Markov. Has no effect for
    /// non-Markov policies.
    pub state_cuts: bool,
}

impl Default for LevinOptions {
    fn default() -> Self {
        LevinOptions {
            limits: SearchLimits::unlimited(),
            state_cuts: true,
        }
    }
}

impl LevinOptions {
    pub fn with_budget(max_expansions: u64) -> Self {
        LevinOptions {
            limits: SearchLimits::expansions(max_expansions),
            ..Default::default()
        }
    }
}

/// LevinTS cost key of a node: `ln(depth) - log_prob`, `-inf` at the root.
pub fn levin_key(depth: usize, log_prob: f64) -> f64 {
    if depth == 0 {
        f64::NEG_INFINITY
    } else {
        (depth as f64).ln() - log_prob
    }
}

fn greedy_key(_depth: usize, log_prob: f64) -> f64 {
    -log_prob
}

struct FringeEntry<S> {
    key: f64,
    seq: u64,
    node: TrajectoryNode<S>,
}

impl<S> PartialEq for FringeEntry<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<S> Eq for FringeEntry<S> {}

impl<S> PartialOrd for FringeEntry<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S> Ord for FringeEntry<S> {
    // BinaryHeap is a max-heap: smaller key, then earlier insertion, wins.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .total_cmp(&self.key)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Priority queue of nodes keyed by a cost function, FIFO on ties.
pub struct Fringe<S> {
    heap: BinaryHeap<FringeEntry<S>>,
    next_seq: u64,
}

impl<S> Default for Fringe<S> {
    fn default() -> Self {
        Fringe {
            heap: BinaryHeap::new(),
            next_seq: 0,
        }
    }
}

impl<S> Fringe<S> {
    pub fn push(&mut self, key: f64, node: TrajectoryNode<S>) {
        self.heap.push(FringeEntry {
            key,
            seq: self.next_seq,
            node,
        });
        self.next_seq += 1;
    }

    pub fn pop(&mut self) -> Option<(f64, TrajectoryNode<S>)> {
        self.heap.pop().map(|e| (e.key, e.node))
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

/// Levin tree search with the default observer.
pub fn levin_ts<D, P>(
    domain: &D,
    policy: &P,
    options: &LevinOptions,
) -> Result<SearchReport, SearchError>
where
    D: SearchDomain,
    P: Policy<D> + ?Sized,
{
    levin_ts_observed(domain, policy, options, &mut ())
}

pub fn levin_ts_observed<D, P, O>(
    domain: &D,
    policy: &P,
    options: &LevinOptions,
    observer: &mut O,
) -> Result<SearchReport, SearchError>
where
    D: SearchDomain,
    P: Policy<D> + ?Sized,
    O: SearchObserver<D::State> + ?Sized,
{
    let cuts = options.state_cuts && policy.is_markov();
    best_first(domain, policy, &options.limits, cuts, levin_key, observer)
}

/// Expands the most probable fringe node first. Can starve goals of
/// positive probability; kept as the counterexample baseline.
pub fn greedy_prob_ts<D, P>(
    domain: &D,
    policy: &P,
    options: &LevinOptions,
) -> Result<SearchReport, SearchError>
where
    D: SearchDomain,
    P: Policy<D> + ?Sized,
{
    greedy_prob_ts_observed(domain, policy, options, &mut ())
}

pub fn greedy_prob_ts_observed<D, P, O>(
    domain: &D,
    policy: &P,
    options: &LevinOptions,
    observer: &mut O,
) -> Result<SearchReport, SearchError>
where
    D: SearchDomain,
    P: Policy<D> + ?Sized,
    O: SearchObserver<D::State> + ?Sized,
{
    let cuts = options.state_cuts && policy.is_markov();
    best_first(domain, policy, &options.limits, cuts, greedy_key, observer)
}

fn best_first<D, P, O>(
    domain: &D,
    policy: &P,
    limits: &SearchLimits,
    state_cuts: bool,
    key: fn(usize, f64) -> f64,
    observer: &mut O,
) -> Result<SearchReport, SearchError>
where
    D: SearchDomain,
    P: Policy<D> + ?Sized,
    O: SearchObserver<D::State> + ?Sized,
{
    let started = Instant::now();
    let deadline = limits.time_limit.map(|t| started + t);
    let action_count = domain.action_count();

    let mut fringe = Fringe::default();
    // Best log-probability among expanded nodes, per state.
    let mut visited: HashMap<D::Key, f64> = HashMap::new();
    let mut expansions: u64 = 0;

    let report = |status, expansions, solution| SearchReport {
        status,
        expansions,
        solution,
        runs: 0,
        wall_time: started.elapsed(),
    };

    let root = TrajectoryNode::root_of(domain, policy);
    observer.generated(&root);
    fringe.push(key(0, 0.0), root);

    while let Some((_, node)) = fringe.pop() {
        if limits.max_expansions.is_some_and(|m| expansions >= m)
            || deadline.is_some_and(|d| Instant::now() >= d)
        {
            return Ok(report(SearchStatus::BudgetReached, expansions, None));
        }
        expansions += 1;

        if domain.is_goal(node.state()) {
            observer.expanded(&node, ExpansionOutcome::Goal);
            return Ok(report(SearchStatus::Solved, expansions, Some(node.actions())));
        }

        if state_cuts {
            match visited.entry(domain.state_key(node.state())) {
                MapEntry::Occupied(mut e) => {
                    if *e.get() >= node.log_prob() - CUT_LOG_TOLERANCE {
                        observer.expanded(&node, ExpansionOutcome::Cut);
                        continue;
                    }
                    e.insert(node.log_prob());
                }
                MapEntry::Vacant(e) => {
                    e.insert(node.log_prob());
                }
            }
        }
        observer.expanded(&node, ExpansionOutcome::Expanded);

        let evaluation = policy.evaluate(domain, &node)?;
        validate_conditionals(&evaluation.probs, action_count)?;
        let child_depth = node.depth() + 1;
        for a in 0..action_count {
            let action = ActionId::from(a);
            if let Ok(child) = node.child(domain, &evaluation, action) {
                observer.generated(&child);
                fringe.push(key(child_depth, child.log_prob()), child);
            }
        }
    }
    Ok(report(SearchStatus::Exhausted, expansions, None))
}
