//! Oracles and harnesses shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::io::BufReader;
use std::thread;
use std::time::Duration;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use policy_tree_search::bridge::{serve_table, BridgePolicy, ProbTable, StateEncoding};
use policy_tree_search::mix::bayes_mix;
use policy_tree_search::levin::{ExpansionOutcome, SearchObserver};
use policy_tree_search::sokoban::{parse_boxoban, Level, SokobanDomain};
use policy_tree_search::synthetic::{
    exact_probability, IntegerWeights, RandomTreeDomain, RandomTreePolicy,
};
use policy_tree_search::{ActionId, Policy, SearchDomain, TrajectoryNode};

pub const ONE_PUSH: &str = include_str!("../fixtures/one_push.txt");
pub const CORNER: &str = include_str!("../fixtures/corner_deadlock.txt");
pub const BOXOBAN_100: &str = include_str!("../fixtures/boxoban_100.txt");

pub fn fixture_levels() -> Vec<Level> {
    parse_boxoban(BOXOBAN_100).expect("bundled fixture parses")
}

/// `depth / pi` of the node reached by `path`, exactly; 0 at the root.
pub fn exact_cost<D, W>(domain: &D, weights: &W, path: &[ActionId]) -> Option<BigRational>
where
    D: SearchDomain,
    W: IntegerWeights<D>,
{
    if path.is_empty() {
        return Some(BigRational::zero());
    }
    let p = exact_probability(domain, weights, path);
    (!p.is_zero()).then(|| BigRational::from_integer(BigInt::from(path.len())) / p)
}

/// Records pops and generations with their state keys.
pub struct KeyedRecorder<'a, D: SearchDomain> {
    pub domain: &'a D,
    pub popped: Vec<(Vec<ActionId>, f64, D::Key, ExpansionOutcome)>,
    pub generated: Vec<(Vec<ActionId>, f64, D::Key)>,
}

impl<'a, D: SearchDomain> KeyedRecorder<'a, D> {
    pub fn new(domain: &'a D) -> Self {
        KeyedRecorder {
            domain,
            popped: Vec::new(),
            generated: Vec::new(),
        }
    }
}

impl<D: SearchDomain> SearchObserver<D::State> for KeyedRecorder<'_, D> {
    fn expanded(&mut self, node: &TrajectoryNode<D::State>, outcome: ExpansionOutcome) {
        self.popped.push((
            node.actions(),
            node.log_prob(),
            self.domain.state_key(node.state()),
            outcome,
        ));
    }

    fn generated(&mut self, node: &TrajectoryNode<D::State>) {
        self.generated
            .push((node.actions(), node.log_prob(), self.domain.state_key(node.state())));
    }
}

/// Sample mean and standard error.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// One-sided 99% normal quantile.
pub const Z99: f64 = 2.326;
/// Two-sided 99% normal quantile.
pub const Z99_TWO_SIDED: f64 = 2.576;

/// A server thread answering from `table` over in-memory pipes, and a
/// client connected to it.
pub fn piped_table_server(table: ProbTable) -> (BridgePolicy, thread::JoinHandle<u64>) {
    let (client_read, server_write) = std::io::pipe().expect("pipe");
    let (server_read, client_write) = std::io::pipe().expect("pipe");
    let handle = thread::spawn(move || {
        serve_table(&table, BufReader::new(server_read), server_write).expect("serve loop")
    });
    let policy = BridgePolicy::from_streams(
        BufReader::new(client_read),
        client_write,
        Duration::from_secs(5),
    )
    .expect("handshake");
    (policy, handle)
}

/// A client talking to a hand-written server that replies with `lines`
/// (after the handshake) regardless of what it is asked.
pub fn scripted_server(handshake: &str, lines: Vec<String>) -> BridgePolicy {
    let (client_read, mut server_write) = std::io::pipe().expect("pipe");
    let (server_read, client_write) = std::io::pipe().expect("pipe");
    let handshake = handshake.to_string();
    thread::spawn(move || {
        use std::io::{BufRead, Write};
        writeln!(server_write, "{handshake}").ok();
        let mut input = BufReader::new(server_read).lines();
        for line in lines {
            if input.next().is_none() {
                return;
            }
            if writeln!(server_write, "{line}").is_err() {
                return;
            }
        }
        // Dropping the writer closes the stream: the server "exits".
    });
    BridgePolicy::from_streams(
        BufReader::new(client_read),
        client_write,
        Duration::from_secs(5),
    )
    .expect("handshake")
}

/// Random conditionals for every state within `radius` moves of each
/// level's start, keyed by the grid encoding.
pub fn random_sokoban_table(levels: &[Level], radius: usize, seed: u64) -> ProbTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = ProbTable::new(4);
    for level in levels {
        let domain = SokobanDomain::new(level.clone());
        let mut seen: HashMap<String, ()> = HashMap::new();
        let mut frontier = vec![domain.initial_state()];
        for _ in 0..=radius {
            let mut next = Vec::new();
            for s in &frontier {
                let key = StateEncoding::encode_state(&domain, s);
                if seen.insert(key.clone(), ()).is_some() {
                    continue;
                }
                let w: Vec<f64> = (0..4).map(|_| rng.random_range(1..=8) as f64).collect();
                let total: f64 = w.iter().sum();
                table
                    .insert(key, w.iter().map(|x| x / total).collect())
                    .expect("valid row");
                for a in 0..4 {
                    next.push(domain.transition(s, ActionId::from(a)));
                }
            }
            frontier = next;
        }
    }
    table
}

pub fn rational(numer: u64, denom: u64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Integer weights as exact conditionals.
fn exact_conditionals(weights: &[u32]) -> Vec<BigRational> {
    let total: u64 = weights.iter().map(|&w| w as u64).sum();
    weights.iter().map(|&w| rational(w as u64, total)).collect()
}

/// Walks a random positive-probability trajectory of the Bayes mixture and
/// returns (float log-prob from the implementation, exact mixture
/// probability from the sequential posterior recursion, exact component
/// probabilities).
pub fn bayes_walk(
    domain: &RandomTreeDomain,
    components: &[RandomTreePolicy],
    priors: &[BigRational],
    rng: &mut ChaCha8Rng,
) -> (f64, BigRational, Vec<BigRational>) {
    let prior_f: Vec<f64> = priors.iter().map(|p| p.to_f64().unwrap()).collect();
    let mix = bayes_mix(components.to_vec(), Some(prior_f)).unwrap();
    let mut node = TrajectoryNode::root_of(domain, &mix);
    let mut posterior = priors.to_vec();
    let mut mixture = BigRational::one();
    let mut each = vec![BigRational::one(); components.len()];
    for _ in 0..rng.random_range(1..=20) {
        let eval = mix.evaluate(domain, &node).unwrap();
        let positive: Vec<usize> = (0..eval.probs.len()).filter(|&a| eval.probs[a] > 0.0).collect();
        let a = positive[rng.random_range(0..positive.len())];
        let conds: Vec<Vec<BigRational>> = components
            .iter()
            .map(|c| exact_conditionals(&c.weights(domain, node.state())))
            .collect();
        let p: BigRational = posterior.iter().zip(&conds).map(|(w, c)| w * &c[a]).sum();
        for (i, w) in posterior.iter_mut().enumerate() {
            *w = &*w * &conds[i][a] / &p;
            each[i] *= &conds[i][a];
        }
        mixture *= p;
        node = node.child(domain, &eval, ActionId::from(a)).unwrap();
    }
    (node.log_prob(), mixture, each)
}

/// `depth / pi` as `prod p^e` over primes, so equal costs have equal
/// representations. Cheap enough to run on every pop. `None` is the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactoredCost(Option<Vec<(u32, i32)>>);

impl FactoredCost {
    pub fn ln(&self) -> f64 {
        match &self.0 {
            None => f64::NEG_INFINITY,
            Some(exponents) => exponents.iter().map(|&(p, e)| f64::from(e) * f64::from(p).ln()).sum(),
        }
    }
}

fn add_factors(exponents: &mut Vec<(u32, i32)>, mut n: u32, sign: i32) {
    let mut p = 2;
    while n > 1 {
        if p * p > n {
            p = n;
        }
        while n.is_multiple_of(p) {
            n /= p;
            match exponents.binary_search_by_key(&p, |&(q, _)| q) {
                Ok(i) => exponents[i].1 += sign,
                Err(i) => exponents.insert(i, (p, sign)),
            }
        }
        p += 1;
    }
}

pub fn factored_cost<D, W>(domain: &D, weights: &W, path: &[ActionId]) -> Option<FactoredCost>
where
    D: SearchDomain,
    W: IntegerWeights<D>,
{
    let mut exponents = Vec::new();
    let mut state = domain.initial_state();
    for &action in path {
        let w = weights.weights(domain, &state);
        let numer = w.get(action.index()).copied().unwrap_or(0);
        if numer == 0 {
            return None;
        }
        add_factors(&mut exponents, w.iter().sum(), 1);
        add_factors(&mut exponents, numer, -1);
        domain.apply(&mut state, action);
    }
    if path.is_empty() {
        return Some(FactoredCost(None));
    }
    add_factors(&mut exponents, path.len() as u32, 1);
    exponents.retain(|&(_, e)| e != 0);
    Some(FactoredCost(Some(exponents)))
}

/// Whether the exact costs of the popped paths never decrease. Equal
/// factorizations are ties; well-separated logs decide the rest; anything
/// else is settled with rationals.
pub fn pops_in_order<D, W>(domain: &D, weights: &W, popped: &[(Vec<ActionId>, ExpansionOutcome)]) -> bool
where
    D: SearchDomain,
    W: IntegerWeights<D>,
{
    let mut previous: Option<(&[ActionId], FactoredCost)> = None;
    for (path, _) in popped {
        let Some(cost) = factored_cost(domain, weights, path) else {
            return false;
        };
        if let Some((prev_path, prev)) = &previous {
            if *prev != cost {
                let gap = cost.ln() - prev.ln();
                if gap < -1e-9 {
                    return false;
                }
                if gap <= 1e-9 && exact_cost(domain, weights, prev_path) > exact_cost(domain, weights, path) {
                    return false;
                }
            }
        }
        previous = Some((path, cost));
    }
    true
}
