//! Policy combinators: Bayes mixtures with per-trajectory posterior weights
//! and local (per-step) mixtures with a fixed or depth-dependent rate.

use thiserror::Error;

use crate::search::{Evaluation, Policy, PolicyContext, PolicyError, SearchDomain, TrajectoryNode};

#[derive(Debug, Error, PartialEq)]
pub enum MixError {
    #[error("a mixture needs at least one component")]
    Empty,
    #[error("{priors} priors for {components} components")]
    PriorCount { components: usize, priors: usize },
    #[error("prior {0} is not positive and finite")]
    InvalidPrior(f64),
    #[error("priors sum to {0}, expected 1")]
    PriorSum(f64),
    #[error("mixing rate {0} is outside [0, 1]")]
    InvalidRate(f64),
    #[error("mixing exponent {0} is negative or not finite")]
    InvalidExponent(f64),
}

/// Posterior weights carried by each node of a Bayes mixture, plus the
/// contexts of the components themselves.
#[derive(Clone, Debug)]
struct Posterior {
    log_weights: Vec<f64>,
    components: Vec<PolicyContext>,
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `pi(n) = sum_i alpha_i pi_i(n)` over whole trajectories. The conditional
/// at a node weighs each component by its posterior given the actions so
/// far, so the mixture depends on the trajectory even when every component
/// is Markov.
#[derive(Clone, Debug)]
pub struct BayesMixture<P> {
    components: Vec<P>,
    priors: Vec<f64>,
}

impl<P> BayesMixture<P> {
    pub fn components(&self) -> &[P] {
        &self.components
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }
}

/// Builds a Bayes mixture; `priors = None` means uniform priors.
pub fn bayes_mix<P>(components: Vec<P>, priors: Option<Vec<f64>>) -> Result<BayesMixture<P>, MixError> {
    if components.is_empty() {
        return Err(MixError::Empty);
    }
    let priors = match priors {
        None => vec![1.0 / components.len() as f64; components.len()],
        Some(priors) => {
            if priors.len() != components.len() {
                return Err(MixError::PriorCount {
                    components: components.len(),
                    priors: priors.len(),
                });
            }
            if let Some(&bad) = priors.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
                return Err(MixError::InvalidPrior(bad));
            }
            let sum: f64 = priors.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(MixError::PriorSum(sum));
            }
            priors
        }
    };
    Ok(BayesMixture { components, priors })
}

impl<D, P> Policy<D> for BayesMixture<P>
where
    D: SearchDomain + ?Sized,
    P: Policy<D>,
{
    fn is_markov(&self) -> bool {
        false
    }

    fn root_context(&self, domain: &D) -> PolicyContext {
        PolicyContext::new(Posterior {
            log_weights: self.priors.iter().map(|p| p.ln()).collect(),
            components: self.components.iter().map(|c| c.root_context(domain)).collect(),
        })
    }

    fn evaluate(&self, domain: &D, node: &TrajectoryNode<D::State>) -> Result<Evaluation, PolicyError> {
        let fallback;
        let posterior = match node.context().get::<Posterior>() {
            Some(p) => p,
            None => {
                // A node built without the mixture's root context: treat it
                // as the root.
                fallback = Posterior {
                    log_weights: self.priors.iter().map(|p| p.ln()).collect(),
                    components: vec![PolicyContext::none(); self.components.len()],
                };
                &fallback
            }
        };
        let count = domain.action_count();
        let mut evaluations = Vec::with_capacity(self.components.len());
        for (component, context) in self.components.iter().zip(&posterior.components) {
            let eval = component.evaluate(domain, &node.with_context(context.clone()))?;
            crate::search::validate_conditionals(&eval.probs, count)?;
            evaluations.push(eval);
        }

        // Components that dead-end here drop out; the rest are renormalized.
        let alive: Vec<bool> = evaluations.iter().map(|e| !e.is_dead_end()).collect();
        let alive_weights: Vec<f64> = posterior
            .log_weights
            .iter()
            .zip(&alive)
            .map(|(&w, &a)| if a { w } else { f64::NEG_INFINITY })
            .collect();
        let log_norm = log_sum_exp(&alive_weights);
        if log_norm == f64::NEG_INFINITY {
            return Ok(Evaluation::new(vec![0.0; count]));
        }
        let weights: Vec<f64> = alive_weights.iter().map(|w| (w - log_norm).exp()).collect();

        let mut probs = vec![0.0; count];
        for (w, eval) in weights.iter().zip(&evaluations) {
            for (p, q) in probs.iter_mut().zip(&eval.probs) {
                *p += w * q;
            }
        }

        let contexts = (0..count)
            .map(|a| {
                if probs[a] <= 0.0 {
                    return PolicyContext::none();
                }
                let unnormalized: Vec<f64> = alive_weights
                    .iter()
                    .zip(&evaluations)
                    .map(|(w, e)| w + e.probs[a].ln())
                    .collect();
                let norm = log_sum_exp(&unnormalized);
                PolicyContext::new(Posterior {
                    log_weights: unnormalized.iter().map(|w| w - norm).collect(),
                    components: evaluations
                        .iter()
                        .map(|e| e.child_context(crate::search::ActionId::from(a)))
                        .collect(),
                })
            })
            .collect();
        Ok(Evaluation::with_contexts(probs, contexts))
    }
}

/// Posterior weight of each component at `node`, if the node carries a
/// Bayes-mixture context.
pub fn posterior_weights(node_context: &PolicyContext) -> Option<Vec<f64>> {
    node_context
        .get::<Posterior>()
        .map(|p| p.log_weights.iter().map(|w| w.exp()).collect())
}

/// Weight given to the first component at each step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MixRate {
    /// Constant `eps`.
    Fixed(f64),
    /// `eps_t` with `1 - eps_t = (t/(t+1))^gamma` for the `t`-th action.
    Varying(f64),
}

impl MixRate {
    /// Weight of the first component for the action taken at a node of
    /// the given depth (the `t = depth + 1`-th action).
    pub fn epsilon(self, depth: usize) -> f64 {
        match self {
            MixRate::Fixed(eps) => eps,
            MixRate::Varying(gamma) => {
                let t = depth as f64 + 1.0;
                1.0 - (t / (t + 1.0)).powf(gamma)
            }
        }
    }
}

#[derive(Clone, Debug)]
struct PairContext {
    first: PolicyContext,
    second: PolicyContext,
}

/// `eps_t pi1(a|n) + (1 - eps_t) pi2(a|n)` at every step.
#[derive(Clone, Debug)]
pub struct LocalMix<P1, P2> {
    first: P1,
    second: P2,
    rate: MixRate,
}

impl<P1, P2> LocalMix<P1, P2> {
    pub fn rate(&self) -> MixRate {
        self.rate
    }
}

pub fn local_mix_fixed<P1, P2>(first: P1, second: P2, epsilon: f64) -> Result<LocalMix<P1, P2>, MixError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(MixError::InvalidRate(epsilon));
    }
    Ok(LocalMix {
        first,
        second,
        rate: MixRate::Fixed(epsilon),
    })
}

pub fn local_mix_varying<P1, P2>(first: P1, second: P2, gamma: f64) -> Result<LocalMix<P1, P2>, MixError> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(MixError::InvalidExponent(gamma));
    }
    Ok(LocalMix {
        first,
        second,
        rate: MixRate::Varying(gamma),
    })
}

impl<D, P1, P2> Policy<D> for LocalMix<P1, P2>
where
    D: SearchDomain + ?Sized,
    P1: Policy<D>,
    P2: Policy<D>,
{
    fn is_markov(&self) -> bool {
        matches!(self.rate, MixRate::Fixed(_)) && self.first.is_markov() && self.second.is_markov()
    }

    fn root_context(&self, domain: &D) -> PolicyContext {
        let first = self.first.root_context(domain);
        let second = self.second.root_context(domain);
        if first.is_none() && second.is_none() {
            PolicyContext::none()
        } else {
            PolicyContext::new(PairContext { first, second })
        }
    }

    fn evaluate(&self, domain: &D, node: &TrajectoryNode<D::State>) -> Result<Evaluation, PolicyError> {
        let count = domain.action_count();
        let (e1, e2) = match node.context().get::<PairContext>() {
            Some(pair) => (
                self.first.evaluate(domain, &node.with_context(pair.first.clone()))?,
                self.second.evaluate(domain, &node.with_context(pair.second.clone()))?,
            ),
            None => (self.first.evaluate(domain, node)?, self.second.evaluate(domain, node)?),
        };
        crate::search::validate_conditionals(&e1.probs, count)?;
        crate::search::validate_conditionals(&e2.probs, count)?;

        let eps = match (e1.is_dead_end(), e2.is_dead_end()) {
            (true, true) => return Ok(Evaluation::new(vec![0.0; count])),
            (true, false) => 0.0,
            (false, true) => 1.0,
            (false, false) => self.rate.epsilon(node.depth()),
        };
        let probs: Vec<f64> = e1
            .probs
            .iter()
            .zip(&e2.probs)
            .map(|(p, q)| eps * p + (1.0 - eps) * q)
            .collect();
        if e1.child_contexts.is_none() && e2.child_contexts.is_none() {
            return Ok(Evaluation::new(probs));
        }
        let contexts = (0..count)
            .map(|a| {
                let a = crate::search::ActionId::from(a);
                PolicyContext::new(PairContext {
                    first: e1.child_context(a),
                    second: e2.child_context(a),
                })
            })
            .collect();
        Ok(Evaluation::with_contexts(probs, contexts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::ActionId;
    use crate::synthetic::{FullBinaryTreeDomain, RandomTreeDomain, UniformPolicy};

    /// Fixed conditionals at every node.
    struct Constant(Vec<f64>);

    impl<D: SearchDomain> Policy<D> for Constant {
        fn is_markov(&self) -> bool {
            true
        }
        fn evaluate(&self, _: &D, _: &TrajectoryNode<D::State>) -> Result<Evaluation, PolicyError> {
            Ok(Evaluation::new(self.0.clone()))
        }
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn bayes_root_and_posterior() {
        let domain = FullBinaryTreeDomain::needle(vec![ActionId(0); 3]);
        let components: Vec<Box<dyn Policy<FullBinaryTreeDomain>>> =
            vec![Box::new(Constant(vec![0.9, 0.1])), Box::new(UniformPolicy)];
        let mix = bayes_mix(
            components,
            Some(vec![0.5, 0.5]),
        )
        .unwrap();
        let root = TrajectoryNode::root_of(&domain, &mix);
        let eval = mix.evaluate(&domain, &root).unwrap();
        assert!(close(eval.probs[0], 0.7) && close(eval.probs[1], 0.3));
        let child = root.child(&domain, &eval, ActionId(0)).unwrap();
        let w = posterior_weights(child.context()).unwrap();
        assert!(close(w[0], 9.0 / 14.0));
        assert!(!Policy::<FullBinaryTreeDomain>::is_markov(&mix));
    }

    #[test]
    fn bayes_rejects_bad_priors() {
        assert_eq!(bayes_mix::<UniformPolicy>(vec![], None).unwrap_err(), MixError::Empty);
        assert!(bayes_mix(vec![UniformPolicy], Some(vec![0.5])).is_err());
        assert!(bayes_mix(vec![UniformPolicy, UniformPolicy], Some(vec![1.0])).is_err());
        assert!(bayes_mix(vec![UniformPolicy, UniformPolicy], Some(vec![1.5, -0.5])).is_err());
    }

    #[test]
    fn local_fixed_noise() {
        let domain = RandomTreeDomain::new(4, vec![]);
        let mix = local_mix_fixed(Constant(vec![0.25; 4]), Constant(vec![0.0, 1.0, 0.0, 0.0]), 0.01).unwrap();
        let root = TrajectoryNode::root(domain.initial_state(), PolicyContext::none());
        let eval = Policy::<RandomTreeDomain>::evaluate(&mix, &domain, &root).unwrap();
        assert!(close(eval.probs[0], 0.0025));
        assert!(close(eval.probs[1], 0.0025 + 0.99));
    }

    #[test]
    fn varying_rate_values() {
        assert!(close(MixRate::Varying(1.0).epsilon(0), 0.5));
        let discount: f64 = (0..9).map(|d| 1.0 - MixRate::Varying(2.0).epsilon(d)).product();
        assert!(close(discount, 0.01));
        assert!(local_mix_varying(UniformPolicy, UniformPolicy, -1.0).is_err());
        assert!(local_mix_fixed(UniformPolicy, UniformPolicy, 1.5).is_err());
    }

    #[test]
    fn markov_flags() {
        let fixed = local_mix_fixed(UniformPolicy, UniformPolicy, 0.1).unwrap();
        let varying = local_mix_varying(UniformPolicy, UniformPolicy, 1.0).unwrap();
        assert!(Policy::<FullBinaryTreeDomain>::is_markov(&fixed));
        assert!(!Policy::<FullBinaryTreeDomain>::is_markov(&varying));
    }
}
