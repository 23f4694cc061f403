//! Breadth-first shortest-solution oracle over Sokoban states.

use std::collections::{HashSet, VecDeque};

use crate::search::{ActionId, SearchDomain};
use crate::sokoban::level::Level;
use crate::sokoban::rules::SokobanDomain;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BfsOutcome {
    /// Optimal number of moves.
    Solved(usize),
    /// Every reachable state was visited without reaching a goal.
    Unsolvable,
    /// More than `budget` states would have to be expanded.
    BudgetExceeded,
}

impl BfsOutcome {
    pub fn solution_length(self) -> Option<usize> {
        match self {
            BfsOutcome::Solved(n) => Some(n),
            _ => None,
        }
    }
}

/// Shortest solution length for `level`, expanding at most `budget` states.
pub fn bfs_oracle(level: &Level, budget: usize) -> BfsOutcome {
    bfs_domain(&SokobanDomain::new(level.clone()), budget)
}

pub fn bfs_domain(domain: &SokobanDomain, budget: usize) -> BfsOutcome {
    bfs_counted(domain, budget).0
}

/// [`bfs_domain`] plus the number of states expanded.
pub fn bfs_counted(domain: &SokobanDomain, budget: usize) -> (BfsOutcome, usize) {
    let start = domain.initial_state();
    if domain.is_goal(&start) {
        return (BfsOutcome::Solved(0), 0);
    }
    let mut seen = HashSet::new();
    seen.insert(start.clone());
    let mut queue = VecDeque::from([(start, 0usize)]);
    let mut expanded = 0usize;
    while let Some((state, depth)) = queue.pop_front() {
        if expanded == budget {
            return (BfsOutcome::BudgetExceeded, expanded);
        }
        expanded += 1;
        for a in 0..domain.action_count() {
            let next = domain.transition(&state, ActionId::from(a));
            if domain.is_goal(&next) {
                return (BfsOutcome::Solved(depth + 1), expanded);
            }
            if seen.insert(next.clone()) {
                queue.push_back((next, depth + 1));
            }
        }
    }
    (BfsOutcome::Unsolvable, expanded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sokoban::level::parse_boxoban;

    fn level(text: &str) -> Level {
        parse_boxoban(text).unwrap().remove(0)
    }

    #[test]
    fn examples() {
        assert_eq!(
            bfs_oracle(&level("; one\n#####\n#@$.#\n#   #\n#   #\n#####\n"), 1000),
            BfsOutcome::Solved(1)
        );
        assert_eq!(bfs_oracle(&level("; s\n#####\n#@*.#\n#####\n"), 10), BfsOutcome::Solved(0));
        assert_eq!(
            bfs_oracle(&level("; c\n#####\n#$  #\n# @.#\n#   #\n#####\n"), 10_000),
            BfsOutcome::Unsolvable
        );
        assert_eq!(
            bfs_oracle(&level("; c\n#####\n#$  #\n# @.#\n#   #\n#####\n"), 2),
            BfsOutcome::BudgetExceeded
        );
    }
}
