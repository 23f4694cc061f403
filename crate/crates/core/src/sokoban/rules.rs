//! Sokoban as a search domain. Blocked moves leave the state unchanged so
//! the transition function stays total.

use std::sync::Arc;

use crate::search::{ActionId, SearchDomain};
use crate::sokoban::level::Level;

pub const UP: ActionId = ActionId(0);
pub const DOWN: ActionId = ActionId(1);
pub const LEFT: ActionId = ActionId(2);
pub const RIGHT: ActionId = ActionId(3);

pub const ACTION_NAMES: [&str; 4] = ["up", "down", "left", "right"];

/// The mutable part of a position. Boxes are kept sorted, which makes the
/// derived `Eq`/`Hash` a canonical identity.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SokobanState {
    pub boxes: Vec<u16>,
    pub player: u16,
}

#[derive(Clone, Debug)]
pub struct SokobanDomain {
    level: Arc<Level>,
}

impl SokobanDomain {
    pub fn new(level: Level) -> Self {
        SokobanDomain {
            level: Arc::new(level),
        }
    }

    pub fn from_shared(level: Arc<Level>) -> Self {
        SokobanDomain { level }
    }

    pub fn level(&self) -> &Level {
        &self.level
    }

    /// The cell one step from `cell` in direction `action`, if on the grid.
    fn step(&self, cell: u16, action: ActionId) -> Option<u16> {
        let (row, col) = self.level.row_col(cell);
        let (row, col) = match action {
            UP => (row.checked_sub(1)?, col),
            DOWN => (row + 1, col),
            LEFT => (row, col.checked_sub(1)?),
            RIGHT => (row, col + 1),
            _ => return None,
        };
        (row < self.level.height && col < self.level.width).then(|| self.level.cell(row, col))
    }

    fn open(&self, cell: u16) -> bool {
        !self.level.is_wall(cell)
    }

    /// Grid rendering of `state`; the policy-bridge state encoding.
    pub fn encode_state(&self, state: &SokobanState) -> String {
        self.level.render(&state.boxes, state.player)
    }

    /// Whether every box cell is on the floor and the player is on a free
    /// floor cell.
    pub fn is_valid_state(&self, state: &SokobanState) -> bool {
        let cells = (self.level.width * self.level.height) as u16;
        state.player < cells
            && self.open(state.player)
            && state.boxes.windows(2).all(|w| w[0] < w[1])
            && state.boxes.iter().all(|&b| b < cells && self.open(b) && b != state.player)
    }
}

impl SearchDomain for SokobanDomain {
    type State = SokobanState;
    type Key = SokobanState;

    fn action_count(&self) -> usize {
        4
    }

    fn initial_state(&self) -> SokobanState {
        SokobanState {
            boxes: self.level.boxes.clone(),
            player: self.level.player,
        }
    }

    fn transition(&self, state: &SokobanState, action: ActionId) -> SokobanState {
        let mut next = state.clone();
        self.apply(&mut next, action);
        next
    }

    fn apply(&self, state: &mut SokobanState, action: ActionId) {
        let Some(target) = self.step(state.player, action).filter(|&c| self.open(c)) else {
            return;
        };
        match state.boxes.binary_search(&target) {
            Err(_) => state.player = target,
            Ok(index) => {
                let Some(beyond) = self.step(target, action) else {
                    return;
                };
                if !self.open(beyond) || state.boxes.binary_search(&beyond).is_ok() {
                    return;
                }
                state.boxes.remove(index);
                let at = state.boxes.binary_search(&beyond).unwrap_err();
                state.boxes.insert(at, beyond);
                state.player = target;
            }
        }
    }

    fn is_goal(&self, state: &SokobanState) -> bool {
        state.boxes.iter().all(|&b| self.level.is_goal(b))
    }

    fn state_key(&self, state: &SokobanState) -> SokobanState {
        state.clone()
    }
}
