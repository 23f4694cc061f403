//! Sokoban: boxoban level files, the move rules, and a BFS oracle.

pub mod bfs;
pub mod level;
pub mod rules;

pub use bfs::{bfs_counted, bfs_domain, bfs_oracle, BfsOutcome};
pub use level::{parse_boxoban, serialize_boxoban, Level, ParseError, ParseErrorKind};
pub use rules::{SokobanDomain, SokobanState, ACTION_NAMES, DOWN, LEFT, RIGHT, UP};
