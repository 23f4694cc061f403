//! Boxoban level text: `; <id>` headers followed by grid rows.

use std::fmt;

use thiserror::Error;

/// A parsed level. Cells are indexed `row * width + col`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Level {
    pub id: String,
    pub width: usize,
    pub height: usize,
    walls: Vec<bool>,
    goals: Vec<bool>,
    /// Sorted box cells.
    pub boxes: Vec<u16>,
    pub player: u16,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnknownChar(char),
    RaggedRow { expected: usize, got: usize },
    NoPlayer,
    MultiplePlayers,
    RowBeforeHeader,
    EmptyLevel,
    TooLarge,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnknownChar(c) => write!(f, "unknown character {c:?}"),
            ParseErrorKind::RaggedRow { expected, got } => {
                write!(f, "row has {got} cells, expected {expected}")
            }
            ParseErrorKind::NoPlayer => f.write_str("level has no player"),
            ParseErrorKind::MultiplePlayers => f.write_str("level has more than one player"),
            ParseErrorKind::RowBeforeHeader => f.write_str("grid row before any '; <id>' header"),
            ParseErrorKind::EmptyLevel => f.write_str("level has no rows"),
            ParseErrorKind::TooLarge => f.write_str("level exceeds 65536 cells"),
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("level {level}, line {line}: {kind}")]
pub struct ParseError {
    /// Level id, or empty when the error precedes the first header.
    pub level: String,
    /// 1-based line number in the input.
    pub line: usize,
    pub kind: ParseErrorKind,
}

impl Level {
    pub fn cell(&self, row: usize, col: usize) -> u16 {
        (row * self.width + col) as u16
    }

    pub fn row_col(&self, cell: u16) -> (usize, usize) {
        (cell as usize / self.width, cell as usize % self.width)
    }

    pub fn is_wall(&self, cell: u16) -> bool {
        self.walls[cell as usize]
    }

    pub fn is_goal(&self, cell: u16) -> bool {
        self.goals[cell as usize]
    }

    pub fn goal_cells(&self) -> Vec<u16> {
        (0..self.goals.len() as u16).filter(|&c| self.goals[c as usize]).collect()
    }

    /// Whether the box and goal counts differ (allowed, but suspicious).
    pub fn box_goal_mismatch(&self) -> bool {
        self.boxes.len() != self.goal_cells().len()
    }

    /// The grid with the given boxes and player in place of the level's.
    pub fn render(&self, boxes: &[u16], player: u16) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for row in 0..self.height {
            if row > 0 {
                out.push('\n');
            }
            for col in 0..self.width {
                let c = self.cell(row, col);
                let has_box = boxes.binary_search(&c).is_ok();
                let goal = self.is_goal(c);
                out.push(match (self.is_wall(c), c == player, has_box, goal) {
                    (true, _, _, _) => '#',
                    (_, true, _, true) => '+',
                    (_, true, _, false) => '@',
                    (_, _, true, true) => '*',
                    (_, _, true, false) => '$',
                    (_, _, false, true) => '.',
                    _ => ' ',
                });
            }
        }
        out
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "; {}", self.id)?;
        writeln!(f, "{}", self.render(&self.boxes, self.player))
    }
}

struct Builder {
    id: String,
    header_line: usize,
    rows: Vec<(usize, String)>,
}

impl Builder {
    fn finish(self) -> Result<Level, ParseError> {
        let err = |line, kind| ParseError {
            level: self.id.clone(),
            line,
            kind,
        };
        let Some((_, first)) = self.rows.first() else {
            return Err(err(self.header_line, ParseErrorKind::EmptyLevel));
        };
        let width = first.chars().count();
        let height = self.rows.len();
        if width * height > 1 << 16 {
            return Err(err(self.header_line, ParseErrorKind::TooLarge));
        }
        let mut walls = vec![false; width * height];
        let mut goals = vec![false; width * height];
        let mut boxes = Vec::new();
        let mut player = None;
        for (row, (line, text)) in self.rows.iter().enumerate() {
            let got = text.chars().count();
            if got != width {
                return Err(err(*line, ParseErrorKind::RaggedRow { expected: width, got }));
            }
            for (col, ch) in text.chars().enumerate() {
                let cell = row * width + col;
                let (wall, goal, has_box, has_player) = match ch {
                    '#' => (true, false, false, false),
                    ' ' => (false, false, false, false),
                    '.' => (false, true, false, false),
                    '$' => (false, false, true, false),
                    '*' => (false, true, true, false),
                    '@' => (false, false, false, true),
                    '+' => (false, true, false, true),
                    other => return Err(err(*line, ParseErrorKind::UnknownChar(other))),
                };
                walls[cell] = wall;
                goals[cell] = goal;
                if has_box {
                    boxes.push(cell as u16);
                }
                if has_player {
                    if player.is_some() {
                        return Err(err(*line, ParseErrorKind::MultiplePlayers));
                    }
                    player = Some(cell as u16);
                }
            }
        }
        let player = player.ok_or_else(|| err(self.header_line, ParseErrorKind::NoPlayer))?;
        let level = Level {
            id: self.id,
            width,
            height,
            walls,
            goals,
            boxes,
            player,
        };
        if level.box_goal_mismatch() {
            log::warn!(
                "level {}: {} boxes but {} goals",
                level.id,
                level.boxes.len(),
                level.goal_cells().len()
            );
        }
        Ok(level)
    }
}

/// Parses every level in `text`, in file order.
pub fn parse_boxoban(text: &str) -> Result<Vec<Level>, ParseError> {
    let mut levels = Vec::new();
    let mut current: Option<Builder> = None;
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if let Some(id) = raw.strip_prefix(';') {
            if let Some(done) = current.take() {
                levels.push(done.finish()?);
            }
            current = Some(Builder {
                id: id.trim().to_string(),
                header_line: line,
                rows: Vec::new(),
            });
        } else if raw.trim().is_empty() {
            // Blank lines separate levels; rows never consist of floor only
            // in well-formed files.
            if let Some(done) = current.take() {
                levels.push(done.finish()?);
            }
        } else {
            match current.as_mut() {
                Some(builder) => builder.rows.push((line, raw.to_string())),
                None => {
                    return Err(ParseError {
                        level: String::new(),
                        line,
                        kind: ParseErrorKind::RowBeforeHeader,
                    })
                }
            }
        }
    }
    if let Some(done) = current.take() {
        levels.push(done.finish()?);
    }
    Ok(levels)
}

/// Writes levels back in boxoban format, one blank line after each.
pub fn serialize_boxoban(levels: &[Level]) -> String {
    let mut out = String::new();
    for level in levels {
        out.push_str(&level.to_string());
        out.push('\n');
    }
    out
}
