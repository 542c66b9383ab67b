//! Grid mazes as Markov decision processes.

mod kernel;
mod oracle;

pub(crate) use kernel::draw_reward;
pub use kernel::{step, transitions, TransitionKernel};
pub use oracle::{bellman_update, random_policy_fidelity, value_iteration, OptimalPolicySet, OracleRow, TIE_TOL};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    StandStill,
}

impl Action {
    /// Fixed order used for tie-breaking and for machine action units.
    pub const ALL: [Action; 5] = [Action::Up, Action::Down, Action::Left, Action::Right, Action::StandStill];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Row and column offsets in screen coordinates (row 0 at the top).
    pub fn offset(self) -> (isize, isize) {
        match self {
            Action::Up => (-1, 0),
            Action::Down => (1, 0),
            Action::Left => (0, -1),
            Action::Right => (0, 1),
            Action::StandStill => (0, 0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Up => "up",
            Action::Down => "down",
            Action::Left => "left",
            Action::Right => "right",
            Action::StandStill => "stand-still",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cell {
    Neutral,
    Wall,
    Pit,
    Reward,
    StochasticReward,
}

impl Cell {
    pub fn symbol(self) -> char {
        match self {
            Cell::Neutral => '.',
            Cell::Wall => 'W',
            Cell::Pit => 'P',
            Cell::Reward => 'R',
            Cell::StochasticReward => 'S',
        }
    }

    fn from_symbol(c: char) -> Option<Self> {
        Some(match c {
            '.' => Cell::Neutral,
            'W' => Cell::Wall,
            'P' => Cell::Pit,
            'R' => Cell::Reward,
            'S' => Cell::StochasticReward,
            _ => return None,
        })
    }
}

/// Values held by each kind of cell. A stochastic cell pays
/// `stochastic_high` with probability `stochastic_p` and 0 otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellValues {
    pub neutral: f64,
    pub reward: f64,
    pub pit: f64,
    pub stochastic_high: f64,
    pub stochastic_p: f64,
}

impl Default for CellValues {
    fn default() -> Self {
        Self {
            neutral: 100.0,
            reward: 200.0,
            pit: 0.0,
            stochastic_high: 200.0,
            stochastic_p: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Maze {
    rows: usize,
    cols: usize,
    cells: Vec<Cell>,
    values: CellValues,
    gamma: f64,
    free: Vec<(usize, usize)>,
    state_of: Vec<Option<usize>>,
}

impl Maze {
    pub fn new(rows: usize, cols: usize, cells: Vec<Cell>) -> Result<Self> {
        Self::with_values(rows, cols, cells, CellValues::default(), 0.8)
    }

    pub fn with_values(rows: usize, cols: usize, cells: Vec<Cell>, values: CellValues, gamma: f64) -> Result<Self> {
        if rows == 0 || cols == 0 || cells.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                actual: cells.len(),
            });
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::Parameter(format!("discount must lie in [0, 1), got {gamma}")));
        }
        let v = values;
        if ![v.neutral, v.reward, v.pit, v.stochastic_high, v.stochastic_p].iter().all(|x| x.is_finite())
            || !(0.0..=1.0).contains(&v.stochastic_p)
        {
            return Err(Error::Parameter("cell values must be finite and the stochastic probability in [0, 1]".into()));
        }
        let mut free = Vec::new();
        let mut state_of = vec![None; cells.len()];
        for (k, cell) in cells.iter().enumerate() {
            if *cell != Cell::Wall {
                state_of[k] = Some(free.len());
                free.push((k / cols, k % cols));
            }
        }
        if free.is_empty() {
            return Err(Error::Parameter("maze has no free cell".into()));
        }
        Ok(Self {
            rows,
            cols,
            cells,
            values,
            gamma,
            free,
            state_of,
        })
    }

    /// The `n × 5` family: reward top-left, pit at `(n−1, 2)`, stochastic
    /// rewards at `(0, 4)` and `(n−1, 0)`, walls at `(k, 2)` for `k = 1..n−2`.
    pub fn nx5(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!("the n x 5 family needs n >= 2, got {n}")));
        }
        let mut cells = vec![Cell::Neutral; n * 5];
        cells[0] = Cell::Reward;
        cells[4] = Cell::StochasticReward;
        cells[(n - 1) * 5] = Cell::StochasticReward;
        cells[(n - 1) * 5 + 2] = Cell::Pit;
        for k in 1..n - 1 {
            cells[k * 5 + 2] = Cell::Wall;
        }
        Self::new(n, 5, cells)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn values(&self) -> &CellValues {
        &self.values
    }

    pub fn cell(&self, row: usize, col: usize) -> Option<Cell> {
        (row < self.rows && col < self.cols).then(|| self.cells[row * self.cols + col])
    }

    /// Number of free (non-wall) cells, which are the MDP states.
    pub fn n_states(&self) -> usize {
        self.free.len()
    }

    /// `(row, col)` of a state; states are free cells in row-major order.
    pub fn position(&self, state: usize) -> (usize, usize) {
        self.free[state]
    }

    pub fn state_at(&self, row: usize, col: usize) -> Result<usize> {
        if row >= self.rows || col >= self.cols {
            return Err(Error::Parameter(format!("({row}, {col}) is outside the {}x{} maze", self.rows, self.cols)));
        }
        self.state_of[row * self.cols + col].ok_or(Error::Wall { row, col })
    }

    pub fn cell_of(&self, state: usize) -> Cell {
        let (r, c) = self.free[state];
        self.cells[r * self.cols + c]
    }

    /// Destination of `action` from `state`, or `None` if it leaves the grid
    /// or enters a wall.
    pub fn destination(&self, state: usize, action: Action) -> Option<usize> {
        let (r, c) = self.free[state];
        let (dr, dc) = action.offset();
        let (nr, nc) = (r.checked_add_signed(dr)?, c.checked_add_signed(dc)?);
        if nr >= self.rows || nc >= self.cols {
            return None;
        }
        self.state_of[nr * self.cols + nc]
    }

    pub fn admissible_actions(&self, state: usize) -> Vec<Action> {
        Action::ALL
            .into_iter()
            .filter(|&a| self.destination(state, a).is_some())
            .collect()
    }

    /// Admissible actions of the free cell at `(row, col)`.
    pub fn admissible_at(&self, row: usize, col: usize) -> Result<Vec<Action>> {
        Ok(self.admissible_actions(self.state_at(row, col)?))
    }

    pub fn is_admissible(&self, state: usize, action: Action) -> bool {
        self.destination(state, action).is_some()
    }

    /// Expected value held by the cell of `state`.
    pub fn expected_value(&self, state: usize) -> f64 {
        let v = &self.values;
        match self.cell_of(state) {
            Cell::Neutral => v.neutral,
            Cell::Pit => v.pit,
            Cell::Reward => v.reward,
            Cell::StochasticReward => v.stochastic_high * v.stochastic_p,
            Cell::Wall => unreachable!("walls are not states"),
        }
    }

    /// The same maze with `shift` added to every deterministic cell value
    /// and to both outcomes of stochastic cells.
    pub fn shifted(&self, shift: f64) -> Result<Self> {
        let v = self.values;
        if v.stochastic_p != 0.5 && shift != 0.0 {
            return Err(Error::Parameter("shift of stochastic cells assumes a fair draw".into()));
        }
        let values = CellValues {
            neutral: v.neutral + shift,
            reward: v.reward + shift,
            pit: v.pit + shift,
            // a fair draw between 0 and H shifted by c is a fair draw between
            // c and H + c; keep the expectation exact by shifting H by 2c
            stochastic_high: v.stochastic_high + 2.0 * shift,
            stochastic_p: v.stochastic_p,
        };
        Self::with_values(self.rows, self.cols, self.cells.clone(), values, self.gamma)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.cols + 1) * self.rows);
        for row in self.cells.chunks(self.cols) {
            out.extend(row.iter().map(|c| c.symbol()));
            out.push('\n');
        }
        out
    }
}

impl FromStr for Maze {
    type Err = Error;

    /// Parses a rectangular block over `. W R P S`, one row per line.
    fn from_str(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
        let end = lines.iter().rposition(|l| !l.is_empty()).map_or(0, |i| i + 1);
        let lines = &lines[..end];
        if lines.is_empty() {
            return Err(Error::Parse {
                line: 1,
                message: "empty maze".into(),
            });
        }
        let cols = lines[0].chars().count();
        let mut cells = Vec::with_capacity(cols * lines.len());
        for (i, line) in lines.iter().enumerate() {
            if line.chars().count() != cols {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("row has {} cells, expected {cols}", line.chars().count()),
                });
            }
            for ch in line.chars() {
                cells.push(Cell::from_symbol(ch).ok_or_else(|| Error::Parse {
                    line: i + 1,
                    message: format!("unknown cell symbol {ch:?}"),
                })?);
            }
        }
        Self::new(lines.len(), cols, cells)
    }
}

pub fn parse_maze(text: &str) -> Result<Maze> {
    text.parse()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const REFERENCE_MAZE: &str = "R....\n..W..\n..P..\n";

    #[test]
    fn parse_small() {
        let m = parse_maze("R..\n.W.\n..P").unwrap();
        assert_eq!((m.rows(), m.cols(), m.n_states()), (3, 3, 8));
        assert_eq!(m.cell(0, 0), Some(Cell::Reward));
        assert_eq!(m.cell(1, 1), Some(Cell::Wall));
        assert_eq!(m.cell(2, 2), Some(Cell::Pit));
        assert_eq!(m.to_text(), "R..\n.W.\n..P\n");
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_maze(""), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_maze("R..\n.W\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_maze("R.X\n"), Err(Error::Parse { line: 1, .. })));
        assert!(parse_maze("WW\nWW").is_err());
        assert!(parse_maze("R.\r\n.P\r\n").is_ok());
    }

    #[test]
    fn reference_mazes() {
        let a = parse_maze(REFERENCE_MAZE).unwrap();
        assert_eq!(a.n_states(), 14);
        let b = parse_maze("R...S\n..W..\nS.P..").unwrap();
        assert_eq!(b.cell(2, 0), Some(Cell::StochasticReward));
        assert_eq!(b.cell(0, 4), Some(Cell::StochasticReward));
        assert_eq!(Maze::nx5(3).unwrap(), b);
    }

    #[test]
    fn nx5_family_layout() {
        let m = Maze::nx5(7).unwrap();
        assert_eq!(m.to_text(), "R...S\n..W..\n..W..\n..W..\n..W..\n..W..\nS.P..\n");
        assert_eq!(m.n_states(), 35 - 5);
        assert!(Maze::nx5(1).is_err());
    }

    #[test]
    fn admissibility() {
        let m = parse_maze("...\n...\n...").unwrap();
        assert_eq!(m.admissible_at(1, 1).unwrap(), Action::ALL.to_vec());
        assert_eq!(m.admissible_at(0, 0).unwrap(), vec![Action::Down, Action::Right, Action::StandStill]);
        let fig = parse_maze(REFERENCE_MAZE).unwrap();
        assert!(!fig.admissible_at(1, 1).unwrap().contains(&Action::Right));
        assert!(!fig.admissible_at(0, 2).unwrap().contains(&Action::Down));
        assert!(matches!(fig.admissible_at(1, 2), Err(Error::Wall { row: 1, col: 2 })));
    }

    #[test]
    fn state_indexing() {
        let m = parse_maze(REFERENCE_MAZE).unwrap();
        assert_eq!(m.state_at(1, 3).unwrap(), 7);
        assert_eq!(m.position(7), (1, 3));
        for s in 0..m.n_states() {
            let (r, c) = m.position(s);
            assert_eq!(m.state_at(r, c).unwrap(), s);
        }
    }

    #[test]
    fn expected_values() {
        let m = Maze::nx5(3).unwrap();
        assert_eq!(m.expected_value(m.state_at(0, 0).unwrap()), 200.0);
        assert_eq!(m.expected_value(m.state_at(0, 4).unwrap()), 100.0);
        assert_eq!(m.expected_value(m.state_at(2, 2).unwrap()), 0.0);
        assert_eq!(m.expected_value(m.state_at(1, 1).unwrap()), 100.0);
        let s = m.shifted(5.0).unwrap();
        assert_eq!(s.expected_value(s.state_at(0, 4).unwrap()), 105.0);
    }

    #[test]
    fn action_names() {
        assert_eq!(serde_json::to_string(&Action::StandStill).unwrap(), "\"stand-still\"");
        assert_eq!(Action::from_index(2), Some(Action::Left));
        assert_eq!(Action::Right.index(), 3);
    }
}
