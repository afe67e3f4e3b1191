//! Payoff matrices of 2×2 games, their permutation symmetries, and the
//! ordinal (Robinson–Goforth) topology.
//!
//! Layout: the row player chooses `A` or `B`, the column player `C` or `D`.
//! `row = [a, b, c, d]` are the row player's payoffs at `(A,C), (A,D), (B,C),
//! (B,D)`; `col = [x, y, z, w]` are the column player's payoffs at the same
//! four cells.

use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PAYOFF_MAX: i32 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Row,
    Col,
}

impl Role {
    pub fn opponent(self) -> Role {
        match self {
            Role::Row => Role::Col,
            Role::Col => Role::Row,
        }
    }

    /// The role's first-listed action (`A` for row, `C` for column).
    pub fn first(self) -> Action {
        match self {
            Role::Row => Action::A,
            Role::Col => Action::C,
        }
    }

    pub fn second(self) -> Action {
        match self {
            Role::Row => Action::B,
            Role::Col => Action::D,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Row => "row",
            Role::Col => "col",
        }
    }
}

impl core::str::FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "row" | "Row" | "ROW" => Ok(Role::Row),
            "col" | "Col" | "COL" | "column" => Ok(Role::Col),
            other => Err(Error::InvalidInput(alloc::format!("unknown role {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    A,
    B,
    C,
    D,
}

impl Action {
    pub fn role(self) -> Role {
        match self {
            Action::A | Action::B => Role::Row,
            Action::C | Action::D => Role::Col,
        }
    }

    pub fn is_first(self) -> bool {
        matches!(self, Action::A | Action::C)
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Action::A => "A",
            Action::B => "B",
            Action::C => "C",
            Action::D => "D",
        };
        f.write_str(s)
    }
}

/// A small set of actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ActionSet(u8);

impl ActionSet {
    pub fn empty() -> Self {
        ActionSet(0)
    }

    pub fn insert(&mut self, a: Action) {
        self.0 |= a.bit();
    }

    pub fn contains(self, a: Action) -> bool {
        self.0 & a.bit() != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Action> {
        [Action::A, Action::B, Action::C, Action::D]
            .into_iter()
            .filter(move |a| self.contains(*a))
    }
}

impl<const N: usize> From<[Action; N]> for ActionSet {
    fn from(actions: [Action; N]) -> Self {
        let mut s = ActionSet::empty();
        for a in actions {
            s.insert(a);
        }
        s
    }
}

/// Row and/or column swap of the displayed payoff matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Permutation {
    pub swap_rows: bool,
    pub swap_cols: bool,
}

impl Permutation {
    pub const IDENTITY: Permutation = Permutation { swap_rows: false, swap_cols: false };
    pub const ROWS: Permutation = Permutation { swap_rows: true, swap_cols: false };
    pub const COLS: Permutation = Permutation { swap_rows: false, swap_cols: true };
    pub const BOTH: Permutation = Permutation { swap_rows: true, swap_cols: true };

    pub const ALL: [Permutation; 4] =
        [Permutation::IDENTITY, Permutation::ROWS, Permutation::COLS, Permutation::BOTH];

    pub fn compose(self, other: Permutation) -> Permutation {
        Permutation {
            swap_rows: self.swap_rows ^ other.swap_rows,
            swap_cols: self.swap_cols ^ other.swap_cols,
        }
    }

    /// Translate a permutation of the matrix as displayed to `role` (who
    /// always sees themselves as the row player) into canonical coordinates.
    pub fn from_perspective(self, role: Role) -> Permutation {
        match role {
            Role::Row => self,
            Role::Col => Permutation { swap_rows: self.swap_cols, swap_cols: self.swap_rows },
        }
    }

    /// Whether the permutation exchanges `role`'s own two actions.
    pub fn flips(self, role: Role) -> bool {
        match role {
            Role::Row => self.swap_rows,
            Role::Col => self.swap_cols,
        }
    }
}

/// Real-valued payoffs in the same layout as [`GameMatrix`]. Behavioral
/// models and solvers work on this view so that they also accept scaled or
/// translated payoffs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Payoffs {
    pub row: [f64; 4],
    pub col: [f64; 4],
}

impl Payoffs {
    pub fn new(row: [f64; 4], col: [f64; 4]) -> Self {
        Payoffs { row, col }
    }

    pub fn permute(&self, p: Permutation) -> Payoffs {
        Payoffs { row: permute4(self.row, p), col: permute4(self.col, p) }
    }

    pub fn transpose(&self) -> Payoffs {
        let [a, b, c, d] = self.row;
        let [x, y, z, w] = self.col;
        Payoffs { row: [x, z, y, w], col: [a, c, b, d] }
    }

    /// The game as seen by `role` playing rows.
    pub fn perspective(&self, role: Role) -> Payoffs {
        match role {
            Role::Row => *self,
            Role::Col => self.transpose(),
        }
    }

    /// `role`'s own payoffs arranged as `[own1 vs opp1, own1 vs opp2,
    /// own2 vs opp1, own2 vs opp2]`.
    pub fn own(&self, role: Role) -> [f64; 4] {
        self.perspective(role).row
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Payoffs {
        Payoffs { row: self.row.map(&f), col: self.col.map(&f) }
    }

    /// Payoff to `role` at the cell `(row_action, col_action)`.
    pub fn payoff(&self, role: Role, row_action: Action, col_action: Action) -> f64 {
        let i = cell_index(row_action, col_action);
        match role {
            Role::Row => self.row[i],
            Role::Col => self.col[i],
        }
    }
}

/// Index of the cell `(row_action, col_action)` in the 4-payoff layout.
pub fn cell_index(row_action: Action, col_action: Action) -> usize {
    let r = if row_action == Action::A { 0 } else { 2 };
    let c = if col_action == Action::C { 0 } else { 1 };
    r + c
}

pub(crate) fn permute4<T: Copy>(v: [T; 4], p: Permutation) -> [T; 4] {
    let [mut a, mut b, mut c, mut d] = v;
    if p.swap_rows {
        core::mem::swap(&mut a, &mut c);
        core::mem::swap(&mut b, &mut d);
    }
    if p.swap_cols {
        core::mem::swap(&mut a, &mut b);
        core::mem::swap(&mut c, &mut d);
    }
    [a, b, c, d]
}

/// Anything that can be viewed as real-valued payoffs.
pub trait AsPayoffs {
    fn payoffs(&self) -> Payoffs;
}

impl AsPayoffs for Payoffs {
    fn payoffs(&self) -> Payoffs {
        *self
    }
}

impl AsPayoffs for GameMatrix {
    fn payoffs(&self) -> Payoffs {
        Payoffs { row: self.row.map(f64::from), col: self.col.map(f64::from) }
    }
}

impl<T: AsPayoffs> AsPayoffs for &T {
    fn payoffs(&self) -> Payoffs {
        (**self).payoffs()
    }
}

/// One 2×2 game: eight integer payoffs plus an opaque id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameMatrix {
    pub id: String,
    pub row: [i32; 4],
    pub col: [i32; 4],
}

impl GameMatrix {
    /// Builds a game and checks every payoff lies in `[1, PAYOFF_MAX]`.
    pub fn new(id: impl Into<String>, row: [i32; 4], col: [i32; 4]) -> Result<Self> {
        let g = GameMatrix { id: id.into(), row, col };
        g.validate(PAYOFF_MAX)?;
        Ok(g)
    }

    /// Builds a game without range checks (features and solvers accept any
    /// integers).
    pub fn unchecked(id: impl Into<String>, row: [i32; 4], col: [i32; 4]) -> Self {
        GameMatrix { id: id.into(), row, col }
    }

    pub fn validate(&self, max: i32) -> Result<()> {
        for &v in self.row.iter().chain(self.col.iter()) {
            if !(1..=max).contains(&v) {
                return Err(Error::PayoffOutOfRange { value: v, max });
            }
        }
        Ok(())
    }

    pub fn apply_permutation(&self, p: Permutation) -> GameMatrix {
        GameMatrix { id: self.id.clone(), row: permute4(self.row, p), col: permute4(self.col, p) }
    }

    /// The game as seen by the column player acting as row player.
    pub fn transpose_perspective(&self) -> GameMatrix {
        let [a, b, c, d] = self.row;
        let [x, y, z, w] = self.col;
        GameMatrix { id: self.id.clone(), row: [x, z, y, w], col: [a, c, b, d] }
    }

    pub fn perspective(&self, role: Role) -> GameMatrix {
        match role {
            Role::Row => self.clone(),
            Role::Col => self.transpose_perspective(),
        }
    }

    /// The eight payoffs in layout order: row then column.
    pub fn flat(&self) -> [i32; 8] {
        let [a, b, c, d] = self.row;
        let [x, y, z, w] = self.col;
        [a, b, c, d, x, y, z, w]
    }

    pub fn classify_topology(&self) -> Result<Topology> {
        classify_topology(self)
    }
}

pub fn apply_permutation(g: &GameMatrix, p: Permutation) -> GameMatrix {
    g.apply_permutation(p)
}

pub fn transpose_perspective(g: &GameMatrix) -> GameMatrix {
    g.transpose_perspective()
}

/// The twelve strict orderings of one player's payoffs, named as in the
/// Robinson–Goforth topology (row-player view of `a, b, c, d`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OrderGraph {
    Chicken,
    Leader,
    Hero,
    Compromise,
    Deadlock,
    PrisonersDilemma,
    StagHunt,
    Assurance,
    SafeCoordination,
    Peace,
    Harmony,
    Concord,
}

const A: u8 = 0;
const B: u8 = 1;
const C: u8 = 2;
const D: u8 = 3;

impl OrderGraph {
    pub const ALL: [OrderGraph; 12] = [
        OrderGraph::Chicken,
        OrderGraph::Leader,
        OrderGraph::Hero,
        OrderGraph::Compromise,
        OrderGraph::Deadlock,
        OrderGraph::PrisonersDilemma,
        OrderGraph::StagHunt,
        OrderGraph::Assurance,
        OrderGraph::SafeCoordination,
        OrderGraph::Peace,
        OrderGraph::Harmony,
        OrderGraph::Concord,
    ];

    /// Indices into `[a, b, c, d]`, highest payoff first.
    pub fn ordering(self) -> [u8; 4] {
        match self {
            OrderGraph::Chicken => [C, A, B, D],
            OrderGraph::Leader => [C, B, A, D],
            OrderGraph::Hero => [C, B, D, A],
            OrderGraph::Compromise => [C, D, B, A],
            OrderGraph::Deadlock => [C, D, A, B],
            OrderGraph::PrisonersDilemma => [C, A, D, B],
            OrderGraph::StagHunt => [A, C, D, B],
            OrderGraph::Assurance => [A, D, C, B],
            OrderGraph::SafeCoordination => [A, D, B, C],
            OrderGraph::Peace => [A, B, D, C],
            OrderGraph::Harmony => [A, B, C, D],
            OrderGraph::Concord => [A, C, B, D],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OrderGraph::Chicken => "Chicken",
            OrderGraph::Leader => "Leader",
            OrderGraph::Hero => "Hero",
            OrderGraph::Compromise => "Compromise",
            OrderGraph::Deadlock => "Deadlock",
            OrderGraph::PrisonersDilemma => "PrisonersDilemma",
            OrderGraph::StagHunt => "StagHunt",
            OrderGraph::Assurance => "Assurance",
            OrderGraph::SafeCoordination => "SafeCoordination",
            OrderGraph::Peace => "Peace",
            OrderGraph::Harmony => "Harmony",
            OrderGraph::Concord => "Concord",
        }
    }

    /// Whether the owner of this graph has a strictly dominant action.
    pub fn is_dominant(self) -> bool {
        let rank = self.rank();
        // a vs c and b vs d point the same way
        (rank[A as usize] < rank[C as usize]) == (rank[B as usize] < rank[D as usize])
    }

    /// Position (0 = best) of each of `a, b, c, d`.
    fn rank(self) -> [u8; 4] {
        let mut rank = [0u8; 4];
        for (pos, &idx) in self.ordering().iter().enumerate() {
            rank[idx as usize] = pos as u8;
        }
        rank
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Classify one player's payoffs given in row-player layout.
    pub fn classify(own: [i32; 4]) -> Result<OrderGraph> {
        for i in 0..4 {
            for j in i + 1..4 {
                if own[i] == own[j] {
                    return Err(Error::TiesNotClassifiable);
                }
            }
        }
        let order = descending_order(own);
        if let Some(g) = OrderGraph::ALL.iter().find(|g| g.ordering() == order) {
            return Ok(*g);
        }
        // The listed graphs cover exactly one of each column-swap pair.
        let swapped = descending_order(permute4(own, Permutation::COLS));
        OrderGraph::ALL
            .iter()
            .find(|g| g.ordering() == swapped)
            .copied()
            .ok_or(Error::TiesNotClassifiable)
    }
}

impl fmt::Display for OrderGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn descending_order(v: [i32; 4]) -> [u8; 4] {
    let mut idx = [0u8, 1, 2, 3];
    idx.sort_by(|&i, &j| v[j as usize].cmp(&v[i as usize]));
    idx
}

/// Pair of order graphs: one of 144 ordinal game types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Topology {
    pub row_graph: OrderGraph,
    pub col_graph: OrderGraph,
}

impl Topology {
    /// Dense index in `0..144`.
    pub fn index(self) -> usize {
        self.row_graph.index() * 12 + self.col_graph.index()
    }

    pub fn from_index(i: usize) -> Topology {
        Topology { row_graph: OrderGraph::ALL[i / 12], col_graph: OrderGraph::ALL[i % 12] }
    }

    pub fn all() -> impl Iterator<Item = Topology> {
        (0..144).map(Topology::from_index)
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.row_graph, self.col_graph)
    }
}

/// Order graphs of both players. The column player's payoffs are read from
/// their own perspective, so their graph is unchanged by a row swap, just as
/// the row player's graph is unchanged by a column swap.
pub fn classify_topology(g: &GameMatrix) -> Result<Topology> {
    let t = g.transpose_perspective();
    Ok(Topology { row_graph: OrderGraph::classify(g.row)?, col_graph: OrderGraph::classify(t.row)? })
}
