//! Search-and-rescue grid: a robot that sees along its row and column and
//! always heads for the farthest cell it can see, until it sees the person.
//!
//! Cells are `(x, y)` with `1 ≤ x, y ≤ n`; `(1,1)` is the bottom-left
//! corner. In `.layout` files the first line is the top row `y = n`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use super::Bundle;

pub type Cell = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("layout: {0}")]
    Layout(String),
    #[error("cell ({}, {}) is outside the {n}x{n} grid", .cell.0, .cell.1)]
    OutOfRange { cell: Cell, n: usize },
    #[error("the robot starts on the person's cell")]
    StartIsPerson,
    #[error("cell ({}, {}) is an obstacle", .0.0, .0.1)]
    OnObstacle(Cell),
    #[error("the person cannot be reached from the start cell")]
    Unreachable,
}

/// How "farthest" is measured among the visible cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    /// Shortest-path length through visible free cells.
    #[default]
    Path,
    /// Straight-line distance.
    Euclidean,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridInstance {
    pub n: usize,
    pub obstacles: BTreeSet<Cell>,
    pub person: Cell,
    pub start: Cell,
    pub metric: Metric,
}

const DIRS: [(&str, isize, isize); 4] = [
    ("east", 1, 0),
    ("north", 0, 1),
    ("south", 0, -1),
    ("west", -1, 0),
];

impl GridInstance {
    pub fn parse_layout(text: &str) -> Result<Self, GridError> {
        let rows: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect();
        let n = rows.len();
        if n == 0 {
            return Err(GridError::Layout("empty layout".into()));
        }
        let mut obstacles = BTreeSet::new();
        let mut person = None;
        let mut start = None;
        for (i, row) in rows.iter().enumerate() {
            let chars: Vec<char> = row.chars().filter(|c| !c.is_whitespace()).collect();
            if chars.len() != n {
                return Err(GridError::Layout(format!(
                    "row {} has {} cells, expected {n}",
                    i + 1,
                    chars.len()
                )));
            }
            let y = n - i;
            for (j, ch) in chars.into_iter().enumerate() {
                let cell = (j + 1, y);
                match ch {
                    '#' => {
                        obstacles.insert(cell);
                    }
                    'R' => {
                        if start.replace(cell).is_some() {
                            return Err(GridError::Layout("more than one `R`".into()));
                        }
                    }
                    'P' => {
                        if person.replace(cell).is_some() {
                            return Err(GridError::Layout("more than one `P`".into()));
                        }
                    }
                    '.' => {}
                    other => return Err(GridError::Layout(format!("unexpected `{other}`"))),
                }
            }
        }
        let inst = GridInstance {
            n,
            obstacles,
            person: person.ok_or_else(|| GridError::Layout("no `P`".into()))?,
            start: start.ok_or_else(|| GridError::Layout("no `R`".into()))?,
            metric: Metric::Path,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_layout(&self) -> String {
        let mut out = String::new();
        for y in (1..=self.n).rev() {
            for x in 1..=self.n {
                let c = (x, y);
                out.push(if self.obstacles.contains(&c) {
                    '#'
                } else if c == self.start {
                    'R'
                } else if c == self.person {
                    'P'
                } else {
                    '.'
                });
            }
            out.push('\n');
        }
        out
    }

    pub fn validate(&self) -> Result<(), GridError> {
        for &c in self.obstacles.iter().chain([&self.person, &self.start]) {
            if c.0 == 0 || c.1 == 0 || c.0 > self.n || c.1 > self.n {
                return Err(GridError::OutOfRange { cell: c, n: self.n });
            }
        }
        for c in [self.person, self.start] {
            if self.obstacles.contains(&c) {
                return Err(GridError::OnObstacle(c));
            }
        }
        if self.start == self.person {
            return Err(GridError::StartIsPerson);
        }
        let free: BTreeSet<Cell> = self.free_cells().into_iter().collect();
        if !bfs(self.start, &free).contains_key(&self.person) {
            return Err(GridError::Unreachable);
        }
        Ok(())
    }

    pub fn is_free(&self, c: Cell) -> bool {
        c.0 >= 1 && c.1 >= 1 && c.0 <= self.n && c.1 <= self.n && !self.obstacles.contains(&c)
    }

    /// Free cells in `(x, y)` order.
    pub fn free_cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for x in 1..=self.n {
            for y in 1..=self.n {
                if self.is_free((x, y)) {
                    out.push((x, y));
                }
            }
        }
        out
    }

    fn neighbor(&self, c: Cell, dx: isize, dy: isize) -> Option<Cell> {
        let x = c.0 as isize + dx;
        let y = c.1 as isize + dy;
        if x < 1 || y < 1 {
            return None;
        }
        let nb = (x as usize, y as usize);
        self.is_free(nb).then_some(nb)
    }

    /// Free cells on the four rays from `from`, each ray stopping before
    /// the first obstacle or the border; `from` itself is not included.
    pub fn visible(&self, from: Cell) -> BTreeSet<Cell> {
        let mut out = BTreeSet::new();
        for (_, dx, dy) in DIRS {
            let mut c = from;
            while let Some(nb) = self.neighbor(c, dx, dy) {
                out.insert(nb);
                c = nb;
            }
        }
        out
    }

    /// Obstacles that end one of the rays from `from`.
    pub fn visible_obstacles(&self, from: Cell) -> BTreeSet<Cell> {
        let mut out = BTreeSet::new();
        for (_, dx, dy) in DIRS {
            let mut c = from;
            loop {
                let x = c.0 as isize + dx;
                let y = c.1 as isize + dy;
                if x < 1 || y < 1 || x as usize > self.n || y as usize > self.n {
                    break;
                }
                let nb = (x as usize, y as usize);
                if self.obstacles.contains(&nb) {
                    out.insert(nb);
                    break;
                }
                c = nb;
            }
        }
        out
    }

    pub fn sees_person(&self, from: Cell) -> bool {
        from == self.person || self.visible(from).contains(&self.person)
    }

    /// Visible cells at maximal distance from `from`; ties give several.
    pub fn farthest(&self, from: Cell) -> Vec<Cell> {
        let mut area = self.visible(from);
        area.insert(from);
        let dist = bfs(from, &area);
        let score = |c: &Cell| -> usize {
            match self.metric {
                Metric::Path => dist[c],
                Metric::Euclidean => {
                    let dx = c.0.abs_diff(from.0);
                    let dy = c.1.abs_diff(from.1);
                    dx * dx + dy * dy
                }
            }
        };
        let candidates: Vec<Cell> = dist.keys().copied().filter(|&c| c != from).collect();
        let Some(best) = candidates.iter().map(score).max() else {
            return Vec::new();
        };
        candidates.into_iter().filter(|c| score(c) == best).collect()
    }

    /// Cells the policy may head for next from `from`.
    pub fn policy_targets(&self, from: Cell) -> Vec<Cell> {
        if self.sees_person(from) {
            vec![self.person]
        } else {
            self.farthest(from)
        }
    }
}

fn bfs(from: Cell, area: &BTreeSet<Cell>) -> BTreeMap<Cell, usize> {
    let mut dist = BTreeMap::from([(from, 0)]);
    let mut queue = VecDeque::from([from]);
    while let Some(c) = queue.pop_front() {
        let d = dist[&c];
        for (_, dx, dy) in DIRS {
            let x = c.0 as isize + dx;
            let y = c.1 as isize + dy;
            if x < 1 || y < 1 {
                continue;
            }
            let nb = (x as usize, y as usize);
            if area.contains(&nb) && !dist.contains_key(&nb) {
                dist.insert(nb, d + 1);
                queue.push_back(nb);
            }
        }
    }
    dist
}

fn cell_name(c: Cell) -> String {
    format!("{}_{}", c.0, c.1)
}

fn robot_at(c: Cell) -> String {
    format!("robotAt({},{})", c.0, c.1)
}

fn any_robot_at(cells: &[Cell]) -> String {
    if cells.is_empty() {
        return "false".into();
    }
    cells.iter().map(|&c| robot_at(c)).collect::<Vec<_>>().join(" | ")
}

fn no_robot_at(cells: &[Cell]) -> String {
    if cells.is_empty() {
        return "true".into();
    }
    cells
        .iter()
        .map(|&c| format!("-{}", robot_at(c)))
        .collect::<Vec<_>>()
        .join(" & ")
}

/// Emits the description, classification and policy for `inst`.
pub fn gen_grid(inst: &GridInstance) -> Result<Bundle, GridError> {
    inst.validate()?;
    let free = inst.free_cells();
    let mut cal = String::new();
    let w = &mut cal;
    let coords: Vec<String> = (1..=inst.n).map(|i| i.to_string()).collect();
    writeln!(w, "% {n}x{n} search grid", n = inst.n).unwrap();
    writeln!(w, "domain coord = {{{}}};", coords.join(", ")).unwrap();
    for &(x, y) in &free {
        writeln!(w, "static free({x},{y});").unwrap();
    }
    for &(x, y) in &inst.obstacles {
        writeln!(w, "static obstacle({x},{y});").unwrap();
    }
    writeln!(w, "fluent robotAt(X: coord, Y: coord) if free(X, Y);").unwrap();
    writeln!(w, "fluent seesPerson;").unwrap();
    writeln!(w, "fluent personFound;").unwrap();
    if !inst.obstacles.is_empty() {
        writeln!(w, "fluent seesObstacle(X: coord, Y: coord) if obstacle(X, Y);").unwrap();
    }
    for (d, _, _) in DIRS {
        writeln!(w, "action {d};").unwrap();
    }

    writeln!(w, "\n% the robot is in exactly one cell").unwrap();
    for (i, &c) in free.iter().enumerate() {
        for &d in &free[i + 1..] {
            writeln!(w, "caused -{} if {} & {}.", robot_at(d), robot_at(c), robot_at(d)).unwrap();
        }
    }
    writeln!(w, "caused {} if {}.", robot_at(free[0]), no_robot_at(&free)).unwrap();

    writeln!(w, "\n% observations").unwrap();
    let seeing: Vec<Cell> = free.iter().copied().filter(|&c| inst.sees_person(c)).collect();
    writeln!(w, "caused seesPerson if {}.", any_robot_at(&seeing)).unwrap();
    writeln!(w, "caused -seesPerson if {}.", no_robot_at(&seeing)).unwrap();
    writeln!(w, "caused personFound if {}.", robot_at(inst.person)).unwrap();
    writeln!(w, "caused -personFound if -{}.", robot_at(inst.person)).unwrap();
    for &o in &inst.obstacles {
        let from: Vec<Cell> = free
            .iter()
            .copied()
            .filter(|&c| inst.visible_obstacles(c).contains(&o))
            .collect();
        let name = format!("seesObstacle({},{})", o.0, o.1);
        if !from.is_empty() {
            writeln!(w, "caused {name} if {}.", any_robot_at(&from)).unwrap();
        }
        writeln!(w, "caused -{name} if {}.", no_robot_at(&from)).unwrap();
    }

    writeln!(w, "\n% moves; a move into an obstacle or off the grid is not executable").unwrap();
    for &c in &free {
        for (d, dx, dy) in DIRS {
            match inst.neighbor(c, dx, dy) {
                Some(nb) => {
                    writeln!(w, "caused {} after {} & {d}.", robot_at(nb), robot_at(c)).unwrap();
                    writeln!(w, "caused -{} after {} & {d}.", robot_at(c), robot_at(c)).unwrap();
                }
                None => {
                    writeln!(w, "caused {} after {} & {d}.", robot_at(c), robot_at(c)).unwrap();
                    writeln!(w, "caused -{} after {} & {d}.", robot_at(c), robot_at(c)).unwrap();
                }
            }
        }
    }
    writeln!(w, "\n% inertia").unwrap();
    writeln!(w, "caused robotAt(X,Y) if robotAt(X,Y) after robotAt(X,Y).").unwrap();
    writeln!(w, "caused -robotAt(X,Y) if -robotAt(X,Y) after -robotAt(X,Y).").unwrap();
    writeln!(w, "\ninitially {}.", robot_at(inst.start)).unwrap();

    // Classification by what the robot observes.
    let mut scn = String::new();
    let w = &mut scn;
    writeln!(w, "classify type2 {{").unwrap();
    for &c in &free {
        writeln!(w, "  aux at_{} := {};", cell_name(c), robot_at(c)).unwrap();
    }
    for &o in &inst.obstacles {
        writeln!(w, "  aux wall_{} := seesObstacle({},{});", cell_name(o), o.0, o.1).unwrap();
    }
    writeln!(w, "  aux person := seesPerson;").unwrap();
    writeln!(w, "}}").unwrap();

    writeln!(w, "rule personDetected: person.").unwrap();
    let mut far: BTreeMap<Cell, Vec<Cell>> = BTreeMap::new();
    for &c in &free {
        if !inst.sees_person(c) {
            for t in inst.farthest(c) {
                far.entry(t).or_default().push(c);
            }
        }
    }
    for (t, from) in &far {
        let at: Vec<String> = from.iter().map(|&c| format!("at_{}", cell_name(c))).collect();
        writeln!(w, "rule far_{}: {}.", cell_name(*t), at.join(" | ")).unwrap();
    }
    let mut entries: BTreeMap<Vec<String>, Vec<Cell>> = BTreeMap::new();
    for &c in &free {
        if inst.sees_person(c) {
            entries.insert(vec!["personDetected".into()], vec![inst.person]);
        } else {
            let ts = inst.farthest(c);
            if ts.is_empty() {
                continue;
            }
            let key = ts.iter().map(|&t| format!("far_{}", cell_name(t))).collect();
            entries.insert(key, ts);
        }
    }
    for (key, targets) in &entries {
        let ts: Vec<String> = targets.iter().map(|&t| robot_at(t)).collect();
        writeln!(w, "map {{{}}} -> {{ {} }}.", key.join(", "), ts.join(" | ")).unwrap();
    }
    writeln!(w, "goal personFound.").unwrap();
    writeln!(w, "planbound {}.", free.len() - 1).unwrap();

    Ok(Bundle {
        cal,
        scn,
        layout: Some(inst.to_layout()),
    })
}

/// Outcome of following the policy directly on the grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleOutcome {
    Works,
    /// `path` ends in a cell whose policy step returns to
    /// `path[cycle_start]`.
    Lasso { path: Vec<Cell>, cycle_start: usize },
    DeadEnd { path: Vec<Cell> },
}

/// Oracle independent of the action description and of equalization:
/// explores the cell graph induced by `policy_targets`.
pub fn oracle(inst: &GridInstance) -> OracleOutcome {
    fn dfs(
        inst: &GridInstance,
        c: Cell,
        path: &mut Vec<Cell>,
        done: &mut BTreeSet<Cell>,
    ) -> Option<OracleOutcome> {
        if c == inst.person {
            return None;
        }
        if let Some(i) = path.iter().position(|&p| p == c) {
            return Some(OracleOutcome::Lasso {
                path: path.clone(),
                cycle_start: i,
            });
        }
        if done.contains(&c) {
            return None;
        }
        path.push(c);
        let next = inst.policy_targets(c);
        if next.is_empty() {
            return Some(OracleOutcome::DeadEnd { path: path.clone() });
        }
        for t in next {
            if let Some(o) = dfs(inst, t, path, done) {
                return Some(o);
            }
        }
        path.pop();
        done.insert(c);
        None
    }
    dfs(inst, inst.start, &mut Vec::new(), &mut BTreeSet::new()).unwrap_or(OracleOutcome::Works)
}

/// Shipped instances; see the `fixtures/` directory for the frozen files.
pub fn figure1(which: char) -> Option<GridInstance> {
    let layout = match which {
        'a' => "#.P\n...\nR..\n",
        'b' => "#.P\n..#\nR..\n",
        'c' => "P..\n#..\nR..\n",
        _ => return None,
    };
    Some(GridInstance::parse_layout(layout).expect("shipped layout is valid"))
}
