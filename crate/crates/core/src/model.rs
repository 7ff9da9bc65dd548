//! World model: agents, local and global states, runs and points.
//!
//! Local states store value indices into each variable's declared domain, so
//! they are cheap to hash and compare. Human-readable rendering goes through
//! [`SystemModel`](crate::system::SystemModel), which owns the symbol tables.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::system::SystemModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgentKind {
    Environment,
    Human,
    Automation,
}

impl AgentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Environment => "environment",
            AgentKind::Human => "human",
            AgentKind::Automation => "automation",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "environment" => Ok(AgentKind::Environment),
            "human" => Ok(AgentKind::Human),
            "automation" => Ok(AgentKind::Automation),
            other => Err(format!("unknown agent kind '{other}'")),
        }
    }
}

/// Position of an agent in the model's canonical agent order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentId(pub usize);

/// A state variable with a finite, ordered domain of value symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub domain: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Agent {
    pub name: String,
    pub kind: AgentKind,
    pub variables: Vec<Variable>,
    /// Action alphabet; always contains [`NOP`].
    pub actions: Vec<String>,
}

/// The reserved null action.
pub const NOP: &str = "nop";

impl Agent {
    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == name)
    }

    pub fn nop_index(&self) -> usize {
        self.action_index(NOP).expect("alphabet always contains nop")
    }
}

/// An agent's local state: one domain index per declared variable, in
/// declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocalState {
    pub agent: AgentId,
    pub values: Vec<u16>,
}

/// Index of a declared global state in its model's state table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId(pub usize);

/// Tuple of local states, one per agent in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GlobalState {
    pub components: Vec<LocalState>,
}

impl GlobalState {
    pub fn local(&self, agent: AgentId) -> &LocalState {
        &self.components[agent.0]
    }
}

/// One action index per agent, in canonical agent order. The derived order
/// is the canonical joint-action order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointAction(pub Vec<usize>);

/// A finite run prefix. `actions[k]` connects `states[k]` to `states[k + 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    pub states: Vec<StateId>,
    pub actions: Vec<JointAction>,
    /// The last state only has self-loop joint actions; the run stutters there forever.
    pub terminal_absorbing: bool,
}

impl Run {
    /// State at time `m`, stuttering the final state past the stored prefix.
    pub fn state_at(&self, m: usize) -> StateId {
        let last = self.states.len() - 1;
        self.states[m.min(last)]
    }
}

/// A `(run, time)` pair. Ordered by run index, then time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub run: usize,
    pub time: usize,
}

impl Point {
    pub fn new(run: usize, time: usize) -> Self {
        Point { run, time }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(r{}, {})", self.run, self.time)
    }
}

// ---------------------------------------------------------------------------
// Run sets


/// The system `R`: every run of a model up to a horizon. Every run contributes
/// the points `(r, 0) ..= (r, horizon)`; absorbing runs stutter their final
/// state past the stored prefix.
#[derive(Debug, Clone)]
pub struct RunSet {
    model: Arc<SystemModel>,
    horizon: usize,
    runs: Vec<Run>,
}

impl RunSet {
    pub(crate) fn new(model: Arc<SystemModel>, horizon: usize, runs: Vec<Run>) -> Self {
        RunSet {
            model,
            horizon,
            runs,
        }
    }

    pub fn model(&self) -> &Arc<SystemModel> {
        &self.model
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn point_count(&self) -> usize {
        self.runs.len() * (self.horizon + 1)
    }

    /// All points in canonical order (run index, then time).
    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        let h = self.horizon;
        (0..self.runs.len()).flat_map(move |r| (0..=h).map(move |m| Point::new(r, m)))
    }

    /// Dense index of a point in canonical order.
    pub fn index_of(&self, p: Point) -> usize {
        p.run * (self.horizon + 1) + p.time
    }

    pub fn point_at(&self, index: usize) -> Point {
        Point::new(index / (self.horizon + 1), index % (self.horizon + 1))
    }

    pub fn contains(&self, p: Point) -> bool {
        p.run < self.runs.len() && p.time <= self.horizon
    }

    pub fn check_point(&self, p: Point) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::PointOutOfBounds {
                run: p.run,
                time: p.time,
            })
        }
    }

    pub fn state_at(&self, p: Point) -> Result<StateId> {
        self.check_point(p)?;
        Ok(self.runs[p.run].state_at(p.time))
    }

    /// State ids of every point, in canonical order.
    pub fn point_states(&self) -> Vec<StateId> {
        self.points().map(|p| self.runs[p.run].state_at(p.time)).collect()
    }

    pub fn global_at(&self, p: Point) -> Result<&GlobalState> {
        Ok(self.model.state(self.state_at(p)?))
    }

    /// The agent's component of the global state at `p`.
    pub fn local_of(&self, p: Point, agent: AgentId) -> Result<&LocalState> {
        if agent.0 >= self.model.agents().len() {
            return Err(Error::UnknownAgent(format!("#{}", agent.0)));
        }
        Ok(self.global_at(p)?.local(agent))
    }

    /// `p1 ~agent p2`: the agent has the same local state at both points.
    pub fn indistinguishable(&self, p1: Point, p2: Point, agent: AgentId) -> Result<bool> {
        Ok(self.local_of(p1, agent)? == self.local_of(p2, agent)?)
    }

    /// The members of `points` the agent cannot tell apart from `p`, in the
    /// order given.
    pub fn points_indistinguishable_from(
        &self,
        p: Point,
        agent: AgentId,
        points: &[Point],
    ) -> Result<Vec<Point>> {
        let here = self.local_of(p, agent)?;
        let mut out = Vec::new();
        for &q in points {
            if self.local_of(q, agent)? == here {
                out.push(q);
            }
        }
        Ok(out)
    }

    /// Points grouped by the agent's local state; groups and their members
    /// are in canonical order of first appearance.
    pub fn information_sets(&self, agent: AgentId) -> Vec<(LocalState, Vec<Point>)> {
        let mut index: HashMap<&LocalState, usize> = HashMap::new();
        let mut groups: Vec<(LocalState, Vec<Point>)> = Vec::new();
        for p in self.points() {
            let local = self.model.state(self.runs[p.run].state_at(p.time)).local(agent);
            match index.get(local) {
                Some(&g) => groups[g].1.push(p),
                None => {
                    index.insert(local, groups.len());
                    groups.push((local.clone(), vec![p]));
                }
            }
        }
        groups
    }

    /// Names of the states visited up to and including `p`, with stuttered
    /// times collapsed onto the final stored state.
    pub fn prefix_names(&self, p: Point) -> Result<Vec<&str>> {
        self.check_point(p)?;
        let run = &self.runs[p.run];
        let end = p.time.min(run.states.len() - 1);
        Ok(run.states[..=end]
            .iter()
            .map(|&s| self.model.state_name(s))
            .collect())
    }
}
