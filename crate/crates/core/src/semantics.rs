//! Possible-worlds satisfaction over the points of a run set.
//!
//! Without temporal operators, the truth of a propositional formula at a
//! point depends only on the global state there; `K[i]` quantifies over every
//! point of the run set where agent `i` has the same local state.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::logic::{subformulas, Formula};
use crate::model::{AgentId, Point, RunSet, StateId};

/// The function pi: a truth table over declared states, stored extensionally.
///
/// Columns are the declared propositions followed by derived ones (named
/// propositional definitions evaluated at load time).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interpretation {
    names: Vec<String>,
    declared: usize,
    index: HashMap<String, usize>,
    /// `rows[state][prop]`
    rows: Vec<Vec<bool>>,
}

impl Interpretation {
    pub fn new(names: Vec<String>, rows: Vec<Vec<bool>>) -> Self {
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        Interpretation {
            declared: names.len(),
            names,
            index,
            rows,
        }
    }

    pub(crate) fn add_derived(&mut self, name: String, column: Vec<bool>) {
        self.index.insert(name.clone(), self.names.len());
        self.names.push(name);
        for (row, v) in self.rows.iter_mut().zip(column) {
            row.push(v);
        }
    }

    /// Declared names first, then derived.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn declared(&self) -> &[String] {
        &self.names[..self.declared]
    }

    pub fn is_derived(&self, name: &str) -> bool {
        self.index.get(name).is_some_and(|&i| i >= self.declared)
    }

    pub fn prop_index(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnmappedProposition(name.to_string()))
    }

    pub fn holds(&self, prop: &str, state: StateId) -> Result<bool> {
        let i = self.prop_index(prop)?;
        Ok(self.rows[state.0][i])
    }

    /// Evaluates a propositional formula at a state.
    pub fn eval_state(&self, f: &Formula, state: StateId) -> Result<bool> {
        match f {
            Formula::Prop(p) => self.holds(p, state),
            Formula::Not(g) => Ok(!self.eval_state(g, state)?),
            Formula::And(a, b) => Ok(self.eval_state(a, state)? && self.eval_state(b, state)?),
            Formula::Knows(..) | Formula::BKnows(_) => Err(Error::NotPropositional(f.to_string())),
        }
    }
}

/// Supplies truth values for `Khat` subformulas. Possible-worlds evaluation
/// has none.
pub(crate) trait BoundedOracle {
    fn bknows(&self, runs: &RunSet, p: Point, f: &Formula) -> Result<bool>;
}

pub(crate) struct NoSetup;

impl BoundedOracle for NoSetup {
    fn bknows(&self, _: &RunSet, _: Point, _: &Formula) -> Result<bool> {
        Err(Error::BoundedKnowledgeWithoutSetup)
    }
}

/// Satisfaction `(R, r, m) |= f` by direct recursion on `f`.
///
/// `K[i] g` scans every point of `R`. This is the reference evaluator; use
/// [`eval_pw_all`] for whole-table evaluation.
pub fn eval_pw(runs: &RunSet, pi: &Interpretation, p: Point, f: &Formula) -> Result<bool> {
    eval_point(runs, pi, &NoSetup, p, f)
}

pub(crate) fn eval_point(
    runs: &RunSet,
    pi: &Interpretation,
    oracle: &dyn BoundedOracle,
    p: Point,
    f: &Formula,
) -> Result<bool> {
    runs.check_point(p)?;
    match f {
        Formula::Prop(name) => pi.holds(name, runs.state_at(p)?),
        Formula::Not(g) => Ok(!eval_point(runs, pi, oracle, p, g)?),
        Formula::And(a, b) => {
            Ok(eval_point(runs, pi, oracle, p, a)? && eval_point(runs, pi, oracle, p, b)?)
        }
        Formula::Knows(agent, g) => {
            let agent = runs.model().agent_id(agent)?;
            let here = runs.local_of(p, agent)?;
            for q in runs.points() {
                if runs.local_of(q, agent)? == here && !eval_point(runs, pi, oracle, q, g)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Formula::BKnows(_) => oracle.bknows(runs, p, f),
    }
}

/// Truth values of a formula at every point, indexed by
/// [`RunSet::index_of`].
pub type PointTable = Vec<bool>;

/// Bottom-up evaluation at every point: one pass per subformula in
/// post-order, with `K[i]` computed once per information set.
pub fn eval_pw_all(runs: &RunSet, pi: &Interpretation, f: &Formula) -> Result<PointTable> {
    eval_table(runs, pi, &NoSetup, f)
}

pub(crate) fn eval_table(
    runs: &RunSet,
    pi: &Interpretation,
    oracle: &dyn BoundedOracle,
    f: &Formula,
) -> Result<PointTable> {
    let states = runs.point_states();
    let mut groups: HashMap<AgentId, (Vec<usize>, usize)> = HashMap::new();
    let mut done: HashMap<Formula, PointTable> = HashMap::new();
    for sub in subformulas(f) {
        let table: PointTable = match &sub {
            Formula::Prop(name) => {
                let i = pi.prop_index(name)?;
                states.iter().map(|s| pi.rows[s.0][i]).collect()
            }
            Formula::Not(g) => done[g.as_ref()].iter().map(|v| !v).collect(),
            Formula::And(a, b) => done[a.as_ref()]
                .iter()
                .zip(&done[b.as_ref()])
                .map(|(x, y)| *x && *y)
                .collect(),
            Formula::Knows(agent, g) => {
                let agent = runs.model().agent_id(agent)?;
                let (group_of, n_groups) = groups
                    .entry(agent)
                    .or_insert_with(|| information_partition(runs, &states, agent));
                let inner = &done[g.as_ref()];
                let mut all = vec![true; *n_groups];
                for (idx, &v) in inner.iter().enumerate() {
                    if !v {
                        all[group_of[idx]] = false;
                    }
                }
                group_of.iter().map(|&g| all[g]).collect()
            }
            Formula::BKnows(_) => {
                let mut out = Vec::with_capacity(states.len());
                for p in runs.points() {
                    out.push(oracle.bknows(runs, p, &sub)?);
                }
                out
            }
        };
        done.insert(sub, table);
    }
    Ok(done.remove(f).expect("the formula is its own last subformula"))
}

/// Group index of each point's local state for `agent`, plus the group count.
fn information_partition(runs: &RunSet, states: &[StateId], agent: AgentId) -> (Vec<usize>, usize) {
    let model = runs.model();
    let mut ids = HashMap::new();
    let group_of = states
        .iter()
        .map(|s| {
            let next = ids.len();
            *ids.entry(model.state(*s).local(agent)).or_insert(next)
        })
        .collect();
    (group_of, ids.len())
}

/// Outcome of a validity check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Validity {
    Valid,
    /// The first failing point in canonical order.
    Counterexample(Point),
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid)
    }
}

pub fn check_validity(runs: &RunSet, pi: &Interpretation, f: &Formula) -> Result<Validity> {
    Ok(first_false(runs, &eval_pw_all(runs, pi, f)?))
}

pub(crate) fn first_false(runs: &RunSet, table: &[bool]) -> Validity {
    match table.iter().position(|v| !v) {
        Some(i) => Validity::Counterexample(runs.point_at(i)),
        None => Validity::Valid,
    }
}
