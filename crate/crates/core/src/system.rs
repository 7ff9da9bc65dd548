//! Declarative system models: agents, protocols, joint actions and the
//! transition function, plus bounded-horizon run enumeration.
//!
//! A [`ModelDecl`] is the name-based description of a model (what a model
//! file contains). [`SystemModel::from_decl`] resolves and validates it into
//! interned tables. Validation errors point at the offending declaration
//! element with a JSON-pointer-style path.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::logic::{is_identifier, Formula};
use crate::model::{
    Agent, AgentId, AgentKind, GlobalState, JointAction, LocalState, Run, RunSet, StateId,
    Variable, NOP,
};
use crate::semantics::Interpretation;

/// Default cap on the number of points an enumeration may produce.
pub const DEFAULT_POINT_LIMIT: usize = 1_000_000;

/// Variable name / value symbol pairs.
pub type Assignment = Vec<(String, String)>;

/// Agent name / action name pairs.
pub type JointActionDecl = Vec<(String, String)>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proposition {
    pub name: String,
    pub gloss: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolEntry {
    pub local: Assignment,
    pub actions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentDecl {
    pub name: String,
    pub kind: AgentKind,
    pub variables: Vec<Variable>,
    pub actions: Vec<String>,
    pub protocol: Vec<ProtocolEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateDecl {
    pub name: String,
    /// One assignment per agent, keyed by agent name.
    pub locals: Vec<(String, Assignment)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionDecl {
    pub from: String,
    pub action: JointActionDecl,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Definition {
    pub name: String,
    pub formula: Formula,
    pub gloss: Option<String>,
}

/// Name-based model description.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ModelDecl {
    pub name: String,
    pub description: Option<String>,
    pub horizon: Option<usize>,
    pub agents: Vec<AgentDecl>,
    pub propositions: Vec<Proposition>,
    /// Derived propositions, e.g. `p_bad := !p4 & p6`.
    pub definitions: Vec<Definition>,
    pub states: Vec<StateDecl>,
    pub initial: String,
    /// Truth value of every proposition at every declared state.
    pub interpretation: Vec<(String, Vec<(String, bool)>)>,
    /// Optional whitelist of joint actions.
    pub joint_actions: Option<Vec<JointActionDecl>>,
    /// Joint actions that leave the state unchanged wherever no transition
    /// maps them. The all-`nop` joint action is always a no-op.
    pub no_effect: Vec<JointActionDecl>,
    pub transitions: Vec<TransitionDecl>,
    pub bad_state: Option<Formula>,
}

/// The declaration element a validation error refers to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelElement {
    Model,
    Agent(usize),
    Variable { agent: usize, index: usize },
    Actions { agent: usize },
    Protocol { agent: usize, index: usize },
    State(usize),
    Initial,
    Proposition(usize),
    Definition(usize),
    Interpretation(String),
    JointAction(usize),
    NoEffect(usize),
    Transition(usize),
    BadState,
}

impl ModelElement {
    /// JSON-pointer-style path into a model document.
    pub fn pointer(&self) -> String {
        match self {
            ModelElement::Model => String::new(),
            ModelElement::Agent(i) => format!("/agents/{i}"),
            ModelElement::Variable { agent, index } => {
                format!("/agents/{agent}/variables/{index}")
            }
            ModelElement::Actions { agent } => format!("/agents/{agent}/actions"),
            ModelElement::Protocol { agent, index } => {
                format!("/agents/{agent}/protocol/{index}")
            }
            ModelElement::State(i) => format!("/states/{i}"),
            ModelElement::Initial => "/initial".into(),
            ModelElement::Proposition(i) => format!("/propositions/{i}"),
            ModelElement::Definition(i) => format!("/definitions/{i}"),
            ModelElement::Interpretation(s) => format!("/interpretation/{s}"),
            ModelElement::JointAction(i) => format!("/joint_actions/{i}"),
            ModelElement::NoEffect(i) => format!("/no_effect/{i}"),
            ModelElement::Transition(i) => format!("/transitions/{i}"),
            ModelElement::BadState => "/bad_state".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ModelError {
    pub element: ModelElement,
    pub message: String,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path = self.element.pointer();
        if path.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{path}: {}", self.message)
        }
    }
}

fn fail<T>(element: ModelElement, message: impl Into<String>) -> Result<T, ModelError> {
    Err(ModelError {
        element,
        message: message.into(),
    })
}

/// A validated system model.
#[derive(Debug, Clone)]
pub struct SystemModel {
    decl: ModelDecl,
    agents: Vec<Agent>,
    human: Option<AgentId>,
    states: Vec<GlobalState>,
    state_ids: HashMap<GlobalState, StateId>,
    name_ids: HashMap<String, StateId>,
    initial: StateId,
    protocols: Vec<HashMap<LocalState, Vec<usize>>>,
    allowed: Option<HashSet<JointAction>>,
    no_effect: HashSet<JointAction>,
    transitions: HashMap<(StateId, JointAction), StateId>,
    /// Non-stutter moves of every reachable state, canonical order, one per successor.
    moves: HashMap<StateId, Vec<(JointAction, StateId)>>,
    interpretation: Interpretation,
    unreachable: Vec<StateId>,
    /// Canonical agent id -> declaration index.
    decl_order: Vec<usize>,
}

impl SystemModel {
    pub fn from_decl(decl: ModelDecl) -> Result<SystemModel, ModelError> {
        Resolver::new(decl).resolve()
    }

    pub fn decl(&self) -> &ModelDecl {
        &self.decl
    }

    pub fn name(&self) -> &str {
        &self.decl.name
    }

    pub fn description(&self) -> Option<&str> {
        self.decl.description.as_deref()
    }

    pub fn default_horizon(&self) -> Option<usize> {
        self.decl.horizon
    }

    /// Agents in canonical order (environment first, then declaration order).
    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn agent(&self, id: AgentId) -> &Agent {
        &self.agents[id.0]
    }

    pub fn agent_id(&self, name: &str) -> Result<AgentId> {
        self.agents
            .iter()
            .position(|a| a.name == name)
            .map(AgentId)
            .ok_or_else(|| Error::UnknownAgent(name.to_string()))
    }

    pub fn human(&self) -> Option<AgentId> {
        self.human
    }

    pub fn states(&self) -> &[GlobalState] {
        &self.states
    }

    pub fn state(&self, id: StateId) -> &GlobalState {
        &self.states[id.0]
    }

    pub fn state_name(&self, id: StateId) -> &str {
        &self.decl.states[id.0].name
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.name_ids.get(name).copied()
    }

    pub fn state_of(&self, g: &GlobalState) -> Option<StateId> {
        self.state_ids.get(g).copied()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    /// Declared propositions (not including definitions).
    pub fn propositions(&self) -> &[Proposition] {
        &self.decl.propositions
    }

    pub fn definitions(&self) -> &[Definition] {
        &self.decl.definitions
    }

    pub fn interpretation(&self) -> &Interpretation {
        &self.interpretation
    }

    pub fn bad_state(&self) -> Option<&Formula> {
        self.decl.bad_state.as_ref()
    }

    /// Declared states that no run ever reaches, at any horizon.
    pub fn unreachable_states(&self) -> &[StateId] {
        &self.unreachable
    }

    /// Builds a local state of `agent` from variable/value names.
    pub fn local_state(&self, agent: AgentId, assignment: &[(String, String)]) -> Result<LocalState> {
        resolve_assignment(&self.agents[agent.0], agent, assignment)
            .map_err(|message| ModelError {
                element: ModelElement::Model,
                message,
            }
            .into())
    }

    /// `(v1, v2, ...)` in variable order.
    pub fn show_local(&self, l: &LocalState) -> String {
        let agent = &self.agents[l.agent.0];
        let values: Vec<&str> = l
            .values
            .iter()
            .zip(&agent.variables)
            .map(|(&v, var)| var.domain[v as usize].as_str())
            .collect();
        format!("({})", values.join(", "))
    }

    /// `(var=value, ...)` in variable order.
    pub fn show_assignment(&self, l: &LocalState) -> String {
        let agent = &self.agents[l.agent.0];
        let values: Vec<String> = l
            .values
            .iter()
            .zip(&agent.variables)
            .map(|(&v, var)| format!("{}={}", var.name, var.domain[v as usize]))
            .collect();
        format!("({})", values.join(", "))
    }

    pub fn assignment(&self, l: &LocalState) -> Assignment {
        let agent = &self.agents[l.agent.0];
        l.values
            .iter()
            .zip(&agent.variables)
            .map(|(&v, var)| (var.name.clone(), var.domain[v as usize].clone()))
            .collect()
    }

    pub fn show_global(&self, g: &GlobalState) -> String {
        let parts: Vec<String> = g.components.iter().map(|l| self.show_local(l)).collect();
        format!("({})", parts.join(", "))
    }

    pub fn show_joint(&self, ja: &JointAction) -> String {
        let parts: Vec<&str> = ja
            .0
            .iter()
            .zip(&self.agents)
            .map(|(&a, agent)| agent.actions[a].as_str())
            .collect();
        format!("({})", parts.join(", "))
    }

    /// Joint actions enabled at `state`: the product of every agent's
    /// protocol at its local state, filtered by the whitelist, in canonical
    /// order.
    pub fn enabled_joint_actions(&self, state: StateId) -> Result<Vec<JointAction>> {
        let g = &self.states[state.0];
        let mut options: Vec<&[usize]> = Vec::with_capacity(self.agents.len());
        for (i, local) in g.components.iter().enumerate() {
            match self.protocols[i].get(local) {
                Some(actions) => options.push(actions),
                None => {
                    return Err(ModelError {
                        element: ModelElement::Protocol {
                            agent: self.decl_index(AgentId(i)),
                            index: self.protocols[i].len(),
                        },
                        message: format!(
                            "protocol of agent '{}' has no entry for local state {}",
                            self.agents[i].name,
                            self.show_assignment(local)
                        ),
                    }
                    .into())
                }
            }
        }
        let mut out = Vec::new();
        let mut current = Vec::with_capacity(options.len());
        product(&options, &mut current, &mut |ja| {
            let ja = JointAction(ja.to_vec());
            if self.allowed.as_ref().is_none_or(|w| w.contains(&ja)) {
                out.push(ja);
            }
        });
        Ok(out)
    }

    /// The successor of `state` under `ja`.
    pub fn step(&self, state: StateId, ja: &JointAction) -> Result<StateId> {
        if !self.enabled_joint_actions(state)?.contains(ja) {
            return Err(ModelError {
                element: ModelElement::Model,
                message: format!(
                    "joint action {} is not enabled at state {}",
                    self.show_joint(ja),
                    self.state_name(state)
                ),
            }
            .into());
        }
        self.apply(state, ja).map_err(Error::from)
    }

    fn apply(&self, state: StateId, ja: &JointAction) -> Result<StateId, ModelError> {
        if let Some(&next) = self.transitions.get(&(state, ja.clone())) {
            return Ok(next);
        }
        if self.is_all_nop(ja) || self.no_effect.contains(ja) {
            return Ok(state);
        }
        fail(
            ModelElement::Model,
            format!(
                "joint action {} is enabled at state {} but has no transition and is not declared no-effect",
                self.show_joint(ja),
                self.state_name(state)
            ),
        )
    }

    fn is_all_nop(&self, ja: &JointAction) -> bool {
        ja.0.iter()
            .zip(&self.agents)
            .all(|(&a, agent)| agent.actions[a] == NOP)
    }

    /// Non-stutter moves from a reachable state: one entry per distinct
    /// successor, labelled with the first joint action reaching it.
    pub fn moves(&self, state: StateId) -> &[(JointAction, StateId)] {
        self.moves.get(&state).map(Vec::as_slice).unwrap_or(&[])
    }

    /// True when every enabled joint action at `state` is a self-loop.
    pub fn is_absorbing(&self, state: StateId) -> bool {
        self.moves(state).is_empty()
    }

    /// All enabled joint actions of a reachable state with their successors,
    /// including self-loops.
    pub fn transitions_from(&self, state: StateId) -> Result<Vec<(JointAction, StateId)>> {
        let mut out = Vec::new();
        for ja in self.enabled_joint_actions(state)? {
            let next = self.apply(state, &ja)?;
            out.push((ja, next));
        }
        Ok(out)
    }

    fn decl_index(&self, id: AgentId) -> usize {
        self.decl_order[id.0]
    }
}

fn product(options: &[&[usize]], current: &mut Vec<usize>, emit: &mut dyn FnMut(&[usize])) {
    if current.len() == options.len() {
        emit(current);
        return;
    }
    for &a in options[current.len()] {
        current.push(a);
        product(options, current, emit);
        current.pop();
    }
}

fn resolve_assignment(
    agent: &Agent,
    id: AgentId,
    assignment: &[(String, String)],
) -> Result<LocalState, String> {
    let mut values: Vec<Option<u16>> = vec![None; agent.variables.len()];
    for (var, value) in assignment {
        let Some(vi) = agent.variables.iter().position(|v| &v.name == var) else {
            return Err(format!(
                "variable '{var}' is not declared for agent '{}'",
                agent.name
            ));
        };
        let Some(di) = agent.variables[vi].domain.iter().position(|d| d == value) else {
            return Err(format!(
                "value '{value}' is not in the domain of variable '{var}'"
            ));
        };
        if values[vi].replace(di as u16).is_some() {
            return Err(format!("variable '{var}' assigned twice"));
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (v, var) in values.into_iter().zip(&agent.variables) {
        match v {
            Some(v) => out.push(v),
            None => {
                return Err(format!(
                    "variable '{}' of agent '{}' is not assigned",
                    var.name, agent.name
                ))
            }
        }
    }
    Ok(LocalState {
        agent: id,
        values: out,
    })
}

// ---------------------------------------------------------------------------
// Resolution and validation

struct Resolver {
    decl: ModelDecl,
    agents: Vec<Agent>,
    /// declaration index -> canonical id
    canon: Vec<AgentId>,
}

impl Resolver {
    fn new(decl: ModelDecl) -> Self {
        Resolver {
            decl,
            agents: Vec::new(),
            canon: Vec::new(),
        }
    }

    fn agent_by_name(&self, name: &str) -> Option<AgentId> {
        self.agents.iter().position(|a| a.name == name).map(AgentId)
    }

    fn resolve(mut self) -> Result<SystemModel, ModelError> {
        self.resolve_agents()?;
        let human = self
            .agents
            .iter()
            .position(|a| a.kind == AgentKind::Human)
            .map(AgentId);

        let (states, state_ids, name_ids) = self.resolve_states()?;
        let Some(&initial) = name_ids.get(&self.decl.initial) else {
            return fail(
                ModelElement::Initial,
                format!("initial state '{}' is not declared", self.decl.initial),
            );
        };

        let interpretation = self.resolve_interpretation(&name_ids, states.len())?;
        let protocols = self.resolve_protocols()?;
        let allowed = match &self.decl.joint_actions {
            None => None,
            Some(list) => {
                let mut set = HashSet::new();
                for (i, ja) in list.iter().enumerate() {
                    let ja = self.resolve_joint(ja, ModelElement::JointAction(i))?;
                    set.insert(ja);
                }
                Some(set)
            }
        };
        let mut no_effect = HashSet::new();
        for (i, ja) in self.decl.no_effect.iter().enumerate() {
            no_effect.insert(self.resolve_joint(ja, ModelElement::NoEffect(i))?);
        }

        let mut model = SystemModel {
            decl: ModelDecl::default(),
            agents: self.agents.clone(),
            human,
            states,
            state_ids,
            name_ids,
            initial,
            protocols,
            allowed,
            no_effect,
            transitions: HashMap::new(),
            moves: HashMap::new(),
            interpretation,
            unreachable: Vec::new(),
            decl_order: {
                let mut order = vec![0; self.canon.len()];
                for (i, c) in self.canon.iter().enumerate() {
                    order[c.0] = i;
                }
                order
            },
        };
        // Transitions and reachability need the resolved tables in place.
        let transitions = self.resolve_transitions(&model)?;
        model.transitions = transitions;
        model.decl = std::mem::take(&mut self.decl);
        explore(&mut model)?;
        if let Some(bad) = &model.decl.bad_state {
            check_propositional(bad, &model.interpretation, ModelElement::BadState)?;
        }
        Ok(model)
    }

    fn resolve_agents(&mut self) -> Result<(), ModelError> {
        let mut names = HashSet::new();
        let mut envs = 0;
        let mut humans = 0;
        if self.decl.agents.is_empty() {
            return fail(ModelElement::Model, "a model needs at least one agent");
        }
        for (i, a) in self.decl.agents.iter().enumerate() {
            let el = ModelElement::Agent(i);
            if !is_identifier(&a.name) {
                return fail(el, format!("agent name '{}' is not an identifier", a.name));
            }
            if !names.insert(a.name.as_str()) {
                return fail(el, format!("duplicate agent name '{}'", a.name));
            }
            match a.kind {
                AgentKind::Environment => envs += 1,
                AgentKind::Human => humans += 1,
                AgentKind::Automation => {}
            }
            if envs > 1 {
                return fail(el, "at most one environment agent is allowed");
            }
            if humans > 1 {
                return fail(el, "at most one human agent is allowed");
            }
            let mut var_names = HashSet::new();
            for (j, v) in a.variables.iter().enumerate() {
                let el = ModelElement::Variable { agent: i, index: j };
                if v.name.is_empty() || !var_names.insert(v.name.as_str()) {
                    return fail(el, format!("bad or duplicate variable name '{}'", v.name));
                }
                if v.domain.is_empty() {
                    return fail(el, "variable domain is empty");
                }
                let distinct: HashSet<&String> = v.domain.iter().collect();
                if distinct.len() != v.domain.len() || v.domain.iter().any(String::is_empty) {
                    return fail(el, "variable domain has empty or duplicate values");
                }
            }
            let el = ModelElement::Actions { agent: i };
            let distinct: HashSet<&String> = a.actions.iter().collect();
            if distinct.len() != a.actions.len() || a.actions.iter().any(String::is_empty) {
                return fail(el, "action alphabet has empty or duplicate names");
            }
            if !a.actions.iter().any(|x| x == NOP) {
                return fail(el, "action alphabet must contain the null action 'nop'");
            }
        }
        // Environment first, then declaration order.
        let mut order: Vec<usize> = (0..self.decl.agents.len()).collect();
        order.sort_by_key(|&i| (self.decl.agents[i].kind != AgentKind::Environment, i));
        self.canon = vec![AgentId(0); order.len()];
        for (pos, &i) in order.iter().enumerate() {
            self.canon[i] = AgentId(pos);
            let a = &self.decl.agents[i];
            self.agents.push(Agent {
                name: a.name.clone(),
                kind: a.kind,
                variables: a.variables.clone(),
                actions: a.actions.clone(),
            });
        }
        Ok(())
    }

    #[allow(clippy::type_complexity)]
    fn resolve_states(
        &self,
    ) -> Result<
        (
            Vec<GlobalState>,
            HashMap<GlobalState, StateId>,
            HashMap<String, StateId>,
        ),
        ModelError,
    > {
        let mut states = Vec::new();
        let mut state_ids = HashMap::new();
        let mut name_ids = HashMap::new();
        for (i, s) in self.decl.states.iter().enumerate() {
            let el = || ModelElement::State(i);
            if s.name.is_empty() {
                return fail(el(), "state name is empty");
            }
            let mut components: Vec<Option<LocalState>> = vec![None; self.agents.len()];
            for (agent_name, assignment) in &s.locals {
                let Some(id) = self.agent_by_name(agent_name) else {
                    return fail(el(), format!("unknown agent '{agent_name}'"));
                };
                let local = resolve_assignment(&self.agents[id.0], id, assignment)
                    .map_err(|m| ModelError {
                        element: el(),
                        message: m,
                    })?;
                if components[id.0].replace(local).is_some() {
                    return fail(el(), format!("agent '{agent_name}' listed twice"));
                }
            }
            let mut comps = Vec::with_capacity(components.len());
            for (k, c) in components.into_iter().enumerate() {
                match c {
                    Some(c) => comps.push(c),
                    None => {
                        // Agents without variables have a single, empty local state.
                        if self.agents[k].variables.is_empty() {
                            comps.push(LocalState {
                                agent: AgentId(k),
                                values: vec![],
                            })
                        } else {
                            return fail(
                                el(),
                                format!("no local state given for agent '{}'", self.agents[k].name),
                            );
                        }
                    }
                }
            }
            let g = GlobalState { components: comps };
            let id = StateId(i);
            if name_ids.insert(s.name.clone(), id).is_some() {
                return fail(el(), format!("duplicate state name '{}'", s.name));
            }
            if let Some(prev) = state_ids.insert(g.clone(), id) {
                return fail(
                    el(),
                    format!(
                        "state '{}' repeats the global state of '{}'",
                        s.name, self.decl.states[prev.0].name
                    ),
                );
            }
            states.push(g);
        }
        if states.is_empty() {
            return fail(ModelElement::Model, "a model needs at least one state");
        }
        Ok((states, state_ids, name_ids))
    }

    fn resolve_interpretation(
        &self,
        name_ids: &HashMap<String, StateId>,
        n_states: usize,
    ) -> Result<Interpretation, ModelError> {
        let mut names: Vec<String> = Vec::new();
        let mut index: HashMap<&str, usize> = HashMap::new();
        for (i, p) in self.decl.propositions.iter().enumerate() {
            if !is_identifier(&p.name) {
                return fail(
                    ModelElement::Proposition(i),
                    format!("proposition name '{}' is not an identifier", p.name),
                );
            }
            if index.insert(&p.name, i).is_some() {
                return fail(
                    ModelElement::Proposition(i),
                    format!("duplicate proposition '{}'", p.name),
                );
            }
            names.push(p.name.clone());
        }
        let n_props = names.len();
        let mut table: Vec<Option<Vec<bool>>> = vec![None; n_states];
        for (state, row) in &self.decl.interpretation {
            let el = || ModelElement::Interpretation(state.clone());
            let Some(&sid) = name_ids.get(state) else {
                return fail(el(), format!("unknown state '{state}'"));
            };
            let mut values: Vec<Option<bool>> = vec![None; n_props];
            for (prop, value) in row {
                let Some(&pi) = index.get(prop.as_str()) else {
                    return fail(el(), format!("unknown proposition '{prop}'"));
                };
                if values[pi].replace(*value).is_some() {
                    return fail(el(), format!("proposition '{prop}' given twice"));
                }
            }
            if let Some(missing) = values.iter().position(Option::is_none) {
                return fail(
                    el(),
                    format!("no truth value for proposition '{}'", names[missing]),
                );
            }
            if table[sid.0].is_some() {
                return fail(el(), "state listed twice");
            }
            table[sid.0] = Some(values.into_iter().map(Option::unwrap).collect());
        }
        let mut rows = Vec::with_capacity(n_states);
        for (i, row) in table.into_iter().enumerate() {
            match row {
                Some(r) => rows.push(r),
                None => {
                    let name = &self.decl.states[i].name;
                    return fail(
                        ModelElement::Interpretation(name.clone()),
                        format!("state '{name}' has no interpretation entry"),
                    );
                }
            }
        }
        let mut interp = Interpretation::new(names, rows);
        for (i, d) in self.decl.definitions.iter().enumerate() {
            let el = ModelElement::Definition(i);
            if !is_identifier(&d.name) {
                return fail(el, format!("definition name '{}' is not an identifier", d.name));
            }
            if interp.prop_index(&d.name).is_ok() {
                return fail(el, format!("'{}' is already a proposition", d.name));
            }
            check_propositional(&d.formula, &interp, el.clone())?;
            let column: Vec<bool> = (0..n_states)
                .map(|s| interp.eval_state(&d.formula, StateId(s)))
                .collect::<Result<_>>()
                .map_err(|e| ModelError {
                    element: el.clone(),
                    message: e.to_string(),
                })?;
            interp.add_derived(d.name.clone(), column);
        }
        Ok(interp)
    }

    fn resolve_protocols(&self) -> Result<Vec<HashMap<LocalState, Vec<usize>>>, ModelError> {
        let mut protocols = vec![HashMap::new(); self.agents.len()];
        for (i, a) in self.decl.agents.iter().enumerate() {
            let id = self.canon[i];
            let agent = &self.agents[id.0];
            for (j, entry) in a.protocol.iter().enumerate() {
                let el = || ModelElement::Protocol { agent: i, index: j };
                let local = resolve_assignment(agent, id, &entry.local).map_err(|m| ModelError {
                    element: el(),
                    message: m,
                })?;
                if entry.actions.is_empty() {
                    return fail(el(), "protocol entry allows no action");
                }
                let mut acts = BTreeSet::new();
                for name in &entry.actions {
                    let Some(k) = agent.action_index(name) else {
                        return fail(
                            el(),
                            format!("action '{name}' is not in the alphabet of agent '{}'", a.name),
                        );
                    };
                    acts.insert(k);
                }
                if protocols[id.0]
                    .insert(local, acts.into_iter().collect())
                    .is_some()
                {
                    return fail(el(), "local state listed twice in protocol");
                }
            }
        }
        Ok(protocols)
    }

    fn resolve_joint(
        &self,
        decl: &JointActionDecl,
        el: ModelElement,
    ) -> Result<JointAction, ModelError> {
        let mut acts: Vec<Option<usize>> = vec![None; self.agents.len()];
        for (agent_name, action) in decl {
            let Some(id) = self.agent_by_name(agent_name) else {
                return fail(el, format!("unknown agent '{agent_name}'"));
            };
            let Some(k) = self.agents[id.0].action_index(action) else {
                return fail(
                    el,
                    format!("action '{action}' is not in the alphabet of agent '{agent_name}'"),
                );
            };
            if acts[id.0].replace(k).is_some() {
                return fail(el, format!("agent '{agent_name}' listed twice"));
            }
        }
        let mut out = Vec::with_capacity(acts.len());
        for (k, a) in acts.into_iter().enumerate() {
            match a {
                Some(a) => out.push(a),
                None => {
                    return fail(
                        el,
                        format!("no action given for agent '{}'", self.agents[k].name),
                    )
                }
            }
        }
        Ok(JointAction(out))
    }

    fn resolve_transitions(
        &self,
        model: &SystemModel,
    ) -> Result<HashMap<(StateId, JointAction), StateId>, ModelError> {
        let mut out = HashMap::new();
        for (i, t) in self.decl.transitions.iter().enumerate() {
            let el = || ModelElement::Transition(i);
            let Some(from) = model.state_id(&t.from) else {
                return fail(el(), format!("unknown state '{}'", t.from));
            };
            let Some(to) = model.state_id(&t.to) else {
                return fail(el(), format!("unknown state '{}'", t.to));
            };
            let ja = self.resolve_joint(&t.action, el())?;
            let enabled = model.enabled_joint_actions(from).map_err(|e| match e {
                Error::Model(m) => m,
                other => ModelError {
                    element: el(),
                    message: other.to_string(),
                },
            })?;
            if !enabled.contains(&ja) {
                return fail(
                    el(),
                    format!(
                        "joint action {} is not enabled at state '{}'",
                        model.show_joint(&ja),
                        t.from
                    ),
                );
            }
            if model.is_all_nop(&ja) && to != from {
                return fail(el(), "the all-nop joint action cannot change the state");
            }
            if out.insert((from, ja), to).is_some() {
                return fail(el(), "duplicate transition (the transition function is deterministic)");
            }
        }
        Ok(out)
    }
}

fn check_propositional(
    f: &Formula,
    interp: &Interpretation,
    el: ModelElement,
) -> Result<(), ModelError> {
    if !f.is_propositional() {
        return fail(el, format!("'{f}' must not contain epistemic operators"));
    }
    for p in f.propositions() {
        if interp.prop_index(p).is_err() {
            return fail(el, format!("unknown proposition '{p}'"));
        }
    }
    Ok(())
}

/// Breadth-first exploration of everything reachable from the initial state:
/// checks protocol coverage, deadlock freedom and transition coverage, and
/// records the non-stutter moves of each reachable state.
fn explore(model: &mut SystemModel) -> Result<(), ModelError> {
    let mut seen = vec![false; model.states.len()];
    let mut queue = VecDeque::from([model.initial]);
    seen[model.initial.0] = true;
    let mut moves = HashMap::new();
    while let Some(s) = queue.pop_front() {
        let enabled = model.enabled_joint_actions(s).map_err(|e| match e {
            Error::Model(m) => m,
            other => ModelError {
                element: ModelElement::Model,
                message: other.to_string(),
            },
        })?;
        if enabled.is_empty() {
            return fail(
                ModelElement::Model,
                format!("deadlock: no joint action is enabled at state '{}'", model.state_name(s)),
            );
        }
        let mut out: Vec<(JointAction, StateId)> = Vec::new();
        for ja in enabled {
            let next = model.apply(s, &ja)?;
            if next == s || out.iter().any(|(_, t)| *t == next) {
                continue;
            }
            if !seen[next.0] {
                seen[next.0] = true;
                queue.push_back(next);
            }
            out.push((ja, next));
        }
        moves.insert(s, out);
    }
    model.moves = moves;
    model.unreachable = (0..model.states.len())
        .filter(|&i| !seen[i])
        .map(StateId)
        .collect();
    Ok(())
}

// ---------------------------------------------------------------------------
// Run enumeration

/// Every run of `model` up to `horizon` steps, with the default point limit.
pub fn enumerate_runs(model: Arc<SystemModel>, horizon: usize) -> Result<RunSet> {
    enumerate_runs_with_limit(model, horizon, DEFAULT_POINT_LIMIT)
}

/// Depth-first enumeration of the stutter-free paths from the initial state.
///
/// Self-loops are never taken as steps: a path ends when its last state has no
/// other successor (the run is then absorbing and stutters there) or when it
/// has `horizon` steps. Successors are visited in canonical joint-action
/// order, so runs come out lexicographically ordered.
pub fn enumerate_runs_with_limit(
    model: Arc<SystemModel>,
    horizon: usize,
    point_limit: usize,
) -> Result<RunSet> {
    if horizon == 0 {
        return Err(ModelError {
            element: ModelElement::Model,
            message: "horizon must be positive".into(),
        }
        .into());
    }
    let mut runs = Vec::new();
    let mut states = vec![model.initial];
    let mut actions = Vec::new();
    extend(&model, horizon, point_limit, &mut states, &mut actions, &mut runs)?;
    Ok(RunSet::new(model, horizon, runs))
}

fn extend(
    model: &SystemModel,
    horizon: usize,
    point_limit: usize,
    states: &mut Vec<StateId>,
    actions: &mut Vec<JointAction>,
    runs: &mut Vec<Run>,
) -> Result<()> {
    let here = *states.last().expect("paths are nonempty");
    let moves = model.moves(here);
    if moves.is_empty() || states.len() == horizon + 1 {
        runs.push(Run {
            states: states.clone(),
            actions: actions.clone(),
            terminal_absorbing: moves.is_empty(),
        });
        if runs.len().saturating_mul(horizon + 1) > point_limit {
            return Err(Error::ResourceLimit { limit: point_limit });
        }
        return Ok(());
    }
    for (ja, next) in moves {
        states.push(*next);
        actions.push(ja.clone());
        extend(model, horizon, point_limit, states, actions, runs)?;
        states.pop();
        actions.pop();
    }
    Ok(())
}

/// States visited by the runs of a horizon, plus the declared states they miss.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reachability {
    /// Ordered by state id.
    pub states: Vec<StateId>,
    /// Declared but not visited within the horizon; reported as warnings.
    pub unreachable: Vec<StateId>,
}

pub fn reachable_states(runs: &RunSet) -> Reachability {
    let model = runs.model();
    let mut seen = vec![false; model.states().len()];
    for run in runs.runs() {
        for s in &run.states {
            seen[s.0] = true;
        }
    }
    let (reached, missed): (Vec<usize>, Vec<usize>) =
        (0..seen.len()).partition(|&i| seen[i]);
    Reachability {
        states: reached.into_iter().map(StateId).collect(),
        unreachable: missed.into_iter().map(StateId).collect(),
    }
}

// ---------------------------------------------------------------------------
// Convenience constructors for declarations

impl AgentDecl {
    pub fn new(name: &str, kind: AgentKind) -> Self {
        AgentDecl {
            name: name.into(),
            kind,
            variables: vec![],
            actions: vec![NOP.into()],
            protocol: vec![],
        }
    }

    pub fn variable(mut self, name: &str, domain: &[&str]) -> Self {
        self.variables.push(Variable {
            name: name.into(),
            domain: domain.iter().map(|s| s.to_string()).collect(),
        });
        self
    }

    /// Replaces the alphabet; `nop` is appended when missing.
    pub fn actions(mut self, actions: &[&str]) -> Self {
        self.actions = actions.iter().map(|s| s.to_string()).collect();
        if !self.actions.iter().any(|a| a == NOP) {
            self.actions.push(NOP.into());
        }
        self
    }

    pub fn allow(mut self, local: &[(&str, &str)], actions: &[&str]) -> Self {
        self.protocol.push(ProtocolEntry {
            local: pairs(local),
            actions: actions.iter().map(|s| s.to_string()).collect(),
        });
        self
    }
}

/// Converts borrowed pairs into an owned assignment.
pub fn pairs(items: &[(&str, &str)]) -> Vec<(String, String)> {
    items
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// One agent with no variables and only `nop`.
    fn nop_only() -> ModelDecl {
        ModelDecl {
            name: "idle".into(),
            agents: vec![AgentDecl::new("h", AgentKind::Human).allow(&[], &["nop"])],
            states: vec![StateDecl {
                name: "s0".into(),
                locals: vec![],
            }],
            initial: "s0".into(),
            interpretation: vec![("s0".into(), vec![])],
            ..Default::default()
        }
    }

    #[test]
    fn nop_only_model_has_one_stuttering_run() {
        let model = Arc::new(SystemModel::from_decl(nop_only()).unwrap());
        let runs = enumerate_runs(model.clone(), 5).unwrap();
        assert_eq!(runs.runs().len(), 1);
        assert!(runs.runs()[0].terminal_absorbing);
        assert_eq!(runs.runs()[0].states, vec![model.initial()]);
        assert_eq!(runs.point_count(), 6);
        assert_eq!(reachable_states(&runs).states, vec![model.initial()]);
        let all_nop = JointAction(vec![0]);
        assert_eq!(model.step(model.initial(), &all_nop).unwrap(), model.initial());
    }

    #[test]
    fn zero_horizon_is_rejected() {
        let model = Arc::new(SystemModel::from_decl(nop_only()).unwrap());
        assert!(enumerate_runs(model, 0).is_err());
    }

    fn counter(n: usize) -> ModelDecl {
        let values: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
        let vals: Vec<&str> = values.iter().map(String::as_str).collect();
        let mut agent = AgentDecl::new("a", AgentKind::Automation)
            .variable("count", &vals)
            .actions(&["tick"]);
        for v in &vals {
            agent = agent.allow(&[("count", v)], &["tick", "nop"]);
        }
        let states = values
            .iter()
            .map(|v| StateDecl {
                name: format!("s_{v}"),
                locals: vec![("a".into(), pairs(&[("count", v)]))],
            })
            .collect();
        let transitions = (0..n)
            .map(|i| TransitionDecl {
                from: format!("s_c{i}"),
                action: pairs(&[("a", "tick")]),
                to: format!("s_c{}", (i + 1) % n),
            })
            .collect();
        ModelDecl {
            name: "counter".into(),
            agents: vec![agent],
            states,
            initial: "s_c0".into(),
            interpretation: values
                .iter()
                .map(|v| (format!("s_{v}"), vec![]))
                .collect(),
            transitions,
            ..Default::default()
        }
    }

    #[test]
    fn cyclic_model_truncates_at_horizon() {
        let model = Arc::new(SystemModel::from_decl(counter(3)).unwrap());
        let runs = enumerate_runs(model, 4).unwrap();
        assert_eq!(runs.runs().len(), 1);
        let run = &runs.runs()[0];
        assert!(!run.terminal_absorbing);
        assert_eq!(run.states.len(), 5);
        assert_eq!(
            run.states,
            vec![StateId(0), StateId(1), StateId(2), StateId(0), StateId(1)]
        );
    }

    #[test]
    fn point_limit_is_enforced() {
        let model = Arc::new(SystemModel::from_decl(counter(3)).unwrap());
        assert_eq!(
            enumerate_runs_with_limit(model, 4, 3).unwrap_err(),
            Error::ResourceLimit { limit: 3 }
        );
    }

    #[test]
    fn missing_nop_is_rejected() {
        let mut decl = nop_only();
        decl.agents[0].actions = vec!["go".into()];
        let err = SystemModel::from_decl(decl).unwrap_err();
        assert_eq!(err.element.pointer(), "/agents/0/actions");
    }

    #[test]
    fn unmapped_enabled_action_is_rejected() {
        let mut decl = counter(2);
        decl.transitions.pop();
        let err = SystemModel::from_decl(decl).unwrap_err();
        assert!(err.message.contains("no transition"), "{err}");
    }

    #[test]
    fn protocol_gap_at_reachable_state_is_rejected() {
        let mut decl = counter(2);
        decl.agents[0].protocol.pop();
        let err = SystemModel::from_decl(decl).unwrap_err();
        assert!(matches!(err.element, ModelElement::Protocol { agent: 0, .. }), "{err}");
    }

    #[test]
    fn undeclared_action_in_protocol_names_the_path() {
        let mut decl = counter(2);
        decl.agents[0].protocol[1].actions.push("jump".into());
        let err = SystemModel::from_decl(decl).unwrap_err();
        assert_eq!(err.element.pointer(), "/agents/0/protocol/1");
    }

    #[test]
    fn environment_agent_comes_first() {
        let mut decl = nop_only();
        decl.agents.push(AgentDecl::new("env", AgentKind::Environment).allow(&[], &["nop"]));
        let model = SystemModel::from_decl(decl).unwrap();
        assert_eq!(model.agents()[0].name, "env");
        assert_eq!(model.agent_id("h").unwrap(), AgentId(1));
        let env = model.agent_id("env").unwrap();
        let g = model.state(model.initial());
        assert!(g.local(env).values.is_empty());
        assert_eq!(model.show_local(g.local(env)), "()");
    }

    #[test]
    fn second_environment_is_rejected() {
        let mut decl = nop_only();
        decl.agents.push(AgentDecl::new("e1", AgentKind::Environment).allow(&[], &["nop"]));
        decl.agents.push(AgentDecl::new("e2", AgentKind::Environment).allow(&[], &["nop"]));
        assert_eq!(
            SystemModel::from_decl(decl).unwrap_err().element,
            ModelElement::Agent(2)
        );
    }
}
