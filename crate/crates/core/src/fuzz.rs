//! Seeded random generators for models, formulas and setups, used by the
//! property suites.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::bounded::{AutomaticRule, EpistemicSetup};
use crate::error::Result;
use crate::logic::{Formula, Implication, Literal};
use crate::model::{AgentKind, RunSet, Variable};
use crate::system::{
    enumerate_runs, AgentDecl, ModelDecl, ProtocolEntry, StateDecl, SystemModel, TransitionDecl,
};

/// Shape bounds for random models.
#[derive(Debug, Clone, Copy)]
pub struct ModelShape {
    pub max_agents: usize,
    pub max_local_states: usize,
    pub max_global_states: usize,
    pub max_props: usize,
    pub max_horizon: usize,
    pub max_points: usize,
}

impl Default for ModelShape {
    fn default() -> Self {
        ModelShape {
            max_agents: 3,
            max_local_states: 6,
            max_global_states: 8,
            max_props: 6,
            max_horizon: 5,
            max_points: 2000,
        }
    }
}

/// A random model declaration. Agent 0 is the human `h`; further agents are
/// automation (`a1`, ...) or, for the last one sometimes, the environment
/// `env`. Each agent has one variable with up to `max_local_states` values,
/// actions `act` and `nop`, and a random protocol. Every enabled non-`nop`
/// joint action has a random successor.
pub fn random_model_decl<R: Rng>(rng: &mut R, shape: &ModelShape) -> ModelDecl {
    let n_agents = rng.gen_range(1..=shape.max_agents.max(1));
    let mut agents = Vec::new();
    for i in 0..n_agents {
        let (name, kind) = if i == 0 {
            ("h".to_string(), AgentKind::Human)
        } else if i == n_agents - 1 && rng.gen_bool(0.3) {
            ("env".to_string(), AgentKind::Environment)
        } else {
            (format!("a{i}"), AgentKind::Automation)
        };
        let k = rng.gen_range(1..=shape.max_local_states.max(1));
        let domain: Vec<String> = (0..k).map(|v| format!("{name}.v{v}")).collect();
        let protocol = domain
            .iter()
            .map(|v| ProtocolEntry {
                local: vec![("x".into(), v.clone())],
                actions: if rng.gen_bool(0.6) {
                    vec!["act".into(), "nop".into()]
                } else {
                    vec!["nop".into()]
                },
            })
            .collect();
        agents.push(AgentDecl {
            name,
            kind,
            variables: vec![Variable {
                name: "x".into(),
                domain,
            }],
            actions: vec!["act".into(), "nop".into()],
            protocol,
        });
    }

    let n_states = rng.gen_range(1..=shape.max_global_states.max(1));
    let mut tuples: Vec<Vec<usize>> = Vec::new();
    for _ in 0..n_states * 3 {
        if tuples.len() == n_states {
            break;
        }
        let t: Vec<usize> = agents
            .iter()
            .map(|a| rng.gen_range(0..a.variables[0].domain.len()))
            .collect();
        if !tuples.contains(&t) {
            tuples.push(t);
        }
    }
    let state_name = |i: usize| format!("s{i}");
    let states: Vec<StateDecl> = tuples
        .iter()
        .enumerate()
        .map(|(i, t)| StateDecl {
            name: state_name(i),
            locals: agents
                .iter()
                .zip(t)
                .map(|(a, &v)| {
                    (
                        a.name.clone(),
                        vec![("x".into(), a.variables[0].domain[v].clone())],
                    )
                })
                .collect(),
        })
        .collect();

    let mut transitions = Vec::new();
    for (i, t) in tuples.iter().enumerate() {
        let options: Vec<Vec<&str>> = agents
            .iter()
            .zip(t)
            .map(|(a, &v)| a.protocol[v].actions.iter().map(String::as_str).collect())
            .collect();
        for ja in cartesian(&options) {
            if ja.iter().all(|&a| a == "nop") {
                continue;
            }
            transitions.push(TransitionDecl {
                from: state_name(i),
                action: agents
                    .iter()
                    .zip(&ja)
                    .map(|(a, &act)| (a.name.clone(), act.to_string()))
                    .collect(),
                to: state_name(rng.gen_range(0..tuples.len())),
            });
        }
    }

    let n_props = rng.gen_range(1..=shape.max_props.max(1));
    let props: Vec<String> = (0..n_props).map(|i| format!("p{i}")).collect();
    let interpretation = (0..tuples.len())
        .map(|i| {
            (
                state_name(i),
                props.iter().map(|p| (p.clone(), rng.gen_bool(0.5))).collect(),
            )
        })
        .collect();

    ModelDecl {
        name: "fuzz".into(),
        description: None,
        horizon: None,
        agents,
        propositions: props
            .iter()
            .map(|p| crate::system::Proposition {
                name: p.clone(),
                gloss: None,
            })
            .collect(),
        definitions: vec![],
        states,
        initial: state_name(0),
        interpretation,
        joint_actions: None,
        no_effect: vec![],
        transitions,
        bad_state: Some(Formula::prop("p0")),
    }
}

fn cartesian<'a>(options: &[Vec<&'a str>]) -> Vec<Vec<&'a str>> {
    let mut out: Vec<Vec<&str>> = vec![vec![]];
    for opts in options {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                opts.iter().map(move |o| {
                    let mut v = prefix.clone();
                    v.push(*o);
                    v
                })
            })
            .collect();
    }
    out
}

/// A random model with its run set at a random horizon, shrinking the
/// horizon until the point count is within `shape.max_points`.
pub fn random_system<R: Rng>(rng: &mut R, shape: &ModelShape) -> Result<Arc<RunSet>> {
    loop {
        let decl = random_model_decl(rng, shape);
        let model = Arc::new(SystemModel::from_decl(decl)?);
        let mut horizon = rng.gen_range(1..=shape.max_horizon.max(1));
        while horizon >= 1 {
            match enumerate_runs(model.clone(), horizon) {
                Ok(runs) if runs.point_count() <= shape.max_points => return Ok(Arc::new(runs)),
                _ => horizon -= 1,
            }
        }
    }
}

/// A random formula of at most `depth` over `props` and `agents`. `Khat`
/// appears only when `bounded` is set.
pub fn random_formula<R: Rng>(
    rng: &mut R,
    depth: usize,
    props: &[String],
    agents: &[String],
    bounded: bool,
) -> Formula {
    if depth == 0 || rng.gen_bool(0.2) {
        return Formula::prop(props.choose(rng).expect("nonempty").clone());
    }
    let sub = |rng: &mut R| random_formula(rng, depth - 1, props, agents, bounded);
    let choices = if bounded { 5 } else { 4 };
    match rng.gen_range(0..choices) {
        0 => Formula::not(sub(rng)),
        1 => {
            let a = sub(rng);
            Formula::and(a, sub(rng))
        }
        2 if !agents.is_empty() => {
            Formula::knows(agents.choose(rng).expect("nonempty").clone(), sub(rng))
        }
        2 | 3 => {
            let a = sub(rng);
            Formula::or(a, sub(rng))
        }
        _ => Formula::bknows(sub(rng)),
    }
}

pub fn random_literal<R: Rng>(rng: &mut R, props: &[String]) -> Literal {
    let p = props.choose(rng).expect("nonempty").clone();
    if rng.gen_bool(0.5) {
        Literal::pos(p)
    } else {
        Literal::neg(p)
    }
}

fn random_literals<R: Rng>(rng: &mut R, props: &[String], max: usize) -> BTreeSet<Literal> {
    let n = rng.gen_range(0..=max);
    (0..n).map(|_| random_literal(rng, props)).collect()
}

/// A random implication with one or two antecedent literals. The conclusion
/// is a literal, a `K[i]` literal, or a `Khat` literal.
pub fn random_implication<R: Rng>(rng: &mut R, props: &[String], agents: &[String]) -> Implication {
    let n = rng.gen_range(1..=2);
    let antecedents: Vec<Literal> = (0..n).map(|_| random_literal(rng, props)).collect();
    let lit = random_literal(rng, props).to_formula();
    let conclusion = match rng.gen_range(0..3) {
        0 => lit,
        1 if !agents.is_empty() => Formula::knows(agents.choose(rng).expect("nonempty").clone(), lit),
        _ => Formula::bknows(lit),
    };
    Implication::new(antecedents, conclusion)
}

/// A random setup covering every reachable human local state. Literals,
/// rules and deductions are arbitrary, so the setup is usually unsound.
pub fn random_setup<R: Rng>(rng: &mut R, runs: &RunSet, props: &[String]) -> EpistemicSetup {
    let model = runs.model();
    let agents: Vec<String> = model.agents().iter().map(|a| a.name.clone()).collect();
    let mut setup = EpistemicSetup::new("random");
    if let Some(h) = model.human() {
        for (l, _) in runs.information_sets(h) {
            setup.set_explicit(l, random_literals(rng, props, 3));
        }
    }
    for _ in 0..rng.gen_range(0..=2) {
        let ants = random_literals(rng, props, 2);
        setup = setup.with_rule(AutomaticRule::new(ants, random_literal(rng, props)));
    }
    for _ in 0..rng.gen_range(0..=2) {
        setup = setup.with_deduction(random_implication(rng, props, &agents));
    }
    setup
}

/// Gives `agent` an extra variable naming the global state, so its local
/// state determines the global state. Protocols are carried over.
pub fn with_perfect_information(decl: &ModelDecl, agent: &str) -> ModelDecl {
    let mut out = decl.clone();
    let Some(ai) = out.agents.iter().position(|a| a.name == agent) else {
        return out;
    };
    let names: Vec<String> = decl.states.iter().map(|s| s.name.clone()).collect();
    out.agents[ai].variables.push(Variable {
        name: "world".into(),
        domain: names.clone(),
    });
    let mut protocol = Vec::new();
    for s in &mut out.states {
        let Some(entry) = s.locals.iter_mut().find(|(a, _)| a == agent) else {
            continue;
        };
        let old = entry.1.clone();
        entry.1.push(("world".into(), s.name.clone()));
        if let Some(p) = decl.agents[ai].protocol.iter().find(|p| same_assignment(&p.local, &old)) {
            protocol.push(ProtocolEntry {
                local: entry.1.clone(),
                actions: p.actions.clone(),
            });
        }
    }
    out.agents[ai].protocol = protocol;
    out
}

fn same_assignment(a: &[(String, String)], b: &[(String, String)]) -> bool {
    let a: BTreeSet<_> = a.iter().collect();
    let b: BTreeSet<_> = b.iter().collect();
    a == b
}
