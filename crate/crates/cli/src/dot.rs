//! Graphviz export of the reachable state graph.

use std::fmt::Write as _;

use epimc_core::{reachable_states, RunSet, StateId};

// Backslashes pass through so labels can use Graphviz escapes such as `\n`.
fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\\\""))
}

/// Nodes are the states visited within the horizon, labelled with their name
/// and global state; states satisfying the bad-state formula are shaded.
/// Edges carry joint actions. Self-loops are left out.
pub fn export_dot(runs: &RunSet) -> String {
    let model = runs.model();
    let reach = reachable_states(runs);
    let pi = model.interpretation();
    let is_bad = |s: StateId| {
        model
            .bad_state()
            .map(|f| pi.eval_state(f, s).unwrap_or(false))
            .unwrap_or(false)
    };

    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(model.name())).unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    writeln!(out, "  node [shape=box, fontname=\"Helvetica\"];").unwrap();
    writeln!(out, "  edge [fontname=\"Helvetica\", fontsize=10];").unwrap();
    for &s in &reach.states {
        let name = model.state_name(s);
        let label = format!("{}\\n{}", name, model.show_global(model.state(s)));
        let mut attrs = format!("label={}", quote(&label));
        if is_bad(s) {
            attrs.push_str(", style=filled, fillcolor=\"#f4a6a6\"");
        }
        if s == model.initial() {
            attrs.push_str(", peripheries=2");
        }
        writeln!(out, "  {} [{}];", quote(name), attrs).unwrap();
    }
    let visited: std::collections::HashSet<StateId> = reach.states.iter().copied().collect();
    for &s in &reach.states {
        let edges = model.transitions_from(s).expect("reachable states are validated");
        for (ja, t) in edges {
            if t == s || !visited.contains(&t) {
                continue;
            }
            writeln!(
                out,
                "  {} -> {} [label={}];",
                quote(model.state_name(s)),
                quote(model.state_name(t)),
                quote(&model.show_joint(&ja))
            )
            .unwrap();
        }
    }
    writeln!(out, "}}").unwrap();
    out
}
