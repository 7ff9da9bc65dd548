//! The JSON model file format.
//!
//! A document carries a system model plus any number of named epistemic
//! setups. Formulas, literals and deductions are strings in the formula
//! grammar. Maps keep file order, so saving a loaded document reproduces it.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use epimc_core::bounded::{AutomaticRule, EpistemicSetup};
use epimc_core::model::{AgentKind, Variable};
use epimc_core::system::{
    AgentDecl, Definition, ModelDecl, Proposition, ProtocolEntry, StateDecl, TransitionDecl,
};
use epimc_core::{parse_formula, Formula, Implication, Literal, SystemModel};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Variable (or agent) name to value (or action) name.
pub type NameMap = IndexMap<String, String>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub schema_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    pub agents: Vec<AgentDoc>,
    pub propositions: Vec<PropositionDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub definitions: Vec<DefinitionDoc>,
    pub states: Vec<StateDoc>,
    pub initial: String,
    pub interpretation: IndexMap<String, IndexMap<String, bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint_actions: Option<Vec<NameMap>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub no_effect: Vec<NameMap>,
    pub transitions: Vec<TransitionDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bad_state: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub setups: Vec<SetupDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentDoc {
    pub name: String,
    pub kind: String,
    #[serde(default)]
    pub variables: Vec<VariableDoc>,
    pub actions: Vec<String>,
    pub protocol: Vec<ProtocolDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableDoc {
    pub name: String,
    pub domain: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolDoc {
    pub local: NameMap,
    pub actions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropositionDoc {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gloss: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefinitionDoc {
    pub name: String,
    pub formula: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gloss: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDoc {
    pub name: String,
    pub locals: IndexMap<String, NameMap>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionDoc {
    pub from: String,
    pub action: NameMap,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupDoc {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub explicit: Vec<ExplicitDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub automatic: Vec<RuleDoc>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub automatic_fixpoint: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deductions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitDoc {
    pub local: NameMap,
    pub literals: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleDoc {
    #[serde(rename = "if")]
    pub antecedents: Vec<String>,
    #[serde(rename = "then")]
    pub conclusion: String,
}

/// A load failure, located by a JSON pointer when possible.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {file}: {message}")]
    Io { file: String, message: String },
    #[error("{file}: {}{message}", located(.pointer))]
    Parse {
        file: String,
        pointer: String,
        message: String,
    },
    #[error("{file}: unsupported schema_version {found} (expected {SCHEMA_VERSION})")]
    SchemaVersion { file: String, found: u32 },
    #[error("{file}: {}{message}", located(.pointer))]
    Invalid {
        file: String,
        pointer: String,
        message: String,
    },
}

fn located(pointer: &str) -> String {
    if pointer.is_empty() {
        String::new()
    } else {
        format!("{pointer}: ")
    }
}

impl LoadError {
    pub fn pointer(&self) -> Option<&str> {
        match self {
            LoadError::Parse { pointer, .. } | LoadError::Invalid { pointer, .. } => Some(pointer),
            _ => None,
        }
    }
}

/// A validated model with its named setups.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub document: ModelDocument,
    pub model: Arc<SystemModel>,
    pub setups: Vec<EpistemicSetup>,
    pub warnings: Vec<String>,
}

impl LoadedModel {
    pub fn setup(&self, name: &str) -> Option<&EpistemicSetup> {
        self.setups.iter().find(|s| s.name == name)
    }
}

pub fn load_model(path: &Path) -> Result<LoadedModel, LoadError> {
    let file = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| LoadError::Io {
        file: file.clone(),
        message: e.to_string(),
    })?;
    load_str(&text, &file)
}

/// Parses and validates a document; `file` labels error messages.
pub fn load_str(text: &str, file: &str) -> Result<LoadedModel, LoadError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let document: ModelDocument =
        serde_path_to_error::deserialize(&mut de).map_err(|e| LoadError::Parse {
            file: file.to_string(),
            pointer: pointer_of(e.path()),
            message: e.inner().to_string(),
        })?;
    de.end().map_err(|e| LoadError::Parse {
        file: file.to_string(),
        pointer: String::new(),
        message: e.to_string(),
    })?;
    from_document(document, file)
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", escape(key))),
            Segment::Enum { variant } => out.push_str(&format!("/{}", escape(variant))),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    out
}

fn escape(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

struct Ctx<'a> {
    file: &'a str,
}

impl Ctx<'_> {
    fn invalid(&self, pointer: impl Into<String>, message: impl Into<String>) -> LoadError {
        LoadError::Invalid {
            file: self.file.to_string(),
            pointer: pointer.into(),
            message: message.into(),
        }
    }

    fn formula(&self, pointer: String, text: &str) -> Result<Formula, LoadError> {
        parse_formula(text)
            .map_err(|e| self.invalid(pointer, format!("formula '{text}': {e}")))
    }

    fn literal(&self, pointer: String, text: &str) -> Result<Literal, LoadError> {
        Literal::parse(text).map_err(|e| self.invalid(pointer, format!("literal '{text}': {e}")))
    }
}

fn pairs(map: &NameMap) -> Vec<(String, String)> {
    map.iter().map(|(k, v)| (k.clone(), v.clone())).collect()
}

pub fn from_document(document: ModelDocument, file: &str) -> Result<LoadedModel, LoadError> {
    let ctx = Ctx { file };
    if document.schema_version != SCHEMA_VERSION {
        return Err(LoadError::SchemaVersion {
            file: file.to_string(),
            found: document.schema_version,
        });
    }
    let decl = to_decl(&document, &ctx)?;
    let model = SystemModel::from_decl(decl).map_err(|e| ctx.invalid(e.element.pointer(), e.message))?;
    let model = Arc::new(model);

    let mut setups: Vec<EpistemicSetup> = Vec::new();
    for (k, s) in document.setups.iter().enumerate() {
        let base = format!("/setups/{k}");
        if setups.iter().any(|t| t.name == s.name) {
            return Err(ctx.invalid(format!("{base}/name"), format!("duplicate setup name '{}'", s.name)));
        }
        setups.push(resolve_setup(&model, s, &base, &ctx)?);
    }

    let warnings = warnings(&model, &setups);
    Ok(LoadedModel {
        document,
        model,
        setups,
        warnings,
    })
}

fn to_decl(doc: &ModelDocument, ctx: &Ctx) -> Result<ModelDecl, LoadError> {
    let mut agents = Vec::new();
    for (i, a) in doc.agents.iter().enumerate() {
        let kind: AgentKind = a
            .kind
            .parse()
            .map_err(|m: String| ctx.invalid(format!("/agents/{i}/kind"), m))?;
        agents.push(AgentDecl {
            name: a.name.clone(),
            kind,
            variables: a
                .variables
                .iter()
                .map(|v| Variable {
                    name: v.name.clone(),
                    domain: v.domain.clone(),
                })
                .collect(),
            actions: a.actions.clone(),
            protocol: a
                .protocol
                .iter()
                .map(|p| ProtocolEntry {
                    local: pairs(&p.local),
                    actions: p.actions.clone(),
                })
                .collect(),
        });
    }
    let mut definitions = Vec::new();
    for (i, d) in doc.definitions.iter().enumerate() {
        definitions.push(Definition {
            name: d.name.clone(),
            formula: ctx.formula(format!("/definitions/{i}/formula"), &d.formula)?,
            gloss: d.gloss.clone(),
        });
    }
    let bad_state = match &doc.bad_state {
        Some(text) => Some(ctx.formula("/bad_state".into(), text)?),
        None => None,
    };
    Ok(ModelDecl {
        name: doc.name.clone(),
        description: doc.description.clone(),
        horizon: doc.horizon,
        agents,
        propositions: doc
            .propositions
            .iter()
            .map(|p| Proposition {
                name: p.name.clone(),
                gloss: p.gloss.clone(),
            })
            .collect(),
        definitions,
        states: doc
            .states
            .iter()
            .map(|s| StateDecl {
                name: s.name.clone(),
                locals: s.locals.iter().map(|(a, m)| (a.clone(), pairs(m))).collect(),
            })
            .collect(),
        initial: doc.initial.clone(),
        interpretation: doc
            .interpretation
            .iter()
            .map(|(s, row)| (s.clone(), row.iter().map(|(p, v)| (p.clone(), *v)).collect()))
            .collect(),
        joint_actions: doc.joint_actions.as_ref().map(|l| l.iter().map(pairs).collect()),
        no_effect: doc.no_effect.iter().map(pairs).collect(),
        transitions: doc
            .transitions
            .iter()
            .map(|t| TransitionDecl {
                from: t.from.clone(),
                action: pairs(&t.action),
                to: t.to.clone(),
            })
            .collect(),
        bad_state,
    })
}

fn resolve_setup(
    model: &SystemModel,
    doc: &SetupDoc,
    base: &str,
    ctx: &Ctx,
) -> Result<EpistemicSetup, LoadError> {
    let human = model
        .human()
        .ok_or_else(|| ctx.invalid(base.to_string(), "setups need a human agent"))?;
    let pi = model.interpretation();
    let check_prop = |pointer: String, lit: &Literal| -> Result<(), LoadError> {
        pi.prop_index(&lit.prop)
            .map(|_| ())
            .map_err(|e| ctx.invalid(pointer, e.to_string()))
    };
    let mut setup = EpistemicSetup::new(doc.name.clone());
    setup.description = doc.description.clone();
    for (i, entry) in doc.explicit.iter().enumerate() {
        let at = format!("{base}/explicit/{i}");
        let l = model
            .local_state(human, &pairs(&entry.local))
            .map_err(|e| ctx.invalid(format!("{at}/local"), strip_model_prefix(&e.to_string())))?;
        if setup.explicit(&l).is_some() {
            return Err(ctx.invalid(format!("{at}/local"), "local state listed twice"));
        }
        let mut lits = Vec::new();
        for (j, text) in entry.literals.iter().enumerate() {
            let p = format!("{at}/literals/{j}");
            let lit = ctx.literal(p.clone(), text)?;
            check_prop(p, &lit)?;
            lits.push(lit);
        }
        setup.set_explicit(l, lits);
    }
    for (i, r) in doc.automatic.iter().enumerate() {
        let at = format!("{base}/automatic/{i}");
        let mut ants = Vec::new();
        for (j, text) in r.antecedents.iter().enumerate() {
            let p = format!("{at}/if/{j}");
            let lit = ctx.literal(p.clone(), text)?;
            check_prop(p, &lit)?;
            ants.push(lit);
        }
        let p = format!("{at}/then");
        let c = ctx.literal(p.clone(), &r.conclusion)?;
        check_prop(p, &c)?;
        setup.automatic.rules.push(AutomaticRule::new(ants, c));
    }
    setup.automatic.fixpoint = doc.automatic_fixpoint;
    for (i, text) in doc.deductions.iter().enumerate() {
        let p = format!("{base}/deductions/{i}");
        let d = Implication::parse(text)
            .map_err(|e| ctx.invalid(p.clone(), format!("deduction '{text}': {e}")))?;
        for lit in &d.antecedents {
            check_prop(p.clone(), lit)?;
        }
        for prop in d.conclusion.propositions() {
            pi.prop_index(prop)
                .map_err(|e| ctx.invalid(p.clone(), e.to_string()))?;
        }
        for agent in d.conclusion.agents() {
            model
                .agent_id(agent)
                .map_err(|e| ctx.invalid(p.clone(), e.to_string()))?;
        }
        setup.deductions.push(d);
    }
    Ok(setup)
}

fn strip_model_prefix(message: &str) -> String {
    message
        .strip_prefix("model validation: ")
        .unwrap_or(message)
        .to_string()
}

fn warnings(model: &SystemModel, setups: &[EpistemicSetup]) -> Vec<String> {
    let mut out = Vec::new();
    for &s in model.unreachable_states() {
        out.push(format!(
            "state '{}' is declared but unreachable",
            model.state_name(s)
        ));
    }
    let mut used: Vec<String> = Vec::new();
    for d in model.definitions() {
        used.extend(d.formula.propositions().iter().map(|s| s.to_string()));
    }
    if let Some(bad) = model.bad_state() {
        used.extend(bad.propositions().iter().map(|s| s.to_string()));
    }
    for s in setups {
        used.extend(s.propositions().iter().map(|s| s.to_string()));
    }
    for p in model.propositions() {
        if !used.contains(&p.name) {
            out.push(format!(
                "proposition '{}' is not used by any definition, bad-state formula or setup",
                p.name
            ));
        }
    }
    out
}

/// The document for a model and a list of setups.
pub fn to_document(model: &SystemModel, setups: &[EpistemicSetup]) -> ModelDocument {
    let decl = model.decl();
    let map = |pairs: &[(String, String)]| -> NameMap { pairs.iter().cloned().collect() };
    ModelDocument {
        schema_version: SCHEMA_VERSION,
        name: decl.name.clone(),
        description: decl.description.clone(),
        horizon: decl.horizon,
        agents: decl
            .agents
            .iter()
            .map(|a| AgentDoc {
                name: a.name.clone(),
                kind: a.kind.to_string(),
                variables: a
                    .variables
                    .iter()
                    .map(|v| VariableDoc {
                        name: v.name.clone(),
                        domain: v.domain.clone(),
                    })
                    .collect(),
                actions: a.actions.clone(),
                protocol: a
                    .protocol
                    .iter()
                    .map(|p| ProtocolDoc {
                        local: map(&p.local),
                        actions: p.actions.clone(),
                    })
                    .collect(),
            })
            .collect(),
        propositions: decl
            .propositions
            .iter()
            .map(|p| PropositionDoc {
                name: p.name.clone(),
                gloss: p.gloss.clone(),
            })
            .collect(),
        definitions: decl
            .definitions
            .iter()
            .map(|d| DefinitionDoc {
                name: d.name.clone(),
                formula: d.formula.to_string(),
                gloss: d.gloss.clone(),
            })
            .collect(),
        states: decl
            .states
            .iter()
            .map(|s| StateDoc {
                name: s.name.clone(),
                locals: s.locals.iter().map(|(a, m)| (a.clone(), map(m))).collect(),
            })
            .collect(),
        initial: decl.initial.clone(),
        interpretation: decl
            .interpretation
            .iter()
            .map(|(s, row)| (s.clone(), row.iter().cloned().collect()))
            .collect(),
        joint_actions: decl
            .joint_actions
            .as_ref()
            .map(|l| l.iter().map(|j| map(j)).collect()),
        no_effect: decl.no_effect.iter().map(|j| map(j)).collect(),
        transitions: decl
            .transitions
            .iter()
            .map(|t| TransitionDoc {
                from: t.from.clone(),
                action: map(&t.action),
                to: t.to.clone(),
            })
            .collect(),
        bad_state: decl.bad_state.as_ref().map(Formula::to_string),
        setups: setups.iter().map(|s| setup_document(model, s)).collect(),
    }
}

pub fn setup_document(model: &SystemModel, setup: &EpistemicSetup) -> SetupDoc {
    SetupDoc {
        name: setup.name.clone(),
        description: setup.description.clone(),
        explicit: setup
            .explicit_entries()
            .iter()
            .map(|(l, lits)| ExplicitDoc {
                local: model.assignment(l).into_iter().collect(),
                literals: lits.iter().map(Literal::to_string).collect(),
            })
            .collect(),
        automatic: setup
            .automatic
            .rules
            .iter()
            .map(|r| RuleDoc {
                antecedents: r.antecedents.iter().map(Literal::to_string).collect(),
                conclusion: r.conclusion.to_string(),
            })
            .collect(),
        automatic_fixpoint: setup.automatic.fixpoint,
        deductions: setup.deductions.iter().map(Implication::to_string).collect(),
    }
}

/// Pretty JSON with a trailing newline.
pub fn save_string(doc: &ModelDocument) -> String {
    let mut text = serde_json::to_string_pretty(doc).expect("documents always serialize");
    text.push('\n');
    text
}

pub fn save_model(doc: &ModelDocument, path: &Path) -> std::io::Result<()> {
    fs::write(path, save_string(doc))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = r#"{
  "schema_version": 1,
  "name": "tiny",
  "agents": [
    {
      "name": "h",
      "kind": "human",
      "variables": [{ "name": "x", "domain": ["x0", "x1"] }],
      "actions": ["flip", "nop"],
      "protocol": [
        { "local": { "x": "x0" }, "actions": ["flip", "nop"] },
        { "local": { "x": "x1" }, "actions": ["nop"] }
      ]
    }
  ],
  "propositions": [{ "name": "p" }, { "name": "q" }],
  "states": [
    { "name": "s0", "locals": { "h": { "x": "x0" } } },
    { "name": "s1", "locals": { "h": { "x": "x1" } } }
  ],
  "initial": "s0",
  "interpretation": { "s0": { "p": false, "q": false }, "s1": { "p": true, "q": false } },
  "transitions": [{ "from": "s0", "action": { "h": "flip" }, "to": "s1" }],
  "bad_state": "p"
}"#;

    #[test]
    fn loads_and_saves_canonically() {
        let loaded = load_str(TINY, "tiny.json").unwrap();
        let text = save_string(&loaded.document);
        assert!(text.ends_with("}\n"));
        let again = load_str(&text, "again.json").unwrap();
        assert_eq!(save_string(&again.document), text);
    }

    #[test]
    fn unused_propositions_are_warned_about() {
        let loaded = load_str(TINY, "tiny.json").unwrap();
        assert!(loaded.warnings.iter().any(|w| w.contains("'q'")), "{:?}", loaded.warnings);
    }

    #[test]
    fn partial_interpretation_is_rejected() {
        let text = TINY.replace(r#""s0": { "p": false, "q": false }"#, r#""s0": { "p": false }"#);
        let err = load_str(&text, "tiny.json").map(|_| ()).unwrap_err();
        assert_eq!(err.pointer(), Some("/interpretation/s0"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = TINY.replace("\"initial\"", "\"colour\": 1, \"initial\"");
        let err = load_str(&text, "tiny.json").map(|_| ()).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
    }
}
