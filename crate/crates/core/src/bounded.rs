//! Bounded knowledge: the epistemic setup `(f_h, a_h, D_h)` and the epistemic
//! system that adds `Khat` to the semantics.
//!
//! `Theta_h(l) = d_h(a_h(f_h(l)))`, where
//!
//! * `f_h(l)` is the set of literals read off the interface at local state `l`,
//! * `a_h` adds the conclusions of ground rules whose antecedents are present
//!   (one simultaneous round unless [`AutomaticRules::fixpoint`] is set),
//! * `d_h(T) = { Khat q | q in T } ∪ { Khat phi | (A -> Khat phi) in D_h, A ⊆ T }`.
//!
//! Deduced conclusions never feed back into `T`, so deduction is one-shot.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::logic::{Formula, Implication, Literal};
use crate::model::{AgentId, LocalState, Point, RunSet};
use crate::semantics::{eval_point, eval_table, BoundedOracle, Interpretation, PointTable};

/// A ground rule `antecedents => conclusion` of automatic knowledge.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AutomaticRule {
    pub antecedents: BTreeSet<Literal>,
    pub conclusion: Literal,
}

impl AutomaticRule {
    pub fn new(antecedents: impl IntoIterator<Item = Literal>, conclusion: Literal) -> Self {
        AutomaticRule {
            antecedents: antecedents.into_iter().collect(),
            conclusion,
        }
    }
}

/// A finite presentation of `a_h`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AutomaticRules {
    pub rules: Vec<AutomaticRule>,
    /// Iterate rule rounds to a fixpoint instead of applying one round.
    pub fixpoint: bool,
}

/// The result of `a_h(T)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Automatic {
    pub literals: BTreeSet<Literal>,
    /// Propositions present both positively and negatively.
    pub conflicts: Vec<String>,
}

/// `a_h(T)`: `T` together with the conclusion of every rule whose
/// antecedents are all in `T`.
pub fn apply_automatic(rules: &AutomaticRules, t: &BTreeSet<Literal>) -> Automatic {
    let mut current = t.clone();
    loop {
        let fired: Vec<&Literal> = rules
            .rules
            .iter()
            .filter(|r| r.antecedents.is_subset(&current))
            .map(|r| &r.conclusion)
            .collect();
        let before = current.len();
        current.extend(fired.into_iter().cloned());
        if !rules.fixpoint || current.len() == before {
            break;
        }
    }
    let conflicts = conflicts(&current);
    Automatic {
        literals: current,
        conflicts,
    }
}

fn conflicts(t: &BTreeSet<Literal>) -> Vec<String> {
    t.iter()
        .filter(|l| !l.negated && t.contains(&l.complement()))
        .map(|l| l.prop.clone())
        .collect()
}

/// `d_h(T)` in order: tier-1 literals, then fired deductions in declaration
/// order, without duplicates.
pub fn apply_deductions(deductions: &[Implication], t: &BTreeSet<Literal>) -> Vec<Formula> {
    deduce(deductions, t).0
}

fn deduce(deductions: &[Implication], t: &BTreeSet<Literal>) -> (Vec<Formula>, usize) {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for q in t {
        let f = Formula::bknows(q.to_formula());
        if seen.insert(f.clone()) {
            out.push(f);
        }
    }
    let mut fired = 0;
    for d in deductions {
        if d.antecedents.iter().all(|a| t.contains(a)) {
            fired += 1;
            let f = d.output();
            if seen.insert(f.clone()) {
                out.push(f);
            }
        }
    }
    (out, fired)
}

/// The triple `Theta_h = (f_h, a_h, D_h)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EpistemicSetup {
    pub name: String,
    pub description: Option<String>,
    explicit: Vec<(LocalState, BTreeSet<Literal>)>,
    index: HashMap<LocalState, usize>,
    pub automatic: AutomaticRules,
    pub deductions: Vec<Implication>,
}

impl EpistemicSetup {
    pub fn new(name: impl Into<String>) -> Self {
        EpistemicSetup {
            name: name.into(),
            ..Default::default()
        }
    }

    /// Sets `f_h(l)`, replacing any earlier entry for `l`.
    pub fn set_explicit(&mut self, l: LocalState, literals: impl IntoIterator<Item = Literal>) {
        let literals: BTreeSet<Literal> = literals.into_iter().collect();
        match self.index.get(&l) {
            Some(&i) => self.explicit[i].1 = literals,
            None => {
                self.index.insert(l.clone(), self.explicit.len());
                self.explicit.push((l, literals));
            }
        }
    }

    pub fn with_explicit(mut self, l: LocalState, literals: impl IntoIterator<Item = Literal>) -> Self {
        self.set_explicit(l, literals);
        self
    }

    pub fn with_rule(mut self, rule: AutomaticRule) -> Self {
        self.automatic.rules.push(rule);
        self
    }

    pub fn with_deduction(mut self, d: Implication) -> Self {
        self.deductions.push(d);
        self
    }

    /// `f_h` entries in insertion order.
    pub fn explicit_entries(&self) -> &[(LocalState, BTreeSet<Literal>)] {
        &self.explicit
    }

    pub fn explicit(&self, l: &LocalState) -> Option<&BTreeSet<Literal>> {
        self.index.get(l).map(|&i| &self.explicit[i].1)
    }

    /// `Theta_h(l)`, or `None` when `f_h` does not cover `l`.
    pub fn theta(&self, l: &LocalState) -> Option<Theta> {
        let explicit = self.explicit(l)?;
        let automatic = apply_automatic(&self.automatic, explicit);
        let (formulas, fired) = deduce(&self.deductions, &automatic.literals);
        Some(Theta {
            set: formulas.iter().cloned().collect(),
            formulas,
            literals: automatic.literals,
            fired,
            conflicts: automatic.conflicts,
        })
    }

    /// Propositions mentioned anywhere in the setup.
    pub fn propositions(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        for (_, lits) in &self.explicit {
            out.extend(lits.iter().map(|l| l.prop.as_str()));
        }
        for r in &self.automatic.rules {
            out.extend(r.antecedents.iter().map(|l| l.prop.as_str()));
            out.insert(r.conclusion.prop.as_str());
        }
        for d in &self.deductions {
            out.extend(d.antecedents.iter().map(|l| l.prop.as_str()));
            out.extend(d.conclusion.propositions());
        }
        out
    }
}

/// `Theta_h(l)` with the intermediate literal set `a_h(f_h(l))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Theta {
    /// `a_h(f_h(l))`
    pub literals: BTreeSet<Literal>,
    /// Every member has the form `Khat phi`; tier-1 first, then deductions.
    pub formulas: Vec<Formula>,
    set: HashSet<Formula>,
    /// Number of deductions whose antecedents held.
    pub fired: usize,
    pub conflicts: Vec<String>,
}

impl Theta {
    /// Syntactic membership of a `Khat phi` formula.
    pub fn contains(&self, f: &Formula) -> bool {
        self.set.contains(f)
    }
}

/// `Theta_h(l)` for one local state.
pub fn theta_apply(setup: &EpistemicSetup, l: &LocalState) -> Result<Theta> {
    setup
        .theta(l)
        .ok_or_else(|| Error::SetupCoverage(format!("{:?}", l.values)))
}

/// The epistemic system `E = (R, pi, Theta_h)`.
#[derive(Debug, Clone)]
pub struct EpistemicSystem {
    runs: Arc<RunSet>,
    pi: Interpretation,
    setup: EpistemicSetup,
    human: AgentId,
    /// Theta per human local state, in order of first appearance.
    thetas: Vec<(LocalState, Theta)>,
    theta_index: HashMap<LocalState, usize>,
}

impl EpistemicSystem {
    /// Seals a setup over a run set. Every reachable human local state must
    /// be covered by `f_h`, and every proposition the setup mentions must be
    /// mapped by `pi`.
    pub fn new(runs: Arc<RunSet>, pi: Interpretation, setup: EpistemicSetup) -> Result<Self> {
        let model = runs.model().clone();
        let human = model.human().ok_or(Error::NoHumanAgent)?;
        for p in setup.propositions() {
            pi.prop_index(p)?;
        }
        for d in &setup.deductions {
            for a in d.conclusion.agents() {
                model.agent_id(a)?;
            }
        }
        let mut thetas = Vec::new();
        let mut theta_index = HashMap::new();
        for p in runs.points() {
            let l = runs.local_of(p, human)?;
            if theta_index.contains_key(l) {
                continue;
            }
            let theta = setup
                .theta(l)
                .ok_or_else(|| Error::SetupCoverage(model.show_local(l)))?;
            theta_index.insert(l.clone(), thetas.len());
            thetas.push((l.clone(), theta));
        }
        Ok(EpistemicSystem {
            runs,
            pi,
            setup,
            human,
            thetas,
            theta_index,
        })
    }

    pub fn runs(&self) -> &Arc<RunSet> {
        &self.runs
    }

    pub fn pi(&self) -> &Interpretation {
        &self.pi
    }

    pub fn setup(&self) -> &EpistemicSetup {
        &self.setup
    }

    pub fn human(&self) -> AgentId {
        self.human
    }

    /// Cached `Theta_h` of every reachable human local state.
    pub fn thetas(&self) -> &[(LocalState, Theta)] {
        &self.thetas
    }

    pub fn theta(&self, l: &LocalState) -> Option<&Theta> {
        self.theta_index.get(l).map(|&i| &self.thetas[i].1)
    }

    /// `Theta_h(r_h(m))`.
    pub fn theta_at(&self, p: Point) -> Result<&Theta> {
        let l = self.runs.local_of(p, self.human)?;
        self.theta(l)
            .ok_or_else(|| Error::SetupCoverage(self.runs.model().show_local(l)))
    }
}

impl BoundedOracle for EpistemicSystem {
    fn bknows(&self, _: &RunSet, p: Point, f: &Formula) -> Result<bool> {
        Ok(self.theta_at(p)?.contains(f))
    }
}

/// `(E, r, m) |= f` for the full language, by direct recursion.
pub fn eval_es(e: &EpistemicSystem, p: Point, f: &Formula) -> Result<bool> {
    eval_point(&e.runs, &e.pi, e, p, f)
}

/// [`eval_es`] at every point, indexed by [`RunSet::index_of`].
pub fn eval_es_all(e: &EpistemicSystem, f: &Formula) -> Result<PointTable> {
    eval_table(&e.runs, &e.pi, e, f)
}
