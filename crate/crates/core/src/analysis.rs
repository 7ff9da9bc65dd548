//! Soundness and adequacy of an epistemic system, the setup-independent
//! adequacy obstruction, maximal sound setups, and checks of the guarantees
//! that soundness buys (bounded knowledge implies knowledge, and truth).

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use crate::bounded::{eval_es_all, EpistemicSetup, EpistemicSystem};
use crate::error::{Error, Result};
use crate::logic::{Formula, Implication, Literal};
use crate::model::{AgentId, LocalState, Point, RunSet};
use crate::semantics::{eval_pw_all, Interpretation};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SoundnessWitness {
    /// A literal of `a_h(f_h(l))` that is false at a point where h is in `l`.
    Clause1 { point: Point, literal: Literal },
    /// A point where the antecedents of a deduction hold and its conclusion
    /// fails. `index` is the deduction's position in `D_h`.
    Clause2 {
        point: Point,
        index: usize,
        implication: Implication,
    },
}

impl SoundnessWitness {
    pub fn point(&self) -> Point {
        match self {
            SoundnessWitness::Clause1 { point, .. } | SoundnessWitness::Clause2 { point, .. } => {
                *point
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SoundnessVerdict {
    /// Clause-1 witnesses in canonical point order, then clause-2 witnesses
    /// by deduction, then point.
    pub witnesses: Vec<SoundnessWitness>,
}

impl SoundnessVerdict {
    pub fn is_sound(&self) -> bool {
        self.witnesses.is_empty()
    }

    pub fn clause1(&self) -> impl Iterator<Item = &SoundnessWitness> {
        self.witnesses
            .iter()
            .filter(|w| matches!(w, SoundnessWitness::Clause1 { .. }))
    }

    pub fn clause2(&self) -> impl Iterator<Item = &SoundnessWitness> {
        self.witnesses
            .iter()
            .filter(|w| matches!(w, SoundnessWitness::Clause2 { .. }))
    }
}

/// Checks both soundness clauses at every point, collecting every witness.
pub fn check_soundness(e: &EpistemicSystem) -> Result<SoundnessVerdict> {
    let runs = e.runs();
    let mut witnesses = Vec::new();

    let mut literal_tables: HashMap<&Literal, Vec<bool>> = HashMap::new();
    for (_, theta) in e.thetas() {
        for q in &theta.literals {
            if !literal_tables.contains_key(q) {
                literal_tables.insert(q, eval_pw_all(runs, e.pi(), &q.to_formula())?);
            }
        }
    }
    for p in runs.points() {
        let theta = e.theta_at(p)?;
        let idx = runs.index_of(p);
        for q in &theta.literals {
            if !literal_tables[q][idx] {
                witnesses.push(SoundnessWitness::Clause1 {
                    point: p,
                    literal: q.clone(),
                });
            }
        }
    }

    for (index, d) in e.setup().deductions.iter().enumerate() {
        let table = eval_es_all(e, &d.validity_formula())?;
        for (i, ok) in table.iter().enumerate() {
            if !ok {
                witnesses.push(SoundnessWitness::Clause2 {
                    point: runs.point_at(i),
                    index,
                    implication: d.clone(),
                });
            }
        }
    }
    Ok(SoundnessVerdict { witnesses })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdequacyVerdict {
    /// Points where the bad-state formula holds but `Khat bad` is not in
    /// `Theta_h`, in canonical order.
    pub missing_knowledge: Vec<Point>,
    pub soundness: SoundnessVerdict,
}

impl AdequacyVerdict {
    pub fn is_adequate(&self) -> bool {
        self.missing_knowledge.is_empty() && self.soundness.is_sound()
    }
}

/// Adequacy: `bad -> Khat bad` is valid and the system is sound.
pub fn check_adequacy(e: &EpistemicSystem, bad: &Formula) -> Result<AdequacyVerdict> {
    let soundness = check_soundness(e)?;
    check_adequacy_with(e, bad, soundness)
}

/// [`check_adequacy`] reusing an already computed soundness verdict.
pub fn check_adequacy_with(
    e: &EpistemicSystem,
    bad: &Formula,
    soundness: SoundnessVerdict,
) -> Result<AdequacyVerdict> {
    if !bad.is_propositional() {
        return Err(Error::NotPropositional(bad.to_string()));
    }
    let runs = e.runs();
    let table = eval_pw_all(runs, e.pi(), bad)?;
    let knows_bad = Formula::bknows(bad.clone());
    let mut missing_knowledge = Vec::new();
    for (i, &is_bad) in table.iter().enumerate() {
        let p = runs.point_at(i);
        if is_bad && !e.theta_at(p)?.contains(&knows_bad) {
            missing_knowledge.push(p);
        }
    }
    Ok(AdequacyVerdict {
        missing_knowledge,
        soundness,
    })
}

/// Result of the setup-independent adequacy check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Obstruction {
    NoObstruction,
    /// `bad` holds at the first point and not at the second, and h cannot tell
    /// them apart. No sound setup can then contain `Khat bad` at the first
    /// point, so no setup is both sound and adequate.
    WitnessPair(Point, Point),
}

/// Searches for h-indistinguishable points that disagree on `bad`. Returns
/// the first bad point (canonical order) whose information set contains a
/// good point, paired with the first such good point.
pub fn adequacy_impossible(
    runs: &RunSet,
    pi: &Interpretation,
    bad: &Formula,
    human: AgentId,
) -> Result<Obstruction> {
    if !bad.is_propositional() {
        return Err(Error::NotPropositional(bad.to_string()));
    }
    let table = eval_pw_all(runs, pi, bad)?;
    let model = runs.model();
    let mut first_good: HashMap<&LocalState, Point> = HashMap::new();
    for (i, &is_bad) in table.iter().enumerate() {
        if !is_bad {
            let p = runs.point_at(i);
            first_good
                .entry(model.state(runs.state_at(p)?).local(human))
                .or_insert(p);
        }
    }
    for (i, &is_bad) in table.iter().enumerate() {
        if is_bad {
            let p = runs.point_at(i);
            if let Some(&q) = first_good.get(model.state(runs.state_at(p)?).local(human)) {
                return Ok(Obstruction::WitnessPair(p, q));
            }
        }
    }
    Ok(Obstruction::NoObstruction)
}

/// A maximal sound setup and the deductions that had to be dropped.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub setup: EpistemicSetup,
    /// Deductions violating soundness clause 2, each with its first
    /// counterexample point.
    pub dropped: Vec<(Implication, Point)>,
}

/// Builds the largest sound explicit map: `f_h(l)` holds every literal over
/// the declared propositions that is true at every point where h is in `l`.
/// No automatic rules. Deductions failing clause 2 are dropped until the
/// remainder is valid (conclusions mentioning `Khat` depend on which
/// deductions survive, hence the iteration).
pub fn synthesize_max_sound_setup(
    runs: Arc<RunSet>,
    pi: &Interpretation,
    deductions: &[Implication],
    name: &str,
) -> Result<Synthesis> {
    let model = runs.model().clone();
    let human = model.human().ok_or(Error::NoHumanAgent)?;
    let mut setup = EpistemicSetup::new(name);
    let mut tables = Vec::new();
    for prop in pi.declared() {
        tables.push((prop, eval_pw_all(&runs, pi, &Formula::prop(prop.clone()))?));
    }
    for (l, points) in runs.information_sets(human) {
        let mut lits = BTreeSet::new();
        for (prop, table) in &tables {
            let values: Vec<bool> = points.iter().map(|&p| table[runs.index_of(p)]).collect();
            if values.iter().all(|&v| v) {
                lits.insert(Literal::pos(prop.as_str()));
            } else if values.iter().all(|&v| !v) {
                lits.insert(Literal::neg(prop.as_str()));
            }
        }
        setup.set_explicit(l, lits);
    }

    let mut kept: Vec<Implication> = deductions.to_vec();
    let mut dropped = Vec::new();
    loop {
        let mut candidate = setup.clone();
        candidate.deductions = kept.clone();
        let e = EpistemicSystem::new(runs.clone(), pi.clone(), candidate)?;
        let mut survivors = Vec::new();
        for d in &kept {
            let table = eval_es_all(&e, &d.validity_formula())?;
            match table.iter().position(|v| !v) {
                Some(i) => dropped.push((d.clone(), runs.point_at(i))),
                None => survivors.push(d.clone()),
            }
        }
        if survivors.len() == kept.len() {
            break;
        }
        kept = survivors;
    }
    setup.deductions = kept;
    Ok(Synthesis { setup, dropped })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TheoremCheck {
    /// The system is unsound, so the theorem promises nothing.
    NotApplicable,
    Verified,
    /// `Khat phi` is in `Theta_h` at the point but the consequent fails.
    Violation(Point, Formula),
}

/// Checks `Khat phi -> K[h] phi` at every point for every `Khat phi` in
/// `Theta_h`.
pub fn verify_theorem1(e: &EpistemicSystem) -> Result<TheoremCheck> {
    let h = e.runs().model().agent(e.human()).name.clone();
    verify_consequent(e, |phi| Formula::knows(h.clone(), phi.clone()))
}

/// Checks `Khat phi -> phi` at every point for every `Khat phi` in `Theta_h`.
pub fn verify_corollary1(e: &EpistemicSystem) -> Result<TheoremCheck> {
    verify_consequent(e, |phi| phi.clone())
}

fn verify_consequent(
    e: &EpistemicSystem,
    consequent: impl Fn(&Formula) -> Formula,
) -> Result<TheoremCheck> {
    if !check_soundness(e)?.is_sound() {
        return Ok(TheoremCheck::NotApplicable);
    }
    let runs = e.runs();
    let mut tables: HashMap<Formula, Vec<bool>> = HashMap::new();
    for p in runs.points() {
        for f in &e.theta_at(p)?.formulas {
            let Formula::BKnows(phi) = f else {
                unreachable!("Theta members are Khat formulas")
            };
            let target = consequent(phi);
            if !tables.contains_key(&target) {
                let t = eval_es_all(e, &target)?;
                tables.insert(target.clone(), t);
            }
            if !tables[&target][runs.index_of(p)] {
                return Ok(TheoremCheck::Violation(p, target));
            }
        }
    }
    Ok(TheoremCheck::Verified)
}
