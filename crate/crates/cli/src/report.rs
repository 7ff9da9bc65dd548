//! Verdict documents and their text rendering.

use std::fmt::Write as _;

use epimc_core::analysis::{AdequacyVerdict, Obstruction, SoundnessVerdict, SoundnessWitness};
use epimc_core::{EpistemicSystem, Point, RunSet, SystemModel};
use serde::Serialize;

/// A point with everything a reader needs to locate it without raw indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PointDoc {
    pub run: usize,
    pub time: usize,
    pub state: String,
    /// State names from the initial state up to this point.
    pub prefix: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub human_local: Option<String>,
}

impl PointDoc {
    pub fn new(runs: &RunSet, p: Point) -> Self {
        let model = runs.model();
        let state = runs.state_at(p).expect("point comes from the run set");
        PointDoc {
            run: p.run,
            time: p.time,
            state: model.state_name(state).to_string(),
            prefix: runs
                .prefix_names(p)
                .expect("point comes from the run set")
                .into_iter()
                .map(String::from)
                .collect(),
            human_local: model
                .human()
                .map(|h| model.show_local(model.state(state).local(h))),
        }
    }

    fn describe(&self, times: &str) -> String {
        let mut s = format!(
            "run {} {} {} at {}, prefix {}",
            self.run,
            if times.contains('-') { "times" } else { "time" },
            times,
            self.state,
            self.prefix.join(" -> ")
        );
        if let Some(l) = &self.human_local {
            write!(s, ", h local state {l}").unwrap();
        }
        s
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "clause")]
pub enum WitnessDoc {
    #[serde(rename = "1")]
    Clause1 { point: PointDoc, literal: String },
    #[serde(rename = "2")]
    Clause2 { point: PointDoc, deduction: String },
}

impl WitnessDoc {
    fn point(&self) -> &PointDoc {
        match self {
            WitnessDoc::Clause1 { point, .. } | WitnessDoc::Clause2 { point, .. } => point,
        }
    }

    fn item(&self) -> String {
        match self {
            WitnessDoc::Clause1 { literal, .. } => {
                format!("clause 1: literal {literal} of a_h(f_h(l)) is false")
            }
            WitnessDoc::Clause2 { deduction, .. } => {
                format!("clause 2: deduction '{deduction}' fails")
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SoundnessDoc {
    pub status: &'static str,
    pub witnesses: Vec<WitnessDoc>,
}

impl SoundnessDoc {
    pub fn new(runs: &RunSet, verdict: &SoundnessVerdict) -> Self {
        SoundnessDoc {
            status: if verdict.is_sound() { "sound" } else { "unsound" },
            witnesses: verdict
                .witnesses
                .iter()
                .map(|w| match w {
                    SoundnessWitness::Clause1 { point, literal } => WitnessDoc::Clause1 {
                        point: PointDoc::new(runs, *point),
                        literal: literal.to_string(),
                    },
                    SoundnessWitness::Clause2 {
                        point, implication, ..
                    } => WitnessDoc::Clause2 {
                        point: PointDoc::new(runs, *point),
                        deduction: implication.to_string(),
                    },
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AdequacyDoc {
    pub status: &'static str,
    pub bad_state: String,
    pub missing_knowledge: Vec<PointDoc>,
    pub sound: bool,
}

impl AdequacyDoc {
    pub fn new(runs: &RunSet, bad: &str, verdict: &AdequacyVerdict) -> Self {
        AdequacyDoc {
            status: if verdict.is_adequate() {
                "adequate"
            } else {
                "inadequate"
            },
            bad_state: bad.to_string(),
            missing_knowledge: verdict
                .missing_knowledge
                .iter()
                .map(|&p| PointDoc::new(runs, p))
                .collect(),
            sound: verdict.soundness.is_sound(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ObstructionDoc {
    None { bad_state: String },
    WitnessPair {
        bad_state: String,
        bad_point: PointDoc,
        good_point: PointDoc,
    },
}

pub const OBSTRUCTION_LINE: &str =
    "no sound-and-adequate setup exists for this design (setup-independent obstruction)";

impl ObstructionDoc {
    pub fn new(runs: &RunSet, bad: &str, o: &Obstruction) -> Self {
        match o {
            Obstruction::NoObstruction => ObstructionDoc::None {
                bad_state: bad.to_string(),
            },
            Obstruction::WitnessPair(p, q) => ObstructionDoc::WitnessPair {
                bad_state: bad.to_string(),
                bad_point: PointDoc::new(runs, *p),
                good_point: PointDoc::new(runs, *q),
            },
        }
    }

    pub fn is_obstructed(&self) -> bool {
        matches!(self, ObstructionDoc::WitnessPair { .. })
    }

    pub fn render(&self, out: &mut String) {
        match self {
            ObstructionDoc::None { bad_state } => {
                writeln!(out, "obstruction: NoObstruction").unwrap();
                writeln!(
                    out,
                    "  every information set of h agrees on {bad_state}; the possible-worlds view allows an adequate setup"
                )
                .unwrap();
            }
            ObstructionDoc::WitnessPair {
                bad_state,
                bad_point,
                good_point,
            } => {
                writeln!(out, "obstruction: WitnessPair").unwrap();
                writeln!(out, "  {OBSTRUCTION_LINE}").unwrap();
                writeln!(
                    out,
                    "  {bad_state} true:  {}",
                    bad_point.describe(&bad_point.time.to_string())
                )
                .unwrap();
                writeln!(
                    out,
                    "  {bad_state} false: {}",
                    good_point.describe(&good_point.time.to_string())
                )
                .unwrap();
                writeln!(
                    out,
                    "  h cannot distinguish the two points, so K[h] {bad_state} fails at the first and no sound setup contains Khat {bad_state} there"
                )
                .unwrap();
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThetaDoc {
    pub local: String,
    pub literals: Vec<String>,
    pub formulas: Vec<String>,
    pub deductions_fired: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub conflicts: Vec<String>,
}

pub fn theta_docs(model: &SystemModel, e: &EpistemicSystem) -> Vec<ThetaDoc> {
    e.thetas()
        .iter()
        .map(|(l, t)| ThetaDoc {
            local: model.show_local(l),
            literals: t.literals.iter().map(|q| q.to_string()).collect(),
            formulas: t.formulas.iter().map(|f| f.to_string()).collect(),
            deductions_fired: t.fired,
            conflicts: t.conflicts.clone(),
        })
        .collect()
}

pub fn render_theta(out: &mut String, thetas: &[ThetaDoc]) {
    for t in thetas {
        writeln!(
            out,
            "  {}: {{{}}} ({} deduction{} fired)",
            t.local,
            t.formulas.join(", "),
            t.deductions_fired,
            if t.deductions_fired == 1 { "" } else { "s" }
        )
        .unwrap();
        if !t.conflicts.is_empty() {
            writeln!(out, "    inconsistent literals: {}", t.conflicts.join(", ")).unwrap();
        }
    }
}

/// The `check` verdict document.
#[derive(Debug, Clone, Serialize)]
pub struct CheckDoc {
    pub model: String,
    pub setup: String,
    pub horizon: usize,
    pub runs: usize,
    pub points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub soundness: Option<SoundnessDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adequacy: Option<AdequacyDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub obstruction: Option<ObstructionDoc>,
    pub theta: Vec<ThetaDoc>,
    pub warnings: Vec<String>,
    pub result: &'static str,
}

impl CheckDoc {
    pub fn passed(&self) -> bool {
        self.result == "pass"
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "model: {}", self.model).unwrap();
        writeln!(out, "setup: {}", self.setup).unwrap();
        writeln!(
            out,
            "horizon: {} ({} runs, {} points)",
            self.horizon, self.runs, self.points
        )
        .unwrap();
        for w in &self.warnings {
            writeln!(out, "warning: {w}").unwrap();
        }
        if let Some(s) = &self.soundness {
            writeln!(out).unwrap();
            writeln!(
                out,
                "soundness: {} ({} witness{})",
                s.status.to_uppercase(),
                s.witnesses.len(),
                if s.witnesses.len() == 1 { "" } else { "es" }
            )
            .unwrap();
            render_grouped(&mut out, &s.witnesses, |w| w.item(), |w| w.point());
        }
        if let Some(a) = &self.adequacy {
            writeln!(out).unwrap();
            writeln!(out, "adequacy: {}", a.status.to_uppercase()).unwrap();
            if a.missing_knowledge.is_empty() {
                writeln!(out, "  Khat {} holds at every {} point", a.bad_state, a.bad_state)
                    .unwrap();
            } else {
                writeln!(
                    out,
                    "  {} point{} lacking Khat {}:",
                    a.missing_knowledge.len(),
                    if a.missing_knowledge.len() == 1 { "" } else { "s" },
                    a.bad_state
                )
                .unwrap();
                render_points(&mut out, &a.missing_knowledge, "    ");
            }
            if !a.sound {
                writeln!(out, "  the setup is unsound (see soundness)").unwrap();
            }
        }
        if let Some(o) = &self.obstruction {
            writeln!(out).unwrap();
            o.render(&mut out);
        }
        writeln!(out).unwrap();
        writeln!(out, "bounded knowledge per h local state:").unwrap();
        render_theta(&mut out, &self.theta);
        writeln!(out).unwrap();
        writeln!(out, "result: {}", self.result.to_uppercase()).unwrap();
        out
    }
}

/// Renders items grouped by their description, with stuttered points of the
/// same run and state collapsed into time ranges.
fn render_grouped<T>(
    out: &mut String,
    items: &[T],
    label: impl Fn(&T) -> String,
    point: impl Fn(&T) -> &PointDoc,
) {
    let mut labels: Vec<String> = Vec::new();
    for it in items {
        let l = label(it);
        if !labels.contains(&l) {
            labels.push(l);
        }
    }
    for l in labels {
        writeln!(out, "  {l}").unwrap();
        let pts: Vec<PointDoc> = items
            .iter()
            .filter(|it| label(it) == l)
            .map(|it| point(it).clone())
            .collect();
        render_points(out, &pts, "    ");
    }
}

fn render_points(out: &mut String, points: &[PointDoc], indent: &str) {
    let mut i = 0;
    while i < points.len() {
        let first = &points[i];
        let mut j = i;
        while j + 1 < points.len()
            && points[j + 1].run == first.run
            && points[j + 1].state == first.state
            && points[j + 1].time == points[j].time + 1
        {
            j += 1;
        }
        let times = if j == i {
            first.time.to_string()
        } else {
            format!("{}-{}", first.time, points[j].time)
        };
        writeln!(out, "{indent}{}", first.describe(&times)).unwrap();
        i = j + 1;
    }
}
