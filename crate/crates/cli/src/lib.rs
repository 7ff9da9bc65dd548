//! Command-line front end: model files, commands, reports and the bundled
//! case-study corpus.
//!
//! [`run`] executes one invocation in-process and returns its exit code:
//! 0 when every requested check passes, 1 when some check fails, 2 on usage
//! or validation errors.

pub mod corpus;
pub mod document;
pub mod dot;
pub mod report;

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use epimc_core::analysis::check_adequacy_with;
use epimc_core::{
    adequacy_impossible, check_soundness, enumerate_runs, eval_es, eval_pw, synthesize_max_sound_setup,
    EpistemicSetup, EpistemicSystem, Formula, Implication, Point, RunSet,
};

use crate::document::{load_model, save_model, setup_document, to_document, LoadedModel};
use crate::report::{
    render_theta, theta_docs, AdequacyDoc, CheckDoc, ObstructionDoc, PointDoc, SoundnessDoc,
};

#[derive(Debug, Parser)]
#[command(
    name = "epimc",
    version,
    about = "Epistemic model checker for human-automation system designs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Number of steps per run (defaults to the model's `horizon`).
    #[arg(long, global = true)]
    pub horizon: Option<usize>,

    /// Emit machine-readable JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,

    /// Name of the epistemic setup to use (defaults to the first one).
    #[arg(long, global = true)]
    pub setup: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check soundness and/or adequacy of a setup (both when neither flag is given).
    Check {
        /// Model file (JSON).
        model: PathBuf,
        /// Check soundness of the setup.
        #[arg(long)]
        soundness: bool,
        /// Check adequacy against the bad-state formula (implies soundness).
        #[arg(long)]
        adequacy: bool,
    },
    /// Evaluate a formula at one point.
    Eval {
        model: PathBuf,
        /// Run index, as listed by `runs`.
        #[arg(long)]
        run: usize,
        /// Time step within the run.
        #[arg(long)]
        time: usize,
        /// Formula text, e.g. "K[h] p_bad" or "Khat !p_bad".
        #[arg(long)]
        formula: String,
    },
    /// List the runs, or count them.
    Runs {
        model: PathBuf,
        /// Print only the number of runs.
        #[arg(long)]
        count: bool,
    },
    /// Synthesize the maximal sound setup.
    Synth {
        model: PathBuf,
        /// Write the model with the synthesized setup added to this file.
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Name of the synthesized setup.
        #[arg(long, default_value = "max_sound")]
        name: String,
        /// Candidate deductions: those of the named setup.
        #[arg(long)]
        deductions_from: Option<String>,
    },
    /// Search for a setup-independent adequacy obstruction.
    Impossible { model: PathBuf },
    /// Write the reachable state graph in Graphviz DOT.
    ExportDot {
        model: PathBuf,
        /// Output file (stdout when omitted).
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Print bounded knowledge per human local state.
    Theta {
        model: PathBuf,
        /// Restrict to one local state, given as VAR=VALUE pairs.
        #[arg(long = "local", value_parser = parse_assignment)]
        local: Vec<(String, String)>,
    },
    /// Run the bundled case studies and compare against golden outputs.
    Corpus {
        /// Directory holding the case-study models.
        #[arg(long, default_value = "examples")]
        examples: PathBuf,
        /// Directory holding the golden outputs.
        #[arg(long, default_value = "tests/golden")]
        golden: PathBuf,
        /// Rewrite the golden files instead of comparing.
        #[arg(long)]
        bless: bool,
    },
}

fn parse_assignment(s: &str) -> Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected VAR=VALUE, got '{s}'"))?;
    Ok((k.to_string(), v.to_string()))
}

/// A failed invocation: exit code 2 plus a message.
#[derive(Debug)]
pub struct UsageError(pub String);

impl<E: std::fmt::Display> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.to_string())
    }
}

type CmdResult = Result<i32, UsageError>;

/// Runs one invocation; `args` excludes the program name.
pub fn run<S: AsRef<str>>(args: &[S], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let argv = std::iter::once("epimc").chain(args.iter().map(AsRef::as_ref));
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(text.as_bytes());
            } else {
                let _ = err.write_all(text.as_bytes());
            }
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(UsageError(message)) => {
            let _ = writeln!(err, "error: {message}");
            2
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> CmdResult {
    match &cli.command {
        Command::Check {
            model,
            soundness,
            adequacy,
        } => {
            let both = !soundness && !adequacy;
            cmd_check(cli, model, *soundness || both, *adequacy || both, out)
        }
        Command::Eval {
            model,
            run,
            time,
            formula,
        } => cmd_eval(cli, model, Point::new(*run, *time), formula, out),
        Command::Runs { model, count } => cmd_runs(cli, model, *count, out),
        Command::Synth {
            model,
            output,
            name,
            deductions_from,
        } => cmd_synth(cli, model, output.as_deref(), name, deductions_from.as_deref(), out),
        Command::Impossible { model } => cmd_impossible(cli, model, out),
        Command::ExportDot { model, output } => cmd_dot(cli, model, output.as_deref(), out),
        Command::Theta { model, local } => cmd_theta(cli, model, local, out),
        Command::Corpus {
            examples,
            golden,
            bless,
        } => corpus::cmd_corpus(examples, golden, *bless, out),
    }
}

struct Session {
    loaded: LoadedModel,
    runs: Arc<RunSet>,
}

fn open(cli: &Cli, path: &Path) -> Result<Session, UsageError> {
    let loaded = load_model(path)?;
    let horizon = cli
        .horizon
        .or(loaded.model.default_horizon())
        .ok_or_else(|| UsageError("no horizon: pass --horizon or set it in the model".into()))?;
    let runs = Arc::new(enumerate_runs(loaded.model.clone(), horizon)?);
    Ok(Session { loaded, runs })
}

impl Session {
    fn setup(&self, name: Option<&str>) -> Result<&EpistemicSetup, UsageError> {
        match name {
            Some(n) => self
                .loaded
                .setup(n)
                .ok_or_else(|| UsageError(format!("model defines no setup named '{n}'"))),
            None => self
                .loaded
                .setups
                .first()
                .ok_or_else(|| UsageError("model defines no epistemic setup".into())),
        }
    }

    fn system(&self, setup: &EpistemicSetup) -> Result<EpistemicSystem, UsageError> {
        Ok(EpistemicSystem::new(
            self.runs.clone(),
            self.loaded.model.interpretation().clone(),
            setup.clone(),
        )?)
    }

    fn bad_state(&self) -> Result<&Formula, UsageError> {
        self.loaded
            .model
            .bad_state()
            .ok_or_else(|| UsageError("model declares no bad_state formula".into()))
    }

    /// Load warnings plus states not visited within the horizon.
    fn warnings(&self) -> Vec<String> {
        let mut out = self.loaded.warnings.clone();
        let model = &self.loaded.model;
        for s in epimc_core::reachable_states(&self.runs).unreachable {
            if !model.unreachable_states().contains(&s) {
                out.push(format!(
                    "state '{}' is not reached within horizon {}",
                    model.state_name(s),
                    self.runs.horizon()
                ));
            }
        }
        out
    }
}

fn emit_json<T: serde::Serialize>(out: &mut dyn Write, value: &T) -> Result<(), UsageError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn cmd_check(cli: &Cli, path: &Path, soundness: bool, adequacy: bool, out: &mut dyn Write) -> CmdResult {
    let s = open(cli, path)?;
    let setup = s.setup(cli.setup.as_deref())?;
    let e = s.system(setup)?;
    let model = &s.loaded.model;
    let verdict = check_soundness(&e)?;
    let mut pass = true;

    // Adequacy includes soundness, so its report always shows that section.
    let soundness_doc = if soundness || adequacy {
        pass &= verdict.is_sound();
        Some(SoundnessDoc::new(&s.runs, &verdict))
    } else {
        None
    };
    let (adequacy_doc, obstruction_doc) = if adequacy {
        let bad = s.bad_state()?;
        let h = model.human().ok_or(epimc_core::Error::NoHumanAgent)?;
        let a = check_adequacy_with(&e, bad, verdict)?;
        pass &= a.is_adequate();
        let o = adequacy_impossible(&s.runs, model.interpretation(), bad, h)?;
        let bad_text = bad.to_string();
        (
            Some(AdequacyDoc::new(&s.runs, &bad_text, &a)),
            Some(ObstructionDoc::new(&s.runs, &bad_text, &o)),
        )
    } else {
        (None, None)
    };

    let doc = CheckDoc {
        model: model.name().to_string(),
        setup: setup.name.clone(),
        horizon: s.runs.horizon(),
        runs: s.runs.runs().len(),
        points: s.runs.point_count(),
        soundness: soundness_doc,
        adequacy: adequacy_doc,
        obstruction: obstruction_doc,
        theta: theta_docs(model, &e),
        warnings: s.warnings(),
        result: if pass { "pass" } else { "fail" },
    };
    if cli.json {
        emit_json(out, &doc)?;
    } else {
        out.write_all(doc.render().as_bytes())?;
    }
    Ok(if doc.passed() { 0 } else { 1 })
}

#[derive(serde::Serialize)]
struct Consulted {
    operator: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    local: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    points: Vec<PointDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<Vec<String>>,
}

#[derive(serde::Serialize)]
struct EvalDoc {
    formula: String,
    point: PointDoc,
    value: bool,
    consulted: Vec<Consulted>,
}

/// Outermost epistemic subformulas, left to right.
fn outer_modalities<'a>(f: &'a Formula, acc: &mut Vec<&'a Formula>) {
    match f {
        Formula::Knows(..) | Formula::BKnows(_) => acc.push(f),
        _ => {
            for c in f.children() {
                outer_modalities(c, acc);
            }
        }
    }
}

fn cmd_eval(cli: &Cli, path: &Path, p: Point, text: &str, out: &mut dyn Write) -> CmdResult {
    let s = open(cli, path)?;
    let f: Formula = text.parse()?;
    s.runs.check_point(p)?;
    let model = &s.loaded.model;
    let system = if f.contains_bknows() || cli.setup.is_some() {
        Some(s.system(s.setup(cli.setup.as_deref())?)?)
    } else {
        None
    };
    let value = match &system {
        Some(e) => eval_es(e, p, &f)?,
        None => eval_pw(&s.runs, model.interpretation(), p, &f)?,
    };

    let mut modalities = Vec::new();
    outer_modalities(&f, &mut modalities);
    let all: Vec<Point> = s.runs.points().collect();
    let mut consulted = Vec::new();
    for m in modalities {
        match m {
            Formula::Knows(agent, _) => {
                let id = model.agent_id(agent)?;
                let class = s.runs.points_indistinguishable_from(p, id, &all)?;
                consulted.push(Consulted {
                    operator: m.to_string(),
                    local: Some(model.show_local(s.runs.local_of(p, id)?)),
                    points: class.iter().map(|&q| PointDoc::new(&s.runs, q)).collect(),
                    theta: None,
                });
            }
            Formula::BKnows(_) => {
                let e = system.as_ref().expect("Khat implies a setup");
                let theta = e.theta_at(p)?;
                consulted.push(Consulted {
                    operator: m.to_string(),
                    local: Some(model.show_local(s.runs.local_of(p, e.human())?)),
                    points: vec![],
                    theta: Some(theta.formulas.iter().map(|g| g.to_string()).collect()),
                });
            }
            _ => unreachable!(),
        }
    }
    let doc = EvalDoc {
        formula: f.to_string(),
        point: PointDoc::new(&s.runs, p),
        value,
        consulted,
    };
    if cli.json {
        emit_json(out, &doc)?;
    } else {
        writeln!(out, "{}", doc.value)?;
        for c in &doc.consulted {
            if let Some(theta) = &c.theta {
                writeln!(
                    out,
                    "{}: Theta_h{} = {{{}}}",
                    c.operator,
                    c.local.as_deref().unwrap_or(""),
                    theta.join(", ")
                )?;
            } else {
                writeln!(
                    out,
                    "{}: {} point{} indistinguishable at local state {}",
                    c.operator,
                    c.points.len(),
                    if c.points.len() == 1 { "" } else { "s" },
                    c.local.as_deref().unwrap_or("")
                )?;
                for q in &c.points {
                    writeln!(out, "  run {} time {} at {}", q.run, q.time, q.state)?;
                }
            }
        }
    }
    Ok(0)
}

#[derive(serde::Serialize)]
struct RunDoc {
    index: usize,
    states: Vec<String>,
    actions: Vec<String>,
    absorbing: bool,
}

fn cmd_runs(cli: &Cli, path: &Path, count: bool, out: &mut dyn Write) -> CmdResult {
    let s = open(cli, path)?;
    let model = &s.loaded.model;
    if count {
        if cli.json {
            emit_json(out, &serde_json::json!({ "runs": s.runs.runs().len() }))?;
        } else {
            writeln!(out, "{}", s.runs.runs().len())?;
        }
        return Ok(0);
    }
    let docs: Vec<RunDoc> = s
        .runs
        .runs()
        .iter()
        .enumerate()
        .map(|(i, r)| RunDoc {
            index: i,
            states: r.states.iter().map(|&st| model.state_name(st).to_string()).collect(),
            actions: r.actions.iter().map(|a| model.show_joint(a)).collect(),
            absorbing: r.terminal_absorbing,
        })
        .collect();
    if cli.json {
        emit_json(out, &docs)?;
    } else {
        writeln!(
            out,
            "{} runs at horizon {} ({} points)",
            docs.len(),
            s.runs.horizon(),
            s.runs.point_count()
        )?;
        for d in &docs {
            let mut line = format!("r{}: {}", d.index, d.states[0]);
            for (a, st) in d.actions.iter().zip(&d.states[1..]) {
                line.push_str(&format!(" -{a}-> {st}"));
            }
            if d.absorbing {
                line.push_str(" [absorbing]");
            }
            writeln!(out, "{line}")?;
        }
    }
    Ok(0)
}

fn cmd_synth(
    cli: &Cli,
    path: &Path,
    output: Option<&Path>,
    name: &str,
    deductions_from: Option<&str>,
    out: &mut dyn Write,
) -> CmdResult {
    let s = open(cli, path)?;
    let model = &s.loaded.model;
    let candidates: Vec<Implication> = match deductions_from {
        Some(n) => s.setup(Some(n))?.deductions.clone(),
        None => vec![],
    };
    let synth = synthesize_max_sound_setup(s.runs.clone(), model.interpretation(), &candidates, name)?;
    let mut setup = synth.setup;
    setup.description = Some(format!(
        "maximal sound setup at horizon {}",
        s.runs.horizon()
    ));
    let e = s.system(&setup)?;
    let sound = check_soundness(&e)?.is_sound();

    if let Some(target) = output {
        let mut setups: Vec<EpistemicSetup> = s
            .loaded
            .setups
            .iter()
            .filter(|t| t.name != name)
            .cloned()
            .collect();
        setups.push(setup.clone());
        save_model(&to_document(model, &setups), target)?;
    }

    if cli.json {
        let doc = serde_json::json!({
            "model": model.name(),
            "horizon": s.runs.horizon(),
            "setup": setup_document(model, &setup),
            "dropped": synth.dropped.iter().map(|(d, p)| serde_json::json!({
                "deduction": d.to_string(),
                "counterexample": PointDoc::new(&s.runs, *p),
            })).collect::<Vec<_>>(),
            "sound": sound,
        });
        emit_json(out, &doc)?;
    } else {
        writeln!(out, "model: {}", model.name())?;
        writeln!(out, "synthesized setup: {name} (horizon {})", s.runs.horizon())?;
        writeln!(out, "explicit knowledge f_h:")?;
        for (l, lits) in setup.explicit_entries() {
            let lits: Vec<String> = lits.iter().map(|q| q.to_string()).collect();
            writeln!(out, "  {}: {{{}}}", model.show_local(l), lits.join(", "))?;
        }
        writeln!(out, "deductions kept: {}", setup.deductions.len())?;
        for d in &setup.deductions {
            writeln!(out, "  {d}")?;
        }
        writeln!(out, "deductions dropped: {}", synth.dropped.len())?;
        for (d, p) in &synth.dropped {
            writeln!(out, "  {d}")?;
            let pd = PointDoc::new(&s.runs, *p);
            writeln!(
                out,
                "    fails at run {} time {} at {}, prefix {}",
                pd.run,
                pd.time,
                pd.state,
                pd.prefix.join(" -> ")
            )?;
        }
        writeln!(out, "soundness: {}", if sound { "SOUND" } else { "UNSOUND" })?;
        if let Some(target) = output {
            writeln!(out, "written: {}", target.display())?;
        }
    }
    Ok(if sound { 0 } else { 1 })
}

fn cmd_impossible(cli: &Cli, path: &Path, out: &mut dyn Write) -> CmdResult {
    let s = open(cli, path)?;
    let model = &s.loaded.model;
    let bad = s.bad_state()?;
    let h = model.human().ok_or(epimc_core::Error::NoHumanAgent)?;
    let o = adequacy_impossible(&s.runs, model.interpretation(), bad, h)?;
    let doc = ObstructionDoc::new(&s.runs, &bad.to_string(), &o);
    if cli.json {
        emit_json(out, &doc)?;
    } else {
        let mut text = String::new();
        writeln!(text, "model: {}", model.name()).ok();
        writeln!(text, "horizon: {}", s.runs.horizon()).ok();
        doc.render(&mut text);
        out.write_all(text.as_bytes())?;
    }
    Ok(if doc.is_obstructed() { 1 } else { 0 })
}

fn cmd_dot(cli: &Cli, path: &Path, output: Option<&Path>, out: &mut dyn Write) -> CmdResult {
    let s = open(cli, path)?;
    let text = dot::export_dot(&s.runs);
    match output {
        Some(target) => std::fs::write(target, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(0)
}

fn cmd_theta(cli: &Cli, path: &Path, local: &[(String, String)], out: &mut dyn Write) -> CmdResult {
    let s = open(cli, path)?;
    let model = &s.loaded.model;
    let setup = s.setup(cli.setup.as_deref())?;
    let e = s.system(setup)?;
    let mut docs = theta_docs(model, &e);
    if !local.is_empty() {
        let h = e.human();
        let l = model.local_state(h, local)?;
        let shown = model.show_local(&l);
        docs.retain(|d| d.local == shown);
        if docs.is_empty() {
            let theta = epimc_core::theta_apply(setup, &l)?;
            docs.push(report::ThetaDoc {
                local: shown,
                literals: theta.literals.iter().map(|q| q.to_string()).collect(),
                formulas: theta.formulas.iter().map(|f| f.to_string()).collect(),
                deductions_fired: theta.fired,
                conflicts: theta.conflicts.clone(),
            });
        }
    }
    if cli.json {
        emit_json(
            out,
            &serde_json::json!({ "model": model.name(), "setup": setup.name, "theta": docs }),
        )?;
    } else {
        let mut text = String::new();
        writeln!(text, "model: {}", model.name()).ok();
        writeln!(text, "setup: {}", setup.name).ok();
        render_theta(&mut text, &docs);
        out.write_all(text.as_bytes())?;
    }
    Ok(0)
}
