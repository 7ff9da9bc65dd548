//! The bundled case studies: documented invocations and their golden outputs.

use std::fs;
use std::io::Write;
use std::path::Path;

use similar::TextDiff;

use crate::UsageError;

/// One documented invocation of a case study.
#[derive(Debug, Clone, Copy)]
pub struct Invocation {
    /// Golden file name under the golden directory.
    pub golden: &'static str,
    /// Arguments; `{model}` is replaced by the model path.
    pub args: &'static [&'static str],
    pub exit: i32,
}

#[derive(Debug, Clone, Copy)]
pub struct CaseStudy {
    pub id: &'static str,
    pub invocations: &'static [Invocation],
}

macro_rules! inv {
    ($golden:expr, $exit:expr, [$($arg:expr),*]) => {
        Invocation { golden: $golden, args: &[$($arg),*], exit: $exit }
    };
}

/// Cases in id order.
pub const CASES: &[CaseStudy] = &[
    CaseStudy {
        id: "driver_speeding",
        invocations: &[
            inv!("driver_speeding.check.txt", 0, ["check", "{model}", "--setup", "driver"]),
            inv!("driver_speeding.theta.txt", 0, ["theta", "{model}", "--setup", "driver"]),
        ],
    },
    CaseStudy {
        id: "pilot_approach",
        invocations: &[
            inv!("pilot_approach.check.txt", 0, ["check", "{model}", "--setup", "pilot"]),
            inv!(
                "pilot_approach.theta.txt",
                0,
                ["theta", "{model}", "--setup", "pilot", "--local", "flaps=flaps.not.full", "--local", "gear=landing.gear.up"]
            ),
        ],
    },
    CaseStudy {
        id: "therac_modified",
        invocations: &[
            inv!(
                "therac_modified.check.txt",
                0,
                ["check", "{model}", "--soundness", "--adequacy", "--setup", "fixed", "--horizon", "10"]
            ),
            inv!(
                "therac_modified.check.json",
                0,
                ["check", "{model}", "--soundness", "--adequacy", "--setup", "fixed", "--horizon", "10", "--json"]
            ),
            inv!("therac_modified.impossible.txt", 0, ["impossible", "{model}", "--horizon", "10"]),
            inv!("therac_modified.synth.txt", 0, ["synth", "{model}", "--horizon", "10", "--deductions-from", "fixed"]),
            inv!("therac_modified.runs.txt", 0, ["runs", "{model}", "--horizon", "10"]),
            inv!("therac_modified.dot", 0, ["export-dot", "{model}", "--horizon", "10"]),
        ],
    },
    CaseStudy {
        id: "therac_original",
        invocations: &[
            inv!(
                "therac_original.check.txt",
                1,
                ["check", "{model}", "--adequacy", "--setup", "naive", "--horizon", "8"]
            ),
            inv!(
                "therac_original.check.json",
                1,
                ["check", "{model}", "--adequacy", "--setup", "naive", "--horizon", "8", "--json"]
            ),
            inv!("therac_original.impossible.txt", 1, ["impossible", "{model}", "--horizon", "8"]),
            inv!("therac_original.synth.txt", 0, ["synth", "{model}", "--horizon", "8"]),
            inv!("therac_original.runs.txt", 0, ["runs", "{model}", "--horizon", "8"]),
            inv!("therac_original.dot", 0, ["export-dot", "{model}", "--horizon", "8"]),
        ],
    },
];

/// Outcome of one invocation.
#[derive(Debug, Clone)]
pub struct InvocationResult {
    pub case: &'static str,
    pub golden: &'static str,
    pub exit: i32,
    pub expected_exit: i32,
    pub output: String,
    /// Unified diff against the golden file; empty when they match.
    pub diff: String,
}

impl InvocationResult {
    pub fn passed(&self) -> bool {
        self.exit == self.expected_exit && self.diff.is_empty()
    }
}

/// Runs every documented invocation in-process.
pub fn run_corpus(examples: &Path, golden: &Path, bless: bool) -> Result<Vec<InvocationResult>, UsageError> {
    let mut results = Vec::new();
    for case in CASES {
        let model = examples.join(format!("{}.json", case.id));
        let model = model.to_string_lossy().into_owned();
        for inv in case.invocations {
            let args: Vec<String> = inv.args.iter().map(|a| a.replace("{model}", &model)).collect();
            let mut out = Vec::new();
            let mut err = Vec::new();
            let exit = crate::run(&args, &mut out, &mut err);
            let mut output = String::from_utf8(out)?;
            if exit == 2 {
                output.push_str(&String::from_utf8_lossy(&err));
            }
            let path = golden.join(inv.golden);
            let diff = if bless {
                fs::create_dir_all(golden)?;
                fs::write(&path, &output)?;
                String::new()
            } else {
                let expected = fs::read_to_string(&path).unwrap_or_default();
                if expected == output {
                    String::new()
                } else {
                    TextDiff::from_lines(&expected, &output)
                        .unified_diff()
                        .header(&path.to_string_lossy(), "actual")
                        .to_string()
                }
            };
            results.push(InvocationResult {
                case: case.id,
                golden: inv.golden,
                exit,
                expected_exit: inv.exit,
                output,
                diff,
            });
        }
    }
    Ok(results)
}

pub(crate) fn cmd_corpus(examples: &Path, golden: &Path, bless: bool, out: &mut dyn Write) -> Result<i32, UsageError> {
    let results = run_corpus(examples, golden, bless)?;
    let mut failed = 0;
    for r in &results {
        let status = if r.passed() { "ok" } else { "FAIL" };
        writeln!(out, "{status:4} {} {}", r.case, r.golden)?;
        if r.exit != r.expected_exit {
            writeln!(out, "     exit {} (expected {})", r.exit, r.expected_exit)?;
        }
        if !r.diff.is_empty() {
            out.write_all(r.diff.as_bytes())?;
        }
        if !r.passed() {
            failed += 1;
        }
    }
    writeln!(out, "{} of {} invocations match", results.len() - failed, results.len())?;
    Ok(if failed == 0 { 0 } else { 1 })
}
