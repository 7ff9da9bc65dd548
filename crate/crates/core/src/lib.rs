//! Epistemic model checking for human-automation systems.
//!
//! A [`SystemModel`] describes agents with local states, protocols and a
//! deterministic transition function. [`enumerate_runs`] unfolds it into a
//! [`RunSet`] of bounded runs whose points carry possible-worlds knowledge
//! (`K[i]`, see [`semantics`]). An [`EpistemicSetup`] gives the human
//! operator bounded, syntactic knowledge (`Khat`, see [`bounded`]), and
//! [`analysis`] decides whether that knowledge is sound and adequate for
//! recognising bad states.
//!
//! ```
//! use epimc_core::parse_formula;
//!
//! let f = parse_formula("p_bad -> K[h] p_bad").unwrap();
//! assert_eq!(f.to_string(), "!(p_bad & !K[h] p_bad)");
//! ```

pub mod analysis;
pub mod bounded;
pub mod error;
pub mod fuzz;
pub mod logic;
pub mod model;
pub mod semantics;
pub mod system;

pub use analysis::{
    adequacy_impossible, check_adequacy, check_soundness, synthesize_max_sound_setup,
    verify_corollary1, verify_theorem1, AdequacyVerdict, Obstruction, SoundnessVerdict,
    SoundnessWitness, Synthesis, TheoremCheck,
};
pub use bounded::{
    apply_automatic, apply_deductions, eval_es, eval_es_all, theta_apply, AutomaticRule,
    AutomaticRules, EpistemicSetup, EpistemicSystem, Theta,
};
pub use error::{Error, Result};
pub use logic::{parse_formula, print_formula, subformulas, Formula, Implication, Literal};
pub use model::{
    Agent, AgentId, AgentKind, GlobalState, JointAction, LocalState, Point, Run, RunSet, StateId,
};
pub use semantics::{check_validity, eval_pw, eval_pw_all, Interpretation, Validity};
pub use system::{enumerate_runs, reachable_states, ModelDecl, ModelError, SystemModel};
