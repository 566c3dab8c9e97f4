//! The bundled reference artifact: a spinlock simulator, its gold
//! model, task document, invariant templates, and the perturbation
//! generator used for robustness runs.

pub mod bundle;
pub mod perturb;
pub mod simulator;

pub use perturb::{apply_renames, perturb_gold, Perturbation};
pub use simulator::{run_simulator, simulate_jsonl, SimError};
