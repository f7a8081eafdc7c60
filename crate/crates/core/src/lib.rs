//! Discrete influence diagrams authored in the causal direction and turned
//! around for diagnosis.
//!
//! A [`Diagram`] factors a joint distribution into one table per node. The
//! [`transform`] module rewrites that factorization without changing the
//! joint (arc reversal, summing out, conditioning, refactoring), and
//! [`inference`] chains those rewrites to answer posterior queries. The
//! [`oracle`] module enumerates the joint directly and is what everything
//! else is tested against.

pub mod diagram;
pub mod error;
pub mod evidence;
pub mod inference;
pub mod model_io;
pub mod oracle;
pub mod transform;

pub use diagram::{validate, Cpt, DetTable, Diagram, NodeKind, NodeSpec, Outcome, Table, ValidationReport, Violation, ViolationKind};
pub use error::{Error, Result};
pub use evidence::Evidence;
pub use inference::{complexity, compare_orders, d_separated, execute_plan, plan_reversals, posterior, Metrics, OrderMode, Plan, Strategy};
pub use model_io::{builtin_example, export_dot, gen_random, load, save};
pub use oracle::{joint_table, oracle_posterior, JointTable};
pub use transform::{apply_step, condition, prune_redundant_parents, refactor, remove_barren, reverse_arc, sum_out, StepKind, TransformStep};
