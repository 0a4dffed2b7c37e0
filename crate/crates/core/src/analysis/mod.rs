//! Protocol evaluation, bounds, sweeps and the acceptance suite.

pub mod bounds;
pub mod eval;
pub mod sweep;
pub mod table;
pub mod validate;

pub use bounds::{find_lambda_opt, find_tl, tl_closed_form, BoundMethod, BoundResult, LambdaOpt};
pub use eval::{en_after, evaluate, DistillationResult, EvalOptions, EvalPath, PathValues};
pub use sweep::{figure, figure_report, sweep, Figure, SweepSpec};
pub use table::{Cell, Report, Table};
pub use validate::{validate, CheckResult, ValidateOptions, ValidationReport, Validator};
