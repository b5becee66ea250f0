//! Feedback engine for a small functional language with typed holes.

pub mod check;
pub mod eval;
pub mod prelude;
pub mod syntax;
pub mod synth;
pub mod tutor;
pub mod types;
