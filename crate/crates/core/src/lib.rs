//! Keyword instructions (KeyInst) for Text-to-SQL.

pub mod eval;
pub mod keyinst;
pub mod llm;
pub mod pipeline;
pub mod prompt;
pub mod retrieval;
pub mod schema;
pub mod sql;
