//! Command-line front end: document schemas and command handlers.

pub mod commands;
pub mod schema;
