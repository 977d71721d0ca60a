//! Library backing the `aggmorph` command line tool: file formats, the
//! pipeline manifest, and one module per subcommand.

pub mod commands;
pub mod error;
pub mod io;
pub mod manifest;
