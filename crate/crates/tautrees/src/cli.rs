//! Command-line front end (populated later in the build).

/// Entry point used by the `tautrees` binary.
pub fn run(_argv: Vec<String>) -> i32 {
    0
}
