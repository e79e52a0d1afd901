//! Problem files shipped with the library.

use crate::error::{Error, Result};
use crate::io::problem::{parse_problem, ParsedProblem};

macro_rules! corpus {
    ($($id:literal),* $(,)?) => {
        &[$(($id, include_str!(concat!("../../corpus/", $id, ".toml")))),*]
    };
}

/// `(id, source)` pairs.
pub const ENTRIES: &[(&str, &str)] = corpus!(
    "a1",
    "a2",
    "a3",
    "a4",
    "a5",
    "a6",
    "a7",
    "a5-printed",
    "a6-printed",
    "pmi3",
    "pmi4",
    "pmi4-printed",
    "nc-quartic",
    "nc-quartic-raw",
    "nc-not-closed",
    "nc-cubic",
);

/// The entries reproducing the small test table.
pub const TABLE: &[&str] = &["a1", "a2", "a3", "a4", "a5", "a6", "a7"];

pub fn source(id: &str) -> Result<&'static str> {
    ENTRIES
        .iter()
        .find(|(i, _)| *i == id)
        .map(|(_, s)| *s)
        .ok_or_else(|| Error::Problem(format!("no corpus entry `{id}`")))
}

pub fn load(id: &str) -> Result<ParsedProblem> {
    parse_problem(source(id)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_parses() {
        for (id, _) in ENTRIES {
            load(id).unwrap_or_else(|e| panic!("{id}: {e}"));
        }
    }
}
