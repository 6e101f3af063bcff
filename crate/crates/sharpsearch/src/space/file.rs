//! Search-space definition files.
//!
//! A `.space` file is a TOML document listing specs in order:
//!
//! ```toml
//! [[spec]]
//! name = "lr"
//! kind = "numeric"
//! options = [0.0001, 1]
//!
//! [[spec]]
//! name = "optimizer"
//! kind = "categorical"
//! options = ["Adadelta", "RMSprop"]
//! ```
//!
//! Spec order in the file fixes enumeration, encoding, and log-field order.

use std::path::Path;

use serde::Deserialize;

use super::{HyperparameterSpec, SearchSpace, SpaceError, SpecKind};

#[derive(Deserialize)]
struct SpaceFile {
    spec: Vec<SpecEntry>,
}

#[derive(Deserialize)]
struct SpecEntry {
    name: String,
    kind: String,
    options: Vec<toml::Value>,
}

/// Read and validate a search-space definition file.
pub fn parse_space_file(path: impl AsRef<Path>) -> Result<SearchSpace, SpaceError> {
    let text = std::fs::read_to_string(path)?;
    parse_space_str(&text)
}

pub fn parse_space_str(text: &str) -> Result<SearchSpace, SpaceError> {
    let file: SpaceFile = toml::from_str(text).map_err(|e| SpaceError::Parse(e.to_string()))?;
    let specs = file
        .spec
        .into_iter()
        .map(|entry| {
            let kind = match entry.kind.as_str() {
                "numeric" => SpecKind::NumericDiscrete(
                    entry
                        .options
                        .iter()
                        .map(|v| match v {
                            toml::Value::Integer(i) => Ok(*i as f64),
                            toml::Value::Float(f) => Ok(*f),
                            other => Err(SpaceError::Parse(format!(
                                "spec `{}`: numeric option is not a number: {other}",
                                entry.name
                            ))),
                        })
                        .collect::<Result<Vec<_>, _>>()?,
                ),
                "categorical" => SpecKind::Categorical(
                    entry
                        .options
                        .iter()
                        .map(|v| match v {
                            toml::Value::String(s) => Ok(s.clone()),
                            other => Err(SpaceError::Parse(format!(
                                "spec `{}`: categorical option is not a string: {other}",
                                entry.name
                            ))),
                        })
                        .collect::<Result<Vec<_>, _>>()?,
                ),
                other => {
                    return Err(SpaceError::Parse(format!(
                        "spec `{}`: unknown kind `{other}` (expected `numeric` or `categorical`)",
                        entry.name
                    )))
                }
            };
            HyperparameterSpec::new(entry.name, kind)
        })
        .collect::<Result<Vec<_>, _>>()?;
    SearchSpace::new(specs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(name: &str) -> String {
        format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
    }

    #[test]
    fn table1_space_has_256_configurations() {
        let space = parse_space_file(fixture("table1.space")).unwrap();
        assert_eq!(space.specs().len(), 8);
        assert!(space.specs().iter().all(|s| s.option_count() == 2));
        assert_eq!(space.cardinality().unwrap(), 256);
    }

    #[test]
    fn table3_space_has_published_cardinality() {
        let space = parse_space_file(fixture("table3.space")).unwrap();
        assert_eq!(space.specs().len(), 22);
        assert_eq!(space.cardinality().unwrap(), 398_131_200);
    }

    #[test]
    fn spaces_share_names_for_common_hyperparameters() {
        let t1 = parse_space_file(fixture("table1.space")).unwrap();
        let t3 = parse_space_file(fixture("table3.space")).unwrap();
        for spec in t1.specs() {
            assert!(t3.spec(spec.name()).is_some(), "missing `{}` in table3", spec.name());
        }
    }

    #[test]
    fn syntax_errors_carry_line_information() {
        let err = parse_space_str("[[spec]\nname = \"x\"").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 1"), "message was: {msg}");
    }

    #[test]
    fn semantic_errors_name_the_spec() {
        let err = parse_space_str(
            "[[spec]]\nname = \"x\"\nkind = \"mystery\"\noptions = [1]\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("mystery"));
        let err = parse_space_str(
            "[[spec]]\nname = \"x\"\nkind = \"numeric\"\noptions = [\"a\"]\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains('x'));
    }
}
