//! Dataset loading and seeded splits.
//!
//! Dataset files are comma-separated numeric rows: pixel columns in
//! [0, 255] followed by an integer class label. Pixels are scaled to [0, 1]
//! on load and the rows are split 70/15/15 into train/validation/test with
//! a seeded shuffle.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ObjectiveError;
use crate::whetstone::{Batch, LabeledBatch};

/// Loaded samples plus their fixed three-way split.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: LabeledBatch,
    pub validation: LabeledBatch,
    pub test: LabeledBatch,
    pub num_classes: usize,
    pub feature_dim: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Sanity cap on labels; a label above this in a desk-scale file is a
/// malformed row, not a real class.
const MAX_LABEL: u32 = 255;

pub fn load_dataset(path: impl AsRef<Path>, split_seed: u64) -> Result<Dataset, ObjectiveError> {
    let text = std::fs::read_to_string(&path)?;
    parse_dataset(&text, split_seed)
}

pub fn parse_dataset(text: &str, split_seed: u64) -> Result<Dataset, ObjectiveError> {
    let mut features: Vec<f64> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut dim: Option<usize> = None;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 2 {
            return Err(ObjectiveError::DatasetFormat {
                line: lineno,
                message: "need at least one pixel column and a label".into(),
            });
        }
        let row_dim = fields.len() - 1;
        match dim {
            None => dim = Some(row_dim),
            Some(d) if d != row_dim => {
                return Err(ObjectiveError::DatasetFormat {
                    line: lineno,
                    message: format!("row has {row_dim} pixels, expected {d}"),
                })
            }
            _ => {}
        }
        for field in &fields[..row_dim] {
            let pixel: f64 = field.trim().parse().map_err(|_| ObjectiveError::DatasetFormat {
                line: lineno,
                message: format!("bad pixel `{field}`"),
            })?;
            if !(0.0..=255.0).contains(&pixel) {
                return Err(ObjectiveError::DatasetFormat {
                    line: lineno,
                    message: format!("pixel {pixel} outside [0,255]"),
                });
            }
            features.push(pixel / 255.0);
        }
        let label_text = fields[row_dim].trim();
        let label: u32 = label_text.parse().map_err(|_| ObjectiveError::DatasetFormat {
            line: lineno,
            message: format!("bad label `{label_text}`"),
        })?;
        if label > MAX_LABEL {
            return Err(ObjectiveError::DatasetFormat {
                line: lineno,
                message: format!("label {label} out of range"),
            });
        }
        labels.push(label as usize);
    }
    let n = labels.len();
    if n == 0 {
        return Err(ObjectiveError::EmptyDataset);
    }
    let dim = dim.unwrap();
    let num_classes = labels.iter().max().unwrap() + 1;
    let all = LabeledBatch::new(Batch::new(n, dim, features), labels)
        .expect("row/label counts agree by construction");

    // 70/15/15, validation and test rounded to nearest.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(split_seed));
    let n_val = (n * 15 + 50) / 100;
    let n_test = n_val;
    let n_train = n - n_val - n_test;
    Ok(Dataset {
        train: all.subset(&order[..n_train]),
        validation: all.subset(&order[n_train..n_train + n_val]),
        test: all.subset(&order[n_train + n_val..]),
        num_classes,
        feature_dim: dim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> String {
        format!("{}/fixtures/digits8x8.csv", env!("CARGO_MANIFEST_DIR"))
    }

    #[test]
    fn digits_fixture_splits_as_expected() {
        let ds = load_dataset(fixture(), 0).unwrap();
        assert_eq!(ds.len(), 1797);
        assert_eq!(ds.train.len(), 1257);
        assert_eq!(ds.validation.len(), 270);
        assert_eq!(ds.test.len(), 270);
        assert_eq!(ds.num_classes, 10);
        assert_eq!(ds.feature_dim, 64);
        assert!(ds.train.inputs.data.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn split_is_seeded() {
        let a = load_dataset(fixture(), 1).unwrap();
        let b = load_dataset(fixture(), 1).unwrap();
        let c = load_dataset(fixture(), 2).unwrap();
        assert_eq!(a.train.labels, b.train.labels);
        assert_ne!(a.train.labels, c.train.labels);
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(matches!(parse_dataset("", 0), Err(ObjectiveError::EmptyDataset)));
        assert!(matches!(parse_dataset("\n\n", 0), Err(ObjectiveError::EmptyDataset)));
    }

    #[test]
    fn malformed_rows_carry_line_numbers() {
        let err = parse_dataset("1,2,0\n9,abc,1\n", 0).unwrap_err();
        match err {
            ObjectiveError::DatasetFormat { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
        let err = parse_dataset("1,300,0\n", 0).unwrap_err();
        assert!(err.to_string().contains("outside [0,255]"));
        let err = parse_dataset("1,2,999\n", 0).unwrap_err();
        assert!(err.to_string().contains("out of range"));
        let err = parse_dataset("1,2,0\n1,2,3,1\n", 0).unwrap_err();
        assert!(err.to_string().contains("expected 2"));
    }
}
