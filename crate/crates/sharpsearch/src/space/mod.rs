//! Mixed categorical/numeric-discrete hyperparameter search spaces.
//!
//! A [`SearchSpace`] is an ordered list of [`HyperparameterSpec`]s. Every
//! operation that depends on ordering (enumeration, encoding, log output)
//! follows the spec order given at construction, so runs are reproducible
//! from the space definition file alone.

mod file;

pub use file::parse_space_file;

use std::collections::HashSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use rand::Rng;
use thiserror::Error;

/// Errors from search-space construction and use.
#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("search space has no hyperparameter specs")]
    EmptySpace,
    #[error("spec `{0}` has an empty option list")]
    EmptyOptions(String),
    #[error("spec `{0}` has duplicate options")]
    DuplicateOption(String),
    #[error("spec `{0}` has numeric options that are not strictly increasing")]
    NonIncreasingOptions(String),
    #[error("spec `{0}` has a non-finite numeric option")]
    NonFiniteOption(String),
    #[error("duplicate spec name `{0}`")]
    DuplicateSpecName(String),
    #[error("cardinality overflows u128")]
    CardinalityOverflow,
    #[error("cardinality {cardinality} exceeds limit {limit}")]
    TooManyConfigurations { cardinality: u128, limit: u128 },
    #[error("unknown spec `{0}`")]
    UnknownSpec(String),
    #[error("value `{value}` is not an option of spec `{spec}`")]
    UnknownOption { spec: String, value: String },
    #[error("configuration assigns `{found}` where spec `{expected}` was expected")]
    MisorderedAssignment { expected: String, found: String },
    #[error("configuration has {actual} assignments, space has {expected} specs")]
    AssignmentCount { expected: usize, actual: usize },
    #[error("encoded point has dimension {actual}, space encodes to dimension {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("coordinate {index} = {value} lies outside [0,1]")]
    CoordinateOutOfRange { index: usize, value: f64 },
    #[error("failed to read space file: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse space file: {0}")]
    Parse(String),
}

/// The option domain of one hyperparameter.
#[derive(Debug, Clone, PartialEq)]
pub enum SpecKind {
    /// Symbolic options, e.g. optimizer names. Encoded one-hot.
    Categorical(Vec<String>),
    /// A hand-picked grid of real values, strictly increasing. Encoded by rank.
    NumericDiscrete(Vec<f64>),
}

impl SpecKind {
    pub fn option_count(&self) -> usize {
        match self {
            SpecKind::Categorical(opts) => opts.len(),
            SpecKind::NumericDiscrete(vals) => vals.len(),
        }
    }

    pub fn option(&self, index: usize) -> OptionValue {
        match self {
            SpecKind::Categorical(opts) => OptionValue::Symbol(opts[index].clone()),
            SpecKind::NumericDiscrete(vals) => OptionValue::Number(vals[index]),
        }
    }

    /// Index of `value` among the options, if present.
    pub fn index_of(&self, value: &OptionValue) -> Option<usize> {
        match (self, value) {
            (SpecKind::Categorical(opts), OptionValue::Symbol(s)) => {
                opts.iter().position(|o| o == s)
            }
            (SpecKind::NumericDiscrete(vals), OptionValue::Number(v)) => {
                vals.iter().position(|x| x.to_bits() == v.to_bits())
            }
            _ => None,
        }
    }
}

/// One named hyperparameter and its finite option list.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperparameterSpec {
    name: String,
    kind: SpecKind,
}

impl HyperparameterSpec {
    pub fn categorical<S: Into<String>>(
        name: S,
        options: impl IntoIterator<Item = impl Into<String>>,
    ) -> Result<Self, SpaceError> {
        Self::new(name.into(), SpecKind::Categorical(options.into_iter().map(Into::into).collect()))
    }

    pub fn numeric<S: Into<String>>(
        name: S,
        values: impl IntoIterator<Item = f64>,
    ) -> Result<Self, SpaceError> {
        Self::new(name.into(), SpecKind::NumericDiscrete(values.into_iter().collect()))
    }

    pub fn new(name: String, kind: SpecKind) -> Result<Self, SpaceError> {
        match &kind {
            SpecKind::Categorical(opts) => {
                if opts.is_empty() {
                    return Err(SpaceError::EmptyOptions(name));
                }
                let mut seen = HashSet::new();
                for o in opts {
                    if !seen.insert(o.as_str()) {
                        return Err(SpaceError::DuplicateOption(name));
                    }
                }
            }
            SpecKind::NumericDiscrete(vals) => {
                if vals.is_empty() {
                    return Err(SpaceError::EmptyOptions(name));
                }
                if vals.iter().any(|v| !v.is_finite()) {
                    return Err(SpaceError::NonFiniteOption(name));
                }
                if vals.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(SpaceError::NonIncreasingOptions(name));
                }
            }
        }
        Ok(Self { name, kind })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &SpecKind {
        &self.kind
    }

    pub fn option_count(&self) -> usize {
        self.kind.option_count()
    }
}

/// A concrete choice for one hyperparameter.
#[derive(Debug, Clone)]
pub enum OptionValue {
    Symbol(String),
    Number(f64),
}

impl OptionValue {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            OptionValue::Number(v) => Some(*v),
            OptionValue::Symbol(_) => None,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            OptionValue::Symbol(s) => Some(s),
            OptionValue::Number(_) => None,
        }
    }
}

// All numeric option values are finite (validated at spec construction), so
// bit-level equality is exact equality here.
impl PartialEq for OptionValue {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (OptionValue::Symbol(a), OptionValue::Symbol(b)) => a == b,
            (OptionValue::Number(a), OptionValue::Number(b)) => a.to_bits() == b.to_bits(),
            _ => false,
        }
    }
}

impl Eq for OptionValue {}

impl Hash for OptionValue {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            OptionValue::Symbol(s) => {
                state.write_u8(0);
                s.hash(state);
            }
            OptionValue::Number(v) => {
                state.write_u8(1);
                v.to_bits().hash(state);
            }
        }
    }
}

impl fmt::Display for OptionValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptionValue::Symbol(s) => f.write_str(s),
            OptionValue::Number(v) => f.write_str(&format_number(*v)),
        }
    }
}

/// Canonical text form of a numeric option. Round-trips through `f64`
/// parsing and matches the compact style of space definition files
/// (`1e-8` rather than `0.00000001`).
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else if v.abs() < 1e-4 {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// One point of the search space: exactly one option per spec, in spec order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    entries: Vec<(String, OptionValue)>,
}

impl Configuration {
    pub fn new(entries: Vec<(String, OptionValue)>) -> Self {
        Self { entries }
    }

    pub fn get(&self, name: &str) -> Option<&OptionValue> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn entries(&self) -> &[(String, OptionValue)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `name=value` pairs joined with `;`, in entry order.
    pub fn to_pairs(&self) -> String {
        let mut out = String::new();
        for (i, (name, value)) in self.entries.iter().enumerate() {
            if i > 0 {
                out.push(';');
            }
            out.push_str(name);
            out.push('=');
            out.push_str(&value.to_string());
        }
        out
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_pairs())
    }
}

/// A configuration mapped into `[0,1]^d` for the surrogate.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedPoint {
    coords: Vec<f64>,
}

impl EncodedPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn distance(&self, other: &EncodedPoint) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// An ordered, validated list of hyperparameter specs.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    specs: Vec<HyperparameterSpec>,
}

impl SearchSpace {
    pub fn new(specs: Vec<HyperparameterSpec>) -> Result<Self, SpaceError> {
        if specs.is_empty() {
            return Err(SpaceError::EmptySpace);
        }
        let mut seen = HashSet::new();
        for spec in &specs {
            if !seen.insert(spec.name.as_str()) {
                return Err(SpaceError::DuplicateSpecName(spec.name.clone()));
            }
        }
        Ok(Self { specs })
    }

    pub fn specs(&self) -> &[HyperparameterSpec] {
        &self.specs
    }

    pub fn spec(&self, name: &str) -> Option<&HyperparameterSpec> {
        self.specs.iter().find(|s| s.name == name)
    }

    /// Product of per-spec option counts. Errors instead of wrapping.
    pub fn cardinality(&self) -> Result<u128, SpaceError> {
        let mut total: u128 = 1;
        for spec in &self.specs {
            total = total
                .checked_mul(spec.option_count() as u128)
                .ok_or(SpaceError::CardinalityOverflow)?;
        }
        Ok(total)
    }

    /// Dimension of the encoded representation: 1 per numeric spec, one-hot
    /// width per categorical spec.
    pub fn encoded_dim(&self) -> usize {
        self.specs
            .iter()
            .map(|s| match &s.kind {
                SpecKind::Categorical(opts) => opts.len(),
                SpecKind::NumericDiscrete(_) => 1,
            })
            .sum()
    }

    /// Every configuration exactly once, in lexicographic order of spec
    /// indices (last spec varies fastest). Refuses when the space is larger
    /// than `limit`.
    pub fn enumerate(&self, limit: u128) -> Result<EnumerateConfigurations<'_>, SpaceError> {
        let cardinality = self.cardinality()?;
        if cardinality > limit {
            return Err(SpaceError::TooManyConfigurations { cardinality, limit });
        }
        Ok(EnumerateConfigurations {
            space: self,
            indices: vec![0; self.specs.len()],
            done: false,
        })
    }

    /// Each spec's option chosen independently and uniformly.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        let entries = self
            .specs
            .iter()
            .map(|spec| {
                let idx = rng.random_range(0..spec.option_count());
                (spec.name.clone(), spec.kind.option(idx))
            })
            .collect();
        Configuration::new(entries)
    }

    /// The configuration at the given option indices (one per spec).
    pub fn configuration_from_indices(&self, indices: &[usize]) -> Configuration {
        debug_assert_eq!(indices.len(), self.specs.len());
        let entries = self
            .specs
            .iter()
            .zip(indices)
            .map(|(spec, &idx)| (spec.name.clone(), spec.kind.option(idx)))
            .collect();
        Configuration::new(entries)
    }

    /// Option index per spec for a valid configuration.
    pub fn indices_of(&self, config: &Configuration) -> Result<Vec<usize>, SpaceError> {
        if config.len() != self.specs.len() {
            return Err(SpaceError::AssignmentCount {
                expected: self.specs.len(),
                actual: config.len(),
            });
        }
        self.specs
            .iter()
            .zip(config.entries())
            .map(|(spec, (name, value))| {
                if name != &spec.name {
                    return Err(SpaceError::MisorderedAssignment {
                        expected: spec.name.clone(),
                        found: name.clone(),
                    });
                }
                spec.kind.index_of(value).ok_or_else(|| SpaceError::UnknownOption {
                    spec: spec.name.clone(),
                    value: value.to_string(),
                })
            })
            .collect()
    }

    /// Exactly one in-spec assignment per spec, in spec order.
    pub fn validate(&self, config: &Configuration) -> Result<(), SpaceError> {
        self.indices_of(config).map(|_| ())
    }

    /// Numeric specs map rank `r` of `k` options to `r/(k-1)` (0 if `k` = 1);
    /// categorical specs map to a one-hot block.
    pub fn encode(&self, config: &Configuration) -> Result<EncodedPoint, SpaceError> {
        let indices = self.indices_of(config)?;
        let mut coords = Vec::with_capacity(self.encoded_dim());
        for (spec, idx) in self.specs.iter().zip(indices) {
            match &spec.kind {
                SpecKind::NumericDiscrete(vals) => {
                    let k = vals.len();
                    coords.push(if k == 1 { 0.0 } else { idx as f64 / (k - 1) as f64 });
                }
                SpecKind::Categorical(opts) => {
                    for i in 0..opts.len() {
                        coords.push(if i == idx { 1.0 } else { 0.0 });
                    }
                }
            }
        }
        Ok(EncodedPoint::new(coords))
    }

    /// Inverse of [`encode`](Self::encode): nearest rank for numeric specs,
    /// argmax per one-hot block for categorical specs.
    pub fn decode(&self, point: &EncodedPoint) -> Result<Configuration, SpaceError> {
        if point.dim() != self.encoded_dim() {
            return Err(SpaceError::DimensionMismatch {
                expected: self.encoded_dim(),
                actual: point.dim(),
            });
        }
        const TOL: f64 = 1e-9;
        for (i, &x) in point.coords().iter().enumerate() {
            if !(-TOL..=1.0 + TOL).contains(&x) {
                return Err(SpaceError::CoordinateOutOfRange { index: i, value: x });
            }
        }
        let mut cursor = 0;
        let mut entries = Vec::with_capacity(self.specs.len());
        for spec in &self.specs {
            match &spec.kind {
                SpecKind::NumericDiscrete(vals) => {
                    let k = vals.len();
                    let x = point.coords()[cursor];
                    cursor += 1;
                    let rank = if k == 1 {
                        0
                    } else {
                        (x * (k - 1) as f64).round().clamp(0.0, (k - 1) as f64) as usize
                    };
                    entries.push((spec.name.clone(), OptionValue::Number(vals[rank])));
                }
                SpecKind::Categorical(opts) => {
                    let block = &point.coords()[cursor..cursor + opts.len()];
                    cursor += opts.len();
                    let mut best = 0;
                    for (i, &x) in block.iter().enumerate() {
                        if x > block[best] {
                            best = i;
                        }
                    }
                    entries.push((spec.name.clone(), OptionValue::Symbol(opts[best].clone())));
                }
            }
        }
        Ok(Configuration::new(entries))
    }

    /// Build a configuration from `(name, value-text)` pairs in any order.
    /// Numeric values are matched by parsed value, symbols by exact text.
    pub fn configuration_from_pairs<'a>(
        &self,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Configuration, SpaceError> {
        let mut chosen: Vec<Option<OptionValue>> = vec![None; self.specs.len()];
        for (name, text) in pairs {
            let pos = self
                .specs
                .iter()
                .position(|s| s.name == name)
                .ok_or_else(|| SpaceError::UnknownSpec(name.to_string()))?;
            let value = match &self.specs[pos].kind {
                SpecKind::Categorical(opts) => opts
                    .iter()
                    .find(|o| o.as_str() == text)
                    .map(|o| OptionValue::Symbol(o.clone())),
                SpecKind::NumericDiscrete(vals) => text.parse::<f64>().ok().and_then(|v| {
                    vals.iter().find(|x| x.to_bits() == v.to_bits()).map(|x| OptionValue::Number(*x))
                }),
            }
            .ok_or_else(|| SpaceError::UnknownOption {
                spec: name.to_string(),
                value: text.to_string(),
            })?;
            chosen[pos] = Some(value);
        }
        let entries = self
            .specs
            .iter()
            .zip(chosen)
            .map(|(spec, v)| match v {
                Some(v) => Ok((spec.name.clone(), v)),
                None => Err(SpaceError::UnknownSpec(spec.name.clone())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Configuration::new(entries))
    }
}

/// Iterator over every configuration of a space, lexicographic in spec
/// indices. Single-consumer.
#[derive(Debug)]
pub struct EnumerateConfigurations<'a> {
    space: &'a SearchSpace,
    indices: Vec<usize>,
    done: bool,
}

impl Iterator for EnumerateConfigurations<'_> {
    type Item = Configuration;

    fn next(&mut self) -> Option<Configuration> {
        if self.done {
            return None;
        }
        let config = self.space.configuration_from_indices(&self.indices);
        // Odometer increment, last spec fastest.
        let mut pos = self.indices.len();
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            self.indices[pos] += 1;
            if self.indices[pos] < self.space.specs[pos].option_count() {
                break;
            }
            self.indices[pos] = 0;
        }
        Some(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_option_space() -> SearchSpace {
        SearchSpace::new(vec![HyperparameterSpec::numeric("x", [3.0, 7.0]).unwrap()]).unwrap()
    }

    fn small_mixed_space() -> SearchSpace {
        SearchSpace::new(vec![
            HyperparameterSpec::numeric("lr", [0.0001, 1.0]).unwrap(),
            HyperparameterSpec::categorical("optimizer", ["Adadelta", "RMSprop"]).unwrap(),
            HyperparameterSpec::numeric("dense", [256.0, 512.0, 1024.0]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn spec_invariants_enforced() {
        assert!(matches!(
            HyperparameterSpec::numeric("x", []),
            Err(SpaceError::EmptyOptions(_))
        ));
        assert!(matches!(
            HyperparameterSpec::numeric("x", [1.0, 1.0]),
            Err(SpaceError::NonIncreasingOptions(_))
        ));
        assert!(matches!(
            HyperparameterSpec::numeric("x", [2.0, 1.0]),
            Err(SpaceError::NonIncreasingOptions(_))
        ));
        assert!(matches!(
            HyperparameterSpec::categorical("x", ["a", "a"]),
            Err(SpaceError::DuplicateOption(_))
        ));
        let dup = SearchSpace::new(vec![
            HyperparameterSpec::numeric("x", [1.0]).unwrap(),
            HyperparameterSpec::numeric("x", [2.0]).unwrap(),
        ]);
        assert!(matches!(dup, Err(SpaceError::DuplicateSpecName(_))));
    }

    #[test]
    fn cardinality_single_option_space_is_one() {
        let space =
            SearchSpace::new(vec![HyperparameterSpec::numeric("x", [1.0]).unwrap()]).unwrap();
        assert_eq!(space.cardinality().unwrap(), 1);
    }

    #[test]
    fn cardinality_overflow_is_an_error() {
        let specs = (0..20)
            .map(|i| {
                HyperparameterSpec::numeric(format!("p{i}"), (0..100).map(|v| v as f64)).unwrap()
            })
            .collect();
        let space = SearchSpace::new(specs).unwrap();
        assert!(matches!(space.cardinality(), Err(SpaceError::CardinalityOverflow)));
    }

    #[test]
    fn enumerate_single_spec() {
        let space = two_option_space();
        let configs: Vec<_> = space.enumerate(10).unwrap().collect();
        assert_eq!(configs.len(), 2);
        assert_eq!(configs[0].get("x").unwrap().as_number(), Some(3.0));
        assert_eq!(configs[1].get("x").unwrap().as_number(), Some(7.0));
    }

    #[test]
    fn enumerate_is_lexicographic_and_duplicate_free() {
        let space = small_mixed_space();
        let configs: Vec<_> = space.enumerate(100).unwrap().collect();
        assert_eq!(configs.len() as u128, space.cardinality().unwrap());
        let unique: HashSet<_> = configs.iter().cloned().collect();
        assert_eq!(unique.len(), configs.len());
        // First spec is most significant: the first half keeps lr = 0.0001.
        assert_eq!(configs[0].get("lr").unwrap().as_number(), Some(0.0001));
        assert_eq!(configs[5].get("lr").unwrap().as_number(), Some(0.0001));
        assert_eq!(configs[6].get("lr").unwrap().as_number(), Some(1.0));
        // Last spec varies fastest.
        assert_eq!(configs[0].get("dense").unwrap().as_number(), Some(256.0));
        assert_eq!(configs[1].get("dense").unwrap().as_number(), Some(512.0));
        assert_eq!(configs[2].get("dense").unwrap().as_number(), Some(1024.0));
    }

    #[test]
    fn enumerate_refuses_oversized_spaces() {
        let space = small_mixed_space();
        let err = space.enumerate(5).unwrap_err();
        match err {
            SpaceError::TooManyConfigurations { cardinality, limit } => {
                assert_eq!(cardinality, 12);
                assert_eq!(limit, 5);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn sample_uniform_is_deterministic_given_seed() {
        let space = small_mixed_space();
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let ca = space.sample_uniform(&mut a);
            let cb = space.sample_uniform(&mut b);
            assert_eq!(ca, cb);
            space.validate(&ca).unwrap();
        }
    }

    #[test]
    fn sample_uniform_forced_when_single_option() {
        let space = SearchSpace::new(vec![
            HyperparameterSpec::numeric("a", [1.0]).unwrap(),
            HyperparameterSpec::categorical("b", ["only"]).unwrap(),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let config = space.sample_uniform(&mut rng);
        assert_eq!(config.get("a").unwrap().as_number(), Some(1.0));
        assert_eq!(config.get("b").unwrap().as_symbol(), Some("only"));
    }

    // Frequency window follows from the binomial tail: for n = 10^4 fair
    // draws, P(|freq - 0.5| > 0.05) < 2 exp(-2 n 0.05^2) ≈ 4e-22.
    #[test]
    fn sample_uniform_two_option_frequencies() {
        let space = two_option_space();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let mut first = 0usize;
        for _ in 0..n {
            let c = space.sample_uniform(&mut rng);
            if c.get("x").unwrap().as_number() == Some(3.0) {
                first += 1;
            }
        }
        let freq = first as f64 / n as f64;
        assert!((0.45..=0.55).contains(&freq), "freq = {freq}");
    }

    #[test]
    fn encode_numeric_rank() {
        let space =
            SearchSpace::new(vec![HyperparameterSpec::numeric("x", [3.0, 5.0, 7.0]).unwrap()])
                .unwrap();
        let config =
            Configuration::new(vec![("x".to_string(), OptionValue::Number(5.0))]);
        let point = space.encode(&config).unwrap();
        assert_eq!(point.coords(), &[0.5]);
    }

    #[test]
    fn encode_categorical_one_hot() {
        let space = SearchSpace::new(vec![
            HyperparameterSpec::categorical("opt", ["Adadelta", "RMSprop"]).unwrap(),
        ])
        .unwrap();
        let config = Configuration::new(vec![(
            "opt".to_string(),
            OptionValue::Symbol("RMSprop".to_string()),
        )]);
        let point = space.encode(&config).unwrap();
        assert_eq!(point.coords(), &[0.0, 1.0]);
    }

    #[test]
    fn encode_single_option_numeric_is_zero() {
        let space =
            SearchSpace::new(vec![HyperparameterSpec::numeric("x", [42.0]).unwrap()]).unwrap();
        let config = space.enumerate(1).unwrap().next().unwrap();
        assert_eq!(space.encode(&config).unwrap().coords(), &[0.0]);
    }

    #[test]
    fn decode_rejects_bad_dimension_and_range() {
        let space = two_option_space();
        assert!(matches!(
            space.decode(&EncodedPoint::new(vec![0.0, 0.0])),
            Err(SpaceError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            space.decode(&EncodedPoint::new(vec![1.5])),
            Err(SpaceError::CoordinateOutOfRange { .. })
        ));
        // Within the 1e-9 tolerance is accepted.
        space.decode(&EncodedPoint::new(vec![1.0 + 5e-10])).unwrap();
    }

    #[test]
    fn round_trip_over_enumerated_space() {
        let space = small_mixed_space();
        for config in space.enumerate(100).unwrap() {
            let point = space.encode(&config).unwrap();
            assert!(point.coords().iter().all(|&x| (0.0..=1.0).contains(&x)));
            assert_eq!(space.decode(&point).unwrap(), config);
        }
    }

    #[test]
    fn configuration_from_pairs_matches_options() {
        let space = small_mixed_space();
        let config = space
            .configuration_from_pairs([("dense", "512"), ("lr", "1e-4"), ("optimizer", "RMSprop")])
            .unwrap();
        space.validate(&config).unwrap();
        assert_eq!(config.get("lr").unwrap().as_number(), Some(0.0001));
        assert!(space.configuration_from_pairs([("lr", "0.5")]).is_err());
        assert!(space.configuration_from_pairs([("nope", "1")]).is_err());
        // Missing assignments are an error.
        assert!(space.configuration_from_pairs([("lr", "1")]).is_err());
    }

    #[test]
    fn format_number_round_trips_table_values() {
        for v in [0.0001, 0.001, 0.01, 0.1, 1.0, 1e-8, 1e-6, 1e-3, 1e-2, 0.2, 0.85, 0.95, 1024.0] {
            let text = format_number(v);
            assert_eq!(text.parse::<f64>().unwrap().to_bits(), v.to_bits(), "text = {text}");
        }
        assert_eq!(format_number(1e-8), "1e-8");
        assert_eq!(format_number(1.0), "1");
        assert_eq!(format_number(0.0001), "0.0001");
        assert_eq!(format_number(1024.0), "1024");
    }

    proptest! {
        // Random small spaces: enumeration length equals cardinality and
        // encode/decode is the identity on every enumerated configuration.
        #[test]
        fn prop_enumerate_and_round_trip(shape in proptest::collection::vec((1usize..4, prop::bool::ANY), 1..5)) {
            let specs: Vec<_> = shape
                .iter()
                .enumerate()
                .map(|(i, &(k, categorical))| {
                    if categorical {
                        HyperparameterSpec::categorical(
                            format!("c{i}"),
                            (0..k).map(|j| format!("o{j}")),
                        )
                        .unwrap()
                    } else {
                        HyperparameterSpec::numeric(format!("n{i}"), (0..k).map(|j| j as f64))
                            .unwrap()
                    }
                })
                .collect();
            let space = SearchSpace::new(specs).unwrap();
            let cardinality = space.cardinality().unwrap();
            let configs: Vec<_> = space.enumerate(u128::MAX).unwrap().collect();
            prop_assert_eq!(configs.len() as u128, cardinality);
            let unique: HashSet<_> = configs.iter().cloned().collect();
            prop_assert_eq!(unique.len(), configs.len());
            for config in configs {
                let point = space.encode(&config).unwrap();
                prop_assert!(point.coords().iter().all(|&x| (0.0..=1.0).contains(&x)));
                prop_assert_eq!(space.decode(&point).unwrap(), config);
            }
        }

        #[test]
        fn prop_sampled_encodes_in_unit_cube(seed in 0u64..1000) {
            let space = small_mixed_space();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let config = space.sample_uniform(&mut rng);
            let point = space.encode(&config).unwrap();
            prop_assert!(point.coords().iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }
}
