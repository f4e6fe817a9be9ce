use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{CnnBlueprint, Topology};

/// A concrete hyperparameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Int(v) => Some(*v as f64),
            ParamValue::Float(v) => Some(*v),
            ParamValue::Text(_) => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            ParamValue::Int(v) => Some(*v),
            _ => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Float(v) => write!(f, "{v}"),
            ParamValue::Text(v) => f.write_str(v),
        }
    }
}

/// One point of a [`SearchSpace`], keyed by dimension name.
pub type Config = BTreeMap<String, ParamValue>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Choice { options: Vec<ParamValue> },
    Int { low: i64, high: i64 },
    Uniform { low: f64, high: f64 },
    LogUniform { low: f64, high: f64 },
}

impl Domain {
    /// Width of the surrogate encoding.
    pub fn encoded_len(&self) -> usize {
        match self {
            Domain::Choice { options } => options.len(),
            _ => 1,
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let ok = match self {
            Domain::Choice { options } => !options.is_empty(),
            Domain::Int { low, high } => low <= high,
            Domain::Uniform { low, high } => low.is_finite() && high.is_finite() && low <= high,
            Domain::LogUniform { low, high } => *low > 0.0 && high.is_finite() && low <= high,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("dimension `{name}` has an empty or invalid domain")))
        }
    }

    /// Maps `u ∈ [0, 1]` onto the domain.
    pub fn decode(&self, u: f64) -> ParamValue {
        let u = u.clamp(0.0, 1.0);
        match self {
            Domain::Choice { options } => {
                let i = ((u * options.len() as f64) as usize).min(options.len() - 1);
                options[i].clone()
            }
            Domain::Int { low, high } => {
                let span = (high - low + 1) as f64;
                ParamValue::Int((low + (u * span) as i64).min(*high))
            }
            Domain::Uniform { low, high } => ParamValue::Float(low + u * (high - low)),
            Domain::LogUniform { low, high } => ParamValue::Float((low.ln() + u * (high.ln() - low.ln())).exp().clamp(*low, *high)),
        }
    }

    pub fn contains(&self, v: &ParamValue) -> bool {
        match (self, v) {
            (Domain::Choice { options }, v) => options.contains(v),
            (Domain::Int { low, high }, ParamValue::Int(x)) => low <= x && x <= high,
            (Domain::Uniform { low, high }, ParamValue::Float(x)) | (Domain::LogUniform { low, high }, ParamValue::Float(x)) => {
                low <= x && x <= high
            }
            _ => false,
        }
    }

    /// One-hot for choices; position in `[0, 1]` otherwise, logarithmic for
    /// log-uniform domains.
    fn encode_into(&self, v: &ParamValue, out: &mut Vec<f64>) -> Result<()> {
        let bad = || Error::Config(format!("value {v} outside its domain"));
        match self {
            Domain::Choice { options } => {
                let i = options.iter().position(|o| o == v).ok_or_else(bad)?;
                out.extend((0..options.len()).map(|j| if i == j { 1.0 } else { 0.0 }));
            }
            Domain::Int { low, high } => {
                let x = v.as_int().ok_or_else(bad)?;
                out.push(if high > low { (x - low) as f64 / (high - low) as f64 } else { 0.5 });
            }
            Domain::Uniform { low, high } => {
                let x = v.as_f64().ok_or_else(bad)?;
                out.push(if high > low { (x - low) / (high - low) } else { 0.5 });
            }
            Domain::LogUniform { low, high } => {
                let x = v.as_f64().ok_or_else(bad)?;
                out.push(if high > low { (x.ln() - low.ln()) / (high.ln() - low.ln()) } else { 0.5 });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    #[serde(flatten)]
    pub domain: Domain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub dimensions: Vec<Dimension>,
}

impl SearchSpace {
    pub fn new(dimensions: Vec<Dimension>) -> Result<Self> {
        let space = SearchSpace { dimensions };
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimensions.is_empty() {
            return Err(Error::Config("search space has no dimensions".into()));
        }
        let mut names = std::collections::HashSet::new();
        for d in &self.dimensions {
            if !names.insert(&d.name) {
                return Err(Error::Config(format!("dimension `{}` declared twice", d.name)));
            }
            d.domain.validate(&d.name)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.dimensions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dimensions.is_empty()
    }

    pub fn encoded_len(&self) -> usize {
        self.dimensions.iter().map(|d| d.domain.encoded_len()).sum()
    }

    /// Point of the space for a vector of `len()` unit coordinates.
    pub fn decode(&self, unit: &[f64]) -> Config {
        self.dimensions
            .iter()
            .zip(unit)
            .map(|(d, &u)| (d.name.clone(), d.domain.decode(u)))
            .collect()
    }

    pub fn contains(&self, config: &Config) -> bool {
        config.len() == self.dimensions.len()
            && self
                .dimensions
                .iter()
                .all(|d| config.get(&d.name).is_some_and(|v| d.domain.contains(v)))
    }

    /// Surrogate-model coordinates of `config`, each in `[0, 1]`.
    pub fn encode(&self, config: &Config) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.encoded_len());
        for d in &self.dimensions {
            let v = config
                .get(&d.name)
                .ok_or_else(|| Error::Config(format!("configuration lacks `{}`", d.name)))?;
            d.domain.encode_into(v, &mut out)?;
        }
        Ok(out)
    }

    /// The CNN search space: dense layer count and width, batch norm,
    /// dropout, L2 strength, convolution count, learning rate and one
    /// filter exponent (filters = 2^e) per possible convolution.
    pub fn cnn() -> Self {
        let ints = |v: &[i64]| v.iter().map(|&x| ParamValue::Int(x)).collect();
        let mut dims = vec![
            dim("fcl_count", Domain::Int { low: 0, high: 3 }),
            dim("fcl_neurons", Domain::Choice { options: ints(&[64, 128, 256, 512]) }),
            dim(
                "batchnorm",
                Domain::Choice {
                    options: vec![ParamValue::Text("none".into()), ParamValue::Text("after_every_fcl".into())],
                },
            ),
            dim(
                "dropout",
                Domain::Choice {
                    options: [0.0, 0.25, 0.5].iter().map(|&v| ParamValue::Float(v)).collect(),
                },
            ),
            dim("l2", Domain::LogUniform { low: 1e-4, high: 1e-1 }),
            dim("conv_count", Domain::Int { low: 3, high: 7 }),
            dim("learning_rate", Domain::LogUniform { low: 1e-5, high: 1e-2 }),
        ];
        for i in 0..7 {
            dims.push(dim(&format!("filter_exp_{i}"), Domain::Int { low: 4, high: 8 }));
        }
        SearchSpace { dimensions: dims }
    }
}

fn dim(name: &str, domain: Domain) -> Dimension {
    Dimension { name: name.into(), domain }
}

/// Network and learning rate described by a point of [`SearchSpace::cnn`].
///
/// `width_divisor` shrinks filter and neuron counts (4 turns the full-size
/// widths into the desk widths); `base` supplies input shape, kernel size
/// and class count.
pub fn cnn_from_config(config: &Config, base: &CnnBlueprint, width_divisor: usize) -> Result<(Topology, f64)> {
    let get = |k: &str| config.get(k).ok_or_else(|| Error::Config(format!("configuration lacks `{k}`")));
    let int = |k: &str| -> Result<i64> { get(k)?.as_int().ok_or_else(|| Error::Config(format!("`{k}` must be an integer"))) };
    let num = |k: &str| -> Result<f64> { get(k)?.as_f64().ok_or_else(|| Error::Config(format!("`{k}` must be numeric"))) };
    let div = width_divisor.max(1);
    let conv_count = int("conv_count")? as usize;
    let filters = (0..conv_count)
        .map(|i| Ok(((1usize << int(&format!("filter_exp_{i}"))?) / div).max(1)))
        .collect::<Result<Vec<_>>>()?;
    let neurons = (int("fcl_neurons")? as usize / div).max(1);
    let batchnorm = match get("batchnorm")? {
        ParamValue::Text(s) if s == "after_every_fcl" => true,
        ParamValue::Text(s) if s == "none" => false,
        other => return Err(Error::Config(format!("unknown batchnorm setting {other}"))),
    };
    let blueprint = CnnBlueprint {
        filters,
        dense_units: vec![neurons; int("fcl_count")? as usize],
        batchnorm,
        dropout: num("dropout")?,
        l2_lambda: num("l2")?,
        ..base.clone()
    };
    Ok((blueprint.build()?, num("learning_rate")?))
}
