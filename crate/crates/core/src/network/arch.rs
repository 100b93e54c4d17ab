use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One hidden layer of a feed-forward network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayerSpec {
    /// Fully connected layer followed by ReLU.
    Dense { units: usize },
    /// Inverted dropout; active only in training mode.
    Dropout { rate: f64 },
}

/// Hidden layers of a network with a single linear output unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub input_dim: usize,
    pub layers: Vec<LayerSpec>,
}

/// The three reference architectures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// dense(64) x3, dense(32)
    Model1,
    /// dense(64) x2, dropout(0.5), dense(32)
    Model2,
    /// dense(64) x2
    Model3,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Model1, Preset::Model2, Preset::Model3];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Model1 => "model1",
            Preset::Model2 => "model2",
            Preset::Model3 => "model3",
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "model1" | "1" => Ok(Preset::Model1),
            "model2" | "2" => Ok(Preset::Model2),
            "model3" | "3" => Ok(Preset::Model3),
            other => Err(Error::invalid(format!("unknown architecture {other:?} (expected model1|model2|model3)"))),
        }
    }
}

impl ArchitectureSpec {
    pub fn preset(preset: Preset, input_dim: usize) -> Self {
        use LayerSpec::{Dense, Dropout};
        let layers = match preset {
            Preset::Model1 => vec![
                Dense { units: 64 },
                Dense { units: 64 },
                Dense { units: 64 },
                Dense { units: 32 },
            ],
            Preset::Model2 => vec![
                Dense { units: 64 },
                Dense { units: 64 },
                Dropout { rate: 0.5 },
                Dense { units: 32 },
            ],
            Preset::Model3 => vec![Dense { units: 64 }, Dense { units: 64 }],
        };
        ArchitectureSpec { input_dim, layers }
    }

    pub fn dense(input_dim: usize, units: &[usize]) -> Self {
        ArchitectureSpec {
            input_dim,
            layers: units.iter().map(|&units| LayerSpec::Dense { units }).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::invalid("input_dim must be positive"));
        }
        if !self.layers.iter().any(|l| matches!(l, LayerSpec::Dense { .. })) {
            return Err(Error::invalid("architecture needs at least one dense layer"));
        }
        for layer in &self.layers {
            match *layer {
                LayerSpec::Dense { units: 0 } => return Err(Error::invalid("dense layer with zero units")),
                LayerSpec::Dropout { rate } if !(rate > 0.0 && rate < 1.0) => {
                    return Err(Error::invalid(format!("dropout rate must lie in (0, 1), got {rate}")))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Widths from input through every dense layer to the single output.
    pub fn shape_chain(&self) -> Vec<usize> {
        let mut chain = vec![self.input_dim];
        chain.extend(self.layers.iter().filter_map(|l| match l {
            LayerSpec::Dense { units } => Some(*units),
            LayerSpec::Dropout { .. } => None,
        }));
        chain.push(1);
        chain
    }
}
