use alloc::format;
use alloc::vec::Vec;

use super::ModelError;

/// Kernel sizes of the seven convolutions.
pub const DEFAULT_KERNELS: [usize; 7] = [9, 9, 7, 7, 7, 5, 5];
/// Output channels of the six hidden convolutions; the last layer emits one.
pub const DEFAULT_HIDDEN: [usize; 6] = [128, 64, 64, 32, 32, 32];
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;
/// RGB input.
pub const INPUT_CHANNELS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LayerSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    /// Leaky ReLU + dropout follow this layer; otherwise a sigmoid does.
    pub activation: bool,
}

/// Architecture of a stack of valid convolutions ending in one sigmoid channel.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetSpec {
    pub input_channels: usize,
    pub layers: Vec<LayerSpec>,
    pub leaky_slope: f64,
}

impl Default for NetSpec {
    fn default() -> Self {
        default_netspec()
    }
}

/// The seven-layer network: kernels 9,9,7,7,7,5,5 with 128,64,64,32,32,32
/// hidden channels and a single-channel sigmoid head.
pub fn default_netspec() -> NetSpec {
    NetSpec::with_hidden(&DEFAULT_HIDDEN).expect("default architecture is valid")
}

/// Per-side pixel loss of the whole stack, `Σ (k-1)/2`.
pub fn halo_of(spec: &NetSpec) -> usize {
    spec.layers.iter().map(|l| (l.kernel - 1) / 2).sum()
}

impl NetSpec {
    /// Default kernels with custom hidden channel counts (reduced networks).
    pub fn with_hidden(hidden: &[usize]) -> Result<Self, ModelError> {
        if hidden.len() != DEFAULT_HIDDEN.len() {
            return Err(ModelError::InvalidSpec(format!(
                "expected {} hidden channel counts, got {}",
                DEFAULT_HIDDEN.len(),
                hidden.len()
            )));
        }
        let mut chans = Vec::with_capacity(8);
        chans.push(INPUT_CHANNELS);
        chans.extend_from_slice(hidden);
        chans.push(1);
        let triples: Vec<(usize, usize, usize)> = DEFAULT_KERNELS
            .iter()
            .enumerate()
            .map(|(i, &k)| (chans[i], chans[i + 1], k))
            .collect();
        NetSpec::from_layers(INPUT_CHANNELS, &triples, DEFAULT_LEAKY_SLOPE)
    }

    /// Build from `(in, out, kernel)` triples; every layer but the last is activated.
    pub fn from_layers(
        input_channels: usize,
        triples: &[(usize, usize, usize)],
        leaky_slope: f64,
    ) -> Result<Self, ModelError> {
        let n = triples.len();
        let layers = triples
            .iter()
            .enumerate()
            .map(|(i, &(in_channels, out_channels, kernel))| LayerSpec {
                in_channels,
                out_channels,
                kernel,
                activation: i + 1 < n,
            })
            .collect();
        let spec = NetSpec {
            input_channels,
            layers,
            leaky_slope,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg| Err(ModelError::InvalidSpec(msg));
        if self.layers.is_empty() {
            return bad(alloc::string::String::from("no layers"));
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return bad(format!("leaky slope {} not in (0, 1)", self.leaky_slope));
        }
        let mut chans = self.input_channels;
        for (i, l) in self.layers.iter().enumerate() {
            if l.in_channels != chans {
                return bad(format!(
                    "layer {i} takes {} channels but receives {chans}",
                    l.in_channels
                ));
            }
            if l.kernel % 2 == 0 {
                return bad(format!("layer {i} kernel {} is not odd", l.kernel));
            }
            if l.out_channels == 0 || l.in_channels == 0 {
                return bad(format!("layer {i} has zero channels"));
            }
            let last = i + 1 == self.layers.len();
            if l.activation == last {
                return bad(format!("layer {i}: only the last layer may skip the activation"));
            }
            chans = l.out_channels;
        }
        if chans != 1 {
            return bad(format!("final layer emits {chans} channels, expected 1"));
        }
        Ok(())
    }

    pub fn halo(&self) -> usize {
        halo_of(self)
    }

    /// Smallest spatial input size producing a non-empty output.
    pub fn min_input(&self) -> usize {
        2 * self.halo() + 1
    }

    pub fn kernel_sizes(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.kernel).collect()
    }

    pub fn hidden_channels(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(|l| l.out_channels)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_architecture() {
        let s = default_netspec();
        assert_eq!(s.layers.len(), 7);
        assert_eq!(s.kernel_sizes(), [9, 9, 7, 7, 7, 5, 5]);
        assert_eq!(s.hidden_channels(), [128, 64, 64, 32, 32, 32]);
        assert_eq!(s.input_channels, 3);
        assert_eq!(s.layers[6].out_channels, 1);
        assert!(s.layers[..6].iter().all(|l| l.activation));
        assert!(!s.layers[6].activation);
        assert_eq!(s.leaky_slope, 0.01);
    }

    #[test]
    fn halo_arithmetic() {
        assert_eq!(halo_of(&default_netspec()), 21);
        let one = NetSpec::from_layers(3, &[(3, 1, 1)], 0.01).unwrap();
        assert_eq!(halo_of(&one), 0);
        let two = NetSpec::from_layers(3, &[(3, 4, 3), (4, 1, 3)], 0.01).unwrap();
        assert_eq!(halo_of(&two), 2);
        assert_eq!(default_netspec().min_input(), 43);
    }

    #[test]
    fn invalid_specs() {
        assert!(NetSpec::from_layers(3, &[(3, 4, 3), (5, 1, 3)], 0.01).is_err());
        assert!(NetSpec::from_layers(3, &[(3, 1, 4)], 0.01).is_err());
        assert!(NetSpec::from_layers(3, &[(3, 2, 3)], 0.01).is_err());
        assert!(NetSpec::from_layers(3, &[(3, 1, 3)], 1.5).is_err());
        assert!(NetSpec::with_hidden(&[8, 8]).is_err());
    }
}
