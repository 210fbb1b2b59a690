use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::Window;
use crate::wavelet::FamilyTag;

/// Spatial extent of the token mixer's Fourier transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "KernelRepr", into = "KernelRepr")]
pub enum MixerKernel {
    Global,
    Window(usize),
}

impl MixerKernel {
    pub const ALLOWED_WINDOWS: [usize; 4] = [8, 16, 32, 64];

    pub fn window(self) -> Window {
        match self {
            MixerKernel::Global => Window::Global,
            MixerKernel::Window(k) => Window::Tiles(k),
        }
    }

    fn check(self) -> Result<Self> {
        match self {
            MixerKernel::Window(k) if !Self::ALLOWED_WINDOWS.contains(&k) => Err(Error::invalid(format!(
                "mixer window {} not in {:?}",
                k,
                Self::ALLOWED_WINDOWS
            ))),
            k => Ok(k),
        }
    }
}

impl fmt::Display for MixerKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MixerKernel::Global => f.write_str("global"),
            MixerKernel::Window(k) => write!(f, "{}", k),
        }
    }
}

impl FromStr for MixerKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("global") {
            return Ok(MixerKernel::Global);
        }
        let k: usize = s.parse().map_err(|_| Error::Unknown {
            kind: "mixer kernel",
            name: s.to_string(),
        })?;
        MixerKernel::Window(k).check()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum KernelRepr {
    Size(usize),
    Name(String),
}

impl TryFrom<KernelRepr> for MixerKernel {
    type Error = Error;

    fn try_from(r: KernelRepr) -> Result<Self> {
        match r {
            KernelRepr::Size(k) => MixerKernel::Window(k).check(),
            KernelRepr::Name(s) => s.parse(),
        }
    }
}

impl From<MixerKernel> for KernelRepr {
    fn from(k: MixerKernel) -> Self {
        match k {
            MixerKernel::Global => KernelRepr::Name("global".into()),
            MixerKernel::Window(k) => KernelRepr::Size(k),
        }
    }
}

/// Architecture hyperparameters. The network always has three scales.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Channel width at full resolution; scales 2 and 4 use 2C and 4C.
    pub base_channels: usize,
    /// Blocks per scale, finest first. The decoder mirrors the encoder.
    pub blocks_per_level: [usize; 3],
    pub family: FamilyTag,
    pub mixer_kernel: MixerKernel,
    pub seed: u64,
    pub io_channels: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            base_channels: 16,
            blocks_per_level: [2, 2, 2],
            family: FamilyTag::Db2,
            mixer_kernel: MixerKernel::Global,
            seed: 0,
            io_channels: 3,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.base_channels == 0 || self.base_channels % 2 != 0 {
            return Err(Error::invalid(format!(
                "base_channels must be a positive even number, got {}",
                self.base_channels
            )));
        }
        if self.blocks_per_level.contains(&0) {
            return Err(Error::invalid("every level needs at least one block"));
        }
        if self.io_channels == 0 {
            return Err(Error::invalid("io_channels must be positive"));
        }
        self.mixer_kernel.check()?;
        Ok(())
    }
}

/// Dynamic-inference depth: `S` stops after the coarsest decoder stage,
/// `M` after the middle one, `L` runs the whole network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variant {
    S,
    M,
    L,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::S, Variant::M, Variant::L];
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::S => "s",
            Variant::M => "m",
            Variant::L => "l",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "s" | "small" => Ok(Variant::S),
            "m" | "medium" => Ok(Variant::M),
            "l" | "large" => Ok(Variant::L),
            _ => Err(Error::Unknown {
                kind: "variant",
                name: s.to_string(),
            }),
        }
    }
}
