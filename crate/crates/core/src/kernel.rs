//! Compactly supported second-order kernels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    #[default]
    Epanechnikov,
    Triangular,
    Uniform,
}

/// A symmetric, non-negative kernel with bounded support `[-r, r]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
}

impl KernelSpec {
    pub const EPANECHNIKOV: KernelSpec = KernelSpec::new(KernelFamily::Epanechnikov);
    pub const TRIANGULAR: KernelSpec = KernelSpec::new(KernelFamily::Triangular);
    pub const UNIFORM: KernelSpec = KernelSpec::new(KernelFamily::Uniform);

    pub const fn new(family: KernelFamily) -> Self {
        KernelSpec { family }
    }

    /// All built-in kernels live on `[-1, 1]`.
    pub fn support_radius(&self) -> f64 {
        1.0
    }

    /// K(u); exactly zero for `|u| > 1`.
    #[inline]
    pub fn evaluate(&self, u: f64) -> f64 {
        let a = u.abs();
        if a > 1.0 {
            return 0.0;
        }
        match self.family {
            KernelFamily::Epanechnikov => 0.75 * (1.0 - a * a),
            KernelFamily::Triangular => 1.0 - a,
            KernelFamily::Uniform => 0.5,
        }
    }

    /// Value at the origin, the kernel's maximum.
    pub fn peak(&self) -> f64 {
        self.evaluate(0.0)
    }

    /// ∫u²K(u)du.
    pub fn second_moment(&self) -> f64 {
        match self.family {
            KernelFamily::Epanechnikov => 1.0 / 5.0,
            KernelFamily::Triangular => 1.0 / 6.0,
            KernelFamily::Uniform => 1.0 / 3.0,
        }
    }

    /// ∫K(u)²du.
    pub fn squared_integral(&self) -> f64 {
        match self.family {
            KernelFamily::Epanechnikov => 3.0 / 5.0,
            KernelFamily::Triangular => 2.0 / 3.0,
            KernelFamily::Uniform => 1.0 / 2.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            KernelFamily::Epanechnikov => "epanechnikov",
            KernelFamily::Triangular => "triangular",
            KernelFamily::Uniform => "uniform",
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "epanechnikov" | "epa" => Ok(Self::EPANECHNIKOV),
            "triangular" | "triangle" => Ok(Self::TRIANGULAR),
            "uniform" | "box" => Ok(Self::UNIFORM),
            other => Err(Error::InvalidConfig(format!("unknown kernel '{other}'"))),
        }
    }
}
