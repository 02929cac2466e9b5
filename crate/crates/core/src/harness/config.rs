use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::families::FamilySpec;
use crate::error::{Error, Result};
use crate::grid::{GridHeader, ProductGrid};
use crate::kernel::Exponents;

/// Pinned constants and tolerances of the campaigns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Largest allowed max/min ratio of a per-dilation statistic within a family.
    pub stability_factor: f64,
    /// Allowed deviation of a fitted slope from its theoretical value.
    pub slope: f64,
    /// Suite constant `C` in `lhs <= C final_bound`.
    pub suite_constant: f64,
    /// Norm constant `A` in `||f * Omega||_q <= A ||f||_p`.
    pub norm_constant: f64,
    /// Relative tolerance of `||G f||_p = ||M1 f||_p ||M2 f||_p`.
    pub fubini: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            stability_factor: 2.0,
            slope: 0.05,
            suite_constant: super::SUITE_CONSTANT,
            norm_constant: super::NORM_CONSTANT,
            fubini: 1e-10,
        }
    }
}

/// `alpha` and `p` are required; `beta` defaults to `n alpha / m` and `q` to
/// the value forced by `1/p - 1/q = alpha/m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentSpec {
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
}

impl ExponentSpec {
    pub fn resolve(&self, m: usize, n: usize) -> Result<Exponents> {
        let balanced = Exponents::balanced(m, n, self.alpha, self.p);
        match (self.beta, self.q) {
            (None, None) => balanced,
            (beta, q) => {
                let beta = beta.unwrap_or(n as f64 * self.alpha / m as f64);
                let q = match q {
                    Some(q) => q,
                    None => balanced?.q(),
                };
                Exponents::new(m, n, self.alpha, beta, self.p, q)
            }
        }
    }
}

fn default_stride() -> usize {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridHeader,
    pub exponents: ExponentSpec,
    pub families: Vec<FamilySpec>,
    /// Dilation pairs `(s, t)` applied as `f(s x, t y)`.
    pub ladder: Vec<[f64; 2]>,
    #[serde(default)]
    pub seed: u64,
    /// Certify every `point_stride`-th cell along each flattened group index.
    #[serde(default = "default_stride")]
    pub point_stride: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.exponents()?;
        if self.families.is_empty() {
            return Err(Error::Config("no function families".into()));
        }
        if self.ladder.is_empty() {
            return Err(Error::Config("empty dilation ladder".into()));
        }
        if let Some(bad) = self
            .ladder
            .iter()
            .find(|[s, t]| !(s.is_finite() && t.is_finite() && *s > 0.0 && *t > 0.0))
        {
            return Err(Error::Config(format!("nonpositive dilation {bad:?}")));
        }
        if self.point_stride == 0 {
            return Err(Error::Config("point_stride must be positive".into()));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("stability_factor", t.stability_factor),
            ("slope", t.slope),
            ("suite_constant", t.suite_constant),
            ("norm_constant", t.norm_constant),
            ("fubini", t.fubini),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("tolerance {name} must be positive, got {v}")));
            }
        }
        for fam in &self.families {
            fam.validate()?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<ProductGrid> {
        self.grid.grid().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn exponents(&self) -> Result<Exponents> {
        self.exponents
            .resolve(self.grid.m, self.grid.n)
            .map_err(|e| Error::Config(e.to_string()))
    }

    /// Hex SHA-256 of the canonical JSON form, without the output path.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(&Self {
            out: None,
            ..self.clone()
        })
        .expect("config serializes");
        Sha256::digest(&canonical)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
