use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical parameter vector `a = (R, kappa, alpha)`.
///
/// `R` is the Reynolds number, `kappa = cot(theta)` encodes the inclination
/// and `alpha` the electric-field strength. When `kappa_star` is set the
/// vector is additionally confined to the region
/// `(0, kappa_star + 1] x [0, kappa_star] x [0, 2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    #[serde(rename = "R")]
    pub r: f64,
    pub kappa: f64,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_star: Option<f64>,
}

/// Largest admissible electric-field strength.
pub const ALPHA_MAX: f64 = 2.0;

impl PhysicalParams {
    pub fn new(r: f64, kappa: f64, alpha: f64) -> Result<Self> {
        let p = Self {
            r,
            kappa,
            alpha,
            kappa_star: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// The vertical-plane limit `o = (1, 0, 0)`.
    pub fn vertical() -> Self {
        Self {
            r: 1.0,
            kappa: 0.0,
            alpha: 0.0,
            kappa_star: None,
        }
    }

    /// Parameters for an inclination angle `0 < theta <= pi/2`.
    pub fn from_angle(r: f64, theta: f64, alpha: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidParams(format!(
                "inclination angle must lie in (0, pi/2], got {theta}"
            )));
        }
        let kappa = if theta == std::f64::consts::FRAC_PI_2 {
            0.0
        } else {
            (1.0 / theta.tan()).max(0.0)
        };
        Self::new(r, kappa, alpha)
    }

    /// Attaches the region bound and checks membership.
    pub fn in_region(mut self, kappa_star: f64) -> Result<Self> {
        self.kappa_star = Some(kappa_star);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.r.is_finite() && self.kappa.is_finite() && self.alpha.is_finite();
        if !finite {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if self.r <= 0.0 {
            return Err(Error::InvalidParams(format!("R > 0 required, got R={}", self.r)));
        }
        if self.kappa < 0.0 {
            return Err(Error::InvalidParams(format!(
                "kappa >= 0 required, got kappa={}",
                self.kappa
            )));
        }
        if self.alpha < 0.0 {
            return Err(Error::InvalidParams(format!(
                "alpha >= 0 required, got alpha={}",
                self.alpha
            )));
        }
        if let Some(ks) = self.kappa_star {
            if !(ks.is_finite() && ks > 0.0) {
                return Err(Error::InvalidParams(format!("kappa_star > 0 required, got {ks}")));
            }
            let region = format!("(R, kappa, alpha) in (0, {}] x [0, {ks}] x [0, 2]", ks + 1.0);
            if self.r > ks + 1.0 {
                return Err(Error::InvalidParams(format!(
                    "R={} violates region bound {region}",
                    self.r
                )));
            }
            if self.kappa > ks {
                return Err(Error::InvalidParams(format!(
                    "kappa={} violates region bound {region}",
                    self.kappa
                )));
            }
            if self.alpha > ALPHA_MAX {
                return Err(Error::InvalidParams(format!(
                    "alpha={} violates region bound {region}",
                    self.alpha
                )));
            }
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.r, self.kappa, self.alpha]
    }

    /// Euclidean distance `|a - b|` in `(R, kappa, alpha)` space.
    pub fn distance(&self, other: &Self) -> f64 {
        let a = self.as_array();
        let b = other.as_array();
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    /// `self + delta * direction`, keeping the region bound.
    pub fn offset(&self, delta: f64, direction: [f64; 3]) -> Result<Self> {
        let p = Self {
            r: self.r + delta * direction[0],
            kappa: self.kappa + delta * direction[1],
            alpha: self.alpha + delta * direction[2],
            kappa_star: self.kappa_star,
        };
        p.validate()?;
        Ok(p)
    }
}
