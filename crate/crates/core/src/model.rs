//! Model specifications and their textual labels.
//!
//! Labels follow the usual table naming: `Nash`, `L1+QR`, `L2+QR+Belief+Risk`,
//! `QRE+Risk`, `Lmix+QR` (fitted level mixture). A leading `n` marks a
//! component supplied per game by a network: `L2+nQR+nBelief+Risk`,
//! `nL+nQR+nBelief+Risk`. `MLP` is the direct network and `Random` the
//! uniform-draw baseline.

use alloc::format;
use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_LEVEL: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Structure {
    Nash,
    LevelKQr,
    Qre,
    LevelMixtureQr,
}

/// Which behavioral structure is active and which optional components are on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub structure: Structure,
    /// Depth for `LevelKQr`.
    pub k: Option<u8>,
    pub use_belief_noise: bool,
    pub use_risk: bool,
    /// Fixed mixture over levels 0..=3 for `LevelMixtureQr`.
    pub level_weights: Option<[f64; 4]>,
}

impl ModelSpec {
    pub fn nash() -> Self {
        ModelSpec {
            structure: Structure::Nash,
            k: None,
            use_belief_noise: false,
            use_risk: false,
            level_weights: None,
        }
    }

    pub fn level_k(k: u8) -> Self {
        ModelSpec { structure: Structure::LevelKQr, k: Some(k), ..ModelSpec::nash() }
    }

    pub fn qre() -> Self {
        ModelSpec { structure: Structure::Qre, ..ModelSpec::nash() }
    }

    pub fn level_mixture(weights: [f64; 4]) -> Self {
        ModelSpec {
            structure: Structure::LevelMixtureQr,
            level_weights: Some(weights),
            ..ModelSpec::nash()
        }
    }

    pub fn with_belief(mut self) -> Self {
        self.use_belief_noise = true;
        self
    }

    pub fn with_risk(mut self) -> Self {
        self.use_risk = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.structure {
            Structure::Nash => {
                if self.k.is_some() || self.level_weights.is_some() {
                    return Err(Error::InvalidSpec("Nash takes no level parameters".into()));
                }
                if self.use_belief_noise || self.use_risk {
                    return Err(Error::InvalidSpec("Nash has no noise or risk component".into()));
                }
            }
            Structure::LevelKQr => {
                if self.level_weights.is_some() {
                    return Err(Error::InvalidSpec("level weights given for a fixed-k model".into()));
                }
                match self.k {
                    Some(k) if k <= MAX_LEVEL => {}
                    Some(k) => return Err(Error::InvalidSpec(format!("k = {k} exceeds {MAX_LEVEL}"))),
                    None => return Err(Error::InvalidSpec("level-k model without k".into())),
                }
            }
            Structure::Qre => {
                if self.k.is_some() || self.level_weights.is_some() {
                    return Err(Error::InvalidSpec("QRE takes no level parameters".into()));
                }
            }
            Structure::LevelMixtureQr => {
                if self.k.is_some() {
                    return Err(Error::InvalidSpec("mixture model given a fixed k".into()));
                }
                let w = self
                    .level_weights
                    .ok_or_else(|| Error::InvalidSpec("mixture model without weights".into()))?;
                let sum: f64 = w.iter().sum();
                if w.iter().any(|&v| !(0.0..=1.0).contains(&v)) || (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidSpec("level weights must be a probability vector".into()));
                }
            }
        }
        Ok(())
    }
}

/// Precision and risk parameters shared by the behavioral models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub eta_self: f64,
    /// Believed opponent precision; ignored unless belief noise is on.
    pub eta_other: f64,
    /// CARA coefficient; ignored unless risk is on.
    pub alpha: f64,
}

impl Params {
    pub fn new(eta_self: f64, eta_other: f64, alpha: f64) -> Self {
        Params { eta_self, eta_other, alpha }
    }

    /// Same precision for self and opponent, risk neutral.
    pub fn eta(eta: f64) -> Self {
        Params { eta_self: eta, eta_other: eta, alpha: 0.0 }
    }

    /// Parameters the model actually uses: `eta_other` collapses to
    /// `eta_self` without belief noise and `alpha` to 0 without risk.
    pub fn effective(self, spec: &ModelSpec) -> Params {
        Params {
            eta_self: self.eta_self,
            eta_other: if spec.use_belief_noise { self.eta_other } else { self.eta_self },
            alpha: if spec.use_risk { self.alpha } else { 0.0 },
        }
    }
}

impl Default for Params {
    fn default() -> Self {
        Params::eta(0.1)
    }
}

/// Which parameters a network supplies per game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NeuralSlots {
    pub eta_self: bool,
    pub eta_other: bool,
    pub level_mixture: bool,
}

impl NeuralSlots {
    pub fn any(self) -> bool {
        self.eta_self || self.eta_other || self.level_mixture
    }
}

/// A parsed model label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModelLabel {
    Random,
    Mlp,
    Behavioral { spec: ModelSpec, neural: NeuralSlots },
}

impl ModelLabel {
    pub fn parse(s: &str) -> Result<ModelLabel> {
        let bad = |why: &str| Error::InvalidSpec(format!("{s:?}: {why}"));
        let trimmed = s.trim();
        match trimmed {
            "Random" | "random" => return Ok(ModelLabel::Random),
            "MLP" | "mlp" => return Ok(ModelLabel::Mlp),
            "Nash" | "nash" => {
                return Ok(ModelLabel::Behavioral { spec: ModelSpec::nash(), neural: NeuralSlots::default() })
            }
            _ => {}
        }
        let mut parts = trimmed.split('+');
        let head = parts.next().ok_or_else(|| bad("empty label"))?;
        let mut neural = NeuralSlots::default();
        let mut spec = match head {
            "QRE" => ModelSpec::qre(),
            "nQRE" => {
                neural.eta_self = true;
                ModelSpec::qre()
            }
            "nL" => {
                neural.level_mixture = true;
                ModelSpec::level_mixture([0.25; 4])
            }
            "Lmix" => ModelSpec::level_mixture([0.25; 4]),
            h if h.starts_with('L') => {
                let k: u8 = h[1..].parse().map_err(|_| bad("level must be L0..L3"))?;
                if k > MAX_LEVEL {
                    return Err(bad("level must be L0..L3"));
                }
                ModelSpec::level_k(k)
            }
            _ => return Err(bad("unknown structure")),
        };
        let mut saw_qr = spec.structure == Structure::Qre;
        for part in parts {
            match part {
                "QR" if !saw_qr => saw_qr = true,
                "nQR" if !saw_qr => {
                    saw_qr = true;
                    neural.eta_self = true;
                }
                "Belief" if !spec.use_belief_noise => spec.use_belief_noise = true,
                "nBelief" if !spec.use_belief_noise => {
                    spec.use_belief_noise = true;
                    neural.eta_other = true;
                }
                "Risk" if !spec.use_risk => spec.use_risk = true,
                _ => return Err(bad("unknown or repeated component")),
            }
        }
        if !saw_qr {
            return Err(bad("level models need a QR component"));
        }
        spec.validate()?;
        Ok(ModelLabel::Behavioral { spec, neural })
    }

    pub fn is_neural(&self) -> bool {
        match self {
            ModelLabel::Mlp => true,
            ModelLabel::Behavioral { neural, .. } => neural.any(),
            ModelLabel::Random => false,
        }
    }
}

impl fmt::Display for ModelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelLabel::Random => f.write_str("Random"),
            ModelLabel::Mlp => f.write_str("MLP"),
            ModelLabel::Behavioral { spec, neural } => {
                let n = |on: bool| if on { "n" } else { "" };
                match spec.structure {
                    Structure::Nash => return f.write_str("Nash"),
                    Structure::Qre => write!(f, "{}QRE", n(neural.eta_self))?,
                    Structure::LevelKQr => {
                        write!(f, "L{}+{}QR", spec.k.unwrap_or(0), n(neural.eta_self))?
                    }
                    Structure::LevelMixtureQr => {
                        let head = if neural.level_mixture { "nL" } else { "Lmix" };
                        write!(f, "{head}+{}QR", n(neural.eta_self))?
                    }
                }
                if spec.use_belief_noise {
                    write!(f, "+{}Belief", n(neural.eta_other))?;
                }
                if spec.use_risk {
                    f.write_str("+Risk")?;
                }
                Ok(())
            }
        }
    }
}

/// Label text for a spec with no neural components.
pub fn label(spec: &ModelSpec) -> String {
    format!("{}", ModelLabel::Behavioral { spec: *spec, neural: NeuralSlots::default() })
}
