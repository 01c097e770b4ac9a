use crate::error::{OmtError, Result};
use crate::features::FeatureVector;

pub const DEFAULT_RADIUS: f64 = 0.3;
pub const DEFAULT_MAX_REPRESENTATIVES: usize = 300;
pub const DEFAULT_INITIAL_COVER_RADIUS: f64 = 0.05;
pub const DEFAULT_SIGMA: f64 = 0.03;
pub const DEFAULT_EPSILON: f64 = 0.5;

/// Sink similarity: the kernel value of two points three heat widths apart.
pub fn default_gamma() -> f64 {
    (-4.5f64).exp()
}

/// Every tunable of the recognizer, plus the single labeled example.
#[derive(Debug, Clone, PartialEq)]
pub struct OmtConfig {
    /// Generalization radius: points farther than this from the anchor are
    /// neither quantized nor labeled positive.
    pub radius: f64,
    /// Representative budget of the cover.
    pub max_representatives: usize,
    /// Starting cover radius, doubled whenever the budget overflows.
    pub initial_cover_radius: f64,
    /// Heat parameter of the similarity kernel.
    pub sigma: f64,
    /// Weight of the edge from every unlabeled vertex to the sink.
    pub gamma: f64,
    /// Recognition threshold on the absorption score.
    pub epsilon: f64,
    pub anchor: FeatureVector,
}

impl OmtConfig {
    pub fn new(anchor: FeatureVector) -> Self {
        OmtConfig {
            radius: DEFAULT_RADIUS,
            max_representatives: DEFAULT_MAX_REPRESENTATIVES,
            initial_cover_radius: DEFAULT_INITIAL_COVER_RADIUS,
            sigma: DEFAULT_SIGMA,
            gamma: default_gamma(),
            epsilon: DEFAULT_EPSILON,
            anchor,
        }
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn with_max_representatives(mut self, k: usize) -> Self {
        self.max_representatives = k;
        self
    }

    pub fn with_initial_cover_radius(mut self, r0: f64) -> Self {
        self.initial_cover_radius = r0;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn dim(&self) -> usize {
        self.anchor.dim()
    }

    pub fn validate(&self) -> Result<()> {
        fn bad(msg: String) -> Result<()> {
            Err(OmtError::InvalidConfig(msg))
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad(format!("radius must be positive, got {}", self.radius));
        }
        if self.max_representatives == 0 {
            return bad("k must be at least 1".into());
        }
        if !(self.initial_cover_radius > 0.0 && self.initial_cover_radius.is_finite()) {
            return bad(format!("r0 must be positive, got {}", self.initial_cover_radius));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be nonnegative, got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("epsilon must lie in [0, 1], got {}", self.epsilon));
        }
        Ok(())
    }
}
