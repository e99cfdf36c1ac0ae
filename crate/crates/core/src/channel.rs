//! Classical channel carrying the label broadcast.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("base_delay must be finite and >= 0, got {0}")]
    BaseDelay(f64),
    #[error("jitter_sigma must be finite and >= 0, got {0}")]
    Jitter(f64),
    #[error("loss_probability must lie in [0, 1], got {0}")]
    Loss(f64),
}

/// Delay, Gaussian jitter and independent loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub base_delay: f64,
    pub jitter_sigma: f64,
    pub loss_probability: f64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel {
            base_delay: 0.0,
            jitter_sigma: 0.0,
            loss_probability: 0.0,
        }
    }
}

impl ChannelModel {
    pub fn new(base_delay: f64, jitter_sigma: f64, loss_probability: f64) -> Result<Self, ChannelError> {
        let c = ChannelModel {
            base_delay,
            jitter_sigma,
            loss_probability,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if !(self.base_delay.is_finite() && self.base_delay >= 0.0) {
            return Err(ChannelError::BaseDelay(self.base_delay));
        }
        if !(self.jitter_sigma.is_finite() && self.jitter_sigma >= 0.0) {
            return Err(ChannelError::Jitter(self.jitter_sigma));
        }
        if !(0.0..=1.0).contains(&self.loss_probability) {
            return Err(ChannelError::Loss(self.loss_probability));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Delivery {
    Delivered(f64),
    Lost,
}

/// Delivery time `send_time + max(0, base_delay + jitter)`, unless the loss
/// draw fires. Always consumes one uniform and one normal draw.
pub fn deliver<R: Rng + ?Sized>(channel: &ChannelModel, send_time: f64, rng: &mut R) -> Delivery {
    let loss_draw: f64 = rng.random();
    let z: f64 = StandardNormal.sample(rng);
    if loss_draw < channel.loss_probability {
        return Delivery::Lost;
    }
    let delay = (channel.base_delay + channel.jitter_sigma * z).max(0.0);
    Delivery::Delivered(send_time + delay)
}
