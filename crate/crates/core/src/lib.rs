//! Floating-base rigid-body dynamics and the impact mitigation factor (IMF),
//! together with the locomotion reward, discriminator and metric machinery
//! that consumes it.

pub mod discriminator;
pub mod dynamics;
pub mod error;
pub mod imf;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod rewards;
pub mod trajlog;

pub use error::{Error, Result};
pub use model::{parse_model, validate_state, RobotModel, RobotState};
