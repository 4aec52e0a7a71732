//! Analytic compliance of Kirchhoff rods and tendon-actuated continuum
//! segments from a Chebyshev modal curvature basis and Lie-group integration.

pub mod compliance;
pub mod error;
pub mod kinematics;
pub mod linalg;
pub mod modal;
pub mod oracle;
pub mod quadrature;
pub mod se3;
pub mod tendon;

pub use compliance::{ComplianceMatrix, Rod};
pub use error::{Error, Result};
pub use kinematics::{BackboneTrajectory, BodyJacobian};
pub use modal::{AxisOrders, ModalConfig, RodProperties, ShapeBasis};
pub use tendon::{ConfigCompliance, SegmentModel, TendonActuation, TendonRouting, TendonSign};
pub use se3::{Pose, Twist, Wrench};
