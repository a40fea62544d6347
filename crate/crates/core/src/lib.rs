pub mod assignment;
pub mod augment;
pub mod bop;
pub mod geometry;
pub mod metrics;
pub mod pipeline;
pub mod sampling;
mod scalar;
pub mod synth;

pub use scalar::Scalar;

pub type Pose = geometry::RigidPose<f64>;
pub type Cloud = geometry::PointCloud<f64>;
pub type Intrinsics = geometry::CameraIntrinsics<f64>;
pub type PoseF32 = geometry::RigidPose<f32>;
pub type CloudF32 = geometry::PointCloud<f32>;
pub type IntrinsicsF32 = geometry::CameraIntrinsics<f32>;
