pub mod bound;
pub mod constraints;
pub mod driver;
pub mod fixtures;
pub mod instance;
pub mod milp;
pub mod oracle;
pub mod random;
pub mod reductions;
pub mod scalar;
pub mod separation;
pub mod tracking;

pub use scalar::Scalar;

pub type Instance = instance::Instance<f64>;
pub type InstanceBuilder = instance::InstanceBuilder<f64>;
pub type FlowSolution = instance::FlowSolution<f64>;
