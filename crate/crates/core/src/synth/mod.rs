//! Synthetic objects, trajectories, wrench simulation, and noise models:
//! the simulated stand-in for a robot arm with a wrist force-torque sensor
//! manipulating multi-part rigid objects.

pub mod object;
pub mod primitives;
pub mod trajectory;

pub use object::{build_object, builtin_names, builtin_spec, BuiltObject, GenOptions, ObjectSpec, PartSpec};
pub use primitives::Shape;
pub use trajectory::{
    add_noise, gen_stop_and_go, preset_noise, simulate_wrench, NoiseLevel, NoiseModel, SimRecord,
    TrajectorySpec,
};
