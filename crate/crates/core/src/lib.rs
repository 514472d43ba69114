//! Scheduling jobs on multi-core processors whose cores share one data bus.
//!
//! Jobs slow down when co-running jobs compete for bus bandwidth. The crate
//! provides instance generation, the bus-sharing speed model, a greedy list
//! scheduler, an exact configuration-sequence search, an event-point MILP
//! exporter and a discrete-event simulator for replaying schedules.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below name the common `f64` instantiations.

pub mod busmodel;
pub mod configspace;
pub mod error;
pub mod exact;
pub mod greedy;
pub mod instance;
pub mod milp;
pub mod scalar;
pub mod schedule;
pub mod simulator;

pub use busmodel::{
    allocate_bus, estimate_bandwidth, materialize_speed_table, speeds_f2, water_fill, CoRunOracle,
    Probe, SpeedTable,
};
pub use configspace::{enumerate_configurations, ConfigSpace, Configuration, DEFAULT_CONFIG_CAP};
pub use error::{Error, Result};
pub use exact::{
    brute_force_no_interference, enumerate_sequences, exact_makespan, exact_solve, ExactOptions,
    ExactResult,
};
pub use greedy::{greedy_run, greedy_schedule};
pub use instance::{
    f2_instance, gen_instance, gen_partial_order, load_instance, save_instance, Flavor, Instance,
    Job, JobId, OrderKind, PrecedenceDag,
};
pub use milp::{build_milp, export_lp, schedule_from_solution, MilpModel};
pub use scalar::Scalar;
pub use schedule::{assign_cores, Schedule, Step};
pub use simulator::{simulate, GroundTruthModel, SimulationReport};

pub type Instance64 = Instance<f64>;
pub type Instance32 = Instance<f32>;
pub type Schedule64 = Schedule<f64>;
pub type Schedule32 = Schedule<f32>;
pub type SpeedTable64 = SpeedTable<f64>;
pub type SpeedTable32 = SpeedTable<f32>;
pub type MilpModel64 = MilpModel<f64>;
pub type GroundTruth64 = GroundTruthModel<f64>;
pub type Report64 = SimulationReport<f64>;
