//! Stochastic-geometry coverage analysis for cellular networks with building
//! blockage: LOS models, path-loss intensity measures, model fitting and
//! Monte-Carlo SINR coverage.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blockage;
pub mod channel;
pub mod city;
pub mod error;
pub mod geom;
pub mod intensity;
pub mod optim;
pub mod paramfile;
pub mod quad;
pub mod rng;
pub mod sim;

pub use blockage::{BlockageModel, LinkState, LosHistogram, MultiBallParams};
pub use channel::{AntennaModel, ChannelParams, Fading, MultiLobeParams, StateChannel};
pub use error::{Error, Result};
pub use geom::{BaseStation, BuildingSet, Point2D, Polygon, Region};
pub use intensity::{FitOptions, FitReport, IntensityCurve, StateIntensity};
pub use sim::{CoverageCurve, MtPlacement, Placement, ScenarioConfig};
