pub mod analysis;
pub mod builder;
pub mod circuit;
pub mod code;
pub mod decoder;
pub mod error;
pub mod pauli;
pub mod sim;

pub use analysis::{Crossing, CurvePoint, FailureCurve, RiRow, RiTable, RunManifest};
pub use builder::{Hierarchy, RectKind, Template};
pub use circuit::{BlockLayout, Circuit, Counts, Location, LocationKind, Op};
pub use code::{Action, Parity};
pub use decoder::{DecoderMode, Weight, INF};
pub use error::{AnalysisError, CircuitError, DecodeError, FrameError, SimError, Violation};
pub use pauli::{compose, Basis, ErrorFrame, Pauli};
pub use sim::{Census, Fault, Injection, RunSummary, Simulator, TrialOutcome};
