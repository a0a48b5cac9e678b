//! Process operators, coherent-information measures and LOCC tooling for
//! quantum processes with definite or indefinite causal order.

pub mod choi;
pub mod error;
pub mod locc;
pub mod measures;
pub mod network;
pub mod optimizer;
pub mod process;
pub mod random;
pub mod tensor;

pub use error::{Error, Result};
pub use choi::{KrausSet, Normalization, QuantumMap, Tooth};
pub use tensor::{CMatrix, LabeledOperator, SystemId, C64};
