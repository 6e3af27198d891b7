//! Pulse-level discrete-event simulation of SFQ spiking neurons whose
//! thresholds can be raised or lowered at run time.
//!
//! * [`kernel`]: deterministic event engine, netlists and traces.
//! * [`cells`]: behavioral SFQ cells (delay, splitter, merger, AND, RTFF, M-NDRO).
//! * [`neuron`]: threshold unit, threshold adjustment unit, arbiter and the
//!   composed neuron with its per-cycle protocol.
//! * [`network`]: layers of neurons with integer weights, layer-wise
//!   threshold tuning and threshold search.
//! * [`harness`]: scenario files, golden traces, waveform export, margin
//!   sweeps and experiments behind the `sfqsim` command line tool.

pub mod cells;
pub mod harness;
pub mod kernel;
pub mod network;
pub mod neuron;
pub mod time;

pub use time::SimTime;
