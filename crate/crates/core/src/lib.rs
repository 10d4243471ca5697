//! Rate and dynamics models for atom-array quantum network nodes.
//!
//! - [`cavity`]: Fabry-Perot mode geometry, linewidths, dipole matrix
//!   element, coupling g and cooperativity.
//! - [`fwm`]: four-wave-mixing atom-photon entanglement dynamics, pulse
//!   sweeps and optimization, phase matching.
//! - [`link`]: closed-form single-link attempt rates and multiplexed success
//!   probabilities.
//! - [`netsim`]: Monte Carlo rates for links, repeater chains and multi-Bell
//!   ladders.
//! - [`run`]: TOML configuration and the CSV/JSON sweep runner behind the
//!   `atomnet` binary.
//!
//! Each capability has a runnable program under `examples/`.

pub mod angular;
pub mod cavity;
pub mod constants;
pub mod fwm;
pub mod link;
pub mod netsim;
pub mod run;
