//! Dividend barriers, bailout costs and the efficiency of immediate payout.

pub mod barrier;
pub mod efficiency;
pub mod network;
pub mod values;

pub use barrier::{barrier_function, optimize_barrier, BarrierFunction, BarrierKind, BarrierSolution};
pub use efficiency::{efficiency_index, efficiency_threshold, is_efficient, solve_patience};
pub use network::{network_check, network_claims_line, network_value_mc, NetworkCheck, NetworkMc, NetworkSpec, Subsidiary};
pub use values::{
    slg_classic_parts, slg_parisian_value, value_definetti, value_definetti_linear, value_parisian, value_slg_classic,
    vf_dividends_classic, ParisianPart,
};
