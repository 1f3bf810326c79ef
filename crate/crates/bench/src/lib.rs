//! Shared fixtures for the criterion benches.

use iabnet_core::{Network, NetworkConfig, Precision};

/// Default network at sweep precision.
pub fn sweep_network() -> Network {
    Network::new(&NetworkConfig::table2())
        .expect("default config is valid")
        .with_precision(Precision::with_rel_tol(1e-3))
}
