//! Built-in example models.

use crate::error::Result;
use crate::gth::off_index;
use crate::model::FluidQueueModel;

/// Two-state queue: unit switching rates, inflow 1, outflow 2. Small enough
/// that every downstream quantity has a closed form.
pub fn two_state() -> FluidQueueModel {
    let mut t_off = vec![0.0; 2];
    t_off[off_index(0, 1, 2)] = 1.0;
    t_off[off_index(1, 0, 2)] = 1.0;
    FluidQueueModel::new(1, 1, t_off, vec![1.0, -2.0]).expect("two-state model is valid")
}

/// Six-phase queue with two weakly connected state clusters: {1, 6} is
/// reachable from {2, 3, 4, 5} only through a rate-1e-8 transition, so the
/// return probabilities into the isolated cluster are around 1e-9 and expose
/// any loss of componentwise accuracy.
pub fn weakly_connected() -> FluidQueueModel {
    let n = 6;
    let mut t_off = vec![0.0; n * n - n];
    let mut set = |i: usize, j: usize, r: f64| t_off[off_index(i - 1, j - 1, n)] = r;
    set(1, 6, 4.0);
    set(2, 3, 5.0);
    set(2, 4, 5.0);
    set(2, 5, 5.0);
    set(2, 6, 1e-8);
    set(3, 2, 5.0);
    set(3, 4, 5.0);
    set(3, 5, 5.0);
    set(4, 2, 5.0);
    set(4, 3, 5.0);
    set(4, 5, 5.0);
    set(5, 2, 5.0);
    set(5, 3, 5.0);
    set(5, 4, 5.0);
    set(6, 1, 4.0);
    set(6, 2, 1.0);
    let c = vec![1.0, 1.0, 1.0, -1.001, -1.001, -1.001];
    FluidQueueModel::new(3, 3, t_off, c).expect("weakly connected model is valid")
}

/// Eight-phase cascading queue: a base state 8 feeds a chain of states, each
/// reachable only from its predecessor at rate 0.01 while everything falls
/// back to base at rate 1. Stationary masses decay geometrically along the
/// chain; `kappa` sets the fluid rate in the rarest state.
pub fn cascading(kappa: f64) -> Result<FluidQueueModel> {
    let n = 8;
    let mut t_off = vec![0.0; n * n - n];
    let mut set = |i: usize, j: usize, r: f64| t_off[off_index(i - 1, j - 1, n)] = r;
    set(1, 8, 1.0);
    set(2, 5, 0.01);
    set(2, 8, 1.0);
    set(3, 6, 0.01);
    set(3, 8, 1.0);
    set(4, 7, 0.01);
    set(4, 8, 1.0);
    set(5, 1, 0.01);
    set(5, 8, 1.0);
    set(6, 2, 0.01);
    set(6, 8, 1.0);
    set(7, 3, 0.01);
    set(7, 8, 1.0);
    set(8, 4, 0.01);
    let c = vec![kappa, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0];
    FluidQueueModel::new(4, 4, t_off, c)
}
