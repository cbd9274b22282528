//! Shared helpers for the integration suites: a deterministic RNG and
//! generators for random problem instances. Everything here is seeded, so
//! every run sees the same instances.
#![allow(dead_code)]

use fluidq::gth::{off_index, Side, TripletRepresentation};
use fluidq::model::{stationary_phase_distribution, FluidQueueModel};

pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Log-uniform magnitude spanning `orders` decades centered at 1.
    pub fn magnitude(&mut self, orders: f64) -> f64 {
        10f64.powf(self.range(-orders / 2.0, orders / 2.0))
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

/// Random irreducible model with the given phase-class sizes. A directed
/// cycle keeps the chain irreducible; extra edges and rates are drawn with
/// modest magnitude spread.
pub fn random_model_sized(rng: &mut SplitMix64, n_plus: usize, n_minus: usize) -> FluidQueueModel {
    let n = n_plus + n_minus;
    let mut t_off = vec![0.0; n * n - n];
    for i in 0..n {
        let j = (i + 1) % n;
        t_off[off_index(i, j, n)] = rng.magnitude(1.5);
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.chance(0.4) {
                t_off[off_index(i, j, n)] = rng.magnitude(1.5);
            }
        }
    }
    let mut c: Vec<f64> = Vec::with_capacity(n);
    for i in 0..n {
        let mag = rng.magnitude(1.5);
        c.push(if i < n_plus { mag } else { -mag });
    }
    FluidQueueModel::new(n_plus, n_minus, t_off, c).expect("generated model is valid")
}

pub fn random_model(rng: &mut SplitMix64, n_min: usize, n_max: usize) -> FluidQueueModel {
    let n = n_min + rng.below(n_max - n_min + 1);
    let n_plus = 1 + rng.below(n - 1);
    random_model_sized(rng, n_plus, n - n_plus)
}

/// As [`random_model`], with the down-phase rates rescaled so the mean drift
/// is strictly negative.
pub fn random_positive_recurrent(
    rng: &mut SplitMix64,
    n_min: usize,
    n_max: usize,
) -> FluidQueueModel {
    let model = random_model(rng, n_min, n_max);
    let phase = stationary_phase_distribution(&model).expect("irreducible by construction");
    if phase.drift < 0.0 {
        return model;
    }
    let mut inflow = 0.0;
    let mut outflow = 0.0;
    for (i, &x) in phase.xi.iter().enumerate() {
        if i < model.n_plus() {
            inflow += x * model.c(i);
        } else {
            outflow += x * model.c_abs(i);
        }
    }
    let scale = 1.5 * inflow / outflow;
    let c: Vec<f64> = (0..model.n())
        .map(|i| if i < model.n_plus() { model.c(i) } else { model.c(i) * scale })
        .collect();
    let rebuilt = FluidQueueModel::new(model.n_plus(), model.n_minus(), model.t_offdiag().to_vec(), c)
        .expect("rescaled model is valid");
    assert!(
        stationary_phase_distribution(&rebuilt).unwrap().drift < 0.0,
        "drift rescaling failed"
    );
    rebuilt
}

/// Random nonsingular M-matrix certificate with entry magnitudes spanning
/// `orders` decades: `v = 1`, `w > 0`, off-diagonal entries nonpositive and
/// sparse.
pub fn random_triplet(rng: &mut SplitMix64, m: usize, orders: f64) -> TripletRepresentation {
    let mut offdiag = vec![0.0; m * m - m];
    for x in offdiag.iter_mut() {
        if rng.chance(0.75) {
            *x = -rng.magnitude(orders);
        }
    }
    let w: Vec<f64> = (0..m).map(|_| rng.magnitude(orders)).collect();
    TripletRepresentation::new(m, offdiag, vec![1.0; m], w, Side::Right)
        .expect("generated certificate is valid")
}

/// As [`random_triplet`] with every off-diagonal entry drawn nonzero, for
/// checks that compare entries in a relative sense.
pub fn random_dense_triplet(rng: &mut SplitMix64, m: usize, orders: f64) -> TripletRepresentation {
    let offdiag: Vec<f64> = (0..m * m - m).map(|_| -rng.magnitude(orders)).collect();
    let w: Vec<f64> = (0..m).map(|_| rng.magnitude(orders)).collect();
    TripletRepresentation::new(m, offdiag, vec![1.0; m], w, Side::Right)
        .expect("generated certificate is valid")
}

pub fn two_state_model() -> FluidQueueModel {
    fluidq::builtin::two_state()
}
