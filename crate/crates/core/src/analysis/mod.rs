//! Measurements: norms, errors against manufactured solutions, flux-jump
//! residuals, Hölder quotients, mean oscillation and Dini moduli.

pub mod flux;
pub mod holder;
pub mod manufactured;
pub mod norms;
pub mod oscillation;

pub use flux::{flux_jump_residual, FluxJumpReport};
pub use holder::{holder_exact, holder_over_pairs, holder_seminorm, sample_pairs, HolderEstimate, PairSampling, SamplePair};
pub use manufactured::{ExactSolution, ManufacturedSolution};
pub use norms::{data_norms, error_vs_exact, max_gradient_per_subdomain, norms, DataNorms, ErrorNorms, FieldNorms};
pub use oscillation::{
    decay_fit, dini_modulus, mean_oscillation, oscillation_probe, BallRule, Clip, DecayFit, DiniModulus,
    OscillationProbe, PointSampler,
};

/// Observed convergence order between consecutive levels.
pub fn observed_orders(h: &[f64], err: &[f64]) -> alloc::vec::Vec<f64> {
    h.windows(2)
        .zip(err.windows(2))
        .map(|(h, e)| crate::math::ln(e[0] / e[1]) / crate::math::ln(h[0] / h[1]))
        .collect()
}

/// Least-squares slope of `log err` against `log h`.
pub fn fitted_order(h: &[f64], err: &[f64]) -> f64 {
    let xs: alloc::vec::Vec<f64> = h.iter().map(|v| crate::math::ln(*v)).collect();
    let ys: alloc::vec::Vec<f64> = err.iter().map(|v| crate::math::ln(*v)).collect();
    oscillation::least_squares(&xs, &ys).0
}
