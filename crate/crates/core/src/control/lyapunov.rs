//! Ultimate-boundedness envelope for the backstepping error coordinates.

use crate::Scalar;

/// `V0·e^{−λt} + (γ/λ)(1 − e^{−λt})`.
pub fn lyapunov_envelope<T: Scalar>(v0: T, lambda: T, gamma: T, t: T) -> T {
    let decay = (-lambda * t).exp();
    v0 * decay + gamma / lambda * (T::one() - decay)
}

/// `V = ½(z1² + z2² + z3²)`.
pub fn lyapunov_value<T: Scalar>(z: [T; 3]) -> T {
    (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]) / T::lit(2.0)
}

/// Decay rate guaranteed by gains `k`: `min_i k_i − ½`.
pub fn decay_rate<T: Scalar>(k: [T; 3]) -> T {
    k[0].min(k[1]).min(k[2]) - T::lit(0.5)
}
