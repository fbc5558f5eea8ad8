//! Flux functions f(x, u) for the supported conservation laws.
//!
//! The convective term is evaluated in chain-rule form: for a linear
//! advective flux f = v(x) u it is v . grad(u) + div(v) u, and for an
//! autonomous flux f(u) it is f'(u) . grad(u).

/// Closed set of flux functions used by the benchmark problems.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Flux {
    /// f(x, u) = v u with constant velocity v.
    ConstantAdvection { velocity: [f64; 2] },
    /// f(x, u) = v(x) u with the divergence-free rigid rotation
    /// v(x, y) = omega * (cy - y, x - cx).
    RigidRotation { center: [f64; 2], angular: f64 },
    /// Inviscid Burgers flux f(u) = u^2/2 (x component only).
    Burgers,
    /// Nonconvex flux f(u) = (sin u, cos u).
    Kpp,
}

impl Flux {
    /// Flux vector at (x, u).
    pub fn value(&self, x: [f64; 2], u: f64) -> [f64; 2] {
        match *self {
            Flux::ConstantAdvection { velocity } => [velocity[0] * u, velocity[1] * u],
            Flux::RigidRotation { center, angular } => {
                [angular * (center[1] - x[1]) * u, angular * (x[0] - center[0]) * u]
            }
            Flux::Burgers => [0.5 * u * u, 0.0],
            Flux::Kpp => [u.sin(), u.cos()],
        }
    }

    /// Derivative f'(x, u) = df/du.
    pub fn derivative(&self, x: [f64; 2], u: f64) -> [f64; 2] {
        match *self {
            Flux::ConstantAdvection { velocity } => velocity,
            Flux::RigidRotation { center, angular } => {
                [angular * (center[1] - x[1]), angular * (x[0] - center[0])]
            }
            Flux::Burgers => [u, 0.0],
            Flux::Kpp => [u.cos(), -u.sin()],
        }
    }

    /// div f(x, u_h) at a point, given the solution value and gradient.
    #[inline]
    pub fn divergence(&self, x: [f64; 2], u: f64, grad: [f64; 2]) -> f64 {
        // All supported velocity fields are divergence-free, so the
        // advective variants reduce to v . grad(u) as well.
        let d = self.derivative(x, u);
        d[0] * grad[0] + d[1] * grad[1]
    }

    /// |f'(x, u)|, the local characteristic speed.
    #[inline]
    pub fn wave_speed(&self, x: [f64; 2], u: f64) -> f64 {
        match *self {
            Flux::Kpp => 1.0, // |(cos u, -sin u)| = 1 for every u
            _ => {
                let d = self.derivative(x, u);
                (d[0] * d[0] + d[1] * d[1]).sqrt()
            }
        }
    }

    /// Outward-normal characteristic speed f'(x, u) . n.
    #[inline]
    pub fn normal_speed(&self, x: [f64; 2], u: f64, normal: [f64; 2]) -> f64 {
        let d = self.derivative(x, u);
        d[0] * normal[0] + d[1] * normal[1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_consistency_finite_differences() {
        let fluxes = [
            Flux::ConstantAdvection { velocity: [1.0, 0.0] },
            Flux::RigidRotation { center: [0.5, 0.5], angular: 2.0 * std::f64::consts::PI },
            Flux::Burgers,
            Flux::Kpp,
        ];
        let samples = [
            ([0.13, 0.77], 0.4),
            ([0.9, 0.2], -1.3),
            ([0.5, 0.51], 7.0),
            ([0.01, 0.99], 0.0),
        ];
        let eps = 1e-6;
        for flux in fluxes {
            for &(x, u) in &samples {
                let d = flux.derivative(x, u);
                let fp = flux.value(x, u + eps);
                let fm = flux.value(x, u - eps);
                for a in 0..2 {
                    let fd = (fp[a] - fm[a]) / (2.0 * eps);
                    let scale = d[a].abs().max(1.0);
                    assert!(
                        (fd - d[a]).abs() <= 1e-6 * scale,
                        "{flux:?} axis {a}: fd {fd} vs {}", d[a]
                    );
                }
            }
        }
    }

    #[test]
    fn kpp_speed_is_one() {
        for u in [-3.0, 0.0, 0.785, 11.0] {
            assert!((Flux::Kpp.wave_speed([0.0, 0.0], u) - 1.0).abs() < 1e-15);
        }
    }
}
