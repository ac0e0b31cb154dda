/// Result of the pointwise maximization over the arrival intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaMax {
    pub theta: f64,
    /// `A theta + k B theta^gamma` at the maximizer.
    pub value: f64,
}

/// Maximizes `M(theta) = a theta + k b theta^gamma` over `[0, u_bar]`.
///
/// `a` collects everything multiplying `theta` in the discrete bracket and
/// `b` everything multiplying the catastrophe rate; the `d b` part does not
/// depend on `theta` and is left to the caller. For `gamma > 1` the function
/// is concave when `k b < 0` (stationary point, clamped) and convex when
/// `k b > 0` (an endpoint wins). Ties resolve to the smaller intensity.
pub fn maximize_theta(a: f64, b: f64, k: f64, gamma: f64, u_bar: f64) -> ThetaMax {
    let kb = k * b;
    let value = |theta: f64| a * theta + kb * theta.powf(gamma);
    if u_bar <= 0.0 {
        return ThetaMax { theta: 0.0, value: 0.0 };
    }
    let theta = if kb == 0.0 {
        if a > 0.0 {
            u_bar
        } else {
            0.0
        }
    } else if kb < 0.0 {
        if a <= 0.0 {
            0.0
        } else {
            (a / (-gamma * kb)).powf(1.0 / (gamma - 1.0)).min(u_bar)
        }
    } else if value(u_bar) > 0.0 {
        u_bar
    } else {
        0.0
    };
    ThetaMax {
        theta,
        value: if theta == 0.0 { 0.0 } else { value(theta) },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamped_interior_point() {
        // M = theta - 0.002 theta^2 peaks at 250, beyond u_bar = 1.
        let r = maximize_theta(1.0, -1.0, 0.002, 2.0, 1.0);
        assert_eq!(r.theta, 1.0);
        assert!((r.value - 0.998).abs() < 1e-15);
        let r = maximize_theta(1.0, -1.0, 0.002, 2.0, 1000.0);
        assert!((r.theta - 250.0).abs() < 1e-9);
    }

    #[test]
    fn nonincreasing_objective_stays_idle() {
        for (a, b) in [(0.0, 0.0), (-1.0, -3.0), (0.0, -2.0), (-0.5, 0.0)] {
            assert_eq!(maximize_theta(a, b, 0.002, 2.0, 1.0).theta, 0.0);
        }
    }

    #[test]
    fn convex_case_picks_an_endpoint() {
        assert_eq!(maximize_theta(-0.001, 1.0, 0.002, 2.0, 1.0).theta, 1.0);
        assert_eq!(maximize_theta(-0.01, 1.0, 0.002, 2.0, 1.0).theta, 0.0);
        // Exact tie at the upper endpoint resolves to zero.
        assert_eq!(maximize_theta(-0.002, 1.0, 0.002, 2.0, 1.0).theta, 0.0);
    }
}
