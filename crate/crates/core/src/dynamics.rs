//! Ackermann-steering car model and fixed-step RK4 propagation under
//! piecewise-constant controls.
//!
//! State is (x, y, theta) with theta normalized to (-pi, pi]; the model is
//!   x' = v cos(theta),  y' = v sin(theta),  theta' = (v / L) tan(delta).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Point;

/// Normalize an angle to (-pi, pi].
pub fn normalize_angle(theta: f64) -> f64 {
    use std::f64::consts::PI;
    let mut t = theta % (2.0 * PI);
    if t <= -PI {
        t += 2.0 * PI;
    } else if t > PI {
        t -= 2.0 * PI;
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl CarState {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        CarState { x, y, theta: normalize_angle(theta) }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }

    /// State as a vector for predicate evaluation: [x, y, theta].
    pub fn as_vec(&self) -> [f64; 3] {
        [self.x, self.y, self.theta]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarControl {
    /// Linear velocity in m/s.
    pub v: f64,
    /// Steering angle in radians.
    pub delta: f64,
}

/// Dynamics parameters: wheelbase, velocity bounds, steering limit, and the
/// integrator step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsParams {
    pub wheelbase: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub delta_max: f64,
    pub dt: f64,
}

/// Right-hand side of the Ackermann model.
pub fn derivative(state: &CarState, u: &CarControl, wheelbase: f64) -> (f64, f64, f64) {
    (
        u.v * state.theta.cos(),
        u.v * state.theta.sin(),
        u.v / wheelbase * u.delta.tan(),
    )
}

/// States at integrator substeps, endpoint inclusive. The first entry is
/// (0, start); times advance by `dt` with a shorter final step if `duration`
/// is not a multiple of `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    pub steps: Vec<(f64, CarState)>,
}

impl PropagationResult {
    pub fn final_state(&self) -> CarState {
        self.steps.last().expect("propagation has at least the start entry").1
    }

    pub fn duration(&self) -> f64 {
        self.steps.last().map(|(t, _)| *t).unwrap_or(0.0)
    }
}

fn rk4_step(state: &CarState, u: &CarControl, h: f64, wheelbase: f64) -> CarState {
    let k1 = derivative(state, u, wheelbase);
    let mid1 = CarState {
        x: state.x + 0.5 * h * k1.0,
        y: state.y + 0.5 * h * k1.1,
        theta: state.theta + 0.5 * h * k1.2,
    };
    let k2 = derivative(&mid1, u, wheelbase);
    let mid2 = CarState {
        x: state.x + 0.5 * h * k2.0,
        y: state.y + 0.5 * h * k2.1,
        theta: state.theta + 0.5 * h * k2.2,
    };
    let k3 = derivative(&mid2, u, wheelbase);
    let end = CarState {
        x: state.x + h * k3.0,
        y: state.y + h * k3.1,
        theta: state.theta + h * k3.2,
    };
    let k4 = derivative(&end, u, wheelbase);
    CarState::new(
        state.x + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        state.y + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        state.theta + h / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2),
    )
}

/// Fixed-step RK4 integration of the model under a constant control.
pub fn propagate(
    start: &CarState,
    u: &CarControl,
    duration: f64,
    dt: f64,
    wheelbase: f64,
) -> PropagationResult {
    assert!(duration >= 0.0, "duration must be non-negative");
    assert!(dt > 0.0, "dt must be positive");
    let mut steps = vec![(0.0, *start)];
    let mut t = 0.0;
    let mut state = *start;
    // Substep count fixed up front so times are reproducible sums.
    let full_steps = (duration / dt).floor() as u64;
    for k in 1..=full_steps {
        state = rk4_step(&state, u, dt, wheelbase);
        t = k as f64 * dt;
        steps.push((t, state));
    }
    let remainder = duration - t;
    if remainder > 1e-12 {
        state = rk4_step(&state, u, remainder, wheelbase);
        steps.push((duration, state));
    }
    PropagationResult { steps }
}

/// Uniform control sample over the box [v_min, v_max] x [-delta_max, delta_max].
pub fn sample_control<R: Rng>(rng: &mut R, params: &DynamicsParams) -> CarControl {
    let v = if params.v_min == params.v_max {
        params.v_min
    } else {
        rng.random_range(params.v_min..=params.v_max)
    };
    let delta = rng.random_range(-params.delta_max..=params.delta_max);
    CarControl { v, delta }
}

/// Uniform duration sample over [0, t_max].
pub fn sample_duration<R: Rng>(rng: &mut R, t_max: f64) -> f64 {
    rng.random_range(0.0..=t_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const L: f64 = 0.3;

    /// Closed-form circular arc from the origin with heading 0:
    /// omega = v tan(delta) / L, radius = v / omega.
    fn arc_state(v: f64, delta: f64, wheelbase: f64, t: f64) -> CarState {
        let omega = v * delta.tan() / wheelbase;
        let r = v / omega;
        CarState::new(r * (omega * t).sin(), r * (1.0 - (omega * t).cos()), omega * t)
    }

    #[test]
    fn derivative_matches_model() {
        let u = CarControl { v: 1.0, delta: 0.0 };
        let d = derivative(&CarState::new(0.0, 0.0, 0.0), &u, L);
        assert_eq!(d, (1.0, 0.0, 0.0));

        let d = derivative(&CarState::new(0.0, 0.0, std::f64::consts::FRAC_PI_2), &u, L);
        assert!(d.0.abs() < 1e-15);
        assert!((d.1 - 1.0).abs() < 1e-15);

        let u = CarControl { v: 1.0, delta: std::f64::consts::FRAC_PI_4 };
        let d = derivative(&CarState::new(0.0, 0.0, 0.0), &u, 1.0);
        assert!((d.2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_duration_returns_start_only() {
        let start = CarState::new(1.0, 2.0, 0.5);
        let res = propagate(&start, &CarControl { v: 1.0, delta: 0.1 }, 0.0, 0.05, L);
        assert_eq!(res.steps, vec![(0.0, start)]);
    }

    #[test]
    fn straight_line_is_exact() {
        let res = propagate(
            &CarState::new(0.0, 0.0, 0.0),
            &CarControl { v: 2.0, delta: 0.0 },
            3.0,
            0.05,
            L,
        );
        let end = res.final_state();
        assert!((end.x - 6.0).abs() < 1e-12);
        assert!(end.y.abs() < 1e-12);
        assert!(end.theta.abs() < 1e-12);
    }

    #[test]
    fn arc_matches_closed_form() {
        let (v, delta) = (1.0, 0.3);
        let res = propagate(&CarState::new(0.0, 0.0, 0.0), &CarControl { v, delta }, 1.0, 0.05, L);
        let end = res.final_state();
        let exact = arc_state(v, delta, L, 1.0);
        let err = ((end.x - exact.x).powi(2) + (end.y - exact.y).powi(2)).sqrt();
        assert!(err < 1e-6, "end-state error {err}");
    }

    #[test]
    fn rk4_is_fourth_order() {
        let (v, delta) = (1.0, 0.3);
        let exact = arc_state(v, delta, L, 1.0);
        let err_at = |dt: f64| {
            let end = propagate(&CarState::new(0.0, 0.0, 0.0), &CarControl { v, delta }, 1.0, dt, L)
                .final_state();
            ((end.x - exact.x).powi(2) + (end.y - exact.y).powi(2) + (end.theta - exact.theta).powi(2))
                .sqrt()
        };
        let (e1, e2, e3) = (err_at(0.1), err_at(0.05), err_at(0.025));
        assert!(e1 / e2 >= 8.0, "halving 0.1 -> 0.05 gained only {}x", e1 / e2);
        assert!(e2 / e3 >= 8.0, "halving 0.05 -> 0.025 gained only {}x", e2 / e3);
    }

    #[test]
    fn propagation_prefixes_agree() {
        let start = CarState::new(0.0, 0.0, 0.2);
        let u = CarControl { v: 1.5, delta: -0.2 };
        let short = propagate(&start, &u, 1.0, 0.05, L);
        let long = propagate(&start, &u, 1.05, 0.05, L);
        assert_eq!(&long.steps[..short.steps.len()], &short.steps[..]);
    }

    #[test]
    fn control_sampling_respects_bounds_and_seed() {
        let params = DynamicsParams { wheelbase: L, v_min: 1.0, v_max: 1.0, delta_max: 0.5, dt: 0.05 };
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let u = sample_control(&mut rng, &params);
            assert_eq!(u.v, 1.0);
            assert!(u.delta.abs() <= 0.5);
        }

        let mut a = ChaCha8Rng::seed_from_u64(99);
        let mut b = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            assert_eq!(sample_control(&mut a, &params), sample_control(&mut b, &params));
            assert_eq!(sample_duration(&mut a, 1.0), sample_duration(&mut b, 1.0));
        }
    }

    #[test]
    fn delta_samples_center_on_zero() {
        let params = DynamicsParams { wheelbase: L, v_min: 0.0, v_max: 2.0, delta_max: 0.5, dt: 0.05 };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| sample_control(&mut rng, &params).delta).sum::<f64>() / n as f64;
        // Uniform on [-0.5, 0.5]: sigma_mean = 0.5/sqrt(3)/sqrt(n).
        let three_sigma = 3.0 * 0.5 / 3f64.sqrt() / (n as f64).sqrt();
        assert!(mean.abs() < three_sigma, "mean {mean} outside 3 sigma {three_sigma}");
    }

    #[test]
    fn angle_normalization() {
        use std::f64::consts::PI;
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(-PI) - PI).abs() < 1e-12);
        assert_eq!(normalize_angle(0.3), 0.3);
    }
}
