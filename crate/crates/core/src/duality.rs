//! Tests and estimators induced by a confidence ball.

use crate::ball::{contains, ConfidenceBall};
use crate::error::{invalid, Result};
use crate::sequence::Ellipsoid;

/// Point null `θ₁` against alternatives farther than `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestProblem {
    theta1: Vec<f64>,
    eps: f64,
    model: Ellipsoid,
}

impl TestProblem {
    pub fn new(theta1: Vec<f64>, eps: f64, model: Ellipsoid) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return invalid(format!("separation must be positive, got {eps}"));
        }
        if !model.contains(&theta1) {
            return invalid("null point lies outside the model");
        }
        Ok(Self { theta1, eps, model })
    }

    pub fn theta1(&self) -> &[f64] {
        &self.theta1
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn model(&self) -> &Ellipsoid {
        &self.model
    }
}

fn distance(x: &[f64], y: &[f64]) -> f64 {
    let len = x.len().max(y.len());
    (0..len)
        .map(|i| {
            let d = x.get(i).copied().unwrap_or(0.0) - y.get(i).copied().unwrap_or(0.0);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// `true` (φ = 1) iff the ball lies strictly inside the `eps`-ball around
/// `θ₁`, i.e. the far alternatives are rejected. Ties decide `false`.
pub fn confset_to_test(ball: &ConfidenceBall, problem: &TestProblem) -> bool {
    distance(&ball.center, &problem.theta1) + ball.radius < problem.eps
}

#[derive(Debug, Clone, PartialEq)]
pub struct InducedEstimate {
    pub point: Vec<f64>,
    /// Whether the point itself satisfies the membership predicate.
    pub center_in_set: bool,
    /// The set is known to be empty: a zero-radius ball whose center fails
    /// membership.
    pub empty: bool,
}

/// The ball's center, flagged when the set is empty.
pub fn confset_to_estimator(ball: &ConfidenceBall) -> InducedEstimate {
    let center_in_set = contains(ball, &ball.center);
    InducedEstimate {
        point: ball.center.clone(),
        center_in_set,
        empty: ball.radius == 0.0 && !center_in_set,
    }
}

/// `max(n^{−β₁/(2β₁+1)}, n^{−β/(2β+1/2)})`; `β = 0` gives order one.
pub fn floor_rate(beta: f64, beta1: f64, n: usize) -> f64 {
    let n = n as f64;
    n.powf(-beta1 / (2.0 * beta1 + 1.0)).max(n.powf(-beta / (2.0 * beta + 0.5)))
}

/// Checks `submodel ⊂ model`.
pub fn check_nesting(model: &Ellipsoid, submodel: &Ellipsoid) -> Result<()> {
    if submodel.is_nested_in(model) {
        Ok(())
    } else {
        invalid(format!(
            "submodel S({}, {}) is not nested in S({}, {})",
            submodel.beta(),
            submodel.radius(),
            model.beta(),
            model.radius()
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::NormEstimate;

    fn ball(center: Vec<f64>, radius: f64) -> ConfidenceBall {
        ConfidenceBall {
            center,
            radius,
            k: 1,
            bias: 0.0,
            z: 1.0,
            estimate: NormEstimate {
                r: -1.0,
                a: 1e-6,
                b: 1e-3,
                c: 0.0,
                c0: 0.0,
                k: 1,
                n: 100,
            },
            model: Ellipsoid::new(1.0, 1.0).unwrap(),
            floor_applied: false,
            sigma2: Some(1.0),
        }
    }

    #[test]
    fn test_decisions() {
        let model = Ellipsoid::new(1.0, 1.0).unwrap();
        let p = TestProblem::new(vec![0.1], 0.5, model).unwrap();
        assert!(confset_to_test(&ball(vec![0.1], 0.1), &p));
        assert!(!confset_to_test(&ball(vec![0.1], 0.5), &p));
        assert!(!confset_to_test(&ball(vec![0.1], 0.7), &p));
        assert!(TestProblem::new(vec![2.0], 0.5, model).is_err());
        assert!(TestProblem::new(vec![0.0], 0.0, model).is_err());
    }

    #[test]
    fn estimator_is_center() {
        let b = ball(vec![0.2, 0.1], 0.0);
        let e = confset_to_estimator(&b);
        assert_eq!(e.point, b.center);
        assert!(!e.center_in_set && e.empty);
    }

    #[test]
    fn floor_rates() {
        let n = 4096;
        assert!((floor_rate(1.0, 1.5, n) - (n as f64).powf(-0.375)).abs() < 1e-15);
        assert!((floor_rate(0.5, 0.75, n) - (n as f64).powf(-0.3)).abs() < 1e-15);
        assert_eq!(floor_rate(0.0, 1.0, n), 1.0);
    }

    #[test]
    fn nesting() {
        let m = Ellipsoid::new(1.0, 1.0).unwrap();
        assert!(check_nesting(&m, &Ellipsoid::new(2.0, 0.5).unwrap()).is_ok());
        assert!(check_nesting(&m, &Ellipsoid::new(0.5, 0.5).unwrap()).is_err());
    }
}
