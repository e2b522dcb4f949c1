//! Trigonometric basis of `L₂[0, 1]`.

use std::f64::consts::{SQRT_2, TAU};

use crate::error::{invalid, Result};

/// `e₁ = 1`, `e_{2j} = √2 cos(2πjx)`, `e_{2j+1} = √2 sin(2πjx)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisSpec {
    k_max: usize,
}

impl BasisSpec {
    pub fn trigonometric(k_max: usize) -> Result<Self> {
        if k_max == 0 {
            return invalid("basis needs at least one function");
        }
        Ok(Self { k_max })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }
}

/// Value of the `i`-th basis function (1-based) at `x`.
pub fn basis_eval(spec: &BasisSpec, i: usize, x: f64) -> Result<f64> {
    if i == 0 || i > spec.k_max {
        return invalid(format!("basis index {i} outside 1..={}", spec.k_max));
    }
    if !(0.0..=1.0).contains(&x) {
        return invalid(format!("basis argument {x} outside [0, 1]"));
    }
    Ok(trig(i, x))
}

#[inline]
pub(crate) fn trig(i: usize, x: f64) -> f64 {
    if i == 1 {
        return 1.0;
    }
    let j = (i / 2) as f64;
    // reduce jx modulo 1 before scaling so large frequencies keep accuracy
    let t = TAU * (j * x).fract();
    if i % 2 == 0 {
        SQRT_2 * t.cos()
    } else {
        SQRT_2 * t.sin()
    }
}

/// Writes `e₁(x), …, e_k(x)` into `out`.
pub(crate) fn fill_trig(x: f64, out: &mut [f64]) {
    let k = out.len();
    if k == 0 {
        return;
    }
    out[0] = 1.0;
    let mut i = 2;
    while i <= k {
        let j = (i / 2) as f64;
        let (s, c) = (TAU * (j * x).fract()).sin_cos();
        out[i - 1] = SQRT_2 * c;
        if i < k {
            out[i] = SQRT_2 * s;
        }
        i += 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spot_values() {
        let b = BasisSpec::trigonometric(5).unwrap();
        assert_eq!(basis_eval(&b, 1, 0.37).unwrap(), 1.0);
        assert!((basis_eval(&b, 2, 0.0).unwrap() - SQRT_2).abs() < 1e-15);
        assert!((basis_eval(&b, 3, 0.25).unwrap() - SQRT_2).abs() < 1e-15);
        assert!(basis_eval(&b, 0, 0.5).is_err());
        assert!(basis_eval(&b, 6, 0.5).is_err());
        assert!(basis_eval(&b, 2, 1.5).is_err());
    }

    #[test]
    fn fill_matches_pointwise() {
        let mut buf = vec![0.0; 9];
        fill_trig(0.123, &mut buf);
        for (i, v) in buf.iter().enumerate() {
            assert_eq!(*v, trig(i + 1, 0.123));
        }
    }

    #[test]
    fn orthonormal_under_quadrature() {
        // the rectangle rule with N nodes is exact for trigonometric
        // polynomials of degree < N
        let k = 21;
        let nodes = 256;
        let rows: Vec<Vec<f64>> = (0..nodes)
            .map(|q| {
                let mut v = vec![0.0; k];
                fill_trig(q as f64 / nodes as f64, &mut v);
                v
            })
            .collect();
        for i in 0..k {
            for j in 0..k {
                let g: f64 = rows.iter().map(|r| r[i] * r[j]).sum::<f64>() / nodes as f64;
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((g - target).abs() < 1e-10, "<e{}, e{}> = {g}", i + 1, j + 1);
            }
        }
    }
}
