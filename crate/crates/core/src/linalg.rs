use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Inner matrices whose 2-norm condition number exceeds this are refused.
pub const MAX_CONDITION: f64 = 1e12;

/// 2-norm condition number from the singular values.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse of `a` together with its condition number.
pub fn checked_inverse(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let condition = condition_number(a);
    if condition.is_nan() || condition > MAX_CONDITION {
        return Err(Error::IllConditioned { condition });
    }
    let inv = a
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::IllConditioned { condition })?;
    Ok((inv, condition))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refuses_singular() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(checked_inverse(&a), Err(Error::IllConditioned { .. })));
        let b = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let (inv, cond) = checked_inverse(&b).unwrap();
        assert!((cond - 2.0).abs() < 1e-14);
        assert!((inv[(1, 1)] - 0.25).abs() < 1e-16);
    }
}
