//! Scalar abstraction shared by the model, the LP/ILP backend and the
//! separation routines.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type usable for costs, constraint coefficients and LP values.
///
/// Tolerances are tied to the type: `f64` runs at the tight regime used
/// throughout the test fixtures, `f32` gets looser values matching its
/// precision.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Constraint feasibility tolerance.
    const FEASIBILITY_TOL: f64;
    /// Distance to an integer below which an LP value counts as integral.
    const INTEGRALITY_TOL: f64;
    /// Reduced-cost threshold for simplex optimality.
    const OPTIMALITY_TOL: f64;
    /// Smallest magnitude accepted as a simplex pivot element.
    const PIVOT_TOL: f64;
    /// Absolute gap below which branch-and-bound prunes a node.
    const GAP_TOL: f64;

    #[inline]
    fn feasibility_tol() -> Self {
        Self::lit(Self::FEASIBILITY_TOL)
    }

    #[inline]
    fn integrality_tol() -> Self {
        Self::lit(Self::INTEGRALITY_TOL)
    }

    #[inline]
    fn optimality_tol() -> Self {
        Self::lit(Self::OPTIMALITY_TOL)
    }

    #[inline]
    fn pivot_tol() -> Self {
        Self::lit(Self::PIVOT_TOL)
    }

    #[inline]
    fn gap_tol() -> Self {
        Self::lit(Self::GAP_TOL)
    }

    /// Converts an `f64` literal. Panics only for values the type cannot
    /// represent at all, which never happens for finite inputs.
    #[inline]
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("finite literal fits scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Bit pattern used for hashing canonical constraints; folds `-0.0`
    /// into `0.0`.
    #[inline]
    fn hash_bits(self) -> u64 {
        let v = self.as_f64();
        if v == 0.0 {
            0
        } else {
            v.to_bits()
        }
    }
}

impl Scalar for f64 {
    const FEASIBILITY_TOL: f64 = 1e-9;
    const INTEGRALITY_TOL: f64 = 1e-6;
    const OPTIMALITY_TOL: f64 = 1e-9;
    const PIVOT_TOL: f64 = 1e-9;
    const GAP_TOL: f64 = 1e-9;
}

impl Scalar for f32 {
    const FEASIBILITY_TOL: f64 = 1e-4;
    const INTEGRALITY_TOL: f64 = 1e-3;
    const OPTIMALITY_TOL: f64 = 1e-5;
    const PIVOT_TOL: f64 = 1e-5;
    const GAP_TOL: f64 = 1e-4;
}

/// Formats a value with nine significant digits, dropping trailing zeros.
pub fn format_sig(value: f64) -> String {
    if value == 0.0 || !value.is_finite() {
        return if value.is_nan() {
            "nan".to_owned()
        } else if value.is_infinite() {
            if value > 0.0 { "inf" } else { "-inf" }.to_owned()
        } else {
            "0".to_owned()
        };
    }
    let sci = format!("{:.8e}", value);
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    // digits holds exactly nine significant digits, decimal point after the first
    let point = exp + 1;
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if point <= 0 {
        out.push_str("0.");
        for _ in 0..(-point) {
            out.push('0');
        }
        out.push_str(&digits);
    } else if point as usize >= digits.len() {
        out.push_str(&digits);
        for _ in 0..(point as usize - digits.len()) {
            out.push('0');
        }
    } else {
        out.push_str(&digits[..point as usize]);
        out.push('.');
        out.push_str(&digits[point as usize..]);
    }
    if out.contains('.') {
        while out.ends_with('0') {
            out.pop();
        }
        if out.ends_with('.') {
            out.pop();
        }
    }
    if out == "-0" {
        out = "0".to_owned();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig_formatting() {
        assert_eq!(format_sig(-3.0), "-3");
        assert_eq!(format_sig(0.5), "0.5");
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(1234567891234.0), "1234567890000");
        assert_eq!(format_sig(1.0 / 3.0), "0.333333333");
        assert_eq!(format_sig(-0.000123), "-0.000123");
        assert_eq!(format_sig(2.5e-10), "0.00000000025");
    }

    #[test]
    fn tolerances_per_type() {
        assert_eq!(f64::feasibility_tol(), 1e-9);
        assert!(f32::feasibility_tol() > 1e-6);
        assert_eq!((-0.0f64).hash_bits(), 0.0f64.hash_bits());
    }
}
