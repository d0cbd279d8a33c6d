//! Number formatting shared by every text output: doubles are written with
//! 17 significant digits so that parsing them back is exact.

use serde_json::{Number, Value};

/// Scientific notation with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON number carrying 17 significant digits; `null` for non-finite input.
pub fn json_f64(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    fmt17(x)
        .parse::<Number>()
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

pub fn json_opt_f64(x: Option<f64>) -> Value {
    x.map(json_f64).unwrap_or(Value::Null)
}

/// CSV cell: empty for `None`.
pub fn csv_cell(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn seventeen_digits_round_trip(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let s = fmt17(x);
            prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
            let v = json_f64(x);
            let text = serde_json::to_string(&v).unwrap();
            let back: f64 = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn non_finite_is_null() {
        assert_eq!(json_f64(f64::NAN), Value::Null);
        assert_eq!(csv_cell(None), "");
        assert_eq!(fmt17(-1.0), "-1.0000000000000000e0");
    }
}
