//! Number formatting shared by every subcommand.

use num_rational::BigRational;
use serde_json::Value;

/// 17 significant digits, in fixed notation for moderate magnitudes and
/// scientific notation otherwise.
pub fn float(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exponent = x.abs().log10().floor() as i32;
    if (-5..17).contains(&exponent) {
        format!("{:.*}", (16 - exponent) as usize, x)
    } else {
        format!("{x:.16e}")
    }
}

/// A value that can appear in either float or exact-rational output.
pub trait Emit {
    fn text(&self) -> String;
    fn json(&self) -> Value;
}

impl Emit for f64 {
    fn text(&self) -> String {
        float(*self)
    }

    fn json(&self) -> Value {
        serde_json::Number::from_f64(*self).map_or(Value::Null, Value::Number)
    }
}

impl Emit for BigRational {
    fn text(&self) -> String {
        self.to_string()
    }

    fn json(&self) -> Value {
        Value::String(self.to_string())
    }
}

pub fn csv_row<I, S>(fields: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    fields
        .into_iter()
        .map(|f| f.as_ref().to_string())
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use nedpca::scalar::parse_rational;

    #[test]
    fn seventeen_digits() {
        assert_eq!(float(1.4f64.ln()), "0.33647223662121289");
        assert_eq!(float(0.5), "0.50000000000000000");
        assert_eq!(float(2.0), "2.0000000000000000");
        assert_eq!(float(1e-9), "1.0000000000000001e-9");
        assert_eq!(float(0.0), "0");
        for x in [0.1, 1.0 / 3.0, 123.456, 7e-7, 6.02e23] {
            assert_eq!(float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn rationals_as_fractions() {
        let q = parse_rational("52/18").unwrap();
        assert_eq!(q.text(), "26/9");
        assert_eq!(q.json(), Value::String("26/9".into()));
    }
}
