//! Exact decimal emission of binary floats and outward-rounded parsing.
//!
//! Every finite `f64` is a dyadic rational with a terminating decimal
//! expansion, so emitting that expansion in full makes `parse(emit(x)) == x`
//! while still letting the parser round arbitrary user input outward.

use std::cmp::Ordering;

use crate::error::Error;
use crate::interval::{next_down, next_up, Interval};

/// A decimal number as sign, significant digits (no leading/trailing zeros)
/// and the power of ten of the first digit.
#[derive(Debug, PartialEq, Eq)]
struct Decimal {
    neg: bool,
    digits: Vec<u8>,
    exp: i64,
}

impl Decimal {
    fn is_zero(&self) -> bool {
        self.digits.is_empty()
    }

    fn parse(s: &str) -> Option<Decimal> {
        let s = s.trim();
        let (neg, rest) = match s.as_bytes().first()? {
            b'-' => (true, &s[1..]),
            b'+' => (false, &s[1..]),
            _ => (false, s),
        };
        let (mant, e10) = match rest.find(['e', 'E']) {
            Some(i) => (&rest[..i], rest[i + 1..].parse::<i64>().ok()?),
            None => (rest, 0),
        };
        let (int, frac) = match mant.find('.') {
            Some(i) => (&mant[..i], &mant[i + 1..]),
            None => (mant, ""),
        };
        if int.is_empty() && frac.is_empty() {
            return None;
        }
        if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
            return None;
        }
        let all: Vec<u8> = int.bytes().chain(frac.bytes()).map(|b| b - b'0').collect();
        let lead = all.iter().position(|&d| d != 0);
        let Some(lead) = lead else {
            return Some(Decimal { neg, digits: Vec::new(), exp: 0 });
        };
        let trail = all.iter().rposition(|&d| d != 0).unwrap();
        let digits = all[lead..=trail].to_vec();
        let exp = int.len() as i64 - 1 - lead as i64 + e10;
        Some(Decimal { neg, digits, exp })
    }

    /// Compare magnitudes.
    fn cmp_abs(&self, other: &Decimal) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        self.exp.cmp(&other.exp).then_with(|| self.digits.cmp(&other.digits))
    }
}

/// The exact decimal expansion of a finite float, in scientific notation.
pub fn exact_decimal(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    // 767 significant digits suffice for every f64; Rust prints them exactly.
    let s = format!("{x:.767e}");
    let (mant, exp) = s.split_once('e').unwrap();
    let mant = if mant.contains('.') { mant.trim_end_matches('0').trim_end_matches('.') } else { mant };
    format!("{mant}e{exp}")
}

/// Smallest interval of floats containing the decimal number `s`.
pub fn parse_outward(s: &str) -> Result<Interval, Error> {
    let t = s.trim();
    match t {
        "inf" | "+inf" => return Ok(Interval::point(f64::INFINITY)),
        "-inf" => return Ok(Interval::point(f64::NEG_INFINITY)),
        _ => {}
    }
    let dec = Decimal::parse(t).ok_or_else(|| Error::Parse(format!("not a decimal number: {s:?}")))?;
    let x: f64 = t.parse().map_err(|_| Error::Parse(format!("not a decimal number: {s:?}")))?;
    if dec.is_zero() {
        return Ok(Interval::point(0.0));
    }
    if x.is_infinite() {
        // Beyond the largest float: enclose with [MAX, inf] on the matching side.
        return Ok(if x > 0.0 { Interval::new(f64::MAX, f64::INFINITY) } else { Interval::new(f64::NEG_INFINITY, f64::MIN) });
    }
    let exact = Decimal::parse(&exact_decimal(x.abs())).unwrap();
    let ord = if x == 0.0 { Ordering::Less } else { exact.cmp_abs(&Decimal { neg: false, ..dec }) };
    // ord compares |x| with |s|.
    let (lo, hi) = match (ord, dec.neg) {
        (Ordering::Equal, _) => (x, x),
        (Ordering::Less, false) => (x, next_up(x)),
        (Ordering::Greater, false) => (next_down(x), x),
        (Ordering::Less, true) => (next_down(x), x),
        (Ordering::Greater, true) => (x, next_up(x)),
    };
    Ok(Interval::new(lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tenth_rounds_outward() {
        let r = parse_outward("0.1").unwrap();
        assert_eq!(r.hi(), next_up(r.lo()));
        assert!(r.contains(0.1));
        // 0.1f64 is slightly above 1/10, so it is the upper end.
        assert_eq!(r.hi(), 0.1);
    }

    #[test]
    fn negative_tenth() {
        let r = parse_outward("-0.1").unwrap();
        assert_eq!(r.lo(), -0.1);
        assert_eq!(r.hi(), next_up(-0.1));
    }

    #[test]
    fn exact_values_are_points() {
        for s in ["1", "0.5", "-2.25", "1e3", "92", "129", "0.0", "1024e-10"] {
            let r = parse_outward(s).unwrap();
            let exact = s != "1024e-10";
            assert_eq!(r.is_point(), exact, "{s}");
        }
    }

    #[test]
    fn emit_then_parse_is_identity() {
        for &x in &[0.1, -1.0 / 3.0, 1e-300, 5e-324, 123456.789, f64::MAX, std::f64::consts::PI] {
            let s = exact_decimal(x);
            let r = parse_outward(&s).unwrap();
            assert!(r.is_point(), "{s}");
            assert_eq!(r.lo(), x);
        }
    }

    #[test]
    fn exact_decimal_of_small_values() {
        assert_eq!(exact_decimal(0.5), "5e-1");
        assert_eq!(exact_decimal(-3.0), "-3e0");
        assert!(exact_decimal(0.1).starts_with("1.000000000000000055511151231257827"));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_outward("abc").is_err());
        assert!(parse_outward("1.2.3").is_err());
        assert!(parse_outward("").is_err());
    }

    #[test]
    fn underflow_encloses() {
        let r = parse_outward("1e-400").unwrap();
        assert!(r.lo() >= 0.0 && r.hi() > 0.0);
    }
}
