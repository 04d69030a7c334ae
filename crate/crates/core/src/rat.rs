//! Exact rationals as strings: `"p"` or `"p/q"`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::error::Error;
use crate::Result;

pub fn to_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn from_str(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let parse_int = |t: &str| -> Result<BigInt> {
        t.trim().parse::<BigInt>().map_err(|e| Error::Parse(format!("bad rational `{s}`: {e}")))
    };
    match s.split_once('/') {
        Some((p, q)) => {
            let denom = parse_int(q)?;
            if denom == BigInt::from(0) {
                return Err(Error::Parse(format!("zero denominator in `{s}`")));
            }
            Ok(BigRational::new(parse_int(p)?, denom))
        }
        None => Ok(BigRational::from(parse_int(s)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn string_roundtrip() {
        for text in ["0", "-4", "3/2", "-7/5"] {
            let r = from_str(text).unwrap();
            assert_eq!(to_string(&r), text);
        }
        assert_eq!(to_string(&from_str(" 6/4 ").unwrap()), "3/2");
        assert!(from_str("1/0").is_err());
        assert!(from_str("x").is_err());
    }
}
