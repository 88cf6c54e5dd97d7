//! Exact rational arithmetic for supports, confidences, rates and precisions.

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type Rational = Ratio<i64>;

pub fn ratio(num: usize, den: usize) -> Rational {
    Rational::new(num as i64, den as i64)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Arithmetic mean, `None` for an empty input.
pub fn mean<'a, I>(values: I) -> Option<Rational>
where
    I: IntoIterator<Item = &'a Rational>,
{
    let mut sum = Rational::zero();
    let mut n = 0i64;
    for v in values {
        sum += *v;
        n += 1;
    }
    (n > 0).then(|| sum / n)
}

/// Rational rendered with a fixed number of decimals, for CSV and tables.
pub fn fmt_decimal(r: &Rational, decimals: usize) -> String {
    format!("{:.*}", decimals, to_f64(r))
}

#[derive(Serialize, Deserialize)]
struct Repr {
    num: i64,
    den: i64,
}

/// `#[serde(with = "crate::rational::serde_exact")]` — `{"num":..,"den":..}`.
pub mod serde_exact {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        Repr {
            num: *r.numer(),
            den: *r.denom(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let repr = Repr::deserialize(d)?;
        if repr.den == 0 {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(Rational::new(repr.num, repr.den))
    }
}

pub mod serde_exact_opt {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        r.map(|r| Repr {
            num: *r.numer(),
            den: *r.denom(),
        })
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        match Option::<Repr>::deserialize(d)? {
            None => Ok(None),
            Some(repr) if repr.den == 0 => Err(serde::de::Error::custom("zero denominator")),
            Some(repr) => Ok(Some(Rational::new(repr.num, repr.den))),
        }
    }
}
