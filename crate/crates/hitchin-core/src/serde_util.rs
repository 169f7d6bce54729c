//! Serde helpers: complex numbers travel as `[re, im]` pairs in all JSON
//! interfaces of this crate.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub mod complex_pair {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Complex64, serializer: S) -> Result<S::Ok, S::Error> {
        [value.re, value.im].serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(deserializer)?;
        Ok(Complex64::new(re, im))
    }
}

pub mod complex_pair_vec {
    use super::*;

    pub fn serialize<S: Serializer>(
        values: &[Complex64],
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = values.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<Vec<Complex64>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(deserializer)?;
        Ok(pairs
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect())
    }
}
