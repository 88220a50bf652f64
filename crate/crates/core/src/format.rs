//! JSON persistence for fields and kernels.
//!
//! Numbers are written in scientific notation with 17 significant digits so
//! that every IEEE-754 double survives a write/read cycle bit for bit.

use num_complex::Complex64 as C64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::grid::{Field1D, Field2D, ModeGrid};

/// A double rendered with 17 significant digits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sig17(pub f64);

impl Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(serde::ser::Error::custom(format!("non-finite value {}", self.0)));
        }
        let raw = RawValue::from_string(format!("{:.16e}", self.0))
            .map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Sig17 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        f64::deserialize(d).map(Sig17)
    }
}

pub(crate) fn sig_vec(xs: impl IntoIterator<Item = f64>) -> Vec<Sig17> {
    xs.into_iter().map(Sig17).collect()
}


/// Split row-major complex samples into `re`/`im` row arrays.
pub(crate) fn split_rows(values: &[C64], n_cols: usize) -> (Vec<Vec<Sig17>>, Vec<Vec<Sig17>>) {
    let re = values.chunks(n_cols).map(|r| sig_vec(r.iter().map(|v| v.re))).collect();
    let im = values.chunks(n_cols).map(|r| sig_vec(r.iter().map(|v| v.im))).collect();
    (re, im)
}

pub(crate) fn join_rows(
    re: &[Vec<Sig17>],
    im: &[Vec<Sig17>],
    n_rows: usize,
    n_cols: usize,
) -> Result<Vec<C64>> {
    if re.len() != n_rows || im.len() != n_rows {
        return Err(Error::Format(format!(
            "expected {n_rows} rows, found re={} im={}",
            re.len(),
            im.len()
        )));
    }
    let mut out = Vec::with_capacity(n_rows * n_cols);
    for (r, (row_re, row_im)) in re.iter().zip(im).enumerate() {
        if row_re.len() != n_cols || row_im.len() != n_cols {
            return Err(Error::Format(format!("row {r} does not have {n_cols} columns")));
        }
        out.extend(row_re.iter().zip(row_im).map(|(a, b)| C64::new(a.0, b.0)));
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
pub(crate) struct Field2DRepr {
    pub grid_s: ModeGrid,
    pub grid_i: ModeGrid,
    pub re: Vec<Vec<Sig17>>,
    pub im: Vec<Vec<Sig17>>,
}

impl From<&Field2D> for Field2DRepr {
    fn from(f: &Field2D) -> Self {
        let (re, im) = split_rows(f.values(), f.grid_i().len());
        Field2DRepr { grid_s: *f.grid_s(), grid_i: *f.grid_i(), re, im }
    }
}

impl TryFrom<Field2DRepr> for Field2D {
    type Error = Error;
    fn try_from(r: Field2DRepr) -> Result<Self> {
        let values = join_rows(&r.re, &r.im, r.grid_s.len(), r.grid_i.len())?;
        Field2D::new(r.grid_s, r.grid_i, values)
    }
}

impl Serialize for Field2D {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        Field2DRepr::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Field2D {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Field2D::try_from(Field2DRepr::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
pub(crate) struct Field1DRepr {
    pub grid: ModeGrid,
    pub re: Vec<Sig17>,
    pub im: Vec<Sig17>,
}

impl Serialize for Field1D {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        Field1DRepr {
            grid: *self.grid(),
            re: sig_vec(self.values().iter().map(|v| v.re)),
            im: sig_vec(self.values().iter().map(|v| v.im)),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Field1D {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = Field1DRepr::deserialize(d)?;
        if r.re.len() != r.im.len() {
            return Err(serde::de::Error::custom("re/im length mismatch"));
        }
        let values = r.re.iter().zip(&r.im).map(|(a, b)| C64::new(a.0, b.0)).collect();
        Field1D::new(r.grid, values).map_err(serde::de::Error::custom)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use proptest::prelude::*;

    #[test]
    fn field2d_json_layout() {
        let gs = make_grid(0.0, 2.0, 2).unwrap();
        let gi = make_grid(1.0, 3.0, 3).unwrap();
        let f = Field2D::from_fn(gs, gi, |k, kp| C64::new(k, kp));
        let text = to_json_string(&f).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["grid_s"]["n"], 2);
        assert_eq!(v["grid_i"]["span"].as_f64(), Some(3.0));
        assert_eq!(v["re"].as_array().unwrap().len(), 2);
        assert_eq!(v["im"][1].as_array().unwrap().len(), 3);
        assert!(text.contains("5.0000000000000000e-1"));
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let g = make_grid(0.0, 2.0, 2).unwrap();
        let f = Field1D::new(g, vec![C64::new(f64::NAN, 0.0), C64::new(0.0, 0.0)]).unwrap();
        assert!(to_json_string(&f).is_err());
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let text = r#"{"grid_s":{"center":0,"span":2,"n":2},"grid_i":{"center":0,"span":2,"n":2},
            "re":[[1,2],[3]],"im":[[0,0],[0,0]]}"#;
        assert!(from_json_str::<Field2D>(text).is_err());
    }

    proptest! {
        #[test]
        fn field2d_round_trips_bitwise(vals in proptest::collection::vec(-1e6f64..1e6, 12),
                                       center in -10.0f64..10.0, span in 0.01f64..100.0) {
            let gs = make_grid(center, span, 3).unwrap();
            let gi = make_grid(-center, span * 0.5, 2).unwrap();
            let values: Vec<C64> = vals.chunks(2).map(|p| C64::new(p[0], p[1] * 1e-9)).collect();
            let f = Field2D::new(gs, gi, values).unwrap();
            let back: Field2D = from_json_str(&to_json_string(&f).unwrap()).unwrap();
            prop_assert_eq!(back, f);
        }
    }
}
