use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::field::FourierField;
use super::truncation::Truncation;
use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// Serialized field: `{nu, n_phi, n_x, entries: [[l..., j, re, im], ...]}`
/// with one representative per conjugate pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldJson {
    pub nu: usize,
    pub n_phi: usize,
    pub n_x: usize,
    pub entries: Vec<Vec<f64>>,
}

impl<T: Real> FourierField<T> {
    pub fn to_json(&self) -> FieldJson {
        let tr = self.trunc();
        let mut entries = Vec::new();
        for i in 0..=tr.zero_index() {
            let c = self.coeffs()[i];
            if c.is_zero() {
                continue;
            }
            let (l, j) = tr.mode(i);
            let mut row: Vec<f64> = l.iter().map(|&v| v as f64).collect();
            row.push(j as f64);
            row.push(c.re.as_f64());
            row.push(c.im.as_f64());
            entries.push(row);
        }
        FieldJson { nu: tr.nu, n_phi: tr.n_phi, n_x: tr.n_x, entries }
    }

    pub fn from_json(js: &FieldJson, oversample: usize) -> Result<Self> {
        let tr = Truncation::new(js.nu, js.n_phi, js.n_x, oversample)?;
        let mut f = FourierField::zeros(tr);
        for row in &js.entries {
            if row.len() != js.nu + 3 {
                return Err(Error::Dimension(format!("entry of length {} for nu = {}", row.len(), js.nu)));
            }
            let l: Vec<i64> = row[..js.nu].iter().map(|&v| v as i64).collect();
            let j = row[js.nu] as i64;
            let c = C::new(T::lit(row[js.nu + 1]), T::lit(row[js.nu + 2]));
            let idx = tr
                .index(&l, j)
                .ok_or_else(|| Error::Dimension(format!("mode ({l:?}, {j}) outside truncation")))?;
            let neg = tr.neg(idx);
            f.coeffs_mut()[idx] = c;
            f.coeffs_mut()[neg] = c.conj();
        }
        Ok(f)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_json())?)
    }
}
