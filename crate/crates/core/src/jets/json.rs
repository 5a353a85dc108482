//! JSON encoding of jets.

use serde::{Deserialize, Serialize};

use super::{Coeff, Jet, JetError, Mat, PolyMatrix, FLOAT_BITS};

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct TermJson {
    pub exp: Vec<u16>,
    pub re: String,
    pub im: String,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct JetJson {
    pub vars: usize,
    pub order: u32,
    pub terms: Vec<TermJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<u32>,
}

pub fn field_name<K: Coeff>() -> &'static str {
    if K::EXACT {
        "exact"
    } else {
        "float"
    }
}

impl<K: Coeff> From<&Jet<K>> for JetJson {
    fn from(j: &Jet<K>) -> Self {
        JetJson {
            vars: j.nvars(),
            order: j.order(),
            terms: j
                .terms()
                .map(|(e, c)| {
                    let (re, im) = c.json_parts();
                    TermJson { exp: e.to_vec(), re, im }
                })
                .collect(),
            field: if K::EXACT { None } else { Some("float".into()) },
            precision: if K::EXACT { None } else { Some(FLOAT_BITS) },
        }
    }
}

impl JetJson {
    pub fn to_jet<K: Coeff>(&self) -> Result<Jet<K>, JetError> {
        if let Some(p) = self.precision {
            if p > FLOAT_BITS {
                return Err(JetError::Parse(format!("precision {p} exceeds supported {FLOAT_BITS} bits")));
            }
        }
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            if t.exp.len() != self.vars {
                return Err(JetError::Parse(format!("exponent {:?} has wrong length", t.exp)));
            }
            terms.push((t.exp.clone(), K::parse_parts(&t.re, &t.im)?));
        }
        Ok(Jet::from_terms(self.vars, self.order, terms))
    }
}

pub fn jet_to_value<K: Coeff>(j: &Jet<K>) -> serde_json::Value {
    serde_json::to_value(JetJson::from(j)).expect("serializable")
}

pub fn jet_from_value<K: Coeff>(v: &serde_json::Value) -> Result<Jet<K>, JetError> {
    let j: JetJson = serde_json::from_value(v.clone()).map_err(|e| JetError::Parse(e.to_string()))?;
    j.to_jet()
}

/// Matrix as rows of `{re, im}` string pairs.
pub fn mat_to_value<K: Coeff>(m: &Mat<K>) -> serde_json::Value {
    serde_json::Value::Array(
        (0..m.rows())
            .map(|i| {
                serde_json::Value::Array(
                    (0..m.cols())
                        .map(|j| {
                            let (re, im) = m.get(i, j).json_parts();
                            serde_json::json!({"re": re, "im": im})
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

pub fn mat_from_value<K: Coeff>(v: &serde_json::Value) -> Result<Mat<K>, JetError> {
    let bad = || JetError::Parse("malformed matrix".into());
    let rows = v.as_array().ok_or_else(bad)?;
    let mut out = Vec::with_capacity(rows.len());
    for r in rows {
        let mut row = Vec::new();
        for c in r.as_array().ok_or_else(bad)? {
            let part = |k: &str| c.get(k).and_then(|x| x.as_str()).unwrap_or("0").to_string();
            row.push(K::parse_parts(&part("re"), &part("im"))?);
        }
        out.push(row);
    }
    let cols = out.first().map_or(0, |r| r.len());
    if out.iter().any(|r| r.len() != cols) {
        return Err(bad());
    }
    Ok(if out.is_empty() { Mat::zeros(0, 0) } else { Mat::from_rows(out) })
}

/// Coefficient matrices `A_0..=A_N` of a matrix series.
pub fn polymatrix_to_value<K: Coeff>(p: &PolyMatrix<K>) -> serde_json::Value {
    serde_json::Value::Array(p.coeffs().iter().map(mat_to_value).collect())
}

pub fn polymatrix_from_value<K: Coeff>(v: &serde_json::Value) -> Result<PolyMatrix<K>, JetError> {
    let arr = v.as_array().ok_or_else(|| JetError::Parse("expected coefficient list".into()))?;
    if arr.is_empty() {
        return Err(JetError::Empty);
    }
    let coeffs = arr.iter().map(mat_from_value).collect::<Result<Vec<Mat<K>>, _>>()?;
    let (r, c) = (coeffs[0].rows(), coeffs[0].cols());
    if coeffs.iter().any(|m| m.rows() != r || m.cols() != c) {
        return Err(JetError::Parse("coefficient shapes differ".into()));
    }
    Ok(PolyMatrix::from_coeffs(coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::Qi;
    use num_complex::Complex64;

    #[test]
    fn exact_roundtrip() {
        let j = Jet::from_terms(2, 3, vec![(vec![1, 0], Qi::ratio(1, 3)), (vec![1, 2], Qi::complex((0, 1), (-2, 5)))]);
        let v = jet_to_value(&j);
        assert_eq!(jet_from_value::<Qi>(&v).unwrap(), j);
    }

    #[test]
    fn float_roundtrip() {
        let j = Jet::from_terms(1, 2, vec![(vec![2], Complex64::new(0.1, -2.5))]);
        let v = jet_to_value(&j);
        assert_eq!(v["field"], "float");
        assert_eq!(jet_from_value::<Complex64>(&v).unwrap(), j);
    }
}
