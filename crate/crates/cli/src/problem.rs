use std::path::Path;

use anyhow::{anyhow, bail, Context};
use rsform::dynamics::{CurveParam, DiffeoJet, VectorField};
use rsform::infgen::{parse_spectrum, PolarEigenvalue};
use rsform::jets::{Coeff, FLOAT_BITS};
use rsform::rspipeline::{RSDiffeo, RSVectorField};
use rsform::turrittin::LinearSystem;
use serde::Deserialize;
use serde_json::Value;

use crate::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Vf,
    Diffeo,
    LinearSystem,
    RsDiffeo,
    RsVf,
}

impl Kind {
    pub fn label(&self) -> &'static str {
        match self {
            Kind::Vf => "vf",
            Kind::Diffeo => "diffeo",
            Kind::LinearSystem => "linear-system",
            Kind::RsDiffeo => "rs-diffeo",
            Kind::RsVf => "rs-vf",
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    pub order: Option<u32>,
    pub precision: Option<Value>,
    pub tol: Option<f64>,
}

/// Input file shared by every command.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub kind: Kind,
    pub payload: Value,
    #[serde(default)]
    pub curve: Option<Value>,
    #[serde(default)]
    pub spectrum: Option<Value>,
    #[serde(default)]
    pub options: Options,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    Exact,
    Float,
}

impl Precision {
    /// `exact` (or `0`) selects rational arithmetic; `1..=53` bits select double precision.
    pub fn parse(s: &str) -> anyhow::Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("exact") || t == "0" {
            return Ok(Precision::Exact);
        }
        let bits: u32 = t.parse().map_err(|_| anyhow!("precision must be `exact` or a bit count, got {t:?}"))?;
        if bits > FLOAT_BITS {
            bail!("precision {bits} exceeds the supported {FLOAT_BITS} bits");
        }
        Ok(Precision::Float)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Precision::Exact => "exact",
            Precision::Float => "float",
        }
    }
}

pub fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Input)?;
    serde_json::from_str(&text)
        .with_context(|| format!("{} is not valid JSON", path.display()))
        .map_err(Failure::Input)
}

impl Problem {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let v = read_json(path)?;
        serde_json::from_value(v)
            .with_context(|| format!("{} does not match the problem schema", path.display()))
            .map_err(Failure::Input)
    }

    pub fn precision(&self) -> Result<Option<Precision>, Failure> {
        let Some(v) = &self.options.precision else { return Ok(None) };
        let s = match v {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            _ => return Err(Failure::Input(anyhow!("options.precision must be a string or a number"))),
        };
        Precision::parse(&s).map(Some).map_err(Failure::Input)
    }

    pub fn expect(&self, kinds: &[Kind]) -> Result<(), Failure> {
        if kinds.contains(&self.kind) {
            return Ok(());
        }
        let want: Vec<_> = kinds.iter().map(Kind::label).collect();
        Err(Failure::Input(anyhow!("expected a problem of kind {}, found {}", want.join(" or "), self.kind.label())))
    }

    pub fn diffeo<K: Coeff>(&self, order: Option<u32>) -> Result<DiffeoJet<K>, Failure> {
        let f = DiffeoJet::from_json(&self.payload).map_err(|e| Failure::Input(anyhow!("payload: {e}")))?;
        Ok(match order {
            Some(n) if n < f.order() => f.truncate(n),
            _ => f,
        })
    }

    pub fn field<K: Coeff>(&self, order: Option<u32>) -> Result<VectorField<K>, Failure> {
        let x = VectorField::from_json(&self.payload).map_err(|e| Failure::Input(anyhow!("payload: {e}")))?;
        Ok(match order {
            Some(n) if n < x.order() => x.truncate(n),
            _ => x,
        })
    }

    pub fn linear_system<K: Coeff>(&self) -> Result<LinearSystem<K>, Failure> {
        LinearSystem::from_json(&self.payload).map_err(|e| Failure::Input(anyhow!("payload: {e}")))
    }

    pub fn rs_diffeo<K: Coeff>(&self) -> Result<RSDiffeo<K>, Failure> {
        RSDiffeo::from_json(&self.payload).map_err(|e| Failure::Input(anyhow!("payload: {e}")))
    }

    pub fn rs_vf<K: Coeff>(&self) -> Result<RSVectorField<K>, Failure> {
        RSVectorField::from_json(&self.payload).map_err(|e| Failure::Input(anyhow!("payload: {e}")))
    }

    pub fn curve<K: Coeff>(&self, dim: usize) -> Result<CurveParam<K>, Failure> {
        let g = match &self.curve {
            Some(v) => CurveParam::from_json(v).map_err(|e| Failure::Input(anyhow!("curve: {e}")))?,
            None => return Err(Failure::Input(anyhow!("this command needs a curve"))),
        };
        if g.dim() != dim {
            return Err(Failure::Input(anyhow!("curve has {} components, payload has {dim}", g.dim())));
        }
        Ok(g)
    }

    pub fn spectrum(&self) -> Result<Vec<PolarEigenvalue>, Failure> {
        let v = self.spectrum.as_ref().ok_or_else(|| Failure::Input(anyhow!("this command needs a spectrum")))?;
        parse_spectrum(v).map_err(|e| Failure::Input(anyhow!("spectrum: {e}")))
    }
}
