use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Branch, NFunction};
use crate::error::{Error, Result};

fn one() -> f64 {
    1.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

/// JSON form of an [`NFunction`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Descriptor {
    Power {
        p: f64,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        coef: f64,
    },
    Llogl,
    ExpConjugate,
    Entropy,
    SqrtOnePlus,
    Shifted {
        a: f64,
        base: Box<Descriptor>,
    },
    NumericConjugate {
        base: Box<Descriptor>,
    },
    Piecewise {
        breaks: Vec<f64>,
        branches: Vec<BranchDescriptor>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchDescriptor {
    pub base: Descriptor,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub scale: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub offset: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub constant: f64,
}

impl TryFrom<&NFunction> for Descriptor {
    type Error = Error;

    fn try_from(f: &NFunction) -> Result<Self> {
        Ok(match f {
            NFunction::Power { p, coef } => Descriptor::Power { p: *p, coef: *coef },
            NFunction::LLogL => Descriptor::Llogl,
            NFunction::ExpConjugate => Descriptor::ExpConjugate,
            NFunction::Entropy => Descriptor::Entropy,
            NFunction::SqrtOnePlus => Descriptor::SqrtOnePlus,
            NFunction::Shifted { base, a } => Descriptor::Shifted { a: *a, base: Box::new(base.as_ref().try_into()?) },
            NFunction::NumericConjugate { base } => {
                Descriptor::NumericConjugate { base: Box::new(base.as_ref().try_into()?) }
            }
            NFunction::Piecewise(pw) => Descriptor::Piecewise {
                breaks: pw.breaks().to_vec(),
                branches: pw
                    .branches()
                    .iter()
                    .map(|b| {
                        Ok(BranchDescriptor {
                            base: (&b.base).try_into()?,
                            scale: b.scale,
                            offset: b.offset,
                            constant: b.constant,
                        })
                    })
                    .collect::<Result<_>>()?,
            },
            NFunction::Custom(c) => {
                return Err(Error::Unsupported(format!("custom function '{}' has no JSON form", c.name)))
            }
        })
    }
}

impl TryFrom<Descriptor> for NFunction {
    type Error = Error;

    fn try_from(d: Descriptor) -> Result<Self> {
        Ok(match d {
            Descriptor::Power { p, coef } => {
                if !(p >= 1.0) || !(coef > 0.0) {
                    return Err(Error::Malformed(format!("power needs p >= 1 and coef > 0, got p={p}, coef={coef}")));
                }
                NFunction::Power { p, coef }
            }
            Descriptor::Llogl => NFunction::LLogL,
            Descriptor::ExpConjugate => NFunction::ExpConjugate,
            Descriptor::Entropy => NFunction::Entropy,
            Descriptor::SqrtOnePlus => NFunction::SqrtOnePlus,
            Descriptor::Shifted { a, base } => NFunction::try_from(*base)?.shift(a)?,
            Descriptor::NumericConjugate { base } => NFunction::try_from(*base)?.numeric_conjugate()?,
            Descriptor::Piecewise { breaks, branches } => {
                let branches = branches
                    .into_iter()
                    .map(|b| {
                        Ok(Branch { base: b.base.try_into()?, scale: b.scale, offset: b.offset, constant: b.constant })
                    })
                    .collect::<Result<Vec<_>>>()?;
                NFunction::piecewise(breaks, branches)?
            }
        })
    }
}

impl Serialize for NFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        Descriptor::try_from(self).map_err(serde::ser::Error::custom)?.serialize(s)
    }
}

impl<'de> Deserialize<'de> for NFunction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let desc = Descriptor::deserialize(d)?;
        NFunction::try_from(desc).map_err(serde::de::Error::custom)
    }
}

impl NFunction {
    pub fn from_json(s: &str) -> Result<Self> {
        let desc: Descriptor = serde_json::from_str(s)?;
        desc.try_into()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&Descriptor::try_from(self)?)?)
    }
}
