//! JSON problem files.
//!
//! ```json
//! { "nu": 1.0,
//!   "lambda": [[0.25, 0], [2, 0], [1, 0]],
//!   "roots": [[-0.134, 0], [-1.866, 0]], "mults": [1, 1],
//!   "init_conds": [[1, 0], [0, 0]],
//!   "forcing": { "kind": "constant", "value": [0.5, 0] } }
//! ```
//!
//! Complex numbers are `[re, im]` pairs. `roots`/`mults` are optional; when
//! absent the roots are found numerically.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cauchy_solver::{CauchyProblem, Forcing};
use crate::char_poly::{CharPolynomial, RootSpectrum};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ForcingSpec {
    Constant { value: Complex64 },
    Table { times: Vec<f64>, values: Vec<Complex64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub nu: f64,
    pub lambda: Vec<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roots: Option<Vec<Complex64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mults: Option<Vec<usize>>,
    pub init_conds: Vec<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forcing: Option<ForcingSpec>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem file serializes")
    }

    /// Builds and validates the problem. Zero roots surface as
    /// [`Error::ZeroRoot`]; anything else malformed as [`Error::Schema`].
    pub fn to_problem(&self) -> Result<CauchyProblem> {
        let poly = CharPolynomial::new(self.lambda.clone()).map_err(schema)?;
        let spectrum = match (&self.roots, &self.mults) {
            (None, None) => None,
            (Some(r), None) => Some(RootSpectrum::simple(r.clone()).map_err(schema)?),
            (Some(r), Some(m)) => Some(RootSpectrum::new(r.clone(), m.clone()).map_err(schema)?),
            (None, Some(_)) => return Err(Error::Schema("\"mults\" given without \"roots\"".into())),
        };
        let problem = match spectrum {
            Some(s) => CauchyProblem::new(self.nu, poly, s, self.init_conds.clone()),
            None => CauchyProblem::from_coefficients(self.nu, poly, self.init_conds.clone()),
        }
        .map_err(schema)?;
        Ok(match &self.forcing {
            None => problem,
            Some(ForcingSpec::Constant { value }) => problem.with_forcing(Forcing::Constant(*value)),
            Some(ForcingSpec::Table { times, values }) => {
                problem.with_forcing(Forcing::table(times.clone(), values.clone()).map_err(schema)?)
            }
        })
    }

    /// Inverse of [`ProblemFile::to_problem`]; closure forcings have no
    /// file representation.
    pub fn from_problem(p: &CauchyProblem) -> Result<Self> {
        let forcing = match p.forcing() {
            None => None,
            Some(Forcing::Constant(g)) => Some(ForcingSpec::Constant { value: *g }),
            Some(Forcing::Table { times, values }) => Some(ForcingSpec::Table {
                times: times.clone(),
                values: values.clone(),
            }),
            Some(Forcing::Function(_)) => {
                return Err(Error::Schema("function forcing cannot be written to a file".into()))
            }
        };
        Ok(Self {
            nu: p.nu(),
            lambda: p.poly().coeffs().to_vec(),
            roots: Some(p.spectrum().roots().to_vec()),
            mults: Some(p.spectrum().mults().to_vec()),
            init_conds: p.init_conds().to_vec(),
            forcing,
        })
    }
}

fn schema(e: Error) -> Error {
    match e {
        Error::ZeroRoot(_) | Error::Schema(_) => e,
        other => Error::Schema(other.to_string()),
    }
}

pub fn load_problem(text: &str) -> Result<CauchyProblem> {
    ProblemFile::parse(text)?.to_problem()
}
