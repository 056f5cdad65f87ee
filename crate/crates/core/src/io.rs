//! JSON documents describing an instance:
//! `{"n", "gamma", "P", "R", "Phi"}` with optional `"u"`/`"U"` for stopping
//! problems (in which case `"R"` may be omitted).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mrp::{FeatureMap, Instance, MarkovRewardProcess, Matrix, Vector};
use crate::stopping::OptimalStoppingProblem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub n: usize,
    pub gamma: f64,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<Vec<f64>>>,
    #[serde(rename = "Phi")]
    pub phi: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,
    #[serde(rename = "U", default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<Vec<f64>>,
}

/// A parsed document: a plain MRP or a stopping problem, plus features.
#[derive(Debug, Clone)]
pub enum LoadedInstance {
    Mrp(Instance),
    Stopping {
        problem: OptimalStoppingProblem,
        instance: Instance,
    },
}

impl LoadedInstance {
    /// The evaluation instance (for stopping problems, the always-continue chain).
    pub fn instance(&self) -> &Instance {
        match self {
            LoadedInstance::Mrp(i) => i,
            LoadedInstance::Stopping { instance, .. } => instance,
        }
    }

    pub fn stopping(&self) -> Option<&OptimalStoppingProblem> {
        match self {
            LoadedInstance::Mrp(_) => None,
            LoadedInstance::Stopping { problem, .. } => Some(problem),
        }
    }
}

fn matrix(field: &str, rows: &[Vec<f64>], n_rows: usize, n_cols: Option<usize>) -> Result<Matrix> {
    if rows.len() != n_rows {
        return Err(Error::invalid(
            field,
            format!("expected {n_rows} rows, got {}", rows.len()),
        ));
    }
    let cols = n_cols.unwrap_or_else(|| rows.first().map_or(0, Vec::len));
    for (i, row) in rows.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::invalid(
                field,
                format!("row {i} has {} entries, expected {cols}", row.len()),
            ));
        }
    }
    Ok(Matrix::from_fn(n_rows, cols, |i, j| rows[i][j]))
}

fn vector(field: &str, xs: &[f64], n: usize) -> Result<Vector> {
    if xs.len() != n {
        return Err(Error::invalid(field, format!("expected {n} entries, got {}", xs.len())));
    }
    Ok(Vector::from_column_slice(xs))
}

fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl InstanceDoc {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance documents always serialize")
    }

    pub fn load(&self) -> Result<LoadedInstance> {
        let n = self.n;
        if n == 0 {
            return Err(Error::invalid("n", "must be positive"));
        }
        let p = matrix("P", &self.p, n, Some(n))?;
        let phi = matrix("Phi", &self.phi, n, None)?;
        let features = FeatureMap::new(phi)?;
        match (&self.u, &self.stop) {
            (None, None) => {
                let r = self
                    .r
                    .as_ref()
                    .ok_or_else(|| Error::invalid("R", "missing field `R`"))?;
                let r = matrix("R", r, n, Some(n))?;
                let mrp = MarkovRewardProcess::new(p, r, self.gamma)?;
                Ok(LoadedInstance::Mrp(Instance::new(mrp, features)?))
            }
            (Some(u), Some(stop)) => {
                let problem = OptimalStoppingProblem::new(
                    p,
                    self.gamma,
                    vector("u", u, n)?,
                    vector("U", stop, n)?,
                )?;
                let instance = Instance::new(problem.chain().clone(), features)?;
                Ok(LoadedInstance::Stopping { problem, instance })
            }
            (Some(_), None) => Err(Error::invalid("U", "missing field `U` (required with `u`)")),
            (None, Some(_)) => Err(Error::invalid("u", "missing field `u` (required with `U`)")),
        }
    }

    pub fn from_instance(instance: &Instance) -> Self {
        Self {
            n: instance.n(),
            gamma: instance.gamma(),
            p: rows_of(instance.mrp.transition()),
            r: Some(rows_of(instance.mrp.reward())),
            phi: rows_of(instance.features.matrix()),
            u: None,
            stop: None,
        }
    }

    pub fn from_stopping(problem: &OptimalStoppingProblem, features: &FeatureMap) -> Self {
        Self {
            n: problem.n(),
            gamma: problem.gamma(),
            p: rows_of(problem.transition()),
            r: None,
            phi: rows_of(features.matrix()),
            u: Some(problem.continuation().iter().copied().collect()),
            stop: Some(problem.termination().iter().copied().collect()),
        }
    }
}

pub fn read_instance(path: &Path) -> Result<LoadedInstance> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    InstanceDoc::from_json(&text)?.load()
}

#[cfg(test)]
mod tests {
    use super::*;

    const D1: &str = r#"{"n": 2, "gamma": 0.5,
        "P": [[0.5, 0.5], [0.5, 0.5]],
        "R": [[1.0, 1.0], [0.0, 0.0]],
        "Phi": [[1.0], [1.0]]}"#;

    #[test]
    fn parses_and_round_trips() {
        let doc = InstanceDoc::from_json(D1).unwrap();
        let loaded = doc.load().unwrap();
        let inst = loaded.instance();
        assert_eq!(inst.n(), 2);
        assert_eq!(inst.d(), 1);
        let again = InstanceDoc::from_instance(inst);
        assert_eq!(again, doc);
        assert_eq!(InstanceDoc::from_json(&again.to_json()).unwrap(), doc);
    }

    #[test]
    fn missing_gamma_names_the_field() {
        let text = D1.replace("\"gamma\": 0.5,", "");
        let err = InstanceDoc::from_json(&text).unwrap_err();
        assert!(err.to_string().contains("gamma"), "{err}");
        assert!(err.is_config());
    }

    #[test]
    fn shape_errors_name_the_field() {
        let text = D1.replace("[[1.0], [1.0]]", "[[1.0], [1.0], [0.0]]");
        let err = InstanceDoc::from_json(&text).unwrap().load().unwrap_err();
        assert!(err.to_string().contains("`Phi`"), "{err}");
        let text = D1.replace("[0.0, 0.0]]", "[0.0]]");
        let err = InstanceDoc::from_json(&text).unwrap().load().unwrap_err();
        assert!(err.to_string().contains("`R`"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_a_position() {
        let err = InstanceDoc::from_json("{\"n\": 2,\n \"gamma\": }").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn stopping_documents() {
        let text = r#"{"n": 2, "gamma": 0.5, "P": [[0.5, 0.5], [0.5, 0.5]],
            "Phi": [[1.0, 0.0], [0.0, 1.0]], "u": [0.1, 0.2], "U": [1.0, 0.0]}"#;
        let loaded = InstanceDoc::from_json(text).unwrap().load().unwrap();
        let problem = loaded.stopping().unwrap();
        assert_eq!(problem.r_max(), 1.0);
        assert_eq!(loaded.instance().mrp.reward()[(1, 0)], 0.2);
    }
}
