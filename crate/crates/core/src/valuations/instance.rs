//! JSON instance documents.
//!
//! ```json
//! {"family":"separable","tables":[[0,1,1.5],[0,0.8,1.0]],"K":2}
//! {"family":"oxs","left":2,"right":2,"edges":[[1,1,0.3],[1,2,0.1]],"caps":[1,1]}
//! {"family":"matroid_distance","matroid":{"type":"uniform","n":3,"r":2}}
//! {"family":"table","hi":[1,1],"values":[0,0,0,1]}
//! ```
//!
//! Vertex labels in `edges` are 1-based. `right_caps` defaults to 1 per right
//! vertex. An optional top-level `"rescale":[lo,hi]` maps values onto `[0,1]`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    matroid_distance, oxs_maxflow, rescale, separable_concave, BipartiteFlowSpec, SeparableConcaveSpec, TableValuation,
};
use crate::error::{Error, Result};
use crate::lattice::{SharedValuation, Value};
use crate::matroid::MatroidSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilySpec {
    Separable {
        tables: Vec<Vec<f64>>,
        #[serde(rename = "K")]
        budget: i64,
    },
    Oxs {
        left: usize,
        right: usize,
        edges: Vec<(usize, usize, f64)>,
        caps: Vec<i64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        right_caps: Option<Vec<i64>>,
    },
    MatroidDistance {
        matroid: MatroidSpec,
    },
    Table {
        hi: Vec<i64>,
        values: Vec<Value>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceDoc {
    #[serde(flatten)]
    pub family: FamilySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rescale: Option<[f64; 2]>,
}

impl InstanceDoc {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInstance(e.to_string()))
    }

    pub fn build(&self) -> Result<SharedValuation> {
        let base = self.family.build()?;
        match self.rescale {
            Some([lo, hi]) => Ok(Arc::new(rescale(base, lo, hi)?)),
            None => Ok(base),
        }
    }
}

impl FamilySpec {
    pub fn build(&self) -> Result<SharedValuation> {
        Ok(match self {
            FamilySpec::Separable { tables, budget } => {
                Arc::new(separable_concave(SeparableConcaveSpec { tables: tables.clone(), budget: *budget })?)
            }
            FamilySpec::Oxs { left, right, edges, caps, right_caps } => {
                let edges = edges
                    .iter()
                    .map(|&(i, j, w)| {
                        if i == 0 || j == 0 {
                            Err(Error::InvalidInstance("edge endpoints are 1-based".into()))
                        } else {
                            Ok((i - 1, j - 1, w))
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                Arc::new(oxs_maxflow(BipartiteFlowSpec {
                    left: *left,
                    right: *right,
                    edges,
                    caps: caps.clone(),
                    right_caps: right_caps.clone(),
                })?)
            }
            FamilySpec::MatroidDistance { matroid } => Arc::new(matroid_distance(Arc::new(matroid.build()?))),
            FamilySpec::Table { hi, values } => Arc::new(TableValuation::new(hi.clone(), values.clone())?),
        })
    }
}
