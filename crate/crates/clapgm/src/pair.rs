//! Graph-pair JSON files.
//!
//! ```json
//! {"a": {"points": [[x, y], ...], "descriptors": [[...], ...]},
//!  "b": {"points": [[x, y], ...], "descriptors": [[...], ...]},
//!  "truth": [[i, j], ...]}
//! ```
//!
//! `truth` is optional and lists matched `(index in a, index in b)` pairs.

use std::fs;
use std::path::Path;

use clapgm_core::{GraphSide, HardAssignment, Point};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SideRecord {
    pub points: Vec<Point>,
    pub descriptors: Vec<Vec<f64>>,
}

impl From<&GraphSide> for SideRecord {
    fn from(side: &GraphSide) -> Self {
        Self {
            points: side.points().to_vec(),
            descriptors: side.descriptors().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphPair {
    pub a: SideRecord,
    pub b: SideRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Vec<[usize; 2]>>,
}

impl GraphPair {
    pub fn new(a: &GraphSide, b: &GraphSide, truth: Option<&HardAssignment>) -> Self {
        Self {
            a: a.into(),
            b: b.into(),
            truth: truth.map(|t| t.pairs().map(|(i, j)| [i, j]).collect()),
        }
    }

    pub fn sides(&self) -> Result<(GraphSide, GraphSide)> {
        let a = GraphSide::new(self.a.points.clone(), self.a.descriptors.clone())?;
        let b = GraphSide::new(self.b.points.clone(), self.b.descriptors.clone())?;
        Ok((a, b))
    }

    pub fn truth_assignment(&self) -> Result<Option<HardAssignment>> {
        let Some(pairs) = &self.truth else {
            return Ok(None);
        };
        let pairs: Vec<(usize, usize)> = pairs.iter().map(|&[i, j]| (i, j)).collect();
        Ok(Some(HardAssignment::from_pairs(
            self.a.points.len(),
            self.b.points.len(),
            &pairs,
        )?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}
