//! JSON form of a tree: per time, per branch, either half-open index
//! intervals (grids) or a label set (mode spaces).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{Region, Space};

use super::TreeStructure;

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RegionDoc {
    Intervals(Vec<(usize, usize)>),
    Labels(Vec<String>),
}

#[derive(Debug, Serialize, Deserialize)]
struct TreeDoc {
    times: Vec<f64>,
    /// `branches[i][k]`
    branches: Vec<Vec<RegionDoc>>,
}

fn to_doc(space: &Space, r: &Region) -> RegionDoc {
    match space {
        Space::Grid(_) => RegionDoc::Intervals(r.index_intervals()),
        Space::Modes(m) => RegionDoc::Labels(r.indices().map(|i| m.label(i).to_owned()).collect()),
    }
}

fn from_doc(space: &Space, d: &RegionDoc) -> Result<Region> {
    match (space, d) {
        (Space::Grid(_), RegionDoc::Intervals(iv)) => Region::from_index_intervals(space, iv),
        (Space::Modes(_), RegionDoc::Labels(l)) => Region::from_labels(space, l),
        _ => Err(Error::Parse("region kind does not match the space".into())),
    }
}

impl TreeStructure {
    pub fn to_json(&self) -> Result<String> {
        let doc = TreeDoc {
            times: self.times.clone(),
            branches: self
                .branches
                .iter()
                .map(|b| b.iter().map(|r| to_doc(&self.space, r)).collect())
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str, space: &Space) -> Result<Self> {
        let doc: TreeDoc = serde_json::from_str(text)?;
        let branches = doc
            .branches
            .iter()
            .map(|b| b.iter().map(|d| from_doc(space, d)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(space, doc.times, branches)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{GridSpace, ModeSpace};

    #[test]
    fn json_round_trip() {
        let grid: Space = GridSpace::line(-1.0, 1.0, 16).unwrap().into();
        let left = Region::interval(&grid, -1.0, 0.0).unwrap();
        let tree = TreeStructure::new(
            &grid,
            vec![0.0, 1.0],
            vec![vec![Region::full(&grid), left.clone()], vec![Region::full(&grid), left.complement()]],
        )
        .unwrap();
        let text = tree.to_json().unwrap();
        assert!(text.contains("\"intervals\""));
        assert_eq!(TreeStructure::from_json(&text, &grid).unwrap(), tree);

        let modes: Space = ModeSpace::new(&["a", "b"]).unwrap().into();
        assert!(matches!(TreeStructure::from_json(&text, &modes), Err(Error::Parse(_))));
        let t = TreeStructure::constant(&modes, vec![0.0], vec![Region::from_labels(&modes, &["b"]).unwrap()]).unwrap();
        let text = t.to_json().unwrap();
        assert!(text.contains("\"b\""));
        assert_eq!(TreeStructure::from_json(&text, &modes).unwrap(), t);
    }
}
