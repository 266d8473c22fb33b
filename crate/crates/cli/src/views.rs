//! JSON shapes shared by the commands and the service.

use serde::{Deserialize, Serialize};

use shapekit::interpreter::{ExecFlag, Execution};
use shapekit::search::assign_labels;
use shapekit::validation::LabelVoter;
use shapekit::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutedPart {
    pub label: String,
    pub dims: Vec3,
    pub center: Vec3,
    pub fn_name: String,
    pub statement_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutedLayout {
    pub parts: Vec<ExecutedPart>,
    pub flags: Vec<ExecFlag>,
}

/// Parts with provenance; labels come from the voter when one is given.
pub fn layout_view(ex: &Execution, voter: Option<&LabelVoter>) -> ExecutedLayout {
    let labeled = match voter {
        Some(v) => assign_labels(ex, v),
        None => ex.parts.clone(),
    };
    ExecutedLayout {
        parts: labeled
            .into_iter()
            .zip(&ex.provenance)
            .map(|(p, prov)| ExecutedPart {
                label: p.label,
                dims: p.dims,
                center: p.center,
                fn_name: prov.fn_name.clone(),
                statement_index: prov.statement_index,
            })
            .collect(),
        flags: ex.flags.clone(),
    }
}
