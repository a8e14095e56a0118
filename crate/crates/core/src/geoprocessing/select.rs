use super::{GeoprocessingError, SpatialPredicate};
use crate::geometry::Geometry;
use crate::schema::{parse_date, AttrValue, ColumnType};
use crate::store::Layer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    /// Case-insensitive substring match on text columns.
    ContainsText,
}

/// `column op value`. Null attribute values never match.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributePredicate {
    pub column: String,
    pub op: CompareOp,
    pub value: AttrValue,
}

impl AttributePredicate {
    pub fn new(column: impl Into<String>, op: CompareOp, value: AttrValue) -> Self {
        AttributePredicate { column: column.into(), op, value }
    }

    /// Resolves the column and converts the operand to the column's type.
    fn bind(&self, layer: &Layer) -> Result<(usize, AttrValue), GeoprocessingError> {
        let idx = layer.column_index(&self.column).ok_or_else(|| GeoprocessingError::UnknownColumn(self.column.clone()))?;
        let ctype = layer.schema()[idx].ctype;
        let mismatch = || GeoprocessingError::TypeMismatch {
            column: self.column.clone(),
            ctype: ctype.to_string(),
            value: format!("{:?}", self.value),
        };
        let operand = match (ctype, &self.value) {
            (ColumnType::Char(_), AttrValue::Text(_)) => self.value.clone(),
            (ColumnType::Char(_), v @ (AttrValue::Int(_) | AttrValue::Real(_))) => AttrValue::Text(v.to_text()),
            (t, v) if t.is_numeric() => AttrValue::Real(v.as_f64().ok_or_else(mismatch)?),
            (ColumnType::Date, AttrValue::Date(_)) => self.value.clone(),
            (ColumnType::Date, AttrValue::Text(s)) => AttrValue::Date(parse_date(s).ok_or_else(mismatch)?),
            (ColumnType::Logical, AttrValue::Bool(_)) => self.value.clone(),
            _ => return Err(mismatch()),
        };
        if self.op == CompareOp::ContainsText && !matches!(ctype, ColumnType::Char(_)) {
            return Err(mismatch());
        }
        Ok((idx, operand))
    }
}

fn compare(value: &AttrValue, operand: &AttrValue) -> Option<Ordering> {
    match (value, operand) {
        (AttrValue::Text(a), AttrValue::Text(b)) => Some(a.cmp(b)),
        (AttrValue::Date(a), AttrValue::Date(b)) => Some(a.cmp(b)),
        (AttrValue::Bool(a), AttrValue::Bool(b)) => Some(a.cmp(b)),
        (a, AttrValue::Real(b)) => a.as_f64()?.partial_cmp(b),
        _ => None,
    }
}

fn matches(op: CompareOp, value: &AttrValue, operand: &AttrValue) -> bool {
    if let CompareOp::ContainsText = op {
        return match (value, operand) {
            (AttrValue::Text(a), AttrValue::Text(b)) => a.to_lowercase().contains(&b.to_lowercase()),
            _ => false,
        };
    }
    let Some(ord) = compare(value, operand) else {
        return false;
    };
    match op {
        CompareOp::Eq => ord.is_eq(),
        CompareOp::Ne => ord.is_ne(),
        CompareOp::Lt => ord.is_lt(),
        CompareOp::Le => ord.is_le(),
        CompareOp::Gt => ord.is_gt(),
        CompareOp::Ge => ord.is_ge(),
        CompareOp::ContainsText => unreachable!(),
    }
}

/// Ids of features satisfying every supplied predicate, in id order. The
/// spatial test reads `feature <pred> geometry`.
pub fn select(
    layer: &Layer,
    attr: Option<&AttributePredicate>,
    spatial: Option<(SpatialPredicate, &Geometry)>,
) -> Result<Vec<String>, GeoprocessingError> {
    let bound = attr.map(|p| p.bind(layer).map(|(i, v)| (p.op, i, v))).transpose()?;
    let attr_ok = |attrs: &[AttrValue]| bound.as_ref().is_none_or(|(op, i, v)| matches(*op, &attrs[*i], v));
    let ids = match (spatial, &bound) {
        (None, None) => return Err(GeoprocessingError::NoPredicate),
        (None, Some(_)) => layer.iter().filter(|(_, f)| attr_ok(&f.attrs)).map(|(id, _)| id.to_string()).collect(),
        (Some((pred, g)), _) => {
            let env = g.envelope().map_err(|_| GeoprocessingError::EmptyGeometry)?;
            layer
                .bbox_query(&env)
                .into_iter()
                .filter(|id| {
                    let f = layer.get(id).expect("indexed id is stored");
                    attr_ok(&f.attrs) && pred.evaluate(&f.geometry, g)
                })
                .map(str::to_string)
                .collect()
        }
    };
    Ok(ids)
}

/// All `(left_id, right_id)` pairs with `left <pred> right`, sorted.
pub fn spatial_join(
    left: &Layer,
    right: &Layer,
    pred: SpatialPredicate,
) -> Result<Vec<(String, String)>, GeoprocessingError> {
    if left.crs() != right.crs() {
        return Err(GeoprocessingError::CrsMismatch { left: left.crs().describe(), right: right.crs().describe() });
    }
    let lefts: Vec<_> = left.iter().collect();
    let mut pairs: Vec<(String, String)> = lefts
        .par_iter()
        .flat_map_iter(|(lid, lf)| {
            let env = lf.geometry.envelope().expect("stored geometry has an envelope");
            right
                .bbox_query(&env)
                .into_iter()
                .filter(|rid| pred.evaluate(&lf.geometry, &right.get(rid).expect("indexed id is stored").geometry))
                .map(|rid| (lid.to_string(), rid.to_string()))
                .collect::<Vec<_>>()
        })
        .collect();
    pairs.sort_unstable();
    Ok(pairs)
}
