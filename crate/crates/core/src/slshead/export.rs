//! Layer-weight table: one row per utterance, one column per layer.

use std::fmt::Write as _;

use crate::numfmt::fmt_g17;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeightRow {
    pub utterance_id: String,
    pub alpha: Vec<f64>,
}

/// CSV with header `utterance_id,layer_0,...,layer_{L-1}`. `layers` is taken
/// from the widest row.
pub fn layer_weights_csv(rows: &[LayerWeightRow]) -> String {
    let layers = rows.iter().map(|r| r.alpha.len()).max().unwrap_or(0);
    let mut out = String::from("utterance_id");
    for l in 0..layers {
        write!(out, ",layer_{l}").unwrap();
    }
    out.push('\n');
    for row in rows {
        out.push_str(&row.utterance_id);
        for a in &row.alpha {
            out.push(',');
            out.push_str(&fmt_g17(*a));
        }
        out.push('\n');
    }
    out
}
