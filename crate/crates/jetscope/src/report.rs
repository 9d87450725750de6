//! Report emission: JSON with stable key order and RFC-4180 CSV.
//!
//! JSON key order follows struct-field declaration order (serde derive) and
//! sorted order for any map (reports use `BTreeMap`), so serializing the
//! same report twice yields byte-identical output.

use serde::Serialize;

use crate::classify::OrderReport;
use crate::error::{JetscopeError, Result};

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map_err(|e| JetscopeError::InvalidInput(format!("report serialization failed: {e}")))
}

/// Quote a CSV field when it contains a comma, quote, or line break
/// (RFC 4180 §2.6–2.7).
pub fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\r') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Assemble rows into a CRLF-terminated CSV document.
pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(
        &header
            .iter()
            .map(|h| csv_field(h))
            .collect::<Vec<_>>()
            .join(","),
    );
    out.push_str("\r\n");
    for row in rows {
        out.push_str(
            &row.iter()
                .map(|f| csv_field(f))
                .collect::<Vec<_>>()
                .join(","),
        );
        out.push_str("\r\n");
    }
    out
}

/// The per-scale residual table of an order report as CSV.
pub fn profile_csv(report: &OrderReport) -> String {
    let rows: Vec<Vec<String>> = report
        .table
        .iter()
        .map(|row| {
            vec![
                format!("{}", row.r),
                format!("{}", row.k),
                format!("{}", row.raw_residual),
                format!("{}", row.normalized_residual),
            ]
        })
        .collect();
    to_csv(&["r", "k", "raw_residual", "normalized_residual"], &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn csv_escaping_follows_rfc4180() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
        let doc = to_csv(&["x", "y"], &[vec!["1".into(), "2,3".into()]]);
        assert_eq!(doc, "x,y\r\n1,\"2,3\"\r\n");
    }

    #[test]
    fn json_key_order_is_stable() {
        let mut m = BTreeMap::new();
        m.insert("zeta", 1);
        m.insert("alpha", 2);
        let a = to_json(&m).unwrap();
        let b = to_json(&m).unwrap();
        assert_eq!(a, b);
        assert!(a.find("alpha").unwrap() < a.find("zeta").unwrap());
    }
}
