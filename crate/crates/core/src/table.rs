//! CSV rendering for report tables.

use serde::Serialize;

/// Renders `rows` under the given header. Each row must serialize to exactly
/// `header.len()` fields.
pub(crate) fn to_csv<T: Serialize>(header: &[&str], rows: &[T]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).expect("in-memory CSV write");
    for row in rows {
        w.serialize(row).expect("in-memory CSV write");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV output is UTF-8")
}
