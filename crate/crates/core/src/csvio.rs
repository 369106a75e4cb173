use serde::{Serialize, Serializer};

pub(crate) fn csv_err(e: csv::Error) -> crate::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => crate::Error::Io(io),
        other => crate::Error::format(None, format!("{other:?}")),
    }
}

/// A count column: integral values are written without a decimal point so
/// that sampled data round-trip as plain integers.
pub(crate) struct Count(pub f64);

impl Serialize for Count {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let n = self.0;
        if n.fract() == 0.0 && (0.0..9.0e15).contains(&n) {
            s.serialize_u64(n as u64)
        } else {
            s.serialize_f64(n)
        }
    }
}
