//! Line-delimited `key=value` records, fields separated by tabs.

use std::fmt;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Record {
    fields: Vec<(String, String)>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RecordError {
    #[error("field `{0}` has no `=`")]
    MissingSeparator(String),
    #[error("empty key in `{0}`")]
    EmptyKey(String),
}

/// Reals carry 17 significant digits so they read back bit for bit.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

impl Record {
    pub fn new(experiment: &str) -> Self {
        Self::default().text("experiment", experiment)
    }

    pub fn text(mut self, key: &str, value: impl fmt::Display) -> Self {
        let v = value.to_string();
        debug_assert!(!key.is_empty() && !key.contains(['=', '\t', '\n']));
        debug_assert!(!v.contains(['\t', '\n']));
        self.fields.push((key.to_string(), v));
        self
    }

    pub fn real(self, key: &str, value: f64) -> Self {
        self.text(key, format_real(value))
    }

    pub fn int(self, key: &str, value: u64) -> Self {
        self.text(key, value)
    }

    pub fn fields(&self) -> &[(String, String)] {
        &self.fields
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_real(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }
}

impl fmt::Display for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.fields.iter().enumerate() {
            if i > 0 {
                f.write_str("\t")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

pub fn parse_record(line: &str) -> Result<Record, RecordError> {
    let mut fields = Vec::new();
    for part in line.trim_end_matches(['\n', '\r']).split('\t') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| RecordError::MissingSeparator(part.to_string()))?;
        if k.is_empty() {
            return Err(RecordError::EmptyKey(part.to_string()));
        }
        fields.push((k.to_string(), v.to_string()));
    }
    Ok(Record { fields })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let r = Record::new("gce").real("z", 0.1).int("samples", 12).text("quantity", "N");
        let line = r.to_string();
        assert_eq!(line, "experiment=gce\tz=1.0000000000000001e-1\tsamples=12\tquantity=N");
        assert_eq!(parse_record(&line).unwrap(), r);
        assert_eq!(parse_record(&line).unwrap().get_real("z"), Some(0.1));
    }

    #[test]
    fn malformed_lines() {
        assert!(parse_record("a=1\tb").is_err());
        assert!(parse_record("=1").is_err());
    }
}
