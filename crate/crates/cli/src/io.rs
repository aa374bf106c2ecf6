//! Dataset CSV I/O and number formatting.

use std::io::{Read, Write};
use std::path::Path;

use metapool_core::StudyRecord;

use crate::error::CliError;

pub const HEADER: [&str; 4] = ["study", "y", "se", "df"];
pub const NA: &str = "NA";

/// Parse a `study,y,se,df` file. Errors carry the 1-based line number.
pub fn read_records(path: &Path) -> Result<Vec<StudyRecord>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(format!("cannot open {}", path.display()), e))?;
    parse_records(file, &path.display().to_string())
}

pub fn parse_records(input: impl Read, name: &str) -> Result<Vec<StudyRecord>, CliError> {
    let err = |line: u64, msg: String| CliError::Parse {
        path: name.to_string(),
        line,
        msg,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader.headers().map_err(|e| err(1, e.to_string()))?.clone();
    if header.iter().ne(HEADER) {
        return Err(err(
            1,
            format!("header must be `{}`, got `{}`", HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            err(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != HEADER.len() {
            return Err(err(line, format!("expected 4 fields, got {}", row.len())));
        }
        let num = |i: usize| -> Result<f64, CliError> {
            row[i]
                .parse::<f64>()
                .map_err(|_| err(line, format!("{} is not a number: `{}`", HEADER[i], &row[i])))
        };
        if row[0].is_empty() {
            return Err(err(line, "empty study id".into()));
        }
        out.push(StudyRecord::new(&row[0], num(1)?, num(2)?, num(3)?));
    }
    Ok(out)
}

/// Write records with shortest round-trip float formatting, so reading the
/// output back yields the same values.
pub fn write_records(records: &[StudyRecord], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in records {
        w.write_record([
            r.study_id.clone(),
            r.y.to_string(),
            r.se.to_string(),
            r.df.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Six significant digits, without exponent notation for moderate magnitudes.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return NA.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.5e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    if !(-5..=15).contains(&exp) {
        return sci;
    }
    let decimals = (5 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Four decimals, as in the markdown report.
pub fn dec4(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.4}")
    } else {
        NA.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(-0.0240001), "-0.0240001");
        assert_eq!(sig6(1.5707), "1.57070");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(9.999996), "10.0000");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(f64::NAN), "NA");
        assert_eq!(sig6(1.5e-9), "1.50000e-9");
    }

    #[test]
    fn header_and_fields_are_checked() {
        let bad_header = "id,y,se,df\na,1,1,1\n";
        assert!(matches!(parse_records(bad_header.as_bytes(), "x"), Err(CliError::Parse { line: 1, .. })));
        let short = "study,y,se,df\na,1,1,1\nabc,1,10\n";
        match parse_records(short.as_bytes(), "x") {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let text = "study,y,se,df\na,1,1,1\nb,zz,1,1\n";
        match parse_records(text.as_bytes(), "x") {
            Err(CliError::Parse { line, msg, .. }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("zz"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trip() {
        let recs = vec![
            StudyRecord::new("a", 0.1 + 0.2, 1.0 / 3.0, 17.25),
            StudyRecord::new("b,c", -1e-300, 2.5, 1e6),
        ];
        let mut buf = Vec::new();
        write_records(&recs, &mut buf).unwrap();
        assert_eq!(parse_records(buf.as_slice(), "x").unwrap(), recs);
    }
}
