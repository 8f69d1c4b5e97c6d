//! Tensile-test CSV ingestion.

use std::io::Read;

use crate::error::{Error, Result};
use crate::fpam::TensileSample;

pub const TENSILE_COLUMNS: [&str; 3] = ["pressure_kpa", "length_m", "force_n"];

/// Reads `pressure_kpa,length_m,force_n` rows. Any malformed row rejects the
/// whole file; line numbers are 1-based and count the header.
pub fn read_tensile_csv<R: Read>(reader: R) -> Result<Vec<TensileSample>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers = match rdr.headers() {
        Ok(h) => h.clone(),
        Err(e) => return Err(Error::Input { line: 1, reason: e.to_string() }),
    };
    if headers.iter().all(|h| h.is_empty()) {
        return Err(Error::NoSamples);
    }
    let mut index = [0usize; 3];
    for (slot, name) in index.iter_mut().zip(TENSILE_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }

    let mut samples = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Input {
            line: e.position().map_or(0, |p| p.line() as usize),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let mut values = [0.0; 3];
        for (v, (&i, name)) in values.iter_mut().zip(index.iter().zip(TENSILE_COLUMNS)) {
            let field = record.get(i).unwrap_or("");
            *v = field.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| Error::Input {
                line,
                reason: format!("`{name}` is not a finite number: `{field}`"),
            })?;
        }
        let [pressure_kpa, length_m, force_n] = values;
        if pressure_kpa < 0.0 {
            return Err(Error::Input { line, reason: format!("negative pressure {pressure_kpa}") });
        }
        if length_m <= 0.0 {
            return Err(Error::Input { line, reason: format!("non-positive length {length_m}") });
        }
        samples.push(TensileSample { pressure_kpa, length_m, force_n });
    }
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    Ok(samples)
}

/// Writes samples with the standard header.
pub fn tensile_csv(samples: &[TensileSample]) -> String {
    let mut out = String::from("pressure_kpa,length_m,force_n\n");
    for s in samples {
        out.push_str(&format!("{},{},{}\n", s.pressure_kpa, s.length_m, s.force_n));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_rows_in_any_column_order() {
        let text = "force_n,pressure_kpa,length_m\n1.5,0,0.3\n2.5,10,0.29\n";
        let s = read_tensile_csv(text.as_bytes()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1], TensileSample { pressure_kpa: 10.0, length_m: 0.29, force_n: 2.5 });
    }

    #[test]
    fn empty_input() {
        assert!(matches!(read_tensile_csv("".as_bytes()), Err(Error::NoSamples)));
        assert!(matches!(
            read_tensile_csv("pressure_kpa,length_m,force_n\n".as_bytes()),
            Err(Error::NoSamples)
        ));
    }

    #[test]
    fn missing_column_named() {
        match read_tensile_csv("pressure_kpa,force_n\n0,1\n".as_bytes()) {
            Err(Error::MissingColumn(c)) => assert_eq!(c, "length_m"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_row_reports_line() {
        let text = "pressure_kpa,length_m,force_n\n0,0.3,1\n0,abc,1\n0,0.2,1\n";
        match read_tensile_csv(text.as_bytes()) {
            Err(Error::Input { line, reason }) => {
                assert_eq!(line, 3);
                assert!(reason.contains("length_m"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let short = "pressure_kpa,length_m,force_n\n0,0.3\n";
        assert!(matches!(read_tensile_csv(short.as_bytes()), Err(Error::Input { line: 2, .. })));
        let negative = "pressure_kpa,length_m,force_n\n-1,0.3,2\n";
        assert!(matches!(read_tensile_csv(negative.as_bytes()), Err(Error::Input { line: 2, .. })));
    }

    #[test]
    fn round_trip() {
        let s = vec![TensileSample { pressure_kpa: 41.4, length_m: 0.27, force_n: -3.25 }];
        assert_eq!(read_tensile_csv(tensile_csv(&s).as_bytes()).unwrap(), s);
    }
}
