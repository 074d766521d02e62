//! CSV import/export for spectra, per-step diagnostics, and generic curves.
//!
//! All floating-point values are written with seventeen significant digits so
//! that a write/read cycle reproduces every `f64` bit for bit.  Spectrum files
//! are self-describing: each row repeats the storage form and the model's
//! dispersion exponent, and the reader rejects files whose rows disagree.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{KweError, Result};
use crate::evolution::StepRecord;
use crate::field::{Extrapolation, SpectralForm, SpectrumField};
use crate::grid::FrequencyGrid;

/// Column header of a spectrum CSV.
pub const SPECTRUM_HEADER: &str = "omega,value,form,beta";

/// Column header of a diagnostics CSV.
pub const DIAGNOSTICS_HEADER: &str =
    "t,dt,mass,energy,entropy,min_N,max_N,sup_DN,seminorm_beta,extrapolated_fraction";

/// Write one spectrum with the dispersion exponent it was computed under.
pub fn write_spectrum(path: &Path, field: &SpectrumField, beta: f64) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{SPECTRUM_HEADER}")?;
    let form = field.form().as_str();
    for (&omega, &value) in field.grid().nodes().iter().zip(field.values()) {
        writeln!(out, "{omega:.16e},{value:.16e},{form},{beta:.16e}")?;
    }
    out.flush()?;
    Ok(())
}

/// Read a spectrum CSV back into a field plus the dispersion exponent it
/// declares.  The node column must form a log-uniform grid; the form and
/// beta columns must be constant across rows.
pub fn read_spectrum(
    path: &Path,
    extrapolation: Extrapolation,
) -> Result<(SpectrumField, f64)> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| invalid(path, "file is empty"))??;
    if header.trim() != SPECTRUM_HEADER {
        return Err(invalid(
            path,
            &format!("header {header:?} (expected {SPECTRUM_HEADER:?})"),
        ));
    }
    let mut omegas = Vec::new();
    let mut values = Vec::new();
    let mut form: Option<SpectralForm> = None;
    let mut beta: Option<f64> = None;
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let row = line.trim();
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 4 {
            return Err(invalid(
                path,
                &format!("row {} has {} fields (expected 4)", idx + 2, fields.len()),
            ));
        }
        omegas.push(parse_float(path, idx + 2, "omega", fields[0])?);
        values.push(parse_float(path, idx + 2, "value", fields[1])?);
        let row_form = SpectralForm::parse(fields[2].trim())?;
        if *form.get_or_insert(row_form) != row_form {
            return Err(invalid(path, &format!("row {}: form changes mid-file", idx + 2)));
        }
        let row_beta = parse_float(path, idx + 2, "beta", fields[3])?;
        if *beta.get_or_insert(row_beta) != row_beta {
            return Err(invalid(path, &format!("row {}: beta changes mid-file", idx + 2)));
        }
    }
    let (Some(form), Some(beta)) = (form, beta) else {
        return Err(invalid(path, "no data rows"));
    };
    let grid = FrequencyGrid::from_nodes(omegas)?;
    let field = SpectrumField::new(grid, values, form, extrapolation)?;
    Ok((field, beta))
}

/// Write the per-step diagnostics table of a trajectory.
///
/// Columns are fixed; entropy and the smoothing seminorm print as `NaN` for
/// states where they are undefined (a nonpositive node, or `beta` outside the
/// seminorm's admissible band).
pub fn write_diagnostics(path: &Path, steps: &[StepRecord]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{DIAGNOSTICS_HEADER}")?;
    for step in steps {
        let d = &step.diagnostics;
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            step.t,
            step.dt,
            d.mass,
            d.energy,
            d.entropy,
            d.min_value,
            d.max_value,
            d.sup_dn,
            d.seminorm,
            step.extrapolated_fraction,
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Write a two-column curve (fit inputs, sweep results, profiles).
pub fn write_xy(path: &Path, labels: (&str, &str), points: &[(f64, f64)]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{},{}", labels.0, labels.1)?;
    for &(x, y) in points {
        writeln!(out, "{x:.16e},{y:.16e}")?;
    }
    out.flush()?;
    Ok(())
}

fn invalid(path: &Path, what: &str) -> KweError {
    KweError::Invalid(format!("{}: {what}", path.display()))
}

fn parse_float(path: &Path, row: usize, column: &str, text: &str) -> Result<f64> {
    text.trim().parse::<f64>().map_err(|_| {
        invalid(
            path,
            &format!("row {row}: column {column} is not a number: {text:?}"),
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::DiagnosticsRecord;
    use crate::params::ModelParams;
    use std::path::PathBuf;

    fn scratch(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("kwe-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    fn bump_field() -> SpectrumField {
        let grid = FrequencyGrid::log_uniform(0.05, 20.0, 96).unwrap();
        SpectrumField::tabulate(grid, SpectralForm::Rescaled, Extrapolation::Constant, |w| {
            1e-4 + (-(w.ln() / 0.7).powi(2)).exp()
        })
        .unwrap()
    }

    #[test]
    fn spectrum_roundtrip_is_bitwise() {
        let path = scratch("roundtrip.csv");
        let field = bump_field();
        write_spectrum(&path, &field, -0.25).unwrap();
        let (back, beta) = read_spectrum(&path, Extrapolation::Constant).unwrap();
        assert_eq!(beta, -0.25);
        assert_eq!(back.form(), field.form());
        assert_eq!(back.values(), field.values());
        assert_eq!(back.grid().nodes(), field.grid().nodes());
    }

    #[test]
    fn malformed_spectra_are_rejected() {
        let path = scratch("bad.csv");
        // Wrong header.
        std::fs::write(&path, "omega,value\n1.0,2.0\n").unwrap();
        assert!(read_spectrum(&path, Extrapolation::Constant).is_err());
        // Non-numeric value.
        std::fs::write(&path, format!("{SPECTRUM_HEADER}\n1.0,zap,N,0.0\n")).unwrap();
        let err = read_spectrum(&path, Extrapolation::Constant).unwrap_err();
        assert!(err.to_string().contains("value"), "{err}");
        // Form flips mid-file.
        std::fs::write(
            &path,
            format!("{SPECTRUM_HEADER}\n1.0,1.0,N,0.0\n2.0,1.0,n,0.0\n"),
        )
        .unwrap();
        assert!(read_spectrum(&path, Extrapolation::Constant).is_err());
        // Nodes not log-uniform.
        std::fs::write(
            &path,
            format!("{SPECTRUM_HEADER}\n1.0,1.0,N,0.0\n2.0,1.0,N,0.0\n3.0,1.0,N,0.0\n"),
        )
        .unwrap();
        assert!(read_spectrum(&path, Extrapolation::Constant).is_err());
    }

    #[test]
    fn diagnostics_header_is_exact() {
        let path = scratch("diag.csv");
        let params = ModelParams::new(0.0, 2, 0.0).unwrap();
        let field = bump_field();
        let rec = DiagnosticsRecord::compute(0.0, &field, &params).unwrap();
        let steps = vec![StepRecord {
            t: 0.0,
            dt: 0.0,
            extrapolated_fraction: 0.0,
            diagnostics: rec,
        }];
        write_diagnostics(&path, &steps).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), DIAGNOSTICS_HEADER);
        let row = lines.next().unwrap();
        assert_eq!(row.split(',').count(), 10);
        assert!(lines.next().is_none());
    }

    #[test]
    fn xy_files_roundtrip_textually() {
        let path = scratch("curve.csv");
        let pts = [(0.1, -1.5), (0.05, -0.75)];
        write_xy(&path, ("eps", "log_norm"), &pts).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("eps,log_norm\n"));
        assert_eq!(text.lines().count(), 3);
    }
}
