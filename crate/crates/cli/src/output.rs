//! CSV output: a `# schema=1` comment, a header row, LF line endings and
//! reals with 17 significant digits so identical runs give identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::CliError;

pub const SCHEMA_LINE: &str = "# schema=1";

pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn opt_real(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

pub struct CsvFile {
    path: PathBuf,
    out: BufWriter<File>,
}

impl CsvFile {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self, CliError> {
        let file = File::create(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut csv = Self {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        };
        csv.line(SCHEMA_LINE)?;
        csv.line(&header.join(","))?;
        Ok(csv)
    }

    fn line(&mut self, text: &str) -> Result<(), CliError> {
        writeln!(self.out, "{text}").map_err(|source| self.io(source))
    }

    pub fn row(&mut self, fields: &[String]) -> Result<(), CliError> {
        self.line(&fields.join(","))
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.out.flush().map_err(|source| self.io(source))
    }

    fn io(&self, source: std::io::Error) -> CliError {
        CliError::Io {
            path: self.path.clone(),
            source,
        }
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

pub fn write_profile(path: &Path, x: &[f64], u: &[f64]) -> Result<(), CliError> {
    let mut csv = CsvFile::create(path, &["x", "u"])?;
    for (x, u) in x.iter().zip(u) {
        csv.row(&[real(*x), real(*u)])?;
    }
    csv.finish()
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(real(0.1), "1.0000000000000001e-1");
        assert_eq!(real(-2.0), "-2.0000000000000000e0");
        assert_eq!(opt_real(None), "");
        let x = 1.0 / 3.0;
        assert_eq!(real(x).parse::<f64>().unwrap(), x);
    }
}
