use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use bipartite_bft::analysis::SummaryRow;
use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

/// `<root>/<scenario>/<timestamp>/`, recorded in `<root>/<scenario>/latest`.
pub struct RunDir {
    pub path: PathBuf,
    gzip: bool,
}

impl RunDir {
    pub fn create(root: &Path, scenario: &str, gzip: bool) -> Result<Self> {
        let parent = root.join(scenario);
        fs::create_dir_all(&parent).with_context(|| format!("creating {}", parent.display()))?;
        let millis = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0);
        let mut stamp = millis.to_string();
        let mut n = 1;
        while parent.join(&stamp).exists() {
            stamp = format!("{millis}-{n}");
            n += 1;
        }
        let path = parent.join(&stamp);
        fs::create_dir(&path).with_context(|| format!("creating {}", path.display()))?;
        fs::write(parent.join("latest"), format!("{stamp}\n"))?;
        Ok(Self { path, gzip })
    }

    /// Writes `name`, gzipped with a `.gz` suffix when requested.
    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        if self.gzip {
            let path = self.path.join(format!("{name}.gz"));
            let mut enc = GzEncoder::new(BufWriter::new(File::create(&path)?), Compression::default());
            enc.write_all(contents.as_bytes())?;
            enc.finish()?.flush()?;
            Ok(path)
        } else {
            let path = self.path.join(name);
            fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
            Ok(path)
        }
    }

    pub fn write_summary(&self, rows: &[SummaryRow]) -> Result<PathBuf> {
        let path = self.path.join("summary.csv");
        let mut w = csv::Writer::from_path(&path)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(path)
    }
}

/// The directory `latest` points at.
pub fn latest(root: &Path, scenario: &str) -> Result<PathBuf> {
    let parent = root.join(scenario);
    let stamp = fs::read_to_string(parent.join("latest"))?;
    Ok(parent.join(stamp.trim()))
}

/// Reads a file, gunzipping when it ends in `.gz`.
pub fn read_text(path: &Path) -> Result<String> {
    let mut s = String::new();
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    if path.extension().is_some_and(|e| e == "gz") {
        GzDecoder::new(f).read_to_string(&mut s)?;
    } else {
        std::io::BufReader::new(f).read_to_string(&mut s)?;
    }
    Ok(s)
}
