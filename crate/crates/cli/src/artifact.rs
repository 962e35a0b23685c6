use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};

/// Header lines identifying the tool, the exact invocation and the seed.
/// Wall-clock data is deliberately absent so reruns are byte-identical.
#[derive(Clone, Debug)]
pub struct Provenance {
    pub args: Vec<String>,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn from_env() -> Self {
        Self { args: std::env::args().skip(1).collect(), seed: None }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed: Some(seed), ..self.clone() }
    }

    /// Header lines without the comment marker.
    pub fn lines(&self) -> Vec<String> {
        let mut out = vec![format!("rach {}", env!("CARGO_PKG_VERSION")), format!("args: {}", self.args.join(" "))];
        out.push(match self.seed {
            Some(s) => format!("seed: {s}"),
            None => "seed: none".to_string(),
        });
        out
    }

    /// Header as `# `-prefixed text, followed by `extra` lines.
    pub fn comment_block(&self, extra: &[String]) -> String {
        self.lines().iter().chain(extra).map(|l| format!("# {l}\n")).collect()
    }
}

/// Writes `contents` to a temporary file next to `path`, then renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("writing into {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}
