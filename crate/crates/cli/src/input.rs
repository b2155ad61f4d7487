//! Input multisets from the command line and from JSON files.

use std::path::Path;

use robustpp::model::Input;

use crate::commands::CliError;

/// Expands `x=1..3,y=2` into every input of the cartesian product.
pub fn expand(spec: &str) -> Result<Vec<Input>, CliError> {
    let bad = || CliError::Usage(format!("malformed input `{spec}`"));
    let mut out = vec![Input::new()];
    for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (var, value) = part.split_once('=').ok_or_else(bad)?;
        let var = var.trim();
        if var.is_empty() {
            return Err(bad());
        }
        let (lo, hi) = match value.split_once("..") {
            Some((lo, hi)) => {
                let hi = hi.strip_prefix('=').unwrap_or(hi);
                (
                    parse_count(lo).ok_or_else(bad)?,
                    parse_count(hi).ok_or_else(bad)?,
                )
            }
            None => {
                let n = parse_count(value).ok_or_else(bad)?;
                (n, n)
            }
        };
        if lo > hi {
            return Err(bad());
        }
        out = out
            .into_iter()
            .flat_map(|a| (lo..=hi).map(move |n| a.clone().with(var, n)))
            .collect();
    }
    if out.len() == 1 && out[0].size() == 0 && !spec.contains('=') {
        return Err(bad());
    }
    Ok(out)
}

fn parse_count(s: &str) -> Option<u64> {
    s.trim().parse().ok()
}

/// Reads `{"x": 5}` or `[{"x": 5}, …]`.
pub fn from_file(path: &Path) -> Result<Vec<Input>, CliError> {
    let text = crate::commands::read(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let parsed = if value.is_array() {
        serde_json::from_value::<Vec<Input>>(value)
    } else {
        serde_json::from_value::<Input>(value).map(|a| vec![a])
    };
    parsed.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// All inputs named by repeated `--input` flags and an optional file.
pub fn collect(specs: &[String], file: Option<&Path>) -> Result<Vec<Input>, CliError> {
    let mut out = Vec::new();
    for s in specs {
        out.extend(expand(s)?);
    }
    if let Some(f) = file {
        out.extend(from_file(f)?);
    }
    if out.is_empty() {
        return Err(CliError::Usage("no inputs given".into()));
    }
    Ok(out)
}
