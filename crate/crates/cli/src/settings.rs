//! Pipeline configuration: defaults, then a `key = value` file, then
//! `--set key=value` flags, each layer overriding the last.

use std::path::Path;

use shapekit::PipelineConfig;

use crate::error::{exit, CliError, CliResult};

fn bad(msg: impl Into<String>) -> CliError {
    CliError::new("InvalidConfig", msg, exit::CONFIG)
}

fn parse_table(text: &str, origin: &str) -> CliResult<toml::Table> {
    text.parse::<toml::Table>()
        .map_err(|e| bad(format!("{origin}: {e}")))
}

pub fn load_config(file: Option<&Path>, sets: &[String]) -> CliResult<PipelineConfig> {
    let mut table =
        toml::Table::try_from(PipelineConfig::default()).map_err(|e| bad(e.to_string()))?;
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        table.extend(parse_table(&text, &path.display().to_string())?);
    }
    for s in sets {
        let (key, value) = s
            .split_once('=')
            .ok_or_else(|| bad(format!("`--set {s}`: expected key=value")))?;
        table.extend(parse_table(
            &format!("{} = {}", key.trim(), value.trim()),
            &format!("--set {s}"),
        )?);
    }
    // integers are accepted where floats are expected
    let defaults =
        toml::Table::try_from(PipelineConfig::default()).map_err(|e| bad(e.to_string()))?;
    for (k, v) in table.iter_mut() {
        if let (Some(toml::Value::Float(_)), toml::Value::Integer(i)) = (defaults.get(k), &*v) {
            *v = toml::Value::Float(*i as f64);
        }
    }
    let cfg: PipelineConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| bad(e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layers_override_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "k_a = 3\ngeo_weight = 20\n").unwrap();
        let cfg = load_config(Some(&path), &["k_a = 7".into()]).unwrap();
        assert_eq!(cfg.k_a, 7);
        assert_eq!(cfg.geo_weight, 20.0);
        assert_eq!(cfg.tau_match, 0.25);
        assert_eq!(load_config(None, &[]).unwrap(), PipelineConfig::default());
    }

    #[test]
    fn bad_layers_are_rejected() {
        assert_eq!(
            load_config(None, &["nope=1".into()]).unwrap_err().code,
            "InvalidConfig"
        );
        assert_eq!(
            load_config(None, &["k_a".into()]).unwrap_err().code,
            "InvalidConfig"
        );
        assert_eq!(
            load_config(None, &["tau_match=-1".into()])
                .unwrap_err()
                .code,
            "InvalidConfig"
        );
        let missing = load_config(Some(Path::new("/nonexistent/c.toml")), &[]).unwrap_err();
        assert_eq!(missing.code, "IoError");
    }
}
