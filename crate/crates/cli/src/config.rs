//! Plain-text `key = value` files standing in for command-line flags.
//!
//! Keys are long flag names without the dashes. A boolean flag is written
//! `key = true` (or `false` to leave it off). Repeatable flags repeat the
//! key. Blank lines and lines starting with `#` are ignored. Values given on
//! the command line win: a key that also appears as a flag is dropped from
//! the file.
//!
//! Compare manifests use the same format, so a manifest can be fed back with
//! `--replay`.

use std::path::Path;

use clap::CommandFactory;
use stepsvm::Error;

use crate::Cli;

pub fn parse(text: &str) -> Result<Vec<(String, String)>, Error> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            message: format!("expected key = value, found {line:?}"),
        })?;
        let k = k.trim();
        if k.is_empty() || k.starts_with('-') {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("bad key {k:?}"),
            });
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn read(path: &Path) -> Result<Vec<(String, String)>, Error> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse(&text)
}

/// Formats entries in the same syntax `parse` reads.
pub fn render(header: &str, entries: &[(String, String)]) -> String {
    let mut s = format!("# {header}\n");
    for (k, v) in entries {
        s.push_str(k);
        s.push_str(" = ");
        s.push_str(v);
        s.push('\n');
    }
    s
}

const FILE_FLAGS: [&str; 2] = ["config", "replay"];

fn flag_value(args: &[String], name: &str) -> Result<Option<String>, Error> {
    let long = format!("--{name}");
    let prefix = format!("--{name}=");
    let mut found = None;
    for (i, a) in args.iter().enumerate() {
        if *a == long {
            let v = args
                .get(i + 1)
                .ok_or_else(|| Error::Validation(format!("{long} needs a value")))?;
            found = Some(v.clone());
        } else if let Some(v) = a.strip_prefix(&prefix) {
            found = Some(v.to_string());
        }
    }
    Ok(found)
}

fn mentions(args: &[String], key: &str) -> bool {
    let long = format!("--{key}");
    let prefix = format!("--{key}=");
    args.iter().any(|a| *a == long || a.starts_with(&prefix))
}

/// Expands `--config` / `--replay` files into flags placed right after the
/// subcommand name, skipping keys the user passed explicitly.
pub fn expand(args: Vec<String>) -> Result<Vec<String>, Error> {
    let config = flag_value(&args, "config")?;
    let replay = flag_value(&args, "replay")?;
    let file = match (config, replay) {
        (None, None) => return Ok(args),
        (Some(_), Some(_)) => {
            return Err(Error::Validation("use either --config or --replay, not both".into()));
        }
        (Some(p), None) | (None, Some(p)) => p,
    };
    let entries = read(Path::new(&file))?;
    let root = Cli::command();
    let Some((pos, sub)) = args
        .iter()
        .enumerate()
        .skip(1)
        .find_map(|(i, a)| root.find_subcommand(a).map(|s| (i, s.clone())))
    else {
        // No subcommand: let clap report it.
        return Ok(args);
    };
    let mut injected = Vec::new();
    for (key, value) in entries {
        if FILE_FLAGS.contains(&key.as_str()) {
            return Err(Error::Validation(format!("{key} cannot be set from a file")));
        }
        if mentions(&args, &key) {
            continue;
        }
        let arg = sub
            .get_arguments()
            .chain(root.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| Error::Validation(format!("unknown key {key:?} in {file}")))?;
        if arg.get_action().takes_values() {
            injected.push(format!("--{key}"));
            injected.push(value);
        } else {
            match value.as_str() {
                "true" => injected.push(format!("--{key}")),
                "false" => {}
                _ => return Err(Error::Validation(format!("{key} expects true or false, got {value:?}"))),
            }
        }
    }
    let mut out = args[..=pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_render_agree() {
        let e = vec![
            ("data".to_string(), "a b.csv".to_string()),
            ("method".to_string(), "stepwise,kernel=rbf:gamma=0.5".to_string()),
        ];
        assert_eq!(parse(&render("x", &e)).unwrap(), e);
        assert!(parse("just words\n").is_err());
        assert!(parse("--data = x\n").is_err());
    }

    #[test]
    fn command_line_wins() {
        let dir = std::env::temp_dir().join(format!("stepsvm-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.txt");
        std::fs::write(&path, "seed = 5\nreps = 3\nno-standardize = true\nmethod = pca\n").unwrap();
        let args: Vec<String> = ["stepsvm", "compare", "--config", path.to_str().unwrap(), "--seed", "9"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let out = expand(args).unwrap();
        assert_eq!(
            out[..8],
            ["stepsvm", "compare", "--reps", "3", "--no-standardize", "--method", "pca", "--config"].map(String::from)
        );
        assert!(out.ends_with(&["--seed".to_string(), "9".to_string()]));
        std::fs::write(&path, "bogus = 1\n").unwrap();
        let args: Vec<String> = ["stepsvm", "compare", "--config", path.to_str().unwrap()]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert!(expand(args).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
