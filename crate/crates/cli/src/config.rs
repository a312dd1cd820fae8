//! Flat `key = value` configuration, merged with command-line flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

pub fn failed(e: impl Display) -> CliError {
    CliError::Failed(e.to_string())
}

/// `(key, help)` for every option of a subcommand, `config` excluded.
pub fn keys(command: &str) -> &'static [(&'static str, &'static str)] {
    const VALIDATE: &[(&str, &str)] = &[
        ("dims", "lattice size as dx,dy,dz [default: 2,2,2]"),
        ("construction", "four-star, six-ring or all [default: all]"),
        ("format", "text or json [default: text]"),
        ("output", "write the report here instead of stdout"),
    ];
    const RATE: &[(&str, &str)] = &[
        ("construction", "four-star or six-ring"),
        ("pfail", "fusion failure probability"),
        ("ploss", "photon loss probability [default: 0]"),
        ("d", "linear lattice size"),
        ("dz", "lattice length along z [default: d]"),
        ("trials", "trials per point [default: 20000]"),
        ("seed", "master seed (required)"),
        ("aggregation", "long-axes, all-axes or per-plane [default: long-axes]"),
        ("correlated-loss", "joint or independent [default: joint]"),
        ("loss-order", "loss-first or marginal [default: loss-first]"),
        ("format", "csv or json [default: csv]"),
        ("output", "write results here instead of stdout"),
        ("workers", "worker threads [default: all cores]"),
    ];
    const SWEEP: &[(&str, &str)] = &[
        ("construction", "four-star or six-ring"),
        ("pfail", "comma-separated failure probabilities"),
        ("ploss", "comma-separated loss probabilities [default: 0]"),
        ("d", "comma-separated linear sizes [default: 8,12,16]"),
        ("dz", "lattice length along z [default: d]"),
        ("trials", "trials per point [default: 20000]"),
        ("seed", "master seed (required)"),
        ("aggregation", "long-axes, all-axes or per-plane [default: long-axes]"),
        ("correlated-loss", "joint or independent [default: joint]"),
        ("loss-order", "loss-first or marginal [default: loss-first]"),
        ("format", "csv or json [default: csv]"),
        ("output", "write results here instead of stdout"),
        ("workers", "worker threads [default: all cores]"),
    ];
    const THRESHOLD: &[(&str, &str)] = &[
        ("construction", "four-star or six-ring"),
        ("pfail", "failure probability, or the swept list when varying p_fail"),
        ("ploss", "loss probability, or the swept list when varying p_loss [default: 0]"),
        ("vary", "fail or loss [default: fail]"),
        ("proxy", "decoder or percolation [default: decoder]"),
        ("d", "comma-separated linear sizes [default: 8,12,16]"),
        ("dz", "lattice length along z [default: d]"),
        ("trials", "trials per point [default: 20000]"),
        ("seed", "master seed (required)"),
        ("aggregation", "long-axes, all-axes or per-plane [default: long-axes]"),
        ("correlated-loss", "joint or independent [default: joint]"),
        ("loss-order", "loss-first or marginal [default: loss-first]"),
        ("bootstrap-reps", "bootstrap resamples for the uncertainty [default: 100]"),
        ("fit-window", "points per size in the scaling fit, 0 for all [default: 4]"),
        ("format", "csv or json [default: csv]"),
        ("output", "write results here instead of stdout"),
        ("workers", "worker threads [default: all cores]"),
    ];
    const CURVE: &[(&str, &str)] = &[
        ("construction", "four-star or six-ring"),
        ("pfail-presets", "comma-separated failure probabilities [default: 0.5,0.25,0.125]"),
        ("d", "comma-separated linear sizes [default: 8,12,16]"),
        ("dz", "lattice length along z [default: d]"),
        ("trials", "trials per point [default: 20000]"),
        ("seed", "master seed (required)"),
        ("aggregation", "long-axes, all-axes or per-plane [default: long-axes]"),
        ("correlated-loss", "joint or independent [default: joint]"),
        ("loss-order", "loss-first or marginal [default: loss-first]"),
        ("loss-tolerance", "bisection tolerance on p_loss [default: 0.0005]"),
        ("bootstrap-reps", "bootstrap resamples for the uncertainty [default: 100]"),
        ("fit-window", "points per size in the scaling fit, 0 for all [default: 4]"),
        ("format", "csv or json [default: csv]"),
        ("output", "write results here instead of stdout"),
        ("workers", "worker threads [default: all cores]"),
    ];
    match command {
        "validate" => VALIDATE,
        "rate" => RATE,
        "sweep" => SWEEP,
        "threshold" => THRESHOLD,
        "curve" => CURVE,
        _ => &[],
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", n + 1)))?;
        out.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(out)
}

/// Options after merging the config file with flags.
#[derive(Clone, Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn resolve(
        command: &str,
        file: Option<BTreeMap<String, String>>,
        flags: Vec<(String, String)>,
    ) -> Result<Self, CliError> {
        let mut values = file.unwrap_or_default();
        let allowed = keys(command);
        let unknown: Vec<&String> = values
            .keys()
            .filter(|k| !allowed.iter().any(|(a, _)| a == k))
            .collect();
        if !unknown.is_empty() {
            let list: Vec<&str> = unknown.iter().map(|s| s.as_str()).collect();
            return Err(CliError::Usage(format!(
                "unknown config keys for {command}: {}",
                list.join(", ")
            )));
        }
        values.extend(flags);
        Ok(Self { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("--{key} {v:?}: {e}")))
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        self.get(key)?
            .ok_or_else(|| CliError::Usage(format!("--{key} is required")))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError>
    where
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<T>()
                            .map_err(|e| CliError::Usage(format!("--{key} {x:?}: {e}")))
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn list_or<T: FromStr>(&self, key: &str, default: &str) -> Result<Vec<T>, CliError>
    where
        T::Err: Display,
    {
        match self.list(key)? {
            Some(v) if !v.is_empty() => Ok(v),
            Some(_) => Err(CliError::Usage(format!("--{key} is empty"))),
            None => Settings {
                values: [(key.to_string(), default.to_string())].into(),
            }
            .list(key)
            .map(|v| v.unwrap_or_default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_underscores() {
        let m = parse_config("# sweep\nconstruction = six-ring\nloss_order=marginal # note\n\n").unwrap();
        assert_eq!(m["construction"], "six-ring");
        assert_eq!(m["loss-order"], "marginal");
        assert!(parse_config("no equals sign").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = parse_config("seed = 1\ntrials = 10").unwrap();
        let s = Settings::resolve("rate", Some(file), vec![("seed".into(), "7".into())]).unwrap();
        assert_eq!(s.require::<u64>("seed").unwrap(), 7);
        assert_eq!(s.get_or::<u64>("trials", 5).unwrap(), 10);
    }

    #[test]
    fn unknown_keys_listed() {
        let file = parse_config("seed = 1\ncolour = red\nsize = 3").unwrap();
        let e = Settings::resolve("rate", Some(file), vec![]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("colour, size"));
    }

    #[test]
    fn lists_and_defaults() {
        let s = Settings::resolve("sweep", None, vec![("pfail".into(), "0.1, 0.2".into())]).unwrap();
        assert_eq!(s.list_or::<f64>("pfail", "0").unwrap(), vec![0.1, 0.2]);
        assert_eq!(s.list_or::<usize>("d", "8,12,16").unwrap(), vec![8, 12, 16]);
        assert!(s.require::<u64>("seed").is_err());
    }
}
