//! Report envelope, number rounding and JSON/CSV emission.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::commands::CliError;
use crate::{Cli, Command, Format};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INTERNAL: u8 = 1;
pub const EXIT_DOMAIN: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

const SIGNIFICANT: usize = 12;

/// Rounds every non-integer number to 12 significant digits.
pub fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if !n.is_i64() && !n.is_u64() => {
            if let Some(x) = n.as_f64() {
                let r: f64 = format!("{:.*e}", SIGNIFICANT - 1, x).parse().unwrap_or(x);
                if let Some(m) = serde_json::Number::from_f64(r) {
                    *n = m;
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_numbers),
        Value::Object(o) => o.values_mut().for_each(round_numbers),
        _ => {}
    }
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(o) if !o.is_empty() => {
            for (k, x) in o {
                flatten(&key(k), x, rows);
            }
        }
        Value::Array(a) if !a.is_empty() => {
            for (i, x) in a.iter().enumerate() {
                flatten(&key(&i.to_string()), x, rows);
            }
        }
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        Value::Null => rows.push((prefix.to_string(), String::new())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

/// `key,value` rows with dotted paths.
pub fn to_csv(v: &Value) -> Result<String, String> {
    let mut rows = Vec::new();
    flatten("", v, &mut rows);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["key", "value"]).map_err(|e| e.to_string())?;
    for (k, x) in rows {
        w.write_record([k, x]).map_err(|e| e.to_string())?;
    }
    String::from_utf8(w.into_inner().map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

pub fn render(v: &Value, format: Format) -> Result<String, String> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(v).map_err(|e| e.to_string())?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => to_csv(v),
    }
}

fn envelope(cli: &Cli, wall: f64) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("tool_version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("command".into(), json!(cli.command.name()));
    m.insert("seed".into(), json!(cli.common.seed));
    m.insert("tolerances".into(), json!({ "tolerance": cli.common.tolerance }));
    m.insert("wall_time_s".into(), json!(wall));
    m
}

/// Writes the report and returns the exit code.
pub fn finish(cli: &Cli, outcome: Result<Value, CliError>, wall: f64) -> u8 {
    let mut report = envelope(cli, wall);
    let code = match outcome {
        Ok(Value::Object(fields)) => {
            report.insert("status".into(), json!("ok"));
            report.extend(fields);
            EXIT_OK
        }
        Ok(other) => {
            report.insert("status".into(), json!("ok"));
            report.insert("value".into(), other);
            EXIT_OK
        }
        Err(e) => {
            eprintln!("gurarij: {e}");
            let code = match e {
                CliError::Internal(_) => EXIT_INTERNAL,
                CliError::Domain { .. } => EXIT_DOMAIN,
            };
            report.insert("status".into(), json!("error"));
            report.insert("error".into(), e.to_value());
            code
        }
    };
    let mut report = Value::Object(report);
    round_numbers(&mut report);
    let text = match render(&report, cli.common.format) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("gurarij: cannot render report: {e}");
            return EXIT_INTERNAL;
        }
    };
    // `build` writes its manifest to --out; the report always goes to stdout
    let dest: Option<&Path> = match cli.command {
        Command::Build { .. } => None,
        _ => cli.common.out.as_deref(),
    };
    let written = match dest {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| e.to_string()),
    };
    match written {
        Ok(()) => code,
        Err(e) => {
            eprintln!("gurarij: cannot write report: {e}");
            EXIT_INTERNAL
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_integers_and_cuts_digits() {
        let mut v = json!({"a": 7, "b": 0.1 + 0.2, "c": [1.0 / 3.0, -2.5e-20], "d": u64::MAX});
        round_numbers(&mut v);
        assert_eq!(v["a"], json!(7));
        assert_eq!(v["b"], json!(0.3));
        assert_eq!(v["c"][0], json!(0.333333333333));
        assert_eq!(v["c"][1], json!(-2.5e-20));
        assert_eq!(v["d"], json!(u64::MAX));
    }

    #[test]
    fn csv_flattens_paths() {
        let v = json!({"value": 7.0, "r": {"x": [1, 2]}, "name": "a,b", "none": null});
        let s = to_csv(&v).unwrap();
        assert_eq!(s, "key,value\nname,\"a,b\"\nnone,\nr.x.0,1\nr.x.1,2\nvalue,7.0\n");
    }
}
