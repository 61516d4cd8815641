//! `key=value` settings shared by config files and repeated CLI flags.

use lppl_core::{FilterConfig, ScanConfig, SearchConfig};

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_lines(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        out.push(parse_pair(line).map_err(|e| format!("line {}: {e}", n + 1))?);
    }
    Ok(out)
}

pub fn parse_pair(item: &str) -> Result<(String, String), String> {
    let (k, v) = item.split_once('=').ok_or_else(|| format!("expected key=value, got `{item}`"))?;
    let key = k.trim().to_ascii_lowercase();
    let value = v.trim().trim_matches('"').to_string();
    if key.is_empty() {
        return Err(format!("empty key in `{item}`"));
    }
    Ok((key, value))
}

fn number(key: &str, value: &str) -> Result<f64, String> {
    value.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| format!("{key}: `{value}` is not a number"))
}

fn count(key: &str, value: &str) -> Result<usize, String> {
    value.parse().map_err(|_| format!("{key}: `{value}` is not a non-negative integer"))
}

fn boolean(key: &str, value: &str) -> Result<bool, String> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("{key}: `{value}` is not a boolean")),
    }
}

pub fn list(key: &str, value: &str) -> Result<Vec<f64>, String> {
    value.split(',').filter(|s| !s.trim().is_empty()).map(|s| number(key, s.trim())).collect()
}

pub fn pair(key: &str, value: &str) -> Result<(f64, f64), String> {
    match list(key, value)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(format!("{key}: expected two comma-separated numbers, got `{value}`")),
    }
}

/// Applies one filter setting. Returns `Ok(false)` for unknown keys.
pub fn apply_filter(f: &mut FilterConfig, key: &str, value: &str) -> Result<bool, String> {
    match key {
        "m_min" => f.m_min = number(key, value)?,
        "m_max" => f.m_max = number(key, value)?,
        "omega_min" => f.omega_min = number(key, value)?,
        "omega_max" => f.omega_max = number(key, value)?,
        "tc_horizon" => f.tc_horizon = number(key, value)?,
        "max_rmse" => {
            f.max_rmse = match value.to_ascii_lowercase().as_str() {
                "none" | "" => None,
                _ => Some(number(key, value)?),
            }
        }
        "min_oscillations" => f.min_oscillations = number(key, value)?,
        "min_oscillation_snr" => f.min_oscillation_snr = number(key, value)?,
        "allow_in_sample_tc" => f.allow_in_sample_tc = boolean(key, value)?,
        _ => return Ok(false),
    }
    Ok(true)
}

pub fn apply_search(s: &mut SearchConfig, key: &str, value: &str) -> Result<bool, String> {
    match key {
        "starts" => s.starts = count(key, value)?,
        "tolerance" => s.tolerance = number(key, value)?,
        "max_evaluations" => s.max_evaluations = count(key, value)?,
        "polish_rounds" => s.polish_rounds = count(key, value)?,
        _ => return Ok(false),
    }
    Ok(true)
}

/// Applies any scan, search, filter or common setting; unknown keys are errors.
pub fn apply_scan(c: &mut ScanConfig, key: &str, value: &str) -> Result<(), String> {
    if apply_filter(&mut c.filters, key, value)? || apply_search(&mut c.search, key, value)? {
        return Ok(());
    }
    match key {
        "windows" | "window_lengths" => c.window_lengths = list(key, value)?,
        "every" => c.every = count(key, value)?,
        "end_dates" => c.end_dates = Some(list(key, value)?),
        "min_points" => c.min_points = count(key, value)?,
        "band" => c.band = pair(key, value)?,
        "seed" => c.seed = value.parse().map_err(|_| format!("seed: `{value}` is not an integer"))?,
        _ => return Err(format!("unknown setting `{key}`")),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_lines() {
        let text = "# defaults\nm_max = 0.9\nwindows=100,200 # two\n\nband = 0.05,0.95\nmax_rmse=none\n";
        let mut cfg = ScanConfig::default();
        for (k, v) in parse_lines(text).unwrap() {
            apply_scan(&mut cfg, &k, &v).unwrap();
        }
        assert_eq!(cfg.filters.m_max, 0.9);
        assert_eq!(cfg.window_lengths, vec![100.0, 200.0]);
        assert_eq!(cfg.band, (0.05, 0.95));
        assert_eq!(cfg.filters.max_rmse, None);
    }

    #[test]
    fn overlay_errors() {
        let mut cfg = ScanConfig::default();
        assert!(parse_lines("oops").is_err());
        assert!(apply_scan(&mut cfg, "nonsense", "1").is_err());
        assert!(apply_scan(&mut cfg, "m_max", "abc").is_err());
        assert!(apply_scan(&mut cfg, "band", "0.1").is_err());
        assert!(apply_scan(&mut cfg, "allow_in_sample_tc", "maybe").is_err());
    }
}
