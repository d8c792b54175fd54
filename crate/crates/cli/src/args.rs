//! Parsers for the compact value syntaxes used on the command line.

use linkfeel_core::kinematics::Interval;

/// `400x400` -> `(400, 400)`.
pub fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (nx, ny) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NXxNY, got {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    let grid = (parse(nx)?, parse(ny)?);
    if grid.0 < 2 || grid.1 < 2 {
        return Err("grid needs at least 2 vertices per axis".into());
    }
    Ok(grid)
}

/// Comma-separated floats, e.g. `1,0.8` or `-1.5,1.5`.
pub fn parse_floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}")))
        .collect()
}

pub fn parse_interval(s: &str) -> Result<Interval, String> {
    match parse_floats(s)?[..] {
        [lo, hi] => Interval::new(lo, hi).map_err(|e| e.to_string()),
        _ => Err(format!("expected LO,HI, got {s:?}")),
    }
}

/// `xmin,xmax,ymin,ymax`.
pub fn parse_bounds(s: &str) -> Result<[f64; 4], String> {
    parse_floats(s)?
        .try_into()
        .map_err(|_| format!("expected XMIN,XMAX,YMIN,YMAX, got {s:?}"))
}

/// Parses a unit enum through its serde name, e.g. `fivebar_composed`.
pub fn parse_serde<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use linkfeel_core::{FieldKind, Mechanism};

    #[test]
    fn grids() {
        assert_eq!(parse_grid("400x300"), Ok((400, 300)));
        assert!(parse_grid("400").is_err());
        assert!(parse_grid("1x5").is_err());
    }

    #[test]
    fn values() {
        assert_eq!(parse_floats("1, 0.5").unwrap(), vec![1.0, 0.5]);
        assert_eq!(parse_bounds("-2,2,-1,1").unwrap(), [-2.0, 2.0, -1.0, 1.0]);
        assert!(parse_bounds("1,2,3").is_err());
        assert!(parse_interval("1,-1").is_err());
        assert_eq!(parse_serde::<Mechanism>("fivebar"), Ok(Mechanism::FiveBar));
        assert_eq!(
            parse_serde::<FieldKind>("fivebar_inverse"),
            Ok(FieldKind::FiveBarInverse)
        );
    }
}
