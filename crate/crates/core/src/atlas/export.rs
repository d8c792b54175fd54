use std::io::{self, Write};

use super::{AspectMap, IndexField};

/// printf-style `%.{precision}g`.
pub fn format_g(v: f64, precision: usize) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let p = precision.max(1);
    let sci = format!("{:.*e}", p - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_fraction(mantissa), sign, exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp) as usize;
        trim_fraction(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `x,y,value` rows, row-major from `y_min`, `NaN` for unreachable vertices.
pub fn write_field_csv<W: Write>(field: &IndexField, mut out: W) -> io::Result<()> {
    let g = &field.grid;
    writeln!(out, "x,y,value")?;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let v = field.values[g.index(i, j)];
            writeln!(
                out,
                "{},{},{}",
                format_g(g.x(i), 12),
                format_g(g.y(j), 12),
                format_g(v, 12)
            )?;
        }
    }
    Ok(())
}

/// Binary PGM, top row = `y_max`; grey = round(255 index), unreachable = 0.
pub fn write_field_pgm<W: Write>(field: &IndexField, out: W) -> io::Result<()> {
    write_pgm(field.grid.nx, field.grid.ny, out, |k| {
        let v = field.values[k];
        if v.is_nan() {
            0
        } else {
            (255.0 * v).round().clamp(0.0, 255.0) as u8
        }
    })
}

/// `x,y,label` rows in the same order as [`write_field_csv`].
pub fn write_aspects_csv<W: Write>(map: &AspectMap, mut out: W) -> io::Result<()> {
    let g = &map.grid;
    writeln!(out, "x,y,label")?;
    for j in 0..g.ny {
        for i in 0..g.nx {
            writeln!(
                out,
                "{},{},{}",
                format_g(g.x(i), 12),
                format_g(g.y(j), 12),
                map.label(i, j)
            )?;
        }
    }
    Ok(())
}

/// Binary PGM with aspects spread evenly over grey levels 1..=255 and the
/// band at 0.
pub fn write_aspects_pgm<W: Write>(map: &AspectMap, out: W) -> io::Result<()> {
    let count = map.count.max(1) as f64;
    write_pgm(map.grid.nx, map.grid.ny, out, |k| match map.labels[k] {
        0 => 0,
        l => (255.0 * l as f64 / count).round().max(1.0) as u8,
    })
}

fn write_pgm<W: Write>(nx: usize, ny: usize, mut out: W, grey: impl Fn(usize) -> u8) -> io::Result<()> {
    write!(out, "P5\n{nx} {ny}\n255\n")?;
    let mut row = vec![0u8; nx];
    for j in (0..ny).rev() {
        for (i, px) in row.iter_mut().enumerate() {
            *px = grey(j * nx + i);
        }
        out.write_all(&row)?;
    }
    out.flush()
}
