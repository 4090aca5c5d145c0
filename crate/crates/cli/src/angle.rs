//! Angles written as decimal radians or as rational multiples of π.
//!
//! Accepted forms: `0.3927`, `-1e-2`, `pi`, `-pi/2`, `3pi/8`, `3*pi/8`, `π/4`.

use std::f64::consts::PI;

/// Largest denominator tried when formatting.
const MAX_DENOMINATOR: u32 = 64;

pub fn parse_angle(text: &str) -> Result<f64, String> {
    let t = text.trim();
    let bad = || format!("bad angle {text:?}: expected radians or a form like 3pi/8");
    let Some(pos) = t.find("pi").map(|p| (p, 2)).or_else(|| t.find('π').map(|p| (p, 'π'.len_utf8())))
    else {
        let v: f64 = t.parse().map_err(|_| bad())?;
        return if v.is_finite() { Ok(v) } else { Err(bad()) };
    };
    let (head, tail) = (&t[..pos.0], &t[pos.0 + pos.1..]);
    let head = head.strip_suffix('*').unwrap_or(head);
    let numerator: i64 = match head {
        "" | "+" => 1,
        "-" => -1,
        digits => digits.parse().map_err(|_| bad())?,
    };
    let denominator: u32 = match tail {
        "" => 1,
        _ => tail
            .strip_prefix('/')
            .and_then(|d| d.parse().ok())
            .filter(|&d| d > 0)
            .ok_or_else(bad)?,
    };
    Ok(rational_pi(numerator, denominator))
}

fn rational_pi(numerator: i64, denominator: u32) -> f64 {
    numerator as f64 * PI / denominator as f64
}

/// `Npi/M` when `θ` is exactly such a value with `M ≤ 64`, decimal otherwise.
/// [`parse_angle`] inverts it bit for bit.
pub fn format_angle(theta: f64) -> String {
    if theta == 0.0 {
        return "0".to_string();
    }
    for m in 1..=MAX_DENOMINATOR {
        let n = (theta * m as f64 / PI).round();
        if n.abs() > 1e6 {
            break;
        }
        let n = n as i64;
        if rational_pi(n, m) == theta {
            let num = match n {
                1 => String::new(),
                -1 => "-".to_string(),
                _ => n.to_string(),
            };
            return if m == 1 { format!("{num}pi") } else { format!("{num}pi/{m}") };
        }
    }
    format!("{theta:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_of_pi() {
        assert_eq!(parse_angle("3pi/8").unwrap(), 3.0 * PI / 8.0);
        assert_eq!(parse_angle("pi/4").unwrap(), PI / 4.0);
        assert_eq!(parse_angle("-pi/2").unwrap(), -PI / 2.0);
        assert_eq!(parse_angle("2*pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_angle("π/3").unwrap(), PI / 3.0);
        assert_eq!(parse_angle(" 0.25 ").unwrap(), 0.25);
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "pi/0", "3pi/", "pi/x", "x", "nan", "inf", "3pi8", "1.5pi"] {
            assert!(parse_angle(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn formats_exact_fractions() {
        assert_eq!(format_angle(3.0 * PI / 8.0), "3pi/8");
        assert_eq!(format_angle(-PI / 2.0), "-pi/2");
        assert_eq!(format_angle(PI), "pi");
        assert_eq!(format_angle(0.0), "0");
        assert_eq!(format_angle(0.1), "0.1");
    }
}
