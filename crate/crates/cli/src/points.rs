//! Reading point files: one point per line, comma- or whitespace-separated.
//! Blank lines and `#` comments are skipped; a first line holding exactly
//! the input names is treated as a header.

use hmatch_core::design::BoundingBox;
use hmatch_core::{Error, Result};

fn fields(line: &str) -> Vec<&str> {
    line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect()
}

pub fn parse_points(text: &str, input_names: &[String]) -> Result<Vec<Vec<f64>>> {
    let d = input_names.len();
    let mut points = Vec::new();
    let mut first = true;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let f = fields(line);
        if first {
            first = false;
            if f.len() == d && f.iter().zip(input_names).all(|(a, b)| a == b) {
                continue;
            }
        }
        if f.len() != d {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected {d} coordinates, found {}", f.len()),
            });
        }
        let mut p = Vec::with_capacity(d);
        for s in f {
            let v: f64 = s.parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("{s:?} is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("{s:?} is not finite"),
                });
            }
            p.push(v);
        }
        points.push(p);
    }
    if points.is_empty() {
        return Err(Error::Config("point file holds no points".into()));
    }
    Ok(points)
}

/// Rejects the first coordinate outside the simulator domain, by name.
pub fn check_domain(points: &[Vec<f64>], domain: &BoundingBox, input_names: &[String]) -> Result<()> {
    for (k, p) in points.iter().enumerate() {
        for (i, &v) in p.iter().enumerate() {
            if v < domain.lower[i] || v > domain.upper[i] {
                return Err(Error::Domain(format!(
                    "point {} coordinate {} = {v} outside [{}, {}]",
                    k + 1,
                    input_names[i],
                    domain.lower[i],
                    domain.upper[i]
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names() -> Vec<String> {
        vec!["a".into(), "b".into()]
    }

    #[test]
    fn header_comments_and_separators() {
        let p = parse_points("a,b\n# note\n0.1, 0.2\n\n-0.5 1e-1\n", &names()).unwrap();
        assert_eq!(p, vec![vec![0.1, 0.2], vec![-0.5, 0.1]]);
    }

    #[test]
    fn bad_token_names_line() {
        let err = parse_points("0 0\n0 x\n", &names()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn wrong_width_names_line() {
        let err = parse_points("# c\n0 0 0\n", &names()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn domain_error_names_coordinate() {
        let dom = BoundingBox::symmetric(2);
        let err = check_domain(&[vec![0.0, 1.5]], &dom, &names()).unwrap_err();
        assert!(err.to_string().contains("coordinate b = 1.5"), "{err}");
    }
}
