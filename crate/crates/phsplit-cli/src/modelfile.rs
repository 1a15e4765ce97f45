//! Plain-text matrix file for custom models.
//!
//! Format: first line `n p`, then `n` rows of `J`, `n` rows of `R`,
//! `n` rows of `B` (omitted entirely when `p = 0`), all
//! whitespace-separated. An optional trailing row of `n` values sets the
//! initial state; it defaults to the first basis vector.

use phsplit::matcore::Matrix;
use phsplit::{Real, System};

pub struct CustomModel {
    pub system: System,
    pub x0: Vec<Real>,
}

pub fn parse(text: &str, tol: Real) -> Result<CustomModel, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty model file")?;
    let mut head = header.split_whitespace();
    let n: usize = head
        .next()
        .ok_or("missing state dimension")?
        .parse()
        .map_err(|e| format!("bad state dimension: {e}"))?;
    let p: usize = head
        .next()
        .ok_or("missing port dimension")?
        .parse()
        .map_err(|e| format!("bad port dimension: {e}"))?;
    if n == 0 {
        return Err("state dimension must be positive".into());
    }

    let values: Vec<Real> = lines
        .flat_map(|l| l.split_whitespace())
        .map(|tok| tok.parse::<Real>().map_err(|e| format!("bad entry '{tok}': {e}")))
        .collect::<Result<_, _>>()?;

    let body = n * n + n * n + n * p;
    let x0 = match values.len() {
        len if len == body => (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect(),
        len if len == body + n => values[body..].to_vec(),
        len => {
            return Err(format!(
                "expected {body} matrix entries (plus optionally {n} for x0), found {len}"
            ))
        }
    };

    let j = Matrix::from_vec(n, n, values[..n * n].to_vec()).map_err(|e| e.to_string())?;
    let r =
        Matrix::from_vec(n, n, values[n * n..2 * n * n].to_vec()).map_err(|e| e.to_string())?;
    let b =
        Matrix::from_vec(n, p, values[2 * n * n..body].to_vec()).map_err(|e| e.to_string())?;
    let system =
        phsplit::phmodel::PHSystem::new_with_tol(j, r, b, tol).map_err(|e| e.to_string())?;
    Ok(CustomModel { system, x0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_driven_two_by_two() {
        let text = "2 1\n0 3 -3 0\n0 0 0 1\n0 -1\n";
        let model = parse(text, 1e-12).unwrap();
        assert_eq!(model.system.dim(), 2);
        assert_eq!(model.system.ports(), 1);
        assert_eq!(model.x0, vec![1.0, 0.0]);
    }

    #[test]
    fn parses_autonomous_with_x0() {
        let text = "2 0\n0 1\n-1 0\n0 0\n0 0\n0.5 0.5\n";
        let model = parse(text, 1e-12).unwrap();
        assert_eq!(model.system.ports(), 0);
        assert_eq!(model.x0, vec![0.5, 0.5]);
    }

    #[test]
    fn rejects_bad_counts_and_structure() {
        assert!(parse("2 0\n0 1 -1\n", 1e-12).is_err());
        // J not skew
        assert!(parse("2 0\n1 0 0 1\n0 0 0 0\n", 1e-12).is_err());
    }
}
