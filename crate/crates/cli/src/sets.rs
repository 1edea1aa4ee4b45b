//! Point-set arguments: `cube:NxD` for {0..N}^D, `list:a,b,c` for a set of
//! integers, anything else is a file (JSON rows or whitespace text).

use cube_energy::lattice::{io, PointSet};

use crate::Failure;

pub struct LoadedSet {
    pub set: PointSet,
    /// The file it came from, if any.
    pub path: Option<String>,
}

pub fn parse_cube(s: &str) -> Result<(u32, usize), Failure> {
    let body = s.strip_prefix("cube:").unwrap_or(s);
    let bad = || Failure::Usage(format!("bad cube {s:?}; expected cube:NxD"));
    let (n, d) = body.split_once('x').ok_or_else(bad)?;
    let n: u32 = n.parse().map_err(|_| bad())?;
    let d: usize = d.parse().map_err(|_| bad())?;
    if n == 0 || d == 0 {
        return Err(Failure::Usage(format!(
            "cube {s:?} needs N >= 1 and D >= 1"
        )));
    }
    Ok((n, d))
}

pub fn load(spec: &str) -> Result<LoadedSet, Failure> {
    if spec.starts_with("cube:") {
        let (n, d) = parse_cube(spec)?;
        return Ok(LoadedSet {
            set: PointSet::cube(n, d),
            path: None,
        });
    }
    if let Some(list) = spec.strip_prefix("list:") {
        let values = list
            .split(',')
            .map(|t| t.trim().parse::<i64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Failure::Usage(format!("bad list {spec:?}: {e}")))?;
        if values.is_empty() {
            return Err(Failure::Usage("empty list".into()));
        }
        return Ok(LoadedSet {
            set: PointSet::from_integers(values),
            path: None,
        });
    }
    let text = std::fs::read_to_string(spec)
        .map_err(|e| Failure::Usage(format!("cannot read point set {spec:?}: {e}")))?;
    Ok(LoadedSet {
        set: io::parse_point_set(&text)?,
        path: Some(spec.to_string()),
    })
}
