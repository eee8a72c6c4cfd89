use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use super::{Cost, Instance, ModelError, Solution};

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Header,
    Coords,
    Demands,
    Depots,
}

fn parse_err(line: usize, msg: impl Into<String>) -> ModelError {
    ModelError::Parse { line, msg: msg.into() }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, ModelError> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| parse_err(line, format!("bad {what} `{tok}`")))
}

/// Parses the EUC_2D subset of TSPLIB used by CVRPLIB.
///
/// File vertex ids are re-indexed so the depot becomes vertex 0 and the
/// remaining vertices keep their relative file order as customers `1..=n`.
pub fn parse_instance(text: &str) -> Result<Instance, ModelError> {
    let mut name = None;
    let mut dimension: Option<usize> = None;
    let mut capacity: Option<i64> = None;
    let mut weight_type = None;
    let mut coords: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    let mut demands: HashMap<i64, i64> = HashMap::new();
    let mut depots: Vec<i64> = Vec::new();
    let mut section = Section::Header;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "EOF" {
            break;
        }
        match line {
            "NODE_COORD_SECTION" => {
                section = Section::Coords;
                continue;
            }
            "DEMAND_SECTION" => {
                section = Section::Demands;
                continue;
            }
            "DEPOT_SECTION" => {
                section = Section::Depots;
                continue;
            }
            _ => {}
        }
        if let Some((key, value)) = line.split_once(':') {
            let key = key.trim();
            let value = value.trim();
            match key {
                "NAME" => name = Some(value.to_string()),
                "DIMENSION" => dimension = Some(field(Some(value), lineno, "DIMENSION")?),
                "CAPACITY" => capacity = Some(field(Some(value), lineno, "CAPACITY")?),
                "EDGE_WEIGHT_TYPE" => weight_type = Some(value.to_string()),
                "TYPE" | "COMMENT" => {}
                other if section == Section::Header => {
                    return Err(parse_err(lineno, format!("unknown keyword `{other}`")));
                }
                _ => return Err(parse_err(lineno, format!("unexpected `{line}`"))),
            }
            section = Section::Header;
            continue;
        }
        let mut toks = line.split_whitespace();
        match section {
            Section::Header => return Err(parse_err(lineno, format!("unexpected `{line}`"))),
            Section::Coords => {
                let id: i64 = field(toks.next(), lineno, "vertex id")?;
                let x: f64 = field(toks.next(), lineno, "x coordinate")?;
                let y: f64 = field(toks.next(), lineno, "y coordinate")?;
                if coords.insert(id, (x, y)).is_some() {
                    return Err(parse_err(lineno, format!("vertex {id} listed twice")));
                }
            }
            Section::Demands => {
                let id: i64 = field(toks.next(), lineno, "vertex id")?;
                let q: i64 = field(toks.next(), lineno, "demand")?;
                demands.insert(id, q);
            }
            Section::Depots => {
                let id: i64 = field(toks.next(), lineno, "depot id")?;
                if id == -1 {
                    section = Section::Header;
                } else {
                    depots.push(id);
                }
            }
        }
    }

    match weight_type.as_deref() {
        Some("EUC_2D") => {}
        Some(other) => return Err(ModelError::Unsupported(format!("EDGE_WEIGHT_TYPE {other}"))),
        None => return Err(parse_err(0, "missing EDGE_WEIGHT_TYPE")),
    }
    let dimension = dimension.ok_or_else(|| parse_err(0, "missing DIMENSION"))?;
    let capacity = capacity.ok_or_else(|| parse_err(0, "missing CAPACITY"))?;
    if coords.len() != dimension {
        return Err(parse_err(0, format!("DIMENSION {dimension} but {} coordinates", coords.len())));
    }
    let depot = match depots.as_slice() {
        [] => *coords.keys().next().expect("dimension checked"),
        [d] => *d,
        _ => return Err(ModelError::Unsupported("multiple depots".into())),
    };
    let depot_xy = *coords.get(&depot).ok_or_else(|| parse_err(0, format!("depot {depot} has no coordinates")))?;

    let mut xy = vec![depot_xy];
    let mut q = vec![demands.get(&depot).copied().unwrap_or(0)];
    for (&id, &c) in coords.iter().filter(|(&id, _)| id != depot) {
        xy.push(c);
        q.push(*demands.get(&id).ok_or_else(|| parse_err(0, format!("vertex {id} has no demand")))?);
    }
    Instance::new(name.unwrap_or_default(), xy, q, capacity)
}

/// Writes `Route #i: ...` lines (empty routes skipped) and a final `Cost` line.
pub fn write_solution<W: Write>(sol: &Solution, out: &mut W) -> std::io::Result<()> {
    for (i, route) in sol.routes().iter().filter(|r| !r.is_empty()).enumerate() {
        write!(out, "Route #{}:", i + 1)?;
        for c in route.customers() {
            write!(out, " {c}")?;
        }
        writeln!(out)?;
    }
    writeln!(out, "Cost {}", sol.distance())
}

pub fn parse_solution(text: &str, inst: &Instance) -> Result<Solution, ModelError> {
    let mut routes = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let Some(rest) = line.strip_prefix("Route #") else {
            continue;
        };
        let (_, body) = rest
            .split_once(':')
            .ok_or_else(|| parse_err(idx + 1, "route line without `:`"))?;
        let mut route = Vec::new();
        for tok in body.split_whitespace() {
            let c: usize = field(Some(tok), idx + 1, "customer id")?;
            if c == 0 || c > inst.n() {
                return Err(parse_err(idx + 1, format!("unknown customer {c}")));
            }
            route.push(c);
        }
        routes.push(route);
    }
    Ok(Solution::from_routes(inst, routes))
}

/// Reads an `instance,bks` CSV.
pub fn read_bks_table(text: &str) -> Result<HashMap<String, Cost>, ModelError> {
    let mut out = HashMap::new();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(idx + 2, e.to_string()))?;
        let name = rec.get(0).ok_or_else(|| parse_err(idx + 2, "missing instance"))?;
        let bks: Cost = field(rec.get(1), idx + 2, "bks")?;
        out.insert(name.to_string(), bks);
    }
    Ok(out)
}
