//! Reader for the subset of the MATPOWER case format needed here:
//! `mpc.baseMVA`, `mpc.bus`, `mpc.gen` and `mpc.branch`.

use super::case::{Branch, Bus, BusType, Generator, NetworkCase};
use super::RegionError;

struct Matrix {
    name: String,
    /// (source line, entries)
    rows: Vec<(usize, Vec<f64>)>,
}

const BUS_COLS: usize = 13;
const GEN_COLS: usize = 10;
const BRANCH_COLS: usize = 11;

fn parse_err(line: usize, message: impl Into<String>) -> RegionError {
    RegionError::Parse { location: format!("line {line}"), message: message.into() }
}

fn strip_comment(line: &str) -> &str {
    match line.find('%') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_number(tok: &str, line: usize) -> Result<f64, RegionError> {
    match tok {
        "Inf" | "inf" => Ok(f64::INFINITY),
        "-Inf" | "-inf" => Ok(f64::NEG_INFINITY),
        _ => tok.parse::<f64>().map_err(|_| parse_err(line, format!("cannot parse number {tok:?}"))),
    }
}

/// `(line, baseMVA)` if present, and every matrix in file order.
type Scanned = (Option<(usize, f64)>, Vec<Matrix>);

/// Splits the file into scalar assignments and bracketed matrices.
fn scan(text: &str) -> Result<Scanned, RegionError> {
    let mut base = None;
    let mut matrices = Vec::new();
    let mut current: Option<Matrix> = None;
    let mut pending: Vec<f64> = Vec::new();
    let mut pending_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if current.is_none() {
            let Some(rest) = line.strip_prefix("mpc.") else { continue };
            let Some((name, value)) = rest.split_once('=') else { continue };
            let name = name.trim().to_string();
            let value = value.trim();
            if let Some(body) = value.strip_prefix('[') {
                current = Some(Matrix { name, rows: Vec::new() });
                pending.clear();
                pending_line = lineno;
                // body may hold rows (or the closing bracket) on the same line
                if body.trim().is_empty() {
                    continue;
                }
                let m = current.as_mut().expect("just opened");
                if feed(m, body, lineno, &mut pending, &mut pending_line)? {
                    matrices.push(current.take().expect("open matrix"));
                }
            } else if name == "baseMVA" {
                let v = value.trim_end_matches(';').trim();
                base = Some((lineno, parse_number(v, lineno)?));
            }
            continue;
        }
        let m = current.as_mut().expect("open matrix");
        if feed(m, line, lineno, &mut pending, &mut pending_line)? {
            matrices.push(current.take().expect("open matrix"));
        }
    }
    if let Some(m) = current {
        return Err(parse_err(text.lines().count(), format!("matrix mpc.{} is never closed", m.name)));
    }
    Ok((base, matrices))
}

/// Consumes one line of matrix body; returns true once `]` is seen.
fn feed(
    m: &mut Matrix,
    line: &str,
    lineno: usize,
    pending: &mut Vec<f64>,
    pending_line: &mut usize,
) -> Result<bool, RegionError> {
    let (body, closed) = match line.find(']') {
        Some(i) => (&line[..i], true),
        None => (line, false),
    };
    for (k, chunk) in body.split(';').enumerate() {
        if k > 0 && !pending.is_empty() {
            m.rows.push((*pending_line, std::mem::take(pending)));
        }
        for tok in chunk.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            if pending.is_empty() {
                *pending_line = lineno;
            }
            pending.push(parse_number(tok, lineno)?);
        }
    }
    // a newline also ends a row
    if !pending.is_empty() {
        m.rows.push((*pending_line, std::mem::take(pending)));
    }
    Ok(closed)
}

fn check_shape(m: &Matrix, min_cols: usize) -> Result<(), RegionError> {
    let Some((first_line, first)) = m.rows.first() else {
        return Err(parse_err(0, format!("mpc.{} is empty", m.name)));
    };
    let width = first.len();
    if width < min_cols {
        return Err(parse_err(
            *first_line,
            format!("mpc.{} rows need at least {min_cols} columns, found {width}", m.name),
        ));
    }
    for (line, row) in &m.rows {
        if row.len() != width {
            return Err(parse_err(*line, format!("mpc.{} row has {} columns, expected {width}", m.name, row.len())));
        }
    }
    Ok(())
}

/// Parses MATPOWER case text into a validated case plus a list of
/// warnings about data that the linear model does not use.
pub fn parse_matpower_subset(text: &str) -> Result<(NetworkCase, Vec<String>), RegionError> {
    let (base, matrices) = scan(text)?;
    let (_, base_mva) = base.ok_or_else(|| parse_err(0, "missing mpc.baseMVA"))?;
    let mut warnings = Vec::new();
    let mut bus_m = None;
    let mut gen_m = None;
    let mut branch_m = None;
    for m in matrices {
        match m.name.as_str() {
            "bus" => bus_m = Some(m),
            "gen" => gen_m = Some(m),
            "branch" => branch_m = Some(m),
            other => warnings.push(format!("ignored mpc.{other}")),
        }
    }
    // shape errors point at a line, so report them before missing sections
    for (m, cols) in [(&bus_m, BUS_COLS), (&gen_m, GEN_COLS), (&branch_m, BRANCH_COLS)] {
        if let Some(m) = m {
            check_shape(m, cols)?;
        }
    }
    let bus_m = bus_m.ok_or_else(|| parse_err(0, "missing mpc.bus"))?;
    let gen_m = gen_m.ok_or_else(|| parse_err(0, "missing mpc.gen"))?;
    let branch_m = branch_m.ok_or_else(|| parse_err(0, "missing mpc.branch"))?;

    let pu = |mw: f64| mw / base_mva;
    let as_id = |v: f64, line: usize| -> Result<usize, RegionError> {
        if v >= 0.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(parse_err(line, format!("invalid bus number {v}")))
        }
    };

    let mut buses = Vec::with_capacity(bus_m.rows.len());
    for (line, r) in &bus_m.rows {
        let bus_type = match r[1] as i64 {
            3 => BusType::Slack,
            2 => BusType::Pv,
            1 => BusType::Pq,
            code => return Err(parse_err(*line, format!("unsupported bus type {code}"))),
        };
        let id = as_id(r[0], *line)?;
        if r[4] != 0.0 || r[5] != 0.0 {
            warnings.push(format!("bus {id}: shunt GS={} BS={} ignored", r[4], r[5]));
        }
        buses.push(Bus { id, bus_type, p_load: pu(r[2]), q_load: pu(r[3]), v_max: r[11], v_min: r[12] });
    }

    let mut generators = Vec::with_capacity(gen_m.rows.len());
    for (line, r) in &gen_m.rows {
        let bus = as_id(r[0], *line)?;
        if r[7] <= 0.0 {
            warnings.push(format!("generator at bus {bus} (line {line}) is out of service, skipped"));
            continue;
        }
        generators.push(Generator {
            bus,
            p_min: pu(r[9]),
            p_max: pu(r[8]),
            q_min: pu(r[4]),
            q_max: pu(r[3]),
            ramp_up: None,
            ramp_dn: None,
            p_last: Some(pu(r[1])),
        });
    }

    let mut branches = Vec::with_capacity(branch_m.rows.len());
    for (line, r) in &branch_m.rows {
        let from = as_id(r[0], *line)?;
        let to = as_id(r[1], *line)?;
        if r[10] <= 0.0 {
            warnings.push(format!("branch {from}-{to} (line {line}) is out of service, skipped"));
            continue;
        }
        let ratio = r[8];
        let shift = r[9];
        if (ratio != 0.0 && ratio != 1.0) || shift != 0.0 {
            warnings.push(format!("branch {from}-{to}: tap ratio {ratio} / shift {shift} ignored"));
        }
        let rate = r[5];
        let (p_min, p_max) = if rate == 0.0 { (None, None) } else { (Some(-pu(rate)), Some(pu(rate))) };
        branches.push(Branch { from, to, r: r[2], x_series: r[3], b_charging: r[4], p_min, p_max });
    }

    let case = NetworkCase { base_mva, buses, branches, generators };
    case.validate()?;
    Ok((case, warnings))
}
