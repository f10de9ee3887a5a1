//! Assembly of the linearized region around the flat start `(v, θ) = (1, 0)`.

use super::case::{BusType, NetworkCase};
use super::{ConstraintBlock, LinearRegion, RegSpec, RegionError};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildOptions {
    /// Add generator ramp rows around `p_last`.
    pub ramp: bool,
    /// Also limit the to→from flow of every branch.
    pub reverse_flow: bool,
}

/// Bus admittance entries `(G_ij, B_ij)` keyed by bus position, diagonal included.
fn admittance(case: &NetworkCase, pos: &BTreeMap<usize, usize>) -> Vec<BTreeMap<usize, (f64, f64)>> {
    let mut y = vec![BTreeMap::new(); case.buses.len()];
    for br in &case.branches {
        let (f, t) = (pos[&br.from], pos[&br.to]);
        let (g, b) = series_admittance(br.r, br.x_series);
        let half = br.b_charging / 2.0;
        for (i, j) in [(f, t), (t, f)] {
            let d = y[i].entry(i).or_insert((0.0, 0.0));
            d.0 += g;
            d.1 += b + half;
            let o = y[i].entry(j).or_insert((0.0, 0.0));
            o.0 -= g;
            o.1 -= b;
        }
    }
    y
}

/// `g + jb = 1 / (r + jx)`.
fn series_admittance(r: f64, x: f64) -> (f64, f64) {
    let den = r * r + x * x;
    (r / den, -x / den)
}

/// Builds `{(w, x)}` over `x = (v, θ, p^g, q^g)`, buses in ascending id order.
pub fn build_linear_region(case: &NetworkCase, reg: &RegSpec, opts: BuildOptions) -> Result<LinearRegion, RegionError> {
    case.validate()?;
    reg.validate()?;
    for &n in &reg.nodes {
        if case.bus_position(n).is_none() {
            return Err(RegionError::Validation(format!("REG node {n} is not a bus of the case")));
        }
    }

    let mut order: Vec<usize> = (0..case.buses.len()).collect();
    order.sort_by_key(|&k| case.buses[k].id);
    let nb = order.len();
    let ng = case.generators.len();
    // bus id -> position in the sorted order
    let pos: BTreeMap<usize, usize> = order.iter().enumerate().map(|(p, &k)| (case.buses[k].id, p)).collect();

    let n_w = reg.dim();
    let n_x = 2 * nb + 2 * ng;
    let cols = n_w + n_x;
    let v = |p: usize| n_w + p;
    let th = |p: usize| n_w + nb + p;
    let pg = |k: usize| n_w + 2 * nb + k;
    let qg = |k: usize| n_w + 2 * nb + ng + k;

    let mut index = BTreeMap::new();
    for (i, n) in reg.nodes.iter().enumerate() {
        index.insert(format!("w[{n}]"), i);
    }
    for (p, &k) in order.iter().enumerate() {
        let id = case.buses[k].id;
        index.insert(format!("v[{id}]"), v(p));
        index.insert(format!("theta[{id}]"), th(p));
    }
    for k in 0..ng {
        index.insert(format!("pg[{k}]"), pg(k));
        index.insert(format!("qg[{k}]"), qg(k));
    }

    let y = admittance(case, &pos);
    let mut eq = ConstraintBlock::empty(cols);
    let mut ineq = ConstraintBlock::empty(cols);
    let mut row = vec![0.0; cols];
    let emit = |block: &mut ConstraintBlock, row: &mut Vec<f64>, rhs: f64| {
        block.push(row, rhs);
        row.iter_mut().for_each(|c| *c = 0.0);
    };

    for (p, &k) in order.iter().enumerate() {
        let bus = &case.buses[k];
        let gens: Vec<usize> = (0..ng).filter(|&g| pos[&case.generators[g].bus] == p).collect();
        let w_col = reg.nodes.iter().position(|&n| n == bus.id);

        // active balance: p^g + w - p^d = Σ_j G_ij (v_i + v_j - 1) + B_ij (θ_i - θ_j)
        for &g in &gens {
            row[pg(g)] = 1.0;
        }
        if let Some(i) = w_col {
            row[i] = 1.0;
        }
        let mut rhs = bus.p_load;
        for (&j, &(g, b)) in &y[p] {
            row[v(p)] -= g;
            row[v(j)] -= g;
            row[th(p)] -= b;
            row[th(j)] += b;
            rhs -= g;
        }
        emit(&mut eq, &mut row, rhs);

        // reactive balance: q^g - q^d = Σ_j G_ij (θ_i - θ_j) - B_ij (v_i + v_j - 1)
        for &g in &gens {
            row[qg(g)] = 1.0;
        }
        let mut rhs = bus.q_load;
        for (&j, &(g, b)) in &y[p] {
            row[th(p)] -= g;
            row[th(j)] += g;
            row[v(p)] += b;
            row[v(j)] += b;
            rhs += b;
        }
        emit(&mut eq, &mut row, rhs);
    }

    let slack = order.iter().position(|&k| case.buses[k].bus_type == BusType::Slack).expect("validated");
    row[th(slack)] = 1.0;
    emit(&mut eq, &mut row, 0.0);

    for (k, gen) in case.generators.iter().enumerate() {
        row[pg(k)] = 1.0;
        emit(&mut ineq, &mut row, gen.p_max);
        row[pg(k)] = -1.0;
        emit(&mut ineq, &mut row, -gen.p_min);
        row[qg(k)] = 1.0;
        emit(&mut ineq, &mut row, gen.q_max);
        row[qg(k)] = -1.0;
        emit(&mut ineq, &mut row, -gen.q_min);
        if opts.ramp {
            let last =
                gen.p_last.ok_or_else(|| RegionError::Validation(format!("generators[{k}]: ramp rows need p_last")))?;
            if let Some(up) = gen.ramp_up {
                row[pg(k)] = 1.0;
                emit(&mut ineq, &mut row, last + up);
            }
            if let Some(dn) = gen.ramp_dn {
                row[pg(k)] = -1.0;
                emit(&mut ineq, &mut row, -(last - dn));
            }
        }
    }

    for (p, &k) in order.iter().enumerate() {
        let bus = &case.buses[k];
        row[v(p)] = 1.0;
        emit(&mut ineq, &mut row, bus.v_max);
        row[v(p)] = -1.0;
        emit(&mut ineq, &mut row, -bus.v_min);
    }

    for br in &case.branches {
        let (f, t) = (pos[&br.from], pos[&br.to]);
        let (g, b) = series_admittance(br.r, br.x_series);
        // p_ft = g (v_f - v_t) - b (θ_f - θ_t); p_tf is its negation
        let flow = |sign: f64, row: &mut Vec<f64>| {
            row[v(f)] = sign * g;
            row[v(t)] = -sign * g;
            row[th(f)] = -sign * b;
            row[th(t)] = sign * b;
        };
        let dirs: &[f64] = if opts.reverse_flow { &[1.0, -1.0] } else { &[1.0] };
        for &dir in dirs {
            if let Some(hi) = br.p_max {
                flow(dir, &mut row);
                emit(&mut ineq, &mut row, hi);
            }
            if let Some(lo) = br.p_min {
                flow(-dir, &mut row);
                emit(&mut ineq, &mut row, -lo);
            }
        }
    }

    for i in 0..n_w {
        row[i] = -1.0;
        emit(&mut ineq, &mut row, 0.0);
    }

    let region = LinearRegion::new(n_w, n_x, eq, ineq, index, reg.clone())?;
    if !region.membership(&vec![0.0; n_w])? {
        return Err(RegionError::Validation("the operating point with zero renewable output is infeasible".into()));
    }
    Ok(region)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::{parse_case_json, parse_matpower_subset};

    const TWO_BUS: &str = include_str!("../../data/two_bus.json");
    const CASE30: &str = include_str!("../../data/case30.m");

    #[test]
    fn two_bus_counts() {
        let case = parse_case_json(TWO_BUS).unwrap();
        let r = build_linear_region(&case, &RegSpec::uniform(vec![2], 1.0), BuildOptions::default()).unwrap();
        assert_eq!(r.eq_block.len(), 5);
        assert_eq!(r.n_w + r.n_x, 7);
        assert_eq!(r.variable_index["w[2]"], 0);
        assert_eq!(r.variable_index["v[1]"], 1);
        assert_eq!(r.variable_index["theta[2]"], 4);
        assert_eq!(r.variable_index["qg[0]"], 6);
        assert!(r.membership(&[0.0]).unwrap());
        assert!(!r.membership(&[-1.0]).unwrap());
    }

    #[test]
    fn ramp_without_rates_adds_no_rows() {
        let mut case = parse_case_json(TWO_BUS).unwrap();
        let reg = RegSpec::uniform(vec![2], 1.0);
        let plain = build_linear_region(&case, &reg, BuildOptions::default()).unwrap();
        case.generators[0].p_last = Some(0.5);
        let ramped = build_linear_region(&case, &reg, BuildOptions { ramp: true, ..Default::default() }).unwrap();
        assert_eq!(plain.ineq_block.len(), ramped.ineq_block.len());

        case.generators[0].ramp_up = Some(0.1);
        case.generators[0].ramp_dn = Some(0.1);
        let ramped = build_linear_region(&case, &reg, BuildOptions { ramp: true, ..Default::default() }).unwrap();
        assert_eq!(ramped.ineq_block.len(), plain.ineq_block.len() + 2);
        // the linear model is lossless, so p^g + w = 0.5 with p^g held in [0.4, 0.6]
        assert!(ramped.membership(&[0.1]).unwrap());
        assert!(!ramped.membership(&[0.15]).unwrap());
        assert!(plain.membership(&[0.5]).unwrap());
    }

    #[test]
    fn overloaded_case_rejected() {
        let mut case = parse_case_json(TWO_BUS).unwrap();
        case.buses[1].p_load = 10.0 * case.generators[0].p_max;
        let err = build_linear_region(&case, &RegSpec::uniform(vec![2], 1.0), BuildOptions::default()).unwrap_err();
        assert!(matches!(err, RegionError::Validation(_)), "{err}");
    }

    #[test]
    fn unknown_reg_node_rejected() {
        let case = parse_case_json(TWO_BUS).unwrap();
        let err = build_linear_region(&case, &RegSpec::uniform(vec![9], 1.0), BuildOptions::default());
        assert!(matches!(err, Err(RegionError::Validation(_))));
    }

    #[test]
    fn lossless_two_bus_balances_exactly() {
        // r = 0, no charging: flow = (θ1 - θ2)/x and the nodal rows reduce to DC balance
        let mut case = parse_case_json(TWO_BUS).unwrap();
        case.branches[0].r = 0.0;
        case.branches[0].b_charging = 0.0;
        let r = build_linear_region(&case, &RegSpec::uniform(vec![2], 1.0), BuildOptions::default()).unwrap();
        // the generator cannot absorb power, so w may not exceed the load
        assert!(r.membership(&[0.5]).unwrap());
        assert!(!r.membership(&[0.6]).unwrap());
    }

    #[test]
    fn per_unit_scale_invariance() {
        let (a, _) = parse_matpower_subset(CASE30).unwrap();
        let doubled = scale_mw(CASE30, 2.0);
        let (b, _) = parse_matpower_subset(&doubled).unwrap();
        let reg = RegSpec::uniform(vec![5, 7], 0.5);
        let ra = build_linear_region(&a, &reg, BuildOptions::default()).unwrap();
        let rb = build_linear_region(&b, &reg, BuildOptions::default()).unwrap();
        assert_eq!(ra.eq_block.a.rows(), rb.eq_block.a.rows());
        for (x, y) in [(&ra.eq_block, &rb.eq_block), (&ra.ineq_block, &rb.ineq_block)] {
            for (r1, r2) in x.a.row_iter().zip(y.a.row_iter()) {
                assert!(r1.iter().zip(r2).all(|(p, q)| (p - q).abs() <= 1e-12));
            }
            assert!(x.b.iter().zip(&y.b).all(|(p, q)| (p - q).abs() <= 1e-12));
        }
    }

    /// Multiplies baseMVA and every MW/MVAr column by `k`.
    fn scale_mw(text: &str, k: f64) -> String {
        let mut out = String::new();
        let mut section = "";
        for line in text.lines() {
            let t = line.trim_start();
            if t.starts_with("mpc.") {
                section = if t.starts_with("mpc.bus ") || t.starts_with("mpc.bus=") {
                    "bus"
                } else if t.starts_with("mpc.gen ") || t.starts_with("mpc.gen=") {
                    "gen"
                } else if t.starts_with("mpc.branch") {
                    "branch"
                } else {
                    ""
                };
                if t.starts_with("mpc.baseMVA") {
                    out.push_str(&format!("mpc.baseMVA = {};\n", 100.0 * k));
                    continue;
                }
                out.push_str(line);
                out.push('\n');
                continue;
            }
            let body = line.split('%').next().unwrap();
            let cols: &[usize] = match section {
                "bus" => &[2, 3, 4, 5],
                "gen" => &[1, 2, 3, 4, 8, 9],
                "branch" => &[5, 6, 7],
                _ => &[],
            };
            if cols.is_empty() || body.trim().is_empty() || body.contains(']') && body.trim() == "];" {
                out.push_str(line);
                out.push('\n');
                continue;
            }
            let trail = if body.trim_end().ends_with(';') { ";" } else { "" };
            let toks: Vec<String> =
                body.trim()
                    .trim_end_matches(';')
                    .split_whitespace()
                    .enumerate()
                    .map(|(c, tok)| {
                        if cols.contains(&c) {
                            format!("{}", tok.parse::<f64>().unwrap() * k)
                        } else {
                            tok.to_string()
                        }
                    })
                    .collect();
            out.push_str(&toks.join("\t"));
            out.push_str(trail);
            out.push('\n');
        }
        out
    }
}
