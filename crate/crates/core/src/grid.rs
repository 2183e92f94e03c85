//! Network data model and the plain-text case format.
//!
//! A case file is UTF-8 text with a `format_version: 1` line followed by the
//! sections `[BASE]`, `[BUS]`, `[BRANCH]`, `[GEN]` and `[LOAD]`. Records are
//! one per line with whitespace-delimited columns in the fixed order below;
//! `#` starts a comment.
//!
//! ```text
//! [BASE]    base_mva
//! [BUS]     id kind(SLACK|PV|PQ) base_kv v_set v_min v_max
//! [BRANCH]  from to r x b tap rate_mva status(1|0)
//! [GEN]     bus p_mw q_min q_max p_max status(1|0)
//! [LOAD]    bus p_mw q_mvar
//! ```
//!
//! Impedances are per-unit on `base_mva`; powers are MW / MVar and converted
//! to per-unit on demand.

use std::collections::{HashMap, VecDeque};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

impl BusKind {
    fn as_str(self) -> &'static str {
        match self {
            BusKind::Slack => "SLACK",
            BusKind::Pv => "PV",
            BusKind::Pq => "PQ",
        }
    }
}

impl FromStr for BusKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "SLACK" | "REF" => Ok(BusKind::Slack),
            "PV" => Ok(BusKind::Pv),
            "PQ" => Ok(BusKind::Pq),
            other => Err(format!("unknown bus kind `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bus {
    pub id: u32,
    pub kind: BusKind,
    pub base_kv: f64,
    /// Voltage magnitude setpoint (pu). Ignored for PQ buses.
    pub v_setpoint: f64,
    pub v_min: f64,
    pub v_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub from_bus: u32,
    pub to_bus: u32,
    pub r: f64,
    pub x: f64,
    /// Total line charging susceptance (pu).
    pub b_shunt: f64,
    /// Off-nominal ratio on the from side; 1.0 for lines.
    pub tap: f64,
    pub mva_rating: f64,
    pub in_service: bool,
}

impl Branch {
    pub fn is_transformer(&self) -> bool {
        self.tap != 1.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub bus: u32,
    pub p_mw: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub p_max: f64,
    pub in_service: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Load {
    pub bus: u32,
    pub p_mw: f64,
    pub q_mvar: f64,
}

impl Load {
    pub fn p_pu(&self, base_mva: f64) -> f64 {
        self.p_mw / base_mva
    }

    pub fn q_pu(&self, base_mva: f64) -> f64 {
        self.q_mvar / base_mva
    }
}

/// A complete network configuration. Branch `in_service` flags select the
/// topology, so an outage configuration is just another `NetworkCase`.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkCase {
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
    pub loads: Vec<Load>,
}

/// Names a branch by its terminals, as in `17-43` or `17-43:2`.
///
/// `circuit` is 1-based and counts parallel branches between the same pair
/// of buses in file order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BranchRef {
    pub from: u32,
    pub to: u32,
    pub circuit: u32,
}

impl BranchRef {
    pub fn new(from: u32, to: u32) -> Self {
        BranchRef {
            from,
            to,
            circuit: 1,
        }
    }
}

impl fmt::Display for BranchRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.circuit == 1 {
            write!(f, "{}-{}", self.from, self.to)
        } else {
            write!(f, "{}-{}:{}", self.from, self.to, self.circuit)
        }
    }
}

impl FromStr for BranchRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("bad branch reference `{s}`"));
        let (pair, circuit) = match s.trim().split_once(':') {
            Some((pair, c)) => (pair, c.trim().parse::<u32>().map_err(|_| bad())?),
            None => (s.trim(), 1),
        };
        let (from, to) = pair.split_once('-').ok_or_else(bad)?;
        let from = from.trim().parse().map_err(|_| bad())?;
        let to = to.trim().parse().map_err(|_| bad())?;
        if circuit == 0 {
            return Err(bad());
        }
        Ok(BranchRef { from, to, circuit })
    }
}

/// Parses a contingency list: one `from-to[:circuit]` per line, `#` comments.
pub fn parse_branch_list(text: &str) -> Result<Vec<BranchRef>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let r = line
            .parse()
            .map_err(|e: Error| Error::syntax(lineno + 1, e.to_string()))?;
        out.push(r);
    }
    Ok(out)
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => line[..i].trim(),
        None => line.trim(),
    }
}

impl NetworkCase {
    pub fn bus_index(&self) -> HashMap<u32, usize> {
        self.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect()
    }

    pub fn slack_index(&self) -> Option<usize> {
        self.buses.iter().position(|b| b.kind == BusKind::Slack)
    }

    pub fn total_load_mw(&self) -> f64 {
        self.loads.iter().map(|l| l.p_mw).sum()
    }

    pub fn total_load_mvar(&self) -> f64 {
        self.loads.iter().map(|l| l.q_mvar).sum()
    }

    pub fn total_capacity_mw(&self) -> f64 {
        self.generators
            .iter()
            .filter(|g| g.in_service)
            .map(|g| g.p_max)
            .sum()
    }

    pub fn in_service_branches(&self) -> usize {
        self.branches.iter().filter(|b| b.in_service).count()
    }

    /// Ids of PQ buses in ascending order.
    pub fn load_bus_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self
            .buses
            .iter()
            .filter(|b| b.kind == BusKind::Pq)
            .map(|b| b.id)
            .collect();
        ids.sort_unstable();
        ids
    }

    /// Circuit-qualified reference for the branch at `index`.
    pub fn branch_ref(&self, index: usize) -> BranchRef {
        let br = &self.branches[index];
        let circuit = self.branches[..index]
            .iter()
            .filter(|o| same_pair(o, br.from_bus, br.to_bus))
            .count() as u32
            + 1;
        BranchRef {
            from: br.from_bus,
            to: br.to_bus,
            circuit,
        }
    }

    /// Resolves a reference in either orientation to a branch index.
    pub fn find_branch(&self, r: &BranchRef) -> Result<usize> {
        self.branches
            .iter()
            .enumerate()
            .filter(|(_, b)| same_pair(b, r.from, r.to))
            .nth(r.circuit as usize - 1)
            .map(|(i, _)| i)
            .ok_or_else(|| Error::invalid(format!("no branch {r} in case")))
    }

    /// Checks every invariant of the data model.
    pub fn validate(&self) -> Result<()> {
        if !(self.base_mva > 0.0) {
            return Err(Error::invalid("base_mva must be positive"));
        }
        let mut index = HashMap::new();
        for (i, bus) in self.buses.iter().enumerate() {
            if index.insert(bus.id, i).is_some() {
                return Err(Error::invalid(format!("duplicate bus id {}", bus.id)));
            }
            if bus.id == 0 {
                return Err(Error::invalid("bus ids start at 1"));
            }
            if !(bus.base_kv > 0.0) {
                return Err(Error::invalid(format!("bus {}: base_kv must be positive", bus.id)));
            }
            if !(bus.v_min < bus.v_max) {
                return Err(Error::invalid(format!("bus {}: v_min must be below v_max", bus.id)));
            }
        }
        match self.buses.iter().filter(|b| b.kind == BusKind::Slack).count() {
            0 => return Err(Error::invalid("no slack bus")),
            1 => {}
            _ => return Err(Error::invalid("multiple slack buses")),
        }
        for (i, br) in self.branches.iter().enumerate() {
            let tag = || format!("branch {} ({}-{})", i, br.from_bus, br.to_bus);
            if br.from_bus == br.to_bus {
                return Err(Error::invalid(format!("{}: from_bus equals to_bus", tag())));
            }
            for id in [br.from_bus, br.to_bus] {
                if !index.contains_key(&id) {
                    return Err(Error::invalid(format!("{}: unknown bus {id}", tag())));
                }
            }
            if br.x == 0.0 {
                return Err(Error::invalid(format!("{}: zero reactance", tag())));
            }
            if !(br.tap > 0.0) {
                return Err(Error::invalid(format!("{}: tap must be positive", tag())));
            }
            if !(br.mva_rating > 0.0) {
                return Err(Error::invalid(format!("{}: rating must be positive", tag())));
            }
        }
        for g in &self.generators {
            if !index.contains_key(&g.bus) {
                return Err(Error::invalid(format!("generator at unknown bus {}", g.bus)));
            }
            if g.q_min > g.q_max {
                return Err(Error::invalid(format!("generator at bus {}: q_min > q_max", g.bus)));
            }
            if g.p_mw < 0.0 || g.p_mw > g.p_max {
                return Err(Error::invalid(format!(
                    "generator at bus {}: p_mw outside [0, p_max]",
                    g.bus
                )));
            }
        }
        for bus in &self.buses {
            if bus.kind != BusKind::Pq
                && !self.generators.iter().any(|g| g.in_service && g.bus == bus.id)
            {
                return Err(Error::invalid(format!(
                    "{} bus {} has no in-service generator",
                    bus.kind.as_str(),
                    bus.id
                )));
            }
        }
        for l in &self.loads {
            if !index.contains_key(&l.bus) {
                return Err(Error::invalid(format!("load at unknown bus {}", l.bus)));
            }
        }
        let unreached = self.unreachable_buses();
        if !unreached.is_empty() {
            let list = unreached
                .iter()
                .map(|id| id.to_string())
                .collect::<Vec<_>>()
                .join(", ");
            return Err(Error::invalid(format!("disconnected bus {list}")));
        }
        if self.total_capacity_mw() < 1.05 * self.total_load_mw() {
            return Err(Error::invalid(
                "total generation capacity below 1.05 x total base load",
            ));
        }
        Ok(())
    }

    /// Bus ids not reachable from the slack over in-service branches, sorted.
    pub fn unreachable_buses(&self) -> Vec<u32> {
        let Some(slack) = self.slack_index() else {
            return self.buses.iter().map(|b| b.id).collect();
        };
        let index = self.bus_index();
        let mut adj = vec![Vec::new(); self.buses.len()];
        for br in self.branches.iter().filter(|b| b.in_service) {
            if let (Some(&f), Some(&t)) = (index.get(&br.from_bus), index.get(&br.to_bus)) {
                adj[f].push(t);
                adj[t].push(f);
            }
        }
        let mut seen = vec![false; self.buses.len()];
        let mut queue = VecDeque::from([slack]);
        seen[slack] = true;
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        let mut out: Vec<u32> = self
            .buses
            .iter()
            .zip(&seen)
            .filter(|(_, &s)| !s)
            .map(|(b, _)| b.id)
            .collect();
        out.sort_unstable();
        out
    }

    /// Returns a copy with branch `branch_index` switched out of service.
    pub fn apply_outage(&self, branch_index: usize) -> Result<NetworkCase> {
        let Some(branch) = self.branches.get(branch_index) else {
            return Err(Error::invalid(format!(
                "branch index {branch_index} out of range (case has {})",
                self.branches.len()
            )));
        };
        if !branch.in_service {
            return Err(Error::invalid("branch already out of service"));
        }
        let mut out = self.clone();
        out.branches[branch_index].in_service = false;
        let cut = out.unreachable_buses();
        if !cut.is_empty() {
            return Err(Error::Islanding(cut));
        }
        Ok(out)
    }

    pub fn render(&self) -> String {
        render_case(self)
    }
}

fn same_pair(b: &Branch, from: u32, to: u32) -> bool {
    (b.from_bus == from && b.to_bus == to) || (b.from_bus == to && b.to_bus == from)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Base,
    Bus,
    Branch,
    Gen,
    Load,
}

struct Fields<'a> {
    line: usize,
    cols: Vec<&'a str>,
}

impl<'a> Fields<'a> {
    fn expect(&self, n: usize, what: &str) -> Result<()> {
        if self.cols.len() != n {
            return Err(Error::syntax(
                self.line,
                format!("{what} record needs {n} columns, found {}", self.cols.len()),
            ));
        }
        Ok(())
    }

    fn num<T: FromStr>(&self, i: usize, name: &str) -> Result<T> {
        self.cols[i]
            .parse()
            .map_err(|_| Error::syntax(self.line, format!("bad {name} `{}`", self.cols[i])))
    }

    fn flag(&self, i: usize) -> Result<bool> {
        match self.cols[i] {
            "1" => Ok(true),
            "0" => Ok(false),
            other => Err(Error::syntax(self.line, format!("bad status `{other}`"))),
        }
    }
}

/// Parses and validates a case file.
pub fn parse_case(text: &str) -> Result<NetworkCase> {
    let mut section = Section::None;
    let mut version = None;
    let mut base_mva = None;
    let mut case = NetworkCase {
        base_mva: 0.0,
        buses: Vec::new(),
        branches: Vec::new(),
        generators: Vec::new(),
        loads: Vec::new(),
    };

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        if let Some(v) = line.strip_prefix("format_version:") {
            let v: u32 = v
                .trim()
                .parse()
                .map_err(|_| Error::syntax(line_no, "bad format_version"))?;
            if v != FORMAT_VERSION {
                return Err(Error::syntax(line_no, format!("unsupported format_version {v}")));
            }
            version = Some(v);
            continue;
        }
        if line.starts_with('[') {
            section = match line {
                "[BASE]" => Section::Base,
                "[BUS]" => Section::Bus,
                "[BRANCH]" => Section::Branch,
                "[GEN]" => Section::Gen,
                "[LOAD]" => Section::Load,
                other => return Err(Error::syntax(line_no, format!("unknown section {other}"))),
            };
            continue;
        }
        if version.is_none() {
            return Err(Error::syntax(line_no, "missing `format_version: 1` line"));
        }
        let f = Fields {
            line: line_no,
            cols: line.split_whitespace().collect(),
        };
        match section {
            Section::None => return Err(Error::syntax(line_no, "record outside a section")),
            Section::Base => {
                f.expect(1, "BASE")?;
                if base_mva.is_some() {
                    return Err(Error::syntax(line_no, "duplicate base_mva"));
                }
                base_mva = Some(f.num::<f64>(0, "base_mva")?);
            }
            Section::Bus => {
                f.expect(6, "BUS")?;
                case.buses.push(Bus {
                    id: f.num(0, "bus id")?,
                    kind: f.cols[1]
                        .parse()
                        .map_err(|e: String| Error::syntax(line_no, e))?,
                    base_kv: f.num(2, "base_kv")?,
                    v_setpoint: f.num(3, "v_set")?,
                    v_min: f.num(4, "v_min")?,
                    v_max: f.num(5, "v_max")?,
                });
            }
            Section::Branch => {
                f.expect(8, "BRANCH")?;
                case.branches.push(Branch {
                    from_bus: f.num(0, "from bus")?,
                    to_bus: f.num(1, "to bus")?,
                    r: f.num(2, "r")?,
                    x: f.num(3, "x")?,
                    b_shunt: f.num(4, "b")?,
                    tap: f.num(5, "tap")?,
                    mva_rating: f.num(6, "rating")?,
                    in_service: f.flag(7)?,
                });
            }
            Section::Gen => {
                f.expect(6, "GEN")?;
                case.generators.push(Generator {
                    bus: f.num(0, "bus")?,
                    p_mw: f.num(1, "p_mw")?,
                    q_min: f.num(2, "q_min")?,
                    q_max: f.num(3, "q_max")?,
                    p_max: f.num(4, "p_max")?,
                    in_service: f.flag(5)?,
                });
            }
            Section::Load => {
                f.expect(3, "LOAD")?;
                case.loads.push(Load {
                    bus: f.num(0, "bus")?,
                    p_mw: f.num(1, "p_mw")?,
                    q_mvar: f.num(2, "q_mvar")?,
                });
            }
        }
    }
    if version.is_none() {
        return Err(Error::syntax(0, "missing `format_version: 1` line"));
    }
    case.base_mva = base_mva.ok_or_else(|| Error::invalid("missing [BASE] section"))?;
    case.validate()?;
    Ok(case)
}

/// Serializes a case in the format read by [`parse_case`].
pub fn render_case(case: &NetworkCase) -> String {
    let mut s = String::new();
    let flag = |b: bool| if b { 1 } else { 0 };
    let _ = writeln!(s, "format_version: {FORMAT_VERSION}");
    let _ = writeln!(s, "[BASE]\n# base_mva\n{}", case.base_mva);
    let _ = writeln!(s, "[BUS]\n# id kind base_kv v_set v_min v_max");
    for b in &case.buses {
        let _ = writeln!(
            s,
            "{} {} {} {} {} {}",
            b.id,
            b.kind.as_str(),
            b.base_kv,
            b.v_setpoint,
            b.v_min,
            b.v_max
        );
    }
    let _ = writeln!(s, "[BRANCH]\n# from to r x b tap rate_mva status");
    for b in &case.branches {
        let _ = writeln!(
            s,
            "{} {} {} {} {} {} {} {}",
            b.from_bus,
            b.to_bus,
            b.r,
            b.x,
            b.b_shunt,
            b.tap,
            b.mva_rating,
            flag(b.in_service)
        );
    }
    let _ = writeln!(s, "[GEN]\n# bus p_mw q_min q_max p_max status");
    for g in &case.generators {
        let _ = writeln!(
            s,
            "{} {} {} {} {} {}",
            g.bus,
            g.p_mw,
            g.q_min,
            g.q_max,
            g.p_max,
            flag(g.in_service)
        );
    }
    let _ = writeln!(s, "[LOAD]\n# bus p_mw q_mvar");
    for l in &case.loads {
        let _ = writeln!(s, "{} {} {}", l.bus, l.p_mw, l.q_mvar);
    }
    s
}

/// Cases bundled with the crate.
pub mod cases {
    use super::{parse_case, NetworkCase};

    pub const TWO_BUS: &str = include_str!("../data/two_bus.case");
    pub const NINE_BUS: &str = include_str!("../data/nine_bus.case");
    pub const NETS_NYPS_68: &str = include_str!("../data/nets_nyps_68.case");

    pub fn two_bus() -> NetworkCase {
        parse_case(TWO_BUS).expect("bundled two-bus case is valid")
    }

    pub fn nine_bus() -> NetworkCase {
        parse_case(NINE_BUS).expect("bundled nine-bus case is valid")
    }

    pub fn nets_nyps_68() -> NetworkCase {
        parse_case(NETS_NYPS_68).expect("bundled 68-bus case is valid")
    }

    /// Resolves a bundled case by name (`two_bus`, `nine_bus`, `nets_nyps_68`).
    pub fn by_name(name: &str) -> Option<NetworkCase> {
        match name {
            "two_bus" | "2" => Some(two_bus()),
            "nine_bus" | "9" => Some(nine_bus()),
            "nets_nyps_68" | "68" => Some(nets_nyps_68()),
            _ => None,
        }
    }

    /// Topology-change branches drawn into 68-bus update datasets.
    pub const TOPOLOGY_CHANGES_68: [&str; 8] = [
        "17-43", "18-42", "24-68", "38-46", "43-44", "47-48", "47-53", "54-55",
    ];

    /// Critical contingencies screened for every operating condition.
    pub const CRITICAL_CONTINGENCIES_68: [&str; 8] = [
        "18-49", "21-22", "30-61", "36-61", "40-41", "40-48", "41-42", "67-68",
    ];
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: &str = "format_version: 1
[BASE]
100
[BUS]
1 SLACK 230 1.0 0.9 1.1
2 PQ 230 1.0 0.9 1.1
[BRANCH]
1 2 0 0.1 0 1 500 1
[GEN]
1 0 -999 999 1000 1
[LOAD]
2 50 0
";

    #[test]
    fn minimal_two_bus() {
        let case = parse_case(TWO).unwrap();
        assert_eq!(case.buses.len(), 2);
        assert_eq!(case.branches.len(), 1);
        assert_eq!(case.loads[0].p_pu(case.base_mva), 0.5);
    }

    #[test]
    fn two_slacks_rejected() {
        let text = TWO.replace("2 PQ 230", "2 SLACK 230");
        let text = text.replace("[LOAD]", "2 0 -9 9 100 1\n[LOAD]");
        let err = parse_case(&text).unwrap_err();
        assert_eq!(err.to_string(), "multiple slack buses");
    }

    #[test]
    fn missing_slack_rejected() {
        let text = TWO.replace("1 SLACK", "1 PV");
        assert_eq!(parse_case(&text).unwrap_err().to_string(), "no slack bus");
    }

    #[test]
    fn syntax_error_carries_line() {
        let text = TWO.replace("1 2 0 0.1 0 1 500 1", "1 2 0 zero 0 1 500 1");
        match parse_case(&text).unwrap_err() {
            Error::Syntax { line, .. } => assert_eq!(line, 8),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn disconnected_bus_named() {
        let text = TWO.replace(
            "2 PQ 230 1.0 0.9 1.1",
            "2 PQ 230 1.0 0.9 1.1\n17 PQ 230 1.0 0.9 1.1",
        );
        assert_eq!(parse_case(&text).unwrap_err().to_string(), "disconnected bus 17");
    }

    #[test]
    fn zero_reactance_rejected() {
        let text = TWO.replace("1 2 0 0.1 0 1 500 1", "1 2 0.01 0 0 1 500 1");
        assert!(parse_case(&text).unwrap_err().to_string().contains("zero reactance"));
    }

    #[test]
    fn outage_of_only_branch_islands() {
        let case = parse_case(TWO).unwrap();
        match case.apply_outage(0).unwrap_err() {
            Error::Islanding(ids) => assert_eq!(ids, vec![2]),
            e => panic!("unexpected {e}"),
        }
        assert!(case.branches[0].in_service);
    }

    #[test]
    fn outage_errors() {
        let case = cases::nine_bus();
        let i = case.find_branch(&"4-5".parse().unwrap()).unwrap();
        let out = case.apply_outage(i).unwrap();
        assert_eq!(
            out.apply_outage(i).unwrap_err().to_string(),
            "branch already out of service"
        );
        assert!(case.apply_outage(99).is_err());
    }

    #[test]
    fn branch_refs() {
        let r: BranchRef = "17-43:2".parse().unwrap();
        assert_eq!(r, BranchRef { from: 17, to: 43, circuit: 2 });
        assert_eq!(r.to_string(), "17-43:2");
        assert_eq!("18-49".parse::<BranchRef>().unwrap().to_string(), "18-49");
        assert!("18_49".parse::<BranchRef>().is_err());
        let list = parse_branch_list("# ctg\n1-2\n\n3-4:1 # x\n").unwrap();
        assert_eq!(list.len(), 2);
    }

    #[test]
    fn find_branch_either_orientation() {
        let case = cases::nine_bus();
        let a = case.find_branch(&BranchRef::new(4, 5)).unwrap();
        let b = case.find_branch(&BranchRef::new(5, 4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(case.branch_ref(a), BranchRef::new(4, 5));
    }

    #[test]
    fn bundled_68_bus_totals() {
        let case = cases::nets_nyps_68();
        assert_eq!(case.buses.len(), 68);
        assert_eq!(case.generators.len(), 16);
        assert_eq!(case.branches.len(), 83);
        assert_eq!(case.branches.iter().filter(|b| b.is_transformer()).count(), 20);
        assert!((case.total_load_mw() - 17620.7).abs() < 1e-6);
        assert!((case.total_load_mvar() - 2021.76).abs() < 1e-6);
        assert_eq!(case.load_bus_ids().len(), 52);
        for name in cases::TOPOLOGY_CHANGES_68
            .iter()
            .chain(cases::CRITICAL_CONTINGENCIES_68.iter())
        {
            let i = case.find_branch(&name.parse().unwrap()).unwrap();
            assert!(case.apply_outage(i).is_ok(), "{name} islands");
        }
        let i = case.find_branch(&"17-43".parse().unwrap()).unwrap();
        assert_eq!(case.apply_outage(i).unwrap().in_service_branches(), 82);
    }
}
