//! Procedure roster and its command-line tokens.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Default overpenalization grid.
pub const DEFAULT_C_OV: [f64; 5] = [1.0, 1.25, 2.0, 3.0, 4.0];

/// Penalty families that can be scaled by `C_ov` or calibrated ideally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PenaltyProc {
    Epenid,
    MalEst,
    MalMax,
    PenHo,
    PenVf(usize),
    PenLoo,
}

impl PenaltyProc {
    pub fn name(self) -> String {
        match self {
            PenaltyProc::Epenid => "epenid".into(),
            PenaltyProc::MalEst => "mal-est".into(),
            PenaltyProc::MalMax => "mal-max".into(),
            PenaltyProc::PenHo => "pen-ho".into(),
            PenaltyProc::PenVf(v) => format!("pen-{v}f"),
            PenaltyProc::PenLoo => "pen-loo".into(),
        }
    }

    fn from_letter(c: char) -> Option<Self> {
        Some(match c {
            'A' => PenaltyProc::Epenid,
            'B' => PenaltyProc::MalEst,
            'C' => PenaltyProc::MalMax,
            'H' => PenaltyProc::PenHo,
            'I' => PenaltyProc::PenVf(2),
            'J' => PenaltyProc::PenVf(5),
            'K' => PenaltyProc::PenVf(10),
            'L' => PenaltyProc::PenLoo,
            _ => return None,
        })
    }

    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "epenid" => PenaltyProc::Epenid,
            "mal-est" => PenaltyProc::MalEst,
            "mal-max" => PenaltyProc::MalMax,
            "pen-ho" => PenaltyProc::PenHo,
            "pen-loo" => PenaltyProc::PenLoo,
            other => {
                let v = other.strip_prefix("pen-")?.strip_suffix('f')?.parse().ok()?;
                if v < 2 {
                    return None;
                }
                PenaltyProc::PenVf(v)
            }
        })
    }

    fn parse(s: &str) -> Option<Self> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Self::from_letter(c.to_ascii_uppercase()),
            _ => Self::from_name(&s.to_ascii_lowercase()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Procedure {
    Penalized { pen: PenaltyProc, c_ov: f64 },
    HoldOutCv,
    Vfcv(usize),
    IdDim,
    IdLin,
    IdPen(PenaltyProc),
}

impl Procedure {
    /// Name without the overpenalization factor.
    pub fn name(&self) -> String {
        match self {
            Procedure::Penalized { pen, .. } => pen.name(),
            Procedure::HoldOutCv => "ho".into(),
            Procedure::Vfcv(v) => format!("cv-{v}f"),
            Procedure::IdDim => "id-dim".into(),
            Procedure::IdLin => "id-lin".into(),
            Procedure::IdPen(p) => format!("id-{}", p.name()),
        }
    }

    pub fn c_ov(&self) -> Option<f64> {
        match self {
            Procedure::Penalized { c_ov, .. } => Some(*c_ov),
            _ => None,
        }
    }

    /// Unique label, e.g. `pen-loo*2`.
    pub fn label(&self) -> String {
        match self.c_ov() {
            Some(c) => format!("{}*{}", self.name(), c),
            None => self.name(),
        }
    }

    /// Penalty shapes this procedure needs.
    pub fn penalty(&self) -> Option<PenaltyProc> {
        match self {
            Procedure::Penalized { pen, .. } | Procedure::IdPen(pen) => Some(*pen),
            _ => None,
        }
    }

    /// Fold count whose assignment this procedure uses.
    pub fn folds(&self) -> Option<usize> {
        match self {
            Procedure::Vfcv(v) | Procedure::Penalized { pen: PenaltyProc::PenVf(v), .. } => Some(*v),
            Procedure::IdPen(PenaltyProc::PenVf(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn uses_holdout(&self) -> bool {
        matches!(
            self,
            Procedure::HoldOutCv
                | Procedure::Penalized { pen: PenaltyProc::PenHo, .. }
                | Procedure::IdPen(PenaltyProc::PenHo)
        )
    }
}

impl fmt::Display for Procedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn bad(token: &str) -> Error {
    Error::InvalidConfig(format!("unknown procedure `{token}`"))
}

fn parse_c_ov(token: &str, s: &str) -> Result<f64> {
    let c: f64 = s.parse().map_err(|_| bad(token))?;
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::InvalidConfig(format!("overpenalization factor in `{token}` must be >= 0")));
    }
    Ok(c)
}

/// Expands one token into procedures. Penalty tokens without a factor
/// expand over `grid`.
///
/// Accepted: a letter `A`-`L` with an optional factor (`J2`, `L1.25`),
/// a name with an optional `*factor` (`pen-loo*2`, `mal-max`), `id-dim`,
/// `id-lin`, `id-<penalty>` (`id-pen-loo`, `id-L`), and `all`.
pub fn parse_token(token: &str, grid: &[f64]) -> Result<Vec<Procedure>> {
    let t = token.trim();
    let lower = t.to_ascii_lowercase();
    let scaled = |pen: PenaltyProc, c: Option<f64>| match c {
        Some(c_ov) => vec![Procedure::Penalized { pen, c_ov }],
        None => grid.iter().map(|&c_ov| Procedure::Penalized { pen, c_ov }).collect(),
    };
    match lower.as_str() {
        "all" => return Ok(roster(grid)),
        "id-dim" | "iddim" => return Ok(vec![Procedure::IdDim]),
        "id-lin" | "idlin" => return Ok(vec![Procedure::IdLin]),
        "d" | "ho" => return Ok(vec![Procedure::HoldOutCv]),
        "e" => return Ok(vec![Procedure::Vfcv(2)]),
        "f" => return Ok(vec![Procedure::Vfcv(5)]),
        "g" => return Ok(vec![Procedure::Vfcv(10)]),
        _ => {}
    }
    if let Some(rest) = lower.strip_prefix("id-") {
        let rest = if rest.len() == 1 { rest.to_ascii_uppercase() } else { rest.to_string() };
        return PenaltyProc::parse(&rest).map(|p| vec![Procedure::IdPen(p)]).ok_or_else(|| bad(t));
    }
    if let Some(v) = lower.strip_prefix("cv-").and_then(|r| r.strip_suffix('f')) {
        let v: usize = v.parse().map_err(|_| bad(t))?;
        if v < 2 {
            return Err(bad(t));
        }
        return Ok(vec![Procedure::Vfcv(v)]);
    }
    let first = t.chars().next().ok_or_else(|| bad(t))?;
    let tail = &t[first.len_utf8()..];
    if first.is_ascii_alphabetic() && (tail.is_empty() || tail.starts_with(|c: char| c.is_ascii_digit() || c == '.')) {
        let pen = PenaltyProc::from_letter(first.to_ascii_uppercase()).ok_or_else(|| bad(t))?;
        let c = if tail.is_empty() { None } else { Some(parse_c_ov(t, tail)?) };
        return Ok(scaled(pen, c));
    }
    let (name, c) = match lower.split_once('*') {
        Some((n, c)) => (n, Some(parse_c_ov(t, c)?)),
        None => (lower.as_str(), None),
    };
    PenaltyProc::from_name(name).map(|p| scaled(p, c)).ok_or_else(|| bad(t))
}

/// Procedures `A`-`L` (penalties over `grid`) with the ideal variants of
/// `A`, `H`, `I`, `J`, `K`, `L`, `IdDim` and `IdLin`.
pub fn roster(grid: &[f64]) -> Vec<Procedure> {
    let mut out = Vec::new();
    let pens = |letters: &str| letters.chars().filter_map(PenaltyProc::from_letter).collect::<Vec<_>>();
    for pen in pens("ABC") {
        out.extend(grid.iter().map(|&c_ov| Procedure::Penalized { pen, c_ov }));
    }
    out.extend([Procedure::HoldOutCv, Procedure::Vfcv(2), Procedure::Vfcv(5), Procedure::Vfcv(10)]);
    for pen in pens("HIJKL") {
        out.extend(grid.iter().map(|&c_ov| Procedure::Penalized { pen, c_ov }));
    }
    out.extend([Procedure::IdDim, Procedure::IdLin]);
    out.extend(pens("AHIJKL").into_iter().map(Procedure::IdPen));
    out
}

/// Parses a token list, dropping duplicates while keeping first occurrences.
pub fn parse_procedures<S: AsRef<str>>(tokens: &[S], grid: &[f64]) -> Result<Vec<Procedure>> {
    let mut out: Vec<Procedure> = Vec::new();
    for t in tokens {
        for p in parse_token(t.as_ref(), grid)? {
            if !out.iter().any(|q| q.label() == p.label()) {
                out.push(p);
            }
        }
    }
    Ok(out)
}

impl FromStr for Procedure {
    type Err = Error;

    /// A single procedure; penalty tokens without a factor mean `C_ov = 1`.
    fn from_str(s: &str) -> Result<Self> {
        let mut v = parse_token(s, &[1.0])?;
        if v.len() != 1 {
            return Err(bad(s));
        }
        Ok(v.remove(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn letters_and_factors() {
        let p: Procedure = "J2".parse().unwrap();
        assert_eq!(p, Procedure::Penalized { pen: PenaltyProc::PenVf(5), c_ov: 2.0 });
        assert_eq!(p.label(), "pen-5f*2");
        let p: Procedure = "L1.25".parse().unwrap();
        assert_eq!(p.label(), "pen-loo*1.25");
        assert_eq!("C".parse::<Procedure>().unwrap().label(), "mal-max*1");
        assert_eq!("D".parse::<Procedure>().unwrap(), Procedure::HoldOutCv);
        assert_eq!("g".parse::<Procedure>().unwrap(), Procedure::Vfcv(10));
        assert_eq!("id-L".parse::<Procedure>().unwrap(), Procedure::IdPen(PenaltyProc::PenLoo));
        assert_eq!("id-pen-5f".parse::<Procedure>().unwrap(), Procedure::IdPen(PenaltyProc::PenVf(5)));
        assert_eq!("pen-loo*2".parse::<Procedure>().unwrap().label(), "pen-loo*2");
        assert_eq!("IdDim".parse::<Procedure>().unwrap(), Procedure::IdDim);
        for bad in ["M", "Z3", "pen-1f", "J-1", "", "cv-1f"] {
            assert!(bad.parse::<Procedure>().is_err(), "{bad}");
        }
    }

    #[test]
    fn grid_expansion() {
        let v = parse_token("L", &DEFAULT_C_OV).unwrap();
        assert_eq!(v.len(), 5);
        let labels: Vec<String> = v.iter().map(|p| p.label()).collect();
        assert_eq!(labels, ["pen-loo*1", "pen-loo*1.25", "pen-loo*2", "pen-loo*3", "pen-loo*4"]);
        let dedup = parse_procedures(&["L2", "L", "IdDim", "id-dim"], &DEFAULT_C_OV).unwrap();
        assert_eq!(dedup.len(), 6);
    }

    #[test]
    fn full_roster() {
        let all = roster(&DEFAULT_C_OV);
        assert_eq!(all.len(), 3 * 5 + 4 + 5 * 5 + 2 + 6);
        let ids: Vec<String> = all.iter().filter(|p| p.name().starts_with("id-")).map(|p| p.name()).collect();
        assert_eq!(
            ids,
            ["id-dim", "id-lin", "id-epenid", "id-pen-ho", "id-pen-2f", "id-pen-5f", "id-pen-10f", "id-pen-loo"]
        );
        assert_eq!(parse_procedures(&["all"], &DEFAULT_C_OV).unwrap(), all);
    }
}
