//! ERK/EDIRK Butcher pairs and the registry text format.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Registry bundled with the crate.
pub const BUNDLED_REGISTRY: &str = include_str!("../data/tableaux.txt");

/// Tolerance for the row-sum identities.
const ROW_SUM_TOLERANCE: f64 = 1e-14;

/// A validated IMEX pair with `s` stages.
///
/// Rows are indexed `0..=s`; row `l` corresponds to stage `l + 1`, and row
/// `s` holds the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherPair {
    name: String,
    order: Option<u32>,
    explicit: Vec<Vec<f64>>,
    implicit: Vec<Vec<f64>>,
    c: Vec<f64>,
    dc_max: f64,
    equidistributed: bool,
}

impl ButcherPair {
    /// Checks every structural identity:
    ///
    /// * `a^e` is `(s+1) × s` and strictly lower triangular;
    /// * `a^i` is `(s+1) × (s+1)`, lower triangular, with `a^i_11 = 0` and a
    ///   nonzero diagonal for stages `2..=s` (the weight row may have a zero
    ///   diagonal);
    /// * `c` is nondecreasing from 0 to 1;
    /// * every row of both tableaux sums to its abscissa.
    pub fn new(
        name: &str,
        order: Option<u32>,
        explicit: Vec<Vec<f64>>,
        implicit: Vec<Vec<f64>>,
        c: Vec<f64>,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidTableau(format!("{name}: {msg}")));
        if c.len() < 2 {
            return bad("need at least one stage".into());
        }
        let s = c.len() - 1;
        if explicit.len() != s + 1 || explicit.iter().any(|r| r.len() != s) {
            return bad(format!("explicit tableau must be {}x{s}", s + 1));
        }
        if implicit.len() != s + 1 || implicit.iter().any(|r| r.len() != s + 1) {
            return bad(format!("implicit tableau must be {}x{}", s + 1, s + 1));
        }
        if c.iter()
            .chain(explicit.iter().flatten())
            .chain(implicit.iter().flatten())
            .any(|v| !v.is_finite())
        {
            return bad("non-finite coefficient".into());
        }
        if c[0] != 0.0 || c[s] != 1.0 {
            return bad(format!(
                "abscissae must run from 0 to 1, got {} .. {}",
                c[0], c[s]
            ));
        }
        for l in 1..=s {
            if c[l] < c[l - 1] {
                return bad(format!("abscissae decrease at stage {}", l + 1));
            }
        }
        for (l, row) in explicit.iter().enumerate() {
            if row[l.min(s)..].iter().any(|&v| v != 0.0) {
                return bad(format!(
                    "explicit row {} is not strictly lower triangular",
                    l + 1
                ));
            }
        }
        for (l, row) in implicit.iter().enumerate() {
            if row[l + 1..].iter().any(|&v| v != 0.0) {
                return bad(format!("implicit row {} is not lower triangular", l + 1));
            }
        }
        if implicit[0][0] != 0.0 {
            return bad("first stage must be explicit".into());
        }
        for l in 1..s {
            if implicit[l][l] == 0.0 {
                return bad(format!("implicit diagonal vanishes at stage {}", l + 1));
            }
        }
        if s == 1 && implicit[1][1] == 0.0 {
            return bad("single-stage pair needs an implicit weight".into());
        }
        for l in 0..=s {
            let se: f64 = explicit[l].iter().sum();
            let si: f64 = implicit[l].iter().sum();
            if (se - c[l]).abs() > ROW_SUM_TOLERANCE || (si - c[l]).abs() > ROW_SUM_TOLERANCE {
                return bad(format!(
                    "row {} sums to ({se}, {si}) instead of c = {}",
                    l + 1,
                    c[l]
                ));
            }
        }
        let dc_max = (1..=s).map(|l| c[l] - c[l - 1]).fold(0.0, f64::max);
        let equidistributed =
            (0..=s).all(|l| (c[l] - l as f64 / s as f64).abs() <= ROW_SUM_TOLERANCE);
        Ok(Self {
            name: name.to_string(),
            order,
            explicit,
            implicit,
            c,
            dc_max,
            equidistributed,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Claimed order, if the registry states one.
    pub fn order(&self) -> Option<u32> {
        self.order
    }

    pub fn stages(&self) -> usize {
        self.c.len() - 1
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// `a^e_{l,k}` with zero-based rows and columns.
    pub fn explicit(&self, l: usize, k: usize) -> f64 {
        self.explicit[l].get(k).copied().unwrap_or(0.0)
    }

    /// `a^i_{l,k}` with zero-based rows and columns.
    pub fn implicit(&self, l: usize, k: usize) -> f64 {
        self.implicit[l][k]
    }

    /// `Δc^max = max_l (c_l − c_{l−1})`.
    pub fn dc_max(&self) -> f64 {
        self.dc_max
    }

    /// True when `c_l = (l−1)/s` for every stage.
    pub fn is_equidistributed(&self) -> bool {
        self.equidistributed
    }

    /// Incremental explicit coefficients `a^e_{l,k} − a^e_{l−1,k}`, `k < l`.
    pub fn explicit_deltas(&self, l: usize) -> Vec<f64> {
        (0..l)
            .map(|k| self.explicit(l, k) - self.explicit(l - 1, k))
            .collect()
    }

    /// Incremental implicit coefficients `a^i_{l,k} − a^i_{l−1,k}`, `k < l`.
    pub fn implicit_deltas(&self, l: usize) -> Vec<f64> {
        (0..l)
            .map(|k| self.implicit(l, k) - self.implicit(l - 1, k))
            .collect()
    }

    /// Registry text for this pair.
    pub fn to_registry_text(&self) -> String {
        let mut out = format!("scheme {}\n", self.name);
        if let Some(o) = self.order {
            out += &format!("order {o}\n");
        }
        let row = |r: &[f64]| {
            r.iter()
                .map(|v| format!("{v:?}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        out += &format!("c {}\nexplicit\n", row(&self.c));
        for r in &self.explicit {
            out += &row(r);
            out.push('\n');
        }
        out += "implicit\n";
        for r in &self.implicit {
            out += &row(r);
            out.push('\n');
        }
        out += "end\n";
        out
    }
}

/// Parses `p/q` or a decimal.
pub fn parse_number(tok: &str) -> Option<f64> {
    match tok.split_once('/') {
        Some((p, q)) => {
            let (p, q): (f64, f64) = (p.parse().ok()?, q.parse().ok()?);
            (q != 0.0).then(|| p / q)
        }
        None => tok.parse().ok(),
    }
}

/// Parses a registry text into validated pairs.
pub fn parse_registry(text: &str) -> Result<Vec<ButcherPair>> {
    #[derive(PartialEq)]
    enum Section {
        Header,
        Explicit,
        Implicit,
    }
    struct Block {
        name: String,
        line: usize,
        order: Option<u32>,
        c: Option<Vec<f64>>,
        explicit: Vec<Vec<f64>>,
        implicit: Vec<Vec<f64>>,
        section: Section,
    }

    let mut pairs = Vec::new();
    let mut cur: Option<Block> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let perr = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let head = toks.next().unwrap_or("");
        let numbers = |toks: core::str::SplitWhitespace<'_>| -> Result<Vec<f64>> {
            toks.map(|t| parse_number(t).ok_or_else(|| perr(format!("bad number `{t}`"))))
                .collect()
        };
        match (&mut cur, head) {
            (None, "scheme") => {
                let name = toks
                    .next()
                    .ok_or_else(|| perr("missing scheme name".into()))?;
                cur = Some(Block {
                    name: name.to_string(),
                    line: line_no,
                    order: None,
                    c: None,
                    explicit: vec![],
                    implicit: vec![],
                    section: Section::Header,
                });
            }
            (None, other) => return Err(perr(format!("expected `scheme`, found `{other}`"))),
            (Some(_), "scheme") => return Err(perr("missing `end` before next scheme".into())),
            (Some(b), "order") if b.section == Section::Header => {
                let o = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| perr("bad order".into()))?;
                b.order = Some(o);
            }
            (Some(b), "c") if b.section == Section::Header => b.c = Some(numbers(toks)?),
            (Some(b), "explicit") => b.section = Section::Explicit,
            (Some(b), "implicit") => b.section = Section::Implicit,
            (Some(_), "end") => {
                let b = cur.take().unwrap();
                let c = b.c.ok_or(Error::Parse {
                    line: b.line,
                    message: format!("{}: missing `c`", b.name),
                })?;
                pairs.push(ButcherPair::new(
                    &b.name, b.order, b.explicit, b.implicit, c,
                )?);
            }
            (Some(b), _) if b.section != Section::Header => {
                let row = numbers(line.split_whitespace())?;
                match b.section {
                    Section::Explicit => b.explicit.push(row),
                    _ => b.implicit.push(row),
                }
            }
            (Some(_), other) => return Err(perr(format!("unexpected `{other}`"))),
        }
    }
    if let Some(b) = cur {
        return Err(Error::Parse {
            line: b.line,
            message: format!("scheme `{}` has no `end`", b.name),
        });
    }
    Ok(pairs)
}

/// Named pairs, seeded from the bundled registry.
#[derive(Debug, Clone)]
pub struct Registry {
    pairs: Vec<ButcherPair>,
}

impl Registry {
    pub fn bundled() -> Self {
        Self {
            pairs: parse_registry(BUNDLED_REGISTRY).expect("bundled registry is valid"),
        }
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Ok(Self {
            pairs: parse_registry(text)?,
        })
    }

    /// Adds or replaces pairs from more registry text.
    pub fn extend_from_text(&mut self, text: &str) -> Result<()> {
        for p in parse_registry(text)? {
            self.pairs.retain(|q| q.name != p.name);
            self.pairs.push(p);
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&ButcherPair> {
        self.pairs
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::UnknownName(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|p| p.name.as_str())
    }

    pub fn pairs(&self) -> &[ButcherPair] {
        &self.pairs
    }
}

/// Looks a pair up in the bundled registry.
pub fn bundled(name: &str) -> Result<ButcherPair> {
    Registry::bundled().get(name).cloned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_pairs_validate() {
        let reg = Registry::bundled();
        let names: Vec<&str> = reg.names().collect();
        assert_eq!(names, ["euler", "imex22", "imex33"]);
        let e = reg.get("euler").unwrap();
        assert_eq!((e.stages(), e.dc_max(), e.order()), (1, 1.0, Some(1)));
        let p = reg.get("imex22").unwrap();
        for l in 0..=2 {
            let si: f64 = (0..=2).map(|k| p.implicit(l, k)).sum();
            assert!((si - p.c()[l]).abs() < 1e-14);
        }
        assert!(p.is_equidistributed());
        assert!((reg.get("imex33").unwrap().dc_max() - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn explicit_tableaux_meet_their_order_conditions() {
        // b·c = 1/2, b·c² = 1/3, b·A·c = 1/6 for every pairing of weights and matrices.
        for name in ["imex22", "imex33"] {
            let p = bundled(name).unwrap();
            let s = p.stages();
            let order = p.order().unwrap();
            let ae = |l: usize, k: usize| if k < s { p.explicit(l, k) } else { 0.0 };
            let ai = |l: usize, k: usize| p.implicit(l, k);
            let c = p.c();
            let mats: [&dyn Fn(usize, usize) -> f64; 2] = [&ae, &ai];
            for b in mats {
                let bc: f64 = (0..=s).map(|k| b(s, k) * c[k]).sum();
                assert!((bc - 0.5).abs() < 1e-14, "{name}");
                if order >= 3 {
                    let bc2: f64 = (0..=s).map(|k| b(s, k) * c[k] * c[k]).sum();
                    assert!((bc2 - 1.0 / 3.0).abs() < 1e-14);
                    for a in mats {
                        let bac: f64 = (0..s)
                            .map(|l| b(s, l) * (0..=s).map(|k| a(l, k) * c[k]).sum::<f64>())
                            .sum();
                        assert!((bac - 1.0 / 6.0).abs() < 1e-14, "{name}");
                    }
                }
            }
        }
    }

    #[test]
    fn implicit_parts_are_stable_at_infinity() {
        // R(z) = 1 + z bᵀ (I − zA)⁻¹ 1 evaluated at large |z|.
        let stab = |p: &ButcherPair, z: f64| -> f64 {
            let s = p.stages();
            let mut y = vec![0.0; s + 1];
            y[0] = 1.0;
            for l in 1..=s {
                let mut acc = 1.0;
                for k in 0..l {
                    acc += z * p.implicit(l, k) * y[k];
                }
                y[l] = acc / (1.0 - z * p.implicit(l, l));
            }
            y[s]
        };
        let p22 = bundled("imex22").unwrap();
        assert!(stab(&p22, -1e9).abs() < 1e-6);
        let p33 = bundled("imex33").unwrap();
        assert!((stab(&p33, -1e9) + 11.0 / 15.0).abs() < 1e-6);
        for k in 1..200 {
            let z = -(k as f64) * 0.5;
            assert!(stab(&p22, z).abs() <= 1.0 && stab(&p33, z).abs() <= 1.0);
        }
    }

    #[test]
    fn deltas() {
        let p = bundled("imex33").unwrap();
        assert_eq!(p.explicit_deltas(3), vec![0.25, -2.0 / 3.0, 0.75]);
        let d = p.implicit_deltas(2);
        assert!((d[0] - (5.0 / 6.0 + 5.0 / 12.0)).abs() < 1e-15 && (d[1] + 1.75).abs() < 1e-15);
    }

    #[test]
    fn invalid_pairs_are_rejected() {
        let e = vec![vec![0.0], vec![1.0]];
        let i = vec![vec![0.0, 0.0], vec![0.0, 1.0]];
        assert!(ButcherPair::new("ok", None, e.clone(), i.clone(), vec![0.0, 1.0]).is_ok());
        let decreasing = ButcherPair::new(
            "dec",
            None,
            vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![0.0, 1.0]],
            vec![vec![0.0; 3], vec![0.25, 0.25, 0.0], vec![0.0, 0.5, 0.5]],
            vec![0.0, 0.75, 0.5],
        );
        assert!(matches!(decreasing, Err(Error::InvalidTableau(_))));
        let rows = ButcherPair::new(
            "sum",
            None,
            vec![vec![0.0], vec![0.9]],
            i.clone(),
            vec![0.0, 1.0],
        );
        assert!(matches!(rows, Err(Error::InvalidTableau(_))));
        let first = ButcherPair::new(
            "first",
            None,
            e.clone(),
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.0, 1.0],
        );
        assert!(first.is_err());
        let upper = ButcherPair::new("up", None, vec![vec![0.5], vec![1.0]], i, vec![0.0, 1.0]);
        assert!(upper.is_err());
    }

    #[test]
    fn registry_round_trip_and_errors() {
        let reg = Registry::bundled();
        for p in reg.pairs() {
            let back = parse_registry(&p.to_registry_text()).unwrap();
            assert_eq!(&back[0], p);
        }
        assert!(matches!(
            parse_registry("scheme x\nc 0 1\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_registry("scheme x\nc 0 one\nend\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_registry("order 2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert_eq!(parse_number("-5/12"), Some(-5.0 / 12.0));
        assert_eq!(parse_number("1/0"), None);
        let mut r = Registry::bundled();
        r.extend_from_text("scheme euler\nc 0 1\nexplicit\n0\n1\nimplicit\n0 0\n0 1\nend\n")
            .unwrap();
        assert_eq!(r.names().count(), 3);
        assert!(matches!(r.get("rk4"), Err(Error::UnknownName(_))));
    }
}
