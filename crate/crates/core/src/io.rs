//! Instance files, placement CSV, random instances and run statistics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::packing::{packing_height, Packing, Placement, SquareItem};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IoError {
    #[error("line {line}: cannot parse {token:?}")]
    Parse { line: usize, token: String },
    #[error("line {line}: side {side} not in (0, 1]")]
    Side { line: usize, side: Scalar },
    #[error("csv: {0}")]
    Csv(String),
    #[error("{0}")]
    Range(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceFile {
    pub sides: Vec<Scalar>,
    /// 1-based source line of each side.
    pub lines: Vec<usize>,
}

impl InstanceFile {
    pub fn items(&self) -> Vec<SquareItem> {
        crate::packing::items_from_sides(&self.sides).expect("sides were checked while parsing")
    }
}

/// One side per line, `p/q` or a finite decimal; `#` starts a comment.
pub fn parse_instance(text: &str) -> Result<InstanceFile, IoError> {
    let mut sides = Vec::new();
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let side: Scalar = body.parse().map_err(|_| IoError::Parse { line, token: body.to_string() })?;
        if !side.is_positive() || side > Scalar::one() {
            return Err(IoError::Side { line, side });
        }
        sides.push(side);
        lines.push(line);
    }
    Ok(InstanceFile { sides, lines })
}

pub fn format_instance(sides: &[Scalar]) -> String {
    sides.iter().map(|s| format!("{s}\n")).collect()
}

/// Header `id,side,x,y`, one row per placement in arrival order.
pub fn placements_csv(p: &Packing) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "side", "x", "y"]).expect("writing to memory");
    for pl in p.placements() {
        w.write_record([pl.item.id.to_string(), pl.side().to_string(), pl.x.to_string(), pl.y.to_string()])
            .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("ascii output")
}

pub fn parse_placements_csv(text: &str) -> Result<Vec<Placement>, IoError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| IoError::Csv(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["id", "side", "x", "y"] {
        return Err(IoError::Csv(format!("expected header id,side,x,y, found {}", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| IoError::Csv(e.to_string()))?;
        let field = |k: usize| rec.get(k).unwrap_or("").to_string();
        let scalar = |k: usize| -> Result<Scalar, IoError> {
            field(k).parse().map_err(|_| IoError::Parse { line, token: field(k) })
        };
        let id: usize = field(0).parse().map_err(|_| IoError::Parse { line, token: field(0) })?;
        let side = scalar(1)?;
        let item = SquareItem::new(id, side.clone()).map_err(|_| IoError::Side { line, side })?;
        out.push(Placement::new(item, scalar(2)?, scalar(3)?));
    }
    Ok(out)
}

pub const GRID_BITS: u32 = 20;

/// `n` sides drawn uniformly from the multiples of `2^-20` in `[min, max]`.
pub fn gen_random(n: usize, seed: u64, min: &Scalar, max: &Scalar) -> Result<Vec<Scalar>, IoError> {
    let grid = Scalar::from_int(1 << GRID_BITS);
    let lo = to_i64(&(&Scalar::zero() - &(min * &grid)).floor()).saturating_neg().max(1);
    let hi = to_i64(&(max * &grid).floor()).min(1 << GRID_BITS);
    if lo > hi {
        return Err(IoError::Range("no grid point in [min, max] ∩ (0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| Scalar::new(rng.gen_range(lo..=hi), 1 << GRID_BITS)).collect())
}

fn to_i64(n: &num_bigint::BigInt) -> i64 {
    use num_traits::ToPrimitive;
    n.to_i64().unwrap_or(if n.sign() == num_bigint::Sign::Minus { i64::MIN } else { i64::MAX })
}

/// The corpus used throughout the tests: `n` sides on the grid in `[1/64, 1]`.
pub fn corpus_instance(n: usize, seed: u64) -> Vec<Scalar> {
    gen_random(n, seed, &Scalar::new(1, 64), &Scalar::one()).expect("nonempty range")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunStats {
    pub n: usize,
    pub height: Scalar,
    pub area_sum: Scalar,
    pub max_side: Scalar,
    /// `height / max(Σa², max a)`.
    pub ratio: Scalar,
}

impl RunStats {
    pub fn of(p: &Packing) -> Self {
        let height = packing_height(p);
        let area_sum = p.area_sum();
        let max_side = p.placements().iter().map(|pl| pl.side().clone()).max().unwrap_or_else(Scalar::zero);
        let lower = area_sum.clone().max(max_side.clone());
        let ratio = if lower.is_zero() { Scalar::zero() } else { &height / &lower };
        RunStats { n: p.len(), height, area_sum, max_side, ratio }
    }
}

impl std::fmt::Display for RunStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "n {}", self.n)?;
        writeln!(f, "height {}", self.height)?;
        writeln!(f, "area_sum {}", self.area_sum)?;
        writeln!(f, "max_side {}", self.max_side)?;
        write!(f, "ratio {} (~{:.4})", self.ratio, self.ratio.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bottomleft::bl_run;
    use crate::packing::{verify_packing, SquareItem};
    use crate::scalar::q;

    #[test]
    fn parse_examples() {
        assert_eq!(parse_instance("1/2\n1/2\n3/5\n").unwrap().sides, vec![q(1, 2), q(1, 2), q(3, 5)]);
        let f = parse_instance("# header\n\n0.25 # quarter\n").unwrap();
        assert_eq!((f.sides, f.lines), (vec![q(1, 4)], vec![3]));
        assert_eq!(parse_instance("5/4\n"), Err(IoError::Side { line: 1, side: q(5, 4) }));
        assert!(matches!(parse_instance("1/2\nabc\n"), Err(IoError::Parse { line: 2, .. })));
        assert!(matches!(parse_instance("0\n"), Err(IoError::Side { .. })));
    }

    #[test]
    fn csv_examples() {
        let p = Packing::from_placements([Placement::new(SquareItem::new(1, q(1, 1)).unwrap(), q(0, 1), q(0, 1))]);
        assert_eq!(placements_csv(&p), "id,side,x,y\n1,1/1,0/1,0/1\n");
        let seq = crate::packing::items_from_sides(&[q(1, 2), q(1, 2), q(3, 5)]).unwrap();
        let p = bl_run(&seq).unwrap();
        let text = placements_csv(&p);
        assert_eq!(text.lines().count(), 4);
        let back = parse_placements_csv(&text).unwrap();
        assert_eq!(back, p.placements());
        assert!(verify_packing(&seq, &back).unwrap().passed());
        assert!(parse_placements_csv("a,b\n").is_err());
    }

    #[test]
    fn random_sides_are_on_the_grid_and_deterministic() {
        let a = gen_random(200, 7, &q(1, 64), &q(1, 1)).unwrap();
        assert_eq!(a, gen_random(200, 7, &q(1, 64), &q(1, 1)).unwrap());
        assert_ne!(a, gen_random(200, 8, &q(1, 64), &q(1, 1)).unwrap());
        let grid = Scalar::from_int(1 << GRID_BITS);
        for s in &a {
            assert!(s >= &q(1, 64) && s <= &q(1, 1));
            let g = s * &grid;
            assert_eq!(Scalar::from_int(to_i64(&g.floor())), g);
        }
        assert!(gen_random(1, 0, &q(1, 3), &q(1, 3)).is_err());
        assert_eq!(gen_random(3, 0, &q(1, 2), &q(1, 2)).unwrap(), vec![q(1, 2); 3]);
    }

    #[test]
    fn stats_use_the_larger_lower_bound() {
        let p = bl_run(&crate::packing::items_from_sides(&[q(1, 2)]).unwrap()).unwrap();
        let s = RunStats::of(&p);
        assert_eq!((s.height, s.area_sum, s.ratio), (q(1, 2), q(1, 4), q(1, 1)));
    }
}
