//! Grid and count syntax shared by the flags and the config file.
//!
//! Integer grids: `500`, `1..500`, `100..10000/100`, `10,100,1000`, or
//! `geom:100..10000:20` for 20 log-spaced points. Real grids: `0.5`,
//! `0..3/0.05`, `0.1,0.2`.

use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntGrid(pub Vec<usize>);

#[derive(Debug, Clone, PartialEq)]
pub struct RealGrid(pub Vec<f64>);

fn parse_count(s: &str) -> Result<usize, String> {
    if let Ok(v) = s.parse::<usize>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| format!("not a count: {s}"))?;
    if v >= 0.0 && v.fract() == 0.0 && v <= 9.0e15 {
        Ok(v as usize)
    } else {
        Err(format!("not a whole count: {s}"))
    }
}

/// Accepts `100000` or `1e5`.
pub fn count(s: &str) -> Result<usize, String> {
    parse_count(s.trim())
}

impl FromStr for IntGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let v = if let Some(rest) = s.strip_prefix("geom:") {
            let (range, points) = rest.rsplit_once(':').ok_or("geom grid needs geom:lo..hi:points")?;
            let (lo, hi) = range.split_once("..").ok_or("geom grid needs lo..hi")?;
            let (lo, hi, points) = (count(lo)?, count(hi)?, count(points)?);
            if lo == 0 || hi < lo || points < 2 {
                return Err(format!("bad geometric grid {s}"));
            }
            let step = (hi as f64 / lo as f64).ln() / (points - 1) as f64;
            let mut v: Vec<usize> = (0..points).map(|i| (lo as f64 * (step * i as f64).exp()).round() as usize).collect();
            v.dedup();
            v
        } else if let Some((lo, rest)) = s.split_once("..") {
            let (hi, step) = match rest.split_once('/') {
                Some((hi, step)) => (count(hi)?, count(step)?),
                None => (count(rest)?, 1),
            };
            let lo = count(lo)?;
            if step == 0 || hi < lo {
                return Err(format!("bad range {s}"));
            }
            (lo..=hi).step_by(step).collect()
        } else {
            s.split(',').map(count).collect::<Result<_, _>>()?
        };
        if v.is_empty() {
            return Err("empty grid".into());
        }
        Ok(IntGrid(v))
    }
}

fn real(s: &str) -> Result<f64, String> {
    s.trim().parse().map_err(|_| format!("not a number: {s}"))
}

impl FromStr for RealGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let v: Vec<f64> = if let Some((lo, rest)) = s.split_once("..") {
            let (hi, step) = match rest.split_once('/') {
                Some((hi, step)) => (real(hi)?, real(step)?),
                None => (real(rest)?, 0.1),
            };
            let lo = real(lo)?;
            if !(step > 0.0) || hi < lo {
                return Err(format!("bad range {s}"));
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize;
            (0..=count).map(|i| lo + step * i as f64).collect()
        } else {
            s.split(',').map(real).collect::<Result<_, _>>()?
        };
        if v.iter().any(|x| !x.is_finite()) {
            return Err(format!("non-finite grid value in {s}"));
        }
        Ok(RealGrid(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_grids() {
        assert_eq!("1..5".parse::<IntGrid>().unwrap().0, vec![1, 2, 3, 4, 5]);
        assert_eq!("10..30/10".parse::<IntGrid>().unwrap().0, vec![10, 20, 30]);
        assert_eq!("7,1e3".parse::<IntGrid>().unwrap().0, vec![7, 1000]);
        assert_eq!("geom:100..10000:3".parse::<IntGrid>().unwrap().0, vec![100, 1000, 10000]);
        assert!("5..1".parse::<IntGrid>().is_err());
        assert!("1.5".parse::<IntGrid>().is_err());
    }

    #[test]
    fn real_grids() {
        let g = "0..1/0.25".parse::<RealGrid>().unwrap().0;
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!("0..3".parse::<RealGrid>().unwrap().0.len(), 31);
        assert!("a,b".parse::<RealGrid>().is_err());
    }

    #[test]
    fn counts() {
        assert_eq!(count("1e5").unwrap(), 100_000);
        assert!(count("2.5").is_err());
    }
}
