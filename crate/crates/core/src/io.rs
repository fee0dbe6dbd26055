//! The `jngrid v1` file format.
//!
//! ```text
//! jngrid v1 n=<n> m=<m> K=<K> order=<s_max>[ bin]
//! ```
//! followed by `2^(nK)` values in row-major order, last axis fastest. The text
//! variant writes shortest round-trip decimals; the binary variant writes
//! little-endian IEEE-754 doubles after the header's newline.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{DomainSpec, GridFunction};

const MAGIC: &str = "jngrid v1";

fn header(f: &GridFunction, binary: bool) -> String {
    let d = f.domain();
    format!(
        "{MAGIC} n={} m={} K={} order={}{}\n",
        d.dim(),
        d.side_exponent(),
        d.depth(),
        f.moment_order(),
        if binary { " bin" } else { "" }
    )
}

pub fn encode_grid(f: &GridFunction, binary: bool) -> Vec<u8> {
    let mut out = header(f, binary).into_bytes();
    if binary {
        out.reserve(8 * f.values().len());
        for v in f.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        return out;
    }
    let row = f.domain().cells_per_axis();
    for chunk in f.values().chunks(row) {
        let line: Vec<String> = chunk.iter().map(|v| format!("{v:?}")).collect();
        out.extend_from_slice(line.join(" ").as_bytes());
        out.push(b'\n');
    }
    out
}

pub fn decode_grid(bytes: &[u8]) -> Result<GridFunction> {
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| Error::Parse("missing header line".into()))?;
    let head = std::str::from_utf8(&bytes[..nl]).map_err(|_| Error::Parse("header is not ASCII".into()))?;
    let rest = head
        .trim_end_matches('\r')
        .strip_prefix(MAGIC)
        .ok_or_else(|| Error::Parse(format!("expected header starting with '{MAGIC}'")))?;
    let (mut n, mut m, mut k, mut order, mut binary) = (None, None, None, None, false);
    for tok in rest.split_whitespace() {
        match tok.split_once('=') {
            Some(("n", v)) => n = Some(parse_field::<usize>("n", v)?),
            Some(("m", v)) => m = Some(parse_field::<i32>("m", v)?),
            Some(("K", v)) => k = Some(parse_field::<u32>("K", v)?),
            Some(("order", v)) => order = Some(parse_field::<usize>("order", v)?),
            None if tok == "bin" => binary = true,
            _ => return Err(Error::Parse(format!("unknown header token '{tok}'"))),
        }
    }
    let missing = |name: &str| Error::Parse(format!("header lacks {name}="));
    let domain = DomainSpec::new(n.ok_or_else(|| missing("n"))?, m.ok_or_else(|| missing("m"))?, k.ok_or_else(|| missing("K"))?)?;
    let order = order.ok_or_else(|| missing("order"))?;
    let body = &bytes[nl + 1..];
    let count = domain.cell_count();
    let values: Vec<f64> = if binary {
        if body.len() != 8 * count {
            return Err(Error::Parse(format!("expected {} bytes of data, found {}", 8 * count, body.len())));
        }
        body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect()
    } else {
        let text = std::str::from_utf8(body).map_err(|_| Error::Parse("body is not UTF-8".into()))?;
        let vals = text
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("bad value '{t}'"))))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != count {
            return Err(Error::Parse(format!("expected {count} values, found {}", vals.len())));
        }
        vals
    };
    Ok(GridFunction::new(domain, values)?.with_moment_order(order))
}

fn parse_field<T: std::str::FromStr>(name: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse(format!("bad value for {name}: '{v}'")))
}

pub fn read_grid(path: &Path) -> Result<GridFunction> {
    decode_grid(&std::fs::read(path)?)
}

pub fn write_grid(path: &Path, f: &GridFunction, binary: bool) -> Result<()> {
    std::fs::write(path, encode_grid(f, binary))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        let d = DomainSpec::new(2, -1, 3).unwrap();
        let f = GridFunction::from_fn(d, |x| (x[0] * 7.1).sin() / 3.0 + x[1]).unwrap().with_moment_order(2);
        for binary in [false, true] {
            let g = decode_grid(&encode_grid(&f, binary)).unwrap();
            assert_eq!(f, g);
        }
        let text = String::from_utf8(encode_grid(&f, false)).unwrap();
        assert!(text.starts_with("jngrid v1 n=2 m=-1 K=3 order=2\n"));
    }

    #[test]
    fn rejects_malformed() {
        assert!(decode_grid(b"jngrid v2 n=1 m=0 K=1 order=0\n1 2\n").is_err());
        assert!(decode_grid(b"jngrid v1 n=1 m=0 K=1 order=0\n1\n").is_err());
        assert!(decode_grid(b"jngrid v1 n=1 m=0 K=1\n1 2\n").is_err());
        assert!(decode_grid(b"jngrid v1 n=1 m=0 K=1 order=0\n1 x\n").is_err());
        assert!(decode_grid(b"jngrid v1 n=1 m=0 K=1 order=0\n1 nan\n").is_err());
        let ok = decode_grid(b"jngrid v1 n=1 m=0 K=1 order=0\n1 2\n").unwrap();
        assert_eq!(ok.values(), &[1.0, 2.0]);
    }
}
