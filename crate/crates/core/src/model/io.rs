//! Binary container for replaying an experiment instance.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic   8 bytes   "UOSPR\0v1"
//! n, d, R, m, seed  u64 each
//! bases   R blocks of n*d f64, row-major
//! A       m*n f64, row-major
//! y       m f64
//! ```
//!
//! `m = 0` stores a union without measurements.

use std::io::{Read, Write};

use super::{MeasurementEnsemble, UnionOfSubspaces};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const INSTANCE_MAGIC: &[u8; 8] = b"UOSPR\0v1";

// Guards against allocating absurd buffers from a corrupt header.
const MAX_ENTRIES: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub union: UnionOfSubspaces,
    pub ensemble: Option<MeasurementEnsemble>,
    pub seed: u64,
}

pub fn write_instance<W: Write>(
    mut w: W,
    union: &UnionOfSubspaces,
    ensemble: Option<&MeasurementEnsemble>,
    seed: u64,
) -> Result<()> {
    let m = ensemble.map_or(0, MeasurementEnsemble::num_measurements);
    if let Some(e) = ensemble {
        if e.a().cols() != union.ambient_dim() {
            return Err(Error::InvalidArgument(format!(
                "measurement matrix has {} columns, union lives in dimension {}",
                e.a().cols(),
                union.ambient_dim()
            )));
        }
    }
    w.write_all(INSTANCE_MAGIC)?;
    for v in [
        union.ambient_dim(),
        union.subspace_dim(),
        union.len(),
        m,
    ] {
        w.write_all(&(v as u64).to_le_bytes())?;
    }
    w.write_all(&seed.to_le_bytes())?;
    for b in union.bases() {
        write_f64s(&mut w, b.as_slice())?;
    }
    if let Some(e) = ensemble {
        write_f64s(&mut w, e.a().as_slice())?;
        write_f64s(&mut w, e.y())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_instance<R: Read>(mut r: R) -> Result<Instance> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != INSTANCE_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut header = [0u64; 5];
    for h in header.iter_mut() {
        *h = read_u64(&mut r)?;
    }
    let [n, d, count, m, seed] = header;
    let total = n
        .checked_mul(d)
        .and_then(|v| v.checked_mul(count))
        .and_then(|v| v.checked_add(m.checked_mul(n.checked_add(1)?)?));
    if n == 0 || d == 0 || count == 0 || !matches!(total, Some(t) if t <= MAX_ENTRIES) {
        return Err(Error::Format(format!(
            "implausible header n={n} d={d} R={count} m={m}"
        )));
    }
    let (n, d, m) = (n as usize, d as usize, m as usize);
    let bases = (0..count)
        .map(|_| Matrix::new(n, d, read_f64s(&mut r, n * d)?))
        .collect::<Result<Vec<_>>>()?;
    let union = UnionOfSubspaces::new(bases)?;
    let ensemble = if m == 0 {
        None
    } else {
        let a = Matrix::new(m, n, read_f64s(&mut r, m * n)?)?;
        let y = read_f64s(&mut r, m)?;
        Some(MeasurementEnsemble::new(a, y)?)
    };
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::Format("trailing bytes after instance".into()));
    }
    Ok(Instance {
        union,
        ensemble,
        seed,
    })
}

fn write_f64s<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 8);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|_| Error::Format("truncated header".into()))?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, len: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; len * 8];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Format("truncated payload".into()))?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_union, synthesize_signal};
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn instances_round_trip_bit_exactly(
            n in 2usize..12, d_frac in 0.0f64..1.0, r in 1usize..4, m in 0usize..10, seed in any::<u64>()
        ) {
            let d = 1 + ((n - 1) as f64 * d_frac) as usize;
            let union = generate_union(n, d, r, seed).unwrap();
            let ensemble = (m > 0).then(|| {
                let g = synthesize_signal(&union, seed ^ 1).unwrap();
                MeasurementEnsemble::gaussian(m, &g.x_star, seed ^ 2).unwrap()
            });
            let mut buf = Vec::new();
            write_instance(&mut buf, &union, ensemble.as_ref(), seed).unwrap();
            prop_assert_eq!(buf.len(), 48 + 8 * (r * n * d + m * n + m));
            let back = read_instance(buf.as_slice()).unwrap();
            prop_assert_eq!(back, Instance { union, ensemble, seed });
        }
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let union = generate_union(4, 2, 1, 0).unwrap();
        let mut buf = Vec::new();
        write_instance(&mut buf, &union, None, 7).unwrap();
        assert!(read_instance(&buf[..buf.len() - 1]).is_err());
        let mut extra = buf.clone();
        extra.push(0);
        assert!(read_instance(extra.as_slice()).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_instance(bad.as_slice()), Err(Error::Format(_))));
    }
}
