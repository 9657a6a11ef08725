//! Seeded generation of synthetic recovery instances: a Gaussian measurement
//! matrix `A`, an exactly r-sparse ground truth `x0`, and `b = A x0`.
//!
//! Generation is a pure function of the seed. The draw order is part of the
//! reproducibility contract: first the `m*n` matrix entries (row-major), then
//! the support (partial Fisher-Yates over `0..n`, first `r` slots, sorted
//! ascending), then the `r` nonzero values in support order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::rng::{SampleStream, GENERATOR_ID, NORMAL_METHOD_ID};

const MAGIC: &[u8; 4] = b"SRIN";
const FORMAT_VERSION: u32 = 1;
/// Refuse to allocate matrices beyond this many entries when reading files.
const MAX_FILE_ENTRIES: u64 = 100_000_000;

/// Distribution of the nonzero entries of `x0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NonzeroDist {
    Gaussian,
    Rademacher,
}

impl NonzeroDist {
    pub fn as_str(self) -> &'static str {
        match self {
            NonzeroDist::Gaussian => "gaussian",
            NonzeroDist::Rademacher => "rademacher",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(NonzeroDist::Gaussian),
            "rademacher" => Ok(NonzeroDist::Rademacher),
            other => Err(Error::contract(format!(
                "unknown nonzero distribution '{other}' (expected gaussian or rademacher)"
            ))),
        }
    }
}

/// One recovery problem: `b = a * x0` with `x0` exactly `sparsity`-sparse.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub x0: Vec<f64>,
    pub sparsity: usize,
    pub seed: u64,
}

/// Generates an instance with standard-normal nonzero values.
pub fn generate_instance(m: usize, n: usize, r: usize, seed: u64) -> Result<ProblemInstance> {
    generate_instance_with(m, n, r, seed, NonzeroDist::Gaussian)
}

/// Generates an instance with the given nonzero-value distribution.
pub fn generate_instance_with(
    m: usize,
    n: usize,
    r: usize,
    seed: u64,
    dist: NonzeroDist,
) -> Result<ProblemInstance> {
    if r == 0 {
        return Err(Error::contract("sparsity r must be at least 1"));
    }
    if r > m {
        return Err(Error::contract(format!(
            "sparsity r={r} must not exceed m={m}"
        )));
    }
    if m >= n {
        return Err(Error::contract(format!(
            "instance must be underdetermined: need m < n, got m={m}, n={n}"
        )));
    }

    let mut stream = SampleStream::new(seed);
    let a = DenseMatrix::new(m, n, stream.normal_block(m * n))
        .expect("generated entries are finite by construction");

    let mut indices: Vec<usize> = (0..n).collect();
    for i in 0..r {
        let j = i + stream.index_below((n - i) as u64) as usize;
        indices.swap(i, j);
    }
    let mut support: Vec<usize> = indices[..r].to_vec();
    support.sort_unstable();

    let values: Vec<f64> = match dist {
        NonzeroDist::Gaussian => stream.normal_block(r),
        NonzeroDist::Rademacher => (0..r).map(|_| stream.sign()).collect(),
    };

    let mut x0 = vec![0.0; n];
    for (&idx, &v) in support.iter().zip(&values) {
        x0[idx] = v;
    }

    let b = a.matvec(&x0).expect("dimensions correct by construction");
    Ok(ProblemInstance {
        a,
        b,
        x0,
        sparsity: r,
        seed,
    })
}

/// Serializes an instance: a fixed header (magic, version, m, n, r, seed,
/// generator id) followed by the row-major matrix entries and `x0` as
/// little-endian f64. `b` is not stored; it is recomputed on load.
pub fn write_instance(instance: &ProblemInstance, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);

    w.write_all(MAGIC).map_err(io_err)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes()).map_err(io_err)?;
    w.write_all(&(instance.a.rows() as u64).to_le_bytes())
        .map_err(io_err)?;
    w.write_all(&(instance.a.cols() as u64).to_le_bytes())
        .map_err(io_err)?;
    w.write_all(&(instance.sparsity as u64).to_le_bytes())
        .map_err(io_err)?;
    w.write_all(&instance.seed.to_le_bytes()).map_err(io_err)?;
    let gen_id = format!("{GENERATOR_ID}/{NORMAL_METHOD_ID}");
    w.write_all(&(gen_id.len() as u16).to_le_bytes())
        .map_err(io_err)?;
    w.write_all(gen_id.as_bytes()).map_err(io_err)?;
    for v in instance.a.data() {
        w.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    for v in &instance.x0 {
        w.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Reads an instance written by [`write_instance`], recomputing and
/// validating `b = A x0` and the stored sparsity.
pub fn read_instance(path: &Path) -> Result<ProblemInstance> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, path)?;
    if &magic != MAGIC {
        return Err(Error::format(format!(
            "{}: not an instance file (bad magic)",
            path.display()
        )));
    }
    let version = read_u32(&mut r, path)?;
    if version != FORMAT_VERSION {
        return Err(Error::format(format!(
            "{}: unsupported format version {version}",
            path.display()
        )));
    }
    let m = read_u64(&mut r, path)?;
    let n = read_u64(&mut r, path)?;
    let sparsity = read_u64(&mut r, path)?;
    let seed = read_u64(&mut r, path)?;
    if m == 0 || n == 0 || m.saturating_mul(n) > MAX_FILE_ENTRIES {
        return Err(Error::format(format!(
            "{}: implausible dimensions {m}x{n}",
            path.display()
        )));
    }
    let id_len = read_u16(&mut r, path)? as usize;
    if id_len > 256 {
        return Err(Error::format(format!(
            "{}: generator id length {id_len} out of range",
            path.display()
        )));
    }
    let mut id_bytes = vec![0u8; id_len];
    read_exact(&mut r, &mut id_bytes, path)?;
    String::from_utf8(id_bytes)
        .map_err(|_| Error::format(format!("{}: generator id is not UTF-8", path.display())))?;

    let (m, n, sparsity) = (m as usize, n as usize, sparsity as usize);
    let data = read_f64_vec(&mut r, m * n, path)?;
    let x0 = read_f64_vec(&mut r, n, path)?;

    let mut trailing = [0u8; 1];
    if r.read(&mut trailing).map_err(|e| Error::io(path, e))? != 0 {
        return Err(Error::format(format!(
            "{}: trailing bytes after instance payload",
            path.display()
        )));
    }

    if !x0.iter().all(|v| v.is_finite()) {
        return Err(Error::format(format!(
            "{}: non-finite ground-truth entries",
            path.display()
        )));
    }
    let support = x0.iter().filter(|v| **v != 0.0).count();
    if support != sparsity {
        return Err(Error::format(format!(
            "{}: header sparsity {sparsity} but x0 has {support} nonzeros",
            path.display()
        )));
    }

    let a = DenseMatrix::new(m, n, data).map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
    let b = a
        .matvec(&x0)
        .map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
    Ok(ProblemInstance {
        a,
        b,
        x0,
        sparsity,
        seed,
    })
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], path: &Path) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::format(format!("{}: truncated instance file", path.display()))
        } else {
            Error::io(path, e)
        }
    })
}

fn read_u16(r: &mut impl Read, path: &Path) -> Result<u16> {
    let mut buf = [0u8; 2];
    read_exact(r, &mut buf, path)?;
    Ok(u16::from_le_bytes(buf))
}

fn read_u32(r: &mut impl Read, path: &Path) -> Result<u32> {
    let mut buf = [0u8; 4];
    read_exact(r, &mut buf, path)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read, path: &Path) -> Result<u64> {
    let mut buf = [0u8; 8];
    read_exact(r, &mut buf, path)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64_vec(r: &mut impl Read, count: usize, path: &Path) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for _ in 0..count {
        read_exact(r, &mut buf, path)?;
        out.push(f64::from_le_bytes(buf));
    }
    Ok(out)
}
