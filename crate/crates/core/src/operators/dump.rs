//! Binary dumps of assembled operators.
//!
//! Layout (little endian): magic `NCBEOPS1`, `u32` dimension, `u32` degree, kernel id
//! string, `u32` block count, then per block a name string, `u32` rows, `u32` cols and
//! `rows * cols` row-major `f64` values. Strings are a `u32` byte length plus UTF-8.

use std::io::{Read, Write};

use crate::basis::DofMap;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

use super::{kron_vectors, CollisionOps, KronOp, Nonlinearity, OperatorSet, StabilityBound};

const MAGIC: &[u8; 8] = b"NCBEOPS1";

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorDump {
    pub dim: u32,
    pub degree: u32,
    pub kernel_id: String,
    pub blocks: Vec<(String, DenseMatrix)>,
}

impl OperatorDump {
    pub(super) fn from_operators(ops: &OperatorSet) -> Self {
        let mut blocks = Vec::new();
        for (a, m) in ops.mass.iter().enumerate() {
            blocks.push((format!("mass/{a}"), m.clone()));
        }
        let st = ops.stability;
        blocks.push((
            "stability".to_string(),
            row(vec![st.c0, st.b0.unwrap_or(f64::NAN), st.measure, st.k.unwrap_or(f64::NAN)]),
        ));
        for (t, term) in ops.terms.iter().enumerate() {
            blocks.push((format!("term/{t}/coeff"), row(vec![term.loss.coeff])));
            for (a, m) in term.loss.factors.iter().enumerate() {
                blocks.push((format!("term/{t}/loss/{a}"), m.clone()));
            }
            for (a, v) in term.moments.iter().enumerate() {
                blocks.push((format!("term/{t}/v/{a}"), row(v.clone())));
            }
            for (s, g) in term.gains.iter().enumerate() {
                blocks.push((format!("term/{t}/gain/{s}/coeff"), row(vec![g.coeff])));
                for (a, m) in g.factors.iter().enumerate() {
                    blocks.push((format!("term/{t}/gain/{s}/{a}"), m.clone()));
                }
            }
        }
        Self {
            dim: ops.dofs.dim() as u32,
            degree: ops.dofs.degree() as u32,
            kernel_id: ops.kernel_id.clone(),
            blocks,
        }
    }

    fn block(&self, name: &str) -> Result<&DenseMatrix> {
        self.blocks
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::Format(format!("missing block `{name}`")))
    }

    fn has(&self, name: &str) -> bool {
        self.blocks.iter().any(|(n, _)| n == name)
    }

    pub(super) fn to_operators(&self, dofs: &DofMap, mode: Nonlinearity) -> Result<OperatorSet> {
        if self.dim as usize != dofs.dim() || self.degree as usize != dofs.degree() {
            return Err(Error::Format(format!(
                "dump is for d = {}, r = {}; mesh has d = {}, r = {}",
                self.dim,
                self.degree,
                dofs.dim(),
                dofs.degree()
            )));
        }
        let d = dofs.dim();
        let lens = dofs.axis_lens();
        let square = |name: String, a: usize| -> Result<DenseMatrix> {
            let m = self.block(&name)?.clone();
            if m.rows() != lens[a] || m.cols() != lens[a] {
                return Err(Error::Format(format!("block `{name}` has the wrong shape")));
            }
            Ok(m)
        };
        let scalar = |name: String| -> Result<f64> { Ok(self.block(&name)?.data()[0]) };
        let mass = (0..d).map(|a| square(format!("mass/{a}"), a)).collect::<Result<Vec<_>>>()?;
        let st = self.block("stability")?.data().to_vec();
        if st.len() != 4 {
            return Err(Error::Format("stability block must have four entries".into()));
        }
        let opt = |v: f64| (!v.is_nan()).then_some(v);
        let stability = StabilityBound { c0: st[0], b0: opt(st[1]), measure: st[2], k: opt(st[3]) };
        let mut terms = Vec::new();
        let mut t = 0;
        while self.has(&format!("term/{t}/coeff")) {
            let loss = KronOp {
                coeff: scalar(format!("term/{t}/coeff"))?,
                factors: (0..d).map(|a| square(format!("term/{t}/loss/{a}"), a)).collect::<Result<_>>()?,
            };
            let moments: Vec<Vec<f64>> = (0..d)
                .map(|a| {
                    let v = self.block(&format!("term/{t}/v/{a}"))?.data().to_vec();
                    if v.len() != lens[a] {
                        return Err(Error::Format(format!("moment vector {t}/{a} has the wrong length")));
                    }
                    Ok(v)
                })
                .collect::<Result<_>>()?;
            let mut gains = Vec::new();
            let mut s = 0;
            while self.has(&format!("term/{t}/gain/{s}/coeff")) {
                gains.push(KronOp {
                    coeff: scalar(format!("term/{t}/gain/{s}/coeff"))?,
                    factors: (0..d)
                        .map(|a| square(format!("term/{t}/gain/{s}/{a}"), a))
                        .collect::<Result<_>>()?,
                });
                s += 1;
            }
            terms.push(CollisionOps { loss, v: kron_vectors(&moments), moments, gains });
            t += 1;
        }
        OperatorSet::from_parts(dofs.clone(), mass, terms, mode, stability, self.kernel_id.clone())
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&self.dim.to_le_bytes())?;
        w.write_all(&self.degree.to_le_bytes())?;
        write_str(&mut w, &self.kernel_id)?;
        w.write_all(&(self.blocks.len() as u32).to_le_bytes())?;
        for (name, m) in &self.blocks {
            write_str(&mut w, name)?;
            w.write_all(&(m.rows() as u32).to_le_bytes())?;
            w.write_all(&(m.cols() as u32).to_le_bytes())?;
            for v in m.data() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(eof)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let dim = read_u32(&mut r)?;
        let degree = read_u32(&mut r)?;
        let kernel_id = read_str(&mut r)?;
        let count = read_u32(&mut r)?;
        let mut blocks = Vec::with_capacity(count.min(1024) as usize);
        for _ in 0..count {
            let name = read_str(&mut r)?;
            let rows = read_u32(&mut r)? as usize;
            let cols = read_u32(&mut r)? as usize;
            let len = rows
                .checked_mul(cols)
                .filter(|&l| l <= 1 << 28)
                .ok_or_else(|| Error::Format(format!("block `{name}` too large")))?;
            let mut bytes = vec![0u8; len * 8];
            r.read_exact(&mut bytes).map_err(eof)?;
            let data = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of eight bytes")))
                .collect();
            blocks.push((name, DenseMatrix::from_row_major(rows, cols, data)?));
        }
        Ok(Self { dim, degree, kernel_id, blocks })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

fn row(v: Vec<f64>) -> DenseMatrix {
    let n = v.len();
    DenseMatrix::from_row_major(1, n, v).expect("row vector shape")
}

fn eof(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("truncated operator dump".into())
    } else {
        Error::Io(e)
    }
}

fn write_str(w: &mut impl Write, s: &str) -> Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(eof)?;
    Ok(u32::from_le_bytes(b))
}

fn read_str(r: &mut impl Read) -> Result<String> {
    let len = read_u32(r)? as usize;
    if len > 1 << 20 {
        return Err(Error::Format("string too long".into()));
    }
    let mut b = vec![0u8; len];
    r.read_exact(&mut b).map_err(eof)?;
    String::from_utf8(b).map_err(|_| Error::Format("string is not UTF-8".into()))
}
