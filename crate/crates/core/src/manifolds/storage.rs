//! Binary basis cache.
//!
//! ```text
//! "EPRD"            magic
//! u16               format version
//! header            model descriptor, lambda_max, resolution, provenance, mode count
//! [u8; 32]          SHA-256 of header ‖ records
//! records           one per mode
//! ```
//!
//! All integers and floats are little endian. The quadrature grid is not
//! stored; it is a deterministic function of the header and the modes.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{ManifoldModel, Mode, ModeRep, Parity, Provenance, Resolution, SpectralBasis};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u16 = 1;
const MAGIC: &[u8; 4] = b"EPRD";
const NONE: u32 = u32::MAX;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn i32(&mut self, v: i32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn opt(&mut self, v: Option<usize>) {
        self.u32(v.map_or(NONE, |v| v as u32));
    }
}

fn parity_byte(p: Parity) -> u8 {
    match p {
        Parity::Cos => 0,
        Parity::Sin => 1,
    }
}

fn encode(basis: &SpectralBasis) -> (Vec<u8>, Vec<u8>) {
    let mut h = Writer(Vec::new());
    match &basis.model {
        ManifoldModel::FlatTorus { periods } => {
            h.u8(0);
            h.u8(periods.len() as u8);
            periods.iter().for_each(|p| h.f64(*p));
        }
        ManifoldModel::Sphere2 => h.u8(1),
        ManifoldModel::RevTorus { major, minor } => {
            h.u8(2);
            h.f64(*major);
            h.f64(*minor);
        }
    }
    h.f64(basis.lambda_max);
    h.u32(basis.resolution.product_order as u32);
    h.opt(basis.resolution.grid_exactness);
    h.opt(basis.resolution.galerkin_n);
    h.u32(basis.galerkin_n as u32);
    match basis.provenance {
        Provenance::Exact => {
            h.u8(0);
            h.f64(0.0);
        }
        Provenance::Numerical { residual_bound } => {
            h.u8(1);
            h.f64(residual_bound);
        }
    }
    h.u64(basis.modes.len() as u64);

    let mut r = Writer(Vec::new());
    for mode in &basis.modes {
        r.u64(mode.id as u64);
        r.f64(mode.lambda);
        match &mode.rep {
            ModeRep::Torus { freq, parity } => {
                r.u8(0);
                r.u8(freq.len() as u8);
                freq.iter().for_each(|k| r.i32(*k));
                r.u8(parity_byte(*parity));
            }
            ModeRep::Sphere { l, m } => {
                r.u8(1);
                r.u32(*l);
                r.i32(*m);
            }
            ModeRep::RevTorus { m, parity, branch, profile } => {
                r.u8(2);
                r.u32(*m);
                r.u8(parity_byte(*parity));
                r.u32(*branch);
                r.u32(profile.len() as u32);
                profile.iter().for_each(|c| r.f64(*c));
            }
        }
    }
    (h.0, r.0)
}

fn digest_of(header: &[u8], records: &[u8]) -> [u8; 32] {
    let mut sha = Sha256::new();
    sha.update(header);
    sha.update(records);
    sha.finalize().into()
}

/// Hex SHA-256 content digest, identical to the one stored by [`save_basis`].
pub fn basis_digest(basis: &SpectralBasis) -> String {
    let (h, r) = encode(basis);
    digest_of(&h, &r).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn save_basis(basis: &SpectralBasis, path: &Path) -> Result<()> {
    let (header, records) = encode(basis);
    let digest = digest_of(&header, &records);
    let mut bytes = Vec::with_capacity(6 + header.len() + 32 + records.len());
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&header);
    bytes.extend_from_slice(&digest);
    bytes.extend_from_slice(&records);

    let tmp = path.with_extension("eprd.tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Corruption(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn opt(&mut self) -> Result<Option<usize>> {
        let v = self.u32()?;
        Ok((v != NONE).then_some(v as usize))
    }
    fn parity(&mut self) -> Result<Parity> {
        match self.u8()? {
            0 => Ok(Parity::Cos),
            1 => Ok(Parity::Sin),
            b => Err(Error::Corruption(format!("parity tag {b}"))),
        }
    }
}

pub fn load_basis(path: &Path) -> Result<SpectralBasis> {
    let bytes = fs::read(path)?;
    let mut rd = Reader { buf: &bytes, pos: 0 };
    if rd.take(4)? != MAGIC {
        return Err(Error::Corruption("missing EPRD magic".into()));
    }
    let version = rd.u16()?;
    if version != FORMAT_VERSION {
        return Err(Error::Version { found: version, expected: FORMAT_VERSION });
    }

    let header_start = rd.pos;
    let model = match rd.u8()? {
        0 => {
            let d = rd.u8()? as usize;
            if !(1..=2).contains(&d) {
                return Err(Error::Corruption(format!("flat torus dimension {d}")));
            }
            ManifoldModel::FlatTorus { periods: (0..d).map(|_| rd.f64()).collect::<Result<_>>()? }
        }
        1 => ManifoldModel::Sphere2,
        2 => ManifoldModel::RevTorus { major: rd.f64()?, minor: rd.f64()? },
        t => return Err(Error::Corruption(format!("model tag {t}"))),
    };
    let lambda_max = rd.f64()?;
    let resolution = Resolution { product_order: rd.u32()? as usize, grid_exactness: rd.opt()?, galerkin_n: rd.opt()? };
    let galerkin_n = rd.u32()? as usize;
    let provenance = match (rd.u8()?, rd.f64()?) {
        (0, _) => Provenance::Exact,
        (1, residual_bound) => Provenance::Numerical { residual_bound },
        (t, _) => return Err(Error::Corruption(format!("provenance tag {t}"))),
    };
    let count = rd.u64()?;
    let header_end = rd.pos;
    let stored: [u8; 32] = rd.take(32)?.try_into().unwrap();
    let records_start = rd.pos;
    if digest_of(&bytes[header_start..header_end], &bytes[records_start..]) != stored {
        return Err(Error::Corruption("content digest mismatch".into()));
    }

    let mut modes = Vec::with_capacity(count.min(1 << 20) as usize);
    for _ in 0..count {
        let id = rd.u64()? as usize;
        let lambda = rd.f64()?;
        let rep = match rd.u8()? {
            0 => {
                let d = rd.u8()? as usize;
                let freq = (0..d).map(|_| rd.i32()).collect::<Result<_>>()?;
                ModeRep::Torus { freq, parity: rd.parity()? }
            }
            1 => ModeRep::Sphere { l: rd.u32()?, m: rd.i32()? },
            2 => {
                let m = rd.u32()?;
                let parity = rd.parity()?;
                let branch = rd.u32()?;
                let len = rd.u32()? as usize;
                let profile = (0..len).map(|_| rd.f64()).collect::<Result<_>>()?;
                ModeRep::RevTorus { m, parity, branch, profile }
            }
            t => return Err(Error::Corruption(format!("mode tag {t}"))),
        };
        if id != modes.len() {
            return Err(Error::Corruption(format!("mode id {id} out of sequence")));
        }
        modes.push(Mode { id, lambda, rep });
    }
    if rd.pos != bytes.len() {
        return Err(Error::Corruption(format!("{} trailing bytes", bytes.len() - rd.pos)));
    }
    model.validate().map_err(|e| Error::Corruption(e.to_string()))?;
    SpectralBasis::from_modes(model, lambda_max, resolution, modes, provenance, galerkin_n)
}

/// Structured view of a basis for JSON export.
#[derive(Debug, Serialize)]
pub struct BasisExport<'a> {
    pub model: &'a ManifoldModel,
    pub lambda_max: f64,
    pub resolution: &'a Resolution,
    pub provenance: Provenance,
    pub galerkin_n: usize,
    pub grid_nodes: usize,
    pub grid_exactness: &'a [usize],
    pub digest: String,
    pub modes: Vec<ModeExport<'a>>,
}

#[derive(Debug, Serialize)]
pub struct ModeExport<'a> {
    pub name: String,
    #[serde(flatten)]
    pub mode: &'a Mode,
}

impl SpectralBasis {
    pub fn export(&self) -> BasisExport<'_> {
        BasisExport {
            model: &self.model,
            lambda_max: self.lambda_max,
            resolution: &self.resolution,
            provenance: self.provenance,
            galerkin_n: self.galerkin_n,
            grid_nodes: self.grid().len(),
            grid_exactness: self.exactness(),
            digest: basis_digest(self),
            modes: self.modes.iter().map(|m| ModeExport { name: m.rep.name(), mode: m }).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::build_basis;

    fn bases() -> Vec<SpectralBasis> {
        let r = Resolution::default();
        vec![
            build_basis(&ManifoldModel::flat_torus(2, 3.0).unwrap(), 6.0, &r).unwrap(),
            build_basis(&ManifoldModel::Sphere2, 5.0, &r).unwrap(),
            build_basis(&ManifoldModel::rev_torus(2.0, 1.0).unwrap(), 2.5, &r).unwrap(),
        ]
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        for (k, b) in bases().into_iter().enumerate() {
            let p = dir.path().join(format!("b{k}.eprd"));
            save_basis(&b, &p).unwrap();
            let back = load_basis(&p).unwrap();
            assert_eq!(back, b);
            assert_eq!(basis_digest(&back), basis_digest(&b));
        }
    }

    #[test]
    fn version_bump_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let b = &bases()[1];
        let p = dir.path().join("s.eprd");
        save_basis(b, &p).unwrap();
        let bytes = fs::read(&p).unwrap();

        let mut bumped = bytes.clone();
        bumped[4] += 1;
        fs::write(&p, &bumped).unwrap();
        assert!(matches!(load_basis(&p), Err(Error::Version { found: 2, expected: 1 })));

        fs::write(&p, &bytes[..bytes.len() - 5]).unwrap();
        assert!(matches!(load_basis(&p), Err(Error::Corruption(_))));

        let mut flipped = bytes.clone();
        *flipped.last_mut().unwrap() ^= 1;
        fs::write(&p, &flipped).unwrap();
        assert!(matches!(load_basis(&p), Err(Error::Corruption(_))));
    }
}
