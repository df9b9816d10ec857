//! ATF1 arrays, CSV slices, sinogram files and representative directories.
//!
//! An ATF1 record is the magic `ATF1`, a little-endian u32 rank, `rank` u32 dims, then
//! `prod(dims)` complex values as interleaved little-endian f64 (re, im). Files may hold
//! several records back to back.

use crate::error::{AtrtError, Result};
use crate::fields::{BoundaryField, BoundaryGrid, DiscField, PolarGrid, C64};
use crate::gauge::GaugeRepresentative;
use crate::transport::Sinogram;
use super::config::KeyValues;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

const MAGIC: &[u8; 4] = b"ATF1";

pub fn write_atf1<W: Write>(w: &mut W, dims: &[usize], data: &[C64]) -> Result<()> {
    let n: usize = dims.iter().product();
    if n != data.len() {
        return Err(AtrtError::Format(format!("dims {dims:?} hold {n} values, got {}", data.len())));
    }
    w.write_all(MAGIC)?;
    w.write_all(&(dims.len() as u32).to_le_bytes())?;
    for &d in dims {
        let d = u32::try_from(d).map_err(|_| AtrtError::Format(format!("dimension {d} exceeds u32")))?;
        w.write_all(&d.to_le_bytes())?;
    }
    for v in data {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_atf1<R: Read>(r: &mut R) -> Result<(Vec<usize>, Vec<C64>)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(AtrtError::Format(format!("bad magic {magic:?}")));
    }
    let rank = read_u32(r)? as usize;
    if rank > 8 {
        return Err(AtrtError::Format(format!("implausible rank {rank}")));
    }
    let dims = (0..rank).map(|_| read_u32(r).map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
    let n: usize = dims.iter().product();
    let mut buf = vec![0u8; n * 16];
    r.read_exact(&mut buf)?;
    let data = buf
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            C64::new(re, im)
        })
        .collect();
    Ok((dims, data))
}

pub fn save_atf1(path: &Path, dims: &[usize], data: &[C64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_atf1(&mut w, dims, data)?;
    w.flush()?;
    Ok(())
}

pub fn load_atf1(path: &Path) -> Result<(Vec<usize>, Vec<C64>)> {
    read_atf1(&mut BufReader::new(File::open(path)?))
}

/// `i,j,re,im` rows for a 1-D (j = 0) or 2-D array.
pub fn save_csv(path: &Path, dims: &[usize], data: &[C64]) -> Result<()> {
    let cols = match dims {
        [_] => 1,
        [_, c] => *c,
        _ => return Err(AtrtError::Format(format!("CSV export needs rank 1 or 2, got {dims:?}"))),
    };
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "i,j,re,im")?;
    for (idx, v) in data.iter().enumerate() {
        writeln!(w, "{},{},{:e},{:e}", idx / cols, idx % cols, v.re, v.im)?;
    }
    w.flush()?;
    Ok(())
}

/// Header record [N_β, N_α, a∞, m] followed by the [N_β, N_α] data record.
pub fn save_sinogram(path: &Path, s: &Sinogram) -> Result<()> {
    let g = s.grid();
    let header = [g.n_beta as f64, g.n_alpha as f64, s.a_inf, s.m as f64].map(|x| C64::new(x, 0.0));
    let mut w = BufWriter::new(File::create(path)?);
    write_atf1(&mut w, &[4], &header)?;
    write_atf1(&mut w, &[g.n_beta, g.n_alpha], s.data.values())?;
    w.flush()?;
    Ok(())
}

pub fn load_sinogram(path: &Path) -> Result<Sinogram> {
    let mut r = BufReader::new(File::open(path)?);
    let (hd, h) = read_atf1(&mut r)?;
    if hd != [4] {
        return Err(AtrtError::Format(format!("sinogram header must have dims [4], got {hd:?}")));
    }
    let (dims, data) = read_atf1(&mut r)?;
    let (nb, na) = (h[0].re as usize, h[1].re as usize);
    if dims != [nb, na] {
        return Err(AtrtError::Format(format!("sinogram dims {dims:?} disagree with header ({nb}, {na})")));
    }
    let grid = BoundaryGrid::new(nb, na)?;
    Ok(Sinogram { data: BoundaryField::from_values(grid, data)?, a_inf: h[2].re, m: h[3].re.round() as i32 })
}

/// Polar-grid samples as an [n_rho, n_beta] array.
pub fn save_disc(path: &Path, f: &DiscField) -> Result<()> {
    let g = f.grid();
    save_atf1(path, &[g.n_rho(), g.n_beta()], f.values())
}

/// Loads polar samples, reusing `grid` when its shape matches.
pub fn load_disc(path: &Path, grid: Option<&Arc<PolarGrid>>) -> Result<DiscField> {
    let (dims, data) = load_atf1(path)?;
    let [nr, nb] = dims[..] else {
        return Err(AtrtError::Format(format!("disc field must be rank 2, got {dims:?}")));
    };
    let grid = match grid {
        Some(g) if g.n_rho() == nr && g.n_beta() == nb => g.clone(),
        _ => PolarGrid::new(nr, nb)?,
    };
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("field");
    DiscField::from_values(&grid, name, data)
}

fn component_file(name: &str) -> String {
    format!("{}.atf", name.replace('+', "p").replace('-', "m"))
}

pub fn save_representative(dir: &Path, rep: &GaugeRepresentative) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let comps = rep.components();
    for (name, f) in &comps {
        save_disc(&dir.join(component_file(name)), f)?;
    }
    let g = rep.grid();
    let mut kv = KeyValues::default();
    kv.0.insert("format".into(), "gauge_representative".into());
    kv.0.insert("m".into(), rep.m.to_string());
    kv.0.insert("n_rho".into(), g.n_rho().to_string());
    kv.0.insert("n_beta".into(), g.n_beta().to_string());
    kv.0.insert("components".into(), comps.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>().join(","));
    std::fs::write(dir.join("manifest.txt"), kv.render())?;
    Ok(())
}

pub fn load_representative(dir: &Path) -> Result<GaugeRepresentative> {
    let kv = KeyValues::load(&dir.join("manifest.txt"))?;
    let need = |k: &str| kv.0.get(k).cloned().ok_or_else(|| AtrtError::Format(format!("manifest lacks {k}")));
    let m: i32 = need("m")?.parse().map_err(|_| AtrtError::Format("bad m".into()))?;
    let nr: usize = need("n_rho")?.parse().map_err(|_| AtrtError::Format("bad n_rho".into()))?;
    let nb: usize = need("n_beta")?.parse().map_err(|_| AtrtError::Format("bad n_beta".into()))?;
    let grid = PolarGrid::new(nr, nb)?;
    let load = |name: &str| load_disc(&dir.join(component_file(name)), Some(&grid)).map(|f| f.named(name));
    let mut rep = GaugeRepresentative::zeros(&grid, m);
    rep.g0 = load("g0")?;
    rep.gs = load("gs")?;
    for k in 1..=m {
        rep.gk[k as usize - 1] = (load(&format!("g{k}+"))?, load(&format!("g{k}-"))?);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atf1_round_trip_and_layout() {
        let data = vec![C64::new(1.5, -2.0), C64::new(0.0, 3.25)];
        let mut buf = Vec::new();
        write_atf1(&mut buf, &[2], &data).unwrap();
        assert_eq!(&buf[..4], b"ATF1");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(buf[12..20].try_into().unwrap()), 1.5);
        assert_eq!(f64::from_le_bytes(buf[20..28].try_into().unwrap()), -2.0);
        assert_eq!(buf.len(), 12 + 32);
        let (dims, back) = read_atf1(&mut buf.as_slice()).unwrap();
        assert_eq!((dims, back), (vec![2], data.clone()));
        assert!(write_atf1(&mut Vec::new(), &[3], &data).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_atf1(&mut bad.as_slice()).is_err());
        assert!(read_atf1(&mut &buf[..20]).is_err());
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = BoundaryGrid::new(8, 8).unwrap();
        let s = Sinogram { data: BoundaryField::from_fn(grid, |b, a| C64::new(b, a)), a_inf: 0.7, m: 2 };
        let p = dir.path().join("s.atf");
        save_sinogram(&p, &s).unwrap();
        let back = load_sinogram(&p).unwrap();
        assert_eq!(back.data.values(), s.data.values());
        assert_eq!((back.a_inf, back.m), (0.7, 2));

        let pg = PolarGrid::new(4, 8).unwrap();
        let mut rep = GaugeRepresentative::zeros(&pg, 2);
        rep.gs = DiscField::analytic(&pg, "gs", |z| z * z);
        rep.gk[1].1 = DiscField::analytic(&pg, "g2-", |z| z.conj());
        save_representative(&dir.path().join("rep"), &rep).unwrap();
        let back = load_representative(&dir.path().join("rep")).unwrap();
        assert_eq!(back.m, 2);
        assert_eq!(back.gs.values(), rep.gs.values());
        assert_eq!(back.gk[1].1.values(), rep.gk[1].1.values());

        save_csv(&dir.path().join("s.csv"), &[8, 8], s.data.values()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
        assert_eq!(text.lines().count(), 65);
        assert!(save_csv(&dir.path().join("x.csv"), &[2, 2, 2], &[C64::new(0.0, 0.0); 8]).is_err());
    }
}
