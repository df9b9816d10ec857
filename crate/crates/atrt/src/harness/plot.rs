//! Heatmaps of |f|, arg f and error maps on a Cartesian raster of the disc.

use crate::error::{AtrtError, Result};
use crate::fields::{DiscField, C64};
use std::f64::consts::PI;
use std::path::Path;

/// Which scalar to draw from a complex field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    Modulus,
    Argument,
}

const STOPS: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

fn colour(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (t.floor() as usize).min(STOPS.len() - 2);
    let s = t - i as f64;
    let mut out = [0u8; 3];
    for c in 0..3 {
        out[c] = (STOPS[i][c] * (1.0 - s) + STOPS[i + 1][c] * s).round() as u8;
    }
    out
}

/// Samples on an n × n raster of [−1, 1]², `None` outside the disc.
pub fn raster(f: &DiscField, n: usize) -> Vec<Option<C64>> {
    let pts: Vec<C64> = (0..n * n)
        .map(|idx| {
            let (r, c) = (idx / n, idx % n);
            C64::new(-1.0 + (c as f64 + 0.5) * 2.0 / n as f64, 1.0 - (r as f64 + 0.5) * 2.0 / n as f64)
        })
        .collect();
    let inside: Vec<C64> = pts.iter().copied().filter(|z| z.norm() < 1.0).collect();
    let mut vals = f.eval_many(&inside).into_iter();
    pts.iter().map(|z| if z.norm() < 1.0 { vals.next() } else { None }).collect()
}

pub fn heatmap_png(path: &Path, f: &DiscField, channel: Channel, n: usize) -> Result<()> {
    let samples = raster(f, n);
    let scalar = |v: C64| match channel {
        Channel::Modulus => v.norm(),
        Channel::Argument => (v.arg() + PI) / (2.0 * PI),
    };
    let max = match channel {
        Channel::Modulus => samples.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max),
        Channel::Argument => 1.0,
    };
    let mut img = image::RgbImage::new(n as u32, n as u32);
    for (idx, s) in samples.iter().enumerate() {
        let px = match s {
            Some(v) => colour(if max > 0.0 { scalar(*v) / max } else { 0.0 }),
            None => [255, 255, 255],
        };
        img.put_pixel((idx % n) as u32, (idx / n) as u32, image::Rgb(px));
    }
    img.save(path).map_err(|e| AtrtError::Format(format!("png {}: {e}", path.display())))
}

/// `x,y,re,im` rows of the raster inside the disc.
pub fn raster_csv(path: &Path, f: &DiscField, n: usize) -> Result<()> {
    use std::io::Write;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "x,y,re,im")?;
    for (idx, s) in raster(f, n).iter().enumerate() {
        if let Some(v) = s {
            let (r, c) = (idx / n, idx % n);
            let (x, y) = (-1.0 + (c as f64 + 0.5) * 2.0 / n as f64, 1.0 - (r as f64 + 0.5) * 2.0 / n as f64);
            writeln!(w, "{x},{y},{:e},{:e}", v.re, v.im)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// |f|, arg f PNGs for `stem`; falls back to CSV when PNG encoding fails.
pub fn plot_field(dir: &Path, stem: &str, f: &DiscField, n: usize) -> Result<()> {
    let png = heatmap_png(&dir.join(format!("{stem}_abs.png")), f, Channel::Modulus, n)
        .and_then(|_| heatmap_png(&dir.join(format!("{stem}_arg.png")), f, Channel::Argument, n));
    if png.is_err() {
        raster_csv(&dir.join(format!("{stem}.csv")), f, n)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::PolarGrid;

    #[test]
    fn writes_png_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let g = PolarGrid::new(6, 12).unwrap();
        let f = DiscField::analytic(&g, "f", |z| z * z);
        heatmap_png(&dir.path().join("a.png"), &f, Channel::Modulus, 32).unwrap();
        let img = image::open(dir.path().join("a.png")).unwrap().to_rgb8();
        assert_eq!(img.dimensions(), (32, 32));
        assert_eq!(img.get_pixel(0, 0).0, [255, 255, 255]);
        raster_csv(&dir.path().join("a.csv"), &f, 16).unwrap();
        let rows = std::fs::read_to_string(dir.path().join("a.csv")).unwrap().lines().count();
        assert!(rows > 150 && rows < 16 * 16);
        assert_eq!(colour(0.0), [68, 1, 84]);
        assert_eq!(colour(1.0), [253, 231, 37]);
    }
}
