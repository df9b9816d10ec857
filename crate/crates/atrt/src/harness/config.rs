//! Flat `key = value` experiment configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Recognized keys:
//!
//! | key | meaning | default |
//! |---|---|---|
//! | `n_rho`, `n_theta_disc` | polar grid (radii, angles) | 32, 64 |
//! | `n_beta`, `n_alpha` | fan-beam grid | 256, 256 |
//! | `h_t`, `quad_order` | chord panel width and Gauss order | 2/512, 4 |
//! | `n_theta`, `k_max` | fiber samples and stored harmonics | 128, 16 |
//! | `phantom` | zero, gaussian_bump, poly_zk, zernike, tensor_mix, gauge_synthetic | gauge_synthetic |
//! | `order` | tensor order m | 2 |
//! | `center`, `sigma`, `amp` | bump parameters (complex as `re,im`) | 0.3,0 / 0.2 / 1,0 |
//! | `k`, `zernike_n`, `zernike_l` | poly_zk / zernike indices | 2 / 2 / 0 |
//! | `seed` | tensor_mix / gauge_synthetic seed | 7 |
//! | `att_amp`, `att_center`, `att_sigma` | Gaussian attenuation; sigma 0 is constant | 0.6,0.35 / 0.1,-0.1 / 0.5 |
//! | `tol`, `rho_mask` | relative L² tolerance and interior radius | 0.05, 0.9 |
//! | `residual_path` | series, fast or slow | series |
//! | `output_dir` | artifact directory (absent: nothing written) | none |

use super::phantom::{AttenuationSpec, PhantomKind, PhantomSpec};
use crate::error::{AtrtError, Result};
use crate::fields::{BoundaryGrid, PolarGrid, C64};
use crate::geometry::ChordQuadrature;
use crate::reconstruction::ResidualPath;
use crate::transport::{Discretization, ForwardConfig};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Parsed key/value pairs, in file order of last occurrence.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KeyValues(pub BTreeMap<String, String>);

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| AtrtError::Config(format!("line {}: expected key = value, got {raw:?}", n + 1)))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self(map))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn render(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.0
            .get(key)
            .map(|v| v.parse::<T>().map_err(|_| AtrtError::Config(format!("bad value for {key}: {v:?}"))))
            .transpose()
    }

    pub fn complex(&self, key: &str) -> Result<Option<C64>> {
        self.0.get(key).map(|v| parse_complex(v).ok_or_else(|| AtrtError::Config(format!("bad complex for {key}: {v:?}")))).transpose()
    }
}

/// `re,im` or a bare real.
pub fn parse_complex(s: &str) -> Option<C64> {
    match s.split_once(',') {
        Some((r, i)) => Some(C64::new(r.trim().parse().ok()?, i.trim().parse().ok()?)),
        None => Some(C64::new(s.trim().parse().ok()?, 0.0)),
    }
}

fn fmt_complex(c: C64) -> String {
    format!("{},{}", c.re, c.im)
}

const KEYS: &[&str] = &[
    "n_rho", "n_theta_disc", "n_beta", "n_alpha", "h_t", "quad_order", "n_theta", "k_max", "phantom", "order", "center",
    "sigma", "amp", "k", "zernike_n", "zernike_l", "seed", "att_amp", "att_center", "att_sigma", "tol", "rho_mask",
    "residual_path", "output_dir",
];

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub n_rho: usize,
    pub n_theta_disc: usize,
    pub n_beta: usize,
    pub n_alpha: usize,
    pub h_t: f64,
    pub quad_order: usize,
    pub n_theta: usize,
    pub k_max: i32,
    pub phantom: PhantomSpec,
    pub tol: f64,
    pub rho_mask: f64,
    pub residual_path: ResidualPath,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_rho: 32,
            n_theta_disc: 64,
            n_beta: 256,
            n_alpha: 256,
            h_t: 2.0 / 512.0,
            quad_order: 4,
            n_theta: 128,
            k_max: 16,
            phantom: PhantomSpec {
                kind: PhantomKind::GaugeSynthetic { seed: 7 },
                m: 2,
                attenuation: AttenuationSpec { amp: C64::new(0.6, 0.35), center: C64::new(0.1, -0.1), sigma: 0.5 },
            },
            tol: 0.05,
            rho_mask: 0.9,
            residual_path: ResidualPath::Series,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    /// Named presets: `m2-complex-a`, `m0-bump`, `zero`.
    pub fn preset(name: &str) -> Result<Self> {
        let mut c = Self::default();
        match name {
            "m2-complex-a" => {}
            "m0-bump" => {
                c.phantom.kind = PhantomKind::GaussianBump { center: C64::new(0.3, 0.0), sigma: 0.2, amp: C64::new(1.0, 0.0) };
                c.phantom.m = 0;
            }
            "zero" => {
                c.phantom.kind = PhantomKind::Zero;
                c.phantom.m = 0;
            }
            _ => return Err(AtrtError::Config(format!("unknown preset {name:?}"))),
        }
        Ok(c)
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        if let Some(bad) = kv.0.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(AtrtError::Config(format!("unknown key {bad:?}")));
        }
        let mut c = Self::default();
        macro_rules! take {
            ($field:expr, $key:literal) => {
                if let Some(v) = kv.get($key)? {
                    $field = v;
                }
            };
        }
        take!(c.n_rho, "n_rho");
        take!(c.n_theta_disc, "n_theta_disc");
        take!(c.n_beta, "n_beta");
        take!(c.n_alpha, "n_alpha");
        take!(c.h_t, "h_t");
        take!(c.quad_order, "quad_order");
        take!(c.n_theta, "n_theta");
        take!(c.k_max, "k_max");
        take!(c.phantom.m, "order");
        take!(c.tol, "tol");
        take!(c.rho_mask, "rho_mask");
        let seed = kv.get::<u64>("seed")?.unwrap_or(7);
        let kind = kv.0.get("phantom").map(String::as_str).unwrap_or("gauge_synthetic");
        c.phantom.kind = match kind {
            "zero" => PhantomKind::Zero,
            "gaussian_bump" => PhantomKind::GaussianBump {
                center: kv.complex("center")?.unwrap_or(C64::new(0.3, 0.0)),
                sigma: kv.get("sigma")?.unwrap_or(0.2),
                amp: kv.complex("amp")?.unwrap_or(C64::new(1.0, 0.0)),
            },
            "poly_zk" => PhantomKind::PolyZk { k: kv.get("k")?.unwrap_or(2) },
            "zernike" => PhantomKind::Zernike { n: kv.get("zernike_n")?.unwrap_or(2), l: kv.get("zernike_l")?.unwrap_or(0) },
            "tensor_mix" => PhantomKind::TensorMix { seed },
            "gauge_synthetic" => PhantomKind::GaugeSynthetic { seed },
            other => return Err(AtrtError::Config(format!("unknown phantom {other:?}"))),
        };
        let att = &mut c.phantom.attenuation;
        if let Some(v) = kv.complex("att_amp")? {
            att.amp = v;
        }
        if let Some(v) = kv.complex("att_center")? {
            att.center = v;
        }
        take!(att.sigma, "att_sigma");
        if let Some(p) = kv.0.get("residual_path") {
            c.residual_path = match p.as_str() {
                "series" => ResidualPath::Series,
                "fast" => ResidualPath::Fast,
                "slow" => ResidualPath::Slow,
                other => return Err(AtrtError::Config(format!("unknown residual_path {other:?}"))),
            };
        }
        c.output_dir = kv.0.get("output_dir").map(PathBuf::from);
        c.validate()?;
        Ok(c)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_key_values(&KeyValues::parse(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_key_values(&KeyValues::load(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(AtrtError::Config(m));
        if self.n_alpha % 4 != 0 || self.n_beta % self.n_alpha != 0 {
            return bad(format!("need 4 | n_alpha and n_alpha | n_beta (got {}, {})", self.n_alpha, self.n_beta));
        }
        if !(self.h_t > 0.0) || self.quad_order == 0 {
            return bad("h_t must be positive and quad_order ≥ 1".into());
        }
        if self.n_theta < 4 || self.k_max < 1 || self.k_max as usize >= self.n_theta / 2 {
            return bad(format!("need 1 ≤ k_max < n_theta/2 (got {}, {})", self.k_max, self.n_theta));
        }
        if !(self.tol > 0.0) || !(self.rho_mask > 0.0 && self.rho_mask <= 1.0) {
            return bad("tol must be positive and rho_mask in (0, 1]".into());
        }
        if self.phantom.m < 0 || self.phantom.m >= self.k_max {
            return bad(format!("order must lie in [0, k_max), got {}", self.phantom.m));
        }
        Ok(())
    }

    pub fn to_key_values(&self) -> KeyValues {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("n_rho", self.n_rho.to_string());
        put("n_theta_disc", self.n_theta_disc.to_string());
        put("n_beta", self.n_beta.to_string());
        put("n_alpha", self.n_alpha.to_string());
        put("h_t", self.h_t.to_string());
        put("quad_order", self.quad_order.to_string());
        put("n_theta", self.n_theta.to_string());
        put("k_max", self.k_max.to_string());
        put("order", self.phantom.m.to_string());
        put("phantom", self.phantom.kind.name().to_string());
        match &self.phantom.kind {
            PhantomKind::GaussianBump { center, sigma, amp } => {
                put("center", fmt_complex(*center));
                put("sigma", sigma.to_string());
                put("amp", fmt_complex(*amp));
            }
            PhantomKind::PolyZk { k } => put("k", k.to_string()),
            PhantomKind::Zernike { n, l } => {
                put("zernike_n", n.to_string());
                put("zernike_l", l.to_string());
            }
            PhantomKind::TensorMix { seed } | PhantomKind::GaugeSynthetic { seed } => put("seed", seed.to_string()),
            PhantomKind::Zero => {}
        }
        let a = self.phantom.attenuation;
        put("att_amp", fmt_complex(a.amp));
        put("att_center", fmt_complex(a.center));
        put("att_sigma", a.sigma.to_string());
        put("tol", self.tol.to_string());
        put("rho_mask", self.rho_mask.to_string());
        let path = match self.residual_path {
            ResidualPath::Series => "series",
            ResidualPath::Fast => "fast",
            ResidualPath::Slow => "slow",
        };
        put("residual_path", path.to_string());
        if let Some(d) = &self.output_dir {
            put("output_dir", d.display().to_string());
        }
        KeyValues(m)
    }

    pub fn discretization(&self) -> Result<Discretization> {
        let pgrid = PolarGrid::new(self.n_rho, self.n_theta_disc)?;
        let bgrid = BoundaryGrid::new(self.n_beta, self.n_alpha)?;
        let forward = ForwardConfig::new(bgrid, ChordQuadrature::new(self.h_t, self.quad_order));
        Ok(Discretization::new(pgrid, forward, self.n_theta, self.k_max))
    }

    /// Every resolution parameter scaled by 2^level (h_t by 2^−level); polar radii and k_max are kept.
    pub fn refined(&self, level: i32) -> Self {
        let s = 2f64.powi(level);
        let scale = |n: usize, min: usize| ((n as f64 * s).round() as usize).max(min);
        let mut c = self.clone();
        c.n_theta_disc = scale(self.n_theta_disc, 8);
        c.n_alpha = scale(self.n_alpha, 8);
        c.n_beta = scale(self.n_beta, 8).max(c.n_alpha);
        c.n_theta = scale(self.n_theta, 2 * self.k_max as usize + 2);
        c.h_t = self.h_t / s;
        c
    }
}
