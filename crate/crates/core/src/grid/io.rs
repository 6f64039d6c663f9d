//! Field snapshots (raw little-endian f64 per component plus a JSON sidecar)
//! and CSV probes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::field::StaggeredField;
use super::layout::GridLayout;
use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::Vector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub domain: BoxDomain,
    pub h: f64,
    pub component: String,
    pub layout: String,
    pub dims: [usize; 3],
    /// Where entries sit: `faces` along the component axis, `cells+walls` across it, `cells` for pressure.
    pub placement: [String; 3],
}

const NAMES: [&str; 4] = ["u", "v", "w", "p"];

fn part_path(stem: &Path, name: &str, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(format!(".{name}.{ext}"));
    PathBuf::from(s)
}

fn sidecar(l: &GridLayout, part: usize) -> Sidecar {
    let (dims, placement) = if part < 3 {
        (
            l.comp_dims(part),
            [0, 1, 2].map(|a| if a == part { "faces".to_string() } else { "cells+walls".to_string() }),
        )
    } else {
        (l.n, [0, 1, 2].map(|_| "cells".to_string()))
    };
    Sidecar {
        domain: l.domain,
        h: l.h,
        component: NAMES[part].to_string(),
        layout: "x-fastest".into(),
        dims,
        placement,
    }
}

/// Writes `<stem>.{u,v,w,p}.bin` and matching `.json` sidecars; returns the paths written.
pub fn save_snapshot(f: &StaggeredField, stem: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for part in 0..4 {
        let data = if part < 3 { &f.u[part] } else { &f.p };
        let bytes: Vec<u8> = data.iter().flat_map(|v| v.to_le_bytes()).collect();
        let bin = part_path(stem, NAMES[part], "bin");
        std::fs::write(&bin, bytes)?;
        let js = part_path(stem, NAMES[part], "json");
        std::fs::write(&js, serde_json::to_string_pretty(&sidecar(&f.layout, part))?)?;
        out.push(bin);
        out.push(js);
    }
    Ok(out)
}

pub fn load_snapshot(stem: &Path) -> Result<StaggeredField> {
    let mut layout: Option<GridLayout> = None;
    let mut parts: Vec<Vec<f64>> = Vec::new();
    for part in 0..4 {
        let sc: Sidecar = serde_json::from_str(&std::fs::read_to_string(part_path(stem, NAMES[part], "json"))?)?;
        let l = match layout {
            Some(l) => l,
            None => {
                let l = GridLayout::new(sc.domain, sc.h)?;
                layout = Some(l);
                l
            }
        };
        if sc != sidecar(&l, part) {
            return Err(Error::Format(format!("sidecar of component {} does not match the grid", NAMES[part])));
        }
        let bytes = std::fs::read(part_path(stem, NAMES[part], "bin"))?;
        let len = sc.dims.iter().product::<usize>();
        if bytes.len() != 8 * len {
            return Err(Error::Format(format!("component {} has {} bytes, expected {}", NAMES[part], bytes.len(), 8 * len)));
        }
        parts.push(bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect());
    }
    let p = parts.pop().unwrap();
    let w = parts.pop().unwrap();
    let v = parts.pop().unwrap();
    let u = parts.pop().unwrap();
    Ok(StaggeredField { layout: layout.unwrap(), u: [u, v, w], p })
}

/// Samples the interpolated velocity at `samples` points from `a` to `b`.
pub fn line_probe_csv(f: &StaggeredField, a: Vector, b: Vector, samples: usize) -> String {
    let mut s = String::from("s,x,y,z,u,v,w\n");
    let m = samples.max(2);
    for i in 0..m {
        let t = i as f64 / (m - 1) as f64;
        let x = a + (b - a) * t;
        let u = f.velocity_at(x);
        let _ = writeln!(s, "{t},{},{},{},{},{},{}", x.x, x.y, x.z, u.x, u.y, u.z);
    }
    s
}

/// Velocity on the cell-centre plane `x_axis = value`.
pub fn plane_probe_csv(f: &StaggeredField, axis: usize, value: f64) -> String {
    let l = &f.layout;
    let mut s = String::from("x,y,z,u,v,w\n");
    let (a1, a2) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    for j in 0..l.n[a2] {
        for i in 0..l.n[a1] {
            let mut x = l.domain.corner;
            x[axis] = value;
            x[a1] += (i as f64 + 0.5) * l.h;
            x[a2] += (j as f64 + 0.5) * l.h;
            let u = f.velocity_at(x);
            let _ = writeln!(s, "{},{},{},{},{},{}", x.x, x.y, x.z, u.x, u.y, u.z);
        }
    }
    s
}
