//! CSV emission. Every number goes through [`num`] so that repeated runs
//! produce byte-identical files.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::analysis::{inversion_profile, CoherenceMap, EchoEvent, UvPoint};
use crate::ensemble::EnsembleSignal;
use crate::Result;

/// Nine significant digits in scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:.8e}")
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<fs::File>)> {
    let path = dir.join(name);
    let file = fs::File::create(&path)?;
    Ok((path, BufWriter::new(file)))
}

pub fn write_signal(w: &mut impl Write, signal: &EnsembleSignal) -> io::Result<()> {
    writeln!(w, "t_us,reP,imP,absP2,rho11,rho22,rho33,inversion_w")?;
    let inversion = inversion_profile(signal);
    for (i, w_i) in inversion.iter().enumerate() {
        let p = signal.polarization[i];
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            num(signal.times_us[i]),
            num(p.re),
            num(p.im),
            num(p.norm_sqr()),
            num(signal.rho11[i]),
            num(signal.rho22[i]),
            num(signal.rho33[i]),
            num(*w_i),
        )?;
    }
    Ok(())
}

pub fn write_echoes(
    w: &mut impl Write,
    events: &[EchoEvent],
    matched: &[Option<String>],
) -> io::Result<()> {
    writeln!(w, "t_us,amplitude,im_sign,inverted,matched_bit")?;
    for (e, m) in events.iter().zip(matched) {
        writeln!(
            w,
            "{},{},{},{},{}",
            num(e.t_us),
            num(e.amplitude),
            e.im_sign,
            e.inverted,
            m.as_deref().unwrap_or("")
        )?;
    }
    Ok(())
}

pub fn write_cohmap(w: &mut impl Write, map: &CoherenceMap) -> io::Result<()> {
    write!(w, "delta_khz")?;
    for &t in &map.times_us {
        write!(w, ",{}", num(t))?;
    }
    writeln!(w)?;
    for (delta, row) in map.deltas_khz.iter().zip(&map.rows) {
        write!(w, "{}", num(*delta))?;
        for &x in row {
            write!(w, ",{}", num(x))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_uv(w: &mut impl Write, points: &[UvPoint]) -> io::Result<()> {
    writeln!(w, "t_us,u,v")?;
    for p in points {
        writeln!(w, "{},{},{}", num(p.t_us), num(p.u), num(p.v))?;
    }
    Ok(())
}

/// One row of `sweep.csv`; absent echoes leave their fields empty.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub e1: Option<EchoEvent>,
    pub e2: Option<EchoEvent>,
}

pub fn write_sweep(w: &mut impl Write, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(w, "value,T_E1,T_E2,amp_E1,amp_E2,inverted_E1,inverted_E2")?;
    let t = |e: &Option<EchoEvent>| e.map(|e| num(e.t_us)).unwrap_or_default();
    let a = |e: &Option<EchoEvent>| e.map(|e| num(e.signed_amplitude())).unwrap_or_default();
    let inv = |e: &Option<EchoEvent>| e.map(|e| e.inverted.to_string()).unwrap_or_default();
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            num(r.value),
            t(&r.e1),
            t(&r.e2),
            a(&r.e1),
            a(&r.e2),
            inv(&r.e1),
            inv(&r.e2)
        )?;
    }
    Ok(())
}

/// Write with one of the functions above into `dir/name`.
pub(crate) fn emit<F>(dir: &Path, name: &str, f: F) -> Result<PathBuf>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> io::Result<()>,
{
    let (path, mut w) = create(dir, name)?;
    f(&mut w)?;
    w.flush()?;
    Ok(path)
}
