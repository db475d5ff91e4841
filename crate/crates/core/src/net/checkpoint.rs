//! Flat-text checkpoint: a version line, `key value` header lines, then each
//! parameter matrix as a `name rows cols` line followed by row-major values in
//! shortest round-trip exponent notation. Loading and re-saving reproduces the
//! file byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::network::{Activation, Network};
use crate::fsutil::{read_to_string, write_atomic};
use crate::{Error, Result};

const MAGIC: &str = "mbdenoise-checkpoint v1";

/// A trained network with everything needed to run it on full-rate audio.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub network: Network,
    pub fs: u32,
    pub frame_len: usize,
    pub decim_factor: usize,
    pub aa_order: u32,
    pub aa_taps: usize,
    /// Corpus amplitude scale: network frames are physical frames divided by this.
    pub scale: f64,
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let n = &self.network;
        let mut s = String::new();
        let _ = writeln!(s, "{MAGIC}");
        let _ = writeln!(s, "fs {}", self.fs);
        let _ = writeln!(s, "frame_len {}", self.frame_len);
        let _ = writeln!(s, "decim_factor {}", self.decim_factor);
        let _ = writeln!(s, "aa_order {}", self.aa_order);
        let _ = writeln!(s, "aa_taps {}", self.aa_taps);
        let _ = writeln!(s, "scale {:e}", self.scale);
        let _ = writeln!(s, "seed {}", n.seed);
        let _ = writeln!(s, "activation {}", n.activation);
        let _ = writeln!(s, "f_frozen {}", u8::from(n.f_frozen));
        let _ = writeln!(s, "dim {}", n.dim());
        let _ = writeln!(s, "hidden {}", n.hidden());
        write_matrix(&mut s, "w1", &n.w1);
        write_vector(&mut s, "b1", &n.b1);
        write_matrix(&mut s, "w2", &n.w2);
        write_vector(&mut s, "b2", &n.b2);
        write_matrix(&mut s, "f", &n.f);
        s.push_str("end\n");
        s
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let mut p = Parser {
            lines: text.lines(),
            path,
            lineno: 0,
        };
        if p.next_line()? != MAGIC {
            return Err(p.err("unrecognised header or version"));
        }
        let fs = p.field("fs")?;
        let frame_len = p.field("frame_len")?;
        let decim_factor = p.field("decim_factor")?;
        let aa_order = p.field("aa_order")?;
        let aa_taps = p.field("aa_taps")?;
        let scale: f64 = p.field("scale")?;
        let seed = p.field("seed")?;
        let activation: Activation = p.field_str("activation")?.parse().map_err(|_| p.err("bad activation"))?;
        let f_frozen = match p.field_str("f_frozen")?.as_str() {
            "0" => false,
            "1" => true,
            _ => return Err(p.err("f_frozen must be 0 or 1")),
        };
        let dim: usize = p.field("dim")?;
        let hidden: usize = p.field("hidden")?;
        let w1 = p.matrix("w1", hidden, dim)?;
        let b1 = p.vector("b1", hidden)?;
        let w2 = p.matrix("w2", dim, hidden)?;
        let b2 = p.vector("b2", dim)?;
        let f = p.matrix("f", dim, dim)?;
        if p.next_line()? != "end" {
            return Err(p.err("missing end marker"));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(p.err("scale must be positive"));
        }
        let network = Network {
            w1,
            b1,
            w2,
            b2,
            f,
            activation,
            f_frozen,
            seed,
        };
        if !network.all_finite() {
            return Err(p.err("non-finite parameter"));
        }
        Ok(Checkpoint {
            network,
            fs,
            frame_len,
            decim_factor,
            aa_order,
            aa_taps,
            scale,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Checkpoint::from_text(&read_to_string(path)?, path)
    }
}

fn write_matrix(s: &mut String, name: &str, m: &Array2<f64>) {
    let _ = writeln!(s, "{name} {} {}", m.nrows(), m.ncols());
    for row in m.rows() {
        write_row(s, row.iter());
    }
}

fn write_vector(s: &mut String, name: &str, v: &Array1<f64>) {
    let _ = writeln!(s, "{name} {}", v.len());
    write_row(s, v.iter());
}

fn write_row<'a>(s: &mut String, values: impl Iterator<Item = &'a f64>) {
    for (i, v) in values.enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{v:e}");
    }
    s.push('\n');
}

struct Parser<'a> {
    lines: std::str::Lines<'a>,
    path: &'a Path,
    lineno: usize,
}

impl Parser<'_> {
    fn err(&self, reason: &str) -> Error {
        Error::Checkpoint {
            path: self.path.to_path_buf(),
            reason: format!("line {}: {reason}", self.lineno),
        }
    }

    fn next_line(&mut self) -> Result<&str> {
        self.lineno += 1;
        self.lines.next().ok_or_else(|| Error::Checkpoint {
            path: self.path.to_path_buf(),
            reason: "unexpected end of file".into(),
        })
    }

    fn field_str(&mut self, key: &str) -> Result<String> {
        let line = self.next_line()?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v.to_string()),
            _ => Err(self.err(&format!("expected `{key} <value>`"))),
        }
    }

    fn field<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.field_str(key)?;
        v.parse().map_err(|_| self.err(&format!("bad value for {key}: {v:?}")))
    }

    fn row(&mut self, expected: usize) -> Result<Vec<f64>> {
        let line = self.next_line()?;
        let values: std::result::Result<Vec<f64>, _> = line.split(' ').map(str::parse).collect();
        let values = values.map_err(|_| self.err("unparseable number"))?;
        if values.len() != expected {
            return Err(self.err(&format!("expected {expected} values, found {}", values.len())));
        }
        Ok(values)
    }

    fn matrix(&mut self, name: &str, rows: usize, cols: usize) -> Result<Array2<f64>> {
        let header = format!("{name} {rows} {cols}");
        if self.next_line()? != header {
            return Err(self.err(&format!("expected `{header}`")));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            data.extend(self.row(cols)?);
        }
        Ok(Array2::from_shape_vec((rows, cols), data).expect("shape checked"))
    }

    fn vector(&mut self, name: &str, len: usize) -> Result<Array1<f64>> {
        let header = format!("{name} {len}");
        if self.next_line()? != header {
            return Err(self.err(&format!("expected `{header}`")));
        }
        Ok(Array1::from(self.row(len)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::design_butterworth;
    use proptest::prelude::*;

    fn checkpoint(seed: u64) -> Checkpoint {
        let mut network = Network::init(16, 4, seed, &design_butterworth(8, 799.2, 4096.0, 5).unwrap()).unwrap();
        network.b2[3] = -1.25e-300;
        network.f_frozen = false;
        Checkpoint {
            network,
            fs: 32_768,
            frame_len: 128,
            decim_factor: 8,
            aa_order: 10,
            aa_taps: 255,
            scale: 0.1 + seed as f64,
        }
    }

    proptest! {
        #[test]
        fn byte_stable_round_trip(seed in 0u64..1000) {
            let ck = checkpoint(seed);
            let text = ck.to_text();
            let back = Checkpoint::from_text(&text, Path::new("mem")).unwrap();
            prop_assert_eq!(&back, &ck);
            prop_assert_eq!(back.to_text(), text);
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.ckpt");
        let ck = checkpoint(3);
        ck.save(&p).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        Checkpoint::load(&p).unwrap().save(&p).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), bytes);
    }

    #[test]
    fn rejects_corruption() {
        let text = checkpoint(1).to_text();
        let p = Path::new("mem");
        assert!(Checkpoint::from_text(&text.replace("v1", "v2"), p).is_err());
        assert!(Checkpoint::from_text(&text.replace("activation tanh", "activation relu"), p).is_err());
        assert!(Checkpoint::from_text(&text.replace("\nend\n", "\n"), p).is_err());
        assert!(Checkpoint::from_text(&text.replace("hidden 4", "hidden 5"), p).is_err());
        let truncated = &text[..text.len() / 2];
        assert!(Checkpoint::from_text(truncated, p).is_err());
    }
}
