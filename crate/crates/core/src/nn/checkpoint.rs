//! Parameter checkpoints: a short text header followed by raw parameters.
//!
//! ```text
//! pathens-checkpoint 1
//! layers 2 64 64 4
//! seed 17
//! step 120
//! params 4676
//! end
//! <params * 8 bytes: f64, little-endian>
//! ```

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::DenseNet;

const MAGIC: &str = "pathens-checkpoint 1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub net: DenseNet,
    pub seed: u64,
    pub step: u64,
}

impl Checkpoint {
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let layers: Vec<String> = self.net.sizes().iter().map(ToString::to_string).collect();
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "layers {}", layers.join(" "))?;
        writeln!(w, "seed {}", self.seed)?;
        writeln!(w, "step {}", self.step)?;
        writeln!(w, "params {}", self.net.n_params())?;
        writeln!(w, "end")?;
        for p in self.net.params() {
            w.write_all(&p.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: impl Read) -> Result<Self> {
        let mut reader = BufReader::new(r);
        let mut line = String::new();
        let mut line_no = 0;
        let mut next_line = |reader: &mut BufReader<_>| -> Result<(usize, String)> {
            line.clear();
            reader.read_line(&mut line)?;
            line_no += 1;
            Ok((line_no, line.trim_end().to_string()))
        };
        let (_, magic) = next_line(&mut reader)?;
        if magic != MAGIC {
            return Err(Error::Parse { line: 1, message: "not a checkpoint file".into() });
        }
        let (mut sizes, mut seed, mut step, mut count) = (None, None, None, None);
        loop {
            let (no, l) = next_line(&mut reader)?;
            if l == "end" {
                break;
            }
            let err = |m: &str| Error::Parse { line: no, message: m.to_string() };
            let (key, rest) = l.split_once(' ').ok_or_else(|| err("expected `key value`"))?;
            let nums = rest
                .split_whitespace()
                .map(|t| t.parse::<u64>().map_err(|_| err("expected integers")))
                .collect::<Result<Vec<_>>>()?;
            match key {
                "layers" => sizes = Some(nums.iter().map(|&n| n as usize).collect::<Vec<_>>()),
                "seed" => seed = nums.first().copied(),
                "step" => step = nums.first().copied(),
                "params" => count = nums.first().copied(),
                _ => return Err(err("unknown header key")),
            }
            if no > 16 {
                return Err(err("header too long"));
            }
        }
        let missing = |k: &str| Error::Parse { line: 0, message: format!("missing `{k}`") };
        let sizes = sizes.ok_or_else(|| missing("layers"))?;
        let count = count.ok_or_else(|| missing("params"))? as usize;
        let mut bytes = vec![0u8; count * 8];
        reader.read_exact(&mut bytes)?;
        let params = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        Ok(Self {
            net: DenseNet::from_params(&sizes, params)?,
            seed: seed.ok_or_else(|| missing("seed"))?,
            step: step.ok_or_else(|| missing("step"))?,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_to(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roundtrip_preserves_bits() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ck = Checkpoint { net: DenseNet::init(&[2, 8, 4], 0.01, &mut rng), seed: 5, step: 42 };
        let mut buf = Vec::new();
        ck.write_to(&mut buf).unwrap();
        assert!(buf.starts_with(b"pathens-checkpoint 1\nlayers 2 8 4\n"));
        assert_eq!(Checkpoint::read_from(buf.as_slice()).unwrap(), ck);
    }

    #[test]
    fn truncated_payload_fails() {
        let ck = Checkpoint { net: DenseNet::zeros(&[2, 2]), seed: 0, step: 0 };
        let mut buf = Vec::new();
        ck.write_to(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(Checkpoint::read_from(buf.as_slice()).is_err());
    }
}
