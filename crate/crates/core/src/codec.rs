//! Little-endian primitives shared by the binary model artifacts.

use std::io::{Read, Write};

use crate::{Error, Result};

pub(crate) struct Encoder<W: Write>(pub W);

impl<W: Write> Encoder<W> {
    pub fn bytes(&mut self, b: &[u8]) -> std::io::Result<()> {
        self.0.write_all(b)
    }

    pub fn u64(&mut self, v: u64) -> std::io::Result<()> {
        self.0.write_all(&v.to_le_bytes())
    }

    pub fn f64(&mut self, v: f64) -> std::io::Result<()> {
        self.0.write_all(&v.to_le_bytes())
    }

    pub fn str(&mut self, s: &str) -> std::io::Result<()> {
        self.u64(s.len() as u64)?;
        self.0.write_all(s.as_bytes())
    }

    pub fn strs(&mut self, items: &[String]) -> std::io::Result<()> {
        self.u64(items.len() as u64)?;
        items.iter().try_for_each(|s| self.str(s))
    }

    pub fn f64s<'a>(&mut self, values: impl IntoIterator<Item = &'a f64>) -> std::io::Result<()> {
        values.into_iter().try_for_each(|&v| self.f64(v))
    }
}

pub(crate) struct Decoder<R: Read>(pub R);

fn corrupt(e: std::io::Error) -> Error {
    Error::Artifact(e.to_string())
}

impl<R: Read> Decoder<R> {
    pub fn magic(&mut self, expected: &[u8; 8], what: &str) -> Result<()> {
        let mut magic = [0u8; 8];
        self.0.read_exact(&mut magic).map_err(corrupt)?;
        if &magic != expected {
            return Err(Error::Artifact(format!("not a {what} artifact")));
        }
        Ok(())
    }

    pub fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.0.read_exact(&mut b).map_err(corrupt)?;
        Ok(u64::from_le_bytes(b))
    }

    /// A count that must not exceed `limit`, guarding allocations against
    /// corrupt headers.
    pub fn len(&mut self, limit: u64) -> Result<usize> {
        let n = self.u64()?;
        if n > limit {
            return Err(Error::Artifact(format!("implausible length {n}")));
        }
        Ok(n as usize)
    }

    pub fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.0.read_exact(&mut b).map_err(corrupt)?;
        Ok(f64::from_le_bytes(b))
    }

    pub fn str(&mut self) -> Result<String> {
        let n = self.len(1 << 20)?;
        let mut buf = vec![0u8; n];
        self.0.read_exact(&mut buf).map_err(corrupt)?;
        String::from_utf8(buf).map_err(|e| Error::Artifact(e.to_string()))
    }

    pub fn strs(&mut self) -> Result<Vec<String>> {
        let n = self.len(1 << 32)?;
        (0..n).map(|_| self.str()).collect()
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}
