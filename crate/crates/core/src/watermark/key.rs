//! Text record for watermark keys.
//!
//! ```text
//! wmbench-key v1
//! codec = spread-spectrum
//! seed = 42
//! strength = 12
//! bits = 64
//! payload = 9f3a01c47be2d005
//! band = 3..6
//! threshold = 0.75
//! ```
//!
//! The payload is hex, most significant bit first, zero-padded to a whole
//! number of nibbles. `band` only appears for spread spectrum.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

use super::{AdditiveKey, Band, SpreadSpectrumKey};

const HEADER: &str = "wmbench-key v1";

#[derive(Clone, Debug, PartialEq)]
pub enum WatermarkKey {
    Additive(AdditiveKey),
    SpreadSpectrum(SpreadSpectrumKey),
}

impl WatermarkKey {
    pub fn codec_name(&self) -> &'static str {
        match self {
            WatermarkKey::Additive(_) => "additive",
            WatermarkKey::SpreadSpectrum(_) => "spread-spectrum",
        }
    }

    pub fn payload(&self) -> &[bool] {
        match self {
            WatermarkKey::Additive(k) => &k.payload,
            WatermarkKey::SpreadSpectrum(k) => &k.payload,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        if lines.next() != Some(HEADER) {
            return Err(Error::Parse(format!("key record must start with '{HEADER}'")));
        }
        let mut fields = BTreeMap::new();
        for line in lines {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected 'key = value', got '{line}'")))?;
            if fields.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Parse(format!("duplicate field '{}'", k.trim())));
            }
        }
        let mut take = |name: &str| {
            fields
                .remove(name)
                .ok_or_else(|| Error::Parse(format!("missing field '{name}'")))
        };
        let codec = take("codec")?;
        let seed: u64 = number(&take("seed")?, "seed")?;
        let strength: f64 = number(&take("strength")?, "strength")?;
        let bits: usize = number(&take("bits")?, "bits")?;
        let payload = decode_payload(&take("payload")?, bits)?;
        let threshold: f64 = number(&take("threshold")?, "threshold")?;
        let key = match codec.as_str() {
            "additive" => {
                let mut k = AdditiveKey::new(seed, payload, strength)?;
                k.threshold = threshold;
                WatermarkKey::Additive(k)
            }
            "spread-spectrum" => {
                let band = parse_band(&take("band")?)?;
                let mut k = SpreadSpectrumKey::new(seed, payload, strength, band)?;
                k.threshold = threshold;
                WatermarkKey::SpreadSpectrum(k)
            }
            other => return Err(Error::Parse(format!("unknown codec '{other}'"))),
        };
        if let Some(extra) = fields.keys().next() {
            return Err(Error::Parse(format!("unknown field '{extra}'")));
        }
        Ok(key)
    }

    pub fn read(path: &Path) -> Result<Self> {
        WatermarkKey::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }
}

impl fmt::Display for WatermarkKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (seed, strength, threshold) = match self {
            WatermarkKey::Additive(k) => (k.seed, k.strength, k.threshold),
            WatermarkKey::SpreadSpectrum(k) => (k.seed, k.strength, k.threshold),
        };
        writeln!(f, "{HEADER}")?;
        writeln!(f, "codec = {}", self.codec_name())?;
        writeln!(f, "seed = {seed}")?;
        writeln!(f, "strength = {strength}")?;
        writeln!(f, "bits = {}", self.payload().len())?;
        writeln!(f, "payload = {}", encode_payload(self.payload()))?;
        if let WatermarkKey::SpreadSpectrum(k) = self {
            let (lo, hi) = k.band.bounds();
            writeln!(f, "band = {lo}..{hi}")?;
        }
        writeln!(f, "threshold = {threshold}")
    }
}

fn number<T: std::str::FromStr>(s: &str, name: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("field '{name}' has invalid value '{s}'")))
}

fn parse_band(s: &str) -> Result<Band> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| Error::Parse(format!("band '{s}' must look like 'min..max'")))?;
    Band::new(number(lo.trim(), "band")?, number(hi.trim(), "band")?)
}

pub(crate) fn encode_payload(bits: &[bool]) -> String {
    bits.chunks(4)
        .map(|nib| {
            let v = nib.iter().enumerate().fold(0u32, |acc, (i, &b)| acc | ((b as u32) << (3 - i)));
            char::from_digit(v, 16).expect("nibble")
        })
        .collect()
}

pub(crate) fn decode_payload(hex: &str, bits: usize) -> Result<Vec<bool>> {
    if hex.len() != bits.div_ceil(4) {
        return Err(Error::Parse(format!(
            "payload has {} hex digits, {bits} bits need {}",
            hex.len(),
            bits.div_ceil(4)
        )));
    }
    let mut out = Vec::with_capacity(hex.len() * 4);
    for c in hex.chars() {
        let v = c
            .to_digit(16)
            .ok_or_else(|| Error::Parse(format!("invalid hex digit '{c}' in payload")))?;
        out.extend((0..4).map(|i| v & (1 << (3 - i)) != 0));
    }
    if out[bits..].iter().any(|&b| b) {
        return Err(Error::Parse("payload padding bits must be zero".into()));
    }
    out.truncate(bits);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_both_codecs() {
        let a = WatermarkKey::Additive(AdditiveKey::random(9, 13, 0.03).unwrap());
        let mut ss = SpreadSpectrumKey::random(10, 64, 7.5).unwrap();
        ss.band = Band::new(2, 5).unwrap();
        ss.threshold = 0.8;
        let s = WatermarkKey::SpreadSpectrum(ss);
        for key in [a, s] {
            let text = key.to_string();
            assert!(text.starts_with(HEADER));
            assert_eq!(WatermarkKey::parse(&text).unwrap(), key);
        }
    }

    #[test]
    fn payload_hex_is_msb_first() {
        assert_eq!(encode_payload(&[true, false, false, false, true]), "88");
        assert_eq!(decode_payload("88", 5).unwrap(), vec![true, false, false, false, true]);
        assert!(decode_payload("8f", 5).is_err());
        assert!(decode_payload("8", 5).is_err());
    }

    #[test]
    fn rejects_malformed_records() {
        let good = WatermarkKey::Additive(AdditiveKey::random(1, 8, 0.02).unwrap()).to_string();
        assert!(WatermarkKey::parse(&good.replace(HEADER, "key v0")).is_err());
        assert!(WatermarkKey::parse(&format!("{good}colour = red\n")).is_err());
        assert!(WatermarkKey::parse(&good.replace("codec = additive", "codec = lsb")).is_err());
        assert!(WatermarkKey::parse(&good.replace("seed = 1", "seed = -1")).is_err());
    }
}
