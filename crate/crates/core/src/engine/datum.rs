use std::fmt;

use thiserror::Error;

/// An opaque key or value. Its size is the length of its payload bytes.
///
/// Integers and reals are stored as 8-byte big-endian payloads, so every
/// numeric datum has size 8. On the wire a datum is framed with an 8-byte
/// length prefix (see [`Datum::encode`]); the prefix is framing and is not
/// counted by [`Datum::size_bytes`].
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Datum(Vec<u8>);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("truncated datum: need {need} bytes, have {have}")]
    Truncated { need: usize, have: usize },
    #[error("expected {expected}-byte payload, found {found}")]
    Width { expected: usize, found: usize },
    #[error("unknown value tag {0:#04x}")]
    Tag(u8),
    #[error("payload is not valid UTF-8")]
    Utf8,
}

impl Datum {
    pub fn new(payload: impl Into<Vec<u8>>) -> Self {
        Datum(payload.into())
    }

    pub fn empty() -> Self {
        Datum(Vec::new())
    }

    pub fn from_i64(v: i64) -> Self {
        Datum(v.to_be_bytes().to_vec())
    }

    pub fn from_u64(v: u64) -> Self {
        Datum(v.to_be_bytes().to_vec())
    }

    pub fn from_f64(v: f64) -> Self {
        Datum(v.to_bits().to_be_bytes().to_vec())
    }

    pub fn text(s: &str) -> Self {
        Datum(s.as_bytes().to_vec())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }

    #[inline]
    pub fn size_bytes(&self) -> u64 {
        self.0.len() as u64
    }

    pub fn as_i64(&self) -> Result<i64, DecodeError> {
        Ok(i64::from_be_bytes(self.fixed8()?))
    }

    pub fn as_u64(&self) -> Result<u64, DecodeError> {
        Ok(u64::from_be_bytes(self.fixed8()?))
    }

    pub fn as_f64(&self) -> Result<f64, DecodeError> {
        Ok(f64::from_bits(u64::from_be_bytes(self.fixed8()?)))
    }

    pub fn as_str(&self) -> Result<&str, DecodeError> {
        std::str::from_utf8(&self.0).map_err(|_| DecodeError::Utf8)
    }

    fn fixed8(&self) -> Result<[u8; 8], DecodeError> {
        self.0.as_slice().try_into().map_err(|_| DecodeError::Width {
            expected: 8,
            found: self.0.len(),
        })
    }

    /// Appends the canonical framed form: 8-byte big-endian length, then payload.
    pub fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.0.len() as u64).to_be_bytes());
        out.extend_from_slice(&self.0);
    }

    /// Decodes one framed datum from the front of `buf`, returning it and
    /// the number of bytes consumed.
    pub fn decode(buf: &[u8]) -> Result<(Datum, usize), DecodeError> {
        if buf.len() < 8 {
            return Err(DecodeError::Truncated {
                need: 8,
                have: buf.len(),
            });
        }
        let len = u64::from_be_bytes(buf[..8].try_into().unwrap()) as usize;
        let end = 8usize.saturating_add(len);
        if buf.len() < end {
            return Err(DecodeError::Truncated {
                need: end,
                have: buf.len(),
            });
        }
        Ok((Datum(buf[8..end].to_vec()), end))
    }

    /// Hex rendering of the payload, used where keys must survive a text round trip.
    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(s: &str) -> Option<Datum> {
        if s.len() % 2 != 0 {
            return None;
        }
        (0..s.len())
            .step_by(2)
            .map(|i| u8::from_str_radix(s.get(i..i + 2)?, 16).ok())
            .collect::<Option<Vec<u8>>>()
            .map(Datum)
    }
}

impl From<&str> for Datum {
    fn from(s: &str) -> Self {
        Datum::text(s)
    }
}

impl From<Vec<u8>> for Datum {
    fn from(v: Vec<u8>) -> Self {
        Datum(v)
    }
}

impl From<&[u8]> for Datum {
    fn from(v: &[u8]) -> Self {
        Datum(v.to_vec())
    }
}

impl fmt::Debug for Datum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Datum({self})")
    }
}

/// Printable UTF-8 payloads render as text, everything else as `0x` hex.
impl fmt::Display for Datum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match std::str::from_utf8(&self.0) {
            Ok(s) if !s.is_empty() && s.chars().all(|c| !c.is_control()) => f.write_str(s),
            _ => write!(f, "0x{}", self.to_hex()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KVPair {
    pub key: Datum,
    pub value: Datum,
}

impl KVPair {
    pub fn new(key: impl Into<Datum>, value: impl Into<Datum>) -> Self {
        KVPair {
            key: key.into(),
            value: value.into(),
        }
    }

    #[inline]
    pub fn size_bytes(&self) -> u64 {
        self.key.size_bytes() + self.value.size_bytes()
    }
}

/// The aggregated `<key, {values}>` a reducer consumes. Value order carries
/// no meaning; the shuffle permutes it on purpose.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReduceRecord {
    pub key: Datum,
    pub values: Vec<Datum>,
}

impl ReduceRecord {
    pub fn size_bytes(&self) -> u64 {
        self.key.size_bytes() + self.values.iter().map(Datum::size_bytes).sum::<u64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn numeric_data_are_eight_bytes() {
        assert_eq!(Datum::from_i64(-3).size_bytes(), 8);
        assert_eq!(Datum::from_f64(0.25).size_bytes(), 8);
        assert_eq!(Datum::from_i64(-3).as_i64().unwrap(), -3);
        assert_eq!(Datum::from_f64(0.25).as_f64().unwrap(), 0.25);
        assert_eq!(
            Datum::text("abc").as_i64(),
            Err(DecodeError::Width {
                expected: 8,
                found: 3
            })
        );
    }

    #[test]
    fn pair_and_record_sizes() {
        let p = KVPair::new("x", Datum::from_i64(1));
        assert_eq!(p.size_bytes(), 9);
        let r = ReduceRecord {
            key: Datum::text("x"),
            values: (1..=100).map(Datum::from_i64).collect(),
        };
        assert_eq!(r.size_bytes(), 1 + 800);
    }

    #[test]
    fn truncated_frames_are_rejected() {
        let mut buf = Vec::new();
        Datum::text("hello").encode(&mut buf);
        assert!(matches!(
            Datum::decode(&buf[..10]),
            Err(DecodeError::Truncated { need: 13, have: 10 })
        ));
        assert!(Datum::decode(&buf[..3]).is_err());
    }

    #[test]
    fn display_falls_back_to_hex() {
        assert_eq!(Datum::text("word").to_string(), "word");
        assert_eq!(Datum::from_u64(1).to_string(), "0x0000000000000001");
        assert_eq!(Datum::empty().to_string(), "0x");
    }

    proptest! {
        #[test]
        fn framing_round_trips(payloads in proptest::collection::vec(proptest::collection::vec(any::<u8>(), 0..40), 0..8)) {
            let data: Vec<Datum> = payloads.into_iter().map(Datum::new).collect();
            let mut buf = Vec::new();
            for d in &data {
                d.encode(&mut buf);
            }
            let mut rest = buf.as_slice();
            let mut back = Vec::new();
            while !rest.is_empty() {
                let (d, used) = Datum::decode(rest).unwrap();
                prop_assert_eq!(used as u64, 8 + d.size_bytes());
                back.push(d);
                rest = &rest[used..];
            }
            prop_assert_eq!(back, data);
        }

        #[test]
        fn hex_round_trips(payload in proptest::collection::vec(any::<u8>(), 0..32)) {
            let d = Datum::new(payload);
            prop_assert_eq!(Datum::from_hex(&d.to_hex()), Some(d));
        }
    }
}
