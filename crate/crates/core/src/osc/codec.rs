#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OscError {
    #[error("invalid OSC address {0:?}")]
    InvalidAddress(String),
    #[error("invalid OSC string argument: contains NUL")]
    InvalidString,
    #[error("blob too large: {0} bytes")]
    BlobTooLarge(usize),
    #[error("packet length {0} is not 4-aligned")]
    NotAligned(usize),
    #[error("truncated packet while reading {0}")]
    Truncated(&'static str),
    #[error("bad padding after {0}")]
    BadPadding(&'static str),
    #[error("missing type tag string")]
    MissingTypeTags,
    #[error("unknown type tag '{0}'")]
    UnknownTypeTag(char),
    #[error("string is not valid UTF-8")]
    InvalidUtf8,
    #[error("{0} trailing bytes after arguments")]
    TrailingBytes(usize),
}

#[derive(Debug, Clone)]
pub enum OscArg {
    Int(i32),
    Float(f32),
    String(String),
    Blob(Vec<u8>),
}

impl OscArg {
    fn tag(&self) -> u8 {
        match self {
            OscArg::Int(_) => b'i',
            OscArg::Float(_) => b'f',
            OscArg::String(_) => b's',
            OscArg::Blob(_) => b'b',
        }
    }
}

// Floats compare by bit pattern so NaN payloads round-trip as equal.
impl PartialEq for OscArg {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (OscArg::Int(a), OscArg::Int(b)) => a == b,
            (OscArg::Float(a), OscArg::Float(b)) => a.to_bits() == b.to_bits(),
            (OscArg::String(a), OscArg::String(b)) => a == b,
            (OscArg::Blob(a), OscArg::Blob(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for OscArg {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OscMessage {
    pub address: String,
    pub args: Vec<OscArg>,
}

impl OscMessage {
    pub fn new(address: impl Into<String>, args: Vec<OscArg>) -> Self {
        Self {
            address: address.into(),
            args,
        }
    }
}

fn padded_len(n: usize) -> usize {
    (n + 4) & !3
}

fn valid_address(address: &str) -> bool {
    address.starts_with('/')
        && address
            .bytes()
            .all(|b| b.is_ascii_graphic() && !matches!(b, b'#' | b','))
}

fn push_padded_str(out: &mut Vec<u8>, s: &[u8]) {
    out.extend_from_slice(s);
    let pad = padded_len(s.len()) - s.len();
    out.extend(std::iter::repeat_n(0u8, pad));
}

/// OSC 1.0 wire encoding. The result length is always a multiple of 4.
pub fn encode_message(msg: &OscMessage) -> Result<Vec<u8>, OscError> {
    if !valid_address(&msg.address) {
        return Err(OscError::InvalidAddress(msg.address.clone()));
    }
    let mut out = Vec::with_capacity(
        padded_len(msg.address.len()) + padded_len(msg.args.len() + 1) + 4 * msg.args.len(),
    );
    push_padded_str(&mut out, msg.address.as_bytes());
    let mut tags = Vec::with_capacity(msg.args.len() + 1);
    tags.push(b',');
    tags.extend(msg.args.iter().map(OscArg::tag));
    push_padded_str(&mut out, &tags);
    for arg in &msg.args {
        match arg {
            OscArg::Int(v) => out.extend_from_slice(&v.to_be_bytes()),
            OscArg::Float(v) => out.extend_from_slice(&v.to_bits().to_be_bytes()),
            OscArg::String(s) => {
                if s.as_bytes().contains(&0) {
                    return Err(OscError::InvalidString);
                }
                push_padded_str(&mut out, s.as_bytes());
            }
            OscArg::Blob(b) => {
                let len = i32::try_from(b.len()).map_err(|_| OscError::BlobTooLarge(b.len()))?;
                out.extend_from_slice(&len.to_be_bytes());
                out.extend_from_slice(b);
                out.extend(std::iter::repeat_n(0u8, (4 - b.len() % 4) % 4));
            }
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn string(&mut self, what: &'static str) -> Result<&'a [u8], OscError> {
        let rest = &self.bytes[self.pos..];
        let nul = rest
            .iter()
            .position(|&b| b == 0)
            .ok_or(OscError::Truncated(what))?;
        let end = padded_len(nul);
        if end > rest.len() {
            return Err(OscError::Truncated(what));
        }
        if rest[nul..end].iter().any(|&b| b != 0) {
            return Err(OscError::BadPadding(what));
        }
        self.pos += end;
        Ok(&rest[..nul])
    }

    fn word(&mut self, what: &'static str) -> Result<[u8; 4], OscError> {
        let w = self
            .bytes
            .get(self.pos..self.pos + 4)
            .ok_or(OscError::Truncated(what))?;
        self.pos += 4;
        Ok(w.try_into().unwrap())
    }
}

pub fn decode_message(bytes: &[u8]) -> Result<OscMessage, OscError> {
    if !bytes.len().is_multiple_of(4) {
        return Err(OscError::NotAligned(bytes.len()));
    }
    let mut r = Reader { bytes, pos: 0 };
    let address = std::str::from_utf8(r.string("address")?)
        .map_err(|_| OscError::InvalidUtf8)?
        .to_string();
    if !valid_address(&address) {
        return Err(OscError::InvalidAddress(address));
    }
    if r.pos == bytes.len() {
        return Err(OscError::MissingTypeTags);
    }
    let tags = r.string("type tags")?;
    let tags = match tags.split_first() {
        Some((b',', rest)) => rest,
        _ => return Err(OscError::MissingTypeTags),
    };
    let mut args = Vec::with_capacity(tags.len());
    for &tag in tags {
        let arg = match tag {
            b'i' => OscArg::Int(i32::from_be_bytes(r.word("int")?)),
            b'f' => OscArg::Float(f32::from_bits(u32::from_be_bytes(r.word("float")?))),
            b's' => OscArg::String(
                std::str::from_utf8(r.string("string")?)
                    .map_err(|_| OscError::InvalidUtf8)?
                    .to_string(),
            ),
            b'b' => {
                let len = i32::from_be_bytes(r.word("blob size")?);
                let len = usize::try_from(len).map_err(|_| OscError::Truncated("blob"))?;
                let end = r.pos + len + (4 - len % 4) % 4;
                if end > bytes.len() {
                    return Err(OscError::Truncated("blob"));
                }
                let data = bytes[r.pos..r.pos + len].to_vec();
                if bytes[r.pos + len..end].iter().any(|&b| b != 0) {
                    return Err(OscError::BadPadding("blob"));
                }
                r.pos = end;
                OscArg::Blob(data)
            }
            other => return Err(OscError::UnknownTypeTag(other as char)),
        };
        args.push(arg);
    }
    if r.pos != bytes.len() {
        return Err(OscError::TrailingBytes(bytes.len() - r.pos));
    }
    Ok(OscMessage { address, args })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_float_golden_bytes() {
        let msg = OscMessage::new("/l", vec![OscArg::Float(1.0)]);
        let bytes = encode_message(&msg).unwrap();
        assert_eq!(
            bytes,
            [0x2F, 0x6C, 0x00, 0x00, 0x2C, 0x66, 0x00, 0x00, 0x3F, 0x80, 0x00, 0x00]
        );
        assert_eq!(decode_message(&bytes).unwrap(), msg);
    }

    #[test]
    fn latent_message_is_92_bytes() {
        let msg = OscMessage::new("/latent", vec![OscArg::Float(0.5); 16]);
        assert_eq!(encode_message(&msg).unwrap().len(), 8 + 20 + 64);
    }

    #[test]
    fn mixed_argument_golden_bytes() {
        let msg = OscMessage::new(
            "/ab",
            vec![
                OscArg::Int(-2),
                OscArg::String("hi".into()),
                OscArg::Blob(vec![1, 2, 3, 4, 5]),
            ],
        );
        let expected: Vec<u8> = [
            &b"/ab\0"[..],
            b",isb\0\0\0\0",
            &[0xFF, 0xFF, 0xFF, 0xFE],
            b"hi\0\0",
            &[0, 0, 0, 5, 1, 2, 3, 4, 5, 0, 0, 0],
        ]
        .concat();
        assert_eq!(encode_message(&msg).unwrap(), expected);
        assert_eq!(decode_message(&expected).unwrap(), msg);
    }

    #[test]
    fn string_of_four_gets_a_full_pad_word() {
        let msg = OscMessage::new("/abc", vec![]);
        assert_eq!(encode_message(&msg).unwrap(), b"/abc\0\0\0\0,\0\0\0");
    }

    #[test]
    fn unaligned_input_is_rejected() {
        let err = decode_message(&[0u8; 13]).unwrap_err();
        assert_eq!(err, OscError::NotAligned(13));
        assert!(err.to_string().contains("not 4-aligned"));
    }

    #[test]
    fn unknown_tag_is_named() {
        let bytes = b"/l\0\0,q\0\0\0\0\0\0";
        let err = decode_message(bytes).unwrap_err();
        assert_eq!(err, OscError::UnknownTypeTag('q'));
        assert!(err.to_string().contains('q'));
    }

    #[test]
    fn truncation_and_padding_errors() {
        assert!(matches!(
            decode_message(b"/l\0\0,f\0\0"),
            Err(OscError::Truncated(_))
        ));
        assert!(matches!(
            decode_message(b"/l\0x,f\0\0\0\0\0\0"),
            Err(OscError::BadPadding(_))
        ));
        assert!(matches!(
            decode_message(b"/l\0\0"),
            Err(OscError::MissingTypeTags)
        ));
        assert!(matches!(
            decode_message(b"/l\0\0,\0\0\0\0\0\0\0"),
            Err(OscError::TrailingBytes(4))
        ));
    }

    #[test]
    fn invalid_addresses() {
        for a in ["", "nolead", "/with space", "/hash#"] {
            assert!(matches!(
                encode_message(&OscMessage::new(a, vec![])),
                Err(OscError::InvalidAddress(_))
            ));
        }
        assert_eq!(
            encode_message(&OscMessage::new("/s", vec![OscArg::String("a\0b".into())])),
            Err(OscError::InvalidString)
        );
    }

    pub(crate) fn arb_arg() -> impl Strategy<Value = OscArg> {
        prop_oneof![
            any::<i32>().prop_map(OscArg::Int),
            any::<u32>().prop_map(|b| OscArg::Float(f32::from_bits(b))),
            "[a-zA-Z0-9 _./-]{0,12}".prop_map(OscArg::String),
            proptest::collection::vec(any::<u8>(), 0..9).prop_map(OscArg::Blob),
        ]
    }

    proptest! {
        #[test]
        fn round_trip(address in "/[a-z0-9_/]{0,15}", args in proptest::collection::vec(arb_arg(), 0..8)) {
            let msg = OscMessage::new(address, args);
            let bytes = encode_message(&msg).unwrap();
            prop_assert_eq!(bytes.len() % 4, 0);
            let back = decode_message(&bytes).unwrap();
            prop_assert_eq!(&back, &msg);
            prop_assert_eq!(encode_message(&back).unwrap(), bytes);
        }
    }
}
