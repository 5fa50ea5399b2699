//! Length-prefixed TCP protocol for remote similarity search and
//! classification with one-bit queries.
//!
//! The server holds a database of full-precision cosine features (and
//! optionally a trained classifier); a client embeds a query with the
//! universal quantizer and ships only the packed sign bits — `4 + ⌈m/8⌉`
//! payload bytes instead of `8m` bytes of f64 features, a 64× reduction
//! (for m divisible by 8) at equal feature count.
//!
//! Frame layout (all integers little-endian):
//! `magic "ARPQ" (4) | version u16 (2) | type u8 (1) | payload len u32 (4) | payload`.

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use crate::error::{ArpfError, Result};
use crate::features::{
    rescaled_kernel_estimate, FeaturePayload, FeatureVector, PayloadKind, MapCombo,
};
use crate::svm::SvmModel;

pub const MAGIC: [u8; 4] = *b"ARPQ";
pub const PROTOCOL_VERSION: u16 = 1;
/// magic + version + type + payload length
pub const FRAME_HEADER_BYTES: usize = 11;
/// Upper bound on accepted payload sizes; anything larger is malformed.
pub const MAX_PAYLOAD_BYTES: u32 = 1 << 28;

/// Error-frame codes.
pub const ERR_VERSION: u8 = 1;
pub const ERR_EMBEDDING: u8 = 2;
pub const ERR_BAD_REQUEST: u8 = 3;
pub const ERR_INTERNAL: u8 = 4;

/// What a session asks the server to do with each query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryMode {
    Similarity = 0,
    Classify = 1,
}

impl QueryMode {
    fn from_byte(b: u8) -> Result<QueryMode> {
        match b {
            0 => Ok(QueryMode::Similarity),
            1 => Ok(QueryMode::Classify),
            other => Err(ArpfError::Protocol(format!("unknown query mode {other}"))),
        }
    }
}

/// One protocol message.
#[derive(Debug, Clone, PartialEq)]
pub enum Frame {
    /// Session opener: the client's mode, how many similarity hits it wants,
    /// and the embedding identity (m, seed) it used, which must match the
    /// server's database.
    Hello {
        mode: QueryMode,
        top_k: u32,
        m: u32,
        seed: u64,
    },
    /// A quantized query: feature count plus `⌈m/8⌉` packed sign bytes.
    QueryBits { m: u32, bits: Vec<u8> },
    /// Indices and rescaled q·cos similarity scores, best first.
    SimilarityReply { scores: Vec<(u32, f64)> },
    ClassReply { label: i64 },
    Error { code: u8, message: String },
}

impl Frame {
    pub fn type_byte(&self) -> u8 {
        match self {
            Frame::Hello { .. } => 0,
            Frame::QueryBits { .. } => 1,
            Frame::SimilarityReply { .. } => 2,
            Frame::ClassReply { .. } => 3,
            Frame::Error { .. } => 4,
        }
    }

    fn payload(&self) -> Vec<u8> {
        match self {
            Frame::Hello {
                mode,
                top_k,
                m,
                seed,
            } => {
                let mut p = Vec::with_capacity(17);
                p.push(*mode as u8);
                p.extend_from_slice(&top_k.to_le_bytes());
                p.extend_from_slice(&m.to_le_bytes());
                p.extend_from_slice(&seed.to_le_bytes());
                p
            }
            Frame::QueryBits { m, bits } => {
                let mut p = Vec::with_capacity(4 + bits.len());
                p.extend_from_slice(&m.to_le_bytes());
                p.extend_from_slice(bits);
                p
            }
            Frame::SimilarityReply { scores } => {
                let mut p = Vec::with_capacity(4 + 12 * scores.len());
                p.extend_from_slice(&(scores.len() as u32).to_le_bytes());
                for (index, score) in scores {
                    p.extend_from_slice(&index.to_le_bytes());
                    p.extend_from_slice(&score.to_le_bytes());
                }
                p
            }
            Frame::ClassReply { label } => label.to_le_bytes().to_vec(),
            Frame::Error { code, message } => {
                let mut p = Vec::with_capacity(1 + message.len());
                p.push(*code);
                p.extend_from_slice(message.as_bytes());
                p
            }
        }
    }

    /// Full wire bytes: header plus payload.
    pub fn encode(&self) -> Vec<u8> {
        let payload = self.payload();
        let mut out = Vec::with_capacity(FRAME_HEADER_BYTES + payload.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&PROTOCOL_VERSION.to_le_bytes());
        out.push(self.type_byte());
        out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&payload);
        out
    }

    /// Parse a payload for a given message type, strictly: lengths must match
    /// exactly and packed queries must have their unused high bits clear.
    pub fn decode(msg_type: u8, payload: &[u8]) -> Result<Frame> {
        match msg_type {
            0 => {
                if payload.len() != 17 {
                    return Err(ArpfError::Protocol(format!(
                        "hello payload must be 17 bytes, got {}",
                        payload.len()
                    )));
                }
                Ok(Frame::Hello {
                    mode: QueryMode::from_byte(payload[0])?,
                    top_k: u32::from_le_bytes(payload[1..5].try_into().unwrap()),
                    m: u32::from_le_bytes(payload[5..9].try_into().unwrap()),
                    seed: u64::from_le_bytes(payload[9..17].try_into().unwrap()),
                })
            }
            1 => {
                if payload.len() < 4 {
                    return Err(ArpfError::Protocol("query payload too short".into()));
                }
                let m = u32::from_le_bytes(payload[0..4].try_into().unwrap());
                let expected = 4 + (m as usize).div_ceil(8);
                if payload.len() != expected {
                    return Err(ArpfError::Protocol(format!(
                        "query payload for m = {m} must be {expected} bytes, got {}",
                        payload.len()
                    )));
                }
                let bits = payload[4..].to_vec();
                if m % 8 != 0 {
                    if let Some(&last) = bits.last() {
                        if last >> (m % 8) != 0 {
                            return Err(ArpfError::Protocol(
                                "unused bits in final packed byte must be zero".into(),
                            ));
                        }
                    }
                }
                Ok(Frame::QueryBits { m, bits })
            }
            2 => {
                if payload.len() < 4 {
                    return Err(ArpfError::Protocol("similarity payload too short".into()));
                }
                let count = u32::from_le_bytes(payload[0..4].try_into().unwrap()) as usize;
                if payload.len() != 4 + 12 * count {
                    return Err(ArpfError::Protocol(format!(
                        "similarity payload for {count} entries must be {} bytes, got {}",
                        4 + 12 * count,
                        payload.len()
                    )));
                }
                let mut scores = Vec::with_capacity(count);
                for c in 0..count {
                    let at = 4 + 12 * c;
                    scores.push((
                        u32::from_le_bytes(payload[at..at + 4].try_into().unwrap()),
                        f64::from_le_bytes(payload[at + 4..at + 12].try_into().unwrap()),
                    ));
                }
                Ok(Frame::SimilarityReply { scores })
            }
            3 => {
                if payload.len() != 8 {
                    return Err(ArpfError::Protocol(format!(
                        "class payload must be 8 bytes, got {}",
                        payload.len()
                    )));
                }
                Ok(Frame::ClassReply {
                    label: i64::from_le_bytes(payload.try_into().unwrap()),
                })
            }
            4 => {
                if payload.is_empty() {
                    return Err(ArpfError::Protocol("error payload missing code".into()));
                }
                let message = String::from_utf8(payload[1..].to_vec())
                    .map_err(|_| ArpfError::Protocol("error message is not UTF-8".into()))?;
                Ok(Frame::Error {
                    code: payload[0],
                    message,
                })
            }
            other => Err(ArpfError::Protocol(format!("unknown message type {other}"))),
        }
    }
}

/// A frame whose header has been validated but whose payload is unparsed;
/// keeps the version visible so mismatches can be answered politely.
#[derive(Debug)]
pub struct RawFrame {
    pub version: u16,
    pub msg_type: u8,
    pub payload: Vec<u8>,
}

/// Read one length-prefixed frame; magic and length sanity are enforced
/// here, payload parsing happens in [`Frame::decode`].
pub fn read_raw_frame(r: &mut impl Read) -> Result<RawFrame> {
    let mut header = [0u8; FRAME_HEADER_BYTES];
    r.read_exact(&mut header)?;
    if header[0..4] != MAGIC {
        return Err(ArpfError::Protocol("bad frame magic".into()));
    }
    let version = u16::from_le_bytes(header[4..6].try_into().unwrap());
    let msg_type = header[6];
    let len = u32::from_le_bytes(header[7..11].try_into().unwrap());
    if len > MAX_PAYLOAD_BYTES {
        return Err(ArpfError::Protocol(format!(
            "payload length {len} exceeds the {MAX_PAYLOAD_BYTES}-byte cap"
        )));
    }
    let mut payload = vec![0u8; len as usize];
    r.read_exact(&mut payload)?;
    Ok(RawFrame {
        version,
        msg_type,
        payload,
    })
}

pub fn write_frame(w: &mut impl Write, frame: &Frame) -> Result<()> {
    w.write_all(&frame.encode())?;
    w.flush()?;
    Ok(())
}

/// Read and fully decode a frame, requiring the current protocol version.
pub fn read_frame(r: &mut impl Read) -> Result<Frame> {
    let raw = read_raw_frame(r)?;
    if raw.version != PROTOCOL_VERSION {
        return Err(ArpfError::Protocol(format!(
            "peer speaks protocol version {}, expected {PROTOCOL_VERSION}",
            raw.version
        )));
    }
    Frame::decode(raw.msg_type, &raw.payload)
}

// ---------------------------------------------------------------------------
// Byte accounting
// ---------------------------------------------------------------------------

/// Per-query transfer cost of a quantized query versus shipping f64 features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferStats {
    pub m: u32,
    /// QueryBits payload: 4 + ⌈m/8⌉.
    pub payload_bytes: usize,
    /// Payload plus the 11-byte frame header.
    pub frame_bytes: usize,
    /// Just the packed feature bits: ⌈m/8⌉.
    pub quantized_feature_bytes: usize,
    /// The same features as f64: 8m.
    pub full_precision_feature_bytes: usize,
    /// 8m / ⌈m/8⌉ — exactly 64 when m is a multiple of 8.
    pub reduction_factor: f64,
}

pub fn transfer_stats(m: u32) -> TransferStats {
    let packed = (m as usize).div_ceil(8);
    TransferStats {
        m,
        payload_bytes: 4 + packed,
        frame_bytes: FRAME_HEADER_BYTES + 4 + packed,
        quantized_feature_bytes: packed,
        full_precision_feature_bytes: 8 * m as usize,
        reduction_factor: (8 * m as usize) as f64 / packed as f64,
    }
}

// ---------------------------------------------------------------------------
// Server
// ---------------------------------------------------------------------------

/// Immutable state shared by all connection handlers.
pub struct ServerState {
    /// Full-precision cosine features of the database points, all length m.
    pub database: Vec<FeatureVector>,
    /// Classifier for classify-mode sessions, with support features attached.
    pub model: Option<SvmModel>,
    pub m: u32,
    pub seed: u64,
}

impl ServerState {
    /// Validate the database and, when a model is present, attach support
    /// features sliced out of the database by support index.
    pub fn new(
        database: Vec<FeatureVector>,
        model: Option<SvmModel>,
        m: u32,
        seed: u64,
    ) -> Result<ServerState> {
        if database.is_empty() {
            return Err(ArpfError::DegenerateData("empty feature database".into()));
        }
        for (i, v) in database.iter().enumerate() {
            if v.kind() != PayloadKind::DenseReal {
                return Err(ArpfError::PayloadMismatch(format!(
                    "database row {i} is not a dense real feature vector"
                )));
            }
            if v.len() != m as usize {
                return Err(ArpfError::LengthMismatch {
                    left: v.len(),
                    right: m as usize,
                });
            }
        }
        let mut model = model;
        if let Some(model) = model.as_mut() {
            if model.support_features.is_none() {
                let cos: Vec<FeatureVector> = model
                    .support_union
                    .iter()
                    .map(|&i| {
                        database.get(i).cloned().ok_or_else(|| {
                            ArpfError::EmbeddingMismatch(format!(
                                "support index {i} is outside the {}-row database",
                                database.len()
                            ))
                        })
                    })
                    .collect::<Result<_>>()?;
                let support = crate::svm::SupportFeatures::from_cos(cos)?;
                model.attach_support_features(support)?;
            }
        }
        Ok(ServerState {
            database,
            model,
            m,
            seed,
        })
    }

    /// Rescaled q·cos similarity of a packed query against every database
    /// row, sorted best-first (score descending, index ascending on ties),
    /// truncated to `top_k` (0 = no truncation).
    fn similarity_scores(&self, query: &FeatureVector, top_k: u32) -> Result<Vec<(u32, f64)>> {
        let mut scores: Vec<(u32, f64)> = self
            .database
            .iter()
            .enumerate()
            .map(|(i, row)| {
                rescaled_kernel_estimate(query, row, MapCombo::QCos).map(|s| (i as u32, s))
            })
            .collect::<Result<_>>()?;
        scores.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        if top_k > 0 {
            scores.truncate(top_k as usize);
        }
        Ok(scores)
    }
}

/// Handle to a running server: its bound address and a shutdown switch.
pub struct ServerHandle {
    pub addr: std::net::SocketAddr,
    stop: Arc<AtomicBool>,
    join: Option<JoinHandle<()>>,
}

impl ServerHandle {
    /// Stop accepting, wake the accept loop, and wait for it to exit.
    pub fn shutdown(mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(join) = self.join.take() {
            let _ = join.join();
        }
    }
}

/// Bind and serve in a background thread, one handler thread per connection.
/// State is read-only after startup, so concurrent clients see answers
/// identical to serialized execution.
pub fn spawn_server(addr: impl ToSocketAddrs, state: ServerState) -> Result<ServerHandle> {
    let listener = TcpListener::bind(addr)?;
    let addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let state = Arc::new(state);
    let stop_loop = Arc::clone(&stop);
    let join = std::thread::spawn(move || {
        for stream in listener.incoming() {
            if stop_loop.load(Ordering::SeqCst) {
                break;
            }
            if let Ok(stream) = stream {
                let state = Arc::clone(&state);
                std::thread::spawn(move || handle_connection(stream, &state));
            }
        }
    });
    Ok(ServerHandle {
        addr,
        stop,
        join: Some(join),
    })
}

/// Serve on the calling thread until the process is stopped.
pub fn serve_forever(addr: impl ToSocketAddrs, state: ServerState) -> Result<()> {
    let listener = TcpListener::bind(addr)?;
    let state = Arc::new(state);
    for stream in listener.incoming() {
        let stream = stream?;
        let state = Arc::clone(&state);
        std::thread::spawn(move || handle_connection(stream, &state));
    }
    Ok(())
}

fn send_error(stream: &mut TcpStream, code: u8, message: impl Into<String>) -> Result<()> {
    write_frame(
        stream,
        &Frame::Error {
            code,
            message: message.into(),
        },
    )
}

fn handle_connection(mut stream: TcpStream, state: &ServerState) {
    let mut session: Option<(QueryMode, u32)> = None;
    loop {
        // EOF or a malformed header/payload closes the connection
        let raw = match read_raw_frame(&mut stream) {
            Ok(raw) => raw,
            Err(_) => return,
        };
        if raw.version != PROTOCOL_VERSION {
            let msg = format!(
                "unsupported protocol version {} (server speaks {PROTOCOL_VERSION})",
                raw.version
            );
            if send_error(&mut stream, ERR_VERSION, msg).is_err() {
                return;
            }
            continue;
        }
        let frame = match Frame::decode(raw.msg_type, &raw.payload) {
            Ok(frame) => frame,
            Err(_) => return,
        };
        let outcome = handle_frame(frame, state, &mut session);
        match outcome {
            Ok(Some(reply)) => {
                if write_frame(&mut stream, &reply).is_err() {
                    return;
                }
            }
            Ok(None) => {}
            Err(_) => return,
        }
    }
}

/// Process one decoded frame; `Ok(Some(reply))` is written back, `Ok(None)`
/// means no reply (a successful Hello), `Err` closes the connection.
fn handle_frame(
    frame: Frame,
    state: &ServerState,
    session: &mut Option<(QueryMode, u32)>,
) -> Result<Option<Frame>> {
    match frame {
        Frame::Hello {
            mode,
            top_k,
            m,
            seed,
        } => {
            if m != state.m || seed != state.seed {
                return Ok(Some(Frame::Error {
                    code: ERR_EMBEDDING,
                    message: format!(
                        "embedding mismatch: client (m = {m}, seed = {seed}), server (m = {}, seed = {})",
                        state.m, state.seed
                    ),
                }));
            }
            if mode == QueryMode::Classify && state.model.is_none() {
                return Ok(Some(Frame::Error {
                    code: ERR_BAD_REQUEST,
                    message: "server has no classifier loaded".into(),
                }));
            }
            *session = Some((mode, top_k));
            Ok(None)
        }
        Frame::QueryBits { m, bits } => {
            let Some((mode, top_k)) = *session else {
                return Ok(Some(Frame::Error {
                    code: ERR_BAD_REQUEST,
                    message: "hello required before queries".into(),
                }));
            };
            if m != state.m {
                return Ok(Some(Frame::Error {
                    code: ERR_EMBEDDING,
                    message: format!("query has m = {m}, server expects {}", state.m),
                }));
            }
            let query = FeatureVector {
                payload: FeaturePayload::PackedBits {
                    bits,
                    len: m as usize,
                },
                scale: 1.0 / (m as f64).sqrt(),
            };
            let reply = match mode {
                QueryMode::Similarity => Frame::SimilarityReply {
                    scores: state.similarity_scores(&query, top_k)?,
                },
                QueryMode::Classify => {
                    let model = state.model.as_ref().expect("checked at hello");
                    Frame::ClassReply {
                        label: model.predict_with_attached(&query, MapCombo::QCos)?,
                    }
                }
            };
            Ok(Some(reply))
        }
        // clients should not send reply frames
        _ => Ok(Some(Frame::Error {
            code: ERR_BAD_REQUEST,
            message: "unexpected message type".into(),
        })),
    }
}

// ---------------------------------------------------------------------------
// Client
// ---------------------------------------------------------------------------

/// A connected session: opens the socket, sends the Hello, then exchanges
/// one reply frame per query. Connection failures surface as I/O errors;
/// server-reported problems surface as remote errors with their code.
pub struct Client {
    stream: TcpStream,
    m: u32,
}

impl Client {
    pub fn connect(
        addr: impl ToSocketAddrs,
        mode: QueryMode,
        top_k: u32,
        m: u32,
        seed: u64,
    ) -> Result<Client> {
        let stream = TcpStream::connect(addr)?;
        stream.set_read_timeout(Some(Duration::from_secs(30)))?;
        stream.set_write_timeout(Some(Duration::from_secs(30)))?;
        let mut client = Client { stream, m };
        write_frame(
            &mut client.stream,
            &Frame::Hello {
                mode,
                top_k,
                m,
                seed,
            },
        )?;
        Ok(client)
    }

    /// Validate and send one packed query, then read the server's reply.
    fn exchange(&mut self, query: &FeatureVector) -> Result<Frame> {
        let FeaturePayload::PackedBits { bits, len } = &query.payload else {
            return Err(ArpfError::PayloadMismatch(
                "remote queries must be packed one-bit features".into(),
            ));
        };
        if *len != self.m as usize {
            return Err(ArpfError::LengthMismatch {
                left: *len,
                right: self.m as usize,
            });
        }
        write_frame(
            &mut self.stream,
            &Frame::QueryBits {
                m: self.m,
                bits: bits.clone(),
            },
        )?;
        match read_frame(&mut self.stream)? {
            Frame::Error { code, message } => Err(ArpfError::Remote { code, message }),
            reply => Ok(reply),
        }
    }

    /// Best-matching database indices with their q·cos similarity scores.
    pub fn query_similarity(&mut self, query: &FeatureVector) -> Result<Vec<(u32, f64)>> {
        match self.exchange(query)? {
            Frame::SimilarityReply { scores } => Ok(scores),
            other => Err(ArpfError::Protocol(format!(
                "expected a similarity reply, got message type {}",
                other.type_byte()
            ))),
        }
    }

    /// The server's predicted class label for the query bits.
    pub fn query_class(&mut self, query: &FeatureVector) -> Result<i64> {
        match self.exchange(query)? {
            Frame::ClassReply { label } => Ok(label),
            other => Err(ArpfError::Protocol(format!(
                "expected a class reply, got message type {}",
                other.type_byte()
            ))),
        }
    }

    /// Byte accounting for this session's queries.
    pub fn transfer_stats(&self) -> TransferStats {
        transfer_stats(self.m)
    }
}
