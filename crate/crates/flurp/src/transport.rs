//! Message channels between the two servers with exact byte and round
//! accounting.
//!
//! Frames are self-delimiting: an 8-byte little-endian length, a one-byte
//! tag length, the UTF-8 tag, then the payload. Byte counters track
//! payload bytes only, so framing overhead never pollutes cost checks.
//!
//! Rounds are counted per endpoint at each send/receive direction flip.
//! Protocols whose legs form one logical parallel step (a mutual share
//! exchange, a batched oblivious transfer) wrap their messaging in
//! [`Endpoint::ideal_step`], which charges exactly one round regardless
//! of the leg pattern inside.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::time::Duration;

/// Identity of one of the two computation servers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartyId {
    P0,
    P1,
}

impl PartyId {
    pub fn index(self) -> usize {
        match self {
            PartyId::P0 => 0,
            PartyId::P1 => 1,
        }
    }

    pub fn peer(self) -> PartyId {
        match self {
            PartyId::P0 => PartyId::P1,
            PartyId::P1 => PartyId::P0,
        }
    }

    pub fn bit(self) -> u8 {
        self.index() as u8
    }
}

/// One tagged message.
#[derive(Debug, Clone)]
struct Frame {
    tag: String,
    payload: Vec<u8>,
}

/// Byte, round and formula-level counters for one tag (or the session
/// total).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptCounters {
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub rounds: u64,
    /// Closed-form communication charged by protocol modules, in bits.
    /// Independent of serialized wire bytes.
    pub accounted_bits: u64,
    /// AHE ciphertexts transferred (shuffle accounting).
    pub ciphertexts: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Start,
    Sending,
    Receiving,
    /// An ideal protocol step just closed; the next message in either
    /// direction begins a new round.
    StepBoundary,
}

/// Full accounting state of one endpoint: session totals plus a
/// per-protocol-tag breakdown.
#[derive(Debug)]
pub struct Transcript {
    total: TranscriptCounters,
    per_tag: BTreeMap<String, TranscriptCounters>,
    direction: Direction,
    /// Depth of nested ideal steps; while > 0, messages do not advance
    /// the round counter (the step charged its single round on entry).
    step_depth: u32,
    /// When true, every payload is recorded for byte-level comparison
    /// across transport modes.
    record: bool,
    pub sent_log: Vec<(String, Vec<u8>)>,
    pub received_log: Vec<(String, Vec<u8>)>,
}

impl Transcript {
    fn new() -> Self {
        Transcript {
            total: TranscriptCounters::default(),
            per_tag: BTreeMap::new(),
            direction: Direction::Start,
            step_depth: 0,
            record: false,
            sent_log: Vec::new(),
            received_log: Vec::new(),
        }
    }

    pub fn total(&self) -> TranscriptCounters {
        self.total
    }

    pub fn for_tag(&self, tag: &str) -> TranscriptCounters {
        self.per_tag.get(tag).copied().unwrap_or_default()
    }

    pub fn tags(&self) -> impl Iterator<Item = (&str, &TranscriptCounters)> {
        self.per_tag.iter().map(|(k, v)| (k.as_str(), v))
    }

    fn entry(&mut self, tag: &str) -> &mut TranscriptCounters {
        self.per_tag.entry(tag.to_string()).or_default()
    }

    fn note_send(&mut self, tag: &str, len: u64) {
        if self.step_depth == 0 && self.direction != Direction::Sending {
            self.total.rounds += 1;
            self.entry(tag).rounds += 1;
            self.direction = Direction::Sending;
        }
        self.total.bytes_sent += len;
        self.entry(tag).bytes_sent += len;
    }

    fn note_receive(&mut self, tag: &str, len: u64) {
        if self.step_depth == 0 && self.direction != Direction::Receiving {
            self.total.rounds += 1;
            self.entry(tag).rounds += 1;
            self.direction = Direction::Receiving;
        }
        self.total.bytes_received += len;
        self.entry(tag).bytes_received += len;
    }
}

enum Link {
    InProc {
        tx: Sender<Frame>,
        rx: Receiver<Frame>,
    },
    Tcp {
        stream: TcpStream,
    },
}

/// One side of a two-server session.
pub struct Endpoint {
    party: PartyId,
    link: Link,
    transcript: Transcript,
    timeout: Duration,
}

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

impl Endpoint {
    /// Paired in-memory endpoints for a single-process session.
    pub fn pair() -> (Endpoint, Endpoint) {
        let (tx0, rx1) = channel();
        let (tx1, rx0) = channel();
        let e0 = Endpoint {
            party: PartyId::P0,
            link: Link::InProc { tx: tx0, rx: rx0 },
            transcript: Transcript::new(),
            timeout: DEFAULT_TIMEOUT,
        };
        let e1 = Endpoint {
            party: PartyId::P1,
            link: Link::InProc { tx: tx1, rx: rx1 },
            transcript: Transcript::new(),
            timeout: DEFAULT_TIMEOUT,
        };
        (e0, e1)
    }

    /// Two-process mode, listening side. Binds, accepts one peer and
    /// becomes the given party.
    pub fn listen<A: ToSocketAddrs>(party: PartyId, addr: A) -> Result<Endpoint> {
        let listener = TcpListener::bind(addr)?;
        let (stream, _) = listener.accept()?;
        Endpoint::from_stream(party, stream)
    }

    /// Two-process mode, connecting side.
    pub fn connect<A: ToSocketAddrs>(party: PartyId, addr: A) -> Result<Endpoint> {
        let stream = TcpStream::connect(addr)?;
        Endpoint::from_stream(party, stream)
    }

    pub fn from_stream(party: PartyId, stream: TcpStream) -> Result<Endpoint> {
        stream.set_nodelay(true)?;
        stream.set_read_timeout(Some(DEFAULT_TIMEOUT))?;
        Ok(Endpoint {
            party,
            link: Link::Tcp { stream },
            transcript: Transcript::new(),
            timeout: DEFAULT_TIMEOUT,
        })
    }

    pub fn party(&self) -> PartyId {
        self.party
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    /// Enable payload recording for transcript comparison tests.
    pub fn set_recording(&mut self, on: bool) {
        self.transcript.record = on;
    }

    pub fn set_timeout(&mut self, timeout: Duration) -> Result<()> {
        self.timeout = timeout;
        if let Link::Tcp { stream } = &self.link {
            stream.set_read_timeout(Some(timeout))?;
        }
        Ok(())
    }

    /// Send one tagged payload to the peer.
    pub fn send(&mut self, tag: &str, payload: &[u8]) -> Result<()> {
        self.transcript.note_send(tag, payload.len() as u64);
        if self.transcript.record {
            self.transcript
                .sent_log
                .push((tag.to_string(), payload.to_vec()));
        }
        match &mut self.link {
            Link::InProc { tx, .. } => tx
                .send(Frame {
                    tag: tag.to_string(),
                    payload: payload.to_vec(),
                })
                .map_err(|_| Error::ChannelClosed(format!("peer gone while sending `{tag}`"))),
            Link::Tcp { stream } => {
                let tag_bytes = tag.as_bytes();
                debug_assert!(tag_bytes.len() <= u8::MAX as usize);
                let frame_len = 1 + tag_bytes.len() + payload.len();
                let mut header = Vec::with_capacity(9 + tag_bytes.len());
                header.extend_from_slice(&(frame_len as u64).to_le_bytes());
                header.push(tag_bytes.len() as u8);
                header.extend_from_slice(tag_bytes);
                stream.write_all(&header)?;
                stream.write_all(payload)?;
                Ok(())
            }
        }
    }

    /// Receive the next payload, which must carry the expected tag.
    pub fn receive(&mut self, tag: &str) -> Result<Vec<u8>> {
        let frame = match &mut self.link {
            Link::InProc { rx, .. } => rx
                .recv_timeout(self.timeout)
                .map_err(|e| match e {
                    std::sync::mpsc::RecvTimeoutError::Timeout => Error::Timeout(tag.to_string()),
                    std::sync::mpsc::RecvTimeoutError::Disconnected => {
                        Error::ChannelClosed(format!("peer gone while waiting for `{tag}`"))
                    }
                })?,
            Link::Tcp { stream } => {
                let mut len_buf = [0u8; 8];
                stream.read_exact(&mut len_buf).map_err(|e| {
                    if e.kind() == std::io::ErrorKind::WouldBlock
                        || e.kind() == std::io::ErrorKind::TimedOut
                    {
                        Error::Timeout(tag.to_string())
                    } else {
                        Error::ChannelClosed(format!("peer gone while waiting for `{tag}`: {e}"))
                    }
                })?;
                let frame_len = u64::from_le_bytes(len_buf) as usize;
                let mut body = vec![0u8; frame_len];
                stream.read_exact(&mut body)?;
                if body.is_empty() {
                    return Err(Error::Malformed("empty frame body".into()));
                }
                let tag_len = body[0] as usize;
                if 1 + tag_len > body.len() {
                    return Err(Error::Malformed("tag length exceeds frame".into()));
                }
                let got_tag = String::from_utf8(body[1..1 + tag_len].to_vec())
                    .map_err(|_| Error::Malformed("non-UTF-8 tag".into()))?;
                Frame {
                    tag: got_tag,
                    payload: body[1 + tag_len..].to_vec(),
                }
            }
        };
        if frame.tag != tag {
            return Err(Error::TagMismatch {
                expected: tag.to_string(),
                got: frame.tag,
            });
        }
        self.transcript.note_receive(tag, frame.payload.len() as u64);
        if self.transcript.record {
            self.transcript
                .received_log
                .push((tag.to_string(), frame.payload.clone()));
        }
        Ok(frame.payload)
    }

    /// Run a closure whose messaging forms one logical protocol step;
    /// exactly one round is charged no matter how many legs run inside.
    pub fn ideal_step<T>(
        &mut self,
        tag: &str,
        f: impl FnOnce(&mut Endpoint) -> Result<T>,
    ) -> Result<T> {
        if self.transcript.step_depth == 0 {
            self.transcript.total.rounds += 1;
            self.transcript.entry(tag).rounds += 1;
        }
        self.transcript.step_depth += 1;
        let out = f(self);
        self.transcript.step_depth -= 1;
        if self.transcript.step_depth == 0 {
            self.transcript.direction = Direction::StepBoundary;
        }
        out
    }

    /// Mutual exchange: both parties contribute a payload and obtain the
    /// peer's. Counts as one round. Party 0 writes first so the pattern
    /// is deadlock-free on a byte stream.
    pub fn exchange(&mut self, tag: &str, payload: &[u8]) -> Result<Vec<u8>> {
        self.ideal_step(tag, |ep| match ep.party {
            PartyId::P0 => {
                ep.send(tag, payload)?;
                ep.receive(tag)
            }
            PartyId::P1 => {
                let got = ep.receive(tag)?;
                ep.send(tag, payload)?;
                Ok(got)
            }
        })
    }

    /// Charge formula-level communication (bits) to a protocol tag.
    pub fn charge_bits(&mut self, tag: &str, bits: u64) {
        self.transcript.total.accounted_bits += bits;
        self.transcript.entry(tag).accounted_bits += bits;
    }

    /// Charge transferred AHE ciphertexts to a protocol tag.
    pub fn charge_ciphertexts(&mut self, tag: &str, count: u64) {
        self.transcript.total.ciphertexts += count;
        self.transcript.entry(tag).ciphertexts += count;
    }
}

/// Drive both parties of one session on two threads and return their
/// results. Panics in either closure propagate.
pub fn run_pair<T0, T1>(
    f0: impl FnOnce(&mut Endpoint) -> Result<T0> + Send,
    f1: impl FnOnce(&mut Endpoint) -> Result<T1> + Send,
) -> Result<(T0, T1)>
where
    T0: Send,
    T1: Send,
{
    let (mut e0, mut e1) = Endpoint::pair();
    run_pair_on(&mut e0, &mut e1, f0, f1)
}

/// Like [`run_pair`] but over caller-supplied endpoints (used to inspect
/// transcripts afterwards or to reuse TCP endpoints).
pub fn run_pair_on<T0, T1>(
    e0: &mut Endpoint,
    e1: &mut Endpoint,
    f0: impl FnOnce(&mut Endpoint) -> Result<T0> + Send,
    f1: impl FnOnce(&mut Endpoint) -> Result<T1> + Send,
) -> Result<(T0, T1)>
where
    T0: Send,
    T1: Send,
{
    std::thread::scope(|scope| {
        let h1 = scope.spawn(move || f1(e1));
        let r0 = f0(e0);
        let r1 = h1.join().expect("party 1 panicked");
        Ok((r0?, r1?))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn payload_roundtrip_counts_bytes() {
        let ((), ()) = run_pair(
            |ep| {
                ep.send("t", &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10])?;
                assert_eq!(ep.transcript().total().bytes_sent, 10);
                Ok(())
            },
            |ep| {
                let got = ep.receive("t")?;
                assert_eq!(got, vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 10]);
                assert_eq!(ep.transcript().total().bytes_received, 10);
                Ok(())
            },
        )
        .unwrap();
    }

    #[test]
    fn direction_flips_define_rounds() {
        // send, receive, send -> 3 rounds
        run_pair(
            |ep| {
                ep.send("a", b"x")?;
                ep.receive("b")?;
                ep.send("c", b"y")?;
                assert_eq!(ep.transcript().total().rounds, 3);
                Ok(())
            },
            |ep| {
                ep.receive("a")?;
                ep.send("b", b"z")?;
                ep.receive("c")?;
                assert_eq!(ep.transcript().total().rounds, 3);
                Ok(())
            },
        )
        .unwrap();
    }

    #[test]
    fn same_direction_sends_share_a_round() {
        // two sends then one receive -> 2 rounds
        run_pair(
            |ep| {
                ep.send("a", b"1")?;
                ep.send("b", b"2")?;
                ep.receive("c")?;
                assert_eq!(ep.transcript().total().rounds, 2);
                Ok(())
            },
            |ep| {
                ep.receive("a")?;
                ep.receive("b")?;
                ep.send("c", b"3")?;
                assert_eq!(ep.transcript().total().rounds, 2);
                Ok(())
            },
        )
        .unwrap();
    }

    #[test]
    fn exchange_is_one_round_and_symmetric() {
        run_pair(
            |ep| {
                let got = ep.exchange("e", b"from0")?;
                assert_eq!(got, b"from1");
                let got = ep.exchange("e", b"again0")?;
                assert_eq!(got, b"again1");
                assert_eq!(ep.transcript().total().rounds, 2);
                Ok(())
            },
            |ep| {
                let got = ep.exchange("e", b"from1")?;
                assert_eq!(got, b"from0");
                let got = ep.exchange("e", b"again1")?;
                assert_eq!(got, b"again0");
                assert_eq!(ep.transcript().total().rounds, 2);
                Ok(())
            },
        )
        .unwrap();
    }

    #[test]
    fn tag_mismatch_is_detected() {
        let err = run_pair(
            |ep| {
                ep.send("shuffle", b"p")?;
                Ok(())
            },
            |ep| ep.receive("compare"),
        )
        .unwrap_err();
        match err {
            Error::TagMismatch { expected, got } => {
                assert_eq!(expected, "compare");
                assert_eq!(got, "shuffle");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn closed_channel_reported() {
        let (mut e0, e1) = Endpoint::pair();
        drop(e1);
        assert!(matches!(
            e0.send("t", b"x"),
            Err(Error::ChannelClosed(_))
        ));
    }

    #[test]
    fn byte_counters_mirror_across_parties() {
        run_pair(
            |ep| {
                ep.send("a", &[0u8; 17])?;
                let _ = ep.receive("b")?;
                ep.send("c", &[0u8; 5])?;
                let t = ep.transcript().total();
                assert_eq!(t.bytes_sent, 22);
                assert_eq!(t.bytes_received, 3);
                Ok(())
            },
            |ep| {
                let _ = ep.receive("a")?;
                ep.send("b", &[0u8; 3])?;
                let _ = ep.receive("c")?;
                let t = ep.transcript().total();
                assert_eq!(t.bytes_sent, 3);
                assert_eq!(t.bytes_received, 22);
                Ok(())
            },
        )
        .unwrap();
    }

    #[test]
    fn tcp_and_inproc_match_byte_for_byte() {
        // The same scripted conversation over both transport modes must
        // produce identical per-direction payload logs.
        fn script0(ep: &mut Endpoint) -> Result<()> {
            ep.send("a", b"hello")?;
            let _ = ep.exchange("b", b"zero-side")?;
            let _ = ep.receive("c")?;
            Ok(())
        }
        fn script1(ep: &mut Endpoint) -> Result<()> {
            let _ = ep.receive("a")?;
            let _ = ep.exchange("b", b"one-side")?;
            ep.send("c", b"done")?;
            Ok(())
        }

        let (mut i0, mut i1) = Endpoint::pair();
        i0.set_recording(true);
        i1.set_recording(true);
        run_pair_on(&mut i0, &mut i1, script0, script1).unwrap();

        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let (mut t0, mut t1) = std::thread::scope(|s| {
            let accept = s.spawn(move || {
                let (stream, _) = listener.accept().unwrap();
                Endpoint::from_stream(PartyId::P0, stream).unwrap()
            });
            let t1 = Endpoint::connect(PartyId::P1, addr).unwrap();
            (accept.join().unwrap(), t1)
        });
        t0.set_recording(true);
        t1.set_recording(true);
        run_pair_on(&mut t0, &mut t1, script0, script1).unwrap();

        assert_eq!(i0.transcript().sent_log, t0.transcript().sent_log);
        assert_eq!(i0.transcript().received_log, t0.transcript().received_log);
        assert_eq!(i1.transcript().sent_log, t1.transcript().sent_log);
        assert_eq!(i1.transcript().received_log, t1.transcript().received_log);
        assert_eq!(
            i0.transcript().total().rounds,
            t0.transcript().total().rounds
        );
    }

    #[test]
    fn round_counters_agree_at_close() {
        let ((), ()) = run_pair(
            |ep| {
                ep.send("x", b"1")?;
                let _ = ep.exchange("y", b"2")?;
                let _ = ep.receive("z")?;
                ep.send("w", b"3")?;
                assert_eq!(ep.transcript().total().rounds, 4);
                Ok(())
            },
            |ep| {
                let _ = ep.receive("x")?;
                let _ = ep.exchange("y", b"2")?;
                ep.send("z", b"4")?;
                let _ = ep.receive("w")?;
                assert_eq!(ep.transcript().total().rounds, 4);
                Ok(())
            },
        )
        .unwrap();
    }
}
