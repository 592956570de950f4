//! Two-wing delivery: a source, a left and a right wing, and a merger.
//!
//! The source walks the same record stream as [`crate::sampler::generate_stream`]
//! and sends each wing only its own half of every event: the left wing sees
//! `(i, a)`, the right wing `(j, b)`. Wings forward their frames to the
//! merger, which joins halves strictly by sequence number.

use std::collections::BTreeMap;
use std::io::{BufReader, BufWriter, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc;

use crate::model::AngleConfig;
use crate::sampler::{Record, RecordStream, SeedSpec};

use super::frame::{read_message, write_message, Message, MessageType, WingHalf};
use super::transport::{pipe, Capture, Tap};
use super::WireError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn data_type(self) -> MessageType {
        match self {
            Side::Left => MessageType::DataLeft,
            Side::Right => MessageType::DataRight,
        }
    }

    fn of(kind: MessageType) -> Option<Side> {
        match kind {
            MessageType::DataLeft => Some(Side::Left),
            MessageType::DataRight => Some(Side::Right),
            _ => None,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

pub fn left_half(r: &Record) -> WingHalf {
    WingHalf {
        setting: r.i,
        outcome: r.a,
    }
}

pub fn right_half(r: &Record) -> WingHalf {
    WingHalf {
        setting: r.j,
        outcome: r.b,
    }
}

fn abort_quietly<W: Write>(out: &mut W, contiguous: u64, reason: &str) {
    let _ = write_message(out, &Message::abort(contiguous, reason));
    let _ = out.flush();
}

/// Samples `n` events and fans their halves out to the two wings.
///
/// Returns the number of events handed to both transports. When one wing's
/// channel fails the other receives ABORT carrying that count.
pub fn run_source<L: Write, R: Write>(
    seeds: SeedSpec,
    n: u64,
    angles: &AngleConfig,
    left: L,
    right: R,
) -> Result<u64, WireError> {
    let mut left = BufWriter::new(left);
    let mut right = BufWriter::new(right);
    let fail = |side: Side, seq: u64, e: std::io::Error| WireError::Aborted {
        contiguous: seq,
        reason: format!("{side} wing transport failed: {e}"),
    };
    for (seq, r) in (0u64..).zip(RecordStream::new(seeds, n, angles)) {
        if let Err(e) = write_message(&mut left, &Message::data(MessageType::DataLeft, seq, left_half(&r))) {
            abort_quietly(&mut right, seq, "left wing lost");
            return Err(fail(Side::Left, seq, e));
        }
        if let Err(e) = write_message(&mut right, &Message::data(MessageType::DataRight, seq, right_half(&r))) {
            abort_quietly(&mut left, seq, "right wing lost");
            return Err(fail(Side::Right, seq, e));
        }
    }
    let end = Message::end(n);
    if let Err(e) = write_message(&mut left, &end).and_then(|_| left.flush()) {
        abort_quietly(&mut right, n, "left wing lost");
        return Err(fail(Side::Left, n, e));
    }
    if let Err(e) = write_message(&mut right, &end).and_then(|_| right.flush()) {
        abort_quietly(&mut left, n, "right wing lost");
        return Err(fail(Side::Right, n, e));
    }
    Ok(n)
}

/// Forwards this wing's halves from the source to the merger.
///
/// A frame belonging to the other wing is a locality breach and aborts.
pub fn run_wing<R: Read, W: Write>(side: Side, upstream: R, downstream: W) -> Result<u64, WireError> {
    let mut up = BufReader::new(upstream);
    let mut down = BufWriter::new(downstream);
    let mut forwarded = 0u64;
    loop {
        let msg = match read_message(&mut up) {
            Ok(Some(m)) => m,
            Ok(None) => {
                abort_quietly(&mut down, forwarded, "source closed without END");
                return Err(WireError::Aborted {
                    contiguous: forwarded,
                    reason: format!("{side} wing: source closed without END"),
                });
            }
            Err(e) => {
                abort_quietly(&mut down, forwarded, &e.to_string());
                return Err(e);
            }
        };
        match msg.kind {
            kind if kind == side.data_type() => {
                msg.half()?;
                write_message(&mut down, &msg)?;
                forwarded += 1;
            }
            MessageType::End => {
                write_message(&mut down, &msg)?;
                down.flush()?;
                return Ok(forwarded);
            }
            MessageType::Abort => {
                write_message(&mut down, &msg)?;
                down.flush()?;
                return Err(WireError::Aborted {
                    contiguous: msg.seq,
                    reason: msg.reason(),
                });
            }
            other => {
                abort_quietly(&mut down, forwarded, "locality breach");
                return Err(WireError::Locality { side, kind: other });
            }
        }
    }
}

enum Termination {
    End(u64),
    Abort(u64, String),
    Eof,
    Failed(String),
}

fn reader_loop<R: Read>(conn: usize, input: R, tx: mpsc::Sender<(usize, Result<Option<Message>, WireError>)>) {
    let mut input = BufReader::new(input);
    loop {
        let item = read_message(&mut input);
        let last = !matches!(&item, Ok(Some(m)) if matches!(m.kind, MessageType::DataLeft | MessageType::DataRight));
        if tx.send((conn, item)).is_err() || last {
            return;
        }
    }
}

/// Joins the two wing streams by sequence number, handing each merged record
/// to `sink` in order. Connections may arrive in either role; each must carry
/// halves of one side only.
///
/// Returns the number of records merged. If the session did not end cleanly
/// the error carries the contiguous prefix length that was delivered.
pub fn run_merger<A, B, F>(first: A, second: B, mut sink: F) -> Result<u64, WireError>
where
    A: Read + Send,
    B: Read + Send,
    F: FnMut(&Record) -> std::io::Result<()>,
{
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|scope| {
        let tx2 = tx.clone();
        scope.spawn(move || reader_loop(0, first, tx));
        scope.spawn(move || reader_loop(1, second, tx2));

        let mut halves: [BTreeMap<u64, WingHalf>; 2] = [BTreeMap::new(), BTreeMap::new()];
        let mut conn_side: [Option<Side>; 2] = [None, None];
        let mut done: [Option<Termination>; 2] = [None, None];
        let mut failure: Option<WireError> = None;
        let mut next = 0u64;

        for (conn, item) in rx.iter() {
            match item {
                Ok(Some(msg)) => match msg.kind {
                    MessageType::DataLeft | MessageType::DataRight => {
                        let side = Side::of(msg.kind).expect("data frame");
                        if *conn_side[conn].get_or_insert(side) != side {
                            failure.get_or_insert(WireError::Protocol(format!(
                                "connection {conn} mixes left and right halves"
                            )));
                            continue;
                        }
                        let half = match msg.half() {
                            Ok(h) => h,
                            Err(e) => {
                                failure.get_or_insert(e);
                                continue;
                            }
                        };
                        let slot = &mut halves[side.index()];
                        if msg.seq < next || slot.insert(msg.seq, half).is_some() {
                            failure.get_or_insert(WireError::Protocol(format!(
                                "duplicate sequence number {} from {side} wing",
                                msg.seq
                            )));
                            continue;
                        }
                        if failure.is_some() {
                            continue;
                        }
                        while halves[0].contains_key(&next) && halves[1].contains_key(&next) {
                            let l = halves[0].remove(&next).expect("present");
                            let r = halves[1].remove(&next).expect("present");
                            let record = Record::new(l.outcome, r.outcome, l.setting, r.setting);
                            if let Err(e) = sink(&record) {
                                failure.get_or_insert(e.into());
                                break;
                            }
                            next += 1;
                        }
                    }
                    MessageType::End => done[conn] = Some(Termination::End(msg.seq)),
                    MessageType::Abort => done[conn] = Some(Termination::Abort(msg.seq, msg.reason())),
                },
                Ok(None) => done[conn] = Some(Termination::Eof),
                Err(e) => done[conn] = Some(Termination::Failed(e.to_string())),
            }
            if done.iter().all(Option::is_some) {
                break;
            }
        }

        if let Some(e) = failure {
            return Err(e);
        }
        match (&done[0], &done[1]) {
            (Some(Termination::End(t0)), Some(Termination::End(t1))) => {
                if t0 != t1 {
                    Err(WireError::Protocol(format!(
                        "wings disagree on event count: {t0} vs {t1}"
                    )))
                } else if next == *t0 && halves.iter().all(BTreeMap::is_empty) {
                    Ok(next)
                } else {
                    Err(WireError::SequenceGap { missing: next })
                }
            }
            (a, b) => {
                let describe = |t: &Option<Termination>| match t {
                    Some(Termination::End(_)) => None,
                    Some(Termination::Abort(k, why)) => Some(format!("abort after {k}: {why}")),
                    Some(Termination::Eof) => Some("connection closed without END".to_string()),
                    Some(Termination::Failed(e)) => Some(e.clone()),
                    None => Some("no termination".to_string()),
                };
                let reason = [describe(a), describe(b)]
                    .into_iter()
                    .flatten()
                    .collect::<Vec<_>>()
                    .join("; ");
                Err(WireError::Aborted {
                    contiguous: next,
                    reason,
                })
            }
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SessionTransport {
    /// In-process byte pipes.
    #[default]
    Loopback,
    /// TCP sockets on 127.0.0.1 with ephemeral ports.
    LocalTcp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    pub seeds: SeedSpec,
    pub n: u64,
    pub angles: AngleConfig,
    pub transport: SessionTransport,
}

/// Merged stream plus the exact bytes the source sent to each wing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionOutput {
    pub records: Vec<Record>,
    pub left_channel: Vec<u8>,
    pub right_channel: Vec<u8>,
}

fn first_error(results: impl IntoIterator<Item = Result<u64, WireError>>) -> Result<(), WireError> {
    for r in results {
        r?;
    }
    Ok(())
}

fn join<T>(h: std::thread::ScopedJoinHandle<'_, Result<T, WireError>>) -> Result<T, WireError> {
    h.join()
        .unwrap_or_else(|_| Err(WireError::Protocol("session thread panicked".into())))
}

/// Runs source, both wings and the merger in one process.
pub fn run_session(cfg: &SessionConfig) -> Result<SessionOutput, WireError> {
    let left_cap = Capture::new();
    let right_cap = Capture::new();
    let mut records = Vec::with_capacity(cfg.n.min(1 << 24) as usize);
    let merged = match cfg.transport {
        SessionTransport::Loopback => {
            let (src_l, wing_l_in) = pipe();
            let (src_r, wing_r_in) = pipe();
            let (wing_l_out, merge_l) = pipe();
            let (wing_r_out, merge_r) = pipe();
            std::thread::scope(|s| {
                let (lc, rc) = (left_cap.clone(), right_cap.clone());
                let source = s
                    .spawn(move || run_source(cfg.seeds, cfg.n, &cfg.angles, Tap::new(src_l, lc), Tap::new(src_r, rc)));
                let left = s.spawn(move || run_wing(Side::Left, wing_l_in, wing_l_out));
                let right = s.spawn(move || run_wing(Side::Right, wing_r_in, wing_r_out));
                let merged = run_merger(merge_l, merge_r, |r| {
                    records.push(*r);
                    Ok(())
                });
                let others = [join(source), join(left), join(right)];
                merged.and_then(|n| first_error(others).map(|_| n))
            })
        }
        SessionTransport::LocalTcp => {
            let merge_listener = TcpListener::bind("127.0.0.1:0")?;
            let left_listener = TcpListener::bind("127.0.0.1:0")?;
            let right_listener = TcpListener::bind("127.0.0.1:0")?;
            let merge_addr = merge_listener.local_addr()?;
            let (left_addr, right_addr) = (left_listener.local_addr()?, right_listener.local_addr()?);
            std::thread::scope(|s| {
                let wing = |side: Side, listener: TcpListener| {
                    move || -> Result<u64, WireError> {
                        let (up, _) = listener.accept()?;
                        let down = TcpStream::connect(merge_addr)?;
                        run_wing(side, up, down)
                    }
                };
                let left = s.spawn(wing(Side::Left, left_listener));
                let right = s.spawn(wing(Side::Right, right_listener));
                let (lc, rc) = (left_cap.clone(), right_cap.clone());
                let source = s.spawn(move || -> Result<u64, WireError> {
                    let l = TcpStream::connect(left_addr)?;
                    let r = TcpStream::connect(right_addr)?;
                    run_source(cfg.seeds, cfg.n, &cfg.angles, Tap::new(l, lc), Tap::new(r, rc))
                });
                let merged = (|| {
                    let (a, _) = merge_listener.accept()?;
                    let (b, _) = merge_listener.accept()?;
                    run_merger(a, b, |r| {
                        records.push(*r);
                        Ok(())
                    })
                })();
                let others = [join(source), join(left), join(right)];
                merged.and_then(|n| first_error(others).map(|_| n))
            })
        }
    };
    merged?;
    Ok(SessionOutput {
        records,
        left_channel: left_cap.bytes(),
        right_channel: right_cap.bytes(),
    })
}
