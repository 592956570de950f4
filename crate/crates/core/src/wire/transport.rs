//! Byte transports: an in-process loopback pipe and a capturing tap.
//!
//! Any `Read`/`Write` pair works as a session channel; `TcpStream` is the
//! socket transport.

use std::collections::VecDeque;
use std::io::{self, Read, Write};
use std::sync::{Arc, Condvar, Mutex};

const PIPE_CAPACITY: usize = 1 << 20;

#[derive(Default)]
struct PipeState {
    buf: VecDeque<u8>,
    writer_closed: bool,
    reader_closed: bool,
}

struct Shared {
    state: Mutex<PipeState>,
    ready: Condvar,
}

/// Creates a bounded, reliable, ordered in-memory byte channel.
///
/// Dropping the writer ends the stream for the reader once drained;
/// dropping the reader makes further writes fail with `BrokenPipe`.
pub fn pipe() -> (PipeWriter, PipeReader) {
    let shared = Arc::new(Shared {
        state: Mutex::new(PipeState::default()),
        ready: Condvar::new(),
    });
    (PipeWriter(shared.clone()), PipeReader(shared))
}

pub struct PipeWriter(Arc<Shared>);
pub struct PipeReader(Arc<Shared>);

impl Write for PipeWriter {
    fn write(&mut self, data: &[u8]) -> io::Result<usize> {
        if data.is_empty() {
            return Ok(0);
        }
        let mut st = self.0.state.lock().expect("pipe lock poisoned");
        loop {
            if st.reader_closed {
                return Err(io::Error::new(io::ErrorKind::BrokenPipe, "loopback reader closed"));
            }
            let room = PIPE_CAPACITY - st.buf.len();
            if room > 0 {
                let k = room.min(data.len());
                st.buf.extend(&data[..k]);
                self.0.ready.notify_all();
                return Ok(k);
            }
            st = self.0.ready.wait(st).expect("pipe lock poisoned");
        }
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

impl Drop for PipeWriter {
    fn drop(&mut self) {
        if let Ok(mut st) = self.0.state.lock() {
            st.writer_closed = true;
        }
        self.0.ready.notify_all();
    }
}

impl Read for PipeReader {
    fn read(&mut self, out: &mut [u8]) -> io::Result<usize> {
        if out.is_empty() {
            return Ok(0);
        }
        let mut st = self.0.state.lock().expect("pipe lock poisoned");
        loop {
            if !st.buf.is_empty() {
                let k = out.len().min(st.buf.len());
                for (slot, byte) in out.iter_mut().zip(st.buf.drain(..k)) {
                    *slot = byte;
                }
                self.0.ready.notify_all();
                return Ok(k);
            }
            if st.writer_closed {
                return Ok(0);
            }
            st = self.0.ready.wait(st).expect("pipe lock poisoned");
        }
    }
}

impl Drop for PipeReader {
    fn drop(&mut self) {
        if let Ok(mut st) = self.0.state.lock() {
            st.reader_closed = true;
            st.buf.clear();
        }
        self.0.ready.notify_all();
    }
}

/// Shared buffer receiving a copy of every byte written through a [`Tap`].
#[derive(Clone, Default)]
pub struct Capture(Arc<Mutex<Vec<u8>>>);

impl Capture {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bytes(&self) -> Vec<u8> {
        self.0.lock().expect("capture lock poisoned").clone()
    }
}

/// Writer adapter that records successfully written bytes.
pub struct Tap<W> {
    inner: W,
    capture: Capture,
}

impl<W: Write> Tap<W> {
    pub fn new(inner: W, capture: Capture) -> Self {
        Self { inner, capture }
    }
}

impl<W: Write> Write for Tap<W> {
    fn write(&mut self, data: &[u8]) -> io::Result<usize> {
        let k = self.inner.write(data)?;
        self.capture
            .0
            .lock()
            .expect("capture lock poisoned")
            .extend_from_slice(&data[..k]);
        Ok(k)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pipe_delivers_in_order_then_eof() {
        let (mut w, mut r) = pipe();
        let t = std::thread::spawn(move || {
            for k in 0..10_000u32 {
                w.write_all(&k.to_le_bytes()).unwrap();
            }
        });
        let mut all = Vec::new();
        r.read_to_end(&mut all).unwrap();
        t.join().unwrap();
        let expect: Vec<u8> = (0..10_000u32).flat_map(|k| k.to_le_bytes()).collect();
        assert_eq!(all, expect);
    }

    #[test]
    fn write_after_reader_drop_is_broken_pipe() {
        let (mut w, r) = pipe();
        drop(r);
        assert_eq!(w.write(b"x").unwrap_err().kind(), io::ErrorKind::BrokenPipe);
    }

    #[test]
    fn tap_captures() {
        let cap = Capture::new();
        let mut t = Tap::new(Vec::new(), cap.clone());
        t.write_all(b"abc").unwrap();
        assert_eq!(cap.bytes(), b"abc");
    }
}
