use std::io::{BufReader, Write};

use classical_chsh::model::AngleConfig;
use classical_chsh::sampler::{generate_stream, Record, SeedSpec};
use classical_chsh::wire::session::{left_half, right_half};
use classical_chsh::wire::transport::pipe;
use classical_chsh::wire::{
    decode_messages, decode_records, encode_records, read_message, run_merger, run_session, run_source, run_wing,
    write_message, Format, MessageType, SessionConfig, SessionTransport, Side, WireError,
};
use proptest::prelude::*;

fn config(seed: u64, n: u64, transport: SessionTransport) -> SessionConfig {
    SessionConfig {
        seeds: SeedSpec::with_default_shards(seed),
        n,
        angles: AngleConfig::tsirelson(),
        transport,
    }
}

#[test]
fn session_reproduces_the_sampled_stream() {
    let cfg = config(42, 100_000, SessionTransport::Loopback);
    let out = run_session(&cfg).unwrap();
    let serial = generate_stream(&cfg.seeds, cfg.n, &cfg.angles);
    assert_eq!(out.records, serial);
    assert_eq!(
        encode_records(&out.records, Format::Bin),
        encode_records(&serial, Format::Bin)
    );
}

#[test]
fn tcp_session_matches_loopback() {
    let a = run_session(&config(5, 20_000, SessionTransport::Loopback)).unwrap();
    let b = run_session(&config(5, 20_000, SessionTransport::LocalTcp)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn each_wing_channel_carries_only_its_own_half() {
    let cfg = config(3, 10_000, SessionTransport::Loopback);
    let out = run_session(&cfg).unwrap();
    let records = generate_stream(&cfg.seeds, cfg.n, &cfg.angles);
    for (side, bytes) in [(Side::Left, &out.left_channel), (Side::Right, &out.right_channel)] {
        let msgs = decode_messages(bytes).unwrap();
        assert_eq!(msgs.len(), records.len() + 1);
        let (end, data) = msgs.split_last().unwrap();
        assert_eq!(end.kind, MessageType::End);
        assert_eq!(end.seq, cfg.n);
        for ((seq, msg), r) in (0u64..).zip(data).zip(&records) {
            assert_eq!(msg.kind, side.data_type());
            assert_eq!(msg.seq, seq);
            let want = match side {
                Side::Left => left_half(r),
                Side::Right => right_half(r),
            };
            assert_eq!(msg.payload, vec![want.to_byte()]);
        }
    }
    // Knowing every left frame says nothing about the right outcome: each
    // left payload is compatible with both right signs somewhere in the run.
    let left = decode_messages(&out.left_channel).unwrap();
    for byte in 0u8..4 {
        let rights: std::collections::HashSet<_> = left
            .iter()
            .zip(&records)
            .filter(|(m, _)| m.payload == [byte])
            .map(|(_, r)| r.b)
            .collect();
        assert_eq!(rights.len(), 2, "left payload {byte}");
    }
}

/// A wing that forwards `keep` data frames and then disappears.
fn faulty_wing(side: Side, upstream: impl std::io::Read, mut downstream: impl Write, keep: u64) {
    let mut up = BufReader::new(upstream);
    for _ in 0..keep {
        let msg = read_message(&mut up).unwrap().expect("frame");
        assert_eq!(msg.kind, side.data_type());
        write_message(&mut downstream, &msg).unwrap();
    }
    downstream.flush().unwrap();
}

#[test]
fn dropped_wing_reports_contiguous_prefix() {
    let keep = 1234u64;
    let (src_l, wing_l_in) = pipe();
    let (src_r, wing_r_in) = pipe();
    let (wing_l_out, merge_l) = pipe();
    let (wing_r_out, merge_r) = pipe();
    let mut merged = Vec::new();
    let (src, left, result) = std::thread::scope(|s| {
        let src = s.spawn(move || {
            run_source(
                SeedSpec::with_default_shards(8),
                500_000,
                &AngleConfig::tsirelson(),
                src_l,
                src_r,
            )
        });
        let left = s.spawn(move || run_wing(Side::Left, wing_l_in, wing_l_out));
        s.spawn(move || faulty_wing(Side::Right, wing_r_in, wing_r_out, keep));
        let result = run_merger(merge_l, merge_r, |r| {
            merged.push(*r);
            Ok(())
        });
        (src.join().unwrap(), left.join().unwrap(), result)
    });
    match result {
        Err(WireError::Aborted { contiguous, .. }) => assert_eq!(contiguous, keep),
        other => panic!("expected abort, got {other:?}"),
    }
    assert_eq!(merged.len() as u64, keep);
    let expected = generate_stream(&SeedSpec::with_default_shards(8), keep, &AngleConfig::tsirelson());
    assert_eq!(merged, expected);
    assert!(matches!(src, Err(WireError::Aborted { .. })), "{src:?}");
    assert!(left.is_err());
}

fn record() -> impl Strategy<Value = Record> {
    (0usize..16).prop_map(|k| Record::all()[k])
}

proptest! {
    #[test]
    fn record_formats_round_trip(xs in proptest::collection::vec(record(), 0..500)) {
        for format in Format::ALL {
            let bytes = encode_records(&xs, format);
            prop_assert_eq!(decode_records(&bytes[..], format).unwrap(), xs.clone());
        }
    }
}
