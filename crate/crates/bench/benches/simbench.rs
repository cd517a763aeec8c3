use criterion::{black_box, criterion_group, criterion_main, Criterion};

use manetsim::scenario::{MobilityConfig, Protocol, Scenario};
use manetsim::{wire, AddressBlock, Message, MsgKind, NodeId, SeqNum};

fn codec(c: &mut Criterion) {
    let mut msg = Message::new(MsgKind::Rreq, NodeId(1), SeqNum(42), NodeId(10));
    msg.ttl = 30;
    msg.hop_count = 8;
    msg.accumulated = (2..10)
        .map(|i| AddressBlock {
            addr: NodeId(i),
            seqnum: SeqNum(i * 3),
            hop_distance: (9 - i) as u8,
        })
        .collect();
    let bytes = wire::encode(&msg);

    c.bench_function("encode_rreq_8_blocks", |b| {
        b.iter(|| wire::encode(black_box(&msg)))
    });
    c.bench_function("decode_rreq_8_blocks", |b| {
        b.iter(|| wire::decode(black_box(&bytes)).unwrap())
    });
}

fn seqnums(c: &mut Criterion) {
    c.bench_function("seqnum_compare_wraparound", |b| {
        b.iter(|| {
            let mut acc = 0u32;
            for i in 0..64u32 {
                let r = manetsim::seqnum_compare(
                    black_box(SeqNum(i.wrapping_mul(0x9E37_79B9))),
                    black_box(SeqNum(i)),
                );
                acc ^= r as u32;
            }
            acc
        })
    });
}

fn simulation(c: &mut Criterion) {
    let scenario = |protocol| Scenario {
        node_count: 40,
        duration: 20.0,
        protocol,
        seed: 7,
        random_flows: 10,
        mobility: MobilityConfig {
            speed_min: 1.0,
            speed_max: 20.0,
            pause_time: 0.0,
        },
        ..Scenario::default()
    };
    let mut group = c.benchmark_group("run_40_nodes_20s");
    group.sample_size(10);
    for protocol in Protocol::ALL {
        group.bench_function(protocol.as_str(), |b| {
            b.iter(|| manetsim::sim::run(black_box(&scenario(protocol))).unwrap())
        });
    }
    group.finish();
}

fn metrics(c: &mut Criterion) {
    let sc = Scenario {
        node_count: 40,
        duration: 30.0,
        protocol: Protocol::Dymo,
        seed: 3,
        random_flows: 10,
        mobility: MobilityConfig {
            speed_min: 1.0,
            speed_max: 20.0,
            pause_time: 0.0,
        },
        ..Scenario::default()
    };
    let trace = manetsim::sim::run(&sc).unwrap().trace;
    c.bench_function("metrics_report_from_trace", |b| {
        b.iter(|| manetsim::metrics::MetricsReport::from_trace(black_box(&trace), &sc))
    });
}

criterion_group!(benches, codec, seqnums, simulation, metrics);
criterion_main!(benches);
