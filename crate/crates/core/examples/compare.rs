//! Side-by-side protocol metrics on the reference 40-node configuration.
//!
//! Usage: compare [nodes] [duration] [seeds] [pause_times...]

use manetsim::metrics::{aggregate, MetricsReport};
use manetsim::scenario::{MobilityConfig, Protocol, Scenario};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let nodes: u32 = args.first().and_then(|s| s.parse().ok()).unwrap_or(40);
    let duration: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(100.0);
    let seeds: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(5);
    let pauses: Vec<f64> = if args.len() > 3 {
        args[3..]
            .iter()
            .map(|s| s.parse().expect("pause time"))
            .collect()
    } else {
        vec![0.0, 50.0, 100.0]
    };

    println!(
        "{:<6} {:>6} {:>9} {:>10} {:>10} {:>12} {:>8} {:>8}",
        "proto", "pause", "pdf", "aeed_s", "ro", "tp_bps", "sent", "deliv"
    );
    for pause in &pauses {
        for protocol in Protocol::ALL {
            let reports: Vec<MetricsReport> = (1..=seeds)
                .map(|seed| {
                    let sc = Scenario {
                        node_count: nodes,
                        duration,
                        protocol,
                        seed,
                        random_flows: 10,
                        mobility: MobilityConfig {
                            speed_min: 1.0,
                            speed_max: 20.0,
                            pause_time: *pause,
                        },
                        ..Scenario::default()
                    };
                    let result = manetsim::sim::run(&sc).expect("run");
                    MetricsReport::from_trace(&result.trace, &sc)
                })
                .collect();
            let sent: u64 = reports.iter().map(|r| r.data_sent).sum();
            let delivered: u64 = reports.iter().map(|r| r.data_delivered).sum();
            let agg = aggregate(&reports).unwrap();
            println!(
                "{:<6} {:>6} {:>9.4} {:>10.5} {:>10.1} {:>12.1} {:>8} {:>8}",
                protocol.as_str(),
                pause,
                agg.pdf.map(|s| s.mean).unwrap_or(f64::NAN),
                agg.aeed.map(|s| s.mean).unwrap_or(f64::NAN),
                agg.ro.mean,
                agg.tp.mean,
                sent / seeds,
                delivered / seeds,
            );
        }
        println!();
    }
}
