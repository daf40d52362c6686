use dtn_workbench::config::{parse_config, GroupConfig, MapSource, ScenarioConfig, TrafficSpec};
use dtn_workbench::messaging::HostRange;
use dtn_workbench::routing::RouterKind;
use proptest::prelude::*;

fn range(lo: f64, hi: f64) -> impl Strategy<Value = (f64, f64)> {
    (lo..hi, lo..hi).prop_map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
}

fn group() -> impl Strategy<Value = GroupConfig> {
    (
        2u32..20,
        range(0.1, 20.0),
        range(0.0, 300.0),
        1.0..500.0f64,
        1e3..1e7f64,
        1_000_000u64..50_000_000,
        prop::sample::select(RouterKind::ALL.to_vec()),
        1u32..64,
        1usize..10,
        0.0..1.0f64,
    )
        .prop_map(
            |(count, speed, pause, range, bitrate, buffer_size, router, l, hop, theta)| {
                GroupConfig {
                    count,
                    speed,
                    pause,
                    range,
                    bitrate,
                    buffer_size,
                    router,
                    snw_copies: l,
                    hop_threshold: hop,
                    ml_threshold: theta,
                    model_path: None,
                }
            },
        )
}

fn scenario() -> impl Strategy<Value = ScenarioConfig> {
    (
        "[a-z][a-z0-9_]{0,10}",
        100.0..1e5f64,
        prop::sample::select(vec![0.5, 1.0, 2.0]),
        (2usize..12, 2usize..12, 10.0..200.0f64),
        10.0..1e4f64,
        any::<u64>(),
        any::<bool>(),
        prop::collection::vec(group(), 1..4),
        range(1.0, 100.0),
        (1u64..1_000_000, 0u64..1_000_000),
        any::<bool>(),
        prop::option::of(0.0..50.0f64),
    )
        .prop_map(
            |(
                name,
                duration,
                step,
                (cols, rows, spacing),
                ttl,
                seed,
                collect,
                groups,
                interval,
                (s0, ds),
                hosts,
                stop,
            )| {
                let n: u32 = groups.iter().map(|g| g.count).sum();
                let stop = stop.map(|s| duration - s);
                ScenarioConfig {
                    name,
                    duration,
                    step,
                    map: MapSource::Grid {
                        cols,
                        rows,
                        spacing,
                    },
                    ttl,
                    seed,
                    collect,
                    traffic: TrafficSpec {
                        interval,
                        size: (s0, s0 + ds),
                        src_hosts: hosts.then(|| HostRange::new(0, n / 2 - 1)),
                        dst_hosts: hosts.then(|| HostRange::new(n / 2, n - 1)),
                        start: 0.0,
                        stop,
                    },
                    groups,
                }
            },
        )
}

proptest! {
    #[test]
    fn text_form_round_trips(cfg in scenario()) {
        let text = cfg.to_text();
        let back = parse_config(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_text(), text);
    }
}
