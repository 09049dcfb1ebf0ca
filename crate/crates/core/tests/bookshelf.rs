// SPDX-License-Identifier: Apache-2.0

mod common;

use std::path::{Path, PathBuf};

use common::random_instance;
use placerl_core::netlist::bookshelf::{parse_bookshelf, placement_text, write_design, write_placement, BookshelfError};
use placerl_core::netlist::{hpwl, Netlist, Placement, Region};
use proptest::prelude::*;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name).join(format!("{name}.aux"))
}

fn load(name: &str) -> (Netlist<f64>, Placement<f64>) {
    parse_bookshelf(fixture(name)).unwrap()
}

#[test]
fn tiny_fixture_golden_values() {
    let (nl, pl) = load("tiny");
    assert_eq!((nl.nodes.len(), nl.nets.len(), nl.pins.len()), (6, 3, 8));
    assert_eq!(nl.num_movable(), 4);
    assert_eq!(nl.region, Region::new(0.0, 0.0, 12.0, 4.0));
    assert_eq!(nl.row_height, 2.0);
    let names: Vec<&str> = nl.nets.iter().map(|n| n.name.as_str()).collect();
    assert_eq!(names, ["n0", "n1", "n2"]);
    // n0: 4 + 0, n1: 4.5 + 3, n2: 11.5 + 3.5
    assert_eq!(hpwl(&nl, &pl), 26.5);
    assert_eq!((pl.x[4], pl.y[4]), (0.0, 3.0));
}

#[test]
fn ladder_fixture_golden_values() {
    let (nl, pl) = load("ladder");
    // The one-pin net is dropped.
    assert_eq!((nl.nodes.len(), nl.nets.len(), nl.pins.len()), (7, 5, 11));
    assert_eq!(nl.nets[0].name, "net0");
    assert!(nl.nets.iter().all(|n| n.name != "lonely"));
    assert!(!nl.nodes[5].movable && !nl.nodes[6].movable);
    // No .scl: region is the bounding box of the placed nodes.
    assert_eq!(nl.region, Region::new(-2.0, -2.0, 13.0, 9.0));
    assert_eq!(nl.row_height, 1.0);
    // four rungs of 2 + 1, rail 10 + 7
    assert_eq!(hpwl(&nl, &pl), 29.0);
    assert!(nl.validate().is_ok());
}

#[test]
fn tiny_placement_writer_is_golden() {
    let (nl, pl) = load("tiny");
    let want = "UCLA pl 1.0\n\n\
                a\t0\t0\t: N\n\
                b\t4\t0\t: N\n\
                c\t6\t2\t: N\n\
                d\t10\t2\t: N\n\
                p1\t0\t3\t: N /FIXED\n\
                p2\t11\t0\t: N /FIXED\n";
    assert_eq!(placement_text(&nl, &pl), want);
}

#[test]
fn fixtures_round_trip() {
    for name in ["tiny", "ladder"] {
        let (nl, pl) = load(name);
        let dir = tempfile::tempdir().unwrap();
        let aux = write_design(&nl, &pl, dir.path(), name).unwrap();
        let (nl2, pl2) = parse_bookshelf::<f64>(&aux).unwrap();
        assert_eq!(nl.nodes, nl2.nodes, "{name}");
        assert_eq!(nl.nets, nl2.nets, "{name}");
        assert_eq!(nl.pins, nl2.pins, "{name}");
        assert_eq!(pl, pl2, "{name}");
        assert_eq!(hpwl(&nl, &pl), hpwl(&nl2, &pl2));
        // A second pass is byte-identical.
        let dir2 = tempfile::tempdir().unwrap();
        let aux2 = write_design(&nl2, &pl2, dir2.path(), name).unwrap();
        for ext in ["nodes", "nets", "pl", "scl", "aux"] {
            let a = std::fs::read(aux.with_extension(ext)).unwrap();
            let b = std::fs::read(aux2.with_extension(ext)).unwrap();
            assert_eq!(a, b, "{name}.{ext}");
        }
    }
}

#[test]
fn moved_placement_round_trips() {
    let (nl, mut pl) = load("tiny");
    pl.x[0] = 1.0 / 3.0;
    pl.y[2] = std::f64::consts::PI;
    let dir = tempfile::tempdir().unwrap();
    let aux = write_design(&nl, &pl, dir.path(), "moved").unwrap();
    let out = dir.path().join("again.pl");
    write_placement(&nl, &pl, &out).unwrap();
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(aux.with_extension("pl")).unwrap());
    let (_, pl2) = parse_bookshelf::<f64>(&aux).unwrap();
    assert_eq!(pl, pl2);
}

#[test]
fn missing_aux_is_io_error() {
    let err = parse_bookshelf::<f64>("/nonexistent/design.aux").unwrap_err();
    assert!(matches!(err, BookshelfError::Io { .. }));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_designs_round_trip(seed in 0u64..100_000) {
        let (nl, pl) = random_instance(seed, 15, 20, 32.0);
        let dir = tempfile::tempdir().unwrap();
        let aux = write_design(&nl, &pl, dir.path(), "r").unwrap();
        let (nl2, pl2) = parse_bookshelf::<f64>(&aux).unwrap();
        prop_assert_eq!(&nl.nodes, &nl2.nodes);
        prop_assert_eq!(&nl.nets, &nl2.nets);
        prop_assert_eq!(&pl, &pl2);
        for (a, b) in nl.pins.iter().zip(&nl2.pins) {
            prop_assert_eq!((a.node, a.net), (b.node, b.net));
            prop_assert!((a.offset_x - b.offset_x).abs() < 1e-9);
            prop_assert!((a.offset_y - b.offset_y).abs() < 1e-9);
        }
        prop_assert!((hpwl(&nl, &pl) - hpwl(&nl2, &pl2)).abs() <= 1e-9 * hpwl(&nl, &pl));
    }
}
