use std::path::PathBuf;

use isac_deploy::inference::{load_weights, Header, Layer, Network, WeightBundle};
use isac_deploy::Error;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn expected() -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(data("micro_expected.json")).unwrap()).unwrap()
}

fn floats(v: &serde_json::Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn micro_bundle_matches_hand_computed_outputs() {
    let w = load_weights(data("micro.cnnw")).unwrap();
    let e = expected();
    let input: Vec<f32> = floats(&e["input"]).iter().map(|&v| v as f32).collect();
    let want = floats(&e["output"]);
    let got = Network::new(&w).unwrap().forward_raw(&input).unwrap();
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(&want) {
        assert!((*g as f64 - w).abs() <= 1e-6, "{g} vs {w}");
    }
}

#[test]
fn micro_bundle_header_and_layers() {
    let w = load_weights(data("micro.cnnw")).unwrap();
    assert_eq!(
        w.header,
        Header { grid: 4, xi: 1.0, n_uavs: 1, area_x: 400.0, area_y: 400.0, h_min: 50.0, h_max: 500.0 }
    );
    let names: Vec<&str> = w.layers.iter().map(Layer::name).collect();
    assert_eq!(
        names,
        [
            "conv2d", "relu", "maxpool", "conv2d", "relu", "maxpool", "flatten", "dense", "relu", "dense", "relu",
            "dense", "relu"
        ]
    );
}

#[test]
fn micro_bundle_reencodes_byte_identically() {
    let bytes = std::fs::read(data("micro.cnnw")).unwrap();
    let w = WeightBundle::from_bytes(&bytes).unwrap();
    assert_eq!(w.to_bytes(), bytes);
}

#[test]
fn save_and_load_round_trip() {
    let w = load_weights(data("micro.cnnw")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("copy.cnnw");
    w.save(&path).unwrap();
    assert_eq!(load_weights(&path).unwrap(), w);
}

#[test]
fn every_truncation_is_rejected() {
    let bytes = std::fs::read(data("micro.cnnw")).unwrap();
    for cut in 0..bytes.len() {
        match WeightBundle::from_bytes(&bytes[..cut]) {
            Err(Error::Truncated { offset, .. }) => assert_eq!(offset, cut),
            other => panic!("cut at {cut}: {other:?}"),
        }
    }
}

#[test]
fn missing_file_is_an_io_error() {
    assert!(matches!(load_weights(data("nope.cnnw")), Err(Error::Io { .. })));
}
