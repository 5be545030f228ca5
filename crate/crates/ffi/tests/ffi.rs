use std::ffi::{CStr, CString};
use std::ptr;

use gwloc::dataset::{generate, standardize_fit_transform, write_dataset, GenConfig};
use gwloc::neuralloc::{train, write_model, MlpConfig};
use gwloc_ffi::*;

fn last_error() -> String {
    let len = unsafe { gwloc_last_error_message(ptr::null_mut(), 0) };
    let mut buf = vec![0 as std::ffi::c_char; len + 1];
    unsafe { gwloc_last_error_message(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn cpath(p: &std::path::Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn config() -> GenConfig {
    GenConfig {
        samples: 30,
        bins: 16,
        sensors: 4,
        seed: 3,
        ..GenConfig::default()
    }
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(gwloc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn dataset_handle_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.gwds");
    let ds = generate(&config()).unwrap();
    write_dataset(&ds, &path).unwrap();

    let mut handle = ptr::null_mut();
    let p = cpath(&path);
    assert_eq!(unsafe { gwloc_dataset_open(p.as_ptr(), &mut handle) }, GwlocStatus::Ok);
    let (mut n, mut q, mut m) = (0, 0, 0);
    assert_eq!(unsafe { gwloc_dataset_shape(handle, &mut n, &mut q, &mut m) }, GwlocStatus::Ok);
    assert_eq!((n, q, m), (30, 16, 12));

    let mut data = vec![0.0; q * m];
    let (mut x, mut y) = (0.0, 0.0);
    let status = unsafe { gwloc_dataset_sample(handle, 4, data.as_mut_ptr(), data.len(), &mut x, &mut y) };
    assert_eq!(status, GwlocStatus::Ok);
    let expect = &ds.samples[4];
    for (a, b) in data.iter().zip(expect.data.as_slice()) {
        assert_eq!(*a, *b as f32 as f64);
    }
    assert_eq!((x as f32, y as f32), (expect.label.x as f32, expect.label.y as f32));

    let status = unsafe { gwloc_dataset_sample(handle, 30, data.as_mut_ptr(), data.len(), &mut x, &mut y) };
    assert_eq!(status, GwlocStatus::Index);
    assert!(last_error().contains("out of range"));
    let status = unsafe { gwloc_dataset_sample(handle, 0, data.as_mut_ptr(), 3, &mut x, &mut y) };
    assert_eq!(status, GwlocStatus::Shape);

    assert_eq!(unsafe { gwloc_localize(handle, 4, 10, 10, &mut x, &mut y) }, GwlocStatus::Ok);
    assert!((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y));
    assert_eq!(unsafe { gwloc_localize(handle, 4, 1, 10, &mut x, &mut y) }, GwlocStatus::InvalidInput);

    unsafe { gwloc_dataset_free(handle) };
    unsafe { gwloc_dataset_free(ptr::null_mut()) };
}

#[test]
fn open_errors_map_to_status_codes() {
    let dir = tempfile::tempdir().unwrap();
    let mut handle = ptr::null_mut();
    let missing = cpath(&dir.path().join("none.gwds"));
    assert_eq!(unsafe { gwloc_dataset_open(missing.as_ptr(), &mut handle) }, GwlocStatus::Io);
    assert!(handle.is_null());
    assert_eq!(unsafe { gwloc_dataset_open(ptr::null(), &mut handle) }, GwlocStatus::NullPointer);
    assert!(last_error().contains("null"));

    let bad = dir.path().join("bad.gwds");
    std::fs::write(&bad, b"NOTMAGIC\0\0\0\0\0\0\0\0").unwrap();
    let bad = cpath(&bad);
    assert_eq!(unsafe { gwloc_dataset_open(bad.as_ptr(), &mut handle) }, GwlocStatus::Format);
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { gwloc_model_open(bad.as_ptr(), &mut model) }, GwlocStatus::Format);
}

#[test]
fn model_predictions_match_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let ds = standardize_fit_transform(generate(&config()).unwrap()).unwrap();
    let mc = MlpConfig {
        hidden: vec![8],
        epochs: 2,
        ..MlpConfig::new(ds.feature_dim())
    };
    let model = train(&ds, &mc).unwrap();
    let path = dir.path().join("m.gwnn");
    write_model(&model, &path).unwrap();
    let reloaded = gwloc::neuralloc::read_model(&path).unwrap();

    let mut handle = ptr::null_mut();
    let p = cpath(&path);
    assert_eq!(unsafe { gwloc_model_open(p.as_ptr(), &mut handle) }, GwlocStatus::Ok);
    let mut dim = 0;
    assert_eq!(unsafe { gwloc_model_input_dim(handle, &mut dim) }, GwlocStatus::Ok);
    assert_eq!(dim, 16 * 12);

    let raw: Vec<f64> = (0..dim).map(|i| (i as f64 * 0.37).sin() * 1e-3).collect();
    let (mut x, mut y) = (0.0, 0.0);
    let status = unsafe { gwloc_model_predict(handle, raw.as_ptr(), raw.len(), &mut x, &mut y) };
    assert_eq!(status, GwlocStatus::Ok);
    let want = reloaded
        .predict_features(&raw, gwloc::neuralloc::InputScale::Raw)
        .unwrap();
    assert_eq!((x, y), (want.x, want.y));
    let status = unsafe { gwloc_model_predict(handle, raw.as_ptr(), 5, &mut x, &mut y) };
    assert_eq!(status, GwlocStatus::Shape);
    unsafe { gwloc_model_free(handle) };
}

#[test]
fn ale_and_wavenumber() {
    let truth = [0.0, 0.0, 0.2, 0.9];
    let pred = [0.3, 0.4, 0.2, 0.9];
    let (mut mean, mut std) = (0.0, 0.0);
    assert_eq!(unsafe { gwloc_ale(truth.as_ptr(), pred.as_ptr(), 2, &mut mean, &mut std) }, GwlocStatus::Ok);
    assert!((mean - 0.25).abs() < 1e-15 && (std - 0.25).abs() < 1e-15);
    assert_eq!(unsafe { gwloc_ale(truth.as_ptr(), pred.as_ptr(), 0, &mut mean, &mut std) }, GwlocStatus::InvalidInput);

    let mut k = 0.0;
    let w = 2.0 * std::f64::consts::PI * 1e5;
    assert_eq!(unsafe { gwloc_wavenumber(GwlocMode::Linear as u32, 5400.0, 1.1, w, &mut k) }, GwlocStatus::Ok);
    assert!((k - 1.1 * w / 5400.0).abs() < 1e-12);
    assert_eq!(unsafe { gwloc_wavenumber(GwlocMode::SquareRoot as u32, 0.25, 1.0, w, &mut k) }, GwlocStatus::Ok);
    assert!((k - (w / 0.25).sqrt()).abs() < 1e-9);
    assert_eq!(unsafe { gwloc_wavenumber(7, 1.0, 1.0, w, &mut k) }, GwlocStatus::InvalidInput);
    assert_eq!(unsafe { gwloc_wavenumber(0, 5400.0, 2.0, w, &mut k) }, GwlocStatus::Domain);
    assert_eq!(unsafe { gwloc_wavenumber(0, 5400.0, 1.0, w, ptr::null_mut()) }, GwlocStatus::NullPointer);
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/gwloc.h");
    for name in [
        "gwloc_last_error_message",
        "gwloc_version",
        "gwloc_dataset_open",
        "gwloc_dataset_free",
        "gwloc_dataset_shape",
        "gwloc_dataset_sample",
        "gwloc_localize",
        "gwloc_model_open",
        "gwloc_model_free",
        "gwloc_model_input_dim",
        "gwloc_model_predict",
        "gwloc_ale",
        "gwloc_wavenumber",
        "typedef struct GwlocDataset GwlocDataset",
        "GWLOC_STATUS_FORMAT = 4",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
