//! Replays the checked-in fuzz corpus through every parser.

use std::path::PathBuf;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn text(b: &[u8]) -> Option<&str> {
    std::str::from_utf8(b).ok()
}

#[test]
fn config_kv_seeds() {
    let mut ok = 0;
    for (_, b) in seeds("config_kv") {
        let t = text(&b).unwrap();
        ok += mala_lab::config::parse_kv(t).is_ok() as usize;
        let _ = mala_lab::config::parse_config_text(t);
    }
    assert!(ok >= 1);
}

#[test]
fn config_json_seeds() {
    for (name, b) in seeds("config_json") {
        let r = mala_lab::config::parse_json(text(&b).unwrap());
        if name == "nested.json" || name == "manifest.json" {
            assert!(r.is_ok(), "{name}: {r:?}");
        }
    }
}

#[test]
fn h_list_seeds() {
    for (name, b) in seeds("h_list") {
        if let Ok(hs) = mala_lab::hrange::parse_h_list(text(&b).unwrap()) {
            assert!(hs.iter().all(|h| h.is_finite() && *h > 0.0), "{name}");
        }
    }
}

#[test]
fn csv_seeds() {
    for (name, b) in seeds("csv") {
        let r = mala_core::reporting::parse_csv(text(&b).unwrap());
        if name == "reject_scaling.csv" || name == "kernel_tv.csv" {
            assert!(r.is_ok(), "{name}");
        }
    }
}

#[test]
fn kernel_dump_seeds() {
    for (name, b) in seeds("kernel_dump") {
        let r = mala_core::oracle1d::decode_kernel_dump(&b);
        assert_eq!(r.is_ok(), name == "small.bin", "{name}");
    }
}

#[test]
fn manifest_seeds() {
    for (name, b) in seeds("manifest") {
        let m = mala_lab::manifest::parse_manifest(text(&b).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(m.artifacts.iter().all(|a| mala_lab::manifest::is_plain_name(&a.path)));
    }
}
