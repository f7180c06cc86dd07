use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::ptr;
use std::sync::Arc;

use decoykit::anonymize::AnonymizedView;
use decoykit::dataset::{Dataset, Schema};
use decoykit::decoy::{build_releases, DecoyPolicy};
use decoykit::hierarchy::{HierarchySet, LevelVector};
use decoykit::linkage::Feasibility;
use decoykit_ffi::*;

fn seven_records(file: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/seven_records").join(file)
}

fn c(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = dk_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn anonymize_seven_records_through_the_c_interface() {
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(
            dk_dataset_load(c(&seven_records("data.csv")).as_ptr(), c(&seven_records("schema.toml")).as_ptr(), &mut ds),
            DkStatus::Ok
        );
        assert_eq!(dk_dataset_len(ds), 7);
        let mut h = ptr::null_mut();
        assert_eq!(dk_hierarchies_load(c(&seven_records("hierarchies.toml")).as_ptr(), &mut h), DkStatus::Ok);

        let mut v = ptr::null_mut();
        assert_eq!(dk_anonymize(ds, h, 2, 0.0, &mut v), DkStatus::Ok);
        assert_eq!(dk_view_class_count(v), 2);
        assert_eq!(dk_view_suppressed_count(v), 0);
        let mut sizes = [0usize; 4];
        assert_eq!(dk_view_class_sizes(v, sizes.as_mut_ptr(), sizes.len()), 2);
        sizes[..2].sort_unstable();
        assert_eq!(&sizes[..2], &[3, 4]);
        let mut lv = [0usize; 3];
        assert_eq!(dk_view_level_vector(v, ptr::null_mut(), 0), 3);
        dk_view_level_vector(v, lv.as_mut_ptr(), lv.len());
        assert_eq!(lv, [1, 0, 0]);

        let dir = tempfile::tempdir().unwrap();
        assert_eq!(dk_view_write(v, c(dir.path()).as_ptr()), DkStatus::Ok);
        assert!(dir.path().join("table.csv").exists());

        // k above the record count
        let mut none = ptr::null_mut();
        assert_eq!(dk_anonymize(ds, h, 8, 0.0, &mut none), DkStatus::Validation);
        assert!(none.is_null());
        assert!(last_error().contains("k=8"));

        dk_view_free(v);
        dk_hierarchies_free(h);
        dk_dataset_free(ds);
    }
}

#[test]
fn same_origin_example() {
    let hier = r#"
[[hierarchy]]
name = "Gender"
kind = "mapping"
[hierarchy.table]
Male = ["Person"]
Female = ["Person"]

[[hierarchy]]
name = "ZIP"
kind = "suffix-mask"
length = 5

[[hierarchy]]
name = "YOB"
kind = "interval"
widths = [3, 6]
origin = 0
labels = "inclusive"
"#;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.toml");
    std::fs::write(&path, hier).unwrap();
    let strs = |v: &[&str]| v.iter().map(|s| CString::new(*s).unwrap()).collect::<Vec<_>>();
    let attrs = strs(&["Gender", "ZIP", "YOB"]);
    let a = strs(&["Male", "5555*", "1980-1982"]);
    let b = strs(&["Male", "555**", "1981"]);
    let b2 = strs(&["Male", "5554*", "1981"]);
    let ptrs = |v: &[CString]| v.iter().map(|s| s.as_ptr()).collect::<Vec<*const c_char>>();
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(dk_hierarchies_load(c(&path).as_ptr(), &mut h), DkStatus::Ok);
        let mut out = false;
        let st = dk_same_origin(h, ptrs(&attrs).as_ptr(), ptrs(&a).as_ptr(), ptrs(&b).as_ptr(), 3, false, &mut out);
        assert_eq!(st, DkStatus::Ok);
        assert!(out);
        let st = dk_same_origin(h, ptrs(&attrs).as_ptr(), ptrs(&a).as_ptr(), ptrs(&b2).as_ptr(), 3, false, &mut out);
        assert_eq!(st, DkStatus::Ok);
        assert!(!out);
        let st = dk_same_origin(h, ptr::null(), ptrs(&a).as_ptr(), ptrs(&b).as_ptr(), 3, false, &mut out);
        assert_eq!(st, DkStatus::InvalidArgument);
        dk_hierarchies_free(h);
    }
}

#[test]
fn attribute_leak_returns_json() {
    let schema = Schema::load(&seven_records("schema.toml")).unwrap();
    let quasi = HierarchySet::load(&seven_records("hierarchies.toml")).unwrap().for_schema(&schema).unwrap();
    let data = Dataset::load(&seven_records("data.csv"), &schema).unwrap().strip_direct();
    let pop = Dataset::load(&seven_records("population.csv"), &schema).unwrap();
    let view = AnonymizedView::at(Arc::new(data), &quasi, LevelVector(vec![1, 0, 0]), 2, 0.0).unwrap();
    let f = Feasibility::assess(&view, &pop).unwrap();
    let set = build_releases(&view, &pop, &f.candidates, &["A".to_string()], &DecoyPolicy::new(2, 1), None).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let reg_path = dir.path().join("registry.json");
    set.registry.save(&reg_path).unwrap();
    let rel = dir.path().join("rel");
    set.releases[0].write(&rel).unwrap();

    unsafe {
        let mut reg = ptr::null_mut();
        assert_eq!(dk_registry_load(c(&reg_path).as_ptr(), &mut reg), DkStatus::Ok);
        assert_eq!(dk_registry_recipient_count(reg), 1);
        let mut json = ptr::null_mut();
        let st = dk_attribute_leak(reg, c(&rel.join("table.csv")).as_ptr(), false, ptr::null(), 0.5, &mut json);
        assert_eq!(st, DkStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        assert_eq!(v["outcome"]["outcome"], "attributed");
        assert_eq!(v["outcome"]["recipient_id"], "A");
        dk_string_free(json);

        let st = dk_attribute_leak(reg, c(&dir.path().join("missing.csv")).as_ptr(), false, ptr::null(), 0.5, &mut json);
        assert_eq!(st, DkStatus::Io);
        assert_eq!(dk_attribute_leak(reg, ptr::null(), false, ptr::null(), 0.5, &mut json), DkStatus::InvalidArgument);
        assert_eq!(dk_attribute_leak(reg, ptr::null(), false, ptr::null(), 1.5, &mut json), DkStatus::InvalidArgument);
        dk_registry_free(reg);
    }
}

#[test]
fn header_declares_the_interface() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/decoykit.h")).unwrap();
    for name in [
        "typedef struct DkDataset DkDataset",
        "typedef struct DkView DkView",
        "DK_STATUS_CAPACITY = 3",
        "dk_anonymize(",
        "dk_attribute_leak(",
        "dk_string_free(",
        "dk_last_error(",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
