use std::fmt::Write as _;
use std::path::Path;

use stc_core::data::pamap2::ACCEL_COLUMNS;
use stc_core::data::{load_pamap2, make_split, qualifying_subjects, window_recording, N_CLASSES};

/// Writes a protocol file with `seconds[c]` of activity class `c`, separated by
/// transient (activity 0) rows that must be discarded.
fn write_subject(dir: &Path, subject: u32, seconds: [usize; 3]) {
    let mut text = String::new();
    let mut t = 0.0;
    for (label, &secs) in seconds.iter().enumerate() {
        for (activity, rows) in [(0, 50), (label as u32 + 3, secs * 100)] {
            for i in 0..rows {
                let mut cols = vec!["NaN".to_string(); 54];
                cols[0] = format!("{t:.2}");
                cols[1] = activity.to_string();
                for (k, &c) in ACCEL_COLUMNS.iter().enumerate() {
                    cols[c] = format!("{}", (k + 1) as f64 * 0.1 + (i % 7) as f64 * 0.01 * (label + 1) as f64);
                }
                writeln!(text, "{}", cols.join(" ")).unwrap();
                t += 0.01;
            }
        }
    }
    std::fs::write(dir.join(format!("subject10{subject}.dat")), text).unwrap();
}

#[test]
fn protocol_directory_to_split() {
    let root = tempfile::tempdir().unwrap();
    let dir = root.path().join("Protocol");
    std::fs::create_dir(&dir).unwrap();
    write_subject(&dir, 1, [90, 90, 90]);
    write_subject(&dir, 2, [95, 91, 90]);
    write_subject(&dir, 3, [90, 90, 0]);

    let recs = load_pamap2(root.path(), &[1, 2, 3]).unwrap();
    assert_eq!(qualifying_subjects(&recs, 90.0), vec![1, 2]);
    let one = window_recording(&recs[0], 256, 128).unwrap();
    // 9000 steps per class: floor((9000 − 256)/128) + 1 = 69
    assert_eq!(one.len(), N_CLASSES * 69);
    assert!(one.iter().all(|s| s.channels() == 9 && s.len() == 256 && s.subject == 1));

    let mut samples = one;
    samples.extend(window_recording(&recs[1], 256, 128).unwrap());
    let three = window_recording(&recs[2], 256, 128).unwrap();
    samples.extend(three);
    let split = make_split(&samples, 2, 1).unwrap();
    assert!(split.pretrain.iter().all(|s| s.subject == 2 && s.label.is_none()));
    assert!(split.test.iter().all(|s| s.subject == 1 && s.label.is_some()));
    let err = make_split(&samples, 1, 3).unwrap_err().to_string();
    assert!(err.contains("running"), "{err}");
}

#[test]
fn missing_subject_names_the_subject() {
    let root = tempfile::tempdir().unwrap();
    write_subject(root.path(), 1, [1, 1, 1]);
    let err = load_pamap2(root.path(), &[1, 4]).unwrap_err().to_string();
    assert!(err.contains('4'), "{err}");
}
