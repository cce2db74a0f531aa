use std::ffi::{CStr, CString};
use std::ptr;

use wordsimt_ffi::*;

fn sentence(line: &str) -> *mut WsimtSentence {
    let line = CString::new(line).unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe { wsimt_sentence_parse(line.as_ptr(), WsimtMarkerConvention::Suffix, &mut out) };
    assert_eq!(status, WsimtStatus::Ok);
    out
}

fn reads(s: *const WsimtSchedule) -> Vec<usize> {
    let mut buf = vec![0usize; 32];
    let mut len = 0;
    let status = unsafe { wsimt_schedule_reads(s, buf.as_mut_ptr(), buf.len(), &mut len) };
    assert_eq!(status, WsimtStatus::Ok);
    buf.truncate(len);
    buf
}

fn last_error() -> String {
    let p = wsimt_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn legs_example_through_the_c_abi() {
    let src = sentence("Meine▁ B eine▁ waren▁ bl ut über ström t .▁");
    let tgt = sentence("My▁ leg s▁ were▁ bloo dy .▁");
    unsafe {
        assert_eq!(wsimt_sentence_len(src), 10);
        assert_eq!(wsimt_sentence_word_count(src), 4);

        let mut token = ptr::null_mut();
        assert_eq!(wsimt_waitk_token(1, 10, 7, &mut token), WsimtStatus::Ok);
        assert_eq!(reads(token), vec![1, 2, 3, 4, 5, 6, 7]);

        let mut converted = ptr::null_mut();
        assert_eq!(wsimt_to_word_policy(token, src, tgt, &mut converted), WsimtStatus::Ok);
        assert_eq!(reads(converted), vec![1, 3, 3, 4, 10, 10, 10]);

        let mut word = ptr::null_mut();
        assert_eq!(wsimt_waitk_word(1, src, tgt, &mut word), WsimtStatus::Ok);
        assert_eq!(reads(word), reads(converted));

        let mut al = 0.0;
        assert_eq!(wsimt_word_average_lagging(word, src, tgt, &mut al), WsimtStatus::Ok);
        assert_eq!(al, 1.0);
        assert_eq!(wsimt_average_lagging(token, &mut al), WsimtStatus::Ok);
        assert!((al - (28.0 - 30.0) / 7.0).abs() < 1e-12);

        let mut g = 0;
        assert_eq!(wsimt_schedule_get(word, 5, &mut g), WsimtStatus::Ok);
        assert_eq!(g, 10);
        assert_eq!(wsimt_schedule_len(word), 7);

        wsimt_schedule_free(token);
        wsimt_schedule_free(converted);
        wsimt_schedule_free(word);
        wsimt_sentence_free(src);
        wsimt_sentence_free(tgt);
    }
}

#[test]
fn policy_strings_and_prefix_text() {
    let src = sentence("a b▁ c▁ d e▁");
    let tgt = sentence("x▁ y z▁");
    let spec = CString::new("convert:waitk-token:k=1").unwrap();
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(wsimt_policy_schedule(spec.as_ptr(), src, tgt, &mut s), WsimtStatus::Ok);
        assert_eq!(reads(s), vec![2, 2, 2]);
        wsimt_schedule_free(s);

        let mut text = ptr::null_mut();
        assert_eq!(wsimt_sentence_detokenize_prefix(src, 4, &mut text), WsimtStatus::Ok);
        assert_eq!(CStr::from_ptr(text).to_str().unwrap(), "ab c d");
        wsimt_string_free(text);

        let bad = CString::new("waitk-token:k=0").unwrap();
        assert_eq!(wsimt_policy_schedule(bad.as_ptr(), src, tgt, &mut s), WsimtStatus::InvalidParameter);
        assert!(last_error().contains("k must be"));

        wsimt_sentence_free(src);
        wsimt_sentence_free(tgt);
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut out = ptr::null_mut();
        let empty = CString::new("  ").unwrap();
        assert_eq!(
            wsimt_sentence_parse(empty.as_ptr(), WsimtMarkerConvention::Suffix, &mut out),
            WsimtStatus::EmptyInput
        );
        assert_eq!(
            wsimt_sentence_parse(ptr::null(), WsimtMarkerConvention::Suffix, &mut out),
            WsimtStatus::NullPointer
        );
        let bad_utf8 = [0xffu8, 0];
        assert_eq!(
            wsimt_sentence_parse(bad_utf8.as_ptr().cast(), WsimtMarkerConvention::Suffix, &mut out),
            WsimtStatus::InvalidUtf8
        );

        let mut sched = ptr::null_mut();
        let decreasing = [2usize, 1];
        assert_eq!(wsimt_schedule_new(decreasing.as_ptr(), 2, 3, &mut sched), WsimtStatus::InvalidSchedule);
        assert!(last_error().contains("invalid schedule"));

        let ok = [1usize, 3];
        assert_eq!(wsimt_schedule_new(ok.as_ptr(), 2, 3, &mut sched), WsimtStatus::Ok);
        let mut g = 0;
        assert_eq!(wsimt_schedule_get(sched, 3, &mut g), WsimtStatus::Index);
        let mut small = [0usize; 1];
        let mut len = 0;
        assert_eq!(
            wsimt_schedule_reads(sched, small.as_mut_ptr(), 1, &mut len),
            WsimtStatus::BufferTooSmall
        );
        assert_eq!(len, 2);
        wsimt_schedule_free(sched);

        let mut al = 0.0;
        assert_eq!(wsimt_average_lagging(ptr::null(), &mut al), WsimtStatus::NullPointer);
        assert_eq!(wsimt_sentence_len(ptr::null()), 0);
    }
}

#[test]
fn mask_buffer() {
    let src = sentence("a b▁ c▁");
    unsafe {
        let mut buf = [9u8; 9];
        assert_eq!(wsimt_intra_word_mask(src, buf.as_mut_ptr(), buf.len()), WsimtStatus::Ok);
        assert_eq!(buf, [1, 1, 0, 1, 1, 0, 1, 1, 1]);
        assert_eq!(wsimt_intra_word_mask(src, buf.as_mut_ptr(), 4), WsimtStatus::BufferTooSmall);
        let mut ends = [0usize; 4];
        let mut len = 0;
        assert_eq!(wsimt_sentence_word_ends(src, ends.as_mut_ptr(), 4, &mut len), WsimtStatus::Ok);
        assert_eq!(&ends[..len], &[2, 3]);
        wsimt_sentence_free(src);
    }
}

#[test]
fn corpus_json() {
    let source = CString::new("Meine▁ B eine▁ waren▁ bl ut über ström t .▁\nIr gen det was▁ lag▁ in▁ der▁ Luft .▁").unwrap();
    let hyp = CString::new("My▁ leg s▁ were▁ bloo dy .▁\nSome thing▁ lay▁ in▁ the▁ air .▁").unwrap();
    let policy = CString::new("waitk-word:k=1").unwrap();
    unsafe {
        let mut out = ptr::null_mut();
        let status = wsimt_evaluate_json(source.as_ptr(), hyp.as_ptr(), ptr::null(), ptr::null(), policy.as_ptr(), 2, &mut out);
        assert_eq!(status, WsimtStatus::Ok);
        let json: serde_json::Value = serde_json::from_str(CStr::from_ptr(out).to_str().unwrap()).unwrap();
        wsimt_string_free(out);
        assert_eq!(json["aggregate"]["mean_word_al"], 1.0);
        assert_eq!(json["rows"][1]["schedule"], serde_json::json!([4, 4, 5, 6, 7, 9, 9]));
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/wordsimt.h")).unwrap();
    for name in [
        "wsimt_sentence_parse",
        "wsimt_waitk_word",
        "wsimt_to_word_policy",
        "wsimt_word_average_lagging",
        "wsimt_intra_word_mask",
        "wsimt_evaluate_json",
        "typedef struct WsimtSentence WsimtSentence",
        "WSIMT_STATUS_VOCABULARY_ALIGNMENT = 18",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
