use cell_ffi::*;
use std::ffi::{CStr, CString};
use std::ptr;

fn last_error() -> String {
    let p = cell_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn new_controller() -> *mut CellController {
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { cell_controller_new(ptr::null(), &mut c) }, CellStatus::Ok);
    assert!(!c.is_null());
    c
}

fn scan(c: *mut CellController, t: f64) -> Vec<CellActionCode> {
    let mut buf = [CellActionCode::LogIgnored; 8];
    let mut n = 0;
    assert_eq!(unsafe { cell_controller_scan(c, t, buf.as_mut_ptr(), buf.len(), &mut n) }, CellStatus::Ok);
    buf[..n].to_vec()
}

fn state(c: *const CellController) -> CellStateCode {
    let mut s = CellStateCode::Idle;
    assert_eq!(unsafe { cell_controller_state(c, &mut s) }, CellStatus::Ok);
    s
}

#[test]
fn null_handles_are_rejected() {
    unsafe {
        assert_eq!(cell_controller_new(ptr::null(), ptr::null_mut()), CellStatus::NullPointer);
        assert_eq!(cell_controller_push(ptr::null_mut(), 0, 0.0), CellStatus::NullPointer);
        let mut n = 0;
        assert_eq!(cell_controller_scan(ptr::null_mut(), 0.0, ptr::null_mut(), 0, &mut n), CellStatus::NullPointer);
        assert_eq!(cell_run_episode(ptr::null(), 0, ptr::null_mut()), CellStatus::NullPointer);
        cell_controller_free(ptr::null_mut());
        cell_string_free(ptr::null_mut());
    }
    assert!(last_error().contains("null"));
}

#[test]
fn request_frame_and_estop() {
    let c = new_controller();
    unsafe {
        assert_eq!(cell_controller_push(c, CellEventCode::RequestReceived as u32, 0.0), CellStatus::Ok);
        assert_eq!(scan(c, 0.0), vec![CellActionCode::TriggerCamera]);
        assert_eq!(state(c), CellStateCode::CaptureFrame);
        cell_controller_push(c, CellEventCode::FrameReady as u32, 0.0);
        cell_controller_push(c, CellEventCode::EStop as u32, 0.0);
        assert_eq!(scan(c, 10.0)[0], CellActionCode::StopAll);
        assert_eq!(state(c), CellStateCode::Halted);
        let name = CStr::from_ptr(cell_state_name(state(c) as u32));
        assert_eq!(name.to_str().unwrap(), "Halted");
        cell_controller_free(c);
    }
}

#[test]
fn short_buffer_reports_the_count() {
    let c = new_controller();
    unsafe {
        cell_controller_set_flags(c, false, true);
        cell_controller_push(c, CellEventCode::RequestReceived as u32, 0.0);
        let mut n = 0;
        assert_eq!(cell_controller_scan(c, 0.0, ptr::null_mut(), 0, &mut n), CellStatus::BufferTooSmall);
        assert_eq!(n, 1);
        let mut buf = [CellActionCode::LogIgnored; 1];
        assert_eq!(cell_controller_last_actions(c, buf.as_mut_ptr(), 1, &mut n), CellStatus::Ok);
        assert_eq!(buf[0], CellActionCode::TriggerCamera);
        cell_controller_free(c);
    }
}

#[test]
fn gripper_width_decides_verification() {
    let c = new_controller();
    let seq = [
        CellEventCode::RequestReceived,
        CellEventCode::FrameReady,
        CellEventCode::DetectionsReady,
        CellEventCode::ObjectSelected,
        CellEventCode::GraspFound,
        CellEventCode::MotionDone,
        CellEventCode::MotionDone,
    ];
    unsafe {
        cell_controller_set_flags(c, true, true);
        for (i, e) in seq.iter().enumerate() {
            cell_controller_push(c, *e as u32, 0.0);
            scan(c, i as f64 * 10.0);
        }
        assert_eq!(state(c), CellStateCode::VerifyingGrasp);
        assert_eq!(
            cell_controller_push(c, CellEventCode::GripperClosed as u32, f64::NAN),
            CellStatus::InvalidArgument
        );
        cell_controller_push(c, CellEventCode::GripperClosed as u32, 0.04);
        let out = scan(c, 100.0);
        assert_eq!(out, vec![CellActionCode::MoveToPlace]);
        assert_eq!(state(c), CellStateCode::Transporting);
        cell_controller_free(c);
    }
}

#[test]
fn bad_arguments_are_invalid() {
    unsafe {
        let c = new_controller();
        assert_eq!(cell_controller_push(c, 999, 0.0), CellStatus::InvalidArgument);
        assert!(last_error().contains("999"));
        let mut n = 0;
        assert_eq!(cell_controller_scan(c, f64::INFINITY, ptr::null_mut(), 0, &mut n), CellStatus::InvalidArgument);
        cell_controller_free(c);

        let mut cfg = std::mem::zeroed::<CellScanConfig>();
        assert_eq!(cell_scan_config_default(&mut cfg), CellStatus::Ok);
        assert_eq!(cfg.n_frames, 3);
        cfg.scan_ms = 0;
        let mut out = ptr::null_mut();
        assert_eq!(cell_controller_new(&cfg, &mut out), CellStatus::InvalidArgument);
        assert!(out.is_null());
    }
    assert!(cell_state_name(15).is_null());
}

#[test]
fn episode_report_is_canonical_json() {
    let cfg = CString::new("[scene]\ncount = 2\n").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { cell_run_episode(cfg.as_ptr(), 4, &mut out) }, CellStatus::Ok);
    let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_owned();
    unsafe { cell_string_free(out) };
    assert!(text.starts_with('{') && text.contains("\"seed\":4"));
    assert!(text.contains("\"stop_reason\""));

    let bad = CString::new("[scene]\nbogus = 1\n").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { cell_run_episode(bad.as_ptr(), 0, &mut out) }, CellStatus::ConfigError);
    assert!(out.is_null());
    assert!(last_error().contains("bogus"), "{}", last_error());
}
