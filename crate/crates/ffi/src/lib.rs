//! C ABI over the cell controller and the headless episode runner.
//!
//! Handles are opaque; every call returns a `CellStatus`. The message for
//! the last failure on the calling thread is available through
//! `cell_last_error`.

use cell_core::controller::{Action, CellEvent, CellState, Controller, ScanConfig, Stage};
use cell_core::harness::{run_episode, RunConfig};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    ConfigError = 4,
    RunError = 5,
    Panic = 6,
}

/// Controller states, in automaton order.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellStateCode {
    Idle = 0,
    AwaitRequest,
    CaptureFrame,
    Detecting,
    SelectingObject,
    PlanningGrasp,
    MovingToGrasp,
    Closing,
    VerifyingGrasp,
    Transporting,
    Placing,
    UpdatingList,
    ReportingUnavailable,
    Done,
    Halted,
}

/// Input events. `GripperClosed` reads the width argument (meters);
/// the timeout events carry their stage in the code.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellEventCode {
    RequestReceived = 0,
    FrameReady,
    DetectionsReady,
    NoRequestedObjectDetected,
    ObjectSelected,
    GraspFound,
    NoGraspFound,
    MotionDone,
    GripperClosed,
    ObjectVerified,
    NothingGrasped,
    PlaceDone,
    ListFulfilled,
    ListOpen,
    EStop,
    Reset,
    TimeoutCapture,
    TimeoutDetect,
    TimeoutPlan,
    TimeoutHeartbeat,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellActionCode {
    TriggerCamera = 0,
    RunDetection,
    SelectObject,
    PlanGrasp,
    MoveToGrasp,
    CloseGripper,
    ReadGripper,
    ReopenGripper,
    MoveToPlace,
    OpenGripper,
    UpdateList,
    NotifyHmi,
    StopAll,
    ClearFault,
    LogIgnored,
    /// An event the automaton raised for itself; already processed.
    Emit,
}

/// Scan executor settings; zero-initialize and call
/// `cell_scan_config_default` to start from the defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CellScanConfig {
    pub scan_ms: u64,
    pub queue_capacity: usize,
    pub n_frames: u32,
    pub max_timeouts: u32,
    pub stage_timeout_ms: u64,
    pub empty_closure: f64,
}

/// Opaque controller handle.
pub struct CellController {
    inner: Controller,
    last: Vec<CellActionCode>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).expect("nul bytes replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(s));
}

fn guard(f: impl FnOnce() -> CellStatus) -> CellStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            CellStatus::Panic
        }
    }
}

fn state_code(s: CellState) -> CellStateCode {
    let i = CellState::ALL.iter().position(|x| *x == s).expect("listed");
    STATE_CODES[i]
}

const STATE_CODES: [CellStateCode; 15] = [
    CellStateCode::Idle,
    CellStateCode::AwaitRequest,
    CellStateCode::CaptureFrame,
    CellStateCode::Detecting,
    CellStateCode::SelectingObject,
    CellStateCode::PlanningGrasp,
    CellStateCode::MovingToGrasp,
    CellStateCode::Closing,
    CellStateCode::VerifyingGrasp,
    CellStateCode::Transporting,
    CellStateCode::Placing,
    CellStateCode::UpdatingList,
    CellStateCode::ReportingUnavailable,
    CellStateCode::Done,
    CellStateCode::Halted,
];

fn event_from(code: CellEventCode, arg: f64) -> CellEvent {
    use CellEventCode as C;
    match code {
        C::RequestReceived => CellEvent::RequestReceived,
        C::FrameReady => CellEvent::FrameReady,
        C::DetectionsReady => CellEvent::DetectionsReady,
        C::NoRequestedObjectDetected => CellEvent::NoRequestedObjectDetected,
        C::ObjectSelected => CellEvent::ObjectSelected,
        C::GraspFound => CellEvent::GraspFound,
        C::NoGraspFound => CellEvent::NoGraspFound,
        C::MotionDone => CellEvent::MotionDone,
        C::GripperClosed => CellEvent::GripperClosed { width: arg },
        C::ObjectVerified => CellEvent::ObjectVerified,
        C::NothingGrasped => CellEvent::NothingGrasped,
        C::PlaceDone => CellEvent::PlaceDone,
        C::ListFulfilled => CellEvent::ListFulfilled,
        C::ListOpen => CellEvent::ListOpen,
        C::EStop => CellEvent::EStop,
        C::Reset => CellEvent::Reset,
        C::TimeoutCapture => CellEvent::Timeout(Stage::Capture),
        C::TimeoutDetect => CellEvent::Timeout(Stage::Detect),
        C::TimeoutPlan => CellEvent::Timeout(Stage::Plan),
        C::TimeoutHeartbeat => CellEvent::Timeout(Stage::Heartbeat),
    }
}

fn event_code_from_u32(v: u32) -> Option<CellEventCode> {
    use CellEventCode as C;
    const ALL: [CellEventCode; 20] = [
        C::RequestReceived,
        C::FrameReady,
        C::DetectionsReady,
        C::NoRequestedObjectDetected,
        C::ObjectSelected,
        C::GraspFound,
        C::NoGraspFound,
        C::MotionDone,
        C::GripperClosed,
        C::ObjectVerified,
        C::NothingGrasped,
        C::PlaceDone,
        C::ListFulfilled,
        C::ListOpen,
        C::EStop,
        C::Reset,
        C::TimeoutCapture,
        C::TimeoutDetect,
        C::TimeoutPlan,
        C::TimeoutHeartbeat,
    ];
    ALL.get(v as usize).copied()
}

fn action_code(a: &Action) -> CellActionCode {
    use CellActionCode as C;
    match a {
        Action::TriggerCamera => C::TriggerCamera,
        Action::RunDetection => C::RunDetection,
        Action::SelectObject => C::SelectObject,
        Action::PlanGrasp => C::PlanGrasp,
        Action::MoveToGrasp => C::MoveToGrasp,
        Action::CloseGripper => C::CloseGripper,
        Action::ReadGripper => C::ReadGripper,
        Action::ReopenGripper => C::ReopenGripper,
        Action::MoveToPlace => C::MoveToPlace,
        Action::OpenGripper => C::OpenGripper,
        Action::UpdateList => C::UpdateList,
        Action::NotifyHmi => C::NotifyHmi,
        Action::StopAll => C::StopAll,
        Action::ClearFault => C::ClearFault,
        Action::LogIgnored => C::LogIgnored,
        Action::Emit(_) => C::Emit,
    }
}

impl From<ScanConfig> for CellScanConfig {
    fn from(c: ScanConfig) -> Self {
        Self {
            scan_ms: c.scan_ms,
            queue_capacity: c.queue_capacity,
            n_frames: c.n_frames,
            max_timeouts: c.max_timeouts,
            stage_timeout_ms: c.stage_timeout_ms,
            empty_closure: c.empty_closure,
        }
    }
}

impl From<CellScanConfig> for ScanConfig {
    fn from(c: CellScanConfig) -> Self {
        Self {
            scan_ms: c.scan_ms,
            queue_capacity: c.queue_capacity,
            n_frames: c.n_frames,
            max_timeouts: c.max_timeouts,
            stage_timeout_ms: c.stage_timeout_ms,
            empty_closure: c.empty_closure,
        }
    }
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cell_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `out` must be NULL or point to writable memory for one config.
#[no_mangle]
pub unsafe extern "C" fn cell_scan_config_default(out: *mut CellScanConfig) -> CellStatus {
    if out.is_null() {
        set_error("out is null");
        return CellStatus::NullPointer;
    }
    out.write(ScanConfig::default().into());
    CellStatus::Ok
}

/// Create a controller. `cfg` may be NULL for the defaults.
///
/// # Safety
/// `cfg` must be NULL or valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cell_controller_new(cfg: *const CellScanConfig, out: *mut *mut CellController) -> CellStatus {
    guard(|| {
        if out.is_null() {
            set_error("out is null");
            return CellStatus::NullPointer;
        }
        let cfg: ScanConfig = if cfg.is_null() { ScanConfig::default() } else { (*cfg).into() };
        if let Err(e) = cfg.validate() {
            set_error(e);
            return CellStatus::InvalidArgument;
        }
        out.write(Box::into_raw(Box::new(CellController {
            inner: Controller::new(cfg),
            last: Vec::new(),
        })));
        CellStatus::Ok
    })
}

/// # Safety
/// `ctrl` must come from `cell_controller_new` and not be used afterwards.
/// NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn cell_controller_free(ctrl: *mut CellController) {
    if !ctrl.is_null() {
        drop(Box::from_raw(ctrl));
    }
}

/// Queue an input event for the next scan. `arg` is the gripper width for
/// `CELL_EVENT_CODE_GRIPPER_CLOSED` and ignored otherwise.
///
/// # Safety
/// `ctrl` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cell_controller_push(ctrl: *mut CellController, event: u32, arg: f64) -> CellStatus {
    guard(|| {
        let Some(c) = ctrl.as_mut() else {
            set_error("ctrl is null");
            return CellStatus::NullPointer;
        };
        let Some(code) = event_code_from_u32(event) else {
            set_error(format!("unknown event code {event}"));
            return CellStatus::InvalidArgument;
        };
        if code == CellEventCode::GripperClosed && !arg.is_finite() {
            set_error("gripper width must be finite");
            return CellStatus::InvalidArgument;
        }
        c.inner.push(event_from(code, arg));
        CellStatus::Ok
    })
}

/// Run one scan at `now_ms`. The actions are kept on the handle; up to
/// `cap` are copied to `actions` and the total goes to `n_out`. A short
/// buffer gives `CELL_STATUS_BUFFER_TOO_SMALL`; fetch them again with
/// `cell_controller_last_actions`.
///
/// # Safety
/// `ctrl` live; `actions` valid for `cap` elements (may be NULL if `cap`
/// is 0); `n_out` writable.
#[no_mangle]
pub unsafe extern "C" fn cell_controller_scan(
    ctrl: *mut CellController,
    now_ms: f64,
    actions: *mut CellActionCode,
    cap: usize,
    n_out: *mut usize,
) -> CellStatus {
    guard(|| {
        let Some(c) = ctrl.as_mut() else {
            set_error("ctrl is null");
            return CellStatus::NullPointer;
        };
        if !now_ms.is_finite() {
            set_error("now_ms must be finite");
            return CellStatus::InvalidArgument;
        }
        c.last = c.inner.scan(now_ms).iter().map(action_code).collect();
        copy_actions(c, actions, cap, n_out)
    })
}

/// Copy the actions of the most recent scan.
///
/// # Safety
/// As for `cell_controller_scan`.
#[no_mangle]
pub unsafe extern "C" fn cell_controller_last_actions(
    ctrl: *const CellController,
    actions: *mut CellActionCode,
    cap: usize,
    n_out: *mut usize,
) -> CellStatus {
    guard(|| {
        let Some(c) = ctrl.as_ref() else {
            set_error("ctrl is null");
            return CellStatus::NullPointer;
        };
        copy_actions(c, actions, cap, n_out)
    })
}

unsafe fn copy_actions(c: &CellController, actions: *mut CellActionCode, cap: usize, n_out: *mut usize) -> CellStatus {
    if n_out.is_null() || (actions.is_null() && cap > 0) {
        set_error("output pointer is null");
        return CellStatus::NullPointer;
    }
    n_out.write(c.last.len());
    let n = c.last.len().min(cap);
    if n > 0 {
        ptr::copy_nonoverlapping(c.last.as_ptr(), actions, n);
    }
    if c.last.len() > cap {
        set_error(format!("{} actions, buffer holds {cap}", c.last.len()));
        return CellStatus::BufferTooSmall;
    }
    CellStatus::Ok
}

/// # Safety
/// `ctrl` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cell_controller_state(ctrl: *const CellController, out: *mut CellStateCode) -> CellStatus {
    guard(|| {
        let Some(c) = ctrl.as_ref() else {
            set_error("ctrl is null");
            return CellStatus::NullPointer;
        };
        if out.is_null() {
            set_error("out is null");
            return CellStatus::NullPointer;
        }
        out.write(state_code(c.inner.state()));
        CellStatus::Ok
    })
}

/// Selection bookkeeping the automaton reads: untried candidates remain,
/// and some requested class is still actionable.
///
/// # Safety
/// `ctrl` live.
#[no_mangle]
pub unsafe extern "C" fn cell_controller_set_flags(
    ctrl: *mut CellController,
    candidates_left: bool,
    actionable_left: bool,
) -> CellStatus {
    guard(|| {
        let Some(c) = ctrl.as_mut() else {
            set_error("ctrl is null");
            return CellStatus::NullPointer;
        };
        c.inner.set_flags(candidates_left, actionable_left);
        CellStatus::Ok
    })
}

/// Static name of a state code, or NULL for an unknown code.
#[no_mangle]
pub extern "C" fn cell_state_name(state: u32) -> *const c_char {
    const NAMES: [&CStr; 15] = [
        c"Idle",
        c"AwaitRequest",
        c"CaptureFrame",
        c"Detecting",
        c"SelectingObject",
        c"PlanningGrasp",
        c"MovingToGrasp",
        c"Closing",
        c"VerifyingGrasp",
        c"Transporting",
        c"Placing",
        c"UpdatingList",
        c"ReportingUnavailable",
        c"Done",
        c"Halted",
    ];
    NAMES.get(state as usize).map_or(ptr::null(), |s| s.as_ptr())
}

/// Run one headless episode. `config_toml` may be NULL or empty for the
/// defaults. On success `*report_out` holds the canonical JSON report;
/// release it with `cell_string_free`.
///
/// # Safety
/// `config_toml` NULL or a NUL-terminated string; `report_out` writable.
#[no_mangle]
pub unsafe extern "C" fn cell_run_episode(
    config_toml: *const c_char,
    seed: u64,
    report_out: *mut *mut c_char,
) -> CellStatus {
    guard(|| {
        if report_out.is_null() {
            set_error("report_out is null");
            return CellStatus::NullPointer;
        }
        let text = if config_toml.is_null() {
            ""
        } else {
            match CStr::from_ptr(config_toml).to_str() {
                Ok(s) => s,
                Err(_) => {
                    set_error("config is not UTF-8");
                    return CellStatus::InvalidArgument;
                }
            }
        };
        let cfg = match RunConfig::from_toml_str(text) {
            Ok(c) => c,
            Err(e) => {
                set_error(e.to_string());
                return CellStatus::ConfigError;
            }
        };
        match run_episode(&cfg, seed) {
            Ok(r) => {
                let json = CString::new(r.to_canonical_json()).expect("JSON has no NUL");
                report_out.write(json.into_raw());
                CellStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                CellStatus::RunError
            }
        }
    })
}

/// # Safety
/// `s` must come from this library, or be NULL.
#[no_mangle]
pub unsafe extern "C" fn cell_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
