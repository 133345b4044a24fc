#ifndef CELL_H
#define CELL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CellStatus {
  CELL_STATUS_OK = 0,
  CELL_STATUS_NULL_POINTER = 1,
  CELL_STATUS_INVALID_ARGUMENT = 2,
  CELL_STATUS_BUFFER_TOO_SMALL = 3,
  CELL_STATUS_CONFIG_ERROR = 4,
  CELL_STATUS_RUN_ERROR = 5,
  CELL_STATUS_PANIC = 6,
} CellStatus;

typedef enum CellActionCode {
  CELL_ACTION_CODE_TRIGGER_CAMERA = 0,
  CELL_ACTION_CODE_RUN_DETECTION,
  CELL_ACTION_CODE_SELECT_OBJECT,
  CELL_ACTION_CODE_PLAN_GRASP,
  CELL_ACTION_CODE_MOVE_TO_GRASP,
  CELL_ACTION_CODE_CLOSE_GRIPPER,
  CELL_ACTION_CODE_READ_GRIPPER,
  CELL_ACTION_CODE_REOPEN_GRIPPER,
  CELL_ACTION_CODE_MOVE_TO_PLACE,
  CELL_ACTION_CODE_OPEN_GRIPPER,
  CELL_ACTION_CODE_UPDATE_LIST,
  CELL_ACTION_CODE_NOTIFY_HMI,
  CELL_ACTION_CODE_STOP_ALL,
  CELL_ACTION_CODE_CLEAR_FAULT,
  CELL_ACTION_CODE_LOG_IGNORED,
  /**
   * An event the automaton raised for itself; already processed.
   */
  CELL_ACTION_CODE_EMIT,
} CellActionCode;

/**
 * Controller states, in automaton order.
 */
typedef enum CellStateCode {
  CELL_STATE_CODE_IDLE = 0,
  CELL_STATE_CODE_AWAIT_REQUEST,
  CELL_STATE_CODE_CAPTURE_FRAME,
  CELL_STATE_CODE_DETECTING,
  CELL_STATE_CODE_SELECTING_OBJECT,
  CELL_STATE_CODE_PLANNING_GRASP,
  CELL_STATE_CODE_MOVING_TO_GRASP,
  CELL_STATE_CODE_CLOSING,
  CELL_STATE_CODE_VERIFYING_GRASP,
  CELL_STATE_CODE_TRANSPORTING,
  CELL_STATE_CODE_PLACING,
  CELL_STATE_CODE_UPDATING_LIST,
  CELL_STATE_CODE_REPORTING_UNAVAILABLE,
  CELL_STATE_CODE_DONE,
  CELL_STATE_CODE_HALTED,
} CellStateCode;

/**
 * Input events. `GripperClosed` reads the width argument (meters);
 * the timeout events carry their stage in the code.
 */
typedef enum CellEventCode {
  CELL_EVENT_CODE_REQUEST_RECEIVED = 0,
  CELL_EVENT_CODE_FRAME_READY,
  CELL_EVENT_CODE_DETECTIONS_READY,
  CELL_EVENT_CODE_NO_REQUESTED_OBJECT_DETECTED,
  CELL_EVENT_CODE_OBJECT_SELECTED,
  CELL_EVENT_CODE_GRASP_FOUND,
  CELL_EVENT_CODE_NO_GRASP_FOUND,
  CELL_EVENT_CODE_MOTION_DONE,
  CELL_EVENT_CODE_GRIPPER_CLOSED,
  CELL_EVENT_CODE_OBJECT_VERIFIED,
  CELL_EVENT_CODE_NOTHING_GRASPED,
  CELL_EVENT_CODE_PLACE_DONE,
  CELL_EVENT_CODE_LIST_FULFILLED,
  CELL_EVENT_CODE_LIST_OPEN,
  CELL_EVENT_CODE_E_STOP,
  CELL_EVENT_CODE_RESET,
  CELL_EVENT_CODE_TIMEOUT_CAPTURE,
  CELL_EVENT_CODE_TIMEOUT_DETECT,
  CELL_EVENT_CODE_TIMEOUT_PLAN,
  CELL_EVENT_CODE_TIMEOUT_HEARTBEAT,
} CellEventCode;

/**
 * Opaque controller handle.
 */
typedef struct CellController CellController;

/**
 * Scan executor settings; zero-initialize and call
 * `cell_scan_config_default` to start from the defaults.
 */
typedef struct CellScanConfig {
  uint64_t scan_ms;
  size_t queue_capacity;
  uint32_t n_frames;
  uint32_t max_timeouts;
  uint64_t stage_timeout_ms;
  double empty_closure;
} CellScanConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until
 * the next failing call on the same thread.
 */
const char *cell_last_error(void);

/**
 * # Safety
 * `out` must be NULL or point to writable memory for one config.
 */
enum CellStatus cell_scan_config_default(struct CellScanConfig *out);

/**
 * Create a controller. `cfg` may be NULL for the defaults.
 *
 * # Safety
 * `cfg` must be NULL or valid; `out` must be writable.
 */
enum CellStatus cell_controller_new(const struct CellScanConfig *cfg, struct CellController **out);

/**
 * # Safety
 * `ctrl` must come from `cell_controller_new` and not be used afterwards.
 * NULL is ignored.
 */
void cell_controller_free(struct CellController *ctrl);

/**
 * Queue an input event for the next scan. `arg` is the gripper width for
 * `CELL_EVENT_CODE_GRIPPER_CLOSED` and ignored otherwise.
 *
 * # Safety
 * `ctrl` must be a live handle.
 */
enum CellStatus cell_controller_push(struct CellController *ctrl, uint32_t event, double arg);

/**
 * Run one scan at `now_ms`. The actions are kept on the handle; up to
 * `cap` are copied to `actions` and the total goes to `n_out`. A short
 * buffer gives `CELL_STATUS_BUFFER_TOO_SMALL`; fetch them again with
 * `cell_controller_last_actions`.
 *
 * # Safety
 * `ctrl` live; `actions` valid for `cap` elements (may be NULL if `cap`
 * is 0); `n_out` writable.
 */
enum CellStatus cell_controller_scan(struct CellController *ctrl,
                                     double now_ms,
                                     enum CellActionCode *actions,
                                     size_t cap,
                                     size_t *n_out);

/**
 * Copy the actions of the most recent scan.
 *
 * # Safety
 * As for `cell_controller_scan`.
 */
enum CellStatus cell_controller_last_actions(const struct CellController *ctrl,
                                             enum CellActionCode *actions,
                                             size_t cap,
                                             size_t *n_out);

/**
 * # Safety
 * `ctrl` live; `out` writable.
 */
enum CellStatus cell_controller_state(const struct CellController *ctrl, enum CellStateCode *out);

/**
 * Selection bookkeeping the automaton reads: untried candidates remain,
 * and some requested class is still actionable.
 *
 * # Safety
 * `ctrl` live.
 */
enum CellStatus cell_controller_set_flags(struct CellController *ctrl,
                                          bool candidates_left,
                                          bool actionable_left);

/**
 * Static name of a state code, or NULL for an unknown code.
 */
const char *cell_state_name(uint32_t state);

/**
 * Run one headless episode. `config_toml` may be NULL or empty for the
 * defaults. On success `*report_out` holds the canonical JSON report;
 * release it with `cell_string_free`.
 *
 * # Safety
 * `config_toml` NULL or a NUL-terminated string; `report_out` writable.
 */
enum CellStatus cell_run_episode(const char *config_toml, uint64_t seed, char **report_out);

/**
 * # Safety
 * `s` must come from this library, or be NULL.
 */
void cell_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CELL_H */
