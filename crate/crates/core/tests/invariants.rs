use cell_core::bbox::BoundingBox;
use cell_core::bus::message::{GripperCommand, GripperStatus, MoveTarget, RobotMove};
use cell_core::bus::{decode_all, encode_frame, read_dump, BusDump, Message};
use cell_core::camera::CameraIntrinsics;
use cell_core::controller::{update_request, Action, CellEvent, CellState, Controller, PickRequest, RequestUpdate, ScanConfig};
use cell_core::depth::DepthFrame;
use cell_core::perception::{inpaint, pairwise_overlap_score, rank_candidates, Detection};
use proptest::prelude::*;
use std::collections::BTreeMap;

fn bbox() -> impl Strategy<Value = BoundingBox> {
    (0.0..300.0f64, 0.0..200.0f64, 1.0..80.0f64, 1.0..80.0f64).prop_map(|(u, v, w, h)| BoundingBox::new(u, v, u + w, v + h))
}

fn detections() -> impl Strategy<Value = Vec<Detection>> {
    prop::collection::vec((bbox(), 0..3usize, 0.05..1.0f64), 0..10).prop_map(|v| {
        v.into_iter()
            .map(|(b, c, conf)| Detection {
                bbox: b,
                class_label: ["a", "b", "c"][c].into(),
                confidence: conf,
                sources: vec![],
            })
            .collect()
    })
}

fn frame() -> impl Strategy<Value = DepthFrame> {
    (1usize..24, 1usize..16)
        .prop_flat_map(|(w, h)| {
            (
                Just((w, h)),
                prop::collection::vec(0.2..2.0f64, w * h),
                prop::collection::vec(prop::bool::weighted(0.6), w * h),
            )
        })
        .prop_filter("one valid pixel", |(_, _, valid)| valid.iter().any(|v| *v))
        .prop_map(|((w, h), data, valid)| {
            let cam = CameraIntrinsics {
                width: w,
                height: h,
                cx: w as f64 / 2.0,
                cy: h as f64 / 2.0,
                ..Default::default()
            };
            DepthFrame::from_parts(cam, data, valid).unwrap()
        })
}

fn event() -> impl Strategy<Value = CellEvent> {
    let samples = CellEvent::samples();
    (0..samples.len(), 0.0..0.09f64).prop_map(move |(i, w)| match samples[i] {
        CellEvent::GripperClosed { .. } => CellEvent::GripperClosed { width: w },
        e => e,
    })
}

proptest! {
    #[test]
    fn iou_is_symmetric_and_bounded(a in bbox(), b in bbox()) {
        let (x, y) = (a.iou(&b), b.iou(&a));
        prop_assert_eq!(x, y);
        prop_assert!((0.0..=1.0).contains(&x));
        prop_assert_eq!(a.iou(&a), 1.0);
    }

    #[test]
    fn ranking_is_a_sorted_permutation_of_requested(dets in detections(), na in 0..2u32, nb in 0..2u32) {
        let remaining = BTreeMap::from([("a".to_string(), na), ("b".to_string(), nb)]);
        let ranked = rank_candidates(&dets, &remaining);
        let mut expect: Vec<usize> = (0..dets.len())
            .filter(|i| remaining.get(&dets[*i].class_label).is_some_and(|n| *n > 0))
            .collect();
        let mut got = ranked.clone();
        got.sort_unstable();
        expect.sort_unstable();
        prop_assert_eq!(got, expect);
        let boxes: Vec<BoundingBox> = dets.iter().map(|d| d.bbox).collect();
        for w in ranked.windows(2) {
            prop_assert!(pairwise_overlap_score(&boxes, w[0]) <= pairwise_overlap_score(&boxes, w[1]));
        }
    }

    #[test]
    fn inpaint_fills_bounded_and_idempotent(f in frame()) {
        let out = inpaint(&f).unwrap();
        prop_assert_eq!(out.hole_count(), 0);
        let (lo, hi) = f.valid_range().unwrap();
        prop_assert!(out.data.iter().all(|d| *d >= lo && *d <= hi));
        for i in 0..f.data.len() {
            if f.valid[i] {
                prop_assert_eq!(f.data[i].to_bits(), out.data[i].to_bits());
            }
        }
        prop_assert_eq!(inpaint(&out).unwrap(), out);
    }

    #[test]
    fn robot_move_round_trips(seq: u32, id: u32, x: f32, y: f32, z: f32, yaw: f32, t in 0..3usize) {
        let m = Message::RobotMove(RobotMove {
            move_id: id,
            target: [MoveTarget::Grasp, MoveTarget::Place, MoveTarget::Home][t],
            x, y, z, yaw,
        });
        match encode_frame(seq, &m) {
            Ok(bytes) => {
                let (frames, err) = decode_all(&bytes);
                prop_assert!(err.is_none());
                prop_assert_eq!(frames.len(), 1);
                prop_assert_eq!(frames[0].seq, seq);
                prop_assert_eq!(&frames[0].msg, &m);
            }
            // only non-finite floats are refused
            Err(_) => prop_assert!(![x, y, z, yaw].iter().all(|f| f.is_finite())),
        }
    }

    #[test]
    fn dump_concatenation_preserves_frames(widths in prop::collection::vec(0.0..0.09f32, 0..20)) {
        let mut dump = BusDump::new();
        for (i, w) in widths.iter().enumerate() {
            let m = Message::GripperStatus(GripperStatus { cmd_id: i as u32, command: GripperCommand::Read, width: *w });
            dump.record(i as u64 * 3, &encode_frame(i as u32, &m).unwrap());
        }
        let back = read_dump(dump.as_bytes()).unwrap();
        prop_assert_eq!(back.len(), widths.len());
        for (i, r) in back.iter().enumerate() {
            prop_assert_eq!(r.t_ms, i as u64 * 3);
            prop_assert_eq!(r.frame.seq, i as u32);
        }
    }

    #[test]
    fn estop_halts_in_one_scan_after_any_history(events in prop::collection::vec((event(), any::<bool>(), any::<bool>()), 0..60)) {
        let mut c = Controller::new(ScanConfig::default());
        for (i, (e, a, b)) in events.iter().enumerate() {
            c.set_flags(*a, *b);
            c.push(*e);
            c.scan(i as f64 * 10.0);
        }
        let before = c.state();
        c.push(CellEvent::EStop);
        let out = c.scan(1e6);
        prop_assert_eq!(c.state(), CellState::Halted);
        if before != CellState::Halted {
            prop_assert_eq!(out, vec![Action::StopAll]);
        }
        // nothing but Reset leaves Halted
        for e in CellEvent::samples().into_iter().filter(|e| *e != CellEvent::Reset) {
            c.push(e);
            c.scan(2e6);
            prop_assert_eq!(c.state(), CellState::Halted);
        }
    }

    #[test]
    fn request_counts_never_grow(items in prop::collection::btree_map("[a-c]", 0..4u32, 0..3),
                                 updates in prop::collection::vec(("[a-d]", any::<bool>()), 0..20)) {
        let mut req = PickRequest::new(items.clone());
        for (class, verified) in updates {
            let before = req.total();
            let u = if verified { RequestUpdate::Verified(class) } else { RequestUpdate::Unavailable(class) };
            let (status, _) = update_request(&mut req, &u);
            prop_assert!(req.total() <= before);
            prop_assert_eq!(status == cell_core::controller::ListStatus::ListFulfilled, req.is_fulfilled());
            prop_assert!(req.remaining.keys().eq(items.keys()));
        }
    }
}
