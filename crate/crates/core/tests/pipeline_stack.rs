mod common;

use common::{crop, gray_to_rgb, scene};
use mtb_align::{
    align_stack, cumulative_offsets, AlignConfig, GrayImage, Layout, RgbImage, ShiftOffset,
};

/// Stack whose consecutive frames are displaced by `steps`, each frame
/// rendered with its own brightness curve.
fn stack(w: usize, h: usize, steps: &[ShiftOffset], seed: u64) -> Vec<RgbImage> {
    let margin = 64;
    let big = scene(w + 2 * margin, h + 2 * margin, seed);
    cumulative_offsets(steps)
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let x0 = (margin as i32 - c.dx) as usize;
            let y0 = (margin as i32 - c.dy) as usize;
            let frame = crop(&big, x0, y0, w, h);
            let gain = 0.6 + 0.3 * i as f64;
            let toned = GrayImage::new(
                w,
                h,
                frame
                    .data()
                    .iter()
                    .map(|&v| (v as f64 * gain).round().min(255.0) as u8)
                    .collect(),
            )
            .unwrap();
            gray_to_rgb(&toned)
        })
        .collect()
}

fn config(workers: usize, layout: Layout) -> AlignConfig {
    AlignConfig {
        workers,
        layout,
        ..AlignConfig::default()
    }
}

#[test]
fn three_frame_chain_accumulates() {
    let steps = [ShiftOffset::new(3, 2), ShiftOffset::new(-1, 4)];
    let images = stack(256, 224, &steps, 17);
    let (aligned, a) = align_stack(&images, config(2, Layout::WordPacked)).unwrap();
    assert_eq!(
        a.cumulative,
        vec![
            ShiftOffset::ZERO,
            ShiftOffset::new(3, 2),
            ShiftOffset::new(2, 6)
        ]
    );
    assert_eq!(a.pairwise.len(), 2);
    assert_eq!(aligned[0], images[0]);

    // Frame 2 moved back by (2, 6) lines up with frame 0 wherever it has content.
    let back = &aligned[2];
    let ref0 = scene(256 + 128, 224 + 128, 17);
    for y in 0..224 - 6 {
        for x in 0..256 - 2 {
            let v = ref0.pixel(64 + x, 64 + y) as f64 * 1.2;
            assert_eq!(back.pixel(x, y)[0], v.round().min(255.0) as u8);
        }
    }
    for y in 224 - 6..224 {
        assert_eq!(back.pixel(0, y), [0, 0, 0]);
    }
}

#[test]
fn five_frames_take_four_searches() {
    let steps = [
        ShiftOffset::new(1, 0),
        ShiftOffset::new(0, -2),
        ShiftOffset::new(-3, 1),
        ShiftOffset::new(2, 2),
    ];
    let images = stack(192, 160, &steps, 2);
    let (_, a) = align_stack(&images, config(3, Layout::ByteMap)).unwrap();
    assert_eq!(a.image_count, 5);
    assert_eq!(a.pairwise.len(), 4);
    assert_eq!(a.counters.find_offset_calls, 4);
    assert_eq!(a.counters.pyramids_built, 5);
    assert_eq!(a.counters.mtb_pyramids_built, 5);
    assert_eq!(a.cumulative, cumulative_offsets(&steps));
}

#[test]
fn results_do_not_depend_on_workers_or_layout() {
    let steps = [
        ShiftOffset::new(-6, 3),
        ShiftOffset::new(4, 4),
        ShiftOffset::new(0, -7),
    ];
    let images = stack(300, 200, &steps, 99);
    let (ref_images, ref_align) = align_stack(&images, config(1, Layout::WordPacked)).unwrap();
    for layout in Layout::ALL {
        for workers in [1, 2, 8] {
            let (out, a) = align_stack(&images, config(workers, layout)).unwrap();
            assert_eq!(out, ref_images, "{layout} x{workers}");
            assert_eq!(a.pairwise, ref_align.pairwise, "{layout} x{workers}");
            assert_eq!(a.cumulative, ref_align.cumulative);
        }
    }
}

#[test]
fn stage_times_account_for_the_total() {
    let images = stack(512, 384, &[ShiftOffset::new(2, 2)], 1);
    let (_, a) = align_stack(&images, config(1, Layout::WordPacked)).unwrap();
    let t = a.timings;
    assert!(t.total > 0.0);
    assert!(t.stage_sum() <= t.total * 1.0001);
    assert!(t.stage_sum() >= t.total * 0.95, "{t:?}");
}
