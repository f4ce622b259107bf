mod common;

use common::{scalar_median, scalar_shift, scalar_threshold};
use mtb_align::{
    build_mtb_pyramid, build_pyramid, downsample_half, histogram, make_exclusion, make_mtb,
    shift_gray, shift_rgb, to_grayscale, GrayImage, Layout, MtbPair, RgbImage, ShiftOffset,
};
use proptest::prelude::*;

fn gray(max_w: usize, max_h: usize) -> impl Strategy<Value = GrayImage> {
    (1..=max_w, 1..=max_h).prop_flat_map(|(w, h)| {
        prop::collection::vec(any::<u8>(), w * h)
            .prop_map(move |d| GrayImage::new(w, h, d).unwrap())
    })
}

fn rgb(max_w: usize, max_h: usize) -> impl Strategy<Value = RgbImage> {
    (1..=max_w, 1..=max_h).prop_flat_map(|(w, h)| {
        prop::collection::vec(any::<u8>(), w * h * 3)
            .prop_map(move |d| RgbImage::new(w, h, d).unwrap())
    })
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn grayscale_matches_weighted_sum(img in rgb(20, 20)) {
        let g = to_grayscale(&img);
        prop_assert_eq!(g.dimensions(), img.dimensions());
        for (px, &v) in img.data().chunks(3).zip(g.data()) {
            let exact = (54.0 * px[0] as f64 + 183.0 * px[1] as f64 + 19.0 * px[2] as f64) / 256.0;
            prop_assert_eq!(v as f64, exact.floor());
        }
    }

    #[test]
    fn shift_matches_oracle_and_round_trips(
        img in gray(24, 24),
        sx in -12i32..=12,
        sy in -12i32..=12,
    ) {
        let (w, h) = img.dimensions();
        let lim = (w.min(h) / 2) as i32;
        let o = ShiftOffset::new(sx.clamp(-lim, lim), sy.clamp(-lim, lim));
        let once = shift_gray(&img, o, 0);
        prop_assert_eq!(&once, &scalar_shift(&img, o, 0));
        let back = shift_gray(&once, -o, 0);
        prop_assert_eq!(back.dimensions(), img.dimensions());
        for y in 0..h {
            for x in 0..w {
                let fx = x as i64 + o.dx as i64;
                let fy = y as i64 + o.dy as i64;
                let survived = fx >= 0 && fy >= 0 && fx < w as i64 && fy < h as i64;
                let expected = if survived { img.pixel(x, y) } else { 0 };
                prop_assert_eq!(back.pixel(x, y), expected);
            }
        }
    }

    #[test]
    fn rgb_shift_moves_every_channel(img in rgb(12, 12), dx in -13i32..=13, dy in -13i32..=13) {
        let o = ShiftOffset::new(dx, dy);
        let out = shift_rgb(&img, o, [1, 2, 3]);
        let (w, h) = img.dimensions();
        for y in 0..h {
            for x in 0..w {
                let sx = x as i64 - dx as i64;
                let sy = y as i64 - dy as i64;
                let expected = if sx >= 0 && sy >= 0 && sx < w as i64 && sy < h as i64 {
                    img.pixel(sx as usize, sy as usize)
                } else {
                    [1, 2, 3]
                };
                prop_assert_eq!(out.pixel(x, y), expected);
            }
        }
    }

    #[test]
    fn downsampling_preserves_mean(
        half_w in 1usize..=20,
        half_h in 1usize..=20,
        seed in any::<u64>(),
    ) {
        let img = common::scene(half_w * 2 + 6, half_h * 2 + 6, seed);
        let img = common::crop(&img, 0, 0, half_w * 2, half_h * 2);
        let mean = |g: &GrayImage| g.data().iter().map(|&v| v as f64).sum::<f64>() / g.data().len() as f64;
        let small = downsample_half(&img).unwrap();
        prop_assert!((mean(&small) - mean(&img)).abs() <= 1.0);
    }

    #[test]
    fn histogram_and_median_match_scalar(img in gray(40, 40)) {
        let h = histogram(&img);
        let mut bins = [0u64; 256];
        for &p in img.data() {
            bins[p as usize] += 1;
        }
        prop_assert_eq!(h.bins(), &bins);
        prop_assert_eq!(h.total(), img.data().len() as u64);
        let m = h.median().unwrap();
        prop_assert_eq!(m, scalar_median(&img));

        let n = img.data().len();
        let at_most = img.data().iter().filter(|&&p| p <= m).count();
        let below = img.data().iter().filter(|&&p| p < m).count();
        prop_assert!(2 * at_most >= n);
        prop_assert!(2 * below < n);
    }

    #[test]
    fn thresholds_match_scalar(img in gray(70, 12), tol in 0u8..=12) {
        let (mtb, eb, m) = scalar_threshold(&img, tol);
        for layout in Layout::ALL {
            let pair = MtbPair::from_gray(&img, tol, layout);
            prop_assert_eq!(pair.median, m);
            prop_assert_eq!(pair.mtb.to_bools(), mtb.bits.clone());
            prop_assert_eq!(pair.exclusion.to_bools(), eb.bits.clone());
            prop_assert!(2 * pair.mtb.count_ones() <= img.data().len() as u64);
        }
    }

    #[test]
    fn threshold_bitmap_survives_monotone_tone_curves(
        w in 1usize..=40,
        h in 1usize..=40,
        palette_len in 1usize..=64,
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::Rng;
        let mut r = common::rng(seed);
        // Occupied values and a strictly increasing curve on them.
        let mut all: Vec<u8> = (0..=255).collect();
        all.shuffle(&mut r);
        let mut occupied = all[..palette_len].to_vec();
        occupied.sort_unstable();
        all.shuffle(&mut r);
        let mut mapped = all[..palette_len].to_vec();
        mapped.sort_unstable();
        let curve = |v: u8| mapped[occupied.binary_search(&v).unwrap()];

        let img = GrayImage::new(w, h, (0..w * h).map(|_| occupied[r.gen_range(0..palette_len)]).collect()).unwrap();
        let toned = GrayImage::new(w, h, img.data().iter().map(|&v| curve(v)).collect()).unwrap();
        for layout in Layout::ALL {
            let a = MtbPair::from_gray(&img, 4, layout);
            let b = MtbPair::from_gray(&toned, 4, layout);
            prop_assert_eq!(a.mtb, b.mtb);
        }
    }

    #[test]
    fn reliable_pixels_keep_their_bit_under_unit_noise(
        img in gray(32, 32),
        noise in prop::collection::vec(-1i8..=1, 32 * 32),
        tol in 1u8..=8,
    ) {
        let m = histogram(&img).median().unwrap();
        let noisy = GrayImage::new(
            img.width(),
            img.height(),
            img.data().iter().zip(&noise).map(|(&p, &n)| (p as i16 + n as i16).clamp(0, 255) as u8).collect(),
        ).unwrap();
        let before = make_mtb(&img, m, Layout::WordPacked);
        let after = make_mtb(&noisy, m, Layout::WordPacked);
        let eb = make_exclusion(&img, m, tol, Layout::WordPacked);
        for y in 0..img.height() {
            for x in 0..img.width() {
                if eb.get(x, y) {
                    prop_assert_eq!(before.get(x, y), after.get(x, y));
                }
            }
        }
    }
}

#[test]
fn pyramid_levels_shrink_and_are_deterministic() {
    let img = common::scene(333, 211, 5);
    let reference = build_pyramid(&img, 6).unwrap();
    for pair in reference.levels().windows(2) {
        assert_eq!(pair[1].width(), pair[0].width() / 2);
        assert_eq!(pair[1].height(), pair[0].height() / 2);
        assert!(pair[1].width() >= 16 && pair[1].height() >= 16);
    }
    let mtb_ref = build_mtb_pyramid(&reference, 4, Layout::WordPacked);
    for threads in [1, 2, 5] {
        let (p, m) = in_pool(threads, || {
            let p = build_pyramid(&img, 6).unwrap();
            let m = build_mtb_pyramid(&p, 4, Layout::WordPacked);
            (p, m)
        });
        assert_eq!(p, reference);
        assert_eq!(m, mtb_ref);
    }
}

#[test]
fn split_image_keeps_its_split_at_every_level() {
    let img = GrayImage::from_fn(256, 128, |x, _| if x < 128 { 20 } else { 220 }).unwrap();
    let p = build_pyramid(&img, 6).unwrap();
    let m = build_mtb_pyramid(&p, 4, Layout::ByteMap);
    assert_eq!(m.level_count(), 4);
    for (g, pair) in p.levels().iter().zip(m.levels()) {
        let (mtb, eb, median) = scalar_threshold(g, 4);
        assert_eq!(pair.median, median);
        assert_eq!(pair.mtb.to_bools(), mtb.bits);
        assert_eq!(pair.exclusion.to_bools(), eb.bits);
    }
}
