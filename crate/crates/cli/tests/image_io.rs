use std::fs;
use std::path::Path;

use mtb_align::RgbImage;
use mtb_align_cli::{decode_image, encode_image, ImageIoError};
use proptest::prelude::*;

fn rgb(max_w: usize, max_h: usize) -> impl Strategy<Value = RgbImage> {
    (1..=max_w, 1..=max_h).prop_flat_map(|(w, h)| {
        prop::collection::vec(any::<u8>(), w * h * 3)
            .prop_map(move |d| RgbImage::new(w, h, d).unwrap())
    })
}

fn write_png(
    path: &Path,
    w: u32,
    h: u32,
    color: png::ColorType,
    depth: png::BitDepth,
    data: &[u8],
    palette: Option<Vec<u8>>,
) {
    let file = fs::File::create(path).unwrap();
    let mut enc = png::Encoder::new(std::io::BufWriter::new(file), w, h);
    enc.set_color(color);
    enc.set_depth(depth);
    if let Some(p) = palette {
        enc.set_palette(p);
    }
    let mut writer = enc.write_header().unwrap();
    writer.write_image_data(data).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ppm_and_png_round_trip(img in rgb(40, 30)) {
        let dir = tempfile::tempdir().unwrap();
        for name in ["a.ppm", "a.png"] {
            let path = dir.path().join(name);
            encode_image(&img, &path).unwrap();
            let back = decode_image(&path).unwrap();
            prop_assert_eq!(&back, &img);
            // And once more through the decoded copy.
            encode_image(&back, &path).unwrap();
            prop_assert_eq!(decode_image(&path).unwrap(), img.clone());
        }
    }
}

#[test]
fn constant_image_has_expected_size() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.ppm");
    let img = RgbImage::filled(33, 17, [10, 20, 30]).unwrap();
    encode_image(&img, &path).unwrap();
    let header = "P6\n33 17\n255\n";
    let bytes = fs::read(&path).unwrap();
    assert_eq!(bytes.len(), header.len() + 3 * 33 * 17);
    assert!(bytes.starts_with(header.as_bytes()));
}

#[test]
fn overwriting_an_existing_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("o.ppm");
    fs::write(&path, vec![b'x'; 10_000]).unwrap();
    let img = RgbImage::filled(2, 2, [1, 2, 3]).unwrap();
    encode_image(&img, &path).unwrap();
    assert_eq!(decode_image(&path).unwrap(), img);
    assert_eq!(
        fs::metadata(&path).unwrap().len() as usize,
        "P6\n2 2\n255\n".len() + 12
    );
}

#[test]
fn decode_errors_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    fs::write(p("p5.ppm"), b"P5\n1 1\n255\n\0").unwrap();
    fs::write(p("deep.ppm"), b"P6\n1 1\n65535\n\0\0\0\0\0\0").unwrap();
    fs::write(p("short.ppm"), b"P6\n4 4\n255\n\0\0\0").unwrap();
    fs::write(p("junk.ppm"), b"hello").unwrap();
    fs::write(p("header.ppm"), b"P6\n4 x\n255\n").unwrap();

    let errors = [
        decode_image(&p("missing.ppm")).unwrap_err(),
        decode_image(&p("p5.ppm")).unwrap_err(),
        decode_image(&p("deep.ppm")).unwrap_err(),
        decode_image(&p("short.ppm")).unwrap_err(),
        decode_image(&p("junk.ppm")).unwrap_err(),
        decode_image(&p("header.ppm")).unwrap_err(),
    ];
    assert!(matches!(errors[0], ImageIoError::NotFound { .. }));
    assert!(matches!(errors[1], ImageIoError::UnsupportedFormat { .. }));
    assert!(matches!(
        errors[2],
        ImageIoError::UnsupportedMaxval { maxval: 65535, .. }
    ));
    assert!(matches!(
        errors[3],
        ImageIoError::Truncated {
            expected: 48,
            found: 3,
            ..
        }
    ));
    assert!(matches!(errors[4], ImageIoError::UnsupportedFormat { .. }));
    assert!(matches!(errors[5], ImageIoError::Malformed { .. }));

    let messages: Vec<String> = errors.iter().map(|e| e.to_string()).collect();
    for (i, a) in messages.iter().enumerate() {
        for b in &messages[i + 1..] {
            assert_ne!(a, b);
        }
    }
    assert!(messages[0].contains("missing.ppm"));
}

#[test]
fn png_alpha_is_dropped_and_palettes_expanded() {
    let dir = tempfile::tempdir().unwrap();
    let rgba = dir.path().join("rgba.png");
    write_png(
        &rgba,
        2,
        1,
        png::ColorType::Rgba,
        png::BitDepth::Eight,
        &[1, 2, 3, 0, 4, 5, 6, 255],
        None,
    );
    assert_eq!(decode_image(&rgba).unwrap().data(), &[1, 2, 3, 4, 5, 6]);

    let pal = dir.path().join("pal.png");
    write_png(
        &pal,
        3,
        1,
        png::ColorType::Indexed,
        png::BitDepth::Eight,
        &[1, 0, 1],
        Some(vec![9, 9, 9, 200, 100, 50]),
    );
    assert_eq!(
        decode_image(&pal).unwrap().data(),
        &[200, 100, 50, 9, 9, 9, 200, 100, 50]
    );
}

#[test]
fn unsupported_png_variants() {
    let dir = tempfile::tempdir().unwrap();
    let deep = dir.path().join("deep.png");
    write_png(
        &deep,
        1,
        1,
        png::ColorType::Rgb,
        png::BitDepth::Sixteen,
        &[0; 6],
        None,
    );
    assert!(matches!(
        decode_image(&deep),
        Err(ImageIoError::UnsupportedFormat { .. })
    ));

    let gray = dir.path().join("gray.png");
    write_png(
        &gray,
        2,
        1,
        png::ColorType::Grayscale,
        png::BitDepth::Eight,
        &[0, 255],
        None,
    );
    assert!(matches!(
        decode_image(&gray),
        Err(ImageIoError::UnsupportedFormat { .. })
    ));

    let broken = dir.path().join("broken.png");
    let mut bytes = fs::read(&deep).unwrap();
    bytes.truncate(20);
    fs::write(&broken, bytes).unwrap();
    assert!(matches!(
        decode_image(&broken),
        Err(ImageIoError::Png { .. })
    ));
}

#[test]
fn unknown_output_extension_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let img = RgbImage::filled(1, 1, [0, 0, 0]).unwrap();
    let err = encode_image(&img, &dir.path().join("x.bmp")).unwrap_err();
    assert!(matches!(err, ImageIoError::UnsupportedFormat { .. }));
    let err = encode_image(&img, &dir.path().join("no/such/dir/x.ppm")).unwrap_err();
    assert!(matches!(err, ImageIoError::Io { .. }));
    assert!(err.to_string().contains("x.ppm"));
}
