use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use lfnet::data::synth::{hue_sat, STYLE_HUES};
use lfnet::data::{
    extract_patch, generate_dataset, load_dir, load_manifest, read_png, rng_for, sample_batch, synth_art, synth_photo,
    write_png, Domain, PhotoLayout, Sample, SCENE_CLASSES, STYLES,
};
use lfnet::{Error, Shape, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn in_unit_range(t: &Tensor<f32>) -> bool {
    t.data().iter().all(|v| (0.0..=1.0).contains(v))
}

#[test]
fn generators_are_deterministic_and_in_range() {
    for seed in [0, 7, 12345] {
        let a = synth_photo(seed, 32).unwrap();
        assert_eq!(a, synth_photo(seed, 32).unwrap());
        assert_eq!(a.image.shape(), Shape::new(1, 32, 32, 3).unwrap());
        assert!(in_unit_range(&a.image));
        for style in 0..STYLES {
            let b = synth_art(seed, 32, style).unwrap();
            assert_eq!(b, synth_art(seed, 32, style).unwrap());
            assert!(in_unit_range(&b.image));
            assert_eq!((b.domain, b.scene, b.style), (Domain::Art, None, Some(style)));
        }
    }
    assert_ne!(synth_photo(1, 32).unwrap().image, synth_photo(2, 32).unwrap().image);
}

#[test]
fn discs_cover_half_their_area() {
    let mut checked = 0;
    for seed in 0..200 {
        let layout = PhotoLayout::new(seed, 48).unwrap();
        let Some(disc) = layout.disc else { continue };
        let with = layout.render(true);
        let without = layout.render(false);
        let s = with.shape();
        let mut differing = 0;
        for y in 0..s.height {
            for x in 0..s.width {
                if (0..3).any(|c| with.at(0, y, x, c) != without.at(0, y, x, c)) {
                    differing += 1;
                }
            }
        }
        let bound = PI * disc.radius * disc.radius / 2.0;
        assert!(differing as f64 >= bound, "seed {seed}: {differing} < {bound}");
        checked += 1;
    }
    assert!(checked > 50);
}

#[test]
fn scene_matches_gradient_direction() {
    for seed in 0..40 {
        let layout = PhotoLayout::new(seed, 32).unwrap();
        let img = layout.render(false);
        let lum = |y: usize, x: usize| (0..3).map(|c| img.at(0, y, x, c) as f64).sum::<f64>();
        let side = |f: &dyn Fn(usize) -> (usize, usize)| (0..32).map(|i| lum(f(i).0, f(i).1)).sum::<f64>();
        let left = side(&|i| (i, 0));
        let right = side(&|i| (i, 31));
        let top = side(&|i| (0, i));
        let bottom = side(&|i| (31, i));
        let brightest = [(right, 0), (bottom, 1), (left, 2), (top, 3)]
            .into_iter()
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap()
            .1;
        assert_eq!(brightest, layout.scene, "seed {seed}");
    }
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Saturation-weighted circular mean hue of an image.
fn mean_hue(img: &Tensor<f32>) -> f64 {
    let s = img.shape();
    let (mut sx, mut sy) = (0.0, 0.0);
    for y in 0..s.height {
        for x in 0..s.width {
            let rgb = [0, 1, 2].map(|c| img.at(0, y, x, c) as f64);
            let (h, sat) = hue_sat(rgb);
            sx += sat * h.to_radians().cos();
            sy += sat * h.to_radians().sin();
        }
    }
    sy.atan2(sx).to_degrees().rem_euclid(360.0)
}

#[test]
fn style_palettes_are_sixty_degrees_apart() {
    let [(a0, a1), (b0, b1)] = STYLE_HUES;
    let nominal = [a0, a1, b0, b1];
    let gap = [(0, 2), (0, 3), (1, 2), (1, 3)]
        .iter()
        .map(|&(i, j)| circular_distance(nominal[i], nominal[j]))
        .fold(f64::INFINITY, f64::min);
    assert!(gap >= 60.0, "{gap}");

    let hues = |style| (0..60).map(|seed| mean_hue(&synth_art(seed, 32, style).unwrap().image)).collect::<Vec<_>>();
    let (h0, h1) = (hues(0), hues(1));
    let closest = h0
        .iter()
        .flat_map(|a| h1.iter().map(move |b| circular_distance(*a, *b)))
        .fold(f64::INFINITY, f64::min);
    assert!(closest >= 60.0, "closest mean hues {closest}");
}

#[test]
fn label_marginals() {
    let n = 1000;
    let photos: Vec<Sample> = (0..n).map(|i| synth_photo(rng_for(3, 10, i).gen(), 16).unwrap()).collect();
    let positive = photos.iter().filter(|s| s.content == 1).count() as f64 / n as f64;
    assert!((positive - 0.5).abs() <= 0.05, "{positive}");
    for scene in 0..SCENE_CLASSES {
        let f = photos.iter().filter(|s| s.scene == Some(scene)).count() as f64 / n as f64;
        assert!((f - 1.0 / SCENE_CLASSES as f64).abs() <= 0.05, "scene {scene}: {f}");
    }
    for style in 0..STYLES {
        let positive = (0..n).filter(|&i| synth_art(i, 16, style).unwrap().content == 1).count() as f64 / n as f64;
        assert!((positive - 0.5).abs() <= 0.05, "style {style}: {positive}");
    }
}

fn marker_image(size: usize) -> Tensor<f32> {
    let mut t = Tensor::zeros(Shape::new(1, size, size, 3).unwrap());
    for y in 0..size {
        for (x, v) in [(0, 0.5), (size - 1, 1.0)] {
            t.set(0, y, x, 0, v);
        }
    }
    t
}

#[test]
fn crops_cover_both_edge_columns_uniformly() {
    let img = marker_image(32);
    let (size, crops) = (16, 10_000);
    let positions = 32 - size + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut left, mut right) = (0, 0);
    for _ in 0..crops {
        let p = extract_patch(&img, size, &mut rng).unwrap();
        let row: Vec<f32> = (0..size).map(|x| p.at(0, 0, x, 0)).collect();
        left += row.contains(&0.5) as usize;
        right += row.contains(&1.0) as usize;
    }
    let expected = crops as f64 / positions as f64;
    for count in [left, right] {
        assert!((count as f64 - expected).abs() < 0.25 * expected, "{count} vs {expected}");
    }
}

#[test]
fn full_size_patch_is_the_image() {
    let img = synth_photo(3, 32).unwrap().image;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert_eq!(extract_patch(&img, 32, &mut rng).unwrap(), img);
    assert!(extract_patch(&img, 33, &mut rng).is_err());
}

#[test]
fn batches_preserve_labels() {
    let samples: Vec<Sample> = (0..12)
        .map(|i| Sample {
            image: Tensor::full(Shape::new(1, 20, 20, 3).unwrap(), i as f32 / 16.0),
            domain: Domain::Photo,
            content: i % 2,
            scene: Some(i % 4),
            style: None,
        })
        .collect();
    let pool: Vec<&Sample> = samples.iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let b = sample_batch(&pool, 7, 16, &mut rng).unwrap();
    assert_eq!(b.images.shape(), Shape::new(7, 16, 16, 3).unwrap());
    assert_eq!((b.content.len(), b.scene.len()), (7, 7));
    for k in 0..7 {
        let source = (b.images.at(k, 0, 0, 0) * 16.0).round() as usize;
        assert_eq!(b.content[k], source % 2);
        assert_eq!(b.scene[k], source % 4);
    }
    let again = sample_batch(&pool, 7, 16, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    assert_eq!(b, again);
    assert!(matches!(sample_batch(&[], 1, 16, &mut rng), Err(Error::Degenerate(_))));
}

#[test]
fn png_round_trips_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let bytes: Vec<u8> = (0..17 * 23 * 3).map(|_| rng.gen()).collect();
    let img = Tensor::<f32>::from_f64(
        Shape::new(1, 17, 23, 3).unwrap(),
        &bytes.iter().map(|&b| b as f64 / 255.0).collect::<Vec<_>>(),
    )
    .unwrap();
    let a = dir.path().join("a.png");
    write_png(&a, &img).unwrap();
    let back: Tensor<f32> = read_png(&a).unwrap();
    let back_bytes: Vec<u8> = back.data().iter().map(|&v| lfnet::data::to_byte(v as f64)).collect();
    assert_eq!(back_bytes, bytes);
    let b = dir.path().join("b.png");
    write_png(&b, &back).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let f64_img: Tensor<f64> = read_png(&a).unwrap();
    assert_eq!(f64_img.at(0, 0, 0, 0), bytes[0] as f64 / 255.0);
}

fn write_raw_png(path: &Path, color: png::ColorType, depth: png::BitDepth, data: &[u8]) {
    let file = fs::File::create(path).unwrap();
    let mut enc = png::Encoder::new(std::io::BufWriter::new(file), 4, 4);
    enc.set_color(color);
    enc.set_depth(depth);
    enc.write_header().unwrap().write_image_data(data).unwrap();
}

#[test]
fn non_rgb_pngs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("gray.png", png::ColorType::Grayscale, png::BitDepth::Eight, 16),
        ("rgba.png", png::ColorType::Rgba, png::BitDepth::Eight, 64),
        ("deep.png", png::ColorType::Rgb, png::BitDepth::Sixteen, 96),
    ];
    for (name, color, depth, len) in cases {
        let p = dir.path().join(name);
        write_raw_png(&p, color, depth, &vec![7u8; len]);
        assert!(matches!(read_png::<f32>(&p), Err(Error::UnsupportedFormat { .. })), "{name}");
    }
    let junk = dir.path().join("junk.png");
    fs::write(&junk, b"not a png").unwrap();
    assert!(matches!(read_png::<f32>(&junk), Err(Error::UnsupportedFormat { .. })));
}

#[test]
fn generated_dataset_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate_dataset(dir.path(), 6, 4, 2, 16, 3).unwrap();
    let data = load_manifest(&manifest).unwrap();
    assert_eq!(data.photos().len(), 6);
    assert_eq!((data.art(0).len(), data.art(1).len()), (4, 4));
    let again = load_dir(dir.path()).unwrap();
    assert_eq!(data.samples, again.samples);
    let first = synth_photo(rng_for(3, 10, 0).gen(), 16).unwrap();
    let loaded = &data.photos()[0];
    assert_eq!((loaded.content, loaded.scene), (first.content, first.scene));
    assert!(loaded.image.max_abs_diff(&first.image) <= 0.5 / 255.0 + 1e-6);
}

#[test]
fn manifest_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    write_png(&dir.path().join("a.png"), &synth_photo(0, 16).unwrap().image).unwrap();
    let cases = [
        ("a.png,photo,0,1\n# note\na.png,photo,3,1\n", 3),
        ("\na.png,photo,0,1\nmissing.png,art,0,-\n", 3),
        ("a.png,photo,0\n", 1),
        ("a.png,photo,1,2\na.png,sculpture,0,1\n", 2),
    ];
    for (text, line) in cases {
        let path = dir.path().join("m.csv");
        fs::write(&path, text).unwrap();
        match load_manifest(&path) {
            Err(Error::Ingest { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            other => panic!("{text:?}: {other:?}"),
        }
    }
}
