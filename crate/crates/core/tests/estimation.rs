mod common;

use common::*;
use nalgebra::Vector2;
use rand::seq::SliceRandom;
use trifocal_calib::estimation::*;
use trifocal_calib::geometry::*;
use trifocal_calib::synth::*;

fn scene(seed: u64, num_points: usize) -> Scene {
    generate_scene(&SceneConfig { seed, num_points, ..Default::default() }).unwrap()
}

/// Aligns signs before comparing two unit-norm tensors.
fn sign_aligned_diff(a: &TrifocalTensor, b: &TrifocalTensor) -> f64 {
    a.max_abs_diff(b).min(a.max_abs_diff(&b.scaled(-1.0)))
}

#[test]
fn noiseless_points_recover_the_tensor() {
    for seed in 0..20 {
        let s = scene(seed, 500);
        let (t, diag) = linear_estimate(&s.triples().unwrap()).unwrap();
        let truth = normalize_tensor(&s.pixel_tensor().unwrap()).unwrap();
        assert!(sign_aligned_diff(&t, &truth) < 1e-6, "seed {seed}");
        assert!(diag.condition_ratio > 1e3);
        assert!(diag.max_transfer_error < 1e-6);
    }
}

#[test]
fn estimate_is_invariant_to_point_order() {
    let s = scene(3, 200);
    let mut triples = add_triple_noise(&s.triples().unwrap(), 0.5, 9);
    let (a, _) = linear_estimate(&triples).unwrap();
    triples.shuffle(&mut rng(4));
    let (b, _) = linear_estimate(&triples).unwrap();
    assert!(sign_aligned_diff(&a, &b) < 1e-12);
}

#[test]
fn estimate_follows_translated_image_coordinates() {
    let s = scene(5, 200);
    let triples = add_triple_noise(&s.triples().unwrap(), 0.5, 1);
    let shift = [Vector2::new(13.0, -7.0), Vector2::new(-40.0, 22.5), Vector2::new(3.25, 100.0)];
    let moved: Vec<_> =
        triples.iter().map(|t| PointTriple::new(t.x1 + shift[0], t.x2 + shift[1], t.x3 + shift[2])).collect();
    let (a, _) = linear_estimate(&triples).unwrap();
    let (b, _) = linear_estimate(&moved).unwrap();
    // x_old = A x_new with A a pure translation per view.
    let tr = |v: Vector2<f64>| {
        let mut m = nalgebra::Matrix3::identity();
        m[(0, 2)] = -v.x;
        m[(1, 2)] = -v.y;
        m
    };
    let a_moved = normalize_tensor(&transform_tensor(
        &a,
        &tr(shift[0]),
        &tr(shift[1]).try_inverse().unwrap(),
        &tr(shift[2]).try_inverse().unwrap(),
    ))
    .unwrap();
    assert!(sign_aligned_diff(&a_moved, &b) < 1e-9);
}

#[test]
fn too_few_or_degenerate_inputs_are_rejected() {
    let s = scene(6, 50);
    let triples = s.triples().unwrap();
    assert!(matches!(linear_estimate(&triples[..6]), Err(trifocal_calib::Error::TooFewTriples { needed: 7, got: 6 })));
    let same = vec![triples[0]; 20];
    assert!(linear_estimate(&same).is_err());
}

#[test]
fn transfer_reproduces_exact_third_point() {
    let s = scene(7, 300);
    let triples = s.triples().unwrap();
    let t = normalize_tensor(&s.pixel_tensor().unwrap()).unwrap();
    for tr in &triples {
        let x3 = transfer_point(&t, &tr.x1, &tr.x2).unwrap();
        assert!((x3 - tr.x3).norm() < 1e-8);
        let x3s = transfer_point(&t.scaled(-2.0), &tr.x1, &tr.x2).unwrap();
        assert!((x3s - x3).norm() < 1e-9);
    }
    let mut off = triples[0];
    off.x3 += Vector2::new(3.0, 4.0);
    assert!((transfer_error(&t, &off) - 5.0).abs() < 1e-8);
}

#[test]
fn held_out_transfer_error_stays_below_a_pixel() {
    for seed in 0..10 {
        let s = scene(100 + seed, 500);
        let noisy = add_triple_noise(&s.triples().unwrap(), 0.1, seed);
        let (fit, held) = noisy.split_at(400);
        let (t, _) = linear_estimate(fit).unwrap();
        let mean = held.iter().map(|tr| transfer_error(&t, tr)).sum::<f64>() / held.len() as f64;
        assert!(mean < 1.0, "seed {seed}: {mean}");
    }
}

#[test]
fn transfer_error_grows_with_noise() {
    let mut violations = 0;
    for seed in 0..50 {
        let s = scene(200 + seed, 300);
        let clean = s.triples().unwrap();
        let mean_err = |n: f64| {
            let (t, _) = linear_estimate(&add_triple_noise(&clean, n, seed)).unwrap();
            clean.iter().map(|tr| transfer_error(&t, tr)).sum::<f64>() / clean.len() as f64
        };
        let e: Vec<f64> = [0.1, 0.5, 1.0].iter().map(|&n| mean_err(n)).collect();
        if !(e[0] <= e[1] && e[1] <= e[2]) {
            violations += 1;
        }
    }
    assert!(violations <= 2, "{violations} non-monotone seeds");
}

#[test]
fn normalization_centres_and_scales_each_view() {
    let s = scene(8, 200);
    let (_, normed) = normalize_points(&s.triples().unwrap()).unwrap();
    for v in 0..3 {
        let pts: Vec<_> = normed.iter().map(|t| t.view(v)).collect();
        let c = pts.iter().fold(Vector2::zeros(), |a, p| a + p) / pts.len() as f64;
        let d = pts.iter().map(|p| p.norm()).sum::<f64>() / pts.len() as f64;
        assert!(c.norm() < 1e-12);
        assert!((d - 2f64.sqrt()).abs() < 1e-12);
    }
}
