use glam::DVec3;
use proptest::prelude::*;
use std::sync::Arc;
use volcast_core::raycaster::{
    composite_step, generate_ray, hounsfield, intersect_clipbox, CompositeState,
};
use volcast_core::{
    make_phantom, render_frame, render_frame_sequential, ClipBox, FrameBuffer, Light,
    OperatorKind, Phantom, RenderMode, RenderSettings, Renderer, Scene, Volume,
};

fn sphere(n: usize, radius: f64) -> Volume {
    make_phantom(
        Phantom::SolidSphere {
            radius,
            value: 2000.0,
        },
        [n; 3],
    )
    .unwrap()
}

fn settings(width: usize, height: usize) -> RenderSettings {
    RenderSettings {
        width,
        height,
        ..Default::default()
    }
}

fn luminance(p: [u8; 4]) -> u32 {
    p[0] as u32 + p[1] as u32 + p[2] as u32
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn default_scene_is_identical_for_any_worker_count() {
    let v = make_phantom(Phantom::default_sphere(128), [128; 3]).unwrap();
    let scene = Scene::for_volume(&v);
    let s = RenderSettings::default();
    let max = std::thread::available_parallelism().map_or(4, |n| n.get()).max(3);
    let reference = render_frame_sequential(&v, &scene, &s).unwrap();
    assert!(reference.stats.hits > 0);
    for threads in [1, 2, max] {
        let fb = in_pool(threads, || render_frame(&v, &scene, &s).unwrap());
        assert!(fb.same_image(&reference), "{threads} workers");
        assert_eq!(fb.stats, reference.stats);
    }
}

#[test]
fn empty_volume_is_all_background_in_every_mode() {
    let v = make_phantom(Phantom::Empty, [24; 3]).unwrap();
    let scene = Scene::for_volume(&v);
    for mode in [RenderMode::SurfaceOnly, RenderMode::Composited] {
        for op in OperatorKind::ALL {
            let s = RenderSettings {
                mode,
                operator: op,
                background: [0.0, 1.0, 0.5, 0.0],
                ..settings(40, 30)
            };
            let fb = render_frame(&v, &scene, &s).unwrap();
            assert!(fb.pixels.iter().all(|&p| p == [0, 255, 128, 0]));
        }
    }
}

#[test]
fn sphere_centre_is_brighter_than_its_silhouette() {
    let v = sphere(48, 16.0);
    let scene = Scene::for_volume(&v);
    let s = settings(121, 121);
    let fb = render_frame(&v, &scene, &s).unwrap();
    let bg = fb.pixel(0, 0);
    let centre = fb.pixel(60, 60);
    assert_ne!(centre, bg);
    // The light sits at the eye, so the Lambert term is near 1 where the
    // surface faces the camera and falls towards 0 at grazing angles.
    let row: Vec<_> = (0..121).map(|x| fb.pixel(x, 60)).collect();
    let first = row.iter().position(|&p| p != bg).unwrap();
    let last = row.iter().rposition(|&p| p != bg).unwrap();
    assert!(luminance(centre) > luminance(row[first]));
    assert!(luminance(centre) > luminance(row[last]));
    assert!(centre[0] >= 200, "centre {centre:?}");
}

#[test]
fn shrinking_the_clip_box_never_adds_hits_outside_it() {
    let v = sphere(40, 15.0);
    let mut scene = Scene::for_volume(&v);
    scene.camera.azimuth = 30.0;
    scene.camera.elevation = 20.0;
    let (w, h) = (64, 48);
    let full = render_frame(&v, &scene, &settings(w, h)).unwrap();
    scene.clip = ClipBox::new(DVec3::new(5.0, 12.0, 0.0), DVec3::new(30.0, 26.0, 22.0)).unwrap();
    let clipped = render_frame(&v, &scene, &settings(w, h)).unwrap();
    let bg = [0, 0, 0, 255];
    let mut missed = 0;
    for py in 0..h {
        for px in 0..w {
            let ray = generate_ray(&scene.camera, px, py, w, h).unwrap();
            if intersect_clipbox(&ray, &scene.clip).is_none() {
                missed += 1;
                assert_eq!(clipped.pixel(px, py), bg, "pixel ({px}, {py})");
            }
        }
    }
    assert!(missed > 0);
    assert!(clipped.stats.hits < full.stats.hits);
}

#[test]
fn opaque_composite_equals_surface_only() {
    let v = sphere(48, 18.0);
    let mut scene = Scene::for_volume(&v);
    scene.transfer = scene.transfer.opaque();
    scene.camera.azimuth = 15.0;
    for op in OperatorKind::ALL {
        let surface = RenderSettings {
            operator: op,
            ..settings(80, 60)
        };
        let composited = RenderSettings {
            mode: RenderMode::Composited,
            ..surface.clone()
        };
        let a = render_frame(&v, &scene, &surface).unwrap();
        let b = render_frame(&v, &scene, &composited).unwrap();
        assert!(a.same_image(&b), "{op}");
    }
}

#[test]
fn translucent_composite_differs_from_surface_only() {
    // Soft tissue values (HU 0 to 300 here) are translucent in the default
    // table, so compositing must see through to the brighter core.
    let n = 40;
    let c = DVec3::splat(19.5);
    let mut data = Vec::with_capacity(n * n * n);
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let d = (DVec3::new(x as f64, y as f64, z as f64) - c).length();
                data.push(if d <= 8.0 { 2500 } else if d <= 15.0 { 1100 } else { 0 });
            }
        }
    }
    let v = Volume::new([n; 3], data).unwrap();
    let scene = Scene::for_volume(&v);
    let a = render_frame(&v, &scene, &settings(64, 48)).unwrap();
    let b = render_frame(
        &v,
        &scene,
        &RenderSettings {
            mode: RenderMode::Composited,
            ..settings(64, 48)
        },
    )
    .unwrap();
    assert!(!a.same_image(&b));
}

#[test]
fn inside_the_shell_every_hit_has_zero_gradient() {
    let v = make_phantom(
        Phantom::SphericalShell {
            inner: 18.0,
            outer: 26.0,
            value: 2000.0,
        },
        [64; 3],
    )
    .unwrap();
    let mut scene = Scene::for_volume(&v);
    // Eye in the middle of the shell wall, looking at the centre.
    scene.camera.distance = 22.0;
    scene.camera.azimuth = 90.0;
    scene.light = Light::at(scene.camera.eye());
    let s = RenderSettings {
        background: [0.2, 0.4, 0.6, 1.0],
        ..settings(32, 24)
    };
    for op in OperatorKind::ALL {
        let fb = render_frame(&v, &scene, &RenderSettings { operator: op, ..s.clone() }).unwrap();
        assert!(fb.pixels.iter().all(|&p| p == [0, 0, 0, 255]), "{op}");
    }
}

#[test]
fn opposite_lights_give_different_frames() {
    let v = Arc::new(sphere(32, 10.0));
    let renderer = Renderer::new(v.clone());
    let mut scene = Scene::for_volume(&v);
    let s = settings(48, 36);
    scene.light = Light::at(DVec3::splat(1000.0));
    let a = renderer.render(&scene, &s).unwrap();
    scene.light = Light::at(DVec3::splat(-1000.0));
    let b = renderer.render(&scene, &s).unwrap();
    assert!(!a.same_image(&b));
}

#[test]
fn renderer_matches_one_shot_rendering() {
    let v = Arc::new(sphere(32, 10.0));
    let renderer = Renderer::new(v.clone());
    let scene = Scene::for_volume(&v);
    let s = settings(40, 30);
    let a: FrameBuffer = renderer.render(&scene, &s).unwrap();
    let b = render_frame(&v, &scene, &s).unwrap();
    let c = renderer.render_sequential(&scene, &s).unwrap();
    assert!(a.same_image(&b) && a.same_image(&c));
}

#[test]
fn hounsfield_anchor_points() {
    for mu_water in [1.0, 0.19, 1000.0, 3.5e-3] {
        assert_eq!(hounsfield(mu_water, mu_water).unwrap(), 0.0);
        assert_eq!(hounsfield(0.0, mu_water).unwrap(), -1000.0);
    }
    assert_eq!(hounsfield(2000.0, 1000.0).unwrap(), 1000.0);
    assert!(hounsfield(1.0, 0.0).is_err());
    assert!(hounsfield(1.0, -2.0).is_err());
}

fn rgb() -> impl Strategy<Value = DVec3> {
    (0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(r, g, b)| DVec3::new(r, g, b))
}

proptest! {
    #[test]
    fn composite_step_extremes_are_exact(c_in in rgb(), c_sample in rgb()) {
        prop_assert_eq!(composite_step(c_in, c_sample, 1.0).unwrap(), c_sample);
        prop_assert_eq!(composite_step(c_in, c_sample, 0.0).unwrap(), c_in);
    }

    #[test]
    fn composite_step_rejects_out_of_range_alpha(alpha in prop_oneof![-10.0..-1e-9f64, 1.0 + 1e-9..10.0f64]) {
        prop_assert!(composite_step(DVec3::ZERO, DVec3::ONE, alpha).is_err());
    }

    #[test]
    fn front_to_back_matches_back_to_front(
        samples in prop::collection::vec((rgb(), 0.0..=1.0f64), 1..12),
        bg in rgb(),
    ) {
        let mut state = CompositeState::default();
        let mut last = state.remaining;
        for &(c, a) in &samples {
            state.absorb(c, a);
            prop_assert!(state.remaining <= last && state.remaining >= 0.0);
            last = state.remaining;
        }
        let mut back = bg;
        for &(c, a) in samples.iter().rev() {
            back = composite_step(back, c, a).unwrap();
        }
        prop_assert!((state.over(bg) - back).abs().max_element() < 1e-5);
    }

    #[test]
    fn hounsfield_is_linear(mu_water in 1e-3..1e4f64, k in -2.0..4.0f64) {
        let hu = hounsfield(k * mu_water, mu_water).unwrap();
        prop_assert!((hu - (k - 1.0) * 1000.0).abs() <= 1e-9 * 1000.0 * (k - 1.0).abs().max(1.0));
    }
}
