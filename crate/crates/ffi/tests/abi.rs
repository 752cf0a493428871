use std::ffi::{CStr, CString};
use std::ptr;

use fst::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(fst_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn gradient(w: usize, h: usize) -> Vec<f64> {
    (0..w * h)
        .flat_map(|i| {
            let (x, y) = ((i % w) as f64 / w as f64, (i / w) as f64 / h as f64);
            [x, y, 0.5 * (x + y) * (1.0 - 0.3 * x * y)]
        })
        .collect()
}

#[test]
fn identity_round_trips_through_json() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(fst_params_identity(true, &mut p), FstStatus::Ok);
        assert!(fst_params_has_cc(p));
        let mut json = ptr::null_mut();
        assert_eq!(fst_params_to_json(p, &mut json), FstStatus::Ok);
        let mut q = ptr::null_mut();
        assert_eq!(fst_params_from_json(json, &mut q), FstStatus::Ok);
        let mut coeffs = [0.0; 13];
        let mut n = 0;
        assert_eq!(
            fst_params_coefficients(q, 1, coeffs.as_mut_ptr(), 13, &mut n),
            FstStatus::Ok
        );
        assert_eq!(n, 13);
        let mut expect = [0.0; 13];
        expect[4] = 1.0;
        assert_eq!(coeffs, expect);
        fst_string_free(json);
        fst_params_free(p);
        fst_params_free(q);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut p = ptr::null_mut();
        let bad = CString::new("{\"version\": 2}").unwrap();
        assert_ne!(fst_params_from_json(bad.as_ptr(), &mut p), FstStatus::Ok);
        assert!(p.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(fst_params_from_json(ptr::null(), &mut p), FstStatus::NullPointer);
        assert!(last_error().contains("json"));

        let missing = CString::new("/nonexistent/params.json").unwrap();
        assert_eq!(fst_params_load(missing.as_ptr(), &mut p), FstStatus::MissingInput);

        let mut id = ptr::null_mut();
        fst_params_identity(false, &mut id);
        let mut lut = ptr::null_mut();
        assert_eq!(fst_lut_compile(id, 1, &mut lut), FstStatus::InvalidArgument);
        let mut small = [0.0; 4];
        let mut n = 0;
        assert_eq!(
            fst_params_coefficients(id, 0, small.as_mut_ptr(), 4, &mut n),
            FstStatus::InvalidArgument
        );
        assert_eq!(n, 10);
        assert_eq!(
            fst_params_coefficients(id, 0, ptr::null_mut(), 0, ptr::null_mut()),
            FstStatus::NullPointer
        );
        assert_eq!(fst_params_identity(false, &mut id), FstStatus::Ok);
        assert!(last_error().is_empty());
        fst_params_free(id);
        fst_params_free(ptr::null_mut());
        fst_lut_free(ptr::null_mut());
    }
}

#[test]
fn out_of_range_pixels_are_rejected() {
    unsafe {
        let mut p = ptr::null_mut();
        fst_params_identity(false, &mut p);
        let img = [0.2, 1.5, 0.3];
        let mut out = [0.0; 3];
        assert_eq!(
            fst_apply_filter(p, img.as_ptr(), 1, 1, out.as_mut_ptr()),
            FstStatus::InvalidArgument
        );
        fst_params_free(p);
    }
}

#[test]
fn estimate_recovers_filter_and_lut_matches_direct() {
    let (w, h) = (64, 48);
    let orig = gradient(w, h);
    let truth = CString::new(
        fst_core::synth::make_params(&"contrast(0.8,0.1)".parse().unwrap())
            .unwrap()
            .to_json(),
    )
    .unwrap();
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(fst_params_from_json(truth.as_ptr(), &mut t), FstStatus::Ok);
        let mut filtered = vec![0.0; orig.len()];
        assert_eq!(
            fst_apply_filter(t, orig.as_ptr(), w, h, filtered.as_mut_ptr()),
            FstStatus::Ok
        );

        let mut est = ptr::null_mut();
        let status = fst_estimate_filter(
            filtered.as_ptr(),
            orig.as_ptr(),
            ptr::null(),
            w,
            h,
            0.0,
            false,
            1,
            &mut est,
        );
        assert_eq!(status, FstStatus::Ok, "{}", last_error());
        let probe = [0.3, 0.6, 0.9];
        let (mut a, mut b) = ([0.0; 3], [0.0; 3]);
        fst_params_eval(t, probe.as_ptr(), true, a.as_mut_ptr());
        fst_params_eval(est, probe.as_ptr(), true, b.as_mut_ptr());
        for i in 0..3 {
            assert!((a[i] - b[i]).abs() < 1e-9);
        }

        let var = vec![0.01f32; w * h];
        let mut est2 = ptr::null_mut();
        let status = fst_estimate_filter(
            filtered.as_ptr(),
            orig.as_ptr(),
            var.as_ptr(),
            w,
            h,
            0.0,
            false,
            1,
            &mut est2,
        );
        assert_eq!(status, FstStatus::Ok, "{}", last_error());

        let mut lut = ptr::null_mut();
        assert_eq!(fst_lut_compile(est, 17, &mut lut), FstStatus::Ok);
        assert_eq!(fst_lut_size(lut), 17);
        let mut via_lut = vec![0.0; orig.len()];
        assert_eq!(
            fst_lut_apply(lut, orig.as_ptr(), w, h, via_lut.as_mut_ptr()),
            FstStatus::Ok
        );
        let mut m = FstMetrics::default();
        assert_eq!(
            fst_evaluate(via_lut.as_ptr(), filtered.as_ptr(), w, h, &mut m),
            FstStatus::Ok
        );
        assert!(m.psnr_db > 60.0, "{m:?}");

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("x.cube").to_str().unwrap()).unwrap();
        assert_eq!(fst_lut_export_cube(lut, path.as_ptr(), ptr::null()), FstStatus::Ok);
        let text = std::fs::read_to_string(dir.path().join("x.cube")).unwrap();
        assert!(text.contains("LUT_3D_SIZE 17"));

        fst_lut_free(lut);
        fst_params_free(t);
        fst_params_free(est);
        fst_params_free(est2);
    }
}

#[test]
fn estimate_reports_dimension_mismatch_for_bad_variance() {
    let orig = gradient(8, 8);
    unsafe {
        let mut est = ptr::null_mut();
        let status = fst_estimate_filter(
            orig.as_ptr(),
            orig.as_ptr(),
            ptr::null(),
            8,
            8,
            1e-3,
            true,
            0,
            ptr::null_mut(),
        );
        assert_eq!(status, FstStatus::NullPointer);
        let var = vec![-1.0f32; 64];
        let status = fst_estimate_filter(
            orig.as_ptr(),
            orig.as_ptr(),
            var.as_ptr(),
            8,
            8,
            1e-3,
            true,
            0,
            &mut est,
        );
        assert_ne!(status, FstStatus::Ok);
        assert!(est.is_null());
    }
}

#[test]
fn color_science_entry_points() {
    unsafe {
        let white = [1.0, 1.0, 1.0];
        let mut lab = [0.0; 3];
        assert_eq!(fst_srgb_to_lab(white.as_ptr(), lab.as_mut_ptr()), FstStatus::Ok);
        assert!((lab[0] - 100.0).abs() < 1e-3 && lab[1].abs() < 1e-3 && lab[2].abs() < 1e-3);
        let a = [50.0, 2.6772, -79.7751];
        let b = [50.0, 0.0, -82.7485];
        assert!((fst_ciede2000(a.as_ptr(), b.as_ptr()) - 2.0425).abs() < 1e-4);
        assert!(fst_ciede2000(a.as_ptr(), ptr::null()).is_nan());
        let img = gradient(4, 4);
        let mut m = FstMetrics::default();
        assert_eq!(fst_evaluate(img.as_ptr(), img.as_ptr(), 4, 4, &mut m), FstStatus::Ok);
        assert!(m.psnr_db.is_infinite() && m.mean_de2000 == 0.0);
    }
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(fst_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
