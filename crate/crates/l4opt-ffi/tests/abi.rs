//! Exercises the C entry points the way a foreign caller would: raw
//! pointers, status codes, and sentinel values, plus an exact parity check
//! against the underlying Rust API.

use l4opt::l4::{L4Config, L4State};
use l4opt_ffi::{
    l4opt_create, l4opt_free, l4opt_last_eta, l4opt_last_gv, l4opt_lmin, l4opt_params_default,
    l4opt_status_message, l4opt_step, l4opt_steps, L4Handle, L4Params, L4Status, L4_FLAVOR_ADAM,
    L4_FLAVOR_MOM,
};

/// Convex quadratic `L = 0.5 ||theta||^2`, `grad = theta`: enough structure
/// to drive real descent through the full update rule.
fn quadratic(theta: &[f64]) -> (f64, Vec<f64>) {
    let loss = 0.5 * theta.iter().map(|x| x * x).sum::<f64>();
    (loss, theta.to_vec())
}

fn create(params: &L4Params, dim: usize) -> *mut L4Handle {
    let mut handle: *mut L4Handle = std::ptr::null_mut();
    let status = unsafe { l4opt_create(params, dim, &mut handle) };
    assert_eq!(status, L4Status::Ok);
    assert!(!handle.is_null());
    handle
}

#[test]
fn defaults_match_the_library_defaults() {
    for (tag, config) in [(L4_FLAVOR_MOM, L4Config::mom()), (L4_FLAVOR_ADAM, L4Config::adam())] {
        let p = l4opt_params_default(tag);
        assert_eq!(p.alpha, config.alpha);
        assert_eq!(p.gamma, config.gamma);
        assert_eq!(p.gamma0, config.gamma0);
        assert_eq!(p.tau, config.tau);
        assert_eq!(p.epsilon, config.epsilon);
        assert_eq!(p.tau_m, config.tau_m);
        assert_eq!(p.tau_s, config.tau_s);
        assert_eq!(p.flavor, tag);
    }
    // An unknown tag passes through so create() can reject it.
    assert_eq!(l4opt_params_default(7).flavor, 7);
}

#[test]
fn stepping_matches_the_rust_api_bitwise() {
    for tag in [L4_FLAVOR_MOM, L4_FLAVOR_ADAM] {
        let params = l4opt_params_default(tag);
        let handle = create(&params, 3);

        let config = if tag == L4_FLAVOR_ADAM {
            L4Config::adam()
        } else {
            L4Config::mom()
        };
        let mut theta_c = vec![1.0, -2.0, 0.5];
        let mut theta_rs = theta_c.clone();
        let mut state: Option<L4State> = None;

        for step in 1..=500u64 {
            let (loss, grad) = quadratic(&theta_c);
            let status = unsafe {
                l4opt_step(handle, loss, grad.as_ptr(), theta_c.as_mut_ptr(), theta_c.len())
            };
            assert_eq!(status, L4Status::Ok);

            let (loss_rs, grad_rs) = quadratic(&theta_rs);
            assert_eq!(loss, loss_rs);
            if state.is_none() {
                state = Some(L4State::init(&config, loss_rs).unwrap());
            }
            let record = state
                .as_mut()
                .unwrap()
                .step(&config, loss_rs, &grad_rs, &mut theta_rs)
                .unwrap();

            assert_eq!(theta_c, theta_rs, "flavor {tag} step {step}");
            unsafe {
                assert_eq!(l4opt_last_eta(handle).to_bits(), record.eta.to_bits());
                assert_eq!(l4opt_last_gv(handle).to_bits(), record.gv.to_bits());
                assert_eq!(l4opt_lmin(handle).to_bits(), state.as_ref().unwrap().lmin().to_bits());
                assert_eq!(l4opt_steps(handle), step);
            }
            assert!(unsafe { l4opt_last_gv(handle) } >= 0.0);
        }
        // The adaptive rule closes a few percent of the loss gap per step
        // in its self-tracking regime, so 500 steps on a smooth quadratic
        // must descend by well over two decades.
        let (final_loss, _) = quadratic(&theta_c);
        let initial_loss = 0.5 * (1.0f64 + 4.0 + 0.25);
        assert!(final_loss < 1e-2 * initial_loss, "final loss {final_loss:.3e}");
        unsafe { l4opt_free(handle) };
    }
}

#[test]
fn getters_return_sentinels_before_the_first_step() {
    let params = l4opt_params_default(L4_FLAVOR_MOM);
    let handle = create(&params, 2);
    unsafe {
        assert!(l4opt_last_eta(handle).is_nan());
        assert!(l4opt_last_gv(handle).is_nan());
        assert!(l4opt_lmin(handle).is_nan());
        assert_eq!(l4opt_steps(handle), 0);
        l4opt_free(handle);
    }
    unsafe {
        assert!(l4opt_last_eta(std::ptr::null()).is_nan());
        assert!(l4opt_last_gv(std::ptr::null()).is_nan());
        assert!(l4opt_lmin(std::ptr::null()).is_nan());
        assert_eq!(l4opt_steps(std::ptr::null()), 0);
    }
}

#[test]
fn create_rejects_bad_arguments() {
    let good = l4opt_params_default(L4_FLAVOR_MOM);
    let mut out: *mut L4Handle = std::ptr::null_mut();
    unsafe {
        assert_eq!(l4opt_create(std::ptr::null(), 3, &mut out), L4Status::NullPointer);
        assert_eq!(l4opt_create(&good, 3, std::ptr::null_mut()), L4Status::NullPointer);
        assert_eq!(l4opt_create(&good, 0, &mut out), L4Status::InvalidConfig);

        let mut bad_flavor = good;
        bad_flavor.flavor = 42;
        assert_eq!(l4opt_create(&bad_flavor, 3, &mut out), L4Status::InvalidConfig);

        let mut bad_alpha = good;
        bad_alpha.alpha = -0.1;
        assert_eq!(l4opt_create(&bad_alpha, 3, &mut out), L4Status::InvalidConfig);

        let mut bad_gamma = good;
        bad_gamma.gamma = 1.5;
        assert_eq!(l4opt_create(&bad_gamma, 3, &mut out), L4Status::InvalidConfig);

        // No error path may have produced a handle.
        assert!(out.is_null());
    }
}

#[test]
fn step_rejects_bad_arguments_and_bad_observations() {
    let params = l4opt_params_default(L4_FLAVOR_MOM);
    let handle = create(&params, 3);
    let grad = [0.1, 0.2, 0.3];
    let mut theta = [1.0, 1.0, 1.0];
    unsafe {
        assert_eq!(
            l4opt_step(std::ptr::null_mut(), 1.0, grad.as_ptr(), theta.as_mut_ptr(), 3),
            L4Status::NullPointer
        );
        assert_eq!(
            l4opt_step(handle, 1.0, std::ptr::null(), theta.as_mut_ptr(), 3),
            L4Status::NullPointer
        );
        assert_eq!(
            l4opt_step(handle, 1.0, grad.as_ptr(), std::ptr::null_mut(), 3),
            L4Status::NullPointer
        );
        assert_eq!(
            l4opt_step(handle, 1.0, grad.as_ptr(), theta.as_mut_ptr(), 2),
            L4Status::DimensionMismatch
        );
        // None of the rejected calls may have consumed the first observation.
        assert_eq!(l4opt_steps(handle), 0);

        // Before the first successful step the observation goes through
        // initialization, which classifies any unusable first loss —
        // negative or non-finite — as an invalid loss.
        assert_eq!(
            l4opt_step(handle, -1.0, grad.as_ptr(), theta.as_mut_ptr(), 3),
            L4Status::InvalidLoss
        );
        assert_eq!(
            l4opt_step(handle, f64::NAN, grad.as_ptr(), theta.as_mut_ptr(), 3),
            L4Status::InvalidLoss
        );
        assert_eq!(theta, [1.0, 1.0, 1.0], "rejected observations must not move theta");

        // The handle stays usable after rejected observations.
        assert_eq!(
            l4opt_step(handle, 1.0, grad.as_ptr(), theta.as_mut_ptr(), 3),
            L4Status::Ok
        );
        assert_eq!(l4opt_steps(handle), 1);
        let after_good = theta;

        // Once initialized, a non-finite observation is a divergence.
        assert_eq!(
            l4opt_step(handle, f64::NAN, grad.as_ptr(), theta.as_mut_ptr(), 3),
            L4Status::Diverged
        );
        let bad_grad = [0.1, f64::INFINITY, 0.3];
        assert_eq!(
            l4opt_step(handle, 1.0, bad_grad.as_ptr(), theta.as_mut_ptr(), 3),
            L4Status::Diverged
        );
        assert_eq!(
            l4opt_step(handle, -1.0, grad.as_ptr(), theta.as_mut_ptr(), 3),
            L4Status::InvalidLoss
        );
        assert_eq!(theta, after_good, "diverged observations must not move theta");
        assert_eq!(l4opt_steps(handle), 1);
        l4opt_free(handle);
    }
}

#[test]
fn status_messages_are_non_null_and_distinct() {
    let mut seen = Vec::new();
    for code in 0..=6 {
        let ptr = l4opt_status_message(code);
        assert!(!ptr.is_null());
        let text = unsafe { std::ffi::CStr::from_ptr(ptr) }.to_str().unwrap();
        assert!(!text.is_empty());
        assert!(!seen.contains(&text), "duplicate message for code {code}");
        seen.push(text);
    }
    let unknown = unsafe { std::ffi::CStr::from_ptr(l4opt_status_message(99)) };
    assert_eq!(unknown.to_str().unwrap(), "unknown status");
}

#[test]
fn free_accepts_null() {
    unsafe { l4opt_free(std::ptr::null_mut()) };
}
