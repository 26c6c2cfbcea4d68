use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;
use thinfilm::evolve::{etd_step, nonlinear_term, StepperConfig};
use thinfilm::kernel::{apply_semigroup, kernel_hat};
use thinfilm::norms::physical_l2_norm;
use thinfilm::random::{random_band_limited, rng_from_seed};
use thinfilm::trajectory::{et_norm_from, read_checkpoint, write_checkpoint};
use thinfilm::{
    sobolev_norm, to_fourier, to_physical, FourierField, PhysicalParams, SobolevIndex, SpectralGrid, Trajectory,
};

fn params() -> impl Strategy<Value = PhysicalParams> {
    (0.01f64..=2.0, 0.0f64..=1.0, 0.0f64..=2.0)
        .prop_map(|(r, k, a)| PhysicalParams::new(r, k, a).unwrap().in_region(1.0).unwrap())
}

fn field(n: usize, kmax: usize) -> impl Strategy<Value = FourierField> {
    (any::<u64>(), 0.1f64..10.0).prop_map(move |(seed, norm)| {
        random_band_limited(
            SpectralGrid::periodic_2pi(n).unwrap(),
            kmax,
            norm,
            SobolevIndex::L2,
            true,
            &mut rng_from_seed(seed),
        )
    })
}

/// Direct convolution oracle for `-1/2 d/dx1 (u^2)` on modes that cannot alias.
fn convolution_oracle(u: &FourierField) -> Array2<Complex64> {
    let g = *u.grid();
    let n = g.n();
    let c = u.coeffs();
    let mut out = Array2::<Complex64>::zeros((n, n));
    for (i1, j1) in (0..n).flat_map(|i| (0..n).map(move |j| (i, j))) {
        let a = c[[i1, j1]];
        for (i2, j2) in (0..n).flat_map(|i| (0..n).map(move |j| (i, j))) {
            let k1 = g.wavenumber(i1) + g.wavenumber(i2);
            let k2 = g.wavenumber(j1) + g.wavenumber(j2);
            if let (Some(i), Some(j)) = (g.index_of(k1), g.index_of(k2)) {
                out[[i, j]] += a * c[[i2, j2]];
            }
        }
    }
    for ((i, j), v) in out.indexed_iter_mut() {
        *v *= Complex64::new(0.0, -0.5 * g.xi(i, j)[0]);
    }
    out
}

#[test]
fn dealiased_nonlinearity_matches_direct_convolution() {
    let cfg = StepperConfig::default();
    for seed in 0..4 {
        let u = random_band_limited(
            SpectralGrid::periodic_2pi(24).unwrap(),
            4,
            1.0,
            SobolevIndex::L2,
            true,
            &mut rng_from_seed(seed),
        );
        let fast = nonlinear_term(&u, &cfg);
        let slow = convolution_oracle(&u);
        let scale = slow.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let err = (fast.coeffs() - &slow).iter().fold(0.0f64, |m, c| m.max(c.norm()));
        assert!(err <= 1e-12 * scale, "seed={seed} err={err}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval_and_round_trip(u in field(16, 7)) {
        let phys = to_physical(&u);
        let l2 = sobolev_norm(&u, SobolevIndex::L2);
        prop_assert!((physical_l2_norm(u.grid(), &phys) - l2).abs() <= 1e-12 * l2);
        let back = to_fourier(*u.grid(), &phys).unwrap();
        prop_assert!(back.sub(&u).unwrap().max_abs() <= 1e-13 * u.max_abs());
    }

    #[test]
    fn norms_increase_with_regularity(u in field(16, 7), s1 in -4.0f64..4.0, ds in 0.0f64..3.0) {
        let lo = sobolev_norm(&u, SobolevIndex::new(s1));
        let hi = sobolev_norm(&u, SobolevIndex::new(s1 + ds));
        prop_assert!(lo <= hi * (1.0 + 1e-14));
    }

    #[test]
    fn semigroup_composes(p in params(), t1 in 0.0f64..1.0, t2 in 0.0f64..1.0,
                          x in -4.0f64..4.0, y in -4.0f64..4.0) {
        let lhs = kernel_hat(t1, [x, y], &p) * kernel_hat(t2, [x, y], &p);
        let rhs = kernel_hat(t1 + t2, [x, y], &p);
        prop_assert!((lhs - rhs).abs() <= 1e-13 * rhs);
    }

    #[test]
    fn semigroup_on_fields(u in field(16, 5), p in params(), t1 in 0.0f64..0.5, t2 in 0.0f64..0.5) {
        let a = apply_semigroup(&apply_semigroup(&u, t1, &p), t2, &p);
        let b = apply_semigroup(&u, t1 + t2, &p);
        prop_assert!(a.sub(&b).unwrap().max_abs() <= 1e-13 * b.max_abs().max(1e-300));
    }

    #[test]
    fn nonlinearity_is_quadratic_and_mean_free(u in field(16, 5), lam in -3.0f64..3.0) {
        let cfg = StepperConfig::default();
        let a = nonlinear_term(&u.scale(lam), &cfg);
        let b = nonlinear_term(&u, &cfg).scale(lam * lam);
        prop_assert!(a.sub(&b).unwrap().max_abs() <= 1e-13 * b.max_abs().max(1e-300));
        prop_assert_eq!(a.mean(), Complex64::new(0.0, 0.0));
        prop_assert!(a.hermitian_defect() <= 1e-15 * a.max_abs().max(1.0));
    }

    #[test]
    fn etd_step_keeps_real_fields_real_and_mean(u in field(16, 5), p in params(), dt in 1e-4f64..0.1) {
        let v = etd_step(&u, dt, &p, &StepperConfig::default()).unwrap();
        prop_assert!(v.hermitian_defect() <= 1e-14 * u.max_abs());
        prop_assert!((v.mean() - u.mean()).norm() <= 1e-15 * u.max_abs().max(1.0));
    }

    #[test]
    fn checkpoint_round_trip(u in field(8, 3), p in params(), dts in prop::collection::vec(1e-3f64..1.0, 0..4)) {
        let mut times = vec![0.0];
        for d in &dts {
            times.push(times.last().unwrap() + d);
        }
        let states = times.iter().map(|&t| apply_semigroup(&u, t, &p)).collect();
        let traj = Trajectory::new(times, states, p).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&traj, &mut buf).unwrap();
        let back = read_checkpoint(&mut buf.as_slice()).unwrap();
        prop_assert_eq!(back, traj);
    }

    #[test]
    fn et_norm_shrinks_with_later_start(u in field(8, 3), t_from in 0.0f64..1.0) {
        let p = PhysicalParams::vertical();
        let times: Vec<f64> = (0..9).map(|k| k as f64 / 8.0).collect();
        let states = times.iter().map(|&t| apply_semigroup(&u, t, &p)).collect();
        let traj = Trajectory::new(times, states, p).unwrap();
        let s = SobolevIndex::new(-1.0);
        let full = et_norm_from(&traj, s, None, 0.0).unwrap();
        let late = et_norm_from(&traj, s, None, t_from).unwrap();
        prop_assert!(late <= full);
    }
}
