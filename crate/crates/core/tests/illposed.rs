use num_complex::Complex64;
use thinfilm::fit::fit_loglog;
use thinfilm::illposed::{
    bilinear_b, d2_flow_exact, d2_flow_exact_pair, d2_flow_quadrature, indicator_data, inflation_norm, inflation_slope,
    path_agreement, support_check, Band, IllposedConfig,
};
use thinfilm::{sobolev_norm, FourierField, PhysicalParams, SobolevIndex};

fn o() -> PhysicalParams {
    PhysicalParams::vertical()
}

fn cfg(s: f64, n_band: f64) -> IllposedConfig {
    IllposedConfig {
        s: SobolevIndex::new(s),
        n_band,
        ..IllposedConfig::default()
    }
}

#[test]
fn indicator_norm_is_order_one() {
    for s in [-2.5, -3.0, -3.5] {
        for nb in [8.0, 16.0, 32.0] {
            let c = cfg(s, nb);
            let v = sobolev_norm(&indicator_data(&c, Band::A1).unwrap(), c.s);
            let w = sobolev_norm(&indicator_data(&c, Band::A2).unwrap(), c.s);
            assert!((0.25..=4.0).contains(&v), "s={s} N={nb}: {v}");
            assert!(w / v > 0.25 && w / v < 4.0, "s={s} N={nb}: {w} vs {v}");
        }
    }
}

#[test]
fn bands_are_disjoint_and_heights_scale() {
    let c = cfg(-3.0, 8.0);
    let v = indicator_data(&c, Band::A1).unwrap();
    let w = indicator_data(&c, Band::A2).unwrap();
    for (a, b) in v.coeffs().iter().zip(w.coeffs().iter()) {
        assert!(a.norm() == 0.0 || b.norm() == 0.0);
    }
    let h8 = c.height().unwrap();
    let h16 = cfg(-3.0, 16.0).height().unwrap();
    assert!((h16 / h8 - 8.0).abs() < 1e-12);
}

#[test]
fn slopes_match_the_inflation_law() {
    let p = o();
    for (s, expect) in [(-2.5, 1.0), (-3.0, 2.0), (-3.5, 3.0)] {
        let r = inflation_slope(&[8.0, 16.0, 32.0], &cfg(s, 16.0), &p).unwrap();
        let slope = r.summary["slope"].as_f64().unwrap();
        assert!((slope - expect).abs() <= 0.3, "s={s} slope={slope}");
        assert!(r.pass);
        assert!(r.summary["ratio_spread"].as_f64().unwrap() <= 4.0);
    }
}

#[test]
fn boundary_index_shows_no_inflation() {
    let p = o();
    assert!(inflation_slope(&[8.0, 16.0, 32.0], &cfg(-2.0, 16.0), &p).is_err());
    let ns = [8.0, 16.0, 32.0];
    let norms: Vec<f64> = ns
        .iter()
        .map(|&nb| inflation_norm(&cfg(-2.0, nb), &p).unwrap())
        .collect();
    let slope = fit_loglog(&ns, &norms).unwrap().slope;
    assert!(slope.abs() <= 0.3, "slope={slope}");
}

#[test]
fn invalid_band_centers_are_skipped() {
    let r = inflation_slope(&[7.9, 8.0, 16.0, 32.0, 64.0], &cfg(-3.0, 16.0), &o()).unwrap();
    assert_eq!(r.rows.len(), 3);
    assert_eq!(r.summary["skipped_N"].as_array().unwrap().len(), 2);
    assert!(inflation_slope(&[8.0, 64.0], &cfg(-3.0, 16.0), &o()).is_err());
}

#[test]
fn quadrature_and_closed_form_agree() {
    let p = o();
    for s in [-2.5, -3.0] {
        for nb in [8.0, 16.0, 32.0] {
            let (rel, _) = path_agreement(&cfg(s, nb), &p).unwrap();
            assert!(rel < 1e-6, "s={s} N={nb} rel={rel}");
        }
    }
}

#[test]
fn output_support_is_confined() {
    let p = o();
    for nb in [8.0, 16.0, 32.0] {
        let c = cfg(-3.0, nb);
        let exact = support_check(&d2_flow_exact(&c, &p).unwrap(), &c).unwrap();
        assert!(exact.pass(), "{exact:?}");
        assert_eq!(exact.nonzero, 49);
        let quad = support_check(&d2_flow_quadrature(&c, &p).unwrap().field, &c).unwrap();
        assert!(quad.pass(), "{quad:?}");
    }
}

#[test]
fn inflation_grows_with_n_and_decays_in_t() {
    let p = o();
    let a = inflation_norm(&cfg(-3.0, 8.0), &p).unwrap();
    let b = inflation_norm(&cfg(-3.0, 16.0), &p).unwrap();
    assert!(b > a);
    let early = inflation_norm(
        &IllposedConfig {
            t: 0.05,
            ..cfg(-3.0, 16.0)
        },
        &p,
    )
    .unwrap();
    let late = inflation_norm(
        &IllposedConfig {
            t: 0.5,
            ..cfg(-3.0, 16.0)
        },
        &p,
    )
    .unwrap();
    assert!(late < early);
}

#[test]
fn bilinear_degenerate_cases() {
    let p = o();
    let c = cfg(-3.0, 8.0);
    let v = indicator_data(&c, Band::A1).unwrap();
    let z = FourierField::zeros(*v.grid());
    assert!(bilinear_b(&v, &z, 0.1, &p, 8, 4).unwrap().field.is_zero());
    assert!(d2_flow_exact_pair(&z, &v, 0.1, &p).unwrap().is_zero());
    let tiny = bilinear_b(&v, &indicator_data(&c, Band::A2).unwrap(), 1e-12, &p, 8, 4).unwrap();
    let big = bilinear_b(&v, &indicator_data(&c, Band::A2).unwrap(), 1e-2, &p, 8, 4).unwrap();
    assert!(sobolev_norm(&tiny.field, c.s) < 1e-6 * sobolev_norm(&big.field, c.s));
}

#[test]
fn bilinear_is_linear_in_first_argument() {
    let p = o();
    let c = cfg(-3.0, 8.0);
    let v = indicator_data(&c, Band::A1).unwrap();
    let w = indicator_data(&c, Band::A2).unwrap();
    let lam = Complex64::new(0.0, 2.5);
    let lv = v.map_modes(|_, x| x * lam);
    let b1 = bilinear_b(&lv, &w, 0.05, &p, 20, 8).unwrap().field;
    let b0 = bilinear_b(&v, &w, 0.05, &p, 20, 8)
        .unwrap()
        .field
        .map_modes(|_, x| x * lam);
    let err = sobolev_norm(&b1.sub(&b0).unwrap(), c.s) / sobolev_norm(&b0, c.s);
    assert!(err < 1e-13, "err={err}");
}
