//! Property tests of pipeline-level invariants on small grids.

use atrt::fields::{BoundaryGrid, DiscField, FiberField, PolarGrid, C64};
use atrt::gauge::gauge_reduce;
use atrt::geometry::ChordQuadrature;
use atrt::harness::config::ExperimentConfig;
use atrt::harness::io::{read_atf1, write_atf1};
use atrt::harness::phantom::{phantom_make, AttenuationSpec, PhantomKind, PhantomSpec};
use atrt::transport::{xray_attenuated, ForwardConfig};
use proptest::prelude::*;
use std::sync::Arc;

fn small() -> (Arc<PolarGrid>, ForwardConfig) {
    let g = PolarGrid::new(12, 24).unwrap();
    let cfg = ForwardConfig::new(BoundaryGrid::new(32, 32).unwrap(), ChordQuadrature::new(1.0 / 32.0, 4));
    (g, cfg)
}

fn complex() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| C64::new(a, b))
}

fn attenuation() -> impl Strategy<Value = AttenuationSpec> {
    (complex(), complex(), 0.2..1.0f64).prop_map(|(amp, c, sigma)| AttenuationSpec { amp, center: c * 0.5, sigma })
}

fn field(g: &Arc<PolarGrid>, seed: u64, m: i32) -> FiberField {
    let spec = PhantomSpec { kind: PhantomKind::TensorMix { seed }, m, attenuation: AttenuationSpec::zero() };
    phantom_make(&spec, g).unwrap().f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn atf1_round_trips(dims in prop::collection::vec(1usize..5, 0..4), seed in any::<u64>()) {
        let n: usize = dims.iter().product();
        let data: Vec<C64> = (0..n).map(|i| C64::new((seed as f64 + i as f64).sin(), i as f64 * 0.5)).collect();
        let mut buf = Vec::new();
        write_atf1(&mut buf, &dims, &data).unwrap();
        prop_assert_eq!(buf.len(), 8 + 4 * dims.len() + 16 * n);
        let (d, back) = read_atf1(&mut buf.as_slice()).unwrap();
        prop_assert_eq!(d, dims);
        prop_assert_eq!(back, data);
    }

    #[test]
    fn config_text_round_trips(n in 3u32..7, seed in 0u64..50, tol in 1e-4..0.5f64) {
        let mut c = ExperimentConfig::default();
        c.n_beta = 1 << n;
        c.n_alpha = 1 << n;
        c.tol = tol;
        c.phantom.kind = PhantomKind::TensorMix { seed };
        let back = ExperimentConfig::parse(&c.to_key_values().render()).unwrap();
        prop_assert_eq!(back.to_key_values(), c.to_key_values());
    }

    #[test]
    fn forward_transform_is_linear(s1 in 0u64..1000, s2 in 0u64..1000, c in complex(), att in attenuation()) {
        let (g, cfg) = small();
        let a = att.field(&g);
        let (f1, f2) = (field(&g, s1, 2), field(&g, s2, 1));
        let lhs = xray_attenuated(&f1.scale(c).add(&f2), &a, &cfg).data;
        let rhs = xray_attenuated(&f1, &a, &cfg).data.scale(c).add(&xray_attenuated(&f2, &a, &cfg).data);
        prop_assert!(lhs.sub(&rhs).max_abs() <= 1e-12 * (1.0 + lhs.max_abs()));
    }

    #[test]
    fn gauge_representative_has_same_data(seed in 0u64..1000, m in 0i32..4, att in attenuation()) {
        let (_, cfg) = small();
        let g = PolarGrid::new(24, 48).unwrap();
        let a = att.field(&g);
        let f = field(&g, seed, m);
        let rep = gauge_reduce(&f, &a).unwrap();
        let lhs = xray_attenuated(&f, &a, &cfg).data;
        let rhs = xray_attenuated(&rep.reassemble(), &a, &cfg).data;
        prop_assert!(lhs.sub(&rhs).norm_plus() <= 1e-6 * lhs.norm_plus().max(1e-12), "{}", lhs.sub(&rhs).norm_plus());
    }

    #[test]
    fn attenuated_kernel_is_invisible(c0 in complex(), c1 in complex(), att in attenuation()) {
        let (g, cfg) = small();
        let a = att.field(&g);
        let h = FiberField::zeros(&g, 1)
            .with(0, DiscField::analytic(&g, "h0", move |z| (1.0 - z.norm_sqr()) * (z * c0 + 0.3)))
            .unwrap()
            .with(1, DiscField::analytic(&g, "h1", move |z| (1.0 - z.norm_sqr()) * c1))
            .unwrap();
        let f = atrt::complex_calculus::x_op(&h).add(&h.mul_disc(&a));
        let data = xray_attenuated(&f, &a, &cfg).data;
        prop_assert!(data.norm_plus() <= 1e-6 * h.parseval_norm());
    }
}
