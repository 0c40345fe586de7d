//! Invariants checked over randomly drawn inputs.

use garnier_lab::garnier_okamoto::{extract_go, q12_at};
use garnier_lab::numerics::{fd_derivative, quad_roots, Cx, FdScheme, Mat2, OdeOptions, TPath};
use garnier_lab::poly_garnier::{
    ahat_matrices, bridge_lambda_from_q, generate_pg_state, hamiltonian_hgar, pg_field, to_schlesinger, PGState,
    ThetaPG,
};
use garnier_lab::scenario::{Mode, ScenarioConfig};
use garnier_lab::schlesinger::{
    generate_b_state, integrate_schlesinger, pole_positions, schlesinger_rhs4, shift_normalization, GenOptions,
    Normalization, ShiftDirection, SchlesingerState,
};
use proptest::prelude::*;

fn cx() -> impl Strategy<Value = Cx> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| Cx::new(a, b))
}

fn theta() -> [Cx; 4] {
    [Cx::new(0.3, 0.14), Cx::new(-0.4, 0.33), Cx::new(0.17, -0.2), Cx::new(0.29, 0.11)]
}

fn b_state(seed: u64) -> SchlesingerState {
    generate_b_state(theta(), &GenOptions::default(), seed).unwrap().state
}

fn pg_state(seed: u64) -> PGState {
    let th = ThetaPG::from_free(
        Cx::new(0.3, 0.0),
        Cx::new(-0.2, 0.33),
        Cx::new(0.29, 0.0),
        Cx::new(-0.11, 0.2),
        Cx::new(0.25, -0.17),
    );
    generate_pg_state(th, Cx::new(0.3, 0.2), Cx::new(-0.7, 0.5), 0.8, seed).unwrap()
}

fn spectrum_defect(m: &Mat2, th: Cx) -> f64 {
    let (a, b) = m.eigenvalues();
    (a.norm() + (b - th).norm()).min(b.norm() + (a - th).norm())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn vieta_relations(a in cx(), b in cx(), c in cx()) {
        prop_assume!(a.norm() > 1e-3);
        let (r1, r2) = quad_roots(a, b, c).unwrap();
        let prod = a * r1 * r2;
        let sum = a * (r1 + r2);
        prop_assert!((prod - c).norm() <= 1e-12 * c.norm().max(prod.norm()).max(f64::MIN_POSITIVE));
        prop_assert!((sum + b).norm() <= 1e-12 * (a.norm() * (r1.norm() + r2.norm())).max(b.norm()));
    }

    #[test]
    fn inverse_of_well_conditioned_matrix(a in cx(), b in cx(), c in cx(), d in cx()) {
        let m = Mat2::new(a, b, c, d);
        prop_assume!(m.det().norm() > 1e-2);
        let e = m * m.inverse().unwrap() - Mat2::identity();
        prop_assert!(e.max_abs() < 1e-12 * (1.0 + m.norm().powi(2) / m.det().norm()));
    }

    #[test]
    fn schlesinger_rhs_sums_to_zero(ms in prop::array::uniform4((cx(), cx(), cx())), t1 in cx(), t2 in cx()) {
        let times = pole_positions(t1, t2);
        prop_assume!((0..4).all(|i| (i + 1..4).all(|j| (times[i] - times[j]).norm() > 0.1)));
        let mats = ms.map(|(a, b, c)| Mat2::new(a, b, c, -a));
        // Off-diagonal terms first, then the diagonal one: the order the sum is built in.
        for (i, row) in schlesinger_rhs4(&mats, &times).unwrap().iter().enumerate() {
            let off: Mat2 = (0..4).filter(|&j| j != i).map(|j| row[j]).sum();
            prop_assert_eq!(off + row[i], Mat2::zero());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn q_normalized_sum(seed in any::<u64>(), ti in cx()) {
        let opts = GenOptions { theta_inf: Some(ti), ..GenOptions::default() };
        let s = generate_b_state(theta(), &opts, seed).unwrap().state;
        let q = shift_normalization(&s, ShiftDirection::BtoQ).unwrap();
        prop_assert_eq!(q.norm, Normalization::Q);
        let th = s.theta;
        let sum: Mat2 = q.mats.iter().copied().sum();
        prop_assert!((-sum - Mat2::diag(th.chi, th.chi + th.theta_inf - 1.0)).norm() < 1e-10);
    }

    #[test]
    fn extracted_lambda_annihilate_q12(seed in any::<u64>()) {
        let q = shift_normalization(&b_state(seed), ShiftDirection::BtoQ).unwrap();
        let g = extract_go(&q).unwrap();
        for l in g.lambda {
            prop_assert!(q12_at(&q, l).norm() < 1e-11);
        }
    }

    #[test]
    fn linearized_residues_have_rigid_spectra(seed in any::<u64>(), u in cx()) {
        prop_assume!(u.norm() > 0.1);
        let s = pg_state(seed);
        let a = ahat_matrices(&s).unwrap();
        let th = s.theta;
        for (m, e) in [(a.a0, th.th0), (a.a1, th.th1), (a.at1, th.tht1), (a.at2, th.tht2)] {
            prop_assert!(spectrum_defect(&m, e) < 1e-10);
        }
        let sch = to_schlesinger(&s, u).unwrap();
        prop_assert!(sch.constraint_defect() < 1e-10);
    }

    #[test]
    fn bridge_matches_extraction(seed in any::<u64>(), u in cx()) {
        prop_assume!(u.norm() > 0.1);
        let s = pg_state(seed);
        let g = extract_go(&to_schlesinger(&s, u).unwrap()).unwrap();
        let (l1, l2) = bridge_lambda_from_q(s.q[0], s.q[1], s.t1, s.t2).unwrap();
        prop_assert!((l1 - g.lambda[0]).norm() < 1e-8 && (l2 - g.lambda[1]).norm() < 1e-8);
    }

    #[test]
    fn explicit_rhs_are_hamiltonian_partials(seed in any::<u64>()) {
        let s = pg_state(seed);
        let f = pg_field(&s).unwrap();
        for (i, d) in [(1, f.d_t1), (2, f.d_t2)] {
            for k in 0..4 {
                let (var, sign) = if k < 2 { (k + 2, 1.0) } else { (k - 2, -1.0) };
                let partial = fd_derivative(
                    |z| {
                        let mut v = s.vector();
                        v[var] = z;
                        hamiltonian_hgar(i, &s.with_vector(s.t1, s.t2, &v))
                    },
                    s.vector()[var],
                    &FdScheme::default(),
                )
                .unwrap()
                    * sign;
                prop_assert!((partial - d[k]).norm() < 1e-8 * (1.0 + d[k].norm()));
            }
        }
    }

    #[test]
    fn config_json_roundtrip(m in 0usize..Mode::ALL.len(), seed in any::<u64>()) {
        let cfg = ScenarioConfig::new(Mode::ALL[m], seed);
        let back = ScenarioConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn tighter_tolerance_barely_moves_endpoint(seed in any::<u64>(), d1 in cx(), d2 in cx()) {
        let s = b_state(seed);
        let end = [s.t1 + d1 * 0.1, s.t2 + d2 * 0.1];
        let path = TPath::segment([s.t1, s.t2], end, 0.05);
        prop_assume!(path.validate(&garnier_lab::numerics::Locus::time_singularities()).is_ok());
        let rtol = 1e-10;
        let run = |r: f64| integrate_schlesinger(&s, &path, &OdeOptions::default().with_rtol(r)).unwrap();
        let (a, b) = (run(rtol), run(rtol / 10.0));
        let (a, b) = (&a.end().state, &b.end().state);
        let scale: f64 = a.mats.iter().map(|m| m.norm()).fold(0.0, f64::max);
        for (ma, mb) in a.mats.iter().zip(&b.mats) {
            prop_assert!((*ma - *mb).norm() < 50.0 * rtol * scale);
        }
    }
}
