use std::sync::OnceLock;

use proptest::prelude::*;

use hubmagic::dimer::{double_occupancy, local_rdm, thermal_state, DimerParams};
use hubmagic::magic::{sre, sre_from_expectations};
use hubmagic::pauli::{majorana_expectations, pauli_decompose};
use hubmagic::quench::{evolve_dephased, overlap_coefficients};
use hubmagic::scan::{parallel_map, zero_crossings, Catalogs, GridSpec};
use hubmagic::stabilizer::{build_a_matrix, enumerate_stabilizer_states, render_stabilizer_projector};
use hubmagic::{AMatrix, CMatrix, CVector, MagicContext, PauliString, QuantumState, QuenchSpec, C64};

fn catalog(n: usize) -> &'static AMatrix {
    static CATALOGS: OnceLock<Vec<AMatrix>> = OnceLock::new();
    &CATALOGS.get_or_init(|| (1..=3).map(|k| build_a_matrix(k).unwrap()).collect())[n - 1]
}

fn ket(amps: &[(f64, f64)]) -> CVector {
    let v = CVector::from_iterator(amps.len(), amps.iter().map(|&(re, im)| C64::new(re, im)));
    let n = v.norm();
    v / C64::new(n, 0.0)
}

fn amps(dim: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim)
        .prop_filter("nonzero", |v| v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-2)
}

fn mixed(dim: usize) -> impl Strategy<Value = QuantumState> {
    (amps(dim), amps(dim), 0.0f64..1.0).prop_map(|(a, b, w)| {
        let (a, b) = (ket(&a), ket(&b));
        let m: CMatrix = &a * a.adjoint() * C64::new(w, 0.0) + &b * b.adjoint() * C64::new(1.0 - w, 0.0);
        QuantumState::new(m).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pauli_product_matches_matrix_product(a in 0usize..256, b in 0usize..256) {
        let p = PauliString::from_index(a, 4).unwrap();
        let q = PauliString::from_index(b, 4).unwrap();
        let dense = p.matrix() * q.matrix();
        prop_assert!((p.multiply(&q).matrix() - dense).norm() < 1e-12);
        prop_assert_eq!(p.commutes_with(&q), q.commutes_with(&p));
    }

    #[test]
    fn single_qubit_robustness_is_the_bloch_l1_norm(r in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)) {
        let len = (r.0 * r.0 + r.1 * r.1 + r.2 * r.2).sqrt();
        let s = if len > 1.0 { 1.0 / len } else { 1.0 };
        let (x, y, z) = (r.0 * s, r.1 * s, r.2 * s);
        let m = CMatrix::from_row_slice(2, 2, &[
            C64::new(0.5 * (1.0 + z), 0.0), C64::new(0.5 * x, -0.5 * y),
            C64::new(0.5 * x, 0.5 * y), C64::new(0.5 * (1.0 - z), 0.0),
        ]);
        let rho = QuantumState::new(m).unwrap();
        let got = MagicContext::new(catalog(1)).robustness(&rho).unwrap();
        prop_assert!((got - (x.abs() + y.abs() + z.abs()).max(1.0)).abs() < 1e-7);
    }

    #[test]
    fn robustness_is_convex_and_at_least_one(a in mixed(4), b in mixed(4), l in 0.0f64..1.0) {
        let mut ctx = MagicContext::new(catalog(2));
        let ra = ctx.robustness(&a).unwrap();
        let rb = ctx.robustness(&b).unwrap();
        let rm = ctx.robustness(&QuantumState::mixture(&[(l, &a), (1.0 - l, &b)]).unwrap()).unwrap();
        prop_assert!(ra >= 1.0 - 1e-9 && rb >= 1.0 - 1e-9 && rm >= 1.0 - 1e-9);
        prop_assert!(rm <= l * ra + (1.0 - l) * rb + 1e-7);
    }

    #[test]
    fn sre_is_nonincreasing_in_order_and_frame_independent(v in amps(8)) {
        let psi = QuantumState::from_ket(&ket(&v)).unwrap();
        let orders = [0.5, 1.0, 2.0, 3.0, 5.0];
        let values: Vec<f64> = orders.iter().map(|&a| sre(&psi, a).unwrap()).collect();
        prop_assert!(values.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        prop_assert!(values.iter().all(|&m| m >= -1e-12));
        let majorana = majorana_expectations(&psi);
        for (k, &a) in orders.iter().enumerate() {
            prop_assert!((sre_from_expectations(&majorana, 3, a) - values[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn stabilizer_states_have_no_magic(k in 0usize..1080) {
        let tab = &enumerate_stabilizer_states(3).unwrap()[k];
        let rho = render_stabilizer_projector(tab);
        for alpha in [0.5, 1.0, 2.0] {
            prop_assert!(sre(&rho, alpha).unwrap().abs() < 1e-12);
        }
        prop_assert!((MagicContext::new(catalog(3)).robustness(&rho).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn parseval_holds(rho in mixed(8)) {
        let b = pauli_decompose(&rho);
        prop_assert!((b.parseval_purity() - rho.purity()).abs() < 1e-12);
    }

    #[test]
    fn thermal_site_states_carry_no_magic(u in 0.0f64..50.0, t in 0.0f64..20.0) {
        let rho = thermal_state(&DimerParams::new(1.0, u).unwrap().with_temperature(t).unwrap()).unwrap();
        let d = double_occupancy(&rho).unwrap();
        prop_assert!((0.0..=0.5).contains(&d));
        let rdm = local_rdm(&rho).unwrap();
        prop_assert_eq!(MagicContext::new(catalog(2)).log_free_robustness(&rdm).unwrap(), 0.0);
    }

    #[test]
    fn quench_overlaps_are_normalised(ui in 0.0f64..200.0, uf in 0.0f64..200.0, t in 0.1f64..5.0) {
        let (a, b) = overlap_coefficients(ui, uf, t).unwrap();
        prop_assert!((a * a + b * b - 1.0).abs() < 1e-12);
        let spec = QuenchSpec::new(ui, uf, t, 0.7).unwrap();
        let rho = evolve_dephased(&spec, 3.0).unwrap();
        prop_assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn crossings_lie_inside_their_coarse_bracket(c in 0.01f64..0.99, n in 3usize..30, tol in 1e-6f64..1e-2) {
        let found = zero_crossings(|x| Ok(if x < c { 1.0 } else { 0.0 }), 0.0, 1.0, n, tol, 1e-8).unwrap();
        prop_assert_eq!(found.len(), 1);
        let x = found[0];
        prop_assert!(x.coarse_lo <= x.lo && x.hi <= x.coarse_hi);
        prop_assert!(x.lo <= c && c <= x.hi + 1e-15 && x.hi - x.lo <= tol);
    }

    #[test]
    fn grids_round_trip(min in 0.01f64..10.0, span in 0.1f64..100.0, n in 2usize..200, log in any::<bool>()) {
        let g = GridSpec { min, max: min + span, points: n, log };
        let back: GridSpec = g.to_string().parse().unwrap();
        prop_assert_eq!(back, g);
        let v = g.values();
        prop_assert_eq!(v.len(), n);
        prop_assert!(v.windows(2).all(|w| w[1] > w[0]));
        prop_assert_eq!(v[0], min);
        prop_assert_eq!(v[n - 1], min + span);
    }
}

#[test]
fn parallel_map_order_is_independent_of_worker_count() {
    let catalogs = Catalogs { dimer: catalog(2).clone(), site: catalog(1).clone() };
    let points: Vec<f64> = (0..37).map(|k| 0.13 * k as f64).collect();
    let run = |workers| {
        parallel_map(&points, workers, &catalogs, 1e-8, |ws, &x| {
            let rho = QuantumState::maximally_mixed(1);
            (x, ws.site.robustness(&rho).unwrap())
        })
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(64));
    assert!(one.iter().zip(&points).all(|((x, _), p)| x == p));
}
