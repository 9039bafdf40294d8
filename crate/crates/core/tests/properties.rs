//! Randomized invariants across the library: norm orderings, exactness of
//! the conjugate-pair bookkeeping, isometries of the transport operators,
//! mass accounting of the banded solver, and structural facts about the
//! eigensolver. Anything a module promises in its docs unconditionally
//! should survive arbitrary (valid) inputs here.

use num_complex::Complex64;
use proptest::prelude::*;
use std::collections::BTreeMap;

use shearlab_core::confined::{
    lowest_eigenpairs, parity_split, reconstruct, substitute, Grid1D, Operator1D, Parity,
    Profile1D,
};
use shearlab_core::mixer::{h1_closed_form, transport_steady, MixerState};
use shearlab_core::pulsed::{
    canonical_phase, heat_pulse, log_l2_ratio, pullback, LatticeMap, ModeLog, PulsedState,
};
use shearlab_core::spectral::{
    convolve_capped, single_xmode_assemble, single_xmode_norms, SpectralField2D, Wavevector,
    YSpectrum,
};
use shearlab_core::viscous::{advection_step_steady, diffusion_step, SolverConfig};

fn arb_yspectrum(max_l: i64) -> impl Strategy<Value = YSpectrum> {
    prop::collection::btree_map(0..=max_l, (-1.0f64..1.0, -1.0f64..1.0), 1..5).prop_map(
        |entries| {
            YSpectrum::from_half_pairs(entries.into_iter().map(|(l, (re, im))| {
                (l, Complex64::new(re, if l == 0 { 0.0 } else { im }))
            }))
            .expect("strategy emits valid half pairs")
        },
    )
}

/// Mean-free fields within a +-4 band, one entry per conjugate pair.
fn arb_field() -> impl Strategy<Value = SpectralField2D> {
    prop::collection::btree_map(
        (0i64..=4, -4i64..=4),
        (-1.0f64..1.0, -1.0f64..1.0),
        1..6,
    )
    .prop_map(|entries| {
        let mut field = SpectralField2D::new(8);
        for ((kx, ky), (re, im)) in entries {
            // Canonicalize to the kx > 0 half plane (or ky > 0 on the axis)
            // and skip the mean mode; insert_pair adds the mirror itself.
            if kx == 0 && ky <= 0 {
                continue;
            }
            let _ = field.insert_pair(Wavevector::new(kx, ky), Complex64::new(re, im));
        }
        field
    })
    .prop_filter("field must be nonzero", |f| !f.is_zero())
}

fn arb_pulsed() -> impl Strategy<Value = PulsedState> {
    prop::collection::btree_map(
        (1i64..=6, -6i64..=6),
        (-20.0f64..0.0, 0.0f64..6.28),
        1..5,
    )
    .prop_map(|entries| {
        PulsedState::from_half_modes(entries.into_iter().map(|((kx, ky), (log_mag, phase))| {
            (Wavevector::new(kx, ky), ModeLog { log_mag, phase })
        }))
        .expect("kx >= 1 keeps the half set clash-free")
    })
}

/// Random word in the standard shear and cat generators; any product of
/// unimodular maps is unimodular.
fn arb_unimodular() -> impl Strategy<Value = LatticeMap> {
    prop::collection::vec(0..2usize, 1..5).prop_map(|word| {
        let gens = [LatticeMap::shear_standard(), LatticeMap::cat_standard()];
        let mut m = [[1i64, 0], [0, 1]];
        for idx in word {
            let g = gens[idx].entries();
            let mut next = [[0i64; 2]; 2];
            for (i, row) in next.iter_mut().enumerate() {
                for (j, cell) in row.iter_mut().enumerate() {
                    *cell = m[i][0] * g[0][j] + m[i][1] * g[1][j];
                }
            }
            m = next;
        }
        LatticeMap::new(m).expect("products of unimodular maps stay unimodular")
    })
}

proptest! {
    #[test]
    fn sobolev_norms_are_ordered(field in arb_field()) {
        let l2 = field.norm_l2();
        let h1 = field.norm_sobolev(1.0);
        let hneg1 = field.norm_sobolev(-1.0);
        // Mean-free fields have |k| >= 1, so the homogeneous |k|^-2 weight
        // is <= 1 <= the inhomogeneous 1 + |k|^2 weight.
        prop_assert!(hneg1 <= l2 * (1.0 + 1e-12));
        prop_assert!(l2 <= h1 * (1.0 + 1e-12));
        prop_assert!((field.norm_sobolev(0.0) - l2).abs() <= 1e-12 * l2);
        let mix = field.mixing_scale().unwrap();
        prop_assert!(mix > 0.0 && mix <= 1.0 + 1e-12);
    }

    #[test]
    fn stored_fields_stay_conjugate_symmetric(field in arb_field()) {
        for (k, a) in field.modes() {
            let mirror = field.amplitude(k.neg());
            prop_assert_eq!(mirror, a.conj(), "pair at {:?}", k);
        }
    }

    #[test]
    fn convolution_is_symmetric_and_conjugate_exact(
        a in arb_yspectrum(5),
        b in arb_yspectrum(5),
    ) {
        let ab = convolve_capped(&a, &b, 1 << 12).unwrap();
        let ba = convolve_capped(&b, &a, 1 << 12).unwrap();
        for (l, c) in ab.iter() {
            prop_assert_eq!(ab.coeff(-l), c.conj(), "mirror at l = {}", l);
            prop_assert!((ba.coeff(l) - c).norm() <= 1e-12 * (1.0 + c.norm()));
            if l == 0 {
                prop_assert_eq!(c.im, 0.0, "zero mode must stay exactly real");
            }
        }
    }

    #[test]
    fn mixer_norms_agree_with_the_assembled_field(
        f in arb_yspectrum(4),
        g in arb_yspectrum(4),
    ) {
        prop_assume!(!(f.is_zero() && g.is_zero()));
        let state = MixerState::new(f.clone(), g.clone()).unwrap();
        let field = single_xmode_assemble(&f, &g);
        prop_assert!((state.l2 - field.norm_l2()).abs() <= 1e-12 * state.l2);
        prop_assert!((state.h1 - field.norm_sobolev(1.0)).abs() <= 1e-12 * state.h1);
        prop_assert!((state.hneg1 - field.norm_sobolev(-1.0)).abs() <= 1e-12 * state.l2);
        let norms = single_xmode_norms(&f, &g);
        prop_assert!((norms.l2 - state.l2).abs() <= 1e-13 * state.l2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transport_is_an_isometry_with_a_consistent_h1(
        f in arb_yspectrum(3),
        g in arb_yspectrum(3),
        k0 in 1i64..6,
        t in 0.05f64..1.5,
    ) {
        prop_assume!(!(f.is_zero() && g.is_zero()));
        let state = MixerState::new(f, g).unwrap();
        let moved = transport_steady(&state, k0, t).unwrap();
        prop_assert!(
            (moved.l2 - state.l2).abs() <= 1e-11 * state.l2,
            "transport broke the L^2 isometry: {} vs {}",
            moved.l2,
            state.l2
        );
        let closed = h1_closed_form(&state, k0, t);
        prop_assert!(
            (moved.h1 - closed).abs() <= 1e-10 * closed.max(state.l2),
            "H^1 routes disagree: direct {} vs closed form {}",
            moved.h1,
            closed
        );
    }

    #[test]
    fn diffusion_decays_and_preserves_structure(
        field in arb_field(),
        mu in 0.1f64..3.0,
        dt in 0.01f64..1.0,
    ) {
        let after = diffusion_step(&field, mu, dt);
        prop_assert!(after.norm_l2() < field.norm_l2());
        // The slowest mode bounds the decay from below.
        let floor = field.norm_l2() * (-mu * dt * 32.0).exp();
        prop_assert!(after.norm_l2() >= floor * 0.99);
        for (k, a) in after.modes() {
            prop_assert_eq!(after.amplitude(k.neg()), a.conj());
        }
    }

    #[test]
    fn advection_accounts_for_every_drop_of_mass(
        field in arb_field(),
        u in arb_yspectrum(3),
        dt in 0.05f64..0.3,
    ) {
        prop_assume!(u.sup_bound() > 0.0);
        // The band-edge canary is deliberately out of scope here (random
        // shears at band 8 can brush it); the subject is the mass ledger.
        let cfg = SolverConfig { band: 8, tail_tol: 0.5, ..SolverConfig::default() };
        let before_sq = field.norm_l2().powi(2);
        let after = advection_step_steady(&field, &u, dt, &cfg).unwrap();
        let after_sq = after.norm_l2().powi(2) + after.dropped_l2_sq();
        prop_assert!(
            (after_sq - before_sq).abs() <= 1e-10 * before_sq,
            "mass ledger leaked: {} vs {}",
            after_sq,
            before_sq
        );
        for (k, a) in after.modes() {
            prop_assert_eq!(after.amplitude(k.neg()), a.conj());
            prop_assert!(!k.is_mean(), "advection cannot create a mean");
        }
    }
}

proptest! {
    #[test]
    fn pullback_relabels_without_touching_magnitudes(
        state in arb_pulsed(),
        map in arb_unimodular(),
    ) {
        let moved = pullback(&state, &map);
        prop_assert_eq!(moved.mode_count(), state.mode_count());
        // The multiset of (log magnitude, phase) payloads is untouched.
        let mut before: Vec<(f64, f64)> =
            state.modes().map(|(_, m)| (m.log_mag, m.phase)).collect();
        let mut after: Vec<(f64, f64)> =
            moved.modes().map(|(_, m)| (m.log_mag, m.phase)).collect();
        before.sort_by(|a, b| a.partial_cmp(b).unwrap());
        after.sort_by(|a, b| a.partial_cmp(b).unwrap());
        prop_assert_eq!(before, after);
        // L^2 sees only the magnitudes, so the ratio is zero to rounding.
        prop_assert!(log_l2_ratio(&state, &moved).abs() <= 1e-13);
    }

    #[test]
    fn heat_pulse_strictly_cools(state in arb_pulsed(), tau in 0.01f64..3.0) {
        let cooled = heat_pulse(&state, tau);
        prop_assert!(cooled.log_l2() < state.log_l2());
        // Every mode has |k|^2 >= 1 here, so the drop is at least tau.
        prop_assert!(log_l2_ratio(&state, &cooled) <= -tau + 1e-12);
        let idle = heat_pulse(&state, 0.0);
        prop_assert!(log_l2_ratio(&state, &idle) == 0.0);
    }

    #[test]
    fn canonical_phase_lands_in_the_principal_window(phi in -1e6f64..1e6) {
        let p = canonical_phase(phi);
        prop_assert!((0.0..std::f64::consts::TAU).contains(&p));
        // Idempotent once canonical.
        prop_assert_eq!(canonical_phase(p), p);
    }

    #[test]
    fn parity_split_resums_and_mirrors(values in prop::collection::vec(-1.0f64..1.0, 31)) {
        let grid = Grid1D::new(3.0, 31).unwrap();
        let m = Profile1D::new(grid, values).unwrap();
        let (even, odd) = parity_split(&m);
        let n = grid.len();
        for i in 0..n {
            let scale = m.values()[i].abs().max(m.values()[n - 1 - i].abs());
            prop_assert!(
                (even.values()[i] + odd.values()[i] - m.values()[i]).abs() <= 1e-15 * scale
            );
            prop_assert_eq!(even.values()[i], even.values()[n - 1 - i]);
            prop_assert_eq!(odd.values()[i], -odd.values()[n - 1 - i]);
        }
    }

    #[test]
    fn substitution_round_trips(values in prop::collection::vec(-1.0f64..1.0, 51)) {
        let grid = Grid1D::new(5.0, 51).unwrap();
        let l0 = Profile1D::new(grid, values).unwrap();
        let back = reconstruct(&substitute(&l0).unwrap());
        for (a, b) in back.values().iter().zip(l0.values()) {
            prop_assert!((a - b).abs() <= 1e-13 * b.abs().max(1e-300));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn eigenpairs_keep_their_structural_promises(
        offset in 0.0f64..1.0,
        stiffness in 0.5f64..2.0,
    ) {
        let grid = Grid1D::new(8.0, 401).unwrap();
        let op = Operator1D::with_potential(grid, |z| offset + stiffness * z * z, "poly");
        let even = lowest_eigenpairs(&op, Parity::Even, 2).unwrap();
        let odd = lowest_eigenpairs(&op, Parity::Odd, 2).unwrap();
        // Sturm-Liouville interlacing: even0 < odd0 < even1 < odd1.
        prop_assert!(even[0].0 < odd[0].0);
        prop_assert!(odd[0].0 < even[1].0);
        prop_assert!(even[1].0 < odd[1].0);
        // All above the potential minimum.
        prop_assert!(even[0].0 > offset);
        let c = grid.center();
        for (lambda, phi) in even.iter().chain(odd.iter()) {
            prop_assert!((phi.norm_l2() - 1.0).abs() < 1e-10);
            // Residual of the stencil eigen equation away from the walls.
            let v = phi.values();
            for i in 1..grid.len() - 1 {
                let r = op.offdiag * (v[i - 1] + v[i + 1]) + op.diag[i] * v[i] - lambda * v[i];
                prop_assert!(r.abs() < 1e-6 * (1.0 + lambda.abs()));
            }
        }
        prop_assert!(even[0].1.values()[c] > 0.0);
        prop_assert!(odd[0].1.values()[c] == 0.0 && odd[0].1.values()[c + 1] > 0.0);
    }
}

/// The BTreeMap strategies above can only emit keys once, but duplicate
/// rejection is part of the constructor contracts; pin it directly.
#[test]
fn duplicate_modes_are_rejected() {
    let dup = YSpectrum::from_half_pairs([
        (2, Complex64::new(1.0, 0.0)),
        (2, Complex64::new(0.5, 0.0)),
    ]);
    assert!(dup.is_err());
    let mut field = SpectralField2D::new(4);
    field
        .insert_pair(Wavevector::new(1, 1), Complex64::new(1.0, 0.0))
        .unwrap();
    assert!(field
        .insert_pair(Wavevector::new(-1, -1), Complex64::new(1.0, 0.0))
        .is_err());
}

/// Conjugate mirrors in `from_half_modes` against hand-built full sets.
#[test]
fn pulsed_half_and_full_constructors_agree() {
    let half = PulsedState::from_half_modes([(
        Wavevector::new(2, -3),
        ModeLog { log_mag: -1.5, phase: 0.75 },
    )])
    .unwrap();
    let mut full = BTreeMap::new();
    for (k, m) in half.modes() {
        full.insert(k, m);
    }
    let rebuilt = PulsedState::from_modes(full, 0).unwrap();
    assert_eq!(rebuilt, half);
}
