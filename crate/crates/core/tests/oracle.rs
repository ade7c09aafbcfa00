use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use superres_core::analytic::qfi_finite_width;
use superres_core::oracle::{qfi_spectral, reduce, reduce_with_order, sld_ansatz, StatePart, DEFAULT_ORDER};
use superres_core::state::assemble_state;
use superres_core::{Aperture, Convention, QuadratureSpec, SourcePair};

const S_GRID: [f64; 7] = [0.01, 0.1, 0.5, 1.0, 2.0, 3.0, 5.0];
const RE_GAMMA: [f64; 6] = [-1.0, -0.98, -0.5, 0.0, 0.5, 1.0];
const DELTA: f64 = 1e-4;

fn compare(ap: &Aperture, s: f64, g: f64, spec: &QuadratureSpec) -> (f64, f64) {
    let src = SourcePair::new(s, DELTA, Complex::new(g, 0.0), 0.01).unwrap();
    let lemma = qfi_finite_width(ap, &src, Convention::Paper, spec).unwrap();
    let st = assemble_state(ap, &src, spec).unwrap();
    let full = reduce(&st, spec, 1e-3 * s.max(0.1)).unwrap_or_else(|e| panic!("s={s} g={g}: {e}"));
    let f_full = qfi_spectral(&full.rho, &full.drho).unwrap();
    assert!(f_full.residual < 1e-9, "residual {} at s={s} g={g}", f_full.residual);
    let single = reduce_with_order(&st, StatePart::SinglePhoton, DEFAULT_ORDER, spec, None).unwrap();
    let f_single = qfi_spectral(&single.rho, &single.drho).unwrap();
    (
        (f_full.qfi / lemma.total - 1.0).abs(),
        (f_single.qfi / lemma.single_photon - 1.0).abs(),
    )
}

#[test]
fn gaussian_grid_matches_lemma_path() {
    let spec = QuadratureSpec::default();
    let ap = Aperture::gaussian(1.0).unwrap();
    for s in S_GRID {
        for g in RE_GAMMA {
            let (full, single) = compare(&ap, s, g, &spec);
            assert!(full < 1e-7, "full rel err {full:e} at s={s}, g={g}");
            assert!(single < 1e-7, "single rel err {single:e} at s={s}, g={g}");
        }
    }
}

#[test]
fn random_mixtures_match_lemma_path() {
    let spec = QuadratureSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let k = rng.gen_range(1..=3);
        let mut comps: Vec<(f64, f64)> = (0..k).map(|_| (rng.gen_range(0.1..1.0), rng.gen_range(0.5..2.0))).collect();
        let total: f64 = comps.iter().map(|c| c.0).sum();
        for c in comps.iter_mut() {
            c.0 /= total;
        }
        let ap = Aperture::gaussian_mixture(comps.clone()).unwrap();
        let s = rng.gen_range(0.1..3.0);
        let g = rng.gen_range(-1.0..1.0);
        let (full, single) = compare(&ap, s, g, &spec);
        assert!(full < 1e-7, "{comps:?}: full rel err {full:e} at s={s}, g={g}");
        assert!(single < 1e-7, "{comps:?}: single rel err {single:e} at s={s}, g={g}");
    }
}

#[test]
fn ansatz_over_grid() {
    let spec = QuadratureSpec::default();
    let ap = Aperture::gaussian(1.0).unwrap();
    for s in [0.1, 1.0, 3.0] {
        for g in [-0.98, -0.5, 0.5, 1.0] {
            let src = SourcePair::new(s, DELTA, Complex::new(g, 0.0), 0.01).unwrap();
            let st = assemble_state(&ap, &src, &spec).unwrap();
            let rep = reduce(&st, &spec, 1e-3).unwrap();
            let a = sld_ansatz(&rep).unwrap();
            let f = qfi_spectral(&rep.rho, &rep.drho).unwrap();
            assert!(a.residual < 1e-9, "s={s}, g={g}: {}", a.residual);
            assert!((a.qfi / f.qfi - 1.0).abs() < 1e-9);
        }
    }
}
