use super::*;
use crate::expr::parse_expr;
use std::f64::consts::PI;

fn field(src: &str, declared: f64, period: f64, scale: f64) -> CircleField {
    let f = PeriodicFunction::new(parse_expr(src).unwrap(), declared).unwrap();
    CircleField::new(Arc::new(f), period, scale).unwrap()
}

/// Closed form for the family integral, derived by differentiating the
/// regularized integrand in b: dμ/db = -∫ dy/(1+b sin y)² = -2π(1-b²)^{-3/2},
/// hence μ(X_{f_b,2π}) = -2πb/√(1-b²). Cross-checked against the literal
/// ε-limit by the brute-force oracle below.
fn mu_cp_closed(b: f64) -> f64 {
    -2.0 * PI * b / (1.0 - b * b).sqrt()
}

#[test]
fn mu_of_sine_vanishes() {
    // sin(y+π) = -sin(y) forces μ = -μ.
    let x = field("sin(y)", 2.0 * PI, 2.0 * PI, 1.0);
    assert!(x.mu().unwrap().abs() < 1e-9);
}

#[test]
fn mu_scales_and_covers() {
    let x1 = field("sin(y)*(1+0.2*sin(y))", 2.0 * PI, 2.0 * PI, 1.0);
    let mu1 = x1.mu().unwrap();
    // double cover doubles mu
    let x2 = field("sin(y)*(1+0.2*sin(y))", 2.0 * PI, 4.0 * PI, 1.0);
    assert!((x2.mu().unwrap() - 2.0 * mu1).abs() <= 1e-12 * mu1.abs());
    // scaling the field divides mu
    let x4 = x1.rescaled(4.0).unwrap();
    assert!((x4.mu().unwrap() - mu1 / 4.0).abs() <= 1e-12 * mu1.abs());
    // 4·sin still has mu 0
    let x = field("4*sin(y)", 2.0 * PI, 2.0 * PI, 1.0);
    assert!(x.mu().unwrap().abs() < 1e-9);
}

#[test]
fn mu_matches_closed_form_family() {
    for &b in &[0.07, 0.2, -0.5, 0.3] {
        let x = CircleField::new(Arc::new(cp_profile(b).unwrap()), 2.0 * PI, 1.0).unwrap();
        let got = x.mu().unwrap();
        let want = mu_cp_closed(b);
        assert!((got - want).abs() < 1e-9, "b={b}: got {got}, want {want}");
    }
}

#[test]
fn mu_bruteforce_agrees() {
    let eps = [1e-2, 1e-3, 1e-4, 1e-5];
    let x = field("sin(y)", 2.0 * PI, 2.0 * PI, 1.0);
    assert!(x.mu_bruteforce(&eps).unwrap().abs() < 1e-6);

    let x = field("sin(y)*(1+0.3*sin(y))", 2.0 * PI, 2.0 * PI, 1.0);
    let direct = x.mu().unwrap();
    let brute = x.mu_bruteforce(&eps).unwrap();
    assert!((direct - brute).abs() < 1e-6, "direct {direct} brute {brute}");
    assert!((direct - mu_cp_closed(0.3)).abs() < 1e-9);
}

#[test]
fn bad_eps_sequences_rejected() {
    let x = field("sin(y)", 2.0 * PI, 2.0 * PI, 1.0);
    assert!(matches!(x.mu_bruteforce(&[1e-2]), Err(FieldError::BadEpsSequence(_))));
    assert!(matches!(
        x.mu_bruteforce(&[1e-5, 1e-4, 1e-3, 1e-2]),
        Err(FieldError::BadEpsSequence(_))
    ));
    assert!(matches!(
        x.mu_bruteforce(&[2.0, 1.0, 0.5, 0.25]),
        Err(FieldError::BadEpsSequence(_))
    ));
}

#[test]
fn invariant_list_examples() {
    let l = field("sin(y)", 2.0 * PI, 2.0 * PI, 1.0).invariant_list().unwrap();
    assert_eq!(l.n, 2);
    assert!((l.lambdas[0] - 1.0).abs() < 1e-9 && (l.lambdas[1] + 1.0).abs() < 1e-9);
    assert!(l.mu.abs() < 1e-9);

    let l4 = field("sin(y)", 2.0 * PI, 2.0 * PI, 4.0).invariant_list().unwrap();
    assert_eq!(l4.n, 2);
    assert!((l4.lambdas[0] - 4.0).abs() < 1e-9 && (l4.lambdas[1] + 4.0).abs() < 1e-9);

    let lc = field("sin(y)", 2.0 * PI, 4.0 * PI, 1.0).invariant_list().unwrap();
    assert_eq!(lc.n, 4);
    let want = [1.0, -1.0, 1.0, -1.0];
    for (got, want) in lc.lambdas.iter().zip(want) {
        assert!((got - want).abs() < 1e-9);
    }
}

#[test]
fn scale_law_full() {
    let x = field("sin(y)*(1+0.2*sin(y))", 2.0 * PI, 2.0 * PI, 1.0);
    let base = x.invariant_list().unwrap();
    for &a in &[2.0, -3.0, 0.5] {
        let l = x.rescaled(a).unwrap().invariant_list().unwrap();
        assert_eq!(l.n, base.n);
        for i in 0..l.n {
            let want = a * base.lambdas[i];
            assert!((l.lambdas[i] - want).abs() <= 1e-9 * want.abs());
        }
        assert!((l.mu - base.mu / a).abs() <= 1e-9 * base.mu.abs());
    }
}

#[test]
fn cover_law_full() {
    let x = field("sin(y)*(1+0.2*sin(y))", 2.0 * PI, 2.0 * PI, 1.0);
    let base = x.invariant_list().unwrap();
    for k in [2u32, 3] {
        let xk = field("sin(y)*(1+0.2*sin(y))", 2.0 * PI, 2.0 * PI * k as f64, 1.0);
        let l = xk.invariant_list().unwrap();
        assert_eq!(l.n, base.n * k as usize);
        for i in 0..l.n {
            assert!((l.lambdas[i] - base.lambdas[i % base.n]).abs() < 1e-9);
        }
        assert!((l.mu - k as f64 * base.mu).abs() <= 1e-9 * base.mu.abs());
    }
}

#[test]
fn telescoping_sum_vanishes() {
    for src in ["sin(y)*(1+0.2*sin(y))", "sin(2*y)+0.3*sin(y)+0.1*cos(y)"] {
        let l = field(src, 2.0 * PI, 2.0 * PI, 1.0).invariant_list().unwrap();
        let mut s = 0.0;
        for i in 0..l.n {
            s += 1.0 / l.lambdas[(i + 1) % l.n] - 1.0 / l.lambdas[i];
        }
        assert!(s.abs() <= 1e-12, "telescoping residual {s} for {src}");
    }
}

#[test]
fn equivalent_scaled_sine() {
    let x = field("sin(y)", 2.0 * PI, 2.0 * PI, 1.0);
    let y = field("4*sin(y)", 2.0 * PI, 2.0 * PI, 1.0);
    let cert = equivalent(&x, &y, true, false).unwrap().unwrap();
    assert!((cert.a - 4.0).abs() < 1e-12);
    assert!(!cert.reversed);
    // without scale freedom the fields differ
    assert!(equivalent(&x, &y, false, false).unwrap().is_none());
}

#[test]
fn equivalent_class_transform() {
    let f = PeriodicFunction::new(parse_expr("sin(y)*(1+0.2*sin(y))").unwrap(), 2.0 * PI).unwrap();
    let x = CircleField::from_function(
        PeriodicFunction::new(parse_expr("sin(y)*(1+0.2*sin(y))").unwrap(), 2.0 * PI).unwrap(),
    )
    .unwrap();
    for (a, b) in [(2.0, 0.3), (-1.5, 0.0), (0.5, 1.1)] {
        let g = f.class_transform(a, b).unwrap();
        let y = CircleField::from_function(g).unwrap();
        let cert = equivalent(&x, &y, true, false)
            .unwrap()
            .unwrap_or_else(|| panic!("no certificate for a={a}, b={b}"));
        assert!((cert.a - a).abs() <= 1e-7 * a.abs(), "a={a}: got {}", cert.a);
    }
}

#[test]
fn equivalent_distinguishes_mu() {
    let x = field("sin(y)", 2.0 * PI, 2.0 * PI, 1.0);
    let y = field("sin(y)*(1+0.2*sin(y))", 2.0 * PI, 2.0 * PI, 1.0);
    // multipliers agree (±1) but μ differs: 0 vs ≈ -1.28
    assert!(equivalent(&x, &y, false, false).unwrap().is_none());
    assert!(equivalent(&x, &y, true, false).unwrap().is_none());
}

#[test]
fn equivalent_reflexive_and_symmetric() {
    let x = field("sin(y)*(1+0.2*sin(y))", 2.0 * PI, 2.0 * PI, 1.0);
    let cert = equivalent(&x, &x, true, true).unwrap().unwrap();
    assert_eq!((cert.a, cert.shift, cert.reversed), (1.0, 0, false));

    let y = x.rescaled(-3.0).unwrap();
    let fwd = equivalent(&x, &y, true, false).unwrap().unwrap();
    let bwd = equivalent(&y, &x, true, false).unwrap().unwrap();
    assert!((fwd.a * bwd.a - 1.0).abs() < 1e-12, "certificates must invert");
}

#[test]
fn reversal_law() {
    let x = field("sin(y)*(1+0.2*sin(y))", 2.0 * PI, 2.0 * PI, 1.0);
    let r = x.reversed().unwrap();
    assert!((r.mu().unwrap() + x.mu().unwrap()).abs() <= 1e-9 * x.mu().unwrap().abs().max(1.0));
    // not diffeomorphic orientation-preserving (μ flips), but reversal matches
    assert!(equivalent(&x, &r, false, false).unwrap().is_none());
    let cert = equivalent(&x, &r, false, true).unwrap().unwrap();
    assert!(cert.reversed);
    // λ values are preserved by reversal
    let lx = x.invariant_list().unwrap();
    let lr = r.invariant_list().unwrap();
    let mut a = lx.lambdas.clone();
    let mut b = lr.lambdas.clone();
    a.sort_by(|p, q| p.partial_cmp(q).unwrap());
    b.sort_by(|p, q| p.partial_cmp(q).unwrap());
    for (p, q) in a.iter().zip(&b) {
        assert!((p - q).abs() < 1e-9);
    }
}

#[test]
fn perturbed_multiplier_breaks_match() {
    let x = field("sin(y)*(1+0.2*sin(y))", 2.0 * PI, 2.0 * PI, 1.0);
    let src = x.invariant_list().unwrap();
    let mut dst = src.clone();
    dst.lambdas[1] *= 1.01;
    assert!(match_lists(&src, &dst, true, true).is_none());
}

#[test]
fn finite_cover_sine_pair() {
    let f = Arc::new(PeriodicFunction::new(parse_expr("sin(y)").unwrap(), 2.0 * PI).unwrap());
    let g = Arc::new(PeriodicFunction::new(parse_expr("sin(2*y)").unwrap(), 2.0 * PI).unwrap());
    let (p, q, cert) = finite_cover_conformal(&f, &g, 64).unwrap().unwrap();
    assert!((p - 4.0 * PI).abs() < 1e-9, "P = {p}");
    assert!((q - 2.0 * PI).abs() < 1e-9, "Q = {q}");
    assert!((cert.a - 2.0).abs() < 1e-9);
    assert_eq!((cert.kf, cert.kg), (2, 1));
}

#[test]
fn finite_cover_self_is_trivial() {
    let f = Arc::new(
        PeriodicFunction::new(parse_expr("sin(y)*(1+0.2*sin(y))").unwrap(), 2.0 * PI).unwrap(),
    );
    let (p, q, cert) = finite_cover_conformal(&f, &f, 64).unwrap().unwrap();
    assert_eq!((cert.kf, cert.kg), (1, 1));
    assert!((cert.a - 1.0).abs() < 1e-12);
    assert!((p - q).abs() < 1e-15);
}

#[test]
fn finite_cover_mu_obstruction() {
    // μ(sin) = 0 at every cover; μ(f_b) = k·μ_b ≠ 0 and matching forces a = 1.
    let f = Arc::new(PeriodicFunction::new(parse_expr("sin(y)").unwrap(), 2.0 * PI).unwrap());
    let g = Arc::new(
        PeriodicFunction::new(parse_expr("sin(y)*(1+0.2*sin(y))").unwrap(), 2.0 * PI).unwrap(),
    );
    assert!(finite_cover_conformal(&f, &g, 64).unwrap().is_none());
}

#[test]
fn mehidi_examples() {
    let fb = PeriodicFunction::new(parse_expr("sin(y)*(1+0.2*sin(y))").unwrap(), 2.0 * PI).unwrap();
    assert!((is_mehidi(&fb, 1e-8).unwrap().unwrap() - 1.0).abs() < 1e-12);

    let f = PeriodicFunction::new(parse_expr("sin(y)*(1+0.5*cos(y))").unwrap(), 2.0 * PI).unwrap();
    assert!(is_mehidi(&f, 1e-8).unwrap().is_none());
    let mods = multiplier_moduli(&f).unwrap();
    assert_eq!(mods.len(), 2);
    assert!((mods[0] - 1.5).abs() < 1e-8 && (mods[1] - 0.5).abs() < 1e-8);

    let f4 = PeriodicFunction::new(parse_expr("4*sin(y)").unwrap(), 2.0 * PI).unwrap();
    assert!((is_mehidi(&f4, 1e-8).unwrap().unwrap() - 4.0).abs() < 1e-12);
}

#[test]
fn mu_cp_examples() {
    assert!(mu_cp(0.0, 1).unwrap().abs() < 1e-10);
    // odd in b
    for &b in &[0.07, 0.3] {
        let plus = mu_cp(b, 1).unwrap();
        let minus = mu_cp(-b, 1).unwrap();
        assert!((plus + minus).abs() <= 1e-9 * plus.abs().max(1.0));
        assert!((plus - mu_cp_closed(b)).abs() < 1e-9);
    }
    // cover scaling
    let one = mu_cp(0.2, 1).unwrap();
    let two = mu_cp(0.2, 2).unwrap();
    assert!((two - 2.0 * one).abs() <= 1e-12 * one.abs());
    assert!(matches!(mu_cp(1.0 - 1e-7, 1), Err(FieldError::OutOfRange(_))));
}

#[test]
fn match_to_cp_translated_family() {
    // f = sin(y+0.3)(1+0.2 sin(y+0.3)): all invariants are translation
    // invariant, so b = 0.2, k = 1, a = 1.
    let f = Arc::new(
        PeriodicFunction::new(
            parse_expr("sin(y+0.3)*(1+0.2*sin(y+0.3))").unwrap(),
            2.0 * PI,
        )
        .unwrap(),
    );
    let m = match_to_cp(&f, 2.0 * PI).unwrap();
    assert!((m.b - 0.2).abs() < 1e-6, "b = {}", m.b);
    assert_eq!(m.k, 1);
    assert!((m.a - 1.0).abs() < 1e-9);
}

#[test]
fn match_to_cp_clifton_pohl_case() {
    let f = Arc::new(PeriodicFunction::new(parse_expr("4*sin(t)").unwrap(), 2.0 * PI).unwrap());
    let m = match_to_cp(&f, 2.0 * PI).unwrap();
    assert!(m.b.abs() < 1e-9);
    assert_eq!(m.k, 1);
    assert!((m.a - 4.0).abs() < 1e-12);
}

#[test]
fn match_to_cp_cover_of_sine() {
    let f = Arc::new(PeriodicFunction::new(parse_expr("sin(y)").unwrap(), 2.0 * PI).unwrap());
    let m = match_to_cp(&f, 4.0 * PI).unwrap();
    assert!(m.b.abs() < 1e-9);
    assert_eq!(m.k, 2);
    assert!((m.a - 1.0).abs() < 1e-12);
}

#[test]
fn match_to_cp_rejects_non_mehidi() {
    let f = Arc::new(
        PeriodicFunction::new(parse_expr("sin(y)*(1+0.5*cos(y))").unwrap(), 2.0 * PI).unwrap(),
    );
    match match_to_cp(&f, 2.0 * PI) {
        Err(FieldError::NotMehidi { multipliers }) => {
            assert_eq!(multipliers.len(), 2);
            assert!((multipliers[0] - 1.5).abs() < 1e-8);
            assert!((multipliers[1] - 0.5).abs() < 1e-8);
        }
        other => panic!("expected NotMehidi, got {other:?}"),
    }
}

#[test]
fn match_to_cp_no_bracket_when_mu_extreme() {
    // b = 0.99999 lies inside the family but its μ ≈ -1986 is outside the
    // range attained on [-1+δ, 1-δ] with δ = 1e-4 (≈ ±444).
    let f = Arc::new(cp_profile(0.99999).unwrap());
    match match_to_cp(&f, 2.0 * PI) {
        Err(FieldError::NoBracket { target, lo, hi }) => {
            assert!(target < lo, "target {target} not below attained [{lo}, {hi}]");
        }
        other => panic!("expected NoBracket, got {other:?}"),
    }
}

#[test]
fn no_zeros_rejected() {
    let x = field("2+sin(y)", 2.0 * PI, 2.0 * PI, 1.0);
    assert!(matches!(x.mu(), Err(FieldError::NoZeros)));
    assert!(matches!(x.invariant_list(), Err(FieldError::NoZeros)));
}

#[test]
fn non_integer_cover_rejected() {
    let f = PeriodicFunction::new(parse_expr("sin(y)").unwrap(), 2.0 * PI).unwrap();
    assert!(matches!(
        CircleField::new(Arc::new(f), 3.0 * PI, 1.0),
        Err(FieldError::PeriodNotCover { .. })
    ));
}
