//! Adaptive Gauss–Kronrod quadrature (7/15 pair), globally adaptive.

/// Kronrod-15 abscissae on [0, 1] side of the symmetric rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

/// Kronrod-15 weights, paired with `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_2,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

/// Gauss-7 weights for the odd-indexed abscissae of `XGK`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Panel budget; bounds the total work on noise-dominated integrands.
const MAX_PANELS: usize = 4096;

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    /// Σ w·|f|, the roundoff scale of the panel.
    resabs: f64,
}

/// One Gauss–Kronrod 7/15 panel on [a, b].
fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);

    let fc = f(mid);
    let mut result_gauss = WG[3] * fc;
    let mut result_kronrod = WGK[7] * fc;
    let mut resabs = WGK[7] * fc.abs();

    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(mid - dx);
        let f2 = f(mid + dx);
        result_kronrod += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            result_gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Panel {
        a,
        b,
        value: result_kronrod * half,
        err: ((result_kronrod - result_gauss) * half).abs(),
        resabs: resabs * half.abs(),
    }
}

/// Adaptive quadrature of `f` over [a, b] to absolute tolerance `abs_tol`.
///
/// Globally adaptive: repeatedly bisects the panel with the largest error
/// estimate until the summed estimate meets the tolerance, the remaining
/// error is at the roundoff floor, or the panel budget is exhausted.
/// Returns the integral and the final error estimate.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64) -> (f64, f64) {
    if a == b {
        return (0.0, 0.0);
    }
    let tol = abs_tol.max(1e-15);
    let mut panels = vec![kronrod_panel(f, a, b)];
    loop {
        let total_err: f64 = panels.iter().map(|p| p.err).sum();
        if total_err <= tol || panels.len() >= MAX_PANELS {
            break;
        }
        // Worst panel, ties broken by position for determinism.
        let mut worst = 0;
        for (i, p) in panels.iter().enumerate() {
            if p.err > panels[worst].err
                || (p.err == panels[worst].err && p.a < panels[worst].a)
            {
                worst = i;
            }
        }
        let p = panels[worst];
        let noise_floor = 100.0 * f64::EPSILON * p.resabs;
        let width_floor = 1e-14 * (p.a.abs() + p.b.abs() + 1.0);
        if p.err <= noise_floor || (p.b - p.a).abs() <= width_floor {
            break;
        }
        let mid = 0.5 * (p.a + p.b);
        panels[worst] = kronrod_panel(f, p.a, mid);
        panels.push(kronrod_panel(f, mid, p.b));
    }
    let value = panels.iter().map(|p| p.value).sum();
    let err = panels.iter().map(|p| p.err).sum();
    (value, err)
}
