use ribbons::funcspace::PeriodicFunction;
use ribbons::numerics::quad;
use ribbons::parse_expr;

fn main() {
    let pi = std::f64::consts::PI;
    let f = PeriodicFunction::new(parse_expr("sin(y)").unwrap(), 2.0 * pi).unwrap();
    let zeros = f.find_zeros().unwrap();
    let p0 = f.fundamental_period();
    println!("p0 = {p0:.15}, zeros = {:?}", zeros.iter().map(|z| (z.z, z.lambda)).collect::<Vec<_>>());
    let n = zeros.len();
    let mut total = 0.0;
    for i in 0..n {
        let zi = zeros[i].z;
        let li = zeros[i].lambda;
        let (zi1, li1) = if i + 1 < n { (zeros[i+1].z, zeros[i+1].lambda) } else { (zeros[0].z + p0, zeros[0].lambda) };
        let gap = zi1 - zi;
        let mid = 0.5 * (zi + zi1);
        let integrand = |t: f64| {
            if t <= mid {
                ribbons::circlefield::debug_pole_subtracted(&f, zi, li, t, gap) - 1.0 / (li1 * (t - zi1))
            } else {
                ribbons::circlefield::debug_pole_subtracted(&f, zi1, li1, t, gap) - 1.0 / (li * (t - zi))
            }
        };
        let (v, e) = quad::integrate(&integrand, zi, zi1, 1e-11);
        let logterm = (1.0 / li - 1.0 / li1) * gap.ln();
        println!("strip {i}: quad={v:.15e} (err {e:.2e}) log={logterm:.15e} sum={:.15e}", v + logterm);
        total += v + logterm;
    }
    println!("mu = {total:.6e}");
}
