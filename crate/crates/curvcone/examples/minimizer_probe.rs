use curvcone::bending::*;
use curvcone::conditions::Condition;
use curvcone::geometry::RotSymModel;

fn main() {
    let c = Condition::scal_positive();
    let mk = |m: &RotSymModel, target: RTarget| {
        let k = estimate_constants(m, &c, 0.5).unwrap();
        let p0 = initial_bend(&k).unwrap();
        let p = inductive_bend(&p0, &k, target).unwrap();
        verify_bend(m, &c, &p, &k, 1).unwrap()
    };
    let flat = RotSymModel::flat_point(4).unwrap();
    let sph = RotSymModel::round_sphere_point(1.0, 4).unwrap();
    let pa = mk(&flat, RTarget::Auto);
    let pd = mk(&sph, RTarget::Auto);
    println!("flat auto ln_r = {:.6}, verdict {} minmargin {:.3e} oracle {:.2e}", pa.ln_r_final, pa.verdict, pa.min_margin_scaled, pa.oracle_deviation);
    println!("sph  auto ln_r = {:.6}, verdict {} minmargin {:.3e} oracle {:.2e}", pd.ln_r_final, pd.verdict, pd.min_margin_scaled, pd.oracle_deviation);
    let common = pa.ln_r_final.min(pd.ln_r_final) - 1.0;
    let a = mk(&flat, RTarget::Ln(common));
    let d = mk(&sph, RTarget::Ln(common));
    println!("a: ln_r {:.15e} verdict {}", a.ln_r_final, a.verdict);
    println!("d: ln_r {:.15e} verdict {}", d.ln_r_final, d.verdict);
    println!("join: {:?}", join(&a, &d));
}
