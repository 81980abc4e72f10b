use gmsurf::{Params, Patch, Settings, Solver};

fn main() -> Result<(), gmsurf::Error> {
    let p = Params::new(2.0, 1.3)?;
    let w = 0.5 * gmsurf::spectrum::omega_max(&p)?;
    let solver = Solver::new(&p, w, Settings::default(), 40)?;
    let res = solver.solve(&Patch::new(vec![0.05; 40])?)?;
    println!(
        "|R|^2 = {}, |T|^2 = {}, loss = {}",
        res.r.norm_sqr(),
        res.t.norm_sqr(),
        res.d
    );
    Ok(())
}
