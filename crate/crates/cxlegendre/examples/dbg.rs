use cxlegendre::domain::*;
use cxlegendre::fields::*;
use cxlegendre::potentials::*;
use cxlegendre::transforms::*;
use num_complex::Complex64;

fn main() {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let pot = AnalyticPotential::euclidean(1);
    let domain = ChartedDomain::flat_box(vec![c(0.0, 0.0)], vec![1.0], 17).unwrap();
    let ctx = TransformContext::prepare(&pot, &domain).unwrap();
    println!("delta = {}, C = {}, margin = {}", ctx.neighborhood.radius_delta, ctx.neighborhood.convexity_constant, ctx.concavity_margin);
    let recipe = Perturbation::new(
        vec![RecipeTerm::Gaussian { amplitude: 0.05, center: vec![c(0.2, 0.1)], width: 1.0 }],
        &domain,
    ).unwrap();
    let eta = EtaContext::prepare(&recipe, &ctx).unwrap();
    println!("certified = {}", eta.certified);
    let q = ChartPoint::flat(vec![c(-1.0, -1.0)]);
    match diastasis_legendre(&ctx, &eta, &q, None) {
        Ok(s) => println!("ok value {} argmax {:?} disp {}", s.value, s.argmax.z, s.displacement),
        Err(e) => println!("ERR: {e}"),
    }
}
