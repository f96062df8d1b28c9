use super::{PotentialError, PotentialSpec};
use crate::field::{FieldContext, FieldKernel, DEFAULT_PADDING};
use crate::noise::{ChargeConfiguration, Cuboid};
use crate::quadrature::{integrate_cells_adaptive, CubatureOptions, QuadError};

/// Where and how accurately U(η) = ∫ v(φ(x)) dx is integrated.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionDomain {
    /// Padding of the particle box, in decay lengths 1/m (the indicator
    /// kernel always pads by R).
    pub n_pad: f64,
    pub abs_tol: f64,
    /// Initial cell edge; None picks min(0.1/m, ε/2), or R/2 for indicators.
    pub initial_cell: Option<f64>,
    pub max_evaluations: usize,
}

impl Default for InteractionDomain {
    fn default() -> Self {
        Self {
            n_pad: DEFAULT_PADDING,
            abs_tol: 1e-7,
            initial_cell: None,
            max_evaluations: 400_000_000,
        }
    }
}

impl InteractionDomain {
    /// Integration box for particles in `region`.
    pub fn integration_box(&self, region: &Cuboid, kernel: &FieldKernel) -> Cuboid {
        region.padded(kernel.reach(self.n_pad))
    }

    fn cell(&self, kernel: &FieldKernel) -> f64 {
        if let Some(h) = self.initial_cell {
            return h;
        }
        match kernel {
            FieldKernel::Indicator(k) => 0.5 * k.radius(),
            _ => {
                let m = kernel.params().expect("green kernel").mass();
                let eps = kernel.smoothing();
                if eps > 0.0 {
                    (0.1 / m).min(0.5 * eps)
                } else {
                    0.1 / m
                }
            }
        }
    }
}

/// Monte Carlo move on a configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum Move {
    Insert { position: Vec<f64>, charge: f64 },
    Delete { index: usize },
    Displace { index: usize, position: Vec<f64> },
    Recharge { index: usize, charge: f64 },
}

impl Move {
    fn index(&self) -> Option<usize> {
        match self {
            Move::Insert { .. } => None,
            Move::Delete { index } | Move::Displace { index, .. } | Move::Recharge { index, .. } => Some(*index),
        }
    }
}

/// Configuration after the move.
pub fn apply_move(config: &ChargeConfiguration, mv: &Move) -> Result<ChargeConfiguration, PotentialError> {
    if let Some(i) = mv.index() {
        if i >= config.len() {
            return Err(PotentialError::Logic(format!(
                "particle index {i} out of range for {} particles",
                config.len()
            )));
        }
    }
    let mut out = config.clone();
    match mv {
        Move::Insert { position, charge } => out.push(position, *charge)?,
        Move::Delete { index } => {
            out.swap_remove(*index);
        }
        Move::Displace { index, position } => out.set_position(*index, position)?,
        Move::Recharge { index, charge } => out.set_charge(*index, *charge),
    }
    Ok(out)
}

fn check_compatible(kernel: &FieldKernel, spec: &PotentialSpec) -> Result<(), PotentialError> {
    if matches!(spec, PotentialSpec::Quadratic) && kernel.is_singular() {
        return Err(PotentialError::Domain(
            "the quadratic density needs a mollified or indicator kernel".into(),
        ));
    }
    Ok(())
}

/// Pairwise reduction for unit hard spheres, when it applies.
fn hard_sphere_rule(config: &ChargeConfiguration, kernel: &FieldKernel, spec: &PotentialSpec) -> Option<f64> {
    let (FieldKernel::Indicator(k), PotentialSpec::HardWall { threshold }) = (kernel, spec) else {
        return None;
    };
    if config.charges().iter().any(|&s| s != 1.0) || *threshold > 2.0 {
        return None;
    }
    if *threshold <= 1.0 {
        return Some(if config.is_empty() { 0.0 } else { f64::INFINITY });
    }
    let reach2 = 4.0 * k.radius() * k.radius();
    for i in 0..config.len() {
        for j in 0..i {
            let r2: f64 = config
                .position(i)
                .iter()
                .zip(config.position(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if r2 < reach2 {
                return Some(f64::INFINITY);
            }
        }
    }
    Some(0.0)
}

fn cubature(
    region: &Cuboid,
    kernel: &FieldKernel,
    domain: &InteractionDomain,
    bound: Option<f64>,
    integrand: impl Fn(&[f64]) -> f64,
) -> Result<f64, PotentialError> {
    let b = domain.integration_box(region, kernel);
    let opts = CubatureOptions {
        initial_cell: domain.cell(kernel),
        abs_tol: domain.abs_tol,
        max_evaluations: domain.max_evaluations,
        integrand_bound: bound,
    };
    match integrate_cells_adaptive(b.lower(), b.upper(), integrand, &opts) {
        Ok(e) => Ok(e.value),
        Err(e @ QuadError::NoConvergence { .. }) => Err(PotentialError::Numerical(e)),
        Err(e) => Err(PotentialError::Numerical(e)),
    }
}

/// U(η) = ∫ v(φ(x)) dx over the padded particle box.
pub fn interaction_energy(
    config: &ChargeConfiguration,
    kernel: &FieldKernel,
    spec: &PotentialSpec,
    domain: &InteractionDomain,
) -> Result<f64, PotentialError> {
    check_compatible(kernel, spec)?;
    if config.is_empty() {
        return Ok(0.0);
    }
    if let Some(u) = hard_sphere_rule(config, kernel, spec) {
        return Ok(u);
    }
    let sorted = config.canonical();
    let ctx = FieldContext::new(kernel, &sorted);
    cubature(config.region(), kernel, domain, spec.bound(), |x| spec.value(ctx.eval_unchecked(x)))
}

/// U(η′) − U(η) for η′ = move(η).
///
/// Finite densities integrate the difference of the two integrands in one
/// pass. With hard walls, ∞ − ∞ is reported as 0 and a move out of an
/// infinite-energy state as −∞.
pub fn delta_energy(
    config: &ChargeConfiguration,
    kernel: &FieldKernel,
    spec: &PotentialSpec,
    domain: &InteractionDomain,
    mv: &Move,
) -> Result<f64, PotentialError> {
    check_compatible(kernel, spec)?;
    let after = apply_move(config, mv)?;
    if let Move::Displace { index, position } = mv {
        if config.position(*index) == position.as_slice() {
            return Ok(0.0);
        }
    }
    if let Move::Recharge { index, charge } = mv {
        if config.charge(*index) == *charge {
            return Ok(0.0);
        }
    }
    if matches!(spec, PotentialSpec::HardWall { .. }) {
        let u0 = interaction_energy(config, kernel, spec, domain)?;
        let u1 = interaction_energy(&after, kernel, spec, domain)?;
        return Ok(match (u0.is_infinite(), u1.is_infinite()) {
            (true, true) => 0.0,
            (true, false) => f64::NEG_INFINITY,
            _ => u1 - u0,
        });
    }
    let config = config.canonical();
    let after = after.canonical();
    let before = FieldContext::new(kernel, &config);
    let next = FieldContext::new(kernel, &after);
    let bound = spec.bound().map(|b| 2.0 * b);
    cubature(config.region(), kernel, domain, bound, |x| {
        spec.value(next.eval_unchecked(x)) - spec.value(before.eval_unchecked(x))
    })
}

/// Threshold-rule route: midpoint grid with `cells_per_axis` cells per unit
/// length over the padded box; ∞ as soon as one cell centre is infinite.
pub fn interaction_energy_grid(
    config: &ChargeConfiguration,
    kernel: &FieldKernel,
    spec: &PotentialSpec,
    n_pad: f64,
    spacing: f64,
) -> Result<f64, PotentialError> {
    check_compatible(kernel, spec)?;
    if !(spacing > 0.0) {
        return Err(PotentialError::Domain("grid spacing must be positive".into()));
    }
    let b = config.region().padded(kernel.reach(n_pad));
    let d = b.dim();
    let counts: Vec<usize> = (0..d).map(|k| (b.side(k) / spacing).ceil() as usize).collect();
    let h: Vec<f64> = (0..d).map(|k| b.side(k) / counts[k] as f64).collect();
    let vol: f64 = h.iter().product();
    let ctx = FieldContext::new(kernel, config);
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let total: usize = counts.iter().product();
    let mut sum = 0.0;
    for _ in 0..total {
        for k in 0..d {
            x[k] = b.lower()[k] + h[k] * (idx[k] as f64 + 0.5);
        }
        let v = spec.value(ctx.eval_unchecked(&x));
        if v == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        sum += v * vol;
        for k in (0..d).rev() {
            idx[k] += 1;
            if idx[k] < counts[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelParams;
    use crate::potential::{radial_phase_integral, IndicatorKernel, RadialQuadrature};
    use crate::stats::RngStream;

    fn unit_box() -> Cuboid {
        Cuboid::cube(2, 0.0, 1.0).unwrap()
    }

    fn green() -> (KernelParams, FieldKernel) {
        let p = KernelParams::new(2, 1.0).unwrap();
        (p, FieldKernel::green(p).unwrap())
    }

    #[test]
    fn empty_configuration_has_zero_energy() {
        let (_, k) = green();
        let spec = PotentialSpec::trigonometric(vec![(1.0, 2.0)]).unwrap();
        let c = ChargeConfiguration::empty(unit_box());
        assert_eq!(interaction_energy(&c, &k, &spec, &InteractionDomain::default()).unwrap(), 0.0);
    }

    #[test]
    fn hard_sphere_pair_rule() {
        let r = 0.2;
        let k = FieldKernel::indicator(IndicatorKernel::new(r).unwrap());
        let spec = PotentialSpec::hard_wall(2.0).unwrap();
        let dom = InteractionDomain::default();
        let at = |sep: f64| {
            ChargeConfiguration::from_parts(unit_box(), &[vec![0.2, 0.5], vec![0.2 + sep, 0.5]], &[1.0, 1.0])
                .unwrap()
        };
        assert_eq!(interaction_energy(&at(2.5 * r), &k, &spec, &dom).unwrap(), 0.0);
        assert_eq!(interaction_energy(&at(1.5 * r), &k, &spec, &dom).unwrap(), f64::INFINITY);
    }

    #[test]
    fn single_particle_two_routes() {
        let (p, k) = green();
        for (w, alpha, s) in [(1.0, 1.0, 1.0), (0.5, 3.0, -2.0)] {
            let spec = PotentialSpec::trigonometric(vec![(w, alpha)]).unwrap();
            let c = ChargeConfiguration::from_parts(unit_box(), &[vec![0.5, 0.5]], &[s]).unwrap();
            let dom = InteractionDomain {
                abs_tol: 1e-7,
                ..Default::default()
            };
            let grid = interaction_energy(&c, &k, &spec, &dom).unwrap();
            let a = (alpha * s).abs();
            let radial = radial_phase_integral(
                &p,
                a,
                -w,
                |g| w * crate::potential::cos_minus_one(a * g),
                &RadialQuadrature { resolution: 0.5 },
            )
            .unwrap();
            assert!(((grid - radial) / radial).abs() < 1e-6, "{grid} vs {radial}");
        }
    }

    #[test]
    fn permutation_invariance_is_exact() {
        let m = crate::kernel::MollifierParams::new(0.3).unwrap();
        let k = FieldKernel::mollified(KernelParams::new(2, 1.0).unwrap(), m).unwrap();
        let spec = PotentialSpec::trigonometric(vec![(1.0, 2.0)]).unwrap();
        let dom = InteractionDomain {
            n_pad: 4.0,
            abs_tol: 1e-5,
            initial_cell: Some(0.5),
            ..Default::default()
        };
        let pos = [vec![0.1, 0.2], vec![0.7, 0.4], vec![0.5, 0.9], vec![0.3, 0.3]];
        let q = [1.0, -1.0, 0.5, -0.5];
        let base = ChargeConfiguration::from_parts(unit_box(), &pos, &q).unwrap();
        let u0 = interaction_energy(&base, &k, &spec, &dom).unwrap();
        let mut rng = RngStream::new(3, 0);
        for _ in 0..20 {
            let mut idx: Vec<usize> = (0..4).collect();
            for i in (1..4).rev() {
                idx.swap(i, rng.below(i as u64 + 1) as usize);
            }
            let p2: Vec<Vec<f64>> = idx.iter().map(|&i| pos[i].clone()).collect();
            let q2: Vec<f64> = idx.iter().map(|&i| q[i]).collect();
            let c = ChargeConfiguration::from_parts(unit_box(), &p2, &q2).unwrap();
            assert_eq!(interaction_energy(&c, &k, &spec, &dom).unwrap().to_bits(), u0.to_bits());
        }
    }

    #[test]
    fn move_energies() {
        let m = crate::kernel::MollifierParams::new(0.3).unwrap();
        let k = FieldKernel::mollified(KernelParams::new(2, 1.0).unwrap(), m).unwrap();
        let spec = PotentialSpec::trigonometric(vec![(1.0, 2.0)]).unwrap();
        let dom = InteractionDomain {
            n_pad: 5.0,
            abs_tol: 1e-8,
            ..Default::default()
        };
        let empty = ChargeConfiguration::empty(unit_box());
        let ins = Move::Insert {
            position: vec![0.4, 0.6],
            charge: 1.0,
        };
        let du = delta_energy(&empty, &k, &spec, &dom, &ins).unwrap();
        let one = apply_move(&empty, &ins).unwrap();
        let u1 = interaction_energy(&one, &k, &spec, &dom).unwrap();
        assert!((du - u1).abs() < 1e-7);
        let back = delta_energy(&one, &k, &spec, &dom, &Move::Delete { index: 0 }).unwrap();
        assert!((du + back).abs() < 1e-7);
        let null = Move::Displace {
            index: 0,
            position: vec![0.4, 0.6],
        };
        assert_eq!(delta_energy(&one, &k, &spec, &dom, &null).unwrap(), 0.0);
        assert!(matches!(
            delta_energy(&one, &k, &spec, &dom, &Move::Delete { index: 3 }),
            Err(PotentialError::Logic(_))
        ));
        // translation covariance
        let shifted = ChargeConfiguration::from_parts(
            Cuboid::cube(2, 2.0, 3.0).unwrap(),
            &[vec![2.4, 2.6]],
            &[1.0],
        )
        .unwrap();
        let u2 = interaction_energy(&shifted, &k, &spec, &dom).unwrap();
        assert!((u1 - u2).abs() < 1e-7);
    }

    #[test]
    fn quadratic_requires_smoothing() {
        let (_, k) = green();
        let c = ChargeConfiguration::from_parts(unit_box(), &[vec![0.5, 0.5]], &[1.0]).unwrap();
        assert!(interaction_energy(&c, &k, &PotentialSpec::Quadratic, &InteractionDomain::default()).is_err());
    }

    #[test]
    fn hard_sphere_grid_route_agrees_with_pair_rule() {
        let r = 0.4;
        let k = FieldKernel::indicator(IndicatorKernel::new(r).unwrap());
        let spec = PotentialSpec::hard_wall(2.0).unwrap();
        let region = Cuboid::cube(2, 0.0, 2.0).unwrap();
        let spacing = 0.01;
        let band = 3.0 * spacing;
        let mut rng = RngStream::new(21, 0);
        let mut checked = 0;
        while checked < 500 {
            let mut a = [0.0; 2];
            let mut b = [0.0; 2];
            region.sample_uniform(&mut rng, &mut a);
            region.sample_uniform(&mut rng, &mut b);
            let dist = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            if (dist - 2.0 * r).abs() < band {
                continue;
            }
            let c = ChargeConfiguration::from_parts(region.clone(), &[a.to_vec(), b.to_vec()], &[1.0, 1.0]).unwrap();
            let pair = interaction_energy(&c, &k, &spec, &InteractionDomain::default()).unwrap();
            let grid = interaction_energy_grid(&c, &k, &spec, 1.0, spacing).unwrap();
            assert_eq!(pair, grid, "dist {dist}");
            checked += 1;
        }
    }
}
