//! Numerical integral sections for `k = 2` scenarios and their CSV output.

use std::collections::BTreeMap;
use std::io::{self, Write};

use anyhow::{anyhow, bail, Context};
use geored_core::dynamics::{integrate_k2, K2Params, K2System, SectionGrid};
use num_traits::ToPrimitive;

use crate::scenario::{Model, Structure};

pub struct Simulation {
    pub sys: K2System,
    pub grid: SectionGrid,
}

impl Simulation {
    pub fn residual(&self) -> f64 {
        self.sys.residual(&self.grid)
    }

    pub fn energies(&self) -> Vec<f64> {
        (0..self.grid.state.len()).map(|l| self.sys.energy(&self.grid, l)).collect()
    }
}

/// Parameter values as floats, keyed by name.
pub fn float_params(model: &Model) -> BTreeMap<String, f64> {
    model.params.0.iter().map(|(k, v)| (k.clone(), v.to_f64().unwrap_or(f64::NAN))).collect()
}

/// Samples the `[initial]` data on the grid nodes and integrates.
pub fn simulate(model: &Model, p: &K2Params) -> anyhow::Result<Simulation> {
    let Structure::Contact(kc) = &model.structure else {
        bail!("simulation needs a k-contact structure");
    };
    let ham = model.hamiltonian.as_ref().ok_or_else(|| anyhow!("simulation needs [hamiltonian]"))?;
    let sys = K2System::new(kc, &ham.h, &ham.darboux, &model.params, &model.bindings)?;
    let mut vars = float_params(model);
    let xs: Vec<f64> = (0..p.nodes).map(|j| p.x0 + j as f64 * p.dx()).collect();
    let mut columns = Vec::new();
    for name in sys.q.iter().chain(&sys.pt) {
        let (_, term) = model
            .initial
            .iter()
            .find(|(n, _)| n == name)
            .ok_or_else(|| anyhow!("[initial] gives no value for `{name}`"))?;
        let mut col = Vec::with_capacity(xs.len());
        for &x in &xs {
            vars.insert("x".into(), x);
            col.push(term.eval_f64(&vars).with_context(|| format!("initial value of `{name}` at x = {x}"))?);
        }
        columns.push(col);
    }
    let grid = integrate_k2(&sys, p, &columns)?;
    Ok(Simulation { sys, grid })
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// `t, x`, then fields, time momenta and space momenta; 17 significant digits.
pub fn write_grid_csv(sim: &Simulation, out: &mut impl Write) -> io::Result<()> {
    let mut header = vec!["t".to_string(), "x".to_string()];
    header.extend(sim.sys.names());
    writeln!(out, "{}", header.join(","))?;
    for row in sim.grid.rows(&sim.sys) {
        writeln!(out, "{}", row.iter().map(|v| num(*v)).collect::<Vec<_>>().join(","))?;
    }
    Ok(())
}

/// `t, residual, energy` at each interior time level.
pub fn write_residuals_csv(sim: &Simulation, out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "t,residual,energy")?;
    let energies = sim.energies();
    for (i, r) in sim.sys.level_residuals(&sim.grid).iter().enumerate() {
        let l = i + 1;
        writeln!(out, "{},{},{}", num(sim.grid.t[l]), num(*r), num(energies[l]))?;
    }
    Ok(())
}
