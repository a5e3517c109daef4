use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::solver::{self, LinearModel, ObjectiveSense, Status};
use crate::uncertainty::DemandScenario;

use super::{
    add_recourse_block, purchase_cost, supply_constants, Allocation, FulfillmentPlan, LinExpr,
    RecourseBlock,
};

/// Fulfillment LP for a fixed allocation and a realized scenario.
pub struct FulfillmentModel {
    pub model: LinearModel,
    pub(crate) block: RecourseBlock,
}

fn check_scenario(inst: &Instance, scen: &DemandScenario) -> Result<()> {
    let (t, n, nz) = (inst.horizon, inst.num_nodes(), inst.num_zones());
    if scen.walkin.len() != t
        || scen.online.len() != t
        || scen.walkin.iter().any(|r| r.len() != n)
        || scen.online.iter().any(|r| r.len() != nz)
    {
        return Err(Error::Dimension(
            "scenario does not match the instance".into(),
        ));
    }
    Ok(())
}

/// Realized fulfillment: all demand is served from stock, no optimism.
/// The objective is the second-stage profit; ordering cost is added by
/// [`evaluate_allocation`].
pub fn build_fulfillment_model(
    inst: &Instance,
    alloc: &Allocation,
    scen: &DemandScenario,
) -> Result<FulfillmentModel> {
    inst.check_structure()?;
    alloc.check_against(inst)?;
    check_scenario(inst, scen)?;
    let plain = alloc.orders_only();
    let supply: Vec<Vec<LinExpr>> = supply_constants(inst, &plain)
        .into_iter()
        .map(|r| r.into_iter().map(LinExpr::constant).collect())
        .collect();
    let mut model = LinearModel::new(ObjectiveSense::Maximize);
    let block = add_recourse_block(&mut model, inst, scen, 0.0, 0.0, &supply, "");
    for &(v, c) in &block.objective.terms {
        model.add_objective_coeff(v, c);
    }
    model.objective_constant = block.objective.constant;
    Ok(FulfillmentModel { model, block })
}

/// Profit of an allocation on one realized scenario, ordering cost included.
pub fn evaluate_allocation(
    inst: &Instance,
    alloc: &Allocation,
    scen: &DemandScenario,
) -> Result<FulfillmentPlan> {
    let fm = build_fulfillment_model(inst, alloc, scen)?;
    let sol = solver::solve(&fm.model)?;
    if sol.status != Status::Optimal {
        if sol.status == Status::Infeasible {
            return Err(Error::Precondition(
                "allocation moves more stock out of a node than it holds".into(),
            ));
        }
        return Err(Error::Solver {
            status: sol.status,
            context: "fulfillment model".into(),
        });
    }
    let (periods, n, nz) = (inst.horizon, inst.num_nodes(), inst.num_zones());
    let b = &fm.block;
    let walkin_sales = (0..periods)
        .map(|t| (0..n).map(|l| sol.value(b.sales[t][l])).collect())
        .collect();
    let inventory = (0..periods)
        .map(|t| (0..n).map(|l| sol.value(b.inventory[t][l])).collect())
        .collect();
    let mut fulfillment = vec![vec![vec![0.0; nz]; n]; periods];
    for (t, row) in b.ship.iter().enumerate() {
        for &(l, z, y) in row {
            fulfillment[t][l][z] = sol.value(y);
        }
    }
    Ok(FulfillmentPlan {
        walkin_sales,
        fulfillment,
        inventory,
        profit: sol.objective - purchase_cost(inst, alloc),
    })
}
