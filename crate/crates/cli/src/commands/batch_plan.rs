use rayon::prelude::*;
use tempweak_core::sampling::plans_to_text;
use tempweak_core::{parse_manifest, plan_batch, BatchPlan};

use super::emit;
use crate::args::BatchPlanArgs;

pub fn run(a: &BatchPlanArgs) -> anyhow::Result<()> {
    let manifest = parse_manifest(&a.manifest)?;
    let plans = (0..a.batches)
        .into_par_iter()
        .map(|b| plan_batch(&manifest, a.batch_size, a.p_real, a.seed, b))
        .collect::<Result<Vec<BatchPlan>, _>>()?;
    emit(a.out.as_deref(), &plans_to_text(&plans)?)
}
