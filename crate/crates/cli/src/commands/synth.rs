use rayon::prelude::*;
use tempweak_core::synthgen::{generate_pair, manifests, write_pair, SynthSpec, TRAIN_MANIFEST, TRUTH_MANIFEST};
use tempweak_core::write_manifest;

use crate::args::SynthArgs;

pub fn run(a: &SynthArgs) -> anyhow::Result<()> {
    let spec = SynthSpec {
        seed: a.seed,
        pair_count: a.pairs,
        size: a.size,
        change_rate: a.change_rate,
        jitter: a.jitter,
        resolution: a.resolution,
        ..SynthSpec::default()
    };
    spec.check()?;
    (0..spec.pair_count)
        .into_par_iter()
        .try_for_each(|i| write_pair(&a.out, &generate_pair(&spec, i)?))?;
    let (train, truth) = manifests(&spec);
    write_manifest(&train, &a.out.join(TRAIN_MANIFEST))?;
    write_manifest(&truth, &a.out.join(TRUTH_MANIFEST))?;
    log::info!("wrote {} pairs to {}", spec.pair_count, a.out.display());
    Ok(())
}
