use std::path::Path;

use anyhow::Result;
use rach_core::design::{self, DEFAULT_ENUM_CAP};
use rach_core::sim::Source;

use crate::artifact::{Provenance, write_atomic};
use crate::report::{Curve, sim_csv};
use crate::{FigureName, Status};

struct Spec {
    file: String,
    description: String,
    source: Source,
}

fn curves(name: FigureName) -> Result<Vec<Spec>> {
    let mut out = Vec::new();
    match name {
        FigureName::Fig1 => {
            for k in 3..=7 {
                out.push(Spec {
                    file: format!("fig1_dcrdsa_k{k}.csv"),
                    description: format!("D-CRDSA, all C(24,{k}) patterns, one per user"),
                    source: Source::Deterministic(design::enumerate_constant_weight(24, k, DEFAULT_ENUM_CAP)?),
                });
                out.push(Spec {
                    file: format!("fig1_crdsa_k{k}.csv"),
                    description: format!("CRDSA, weight {k} patterns drawn at random, n=24"),
                    source: Source::Random { n: 24, k },
                });
            }
        }
        FigureName::Fig2 => {
            let steiner = design::design_to_codebook(&design::bundled::steiner_3_5_26())?;
            out.push(Spec {
                file: "fig2_steiner_3_5_26.csv".into(),
                description: "Steiner S(3,5,26) code, 260 users".into(),
                source: Source::Deterministic(steiner),
            });
            out.push(Spec {
                file: "fig2_dcrdsa_k5.csv".into(),
                description: "D-CRDSA, all C(26,5) patterns, one per user".into(),
                source: Source::Deterministic(design::enumerate_constant_weight(26, 5, DEFAULT_ENUM_CAP)?),
            });
            out.push(Spec {
                file: "fig2_crdsa_k5.csv".into(),
                description: "CRDSA, weight 5 patterns drawn at random, n=26".into(),
                source: Source::Random { n: 26, k: 5 },
            });
        }
    }
    Ok(out)
}

pub fn run(name: FigureName, trials: u64, seed: u64, points: u32, out_dir: &Path, prov: &Provenance) -> Result<Status> {
    let prov = prov.with_seed(seed);
    let grid = rach_core::sim::log_grid(points);
    let mut manifest = prov.comment_block(&[]);
    manifest.push_str("file,mode,n,k_or_profile,trials,points,description\n");
    for spec in curves(name)? {
        let curve = Curve::run(&spec.source, &grid, trials, seed)?;
        write_atomic(&out_dir.join(&spec.file), &sim_csv(&prov, std::slice::from_ref(&curve)))?;
        manifest.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            spec.file,
            curve.mode,
            curve.n,
            curve.k_or_profile,
            trials,
            grid.len(),
            spec.description.replace(',', ";")
        ));
        eprintln!("wrote {}", spec.file);
    }
    write_atomic(&out_dir.join("manifest.csv"), &manifest)?;
    Ok(Status::Ok)
}
