//! Test-set manifest: which instances exist, where their files live and how
//! they were generated.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lmea::generator::GENERATOR_VERSION;
use lmea::seed::{derive_seed, RNG_ID};
use lmea::{read_instance, write_instance, CluParams, GenSpec, Instance, InstanceKind};
use serde::{Deserialize, Serialize};

pub const MANIFEST_VERSION: &str = "lmea-manifest/1";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRef {
    pub id: String,
    /// Path relative to the manifest's directory.
    pub file: String,
    pub spec: GenSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSet {
    /// `kind-n`, e.g. `rue-20`.
    pub name: String,
    pub kind: InstanceKind,
    pub n: usize,
    pub instances: Vec<InstanceRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub generator: String,
    pub rng: String,
    pub master_seed: u64,
    pub instances_per_set: usize,
    pub sets: Vec<TestSet>,
}

/// An instance loaded from disk together with its set.
#[derive(Debug, Clone)]
pub struct LoadedInstance {
    pub set: String,
    pub instance: Instance,
}

pub fn set_name(kind: InstanceKind, n: usize) -> String {
    format!("{kind}-{n}")
}

impl Manifest {
    /// Plans the test sets without touching the filesystem. Instance seeds
    /// are derived from the master seed, set name and index.
    pub fn plan(
        kinds: &[InstanceKind],
        sizes: &[usize],
        per_set: usize,
        master_seed: u64,
    ) -> Manifest {
        let mut sets = Vec::new();
        for &kind in kinds {
            for &n in sizes {
                let name = set_name(kind, n);
                let instances = (0..per_set)
                    .map(|i| {
                        let seed = derive_seed(master_seed, &format!("gen/{name}/{i}"));
                        let spec = match kind {
                            InstanceKind::Rue => GenSpec::rue(n, seed),
                            InstanceKind::Clu => GenSpec::clu(n, seed, CluParams::default_for(n)),
                        };
                        let id = format!("{name}-{i}");
                        InstanceRef {
                            file: format!("instances/{id}.tsp"),
                            id,
                            spec,
                        }
                    })
                    .collect();
                sets.push(TestSet {
                    name,
                    kind,
                    n,
                    instances,
                });
            }
        }
        Manifest {
            format: MANIFEST_VERSION.to_string(),
            generator: GENERATOR_VERSION.to_string(),
            rng: RNG_ID.to_string(),
            master_seed,
            instances_per_set: per_set,
            sets,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Manifest> {
        let path = path.as_ref();
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let manifest: Manifest =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if manifest.format != MANIFEST_VERSION {
            bail!(
                "{}: unsupported manifest format {}",
                path.display(),
                manifest.format
            );
        }
        Ok(manifest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }

    /// Generates every planned instance into `base` and writes the manifest
    /// next to them.
    pub fn materialize(&self, base: &Path) -> Result<PathBuf> {
        fs::create_dir_all(base.join("instances"))?;
        for set in &self.sets {
            for r in &set.instances {
                let instance = r
                    .spec
                    .generate()
                    .with_context(|| format!("generating {}", r.id))?
                    .with_id(&r.id);
                write_instance(&instance, base.join(&r.file))
                    .with_context(|| format!("writing {}", r.file))?;
            }
        }
        let path = base.join(MANIFEST_FILE);
        self.save(&path)?;
        Ok(path)
    }

    /// Reads every instance file, in manifest order.
    pub fn load_instances(&self, manifest_path: &Path) -> Result<Vec<LoadedInstance>> {
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        let mut out = Vec::new();
        for set in &self.sets {
            for r in &set.instances {
                let path = base.join(&r.file);
                let instance =
                    read_instance(&path).with_context(|| format!("loading {}", path.display()))?;
                if instance.n() != set.n {
                    bail!(
                        "{}: expected {} nodes, found {}",
                        path.display(),
                        set.n,
                        instance.n()
                    );
                }
                out.push(LoadedInstance {
                    set: set.name.clone(),
                    instance,
                });
            }
        }
        Ok(out)
    }
}
