use std::path::{Path, PathBuf};
use std::sync::Arc;

use decoykit::anonymize::{ola_search, AnonymizedView, LossMetric, SampleSpec, SourcePaths, ViewManifest};
use decoykit::attribution::{attribute as attribute_leak, scan_path};
use decoykit::collusion::{attack_report, PeerMode, ReleaseTable};
use decoykit::dataset::{Dataset, Schema};
use decoykit::decoy::{build_releases, write_releases, DecoyPolicy, DecoyRegistry, HardeningPolicy, OriginRule};
use decoykit::hierarchy::{HierarchySet, QuasiHierarchies};
use decoykit::io::{atomic_write, read_json, read_toml, write_json};
use decoykit::linkage::Feasibility;
use decoykit::report::{report as run_report, to_csv, ReportConfig};
use decoykit::synthpop::{generate, PopulationSpec};
use decoykit::{seed, Error, Result};
use serde::Deserialize;

fn absolute(p: &Path) -> Result<String> {
    let abs = p.canonicalize().map_err(|e| Error::io(p, e))?;
    Ok(abs.to_string_lossy().into_owned())
}

fn load_inputs(data: &Path, schema: &Path, hierarchies: &Path) -> Result<(Dataset, QuasiHierarchies)> {
    let schema = Schema::load(schema)?;
    let quasi = HierarchySet::load(hierarchies)?.for_schema(&schema)?;
    let data = Dataset::load(data, &schema)?;
    Ok((data, quasi))
}

#[allow(clippy::too_many_arguments)]
pub fn anonymize(
    data: &Path,
    schema: &Path,
    hierarchies: &Path,
    k: usize,
    suppression: f64,
    metric: LossMetric,
    sample: Option<usize>,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let (dataset, quasi) = load_inputs(data, schema, hierarchies)?;
    let sample_spec = sample.map(|size| SampleSpec {
        size,
        seed: seed::derive(seed, "sample"),
    });
    let input = match &sample_spec {
        Some(s) => dataset.sample_uniform(s.size, s.seed)?,
        None => dataset,
    };
    let view = ola_search(Arc::new(input.strip_direct()), &quasi, k, suppression, metric)?;
    let m = view.write(
        out,
        Some(SourcePaths {
            data: absolute(data)?,
            schema: absolute(schema)?,
            hierarchies: absolute(hierarchies)?,
            sample: sample_spec,
        }),
    )?;
    println!(
        "level vector {}: {} classes, {} of {} records suppressed, precision loss {:.4}",
        m.level_vector, m.class_count, m.suppressed, m.records, m.loss.precision
    );
    Ok(())
}

/// Rebuilds the view recorded in `dir/manifest.json` from its source files.
fn load_view(dir: &Path) -> Result<(AnonymizedView, Schema, ViewManifest)> {
    let manifest: ViewManifest = read_json(&dir.join("manifest.json"))?;
    let src = manifest.source.clone().ok_or_else(|| {
        Error::Usage(format!("{} does not record its source files", dir.join("manifest.json").display()))
    })?;
    let schema = Schema::load(Path::new(&src.schema))?;
    let quasi = HierarchySet::load(Path::new(&src.hierarchies))?.for_attributes(&manifest.quasi_attributes)?;
    let mut data = Dataset::load(Path::new(&src.data), &schema)?;
    if let Some(s) = &src.sample {
        data = data.sample_uniform(s.size, s.seed)?;
    }
    let view = AnonymizedView::at(
        Arc::new(data.strip_direct()),
        &quasi,
        manifest.level_vector.clone(),
        manifest.k,
        manifest.suppression_limit,
    )?;
    Ok((view, schema, manifest))
}

pub fn feasibility(view_dir: &Path, population: &Path, out: &Path) -> Result<()> {
    let (view, schema, _) = load_view(view_dir)?;
    let pop = Dataset::load(population, &schema)?;
    let f = Feasibility::assess(&view, &pop)?;
    write_json(&out.join("feasibility.json"), &f)?;
    let mut profile = String::from("rank,risk_factor\n");
    for (i, r) in f.risk_profile().iter().enumerate() {
        profile.push_str(&format!("{},{r}\n", i + 1));
    }
    atomic_write(&out.join("risk_profile.csv"), profile.as_bytes())?;
    println!("minLink,<minLink EQ,<minLink Records");
    println!("{},{},{}", f.linkage.min_link, f.candidates.len(), f.candidate_records());
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DecoySection {
    #[serde(default = "one")]
    n_d: usize,
    records_per_class: Option<usize>,
    risk_range: Option<(f64, f64)>,
    pool_fraction: Option<f64>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyFile {
    decoy: DecoySection,
    hardening: Option<HardeningPolicy>,
}

pub fn release(
    view_dir: &Path,
    population: &Path,
    policy: &Path,
    recipients: &[String],
    seed: u64,
    out: &Path,
    registry: &Path,
) -> Result<()> {
    let file: PolicyFile = read_toml(policy)?;
    let (view, schema, _) = load_view(view_dir)?;
    let pop = Dataset::load(population, &schema)?;
    let f = Feasibility::assess(&view, &pop)?;
    let mut decoy = DecoyPolicy::new(view.k(), seed);
    decoy.n_d = file.decoy.n_d;
    decoy.records_per_class = file.decoy.records_per_class.unwrap_or(view.k());
    if let Some(r) = file.decoy.risk_range {
        decoy.risk_range = r;
    }
    decoy.pool_fraction = file.decoy.pool_fraction;
    let set = build_releases(&view, &pop, &f.candidates, recipients, &decoy, file.hardening.as_ref())?;
    write_releases(&set, out, registry)?;
    for r in &set.releases {
        println!("{}: {} rows, {} classes", r.recipient_id, r.rows.len(), r.class_sizes().len());
    }
    Ok(())
}

pub fn collude(
    releases: &[PathBuf],
    hierarchies: &Path,
    k: Option<usize>,
    mode: PeerMode,
    strict: bool,
    bin_width: usize,
    out: Option<&Path>,
) -> Result<()> {
    if releases.len() < 2 {
        return Err(Error::Usage(format!(
            "collude needs at least 2 --release directories, got {}",
            releases.len()
        )));
    }
    let tables = releases.iter().map(|d| ReleaseTable::load(d)).collect::<Result<Vec<_>>>()?;
    let k = match k {
        Some(k) => k,
        None => read_json::<decoykit::decoy::ReleaseManifest>(&releases[0].join("manifest.json"))?.k,
    };
    let quasi = HierarchySet::load(hierarchies)?.for_attributes(&tables[0].quasi_attributes)?;
    let rule = if strict { OriginRule::Strict } else { OriginRule::Inclusive };
    let report = attack_report(&tables, &quasi, k, mode, rule, bin_width)?;
    for r in &report.releases {
        println!(
            "{}: {} classes, {} suspect, closeToK {}",
            r.recipient_id,
            r.classes,
            r.suspects.len(),
            r.close_to_k
        );
    }
    if let Some(out) = out {
        write_json(out, &report)?;
    }
    Ok(())
}

pub fn attribute(registry: &Path, leak: &Path, text: bool, delimiters: &str, floor: f64, out: Option<&Path>) -> Result<()> {
    let reg = DecoyRegistry::load(registry)?;
    let matches = scan_path(leak, &reg, text, delimiters)?;
    let verdict = attribute_leak(&matches, &reg, floor);
    print!("{}", verdict.summary());
    if let Some(out) = out {
        write_json(out, &verdict)?;
    }
    Ok(())
}

pub fn synthpop(n: usize, seed: u64, spec: Option<&Path>, out: &Path) -> Result<()> {
    let spec = match spec {
        Some(p) => PopulationSpec::load(p)?,
        None => PopulationSpec::example(),
    };
    let data = generate(n, seed, &spec)?;
    data.save(&out.join("population.csv"))?;
    atomic_write(&out.join("schema.toml"), data.schema().to_toml().as_bytes())?;
    atomic_write(&out.join("hierarchies.toml"), spec.hierarchies().to_toml().as_bytes())?;
    atomic_write(&out.join("spec.toml"), spec.to_toml().as_bytes())?;
    println!("{n} records written to {}", out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn report(
    data: &Path,
    schema: &Path,
    hierarchies: &Path,
    sample: usize,
    runs: usize,
    k: Vec<usize>,
    suppression: Vec<f64>,
    metric: LossMetric,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let (pop, quasi) = load_inputs(data, schema, hierarchies)?;
    let cfg = ReportConfig {
        sample_size: sample,
        runs,
        k,
        suppression,
        seed,
        metric,
    };
    let rows = run_report(&pop, &quasi, &cfg)?;
    let csv = to_csv(&rows);
    atomic_write(out, csv.as_bytes())?;
    print!("{csv}");
    Ok(())
}
