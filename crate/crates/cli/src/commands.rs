use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use vanet_trs::bench::{bench_grid, CSV_HEADER};
use vanet_trs::itrs::{build_request_with, verify_ring, PlateGenerator, PreparedRequest, RequestOptions};
use vanet_trs::keys::{derive_private, derive_private_v2, setup};
use vanet_trs::protocol::{
    decode_packet, encode_packet, verify_announcement, AggregationPacket, Direction, EventDescription, EventKind,
    Packet,
};
use vanet_trs::sim::{
    anonymity_prob, anonymity_prob_exact, run_batch, write_csv, write_jsonl, CellSummary, ModeledCosts, SimMetrics,
    SweepSpec, TidyRow,
};
use vanet_trs::{IdentityKey, MasterKeyMaterial, SystemParams};

use crate::output::{ensure_writable, read_file, write_file, RunManifest};
use crate::{AnonymityArgs, BenchArgs, CliError, KeygenArgs, RoundtripArgs, SimulateArgs, TidyFormat, VerifyArgs};

fn ms_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn csv_err(e: impl std::fmt::Display) -> CliError {
    CliError::Csv(e.to_string())
}

pub fn keygen(a: &KeygenArgs) -> Result<(), CliError> {
    let params_path = a.out.join("params.bin");
    let master_path = a.out.join("master.bin");
    let manifest_path = a.out.join("manifest.json");
    let mut targets = vec![&params_path, &manifest_path];
    if !a.public_only {
        targets.push(&master_path);
    }
    for p in &targets {
        ensure_writable(p, a.force)?;
    }

    let (material, params) = setup(a.n, a.seed)?;
    write_file(&params_path, &params.to_bytes(), a.force)?;
    let mut manifest = RunManifest::new(
        "keygen",
        a.seed,
        serde_json::json!({ "n": a.n, "curve": "p256", "public_only": a.public_only }),
    );
    manifest.outputs.push(params_path.clone());
    if !a.public_only {
        write_file(&master_path, &material.to_bytes(vanet_trs::keys::ExportSecrets), a.force)?;
        manifest.outputs.push(master_path.clone());
    }
    manifest.write(&manifest_path, a.force)?;
    println!("params: {}", params_path.display());
    if !a.public_only {
        println!("master: {}", master_path.display());
    }
    Ok(())
}

fn load_params(path: &Path) -> Result<SystemParams, CliError> {
    Ok(SystemParams::from_bytes(&read_file(path)?)?)
}

pub fn roundtrip(a: &RoundtripArgs) -> Result<(), CliError> {
    let params = load_params(&a.params)?;
    let master_path = a.master.clone().unwrap_or_else(|| a.params.with_file_name("master.bin"));
    let material = MasterKeyMaterial::from_bytes(&read_file(&master_path)?)?;
    if material.params().to_bytes() != params.to_bytes() {
        return Err(CliError::Config(format!(
            "{} does not belong to {}",
            master_path.display(),
            a.params.display()
        )));
    }
    if let Some(out) = &a.out {
        ensure_writable(out, a.force)?;
    }
    let repliers = a.repliers.unwrap_or(a.t.saturating_sub(1));
    let mut rng = ChaCha20Rng::seed_from_u64(a.seed);
    let mut key = |id: String| -> IdentityKey {
        if a.variant {
            derive_private_v2(&material, &id, &mut rng)
        } else {
            derive_private(&material, &id)
        }
    };
    let initiator = key("INITIATOR".into());
    let replier_keys: Vec<IdentityKey> = (0..repliers).map(|i| key(format!("REPLIER-{i:03}"))).collect();

    let event = EventDescription {
        x: 0.0,
        y: 0.0,
        kind: EventKind::Accident,
        direction: Direction::North,
        road: a.msg.clone(),
        time: 0.0,
    };
    let options = RequestOptions {
        collusion_resistant: a.variant,
        ephemeral_pk: None,
    };
    let mut ids = PlateGenerator::excluding(
        std::iter::once(initiator.id().to_owned()).chain(replier_keys.iter().map(|k| k.id().to_owned())),
    );

    let start = Instant::now();
    let request = build_request_with(&params, &event.to_bytes(), a.t, a.r, &options, &mut ids, &mut rng)?;
    let request_ms = ms_since(start);

    let mut reply_ms = Vec::new();
    let mut fractions = Vec::new();
    for k in &replier_keys {
        let start = Instant::now();
        let prepared = PreparedRequest::check(&params, &request)?;
        fractions.push(prepared.reply(&params, k, &HashSet::new(), &mut rng)?);
        reply_ms.push(ms_since(start));
    }

    let start = Instant::now();
    let announcement = PreparedRequest::trusted(&params, &request)?.assemble(&params, &initiator, &fractions, &mut rng)?;
    let assemble_ms = ms_since(start);

    let start = Instant::now();
    let verdict = verify_ring(&params, &announcement);
    let verify_ms = ms_since(start);

    let mean_reply = if reply_ms.is_empty() {
        0.0
    } else {
        reply_ms.iter().sum::<f64>() / reply_ms.len() as f64
    };
    println!("verdict: {}", if verdict.is_ok() { "accept" } else { "reject" });
    println!("t: {}  r: {}  repliers: {repliers}", a.t, a.r);
    println!("request_ms: {request_ms:.3}");
    println!("reply_ms_mean: {mean_reply:.3}");
    println!("assemble_ms: {assemble_ms:.3}");
    println!("verify_ms: {verify_ms:.3}");
    verdict.map_err(|e| CliError::Rejected(e.to_string()))?;

    if let Some(out) = &a.out {
        let packet = Packet::Aggregation(AggregationPacket { announcement });
        write_file(out, &encode_packet(params.curve(), &packet), a.force)?;
        println!("announcement: {}", out.display());
    }
    Ok(())
}

pub fn verify(a: &VerifyArgs) -> Result<(), CliError> {
    let params = load_params(&a.params)?;
    let bytes = read_file(&a.input)?;
    let packet = match decode_packet(params.curve(), &bytes)? {
        Packet::Aggregation(p) => p,
        _ => return Err(CliError::Rejected("not an aggregation packet".into())),
    };
    let verdict = match a.now {
        Some(now) => verify_announcement(&params, &packet, now, a.window).map_err(|e| e.to_string()),
        None => verify_ring(&params, &packet.announcement).map_err(|e| e.to_string()),
    };
    match verdict {
        Ok(()) => {
            let ann = &packet.announcement;
            println!("accept  t: {}  r: {}", ann.t, ann.r());
            Ok(())
        }
        Err(reason) => {
            println!("reject");
            Err(CliError::Rejected(reason))
        }
    }
}

#[derive(Serialize)]
struct CostsTable {
    costs: ModeledCosts,
}

pub fn bench(a: &BenchArgs) -> Result<(), CliError> {
    for p in a.out.iter().chain(&a.calibrate) {
        ensure_writable(p, a.force)?;
    }
    if let Some(first) = a.out.iter().chain(&a.calibrate).min() {
        ensure_writable(&sibling_manifest(first), a.force)?;
    }
    let material = match &a.master {
        Some(p) => MasterKeyMaterial::from_bytes(&read_file(p)?)?,
        None => setup(256, a.seed)?.0,
    };
    let mut cells = Vec::new();
    for &r in &a.r.0 {
        for &t in &a.t.0 {
            if t >= 1 && r > t + 5 {
                cells.push((t, r));
            } else {
                eprintln!("skipping t={t} r={r}: the ring must exceed the threshold by more than five");
            }
        }
    }
    if cells.is_empty() {
        return Err(CliError::Config("no valid (t, r) cells".into()));
    }
    if a.reps == 0 {
        return Err(CliError::Config("--reps must be at least 1".into()));
    }
    eprintln!("timing {} cells x {} repetitions", cells.len(), a.reps);
    let timings = bench_grid(&material, &cells, a.reps, a.seed)?;

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for t in &timings {
        csv.push_str(&t.csv_row());
        csv.push('\n');
    }
    let mut manifest = RunManifest::new(
        "bench",
        a.seed,
        serde_json::json!({
            "master": a.master,
            "t": a.t.0,
            "r": a.r.0,
            "reps": a.reps,
        }),
    );
    match &a.out {
        Some(out) => {
            write_file(out, csv.as_bytes(), a.force)?;
            manifest.outputs.push(out.clone());
        }
        None => print!("{csv}"),
    }
    if let Some(path) = &a.calibrate {
        let costs = CostsTable {
            costs: ModeledCosts::calibrate(&timings),
        };
        let text = toml::to_string(&costs).map_err(|e| CliError::Config(e.to_string()))?;
        write_file(path, text.as_bytes(), a.force)?;
        manifest.outputs.push(path.clone());
    }
    if let Some(first) = manifest.outputs.iter().min().cloned() {
        manifest.write(&sibling_manifest(&first), a.force)?;
    }
    Ok(())
}

fn sibling_manifest(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}

pub fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&a.config).map_err(|e| CliError::io(&a.config, e))?;
    let mut spec = SweepSpec::from_config(&text)?;
    if let Some(seed) = a.seed {
        spec.base.seed = seed;
    }
    if let Some(t) = &a.t {
        spec.axes.t = t.0.clone();
    }
    if let Some(r) = &a.r {
        spec.axes.r = r.0.clone();
    }
    if let Some(runs) = a.runs {
        spec.axes.runs = runs;
    }
    if let Some(mode) = a.crypto_mode {
        spec.base.crypto_mode = mode.into();
    }
    if spec.axes.runs == 0 {
        return Err(CliError::Config("runs must be at least 1".into()));
    }
    let cells = spec.cells();
    for c in &cells {
        c.validate()?;
    }

    let summary_path = a.out.join("summary.csv");
    let runs_path = a.out.join("runs.csv");
    let tidy_path = a.out.join(match a.format {
        TidyFormat::Csv => "tidy.csv",
        TidyFormat::Jsonl => "tidy.jsonl",
    });
    let manifest_path = a.out.join("manifest.json");
    for p in [&summary_path, &runs_path, &tidy_path, &manifest_path] {
        ensure_writable(p, a.force)?;
    }

    let mut summaries = Vec::with_capacity(cells.len());
    let mut all_runs: Vec<SimMetrics> = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        eprintln!(
            "cell {}/{}: vehicles={} t={} r={}",
            i + 1,
            cells.len(),
            cell.vehicles,
            cell.t,
            cell.r
        );
        let runs = run_batch(cell, spec.axes.runs);
        summaries.push(CellSummary::from_runs(cell, &runs));
        all_runs.extend(runs);
    }
    let tidy: Vec<TidyRow> = summaries.iter().flat_map(|s| s.tidy()).collect();

    let mut summary_csv = Vec::new();
    write_csv(&mut summary_csv, &summaries).map_err(csv_err)?;
    let mut runs_csv = Vec::new();
    write_csv(&mut runs_csv, &all_runs).map_err(csv_err)?;
    let mut tidy_out = Vec::new();
    match a.format {
        TidyFormat::Csv => write_csv(&mut tidy_out, &tidy).map_err(csv_err)?,
        TidyFormat::Jsonl => write_jsonl(&mut tidy_out, &tidy).map_err(csv_err)?,
    }
    write_file(&summary_path, &summary_csv, a.force)?;
    write_file(&runs_path, &runs_csv, a.force)?;
    write_file(&tidy_path, &tidy_out, a.force)?;

    let mut manifest = RunManifest::new(
        "simulate",
        spec.base.seed,
        serde_json::json!({ "scenario": spec.base, "sweep": spec.axes }),
    );
    manifest.outputs = vec![summary_path, runs_path, tidy_path];
    manifest.write(&manifest_path, a.force)?;
    std::io::stdout()
        .write_all(&summary_csv)
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
    Ok(())
}

pub fn anonymity(a: &AnonymityArgs) -> Result<(), CliError> {
    if let Some(out) = &a.out {
        ensure_writable(out, a.force)?;
    }
    let js: Vec<u32> = match a.j {
        Some(j) => vec![j],
        None => (1..=a.t).collect(),
    };
    let mut text = String::from("t,r,j,exact,probability\n");
    for j in js {
        let exact = anonymity_prob_exact(a.t, a.r, j).map_err(|e| CliError::Config(e.to_string()))?;
        let p = anonymity_prob(a.t, a.r, j).map_err(|e| CliError::Config(e.to_string()))?;
        text.push_str(&format!("{},{},{j},{exact},{p:.12}\n", a.t, a.r));
    }
    match &a.out {
        Some(out) => write_file(out, text.as_bytes(), a.force),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
