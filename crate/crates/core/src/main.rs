//! `vcnn` command-line front end.
//!
//! Exit codes: 0 success, 1 internal error, 2 usage or input error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use vcnn::codec::{bs_planes, cnnlf_filter_frame, decode_sequence, encode_sequence, AuxFrame, CodecTools, EncoderConfig, FrameStats};
use vcnn::nn::{load_weights, save_weights, CnnlfPair, NnIntraSet, PlaneKind, Tensor, TensorMap};
use vcnn::pipeline::{analyze, AnalyzeConfig};
use vcnn::qp_adapt::{parse_qpmap, write_qpmap, AdaptConfig, QpPlan};
use vcnn::synth::{noise_clip, panning_clip, persistent_transient_clip, static_clip, Rect};
use vcnn::video_io::{frame_psnr, read_yuv420, sequence_psnr, write_yuv420, Frame420, FramePsnr, Psnr};

#[derive(Parser, Debug)]
#[command(name = "vcnn", version, about = "Perceptual QP adaptation and neural coding tools in a toy block codec")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify the clip, derive key-frame/perceptual/BIM QP offsets and write a QPMAP.
    Analyze(AnalyzeArgs),
    /// Encode raw YUV into a TVC1 bitstream.
    Encode(EncodeArgs),
    /// Decode a TVC1 bitstream to raw YUV.
    Decode(DecodeArgs),
    /// Per-frame and mean PSNR of a YUV file against a reference.
    Metrics(MetricsArgs),
    /// Run the CNN loop filter over a YUV file outside the codec.
    Filter(FilterArgs),
    /// Run one named network on a tensor read from an NNWF file.
    NnEval(NnEvalArgs),
    /// Write a synthetic test clip.
    Synth(SynthArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
struct Geometry {
    /// Raw YUV 4:2:0 input.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    width: usize,
    #[arg(long)]
    height: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
struct AnalysisArgs {
    /// Base QP.
    #[arg(long, default_value_t = 32)]
    qp: i32,
    #[arg(long, default_value_t = 128)]
    ctu_size: usize,
    #[arg(long, default_value_t = 16)]
    search_range: u32,
    #[arg(long)]
    enable_bim: bool,
    #[arg(long)]
    enable_perceptual: bool,
    /// Activity at or above which a clip counts as fast-moving.
    #[arg(long, default_value_t = 2.0)]
    activity_threshold: f64,
    #[arg(long, default_value_t = 1.0)]
    slow_gain: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl AnalysisArgs {
    fn config(&self) -> AnalyzeConfig {
        AnalyzeConfig {
            base_qp: self.qp,
            ctu_size: self.ctu_size,
            enable_bim: self.enable_bim,
            enable_perceptual: self.enable_perceptual,
            adapt: AdaptConfig {
                activity_threshold: self.activity_threshold,
                slow_gain: self.slow_gain,
                search_range: self.search_range,
                ..AdaptConfig::default()
            },
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct AnalyzeArgs {
    #[command(flatten)]
    geometry: Geometry,
    #[command(flatten)]
    analysis: AnalysisArgs,
    /// QPMAP output path.
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct WeightArgs {
    /// NNWF file with the luma and chroma CNNLF models; enables the loop filter.
    #[arg(long)]
    cnnlf_weights: Option<PathBuf>,
    /// NNWF file with NN-intra models; enables the NN-intra mode.
    #[arg(long)]
    nn_intra_weights: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct EncodeArgs {
    #[command(flatten)]
    geometry: Geometry,
    #[command(flatten)]
    analysis: AnalysisArgs,
    #[command(flatten)]
    weights: WeightArgs,
    /// Bitstream output path.
    #[arg(long)]
    output: PathBuf,
    /// Per-CTU QPs; overrides --qp and the analysis toggles.
    #[arg(long)]
    qpmap: Option<PathBuf>,
    /// Require the CNN loop filter (fails without --cnnlf-weights).
    #[arg(long)]
    enable_cnnlf: bool,
    /// Require NN-intra (fails without --nn-intra-weights).
    #[arg(long)]
    enable_nn_intra: bool,
    /// Directory for the training side data (rec/pred/bs/orig planes).
    #[arg(long)]
    dump_aux: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct DecodeArgs {
    /// TVC1 bitstream.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    weights: WeightArgs,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct MetricsArgs {
    #[command(flatten)]
    geometry: Geometry,
    /// Reference (original) YUV.
    #[arg(long)]
    reference: PathBuf,
    /// Report path; stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct FilterArgs {
    #[command(flatten)]
    geometry: Geometry,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    qp: i32,
    #[arg(long)]
    cnnlf_weights: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct NnEvalArgs {
    /// NNWF file holding the model.
    #[arg(long)]
    weights: PathBuf,
    /// `luma`, `chroma`, or an NN-intra prefix such as `intra.16x16.qp32`.
    #[arg(long)]
    model: String,
    /// NNWF file with the input: `input` for CNNLF, `above` and `left` for NN-intra.
    #[arg(long)]
    input: PathBuf,
    /// NNWF file receiving the outputs.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ClipKind {
    Static,
    Noise,
    Pan,
    Transient,
}

#[derive(Args, Debug, Serialize)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: ClipKind,
    #[arg(long)]
    width: usize,
    #[arg(long)]
    height: usize,
    #[arg(long, default_value_t = 9)]
    frames: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

/// Marks an error as the caller's fault (exit code 2).
#[derive(Debug)]
struct InputError(String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input_err(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<InputError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<vcnn::Error>() {
            return if matches!(e, vcnn::Error::Io(_)) { 1 } else { 2 };
        }
    }
    1
}

fn read_input(path: &Path) -> anyhow::Result<Vec<u8>> {
    fs::read(path).map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("cannot create a file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(fs::Permissions::from_mode(0o644))?;
    }
    tmp.persist(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

fn read_clip(g: &Geometry) -> anyhow::Result<Vec<Frame420>> {
    let bytes = read_input(&g.input)?;
    let frames = read_yuv420(&bytes, g.width, g.height).with_context(|| format!("reading {}", g.input.display()))?;
    if frames.is_empty() {
        return Err(input_err(format!("{} contains no frames", g.input.display())));
    }
    Ok(frames)
}

fn load_map(path: &Path) -> anyhow::Result<TensorMap> {
    let bytes = read_input(path)?;
    load_weights(&bytes).with_context(|| format!("loading weights {}", path.display()))
}

fn load_tools(w: &WeightArgs) -> anyhow::Result<CodecTools> {
    let mut tools = CodecTools::default();
    if let Some(p) = &w.cnnlf_weights {
        tools.cnnlf = Some(CnnlfPair::from_tensors(&load_map(p)?).with_context(|| format!("cnnlf models in {}", p.display()))?);
    }
    if let Some(p) = &w.nn_intra_weights {
        tools.nn_intra = Some(NnIntraSet::from_tensors(&load_map(p)?).with_context(|| format!("nn-intra models in {}", p.display()))?);
    }
    Ok(tools)
}

fn cmd_analyze(a: &AnalyzeArgs) -> anyhow::Result<()> {
    let cfg = a.analysis.config();
    vcnn::ctu::check_ctu_size(cfg.ctu_size)?;
    let frames = read_clip(&a.geometry)?;
    let result = analyze(&frames, &cfg)?;
    write_atomic(&a.output, write_qpmap(&result.plan).as_bytes())?;
    if let Some(r) = &a.report {
        write_json(r, &json!({ "command": "analyze", "args": a, "analysis": result.report }))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct FrameReport<'a> {
    #[serde(flatten)]
    stats: &'a FrameStats,
    psnr: FramePsnr,
}

fn cmd_encode(a: &EncodeArgs) -> anyhow::Result<()> {
    if a.enable_cnnlf && a.weights.cnnlf_weights.is_none() {
        return Err(input_err("--enable-cnnlf needs --cnnlf-weights"));
    }
    if a.enable_nn_intra && a.weights.nn_intra_weights.is_none() {
        return Err(input_err("--enable-nn-intra needs --nn-intra-weights"));
    }
    let frames = read_clip(&a.geometry)?;
    let tools = load_tools(&a.weights)?;
    let cfg = a.analysis.config();
    let (plan, analysis) = match &a.qpmap {
        Some(p) => {
            let text = String::from_utf8(read_input(p)?).map_err(|_| input_err(format!("{} is not UTF-8", p.display())))?;
            (parse_qpmap(&text).with_context(|| format!("parsing {}", p.display()))?, None)
        }
        None if cfg.enable_bim || cfg.enable_perceptual => {
            let r = analyze(&frames, &cfg)?;
            (r.plan, Some(r.report))
        }
        None => (QpPlan::uniform(cfg.base_qp, frames[0].width(), frames[0].height(), cfg.ctu_size, frames.len())?, None),
    };
    let enc_cfg = EncoderConfig {
        search_range: a.analysis.search_range,
        enable_cnnlf: tools.cnnlf.is_some(),
        enable_nn_intra: tools.nn_intra.is_some(),
        collect_aux: a.dump_aux.is_some(),
    };
    let out = encode_sequence(&frames, &plan, &enc_cfg, &tools)?;
    write_atomic(&a.output, &out.bitstream)?;
    if let Some(dir) = &a.dump_aux {
        dump_aux(dir, &frames, &out.aux, a)?;
    }
    if let Some(r) = &a.report {
        let per_frame: Vec<FrameReport> = out
            .stats
            .iter()
            .zip(frames.iter().zip(&out.recon))
            .map(|(s, (o, rec))| Ok(FrameReport { stats: s, psnr: frame_psnr(o, rec)? }))
            .collect::<vcnn::Result<_>>()?;
        let total_bits: usize = out.bitstream.len() * 8;
        write_json(
            r,
            &json!({
                "command": "encode",
                "args": a,
                "encoder": enc_cfg,
                "header": out.header,
                "total_bits": total_bits,
                "mean_psnr_y": sequence_psnr(&frames, &out.recon)?,
                "frames": per_frame,
                "qp_plan": plan,
                "analysis": analysis,
            }),
        )?;
    }
    Ok(())
}

/// Side data for the trainer: `orig.yuv`, `rec.yuv` (before the loop filter),
/// `pred.yuv` and `bs.yuv` (boundary strengths 0/1/2; the chroma BS plane is
/// stored as both Cb and Cr), all I420 at the clip size, plus `meta.json`.
fn dump_aux(dir: &Path, orig: &[Frame420], aux: &[AuxFrame], a: &EncodeArgs) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let rec: Vec<Frame420> = aux.iter().map(|f| f.rec.clone()).collect();
    let pred: Vec<Frame420> = aux.iter().map(|f| f.pred.clone()).collect();
    let bs = aux
        .iter()
        .map(|f| Frame420::new(f.bs_luma.clone(), f.bs_chroma.clone(), f.bs_chroma.clone(), f.poc))
        .collect::<vcnn::Result<Vec<_>>>()?;
    for (name, frames) in [("orig.yuv", orig), ("rec.yuv", &rec[..]), ("pred.yuv", &pred[..]), ("bs.yuv", &bs[..])] {
        write_atomic(&dir.join(name), &write_yuv420(frames)?)?;
    }
    let meta = json!({
        "format": "vcnn-aux",
        "version": 1,
        "width": orig[0].width(),
        "height": orig[0].height(),
        "frame_count": aux.len(),
        "layout": "I420, 8-bit, frames concatenated in coding order",
        "files": { "orig": "orig.yuv", "rec": "rec.yuv", "pred": "pred.yuv", "bs": "bs.yuv" },
        "frames": aux.iter().map(|f| json!({ "poc": f.poc, "qp": f.qp })).collect::<Vec<_>>(),
        "args": a,
    });
    write_json(&dir.join("meta.json"), &meta)
}

fn cmd_decode(a: &DecodeArgs) -> anyhow::Result<()> {
    let bytes = read_input(&a.input)?;
    let tools = load_tools(&a.weights)?;
    let dec = decode_sequence(&bytes, &tools).with_context(|| format!("decoding {}", a.input.display()))?;
    write_atomic(&a.output, &write_yuv420(&dec.frames)?)?;
    if let Some(r) = &a.report {
        let frames: Vec<_> = dec
            .frame_headers
            .iter()
            .zip(&dec.frame_bits)
            .map(|(h, bits)| {
                json!({
                    "poc": h.poc,
                    "is_key": h.is_key,
                    "qp": h.qp,
                    "bits": bits,
                    "ctu_qps": h.ctu_qps,
                    "cnnlf_frame_flag": h.cnnlf_on(),
                    "cnnlf_flags": h.cnnlf_flags,
                })
            })
            .collect();
        write_json(r, &json!({ "command": "decode", "args": a, "header": dec.header, "total_bits": bytes.len() * 8, "frames": frames }))?;
    }
    Ok(())
}

fn cmd_metrics(a: &MetricsArgs) -> anyhow::Result<()> {
    let test = read_clip(&a.geometry)?;
    let reference = read_clip(&Geometry { input: a.reference.clone(), ..a.geometry.clone() })?;
    if test.len() != reference.len() {
        return Err(input_err(format!("{} has {} frames, reference has {}", a.geometry.input.display(), test.len(), reference.len())));
    }
    let per_frame = reference
        .iter()
        .zip(&test)
        .map(|(r, t)| Ok(json!({ "poc": r.poc, "psnr": frame_psnr(r, t)? })))
        .collect::<vcnn::Result<Vec<_>>>()?;
    let mean: Psnr = sequence_psnr(&reference, &test)?;
    let report = json!({ "command": "metrics", "args": a, "frames": per_frame, "mean_psnr_y": mean });
    match &a.report {
        Some(p) => write_json(p, &report),
        None => {
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
    }
}

/// Standalone filtering has no coding decisions to draw on: the prediction input
/// is the picture itself and the BS planes assume intra 16x16 blocks.
fn cmd_filter(a: &FilterArgs) -> anyhow::Result<()> {
    if !(0..=63).contains(&a.qp) {
        return Err(input_err(format!("--qp must be in [0, 63], got {}", a.qp)));
    }
    let frames = read_clip(&a.geometry)?;
    let pair = CnnlfPair::from_tensors(&load_map(&a.cnnlf_weights)?)?;
    let (w, h) = (frames[0].width(), frames[0].height());
    let (cols, rows) = vcnn::codec::block::block_grid(w, h);
    let (bs_luma, bs_chroma) = bs_planes(&vec![vcnn::codec::BlockMode::Dc; cols * rows], w, h);
    let out = frames
        .iter()
        .map(|f| cnnlf_filter_frame(&pair, f, f, &bs_luma, &bs_chroma, a.qp))
        .collect::<vcnn::Result<Vec<_>>>()?;
    write_atomic(&a.output, &write_yuv420(&out)?)
}

fn cmd_nn_eval(a: &NnEvalArgs) -> anyhow::Result<()> {
    let weights = load_map(&a.weights)?;
    let inputs = load_map(&a.input)?;
    let mut out = TensorMap::new();
    match a.model.as_str() {
        "luma" | "chroma" => {
            let kind = if a.model == "luma" { PlaneKind::Luma } else { PlaneKind::Chroma };
            let model = vcnn::nn::CnnlfModel::from_tensors(&weights, kind)?;
            let x = inputs.require("input")?;
            out.insert("output", model.residual(x)?)?;
        }
        name => {
            let Some((w, h, qp)) = parse_intra_name(name) else {
                return Err(input_err(format!("unknown model {name:?}; expected luma, chroma or intra.<w>x<h>.qp<q>")));
            };
            let model = vcnn::nn::NnIntraModel::from_tensors(&weights, w, h, qp)?;
            let r = model.forward(inputs.require("above")?, inputs.require("left")?)?;
            out.insert("pred", Tensor::new(vec![h, w], r.pred)?)?;
            out.insert("grp1", Tensor::new(vec![r.grp1.len()], r.grp1)?)?;
            out.insert("grp2", Tensor::new(vec![r.grp2.len()], r.grp2)?)?;
        }
    }
    write_atomic(&a.output, &save_weights(&out))
}

fn parse_intra_name(name: &str) -> Option<(usize, usize, i32)> {
    let rest = name.strip_prefix("intra.")?;
    let (size, qp) = rest.split_once(".qp")?;
    let (w, h) = size.split_once('x')?;
    Some((w.parse().ok()?, h.parse().ok()?, qp.parse().ok()?))
}

fn cmd_synth(a: &SynthArgs) -> anyhow::Result<()> {
    if a.width == 0 || a.height == 0 || !a.width.is_multiple_of(2) || !a.height.is_multiple_of(2) || a.frames == 0 {
        return Err(input_err("width and height must be positive and even, frames positive"));
    }
    let frames = match a.kind {
        ClipKind::Static => static_clip(a.width, a.height, a.frames),
        ClipKind::Noise => noise_clip(a.width, a.height, a.frames, a.seed),
        ClipKind::Pan => panning_clip(a.width, a.height, a.frames, 1.0, 0.5),
        ClipKind::Transient => {
            let r = Rect { x: a.width / 2, y: 0, w: a.width - a.width / 2, h: a.height };
            persistent_transient_clip(a.width, a.height, a.frames, r, a.seed)
        }
    };
    write_atomic(&a.output, &write_yuv420(&frames)?)
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Filter(a) => cmd_filter(a),
        Command::NnEval(a) => cmd_nn_eval(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
