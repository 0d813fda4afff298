//! Compressed size of a rendered run as a complexity proxy.
//!
//! Two encoder variants exist. `Mp4` pipes raw frames through an external
//! ffmpeg/libx264 at pinned settings. `Deflate` compresses the concatenated
//! raw frame stream in-process and needs no external tools. Byte counts from
//! different variants measure different things and must not be compared;
//! [`EncoderConfig::digest`] identifies the variant and its settings.

use std::io::{Read, Write};
use std::process::{Command, Stdio};

use flate2::write::DeflateEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::frames::FrameSequence;
use crate::error::{Error, Result};

/// Environment variable naming the ffmpeg binary to use for MP4 encoding.
pub const ENCODER_ENV: &str = "FLOWLENIA_FFMPEG";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase", deny_unknown_fields)]
pub enum EncoderConfig {
    Deflate {
        level: u32,
    },
    Mp4 {
        program: String,
        codec: String,
        crf: u32,
        preset: String,
        fps: u32,
    },
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig::Deflate { level: 6 }
    }
}

impl EncoderConfig {
    pub fn mp4(program: impl Into<String>) -> Self {
        EncoderConfig::Mp4 {
            program: program.into(),
            codec: "libx264".into(),
            crf: 23,
            preset: "medium".into(),
            fps: 25,
        }
    }

    /// MP4 when [`ENCODER_ENV`] names an encoder, the built-in fallback
    /// otherwise.
    pub fn from_env() -> Self {
        match std::env::var(ENCODER_ENV) {
            Ok(path) if !path.trim().is_empty() => Self::mp4(path),
            _ => Self::default(),
        }
    }

    /// Short stable identifier of the variant and its settings.
    pub fn digest(&self) -> String {
        let canonical = match self {
            EncoderConfig::Deflate { level } => format!("deflate;level={level}"),
            // the program path is deliberately excluded: it does not change the output format
            EncoderConfig::Mp4 { codec, crf, preset, fps, .. } => {
                format!("mp4;codec={codec};crf={crf};preset={preset};fps={fps}")
            }
        };
        let hash = Sha256::digest(canonical.as_bytes());
        hash[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            EncoderConfig::Deflate { .. } => "deflate",
            EncoderConfig::Mp4 { .. } => "mp4",
        }
    }

    /// File extension for encoded artifacts.
    pub fn extension(&self) -> &'static str {
        match self {
            EncoderConfig::Deflate { .. } => "rgb.deflate",
            EncoderConfig::Mp4 { .. } => "mp4",
        }
    }
}

pub fn encode(frames: &FrameSequence, encoder: &EncoderConfig) -> Result<Vec<u8>> {
    let Some((width, height)) = frames.dimensions() else {
        return Err(Error::invalid("cannot encode zero frames"));
    };
    match encoder {
        EncoderConfig::Deflate { level } => {
            let mut enc = DeflateEncoder::new(Vec::new(), Compression::new((*level).min(9)));
            for frame in &frames.frames {
                enc.write_all(&frame.rgb)?;
            }
            Ok(enc.finish()?)
        }
        EncoderConfig::Mp4 { program, codec, crf, preset, fps } => {
            encode_external(frames, width, height, program, codec, *crf, preset, *fps)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn encode_external(
    frames: &FrameSequence,
    width: usize,
    height: usize,
    program: &str,
    codec: &str,
    crf: u32,
    preset: &str,
    fps: u32,
) -> Result<Vec<u8>> {
    let size = format!("{width}x{height}");
    let mut child = Command::new(program)
        .args(["-hide_banner", "-loglevel", "error", "-nostdin"])
        .args(["-f", "rawvideo", "-pix_fmt", "rgb24", "-s", &size])
        .args(["-r", &fps.to_string(), "-i", "pipe:0"])
        .args(["-vf", "pad=ceil(iw/2)*2:ceil(ih/2)*2"])
        .args(["-c:v", codec, "-preset", preset, "-crf", &crf.to_string()])
        .args(["-pix_fmt", "yuv420p", "-threads", "1", "-bitexact"])
        .args(["-movflags", "frag_keyframe+empty_moov", "-f", "mp4", "pipe:1"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Error::Encoder(format!("failed to start {program}: {e}")))?;

    let mut stdin = child.stdin.take().expect("stdin is piped");
    let raw: Vec<u8> = frames.frames.iter().flat_map(|f| f.rgb.iter().copied()).collect();
    let writer = std::thread::spawn(move || stdin.write_all(&raw));
    let mut stderr = child.stderr.take().expect("stderr is piped");
    let err_reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stderr.read_to_string(&mut s);
        s
    });
    let mut out = Vec::new();
    child
        .stdout
        .take()
        .expect("stdout is piped")
        .read_to_end(&mut out)?;
    let status = child.wait()?;
    let write_result = writer.join().expect("encoder writer thread panicked");
    let diagnostics = err_reader.join().unwrap_or_default();
    if !status.success() || write_result.is_err() {
        return Err(Error::Encoder(format!(
            "{program} exited with {status}: {}",
            diagnostics.trim()
        )));
    }
    Ok(out)
}

/// Encoded size in bytes.
pub fn compression_complexity(frames: &FrameSequence, encoder: &EncoderConfig) -> Result<u64> {
    Ok(encode(frames, encoder)?.len() as u64)
}
