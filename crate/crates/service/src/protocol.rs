//! Wire format shared with the viewer.
//!
//! Client messages are JSON objects tagged by `type`. Each rendered frame
//! goes out as one binary message followed by one JSON metadata message.

use serde::{Deserialize, Serialize};

/// Control messages from the viewer. All controls are absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlMessage {
    /// Camera orbit angles in degrees.
    SetOrbit { azimuth: f64, elevation: f64 },
    SetZoom { zoom: f64 },
    /// Point light position, world units.
    SetLight { x: f64, y: f64, z: f64 },
    /// World-space corners of the marched box.
    SetClipBox { lo: [f64; 3], hi: [f64; 3] },
    SetThresholds { t_low: f64, t_high: f64 },
    /// One of `central`, `sobel3d`, `zucker-hummel`.
    SetOperator { name: String },
    SetResolution { width: usize, height: usize },
    SetDataset { id: String },
    /// `surface` or `composited`.
    SetMode { mode: String },
    /// Render the current state without changing it.
    RequestFrame,
}

impl ControlMessage {
    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("control messages always serialize")
    }
}

/// JSON message that follows every binary frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMetadata {
    pub frame_id: u64,
    pub render_ms: f64,
    /// Frame rate implied by the pure render time.
    pub fps: f64,
    pub operator: String,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReply {
    pub error: String,
}

/// Bytes before the image payload: 8-byte frame id and 4-byte payload
/// length, both big-endian.
pub const FRAME_HEADER_LEN: usize = 12;

pub fn encode_frame(frame_id: u64, payload: &[u8]) -> Vec<u8> {
    let len = u32::try_from(payload.len()).expect("frame payload below 4 GiB");
    let mut out = Vec::with_capacity(FRAME_HEADER_LEN + payload.len());
    out.extend_from_slice(&frame_id.to_be_bytes());
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(payload);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrameDecodeError {
    #[error("frame message shorter than its {FRAME_HEADER_LEN}-byte header")]
    Truncated,
    #[error("frame header announces {announced} payload bytes but {actual} follow")]
    Length { announced: usize, actual: usize },
}

/// Splits a binary frame message into its id and payload.
pub fn decode_frame(message: &[u8]) -> Result<(u64, &[u8]), FrameDecodeError> {
    if message.len() < FRAME_HEADER_LEN {
        return Err(FrameDecodeError::Truncated);
    }
    let (header, payload) = message.split_at(FRAME_HEADER_LEN);
    let id = u64::from_be_bytes(header[..8].try_into().unwrap());
    let announced = u32::from_be_bytes(header[8..].try_into().unwrap()) as usize;
    if announced != payload.len() {
        return Err(FrameDecodeError::Length {
            announced,
            actual: payload.len(),
        });
    }
    Ok((id, payload))
}
