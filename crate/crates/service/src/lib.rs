//! Network front end for the raycaster.
//!
//! One session state is shared by every connected viewer. Controls arrive
//! as JSON over a websocket at `/ws`, are applied in order by a single
//! owner task, and each accepted control produces a freshly rendered frame
//! that is pushed to all viewers. `GET /healthz` reports build information
//! and any other path is served from an optional static directory.

pub mod protocol;
pub mod server;
pub mod session;

pub use protocol::{decode_frame, encode_frame, ControlMessage, ErrorReply, FrameMetadata};
pub use server::{serve, FrameEncoding, Service, ServiceConfig};
pub use session::{apply_control, ControlError, DatasetCatalog, SessionState};
