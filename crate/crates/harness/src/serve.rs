//! WebSocket endpoint for live sessions.
//!
//! One connection is one [`LiveSession`]. A single loop per connection owns the
//! session: it drains inbound frames in arrival order and emits a state frame
//! every control tick.

use std::net::{SocketAddr, TcpListener, TcpStream};
use std::time::{Duration, Instant};

use tungstenite::{Message, WebSocket};
use vibroguide_core::{Error, Result};

use crate::config::ExperimentConfig;
use crate::live::{LiveSession, Outbound};

#[derive(Debug, Clone, Default)]
pub struct ServeOptions {
    /// Stop after this many connections; serve forever when `None`.
    pub max_connections: Option<usize>,
    /// Write closed logs and session events here.
    pub out_dir: Option<std::path::PathBuf>,
}

fn io<E: std::fmt::Display>(e: E) -> Error {
    Error::Input(e.to_string())
}

/// Binds `addr` and serves live sessions on it.
pub fn serve_session(config: &ExperimentConfig, addr: SocketAddr, opts: &ServeOptions) -> Result<()> {
    let listener = TcpListener::bind(addr).map_err(io)?;
    serve_on(listener, config, opts)
}

pub fn serve_on(listener: TcpListener, config: &ExperimentConfig, opts: &ServeOptions) -> Result<()> {
    config.validate()?;
    for (served, stream) in (1..).zip(listener.incoming()) {
        let stream = stream.map_err(io)?;
        let mut session = LiveSession::new(config.clone())?;
        if let Some(dir) = &opts.out_dir {
            session = session.writing_to(dir.clone())?;
        }
        // A broken connection ends its session, not the server.
        if let Err(e) = run_connection(stream, session, config.session.tick_hz) {
            eprintln!("session ended: {e}");
        }
        if opts.max_connections.is_some_and(|m| served >= m) {
            break;
        }
    }
    Ok(())
}

fn send(ws: &mut WebSocket<TcpStream>, frame: &Outbound) -> Result<()> {
    ws.send(Message::text(frame.to_json())).map_err(io)
}

fn run_connection(stream: TcpStream, mut session: LiveSession, tick_hz: u32) -> Result<()> {
    let mut ws = tungstenite::accept(stream).map_err(io)?;
    ws.get_ref().set_read_timeout(Some(Duration::from_millis(2))).map_err(io)?;
    let period = Duration::from_secs(1) / tick_hz;
    let mut next_tick = Instant::now() + period;
    loop {
        match ws.read() {
            Ok(Message::Text(text)) => {
                for out in session.handle_text(text.as_str()) {
                    send(&mut ws, &out)?;
                }
            }
            Ok(Message::Binary(_)) => send(&mut ws, &Outbound::Error {
                message: "binary frames are not supported".into(),
            })?,
            Ok(Message::Close(_)) => break,
            Ok(_) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {}
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => break,
            Err(e) => return Err(io(e)),
        }
        if Instant::now() >= next_tick {
            next_tick += period;
            match session.tick() {
                Ok(Some(state)) => send(&mut ws, &Outbound::State(state))?,
                Ok(None) => {}
                Err(e) => send(&mut ws, &Outbound::Error { message: e.to_string() })?,
            }
        }
    }
    Ok(())
}
