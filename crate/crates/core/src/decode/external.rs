//! Client side of the predictor wire protocol: newline-delimited JSON over a
//! TCP connection or a child process's stdio.
//!
//! ```text
//! -> {"type":"hello","version":1}
//! <- {"type":"hello","version":1}
//! -> {"type":"choose","input":"...","emitted":"...","allowed":["copy","open","close:0"]}
//! <- {"type":"action","action":"close:0"}
//! -> {"type":"bye"}
//! ```

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::process::{Child, Command, Stdio};
use std::str::FromStr;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{Action, ChooseRequest, Predictor, PredictorError, PredictorFactory};
use crate::annotation::render_items;
use crate::corpus::Document;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WireMessage {
    Hello {
        version: u32,
    },
    Choose {
        input: String,
        emitted: String,
        allowed: Vec<String>,
    },
    Action {
        action: String,
    },
    Bye,
    Error {
        message: String,
    },
}

impl WireMessage {
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("wire messages serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Tcp(String),
    /// Program and arguments of a predictor speaking the protocol on stdio.
    Stdio(Vec<String>),
}

impl FromStr for Endpoint {
    type Err = String;

    /// `tcp:HOST:PORT` or `stdio:PROGRAM [ARGS...]`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(addr) = s.strip_prefix("tcp:") {
            return Ok(Endpoint::Tcp(addr.to_string()));
        }
        if let Some(cmd) = s.strip_prefix("stdio:") {
            let argv: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
            if argv.is_empty() {
                return Err("stdio endpoint needs a command".into());
            }
            return Ok(Endpoint::Stdio(argv));
        }
        Err(format!("endpoint {s:?} must start with tcp: or stdio:"))
    }
}

#[derive(Debug, Clone)]
pub struct ExternalConfig {
    pub endpoint: Endpoint,
    pub timeout: Duration,
}

pub struct ExternalPredictor {
    writer: Option<Box<dyn Write + Send>>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
    child: Option<Child>,
    closed: bool,
}

fn spawn_reader<R: Read + Send + 'static>(source: R) -> Receiver<std::io::Result<String>> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in BufReader::new(source).lines() {
            if tx.send(line).is_err() {
                break;
            }
        }
    });
    rx
}

fn transport(e: impl std::fmt::Display) -> PredictorError {
    PredictorError::Transport(e.to_string())
}

impl ExternalPredictor {
    pub fn connect(config: &ExternalConfig) -> Result<Self, PredictorError> {
        let (writer, lines, child): (Box<dyn Write + Send>, _, _) = match &config.endpoint {
            Endpoint::Tcp(addr) => {
                let sock = addr
                    .to_socket_addrs()
                    .map_err(transport)?
                    .next()
                    .ok_or_else(|| PredictorError::Transport(format!("{addr} resolves to nothing")))?;
                let stream = TcpStream::connect_timeout(&sock, config.timeout).map_err(transport)?;
                stream.set_nodelay(true).map_err(transport)?;
                let reader = stream.try_clone().map_err(transport)?;
                (Box::new(stream), spawn_reader(reader), None)
            }
            Endpoint::Stdio(argv) => {
                let mut child = Command::new(&argv[0])
                    .args(&argv[1..])
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .spawn()
                    .map_err(|e| PredictorError::Transport(format!("spawning {}: {e}", argv[0])))?;
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                (Box::new(stdin), spawn_reader(stdout), Some(child))
            }
        };
        let mut predictor = ExternalPredictor {
            writer: Some(writer),
            lines,
            timeout: config.timeout,
            child,
            closed: false,
        };
        predictor.send(&WireMessage::Hello {
            version: PROTOCOL_VERSION,
        })?;
        match predictor.receive()? {
            WireMessage::Hello {
                version: PROTOCOL_VERSION,
            } => Ok(predictor),
            other => Err(PredictorError::Protocol(format!(
                "expected hello version {PROTOCOL_VERSION}, got {other:?}"
            ))),
        }
    }

    fn send(&mut self, message: &WireMessage) -> Result<(), PredictorError> {
        let writer = self
            .writer
            .as_mut()
            .ok_or_else(|| PredictorError::Transport("session already closed".into()))?;
        writer.write_all(message.to_line().as_bytes()).map_err(transport)?;
        writer.flush().map_err(transport)
    }

    fn receive(&mut self) -> Result<WireMessage, PredictorError> {
        let line = match self.lines.recv_timeout(self.timeout) {
            Ok(line) => line.map_err(transport)?,
            Err(RecvTimeoutError::Timeout) => return Err(PredictorError::Timeout),
            Err(RecvTimeoutError::Disconnected) => {
                return Err(PredictorError::Transport("predictor closed the connection".into()))
            }
        };
        serde_json::from_str(&line).map_err(|e| PredictorError::Protocol(format!("bad message {line:?}: {e}")))
    }

    fn close(&mut self) -> Result<(), PredictorError> {
        if self.closed {
            return Ok(());
        }
        self.closed = true;
        let sent = self.send(&WireMessage::Bye);
        // closing our end lets a stdio server see EOF
        self.writer = None;
        if let Some(mut child) = self.child.take() {
            let deadline = Instant::now() + Duration::from_secs(1);
            while Instant::now() < deadline {
                if let Ok(Some(_)) = child.try_wait() {
                    return sent;
                }
                thread::sleep(Duration::from_millis(10));
            }
            let _ = child.kill();
            let _ = child.wait();
        }
        sent
    }
}

impl Predictor for ExternalPredictor {
    fn choose(&mut self, request: &ChooseRequest<'_>) -> Result<Action, PredictorError> {
        let message = WireMessage::Choose {
            input: request.input.render(request.doc),
            emitted: render_items(request.state.emitted(), request.doc),
            allowed: request.allowed.iter().map(ToString::to_string).collect(),
        };
        self.send(&message)?;
        match self.receive()? {
            WireMessage::Action { action } => action.parse().map_err(PredictorError::Protocol),
            WireMessage::Error { message } => Err(PredictorError::Protocol(format!("predictor reported: {message}"))),
            other => Err(PredictorError::Protocol(format!("expected an action, got {other:?}"))),
        }
    }

    fn finish(&mut self) -> Result<(), PredictorError> {
        self.close()
    }
}

impl Drop for ExternalPredictor {
    fn drop(&mut self) {
        let _ = self.close();
    }
}

/// Opens a fresh connection for every document.
pub struct ExternalFactory {
    pub config: ExternalConfig,
}

impl PredictorFactory for ExternalFactory {
    fn session(&self, _doc: &Document) -> Result<Box<dyn Predictor>, PredictorError> {
        Ok(Box::new(ExternalPredictor::connect(&self.config)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_shapes() {
        assert_eq!(
            WireMessage::Hello { version: 1 }.to_line(),
            "{\"type\":\"hello\",\"version\":1}\n"
        );
        assert_eq!(WireMessage::Bye.to_line(), "{\"type\":\"bye\"}\n");
        let parsed: WireMessage = serde_json::from_str(r#"{"type":"action","action":"close:1"}"#).unwrap();
        assert_eq!(
            parsed,
            WireMessage::Action {
                action: "close:1".into()
            }
        );
        let choose = WireMessage::Choose {
            input: "<target> a </target>".into(),
            emitted: String::new(),
            allowed: vec!["copy".into(), "open".into()],
        };
        assert_eq!(
            choose.to_line(),
            "{\"type\":\"choose\",\"input\":\"<target> a </target>\",\"emitted\":\"\",\"allowed\":[\"copy\",\"open\"]}\n"
        );
    }

    #[test]
    fn endpoints() {
        assert_eq!("tcp:127.0.0.1:9000".parse(), Ok(Endpoint::Tcp("127.0.0.1:9000".into())));
        assert_eq!(
            "stdio:python3 serve.py --replay t.json".parse(),
            Ok(Endpoint::Stdio(vec![
                "python3".into(),
                "serve.py".into(),
                "--replay".into(),
                "t.json".into()
            ]))
        );
        assert!("http://x".parse::<Endpoint>().is_err());
        assert!("stdio:".parse::<Endpoint>().is_err());
    }
}
