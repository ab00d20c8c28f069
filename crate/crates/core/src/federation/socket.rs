//! Stream transport: each frame is a 4-byte big-endian length, then one
//! encoded [`RoundMessage`].

use std::io::{ErrorKind, Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::time::{Duration, Instant};

use super::message::RoundMessage;
use super::server::FederationServer;
use crate::error::{Error, Result};

/// Frames above this size are refused before allocation.
pub const MAX_FRAME: usize = 1 << 28;

pub fn write_frame<W: Write>(w: &mut W, msg: &RoundMessage) -> Result<()> {
    let body = msg.encode();
    w.write_all(&(body.len() as u32).to_be_bytes())?;
    w.write_all(&body)?;
    w.flush()?;
    Ok(())
}

pub fn read_frame<R: Read>(r: &mut R) -> Result<RoundMessage> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let n = u32::from_be_bytes(len) as usize;
    if n > MAX_FRAME {
        return Err(Error::Decode(format!("frame of {n} bytes exceeds limit")));
    }
    let mut body = vec![0u8; n];
    r.read_exact(&mut body)?;
    RoundMessage::decode(&body)
}

fn timed_out(what: &str) -> Error {
    Error::Federation(format!("round barrier timed out waiting for {what}"))
}

/// Runs one round over TCP. Every roster agent connects once, sends its
/// uploads, and receives its share of the distribution on the same stream.
/// The round aborts without aggregating if the barrier times out.
pub fn serve_round(server: &mut FederationServer, listener: &TcpListener) -> Result<()> {
    let timeout = Duration::from_millis(server.config().timeout_ms);
    let deadline = Instant::now() + timeout;
    let per_agent = server.kinds().len();
    let expected = server.roster().len();
    listener.set_nonblocking(true)?;
    let mut conns: Vec<(u32, TcpStream)> = Vec::with_capacity(expected);
    let mut uploads = Vec::with_capacity(expected * per_agent);
    while conns.len() < expected {
        match listener.accept() {
            Ok((mut stream, _)) => {
                stream.set_nonblocking(false)?;
                let left = deadline.saturating_duration_since(Instant::now()).max(Duration::from_millis(1));
                stream.set_read_timeout(Some(left))?;
                let mut agent = None;
                for _ in 0..per_agent {
                    let m = read_frame(&mut stream).map_err(|e| match e {
                        Error::Io(ref io) if matches!(io.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => timed_out("uploads"),
                        other => other,
                    })?;
                    if *agent.get_or_insert(m.agent) != m.agent {
                        return Err(Error::Federation("one connection carried several agent ids".into()));
                    }
                    uploads.push(m);
                }
                conns.push((agent.expect("per_agent >= 1"), stream));
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => {
                if Instant::now() >= deadline {
                    return Err(timed_out("agents to connect"));
                }
                std::thread::sleep(Duration::from_millis(1));
            }
            Err(e) => return Err(e.into()),
        }
    }
    let dist = server.run_round(&uploads)?;
    for (agent, stream) in &mut conns {
        for m in &dist[agent] {
            write_frame(stream, m)?;
        }
    }
    Ok(())
}

/// Agent side of [`serve_round`]: uploads `msgs` and waits for as many replies.
pub fn client_round<A: ToSocketAddrs>(addr: A, msgs: &[RoundMessage], timeout: Duration) -> Result<Vec<RoundMessage>> {
    let mut stream = TcpStream::connect(addr)?;
    stream.set_read_timeout(Some(timeout))?;
    for m in msgs {
        write_frame(&mut stream, m)?;
    }
    (0..msgs.len()).map(|_| read_frame(&mut stream)).collect()
}

#[cfg(test)]
mod tests {
    use super::super::message::PayloadKind;
    use super::super::server::{FederationConfig, FederationServer};
    use super::*;
    use crate::nn::ParamSet;

    fn scalar(x: f32) -> ParamSet {
        ParamSet::from_parts(vec![vec![1]], vec![x]).unwrap()
    }

    #[test]
    fn frame_round_trip_in_memory() {
        let m = RoundMessage::new(3, 1, PayloadKind::Trend1, &scalar(0.5));
        let mut buf = Vec::new();
        write_frame(&mut buf, &m).unwrap();
        assert_eq!(&buf[..4], &(m.encode().len() as u32).to_be_bytes());
        assert_eq!(read_frame(&mut buf.as_slice()).unwrap(), m);
        assert!(read_frame(&mut &buf[..buf.len() - 1]).is_err());
    }

    #[test]
    fn round_over_tcp() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let cfg = FederationConfig {
            eps: 0.5,
            timeout_ms: 10_000,
            ..FederationConfig::default()
        };
        let init = vec![(PayloadKind::Trend1, scalar(0.0)), (PayloadKind::Trend2, scalar(0.0))];
        let mut server = FederationServer::new(cfg, &[0, 1], init).unwrap();
        let clients: Vec<_> = [(0u32, 2.0f32), (1, 4.0)]
            .into_iter()
            .map(|(a, v)| {
                std::thread::spawn(move || {
                    let msgs = [PayloadKind::Trend1, PayloadKind::Trend2].map(|k| RoundMessage::new(0, a, k, &scalar(v)));
                    client_round(addr, &msgs, Duration::from_secs(10)).unwrap()
                })
            })
            .collect();
        serve_round(&mut server, &listener).unwrap();
        for c in clients {
            let got = c.join().unwrap();
            // 0 → 1 → 2.5
            assert!(got.iter().all(|m| m.params().unwrap().values()[0] == 2.5));
        }
    }

    #[test]
    fn barrier_times_out_without_aggregating() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let cfg = FederationConfig {
            timeout_ms: 50,
            ..FederationConfig::default()
        };
        let init = vec![(PayloadKind::Trend1, scalar(0.0)), (PayloadKind::Trend2, scalar(0.0))];
        let mut server = FederationServer::new(cfg, &[0], init).unwrap();
        assert!(matches!(serve_round(&mut server, &listener), Err(Error::Federation(_))));
        assert_eq!(server.round(), 0);
    }
}
