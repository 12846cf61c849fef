use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::time::{Duration, Instant};

use super::codec::{decode_message, encode_message, OscMessage};
use crate::error::{Error, Result};

const MAX_DATAGRAM: usize = 65_536;

/// Sends one datagram per message to a fixed destination.
#[derive(Debug)]
pub struct OscSender {
    socket: UdpSocket,
    destination: SocketAddr,
}

impl OscSender {
    /// Binds an ephemeral local port and targets `destination`.
    pub fn connect(destination: impl ToSocketAddrs) -> Result<Self> {
        let destination = destination
            .to_socket_addrs()
            .map_err(Error::Network)?
            .next()
            .ok_or_else(|| Error::InvalidConfig("OSC destination did not resolve".into()))?;
        let bind: SocketAddr = if destination.is_ipv4() {
            "0.0.0.0:0".parse().unwrap()
        } else {
            "[::]:0".parse().unwrap()
        };
        let socket = UdpSocket::bind(bind).map_err(Error::Network)?;
        Ok(Self {
            socket,
            destination,
        })
    }

    pub fn destination(&self) -> SocketAddr {
        self.destination
    }

    pub fn send(&self, msg: &OscMessage) -> Result<()> {
        let bytes = encode_message(msg)?;
        self.socket
            .send_to(&bytes, self.destination)
            .map_err(Error::Network)?;
        Ok(())
    }
}

/// Receives and decodes datagrams; malformed ones are logged and skipped.
#[derive(Debug)]
pub struct OscReceiver {
    socket: UdpSocket,
    buf: Vec<u8>,
    malformed: u64,
}

impl OscReceiver {
    pub fn bind(addr: impl ToSocketAddrs) -> Result<Self> {
        let socket = UdpSocket::bind(addr).map_err(Error::Network)?;
        Ok(Self {
            socket,
            buf: vec![0; MAX_DATAGRAM],
            malformed: 0,
        })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        self.socket.local_addr().map_err(Error::Network)
    }

    /// Number of datagrams that failed to decode so far.
    pub fn malformed_count(&self) -> u64 {
        self.malformed
    }

    /// Waits up to `timeout` for a well-formed message.
    pub fn receive(&mut self, timeout: Duration) -> Result<Option<OscMessage>> {
        let deadline = Instant::now() + timeout;
        loop {
            let remaining = deadline.saturating_duration_since(Instant::now());
            if remaining.is_zero() {
                return Ok(None);
            }
            self.socket
                .set_read_timeout(Some(remaining))
                .map_err(Error::Network)?;
            match self.socket.recv_from(&mut self.buf) {
                Ok((n, from)) => match decode_message(&self.buf[..n]) {
                    Ok(msg) => return Ok(Some(msg)),
                    Err(e) => {
                        self.malformed += 1;
                        log::warn!("skipping malformed OSC datagram from {from}: {e}");
                    }
                },
                Err(e)
                    if matches!(
                        e.kind(),
                        std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut
                    ) =>
                {
                    return Ok(None)
                }
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(Error::Network(e)),
            }
        }
    }
}
