// SPDX-License-Identifier: Apache-2.0
// Copyright The TASS Toolkit Authors

//! IPv4 CIDR prefixes in canonical form.

use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrefixError {
    #[error("malformed prefix {0:?}: expected a.b.c.d/len")]
    Malformed(String),
    #[error("invalid address {0:?}")]
    InvalidAddress(String),
    #[error("invalid prefix length {0:?}: must be 0..=32")]
    InvalidLength(String),
    #[error("{0} has host bits set below /{1}")]
    NonCanonical(Ipv4Addr, u8),
}

/// An IPv4 prefix. The network value never has bits set below the length.
///
/// Ordering is by network value, then by length, which places a prefix
/// directly before the prefixes nested inside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ipv4Prefix {
    network: u32,
    length: u8,
}

impl Ipv4Prefix {
    pub const MAX_LEN: u8 = 32;

    /// The whole address space, 0.0.0.0/0.
    pub const ROOT: Ipv4Prefix = Ipv4Prefix {
        network: 0,
        length: 0,
    };

    /// Build a prefix, rejecting host bits below `length`.
    pub fn new(network: u32, length: u8) -> Result<Self, PrefixError> {
        if length > Self::MAX_LEN {
            return Err(PrefixError::InvalidLength(length.to_string()));
        }
        if network & !mask(length) != 0 {
            return Err(PrefixError::NonCanonical(Ipv4Addr::from(network), length));
        }
        Ok(Ipv4Prefix { network, length })
    }

    /// Build a prefix by clearing any host bits. Panics if `length > 32`.
    pub fn new_truncated(network: u32, length: u8) -> Self {
        assert!(
            length <= Self::MAX_LEN,
            "prefix length {length} out of range"
        );
        Ipv4Prefix {
            network: network & mask(length),
            length,
        }
    }

    pub fn network(&self) -> u32 {
        self.network
    }

    pub fn network_addr(&self) -> Ipv4Addr {
        Ipv4Addr::from(self.network)
    }

    pub fn length(&self) -> u8 {
        self.length
    }

    pub fn mask(&self) -> u32 {
        mask(self.length)
    }

    /// Number of addresses, 2^(32 - length).
    pub fn size(&self) -> u64 {
        1u64 << (32 - u32::from(self.length))
    }

    /// Last address inside the prefix.
    pub fn last(&self) -> u32 {
        self.network | !self.mask()
    }

    pub fn contains_addr(&self, addr: u32) -> bool {
        addr & self.mask() == self.network
    }

    /// True iff `inner` lies within `self` (reflexive).
    pub fn contains(&self, inner: &Ipv4Prefix) -> bool {
        self.length <= inner.length && inner.network & self.mask() == self.network
    }

    /// True iff `inner` lies within `self` and is not equal to it.
    pub fn strictly_contains(&self, inner: &Ipv4Prefix) -> bool {
        self.length < inner.length && self.contains(inner)
    }

    pub fn overlaps(&self, other: &Ipv4Prefix) -> bool {
        self.contains(other) || other.contains(self)
    }

    /// The two halves of this prefix, or `None` for a /32.
    pub fn split(&self) -> Option<(Ipv4Prefix, Ipv4Prefix)> {
        if self.length == Self::MAX_LEN {
            return None;
        }
        let length = self.length + 1;
        let upper = self.network | (1u32 << (32 - u32::from(length)));
        Some((
            Ipv4Prefix {
                network: self.network,
                length,
            },
            Ipv4Prefix {
                network: upper,
                length,
            },
        ))
    }
}

/// Free-function form of [`Ipv4Prefix::contains`].
pub fn contains(outer: &Ipv4Prefix, inner: &Ipv4Prefix) -> bool {
    outer.contains(inner)
}

/// Parse `a.b.c.d/len`. Host bits below `len` are an error, not masked.
pub fn parse_prefix(text: &str) -> Result<Ipv4Prefix, PrefixError> {
    text.parse()
}

fn mask(length: u8) -> u32 {
    if length == 0 {
        0
    } else {
        u32::MAX << (32 - u32::from(length))
    }
}

/// Parse a decimal prefix length.
pub(crate) fn parse_length(text: &str) -> Result<u8, PrefixError> {
    if text.is_empty() || text.len() > 2 || !text.bytes().all(|b| b.is_ascii_digit()) {
        return Err(PrefixError::InvalidLength(text.to_string()));
    }
    match text.parse::<u8>() {
        Ok(len) if len <= Ipv4Prefix::MAX_LEN => Ok(len),
        _ => Err(PrefixError::InvalidLength(text.to_string())),
    }
}

/// Parse a dotted-quad address into its 32-bit value.
pub fn parse_addr(text: &str) -> Result<u32, PrefixError> {
    Ipv4Addr::from_str(text)
        .map(u32::from)
        .map_err(|_| PrefixError::InvalidAddress(text.to_string()))
}

impl FromStr for Ipv4Prefix {
    type Err = PrefixError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (addr, len) = s
            .split_once('/')
            .ok_or_else(|| PrefixError::Malformed(s.to_string()))?;
        let network = parse_addr(addr)?;
        let length = parse_length(len)?;
        Ipv4Prefix::new(network, length)
    }
}

impl fmt::Display for Ipv4Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.network_addr(), self.length)
    }
}
