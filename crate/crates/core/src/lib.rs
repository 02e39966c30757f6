pub mod handshake;
pub mod harness;
pub mod identity;
pub mod registry;
pub mod wire;
