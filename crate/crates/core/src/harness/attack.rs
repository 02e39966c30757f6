use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{exit, kind_name, Flow, HarnessError, ScenarioSpec, World};
use crate::handshake::{run_handshake, Alert, Credential, CredentialKind, TransportKind, VcBundle};
use crate::identity::{DidDocument, Identity, IdentityKeyPair};
use crate::registry::{mitm_wrap, ChannelMode};

/// Result of one impersonation attempt against a victim's DID.
#[derive(Debug, Clone)]
pub struct AttackReport {
    pub mode: ChannelMode,
    pub completed: bool,
    /// The client authenticated the server under the attacker's key.
    pub attacker_key_accepted: bool,
    /// The client-side alert when the handshake aborted.
    pub alert: Option<Alert>,
    pub transcript: Vec<String>,
}

impl AttackReport {
    pub fn expected(&self) -> bool {
        match self.mode {
            ChannelMode::Plain => self.completed && self.attacker_key_accepted,
            ChannelMode::Authenticated => {
                !self.completed && self.alert == Some(Alert::BadCertificate)
            }
        }
    }

    /// Exit status: distinct codes for "impersonation succeeded" and
    /// "defense held", an error when the outcome contradicts the mode.
    pub fn outcome(&self) -> Result<u8, HarnessError> {
        if !self.expected() {
            return Err(HarnessError::UnexpectedOutcome(format!(
                "{} channel: completed={} attacker_key_accepted={} alert={:?}",
                self.mode, self.completed, self.attacker_key_accepted, self.alert
            )));
        }
        Ok(match self.mode {
            ChannelMode::Plain => exit::ATTACK_SUCCEEDED,
            ChannelMode::Authenticated => exit::SUCCESS,
        })
    }
}

/// A network attacker rewrites the victim's DID Document in transit to
/// carry its own key, then presents the victim's VC from its own server.
pub fn run_attack(
    world: &World,
    mode: ChannelMode,
    server_kind: CredentialKind,
    seed: [u8; 32],
) -> Result<AttackReport, HarnessError> {
    if server_kind != CredentialKind::Vc {
        return Err(HarnessError::Inapplicable(format!(
            "{} credentials are not resolved through the registry",
            kind_name(server_kind)
        )));
    }
    let victim = world
        .pool
        .vcs
        .first()
        .ok_or_else(|| HarnessError::Inapplicable("no victim credential".into()))?;
    let mut rng = ChaCha20Rng::from_seed(seed);
    let attacker = IdentityKeyPair::from_seed(&rng.gen::<[u8; 32]>());
    let forged = DidDocument::new(victim.holder.did.clone(), attacker.public_key());
    let mut transcript = vec![
        format!("victim DID        {}", victim.holder.did),
        format!("genuine key       {}", hex::encode(victim.holder.keypair.public_key())),
        format!("attacker key      {}", hex::encode(attacker.public_key())),
        format!("resolver channel  {mode}"),
    ];

    let mut spec = ScenarioSpec::new(Flow::Unilateral, None, CredentialKind::Vc);
    spec.resolver = mode;
    spec.repetitions = 1;
    let (mut client, mut server) = world.configs(&spec, &mut rng);
    server.credentials = vec![Credential::Vc(VcBundle {
        holder: Identity {
            keypair: attacker.clone(),
            did: victim.holder.did.clone(),
            document: forged.clone(),
        },
        vc: victim.vc.clone(),
    })];
    let backend = mitm_wrap(
        world.backend.clone(),
        HashMap::from([(victim.holder.did.clone(), forged)]),
    );
    client.resolver = Some(world.channel_over(backend, mode));

    let run = run_handshake(&client, &server, TransportKind::Memory);
    let (completed, accepted, alert) = match &run.client {
        Ok(report) => {
            let peer = report.peer.as_ref().map(|p| p.public_key);
            (true, peer == Some(attacker.public_key()), None)
        }
        Err(e) => (false, false, Some(e.alert())),
    };
    transcript.push(match (&run.client, accepted) {
        (Ok(_), true) => "client accepted the attacker's CertificateVerify".to_string(),
        (Ok(_), false) => "handshake completed under an unexpected key".to_string(),
        (Err(e), _) => format!("client aborted: {e}"),
    });
    Ok(AttackReport {
        mode,
        completed,
        attacker_key_accepted: accepted,
        alert,
        transcript,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::WorldOptions;

    fn world() -> World {
        World::generate(&WorldOptions {
            pool_size: 2,
            seed: Some([9; 32]),
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn plain_channel_is_impersonated() {
        let r = run_attack(&world(), ChannelMode::Plain, CredentialKind::Vc, [1; 32]).unwrap();
        assert!(r.completed && r.attacker_key_accepted, "{r:?}");
        assert_eq!(r.outcome().unwrap(), exit::ATTACK_SUCCEEDED);
    }

    #[test]
    fn authenticated_channel_blocks() {
        let r = run_attack(&world(), ChannelMode::Authenticated, CredentialKind::Vc, [1; 32]).unwrap();
        assert_eq!(r.alert, Some(Alert::BadCertificate), "{r:?}");
        assert_eq!(r.outcome().unwrap(), exit::SUCCESS);
    }

    #[test]
    fn x509_is_inapplicable() {
        let e = run_attack(&world(), ChannelMode::Plain, CredentialKind::X509, [1; 32]).unwrap_err();
        assert_eq!(e.exit_code(), exit::INAPPLICABLE);
    }
}
