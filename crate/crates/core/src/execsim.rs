//! Bounded simulator of asynchronous executions against a Boolean mechanism.
//!
//! Two players, the user and the attacker, each hold the credentials of their
//! availability vector. Each player may send one message to the mechanism. A
//! scheduler assigns the players their identifiers and delays every message
//! by a bounded number of steps. The mechanism decides on the first message
//! it receives: a valid credential set `c` with `f(c) = 1` wins for the sender,
//! anything else wins for the other identifier.
//!
//! Credentials are ideal: a proof verifies only if built from the secret
//! part, and a player can only build proofs for credentials it holds.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baselines::enumerate_monotone;
use crate::credmodel::{AvailabilityVector, Scenario};
use crate::mechanism::PartialTruthTable;
use crate::{Error, Result};

/// Largest credential count accepted by [`check_success`].
pub const MAX_SIM_N: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    User,
    Attacker,
}

impl Player {
    fn name(self) -> &'static str {
        match self {
            Player::User => "user",
            Player::Attacker => "attacker",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Credential {
    public: u64,
    secret: u64,
}

/// `n` ideal credentials.
#[derive(Debug, Clone)]
pub struct IdealCredentialSet {
    creds: Vec<Credential>,
}

/// The secret parts one player holds.
#[derive(Debug, Clone)]
pub struct KeyRing {
    available: AvailabilityVector,
    secrets: Vec<Option<u64>>,
}

/// Proof that the sender holds the secret part of credential `index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Proof {
    pub index: usize,
    pub public: u64,
    tag: u64,
}

impl IdealCredentialSet {
    pub fn generate(n: usize, rng: &mut impl Rng) -> Self {
        let creds = (0..n).map(|_| Credential { public: rng.gen(), secret: rng.gen() }).collect();
        Self { creds }
    }

    pub fn n(&self) -> usize {
        self.creds.len()
    }

    pub fn key_ring(&self, available: AvailabilityVector) -> KeyRing {
        let secrets = self
            .creds
            .iter()
            .enumerate()
            .map(|(i, c)| available.has(i).then_some(c.secret))
            .collect();
        KeyRing { available, secrets }
    }

    /// Credentials proven by `proofs`, or `None` if any proof fails.
    pub fn verify(&self, proofs: &[Proof]) -> Option<AvailabilityVector> {
        let mut bits = 0u32;
        for p in proofs {
            let c = self.creds.get(p.index)?;
            if p.public != c.public || p.tag != tag(c.secret, c.public) {
                return None;
            }
            bits |= 1 << p.index;
        }
        Some(AvailabilityVector(bits))
    }
}

fn tag(secret: u64, public: u64) -> u64 {
    secret.rotate_left(17) ^ public.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

impl KeyRing {
    pub fn available(&self) -> AvailabilityVector {
        self.available
    }

    /// Proofs for every credential in `mask`; fails if the ring lacks one.
    pub fn prove(&self, set: &IdealCredentialSet, mask: AvailabilityVector) -> Result<Vec<Proof>> {
        if !self.available.dominates(mask) {
            return Err(Error::MaskViolation { mask: mask.0, available: self.available.0 });
        }
        let mut proofs = Vec::new();
        for (i, secret) in self.secrets.iter().enumerate() {
            if mask.has(i) {
                let secret = secret.ok_or(Error::MaskViolation { mask: mask.0, available: self.available.0 })?;
                let public = set.creds[i].public;
                proofs.push(Proof { index: i, public, tag: tag(secret, public) });
            }
        }
        Ok(proofs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategySpec {
    /// Present the credentials in `mask` at `step`.
    SendSubset { mask: AvailabilityVector, step: u32 },
    Silent,
    /// Send a message that is not a credential set at `step`.
    Garbage { step: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SchedulerSpec {
    /// Identifier given to the user; the attacker gets the other one.
    pub user_id: u8,
    pub user_delay: u32,
    pub attacker_delay: u32,
    /// Delivery order when both messages arrive at the same step.
    pub user_first_on_tie: bool,
    /// Seed of the random tape used to generate credentials.
    pub seed: u64,
}

impl SchedulerSpec {
    /// Draws a scheduler with delays in `0..=max_delay`.
    pub fn random(seed: u64, max_delay: u32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            user_id: rng.gen_range(0..=1),
            user_delay: rng.gen_range(0..=max_delay),
            attacker_delay: rng.gen_range(0..=max_delay),
            user_first_on_tie: rng.gen(),
            seed,
        }
    }

    fn id_of(&self, player: Player) -> u8 {
        match player {
            Player::User => self.user_id,
            Player::Attacker => 1 - self.user_id,
        }
    }

    fn player_of(&self, id: u8) -> Player {
        if id == self.user_id {
            Player::User
        } else {
            Player::Attacker
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Payload {
    Credentials(Vec<Proof>),
    Garbage,
}

impl Payload {
    fn describe(&self, n: usize) -> String {
        match self {
            Payload::Credentials(proofs) => {
                let bits = proofs.iter().fold(0u32, |acc, p| acc | 1 << p.index);
                format!("creds={}", AvailabilityVector(bits).to_bitstring(n))
            }
            Payload::Garbage => "garbage".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    User,
    Attacker,
    Undecided,
}

impl fmt::Display for Winner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Winner::User => "user",
            Winner::Attacker => "attacker",
            Winner::Undecided => "undecided",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Send,
    Deliver,
    Decide,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub step: u32,
    pub actor: String,
    pub kind: EventKind,
    pub payload: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionTrace {
    pub events: Vec<Event>,
    pub winner: Winner,
}

impl ExecutionTrace {
    /// One `step|actor|event|payload` line per event.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            let kind = match e.kind {
                EventKind::Send => "send",
                EventKind::Deliver => "deliver",
                EventKind::Decide => "decide",
            };
            out.push_str(&format!("{}|{}|{}|{}\n", e.step, e.actor, kind, e.payload));
        }
        out
    }
}

/// One-shot Boolean mechanism: only the first delivered message matters.
struct BooleanAutomaton<'a> {
    table: &'a PartialTruthTable,
    creds: &'a IdealCredentialSet,
    decided: Option<u8>,
}

impl BooleanAutomaton<'_> {
    fn step(&mut self, from: u8, payload: &Payload) -> Option<u8> {
        if self.decided.is_some() {
            return None;
        }
        let accept = match payload {
            Payload::Credentials(proofs) => self
                .creds
                .verify(proofs)
                .and_then(|q| self.table.evaluate(q))
                .unwrap_or(false),
            Payload::Garbage => false,
        };
        let id = if accept { from } else { 1 - from };
        self.decided = Some(id);
        Some(id)
    }
}

fn planned_send(strategy: StrategySpec, ring: &KeyRing, creds: &IdealCredentialSet) -> Result<Option<(u32, Payload)>> {
    Ok(match strategy {
        StrategySpec::SendSubset { mask, step } => Some((step, Payload::Credentials(ring.prove(creds, mask)?))),
        StrategySpec::Silent => None,
        StrategySpec::Garbage { step } => Some((step, Payload::Garbage)),
    })
}

/// Runs one execution of the Boolean mechanism `f` in scenario `s`.
pub fn run_execution(
    f: &PartialTruthTable,
    s: &Scenario,
    user: StrategySpec,
    attacker: StrategySpec,
    sched: &SchedulerSpec,
) -> Result<ExecutionTrace> {
    let n = f.n();
    if !f.is_complete() {
        return Err(Error::IncompleteTable);
    }
    let limit = 1u64 << n;
    if s.user.0 as u64 >= limit || s.attacker.0 as u64 >= limit {
        let actual = (32 - (s.user.0 | s.attacker.0).leading_zeros()) as usize;
        return Err(Error::DimensionMismatch { expected: n, actual });
    }
    if sched.user_id > 1 {
        return Err(Error::OutOfBounds(format!("identifier must be 0 or 1, got {}", sched.user_id)));
    }

    // setup
    let mut rng = ChaCha8Rng::seed_from_u64(sched.seed);
    let creds = IdealCredentialSet::generate(n, &mut rng);
    let rings = [creds.key_ring(s.user), creds.key_ring(s.attacker)];

    let mut sends: BTreeMap<(u32, u8), (Player, Payload)> = BTreeMap::new();
    let mut deliveries: BTreeMap<(u32, u8), (Player, Payload)> = BTreeMap::new();
    for (player, strategy, ring, delay) in [
        (Player::User, user, &rings[0], sched.user_delay),
        (Player::Attacker, attacker, &rings[1], sched.attacker_delay),
    ] {
        if let Some((step, payload)) = planned_send(strategy, ring, &creds)? {
            let rank = tie_rank(player, sched);
            sends.insert((step, rank), (player, payload.clone()));
            deliveries.insert((step + delay, rank), (player, payload));
        }
    }

    let mut automaton = BooleanAutomaton { table: f, creds: &creds, decided: None };
    let mut events = Vec::new();
    let mut winner = Winner::Undecided;
    let last = sends.keys().chain(deliveries.keys()).map(|(t, _)| *t).max();
    for step in 0..=last.unwrap_or(0) {
        for ((_, _), (player, payload)) in sends.range((step, 0)..=(step, u8::MAX)) {
            events.push(Event {
                step,
                actor: player.name().to_string(),
                kind: EventKind::Send,
                payload: payload.describe(n),
            });
        }
        for ((_, _), (player, payload)) in deliveries.range((step, 0)..=(step, u8::MAX)) {
            let from = sched.id_of(*player);
            events.push(Event {
                step,
                actor: player.name().to_string(),
                kind: EventKind::Deliver,
                payload: format!("id={from} {}", payload.describe(n)),
            });
            if let Some(id) = automaton.step(from, payload) {
                let decided = sched.player_of(id);
                winner = match decided {
                    Player::User => Winner::User,
                    Player::Attacker => Winner::Attacker,
                };
                events.push(Event {
                    step,
                    actor: "mechanism".to_string(),
                    kind: EventKind::Decide,
                    payload: format!("id={id} winner={winner}"),
                });
            }
        }
    }
    Ok(ExecutionTrace { events, winner })
}

fn tie_rank(player: Player, sched: &SchedulerSpec) -> u8 {
    match (player, sched.user_first_on_tie) {
        (Player::User, true) | (Player::Attacker, false) => 0,
        _ => 1,
    }
}

/// Every attacker strategy that can influence a one-shot decision within `horizon`.
pub fn attacker_strategies(available: AvailabilityVector, horizon: u32) -> Vec<StrategySpec> {
    let mut out = vec![StrategySpec::Silent];
    for step in 0..=horizon {
        out.push(StrategySpec::Garbage { step });
        // every submask of the attacker's vector, including the empty set
        let mut mask = available.0;
        loop {
            out.push(StrategySpec::SendSubset { mask: AvailabilityVector(mask), step });
            if mask == 0 {
                break;
            }
            mask = (mask - 1) & available.0;
        }
    }
    out
}

/// Every identifier assignment, delay pair within `horizon`, and tie order.
pub fn schedulers(horizon: u32, seed: u64) -> Vec<SchedulerSpec> {
    let mut out = Vec::new();
    for user_id in 0..=1 {
        for user_delay in 0..=horizon {
            for attacker_delay in 0..=horizon {
                for user_first_on_tie in [true, false] {
                    out.push(SchedulerSpec { user_id, user_delay, attacker_delay, user_first_on_tie, seed });
                }
            }
        }
    }
    out
}

/// Whether the user wins every decided execution of `f` in `s`, over all
/// enumerated attacker strategies and schedulers. The user presents all of
/// its credentials at step 0.
pub fn check_success(f: &PartialTruthTable, s: &Scenario, horizon: u32) -> Result<bool> {
    if horizon < 2 {
        return Err(Error::OutOfBounds(format!("horizon must be at least 2, got {horizon}")));
    }
    if f.n() > MAX_SIM_N {
        return Err(Error::OutOfBounds(format!("simulation supports n <= {MAX_SIM_N}, got {}", f.n())));
    }
    let user = StrategySpec::SendSubset { mask: s.user, step: 0 };
    let scheds = schedulers(horizon, 0);
    for attacker in attacker_strategies(s.attacker, horizon) {
        for sched in &scheds {
            let trace = run_execution(f, s, user, attacker, sched)?;
            if trace.winner == Winner::Attacker {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepReport {
    pub n: usize,
    pub functions: usize,
    pub scenarios: usize,
    /// `(row string, scenario)` pairs where simulation and profile disagree.
    pub mismatches: Vec<(String, Scenario)>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Compares [`check_success`] with `f(user) = 1 and f(attacker) = 0` for every
/// monotone `f` on `n` variables and every one of the `4^n` scenarios.
pub fn success_equivalence_sweep(n: usize, horizon: u32) -> Result<SweepReport> {
    if n > 3 {
        return Err(Error::OutOfBounds(format!("equivalence sweep supports n <= 3, got {n}")));
    }
    let catalog = enumerate_monotone(n)?;
    let size = 1u32 << n;
    let mut mismatches = Vec::new();
    for f in &catalog.tables {
        for u in 0..size {
            for a in 0..size {
                let s = Scenario::new(u, a);
                let simulated = check_success(f, &s, horizon)?;
                let predicted = f.covers(&s);
                if simulated != predicted {
                    mismatches.push((f.row_string(), s));
                }
            }
        }
    }
    Ok(SweepReport {
        n,
        functions: catalog.len(),
        scenarios: (size * size) as usize,
        mismatches,
    })
}
