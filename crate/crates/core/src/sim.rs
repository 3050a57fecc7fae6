//! Sequential discrete-event engine.
//!
//! Events carry an integer tick and a monotonic sequence number. The queue
//! pops them according to an [`OrderingPolicy`]:
//!
//! * [`OrderingPolicy::Fifo`] pops in lexicographic `(time, seq)` order.
//! * [`OrderingPolicy::RandomDelivery`] serves non-delivery events in
//!   `(time, seq)` order, and whenever the earliest non-delivery event is
//!   not due before the earliest pending delivery, pops a delivery chosen
//!   uniformly at random among the heads of the non-empty channels.
//!   Deliveries on one channel stay in scheduling order, like messages on a
//!   TCP session. Channels are sampled from a list kept in first-use order,
//!   with ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64(seed)`) and
//!   `gen_range(0..active)`, so a seed fully determines the schedule.
//!
//! Under random delivery the clock never moves backwards: popping an event
//! scheduled earlier than the current clock leaves the clock unchanged.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Simulation time in ticks.
pub type Tick = u64;

/// Default cap on processed events before a run is declared divergent.
pub const DEFAULT_EVENT_CAP: u64 = 10_000_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("cannot schedule event at tick {at}, clock is already at {now}")]
    ClockViolation { at: Tick, now: Tick },
    #[error("event cap of {cap} processed events exceeded; simulation does not converge")]
    Divergence { cap: u64 },
}

/// Payloads tell the queue whether they are message deliveries and on
/// which channel, the only distinction the random ordering policy cares
/// about.
pub trait Payload {
    /// `Some(channel)` for a message delivery, `None` for anything else.
    fn delivery_channel(&self) -> Option<u64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OrderingPolicy {
    Fifo,
    RandomDelivery { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event<T> {
    pub time: Tick,
    pub seq: u64,
    pub payload: T,
}

struct Keyed<T>(Event<T>);

impl<T> PartialEq for Keyed<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T> Eq for Keyed<T> {}

impl<T> PartialOrd for Keyed<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> Ord for Keyed<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.0.time, self.0.seq).cmp(&(other.0.time, other.0.seq))
    }
}

pub struct EventQueue<T> {
    policy: OrderingPolicy,
    rng: Option<ChaCha8Rng>,
    now: Tick,
    next_seq: u64,
    /// Every event under Fifo; only non-delivery events under random delivery.
    ordered: BinaryHeap<Reverse<Keyed<T>>>,
    /// Pending deliveries per channel under random delivery.
    channels: HashMap<u64, VecDeque<Event<T>>>,
    /// Channels with at least one pending delivery.
    active: Vec<u64>,
    pool_len: usize,
    pool_times: BTreeMap<Tick, usize>,
    scheduled: u64,
    processed: u64,
    cap: u64,
}

impl<T: Payload> EventQueue<T> {
    pub fn new(policy: OrderingPolicy) -> Self {
        let rng = match policy {
            OrderingPolicy::Fifo => None,
            OrderingPolicy::RandomDelivery { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        };
        Self {
            policy,
            rng,
            now: 0,
            next_seq: 0,
            ordered: BinaryHeap::new(),
            channels: HashMap::new(),
            active: Vec::new(),
            pool_len: 0,
            pool_times: BTreeMap::new(),
            scheduled: 0,
            processed: 0,
            cap: DEFAULT_EVENT_CAP,
        }
    }

    pub fn with_event_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn policy(&self) -> OrderingPolicy {
        self.policy
    }

    pub fn now(&self) -> Tick {
        self.now
    }

    pub fn len(&self) -> usize {
        self.ordered.len() + self.pool_len
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Total events ever scheduled on this queue.
    pub fn scheduled(&self) -> u64 {
        self.scheduled
    }

    /// Total events popped from this queue.
    pub fn processed(&self) -> u64 {
        self.processed
    }

    /// Schedules `payload` at absolute tick `time` and returns its sequence number.
    pub fn schedule(&mut self, time: Tick, payload: T) -> Result<u64, SimError> {
        if time < self.now {
            return Err(SimError::ClockViolation { at: time, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.scheduled += 1;
        let event = Event { time, seq, payload };
        match event.payload.delivery_channel().filter(|_| self.rng.is_some()) {
            Some(channel) => self.push_delivery(channel, event),
            None => self.ordered.push(Reverse(Keyed(event))),
        }
        Ok(seq)
    }

    fn push_delivery(&mut self, channel: u64, event: Event<T>) {
        *self.pool_times.entry(event.time).or_insert(0) += 1;
        self.pool_len += 1;
        let queue = self.channels.entry(channel).or_default();
        if queue.is_empty() {
            self.active.push(channel);
        }
        queue.push_back(event);
    }

    fn pop_delivery(&mut self, pick: usize) -> Event<T> {
        let channel = self.active[pick];
        let queue = self.channels.get_mut(&channel).expect("active channel");
        let event = queue.pop_front().expect("active channel is non-empty");
        if queue.is_empty() {
            self.active.swap_remove(pick);
        }
        self.pool_len -= 1;
        if let Some(count) = self.pool_times.get_mut(&event.time) {
            *count -= 1;
            if *count == 0 {
                self.pool_times.remove(&event.time);
            }
        }
        event
    }

    /// Schedules `payload` `delay` ticks after the current clock.
    pub fn schedule_in(&mut self, delay: Tick, payload: T) -> Result<u64, SimError> {
        self.schedule(self.now + delay, payload)
    }

    /// Removes and returns the next event chosen by the policy, or `None`
    /// once the queue is quiescent.
    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> Option<Event<T>> {
        let event = match self.rng.as_mut() {
            None => self.ordered.pop().map(|Reverse(Keyed(e))| e),
            Some(rng) => {
                let earliest_delivery = self.pool_times.keys().next().copied();
                let take_ordered = match (self.ordered.peek(), earliest_delivery) {
                    (Some(Reverse(Keyed(e))), Some(t)) => e.time <= t,
                    (Some(_), None) => true,
                    (None, _) => false,
                };
                if take_ordered {
                    self.ordered.pop().map(|Reverse(Keyed(e))| e)
                } else if self.active.is_empty() {
                    None
                } else {
                    let pick = rng.gen_range(0..self.active.len());
                    Some(self.pop_delivery(pick))
                }
            }
        }?;
        self.now = self.now.max(event.time);
        self.processed += 1;
        Some(event)
    }

    /// Pops and handles events until the queue is empty. The handler may
    /// schedule successors on the queue it is handed. Returns the number of
    /// events processed by this call.
    pub fn run_until_quiescent<F, E>(&mut self, mut handler: F) -> Result<u64, E>
    where
        F: FnMut(Event<T>, &mut EventQueue<T>) -> Result<(), E>,
        E: From<SimError>,
    {
        let start = self.processed;
        while let Some(event) = self.next() {
            if self.processed - start > self.cap {
                return Err(SimError::Divergence { cap: self.cap }.into());
            }
            handler(event, self)?;
        }
        Ok(self.processed - start)
    }
}
