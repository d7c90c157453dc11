//! An event-scheduling simulator for the same model classes as the recursion
//! engines, used only to cross-check them.
//!
//! Stations keep explicit state (queues, busy servers, customers held by
//! manufacturing blocking, slots reserved by communication blocking) and a
//! future-event list drives time forward. Nothing here calls into the
//! recursion modules; only the model and input types are shared.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use crate::error::{Result, SimError};
use crate::model::{ModelInputs, ModelSpec};
use crate::recursions::Blocking;
use crate::types::{Capacity, Epoch, Role, SamplePath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    Arrival,
    ServiceStart,
    ServiceEnd,
    Unblock,
}

/// One scheduled event. `customer` is the customer's arrival index at `node`.
#[derive(Debug, Clone, Copy)]
pub struct EventRecord {
    pub time: Epoch,
    pub kind: EventKind,
    pub node: usize,
    pub customer: usize,
    seq: u64,
    /// Arrival from outside; the customer joins the station when the event fires.
    external: bool,
}

impl EventRecord {
    fn key(&self) -> (f64, usize, usize, u64) {
        (self.time, self.node, self.customer, self.seq)
    }
}

impl PartialEq for EventRecord {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for EventRecord {}
impl PartialOrd for EventRecord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for EventRecord {
    // reversed: BinaryHeap pops the earliest (time, node, customer, seq)
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        b.0.total_cmp(&a.0)
            .then(b.1.cmp(&a.1))
            .then(b.2.cmp(&a.2))
            .then(b.3.cmp(&a.3))
    }
}

enum Route {
    Exit,
    Next,
    Cyclic,
    Table(Vec<RouteTable>),
}

enum RouteTable {
    List(Vec<usize>),
    Cycle(Vec<usize>),
}

struct Station {
    servers: usize,
    busy: usize,
    queue: VecDeque<usize>,
    endless_supply: bool,
    /// Most customers the station may hold, server included.
    room: Option<usize>,
    present: usize,
    reserved: usize,
    held: VecDeque<usize>,
    started: usize,
    horizon: usize,
    arrived: usize,
    arrival_times: Vec<f64>,
    departure_times: Vec<f64>,
    completion_times: Vec<Option<f64>>,
}

impl Station {
    fn new(servers: usize, horizon: usize) -> Self {
        Self {
            servers,
            busy: 0,
            queue: VecDeque::new(),
            endless_supply: false,
            room: None,
            present: 0,
            reserved: 0,
            held: VecDeque::new(),
            started: 0,
            horizon,
            arrived: 0,
            arrival_times: Vec::new(),
            departure_times: Vec::new(),
            completion_times: Vec::new(),
        }
    }

    fn has_room(&self) -> bool {
        self.room.is_none_or(|r| self.present + self.reserved < r)
    }

    fn holds_customers(&self) -> bool {
        self.endless_supply || !self.queue.is_empty() || !self.held.is_empty()
    }
}

struct Simulator<'a> {
    stations: Vec<Station>,
    route: Route,
    blocking: Blocking,
    services: &'a [Vec<f64>],
    events: BinaryHeap<EventRecord>,
    seq: u64,
}

impl Simulator<'_> {
    fn schedule(&mut self, time: f64, kind: EventKind, node: usize, customer: usize) {
        self.push(time, kind, node, customer, false);
    }

    fn push(&mut self, time: f64, kind: EventKind, node: usize, customer: usize, external: bool) {
        self.seq += 1;
        self.events.push(EventRecord {
            time,
            kind,
            node,
            customer,
            seq: self.seq,
            external,
        });
    }

    fn destination(&self, node: usize, departure: usize) -> Result<Option<usize>> {
        let n = self.stations.len();
        Ok(match &self.route {
            Route::Exit => None,
            Route::Next => (node + 1 < n).then_some(node + 1),
            Route::Cyclic => Some((node + 1) % n),
            Route::Table(t) => Some(match &t[node] {
                RouteTable::List(l) => *l.get(departure).ok_or(SimError::RoutingExhausted {
                    node,
                    departure: departure + 1,
                })?,
                RouteTable::Cycle(c) => c[departure % c.len()],
            }),
        })
    }

    fn predecessor(&self, node: usize) -> Option<usize> {
        // blocking only exists in open tandems
        matches!(self.route, Route::Next)
            .then(|| node.checked_sub(1))
            .flatten()
    }

    fn arrive(&mut self, node: usize, time: f64) -> usize {
        let s = &mut self.stations[node];
        let customer = s.arrived;
        s.arrived += 1;
        s.present += 1;
        s.arrival_times.push(time);
        s.completion_times.push(None);
        s.queue.push_back(customer);
        customer
    }

    fn try_start(&mut self, node: usize, time: f64) -> Result<()> {
        loop {
            let s = &self.stations[node];
            if s.busy >= s.servers || s.started >= s.horizon {
                return Ok(());
            }
            if s.queue.is_empty() && !s.endless_supply {
                return Ok(());
            }
            let next = if self.blocking == Blocking::Communication {
                self.destination(node, s.started)?
            } else {
                None
            };
            if let Some(d) = next {
                if !self.stations[d].has_room() {
                    return Ok(());
                }
                self.stations[d].reserved += 1;
            }
            let s = &mut self.stations[node];
            let customer = match s.queue.pop_front() {
                Some(c) => c,
                None => {
                    // endless supply: materialize a customer present since time zero
                    let c = s.arrived;
                    s.arrived += 1;
                    s.present += 1;
                    s.arrival_times.push(0.0);
                    s.completion_times.push(None);
                    c
                }
            };
            s.busy += 1;
            s.started += 1;
            self.schedule(time, EventKind::ServiceStart, node, customer);
        }
    }

    fn on_start(&mut self, node: usize, customer: usize, time: f64) -> Result<()> {
        let s = &self.stations[node];
        let k = s.started_index(customer);
        let tau = *self
            .services
            .get(node)
            .ok_or(SimError::MissingNode(node))?
            .get(k)
            .ok_or(SimError::InputLength {
                role: Role::Service,
                node: Some(node),
                needed: k + 1,
                got: self.services[node].len(),
            })?;
        self.schedule(time + tau, EventKind::ServiceEnd, node, customer);
        Ok(())
    }

    fn on_end(&mut self, node: usize, customer: usize, time: f64) -> Result<()> {
        self.stations[node].completion_times[customer] = Some(time);
        let departure = self.stations[node].departure_times.len() + self.stations[node].held.len();
        let dest = self.destination(node, departure)?;
        if let (Blocking::Manufacturing, Some(d)) = (self.blocking, dest) {
            if !self.stations[d].has_room() || !self.stations[node].held.is_empty() {
                self.stations[node].held.push_back(customer);
                return Ok(());
            }
        }
        self.depart(node, dest, time)
    }

    fn depart(&mut self, node: usize, dest: Option<usize>, time: f64) -> Result<()> {
        let s = &mut self.stations[node];
        s.departure_times.push(time);
        s.busy -= 1;
        s.present -= 1;
        if let Some(d) = dest {
            if self.blocking == Blocking::Communication {
                self.stations[d].reserved -= 1;
            }
            let c = self.arrive(d, time);
            self.schedule(time, EventKind::Arrival, d, c);
        }
        if let Some(p) = self.predecessor(node) {
            match self.blocking {
                Blocking::Manufacturing => {
                    if let Some(&c) = self.stations[p].held.front() {
                        self.schedule(time, EventKind::Unblock, p, c);
                    }
                }
                Blocking::Communication => self.try_start(p, time)?,
            }
        }
        self.try_start(node, time)
    }

    fn on_unblock(&mut self, node: usize, time: f64) -> Result<()> {
        if self.stations[node].held.is_empty() {
            return Ok(());
        }
        let departure = self.stations[node].departure_times.len();
        let dest = self.destination(node, departure)?;
        if dest.is_none_or(|d| self.stations[d].has_room()) {
            self.stations[node].held.pop_front();
            self.depart(node, dest, time)?;
        }
        Ok(())
    }

    fn run(&mut self) -> Result<()> {
        while let Some(ev) = self.events.pop() {
            match ev.kind {
                EventKind::Arrival => {
                    if ev.external {
                        self.arrive(ev.node, ev.time);
                    }
                    self.try_start(ev.node, ev.time)?
                }
                EventKind::ServiceStart => self.on_start(ev.node, ev.customer, ev.time)?,
                EventKind::ServiceEnd => self.on_end(ev.node, ev.customer, ev.time)?,
                EventKind::Unblock => self.on_unblock(ev.node, ev.time)?,
            }
        }
        Ok(())
    }
}

impl Station {
    /// Index of the service this customer receives. Single-server stations and
    /// FCFS multi-server stations start customers in arrival order.
    fn started_index(&self, customer: usize) -> usize {
        customer
    }
}

/// Runs the event-scheduling simulation of `model` on the same inputs the
/// recursion engines take.
pub fn des_simulate(model: &ModelSpec, inputs: &ModelInputs, horizon: usize) -> Result<SamplePath> {
    if horizon == 0 {
        return Err(SimError::InvalidSpec("horizon must be positive".into()));
    }
    model.validate()?;
    let nodes = model.node_count();
    let horizons: Vec<usize> = match model {
        ModelSpec::Network(n) => n.horizons.clone().unwrap_or_else(|| vec![horizon; nodes]),
        _ => vec![horizon; nodes],
    };
    let servers = match model {
        ModelSpec::Ggm(g) => g.servers,
        _ => 1,
    };
    let mut stations: Vec<Station> = horizons.iter().map(|&h| Station::new(servers, h)).collect();
    let mut blocking = Blocking::Manufacturing;
    let route = match model {
        ModelSpec::Gg1 | ModelSpec::Ggm(_) => Route::Exit,
        ModelSpec::Tandem(t) => {
            blocking = t.blocking;
            for (n, st) in stations.iter_mut().enumerate().skip(1) {
                if let Some(Capacity::Finite(b)) = t.buffers.get(n - 1) {
                    st.room = Some(b + 1);
                }
            }
            Route::Next
        }
        ModelSpec::ClosedTandem(_) => Route::Cyclic,
        ModelSpec::Network(n) => Route::Table(
            n.routing
                .0
                .iter()
                .map(|r| match r {
                    crate::network::RoutingRule::Explicit(l) => RouteTable::List(l.clone()),
                    crate::network::RoutingRule::Periodic(c) => RouteTable::Cycle(c.clone()),
                })
                .collect(),
        ),
    };

    let mut sim = Simulator {
        stations,
        route,
        blocking,
        services: &inputs.services,
        events: BinaryHeap::new(),
        seq: 0,
    };

    if model.has_external_arrivals() {
        if inputs.interarrivals.len() < horizon {
            return Err(SimError::InputLength {
                role: Role::Interarrival,
                node: None,
                needed: horizon,
                got: inputs.interarrivals.len(),
            });
        }
        let mut clock = 0.0;
        for (c, &gap) in inputs.interarrivals[..horizon].iter().enumerate() {
            clock += gap;
            sim.push(clock, EventKind::Arrival, 0, c, true);
        }
    } else {
        let pops: Vec<Capacity> = match model {
            ModelSpec::ClosedTandem(c) => {
                c.populations.iter().map(|&p| Capacity::Finite(p)).collect()
            }
            ModelSpec::Network(n) => n.populations.clone(),
            _ => unreachable!("open models carry external arrivals"),
        };
        for (n, pop) in pops.into_iter().enumerate() {
            match pop {
                Capacity::Unbounded => sim.stations[n].endless_supply = true,
                Capacity::Finite(p) => {
                    for _ in 0..p {
                        sim.arrive(n, 0.0);
                    }
                }
            }
            sim.schedule(0.0, EventKind::Arrival, n, usize::MAX);
        }
    }

    sim.run()?;

    let produced: Vec<usize> = sim
        .stations
        .iter()
        .map(|s| s.departure_times.len())
        .collect();
    let stalled: Vec<usize> = (0..nodes).filter(|&n| produced[n] < horizons[n]).collect();
    if !stalled.is_empty() {
        let saturated: Vec<usize> = (0..nodes)
            .filter(|&n| produced[n] >= horizons[n] && sim.stations[n].holds_customers())
            .collect();
        return Err(if saturated.is_empty() {
            SimError::Deadlock { stalled, produced }
        } else {
            SimError::UnderSpecifiedHorizon {
                stalled,
                saturated,
                produced,
            }
        });
    }

    let completions = match model {
        ModelSpec::Ggm(_) => Some(
            sim.stations[0].completion_times[..horizon]
                .iter()
                .map(|c| c.expect("every customer completes"))
                .collect(),
        ),
        _ => None,
    };
    let (arrivals, departures) = sim
        .stations
        .into_iter()
        .map(|s| {
            let d = s.departure_times;
            let mut a = s.arrival_times;
            a.truncate(d.len());
            (a, d)
        })
        .unzip();
    Ok(SamplePath {
        arrivals,
        departures,
        completions,
        horizon: horizons.iter().copied().max().unwrap_or(horizon),
    })
}

/// Largest absolute difference between the departure (and completion)
/// epochs of two paths; `None` when their shapes differ.
pub fn max_departure_gap(a: &SamplePath, b: &SamplePath) -> Option<f64> {
    if a.departures.len() != b.departures.len() {
        return None;
    }
    let mut worst = 0.0f64;
    for (x, y) in a.departures.iter().zip(&b.departures) {
        if x.len() != y.len() {
            return None;
        }
        for (p, q) in x.iter().zip(y) {
            worst = worst.max((p - q).abs());
        }
    }
    match (&a.completions, &b.completions) {
        (Some(x), Some(y)) if x.len() == y.len() => {
            for (p, q) in x.iter().zip(y) {
                worst = worst.max((p - q).abs());
            }
        }
        (None, None) => {}
        _ => return None,
    }
    Some(worst)
}
