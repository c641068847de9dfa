//! The front-tracking engine: straight fronts, the free boundary, event
//! scheduling and the interaction cases.

use alloc::collections::BinaryHeap;
use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_traits::Float;

use crate::gas::{GasParams, GasState};
use crate::glimm::{self, Audit, GlimmSnapshot, Weights};
use crate::riemann::{
    accurate_solver, boundary_fronts, simplified_case_a, simplified_case_b, simplified_case_c, solve_boundary_riemann,
    BackgroundSolution, FrontKind, RiemannFront,
};
use crate::waves::{wave_forward, WaveParam};
use crate::{Error, Result};

/// Interaction coordinates closer than this are treated as simultaneous.
pub const TIE_TOLERANCE: f64 = 1e-12;
/// Speed increment applied to break a tie.
pub const TIE_NUDGE: f64 = 1e-10;

/// A straight front `y = y0 + speed (x - x0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Front {
    pub id: u64,
    pub kind: FrontKind,
    pub x0: f64,
    pub y0: f64,
    pub speed: f64,
    pub below: GasState,
    pub above: GasState,
    pub gen_order: u32,
    pub is_strong: bool,
}

impl Front {
    pub fn y_at(&self, x: f64) -> f64 {
        self.y0 + self.speed * (x - self.x0)
    }

    /// Family index 1..3, or 4 for a non-physical front.
    pub fn index(&self) -> u8 {
        self.kind.index()
    }

    pub fn wave(&self) -> Option<WaveParam> {
        match self.kind {
            FrontKind::Physical(w) => Some(w),
            FrontKind::NonPhysical(_) => None,
        }
    }

    pub fn strength(&self) -> f64 {
        self.kind.strength()
    }

    pub fn is_np(&self) -> bool {
        matches!(self.kind, FrontKind::NonPhysical(_))
    }

    /// Physical and not part of the strong fan.
    pub fn is_weak(&self) -> bool {
        !self.is_np() && !self.is_strong
    }

    pub fn is_shock(&self) -> bool {
        self.wave().is_some_and(|w| w.is_shock())
    }
}

/// The free boundary `y = g(x)` and the static gas below it.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Boundary {
    pub x0: f64,
    pub y0: f64,
    pub slope: f64,
    pub static_state: GasState,
}

impl Boundary {
    pub fn y_at(&self, x: f64) -> f64 {
        self.y0 + self.slope * (x - self.x0)
    }
}

/// Piecewise-constant data on `x = 0, y >= 0`: `pieces[k] = (y_k, U_k)` with
/// `U_k` holding on `[y_k, y_{k+1})`. The last state extends to infinity.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InitialProfile {
    pub pieces: Vec<(f64, GasState)>,
}

impl InitialProfile {
    pub fn constant(u: GasState) -> Self {
        Self { pieces: alloc::vec![(0.0, u)] }
    }

    /// Sum of `|U_k - U_{k-1}|` over the jumps.
    pub fn total_variation(&self) -> f64 {
        self.pieces.windows(2).map(|w| w[0].1.distance(&w[1].1)).sum()
    }

    pub fn state_at(&self, y: f64) -> GasState {
        let k = self.pieces.partition_point(|(yk, _)| *yk <= y);
        self.pieces[k.saturating_sub(1)].1
    }

    /// Integral of `|U_0(y) - U+|` over `y >= 0`.
    pub fn l1_deviation(&self, u_plus: &GasState) -> f64 {
        self.pieces.windows(2).map(|w| (w[1].0 - w[0].0) * w[0].1.distance(u_plus)).sum()
    }

    fn check(&self, u_plus: &GasState) -> Result<()> {
        let first = self.pieces.first().ok_or_else(|| Error::InvalidProfile("no pieces".into()))?;
        if first.0 != 0.0 {
            return Err(Error::InvalidProfile(format!("first piece starts at {} instead of 0", first.0)));
        }
        if self.pieces.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidProfile("piece edges must increase strictly".into()));
        }
        let last = self.pieces[self.pieces.len() - 1].1;
        if last.distance(u_plus) > 1e-12 {
            return Err(Error::InvalidProfile("profile must equal U+ for large y".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Solver {
    Accurate,
    Simplified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum AuditPolicy {
    Off,
    Warn,
    Strict,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InteractionRecord {
    pub x: f64,
    pub y: f64,
    pub case: u8,
    pub e_delta: f64,
    pub solver: Solver,
    pub incoming: Vec<u64>,
    pub outgoing: Vec<u64>,
    pub f_before: f64,
    pub f_after: f64,
    pub audit_passed: bool,
    /// `F_after - F_before - (-E/4 + tol)`, positive on failure.
    pub excess: f64,
}

/// Numerical parameters of one run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SchemeParams {
    pub gas: GasParams,
    pub delta: f64,
    pub mu_delta: f64,
    pub lambda_hat: f64,
    pub rho_bar: f64,
    pub weights: Weights,
    pub audit: AuditPolicy,
    pub max_fronts: usize,
    pub max_interactions: usize,
}

/// A lifetime piece of a front, for diagrams and residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Segment {
    pub id: u64,
    pub kind: FrontKind,
    pub is_strong: bool,
    pub gen_order: u32,
    pub x_start: f64,
    pub x_end: f64,
    pub y_start: f64,
    pub speed: f64,
    pub below: GasState,
    pub above: GasState,
}

impl Segment {
    fn of(f: &Front, x_end: f64) -> Self {
        Self {
            id: f.id,
            kind: f.kind,
            is_strong: f.is_strong,
            gen_order: f.gen_order,
            x_start: f.x0,
            x_end,
            y_start: f.y0,
            speed: f.speed,
            below: f.below,
            above: f.above,
        }
    }

    pub fn y_at(&self, x: f64) -> f64 {
        self.y_start + self.speed * (x - self.x_start)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundarySegment {
    pub x_start: f64,
    pub x_end: f64,
    pub y_start: f64,
    pub slope: f64,
}

impl BoundarySegment {
    pub fn y_at(&self, x: f64) -> f64 {
        self.y_start + self.slope * (x - self.x_start)
    }
}

/// Everything the run traced out on `[0, x]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct History {
    pub x_end: f64,
    pub segments: Vec<Segment>,
    pub boundary: Vec<BoundarySegment>,
    pub static_state: GasState,
    pub initial: InitialProfile,
}

/// A constant strip between two fronts at the current `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slab {
    pub y_low: f64,
    pub y_high: f64,
    pub state: GasState,
    pub is_static: bool,
}

/// Participants of an interaction.
#[derive(Debug, Clone, Copy)]
pub enum Participants<'a> {
    Pair { lower: &'a Front, upper: &'a Front },
    Boundary { front: &'a Front },
}

/// Next event found by a full scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NextEvent {
    /// Fronts at `index` and `index + 1` meet.
    Pair { index: usize },
    /// The lowest front reaches the boundary.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Front(u64, u64),
    Boundary(u64, u64),
}

#[derive(Debug, Clone, Copy)]
struct Event {
    x: f64,
    seq: u64,
    lower: Slot,
    upper: Slot,
}

impl PartialEq for Event {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Event {
    fn cmp(&self, o: &Self) -> Ordering {
        o.x.total_cmp(&self.x).then(o.seq.cmp(&self.seq))
    }
}

struct Emitted {
    front: RiemannFront,
    order: u32,
    strong: bool,
}

/// Case index 1..6 and `E_delta` of an interaction.
pub fn classify_case(p: Participants<'_>) -> Result<(u8, f64)> {
    let bad = |what: &str| Err(Error::UnclassifiableGeometry(what.into()));
    match p {
        Participants::Boundary { front } => {
            if front.is_weak() && front.index() == 1 {
                Ok((2, front.strength()))
            } else {
                bad(&format!("family-{} front (strong: {}) reached the boundary", front.index(), front.is_strong))
            }
        }
        Participants::Pair { lower, upper } => {
            if upper.is_np() {
                return bad("a front overtook a non-physical front");
            }
            if lower.is_np() {
                return Ok(if upper.is_strong {
                    (5, upper.strength() * lower.strength())
                } else {
                    (6, upper.strength() * lower.strength())
                });
            }
            match (lower.is_strong, upper.is_strong) {
                (true, true) => bad("two strong fronts met"),
                (true, false) | (false, true) => {
                    let (s, w) = if lower.is_strong { (lower, upper) } else { (upper, lower) };
                    if w.index() == 3 && w.is_shock() {
                        Ok((4, w.strength().min(s.strength())))
                    } else if lower.is_strong && w.index() < 3 {
                        Ok((3, w.strength() * s.strength()))
                    } else {
                        bad(&format!("weak family-{} front met a strong front from the wrong side", w.index()))
                    }
                }
                (false, false) => {
                    if lower.index() >= upper.index() {
                        Ok((1, lower.strength() * upper.strength()))
                    } else {
                        bad(&format!("family-{} front overtook family-{} front from below", lower.index(), upper.index()))
                    }
                }
            }
        }
    }
}

/// Rules 1 and 2.
pub fn solver_rule(case: u8, e_delta: f64, mu_delta: f64) -> Solver {
    if case <= 4 && e_delta > mu_delta {
        Solver::Accurate
    } else {
        Solver::Simplified
    }
}

/// Generation order of an outgoing family-`l` front from fronts of orders
/// `k1`, `k2` and families `i`, `j`.
pub fn generation_order(k1: u32, i: u8, k2: u32, j: u8, l: u8) -> u32 {
    match (l == i, l == j) {
        (false, false) => k1 + k2,
        (true, true) => k1.min(k2),
        (true, false) => k1,
        (false, true) => k2,
    }
}

pub fn assign_generation_orders(k1: u32, i: u8, k2: u32, j: u8, outgoing: &[u8]) -> Vec<u32> {
    outgoing.iter().map(|&l| generation_order(k1, i, k2, j, l)).collect()
}

/// Threshold `mu_delta` for Rule 1, capped at `cap`.
pub fn mu_delta(delta: f64, c1: f64, c2: f64, delta_star: f64, cap: f64) -> Result<f64> {
    let r = c2 * delta_star;
    if !(r >= 0.0 && r < 1.0) || !(delta > 0.0) || !(c1 > 0.0) || !(c2 > 0.0) {
        return Err(Error::ConstantsInvalid(format!("mu_delta needs 0 <= C2 delta* < 1, got {r}")));
    }
    let mut k0 = 1u32;
    while c1 * r.powi(k0 as i32) / (1.0 - r) > 0.5 * delta {
        k0 += 1;
        if k0 > 10_000 {
            return Err(Error::ConstantsInvalid("no admissible k0 for mu_delta".into()));
        }
    }
    let q = 3.0 * delta_star / delta;
    let sum: f64 = (1..k0).map(|m| q.powi(2 * m as i32 - 1)).sum();
    if sum == 0.0 {
        return Ok(cap);
    }
    Ok((0.5 * delta / (c2 * c1 * sum)).min(cap))
}

fn pair_meet(x: f64, lower: &Front, upper: &Front) -> f64 {
    let ds = lower.speed - upper.speed;
    if !(ds > 0.0) {
        return f64::INFINITY;
    }
    let xm = (upper.y0 - lower.y0 + lower.speed * lower.x0 - upper.speed * upper.x0) / ds;
    xm.max(x)
}

fn boundary_meet(x: f64, b: &Boundary, f: &Front) -> f64 {
    let ds = b.slope - f.speed;
    if !(ds > 0.0) {
        return f64::INFINITY;
    }
    let xm = (f.y0 - b.y0 + b.slope * b.x0 - f.speed * f.x0) / ds;
    xm.max(x)
}

/// The tracked approximate solution.
#[derive(Debug, Clone)]
pub struct FrontField {
    pub x: f64,
    pub fronts: Vec<Front>,
    pub boundary: Boundary,
    pub events: Vec<InteractionRecord>,
    pub trace: Vec<GlimmSnapshot>,
    pub params: SchemeParams,
    pub background: BackgroundSolution,
    pub max_front_count: usize,
    closed: Vec<Segment>,
    boundary_closed: Vec<BoundarySegment>,
    profile: InitialProfile,
    queue: BinaryHeap<Event>,
    next_id: u64,
    seq: u64,
    snapshot: GlimmSnapshot,
}

impl FrontField {
    /// Builds the field at `x = 0+` from the profile.
    pub fn initialize(
        profile: &InitialProfile,
        background: &BackgroundSolution,
        params: SchemeParams,
        tv_limit: f64,
    ) -> Result<Self> {
        profile.check(&background.u_plus)?;
        let tv = profile.total_variation();
        if tv > tv_limit {
            return Err(Error::TvTooLarge { tv, limit: tv_limit });
        }
        let g = params.gas;
        let corner = BackgroundSolution::new(&profile.pieces[0].1, background.p_bar, &g)?;
        let static_state = GasState::at_rest(background.p_bar, params.rho_bar);
        let mut field = Self {
            x: 0.0,
            fronts: Vec::new(),
            boundary: Boundary { x0: 0.0, y0: 0.0, slope: corner.k_b, static_state },
            events: Vec::new(),
            trace: Vec::new(),
            params,
            background: *background,
            max_front_count: 0,
            closed: Vec::new(),
            boundary_closed: Vec::new(),
            profile: profile.clone(),
            queue: BinaryHeap::new(),
            next_id: 0,
            seq: 0,
            snapshot: GlimmSnapshot::default(),
        };
        let delta = field.params.delta;
        for rf in corner.fan_fronts(delta, &g)? {
            field.push_front(&rf, 0.0, 0.0, 0, true);
        }
        for w in profile.pieces.windows(2) {
            let (_, fronts) = accurate_solver(&w[0].1, &w[1].1, delta, &g)?;
            for rf in fronts {
                field.push_front(&rf, 0.0, w[1].0, 1, false);
            }
        }
        field.max_front_count = field.fronts.len();
        field.check_front_budget()?;
        field.snapshot = glimm::compute_functional(&field);
        field.trace.push(field.snapshot);
        if !field.fronts.is_empty() {
            field.schedule_boundary();
            for i in 0..field.fronts.len() - 1 {
                field.schedule_pair(i);
            }
        }
        Ok(field)
    }

    fn push_front(&mut self, rf: &RiemannFront, x: f64, y: f64, order: u32, strong: bool) {
        let f = self.make_front(rf, x, y, order, strong);
        self.fronts.push(f);
    }

    fn make_front(&mut self, rf: &RiemannFront, x: f64, y: f64, order: u32, strong: bool) -> Front {
        let id = self.next_id;
        self.next_id += 1;
        Front {
            id,
            kind: rf.kind,
            x0: x,
            y0: y,
            speed: rf.slope,
            below: rf.below,
            above: rf.above,
            gen_order: order,
            is_strong: strong,
        }
    }

    fn check_front_budget(&self) -> Result<()> {
        if self.fronts.len() > self.params.max_fronts {
            return Err(Error::TooManyFronts(self.fronts.len()));
        }
        Ok(())
    }

    pub fn initial_profile(&self) -> &InitialProfile {
        &self.profile
    }

    /// Glimm functional of the current field.
    pub fn snapshot(&self) -> GlimmSnapshot {
        self.snapshot
    }

    /// State adjacent to the free boundary.
    pub fn boundary_state(&self) -> GasState {
        self.fronts.first().map(|f| f.below).unwrap_or(self.background.u_plus)
    }

    /// Constant strips at the current `x`, static gas first.
    pub fn slabs(&self) -> Vec<Slab> {
        let x = self.x;
        let mut out = Vec::with_capacity(self.fronts.len() + 2);
        let gy = self.boundary.y_at(x);
        out.push(Slab { y_low: f64::NEG_INFINITY, y_high: gy, state: self.boundary.static_state, is_static: true });
        let mut lo = gy;
        let mut state = self.boundary_state();
        for f in &self.fronts {
            let y = f.y_at(x);
            out.push(Slab { y_low: lo, y_high: y, state, is_static: false });
            lo = y;
            state = f.above;
        }
        out.push(Slab { y_low: lo, y_high: f64::INFINITY, state, is_static: false });
        out
    }

    /// State at height `y` for the current `x`; `None` in the static gas.
    pub fn state_at(&self, y: f64) -> Option<GasState> {
        if y < self.boundary.y_at(self.x) {
            return None;
        }
        let k = self.fronts.partition_point(|f| f.y_at(self.x) <= y);
        Some(if k == 0 { self.boundary_state() } else { self.fronts[k - 1].above })
    }

    /// Largest mismatch between each front's above-state and the state rebuilt
    /// from its below-state and parameter, and between neighbouring fronts.
    pub fn consistency_residual(&self) -> Result<f64> {
        let g = &self.params.gas;
        let mut worst = 0.0f64;
        for f in &self.fronts {
            let r = match f.kind {
                FrontKind::Physical(w) => wave_forward(&f.below, w, g)?.distance(&f.above),
                FrontKind::NonPhysical(e) => (f.below.distance(&f.above) - e).abs(),
            };
            worst = worst.max(r);
        }
        for w in self.fronts.windows(2) {
            worst = worst.max(w[0].above.distance(&w[1].below));
        }
        Ok(worst)
    }

    /// Closed segments plus the live fronts cut at the current `x`.
    pub fn history(&self) -> History {
        let mut segments = self.closed.clone();
        segments.extend(self.fronts.iter().map(|f| Segment::of(f, self.x)));
        let mut boundary = self.boundary_closed.clone();
        boundary.push(BoundarySegment {
            x_start: self.boundary.x0,
            x_end: self.x,
            y_start: self.boundary.y0,
            slope: self.boundary.slope,
        });
        History {
            x_end: self.x,
            segments,
            boundary,
            static_state: self.boundary.static_state,
            initial: self.profile.clone(),
        }
    }

    /// Next interaction by a full scan, `(INFINITY, None)` when there is none.
    pub fn next_interaction(&self) -> (f64, Option<NextEvent>) {
        let mut best = (f64::INFINITY, None);
        if let Some(f) = self.fronts.first() {
            let xb = boundary_meet(self.x, &self.boundary, f);
            if xb < best.0 {
                best = (xb, Some(NextEvent::Boundary));
            }
        }
        for i in 0..self.fronts.len().saturating_sub(1) {
            let xm = pair_meet(self.x, &self.fronts[i], &self.fronts[i + 1]);
            if xm < best.0 {
                best = (xm, Some(NextEvent::Pair { index: i }));
            }
        }
        best
    }

    fn slot(f: &Front) -> Slot {
        Slot::Front(f.id, f.speed.to_bits())
    }

    fn boundary_slot(&self) -> Slot {
        Slot::Boundary(self.boundary.slope.to_bits(), self.boundary.x0.to_bits())
    }

    fn push_event(&mut self, x: f64, lower: Slot, upper: Slot) {
        if x.is_finite() {
            self.seq += 1;
            self.queue.push(Event { x, seq: self.seq, lower, upper });
        }
    }

    fn schedule_pair(&mut self, i: usize) {
        if i + 1 >= self.fronts.len() {
            return;
        }
        let (a, b) = (self.fronts[i], self.fronts[i + 1]);
        let x = pair_meet(self.x, &a, &b);
        self.push_event(x, Self::slot(&a), Self::slot(&b));
    }

    fn schedule_boundary(&mut self) {
        if let Some(f) = self.fronts.first().copied() {
            let x = boundary_meet(self.x, &self.boundary, &f);
            let b = self.boundary_slot();
            self.push_event(x, b, Self::slot(&f));
        }
    }

    fn position(&self, s: Slot) -> Option<usize> {
        match s {
            Slot::Front(id, bits) => {
                self.fronts.iter().position(|f| f.id == id).filter(|&i| self.fronts[i].speed.to_bits() == bits)
            }
            Slot::Boundary(..) => None,
        }
    }

    /// Resolved target of a queued event, `None` if it went stale.
    fn resolve(&self, e: &Event) -> Option<NextEvent> {
        match e.lower {
            Slot::Boundary(..) => {
                (e.lower == self.boundary_slot() && self.position(e.upper) == Some(0)).then_some(NextEvent::Boundary)
            }
            Slot::Front(..) => {
                let i = self.position(e.lower)?;
                (self.position(e.upper) == Some(i + 1)).then_some(NextEvent::Pair { index: i })
            }
        }
    }

    fn ids_of(&self, ev: NextEvent) -> Vec<u64> {
        match ev {
            NextEvent::Boundary => alloc::vec![self.fronts[0].id],
            NextEvent::Pair { index } => alloc::vec![self.fronts[index].id, self.fronts[index + 1].id],
        }
    }

    fn pop_valid(&mut self) -> Option<(Event, NextEvent)> {
        while let Some(e) = self.queue.pop() {
            if let Some(t) = self.resolve(&e) {
                return Some((e, t));
            }
        }
        None
    }

    /// Re-anchors front `i` at the current `x` with a slightly larger speed.
    fn nudge(&mut self, i: usize) {
        let x = self.x;
        let f = self.fronts[i];
        self.closed.push(Segment::of(&f, x));
        let nf = &mut self.fronts[i];
        nf.y0 = f.y_at(x);
        nf.x0 = x;
        nf.speed += TIE_NUDGE;
        if i == 0 {
            self.schedule_boundary();
        }
        if i > 0 {
            self.schedule_pair(i - 1);
        }
        self.schedule_pair(i);
    }

    /// Processes every interaction with `x <= x_stop`, then moves to `x_stop`.
    pub fn advance(&mut self, x_stop: f64) -> Result<()> {
        while let Some((e, target)) = self.pop_valid() {
            if e.x > x_stop {
                self.queue.push(e);
                break;
            }
            let ids = self.ids_of(target);
            let mut tied = Vec::new();
            let mut nudge_id = None;
            while let Some(other) = self.queue.peek().copied() {
                if other.x > e.x + TIE_TOLERANCE {
                    break;
                }
                self.queue.pop();
                if let Some(t2) = self.resolve(&other) {
                    let ids2 = self.ids_of(t2);
                    if nudge_id.is_none() && ids2.iter().any(|id| ids.contains(id)) && e.x - self.x > 1e-9 {
                        nudge_id = ids.iter().chain(ids2.iter()).copied().filter(|id| {
                            self.fronts.iter().any(|f| f.id == *id && !f.is_np())
                        }).max();
                    }
                    tied.push(other);
                }
            }
            if let Some(id) = nudge_id {
                self.queue.push(e);
                self.queue.extend(tied);
                let i = self.fronts.iter().position(|f| f.id == id).expect("tied front is live");
                self.nudge(i);
                continue;
            }
            self.queue.extend(tied);
            if self.events.len() >= self.params.max_interactions {
                return Err(Error::TooManyFronts(self.events.len()));
            }
            self.x = self.x.max(e.x);
            match target {
                NextEvent::Boundary => self.interact_boundary()?,
                NextEvent::Pair { index } => self.interact_pair(index)?,
            }
        }
        self.x = self.x.max(x_stop);
        Ok(())
    }

    fn interact_pair(&mut self, i: usize) -> Result<()> {
        let (lower, upper) = (self.fronts[i], self.fronts[i + 1]);
        let (case, e) = classify_case(Participants::Pair { lower: &lower, upper: &upper })?;
        let solver = solver_rule(case, e, self.params.mu_delta);
        let g = self.params.gas;
        let (delta, lh) = (self.params.delta, self.params.lambda_hat);
        let (ul, ur) = (lower.below, upper.above);
        let (ki, fi, kj, fj) = (lower.gen_order, lower.index(), upper.gen_order, upper.index());
        let order = |l: u8| {
            let k = generation_order(ki, fi, kj, fj, l);
            if l == 4 {
                k.max(1)
            } else {
                k
            }
        };
        let strong_in = lower.is_strong || upper.is_strong;
        let mut out = Vec::new();
        let tag = |rf: RiemannFront, out: &mut Vec<Emitted>| {
            let l = rf.kind.index();
            let strong = strong_in && l == 3 && rf.kind.strength() > 0.0 && matches!(rf.kind, FrontKind::Physical(w) if w.is_rarefaction());
            out.push(Emitted { front: rf, order: if strong { 0 } else { order(l) }, strong });
        };
        match (case, solver) {
            (5 | 6, _) => {
                let o = simplified_case_b(&ul, &ur, upper.wave().expect("physical"), lh, &g)?;
                for rf in o.fronts {
                    out.push(Emitted { front: rf, order: upper.gen_order, strong: upper.is_strong });
                }
                if let Some(np) = o.np {
                    out.push(Emitted { front: np, order: lower.gen_order.max(1), strong: false });
                }
            }
            (_, Solver::Accurate) => {
                // a fan front keeps its identity even if it grows slightly past delta
                let split = if strong_in { f64::INFINITY } else { delta };
                for rf in accurate_solver(&ul, &ur, split, &g)?.1 {
                    tag(rf, &mut out);
                }
            }
            (_, Solver::Simplified) => {
                let o = simplified_case_a(&ul, &ur, lower.wave().expect("physical"), upper.wave().expect("physical"), delta, lh, &g)?;
                for rf in o.fronts.into_iter().chain(o.np) {
                    tag(rf, &mut out);
                }
            }
        }
        let y = 0.5 * (lower.y_at(self.x) + upper.y_at(self.x));
        self.finish(case, e, solver, i, 2, out, y, ul, ur)
    }

    fn interact_boundary(&mut self) -> Result<()> {
        let f = self.fronts[0];
        let (case, e) = classify_case(Participants::Boundary { front: &f })?;
        let solver = solver_rule(case, e, self.params.mu_delta);
        let g = self.params.gas;
        let ur = f.above;
        let p_bar = self.boundary.static_state.p;
        let mut out = Vec::new();
        let b = match solver {
            Solver::Accurate => {
                let b = solve_boundary_riemann(&ur, p_bar, &g)?;
                for rf in boundary_fronts(&b, &ur, self.params.delta, &g)? {
                    out.push(Emitted { front: rf, order: f.gen_order, strong: false });
                }
                b
            }
            Solver::Simplified => {
                let (b, np) = simplified_case_c(&ur, p_bar, self.params.lambda_hat, &g)?;
                if let Some(np) = np {
                    out.push(Emitted { front: np, order: f.gen_order.max(1), strong: false });
                }
                b
            }
        };
        let x = self.x;
        let y = self.boundary.y_at(x);
        self.boundary_closed.push(BoundarySegment {
            x_start: self.boundary.x0,
            x_end: x,
            y_start: self.boundary.y0,
            slope: self.boundary.slope,
        });
        self.boundary.x0 = x;
        self.boundary.y0 = y;
        self.boundary.slope = b.slope;
        self.finish(case, e, solver, 0, 1, out, y, b.u_m, ur)
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &mut self,
        case: u8,
        e_delta: f64,
        solver: Solver,
        i: usize,
        removed: usize,
        mut out: Vec<Emitted>,
        y: f64,
        ul: GasState,
        ur: GasState,
    ) -> Result<()> {
        let x = self.x;
        if let Some(first) = out.first_mut() {
            first.front.below = ul;
        }
        if let Some(last) = out.last_mut() {
            last.front.above = ur;
        }
        let incoming: Vec<u64> = self.fronts[i..i + removed].iter().map(|f| f.id).collect();
        for k in i..i + removed {
            let seg = Segment::of(&self.fronts[k], x);
            self.closed.push(seg);
        }
        let new: Vec<Front> = out.iter().map(|em| self.make_front(&em.front, x, y, em.order, em.strong)).collect();
        let outgoing: Vec<u64> = new.iter().map(|f| f.id).collect();
        let n_new = new.len();
        self.fronts.splice(i..i + removed, new);
        self.max_front_count = self.max_front_count.max(self.fronts.len());
        self.check_front_budget()?;

        if i == 0 || case == 2 {
            self.schedule_boundary();
        }
        let lo = i.saturating_sub(1);
        let hi = (i + n_new).min(self.fronts.len().saturating_sub(1));
        for k in lo..hi.max(lo) {
            self.schedule_pair(k);
        }
        if n_new == 0 && i > 0 {
            self.schedule_pair(i - 1);
        }

        let before = self.snapshot;
        let after = glimm::compute_functional(self);
        let audit: Audit = glimm::audit_interaction(&before, &after, e_delta);
        self.snapshot = after;
        self.trace.push(after);
        self.events.push(InteractionRecord {
            x,
            y,
            case,
            e_delta,
            solver,
            incoming,
            outgoing,
            f_before: before.f,
            f_after: after.f,
            audit_passed: audit.passed,
            excess: audit.excess,
        });
        if !audit.passed && self.params.audit == AuditPolicy::Strict {
            return Err(Error::AuditFailure { x, case, excess: audit.excess });
        }
        Ok(())
    }
}

/// Total strength of the strong fronts.
pub fn strong_strength(fronts: &[Front]) -> f64 {
    fronts.iter().filter(|f| f.is_strong).map(|f| f.strength()).sum()
}
