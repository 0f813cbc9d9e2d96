//! The engine: loaded megamodels, the live layer diagram, instances and the
//! single-threaded execution loop.

use super::call::{Environment, SoftwareModule};
use super::clock::{from_micros, to_micros, Clock, VirtualClock};
use super::instance::{ModuleInstance, OpBinding};
use super::store::{ModelId, ModelStore};
use super::trace::{Audit, MutationRecord, RunCause, RunInterval, RunResult, Stamp, TraceEntry, TraceKind};
use crate::diag::{has_errors, Diagnostic};
use crate::error::{EngineError, Result};
use crate::metamodel::{
    check_architecture, check_megamodel, ArchitectureDecl, Event, EventTypes, Megamodel, ModelSlot, ModuleKind,
    Registry, UsageKind, UseEdge,
};
use crate::reflect::Edit;
use crate::trigger::{match_event, Activation, PeriodAnchor, PeriodicSource, Scheduler, TargetInfo};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::time::Duration;

/// Messages accepted by the engine inbox from other threads.
pub enum Inbound {
    Event(Event),
    Control { line: String, reply: Option<Sender<String>> },
    Stop,
}

/// Thread-safe handle for producers: they only enqueue onto the inbox.
#[derive(Clone)]
pub struct EngineHandle {
    tx: Sender<Inbound>,
}

impl EngineHandle {
    pub fn post_event(&self, event: Event) {
        let _ = self.tx.send(Inbound::Event(event));
    }

    /// Sends a control line; the response arrives once the engine is quiescent.
    pub fn control(&self, line: &str) -> Receiver<String> {
        let (reply, rx) = mpsc::channel();
        let _ = self.tx.send(Inbound::Control {
            line: line.to_string(),
            reply: Some(reply),
        });
        rx
    }

    pub fn stop(&self) {
        let _ = self.tx.send(Inbound::Stop);
    }
}

/// One level of the active call chain.
#[derive(Debug, Clone)]
pub(crate) struct Frame {
    pub instance: String,
    /// Callee slot -> (owner instance, owner slot) for parameter models.
    pub aliases: BTreeMap<String, (String, String)>,
    pub interception: bool,
}

/// Changes requested mid-run, applied at the next quiescent point.
#[derive(Debug, Clone)]
pub(crate) enum Deferred {
    Edit { instance: String, edit: Edit },
    Destroy(String),
}

pub type ModelInitializer = Box<dyn Fn(&str, &ModelSlot) -> Value + Send>;
pub type TraceSink = Box<dyn FnMut(&TraceEntry) + Send>;

pub struct Engine {
    pub(crate) clock: Arc<dyn Clock>,
    pub(crate) offset_micros: i64,
    pub(crate) registry: Registry,
    pub(crate) event_types: EventTypes,
    pub(crate) arch: ArchitectureDecl,
    pub(crate) instances: BTreeMap<String, ModuleInstance>,
    pub(crate) software: BTreeMap<String, Arc<dyn SoftwareModule>>,
    pub(crate) store: ModelStore,
    pub(crate) scheduler: Scheduler,
    pub(crate) frames: Vec<Frame>,
    pub(crate) deferred: Vec<Deferred>,
    pub(crate) audit: Audit,
    seq: u64,
    pub(crate) trace_buf: Vec<TraceEntry>,
    trace_sink: Option<TraceSink>,
    results: Vec<RunResult>,
    retain_results: bool,
    pub(crate) environment: Option<Box<dyn Environment>>,
    model_init: Option<ModelInitializer>,
    inbox_rx: Receiver<Inbound>,
    inbox_tx: Sender<Inbound>,
    pub(crate) stopped: bool,
    event_log: Vec<Event>,
    run_errors: Vec<(f64, EngineError)>,
}

impl Engine {
    pub fn new(clock: Arc<dyn Clock>) -> Self {
        let (inbox_tx, inbox_rx) = mpsc::channel();
        Self {
            clock,
            offset_micros: 0,
            registry: Registry::new(),
            event_types: EventTypes::new(),
            arch: ArchitectureDecl::default(),
            instances: BTreeMap::new(),
            software: BTreeMap::new(),
            store: ModelStore::new(),
            scheduler: Scheduler::default(),
            frames: Vec::new(),
            deferred: Vec::new(),
            audit: Audit::default(),
            seq: 0,
            trace_buf: Vec::new(),
            trace_sink: None,
            results: Vec::new(),
            retain_results: true,
            environment: None,
            model_init: None,
            inbox_rx,
            inbox_tx,
            stopped: false,
            event_log: Vec::new(),
            run_errors: Vec::new(),
        }
    }

    /// Engine on a fresh virtual clock starting at 0.
    pub fn with_virtual_clock() -> Self {
        Self::new(Arc::new(VirtualClock::new()))
    }

    // ---- configuration ----

    pub fn register_software(&mut self, key: &str, module: impl SoftwareModule + 'static) {
        self.software.insert(key.to_string(), Arc::new(module));
    }

    pub fn register_software_arc(&mut self, key: &str, module: Arc<dyn SoftwareModule>) {
        self.software.insert(key.to_string(), module);
    }

    pub fn has_software(&self, key: &str) -> bool {
        self.software.contains_key(key)
    }

    pub fn set_event_types(&mut self, types: EventTypes) {
        self.event_types = types;
    }

    pub fn event_types(&self) -> &EventTypes {
        &self.event_types
    }

    pub fn set_environment(&mut self, env: Box<dyn Environment>) {
        self.environment = Some(env);
    }

    /// Initial body for every model slot of a new instance, by slot.
    pub fn set_model_initializer(&mut self, init: impl Fn(&str, &ModelSlot) -> Value + Send + 'static) {
        self.model_init = Some(Box::new(init));
    }

    pub fn set_trace_sink(&mut self, sink: impl FnMut(&TraceEntry) + Send + 'static) {
        self.trace_sink = Some(Box::new(sink));
    }

    /// When off, run results are dropped and, without a trace sink, runs
    /// record no trace at all.
    pub fn set_retain_results(&mut self, retain: bool) {
        self.retain_results = retain;
    }

    pub fn set_period_anchor(&mut self, anchor: PeriodAnchor) {
        self.scheduler.set_anchor(anchor);
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    pub fn handle(&self) -> EngineHandle {
        EngineHandle {
            tx: self.inbox_tx.clone(),
        }
    }

    // ---- inspection ----

    /// Engine time in seconds.
    pub fn now(&self) -> f64 {
        from_micros(to_micros(self.clock.now()) + self.offset_micros)
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn architecture(&self) -> &ArchitectureDecl {
        &self.arch
    }

    pub fn instance(&self, name: &str) -> Option<&ModuleInstance> {
        self.instances.get(name)
    }

    pub fn instances(&self) -> impl Iterator<Item = &ModuleInstance> {
        self.instances.values()
    }

    pub fn store(&self) -> &ModelStore {
        &self.store
    }

    pub fn audit(&self) -> &Audit {
        &self.audit
    }

    pub fn scheduler(&self) -> &Scheduler {
        &self.scheduler
    }

    pub fn results(&self) -> &[RunResult] {
        &self.results
    }

    pub fn take_results(&mut self) -> Vec<RunResult> {
        std::mem::take(&mut self.results)
    }

    pub fn event_log(&self) -> &[Event] {
        &self.event_log
    }

    pub fn run_errors(&self) -> &[(f64, EngineError)] {
        &self.run_errors
    }

    pub fn is_quiescent(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn is_stopped(&self) -> bool {
        self.stopped
    }

    pub fn stop(&mut self) {
        self.stopped = true;
    }

    /// Body of the model bound to `slot` of `instance`, following parameter aliases.
    pub fn model_body(&self, instance: &str, slot: &str) -> Option<&Value> {
        self.slot_model(instance, slot)
            .and_then(|id| self.store.get(id))
            .map(|m| &m.body)
    }

    pub(crate) fn resolve_slot<'a>(&'a self, instance: &'a str, slot: &'a str) -> (&'a str, &'a str) {
        self.frames
            .iter()
            .rev()
            .find(|f| f.instance == instance)
            .and_then(|f| f.aliases.get(slot))
            .map_or((instance, slot), |(o, s)| (o.as_str(), s.as_str()))
    }

    pub(crate) fn slot_model(&self, instance: &str, slot: &str) -> Option<ModelId> {
        let (owner, slot) = self.resolve_slot(instance, slot);
        self.instances.get(owner)?.models.get(slot).copied()
    }

    pub(crate) fn reflected_instance(&self, instance: &str, slot: &str) -> Option<String> {
        self.arch
            .model_binding(instance, slot)
            .map(|b| b.target.clone())
            .filter(|t| self.instances.contains_key(t))
    }

    // ---- loading ----

    pub fn load_megamodel(&mut self, m: Megamodel) -> Result<()> {
        let diags = check_megamodel(&m);
        if has_errors(&diags) {
            return Err(EngineError::Load(diags));
        }
        self.registry.insert(m.name.clone(), Arc::new(m));
        Ok(())
    }

    /// Full validation of a candidate architecture against a registry,
    /// including that every software-key binding is registered.
    pub(crate) fn validate(&self, arch: &ArchitectureDecl, registry: &Registry) -> Vec<Diagnostic> {
        let mut diags: Vec<Diagnostic> = check_architecture(arch, registry, &self.event_types)
            .into_iter()
            .filter(|d| d.is_error())
            .collect();
        for (i, u) in arch.uses.iter().enumerate() {
            if let Some(key) = self.software_key(arch, u) {
                if !self.software.contains_key(&key) {
                    diags.push(Diagnostic::error(
                        "E-BIND-MISSING",
                        format!("use:{i}"),
                        format!("no software module registered as `{key}` for `{}.{}`", u.module, u.op),
                    ));
                }
            }
        }
        diags
    }

    fn software_key(&self, arch: &ArchitectureDecl, u: &UseEdge) -> Option<String> {
        match arch.module(&u.target) {
            Some(m) if m.kind == ModuleKind::Megamodel => None,
            Some(m) => Some(m.source_ref.clone()),
            None => Some(u.target.clone()),
        }
    }

    /// Installs a layer diagram and instantiates its megamodel modules.
    pub fn load(&mut self, arch: ArchitectureDecl) -> Result<()> {
        if !self.is_quiescent() {
            return Err(EngineError::Reentry("engine".into()));
        }
        let diags = self.validate(&arch, &self.registry);
        if !diags.is_empty() {
            if diags.iter().all(|d| d.code == "E-BIND-MISSING") {
                return Err(EngineError::BindMissing(
                    diags.iter().map(|d| d.message.clone()).collect::<Vec<_>>().join("; "),
                ));
            }
            return Err(EngineError::Load(diags));
        }
        self.arch = arch;
        self.sync_instances();
        Ok(())
    }

    /// Adds one megamodel module with explicit operation bindings.
    pub fn instantiate(&mut self, megamodel: &str, instance: &str, layer: u32, bindings: &[(&str, &str)]) -> Result<()> {
        if self.instances.contains_key(instance) || self.arch.module(instance).is_some() {
            return Err(EngineError::NameDup(instance.to_string()));
        }
        let mm = self
            .registry
            .get(megamodel)
            .ok_or_else(|| EngineError::Load(vec![Diagnostic::error(
                "E-MM-UNKNOWN",
                format!("module:{instance}"),
                format!("megamodel `{megamodel}` is not loaded"),
            )]))?
            .clone();
        for op in &mm.operations {
            if !bindings.iter().any(|(o, _)| *o == op.name) {
                return Err(EngineError::BindMissing(format!(
                    "operation `{}` of `{instance}` is not bound",
                    op.name
                )));
            }
        }
        let mut arch = self.arch.clone();
        arch.insert_module(crate::metamodel::ModuleDecl {
            instance: instance.to_string(),
            kind: ModuleKind::Megamodel,
            source_ref: megamodel.to_string(),
            layer,
        });
        for (op, target) in bindings {
            arch.uses.push(UseEdge {
                module: instance.to_string(),
                op: op.to_string(),
                target: target.to_string(),
            });
        }
        let diags = self.validate(&arch, &self.registry);
        if !diags.is_empty() {
            if let Some(d) = diags.iter().find(|d| d.code == "E-BIND-MISSING") {
                return Err(EngineError::BindMissing(d.message.clone()));
            }
            return Err(EngineError::Load(diags));
        }
        self.arch = arch;
        self.sync_instances();
        Ok(())
    }

    /// Brings instances in line with the layer diagram: creates new ones,
    /// drops removed ones, refreshes bindings and arms periodic triggers.
    pub(crate) fn sync_instances(&mut self) {
        let wanted: BTreeMap<String, String> = self
            .arch
            .megamodel_modules()
            .map(|m| (m.instance.clone(), m.source_ref.clone()))
            .collect();
        let gone: Vec<String> = self
            .instances
            .keys()
            .filter(|k| !wanted.contains_key(*k))
            .cloned()
            .collect();
        for name in gone {
            if let Some(inst) = self.instances.remove(&name) {
                for id in inst.models.values() {
                    self.store.remove(*id);
                }
            }
        }
        for (name, mm_name) in &wanted {
            let Some(mm) = self.registry.get(mm_name).cloned() else { continue };
            match self.instances.get_mut(name) {
                Some(inst) => {
                    if !inst.customized && !Arc::ptr_eq(&inst.megamodel, &mm) {
                        inst.megamodel = mm;
                    }
                }
                None => {
                    let inst = self.new_instance(name, mm);
                    self.instances.insert(name.clone(), inst);
                }
            }
        }
        self.rebuild_bindings();
        let now = self.now();
        let instances = &self.instances;
        self.scheduler.retain_instances(|n| instances.contains_key(n));
        for s in &self.arch.senses {
            if s.trigger.as_ref().is_some_and(|t| t.is_periodic()) {
                self.scheduler.arm(&s.sensing, &s.sensed, now);
            } else {
                self.scheduler.disarm(&s.sensing, &s.sensed);
            }
        }
    }

    fn new_instance(&mut self, name: &str, mm: Arc<Megamodel>) -> ModuleInstance {
        let mut inst = ModuleInstance::new(name, mm.clone());
        for slot in mm.models.iter().filter(|s| !s.megamodel_ref) {
            let created = mm
                .operations
                .iter()
                .flat_map(|o| &o.usages)
                .any(|u| u.slot == slot.name && u.kind == UsageKind::Create);
            if created {
                continue;
            }
            let body = self.model_init.as_ref().map_or_else(|| json!({}), |f| f(name, slot));
            let id = self.store.create(&slot.name, slot.stereotype, body);
            inst.models.insert(slot.name.clone(), id);
        }
        inst
    }

    pub(crate) fn rebuild_bindings(&mut self) {
        let arch = &self.arch;
        for inst in self.instances.values_mut() {
            inst.bindings = inst
                .megamodel
                .operations
                .iter()
                .filter_map(|op| {
                    let u = arch.use_edge(&inst.name, &op.name)?;
                    let b = match arch.module(&u.target) {
                        Some(m) if m.kind == ModuleKind::Megamodel => OpBinding::Module(u.target.clone()),
                        Some(m) => OpBinding::Software(m.source_ref.clone()),
                        None => OpBinding::Software(u.target.clone()),
                    };
                    Some((op.name.clone(), b))
                })
                .collect();
        }
    }

    // ---- bookkeeping ----

    pub(crate) fn stamp(&mut self) -> Stamp {
        self.seq += 1;
        Stamp {
            time: self.now(),
            seq: self.seq,
        }
    }

    pub(crate) fn record_mutation(&mut self, what: String, structural: bool, interception: bool) {
        let at = self.stamp();
        self.audit.mutations.push(MutationRecord {
            at,
            what,
            interception,
            structural,
        });
    }

    pub(crate) fn trace(&mut self, instance: &str, kind: TraceKind, name: &str, detail: Option<String>) {
        if !self.retain_results && self.trace_sink.is_none() {
            return;
        }
        let entry = TraceEntry {
            time: self.now(),
            instance: instance.to_string(),
            kind,
            name: name.to_string(),
            detail,
        };
        if let Some(sink) = self.trace_sink.as_mut() {
            sink(&entry);
        }
        self.trace_buf.push(entry);
    }

    pub(crate) fn note_error(&mut self, err: EngineError) {
        self.run_errors.push((self.now(), err));
    }

    // ---- events and scheduling ----

    /// Matches an event against every sense edge and queues activations.
    pub fn on_event(&mut self, event: Event) {
        let now = self.now();
        let mut hits = Vec::new();
        for s in &self.arch.senses {
            let Some(spec) = &s.trigger else { continue };
            if !self.instances.contains_key(&s.sensing) {
                continue;
            }
            if match_event(spec, &event, s, &self.event_types) {
                hits.push((s.sensing.clone(), spec.initial_state.clone(), spec.period_micros.unwrap_or(0)));
            }
        }
        for (inst, state, period) in hits {
            self.scheduler.enqueue(&inst, &state, Some(event.clone()), now, period);
        }
        self.event_log.push(event);
    }

    pub fn post_event(&mut self, event: Event) {
        self.on_event(event);
    }

    fn periodic_sources(&self) -> Vec<PeriodicSource> {
        let now = self.now();
        self.arch
            .senses
            .iter()
            .filter_map(|s| {
                let t = s.trigger.as_ref()?;
                if !t.is_periodic() || !self.instances.contains_key(&s.sensing) {
                    return None;
                }
                Some(PeriodicSource {
                    instance: s.sensing.clone(),
                    initial_state: t.initial_state.clone(),
                    period_micros: t.period_micros.unwrap_or(0),
                    armed_at: self.scheduler.armed_at(&s.sensing, &s.sensed).unwrap_or(now),
                })
            })
            .collect()
    }

    fn target_info(instances: &BTreeMap<String, ModuleInstance>, arch: &ArchitectureDecl, name: &str) -> Option<TargetInfo> {
        let inst = instances.get(name)?;
        Some(TargetInfo {
            layer: arch.layer_of(name).unwrap_or(0),
            last_run: inst.last_run(),
            running: inst.is_running(),
        })
    }

    pub fn next_action(&mut self, now: f64) -> Option<Activation> {
        if !self.is_quiescent() {
            return None;
        }
        let periodic = self.periodic_sources();
        let (instances, arch) = (&self.instances, &self.arch);
        self.scheduler
            .next_action(now, &periodic, &|n| Self::target_info(instances, arch, n))
    }

    pub fn next_wake(&self) -> Option<f64> {
        let periodic = self.periodic_sources();
        self.scheduler
            .next_wake(&periodic, &|n| Self::target_info(&self.instances, &self.arch, n))
    }

    // ---- execution ----

    /// Runs `instance` from `initial_state` to completion, outside the scheduler.
    pub fn execute_run(&mut self, instance: &str, initial_state: &str) -> Result<RunResult> {
        if !self.is_quiescent() {
            return Err(EngineError::Reentry(instance.to_string()));
        }
        self.run_activation(instance, initial_state, RunCause::Direct)
    }

    fn run_activation(&mut self, instance: &str, initial_state: &str, cause: RunCause) -> Result<RunResult> {
        let start = self.stamp();
        let result = self.run_top(instance, initial_state);
        let end = self.stamp();
        let (final_state, aborted) = match &result {
            Ok(r) => (r.final_state.clone(), false),
            Err(_) => (crate::condition::ABORTED_STATE.to_string(), true),
        };
        self.audit.runs.push(RunInterval {
            instance: instance.to_string(),
            initial_state: initial_state.to_string(),
            final_state,
            start,
            end,
            cause,
            aborted,
        });
        if let Err(e) = &result {
            self.note_error(e.clone());
        }
        self.apply_deferred();
        if let Ok(r) = &result {
            if self.retain_results {
                self.results.push(r.clone());
            }
        }
        result
    }

    /// Executes one ready activation, if any.
    pub fn step(&mut self) -> Option<Result<RunResult>> {
        self.apply_deferred();
        let now = self.now();
        let act = self.next_action(now)?;
        let cause = act.cause.map_or(RunCause::Periodic, RunCause::Event);
        Some(self.run_activation(&act.instance, &act.initial_state, cause))
    }

    /// Applies requests collected during runs; called only at quiescence.
    pub(crate) fn apply_deferred(&mut self) {
        if !self.is_quiescent() {
            return;
        }
        for d in std::mem::take(&mut self.deferred) {
            let outcome = match d {
                Deferred::Edit { instance, edit } => self.apply_edit(&instance, edit, false),
                Deferred::Destroy(name) => {
                    self.destroy_instance(&name);
                    Ok(())
                }
            };
            if let Err(e) = outcome {
                self.note_error(e);
            }
        }
    }

    pub(crate) fn destroy_instance(&mut self, name: &str) {
        self.arch.remove_module(name);
        self.sync_instances();
        self.record_mutation(format!("destroy {name}"), true, false);
    }

    /// Handles everything waiting in the inbox.
    pub fn drain_inbox(&mut self) {
        while let Ok(msg) = self.inbox_rx.try_recv() {
            self.handle_inbound(msg);
        }
    }

    fn handle_inbound(&mut self, msg: Inbound) {
        match msg {
            Inbound::Event(e) => self.on_event(e),
            Inbound::Control { line, reply } => {
                let response = self.handle_control_line(&line).to_string();
                if let Some(reply) = reply {
                    let _ = reply.send(response);
                }
            }
            Inbound::Stop => self.stopped = true,
        }
    }

    /// Runs the loop until engine time `t_end` (or a stop request). Runs are
    /// only started before `t_end`; the clock is then left at or after `t_end`.
    pub fn run_until(&mut self, t_end: f64) {
        loop {
            self.drain_inbox();
            self.apply_deferred();
            if self.stopped {
                return;
            }
            let now = self.now();
            if to_micros(now) >= to_micros(t_end) {
                return;
            }
            if let Some(act) = self.next_action(now) {
                let cause = act.cause.map_or(RunCause::Periodic, RunCause::Event);
                let _ = self.run_activation(&act.instance, &act.initial_state, cause);
                continue;
            }
            let wake = self.next_wake().filter(|w| *w > now).map_or(t_end, |w| w.min(t_end));
            if self.clock.is_virtual() {
                self.clock.wait_until(from_micros(to_micros(wake) - self.offset_micros));
            } else {
                let dt = Duration::from_secs_f64((wake - now).max(0.0));
                match self.inbox_rx.recv_timeout(dt) {
                    Ok(msg) => self.handle_inbound(msg),
                    Err(RecvTimeoutError::Timeout) => {}
                    Err(RecvTimeoutError::Disconnected) => {
                        self.clock.wait_until(from_micros(to_micros(wake) - self.offset_micros))
                    }
                }
            }
        }
    }

    /// Runs until stopped, waiting on the inbox when idle.
    pub fn run_forever(&mut self) {
        while !self.stopped {
            let horizon = self.now() + 3600.0;
            self.run_until(horizon);
        }
    }
}
