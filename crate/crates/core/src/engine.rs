//! The agent cycle (perceive, interpret, update, execute, act) and a
//! synchronous multi-agent scheduler over a shared entity table.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::AgentState;
use crate::error::EngineError;
use crate::frames::{
    detect_conflicts, interpret, update, DeploymentKind, DeploymentPolicy, EngineParams,
};
use crate::identity::{ascribe_frames, categorize, identification, is_in_group, Ascription};
use crate::memory::{LongTermMemory, ResourceView, WorkingMemory};
use crate::model::{
    ActionTemplate, AgentId, Attributes, EntityId, MechanismRule, Percept, ResourceBody,
    ResourceId, TargetRef,
};
use crate::scenario::{validate, Scenario, Severity};
use crate::trace::{
    ActPayload, ExecutePayload, GroupRecord, InterpretPayload, Payload, PerceivePayload,
    TraceEvent, UpdatePayload,
};

/// Attribute change an action makes to one entity at the barrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Effect {
    pub entity: EntityId,
    pub set: Attributes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub actor: AgentId,
    pub verb: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<EntityId>,
    #[serde(default, skip_serializing_if = "Attributes::is_empty")]
    pub args: Attributes,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub effects: Vec<Effect>,
}

impl Action {
    fn same_as(&self, other: &Action) -> bool {
        self.actor == other.actor
            && self.verb == other.verb
            && self.target == other.target
            && self.args == other.args
    }
}

/// The shared world: every entity's attributes and the actions queued for
/// the next barrier.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Environment {
    pub entities: BTreeMap<EntityId, Attributes>,
    pub pending_actions: Vec<Action>,
    pub tick: u64,
}

impl Environment {
    pub fn from_scenario(scenario: &Scenario) -> Self {
        Self {
            entities: scenario
                .entities
                .iter()
                .map(|e| (e.id.clone(), e.attributes.clone()))
                .collect(),
            pending_actions: Vec::new(),
            tick: 0,
        }
    }

    pub fn location(&self, entity: &EntityId) -> Option<&str> {
        self.entities.get(entity)?.get("location")?.as_text()
    }

    pub fn set_attributes(&mut self, entity: &EntityId, set: &Attributes) {
        if let Some(attrs) = self.entities.get_mut(entity) {
            attrs.extend(set.iter().map(|(k, v)| (k.clone(), v.clone())));
        }
    }

    /// Applies every queued effect in emission order and empties the queue.
    pub fn apply_pending(&mut self) -> Vec<Action> {
        let actions = std::mem::take(&mut self.pending_actions);
        for action in &actions {
            for effect in &action.effects {
                self.set_attributes(&effect.entity, &effect.set);
            }
        }
        actions
    }
}

/// One percept per entity sharing the agent's location, the agent included.
pub fn perceive(env: &Environment, agent: &AgentId) -> Result<Vec<Percept>, EngineError> {
    let here = env
        .entities
        .get(agent)
        .ok_or_else(|| EngineError::UnknownAgent(agent.clone()))?
        .get("location")
        .cloned();
    Ok(env
        .entities
        .iter()
        .filter(|(_, attrs)| here.is_some() && attrs.get("location") == here.as_ref())
        .map(|(id, attrs)| Percept::new(id.clone(), attrs.clone(), env.tick))
        .collect())
}

fn resolve(target: &TargetRef, actor: &AgentId, focus: Option<&EntityId>) -> Option<EntityId> {
    match target {
        TargetRef::Subject => focus.cloned(),
        TargetRef::Actor => Some(actor.clone()),
        TargetRef::Entity(id) => Some(id.clone()),
    }
}

fn instantiate(template: &ActionTemplate, actor: &AgentId, focus: Option<&EntityId>) -> Action {
    Action {
        actor: actor.clone(),
        verb: template.verb.clone(),
        target: template
            .target
            .as_ref()
            .and_then(|t| resolve(t, actor, focus)),
        args: template.args.clone(),
        effects: template
            .effects
            .iter()
            .filter_map(|e| {
                resolve(&e.on, actor, focus).map(|entity| Effect {
                    entity,
                    set: e.set.clone(),
                })
            })
            .collect(),
    }
}

fn needs_focus(rule: &MechanismRule) -> bool {
    rule.when.is_focus_relative()
        || rule.emit.as_ref().is_some_and(|a| {
            a.target == Some(TargetRef::Subject)
                || a.effects.iter().any(|e| e.on == TargetRef::Subject)
        })
}

fn push_unique(out: &mut Vec<Action>, action: Action) {
    if !out.iter().any(|a| a.same_as(&action)) {
        out.push(action);
    }
}

/// Runs every deployed mechanism, in resource id order, against working
/// memory. Within a mechanism, rules fire by descending priority (ties keep
/// declaration order); a rule that mentions the focused subject is tried
/// once per subject in the social context, in subject order. Scratch writes
/// are visible to later rules. Knowledge resources never run.
pub fn execute(
    view: &mut ResourceView<'_>,
    ltm: &LongTermMemory,
) -> Result<Vec<Action>, EngineError> {
    let actor = view.agent().clone();
    let deployed: Vec<ResourceId> = view.deployed().keys().cloned().collect();
    let mut actions = Vec::new();
    for id in deployed {
        let resource = ltm
            .resource(&id)
            .ok_or_else(|| EngineError::UnknownResource(id.clone()))?;
        let ResourceBody::Mechanism { rules, .. } = &resource.body else {
            continue;
        };
        let mut ordered: Vec<&MechanismRule> = rules.iter().collect();
        ordered.sort_by_key(|r| std::cmp::Reverse(r.priority));
        for rule in ordered {
            let foci: Vec<Option<EntityId>> = if needs_focus(rule) {
                view.read_social_context()
                    .subjects()
                    .into_iter()
                    .cloned()
                    .map(Some)
                    .collect()
            } else {
                vec![None]
            };
            for focus in foci {
                view.set_focus(focus.clone());
                let fires = rule.when.holds(&*view);
                if let Some(violation) = view.take_violation() {
                    view.set_focus(None);
                    return Err(EngineError::AccessViolation {
                        resource: id.clone(),
                        violation,
                    });
                }
                if !fires {
                    continue;
                }
                for (key, value) in &rule.set {
                    view.write_scratch(key.clone(), value.clone());
                }
                if let Some(template) = &rule.emit {
                    push_unique(&mut actions, instantiate(template, &actor, focus.as_ref()));
                }
            }
        }
    }
    view.set_focus(None);
    Ok(actions)
}

/// Undeploy-hook actions of the given removed resources.
pub fn finalize<'a>(
    actor: &AgentId,
    removed: impl IntoIterator<Item = &'a ResourceId>,
    ltm: &LongTermMemory,
) -> Vec<Action> {
    let mut out = Vec::new();
    for id in removed {
        if let Some(resource) = ltm.resource(id) {
            for template in resource.on_undeploy() {
                push_unique(&mut out, instantiate(template, actor, None));
            }
        }
    }
    out
}

type IdentityRecords = (BTreeMap<EntityId, Vec<Ascription>>, Vec<GroupRecord>);

/// Ascriptions for every subject in `basis`, the working memory the update
/// stage scored frames against, and the groups they induce.
fn identity_records(
    agent: &AgentState,
    basis: &WorkingMemory,
    params: &EngineParams,
) -> Result<IdentityRecords, EngineError> {
    let mut ascriptions = BTreeMap::new();
    for subject in basis.social_context.subjects() {
        let list = ascribe_frames(
            &agent.id,
            basis,
            agent.profile.alpha,
            subject,
            &agent.ltm,
            params,
        )?;
        ascriptions.insert(subject.clone(), list);
    }
    let groups = categorize(&ascriptions)
        .into_iter()
        .map(|group| {
            let score = identification(&agent.profile, &group, &agent.working.salient_frames);
            GroupRecord {
                key_frame: group.key_frame,
                members: group.members.into_iter().collect(),
                identification: score,
                in_group: is_in_group(score),
            }
        })
        .collect();
    Ok((ascriptions, groups))
}

/// One full cycle of `agent` at `env.tick`. Emitted actions are queued on
/// `env.pending_actions`; entity attributes are untouched until the barrier.
pub fn cycle(
    agent: &mut AgentState,
    env: &mut Environment,
    params: &EngineParams,
) -> Result<Vec<TraceEvent>, EngineError> {
    let tick = env.tick;
    let mut trace = Vec::with_capacity(5);
    let id = agent.id.clone();
    let mut emit = |payload| trace.push(TraceEvent::new(tick, id.clone(), payload));
    let ltm = agent.ltm.clone();

    let percepts = perceive(env, &agent.id)?;
    agent.sensory.write(percepts.clone());
    emit(Payload::Perceive(PerceivePayload { percepts }));

    let raw = agent.sensory.drain();
    let used = agent.working.salient_frames.clone();
    let context = interpret(&raw, &used, &ltm)?;
    let conflicts = detect_conflicts(&context)
        .into_iter()
        .map(|(a, b)| [a, b])
        .collect();
    emit(Payload::Interpret(InterpretPayload {
        frames: used.into_iter().collect(),
        context: context.iter().cloned().collect(),
        conflicts,
    }));

    let outcome = update(
        &context,
        &ltm,
        &agent.profile,
        params,
        &agent.working,
        &agent.id,
        tick,
    );
    agent.working.social_context = context;
    let basis = agent.working.clone();
    agent.working.salient_frames = outcome.salient.clone();
    agent.working.deployed = outcome.deployed.clone();
    let (ascriptions, groups) = identity_records(agent, &basis, params)?;
    emit(Payload::Update(UpdatePayload {
        epsilon: params.epsilon_salience,
        alpha: agent.profile.alpha,
        scores: outcome.scores,
        salient: outcome.salient.into_iter().collect(),
        deployed: outcome.deployed,
        events: outcome.events.clone(),
        ascriptions,
        groups,
    }));

    let reads_before = agent.sensory.read_count();
    let (actions, denied) = {
        let mut view = ResourceView::open(&mut agent.working, &ltm, &agent.id);
        let result = execute(&mut view, &ltm);
        let denied = view.denied_count();
        (result, denied)
    };
    let reads = agent.sensory.read_count() - reads_before;
    agent.resource_sensory_reads += reads;
    agent.denied_sensory_requests += denied;
    let actions = actions?;
    let finalizers = if params.policy == DeploymentPolicy::UndeployHook {
        let removed: BTreeSet<&ResourceId> = outcome
            .events
            .iter()
            .filter(|e| e.kind == DeploymentKind::Undeployed)
            .map(|e| &e.resource)
            .collect();
        finalize(&agent.id, removed, &ltm)
    } else {
        Vec::new()
    };
    emit(Payload::Execute(ExecutePayload {
        actions: actions.clone(),
        finalizers: finalizers.clone(),
        scratch: agent.working.scratch.clone(),
        sensory_reads: reads,
        denied_sensory_requests: denied,
    }));

    let queued = finalizers.len() + actions.len();
    env.pending_actions.extend(finalizers);
    env.pending_actions.extend(actions);
    emit(Payload::Act(ActPayload { queued }));

    Ok(trace)
}

/// A scenario in motion: environment, agents, and the event RNG.
#[derive(Debug, Clone)]
pub struct Simulation {
    scenario: Scenario,
    env: Environment,
    agents: BTreeMap<AgentId, AgentState>,
    rng: ChaCha8Rng,
}

impl Simulation {
    /// Validates `scenario` and sets every agent to its tick-0 state.
    pub fn new(scenario: Scenario, seed: u64) -> Result<Self, EngineError> {
        let mut scenario = scenario;
        scenario.fill_defaults();
        let errors: Vec<_> = validate(&scenario)
            .into_iter()
            .filter(|d| d.severity == Severity::Error)
            .collect();
        if !errors.is_empty() {
            return Err(EngineError::Validation(errors));
        }
        let agents = scenario
            .agents
            .iter()
            .map(|decl| {
                let state = AgentState::new(
                    decl.id.clone(),
                    decl.profile(&scenario.params),
                    scenario.long_term_memory(decl),
                );
                (decl.id.clone(), state)
            })
            .collect();
        Ok(Self {
            env: Environment::from_scenario(&scenario),
            agents,
            rng: ChaCha8Rng::seed_from_u64(seed),
            scenario,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn environment(&self) -> &Environment {
        &self.env
    }

    pub fn agents(&self) -> &BTreeMap<AgentId, AgentState> {
        &self.agents
    }

    pub fn agent_mut(&mut self, id: &AgentId) -> Option<&mut AgentState> {
        self.agents.get_mut(id)
    }

    pub fn tick(&self) -> u64 {
        self.env.tick
    }

    /// Advances one tick: scripted events, every agent's cycle in id order,
    /// then the action barrier.
    pub fn step(&mut self) -> Result<Vec<TraceEvent>, EngineError> {
        self.env.tick += 1;
        let tick = self.env.tick;
        for event in self.scenario.events.iter().filter(|e| e.tick == tick) {
            let fires = match event.probability {
                Some(p) if p < 1.0 => self.rng.random::<f64>() < p,
                _ => true,
            };
            if fires {
                self.env.set_attributes(&event.entity, &event.set);
            }
        }
        let mut trace = Vec::new();
        for agent in self.agents.values_mut() {
            trace.extend(cycle(agent, &mut self.env, &self.scenario.params)?);
        }
        self.env.apply_pending();
        Ok(trace)
    }
}

/// Runs `ticks` ticks from the initial state and returns the full trace.
pub fn run(scenario: &Scenario, ticks: u64, seed: u64) -> Result<Vec<TraceEvent>, EngineError> {
    let mut sim = Simulation::new(scenario.clone(), seed)?;
    let mut trace = Vec::new();
    for _ in 0..ticks {
        trace.extend(sim.step()?);
    }
    Ok(trace)
}
