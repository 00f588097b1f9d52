//! JSON import and export of systems.
//!
//! The file format is name-based and diff-friendly: processes, channels,
//! states, messages and stack symbols are referenced by their identifiers,
//! and each transition carries a tagged action object. See the repository
//! `README.md` for a worked example.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    Action, Channel, ChannelId, MessageId, ProcessId, PushdownProcess, Rqcp, StateId, SymbolId,
    TypedTopology,
};

/// Top-level document: the system plus an optional target control vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemFile {
    pub processes: Vec<String>,
    pub channels: Vec<ChannelEntry>,
    pub messages: Vec<String>,
    /// Keyed by process identifier.
    pub pushdowns: BTreeMap<String, PushdownEntry>,
    /// Optional target control state per process.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelEntry {
    pub id: String,
    pub src: String,
    pub dst: String,
    /// Subset of `["src", "dst"]`: which endpoints are restricted.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub restricted: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PushdownEntry {
    pub states: Vec<String>,
    pub init: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stack_alphabet: Vec<String>,
    /// Actions that may only fire with an empty stack.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eps_actions: Vec<ActionEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transitions: Vec<TransitionEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionEntry {
    pub from: String,
    pub to: String,
    pub action: ActionEntry,
}

/// A tagged action: `kind` is one of `send`, `recv`, `push`, `pop`,
/// `local`; `channel`/`msg` accompany communications, `symbol` stack
/// actions, `label` local actions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionEntry {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub msg: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u32>,
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("duplicate process identifier `{0}`")]
    DuplicateProcess(String),
    #[error("channel `{channel}` references unknown process `{process}`")]
    UnknownEndpoint { channel: String, process: String },
    #[error("channel `{channel}` has a restriction entry `{entry}`; expected \"src\" or \"dst\"")]
    BadRestriction { channel: String, entry: String },
    #[error("pushdown entry for unknown process `{0}`")]
    UnknownPushdown(String),
    #[error("process `{0}` has no pushdown entry")]
    MissingPushdown(String),
    #[error("process `{process}` references unknown state `{state}`")]
    UnknownState { process: String, state: String },
    #[error("process `{process}` references unknown stack symbol `{symbol}`")]
    UnknownSymbol { process: String, symbol: String },
    #[error("process `{process}` references unknown channel `{channel}`")]
    UnknownChannel { process: String, channel: String },
    #[error("process `{process}` references unknown message `{msg}`")]
    UnknownMessage { process: String, msg: String },
    #[error("process `{process}` has an action of unknown kind `{kind}`")]
    BadActionKind { process: String, kind: String },
    #[error("process `{process}` has a `{kind}` action missing its `{field}` field")]
    MissingField { process: String, kind: String, field: String },
    #[error("target references unknown process `{0}`")]
    TargetUnknownProcess(String),
}

fn index_of(names: &[String], name: &str) -> Option<usize> {
    names.iter().position(|n| n == name)
}

fn action_from_entry(
    entry: &ActionEntry,
    process: &str,
    channel_names: &[String],
    messages: &[String],
    symbols: &[String],
) -> Result<Action, FormatError> {
    let need = |field: &str, value: &Option<String>| -> Result<String, FormatError> {
        value.clone().ok_or_else(|| FormatError::MissingField {
            process: process.to_string(),
            kind: entry.kind.clone(),
            field: field.to_string(),
        })
    };
    let channel_id = |name: &str| -> Result<ChannelId, FormatError> {
        index_of(channel_names, name).map(ChannelId).ok_or_else(|| FormatError::UnknownChannel {
            process: process.to_string(),
            channel: name.to_string(),
        })
    };
    let message_id = |name: &str| -> Result<MessageId, FormatError> {
        index_of(messages, name).map(MessageId).ok_or_else(|| FormatError::UnknownMessage {
            process: process.to_string(),
            msg: name.to_string(),
        })
    };
    let symbol_id = |name: &str| -> Result<SymbolId, FormatError> {
        index_of(symbols, name).map(SymbolId).ok_or_else(|| FormatError::UnknownSymbol {
            process: process.to_string(),
            symbol: name.to_string(),
        })
    };
    match entry.kind.as_str() {
        "send" => Ok(Action::Send {
            channel: channel_id(&need("channel", &entry.channel)?)?,
            message: message_id(&need("msg", &entry.msg)?)?,
        }),
        "recv" => Ok(Action::Recv {
            channel: channel_id(&need("channel", &entry.channel)?)?,
            message: message_id(&need("msg", &entry.msg)?)?,
        }),
        "push" => Ok(Action::Push(symbol_id(&need("symbol", &entry.symbol)?)?)),
        "pop" => Ok(Action::Pop(symbol_id(&need("symbol", &entry.symbol)?)?)),
        "local" => Ok(Action::Local(entry.label.ok_or_else(|| FormatError::MissingField {
            process: process.to_string(),
            kind: "local".to_string(),
            field: "label".to_string(),
        })?)),
        other => Err(FormatError::BadActionKind {
            process: process.to_string(),
            kind: other.to_string(),
        }),
    }
}

fn action_to_entry(
    action: &Action,
    channel_names: &[String],
    messages: &[String],
    symbols: &[String],
) -> ActionEntry {
    let mut entry = ActionEntry {
        kind: String::new(),
        channel: None,
        msg: None,
        symbol: None,
        label: None,
    };
    match action {
        Action::Send { channel, message } | Action::Recv { channel, message } => {
            entry.kind =
                if matches!(action, Action::Send { .. }) { "send" } else { "recv" }.to_string();
            entry.channel = Some(channel_names[channel.0].clone());
            entry.msg = Some(messages[message.0].clone());
        }
        Action::Push(s) | Action::Pop(s) => {
            entry.kind = if matches!(action, Action::Push(_)) { "push" } else { "pop" }.to_string();
            entry.symbol = Some(symbols[s.0].clone());
        }
        Action::Local(l) => {
            entry.kind = "local".to_string();
            entry.label = Some(*l);
        }
    }
    entry
}

/// Resolves a parsed document into a system and the optional target vector.
/// Name resolution only; semantic validation is left to
/// [`crate::model::validate_system`].
pub fn system_from_file(file: &SystemFile) -> Result<(Rqcp, Option<Vec<StateId>>), FormatError> {
    for (i, p) in file.processes.iter().enumerate() {
        if file.processes[..i].contains(p) {
            return Err(FormatError::DuplicateProcess(p.clone()));
        }
    }
    let process_id = |name: &str| index_of(&file.processes, name).map(ProcessId);

    let mut channels = Vec::with_capacity(file.channels.len());
    let mut restricted = std::collections::BTreeSet::new();
    for (i, ch) in file.channels.iter().enumerate() {
        let src = process_id(&ch.src).ok_or_else(|| FormatError::UnknownEndpoint {
            channel: ch.id.clone(),
            process: ch.src.clone(),
        })?;
        let dst = process_id(&ch.dst).ok_or_else(|| FormatError::UnknownEndpoint {
            channel: ch.id.clone(),
            process: ch.dst.clone(),
        })?;
        for entry in &ch.restricted {
            match entry.as_str() {
                "src" => {
                    restricted.insert((src, ChannelId(i)));
                }
                "dst" => {
                    restricted.insert((dst, ChannelId(i)));
                }
                other => {
                    return Err(FormatError::BadRestriction {
                        channel: ch.id.clone(),
                        entry: other.to_string(),
                    });
                }
            }
        }
        channels.push(Channel { name: ch.id.clone(), src, dst });
    }
    let channel_names: Vec<String> = channels.iter().map(|c| c.name.clone()).collect();

    for name in file.pushdowns.keys() {
        if process_id(name).is_none() {
            return Err(FormatError::UnknownPushdown(name.clone()));
        }
    }
    let mut pushdowns = Vec::with_capacity(file.processes.len());
    for pname in &file.processes {
        let entry = file
            .pushdowns
            .get(pname)
            .ok_or_else(|| FormatError::MissingPushdown(pname.clone()))?;
        let state_id = |name: &str| -> Result<StateId, FormatError> {
            index_of(&entry.states, name).map(StateId).ok_or_else(|| FormatError::UnknownState {
                process: pname.clone(),
                state: name.to_string(),
            })
        };
        let mut transitions = Vec::with_capacity(entry.transitions.len());
        for t in &entry.transitions {
            transitions.push((
                state_id(&t.from)?,
                action_from_entry(
                    &t.action,
                    pname,
                    &channel_names,
                    &file.messages,
                    &entry.stack_alphabet,
                )?,
                state_id(&t.to)?,
            ));
        }
        let mut eps_actions = std::collections::BTreeSet::new();
        for a in &entry.eps_actions {
            eps_actions.insert(action_from_entry(
                a,
                pname,
                &channel_names,
                &file.messages,
                &entry.stack_alphabet,
            )?);
        }
        pushdowns.push(PushdownProcess {
            states: entry.states.clone(),
            init: state_id(&entry.init)?,
            stack_alphabet: entry.stack_alphabet.clone(),
            transitions,
            eps_actions,
        });
    }

    let sys = Rqcp {
        topology: TypedTopology {
            processes: file.processes.clone(),
            channels,
            restricted,
        },
        messages: file.messages.clone(),
        pushdowns,
    };

    let target = match &file.target {
        None => None,
        Some(map) => {
            let mut vector = Vec::with_capacity(sys.process_count());
            for (p, pname) in file.processes.iter().enumerate() {
                let state = map
                    .get(pname)
                    .ok_or_else(|| FormatError::TargetUnknownProcess(pname.clone()))?;
                let z = index_of(&sys.pushdowns[p].states, state).map(StateId).ok_or_else(
                    || FormatError::UnknownState {
                        process: pname.clone(),
                        state: state.clone(),
                    },
                )?;
                vector.push(z);
            }
            for key in map.keys() {
                if process_id(key).is_none() {
                    return Err(FormatError::TargetUnknownProcess(key.clone()));
                }
            }
            Some(vector)
        }
    };
    Ok((sys, target))
}

/// Renders a system (and optional target vector) into the document form.
pub fn system_to_file(sys: &Rqcp, target: Option<&[StateId]>) -> SystemFile {
    let channel_names: Vec<String> =
        sys.topology.channels.iter().map(|c| c.name.clone()).collect();
    let channels = sys
        .topology
        .channels
        .iter()
        .enumerate()
        .map(|(i, ch)| {
            let mut restricted = Vec::new();
            if sys.topology.is_restricted(ch.src, ChannelId(i)) {
                restricted.push("src".to_string());
            }
            if sys.topology.is_restricted(ch.dst, ChannelId(i)) {
                restricted.push("dst".to_string());
            }
            ChannelEntry {
                id: ch.name.clone(),
                src: sys.topology.processes[ch.src.0].clone(),
                dst: sys.topology.processes[ch.dst.0].clone(),
                restricted,
            }
        })
        .collect();
    let mut pushdowns = BTreeMap::new();
    for (p, pd) in sys.pushdowns.iter().enumerate() {
        pushdowns.insert(
            sys.topology.processes[p].clone(),
            PushdownEntry {
                states: pd.states.clone(),
                init: pd.states[pd.init.0].clone(),
                stack_alphabet: pd.stack_alphabet.clone(),
                eps_actions: pd
                    .eps_actions
                    .iter()
                    .map(|a| action_to_entry(a, &channel_names, &sys.messages, &pd.stack_alphabet))
                    .collect(),
                transitions: pd
                    .transitions
                    .iter()
                    .map(|(from, a, to)| TransitionEntry {
                        from: pd.states[from.0].clone(),
                        to: pd.states[to.0].clone(),
                        action: action_to_entry(
                            a,
                            &channel_names,
                            &sys.messages,
                            &pd.stack_alphabet,
                        ),
                    })
                    .collect(),
            },
        );
    }
    let target = target.map(|vector| {
        vector
            .iter()
            .enumerate()
            .map(|(p, z)| {
                (sys.topology.processes[p].clone(), sys.pushdowns[p].states[z.0].clone())
            })
            .collect()
    });
    SystemFile {
        processes: sys.topology.processes.clone(),
        channels,
        messages: sys.messages.clone(),
        pushdowns,
        target,
    }
}

/// Parses a system document from a JSON string.
pub fn parse_system_str(text: &str) -> Result<(Rqcp, Option<Vec<StateId>>), FormatError> {
    let file: SystemFile = serde_json::from_str(text)?;
    system_from_file(&file)
}

/// Parses a system document from a file on disk.
pub fn parse_system_path(path: &Path) -> Result<(Rqcp, Option<Vec<StateId>>), FormatError> {
    let text = std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_system_str(&text)
}

/// Pretty-prints a system document.
pub fn serialize_system(sys: &Rqcp, target: Option<&[StateId]>) -> String {
    serde_json::to_string_pretty(&system_to_file(sys, target)).expect("documents serialize")
}
