use std::path::Path;

use super::{file_error, IoError};
use crate::net::WorkflowNet;

fn label_of(t: roxmltree::Node<'_, '_>) -> Option<String> {
    // ProM marks silent transitions with a tool-specific flag.
    let invisible = t.children().any(|c| {
        c.has_tag_name("toolspecific") && c.attribute("activity") == Some("$invisible$")
    });
    if invisible {
        return None;
    }
    let text = t
        .children()
        .find(|c| c.has_tag_name("name"))
        .and_then(|n| n.children().find(|c| c.has_tag_name("text")))
        .and_then(|t| t.text())
        .map(str::trim)
        .unwrap_or("");
    (!text.is_empty()).then(|| text.to_owned())
}

/// Reads places, transitions and arcs of the first `<net>`, including those
/// nested in `<page>` elements. No validation beyond structure.
pub fn parse_pnml(text: &str) -> Result<WorkflowNet, IoError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| IoError::Pnml(e.to_string()))?;
    let net = doc
        .descendants()
        .find(|n| n.has_tag_name("net"))
        .ok_or_else(|| IoError::Pnml("no <net> element".into()))?;
    let id = |n: roxmltree::Node<'_, '_>, what: &str| {
        n.attribute("id")
            .map(str::to_owned)
            .ok_or_else(|| IoError::Pnml(format!("{what} without id")))
    };
    let mut b = WorkflowNet::builder();
    for n in net.descendants() {
        if n.has_tag_name("place") {
            b = b.place(id(n, "place")?);
        } else if n.has_tag_name("transition") {
            b = b.transition(id(n, "transition")?, label_of(n).as_deref());
        }
    }
    for n in net.descendants().filter(|n| n.has_tag_name("arc")) {
        let (Some(s), Some(t)) = (n.attribute("source"), n.attribute("target")) else {
            return Err(IoError::Pnml("arc without source or target".into()));
        };
        b = b.arc(s, t);
    }
    Ok(b.build()?)
}

/// Reads and validates a workflow net. The start activity is the single
/// visible activity enabled from the initial marking.
pub fn read_pnml(path: impl AsRef<Path>) -> Result<WorkflowNet, IoError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| file_error(path, e))?;
    let net = parse_pnml(&text)?;
    let start = net
        .infer_start_activity()
        .ok_or_else(|| IoError::Pnml("the net has no unique start activity".into()))?;
    net.validate(&start).into_result()?;
    Ok(net)
}
