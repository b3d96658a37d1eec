use std::fmt::Write as _;
use std::path::Path;

use super::{ServiceDescriptor, ServiceError, ServiceEvent};

pub const EVENTS_HEADER: &str = "time_step,event,service_id,group_id";

/// Roster is a JSON array of descriptors; `state` may be omitted.
pub fn parse_roster(text: &str) -> Result<Vec<ServiceDescriptor>, ServiceError> {
    let roster: Vec<ServiceDescriptor> = serde_json::from_str(text)?;
    for s in &roster {
        s.validate()?;
    }
    Ok(roster)
}

pub fn read_roster(path: &Path) -> Result<Vec<ServiceDescriptor>, ServiceError> {
    parse_roster(&std::fs::read_to_string(path)?)
}

pub fn to_events_csv(events: &[ServiceEvent]) -> String {
    let mut out = String::from(EVENTS_HEADER);
    out.push('\n');
    for e in events {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            e.step,
            e.kind.as_str(),
            e.service_id,
            e.group_id
        );
    }
    out
}

pub fn write_events_csv(path: &Path, events: &[ServiceEvent]) -> Result<(), ServiceError> {
    std::fs::write(path, to_events_csv(events))?;
    Ok(())
}
