//! Service descriptions, service groups formed by function tag, backup
//! failover inside a group and reorganization as the predicted throughput
//! changes.

mod io;

pub use io::{parse_roster, read_roster, to_events_csv, write_events_csv, EVENTS_HEADER};

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type ServiceId = u32;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("duplicate service id {0}")]
    DuplicateId(ServiceId),
    #[error("service {id}: {reason}")]
    InvalidDescriptor { id: ServiceId, reason: String },
    #[error("service {service} is not the active member of group {group}")]
    NotActive { group: usize, service: ServiceId },
    #[error("roster: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ServiceState {
    Active,
    #[default]
    Backup,
    Down,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceDescriptor {
    pub id: ServiceId,
    pub function_tag: String,
    /// Weight in the power-control game.
    pub weight: f64,
    /// QoS floor in Mbps.
    pub min_rate: f64,
    #[serde(default)]
    pub state: ServiceState,
}

impl ServiceDescriptor {
    pub fn new(id: ServiceId, function_tag: &str, weight: f64, min_rate: f64) -> Self {
        Self {
            id,
            function_tag: function_tag.to_string(),
            weight,
            min_rate,
            state: ServiceState::Backup,
        }
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        let bad = |reason: &str| {
            Err(ServiceError::InvalidDescriptor {
                id: self.id,
                reason: reason.to_string(),
            })
        };
        if !(self.weight > 0.0 && self.weight.is_finite()) {
            return bad("weight must be positive");
        }
        if !(self.min_rate >= 0.0 && self.min_rate.is_finite()) {
            return bad("min_rate must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum GroupStatus {
    Served,
    /// Every member is down.
    Unserved,
    /// Parked for lack of throughput; `r_hat` is the cap that could not carry it.
    Suspended {
        r_hat: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceGroup {
    pub id: usize,
    pub function_tag: String,
    pub members: Vec<ServiceDescriptor>,
    pub status: GroupStatus,
}

impl ServiceGroup {
    pub fn active(&self) -> Option<&ServiceDescriptor> {
        self.members
            .iter()
            .find(|m| m.state == ServiceState::Active)
    }

    pub fn member(&self, id: ServiceId) -> Option<&ServiceDescriptor> {
        self.members.iter().find(|m| m.id == id)
    }

    /// Highest-weight backup, lowest id on ties.
    fn best_backup(&self) -> Option<usize> {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, m)| m.state == ServiceState::Backup)
            .min_by(|(_, a), (_, b)| b.weight.total_cmp(&a.weight).then(a.id.cmp(&b.id)))
            .map(|(i, _)| i)
    }
}

/// Partition by exact tag equality, groups numbered by first appearance.
/// Incoming states are ignored: each group's best member starts active.
pub fn form_groups(services: &[ServiceDescriptor]) -> Result<Vec<ServiceGroup>, ServiceError> {
    let mut seen = HashSet::new();
    for s in services {
        s.validate()?;
        if !seen.insert(s.id) {
            return Err(ServiceError::DuplicateId(s.id));
        }
    }
    let mut groups: Vec<ServiceGroup> = Vec::new();
    for s in services {
        let member = ServiceDescriptor {
            state: ServiceState::Backup,
            ..s.clone()
        };
        match groups.iter_mut().find(|g| g.function_tag == s.function_tag) {
            Some(g) => g.members.push(member),
            None => groups.push(ServiceGroup {
                id: groups.len(),
                function_tag: s.function_tag.clone(),
                members: vec![member],
                status: GroupStatus::Served,
            }),
        }
    }
    for g in &mut groups {
        if let Some(i) = g.best_backup() {
            g.members[i].state = ServiceState::Active;
        }
    }
    Ok(groups)
}

/// Marks the active member down and promotes the best backup, or leaves
/// the group unserved when none remains.
pub fn failover(group: &ServiceGroup, failed_id: ServiceId) -> Result<ServiceGroup, ServiceError> {
    if group.active().map(|m| m.id) != Some(failed_id) {
        return Err(ServiceError::NotActive {
            group: group.id,
            service: failed_id,
        });
    }
    let mut g = group.clone();
    for m in &mut g.members {
        if m.id == failed_id {
            m.state = ServiceState::Down;
        }
    }
    match g.best_backup() {
        Some(i) => g.members[i].state = ServiceState::Active,
        None => g.status = GroupStatus::Unserved,
    }
    Ok(g)
}

/// Active members of served groups, in group order.
pub fn active_services(groups: &[ServiceGroup]) -> Vec<&ServiceDescriptor> {
    groups
        .iter()
        .filter(|g| g.status == GroupStatus::Served)
        .filter_map(ServiceGroup::active)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Down,
    Promoted,
    Suspended,
    Reactivated,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Down => "down",
            EventKind::Promoted => "promoted",
            EventKind::Suspended => "suspended",
            EventKind::Reactivated => "reactivated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceEvent {
    pub step: u64,
    pub kind: EventKind,
    pub service_id: ServiceId,
    pub group_id: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reorganization {
    pub groups: Vec<ServiceGroup>,
    pub events: Vec<ServiceEvent>,
}

/// Applies one round of equilibrium rates to the groups.
///
/// An active member below its floor is failed over when the best backup
/// would clear its own floor at the same rate; otherwise the whole group is
/// suspended (members back to backup, the failing one included) and
/// remembers `r_hat`. A suspended group comes back once `r_hat` exceeds the
/// cap it was suspended at. Active members without a rate are left alone.
pub fn reorganize(
    groups: &[ServiceGroup],
    r_hat: f64,
    rates: &BTreeMap<ServiceId, f64>,
    step: u64,
) -> Reorganization {
    let mut events = Vec::new();
    let mut log = |kind, service_id, group_id| {
        events.push(ServiceEvent {
            step,
            kind,
            service_id,
            group_id,
        })
    };
    let mut out = groups.to_vec();
    for g in &mut out {
        match g.status {
            GroupStatus::Unserved => {}
            GroupStatus::Suspended { r_hat: parked } => {
                if r_hat > parked {
                    if let Some(i) = g.best_backup() {
                        g.members[i].state = ServiceState::Active;
                        g.status = GroupStatus::Served;
                        log(EventKind::Reactivated, g.members[i].id, g.id);
                    }
                }
            }
            GroupStatus::Served => {
                let Some(active) = g
                    .members
                    .iter()
                    .position(|m| m.state == ServiceState::Active)
                else {
                    continue;
                };
                let Some(&rate) = rates.get(&g.members[active].id) else {
                    continue;
                };
                if rate >= g.members[active].min_rate {
                    continue;
                }
                let failed = g.members[active].id;
                match g.best_backup().filter(|&i| rate >= g.members[i].min_rate) {
                    Some(i) => {
                        g.members[active].state = ServiceState::Down;
                        g.members[i].state = ServiceState::Active;
                        log(EventKind::Down, failed, g.id);
                        log(EventKind::Promoted, g.members[i].id, g.id);
                    }
                    None => {
                        g.members[active].state = ServiceState::Backup;
                        g.status = GroupStatus::Suspended { r_hat };
                        log(EventKind::Suspended, failed, g.id);
                    }
                }
            }
        }
    }
    Reorganization {
        groups: out,
        events,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn svc(id: ServiceId, tag: &str, weight: f64) -> ServiceDescriptor {
        ServiceDescriptor::new(id, tag, weight, 1.0)
    }

    fn states(g: &ServiceGroup) -> Vec<(ServiceId, ServiceState)> {
        g.members.iter().map(|m| (m.id, m.state)).collect()
    }

    #[test]
    fn partition_by_tag() {
        let tags = ["m", "m", "c", "c", "c", "t"];
        let services: Vec<_> = tags
            .iter()
            .enumerate()
            .map(|(i, t)| svc(i as u32, t, 1.0))
            .collect();
        let groups = form_groups(&services).unwrap();
        let sizes: Vec<usize> = groups.iter().map(|g| g.members.len()).collect();
        assert_eq!(sizes, vec![2, 3, 1]);
        assert!(form_groups(&[]).unwrap().is_empty());
    }

    #[test]
    fn tie_goes_to_lowest_id() {
        let groups = form_groups(&[svc(7, "x", 0.5), svc(3, "x", 0.5)]).unwrap();
        assert_eq!(groups[0].active().unwrap().id, 3);
    }

    #[test]
    fn heaviest_member_starts_active() {
        let groups = form_groups(&[svc(1, "x", 0.2), svc(2, "x", 0.9), svc(3, "x", 0.5)]).unwrap();
        assert_eq!(groups[0].active().unwrap().id, 2);
    }

    #[test]
    fn duplicate_and_invalid_descriptors() {
        assert!(matches!(
            form_groups(&[svc(1, "a", 1.0), svc(1, "b", 1.0)]),
            Err(ServiceError::DuplicateId(1))
        ));
        assert!(form_groups(&[svc(1, "a", 0.0)]).is_err());
        assert!(form_groups(&[ServiceDescriptor::new(1, "a", 1.0, -1.0)]).is_err());
    }

    #[test]
    fn single_backup_takes_over() {
        let g = &form_groups(&[svc(1, "x", 0.9), svc(2, "x", 0.1)]).unwrap()[0];
        let g = failover(g, 1).unwrap();
        assert_eq!(
            states(&g),
            vec![(1, ServiceState::Down), (2, ServiceState::Active)]
        );
        assert_eq!(g.status, GroupStatus::Served);
    }

    #[test]
    fn singleton_failover_leaves_group_unserved() {
        let g = &form_groups(&[svc(4, "x", 1.0)]).unwrap()[0];
        let g = failover(g, 4).unwrap();
        assert_eq!(g.status, GroupStatus::Unserved);
        assert!(g.active().is_none());
    }

    #[test]
    fn heaviest_backup_promoted() {
        let g = &form_groups(&[svc(1, "x", 0.9), svc(2, "x", 0.2), svc(3, "x", 0.5)]).unwrap()[0];
        assert_eq!(failover(g, 1).unwrap().active().unwrap().id, 3);
    }

    #[test]
    fn failover_requires_the_active_member() {
        let g = &form_groups(&[svc(1, "x", 0.9), svc(2, "x", 0.2)]).unwrap()[0];
        assert!(matches!(
            failover(g, 2),
            Err(ServiceError::NotActive { .. })
        ));
        assert!(failover(g, 99).is_err());
    }

    #[test]
    fn healthy_rates_change_nothing() {
        let groups = form_groups(&[svc(1, "a", 0.9), svc(2, "a", 0.2), svc(3, "b", 0.5)]).unwrap();
        let rates = BTreeMap::from([(1, 5.0), (3, 1.0)]);
        let r = reorganize(&groups, 50.0, &rates, 0);
        assert_eq!(r.groups, groups);
        assert!(r.events.is_empty());
    }

    #[test]
    fn starved_service_fails_over() {
        let groups =
            form_groups(&[svc(1, "a", 0.9), ServiceDescriptor::new(2, "a", 0.2, 0.0)]).unwrap();
        let r = reorganize(&groups, 50.0, &BTreeMap::from([(1, 0.0)]), 3);
        assert_eq!(r.groups[0].active().unwrap().id, 2);
        assert_eq!(r.groups[0].member(1).unwrap().state, ServiceState::Down);
        let kinds: Vec<_> = r
            .events
            .iter()
            .map(|e| (e.kind, e.service_id, e.step))
            .collect();
        assert_eq!(
            kinds,
            vec![(EventKind::Down, 1, 3), (EventKind::Promoted, 2, 3)]
        );
    }

    #[test]
    fn unviable_backup_suspends_then_recovers() {
        let groups = form_groups(&[svc(1, "a", 0.9), svc(2, "a", 0.2)]).unwrap();
        let r = reorganize(&groups, 10.0, &BTreeMap::from([(1, 0.5)]), 0);
        let g = &r.groups[0];
        assert_eq!(g.status, GroupStatus::Suspended { r_hat: 10.0 });
        assert!(g.members.iter().all(|m| m.state == ServiceState::Backup));
        assert!(active_services(&r.groups).is_empty());

        let same = reorganize(&r.groups, 10.0, &BTreeMap::new(), 1);
        assert_eq!(same.groups, r.groups);
        let back = reorganize(&r.groups, 12.0, &BTreeMap::new(), 2);
        assert_eq!(back.groups[0].status, GroupStatus::Served);
        assert_eq!(back.groups[0].active().unwrap().id, 1);
        assert_eq!(back.events[0].kind, EventKind::Reactivated);
    }

    #[test]
    fn active_services_skip_parked_groups() {
        let mut groups =
            form_groups(&[svc(1, "a", 0.9), svc(2, "b", 0.2), svc(3, "c", 0.4)]).unwrap();
        groups[1].status = GroupStatus::Suspended { r_hat: 1.0 };
        groups[1].members[0].state = ServiceState::Backup;
        let ids: Vec<_> = active_services(&groups).iter().map(|s| s.id).collect();
        assert_eq!(ids, vec![1, 3]);
    }
}
