use std::cmp::Reverse;
use std::collections::BTreeSet;

use crate::event::{Event, EventId};

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// One union-find pass: links every pair of events from different sources
/// whose spans share an instant. Returns the groups, each in input order.
fn overlap_groups(events: &[Event]) -> Vec<Vec<usize>> {
    let n = events.len();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (events[i].span().start(), events[i].span().end()));
    // sweep by start; `active` holds events whose end is not yet passed
    let mut active: Vec<usize> = Vec::new();
    for &i in &order {
        let start = events[i].span().start();
        active.retain(|&j| events[j].span().end() >= start);
        for &j in &active {
            if events[j].source() != events[i].source() {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        active.push(i);
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

/// Folds a group into one event. The member with the longest span wins key
/// conflicts (ties: structured source, earlier start, smaller id); a losing
/// value is kept under `<key>__<loser source>` unless that key is taken.
fn merge_group(mut members: Vec<Event>) -> Event {
    if members.len() == 1 {
        return members.pop().expect("non-empty group");
    }
    members.sort_by(|a, b| {
        let key = |e: &Event| {
            (
                Reverse(e.span().length_seconds()),
                !e.source().is_structured(),
                e.span().start(),
            )
        };
        key(a).cmp(&key(b)).then_with(|| a.id().cmp(b.id()))
    });
    let mut ids: Vec<&str> = members
        .iter()
        .flat_map(|e| e.id().as_str().split('+'))
        .collect();
    ids.sort_unstable();
    ids.dedup();
    let id = EventId::new(ids.join("+"));
    let span = members
        .iter()
        .skip(1)
        .fold(*members[0].span(), |acc, e| acc.enclose(e.span()));
    let origin: BTreeSet<EventId> = members
        .iter()
        .flat_map(|e| e.origin().iter().cloned())
        .collect();
    let mut rest = members.split_off(1);
    let winner = members.pop().expect("winner");
    let mut merged = winner.with_identity(id, span, origin);
    for loser in rest.drain(..) {
        let suffix = loser.source().name();
        for (key, value) in loser.attrs() {
            match merged.attrs().get(key) {
                None => merged.set_attr(key.clone(), value.clone()),
                Some(existing) if existing == value => {}
                Some(_) => {
                    let alt = format!("{key}__{suffix}");
                    if !merged.attrs().contains_key(&alt) {
                        merged.set_attr(alt, value.clone());
                    }
                }
            }
        }
        let misses: Vec<String> = loser.misses().iter().cloned().collect();
        for m in misses {
            if !merged.attrs().get(&m).is_some_and(|v| !v.is_null()) {
                merged.mark_miss(&m);
            }
        }
    }
    merged
}

/// Merges events of different sources whose spans overlap, transitively,
/// until no such pair remains. Output is ordered by span start, then id.
pub fn deduplicate(events: Vec<Event>) -> Vec<Event> {
    let mut current = events;
    loop {
        let groups = overlap_groups(&current);
        let changed = groups.iter().any(|g| g.len() > 1);
        let mut slots: Vec<Option<Event>> = current.into_iter().map(Some).collect();
        current = groups
            .into_iter()
            .map(|g| {
                merge_group(
                    g.into_iter()
                        .map(|i| slots[i].take().expect("each index once"))
                        .collect(),
                )
            })
            .collect();
        if !changed {
            break;
        }
    }
    current.sort_by(|a, b| {
        a.span()
            .start()
            .cmp(&b.span().start())
            .then_with(|| a.id().cmp(b.id()))
    });
    current
}
