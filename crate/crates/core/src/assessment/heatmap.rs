use serde::{Deserialize, Serialize};

use crate::game::SessionState;
use crate::ids::SessionId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeatmapRow {
    pub session_id: SessionId,
    /// Votes for rounds 1 to 4; `None` where the round was never cast.
    pub cells: [Option<u8>; 4],
}

/// Players by rounds matrix of votes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VotingHeatmap {
    pub rows: Vec<HeatmapRow>,
}

impl VotingHeatmap {
    pub fn dimensions(&self) -> (usize, usize) {
        (self.rows.len(), 4)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["session_id", "round_1", "round_2", "round_3", "round_4"])
            .expect("in-memory write");
        for row in &self.rows {
            let mut rec = vec![row.session_id.to_string()];
            rec.extend(row.cells.iter().map(|c| c.map(|v| v.to_string()).unwrap_or_default()));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is UTF-8")
    }
}

/// One row per session, ordered by creation time then id.
pub fn voting_heatmap<'a>(sessions: impl IntoIterator<Item = &'a SessionState>) -> VotingHeatmap {
    let mut sessions: Vec<&SessionState> = sessions.into_iter().collect();
    sessions.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.session_id.cmp(&b.session_id)));
    let rows = sessions
        .into_iter()
        .map(|s| {
            let mut cells = [None; 4];
            for v in &s.votes {
                if (1..=4).contains(&v.round) {
                    cells[usize::from(v.round - 1)] = Some(v.votes);
                }
            }
            HeatmapRow { session_id: s.session_id.clone(), cells }
        })
        .collect();
    VotingHeatmap { rows }
}

#[cfg(test)]
mod tests {
    use chrono::Utc;

    use super::*;
    use crate::assessment::record_vote;
    use crate::game::{new_session, Tx};
    use crate::scenario::bundled_ecoecho;

    fn session(id: &str, votes: &[i64]) -> SessionState {
        let (mut state, _) = new_session(&bundled_ecoecho(), SessionId::from(id), Utc::now());
        let mut tx = Tx::begin(&state, Utc::now());
        for (i, v) in votes.iter().enumerate() {
            record_vote(&mut tx, i as u8 + 1, *v).unwrap();
            if i < votes.len() - 1 {
                while tx.state().pending_vote().is_none() {
                    crate::game::advance_stage(&mut tx).unwrap();
                }
            }
        }
        tx.commit(&mut state);
        state
    }

    #[test]
    fn partial_session_has_absent_cells() {
        let h = voting_heatmap([&session("a", &[4, 0])]);
        assert_eq!(h.dimensions(), (1, 4));
        assert_eq!(h.rows[0].cells, [Some(4), Some(0), None, None]);
        assert_eq!(h.to_csv(), "session_id,round_1,round_2,round_3,round_4\na,4,0,,\n");
    }

    #[test]
    fn empty_input() {
        let h = voting_heatmap(std::iter::empty());
        assert_eq!(h.dimensions(), (0, 4));
        assert_eq!(h.to_csv().lines().count(), 1);
    }
}
