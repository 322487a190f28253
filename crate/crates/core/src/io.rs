//! Text and binary file formats.
//!
//! - Bracket: one `game_index,winner_team_id` line per game under a
//!   `# tournament t=<n>` header; entry-set files repeat bracket blocks
//!   separated by `---` lines.
//! - Field: entry-set blocks introduced by `participant: <id>` lines.
//! - `P^team` CSV: square matrix with a team-id header row and column.
//! - Ratings CSV `team_id,rating`, payoff CSV `rank_from,rank_to,amount`,
//!   team metadata CSV `team_id,name,seed,region`.
//! - Pool cache: a small binary header (team count, size, master seed,
//!   `P^team` digest) followed by packed little-endian winner vectors.
//!
//! Game numbering in all files is 1-based and round-major (round 1 first).

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::pool_eval::{Field, PayoffRow, PayoffTable, PoolEvalError};
use crate::probability::{
    GameWinMatrix, ProbabilityError, RatingTable, RoundWinMatrix, TeamWinMatrix,
};
use crate::simulation::{OutcomePool, SimulationError};
use crate::tournament::{Bracket, EntrySet, TeamId, Tournament, TournamentError};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {0}: {1}")]
    Malformed(usize, String),
    #[error("missing `# tournament t=<n>` header")]
    MissingHeader,
    #[error("game {0} appears more than once")]
    DuplicateGame(u16),
    #[error("game {0} is missing")]
    MissingGame(u16),
    #[error("bad pool file: {0}")]
    BadPool(String),
    #[error(transparent)]
    Tournament(#[from] TournamentError),
    #[error(transparent)]
    Probability(#[from] ProbabilityError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error(transparent)]
    PoolEval(#[from] PoolEvalError),
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    hex(&h.finalize())
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

// ---------------------------------------------------------------------------
// brackets and entry sets

fn header_line(t: &Tournament) -> String {
    format!("# tournament t={}\n", t.team_count())
}

fn parse_header(line: &str) -> Option<u32> {
    line.trim()
        .strip_prefix("# tournament t=")?
        .trim()
        .parse()
        .ok()
}

fn bracket_block(b: &Bracket) -> String {
    let mut s = String::new();
    for (idx, winner) in b.winners().iter().enumerate() {
        s.push_str(&format!("{},{winner}\n", idx + 1));
    }
    s
}

fn parse_bracket_lines(t: &Tournament, lines: &[(usize, &str)]) -> Result<Bracket, FormatError> {
    let mut winners = vec![0 as TeamId; t.game_count() as usize];
    let mut seen = vec![false; t.game_count() as usize];
    for &(no, line) in lines {
        let (game, team) = line
            .split_once(',')
            .ok_or_else(|| FormatError::Malformed(no, format!("expected game,winner: {line}")))?;
        let game: u16 = game
            .trim()
            .parse()
            .map_err(|_| FormatError::Malformed(no, format!("bad game index {game}")))?;
        let team: TeamId = team
            .trim()
            .parse()
            .map_err(|_| FormatError::Malformed(no, format!("bad team id {team}")))?;
        if game < 1 || game > t.game_count() {
            return Err(FormatError::Malformed(
                no,
                format!("game {game} out of range"),
            ));
        }
        if seen[game as usize - 1] {
            return Err(FormatError::DuplicateGame(game));
        }
        seen[game as usize - 1] = true;
        winners[game as usize - 1] = team;
    }
    if let Some(idx) = seen.iter().position(|s| !s) {
        return Err(FormatError::MissingGame(idx as u16 + 1));
    }
    Ok(Bracket::from_winners(t, winners)?)
}

pub fn write_bracket(t: &Tournament, b: &Bracket) -> String {
    format!("{}{}", header_line(t), bracket_block(b))
}

pub fn read_bracket(text: &str) -> Result<(Tournament, Bracket), FormatError> {
    let (t, set) = read_entry_set(text)?;
    Ok((t, set.entries()[0].clone()))
}

pub fn write_entry_set(t: &Tournament, set: &EntrySet) -> String {
    let mut s = header_line(t);
    for (idx, b) in set.entries().iter().enumerate() {
        if idx > 0 {
            s.push_str("---\n");
        }
        s.push_str(&bracket_block(b));
    }
    s
}

pub fn read_entry_set(text: &str) -> Result<(Tournament, EntrySet), FormatError> {
    let mut tournament: Option<Tournament> = None;
    let mut blocks: Vec<Vec<(usize, &str)>> = vec![Vec::new()];
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(tc) = parse_header(line) {
            tournament = Some(Tournament::new(tc)?);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        if line == "---" {
            blocks.push(Vec::new());
            continue;
        }
        blocks
            .last_mut()
            .expect("always one block")
            .push((idx + 1, line));
    }
    let t = tournament.ok_or(FormatError::MissingHeader)?;
    let entries = blocks
        .iter()
        .filter(|b| !b.is_empty())
        .map(|lines| parse_bracket_lines(&t, lines))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((t, EntrySet::new(&t, entries)?))
}

// ---------------------------------------------------------------------------
// fields

pub fn write_field(t: &Tournament, field: &Field) -> String {
    let mut s = header_line(t);
    for (id, set) in field.participants() {
        s.push_str(&format!("participant: {id}\n"));
        for (idx, b) in set.entries().iter().enumerate() {
            if idx > 0 {
                s.push_str("---\n");
            }
            s.push_str(&bracket_block(b));
        }
    }
    s
}

type NumberedLines<'a> = Vec<(usize, &'a str)>;

pub fn read_field(text: &str) -> Result<(Tournament, Field), FormatError> {
    let mut tournament: Option<Tournament> = None;
    let mut participants: Vec<(String, Vec<NumberedLines>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(tc) = parse_header(line) {
            tournament = Some(Tournament::new(tc)?);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        if let Some(id) = line.strip_prefix("participant:") {
            participants.push((id.trim().to_string(), vec![Vec::new()]));
            continue;
        }
        let Some((_, blocks)) = participants.last_mut() else {
            return Err(FormatError::Malformed(
                no,
                "entry lines before any participant".into(),
            ));
        };
        if line == "---" {
            blocks.push(Vec::new());
        } else {
            blocks
                .last_mut()
                .expect("always one block")
                .push((no, line));
        }
    }
    let t = tournament.ok_or(FormatError::MissingHeader)?;
    let mut out = Vec::new();
    for (id, blocks) in &participants {
        let entries = blocks
            .iter()
            .filter(|b| !b.is_empty())
            .map(|lines| parse_bracket_lines(&t, lines))
            .collect::<Result<Vec<_>, _>>()?;
        out.push((id.clone(), EntrySet::new(&t, entries)?));
    }
    Ok((t, Field::new(&t, out)?))
}

// ---------------------------------------------------------------------------
// probability matrices

/// Square CSV with a `team` header row/column; values parse as decimals.
pub fn write_pteam_csv(p: &TeamWinMatrix) -> String {
    let n = p.team_count();
    let mut s = String::from("team");
    for b in 1..=n {
        s.push_str(&format!(",{b}"));
    }
    s.push('\n');
    for a in 1..=n {
        s.push_str(&a.to_string());
        for b in 1..=n {
            if a == b {
                s.push_str(",0");
            } else {
                s.push_str(&format!(",{}", p.get(a, b)));
            }
        }
        s.push('\n');
    }
    s
}

pub fn read_pteam_csv(text: &str) -> Result<TeamWinMatrix, FormatError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (no, header) = lines.next().ok_or(FormatError::MissingHeader)?;
    let ids: Vec<&str> = header.split(',').skip(1).map(str::trim).collect();
    let n = ids.len();
    if n < 4 {
        return Err(FormatError::Malformed(
            no + 1,
            "matrix header too short".into(),
        ));
    }
    // ids are the dense 1..=t in order; anything else would silently
    // reassign probabilities
    for (pos, id) in ids.iter().enumerate() {
        if id.parse::<usize>() != Ok(pos + 1) {
            return Err(FormatError::Malformed(
                no + 1,
                format!(
                    "header column {} must be team {}, got {id}",
                    pos + 2,
                    pos + 1
                ),
            ));
        }
    }
    let mut rows = Vec::with_capacity(n);
    for (idx, line) in lines {
        let no = idx + 1;
        let mut parts = line.split(',').map(str::trim);
        let row_id = parts
            .next()
            .ok_or_else(|| FormatError::Malformed(no, "missing row id".into()))?;
        if row_id.parse::<usize>() != Ok(rows.len() + 1) {
            return Err(FormatError::Malformed(
                no,
                format!("row must start with team {}, got {row_id}", rows.len() + 1),
            ));
        }
        let row: Vec<f64> = parts
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| FormatError::Malformed(no, format!("bad probability {v}")))
            })
            .collect::<Result<_, _>>()?;
        if row.len() != n {
            return Err(FormatError::Malformed(
                no,
                format!("expected {n} values, got {}", row.len()),
            ));
        }
        rows.push(row);
    }
    if rows.len() != n {
        return Err(FormatError::Malformed(
            0,
            format!("expected {n} rows, got {}", rows.len()),
        ));
    }
    Ok(TeamWinMatrix::from_rows(rows)?)
}

/// `team,<game...>` rows, probabilities at 6 decimals.
pub fn write_game_matrix_csv(t: &Tournament, pg: &GameWinMatrix) -> String {
    let mut s = String::from("team");
    for g in t.games() {
        s.push_str(&format!(",{g}"));
    }
    s.push('\n');
    for team in t.teams() {
        s.push_str(&team.to_string());
        for g in t.games() {
            s.push_str(&format!(",{:.6}", pg.get(team, g)));
        }
        s.push('\n');
    }
    s
}

pub fn write_round_matrix_csv(t: &Tournament, pr: &RoundWinMatrix) -> String {
    let mut s = String::from("team");
    for r in 1..=t.round_count() {
        s.push_str(&format!(",{r}"));
    }
    s.push('\n');
    for team in t.teams() {
        s.push_str(&team.to_string());
        for r in 1..=t.round_count() {
            s.push_str(&format!(",{:.6}", pr.get(team, r)));
        }
        s.push('\n');
    }
    s
}

/// `team_id,rating` with a header line.
pub fn write_ratings_csv(ratings: &[(TeamId, f64)]) -> String {
    let mut s = String::from("team_id,rating\n");
    for (team, r) in ratings {
        s.push_str(&format!("{team},{r}\n"));
    }
    s
}

pub fn read_ratings_csv(text: &str, team_count: u16) -> Result<RatingTable, FormatError> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("team_id") {
            continue;
        }
        let (team, rating) = line.split_once(',').ok_or_else(|| {
            FormatError::Malformed(no, format!("expected team_id,rating: {line}"))
        })?;
        let team: TeamId = team
            .trim()
            .parse()
            .map_err(|_| FormatError::Malformed(no, format!("bad team id {team}")))?;
        let rating: f64 = rating
            .trim()
            .parse()
            .map_err(|_| FormatError::Malformed(no, format!("bad rating {rating}")))?;
        pairs.push((team, rating));
    }
    Ok(RatingTable::new(team_count, &pairs)?)
}

// ---------------------------------------------------------------------------
// payoffs

pub fn write_payoff_csv(table: &PayoffTable) -> String {
    let mut s = String::from("rank_from,rank_to,amount\n");
    for row in table.rows() {
        s.push_str(&format!(
            "{},{},{}\n",
            row.rank_from, row.rank_to, row.amount
        ));
    }
    s
}

pub fn read_payoff_csv(text: &str) -> Result<PayoffTable, FormatError> {
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("rank_from") {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(FormatError::Malformed(
                no,
                format!("expected rank_from,rank_to,amount: {line}"),
            ));
        }
        let parse_u32 = |v: &str| {
            v.parse::<u32>()
                .map_err(|_| FormatError::Malformed(no, format!("bad rank {v}")))
        };
        rows.push(PayoffRow {
            rank_from: parse_u32(parts[0])?,
            rank_to: parse_u32(parts[1])?,
            amount: parts[2]
                .parse()
                .map_err(|_| FormatError::Malformed(no, format!("bad amount {}", parts[2])))?,
        });
    }
    Ok(PayoffTable::new(rows)?)
}

// ---------------------------------------------------------------------------
// team metadata

/// Sidecar names/seeds/regions for dense team ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeamMeta {
    pub team_id: TeamId,
    pub name: String,
    pub seed: u16,
    pub region: String,
}

pub fn write_team_metadata_csv(rows: &[TeamMeta]) -> String {
    let mut s = String::from("team_id,name,seed,region\n");
    for m in rows {
        s.push_str(&format!(
            "{},{},{},{}\n",
            m.team_id, m.name, m.seed, m.region
        ));
    }
    s
}

pub fn read_team_metadata_csv(text: &str) -> Result<Vec<TeamMeta>, FormatError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("team_id") {
            continue;
        }
        let parts: Vec<&str> = line.splitn(4, ',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(FormatError::Malformed(
                no,
                format!("expected team_id,name,seed,region: {line}"),
            ));
        }
        out.push(TeamMeta {
            team_id: parts[0]
                .parse()
                .map_err(|_| FormatError::Malformed(no, format!("bad team id {}", parts[0])))?,
            name: parts[1].to_string(),
            seed: parts[2]
                .parse()
                .map_err(|_| FormatError::Malformed(no, format!("bad seed {}", parts[2])))?,
            region: parts[3].to_string(),
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// pool cache

const POOL_MAGIC: &[u8; 8] = b"BRKTPOOL";
const POOL_VERSION: u32 = 1;

pub fn write_pool(t: &Tournament, pool: &OutcomePool) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + pool.len() * t.game_count() as usize * 2);
    out.extend_from_slice(POOL_MAGIC);
    out.extend_from_slice(&POOL_VERSION.to_le_bytes());
    out.extend_from_slice(&(t.team_count() as u32).to_le_bytes());
    out.extend_from_slice(&(pool.len() as u64).to_le_bytes());
    out.extend_from_slice(&pool.master_seed().to_le_bytes());
    out.extend_from_slice(&pool.pteam_digest());
    for outcome in pool.outcomes() {
        for &winner in outcome.winners() {
            out.extend_from_slice(&winner.to_le_bytes());
        }
    }
    out
}

pub fn read_pool(bytes: &[u8]) -> Result<(Tournament, OutcomePool), FormatError> {
    let fail = |msg: &str| FormatError::BadPool(msg.to_string());
    if bytes.len() < 64 || &bytes[0..8] != POOL_MAGIC {
        return Err(fail("missing magic"));
    }
    let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
    let u64_at = |off: usize| u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
    if u32_at(8) != POOL_VERSION {
        return Err(fail("unsupported version"));
    }
    let team_count = u32_at(12);
    let w = u64_at(16) as usize;
    let master_seed = u64_at(24);
    let digest: [u8; 32] = bytes[32..64].try_into().unwrap();
    let t = Tournament::new(team_count)?;
    let per = t.game_count() as usize;
    let need = 64 + w * per * 2;
    if bytes.len() != need {
        return Err(fail(&format!("expected {need} bytes, got {}", bytes.len())));
    }
    let mut outcomes = Vec::with_capacity(w);
    let mut off = 64;
    for _ in 0..w {
        let winners: Vec<TeamId> = (0..per)
            .map(|i| u16::from_le_bytes(bytes[off + 2 * i..off + 2 * i + 2].try_into().unwrap()))
            .collect();
        off += per * 2;
        outcomes.push(Bracket::from_winners(&t, winners)?);
    }
    let pool = OutcomePool::from_parts(&t, master_seed, digest, outcomes)?;
    Ok((t, pool))
}

// ---------------------------------------------------------------------------
// generic key = value config text (used by the runtime configuration)

/// Parse `key = value` lines; `#` starts a comment. Returns pairs in file
/// order, duplicates preserved.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>, FormatError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            FormatError::Malformed(idx + 1, format!("expected key = value: {line}"))
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn kv_map(pairs: &[(String, String)]) -> BTreeMap<String, String> {
    pairs.iter().cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pool_eval::Field;
    use crate::probability::TeamWinMatrix;
    use crate::simulation::sample_pool;
    use crate::testutil::{diverse_matrix, four_team_brackets, t4};

    #[test]
    fn bracket_and_entry_set_round_trip() {
        let t = t4();
        let b = four_team_brackets();
        let set = EntrySet::new(&t, vec![b[0].clone(), b[6].clone()]).unwrap();
        let text = write_entry_set(&t, &set);
        assert!(text.starts_with("# tournament t=4\n"));
        let (t2, set2) = read_entry_set(&text).unwrap();
        assert_eq!(t2, t);
        assert_eq!(set2, set);

        let single = write_bracket(&t, &b[0]);
        let (_, back) = read_bracket(&single).unwrap();
        assert_eq!(back, b[0]);
    }

    #[test]
    fn entry_set_errors_are_precise() {
        assert!(matches!(
            read_entry_set("1,1\n"),
            Err(FormatError::MissingHeader)
        ));
        let text = "# tournament t=4\n1,1\n1,2\n3,1\n";
        assert!(matches!(
            read_entry_set(text),
            Err(FormatError::DuplicateGame(1))
        ));
        let text = "# tournament t=4\n1,1\n3,1\n";
        assert!(matches!(
            read_entry_set(text),
            Err(FormatError::MissingGame(2))
        ));
        let text = "# tournament t=4\n1,1\n2,3\n3,4\n";
        assert!(matches!(
            read_entry_set(text),
            Err(FormatError::Tournament(TournamentError::Infeasible(_)))
        ));
    }

    #[test]
    fn field_round_trip() {
        let t = t4();
        let b = four_team_brackets();
        let field = Field::new(
            &t,
            vec![
                (
                    "alice".to_string(),
                    EntrySet::new(&t, vec![b[0].clone(), b[1].clone()]).unwrap(),
                ),
                (
                    "bob".to_string(),
                    EntrySet::new(&t, vec![b[5].clone()]).unwrap(),
                ),
            ],
        )
        .unwrap();
        let text = write_field(&t, &field);
        let (_, back) = read_field(&text).unwrap();
        assert_eq!(back.participants().len(), 2);
        assert_eq!(back.participants()[0].0, "alice");
        assert_eq!(back.participants()[0].1.len(), 2);
        assert_eq!(back.participants()[1].1.entries()[0], b[5]);
    }

    #[test]
    fn pteam_csv_round_trip() {
        let p = diverse_matrix();
        let text = write_pteam_csv(&p);
        let back = read_pteam_csv(&text).unwrap();
        assert_eq!(back.team_count(), 4);
        for a in 1..=4 {
            for b in 1..=4 {
                assert_eq!(back.get(a, b), p.get(a, b));
            }
        }
    }

    #[test]
    fn pteam_csv_rejects_shuffled_ids() {
        let text = write_pteam_csv(&diverse_matrix());
        let shuffled = text.replace("\n2,", "\n9,");
        assert!(matches!(
            read_pteam_csv(&shuffled),
            Err(FormatError::Malformed(_, _))
        ));
    }

    #[test]
    fn ratings_and_payoffs_parse() {
        let rt = read_ratings_csv("team_id,rating\n1,95.5\n2,90\n3,85\n4,80.25\n", 4).unwrap();
        assert_eq!(rt.get(4), 80.25);
        assert!(read_ratings_csv("team_id,rating\n1,95.5\n", 4).is_err());

        let table =
            read_payoff_csv("rank_from,rank_to,amount\n1,1,1000000\n2,2,50000\n201,1000,150\n")
                .unwrap();
        assert_eq!(table.amount_for_rank(1), 1_000_000.0);
        assert_eq!(table.amount_for_rank(300), 150.0);
        assert_eq!(table.amount_for_rank(1500), 0.0);
        let text = write_payoff_csv(&table);
        assert_eq!(read_payoff_csv(&text).unwrap(), table);
    }

    #[test]
    fn team_metadata_round_trip() {
        let rows = vec![
            TeamMeta {
                team_id: 1,
                name: "First U".into(),
                seed: 1,
                region: "East".into(),
            },
            TeamMeta {
                team_id: 2,
                name: "Second State".into(),
                seed: 16,
                region: "East".into(),
            },
        ];
        let text = write_team_metadata_csv(&rows);
        assert_eq!(read_team_metadata_csv(&text).unwrap(), rows);
    }

    #[test]
    fn pool_cache_round_trip_preserves_provenance() {
        let t = Tournament::new(8).unwrap();
        let p = TeamWinMatrix::random(8, 3);
        let pool = sample_pool(&t, &p, 17, 99).unwrap();
        let bytes = write_pool(&t, &pool);
        let (t2, back) = read_pool(&bytes).unwrap();
        assert_eq!(t2, t);
        assert_eq!(back, pool);
        assert_eq!(back.master_seed(), 99);
        assert_eq!(back.pteam_digest(), p.digest());

        let mut corrupt = bytes.clone();
        corrupt.truncate(bytes.len() - 1);
        assert!(read_pool(&corrupt).is_err());
    }

    #[test]
    fn kv_parsing() {
        let pairs = parse_kv("a = 1\n# comment\nb = two words # trailing\n").unwrap();
        assert_eq!(pairs[0], ("a".into(), "1".into()));
        assert_eq!(pairs[1], ("b".into(), "two words".into()));
        assert!(parse_kv("nonsense line\n").is_err());
    }
}
