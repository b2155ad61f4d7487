//! Replicated modular counting on a tower of levels (`robust_mod`,
//! `robust_min_mod`).
//!
//! A state is `(level, knowledge, u)` where `u ∈ Z_m^c`, `c = m²`. The agent
//! at level `i ≤ c` is the authority on replica `i`. Two agents on the same
//! non-top level run MoveUp; every other pair runs Exchange.

use num_bigint::BigUint;
use serde_json::json;

use super::{require, ZooError, MAX_STATES};
use crate::model::{Output, Protocol, RawProtocol, StateInfo};

/// A vector of residues modulo `m`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModVector {
    entries: Vec<u32>,
    modulus: u32,
}

impl ModVector {
    pub fn new(entries: Vec<u32>, modulus: u32) -> Result<Self, ZooError> {
        require(modulus >= 1, || "modulus must be positive".into())?;
        if let Some(bad) = entries.iter().find(|&&e| e >= modulus) {
            return Err(ZooError::InvalidParameter(format!(
                "entry {bad} is not a residue mod {modulus}"
            )));
        }
        Ok(ModVector { entries, modulus })
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Componentwise agreement-or-zero: `u_j` where `u_j = v_j`, else `0`.
pub fn reconcile(u: &ModVector, v: &ModVector) -> Result<ModVector, ZooError> {
    if u.len() != v.len() || u.modulus != v.modulus {
        return Err(ZooError::LengthMismatch);
    }
    Ok(ModVector {
        entries: reconcile_slices(&u.entries, &v.entries),
        modulus: u.modulus,
    })
}

fn reconcile_slices(u: &[u32], v: &[u32]) -> Vec<u32> {
    u.iter()
        .zip(v)
        .map(|(&a, &b)| if a == b { a } else { 0 })
        .collect()
}

/// Most frequent residue; ties go to the smallest.
pub fn plurality(values: &ModVector) -> Result<u32, ZooError> {
    if values.is_empty() {
        return Err(ZooError::EmptyVector);
    }
    Ok(plurality_slice(&values.entries, values.modulus))
}

fn plurality_slice(values: &[u32], m: u32) -> u32 {
    let mut counts = vec![0usize; m as usize];
    for &v in values {
        counts[v as usize] += 1;
    }
    let mut best = 0;
    for r in 1..counts.len() {
        if counts[r] > counts[best] {
            best = r;
        }
    }
    best as u32
}

/// Plurality of the output vector `(u + (0, 1, …, c−1)) mod m`.
fn output_plurality(u: &[u32], m: u32) -> u32 {
    let shifted: Vec<u32> = u
        .iter()
        .enumerate()
        .map(|(j, &x)| ((x as u64 + j as u64) % m as u64) as u32)
        .collect();
    plurality_slice(&shifted, m)
}

/// One state of a tower-mod protocol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModState {
    pub level: usize,
    pub knowledge: usize,
    pub vector: Vec<u32>,
}

/// Index arithmetic and the transition function for a tower of `height`
/// levels with `m²` replicas.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TowerModLayout {
    pub height: usize,
    pub modulus: u32,
    pub replicas: usize,
}

impl TowerModLayout {
    pub fn new(height: usize, modulus: u32) -> Self {
        TowerModLayout {
            height,
            modulus,
            replicas: (modulus * modulus) as usize,
        }
    }

    fn vectors(&self) -> usize {
        (self.modulus as usize).pow(self.replicas as u32)
    }

    pub fn num_states(&self) -> usize {
        self.height * self.height * self.vectors()
    }

    pub fn encode(&self, s: &ModState) -> usize {
        let code = s
            .vector
            .iter()
            .rev()
            .fold(0usize, |acc, &x| acc * self.modulus as usize + x as usize);
        ((s.level - 1) * self.height + (s.knowledge - 1)) * self.vectors() + code
    }

    pub fn decode(&self, idx: usize) -> ModState {
        let vectors = self.vectors();
        let mut code = idx % vectors;
        let rest = idx / vectors;
        let mut vector = Vec::with_capacity(self.replicas);
        for _ in 0..self.replicas {
            vector.push((code % self.modulus as usize) as u32);
            code /= self.modulus as usize;
        }
        ModState {
            level: rest / self.height + 1,
            knowledge: rest % self.height + 1,
            vector,
        }
    }

    /// δ on a pair of states. Symmetric in its arguments up to order of the
    /// result.
    pub fn interact(&self, a: &ModState, b: &ModState) -> (ModState, ModState) {
        let m = self.modulus;
        let c = self.replicas;
        let mut w = reconcile_slices(&a.vector, &b.vector);
        if a.level == b.level && a.level < self.height {
            // MoveUp
            let i = a.level;
            if i <= c {
                w[i - 1] = (a.vector[i - 1] + b.vector[i - 1]) % m;
            }
            if i < c {
                w[i] = 1;
            }
            let t = a.knowledge.max(b.knowledge).max(i + 1);
            (
                ModState {
                    level: i,
                    knowledge: t,
                    vector: w.clone(),
                },
                ModState {
                    level: i + 1,
                    knowledge: t,
                    vector: w,
                },
            )
        } else {
            // Exchange
            if a.level <= c {
                w[a.level - 1] = a.vector[a.level - 1];
            }
            if b.level <= c {
                w[b.level - 1] = b.vector[b.level - 1];
            }
            let t = a.knowledge.max(b.knowledge);
            (
                ModState {
                    level: a.level,
                    knowledge: t,
                    vector: w.clone(),
                },
                ModState {
                    level: b.level,
                    knowledge: t,
                    vector: w,
                },
            )
        }
    }

    fn state_id(s: &ModState) -> String {
        let v: Vec<String> = s.vector.iter().map(u32::to_string).collect();
        format!("({},{},[{}])", s.level, s.knowledge, v.join(","))
    }

    fn build(
        &self,
        name: String,
        output: impl Fn(&ModState) -> Output,
    ) -> Result<Protocol, ZooError> {
        let count = tower_mod_state_count(self.height as u64, self.modulus as u64);
        if count > BigUint::from(MAX_STATES) {
            return Err(ZooError::TooLarge {
                states: count.to_string(),
                limit: MAX_STATES,
            });
        }
        let n = self.num_states();
        let decoded: Vec<ModState> = (0..n).map(|i| self.decode(i)).collect();
        let states = decoded
            .iter()
            .map(|s| {
                StateInfo::new(Self::state_id(s), output(s)).with_meta(json!({
                    "level": s.level,
                    "knowledge": s.knowledge,
                    "vector": s.vector,
                    "modulus": self.modulus,
                    "replicas": self.replicas,
                }))
            })
            .collect();
        let mut transitions = Vec::new();
        for a in 0..n {
            for b in a..n {
                let (x, y) = self.interact(&decoded[a], &decoded[b]);
                let mut post = [self.encode(&x), self.encode(&y)];
                post.sort();
                if post != [a, b] {
                    transitions.push(([a, b], post));
                }
            }
        }
        let mut init = vec![0; self.replicas];
        init[0] = 1;
        let initial = self.encode(&ModState {
            level: 1,
            knowledge: 1,
            vector: init,
        });
        Ok(Protocol::from_raw(RawProtocol {
            name,
            output_alphabet: None,
            states,
            initial: vec![("x".into(), initial)],
            transitions,
        })?)
    }
}

/// `height² · m^(m²)`.
pub fn tower_mod_state_count(height: u64, m: u64) -> BigUint {
    BigUint::from(height) * BigUint::from(height) * BigUint::from(m).pow((m * m) as u32)
}

/// `n mod m` with `c = m²` replicas on a tower of height `c + 1`.
pub fn robust_mod(m: u64) -> Result<Protocol, ZooError> {
    require(m >= 2, || format!("robust_mod needs m >= 2, got {m}"))?;
    require(m <= 16, || format!("robust_mod m = {m} too large"))?;
    let layout = TowerModLayout::new((m * m + 1) as usize, m as u32);
    let c = layout.replicas;
    layout.build(format!("robust_mod({m})"), |s| {
        let r = if s.knowledge <= c {
            (s.knowledge as u64) % m
        } else {
            output_plurality(&s.vector, m as u32) as u64
        };
        Output::Int(r)
    })
}

/// `(min(n, k), n mod m)` on a tower of height `T = max(c + 1, k + m)`.
pub fn robust_min_mod(k: u64, m: u64) -> Result<Protocol, ZooError> {
    require(k >= 1, || format!("robust_min_mod needs k >= 1, got {k}"))?;
    require(m >= 2, || format!("robust_min_mod needs m >= 2, got {m}"))?;
    require(m <= 16 && k <= MAX_STATES, || {
        format!("robust_min_mod k = {k}, m = {m} too large")
    })?;
    let c = m * m;
    let height = (c + 1).max(k + m);
    let layout = TowerModLayout::new(height as usize, m as u32);
    layout.build(format!("robust_min_mod({k},{m})"), |s| {
        let t = s.knowledge as u64;
        let r = if t < height {
            t % m
        } else {
            output_plurality(&s.vector, m as u32) as u64
        };
        Output::pair(t.min(k), r)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Config;

    fn mv(e: &[u32], m: u32) -> ModVector {
        ModVector::new(e.to_vec(), m).unwrap()
    }

    #[test]
    fn reconcile_examples() {
        assert_eq!(
            reconcile(&mv(&[1, 2, 0, 1], 3), &mv(&[1, 0, 0, 1], 3)).unwrap(),
            mv(&[1, 0, 0, 1], 3)
        );
        let u = mv(&[1, 2, 2], 3);
        assert_eq!(reconcile(&u, &u).unwrap(), u);
        assert_eq!(
            reconcile(&mv(&[1, 1], 2), &mv(&[0, 0], 2)).unwrap(),
            mv(&[0, 0], 2)
        );
        assert_eq!(
            reconcile(&mv(&[1], 2), &mv(&[1, 0], 2)),
            Err(ZooError::LengthMismatch)
        );
    }

    #[test]
    fn plurality_examples() {
        assert_eq!(plurality(&mv(&[1, 1, 1, 0], 2)).unwrap(), 1);
        assert_eq!(plurality(&mv(&[0, 1, 0, 1], 2)).unwrap(), 0);
        assert_eq!(plurality(&mv(&[2, 2, 0, 1], 3)).unwrap(), 2);
        assert_eq!(plurality(&mv(&[], 3)), Err(ZooError::EmptyVector));
    }

    #[test]
    fn robust_mod_size() {
        let p = robust_mod(2).unwrap();
        assert_eq!(p.num_states(), 400);
        assert_eq!(p.id(p.initial()["x"]).as_str(), "(1,1,[1,0,0,0])");
    }

    fn pair(p: &crate::model::Protocol, a: &str, b: &str) -> [String; 2] {
        let [x, y] = p.delta(p.state(a).unwrap(), p.state(b).unwrap());
        [p.id(x).to_string(), p.id(y).to_string()]
    }

    #[test]
    fn move_up_and_exchange() {
        let p = robust_mod(2).unwrap();
        assert_eq!(
            pair(&p, "(1,1,[1,0,0,0])", "(1,1,[1,0,0,0])"),
            ["(1,2,[0,1,0,0])", "(2,2,[0,1,0,0])"]
        );
        assert_eq!(
            pair(&p, "(1,2,[1,0,0,0])", "(2,2,[0,1,0,0])"),
            ["(1,2,[1,1,0,0])", "(2,2,[1,1,0,0])"]
        );
        // MoveUp at level c keeps the sum and has no next replica to seed.
        assert_eq!(
            pair(&p, "(4,4,[0,0,0,1])", "(4,4,[0,0,0,1])"),
            ["(4,5,[0,0,0,0])", "(5,5,[0,0,0,0])"]
        );
        // Two agents at the top only reconcile.
        assert_eq!(
            pair(&p, "(5,5,[1,1,0,0])", "(5,5,[1,0,0,0])"),
            ["(5,5,[1,0,0,0])", "(5,5,[1,0,0,0])"]
        );
    }

    #[test]
    fn move_up_conserves_level_counter() {
        let layout = TowerModLayout::new(5, 2);
        for a in 0..layout.num_states() {
            let sa = layout.decode(a);
            assert_eq!(layout.encode(&sa), a);
            if sa.level > 4 {
                continue;
            }
            for b in (0..layout.num_states()).step_by(7) {
                let sb = layout.decode(b);
                if sb.level != sa.level {
                    continue;
                }
                let (stay, up) = layout.interact(&sa, &sb);
                let i = sa.level - 1;
                assert_eq!(stay.vector[i], (sa.vector[i] + sb.vector[i]) % 2);
                assert_eq!(up.level, sa.level + 1);
            }
        }
    }

    #[test]
    fn outputs() {
        let p = robust_mod(2).unwrap();
        // t ≤ c: knowledge mod m
        assert_eq!(
            p.output(p.state("(1,3,[0,0,0,0])").unwrap()),
            &Output::Int(1)
        );
        // t = c+1: plurality of (u + (0,1,2,3)) mod 2 = (1,0,0,1) → tie → 0
        assert_eq!(
            p.output(p.state("(1,5,[1,1,0,0])").unwrap()),
            &Output::Int(0)
        );
        // (1,0,1,0)+(0,1,2,3) = (1,1,1,1) mod 2 → 1
        assert_eq!(
            p.output(p.state("(5,5,[1,0,1,0])").unwrap()),
            &Output::Int(1)
        );

        let q = robust_min_mod(2, 2).unwrap();
        assert_eq!(q.num_states(), 400);
        assert_eq!(
            q.output(q.state("(3,3,[0,0,0,0])").unwrap()),
            &Output::pair(2, 1)
        );
        assert_eq!(
            q.output(q.state("(1,1,[1,0,0,0])").unwrap()),
            &Output::pair(1, 1)
        );
        let c = Config::uniform(q.initial()["x"], 2);
        assert_eq!(q.successors(&c).len(), 1);
    }

    #[test]
    fn min_mod_height() {
        // T = max(c+1, k+m); k = 5, m = 2 gives T = 7 > c+1
        let q = robust_min_mod(5, 2).unwrap();
        assert_eq!(q.num_states(), 7 * 7 * 16);
        assert!(q.state("(7,7,[0,0,0,0])").is_ok());
        assert_eq!(
            q.output(q.state("(6,6,[0,0,0,0])").unwrap()),
            &Output::pair(5, 0)
        );
        assert!(matches!(
            robust_min_mod(2, 3),
            Err(ZooError::TooLarge { .. })
        ));
    }
}
