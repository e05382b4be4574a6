use crate::error::{Error, Result};
use crate::space::Genome;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub id: u64,
    pub genome: Genome,
    pub fitness: f64,
    pub parent_id: Option<u64>,
    /// Index of the candidate in creation order; `None` for the initial
    /// population.
    pub created_at: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Parent selection: highest fitness wins.
    Max,
    /// Kill selection: lowest fitness loses.
    Min,
}

/// Fixed-capacity set of living individuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    members: Vec<Individual>,
}

impl Population {
    pub fn new(members: Vec<Individual>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::contract("empty population"));
        }
        Ok(Population { members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    pub fn get(&self, index: usize) -> &Individual {
        &self.members[index]
    }

    /// Puts `child` in the slot of the member at `index`, returning the
    /// removed individual.
    pub fn replace(&mut self, index: usize, child: Individual) -> Individual {
        std::mem::replace(&mut self.members[index], child)
    }

    pub fn best(&self) -> &Individual {
        let i = pick(&self.members, 0..self.members.len(), Objective::Max);
        &self.members[i]
    }
}

/// Whether `a` wins over `b` under `obj`, ties going to the lower id.
pub fn beats(a: &Individual, b: &Individual, obj: Objective) -> bool {
    let better = match obj {
        Objective::Max => a.fitness > b.fitness,
        Objective::Min => a.fitness < b.fitness,
    };
    better || (a.fitness == b.fitness && a.id < b.id)
}

fn pick(members: &[Individual], idx: impl IntoIterator<Item = usize>, obj: Objective) -> usize {
    let mut it = idx.into_iter();
    let first = it.next().expect("non-empty sample");
    it.fold(first, |w, i| if beats(&members[i], &members[w], obj) { i } else { w })
}

/// Samples `t` members uniformly without replacement and returns the index
/// of the winner under `obj`.
pub fn tournament<R: Rng + ?Sized>(pop: &Population, t: usize, rng: &mut R, obj: Objective) -> Result<usize> {
    if pop.is_empty() {
        return Err(Error::contract("tournament on an empty population"));
    }
    if t == 0 || t > pop.len() {
        return Err(Error::contract(format!("tournament size {t} for a population of {}", pop.len())));
    }
    Ok(pick(&pop.members, sample(rng, pop.len(), t), obj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{seed_genome, SeedKind, Vocabulary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pop(fitness: &[f64]) -> Population {
        let g = seed_genome(SeedKind::Late, 1, &Vocabulary::default()).unwrap();
        let members = fitness
            .iter()
            .enumerate()
            .map(|(i, &f)| Individual { id: i as u64, genome: g.clone(), fitness: f, parent_id: None, created_at: None })
            .collect();
        Population::new(members).unwrap()
    }

    #[test]
    fn two_member_tournaments() {
        let p = pop(&[0.1, 0.9]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(tournament(&p, 2, &mut rng, Objective::Max).unwrap(), 1);
        assert_eq!(tournament(&p, 2, &mut rng, Objective::Min).unwrap(), 0);
        assert!(tournament(&p, 3, &mut rng, Objective::Max).is_err());
    }

    #[test]
    fn ties_go_to_lower_id() {
        let p = pop(&[0.5, 0.5, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(tournament(&p, 3, &mut rng, Objective::Max).unwrap(), 0);
        assert_eq!(tournament(&p, 3, &mut rng, Objective::Min).unwrap(), 0);
    }
}
