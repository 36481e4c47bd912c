use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const BALL_STREAM: u64 = 0;
const MOTION_BASE: u64 = 1 << 8;
const SENSING_BASE: u64 = 2 << 8;

/// Independent named random streams split from one master seed: one for the
/// ball, and a motion and a sensing stream per robot id. Adding a robot never
/// shifts another robot's draws.
#[derive(Debug, Clone)]
pub struct RngStreams {
    seed: u64,
    ball: ChaCha8Rng,
    motion: Vec<Option<ChaCha8Rng>>,
    sensing: Vec<Option<ChaCha8Rng>>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(id);
    r
}

fn slot(streams: &mut Vec<Option<ChaCha8Rng>>, seed: u64, base: u64, id: u8) -> &mut ChaCha8Rng {
    let i = id as usize;
    if streams.len() <= i {
        streams.resize(i + 1, None);
    }
    streams[i].get_or_insert_with(|| stream(seed, base + id as u64))
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            ball: stream(seed, BALL_STREAM),
            motion: Vec::new(),
            sensing: Vec::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn ball(&mut self) -> &mut ChaCha8Rng {
        &mut self.ball
    }

    pub fn motion(&mut self, robot_id: u8) -> &mut ChaCha8Rng {
        slot(&mut self.motion, self.seed, MOTION_BASE, robot_id)
    }

    pub fn sensing(&mut self, robot_id: u8) -> &mut ChaCha8Rng {
        slot(&mut self.sensing, self.seed, SENSING_BASE, robot_id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_independent_of_creation_order() {
        let mut a = RngStreams::new(9);
        let mut b = RngStreams::new(9);
        let _ = b.motion(3).random::<u64>();
        let _ = b.sensing(0).random::<u64>();
        assert_eq!(a.motion(1).random::<u64>(), b.motion(1).random::<u64>());
        assert_ne!(a.motion(1).random::<u64>(), a.motion(2).random::<u64>());
    }
}
