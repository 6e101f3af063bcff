//! Sharpening timelines.
//!
//! The scheduled sharpener walks layer groups in input-to-output order:
//! group g starts at epoch `sh_st + g * (sh_du + sh_int)` (epochs 0-based)
//! and ramps linearly to full sharpness over `sh_du` epochs. The adaptive
//! sharpener instead advances one increment per epoch unless the training
//! loss just rose by more than a relative threshold.

use serde::{Deserialize, Serialize};

use super::WhetstoneError;

/// (start, duration, intermission) timeline, shared by every group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharpeningSchedule {
    pub start: usize,
    pub duration: usize,
    pub intermission: usize,
}

/// Outcome of checking a schedule against an epoch budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleValidation {
    Complete,
    /// The first group (0-based) that cannot reach full sharpness in time.
    Incomplete { first_unfinished_group: usize },
}

impl SharpeningSchedule {
    pub fn new(start: usize, duration: usize, intermission: usize) -> Result<Self, WhetstoneError> {
        if duration == 0 {
            return Err(WhetstoneError::ZeroDuration);
        }
        Ok(Self { start, duration, intermission })
    }

    /// Epoch at which group `g` begins sharpening.
    pub fn group_start(&self, group: usize) -> usize {
        self.start + group * (self.duration + self.intermission)
    }

    /// Per-group sharpness at the start of `epoch`:
    /// `clamp((epoch - start_g)/duration, 0, 1)`. Monotone in `epoch`.
    pub fn sharpness_at(&self, epoch: usize, group_count: usize) -> Vec<f64> {
        (0..group_count)
            .map(|g| {
                let start = self.group_start(g);
                ((epoch as f64 - start as f64) / self.duration as f64).clamp(0.0, 1.0)
            })
            .collect()
    }

    /// Complete iff the last group reaches s = 1 within the budget:
    /// `start + (G-1)(duration+intermission) + duration <= total_epochs`.
    pub fn validate(&self, group_count: usize, total_epochs: usize) -> ScheduleValidation {
        for g in 0..group_count {
            if self.group_start(g) + self.duration > total_epochs {
                return ScheduleValidation::Incomplete { first_unfinished_group: g };
            }
        }
        ScheduleValidation::Complete
    }
}

/// Advance or pause, decided per epoch from the loss trend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SharpenerDecision {
    Advance,
    Pause,
}

/// Loss-monitoring sharpener: pauses when
/// `(loss_t - loss_{t-1}) / max(loss_{t-1}, eps) > threshold`, otherwise
/// advances the current group's sharpness by `1/duration`.
#[derive(Debug, Clone)]
pub struct AdaptiveSharpener {
    duration: usize,
    threshold: f64,
    epsilon: f64,
    prev_loss: Option<f64>,
    sharpness: Vec<f64>,
    current_group: usize,
}

impl AdaptiveSharpener {
    pub const DEFAULT_THRESHOLD: f64 = 0.05;

    pub fn new(group_count: usize, duration: usize, threshold: f64) -> Result<Self, WhetstoneError> {
        if duration == 0 {
            return Err(WhetstoneError::ZeroDuration);
        }
        Ok(Self {
            duration,
            threshold,
            epsilon: 1e-8,
            prev_loss: None,
            sharpness: vec![0.0; group_count],
            current_group: 0,
        })
    }

    pub fn sharpness(&self) -> &[f64] {
        &self.sharpness
    }

    pub fn is_done(&self) -> bool {
        self.current_group >= self.sharpness.len()
    }

    /// Feed the latest training loss; the first call (no previous loss)
    /// always advances.
    pub fn step(&mut self, latest_loss: f64) -> SharpenerDecision {
        let decision = match self.prev_loss {
            Some(prev) if (latest_loss - prev) / prev.max(self.epsilon) > self.threshold => {
                SharpenerDecision::Pause
            }
            _ => SharpenerDecision::Advance,
        };
        if decision == SharpenerDecision::Advance && !self.is_done() {
            let g = self.current_group;
            self.sharpness[g] = (self.sharpness[g] + 1.0 / self.duration as f64).min(1.0);
            if self.sharpness[g] >= 1.0 {
                self.current_group += 1;
            }
        }
        self.prev_loss = Some(latest_loss);
        decision
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_duration() {
        assert!(matches!(SharpeningSchedule::new(5, 0, 2), Err(WhetstoneError::ZeroDuration)));
        assert!(matches!(AdaptiveSharpener::new(2, 0, 0.05), Err(WhetstoneError::ZeroDuration)));
    }

    #[test]
    fn all_groups_flat_before_start() {
        let schedule = SharpeningSchedule::new(25, 7, 2).unwrap();
        assert_eq!(schedule.sharpness_at(24, 4), vec![0.0; 4]);
    }

    #[test]
    fn group_starts_stagger_by_duration_plus_intermission() {
        let schedule = SharpeningSchedule::new(25, 7, 2).unwrap();
        let s = schedule.sharpness_at(32, 2);
        assert_eq!(s[0], 1.0);
        assert_eq!(schedule.group_start(1), 34);
        assert_eq!(s[1], 0.0);
    }

    #[test]
    fn sharpness_ramps_linearly() {
        let schedule = SharpeningSchedule::new(10, 4, 0).unwrap();
        let s = schedule.sharpness_at(11, 1);
        assert_eq!(s[0], 0.25);
        assert_eq!(schedule.sharpness_at(13, 1)[0], 0.75);
        assert_eq!(schedule.sharpness_at(14, 1)[0], 1.0);
        assert_eq!(schedule.sharpness_at(100, 1)[0], 1.0);
    }

    #[test]
    fn validate_flags_first_unfinished_group() {
        // 25 + 3*(7+2) + 7 = 59 > 50, groups 0..2 finish, group 3 does not.
        let schedule = SharpeningSchedule::new(25, 7, 2).unwrap();
        assert_eq!(
            schedule.validate(4, 50),
            ScheduleValidation::Incomplete { first_unfinished_group: 3 }
        );
        // 20 + 3*(4+5) + 4 = 51 > 50: also incomplete at group 3.
        let schedule = SharpeningSchedule::new(20, 4, 5).unwrap();
        assert_eq!(
            schedule.validate(4, 50),
            ScheduleValidation::Incomplete { first_unfinished_group: 3 }
        );
        // 0 + 1 <= 2.
        let schedule = SharpeningSchedule::new(0, 1, 0).unwrap();
        assert_eq!(schedule.validate(1, 2), ScheduleValidation::Complete);
    }

    #[test]
    fn schedule_is_monotone_and_ordered_across_groups() {
        let schedule = SharpeningSchedule::new(3, 5, 1).unwrap();
        let groups = 4;
        let mut prev = vec![0.0; groups];
        for epoch in 0..60 {
            let s = schedule.sharpness_at(epoch, groups);
            for g in 0..groups {
                assert!(s[g] >= prev[g], "group {g} regressed at epoch {epoch}");
                if g > 0 {
                    // Earlier groups sharpen first.
                    assert!(s[g - 1] >= s[g]);
                }
            }
            prev = s;
        }
        // Group g reaches 1 no earlier than group g-1.
        let done_epoch = |g: usize| (0..60)
            .find(|&e| schedule.sharpness_at(e, groups)[g] >= 1.0)
            .unwrap();
        for g in 1..groups {
            assert!(done_epoch(g) >= done_epoch(g - 1));
        }
    }

    #[test]
    fn adaptive_advances_on_decreasing_loss() {
        let mut sharpener = AdaptiveSharpener::new(1, 4, 0.05).unwrap();
        for (i, loss) in [1.0, 0.9, 0.8, 0.7].iter().enumerate() {
            assert_eq!(sharpener.step(*loss), SharpenerDecision::Advance);
            assert!((sharpener.sharpness()[0] - (i + 1) as f64 * 0.25).abs() < 1e-12);
        }
        assert!(sharpener.is_done());
    }

    #[test]
    fn adaptive_pauses_on_loss_jump() {
        let mut sharpener = AdaptiveSharpener::new(1, 4, 0.05).unwrap();
        sharpener.step(0.50);
        // 0.50 -> 0.60 is a 20% relative jump.
        assert_eq!(sharpener.step(0.60), SharpenerDecision::Pause);
        assert_eq!(sharpener.sharpness()[0], 0.25);
    }

    #[test]
    fn adaptive_first_epoch_always_advances() {
        let mut sharpener = AdaptiveSharpener::new(2, 10, 0.05).unwrap();
        assert_eq!(sharpener.step(123.0), SharpenerDecision::Advance);
        assert_eq!(sharpener.sharpness()[0], 0.1);
    }

    #[test]
    fn adaptive_moves_to_next_group_after_finishing_one() {
        let mut sharpener = AdaptiveSharpener::new(2, 2, 0.05).unwrap();
        sharpener.step(1.0);
        sharpener.step(0.9);
        assert_eq!(sharpener.sharpness(), &[1.0, 0.0]);
        sharpener.step(0.8);
        assert_eq!(sharpener.sharpness(), &[1.0, 0.5]);
    }
}
