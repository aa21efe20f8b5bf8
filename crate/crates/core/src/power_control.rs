//! PUSCH uplink power control.
//!
//! Implements the open-loop power equation
//!
//! ```text
//! P = min(P_CMAX, 10*log10(M) + P0 + alpha*PL + dTF + f)
//! ```
//!
//! plus the two aerial-specific adaptations evaluated by the simulator:
//!
//! * a BS-side power adjustment `beta` keyed on the dB ratio between the
//!   serving pathloss and the n-th strongest neighbour pathloss (or the
//!   corresponding RSRP ratio), applied as an offset to `P0` so the
//!   `P_CMAX` cap is preserved;
//! * closed-loop TPC commands accumulated into `f`, with the receive
//!   target for aerial UEs optionally conditioned on the serving-to-
//!   neighbour RSRP difference.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Allowed fractional pathloss-compensation factors.
pub const ALPHA_VALUES: [f64; 8] = [0.0, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// Fractional pathloss compensation factor, restricted to the signalled set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if ALPHA_VALUES.contains(&value) {
            Ok(Self(value))
        } else {
            Err(SimError::InvalidConfig(format!(
                "alpha must be one of {ALPHA_VALUES:?}, got {value}"
            )))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Alpha {
    type Error = SimError;
    fn try_from(value: f64) -> Result<Self> {
        Alpha::new(value)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

// ---------------------------------------------------------------------------
// Beta adjustment table
// ---------------------------------------------------------------------------

/// Piecewise-constant power adjustment keyed on a dB ratio.
///
/// Thresholds are strictly increasing and adjustments non-positive. Inputs
/// between thresholds floor to the nearest lower row; inputs above the last
/// threshold take no adjustment; inputs below the first threshold clamp to
/// the first row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct BetaTable {
    rows: Vec<(f64, f64)>,
}

impl BetaTable {
    pub fn new(rows: Vec<(f64, f64)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(SimError::InvalidConfig("beta table is empty".into()));
        }
        for w in rows.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(SimError::InvalidConfig(
                    "beta table thresholds must be strictly increasing".into(),
                ));
            }
        }
        if rows.iter().any(|(_, adj)| *adj > 0.0) {
            return Err(SimError::InvalidConfig(
                "beta adjustments must be non-positive".into(),
            ));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[(f64, f64)] {
        &self.rows
    }

    /// Look up the adjustment for a dB ratio.
    pub fn adjustment_db(&self, ratio_db: f64) -> f64 {
        let last = self.rows.last().unwrap();
        if ratio_db > last.0 {
            return 0.0;
        }
        let mut current = self.rows[0].1;
        for (threshold, adj) in &self.rows {
            if ratio_db >= *threshold {
                current = *adj;
            } else {
                break;
            }
        }
        current
    }
}

impl Default for BetaTable {
    fn default() -> Self {
        Self {
            rows: vec![
                (0.0, -6.0),
                (1.0, -5.0),
                (2.0, -4.0),
                (3.0, -3.0),
                (4.0, -2.0),
                (5.0, -1.0),
            ],
        }
    }
}

impl TryFrom<Vec<(f64, f64)>> for BetaTable {
    type Error = SimError;
    fn try_from(rows: Vec<(f64, f64)>) -> Result<Self> {
        BetaTable::new(rows)
    }
}

impl From<BetaTable> for Vec<(f64, f64)> {
    fn from(t: BetaTable) -> Self {
        t.rows
    }
}

/// Free-function form of the table lookup.
pub fn beta_adjustment(ratio_db: f64, table: &BetaTable) -> f64 {
    table.adjustment_db(ratio_db)
}

// ---------------------------------------------------------------------------
// Open loop
// ---------------------------------------------------------------------------

/// Open-loop PUSCH transmit power in dBm.
///
/// `m_prb` is the number of allocated resource blocks; `f_db` the current
/// closed-loop correction. Errors on a zero allocation.
pub fn open_loop_power(
    m_prb: u32,
    p0_dbm: f64,
    alpha: Alpha,
    pathloss_db: f64,
    delta_tf_db: f64,
    f_db: f64,
    p_cmax_dbm: f64,
) -> Result<f64> {
    if m_prb == 0 {
        return Err(SimError::InvalidArgument(
            "open_loop_power requires at least one PRB".into(),
        ));
    }
    let unbounded = 10.0 * (m_prb as f64).log10()
        + p0_dbm
        + alpha.value() * pathloss_db
        + delta_tf_db
        + f_db;
    Ok(unbounded.min(p_cmax_dbm))
}

/// Total closed-loop adjustment needed to compensate the pathloss fraction
/// the open loop leaves uncovered: `(1 - alpha) * PL`.
pub fn total_cpc_adjustment(alpha: Alpha, pathloss_db: f64) -> f64 {
    (1.0 - alpha.value()) * pathloss_db
}

// ---------------------------------------------------------------------------
// Closed loop
// ---------------------------------------------------------------------------

/// TPC command step set in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TpcStepSet {
    steps: Vec<f64>,
}

impl TpcStepSet {
    pub fn new(steps: Vec<f64>) -> Result<Self> {
        if steps.is_empty() {
            return Err(SimError::InvalidConfig("TPC step set is empty".into()));
        }
        Ok(Self { steps })
    }

    /// Legacy accumulated-TPC steps.
    pub fn legacy() -> Self {
        Self {
            steps: vec![-1.0, 0.0, 1.0, 3.0],
        }
    }

    /// Extended step set covering large corrections in few commands.
    pub fn extended() -> Self {
        Self {
            steps: vec![-8.0, -4.0, -1.0, 0.0, 1.0, 4.0, 8.0],
        }
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn contains(&self, step_db: f64) -> bool {
        self.steps.contains(&step_db)
    }

    pub fn max_abs_step(&self) -> f64 {
        self.steps.iter().fold(0.0, |m, s| m.max(s.abs()))
    }
}

impl Default for TpcStepSet {
    fn default() -> Self {
        Self::legacy()
    }
}

impl TryFrom<Vec<f64>> for TpcStepSet {
    type Error = SimError;
    fn try_from(steps: Vec<f64>) -> Result<Self> {
        TpcStepSet::new(steps)
    }
}

impl From<TpcStepSet> for Vec<f64> {
    fn from(s: TpcStepSet) -> Self {
        s.steps
    }
}

/// Closed-loop correction state of one UE.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClosedLoopState {
    /// Accumulated correction in dB; zero at initialization.
    pub f_db: f64,
    /// Index of the last applied command.
    pub last_command_subframe: u64,
}

/// Closed-loop update mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedLoopMode {
    Off,
    Accumulate,
    Absolute,
}

/// Apply one TPC command to the closed-loop state.
pub fn closed_loop_update(
    state: ClosedLoopState,
    delta_db: f64,
    mode: ClosedLoopMode,
    steps: &TpcStepSet,
) -> Result<ClosedLoopState> {
    if !steps.contains(delta_db) {
        return Err(SimError::InvalidArgument(format!(
            "TPC delta {delta_db} dB is not in the configured step set"
        )));
    }
    let f_db = match mode {
        ClosedLoopMode::Off => state.f_db,
        ClosedLoopMode::Accumulate => state.f_db + delta_db,
        ClosedLoopMode::Absolute => delta_db,
    };
    Ok(ClosedLoopState {
        f_db,
        last_command_subframe: state.last_command_subframe + 1,
    })
}

/// Pick the TPC command that brings the received power closest to the
/// target. Error ties resolve to the smaller |step|, then to the smaller
/// (more conservative) step.
pub fn tpc_command(received_dbm: f64, target_dbm: f64, steps: &TpcStepSet) -> f64 {
    let gap = target_dbm - received_dbm;
    let mut best = steps.steps()[0];
    for &s in &steps.steps()[1..] {
        let (e_new, e_best) = ((s - gap).abs(), (best - gap).abs());
        if e_new < e_best
            || (e_new == e_best && s.abs() < best.abs())
            || (e_new == e_best && s.abs() == best.abs() && s < best)
        {
            best = s;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Aerial receive targets
// ---------------------------------------------------------------------------

/// How the closed-loop receive target of aerial UEs is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AerialTargetMode {
    Fixed,
    RsrpConditioned,
}

/// Receive-power target for an aerial UE.
///
/// In conditioned mode the base target is lowered by the (non-positive)
/// mapping of the serving-to-neighbour RSRP difference; UEs that clearly
/// dominate their neighbours keep the full target.
pub fn aerial_target_power(
    serving_rsrp_dbm: f64,
    neighbor_rsrp_dbm: f64,
    base_target_dbm: f64,
    mode: AerialTargetMode,
    mapping: &BetaTable,
) -> f64 {
    match mode {
        AerialTargetMode::Fixed => base_target_dbm,
        AerialTargetMode::RsrpConditioned => {
            base_target_dbm + mapping.adjustment_db(serving_rsrp_dbm - neighbor_rsrp_dbm)
        }
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Which ratio feeds the beta table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaInput {
    PathlossRatio,
    RsrpRatio,
}

/// Neighbour-ratio power adjustment policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BetaPolicy {
    pub enabled: bool,
    /// Which neighbour (1-based, by descending RSRP) anchors the ratio.
    pub neighbor_index: usize,
    pub input: BetaInput,
    pub table: BetaTable,
}

impl Default for BetaPolicy {
    fn default() -> Self {
        Self {
            enabled: false,
            neighbor_index: 3,
            input: BetaInput::PathlossRatio,
            table: BetaTable::default(),
        }
    }
}

/// Closed-loop emulation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClosedLoopConfig {
    pub mode: ClosedLoopMode,
    pub tpc_steps: TpcStepSet,
    /// Wideband receive-power target at the serving cell, dBm.
    pub target_rx_power_dbm: f64,
    pub aerial_target_mode: AerialTargetMode,
    /// Neighbour (1-based) whose RSRP conditions the aerial target.
    pub target_neighbor_index: usize,
    /// Raise targets by the serving-cell IoT and iterate to a fixed point.
    pub iot_raised_targets: bool,
    pub convergence_tolerance_db: f64,
    pub max_tpc_rounds: usize,
    pub max_outer_iterations: usize,
    /// Damping for the outer interference fixed point, in [0, 1).
    pub damping: f64,
}

impl Default for ClosedLoopConfig {
    fn default() -> Self {
        Self {
            mode: ClosedLoopMode::Off,
            tpc_steps: TpcStepSet::legacy(),
            target_rx_power_dbm: -85.0,
            aerial_target_mode: AerialTargetMode::Fixed,
            target_neighbor_index: 3,
            iot_raised_targets: false,
            convergence_tolerance_db: 0.5,
            max_tpc_rounds: 50,
            max_outer_iterations: 20,
            damping: 0.5,
        }
    }
}

/// Complete uplink power-control configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerControlConfig {
    pub p0_terrestrial_dbm: f64,
    pub p0_aerial_dbm: f64,
    pub alpha: Alpha,
    pub p_cmax_dbm: f64,
    pub delta_tf_db: f64,
    pub beta: BetaPolicy,
    pub closed_loop: ClosedLoopConfig,
}

impl Default for PowerControlConfig {
    fn default() -> Self {
        Self {
            p0_terrestrial_dbm: -85.0,
            p0_aerial_dbm: -85.0,
            alpha: Alpha(0.8),
            p_cmax_dbm: 23.0,
            delta_tf_db: 0.0,
            beta: BetaPolicy::default(),
            closed_loop: ClosedLoopConfig::default(),
        }
    }
}

impl PowerControlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beta.neighbor_index == 0 || self.closed_loop.target_neighbor_index == 0 {
            return Err(SimError::InvalidConfig(
                "neighbour indices are 1-based and must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.closed_loop.damping) {
            return Err(SimError::InvalidConfig(
                "closed-loop damping must be in [0, 1)".into(),
            ));
        }
        if self.closed_loop.convergence_tolerance_db <= 0.0 {
            return Err(SimError::InvalidConfig(
                "convergence tolerance must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn p0_for_class(&self, class: crate::deployment::DeviceClass) -> f64 {
        match class {
            crate::deployment::DeviceClass::Terrestrial => self.p0_terrestrial_dbm,
            crate::deployment::DeviceClass::Aerial => self.p0_aerial_dbm,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() < tol
    }

    #[test]
    fn alpha_set_is_enforced() {
        assert!(Alpha::new(0.8).is_ok());
        assert!(Alpha::new(1.0).is_ok());
        assert!(Alpha::new(0.3).is_err());
        assert!(Alpha::new(-0.1).is_err());
    }

    #[test]
    fn open_loop_hand_example() {
        let p = open_loop_power(1, -85.0, Alpha::new(1.0).unwrap(), 100.0, 0.0, 0.0, 23.0)
            .unwrap();
        assert!(approx(p, 15.0, 1e-12));
    }

    #[test]
    fn open_loop_caps_at_p_cmax() {
        let p = open_loop_power(1, -85.0, Alpha::new(1.0).unwrap(), 120.0, 0.0, 0.0, 23.0)
            .unwrap();
        assert_eq!(p, 23.0);
    }

    #[test]
    fn hundred_prbs_add_twenty_db_uncapped() {
        let alpha = Alpha::new(0.8).unwrap();
        let one = open_loop_power(1, -95.0, alpha, 80.0, 0.0, 0.0, 60.0).unwrap();
        let hundred = open_loop_power(100, -95.0, alpha, 80.0, 0.0, 0.0, 60.0).unwrap();
        assert!(approx(hundred - one, 20.0, 1e-12));
    }

    #[test]
    fn zero_prbs_is_an_error() {
        assert!(open_loop_power(0, -85.0, Alpha::new(0.8).unwrap(), 100.0, 0.0, 0.0, 23.0)
            .is_err());
    }

    #[test]
    fn beta_table_rows_are_exact() {
        let t = BetaTable::default();
        let expect = [
            (0.0, -6.0),
            (1.0, -5.0),
            (2.0, -4.0),
            (3.0, -3.0),
            (4.0, -2.0),
            (5.0, -1.0),
        ];
        for (ratio, adj) in expect {
            assert_eq!(t.adjustment_db(ratio), adj, "ratio {ratio}");
        }
        assert_eq!(t.adjustment_db(7.0), 0.0);
    }

    #[test]
    fn beta_lookup_floors_between_rows_and_clamps_below() {
        let t = BetaTable::default();
        assert_eq!(t.adjustment_db(3.7), -3.0);
        assert_eq!(t.adjustment_db(0.2), -6.0);
        assert_eq!(t.adjustment_db(-2.0), -6.0);
        assert_eq!(t.adjustment_db(5.5), 0.0);
    }

    #[test]
    fn beta_table_validation() {
        assert!(BetaTable::new(vec![]).is_err());
        assert!(BetaTable::new(vec![(0.0, -6.0), (0.0, -5.0)]).is_err());
        assert!(BetaTable::new(vec![(0.0, 1.0)]).is_err());
    }

    #[test]
    fn closed_loop_accumulate_and_absolute() {
        let steps = TpcStepSet::legacy();
        let s = ClosedLoopState {
            f_db: 2.0,
            last_command_subframe: 4,
        };
        let acc = closed_loop_update(s, 1.0, ClosedLoopMode::Accumulate, &steps).unwrap();
        assert_eq!(acc.f_db, 3.0);
        assert_eq!(acc.last_command_subframe, 5);

        let steps = TpcStepSet::extended();
        let abs = closed_loop_update(s, -4.0, ClosedLoopMode::Absolute, &steps).unwrap();
        assert_eq!(abs.f_db, -4.0);
    }

    #[test]
    fn closed_loop_rejects_foreign_steps() {
        let steps = TpcStepSet::legacy();
        let s = ClosedLoopState::default();
        assert!(closed_loop_update(s, 2.0, ClosedLoopMode::Accumulate, &steps).is_err());
    }

    #[test]
    fn accumulated_f_equals_running_sum() {
        use rand::Rng;
        use rand::SeedableRng;
        let steps = TpcStepSet::extended();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut state = ClosedLoopState::default();
        let mut oracle = 0.0;
        for i in 0..200 {
            let delta = steps.steps()[rng.gen_range(0..steps.steps().len())];
            state = closed_loop_update(state, delta, ClosedLoopMode::Accumulate, &steps).unwrap();
            oracle += delta;
            assert!(approx(state.f_db, oracle, 1e-9));
            assert_eq!(state.last_command_subframe, i + 1);
        }
    }

    #[test]
    fn tpc_command_examples() {
        let steps = TpcStepSet::legacy();
        assert_eq!(tpc_command(-97.0, -94.0, &steps), 3.0);
        assert_eq!(tpc_command(-94.0, -94.0, &steps), 0.0);
        assert_eq!(tpc_command(-93.0, -94.0, &steps), -1.0);
    }

    #[test]
    fn tpc_command_matches_brute_force() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for steps in [TpcStepSet::legacy(), TpcStepSet::extended()] {
            for _ in 0..500 {
                let received = rng.gen_range(-120.0..-60.0);
                let target = rng.gen_range(-120.0..-60.0);
                let got = tpc_command(received, target, &steps);
                let best_err = steps
                    .steps()
                    .iter()
                    .map(|s| (received + s - target).abs())
                    .fold(f64::INFINITY, f64::min);
                assert!(approx((received + got - target).abs(), best_err, 1e-12));
            }
        }
    }

    #[test]
    fn cpc_adjustment_examples() {
        assert!(approx(
            total_cpc_adjustment(Alpha::new(0.8).unwrap(), 100.0),
            20.0,
            1e-9
        ));
        assert_eq!(total_cpc_adjustment(Alpha::new(1.0).unwrap(), 137.0), 0.0);
        assert_eq!(total_cpc_adjustment(Alpha::new(0.0).unwrap(), 120.0), 120.0);
    }

    #[test]
    fn aerial_target_modes() {
        let map = BetaTable::default();
        assert_eq!(
            aerial_target_power(-80.0, -83.0, -85.0, AerialTargetMode::Fixed, &map),
            -85.0
        );
        assert_eq!(
            aerial_target_power(-80.0, -80.0, -85.0, AerialTargetMode::RsrpConditioned, &map),
            -91.0
        );
        assert_eq!(
            aerial_target_power(-60.0, -80.0, -85.0, AerialTargetMode::RsrpConditioned, &map),
            -85.0
        );
    }

    // Bounded convergence: starting below target by `gap`, the greedy
    // command sequence reaches within half the maximum step in at most
    // ceil(gap / min positive step) + 1 commands.
    #[test]
    fn closed_loop_converges_within_bound() {
        let steps = TpcStepSet::legacy();
        let min_pos = steps
            .steps()
            .iter()
            .copied()
            .filter(|s| *s > 0.0)
            .fold(f64::INFINITY, f64::min);
        let half_max = steps.max_abs_step() / 2.0;
        for gap in [0.3, 1.0, 2.5, 7.9, 15.0, 29.4] {
            let target = -90.0;
            let mut received = target - gap;
            let mut state = ClosedLoopState::default();
            let bound = (gap / min_pos).ceil() as usize + 1;
            let mut used = 0;
            while (received - target).abs() > half_max {
                let delta = tpc_command(received, target, &steps);
                state =
                    closed_loop_update(state, delta, ClosedLoopMode::Accumulate, &steps).unwrap();
                received += delta;
                used += 1;
                assert!(used <= bound, "gap {gap}: exceeded bound {bound}");
            }
        }
    }

    proptest! {
        #[test]
        fn open_loop_never_exceeds_cap(
            m in 1u32..110,
            p0 in -120.0f64..-60.0,
            alpha_idx in 0usize..ALPHA_VALUES.len(),
            pl in 30.0f64..170.0,
            dtf in -6.0f64..6.0,
            f in -30.0f64..30.0,
        ) {
            let alpha = Alpha::new(ALPHA_VALUES[alpha_idx]).unwrap();
            let p = open_loop_power(m, p0, alpha, pl, dtf, f, 23.0).unwrap();
            prop_assert!(p <= 23.0);
        }

        #[test]
        fn open_loop_is_monotone(
            m in 1u32..100,
            p0 in -110.0f64..-70.0,
            pl in 40.0f64..160.0,
            f in -20.0f64..20.0,
        ) {
            let alpha = Alpha::new(0.8).unwrap();
            let base = open_loop_power(m, p0, alpha, pl, 0.0, f, 23.0).unwrap();
            prop_assert!(open_loop_power(m + 1, p0, alpha, pl, 0.0, f, 23.0).unwrap() >= base);
            prop_assert!(open_loop_power(m, p0 + 1.0, alpha, pl, 0.0, f, 23.0).unwrap() >= base);
            prop_assert!(open_loop_power(m, p0, alpha, pl + 5.0, 0.0, f, 23.0).unwrap() >= base);
            prop_assert!(open_loop_power(m, p0, alpha, pl, 0.0, f + 1.0, 23.0).unwrap() >= base);
        }

        #[test]
        fn beta_is_monotone_and_bounded(r1 in -10.0f64..15.0, r2 in -10.0f64..15.0) {
            let t = BetaTable::default();
            let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            let a = t.adjustment_db(lo);
            let b = t.adjustment_db(hi);
            prop_assert!(a <= b);
            prop_assert!((-6.0..=0.0).contains(&a));
            prop_assert!((-6.0..=0.0).contains(&b));
        }

        #[test]
        fn accumulated_f_is_lipschitz_in_commands(
            deltas in proptest::collection::vec(0usize..4, 1..50),
        ) {
            let steps = TpcStepSet::legacy();
            let s_max = steps.max_abs_step();
            let mut state = ClosedLoopState::default();
            let mut history = vec![0.0];
            for d in &deltas {
                let delta = steps.steps()[*d];
                state = closed_loop_update(state, delta, ClosedLoopMode::Accumulate, &steps)
                    .unwrap();
                history.push(state.f_db);
            }
            for i in 0..history.len() {
                for j in i..history.len() {
                    prop_assert!(
                        (history[j] - history[i]).abs() <= s_max * (j - i) as f64 + 1e-9
                    );
                }
            }
        }
    }
}
