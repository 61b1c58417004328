#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "flowcast/common.hpp"
#include "flowcast/datastore.hpp"

namespace flowcast::synth {

inline constexpr int kStepsPerDay = 288;  // 5-minute steps

/// Phenomenological corridor model: free flow breaks down into a congestion
/// plateau near the bottleneck and the onset propagates outward with a
/// finite wave speed; recovery mirrors it. Event days add an evening window,
/// weather days slow the whole corridor at once.
struct CorridorParams {
  int n_sensors = 21;
  double free_flow_speed = 70.0;   // mi/h
  double congested_speed = 20.0;   // mi/h
  int bottleneck_sensor = -1;      // < 0: three quarters along the corridor
  double breakdown_step_mean = 84.0;   // 07:00
  double recovery_step_mean = 126.0;   // 10:30
  double step_jitter_sd = 6.0;         // per-day clock jitter, steps
  double wave_speed = 0.35;            // sensors per step; inf = simultaneous
  double transition_steps = 5.0;       // sigmoid width of regime changes
  double noise_sd = 7.0;               // additive Gaussian, mi/h
  double outlier_prob = 0.08;          // rate of stuck-detector misread runs
  double event_prob = 0.1;             // default event fraction for datasets
  double event_magnitude = 1.0;        // evening dip depth, fraction of full
  double event_start_step_mean = 198.0;  // 16:30
  double event_duration_steps = 30.0;
  double weather_factor = 0.6;  // corridor-wide multiplicative slowdown
  // seasonal demand growth: the congestion window widens by this many steps
  // per day (split between earlier onset and later recovery)
  double demand_growth_steps_per_day = 0.15;
  // day-to-day congestion severity: the plateau deepens by |N(0, sd)| on each
  // day (heavy left tail of the speed distribution) and by a seasonal trend
  double depth_day_sd = 4.0;
  double depth_growth_per_day = 0.04;  // mi/h per day
  std::uint64_t seed = 0;

  int resolved_bottleneck() const;
  void validate() const;
};

enum class DayType { Normal, Event, Weather };

/// One synthetic day, n_sensors x 288. Deterministic given the rng state.
/// noise_sd = 0 disables the measurement-noise stage entirely (Gaussian
/// noise and misreads), leaving the exact regime profile.
Eigen::MatrixXd gen_day(const CorridorParams& params, DayType day_type,
                        Rng& rng);

struct DayMix {
  double normal = 0.8;
  double event = 0.1;
  double weather = 0.1;
};

/// Concatenates generated days into a SpeedField (consecutive calendar days
/// starting Monday 2013-01-07, no missing cells). Deterministic given seed.
data::SpeedField gen_dataset(const CorridorParams& params, int n_days,
                             const DayMix& mix, std::uint64_t seed);

}  // namespace flowcast::synth
