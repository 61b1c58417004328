#include "flowcast/synthgen.hpp"

#include <algorithm>
#include <cmath>

namespace flowcast::synth {

int CorridorParams::resolved_bottleneck() const {
  return bottleneck_sensor < 0 ? std::min(n_sensors - 1, (3 * n_sensors) / 4)
                               : bottleneck_sensor;
}

void CorridorParams::validate() const {
  if (n_sensors < 1) throw ParamError("need at least one sensor");
  if (!(free_flow_speed > 0.0) || !(congested_speed > 0.0))
    throw ParamError("speeds must be positive");
  if (!(congested_speed < free_flow_speed))
    throw ParamError("congested speed must be below free flow");
  if (resolved_bottleneck() >= n_sensors)
    throw ParamError("bottleneck sensor out of range");
  if (!(wave_speed > 0.0)) throw ParamError("wave speed must be positive");
  if (noise_sd < 0.0) throw ParamError("noise sd must be non-negative");
  if (outlier_prob < 0.0 || outlier_prob > 1.0)
    throw ParamError("outlier probability must be in [0, 1]");
  if (!(weather_factor > 0.0 && weather_factor <= 1.0))
    throw ParamError("weather factor must be in (0, 1]");
  if (event_magnitude < 0.0 || event_magnitude > 1.0)
    throw ParamError("event magnitude must be in [0, 1]");
  if (demand_growth_steps_per_day < 0.0)
    throw ParamError("demand growth must be non-negative");
  if (depth_day_sd < 0.0 || depth_growth_per_day < 0.0)
    throw ParamError("depth variation must be non-negative");
}

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// dip factor in [0,1]: ~1 inside [onset, offset], smooth edges
inline double window_dip(double t, double onset, double offset, double width) {
  return sigmoid((t - onset) / width) * sigmoid((offset - t) / width);
}

}  // namespace

Eigen::MatrixXd gen_day(const CorridorParams& params, DayType day_type,
                        Rng& rng) {
  params.validate();
  const int n = params.n_sensors;
  const double depth = params.free_flow_speed - params.congested_speed;
  const double width = std::max(params.transition_steps, 1e-6) / 6.0;

  // shared per-day clocks; congestion reaches sensor i after a wave delay
  const double breakdown =
      rng.normal(params.breakdown_step_mean, params.step_jitter_sd);
  const double recovery =
      rng.normal(params.recovery_step_mean, params.step_jitter_sd);
  const double event_start =
      rng.normal(params.event_start_step_mean, params.step_jitter_sd);
  const double event_end = event_start + params.event_duration_steps;

  Eigen::MatrixXd day(n, kStepsPerDay);
  for (int i = 0; i < n; ++i) {
    const double delay =
        std::isinf(params.wave_speed)
            ? 0.0
            : std::abs(i - params.resolved_bottleneck()) / params.wave_speed;
    for (int t = 0; t < kStepsPerDay; ++t) {
      const double tt = static_cast<double>(t);
      double dip =
          window_dip(tt, breakdown + delay, recovery + delay, width);
      if (day_type == DayType::Event) {
        double evening = params.event_magnitude *
                         window_dip(tt, event_start + delay, event_end + delay,
                                    width);
        dip = std::max(dip, evening);
      }
      double v = params.free_flow_speed - depth * dip;
      if (day_type == DayType::Weather) v *= params.weather_factor;
      day(i, t) = v;
    }
  }
  if (params.noise_sd > 0.0) {
    const double hi = params.free_flow_speed + 4.0 * params.noise_sd;
    for (int i = 0; i < n; ++i)
      for (int t = 0; t < kStepsPerDay; ++t)
        day(i, t) = std::clamp(day(i, t) + rng.normal(0.0, params.noise_sd),
                               0.0, hi);
    // detector misreads: short stuck-value runs of 1-3 intervals
    if (params.outlier_prob > 0.0) {
      for (int i = 0; i < n; ++i) {
        for (int t = 0; t < kStepsPerDay; ++t) {
          if (!rng.bernoulli(params.outlier_prob)) continue;
          const int run = rng.uniform_int(1, 3);
          const double stuck = rng.uniform(0.0, hi);
          for (int r = 0; r < run && t + r < kStepsPerDay; ++r)
            day(i, t + r) = stuck;
          t += run;
        }
      }
    }
  }
  return day;
}

data::SpeedField gen_dataset(const CorridorParams& params, int n_days,
                             const DayMix& mix, std::uint64_t seed) {
  params.validate();
  if (n_days < 1) throw ParamError("need at least one day");
  const double total = mix.normal + mix.event + mix.weather;
  if (std::abs(total - 1.0) > 1e-9)
    throw ParamError("day-type fractions must sum to 1");
  if (mix.normal < 0.0 || mix.event < 0.0 || mix.weather < 0.0)
    throw ParamError("day-type fractions must be non-negative");

  Rng root(seed);
  Rng mixer = root.split("mix");

  data::SpeedField field;
  field.step_minutes = 5;
  field.sensor_ids.resize(static_cast<std::size_t>(params.n_sensors));
  field.mileposts.resize(static_cast<std::size_t>(params.n_sensors));
  for (int i = 0; i < params.n_sensors; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "s%02d", i + 1);
    field.sensor_ids[static_cast<std::size_t>(i)] = buf;
    field.mileposts[static_cast<std::size_t>(i)] = 0.65 * i;  // ~13 mi corridor
  }
  const int T = n_days * kStepsPerDay;
  field.speeds.resize(params.n_sensors, T);
  field.missing = data::BoolGrid::Constant(params.n_sensors, T, false);
  field.timestamps.resize(static_cast<std::size_t>(T));
  field.day_labels.resize(static_cast<std::size_t>(T));

  // Monday 2013-01-07 00:00 UTC
  const std::int64_t t0 = data::parse_iso8601("2013-01-07T00:00:00");
  for (int d = 0; d < n_days; ++d) {
    double u = mixer.uniform();
    DayType type = u < mix.normal
                       ? DayType::Normal
                       : (u < mix.normal + mix.event ? DayType::Event
                                                     : DayType::Weather);
    Rng day_rng = root.split("day", static_cast<std::uint64_t>(d));
    synth::CorridorParams day_params = params;
    const double growth = params.demand_growth_steps_per_day * d;
    day_params.breakdown_step_mean -= 0.5 * growth;
    day_params.recovery_step_mean += 0.5 * growth;
    day_params.congested_speed = std::max(
        5.0, params.congested_speed -
                 params.depth_growth_per_day * d -
                 std::abs(day_rng.normal(0.0, params.depth_day_sd)));
    Eigen::MatrixXd day = gen_day(day_params, type, day_rng);
    field.speeds.middleCols(d * kStepsPerDay, kStepsPerDay) = day;
    for (int t = 0; t < kStepsPerDay; ++t) {
      const int col = d * kStepsPerDay + t;
      field.timestamps[static_cast<std::size_t>(col)] =
          t0 + static_cast<std::int64_t>(d) * 86400 + static_cast<std::int64_t>(t) * 300;
      field.day_labels[static_cast<std::size_t>(col)] = d;
    }
  }
  field.validate();
  return field;
}

}  // namespace flowcast::synth
