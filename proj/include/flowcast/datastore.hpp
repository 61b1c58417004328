#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "flowcast/common.hpp"

namespace flowcast::data {

using BoolGrid = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Corridor speed grid: sensors as rows, time as columns.
/// Timestamps are epoch seconds, equally spaced within each calendar day;
/// gaps are allowed only at day boundaries.
struct SpeedField {
  std::vector<std::string> sensor_ids;
  std::vector<double> mileposts;      // strictly increasing along the corridor
  std::vector<std::int64_t> timestamps;
  int step_minutes = 5;
  Eigen::MatrixXd speeds;             // n_sensors x n_times, mi/h
  BoolGrid missing;                   // same shape
  std::vector<int> day_labels;        // per column, contiguous 0..n_days-1

  int n_sensors() const { return static_cast<int>(sensor_ids.size()); }
  int n_times() const { return static_cast<int>(timestamps.size()); }
  int n_days() const;
  bool any_missing() const { return missing.any(); }
  /// Column ranges [begin, end) per day label.
  std::vector<std::pair<int, int>> day_spans() const;
  /// Day labels whose first timestamp falls on Saturday or Sunday (UTC).
  std::vector<int> weekend_days() const;
  /// Throws DataError if the invariants do not hold.
  void validate() const;
};

struct CsvSchema {
  std::string timestamp = "timestamp";
  std::string sensor_id = "sensor_id";
  std::string speed = "speed";
};

/// Loads long-format speed CSV (header per schema; empty speed = missing).
/// Sensors are ordered by milepost when a metadata CSV ("sensor_id,milepost")
/// is given, else by first appearance (milepost = position index).
SpeedField load_speed_csv(const std::string& path, const CsvSchema& schema = {},
                          const std::string& metadata_path = "");
void export_speed_csv(const SpeedField& field, const std::string& path);
/// Wide grid: timestamp column + one column per sensor in corridor order.
void export_wide_csv(const SpeedField& field, const std::string& path);

struct ImputeResult {
  SpeedField field;
  std::size_t remaining_missing = 0;
  std::vector<int> fully_missing_columns;  // after imputation
};

/// Fills missing cells from spatial neighbors at the same instant:
/// interior sensors need both neighbors present, boundary sensors copy their
/// single neighbor. Neighbor presence is judged on the input mask, which
/// makes the operation idempotent.
ImputeResult impute_spatial(const SpeedField& field);

/// Removes days with missing fraction strictly above the threshold and days
/// whose label is in the exclusion list; relabels the kept days 0..D-1.
SpeedField drop_bad_days(const SpeedField& field, double max_missing_frac,
                         const std::vector<int>& exclude_days = {});

struct Standardization {
  bool active = false;
  Eigen::VectorXd center;  // per X column
  Eigen::VectorXd scale;   // per X column (1 where the column is constant)
};

/// Supervised design of lagged speeds. Column c holds sensor (c % n) at lag
/// (c / n); lag 0 is the most recent measurement. Rows never straddle a day
/// boundary.
struct LagDesign {
  Eigen::MatrixXd X;  // rows x (n_sensors * lag_count)
  Eigen::MatrixXd y;  // rows x n_targets, raw units
  int lag_count = 0;
  int horizon = 0;
  std::vector<int> target_sensors;
  std::vector<std::string> sensor_ids;   // corridor order, column provenance
  struct Column {
    int sensor = 0;
    int lag = 0;
    bool operator==(const Column&) const = default;
  };
  std::vector<Column> column_map;
  Standardization standardization;
  std::vector<int> row_days;
  std::vector<std::int64_t> row_times;  // timestamp of the predicted instant

  Eigen::Index rows() const { return X.rows(); }
  Eigen::Index cols() const { return X.cols(); }
  /// X in raw units (undoes standardization when active).
  Eigen::MatrixXd raw_X() const;
  std::vector<int> distinct_days() const;
};

LagDesign build_lag_design(const SpeedField& field, int lag_count, int horizon,
                           const std::vector<int>& target_sensors,
                           bool standardize);

struct SplitPolicy {
  enum class Kind { FirstHalfDays, DayList };
  Kind kind = Kind::FirstHalfDays;
  std::vector<int> train_days;  // used by DayList
};

/// Partitions rows by whole days. When the input is standardized, both
/// halves are re-standardized with statistics computed on the train days.
std::pair<LagDesign, LagDesign> split_train_test(const LagDesign& design,
                                                 const SplitPolicy& policy);

/// Column-subset view of a design (predictor selection).
LagDesign select_columns(const LagDesign& design,
                         const std::vector<int>& columns);
/// Row-subset (same standardization); used for validation carve-outs.
LagDesign select_rows(const LagDesign& design, const std::vector<int>& rows);

// Civil-time helpers (UTC).
std::int64_t parse_iso8601(const std::string& text);  // throws DataError
std::string format_iso8601(std::int64_t epoch_seconds);
std::int64_t civil_day(std::int64_t epoch_seconds);  // days since epoch
int day_of_week(std::int64_t epoch_seconds);         // 0 = Monday .. 6 = Sunday

}  // namespace flowcast::data
