#include "flowcast/datastore.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace flowcast::data {

namespace {

// Howard Hinnant's civil date algorithms.
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<int>(yoe) + static_cast<int>(era) * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y += m <= 2;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::int64_t parse_iso8601(const std::string& text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char sep = 0;
  int n = std::sscanf(text.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep,
                      &h, &mi, &s);
  if (n == 3) {
    sep = 'T';
    h = mi = s = 0;
  } else if (n >= 6) {
    if (sep != 'T' && sep != ' ') throw DataError("bad timestamp separator");
    if (n == 6) s = 0;
  } else {
    throw DataError("unparseable timestamp '" + text + "'");
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 ||
      mi > 59 || s < 0 || s > 60) {
    throw DataError("timestamp field out of range in '" + text + "'");
  }
  return days_from_civil(y, static_cast<unsigned>(mo),
                         static_cast<unsigned>(d)) *
             86400 +
         h * 3600 + mi * 60 + s;
}

std::string format_iso8601(std::int64_t t) {
  std::int64_t days = t >= 0 ? t / 86400 : (t - 86399) / 86400;
  std::int64_t sod = t - days * 86400;
  int y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lld", y, m,
                d, static_cast<long long>(sod / 3600),
                static_cast<long long>((sod / 60) % 60),
                static_cast<long long>(sod % 60));
  return buf;
}

std::int64_t civil_day(std::int64_t t) {
  return t >= 0 ? t / 86400 : (t - 86399) / 86400;
}

int day_of_week(std::int64_t t) {
  // epoch day 0 = 1970-01-01, a Thursday (index 3 with Monday = 0)
  std::int64_t d = civil_day(t);
  return static_cast<int>(((d % 7) + 7 + 3) % 7);
}

int SpeedField::n_days() const {
  return day_labels.empty() ? 0 : *std::max_element(day_labels.begin(),
                                                    day_labels.end()) +
                                      1;
}

std::vector<std::pair<int, int>> SpeedField::day_spans() const {
  std::vector<std::pair<int, int>> spans;
  int t = 0;
  const int T = n_times();
  while (t < T) {
    int begin = t;
    int label = day_labels[t];
    while (t < T && day_labels[t] == label) ++t;
    spans.emplace_back(begin, t);
  }
  return spans;
}

std::vector<int> SpeedField::weekend_days() const {
  std::vector<int> out;
  for (auto [begin, end] : day_spans()) {
    int dow = day_of_week(timestamps[begin]);
    if (dow >= 5) out.push_back(day_labels[begin]);
  }
  return out;
}

void SpeedField::validate() const {
  const int n = n_sensors();
  const int T = n_times();
  if (n < 1) throw DataError("speed field needs at least one sensor");
  if (static_cast<int>(mileposts.size()) != n ||
      speeds.rows() != n || missing.rows() != n)
    throw DataError("speed field sensor dimensions disagree");
  if (speeds.cols() != T || missing.cols() != T ||
      static_cast<int>(day_labels.size()) != T)
    throw DataError("speed field time dimensions disagree");
  if (step_minutes <= 0) throw DataError("time step must be positive");
  for (int i = 1; i < n; ++i)
    if (!(mileposts[i] > mileposts[i - 1]))
      throw DataError("mileposts must be strictly increasing");
  const std::int64_t step = static_cast<std::int64_t>(step_minutes) * 60;
  for (int t = 1; t < T; ++t) {
    if (timestamps[t] <= timestamps[t - 1])
      throw DataError("timestamps must be strictly increasing");
    bool same_day = civil_day(timestamps[t]) == civil_day(timestamps[t - 1]);
    if (same_day && timestamps[t] - timestamps[t - 1] != step)
      throw DataError("timestamps not equally spaced within a day");
    if (day_labels[t] < day_labels[t - 1])
      throw DataError("day labels must be non-decreasing");
  }
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < T; ++t)
      if (!missing(i, t) &&
          (!std::isfinite(speeds(i, t)) || speeds(i, t) < 0.0))
        throw DataError("present speeds must be finite and non-negative");
}

SpeedField load_speed_csv(const std::string& path, const CsvSchema& schema,
                          const std::string& metadata_path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file '" + path + "'");
  auto header = split_csv_line(trim(line));
  int col_time = -1, col_sensor = -1, col_speed = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::string h = trim(header[i]);
    if (h == schema.timestamp) col_time = static_cast<int>(i);
    else if (h == schema.sensor_id) col_sensor = static_cast<int>(i);
    else if (h == schema.speed) col_speed = static_cast<int>(i);
  }
  if (col_time < 0 || col_sensor < 0 || col_speed < 0)
    throw DataError("header must contain columns '" + schema.timestamp +
                    "', '" + schema.sensor_id + "', '" + schema.speed + "'");

  struct Cell {
    std::int64_t time;
    int sensor;
    double value;
    bool missing;
  };
  std::vector<Cell> cells;
  std::vector<std::string> sensor_order;
  std::unordered_map<std::string, int> sensor_index;
  std::set<std::int64_t> time_set;
  std::set<std::pair<int, std::int64_t>> seen;

  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    std::string stripped = trim(line);
    if (stripped.empty()) continue;
    auto fields = split_csv_line(stripped);
    int needed = std::max({col_time, col_sensor, col_speed});
    if (static_cast<int>(fields.size()) <= needed)
      throw DataError("row " + std::to_string(row_no) + ": too few columns");
    std::int64_t t;
    try {
      t = parse_iso8601(trim(fields[col_time]));
    } catch (const DataError& e) {
      throw DataError("row " + std::to_string(row_no) + ": " + e.what());
    }
    std::string sid = trim(fields[col_sensor]);
    if (sid.empty())
      throw DataError("row " + std::to_string(row_no) + ": empty sensor id");
    auto [it, inserted] =
        sensor_index.emplace(sid, static_cast<int>(sensor_order.size()));
    if (inserted) sensor_order.push_back(sid);
    int s = it->second;
    if (!seen.emplace(s, t).second)
      throw DataError("row " + std::to_string(row_no) +
                      ": duplicate (sensor, timestamp) = (" + sid + ", " +
                      format_iso8601(t) + ")");
    std::string sval = trim(fields[col_speed]);
    Cell c{t, s, 0.0, sval.empty()};
    if (!c.missing) {
      char* endp = nullptr;
      c.value = std::strtod(sval.c_str(), &endp);
      if (endp == sval.c_str() || *endp != '\0')
        throw DataError("row " + std::to_string(row_no) +
                        ": unparseable speed '" + sval + "'");
      if (!std::isfinite(c.value) || c.value < 0.0)
        throw DataError("row " + std::to_string(row_no) +
                        ": speed must be finite and non-negative");
    }
    cells.push_back(c);
    time_set.insert(t);
  }
  if (cells.empty()) throw DataError("no data rows in '" + path + "'");

  // Union time grid; spacing must be uniform within each calendar day.
  std::vector<std::int64_t> times(time_set.begin(), time_set.end());
  std::int64_t step = 0;
  for (std::size_t t = 1; t < times.size(); ++t) {
    if (civil_day(times[t]) == civil_day(times[t - 1])) {
      std::int64_t d = times[t] - times[t - 1];
      if (step == 0) step = d;
      else if (d != step)
        throw DataError("inconsistent time step: " +
                        std::to_string(d / 60) + " min at " +
                        format_iso8601(times[t]) + ", expected " +
                        std::to_string(step / 60) + " min");
    }
  }
  if (step == 0) step = 5 * 60;  // single instant per day: default 5 min
  if (step % 60 != 0) throw DataError("time step must be whole minutes");

  // Sensor ordering: by milepost when metadata given, else first appearance.
  int n = static_cast<int>(sensor_order.size());
  std::vector<double> mileposts(n);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (!metadata_path.empty()) {
    std::ifstream meta(metadata_path);
    if (!meta) throw DataError("cannot open '" + metadata_path + "'");
    std::string mline;
    if (!std::getline(meta, mline))
      throw DataError("empty metadata file '" + metadata_path + "'");
    auto mheader = split_csv_line(trim(mline));
    if (mheader.size() < 2 || trim(mheader[0]) != "sensor_id" ||
        trim(mheader[1]) != "milepost")
      throw DataError("metadata header must be 'sensor_id,milepost'");
    std::unordered_map<std::string, double> mp;
    std::size_t mrow = 1;
    while (std::getline(meta, mline)) {
      ++mrow;
      std::string st = trim(mline);
      if (st.empty()) continue;
      auto f = split_csv_line(st);
      if (f.size() < 2)
        throw DataError("metadata row " + std::to_string(mrow) +
                        ": too few columns");
      mp[trim(f[0])] = std::strtod(trim(f[1]).c_str(), nullptr);
    }
    for (int i = 0; i < n; ++i) {
      auto it = mp.find(sensor_order[i]);
      if (it == mp.end())
        throw DataError("no milepost for sensor '" + sensor_order[i] + "'");
      mileposts[i] = it->second;
    }
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return mileposts[a] < mileposts[b];
    });
    for (int i = 1; i < n; ++i)
      if (!(mileposts[order[i]] > mileposts[order[i - 1]]))
        throw DataError("mileposts must be strictly monotone");
  } else {
    for (int i = 0; i < n; ++i) mileposts[i] = static_cast<double>(i);
  }

  SpeedField field;
  field.step_minutes = static_cast<int>(step / 60);
  field.timestamps = times;
  field.sensor_ids.resize(n);
  field.mileposts.resize(n);
  std::vector<int> new_index(n);
  for (int i = 0; i < n; ++i) {
    field.sensor_ids[i] = sensor_order[order[i]];
    field.mileposts[i] = metadata_path.empty() ? static_cast<double>(i)
                                               : mileposts[order[i]];
    new_index[order[i]] = i;
  }
  const int T = static_cast<int>(times.size());
  field.speeds = Eigen::MatrixXd::Zero(n, T);
  field.missing = BoolGrid::Constant(n, T, true);
  std::unordered_map<std::int64_t, int> time_index;
  for (int t = 0; t < T; ++t) time_index[times[t]] = t;
  for (const Cell& c : cells) {
    if (c.missing) continue;
    field.speeds(new_index[c.sensor], time_index[c.time]) = c.value;
    field.missing(new_index[c.sensor], time_index[c.time]) = false;
  }
  field.day_labels.resize(T);
  int label = 0;
  for (int t = 0; t < T; ++t) {
    if (t > 0 && civil_day(times[t]) != civil_day(times[t - 1])) ++label;
    field.day_labels[t] = label;
  }
  field.validate();
  return field;
}

void export_speed_csv(const SpeedField& field, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "timestamp,sensor_id,speed\n";
  for (int t = 0; t < field.n_times(); ++t) {
    std::string ts = format_iso8601(field.timestamps[t]);
    for (int i = 0; i < field.n_sensors(); ++i) {
      out << ts << ',' << field.sensor_ids[i] << ',';
      if (!field.missing(i, t)) out << format_double(field.speeds(i, t));
      out << '\n';
    }
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

void export_wide_csv(const SpeedField& field, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "timestamp";
  for (const auto& id : field.sensor_ids) out << ',' << id;
  out << '\n';
  for (int t = 0; t < field.n_times(); ++t) {
    out << format_iso8601(field.timestamps[t]);
    for (int i = 0; i < field.n_sensors(); ++i) {
      out << ',';
      if (!field.missing(i, t)) out << format_double(field.speeds(i, t));
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

ImputeResult impute_spatial(const SpeedField& field) {
  ImputeResult result;
  result.field = field;
  const int n = field.n_sensors();
  const int T = field.n_times();
  const BoolGrid& was = field.missing;  // snapshot: no cascading
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < n; ++i) {
      if (!was(i, t)) continue;
      bool lower_ok = i > 0 && !was(i - 1, t);
      bool upper_ok = i + 1 < n && !was(i + 1, t);
      if (i == 0 || i == n - 1) {
        // boundary: copy the single neighbor when present
        int j = (i == 0) ? i + 1 : i - 1;
        if (j >= 0 && j < n && !was(j, t)) {
          result.field.speeds(i, t) = field.speeds(j, t);
          result.field.missing(i, t) = false;
        }
      } else if (lower_ok && upper_ok) {
        result.field.speeds(i, t) =
            0.5 * (field.speeds(i - 1, t) + field.speeds(i + 1, t));
        result.field.missing(i, t) = false;
      }
    }
  }
  for (int t = 0; t < T; ++t) {
    bool all_missing = true;
    for (int i = 0; i < n; ++i) {
      if (result.field.missing(i, t)) ++result.remaining_missing;
      else all_missing = false;
    }
    if (all_missing) result.fully_missing_columns.push_back(t);
  }
  return result;
}

SpeedField drop_bad_days(const SpeedField& field, double max_missing_frac,
                         const std::vector<int>& exclude_days) {
  if (max_missing_frac < 0.0 || max_missing_frac > 1.0)
    throw ParamError("max_missing_frac must be in [0, 1]");
  std::set<int> excluded(exclude_days.begin(), exclude_days.end());
  std::vector<int> keep_cols;
  std::map<int, int> relabel;
  for (auto [begin, end] : field.day_spans()) {
    int label = field.day_labels[begin];
    if (excluded.count(label)) continue;
    std::int64_t miss = 0;
    for (int t = begin; t < end; ++t)
      miss += field.missing.col(t).count();
    double frac = static_cast<double>(miss) /
                  (static_cast<double>(field.n_sensors()) * (end - begin));
    if (frac > max_missing_frac) continue;
    int new_label = static_cast<int>(relabel.size());
    relabel[label] = new_label;
    for (int t = begin; t < end; ++t) keep_cols.push_back(t);
  }
  if (keep_cols.empty()) throw DataError("all days removed");

  SpeedField out;
  out.sensor_ids = field.sensor_ids;
  out.mileposts = field.mileposts;
  out.step_minutes = field.step_minutes;
  const int n = field.n_sensors();
  const int T = static_cast<int>(keep_cols.size());
  out.timestamps.resize(T);
  out.day_labels.resize(T);
  out.speeds.resize(n, T);
  out.missing.resize(n, T);
  for (int t = 0; t < T; ++t) {
    int src = keep_cols[t];
    out.timestamps[t] = field.timestamps[src];
    out.day_labels[t] = relabel.at(field.day_labels[src]);
    out.speeds.col(t) = field.speeds.col(src);
    out.missing.col(t) = field.missing.col(src);
  }
  return out;
}

Eigen::MatrixXd LagDesign::raw_X() const {
  if (!standardization.active) return X;
  Eigen::MatrixXd raw = X;
  raw.array().rowwise() *= standardization.scale.transpose().array();
  raw.array().rowwise() += standardization.center.transpose().array();
  return raw;
}

std::vector<int> LagDesign::distinct_days() const {
  std::vector<int> days;
  for (int d : row_days)
    if (days.empty() || days.back() != d) days.push_back(d);
  std::sort(days.begin(), days.end());
  days.erase(std::unique(days.begin(), days.end()), days.end());
  return days;
}

namespace {

Standardization standardize_in_place(Eigen::MatrixXd& X) {
  Standardization st;
  st.active = true;
  const auto T = static_cast<double>(X.rows());
  st.center = X.colwise().mean();
  X.array().rowwise() -= st.center.transpose().array();
  st.scale = (X.array().square().colwise().sum() / T).sqrt();
  for (Eigen::Index j = 0; j < st.scale.size(); ++j)
    if (st.scale[j] <= 0.0) st.scale[j] = 1.0;
  X.array().rowwise() /= st.scale.transpose().array();
  return st;
}

}  // namespace

LagDesign build_lag_design(const SpeedField& field, int lag_count, int horizon,
                           const std::vector<int>& target_sensors,
                           bool standardize) {
  if (lag_count < 1) throw ParamError("lag count must be >= 1");
  if (horizon < 1) throw ParamError("horizon must be >= 1");
  if (target_sensors.empty()) throw ParamError("need at least one target");
  const int n = field.n_sensors();
  for (int s : target_sensors)
    if (s < 0 || s >= n) throw ParamError("target sensor out of range");

  auto spans = field.day_spans();
  std::size_t total_rows = 0;
  for (auto [begin, end] : spans) {
    int len = end - begin;
    if (len < lag_count + horizon)
      throw DataError("day " + std::to_string(field.day_labels[begin]) +
                      " has " + std::to_string(len) +
                      " steps, needs at least " +
                      std::to_string(lag_count + horizon));
    total_rows += static_cast<std::size_t>(len - (lag_count - 1) - horizon);
  }

  LagDesign design;
  design.lag_count = lag_count;
  design.horizon = horizon;
  design.target_sensors = target_sensors;
  design.sensor_ids = field.sensor_ids;
  const int p = n * lag_count;
  design.column_map.resize(p);
  for (int c = 0; c < p; ++c) design.column_map[c] = {c % n, c / n};
  design.X.resize(static_cast<Eigen::Index>(total_rows), p);
  design.y.resize(static_cast<Eigen::Index>(total_rows),
                  static_cast<Eigen::Index>(target_sensors.size()));
  design.row_days.resize(total_rows);
  design.row_times.resize(total_rows);

  auto require_present = [&](int sensor, int col) {
    if (field.missing(sensor, col))
      throw DataError("missing value at sensor '" + field.sensor_ids[sensor] +
                      "', time " + format_iso8601(field.timestamps[col]));
  };

  Eigen::Index r = 0;
  for (auto [begin, end] : spans) {
    for (int t = begin + lag_count - 1; t + horizon < end; ++t) {
      for (int lag = 0; lag < lag_count; ++lag) {
        for (int s = 0; s < n; ++s) {
          require_present(s, t - lag);
          design.X(r, lag * n + s) = field.speeds(s, t - lag);
        }
      }
      for (std::size_t j = 0; j < target_sensors.size(); ++j) {
        require_present(target_sensors[j], t + horizon);
        design.y(r, static_cast<Eigen::Index>(j)) =
            field.speeds(target_sensors[j], t + horizon);
      }
      design.row_days[static_cast<std::size_t>(r)] = field.day_labels[t];
      design.row_times[static_cast<std::size_t>(r)] =
          field.timestamps[t + horizon];
      ++r;
    }
  }
  if (standardize) design.standardization = standardize_in_place(design.X);
  return design;
}

std::pair<LagDesign, LagDesign> split_train_test(const LagDesign& design,
                                                 const SplitPolicy& policy) {
  auto days = design.distinct_days();
  if (days.size() < 2) throw DataError("need at least 2 distinct days to split");
  std::set<int> train_set;
  if (policy.kind == SplitPolicy::Kind::FirstHalfDays) {
    std::size_t n_train = (days.size() + 1) / 2;
    train_set.insert(days.begin(), days.begin() + static_cast<long>(n_train));
  } else {
    for (int d : policy.train_days) {
      if (!std::binary_search(days.begin(), days.end(), d))
        throw DataError("split policy names unknown day " + std::to_string(d));
      train_set.insert(d);
    }
    if (train_set.empty() || train_set.size() == days.size())
      throw DataError("split policy leaves an empty train or test side");
  }

  std::vector<int> train_rows, test_rows;
  for (std::size_t i = 0; i < design.row_days.size(); ++i) {
    if (train_set.count(design.row_days[i])) train_rows.push_back(static_cast<int>(i));
    else test_rows.push_back(static_cast<int>(i));
  }

  bool restandardize = design.standardization.active;
  Eigen::MatrixXd raw = restandardize ? design.raw_X() : design.X;

  auto subset = [&](const std::vector<int>& rows) {
    LagDesign part;
    part.lag_count = design.lag_count;
    part.horizon = design.horizon;
    part.target_sensors = design.target_sensors;
    part.sensor_ids = design.sensor_ids;
    part.column_map = design.column_map;
    part.X.resize(static_cast<Eigen::Index>(rows.size()), design.cols());
    part.y.resize(static_cast<Eigen::Index>(rows.size()), design.y.cols());
    part.row_days.resize(rows.size());
    part.row_times.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      part.X.row(static_cast<Eigen::Index>(i)) = raw.row(rows[i]);
      part.y.row(static_cast<Eigen::Index>(i)) = design.y.row(rows[i]);
      part.row_days[i] = design.row_days[static_cast<std::size_t>(rows[i])];
      part.row_times[i] = design.row_times[static_cast<std::size_t>(rows[i])];
    }
    return part;
  };

  LagDesign train = subset(train_rows);
  LagDesign test = subset(test_rows);
  if (restandardize) {
    // statistics from the train half only, applied to both
    Standardization st = standardize_in_place(train.X);
    test.X.array().rowwise() -= st.center.transpose().array();
    test.X.array().rowwise() /= st.scale.transpose().array();
    train.standardization = st;
    test.standardization = st;
  }
  return {std::move(train), std::move(test)};
}

LagDesign select_columns(const LagDesign& design,
                         const std::vector<int>& columns) {
  if (columns.empty()) throw ParamError("column selection must be non-empty");
  LagDesign out;
  out.lag_count = design.lag_count;
  out.horizon = design.horizon;
  out.target_sensors = design.target_sensors;
  out.sensor_ids = design.sensor_ids;
  out.y = design.y;
  out.row_days = design.row_days;
  out.row_times = design.row_times;
  out.X.resize(design.rows(), static_cast<Eigen::Index>(columns.size()));
  out.column_map.resize(columns.size());
  out.standardization.active = design.standardization.active;
  if (design.standardization.active) {
    out.standardization.center.resize(static_cast<Eigen::Index>(columns.size()));
    out.standardization.scale.resize(static_cast<Eigen::Index>(columns.size()));
  }
  for (std::size_t j = 0; j < columns.size(); ++j) {
    int c = columns[j];
    if (c < 0 || c >= design.cols())
      throw ParamError("selected column out of range");
    out.X.col(static_cast<Eigen::Index>(j)) = design.X.col(c);
    out.column_map[j] = design.column_map[static_cast<std::size_t>(c)];
    if (design.standardization.active) {
      out.standardization.center[static_cast<Eigen::Index>(j)] =
          design.standardization.center[c];
      out.standardization.scale[static_cast<Eigen::Index>(j)] =
          design.standardization.scale[c];
    }
  }
  return out;
}

LagDesign select_rows(const LagDesign& design, const std::vector<int>& rows) {
  LagDesign out;
  out.lag_count = design.lag_count;
  out.horizon = design.horizon;
  out.target_sensors = design.target_sensors;
  out.sensor_ids = design.sensor_ids;
  out.column_map = design.column_map;
  out.standardization = design.standardization;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), design.cols());
  out.y.resize(static_cast<Eigen::Index>(rows.size()), design.y.cols());
  out.row_days.resize(rows.size());
  out.row_times.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    int r = rows[i];
    if (r < 0 || r >= design.rows()) throw ParamError("row index out of range");
    out.X.row(static_cast<Eigen::Index>(i)) = design.X.row(r);
    out.y.row(static_cast<Eigen::Index>(i)) = design.y.row(r);
    out.row_days[i] = design.row_days[static_cast<std::size_t>(r)];
    out.row_times[i] = design.row_times[static_cast<std::size_t>(r)];
  }
  return out;
}

}  // namespace flowcast::data
