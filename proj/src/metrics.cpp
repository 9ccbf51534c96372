#include "aimd/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace aimd {

TraceRecorder::TraceRecorder(RecorderOptions options) : options_(std::move(options)) {
  if (options_.stride == 0) throw ConfigError("recorder: stride must be >= 1");
  std::sort(options_.extra_steps.begin(), options_.extra_steps.end());
}

void TraceRecorder::begin(const TraceRecord& initial) {
  initial_ = initial;
  series_.clear();
  snapshots_.clear();
  series_.reserve(options_.horizon);
}

bool TraceRecorder::wants_matrices(std::uint64_t step) const {
  if (step % options_.stride == 0) return true;
  if (step == options_.horizon) return true;
  if (step + options_.window > options_.horizon) return true;
  return std::binary_search(options_.extra_steps.begin(), options_.extra_steps.end(), step);
}

void TraceRecorder::record(const TraceRecord& rec) {
  series_.push_back(StepSummary{rec.step, rec.totals, rec.avg_totals, rec.bits_broadcast, rec.signal,
                                rec.expected_totals});
  if (rec.has_matrices()) snapshots_.push_back(rec);
}

const TraceRecord* TraceRecorder::snapshot_at(std::uint64_t step) const {
  if (step == 0) return &initial_;
  auto it = std::lower_bound(snapshots_.begin(), snapshots_.end(), step,
                             [](const TraceRecord& r, std::uint64_t s) { return r.step < s; });
  return (it != snapshots_.end() && it->step == step) ? &*it : nullptr;
}

const TraceRecord* TraceRecorder::last_snapshot() const {
  return snapshots_.empty() ? &initial_ : &snapshots_.back();
}

namespace {

void check_same_shape(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ConfigError("metrics: matrix shapes differ");
}

std::vector<double> row_of(const Matrix& x, Eigen::Index i) {
  std::vector<double> r(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index c = 0; c < x.cols(); ++c) r[static_cast<std::size_t>(c)] = x(i, c);
  return r;
}

}  // namespace

Matrix convergence_error(const Matrix& avg, const Matrix& oracle) {
  check_same_shape(avg, oracle);
  return (avg - oracle).cwiseAbs();
}

Matrix relative_error(const Matrix& avg, const Matrix& oracle, double floor) {
  check_same_shape(avg, oracle);
  Matrix out(avg.rows(), avg.cols());
  for (Eigen::Index i = 0; i < avg.rows(); ++i)
    for (Eigen::Index j = 0; j < avg.cols(); ++j)
      out(i, j) = std::abs(avg(i, j) - oracle(i, j)) / std::max(oracle(i, j), floor);
  return out;
}

std::vector<Spread> gradient_spread(const Matrix& avg, std::span<const PolynomialCost> costs) {
  if (static_cast<std::size_t>(avg.rows()) != costs.size())
    throw ConfigError("gradient_spread: need one cost per agent");
  const auto m = static_cast<std::size_t>(avg.cols());
  std::vector<Spread> out(m);
  if (costs.empty()) return out;
  std::vector<double> sum(m, 0.0);
  std::vector<double> sq(m, 0.0);
  std::vector<std::vector<double>> grads;
  grads.reserve(costs.size());
  for (Eigen::Index i = 0; i < avg.rows(); ++i) {
    grads.push_back(costs[static_cast<std::size_t>(i)].gradient(row_of(avg, i)));
    for (std::size_t j = 0; j < m; ++j) sum[j] += grads.back()[j];
  }
  const double n = static_cast<double>(costs.size());
  for (std::size_t j = 0; j < m; ++j) {
    out[j].mean = sum[j] / n;
    for (const auto& g : grads) sq[j] += (g[j] - out[j].mean) * (g[j] - out[j].mean);
    out[j].stddev = std::sqrt(sq[j] / n);
  }
  return out;
}

std::vector<Spread> gradient_spread(const TraceRecord& rec, std::span<const PolynomialCost> costs) {
  if (!rec.has_matrices()) throw ConfigError("gradient_spread: record has no matrices");
  return gradient_spread(rec.avg, costs);
}

double cost_ratio(const Matrix& avg, const Matrix& oracle, std::span<const PolynomialCost> costs) {
  check_same_shape(avg, oracle);
  const double denom = objective(costs, oracle);
  if (!(denom > 0.0)) throw NumericError("cost_ratio: optimal cost is not positive");
  return objective(costs, avg) / denom;
}

std::vector<double> capacity_tracking(std::span<const double> avg_totals, const SystemConfig& spec) {
  if (avg_totals.size() != spec.m) throw ConfigError("capacity_tracking: length != m");
  std::vector<double> out(spec.m);
  for (std::size_t j = 0; j < spec.m; ++j)
    out[j] = std::abs(avg_totals[j] - spec.resources[j].capacity) / spec.resources[j].capacity;
  return out;
}

namespace {

void mismatch(ReplayReport& r, double err, const std::string& what) {
  ++r.mismatches;
  r.max_error = std::max(r.max_error, err);
  if (r.first_mismatch.empty()) r.first_mismatch = what;
}

}  // namespace

ReplayReport verify_snapshot_totals(const TraceRecorder& trace) {
  ReplayReport r;
  auto check = [&](const TraceRecord& rec) {
    for (Eigen::Index j = 0; j < rec.alloc.cols(); ++j) {
      ++r.checked;
      const double t = rec.alloc.col(j).sum();
      const double a = rec.avg.col(j).sum();
      const auto ju = static_cast<std::size_t>(j);
      if (t != rec.totals[ju] || a != rec.avg_totals[ju]) {
        std::ostringstream os;
        os << "step " << rec.step << " resource " << j << ": totals " << rec.totals[ju] << " vs " << t;
        mismatch(r, std::max(std::abs(t - rec.totals[ju]), std::abs(a - rec.avg_totals[ju])), os.str());
      }
    }
  };
  check(trace.initial());
  for (const auto& rec : trace.snapshots()) check(rec);
  return r;
}

ReplayReport verify_divisible_signals(const TraceRecorder& trace, const SystemConfig& spec) {
  ReplayReport r;
  std::vector<double> prev = trace.initial().totals;
  for (const auto& row : trace.series()) {
    ++r.checked;
    std::uint64_t bits = 0;
    bool ok = row.signal.mode == Mode::Divisible && row.signal.bits.size() == spec.m;
    for (std::size_t j = 0; ok && j < spec.m; ++j) {
      const bool expect = prev[j] > spec.resources[j].headroom * spec.resources[j].capacity;
      ok = row.signal.bits[j] == expect;
      bits += row.signal.bits[j] ? 1U : 0U;
    }
    if (ok && (bits != row.bits_broadcast || bits > spec.m)) ok = false;
    if (!ok) {
      std::ostringstream os;
      os << "step " << row.step << ": signal/bit count does not replay";
      mismatch(r, 1.0, os.str());
    }
    prev = row.totals;
  }
  return r;
}

ReplayReport verify_binary_bits(const TraceRecorder& trace, std::size_t m, unsigned mu_bits) {
  ReplayReport r;
  const std::uint64_t expect = static_cast<std::uint64_t>(mu_bits) * m;
  for (const auto& row : trace.series()) {
    ++r.checked;
    if (row.bits_broadcast != expect) {
      std::ostringstream os;
      os << "step " << row.step << ": " << row.bits_broadcast << " bits, expected " << expect;
      mismatch(r, static_cast<double>(row.bits_broadcast), os.str());
    }
  }
  return r;
}

ReplayReport verify_omega_telescoping(const TraceRecorder& trace, const SystemConfig& spec,
                                      std::span<const double> tau, std::span<const double> omega0,
                                      double rel_tol) {
  if (tau.size() != spec.m || omega0.size() != spec.m)
    throw ConfigError("verify_omega_telescoping: tau/omega0 length != m");
  ReplayReport r;
  std::vector<double> cumulative(spec.m, 0.0);
  std::vector<double> prev = trace.initial().totals;
  for (const auto& row : trace.series()) {
    for (std::size_t j = 0; j < spec.m; ++j) {
      const ResourceSpec& res = spec.resources[j];
      cumulative[j] += prev[j] - res.headroom * res.capacity;
      const double predicted = -tau[j] * cumulative[j];
      const double actual = row.signal.omega.at(j) - omega0[j];
      const double scale = std::max({std::abs(predicted), std::abs(omega0[j]), 1e-300});
      const double err = std::abs(actual - predicted) / scale;
      ++r.checked;
      r.max_error = std::max(r.max_error, err);
      if (err >= rel_tol) {
        std::ostringstream os;
        os << "step " << row.step << " resource " << j << ": relative error " << err;
        mismatch(r, err, os.str());
      }
    }
    prev = row.totals;
  }
  return r;
}

ReplayReport verify_finite(const TraceRecorder& trace) {
  ReplayReport r;
  auto finite_all = [](const auto& values) {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
  };
  for (const auto& row : trace.series()) {
    ++r.checked;
    if (!finite_all(row.totals) || !finite_all(row.avg_totals) || !finite_all(row.signal.omega) ||
        !finite_all(row.expected_totals))
      mismatch(r, 0.0, "step " + std::to_string(row.step) + ": non-finite summary value");
  }
  for (const auto& rec : trace.snapshots()) {
    ++r.checked;
    if (!rec.alloc.allFinite() || !rec.avg.allFinite())
      mismatch(r, 0.0, "step " + std::to_string(rec.step) + ": non-finite matrix entry");
  }
  return r;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i != 0) out_ << ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\n\r") == std::string::npos) {
      out_ << f;
      continue;
    }
    out_ << '"';
    for (char c : f) {
      if (c == '"') out_ << '"';
      out_ << c;
    }
    out_ << '"';
  }
  out_ << '\n';
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ConfigError("csv: missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool any = false;
  char c = 0;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      fields.push_back(std::move(field));
      field.clear();
      records.push_back(std::move(fields));
      fields.clear();
      any = false;
    } else if (c != '\r') {
      field += c;
    }
  }
  if (quoted) throw ConfigError("csv: unterminated quoted field");
  if (any) {
    fields.push_back(std::move(field));
    records.push_back(std::move(fields));
  }
  CsvTable table;
  if (records.empty()) return table;
  table.header = std::move(records.front());
  table.rows.assign(std::make_move_iterator(records.begin() + 1), std::make_move_iterator(records.end()));
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return parse_csv(in);
}

}  // namespace aimd
