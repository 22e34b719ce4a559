#include "robreg/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "robreg/diagnostics.hpp"
#include "robreg/rng.hpp"

namespace robreg {

const char* const kRecordsCsvHeader =
    "eps,n,d,attack,estimator,seed,l2_error,mu_error,lambda_max,runtime_ms,converged";

std::string estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::two_step: return "two_step";
    case EstimatorKind::plain_huber: return "plain_huber";
    case EstimatorKind::ols: return "ols";
    case EstimatorKind::oracle_huber_on_clean: return "oracle_huber_on_clean";
  }
  return "two_step";
}

EstimatorKind estimator_from_name(const std::string& name) {
  if (name == "two_step") return EstimatorKind::two_step;
  if (name == "plain_huber") return EstimatorKind::plain_huber;
  if (name == "ols") return EstimatorKind::ols;
  if (name == "oracle_huber_on_clean") return EstimatorKind::oracle_huber_on_clean;
  throw InvalidInput("unknown estimator: " + name);
}

Eigen::VectorXd ExperimentSpec::beta_star(Eigen::Index d) const {
  if (beta_kind == BetaKind::first_axis)
    return beta_scale * Eigen::VectorXd::Unit(d, 0);
  return (beta_scale / std::sqrt(static_cast<double>(d))) *
         Eigen::VectorXd::Ones(d);
}

void ExperimentSpec::validate() const {
  if (contamination_grid.empty()) throw InvalidInput("sweep: empty contamination grid");
  if (sizes.empty()) throw InvalidInput("sweep: empty size list");
  if (estimators.empty()) throw InvalidInput("sweep: empty estimator list");
  if (seeds.empty()) throw InvalidInput("sweep: empty seed list");
  std::vector<std::uint64_t> sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw InvalidInput("sweep: seeds must be distinct");
  for (const auto& c : contamination_grid) c.validate();
}

namespace {

struct Task {
  std::size_t cell_index;
  std::size_t seed_index;
  std::size_t cont_index;
  std::size_t size_index;
};

std::vector<ExperimentRecord> run_task(const ExperimentSpec& spec, const Task& task) {
  const auto& cont = spec.contamination_grid[task.cont_index];
  const auto [n, d] = spec.sizes[task.size_index];
  const std::uint64_t seed_value = spec.seeds[task.seed_index];
  const std::uint64_t task_seed = Rng::derive_stream(
      spec.master_seed, static_cast<std::uint64_t>(task.cell_index), seed_value);

  const Eigen::VectorXd beta = spec.beta_star(d);
  OracleInstance inst =
      generate(spec.generator, n, d, beta, Rng::derive_stream(task_seed, 0, 0));
  ContaminationSpec cont_seeded = cont;
  cont_seeded.seed = Rng::derive_stream(task_seed, 1, 0);
  inst = contaminate(inst, cont_seeded);

  std::vector<ExperimentRecord> records;
  records.reserve(spec.estimators.size());
  for (std::size_t e = 0; e < spec.estimators.size(); ++e) {
    const EstimatorKind kind = spec.estimators[e];
    ExperimentRecord rec;
    rec.eps = cont.eps;
    rec.n = n;
    rec.d = d;
    rec.attack = attack_name(cont.attack);
    rec.estimator = estimator_name(kind);
    rec.seed = seed_value;
    rec.lambda_max = std::numeric_limits<double>::quiet_NaN();

    const auto started = std::chrono::steady_clock::now();
    try {
      EstimationResult est;
      switch (kind) {
        case EstimatorKind::two_step: {
          RobustWeightConfig rw_cfg = spec.rw_cfg;
          rw_cfg.seed = Rng::derive_stream(task_seed, 2, e);
          est = two_step_estimate(inst.dataset, cont.eps, rw_cfg, spec.huber_cfg);
          rec.lambda_max = est.robust_stage->lambda_max;
          break;
        }
        case EstimatorKind::plain_huber:
          est = plain_huber_fit(inst.dataset, spec.huber_cfg);
          break;
        case EstimatorKind::ols:
          est = ols_fit(inst.dataset);
          break;
        case EstimatorKind::oracle_huber_on_clean: {
          Dataset clean;
          clean.X = inst.x_clean;
          clean.y = inst.x_clean * inst.beta_star + inst.xi;
          est = plain_huber_fit(clean, spec.huber_cfg);
          break;
        }
      }
      const ErrorMetrics metrics = error_metrics(est, inst);
      rec.l2_error = metrics.l2_error;
      rec.mu_error = metrics.mu_error;
      rec.converged = est.converged;
    } catch (const std::exception&) {
      rec.l2_error = std::numeric_limits<double>::quiet_NaN();
      rec.mu_error = std::numeric_limits<double>::quiet_NaN();
      rec.converged = false;
    }
    rec.runtime_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - started)
                         .count();
    records.push_back(std::move(rec));
  }
  return records;
}

void append_record(std::ofstream& out, const ExperimentRecord& r) {
  out << r.eps << ',' << r.n << ',' << r.d << ',' << r.attack << ','
      << r.estimator << ',' << r.seed << ',' << r.l2_error << ',' << r.mu_error
      << ',' << r.lambda_max << ',' << r.runtime_ms << ','
      << (r.converged ? 1 : 0) << '\n';
  out.flush();
}

}  // namespace

std::vector<ExperimentRecord> run_sweep(const ExperimentSpec& spec,
                                        const std::string& records_csv_path,
                                        int workers) {
  spec.validate();

  std::vector<Task> tasks;
  std::size_t cell_index = 0;
  for (std::size_t ci = 0; ci < spec.contamination_grid.size(); ++ci) {
    for (std::size_t si = 0; si < spec.sizes.size(); ++si, ++cell_index) {
      for (std::size_t ki = 0; ki < spec.seeds.size(); ++ki)
        tasks.push_back(Task{cell_index, ki, ci, si});
    }
  }

  std::ofstream out;
  if (!records_csv_path.empty()) {
    out.open(records_csv_path);
    if (!out) throw InvalidInput(records_csv_path + ": cannot open for writing");
    out.precision(17);
    out << "# schema_version=1\n" << kRecordsCsvHeader << "\n";
    out.flush();
  }

  std::vector<std::vector<ExperimentRecord>> results(tasks.size());
  const int thread_count = std::max(
      1, std::min<int>(workers, static_cast<int>(tasks.size())));

  if (thread_count == 1) {
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      results[t] = run_task(spec, tasks[t]);
      if (out.is_open())
        for (const auto& r : results[t]) append_record(out, r);
    }
  } else {
    std::atomic<std::size_t> next_task{0};
    std::mutex mu;
    std::condition_variable cv;
    std::vector<bool> done(tasks.size(), false);

    auto worker = [&] {
      for (;;) {
        const std::size_t t = next_task.fetch_add(1);
        if (t >= tasks.size()) return;
        auto records = run_task(spec, tasks[t]);
        {
          std::lock_guard<std::mutex> lock(mu);
          results[t] = std::move(records);
          done[t] = true;
        }
        cv.notify_one();
      }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(thread_count));
    for (int i = 0; i < thread_count; ++i) pool.emplace_back(worker);

    // Ordered appender: emit each task's records once every earlier task
    // has been emitted, so the file contents never depend on scheduling.
    std::size_t next_write = 0;
    {
      std::unique_lock<std::mutex> lock(mu);
      while (next_write < tasks.size()) {
        cv.wait(lock, [&] { return done[next_write]; });
        while (next_write < tasks.size() && done[next_write]) {
          if (out.is_open())
            for (const auto& r : results[next_write]) append_record(out, r);
          ++next_write;
        }
      }
    }
    for (auto& th : pool) th.join();
  }

  std::vector<ExperimentRecord> flat;
  for (auto& group : results)
    for (auto& r : group) flat.push_back(std::move(r));
  return flat;
}

double median_of(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2]
                    : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

double quantile_type7(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return (1.0 - frac) * sorted[lo] + frac * sorted[hi];
}

}  // namespace

double iqr_of(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  return quantile_type7(values, 0.75) - quantile_type7(values, 0.25);
}

std::vector<SummaryRow> summarize(const std::vector<ExperimentRecord>& records) {
  using Key = std::tuple<double, Eigen::Index, Eigen::Index, std::string, std::string>;
  std::map<Key, std::vector<double>> cells;
  for (const auto& r : records) {
    if (std::isnan(r.l2_error)) continue;
    cells[Key{r.eps, r.n, r.d, r.attack, r.estimator}].push_back(r.l2_error);
  }
  std::vector<SummaryRow> rows;
  rows.reserve(cells.size());
  for (auto& [key, errors] : cells) {
    SummaryRow row;
    row.eps = std::get<0>(key);
    row.n = std::get<1>(key);
    row.d = std::get<2>(key);
    row.attack = std::get<3>(key);
    row.estimator = std::get<4>(key);
    row.n_seeds = static_cast<int>(errors.size());
    row.median_error = median_of(errors);
    row.iqr = iqr_of(errors);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_records_csv(const std::vector<ExperimentRecord>& records,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput(path + ": cannot open for writing");
  out.precision(17);
  out << "# schema_version=1\n" << kRecordsCsvHeader << "\n";
  for (const auto& r : records) append_record(out, r);
}

std::vector<ExperimentRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput(path + ": cannot open file");
  std::vector<ExperimentRecord> records;
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!saw_header) {
      if (line != kRecordsCsvHeader)
        throw InvalidInput(path + ": unexpected records header");
      saw_header = true;
      continue;
    }
    std::istringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 11) throw InvalidInput(path + ": ragged record row");
    ExperimentRecord r;
    r.eps = std::stod(cells[0]);
    r.n = static_cast<Eigen::Index>(std::stoll(cells[1]));
    r.d = static_cast<Eigen::Index>(std::stoll(cells[2]));
    r.attack = cells[3];
    r.estimator = cells[4];
    r.seed = static_cast<std::uint64_t>(std::stoull(cells[5]));
    r.l2_error = std::stod(cells[6]);
    r.mu_error = std::stod(cells[7]);
    r.lambda_max = std::stod(cells[8]);
    r.runtime_ms = std::stod(cells[9]);
    r.converged = cells[10] == "1";
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace robreg
