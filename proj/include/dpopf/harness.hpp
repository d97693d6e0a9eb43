// Copyright 2026 The dpopf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#pragma once

// Experiment driver behind the command-line tool: Monte-Carlo runs with
// pre-assigned seeds, metrics against the centralized optimum, and CSV
// output that the harness can read back.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpopf/adversary.hpp"
#include "dpopf/algorithms.hpp"
#include "dpopf/case_io.hpp"
#include "dpopf/opf.hpp"
#include "dpopf/parallel.hpp"
#include "dpopf/privacy.hpp"

namespace dpopf {

struct ExperimentConfig {
  std::string case_path;
  std::string zones_path;
  Algorithm algorithm = Algorithm::Admm;
  AdmmConfig admm;
  PrivacyParams privacy;
  int runs = 1;
  std::string out_dir = ".";

  void validate() const {
    if (runs < 1) throw std::invalid_argument("runs must be >= 1");
    admm.validate();
    privacy.validate();
  }

  // Run r uses privacy.seed + r.
  std::uint64_t seed_for(int run) const {
    return privacy.seed + static_cast<std::uint64_t>(run);
  }
};

struct RunMetrics {
  int run = 0;
  std::uint64_t seed = 0;
  int iterations = 0;
  bool converged = false;
  double cost = 0.0;
  double central_cost = 0.0;
  // |cost - cost*| / cost* in percent; cost_gap_pct keeps the sign.
  double optimality_loss_pct = 0.0;
  double cost_gap_pct = 0.0;
  double final_residual = 0.0;
};

inline RunMetrics run_metrics(const AdmmResult& r, double central_cost, int run,
                              std::uint64_t seed) {
  RunMetrics m;
  m.run = run;
  m.seed = seed;
  m.iterations = r.state.iter;
  m.converged = r.state.converged;
  m.cost = r.state.cost;
  m.central_cost = central_cost;
  const double denom = std::abs(central_cost) > 0.0 ? std::abs(central_cost) : 1.0;
  m.cost_gap_pct = 100.0 * (r.state.cost - central_cost) / denom;
  m.optimality_loss_pct = std::abs(m.cost_gap_pct);
  m.final_residual = r.state.residuals.empty() ? 0.0 : r.state.residuals.back();
  return m;
}

struct EnvelopeRow {
  int iter = 0;
  int runs = 0;  // runs still iterating
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

// Residual spread across runs at each iteration, over the runs that reached
// it.
inline std::vector<EnvelopeRow> residual_envelope(const std::vector<AdmmResult>& runs) {
  std::size_t len = 0;
  for (const AdmmResult& r : runs) len = std::max(len, r.trace.size());
  std::vector<EnvelopeRow> out;
  for (std::size_t k = 0; k < len; ++k) {
    EnvelopeRow row;
    row.min = std::numeric_limits<double>::infinity();
    row.max = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (const AdmmResult& r : runs) {
      if (k >= r.trace.size()) continue;
      const double v = r.trace[k].residual;
      row.iter = r.trace[k].iter;
      ++row.runs;
      sum += v;
      row.min = std::min(row.min, v);
      row.max = std::max(row.max, v);
    }
    row.mean = sum / row.runs;
    out.push_back(row);
  }
  return out;
}

struct RunBatch {
  NetworkCase network;
  double central_cost = 0.0;
  std::vector<AdmmResult> results;
  std::vector<RunMetrics> metrics;
};

inline RunBatch run_batch(const NetworkCase& c, const ZonePartition& part,
                          const ExperimentConfig& cfg) {
  cfg.validate();
  RunBatch b;
  b.network = c;
  b.central_cost = solve_centralized(c, cfg.admm.qp).cost;
  const auto n = static_cast<std::size_t>(cfg.runs);
  b.results.resize(n);
  parallel_for(n, [&](std::size_t r) {
    PrivacyParams p = cfg.privacy;
    p.seed = cfg.seed_for(static_cast<int>(r));
    b.results[r] = run_algorithm(c, part, cfg.algorithm, cfg.admm, p);
  });
  for (std::size_t r = 0; r < n; ++r) {
    b.metrics.push_back(run_metrics(b.results[r], b.central_cost, static_cast<int>(r),
                                    cfg.seed_for(static_cast<int>(r))));
  }
  return b;
}

// ---- CSV ----

inline void write_metrics_csv(std::ostream& out, const std::vector<RunMetrics>& ms) {
  out << "run,seed,iterations,converged,cost,central_cost,optimality_loss_pct,"
         "cost_gap_pct,final_residual\n";
  out.precision(17);
  for (const RunMetrics& m : ms) {
    out << m.run << ',' << m.seed << ',' << m.iterations << ',' << (m.converged ? 1 : 0)
        << ',' << m.cost << ',' << m.central_cost << ',' << m.optimality_loss_pct << ','
        << m.cost_gap_pct << ',' << m.final_residual << '\n';
  }
}

inline void write_envelope_csv(std::ostream& out, const std::vector<EnvelopeRow>& rows) {
  out << "iter,runs,min,mean,max\n";
  out.precision(17);
  for (const EnvelopeRow& r : rows) {
    out << r.iter << ',' << r.runs << ',' << r.min << ',' << r.mean << ',' << r.max << '\n';
  }
}

// Plain comma-separated table with a header row. No quoting: none of the
// files written here need it.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::invalid_argument("no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
  double number(std::size_t row, const std::string& name) const {
    return std::stod(rows.at(row).at(column(name)));
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty CSV");
  t.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split_csv_line(line);
    if (row.size() != t.header.size()) {
      throw std::invalid_argument("CSV row has " + std::to_string(row.size()) +
                                  " cells, header has " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  return read_csv(in);
}

inline std::vector<RunMetrics> read_metrics_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  std::vector<RunMetrics> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    RunMetrics m;
    m.run = std::stoi(t.rows[i][t.column("run")]);
    m.seed = std::stoull(t.rows[i][t.column("seed")]);
    m.iterations = std::stoi(t.rows[i][t.column("iterations")]);
    m.converged = t.rows[i][t.column("converged")] == "1";
    m.cost = t.number(i, "cost");
    m.central_cost = t.number(i, "central_cost");
    m.optimality_loss_pct = t.number(i, "optimality_loss_pct");
    m.cost_gap_pct = t.number(i, "cost_gap_pct");
    m.final_residual = t.number(i, "final_residual");
    out.push_back(m);
  }
  return out;
}

inline std::vector<EnvelopeRow> read_envelope_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  std::vector<EnvelopeRow> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    out.push_back({std::stoi(t.rows[i][t.column("iter")]),
                   std::stoi(t.rows[i][t.column("runs")]), t.number(i, "min"),
                   t.number(i, "mean"), t.number(i, "max")});
  }
  return out;
}

// Alphas, budgets and errors in MW as written by write_error_matrix_csv.
struct ErrorTable {
  std::vector<double> alphas;
  std::vector<int> budgets;
  std::vector<std::vector<double>> error_mw;
};

inline ErrorTable read_error_matrix_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  if (t.header.empty() || t.header[0] != "alpha") {
    throw std::invalid_argument("error matrix must start with an alpha column");
  }
  ErrorTable e;
  for (std::size_t j = 1; j < t.header.size(); ++j) e.budgets.push_back(std::stoi(t.header[j]));
  for (const auto& row : t.rows) {
    e.alphas.push_back(std::stod(row[0]));
    std::vector<double> vals;
    for (std::size_t j = 1; j < row.size(); ++j) vals.push_back(std::stod(row[j]));
    e.error_mw.push_back(std::move(vals));
  }
  return e;
}

// Inferred loads behind each cell of the error matrix, in MW.
inline void write_inferred_csv(std::ostream& out, const ErrorMatrix& m) {
  out << "alpha,budget,run,inferred_mw,true_mw\n";
  out.precision(17);
  for (std::size_t a = 0; a < m.alphas.size(); ++a) {
    for (std::size_t t = 0; t < m.budgets.size(); ++t) {
      for (std::size_t r = 0; r < m.inferred[a][t].size(); ++r) {
        out << m.alphas[a] << ',' << m.budgets[t] << ',' << r << ','
            << m.inferred[a][t][r] * m.base_mva << ',' << m.true_load * m.base_mva << '\n';
      }
    }
  }
}

// ---- output files ----

// Files written by one command. Unless commit() is called, the destructor
// removes them, and the output directory too if this set created it.
class OutputSet {
 public:
  explicit OutputSet(const std::string& dir) : dir_(dir) {
    namespace fs = std::filesystem;
    if (!fs::exists(dir_)) {
      fs::create_directories(dir_);
      created_dir_ = true;
    } else if (!fs::is_directory(dir_)) {
      throw std::invalid_argument(dir + " is not a directory");
    }
  }
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;
  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& p : written_) std::filesystem::remove(p, ec);
    if (created_dir_) std::filesystem::remove_all(dir_, ec);
  }

  template <typename Fn>
  std::filesystem::path write(const std::string& name, Fn&& fill) {
    const std::filesystem::path path = dir_ / name;
    written_.push_back(path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    fill(out);
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path.string());
    return path;
  }

  void commit() { committed_ = true; }
  const std::vector<std::filesystem::path>& files() const { return written_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> written_;
  bool created_dir_ = false;
  bool committed_ = false;
};

// ---- commands ----

// trace_run<r>.csv per run, envelope.csv and metrics.csv.
inline RunBatch cmd_run(const ExperimentConfig& cfg) {
  cfg.validate();
  const NetworkCase c = load_case_file(cfg.case_path);
  const ZonePartition part = load_partition_file(cfg.zones_path);
  OutputSet out(cfg.out_dir);
  RunBatch b = run_batch(c, part, cfg);
  for (std::size_t r = 0; r < b.results.size(); ++r) {
    out.write("trace_run" + std::to_string(r) + ".csv",
              [&](std::ostream& o) { write_trace_csv(o, b.results[r]); });
  }
  out.write("envelope.csv",
            [&](std::ostream& o) { write_envelope_csv(o, residual_envelope(b.results)); });
  out.write("metrics.csv", [&](std::ostream& o) { write_metrics_csv(o, b.metrics); });
  out.commit();
  return b;
}

struct AttackCommand {
  BusId target_bus = 0;
  std::vector<int> budgets{1};
  std::vector<double> alphas{0.0};
  double upsilon = 1e6;
};

// attack_errors.csv (mean error matrix) and attack_inferred.csv.
inline ErrorMatrix cmd_attack(const ExperimentConfig& cfg, const AttackCommand& atk) {
  cfg.validate();
  const NetworkCase c = load_case_file(cfg.case_path);
  const ZonePartition part = load_partition_file(cfg.zones_path);
  OutputSet out(cfg.out_dir);
  SweepSettings s;
  s.algorithm = cfg.algorithm;
  s.admm = cfg.admm;
  s.privacy = cfg.privacy;
  s.target_bus = atk.target_bus;
  s.budgets = atk.budgets;
  s.alphas = atk.alphas;
  s.runs = cfg.runs;
  s.upsilon = atk.upsilon;
  const ErrorMatrix m = attack_sweep(c, part, s);
  out.write("attack_errors.csv", [&](std::ostream& o) { write_error_matrix_csv(o, m); });
  out.write("attack_inferred.csv", [&](std::ostream& o) { write_inferred_csv(o, m); });
  out.commit();
  return m;
}

struct SensitivitySummary {
  int run = 0;
  ZoneId zone = 0;
  double max_local = 0.0;
  double global_bound = 0.0;
};

// Dynamic runs only. sensitivity_run<r>.csv per run and
// sensitivity_summary.csv with the per-zone maximum next to the global bound.
inline std::vector<SensitivitySummary> cmd_sensitivity(const ExperimentConfig& cfg) {
  ExperimentConfig dp = cfg;
  dp.algorithm = Algorithm::DpAdmm;
  dp.validate();
  const NetworkCase c = load_case_file(cfg.case_path);
  const ZonePartition part = load_partition_file(cfg.zones_path);
  OutputSet out(cfg.out_dir);
  const RunBatch b = run_batch(c, part, dp);
  std::vector<SensitivitySummary> summary;
  for (std::size_t r = 0; r < b.results.size(); ++r) {
    const AdmmResult& res = b.results[r];
    out.write("sensitivity_run" + std::to_string(r) + ".csv",
              [&](std::ostream& o) { write_sensitivity_csv(o, res); });
    const std::vector<double> local = max_local_sensitivity(res);
    const std::vector<double> global = global_bounds(c, res.zones);
    for (std::size_t z = 0; z < res.zones.size(); ++z) {
      summary.push_back({static_cast<int>(r), res.zones[z].zone_id, local[z], global[z]});
    }
  }
  out.write("sensitivity_summary.csv", [&](std::ostream& o) {
    o << "run,zone,max_local,global_bound\n";
    o.precision(17);
    for (const auto& s : summary) {
      o << s.run << ',' << s.zone << ',' << s.max_local << ',' << s.global_bound << '\n';
    }
  });
  out.commit();
  return summary;
}

// MATPOWER (or JSON) case in, JSON case out.
inline NetworkCase cmd_convert(const std::string& in_path, const std::string& out_path) {
  const NetworkCase c = load_case_file(in_path);
  const std::string text = serialize_case_json(c);
  if (parse_case_json(text) != c) {
    throw CaseError(in_path, "converted case does not read back identically");
  }
  const std::filesystem::path out(out_path);
  std::ofstream f(out, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + out_path);
  f << text;
  f.flush();
  if (!f) {
    f.close();
    std::error_code ec;
    std::filesystem::remove(out, ec);
    throw std::runtime_error("write failed: " + out_path);
  }
  return c;
}

}  // namespace dpopf
