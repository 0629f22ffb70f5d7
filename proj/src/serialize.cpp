#include "fbmseq/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace fbmseq {

namespace {

// 17 significant digits round-trip any double exactly, so equal inputs
// always serialize to equal bytes.
void append_double(std::string& out, double v) {
  if (!std::isfinite(v)) {
    throw std::runtime_error("serialize: refusing to write non-finite value");
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

void append_vector(std::string& out, const Eigen::VectorXd& v) {
  out += '[';
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    append_double(out, v[i]);
  }
  out += ']';
}

Eigen::VectorXd parse_vector(const nlohmann::json& arr) {
  if (!arr.is_array()) {
    throw std::runtime_error("boundary_from_json: expected an array");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  Eigen::Index i = 0;
  for (const auto& x : arr) v[i++] = x.get<double>();
  return v;
}

}  // namespace

std::string to_json(const BoundaryTable& table) {
  std::string out;
  out.reserve(48 * static_cast<std::size_t>(table.grid.size()) + 512);
  out += "{\n  \"sigma\": ";
  append_double(out, table.sigma);
  out += ",\n  \"hurst\": ";
  append_double(out, table.hurst);
  out += ",\n  \"gamma\": ";
  append_double(out, table.gamma_exp);
  out += ",\n  \"m_const\": ";
  append_double(out, table.m_const);
  out += ",\n  \"t0\": ";
  append_double(out, table.t0);
  out += ",\n  \"grid\": ";
  append_vector(out, table.grid);
  out += ",\n  \"a\": ";
  append_vector(out, table.a);
  out += ",\n  \"meta\": {\n    \"n_grid\": ";
  out += std::to_string(table.meta.n_grid);
  out += ",\n    \"t_min\": ";
  append_double(out, table.meta.t_min);
  out += ",\n    \"end_gap\": ";
  append_double(out, table.meta.end_gap);
  out += ",\n    \"bisect_tol\": ";
  append_double(out, table.meta.bisect_tol);
  out += ",\n    \"extended_below_t0\": ";
  out += table.meta.extended_below_t0 ? "true" : "false";
  out += ",\n    \"max_residual\": ";
  append_double(out, table.meta.max_residual);
  out += ",\n    \"residual_warning\": ";
  out += table.meta.residual_warning ? "true" : "false";
  out += "\n  }\n}\n";
  return out;
}

BoundaryTable boundary_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("boundary_from_json: ") + e.what());
  }
  BoundaryTable table;
  try {
    table.sigma = j.at("sigma").get<double>();
    table.hurst = j.at("hurst").get<double>();
    table.gamma_exp = j.at("gamma").get<double>();
    table.m_const = j.at("m_const").get<double>();
    table.t0 = j.at("t0").get<double>();
    table.grid = parse_vector(j.at("grid"));
    table.a = parse_vector(j.at("a"));
    const auto& meta = j.at("meta");
    table.meta.n_grid = meta.at("n_grid").get<int>();
    table.meta.t_min = meta.at("t_min").get<double>();
    table.meta.end_gap = meta.at("end_gap").get<double>();
    table.meta.bisect_tol = meta.at("bisect_tol").get<double>();
    table.meta.extended_below_t0 = meta.at("extended_below_t0").get<bool>();
    table.meta.max_residual = meta.at("max_residual").get<double>();
    table.meta.residual_warning = meta.at("residual_warning").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("boundary_from_json: ") + e.what());
  }
  validate(table);
  return table;
}

std::string to_json(const RiskReport& report) {
  std::string out;
  out += "{\n  \"mean_risk\": ";
  append_double(out, report.mean_risk);
  out += ",\n  \"std_error\": ";
  append_double(out, report.std_error);
  out += ",\n  \"n_paths\": ";
  out += std::to_string(report.n_paths);
  out += ",\n  \"mean_tau\": ";
  append_double(out, report.mean_tau);
  out += ",\n  \"error_rate\": ";
  if (report.error_rate) {
    append_double(out, *report.error_rate);
  } else {
    out += "null";
  }
  out += ",\n  \"components\": {\n    \"observation_cost\": ";
  append_double(out, report.components.observation_cost);
  out += ",\n    \"decision_loss\": ";
  append_double(out, report.components.decision_loss);
  out += "\n  },\n  \"comparison\": ";
  if (report.comparison) {
    out += "{\n    \"immediate_stop_risk\": ";
    append_double(out, report.comparison->immediate_stop_risk);
    if (report.comparison->transformed_risk) {
      out += ",\n    \"transformed_risk\": ";
      append_double(out, *report.comparison->transformed_risk);
    }
    if (report.comparison->transformed_std_error) {
      out += ",\n    \"transformed_std_error\": ";
      append_double(out, *report.comparison->transformed_std_error);
    }
    out += "\n  }";
  } else {
    out += "null";
  }
  out += ",\n  \"truncated_fraction\": ";
  append_double(out, report.truncated_fraction);
  out += ",\n  \"truncation_warning\": ";
  out += report.truncation_warning ? "true" : "false";
  out += "\n}\n";
  return out;
}

std::string to_csv(const SamplePath& path) {
  std::string out = "t,value\n";
  for (Eigen::Index i = 0; i < path.times.size(); ++i) {
    append_double(out, path.times[i]);
    out += ',';
    append_double(out, path.values[i]);
    out += '\n';
  }
  return out;
}

std::string to_csv(const PosteriorTrajectory& trajectory) {
  std::string out = "t,r,a,b,w\n";
  for (Eigen::Index i = 0; i < trajectory.times.size(); ++i) {
    append_double(out, trajectory.times[i]);
    out += ',';
    append_double(out, trajectory.r[i]);
    out += ',';
    append_double(out, trajectory.a[i]);
    out += ',';
    append_double(out, trajectory.b[i]);
    out += ',';
    append_double(out, trajectory.w[i]);
    out += '\n';
  }
  return out;
}

std::string boundary_csv(const BoundaryTable& table) {
  std::string out = "t,A\n";
  for (Eigen::Index i = 0; i < table.grid.size(); ++i) {
    append_double(out, table.grid[i]);
    out += ',';
    append_double(out, table.a[i]);
    out += '\n';
  }
  return out;
}

std::string outcomes_csv(const std::vector<PathOutcome>& outcomes) {
  std::string out = "seed,theta,tau,rho,decision,loss\n";
  for (const PathOutcome& o : outcomes) {
    out += std::to_string(o.seed);
    out += ',';
    append_double(out, o.theta);
    out += ',';
    append_double(out, o.tau);
    out += ',';
    append_double(out, o.rho);
    out += ',';
    out += std::to_string(o.decision);
    out += ',';
    append_double(out, o.loss);
    out += '\n';
  }
  return out;
}

void atomic_write(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) {
      throw std::runtime_error("atomic_write: cannot open " + tmp.string());
    }
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) {
      throw std::runtime_error("atomic_write: short write to " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("read_file: cannot open " + path);
  }
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

void save_boundary(const BoundaryTable& table, const std::string& path,
                   const std::string& format) {
  if (format == "json") {
    atomic_write(path, to_json(table));
  } else if (format == "csv") {
    atomic_write(path, boundary_csv(table));
  } else {
    throw std::invalid_argument("save_boundary: unknown format " + format);
  }
}

BoundaryTable load_boundary(const std::string& path) {
  return boundary_from_json(read_file(path));
}

}  // namespace fbmseq
