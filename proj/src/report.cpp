#include "fsim/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fsim {

std::string fmt_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return buf;
}

namespace {

std::string fmt_hex(std::uint64_t value) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

nlohmann::json cell_row(const CellResult& cell) {
  return {{"design", cell.design.name()}, {"d", cell.d}, {"p", cell.p}, {"dbar", cell.dbar}};
}

}  // namespace

std::string render_table1_csv(const std::vector<CellResult>& cells) {
  std::ostringstream out;
  out << "design,d,p,dbar\n";
  for (const CellResult& cell : cells) {
    out << cell.design.name() << ',' << cell.d << ',' << cell.p << ',' << fmt_double(cell.dbar)
        << '\n';
  }
  return out.str();
}

std::string render_cells_csv(const std::vector<CellResult>& cells) {
  std::ostringstream out;
  out << "design,d,p,r,pbar\n";
  for (const CellResult& cell : cells) {
    for (std::size_t r = 0; r < cell.pbars.size(); ++r) {
      out << cell.design.name() << ',' << cell.d << ',' << cell.p << ',' << r << ','
          << fmt_double(cell.pbars[r]) << '\n';
    }
  }
  return out.str();
}

std::string render_boxplot_csv(const std::vector<CellResult>& cells) {
  std::ostringstream out;
  out << "design,d,r,pbar\n";
  for (const CellResult& cell : cells) {
    for (std::size_t r = 0; r < cell.pbars.size(); ++r) {
      out << cell.design.name() << ',' << cell.d << ',' << r << ',' << fmt_double(cell.pbars[r])
          << '\n';
    }
  }
  return out.str();
}

std::string render_benchmark_csv(const BenchmarkPanel& panel) {
  std::ostringstream out;
  for (std::size_t i = 0; i < panel.probabilities.size(); ++i) {
    if (i) out << ',';
    char buf[16];
    std::snprintf(buf, sizeof(buf), "p%.2f", panel.probabilities[i]);
    out << buf;
  }
  out << '\n';
  if (panel.draws.empty()) return out.str();
  const std::size_t rows = panel.draws.front().size();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < panel.draws.size(); ++i) {
      if (i) out << ',';
      out << fmt_double(panel.draws[i][r]);
    }
    out << '\n';
  }
  return out.str();
}

std::string render_theorem1_csv(const std::vector<DiagnosticsRow>& rows) {
  std::ostringstream out;
  out << "design,d,p,snr,ks,rejection,normal_approx,gap\n";
  for (const DiagnosticsRow& row : rows) {
    out << row.design.name() << ',' << row.d << ',' << row.p << ',' << fmt_double(row.diag.snr_target)
        << ',' << fmt_double(row.diag.ks_vs_noncentral_f) << ','
        << fmt_double(row.diag.rejection_rate) << ',' << fmt_double(row.diag.normal_approx) << ','
        << fmt_double(row.diag.gap) << '\n';
  }
  return out.str();
}

std::string render_power_csv(const std::vector<PowerRow>& rows) {
  std::ostringstream out;
  out << "design,d,p,snr,rejection,noncentral_f,normal_approx\n";
  for (const PowerRow& row : rows) {
    out << row.design.name() << ',' << row.d << ',' << row.p << ',' << fmt_double(row.snr) << ','
        << fmt_double(row.rejection) << ',' << fmt_double(row.noncentral_f) << ','
        << fmt_double(row.normal_approx) << '\n';
  }
  return out.str();
}

std::string render_table1_json(const std::vector<CellResult>& cells) {
  nlohmann::json rows = nlohmann::json::array();
  for (const CellResult& cell : cells) rows.push_back(cell_row(cell));
  return rows.dump(2) + "\n";
}

std::string render_cells_json(const std::vector<CellResult>& cells) {
  nlohmann::json rows = nlohmann::json::array();
  for (const CellResult& cell : cells) {
    for (std::size_t r = 0; r < cell.pbars.size(); ++r) {
      rows.push_back({{"design", cell.design.name()},
                      {"d", cell.d},
                      {"p", cell.p},
                      {"r", r},
                      {"pbar", cell.pbars[r]}});
    }
  }
  return rows.dump(2) + "\n";
}

std::string render_boxplot_json(const std::vector<CellResult>& cells) {
  nlohmann::json rows = nlohmann::json::array();
  for (const CellResult& cell : cells) {
    for (std::size_t r = 0; r < cell.pbars.size(); ++r) {
      rows.push_back(
          {{"design", cell.design.name()}, {"d", cell.d}, {"r", r}, {"pbar", cell.pbars[r]}});
    }
  }
  return rows.dump(2) + "\n";
}

std::string render_benchmark_json(const BenchmarkPanel& panel) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < panel.draws.size(); ++i) {
    rows.push_back({{"probability", panel.probabilities[i]}, {"draws", panel.draws[i]}});
  }
  return rows.dump(2) + "\n";
}

std::string render_theorem1_json(const std::vector<DiagnosticsRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const DiagnosticsRow& row : rows) {
    out.push_back({{"design", row.design.name()},
                   {"d", row.d},
                   {"p", row.p},
                   {"snr", row.diag.snr_target},
                   {"ks", row.diag.ks_vs_noncentral_f},
                   {"rejection", row.diag.rejection_rate},
                   {"normal_approx", row.diag.normal_approx},
                   {"gap", row.diag.gap}});
  }
  return out.dump(2) + "\n";
}

std::string render_power_json(const std::vector<PowerRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const PowerRow& row : rows) {
    out.push_back({{"design", row.design.name()},
                   {"d", row.d},
                   {"p", row.p},
                   {"snr", row.snr},
                   {"rejection", row.rejection},
                   {"noncentral_f", row.noncentral_f},
                   {"normal_approx", row.normal_approx}});
  }
  return out.dump(2) + "\n";
}

std::string render_summary_text(const std::vector<CellResult>& cells, const RunConfig& cfg) {
  std::ostringstream out;
  for (const DesignDistribution& design : cfg.designs) {
    out << design.name() << " (dbar by d \\ p)\n";
    out << "      d\\p";
    for (int p : cfg.p_dims) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%9d", p);
      out << buf;
    }
    out << '\n';
    for (int d : cfg.dims) {
      char head[16];
      std::snprintf(head, sizeof(head), "%9d", d);
      out << head;
      for (int p : cfg.p_dims) {
        char buf[16];
        bool found = false;
        for (const CellResult& cell : cells) {
          if (cell.design == design && cell.d == d && cell.p == p) {
            std::snprintf(buf, sizeof(buf), "%9.3f", cell.dbar);
            found = true;
            break;
          }
        }
        if (!found) std::snprintf(buf, sizeof(buf), "%9s", "");
        out << buf;
      }
      out << '\n';
    }
    out << '\n';
  }
  return out.str();
}

nlohmann::json config_to_json(const RunConfig& cfg) {
  nlohmann::json designs = nlohmann::json::array();
  for (const DesignDistribution& design : cfg.designs) designs.push_back(design.name());
  return {{"n", cfg.n},
          {"alpha", cfg.level},
          {"reps", cfg.reps},
          {"r_count", cfg.r_count},
          {"seed", cfg.seed},
          {"dims", cfg.dims},
          {"p_dims", cfg.p_dims},
          {"designs", designs},
          {"covariance", cfg.covariance.label()},
          {"threads", cfg.threads},
          {"sigma_redraws", cfg.sigma_redraws}};
}

void config_from_json(const nlohmann::json& source, RunConfig& cfg) {
  for (const auto& [key, value] : source.items()) {
    if (key == "n") {
      cfg.n = value.get<int>();
    } else if (key == "alpha") {
      cfg.level = value.get<double>();
    } else if (key == "reps") {
      cfg.reps = value.get<int>();
    } else if (key == "r_count") {
      cfg.r_count = value.get<int>();
    } else if (key == "seed") {
      cfg.seed = value.get<std::uint64_t>();
    } else if (key == "dims") {
      cfg.dims = value.get<std::vector<int>>();
    } else if (key == "p_dims") {
      cfg.p_dims = value.get<std::vector<int>>();
    } else if (key == "designs") {
      cfg.designs.clear();
      for (const auto& name : value) {
        cfg.designs.push_back(DesignDistribution::parse(name.get<std::string>()));
      }
    } else if (key == "covariance") {
      cfg.covariance = CovarianceSpec::parse(value.get<std::string>());
    } else if (key == "threads") {
      cfg.threads = value.get<int>();
    } else if (key == "sigma_redraws") {
      cfg.sigma_redraws = value.get<int>();
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
}

std::string render_manifest(const RunConfig& cfg, const std::string& command,
                            const std::vector<CellResult>& cells, double wall_seconds) {
  nlohmann::json manifest;
  manifest["tool"] = "fsim";
  manifest["version"] = kToolVersion;
  manifest["command"] = command;
  manifest["config"] = config_to_json(cfg);
  manifest["wall_clock_seconds"] = wall_seconds;
  manifest["threads"] = cfg.threads;
  nlohmann::json cell_list = nlohmann::json::array();
  for (const CellResult& cell : cells) {
    cell_list.push_back({{"design", cell.design.name()},
                         {"d", cell.d},
                         {"p", cell.p},
                         {"stream", fmt_hex(cell.cell_stream)},
                         {"threshold", cell.threshold}});
  }
  manifest["cells"] = cell_list;
  return manifest.dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  out << content;
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

VerifyResult verify_run(const std::filesystem::path& out_dir, std::optional<int> cell_index) {
  const auto manifest_path = out_dir / "manifest.json";
  const auto cells_path = out_dir / "cells.csv";
  std::ifstream manifest_in(manifest_path);
  if (!manifest_in) return {false, "missing " + manifest_path.string()};
  nlohmann::json manifest;
  manifest_in >> manifest;

  RunConfig cfg;
  config_from_json(manifest.at("config"), cfg);
  const auto& cell_list = manifest.at("cells");
  if (cell_list.empty()) return {false, "manifest lists no cells"};

  int index;
  if (cell_index) {
    index = *cell_index;
    if (index < 0 || index >= static_cast<int>(cell_list.size())) {
      return {false, "cell index out of range"};
    }
  } else {
    index = static_cast<int>(mix64(cfg.seed) % cell_list.size());
  }
  const auto& entry = cell_list.at(index);
  const DesignDistribution design = DesignDistribution::parse(entry.at("design").get<std::string>());
  const int d = entry.at("d").get<int>();
  const int p = entry.at("p").get<int>();

  const CellResult cell = run_cell(design, d, p, cfg);
  std::vector<std::string> expected;
  {
    std::ostringstream prefix;
    prefix << design.name() << ',' << d << ',' << p << ',';
    std::ifstream cells_in(cells_path);
    if (!cells_in) return {false, "missing " + cells_path.string()};
    std::string line;
    while (std::getline(cells_in, line)) {
      if (line.rfind(prefix.str(), 0) == 0) expected.push_back(line);
    }
  }
  if (expected.size() != cell.pbars.size()) {
    std::ostringstream msg;
    msg << "cell " << design.name() << " d=" << d << " p=" << p << ": found " << expected.size()
        << " rows, expected " << cell.pbars.size();
    return {false, msg.str()};
  }
  for (std::size_t r = 0; r < cell.pbars.size(); ++r) {
    std::ostringstream line;
    line << design.name() << ',' << d << ',' << p << ',' << r << ',' << fmt_double(cell.pbars[r]);
    if (line.str() != expected[r]) {
      return {false, "mismatch at r=" + std::to_string(r) + ": recomputed '" + line.str() +
                         "' vs stored '" + expected[r] + "'"};
    }
  }
  std::ostringstream msg;
  msg << "cell " << design.name() << " d=" << d << " p=" << p << " (" << cell.pbars.size()
      << " rows) reproduced bit-exactly";
  return {true, msg.str()};
}

}  // namespace fsim
