#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsim/mc.hpp"

namespace fsim {

inline constexpr const char* kToolVersion = "0.1.0";

/// Deterministic decimal rendering used by every report writer.
std::string fmt_double(double value);

struct DiagnosticsRow {
  DesignDistribution design;
  int d = 0;
  int p = 0;
  DiagnosticsResult diag;
};

struct PowerRow {
  DesignDistribution design;
  int d = 0;
  int p = 0;
  double snr = 0.0;
  double rejection = 0.0;
  double noncentral_f = 0.0;  // reference power from the noncentral F
  double normal_approx = 0.0;
};

// CSV writers. Column layouts are part of the tool contract:
//   table1.csv    design,d,p,dbar
//   cells.csv     design,d,p,r,pbar
//   boxplot.csv   design,d,r,pbar
//   theorem1.csv  design,d,p,snr,ks,rejection,normal_approx,gap
//   power.csv     design,d,p,snr,rejection,noncentral_f,normal_approx
//   benchmark.csv p0.05,p0.10,p0.15,p0.20
std::string render_table1_csv(const std::vector<CellResult>& cells);
std::string render_cells_csv(const std::vector<CellResult>& cells);
std::string render_boxplot_csv(const std::vector<CellResult>& cells);
std::string render_benchmark_csv(const BenchmarkPanel& panel);
std::string render_theorem1_csv(const std::vector<DiagnosticsRow>& rows);
std::string render_power_csv(const std::vector<PowerRow>& rows);

// JSON mirrors of the CSV reports (arrays of row objects).
std::string render_table1_json(const std::vector<CellResult>& cells);
std::string render_cells_json(const std::vector<CellResult>& cells);
std::string render_boxplot_json(const std::vector<CellResult>& cells);
std::string render_benchmark_json(const BenchmarkPanel& panel);
std::string render_theorem1_json(const std::vector<DiagnosticsRow>& rows);
std::string render_power_json(const std::vector<PowerRow>& rows);

/// Text table of dbar by d (rows) and p (columns), one block per design,
/// with the staircase blanks.
std::string render_summary_text(const std::vector<CellResult>& cells, const RunConfig& cfg);

nlohmann::json config_to_json(const RunConfig& cfg);
/// Applies the keys present in `source` onto `cfg`; unknown keys are errors.
void config_from_json(const nlohmann::json& source, RunConfig& cfg);

/// manifest.json: full config echo plus per-cell substream fingerprints.
/// Everything a re-run needs to reproduce any cell bit-exactly.
std::string render_manifest(const RunConfig& cfg, const std::string& command,
                            const std::vector<CellResult>& cells, double wall_seconds);

void write_text_file(const std::filesystem::path& path, const std::string& content);

struct VerifyResult {
  bool ok = false;
  std::string message;
};

/// Re-runs one cell recorded in out_dir/manifest.json and compares its rows
/// against cells.csv byte for byte. Without an explicit index the cell is
/// picked deterministically from the run seed.
VerifyResult verify_run(const std::filesystem::path& out_dir, std::optional<int> cell_index);

}  // namespace fsim
