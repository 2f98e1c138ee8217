#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "remage/clock.hpp"
#include "remage/conditions.hpp"
#include "remage/landscape.hpp"

namespace remage {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Model { REM, Trap };
enum class ExperimentKind { Correlation, Conditions };

struct Tolerances {
  double abs = 0.05;     // |p_hat - target| allowed regardless of CI
  double ci_mult = 3.0;  // or this many CI half-widths
  // Condition-check tolerances (conditions experiments only).
  double a0 = 0.01;
  double a1 = 0.15;
  double a2 = 0.05;
};

struct ExperimentSpec {
  std::string name;
  ExperimentKind kind = ExperimentKind::Correlation;
  Model model = Model::REM;
  // REM
  int n = 0;
  double beta = 0.0;
  std::optional<double> epsilon;
  std::optional<double> log_rn;
  // Trap
  std::uint64_t n_states = 0;
  double alpha = 0.5;
  // Scaling overrides
  std::optional<double> a_n;
  std::optional<double> log_c_n;
  // Correlation
  std::vector<Cell> cells;
  std::size_t n_env = 20;
  std::size_t n_chain = 500;
  Mode mode = Mode::Quenched;
  InitKind init = InitKind::Uniform;
  // Conditions
  double t = 1.0;
  std::vector<double> u_grid;
  std::vector<double> delta_grid;
  std::size_t skeletons = 200;
  Tolerances tolerance;

  LandscapeParams landscape_params(std::uint64_t seed) const;
};

struct ExperimentConfig {
  int schema_version = 1;
  std::string output = "results";
  std::uint64_t master_seed = 0;
  std::vector<ExperimentSpec> experiments;
};

// Parse and validate; unknown keys and missing fields raise ConfigError
// naming the offending path.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& c);
void validate(const ExperimentConfig& c);

// Per-experiment seed derived from the master seed and the experiment index.
std::uint64_t experiment_seed(std::uint64_t master, std::size_t index);

struct CsvRow {
  std::string model;
  std::string n;
  std::string beta;
  std::string eps;
  std::string scale_kind;
  double t = 0.0, rho = 0.0;
  std::string mode, init;
  std::size_t n_env = 0, n_chain = 0;
  double p_hat = 0.0, ci95 = 0.0;
  double asl_target = 0.0;
  std::uint64_t seed = 0;
};

extern const char* const kCsvHeader;
std::string format_double(double x);  // shortest round-trip form
std::string to_csv_line(const CsvRow& r);
std::vector<CsvRow> read_estimates_csv(const std::filesystem::path& path);

struct RunResult {
  std::filesystem::path output_dir;
  std::vector<CsvRow> rows;
  nlohmann::json scale;       // per experiment
  nlohmann::json conditions;  // per conditions experiment
  bool failed = false;
  std::string error;
};

// Runs every experiment and writes estimates.csv, scale.json,
// conditions.json and manifest.json into the output directory. On an error
// the rows finished so far are still written and the manifest records it.
RunResult run(const ExperimentConfig& config);

struct SummaryRow {
  CsvRow row;
  double deviation_se = 0.0;  // (p_hat - target) / SE
  std::string check;          // PASS, FAIL or n/a
};

struct Summary {
  std::vector<SummaryRow> rows;
  bool all_pass = true;
};

extern const char* const kSummaryHeader;
Summary summarize(const std::vector<std::filesystem::path>& files, const Tolerances& tol = {});
std::string to_csv(const Summary& s);

}  // namespace remage
