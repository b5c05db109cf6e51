#pragma once
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdr/harness.hpp"
#include "sdr/solver.hpp"
#include "sdr/synthgen.hpp"

namespace sdr::io {

// Malformed user input; maps to exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode : int { kOk = 0, kInputError = 1, kInfeasible = 2, kNotConverged = 3 };

struct CsvTable {
  std::vector<std::string> names;
  Matrix values;  // rows x names.size()
  [[nodiscard]] Index column(const std::string& name) const;  // throws InputError
  [[nodiscard]] Matrix select(const std::vector<std::string>& names) const;
};

[[nodiscard]] std::vector<std::vector<std::string>> parse_csv_records(std::istream& in,
                                                                      const std::string& source);
[[nodiscard]] CsvTable parse_csv(std::istream& in, const std::string& source = "<input>");
[[nodiscard]] CsvTable read_csv(const std::string& path);
[[nodiscard]] std::string format_csv(const std::vector<std::string>& names, const Matrix& values);

// Replaces path by content through a temporary file in the same directory.
void atomic_write(const std::string& path, const std::string& content);
[[nodiscard]] std::string read_text(const std::string& path);

// "a,b,c" or "@file" with one name per line or comma separated.
[[nodiscard]] std::vector<std::string> parse_name_list(const std::string& spec);

struct Standardization {
  Vector mean;
  Vector scale;
  [[nodiscard]] bool active() const { return mean.size() > 0; }
  [[nodiscard]] Matrix apply(const Matrix& data) const;
};

struct ModelFile {
  FitResult fit;
  std::vector<std::string> column_names;  // responses then covariates
  Matrix sigma_n;                         // the fitted sample covariance
  Standardization standardization;
};

[[nodiscard]] std::string model_to_json(const ModelFile& model);
[[nodiscard]] ModelFile model_from_json(const std::string& text);
void save_model(const ModelFile& model, const std::string& path);
[[nodiscard]] ModelFile load_model(const std::string& path);

[[nodiscard]] std::string population_to_json(const PopulationModel& pop);
[[nodiscard]] PopulationModel population_from_json(const std::string& text);

[[nodiscard]] std::string summary_to_json(const ExperimentSummary& s, const RegRule& rule);

int run_cli(int argc, char** argv);

}  // namespace sdr::io
