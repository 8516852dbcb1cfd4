#pragma once

#include <optional>
#include <string>
#include <vector>

#include "instmeter/predictor.hpp"

namespace instmeter {

// One row of a measurement table. Energy and latency may be blank in the CSV
// (a device run that recorded only one of them); cycles is always present.
struct DatasetRow {
  std::string model_id;
  double cycles = 0.0;
  std::optional<double> energy_j;
  std::optional<double> latency_s;
};

// Parses CSV text with the exact header
//   model_id,cycles,energy_j,latency_s
// Numeric fields must parse fully; energy_j/latency_s may be empty. Malformed
// rows throw DataError with the line number.
std::vector<DatasetRow> parse_dataset_csv(const std::string& text);

std::vector<DatasetRow> load_dataset(const std::string& path);

std::string dataset_to_csv(const std::vector<DatasetRow>& rows);

// Projects rows onto fit samples for "energy" or "latency". Rows with that
// field blank are skipped; *skipped reports how many.
std::vector<Sample> select_target(const std::vector<DatasetRow>& rows, const std::string& target,
                                  std::size_t* skipped = nullptr);

}  // namespace instmeter
