#include "instmeter/dataset.hpp"

#include <charconv>
#include <sstream>

#include "instmeter/errors.hpp"
#include "instmeter/io.hpp"

namespace instmeter {

namespace {

constexpr const char* kHeader = "model_id,cycles,energy_j,latency_s";

double parse_field(const std::string& field, int line_no, const char* what) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end)
    throw DataError("dataset line " + std::to_string(line_no) + ": bad " + what + " value '" +
                    field + "'");
  return v;
}

std::optional<double> parse_optional_field(const std::string& field, int line_no,
                                           const char* what) {
  if (field.empty()) return std::nullopt;
  return parse_field(field, line_no, what);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

std::vector<DatasetRow> parse_dataset_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::vector<DatasetRow> rows;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != kHeader)
        throw DataError("dataset line 1: expected header '" + std::string(kHeader) + "', got '" +
                        line + "'");
      saw_header = true;
      continue;
    }
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (fields.size() != 4)
      throw DataError("dataset line " + std::to_string(line_no) + ": expected 4 fields, got " +
                      std::to_string(fields.size()));
    DatasetRow r;
    r.model_id = fields[0];
    r.cycles = parse_field(fields[1], line_no, "cycles");
    r.energy_j = parse_optional_field(fields[2], line_no, "energy_j");
    r.latency_s = parse_optional_field(fields[3], line_no, "latency_s");
    rows.push_back(std::move(r));
  }
  if (!saw_header) throw DataError("dataset is empty (missing header)");
  return rows;
}

std::vector<DatasetRow> load_dataset(const std::string& path) {
  return parse_dataset_csv(read_text_file(path));
}

std::string dataset_to_csv(const std::vector<DatasetRow>& rows) {
  std::string out = kHeader;
  out += '\n';
  for (const DatasetRow& r : rows) {
    out += r.model_id;
    out += ',';
    out += format_double(r.cycles);
    out += ',';
    if (r.energy_j) out += format_double(*r.energy_j);
    out += ',';
    if (r.latency_s) out += format_double(*r.latency_s);
    out += '\n';
  }
  return out;
}

std::vector<Sample> select_target(const std::vector<DatasetRow>& rows, const std::string& target,
                                  std::size_t* skipped) {
  if (target != "energy" && target != "latency")
    throw DataError("unknown fit target '" + target + "' (expected 'energy' or 'latency')");
  if (skipped) *skipped = 0;
  std::vector<Sample> samples;
  samples.reserve(rows.size());
  for (const DatasetRow& r : rows) {
    const std::optional<double>& v = target == "energy" ? r.energy_j : r.latency_s;
    if (!v) {
      if (skipped) ++*skipped;
      continue;
    }
    samples.push_back({r.model_id, r.cycles, *v});
  }
  return samples;
}

}  // namespace instmeter
