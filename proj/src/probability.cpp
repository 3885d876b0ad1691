#include "arhate/probability.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "arhate/csv.hpp"
#include "arhate/error.hpp"
#include "arhate/hashing.hpp"

namespace arhate {

namespace {
const std::vector<std::string> kHeader{"id", "p_NH", "p_GH", "p_Re", "p_Ra", "p_Se"};
}

void ProbabilityMatrix::validate(double tolerance) const {
  if (ids.size() != rows.size()) throw ValidationError("probability matrix: id/row count mismatch");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double sum = 0.0;
    for (double p : rows[i]) {
      if (!std::isfinite(p) || p < 0.0) {
        throw ValidationError("probability matrix: invalid entry in row '" + ids[i] + "'");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > tolerance) {
      throw ValidationError("probability matrix: row '" + ids[i] + "' sums to " +
                            format_double(sum));
    }
  }
}

Label argmax(const ProbRow& row) noexcept {
  std::size_t best = 0;
  for (std::size_t c = 1; c < kNumLabels; ++c) {
    if (row[c] > row[best]) best = c;
  }
  return label_at(best);
}

void write_probability_csv(const std::filesystem::path& path, const ProbabilityMatrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << csv::join(kHeader) << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    std::vector<std::string> fields{m.ids[i]};
    for (double p : m.rows[i]) fields.push_back(format_double(p));
    out << csv::join(fields) << '\n';
  }
}

ProbabilityMatrix read_probability_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  csv::Reader reader(in, ',', path.string());
  auto header = reader.next();
  if (!header || *header != kHeader) {
    throw ParseError(path.string(), 1, "expected header id,p_NH,p_GH,p_Re,p_Ra,p_Se");
  }
  ProbabilityMatrix m;
  while (auto record = reader.next()) {
    if (record->size() == 1 && (*record)[0].empty()) continue;
    if (record->size() != kHeader.size()) {
      throw ParseError(path.string(), reader.record_line(), "expected 6 fields");
    }
    ProbRow row{};
    for (std::size_t c = 0; c < kNumLabels; ++c) {
      const auto& field = (*record)[c + 1];
      auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), row[c]);
      if (ec != std::errc() || end != field.data() + field.size()) {
        throw ParseError(path.string(), reader.record_line(), "bad probability '" + field + "'");
      }
    }
    m.ids.push_back((*record)[0]);
    m.rows.push_back(row);
  }
  m.validate();
  return m;
}

void write_labels_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                      const std::vector<Label>& labels) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "id,label\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << csv::escape(ids[i]) << ',' << to_string(labels[i]) << '\n';
  }
}

}  // namespace arhate
