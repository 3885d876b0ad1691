// Independent reference implementations used by the tests. Each one is
// written from the textbook definition and shares no code with the library.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace oracle {

struct Counts {
  std::array<long, 5> tp{}, fp{}, fn{}, support{};
};

inline Counts count(const std::vector<int>& gold, const std::vector<int>& pred) {
  Counts c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    c.support[gold[i]]++;
    if (gold[i] == pred[i]) {
      c.tp[gold[i]]++;
    } else {
      c.fp[pred[i]]++;
      c.fn[gold[i]]++;
    }
  }
  return c;
}

inline double safe_div(double a, double b) { return b == 0 ? 0.0 : a / b; }

struct Scores {
  std::array<double, 5> p{}, r{}, f1{};
  double macro = 0, micro = 0, weighted = 0;
};

/// Fractions. Micro from pooled TP/FP/FN.
inline Scores score(const std::vector<int>& gold, const std::vector<int>& pred) {
  const auto c = count(gold, pred);
  Scores s;
  long tp = 0, fp = 0, fn = 0, n = 0;
  for (int k = 0; k < 5; ++k) {
    s.p[k] = safe_div(c.tp[k], c.tp[k] + c.fp[k]);
    s.r[k] = safe_div(c.tp[k], c.tp[k] + c.fn[k]);
    s.f1[k] = safe_div(2 * s.p[k] * s.r[k], s.p[k] + s.r[k]);
    s.macro += s.f1[k] / 5;
    s.weighted += s.f1[k] * c.support[k];
    tp += c.tp[k];
    fp += c.fp[k];
    fn += c.fn[k];
    n += c.support[k];
  }
  s.weighted = safe_div(s.weighted, n);
  const double mp = safe_div(tp, tp + fp), mr = safe_div(tp, tp + fn);
  s.micro = safe_div(2 * mp * mr, mp + mr);
  return s;
}

/// Plurality of argmax votes; ties to the larger summed probability of the
/// tied classes, then the lower column.
inline int majority(const std::vector<std::array<double, 5>>& rows) {
  std::array<int, 5> votes{};
  std::array<double, 5> mass{};
  for (const auto& r : rows) {
    int best = 0;
    for (int k = 1; k < 5; ++k) {
      if (r[k] > r[best]) best = k;
    }
    votes[best]++;
    for (int k = 0; k < 5; ++k) mass[k] += r[k];
  }
  int winner = -1;
  for (int k = 0; k < 5; ++k) {
    if (winner < 0 || votes[k] > votes[winner] ||
        (votes[k] == votes[winner] && mass[k] > mass[winner])) {
      winner = k;
    }
  }
  return winner;
}

inline int mean_argmax(const std::vector<std::array<double, 5>>& rows) {
  std::array<double, 5> mean{};
  for (const auto& r : rows) {
    for (int k = 0; k < 5; ++k) mean[k] += r[k] / static_cast<double>(rows.size());
  }
  return static_cast<int>(std::max_element(mean.begin(), mean.end()) - mean.begin());
}

inline std::array<double, 5> random_distribution(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  std::array<double, 5> r{};
  double sum = 0;
  for (auto& v : r) sum += (v = u(rng));
  for (auto& v : r) v /= sum;
  return r;
}

}  // namespace oracle

namespace testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() /
            ("arhate-" + tag + "-" + std::to_string(rng() % 1000000000));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::FILE* f = std::fopen(p.c_str(), "rb");
  if (!f) return {};
  std::string s;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) s.append(buf, n);
  std::fclose(f);
  return s;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::create_directories(p.parent_path());
  std::FILE* f = std::fopen(p.c_str(), "wb");
  std::fwrite(content.data(), 1, content.size(), f);
  std::fclose(f);
}

}  // namespace testing
