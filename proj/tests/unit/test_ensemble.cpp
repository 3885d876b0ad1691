#include <doctest.h>

#include <random>

#include "arhate/error.hpp"
#include "arhate/ensemble.hpp"
#include "oracles.hpp"

using namespace arhate;

namespace {

ProbabilityMatrix single_row(const std::array<double, 5>& r) {
  ProbabilityMatrix m;
  m.ids = {"a"};
  m.rows = {ProbRow{r[0], r[1], r[2], r[3], r[4]}};
  return m;
}

/// A row whose argmax is `winner`, with a random tail so tie-breaks on mass
/// vary between patterns.
std::array<double, 5> peaked(int winner, std::mt19937_64& rng) {
  std::array<double, 5> r{};
  std::uniform_real_distribution<double> u(0.01, 0.1);
  double rest = 0;
  for (int k = 0; k < 5; ++k) {
    if (k != winner) rest += (r[k] = u(rng));
  }
  r[winner] = 0.5 + u(rng);
  double sum = rest + r[winner];
  for (auto& v : r) v /= sum;
  return r;
}

}  // namespace

TEST_CASE("majority vote matches the exhaustive three-model oracle") {
  std::mt19937_64 rng(3);
  int patterns = 0;
  for (int a = 0; a < 5; ++a) {
    for (int b = 0; b < 5; ++b) {
      for (int c = 0; c < 5; ++c) {
        const std::vector<std::array<double, 5>> rows{peaked(a, rng), peaked(b, rng), peaked(c, rng)};
        std::vector<ProbabilityMatrix> ms;
        for (const auto& r : rows) ms.push_back(single_row(r));
        const auto got = majority_vote(ms);
        REQUIRE(got.size() == 1);
        CHECK(index_of(got[0]) == static_cast<std::size_t>(oracle::majority(rows)));
        ++patterns;
      }
    }
  }
  CHECK(patterns == 125);
}

TEST_CASE("majority ties fall to probability mass, then to the earlier column") {
  // Three distinct votes; Re carries the most mass.
  std::vector<ProbabilityMatrix> ms{single_row({0.6, 0.1, 0.1, 0.1, 0.1}),
                                    single_row({0.1, 0.6, 0.1, 0.1, 0.1}),
                                    single_row({0.05, 0.05, 0.8, 0.05, 0.05})};
  CHECK(majority_vote(ms)[0] == Label::Re);
  // Exact tie in votes and mass: earliest column wins.
  std::vector<ProbabilityMatrix> tie{single_row({0.6, 0.1, 0.1, 0.1, 0.1}),
                                     single_row({0.1, 0.6, 0.1, 0.1, 0.1})};
  CHECK(majority_vote(tie)[0] == Label::NH);
}

TEST_CASE("average vote argmax matches mean-then-argmax on random triples") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::array<double, 5>> rows;
    std::vector<ProbabilityMatrix> ms;
    for (int m = 0; m < 3; ++m) {
      rows.push_back(oracle::random_distribution(rng));
      ms.push_back(single_row(rows.back()));
    }
    const auto got = average_vote(ms);
    REQUIRE(index_of(got.labels[0]) == static_cast<std::size_t>(oracle::mean_argmax(rows)));
    double sum = 0;
    for (double v : got.combined.rows[0]) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("weighted average vote") {
  std::vector<ProbabilityMatrix> ms{single_row({0.6, 0.4, 0, 0, 0}), single_row({0.0, 1.0, 0, 0, 0})};
  CHECK(average_vote(ms).labels[0] == Label::GH);
  const std::vector<double> w{9.0, 1.0};
  const auto r = average_vote(ms, w);
  CHECK(r.labels[0] == Label::NH);
  CHECK(r.combined.rows[0][0] == doctest::Approx(0.54));
}

TEST_CASE("vote inputs are validated") {
  std::vector<ProbabilityMatrix> one{single_row({1, 0, 0, 0, 0})};
  CHECK_THROWS_AS(majority_vote(one), ValidationError);
  auto other = single_row({1, 0, 0, 0, 0});
  other.ids = {"b"};
  std::vector<ProbabilityMatrix> misaligned{single_row({1, 0, 0, 0, 0}), other};
  CHECK_THROWS_AS(majority_vote(misaligned), ValidationError);
  CHECK_THROWS_AS(average_vote(misaligned), ValidationError);
  VoteConfig bad{VoteMode::average, {1.0, -1.0}};
  CHECK_THROWS_AS(bad.validate(2), ValidationError);
  VoteConfig wrong_count{VoteMode::average, {1.0}};
  CHECK_THROWS_AS(wrong_count.validate(2), ValidationError);
  CHECK_THROWS_AS(parse_vote_mode("plurality"), ValidationError);
}

TEST_CASE("vote shares sum to one") {
  std::vector<ProbabilityMatrix> ms{single_row({0.6, 0.4, 0, 0, 0}), single_row({0.0, 1.0, 0, 0, 0}),
                                    single_row({0.0, 0.9, 0.1, 0, 0})};
  const auto s = vote_shares(ms);
  CHECK(s.rows[0][0] == doctest::Approx(1.0 / 3));
  CHECK(s.rows[0][1] == doctest::Approx(2.0 / 3));
  s.validate();
}
