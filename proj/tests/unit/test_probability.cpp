#include <doctest.h>

#include "arhate/error.hpp"
#include "arhate/probability.hpp"
#include "oracles.hpp"

using namespace arhate;

TEST_CASE("probability matrix validation") {
  ProbabilityMatrix m{{"a", "b"}, {ProbRow{0.2, 0.2, 0.2, 0.2, 0.2}, ProbRow{1, 0, 0, 0, 0}}};
  CHECK_NOTHROW(m.validate());
  m.rows[1][1] = 0.1;
  CHECK_THROWS_AS(m.validate(), ValidationError);
  m.rows[1] = ProbRow{1.5, -0.5, 0, 0, 0};
  CHECK_THROWS_AS(m.validate(), ValidationError);
  m.rows.pop_back();
  CHECK_THROWS_AS(m.validate(), ValidationError);
}

TEST_CASE("argmax picks the first maximum") {
  CHECK(argmax(ProbRow{0.2, 0.2, 0.2, 0.2, 0.2}) == Label::NH);
  CHECK(argmax(ProbRow{0.1, 0.3, 0.3, 0.2, 0.1}) == Label::GH);
  CHECK(argmax(ProbRow{0, 0, 0, 0, 1}) == Label::Se);
}

TEST_CASE("probability cache CSV round-trips exactly") {
  testing::TempDir dir("prob");
  ProbabilityMatrix m{{"x,1", "y"}, {ProbRow{0.1, 0.2, 0.3, 0.15, 0.25}, ProbRow{1.0 / 3, 1.0 / 3, 1.0 / 3, 0, 0}}};
  write_probability_csv(dir / "p.csv", m);
  CHECK(testing::read_file(dir / "p.csv").rfind("id,p_NH,p_GH,p_Re,p_Ra,p_Se\n", 0) == 0);
  const auto back = read_probability_csv(dir / "p.csv");
  CHECK(back.ids == m.ids);
  CHECK(back.rows == m.rows);
}

TEST_CASE("malformed cache files are rejected") {
  testing::TempDir dir("prob-bad");
  testing::write_file(dir / "a.csv", "id,p_NH,p_GH,p_Re,p_Ra\nx,1,0,0,0\n");
  CHECK_THROWS_AS(read_probability_csv(dir / "a.csv"), ValidationError);
  testing::write_file(dir / "b.csv", "id,p_NH,p_GH,p_Re,p_Ra,p_Se\nx,1,0,0,zero,0\n");
  CHECK_THROWS_AS(read_probability_csv(dir / "b.csv"), ValidationError);
  testing::write_file(dir / "c.csv", "id,p_NH,p_GH,p_Re,p_Ra,p_Se\nx,0.5,0,0,0,0\n");
  CHECK_THROWS_AS(read_probability_csv(dir / "c.csv"), ValidationError);
}
