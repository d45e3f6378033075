#include <catch_amalgamated.hpp>
#include <sstream>

#include "dtreg/error.hpp"
#include "dtreg/sample.hpp"
#include "support.hpp"

using namespace dtreg;
using testing_support::kInf;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

TEST_CASE("D2 residuals at beta = 1") {
  const auto s = validate_sample(testing_support::d2_records());
  REQUIRE(s.size() == 2);
  REQUIRE(s.dim() == 1);
  const double beta[] = {1.0};
  const auto f = residuals(s, beta);
  CHECK(f.e == std::vector<double>{1.0, 1.0});
  CHECK(f.lb == std::vector<double>{0.5, 0.8});
  CHECK_THAT(f.rb[0], WithinAbs(1.5, 1e-15));
  CHECK_THAT(f.rb[1], WithinAbs(1.4, 1e-15));
}

TEST_CASE("zero coefficients leave the data unchanged") {
  dtreg::Rng rng = make_stream(3);
  const auto s = validate_sample(testing_support::random_records(20, 3, rng));
  const std::vector<double> zero(3, 0.0);
  const auto f = residuals(s, zero);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(f.e[i] == s[i].y);
    CHECK(f.lb[i] == s[i].l);
    CHECK(f.rb[i] == s[i].r);
  }
}

TEST_CASE("residual shift and order properties", "[property]") {
  dtreg::Rng rng = make_stream(4);
  for (int rep = 0; rep < 200; ++rep) {
    const auto s = validate_sample(testing_support::random_records(10, 2, rng));
    const auto beta = testing_support::random_beta(2, rng, 5.0);
    const auto f = residuals(s, beta);
    const auto base = residuals(s, std::vector<double>{0.0, 0.0});
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double shift = beta[0] * s[i].x[0] + beta[1] * s[i].x[1];
      CHECK_THAT(f.e[i], WithinAbs(base.e[i] - shift, 1e-12));
      if (std::isfinite(base.lb[i])) CHECK_THAT(f.lb[i], WithinAbs(base.lb[i] - shift, 1e-12));
      CHECK(f.lb[i] < f.e[i]);
      CHECK(f.e[i] < f.rb[i]);
    }
  }
}

TEST_CASE("residuals reject a coefficient of the wrong length") {
  const auto s = validate_sample(testing_support::d2_records());
  CHECK_THROWS_AS(residuals(s, std::vector<double>{1.0, 2.0}), InputError);
}

TEST_CASE("validation accepts open bounds and rejects violations") {
  CHECK_NOTHROW(validate_sample({{3.0, {1.0}, -kInf, kInf}}));
  CHECK_THROWS_AS(validate_sample({}), InputError);

  try {
    validate_sample({{0.0, {1.0}, -1.0, 1.0}, {0.5, {2.0}, 0.5, 1.0}});
    FAIL("expected rejection");
  } catch (const InputError& e) {
    CHECK_THAT(e.what(), ContainsSubstring("response at left bound"));
    REQUIRE(e.index().has_value());
    CHECK(*e.index() == 1);
  }
  CHECK_THROWS_AS(validate_sample({{1.0, {1.0}, 0.0, 1.0}}), InputError);
  CHECK_THROWS_AS(validate_sample({{0.0, {1.0}, -1, 1}, {0.0, {1.0, 2.0}, -1, 1}}), InputError);
  CHECK_THROWS_AS(validate_sample({{kInf, {1.0}, -kInf, kInf}}), InputError);
  CHECK_THROWS_AS(validate_sample({{0.0, {std::nan("")}, -1, 1}}), InputError);
}

TEST_CASE("CSV round trip keeps every bit") {
  dtreg::Rng rng = make_stream(5);
  const auto s = validate_sample(testing_support::random_records(15, 2, rng, 0.3));
  std::stringstream buf;
  write_sample_csv(buf, s);
  const auto back = read_sample_csv(buf);
  REQUIRE(back.size() == s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(back[i].y == s[i].y);
    CHECK(back[i].l == s[i].l);
    CHECK(back[i].r == s[i].r);
    CHECK(back[i].x == s[i].x);
  }
}

TEST_CASE("CSV errors carry line numbers") {
  std::istringstream bad_header("a,b,c\n1,2,3\n");
  CHECK_THROWS_AS(read_sample_csv(bad_header), InputError);

  std::istringstream bad_row("y,l,r,x1\n1,0,2,0\n1,0,2,zz\n");
  try {
    read_sample_csv(bad_row);
    FAIL("expected rejection");
  } catch (const InputError& e) {
    CHECK(e.index() == std::optional<std::size_t>(3));
    CHECK_THAT(e.what(), ContainsSubstring("line 3"));
  }
  std::istringstream short_row("y,l,r,x1\n1,0,2\n");
  CHECK_THROWS_AS(read_sample_csv(short_row), InputError);

  std::istringstream open("y,l,r,x1\n1,-inf,inf,0.5\n");
  const auto s = read_sample_csv(open);
  CHECK(s.untruncated());
}

TEST_CASE("dropping truncation opens every bound") {
  const auto s = drop_truncation(validate_sample(testing_support::d2_records()));
  CHECK(s.untruncated());
  CHECK(s[0].l == -kInf);
  CHECK(s[1].r == kInf);
}
