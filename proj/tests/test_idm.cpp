#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "tsim/idm.hpp"

using namespace tsim;

TEST_CASE("free flow at desired speed gives ~zero acceleration") {
  IdmParams p;
  const double a = idm_acceleration(3.0, 1e6, 0.0, p, 1.0);
  CHECK(std::abs(a) < 1e-3);
}

TEST_CASE("standing start on open road accelerates at max") {
  IdmParams p;
  const double a = idm_acceleration(0.0, 1e6, 0.0, p, 1.0);
  CHECK(a == doctest::Approx(1.5).epsilon(1e-9));
}

TEST_CASE("gap equal to desired gap at desired speed brakes at -a_max") {
  IdmParams p;
  // At v=3, dv=0: s* = 2 + 3*1 = 5. With gap = s*: 1 - 1 - 1 = -1.
  const double s_star = idm_desired_gap(3.0, 0.0, p);
  CHECK(s_star == doctest::Approx(5.0));
  const double a = idm_acceleration(3.0, s_star, 0.0, p, 1.0);
  CHECK(a == doctest::Approx(-1.5));
}

TEST_CASE("acceleration clamped to emergency decel") {
  IdmParams p;
  const double a = idm_acceleration(3.0, 0.5, 2.0, p, 1.0);
  CHECK(a == doctest::Approx(-p.emergency_decel));
}

TEST_CASE("gap factor scales the desired gap") {
  IdmParams p;
  // Shrunken desired gap means less braking at the same physical gap.
  const double tight = idm_acceleration(3.0, 5.0, 0.0, p, 0.5);
  const double normal = idm_acceleration(3.0, 5.0, 0.0, p, 1.0);
  CHECK(tight > normal);
  CHECK(tight == doctest::Approx(1.5 * (1.0 - 1.0 - 0.25)));
}

TEST_CASE("non-finite and out-of-domain inputs are rejected") {
  IdmParams p;
  CHECK_THROWS_AS(idm_acceleration(std::nan(""), 10.0, 0.0, p, 1.0),
                  std::domain_error);
  CHECK_THROWS_AS(idm_acceleration(1.0, std::numeric_limits<double>::infinity(),
                                   0.0, p, 1.0),
                  std::domain_error);
  CHECK_THROWS_AS(idm_acceleration(1.0, 0.0, 0.0, p, 1.0), std::domain_error);
  CHECK_THROWS_AS(idm_acceleration(-0.5, 10.0, 0.0, p, 1.0), std::domain_error);
}

TEST_CASE("equilibrium gap solves zero acceleration") {
  IdmParams p;
  for (double v : {1.0, 2.0, 2.5, 2.9}) {
    const double gap = idm_equilibrium_gap(v, p);
    const double a = idm_acceleration(v, gap, 0.0, p, 1.0);
    CHECK(std::abs(a) < 1e-12);
  }
}
