#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "spinsq/errors.hpp"
#include "spinsq/experiments.hpp"

using namespace spinsq;
using std::numbers::pi;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string all_csv(const ExperimentResult& r) {
  std::string out;
  for (const auto& t : r.tables) out += t.name + "\n" + t.to_csv();
  return out;
}

}  // namespace

TEST_CASE("csv formatting") {
  Table t{"x", {"a", "b,c", "d"}, {}};
  t.add_row({0.1, std::int64_t{3}, std::string("he said \"hi\"")});
  CHECK(t.to_csv() == "a,\"b,c\",d\r\n0.10000000000000001,3,\"he said \"\"hi\"\"\"\r\n");
  CHECK_THROWS_AS(t.add_row({1.0}), Error);
  CHECK(t.number(0, "b,c") == 3.0);
}

TEST_CASE("linspace and log-log fit") {
  const auto v = linspace(0.0, pi, 33);
  CHECK(v.size() == 33);
  CHECK(v.front() == 0.0);
  CHECK(v.back() == pi);
  std::vector<double> x{10, 20, 40, 80}, y;
  for (double n : x) y.push_back(3.0 * std::pow(n, -2.0 / 3.0));
  const auto [slope, intercept] = log_log_fit(x, y);
  CHECK(slope == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
  CHECK(std::exp(intercept) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("write_result produces descriptor and tables") {
  const auto dir = std::filesystem::temp_directory_path() / "spinsq_test_write";
  std::filesystem::remove_all(dir);
  const ExperimentResult r = evolve_experiment(make_model(1.0, 0.2, 10), {pi / 2, pi / 2});
  write_result(r, {{"hello", 1}}, dir);
  CHECK(std::filesystem::exists(dir / "descriptor.json"));
  CHECK(slurp(dir / "trace.csv") == r.table("trace").to_csv());
  CHECK(nlohmann::json::parse(slurp(dir / "descriptor.json"))["hello"] == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("initial state sweep is independent of worker count") {
  const LMGModel m = make_model(1.0, 0.25, 12);
  const auto th = linspace(0.0, pi, 7);
  const auto ph = linspace(0.0, pi, 5);
  HarnessOptions one, three;
  three.workers = 3;
  const auto a = sweep_initial_state(m, th, ph, one);
  const auto b = sweep_initial_state(m, th, ph, three);
  CHECK(all_csv(a) == all_csv(b));
  CHECK(a.xi2_min < 1.0);
}

TEST_CASE("stationary initial states are flagged as unsqueezed") {
  // Under Sx^2 alone the x pole is an eigenstate.
  const auto a = sweep_initial_state(make_model(1.0, 0.0, 12), linspace(0.0, pi, 3),
                                     linspace(0.0, pi, 3));
  const Table& g = a.table("grid");
  bool found_flat = false;
  for (std::size_t i = 0; i < g.rows.size(); ++i) {
    if (g.number(i, "squeezed") == 0.0) {
      found_flat = true;
      CHECK(g.number(i, "xi2_min") == 1.0);
    }
  }
  CHECK(found_flat);
}

TEST_CASE("gamma sweep is monotone") {
  const auto r = sweep_gamma(100, linspace(0.0, 0.5, 6));
  CHECK(r.metadata["xi2_min_nonincreasing_in_gamma"] == true);
  CHECK(r.metadata["t_min_nonincreasing_in_gamma"] == true);
  CHECK_THROWS_AS(sweep_gamma(30, {0.6}), Error);
}

TEST_CASE("pulsed minimum converges as the step shrinks") {
  const LMGModel m = make_model(1.0, 0.1, 30);
  const PulseDesign d = design(m, Axis::Z);
  Propagator prop;
  const DickeSpace space(30);
  const double target =
      minimize_over_time(effective_hamiltonian(d, space), coherent_state(space, d.initial_angles()),
                         1.0 / 30.0, {}, prop)
          .xi2_min;
  double prev = INFINITY;
  for (double step : {0.2, 0.1, 0.05, 0.025}) {
    HarnessOptions o;
    o.max_step = step;
    const auto tr = pulsed_trace(m, d, 7.0, o, prop);
    const double err = std::abs(to_db(tr.xi2_min) - to_db(target));
    CAPTURE(step);
    CHECK(err <= prev + 1e-9);
    prev = err;
  }
  CHECK(prev < 0.1);
}

TEST_CASE("compare_pulsed tables") {
  HarnessOptions o;
  o.max_step = 0.1;
  const auto r = compare_pulsed(make_model(1.0, 0.1, 20), Axis::Z, o);
  const Table& t = r.table("traces");
  CHECK(t.columns.size() == 6);
  CHECK(t.rows.size() > 10);
  CHECK(r.table("minima").rows.size() == 4);
  CHECK(r.table("designs").rows.size() == 2);
  CHECK(r.xi2_min < 1.0);
}

TEST_CASE("scaling study slopes") {
  HarnessOptions o;
  const auto r = scaling_study(0.1, {20, 40, 80}, {Variant::OAT, Variant::TAT}, 1.0, Axis::Z, o);
  const Table& s = r.table("slopes");
  CHECK(s.rows.size() == 2);
  CHECK(s.number(0, "slope") < -0.5);
  CHECK(s.number(1, "slope") < s.number(0, "slope"));
  CHECK_THROWS_AS(scaling_study(0.1, {40, 20}, {Variant::OAT}), Error);
  CHECK(parse_variant("pulsed") == Variant::Pulsed);
}

TEST_CASE("noise validation") {
  CHECK_THROWS_AS(validate({NoiseChannel::AtomNumber, 0.1, NoiseScope::PerPulse}), Error);
  CHECK_THROWS_AS(validate({NoiseChannel::PulseArea, -0.1, NoiseScope::PerPulse}), Error);
  CHECK_NOTHROW(validate({NoiseChannel::Chi, 0.1, NoiseScope::PerSegment}));
  CHECK(parse_noise_channel("pulse_phase") == NoiseChannel::PulsePhase);
  CHECK(default_scope(NoiseChannel::PulseSeparation) == NoiseScope::PerSegment);
  CHECK(stream_seed(1, 2, 3) != stream_seed(1, 2, 4));
  CHECK(stream_seed(1, 2, 3) == stream_seed(1, 2, 3));
}

TEST_CASE("noise Monte Carlo") {
  const LMGModel m = make_model(1.0, 0.1, 16);
  HarnessOptions o;
  o.max_step = 0.1;

  SUBCASE("zero noise reproduces the noiseless run") {
    const auto r = noise_monte_carlo(m, Axis::Z, {{NoiseChannel::PulseArea, 0.0, NoiseScope::PerPulse}},
                                     3, 7, o);
    const Table& s = r.table("summary");
    CHECK(s.number(0, "relative_db_deviation") == 0.0);
    const Table& tr = r.table("traces");
    for (std::size_t k = 0; k < tr.rows.size(); ++k) {
      CHECK(tr.number(k, "run_000") == tr.number(k, "noiseless"));
    }
  }

  SUBCASE("deterministic and worker independent") {
    const std::vector<NoiseSpec> noise{{NoiseChannel::PulseSeparation, 0.1, NoiseScope::PerSegment},
                                       {NoiseChannel::PulsePhase, 0.01, NoiseScope::PerPulse}};
    HarnessOptions o2 = o;
    o2.workers = 2;
    CHECK(all_csv(noise_monte_carlo(m, Axis::Z, noise, 4, 11, o)) ==
          all_csv(noise_monte_carlo(m, Axis::Z, noise, 4, 11, o2)));
    CHECK(all_csv(noise_monte_carlo(m, Axis::Z, noise, 4, 11, o)) !=
          all_csv(noise_monte_carlo(m, Axis::Z, noise, 4, 12, o)));
  }

  SUBCASE("channels draw from separate streams") {
    // Adding a channel leaves the draws of another untouched: the run's
    // chi with chi noise alone equals the chi with chi plus gamma noise.
    const NoiseSpec chi{NoiseChannel::Chi, 0.05, NoiseScope::PerRun};
    const NoiseSpec gamma{NoiseChannel::Gamma, 0.05, NoiseScope::PerRun};
    const auto a = noise_monte_carlo(m, Axis::Z, {chi}, 3, 5, o).table("runs");
    const auto b = noise_monte_carlo(m, Axis::Z, {gamma, chi}, 3, 5, o).table("runs");
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(a.number(i, "chi") == b.number(i, "chi"));
      CHECK(a.number(i, "gamma") == 0.1);
      CHECK(b.number(i, "gamma") != 0.1);
    }
  }

  SUBCASE("atom number is rounded and at least one") {
    const auto r = noise_monte_carlo(m, Axis::Z, {{NoiseChannel::AtomNumber, 0.2, NoiseScope::PerRun}},
                                     6, 3, o);
    const Table& runs = r.table("runs");
    bool changed = false;
    for (std::size_t i = 0; i < runs.rows.size(); ++i) {
      const double n = runs.number(i, "n_spins");
      CHECK(n >= 1.0);
      CHECK(n == std::round(n));
      changed = changed || n != 16.0;
    }
    CHECK(changed);
  }

  CHECK_THROWS_AS(noise_monte_carlo(m, Axis::Z, {}, 0, 1, o), Error);
  CHECK_THROWS_AS(noise_monte_carlo(m, Axis::X, {}, 1, 1, o), Error);
}
